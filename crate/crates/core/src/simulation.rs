//! Simulated users, response noise, the multi-user experiment runner and
//! MRR@k with normal-approximation confidence intervals.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::Ranking;
use crate::catalog::ItemCatalog;
use crate::dialogue::{Providers, Query, Session, SessionConfig};
use crate::entailment::feature_match;
use crate::error::{invalid, Error, Result};
use crate::language::LanguageProvider;
use crate::querygen::Answer;
use crate::templates::{render, Templates};
use crate::text::tokens;

#[derive(Clone)]
pub enum Responder {
    /// Answers from the target item's ground-truth features.
    Oracle,
    /// Asks a language model to role-play a user who likes the target.
    Llm(Arc<dyn LanguageProvider>),
}

impl std::fmt::Debug for Responder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Responder::Oracle => f.write_str("Oracle"),
            Responder::Llm(_) => f.write_str("Llm"),
        }
    }
}

/// A simulated user who likes exactly one item.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    pub target: usize,
    pub responder: Responder,
}

impl SimulatedUser {
    pub fn oracle(target: usize) -> Self {
        Self {
            target,
            responder: Responder::Oracle,
        }
    }

    pub fn llm(target: usize, provider: Arc<dyn LanguageProvider>) -> Self {
        Self {
            target,
            responder: Responder::Llm(provider),
        }
    }
}

/// `n_users` users whose targets cycle through the catalog: user `u` likes item `u mod N`.
pub fn round_robin_users(n_users: usize, n_items: usize, responder: Responder) -> Vec<SimulatedUser> {
    (0..n_users)
        .map(|u| SimulatedUser {
            target: u % n_items.max(1),
            responder: responder.clone(),
        })
        .collect()
}

/// With probability `level` a response is replaced by a fair coin flip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub level: f64,
}

impl NoiseModel {
    pub fn new(level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(invalid(format!("noise level must lie in [0, 1], got {level}")));
        }
        Ok(Self { level })
    }

    pub fn none() -> Self {
        Self { level: 0.0 }
    }

    /// Always draws one uniform; draws a coin only when the answer is replaced.
    pub fn apply<R: Rng + ?Sized>(&self, answer: Answer, rng: &mut R) -> Answer {
        if rng.random::<f64>() < self.level {
            if rng.random_bool(0.5) {
                Answer::Yes
            } else {
                Answer::No
            }
        } else {
            answer
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// First standalone "yes" or "no" in `text`, ignoring case; "no" if neither.
pub fn normalize_answer(text: &str) -> Answer {
    for t in tokens(text) {
        match t.as_str() {
            "yes" => return Answer::Yes,
            "no" => return Answer::No,
            _ => {}
        }
    }
    Answer::No
}

fn oracle_answer(features: &[String], query: &Query) -> Answer {
    let yes = match &query.aspect {
        Some(aspect) => feature_match(features, aspect.as_str()),
        // Free-form baseline questions: yes if they mention any target feature.
        None => {
            let words: Vec<String> = tokens(&query.text).collect();
            features.iter().any(|f| {
                let ft: Vec<String> = tokens(f).collect();
                !ft.is_empty() && words.windows(ft.len()).any(|w| w == ft.as_slice())
            })
        }
    };
    if yes {
        Answer::Yes
    } else {
        Answer::No
    }
}

/// The simulated user's (possibly noisy) answer to `query`.
///
/// An LLM responder whose provider fails is retried once; a second failure
/// is recorded as "no".
pub fn simulate_response<R: Rng + ?Sized>(
    user: &SimulatedUser,
    catalog: &ItemCatalog,
    query: &Query,
    noise: &NoiseModel,
    templates: &Templates,
    rng: &mut R,
) -> Result<Answer> {
    let target = catalog
        .get(user.target)
        .ok_or_else(|| invalid(format!("target {} is outside the catalog", user.target)))?;
    let truthful = match &user.responder {
        Responder::Oracle => oracle_answer(target.features(), query),
        Responder::Llm(provider) => {
            let prompt = render(
                &templates.user_response,
                &[("description", target.description.trim()), ("query", &query.text)],
            );
            match provider.complete(&prompt).or_else(|_| provider.complete(&prompt)) {
                Ok(text) => normalize_answer(&text),
                Err(_) => Answer::No,
            }
        }
    };
    Ok(noise.apply(truthful, rng))
}

/// `1/r` if `target` is at rank `r <= k`, else 0.
pub fn mrr_at_k(ranking: &Ranking, target: usize, k: usize) -> f64 {
    match ranking.position(target) {
        Some(r) if r <= k => 1.0 / r as f64,
        _ => 0.0,
    }
}

const Z_95: f64 = 1.959_963_984_540_054;

/// Normal-approximation 95% interval for the mean, clamped to `[0, 1]`.
pub fn confidence_interval(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(invalid("a confidence interval needs at least two samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_95 * (var / n).sqrt();
    Ok(((mean - half).clamp(0.0, 1.0), (mean + half).clamp(0.0, 1.0)))
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`: `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Stream index reserved for a user's response-noise generator.
const NOISE_STREAM: u64 = u64::MAX;

/// One user's measurement at one turn. Turn 0 is the cold-start ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub reciprocal_rank: f64,
    pub selected_item: Option<usize>,
    pub aspect: Option<String>,
    pub response: Option<Answer>,
    /// Posterior mean of the target after this turn (PEBOL only).
    pub target_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRun {
    pub user: usize,
    pub target: usize,
    pub records: Vec<TurnRecord>,
    /// Turn from which no item had an unused aspect; later turns repeat the
    /// last ranking.
    pub exhausted_at: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnSummary {
    pub turn: usize,
    pub mean: f64,
    pub ci_lb: f64,
    pub ci_ub: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: SessionConfig,
    pub noise: NoiseModel,
    pub users: Vec<UserRun>,
    pub per_turn: Vec<TurnSummary>,
    pub failed_users: usize,
}

impl ExperimentResult {
    pub fn summary(&self, turn: usize) -> Option<&TurnSummary> {
        self.per_turn.iter().find(|s| s.turn == turn)
    }

    /// Reciprocal ranks of the successful users at `turn`.
    pub fn reciprocal_ranks(&self, turn: usize) -> Vec<f64> {
        self.users
            .iter()
            .filter(|u| u.error.is_none())
            .filter_map(|u| u.records.iter().find(|r| r.turn == turn))
            .map(|r| r.reciprocal_rank)
            .collect()
    }
}

fn target_mean(session: &Session, target: usize) -> Option<f64> {
    session.belief().and_then(|b| b.get(target)).map(|p| p.mean())
}

fn run_user(
    user_index: usize,
    user: &SimulatedUser,
    catalog: &Arc<ItemCatalog>,
    config: &SessionConfig,
    noise: &NoiseModel,
    providers: &Providers,
) -> UserRun {
    let seed = derive_seed(config.seed, user_index as u64);
    let mut run = UserRun {
        user: user_index,
        target: user.target,
        records: Vec::with_capacity(config.max_turns + 1),
        exhausted_at: None,
        error: None,
    };
    if let Err(e) = run_turns(&mut run, seed, user, catalog, config, noise, providers) {
        run.error = Some(e.to_string());
    }
    run
}

fn run_turns(
    run: &mut UserRun,
    seed: u64,
    user: &SimulatedUser,
    catalog: &Arc<ItemCatalog>,
    config: &SessionConfig,
    noise: &NoiseModel,
    providers: &Providers,
) -> Result<()> {
    if user.target >= catalog.len() {
        return Err(invalid(format!("target {} is outside the catalog", user.target)));
    }
    let session_config = SessionConfig {
        seed,
        ..config.clone()
    };
    let mut session = Session::start(session_config, catalog.clone(), providers.clone())?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, NOISE_STREAM));
    let k = config.top_k;

    let cold = session.recommendations(k).unwrap_or_default();
    run.records.push(TurnRecord {
        turn: 0,
        reciprocal_rank: mrr_at_k(&cold, user.target, k),
        selected_item: None,
        aspect: None,
        response: None,
        target_mean: target_mean(&session, user.target),
    });

    for t in 1..=config.max_turns {
        let query = match session.next_query() {
            Ok(q) => q,
            Err(Error::AllAspectsExhausted) => {
                run.exhausted_at = Some(t);
                let last = run.records.last().expect("turn 0 is recorded").clone();
                for rest in t..=config.max_turns {
                    run.records.push(TurnRecord {
                        turn: rest,
                        selected_item: None,
                        aspect: None,
                        response: None,
                        ..last.clone()
                    });
                }
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let answer = simulate_response(user, catalog, &query, noise, &providers.templates, &mut noise_rng)?;
        let result = session.submit_response(answer)?;
        run.records.push(TurnRecord {
            turn: t,
            reciprocal_rank: mrr_at_k(&result.ranking, user.target, k),
            selected_item: query.selected_item,
            aspect: query.aspect.map(String::from),
            response: Some(answer),
            target_mean: target_mean(&session, user.target),
        });
    }
    Ok(())
}

/// Runs one fresh session per user and aggregates MRR@`top_k` per turn.
///
/// User `u`'s session is seeded with `derive_seed(config.seed, u)`, so results
/// do not depend on the order in which users run. Users whose session fails
/// are reported in `failed_users` and left out of the aggregates.
pub fn run_experiment(
    catalog: Arc<ItemCatalog>,
    users: &[SimulatedUser],
    config: &SessionConfig,
    noise: NoiseModel,
    providers: &Providers,
) -> Result<ExperimentResult> {
    if users.is_empty() {
        return Err(invalid("an experiment needs at least one user"));
    }
    config.validate()?;
    let runs: Vec<UserRun> = users
        .par_iter()
        .enumerate()
        .map(|(u, user)| run_user(u, user, &catalog, config, &noise, providers))
        .collect();

    let ok: Vec<&UserRun> = runs.iter().filter(|r| r.error.is_none()).collect();
    let per_turn = (0..=config.max_turns)
        .map(|turn| {
            let samples: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.records.get(turn))
                .map(|r| r.reciprocal_rank)
                .collect();
            let n = samples.len();
            let mean = if n == 0 { 0.0 } else { samples.iter().sum::<f64>() / n as f64 };
            let (ci_lb, ci_ub) = confidence_interval(&samples).unwrap_or((mean, mean));
            TurnSummary {
                turn,
                mean,
                ci_lb,
                ci_ub,
                n,
            }
        })
        .collect();

    Ok(ExperimentResult {
        config: config.clone(),
        noise,
        failed_users: runs.len() - ok.len(),
        users: runs,
        per_turn,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    user: usize,
    turn: usize,
    reciprocal_rank: f64,
    selected_item: Option<usize>,
    aspect: Option<&'a str>,
    response: Option<&'static str>,
}

/// Writes `per_turn.csv` and `summary.json` into `dir`, creating it if needed.
pub fn write_outputs(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("per_turn.csv"))?;
    for run in &result.users {
        for r in &run.records {
            w.serialize(CsvRow {
                user: run.user,
                turn: r.turn,
                reciprocal_rank: r.reciprocal_rank,
                selected_item: r.selected_item,
                aspect: r.aspect.as_deref(),
                response: r.response.map(Answer::as_str),
            })?;
        }
    }
    w.flush()?;

    let failures: Vec<serde_json::Value> = result
        .users
        .iter()
        .filter_map(|u| {
            u.error
                .as_ref()
                .map(|e| serde_json::json!({"user": u.user, "error": e}))
        })
        .collect();
    let summary = serde_json::json!({
        "config": result.config,
        "noise": result.noise.level,
        "n_users": result.users.len(),
        "failed_users": result.failed_users,
        "failures": failures,
        "per_turn": result.per_turn,
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(())
}
