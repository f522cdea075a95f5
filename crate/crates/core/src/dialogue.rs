//! One elicitation session: query, answer, entailment, posterior update,
//! recommendations, repeated for a fixed number of turns.
//!
//! Sessions are single-writer values. Every random draw comes from the
//! session's own ChaCha stream, seeded from the config, so a session replays
//! bit-for-bit from the same config, catalog, providers and answers.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{rank_top_k, selection_order, Policy, Ranking};
use crate::belief::BeliefState;
use crate::catalog::ItemCatalog;
use crate::entailment::{
    binarize, score_catalog, EntailmentConfig, EntailmentProvider, FeatureOracle,
    DEFAULT_ORACLE_LOGIT,
};
use crate::error::{invalid, Error, Result};
use crate::language::{LanguageProvider, StubLm};
use crate::querygen::{
    build_preference, extract_aspect, generate_query, mono_generate_query, mono_recommend, Answer,
    Aspect, Exchange, PreferenceDescription, DEFAULT_MONO_ITEM_CAP,
};
use crate::templates::Templates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pebol,
    #[serde(rename = "monollm")]
    MonoLlm,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pebol" => Ok(Method::Pebol),
            "monollm" | "mono" => Ok(Method::MonoLlm),
            other => Err(invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// How entailment probabilities enter the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// Round each probability to 0/1, then apply the conjugate update.
    Binary,
    /// Fold the probability in directly with the mean-matched update.
    #[serde(alias = "prob")]
    Probabilistic,
}

impl std::str::FromStr for ObservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "b" => Ok(ObservationMode::Binary),
            "prob" | "probabilistic" | "p" => Ok(ObservationMode::Probabilistic),
            other => Err(invalid(format!("unknown observation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub method: Method,
    pub policy: Policy,
    pub observation_mode: ObservationMode,
    pub nli: EntailmentConfig,
    /// Show (and enforce) previously asked aspects during aspect extraction.
    pub include_history: bool,
    pub max_turns: usize,
    pub top_k: usize,
    pub seed: u64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    /// Largest catalog the baseline accepts in its prompt.
    pub mono_item_cap: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            method: Method::Pebol,
            policy: Policy::default(),
            observation_mode: ObservationMode::Probabilistic,
            nli: EntailmentConfig::default(),
            include_history: true,
            max_turns: 10,
            top_k: 10,
            seed: 0,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            mono_item_cap: DEFAULT_MONO_ITEM_CAP,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_turns == 0 {
            return Err(invalid("max_turns must be at least 1"));
        }
        if self.top_k == 0 {
            return Err(invalid("top_k must be at least 1"));
        }
        Policy::new(self.policy.kind, self.policy.ucb_percentile)?;
        EntailmentConfig::new(self.nli.temperature)?;
        crate::belief::BetaParams::new(self.prior_alpha, self.prior_beta)?;
        Ok(())
    }
}

/// Everything a session needs to talk to the outside world.
#[derive(Clone)]
pub struct Providers {
    pub language: Arc<dyn LanguageProvider>,
    pub entailment: Arc<dyn EntailmentProvider>,
    pub templates: Arc<Templates>,
}

impl Providers {
    pub fn new(
        language: Arc<dyn LanguageProvider>,
        entailment: Arc<dyn EntailmentProvider>,
        templates: Arc<Templates>,
    ) -> Self {
        Self {
            language,
            entailment,
            templates,
        }
    }

    /// [`StubLm`] plus a [`FeatureOracle`] over `catalog` with the default margin.
    pub fn offline(catalog: &ItemCatalog) -> Result<Self> {
        Ok(Self::new(
            Arc::new(StubLm),
            Arc::new(FeatureOracle::from_catalog(catalog, DEFAULT_ORACLE_LOGIT)?),
            Arc::new(Templates::default()),
        ))
    }
}

impl std::fmt::Debug for Providers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Providers").finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ReadyForQuery,
    AwaitingResponse,
    Finished,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::ReadyForQuery => "ready_for_query",
            Phase::AwaitingResponse => "awaiting_response",
            Phase::Finished => "finished",
        }
    }
}

/// A query that has been asked but not yet answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub turn: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_item: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<Aspect>,
}

/// A completed turn. The PEBOL-only fields are `None` for baseline sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_item: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<Aspect>,
    pub query: String,
    pub response: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<PreferenceDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entailments: Option<Vec<f64>>,
    /// Digest of the posterior after this turn's update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnResult {
    pub turn: Turn,
    pub ranking: Ranking,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefRow {
    pub id: String,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub variance: f64,
}

pub struct Session {
    config: SessionConfig,
    catalog: Arc<ItemCatalog>,
    providers: Providers,
    belief: Option<BeliefState>,
    turns: Vec<Turn>,
    pending: Option<Query>,
    rng: ChaCha8Rng,
    phase: Phase,
}

impl Session {
    pub fn start(config: SessionConfig, catalog: Arc<ItemCatalog>, providers: Providers) -> Result<Self> {
        config.validate()?;
        if catalog.is_empty() {
            return Err(invalid("catalog is empty"));
        }
        let belief = match config.method {
            Method::Pebol => Some(BeliefState::init_prior(
                catalog.len(),
                config.prior_alpha,
                config.prior_beta,
            )?),
            Method::MonoLlm => None,
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            catalog,
            providers,
            belief,
            turns: Vec::new(),
            pending: None,
            phase: Phase::ReadyForQuery,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn catalog(&self) -> &Arc<ItemCatalog> {
        &self.catalog
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn pending(&self) -> Option<&Query> {
        self.pending.as_ref()
    }

    /// The posterior, for PEBOL sessions.
    pub fn belief(&self) -> Option<&BeliefState> {
        self.belief.as_ref()
    }

    fn require(&self, phase: Phase) -> Result<()> {
        if self.phase != phase {
            return Err(Error::State {
                phase: self.phase.name(),
            });
        }
        Ok(())
    }

    fn exchanges(&self) -> Vec<Exchange> {
        self.turns
            .iter()
            .map(|t| Exchange {
                query: t.query.clone(),
                answer: t.response,
            })
            .collect()
    }

    /// Produces the next query and moves the session to `awaiting_response`.
    ///
    /// For PEBOL, items are tried in policy order until one still has an
    /// unused aspect; if none does, [`Error::AllAspectsExhausted`] is returned.
    /// On any error the session, including its random stream, is unchanged.
    pub fn next_query(&mut self) -> Result<Query> {
        self.require(Phase::ReadyForQuery)?;
        let turn = self.turns.len() + 1;
        let saved_rng = self.rng.clone();
        let result = match self.config.method {
            Method::Pebol => self.pebol_query(turn),
            Method::MonoLlm => mono_generate_query(
                self.providers.language.as_ref(),
                &self.providers.templates,
                &self.catalog,
                &self.exchanges(),
                self.config.mono_item_cap,
            )
            .map(|text| Query {
                turn,
                text,
                selected_item: None,
                aspect: None,
            }),
        };
        match result {
            Ok(q) => {
                self.pending = Some(q.clone());
                self.phase = Phase::AwaitingResponse;
                Ok(q)
            }
            Err(e) => {
                self.rng = saved_rng;
                Err(e)
            }
        }
    }

    fn pebol_query(&mut self, turn: usize) -> Result<Query> {
        let belief = self.belief.as_ref().expect("PEBOL session has a belief");
        let order = selection_order(belief, &self.config.policy, &mut self.rng)?;
        let history: Vec<Aspect> = self.turns.iter().filter_map(|t| t.aspect.clone()).collect();
        let lm = self.providers.language.as_ref();
        let templates = &self.providers.templates;
        for item in order {
            let description = &self.catalog.items()[item].description;
            match extract_aspect(lm, templates, description, &history, self.config.include_history) {
                Ok(aspect) => {
                    let text = generate_query(lm, templates, &aspect)?;
                    return Ok(Query {
                        turn,
                        text,
                        selected_item: Some(item),
                        aspect: Some(aspect),
                    });
                }
                Err(Error::ExhaustedAspects) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::AllAspectsExhausted)
    }

    /// Folds the user's answer into the posterior and closes the turn.
    ///
    /// An entailment failure aborts the turn with the belief untouched; the
    /// caller may retry with the same answer.
    pub fn submit_response(&mut self, answer: Answer) -> Result<TurnResult> {
        self.require(Phase::AwaitingResponse)?;
        let pending = self.pending.clone().expect("awaiting a response implies a pending query");
        let mut turn = Turn {
            index: pending.turn,
            selected_item: pending.selected_item,
            aspect: pending.aspect.clone(),
            query: pending.text.clone(),
            response: answer,
            preference: None,
            entailments: None,
            belief_digest: None,
        };
        if let (Some(belief), Some(aspect)) = (&self.belief, &pending.aspect) {
            let preference = build_preference(aspect, answer);
            let w = score_catalog(
                self.providers.entailment.as_ref(),
                &self.catalog,
                preference.as_str(),
                &self.config.nli,
            )?;
            let updated = match self.config.observation_mode {
                ObservationMode::Probabilistic => belief.update_probabilistic(&w)?,
                ObservationMode::Binary => {
                    let r = w.iter().map(|&x| binarize(x)).collect::<Result<Vec<_>>>()?;
                    belief.update_binary(&r)?
                }
            };
            turn.belief_digest = Some(updated.digest());
            turn.preference = Some(preference);
            turn.entailments = Some(w);
            self.belief = Some(updated);
        }
        self.turns.push(turn.clone());
        self.pending = None;
        self.phase = if self.turns.len() >= self.config.max_turns {
            Phase::Finished
        } else {
            Phase::ReadyForQuery
        };
        // A baseline whose list cannot be parsed recommends nothing this turn.
        let ranking = self.recommendations(self.config.top_k).unwrap_or_default();
        Ok(TurnResult {
            turn,
            ranking,
            finished: self.phase == Phase::Finished,
        })
    }

    /// Top-`k` recommendations in any phase.
    pub fn recommendations(&self, k: usize) -> Result<Ranking> {
        match &self.belief {
            Some(belief) => rank_top_k(belief, k),
            None => mono_recommend(
                self.providers.language.as_ref(),
                &self.providers.templates,
                &self.catalog,
                &self.exchanges(),
                k,
                self.config.mono_item_cap,
            ),
        }
    }

    /// Per-item posterior statistics in catalog order.
    pub fn belief_snapshot(&self) -> Result<Vec<BeliefRow>> {
        let belief = self
            .belief
            .as_ref()
            .ok_or_else(|| Error::Unsupported("baseline sessions have no belief state".into()))?;
        Ok(self
            .catalog
            .items()
            .iter()
            .zip(belief.params())
            .map(|(item, p)| BeliefRow {
                id: item.id.clone(),
                alpha: p.alpha,
                beta: p.beta,
                mean: p.mean(),
                variance: p.variance(),
            })
            .collect())
    }

    pub fn export(&self) -> SessionExport {
        SessionExport {
            format: EXPORT_FORMAT.to_string(),
            config: self.config.clone(),
            items: self.catalog.items().iter().map(|i| i.id.clone()).collect(),
            phase: self.phase,
            turns: self.turns.clone(),
            pending: self.pending.clone(),
            belief: self.belief.clone(),
            rng_word_pos: self.rng.get_word_pos().to_string(),
        }
    }

    /// Rebuilds a session from an export against the same catalog.
    pub fn import(export: SessionExport, catalog: Arc<ItemCatalog>, providers: Providers) -> Result<Self> {
        if export.format != EXPORT_FORMAT {
            return Err(Error::Validation(format!("unknown export format {:?}", export.format)));
        }
        export.config.validate()?;
        let ids: Vec<&str> = catalog.items().iter().map(|i| i.id.as_str()).collect();
        if export.items.iter().map(String::as_str).ne(ids.iter().copied()) {
            return Err(Error::Validation("export was taken against a different catalog".into()));
        }
        match (&export.belief, export.config.method) {
            (Some(b), Method::Pebol) if b.len() == catalog.len() => {
                BeliefState::from_params(b.params().to_vec())?;
            }
            (None, Method::MonoLlm) => {}
            _ => return Err(Error::Validation("belief does not match method or catalog".into())),
        }
        if (export.phase == Phase::AwaitingResponse) != export.pending.is_some() {
            return Err(Error::Validation("pending query does not match phase".into()));
        }
        let word_pos: u128 = export
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Validation("bad random stream position".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(export.config.seed);
        rng.set_word_pos(word_pos);
        Ok(Self {
            config: export.config,
            catalog,
            providers,
            belief: export.belief,
            turns: export.turns,
            pending: export.pending,
            rng,
            phase: export.phase,
        })
    }
}

pub const EXPORT_FORMAT: &str = "pebol-session/1";

/// JSON document capturing a session for persistence or UI reload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub format: String,
    pub config: SessionConfig,
    /// Catalog item ids, in index order.
    pub items: Vec<String>,
    pub phase: Phase,
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub pending: Option<Query>,
    #[serde(default)]
    pub belief: Option<BeliefState>,
    /// Position in the session's random stream, as a decimal string.
    pub rng_word_pos: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::PolicyKind;
    use crate::catalog::{synth_binary_code_catalog, Item};
    use crate::language::STUB_FIRST_QUESTION;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn two_items() -> Arc<ItemCatalog> {
        Arc::new(
            ItemCatalog::new(vec![
                Item::new("lion", "animated family film").with_features(["animated"]),
                Item::new("titanic", "romantic disaster epic").with_features(["romantic"]),
            ])
            .unwrap(),
        )
    }

    fn cfg(policy: Policy, mode: ObservationMode) -> SessionConfig {
        SessionConfig {
            policy,
            observation_mode: mode,
            ..SessionConfig::default()
        }
    }

    fn session(catalog: Arc<ItemCatalog>, config: SessionConfig) -> Session {
        let providers = Providers::offline(&catalog).unwrap();
        Session::start(config, catalog, providers).unwrap()
    }

    #[test]
    fn start_validates() {
        let c = two_items();
        let s = session(c.clone(), SessionConfig { seed: 7, ..Default::default() });
        assert_eq!(s.belief().unwrap(), &BeliefState::uniform(2).unwrap());
        assert!(s.turns().is_empty());
        assert_eq!(s.phase(), Phase::ReadyForQuery);

        let p = Providers::offline(&c).unwrap();
        let bad = SessionConfig { max_turns: 0, ..Default::default() };
        assert!(matches!(Session::start(bad, c.clone(), p.clone()), Err(Error::InvalidArgument(_))));
        let bad = SessionConfig { top_k: 0, ..Default::default() };
        assert!(Session::start(bad, c, p).is_err());
    }

    #[test]
    fn same_seed_same_first_query() {
        let c = Arc::new(synth_binary_code_catalog(20, 5, 1).unwrap());
        let q1 = session(c.clone(), SessionConfig { seed: 3, ..Default::default() }).next_query().unwrap();
        let q2 = session(c, SessionConfig { seed: 3, ..Default::default() }).next_query().unwrap();
        assert_eq!(q1, q2);
    }

    #[test]
    fn greedy_cold_start_picks_item_zero() {
        let mut s = session(two_items(), cfg(Policy::greedy(), ObservationMode::Probabilistic));
        let q = s.next_query().unwrap();
        assert_eq!(q.selected_item, Some(0));
        assert_eq!(q.text, "Do you like animated?");
        assert_eq!(s.phase(), Phase::AwaitingResponse);
        assert!(matches!(s.next_query(), Err(Error::State { phase: "awaiting_response" })));
    }

    #[test]
    fn greedy_follows_the_best_belief() {
        let c = Arc::new(
            ItemCatalog::new(vec![
                Item::new("a", "alpha").with_features(["alpha"]),
                Item::new("b", "beta").with_features(["beta"]),
                Item::new("c", "gamma").with_features(["gamma"]),
            ])
            .unwrap(),
        );
        let mut s = session(c.clone(), cfg(Policy::greedy(), ObservationMode::Probabilistic));
        let mut export = s.export();
        let mut params = BeliefState::uniform(3).unwrap().params().to_vec();
        params[2] = crate::belief::BetaParams::new(5.0, 1.0).unwrap();
        export.belief = Some(BeliefState::from_params(params).unwrap());
        s = Session::import(export, c.clone(), Providers::offline(&c).unwrap()).unwrap();
        let q = s.next_query().unwrap();
        assert_eq!(q.selected_item, Some(2));
        assert_eq!(q.aspect.unwrap().as_str(), "gamma");
    }

    #[test]
    fn probabilistic_yes_and_no() {
        let s10 = sigmoid(10.0);
        for (answer, expect0) in [(Answer::Yes, s10), (Answer::No, 1.0 - s10)] {
            let mut s = session(two_items(), cfg(Policy::greedy(), ObservationMode::Probabilistic));
            s.next_query().unwrap();
            let r = s.submit_response(answer).unwrap();
            let b = s.belief().unwrap().params();
            assert!((b[0].alpha - (1.0 + expect0)).abs() < 1e-12);
            assert!((b[0].beta - (2.0 - expect0)).abs() < 1e-12);
            assert!((b[1].alpha - (2.0 - expect0)).abs() < 1e-12);
            assert!((b[1].beta - (1.0 + expect0)).abs() < 1e-12);
            assert_eq!(r.turn.index, 1);
            assert_eq!(r.turn.preference.unwrap().as_str(), if answer == Answer::Yes { "animated" } else { "not animated" });
        }
    }

    #[test]
    fn binary_mode_is_exact() {
        let mut s = session(two_items(), cfg(Policy::greedy(), ObservationMode::Binary));
        s.next_query().unwrap();
        s.submit_response(Answer::Yes).unwrap();
        let b = s.belief().unwrap().params();
        assert_eq!((b[0].alpha, b[0].beta), (2.0, 1.0));
        assert_eq!((b[1].alpha, b[1].beta), (1.0, 2.0));
        assert_eq!(s.recommendations(1).unwrap().indices(), vec![0]);
        let snap = s.belief_snapshot().unwrap();
        assert_eq!(snap[0].alpha, 2.0);
        assert!((snap[0].mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((snap[0].variance - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn fresh_recommendations_and_snapshot() {
        let c = Arc::new(synth_binary_code_catalog(3, 2, 0).unwrap());
        let s = session(c, SessionConfig::default());
        assert_eq!(s.recommendations(10).unwrap().indices(), vec![0, 1, 2]);
        for row in s.belief_snapshot().unwrap() {
            assert_eq!((row.alpha, row.beta, row.mean), (1.0, 1.0, 0.5));
            assert!((row.variance - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn baseline_session() {
        let c = Arc::new(synth_binary_code_catalog(12, 4, 0).unwrap());
        let config = SessionConfig { method: Method::MonoLlm, ..Default::default() };
        let mut s = session(c, config);
        let q = s.next_query().unwrap();
        assert_eq!(q.text, STUB_FIRST_QUESTION);
        assert_eq!(q.selected_item, None);
        let r = s.submit_response(Answer::No).unwrap();
        assert!(r.turn.aspect.is_none() && r.turn.entailments.is_none());
        assert_eq!(s.recommendations(5).unwrap().indices(), vec![0, 1, 2, 3, 4]);
        assert!(matches!(s.belief_snapshot(), Err(Error::Unsupported(_))));
        assert_ne!(s.next_query().unwrap().text, STUB_FIRST_QUESTION);
    }

    #[test]
    fn finishes_after_max_turns() {
        let c = Arc::new(synth_binary_code_catalog(16, 4, 0).unwrap());
        let mut s = session(c, SessionConfig { max_turns: 2, ..Default::default() });
        s.next_query().unwrap();
        assert!(!s.submit_response(Answer::Yes).unwrap().finished);
        s.next_query().unwrap();
        assert!(s.submit_response(Answer::No).unwrap().finished);
        assert_eq!(s.phase(), Phase::Finished);
        assert!(matches!(s.next_query(), Err(Error::State { phase: "finished" })));
        assert!(s.submit_response(Answer::No).is_err());
        assert_eq!(s.recommendations(3).unwrap().len(), 3);
    }

    #[test]
    fn exhaustion_falls_back_then_stops() {
        let c = Arc::new(synth_binary_code_catalog(4, 2, 0).unwrap());
        let mut s = session(c, cfg(Policy::greedy(), ObservationMode::Probabilistic));
        // item0 has no features, so the first query comes from the next item
        let q = s.next_query().unwrap();
        assert_eq!(q.selected_item, Some(1));
        s.submit_response(Answer::Yes).unwrap();
        s.next_query().unwrap();
        s.submit_response(Answer::Yes).unwrap();
        let before = s.export();
        assert!(matches!(s.next_query(), Err(Error::AllAspectsExhausted)));
        assert_eq!(s.export(), before);
    }

    struct Failing;
    impl EntailmentProvider for Failing {
        fn raw_logits(&self, _: &str, _: &str) -> Result<crate::entailment::NliLogits> {
            Err(Error::Transport { item: None, message: "down".into() })
        }
    }

    #[test]
    fn entailment_failure_leaves_belief_untouched() {
        let c = two_items();
        let providers = Providers::new(Arc::new(StubLm), Arc::new(Failing), Arc::new(Templates::default()));
        let mut s = Session::start(SessionConfig::default(), c, providers).unwrap();
        s.next_query().unwrap();
        match s.submit_response(Answer::Yes) {
            Err(Error::Transport { item: Some(_), .. }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(s.phase(), Phase::AwaitingResponse);
        assert_eq!(s.belief().unwrap(), &BeliefState::uniform(2).unwrap());
        assert!(s.turns().is_empty());
    }

    #[test]
    fn export_round_trip_preserves_the_future() {
        let c = Arc::new(synth_binary_code_catalog(40, 6, 2).unwrap());
        let config = SessionConfig { policy: Policy::of(PolicyKind::ThompsonSampling), seed: 5, ..Default::default() };
        let mut a = session(c.clone(), config);
        for ans in [Answer::Yes, Answer::No] {
            a.next_query().unwrap();
            a.submit_response(ans).unwrap();
        }
        let json = serde_json::to_string(&a.export()).unwrap();
        let mut b = Session::import(serde_json::from_str(&json).unwrap(), c.clone(), Providers::offline(&c).unwrap()).unwrap();
        assert_eq!(a.next_query().unwrap(), b.next_query().unwrap());
        a.submit_response(Answer::Yes).unwrap();
        b.submit_response(Answer::Yes).unwrap();
        assert_eq!(a.export(), b.export());
    }

    #[test]
    fn import_rejects_foreign_catalogs() {
        let c = two_items();
        let s = session(c, SessionConfig::default());
        let other = Arc::new(synth_binary_code_catalog(2, 1, 0).unwrap());
        assert!(Session::import(s.export(), other.clone(), Providers::offline(&other).unwrap()).is_err());
    }

    #[test]
    fn mass_grows_by_n_per_turn() {
        let c = Arc::new(synth_binary_code_catalog(30, 5, 4).unwrap());
        let n = c.len() as f64;
        let mut s = session(c, SessionConfig::default());
        for t in 0..5 {
            let before = s.belief().unwrap().total_mass();
            s.next_query().unwrap();
            s.submit_response(if t % 2 == 0 { Answer::Yes } else { Answer::No }).unwrap();
            assert!((s.belief().unwrap().total_mass() - before - n).abs() < 1e-9);
        }
    }
}
