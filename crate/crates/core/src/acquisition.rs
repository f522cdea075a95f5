//! Context-acquisition policies: which item's description seeds the next query.
//!
//! Every argmax in this module breaks ties toward the lowest item index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefState, BetaParams};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Thompson sampling: argmax of one posterior draw per item.
    #[serde(rename = "ts")]
    ThompsonSampling,
    /// Argmax of the `k`-th posterior percentile.
    #[serde(rename = "ucb")]
    Ucb,
    /// Argmax of posterior variance (explore only).
    #[serde(rename = "er")]
    EntropyReduction,
    /// Argmax of posterior mean (exploit only).
    Greedy,
    Random,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ThompsonSampling => "ts",
            PolicyKind::Ucb => "ucb",
            PolicyKind::EntropyReduction => "er",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ts" | "thompson" => Ok(PolicyKind::ThompsonSampling),
            "ucb" => Ok(PolicyKind::Ucb),
            "er" | "entropy" => Ok(PolicyKind::EntropyReduction),
            "greedy" => Ok(PolicyKind::Greedy),
            "random" => Ok(PolicyKind::Random),
            other => Err(invalid(format!("unknown policy {other:?}"))),
        }
    }
}

pub const DEFAULT_UCB_PERCENTILE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Only read by UCB.
    pub ucb_percentile: f64,
}

impl Policy {
    pub fn new(kind: PolicyKind, ucb_percentile: f64) -> Result<Self> {
        if !(ucb_percentile > 0.0 && ucb_percentile < 1.0) {
            return Err(invalid(format!(
                "ucb percentile must lie in (0, 1), got {ucb_percentile}"
            )));
        }
        Ok(Self {
            kind,
            ucb_percentile,
        })
    }

    pub fn of(kind: PolicyKind) -> Self {
        Self {
            kind,
            ucb_percentile: DEFAULT_UCB_PERCENTILE,
        }
    }

    pub fn thompson() -> Self {
        Self::of(PolicyKind::ThompsonSampling)
    }

    pub fn ucb(percentile: f64) -> Result<Self> {
        Self::new(PolicyKind::Ucb, percentile)
    }

    pub fn greedy() -> Self {
        Self::of(PolicyKind::Greedy)
    }

    pub fn entropy_reduction() -> Self {
        Self::of(PolicyKind::EntropyReduction)
    }

    pub fn random() -> Self {
        Self::of(PolicyKind::Random)
    }
}

impl Default for Policy {
    fn default() -> Self {
        Self::thompson()
    }
}

/// Index of the largest score, lowest index on ties. `None` for empty input.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Indices sorted by descending score, ascending index on ties.
pub fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Per-item acquisition scores for the deterministic policies and TS.
///
/// TS consumes exactly `N` draws from `rng`, in item order. Random has no
/// per-item score and returns `None`.
pub fn policy_scores<R: Rng + ?Sized>(
    state: &BeliefState,
    policy: &Policy,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    let ps = state.params();
    let scores = match policy.kind {
        PolicyKind::ThompsonSampling => ps.iter().map(|p| p.sample(rng)).collect(),
        PolicyKind::Ucb => ps
            .iter()
            .map(|p| p.percentile(policy.ucb_percentile))
            .collect::<Result<Vec<_>>>()?,
        PolicyKind::EntropyReduction => ps.iter().map(BetaParams::variance).collect(),
        PolicyKind::Greedy => ps.iter().map(BetaParams::mean).collect(),
        PolicyKind::Random => return Ok(None),
    };
    Ok(Some(scores))
}

/// Full preference order over items under `policy`; the head is the selection.
///
/// For Random the head is a uniform draw and the rest follow cyclically in
/// index order.
pub fn selection_order<R: Rng + ?Sized>(
    state: &BeliefState,
    policy: &Policy,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = state.len();
    if n == 0 {
        return Err(invalid("cannot select from an empty belief state"));
    }
    match policy_scores(state, policy, rng)? {
        Some(scores) => Ok(order_by_score(&scores)),
        None => {
            let head = rng.random_range(0..n);
            Ok((0..n).map(|o| (head + o) % n).collect())
        }
    }
}

/// The item whose description seeds the next query.
pub fn select_item<R: Rng + ?Sized>(
    state: &BeliefState,
    policy: &Policy,
    rng: &mut R,
) -> Result<usize> {
    if state.is_empty() {
        return Err(invalid("cannot select from an empty belief state"));
    }
    match policy_scores(state, policy, rng)? {
        Some(scores) => Ok(argmax(&scores).expect("non-empty scores")),
        None => Ok(rng.random_range(0..state.len())),
    }
}

/// Items ordered by score, best first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ranking {
    pub entries: Vec<RankedItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub index: usize,
    pub score: f64,
}

impl Ranking {
    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.index).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of `index`, if present.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.index == index).map(|p| p + 1)
    }
}

/// Top `min(k, N)` items by expected utility.
pub fn rank_top_k(state: &BeliefState, k: usize) -> Result<Ranking> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let means = state.means();
    let entries = order_by_score(&means)
        .into_iter()
        .take(k)
        .map(|index| RankedItem {
            index,
            score: means[index],
        })
        .collect();
    Ok(Ranking { entries })
}
