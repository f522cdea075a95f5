//! Entailment probabilities `w_i`: how strongly an item description implies a
//! stated preference.
//!
//! Providers return raw NLI logits; [`calibrate`] divides them by a temperature
//! and softmaxes entailment against contradiction. The neutral logit is dropped.

use std::collections::HashMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::ItemCatalog;
use crate::error::{invalid, Error, Result};
use crate::text::strip_negation;

/// Raw logits from an NLI backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliLogits {
    pub entail_logit: f64,
    pub contradiction_logit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral_logit: Option<f64>,
}

pub trait EntailmentProvider: Send + Sync {
    /// Logits for "`premise` entails `hypothesis`".
    fn raw_logits(&self, premise: &str, hypothesis: &str) -> Result<NliLogits>;

    /// Whether [`score_catalog`] may call this provider from several threads.
    fn allows_concurrent_calls(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentConfig {
    pub temperature: f64,
}

impl EntailmentConfig {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Self { temperature })
    }
}

impl Default for EntailmentConfig {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

/// Two-class softmax of temperature-scaled logits; returns the entailment mass.
pub fn calibrate(entail_logit: f64, contradiction_logit: f64, temperature: f64) -> Result<f64> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(invalid(format!("temperature must be positive, got {temperature}")));
    }
    if !(entail_logit.is_finite() && contradiction_logit.is_finite()) {
        return Err(invalid("logits must be finite"));
    }
    let e = entail_logit / temperature;
    let c = contradiction_logit / temperature;
    let m = e.max(c);
    let (ee, ec) = ((e - m).exp(), (c - m).exp());
    Ok(ee / (ee + ec))
}

/// Probability that `item_description` entails `preference`.
pub fn score_entailment(
    provider: &dyn EntailmentProvider,
    item_description: &str,
    preference: &str,
    cfg: &EntailmentConfig,
) -> Result<f64> {
    if item_description.trim().is_empty() || preference.trim().is_empty() {
        return Err(invalid("premise and hypothesis must be non-empty"));
    }
    let l = provider.raw_logits(item_description, preference)?;
    calibrate(l.entail_logit, l.contradiction_logit, cfg.temperature)
}

/// Entailment probabilities for every catalog item, in catalog order.
///
/// Any per-item failure fails the whole call; transport errors are tagged
/// with the failing item's id.
pub fn score_catalog(
    provider: &dyn EntailmentProvider,
    catalog: &ItemCatalog,
    preference: &str,
    cfg: &EntailmentConfig,
) -> Result<Vec<f64>> {
    if preference.trim().is_empty() {
        return Err(invalid("preference must be non-empty"));
    }
    let score = |item: &crate::catalog::Item| {
        score_entailment(provider, &item.description, preference, cfg).map_err(|e| match e {
            Error::Transport { message, .. } => Error::Transport {
                item: Some(item.id.clone()),
                message,
            },
            other => other,
        })
    };
    if provider.allows_concurrent_calls() && catalog.len() > 1 {
        catalog.items().par_iter().map(score).collect()
    } else {
        catalog.items().iter().map(score).collect()
    }
}

/// Rounds an entailment probability to a binary rating; 0.5 rounds up.
pub fn binarize(w: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&w) {
        return Err(invalid(format!("probability must lie in [0, 1], got {w}")));
    }
    Ok(u8::from(w >= 0.5))
}

pub const DEFAULT_ORACLE_LOGIT: f64 = 10.0;

/// Deterministic NLI stand-in driven by ground-truth item features.
///
/// A hypothesis is consistent with an item when its aspect (after stripping a
/// leading `"not "`) is among the item's features, with the negation flipping
/// the result. Consistent pairs get logit margin `+L`, others `-L`.
#[derive(Debug, Clone)]
pub struct FeatureOracle {
    margin: f64,
    features: HashMap<String, Vec<String>>,
}

impl FeatureOracle {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(invalid(format!("oracle margin must be finite and >= 0, got {margin}")));
        }
        Ok(Self {
            margin,
            features: HashMap::new(),
        })
    }

    /// Registers every item's description with its features.
    pub fn from_catalog(catalog: &ItemCatalog, margin: f64) -> Result<Self> {
        let mut oracle = Self::new(margin)?;
        for item in catalog.items() {
            oracle.insert(&item.description, item.features().to_vec())?;
        }
        Ok(oracle)
    }

    pub fn insert(&mut self, description: &str, features: Vec<String>) -> Result<()> {
        let key = description.trim().to_string();
        match self.features.get(&key) {
            Some(existing) if !same_features(existing, &features) => Err(Error::Validation(format!(
                "description {key:?} registered with conflicting feature sets"
            ))),
            Some(_) => Ok(()),
            None => {
                self.features.insert(key, features);
                Ok(())
            }
        }
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Whether `hypothesis` holds for the item described by `premise`.
    pub fn consistent(&self, premise: &str, hypothesis: &str) -> Result<bool> {
        let features = self
            .features
            .get(premise.trim())
            .ok_or_else(|| invalid(format!("oracle has no features for premise {premise:?}")))?;
        Ok(feature_match(features, hypothesis))
    }
}

fn same_features(a: &[String], b: &[String]) -> bool {
    let norm = |v: &[String]| {
        let mut v: Vec<String> = v.iter().map(|s| s.trim().to_lowercase()).collect();
        v.sort();
        v
    };
    norm(a) == norm(b)
}

/// Negation-aware membership of a preference description in a feature set.
pub fn feature_match(features: &[String], hypothesis: &str) -> bool {
    let (negated, aspect) = strip_negation(hypothesis);
    let present = features
        .iter()
        .any(|f| f.trim().eq_ignore_ascii_case(aspect));
    present != negated
}

impl EntailmentProvider for FeatureOracle {
    fn raw_logits(&self, premise: &str, hypothesis: &str) -> Result<NliLogits> {
        let sign = if self.consistent(premise, hypothesis)? { 1.0 } else { -1.0 };
        Ok(NliLogits {
            entail_logit: sign * self.margin,
            contradiction_logit: 0.0,
            neutral_logit: None,
        })
    }
}

/// Connection settings for [`RemoteNli`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteNliConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_secs() -> f64 {
    30.0
}

fn default_backoff_ms() -> u64 {
    250
}

impl RemoteNliConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_secs: default_timeout_secs(),
            backoff_ms: default_backoff_ms(),
        }
    }

    /// Reads `NLI_ENDPOINT` and, optionally, `NLI_TIMEOUT_SECS`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("NLI_ENDPOINT")
            .map_err(|_| invalid("NLI_ENDPOINT is not set"))?;
        let mut cfg = Self::new(endpoint);
        if let Ok(t) = std::env::var("NLI_TIMEOUT_SECS") {
            cfg.timeout_secs = t
                .parse()
                .map_err(|_| invalid(format!("bad NLI_TIMEOUT_SECS {t:?}")))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[derive(Serialize)]
struct NliRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    entail_logit: f64,
    contradiction_logit: f64,
    #[serde(default)]
    neutral_logit: Option<f64>,
}

/// JSON-over-HTTP client for an NLI inference endpoint.
///
/// POSTs `{premise, hypothesis}` and expects
/// `{entail_logit, contradiction_logit, neutral_logit}`. A failed call is
/// retried once after `backoff_ms`.
pub struct RemoteNli {
    cfg: RemoteNliConfig,
    agent: ureq::Agent,
}

impl RemoteNli {
    pub fn new(cfg: RemoteNliConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Self { cfg, agent }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(RemoteNliConfig::from_env()?))
    }

    fn call(&self, premise: &str, hypothesis: &str) -> Result<NliLogits> {
        let transport = |e: ureq::Error| Error::Transport {
            item: None,
            message: e.to_string(),
        };
        let body: NliResponse = self
            .agent
            .post(&self.cfg.endpoint)
            .send_json(NliRequest { premise, hypothesis })
            .map_err(transport)?
            .body_mut()
            .read_json()
            .map_err(transport)?;
        if !(body.entail_logit.is_finite() && body.contradiction_logit.is_finite()) {
            return Err(Error::Transport {
                item: None,
                message: "endpoint returned non-finite logits".into(),
            });
        }
        Ok(NliLogits {
            entail_logit: body.entail_logit,
            contradiction_logit: body.contradiction_logit,
            neutral_logit: body.neutral_logit,
        })
    }
}

impl EntailmentProvider for RemoteNli {
    fn raw_logits(&self, premise: &str, hypothesis: &str) -> Result<NliLogits> {
        crate::retry::with_one_retry(self.cfg.backoff_ms, || self.call(premise, hypothesis))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Item;
    use proptest::prelude::*;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn calibration_examples() {
        assert!((calibrate(2.0, 0.0, 1.0).unwrap() - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((calibrate(2.0, 0.0, 10.0).unwrap() - 0.549_833_997_312_478).abs() < 1e-12);
        for &(x, t) in &[(0.0, 1.0), (-3.5, 10.0), (700.0, 0.01)] {
            assert_eq!(calibrate(x, x, t).unwrap(), 0.5);
        }
        assert!(calibrate(1.0, 0.0, 0.0).is_err());
        assert!(calibrate(1.0, 0.0, -1.0).is_err());
        // large scaled logits stay finite
        assert_eq!(calibrate(1e4, 0.0, 1.0).unwrap(), 1.0);
    }

    fn demo() -> ItemCatalog {
        ItemCatalog::new(vec![
            Item::new("lion", "Animated family film").with_features(["animated", "family"]),
            Item::new("romcom", "A romance in Paris").with_features(["romance"]),
            Item::new("war", "Gritty war epic").with_features(["war"]),
        ])
        .unwrap()
    }

    #[test]
    fn oracle_scores() {
        let o = FeatureOracle::from_catalog(&demo(), 10.0).unwrap();
        let cfg = EntailmentConfig::default();
        let w = score_entailment(&o, "Animated family film", "animated", &cfg).unwrap();
        assert!((w - sigmoid(10.0)).abs() < 1e-15);
        let w = score_entailment(&o, "Animated family film", "not animated", &cfg).unwrap();
        assert!((w - sigmoid(-10.0)).abs() < 1e-15);
        assert!((w - 4.54e-5).abs() < 1e-7);
        let w = score_entailment(&o, "A romance in Paris", "not animated", &cfg).unwrap();
        assert!((w - 0.99995).abs() < 1e-5);
    }

    #[test]
    fn catalog_scores() {
        let o = FeatureOracle::from_catalog(&demo(), 10.0).unwrap();
        let cfg = EntailmentConfig::default();
        let w = score_catalog(&o, &demo(), "romance", &cfg).unwrap();
        let expected = [sigmoid(-10.0), sigmoid(10.0), sigmoid(-10.0)];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(score_catalog(&o, &demo(), " ", &cfg), Err(Error::InvalidArgument(_))));

        let single = ItemCatalog::new(vec![demo().items()[0].clone()]).unwrap();
        assert_eq!(score_catalog(&o, &single, "family", &cfg).unwrap().len(), 1);
    }

    #[test]
    fn oracle_rejects_conflicting_duplicates() {
        let mut o = FeatureOracle::new(10.0).unwrap();
        o.insert("x", vec!["a".into()]).unwrap();
        o.insert("x", vec!["A".into()]).unwrap();
        assert!(o.insert("x", vec!["b".into()]).is_err());
        assert!(o.raw_logits("unknown", "a").is_err());
    }

    #[test]
    fn binarize_rounds_half_up() {
        assert_eq!(binarize(0.7).unwrap(), 1);
        assert_eq!(binarize(0.3).unwrap(), 0);
        assert_eq!(binarize(0.5).unwrap(), 1);
        assert_eq!(binarize(0.0).unwrap(), 0);
        assert_eq!(binarize(1.0).unwrap(), 1);
        assert!(binarize(1.01).is_err());
        assert!(binarize(f64::NAN).is_err());
    }

    #[test]
    fn binary_and_probabilistic_pipelines_agree_on_a_grid() {
        // brute force over w: the binary rating is the probabilistic update's
        // nearest vertex, with the tie at 0.5 going to "like"
        use crate::belief::BeliefState;
        let prior = BeliefState::uniform(1).unwrap();
        for i in 0..=1000 {
            let w = i as f64 / 1000.0;
            let r = binarize(w).unwrap();
            let bin = prior.update_binary(&[r]).unwrap();
            let vertex = if w >= 0.5 { 1.0 } else { 0.0 };
            assert_eq!(bin, prior.update_probabilistic(&[vertex]).unwrap());
            let prob = prior.update_probabilistic(&[w]).unwrap();
            assert_eq!(prob.means()[0] >= 0.5, r == 1, "w = {w}");
        }
    }

    proptest! {
        #[test]
        fn calibrate_is_complementary(e in -50.0f64..50.0, c in -50.0f64..50.0, t in 0.01f64..100.0) {
            let s = calibrate(e, c, t).unwrap() + calibrate(c, e, t).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn calibrate_is_monotone(c in -20.0f64..20.0, d1 in -20.0f64..20.0, d2 in -20.0f64..20.0, t in 0.1f64..10.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(calibrate(c + lo, c, t).unwrap() <= calibrate(c + hi, c, t).unwrap());
        }

        #[test]
        fn calibrate_flattens_at_high_temperature(e in -10.0f64..10.0, d in -20.0f64..20.0) {
            prop_assert!((calibrate(e + d, e, 1e6).unwrap() - 0.5).abs() < 1e-5);
        }

        #[test]
        fn binarize_is_antisymmetric(w in 0.0f64..=1.0) {
            prop_assume!(w != 0.5 && 1.0 - w != 0.5);
            prop_assert_eq!(binarize(w).unwrap(), 1 - binarize(1.0 - w).unwrap());
        }

        #[test]
        fn catalog_scoring_is_permutation_equivariant(seed in any::<u64>(), pref in 0usize..4) {
            use rand::{seq::SliceRandom, SeedableRng};
            let cat = crate::catalog::synth_binary_code_catalog(16, 4, seed).unwrap();
            let oracle = FeatureOracle::from_catalog(&cat, 10.0).unwrap();
            let preference = format!("f{pref}");
            let cfg = EntailmentConfig::default();
            let base = score_catalog(&oracle, &cat, &preference, &cfg).unwrap();
            let mut perm: Vec<usize> = (0..cat.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = ItemCatalog::new(perm.iter().map(|&i| cat.items()[i].clone()).collect()).unwrap();
            let w = score_catalog(&oracle, &shuffled, &preference, &cfg).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(w[k].to_bits(), base[i].to_bits());
            }
        }
    }
}
