//! Beta belief state over item utilities.
//!
//! Every item carries an independent `Beta(alpha, beta)` posterior over its
//! utility `u_i in [0, 1]`. Observations arrive either as binary ratings, folded
//! in by Beta-Bernoulli conjugacy, or as entailment probabilities `w_i`, folded
//! in by the mean-matched projection of the two-component Beta mixture
//! `w * Beta(a + 1, b) + (1 - w) * Beta(a, b + 1)` back onto a single Beta.
//! Both updates add exactly one pseudo-count per item.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special;

/// Parameters of one item's Beta posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(invalid(format!(
                "beta parameters must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The uniform `Beta(1, 1)` cold-start prior.
    pub const fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// Expected utility `alpha / (alpha + beta)`.
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Beta CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        special::reg_inc_beta(self.alpha, self.beta, x)
    }

    /// The `k`-quantile, `k in (0, 1)`.
    pub fn percentile(&self, k: f64) -> Result<f64> {
        if !(k > 0.0 && k < 1.0) {
            return Err(invalid(format!("percentile must lie in (0, 1), got {k}")));
        }
        Ok(special::inv_reg_inc_beta(self.alpha, self.beta, k))
    }

    /// One draw from the posterior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Parameters are validated at construction, so this cannot fail.
        let dist = Beta::new(self.alpha, self.beta).expect("validated beta parameters");
        dist.sample(rng)
    }

    /// Conjugate update with one Bernoulli observation.
    pub fn observe_binary(&self, liked: bool) -> Self {
        let r = if liked { 1.0 } else { 0.0 };
        Self {
            alpha: self.alpha + r,
            beta: self.beta + (1.0 - r),
        }
    }

    /// Mean-matched update with entailment probability `w in [0, 1]`.
    pub fn observe_probability(&self, w: f64) -> Self {
        Self {
            alpha: self.alpha + w,
            beta: self.beta + (1.0 - w),
        }
    }
}

impl Default for BetaParams {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Mean of the exact (un-approximated) posterior after observing entailment
/// probability `w`: the mixture `w * Beta(a + 1, b) + (1 - w) * Beta(a, b + 1)`.
///
/// Kept public so callers can check the mean-matched update against it.
pub fn exact_mixture_mean(prior: &BetaParams, w: f64) -> f64 {
    let (a, b) = (prior.alpha, prior.beta);
    w * (a + 1.0) / (a + b + 1.0) + (1.0 - w) * a / (a + b + 1.0)
}

/// Factorized belief over all catalog items, indexed like the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefState {
    params: Vec<BetaParams>,
}

impl BeliefState {
    /// `n_items` copies of `Beta(alpha0, beta0)`.
    pub fn init_prior(n_items: usize, alpha0: f64, beta0: f64) -> Result<Self> {
        if n_items == 0 {
            return Err(invalid("belief state needs at least one item"));
        }
        let prior = BetaParams::new(alpha0, beta0)?;
        Ok(Self {
            params: vec![prior; n_items],
        })
    }

    pub fn uniform(n_items: usize) -> Result<Self> {
        Self::init_prior(n_items, 1.0, 1.0)
    }

    pub fn from_params(params: Vec<BetaParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(invalid("belief state needs at least one item"));
        }
        for p in &params {
            BetaParams::new(p.alpha, p.beta)?;
        }
        Ok(Self { params })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[BetaParams] {
        &self.params
    }

    pub fn get(&self, index: usize) -> Option<&BetaParams> {
        self.params.get(index)
    }

    /// Applies binary ratings `r_i in {0, 1}`.
    pub fn update_binary(&self, ratings: &[u8]) -> Result<Self> {
        self.check_len(ratings.len())?;
        let params = self
            .params
            .iter()
            .zip(ratings)
            .enumerate()
            .map(|(i, (p, &r))| match r {
                0 | 1 => Ok(p.observe_binary(r == 1)),
                _ => Err(invalid(format!("binary rating {i} must be 0 or 1, got {r}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params })
    }

    /// Applies entailment probabilities `w_i in [0, 1]`.
    pub fn update_probabilistic(&self, entailments: &[f64]) -> Result<Self> {
        self.check_len(entailments.len())?;
        let params = self
            .params
            .iter()
            .zip(entailments)
            .enumerate()
            .map(|(i, (p, &w))| {
                if (0.0..=1.0).contains(&w) {
                    Ok(p.observe_probability(w))
                } else {
                    Err(invalid(format!("entailment {i} must lie in [0, 1], got {w}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params })
    }

    pub fn means(&self) -> Vec<f64> {
        self.params.iter().map(BetaParams::mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.params.iter().map(BetaParams::variance).collect()
    }

    /// Sum of all pseudo-counts; grows by exactly `N` per update.
    pub fn total_mass(&self) -> f64 {
        self.params.iter().map(|p| p.alpha + p.beta).sum()
    }

    /// FNV-1a digest over the bit patterns of every parameter.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in &self.params {
            for v in [p.alpha, p.beta] {
                for byte in v.to_bits().to_le_bytes() {
                    h ^= u64::from(byte);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        format!("{h:016x}")
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.params.len() {
            return Err(invalid(format!(
                "rating vector has length {got}, belief state has {}",
                self.params.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    fn state(ps: &[(f64, f64)]) -> BeliefState {
        BeliefState::from_params(ps.iter().map(|&(a, b)| bp(a, b)).collect()).unwrap()
    }

    #[test]
    fn prior_construction() {
        let s = BeliefState::init_prior(3, 1.0, 1.0).unwrap();
        assert_eq!(s.params(), &[bp(1.0, 1.0); 3]);
        let s = BeliefState::init_prior(1, 2.0, 5.0).unwrap();
        assert_eq!(s.params(), &[bp(2.0, 5.0)]);
        assert!(matches!(
            BeliefState::init_prior(0, 1.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(BeliefState::init_prior(2, 0.0, 1.0).is_err());
        assert!(BeliefState::init_prior(2, 1.0, -1.0).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(BetaParams::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn binary_update() {
        assert_eq!(state(&[(1.0, 1.0)]).update_binary(&[1]).unwrap(), state(&[(2.0, 1.0)]));
        assert_eq!(state(&[(1.0, 1.0)]).update_binary(&[0]).unwrap(), state(&[(1.0, 2.0)]));
        assert_eq!(
            state(&[(2.0, 3.0), (1.0, 1.0)]).update_binary(&[1, 0]).unwrap(),
            state(&[(3.0, 3.0), (1.0, 2.0)])
        );
        assert!(state(&[(1.0, 1.0)]).update_binary(&[1, 0]).is_err());
        assert!(state(&[(1.0, 1.0)]).update_binary(&[2]).is_err());
    }

    #[test]
    fn probabilistic_update() {
        let s = state(&[(1.0, 1.0)]).update_probabilistic(&[0.7]).unwrap();
        assert!((s.params()[0].alpha - 1.7).abs() < 1e-15);
        assert!((s.params()[0].beta - 1.3).abs() < 1e-15);
        assert_eq!(
            state(&[(1.0, 1.0)]).update_probabilistic(&[1.0]).unwrap(),
            state(&[(2.0, 1.0)])
        );
        assert_eq!(
            state(&[(2.0, 3.0)]).update_probabilistic(&[0.25]).unwrap(),
            state(&[(2.25, 3.75)])
        );
        assert!(state(&[(1.0, 1.0)]).update_probabilistic(&[1.5]).is_err());
        assert!(state(&[(1.0, 1.0)]).update_probabilistic(&[-0.1]).is_err());
        assert!(state(&[(1.0, 1.0)]).update_probabilistic(&[f64::NAN]).is_err());
    }

    #[test]
    fn statistics() {
        assert!((bp(2.0, 1.0).mean() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bp(1.0, 1.0).mean(), 0.5);
        // oracle: the un-approximated mixture mean
        let expected = exact_mixture_mean(&bp(1.0, 1.0), 0.7);
        assert!((expected - (0.7 * 2.0 / 3.0 + 0.3 / 3.0)).abs() < 1e-15);
        assert!((bp(1.7, 1.3).mean() - expected).abs() < 1e-15);

        assert!((bp(1.0, 1.0).variance() - 1.0 / 12.0).abs() < 1e-15);
        assert!((bp(2.0, 2.0).variance() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn variance_matches_sample_variance() {
        let p = bp(1000.0, 1000.0);
        assert!((p.variance() - 1.249_375_312e-4).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        // sample variance of a near-normal variable has relative sd sqrt(2/n)
        assert!((v - p.variance()).abs() < 5.0 * p.variance() * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn percentile_examples() {
        assert!((bp(1.0, 1.0).percentile(0.9).unwrap() - 0.9).abs() < 1e-10);
        assert!((bp(2.0, 1.0).percentile(0.9).unwrap() - 0.948_683_298_050_513_8).abs() < 1e-10);
        assert!((bp(1.0, 2.0).percentile(0.9).unwrap() - 0.683_772_233_983_162_1).abs() < 1e-10);
        for k in [0.0, 1.0, -0.2, 1.3, f64::NAN] {
            assert!(matches!(bp(1.0, 1.0).percentile(k), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn exact_mixture_examples() {
        assert!((exact_mixture_mean(&bp(1.0, 1.0), 0.7) - 0.566_666_666_666_666_7).abs() < 1e-15);
        assert!((exact_mixture_mean(&bp(1.0, 1.0), 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((exact_mixture_mean(&bp(3.0, 2.0), 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_support_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let x = bp(1.0, 1.0).sample(&mut rng);
            assert!(x > 0.0 && x < 1.0);
        }
        let a = bp(2.0, 5.0).sample(&mut ChaCha8Rng::seed_from_u64(99));
        let b = bp(2.0, 5.0).sample(&mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sampling_concentrates() {
        let p = bp(1e6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let above = (0..10_000).filter(|_| p.sample(&mut rng) > 0.99).count();
        assert!(above as f64 / 10_000.0 > 0.999);
    }

    #[test]
    fn sampling_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(a, b) in &[(1.0, 1.0), (2.0, 5.0), (0.5, 0.5), (30.0, 4.0)] {
            let p = bp(a, b);
            let n = 100_000;
            let mean = (0..n).map(|_| p.sample(&mut rng)).sum::<f64>() / n as f64;
            let se = (p.variance() / n as f64).sqrt();
            assert!((mean - p.mean()).abs() < 4.0 * se, "({a},{b}): {mean}");
        }
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = state(&[(1.0, 1.0), (2.0, 1.0)]);
        let b = state(&[(1.0, 1.0), (1.0, 2.0)]);
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
    }

    proptest! {
        #[test]
        fn mean_matching_is_exact(a in 0.1f64..100.0, b in 0.1f64..100.0, w in 0.0f64..=1.0) {
            let prior = bp(a, b);
            let post = state(&[(a, b)]).update_probabilistic(&[w]).unwrap();
            prop_assert!((post.params()[0].mean() - exact_mixture_mean(&prior, w)).abs() < 1e-12);
        }

        #[test]
        fn binary_and_probabilistic_agree(ps in prop::collection::vec((0.1f64..50.0, 0.1f64..50.0, any::<bool>()), 1..20)) {
            let s = state(&ps.iter().map(|&(a, b, _)| (a, b)).collect::<Vec<_>>());
            let r: Vec<u8> = ps.iter().map(|&(_, _, l)| l as u8).collect();
            let w: Vec<f64> = r.iter().map(|&x| f64::from(x)).collect();
            prop_assert_eq!(s.update_binary(&r).unwrap(), s.update_probabilistic(&w).unwrap());
        }

        #[test]
        fn each_update_adds_one_pseudo_count(a in 0.1f64..100.0, b in 0.1f64..100.0, w in 0.0f64..=1.0) {
            let post = state(&[(a, b)]).update_probabilistic(&[w]).unwrap();
            let p = post.params()[0];
            // exact up to the rounding of two additions
            prop_assert!(((p.alpha + p.beta) - (a + b + 1.0)).abs() <= 4.0 * f64::EPSILON * (a + b + 1.0));
        }

        #[test]
        fn updates_commute(ps in prop::collection::vec((0.5f64..20.0, 0.5f64..20.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..10)) {
            let s = state(&ps.iter().map(|&(a, b, _, _)| (a, b)).collect::<Vec<_>>());
            let w1: Vec<f64> = ps.iter().map(|p| p.2).collect();
            let w2: Vec<f64> = ps.iter().map(|p| p.3).collect();
            let x = s.update_probabilistic(&w1).unwrap().update_probabilistic(&w2).unwrap();
            let y = s.update_probabilistic(&w2).unwrap().update_probabilistic(&w1).unwrap();
            for (p, q) in x.params().iter().zip(y.params()) {
                prop_assert!((p.alpha - q.alpha).abs() < 1e-12 && (p.beta - q.beta).abs() < 1e-12);
            }
        }

        #[test]
        fn percentile_inverts_cdf(a in 0.5f64..500.0, b in 0.5f64..500.0, k in 0.01f64..0.99) {
            let p = bp(a, b);
            let x = p.percentile(k).unwrap();
            prop_assert!((p.cdf(x) - k).abs() <= 1e-9);
        }

        #[test]
        fn percentile_monotone(a in 0.5f64..200.0, b in 0.5f64..200.0, k1 in 0.01f64..0.99, k2 in 0.01f64..0.99) {
            let p = bp(a, b);
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            prop_assert!(p.percentile(lo).unwrap() <= p.percentile(hi).unwrap());
        }
    }
}
