//! Binary classification from Beta posteriors and Bayes-risk bookkeeping.

use crate::beta::BetaParams;
use crate::error::{Error, Result};

/// Decision threshold on the posterior mean.
pub const THRESHOLD: f64 = 0.5;

/// Pseudo-count of the near-flat prior used by the no-prior (majority vote)
/// mode.
pub const NO_PRIOR_EPS: f64 = 1e-9;

/// 1 iff the posterior mean is at least one half.
pub fn classify(posterior: BetaParams) -> u8 {
    (posterior.mean() >= THRESHOLD) as u8
}

/// Bayes optimal label `1{p ≥ 0.5}` and its risk `min(p, 1 − p)`.
pub fn bayes_optimal(p: f64) -> (u8, f64) {
    ((p >= THRESHOLD) as u8, p.min(1.0 - p))
}

/// Probability that a `Bernoulli(p)` outcome differs from `label`.
pub fn risk(label: u8, p: f64) -> f64 {
    if label == 0 {
        p
    } else {
        1.0 - p
    }
}

/// Beta with the given mean and variance.
pub fn informative_prior(mean: f64, variance: f64) -> Result<BetaParams> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::InvalidProbability(mean));
    }
    let max_var = mean * (1.0 - mean);
    if !(variance > 0.0 && variance < max_var) {
        return Err(Error::InfeasibleVariance { mean, variance });
    }
    let scale = max_var / variance - 1.0;
    BetaParams::new(mean * scale, (1.0 - mean) * scale)
}

/// Prior `Beta(ε, ε)`: the posterior mean is the neighborhood majority.
pub fn no_prior() -> BetaParams {
    BetaParams {
        alpha: NO_PRIOR_EPS,
        beta: NO_PRIOR_EPS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn labels() {
        assert_eq!(classify(BetaParams::uniform()), 1);
        assert_eq!(
            classify(BetaParams {
                alpha: 2.0,
                beta: 1.0
            }),
            1
        );
        assert_eq!(
            classify(BetaParams {
                alpha: 1.0,
                beta: 3.0
            }),
            0
        );
    }

    #[test]
    fn bayes_optimal_examples() {
        let (label, r) = bayes_optimal(0.7);
        assert_eq!(label, 1);
        assert_relative_eq!(r, 0.3, epsilon = 1e-15);
        assert_eq!(bayes_optimal(0.5), (1, 0.5));
        assert_eq!(bayes_optimal(0.1), (0, 0.1));
    }

    #[test]
    fn risk_examples() {
        assert_relative_eq!(risk(1, 0.7), 0.3, epsilon = 1e-15);
        assert_eq!(risk(0, 0.7), 0.7);
        assert_eq!(risk(1, 1.0), 0.0);
    }

    #[test]
    fn informative_prior_examples() {
        let p = informative_prior(0.5, 1.0 / 12.0).unwrap();
        assert_relative_eq!(p.alpha, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.beta, 1.0, epsilon = 1e-12);
        let p = informative_prior(0.5, 0.05).unwrap();
        assert_relative_eq!(p.alpha, 2.0, epsilon = 1e-12);
        assert_relative_eq!(p.beta, 2.0, epsilon = 1e-12);
        assert_relative_eq!(p.variance(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn informative_prior_errors() {
        assert!(matches!(
            informative_prior(0.8, 0.2),
            Err(Error::InfeasibleVariance { .. })
        ));
        assert!(matches!(
            informative_prior(0.8, 0.16),
            Err(Error::InfeasibleVariance { .. })
        ));
        assert!(matches!(
            informative_prior(0.0, 0.1),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            informative_prior(1.0, 0.1),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn no_prior_is_majority_vote() {
        let p = no_prior();
        let post = BetaParams {
            alpha: p.alpha + 3.0,
            beta: p.beta + 2.0,
        };
        assert_eq!(classify(post), 1);
        let post = BetaParams {
            alpha: p.alpha + 2.0,
            beta: p.beta + 3.0,
        };
        assert_eq!(classify(post), 0);
        // No neighbors: tie, label 1.
        assert_eq!(classify(p), 1);
    }
}
