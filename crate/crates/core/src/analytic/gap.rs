use crate::error::{Error, Result};
use crate::params::AttackerParams;

/// Stationary law of the reflected attacker-lead walk, which dominates the
/// attacker's pre-mined gap at any fixed time:
/// `p_n = (1 - 2a)/(1 - a) * (a/(1 - a))^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDistribution {
    alpha: f64,
    odds: f64,
}

impl GapDistribution {
    pub fn new(params: &AttackerParams) -> Result<Self> {
        if params.alpha >= 0.5 {
            return Err(Error::MajorityAttacker {
                alpha: params.alpha,
            });
        }
        Ok(Self {
            alpha: params.alpha,
            odds: params.odds(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn odds(&self) -> f64 {
        self.odds
    }

    pub fn mass(&self, n: u64) -> f64 {
        (1.0 - 2.0 * self.alpha) / (1.0 - self.alpha) * self.tail(n)
    }

    /// `Pr(gap >= n) = (a/(1 - a))^n`.
    pub fn tail(&self, n: u64) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.odds.powf(n as f64)
        }
    }
}

/// Upper bound on the probability that the pre-mined gap is at least `n`.
pub fn premined_gap_tail(params: &AttackerParams, n: u64) -> Result<f64> {
    Ok(GapDistribution::new(params)?.tail(n))
}

/// Probability that a walk stepping +1 w.p. `alpha` and -1 otherwise ever
/// climbs `deficit` levels.
pub fn catchup_prob(params: &AttackerParams, deficit: i64) -> Result<f64> {
    let gap = GapDistribution::new(params)?;
    Ok(if deficit <= 0 { 1.0 } else { gap.tail(deficit as u64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64) -> AttackerParams {
        AttackerParams::with_alpha(alpha).unwrap()
    }

    #[test]
    fn tail_examples() {
        assert_eq!(premined_gap_tail(&params(1.0 / 3.0), 0).unwrap(), 1.0);
        assert!((premined_gap_tail(&params(1.0 / 3.0), 2).unwrap() - 0.25).abs() < 1e-15);
        let v = premined_gap_tail(&params(0.3), 5).unwrap();
        assert!((v - 243.0 / 16807.0).abs() < 1e-15);
    }

    #[test]
    fn catchup_examples() {
        assert_eq!(catchup_prob(&params(0.2), 0).unwrap(), 1.0);
        assert_eq!(catchup_prob(&params(0.2), -4).unwrap(), 1.0);
        assert!((catchup_prob(&params(1.0 / 3.0), 3).unwrap() - 0.125).abs() < 1e-15);
        assert!((catchup_prob(&params(0.1), 2).unwrap() - 1.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn majority_rejected() {
        assert!(matches!(
            catchup_prob(&params(0.5), 1),
            Err(Error::MajorityAttacker { .. })
        ));
        assert!(premined_gap_tail(&params(0.7), 1).is_err());
    }

    #[test]
    fn mass_partial_sums_and_tail_identity() {
        for alpha in [0.01, 0.1, 0.25, 0.4, 0.49] {
            let g = GapDistribution::new(&params(alpha)).unwrap();
            let mut partial = 0.0;
            let mut n = 0;
            while g.tail(n) > 1e-14 {
                assert!((g.tail(n) - (1.0 - partial)).abs() < 1e-12, "alpha {alpha} n {n}");
                assert!(g.mass(n + 1) < g.mass(n));
                partial += g.mass(n);
                n += 1;
            }
            assert!((partial - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn catchup_recursion() {
        for alpha in [0.05, 0.3, 0.45] {
            let p = params(alpha);
            for d in 1..30 {
                let lhs = catchup_prob(&p, d + 1).unwrap();
                let rhs = catchup_prob(&p, d).unwrap() * p.odds();
                assert!((lhs - rhs).abs() <= 1e-13 * rhs);
            }
        }
    }
}
