use super::arb::check_epsilon;
use super::gap::GapDistribution;
use super::numeric::{ascending_sum, ln_negbin, tail_sum};
use super::{RobustBound, DEFAULT_SEARCH_CAP, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::params::AttackerParams;
use crate::policy::RobustnessKind;

/// Probability that an arbitrary attacker block ends up with `k_confs`
/// confirmations on a branch at least as long as the honest chain, which is
/// what a Vector76 attack on a non-relaying light client needs.
///
/// Ties are counted as wins, so the result holds for every gamma.
pub fn vector76_block_prob(params: &AttackerParams, k_confs: u32) -> Result<(f64, f64)> {
    vector76_block_prob_with_tol(params, k_confs, DEFAULT_TOL)
}

pub fn vector76_block_prob_with_tol(
    params: &AttackerParams,
    k_confs: u32,
    tol: f64,
) -> Result<(f64, f64)> {
    if k_confs == 0 {
        return Err(Error::Config("confirmation count must be >= 1".into()));
    }
    if params.alpha >= 0.5 {
        return Err(Error::MajorityAttacker {
            alpha: params.alpha,
        });
    }
    if params.alpha == 0.0 {
        return Ok((0.0, 0.0));
    }
    let gap = GapDistribution::new(params)?;
    let alpha = params.alpha;
    let (ln_a, ln_h, ln_odds) = (alpha.ln(), (1.0 - alpha).ln(), gap.odds().ln());
    let k = k_confs as u64;

    let mut outer = Vec::new();
    let mut truncation_error = 0.0;
    let mut l = 0u64;
    loop {
        let tail = gap.tail(l);
        if tail < tol {
            // Each bracket is at most 1, so the unsummed mass bounds the rest.
            truncation_error += tail;
            break;
        }
        // n honest blocks while the attacker builds the k confirmations;
        // with l + k >= n the attacker is level or ahead.
        let mut inner: Vec<f64> = (0..=k + l).map(|n| ln_negbin(n, k, ln_a, ln_h).exp()).collect();
        // Otherwise catch up n - l - k levels.
        let (behind, rem) = tail_sum(
            k + l + 1,
            |n| ln_negbin(n, k, ln_a, ln_h) + (n - l - k) as f64 * ln_odds,
            |n| alpha * (n + k) as f64 / (n + 1) as f64,
            tol,
        );
        inner.push(behind);
        let weight = gap.mass(l);
        outer.push(weight * ascending_sum(&mut inner));
        truncation_error += weight * rem;
        l += 1;
    }
    Ok((ascending_sum(&mut outer), truncation_error))
}

/// Fractional-robustness bound for a light client waiting `k_confs`
/// confirmations: the per-block probability divided by `1 - alpha`, the
/// minimum growth rate of the longest chain.
pub fn spv_attack_bound(params: &AttackerParams, k_confs: u32) -> Result<RobustBound> {
    let (g, err) = vector76_block_prob(params, k_confs)?;
    let scale = 1.0 / (1.0 - params.alpha);
    Ok(RobustBound {
        kind: RobustnessKind::FractionalRobust,
        value: (g * scale).clamp(0.0, 1.0),
        confirmations: k_confs,
        params: *params,
        truncation_error: err * scale,
    })
}

/// Smallest `k` whose light-client per-block probability is below
/// `epsilon * (1 - alpha)`. Valid for every gamma.
pub fn sigma_spv(params: &AttackerParams, epsilon: f64) -> Result<u32> {
    sigma_spv_with_cap(params, epsilon, DEFAULT_SEARCH_CAP)
}

pub fn sigma_spv_with_cap(params: &AttackerParams, epsilon: f64, cap: u32) -> Result<u32> {
    check_epsilon(epsilon)?;
    GapDistribution::new(params)?;
    let threshold = epsilon * (1.0 - params.alpha);
    super::first_below(cap, |k| Ok(vector76_block_prob(params, k)?.0 < threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(alpha: f64, k: u32) -> f64 {
        vector76_block_prob(&AttackerParams::with_alpha(alpha).unwrap(), k)
            .unwrap()
            .0
    }

    #[test]
    fn vanishes_with_alpha() {
        assert_eq!(g(0.0, 1), 0.0);
        assert!(g(1e-6, 1) < 1e-5);
        assert!(g(1e-6, 3) < 1e-15);
        let p = AttackerParams::with_alpha(1e-6).unwrap();
        assert_eq!(sigma_spv(&p, 0.01).unwrap(), 1);
    }

    #[test]
    fn decreasing_in_k_increasing_in_alpha() {
        for alpha in [0.05, 0.2, 0.35] {
            for k in 1..15 {
                assert!(g(alpha, k + 1) < g(alpha, k));
            }
        }
        for k in [1, 3, 6] {
            assert!(g(0.1, k) < g(0.2, k));
            assert!(g(0.2, k) < g(0.3, k));
        }
    }

    #[test]
    fn bound_is_scaled_and_tagged() {
        let p = AttackerParams::with_alpha(0.2).unwrap();
        let b = spv_attack_bound(&p, 3).unwrap();
        assert_eq!(b.kind, RobustnessKind::FractionalRobust);
        assert!((b.value - g(0.2, 3) / 0.8).abs() < 1e-15);
        assert!(b.truncation_error < 1e-9);
    }

    #[test]
    fn sigma_spv_is_threshold() {
        let p = AttackerParams::with_alpha(0.2).unwrap();
        let k = sigma_spv(&p, 0.01).unwrap();
        assert!(g(0.2, k) < 0.01 * 0.8);
        assert!(g(0.2, k - 1) >= 0.01 * 0.8);
        // gamma is irrelevant
        let q = AttackerParams::new(0.2, 1.0).unwrap();
        assert_eq!(sigma_spv(&q, 0.01).unwrap(), k);
    }

    #[test]
    fn sigma_spv_non_increasing_in_epsilon() {
        let p = AttackerParams::with_alpha(0.3).unwrap();
        let mut last = u32::MAX;
        for eps in [1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let k = sigma_spv(&p, eps).unwrap();
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn majority_rejected() {
        let p = AttackerParams::with_alpha(0.5).unwrap();
        assert!(spv_attack_bound(&p, 2).is_err());
        assert!(sigma_spv(&p, 0.1).is_err());
    }
}
