use super::gap::GapDistribution;
use super::numeric::{ascending_sum, ln_negbin, tail_sum};
use super::{RobustBound, DEFAULT_SEARCH_CAP, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::params::AttackerParams;
use crate::policy::RobustnessKind;

/// Probability that a block whose timing the attacker did not choose is
/// reversed after `n_confs` confirmations (gamma = 0 race).
///
/// The attacker starts from a pre-mined gap `l` drawn from
/// [`GapDistribution`], mines `m` blocks while the honest chain produces the
/// `n` confirmations, and then needs to climb a deficit of `n + 1 - l - m`
/// to publish a strictly longer chain.
pub fn arb_attack_prob(params: &AttackerParams, n_confs: u32) -> Result<RobustBound> {
    arb_attack_prob_with_tol(params, n_confs, DEFAULT_TOL)
}

pub fn arb_attack_prob_with_tol(
    params: &AttackerParams,
    n_confs: u32,
    tol: f64,
) -> Result<RobustBound> {
    if n_confs == 0 {
        return Err(Error::Config("confirmation count must be >= 1".into()));
    }
    let trivial = |value| RobustBound {
        kind: RobustnessKind::ArbitraryRobust,
        value,
        confirmations: n_confs,
        params: *params,
        truncation_error: 0.0,
    };
    if params.alpha >= 0.5 {
        return Ok(trivial(1.0));
    }
    if params.alpha == 0.0 {
        return Ok(trivial(0.0));
    }

    let gap = GapDistribution::new(params)?;
    let alpha = params.alpha;
    let (ln_a, ln_h, ln_odds) = (alpha.ln(), (1.0 - alpha).ln(), gap.odds().ln());
    let n = n_confs as u64;

    // ln NB(m): m attacker blocks before the n-th honest block.
    let ln_nb: Vec<f64> = (0..=n).map(|m| ln_negbin(m, n, ln_h, ln_a)).collect();

    let mut outer = Vec::with_capacity(n as usize + 2);
    let mut truncation_error = 0.0;
    for l in 0..=n {
        // Attacker still behind after the confirmations: catch-up needed.
        let mut behind: Vec<f64> = (0..=n - l)
            .map(|m| (ln_nb[m as usize] + (n + 1 - m - l) as f64 * ln_odds).exp())
            .collect();
        // Attacker already strictly ahead: the attack succeeds outright.
        let (ahead, rem) = tail_sum(
            n - l + 1,
            |m| ln_negbin(m, n, ln_h, ln_a),
            |m| alpha * (m + n) as f64 / (m + 1) as f64,
            tol,
        );
        behind.push(ahead);
        let weight = gap.mass(l);
        outer.push(weight * ascending_sum(&mut behind));
        truncation_error += weight * rem;
    }
    // A gap l > n always leaves the attacker ahead; that mass is exactly
    // Pr(gap >= n + 1).
    outer.push(gap.tail(n + 1));

    let value = ascending_sum(&mut outer).clamp(0.0, 1.0);
    Ok(RobustBound {
        kind: RobustnessKind::ArbitraryRobust,
        value,
        confirmations: n_confs,
        params: *params,
        truncation_error,
    })
}

/// Smallest confirmation count whose arbitrary-block attack probability is
/// below `epsilon`, plus one extra confirmation when `gamma > 0`.
pub fn sigma_arb(params: &AttackerParams, epsilon: f64) -> Result<u32> {
    sigma_arb_with_cap(params, epsilon, DEFAULT_SEARCH_CAP)
}

pub fn sigma_arb_with_cap(params: &AttackerParams, epsilon: f64, cap: u32) -> Result<u32> {
    check_epsilon(epsilon)?;
    GapDistribution::new(params)?;
    let n = super::first_below(cap, |n| Ok(arb_attack_prob(params, n)?.value < epsilon))?;
    let extra = u32::from(params.gamma > 0.0);
    Ok(n + extra)
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::ParamDomain {
            field: "epsilon",
            value: epsilon,
            expected: "(0, 1)",
        })
    }
}
