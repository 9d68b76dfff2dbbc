use serde::{Deserialize, Serialize};

use super::arb::check_epsilon;
use crate::error::{Error, Result};
use crate::params::AttackerParams;
use crate::policy::AcceptancePolicy;

/// Constants of the logarithmic totally-robust policy
/// `offset + floor(log_base(h))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalPolicyConstants {
    /// Chernoff exponent `(1/8) (1 - 2a)^2 / (1 - a)`.
    pub c: f64,
    /// Epoch base `(e^c + 1) / 2`.
    pub b_alpha: f64,
    /// Additive confirmation constant.
    pub c_eps: u32,
}

pub fn total_policy_constants(params: &AttackerParams, epsilon: f64) -> Result<TotalPolicyConstants> {
    check_epsilon(epsilon)?;
    let alpha = params.alpha;
    if alpha >= 0.5 {
        return Err(Error::MajorityAttacker { alpha });
    }
    let c = (1.0 - 2.0 * alpha).powi(2) / (1.0 - alpha) / 8.0;
    let ec = c.exp();
    let b_alpha = (ec + 1.0) / 2.0;
    debug_assert!(b_alpha < ec);
    // Union bound over epochs h in [b^i, b^(i+1)) of the per-block Chernoff tail.
    let geometric = b_alpha / (-(-c).exp_m1()) / (1.0 - b_alpha / ec);
    let c_eps = ((geometric / epsilon).ln() / c).ceil();
    if !(c_eps.is_finite() && c_eps <= u32::MAX as f64) {
        return Err(Error::NoThreshold { cap: u32::MAX });
    }
    Ok(TotalPolicyConstants {
        c,
        b_alpha,
        c_eps: c_eps.max(1.0) as u32,
    })
}

/// Logarithmic policy that no block in the whole history is ever reversed
/// except with probability below `epsilon`, for any gamma.
pub fn sigma_total(params: &AttackerParams, epsilon: f64) -> Result<AcceptancePolicy> {
    let k = total_policy_constants(params, epsilon)?;
    AcceptancePolicy::logarithmic(k.c_eps, k.b_alpha)
}
