//! Closed-form bounds: the pre-mined gap law, the arbitrary-block attack
//! probability and its policy, the light-client (Vector76) bound and its
//! policy, and the logarithmic totally-robust policy.

mod arb;
mod gap;
pub(crate) mod numeric;
mod spv;
mod total;

use serde::{Deserialize, Serialize};

pub use arb::{arb_attack_prob, arb_attack_prob_with_tol, sigma_arb, sigma_arb_with_cap};
pub use gap::{catchup_prob, premined_gap_tail, GapDistribution};
pub use spv::{
    sigma_spv, sigma_spv_with_cap, spv_attack_bound, vector76_block_prob,
    vector76_block_prob_with_tol,
};
pub use total::{sigma_total, total_policy_constants, TotalPolicyConstants};

use crate::error::{Error, Result};
use crate::params::AttackerParams;
use crate::policy::RobustnessKind;

/// Cut-off for infinite sums.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest confirmation count the threshold searches will try.
pub const DEFAULT_SEARCH_CAP: u32 = 1000;

/// A probability bound together with what it certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustBound {
    pub kind: RobustnessKind,
    pub value: f64,
    pub confirmations: u32,
    pub params: AttackerParams,
    /// Upper bound on the absolute error from cutting infinite sums.
    pub truncation_error: f64,
}

/// Smallest `n` in `1..=cap` with `pred(n)`, for a predicate that stays true
/// once it becomes true.
fn first_below(cap: u32, mut pred: impl FnMut(u32) -> Result<bool>) -> Result<u32> {
    let mut lo = 0u32; // pred(lo) false (or lo = 0)
    let mut hi = 1u32;
    loop {
        if hi > cap {
            if lo < cap && pred(cap)? {
                hi = cap;
                break;
            }
            return Err(Error::NoThreshold { cap });
        }
        if pred(hi)? {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
