use rand::distributions::Distribution;

use super::{attacker_coin, trial_rng, Estimate, RatioSums, SimConfig, SimReport, RNG_ID};
use crate::analytic::GapDistribution;
use crate::error::Result;

/// Vector76 attack on a non-relaying light client that waits for `k`
/// confirmations.
///
/// Each trial is one attempt: the attacker mines a secret branch from the
/// current tip and gives up once the public chain is longer. The attack
/// succeeds as soon as the branch has `k` blocks and leads the public chain.
/// The same block sequence drives a pre-mining attempt, which needs a lead
/// of `k + 1`; trials where that one wins but Vector76 does not are counted
/// in `containment_violations`.
///
/// `fraction_reversed` is the long-run number of attacker blocks that end
/// up with `k` confirmations on a leading branch, per block mined by anyone.
pub fn simulate_vector76(config: &SimConfig, k: u32) -> Result<SimReport> {
    config.validate()?;
    let k = config.constant_k(k)?;
    let params = config.params;
    GapDistribution::new(&params)?;
    let coin = attacker_coin(&params);
    let (k_len, finney_lead) = (k as u64, k as i64 + 1);

    let (mut wins, mut truncated, mut violations) = (0u64, 0u64, 0u64);
    let mut blocks = RatioSums::default();
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let (mut a, mut h) = (0u64, 0u64);
        let (mut v76, mut finney) = (false, false);
        let mut best_lead_len = 0u64;
        let mut decided = false;
        for _ in 0..config.max_steps_per_trial {
            if coin.sample(&mut rng) {
                a += 1;
            } else {
                h += 1;
            }
            if a > h {
                best_lead_len = best_lead_len.max(a);
                v76 |= a >= k_len;
            }
            finney |= a as i64 - h as i64 >= finney_lead;
            if finney || a < h {
                decided = true;
                break;
            }
        }
        if !decided {
            truncated += 1;
        }
        wins += u64::from(v76);
        violations += u64::from(finney && !v76);
        let attacked = (best_lead_len + 1).saturating_sub(k_len);
        blocks.push(attacked as f64, (a + h) as f64);
    }

    Ok(SimReport {
        experiment: "vector76".into(),
        config: *config,
        k,
        rng: RNG_ID.into(),
        success_prob: Estimate::proportion(wins, config.trials),
        conditional_success: None,
        fraction_reversed: Some(blocks.estimate()),
        mean_premine_duration_blocks: None,
        trials_truncated: truncated,
        trials_abandoned: 0,
        containment_violations: Some(violations),
    })
}
