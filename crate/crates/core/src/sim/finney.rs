use rand::distributions::{Bernoulli, Distribution};
use rand_chacha::ChaCha8Rng;

use super::{
    attacker_coin, max_useful_deficit, trial_rng, Estimate, SimConfig, SimReport, RNG_ID,
};
use crate::analytic::GapDistribution;
use crate::error::Result;

/// Stream offset separating the campaign trials from the race trials.
const CAMPAIGN_STREAM: u64 = 1 << 40;

enum Race {
    Won,
    Lost,
    Abandoned,
    Truncated,
}

/// Pre-mining race against an honest block with `k` confirmations.
///
/// Starts from the attacker's current `lead`; the first honest block is the
/// target. Won once the target has `k` confirmations (itself included) and
/// the attacker is strictly ahead.
fn race(
    rng: &mut ChaCha8Rng,
    coin: &Bernoulli,
    mut lead: i64,
    k: u32,
    max_steps: u64,
    max_deficit: i64,
) -> Race {
    let mut confs = 0u32;
    for _ in 0..max_steps {
        if coin.sample(rng) {
            lead += 1;
        } else {
            lead -= 1;
            confs = confs.saturating_add(1);
        }
        if confs >= k && lead >= 1 {
            return Race::Won;
        }
        if 1 - lead > max_deficit {
            return if max_deficit == 0 { Race::Lost } else { Race::Abandoned };
        }
    }
    Race::Truncated
}

/// Pre-mining attack against a `k`-confirmation merchant.
///
/// `success_prob` is the arbitrary-block experiment: the attacker's lead is
/// burned in to stationarity, then it races the next honest block without
/// giving up. `conditional_success` is the full campaign, which only
/// releases the transaction once the attacker is `k + 1` blocks ahead.
pub fn simulate_finney_premine(config: &SimConfig, k: u32) -> Result<SimReport> {
    config.validate()?;
    let k = config.constant_k(k)?;
    let params = config.params;
    GapDistribution::new(&params)?;
    let coin = attacker_coin(&params);
    let max_deficit = max_useful_deficit(&params);

    let (mut wins, mut truncated, mut abandoned) = (0u64, 0u64, 0u64);
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let mut gap = 0i64;
        for _ in 0..config.burn_in_steps {
            if coin.sample(&mut rng) {
                gap += 1;
            } else if gap > 0 {
                gap -= 1;
            }
        }
        match race(&mut rng, &coin, gap, k, config.max_steps_per_trial, max_deficit) {
            Race::Won => wins += 1,
            Race::Lost => {}
            Race::Abandoned => abandoned += 1,
            Race::Truncated => truncated += 1,
        }
    }

    let (mut campaign_wins, mut campaigns) = (0u64, 0u64);
    let (mut premined, mut premine_blocks) = (0u64, 0u64);
    if params.alpha > 0.0 {
        for trial in 0..config.conditional_trials {
            let mut rng = trial_rng(config.seed, CAMPAIGN_STREAM + trial);
            let target = k as i64 + 1;
            let mut lead = 0i64;
            let mut steps = 0u64;
            while lead < target && steps < config.max_steps_per_trial {
                steps += 1;
                if coin.sample(&mut rng) {
                    lead += 1;
                } else if lead > 0 {
                    lead -= 1;
                }
            }
            campaigns += 1;
            if lead < target {
                truncated += 1;
                continue;
            }
            premined += 1;
            premine_blocks += steps;
            let budget = config.max_steps_per_trial - steps;
            match race(&mut rng, &coin, lead, k, budget, max_deficit) {
                Race::Won => campaign_wins += 1,
                Race::Truncated => truncated += 1,
                Race::Abandoned => abandoned += 1,
                Race::Lost => {}
            }
        }
    }
    Ok(SimReport {
        experiment: "finney_premine".into(),
        config: *config,
        k,
        rng: RNG_ID.into(),
        success_prob: Estimate::proportion(wins, config.trials),
        conditional_success: (campaigns > 0).then(|| Estimate::proportion(campaign_wins, campaigns)),
        fraction_reversed: None,
        mean_premine_duration_blocks: (premined > 0).then(|| premine_blocks as f64 / premined as f64),
        trials_truncated: truncated,
        trials_abandoned: abandoned,
        containment_violations: None,
    })
}
