use rand::distributions::Distribution;
use serde::Serialize;

use super::{attacker_coin, trial_rng, Estimate};
use crate::analytic::GapDistribution;
use crate::error::{Error, Result};
use crate::params::AttackerParams;

const BATCHES: u64 = 100;

/// Occupancy of the reflected gap walk along one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSummary {
    pub steps: u64,
    pub final_gap: u64,
    pub max_gap: u64,
    /// `occupancy[n]` counts the steps after which the gap was `n`.
    pub occupancy: Vec<u64>,
    /// Per-batch occupancy, used for batch-means standard errors.
    batches: Vec<Vec<u64>>,
}

impl WalkSummary {
    fn estimate(&self, pick: impl Fn(&[u64]) -> u64) -> Estimate {
        let total = pick(&self.occupancy) as f64 / self.steps as f64;
        let means: Vec<f64> = self
            .batches
            .iter()
            .map(|b| pick(b) as f64 / b.iter().sum::<u64>().max(1) as f64)
            .collect();
        let m = means.len() as f64;
        let var = if m > 1.0 {
            means.iter().map(|x| (x - total).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean: total,
            std_error: (var / m).sqrt(),
            samples: self.steps,
        }
    }

    /// Fraction of time at gap `n`.
    pub fn mass(&self, n: u64) -> Estimate {
        self.estimate(|h| h.get(n as usize).copied().unwrap_or(0))
    }

    /// Fraction of time at gap `>= n`.
    pub fn tail(&self, n: u64) -> Estimate {
        self.estimate(|h| h.iter().skip(n as usize).sum())
    }
}

fn bump(hist: &mut Vec<u64>, gap: u64) {
    let i = gap as usize;
    if hist.len() <= i {
        hist.resize(i + 1, 0);
    }
    hist[i] += 1;
}

/// Runs the attacker's pre-mining lead as a walk that steps right with
/// probability `alpha` and left otherwise, staying put at the origin.
pub fn walk_oracle(params: &AttackerParams, steps: u64, seed: u64) -> Result<WalkSummary> {
    GapDistribution::new(params)?;
    if steps == 0 {
        return Err(Error::ParamDomain {
            field: "steps",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let coin = attacker_coin(params);
    let mut rng = trial_rng(seed, 0);
    let batch_len = steps.div_ceil(BATCHES);
    let mut occupancy = Vec::new();
    let mut batches = Vec::new();
    let mut batch = Vec::new();
    let (mut gap, mut max_gap) = (0u64, 0u64);
    for step in 0..steps {
        if coin.sample(&mut rng) {
            gap += 1;
            max_gap = max_gap.max(gap);
        } else {
            gap = gap.saturating_sub(1);
        }
        bump(&mut occupancy, gap);
        bump(&mut batch, gap);
        if (step + 1) % batch_len == 0 {
            batches.push(std::mem::take(&mut batch));
        }
    }
    if !batch.is_empty() {
        batches.push(batch);
    }
    Ok(WalkSummary {
        steps,
        final_gap: gap,
        max_gap,
        occupancy,
        batches,
    })
}

/// Upper bound on the burn-in length searched by [`stationary_burn_in`].
pub const MAX_BURN_IN: u32 = 1_000_000;

/// Fewest walk steps from gap 0 after which the total-variation distance to
/// the stationary law is below `tv_tol`, by exact propagation of the law.
pub fn stationary_burn_in(params: &AttackerParams, tv_tol: f64) -> Result<u64> {
    let gap = GapDistribution::new(params)?;
    if tv_tol.is_nan() || tv_tol <= 0.0 {
        return Err(Error::ParamDomain {
            field: "tv_tol",
            value: tv_tol,
            expected: "> 0",
        });
    }
    let alpha = params.alpha;
    let mut law = vec![1.0];
    let mut next = Vec::new();
    for step in 1..=MAX_BURN_IN as u64 {
        next.clear();
        next.resize(law.len() + 1, 0.0);
        for (n, &p) in law.iter().enumerate() {
            next[n + 1] += alpha * p;
            next[n.saturating_sub(1)] += (1.0 - alpha) * p;
        }
        std::mem::swap(&mut law, &mut next);
        let support = law.len() as u64;
        let inside: f64 = law
            .iter()
            .enumerate()
            .map(|(n, &p)| (p - gap.mass(n as u64)).abs())
            .sum();
        if 0.5 * (inside + gap.tail(support)) < tv_tol {
            return Ok(step);
        }
    }
    Err(Error::NoThreshold { cap: MAX_BURN_IN })
}
