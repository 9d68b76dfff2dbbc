//! Seeded Monte Carlo simulations of block races.
//!
//! Time advances one block at a time; each block is the attacker's with
//! probability `alpha`. Every trial draws from its own ChaCha8 stream
//! (`seed`, trial index), so reports are reproducible and do not depend on
//! the order trials are run in.

mod finney;
mod history;
mod vector76;
mod walk;

use rand::distributions::Bernoulli;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{validate_params, AttackerParams};
use crate::policy::AcceptancePolicy;

pub use finney::simulate_finney_premine;
pub use history::{simulate_histories, simulate_total_policy, HistoryReport};
pub use vector76::simulate_vector76;
pub use walk::{stationary_burn_in, walk_oracle, WalkSummary};

/// Generator used by every simulation, echoed in reports.
pub const RNG_ID: &str = "rand_chacha 0.3 ChaCha8Rng, seed_from_u64(seed), stream = trial index";

pub const DEFAULT_BURN_IN: u64 = 10_000;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_CONDITIONAL_TRIALS: u64 = 1_000;

fn default_burn_in() -> u64 {
    DEFAULT_BURN_IN
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

fn default_conditional_trials() -> u64 {
    DEFAULT_CONDITIONAL_TRIALS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: AttackerParams,
    pub policy: AcceptancePolicy,
    pub trials: u64,
    pub seed: u64,
    /// Reflected-walk steps before the target block, to reach the
    /// stationary pre-mined gap.
    #[serde(default = "default_burn_in")]
    pub burn_in_steps: u64,
    /// Trials still undecided after this many blocks count as failures.
    #[serde(default = "default_max_steps")]
    pub max_steps_per_trial: u64,
    /// Trials of the full pre-mining campaign in the Finney experiment.
    #[serde(default = "default_conditional_trials")]
    pub conditional_trials: u64,
}

impl SimConfig {
    pub fn new(params: AttackerParams, policy: AcceptancePolicy, trials: u64, seed: u64) -> Self {
        Self {
            params,
            policy,
            trials,
            seed,
            burn_in_steps: DEFAULT_BURN_IN,
            max_steps_per_trial: DEFAULT_MAX_STEPS,
            conditional_trials: DEFAULT_CONDITIONAL_TRIALS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_params(self.params, false)?;
        for (field, value) in [
            ("trials", self.trials),
            ("burn_in_steps", self.burn_in_steps),
            ("max_steps_per_trial", self.max_steps_per_trial),
        ] {
            if value == 0 {
                return Err(Error::ParamDomain {
                    field,
                    value: 0.0,
                    expected: ">= 1",
                });
            }
        }
        Ok(())
    }

    /// The confirmation count of a constant policy, checked against `k`.
    fn constant_k(&self, k: u32) -> Result<u32> {
        match self.policy {
            AcceptancePolicy::Constant { k: pk } if pk == k => Ok(k),
            other => Err(Error::Config(format!(
                "experiment needs the constant policy k = {k}, config has {other}"
            ))),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// Proportion of `successes` among `samples` Bernoulli trials.
    pub fn proportion(successes: u64, samples: u64) -> Self {
        if samples == 0 {
            return Self {
                mean: 0.0,
                std_error: 0.0,
                samples,
            };
        }
        let n = samples as f64;
        let p = successes as f64 / n;
        let var = if samples > 1 { p * (1.0 - p) * n / (n - 1.0) } else { 0.0 };
        Self {
            mean: p,
            std_error: (var / n).sqrt(),
            samples,
        }
    }

    /// Whether `value` lies within `z` standard errors.
    pub fn covers(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.std_error
    }
}

/// Running sums for a ratio of per-trial totals, `sum x / sum y`, with a
/// delta-method standard error.
#[derive(Debug, Clone, Copy, Default)]
struct RatioSums {
    n: u64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
}

impl RatioSums {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.x += x;
        self.y += y;
        self.xx += x * x;
        self.yy += y * y;
        self.xy += x * y;
    }

    fn estimate(&self) -> Estimate {
        if self.y == 0.0 {
            return Estimate {
                mean: 0.0,
                std_error: 0.0,
                samples: self.n,
            };
        }
        let n = self.n as f64;
        let r = self.x / self.y;
        let y_bar = self.y / n;
        // sum of (x - r y)^2
        let resid = self.xx - 2.0 * r * self.xy + r * r * self.yy;
        let var = if self.n > 1 { resid.max(0.0) / (n - 1.0) } else { 0.0 };
        Estimate {
            mean: r,
            std_error: (var / n).sqrt() / y_bar,
            samples: self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub experiment: String,
    pub config: SimConfig,
    pub k: u32,
    pub rng: String,
    pub success_prob: Estimate,
    /// Success of the full pre-mining campaign once the transaction is out.
    pub conditional_success: Option<Estimate>,
    /// Attacker blocks that took part in a successful attack, per mined
    /// block.
    pub fraction_reversed: Option<Estimate>,
    pub mean_premine_duration_blocks: Option<f64>,
    pub trials_truncated: u64,
    /// Trials stopped once the remaining catch-up probability fell below
    /// [`ABANDON_PROB`]; counted as failures.
    pub trials_abandoned: u64,
    /// Trials where the pre-mining attack won but Vector76 did not.
    pub containment_violations: Option<u64>,
}

/// Races whose remaining success probability is below this are stopped.
pub const ABANDON_PROB: f64 = 1e-12;

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn attacker_coin(params: &AttackerParams) -> Bernoulli {
    Bernoulli::new(params.alpha).expect("alpha validated in [0, 1]")
}

/// Largest deficit still worth racing: `(alpha/(1-alpha))^d >= ABANDON_PROB`.
fn max_useful_deficit(params: &AttackerParams) -> i64 {
    let odds = params.odds();
    if odds <= 0.0 {
        0
    } else if odds >= 1.0 {
        i64::MAX
    } else {
        (ABANDON_PROB.ln() / odds.ln()).floor() as i64
    }
}
