use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use premine::sim::{
    simulate_finney_premine, simulate_histories, simulate_total_policy, simulate_vector76,
    walk_oracle, SimConfig,
};
use premine::{AcceptancePolicy, AttackerParams};

use crate::output::{to_json, Format, OutputArgs};
use crate::{CliError, CliResult};

const EXPERIMENTS: &str = "finney, vector76, total_policy, history, walk";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment description.
    config: PathBuf,
    /// Overrides `trials` from the file.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides `seed` from the file.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArgs,
}

/// Flat experiment description; which keys are needed depends on
/// `experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub alpha: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps_per_trial: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_lengths: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }

    fn need<T: Copy>(&self, value: Option<T>, key: &str) -> CliResult<T> {
        value.ok_or_else(|| {
            CliError::Usage(format!("experiment `{}` needs `{key}`", self.experiment))
        })
    }

    fn sim_config(&self, params: AttackerParams) -> CliResult<(SimConfig, u32)> {
        let k = self.need(self.k, "k")?;
        let policy = AcceptancePolicy::constant(k)?;
        let mut c = SimConfig::new(params, policy, self.need(self.trials, "trials")?, self.seed);
        if let Some(v) = self.burn_in_steps {
            c.burn_in_steps = v;
        }
        if let Some(v) = self.max_steps_per_trial {
            c.max_steps_per_trial = v;
        }
        if let Some(v) = self.conditional_trials {
            c.conditional_trials = v;
        }
        Ok((c, k))
    }

    /// Runs the experiment and returns its report as JSON.
    pub fn run(&self) -> CliResult<serde_json::Value> {
        let params = AttackerParams::new(self.alpha, self.gamma)?;
        Ok(match self.experiment.as_str() {
            "finney" => {
                let (c, k) = self.sim_config(params)?;
                json(&simulate_finney_premine(&c, k)?)
            }
            "vector76" => {
                let (c, k) = self.sim_config(params)?;
                json(&simulate_vector76(&c, k)?)
            }
            "total_policy" => json(&simulate_total_policy(
                &params,
                self.need(self.epsilon, "epsilon")?,
                self.need(self.chain_length, "chain_length")?,
                self.need(self.trials, "trials")?,
                self.seed,
            )?),
            "history" => {
                let policy = AcceptancePolicy::constant(self.need(self.k, "k")?)?;
                let lengths = self
                    .chain_lengths
                    .clone()
                    .or(self.chain_length.map(|l| vec![l]))
                    .ok_or_else(|| CliError::Usage("experiment `history` needs `chain_lengths`".into()))?;
                json(&simulate_histories(
                    &params,
                    &policy,
                    &lengths,
                    self.need(self.trials, "trials")?,
                    self.seed,
                )?)
            }
            "walk" => json(&walk_oracle(&params, self.need(self.steps, "steps")?, self.seed)?),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown experiment `{other}`; expected one of {EXPERIMENTS}"
                )))
            }
        })
    }
}

fn json<T: Serialize>(report: &T) -> serde_json::Value {
    serde_json::to_value(report).expect("reports serialize")
}

#[derive(Serialize)]
struct Envelope<'a> {
    config: &'a ExperimentConfig,
    report: serde_json::Value,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    if args.out.format_or(Format::Json) != Format::Json {
        return Err(CliError::Usage("simulate only writes json".into()));
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Usage(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(t) = args.trials {
        config.trials = Some(t);
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let report = config.run()?;
    Ok(args.out.emit(&to_json(&Envelope { config: &config, report }))?)
}
