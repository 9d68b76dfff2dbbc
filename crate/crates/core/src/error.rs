use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{field}` = {value} is outside {expected}")]
    ParamDomain {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// An attacker with at least half of the hash rate wins every race
    /// eventually; no finite confirmation count is safe.
    #[error("attacker share alpha = {alpha} is not a minority; every attack succeeds with probability 1")]
    MajorityAttacker { alpha: f64 },

    #[error("no confirmation count up to {cap} reaches the requested bound")]
    NoThreshold { cap: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergent { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
