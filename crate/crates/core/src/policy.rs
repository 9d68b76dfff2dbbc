use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many confirmations a merchant waits for before accepting a block.
///
/// A confirmation count always includes the block that carries the
/// transaction, so `evaluate` never returns 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcceptancePolicy {
    Constant { k: u32 },
    /// `offset + floor(log_base(max(h, 1)))`.
    Logarithmic { offset: u32, base: f64 },
}

impl AcceptancePolicy {
    pub fn constant(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("constant policy needs k >= 1".into()));
        }
        Ok(Self::Constant { k })
    }

    pub fn logarithmic(offset: u32, base: f64) -> Result<Self> {
        if offset == 0 {
            return Err(Error::Config("logarithmic policy needs offset >= 1".into()));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::ParamDomain {
                field: "base",
                value: base,
                expected: "(1, inf)",
            });
        }
        Ok(Self::Logarithmic { offset, base })
    }

    /// Required confirmations for a block at `height`. Height 0 is treated as
    /// height 1 so the logarithm stays defined.
    pub fn evaluate(&self, height: u64) -> u32 {
        match *self {
            Self::Constant { k } => k,
            Self::Logarithmic { offset, base } => {
                offset.saturating_add(floor_log(height.max(1), base))
            }
        }
    }
}

pub fn policy_required_confs(policy: &AcceptancePolicy, height: u64) -> u32 {
    policy.evaluate(height)
}

/// `floor(log_base(h))` for `h >= 1`, corrected against rounding at exact
/// powers of the base.
fn floor_log(h: u64, base: f64) -> u32 {
    let hf = h as f64;
    let mut q = (hf.ln() / base.ln()).floor().max(0.0) as i64;
    while q > 0 && base.powf(q as f64) > hf {
        q -= 1;
    }
    while base.powf((q + 1) as f64) <= hf {
        q += 1;
    }
    q as u32
}

impl fmt::Display for AcceptancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { k } => write!(f, "constant({k})"),
            Self::Logarithmic { offset, base } => {
                write!(f, "{offset} + floor(log_{base}(h))")
            }
        }
    }
}

/// Which robustness notion a bound certifies. Bounds of different kinds
/// answer different questions and are not comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessKind {
    /// A block whose timing the attacker did not pick is later reversed.
    ArbitraryRobust,
    /// Long-run fraction of accepted blocks that get reversed.
    FractionalRobust,
    /// Any accepted block anywhere in the history is ever reversed.
    TotallyRobust,
}
