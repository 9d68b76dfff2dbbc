use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attacker hash share and tie-breaking reach.
///
/// `alpha` is the fraction of total mining power controlled by the attacker.
/// `gamma` is the fraction of honest miners that build on the attacker's
/// block when two blocks of equal height race through the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl AttackerParams {
    /// Builds a checked pair. Use [`validate_params`] with `require_minority`
    /// when the caller needs `alpha < 0.5`.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        validate_params(Self { alpha, gamma }, false)
    }

    /// Shorthand for `gamma = 0`.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0)
    }

    /// The drift ratio `alpha / (1 - alpha)` of the attacker-vs-honest race.
    pub fn odds(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    pub fn is_minority(&self) -> bool {
        self.alpha < 0.5
    }
}

pub fn validate_params(params: AttackerParams, require_minority: bool) -> Result<AttackerParams> {
    if !(0.0..=1.0).contains(&params.alpha) {
        return Err(Error::ParamDomain {
            field: "alpha",
            value: params.alpha,
            expected: "[0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&params.gamma) {
        return Err(Error::ParamDomain {
            field: "gamma",
            value: params.gamma,
            expected: "[0, 1]",
        });
    }
    if require_minority && params.alpha >= 0.5 {
        return Err(Error::MajorityAttacker {
            alpha: params.alpha,
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_in_range() {
        let p = AttackerParams { alpha: 0.26, gamma: 0.5 };
        assert_eq!(validate_params(p, true).unwrap(), p);
    }

    #[test]
    fn majority_rejected_only_when_required() {
        let p = AttackerParams { alpha: 0.5, gamma: 0.0 };
        assert!(validate_params(p, false).is_ok());
        assert_eq!(
            validate_params(p, true),
            Err(Error::MajorityAttacker { alpha: 0.5 })
        );
    }

    #[test]
    fn out_of_range_names_field() {
        let err = AttackerParams::new(-0.1, 0.0).unwrap_err();
        assert!(matches!(err, Error::ParamDomain { field: "alpha", .. }));
        let err = AttackerParams::new(0.1, 1.5).unwrap_err();
        assert!(matches!(err, Error::ParamDomain { field: "gamma", .. }));
        assert!(AttackerParams::new(f64::NAN, 0.0).is_err());
    }
}
