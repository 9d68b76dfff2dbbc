use std::fmt;

use serde::{Deserialize, Serialize};

/// The four moves available to an attacker racing a secret branch.
///
/// Declaration order is also the tie-break preference used when two actions
/// have equal value: the earlier variant wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackAction {
    /// Abandon the secret branch and mine on the honest tip.
    Adopt,
    /// Do nothing and wait for the next block.
    Wait,
    /// Publish a branch of the same length as the honest chain.
    Match,
    /// Publish a strictly longer branch.
    Override,
}

impl AttackAction {
    pub const ALL: [AttackAction; 4] = [Self::Adopt, Self::Wait, Self::Match, Self::Override];

    pub fn initial(self) -> char {
        match self {
            Self::Adopt => 'a',
            Self::Wait => 'w',
            Self::Match => 'm',
            Self::Override => 'o',
        }
    }

    pub fn from_initial(c: char) -> Option<Self> {
        match c {
            'a' => Some(Self::Adopt),
            'w' => Some(Self::Wait),
            'm' => Some(Self::Match),
            'o' => Some(Self::Override),
            _ => None,
        }
    }
}

impl fmt::Display for AttackAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Adopt => "adopt",
            Self::Wait => "wait",
            Self::Match => "match",
            Self::Override => "override",
        };
        f.write_str(name)
    }
}
