use std::fmt;

use serde::{Deserialize, Serialize};

use crate::action::AttackAction;
use crate::error::{Error, Result};
use crate::params::{validate_params, AttackerParams};

/// Default cap on both chain lengths.
pub const DEFAULT_MAX_LEN: u32 = 60;

/// Whether the attacker could split honest mining power by matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForkStatus {
    /// The last block was the attacker's; a match is impossible.
    Irrelevant,
    /// The last block was honest; a match is possible.
    Relevant,
    /// A match is in progress and honest miners are split.
    Active,
}

impl ForkStatus {
    pub const ALL: [ForkStatus; 3] = [Self::Irrelevant, Self::Relevant, Self::Active];

    fn index(self) -> usize {
        self as usize
    }
}

/// Branch lengths above the last common block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MdpState {
    pub a: u32,
    pub h: u32,
    pub fork: ForkStatus,
}

impl MdpState {
    pub fn new(a: u32, h: u32, fork: ForkStatus) -> Self {
        Self { a, h, fork }
    }
}

impl fmt::Display for MdpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fork = match self.fork {
            ForkStatus::Irrelevant => "irrelevant",
            ForkStatus::Relevant => "relevant",
            ForkStatus::Active => "active",
        };
        write!(f, "({}, {}, {})", self.a, self.h, fork)
    }
}

/// Which block comes next after an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Attacker,
    /// Honest block on the honest branch.
    Honest,
    /// During a match, an honest miner extends the attacker's published
    /// prefix.
    HonestOnAttacker,
}

/// Block counts credited on a transition: accepted honest blocks the
/// attacker reversed, and the remaining main-chain growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RewardPair {
    pub attacker: u32,
    pub honest: u32,
}

impl RewardPair {
    pub fn new(attacker: u32, honest: u32) -> Self {
        Self { attacker, honest }
    }
}

/// A reward that can be fed to the ratio solver, which maximises
/// `E[numerator] / E[denominator]`.
pub trait RatioReward: Copy {
    fn numerator(&self) -> f64;
    fn denominator(&self) -> f64;
}

impl RatioReward for RewardPair {
    fn numerator(&self) -> f64 {
        self.attacker as f64
    }

    fn denominator(&self) -> f64 {
        (self.attacker + self.honest) as f64
    }
}

/// What the attack ratio is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Honest blocks that were ever accepted: those reversed after acceptance
    /// plus those adopted into the final chain. Blocks overridden before
    /// they had `k` confirmations were never accepted and do not count.
    #[default]
    AcceptedBlocks,
    /// Attacker plus honest entry of the reward pair, i.e. main-chain growth.
    ChainGrowth,
}

/// Reward pair of a transition together with its denominator under the
/// model's normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AttackReward {
    pub pair: RewardPair,
    pub denominator: u32,
}

impl RatioReward for AttackReward {
    fn numerator(&self) -> f64 {
        self.pair.attacker as f64
    }

    fn denominator(&self) -> f64 {
        self.denominator as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<R> {
    pub next: usize,
    pub prob: f64,
    pub outcome: Outcome,
    pub reward: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice<R> {
    pub action: AttackAction,
    pub transitions: Vec<Transition<R>>,
}

/// State space and action-labelled transitions shared by the attack and the
/// profit models; only the reward type differs.
#[derive(Debug, Clone)]
pub struct MdpGraph<R> {
    params: AttackerParams,
    max_len: u32,
    states: Vec<MdpState>,
    lookup: Vec<usize>,
    choices: Vec<Vec<Choice<R>>>,
}

const ABSENT: usize = usize::MAX;

impl<R: Copy> MdpGraph<R> {
    /// Builds the skeleton. `reward(state, action, outcome)` supplies the
    /// reward of each transition.
    pub fn build(
        params: AttackerParams,
        max_len: u32,
        reward: impl Fn(&MdpState, AttackAction, Outcome) -> R,
    ) -> Result<Self> {
        let params = validate_params(params, false)?;
        if max_len < 2 {
            return Err(Error::Config(format!("max_len = {max_len} is too small")));
        }
        let side = max_len as usize + 1;
        let mut lookup = vec![ABSENT; side * side * 3];
        let mut states = Vec::new();
        for a in 0..=max_len {
            for h in 0..=max_len {
                for fork in ForkStatus::ALL {
                    let s = MdpState::new(a, h, fork);
                    if Self::is_valid(&s) {
                        lookup[Self::slot(side, &s)] = states.len();
                        states.push(s);
                    }
                }
            }
        }
        let mut graph = Self {
            params,
            max_len,
            states,
            lookup,
            choices: Vec::new(),
        };
        let choices = graph
            .states
            .iter()
            .map(|s| graph.choices_for(s, &reward))
            .collect();
        graph.choices = choices;
        Ok(graph)
    }

    /// Relevant states follow an honest block, so `h >= 1`; a match needs
    /// the attacker at least level.
    fn is_valid(s: &MdpState) -> bool {
        match s.fork {
            ForkStatus::Irrelevant => true,
            ForkStatus::Relevant => s.h >= 1,
            ForkStatus::Active => s.h >= 1 && s.a >= s.h,
        }
    }

    fn slot(side: usize, s: &MdpState) -> usize {
        (s.a as usize * side + s.h as usize) * 3 + s.fork.index()
    }

    fn choices_for(
        &self,
        s: &MdpState,
        reward: &impl Fn(&MdpState, AttackAction, Outcome) -> R,
    ) -> Vec<Choice<R>> {
        use AttackAction::*;
        use ForkStatus::*;
        let alpha = self.params.alpha;
        let gamma = self.params.gamma;
        let (a, h) = (s.a, s.h);
        let at_cap = a == self.max_len || h == self.max_len;
        let mut out = Vec::with_capacity(4);

        let mut choice = |action, branches: &[(MdpState, f64, Outcome)]| {
            let transitions = branches
                .iter()
                .filter(|(_, p, _)| *p > 0.0)
                .map(|&(next, prob, outcome)| Transition {
                    next: self.index_of(&next).expect("successor inside truncation"),
                    prob,
                    outcome,
                    reward: reward(s, action, outcome),
                })
                .collect();
            out.push(Choice {
                action,
                transitions,
            });
        };

        choice(
            Adopt,
            &[
                (MdpState::new(1, 0, Irrelevant), alpha, Outcome::Attacker),
                (MdpState::new(0, 1, Irrelevant), 1.0 - alpha, Outcome::Honest),
            ],
        );
        if !at_cap {
            if s.fork == Active {
                choice(Wait, &match_branches(a, h, alpha, gamma));
            } else {
                choice(
                    Wait,
                    &[
                        (MdpState::new(a + 1, h, Irrelevant), alpha, Outcome::Attacker),
                        (honest_extends(a, h), 1.0 - alpha, Outcome::Honest),
                    ],
                );
            }
            if s.fork == Relevant && a >= h {
                choice(Match, &match_branches(a, h, alpha, gamma));
            }
        }
        if a > h {
            choice(
                Override,
                &[
                    (MdpState::new(a - h, 0, Irrelevant), alpha, Outcome::Attacker),
                    (MdpState::new(a - h - 1, 1, Relevant), 1.0 - alpha, Outcome::Honest),
                ],
            );
        }
        out
    }

    pub fn params(&self) -> &AttackerParams {
        &self.params
    }

    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    pub fn states(&self) -> &[MdpState] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: &MdpState) -> Option<usize> {
        if s.a > self.max_len || s.h > self.max_len {
            return None;
        }
        let side = self.max_len as usize + 1;
        match self.lookup[Self::slot(side, s)] {
            ABSENT => None,
            i => Some(i),
        }
    }

    pub fn choices(&self, state_index: usize) -> &[Choice<R>] {
        &self.choices[state_index]
    }

    pub fn choice(&self, s: &MdpState, action: AttackAction) -> Option<&Choice<R>> {
        let i = self.index_of(s)?;
        self.choices[i].iter().find(|c| c.action == action)
    }

    pub fn feasible_actions(&self, s: &MdpState) -> Vec<AttackAction> {
        self.index_of(s)
            .map(|i| self.choices[i].iter().map(|c| c.action).collect())
            .unwrap_or_default()
    }

    /// The two states an episode restarts from, with their probabilities.
    pub fn initial_distribution(&self) -> [(usize, f64); 2] {
        let start = |a, h| self.index_of(&MdpState::new(a, h, ForkStatus::Irrelevant)).unwrap();
        [(start(1, 0), self.params.alpha), (start(0, 1), 1.0 - self.params.alpha)]
    }

    /// Largest deviation of any action row from summing to one.
    pub fn max_row_defect(&self) -> f64 {
        self.choices
            .iter()
            .flatten()
            .map(|c| (c.transitions.iter().map(|t| t.prob).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Successors of a match, or of waiting while a match is active.
fn match_branches(a: u32, h: u32, alpha: f64, gamma: f64) -> [(MdpState, f64, Outcome); 3] {
    use ForkStatus::*;
    [
        (MdpState::new(a + 1, h, Active), alpha, Outcome::Attacker),
        (
            MdpState::new(a - h, 1, Relevant),
            gamma * (1.0 - alpha),
            Outcome::HonestOnAttacker,
        ),
        (honest_extends(a, h), (1.0 - gamma) * (1.0 - alpha), Outcome::Honest),
    ]
}

/// An honest block on the honest branch. The fork is labelled relevant only
/// if the attacker could still match; otherwise relevant and irrelevant
/// offer the same actions and the label carries no information.
fn honest_extends(a: u32, h: u32) -> MdpState {
    let fork = if a > h {
        ForkStatus::Relevant
    } else {
        ForkStatus::Irrelevant
    };
    MdpState::new(a, h + 1, fork)
}

/// Attack MDP against a merchant that waits for `k` confirmations. The
/// attacker is credited one unit per accepted honest block it reverses.
#[derive(Debug, Clone)]
pub struct MdpModel {
    pub k: u32,
    pub normalization: Normalization,
    pub graph: MdpGraph<AttackReward>,
}

impl MdpModel {
    pub fn params(&self) -> &AttackerParams {
        self.graph.params()
    }

    pub fn max_len(&self) -> u32 {
        self.graph.max_len()
    }
}

/// Reward of the attack MDP. Publishing over `h` honest blocks reverses the
/// `h + 1 - k` of them that had `k` confirmations; when `h < k - 1` no block
/// was accepted yet and the whole publication is honest-side growth.
pub fn attack_reward(k: u32, s: &MdpState, action: AttackAction, outcome: Outcome) -> RewardPair {
    let h = s.h;
    match (action, outcome) {
        (AttackAction::Adopt, _) => RewardPair::new(0, h),
        (AttackAction::Override, _) => {
            if h + 1 < k {
                RewardPair::new(0, h + 1)
            } else {
                RewardPair::new(h + 1 - k, k)
            }
        }
        (AttackAction::Match | AttackAction::Wait, Outcome::HonestOnAttacker) => {
            if h + 1 < k {
                RewardPair::new(0, h)
            } else {
                RewardPair::new(h + 1 - k, k - 1)
            }
        }
        _ => RewardPair::default(),
    }
}

pub fn build_attack_mdp(k: u32, params: AttackerParams, max_len: u32) -> Result<MdpModel> {
    build_attack_mdp_with(k, params, max_len, Normalization::default())
}

pub fn build_attack_mdp_with(
    k: u32,
    params: AttackerParams,
    max_len: u32,
    normalization: Normalization,
) -> Result<MdpModel> {
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if max_len < k + 2 {
        return Err(Error::Config(format!(
            "max_len = {max_len} must be at least k + 2 = {}",
            k + 2
        )));
    }
    let graph = MdpGraph::build(params, max_len, |s, action, outcome| {
        let pair = attack_reward(k, s, action, outcome);
        let denominator = match (normalization, action) {
            (Normalization::ChainGrowth, _) | (_, AttackAction::Adopt) => pair.attacker + pair.honest,
            (Normalization::AcceptedBlocks, _) => pair.attacker,
        };
        AttackReward { pair, denominator }
    })?;
    Ok(MdpModel {
        k,
        normalization,
        graph,
    })
}
