//! Attack MDP against a constant-confirmation merchant, its ratio solver and
//! the optimal-action tables.

mod model;
mod solve;
mod table;

pub use model::{
    attack_reward, build_attack_mdp, build_attack_mdp_with, AttackReward, Choice, ForkStatus,
    MdpGraph, MdpModel, MdpState, Normalization, Outcome, RatioReward, RewardPair, Transition,
    DEFAULT_MAX_LEN,
};
pub use solve::{action_values, policy_ratio, solve_graph, solve_ratio, SolveResult, SolverOptions};
pub use table::{extract_policy_table, mark_reachability, PolicyCell, PolicyTable};
