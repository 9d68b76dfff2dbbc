//! Combined selfish-mining and double-spend attacks.
//!
//! The attacker earns one unit per block of its own that ends up in the
//! main chain and a bonus of `R` units whenever a publication reverses at
//! least one accepted block. Revenue is normalized by the growth of the main
//! chain, so honest mining earns exactly `alpha`.
//!
//! The transition skeleton is the attack MDP's; the reward table is a
//! reconstruction. With [`DoubleSpendReward::PerBlock`] the bonus is paid
//! for every reversed accepted block instead of once per publication.

use serde::{Deserialize, Serialize};

use crate::action::AttackAction;
use crate::error::{Error, Result};
use crate::mdp::{solve_graph, MdpGraph, MdpState, Outcome, RatioReward, SolveResult, SolverOptions};
use crate::params::{validate_params, AttackerParams};

pub const DEFAULT_DS_REWARD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoubleSpendReward {
    /// `R` once per override or match that reverses an accepted block.
    #[default]
    PerEvent,
    /// `R` for each reversed accepted block.
    PerBlock,
}

/// Revenue and main-chain growth of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ProfitReward {
    pub revenue: f64,
    pub growth: u32,
}

impl RatioReward for ProfitReward {
    fn numerator(&self) -> f64 {
        self.revenue
    }

    fn denominator(&self) -> f64 {
        self.growth as f64
    }
}

#[derive(Debug, Clone)]
pub struct ProfitModel {
    pub k: u32,
    pub ds_reward: f64,
    pub bonus: DoubleSpendReward,
    pub graph: MdpGraph<ProfitReward>,
}

impl ProfitModel {
    pub fn params(&self) -> &AttackerParams {
        self.graph.params()
    }
}

/// Reward of one transition. Publishing over `h` honest blocks reverses
/// `h + 1 - k` accepted ones.
pub fn profit_reward(
    k: u32,
    ds_reward: f64,
    bonus: DoubleSpendReward,
    s: &MdpState,
    action: AttackAction,
    outcome: Outcome,
) -> ProfitReward {
    let h = s.h;
    let reversed = (h + 1).saturating_sub(k);
    let extra = match bonus {
        DoubleSpendReward::PerEvent if reversed > 0 => ds_reward,
        DoubleSpendReward::PerEvent => 0.0,
        DoubleSpendReward::PerBlock => ds_reward * reversed as f64,
    };
    match (action, outcome) {
        (AttackAction::Adopt, _) => ProfitReward {
            revenue: 0.0,
            growth: h,
        },
        (AttackAction::Override, _) => ProfitReward {
            revenue: (h + 1) as f64 + extra,
            growth: h + 1,
        },
        (AttackAction::Match | AttackAction::Wait, Outcome::HonestOnAttacker) => ProfitReward {
            revenue: h as f64 + extra,
            growth: h,
        },
        _ => ProfitReward::default(),
    }
}

pub fn build_profit_mdp(
    k: u32,
    params: AttackerParams,
    ds_reward: f64,
    max_len: u32,
) -> Result<ProfitModel> {
    build_profit_mdp_with(k, params, ds_reward, max_len, DoubleSpendReward::default())
}

pub fn build_profit_mdp_with(
    k: u32,
    params: AttackerParams,
    ds_reward: f64,
    max_len: u32,
    bonus: DoubleSpendReward,
) -> Result<ProfitModel> {
    let params = validate_params(params, false)?;
    if !(ds_reward >= 0.0 && ds_reward.is_finite()) {
        return Err(Error::ParamDomain {
            field: "ds_reward",
            value: ds_reward,
            expected: "finite and >= 0",
        });
    }
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if max_len < k + 2 {
        return Err(Error::Config(format!(
            "max_len = {max_len} must be at least k + 2 = {}",
            k + 2
        )));
    }
    let graph = MdpGraph::build(params, max_len, |s, a, o| {
        profit_reward(k, ds_reward, bonus, s, a, o)
    })?;
    Ok(ProfitModel {
        k,
        ds_reward,
        bonus,
        graph,
    })
}

/// Optimal normalized revenue; compare `value` against `alpha`.
pub fn solve_profit(model: &ProfitModel, tol: f64) -> Result<SolveResult> {
    solve_graph(
        &model.graph,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitPoint {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub ds_reward: f64,
    pub k: u32,
    pub revenue: f64,
    pub honest_baseline: f64,
}

impl ProfitPoint {
    pub const CSV_HEADER: &'static str = "alpha,gamma,R,k,revenue,honest_baseline";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.8},{}",
            self.alpha, self.gamma, self.ds_reward, self.k, self.revenue, self.honest_baseline
        )
    }
}

/// Revenue over a sweep of attacker sizes at fixed `gamma`, `R` and `k`.
pub fn profit_curve(
    alphas: &[f64],
    gamma: f64,
    ds_reward: f64,
    k: u32,
    max_len: u32,
    tol: f64,
) -> Result<Vec<ProfitPoint>> {
    alphas
        .iter()
        .map(|&alpha| {
            let params = AttackerParams::new(alpha, gamma)?;
            let model = build_profit_mdp(k, params, ds_reward, max_len)?;
            let revenue = solve_profit(&model, tol)?.value;
            Ok(ProfitPoint {
                alpha,
                gamma,
                ds_reward,
                k,
                revenue,
                honest_baseline: alpha,
            })
        })
        .collect()
}

pub fn curve_to_csv(points: &[ProfitPoint]) -> String {
    let mut out = String::from(ProfitPoint::CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}
