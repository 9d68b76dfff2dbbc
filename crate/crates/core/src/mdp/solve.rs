use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{MdpGraph, MdpModel, MdpState, RatioReward};
use crate::action::AttackAction;
use crate::error::{Error, Result};

/// Knobs for [`solve_graph`]. `Default` matches [`solve_ratio`] with
/// `tol = 1e-6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Width at which the bisection on the ratio stops.
    pub tol: f64,
    /// Span of `TV - V` at which value iteration counts as converged.
    pub value_tol: f64,
    /// Cap on value-iteration sweeps per bisection step.
    pub max_iterations: usize,
    /// Weight of the Bellman update in `V <- (1 - t) V + t TV`; values below
    /// one make every policy aperiodic.
    pub aperiodicity: f64,
    /// Actions within this much of the best are treated as tied and broken
    /// by [`AttackAction`] order.
    pub tie_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            value_tol: 1e-11,
            max_iterations: 200_000,
            aperiodicity: 0.5,
            tie_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    /// Optimal long-run ratio, the midpoint of the final bracket.
    pub value: f64,
    pub policy: BTreeMap<MdpState, AttackAction>,
    /// Relative values at `scalarization`, indexed like the model's states.
    #[serde(skip)]
    pub bias: Vec<f64>,
    /// The ratio at which `bias` and `policy` were computed.
    pub scalarization: f64,
    /// Value-iteration sweeps over all bisection steps.
    pub iterations: usize,
    /// Span of `TV - V` at the last sweep.
    pub residual: f64,
}

impl SolveResult {
    pub fn action(&self, s: &MdpState) -> Option<AttackAction> {
        self.policy.get(s).copied()
    }
}

/// Maximises the long-run fraction of accepted blocks the attacker reverses.
pub fn solve_ratio(model: &MdpModel, tol: f64) -> Result<SolveResult> {
    solve_graph(
        &model.graph,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Flattened choice table with expected rewards per choice.
struct Compiled {
    /// Choice range of each state.
    state_start: Vec<usize>,
    /// Transition range of each choice.
    choice_start: Vec<usize>,
    actions: Vec<AttackAction>,
    num: Vec<f64>,
    den: Vec<f64>,
    next: Vec<usize>,
    prob: Vec<f64>,
}

impl Compiled {
    fn new<R: RatioReward>(graph: &MdpGraph<R>) -> Self {
        let mut c = Compiled {
            state_start: vec![0],
            choice_start: vec![0],
            actions: Vec::new(),
            num: Vec::new(),
            den: Vec::new(),
            next: Vec::new(),
            prob: Vec::new(),
        };
        for i in 0..graph.num_states() {
            for choice in graph.choices(i) {
                let (mut num, mut den) = (0.0, 0.0);
                for t in &choice.transitions {
                    num += t.prob * t.reward.numerator();
                    den += t.prob * t.reward.denominator();
                    c.next.push(t.next);
                    c.prob.push(t.prob);
                }
                c.actions.push(choice.action);
                c.num.push(num);
                c.den.push(den);
                c.choice_start.push(c.next.len());
            }
            c.state_start.push(c.actions.len());
        }
        c
    }

    fn num_states(&self) -> usize {
        self.state_start.len() - 1
    }

    fn q(&self, choice: usize, rho: f64, v: &[f64]) -> f64 {
        let range = self.choice_start[choice]..self.choice_start[choice + 1];
        let future: f64 = self.next[range.clone()]
            .iter()
            .zip(&self.prob[range])
            .map(|(&n, &p)| p * v[n])
            .sum();
        self.num[choice] - rho * self.den[choice] + future
    }

    fn choices(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s]..self.state_start[s + 1]
    }
}

/// What one run of relative value iteration established about the optimal
/// gain at a fixed ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
enum GainSign {
    Positive,
    Negative,
    /// Converged with a gain indistinguishable from zero; carries the
    /// midpoint estimate.
    Zero(f64),
}

struct Iteration {
    sign: GainSign,
    sweeps: usize,
    residual: f64,
}

/// Relative value iteration for the average reward `num - rho * den`.
/// `min (TV - V) <= g* <= max (TV - V)` holds at every sweep, so the
/// run stops as soon as the sign of the gain is settled unless `converge`
/// asks for a full solve.
fn value_iteration(
    c: &Compiled,
    rho: f64,
    v: &mut [f64],
    opts: &SolverOptions,
    converge: bool,
) -> Result<Iteration> {
    let n = c.num_states();
    let tau = opts.aperiodicity;
    let mut tv = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for sweep in 1..=opts.max_iterations {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            let best = c
                .choices(s)
                .map(|ch| c.q(ch, rho, v))
                .fold(f64::NEG_INFINITY, f64::max);
            let d = best - v[s];
            lo = lo.min(d);
            hi = hi.max(d);
            tv[s] = best;
        }
        residual = hi - lo;
        // Gain bounds scale with the magnitude of the rewards.
        let scale = 1.0 + hi.abs().max(lo.abs());
        let done = residual < opts.value_tol * scale;
        let sign = if !converge && lo > 0.0 {
            Some(GainSign::Positive)
        } else if !converge && hi < 0.0 {
            Some(GainSign::Negative)
        } else if done {
            Some(GainSign::Zero(0.5 * (lo + hi)))
        } else {
            None
        };
        let offset = tv[0];
        for s in 0..n {
            v[s] = (1.0 - tau) * v[s] + tau * (tv[s] - offset);
        }
        if let Some(sign) = sign {
            return Ok(Iteration {
                sign,
                sweeps: sweep,
                residual,
            });
        }
    }
    Err(Error::NonConvergent {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Ratio maximisation by bisection: for a candidate ratio the optimal
/// average of `num - rho * den` is positive iff the ratio is below the
/// optimum.
pub fn solve_graph<R: RatioReward>(graph: &MdpGraph<R>, opts: &SolverOptions) -> Result<SolveResult> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::ParamDomain {
            field: "tol",
            value: opts.tol,
            expected: "> 0",
        });
    }
    if !(opts.aperiodicity > 0.0 && opts.aperiodicity <= 1.0) {
        return Err(Error::ParamDomain {
            field: "aperiodicity",
            value: opts.aperiodicity,
            expected: "(0, 1]",
        });
    }
    let c = Compiled::new(graph);
    // The ratio of any policy is an average of per-choice ratios.
    let mut hi = c
        .num
        .iter()
        .zip(&c.den)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&n, &d)| n / d)
        .fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut v = vec![0.0; c.num_states()];
    let mut iterations = 0;

    while hi - lo >= opts.tol {
        let mid = 0.5 * (lo + hi);
        let it = value_iteration(&c, mid, &mut v, opts, false)?;
        iterations += it.sweeps;
        match it.sign {
            GainSign::Positive => lo = mid,
            GainSign::Negative => hi = mid,
            GainSign::Zero(g) => {
                if g >= 0.0 {
                    lo = mid
                } else {
                    hi = mid
                }
            }
        }
    }

    let value = 0.5 * (lo + hi);
    let it = value_iteration(&c, value, &mut v, opts, true)?;
    iterations += it.sweeps;

    let mut policy = BTreeMap::new();
    for (s, state) in graph.states().iter().enumerate() {
        policy.insert(*state, greedy(&c, s, value, &v, opts.tie_tol));
    }
    Ok(SolveResult {
        value,
        policy,
        bias: v,
        scalarization: value,
        iterations,
        residual: it.residual,
    })
}

fn greedy(c: &Compiled, s: usize, rho: f64, v: &[f64], tie_tol: f64) -> AttackAction {
    let qs: Vec<(AttackAction, f64)> = c
        .choices(s)
        .map(|ch| (c.actions[ch], c.q(ch, rho, v)))
        .collect();
    let best = qs.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);
    qs.iter()
        .filter(|&&(_, q)| q >= best - tie_tol)
        .map(|&(a, _)| a)
        .min()
        .expect("every state offers adopt")
}

/// Scalarized one-step values of every feasible action at `state`, using
/// the result's relative values.
pub fn action_values<R: RatioReward>(
    graph: &MdpGraph<R>,
    result: &SolveResult,
    state: &MdpState,
) -> Vec<(AttackAction, f64)> {
    let Some(i) = graph.index_of(state) else {
        return Vec::new();
    };
    graph
        .choices(i)
        .iter()
        .map(|choice| {
            let q = choice
                .transitions
                .iter()
                .map(|t| {
                    t.prob
                        * (t.reward.numerator() - result.scalarization * t.reward.denominator()
                            + result.bias[t.next])
                })
                .sum();
            (choice.action, q)
        })
        .collect()
}

/// Long-run ratio of a fixed deterministic policy, from the stationary law
/// of the chain started at the reset distribution.
pub fn policy_ratio<R: RatioReward>(
    graph: &MdpGraph<R>,
    policy: &BTreeMap<MdpState, AttackAction>,
) -> Result<f64> {
    let n = graph.num_states();
    let rows: Vec<_> = graph
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let action = policy.get(s).copied().unwrap_or(AttackAction::Adopt);
            graph
                .choices(i)
                .iter()
                .find(|c| c.action == action)
                .ok_or_else(|| Error::Config(format!("{action} is not feasible at {s}")))
        })
        .collect::<Result<_>>()?;
    let mut dist = vec![0.0; n];
    for (i, p) in graph.initial_distribution() {
        dist[i] += p;
    }
    // Cesaro averages of the lazy chain converge to the stationary law even
    // for periodic policies.
    let mut next = vec![0.0; n];
    for _ in 0..200_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            if dist[i] == 0.0 {
                continue;
            }
            next[i] += 0.5 * dist[i];
            for t in &row.transitions {
                next[t.next] += 0.5 * dist[i] * t.prob;
            }
        }
        let delta: f64 = next.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut dist, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, row) in rows.iter().enumerate() {
        for t in &row.transitions {
            num += dist[i] * t.prob * t.reward.numerator();
            den += dist[i] * t.prob * t.reward.denominator();
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::model::{build_attack_mdp, ForkStatus};
    use crate::params::AttackerParams;

    fn solve(k: u32, alpha: f64, gamma: f64, max_len: u32) -> SolveResult {
        let m = build_attack_mdp(k, AttackerParams::new(alpha, gamma).unwrap(), max_len).unwrap();
        solve_ratio(&m, 1e-7).unwrap()
    }

    #[test]
    fn no_attacker_no_attack() {
        let r = solve(2, 0.0, 0.0, 10);
        assert!(r.value < 1e-6);
    }

    #[test]
    fn policy_is_feasible_and_value_in_range() {
        let m = build_attack_mdp(2, AttackerParams::new(0.3, 0.5).unwrap(), 20).unwrap();
        let r = solve_ratio(&m, 1e-6).unwrap();
        assert!((0.0..=1.0).contains(&r.value));
        for (s, a) in &r.policy {
            assert!(m.graph.feasible_actions(s).contains(a), "{s} {a}");
        }
    }

    #[test]
    fn policy_ratio_matches_value() {
        let m = build_attack_mdp(2, AttackerParams::new(0.3, 0.5).unwrap(), 20).unwrap();
        let r = solve_ratio(&m, 1e-8).unwrap();
        let achieved = policy_ratio(&m.graph, &r.policy).unwrap();
        assert!((achieved - r.value).abs() < 1e-6, "{achieved} {}", r.value);
    }

    #[test]
    fn tiny_attacker_rarely_wins() {
        let r = solve(1, 0.02, 0.0, 30);
        assert!((r.value - 0.0008).abs() < 0.0002, "{}", r.value);
        assert_eq!(
            r.action(&MdpState::new(0, 1, ForkStatus::Irrelevant)),
            Some(AttackAction::Adopt)
        );
    }

    #[test]
    fn bad_options() {
        let m = build_attack_mdp(1, AttackerParams::with_alpha(0.2).unwrap(), 5).unwrap();
        assert!(solve_ratio(&m, 0.0).is_err());
        let opts = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_graph(&m.graph, &opts),
            Err(Error::NonConvergent { .. })
        ));
    }
}
