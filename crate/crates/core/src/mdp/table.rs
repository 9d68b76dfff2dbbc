use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use super::model::{ForkStatus, MdpGraph, MdpState};
use super::solve::SolveResult;
use crate::action::AttackAction;

/// States visited from the two reset states when the attacker follows
/// `policy`. States the policy does not cover are treated as adopting.
pub fn mark_reachability<R: Copy>(
    graph: &MdpGraph<R>,
    policy: &BTreeMap<MdpState, AttackAction>,
) -> BTreeSet<MdpState> {
    let states = graph.states();
    let mut seen = vec![false; states.len()];
    let mut queue = VecDeque::new();
    for (i, _) in graph.initial_distribution() {
        if !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let action = policy.get(&states[i]).copied().unwrap_or(AttackAction::Adopt);
        let Some(choice) = graph.choices(i).iter().find(|c| c.action == action) else {
            continue;
        };
        for t in &choice.transitions {
            if !seen[t.next] {
                seen[t.next] = true;
                queue.push_back(t.next);
            }
        }
    }
    states
        .iter()
        .zip(seen)
        .filter_map(|(s, r)| r.then_some(*s))
        .collect()
}

/// One `(a, h)` cell: the action for each fork status, `None` where the
/// state is invalid or unreachable.
pub type PolicyCell = [Option<AttackAction>; 3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyTable {
    pub a_max: u32,
    pub h_max: u32,
    /// `cells[a][h]`.
    pub cells: Vec<Vec<PolicyCell>>,
}

pub fn extract_policy_table<R: Copy>(
    graph: &MdpGraph<R>,
    result: &SolveResult,
    a_max: u32,
    h_max: u32,
) -> PolicyTable {
    let reachable = mark_reachability(graph, &result.policy);
    let cells = (0..=a_max)
        .map(|a| {
            (0..=h_max)
                .map(|h| {
                    ForkStatus::ALL.map(|fork| {
                        let s = MdpState::new(a, h, fork);
                        if reachable.contains(&s) {
                            result.action(&s)
                        } else {
                            None
                        }
                    })
                })
                .collect()
        })
        .collect();
    PolicyTable {
        a_max,
        h_max,
        cells,
    }
}

fn initial(action: Option<AttackAction>) -> char {
    action.map_or('*', AttackAction::initial)
}

impl PolicyTable {
    pub fn cell(&self, a: u32, h: u32) -> Option<&PolicyCell> {
        self.cells.get(a as usize)?.get(h as usize)
    }

    /// The action of the first reachable fork status, which is all that
    /// matters when ties cannot be split.
    pub fn collapsed(&self, a: u32, h: u32) -> Option<AttackAction> {
        self.cell(a, h)?.iter().flatten().next().copied()
    }

    /// Three initials per cell in fork order irrelevant, relevant, active.
    pub fn cell_string(&self, a: u32, h: u32) -> String {
        self.cell(a, h)
            .map(|c| c.iter().map(|&x| initial(x)).collect())
            .unwrap_or_default()
    }

    fn render(&self, collapse: bool, sep: &str, md: bool) -> String {
        let text = |a, h| {
            if collapse {
                initial(self.collapsed(a, h)).to_string()
            } else {
                self.cell_string(a, h)
            }
        };
        let mut out = String::new();
        let header: Vec<String> = (0..=self.h_max).map(|h| h.to_string()).collect();
        if md {
            let _ = writeln!(out, "| a\\h | {} |", header.join(" | "));
            let _ = writeln!(out, "|{}|", vec!["---"; header.len() + 1].join("|"));
        } else {
            let _ = writeln!(out, "a\\h{sep}{}", header.join(sep));
        }
        for a in 0..=self.a_max {
            let row: Vec<String> = (0..=self.h_max).map(|h| text(a, h)).collect();
            if md {
                let _ = writeln!(out, "| {a} | {} |", row.join(" | "));
            } else {
                let _ = writeln!(out, "{a}{sep}{}", row.join(sep));
            }
        }
        out
    }

    /// Markdown grid. With `collapse` each cell shows a single initial.
    pub fn to_markdown(&self, collapse: bool) -> String {
        self.render(collapse, " | ", true)
    }

    pub fn to_csv(&self, collapse: bool) -> String {
        self.render(collapse, ",", false)
    }
}
