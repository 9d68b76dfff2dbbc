//! Independent oracles and published reference values shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use premine::mdp::{MdpGraph, RatioReward};
use premine::AttackAction;

pub const TABLE1_ALPHAS: [f64; 14] = [
    0.02, 0.06, 0.10, 0.14, 0.18, 0.22, 0.26, 0.30, 0.34, 0.38, 0.42, 0.46, 0.48, 0.50,
];

/// Arbitrary-block attack probabilities in percent, `~` for "approximately
/// zero".
pub const TABLE1: [&str; 14] = [
    "0.24 0.02 ~ ~ ~ ~ ~ ~ ~ ~",
    "2.16 0.42 0.09 0.02 ~ ~ ~ ~ ~ ~",
    "5.98 1.85 0.60 0.20 0.07 0.03 ~ ~ ~ ~",
    "11.66 4.88 2.11 0.93 0.42 0.19 0.09 0.04 0.02 ~",
    "19.13 9.94 5.32 2.90 1.60 0.89 0.50 0.28 0.16 0.09",
    "28.27 17.33 10.89 6.95 4.48 2.91 1.91 1.25 0.83 0.55",
    "38.90 27.17 19.36 13.97 10.17 7.45 5.49 4.06 3.01 2.23",
    "50.70 39.33 30.98 24.64 19.73 15.88 12.84 10.41 8.46 6.89",
    "63.23 53.37 45.55 39.14 33.81 29.31 25.49 22.21 19.39 16.95",
    "75.80 68.45 62.25 56.85 52.09 47.85 44.03 40.58 37.45 34.56",
    "87.35 83.09 79.31 75.86 72.68 69.72 66.95 64.33 61.83 59.44",
    "96.26 94.88 93.61 92.41 91.27 90.17 89.10 88.05 86.99 85.82",
    "98.98 98.59 98.23 97.88 97.54 97.21 96.88 96.54 96.15 95.60",
    "100 100 100 100 100 100 100 100 100 100",
];

/// `None` marks an "approximately zero" cell.
pub fn table1_cell(row: usize, conf: u32) -> Option<f64> {
    let cell = TABLE1[row].split_whitespace().nth(conf as usize - 1).unwrap();
    (cell != "~").then(|| cell.parse().unwrap())
}

/// Optimal-attack fractions in percent at `(alpha, k)`.
pub const TABLE2_SPOTS: [(f64, u32, f64); 5] = [
    (0.02, 1, 0.08),
    (0.10, 3, 0.16),
    (0.30, 6, 4.23),
    (0.38, 10, 11.84),
    (0.46, 1, 69.53),
];

/// Published optimal actions at alpha = 0.26, gamma = 0, k = 2; rows are
/// attacker lengths 0..=10, columns honest lengths 0..=10.
pub const TABLE3: [&str; 11] = [
    "w a * * * * * * * * *",
    "w w w a * * * * * * *",
    "w w w w a w a * * * *",
    "w w o w w w w a * * *",
    "w w w o w w w w a * *",
    "w w w w o w w w w a *",
    "w w w w w o w w w w a",
    "w w w w w w o w w w w",
    "w w w w w w w o w w w",
    "w w w w w w w w o w w",
    "w w w w w w w w w o w",
];

/// Published triple cells (irrelevant, relevant, active) at alpha = 0.26,
/// gamma = 0.5, k = 2, for lengths 0..=6.
pub const TABLE4: [&str; 7] = [
    "w** aa* *** *** *** *** ***",
    "w** *w* w** a** *** *** ***",
    "w** ww* wm* w** a** *** ***",
    "w** ww* www wm* w** a** ***",
    "w** ww* www wmw wm* w** a**",
    "w** ww* www www omw wm* w**",
    "w** ww* www www *mw omw wm*",
];

pub fn table_cell(table: &[&str], a: u32, h: u32) -> String {
    table[a as usize].split_whitespace().nth(h as usize).unwrap().to_string()
}

/// Win probability of the never-give-up race against a block with `n`
/// confirmations, from the stationary reflected-walk lead.
///
/// Works on the lead distribution directly: before each honest block the
/// attacker finds a geometric number of blocks; once the target has `n`
/// confirmations a deficit `d` is closed with probability
/// `(alpha/(1-alpha))^(1-d)`.
pub fn race_oracle(alpha: f64, n: u32) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let r = alpha / (1.0 - alpha);
    let cut = 1e-300_f64;
    let lead_max = ((cut.ln() / r.ln()).ceil() as usize).min(4000);
    let geo_max = ((cut.ln() / alpha.ln()).ceil() as usize).min(4000);
    let offset = n as usize;
    // dist[i] is the probability of lead i - offset.
    let mut dist = vec![0.0; offset + lead_max + 1];
    for l in 0..=lead_max {
        dist[offset + l] = (1.0 - 2.0 * alpha) / (1.0 - alpha) * r.powi(l as i32);
    }
    for _ in 0..n {
        let mut next = vec![0.0; dist.len() + geo_max];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut w = p * (1.0 - alpha);
            for j in 0..=geo_max {
                // j attacker blocks, then the honest block.
                let idx = i + j;
                if idx >= 1 {
                    next[idx - 1] += w;
                }
                w *= alpha;
                if w < cut {
                    break;
                }
            }
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .map(|(i, &p)| {
            let d = i as i64 - offset as i64;
            if d >= 1 {
                p
            } else {
                p * r.powi((1 - d) as i32)
            }
        })
        .sum()
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn rational_pow(x: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// The light-client per-block probability as an exact rational partial sum
/// over `l < l_terms` and `n <= k + l + n_extra`, plus an upper bound on the
/// omitted mass.
pub fn vector76_exact(alpha: (i64, i64), k: u64, l_terms: u64, n_extra: u64) -> (BigRational, f64) {
    let a = BigRational::new(alpha.0.into(), alpha.1.into());
    let h = BigRational::one() - &a;
    let r = &a / &h;
    let p0 = (BigRational::one() - &a - &a) / &h;
    let af = alpha.0 as f64 / alpha.1 as f64;
    let mut total = BigRational::zero();
    let mut n_rest = 0.0;
    for l in 0..l_terms {
        let weight = &p0 * rational_pow(&r, l);
        let mut inner = BigRational::zero();
        for n in 0..=k + l {
            inner += BigRational::from(binomial(n + k - 1, n)) * rational_pow(&a, k) * rational_pow(&h, n);
        }
        for n in k + l + 1..=k + l + n_extra {
            inner +=
                BigRational::from(binomial(n + k - 1, n)) * rational_pow(&a, n - l) * rational_pow(&h, k + l);
        }
        // Omitted n-terms shrink by at least alpha * (n + k) / (n + 1).
        let n = k + l + n_extra + 1;
        let first = BigRational::from(binomial(n + k - 1, n)) * rational_pow(&a, n - l) * rational_pow(&h, k + l);
        let q = af * (n + k) as f64 / (n + 1) as f64;
        assert!(q < 1.0);
        n_rest += to_f64(&(&weight * first)) / (1.0 - q);
        total += weight * inner;
    }
    // Rest of the l-sum: brackets are at most 1, geometric weights.
    let rf = alpha.0 as f64 / (alpha.1 - alpha.0) as f64;
    (total, rf.powi(l_terms as i32) + n_rest)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

/// `(next, prob, numerator, denominator)`.
pub type Edge = (usize, f64, f64, f64);

/// A finite ratio MDP in plain form: per state, per action, its edges.
#[derive(Debug, Clone)]
pub struct PlainMdp {
    pub actions: Vec<Vec<(AttackAction, Vec<Edge>)>>,
    pub start: Vec<(usize, f64)>,
}

impl PlainMdp {
    pub fn from_graph<R: RatioReward>(graph: &MdpGraph<R>) -> Self {
        let actions = (0..graph.num_states())
            .map(|i| {
                graph
                    .choices(i)
                    .iter()
                    .map(|c| {
                        let edges = c
                            .transitions
                            .iter()
                            .map(|t| (t.next, t.prob, t.reward.numerator(), t.reward.denominator()))
                            .collect();
                        (c.action, edges)
                    })
                    .collect()
            })
            .collect();
        Self {
            actions,
            start: graph.initial_distribution().to_vec(),
        }
    }

    fn expected(&self, s: usize, a: usize) -> (f64, f64) {
        self.actions[s][a]
            .1
            .iter()
            .fold((0.0, 0.0), |(x, y), &(_, p, n, d)| (x + p * n, y + p * d))
    }

    /// Best long-run ratio over all stationary policies, from the
    /// occupation-measure linear program (Charnes-Cooper form).
    pub fn lp_ratio(&self) -> f64 {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let mut vars = Vec::new();
        let mut normal = LinearExpr::empty();
        for s in 0..self.actions.len() {
            let mut row = Vec::new();
            for a in 0..self.actions[s].len() {
                let (num, den) = self.expected(s, a);
                let v = lp.add_var(num, (0.0, f64::INFINITY));
                normal.add(v, den);
                row.push(v);
            }
            vars.push(row);
        }
        let mut balance = vec![BTreeMap::new(); self.actions.len()];
        for s in 0..self.actions.len() {
            for (a, (_, edges)) in self.actions[s].iter().enumerate() {
                let v = vars[s][a];
                balance[s].entry(v.idx()).or_insert((v, 0.0)).1 += 1.0;
                for &(next, p, _, _) in edges {
                    balance[next].entry(v.idx()).or_insert((v, 0.0)).1 -= p;
                }
            }
        }
        // One balance row is implied by the others.
        for row in balance.into_iter().skip(1) {
            let expr: LinearExpr = row.into_values().filter(|&(_, c)| c != 0.0).collect();
            lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
        }
        lp.add_constraint(normal, ComparisonOp::Eq, 1.0);
        lp.solve().expect("lp solves").objective()
    }

    /// Exact ratio of a deterministic policy that picks action index
    /// `choice[s]` in every state reachable from the start.
    pub fn policy_ratio(&self, choice: &HashMap<usize, usize>) -> f64 {
        let states: Vec<usize> = {
            let mut v: Vec<usize> = choice.keys().copied().collect();
            v.sort_unstable();
            v
        };
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let m = states.len();
        // pi (P - I) = 0 and sum pi = 1, solved as a square system.
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (i, &s) in states.iter().enumerate() {
            a[(i, i)] -= 1.0;
            for &(next, p, _, _) in &self.actions[s][choice[&s]].1 {
                a[(pos[&next], i)] += p;
            }
        }
        for j in 0..m {
            a[(0, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(m);
        rhs[0] = 1.0;
        let pi = a.lu().solve(&rhs).expect("unichain policy");
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &s) in states.iter().enumerate() {
            let (x, y) = self.expected(s, choice[&s]);
            num += pi[i] * x;
            den += pi[i] * y;
        }
        num / den
    }

    /// Best ratio over every deterministic stationary policy, enumerating
    /// only the actions of states the policy can reach. Returns the value
    /// and the number of distinct policies evaluated.
    pub fn enumerate(&self) -> (f64, u64) {
        let mut best = f64::NEG_INFINITY;
        let mut count = 0u64;
        let mut choice = HashMap::new();
        let frontier: Vec<usize> = self.start.iter().map(|&(s, _)| s).collect();
        self.branch(&mut choice, frontier, &mut best, &mut count);
        (best, count)
    }

    fn branch(&self, choice: &mut HashMap<usize, usize>, mut frontier: Vec<usize>, best: &mut f64, count: &mut u64) {
        frontier.retain(|s| !choice.contains_key(s));
        frontier.sort_unstable();
        frontier.dedup();
        let Some(&s) = frontier.first() else {
            *count += 1;
            *best = best.max(self.policy_ratio(choice));
            return;
        };
        for a in 0..self.actions[s].len() {
            choice.insert(s, a);
            let mut next = frontier[1..].to_vec();
            next.extend(self.actions[s][a].1.iter().map(|e| e.0));
            self.branch(choice, next, best, count);
            choice.remove(&s);
        }
    }

    /// Optimal ratio by Dinkelbach iteration: an average-reward solve at
    /// the current ratio, then the exact ratio of the greedy policy.
    pub fn dinkelbach(&self, span_tol: f64) -> f64 {
        let mut rho = 0.0;
        for _ in 0..50 {
            let policy = self.greedy_at(rho, span_tol);
            let next = self.stationary_ratio(&policy);
            if (next - rho).abs() < 1e-13 {
                return next;
            }
            rho = next;
        }
        panic!("dinkelbach did not settle");
    }

    fn greedy_at(&self, rho: f64, span_tol: f64) -> Vec<usize> {
        let n = self.actions.len();
        let q = |v: &[f64], s: usize, a: usize| -> f64 {
            self.actions[s][a]
                .1
                .iter()
                .map(|&(next, p, num, den)| p * (num - rho * den + v[next]))
                .sum()
        };
        let mut v = vec![0.0; n];
        let mut tv = vec![0.0; n];
        for _ in 0..2_000_000 {
            for s in 0..n {
                let best = (0..self.actions[s].len()).map(|a| q(&v, s, a)).fold(f64::NEG_INFINITY, f64::max);
                tv[s] = 0.5 * v[s] + 0.5 * best;
            }
            let (lo, hi) = v
                .iter()
                .zip(&tv)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, y)| (lo.min(y - x), hi.max(y - x)));
            let shift = tv[0];
            for s in 0..n {
                v[s] = tv[s] - shift;
            }
            if hi - lo < span_tol {
                break;
            }
        }
        (0..n)
            .map(|s| {
                (0..self.actions[s].len())
                    .max_by(|&x, &y| q(&v, s, x).total_cmp(&q(&v, s, y)))
                    .unwrap()
            })
            .collect()
    }

    fn stationary_ratio(&self, policy: &[usize]) -> f64 {
        let n = self.actions.len();
        let mut x = vec![0.0; n];
        for &(s, p) in &self.start {
            x[s] += p;
        }
        let mut y = vec![0.0; n];
        for _ in 0..5_000_000 {
            y.iter_mut().for_each(|e| *e = 0.0);
            for s in 0..n {
                if x[s] != 0.0 {
                    for &(next, p, _, _) in &self.actions[s][policy[s]].1 {
                        y[next] += 0.5 * x[s] * p;
                    }
                    y[s] += 0.5 * x[s];
                }
            }
            let delta: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut x, &mut y);
            if delta < 1e-15 {
                break;
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for s in 0..n {
            let (a, b) = self.expected(s, policy[s]);
            num += x[s] * a;
            den += x[s] * b;
        }
        num / den
    }
}

/// Optimal selfish mining: attacker blocks over all blocks that end up in
/// the main chain. States `(a, h, fork)` with fork 0 irrelevant, 1 relevant,
/// 2 active; every honest block leads to a relevant state, and the chains
/// are capped at `max_len`, where only adopting or overriding is allowed.
pub fn selfish_mining(alpha: f64, gamma: f64, max_len: u32) -> PlainMdp {
    let mut index = HashMap::new();
    let mut states = Vec::new();
    for a in 0..=max_len {
        for h in 0..=max_len {
            for fork in 0..3u8 {
                let ok = match fork {
                    0 => true,
                    1 => h >= 1,
                    _ => h >= 1 && a >= h,
                };
                if ok {
                    index.insert((a, h, fork), states.len());
                    states.push((a, h, fork));
                }
            }
        }
    }
    let at = |a, h, f| index[&(a, h, f)];
    let mut actions = Vec::new();
    for &(a, h, fork) in &states {
        let mut acts = Vec::new();
        let (hf, hh) = (h as f64, (h + 1) as f64);
        acts.push((
            AttackAction::Adopt,
            vec![(at(1, 0, 0), alpha, 0.0, hf), (at(0, 1, 0), 1.0 - alpha, 0.0, hf)],
        ));
        if a > h {
            acts.push((
                AttackAction::Override,
                vec![(at(a - h, 0, 0), alpha, hh, hh), (at(a - h - 1, 1, 1), 1.0 - alpha, hh, hh)],
            ));
        }
        if a < max_len && h < max_len {
            let tie = || {
                vec![
                    (at(a + 1, h, 2), alpha, 0.0, 0.0),
                    (at(a - h, 1, 1), gamma * (1.0 - alpha), hf, hf),
                    (at(a, h + 1, 1), (1.0 - gamma) * (1.0 - alpha), 0.0, 0.0),
                ]
            };
            if fork == 2 {
                acts.push((AttackAction::Wait, tie()));
            } else {
                acts.push((
                    AttackAction::Wait,
                    vec![(at(a + 1, h, 0), alpha, 0.0, 0.0), (at(a, h + 1, 1), 1.0 - alpha, 0.0, 0.0)],
                ));
                if fork == 1 && a >= h {
                    acts.push((AttackAction::Match, tie()));
                }
            }
        }
        for act in &mut acts {
            act.1.retain(|e| e.1 > 0.0);
        }
        actions.push(acts);
    }
    PlainMdp {
        actions,
        start: vec![(at(1, 0, 0), alpha), (at(0, 1, 0), 1.0 - alpha)],
    }
}
