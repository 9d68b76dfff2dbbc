use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, ValueEnum};
use serde::Serialize;

use premine::analytic::{
    arb_attack_prob, sigma_arb, sigma_spv, spv_attack_bound, total_policy_constants,
    TotalPolicyConstants,
};
use premine::mdp::{build_attack_mdp, extract_policy_table, solve_ratio, PolicyTable, DEFAULT_MAX_LEN};
use premine::profit::{
    build_profit_mdp_with, curve_to_csv, solve_profit, DoubleSpendReward, ProfitPoint,
    DEFAULT_DS_REWARD,
};
use premine::{AcceptancePolicy, AttackerParams, Error};

use crate::output::{csv_record, key_values, percent, to_json, Format, Grid, OutputArgs};
use crate::{CliError, CliResult};

const TABLE_ALPHAS: [f64; 14] = [
    0.02, 0.06, 0.10, 0.14, 0.18, 0.22, 0.26, 0.30, 0.34, 0.38, 0.42, 0.46, 0.48, 0.50,
];
const TABLE_CONFS: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
const PROFIT_ALPHAS: [f64; 10] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];
const DEFAULT_SOLVER_TOL: f64 = 1e-8;

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Attacker hash shares, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,
    /// Confirmation counts, comma separated.
    #[arg(long = "conf", short = 'k', value_delimiter = ',', num_args = 1..)]
    conf: Option<Vec<String>>,
}

impl GridArgs {
    fn alphas(&self) -> Vec<f64> {
        self.alpha.clone().unwrap_or_else(|| TABLE_ALPHAS.to_vec())
    }

    fn confs(&self) -> CliResult<Vec<u32>> {
        let Some(raw) = &self.conf else {
            return Ok(TABLE_CONFS.to_vec());
        };
        let confs = raw
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| match s.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(CliError::Usage(format!("confirmation count `{s}` is not a positive integer"))),
            })
            .collect::<CliResult<Vec<u32>>>()?;
        if confs.is_empty() {
            return Err(CliError::Usage("the confirmation list is empty".into()));
        }
        Ok(confs)
    }
}

/// Shares strictly above one half have no table row; exactly one half
/// renders as certain success.
fn check_table_alpha(alpha: f64) -> CliResult<()> {
    if (0.0..=0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::ParamDomain {
            field: "alpha",
            value: alpha,
            expected: "[0, 0.5]",
        }
        .into())
    }
}

/// Maps `f` over `items` on all available cores, keeping input order.
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let value = f(item);
                slots.lock().expect("worker panicked")[i] = Some(value);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|v| v.expect("every slot filled"))
        .collect()
}

#[derive(Debug, Args)]
pub struct TableArbArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn table_arb(args: &TableArbArgs) -> CliResult<()> {
    let alphas = args.grid.alphas();
    let confs = args.grid.confs()?;
    alphas.iter().try_for_each(|&a| check_table_alpha(a))?;
    let values = alphas
        .iter()
        .map(|&alpha| {
            let params = AttackerParams::with_alpha(alpha)?;
            confs
                .iter()
                .map(|&n| {
                    if alpha >= 0.5 {
                        Ok(Some(1.0))
                    } else {
                        Ok(Some(arb_attack_prob(&params, n)?.value))
                    }
                })
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let grid = Grid {
        quantity: "arbitrary_block_attack_probability",
        gamma: None,
        max_len: None,
        alphas,
        confs,
        values,
    };
    let text = grid.render(args.out.format_or(Format::Markdown), args.out.precision);
    Ok(args.out.emit(&text)?)
}

#[derive(Debug, Args)]
pub struct TableFracArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Share of honest miners that side with the attacker in a tie.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Longest fork the model tracks.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: u32,
    /// Bisection width of the ratio solver.
    #[arg(long, default_value_t = DEFAULT_SOLVER_TOL)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn table_frac(args: &TableFracArgs) -> CliResult<()> {
    let alphas = args.grid.alphas();
    let confs = args.grid.confs()?;
    alphas.iter().try_for_each(|&a| check_table_alpha(a))?;
    AttackerParams::new(0.0, args.gamma)?;
    if let Some(&k) = confs.iter().find(|&&k| args.max_len < k + 2) {
        return Err(Error::Config(format!("max_len = {} is too short for k = {k}", args.max_len)).into());
    }
    let cells: Vec<(f64, u32)> = alphas
        .iter()
        .flat_map(|&a| confs.iter().map(move |&k| (a, k)))
        .collect();
    let solved = par_map(&cells, |&(alpha, k)| {
        if alpha >= 0.5 {
            return Ok(1.0);
        }
        let model = build_attack_mdp(k, AttackerParams::new(alpha, args.gamma)?, args.max_len)?;
        Ok::<_, Error>(solve_ratio(&model, args.tol)?.value)
    });
    let mut failures = 0;
    let mut values = vec![Vec::with_capacity(confs.len()); alphas.len()];
    for (i, (cell, result)) in cells.iter().zip(solved).enumerate() {
        let value = match result {
            Ok(v) => Some(v),
            Err(e) => {
                eprintln!("cell alpha = {}, k = {}: {e}", cell.0, cell.1);
                failures += 1;
                None
            }
        };
        values[i / confs.len()].push(value);
    }
    let grid = Grid {
        quantity: "optimal_attacked_fraction",
        gamma: Some(args.gamma),
        max_len: Some(args.max_len),
        alphas,
        confs,
        values,
    };
    let text = grid.render(args.out.format_or(Format::Markdown), args.out.precision);
    args.out.emit(&text)?;
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} cell(s) could not be solved")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// One action per cell when `gamma` is zero, three otherwise.
    Auto,
    /// First reachable action per cell.
    Single,
    /// Actions for the irrelevant, relevant and active fork statuses.
    Triple,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Confirmations the merchant waits for.
    #[arg(long = "conf", short = 'k')]
    k: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: u32,
    #[arg(long, default_value_t = DEFAULT_SOLVER_TOL)]
    tol: f64,
    /// Largest attacker fork length shown.
    #[arg(long, default_value_t = 10)]
    a_max: u32,
    /// Largest honest fork length shown.
    #[arg(long, default_value_t = 10)]
    h_max: u32,
    #[arg(long, value_enum, default_value_t = Layout::Auto)]
    layout: Layout,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Serialize)]
struct PolicyReport<'a> {
    alpha: f64,
    gamma: f64,
    k: u32,
    max_len: u32,
    attacked_fraction: f64,
    table: &'a PolicyTable,
}

pub fn policy(args: &PolicyArgs) -> CliResult<()> {
    let model = build_attack_mdp(args.k, AttackerParams::new(args.alpha, args.gamma)?, args.max_len)?;
    let result = solve_ratio(&model, args.tol)?;
    let table = extract_policy_table(&model.graph, &result, args.a_max, args.h_max);
    let collapse = match args.layout {
        Layout::Auto => args.gamma == 0.0,
        Layout::Single => true,
        Layout::Triple => false,
    };
    let text = match args.out.format_or(Format::Markdown) {
        Format::Markdown => table.to_markdown(collapse),
        Format::Csv => table.to_csv(collapse),
        Format::Json => to_json(&PolicyReport {
            alpha: args.alpha,
            gamma: args.gamma,
            k: args.k,
            max_len: args.max_len,
            attacked_fraction: result.value,
            table: &table,
        }),
    };
    Ok(args.out.emit(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Probability that an arbitrary block is reversed.
    Arb,
    /// Long-run fraction of reversed blocks under an optimal attack.
    Frac,
    /// Probability that any block of the history is ever reversed.
    Total,
    /// Fraction of blocks a light client accepts and later loses.
    Spv,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Target bound on the attack probability or fraction.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = Model::Arb)]
    model: Model,
    /// Longest fork the fraction model tracks.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: u32,
    #[arg(long, default_value_t = DEFAULT_SOLVER_TOL)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Default, Serialize)]
struct Recommendation {
    model: Option<Model>,
    alpha: f64,
    gamma: f64,
    epsilon: f64,
    safe: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<AcceptancePolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<TotalPolicyConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_len: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

impl Recommendation {
    fn rows(&self, precision: usize) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            ("model", opt(self.model.map(|m| format!("{m:?}").to_lowercase()))),
            ("alpha", self.alpha.to_string()),
            ("gamma", self.gamma.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("safe", self.safe.to_string()),
            ("policy", opt(self.policy.map(|p| p.to_string()))),
            ("bound", opt(self.bound.map(|b| percent(b, precision)))),
            ("max_len", opt(self.max_len.map(|m| m.to_string()))),
            ("message", opt(self.message.clone())),
        ]
    }
}

pub fn recommend(args: &RecommendArgs) -> CliResult<()> {
    let params = AttackerParams::new(args.alpha, args.gamma)?;
    let mut rec = Recommendation {
        model: Some(args.model),
        alpha: args.alpha,
        gamma: args.gamma,
        epsilon: args.epsilon,
        ..Recommendation::default()
    };
    let outcome = if params.is_minority() {
        fill_recommendation(args, &params, &mut rec)
    } else {
        Err(Error::MajorityAttacker { alpha: args.alpha })
    };
    match &outcome {
        Ok(()) => rec.safe = true,
        Err(Error::MajorityAttacker { alpha }) => {
            rec.message = Some(format!(
                "no safe policy exists: an attacker with alpha = {alpha} wins every race"
            ));
        }
        Err(e) => return Err(e.clone().into()),
    }
    let text = match args.out.format_or(Format::Markdown) {
        Format::Json => to_json(&rec),
        Format::Markdown => key_values(&rec.rows(args.out.precision)),
        Format::Csv => {
            let mut rows = rec.rows(args.out.precision);
            if let Some(b) = rec.bound {
                rows[6].1 = b.to_string();
            }
            csv_record(&rows)
        }
    };
    args.out.emit(&text)?;
    Ok(outcome?)
}

fn fill_recommendation(
    args: &RecommendArgs,
    params: &AttackerParams,
    rec: &mut Recommendation,
) -> premine::Result<()> {
    let eps = args.epsilon;
    match args.model {
        Model::Arb => {
            let n = sigma_arb(params, eps)?;
            let measured = n - u32::from(params.gamma > 0.0);
            let b = arb_attack_prob(params, measured)?;
            rec.policy = Some(AcceptancePolicy::constant(n)?);
            rec.bound = Some(b.value);
            rec.truncation_error = Some(b.truncation_error);
        }
        Model::Spv => {
            let k = sigma_spv(params, eps)?;
            let b = spv_attack_bound(params, k)?;
            rec.policy = Some(AcceptancePolicy::constant(k)?);
            rec.bound = Some(b.value);
            rec.truncation_error = Some(b.truncation_error);
        }
        Model::Total => {
            let c = total_policy_constants(params, eps)?;
            rec.policy = Some(AcceptancePolicy::logarithmic(c.c_eps, c.b_alpha)?);
            rec.bound = Some(eps);
            rec.constants = Some(c);
        }
        Model::Frac => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::ParamDomain {
                    field: "epsilon",
                    value: eps,
                    expected: "(0, 1)",
                });
            }
            let (k, value) = frac_threshold(params, eps, args.max_len, args.tol)?;
            rec.policy = Some(AcceptancePolicy::constant(k)?);
            rec.bound = Some(value);
            rec.max_len = Some(args.max_len);
        }
    }
    Ok(())
}

/// Smallest `k` whose optimal attacked fraction is at most `epsilon`, by
/// doubling and then bisection. The fraction falls as `k` grows.
fn frac_threshold(params: &AttackerParams, epsilon: f64, max_len: u32, tol: f64) -> premine::Result<(u32, f64)> {
    let cap = max_len.saturating_sub(2);
    if cap == 0 {
        return Err(Error::Config(format!("max_len = {max_len} leaves no room for k >= 1")));
    }
    let rho = |k: u32| -> premine::Result<f64> { Ok(solve_ratio(&build_attack_mdp(k, *params, max_len)?, tol)?.value) };
    let (mut lo, mut hi) = (0u32, 1u32);
    let mut hi_value = rho(1)?;
    while hi_value > epsilon {
        if hi == cap {
            return Err(Error::NoThreshold { cap });
        }
        lo = hi;
        hi = (hi * 2).min(cap);
        hi_value = rho(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = rho(mid)?;
        if v <= epsilon {
            (hi, hi_value) = (mid, v);
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bonus {
    /// One reward per publication that reverses accepted blocks.
    PerEvent,
    /// One reward per reversed accepted block.
    PerBlock,
}

#[derive(Debug, Args)]
pub struct ProfitArgs {
    /// Attacker hash shares, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Value of a double-spent transaction in block rewards; a comma list
    /// produces one curve per value.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [DEFAULT_DS_REWARD])]
    reward: Vec<f64>,
    #[arg(long = "conf", short = 'k', default_value_t = 6)]
    k: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: u32,
    #[arg(long, default_value_t = DEFAULT_SOLVER_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Bonus::PerEvent)]
    bonus: Bonus,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn profit_curve(args: &ProfitArgs) -> CliResult<()> {
    let alphas = args.alpha.clone().unwrap_or_else(|| PROFIT_ALPHAS.to_vec());
    let bonus = match args.bonus {
        Bonus::PerEvent => DoubleSpendReward::PerEvent,
        Bonus::PerBlock => DoubleSpendReward::PerBlock,
    };
    let jobs: Vec<(f64, f64)> = args
        .reward
        .iter()
        .flat_map(|&r| alphas.iter().map(move |&a| (r, a)))
        .collect();
    let points = par_map(&jobs, |&(ds_reward, alpha)| {
        let params = AttackerParams::new(alpha, args.gamma)?;
        let model = build_profit_mdp_with(args.k, params, ds_reward, args.max_len, bonus)?;
        let revenue = solve_profit(&model, args.tol)?.value;
        Ok::<_, Error>(ProfitPoint {
            alpha,
            gamma: args.gamma,
            ds_reward,
            k: args.k,
            revenue,
            honest_baseline: alpha,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let p = args.out.precision;
    let text = match args.out.format_or(Format::Csv) {
        Format::Csv => curve_to_csv(&points),
        Format::Json => to_json(&points),
        Format::Markdown => {
            let mut s = String::from("| alpha | R | revenue | honest |\n|---|---|---|---|\n");
            for pt in &points {
                s.push_str(&format!(
                    "| {} | {} | {:.p$} | {:.p$} |\n",
                    pt.alpha, pt.ds_reward, pt.revenue, pt.honest_baseline
                ));
            }
            s
        }
    };
    Ok(args.out.emit(&text)?)
}
