//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::adjustment::{self, AdjustmentResult};
use crate::bounds::{self, BoundMethod, BoundResult, PeriodicOptions, PeriodicVariant};
use crate::model::{EventModel, RiskModel, TruncationPolicy};
use crate::montecarlo::{self, SimConfig, SimResult};
use crate::report::{format_float, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;
pub const EXIT_DOMINANCE: i32 = 4;

/// Literature reference curve `min(1, 1502 exp(-0.01269 u))`, quoted for comparison.
pub fn external_reference_a(u: f64) -> f64 {
    (1502f64.ln() - 0.01269 * u).min(0.0)
}

/// Literature reference curve `min(1, 178 exp(-u / 20))`, quoted for comparison.
pub fn external_reference_b(u: f64) -> f64 {
    (178f64.ln() - u / 20.0).min(0.0)
}

#[derive(Debug, Parser)]
#[command(name = "ruinbound", version, about = "Upper bounds and Monte Carlo estimates for ruin probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model configuration (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with status 3 when any result is uncertified.
    #[arg(long)]
    pub strict: bool,
    /// Scan limit for suprema over k (raised to 10u when optimizing).
    #[arg(long, default_value_t = 10_000)]
    pub kmax: usize,
    /// Absolute tolerance for adjustment coefficients.
    #[arg(long, default_value_t = adjustment::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Adjustment coefficients of a model.
    Adjustment {
        #[command(flatten)]
        common: Common,
        /// Period for the period-sum coefficient (default: cycle length).
        #[arg(long)]
        l: Option<usize>,
    },
    /// Ruin-probability bounds over a grid of initial reserves.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Reserves: comma list `1,2,4` or range `start:step:stop`.
        #[arg(long)]
        u: String,
        /// Exponent for fixed_h and union_baseline (default: optimal h*).
        #[arg(long)]
        h: Option<f64>,
        /// Comma-separated method tags.
        #[arg(long, default_value = "general_opt")]
        method: String,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        lstar: Option<f64>,
        /// Certificate exponent for periodic methods (at most the coefficient).
        #[arg(long)]
        cert_h: Option<f64>,
    },
    /// Monte Carlo ruin estimates with the optimized bound alongside.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u: String,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 5000)]
        horizon: usize,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
    },
    /// Side-by-side comparison of bounds, reference curves and simulation.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u: String,
        /// Simulated paths per row; 0 skips the simulation.
        #[arg(long, default_value_t = 0)]
        paths: u64,
        #[arg(long, default_value_t = 5000)]
        horizon: usize,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
    },
}

/// A model file holds either increment laws or an event-level description.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Risk(RiskModel),
    Event { event: EventModel, reduced: RiskModel },
}

impl LoadedModel {
    pub fn risk(&self) -> &RiskModel {
        match self {
            Self::Risk(m) => m,
            Self::Event { reduced, .. } => reduced,
        }
    }
}

/// Failure with its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

pub fn parse_model(text: &str, origin: &str) -> Result<LoadedModel, Failure> {
    let located = |e: serde_json::Error| config_error(format!("{origin}:{}:{}: {e}", e.line(), e.column()));
    let value: Value = serde_json::from_str(text).map_err(located)?;
    let invalid = |e: &dyn std::fmt::Display| config_error(format!("{origin}: {e}"));
    if value.get("claims").is_some() {
        let event: EventModel = serde_json::from_str(text).map_err(located)?;
        event.validate().map_err(|e| invalid(&e))?;
        let reduced = event.reduce().map_err(|e| invalid(&e))?;
        Ok(LoadedModel::Event { event, reduced })
    } else {
        let model: RiskModel = serde_json::from_str(text).map_err(located)?;
        model.validate().map_err(|e| invalid(&e))?;
        Ok(LoadedModel::Risk(model))
    }
}

pub fn load_model(path: &Path) -> Result<LoadedModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    parse_model(&text, &path.display().to_string())
}

/// Parses `1,2,4` or `start:step:stop`; values must be positive and strictly increasing.
pub fn parse_u_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |msg: &str| config_error(format!("--u {spec}: {msg}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let us = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, step, stop] = parts[..] else {
            return Err(bad("range must be start:step:stop"));
        };
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad("range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if us.is_empty() || us.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
        return Err(bad("values must be positive and finite"));
    }
    if us.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(us)
}

fn check_common(common: &Common) -> Result<(), Failure> {
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(config_error(format!("--tol must be positive, got {}", common.tol)));
    }
    if common.kmax == 0 {
        return Err(config_error("--kmax must be at least 1"));
    }
    Ok(())
}

/// Scan policy for a given `u`: `k_max` at least `10 u`.
fn policy_for(common: &Common, u: f64) -> TruncationPolicy {
    TruncationPolicy::with_k_max(common.kmax.max((10.0 * u).ceil() as usize))
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Rendered command output plus warnings and the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub warnings: Vec<String>,
    pub code: i32,
}

fn render<T: Serialize>(format: Format, table: &Table, rows: &T) -> Result<String, Failure> {
    match format {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => serde_json::to_string_pretty(rows)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| config_error(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct AdjustmentRow {
    coefficient: &'static str,
    l: Option<usize>,
    #[serde(flatten)]
    result: AdjustmentResult,
}

pub fn cmd_adjustment(common: &Common, l: Option<usize>) -> Result<Output, Failure> {
    check_common(common)?;
    let loaded = load_model(&common.model)?;
    let model = loaded.risk();
    let policy = TruncationPolicy::with_k_max(common.kmax);
    let err = |e: &dyn std::fmt::Display| config_error(e.to_string());

    let mut rows = vec![
        AdjustmentRow {
            coefficient: "L_Y",
            l: None,
            result: adjustment::solve_l_y(model, common.tol, &policy).map_err(|e| err(&e))?,
        },
        AdjustmentRow {
            coefficient: "L_S",
            l: None,
            result: adjustment::solve_l_s(model, common.tol, &policy).map_err(|e| err(&e))?,
        },
    ];
    let mut warnings = Vec::new();
    if let Some((cycle, scale)) = model.cycle_info() {
        let period = l.unwrap_or(cycle);
        match adjustment::solve_period_root(model, period, common.tol) {
            Ok(r) => rows.push(AdjustmentRow {
                coefficient: "L_Sl",
                l: Some(period),
                result: r,
            }),
            Err(e) => warnings.push(format!("L_Sl skipped: {e}")),
        }
        if cycle == 1 && scale <= 1.0 {
            let d = model.distribution_at(1).map_err(|e| err(&e))?;
            rows.push(AdjustmentRow {
                coefficient: "kappa",
                l: None,
                result: adjustment::solve_kappa(&d, common.tol).map_err(|e| err(&e))?,
            });
        }
    } else if l.is_some() {
        warnings.push("L_Sl skipped: increments are not a pure periodic or quasi-periodic rule".into());
    }

    let mut table = Table::new(vec![
        "coefficient",
        "value",
        "certified",
        "boundary",
        "bracket_low",
        "bracket_high",
        "iterations",
        "note",
    ]);
    let mut uncertified = false;
    for row in &rows {
        let r = &row.result;
        if !r.certified {
            uncertified = true;
            warnings.push(format!("{} is uncertified (truncated supremum); value is an estimate", row.coefficient));
        }
        let note = match (row.l, r.missing_root) {
            (Some(l), _) => format!("l={l}"),
            (_, Some(m)) => serde_json::to_value(m).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            _ => String::new(),
        };
        table.push(vec![
            row.coefficient.to_string(),
            format_float(r.value),
            bool_cell(r.certified),
            bool_cell(r.boundary),
            format_float(r.bracket.0),
            format_float(r.bracket.1),
            r.iterations.to_string(),
            note,
        ]);
    }
    let body = render(common.format, &table, &rows)?;
    let code = if uncertified && common.strict { EXIT_UNCERTIFIED } else { EXIT_OK };
    Ok(Output { body, warnings, code })
}

/// Method-specific parameters of `bound`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundParams {
    pub h: Option<f64>,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub lstar: Option<f64>,
    pub cert_h: Option<f64>,
}

fn parse_methods(spec: &str) -> Result<Vec<BoundMethod>, Failure> {
    spec.split(',')
        .map(|t| {
            BoundMethod::from_tag(t.trim()).ok_or_else(|| {
                let known: Vec<&str> = BoundMethod::ALL.iter().map(|m| m.tag()).collect();
                config_error(format!("unknown method {t:?}; expected one of {}", known.join(", ")))
            })
        })
        .collect()
}

fn default_period(model: &RiskModel, l: Option<usize>) -> Result<usize, Failure> {
    l.or_else(|| model.cycle_info().map(|(c, _)| c))
        .ok_or_else(|| config_error("--l is required for this model"))
}

/// Evaluates one method at one `u`.
pub fn evaluate_method(
    model: &RiskModel,
    method: BoundMethod,
    u: f64,
    params: &BoundParams,
    common: &Common,
) -> Result<BoundResult, Failure> {
    let policy = policy_for(common, u);
    let err = |e: bounds::BoundError| config_error(format!("{} at u = {u}: {e}", method.tag()));
    let periodic_opts = PeriodicOptions {
        tol: common.tol,
        certificate_exponent: params.cert_h,
    };
    match method {
        BoundMethod::GeneralOpt => bounds::bound_optimize(model, u, &policy).map_err(err),
        BoundMethod::FixedH => {
            let h = params.h.ok_or_else(|| config_error("fixed_h needs --h"))?;
            bounds::bound_at_h(model, u, h, &policy).map_err(err)
        }
        BoundMethod::Corollary1 => bounds::bound_corollary1(model, u, common.tol, &policy).map_err(err),
        BoundMethod::PeriodicC1 => {
            let l = default_period(model, params.l)?;
            bounds::bound_periodic(model, l, PeriodicVariant::Cor3, Some(u), &periodic_opts).map_err(err)
        }
        BoundMethod::Theorem3C3 => {
            let l = default_period(model, params.l)?;
            bounds::bound_periodic(model, l, PeriodicVariant::Thm3, Some(u), &periodic_opts).map_err(err)
        }
        BoundMethod::QuasiPeriodicC2 => {
            let l = default_period(model, params.l)?;
            let (m, l_star) = params
                .m
                .zip(params.lstar)
                .ok_or_else(|| config_error("quasi_periodic_C2 needs --m and --lstar"))?;
            bounds::bound_periodic(model, l, PeriodicVariant::CorP7 { m, l_star }, Some(u), &periodic_opts).map_err(err)
        }
        BoundMethod::Kappa => bounds::bound_kappa(model, u, common.tol).map_err(err),
        BoundMethod::UnionBaseline => {
            let h = match params.h {
                Some(h) => h,
                None => bounds::bound_optimize(model, u, &policy).map_err(err)?.h_star,
            };
            let h = if h.is_finite() { h } else { 0.0 };
            bounds::bound_union_baseline(model, u, h, &policy).map_err(err)
        }
    }
}

pub fn cmd_bound(common: &Common, us: &[f64], methods: &[BoundMethod], params: &BoundParams) -> Result<Output, Failure> {
    check_common(common)?;
    let loaded = load_model(&common.model)?;
    let model = loaded.risk();
    let mut results = Vec::new();
    for &u in us {
        for &method in methods {
            results.push(evaluate_method(model, method, u, params, common)?);
        }
    }
    let mut table = Table::new(vec!["u", "method", "h_star", "log10_bound", "C", "L", "certified"]);
    let mut warnings = Vec::new();
    for r in &results {
        if !r.certified {
            warnings.push(format!(
                "{} at u = {} rests on a truncated supremum; not a proven bound",
                r.method.tag(),
                format_float(r.u.unwrap_or(f64::NAN))
            ));
        }
        table.push(vec![
            opt_cell(r.u),
            r.method.tag().to_string(),
            format_float(r.h_star),
            format_float(r.log10_bound()),
            opt_cell(r.certificate.map(|c| c.c())),
            opt_cell(r.certificate.map(|c| c.exponent)),
            bool_cell(r.certified),
        ]);
    }
    let body = render(common.format, &table, &results)?;
    let uncertified = results.iter().any(|r| !r.certified);
    let code = if uncertified && common.strict { EXIT_UNCERTIFIED } else { EXIT_OK };
    Ok(Output { body, warnings, code })
}

fn simulate_grid(loaded: &LoadedModel, us: &[f64], cfg: &SimConfig) -> Result<Vec<SimResult>, Failure> {
    let res = match loaded {
        LoadedModel::Risk(m) => montecarlo::simulate_ruin_grid(m, us, cfg),
        LoadedModel::Event { event, .. } => montecarlo::simulate_event_ruin_grid(event, us, cfg),
    };
    res.map_err(|e| config_error(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SimulateRow {
    #[serde(flatten)]
    sim: SimResult,
    #[serde(serialize_with = "crate::report::serialize_extended_f64")]
    log_bound: f64,
    bound_certified: bool,
    dominated: bool,
    informative: bool,
}

pub fn cmd_simulate(common: &Common, us: &[f64], cfg: &SimConfig) -> Result<Output, Failure> {
    check_common(common)?;
    let loaded = load_model(&common.model)?;
    let sims = simulate_grid(&loaded, us, cfg)?;
    let mut rows = Vec::new();
    for sim in sims {
        let b = evaluate_method(loaded.risk(), BoundMethod::GeneralOpt, sim.u, &BoundParams::default(), common)?;
        let d = montecarlo::dominance_row(sim, b.log_bound, b.certified);
        rows.push(SimulateRow {
            sim,
            log_bound: b.log_bound,
            bound_certified: b.certified,
            dominated: d.dominated,
            informative: d.informative,
        });
    }
    let mut table = Table::new(vec![
        "u", "n_paths", "K", "ruin_count", "estimate", "ci_low", "ci_high", "bound", "dominated",
    ]);
    let mut warnings = Vec::new();
    if rows.iter().any(|r| r.sim.truncated) {
        warnings.push(format!(
            "estimates use a finite horizon of {} claim epochs and understate ultimate ruin",
            cfg.horizon
        ));
    }
    for r in &rows {
        if !r.informative {
            warnings.push(format!(
                "u = {}: bound far below 1/n_paths and no ruin observed; comparison uninformative",
                format_float(r.sim.u)
            ));
        }
        if !r.bound_certified {
            warnings.push(format!("u = {}: bound rests on a truncated supremum", format_float(r.sim.u)));
        }
        table.push(vec![
            format_float(r.sim.u),
            r.sim.n_paths.to_string(),
            r.sim.horizon.to_string(),
            r.sim.ruin_count.to_string(),
            format_float(r.sim.estimate),
            format_float(r.sim.ci_low),
            format_float(r.sim.ci_high),
            format_float(r.log_bound.exp()),
            bool_cell(r.dominated),
        ]);
    }
    let body = render(common.format, &table, &rows)?;
    let code = if rows.iter().any(|r| !r.dominated) {
        EXIT_DOMINANCE
    } else if common.strict && rows.iter().any(|r| !r.bound_certified) {
        EXIT_UNCERTIFIED
    } else {
        EXIT_OK
    };
    Ok(Output { body, warnings, code })
}

#[derive(Debug, Serialize)]
struct CompareRow {
    u: f64,
    #[serde(serialize_with = "crate::report::serialize_extended_f64")]
    log10_optimized: f64,
    #[serde(serialize_with = "crate::report::serialize_extended_f64")]
    log10_union_baseline: f64,
    #[serde(serialize_with = "crate::report::serialize_extended_f64")]
    log10_corollary1: f64,
    log10_external_a: f64,
    log10_external_b: f64,
    mc: Option<SimResult>,
    certified: bool,
    winner: &'static str,
}

pub fn cmd_compare(common: &Common, us: &[f64], cfg: Option<&SimConfig>) -> Result<Output, Failure> {
    check_common(common)?;
    let loaded = load_model(&common.model)?;
    let model = loaded.risk();
    let sims = match cfg {
        Some(cfg) => Some(simulate_grid(&loaded, us, cfg)?),
        None => None,
    };
    let ln10 = std::f64::consts::LN_10;
    let mut rows = Vec::new();
    for (i, &u) in us.iter().enumerate() {
        let opt = evaluate_method(model, BoundMethod::GeneralOpt, u, &BoundParams::default(), common)?;
        let h = if opt.h_star.is_finite() { opt.h_star } else { 0.0 };
        let union = bounds::bound_union_baseline(model, u, h, &policy_for(common, u))
            .map_err(|e| config_error(e.to_string()))?;
        let cor1 = evaluate_method(model, BoundMethod::Corollary1, u, &BoundParams::default(), common)?;
        let candidates = [
            ("optimized", opt.log_bound),
            ("union_baseline", union.log_bound),
            ("corollary1", cor1.log_bound),
            ("external_a", external_reference_a(u)),
            ("external_b", external_reference_b(u)),
        ];
        // smallest bound wins; ties go to the earlier column
        let winner = candidates
            .iter()
            .fold(candidates[0], |best, c| if c.1 < best.1 { *c } else { best })
            .0;
        rows.push(CompareRow {
            u,
            log10_optimized: opt.log_bound / ln10,
            log10_union_baseline: union.log_bound / ln10,
            log10_corollary1: cor1.log_bound / ln10,
            log10_external_a: external_reference_a(u) / ln10,
            log10_external_b: external_reference_b(u) / ln10,
            mc: sims.as_ref().map(|s| s[i]),
            certified: opt.certified && cor1.certified,
            winner,
        });
    }
    let mut table = Table::new(vec![
        "u",
        "log10_optimized",
        "log10_union_baseline",
        "log10_corollary1",
        "log10_external_a",
        "log10_external_b",
        "mc_estimate",
        "mc_ci_low",
        "mc_ci_high",
        "certified",
        "winner",
    ]);
    let mut warnings = vec![
        "external_a = min(1, 1502 exp(-0.01269 u)) and external_b = min(1, 178 exp(-u/20)) are quoted reference curves, not computed for this model".to_string(),
    ];
    for r in &rows {
        if !r.certified {
            warnings.push(format!("u = {}: a bound rests on a truncated supremum", format_float(r.u)));
        }
        table.push(vec![
            format_float(r.u),
            format_float(r.log10_optimized),
            format_float(r.log10_union_baseline),
            format_float(r.log10_corollary1),
            format_float(r.log10_external_a),
            format_float(r.log10_external_b),
            opt_cell(r.mc.map(|s| s.estimate)),
            opt_cell(r.mc.map(|s| s.ci_low)),
            opt_cell(r.mc.map(|s| s.ci_high)),
            bool_cell(r.certified),
            r.winner.to_string(),
        ]);
    }
    let body = render(common.format, &table, &rows)?;
    let code = if common.strict && rows.iter().any(|r| !r.certified) {
        EXIT_UNCERTIFIED
    } else {
        EXIT_OK
    };
    Ok(Output { body, warnings, code })
}

fn sim_config(common: &Common, paths: u64, horizon: usize, confidence: f64) -> Result<SimConfig, Failure> {
    let cfg = SimConfig {
        n_paths: paths,
        horizon,
        seed: common.seed,
        confidence,
    };
    cfg.validate().map_err(|e| config_error(e.to_string()))?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(Output, &Common), Failure> {
    match &cli.command {
        Command::Adjustment { common, l } => Ok((cmd_adjustment(common, *l)?, common)),
        Command::Bound {
            common,
            u,
            h,
            method,
            l,
            m,
            lstar,
            cert_h,
        } => {
            let us = parse_u_grid(u)?;
            let methods = parse_methods(method)?;
            let params = BoundParams {
                h: *h,
                l: *l,
                m: *m,
                lstar: *lstar,
                cert_h: *cert_h,
            };
            Ok((cmd_bound(common, &us, &methods, &params)?, common))
        }
        Command::Simulate {
            common,
            u,
            paths,
            horizon,
            confidence,
        } => {
            let us = parse_u_grid(u)?;
            let cfg = sim_config(common, *paths, *horizon, *confidence)?;
            Ok((cmd_simulate(common, &us, &cfg)?, common))
        }
        Command::Compare {
            common,
            u,
            paths,
            horizon,
            confidence,
        } => {
            let us = parse_u_grid(u)?;
            let cfg = if *paths > 0 {
                Some(sim_config(common, *paths, *horizon, *confidence)?)
            } else {
                None
            };
            Ok((cmd_compare(common, &us, cfg.as_ref())?, common))
        }
    }
}

/// Runs a parsed command line, writing output and warnings; returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok((out, common)) => {
            let mut banner = String::new();
            for w in &out.warnings {
                let _ = writeln!(banner, "warning: {w}");
            }
            eprint!("{banner}");
            let written = match &common.out {
                Some(path) => std::fs::write(path, &out.body).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{}", out.body);
                    Ok(())
                }
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
