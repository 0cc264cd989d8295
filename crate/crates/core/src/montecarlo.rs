//! Seeded Monte Carlo ruin estimation and empirical checks of the two lemmas
//! behind the bounds.
//!
//! Path `i` draws from its own ChaCha8 stream `(seed, i)`, so results do not
//! depend on the number of worker threads or the order paths are run in.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::bounds::BoundResult;
use crate::distributions::{IncrementDistribution, Sampler};
use crate::model::{EventModel, EventStep, ModelError, RiskModel};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RUINBOUND_THREADS";

/// Slack for the pathwise comparison of running maxima.
pub const PATHWISE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("alpha rule returned {alpha} < r_{k} = {rate}")]
    AlphaBelowRate { k: usize, alpha: f64, rate: f64 },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: u64,
    /// Claim epochs simulated per path.
    pub horizon: usize,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            horizon: 5000,
            seed: 0,
            confidence: 0.99,
        }
    }
}

impl SimConfig {
    pub fn new(n_paths: u64, horizon: usize, seed: u64) -> Self {
        Self {
            n_paths,
            horizon,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_paths == 0 {
            return Err(SimError::Config("n_paths must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(SimError::Config("horizon must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(SimError::Config(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub u: f64,
    pub n_paths: u64,
    /// Claim epochs actually simulated.
    pub horizon: usize,
    pub ruin_count: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The model extends past the horizon, so the estimate is a lower
    /// estimate of ultimate ruin.
    pub truncated: bool,
}

impl SimResult {
    fn new(u: f64, ruin_count: u64, n_paths: u64, horizon: usize, truncated: bool, confidence: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(ruin_count, n_paths, confidence);
        Self {
            u,
            n_paths,
            horizon,
            ruin_count,
            estimate: ruin_count as f64 / n_paths as f64,
            ci_low,
            ci_high,
            truncated,
        }
    }
}

/// Exact two-sided binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let alpha = 1.0 - confidence;
    let nf = n as f64;
    let lo = if k == 0 {
        0.0
    } else if k == n {
        (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(k as f64, (n - k + 1) as f64, alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else if k == 0 {
        1.0 - (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile((k + 1) as f64, (n - k) as f64, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Quantile of Beta(a, b) by bisection on the regularized incomplete beta
/// function (statrs' own `inverse_cdf` stops at a coarse tolerance).
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..1100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worker count from [`THREADS_ENV`]; 0 lets rayon decide.
fn configured_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

fn run_in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(configured_threads())
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// For each level in `levels`, counts paths whose running maximum exceeds it.
/// `path_max(rng, stop)` returns the path maximum, or any value above `stop`
/// once the path has crossed it.
fn count_exceedances<F>(cfg: &SimConfig, levels: &[f64], path_max: F) -> Result<Vec<u64>, SimError>
where
    F: Fn(&mut ChaCha8Rng, f64) -> f64 + Sync,
{
    let stop = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let seed = cfg.seed;
    run_in_pool(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .fold(
                || vec![0u64; levels.len()],
                |mut counts, i| {
                    let mut rng = path_rng(seed, i);
                    let m = path_max(&mut rng, stop);
                    for (c, &level) in counts.iter_mut().zip(levels) {
                        *c += u64::from(m > level);
                    }
                    counts
                },
            )
            .reduce(
                || vec![0u64; levels.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    })
}

/// Laws of `v_{k-1} Y*_k` for the simulated epochs and whether the model
/// extends beyond them.
fn discounted_laws(model: &RiskModel, horizon: usize) -> Result<(Vec<IncrementDistribution>, bool), SimError> {
    let (n, truncated) = match model.horizon() {
        Some(len) if len <= horizon => (len, false),
        _ => (horizon, true),
    };
    let mut laws = Vec::with_capacity(n);
    let mut log_v = 0.0f64;
    for k in 1..=n {
        let d = model.distribution_at(k)?;
        laws.push(d.scale_by(log_v.exp()).map_err(ModelError::from)?);
        log_v -= model.rates.rate(k).ln_1p();
    }
    Ok((laws, truncated))
}

fn check_reserves(us: &[f64]) -> Result<(), SimError> {
    match us.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        Some(u) => Err(SimError::Config(format!("initial reserve must be positive, got {u}"))),
        None => Ok(()),
    }
}

/// Estimates `psi(u)` for every `u` in `us` from one set of paths: ruin at `u`
/// iff `max_{k<=K} S*_k > u`. Interest is the boundary case `alpha_k = r_k`.
pub fn simulate_ruin_grid(model: &RiskModel, us: &[f64], cfg: &SimConfig) -> Result<Vec<SimResult>, SimError> {
    cfg.validate()?;
    check_reserves(us)?;
    let (laws, truncated) = discounted_laws(model, cfg.horizon)?;
    let samplers: Vec<Sampler> = laws.iter().map(IncrementDistribution::sampler).collect();
    let counts = count_exceedances(cfg, us, |rng, stop| {
        let mut s = 0.0;
        let mut max = f64::NEG_INFINITY;
        for d in &samplers {
            s += d.sample(rng);
            if s > max {
                max = s;
                if max > stop {
                    break;
                }
            }
        }
        max
    })?;
    Ok(us
        .iter()
        .zip(counts)
        .map(|(&u, c)| SimResult::new(u, c, cfg.n_paths, laws.len(), truncated, cfg.confidence))
        .collect())
}

pub fn simulate_ruin(model: &RiskModel, u: f64, cfg: &SimConfig) -> Result<SimResult, SimError> {
    Ok(simulate_ruin_grid(model, &[u], cfg)?[0])
}

/// Event-level simulation of `R_k = (1+alpha_k) R_{k-1} + (1+beta_k) p_k theta_k - Z_k`.
///
/// The recursion is linear in `u`: `R_k(u) = u / v*_k + R_k(0)`, so ruin at
/// `u` iff `max_k (-v*_k R_k(0)) > u`, which lets one path serve the whole grid.
pub fn simulate_event_ruin_grid(model: &EventModel, us: &[f64], cfg: &SimConfig) -> Result<Vec<SimResult>, SimError> {
    cfg.validate()?;
    check_reserves(us)?;
    model.validate()?;
    let (n, truncated) = match model.horizon() {
        Some(len) if len <= cfg.horizon => (len, false),
        _ => (cfg.horizon, true),
    };
    let steps: Vec<EventStep> = (1..=n).map(|k| model.step(k)).collect::<Result<_, _>>()?;
    let draws: Vec<(Sampler, Sampler)> = steps.iter().map(|s| (s.claim.sampler(), s.interarrival.sampler())).collect();
    let counts = count_exceedances(cfg, us, |rng, stop| {
        let mut reserve = 0.0;
        let mut v_star = 1.0;
        let mut max = f64::NEG_INFINITY;
        for (s, (claim, interarrival)) in steps.iter().zip(&draws) {
            let z = claim.sample(rng);
            let theta = interarrival.sample(rng);
            reserve = (1.0 + s.reserve_interest) * reserve + (1.0 + s.premium_interest) * s.premium_rate * theta - z;
            v_star /= 1.0 + s.reserve_interest;
            let deficit = -v_star * reserve;
            if deficit > max {
                max = deficit;
                if max > stop {
                    break;
                }
            }
        }
        max
    })?;
    Ok(us
        .iter()
        .zip(counts)
        .map(|(&u, c)| SimResult::new(u, c, cfg.n_paths, n, truncated, cfg.confidence))
        .collect())
}

/// Empirical side and analytic side of the maximal inequality
/// `P[max_{k<=n} W_k > w] <= exp(-h w) max_{k<=n} E exp(h W_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalInequalityReport {
    pub n: usize,
    pub h: f64,
    pub w: f64,
    pub exceed_count: u64,
    pub n_paths: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `log min(1, RHS)`
    pub log_rhs: f64,
    pub rhs: f64,
    /// `ci_low <= rhs`
    pub holds: bool,
}

/// Checks the maximal inequality for partial sums of independent `dists`.
pub fn check_maximal_inequality(
    dists: &[IncrementDistribution],
    h: f64,
    w: f64,
    cfg: &SimConfig,
) -> Result<MaximalInequalityReport, SimError> {
    cfg.validate()?;
    if dists.is_empty() {
        return Err(SimError::Config("need at least one increment".into()));
    }
    if !(h >= 0.0 && h.is_finite() && w.is_finite()) {
        return Err(SimError::Config(format!("need finite h >= 0 and finite w, got h = {h}, w = {w}")));
    }
    let mut g = 0.0f64;
    let mut max_g = f64::NEG_INFINITY;
    for d in dists {
        g += d.log_mgf(h).map_err(ModelError::from)?.value();
        max_g = max_g.max(g);
    }
    let log_rhs = if max_g.is_finite() { (-h * w + max_g).min(0.0) } else { 0.0 };
    let samplers: Vec<Sampler> = dists.iter().map(IncrementDistribution::sampler).collect();
    let counts = count_exceedances(cfg, &[w], |rng, stop| {
        let mut s = 0.0;
        let mut max = f64::NEG_INFINITY;
        for d in &samplers {
            s += d.sample(rng);
            if s > max {
                max = s;
                if max > stop {
                    break;
                }
            }
        }
        max
    })?;
    let (ci_low, ci_high) = clopper_pearson(counts[0], cfg.n_paths, cfg.confidence);
    let rhs = log_rhs.exp();
    Ok(MaximalInequalityReport {
        n: dists.len(),
        h,
        w,
        exceed_count: counts[0],
        n_paths: cfg.n_paths,
        estimate: counts[0] as f64 / cfg.n_paths as f64,
        ci_low,
        ci_high,
        log_rhs,
        rhs,
        holds: ci_low <= rhs,
    })
}

/// One realized path with random reserve interest `alpha_k >= r_k`.
///
/// Index 0 holds the initial values (`v_0 = v*_0 = 1`, `S*_0 = S**_0 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRealization {
    /// `Y*_k`, `k = 1..=n`
    pub y_star: Vec<f64>,
    pub alpha: Vec<f64>,
    pub rates: Vec<f64>,
    pub v: Vec<f64>,
    pub v_star: Vec<f64>,
    /// `S*_k = sum_{j<=k} v_{j-1} Y*_j`
    pub s_star: Vec<f64>,
    /// `S**_k = sum_{j<=k} v*_{j-1} Y*_j`
    pub s_star_star: Vec<f64>,
}

impl PathRealization {
    pub fn new(y_star: Vec<f64>, rates: Vec<f64>, alpha: Vec<f64>) -> Self {
        assert_eq!(y_star.len(), rates.len());
        assert_eq!(y_star.len(), alpha.len());
        let n = y_star.len();
        let mut v = Vec::with_capacity(n + 1);
        let mut v_star = Vec::with_capacity(n + 1);
        let mut s_star = Vec::with_capacity(n + 1);
        let mut s_star_star = Vec::with_capacity(n + 1);
        v.push(1.0);
        v_star.push(1.0);
        s_star.push(0.0);
        s_star_star.push(0.0);
        for k in 0..n {
            s_star.push(s_star[k] + v[k] * y_star[k]);
            s_star_star.push(s_star_star[k] + v_star[k] * y_star[k]);
            v.push(v[k] / (1.0 + rates[k]));
            v_star.push(v_star[k] / (1.0 + alpha[k]));
        }
        Self {
            y_star,
            alpha,
            rates,
            v,
            v_star,
            s_star,
            s_star_star,
        }
    }

    /// `max_n (max_{k<=n} S**_k - max_{k<=n} S*_k)`; nonpositive up to rounding.
    pub fn running_max_gap(&self) -> f64 {
        let mut m_star = f64::NEG_INFINITY;
        let mut m_star_star = f64::NEG_INFINITY;
        let mut gap = f64::NEG_INFINITY;
        for (a, b) in self.s_star.iter().zip(&self.s_star_star) {
            m_star = m_star.max(*a);
            m_star_star = m_star_star.max(*b);
            gap = gap.max(m_star_star - m_star);
        }
        gap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub n_paths: u64,
    pub steps: usize,
    /// Largest `running_max_gap` over all paths.
    pub max_violation: f64,
    pub worst_path: u64,
    pub holds: bool,
    /// The worst path, kept when the check fails.
    pub worst_realization: Option<PathRealization>,
}

/// Rule producing `alpha_k` from `(k, r_k, stream)`; must return `alpha_k >= r_k`.
pub type AlphaRule<'a> = dyn Fn(usize, f64, &mut dyn RngCore) -> f64 + Sync + 'a;

/// Checks `max_{k<=n} S**_k <= max_{k<=n} S*_k` on every simulated path.
pub fn check_pathwise_lemma2(
    model: &RiskModel,
    alpha: &AlphaRule<'_>,
    cfg: &SimConfig,
    steps: usize,
) -> Result<Lemma2Report, SimError> {
    cfg.validate()?;
    let steps = model.horizon().map_or(steps, |len| steps.min(len));
    let laws: Vec<Sampler> = (1..=steps)
        .map(|k| model.distribution_at(k).map(|d| d.sampler()))
        .collect::<Result<_, _>>()?;
    let rates: Vec<f64> = (1..=steps).map(|k| model.rates.rate(k)).collect();
    let realize = |i: u64| -> Result<PathRealization, SimError> {
        let mut rng = path_rng(cfg.seed, i);
        let mut y = Vec::with_capacity(steps);
        let mut a = Vec::with_capacity(steps);
        for (k, (d, &r)) in laws.iter().zip(&rates).enumerate() {
            y.push(d.sample(&mut rng));
            let alpha_k = alpha(k + 1, r, &mut rng);
            if !(alpha_k >= r) {
                return Err(SimError::AlphaBelowRate {
                    k: k + 1,
                    alpha: alpha_k,
                    rate: r,
                });
            }
            a.push(alpha_k);
        }
        Ok(PathRealization::new(y, rates.clone(), a))
    };
    let (max_violation, worst_path) = run_in_pool(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| realize(i).map(|p| (p.running_max_gap(), i)))
            .try_reduce(
                || (f64::NEG_INFINITY, u64::MAX),
                |a, b| Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            )
    })??;
    let holds = max_violation <= PATHWISE_SLACK;
    let worst_realization = if holds { None } else { Some(realize(worst_path)?) };
    Ok(Lemma2Report {
        n_paths: cfg.n_paths,
        steps,
        max_violation,
        worst_path,
        holds,
        worst_realization,
    })
}

/// One `u` of a bound-versus-simulation comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceRow {
    pub sim: SimResult,
    pub log_bound: f64,
    pub bound: f64,
    pub bound_certified: bool,
    /// `ci_low <= bound`
    pub dominated: bool,
    /// False when the bound is far below `1 / n_paths` and no ruin was
    /// observed, so the comparison carries no information.
    pub informative: bool,
}

/// Simulates every `u` carried by `bounds` and checks `ci_low <= bound`.
pub fn check_bound_dominance(model: &RiskModel, bounds: &[BoundResult], cfg: &SimConfig) -> Result<Vec<DominanceRow>, SimError> {
    let us: Vec<f64> = bounds
        .iter()
        .map(|b| b.u.ok_or_else(|| SimError::Config("bound without a reserve u".into())))
        .collect::<Result<_, _>>()?;
    let sims = simulate_ruin_grid(model, &us, cfg)?;
    Ok(sims
        .into_iter()
        .zip(bounds)
        .map(|(sim, b)| dominance_row(sim, b.log_bound, b.certified))
        .collect())
}

pub fn dominance_row(sim: SimResult, log_bound: f64, bound_certified: bool) -> DominanceRow {
    let bound = log_bound.exp();
    // compare in log space so bounds below f64 range are handled
    let dominated = sim.ci_low == 0.0 || sim.ci_low.ln() <= log_bound;
    let informative = sim.ruin_count > 0 || log_bound + (sim.n_paths as f64).ln() >= 0.0;
    DominanceRow {
        sim,
        log_bound,
        bound,
        bound_certified,
        dominated,
        informative,
    }
}
