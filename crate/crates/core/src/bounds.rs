//! Upper bounds on the ruin probability `psi(u)`.
//!
//! All arithmetic is in log space; `log_bound` is `log min(1, bound)` and may
//! be far below the smallest positive `f64`.

use std::f64::consts::LN_10;

use serde::Serialize;
use thiserror::Error;

use crate::adjustment::{self, AdjustmentError, AdjustmentResult};
use crate::extended::ExtendedLogValue;
use crate::model::{ModelError, RiskModel, Structure, TruncationPolicy};
use crate::optimize::minimize_convex;
use crate::report::{serialize_extended_f64, serialize_extended_option};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("initial reserve must be positive and finite, got {0}")]
    InvalidReserve(f64),
    #[error("exponent must be nonnegative, got {0}")]
    InvalidExponent(f64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Adjustment(#[from] AdjustmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    GeneralOpt,
    FixedH,
    Corollary1,
    #[serde(rename = "periodic_C1")]
    PeriodicC1,
    #[serde(rename = "quasi_periodic_C2")]
    QuasiPeriodicC2,
    #[serde(rename = "theorem3_C3")]
    Theorem3C3,
    Kappa,
    UnionBaseline,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 8] = [
        Self::GeneralOpt,
        Self::FixedH,
        Self::Corollary1,
        Self::PeriodicC1,
        Self::QuasiPeriodicC2,
        Self::Theorem3C3,
        Self::Kappa,
        Self::UnionBaseline,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::GeneralOpt => "general_opt",
            Self::FixedH => "fixed_h",
            Self::Corollary1 => "corollary1",
            Self::PeriodicC1 => "periodic_C1",
            Self::QuasiPeriodicC2 => "quasi_periodic_C2",
            Self::Theorem3C3 => "theorem3_C3",
            Self::Kappa => "kappa",
            Self::UnionBaseline => "union_baseline",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

/// `psi(u) <= C exp(-L u)` for every `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// `log C`
    #[serde(serialize_with = "serialize_extended_f64")]
    pub log_c: f64,
    /// `L`, possibly `+inf`.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub exponent: f64,
}

impl Certificate {
    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }

    /// `log min(1, C exp(-L u))`.
    pub fn log_bound_at(&self, u: f64) -> f64 {
        if self.exponent.is_infinite() {
            return if u > 0.0 { f64::NEG_INFINITY } else { self.log_c.min(0.0) };
        }
        (self.log_c - self.exponent * u).min(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    /// `None` for certificate-only evaluations, which leave `log_bound = 0`.
    #[serde(serialize_with = "serialize_extended_option")]
    pub u: Option<f64>,
    /// `log min(1, bound)`; `-inf` means the bound is 0.
    #[serde(serialize_with = "serialize_extended_f64")]
    pub log_bound: f64,
    #[serde(serialize_with = "serialize_extended_f64")]
    pub h_star: f64,
    pub method: BoundMethod,
    pub certificate: Option<Certificate>,
    /// False when the bound rests on a truncated supremum.
    pub certified: bool,
}

impl BoundResult {
    pub fn log10_bound(&self) -> f64 {
        self.log_bound / LN_10
    }

    /// Linear bound value (underflows to 0 below ~1e-308).
    pub fn bound(&self) -> f64 {
        self.log_bound.exp()
    }
}

fn check_u(u: f64) -> Result<(), BoundError> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(BoundError::InvalidReserve(u))
    }
}

fn check_h(h: f64) -> Result<(), BoundError> {
    if h >= 0.0 {
        Ok(())
    } else {
        Err(BoundError::InvalidExponent(h))
    }
}

/// `-h u + s` with `+inf` absorbing and `0 * inf` read as 0.
fn exponent_value(h: f64, u: f64, s: ExtendedLogValue) -> f64 {
    if s.is_infinite() {
        f64::INFINITY
    } else if h.is_infinite() {
        f64::NEG_INFINITY
    } else {
        -h * u + s.value()
    }
}

/// Minimizes `-h u + s(h)` over `[0, upper]` where `s` may fail; returns
/// `(h*, value)` or the first error.
fn minimize_log_bound<F>(u: f64, upper: f64, mut s: F) -> Result<(f64, f64), ModelError>
where
    F: FnMut(f64) -> Result<ExtendedLogValue, ModelError>,
{
    let mut error = None;
    let m = minimize_convex(
        |h| match s(h) {
            Ok(v) => exponent_value(h, u, v),
            Err(e) => {
                error.get_or_insert(e);
                f64::INFINITY
            }
        },
        upper,
    );
    match error {
        Some(e) => Err(e),
        None => Ok((m.x, m.value)),
    }
}

/// `psi(u) <= exp(-h u) sup_k E exp(h S*_k)` at a fixed `h`.
pub fn bound_at_h(model: &RiskModel, u: f64, h: f64, policy: &TruncationPolicy) -> Result<BoundResult, BoundError> {
    check_u(u)?;
    check_h(h)?;
    let sup = model.sup_log_mgf(h, policy)?;
    Ok(BoundResult {
        u: Some(u),
        log_bound: exponent_value(h, u, sup.value).min(0.0),
        h_star: h,
        method: BoundMethod::FixedH,
        certificate: None,
        certified: sup.certified,
    })
}

/// The fixed-`h` bound minimized over `h` in the joint MGF domain.
///
/// `h*` is not restricted to `[0, L(S)]`; for fast-improving models it grows
/// with `u`.
pub fn bound_optimize(model: &RiskModel, u: f64, policy: &TruncationPolicy) -> Result<BoundResult, BoundError> {
    check_u(u)?;
    let upper = model.joint_domain_sup(policy);
    let (h_star, value) = minimize_log_bound(u, upper, |h| Ok(model.sup_log_mgf(h, policy)?.value))?;
    let certified = if h_star.is_finite() {
        model.sup_log_mgf(h_star, policy)?.certified
    } else {
        // -inf is only reached by decreasing forever; confirm at a large h
        model.sup_log_mgf(1e6, policy)?.certified
    };
    Ok(BoundResult {
        u: Some(u),
        log_bound: value.min(0.0),
        h_star,
        method: BoundMethod::GeneralOpt,
        certificate: None,
        certified,
    })
}

/// Largest exponent known to satisfy the defining criterion: the reported
/// value, or the feasible end of the bracket when the value sits on an MGF
/// domain edge where the criterion itself may be infinite.
fn feasible_exponent(r: &AdjustmentResult) -> f64 {
    if r.boundary {
        r.bracket.0
    } else {
        r.value
    }
}

/// `psi(u) <= inf_{h in [0, L(Y)]} exp(-h u) E exp(h Y*_1)`, with certificate
/// `(E exp(L(Y) Y*_1), L(Y))`.
pub fn bound_corollary1(model: &RiskModel, u: f64, tol: f64, policy: &TruncationPolicy) -> Result<BoundResult, BoundError> {
    check_u(u)?;
    let l_y = adjustment::solve_l_y(model, tol, policy)?;
    let first = model.distribution_at(1)?;
    let exponent = feasible_exponent(&l_y);
    if exponent == 0.0 {
        return Ok(BoundResult {
            u: Some(u),
            log_bound: 0.0,
            h_star: 0.0,
            method: BoundMethod::Corollary1,
            certificate: Some(Certificate {
                log_c: 0.0,
                exponent: 0.0,
            }),
            certified: l_y.certified,
        });
    }
    let (h_star, value) = minimize_log_bound(u, exponent, |h| Ok(first.log_mgf_at(h)))?;
    let log_c = if exponent.is_finite() {
        first.log_mgf_at(exponent).value()
    } else {
        // E exp(h Y*_1) <= 1 for every h
        0.0
    };
    Ok(BoundResult {
        u: Some(u),
        log_bound: value.min(0.0),
        h_star,
        method: BoundMethod::Corollary1,
        certificate: Some(Certificate { log_c, exponent }),
        certified: l_y.certified,
    })
}

/// Which finite reduction of `sup_k` a periodic bound uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodicVariant {
    /// Periodic laws, no interest: `max_{1<=k<=l} E exp(h S_k)` on `[0, L(S_l)]`.
    Cor3,
    /// `q_l v_l <= 1`, periodic rates: `max_{0<=k<l} E exp(h S*_k)` on `[0, L(S*_l)]`.
    Thm3,
    /// Window criterion holds at `l_star` from index `m` on:
    /// `max_{1<=k<=l+m-1} E exp(h S*_k)` on `[0, L*]`.
    CorP7 { m: usize, l_star: f64 },
}

impl PeriodicVariant {
    pub fn method(self) -> BoundMethod {
        match self {
            Self::Cor3 => BoundMethod::PeriodicC1,
            Self::Thm3 => BoundMethod::Theorem3C3,
            Self::CorP7 { .. } => BoundMethod::QuasiPeriodicC2,
        }
    }

    /// Indices `k` entering the finite max.
    fn range(self, l: usize) -> (usize, usize) {
        match self {
            Self::Cor3 => (1, l),
            Self::Thm3 => (0, l - 1),
            Self::CorP7 { m, .. } => (1, l + m - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOptions {
    pub tol: f64,
    /// Issue the certificate at this exponent instead of the largest feasible
    /// one (must not exceed it). A smaller exponent can have a smaller constant.
    pub certificate_exponent: Option<f64>,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self {
            tol: adjustment::DEFAULT_TOL,
            certificate_exponent: None,
        }
    }
}

/// `max_{lo<=k<=hi} G_k(h)` with `G_0 = 0`.
fn finite_max(model: &RiskModel, h: f64, (lo, hi): (usize, usize)) -> Result<ExtendedLogValue, ModelError> {
    let g = model.cumulative_log_mgf(h, hi)?;
    let mut best = if lo == 0 { Some(ExtendedLogValue::ZERO) } else { None };
    for v in &g[lo.max(1) - 1..] {
        best = Some(best.map_or(*v, |b| b.max(*v)));
    }
    Ok(best.unwrap_or(ExtendedLogValue::ZERO))
}

/// True when every partial sum `S*_k`, `lo <= k <= hi`, is almost surely <= 0.
fn partial_sums_nonpositive(model: &RiskModel, (lo, hi): (usize, usize)) -> Result<bool, ModelError> {
    let mut top = 0.0;
    for k in 1..=hi {
        let d = model.distribution_at(k)?;
        top += d.support().1 * model.discount_factor(k - 1);
        if k >= lo && top > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Periodic and quasi-periodic constant-exponent bounds.
///
/// With `u = None` only the certificate is computed (`log_bound = 0`).
pub fn bound_periodic(
    model: &RiskModel,
    l: usize,
    variant: PeriodicVariant,
    u: Option<f64>,
    opts: &PeriodicOptions,
) -> Result<BoundResult, BoundError> {
    if let Some(u) = u {
        check_u(u)?;
    }
    if l == 0 {
        return Err(BoundError::Hypothesis("l must be at least 1".into()));
    }
    let (exponent, certified) = match variant {
        PeriodicVariant::Cor3 => {
            match model.cycle_info() {
                Some((_, 1.0)) => {}
                _ => return Err(BoundError::Hypothesis("cor3 needs purely periodic increments".into())),
            }
            if !model.rates.is_zero() {
                return Err(BoundError::Hypothesis("cor3 needs r = 0 (use thm3 with interest)".into()));
            }
            let root = adjustment::solve_period_root(model, l, opts.tol)?;
            (feasible_exponent(&root), root.certified)
        }
        PeriodicVariant::Thm3 => {
            let root = adjustment::solve_period_root(model, l, opts.tol)?;
            (feasible_exponent(&root), root.certified)
        }
        PeriodicVariant::CorP7 { m, l_star } => {
            let check = adjustment::verify_l_star(model, l, m, l_star)?;
            if !check.holds {
                let reason = match check.rejection {
                    Some(adjustment::LStarRejection::UnverifiableTail) => "tail structure cannot certify the window criterion".to_string(),
                    _ => format!(
                        "window criterion fails at n = {} (log-MGF {})",
                        check.worst_n, check.worst_delta
                    ),
                };
                return Err(BoundError::Hypothesis(reason));
            }
            (l_star, true)
        }
    };
    let range = variant.range(l);

    let cert_exponent = match opts.certificate_exponent {
        Some(h) if !(h >= 0.0 && h <= exponent) => {
            return Err(BoundError::InvalidExponent(h));
        }
        Some(h) => h,
        None => exponent,
    };
    let certificate = if cert_exponent.is_finite() {
        let log_c = finite_max(model, cert_exponent, range)?;
        log_c.is_finite().then(|| Certificate {
            log_c: log_c.value(),
            exponent: cert_exponent,
        })
    } else if partial_sums_nonpositive(model, range)? {
        Some(Certificate {
            log_c: 0.0,
            exponent: f64::INFINITY,
        })
    } else {
        None
    };

    let (log_bound, h_star) = match u {
        Some(u) => {
            let (h, v) = minimize_log_bound(u, exponent, |h| finite_max(model, h, range))?;
            (v.min(0.0), h)
        }
        None => (0.0, cert_exponent),
    };
    Ok(BoundResult {
        u,
        log_bound,
        h_star,
        method: variant.method(),
        certificate,
        certified,
    })
}

/// `psi(u) <= exp(-kappa u)` for `Y*_k = b_k xi_k` with i.i.d. `xi` and
/// `b_k v_{k-1} <= 1`; here realized by single-law cycles with `q <= 1`.
pub fn bound_kappa(model: &RiskModel, u: f64, tol: f64) -> Result<BoundResult, BoundError> {
    check_u(u)?;
    match model.cycle_info() {
        Some((1, scale)) if scale <= 1.0 => {}
        _ => {
            return Err(BoundError::Hypothesis(
                "kappa bound needs a single-law cycle with scale at most 1".into(),
            ))
        }
    }
    let root = adjustment::solve_kappa(&model.distribution_at(1)?, tol)?;
    let kappa = feasible_exponent(&root);
    let certificate = Certificate {
        log_c: 0.0,
        exponent: kappa,
    };
    Ok(BoundResult {
        u: Some(u),
        log_bound: certificate.log_bound_at(u),
        h_star: kappa,
        method: BoundMethod::Kappa,
        certificate: Some(certificate),
        certified: root.certified,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `log(e^t / (1 - e^t))` for `t < 0`: the geometric tail `sum_{i>=1} e^{i t}`.
fn log_geometric_tail(t: f64) -> f64 {
    t - (-t.exp_m1()).ln()
}

/// `log sum_k exp(G_k(h))`, or `None` when the series diverges or is not
/// certified summable.
fn log_sum_partial_mgfs(model: &RiskModel, h: f64, policy: &TruncationPolicy) -> Result<Option<f64>, ModelError> {
    match model.structure() {
        Structure::Finite(len) => {
            let g = model.cumulative_log_mgf(h, len)?;
            if g.iter().any(|v| v.is_infinite()) {
                return Ok(None);
            }
            Ok(Some(g.iter().fold(f64::NEG_INFINITY, |s, v| log_add(s, v.value()))))
        }
        Structure::Tail(view) => {
            // with q_l v_l < 1 the partial sums converge, so exp(G_k) does not vanish
            if !view.is_exactly_periodic() {
                return Ok(None);
            }
            let mut sum = f64::NEG_INFINITY;
            let mut base = 0.0;
            if view.start > 0 {
                let g = model.cumulative_log_mgf(h, view.start)?;
                for v in &g {
                    if v.is_infinite() {
                        return Ok(None);
                    }
                    sum = log_add(sum, v.value());
                }
                base = g[view.start - 1].value();
            }
            let sums = view.block_sums(h * model.discount_factor(view.start));
            let full = sums[view.len() - 1];
            if full.is_infinite() || full.value() >= 0.0 {
                return Ok(None);
            }
            let block = sums.iter().fold(f64::NEG_INFINITY, |s, v| log_add(s, v.value()));
            // sum over blocks i >= 0 of exp(i T_l) = 1 / (1 - exp(T_l))
            let tail = base + block - (-full.value().exp_m1()).ln();
            Ok(Some(log_add(sum, tail)))
        }
        Structure::EventuallyDecreasing if model.rates.is_zero() => {
            // per-step terms are nonincreasing in k, so once a term t_k < 0 the
            // remainder is at most exp(G_k) * sum_{i>=1} exp(i t_k)
            let mut sum = f64::NEG_INFINITY;
            let mut acc = ExtendedLogValue::ZERO;
            let mut last = None;
            for (_, t) in model.terms(h).take(policy.k_max) {
                let t = t?;
                acc += t;
                if acc.is_infinite() {
                    return Ok(None);
                }
                sum = log_add(sum, acc.value());
                if t.value() < 0.0 {
                    let rest = acc.value() + log_geometric_tail(t.value());
                    last = Some(rest);
                    if rest - sum < -40.0 {
                        break;
                    }
                } else {
                    last = None;
                }
            }
            Ok(last.map(|rest| log_add(sum, rest)))
        }
        _ => Ok(None),
    }
}

/// `psi(u) <= exp(-h u) sum_k E exp(h S*_k)`; weaker than [`bound_at_h`] and
/// trivial (1) whenever the series is not certified summable.
pub fn bound_union_baseline(model: &RiskModel, u: f64, h: f64, policy: &TruncationPolicy) -> Result<BoundResult, BoundError> {
    check_u(u)?;
    check_h(h)?;
    let log_bound = match log_sum_partial_mgfs(model, h, policy)? {
        Some(s) => (s - h * u).min(0.0),
        None => 0.0,
    };
    Ok(BoundResult {
        u: Some(u),
        log_bound,
        h_star: h,
        method: BoundMethod::UnionBaseline,
        certificate: None,
        certified: true,
    })
}
