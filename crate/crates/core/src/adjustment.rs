//! Adjustment coefficients (Lundberg exponents).
//!
//! Every flavor is the right end of a feasible interval `{h >= 0 : crit(h) <= 0}`
//! where `crit` is a supremum of convex functions vanishing at zero, so all of
//! them share one doubling-plus-bisection solver.

use serde::Serialize;
use thiserror::Error;

use crate::distributions::IncrementDistribution;
use crate::model::{ModelError, RiskModel, Structure, TruncationPolicy, LOG_SLACK};
use crate::optimize::{feasible_sup, FeasibleSup, Probe};

/// Default absolute tolerance on `h`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance for the `L*` window criterion `G_{n+l} - G_n <= 0`.
pub const WINDOW_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdjustmentError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("period hypothesis violated: {0}")]
    PeriodHypothesis(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    /// `sup { h : sup_j E exp(h v_{j-1} Y*_j) <= 1 }`
    #[serde(rename = "L_Y")]
    PerIncrement,
    /// `sup { h : sup_k E exp(h S*_k) <= 1 }`
    #[serde(rename = "L_S")]
    PartialSum,
    /// `sup { h : E exp(h S*_l) <= 1 }`
    #[serde(rename = "L_Sl")]
    PeriodSum,
    /// Positive root of `E exp(kappa Y*_1) = 1`.
    #[serde(rename = "kappa")]
    Kappa,
    /// A supplied `L*` checked against the window criterion.
    #[serde(rename = "L_star")]
    Supplied,
}

impl Flavor {
    pub fn tag(self) -> &'static str {
        match self {
            Self::PerIncrement => "L_Y",
            Self::PartialSum => "L_S",
            Self::PeriodSum => "L_Sl",
            Self::Kappa => "kappa",
            Self::Supplied => "L_star",
        }
    }
}

/// Why `E exp(kappa Y) = 1` has no positive root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingRoot {
    /// `E Y >= 0`: the MGF exceeds one immediately.
    NonnegativeMean,
    /// The MGF stays below one up to the edge of its domain and jumps to infinity there.
    DomainBoundary,
    /// The MGF stays below one for every `h > 0`.
    StaysBelowOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustmentResult {
    /// In `[0, +inf]`.
    #[serde(serialize_with = "crate::report::serialize_extended_f64")]
    pub value: f64,
    pub flavor: Flavor,
    /// Final `[feasible, infeasible]` bisection interval.
    #[serde(serialize_with = "crate::report::serialize_extended_pair")]
    pub bracket: (f64, f64),
    /// False when some supremum inside the criterion was a truncated scan;
    /// `value` is then only an estimate.
    pub certified: bool,
    /// `value` is the edge of the joint MGF domain.
    pub boundary: bool,
    pub iterations: usize,
    /// Set by [`solve_kappa`] when no root exists; `value` then holds the
    /// feasible-set supremum instead.
    pub missing_root: Option<MissingRoot>,
}

impl AdjustmentResult {
    fn from_search(flavor: Flavor, s: FeasibleSup) -> Self {
        Self {
            value: s.value,
            flavor,
            bracket: s.bracket,
            certified: s.certified,
            boundary: s.at_boundary,
            iterations: s.iterations,
            missing_root: None,
        }
    }
}

fn check_tol(tol: f64) -> Result<(), AdjustmentError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(AdjustmentError::BadTolerance(tol))
    }
}

/// Runs the bisection, surfacing the first model error raised by a probe.
fn search<F>(domain_sup: f64, tol: f64, mut probe: F) -> Result<FeasibleSup, AdjustmentError>
where
    F: FnMut(f64) -> Result<Probe, ModelError>,
{
    let mut error = None;
    let result = feasible_sup(
        |h| match probe(h) {
            Ok(p) => p,
            Err(e) => {
                error.get_or_insert(e);
                Probe {
                    feasible: false,
                    certified: false,
                }
            }
        },
        domain_sup,
        tol,
    );
    match error {
        Some(e) => Err(e.into()),
        None => Ok(result),
    }
}

/// `L(Y)`: the per-increment coefficient `sup{h : sup_j E exp(h v_{j-1} Y*_j) <= 1}`.
pub fn solve_l_y(model: &RiskModel, tol: f64, policy: &TruncationPolicy) -> Result<AdjustmentResult, AdjustmentError> {
    check_tol(tol)?;
    let s = search(model.joint_domain_sup(policy), tol, |h| {
        let sup = model.sup_term(h, policy)?;
        Ok(Probe {
            feasible: sup.value.value() <= LOG_SLACK,
            certified: sup.certified,
        })
    })?;
    Ok(AdjustmentResult::from_search(Flavor::PerIncrement, s))
}

/// `L(S)`: the partial-sum coefficient `sup{h : sup_k E exp(h S*_k) <= 1}`.
pub fn solve_l_s(model: &RiskModel, tol: f64, policy: &TruncationPolicy) -> Result<AdjustmentResult, AdjustmentError> {
    check_tol(tol)?;
    let s = search(model.joint_domain_sup(policy), tol, |h| {
        let sup = model.sup_log_mgf(h, policy)?;
        Ok(Probe {
            feasible: sup.value.value() <= LOG_SLACK,
            certified: sup.certified,
        })
    })?;
    Ok(AdjustmentResult::from_search(Flavor::PartialSum, s))
}

/// Checks that a pure periodic/quasi-periodic model satisfies
/// `q_l v_l <= 1` and `r_{n+l} = r_n` for the period `l`.
pub(crate) fn check_period_hypothesis(model: &RiskModel, l: usize) -> Result<(), AdjustmentError> {
    let violated = |msg: String| Err(AdjustmentError::PeriodHypothesis(msg));
    let Some((cycle_len, scale)) = model.cycle_info() else {
        return violated("increments are not a pure periodic or quasi-periodic rule".into());
    };
    if l == 0 || !l.is_multiple_of(cycle_len) {
        return violated(format!("l = {l} is not a multiple of the cycle length {cycle_len}"));
    }
    if !model.rates.periodic_from(0, l) {
        return violated(format!("rates are not periodic with period {l}"));
    }
    let q_l = scale.powi((l / cycle_len) as i32);
    let ratio = q_l * model.discount_factor(l);
    if ratio > 1.0 + 1e-12 {
        return violated(format!("q_l v_l = {ratio} exceeds 1"));
    }
    Ok(())
}

/// `L(S_l*) = sup{h : E exp(h S*_l) <= 1}` for a periodic or quasi-periodic model.
pub fn solve_period_root(model: &RiskModel, l: usize, tol: f64) -> Result<AdjustmentResult, AdjustmentError> {
    check_tol(tol)?;
    check_period_hypothesis(model, l)?;
    let policy = TruncationPolicy::with_k_max(l);
    let s = search(model.joint_domain_sup(&policy), tol, |h| {
        let g = model.cumulative_log_mgf(h, l)?;
        Ok(Probe {
            feasible: g[l - 1].value() <= LOG_SLACK,
            certified: true,
        })
    })?;
    Ok(AdjustmentResult::from_search(Flavor::PeriodSum, s))
}

/// Why a supplied `L*` was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LStarRejection {
    /// Some window increment has positive log-MGF.
    WindowCriterion,
    /// No tail structure carries the check beyond the verified window.
    UnverifiableTail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LStarVerification {
    pub holds: bool,
    pub rejection: Option<LStarRejection>,
    /// Indices `n` checked explicitly.
    pub checked: (usize, usize),
    /// Largest `G_{n+l}(L*) - G_n(L*)` over the window.
    pub worst_delta: f64,
    pub worst_n: usize,
}

/// Checks `E exp(L* (S*_{n+l} - S*_n)) <= 1` for every `n >= m`.
///
/// The infinite quantifier is discharged by the model's tail: shifting `n`
/// by one cycle rescales the argument of `Delta_n` by `q v <= 1`, and a convex
/// function vanishing at 0 that is nonpositive at `h` stays nonpositive on
/// `[0, h]`. One cycle past the prefix therefore covers every later `n`.
/// Explicit (finite) models are checked over every window that fits.
pub fn verify_l_star(model: &RiskModel, l: usize, m: usize, l_star: f64) -> Result<LStarVerification, AdjustmentError> {
    if l == 0 || m == 0 {
        return Err(AdjustmentError::PeriodHypothesis("l and m must be at least 1".into()));
    }
    if !(l_star >= 0.0 && l_star.is_finite()) {
        return Err(ModelError::Invalid(format!("L* must be finite and nonnegative, got {l_star}")).into());
    }
    let last_n = match model.structure() {
        Structure::Finite(len) => {
            if len < m + l {
                return Ok(LStarVerification {
                    holds: true,
                    rejection: None,
                    checked: (m, m.saturating_sub(1)),
                    worst_delta: 0.0,
                    worst_n: m,
                });
            }
            len - l
        }
        Structure::Tail(view) => m.max(view.start + 1) + l.max(view.len()) - 1,
        _ => {
            return Ok(LStarVerification {
                holds: false,
                rejection: Some(LStarRejection::UnverifiableTail),
                checked: (m, m.saturating_sub(1)),
                worst_delta: f64::NAN,
                worst_n: m,
            })
        }
    };
    let g = model.cumulative_log_mgf(l_star, last_n + l)?;
    let at = |k: usize| if k == 0 { 0.0 } else { g[k - 1].value() };
    let mut worst_delta = f64::NEG_INFINITY;
    let mut worst_n = m;
    for n in m..=last_n {
        let delta = at(n + l) - at(n);
        let delta = if delta.is_nan() { f64::INFINITY } else { delta };
        if delta > worst_delta {
            worst_delta = delta;
            worst_n = n;
        }
    }
    let holds = worst_delta <= WINDOW_SLACK;
    Ok(LStarVerification {
        holds,
        rejection: (!holds).then_some(LStarRejection::WindowCriterion),
        checked: (m, last_n),
        worst_delta,
        worst_n,
    })
}

/// Positive root `kappa` of `log E exp(kappa Y) = 0`.
pub fn solve_kappa(dist: &IncrementDistribution, tol: f64) -> Result<AdjustmentResult, AdjustmentError> {
    check_tol(tol)?;
    let domain = dist.mgf_domain_sup();
    let s = search(domain, tol, |h| {
        Ok(Probe {
            feasible: dist.log_mgf_at(h).value() <= LOG_SLACK,
            certified: true,
        })
    })?;
    let mut result = AdjustmentResult::from_search(Flavor::Kappa, s);
    result.missing_root = if dist.mean() >= 0.0 {
        Some(MissingRoot::NonnegativeMean)
    } else if s.value.is_infinite() {
        Some(MissingRoot::StaysBelowOne)
    } else if s.at_boundary {
        // a root exactly at the edge shows up as log-MGF -> 0 from below
        let near = dist.log_mgf_at(s.bracket.0).value();
        (near < -1e-9).then_some(MissingRoot::DomainBoundary)
    } else {
        None
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RateRule, SequenceRule};

    const TOL: f64 = 1e-10;

    fn normal(mean: f64) -> IncrementDistribution {
        IncrementDistribution::normal(mean, 1.0).unwrap()
    }

    fn classical() -> IncrementDistribution {
        IncrementDistribution::compound(
            IncrementDistribution::exponential(1.0).unwrap(),
            1.0,
            IncrementDistribution::exponential(0.5).unwrap(),
        )
        .unwrap()
    }

    fn periodic(cycle: Vec<IncrementDistribution>) -> RiskModel {
        RiskModel::without_interest(SequenceRule::Periodic { cycle }, "p").unwrap()
    }

    #[test]
    fn l_y_examples() {
        let p = TruncationPolicy::default();
        let iid = RiskModel::iid(normal(-0.5), "iid").unwrap();
        let r = solve_l_y(&iid, TOL, &p).unwrap();
        assert!((r.value - 1.0).abs() <= TOL, "{r:?}");
        assert!(r.certified);

        let det = RiskModel::iid(IncrementDistribution::degenerate(-1.0).unwrap(), "det").unwrap();
        assert_eq!(solve_l_y(&det, TOL, &p).unwrap().value, f64::INFINITY);

        // a_1 >= 0: the first MGF exceeds one for every h > 0
        let ex1_pos = periodic(vec![normal(0.25), normal(-1.25)]);
        assert!(solve_l_y(&ex1_pos, TOL, &p).unwrap().value <= TOL);
    }

    #[test]
    fn l_s_examples() {
        let p = TruncationPolicy::default();
        // G_1(h) = -h/4 + h^2/2 binds before G_2(h) = -h + h^2
        let ex1 = periodic(vec![normal(-0.25), normal(-0.75)]);
        let r = solve_l_s(&ex1, TOL, &p).unwrap();
        assert!((r.value - 0.5).abs() <= 2.0 * TOL, "{r:?}");
        let ex1_low = periodic(vec![normal(-0.5), normal(-0.5)]);
        let r = solve_l_s(&ex1_low, TOL, &p).unwrap();
        assert!((r.value - 1.0).abs() <= 2.0 * TOL, "{r:?}");

        let c = RiskModel::iid(classical(), "classical").unwrap();
        let r = solve_l_s(&c, TOL, &p).unwrap();
        assert!((r.value - 0.5).abs() <= 2.0 * TOL, "{r:?}");
    }

    #[test]
    fn period_root_examples() {
        let ex1 = periodic(vec![normal(-0.25), normal(-0.75)]);
        let r = solve_period_root(&ex1, 2, TOL).unwrap();
        assert!((r.value - 1.0).abs() <= 2.0 * TOL);

        let zero = periodic(vec![
            IncrementDistribution::degenerate(-1.0).unwrap(),
            IncrementDistribution::degenerate(1.0).unwrap(),
        ]);
        assert_eq!(solve_period_root(&zero, 2, TOL).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn period_root_rejects_bad_hypotheses() {
        let ex1 = periodic(vec![normal(-0.25), normal(-0.75)]);
        assert!(matches!(
            solve_period_root(&ex1, 3, TOL),
            Err(AdjustmentError::PeriodHypothesis(_))
        ));
        let growing = RiskModel::without_interest(
            SequenceRule::QuasiPeriodic {
                cycle: vec![normal(-1.0)],
                scale: 1.5,
            },
            "grow",
        )
        .unwrap();
        assert!(solve_period_root(&growing, 1, TOL).is_err());
        // interest can compensate the growth: q v = 1.5 / 1.5 = 1
        let balanced = RiskModel::new(
            SequenceRule::QuasiPeriodic {
                cycle: vec![normal(-1.0)],
                scale: 1.5,
            },
            RateRule::constant(0.5),
            "balanced",
        )
        .unwrap();
        let r = solve_period_root(&balanced, 1, TOL).unwrap();
        assert!((r.value - 2.0).abs() <= 2.0 * TOL);
    }

    #[test]
    fn l_star_examples() {
        let ex1 = periodic(vec![normal(-0.25), normal(-0.75)]);
        assert!(verify_l_star(&ex1, 2, 1, 1.0).unwrap().holds);
        assert!(verify_l_star(&ex1, 2, 1, 0.0).unwrap().holds);
        let bad = verify_l_star(&ex1, 2, 1, 1.5).unwrap();
        assert!(!bad.holds);
        assert!((bad.worst_delta - 0.75).abs() < 1e-12);
        let ex3 = RiskModel::without_interest(
            SequenceRule::IndexedNormal {
                slope: -0.5,
                intercept: 0.25,
            },
            "ex3",
        )
        .unwrap();
        let r = verify_l_star(&ex3, 2, 1, 1.0).unwrap();
        assert_eq!(r.rejection, Some(LStarRejection::UnverifiableTail));
    }

    #[test]
    fn kappa_examples() {
        let r = solve_kappa(&normal(-0.5), TOL).unwrap();
        assert!((r.value - 1.0).abs() <= TOL);
        assert_eq!(r.missing_root, None);

        let r = solve_kappa(&classical(), TOL).unwrap();
        assert!((r.value - 0.5).abs() <= TOL);
        assert_eq!(r.missing_root, None);

        let r = solve_kappa(&IncrementDistribution::degenerate(-1.0).unwrap(), TOL).unwrap();
        assert_eq!(r.missing_root, Some(MissingRoot::StaysBelowOne));

        let r = solve_kappa(&normal(0.5), TOL).unwrap();
        assert_eq!(r.missing_root, Some(MissingRoot::NonnegativeMean));
        assert_eq!(r.value, 0.0);

        // e^{-3h}/(1-h) = 1 has its root inside (0, 1)
        let edge = IncrementDistribution::shifted_exponential(1.0, -3.0).unwrap();
        let r = solve_kappa(&edge, TOL).unwrap();
        assert_eq!(r.missing_root, None);
        assert!(!r.boundary && r.value < 1.0);
        assert!(edge.log_mgf_at(r.bracket.0).value() <= LOG_SLACK);
        assert!(edge.log_mgf_at(r.bracket.1).value() > 0.0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(solve_kappa(&normal(-1.0), 0.0).is_err());
    }
}
