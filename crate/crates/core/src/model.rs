//! Non-homogeneous risk models.
//!
//! A [`RiskModel`] gives the law of every discounted increment `Y*_k` through a
//! [`SequenceRule`], plus deterministic interest floors `r_k >= 0` that define
//! the discount factors `v_k = prod_{j<=k} 1/(1+r_j)`. Model A is the special
//! case `r_k = 0`. An [`EventModel`] describes the same thing at the level of
//! premiums, claims, inter-arrival times and interest rates, and reduces to a
//! `RiskModel`.
//!
//! The central quantity is `G_k(h) = sum_{j<=k} log E exp(h v_{j-1} Y*_j)`,
//! the log-MGF of the discounted partial sum `S*_k`, and its supremum over `k`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DistError, IncrementDistribution};
use crate::extended::ExtendedLogValue;

/// Slack for sign tests on log-MGF values.
pub const LOG_SLACK: f64 = 1e-12;

/// `q_l v_l` within this distance of one counts as exactly periodic.
const PERIOD_RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("index {index} is beyond the explicit prefix of length {len}")]
    IndexBeyondPrefix { index: usize, len: usize },
    #[error("increment indices start at 1")]
    ZeroIndex,
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

/// How the law of `Y*_n` depends on `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceRule {
    /// Laws for `n = 1..=len`; the model ends there.
    Explicit { laws: Vec<IncrementDistribution> },
    /// `Y*_{n+l} ~ Y*_n` with `l = cycle.len()`.
    Periodic { cycle: Vec<IncrementDistribution> },
    /// `Y*_{n+l} ~ scale * Y*_n`.
    QuasiPeriodic {
        cycle: Vec<IncrementDistribution>,
        scale: f64,
    },
    /// Arbitrary laws for the first indices, then a periodic or quasi-periodic tail.
    PrefixTail {
        prefix: Vec<IncrementDistribution>,
        tail: Box<SequenceRule>,
    },
    /// `Y*_n ~ N(intercept + slope * n, 1)`.
    IndexedNormal { slope: f64, intercept: f64 },
    /// `P[Y*_n = 1] = 1/(n+1)`, `P[Y*_n = -1] = n/(n+1)`.
    IndexedTwoPoint,
}

impl SequenceRule {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Explicit { laws } => {
                if laws.is_empty() {
                    return Err(ModelError::Invalid("explicit rule has no laws".into()));
                }
                laws.iter().try_for_each(|d| d.validate())?;
            }
            Self::Periodic { cycle } => {
                if cycle.is_empty() {
                    return Err(ModelError::Invalid("periodic cycle is empty".into()));
                }
                cycle.iter().try_for_each(|d| d.validate())?;
            }
            Self::QuasiPeriodic { cycle, scale } => {
                if cycle.is_empty() {
                    return Err(ModelError::Invalid("quasi-periodic cycle is empty".into()));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(ModelError::Invalid(format!(
                        "quasi-periodic scale must be positive and finite, got {scale}"
                    )));
                }
                cycle.iter().try_for_each(|d| d.validate())?;
            }
            Self::PrefixTail { prefix, tail } => {
                prefix.iter().try_for_each(|d| d.validate())?;
                match tail.as_ref() {
                    Self::Periodic { .. } | Self::QuasiPeriodic { .. } => tail.validate()?,
                    _ => {
                        return Err(ModelError::Invalid(
                            "prefix_tail requires a periodic or quasi_periodic tail".into(),
                        ))
                    }
                }
            }
            Self::IndexedNormal { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite()) {
                    return Err(ModelError::Invalid("indexed_normal needs finite coefficients".into()));
                }
            }
            Self::IndexedTwoPoint => {}
        }
        Ok(())
    }

    /// The law of `Y*_n` as `(base law, scale)`; the actual law is `scale * base`.
    fn law(&self, n: usize) -> Result<(Cow<'_, IncrementDistribution>, f64), ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroIndex);
        }
        match self {
            Self::Explicit { laws } => laws
                .get(n - 1)
                .map(|d| (Cow::Borrowed(d), 1.0))
                .ok_or(ModelError::IndexBeyondPrefix {
                    index: n,
                    len: laws.len(),
                }),
            Self::Periodic { cycle } => Ok((Cow::Borrowed(&cycle[(n - 1) % cycle.len()]), 1.0)),
            Self::QuasiPeriodic { cycle, scale } => {
                let l = cycle.len();
                let block = (n - 1) / l;
                Ok((Cow::Borrowed(&cycle[(n - 1) % l]), scale.powi(block as i32)))
            }
            Self::PrefixTail { prefix, tail } => {
                if n <= prefix.len() {
                    Ok((Cow::Borrowed(&prefix[n - 1]), 1.0))
                } else {
                    tail.law(n - prefix.len())
                }
            }
            Self::IndexedNormal { slope, intercept } => Ok((
                Cow::Owned(IncrementDistribution::Normal {
                    mean: intercept + slope * n as f64,
                    variance: 1.0,
                }),
                1.0,
            )),
            Self::IndexedTwoPoint => Ok((
                Cow::Owned(IncrementDistribution::TwoPoint {
                    x1: 1.0,
                    p1: 1.0 / (n as f64 + 1.0),
                    x2: -1.0,
                }),
                1.0,
            )),
        }
    }

    /// Number of indices for an explicit rule, `None` for infinite rules.
    pub fn explicit_len(&self) -> Option<usize> {
        match self {
            Self::Explicit { laws } => Some(laws.len()),
            _ => None,
        }
    }
}

/// A deterministic per-index real sequence. `Explicit` lists cover only their
/// own length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueRule {
    Constant { value: f64 },
    Periodic { values: Vec<f64> },
    Explicit { values: Vec<f64> },
}

impl ValueRule {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    /// Value at index `k >= 1`, `None` past the end of an explicit list.
    pub fn at(&self, k: usize) -> Option<f64> {
        debug_assert!(k >= 1);
        match self {
            Self::Constant { value } => Some(*value),
            Self::Periodic { values } => values.get((k - 1) % values.len()).copied(),
            Self::Explicit { values } => values.get(k - 1).copied(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Self::Constant { value } => std::slice::from_ref(value),
            Self::Periodic { values } | Self::Explicit { values } => values,
        }
    }

    fn check(&self, name: &str, min_exclusive: Option<f64>) -> Result<(), ModelError> {
        if let Self::Periodic { values } = self {
            if values.is_empty() {
                return Err(ModelError::Invalid(format!("{name}: periodic list is empty")));
            }
        }
        for &x in self.values() {
            let ok = x.is_finite()
                && match min_exclusive {
                    Some(m) => x > m,
                    None => x >= 0.0,
                };
            if !ok {
                return Err(ModelError::Invalid(format!("{name}: invalid value {x}")));
            }
        }
        Ok(())
    }

    /// Period of the sequence if it is periodic (constant counts as period 1).
    fn period(&self) -> Option<usize> {
        match self {
            Self::Constant { .. } => Some(1),
            Self::Periodic { values } => Some(values.len()),
            Self::Explicit { .. } => None,
        }
    }
}

/// Interest-rate floors `r_k >= 0`. An explicit list is followed by zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateRule(pub ValueRule);

impl Default for RateRule {
    fn default() -> Self {
        Self::zero()
    }
}

impl RateRule {
    pub fn zero() -> Self {
        Self(ValueRule::constant(0.0))
    }

    pub fn constant(rate: f64) -> Self {
        Self(ValueRule::constant(rate))
    }

    pub fn periodic(rates: Vec<f64>) -> Self {
        Self(ValueRule::Periodic { values: rates })
    }

    pub fn explicit(rates: Vec<f64>) -> Self {
        Self(ValueRule::Explicit { values: rates })
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.0.at(k).unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().iter().all(|&r| r == 0.0)
    }

    /// Whether `r_{n+l} = r_n` for every `n > start`.
    pub fn periodic_from(&self, start: usize, l: usize) -> bool {
        let horizon = match &self.0 {
            ValueRule::Constant { .. } => return true,
            ValueRule::Periodic { values } => start + values.len(),
            // both sides are zero once n exceeds the list
            ValueRule::Explicit { values } => values.len().max(start),
        };
        (start + 1..=horizon).all(|n| self.rate(n) == self.rate(n + l))
    }
}

/// Resolved search limits for scanning `sup_k` over indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Largest index scanned when no finite reduction applies.
    pub k_max: usize,
    /// Consecutive strictly-decreasing steps required before a scan is certified.
    pub window: usize,
    /// Per-step decrease threshold: a term counts as decreasing when it is
    /// below `-delta * min(1, h)` (terms vanish linearly as `h -> 0`).
    pub delta: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            k_max: 10_000,
            window: 50,
            delta: 1e-6,
        }
    }
}

impl TruncationPolicy {
    pub fn with_k_max(k_max: usize) -> Self {
        Self {
            k_max,
            ..Self::default()
        }
    }

    fn threshold(&self, h: f64) -> f64 {
        -self.delta * h.min(1.0)
    }
}

/// Where the supremum over `k` was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupArgmax {
    /// Attained at this index (smallest on ties).
    Index(usize),
    /// The supremum is `+inf`.
    Unbounded,
    /// The value is a proven upper bound from the quasi-periodic reduction and
    /// is not attained by any scanned index.
    Bound,
    /// The scan hit `k_max` without a certificate; the value is only the
    /// running maximum.
    Undetermined,
}

/// Result of `sup_k G_k(h)` (or `sup_j` of the per-index terms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupLogMgf {
    pub value: ExtendedLogValue,
    pub argmax: SupArgmax,
    /// False when the value is a truncated running maximum that may
    /// understate the true supremum.
    pub certified: bool,
}

impl SupLogMgf {
    fn exact(value: ExtendedLogValue, k: usize) -> Self {
        Self {
            value,
            argmax: SupArgmax::Index(k),
            certified: true,
        }
    }

    fn unbounded() -> Self {
        Self {
            value: ExtendedLogValue::INFINITY,
            argmax: SupArgmax::Unbounded,
            certified: true,
        }
    }
}

/// Running `(max, argmax)` with smallest-index tie breaking.
#[derive(Debug, Clone, Copy)]
struct RunningMax {
    value: f64,
    index: usize,
}

impl RunningMax {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            index: 0,
        }
    }

    fn push(&mut self, value: f64, index: usize) {
        if value > self.value {
            self.value = value;
            self.index = index;
        }
    }
}

/// Periodic or quasi-periodic tail starting after `start` prefix indices.
#[derive(Debug, Clone)]
pub(crate) struct TailView<'a> {
    pub start: usize,
    pub cycle: &'a [IncrementDistribution],
    /// `q_l`
    pub scale: f64,
    /// Discount weights inside one block, `w_j = prod_{t<=j} 1/(1+r_{start+t})`, `j = 0..l`.
    pub weights: Vec<f64>,
}

impl TailView<'_> {
    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    /// `q_l * v_l` measured over one tail block.
    pub fn ratio(&self) -> f64 {
        self.scale * self.weights[self.len()]
    }

    pub fn is_exactly_periodic(&self) -> bool {
        (self.ratio() - 1.0).abs() <= PERIOD_RATIO_TOLERANCE
    }

    /// `T_k(t) = sum_{j<=k} log E exp(t w_{j-1} Y_j)` for `k = 1..=l`,
    /// i.e. the block partial sums at argument `t`.
    pub fn block_sums(&self, t: f64) -> Vec<ExtendedLogValue> {
        let mut acc = ExtendedLogValue::ZERO;
        self.cycle
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| {
                acc += d.log_mgf_at(t * w);
                acc
            })
            .collect()
    }

    /// Per-index terms `log E exp(t w_{j-1} Y_j)` of one block.
    pub fn block_terms(&self, t: f64) -> Vec<ExtendedLogValue> {
        self.cycle
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| d.log_mgf_at(t * w))
            .collect()
    }
}

/// How `sup_k` can be evaluated for a model.
#[derive(Debug, Clone)]
pub(crate) enum Structure<'a> {
    /// Finitely many indices.
    Finite(usize),
    Tail(TailView<'a>),
    /// Indexed family whose per-step term is eventually negative forever.
    EventuallyDecreasing,
    /// Indexed normal with positive slope and no discounting: terms grow without bound.
    Explosive,
    /// No reduction applies.
    Unstructured,
}

/// A risk model: laws of `Y*_k` plus interest floors `r_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskModel {
    pub increments: SequenceRule,
    #[serde(default)]
    pub rates: RateRule,
    #[serde(default)]
    pub label: String,
}

impl RiskModel {
    pub fn new(increments: SequenceRule, rates: RateRule, label: impl Into<String>) -> Result<Self, ModelError> {
        let model = Self {
            increments,
            rates,
            label: label.into(),
        };
        model.validate()?;
        Ok(model)
    }

    /// Model A (no interest) with the given increments.
    pub fn without_interest(increments: SequenceRule, label: impl Into<String>) -> Result<Self, ModelError> {
        Self::new(increments, RateRule::zero(), label)
    }

    /// i.i.d. increments without interest.
    pub fn iid(law: IncrementDistribution, label: impl Into<String>) -> Result<Self, ModelError> {
        Self::without_interest(SequenceRule::Periodic { cycle: vec![law] }, label)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.increments.validate()?;
        self.rates.0.check("rates", None)
    }

    /// Law of `Y*_k`.
    pub fn distribution_at(&self, k: usize) -> Result<IncrementDistribution, ModelError> {
        let (base, scale) = self.increments.law(k)?;
        Ok(base.scale_by(scale)?)
    }

    /// `v_k = prod_{j<=k} 1/(1+r_j)`, evaluated in log space; `v_0 = 1`.
    pub fn discount_factor(&self, k: usize) -> f64 {
        self.log_discount(k).exp()
    }

    fn log_discount(&self, k: usize) -> f64 {
        -(1..=k).map(|j| self.rates.rate(j).ln_1p()).sum::<f64>()
    }

    /// Number of defined indices, `None` when unbounded.
    pub fn horizon(&self) -> Option<usize> {
        self.increments.explicit_len()
    }

    /// `log E exp(h v_{k-1} Y*_k)` given `log v_{k-1}`.
    fn term_with_discount(&self, k: usize, h: f64, log_v_prev: f64) -> Result<ExtendedLogValue, ModelError> {
        let (base, scale) = self.increments.law(k)?;
        Ok(base.log_mgf_at(h * scale * log_v_prev.exp()))
    }

    /// Iterator over `(k, term_k(h))` for `k = 1, 2, ...`, tracking discounts.
    pub(crate) fn terms(&self, h: f64) -> impl Iterator<Item = (usize, Result<ExtendedLogValue, ModelError>)> + '_ {
        let mut log_v = 0.0;
        (1..).map(move |k| {
            let t = self.term_with_discount(k, h, log_v);
            log_v -= self.rates.rate(k).ln_1p();
            (k, t)
        })
    }

    /// `[G_1(h), ..., G_K(h)]`.
    pub fn cumulative_log_mgf(&self, h: f64, k_max: usize) -> Result<Vec<ExtendedLogValue>, ModelError> {
        check_h(h)?;
        let mut acc = ExtendedLogValue::ZERO;
        self.terms(h)
            .take(k_max)
            .map(|(_, t)| {
                acc += t?;
                Ok(acc)
            })
            .collect()
    }

    /// Classifies the model for finite reductions of `sup_k`.
    pub(crate) fn structure(&self) -> Structure<'_> {
        match &self.increments {
            SequenceRule::Explicit { laws } => Structure::Finite(laws.len()),
            SequenceRule::Periodic { cycle } => self.tail_structure(0, cycle, 1.0),
            SequenceRule::QuasiPeriodic { cycle, scale } => self.tail_structure(0, cycle, *scale),
            SequenceRule::PrefixTail { prefix, tail } => match tail.as_ref() {
                SequenceRule::Periodic { cycle } => self.tail_structure(prefix.len(), cycle, 1.0),
                SequenceRule::QuasiPeriodic { cycle, scale } => {
                    self.tail_structure(prefix.len(), cycle, *scale)
                }
                _ => Structure::Unstructured,
            },
            SequenceRule::IndexedNormal { slope, .. } => {
                if *slope <= 0.0 {
                    Structure::EventuallyDecreasing
                } else if self.rates.is_zero() {
                    Structure::Explosive
                } else {
                    Structure::Unstructured
                }
            }
            SequenceRule::IndexedTwoPoint => Structure::EventuallyDecreasing,
        }
    }

    fn tail_structure<'a>(&self, start: usize, cycle: &'a [IncrementDistribution], scale: f64) -> Structure<'a> {
        let l = cycle.len();
        if !self.rates.periodic_from(start, l) {
            return Structure::Unstructured;
        }
        let mut weights = Vec::with_capacity(l + 1);
        let mut log_w = 0.0;
        weights.push(1.0);
        for j in 1..=l {
            log_w -= self.rates.rate(start + j).ln_1p();
            weights.push(log_w.exp());
        }
        let view = TailView {
            start,
            cycle,
            scale,
            weights,
        };
        if view.ratio() > 1.0 + PERIOD_RATIO_TOLERANCE {
            Structure::Unstructured
        } else {
            Structure::Tail(view)
        }
    }

    /// Cycle length and `q_l` of a pure periodic/quasi-periodic rule, regardless
    /// of whether the rates satisfy the reduction hypotheses.
    pub(crate) fn cycle_info(&self) -> Option<(usize, f64)> {
        match &self.increments {
            SequenceRule::Periodic { cycle } => Some((cycle.len(), 1.0)),
            SequenceRule::QuasiPeriodic { cycle, scale } => Some((cycle.len(), *scale)),
            _ => None,
        }
    }

    /// `sup_{k>=1} G_k(h)`.
    ///
    /// Periodic tails are reduced exactly: with `q_l v_l = 1` the sup is the
    /// max over one cycle (or `+inf` when a full cycle has positive log-MGF).
    /// With `q_l v_l < 1`, blocks are scanned until the scaled block sum turns
    /// nonpositive; from there on every later partial sum is dominated by the
    /// current level plus `max(0, block partial sums)`. Indexed families are
    /// scanned until a run of `policy.window` negative steps certifies the
    /// maximum. Anything else returns an undetermined running maximum.
    pub fn sup_log_mgf(&self, h: f64, policy: &TruncationPolicy) -> Result<SupLogMgf, ModelError> {
        check_h(h)?;
        if h == 0.0 {
            return Ok(SupLogMgf::exact(ExtendedLogValue::ZERO, 1));
        }
        match self.structure() {
            Structure::Finite(len) => self.scan_sup(h, len, true),
            Structure::Tail(view) => self.tail_sup(h, &view, policy),
            Structure::EventuallyDecreasing => self.scan_sup_certified(h, policy),
            Structure::Explosive => Ok(SupLogMgf::unbounded()),
            Structure::Unstructured => self.scan_sup(h, policy.k_max, false),
        }
    }

    /// Plain scan of `G_1..G_n`. `complete` marks the scan as covering the
    /// whole model.
    fn scan_sup(&self, h: f64, n: usize, complete: bool) -> Result<SupLogMgf, ModelError> {
        let mut acc = ExtendedLogValue::ZERO;
        let mut best = RunningMax::new();
        for (k, t) in self.terms(h).take(n) {
            acc += t?;
            if acc.is_infinite() {
                return Ok(SupLogMgf::unbounded());
            }
            best.push(acc.value(), k);
        }
        Ok(SupLogMgf {
            value: ExtendedLogValue::finite(best.value),
            argmax: if complete {
                SupArgmax::Index(best.index)
            } else {
                SupArgmax::Undetermined
            },
            certified: complete,
        })
    }

    fn scan_sup_certified(&self, h: f64, policy: &TruncationPolicy) -> Result<SupLogMgf, ModelError> {
        let mut acc = ExtendedLogValue::ZERO;
        let mut best = RunningMax::new();
        let mut run = 0usize;
        for (k, t) in self.terms(h).take(policy.k_max) {
            let t = t?;
            acc += t;
            if acc.is_infinite() {
                return Ok(SupLogMgf::unbounded());
            }
            best.push(acc.value(), k);
            if t.value() < policy.threshold(h) {
                run += 1;
                if run >= policy.window {
                    return Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index));
                }
            } else {
                run = 0;
            }
        }
        Ok(SupLogMgf {
            value: ExtendedLogValue::finite(best.value),
            argmax: SupArgmax::Undetermined,
            certified: false,
        })
    }

    fn tail_sup(&self, h: f64, view: &TailView<'_>, policy: &TruncationPolicy) -> Result<SupLogMgf, ModelError> {
        let l = view.len();
        // prefix
        let mut best = RunningMax::new();
        let mut base = ExtendedLogValue::ZERO;
        for (k, t) in self.terms(h).take(view.start) {
            base += t?;
            if base.is_infinite() {
                return Ok(SupLogMgf::unbounded());
            }
            best.push(base.value(), k);
        }
        let base = base.value();
        let h_tail = h * self.discount_factor(view.start);
        let ratio = view.ratio();

        if view.is_exactly_periodic() {
            let sums = view.block_sums(h_tail);
            if sums[l - 1].is_infinite() || sums[l - 1].value() > 0.0 {
                return Ok(SupLogMgf::unbounded());
            }
            for (k, s) in sums.iter().enumerate() {
                best.push(base + s.value(), view.start + k + 1);
            }
            return Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index));
        }

        let mut level = base;
        let mut t = h_tail;
        let mut block = 0usize;
        loop {
            let sums = view.block_sums(t);
            let full = sums[l - 1];
            if full.is_infinite() {
                return Ok(SupLogMgf::unbounded());
            }
            let offset = view.start + block * l;
            if full.value() <= LOG_SLACK {
                // every later partial sum is at most level + max(0, max_k T_k(t))
                let mut tail_best = RunningMax::new();
                for (k, s) in sums.iter().enumerate() {
                    tail_best.push(s.value(), offset + k + 1);
                }
                if tail_best.value >= 0.0 {
                    best.push(level + tail_best.value, tail_best.index);
                    return Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index));
                }
                if best.value >= level {
                    return Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index));
                }
                return Ok(SupLogMgf {
                    value: ExtendedLogValue::finite(level),
                    argmax: SupArgmax::Bound,
                    certified: true,
                });
            }
            for (k, s) in sums.iter().enumerate() {
                best.push(level + s.value(), offset + k + 1);
            }
            level += full.value();
            block += 1;
            t *= ratio;
            if offset + l >= policy.k_max {
                return Ok(SupLogMgf {
                    value: ExtendedLogValue::finite(best.value),
                    argmax: SupArgmax::Undetermined,
                    certified: false,
                });
            }
        }
    }

    /// `sup_{j>=1} log E exp(h v_{j-1} Y*_j)`, the per-index criterion behind
    /// `L(Y)`. When the per-index terms tend to zero from below (scaled
    /// quasi-periodic tails) the supremum is that limit, `0`, with
    /// `argmax = Bound`.
    pub fn sup_term(&self, h: f64, policy: &TruncationPolicy) -> Result<SupLogMgf, ModelError> {
        check_h(h)?;
        if h == 0.0 {
            return Ok(SupLogMgf::exact(ExtendedLogValue::ZERO, 1));
        }
        match self.structure() {
            Structure::Finite(len) => self.scan_term(h, len, true),
            Structure::Tail(view) => {
                let mut best = RunningMax::new();
                for (k, t) in self.terms(h).take(view.start) {
                    let t = t?;
                    if t.is_infinite() {
                        return Ok(SupLogMgf::exact(t, k));
                    }
                    best.push(t.value(), k);
                }
                let h_tail = h * self.discount_factor(view.start);
                for (j, t) in view.block_terms(h_tail).into_iter().enumerate() {
                    if t.is_infinite() {
                        return Ok(SupLogMgf::exact(t, view.start + j + 1));
                    }
                    best.push(t.value(), view.start + j + 1);
                }
                // for q_l v_l < 1 the tail terms shrink toward 0 by convexity
                if !view.is_exactly_periodic() && best.value < 0.0 {
                    return Ok(SupLogMgf {
                        value: ExtendedLogValue::ZERO,
                        argmax: SupArgmax::Bound,
                        certified: true,
                    });
                }
                Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index))
            }
            Structure::EventuallyDecreasing => self.indexed_sup_term(h, policy),
            Structure::Explosive => Ok(SupLogMgf::unbounded()),
            Structure::Unstructured => self.scan_term(h, policy.k_max, false),
        }
    }

    fn scan_term(&self, h: f64, n: usize, complete: bool) -> Result<SupLogMgf, ModelError> {
        let mut best = RunningMax::new();
        for (k, t) in self.terms(h).take(n) {
            let t = t?;
            if t.is_infinite() {
                return Ok(SupLogMgf::exact(t, k));
            }
            best.push(t.value(), k);
        }
        Ok(SupLogMgf {
            value: ExtendedLogValue::finite(best.value),
            argmax: if complete {
                SupArgmax::Index(best.index)
            } else {
                SupArgmax::Undetermined
            },
            certified: complete,
        })
    }

    /// Indexed families: once a term is negative every later term is (the
    /// mean sequence is nonincreasing and so are the discounts), so the
    /// scanned maximum is global after a run of negative terms. With
    /// discounting the terms tend to 0 from below, which caps the supremum at 0.
    fn indexed_sup_term(&self, h: f64, policy: &TruncationPolicy) -> Result<SupLogMgf, ModelError> {
        let mut best = RunningMax::new();
        let mut run = 0usize;
        for (k, t) in self.terms(h).take(policy.k_max) {
            let t = t?;
            best.push(t.value(), k);
            if t.value() < policy.threshold(h) {
                run += 1;
            } else {
                run = 0;
            }
            if run >= policy.window {
                if best.value < 0.0 && !self.rates.is_zero() {
                    return Ok(SupLogMgf {
                        value: ExtendedLogValue::ZERO,
                        argmax: SupArgmax::Bound,
                        certified: true,
                    });
                }
                return Ok(SupLogMgf::exact(ExtendedLogValue::finite(best.value), best.index));
            }
        }
        Ok(SupLogMgf {
            value: ExtendedLogValue::finite(best.value),
            argmax: SupArgmax::Undetermined,
            certified: false,
        })
    }

    /// Largest `h` at which every per-index MGF that the reductions look at is
    /// finite (`+inf` when unbounded). For tails with `q_l v_l <= 1` later
    /// blocks have larger domains, so the prefix plus one cycle decides.
    pub fn joint_domain_sup(&self, policy: &TruncationPolicy) -> f64 {
        let n = match self.structure() {
            Structure::Finite(len) => len,
            Structure::Tail(view) => view.start + view.len(),
            Structure::EventuallyDecreasing | Structure::Explosive => return f64::INFINITY,
            Structure::Unstructured => policy.k_max,
        };
        let mut log_v = 0.0f64;
        let mut sup = f64::INFINITY;
        for k in 1..=n {
            if let Ok((base, scale)) = self.increments.law(k) {
                let d = base.scale_by(scale).map(|d| d.mgf_domain_sup()).unwrap_or(f64::INFINITY);
                sup = sup.min(d / log_v.exp());
            }
            log_v -= self.rates.rate(k).ln_1p();
        }
        sup
    }
}

fn check_h(h: f64) -> Result<(), ModelError> {
    if h.is_nan() {
        Err(DistError::NanArgument.into())
    } else if h < 0.0 {
        Err(DistError::NegativeArgument(h).into())
    } else {
        Ok(())
    }
}

/// A per-index rule for increment laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawRule {
    Constant { law: IncrementDistribution },
    Periodic { laws: Vec<IncrementDistribution> },
    Explicit { laws: Vec<IncrementDistribution> },
}

impl LawRule {
    fn at(&self, k: usize) -> Option<&IncrementDistribution> {
        match self {
            Self::Constant { law } => Some(law),
            Self::Periodic { laws } => laws.get((k - 1) % laws.len()),
            Self::Explicit { laws } => laws.get(k - 1),
        }
    }

    fn period(&self) -> Option<usize> {
        match self {
            Self::Constant { .. } => Some(1),
            Self::Periodic { laws } => Some(laws.len()),
            Self::Explicit { .. } => None,
        }
    }

    fn explicit_len(&self) -> Option<usize> {
        match self {
            Self::Explicit { laws } => Some(laws.len()),
            _ => None,
        }
    }

    fn laws(&self) -> &[IncrementDistribution] {
        match self {
            Self::Constant { law } => std::slice::from_ref(law),
            Self::Periodic { laws } | Self::Explicit { laws } => laws,
        }
    }
}

/// Event-level description: premium rates `p_k`, claims `Z_k`, inter-arrival
/// times `theta_k`, premium interest `beta_k` and reserve interest `alpha_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventModel {
    pub premium_rate: ValueRule,
    pub claims: LawRule,
    pub interarrivals: LawRule,
    #[serde(default = "zero_rule")]
    pub premium_interest: ValueRule,
    #[serde(default = "zero_rule")]
    pub reserve_interest: ValueRule,
    #[serde(default)]
    pub label: String,
}

/// One claim epoch of an [`EventModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct EventStep {
    pub premium_rate: f64,
    pub premium_interest: f64,
    pub reserve_interest: f64,
    pub claim: IncrementDistribution,
    pub interarrival: IncrementDistribution,
}

fn zero_rule() -> ValueRule {
    ValueRule::constant(0.0)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl EventModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.premium_rate.check("premium_rate", Some(0.0))?;
        self.premium_interest.check("premium_interest", None)?;
        self.reserve_interest.check("reserve_interest", None)?;
        for (name, rule) in [("claims", &self.claims), ("interarrivals", &self.interarrivals)] {
            if rule.laws().is_empty() {
                return Err(ModelError::Invalid(format!("{name}: no laws")));
            }
            for law in rule.laws() {
                law.validate()?;
            }
        }
        for law in self.claims.laws() {
            if law.support().0 < 0.0 {
                return Err(ModelError::Invalid("claims must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Law of `Y*_k = (Z_k - (1+beta_k) p_k theta_k) / (1+alpha_k)` and `alpha_k`.
    fn index_law(&self, k: usize) -> Result<(IncrementDistribution, f64), ModelError> {
        let step = self.step(k)?;
        let y = IncrementDistribution::compound(step.claim, (1.0 + step.premium_interest) * step.premium_rate, step.interarrival)?;
        Ok((y.scale_by(1.0 / (1.0 + step.reserve_interest))?, step.reserve_interest))
    }

    /// Parameters of claim epoch `k`.
    pub fn step(&self, k: usize) -> Result<EventStep, ModelError> {
        if k == 0 {
            return Err(ModelError::ZeroIndex);
        }
        let len = self.explicit_len().unwrap_or(usize::MAX);
        let missing = || ModelError::IndexBeyondPrefix { index: k, len };
        Ok(EventStep {
            premium_rate: self.premium_rate.at(k).ok_or_else(missing)?,
            premium_interest: self.premium_interest.at(k).ok_or_else(missing)?,
            reserve_interest: self.reserve_interest.at(k).ok_or_else(missing)?,
            claim: self.claims.at(k).ok_or_else(missing)?.clone(),
            interarrival: self.interarrivals.at(k).ok_or_else(missing)?.clone(),
        })
    }

    /// Number of defined claim epochs, `None` when unbounded.
    pub fn horizon(&self) -> Option<usize> {
        self.explicit_len()
    }

    fn explicit_len(&self) -> Option<usize> {
        [
            self.premium_rate_len(),
            self.claims.explicit_len(),
            self.interarrivals.explicit_len(),
            explicit_values_len(&self.premium_interest),
            explicit_values_len(&self.reserve_interest),
        ]
        .into_iter()
        .flatten()
        .min()
    }

    fn premium_rate_len(&self) -> Option<usize> {
        explicit_values_len(&self.premium_rate)
    }

    /// Reduces to a [`RiskModel`] with `r_k = alpha_k`.
    pub fn reduce(&self) -> Result<RiskModel, ModelError> {
        self.validate()?;
        let (n, periodic) = match self.explicit_len() {
            Some(len) => (len, false),
            None => {
                let periods = [
                    self.premium_rate.period(),
                    self.claims.period(),
                    self.interarrivals.period(),
                    self.premium_interest.period(),
                    self.reserve_interest.period(),
                ];
                let lcm = periods.into_iter().flatten().fold(1, |acc, p| acc / gcd(acc, p) * p);
                (lcm, true)
            }
        };
        let mut laws = Vec::with_capacity(n);
        let mut rates = Vec::with_capacity(n);
        for k in 1..=n {
            let (law, alpha) = self.index_law(k)?;
            laws.push(law);
            rates.push(alpha);
        }
        let (increments, rates) = if periodic {
            let rates = if rates.iter().all(|&r| r == rates[0]) {
                RateRule::constant(rates[0])
            } else {
                RateRule::periodic(rates)
            };
            (SequenceRule::Periodic { cycle: laws }, rates)
        } else {
            (SequenceRule::Explicit { laws }, RateRule::explicit(rates))
        };
        RiskModel::new(increments, rates, self.label.clone())
    }
}

fn explicit_values_len(rule: &ValueRule) -> Option<usize> {
    match rule {
        ValueRule::Explicit { values } => Some(values.len()),
        _ => None,
    }
}
