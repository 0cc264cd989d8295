//! Increment distributions with closed-form log-MGFs and exact samplers.
//!
//! Every family exposes `log E[e^{tY}]` for any real `t` (the public entry
//! point restricts to `t >= 0`), the finiteness frontier of that MGF, the mean,
//! and a sampler driven by a caller-supplied random stream.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extended::{log_sum_exp_f64, ExtendedLogValue};

/// Tolerance for probability vectors summing to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Below this `|t (b - a) / 2|` the uniform MGF switches to its series form.
const UNIFORM_SERIES_CUTOFF: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid {family} parameter: {reason}")]
    InvalidParameter { family: &'static str, reason: String },
    #[error("MGF argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("MGF argument is NaN")]
    NanArgument,
}

fn invalid(family: &'static str, reason: impl Into<String>) -> DistError {
    DistError::InvalidParameter {
        family,
        reason: reason.into(),
    }
}

/// Law of a single increment `Y` (surplus decrease over one inter-claim period).
///
/// Values are validated on construction and on deserialization, so every
/// instance is well formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub enum IncrementDistribution {
    Normal { mean: f64, variance: f64 },
    Uniform { lower: f64, upper: f64 },
    TwoPoint { x1: f64, p1: f64, x2: f64 },
    /// `P[Y > x] = exp(-rate (x - shift))` for `x >= shift`.
    ShiftedExponential { rate: f64, shift: f64 },
    /// `Y = Z - premium_rate * theta` with independent claim `Z` and
    /// inter-arrival time `theta`.
    Compound {
        claim: Box<IncrementDistribution>,
        premium_rate: f64,
        interarrival: Box<IncrementDistribution>,
    },
    Degenerate { value: f64 },
    /// Law of `factor * Y` with `Y ~ inner`.
    Scaled {
        factor: f64,
        inner: Box<IncrementDistribution>,
    },
    FiniteDiscrete { atoms: Vec<(f64, f64)> },
}

/// Wire form of [`IncrementDistribution`]; validated when converted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum DistSpec {
    Normal {
        mean: f64,
        variance: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    TwoPoint {
        x1: f64,
        p1: f64,
        x2: f64,
    },
    ShiftedExponential {
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    Compound {
        claim: Box<IncrementDistribution>,
        premium_rate: f64,
        interarrival: Box<IncrementDistribution>,
    },
    Degenerate {
        value: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<IncrementDistribution>,
    },
    FiniteDiscrete {
        atoms: Vec<(f64, f64)>,
    },
}

impl TryFrom<DistSpec> for IncrementDistribution {
    type Error = DistError;

    fn try_from(spec: DistSpec) -> Result<Self, DistError> {
        let dist = match spec {
            DistSpec::Normal { mean, variance } => Self::Normal { mean, variance },
            DistSpec::Uniform { lower, upper } => Self::Uniform { lower, upper },
            DistSpec::TwoPoint { x1, p1, x2 } => Self::TwoPoint { x1, p1, x2 },
            DistSpec::ShiftedExponential { rate, shift } => {
                Self::ShiftedExponential { rate, shift }
            }
            DistSpec::Compound {
                claim,
                premium_rate,
                interarrival,
            } => Self::Compound {
                claim,
                premium_rate,
                interarrival,
            },
            DistSpec::Degenerate { value } => Self::Degenerate { value },
            DistSpec::Scaled { factor, inner } => Self::Scaled { factor, inner },
            DistSpec::FiniteDiscrete { atoms } => Self::FiniteDiscrete { atoms },
        };
        dist.validate()?;
        Ok(dist)
    }
}

impl From<IncrementDistribution> for DistSpec {
    fn from(dist: IncrementDistribution) -> Self {
        use IncrementDistribution as D;
        match dist {
            D::Normal { mean, variance } => Self::Normal { mean, variance },
            D::Uniform { lower, upper } => Self::Uniform { lower, upper },
            D::TwoPoint { x1, p1, x2 } => Self::TwoPoint { x1, p1, x2 },
            D::ShiftedExponential { rate, shift } => Self::ShiftedExponential { rate, shift },
            D::Compound {
                claim,
                premium_rate,
                interarrival,
            } => Self::Compound {
                claim,
                premium_rate,
                interarrival,
            },
            D::Degenerate { value } => Self::Degenerate { value },
            D::Scaled { factor, inner } => Self::Scaled { factor, inner },
            D::FiniteDiscrete { atoms } => Self::FiniteDiscrete { atoms },
        }
    }
}

fn check_finite(family: &'static str, name: &str, x: f64) -> Result<(), DistError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(family, format!("{name} must be finite, got {x}")))
    }
}

fn check_probability(family: &'static str, p: f64) -> Result<(), DistError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(family, format!("probability {p} outside [0, 1]")))
    }
}

impl IncrementDistribution {
    pub fn normal(mean: f64, variance: f64) -> Result<Self, DistError> {
        Self::checked(Self::Normal { mean, variance })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self, DistError> {
        Self::checked(Self::Uniform { lower, upper })
    }

    pub fn two_point(x1: f64, p1: f64, x2: f64) -> Result<Self, DistError> {
        Self::checked(Self::TwoPoint { x1, p1, x2 })
    }

    pub fn shifted_exponential(rate: f64, shift: f64) -> Result<Self, DistError> {
        Self::checked(Self::ShiftedExponential { rate, shift })
    }

    /// Exponential with the given rate, supported on `[0, inf)`.
    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        Self::shifted_exponential(rate, 0.0)
    }

    pub fn compound(
        claim: IncrementDistribution,
        premium_rate: f64,
        interarrival: IncrementDistribution,
    ) -> Result<Self, DistError> {
        Self::checked(Self::Compound {
            claim: Box::new(claim),
            premium_rate,
            interarrival: Box::new(interarrival),
        })
    }

    pub fn degenerate(value: f64) -> Result<Self, DistError> {
        Self::checked(Self::Degenerate { value })
    }

    pub fn scaled(factor: f64, inner: IncrementDistribution) -> Result<Self, DistError> {
        Self::checked(Self::Scaled {
            factor,
            inner: Box::new(inner),
        })
    }

    pub fn finite_discrete(atoms: Vec<(f64, f64)>) -> Result<Self, DistError> {
        Self::checked(Self::FiniteDiscrete { atoms })
    }

    fn checked(dist: Self) -> Result<Self, DistError> {
        dist.validate()?;
        Ok(dist)
    }

    /// Checks every parameter constraint, recursively.
    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            Self::Normal { mean, variance } => {
                check_finite("normal", "mean", *mean)?;
                check_finite("normal", "variance", *variance)?;
                if *variance <= 0.0 {
                    return Err(invalid("normal", "variance must be positive"));
                }
            }
            Self::Uniform { lower, upper } => {
                check_finite("uniform", "lower", *lower)?;
                check_finite("uniform", "upper", *upper)?;
                if lower >= upper {
                    return Err(invalid("uniform", "lower must be below upper"));
                }
            }
            Self::TwoPoint { x1, p1, x2 } => {
                check_finite("two_point", "x1", *x1)?;
                check_finite("two_point", "x2", *x2)?;
                check_probability("two_point", *p1)?;
            }
            Self::ShiftedExponential { rate, shift } => {
                check_finite("shifted_exponential", "rate", *rate)?;
                check_finite("shifted_exponential", "shift", *shift)?;
                if *rate <= 0.0 {
                    return Err(invalid("shifted_exponential", "rate must be positive"));
                }
            }
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => {
                claim.validate()?;
                interarrival.validate()?;
                check_finite("compound", "premium_rate", *premium_rate)?;
                if *premium_rate <= 0.0 {
                    return Err(invalid("compound", "premium rate must be positive"));
                }
                if claim.support().0 < 0.0 {
                    return Err(invalid("compound", "claim support must lie in [0, inf)"));
                }
                if interarrival.support().0 < 0.0 || interarrival.has_atom_at_zero() {
                    return Err(invalid(
                        "compound",
                        "inter-arrival support must lie in (0, inf)",
                    ));
                }
            }
            Self::Degenerate { value } => check_finite("degenerate", "value", *value)?,
            Self::Scaled { factor, inner } => {
                check_finite("scaled", "factor", *factor)?;
                if *factor == 0.0 {
                    return Err(invalid("scaled", "factor must be nonzero"));
                }
                inner.validate()?;
            }
            Self::FiniteDiscrete { atoms } => {
                if atoms.is_empty() {
                    return Err(invalid("finite_discrete", "no atoms"));
                }
                let mut total = 0.0;
                for &(x, p) in atoms {
                    check_finite("finite_discrete", "atom", x)?;
                    check_probability("finite_discrete", p)?;
                    total += p;
                }
                if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(invalid(
                        "finite_discrete",
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Closed interval containing the support (endpoints may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Uniform { lower, upper } => (*lower, *upper),
            Self::TwoPoint { x1, p1, x2 } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (x, p) in [(*x1, *p1), (*x2, 1.0 - p1)] {
                    if p > 0.0 {
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                (lo, hi)
            }
            Self::ShiftedExponential { shift, .. } => (*shift, f64::INFINITY),
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => {
                let (zl, zh) = claim.support();
                let (tl, th) = interarrival.support();
                (zl - premium_rate * th, zh - premium_rate * tl)
            }
            Self::Degenerate { value } => (*value, *value),
            Self::Scaled { factor, inner } => {
                let (lo, hi) = inner.support();
                if *factor > 0.0 {
                    (factor * lo, factor * hi)
                } else {
                    (factor * hi, factor * lo)
                }
            }
            Self::FiniteDiscrete { atoms } => atoms
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                    (lo.min(*x), hi.max(*x))
                }),
        }
    }

    fn has_atom_at_zero(&self) -> bool {
        match self {
            Self::Degenerate { value } => *value == 0.0,
            Self::TwoPoint { x1, p1, x2 } => {
                (*x1 == 0.0 && *p1 > 0.0) || (*x2 == 0.0 && *p1 < 1.0)
            }
            Self::FiniteDiscrete { atoms } => atoms.iter().any(|&(x, p)| x == 0.0 && p > 0.0),
            Self::Scaled { inner, .. } => inner.has_atom_at_zero(),
            _ => false,
        }
    }

    /// `log E[e^{hY}]` for `h >= 0`.
    pub fn log_mgf(&self, h: f64) -> Result<ExtendedLogValue, DistError> {
        if h.is_nan() {
            return Err(DistError::NanArgument);
        }
        if h < 0.0 {
            return Err(DistError::NegativeArgument(h));
        }
        Ok(self.log_mgf_at(h))
    }

    /// `log E[e^{tY}]` for any real `t`; `+inf` outside the open domain.
    pub fn log_mgf_at(&self, t: f64) -> ExtendedLogValue {
        if t == 0.0 {
            return ExtendedLogValue::ZERO;
        }
        let raw = match self {
            Self::Normal { mean, variance } => t * mean + 0.5 * t * t * variance,
            Self::Uniform { lower, upper } => {
                let half = 0.5 * t * (upper - lower);
                t * 0.5 * (lower + upper) + log_sinhc(half)
            }
            Self::TwoPoint { x1, p1, x2 } => {
                log_sum_exp_f64(&[p1.ln() + t * x1, (1.0 - p1).ln() + t * x2])
                    .unwrap_or(f64::INFINITY)
            }
            Self::ShiftedExponential { rate, shift } => {
                if t >= *rate {
                    f64::INFINITY
                } else {
                    t * shift + rate.ln() - (rate - t).ln()
                }
            }
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => {
                return claim.log_mgf_at(t) + interarrival.log_mgf_at(-premium_rate * t);
            }
            Self::Degenerate { value } => t * value,
            Self::Scaled { factor, inner } => return inner.log_mgf_at(factor * t),
            Self::FiniteDiscrete { atoms } => {
                let terms: Vec<f64> = atoms.iter().map(|&(x, p)| p.ln() + t * x).collect();
                log_sum_exp_f64(&terms).unwrap_or(f64::INFINITY)
            }
        };
        ExtendedLogValue::from_computed(raw)
    }

    /// `sup { h >= 0 : E[e^{hY}] < inf }`.
    pub fn mgf_domain_sup(&self) -> f64 {
        self.domain().1
    }

    /// `(sup { s >= 0 : E[e^{-sY}] < inf }, sup { h >= 0 : E[e^{hY}] < inf })`.
    fn domain(&self) -> (f64, f64) {
        match self {
            Self::ShiftedExponential { rate, .. } => (f64::INFINITY, *rate),
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => {
                let (zn, zp) = claim.domain();
                let (tn, tp) = interarrival.domain();
                (zn.min(tp / premium_rate), zp.min(tn / premium_rate))
            }
            Self::Scaled { factor, inner } => {
                let (n, p) = inner.domain();
                let c = factor.abs();
                if *factor > 0.0 {
                    (n / c, p / c)
                } else {
                    (p / c, n / c)
                }
            }
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// `E[Y]`; `-inf` is permitted by the contract but no current family yields it.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Normal { mean, .. } => *mean,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
            Self::TwoPoint { x1, p1, x2 } => p1 * x1 + (1.0 - p1) * x2,
            Self::ShiftedExponential { rate, shift } => shift + 1.0 / rate,
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => claim.mean() - premium_rate * interarrival.mean(),
            Self::Degenerate { value } => *value,
            Self::Scaled { factor, inner } => factor * inner.mean(),
            Self::FiniteDiscrete { atoms } => atoms.iter().map(|(x, p)| x * p).sum(),
        }
    }

    /// One exact draw; deterministic given the stream state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            Self::Uniform { lower, upper } => lower + (upper - lower) * rng.gen::<f64>(),
            Self::TwoPoint { x1, p1, x2 } => {
                if rng.gen::<f64>() < *p1 {
                    *x1
                } else {
                    *x2
                }
            }
            Self::ShiftedExponential { rate, shift } => {
                // 1 - U lies in (0, 1]
                let u: f64 = rng.gen();
                shift - (1.0 - u).ln() / rate
            }
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => {
                let z = claim.sample(rng);
                let theta = interarrival.sample(rng);
                z - premium_rate * theta
            }
            Self::Degenerate { value } => *value,
            Self::Scaled { factor, inner } => factor * inner.sample(rng),
            Self::FiniteDiscrete { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return x;
                    }
                }
                atoms
                    .iter()
                    .rev()
                    .find(|(_, p)| *p > 0.0)
                    .map(|(x, _)| *x)
                    .unwrap_or(atoms[atoms.len() - 1].0)
            }
        }
    }

    /// `factor * self`, collapsing nested scalings and unit factors.
    pub fn scale_by(&self, factor: f64) -> Result<Self, DistError> {
        if factor == 1.0 {
            return Ok(self.clone());
        }
        match self {
            Self::Scaled { factor: f, inner } => (**inner).scale_by(f * factor),
            _ => Self::scaled(factor, self.clone()),
        }
    }
}

/// `log(sinh(x) / x)`, accurate near zero and for large `|x|`.
fn log_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < UNIFORM_SERIES_CUTOFF {
        let x2 = a * a;
        x2 / 6.0 - x2 * x2 / 180.0
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a + (-(-2.0 * a).exp()).ln_1p() - (2.0 * a).ln()
    }
}

/// Flattened sampler for hot loops: scalings are folded into the parameters
/// so common families draw without recursion. Consumes the stream exactly
/// like [`IncrementDistribution::sample`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sampler {
    /// `offset + scale * U`
    Affine { offset: f64, scale: f64 },
    /// `shift - scale * ln(1 - U)`
    Exponential { shift: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
    TwoPoint { p1: f64, x1: f64, x2: f64 },
    Constant(f64),
    Compound {
        claim: Box<Sampler>,
        premium_rate: f64,
        interarrival: Box<Sampler>,
        factor: f64,
    },
    Discrete { dist: IncrementDistribution, factor: f64 },
}

impl Sampler {
    fn scaled(self, c: f64) -> Self {
        match self {
            Self::Affine { offset, scale } => Self::Affine {
                offset: offset * c,
                scale: scale * c,
            },
            Self::Exponential { shift, scale } => Self::Exponential {
                shift: shift * c,
                scale: scale * c,
            },
            Self::Normal { mean, sd } => Self::Normal { mean: mean * c, sd: sd * c },
            Self::TwoPoint { p1, x1, x2 } => Self::TwoPoint {
                p1,
                x1: x1 * c,
                x2: x2 * c,
            },
            Self::Constant(v) => Self::Constant(v * c),
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
                factor,
            } => Self::Compound {
                claim,
                premium_rate,
                interarrival,
                factor: factor * c,
            },
            Self::Discrete { dist, factor } => Self::Discrete { dist, factor: factor * c },
        }
    }

    #[inline(always)]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Affine { offset, scale } => offset + scale * rng.gen::<f64>(),
            Self::Exponential { shift, scale } => shift - scale * (1.0 - rng.gen::<f64>()).ln(),
            Self::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            Self::TwoPoint { p1, x1, x2 } => {
                if rng.gen::<f64>() < *p1 {
                    *x1
                } else {
                    *x2
                }
            }
            Self::Constant(v) => *v,
            _ => self.sample_nested(rng),
        }
    }

    #[inline(never)]
    fn sample_nested<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
                factor,
            } => {
                let z = claim.sample(rng);
                let theta = interarrival.sample(rng);
                factor * (z - premium_rate * theta)
            }
            Self::Discrete { dist, factor } => factor * dist.sample(rng),
            other => other.sample(rng),
        }
    }
}

impl IncrementDistribution {
    pub(crate) fn sampler(&self) -> Sampler {
        match self {
            Self::Normal { mean, variance } => Sampler::Normal {
                mean: *mean,
                sd: variance.sqrt(),
            },
            Self::Uniform { lower, upper } => Sampler::Affine {
                offset: *lower,
                scale: upper - lower,
            },
            Self::TwoPoint { x1, p1, x2 } => Sampler::TwoPoint {
                p1: *p1,
                x1: *x1,
                x2: *x2,
            },
            Self::ShiftedExponential { rate, shift } => Sampler::Exponential {
                shift: *shift,
                scale: 1.0 / rate,
            },
            Self::Compound {
                claim,
                premium_rate,
                interarrival,
            } => Sampler::Compound {
                claim: Box::new(claim.sampler()),
                premium_rate: *premium_rate,
                interarrival: Box::new(interarrival.sampler()),
                factor: 1.0,
            },
            Self::Degenerate { value } => Sampler::Constant(*value),
            Self::Scaled { factor, inner } => inner.sampler().scaled(*factor),
            Self::FiniteDiscrete { .. } => Sampler::Discrete {
                dist: self.clone(),
                factor: 1.0,
            },
        }
    }
}
