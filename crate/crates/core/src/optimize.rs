//! Scalar search routines: monotone-feasibility bisection and golden-section
//! minimization of convex extended-real functions.

/// Hard cap on bisection steps.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Doubling stops past this exponent and the feasible set is declared unbounded.
const DOUBLING_CAP: f64 = 1e15;

const GOLDEN_ITERATIONS: usize = 400;

/// Outcome of one feasibility probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Probe {
    pub feasible: bool,
    /// False when the probe relied on an uncertified supremum.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FeasibleSup {
    /// `sup { h : feasible(h) }` (may be `+inf`).
    pub value: f64,
    /// Final `[feasible, infeasible]` bracket.
    pub bracket: (f64, f64),
    /// The infeasible end never left the MGF domain boundary.
    pub at_boundary: bool,
    pub certified: bool,
    pub iterations: usize,
}

/// Supremum of a feasible set `{h >= 0 : feasible(h)}` known to be an interval
/// containing 0, with `domain_sup` the point where the criterion turns infinite.
///
/// Starts at `min(1, domain_sup / 2)`, doubles while feasible, then bisects to
/// width `tol`.
pub(crate) fn feasible_sup<F>(mut probe: F, domain_sup: f64, tol: f64) -> FeasibleSup
where
    F: FnMut(f64) -> Probe,
{
    let mut certified = true;
    let mut check = |h: f64, certified: &mut bool| {
        let p = probe(h);
        *certified &= p.certified;
        p.feasible
    };

    let mut lo = 0.0;
    let mut hi;
    let mut at_boundary = false;
    let mut iterations = 0;
    let mut h = if domain_sup.is_finite() {
        (0.5 * domain_sup).min(1.0)
    } else {
        1.0
    };
    loop {
        iterations += 1;
        if check(h, &mut certified) {
            lo = h;
            let next = 2.0 * h;
            if next >= domain_sup {
                hi = domain_sup;
                at_boundary = true;
                break;
            }
            if next > DOUBLING_CAP {
                return FeasibleSup {
                    value: f64::INFINITY,
                    bracket: (lo, f64::INFINITY),
                    at_boundary: false,
                    certified,
                    iterations,
                };
            }
            h = next;
        } else {
            hi = h;
            break;
        }
    }

    while hi - lo > tol && iterations < MAX_BISECTION_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if check(mid, &mut certified) {
            lo = mid;
        } else {
            hi = mid;
            at_boundary = false;
        }
    }

    let value = if at_boundary { hi } else { lo };
    FeasibleSup {
        value,
        bracket: (lo, hi),
        at_boundary,
        certified,
        iterations,
    }
}

/// A minimizer and its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Minimizes a convex function on `[0, upper]` (`upper` may be `+inf`).
/// Both finite endpoints are always evaluated.
///
/// `f` may return `+inf` (outside its effective domain) and `-inf`. With an
/// infinite upper limit the bracket is found by doubling from 1 until `f`
/// increases; convexity puts the minimizer left of that point. If `f` keeps
/// decreasing past the doubling cap the minimum is reported as `(+inf, -inf)`.
pub(crate) fn minimize_convex<F>(mut f: F, upper: f64) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let mut best = Minimum {
        x: 0.0,
        value: f(0.0),
    };
    let track = |x: f64, v: f64, best: &mut Minimum| {
        if v < best.value {
            *best = Minimum { x, value: v };
        }
    };

    let (a, b) = if upper.is_finite() {
        // the right endpoint is a legitimate candidate (constant-exponent forms)
        let v = f(upper);
        track(upper, v, &mut best);
        (0.0, upper)
    } else {
        let mut prev2 = 0.0;
        let mut prev = 0.0;
        let mut prev_value = best.value;
        let mut h = 1.0;
        loop {
            let v = f(h);
            track(h, v, &mut best);
            if v == f64::NEG_INFINITY {
                return Minimum {
                    x: h,
                    value: f64::NEG_INFINITY,
                };
            }
            if v > prev_value {
                break (prev2, h);
            }
            if h > DOUBLING_CAP {
                return Minimum {
                    x: f64::INFINITY,
                    value: f64::NEG_INFINITY,
                };
            }
            prev2 = prev;
            prev = h;
            prev_value = v;
            h *= 2.0;
        }
    };

    let m = golden_section(&mut f, a, b);
    track(m.x, m.value, &mut best);
    best
}

/// Golden-section search for a unimodal function on `[a, b]`.
pub(crate) fn golden_section<F>(f: &mut F, mut a: f64, mut b: f64) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    };
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc < best.value {
                best = Minimum { x: c, value: fc };
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best.value {
                best = Minimum { x: d, value: fd };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_sup_simple_root() {
        // h^2 - h <= 0 on [0, 1]
        let r = feasible_sup(
            |h| Probe {
                feasible: h * h - h <= 0.0,
                certified: true,
            },
            f64::INFINITY,
            1e-12,
        );
        assert!((r.value - 1.0).abs() < 1e-11);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-12);
    }

    #[test]
    fn feasible_sup_unbounded_and_empty() {
        let all = feasible_sup(|_| Probe { feasible: true, certified: true }, f64::INFINITY, 1e-10);
        assert_eq!(all.value, f64::INFINITY);
        let none = feasible_sup(|_| Probe { feasible: false, certified: true }, f64::INFINITY, 1e-10);
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn feasible_sup_domain_boundary() {
        let r = feasible_sup(|h| Probe { feasible: h < 3.0, certified: true }, 3.0, 1e-10);
        assert_eq!(r.value, 3.0);
        assert!(r.at_boundary);
    }

    #[test]
    fn minimize_quadratic_unbounded_domain() {
        let m = minimize_convex(|h| (h - 37.5) * (h - 37.5) - 2.0, f64::INFINITY);
        assert!((m.x - 37.5).abs() < 1e-6);
        assert!((m.value + 2.0).abs() < 1e-10);
    }

    #[test]
    fn minimize_with_infinite_region() {
        let m = minimize_convex(|h| if h >= 0.8 { f64::INFINITY } else { -h }, 1.0);
        assert!(m.x < 0.8 && m.x > 0.8 - 1e-9);
    }

    #[test]
    fn minimize_at_origin_and_unbounded_below() {
        let m = minimize_convex(|h| h, f64::INFINITY);
        assert_eq!(m.x, 0.0);
        let m = minimize_convex(|h| -h, f64::INFINITY);
        assert_eq!(m.value, f64::NEG_INFINITY);
    }
}
