//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! A 7-point Gauss / 15-point Kronrod pair scores each panel; the panel
//! with the largest error estimate is bisected until the requested
//! accuracy or the evaluation budget is reached. Semi-infinite integrals
//! are truncated first by a doubling search on the integrand magnitude.

use std::cell::Cell;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("integration bounds [{0}, {1}] are invalid")]
    InvalidBounds(f64, f64),
    #[error(
        "evaluation budget exhausted: value {value} with absolute error {error} \
         (achieved relative tolerance {achieved_rel_tol:.3e}) after {evals} evaluations"
    )]
    BudgetExhausted {
        value: f64,
        error: f64,
        achieved_rel_tol: f64,
        evals: u64,
    },
}

/// Shared counter for integrand evaluations across nested integrals.
#[derive(Debug)]
pub struct EvalBudget {
    used: Cell<u64>,
    limit: u64,
}

impl EvalBudget {
    pub fn new(limit: u64) -> Self {
        Self {
            used: Cell::new(0),
            limit,
        }
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    fn charge(&self, n: u64) -> bool {
        let next = self.used.get() + n;
        self.used.set(next);
        next <= self.limit
    }
}

// QUADPACK 7-15 pair: Kronrod abscissae on [0, 1] side and weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One 15-point Kronrod evaluation over [a, b]; returns (value, error).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut result_gauss = WG[3] * f_center;
    let mut result_kronrod = WGK[7] * f_center;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f_sum = f(center - dx) + f(center + dx);
        result_kronrod += WGK[j] * f_sum;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * f_sum;
        }
    }
    let value = result_kronrod * half;
    // The raw Gauss-Kronrod difference overestimates the Kronrod error,
    // which only costs extra refinement in the global loop.
    let err = ((result_kronrod - result_gauss) * half).abs();
    (value, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Integrate `f` over `[a, b]` until the error estimate drops below
/// `max(abs_tol, rel_tol * |value|)`, charging evaluations to `budget`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    budget: &EvalBudget,
) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadError::InvalidBounds(a, b));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    if !budget.charge(15) {
        return Err(QuadError::BudgetExhausted {
            value: 0.0,
            error: f64::INFINITY,
            achieved_rel_tol: f64::INFINITY,
            evals: budget.used(),
        });
    }
    let (value, error) = gk15(&f, a, b);
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        if worst.b - worst.a < 1e-14 * (b - a).abs() {
            // Panel too narrow to split further; accept what we have.
            heap.push(worst);
            return Ok(QuadResult {
                value: total,
                error: total_err,
            });
        }
        if !budget.charge(30) {
            return Err(QuadError::BudgetExhausted {
                value: total,
                error: total_err,
                achieved_rel_tol: total_err / total.abs().max(f64::MIN_POSITIVE),
                evals: budget.used(),
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
}

/// Find a truncation radius for a decaying magnitude profile: the
/// smallest probed radius past the peak where the profile stays below
/// `cutoff` times the peak. Doubles outward from `start`.
pub fn truncation_radius<F: Fn(f64) -> f64>(magnitude: F, start: f64, cutoff: f64) -> f64 {
    debug_assert!(start > 0.0 && cutoff > 0.0);
    let mut peak = 0.0f64;
    for i in 0..=32 {
        peak = peak.max(magnitude(start * i as f64 / 32.0).abs());
    }
    let mut radius = start;
    for _ in 0..60 {
        let m = magnitude(radius).abs();
        peak = peak.max(m);
        // Demand decay at two points so a node of an oscillation cannot
        // stop the search early.
        if m <= cutoff * peak && magnitude(radius * 0.75).abs() <= cutoff * peak {
            return radius;
        }
        radius *= 2.0;
    }
    radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> EvalBudget {
        EvalBudget::new(10_000_000)
    }

    #[test]
    fn polynomial_is_exact() {
        let b = budget();
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12, 0.0, &b).unwrap();
        // Antiderivative x^4/4 - x^2 + x evaluated at the bounds.
        let want = (81.0 / 4.0 - 9.0 + 3.0) - (0.25 - 1.0 - 1.0);
        assert!((r.value - want).abs() < 1e-10);
    }

    #[test]
    fn smooth_transcendental() {
        let b = budget();
        let r = integrate(|x| (-x).exp() * x.sin(), 0.0, 20.0, 1e-10, 0.0, &b).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8, "got {}", r.value);
    }

    #[test]
    fn peaked_integrand_converges() {
        let b = budget();
        let r = integrate(
            |x| 1.0 / (1e-4 + (x - 0.3).powi(2)),
            0.0,
            1.0,
            1e-9,
            0.0,
            &b,
        )
        .unwrap();
        let want = 100.0 * ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan());
        assert!(
            (r.value - want).abs() < 1e-6 * want,
            "got {} want {want}",
            r.value
        );
    }

    #[test]
    fn zero_function_converges_immediately() {
        let b = budget();
        let r = integrate(|_| 0.0, 0.0, 5.0, 1e-9, 0.0, &b).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(b.used(), 15);
    }

    #[test]
    fn budget_exhaustion_reports_partial_result() {
        let b = EvalBudget::new(100);
        let err = integrate(
            |x| 1.0 / (1e-8 + (x - 0.3).powi(2)),
            0.0,
            1.0,
            1e-12,
            0.0,
            &b,
        )
        .unwrap_err();
        match err {
            QuadError::BudgetExhausted { value, error, .. } => {
                assert!(value.is_finite());
                assert!(error > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn invalid_bounds_rejected() {
        let b = budget();
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, 1e-6, 0.0, &b),
            Err(QuadError::InvalidBounds(_, _))
        ));
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-6, 0.0, &b).is_err());
    }

    #[test]
    fn halving_tolerance_changes_less_than_coarse_tolerance() {
        let f = |x: f64| (x * x).sin().powi(2) / (1.0 + x);
        let coarse = integrate(f, 0.0, 10.0, 1e-4, 0.0, &budget()).unwrap();
        let fine = integrate(f, 0.0, 10.0, 5e-5, 0.0, &budget()).unwrap();
        assert!((coarse.value - fine.value).abs() <= 1e-4 * fine.value.abs());
    }

    #[test]
    fn truncation_radius_tracks_decay() {
        let r = truncation_radius(|x| (-x).exp(), 1.0, 1e-9);
        assert!((-r).exp() <= 1e-9, "radius {r} too small");
        assert!(r <= 64.0, "radius {r} needlessly large");
        // Peak away from zero is still found.
        let r2 = truncation_radius(|x| x * x * (-x).exp(), 0.5, 1e-9);
        let peak = 4.0f64 * (-2.0f64).exp();
        assert!(r2 * r2 * (-r2).exp() <= 1e-9 * peak * 1.01);
    }
}
