//! The second-hop success probability.
//!
//! A tagged receiver sits at distance `link_distance` from its source.
//! Interference comes from the union of every source's selected cluster;
//! clusters are treated as independent inhomogeneous Poisson fields with
//! the tabulated radial intensity. The evaluation nests three levels:
//! the cluster interference exponent (one cluster at a given offset), the
//! plane integral over cluster centers, and the outer integral over the
//! candidate relay position.

use std::cell::RefCell;
use std::f64::consts::TAU;

use super::cluster::{truncation_search, ClusterProfile};
use super::{interference_factor, AnalyticInputs};
use crate::quad::{integrate, EvalBudget, QuadError};

/// Interference exponent of one cluster: the plane integral of the
/// single-interferer factor against the cluster intensity translated by
/// `offset` from the receiver. `signal_dist` is the length of the link
/// being decoded.
pub(crate) fn interference_exponent(
    signal_dist: f64,
    offset: f64,
    inputs: &AnalyticInputs,
    profile: &ClusterProfile,
    rel_tol: f64,
    budget: &EvalBudget,
) -> Result<f64, QuadError> {
    if profile.is_zero() {
        return Ok(0.0);
    }
    let lo = (offset - profile.support()).max(0.0);
    let hi = offset + profile.support();
    if hi <= lo {
        return Ok(0.0);
    }
    let threshold = inputs.sir_threshold;
    let model = &inputs.path_loss;
    let r = integrate(
        |r| r * interference_factor(signal_dist, r, threshold, model) * profile.ring_average(r, offset),
        lo,
        hi,
        0.1 * rel_tol,
        1e-10,
        budget,
    )?;
    Ok(r.value)
}

/// Probability that the tagged destination decodes some relay of its own
/// cluster in the second hop.
pub(crate) fn relay_hop_success(
    inputs: &AnalyticInputs,
    profile: &ClusterProfile,
    rel_tol: f64,
    cutoff: f64,
    budget: &EvalBudget,
) -> Result<f64, QuadError> {
    if profile.is_zero() {
        return Ok(0.0);
    }
    let link = inputs.link_distance;
    let source_intensity = inputs.source_intensity;
    let outer_limit = link + profile.support();

    // Truncation of the cluster-center integral, probed at the longest
    // signal leg (weakest signal, hence the slowest-decaying integrand).
    let center_limit = truncation_search(
        |t| {
            interference_exponent(outer_limit, t, inputs, profile, rel_tol, budget)
                .map(|b| t * (-(-b).exp_m1()))
        },
        outer_limit + link + 1.0,
        cutoff,
    )?;

    let failure: RefCell<Option<QuadError>> = RefCell::new(None);
    let record_failure = |e: QuadError| {
        failure.borrow_mut().get_or_insert(e);
        0.0
    };

    // Joint decode factor for a relay at distance `s` from the receiver:
    // its own cluster interferes from the source position, all other
    // clusters average out over the plane.
    let decode_factor = |s: f64| -> Result<f64, QuadError> {
        let own = interference_exponent(s, link, inputs, profile, rel_tol, budget)?;
        let field = integrate(
            |t| {
                match interference_exponent(s, t, inputs, profile, rel_tol, budget) {
                    Ok(b) => t * (-(-b).exp_m1()),
                    Err(e) => record_failure(e),
                }
            },
            0.0,
            center_limit,
            0.3 * rel_tol,
            1e-12,
            budget,
        )?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        Ok((-own - source_intensity * TAU * field.value).exp())
    };

    let outer = integrate(
        |s| match decode_factor(s) {
            Ok(e) => s * e * profile.ring_average(s, link),
            Err(e) => record_failure(e),
        },
        0.0,
        outer_limit,
        rel_tol,
        1e-14,
        budget,
    )?;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    Ok(outer.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticEngine, AnalyticInputs, QuadratureConfig};
    use crate::geometry::{PathLossModel, Point2};
    use crate::policy::SelectionPolicy;

    fn inputs(policy: SelectionPolicy) -> AnalyticInputs {
        AnalyticInputs {
            source_intensity: 0.1,
            relay_intensity: 1.0,
            link_distance: 1.0,
            sir_threshold: 3.0,
            path_loss: PathLossModel::default_power_law(),
            policy,
        }
    }

    #[test]
    fn zero_relays_give_zero_second_hop() {
        let mut i = inputs(SelectionPolicy::AllTransmit);
        i.relay_intensity = 0.0;
        let engine = AnalyticEngine::new(i, QuadratureConfig::default()).unwrap();
        assert_eq!(engine.relay_hop_success().unwrap().value, 0.0);
        assert_eq!(
            engine
                .cluster_interference_exponent(Point2::new(1.0, 0.0), Point2::new(0.5, 0.0))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn narrow_sector_kills_the_cluster() {
        let mut i = inputs(SelectionPolicy::Sectorized { half_angle: 1e-6 });
        i.relay_intensity = 1.0;
        let engine = AnalyticEngine::new(i, QuadratureConfig::default()).unwrap();
        let b = engine
            .cluster_interference_exponent(Point2::new(0.8, 0.0), Point2::new(1.0, 0.0))
            .unwrap();
        assert!(b < 1e-6, "sector exponent {b} should be tiny");
    }

    #[test]
    fn interference_exponent_matches_riemann_sum() {
        // Dense planar Riemann sum as the independent route.
        let i = inputs(SelectionPolicy::AllTransmit);
        let mut quad = QuadratureConfig::default();
        quad.radial_nodes = 513;
        let engine = AnalyticEngine::new(i, quad).unwrap();
        for (s, t) in [(0.8, 1.0), (0.4, 2.0), (1.5, 0.5)] {
            let got = engine
                .cluster_interference_exponent(Point2::new(s, 0.0), Point2::new(t, 0.0))
                .unwrap();
            let mut riemann = 0.0;
            let h = 0.02f64;
            let extent = 8.0f64;
            let mut y = -extent + 0.5 * h;
            while y < extent {
                let mut x = -extent + 0.5 * h;
                while x < extent {
                    let r = (x * x + y * y).sqrt();
                    let shifted = ((x + t) * (x + t) + y * y).sqrt();
                    riemann += interference_factor(s, r, 3.0, &i.path_loss)
                        * engine.cluster_intensity(Point2::new(shifted, 0.0));
                    x += h;
                }
                y += h;
            }
            riemann *= h * h;
            assert!(
                (got - riemann).abs() <= 2e-3 * riemann.abs().max(1e-3),
                "(s={s}, t={t}): quadrature {got} vs riemann {riemann}"
            );
        }
    }

    #[test]
    fn second_hop_is_nondecreasing_in_sparse_relays() {
        let mut a = inputs(SelectionPolicy::AllTransmit);
        a.relay_intensity = 0.05;
        let mut b = a;
        b.relay_intensity = 0.15;
        let pa = AnalyticEngine::new(a, QuadratureConfig::default())
            .unwrap()
            .relay_hop_success()
            .unwrap()
            .value;
        let pb = AnalyticEngine::new(b, QuadratureConfig::default())
            .unwrap()
            .relay_hop_success()
            .unwrap()
            .value;
        assert!(pb > pa, "{pb} should exceed {pa} near zero intensity");
    }

    #[test]
    fn policy_reductions_share_the_second_hop_value() {
        let base = AnalyticEngine::new(inputs(SelectionPolicy::AllTransmit), QuadratureConfig::default())
            .unwrap()
            .relay_hop_success()
            .unwrap()
            .value;
        for policy in [
            SelectionPolicy::RssThinning { penalty: 0.0 },
            SelectionPolicy::Sectorized {
                half_angle: std::f64::consts::PI,
            },
        ] {
            let p = AnalyticEngine::new(inputs(policy), QuadratureConfig::default())
                .unwrap()
                .relay_hop_success()
                .unwrap()
                .value;
            assert!(
                (p - base).abs() <= 2e-3 * base,
                "{policy:?}: {p} vs {base}"
            );
        }
    }
}
