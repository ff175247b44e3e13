//! Tabulated intensity of the selected-relay cluster.
//!
//! For every policy the destination-direction-averaged cluster intensity
//! is radially symmetric about the source, so one radial table plus an
//! angular ring average is enough. The table covers the support found by
//! a doubling search and is linearly interpolated; outside it the
//! intensity is treated as zero.

use std::f64::consts::{PI, TAU};

use super::{interference_integral_in, AnalyticError, AnalyticInputs};
use crate::policy::SelectionPolicy;
use crate::quad::{integrate, EvalBudget};

/// Doubling search on a fallible magnitude profile: smallest probed
/// radius past the peak where the profile stays below `cutoff` times the
/// peak seen so far.
pub(crate) fn truncation_search<E>(
    magnitude: impl Fn(f64) -> Result<f64, E>,
    start: f64,
    cutoff: f64,
) -> Result<f64, E> {
    let mut peak = 0.0f64;
    for i in 0..=32 {
        peak = peak.max(magnitude(start * i as f64 / 32.0)?.abs());
    }
    let mut radius = start;
    for _ in 0..60 {
        let m = magnitude(radius)?.abs();
        peak = peak.max(m);
        if m <= cutoff * peak && magnitude(0.75 * radius)?.abs() <= cutoff * peak {
            return Ok(radius);
        }
        radius *= 2.0;
    }
    Ok(radius)
}

/// Radial profile of the cluster intensity for one parameter set.
#[derive(Debug, Clone)]
pub struct ClusterProfile {
    values: Vec<f64>,
    step: f64,
    support: f64,
    mass: f64,
    cos_table: Vec<f64>,
    angular_weight: f64,
}

impl ClusterProfile {
    pub(crate) fn build(
        inputs: &AnalyticInputs,
        radial_nodes: usize,
        angular_nodes: usize,
        rel_tol: f64,
        cutoff: f64,
        budget: &EvalBudget,
    ) -> Result<Self, AnalyticError> {
        let radial = RadialIntensity::prepare(inputs, rel_tol, budget)?;
        let start = inputs.link_distance.max(1.0);
        let support = if inputs.relay_intensity == 0.0 {
            start
        } else {
            truncation_search(|d| radial.value(d), start, cutoff)?
        };
        let step = support / (radial_nodes - 1) as f64;
        let mut values = Vec::with_capacity(radial_nodes);
        for i in 0..radial_nodes {
            values.push(radial.value(i as f64 * step)?);
        }

        // Mass of the interpolant: exact integral of r * v(r) over each
        // linear segment, times the full angle.
        let mut mass = 0.0;
        for i in 0..radial_nodes - 1 {
            let r0 = i as f64 * step;
            let r1 = r0 + step;
            let v0 = values[i];
            let v1 = values[i + 1];
            let slope = (v1 - v0) / step;
            let sq = (r1 * r1 - r0 * r0) / 2.0;
            let cu = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
            mass += v0 * sq + slope * (cu - r0 * sq);
        }
        mass *= TAU;

        let cos_table = (0..angular_nodes)
            .map(|j| (PI * (j as f64 + 0.5) / angular_nodes as f64).cos())
            .collect();
        Ok(Self {
            values,
            step,
            support,
            mass,
            cos_table,
            angular_weight: 2.0 * PI / angular_nodes as f64,
        })
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// Mean number of selected relays per source.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_zero(&self) -> bool {
        self.mass == 0.0
    }

    /// Intensity at radial distance `r` from the source.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.support || !r.is_finite() {
            return 0.0;
        }
        let x = r / self.step;
        let i = x as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Integral of the intensity over a ring: the cluster center offset by
    /// `offset` from the evaluation origin, evaluated on the circle of
    /// radius `radius`, integrated over the full angle.
    pub fn ring_average(&self, radius: f64, offset: f64) -> f64 {
        // Points of the ring lie between |radius - offset| and
        // radius + offset from the cluster center.
        if (radius - offset).abs() >= self.support {
            return 0.0;
        }
        let rr = radius * radius + offset * offset;
        let cross = 2.0 * radius * offset;
        let mut sum = 0.0;
        for &c in &self.cos_table {
            sum += self.eval((rr + cross * c).max(0.0).sqrt());
        }
        sum * self.angular_weight
    }
}

/// Closed evaluation of the radial intensity for one policy.
struct RadialIntensity<'a> {
    inputs: &'a AnalyticInputs,
    rel_tol: f64,
    budget: &'a EvalBudget,
    /// Plane integral of the interference factor at unit distance and
    /// unit threshold; for the unbounded power law every other case is an
    /// exact rescaling of this value.
    unit_integral: Option<f64>,
}

impl<'a> RadialIntensity<'a> {
    fn prepare(
        inputs: &'a AnalyticInputs,
        rel_tol: f64,
        budget: &'a EvalBudget,
    ) -> Result<Self, AnalyticError> {
        let unit_integral = if inputs.path_loss.is_bounded() {
            None
        } else {
            Some(interference_integral_in(
                1.0,
                1.0,
                &inputs.path_loss,
                rel_tol,
                budget,
            )?)
        };
        Ok(Self {
            inputs,
            rel_tol,
            budget,
            unit_integral,
        })
    }

    /// `interference_integral(distance)` with an arbitrary positive
    /// weight in place of the decode threshold.
    fn outage_integral(&self, distance: f64, weight: f64) -> Result<f64, AnalyticError> {
        match self.unit_integral {
            // Exact scaling of the power-law integral.
            Some(unit) => Ok(unit * (weight.powf(1.0 / self.inputs.path_loss.exponent()) * distance).powi(2)),
            None => interference_integral_in(
                distance,
                weight,
                &self.inputs.path_loss,
                self.rel_tol,
                self.budget,
            ),
        }
    }

    fn decode_probability(&self, distance: f64) -> Result<f64, AnalyticError> {
        let b = self.outage_integral(distance, self.inputs.sir_threshold)?;
        Ok((-self.inputs.source_intensity * b).exp())
    }

    fn value(&self, distance: f64) -> Result<f64, AnalyticError> {
        let relay_intensity = self.inputs.relay_intensity;
        if relay_intensity == 0.0 {
            return Ok(0.0);
        }
        let threshold = self.inputs.sir_threshold;
        match self.inputs.policy {
            SelectionPolicy::AllTransmit => Ok(relay_intensity * self.decode_probability(distance)?),
            SelectionPolicy::Sectorized { half_angle } => {
                Ok(half_angle / PI * relay_intensity * self.decode_probability(distance)?)
            }
            SelectionPolicy::DistanceThinning { penalty } => {
                if penalty == 0.0 {
                    return Ok(relay_intensity * self.decode_probability(distance)?);
                }
                let link = self.inputs.link_distance;
                // Average of the retention weight over the destination
                // direction: relay at `distance`, destination on the
                // circle of radius `link`.
                let rr = distance * distance + link * link;
                let cross = 2.0 * distance * link;
                let angular = integrate(
                    |nu| (-2.0 * penalty * (rr - cross * nu.cos()).max(0.0).sqrt() / link).exp(),
                    0.0,
                    PI,
                    1e-8,
                    0.0,
                    self.budget,
                )?;
                Ok(relay_intensity / TAU
                    * self.decode_probability(distance)?
                    * 2.0
                    * angular.value)
            }
            SelectionPolicy::RssThinning { penalty } => {
                if penalty == 0.0 {
                    return Ok(relay_intensity * self.decode_probability(distance)?);
                }
                let gain = self.inputs.path_loss.gain(distance);
                if gain.is_infinite() {
                    // Unbounded gain at zero distance: the retention
                    // probability of an infinitely strong signal vanishes.
                    return Ok(0.0);
                }
                let weight = penalty * gain + threshold;
                let b = if self.unit_integral.is_some() {
                    // weight * distance^alpha stays finite near zero:
                    // it equals penalty + threshold * distance^alpha.
                    let alpha = self.inputs.path_loss.exponent();
                    self.unit_integral.unwrap()
                        * (penalty + threshold * distance.powf(alpha)).powf(2.0 / alpha)
                } else {
                    self.outage_integral(distance, weight)?
                };
                Ok(relay_intensity * (1.0 + threshold) / (1.0 + threshold + penalty * gain)
                    * (-self.inputs.source_intensity * b).exp())
            }
            SelectionPolicy::CenterBaseline => Err(AnalyticError::UnsupportedPolicy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PathLossModel;
    use crate::quad::EvalBudget;

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

    fn profile(policy: SelectionPolicy) -> ClusterProfile {
        let budget = EvalBudget::new(100_000_000);
        ClusterProfile::build(&inputs(policy), 257, 128, 1e-6, 1e-9, &budget).unwrap()
    }

    #[test]
    fn all_transmit_profile_matches_decode_probability() {
        let p = profile(SelectionPolicy::AllTransmit);
        // Reference: lambda_r * exp(-lambda_s * pi sqrt(3) pi/2 * d^2).
        let c = 0.1 * std::f64::consts::PI * 3.0f64.sqrt() * std::f64::consts::FRAC_PI_2;
        // Tolerance covers the linear-interpolation error of the base grid.
        for d in [0.0, 0.3, 0.9, 1.7, 2.5] {
            let want = (-c * d * d).exp();
            let got = p.eval(d);
            assert!(
                (got - want).abs() < 2e-4 + 1e-3 * want,
                "d={d}: {got} vs {want}"
            );
        }
        // Mean cluster size: integral of the intensity is pi / c.
        let want_mass = std::f64::consts::PI / c;
        assert!(
            (p.mass() - want_mass).abs() < 1e-3 * want_mass,
            "{} vs {want_mass}",
            p.mass()
        );
    }

    #[test]
    fn degenerate_parameters_reduce_to_all_transmit() {
        let base = profile(SelectionPolicy::AllTransmit);
        for policy in [
            SelectionPolicy::RssThinning { penalty: 0.0 },
            SelectionPolicy::Sectorized {
                half_angle: std::f64::consts::PI,
            },
            SelectionPolicy::DistanceThinning { penalty: 0.0 },
        ] {
            let p = profile(policy);
            for d in [0.0, 0.4, 1.1, 2.3] {
                let a = base.eval(d);
                let b = p.eval(d);
                assert!(
                    (a - b).abs() <= 1e-9 * a.max(1e-12),
                    "{policy:?} at {d}: {b} vs {a}"
                );
            }
        }
    }

    #[test]
    fn thinned_profiles_are_dominated_by_all_transmit() {
        let base = profile(SelectionPolicy::AllTransmit);
        for policy in [
            SelectionPolicy::RssThinning { penalty: 0.7 },
            SelectionPolicy::Sectorized { half_angle: 0.8 },
            SelectionPolicy::DistanceThinning { penalty: 1.3 },
        ] {
            let p = profile(policy);
            for d in [0.1, 0.5, 1.0, 2.0] {
                assert!(p.eval(d) <= base.eval(d) + 1e-12, "{policy:?} at {d}");
                assert!(p.eval(d) >= 0.0);
            }
            assert!(p.mass() < base.mass());
        }
    }

    #[test]
    fn rss_thinning_vanishes_at_the_source() {
        let p = profile(SelectionPolicy::RssThinning { penalty: 0.5 });
        assert_eq!(p.eval(0.0), 0.0);
        assert!(p.eval(0.2) > 0.0);
    }

    #[test]
    fn ring_average_of_uniform_region() {
        // At offset 0 the ring average is just the full angle times the
        // profile value on that radius.
        let p = profile(SelectionPolicy::AllTransmit);
        let got = p.ring_average(0.7, 0.0);
        assert!((got - TAU * p.eval(0.7)).abs() < 1e-12);
        // Far outside the support the average vanishes.
        assert_eq!(p.ring_average(100.0, 1.0), 0.0);
    }

    #[test]
    fn zero_relays_build_an_empty_profile() {
        let mut i = inputs(SelectionPolicy::AllTransmit);
        i.relay_intensity = 0.0;
        let budget = EvalBudget::new(1_000_000);
        let p = ClusterProfile::build(&i, 65, 32, 1e-6, 1e-9, &budget).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.eval(0.5), 0.0);
    }

    #[test]
    fn bounded_model_profile_is_finite_and_decaying() {
        let mut i = inputs(SelectionPolicy::AllTransmit);
        i.path_loss = PathLossModel::new(4.0, true).unwrap();
        let budget = EvalBudget::new(100_000_000);
        let p = ClusterProfile::build(&i, 129, 64, 1e-5, 1e-9, &budget).unwrap();
        assert!(p.eval(0.0) > 0.0);
        assert!(p.eval(0.0) <= i.relay_intensity);
        assert!(p.eval(2.0) < p.eval(0.5));
    }
}
