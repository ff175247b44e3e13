//! Numerical evaluation of the outage formulas.
//!
//! The chain: a per-interferer factor (`interference_factor`), its plane
//! integral (`interference_integral`), the single-link success
//! probability, the selected-cluster intensity profile for each policy,
//! the cluster interference exponent, and finally the second-hop success
//! probability as a nested integral. Everything is evaluated by adaptive
//! quadrature in polar coordinates; the cluster profile is tabulated on a
//! radial grid that is refined until the final result stabilizes.

mod cluster;
mod second_hop;

pub use cluster::ClusterProfile;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PathLossModel, Point2};
use crate::policy::{PolicyError, SelectionPolicy};
use crate::quad::{integrate, EvalBudget, QuadError};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("the center-baseline policy has no analytical counterpart; use simulation")]
    UnsupportedPolicy,
    #[error("SIR threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("tolerances and grid sizes must be positive, got {0}")]
    InvalidQuadConfig(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Tolerances, truncation and grid resolution for the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Relative tolerance for plane integrals.
    pub rel_tol_2d: f64,
    /// Relative tolerance for the nested second-hop pipeline.
    pub rel_tol_p2: f64,
    /// Truncation: integration stops where the integrand magnitude falls
    /// below this fraction of its peak (found by a doubling search).
    pub truncation_cutoff: f64,
    /// Radial nodes of the tabulated cluster intensity.
    pub radial_nodes: usize,
    /// Angular nodes used when averaging the cluster intensity on a ring.
    pub angular_nodes: usize,
    /// How many times the grids may double while the second-hop result
    /// has not stabilized.
    pub max_refinements: u32,
    /// Hard cap on integrand evaluations per engine.
    pub max_evals: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol_2d: 1e-6,
            rel_tol_p2: 1e-3,
            truncation_cutoff: 1e-9,
            radial_nodes: 257,
            angular_nodes: 128,
            max_refinements: 3,
            max_evals: 200_000_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        let positive = [
            ("rel_tol_2d", self.rel_tol_2d),
            ("rel_tol_p2", self.rel_tol_p2),
            ("truncation_cutoff", self.truncation_cutoff),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(AnalyticError::InvalidQuadConfig(format!("{name} = {v}")));
            }
        }
        if self.radial_nodes < 2 || self.angular_nodes < 2 || self.max_evals == 0 {
            return Err(AnalyticError::InvalidQuadConfig(
                "grid sizes and the evaluation budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Free parameters of the analytic formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInputs {
    pub source_intensity: f64,
    pub relay_intensity: f64,
    pub link_distance: f64,
    pub sir_threshold: f64,
    pub path_loss: PathLossModel,
    pub policy: SelectionPolicy,
}

impl AnalyticInputs {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        if !(self.source_intensity.is_finite() && self.source_intensity >= 0.0) {
            return Err(GeometryError::InvalidIntensity(self.source_intensity).into());
        }
        if !(self.relay_intensity.is_finite() && self.relay_intensity >= 0.0) {
            return Err(GeometryError::InvalidIntensity(self.relay_intensity).into());
        }
        if !(self.link_distance.is_finite() && self.link_distance > 0.0) {
            return Err(GeometryError::InvalidLinkDistance(self.link_distance).into());
        }
        if !(self.sir_threshold.is_finite() && self.sir_threshold > 0.0) {
            return Err(AnalyticError::InvalidThreshold(self.sir_threshold));
        }
        self.policy.validate()?;
        Ok(())
    }
}

/// Success-degradation factor of a single interferer: the probability
/// weight `T g(interferer) / (T g(interferer) + g(signal))`, always in
/// [0, 1]. `signal_dist` is the transmitter-receiver distance and
/// `interferer_dist` the interferer-receiver distance.
pub fn interference_factor(
    signal_dist: f64,
    interferer_dist: f64,
    threshold: f64,
    model: &PathLossModel,
) -> f64 {
    let g_signal = model.gain(signal_dist);
    let g_interferer = model.gain(interferer_dist);
    if g_interferer.is_infinite() {
        // Interferer sitting on the receiver. If the signal is equally
        // singular the ratio limit is T/(1+T).
        return if g_signal.is_infinite() {
            threshold / (1.0 + threshold)
        } else {
            1.0
        };
    }
    if g_signal.is_infinite() {
        return 0.0;
    }
    let weighted = threshold * g_interferer;
    weighted / (weighted + g_signal)
}

/// Plane integral of `interference_factor(signal_dist, r)` over
/// interferer positions, in polar coordinates about the receiver. The
/// head of the integral is evaluated directly and the power-law tail
/// through the substitution `r -> 1/v`, so no truncation error is
/// incurred.
pub fn interference_integral(
    signal_dist: f64,
    threshold: f64,
    model: &PathLossModel,
    quad: &QuadratureConfig,
) -> Result<f64, AnalyticError> {
    quad.validate()?;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(AnalyticError::InvalidThreshold(threshold));
    }
    let budget = EvalBudget::new(quad.max_evals);
    interference_integral_in(signal_dist, threshold, model, quad.rel_tol_2d, &budget)
}

/// Internal variant sharing an evaluation budget; `threshold` may be any
/// positive weight, not only the decode threshold.
pub(crate) fn interference_integral_in(
    signal_dist: f64,
    threshold: f64,
    model: &PathLossModel,
    rel_tol: f64,
    budget: &EvalBudget,
) -> Result<f64, AnalyticError> {
    use std::f64::consts::TAU;
    if signal_dist == 0.0 && !model.is_bounded() {
        // Infinite signal gain: no interferer can register.
        return Ok(0.0);
    }
    let alpha = model.exponent();
    let scale = signal_dist * threshold.powf(1.0 / alpha);
    let split = 2.0 * (scale + 1.0);
    let head = integrate(
        |r| TAU * r * interference_factor(signal_dist, r, threshold, model),
        0.0,
        split,
        0.5 * rel_tol,
        0.0,
        budget,
    )?;
    let tail = integrate(
        |v| {
            if v == 0.0 {
                0.0
            } else {
                TAU * interference_factor(signal_dist, 1.0 / v, threshold, model) / (v * v * v)
            }
        },
        0.0,
        1.0 / split,
        0.5 * rel_tol,
        0.25 * rel_tol * head.value,
        budget,
    )?;
    Ok(head.value + tail.value)
}

/// Probability that a single link of the given length decodes under
/// Poisson interference of the source intensity.
pub fn link_success_probability(
    signal_dist: f64,
    inputs: &AnalyticInputs,
    quad: &QuadratureConfig,
) -> Result<f64, AnalyticError> {
    inputs.validate()?;
    let integral = interference_integral(signal_dist, inputs.sir_threshold, &inputs.path_loss, quad)?;
    Ok((-inputs.source_intensity * integral).exp())
}

/// Outcome of the second-hop evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondHopOutcome {
    pub value: f64,
    /// Change of the result in the last grid refinement, as a relative
    /// deviation; `NaN` when only one grid level was evaluated.
    pub refinement_delta: f64,
    pub evals: u64,
}

/// Evaluator with a tabulated cluster intensity, reused across queries.
pub struct AnalyticEngine {
    inputs: AnalyticInputs,
    quad: QuadratureConfig,
    budget: EvalBudget,
    profile: ClusterProfile,
}

impl AnalyticEngine {
    pub fn new(inputs: AnalyticInputs, quad: QuadratureConfig) -> Result<Self, AnalyticError> {
        inputs.validate()?;
        quad.validate()?;
        if inputs.policy == SelectionPolicy::CenterBaseline {
            return Err(AnalyticError::UnsupportedPolicy);
        }
        if inputs.sir_threshold <= 1.0 {
            log::warn!(
                "analytic formulas assume a threshold above 1 (disjoint decode clusters); \
                 got {}",
                inputs.sir_threshold
            );
        }
        let budget = EvalBudget::new(quad.max_evals);
        let profile = ClusterProfile::build(
            &inputs,
            quad.radial_nodes,
            quad.angular_nodes,
            quad.rel_tol_2d,
            quad.truncation_cutoff,
            &budget,
        )?;
        Ok(Self {
            inputs,
            quad,
            budget,
            profile,
        })
    }

    pub fn inputs(&self) -> &AnalyticInputs {
        &self.inputs
    }

    pub fn evals_used(&self) -> u64 {
        self.budget.used()
    }

    /// Single-link success probability at the given distance.
    pub fn link_success(&self, signal_dist: f64) -> Result<f64, AnalyticError> {
        let integral = interference_integral_in(
            signal_dist,
            self.inputs.sir_threshold,
            &self.inputs.path_loss,
            self.quad.rel_tol_2d,
            &self.budget,
        )?;
        Ok((-self.inputs.source_intensity * integral).exp())
    }

    /// Direct-hop success probability.
    pub fn direct_success(&self) -> Result<f64, AnalyticError> {
        self.link_success(self.inputs.link_distance)
    }

    /// Intensity of the selected-relay cluster at `z`, the source sitting
    /// at the origin with its destination direction averaged out. Radially
    /// symmetric for every supported policy.
    pub fn cluster_intensity(&self, z: Point2) -> f64 {
        self.profile.eval(z.distance(&Point2::new(0.0, 0.0)))
    }

    /// Mean number of selected relays per source.
    pub fn mean_cluster_size(&self) -> f64 {
        self.profile.mass()
    }

    /// Interference exponent contributed by one cluster centered at `xi`
    /// against a link whose signal leg is `z` (receiver at the origin of
    /// both arguments).
    pub fn cluster_interference_exponent(&self, z: Point2, xi: Point2) -> Result<f64, AnalyticError> {
        let origin = Point2::new(0.0, 0.0);
        second_hop::interference_exponent(
            z.distance(&origin),
            xi.distance(&origin),
            &self.inputs,
            &self.profile,
            self.quad.rel_tol_p2,
            &self.budget,
        )
        .map_err(Into::into)
    }

    /// Second-hop success probability, refining the cluster grid until
    /// the value stabilizes within its tolerance.
    pub fn relay_hop_success(&self) -> Result<SecondHopOutcome, AnalyticError> {
        if self.inputs.relay_intensity == 0.0 {
            return Ok(SecondHopOutcome {
                value: 0.0,
                refinement_delta: 0.0,
                evals: self.budget.used(),
            });
        }
        let mut radial = self.quad.radial_nodes;
        let mut angular = self.quad.angular_nodes;
        let mut profile = self.profile.clone();
        let mut previous: Option<f64> = None;
        let mut delta = f64::NAN;
        for level in 0..=self.quad.max_refinements {
            if level > 0 {
                radial = 2 * radial - 1;
                angular *= 2;
                profile = ClusterProfile::build(
                    &self.inputs,
                    radial,
                    angular,
                    self.quad.rel_tol_2d,
                    self.quad.truncation_cutoff,
                    &self.budget,
                )?;
            }
            let value = second_hop::relay_hop_success(
                &self.inputs,
                &profile,
                self.quad.rel_tol_p2,
                self.quad.truncation_cutoff,
                &self.budget,
            )?;
            if let Some(prev) = previous {
                delta = (value - prev).abs() / value.abs().max(1e-12);
                if delta <= self.quad.rel_tol_p2 {
                    return Ok(self.clamped(value, delta));
                }
            }
            previous = Some(value);
        }
        log::warn!(
            "second-hop grid refinement stopped at {radial} radial nodes with relative \
             change {delta:.2e} still above {:.2e}",
            self.quad.rel_tol_p2
        );
        Ok(self.clamped(previous.expect("at least one level ran"), delta))
    }

    fn clamped(&self, value: f64, refinement_delta: f64) -> SecondHopOutcome {
        let clamped = value.clamp(0.0, 1.0);
        if (clamped - value).abs() > self.quad.rel_tol_p2 {
            log::warn!(
                "second-hop probability {value} clamped to {clamped}; approximation error \
                 exceeds the configured tolerance"
            );
        }
        SecondHopOutcome {
            value: clamped,
            refinement_delta,
            evals: self.budget.used(),
        }
    }

    /// End-to-end success probability combining the direct and relayed
    /// routes under the independence shortcut.
    pub fn end_to_end_success(&self) -> Result<f64, AnalyticError> {
        let p1 = self.direct_success()?;
        let p2 = self.relay_hop_success()?.value;
        Ok(1.0 - (1.0 - p1) * (1.0 - p2))
    }
}
