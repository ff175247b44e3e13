//! Planar geometry, Poisson point process sampling, and path loss.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, StreamKind};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("intensity must be nonnegative and finite, got {0}")]
    InvalidIntensity(f64),
    #[error("window half-width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),
    #[error("guard margin must satisfy 0 <= margin < half-width, got margin {margin} for half-width {half_width}")]
    InvalidGuardMargin { half_width: f64, margin: f64 },
    #[error("path loss exponent must exceed 2 for finite mean interference, got {0}")]
    InvalidExponent(f64),
    #[error("link distance must be positive and finite, got {0}")]
    InvalidLinkDistance(f64),
}

/// A point in the plane, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// Simulation window: the square `[-L, L]^2` with an inner measurement
/// region `[-L+m, L-m]^2`. Statistics are only accumulated for sources
/// inside the inner region, which mitigates edge bias when the finite
/// window stands in for the infinite plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    half_width: f64,
    guard_margin: f64,
}

impl Window {
    pub fn new(half_width: f64, guard_margin: f64) -> Result<Self, GeometryError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GeometryError::InvalidHalfWidth(half_width));
        }
        if !(guard_margin.is_finite() && (0.0..half_width).contains(&guard_margin)) {
            return Err(GeometryError::InvalidGuardMargin {
                half_width,
                margin: guard_margin,
            });
        }
        Ok(Self {
            half_width,
            guard_margin,
        })
    }

    /// Window with the default guard margin of one third of the half-width.
    pub fn with_default_margin(half_width: f64) -> Result<Self, GeometryError> {
        Self::new(half_width, half_width / 3.0)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn guard_margin(&self) -> f64 {
        self.guard_margin
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }

    /// True if `p` lies in the inner measurement region.
    pub fn measures(&self, p: &Point2) -> bool {
        let inner = self.half_width - self.guard_margin;
        p.x.abs() <= inner && p.y.abs() <= inner
    }
}

/// Distance-dependent power gain `g`.
///
/// The unbounded variant is the pure power law `d^-alpha`; the bounded
/// variant caps the gain at 1 so that colocated nodes stay finite. The
/// exponent must exceed 2, otherwise the mean interference of a planar
/// Poisson field diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    exponent: f64,
    bounded: bool,
}

impl PathLossModel {
    pub fn new(exponent: f64, bounded: bool) -> Result<Self, GeometryError> {
        if !(exponent.is_finite() && exponent > 2.0) {
            return Err(GeometryError::InvalidExponent(exponent));
        }
        Ok(Self { exponent, bounded })
    }

    /// Unbounded power law with the default exponent 4.
    pub fn default_power_law() -> Self {
        Self {
            exponent: 4.0,
            bounded: false,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// Gain at the given distance. For the unbounded model, zero distance
    /// yields `+inf`: a transmitter colocated with its receiver always
    /// decodes, and the interference factor formulas take the correct
    /// limit from an infinite gain.
    pub fn gain(&self, distance: f64) -> f64 {
        debug_assert!(distance >= 0.0, "negative distance {distance}");
        let g = distance.powf(-self.exponent);
        if self.bounded {
            g.min(1.0)
        } else {
            g
        }
    }
}

/// One draw of a Poisson point process restricted to a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PppSample {
    pub points: Vec<Point2>,
    pub intensity: f64,
    pub window: Window,
}

/// Sample a homogeneous Poisson point process on the window: the count is
/// Poisson with mean `intensity * area` and positions are i.i.d. uniform.
/// Deterministic given the rng state.
pub fn sample_ppp<R: Rng>(
    intensity: f64,
    window: Window,
    rng: &mut R,
) -> Result<PppSample, GeometryError> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(GeometryError::InvalidIntensity(intensity));
    }
    let mean = intensity * window.area();
    let count = if mean == 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    };
    let half = window.half_width();
    let points = (0..count)
        .map(|_| {
            Point2::new(
                rng.random_range(-half..=half),
                rng.random_range(-half..=half),
            )
        })
        .collect();
    Ok(PppSample {
        points,
        intensity,
        window,
    })
}

/// The receiver location of a transmitter at `source`: distance `distance`
/// away in direction `angle`.
pub fn destination_of(source: Point2, distance: f64, angle: f64) -> Point2 {
    debug_assert!(distance > 0.0, "link distance must be positive");
    let (sin, cos) = angle.sin_cos();
    Point2::new(source.x + distance * cos, source.y + distance * sin)
}

/// One sampled deployment: the source process with per-source destination
/// directions, the relay process, and the seed that drives fading and
/// thinning uniforms for this deployment.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub sources: PppSample,
    pub dest_angles: Vec<f64>,
    pub relays: PppSample,
    pub link_distance: f64,
    pub fading_seed: u64,
}

impl NetworkRealization {
    /// Sample a fresh deployment from the per-purpose sub-streams of
    /// `master_seed` at the given trial index.
    pub fn sample(
        source_intensity: f64,
        relay_intensity: f64,
        link_distance: f64,
        window: Window,
        master_seed: u64,
        trial: u64,
    ) -> Result<Self, GeometryError> {
        if !(link_distance.is_finite() && link_distance > 0.0) {
            return Err(GeometryError::InvalidLinkDistance(link_distance));
        }
        let sources = sample_ppp(
            source_intensity,
            window,
            &mut stream_rng(master_seed, StreamKind::SourceProcess, trial),
        )?;
        let relays = sample_ppp(
            relay_intensity,
            window,
            &mut stream_rng(master_seed, StreamKind::RelayProcess, trial),
        )?;
        let mut angle_rng = stream_rng(master_seed, StreamKind::DestinationAngles, trial);
        let dest_angles = (0..sources.points.len())
            .map(|_| angle_rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        Ok(Self {
            sources,
            dest_angles,
            relays,
            link_distance,
            fading_seed: crate::rng::stream_seed(master_seed, StreamKind::Fading, trial),
        })
    }

    pub fn destination(&self, source_index: usize) -> Point2 {
        destination_of(
            self.sources.points[source_index],
            self.link_distance,
            self.dest_angles[source_index],
        )
    }
}
