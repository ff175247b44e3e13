//! Relay selection: who forwards in the second hop.
//!
//! After the first hop each source has a cluster of relays that decoded
//! its packet. The selection rules below thin that cluster into the
//! second-hop transmit set. All rules are local: a relay decides from its
//! own observations (RSS, position, a private uniform), never from other
//! clusters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Fading, NodeId};
use crate::geometry::{NetworkRealization, PathLossModel, Point2, PppSample, Window};
use crate::rng::{absorb, mix64, unit_uniform};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("thinning penalty must be nonnegative and finite, got {0}")]
    InvalidPenalty(f64),
    #[error("sector half-angle must lie in [0, pi], got {0}")]
    InvalidHalfAngle(f64),
}

/// The second-hop selection rule.
///
/// `RssThinning` and `DistanceThinning` keep a decoded relay with
/// probability `exp(-penalty * x)` where `x` is the scaled RSS or the
/// scaled relay-to-destination distance; `Sectorized` keeps relays whose
/// bearing from the source deviates from the destination bearing by less
/// than the half-angle (total aperture twice that); `CenterBaseline`
/// replaces the relay field with one dedicated midpoint relay per pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionPolicy {
    AllTransmit,
    RssThinning { penalty: f64 },
    Sectorized { half_angle: f64 },
    DistanceThinning { penalty: f64 },
    CenterBaseline,
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match *self {
            SelectionPolicy::AllTransmit | SelectionPolicy::CenterBaseline => Ok(()),
            SelectionPolicy::RssThinning { penalty }
            | SelectionPolicy::DistanceThinning { penalty } => {
                if penalty.is_finite() && penalty >= 0.0 {
                    Ok(())
                } else {
                    Err(PolicyError::InvalidPenalty(penalty))
                }
            }
            SelectionPolicy::Sectorized { half_angle } => {
                if (0.0..=std::f64::consts::PI).contains(&half_angle) {
                    Ok(())
                } else {
                    Err(PolicyError::InvalidHalfAngle(half_angle))
                }
            }
        }
    }

    /// Short stable name for output files.
    pub fn name(&self) -> &'static str {
        match self {
            SelectionPolicy::AllTransmit => "all-transmit",
            SelectionPolicy::RssThinning { .. } => "rss-thinning",
            SelectionPolicy::Sectorized { .. } => "sectorized",
            SelectionPolicy::DistanceThinning { .. } => "distance-thinning",
            SelectionPolicy::CenterBaseline => "center-baseline",
        }
    }
}

/// A relay that decoded its source in the first hop, with everything the
/// selection rules may consult.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeRecord {
    pub relay_index: usize,
    pub relay: Point2,
    pub source_index: usize,
    pub source: Point2,
    /// Total received power at the relay (signal plus interference).
    pub rss_value: f64,
    /// Private uniform in [0, 1), bound to the relay identity so that
    /// parameter sweeps share the same draws.
    pub thinning_uniform: f64,
}

/// Thinning uniform of a relay, derived from the realization's thinning
/// seed and the relay identity only.
pub(crate) fn thinning_uniform(thinning_seed: u64, relay_index: usize) -> f64 {
    unit_uniform(absorb(mix64(thinning_seed), (2 << 32) | relay_index as u64))
}

/// First-hop decode sets: for every source, the relays that decode it
/// when all sources transmit (slot 0). With a threshold above 1 the sets
/// are disjoint across sources.
pub fn decode_sets<F: Fading>(
    realization: &NetworkRealization,
    thinning_seed: u64,
    fading: &F,
    threshold: f64,
    model: &PathLossModel,
) -> Vec<Vec<DecodeRecord>> {
    let sources = &realization.sources.points;
    let relays = &realization.relays.points;
    let mut sets: Vec<Vec<DecodeRecord>> = vec![Vec::new(); sources.len()];
    if sources.is_empty() {
        return sets;
    }
    let mut powers = vec![0.0f64; sources.len()];
    for (j, &relay) in relays.iter().enumerate() {
        let rx = NodeId::Relay(j as u32);
        let mut total = 0.0;
        for (i, &source) in sources.iter().enumerate() {
            let p = fading.coeff(NodeId::Source(i as u32), rx, 0) * model.gain(source.distance(&relay));
            powers[i] = p;
            total += p;
        }
        for (i, &source) in sources.iter().enumerate() {
            let signal = powers[i];
            // total - signal cancels to roundoff when one transmitter
            // dominates; clamp so a lone strong signal decodes.
            let interference = (total - signal).max(0.0);
            let decodes = if signal.is_infinite() {
                true
            } else if interference == 0.0 {
                true
            } else {
                signal / interference > threshold
            };
            if decodes {
                sets[i].push(DecodeRecord {
                    relay_index: j,
                    relay,
                    source_index: i,
                    source,
                    rss_value: total,
                    thinning_uniform: thinning_uniform(thinning_seed, j),
                });
            }
        }
    }
    sets
}

/// Apply the selection rule to one source's decode records, producing its
/// second-hop transmit set.
pub fn select(
    policy: &SelectionPolicy,
    source: Point2,
    dest: Point2,
    records: &[DecodeRecord],
    threshold: f64,
) -> Vec<DecodeRecord> {
    debug_assert!(records.iter().all(|r| r.source == source));
    match *policy {
        SelectionPolicy::AllTransmit => records.to_vec(),
        SelectionPolicy::RssThinning { penalty } => records
            .iter()
            .filter(|r| {
                r.thinning_uniform < (-penalty * r.rss_value / (1.0 + threshold)).exp()
            })
            .copied()
            .collect(),
        SelectionPolicy::Sectorized { half_angle } => records
            .iter()
            .filter(|r| bearing_deviation(source, dest, r.relay) < half_angle)
            .copied()
            .collect(),
        SelectionPolicy::DistanceThinning { penalty } => {
            let link_distance = source.distance(&dest);
            records
                .iter()
                .filter(|r| {
                    let d = r.relay.distance(&dest);
                    r.thinning_uniform < (-penalty * 2.0 * d / link_distance).exp()
                })
                .copied()
                .collect()
        }
        SelectionPolicy::CenterBaseline => records
            .iter()
            .filter(|r| r.relay_index == r.source_index)
            .copied()
            .collect(),
    }
}

/// Absolute angle in [0, pi] between the source-to-relay and
/// source-to-destination directions.
fn bearing_deviation(source: Point2, dest: Point2, relay: Point2) -> f64 {
    let ax = relay.x - source.x;
    let ay = relay.y - source.y;
    let bx = dest.x - source.x;
    let by = dest.y - source.y;
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    cross.abs().atan2(dot)
}

/// Replace the relay field with exactly one relay per source, placed
/// halfway between the source and its destination. The relays' stored
/// window is widened so midpoints of edge sources remain inside it.
pub fn center_baseline_realization(realization: &NetworkRealization) -> NetworkRealization {
    let sources = &realization.sources;
    let midpoints: Vec<Point2> = sources
        .points
        .iter()
        .enumerate()
        .map(|(i, s)| s.midpoint(&realization.destination(i)))
        .collect();
    let widened = Window::new(
        sources.window.half_width() + 0.5 * realization.link_distance,
        sources.window.guard_margin(),
    )
    .expect("widened window is valid");
    NetworkRealization {
        sources: sources.clone(),
        dest_angles: realization.dest_angles.clone(),
        relays: PppSample {
            points: midpoints,
            intensity: sources.intensity,
            window: widened,
        },
        link_distance: realization.link_distance,
        fading_seed: realization.fading_seed,
    }
}
