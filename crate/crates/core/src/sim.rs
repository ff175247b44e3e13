//! Two-hop Monte Carlo pipeline.
//!
//! Per trial: sample a deployment, let every source transmit in slot 0
//! (recording direct successes and decode sets), apply the selection
//! policy, and let the union of selected relays transmit in slot 1 with
//! fresh fading. Sources interfere only in slot 0 and relays only in
//! slot 1. Statistics are accumulated for sources inside the measurement
//! region; interference comes from the whole window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{connects, FadingField, NodeId};
use crate::geometry::{GeometryError, NetworkRealization, PathLossModel, Point2, Window};
use crate::policy::{
    center_baseline_realization, decode_sets, select, PolicyError, SelectionPolicy,
};
use crate::rng::{stream_seed, StreamKind};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("SIR threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error(
        "no sources fell in the measurement region over {trials} trials \
         (window half-width {half_width}, guard margin {margin}, source intensity {intensity}); \
         enlarge the window or raise the intensity"
    )]
    NoMeasuredSources {
        trials: u64,
        half_width: f64,
        margin: f64,
        intensity: f64,
    },
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub source_intensity: f64,
    pub relay_intensity: f64,
    pub link_distance: f64,
    pub sir_threshold: f64,
    pub path_loss: PathLossModel,
    pub window: Window,
    pub policy: SelectionPolicy,
    pub n_trials: u64,
    pub master_seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
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
            return Err(SimError::InvalidThreshold(self.sir_threshold));
        }
        if self.sir_threshold <= 1.0 {
            log::warn!(
                "SIR threshold {} is at most 1: decode sets may overlap and \
                 per-receiver uniqueness no longer holds",
                self.sir_threshold
            );
        }
        if self.n_trials == 0 {
            return Err(SimError::NoTrials);
        }
        self.policy.validate()?;
        Ok(())
    }
}

/// Outcome flags for one measured source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub direct: bool,
    pub twohop: bool,
    /// Size of this source's second-hop transmit set.
    pub selected_count: u32,
}

impl TrialOutcome {
    pub fn joint(&self) -> bool {
        self.direct || self.twohop
    }
}

/// Result of one trial: flags per measured source, plus the second-hop
/// transmit set of every source (measured or not) for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub outcomes: Vec<TrialOutcome>,
    pub transmit_sets: Vec<Vec<u32>>,
}

/// Aggregated estimates with standard errors.
///
/// Point estimates pool indicators over all measured sources; standard
/// errors treat each trial as one cluster, since interference couples
/// outcomes within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// Direct (first-hop) success probability.
    pub p1: f64,
    /// Two-hop (relayed) success probability.
    pub p2: f64,
    /// `1 - (1 - p1)(1 - p2)`.
    pub ps_composed: f64,
    /// Empirical probability of direct-or-relayed success.
    pub ps_joint: f64,
    pub se_p1: f64,
    pub se_p2: f64,
    pub se_ps_composed: f64,
    pub se_ps_joint: f64,
    /// `ps_joint - ps_composed`: how far the independence shortcut is off.
    pub independence_gap: f64,
    /// Mean second-hop transmit set size over measured sources.
    pub mean_cluster_size: f64,
    pub se_cluster_size: f64,
    pub n_sources_measured: u64,
    pub n_trials: u64,
}

/// Run a single trial of the full two-hop protocol.
pub fn run_trial(config: &SimulationConfig, trial: u64) -> Result<TrialRecord, SimError> {
    let realization = NetworkRealization::sample(
        config.source_intensity,
        config.relay_intensity,
        config.link_distance,
        config.window,
        config.master_seed,
        trial,
    )?;
    let realization = if config.policy == SelectionPolicy::CenterBaseline {
        center_baseline_realization(&realization)
    } else {
        realization
    };
    let thinning_seed = stream_seed(config.master_seed, StreamKind::Thinning, trial);
    Ok(run_realization(
        &realization,
        thinning_seed,
        &config.policy,
        config.sir_threshold,
        &config.path_loss,
    ))
}

/// Evaluate both hops on an explicit realization. Exposed so tests and
/// diagnostics can run constructed deployments.
pub fn run_realization(
    realization: &NetworkRealization,
    thinning_seed: u64,
    policy: &SelectionPolicy,
    threshold: f64,
    model: &PathLossModel,
) -> TrialRecord {
    let sources = &realization.sources.points;
    let window = realization.sources.window;

    let source_set: Vec<(NodeId, Point2)> = sources
        .iter()
        .enumerate()
        .map(|(i, &p)| (NodeId::Source(i as u32), p))
        .collect();
    let fading = FadingField::new(realization.fading_seed);

    let sets = decode_sets(realization, thinning_seed, &fading, threshold, model);

    // Selection is local per source; the union forms the slot-1
    // transmitting set.
    let mut transmit_sets: Vec<Vec<u32>> = Vec::with_capacity(sources.len());
    let mut slot1_set: Vec<(NodeId, Point2)> = Vec::new();
    let mut in_slot1 = std::collections::HashSet::new();
    for (i, records) in sets.iter().enumerate() {
        let kept = select(
            policy,
            sources[i],
            realization.destination(i),
            records,
            threshold,
        );
        let mut indices = Vec::with_capacity(kept.len());
        for r in &kept {
            indices.push(r.relay_index as u32);
            // A relay decodes at most one source when the threshold
            // exceeds 1; the guard only matters below that.
            if in_slot1.insert(r.relay_index) {
                slot1_set.push((NodeId::Relay(r.relay_index as u32), r.relay));
            }
        }
        transmit_sets.push(indices);
    }

    let mut outcomes = Vec::new();
    for (i, &source) in sources.iter().enumerate() {
        if !window.measures(&source) {
            continue;
        }
        let dest = realization.destination(i);
        let dest_node = (NodeId::Destination(i as u32), dest);
        let direct = connects(
            (NodeId::Source(i as u32), source),
            dest_node,
            &source_set,
            &fading,
            0,
            model,
            threshold,
        );
        let twohop = transmit_sets[i].iter().any(|&j| {
            let relay = realization.relays.points[j as usize];
            connects(
                (NodeId::Relay(j), relay),
                dest_node,
                &slot1_set,
                &fading,
                1,
                model,
                threshold,
            )
        });
        outcomes.push(TrialOutcome {
            direct,
            twohop,
            selected_count: transmit_sets[i].len() as u32,
        });
    }

    TrialRecord {
        outcomes,
        transmit_sets,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialSummary {
    measured: u64,
    direct: u64,
    twohop: u64,
    joint: u64,
    cluster_sum: u64,
}

impl TrialSummary {
    fn from_record(record: &TrialRecord) -> Self {
        let mut s = TrialSummary {
            measured: record.outcomes.len() as u64,
            ..Default::default()
        };
        for o in &record.outcomes {
            s.direct += u64::from(o.direct);
            s.twohop += u64::from(o.twohop);
            s.joint += u64::from(o.joint());
            s.cluster_sum += u64::from(o.selected_count);
        }
        s
    }
}

/// Cluster-robust standard error of the pooled ratio `totals/weights`.
fn ratio_se(per_trial: &[(f64, f64)], pooled: f64) -> f64 {
    let m = per_trial.len() as f64;
    if m < 2.0 {
        return f64::NAN;
    }
    let total_weight: f64 = per_trial.iter().map(|&(_, n)| n).sum();
    let ss: f64 = per_trial
        .iter()
        .map(|&(s, n)| (s - pooled * n).powi(2))
        .sum();
    (m / (m - 1.0) * ss).sqrt() / total_weight
}

/// Run all trials and aggregate. Deterministic given the config: trials
/// use derived per-index sub-seeds and the reduction is order-stable.
pub fn estimate(config: &SimulationConfig) -> Result<EstimateRecord, SimError> {
    config.validate()?;
    let summaries: Vec<TrialSummary> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| run_trial(config, t).map(|r| TrialSummary::from_record(&r)))
        .collect::<Result<_, _>>()?;

    let measured: u64 = summaries.iter().map(|s| s.measured).sum();
    if measured == 0 {
        return Err(SimError::NoMeasuredSources {
            trials: config.n_trials,
            half_width: config.window.half_width(),
            margin: config.window.guard_margin(),
            intensity: config.source_intensity,
        });
    }
    let w = measured as f64;
    let p1 = summaries.iter().map(|s| s.direct).sum::<u64>() as f64 / w;
    let p2 = summaries.iter().map(|s| s.twohop).sum::<u64>() as f64 / w;
    let ps_joint = summaries.iter().map(|s| s.joint).sum::<u64>() as f64 / w;
    let mean_cluster_size = summaries.iter().map(|s| s.cluster_sum).sum::<u64>() as f64 / w;
    let ps_composed = 1.0 - (1.0 - p1) * (1.0 - p2);

    let pairs = |f: fn(&TrialSummary) -> u64| {
        summaries
            .iter()
            .map(|s| (f(s) as f64, s.measured as f64))
            .collect::<Vec<_>>()
    };
    let direct_pairs = pairs(|s| s.direct);
    let twohop_pairs = pairs(|s| s.twohop);
    let joint_pairs = pairs(|s| s.joint);
    let cluster_pairs = pairs(|s| s.cluster_sum);

    let se_p1 = ratio_se(&direct_pairs, p1);
    let se_p2 = ratio_se(&twohop_pairs, p2);
    let se_ps_joint = ratio_se(&joint_pairs, ps_joint);
    let se_cluster_size = ratio_se(&cluster_pairs, mean_cluster_size);

    // Delta method for the composed probability, with the per-trial
    // covariance of (p1, p2) retained.
    let m = summaries.len() as f64;
    let se_ps_composed = if m < 2.0 {
        f64::NAN
    } else {
        let ss: f64 = summaries
            .iter()
            .map(|s| {
                let n = s.measured as f64;
                let u = (1.0 - p2) * (s.direct as f64 - p1 * n)
                    + (1.0 - p1) * (s.twohop as f64 - p2 * n);
                u * u
            })
            .sum();
        (m / (m - 1.0) * ss).sqrt() / w
    };

    Ok(EstimateRecord {
        p1,
        p2,
        ps_composed,
        ps_joint,
        se_p1,
        se_p2,
        se_ps_composed,
        se_ps_joint,
        independence_gap: ps_joint - ps_composed,
        mean_cluster_size,
        se_cluster_size,
        n_sources_measured: measured,
        n_trials: config.n_trials,
    })
}
