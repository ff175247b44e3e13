//! Simulator and analytical evaluator for uncoordinated two-hop wireless
//! networks.
//!
//! Sources and relays form independent planar Poisson processes. Sources
//! transmit in even slots; a policy-selected subset of the relays that
//! decoded them forwards in odd slots. Decoding is a strict SIR-threshold
//! test under unit-mean Rayleigh power fading. The crate provides both a
//! seeded Monte Carlo pipeline ([`sim`]) and a quadrature evaluation of
//! the corresponding stochastic-geometry formulas ([`analytic`]), so the
//! two routes can be compared point by point.

pub mod analytic;
pub mod channel;
pub mod geometry;
pub mod policy;
pub mod quad;
pub mod rng;
pub mod sim;

pub use analytic::{
    interference_factor, interference_integral, link_success_probability, AnalyticEngine,
    AnalyticError, AnalyticInputs, QuadratureConfig, SecondHopOutcome,
};
pub use channel::{connects, link_budget, rss, sir, Fading, FadingField, LinkBudget, NodeId};
pub use geometry::{
    destination_of, sample_ppp, GeometryError, NetworkRealization, PathLossModel, Point2,
    PppSample, Window,
};
pub use policy::{
    center_baseline_realization, decode_sets, select, DecodeRecord, PolicyError, SelectionPolicy,
};
pub use sim::{
    estimate, run_realization, run_trial, EstimateRecord, SimError, SimulationConfig,
    TrialOutcome, TrialRecord,
};
