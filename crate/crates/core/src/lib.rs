//! Discrete-event simulation of relativistic quantum coin tossing with two
//! orthogonal, partially overlapping wavepackets.
//!
//! The field and curve layers are generic over the scalar type; protocol,
//! adversary and experiment code run in `f64`. The aliases below fix the
//! common `f64` instantiations.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod distinguishability;
pub mod fieldmodel;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod simharness;
pub mod spacetime;

pub use scalar::Real;

pub type Event = spacetime::SpacetimeEvent<f64>;
pub type Grid = fieldmodel::MomentumGrid<f64>;
pub type Amplitude = fieldmodel::MomentumAmplitude<f64>;
pub type Family = fieldmodel::WavepacketFamily<f64>;
pub type Projectors = fieldmodel::ProjectorSet<f64>;
pub type Curve = distinguishability::DistinguishabilityCurve<f64>;
