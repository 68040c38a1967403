//! Special-relativity kinematics on a 1+1 dimensional line, in natural
//! units (c = 1): time in seconds, distance in light-seconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Absolute tolerance on `(Δt)² − (Δx)²` below which a pair is lightlike.
pub const INTERVAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// A point `(t, x)` of 1+1 dimensional Minkowski space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent<S> {
    pub t: S,
    pub x: S,
}

impl<S: Real> SpacetimeEvent<S> {
    pub fn new(t: S, x: S) -> Result<Self, SpacetimeError> {
        let event = Self { t, x };
        event.check()?;
        Ok(event)
    }

    pub fn origin() -> Self {
        Self { t: S::zero(), x: S::zero() }
    }

    fn check(&self) -> Result<(), SpacetimeError> {
        if self.t.is_finite() && self.x.is_finite() {
            Ok(())
        } else {
            Err(SpacetimeError::InvalidInput("non-finite event coordinate"))
        }
    }

    /// Invariant squared interval `(Δt)² − (Δx)²` to `other`.
    pub fn interval_squared(&self, other: &Self) -> S {
        let dt = other.t - self.t;
        let dx = other.x - self.x;
        dt * dt - dx * dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalClass {
    Timelike,
    Spacelike,
    Lightlike,
}

/// Classifies the separation of two events by the sign of the invariant
/// interval, treating `|(Δt)² − (Δx)²| ≤ INTERVAL_TOLERANCE` as lightlike.
pub fn classify_interval<S: Real>(
    e1: &SpacetimeEvent<S>,
    e2: &SpacetimeEvent<S>,
) -> Result<IntervalClass, SpacetimeError> {
    e1.check()?;
    e2.check()?;
    let s2 = e1.interval_squared(e2);
    let tol = S::lit(INTERVAL_TOLERANCE);
    Ok(if s2.abs() <= tol {
        IntervalClass::Lightlike
    } else if s2 > S::zero() {
        IntervalClass::Timelike
    } else {
        IntervalClass::Spacelike
    })
}

/// Earliest time a signal emitted at `emission` can reach position
/// `receiver_x`.
pub fn earliest_arrival<S: Real>(
    emission: &SpacetimeEvent<S>,
    receiver_x: S,
) -> Result<S, SpacetimeError> {
    emission.check()?;
    if !receiver_x.is_finite() {
        return Err(SpacetimeError::InvalidInput("non-finite receiver position"));
    }
    Ok(emission.t + (receiver_x - emission.x).abs())
}

/// Lower bound on the time needed to gather local measurement data from a
/// region of diameter `diameter` at any single observer: `L / 2c`.
pub fn min_identification_time<S: Real>(diameter: S) -> Result<S, SpacetimeError> {
    if !diameter.is_finite() || diameter < S::zero() {
        return Err(SpacetimeError::InvalidInput("diameter must be finite and non-negative"));
    }
    Ok(diameter / S::lit(2.0))
}
