//! Finite-dimensional model of the one-particle field states: momentum-grid
//! amplitudes with the invariant quadrature inner product, free massless
//! evolution, and the three-outcome projective measurement that
//! distinguishes two orthogonal states.

mod amplitude;
mod grid;
mod projectors;
mod records;

use thiserror::Error;

pub use amplitude::{
    evolve, inner_product, make_orthogonal_pair, position_density, MomentumAmplitude, WavepacketFamily,
};
pub use grid::{MomentumGrid, DEFAULT_GRID_POINTS, GRID_HALF_WIDTH_SIGMAS};
pub use projectors::{build_projectors, frobenius, outcome_probabilities, ProjectorSet, STATE_TOLERANCE};
pub use records::{export_amplitude, import_amplitude, AmplitudeRecord, AMPLITUDE_FORMAT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("amplitudes live on different momentum grids")]
    IncompatibleGrids,
    #[error("wavepacket family seeds are linearly dependent on this grid")]
    DegenerateFamily,
    #[error("invalid states: {0}")]
    InvalidStates(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed amplitude record: {0}")]
    Parse(String),
}
