//! Text records for amplitudes: a JSON document carrying the grid weights
//! and one `[p, Re ψ, Im ψ]` triple per node.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

use super::{FieldError, MomentumAmplitude, MomentumGrid};

pub const AMPLITUDE_FORMAT: &str = "relcoin-amplitude/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeRecord {
    pub format: String,
    pub points: usize,
    pub weights: Vec<f64>,
    pub samples: Vec<[f64; 3]>,
}

impl AmplitudeRecord {
    pub fn from_amplitude<S: Real>(amp: &MomentumAmplitude<S>) -> Self {
        let grid = amp.grid();
        Self {
            format: AMPLITUDE_FORMAT.to_string(),
            points: grid.len(),
            weights: grid.weights().iter().map(|w| w.to_f64_lossy()).collect(),
            samples: grid
                .points()
                .iter()
                .zip(amp.values())
                .map(|(p, v)| [p.to_f64_lossy(), v.re.to_f64_lossy(), v.im.to_f64_lossy()])
                .collect(),
        }
    }

    pub fn to_amplitude<S: Real>(&self) -> Result<MomentumAmplitude<S>, FieldError> {
        if self.format != AMPLITUDE_FORMAT {
            return Err(FieldError::Parse(format!("unknown format tag {:?}", self.format)));
        }
        if self.samples.len() != self.points || self.weights.len() != self.points {
            return Err(FieldError::Parse("point count disagrees with sample or weight count".into()));
        }
        let points = self.samples.iter().map(|s| S::lit(s[0])).collect();
        let weights = self.weights.iter().map(|&w| S::lit(w)).collect();
        let grid = Arc::new(MomentumGrid::new(points, weights)?);
        let values = self.samples.iter().map(|s| Complex::new(S::lit(s[1]), S::lit(s[2]))).collect();
        MomentumAmplitude::new(grid, values)
    }
}

pub fn export_amplitude<S: Real>(amp: &MomentumAmplitude<S>) -> String {
    serde_json::to_string_pretty(&AmplitudeRecord::from_amplitude(amp)).expect("record serializes")
}

pub fn import_amplitude<S: Real>(text: &str) -> Result<MomentumAmplitude<S>, FieldError> {
    let record: AmplitudeRecord =
        serde_json::from_str(text).map_err(|e| FieldError::Parse(e.to_string()))?;
    record.to_amplitude()
}
