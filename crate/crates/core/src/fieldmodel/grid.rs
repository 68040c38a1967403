use crate::scalar::Real;

use super::FieldError;

/// Half-width of the default grid window in units of the packet width.
pub const GRID_HALF_WIDTH_SIGMAS: f64 = 4.0;
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Positive momentum nodes with quadrature weights that already include
/// the invariant measure factor `1 / 2p₀` (massless, so `p₀ = p`).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid<S> {
    points: Vec<S>,
    weights: Vec<S>,
}

impl<S: Real> MomentumGrid<S> {
    /// Builds a grid from explicit nodes and weights.
    pub fn new(points: Vec<S>, weights: Vec<S>) -> Result<Self, FieldError> {
        if points.is_empty() {
            return Err(FieldError::InvalidGrid("grid has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(FieldError::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite() || *p <= S::zero()) {
            return Err(FieldError::InvalidGrid("momenta must be finite and positive".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::InvalidGrid("momenta must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= S::zero()) {
            return Err(FieldError::InvalidGrid("weights must be finite and positive".into()));
        }
        Ok(Self { points, weights })
    }

    /// Trapezoidal rule on the given nodes, times `1 / 2p`.
    pub fn trapezoidal(points: Vec<S>) -> Result<Self, FieldError> {
        if points.len() < 2 {
            return Err(FieldError::InvalidGrid("trapezoidal rule needs two or more points".into()));
        }
        let n = points.len();
        let half = S::lit(0.5);
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let left = if k > 0 { points[k] - points[k - 1] } else { S::zero() };
            let right = if k + 1 < n { points[k + 1] - points[k] } else { S::zero() };
            let dp = half * (left + right);
            weights.push(dp / (S::lit(2.0) * points[k]));
        }
        Self::new(points, weights)
    }

    /// Uniform grid over `[center − 4σ, center + 4σ]`.
    ///
    /// A single-point grid places its node at `center` and gives it the whole
    /// window as quadrature width.
    pub fn uniform(center: S, sigma: S, n: usize) -> Result<Self, FieldError> {
        if !(center.is_finite() && sigma.is_finite()) || sigma <= S::zero() {
            return Err(FieldError::InvalidGrid("center and sigma must be finite, sigma > 0".into()));
        }
        let half_width = S::lit(GRID_HALF_WIDTH_SIGMAS) * sigma;
        let lo = center - half_width;
        if lo <= S::zero() {
            return Err(FieldError::InvalidGrid(
                "grid window reaches non-positive momenta; raise center or shrink sigma".into(),
            ));
        }
        match n {
            0 => Err(FieldError::InvalidGrid("grid has no points".into())),
            1 => {
                let width = S::lit(2.0) * half_width;
                Self::new(vec![center], vec![width / (S::lit(2.0) * center)])
            }
            _ => {
                let step = S::lit(2.0) * half_width / S::from_usize_lossy(n - 1);
                let points = (0..n).map(|k| lo + step * S::from_usize_lossy(k)).collect();
                Self::trapezoidal(points)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Smallest node spacing; `None` for a single-point grid.
    pub fn min_spacing(&self) -> Option<S> {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<S>, d| Some(acc.map_or(d, |a| a.min(d))))
    }

    /// Spatial period of the Fourier synthesis on a uniform grid, `2π / Δp`.
    pub fn spatial_period(&self) -> Option<S> {
        self.min_spacing().map(|h| S::TAU() / h)
    }
}
