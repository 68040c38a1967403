use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

use super::{FieldError, MomentumGrid};

/// Discretized one-particle momentum-space wavefunction `ψ(p_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitude<S> {
    grid: Arc<MomentumGrid<S>>,
    values: Vec<Complex<S>>,
}

impl<S: Real> MomentumAmplitude<S> {
    pub fn new(grid: Arc<MomentumGrid<S>>, values: Vec<Complex<S>>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::InvalidInput(format!(
                "{} amplitude values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FieldError::InvalidInput("non-finite amplitude value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<MomentumGrid<S>>, f: impl Fn(S) -> Complex<S>) -> Result<Self, FieldError> {
        let values = grid.points().iter().map(|&p| f(p)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<MomentumGrid<S>> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<S>] {
        &self.values
    }

    pub fn norm(&self) -> S {
        self.norm_sqr().sqrt()
    }

    fn norm_sqr(&self) -> S {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, &w)| w * v.norm_sqr())
            .sum()
    }

    pub fn scale(&self, factor: Complex<S>) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn normalized(&self) -> Result<Self, FieldError> {
        let n = self.norm();
        if !(n > S::zero()) {
            return Err(FieldError::InvalidStates("cannot normalize a zero amplitude".into()));
        }
        Ok(self.scale(Complex::new(n.recip(), S::zero())))
    }

    /// `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: Complex<S>, other: &Self, b: Complex<S>) -> Result<Self, FieldError> {
        same_grid(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * a + y * b).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Weighted components `√w_k ψ_k`: coordinates in the orthonormal basis
    /// of the discretized space.
    pub fn orthonormal_coordinates(&self) -> Vec<Complex<S>> {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, &w)| v * w.sqrt())
            .collect()
    }
}

pub(crate) fn same_grid<S: Real>(
    a: &MomentumAmplitude<S>,
    b: &MomentumAmplitude<S>,
) -> Result<(), FieldError> {
    if Arc::ptr_eq(&a.grid, &b.grid) || a.grid == b.grid {
        Ok(())
    } else {
        Err(FieldError::IncompatibleGrids)
    }
}

/// Quadrature form of the invariant inner product, `Σ_k w_k φ̄_k ψ_k`.
pub fn inner_product<S: Real>(
    phi: &MomentumAmplitude<S>,
    psi: &MomentumAmplitude<S>,
) -> Result<Complex<S>, FieldError> {
    same_grid(phi, psi)?;
    let mut acc = Complex::new(S::zero(), S::zero());
    for ((a, b), &w) in phi.values.iter().zip(&psi.values).zip(phi.grid.weights()) {
        acc += a.conj() * b * w;
    }
    Ok(acc)
}

/// Free massless evolution: `ψ(p) ↦ ψ(p)·e^{−ipt}`.
pub fn evolve<S: Real>(state: &MomentumAmplitude<S>, t: S) -> Result<MomentumAmplitude<S>, FieldError> {
    if !t.is_finite() {
        return Err(FieldError::InvalidInput("evolution time must be finite".into()));
    }
    if t == S::zero() {
        return Ok(state.clone());
    }
    let values = state
        .values
        .iter()
        .zip(state.grid.points())
        .map(|(v, &p)| v * Complex::from_polar(S::one(), -(p * t)))
        .collect();
    Ok(MomentumAmplitude { grid: state.grid.clone(), values })
}

/// Position-space probability density `|φ(x, t)|²` on `x_grid`.
///
/// `φ(x,t) = (2π)^{-1/2} Σ_k w_k √(2p_k) ψ_k e^{i p_k (x − t)}`; on a uniform
/// grid this equals `√(Δp/2π) Σ_k √w_k ψ_k e^{i p_k (x − t)}` at interior
/// nodes. The synthesis is periodic in `x` with period `2π/Δp`, so the
/// density integrates to one over any window of that length.
pub fn position_density<S: Real>(
    state: &MomentumAmplitude<S>,
    x_grid: &[S],
    t: S,
) -> Result<Vec<S>, FieldError> {
    if x_grid.is_empty() {
        return Err(FieldError::InvalidInput("empty position grid".into()));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::InvalidInput("position grid must be strictly increasing".into()));
    }
    if !t.is_finite() || x_grid.iter().any(|x| !x.is_finite()) {
        return Err(FieldError::InvalidInput("non-finite position or time".into()));
    }
    let two = S::lit(2.0);
    let norm = (S::TAU()).sqrt().recip();
    let coeffs: Vec<(S, Complex<S>)> = state
        .grid
        .points()
        .iter()
        .zip(state.grid.weights())
        .zip(&state.values)
        .map(|((&p, &w), &v)| (p, v * (w * (two * p).sqrt() * norm)))
        .collect();
    Ok(x_grid
        .iter()
        .map(|&x| {
            let u = x - t;
            let mut acc = Complex::new(S::zero(), S::zero());
            for &(p, c) in &coeffs {
                acc += c * Complex::from_polar(S::one(), p * u);
            }
            acc.norm_sqr()
        })
        .collect())
}

/// Built-in two-state wavepacket families. Each supplies two seed envelopes
/// that are orthonormalized by [`make_orthogonal_pair`]. `offset` places the
/// packet at position `x = offset` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WavepacketFamily<S> {
    /// Gaussian envelope `exp(−(p−c)²/2w²)` and its first Hermite modulation.
    GaussianPair { center: S, width: S, offset: S },
    /// `sech((p−c)/s)` and `tanh·sech`: exponential decay in momentum with
    /// an exponentially localized (`sech`-shaped) position profile.
    ExponentialTailPair { center: S, scale: S, offset: S },
}

impl<S: Real> WavepacketFamily<S> {
    pub fn gaussian(center: S, width: S) -> Self {
        Self::GaussianPair { center, width, offset: S::zero() }
    }

    pub fn exponential_tail(center: S, scale: S) -> Self {
        Self::ExponentialTailPair { center, scale, offset: S::zero() }
    }

    pub fn center(&self) -> S {
        match *self {
            Self::GaussianPair { center, .. } | Self::ExponentialTailPair { center, .. } => center,
        }
    }

    /// Width of the momentum envelope.
    pub fn momentum_width(&self) -> S {
        match *self {
            Self::GaussianPair { width, .. } => width,
            Self::ExponentialTailPair { scale, .. } => scale,
        }
    }

    /// Characteristic position-space width of the first state: `1/w` for the
    /// Gaussian, `2/(πs)` (the `sech²` decay length) for the exponential tail.
    pub fn position_width(&self) -> S {
        match *self {
            Self::GaussianPair { width, .. } => width.recip(),
            Self::ExponentialTailPair { scale, .. } => S::lit(2.0) / (S::PI() * scale),
        }
    }

    fn seeds(&self, p: S) -> (Complex<S>, Complex<S>) {
        let (e1, e2, offset) = match *self {
            Self::GaussianPair { center, width, offset } => {
                let u = (p - center) / width;
                let g = (-(u * u) / S::lit(2.0)).exp();
                (g, u * g, offset)
            }
            Self::ExponentialTailPair { center, scale, offset } => {
                let u = (p - center) / scale;
                let sech = u.cosh().recip();
                (sech, u.tanh() * sech, offset)
            }
        };
        let shift = Complex::from_polar(S::one(), -(p * offset));
        (shift * e1, shift * e2)
    }

    fn check(&self) -> Result<(), FieldError> {
        let (c, w) = (self.center(), self.momentum_width());
        let off = match *self {
            Self::GaussianPair { offset, .. } | Self::ExponentialTailPair { offset, .. } => offset,
        };
        if !(c.is_finite() && w.is_finite() && off.is_finite()) || w <= S::zero() || c <= S::zero() {
            return Err(FieldError::InvalidInput("family parameters must be finite and positive".into()));
        }
        Ok(())
    }
}

/// Relative residual below which the second seed is treated as a multiple
/// of the first.
const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Gram–Schmidt orthonormalization of the family's two seed envelopes.
pub fn make_orthogonal_pair<S: Real>(
    grid: &Arc<MomentumGrid<S>>,
    family: &WavepacketFamily<S>,
) -> Result<(MomentumAmplitude<S>, MomentumAmplitude<S>), FieldError> {
    family.check()?;
    let (v1, v2): (Vec<_>, Vec<_>) = grid.points().iter().map(|&p| family.seeds(p)).unzip();
    let seed1 = MomentumAmplitude::new(grid.clone(), v1)?;
    let seed2 = MomentumAmplitude::new(grid.clone(), v2)?;

    let n1 = seed1.norm();
    if !(n1 > S::zero()) {
        return Err(FieldError::DegenerateFamily);
    }
    let psi1 = seed1.scale(Complex::new(n1.recip(), S::zero()));

    let n2 = seed2.norm();
    let mut residual = seed2.clone();
    // Two passes: classical Gram–Schmidt loses orthogonality to rounding.
    for _ in 0..2 {
        let overlap = inner_product(&psi1, &residual)?;
        residual = residual.combine(Complex::new(S::one(), S::zero()), &psi1, -overlap)?;
    }
    let r = residual.norm();
    if !(n2 > S::zero()) || !(r > S::lit(DEGENERACY_THRESHOLD) * n2) {
        return Err(FieldError::DegenerateFamily);
    }
    let psi2 = residual.scale(Complex::new(r.recip(), S::zero()));
    Ok((psi1, psi2))
}
