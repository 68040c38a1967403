use ndarray::Array2;
use num_complex::Complex;

use crate::scalar::Real;

use super::amplitude::{inner_product, same_grid};
use super::{FieldError, MomentumAmplitude};

/// Admissible `|⟨ψ₁|ψ₂⟩|` and `|‖ψ‖ − 1|` when building projectors.
pub const STATE_TOLERANCE: f64 = 1e-8;

/// Three-outcome measurement `{P₁, P₂, P⊥}` with `P₁ + P₂ + P⊥ = I`.
///
/// Matrices act on orthonormal coordinates `u_k = √w_k ψ_k`, in which the
/// quadrature inner product is the Euclidean one and each projector is
/// Hermitian.
#[derive(Debug, Clone)]
pub struct ProjectorSet<S> {
    pub p1: Array2<Complex<S>>,
    pub p2: Array2<Complex<S>>,
    pub perp: Array2<Complex<S>>,
}

fn outer<S: Real>(u: &[Complex<S>]) -> Array2<Complex<S>> {
    let n = u.len();
    Array2::from_shape_fn((n, n), |(j, k)| u[j] * u[k].conj())
}

/// Rank-one projectors onto an orthonormal pair and the complement.
pub fn build_projectors<S: Real>(
    psi1: &MomentumAmplitude<S>,
    psi2: &MomentumAmplitude<S>,
) -> Result<ProjectorSet<S>, FieldError> {
    same_grid(psi1, psi2)?;
    let tol = S::lit(STATE_TOLERANCE);
    for (name, psi) in [("first", psi1), ("second", psi2)] {
        if (psi.norm() - S::one()).abs() > tol {
            return Err(FieldError::InvalidStates(format!("{name} state is not normalized")));
        }
    }
    let overlap = inner_product(psi1, psi2)?.norm();
    if overlap >= tol {
        return Err(FieldError::InvalidStates(format!("states overlap by {overlap}")));
    }
    let p1 = outer(&psi1.orthonormal_coordinates());
    let p2 = outer(&psi2.orthonormal_coordinates());
    let n = p1.nrows();
    let perp = Array2::from_shape_fn((n, n), |(j, k)| {
        let id = if j == k { Complex::new(S::one(), S::zero()) } else { Complex::new(S::zero(), S::zero()) };
        id - p1[(j, k)] - p2[(j, k)]
    });
    Ok(ProjectorSet { p1, p2, perp })
}

/// Frobenius norm of a complex matrix.
pub fn frobenius<S: Real>(m: &Array2<Complex<S>>) -> S {
    m.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt()
}

impl<S: Real> ProjectorSet<S> {
    pub fn dim(&self) -> usize {
        self.p1.nrows()
    }

    pub fn members(&self) -> [&Array2<Complex<S>>; 3] {
        [&self.p1, &self.p2, &self.perp]
    }

    /// Largest `‖P·P − P‖_F` over the three projectors.
    pub fn idempotence_defect(&self) -> S {
        self.members()
            .iter()
            .map(|p| frobenius(&(p.dot(*p) - *p)))
            .fold(S::zero(), S::max)
    }

    /// Largest `‖P_i·P_j‖_F` over pairs `i < j`. For Hermitian members
    /// `P_j·P_i = (P_i·P_j)†`, so the mirrored pairs add nothing.
    pub fn orthogonality_defect(&self) -> S {
        let m = self.members();
        [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| frobenius(&m[i].dot(m[j])))
            .fold(S::zero(), S::max)
    }

    /// Largest `‖P − P†‖_F` over the three projectors.
    pub fn hermiticity_defect(&self) -> S {
        self.members()
            .iter()
            .map(|p| frobenius(&(p.to_owned() - p.t().mapv(|z| z.conj()))))
            .fold(S::zero(), S::max)
    }

    /// `‖P₁ + P₂ + P⊥ − I‖_F`.
    pub fn completeness_defect(&self) -> S {
        let n = self.dim();
        let sum = &self.p1 + &self.p2 + &self.perp;
        let id = Array2::from_shape_fn((n, n), |(j, k)| {
            if j == k { Complex::new(S::one(), S::zero()) } else { Complex::new(S::zero(), S::zero()) }
        });
        frobenius(&(sum - id))
    }

    /// Traces of the three projectors; for projectors trace equals rank.
    pub fn traces(&self) -> [S; 3] {
        self.members().map(|p| p.diag().iter().map(|z| z.re).sum())
    }
}

/// `(⟨ψ|P₁|ψ⟩, ⟨ψ|P₂|ψ⟩, ⟨ψ|P⊥|ψ⟩)`.
pub fn outcome_probabilities<S: Real>(
    projectors: &ProjectorSet<S>,
    state: &MomentumAmplitude<S>,
) -> Result<(S, S, S), FieldError> {
    let u = state.orthonormal_coordinates();
    if u.len() != projectors.dim() {
        return Err(FieldError::IncompatibleGrids);
    }
    let expect = |p: &Array2<Complex<S>>| -> S {
        let mut acc = Complex::new(S::zero(), S::zero());
        for (j, row) in p.rows().into_iter().enumerate() {
            let mut pu = Complex::new(S::zero(), S::zero());
            for (pk, uk) in row.iter().zip(&u) {
                pu += pk * uk;
            }
            acc += u[j].conj() * pu;
        }
        acc.re
    };
    Ok((expect(&projectors.p1), expect(&projectors.p2), expect(&projectors.perp)))
}
