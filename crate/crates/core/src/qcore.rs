//! Dense complex linear algebra and quantum-state utilities.
//!
//! Everything here works on small dimensions (at most 16) in double precision.
//! Matrices are `nalgebra` dynamic matrices of `Complex64`; the newtypes
//! [`StateVector`], [`DensityMatrix`] and [`UnitaryMatrix`] carry the
//! invariants that the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const EPS_EXACT: f64 = 1e-12;
/// Tolerance for quantities that pass through an eigensolver or an iteration.
pub const EPS_NUMERIC: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a square matrix from row-major entries.
pub fn cmat(dim: usize, entries: &[C64]) -> CMatrix {
    assert_eq!(entries.len(), dim * dim, "cmat: wrong number of entries");
    CMatrix::from_row_slice(dim, dim, entries)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Single-qubit Pauli operators, basis order |0>, |1>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::X => cmat(2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => cmat(2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => cmat(2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(ch: char) -> Option<Pauli> {
        match ch.to_ascii_uppercase() {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Kronecker product with row-major block convention:
/// `(A⊗B)[i·p + k, j·q + l] = A[i,j]·B[k,l]` where `B` is `p×q`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized within [`EPS_NUMERIC`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let v = CVector::from_vec(amplitudes);
        let norm_sq = v.norm_squared();
        if (norm_sq - 1.0).abs() > EPS_NUMERIC {
            return Err(Error::Unnormalized { norm_sq });
        }
        Ok(Self { amplitudes: v })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Unnormalized { norm_sq: norm * norm });
        }
        Ok(Self { amplitudes: v / C64::from(norm) })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&a| C64::from(a)).collect())
    }

    pub(crate) fn from_vector_unchecked(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_hermitian_unchecked(&self.amplitudes * self.amplitudes.adjoint())
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        Self { amplitudes: kron_vec(&self.amplitudes, &other.amplitudes) }
    }

    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|a| a.im.abs() <= EPS_EXACT)
    }

    pub fn apply(&self, m: &CMatrix) -> Result<StateVector> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: m.ncols(), found: self.dim() });
        }
        Ok(Self { amplitudes: m * &self.amplitudes })
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates a candidate density matrix.
    ///
    /// Eigenvalues in `[-EPS_NUMERIC, 0)` are clipped to zero and the trace
    /// renormalized; anything more negative is rejected.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidDensity(format!("not square: {:?}", entries.shape())));
        }
        let dev = hermitian_deviation(&entries);
        if dev > EPS_NUMERIC {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {dev:e})")));
        }
        let herm = (&entries + entries.adjoint()) * C64::from(0.5);
        let tr = herm.trace().re;
        if (tr - 1.0).abs() > EPS_NUMERIC {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let eig = SymmetricEigen::new(herm.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EPS_NUMERIC {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        if min < 0.0 {
            let clipped = eig.eigenvalues.map(|v| v.max(0.0));
            let total: f64 = clipped.iter().sum();
            let diag = CMatrix::from_diagonal(&clipped.map(|v| C64::from(v / total)));
            let rebuilt = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
            return Ok(Self { entries: rebuilt });
        }
        Ok(Self { entries: herm })
    }

    /// For matrices that are Hermitian, positive and unit-trace by construction.
    pub(crate) fn from_hermitian_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { entries: identity(dim) / C64::from(dim as f64) }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        let m = CMatrix::from_row_slice(dim, dim, &entries.iter().map(|&v| C64::from(v)).collect::<Vec<_>>());
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|a| a.im.abs() <= EPS_EXACT)
    }

    /// `U ρ U†` for an isometry or unitary `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: u.ncols(), found: self.dim() });
        }
        Ok(Self::from_hermitian_unchecked(u * &self.entries * u.adjoint()))
    }

    /// `Re tr(ρ O)` for a Hermitian observable or projector `O`.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (&self.entries * op).trace().re
    }
}

/// Unitary (or 2x2 coin) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let deviation = unitarity_deviation(&entries);
        if deviation > EPS_EXACT {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: identity(dim) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// `max |U†U - I|`; infinite for non-square input.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.ncols()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Reduced state of `rho` on `A⊗B`, with `dims = (dim_A, dim_B)`.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
    let (da, db) = dims;
    if da * db != rho.dim() {
        return Err(Error::NonFactorable { dim: rho.dim(), dim_a: da, dim_b: db });
    }
    let m = rho.matrix();
    let out = match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::B => CMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    };
    Ok(DensityMatrix::from_hermitian_unchecked(out))
}

/// Both single-qubit reductions of a two-qubit state.
pub fn qubit_reductions(rho: &DensityMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((partial_trace(rho, (2, 2), Subsystem::A)?, partial_trace(rho, (2, 2), Subsystem::B)?))
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `<target|ρ|target>`.
pub fn fidelity_with_pure(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: target.dim() });
    }
    let psi = target.amplitudes();
    Ok(psi.dotc(&(rho.matrix() * psi)).re)
}

/// `½‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    Ok(0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix())))
}

/// Concurrence of a two-qubit pure state from its reduced purity,
/// `sqrt(2(1 - tr ρ_A²))`.
pub fn concurrence_pure(psi: &StateVector) -> Result<f64> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: psi.dim() });
    }
    let reduced = partial_trace(&psi.projector(), (2, 2), Subsystem::A)?;
    Ok(concurrence_from_purity(purity(&reduced)))
}

/// `sqrt(2(1 - P))`, clamped at zero for purities that round above one.
pub fn concurrence_from_purity(reduced_purity: f64) -> f64 {
    (2.0 * (1.0 - reduced_purity)).max(0.0).sqrt()
}

/// Robustness of imaginarity `‖ρ - ρᵀ‖₁ / 2` in the computational basis.
pub fn robustness_of_imaginarity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // ρᵀ = conj(ρ) for Hermitian ρ, so ρ - ρᵀ is itself Hermitian.
    0.5 * trace_norm_hermitian(&(m - m.transpose()))
}

/// Pure-state form `sqrt(1 - tr(ρρᵀ)) = sqrt(1 - |Σ ψ_j²|²)`.
pub fn robustness_of_imaginarity_pure(psi: &StateVector) -> f64 {
    let s: C64 = psi.amplitudes().iter().map(|a| a * a).sum();
    (1.0 - s.norm_sqr()).max(0.0).sqrt()
}

/// Seeded random states and matrices for property tests and experiments.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Haar-random pure state.
    pub fn pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
        let amps = (0..dim).map(|_| gaussian_c64(rng)).collect();
        StateVector::normalized(amps).expect("gaussian vector is nonzero")
    }

    /// Uniformly random real unit vector.
    pub fn real_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    pub fn real_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
        StateVector::from_real(&real_unit_vector(dim, rng)).expect("nonzero")
    }

    /// `GᵀG / tr(GᵀG)` with `G` a real Gaussian matrix.
    pub fn real_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
        let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
        let m = g.transpose() * &g;
        let tr = m.trace();
        DensityMatrix::from_hermitian_unchecked((m / tr).map(C64::from))
    }

    /// `G†G / tr(G†G)` with `G` a complex Gaussian matrix.
    pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
        let m = g.adjoint() * &g;
        let tr = m.trace();
        DensityMatrix::from_hermitian_unchecked(m / tr)
    }

    /// Haar-random unitary via QR of a complex Gaussian matrix.
    pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
        let qr = g.qr();
        let q = qr.q();
        let r = qr.r();
        let phases = CMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                ONE
            }
        }));
        q * phases
    }
}
