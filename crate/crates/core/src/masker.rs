//! Hurwitz-Radon masker for the real ququart.
//!
//! The masker sends the computational basis `|j>` of a four-level system to
//! `-i (U_j ⊗ 1)|Φ>`, where `U_0 = 1`, `{U_1, U_2, U_3} = {iZ, iX, iY}` and
//! `|Φ> = (|00> + |11>)/√2`. The images form the two-qubit magic basis, so
//! every real input lands on a maximally entangled state and both reduced
//! states are `I/2`.

use crate::error::{Error, Result};
use crate::qcore::{
    concurrence_pure, identity, kron, robustness_of_imaginarity, CMatrix, DensityMatrix, Pauli, StateVector, C64, I,
};

/// Three anticommuting unitaries squaring to `-1`; `U_0 = 1` is implicit.
#[derive(Clone, Debug)]
pub struct HurwitzRadonSet {
    matrices: [CMatrix; 3],
}

impl HurwitzRadonSet {
    pub fn matrices(&self) -> &[CMatrix; 3] {
        &self.matrices
    }

    /// `[U_0, U_1, U_2, U_3]` with `U_0` the identity.
    pub fn with_identity(&self) -> [CMatrix; 4] {
        [identity(2), self.matrices[0].clone(), self.matrices[1].clone(), self.matrices[2].clone()]
    }

    /// Largest entry of `U_j U_k + U_k U_j + 2δ_jk·1` over all pairs.
    pub fn anticommutator_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, uj) in self.matrices.iter().enumerate() {
            for (k, uk) in self.matrices.iter().enumerate() {
                let mut acomm = uj * uk + uk * uj;
                if j == k {
                    acomm += identity(2) * C64::from(2.0);
                }
                worst = worst.max(acomm.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// `{iZ, iX, iY}`.
pub fn build_hr_d4() -> HurwitzRadonSet {
    HurwitzRadonSet {
        matrices: [Pauli::Z.matrix() * I, Pauli::X.matrix() * I, Pauli::Y.matrix() * I],
    }
}

/// `(|00> + |11>)/√2`.
pub fn canonical_bell() -> StateVector {
    StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).expect("nonzero")
}

/// Magic basis `|Φ_j> = (U_j ⊗ 1)|Φ>`, without the masker's `-i` phase.
pub fn magic_basis() -> [StateVector; 4] {
    let bell = canonical_bell();
    build_hr_d4()
        .with_identity()
        .map(|u| bell.apply(&kron(&u, &identity(2))).expect("4-dim"))
}

/// The masking isometry as a 4x4 matrix whose columns are `M|j>`.
#[derive(Clone, Debug)]
pub struct MaskerIsometry {
    matrix: CMatrix,
}

impl MaskerIsometry {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector::from_vector_unchecked(self.matrix.column(j).into_owned())
    }

    pub fn columns(&self) -> [StateVector; 4] {
        [0, 1, 2, 3].map(|j| self.column(j))
    }

    /// `M|ψ>` for a ququart pure state.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        psi.apply(&self.matrix)
    }

    /// `MρM†`.
    pub fn mask(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.conjugate_by(&self.matrix)
    }
}

/// `M|j> = -i (U_j ⊗ 1)|Φ>`.
pub fn masker_matrix() -> MaskerIsometry {
    let cols = magic_basis();
    let matrix = CMatrix::from_fn(4, 4, |row, col| -I * cols[col].amplitudes()[row]);
    MaskerIsometry { matrix }
}

pub fn mask_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    masker_matrix().mask(rho)
}

/// `U(c) = Σ_j c_j U_j`. Unitary whenever `c` is a real unit vector.
pub fn u_of_c(coeffs: &[C64; 4]) -> CMatrix {
    build_hr_d4()
        .with_identity()
        .iter()
        .zip(coeffs)
        .fold(CMatrix::zeros(2, 2), |acc, (u, &cj)| acc + u * cj)
}

/// Real-coefficient convenience wrapper around [`u_of_c`].
pub fn u_of_real(coeffs: &[f64; 4]) -> CMatrix {
    u_of_c(&coeffs.map(C64::from))
}

/// Returns `(C(M|ψ>), I_R(|ψ><ψ|))`; for pure inputs `C = sqrt(1 - I_R²)`.
pub fn check_concurrence_relation(psi: &StateVector) -> Result<(f64, f64)> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: psi.dim() });
    }
    let masked = masker_matrix().apply(psi)?;
    Ok((concurrence_pure(&masked)?, robustness_of_imaginarity(&psi.projector())))
}

/// Real-qubit masker built from the single HR matrix `iY`:
/// `|0> ↦ -i|Φ>`, `|1> ↦ -i(iY ⊗ 1)|Φ>`. Returns a 4x2 isometry.
#[cfg(feature = "qubit-masker")]
pub fn qubit_masker_matrix() -> CMatrix {
    let bell = canonical_bell();
    let iy = Pauli::Y.matrix() * I;
    let second = bell.apply(&kron(&iy, &identity(2))).expect("4-dim");
    CMatrix::from_fn(4, 2, |row, col| {
        let v = if col == 0 { bell.amplitudes()[row] } else { second.amplitudes()[row] };
        -I * v
    })
}
