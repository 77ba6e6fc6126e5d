//! Local projective measurement on the path ⊗ polarization qubits.
//!
//! The path qubit lives on paths +1 (`|0>`) and −1 (`|1>`), the polarization
//! qubit on H (`|0>`) and V (`|1>`). The measured product basis is
//! `|φ_m>|ψ_n>` with
//! `φ0 = cosγ|0> + e^{iζ} sinγ|1>`, `φ1 = sinγ|0> − e^{iζ} cosγ|1>` and
//! `ψ` defined likewise from `(α, β)`.
//!
//! Module layout: Q2·H4 on paths ±1 rotate `ψ0 → H`; a +4 displacer, an X
//! plate on paths −1 and 5 and a +2 displacer swap the roles of path and
//! polarization; Q3·H5 on paths 1 and 5 rotate `φ0 → H`. The four detectors
//! then see `|a1|², |a3|², |a0|², |a2|²` with `a_{2m+n} = <φ_m ψ_n|Ψ>`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use super::nelder_mead::minimize_with_restarts;
use super::{fold_degrees, hwp_jones, qwp_jones, OpticalElement, OpticalLayout, PathPolState, PathScope, Pol};
use crate::error::Result;
use crate::qcore::{CMatrix, DensityMatrix, Pauli, StateVector, C64, ONE};

/// Leakage `|<V|W|target>|²` below which a local rotation is accepted.
const MEAS_TOL: f64 = 1e-22;
const RESTARTS: usize = 20;

/// Detector positions `(path, pol)` for SPCM 0..3.
pub const DETECTORS: [(i32, Pol); 4] = [(5, Pol::H), (5, Pol::V), (1, Pol::H), (1, Pol::V)];

/// Product-basis parameters in radians: `(gamma, zeta)` for the path qubit,
/// `(alpha, beta)` for polarization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasSetting {
    pub gamma: f64,
    pub zeta: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn local_params(p: Pauli) -> (f64, f64) {
    match p {
        Pauli::Z => (0.0, 0.0),
        Pauli::X => (FRAC_PI_4, 0.0),
        Pauli::Y => (FRAC_PI_4, std::f64::consts::FRAC_PI_2),
    }
}

fn local_basis(angle: f64, phase: f64) -> [StateVector; 2] {
    let e = C64::from_polar(1.0, phase);
    let (s, c) = angle.sin_cos();
    [
        StateVector::from_vector_unchecked(vec![C64::from(c), e * s].into()),
        StateVector::from_vector_unchecked(vec![C64::from(s), -e * c].into()),
    ]
}

impl MeasSetting {
    /// Eigenbases of `path ⊗ pol` Paulis, `+1` eigenvector first.
    pub fn pauli(path: Pauli, pol: Pauli) -> Self {
        let (gamma, zeta) = local_params(path);
        let (alpha, beta) = local_params(pol);
        Self { gamma, zeta, alpha, beta }
    }

    pub fn path_basis(&self) -> [StateVector; 2] {
        local_basis(self.gamma, self.zeta)
    }

    pub fn pol_basis(&self) -> [StateVector; 2] {
        local_basis(self.alpha, self.beta)
    }

    /// `[φ0ψ0, φ0ψ1, φ1ψ0, φ1ψ1]`.
    pub fn product_basis(&self) -> [StateVector; 4] {
        let phi = self.path_basis();
        let psi = self.pol_basis();
        [0, 1, 2, 3].map(|k| phi[k / 2].tensor(&psi[k % 2]))
    }

    /// Born probabilities `|a_k|²` in product-basis order.
    pub fn born_probs(&self, rho: &DensityMatrix) -> [f64; 4] {
        self.product_basis().map(|b| b.amplitudes().dotc(&(rho.matrix() * b.amplitudes())).re.max(0.0))
    }

    /// Largest deviation of the product-basis Gram matrix from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let b = self.product_basis();
        let mut worst: f64 = 0.0;
        for (j, u) in b.iter().enumerate() {
            for (k, v) in b.iter().enumerate() {
                let target = if j == k { ONE } else { C64::from(0.0) };
                worst = worst.max((u.inner(v) - target).norm());
            }
        }
        worst
    }
}

/// Waveplate angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasAngles {
    pub q2: f64,
    pub h4: f64,
    pub q3: f64,
    pub h5: f64,
}

/// QWP then HWP angles taking `target` to H.
fn solve_rotation(target: &StateVector, seed: u64) -> Result<(f64, f64)> {
    let t = target.amplitudes();
    let leak = |p: &[f64]| {
        let w: CMatrix = hwp_jones(p[1]) * qwp_jones(p[0]);
        (w[(1, 0)] * t[0] + w[(1, 1)] * t[1]).norm_sqr()
    };
    let best = minimize_with_restarts(&leak, &[0.0, 0.0], RESTARTS, MEAS_TOL, seed, "measurement compilation")?;
    Ok((fold_degrees(best.point[0]), fold_degrees(best.point[1])))
}

pub fn compile_measurement(setting: &MeasSetting, seed: u64) -> Result<MeasAngles> {
    let (q2, h4) = solve_rotation(&setting.pol_basis()[0], seed)?;
    let (q3, h5) = solve_rotation(&setting.path_basis()[0], seed.wrapping_add(1))?;
    Ok(MeasAngles { q2, h4, q3, h5 })
}

pub fn measurement_layout(angles: &MeasAngles) -> OpticalLayout {
    OpticalLayout::new(vec![
        OpticalElement::qwp(angles.q2, PathScope::paths(&[1, -1])),
        OpticalElement::hwp(angles.h4, PathScope::paths(&[1, -1])),
        OpticalElement::bd(0, 4, PathScope::All),
        OpticalElement::xplate(PathScope::paths(&[-1, 5])),
        OpticalElement::bd(0, 2, PathScope::All),
        OpticalElement::qwp(angles.q3, PathScope::paths(&[1, 5])),
        OpticalElement::hwp(angles.h5, PathScope::paths(&[1, 5])),
    ])
}

/// Click probabilities at SPCM 0..3.
pub fn detector_distribution(state: &PathPolState) -> [f64; 4] {
    DETECTORS.map(|(p, pol)| state.amplitude(p, pol).norm_sqr())
}

/// Sends a two-qubit state through the compiled module and returns the
/// detector distribution.
pub fn measure_product_basis(psi: &StateVector, setting: &MeasSetting, seed: u64) -> Result<[f64; 4]> {
    let angles = compile_measurement(setting, seed)?;
    let out = measurement_layout(&angles).apply(&PathPolState::from_two_qubit(psi)?)?;
    Ok(detector_distribution(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random, EPS_EXACT};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_settings_are_orthonormal() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                assert!(MeasSetting::pauli(a, b).orthonormality_deviation() < EPS_EXACT);
            }
        }
    }

    #[test]
    fn computational_basis_needs_no_rotation() {
        let angles = compile_measurement(&MeasSetting::pauli(Pauli::Z, Pauli::Z), 0).unwrap();
        assert_eq!((angles.q2, angles.h4, angles.q3, angles.h5), (0.0, 0.0, 0.0, 0.0));
        let out = measure_product_basis(&StateVector::basis(4, 0), &MeasSetting::pauli(Pauli::Z, Pauli::Z), 0).unwrap();
        assert!((out[2] - 1.0).abs() < EPS_EXACT);
    }

    #[test]
    fn basis_vectors_hit_single_detectors() {
        let spcm_of = [2, 0, 3, 1];
        for setting in [MeasSetting::pauli(Pauli::X, Pauli::X), MeasSetting::pauli(Pauli::Z, Pauli::Y)] {
            for (k, b) in setting.product_basis().iter().enumerate() {
                let out = measure_product_basis(b, &setting, 5).unwrap();
                assert!((out[spcm_of[k]] - 1.0).abs() < 1e-10, "{setting:?} {k} {out:?}");
            }
        }
    }

    #[test]
    fn uniform_amplitudes_give_uniform_clicks() {
        let setting = MeasSetting::pauli(Pauli::Y, Pauli::X);
        let b = setting.product_basis();
        let sum: Vec<C64> = (0..4).map(|i| b.iter().map(|v| v.amplitudes()[i]).sum::<C64>() * 0.5).collect();
        let psi = StateVector::new(sum).unwrap();
        for p in measure_product_basis(&psi, &setting, 2).unwrap() {
            assert!((p - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_born_rule_on_random_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spcm_of = [2, 0, 3, 1];
        for _ in 0..10 {
            let setting = MeasSetting {
                gamma: rng.random_range(0.0..3.2),
                zeta: rng.random_range(0.0..6.3),
                alpha: rng.random_range(0.0..3.2),
                beta: rng.random_range(0.0..6.3),
            };
            let psi = random::pure_state(4, &mut rng);
            let born = setting.born_probs(&psi.projector());
            let clicks = measure_product_basis(&psi, &setting, 9).unwrap();
            for k in 0..4 {
                assert!((clicks[spcm_of[k]] - born[k]).abs() < 1e-8);
            }
        }
    }
}
