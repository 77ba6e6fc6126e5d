//! Compiles a walk schedule into waveplates and beam displacers.
//!
//! Coin state 0 is H and coin state 1 is V; a translation is a displacer moving
//! H one path down and V one path up. Each coin becomes a short waveplate
//! sequence equal to the coin up to a phase, and that phase is made uniform
//! across the coins of a layer.

use super::nelder_mead::minimize_with_restarts;
use super::{fold_degrees, hwp_jones, qwp_jones, ElementKind, OpticalElement, OpticalLayout, PathScope};
use crate::error::{Error, Result};
use super::preparation::{simulate_preparation, solve_prep_angles};
use crate::qcore::{CMatrix, StateVector, C64, EPS_EXACT, ONE};
use crate::walk::{masking_schedule, Layer, WalkSchedule};

/// Residual below which a numerically compiled coin is accepted.
const COIN_TOL: f64 = 1e-24;

/// Waveplates in the order the beam meets them, with `W = phase · coin`.
#[derive(Clone, Debug)]
pub struct CompiledCoin {
    pub plates: Vec<(ElementKind, f64)>,
    pub phase: C64,
}

impl CompiledCoin {
    pub fn matrix(&self) -> CMatrix {
        self.plates.iter().fold(crate::qcore::identity(2), |acc, &(kind, deg)| {
            let m = match kind {
                ElementKind::Qwp => qwp_jones(deg),
                _ => hwp_jones(deg),
            };
            m * acc
        })
    }

    /// Flips the realized phase by turning one HWP through 90°.
    fn negate(&mut self) -> bool {
        match self.plates.iter_mut().find(|(k, _)| *k == ElementKind::Hwp) {
            Some((_, deg)) => {
                *deg = fold_degrees(*deg + 90.0);
                self.phase = -self.phase;
                true
            }
            None => false,
        }
    }
}

fn phase_if_close(coin: &CMatrix, w: &CMatrix, phase: C64) -> Option<C64> {
    let diff = (w - coin * phase).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (diff < EPS_EXACT).then_some(phase)
}

fn det2(m: &CMatrix) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

fn single_hwp(coin: &CMatrix) -> Option<CompiledCoin> {
    let g = (-det2(coin)).sqrt();
    for g in [g, -g] {
        let m = coin / g;
        let theta = fold_degrees(m[(1, 0)].re.atan2(m[(0, 0)].re).to_degrees() / 2.0);
        let w = hwp_jones(theta);
        if let Some(p) = phase_if_close(coin, &w, ONE / g) {
            return Some(CompiledCoin { plates: vec![(ElementKind::Hwp, theta)], phase: p });
        }
    }
    None
}

fn hwp_pair(coin: &CMatrix) -> Option<CompiledCoin> {
    let g = det2(coin).sqrt();
    for g in [g, -g] {
        let m = coin / g;
        // HWP(a)·HWP(0) is a rotation by 2a.
        let a = fold_degrees(m[(1, 0)].re.atan2(m[(0, 0)].re).to_degrees() / 2.0);
        let w = hwp_jones(a) * hwp_jones(0.0);
        if let Some(p) = phase_if_close(coin, &w, ONE / g) {
            return Some(CompiledCoin { plates: vec![(ElementKind::Hwp, 0.0), (ElementKind::Hwp, a)], phase: p });
        }
    }
    None
}

/// Finds a waveplate sequence equal to `coin` up to a phase: one HWP, two HWPs,
/// or failing those a QWP–HWP–QWP triple found numerically.
pub fn compile_coin(coin: &CMatrix, seed: u64) -> Result<CompiledCoin> {
    if coin.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: coin.nrows() });
    }
    if let Some(cc) = single_hwp(coin).or_else(|| hwp_pair(coin)) {
        return Ok(cc);
    }
    let w = |p: &[f64]| qwp_jones(p[2]) * hwp_jones(p[1]) * qwp_jones(p[0]);
    // ‖W − e^{iχ}C‖²/4 at the best phase; equals 1 − |tr(C†W)|/2 without the cancellation.
    let residual = |p: &[f64]| {
        let wp = w(p);
        let t = (coin.adjoint() * &wp).trace();
        let g = if t.norm() > 0.0 { t / t.norm() } else { ONE };
        (wp - coin * g).norm_squared() / 4.0
    };
    let best = minimize_with_restarts(&residual, &[0.0, 0.0, 0.0], 20, COIN_TOL, seed, "coin compilation")?;
    let angles: Vec<f64> = best.point.iter().map(|&d| fold_degrees(d)).collect();
    let realized = w(&angles);
    let phase = (coin.adjoint() * &realized).trace() / C64::from(2.0);
    Ok(CompiledCoin {
        plates: vec![(ElementKind::Qwp, angles[0]), (ElementKind::Hwp, angles[1]), (ElementKind::Qwp, angles[2])],
        phase: phase / phase.norm(),
    })
}

/// Optical layout of a walk schedule.
///
/// Within each coin layer the compiled coins share one phase (fixed by turning
/// an HWP through 90° where needed). Paths without a coin are untouched, so
/// the schedule must keep them empty whenever that phase is not 1 — as the
/// masking schedule does.
pub fn compile_schedule(schedule: &WalkSchedule, seed: u64) -> Result<OpticalLayout> {
    let mut layout = OpticalLayout::default();
    for (li, layer) in schedule.layers.iter().enumerate() {
        match layer {
            Layer::Translate => layout.push(OpticalElement::bd(-1, 1, PathScope::All)),
            Layer::Coins(coins) => {
                let mut reference: Option<C64> = None;
                for (ci, (&pos, m)) in coins.coins().iter().enumerate() {
                    let mut cc = compile_coin(m, seed.wrapping_add((li * 64 + ci) as u64))?;
                    let p0 = *reference.get_or_insert(cc.phase);
                    if (cc.phase - p0).norm() > 1e-9 && !((cc.phase + p0).norm() < 1e-9 && cc.negate()) {
                        return Err(Error::NoConvergence { what: "layer phase alignment", residual: (cc.phase - p0).norm() });
                    }
                    for (kind, deg) in cc.plates {
                        let scope = PathScope::paths(&[pos]);
                        layout.push(match kind {
                            ElementKind::Qwp => OpticalElement::qwp(deg, scope),
                            _ => OpticalElement::hwp(deg, scope),
                        });
                    }
                }
            }
        }
    }
    Ok(layout)
}

/// Layout of the masking module.
pub fn masking_layout() -> Result<OpticalLayout> {
    compile_schedule(&masking_schedule(), 0)
}

/// Full optical masker for a real input: preparation, the given masking
/// layout, and read-out of the path ⊗ polarization qubits.
pub fn optical_masker_output(a: &[f64; 4], masking: &OpticalLayout) -> Result<StateVector> {
    let prepared = simulate_preparation(&solve_prep_angles(a)?, None)?;
    masking.apply(&prepared)?.to_two_qubit()
}
