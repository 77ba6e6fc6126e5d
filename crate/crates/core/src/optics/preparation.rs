//! State preparation: three HWPs and two beam displacers turn `|−3, H>` into
//! `(a0|−3> + a1|−1> + a2|1> + a3|3>) ⊗ |V>`. An optional QWP on path −3
//! makes the relative phase between the first two modes complex.

use serde::Serialize;

use super::{fold_degrees, OpticalElement, OpticalLayout, PathPolState, PathScope, Pol};
use crate::error::{Error, Result};

/// Path the photon enters on.
pub const PREP_INPUT_PATH: i32 = -3;

/// Half-wave plate angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrepAngles {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl PrepAngles {
    /// Closed-form amplitudes
    /// `(cos2h1 cos2h2, cos2h1 sin2h2, sin2h1 sin2h3, −sin2h1 cos2h3)`.
    pub fn amplitudes(&self) -> [f64; 4] {
        let (s1, c1) = (2.0 * self.h1).to_radians().sin_cos();
        let (s2, c2) = (2.0 * self.h2).to_radians().sin_cos();
        let (s3, c3) = (2.0 * self.h3).to_radians().sin_cos();
        [c1 * c2, c1 * s2, s1 * s3, -s1 * c3]
    }
}

const DEGENERATE: f64 = 1e-12;

/// Solves for the HWP angles producing the real amplitudes `a`, with
/// `h1 ∈ [0°, 45°]` and the other two folded into `[0°, 180°)`. An angle
/// whose branch carries no amplitude is set to 0°.
pub fn solve_prep_angles(a: &[f64; 4]) -> Result<PrepAngles> {
    let norm_sq: f64 = a.iter().map(|x| x * x).sum();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized { norm_sq });
    }
    let n01 = a[0].hypot(a[1]);
    let n23 = a[2].hypot(a[3]);
    let half_deg = |y: f64, x: f64| fold_degrees(y.atan2(x).to_degrees() / 2.0);
    Ok(PrepAngles {
        h1: n23.atan2(n01).to_degrees() / 2.0,
        h2: if n01 < DEGENERATE { 0.0 } else { half_deg(a[1], a[0]) },
        h3: if n23 < DEGENERATE { 0.0 } else { half_deg(a[2], -a[3]) },
    })
}

/// Angles for `(|−3> + e^{iφ}|−1>) ⊗ |V>/√2`: returns the HWP angles and the
/// QWP angle (45°) to insert on path −3.
pub fn phase_prep_angles(phi_rad: f64) -> (PrepAngles, f64) {
    let h2 = fold_degrees(phi_rad.to_degrees() / 4.0 + 22.5);
    (PrepAngles { h1: 0.0, h2, h3: 0.0 }, 45.0)
}

pub fn preparation_layout(angles: &PrepAngles, q1_deg: Option<f64>) -> OpticalLayout {
    let mut layout = OpticalLayout::new(vec![
        OpticalElement::pbs(PathScope::paths(&[PREP_INPUT_PATH])),
        OpticalElement::hwp(angles.h1, PathScope::paths(&[-3])),
        OpticalElement::bd(0, 4, PathScope::All),
        OpticalElement::hwp(angles.h2, PathScope::paths(&[-3])),
        OpticalElement::hwp(angles.h3, PathScope::paths(&[1])),
    ]);
    if let Some(q) = q1_deg {
        layout.push(OpticalElement::qwp(q, PathScope::paths(&[-3])));
    }
    layout.push(OpticalElement::bd(0, 2, PathScope::All));
    layout.push(OpticalElement::xplate(PathScope::paths(&[-3, 1])));
    layout
}

/// Runs the preparation stage on `|−3, H>`.
pub fn simulate_preparation(angles: &PrepAngles, q1_deg: Option<f64>) -> Result<PathPolState> {
    preparation_layout(angles, q1_deg).apply(&PathPolState::basis(PREP_INPUT_PATH, Pol::H))
}
