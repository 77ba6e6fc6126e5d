//! Jones-calculus model of the path-polarization optical setup.
//!
//! A photon state is a sparse map `(path, polarization) -> amplitude`.
//! Waveplates act on the polarization spinor of the paths they cover; beam
//! displacers shift each polarization by a fixed number of path units.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::qcore::{c, cmat, CMatrix, StateVector, C64, EPS_EXACT, EPS_NUMERIC, I, ONE, ZERO};

mod masking;
mod measurement;
mod nelder_mead;
mod preparation;

pub use masking::{compile_coin, compile_schedule, masking_layout, optical_masker_output, CompiledCoin};
pub use measurement::{
    compile_measurement, detector_distribution, measure_product_basis, measurement_layout, MeasAngles, MeasSetting,
    DETECTORS,
};
pub use nelder_mead::{minimize, minimize_with_restarts, Minimum};
pub use preparation::{
    phase_prep_angles, preparation_layout, simulate_preparation, solve_prep_angles, PrepAngles, PREP_INPUT_PATH,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    fn from_index(i: usize) -> Pol {
        if i == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

/// Half-wave plate with fast axis at `theta` degrees:
/// `[[cos2θ, sin2θ], [sin2θ, -cos2θ]]` in the (H, V) basis.
pub fn hwp_jones(theta_deg: f64) -> CMatrix {
    let t = 2.0 * theta_deg.to_radians();
    cmat(2, &[c(t.cos(), 0.0), c(t.sin(), 0.0), c(t.sin(), 0.0), c(-t.cos(), 0.0)])
}

/// Quarter-wave plate with fast axis at `theta` degrees:
/// `(1/√2)[[1 - i·cos2θ, -i·sin2θ], [-i·sin2θ, 1 + i·cos2θ]]`.
///
/// The sign of the imaginary part is pinned so that H2 followed by Q1 at 45°
/// with `h2 = φ/4 + 22.5°` yields `(|H> + e^{iφ}|V>)/√2` up to a global phase.
pub fn qwp_jones(theta_deg: f64) -> CMatrix {
    let t = 2.0 * theta_deg.to_radians();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    cmat(
        2,
        &[
            (ONE - I * t.cos()) * s,
            -I * t.sin() * s,
            -I * t.sin() * s,
            (ONE + I * t.cos()) * s,
        ],
    )
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathPolState {
    amplitudes: BTreeMap<(i32, Pol), C64>,
}

impl PathPolState {
    pub fn new(entries: impl IntoIterator<Item = (i32, Pol, C64)>) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        for (p, pol, a) in entries {
            *amplitudes.entry((p, pol)).or_insert(ZERO) += a;
        }
        amplitudes.retain(|_, a| *a != ZERO);
        let state = Self { amplitudes };
        let norm_sq = state.norm_squared();
        if (norm_sq - 1.0).abs() > EPS_NUMERIC {
            return Err(Error::Unnormalized { norm_sq });
        }
        Ok(state)
    }

    pub fn basis(path: i32, pol: Pol) -> Self {
        Self { amplitudes: BTreeMap::from([((path, pol), ONE)]) }
    }

    pub fn amplitude(&self, path: i32, pol: Pol) -> C64 {
        self.amplitudes.get(&(path, pol)).copied().unwrap_or(ZERO)
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Pol, C64)> + '_ {
        self.amplitudes.iter().map(|(&(p, pol), &a)| (p, pol, a))
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &PathPolState) -> f64 {
        self.amplitudes
            .iter()
            .map(|(k, a)| a.conj() * other.amplitudes.get(k).copied().unwrap_or(ZERO))
            .sum::<C64>()
            .norm_sqr()
    }

    /// Embeds a two-qubit state: path qubit `|0> -> path +1`, `|1> -> path -1`;
    /// polarization qubit `|0> -> H`, `|1> -> V`.
    pub fn from_two_qubit(psi: &StateVector) -> Result<Self> {
        if psi.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: psi.dim() });
        }
        let entries = (0..4).map(|k| {
            let path = if k / 2 == 0 { 1 } else { -1 };
            (path, Pol::from_index(k % 2), psi.amplitudes()[k])
        });
        Self::new(entries)
    }

    /// Inverse of [`PathPolState::from_two_qubit`]; amplitude outside paths ±1 is an error.
    pub fn to_two_qubit(&self) -> Result<StateVector> {
        let mut amps = vec![ZERO; 4];
        for (path, pol, a) in self.iter() {
            let qubit = match path {
                1 => 0,
                -1 => 1,
                _ => {
                    if a.norm() > EPS_EXACT {
                        return Err(Error::Extraction { position: path, amplitude: a.norm() });
                    }
                    continue;
                }
            };
            amps[2 * qubit + pol.index()] = a;
        }
        StateVector::new(amps)
    }
}

/// Which paths an element covers.
#[derive(Clone, Debug, PartialEq)]
pub enum PathScope {
    All,
    Paths(Vec<i32>),
}

impl PathScope {
    pub fn paths(paths: &[i32]) -> Self {
        PathScope::Paths(paths.to_vec())
    }

    pub fn contains(&self, path: i32) -> bool {
        match self {
            PathScope::All => true,
            PathScope::Paths(p) => p.contains(&path),
        }
    }

    fn to_field(&self) -> String {
        match self {
            PathScope::All => "*".to_string(),
            PathScope::Paths(p) => p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        }
    }

    fn parse(field: &str) -> Result<Self> {
        if field == "*" {
            return Ok(PathScope::All);
        }
        field
            .split(',')
            .map(|s| s.parse::<i32>().map_err(|e| Error::Parse(format!("path '{s}': {e}"))))
            .collect::<Result<Vec<_>>>()
            .map(PathScope::Paths)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Hwp,
    Qwp,
    Bd,
    Pbs,
    /// Half-wave plate fixed at 45°, i.e. a polarization flip.
    Xplate,
}

impl ElementKind {
    fn label(self) -> &'static str {
        match self {
            ElementKind::Hwp => "HWP",
            ElementKind::Qwp => "QWP",
            ElementKind::Bd => "BD",
            ElementKind::Pbs => "PBS",
            ElementKind::Xplate => "XPLATE",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "HWP" => ElementKind::Hwp,
            "QWP" => ElementKind::Qwp,
            "BD" => ElementKind::Bd,
            "PBS" => ElementKind::Pbs,
            "XPLATE" => ElementKind::Xplate,
            other => return Err(Error::Parse(format!("unknown element kind '{other}'"))),
        })
    }
}

/// One optical element. `angle_deg` is used by waveplates; `h_shift` and
/// `v_shift` (path units) by beam displacers. PBS pre-filters and the
/// compensation plate are ideal and act as the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalElement {
    pub kind: ElementKind,
    pub angle_deg: f64,
    pub paths: PathScope,
    pub h_shift: i32,
    pub v_shift: i32,
}

impl OpticalElement {
    pub fn hwp(angle_deg: f64, paths: PathScope) -> Self {
        Self { kind: ElementKind::Hwp, angle_deg, paths, h_shift: 0, v_shift: 0 }
    }

    pub fn qwp(angle_deg: f64, paths: PathScope) -> Self {
        Self { kind: ElementKind::Qwp, angle_deg, paths, h_shift: 0, v_shift: 0 }
    }

    pub fn xplate(paths: PathScope) -> Self {
        Self { kind: ElementKind::Xplate, angle_deg: 45.0, paths, h_shift: 0, v_shift: 0 }
    }

    pub fn pbs(paths: PathScope) -> Self {
        Self { kind: ElementKind::Pbs, angle_deg: 0.0, paths, h_shift: 0, v_shift: 0 }
    }

    /// Beam displacer: H moves by `h_shift` paths, V by `v_shift`.
    pub fn bd(h_shift: i32, v_shift: i32, paths: PathScope) -> Self {
        Self { kind: ElementKind::Bd, angle_deg: 0.0, paths, h_shift, v_shift }
    }

    /// Jones matrix for polarization elements; `None` for routing elements.
    pub fn jones(&self) -> Option<CMatrix> {
        match self.kind {
            ElementKind::Hwp => Some(hwp_jones(self.angle_deg)),
            ElementKind::Qwp => Some(qwp_jones(self.angle_deg)),
            ElementKind::Xplate => Some(hwp_jones(45.0)),
            ElementKind::Pbs | ElementKind::Bd => None,
        }
    }

    pub fn apply(&self, state: &PathPolState) -> Result<PathPolState> {
        match self.kind {
            ElementKind::Pbs => Ok(state.clone()),
            ElementKind::Bd => self.route(state),
            _ => {
                let m = self.jones().expect("waveplate");
                let mut out = BTreeMap::new();
                let mut paths: Vec<i32> = state.amplitudes.keys().map(|&(p, _)| p).collect();
                paths.dedup();
                for p in paths {
                    let spinor = [state.amplitude(p, Pol::H), state.amplitude(p, Pol::V)];
                    let new = if self.paths.contains(p) {
                        [
                            m[(0, 0)] * spinor[0] + m[(0, 1)] * spinor[1],
                            m[(1, 0)] * spinor[0] + m[(1, 1)] * spinor[1],
                        ]
                    } else {
                        spinor
                    };
                    for (k, a) in new.into_iter().enumerate() {
                        if a != ZERO {
                            out.insert((p, Pol::from_index(k)), a);
                        }
                    }
                }
                Ok(PathPolState { amplitudes: out })
            }
        }
    }

    fn route(&self, state: &PathPolState) -> Result<PathPolState> {
        let mut out = BTreeMap::new();
        for (&(p, pol), &a) in &state.amplitudes {
            let target = if self.paths.contains(p) {
                p + if pol == Pol::H { self.h_shift } else { self.v_shift }
            } else {
                p
            };
            if out.insert((target, pol), a).is_some() {
                return Err(Error::Routing { path: target });
            }
        }
        Ok(PathPolState { amplitudes: out })
    }
}

/// Ordered element list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OpticalLayout {
    pub elements: Vec<OpticalElement>,
}

const LAYOUT_HEADER: &str = "# kind angle_deg paths h_shift v_shift";

impl OpticalLayout {
    pub fn new(elements: Vec<OpticalElement>) -> Self {
        Self { elements }
    }

    pub fn push(&mut self, e: OpticalElement) {
        self.elements.push(e);
    }

    pub fn extend(&mut self, other: OpticalLayout) {
        self.elements.extend(other.elements);
    }

    pub fn apply(&self, state: &PathPolState) -> Result<PathPolState> {
        self.elements.iter().try_fold(state.clone(), |s, e| e.apply(&s))
    }

    /// One element per line, angles in degrees with six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::from(LAYOUT_HEADER);
        out.push('\n');
        for e in &self.elements {
            writeln!(
                out,
                "{} {:.6} {} {} {}",
                e.kind.label(),
                e.angle_deg,
                e.paths.to_field(),
                e.h_shift,
                e.v_shift
            )
            .expect("write to string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut elements = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 fields, got {}", lineno + 1, fields.len())));
            }
            let num = |s: &str| s.parse::<i32>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)));
            elements.push(OpticalElement {
                kind: ElementKind::parse(fields[0])?,
                angle_deg: fields[1]
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: angle: {e}", lineno + 1)))?,
                paths: PathScope::parse(fields[2])?,
                h_shift: num(fields[3])?,
                v_shift: num(fields[4])?,
            });
        }
        Ok(Self { elements })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Folds an angle in degrees into `[0, 180)`.
pub fn fold_degrees(deg: f64) -> f64 {
    let f = deg.rem_euclid(180.0);
    if f >= 180.0 - 1e-12 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_abs_diff, unitarity_deviation};
    use crate::walk::{coin_x, coin_z};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn waveplates_are_unitary() {
        for deg in [0.0, 12.3, 22.5, 45.0, 67.5, 90.0, 133.0] {
            assert!(unitarity_deviation(&hwp_jones(deg)) < EPS_EXACT);
            assert!(unitarity_deviation(&qwp_jones(deg)) < EPS_EXACT);
        }
    }

    #[test]
    fn hwp_special_angles() {
        assert!(max_abs_diff(&hwp_jones(45.0), &coin_x()) < EPS_EXACT);
        assert!(max_abs_diff(&hwp_jones(0.0), &coin_z()) < EPS_EXACT);
        let out = &hwp_jones(22.5) * nalgebra::DVector::from_vec(vec![ONE, ZERO]);
        assert!((out[0] - C64::from(FRAC_1_SQRT_2)).norm() < EPS_EXACT);
        assert!((out[1] - C64::from(FRAC_1_SQRT_2)).norm() < EPS_EXACT);
    }

    #[test]
    fn qwp_at_zero_does_not_mix() {
        let q = qwp_jones(0.0);
        assert!(q[(0, 1)].norm() < EPS_EXACT && q[(1, 0)].norm() < EPS_EXACT);
    }

    #[test]
    fn bd_routing_and_collision() {
        let st = PathPolState::new([(0, Pol::H, c(0.6, 0.0)), (0, Pol::V, c(0.8, 0.0))]).unwrap();
        let out = OpticalElement::bd(0, 2, PathScope::All).apply(&st).unwrap();
        assert_eq!(out.amplitude(0, Pol::H), c(0.6, 0.0));
        assert_eq!(out.amplitude(2, Pol::V), c(0.8, 0.0));

        let st = PathPolState::new([(0, Pol::V, c(0.6, 0.0)), (2, Pol::V, c(0.8, 0.0))]).unwrap();
        let partial = OpticalElement::bd(0, 2, PathScope::paths(&[0]));
        assert!(matches!(partial.apply(&st), Err(Error::Routing { path: 2 })));
    }

    #[test]
    fn two_qubit_embedding_round_trip() {
        let psi = StateVector::normalized(vec![c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.5), c(0.7, -0.1)]).unwrap();
        let st = PathPolState::from_two_qubit(&psi).unwrap();
        assert_eq!(st.amplitude(-1, Pol::H), psi.amplitudes()[2]);
        let back = st.to_two_qubit().unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).camax() < EPS_EXACT);
    }

    #[test]
    fn layout_text_round_trip() {
        let layout = OpticalLayout::new(vec![
            OpticalElement::hwp(22.5, PathScope::paths(&[-3])),
            OpticalElement::bd(-1, 1, PathScope::All),
            OpticalElement::qwp(12.345678, PathScope::paths(&[1, -1])),
            OpticalElement::xplate(PathScope::paths(&[-3, 1])),
            OpticalElement::pbs(PathScope::All),
        ]);
        let text = layout.to_text();
        assert!(text.contains("HWP 22.500000 -3 0 0"));
        assert!(text.contains("BD 0.000000 * -1 1"));
        let back = OpticalLayout::from_text(&text).unwrap();
        assert_eq!(back, layout);
        assert!(OpticalLayout::from_text("LENS 1.0 * 0 0").is_err());
        assert!(OpticalLayout::from_text("HWP 1.0 *").is_err());
    }

    #[test]
    fn folding() {
        assert_eq!(fold_degrees(190.0), 10.0);
        assert_eq!(fold_degrees(-45.0), 135.0);
        assert_eq!(fold_degrees(180.0), 0.0);
    }
}
