//! Seeded end-to-end experiments: verification fidelity and reduced purities
//! of masked probe states, correlation decoding, the concurrence sweep, and the
//! masker/walk/optics equivalence check.
//!
//! Work items (probes, φ points) run in parallel, each on its own sub-seed;
//! report assembly is sequential so outputs are byte-identical for a fixed
//! configuration.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    bootstrap_std, correlation_matrix, decode_real_state, qsv_operator, qsv_run_with_unitary, tomography_1q,
    CorrelationMatrix, QsvResult,
};
use crate::masker::{masker_matrix, u_of_real};
use crate::measure::{
    apply_depolarizing, local_outcome_probs, outcome_probs, rng_from_seed, sample_counts, sub_seed, CountsTable,
    PauliSetting, Setting,
};
use crate::optics::{
    compile_measurement, compile_schedule, optical_masker_output, phase_prep_angles, solve_prep_angles, MeasAngles,
    MeasSetting, PrepAngles,
};
use crate::qcore::{concurrence_from_purity, fidelity_with_pure, random, DensityMatrix, Pauli, StateVector, Subsystem, C64};
use crate::walk::{walk_masker_output, WalkSchedule};

pub const BOOTSTRAP_RESAMPLES: usize = 100;
pub const EQUIVALENCE_INPUTS: usize = 100;
pub const EQUIVALENCE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig3,
    Fig4,
    Fig5,
    VerifyEquivalence,
    Angles,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::VerifyEquivalence => "equiv",
            ExperimentKind::Angles => "angles",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub shots_per_setting: u64,
    pub qsv_tests: u64,
    pub noise_p: f64,
    /// Degrees.
    pub phi_grid: Vec<f64>,
    pub output_path: Option<String>,
    /// Infinite-shot mode: exact probabilities instead of sampled counts.
    pub analytic: bool,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            shots_per_setting: if experiment == ExperimentKind::Fig5 { 10_000 } else { 4000 },
            qsv_tests: 5000,
            noise_p: 0.01,
            phi_grid: (0..=6).map(|k| 15.0 * k as f64).collect(),
            output_path: None,
            analytic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::OutOfRange { name: "noise_p", value: self.noise_p });
        }
        if !self.analytic && self.shots_per_setting == 0 {
            return Err(Error::OutOfRange { name: "shots_per_setting", value: 0.0 });
        }
        if self.qsv_tests == 0 {
            return Err(Error::OutOfRange { name: "qsv_tests", value: 0.0 });
        }
        Ok(())
    }
}

/// The four real probe states `|0>`, `(|0>+|1>)/√2`, `(|0>+|1>+|2>)/√3`,
/// `(|0>+|1>+|2>+|3>)/2`; linearly independent but not orthogonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeState {
    pub index: usize,
}

impl ProbeState {
    pub fn new(index: usize) -> Result<Self> {
        if (1..=4).contains(&index) {
            Ok(Self { index })
        } else {
            Err(Error::InvalidTarget(index))
        }
    }

    pub fn all() -> [ProbeState; 4] {
        [1, 2, 3, 4].map(|index| ProbeState { index })
    }

    pub fn amplitudes(&self) -> [f64; 4] {
        let w = 1.0 / (self.index as f64).sqrt();
        [0, 1, 2, 3].map(|j| if j < self.index { w } else { 0.0 })
    }

    pub fn state(&self) -> StateVector {
        StateVector::from_real(&self.amplitudes()).expect("nonzero")
    }

    pub fn label(&self) -> String {
        format!("probe{}", self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// Symmetrized half-width of a 95% confidence interval.
    Ci95,
    /// Standard deviation.
    Std,
}

/// One estimate with its uncertainty. `N` is the number of verification
/// tests behind a `ci95` estimate, or the total number of shots behind a
/// counts-based one (zero in analytic mode). Floats are rounded to 12 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub experiment: String,
    pub target: String,
    pub estimate: f64,
    pub error: f64,
    pub error_kind: ErrorKind,
    #[serde(rename = "N")]
    pub n: u64,
    pub shots: u64,
    pub seed: u64,
    pub noise_p: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interval: Option<[f64; 2]>,
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

impl EstimationReport {
    fn new(cfg: &ExperimentConfig, target: String, estimate: f64, error: f64, error_kind: ErrorKind, n: u64) -> Self {
        Self {
            experiment: cfg.experiment.name().to_string(),
            target,
            estimate: round12(estimate),
            error: round12(error),
            error_kind,
            // Analytic mode draws no shots.
            n: if cfg.analytic && matches!(error_kind, ErrorKind::Std) { 0 } else { n },
            shots: if cfg.analytic { 0 } else { cfg.shots_per_setting },
            seed: cfg.seed,
            noise_p: round12(cfg.noise_p),
            interval: None,
        }
    }
}

fn noisy_masked(psi: &StateVector, p: f64) -> Result<DensityMatrix> {
    let masked = masker_matrix().apply(psi)?;
    apply_depolarizing(&masked.projector(), p)
}

fn local_tables(rho: &DensityMatrix, qubit: Subsystem, shots: u64, seed: u64) -> Result<[CountsTable; 3]> {
    let tables: Vec<CountsTable> = Pauli::ALL
        .iter()
        .map(|&p| {
            let probs = local_outcome_probs(rho, qubit, p)?;
            sample_counts(&probs, shots, sub_seed(seed, "local", p.index() as u64), Setting::Local(qubit, p))
        })
        .collect::<Result<_>>()?;
    Ok(tables.try_into().expect("three tables"))
}

/// Purity from exact probabilities; the linear Bloch vector is physical here.
fn exact_purity(rho: &DensityMatrix, qubit: Subsystem) -> Result<f64> {
    let freqs = [0, 1, 2].map(|k| local_outcome_probs(rho, qubit, Pauli::ALL[k]));
    let mut f = [[0.0; 2]; 3];
    for (k, r) in freqs.into_iter().enumerate() {
        f[k] = r?;
    }
    let r2: f64 = f.iter().map(|p| (p[0] - p[1]).powi(2)).sum();
    Ok((1.0 + r2.min(1.0)) / 2.0)
}

fn purity_of(tables: &[CountsTable]) -> Result<f64> {
    Ok(tomography_1q(&tables[0], &tables[1], &tables[2])?.purity)
}

// ---------------------------------------------------------------------------
// Fidelity and purities of the masked probes

#[derive(Clone, Debug, Serialize)]
pub struct Fig3Row {
    pub probe: usize,
    pub fidelity: f64,
    pub fidelity_ci_low: f64,
    pub fidelity_ci_high: f64,
    pub purity_a: f64,
    pub purity_a_std: f64,
    pub purity_b: f64,
    pub purity_b_std: f64,
    pub purity_avg: f64,
    pub purity_avg_std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig3Output {
    pub reports: Vec<EstimationReport>,
    pub rows: Vec<Fig3Row>,
}

fn fig3_probe(cfg: &ExperimentConfig, probe: ProbeState) -> Result<Fig3Row> {
    let seed = sub_seed(cfg.seed, "fig3", probe.index as u64);
    let rho = noisy_masked(&probe.state(), cfg.noise_p)?;
    let u = u_of_real(&probe.amplitudes());
    let qsv = if cfg.analytic {
        let pass = rho.expectation(&qsv_operator(&u));
        let eps = 1.5 * (1.0 - pass);
        QsvResult {
            n: cfg.qsv_tests,
            s: cfg.qsv_tests,
            p_hat: pass,
            eps_hat: eps,
            ci_low: eps,
            ci_high: eps,
            half_width: 0.0,
            confidence: 0.95,
        }
    } else {
        qsv_run_with_unitary(&rho, &u, cfg.qsv_tests, sub_seed(seed, "qsv", 0))?
    };
    let (pa, sa, pb, sb, avg_std) = if cfg.analytic {
        (exact_purity(&rho, Subsystem::A)?, 0.0, exact_purity(&rho, Subsystem::B)?, 0.0, 0.0)
    } else {
        let ta = local_tables(&rho, Subsystem::A, cfg.shots_per_setting, sub_seed(seed, "tomo", 0))?;
        let tb = local_tables(&rho, Subsystem::B, cfg.shots_per_setting, sub_seed(seed, "tomo", 1))?;
        let boot = |f: &(dyn Fn(&[CountsTable]) -> Result<f64> + Sync), t: &[CountsTable], k: u64| {
            bootstrap_std(f, t, BOOTSTRAP_RESAMPLES, sub_seed(seed, "bootstrap", k))
        };
        let all: Vec<CountsTable> = ta.iter().chain(&tb).cloned().collect();
        let avg = |t: &[CountsTable]| Ok((purity_of(&t[..3])? + purity_of(&t[3..])?) / 2.0);
        (purity_of(&ta)?, boot(&purity_of, &ta, 0)?, purity_of(&tb)?, boot(&purity_of, &tb, 1)?, boot(&avg, &all, 2)?)
    };
    Ok(Fig3Row {
        probe: probe.index,
        fidelity: qsv.fidelity(),
        fidelity_ci_low: 1.0 - qsv.ci_high,
        fidelity_ci_high: 1.0 - qsv.ci_low,
        purity_a: pa,
        purity_a_std: sa,
        purity_b: pb,
        purity_b_std: sb,
        purity_avg: (pa + pb) / 2.0,
        purity_avg_std: avg_std,
    })
}

pub fn run_fig3(cfg: &ExperimentConfig) -> Result<Fig3Output> {
    cfg.validate()?;
    let rows: Vec<Fig3Row> = ProbeState::all()
        .into_par_iter()
        .map(|p| fig3_probe(cfg, p))
        .collect::<Result<_>>()?;
    let shots_total = 3 * cfg.shots_per_setting;
    let mut reports = Vec::new();
    for row in &rows {
        let label = format!("probe{}", row.probe);
        let mut fid = EstimationReport::new(
            cfg,
            format!("{label}/fidelity"),
            row.fidelity,
            (row.fidelity - row.fidelity_ci_low).max(row.fidelity_ci_high - row.fidelity),
            ErrorKind::Ci95,
            cfg.qsv_tests,
        );
        fid.interval = Some([round12(row.fidelity_ci_low), round12(row.fidelity_ci_high)]);
        reports.push(fid);
        for (name, est, std, n) in [
            ("purity_a", row.purity_a, row.purity_a_std, shots_total),
            ("purity_b", row.purity_b, row.purity_b_std, shots_total),
            ("purity_avg", row.purity_avg, row.purity_avg_std, 2 * shots_total),
        ] {
            reports.push(EstimationReport::new(cfg, format!("{label}/{name}"), est, std, ErrorKind::Std, n));
        }
    }
    Ok(Fig3Output { reports, rows })
}

impl Fig3Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "probe,fidelity,fidelity_ci_low,fidelity_ci_high,purity_a,purity_a_std,purity_b,purity_b_std,purity_avg,purity_avg_std\n",
        );
        for r in &self.rows {
            let v = [
                r.fidelity,
                r.fidelity_ci_low,
                r.fidelity_ci_high,
                r.purity_a,
                r.purity_a_std,
                r.purity_b,
                r.purity_b_std,
                r.purity_avg,
                r.purity_avg_std,
            ];
            let cells: Vec<String> = v.iter().map(|x| fmt12(*x)).collect();
            writeln!(s, "{},{}", r.probe, cells.join(",")).expect("write to string");
        }
        s
    }
}

/// Shortest decimal form of a value rounded to 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

// ---------------------------------------------------------------------------
// Correlation decoding

#[derive(Clone, Debug, Serialize)]
pub struct Fig4Output {
    pub reports: Vec<EstimationReport>,
    pub probe: usize,
    pub correlation: [[f64; 3]; 3],
    /// Unprojected decoded matrix.
    pub rho_decoded: [[f64; 4]; 4],
    /// Nearest density matrix (real part; the imaginary part is zero).
    pub rho_projected: [[f64; 4]; 4],
}

/// Decoding of one probe; `run_fig4` uses probe 4.
pub fn run_fig4_probe(cfg: &ExperimentConfig, probe: ProbeState) -> Result<Fig4Output> {
    cfg.validate()?;
    let psi = probe.state();
    let rho = noisy_masked(&psi, cfg.noise_p)?;
    let seed = sub_seed(cfg.seed, "fig4", probe.index as u64);
    let fidelity_of = |t: &CorrelationMatrix| -> Result<f64> {
        fidelity_with_pure(&decode_real_state(t)?.rho_proj, &psi)
    };
    let (corr, error) = if cfg.analytic {
        (CorrelationMatrix::exact(&rho)?, 0.0)
    } else {
        let tables: Vec<CountsTable> = PauliSetting::all()
            .into_par_iter()
            .enumerate()
            .map(|(k, s)| sample_counts(&outcome_probs(&rho, s)?, cfg.shots_per_setting, sub_seed(seed, "pair", k as u64), Setting::Pair(s)))
            .collect::<Result<_>>()?;
        let std = bootstrap_std(
            |t: &[CountsTable]| fidelity_of(&correlation_matrix(t)?),
            &tables,
            BOOTSTRAP_RESAMPLES,
            sub_seed(seed, "bootstrap", 0),
        )?;
        (correlation_matrix(&tables)?, std)
    };
    let decoded = decode_real_state(&corr)?.against(&psi)?;
    let fidelity = decoded.fidelity_vs_input.expect("set by against");
    let r12 = |m: [[f64; 4]; 4]| m.map(|row| row.map(round12));
    let projected = decoded.rho_proj.matrix().map(|z: C64| z.re);
    let reports = vec![EstimationReport::new(
        cfg,
        format!("{}/decoding_fidelity", probe.label()),
        fidelity,
        error,
        ErrorKind::Std,
        9 * cfg.shots_per_setting,
    )];
    Ok(Fig4Output {
        reports,
        probe: probe.index,
        correlation: corr.t.map(|row| row.map(round12)),
        rho_decoded: r12(decoded.rho_hat),
        rho_projected: r12(std::array::from_fn(|i| std::array::from_fn(|j| projected[(i, j)]))),
    })
}

pub fn run_fig4(cfg: &ExperimentConfig) -> Result<Fig4Output> {
    run_fig4_probe(cfg, ProbeState { index: 4 })
}

impl Fig4Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("setting,correlator\n");
        for p in PauliSetting::all() {
            let v = self.correlation[p.first.index()][p.second.index()];
            writeln!(s, "{p},{}", fmt12(v)).expect("write to string");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Concurrence versus imaginarity

#[derive(Clone, Debug, Serialize)]
pub struct Fig5Row {
    pub phi_deg: f64,
    pub concurrence_est: f64,
    pub concurrence_std: f64,
    pub theory_cos: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig5Output {
    pub reports: Vec<EstimationReport>,
    pub rows: Vec<Fig5Row>,
}

/// `(|0> + e^{iφ}|1>)/√2` on the ququart.
pub fn phase_probe(phi_rad: f64) -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_vector_unchecked(vec![C64::from(s), C64::from_polar(s, phi_rad), C64::from(0.0), C64::from(0.0)].into())
}

fn concurrence_of(tables: &[CountsTable]) -> Result<f64> {
    Ok(concurrence_from_purity(purity_of(tables)?))
}

fn fig5_point(cfg: &ExperimentConfig, index: usize, phi_deg: f64) -> Result<Fig5Row> {
    let rho = noisy_masked(&phase_probe(phi_deg.to_radians()), cfg.noise_p)?;
    let seed = sub_seed(cfg.seed, "fig5", index as u64);
    let (est, std) = if cfg.analytic {
        (concurrence_from_purity(exact_purity(&rho, Subsystem::A)?), 0.0)
    } else {
        let tables = local_tables(&rho, Subsystem::A, cfg.shots_per_setting, seed)?;
        let std = bootstrap_std(concurrence_of, &tables, BOOTSTRAP_RESAMPLES, sub_seed(seed, "bootstrap", 0))?;
        (concurrence_of(&tables)?, std)
    };
    Ok(Fig5Row { phi_deg, concurrence_est: est, concurrence_std: std, theory_cos: phi_deg.to_radians().cos() })
}

pub fn run_fig5(cfg: &ExperimentConfig) -> Result<Fig5Output> {
    cfg.validate()?;
    let rows: Vec<Fig5Row> = cfg
        .phi_grid
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| fig5_point(cfg, i, phi))
        .collect::<Result<_>>()?;
    let reports = rows
        .iter()
        .map(|r| {
            EstimationReport::new(
                cfg,
                format!("phi={}/concurrence", fmt12(r.phi_deg)),
                r.concurrence_est,
                r.concurrence_std,
                ErrorKind::Std,
                3 * cfg.shots_per_setting,
            )
        })
        .collect();
    Ok(Fig5Output { reports, rows })
}

impl Fig5Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phi_deg,concurrence_est,concurrence_std,theory_cos\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{}",
                fmt12(r.phi_deg),
                fmt12(r.concurrence_est),
                fmt12(r.concurrence_std),
                fmt12(r.theory_cos)
            )
            .expect("write to string");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Equivalence of the three masker realizations

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceCase {
    pub label: String,
    pub masker_walk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masker_optics: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk_optics: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub experiment: String,
    pub schedule: String,
    pub inputs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub max_infidelity_masker_walk: f64,
    pub max_infidelity_masker_optics: f64,
    pub max_infidelity_walk_optics: f64,
    pub max_infidelity: f64,
    pub passed: bool,
    pub cases: Vec<EquivalenceCase>,
}

fn infidelity(a: &StateVector, b: &StateVector) -> f64 {
    (1.0 - a.overlap(b)).max(0.0)
}

/// Compares masker, walk and optical pipelines on `EQUIVALENCE_INPUTS` random
/// real inputs plus two fixed cases. Infidelities are `1 − |<a|b>|²`.
pub fn run_equivalence(cfg: &ExperimentConfig, schedule: &WalkSchedule) -> Result<EquivalenceReport> {
    let layout = compile_schedule(schedule, cfg.seed)?;
    let masker = masker_matrix();
    let mut rng = rng_from_seed(sub_seed(cfg.seed, "equiv", 0));
    let inputs: Vec<Vec<f64>> = (0..EQUIVALENCE_INPUTS).map(|_| random::real_unit_vector(4, &mut rng)).collect();
    let triple = |a: &[f64]| -> Result<(f64, f64, f64)> {
        let psi = StateVector::from_real(a)?;
        let m = masker.apply(&psi)?;
        let w = walk_masker_output(&psi, schedule)?;
        let o = optical_masker_output(&[a[0], a[1], a[2], a[3]], &layout)?;
        Ok((infidelity(&m, &w), infidelity(&m, &o), infidelity(&w, &o)))
    };
    let results: Vec<(f64, f64, f64)> = inputs.par_iter().map(|a| triple(a)).collect::<Result<_>>()?;
    let max = |f: fn(&(f64, f64, f64)) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let (mw, mo, wo) = (max(|r| r.0), max(|r| r.1), max(|r| r.2));

    let uniform = triple(&[0.5; 4])?;
    let complex_in = StateVector::normalized(vec![C64::from(1.0), C64::i(), C64::from(0.0), C64::from(0.0)])?;
    let complex_mw = infidelity(&masker.apply(&complex_in)?, &walk_masker_output(&complex_in, schedule)?);
    let cases = vec![
        EquivalenceCase {
            label: "uniform real".into(),
            masker_walk: uniform.0,
            masker_optics: Some(uniform.1),
            walk_optics: Some(uniform.2),
        },
        EquivalenceCase { label: "(|0>+i|1>)/sqrt2".into(), masker_walk: complex_mw, masker_optics: None, walk_optics: None },
    ];
    let max_all = [mw, mo, wo, uniform.0, uniform.1, uniform.2, complex_mw].into_iter().fold(0.0, f64::max);
    Ok(EquivalenceReport {
        experiment: ExperimentKind::VerifyEquivalence.name().into(),
        schedule: schedule.name.clone(),
        inputs: EQUIVALENCE_INPUTS,
        seed: cfg.seed,
        threshold: EQUIVALENCE_THRESHOLD,
        max_infidelity_masker_walk: mw,
        max_infidelity_masker_optics: mo,
        max_infidelity_walk_optics: wo,
        max_infidelity: max_all,
        passed: max_all < EQUIVALENCE_THRESHOLD,
        cases,
    })
}

// ---------------------------------------------------------------------------
// Angle reports

#[derive(Clone, Debug, Serialize)]
pub struct AnglesReport {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preparation: Option<PrepAngles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_preparation: Option<PrepAngles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setting: Option<MeasSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasAngles>,
}

/// Waveplate angles (degrees) for any combination of a real preparation
/// target, a complex-phase preparation and a measurement setting.
pub fn run_angles(
    amplitudes: Option<[f64; 4]>,
    phi_deg: Option<f64>,
    setting: Option<MeasSetting>,
    seed: u64,
) -> Result<AnglesReport> {
    let r6 = |x: f64| (x * 1e6).round() / 1e6;
    let prep = amplitudes.map(|a| solve_prep_angles(&a)).transpose()?;
    let phase = phi_deg.map(|p| phase_prep_angles(p.to_radians()));
    let meas = setting.map(|s| compile_measurement(&s, seed)).transpose()?;
    let round_prep = |p: PrepAngles| PrepAngles { h1: r6(p.h1), h2: r6(p.h2), h3: r6(p.h3) };
    Ok(AnglesReport {
        experiment: ExperimentKind::Angles.name().into(),
        amplitudes,
        preparation: prep.map(round_prep),
        phi_deg,
        phase_preparation: phase.map(|(p, _)| round_prep(p)),
        q1: phase.map(|(_, q)| q),
        setting,
        measurement: meas.map(|m| MeasAngles { q2: r6(m.q2), h4: r6(m.h4), q3: r6(m.q3), h5: r6(m.h5) }),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
