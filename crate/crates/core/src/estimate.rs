//! Estimators for masked states: verification-based fidelity, single-qubit
//! maximum-likelihood tomography with Poisson-bootstrap errors, and decoding of
//! the real input state from the two-qubit correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::masker::build_hr_d4;
use crate::measure::{correlator_estimate, poisson_resample, rng_from_seed, sub_seed, CountsTable, PauliSetting, Setting};
use crate::qcore::{identity, kron, trace_distance, CMatrix, DensityMatrix, Pauli, StateVector, C64};

// ---------------------------------------------------------------------------
// Verification

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QsvResult {
    pub n: u64,
    pub s: u64,
    pub p_hat: f64,
    pub eps_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `max(eps_hat − ci_low, ci_high − eps_hat)`.
    pub half_width: f64,
    pub confidence: f64,
}

impl QsvResult {
    pub fn from_counts(s: u64, n: u64, confidence: f64) -> Result<Self> {
        let (ci_low, ci_high) = agresti_coull(s, n, confidence)?;
        let p_hat = s as f64 / n as f64;
        let eps_hat = 1.5 * (1.0 - p_hat);
        Ok(Self {
            n,
            s,
            p_hat,
            eps_hat,
            ci_low,
            ci_high,
            half_width: (eps_hat - ci_low).max(ci_high - eps_hat),
            confidence,
        })
    }

    pub fn fidelity(&self) -> f64 {
        1.0 - self.eps_hat
    }
}

fn plus_projector(op: &CMatrix) -> CMatrix {
    (identity(4) + op) * C64::from(0.5)
}

/// The three test projectors `P⁺` of `X'⊗X`, `−Y'⊗Y` and `Z'⊗Z` with
/// `σ' = UσU†`; their common +1 eigenvector is `(U ⊗ 1)|Φ>`.
pub fn qsv_tests(u: &CMatrix) -> [CMatrix; 3] {
    let rot = |p: Pauli| u * p.matrix() * u.adjoint();
    [
        plus_projector(&kron(&rot(Pauli::X), &Pauli::X.matrix())),
        plus_projector(&(kron(&rot(Pauli::Y), &Pauli::Y.matrix()) * C64::from(-1.0))),
        plus_projector(&kron(&rot(Pauli::Z), &Pauli::Z.matrix())),
    ]
}

/// Verification operator `Ω`, the uniform mixture of the three tests.
pub fn qsv_operator(u: &CMatrix) -> CMatrix {
    let [a, b, c] = qsv_tests(u);
    (a + b + c) * C64::from(1.0 / 3.0)
}

fn hr_unitary(target_index: usize) -> Result<CMatrix> {
    if target_index > 3 {
        return Err(Error::InvalidTarget(target_index));
    }
    Ok(build_hr_d4().with_identity()[target_index].clone())
}

/// `n` verification rounds on copies of `source` against `(U_j ⊗ 1)|Φ>`,
/// `U_j` the `target_index`-th Hurwitz-Radon unitary (`U_0 = 1`).
pub fn qsv_run(source: &DensityMatrix, target_index: usize, n: u64, seed: u64) -> Result<QsvResult> {
    qsv_run_with_unitary(source, &hr_unitary(target_index)?, n, seed)
}

/// As [`qsv_run`] with an arbitrary local unitary defining the target.
pub fn qsv_run_with_unitary(source: &DensityMatrix, u: &CMatrix, n: u64, seed: u64) -> Result<QsvResult> {
    if n == 0 {
        return Err(Error::OutOfRange { name: "N", value: 0.0 });
    }
    if source.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: source.dim() });
    }
    let pass = qsv_tests(u).map(|p| source.expectation(&p).clamp(0.0, 1.0));
    let mut rng = rng_from_seed(seed);
    let s = (0..n)
        .filter(|_| {
            let test = rng.random_range(0..3);
            rng.random_bool(pass[test])
        })
        .count() as u64;
    QsvResult::from_counts(s, n, 0.95)
}

/// Two-sided standard-normal quantile for `confidence`.
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Agresti–Coull interval for the pass probability, mapped to the infidelity
/// scale `ε = (3/2)(1 − p)` and clipped to `[0, 1.5]`.
pub fn agresti_coull(s: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || s > n {
        return Err(Error::OutOfRange { name: "S/N", value: s as f64 / n as f64 });
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::OutOfRange { name: "confidence", value: confidence });
    }
    let kappa = normal_quantile(confidence);
    let n_t = n as f64 + kappa * kappa;
    let p_t = (s as f64 + kappa * kappa / 2.0) / n_t;
    let half = kappa * (p_t * (1.0 - p_t) / n_t).sqrt();
    let clip = |x: f64| x.clamp(0.0, 1.5);
    Ok((clip(1.5 * (1.0 - p_t - half)), clip(1.5 * (1.0 - p_t + half))))
}

// ---------------------------------------------------------------------------
// Tomography

const MLE_TOL: f64 = 1e-10;
const MLE_MAX_ITERS: usize = 5000;

#[derive(Clone, Debug, Serialize)]
pub struct TomoResult {
    /// Bloch vector of the maximum-likelihood state.
    pub bloch: [f64; 3],
    /// Linear-inversion Bloch vector (may leave the unit ball).
    pub linear_bloch: [f64; 3],
    #[serde(skip)]
    pub rho_hat: DensityMatrix,
    pub purity: f64,
    pub std_purity: Option<f64>,
    pub iterations: usize,
}

fn bloch_of(rho: &CMatrix) -> [f64; 3] {
    Pauli::ALL.map(|p| (rho * p.matrix()).trace().re)
}

/// `(I + r·σ)/2`.
pub fn qubit_from_bloch(r: &[f64; 3]) -> CMatrix {
    Pauli::ALL
        .iter()
        .fold(identity(2), |acc, p| acc + p.matrix() * C64::from(r[p.index()]))
        * C64::from(0.5)
}

/// RρR maximum likelihood from `(+, −)` frequencies in the X, Y and Z bases.
pub fn tomography_from_frequencies(freqs: &[[f64; 2]; 3]) -> Result<TomoResult> {
    let linear_bloch = [0, 1, 2].map(|k| freqs[k][0] - freqs[k][1]);
    let projectors: Vec<(CMatrix, f64)> = Pauli::ALL
        .iter()
        .flat_map(|&p| {
            [(1.0, 0), (-1.0, 1)].map(|(s, o)| {
                ((identity(2) + p.matrix() * C64::from(s)) * C64::from(0.5), freqs[p.index()][o])
            })
        })
        .collect();
    let mut rho = identity(2) * C64::from(0.5);
    for it in 1..=MLE_MAX_ITERS {
        let r = projectors.iter().fold(CMatrix::zeros(2, 2), |acc, (pi, f)| {
            if *f == 0.0 {
                return acc;
            }
            let p = (&rho * pi).trace().re;
            acc + pi * C64::from(f / p)
        });
        let mut next = &r * &rho * &r;
        let tr = next.trace();
        next /= tr;
        next = (&next + next.adjoint()) * C64::from(0.5);
        let step = crate::qcore::trace_norm_hermitian(&(&next - &rho)) / 2.0;
        rho = next;
        if step < MLE_TOL {
            let bloch = bloch_of(&rho);
            let purity = (1.0 + bloch.iter().map(|x| x * x).sum::<f64>()) / 2.0;
            return Ok(TomoResult {
                bloch,
                linear_bloch,
                rho_hat: DensityMatrix::new(rho)?,
                purity,
                std_purity: None,
                iterations: it,
            });
        }
        if it == MLE_MAX_ITERS {
            return Err(Error::NoConvergence { what: "maximum-likelihood tomography", residual: step });
        }
    }
    unreachable!()
}

fn two_outcome(table: &CountsTable) -> Result<[f64; 2]> {
    if table.counts.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: table.counts.len() });
    }
    if table.shots == 0 {
        return Err(Error::InvalidDistribution(format!("empty table for {}", table.setting)));
    }
    let f = table.frequencies();
    Ok([f[0], f[1]])
}

/// Single-qubit tomography from two-outcome tables in the X, Y and Z bases.
pub fn tomography_1q(x: &CountsTable, y: &CountsTable, z: &CountsTable) -> Result<TomoResult> {
    tomography_from_frequencies(&[two_outcome(x)?, two_outcome(y)?, two_outcome(z)?])
}

/// Tomography plus the bootstrap standard deviation of the purity.
pub fn tomography_with_bootstrap(tables: &[CountsTable; 3], resamples: usize, seed: u64) -> Result<TomoResult> {
    let mut result = tomography_1q(&tables[0], &tables[1], &tables[2])?;
    let std = bootstrap_std(
        |t: &[CountsTable]| tomography_1q(&t[0], &t[1], &t[2]).map(|r| r.purity),
        tables,
        resamples,
        seed,
    )?;
    result.std_purity = Some(std);
    Ok(result)
}

/// Sample standard deviation (`n − 1`) of `quantity` over Poisson resamples
/// of every table. Resample `r` of table `i` uses `sub_seed(seed, "bootstrap", r·len + i)`.
pub fn bootstrap_std<F>(quantity: F, tables: &[CountsTable], resamples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[CountsTable]) -> Result<f64> + Sync,
{
    if resamples < 2 {
        return Err(Error::OutOfRange { name: "resamples", value: resamples as f64 });
    }
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let resampled: Vec<CountsTable> = tables
                .iter()
                .enumerate()
                .map(|(i, t)| poisson_resample(t, sub_seed(seed, "bootstrap", (r * tables.len() + i) as u64)))
                .collect();
            quantity(&resampled)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(var.sqrt())
}

// ---------------------------------------------------------------------------
// Correlation decoding

/// `T[j][k] = <σ_j ⊗ σ_k>`, indices in x, y, z order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub t: [[f64; 3]; 3],
}

impl CorrelationMatrix {
    pub fn exact(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
        }
        let mut t = [[0.0; 3]; 3];
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                t[a.index()][b.index()] = rho.expectation(&kron(&a.matrix(), &b.matrix()));
            }
        }
        Ok(Self { t })
    }
}

/// Builds `T` from the nine Pauli-pair tables (any order).
pub fn correlation_matrix(tables: &[CountsTable]) -> Result<CorrelationMatrix> {
    let mut t = [[0.0; 3]; 3];
    for setting in PauliSetting::all() {
        let table = tables
            .iter()
            .find(|tb| tb.setting == Setting::Pair(setting))
            .ok_or_else(|| Error::MissingSetting(setting.to_string()))?;
        t[setting.first.index()][setting.second.index()] = correlator_estimate(table);
    }
    Ok(CorrelationMatrix { t })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodeResult {
    /// Real symmetric estimate straight from the correlations.
    pub rho_hat: [[f64; 4]; 4],
    #[serde(skip)]
    pub rho_proj: DensityMatrix,
    pub fidelity_vs_input: Option<f64>,
}

impl DecodeResult {
    /// Sets `fidelity_vs_input = <ψ|ρ_proj|ψ>`.
    pub fn against(mut self, input: &StateVector) -> Result<Self> {
        self.fidelity_vs_input = Some(crate::qcore::fidelity_with_pure(&self.rho_proj, input)?);
        Ok(self)
    }
}

/// Linear decoding of the real ququart state behind a masked output.
pub fn decode_linear(corr: &CorrelationMatrix) -> [[f64; 4]; 4] {
    // 1-based aliases T_jk.
    let t = |j: usize, k: usize| corr.t[j - 1][k - 1];
    let mut r = [[0.0; 4]; 4];
    r[0][0] = (1.0 + t(1, 1) - t(2, 2) + t(3, 3)) / 4.0;
    r[1][1] = (1.0 - t(1, 1) + t(2, 2) + t(3, 3)) / 4.0;
    r[2][2] = (1.0 + t(1, 1) + t(2, 2) - t(3, 3)) / 4.0;
    r[3][3] = (1.0 - t(1, 1) - t(2, 2) - t(3, 3)) / 4.0;
    let off = [
        (0, 1, -(t(2, 1) + t(1, 2)) / 4.0),
        (0, 2, (t(2, 3) + t(3, 2)) / 4.0),
        (0, 3, (t(3, 1) - t(1, 3)) / 4.0),
        (1, 2, (t(1, 3) + t(3, 1)) / 4.0),
        (1, 3, (t(2, 3) - t(3, 2)) / 4.0),
        (2, 3, (t(2, 1) - t(1, 2)) / 4.0),
    ];
    for (j, k, v) in off {
        r[j][k] = v;
        r[k][j] = v;
    }
    r
}

/// Frobenius-nearest density matrix: eigenvalues projected onto the simplex.
pub fn project_to_density(m: &[[f64; 4]; 4]) -> Result<DensityMatrix> {
    let sym = DMatrix::from_fn(4, 4, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(sym);
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, mu) in sorted.iter().enumerate() {
        cumulative += mu;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if mu - candidate > 0.0 {
            theta = candidate;
        }
    }
    let lambdas = eig.eigenvalues.map(|mu| (mu - theta).max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&lambdas) * eig.eigenvectors.transpose();
    DensityMatrix::new(rebuilt.map(C64::from))
}

pub fn decode_real_state(corr: &CorrelationMatrix) -> Result<DecodeResult> {
    let rho_hat = decode_linear(corr);
    Ok(DecodeResult { rho_proj: project_to_density(&rho_hat)?, rho_hat, fidelity_vs_input: None })
}

/// Trace distance between the unprojected estimate and `rho`.
pub fn decode_error(result: &DecodeResult, rho: &DensityMatrix) -> Result<f64> {
    let m = CMatrix::from_fn(4, 4, |i, j| C64::from(result.rho_hat[i][j]));
    trace_distance(&DensityMatrix::from_hermitian_unchecked(m), rho)
}
