//! Finite-shot measurement simulation.
//!
//! Randomness comes from ChaCha8 streams. Independent work items derive their
//! stream seeds with [`sub_seed`], so results do not depend on how work is
//! scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::MeasSetting;
use crate::qcore::{identity, kron, CMatrix, DensityMatrix, Pauli, Subsystem, C64};

/// Seeded generator used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for work item `index` of the component named `tag`:
/// a SplitMix64 chain over the master seed, the tag bytes and the index.
pub fn sub_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for b in tag.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

/// Joint Pauli measurement `first ⊗ second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliSetting {
    pub first: Pauli,
    pub second: Pauli,
}

impl PauliSetting {
    pub fn new(first: Pauli, second: Pauli) -> Self {
        Self { first, second }
    }

    /// All nine settings, `XX, XY, ..., ZZ`.
    pub fn all() -> Vec<PauliSetting> {
        Pauli::ALL.iter().flat_map(|&a| Pauli::ALL.iter().map(move |&b| PauliSetting::new(a, b))).collect()
    }
}

impl fmt::Display for PauliSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first.label(), self.second.label())
    }
}

/// What a [`CountsTable`] was measured in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Setting {
    /// Two-qubit Pauli product; outcomes `++, +−, −+, −−`.
    Pair(PauliSetting),
    /// One Pauli on one qubit of a pair; outcomes `+, −`.
    Local(Subsystem, Pauli),
    /// General product basis; outcomes in basis order `φ0ψ0, φ0ψ1, φ1ψ0, φ1ψ1`.
    Product(MeasSetting),
}

impl Setting {
    pub fn outcome_count(&self) -> usize {
        match self {
            Setting::Local(..) => 2,
            _ => 4,
        }
    }

    pub fn outcome_labels(&self) -> &'static [&'static str] {
        match self {
            Setting::Local(..) => &["+", "-"],
            Setting::Pair(_) => &["++", "+-", "-+", "--"],
            Setting::Product(_) => &["00", "01", "10", "11"],
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Pair(p) => write!(f, "{p}"),
            Setting::Local(Subsystem::A, p) => write!(f, "{}I", p.label()),
            Setting::Local(Subsystem::B, p) => write!(f, "I{}", p.label()),
            Setting::Product(m) => write!(f, "basis:{}:{}:{}:{}", m.gamma, m.zeta, m.alpha, m.beta),
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown setting '{s}'"));
        if let Some(rest) = s.strip_prefix("basis:") {
            let v: Vec<f64> = rest
                .split(':')
                .map(|x| x.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if v.len() != 4 {
                return Err(bad());
            }
            return Ok(Setting::Product(MeasSetting { gamma: v[0], zeta: v[1], alpha: v[2], beta: v[3] }));
        }
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 2 {
            return Err(bad());
        }
        match (chars[0], chars[1]) {
            ('I', b) => Ok(Setting::Local(Subsystem::B, Pauli::from_label(b).ok_or_else(bad)?)),
            (a, 'I') => Ok(Setting::Local(Subsystem::A, Pauli::from_label(a).ok_or_else(bad)?)),
            (a, b) => Ok(Setting::Pair(PauliSetting::new(
                Pauli::from_label(a).ok_or_else(bad)?,
                Pauli::from_label(b).ok_or_else(bad)?,
            ))),
        }
    }
}

/// Outcome counts for one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    pub setting: Setting,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl CountsTable {
    pub fn new(setting: Setting, counts: Vec<u64>, seed: u64) -> Result<Self> {
        if counts.len() != setting.outcome_count() {
            return Err(Error::DimensionMismatch { expected: setting.outcome_count(), found: counts.len() });
        }
        let shots = counts.iter().sum();
        Ok(Self { setting, counts, shots, seed })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        if self.shots == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&n| n as f64 / self.shots as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Depolarizing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub p: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, p: 0.0 }
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(Self { kind: NoiseKind::Depolarizing, p })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self.kind {
            NoiseKind::None => Ok(rho.clone()),
            NoiseKind::Depolarizing => apply_depolarizing(rho, self.p),
        }
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: p })
    }
}

/// `(1 − p)ρ + p·I/d`.
pub fn apply_depolarizing(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_probability("p", p)?;
    let d = rho.dim();
    let mixed = identity(d) * C64::from(p / d as f64);
    Ok(DensityMatrix::from_hermitian_unchecked(rho.matrix() * C64::from(1.0 - p) + mixed))
}

fn eigenprojector(p: Pauli, sign: f64) -> CMatrix {
    (identity(2) + p.matrix() * C64::from(sign)) * C64::from(0.5)
}

fn born(rho: &DensityMatrix, projector: &CMatrix) -> f64 {
    rho.expectation(projector).clamp(0.0, 1.0)
}

/// Probabilities of `(+,+), (+,−), (−,+), (−,−)` for `first ⊗ second`.
pub fn outcome_probs(rho: &DensityMatrix, setting: PauliSetting) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    Ok(signs.map(|(a, b)| born(rho, &kron(&eigenprojector(setting.first, a), &eigenprojector(setting.second, b)))))
}

/// Probabilities of `+, −` for `pauli` on one qubit of a two-qubit state.
pub fn local_outcome_probs(rho: &DensityMatrix, qubit: Subsystem, pauli: Pauli) -> Result<[f64; 2]> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok([1.0, -1.0].map(|s| {
        let p = eigenprojector(pauli, s);
        let op = match qubit {
            Subsystem::A => kron(&p, &identity(2)),
            Subsystem::B => kron(&identity(2), &p),
        };
        born(rho, &op)
    }))
}

/// Outcome probabilities for any [`Setting`].
pub fn setting_probs(rho: &DensityMatrix, setting: &Setting) -> Result<Vec<f64>> {
    Ok(match setting {
        Setting::Pair(p) => outcome_probs(rho, *p)?.to_vec(),
        Setting::Local(q, p) => local_outcome_probs(rho, *q, *p)?.to_vec(),
        Setting::Product(m) => {
            if rho.dim() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
            }
            m.born_probs(rho).to_vec()
        }
    })
}

/// Multinomial draw of `shots` outcomes, via sequential conditional binomials.
pub fn sample_counts(probs: &[f64], shots: u64, seed: u64, setting: Setting) -> Result<CountsTable> {
    if probs.len() != setting.outcome_count() {
        return Err(Error::DimensionMismatch { expected: setting.outcome_count(), found: probs.len() });
    }
    if shots == 0 {
        return Err(Error::InvalidDistribution("shots must be positive".into()));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("{probs:?}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        let n = if k + 1 == probs.len() || remaining == 0 {
            remaining
        } else {
            let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
            Binomial::new(remaining, q).expect("q in [0,1]").sample(&mut rng)
        };
        counts.push(n);
        remaining -= n;
        mass -= p;
    }
    Ok(CountsTable { setting, counts, shots, seed })
}

/// `(n₊₊ − n₊₋ − n₋₊ + n₋₋)/shots`, or `(n₊ − n₋)/shots` for a local table.
/// A table with no shots gives 0.
pub fn correlator_estimate(table: &CountsTable) -> f64 {
    if table.shots == 0 {
        return 0.0;
    }
    let signs: &[f64] = if table.counts.len() == 2 { &[1.0, -1.0] } else { &[1.0, -1.0, -1.0, 1.0] };
    let s: f64 = table.counts.iter().zip(signs).map(|(&n, s)| s * n as f64).sum();
    s / table.shots as f64
}

/// Replaces every count by an independent Poisson draw with that mean.
pub fn poisson_resample(table: &CountsTable, seed: u64) -> CountsTable {
    let mut rng = rng_from_seed(seed);
    let counts: Vec<u64> = table
        .counts
        .iter()
        .map(|&n| if n == 0 { 0 } else { Poisson::new(n as f64).expect("positive mean").sample(&mut rng) as u64 })
        .collect();
    CountsTable { setting: table.setting, shots: counts.iter().sum(), counts, seed }
}

const CSV_HEADER: [&str; 5] = ["setting", "outcome", "count", "shots", "seed"];

/// One row per outcome under the header `setting,outcome,count,shots,seed`.
pub fn counts_to_csv(tables: &[CountsTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for t in tables {
        for (label, n) in t.setting.outcome_labels().iter().zip(&t.counts) {
            w.write_record([t.setting.to_string(), label.to_string(), n.to_string(), t.shots.to_string(), t.seed.to_string()])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

/// Inverse of [`counts_to_csv`]; consecutive rows with the same setting form one table.
pub fn counts_from_csv(text: &str) -> Result<Vec<CountsTable>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let header = r.headers().map_err(io)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut tables: Vec<CountsTable> = Vec::new();
    let num = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let setting: Setting = rec[0].parse()?;
        let (count, shots, seed) = (num(&rec[2])?, num(&rec[3])?, num(&rec[4])?);
        match tables.last_mut() {
            Some(t) if t.setting == setting && t.counts.len() < setting.outcome_count() => t.counts.push(count),
            _ => tables.push(CountsTable { setting, counts: vec![count], shots, seed }),
        }
    }
    for t in &tables {
        if t.counts.len() != t.setting.outcome_count() || t.counts.iter().sum::<u64>() != t.shots {
            return Err(Error::Parse(format!("incomplete table for {}", t.setting)));
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masker::canonical_bell;
    use crate::qcore::{fidelity_with_pure, EPS_EXACT};

    fn bell() -> DensityMatrix {
        canonical_bell().projector()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn bell_outcomes() {
        let zz = outcome_probs(&bell(), PauliSetting::new(Pauli::Z, Pauli::Z)).unwrap();
        assert!(close(&zz, &[0.5, 0.0, 0.0, 0.5], EPS_EXACT));
        let yy = outcome_probs(&bell(), PauliSetting::new(Pauli::Y, Pauli::Y)).unwrap();
        assert!(close(&yy, &[0.0, 0.5, 0.5, 0.0], EPS_EXACT));
        let mixed = outcome_probs(&DensityMatrix::maximally_mixed(4), PauliSetting::new(Pauli::X, Pauli::Z)).unwrap();
        assert!(close(&mixed, &[0.25; 4], EPS_EXACT));
    }

    #[test]
    fn sampling_examples() {
        let pair = Setting::Pair(PauliSetting::new(Pauli::Z, Pauli::Z));
        let t = sample_counts(&[1.0, 0.0, 0.0, 0.0], 17, 1, pair).unwrap();
        assert_eq!(t.counts, vec![17, 0, 0, 0]);
        let t = sample_counts(&[0.5, 0.0, 0.0, 0.5], 4000, 9, pair).unwrap();
        assert_eq!(t.counts[0] + t.counts[3], 4000);
        assert_eq!(t, sample_counts(&[0.5, 0.0, 0.0, 0.5], 4000, 9, pair).unwrap());
        let t = sample_counts(&[0.5, 0.0, 0.0, 0.5], 1_000_000, 2, pair).unwrap();
        assert!((correlator_estimate(&t) - 1.0).abs() < 0.005);
        assert!(sample_counts(&[0.5, 0.2, 0.0, 0.5], 10, 0, pair).is_err());
        assert!(sample_counts(&[0.5, 0.5], 10, 0, pair).is_err());
    }

    #[test]
    fn correlator_examples() {
        let pair = Setting::Pair(PauliSetting::new(Pauli::X, Pauli::X));
        let t = |c: Vec<u64>| CountsTable::new(pair, c, 0).unwrap();
        assert_eq!(correlator_estimate(&t(vec![4000, 0, 0, 0])), 1.0);
        assert_eq!(correlator_estimate(&t(vec![1000; 4])), 0.0);
        assert_eq!(correlator_estimate(&t(vec![2000, 0, 0, 2000])), 1.0);
    }

    #[test]
    fn depolarizing_examples() {
        assert_eq!(apply_depolarizing(&bell(), 0.0).unwrap(), bell());
        let full = apply_depolarizing(&bell(), 1.0).unwrap();
        assert!(crate::qcore::max_abs_diff(full.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < EPS_EXACT);
        let f = fidelity_with_pure(&apply_depolarizing(&bell(), 0.0056).unwrap(), &canonical_bell()).unwrap();
        assert!((f - 0.9958).abs() < 1e-12);
        assert!(apply_depolarizing(&bell(), 1.5).is_err());
    }

    #[test]
    fn poisson_examples() {
        let setting = Setting::Pair(PauliSetting::new(Pauli::Z, Pauli::Z));
        let zero = CountsTable::new(setting, vec![0; 4], 0).unwrap();
        assert_eq!(poisson_resample(&zero, 3).counts, vec![0; 4]);
        let t = CountsTable::new(setting, vec![4000, 0, 0, 0], 0).unwrap();
        assert_eq!(poisson_resample(&t, 5), poisson_resample(&t, 5));
        let r = poisson_resample(&t, 5);
        assert_eq!(r.shots, r.counts.iter().sum::<u64>());
    }

    #[test]
    fn csv_round_trip() {
        let tables = vec![
            CountsTable::new(Setting::Pair(PauliSetting::new(Pauli::X, Pauli::Y)), vec![1, 2, 3, 4], 42).unwrap(),
            CountsTable::new(Setting::Local(Subsystem::B, Pauli::Z), vec![7, 3], u64::MAX).unwrap(),
        ];
        let text = counts_to_csv(&tables).unwrap();
        assert!(text.starts_with("setting,outcome,count,shots,seed\nXY,++,1,10,42\n"));
        assert!(text.contains("IZ,-,3,10,18446744073709551615"));
        assert_eq!(counts_from_csv(&text).unwrap(), tables);
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(1, "fig3", 0), sub_seed(1, "fig3", 1));
        assert_ne!(sub_seed(1, "fig3", 0), sub_seed(1, "fig4", 0));
        assert_eq!(sub_seed(9, "x", 3), sub_seed(9, "x", 3));
    }
}
