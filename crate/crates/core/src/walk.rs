//! Discrete-time coined quantum walk on a line with position-dependent coins.
//!
//! States are sparse maps `(position, coin) -> amplitude`. A schedule is an
//! ordered list of coin layers and conditional translations; the translation
//! moves coin-0 amplitude one site left and coin-1 amplitude one site right.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, cmat, unitarity_deviation, CMatrix, StateVector, C64, EPS_EXACT, EPS_NUMERIC, I, ONE, ZERO};

/// Walker position on the line.
pub type Position = i32;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WalkState {
    amplitudes: BTreeMap<(Position, u8), C64>,
}

impl WalkState {
    /// Builds a state from `(position, coin, amplitude)` triples; coins must be 0 or 1
    /// and the total norm must be one.
    pub fn new(entries: impl IntoIterator<Item = (Position, u8, C64)>) -> Result<Self> {
        let state = Self::from_entries(entries)?;
        let norm_sq = state.norm_squared();
        if (norm_sq - 1.0).abs() > EPS_NUMERIC {
            return Err(Error::Unnormalized { norm_sq });
        }
        Ok(state)
    }

    fn from_entries(entries: impl IntoIterator<Item = (Position, u8, C64)>) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        for (x, coin, amp) in entries {
            if coin > 1 {
                return Err(Error::Parse(format!("coin index {coin} is not 0 or 1")));
            }
            *amplitudes.entry((x, coin)).or_insert(ZERO) += amp;
        }
        amplitudes.retain(|_, a| *a != ZERO);
        Ok(Self { amplitudes })
    }

    pub fn basis(position: Position, coin: u8) -> Self {
        Self { amplitudes: BTreeMap::from([((position, coin.min(1)), ONE)]) }
    }

    pub fn amplitude(&self, position: Position, coin: u8) -> C64 {
        self.amplitudes.get(&(position, coin)).copied().unwrap_or(ZERO)
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Nonzero entries in `(position, coin)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Position, u8, C64)> + '_ {
        self.amplitudes.iter().map(|(&(x, c), &a)| (x, c, a))
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &WalkState) -> f64 {
        self.amplitudes
            .iter()
            .map(|(k, a)| a.conj() * other.amplitudes.get(k).copied().unwrap_or(ZERO))
            .sum::<C64>()
            .norm_sqr()
    }

    /// Largest amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &WalkState) -> f64 {
        self.amplitudes
            .keys()
            .chain(other.amplitudes.keys())
            .map(|&(x, c)| (self.amplitude(x, c) - other.amplitude(x, c)).norm())
            .fold(0.0, f64::max)
    }
}

/// Position-dependent coin operators; positions not listed get the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoinLayer {
    coins: BTreeMap<Position, CMatrix>,
}

impl CoinLayer {
    pub fn new(coins: impl IntoIterator<Item = (Position, CMatrix)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (x, m) in coins {
            check_coin(&m)?;
            map.insert(x, m);
        }
        Ok(Self { coins: map })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn coins(&self) -> &BTreeMap<Position, CMatrix> {
        &self.coins
    }
}

fn check_coin(m: &CMatrix) -> Result<()> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
    }
    let deviation = unitarity_deviation(m);
    if deviation > EPS_EXACT {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Coins(CoinLayer),
    Translate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkSchedule {
    pub name: String,
    pub layers: Vec<Layer>,
}

impl WalkSchedule {
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Self {
        Self { name: name.into(), layers }
    }

    /// Number of translation steps.
    pub fn step_count(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Translate)).count()
    }
}

/// Conditional translation: `|x,0> -> |x-1,0>`, `|x,1> -> |x+1,1>`.
pub fn translate(state: &WalkState) -> WalkState {
    let amplitudes = state
        .amplitudes
        .iter()
        .map(|(&(x, coin), &a)| {
            let shifted = if coin == 0 { x - 1 } else { x + 1 };
            ((shifted, coin), a)
        })
        .collect();
    WalkState { amplitudes }
}

/// Multiplies the coin spinor at each position by that position's coin.
pub fn apply_coin_layer(state: &WalkState, layer: &CoinLayer) -> Result<WalkState> {
    let mut out = BTreeMap::new();
    let mut positions: Vec<Position> = state.amplitudes.keys().map(|&(x, _)| x).collect();
    positions.dedup();
    for x in positions {
        let spinor = [state.amplitude(x, 0), state.amplitude(x, 1)];
        let rotated = match layer.coins.get(&x) {
            Some(m) => {
                check_coin(m)?;
                [
                    m[(0, 0)] * spinor[0] + m[(0, 1)] * spinor[1],
                    m[(1, 0)] * spinor[0] + m[(1, 1)] * spinor[1],
                ]
            }
            None => spinor,
        };
        for (coin, amp) in rotated.into_iter().enumerate() {
            if amp != ZERO {
                out.insert((x, coin as u8), amp);
            }
        }
    }
    Ok(WalkState { amplitudes: out })
}

/// Encodes `Σ a_j|j>` as `(a_0|-3> + a_1|-1> + a_2|1> + a_3|3>) ⊗ |1>`.
pub fn encode_input(a: &[C64; 4]) -> Result<WalkState> {
    WalkState::new(ENCODING_POSITIONS.iter().zip(a).map(|(&x, &amp)| (x, 1, amp)))
}

pub fn encode_state(psi: &StateVector) -> Result<WalkState> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: psi.dim() });
    }
    let a = psi.amplitudes();
    encode_input(&[a[0], a[1], a[2], a[3]])
}

pub const ENCODING_POSITIONS: [Position; 4] = [-3, -1, 1, 3];

pub fn coin_x() -> CMatrix {
    cmat(2, &[ZERO, ONE, ONE, ZERO])
}

pub fn coin_z() -> CMatrix {
    cmat(2, &[ONE, ZERO, ZERO, -ONE])
}

/// `X·Z`: `Z` acts first.
pub fn coin_xz() -> CMatrix {
    coin_x() * coin_z()
}

/// `C1 = [[i, 1], [-i, 1]]/√2`.
pub fn coin_c1() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    cmat(2, &[I * s, c(s, 0.0), -I * s, c(s, 0.0)])
}

/// `C2 = [[1, i], [-1, i]]/√2`.
pub fn coin_c2() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    cmat(2, &[c(s, 0.0), I * s, c(-s, 0.0), I * s])
}

/// The four-step masking walk followed by a translation-free coin layer.
///
/// Composite map: `encode_input(a)` ends on positions ±1 with
/// `extract_two_qubit = -i Σ_j a_j |Φ'_j>`, i.e. the masker output.
pub fn masking_schedule() -> WalkSchedule {
    let layer = |coins: Vec<(Position, CMatrix)>| Layer::Coins(CoinLayer::new(coins).expect("unitary coins"));
    WalkSchedule::new(
        "real-ququart-masker",
        vec![
            layer(vec![(-1, coin_x()), (3, coin_x())]),
            Layer::Translate,
            layer(vec![(-2, coin_c2()), (2, coin_c1())]),
            Layer::Translate,
            layer(vec![(-3, coin_x()), (3, coin_x())]),
            Layer::Translate,
            Layer::Translate,
            layer(vec![(-1, coin_z()), (1, coin_xz())]),
        ],
    )
}

pub fn run_schedule(state: &WalkState, schedule: &WalkSchedule) -> Result<WalkState> {
    schedule.layers.iter().try_fold(state.clone(), |s, layer| match layer {
        Layer::Coins(coins) => apply_coin_layer(&s, coins),
        Layer::Translate => Ok(translate(&s)),
    })
}

/// Maps positions ±1 to the walker qubit (`+1 -> |0>_A`, `-1 -> |1>_A`) and the
/// coin to qubit B.
pub fn extract_two_qubit(state: &WalkState) -> Result<StateVector> {
    let mut amps = vec![ZERO; 4];
    for (x, coin, a) in state.iter() {
        let qubit_a = match x {
            1 => 0,
            -1 => 1,
            _ => {
                if a.norm() > EPS_EXACT {
                    return Err(Error::Extraction { position: x, amplitude: a.norm() });
                }
                continue;
            }
        };
        amps[2 * qubit_a + coin as usize] = a;
    }
    StateVector::new(amps)
}

/// Encode, walk, extract.
pub fn walk_masker_output(psi: &StateVector, schedule: &WalkSchedule) -> Result<StateVector> {
    extract_two_qubit(&run_schedule(&encode_state(psi)?, schedule)?)
}

// Schedule file schema (see schemas/walk_schedule.schema.json).

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleDoc {
    name: String,
    layers: Vec<LayerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerDoc {
    Coins { coins: Vec<CoinDoc> },
    Translate,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoinDoc {
    position: Position,
    /// Row-major 2x2, real and imaginary parts interleaved.
    matrix: [f64; 8],
}

impl WalkSchedule {
    pub fn to_json(&self) -> Result<String> {
        let doc = ScheduleDoc {
            name: self.name.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Translate => LayerDoc::Translate,
                    Layer::Coins(cl) => LayerDoc::Coins {
                        coins: cl
                            .coins
                            .iter()
                            .map(|(&position, m)| {
                                let mut matrix = [0.0; 8];
                                for (k, (r, col)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                                    matrix[2 * k] = m[(r, col)].re;
                                    matrix[2 * k + 1] = m[(r, col)].im;
                                }
                                CoinDoc { position, matrix }
                            })
                            .collect(),
                    },
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        let mut layers = Vec::with_capacity(doc.layers.len());
        for l in doc.layers {
            layers.push(match l {
                LayerDoc::Translate => Layer::Translate,
                LayerDoc::Coins { coins } => {
                    let mut entries = Vec::with_capacity(coins.len());
                    for coin in coins {
                        let v = coin.matrix;
                        let m = cmat(2, &[c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])]);
                        entries.push((coin.position, m));
                    }
                    Layer::Coins(CoinLayer::new(entries)?)
                }
            });
        }
        Ok(Self { name: doc.name, layers })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
