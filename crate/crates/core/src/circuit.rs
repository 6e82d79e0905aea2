//! Gate-level realizations of the turn-two permutations.
//!
//! Every gate here is a classical reversible gate, so circuit unitaries are
//! computed over the integers and compared exactly.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pps::{Method, PermutationSpec};
use crate::scalar::Scalar;
use crate::spin::{spin_bit, spin_mask};

/// Gates on 1-based spins; controls fire on `|1>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    X(usize),
    Cnot { control: usize, target: usize },
    Toffoli { controls: Vec<usize>, target: usize },
    Swap(usize, usize),
}

impl Gate {
    fn spins(&self) -> Vec<usize> {
        match self {
            Gate::X(t) => vec![*t],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { controls, target } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Gate::Swap(a, b) => vec![*a, *b],
        }
    }

    /// Image of basis index `b` (bit-level route).
    pub fn apply_index(&self, n: usize, b: usize) -> usize {
        match self {
            Gate::X(t) => b ^ spin_mask(n, *t),
            Gate::Cnot { control, target } => {
                if spin_bit(n, *control, b) == 1 {
                    b ^ spin_mask(n, *target)
                } else {
                    b
                }
            }
            Gate::Toffoli { controls, target } => {
                if controls.iter().all(|&c| spin_bit(n, c, b) == 1) {
                    b ^ spin_mask(n, *target)
                } else {
                    b
                }
            }
            Gate::Swap(x, y) => {
                let (bx, by) = (spin_bit(n, *x, b), spin_bit(n, *y, b));
                if bx == by {
                    b
                } else {
                    b ^ spin_mask(n, *x) ^ spin_mask(n, *y)
                }
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(t) => write!(f, "x {t}"),
            Gate::Cnot { control, target } => write!(f, "cnot {control} {target}"),
            Gate::Toffoli { controls, target } => {
                let c: Vec<String> = controls.iter().map(ToString::to_string).collect();
                write!(f, "toffoli {} {target}", c.join(","))
            }
            Gate::Swap(a, b) => write!(f, "swap {a} {b}"),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::InvalidCircuit(format!("cannot parse gate `{line}`"));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["x", t] => Ok(Gate::X(idx(t)?)),
            ["cnot", c, t] => Ok(Gate::Cnot {
                control: idx(c)?,
                target: idx(t)?,
            }),
            ["toffoli", cs, t] => Ok(Gate::Toffoli {
                controls: cs.split(',').map(idx).collect::<Result<_>>()?,
                target: idx(t)?,
            }),
            ["swap", a, b] => Ok(Gate::Swap(idx(a)?, idx(b)?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one spin".into()));
        }
        for g in &gates {
            let spins = g.spins();
            if spins.iter().any(|&s| s == 0 || s > n) {
                return Err(Error::InvalidCircuit(format!("`{g}` addresses a spin outside 1..={n}")));
            }
            let mut sorted = spins.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != spins.len() {
                return Err(Error::InvalidCircuit(format!("`{g}` repeats a spin")));
            }
            if matches!(g, Gate::Toffoli { controls, .. } if controls.is_empty()) {
                return Err(Error::InvalidCircuit("toffoli needs at least one control".into()));
            }
        }
        Ok(Self { n, gates })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Basis permutation obtained by pushing each basis state through the gates.
    pub fn induced_permutation(&self) -> PermutationSpec {
        let map = (0..1usize << self.n)
            .map(|b| self.gates.iter().fold(b, |acc, g| g.apply_index(self.n, acc)))
            .collect();
        PermutationSpec::new(self.n, map).expect("reversible gates give a bijection")
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for g in &self.gates {
            match g {
                Gate::X(_) => counts.x += 1,
                Gate::Cnot { .. } => counts.cnot += 1,
                Gate::Toffoli { .. } => counts.toffoli += 1,
                Gate::Swap(..) => counts.swap += 1,
            }
        }
        counts
    }

    /// Parses the one-gate-per-line text form; the header line is `n <spins>`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::InvalidCircuit("empty circuit text".into()))?;
        let n = header
            .strip_prefix("n ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::InvalidCircuit(format!("bad header `{header}`")))?;
        let gates = lines.map(str::parse).collect::<Result<_>>()?;
        Self::new(n, gates)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub x: usize,
    pub cnot: usize,
    pub toffoli: usize,
    pub swap: usize,
}

impl GateCounts {
    /// Budget of `n` X gates, `2(n-1)` CNOTs and one n-qubit Toffoli.
    pub fn tt1_budget(n: usize) -> Self {
        Self {
            x: n,
            cnot: 2 * (n - 1),
            toffoli: 1,
            swap: 0,
        }
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={} cnot={} toffoli={} swap={}", self.x, self.cnot, self.toffoli, self.swap)
    }
}

/// Circuit for the method's permutation; spin 1 is the ancilla.
///
/// * TT1: `X_1`, CNOT ladder from the ancilla, Toffoli(work -> ancilla),
///   `X` on each work spin, CNOT ladder.
/// * TT2: `X_1`, Toffoli(work -> ancilla), `X` on each work spin.
/// * TT3: `X` on work spins, Toffoli(work -> ancilla), `X` on work spins, `X_1`.
pub fn circuit_for_method(method: Method, n: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::TooFewSpins(n));
    }
    let work: Vec<usize> = (2..=n).collect();
    let ladder = || work.iter().map(|&k| Gate::Cnot { control: 1, target: k });
    let flip_work = || work.iter().map(|&k| Gate::X(k));
    let toffoli = Gate::Toffoli {
        controls: work.clone(),
        target: 1,
    };
    let mut gates = Vec::new();
    match method {
        Method::Tt1 => {
            gates.push(Gate::X(1));
            gates.extend(ladder());
            gates.push(toffoli);
            gates.extend(flip_work());
            gates.extend(ladder());
        }
        Method::Tt2 => {
            gates.push(Gate::X(1));
            gates.push(toffoli);
            gates.extend(flip_work());
        }
        Method::Tt3 => {
            gates.extend(flip_work());
            gates.push(toffoli);
            gates.extend(flip_work());
            gates.push(Gate::X(1));
        }
    }
    Circuit::new(n, gates)
}

/// Square integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        Self { dim, data }
    }

    fn from_rows(rows: [[i64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.dim + c]
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let mut data = vec![0; a * a * b * b];
        let dim = a * b;
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = self.get(r / b, c / b) * rhs.get(r % b, c % b);
            }
        }
        Self { dim, data }
    }

    fn add(&self, rhs: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `Some(map)` with `map[j]` the row of the single 1 in column `j`, if
    /// this is a permutation matrix.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        let n = self.dim;
        let mut map = Vec::with_capacity(n);
        for c in 0..n {
            let mut hit = None;
            for r in 0..n {
                match self.get(r, c) {
                    0 => {}
                    1 if hit.is_none() => hit = Some(r),
                    _ => return None,
                }
            }
            map.push(hit?);
        }
        let mut rows = map.clone();
        rows.sort_unstable();
        rows.dedup();
        (rows.len() == n).then_some(map)
    }

    pub fn to_complex<T: Scalar>(&self) -> CMatrix<T> {
        CMatrix::from_fn(self.dim, |r, c| Complex::new(T::lit(self.get(r, c) as f64), T::zero()))
    }
}

const I2: [[i64; 2]; 2] = [[1, 0], [0, 1]];
const X2: [[i64; 2]; 2] = [[0, 1], [1, 0]];
const P0: [[i64; 2]; 2] = [[1, 0], [0, 0]];
const P1: [[i64; 2]; 2] = [[0, 0], [0, 1]];
const LOWER: [[i64; 2]; 2] = [[0, 0], [1, 0]]; // |1><0|
const RAISE: [[i64; 2]; 2] = [[0, 1], [0, 0]]; // |0><1|

/// Kronecker chain with `factor(k)` on 1-based spin `k`.
fn tensor(n: usize, factor: impl Fn(usize) -> [[i64; 2]; 2]) -> IntMatrix {
    (2..=n).fold(IntMatrix::from_rows(factor(1)), |acc, k| {
        acc.kron(&IntMatrix::from_rows(factor(k)))
    })
}

/// Gate matrix from Kronecker products of projectors and flips.
pub fn gate_matrix(n: usize, gate: &Gate) -> IntMatrix {
    match gate {
        Gate::X(t) => tensor(n, |k| if k == *t { X2 } else { I2 }),
        Gate::Cnot { control, target } => {
            let off = tensor(n, |k| if k == *control { P0 } else { I2 });
            let on = tensor(n, |k| match k {
                k if k == *control => P1,
                k if k == *target => X2,
                _ => I2,
            });
            off.add(&on)
        }
        Gate::Toffoli { controls, target } => {
            // I + (prod |1><1|_c) ⊗ (X - I)_t
            let fire_x = tensor(n, |k| match k {
                k if controls.contains(&k) => P1,
                k if k == *target => X2,
                _ => I2,
            });
            let fire_i = tensor(n, |k| if controls.contains(&k) { P1 } else { I2 });
            IntMatrix::identity(1 << n).add(&fire_x).sub(&fire_i)
        }
        Gate::Swap(a, b) => {
            // sum over x,y of |x><y|_a ⊗ |y><x|_b
            let pairs = [(P0, P0), (P1, P1), (LOWER, RAISE), (RAISE, LOWER)];
            pairs
                .iter()
                .map(|(fa, fb)| {
                    tensor(n, |k| match k {
                        k if k == *a => *fa,
                        k if k == *b => *fb,
                        _ => I2,
                    })
                })
                .reduce(|acc, m| acc.add(&m))
                .expect("four terms")
        }
    }
}

/// Ordered product of gate matrices (later gates on the left).
pub fn circuit_to_unitary(circuit: &Circuit) -> IntMatrix {
    circuit
        .gates
        .iter()
        .fold(IntMatrix::identity(1 << circuit.n), |acc, g| gate_matrix(circuit.n, g).matmul(&acc))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitCheck {
    pub equal: bool,
    /// First basis index whose image differs, with both images.
    pub first_mismatch: Option<Mismatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub index: usize,
    pub circuit_image: Option<usize>,
    pub spec_image: usize,
}

impl fmt::Display for CircuitCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_mismatch {
            None => write!(f, "equal"),
            Some(m) => match m.circuit_image {
                Some(img) => write!(
                    f,
                    "mismatch at basis index {}: circuit -> {img}, spec -> {}",
                    m.index, m.spec_image
                ),
                None => write!(f, "circuit unitary is not a permutation (spec maps {} -> {})", m.index, m.spec_image),
            },
        }
    }
}

/// Exact comparison of the circuit unitary with the permutation matrix of `spec`.
pub fn verify_circuit(circuit: &Circuit, spec: &PermutationSpec) -> Result<CircuitCheck> {
    if circuit.n != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << spec.n(),
            actual: 1 << circuit.n,
        });
    }
    let u = circuit_to_unitary(circuit);
    let Some(map) = u.as_permutation() else {
        return Ok(CircuitCheck {
            equal: false,
            first_mismatch: Some(Mismatch {
                index: 0,
                circuit_image: None,
                spec_image: spec.image(0),
            }),
        });
    };
    let first_mismatch = (0..map.len()).find(|&j| map[j] != spec.image(j)).map(|j| Mismatch {
        index: j,
        circuit_image: Some(map[j]),
        spec_image: spec.image(j),
    });
    Ok(CircuitCheck {
        equal: first_mismatch.is_none(),
        first_mismatch,
    })
}
