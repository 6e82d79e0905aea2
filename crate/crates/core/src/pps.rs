//! Two-turn labeled pseudo-pure state preparation.
//!
//! Turn one records the input state, turn two records the input after a
//! population-redistributing permutation; the sum of the two deviation
//! matrices is the labeled PPS.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;

use crate::circuit;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pulse::{self, Builtin, DelayModel};
use crate::scalar::Scalar;
use crate::spin::{self, check_cap, embed_single, DeviationMatrix, SpinOp, SpinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Tt1,
    Tt2,
    Tt3,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tt1, Method::Tt2, Method::Tt3];

    /// Gradient pulses used during preparation.
    pub fn gradient_count(self) -> usize {
        match self {
            Method::Tt1 | Method::Tt2 => 0,
            Method::Tt3 => 1,
        }
    }

    pub fn turns(self) -> usize {
        2
    }

    pub fn ancillas(self) -> usize {
        1
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Method::Tt1 => "tt1",
            Method::Tt2 => "tt2",
            Method::Tt3 => "tt3",
        }
    }

    pub fn table_row(self) -> TableRow {
        TableRow {
            method: self.to_string(),
            turns: self.turns().to_string(),
            gradients: self.gradient_count().to_string(),
            ancillas: self.ancillas().to_string(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Tt1 => "LPPS-TT1",
            Method::Tt2 => "LPPS-TT2",
            Method::Tt3 => "LPPS-TT3",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        match lower.trim_start_matches("lpps-") {
            "tt1" => Ok(Method::Tt1),
            "tt2" => Ok(Method::Tt2),
            "tt3" => Ok(Method::Tt3),
            _ => Err(format!("unknown method `{s}` (expected tt1, tt2 or tt3)")),
        }
    }
}

/// One row of the method comparison table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub method: String,
    pub turns: String,
    pub gradients: String,
    pub ancillas: String,
}

/// Turn, gradient and ancilla costs of the common PPS preparation schemes.
/// Growth functions of `n` are given symbolically.
pub fn comparison_table() -> Vec<TableRow> {
    let row = |m: &str, t: &str, g: &str, a: &str| TableRow {
        method: m.into(),
        turns: t.into(),
        gradients: g.into(),
        ancillas: a.into(),
    };
    vec![
        row("Spatial averaging", "1", "f_s(n)", "0"),
        row("Temporal averaging", "f_t(n)", "0", "0"),
        row("Logical labeling", "1", "0", "f_l(n)"),
        row("Cat-state", "1", "1+f_c(n)", "1"),
        row("LPPS-TT1(TT2)", "2", "0", "1"),
        row("LPPS-TT3", "2", "1", "1"),
    ]
}

/// A bijection on basis indices; `map[j]` is the image of `|j>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationSpec {
    n: usize,
    map: Vec<usize>,
}

impl PermutationSpec {
    pub fn new(n: usize, map: Vec<usize>) -> Result<Self> {
        let dim = 1usize << n;
        if map.len() != dim {
            return Err(Error::InvalidPermutation(format!(
                "expected {dim} entries for {n} spins, got {}",
                map.len()
            )));
        }
        let mut seen = vec![false; dim];
        for (j, &t) in map.iter().enumerate() {
            if t >= dim || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidPermutation(format!("entry {j} -> {t} breaks bijectivity")));
            }
        }
        Ok(Self { n, map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            map: (0..1 << n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, j: usize) -> usize {
        self.map[j]
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Self) -> Self {
        Self {
            n: self.n,
            map: first.map.iter().map(|&j| self.map[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (j, &t) in self.map.iter().enumerate() {
            inv[t] = j;
        }
        Self { n: self.n, map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(j, &t)| j == t)
    }

    /// Overwrites one image without revalidating; test hook for fault injection.
    #[doc(hidden)]
    pub fn corrupt(&mut self, a: usize, b: usize) {
        self.map.swap(a, b);
    }
}

/// Closed-form permutation for `method` on `n` spins (ancilla = spin 1 = MSB).
pub fn build_permutation(method: Method, n: usize) -> Result<PermutationSpec> {
    if n < 2 {
        return Err(Error::TooFewSpins(n));
    }
    check_cap(n)?;
    let dim = 1usize << n;
    let all = dim - 1;
    let half = dim >> 1;
    let map = match method {
        Method::Tt1 => (0..dim)
            .map(|b| if b == 0 || b == all { b } else { !b & all })
            .collect(),
        Method::Tt2 => (0..dim)
            .map(|src| match src {
                s if s == half - 1 => 0,
                s if s == all => half,
                s => !s & all,
            })
            .collect(),
        Method::Tt3 => (0..dim)
            .map(|b| if b == 0 || b == half { b } else { b ^ half })
            .collect(),
    };
    PermutationSpec::new(n, map)
}

/// 0/1 matrix with entry `(map[j], j) = 1`.
pub fn permutation_to_unitary<T: Scalar>(spec: &PermutationSpec) -> CMatrix<T> {
    let mut m = CMatrix::zeros(spec.map.len());
    for (j, &t) in spec.map.iter().enumerate() {
        m[(t, j)] = Complex::new(T::one(), T::zero());
    }
    m
}

/// Which elements a gradient crusher removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrushMode {
    /// Keep only zero-quantum elements (equal total `m_z` on both sides).
    #[default]
    CoherenceOrderZero,
    /// Keep only the diagonal.
    DiagonalOnly,
}

impl fmt::Display for CrushMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrushMode::CoherenceOrderZero => "coherence-order-zero",
            CrushMode::DiagonalOnly => "diagonal-only",
        })
    }
}

impl FromStr for CrushMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "coherence-order-zero" | "zq" => Ok(CrushMode::CoherenceOrderZero),
            "diagonal-only" | "diag" => Ok(CrushMode::DiagonalOnly),
            _ => Err(format!("unknown gradient mode `{s}`")),
        }
    }
}

/// Coherence order `p = m_row - m_col` of element `(row, col)`.
pub fn coherence_order(row: usize, col: usize) -> i32 {
    col.count_ones() as i32 - row.count_ones() as i32
}

pub fn gradient_crush<T: Scalar>(rho: &DeviationMatrix<T>, mode: CrushMode) -> DeviationMatrix<T> {
    let kept = rho.matrix().map(|r, c, v| {
        let keep = match mode {
            CrushMode::CoherenceOrderZero => coherence_order(r, c) == 0,
            CrushMode::DiagonalOnly => r == c,
        };
        if keep {
            v
        } else {
            Complex::zero()
        }
    });
    DeviationMatrix::from_parts(rho.n(), kept, rho.scale())
}

/// `gamma_1 I_z^1`, the ancilla-only magnetization.
fn ancilla_magnetization<T: Scalar>(system: &SpinSystem<T>) -> DeviationMatrix<T> {
    let op = spin::ProductOperator::single(system.n(), 1, SpinOp::Z);
    DeviationMatrix::from_product_operator(&op, system.gamma()[0])
}

/// Turn-one state. TT3 rotates the work spins by pi/2 about y and crushes.
pub fn prepare_input<T: Scalar>(method: Method, system: &SpinSystem<T>) -> Result<DeviationMatrix<T>> {
    let thermal = spin::thermal_deviation(system)?;
    match method {
        Method::Tt1 | Method::Tt2 => Ok(thermal),
        Method::Tt3 => {
            let n = system.n();
            let r = pulse::rotation_2x2(pulse::Axis::Y, T::FRAC_PI_2());
            let rotated = (2..=n).fold(thermal, |rho, k| rho.conjugated(&embed_single(n, k, &r)));
            let crushed = gradient_crush(&rotated, CrushMode::CoherenceOrderZero);
            debug_assert!(
                crushed.max_abs_diff(&ancilla_magnetization(system))
                    <= T::hermitian_tol() * T::one().max(system.gamma().iter().fold(T::zero(), |a, g| a + g.abs()))
            );
            Ok(crushed)
        }
    }
}

/// `U rho U^dagger` after checking `U` is unitary.
pub fn apply_turn_two<T: Scalar>(rho: &DeviationMatrix<T>, u: &CMatrix<T>) -> Result<DeviationMatrix<T>> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let defect = u.unitarity_defect();
    if defect > T::unitary_tol() {
        return Err(Error::NotUnitary(defect.as_f64()));
    }
    Ok(rho.conjugated(u))
}

/// TT1: `(sum gamma)(|0..0><0..0| - |1..1><1..1|)`;
/// TT2/TT3: `gamma_1 (|0><0| - |1><1|) ⊗ |0..0><0..0|`.
pub fn target_pps<T: Scalar>(method: Method, system: &SpinSystem<T>) -> Result<DeviationMatrix<T>> {
    let n = system.n();
    if n < 2 {
        return Err(Error::TooFewSpins(n));
    }
    check_cap(n)?;
    let pops = populations::target(method, system.gamma());
    Ok(DeviationMatrix::from_parts(n, CMatrix::from_real_diag(&pops), T::one()))
}

/// How the turn-two permutation is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Realization {
    #[default]
    Matrix,
    Circuit,
    Pulses,
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Realization::Matrix => "matrix",
            Realization::Circuit => "circuit",
            Realization::Pulses => "pulses",
        })
    }
}

impl FromStr for Realization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "matrix" => Ok(Realization::Matrix),
            "circuit" => Ok(Realization::Circuit),
            "pulses" => Ok(Realization::Pulses),
            _ => Err(format!("unknown realization `{s}` (expected matrix, circuit or pulses)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpsResult<T> {
    pub method: Method,
    pub realization: Realization,
    pub rho_in: DeviationMatrix<T>,
    pub rho_u: DeviationMatrix<T>,
    pub rho_sum: DeviationMatrix<T>,
    pub target: DeviationMatrix<T>,
    pub max_abs_residual: T,
}

/// Runs both turns with the chosen realization of the permutation.
pub fn prepare_pps<T: Scalar>(
    method: Method,
    system: &SpinSystem<T>,
    realization: Realization,
) -> Result<PpsResult<T>> {
    let n = system.n();
    let rho_in = prepare_input(method, system)?;
    let rho_u = match realization {
        Realization::Matrix => {
            let u = permutation_to_unitary(&build_permutation(method, n)?);
            apply_turn_two(&rho_in, &u)?
        }
        Realization::Circuit => {
            let c = circuit::circuit_for_method(method, n)?;
            let u = circuit::circuit_to_unitary(&c).to_complex::<T>();
            apply_turn_two(&rho_in, &u)?
        }
        Realization::Pulses => {
            if n != 2 {
                return Err(Error::RealizationUnavailable {
                    realization: realization.to_string(),
                    n,
                });
            }
            let seq = pulse::builtin_sequence(Builtin::for_method(method));
            pulse::apply_sequence(&rho_in, &seq, system, DelayModel::Ideal)?
        }
    };
    let rho_sum = rho_in.add(&rho_u)?;
    let target = target_pps(method, system)?;
    let max_abs_residual = rho_sum.max_abs_diff(&target);
    Ok(PpsResult {
        method,
        realization,
        rho_in,
        rho_u,
        rho_sum,
        target,
        max_abs_residual,
    })
}

/// Diagonal (population) form of the protocol over any field, so the sum
/// identity can be checked in exact rational arithmetic.
pub mod populations {
    use std::ops::Neg;

    use num_traits::Num;

    use super::{Method, PermutationSpec};

    fn half<T: Num>() -> T {
        T::one() / (T::one() + T::one())
    }

    /// `sum_i gamma_i I_z^i` populations, spin 1 as the most significant bit.
    pub fn thermal<T: Clone + Num + Neg<Output = T>>(gamma: &[T]) -> Vec<T> {
        let n = gamma.len();
        (0..1usize << n)
            .map(|b| {
                gamma.iter().enumerate().fold(T::zero(), |acc, (i, g)| {
                    let term = g.clone() * half::<T>();
                    if (b >> (n - 1 - i)) & 1 == 0 {
                        acc + term
                    } else {
                        acc - term
                    }
                })
            })
            .collect()
    }

    pub fn input<T: Clone + Num + Neg<Output = T>>(method: Method, gamma: &[T]) -> Vec<T> {
        match method {
            Method::Tt1 | Method::Tt2 => thermal(gamma),
            Method::Tt3 => {
                let n = gamma.len();
                let h = gamma[0].clone() * half::<T>();
                (0..1usize << n)
                    .map(|b| if b < 1 << (n - 1) { h.clone() } else { -h.clone() })
                    .collect()
            }
        }
    }

    /// Populations after the permutation: `out[map[j]] = pops[j]`.
    pub fn permute<T: Clone + Num>(pops: &[T], spec: &PermutationSpec) -> Vec<T> {
        let mut out = vec![T::zero(); pops.len()];
        for (j, p) in pops.iter().enumerate() {
            out[spec.image(j)] = p.clone();
        }
        out
    }

    pub fn target<T: Clone + Num + Neg<Output = T>>(method: Method, gamma: &[T]) -> Vec<T> {
        let n = gamma.len();
        let dim = 1usize << n;
        let mut out = vec![T::zero(); dim];
        match method {
            Method::Tt1 => {
                let total = gamma.iter().fold(T::zero(), |a, g| a + g.clone());
                out[0] = total.clone();
                out[dim - 1] = -total;
            }
            Method::Tt2 | Method::Tt3 => {
                out[0] = gamma[0].clone();
                out[dim >> 1] = -gamma[0].clone();
            }
        }
        out
    }

    /// First basis index where `input + permuted input` differs from the target.
    pub fn sum_identity_mismatch<T: Clone + Num + Neg<Output = T>>(
        method: Method,
        gamma: &[T],
        spec: &PermutationSpec,
    ) -> Option<usize> {
        let rho_in = input(method, gamma);
        let rho_u = permute(&rho_in, spec);
        let want = target(method, gamma);
        (0..want.len()).find(|&i| rho_in[i].clone() + rho_u[i].clone() != want[i])
    }
}
