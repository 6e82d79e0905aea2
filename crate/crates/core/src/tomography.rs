//! Full state tomography under the multiplet readout model.
//!
//! Each pulse string rotates every spin by `1`, `X = exp(-i sigma_x pi/4)`
//! or `Y = exp(-i sigma_y pi/4)`; every spin's `2^{n-1}` complex line
//! amplitudes are then recorded. The deviation matrix is recovered by linear
//! least squares over the `4^n - 1` traceless Pauli-string coefficients.

use std::collections::HashSet;
use std::fmt::Write;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::export::num;
use crate::linalg::{CMatrix, RealMatrix, Svd};
use crate::pulse::{rotation_2x2, Axis};
use crate::scalar::Scalar;
use crate::spectrometer::{peak_table, PeakTable};
use crate::spin::{embed_single, spin_mask, DeviationMatrix, ProductOperator, SpinSystem};

/// The 16 observable pulses of the published 4-spin experiment.
pub const PUBLISHED_FOUR_SPIN: [&str; 16] = [
    "XXXX", "IIYY", "YYXX", "IIIY", "XYXX", "YXYI", "IXYI", "IIIX", "XIYY", "YXII", "YYXY", "XYXI", "IIYX", "IXIY",
    "IIXI", "IYIY",
];

/// Smallest complete two-spin set found by exhaustive rank search.
pub const TWO_SPIN: [&str; 4] = ["II", "IX", "IY", "XI"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseSet {
    n: usize,
    strings: Vec<String>,
}

impl PulseSet {
    pub fn new<S: AsRef<str>>(n: usize, strings: &[S]) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(strings.len());
        for s in strings {
            let s = s.as_ref();
            if s.len() != n || !s.chars().all(|c| matches!(c, 'I' | 'X' | 'Y')) {
                return Err(Error::InvalidPulseSet(format!("`{s}` is not a length-{n} string over I, X, Y")));
            }
            if !seen.insert(s) {
                return Err(Error::InvalidPulseSet(format!("duplicate pulse `{s}`")));
            }
            out.push(s.to_string());
        }
        if out.is_empty() {
            return Err(Error::InvalidPulseSet("empty pulse set".into()));
        }
        Ok(Self { n, strings: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// Copy with `extra` appended.
    pub fn extended(&self, extra: &str) -> Result<Self> {
        let mut all = self.strings.clone();
        all.push(extra.to_string());
        Self::new(self.n, &all)
    }

    /// `U = u_1 ⊗ ... ⊗ u_n` for one pulse string.
    pub fn unitary<T: Scalar>(pulse: &str) -> CMatrix<T> {
        let n = pulse.len();
        let quarter = T::FRAC_PI_2();
        pulse
            .chars()
            .enumerate()
            .fold(CMatrix::identity(1 << n), |acc, (k, c)| match c {
                'X' => embed_single(n, k + 1, &rotation_2x2(Axis::X, quarter)).matmul(&acc),
                'Y' => embed_single(n, k + 1, &rotation_2x2(Axis::Y, quarter)).matmul(&acc),
                _ => acc,
            })
    }
}

/// The published 16 strings for four spins, a complete set for two.
pub fn pulse_set(n: usize) -> Result<PulseSet> {
    match n {
        2 => PulseSet::new(2, &TWO_SPIN),
        4 => PulseSet::new(4, &PUBLISHED_FOUR_SPIN),
        _ => Err(Error::UnsupportedTomography(n)),
    }
}

/// `pulse_set(n)` plus direct acquisition (`II...I`) where the set lacks it.
/// For four spins this lifts the design rank from 253 to 255.
pub fn completed_pulse_set(n: usize) -> Result<PulseSet> {
    let base = pulse_set(n)?;
    let identity = "I".repeat(n);
    if base.strings().contains(&identity) {
        Ok(base)
    } else {
        base.extended(&identity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRecord<T> {
    pub pulse: String,
    /// One table per spin, spin 1 first.
    pub tables: Vec<PeakTable<T>>,
}

impl<T: Scalar> ReadoutRecord<T> {
    pub fn max_magnitude(&self) -> T {
        self.tables.iter().fold(T::zero(), |acc, t| acc.max(t.max_magnitude()))
    }
}

pub fn records_csv<T: Scalar>(records: &[ReadoutRecord<T>]) -> String {
    let mut out = String::from("pulse,spin,partners,real,imag\n");
    for r in records {
        for t in &r.tables {
            for p in &t.peaks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.pulse,
                    p.spin,
                    p.label,
                    num(p.amplitude.re),
                    num(p.amplitude.im)
                );
            }
        }
    }
    out
}

pub fn simulate_readouts<T: Scalar>(
    rho: &DeviationMatrix<T>,
    system: &SpinSystem<T>,
    set: &PulseSet,
) -> Result<Vec<ReadoutRecord<T>>> {
    let n = system.n();
    if set.n() != n || rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: 1 << if set.n() != n { set.n() } else { rho.n() },
        });
    }
    set.strings()
        .iter()
        .map(|pulse| {
            let rotated = rho.conjugated(&PulseSet::unitary(pulse));
            let tables = (1..=n)
                .map(|k| peak_table(&rotated, system, k))
                .collect::<Result<_>>()?;
            Ok(ReadoutRecord {
                pulse: pulse.clone(),
                tables,
            })
        })
        .collect()
}

/// Adds `N(0, (sigma_rel * max|amplitude|)^2)` to every real and imaginary
/// part, drawn in record order from a ChaCha8 stream seeded by `seed`.
pub fn add_noise<T: Scalar>(records: &[ReadoutRecord<T>], sigma_rel: T, seed: u64) -> Result<Vec<ReadoutRecord<T>>> {
    if !(sigma_rel >= T::zero()) || !sigma_rel.is_finite() {
        return Err(Error::InvalidSpectral("noise level must be finite and non-negative".into()));
    }
    let scale = records.iter().fold(T::zero(), |acc, r| acc.max(r.max_magnitude()));
    let sd = (sigma_rel * scale).as_f64();
    if sd == 0.0 {
        return Ok(records.to_vec());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidSpectral(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = records.to_vec();
    for p in out.iter_mut().flat_map(|r| r.tables.iter_mut()).flat_map(|t| t.peaks.iter_mut()) {
        let re = T::lit(normal.sample(&mut rng));
        let im = T::lit(normal.sample(&mut rng));
        p.amplitude += Complex::new(re, im);
    }
    Ok(out)
}

/// `|Tr(rho sigma)| / sqrt(Tr(rho^2) Tr(sigma^2))` for Hermitian arguments.
pub fn fidelity<T: Scalar>(rho: &DeviationMatrix<T>, sigma: &DeviationMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let (a, b) = (rho.matrix(), sigma.matrix());
    let (na, nb) = (a.inner(a).re, b.inner(b).re);
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok((a.inner(b).norm() / (na * nb).sqrt()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult<T> {
    pub sigma: DeviationMatrix<T>,
    /// `||A x - b||_2` over the stacked real and imaginary amplitudes.
    pub residual: T,
    pub rank: usize,
    /// Pauli-string coefficients, basis order of [`Reconstructor::basis`].
    pub coefficients: Vec<T>,
}

impl<T: Scalar> ReconstructionResult<T> {
    pub fn report(&self, fidelity: Option<T>) -> String {
        let mut out = format!("rank {}\nresidual {}\n", self.rank, num(self.residual));
        if let Some(f) = fidelity {
            let _ = writeln!(out, "fidelity {}", num(f));
        }
        out
    }
}

/// Design matrix for one pulse set, with its SVD computed once.
#[derive(Debug, Clone)]
pub struct Reconstructor<T> {
    n: usize,
    set: PulseSet,
    basis: Vec<ProductOperator>,
    /// Rows contributed by each pulse, in set order.
    blocks: Vec<Vec<Vec<T>>>,
    svd: Svd<T>,
}

impl<T: Scalar> Reconstructor<T> {
    pub fn new(set: &PulseSet) -> Result<Self> {
        let n = set.n();
        crate::spin::check_cap(n)?;
        let basis: Vec<ProductOperator> = (1..1usize << (2 * n)).map(|i| ProductOperator::from_index(n, i)).collect();
        let paulis: Vec<CMatrix<T>> = basis
            .iter()
            .map(|p| p.matrix::<T>().scale_real(T::lit((1u64 << p.weight()) as f64)))
            .collect();
        let blocks = set
            .strings()
            .iter()
            .map(|pulse| {
                let u = PulseSet::unitary::<T>(pulse);
                paulis.iter().map(|p| response(n, &p.conjugate_by(&u))).collect()
            })
            .collect::<Vec<Vec<Vec<T>>>>();
        let svd = Svd::new(&assemble(&blocks, basis.len()));
        Ok(Self {
            n,
            set: set.clone(),
            basis,
            blocks,
            svd,
        })
    }

    pub fn set(&self) -> &PulseSet {
        &self.set
    }

    pub fn basis(&self) -> &[ProductOperator] {
        &self.basis
    }

    /// Rank of the full design matrix (columns: `4^n - 1`).
    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    pub fn unknowns(&self) -> usize {
        self.basis.len()
    }

    pub fn rows(&self) -> usize {
        self.blocks.first().map_or(0, |b| b[0].len()) * self.blocks.len()
    }

    /// Basis elements with weight in the design null space.
    pub fn unresolved(&self) -> Vec<String> {
        unresolved_names(&self.svd, &self.basis)
    }

    /// Least-squares reconstruction; fails if the records' pulses do not
    /// determine every coefficient.
    pub fn reconstruct(&self, records: &[ReadoutRecord<T>]) -> Result<ReconstructionResult<T>> {
        self.solve(records, true)
    }

    /// Minimum-norm solution even when rank-deficient; null-space
    /// components come back as zero.
    pub fn reconstruct_min_norm(&self, records: &[ReadoutRecord<T>]) -> Result<ReconstructionResult<T>> {
        self.solve(records, false)
    }

    fn solve(&self, records: &[ReadoutRecord<T>], require_full: bool) -> Result<ReconstructionResult<T>> {
        let mut picked = Vec::with_capacity(records.len());
        for r in records {
            let idx = self
                .set
                .strings()
                .iter()
                .position(|s| *s == r.pulse)
                .ok_or_else(|| Error::InvalidPulseSet(format!("record for `{}` not in the set", r.pulse)))?;
            if r.tables.len() != self.n || r.tables.iter().any(|t| t.peaks.len() != 1 << (self.n - 1)) {
                return Err(Error::InvalidPulseSet(format!("record `{}` has the wrong shape", r.pulse)));
            }
            picked.push(idx);
        }
        let full = picked.len() == self.set.len() && picked.iter().enumerate().all(|(i, &p)| i == p);
        let owned;
        let (svd, design) = if full {
            (&self.svd, assemble(&self.blocks, self.basis.len()))
        } else {
            let chosen: Vec<Vec<Vec<T>>> = picked.iter().map(|&i| self.blocks[i].clone()).collect();
            let design = assemble(&chosen, self.basis.len());
            if design.rows() < design.cols() {
                let names = self.basis.iter().map(ToString::to_string).collect();
                return Err(Error::RankDeficient {
                    rank: design.rows().min(self.basis.len()),
                    expected: self.basis.len(),
                    unresolved: names,
                });
            }
            owned = Svd::new(&design);
            (&owned, design)
        };
        let rank = svd.rank();
        if require_full && rank < self.basis.len() {
            return Err(Error::RankDeficient {
                rank,
                expected: self.basis.len(),
                unresolved: unresolved_names(svd, &self.basis),
            });
        }
        let b: Vec<T> = records
            .iter()
            .flat_map(|r| r.tables.iter())
            .flat_map(|t| t.peaks.iter())
            .flat_map(|p| [p.amplitude.re, p.amplitude.im])
            .collect();
        let x = svd.solve(&b);
        let fitted = design.mul_vec(&x);
        let residual = fitted
            .iter()
            .zip(&b)
            .fold(T::zero(), |acc, (f, v)| acc + (*f - *v) * (*f - *v))
            .sqrt();
        let dim = 1usize << self.n;
        let mut sigma = CMatrix::zeros(dim);
        for (p, &c) in self.basis.iter().zip(&x) {
            if c == T::zero() {
                continue;
            }
            let weight = T::lit((1u64 << p.weight()) as f64);
            let (flip, coef) = p.monomial::<T>();
            for (col, v) in coef.into_iter().enumerate() {
                sigma[(col ^ flip, col)] += v * (c * weight);
            }
        }
        Ok(ReconstructionResult {
            sigma: DeviationMatrix::new(self.n, sigma.hermitian_part())?,
            residual,
            rank,
            coefficients: x,
        })
    }
}

/// Stacked `(re, im)` line amplitudes of `m` in readout order.
fn response<T: Scalar>(n: usize, m: &CMatrix<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(n << n);
    for k in 1..=n {
        let mask = spin_mask(n, k);
        for c in (0..1usize << n).filter(|c| c & mask == 0) {
            let z = m[(c | mask, c)];
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

fn assemble<T: Scalar>(blocks: &[Vec<Vec<T>>], unknowns: usize) -> RealMatrix<T> {
    let columns: Vec<Vec<T>> = (0..unknowns)
        .map(|j| blocks.iter().flat_map(|b| b[j].iter().copied()).collect())
        .collect();
    RealMatrix::from_columns(&columns)
}

fn unresolved_names<T: Scalar>(svd: &Svd<T>, basis: &[ProductOperator]) -> Vec<String> {
    let cut = T::lit(1e-6);
    let mut names: Vec<String> = svd
        .null_space()
        .iter()
        .flat_map(|v| v.iter().enumerate().filter(|(_, x)| x.abs() > cut).map(|(i, _)| i))
        .collect::<std::collections::BTreeSet<usize>>()
        .into_iter()
        .map(|i| basis[i].to_string())
        .collect();
    names.dedup();
    names
}

/// Reconstruction fidelities against `rho` for each seed.
pub fn monte_carlo<T: Scalar>(
    reconstructor: &Reconstructor<T>,
    rho: &DeviationMatrix<T>,
    system: &SpinSystem<T>,
    sigma_rel: T,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<Vec<T>> {
    let clean = simulate_readouts(rho, system, reconstructor.set())?;
    seeds
        .into_iter()
        .map(|seed| {
            let noisy = add_noise(&clean, sigma_rel, seed)?;
            fidelity(rho, &reconstructor.reconstruct(&noisy)?.sigma)
        })
        .collect()
}
