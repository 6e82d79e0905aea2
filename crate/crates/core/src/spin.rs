//! Spin systems, product operators, the secular Hamiltonian, thermal
//! deviation states and unitary evolution.
//!
//! Basis convention: spin 1 is the most significant bit of a basis index, and
//! bit value 0 is the `m = +1/2` state. Spin indices in public APIs are
//! 1-based. All energies are angular frequencies with hbar = 1.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Scalar;

/// Environment variable overriding [`DEFAULT_MAX_SPINS`].
pub const MAX_SPINS_ENV: &str = "NMR_PPS_MAX_SPINS";
pub const DEFAULT_MAX_SPINS: usize = 12;

/// Largest spin count dense operations accept.
pub fn dimension_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_SPINS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n: &usize| n >= 1)
            .unwrap_or(DEFAULT_MAX_SPINS)
    })
}

pub(crate) fn check_cap(n: usize) -> Result<()> {
    let cap = dimension_cap();
    if n > cap {
        return Err(Error::DimensionCap { n, cap });
    }
    Ok(())
}

/// Mask of spin `k` (1-based) in an `n`-spin basis index.
#[inline]
pub fn spin_mask(n: usize, k: usize) -> usize {
    debug_assert!(k >= 1 && k <= n);
    1 << (n - k)
}

/// Bit of spin `k` (1-based) in basis index `b`.
#[inline]
pub fn spin_bit(n: usize, k: usize, b: usize) -> usize {
    (b >> (n - k)) & 1
}

/// `m_z` quantum number (+1/2 for bit 0) of spin `k` in basis state `b`.
#[inline]
pub fn mz<T: Scalar>(n: usize, k: usize, b: usize) -> T {
    if spin_bit(n, k, b) == 0 {
        T::lit(0.5)
    } else {
        T::lit(-0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem<T> {
    species: Vec<String>,
    gamma: Vec<T>,
    nu: Vec<T>,
    j: Vec<T>,
    t2: Vec<T>,
}

impl<T: Scalar> SpinSystem<T> {
    /// Uncoupled on-resonance spins with the given relative gyromagnetic
    /// ratios; species default to `"X"` and T2 to infinity.
    pub fn new(gamma: Vec<T>) -> Result<Self> {
        let n = gamma.len();
        let system = Self {
            species: vec!["X".to_string(); n],
            nu: vec![T::zero(); n],
            j: vec![T::zero(); n * n],
            t2: vec![T::infinity(); n],
            gamma,
        };
        system.validate()?;
        Ok(system)
    }

    pub fn with_species<S: Into<String>>(mut self, species: Vec<S>) -> Result<Self> {
        self.species = species.into_iter().map(Into::into).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn with_shifts(mut self, nu: Vec<T>) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    /// Sets `J_ab` (Hz) symmetrically; spins are 1-based.
    pub fn with_coupling(mut self, a: usize, b: usize, hz: T) -> Result<Self> {
        let n = self.n();
        if a == b || a == 0 || b == 0 || a > n || b > n {
            return Err(Error::InvalidSystem(format!("bad coupling pair ({a}, {b})")));
        }
        self.j[(a - 1) * n + (b - 1)] = hz;
        self.j[(b - 1) * n + (a - 1)] = hz;
        self.validate()?;
        Ok(self)
    }

    pub fn with_t2(mut self, t2: Vec<T>) -> Result<Self> {
        self.t2 = t2;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: Vec<T>) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if n == 0 {
            return bad("at least one spin is required".into());
        }
        if self.species.len() != n || self.nu.len() != n || self.t2.len() != n || self.j.len() != n * n {
            return bad(format!("per-spin arrays must all have length {n}"));
        }
        if let Some(i) = self.gamma.iter().position(|g| *g == T::zero() || !g.is_finite()) {
            return bad(format!("gyromagnetic ratio of spin {} must be finite and nonzero", i + 1));
        }
        if let Some(i) = self.nu.iter().position(|v| !v.is_finite()) {
            return bad(format!("chemical shift of spin {} is not finite", i + 1));
        }
        if let Some(i) = self.t2.iter().position(|t| !(*t > T::zero())) {
            return bad(format!("T2 of spin {} must be positive", i + 1));
        }
        for a in 0..n {
            if self.j[a * n + a] != T::zero() {
                return bad("coupling matrix must have a zero diagonal".into());
            }
            for b in a + 1..n {
                let (x, y) = (self.j[a * n + b], self.j[b * n + a]);
                if x != y || !x.is_finite() {
                    return bad(format!("coupling ({}, {}) is not symmetric and finite", a + 1, b + 1));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn gamma(&self) -> &[T] {
        &self.gamma
    }

    pub fn shifts(&self) -> &[T] {
        &self.nu
    }

    pub fn t2(&self) -> &[T] {
        &self.t2
    }

    /// `J_ab` in Hz for 1-based spins.
    pub fn coupling(&self, a: usize, b: usize) -> T {
        let n = self.n();
        self.j[(a - 1) * n + (b - 1)]
    }

    /// 1-based indices of the spins carrying a species label.
    pub fn spins_of_species(&self, species: &str) -> Vec<usize> {
        (1..=self.n()).filter(|&k| self.species[k - 1] == species).collect()
    }
}

/// Field strength and temperature behind the thermal polarization prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalConfig<T> {
    pub b0: T,
    pub temperature: T,
}

impl<T: Scalar> ThermalConfig<T> {
    pub const BOLTZMANN: f64 = 1.380_649e-23;

    pub fn new(b0: T, temperature: T) -> Result<Self> {
        if !(b0 > T::zero()) || !(temperature > T::zero()) {
            return Err(Error::InvalidSystem("b0 and temperature must be positive".into()));
        }
        Ok(Self { b0, temperature })
    }

    /// `B0 / (2^n k_B T)`, the weight of `sum gamma_i I_z^i` in the
    /// high-temperature expansion. The partition function only normalizes the
    /// identity part, which is never materialized.
    pub fn epsilon(&self, n: usize) -> T {
        self.b0 / (T::lit((1u64 << n) as f64) * T::lit(Self::BOLTZMANN) * self.temperature)
    }
}

/// Hamiltonian reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame<T> {
    /// Each spin's carrier removed: `-sum 2 pi nu_i I_z^i + sum 2 pi J_ij I_z^i I_z^j`.
    Rotating,
    /// `-sum (gamma_i b0 - 2 pi nu_i) I_z^i + couplings`, with Larmor
    /// frequency `gamma_i * b0` in rad/s.
    Lab { b0: T },
}

/// Single-spin factor of a product operator; `X`, `Y`, `Z` are `sigma/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinOp {
    I,
    X,
    Y,
    Z,
}

impl SpinOp {
    pub const ALL: [SpinOp; 4] = [SpinOp::I, SpinOp::X, SpinOp::Y, SpinOp::Z];

    pub fn matrix<T: Scalar>(self) -> CMatrix<T> {
        let h = T::lit(0.5);
        let (z, r, i) = (Complex::zero(), Complex::new(h, T::zero()), Complex::new(T::zero(), h));
        let one = Complex::new(T::one(), T::zero());
        let rows = match self {
            SpinOp::I => vec![vec![one, z], vec![z, one]],
            SpinOp::X => vec![vec![z, r], vec![r, z]],
            SpinOp::Y => vec![vec![z, -i], vec![i, z]],
            SpinOp::Z => vec![vec![r, z], vec![z, -r]],
        };
        CMatrix::from_rows(&rows)
    }

    fn letter(self) -> char {
        match self {
            SpinOp::I => 'I',
            SpinOp::X => 'X',
            SpinOp::Y => 'Y',
            SpinOp::Z => 'Z',
        }
    }
}

/// Tensor product of per-spin factors, e.g. `ZI` = `I_z ⊗ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductOperator {
    factors: Vec<SpinOp>,
}

impl ProductOperator {
    pub fn new(factors: Vec<SpinOp>) -> Self {
        Self { factors }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![SpinOp::I; n])
    }

    /// Single-spin operator on 1-based spin `k`.
    pub fn single(n: usize, k: usize, op: SpinOp) -> Self {
        let mut factors = vec![SpinOp::I; n];
        factors[k - 1] = op;
        Self::new(factors)
    }

    /// Basis element `index` in base-4 order with spin 1 as the leading digit
    /// (I=0, X=1, Y=2, Z=3); index 0 is the identity.
    pub fn from_index(n: usize, index: usize) -> Self {
        let factors = (0..n)
            .map(|k| SpinOp::ALL[(index >> (2 * (n - 1 - k))) & 3])
            .collect();
        Self::new(factors)
    }

    pub fn index(&self) -> usize {
        self.factors.iter().fold(0, |acc, f| (acc << 2) | (*f as usize))
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[SpinOp] {
        &self.factors
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|f| **f != SpinOp::I).count()
    }

    /// `(flip, coef)` such that `P |b> = coef[b] |b ^ flip>`.
    pub fn monomial<T: Scalar>(&self) -> (usize, Vec<Complex<T>>) {
        let n = self.n();
        let mut flip = 0;
        for (k, f) in self.factors.iter().enumerate() {
            if matches!(f, SpinOp::X | SpinOp::Y) {
                flip |= spin_mask(n, k + 1);
            }
        }
        let h = T::lit(0.5);
        let coef = (0..1usize << n)
            .map(|b| {
                self.factors
                    .iter()
                    .enumerate()
                    .fold(Complex::new(T::one(), T::zero()), |acc, (k, f)| {
                        let down = spin_bit(n, k + 1, b) == 1;
                        acc * match (f, down) {
                            (SpinOp::I, _) => Complex::new(T::one(), T::zero()),
                            (SpinOp::X, _) => Complex::new(h, T::zero()),
                            // sigma_y |0> = i|1>, sigma_y |1> = -i|0>
                            (SpinOp::Y, false) => Complex::new(T::zero(), h),
                            (SpinOp::Y, true) => Complex::new(T::zero(), -h),
                            (SpinOp::Z, false) => Complex::new(h, T::zero()),
                            (SpinOp::Z, true) => Complex::new(-h, T::zero()),
                        }
                    })
            })
            .collect();
        (flip, coef)
    }

    pub fn matrix<T: Scalar>(&self) -> CMatrix<T> {
        let (flip, coef) = self.monomial::<T>();
        let mut m = CMatrix::zeros(coef.len());
        for (b, c) in coef.into_iter().enumerate() {
            m[(b ^ flip, b)] = c;
        }
        m
    }

    /// `Tr(P^dagger P) = 2^(n - w) / 2^w`.
    pub fn norm_sqr<T: Scalar>(&self) -> T {
        let w = self.weight() as i32;
        let n = self.n() as i32;
        T::lit(2f64.powi(n - 2 * w))
    }

    /// `Tr(P^dagger rho)` in O(2^n).
    pub fn overlap<T: Scalar>(&self, rho: &CMatrix<T>) -> Complex<T> {
        let (flip, coef) = self.monomial::<T>();
        coef.iter()
            .enumerate()
            .fold(Complex::zero(), |acc, (b, c)| acc + c.conj() * rho[(b ^ flip, b)])
    }
}

impl fmt::Display for ProductOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.factors.iter().try_for_each(|op| write!(f, "{}", op.letter()))
    }
}

impl FromStr for ProductOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(SpinOp::I),
                'X' => Ok(SpinOp::X),
                'Y' => Ok(SpinOp::Y),
                'Z' => Ok(SpinOp::Z),
                other => Err(Error::InvalidSystem(format!("bad product operator factor `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ProductOperator::new)
    }
}

/// Traceless deviation part of an ensemble density operator.
///
/// The identity background `(1 - eps) I / 2^n` is never stored; `scale`
/// carries the polarization prefactor symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationMatrix<T> {
    n: usize,
    matrix: CMatrix<T>,
    scale: T,
}

impl<T: Scalar> DeviationMatrix<T> {
    pub fn new(n: usize, matrix: CMatrix<T>) -> Result<Self> {
        check_cap(n)?;
        if matrix.dim() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: matrix.dim(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > T::hermitian_tol() * T::one().max(matrix.max_abs()) {
            return Err(Error::NotHermitian(defect.as_f64()));
        }
        Ok(Self {
            n,
            matrix,
            scale: T::one(),
        })
    }

    /// Wraps the output of a Hermiticity-preserving operation.
    pub(crate) fn from_parts(n: usize, matrix: CMatrix<T>, scale: T) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << n);
        Self { n, matrix, scale }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_parts(n, CMatrix::zeros(1 << n), T::one())
    }

    pub fn from_real_diag(n: usize, diag: &[T]) -> Result<Self> {
        Self::new(n, CMatrix::from_real_diag(diag))
    }

    pub fn from_product_operator(op: &ProductOperator, coefficient: T) -> Self {
        Self::from_parts(op.n(), op.matrix::<T>().scale_real(coefficient), T::one())
    }

    pub fn with_scale(mut self, scale: T) -> Self {
        self.scale = scale;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn real_diag(&self) -> Vec<T> {
        self.matrix.real_diag()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        for r in 0..d {
            for c in 0..d {
                if r != c {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.n, self.matrix.add(&other.matrix), self.scale))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.n, self.matrix.sub(&other.matrix), self.scale))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::from_parts(self.n, self.matrix.scale_real(s), self.scale)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// `U rho U^dagger` without a unitarity check.
    pub fn conjugated(&self, u: &CMatrix<T>) -> Self {
        Self::from_parts(self.n, self.matrix.conjugate_by(u), self.scale)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

/// Embeds a 2×2 operator acting on 1-based spin `k` into the `n`-spin space.
pub fn embed_single<T: Scalar>(n: usize, k: usize, op: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(op.dim(), 2);
    let mask = spin_mask(n, k);
    let mut m = CMatrix::zeros(1 << n);
    for c in 0..1usize << n {
        let base = c & !mask;
        let bc = spin_bit(n, k, c);
        for br in 0..2 {
            let v = op[(br, bc)];
            if !v.is_zero() {
                m[(base | (br * mask), c)] = v;
            }
        }
    }
    m
}

/// Secular Hamiltonian in angular-frequency units; always diagonal.
pub fn build_hamiltonian<T: Scalar>(system: &SpinSystem<T>, frame: Frame<T>) -> Result<CMatrix<T>> {
    let n = system.n();
    check_cap(n)?;
    let two_pi = T::TAU();
    let offsets: Vec<T> = (0..n)
        .map(|i| match frame {
            Frame::Rotating => two_pi * system.nu[i],
            Frame::Lab { b0 } => system.gamma[i] * b0 - two_pi * system.nu[i],
        })
        .collect();
    let diag: Vec<T> = (0..1usize << n)
        .map(|b| {
            let mut e = T::zero();
            for i in 1..=n {
                e -= offsets[i - 1] * mz::<T>(n, i, b);
                for j in i + 1..=n {
                    e += two_pi * system.coupling(i, j) * mz::<T>(n, i, b) * mz::<T>(n, j, b);
                }
            }
            e
        })
        .collect();
    Ok(CMatrix::from_real_diag(&diag))
}

/// `sum_i gamma_i I_z^i`: entry `b` is `(1/2) sum_i gamma_i (-1)^{b_i}`.
pub fn thermal_deviation<T: Scalar>(system: &SpinSystem<T>) -> Result<DeviationMatrix<T>> {
    let n = system.n();
    check_cap(n)?;
    let diag: Vec<T> = (0..1usize << n)
        .map(|b| (1..=n).fold(T::zero(), |acc, i| acc + system.gamma[i - 1] * mz::<T>(n, i, b)))
        .collect();
    Ok(DeviationMatrix::from_parts(n, CMatrix::from_real_diag(&diag), T::one()))
}

/// Thermal deviation carrying the high-temperature prefactor as its scale.
pub fn thermal_deviation_with<T: Scalar>(
    system: &SpinSystem<T>,
    config: &ThermalConfig<T>,
) -> Result<DeviationMatrix<T>> {
    Ok(thermal_deviation(system)?.with_scale(config.epsilon(system.n())))
}

/// `exp(-iHt) rho exp(iHt)`.
pub fn evolve<T: Scalar>(rho: &DeviationMatrix<T>, h: &CMatrix<T>, t: T) -> Result<DeviationMatrix<T>> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: h.dim(),
        });
    }
    let defect = h.hermiticity_defect();
    if defect > T::hermitian_tol() * T::one().max(h.max_abs()) {
        return Err(Error::NotHermitian(defect.as_f64()));
    }
    let u = CMatrix::propagator(h, t);
    Ok(rho.conjugated(&u))
}

/// Coefficients of a matrix in the product-operator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition<T> {
    n: usize,
    coefficients: Vec<Complex<T>>,
}

impl<T: Scalar> PauliDecomposition<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient of `op`.
    pub fn get(&self, op: &ProductOperator) -> Complex<T> {
        self.coefficients[op.index()]
    }

    /// Coefficients indexed by [`ProductOperator::index`].
    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    /// Basis elements whose coefficient magnitude exceeds `tol`.
    pub fn support(&self, tol: T) -> Vec<(ProductOperator, Complex<T>)> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol)
            .map(|(i, &c)| (ProductOperator::from_index(self.n, i), c))
            .collect()
    }

    pub fn reassemble(&self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(1 << self.n);
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (flip, coef) = ProductOperator::from_index(self.n, i).monomial::<T>();
            for (b, v) in coef.into_iter().enumerate() {
                m[(b ^ flip, b)] += c * v;
            }
        }
        m
    }
}

/// `c_P = Tr(P^dagger rho) / Tr(P^dagger P)` over all `4^n` product operators.
pub fn pauli_decompose<T: Scalar>(rho: &CMatrix<T>) -> Result<PauliDecomposition<T>> {
    let dim = rho.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: dim.next_power_of_two().max(2),
            actual: dim,
        });
    }
    let n = dim.trailing_zeros() as usize;
    check_cap(n)?;
    let coefficients = (0..1usize << (2 * n))
        .map(|i| {
            let op = ProductOperator::from_index(n, i);
            op.overlap(rho) / op.norm_sqr::<T>()
        })
        .collect();
    Ok(PauliDecomposition { n, coefficients })
}
