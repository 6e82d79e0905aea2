//! Pulse-level realizations: hard rotations, J-coupling delays and gradient
//! crushers, plus a left-to-right sequence simulator.
//!
//! A rotation `[theta]^k_alpha` is `exp(-i theta I_alpha^k)`. The symbolic
//! delay `[1/2J]` is `exp(-i pi I_z^a I_z^b)` in the ideal model (shifts and
//! spectator couplings refocused) or free evolution under the full
//! Hamiltonian for `1/(2 J_ab)` seconds in the realistic model.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pps::{gradient_crush, CrushMode, Method};
use crate::scalar::Scalar;
use crate::spin::{build_hamiltonian, embed_single, spin_bit, DeviationMatrix, Frame, SpinSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    MinusX,
    MinusY,
    MinusZ,
}

impl Axis {
    fn sign_and_base(self) -> (f64, char) {
        match self {
            Axis::X => (1.0, 'x'),
            Axis::Y => (1.0, 'y'),
            Axis::Z => (1.0, 'z'),
            Axis::MinusX => (-1.0, 'x'),
            Axis::MinusY => (-1.0, 'y'),
            Axis::MinusZ => (-1.0, 'z'),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (sign, base) = self.sign_and_base();
        if sign < 0.0 {
            write!(f, "-{base}")
        } else {
            write!(f, "{base}")
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            "-x" => Ok(Axis::MinusX),
            "-y" => Ok(Axis::MinusY),
            "-z" => Ok(Axis::MinusZ),
            _ => Err(Error::InvalidPulse(format!("unknown axis `{s}`"))),
        }
    }
}

/// `exp(-i angle I_axis)` on one spin: `cos(a/2) 1 - i sin(a/2) sigma_axis`.
pub fn rotation_2x2<T: Scalar>(axis: Axis, angle: T) -> CMatrix<T> {
    let (sign, base) = axis.sign_and_base();
    let half = angle * T::lit(sign) / T::lit(2.0);
    let (c, s) = (half.cos(), half.sin());
    let z = T::zero();
    let m = |re: T, im: T| Complex::new(re, im);
    let rows = match base {
        'x' => vec![vec![m(c, z), m(z, -s)], vec![m(z, -s), m(c, z)]],
        'y' => vec![vec![m(c, z), m(-s, z)], vec![m(s, z), m(c, z)]],
        _ => vec![vec![m(c, -s), m(z, z)], vec![m(z, z), m(c, s)]],
    };
    CMatrix::from_rows(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay<T> {
    Seconds(T),
    /// `[1/2J]` for the 1-based pair `(a, b)`.
    HalfJ { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pulse<T> {
    Rotation { targets: Vec<usize>, axis: Axis, angle: T },
    Delay(Delay<T>),
    Gradient(CrushMode),
}

impl<T: Scalar> Pulse<T> {
    pub fn rot(targets: &[usize], axis: Axis, angle: T) -> Self {
        Pulse::Rotation {
            targets: targets.to_vec(),
            axis,
            angle,
        }
    }

    pub fn half_j(a: usize, b: usize) -> Self {
        Pulse::Delay(Delay::HalfJ { a, b })
    }

    fn validate(&self, n: usize) -> Result<()> {
        let in_range = |k: usize| k >= 1 && k <= n;
        match self {
            Pulse::Rotation { targets, angle, .. } => {
                if targets.is_empty() {
                    return Err(Error::InvalidPulse("rotation without targets".into()));
                }
                if !angle.is_finite() {
                    return Err(Error::InvalidPulse("rotation angle is not finite".into()));
                }
                if let Some(k) = targets.iter().find(|&&k| !in_range(k)) {
                    return Err(Error::InvalidPulse(format!("spin {k} outside 1..={n}")));
                }
            }
            Pulse::Delay(Delay::Seconds(t)) => {
                if !(*t >= T::zero()) || !t.is_finite() {
                    return Err(Error::InvalidPulse("delay must be finite and non-negative".into()));
                }
            }
            Pulse::Delay(Delay::HalfJ { a, b }) => {
                if a == b || !in_range(*a) || !in_range(*b) {
                    return Err(Error::UnboundDelay);
                }
            }
            Pulse::Gradient(_) => {}
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for Pulse<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pulse::Rotation { targets, axis, angle } => {
                let spins: Vec<String> = targets.iter().map(ToString::to_string).collect();
                write!(f, "rot {} {axis} {}", spins.join(","), format_angle(angle.as_f64()))
            }
            Pulse::Delay(Delay::HalfJ { a, b }) => write!(f, "delay 1/2J {a} {b}"),
            Pulse::Delay(Delay::Seconds(t)) => write!(f, "delay {}", t.as_f64()),
            Pulse::Gradient(mode) => write!(f, "grad {mode}"),
        }
    }
}

impl<T: Scalar> FromStr for Pulse<T> {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::InvalidPulse(format!("cannot parse `{line}`"));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["rot", spins, axis, angle] => Ok(Pulse::Rotation {
                targets: spins.split(',').map(idx).collect::<Result<_>>()?,
                axis: axis.parse()?,
                angle: T::lit(parse_angle(angle).ok_or_else(bad)?),
            }),
            ["delay", "1/2J", a, b] => Ok(Pulse::half_j(idx(a)?, idx(b)?)),
            ["delay", secs] => Ok(Pulse::Delay(Delay::Seconds(T::lit(secs.parse().map_err(|_| bad())?)))),
            ["grad", mode] => Ok(Pulse::Gradient(mode.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Angles on the `pi/4` grid print symbolically (`pi/2`, `-3pi/4`), others
/// as decimal radians.
pub fn format_angle(angle: f64) -> String {
    let quarters = angle / std::f64::consts::FRAC_PI_4;
    let k = quarters.round();
    if (quarters - k).abs() > 1e-12 {
        return format!("{angle}");
    }
    let k = k as i64;
    if k == 0 {
        return "0".into();
    }
    let sign = if k < 0 { "-" } else { "" };
    let (mut num, mut den) = (k.abs(), 4);
    while den > 1 && num % 2 == 0 {
        num /= 2;
        den /= 2;
    }
    let coef = if num == 1 { String::new() } else { num.to_string() };
    if den == 1 {
        format!("{sign}{coef}pi")
    } else {
        format!("{sign}{coef}pi/{den}")
    }
}

pub fn parse_angle(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s),
    };
    let (num, den) = match rest.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().ok()?),
        None => (rest, 1.0),
    };
    let coef = num.strip_suffix("pi")?;
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    Some(sign * coef * std::f64::consts::PI / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence<T> {
    pub name: String,
    /// Gate or unitary the sequence is meant to realize.
    pub reference: Option<String>,
    pub pulses: Vec<Pulse<T>>,
}

impl<T: Scalar> PulseSequence<T> {
    pub fn new(name: impl Into<String>, pulses: Vec<Pulse<T>>) -> Self {
        Self {
            name: name.into(),
            reference: None,
            pulses,
        }
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference = Some(reference.into());
        self
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn then(mut self, other: PulseSequence<T>) -> Self {
        self.pulses.extend(other.pulses);
        self
    }

    /// Line-per-pulse text; `name` and `ref` header lines are optional on parse.
    pub fn to_text(&self) -> String {
        let mut out = format!("name {}\n", self.name);
        if let Some(r) = &self.reference {
            out.push_str(&format!("ref {r}\n"));
        }
        for p in &self.pulses {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seq = PulseSequence::new("unnamed", Vec::new());
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix("name ") {
                seq.name = name.trim().to_string();
            } else if let Some(r) = line.strip_prefix("ref ") {
                seq.reference = Some(r.trim().to_string());
            } else {
                seq.pulses.push(line.parse()?);
            }
        }
        Ok(seq)
    }
}

/// The hand-optimized two-spin sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum Builtin {
    U1_2,
    U2_2,
    U3_2,
    Swap12,
}

impl Builtin {
    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Tt1 => Builtin::U1_2,
            Method::Tt2 => Builtin::U2_2,
            Method::Tt3 => Builtin::U3_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::U1_2 => "U1_2",
            Builtin::U2_2 => "U2_2",
            Builtin::U3_2 => "U3_2",
            Builtin::Swap12 => "SWAP12",
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "U1_2" => Ok(Builtin::U1_2),
            "U2_2" => Ok(Builtin::U2_2),
            "U3_2" => Ok(Builtin::U3_2),
            "SWAP12" | "SWAP" => Ok(Builtin::Swap12),
            _ => Err(Error::UnknownSequence(s.to_string())),
        }
    }
}

pub fn builtin_sequence<T: Scalar>(which: Builtin) -> PulseSequence<T> {
    let pi = T::PI();
    let half = T::FRAC_PI_2();
    let delay = || Pulse::half_j(1, 2);
    let pulses = match which {
        Builtin::Swap12 => vec![
            Pulse::rot(&[1, 2], Axis::X, -half),
            delay(),
            Pulse::rot(&[1, 2], Axis::X, half),
            Pulse::rot(&[1, 2], Axis::Y, -half),
            delay(),
            Pulse::rot(&[1, 2], Axis::Y, half),
        ],
        Builtin::U1_2 => {
            let mut p = vec![Pulse::rot(&[2], Axis::X, pi)];
            p.extend(builtin_sequence::<T>(Builtin::Swap12).pulses);
            p.push(Pulse::rot(&[1], Axis::X, pi));
            p
        }
        Builtin::U2_2 => vec![
            Pulse::rot(&[1], Axis::Y, half),
            delay(),
            Pulse::rot(&[1], Axis::X, -half),
            Pulse::rot(&[2], Axis::X, pi),
        ],
        Builtin::U3_2 => vec![
            Pulse::rot(&[1], Axis::X, pi),
            Pulse::rot(&[1], Axis::Y, half),
            delay(),
            Pulse::rot(&[1], Axis::X, half),
            Pulse::rot(&[2], Axis::X, pi),
        ],
    };
    PulseSequence::new(which.name(), pulses)
}

/// CNOT(control -> target) from local rotations and one `[1/2J]` delay.
pub fn compile_cnot<T: Scalar>(control: usize, target: usize, system: &SpinSystem<T>) -> Result<PulseSequence<T>> {
    let n = system.n();
    if control == target || control == 0 || target == 0 || control > n || target > n {
        return Err(Error::InvalidPulse(format!("bad CNOT pair ({control}, {target})")));
    }
    if system.coupling(control, target) == T::zero() {
        return Err(Error::ZeroCoupling(control, target));
    }
    let half = T::FRAC_PI_2();
    let pulses = vec![
        Pulse::rot(&[target], Axis::Y, half),
        Pulse::half_j(control, target),
        Pulse::rot(&[target], Axis::X, half),
        Pulse::rot(&[target], Axis::Z, -half),
        Pulse::rot(&[control], Axis::Z, half),
    ];
    Ok(PulseSequence::new(format!("CNOT{control}{target}"), pulses).with_reference(format!("cnot {control} {target}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayModel {
    #[default]
    Ideal,
    Realistic,
}

fn ideal_half_j<T: Scalar>(n: usize, a: usize, b: usize) -> CMatrix<T> {
    let quarter = T::FRAC_PI_4();
    let diag: Vec<_> = (0..1usize << n)
        .map(|s| {
            let same = spin_bit(n, a, s) == spin_bit(n, b, s);
            let phase = if same { -quarter } else { quarter };
            Complex::new(T::zero(), phase).exp()
        })
        .collect();
    CMatrix::from_diag(&diag)
}

fn delay_unitary<T: Scalar>(delay: Delay<T>, system: &SpinSystem<T>, model: DelayModel) -> Result<CMatrix<T>> {
    let n = system.n();
    match delay {
        Delay::HalfJ { a, b } => {
            let j = system.coupling(a, b);
            if j == T::zero() {
                return Err(Error::UnboundDelay);
            }
            match model {
                DelayModel::Ideal => Ok(ideal_half_j(n, a, b)),
                DelayModel::Realistic => {
                    let h = build_hamiltonian(system, Frame::Rotating)?;
                    Ok(CMatrix::propagator(&h, T::one() / (T::lit(2.0) * j.abs())))
                }
            }
        }
        Delay::Seconds(t) => {
            let h = build_hamiltonian(system, Frame::Rotating)?;
            Ok(CMatrix::propagator(&h, t))
        }
    }
}

/// Unitary of one pulse; `None` for gradients, which are not unitary.
pub fn pulse_to_unitary<T: Scalar>(
    pulse: &Pulse<T>,
    system: &SpinSystem<T>,
    model: DelayModel,
) -> Result<Option<CMatrix<T>>> {
    let n = system.n();
    pulse.validate(n)?;
    match pulse {
        Pulse::Rotation { targets, axis, angle } => {
            let r = rotation_2x2(*axis, *angle);
            let u = targets
                .iter()
                .fold(CMatrix::identity(1 << n), |acc, &k| embed_single(n, k, &r).matmul(&acc));
            Ok(Some(u))
        }
        Pulse::Delay(d) => delay_unitary(*d, system, model).map(Some),
        Pulse::Gradient(_) => Ok(None),
    }
}

/// Product of all pulse unitaries; fails on gradients.
pub fn sequence_unitary<T: Scalar>(
    seq: &PulseSequence<T>,
    system: &SpinSystem<T>,
    model: DelayModel,
) -> Result<CMatrix<T>> {
    seq.pulses.iter().try_fold(CMatrix::identity(system.dim()), |acc, p| {
        let u = pulse_to_unitary(p, system, model)?
            .ok_or_else(|| Error::InvalidPulse("gradient pulse has no unitary".into()))?;
        Ok(u.matmul(&acc))
    })
}

/// Applies the sequence left to right; gradients crush coherences.
pub fn apply_sequence<T: Scalar>(
    rho: &DeviationMatrix<T>,
    seq: &PulseSequence<T>,
    system: &SpinSystem<T>,
    model: DelayModel,
) -> Result<DeviationMatrix<T>> {
    let n = system.n();
    if rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: rho.dim(),
        });
    }
    seq.pulses.iter().try_fold(rho.clone(), |state, p| {
        p.validate(n)?;
        Ok(match p {
            Pulse::Rotation { targets, axis, angle } => {
                let r = rotation_2x2(*axis, *angle);
                targets
                    .iter()
                    .fold(state, |acc, &k| acc.conjugated(&embed_single(n, k, &r)))
            }
            Pulse::Delay(d) => state.conjugated(&delay_unitary(*d, system, model)?),
            Pulse::Gradient(mode) => gradient_crush(&state, *mode),
        })
    })
}

/// Lowers X/CNOT circuits to pulses. Single-control Toffolis are CNOTs and
/// SWAPs become three CNOTs; larger Toffolis are rejected.
pub fn lower_circuit<T: Scalar>(circuit: &Circuit, system: &SpinSystem<T>) -> Result<PulseSequence<T>> {
    if circuit.n() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: 1 << circuit.n(),
        });
    }
    let mut out = PulseSequence::new("lowered", Vec::new());
    for g in circuit.gates() {
        match g {
            Gate::X(k) => out.pulses.push(Pulse::rot(&[*k], Axis::X, T::PI())),
            Gate::Cnot { control, target } => out = out.then(compile_cnot(*control, *target, system)?),
            Gate::Toffoli { controls, target } if controls.len() == 1 => {
                out = out.then(compile_cnot(controls[0], *target, system)?)
            }
            Gate::Swap(a, b) => {
                for (c, t) in [(*a, *b), (*b, *a), (*a, *b)] {
                    out = out.then(compile_cnot(c, t, system)?);
                }
            }
            other => return Err(Error::UnsupportedGate(other.to_string())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_to_unitary;
    use crate::spin::{thermal_deviation, ProductOperator};

    fn coupled() -> SpinSystem<f64> {
        SpinSystem::new(vec![1.0, 4.0])
            .unwrap()
            .with_shifts(vec![35.0, -12.0])
            .unwrap()
            .with_coupling(1, 2, 215.0)
            .unwrap()
    }

    fn cnot_matrix(control: usize, target: usize) -> CMatrix<f64> {
        let c = Circuit::new(2, vec![Gate::Cnot { control, target }]).unwrap();
        circuit_to_unitary(&c).to_complex()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn pi_x_rotation_is_minus_i_sigma_x() {
        let s = SpinSystem::new(vec![1.0]).unwrap();
        let u = pulse_to_unitary(&Pulse::rot(&[1], Axis::X, std::f64::consts::PI), &s, DelayModel::Ideal)
            .unwrap()
            .unwrap();
        let want = CMatrix::from_rows(&[vec![c(0., 0.), c(0., -1.)], vec![c(0., -1.), c(0., 0.)]]);
        assert!(u.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn ideal_half_j_phases() {
        let u = pulse_to_unitary(&Pulse::half_j(1, 2), &coupled(), DelayModel::Ideal).unwrap().unwrap();
        let e = Complex::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let want = CMatrix::from_diag(&[e, e.conj(), e.conj(), e]);
        assert!(u.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn two_spin_rotation_is_tensor_square() {
        let r = rotation_2x2::<f64>(Axis::Y, std::f64::consts::FRAC_PI_2);
        let u = pulse_to_unitary(&Pulse::rot(&[1, 2], Axis::Y, std::f64::consts::FRAC_PI_2), &coupled(), DelayModel::Ideal)
            .unwrap()
            .unwrap();
        assert!(u.max_abs_diff(&r.kron(&r)) < 1e-15);
    }

    #[test]
    fn rotation_closed_form_matches_expm() {
        for axis in [Axis::X, Axis::Y, Axis::Z, Axis::MinusX, Axis::MinusY, Axis::MinusZ] {
            let (sign, base) = axis.sign_and_base();
            let g = match base {
                'x' => crate::spin::SpinOp::X,
                'y' => crate::spin::SpinOp::Y,
                _ => crate::spin::SpinOp::Z,
            }
            .matrix::<f64>()
            .scale_real(sign);
            let theta = 1.234;
            let want = CMatrix::propagator(&g, theta);
            assert!(rotation_2x2(axis, theta).max_abs_diff(&want) < 1e-13, "{axis}");
            assert!(rotation_2x2(axis, theta).unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn builtin_shapes() {
        let u2 = builtin_sequence::<f64>(Builtin::U2_2);
        assert_eq!(u2.len(), 4);
        assert_eq!(u2.to_text(), "name U2_2\nrot 1 y pi/2\ndelay 1/2J 1 2\nrot 1 x -pi/2\nrot 2 x pi\n");
        let u3 = builtin_sequence::<f64>(Builtin::U3_2);
        assert_eq!(
            u3.to_text(),
            "name U3_2\nrot 1 x pi\nrot 1 y pi/2\ndelay 1/2J 1 2\nrot 1 x pi/2\nrot 2 x pi\n"
        );
        let swap = builtin_sequence::<f64>(Builtin::Swap12);
        assert_eq!(swap.len(), 6);
        let delays = swap.pulses.iter().filter(|p| matches!(p, Pulse::Delay(_))).count();
        assert_eq!(delays, 2);
        assert!(matches!("U9_2".parse::<Builtin>(), Err(Error::UnknownSequence(_))));
    }

    #[test]
    fn swap_sequence_is_swap_up_to_phases_on_populations() {
        let s = coupled();
        let swap = builtin_sequence(Builtin::Swap12);
        let rho = thermal_deviation(&s).unwrap();
        let out = apply_sequence(&rho, &swap, &s, DelayModel::Ideal).unwrap();
        assert!(out.max_abs_diff(&DeviationMatrix::from_real_diag(2, &[2.5, 1.5, -1.5, -2.5]).unwrap()) < 1e-12);
    }

    #[test]
    fn builtin_sequences_reproduce_turn_two_diagonals() {
        let s = coupled();
        let th = thermal_deviation(&s).unwrap();
        let iz1 = DeviationMatrix::from_product_operator(&ProductOperator::single(2, 1, crate::spin::SpinOp::Z), 1.0);
        let cases = [
            (Builtin::U1_2, &th, [2.5, 1.5, -1.5, -2.5]),
            (Builtin::U2_2, &th, [-1.5, 1.5, -2.5, 2.5]),
            (Builtin::U3_2, &iz1, [0.5, -0.5, -0.5, 0.5]),
        ];
        for (b, rho, want) in cases {
            let out = apply_sequence(rho, &builtin_sequence(b), &s, DelayModel::Ideal).unwrap();
            for (got, w) in out.real_diag().iter().zip(want) {
                assert!((got - w).abs() < 1e-8, "{}: {got} vs {w}", b.name());
            }
        }
    }

    #[test]
    fn compiled_cnot_matches_gate_up_to_phase() {
        let s = coupled();
        for (a, b) in [(1, 2), (2, 1)] {
            let u = sequence_unitary(&compile_cnot(a, b, &s).unwrap(), &s, DelayModel::Ideal).unwrap();
            assert!(u.phase_distance(&cnot_matrix(a, b)) < 1e-10);
            let twice = u.matmul(&u);
            assert!(twice.phase_distance(&CMatrix::identity(4)) < 1e-10);
        }
    }

    #[test]
    fn compile_cnot_needs_coupling() {
        let s = SpinSystem::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(compile_cnot(1, 2, &s).unwrap_err(), Error::ZeroCoupling(1, 2));
    }

    #[test]
    fn realistic_delay_differs_when_shifts_present() {
        let s = coupled();
        let seq = compile_cnot(1, 2, &s).unwrap();
        let ideal = sequence_unitary(&seq, &s, DelayModel::Ideal).unwrap();
        let real = sequence_unitary(&seq, &s, DelayModel::Realistic).unwrap();
        assert!(real.phase_distance(&ideal) > 1e-3);
        let on_res = SpinSystem::new(vec![1.0, 4.0]).unwrap().with_coupling(1, 2, 215.0).unwrap();
        let ideal = sequence_unitary(&seq, &on_res, DelayModel::Ideal).unwrap();
        let real = sequence_unitary(&seq, &on_res, DelayModel::Realistic).unwrap();
        assert!(real.phase_distance(&ideal) < 1e-10);
    }

    #[test]
    fn lowering_preserves_population_action() {
        let s = coupled();
        let circuit = Circuit::new(2, vec![Gate::X(2), Gate::Cnot { control: 1, target: 2 }]).unwrap();
        let seq = lower_circuit(&circuit, &s).unwrap();
        let perm = circuit.induced_permutation();
        for b in 0..4 {
            let mut pops = [0.0; 4];
            pops[b] = 1.0;
            let rho = DeviationMatrix::from_real_diag(2, &pops).unwrap();
            let out = apply_sequence(&rho, &seq, &s, DelayModel::Ideal).unwrap();
            let mut want = [0.0; 4];
            want[perm.image(b)] = 1.0;
            let want = DeviationMatrix::from_real_diag(2, &want).unwrap();
            assert!(out.max_abs_diff(&want) < 1e-8);
        }
        let x_only = lower_circuit(&Circuit::new(2, vec![Gate::X(2)]).unwrap(), &s).unwrap();
        assert_eq!(x_only.pulses, vec![Pulse::rot(&[2], Axis::X, std::f64::consts::PI)]);
    }

    #[test]
    fn lowering_rejects_multi_control_toffoli() {
        let s = SpinSystem::new(vec![1.0; 3]).unwrap();
        let c = Circuit::new(
            3,
            vec![Gate::Toffoli {
                controls: vec![2, 3],
                target: 1,
            }],
        )
        .unwrap();
        assert!(matches!(lower_circuit(&c, &s), Err(Error::UnsupportedGate(_))));
    }

    #[test]
    fn unbound_delay_rejected() {
        let s = SpinSystem::new(vec![1.0, 1.0]).unwrap();
        let rho = thermal_deviation(&s).unwrap();
        let seq = PulseSequence::new("d", vec![Pulse::half_j(1, 2)]);
        assert_eq!(apply_sequence(&rho, &seq, &s, DelayModel::Ideal).unwrap_err(), Error::UnboundDelay);
        let seq = PulseSequence::new("d", vec![Pulse::half_j(1, 3)]);
        assert_eq!(apply_sequence(&rho, &seq, &coupled(), DelayModel::Ideal).unwrap_err(), Error::UnboundDelay);
    }

    #[test]
    fn text_format_round_trip() {
        let mut seq = builtin_sequence::<f64>(Builtin::U1_2);
        seq.pulses.push(Pulse::Gradient(CrushMode::DiagonalOnly));
        seq.pulses.push(Pulse::Delay(Delay::Seconds(0.0025)));
        seq.pulses.push(Pulse::rot(&[1], Axis::MinusZ, 0.3));
        let text = seq.to_text();
        assert_eq!(PulseSequence::<f64>::parse(&text).unwrap(), seq);
        assert!(text.contains("grad diagonal-only"));
        assert_eq!(format_angle(3.0 * std::f64::consts::FRAC_PI_2), "3pi/2");
        assert_eq!(parse_angle("-3pi/4"), Some(-3.0 * std::f64::consts::FRAC_PI_4));
    }
}
