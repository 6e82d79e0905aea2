//! Self-check suite: two-turn sum identities, circuit equivalences and
//! two-spin pulse sequences, with an optional injected fault.

use std::fmt::Write;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{circuit_for_method, verify_circuit, GateCounts};
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::pps::{
    apply_turn_two, build_permutation, permutation_to_unitary, populations, prepare_input, target_pps, Method,
    PermutationSpec,
};
use crate::pulse::{apply_sequence, builtin_sequence, compile_cnot, sequence_unitary, Builtin, DelayModel};
use crate::spin::SpinSystem;

/// Matrix-route tolerance for every check.
pub const MATRIX_TOL: f64 = 1e-10;
/// Pulse-route tolerance on population diagonals.
pub const PULSE_TOL: f64 = 1e-8;
/// Seed of the randomized gyromagnetic ratios.
pub const GAMMA_SEED: u64 = 0x5eed;

/// Swaps two images of one method's permutation before checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub method: Method,
    pub n: usize,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub sum_spins: std::ops::RangeInclusive<usize>,
    pub circuit_spins: std::ops::RangeInclusive<usize>,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            sum_spins: 2..=8,
            circuit_spins: 2..=6,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: &'static str,
    pub method: Option<Method>,
    pub n: usize,
    pub residual: f64,
    pub detail: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| !o.passed)
    }

    /// CSV body followed by a one-line verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::from("check,method,n,residual,status,detail\n");
        for o in &self.outcomes {
            let method = o.method.map_or_else(|| "-".to_string(), |m| m.to_string());
            let status = if o.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{},{method},{},{:e},{status},{}", o.check, o.n, o.residual, o.detail);
        }
        match self.first_failure() {
            None => {
                let _ = writeln!(out, "# all {} checks passed", self.outcomes.len());
            }
            Some(f) => {
                let method = f.method.map_or_else(|| "-".to_string(), |m| m.to_string());
                let _ = writeln!(out, "# FAILED {} {method} n={}: {}", f.check, f.n, f.detail);
            }
        }
        out
    }
}

/// Unit ratios, `1..=n`, and a seeded signed draw in `[0.1, 5]`.
pub fn gamma_vectors(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let random = (0..n)
        .map(|_| {
            let g: f64 = rng.random_range(0.1..5.0);
            if rng.random_bool(0.5) {
                -g
            } else {
                g
            }
        })
        .collect();
    vec![vec![1.0; n], (1..=n).map(|k| k as f64).collect(), random]
}

fn spec_for(method: Method, n: usize, fault: Option<Fault>) -> Result<PermutationSpec> {
    let mut spec = build_permutation(method, n)?;
    if let Some(f) = fault.filter(|f| f.method == method && f.n == n) {
        spec.corrupt(f.a, f.b);
    }
    Ok(spec)
}

fn sum_identity(method: Method, n: usize, spec: &PermutationSpec) -> Result<CheckOutcome> {
    let u = permutation_to_unitary::<f64>(spec);
    let mut residual = 0.0_f64;
    let mut detail = String::from("ok");
    for gamma in gamma_vectors(n, GAMMA_SEED) {
        let system = SpinSystem::new(gamma)?;
        let rho_in = prepare_input(method, &system)?;
        let sum = rho_in.add(&apply_turn_two(&rho_in, &u)?)?;
        let diff = sum.sub(&target_pps(method, &system)?)?;
        let r = diff.matrix().max_abs();
        if r > residual {
            residual = r;
            let worst = (0..diff.dim())
                .find(|&i| diff.matrix()[(i, i)].norm() > MATRIX_TOL)
                .unwrap_or(0);
            detail = format!("first mismatch at basis index {worst}");
        }
    }
    let exact: Vec<Ratio<i64>> = (1..=n as i64).map(Ratio::from_integer).collect();
    if let Some(i) = populations::sum_identity_mismatch(method, &exact, spec) {
        if residual <= MATRIX_TOL {
            detail = format!("exact route mismatch at basis index {i}");
        }
        residual = residual.max(1.0);
    }
    Ok(CheckOutcome {
        check: "sum-identity",
        method: Some(method),
        n,
        residual,
        passed: residual <= MATRIX_TOL,
        detail,
    })
}

fn circuit_equivalence(method: Method, n: usize, spec: &PermutationSpec) -> Result<CheckOutcome> {
    let circuit = circuit_for_method(method, n)?;
    let check = verify_circuit(&circuit, spec)?;
    let counts = circuit.gate_counts();
    let mut detail = format!("{check}; gates {counts}");
    if method == Method::Tt1 {
        let within = counts == GateCounts::tt1_budget(n);
        let _ = write!(detail, "; budget {}", if within { "met" } else { "exceeded" });
    }
    Ok(CheckOutcome {
        check: "circuit",
        method: Some(method),
        n,
        residual: if check.equal { 0.0 } else { 1.0 },
        passed: check.equal,
        detail,
    })
}

fn pulse_population(method: Method, spec: &PermutationSpec) -> Result<CheckOutcome> {
    let system = SpinSystem::<f64>::new(vec![1.0, 4.0])?.with_coupling(1, 2, 215.0)?;
    let rho_in = prepare_input(method, &system)?;
    let want = apply_turn_two(&rho_in, &permutation_to_unitary::<f64>(spec))?;
    let got = apply_sequence(&rho_in, &builtin_sequence(Builtin::for_method(method)), &system, DelayModel::Ideal)?;
    let residual = got
        .real_diag()
        .iter()
        .zip(want.real_diag())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(CheckOutcome {
        check: "pulse-sequence",
        method: Some(method),
        n: 2,
        residual,
        passed: residual <= PULSE_TOL,
        detail: format!("{} diagonal vs permutation", Builtin::for_method(method).name()),
    })
}

fn compiled_cnot(control: usize, target: usize) -> Result<CheckOutcome> {
    let system = SpinSystem::<f64>::new(vec![1.0, 4.0])?.with_coupling(1, 2, 215.0)?;
    let u = sequence_unitary(&compile_cnot(control, target, &system)?, &system, DelayModel::Ideal)?;
    let gate = circuit_for_cnot(control, target)?;
    let residual = u.phase_distance(&gate);
    Ok(CheckOutcome {
        check: "compiled-cnot",
        method: None,
        n: 2,
        residual,
        passed: residual <= MATRIX_TOL,
        detail: format!("cnot {control}->{target} up to global phase"),
    })
}

fn circuit_for_cnot(control: usize, target: usize) -> Result<CMatrix<f64>> {
    let c = crate::circuit::Circuit::new(2, vec![crate::circuit::Gate::Cnot { control, target }])?;
    Ok(crate::circuit::circuit_to_unitary(&c).to_complex())
}

pub fn run_verify(options: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for method in Method::ALL {
        for n in options.sum_spins.clone() {
            let spec = spec_for(method, n, options.fault)?;
            report.outcomes.push(sum_identity(method, n, &spec)?);
        }
    }
    for method in Method::ALL {
        for n in options.circuit_spins.clone() {
            let spec = spec_for(method, n, options.fault)?;
            report.outcomes.push(circuit_equivalence(method, n, &spec)?);
        }
    }
    for method in Method::ALL {
        let spec = spec_for(method, 2, options.fault)?;
        report.outcomes.push(pulse_population(method, &spec)?);
    }
    report.outcomes.push(compiled_cnot(1, 2)?);
    report.outcomes.push(compiled_cnot(2, 1)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyOptions {
        VerifyOptions {
            sum_spins: 2..=4,
            circuit_spins: 2..=4,
            fault: None,
        }
    }

    #[test]
    fn clean_run_passes() {
        let report = run_verify(&small()).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        assert!(report.outcomes.iter().all(|o| o.residual < MATRIX_TOL || o.check == "pulse-sequence"));
    }

    #[test]
    fn injected_fault_names_method_size_and_index() {
        let opts = VerifyOptions {
            fault: Some(Fault {
                method: Method::Tt2,
                n: 3,
                a: 2,
                b: 5,
            }),
            ..small()
        };
        let report = run_verify(&opts).unwrap();
        let f = report.first_failure().unwrap();
        assert_eq!((f.check, f.method, f.n), ("sum-identity", Some(Method::Tt2), 3));
        assert!(f.detail.contains("index"), "{}", f.detail);
        assert!(report.to_text().contains("# FAILED sum-identity LPPS-TT2 n=3"));
    }

    #[test]
    fn gammas_are_reproducible() {
        assert_eq!(gamma_vectors(5, 1), gamma_vectors(5, 1));
        assert!(gamma_vectors(5, 1)[2].iter().all(|g| g.abs() >= 0.1 && g.abs() < 5.0));
    }
}
