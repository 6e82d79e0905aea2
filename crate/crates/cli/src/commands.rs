use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nmr_pps::export::{matrix_csv, num};
use nmr_pps::pps::comparison_table;
use nmr_pps::spectrometer::{
    cross_check, default_duration, default_dt, fid_to_spectrum, peak_table, readout_pulse, resolution,
    simulate_fid, species_tables, Apodization, PeakTable,
};
use nmr_pps::spin::thermal_deviation;
use nmr_pps::tomography::{
    add_noise, completed_pulse_set, fidelity, pulse_set, records_csv, simulate_readouts, Reconstructor,
};
use nmr_pps::verify::{run_verify, VerifyOptions};
use nmr_pps::{
    circuit_for_method, parse_molecule, prepare_pps, Axis, DeviationMatrix, Error, Method, PpsResult, Realization,
    SpinSystem,
};

use super::{CompareArgs, PrepareArgs, PulseSetChoice, SpectrumArgs, StateChoice, TomographyArgs, VerifyArgs};

/// Residual above which a prepared state counts as wrong.
const PREPARE_TOL: f64 = 1e-8;
/// Relative cut below which a line counts as absent.
const LINE_CUT: f64 = 1e-10;

#[derive(Debug)]
pub enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RankDeficient { .. }
            | Error::NotUnitary(_)
            | Error::NotHermitian(_)
            | Error::ZeroNorm
            | Error::InvalidPermutation(_)
            | Error::InvalidCircuit(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<SpinSystem<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read molecule file {}: {e}", path.display())))?;
    parse_molecule(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn prepare(args: PrepareArgs) -> Outcome {
    let system = load(&args.molecule.molecule)?;
    let result = prepare_pps(args.method, &system, args.realization)?;
    let out = &args.out;
    write(out, "rho_in.csv", &matrix_csv(result.rho_in.matrix()))?;
    write(out, "rho_u.csv", &matrix_csv(result.rho_u.matrix()))?;
    write(out, "rho_sum.csv", &matrix_csv(result.rho_sum.matrix()))?;
    write(out, "target.csv", &matrix_csv(result.target.matrix()))?;

    let passed = result.max_abs_residual <= PREPARE_TOL;
    let row = args.method.table_row();
    let mut report = format!(
        "method {}\nrealization {}\nspins {}\nmax_abs_residual {:e}\nturns {}\ngradients {}\nancillas {}\n",
        args.method,
        args.realization,
        system.n(),
        result.max_abs_residual,
        row.turns,
        row.gradients,
        row.ancillas
    );
    if args.realization == Realization::Circuit {
        let counts = circuit_for_method(args.method, system.n())?.gate_counts();
        let _ = writeln!(report, "gate_counts {counts}");
    }
    let _ = writeln!(report, "status {}", if passed { "PASS" } else { "FAIL" });
    write(out, "report.txt", &report)?;
    print!("{report}");
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "residual {:e} exceeds {PREPARE_TOL:e}",
            result.max_abs_residual
        )))
    }
}

fn prepared(method: Option<Method>, system: &SpinSystem<f64>, realization: Realization) -> Result<PpsResult<f64>, Failure> {
    let method = method.ok_or_else(|| Failure::Usage("--method is required for this state".into()))?;
    Ok(prepare_pps(method, system, realization)?)
}

pub fn spectrum(args: SpectrumArgs) -> Outcome {
    let system = load(&args.molecule.molecule)?;
    let n = system.n();
    if args.spin == 0 || args.spin > n {
        return Err(Failure::Usage(format!("--spin must be in 1..={n}")));
    }
    for (name, v) in [("--dt", args.dt), ("--duration", args.duration)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Failure::Usage(format!("{name} must be positive")));
            }
        }
    }
    if !(args.apodize >= 0.0) || !args.apodize.is_finite() {
        return Err(Failure::Usage("--apodize must be non-negative".into()));
    }
    if args.zero_fill == 0 {
        return Err(Failure::Usage("--zero-fill must be at least 1".into()));
    }
    let state: DeviationMatrix<f64> = match args.state {
        StateChoice::Thermal => thermal_deviation(&system)?,
        StateChoice::In => prepared(args.method, &system, args.realization)?.rho_in,
        StateChoice::U => prepared(args.method, &system, args.realization)?.rho_u,
        StateChoice::Sum => prepared(args.method, &system, args.realization)?.rho_sum,
    };
    let rho = readout_pulse(&state, args.spin, Axis::Y, FRAC_PI_2, &system)?;
    let species = system.species()[args.spin - 1].clone();
    let dt = match args.dt {
        Some(dt) => dt,
        None => default_dt(&system, &species)?,
    };
    let duration = match args.duration {
        Some(d) => d,
        None => default_duration(&system, &species, dt)?,
    };
    let fid = simulate_fid(&rho, &system, &species, duration, dt)?;
    let apodization = if args.apodize > 0.0 {
        Apodization::Exponential(PI * args.apodize)
    } else {
        Apodization::None
    };
    let spec = fid_to_spectrum(&fid, args.zero_fill, apodization)?;
    let tables = species_tables(&rho, &system, &species)?;
    let check = cross_check(&tables, &spec, resolution(&system, &species, &spec, apodization)?);
    let observed = peak_table(&rho, &system, args.spin)?;
    let visible = observed.visible(LINE_CUT).len();
    let (table_sum, fid_sum) = check.summed_magnitudes();

    let out = &args.out;
    write(out, "fid.csv", &fid.to_csv())?;
    write(out, "spectrum.csv", &spec.to_csv())?;
    write(out, "peaks.csv", &PeakTable::to_csv(&tables))?;
    let report = format!(
        "species {species}\nspin {}\nstate {}\ndt {}\nduration {}\nsamples {}\nzero_fill {}\napodize_hz {}\n\
         visible_lines {visible} of {}\nsummed_magnitude_table {}\nsummed_magnitude_fid {}\ncross_check_relative_error {}\n",
        args.spin,
        match args.state {
            StateChoice::Thermal => "thermal",
            StateChoice::In => "rho_in",
            StateChoice::U => "rho_u",
            StateChoice::Sum => "rho_sum",
        },
        num(dt),
        num(duration),
        fid.samples.len(),
        args.zero_fill,
        num(args.apodize),
        observed.peaks.len(),
        num(table_sum),
        num(fid_sum),
        num(check.relative_error()),
    );
    write(out, "report.txt", &report)?;
    print!("{report}");
    Ok(())
}

pub fn tomography(args: TomographyArgs) -> Outcome {
    let system = load(&args.molecule.molecule)?;
    let n = system.n();
    if !(args.noise >= 0.0) || !args.noise.is_finite() {
        return Err(Failure::Usage("--noise must be non-negative".into()));
    }
    let set = match args.pulse_set {
        PulseSetChoice::Published => pulse_set(n)?,
        PulseSetChoice::Complete => completed_pulse_set(n)?,
    };
    let result = prepare_pps(args.method, &system, args.realization)?;
    let reconstructor = Reconstructor::new(&set)?;
    let mut report = format!(
        "method {}\npulse_set {} ({} pulses)\nrank {} of {}\nnoise {}\nseed {}\n",
        args.method,
        match args.pulse_set {
            PulseSetChoice::Published => "published",
            PulseSetChoice::Complete => "complete",
        },
        set.len(),
        reconstructor.rank(),
        reconstructor.unknowns(),
        num(args.noise),
        args.seed
    );
    let mut records_out = String::new();
    let mut sigma_out = String::from("state,row,col,real,imag\n");
    let states = [("rho_in", &result.rho_in), ("rho_u", &result.rho_u), ("rho_sum", &result.rho_sum)];
    let mut failure = None;
    for (i, (name, rho)) in states.into_iter().enumerate() {
        let clean = simulate_readouts(rho, &system, &set)?;
        let records = add_noise(&clean, args.noise, args.seed.wrapping_add(i as u64))?;
        for (j, line) in records_csv(&records).lines().enumerate() {
            if j == 0 && i == 0 {
                let _ = writeln!(records_out, "state,{line}");
            } else if j > 0 {
                let _ = writeln!(records_out, "{name},{line}");
            }
        }
        match reconstructor.reconstruct(&records) {
            Ok(r) => {
                let f = fidelity(rho, &r.sigma)?;
                let _ = writeln!(report, "{name} residual {} fidelity {}", num(r.residual), num(f));
                for line in matrix_csv(r.sigma.matrix()).lines().skip(1) {
                    let _ = writeln!(sigma_out, "{name},{line}");
                }
            }
            Err(e) => {
                let _ = writeln!(report, "{name} reconstruction failed: {e}");
                failure.get_or_insert(e);
            }
        }
    }
    let out = &args.out;
    write(out, "records.csv", &records_out)?;
    write(out, "sigma.csv", &sigma_out)?;
    write(out, "report.txt", &report)?;
    print!("{report}");
    match failure {
        None => Ok(()),
        Some(e) => Err(e.into()),
    }
}

pub fn verify(args: VerifyArgs) -> Outcome {
    let options = VerifyOptions {
        fault: args.inject_fault,
        ..VerifyOptions::default()
    };
    let report = run_verify(&options)?;
    let text = report.to_text();
    if let Some(out) = &args.out {
        write(out, "report.txt", &text)?;
    }
    print!("{text}");
    match report.first_failure() {
        None => Ok(()),
        Some(f) => Err(Failure::Check(format!(
            "{} {} n={}: {}",
            f.check,
            f.method.map_or_else(|| "-".to_string(), |m| m.to_string()),
            f.n,
            f.detail
        ))),
    }
}

pub fn compare(args: CompareArgs) -> Outcome {
    let mut text = String::from("method,turns,gradients,ancillas\n");
    for row in comparison_table() {
        let _ = writeln!(text, "{},{},{},{}", row.method, row.turns, row.gradients, row.ancillas);
    }
    if let Some(path) = &args.molecule {
        let system = load(path)?;
        let thermal = readout_pulse(&thermal_deviation(&system)?, 1, Axis::Y, FRAC_PI_2, &system)?;
        let base = peak_table(&thermal, &system, 1)?.summed_magnitude();
        text.push_str("\nmethod,spins,max_abs_residual,ancilla_lines,ancilla_signal_vs_thermal\n");
        for method in Method::ALL {
            let result = prepare_pps(method, &system, Realization::Matrix)?;
            let rho = readout_pulse(&result.rho_sum, 1, Axis::Y, FRAC_PI_2, &system)?;
            let table = peak_table(&rho, &system, 1)?;
            let _ = writeln!(
                text,
                "{method},{},{:e},{},{}",
                system.n(),
                result.max_abs_residual,
                table.visible(LINE_CUT).len(),
                num(table.summed_magnitude() / base)
            );
        }
    }
    if let Some(out) = &args.out {
        write(out, "compare.csv", &text)?;
    }
    print!("{text}");
    Ok(())
}
