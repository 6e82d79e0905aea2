//! Fidelity distribution of noisy four-spin reconstructions, used to pin the
//! Monte Carlo threshold in `fixtures/noise_pilot.txt`.

use nmr_pps::pps::{prepare_pps, Method, Realization};
use nmr_pps::spin::SpinSystem;
use nmr_pps::tomography::{completed_pulse_set, monte_carlo, pulse_set, Reconstructor};

fn main() {
    let system = SpinSystem::new(vec![1.0, 1.0, 1.0, 1.0]).expect("system");
    let published = Reconstructor::<f64>::new(&pulse_set(4).expect("set")).expect("design");
    println!("published set: rank {} of {}", published.rank(), published.unknowns());
    println!("unresolved: {}", published.unresolved().join(" "));
    let completed = Reconstructor::<f64>::new(&completed_pulse_set(4).expect("set")).expect("design");
    println!("completed set: rank {} of {}", completed.rank(), completed.unknowns());
    for method in Method::ALL {
        let result = prepare_pps(method, &system, Realization::Matrix).expect("prepare");
        for (name, rho) in [("rho_in", &result.rho_in), ("rho_u", &result.rho_u), ("rho_sum", &result.rho_sum)] {
            for sigma in [0.01, 0.02, 0.05, 0.1] {
                let mut f = monte_carlo(&completed, rho, &system, sigma, 0..100).expect("monte carlo");
                f.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let pass = f.iter().filter(|&&x| x >= 0.95).count();
                println!(
                    "{method} {name} noise {sigma}: min {:.4} p10 {:.4} median {:.4} pass(>=0.95) {pass}/100",
                    f[0], f[10], f[50]
                );
            }
        }
    }
}
