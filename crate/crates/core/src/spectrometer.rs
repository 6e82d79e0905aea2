//! Simulated readout: selective pulses, peak tables, FIDs and spectra.
//!
//! The amplitude of spin `k`'s line at partner configuration `c` is
//! `Tr(rho I_+^k)` restricted to that configuration, i.e. the element
//! `rho[(k=1, c), (k=0, c)]`. A `[pi/2]_y` readout of `+I_z` gives `+1/2`.
//!
//! Sign conventions: the FID of a line is `A exp(-i 2 pi f t)` and the
//! spectrum uses the `exp(+i 2 pi f t)` kernel, so chemical shifts appear at
//! `+nu` and a line sits at `nu_k - sum_j J_kj m_j`. A partner in `|0>`
//! (`m = +1/2`) therefore moves the line down by `J/2`.

use std::fmt::Write;

use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::export::num;
use crate::pulse::{apply_sequence, Axis, DelayModel, Pulse, PulseSequence};
use crate::scalar::Scalar;
use crate::spin::{build_hamiltonian, mz, spin_bit, spin_mask, DeviationMatrix, Frame, SpinSystem};

/// Spin-selective hard rotation applied before acquisition.
pub fn readout_pulse<T: Scalar>(
    rho: &DeviationMatrix<T>,
    spin: usize,
    axis: Axis,
    angle: T,
    system: &SpinSystem<T>,
) -> Result<DeviationMatrix<T>> {
    let seq = PulseSequence::new("readout", vec![Pulse::rot(&[spin], axis, angle)]);
    apply_sequence(rho, &seq, system, DelayModel::Ideal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak<T> {
    pub spin: usize,
    /// Basis index of the lower state, whose spin-`k` bit is 0.
    pub configuration: usize,
    /// Partner bits, spin 1 first, with `*` at the observed spin.
    pub label: String,
    pub frequency: T,
    pub amplitude: Complex<T>,
}

/// The `2^{n-1}` transitions of one spin.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakTable<T> {
    pub spin: usize,
    pub peaks: Vec<Peak<T>>,
}

impl<T: Scalar> PeakTable<T> {
    pub fn summed_magnitude(&self) -> T {
        self.peaks.iter().fold(T::zero(), |acc, p| acc + p.amplitude.norm())
    }

    pub fn max_magnitude(&self) -> T {
        self.peaks.iter().fold(T::zero(), |acc, p| acc.max(p.amplitude.norm()))
    }

    /// Lines above `rel` times the strongest line.
    pub fn visible(&self, rel: T) -> Vec<&Peak<T>> {
        let cut = rel * self.max_magnitude();
        self.peaks
            .iter()
            .filter(|p| p.amplitude.norm() > cut && p.amplitude.norm() > T::zero())
            .collect()
    }

    pub fn to_csv(tables: &[PeakTable<T>]) -> String {
        let mut out = String::from("spin,partners,frequency_hz,real,imag\n");
        for t in tables {
            for p in &t.peaks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.spin,
                    p.label,
                    num(p.frequency),
                    num(p.amplitude.re),
                    num(p.amplitude.im)
                );
            }
        }
        out
    }
}

fn partner_label(n: usize, spin: usize, configuration: usize) -> String {
    (1..=n)
        .map(|j| match (j == spin, spin_bit(n, j, configuration)) {
            (true, _) => '*',
            (false, 0) => '0',
            _ => '1',
        })
        .collect()
}

fn check_spin(n: usize, spin: usize) -> Result<()> {
    if spin == 0 || spin > n {
        return Err(Error::InvalidSpectral(format!("spin {spin} outside 1..={n}")));
    }
    Ok(())
}

/// Direct transition table; frequency from the multiplet formula.
pub fn peak_table<T: Scalar>(rho: &DeviationMatrix<T>, system: &SpinSystem<T>, spin: usize) -> Result<PeakTable<T>> {
    let n = system.n();
    check_spin(n, spin)?;
    if rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: rho.dim(),
        });
    }
    let mask = spin_mask(n, spin);
    let m = rho.matrix();
    let peaks = (0..1usize << n)
        .filter(|c| c & mask == 0)
        .map(|c| {
            let shift = (1..=n)
                .filter(|&j| j != spin)
                .fold(T::zero(), |acc, j| acc + system.coupling(spin, j) * mz::<T>(n, j, c));
            Peak {
                spin,
                configuration: c,
                label: partner_label(n, spin, c),
                frequency: system.shifts()[spin - 1] - shift,
                amplitude: m[(c | mask, c)],
            }
        })
        .collect();
    Ok(PeakTable { spin, peaks })
}

/// Peak tables for every spin of a species.
pub fn species_tables<T: Scalar>(
    rho: &DeviationMatrix<T>,
    system: &SpinSystem<T>,
    species: &str,
) -> Result<Vec<PeakTable<T>>> {
    observed_spins(system, species)?
        .into_iter()
        .map(|k| peak_table(rho, system, k))
        .collect()
}

fn observed_spins<T: Scalar>(system: &SpinSystem<T>, species: &str) -> Result<Vec<usize>> {
    let spins = system.spins_of_species(species);
    if spins.is_empty() {
        return Err(Error::InvalidSpectral(format!("no spins of species `{species}`")));
    }
    Ok(spins)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fid<T> {
    pub dt: T,
    pub samples: Vec<Complex<T>>,
    pub species: String,
}

impl<T: Scalar> Fid<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,real,imag\n");
        for (i, s) in self.samples.iter().enumerate() {
            let t = self.dt * T::lit(i as f64);
            let _ = writeln!(out, "{},{},{}", num(t), num(s.re), num(s.im));
        }
        out
    }

    /// `sum |s|^2 dt`.
    pub fn energy(&self) -> T {
        self.samples.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr()) * self.dt
    }
}

/// Largest `|f|` any line of the species can reach.
pub fn spectral_extent<T: Scalar>(system: &SpinSystem<T>, species: &str) -> Result<T> {
    let n = system.n();
    Ok(observed_spins(system, species)?
        .into_iter()
        .map(|k| {
            let spread = (1..=n)
                .filter(|&j| j != k)
                .fold(T::zero(), |acc, j| acc + system.coupling(k, j).abs());
            system.shifts()[k - 1].abs() + spread / T::lit(2.0)
        })
        .fold(T::zero(), T::max))
}

/// Sampling interval leaving a 2x margin over the Nyquist limit.
pub fn default_dt<T: Scalar>(system: &SpinSystem<T>, species: &str) -> Result<T> {
    let extent = spectral_extent(system, species)?;
    Ok(T::one() / (T::lit(4.0) * (extent + T::lit(10.0))))
}

/// Six times the longest T2 of the species, or one second without decay,
/// capped at `2^18` samples.
pub fn default_duration<T: Scalar>(system: &SpinSystem<T>, species: &str, dt: T) -> Result<T> {
    let longest = observed_spins(system, species)?
        .into_iter()
        .map(|k| system.t2()[k - 1])
        .fold(T::zero(), T::max);
    let wanted = if longest.is_finite() { T::lit(6.0) * longest } else { T::one() };
    Ok(wanted.min(dt * T::lit((1u64 << 18) as f64)))
}

const MAX_SAMPLES: usize = 1 << 22;

/// Free induction decay of the observed species: `rho(t)` under the secular
/// Hamiltonian, detected with `sum_k I_+^k`, damped by each spin's T2.
pub fn simulate_fid<T: Scalar>(
    rho: &DeviationMatrix<T>,
    system: &SpinSystem<T>,
    species: &str,
    duration: T,
    dt: T,
) -> Result<Fid<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidSpectral("dt must be positive".into()));
    }
    if !(duration > T::zero()) || !duration.is_finite() {
        return Err(Error::InvalidSpectral("duration must be positive".into()));
    }
    let count = (duration / dt).floor().to_usize().unwrap_or(usize::MAX).max(1);
    if count > MAX_SAMPLES {
        return Err(Error::InvalidSpectral(format!("{count} samples exceeds {MAX_SAMPLES}")));
    }
    let n = system.n();
    if rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: rho.dim(),
        });
    }
    let energies = build_hamiltonian(system, Frame::Rotating)?.real_diag();
    let nyquist = T::one() / (T::lit(2.0) * dt);
    let m = rho.matrix();
    let mut samples = vec![Complex::new(T::zero(), T::zero()); count];
    for k in observed_spins(system, species)? {
        let mask = spin_mask(n, k);
        let rate = T::one() / system.t2()[k - 1];
        for c in (0..1usize << n).filter(|c| c & mask == 0) {
            let amp = m[(c | mask, c)];
            if amp.norm_sqr() == T::zero() {
                continue;
            }
            let omega = energies[c | mask] - energies[c];
            if omega.abs() / T::TAU() >= nyquist {
                return Err(Error::InvalidSpectral(format!(
                    "line at {} Hz aliases with dt = {}",
                    num(omega / T::TAU()),
                    num(dt)
                )));
            }
            for (i, s) in samples.iter_mut().enumerate() {
                let t = dt * T::lit(i as f64);
                *s += amp * Complex::from_polar((-rate * t).exp(), -omega * t);
            }
        }
    }
    Ok(Fid {
        dt,
        samples,
        species: species.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Apodization<T> {
    #[default]
    None,
    /// Multiplies sample `t` by `exp(-lambda t)`.
    Exponential(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    /// Strictly increasing, `(k - N/2) / (N dt)`.
    pub frequencies: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// `dt s(0) / 2`: the flat offset by which the rectangle-rule transform
    /// exceeds the trapezoid rule in every bin.
    pub t0_excess: Complex<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn df(&self) -> T {
        if self.frequencies.len() < 2 {
            return T::zero();
        }
        self.frequencies[1] - self.frequencies[0]
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() > self.values[best].norm() {
                best = i;
            }
        }
        best
    }

    /// `sum |S|^2 df`.
    pub fn energy(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr()) * self.df()
    }

    /// `sum S df` over bins with `lo <= f < hi`.
    pub fn integrate(&self, lo: T, hi: T) -> Complex<T> {
        let df = self.df();
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (_, v)| acc + *v * df)
    }

    /// Absorption-mode line integral over `lo <= f < hi`: twice the real
    /// part of `S - t0_excess` summed over the bins, so an isolated phased
    /// line of amplitude `A` integrates to `A`.
    pub fn absorption_integral(&self, lo: T, hi: T) -> T {
        let df = self.df();
        let two = T::lit(2.0);
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .fold(T::zero(), |acc, (_, v)| acc + two * (v.re - self.t0_excess.re) * df)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,real,imag\n");
        for (f, v) in self.frequencies.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{},{}", num(*f), num(v.re), num(v.im));
        }
        out
    }
}

/// `S(f_k) = dt sum_n s_n exp(+i 2 pi k n / N)` after zero filling to
/// `zero_fill` times the FID length, fftshifted onto increasing frequency.
pub fn fid_to_spectrum<T: Scalar + FftNum>(
    fid: &Fid<T>,
    zero_fill: usize,
    apodization: Apodization<T>,
) -> Result<Spectrum<T>> {
    if fid.samples.is_empty() {
        return Err(Error::InvalidSpectral("empty FID".into()));
    }
    if zero_fill == 0 {
        return Err(Error::InvalidSpectral("zero-fill factor must be at least 1".into()));
    }
    let dt = fid.dt;
    let len = fid.samples.len() * zero_fill;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for (i, s) in fid.samples.iter().enumerate() {
        let w = match apodization {
            Apodization::None => T::one(),
            Apodization::Exponential(lambda) => (-lambda * dt * T::lit(i as f64)).exp(),
        };
        buf[i] = *s * w;
    }
    let buf_first = buf[0];
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    let half = len / 2;
    let scale = T::one() / (T::lit(len as f64) * dt);
    let (frequencies, values) = (0..len)
        .map(|i| {
            let k = (i + len - half) % len;
            let f = T::lit(i as f64 - half as f64) * scale;
            (f, buf[k] * dt)
        })
        .unzip();
    Ok(Spectrum {
        frequencies,
        values,
        t0_excess: buf_first * (dt / T::lit(2.0)),
    })
}

/// One resolved line: in-phase peak-table amplitude against the
/// absorption-mode spectral integral.
#[derive(Debug, Clone, PartialEq)]
pub struct LineCheck<T> {
    pub frequency: T,
    pub table: Complex<T>,
    pub integral: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck<T> {
    pub lines: Vec<LineCheck<T>>,
}

impl<T: Scalar> CrossCheck<T> {
    pub fn max_amplitude(&self) -> T {
        self.lines.iter().fold(T::zero(), |acc, l| acc.max(l.table.norm()))
    }

    /// Largest `|Re(table) - integral|` relative to the strongest line.
    pub fn relative_error(&self) -> T {
        let worst = self
            .lines
            .iter()
            .fold(T::zero(), |acc, l| acc.max((l.table.re - l.integral).abs()));
        let top = self.max_amplitude();
        if top > T::zero() {
            worst / top
        } else {
            worst
        }
    }

    /// `(sum |table|, sum |integral|)`.
    pub fn summed_magnitudes(&self) -> (T, T) {
        self.lines.iter().fold((T::zero(), T::zero()), |(a, b), l| {
            (a + l.table.norm(), b + l.integral.abs())
        })
    }
}

/// Lines closer than this merge in [`cross_check`]: three bins, or fifty
/// half-widths of the broadest line of the species, whichever is larger.
pub fn resolution<T: Scalar>(
    system: &SpinSystem<T>,
    species: &str,
    spectrum: &Spectrum<T>,
    apodization: Apodization<T>,
) -> Result<T> {
    let extra = match apodization {
        Apodization::None => T::zero(),
        Apodization::Exponential(lambda) => lambda / T::TAU(),
    };
    let widest = observed_spins(system, species)?
        .into_iter()
        .map(|k| T::one() / (T::TAU() * system.t2()[k - 1]))
        .fold(T::zero(), T::max);
    Ok((T::lit(3.0) * spectrum.df()).max(T::lit(50.0) * (widest + extra)))
}

/// Integrates the spectrum around every line of `tables`. Lines closer than
/// `min_separation` merge; window edges sit halfway to the neighbouring
/// lines and the outermost windows run to the ends of the axis.
pub fn cross_check<T: Scalar>(tables: &[PeakTable<T>], spectrum: &Spectrum<T>, min_separation: T) -> CrossCheck<T> {
    let mut all: Vec<(T, Complex<T>)> = tables
        .iter()
        .flat_map(|t| t.peaks.iter().map(|p| (p.frequency, p.amplitude)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite line frequencies"));
    // (first frequency, last frequency, summed amplitude)
    let mut merged: Vec<(T, T, Complex<T>)> = Vec::new();
    for (f, a) in all {
        match merged.last_mut() {
            Some(last) if f - last.1 < min_separation => {
                last.1 = f;
                last.2 += a;
            }
            _ => merged.push((f, f, a)),
        }
    }
    let lo_end = spectrum.frequencies.first().copied().unwrap_or_else(T::zero);
    let hi_end = spectrum.frequencies.last().copied().unwrap_or_else(T::zero) + spectrum.df();
    let two = T::lit(2.0);
    let lines = (0..merged.len())
        .map(|i| {
            let lo = if i == 0 { lo_end } else { (merged[i - 1].1 + merged[i].0) / two };
            let hi = if i + 1 == merged.len() {
                hi_end
            } else {
                (merged[i].1 + merged[i + 1].0) / two
            };
            LineCheck {
                frequency: (merged[i].0 + merged[i].1) / two,
                table: merged[i].2,
                integral: spectrum.absorption_integral(lo, hi),
            }
        })
        .collect();
    CrossCheck { lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{ProductOperator, SpinOp};
    use std::f64::consts::FRAC_PI_2;

    fn one_spin(nu: f64, t2: f64) -> SpinSystem<f64> {
        SpinSystem::new(vec![1.0])
            .unwrap()
            .with_shifts(vec![nu])
            .unwrap()
            .with_t2(vec![t2])
            .unwrap()
    }

    #[test]
    fn y_pulse_turns_z_into_x() {
        let s = one_spin(0.0, f64::INFINITY);
        let iz = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::Z), 1.0);
        let ix = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::X), 1.0);
        let out = readout_pulse(&iz, 1, Axis::Y, FRAC_PI_2, &s).unwrap();
        assert!(out.max_abs_diff(&ix) < 1e-15);
        let same = readout_pulse(&iz, 1, Axis::Y, 0.0, &s).unwrap();
        assert!(same.max_abs_diff(&iz) < 1e-15);
    }

    #[test]
    fn labels_mark_the_observed_spin() {
        assert_eq!(partner_label(3, 2, 0b100), "1*0");
        assert_eq!(partner_label(2, 1, 0b01), "*1");
    }

    #[test]
    fn single_tone_fid() {
        let s = one_spin(10.0, f64::INFINITY);
        let ix = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::X), 1.0);
        let fid = simulate_fid(&ix, &s, "X", 0.5, 1e-3).unwrap();
        for (i, v) in fid.samples.iter().enumerate() {
            let t = i as f64 * 1e-3;
            let want = Complex::from_polar(0.5, -std::f64::consts::TAU * 10.0 * t);
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn tone_lands_on_its_bin() {
        let s = one_spin(10.0, f64::INFINITY);
        let ix = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::X), 1.0);
        let fid = simulate_fid(&ix, &s, "X", 1.0, 1e-3).unwrap();
        let spec = fid_to_spectrum(&fid, 2, Apodization::None).unwrap();
        let f = spec.frequencies[spec.argmax()];
        assert!((f - 10.0).abs() <= spec.df());
        assert!(spec.values[spec.argmax()].re > 0.0);
    }

    #[test]
    fn zero_state_gives_zero_signal() {
        let s = one_spin(10.0, 1.0);
        let fid = simulate_fid(&DeviationMatrix::zeros(1), &s, "X", 0.1, 1e-3).unwrap();
        assert!(fid.samples.iter().all(|v| v.norm() == 0.0));
        let spec = fid_to_spectrum(&fid, 1, Apodization::None).unwrap();
        assert!(spec.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn axis_is_strictly_increasing() {
        let fid = Fid {
            dt: 0.01,
            samples: vec![Complex::new(1.0, 0.0); 7],
            species: "X".into(),
        };
        let spec = fid_to_spectrum(&fid, 3, Apodization::None).unwrap();
        assert_eq!(spec.frequencies.len(), 21);
        assert!(spec.frequencies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bad_parameters() {
        let s = one_spin(10.0, 1.0);
        let rho = DeviationMatrix::zeros(1);
        assert!(simulate_fid(&rho, &s, "X", 1.0, 0.0).is_err());
        assert!(simulate_fid(&rho, &s, "X", -1.0, 1e-3).is_err());
        assert!(simulate_fid(&rho, &s, "H", 1.0, 1e-3).is_err());
        let ix = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::X), 1.0);
        assert!(matches!(simulate_fid(&ix, &s, "X", 1.0, 0.1), Err(Error::InvalidSpectral(_))));
        let fid = simulate_fid(&rho, &s, "X", 1.0, 1e-3).unwrap();
        assert!(fid_to_spectrum(&fid, 0, Apodization::None).is_err());
    }

    #[test]
    fn decay_is_monotone() {
        let s = one_spin(25.0, 0.2);
        let ix = DeviationMatrix::from_product_operator(&ProductOperator::single(1, 1, SpinOp::X), 1.0);
        let fid = simulate_fid(&ix, &s, "X", 1.0, 1e-3).unwrap();
        assert!(fid.samples.windows(2).all(|w| w[1].norm() <= w[0].norm()));
    }
}
