//! Line-oriented molecule description.
//!
//! ```text
//! # comments start with '#'
//! [system]
//! n = 2
//! species = C H        # optional, defaults to X for every spin
//! gamma = 1 4
//!
//! [shifts]             # Hz, rotating frame; omitted spins are on resonance
//! 1 = 120
//!
//! [j]                  # Hz, upper triangle only: i < j
//! 1 2 215
//!
//! [t2]                 # seconds; `inf` for no decay
//! 1 = 0.3
//! ```
//!
//! Unknown sections or keys, repeated entries and out-of-range spins are
//! rejected with the offending line number.

use std::collections::HashSet;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::export::num;
use crate::scalar::Scalar;
use crate::spin::SpinSystem;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    System,
    Shifts,
    J,
    T2,
}

fn err<V>(line: usize, message: impl Into<String>) -> Result<V> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn value<T: Scalar>(line: usize, s: &str) -> Result<T> {
    match s {
        "inf" | "infinity" => Ok(T::infinity()),
        _ => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(T::lit(v)),
            _ => err(line, format!("`{s}` is not a number")),
        },
    }
}

fn spin_index(line: usize, s: &str, n: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 && k <= n => Ok(k),
        _ => err(line, format!("`{s}` is not a spin index in 1..={n}")),
    }
}

pub fn parse_molecule<T: Scalar>(text: &str) -> Result<SpinSystem<T>> {
    let mut section = Section::None;
    let mut seen_sections = HashSet::new();
    let mut n: Option<usize> = None;
    let mut species: Option<Vec<String>> = None;
    let mut gamma: Option<Vec<T>> = None;
    // (line, spin, value) until n is known
    let mut shifts: Vec<(usize, usize, String)> = Vec::new();
    let mut t2: Vec<(usize, usize, String)> = Vec::new();
    let mut couplings: Vec<(usize, String, String, String)> = Vec::new();
    let mut system_keys = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "system" => Section::System,
                "shifts" => Section::Shifts,
                "j" => Section::J,
                "t2" => Section::T2,
                other => return err(line, format!("unknown section [{other}]")),
            };
            if !seen_sections.insert(name.trim().to_string()) {
                return err(line, format!("section [{}] repeated", name.trim()));
            }
            continue;
        }
        match section {
            Section::None => return err(line, "entry outside any section"),
            Section::System => {
                let Some((key, rest)) = content.split_once('=') else {
                    return err(line, "expected `key = value`");
                };
                let key = key.trim();
                if !system_keys.insert(key.to_string()) {
                    return err(line, format!("key `{key}` repeated"));
                }
                let words: Vec<&str> = rest.split_whitespace().collect();
                match key {
                    "n" => match words.as_slice() {
                        [w] => match w.parse::<usize>() {
                            Ok(v) if v >= 1 => n = Some(v),
                            _ => return err(line, format!("`{w}` is not a spin count")),
                        },
                        _ => return err(line, "n takes one value"),
                    },
                    "species" => species = Some(words.iter().map(|w| w.to_string()).collect()),
                    "gamma" => gamma = Some(words.iter().map(|w| value(line, w)).collect::<Result<_>>()?),
                    other => return err(line, format!("unknown key `{other}` in [system]")),
                }
            }
            Section::Shifts | Section::T2 => {
                let Some((key, rest)) = content.split_once('=') else {
                    return err(line, "expected `spin = value`");
                };
                let entry = (line, 0, format!("{} {}", key.trim(), rest.trim()));
                if section == Section::Shifts {
                    shifts.push(entry);
                } else {
                    t2.push(entry);
                }
            }
            Section::J => match content.split_whitespace().collect::<Vec<_>>().as_slice() {
                [a, b, v] => couplings.push((line, a.to_string(), b.to_string(), v.to_string())),
                _ => return err(line, "expected `i j value`"),
            },
        }
    }

    let Some(n) = n else {
        return err(0, "[system] must set n");
    };
    let Some(gamma) = gamma else {
        return err(0, "[system] must set gamma");
    };
    if gamma.len() != n {
        return err(0, format!("gamma lists {} values for {n} spins", gamma.len()));
    }
    let species = species.unwrap_or_else(|| vec!["X".to_string(); n]);
    if species.len() != n {
        return err(0, format!("species lists {} labels for {n} spins", species.len()));
    }

    let per_spin = |entries: &[(usize, usize, String)], default: T| -> Result<Vec<T>> {
        let mut out = vec![default; n];
        let mut set = HashSet::new();
        for (line, _, entry) in entries {
            let (k, v) = entry.split_once(' ').unwrap_or((entry, ""));
            let k = spin_index(*line, k, n)?;
            if !set.insert(k) {
                return err(*line, format!("spin {k} repeated"));
            }
            out[k - 1] = value(*line, v.trim())?;
        }
        Ok(out)
    };
    let nu = per_spin(&shifts, T::zero())?;
    let t2v = per_spin(&t2, T::infinity())?;

    let mut system = SpinSystem::new(gamma)
        .and_then(|s| s.with_species(species))
        .and_then(|s| s.with_shifts(nu))
        .and_then(|s| s.with_t2(t2v))
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    let mut pairs = HashSet::new();
    for (line, a, b, v) in couplings {
        let (a, b) = (spin_index(line, &a, n)?, spin_index(line, &b, n)?);
        if a >= b {
            return err(line, format!("coupling ({a}, {b}) must satisfy i < j"));
        }
        if !pairs.insert((a, b)) {
            return err(line, format!("coupling ({a}, {b}) repeated"));
        }
        let hz: T = value(line, &v)?;
        if !hz.is_finite() {
            return err(line, "coupling must be finite");
        }
        system = system.with_coupling(a, b, hz).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(system)
}

/// Inverse of [`parse_molecule`].
pub fn format_molecule<T: Scalar>(system: &SpinSystem<T>) -> String {
    let n = system.n();
    let join = |v: &[T]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
    let mut out = format!(
        "[system]\nn = {n}\nspecies = {}\ngamma = {}\n\n[shifts]\n",
        system.species().join(" "),
        join(system.gamma())
    );
    for (k, v) in system.shifts().iter().enumerate() {
        let _ = writeln!(out, "{} = {}", k + 1, num(*v));
    }
    out.push_str("\n[j]\n");
    for a in 1..=n {
        for b in a + 1..=n {
            let j = system.coupling(a, b);
            if j != T::zero() {
                let _ = writeln!(out, "{a} {b} {}", num(j));
            }
        }
    }
    out.push_str("\n[t2]\n");
    for (k, v) in system.t2().iter().enumerate() {
        let v = if v.is_infinite() { "inf".to_string() } else { num(*v) };
        let _ = writeln!(out, "{} = {v}", k + 1);
    }
    out
}
