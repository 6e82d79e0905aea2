//! CSV formatting shared by every output file. Numbers use the shortest
//! round-trip representation (scientific below 1e-4) so reruns are
//! byte-identical.

use std::fmt::Write;

use crate::linalg::CMatrix;
use crate::scalar::Scalar;

pub fn num<T: Scalar>(x: T) -> String {
    let v = x.as_f64();
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-4 || v.abs() >= 1e15 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// `row,col,real,imag` for every entry, row-major.
pub fn matrix_csv<T: Scalar>(m: &CMatrix<T>) -> String {
    let mut out = String::from("row,col,real,imag\n");
    let d = m.dim();
    for r in 0..d {
        for c in 0..d {
            let z = m[(r, c)];
            let _ = writeln!(out, "{r},{c},{},{}", num(z.re), num(z.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(num(-0.0_f64), "0");
        assert_eq!(num(2.5_f64), "2.5");
        assert_eq!(num(4.4e-15_f64), "4.4e-15");
    }

    #[test]
    fn matrix_rows() {
        let m = CMatrix::<f64>::from_real_diag(&[1.0, -1.0]);
        assert_eq!(matrix_csv(&m), "row,col,real,imag\n0,0,1,0\n0,1,0,0\n1,0,0,0\n1,1,-1,0\n");
    }
}
