//! Dense Cholesky for the small SPD local mass matrices (n <= 8).

use crate::error::{Error, Result};

/// Relative pivot threshold below which a mass matrix counts as singular.
const PIVOT_TOL: f64 = 1e-12;

/// Factors the row-major `n x n` SPD matrix `a` in place into its lower
/// Cholesky factor (the strict upper triangle is left untouched).
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > PIVOT_TOL * scale) {
            return Err(Error::SingularMatrix { pivot: j, value: d });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    Ok(())
}

/// Solves `L L^T x = b` in place given the factor from [`cholesky_in_place`].
/// `b` holds `nrhs` right-hand sides as columns of a row-major `n x nrhs` block.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64], nrhs: usize) {
    for c in 0..nrhs {
        for i in 0..n {
            let mut v = b[i * nrhs + c];
            for k in 0..i {
                v -= l[i * n + k] * b[k * nrhs + c];
            }
            b[i * nrhs + c] = v / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = b[i * nrhs + c];
            for k in i + 1..n {
                v -= l[k * n + i] * b[k * nrhs + c];
            }
            b[i * nrhs + c] = v / l[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let mut a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let orig = a;
        cholesky_in_place(&mut a, 3).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += orig[i * 3 + j] * x[j];
            }
        }
        cholesky_solve(&a, 3, &mut b, 1);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_singular() {
        let mut a = [1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            cholesky_in_place(&mut a, 2),
            Err(Error::SingularMatrix { pivot: 1, .. })
        ));
    }
}
