//! Dense eigenvalue helpers shared by the root finder and the pole oracle.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = f64::EPSILON;
const SCHUR_MAX_ITER: usize = 10_000;

/// Parlett-Reinsch diagonal similarity balancing with radix 2.
///
/// Scales row/column pairs until their off-diagonal norms agree within a
/// factor of 0.95. Powers of two keep the transform exact in floating point.
pub fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const RADIX_SQ: f64 = RADIX * RADIX;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX_SQ;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX_SQ;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real square matrix after balancing.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut b = a.clone();
    balance(&mut b);
    let schur =
        Schur::try_new(b, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::NoConvergence("real Schur"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Right eigenvector for an (approximate) eigenvalue by shifted inverse iteration.
pub(crate) fn inverse_iteration(a: &DMatrix<Complex64>, lambda: Complex64) -> DVector<Complex64> {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut shift = lambda + Complex64::new(scale * 1e-10, scale * 1e-10);
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0, 0.1 * (i as f64 + 1.0)));
    v /= Complex64::from(v.norm());
    for attempt in 0..4 {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        let lu = m.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&v) {
                Some(w) if w.iter().all(|z| z.is_finite()) && w.norm() > 0.0 => {
                    v = &w / Complex64::from(w.norm());
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            break;
        }
        shift += Complex64::new(scale * 1e-8 * (attempt as f64 + 1.0), 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balancing_preserves_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re));
        let tr: f64 = ev.iter().map(|z| z.re).sum();
        assert!((tr - 6.0).abs() < 1e-9);
        let mut b = a.clone();
        balance(&mut b);
        assert!(b.amax() < a.amax());
    }

    #[test]
    fn eigenvector_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let v = inverse_iteration(&a, Complex64::new(2.0, 0.0));
        assert!(v[0].norm() < 1e-6);
        assert!((v[1].norm() - 1.0).abs() < 1e-9);
    }
}
