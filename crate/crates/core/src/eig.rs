//! Dense non-Hermitian eigendecomposition with residual verification.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, EigVals};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual bound applied to every eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues with unit-norm right eigenvectors stored column-wise.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Array1<Complex64>,
    pub vectors: Array2<Complex64>,
    pub residuals: Array1<f64>,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ascending real part, ties by ascending imaginary part.
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub(crate) fn check_input(a: &ArrayView2<Complex64>) -> Result<()> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if let Some(((row, col), _)) = a
        .indexed_iter()
        .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::NonFinite { row, col });
    }
    Ok(())
}

/// Frobenius norm.
pub fn frobenius(a: &ArrayView2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Full spectrum and right eigenvectors, sorted and residual-checked.
pub fn eig_dense(a: &ArrayView2<Complex64>) -> Result<EigResult> {
    check_input(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(EigResult {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
            residuals: Array1::zeros(0),
        });
    }
    let (vals, vecs) = a.eig()?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_complex(&vals[i], &vals[j]));

    let values = Array1::from_iter(order.iter().map(|&i| vals[i]));
    let mut vectors = vecs.select(Axis(1), &order);
    for mut col in vectors.columns_mut() {
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::Solver("degenerate eigenvector returned".into()));
        }
        col.mapv_inplace(|z| z / nrm);
    }

    let av = a.dot(&vectors);
    let residuals = Array1::from_iter((0..n).map(|k| {
        let lam = values[k];
        av.column(k)
            .iter()
            .zip(vectors.column(k))
            .map(|(x, v)| (x - lam * v).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }));
    let bound = RESIDUAL_TOL * frobenius(a).max(f64::MIN_POSITIVE);
    if let Some((index, &residual)) = residuals.iter().enumerate().find(|(_, r)| **r > bound) {
        return Err(Error::Residual {
            index,
            residual,
            bound,
        });
    }

    Ok(EigResult {
        values,
        vectors,
        residuals,
    })
}

/// Sorted eigenvalues only; about three times cheaper than [`eig_dense`].
pub fn eigvals_dense(a: &ArrayView2<Complex64>) -> Result<Array1<Complex64>> {
    check_input(a)?;
    if a.nrows() == 0 {
        return Ok(Array1::zeros(0));
    }
    let mut v = a.eigvals()?.to_vec();
    v.sort_by(cmp_complex);
    Ok(Array1::from(v))
}

/// Sorted eigenvalues of an owned matrix, overwriting it; avoids the
/// working copy that [`eigvals_dense`] makes, which matters near the memory
/// limit.
pub fn eigvals_consuming(mut a: Array2<Complex64>) -> Result<Array1<Complex64>> {
    use ndarray_linalg::layout::{AllocatedArray, AllocatedArrayMut};
    use ndarray_linalg::Lapack;
    check_input(&a.view())?;
    if a.nrows() == 0 {
        return Ok(Array1::zeros(0));
    }
    let layout = a.square_layout()?;
    let (vals, _) = Complex64::eig(false, layout, a.as_allocated_mut()?)
        .map_err(|e| Error::Solver(e.to_string()))?;
    drop(a);
    let mut v = vals;
    v.sort_by(cmp_complex);
    Ok(Array1::from(v))
}

/// Largest elementwise distance between two spectra after sorting each.
///
/// Sorting by real part is unstable for near-degenerate clusters, so the
/// second list is matched greedily to the nearest unused value instead.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut bs: Vec<(Complex64, bool)> = b.iter().map(|&z| (z, false)).collect();
    bs.sort_by(|x, y| cmp_complex(&x.0, &y.0));
    let mut worst: f64 = 0.0;
    for z in a {
        // Start near the insertion point by real part and widen until the
        // real-part gap alone exceeds the best distance found.
        let start = bs.partition_point(|(w, _)| w.re < z.re);
        let mut best = (f64::INFINITY, usize::MAX);
        let mut lo = start as isize - 1;
        let mut hi = start;
        loop {
            let mut progressed = false;
            if hi < bs.len() && (bs[hi].0.re - z.re) < best.0 {
                if !bs[hi].1 {
                    let d = (bs[hi].0 - z).norm();
                    if d < best.0 {
                        best = (d, hi);
                    }
                }
                hi += 1;
                progressed = true;
            }
            if lo >= 0 && (z.re - bs[lo as usize].0.re) < best.0 {
                let i = lo as usize;
                if !bs[i].1 {
                    let d = (bs[i].0 - z).norm();
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                lo -= 1;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        bs[best.1].1 = true;
        worst = worst.max(best.0);
    }
    worst
}
