//! Dense linear-algebra helpers shared by the Gaussian engines.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, EigValsh, QRInto, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{EngineError, Result};

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Largest entrywise deviation of `a` from `a^dagger`.
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `max |X^dagger X - 1|` for a frame of orthonormal columns.
pub fn isometry_defect(frame: &Array2<C64>) -> f64 {
    let gram = dagger(frame).dot(frame);
    gram.indexed_iter()
        .map(|((i, j), z)| if i == j { (z - 1.0).norm() } else { z.norm() })
        .fold(0.0, f64::max)
}

/// Replace the columns of `frame` by the `Q` factor of its thin QR
/// decomposition, with the gauge fixed so that `diag(R)` is real positive.
pub fn orthonormalize_columns(frame: &mut Array2<C64>) -> Result<()> {
    let (mut q, r) = frame.to_owned().qr_into()?;
    let scale = r.diag().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (k, rkk) in r.diag().iter().enumerate() {
        let norm = rkk.norm();
        if !norm.is_finite() || norm <= 1e-300 || norm < 1e-14 * scale {
            return Err(EngineError::NumericalBreakdown(format!(
                "rank-deficient frame in QR (|R[{k},{k}]| = {norm:e})"
            )));
        }
        let phase = rkk / norm;
        q.column_mut(k).mapv_inplace(|z| z * phase);
    }
    *frame = q;
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    if a.nrows() == 1 {
        // LAPACK bindings reject the degenerate strides of 1x1 arrays.
        return Ok((array![a[[0, 0]].re], Array2::eye(1)));
    }
    Ok(column_major(a).eigh(UPLO::Lower)?)
}

pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>> {
    if a.nrows() == 1 {
        return Ok(array![a[[0, 0]].re]);
    }
    Ok(column_major(a).eigvalsh(UPLO::Lower)?)
}

/// ndarray-linalg 0.18 returns conjugated eigenvectors for row-major complex
/// input, so Hermitian solves always go through a Fortran-ordered copy.
fn column_major(a: &Array2<C64>) -> Array2<C64> {
    let mut f = Array2::<C64>::zeros(a.raw_dim().f());
    f.assign(a);
    f
}

/// `exp(scale * H)` for Hermitian `H`, through its eigen-decomposition.
pub fn expm_hermitian(h: &Array2<C64>, scale: C64) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(h)?;
    let mut scaled = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let w = (scale * lam).exp();
        scaled.column_mut(k).mapv_inplace(|z| z * w);
    }
    Ok(scaled.dot(&dagger(&vecs)))
}

/// Pfaffian of a complex antisymmetric matrix (Parlett-Reid elimination with
/// partial pivoting).
pub fn pfaffian(a: &Array2<C64>) -> C64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pfaffian needs a square matrix");
    if n % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    let mut a = a.to_owned();
    let mut pf = C64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        let (kp, _) = (k + 1..n)
            .map(|i| (i, a[[i, k]].norm()))
            .fold((k + 1, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if kp != k + 1 {
            for col in 0..n {
                a.swap([k + 1, col], [kp, col]);
            }
            for row in 0..n {
                a.swap([row, k + 1], [row, kp]);
            }
            pf = -pf;
        }
        let pivot = a[[k, k + 1]];
        if pivot.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| a[[k, j]] / pivot).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| a[[i, k + 1]]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[[i, j]] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Complex copy of a real matrix.
pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(n: usize, m: usize, seed: u64) -> Array2<C64> {
        let mut s = seed;
        Array2::from_shape_fn((n, m), |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn qr_gauge_gives_positive_diagonal() {
        let a = sample(8, 4, 3);
        let mut q = a.clone();
        orthonormalize_columns(&mut q).unwrap();
        assert!(isometry_defect(&q) < 1e-13);
        let r = dagger(&q).dot(&a);
        for k in 0..4 {
            assert!(r[[k, k]].im.abs() < 1e-12 && r[[k, k]].re > 0.0);
            for i in k + 1..4 {
                assert!(r[[i, k]].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_frame_is_reported() {
        let mut a = sample(6, 3, 5);
        let c0 = a.column(0).to_owned();
        a.column_mut(2).assign(&c0);
        assert!(matches!(orthonormalize_columns(&mut a), Err(EngineError::NumericalBreakdown(_))));
    }

    #[test]
    fn pfaffian_of_blocks_and_row_swap() {
        let m = sample(6, 6, 11);
        let a = &m - &m.t();
        let pf = pfaffian(&a);
        let blocks = {
            let mut b = Array2::<C64>::zeros((4, 4));
            b[[0, 1]] = C64::new(2.0, 1.0);
            b[[1, 0]] = -b[[0, 1]];
            b[[2, 3]] = C64::new(-0.5, 0.0);
            b[[3, 2]] = -b[[2, 3]];
            b
        };
        assert_abs_diff_eq!(pfaffian(&blocks).re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pfaffian(&blocks).im, -0.5, epsilon = 1e-14);
        // Pf(B A B^T) = det(B) Pf(A) with B a permutation swapping 0 and 1.
        let mut perm = a.clone();
        for col in 0..6 {
            perm.swap([0, col], [1, col]);
        }
        for row in 0..6 {
            perm.swap([row, 0], [row, 1]);
        }
        let pf2 = pfaffian(&perm);
        assert!((pf + pf2).norm() < 1e-12 * pf.norm().max(1.0));
    }

    #[test]
    fn eigh_vectors_solve_complex_hermitian_problem() {
        let m = sample(6, 6, 13);
        let h = &m + &dagger(&m);
        let (w, v) = eigh(&h).unwrap();
        let resid = h.dot(&v) - &v * &w.mapv(|x| C64::new(x, 0.0));
        assert!(resid.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn expm_of_hermitian_is_unitary_for_imaginary_scale() {
        let m = sample(5, 5, 7);
        let h = &m + &dagger(&m);
        let u = expm_hermitian(&h, C64::new(0.0, -0.3)).unwrap();
        assert!(isometry_defect(&u) < 1e-13);
    }
}
