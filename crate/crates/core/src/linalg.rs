//! Thin wrappers over faer for the dense operations used across the crate.

use crate::error::{Error, Result};
use crate::C;
use faer::prelude::*;
use faer::Mat;

pub fn col(v: &[C]) -> Mat<C> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn to_vec(m: &Mat<C>) -> Vec<C> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn all_finite(m: &Mat<C>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

/// `a^{-1} b` by LU with partial pivoting.
pub fn solve(a: &Mat<C>, b: &Mat<C>) -> Result<Mat<C>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Input("shape mismatch in solve".into()));
    }
    let x = a.partial_piv_lu().solve(b);
    if !all_finite(&x) {
        return Err(Error::Singular("LU solve produced non-finite values".into()));
    }
    Ok(x)
}

pub fn solve_vec(a: &Mat<C>, b: &[C]) -> Result<Vec<C>> {
    Ok(to_vec(&solve(a, &col(b))?))
}

/// `b a^{-1}` for a row vector `b`.
pub fn solve_left_vec(a: &Mat<C>, b: &[C]) -> Result<Vec<C>> {
    let at = a.transpose().to_owned();
    solve_vec(&at, b)
}

pub fn det(a: &Mat<C>) -> C {
    if a.nrows() == 0 {
        return C::new(1.0, 0.0);
    }
    a.determinant()
}

/// Singular values in decreasing order and the right singular vector of the
/// smallest one.
pub fn smallest_right_singular(a: &Mat<C>) -> Result<(Vec<f64>, Vec<C>)> {
    let svd = a
        .svd()
        .map_err(|e| Error::NoConvergence(format!("svd: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i].re).collect();
    let v = svd.V();
    let last = a.ncols() - 1;
    let vec = (0..a.ncols()).map(|i| v[(i, last)]).collect::<Vec<_>>();
    Ok((s, vec))
}

/// Minimum-norm least-squares solution of `a x = b` via the SVD.
pub fn lstsq(a: &Mat<C>, b: &[C]) -> Result<Vec<C>> {
    let svd = a
        .svd()
        .map_err(|e| Error::NoConvergence(format!("svd: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = a.nrows().min(a.ncols());
    let smax = if k > 0 { s[0].re } else { 0.0 };
    let mut x = vec![C::new(0.0, 0.0); a.ncols()];
    for i in 0..k {
        let si = s[i].re;
        if si <= 1e-14 * smax {
            continue;
        }
        let proj: C = (0..a.nrows()).map(|r| u[(r, i)].conj() * b[r]).sum::<C>() / si;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += v[(r, i)] * proj;
        }
    }
    Ok(x)
}

/// Bilinear pairing `Σ u_i v_i` (no conjugation).
pub fn pair(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `u ← u + s v`.
pub fn axpy(u: &mut [C], s: C, v: &[C]) {
    u.iter_mut().zip(v).for_each(|(a, b)| *a += s * b);
}

pub fn scale(v: &[C], s: C) -> Vec<C> {
    v.iter().map(|x| x * s).collect()
}

/// `min_s ‖u - s v‖ / ‖u‖`, zero when the vectors are collinear.
pub fn collinearity_residual(u: &[C], v: &[C]) -> f64 {
    let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    if vv == 0.0 {
        return if norm(u) == 0.0 { 0.0 } else { 1.0 };
    }
    let s = v.iter().zip(u).map(|(a, b)| a.conj() * b).sum::<C>() / vv;
    let r: f64 = u.iter().zip(v).map(|(a, b)| (a - s * b).norm_sqr()).sum::<f64>().sqrt();
    r / norm(u).max(1e-300)
}

/// Least-squares proportionality constant `s` in `u ≈ s v`.
pub fn proportionality(u: &[C], v: &[C]) -> C {
    let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    v.iter().zip(u).map(|(a, b)| a.conj() * b).sum::<C>() / vv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_det() {
        let a = Mat::<C>::from_fn(3, 3, |i, j| C::new((i * 3 + j) as f64 + if i == j { 5.0 } else { 0.0 }, 0.5 * i as f64));
        let b = vec![C::new(1.0, 0.0), C::new(0.0, 2.0), C::new(-1.0, 1.0)];
        let x = solve_vec(&a, &b).unwrap();
        let back = &a * col(&x);
        for i in 0..3 {
            assert!((back[(i, 0)] - b[i]).norm() < 1e-12);
        }
        let d2 = Mat::<C>::from_fn(2, 2, |i, j| C::new([[1.0, 2.0], [3.0, 4.0]][i][j], 0.0));
        assert!((det(&d2) - C::new(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn null_vector() {
        let a = Mat::<C>::from_fn(4, 2, |i, _| C::new(i as f64 + 1.0, 0.0));
        let (s, v) = smallest_right_singular(&a).unwrap();
        assert!(s[1] < 1e-12 * s[0]);
        let r = &a * col(&v);
        assert!(to_vec(&r).iter().all(|x| x.norm() < 1e-12));
    }
}
