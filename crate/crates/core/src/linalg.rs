//! Thin wrappers over the LAPACK-backed routines.
//!
//! `eigh` on a row-major complex array returns conjugated eigenvectors with
//! this backend, so every entry point here copies into column-major storage
//! first and hands back plain owned arrays.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64 as C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub const I: C64 = C64::new(0.0, 1.0);

fn to_f_layout(m: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros(m.raw_dim().f());
    out.assign(m);
    out
}

pub fn adjoint_matrix(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    frobenius(&(m - &adjoint_matrix(m)))
}

pub fn identity(dim: usize) -> Array2<C64> {
    Array2::eye(dim)
}

/// Eigendecomposition of a conjugate-symmetric matrix; eigenvalues ascending,
/// eigenvectors as columns.
pub fn eigh_hermitian(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let dev = hermiticity_deviation(m);
    let scale = frobenius(m).max(1.0);
    if dev > 1e-9 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (vals, vecs) = to_f_layout(m).eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// General complex eigendecomposition; eigenvectors as columns, paired with
/// the eigenvalue of the same index.
pub fn eig_general(m: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    let (vals, vecs) = to_f_layout(m).eig()?;
    Ok((vals, vecs))
}

pub fn inverse(m: &Array2<C64>) -> Result<Array2<C64>> {
    to_f_layout(m).inv().map_err(|_| Error::SingularMetric)
}

/// Orthonormal basis of the (right) null space of `m`, columns of the result.
/// Singular values below `tol * s_max` count as zero.
pub fn nullspace(m: &Array2<C64>, tol: f64) -> Result<Array2<C64>> {
    let (_, s, vt) = to_f_layout(m).svd(false, true)?;
    let vt = vt.expect("requested Vt");
    let smax = s.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let cols = m.ncols();
    let mut keep = Vec::new();
    for j in 0..cols {
        let sv = if j < s.len() { s[j] } else { 0.0 };
        if sv <= tol * smax {
            keep.push(j);
        }
    }
    let mut basis = Array2::zeros((cols, keep.len()));
    for (k, &j) in keep.iter().enumerate() {
        for i in 0..cols {
            basis[(i, k)] = vt[(j, i)].conj();
        }
    }
    Ok(basis)
}

/// Null space of a real matrix, same convention as [`nullspace`].
pub fn nullspace_real(m: &Array2<f64>, tol: f64) -> Result<Array2<f64>> {
    let (_, s, vt) = m.svd(false, true)?;
    let vt = vt.expect("requested Vt");
    let smax = s.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let cols = m.ncols();
    let mut keep = Vec::new();
    for j in 0..cols {
        let sv = if j < s.len() { s[j] } else { 0.0 };
        if sv <= tol * smax {
            keep.push(j);
        }
    }
    let mut basis = Array2::zeros((cols, keep.len()));
    for (k, &j) in keep.iter().enumerate() {
        for i in 0..cols {
            basis[(i, k)] = vt[(j, i)];
        }
    }
    Ok(basis)
}

/// Principal angles between the column spans of two orthonormal bases,
/// returned as cosines (singular values of the cross Gram matrix), descending.
pub fn principal_angle_cosines(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array1<f64>> {
    let cross = adjoint_matrix(a).dot(b);
    let (_, s, _) = cross.svd(false, false)?;
    Ok(s)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
/// Intended for the small fiber matrices used throughout this crate.
pub fn matrix_exp(m: &Array2<C64>) -> Array2<C64> {
    let norm = frobenius(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.mapv(|z| z / cr(2f64.powi(squarings as i32)));
    let dim = m.nrows();
    let mut result = identity(dim);
    let mut term = identity(dim);
    for k in 1..=64 {
        term = term.dot(&scaled).mapv(|z| z / cr(k as f64));
        result = &result + &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Gram–Schmidt orthonormalization of the columns; drops near-null columns.
pub fn orthonormalize(m: &Array2<C64>, tol: f64) -> Array2<C64> {
    let rows = m.nrows();
    let mut cols: Vec<Array1<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).to_owned();
        for u in &cols {
            let proj: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v = &v - &u.mapv(|z| z * proj);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            cols.push(v.mapv(|z| z / cr(norm)));
        }
    }
    let mut out = Array2::zeros((rows, cols.len()));
    for (j, v) in cols.iter().enumerate() {
        out.column_mut(j).assign(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigh_vectors_satisfy_eigen_equation() {
        let g = array![[cr(0.0), I], [-I, cr(0.0)]];
        let (vals, vecs) = eigh_hermitian(&g).unwrap();
        for k in 0..2 {
            let v = vecs.column(k).to_owned();
            let r = g.dot(&v) - v.mapv(|z| z * cr(vals[k]));
            assert!(max_abs(&r.insert_axis(ndarray::Axis(1))) < 1e-12);
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        let a = array![[cr(0.0), cr(1.0)], [cr(-1.0), cr(0.0)]];
        let e = matrix_exp(&a.mapv(|z| z * cr(std::f64::consts::PI / 2.0)));
        // exp(pi/2 J) = J
        assert!(max_abs(&(&e - &a)) < 1e-12);
    }

    #[test]
    fn nullspace_of_projector() {
        let m = array![[cr(1.0), cr(0.0)], [cr(0.0), cr(0.0)]];
        let ns = nullspace(&m, 1e-12).unwrap();
        assert_eq!(ns.ncols(), 1);
        assert!((ns[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
