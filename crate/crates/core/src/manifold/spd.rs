//! SPD matrices with the affine-invariant metric tr(p⁻¹Up⁻¹V).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{standard_normal, AmbientTangent, SPD_SYM_TOL};
use crate::linalg::{generalized_eigenvalues, sym_apply, sym_eigen, symmetrize};
use crate::{Error, Result};

pub(super) fn validate(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidPoint("SPD point must be a non-empty square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidPoint("non-finite SPD entry".into()));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > SPD_SYM_TOL * m.abs().max().max(1.0) {
        return Err(Error::InvalidPoint(format!("matrix not symmetric ({asym:e})")));
    }
    let (ev, _) = sym_eigen(m);
    if ev[0] <= 0.0 {
        return Err(Error::InvalidPoint(format!("smallest eigenvalue {} not positive", ev[0])));
    }
    Ok(())
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    sym_eigen(m).0
}

/// Clamps the spectrum of a symmetric matrix into [lo, hi].
pub fn clip_eigenvalues(m: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    sym_apply(&symmetrize(m), |l| l.clamp(lo, hi))
}

pub(super) fn log_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    match generalized_eigenvalues(a, b) {
        Ok(ev) => ev.map(|l| l.max(f64::MIN_POSITIVE).ln()),
        Err(_) => DVector::from_element(a.nrows(), f64::NAN),
    }
}

pub(super) fn distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    log_eigen(a, b).norm()
}

/// Frobenius-orthonormal symmetric basis in upper-triangle order.
pub(crate) fn sym_basis(d: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i..d {
            let mut e = DMatrix::zeros(d, d);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = r;
                e[(j, i)] = r;
            }
            out.push(e);
        }
    }
    out
}

fn sqrt_and_inv_sqrt(p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (sym_apply(p, f64::sqrt), sym_apply(p, |l| 1.0 / l.sqrt()))
}

pub(super) fn basis(p: &DMatrix<f64>) -> Vec<AmbientTangent> {
    let (s, _) = sqrt_and_inv_sqrt(p);
    sym_basis(p.nrows()).into_iter().map(|e| symmetrize(&(&s * e * &s))).collect()
}

pub(super) fn metric(p: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    let pinv = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidPoint("SPD point not positive definite".into()))?
        .inverse();
    Ok((&pinv * u * &pinv * v).trace())
}

pub(super) fn exp(p: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    let d = p.nrows();
    let mut s = DMatrix::zeros(d, d);
    for (k, e) in sym_basis(d).iter().enumerate() {
        s += e * c[k];
    }
    let (h, _) = sqrt_and_inv_sqrt(p);
    symmetrize(&(&h * sym_apply(&s, f64::exp) * &h))
}

pub(super) fn log(p: &DMatrix<f64>, q: &DMatrix<f64>) -> DVector<f64> {
    let (_, hi) = sqrt_and_inv_sqrt(p);
    let m = symmetrize(&(&hi * q * &hi));
    let l = sym_apply(&m, |x| x.max(f64::MIN_POSITIVE).ln());
    let basis = sym_basis(p.nrows());
    DVector::from_iterator(basis.len(), basis.iter().map(|e| e.dot(&l)))
}

/// Haar-orthogonal eigenvectors, log-uniform eigenvalues in `eig_box`.
pub(super) fn random<R: Rng + ?Sized>(rng: &mut R, d: usize, eig_box: (f64, f64)) -> DMatrix<f64> {
    let q = haar_orthogonal(rng, d);
    let (lo, hi) = (eig_box.0.ln(), eig_box.1.ln());
    let l = DVector::from_fn(d, |_, _| rng.random_range(lo..=hi).exp());
    symmetrize(&(&q * DMatrix::from_diagonal(&l) * q.transpose()))
}

fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| standard_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}
