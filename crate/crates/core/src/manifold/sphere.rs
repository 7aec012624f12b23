//! Unit sphere embedded in ℝ^{d+1}.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{standard_normal, AmbientTangent, SPHERE_TOL};
use crate::{Error, Result};

pub(super) fn validate(x: &DVector<f64>) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidPoint("sphere needs at least 2 coordinates".into()));
    }
    let n = x.norm();
    if (n - 1.0).abs() <= SPHERE_TOL {
        Ok(())
    } else {
        Err(Error::InvalidPoint(format!("sphere point has norm {n}")))
    }
}

pub(super) fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // chord formula keeps accuracy near 0 and π
    2.0 * ((a - b).norm() / 2.0).min(1.0).asin()
}

/// Columns 0..d of a Householder reflection sending e_d to ±x.
pub(super) fn frame(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let d = n - 1;
    let s = if x[d] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = x.clone();
    v[d] += s;
    let vv = v.dot(&v);
    let mut h = DMatrix::identity(n, n);
    h -= (&v * v.transpose()) * (2.0 / vv);
    h.columns(0, d).into_owned()
}

pub(super) fn basis(x: &DVector<f64>) -> Vec<AmbientTangent> {
    let f = frame(x);
    f.column_iter().map(|c| DMatrix::from_column_slice(c.len(), 1, c.as_slice())).collect()
}

pub(super) fn exp(x: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    let r = c.norm();
    if r == 0.0 {
        return x.clone();
    }
    let u = frame(x) * c;
    let y = x * r.cos() + u * (r.sin() / r);
    let n = y.norm();
    y / n
}

pub(super) fn log(x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let c = x.dot(y);
    if c <= -1.0 + SPHERE_TOL {
        return Err(Error::CutLocus("antipodal sphere points".into()));
    }
    let f = frame(x);
    let w = f.transpose() * y;
    let s = w.norm();
    if s == 0.0 {
        return Ok(w);
    }
    let theta = s.atan2(c);
    Ok(w * (theta / s))
}

pub(super) fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim + 1, |_, _| standard_normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}
