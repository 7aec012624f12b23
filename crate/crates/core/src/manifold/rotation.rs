//! SO(3) with the bi-invariant metric ½tr(UᵀV).

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;

use super::{standard_normal, AmbientTangent, ROTATION_TOL};
use crate::linalg::{hat, so3_angle, so3_exp, so3_log};
use crate::{Error, Result};

pub(super) fn validate(m: &Matrix3<f64>) -> Result<()> {
    let e = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if e <= ROTATION_TOL && (det - 1.0).abs() <= ROTATION_TOL {
        Ok(())
    } else {
        Err(Error::InvalidPoint(format!(
            "not a rotation: orthogonality error {e:e}, det {det}"
        )))
    }
}

pub(super) fn distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    so3_angle(&(a.transpose() * b))
}

pub(super) fn basis(m: &Matrix3<f64>) -> Vec<AmbientTangent> {
    (0..3)
        .map(|i| {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            let t = m * hat(&e);
            DMatrix::from_column_slice(3, 3, t.as_slice())
        })
        .collect()
}

pub(super) fn exp(m: &Matrix3<f64>, c: &nalgebra::DVector<f64>) -> Matrix3<f64> {
    let w = Vector3::new(c[0], c[1], c[2]);
    let r = m * so3_exp(&w);
    polar_projection(&r)
}

pub(super) fn log(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Result<nalgebra::DVector<f64>> {
    let w = so3_log(&(a.transpose() * b), ROTATION_TOL)
        .ok_or_else(|| Error::CutLocus("rotation angle at π".into()))?;
    Ok(nalgebra::DVector::from_column_slice(w.as_slice()))
}

/// Haar sample via a uniformly random unit quaternion.
pub(super) fn random<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = loop {
        let v = nalgebra::Vector4::from_fn(|_, _| standard_normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            break v / n;
        }
    };
    let uq = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    polar_projection(uq.to_rotation_matrix().matrix())
}

/// Nearest rotation in Frobenius norm (polar factor with det = +1).
pub fn polar_projection(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        // singular values are sorted descending, so flip the smallest
        r = u * d * vt;
    }
    r
}
