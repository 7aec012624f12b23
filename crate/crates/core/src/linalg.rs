//! Small dense linear-algebra helpers shared by the manifold and kernel code.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

use crate::{Error, Result};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let fd = DMatrix::from_diagonal(&vals.map(f));
    symmetrize(&(&vecs * fd * vecs.transpose()))
}

/// Eigenvalues of `a⁻¹ b` for symmetric positive definite `a`, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_b = l
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&linv_b.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(sym_eigen(&m).0)
}

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// Rotation angle in [0, π], accurate near both ends.
pub fn so3_angle(r: &Matrix3<f64>) -> f64 {
    let s = vee(r).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Rodrigues formula.
pub fn so3_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat(w);
    let (a, b) = if theta < 1e-6 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Matrix logarithm of a rotation as an axis-angle vector.
///
/// Returns `None` when the angle is within `cut_tol` of π, where the
/// logarithm is not unique.
pub fn so3_log(r: &Matrix3<f64>, cut_tol: f64) -> Option<Vector3<f64>> {
    let theta = so3_angle(r);
    if theta >= std::f64::consts::PI - cut_tol {
        return None;
    }
    let v = vee(r);
    if theta < 1e-6 {
        return Some(v * (1.0 + theta * theta / 6.0));
    }
    if theta < std::f64::consts::PI - 1e-3 {
        return Some(v * (theta / theta.sin()));
    }
    // Near π the skew part is tiny; read the axis off the symmetric part.
    let c = theta.cos();
    let b = (r + r.transpose()) * 0.5 - Matrix3::identity() * c;
    let mut col = 0;
    for j in 1..3 {
        if b[(j, j)] > b[(col, col)] {
            col = j;
        }
    }
    let mut axis: Vector3<f64> = b.column(col).into_owned();
    axis /= axis.norm();
    if axis.dot(&v) < 0.0 {
        axis = -axis;
    }
    Some(axis * theta)
}
