//! Hyperbolic space as the upper sheet of the hyperboloid ⟨x,x⟩ = −1.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{standard_normal, AmbientTangent, HYPERBOLIC_TOL};
use crate::{Error, Result};

/// Minkowski form −u₀v₀ + Σ uᵢvᵢ.
pub fn minkowski_inner(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    -u[0] * v[0] + u.rows(1, u.len() - 1).dot(&v.rows(1, v.len() - 1))
}

pub(super) fn lift(spatial: &[f64]) -> DVector<f64> {
    let s2: f64 = spatial.iter().map(|s| s * s).sum();
    let mut v = DVector::zeros(spatial.len() + 1);
    v[0] = (1.0 + s2).sqrt();
    v.rows_mut(1, spatial.len()).copy_from_slice(spatial);
    v
}

pub(super) fn validate(x: &DVector<f64>) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidPoint("hyperbolic point needs at least 2 coordinates".into()));
    }
    let q = -minkowski_inner(x, x);
    if x[0] > 0.0 && (q - 1.0).abs() <= HYPERBOLIC_TOL * x[0].powi(2).max(1.0) {
        Ok(())
    } else {
        Err(Error::InvalidPoint(format!("not on the hyperboloid: -<x,x> = {q}")))
    }
}

pub(super) fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // ⟨a−b,a−b⟩ = 4 sinh²(ρ/2), accurate for close points
    let d = a - b;
    let s = minkowski_inner(&d, &d).max(0.0).sqrt();
    2.0 * (s / 2.0).asinh()
}

/// Boost frame: column j (1-based spatial index) is the image of e_j under
/// the Lorentz boost sending e₀ to x.
fn frame(x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len() - 1;
    let x0 = x[0];
    let mut f = DMatrix::zeros(d + 1, d);
    for j in 0..d {
        let sj = x[j + 1];
        f[(0, j)] = sj;
        for i in 0..d {
            f[(i + 1, j)] = sj * x[i + 1] / (1.0 + x0);
        }
        f[(j + 1, j)] += 1.0;
    }
    f
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
    let y = x * r.cosh() + frame(x) * c * (r.sinh() / r);
    let spatial: Vec<f64> = y.rows(1, y.len() - 1).iter().copied().collect();
    lift(&spatial)
}

pub(super) fn log(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let f = frame(x);
    let d = x.len() - 1;
    // spatial coordinates of y in the boosted frame are ⟨y, b_j⟩
    let s = DVector::from_fn(d, |j, _| minkowski_inner(y, &f.column(j).into_owned()));
    let n = s.norm();
    if n == 0.0 {
        return s;
    }
    s * (n.asinh() / n)
}

pub(super) fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> DVector<f64> {
    let mut o = DVector::zeros(dim + 1);
    o[0] = 1.0;
    let c = DVector::from_fn(dim, |_, _| scale * standard_normal(rng));
    exp(&o, &c)
}
