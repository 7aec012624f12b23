//! Euclidean coordinates for the Euclidean-kernel baseline: a box in ℝⁿ and
//! a map from the box back onto the manifold.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::manifold::{clip_eigenvalues, polar_projection};
use crate::optimize::Constraint;
use crate::{Error, Manifold, ManifoldPoint, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub manifold: Manifold,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Eigenvalue range used to repair SPD coordinates.
    pub spd_range: (f64, f64),
}

impl Embedding {
    /// `radius` is the projection radius of non-compact spaces; `spd_range`
    /// the admissible eigenvalues of SPD points.
    pub fn new(manifold: &Manifold, radius: f64, spd_range: (f64, f64)) -> Result<Embedding> {
        let (lower, upper) = match manifold {
            Manifold::Euclidean { dim } => (vec![-radius; *dim], vec![radius; *dim]),
            Manifold::Sphere { dim } => (vec![-1.0; dim + 1], vec![1.0; dim + 1]),
            Manifold::Torus { dim } => (vec![0.0; *dim], vec![1.0; *dim]),
            Manifold::Hyperbolic { dim } => {
                let s = radius.sinh();
                (vec![-s; *dim], vec![s; *dim])
            }
            Manifold::Rotation => (vec![-1.0; 9], vec![1.0; 9]),
            Manifold::Spd { dim } => {
                let (lo, hi) = spd_range;
                let mut l = Vec::new();
                let mut u = Vec::new();
                for i in 0..*dim {
                    for j in i..*dim {
                        if i == j {
                            l.push(lo);
                            u.push(hi);
                        } else {
                            l.push(-hi);
                            u.push(hi);
                        }
                    }
                }
                (l, u)
            }
            Manifold::Product { .. } => {
                return Err(Error::Unsupported("Euclidean embedding of a product space".into()))
            }
        };
        Ok(Embedding { manifold: manifold.clone(), lower, upper, spd_range })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn search_space(&self) -> Manifold {
        Manifold::Euclidean { dim: self.dim() }
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::Coordinates { lower: self.lower.clone(), upper: self.upper.clone() }
    }

    /// Maps box coordinates onto the manifold: normalization on spheres,
    /// wrapping on tori, lifting on hyperbolic space, eigenvalue clipping on
    /// SPD and polar projection on SO(3).
    pub fn to_manifold(&self, z: &ManifoldPoint) -> Result<ManifoldPoint> {
        let ManifoldPoint::Euclidean(v) = z else {
            return Err(Error::ManifoldMismatch("embedding expects a Euclidean point".into()));
        };
        if v.len() != self.dim() {
            return Err(Error::InvalidPoint(format!("expected {} coordinates", self.dim())));
        }
        Ok(match &self.manifold {
            Manifold::Euclidean { .. } => z.clone(),
            Manifold::Sphere { .. } => {
                let n = v.norm();
                if n < 1e-12 {
                    return Err(Error::InvalidPoint("cannot normalize the zero vector".into()));
                }
                ManifoldPoint::Sphere(v / n)
            }
            Manifold::Torus { .. } => ManifoldPoint::torus(v.iter().copied().collect()),
            Manifold::Hyperbolic { .. } => ManifoldPoint::hyperbolic_from_spatial(v.as_slice()),
            Manifold::Rotation => {
                let m = Matrix3::from_row_slice(v.as_slice());
                if m.norm() < 1e-12 {
                    return Err(Error::InvalidPoint("cannot project the zero matrix".into()));
                }
                ManifoldPoint::Rotation(polar_projection(&m))
            }
            Manifold::Spd { .. } => {
                let m = symmetric_from_upper(v);
                ManifoldPoint::Spd(clip_eigenvalues(&m, self.spd_range.0, self.spd_range.1))
            }
            Manifold::Product { .. } => unreachable!("rejected in new"),
        })
    }
}

/// Symmetric matrix from its upper triangle, row by row.
fn symmetric_from_upper(v: &DVector<f64>) -> DMatrix<f64> {
    let d = ((((8 * v.len() + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    let mut out = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            out[(i, j)] = v[k];
            out[(j, i)] = v[k];
            k += 1;
        }
    }
    out
}
