//! Points, geodesics and tangent-space calculus on the supported spaces.
//!
//! Every space works with tangent vectors expressed as coefficients in an
//! orthonormal basis of the tangent space (see [`tangent_basis`]), so the
//! optimizer and the benchmark projections can treat all of them as ℝⁿ
//! locally.

mod euclidean;
mod hyperbolic;
mod rotation;
mod sphere;
mod spd;
mod torus;

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use hyperbolic::minkowski_inner;
pub(crate) use torus::wrapped_delta as torus_delta;

/// Descriptor of a supported space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Manifold {
    /// ℝ^d.
    Euclidean { dim: usize },
    /// Unit sphere S^d ⊂ ℝ^{d+1}.
    Sphere { dim: usize },
    /// Flat torus T^d, coordinates in [0,1)^d.
    Torus { dim: usize },
    /// Rotation group SO(3).
    Rotation,
    /// Symmetric positive definite d×d matrices, affine-invariant metric.
    Spd { dim: usize },
    /// Hyperbolic space H^d in the Lorentz model.
    Hyperbolic { dim: usize },
    /// Cartesian product; only used as kernel input.
    Product { factors: Vec<Manifold> },
}

impl Manifold {
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Euclidean { dim }
            | Manifold::Sphere { dim }
            | Manifold::Torus { dim }
            | Manifold::Hyperbolic { dim } => *dim,
            Manifold::Rotation => 3,
            Manifold::Spd { dim } => dim * (dim + 1) / 2,
            Manifold::Product { factors } => factors.iter().map(Manifold::intrinsic_dim).sum(),
        }
    }

    pub fn is_compact(&self) -> bool {
        match self {
            Manifold::Sphere { .. } | Manifold::Torus { .. } | Manifold::Rotation => true,
            Manifold::Product { factors } => factors.iter().all(Manifold::is_compact),
            _ => false,
        }
    }

    /// Injectivity radius, `f64::INFINITY` for Hadamard spaces.
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Manifold::Sphere { .. } | Manifold::Torus { .. } | Manifold::Rotation => {
                std::f64::consts::PI
            }
            _ => f64::INFINITY,
        }
    }

    /// Diameter for compact spaces, `None` otherwise.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Manifold::Sphere { .. } | Manifold::Rotation => Some(std::f64::consts::PI),
            Manifold::Torus { dim } => Some(std::f64::consts::PI * (*dim as f64).sqrt()),
            _ => None,
        }
    }

    /// Length of the serialized coordinate list of a point.
    pub fn coord_len(&self) -> usize {
        match self {
            Manifold::Euclidean { dim } | Manifold::Torus { dim } => *dim,
            Manifold::Sphere { dim } | Manifold::Hyperbolic { dim } => dim + 1,
            Manifold::Rotation => 9,
            Manifold::Spd { dim } => dim * (dim + 1) / 2,
            Manifold::Product { factors } => factors.iter().map(Manifold::coord_len).sum(),
        }
    }

    /// Short label such as `S2`, `T2`, `SO3`, `SPD2`, `H3`, `R4`.
    pub fn label(&self) -> String {
        match self {
            Manifold::Euclidean { dim } => format!("R{dim}"),
            Manifold::Sphere { dim } => format!("S{dim}"),
            Manifold::Torus { dim } => format!("T{dim}"),
            Manifold::Rotation => "SO3".into(),
            Manifold::Spd { dim } => format!("SPD{dim}"),
            Manifold::Hyperbolic { dim } => format!("H{dim}"),
            Manifold::Product { factors } => factors
                .iter()
                .map(Manifold::label)
                .collect::<Vec<_>>()
                .join("x"),
        }
    }

    /// The distinguished base point used for sampling and projections.
    pub fn origin(&self) -> ManifoldPoint {
        match self {
            Manifold::Euclidean { dim } => ManifoldPoint::Euclidean(DVector::zeros(*dim)),
            Manifold::Sphere { dim } => {
                let mut v = DVector::zeros(dim + 1);
                v[*dim] = 1.0;
                ManifoldPoint::Sphere(v)
            }
            Manifold::Torus { dim } => ManifoldPoint::Torus(DVector::zeros(*dim)),
            Manifold::Rotation => ManifoldPoint::Rotation(Matrix3::identity()),
            Manifold::Spd { dim } => ManifoldPoint::Spd(DMatrix::identity(*dim, *dim)),
            Manifold::Hyperbolic { dim } => {
                let mut v = DVector::zeros(dim + 1);
                v[0] = 1.0;
                ManifoldPoint::Hyperbolic(v)
            }
            Manifold::Product { factors } => {
                ManifoldPoint::Product(factors.iter().map(Manifold::origin).collect())
            }
        }
    }

    fn check_supported(&self) -> Result<()> {
        match self {
            Manifold::Sphere { dim } if *dim < 1 => {
                Err(Error::InvalidArgument("sphere dimension must be >= 1".into()))
            }
            Manifold::Euclidean { dim }
            | Manifold::Torus { dim }
            | Manifold::Spd { dim }
            | Manifold::Hyperbolic { dim }
                if *dim < 1 =>
            {
                Err(Error::InvalidArgument("dimension must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A point on one of the supported spaces.
#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldPoint {
    Euclidean(DVector<f64>),
    Sphere(DVector<f64>),
    Torus(DVector<f64>),
    Rotation(Matrix3<f64>),
    Spd(DMatrix<f64>),
    Hyperbolic(DVector<f64>),
    Product(Vec<ManifoldPoint>),
}

pub const SPHERE_TOL: f64 = 1e-10;
pub const ROTATION_TOL: f64 = 1e-8;
pub const SPD_SYM_TOL: f64 = 1e-10;
pub const HYPERBOLIC_TOL: f64 = 1e-8;

impl ManifoldPoint {
    pub fn euclidean(coords: Vec<f64>) -> Self {
        ManifoldPoint::Euclidean(DVector::from_vec(coords))
    }

    pub fn sphere(coords: Vec<f64>) -> Result<Self> {
        let p = ManifoldPoint::Sphere(DVector::from_vec(coords));
        p.validate()?;
        Ok(p)
    }

    /// Wraps the coordinates into [0,1).
    pub fn torus(coords: Vec<f64>) -> Self {
        ManifoldPoint::Torus(DVector::from_vec(coords).map(torus::wrap))
    }

    pub fn rotation(m: Matrix3<f64>) -> Result<Self> {
        let p = ManifoldPoint::Rotation(m);
        p.validate()?;
        Ok(p)
    }

    pub fn spd(m: DMatrix<f64>) -> Result<Self> {
        let p = ManifoldPoint::Spd(m);
        p.validate()?;
        Ok(p)
    }

    pub fn hyperbolic(coords: Vec<f64>) -> Result<Self> {
        let p = ManifoldPoint::Hyperbolic(DVector::from_vec(coords));
        p.validate()?;
        Ok(p)
    }

    /// Lifts spatial coordinates onto the upper hyperboloid sheet.
    pub fn hyperbolic_from_spatial(spatial: &[f64]) -> Self {
        ManifoldPoint::Hyperbolic(hyperbolic::lift(spatial))
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            ManifoldPoint::Euclidean(v) => Manifold::Euclidean { dim: v.len() },
            ManifoldPoint::Sphere(v) => Manifold::Sphere { dim: v.len() - 1 },
            ManifoldPoint::Torus(v) => Manifold::Torus { dim: v.len() },
            ManifoldPoint::Rotation(_) => Manifold::Rotation,
            ManifoldPoint::Spd(m) => Manifold::Spd { dim: m.nrows() },
            ManifoldPoint::Hyperbolic(v) => Manifold::Hyperbolic { dim: v.len() - 1 },
            ManifoldPoint::Product(parts) => Manifold::Product {
                factors: parts.iter().map(ManifoldPoint::manifold).collect(),
            },
        }
    }

    /// Checks the per-space validity invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldPoint::Euclidean(v) => finite(v.iter()),
            ManifoldPoint::Sphere(v) => sphere::validate(v),
            ManifoldPoint::Torus(v) => torus::validate(v),
            ManifoldPoint::Rotation(m) => rotation::validate(m),
            ManifoldPoint::Spd(m) => spd::validate(m),
            ManifoldPoint::Hyperbolic(v) => hyperbolic::validate(v),
            ManifoldPoint::Product(parts) => parts.iter().try_for_each(ManifoldPoint::validate),
        }
    }

    /// Serialized coordinates: vectors as-is, torus in [0,1), rotations
    /// row-major, SPD matrices as their upper triangle (row by row).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            ManifoldPoint::Euclidean(v)
            | ManifoldPoint::Sphere(v)
            | ManifoldPoint::Torus(v)
            | ManifoldPoint::Hyperbolic(v) => v.iter().copied().collect(),
            ManifoldPoint::Rotation(m) => {
                (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect()
            }
            ManifoldPoint::Spd(m) => {
                let d = m.nrows();
                (0..d).flat_map(|i| (i..d).map(move |j| m[(i, j)])).collect()
            }
            ManifoldPoint::Product(parts) => parts.iter().flat_map(ManifoldPoint::coords).collect(),
        }
    }

    /// Inverse of [`ManifoldPoint::coords`]; validates the result.
    pub fn from_coords(manifold: &Manifold, coords: &[f64]) -> Result<Self> {
        if coords.len() != manifold.coord_len() {
            return Err(Error::InvalidPoint(format!(
                "{manifold} expects {} coordinates, got {}",
                manifold.coord_len(),
                coords.len()
            )));
        }
        let p = match manifold {
            Manifold::Euclidean { .. } => ManifoldPoint::euclidean(coords.to_vec()),
            Manifold::Sphere { .. } => ManifoldPoint::Sphere(DVector::from_column_slice(coords)),
            Manifold::Torus { .. } => ManifoldPoint::torus(coords.to_vec()),
            Manifold::Rotation => ManifoldPoint::Rotation(Matrix3::from_row_slice(coords)),
            Manifold::Spd { dim } => {
                let d = *dim;
                let mut m = DMatrix::zeros(d, d);
                let mut k = 0;
                for i in 0..d {
                    for j in i..d {
                        m[(i, j)] = coords[k];
                        m[(j, i)] = coords[k];
                        k += 1;
                    }
                }
                ManifoldPoint::Spd(m)
            }
            Manifold::Hyperbolic { .. } => {
                ManifoldPoint::Hyperbolic(DVector::from_column_slice(coords))
            }
            Manifold::Product { factors } => {
                let mut parts = Vec::with_capacity(factors.len());
                let mut offset = 0;
                for f in factors {
                    let n = f.coord_len();
                    parts.push(ManifoldPoint::from_coords(f, &coords[offset..offset + n])?);
                    offset += n;
                }
                ManifoldPoint::Product(parts)
            }
        };
        p.validate()?;
        Ok(p)
    }

    /// Euclidean norm of the serialized coordinates.
    pub fn coord_norm(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

fn finite<'a>(mut it: impl Iterator<Item = &'a f64>) -> Result<()> {
    if it.all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidPoint("non-finite coordinate".into()))
    }
}

/// Tangent vector stored as coefficients in the orthonormal basis returned
/// by [`tangent_basis`] at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: ManifoldPoint,
    pub coeffs: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: ManifoldPoint, coeffs: DVector<f64>) -> Result<Self> {
        let dim = base.manifold().intrinsic_dim();
        if coeffs.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "tangent vector needs {dim} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(TangentVector { base, coeffs })
    }

    pub fn zero(base: ManifoldPoint) -> Self {
        let dim = base.manifold().intrinsic_dim();
        TangentVector { base, coeffs: DVector::zeros(dim) }
    }

    /// Riemannian norm (the basis is orthonormal).
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

fn same_manifold(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<()> {
    let (a, b) = (p.manifold(), q.manifold());
    if a == b {
        Ok(())
    } else {
        Err(Error::ManifoldMismatch(format!("{a} vs {b}")))
    }
}

/// Geodesic distance between two points of the same space.
pub fn geodesic_distance(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
    same_manifold(p, q)?;
    p.validate()?;
    q.validate()?;
    Ok(distance_unchecked(p, q))
}

pub(crate) fn distance_unchecked(p: &ManifoldPoint, q: &ManifoldPoint) -> f64 {
    match (p, q) {
        (ManifoldPoint::Euclidean(a), ManifoldPoint::Euclidean(b)) => (a - b).norm(),
        (ManifoldPoint::Sphere(a), ManifoldPoint::Sphere(b)) => sphere::distance(a, b),
        (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) => torus::distance(a, b),
        (ManifoldPoint::Rotation(a), ManifoldPoint::Rotation(b)) => rotation::distance(a, b),
        (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => spd::distance(a, b),
        (ManifoldPoint::Hyperbolic(a), ManifoldPoint::Hyperbolic(b)) => {
            hyperbolic::distance(a, b)
        }
        (ManifoldPoint::Product(a), ManifoldPoint::Product(b)) => a
            .iter()
            .zip(b)
            .map(|(x, y)| distance_unchecked(x, y).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => f64::NAN,
    }
}

/// Ambient representation of a tangent vector (column vector for the
/// vector-embedded spaces, a matrix for SO(3) and SPD).
pub type AmbientTangent = DMatrix<f64>;

/// Orthonormal basis of the tangent space at `p` under the Riemannian metric.
pub fn tangent_basis(p: &ManifoldPoint) -> Result<Vec<AmbientTangent>> {
    p.validate()?;
    Ok(match p {
        ManifoldPoint::Euclidean(v) | ManifoldPoint::Torus(v) => euclidean::basis(v.len()),
        ManifoldPoint::Sphere(v) => sphere::basis(v),
        ManifoldPoint::Rotation(m) => rotation::basis(m),
        ManifoldPoint::Spd(m) => spd::basis(m),
        ManifoldPoint::Hyperbolic(v) => hyperbolic::basis(v),
        ManifoldPoint::Product(_) => {
            return Err(Error::Unsupported("tangent basis of product points".into()))
        }
    })
}

/// Riemannian inner product of two ambient tangent vectors at `p`.
pub fn metric_inner(p: &ManifoldPoint, u: &AmbientTangent, v: &AmbientTangent) -> Result<f64> {
    Ok(match p {
        ManifoldPoint::Euclidean(_) | ManifoldPoint::Torus(_) | ManifoldPoint::Sphere(_) => {
            u.dot(v)
        }
        ManifoldPoint::Rotation(_) => 0.5 * (u.transpose() * v).trace(),
        ManifoldPoint::Spd(m) => spd::metric(m, u, v)?,
        ManifoldPoint::Hyperbolic(_) => {
            minkowski_inner(&u.column(0).into_owned(), &v.column(0).into_owned())
        }
        ManifoldPoint::Product(_) => {
            return Err(Error::Unsupported("metric on product points".into()))
        }
    })
}

/// Exponential map.
pub fn exp_map(v: &TangentVector) -> Result<ManifoldPoint> {
    let dim = v.base.manifold().intrinsic_dim();
    if v.coeffs.len() != dim {
        return Err(Error::InvalidArgument("tangent coefficient count mismatch".into()));
    }
    v.base.validate()?;
    exp_unchecked(&v.base, &v.coeffs)
}

pub(crate) fn exp_unchecked(base: &ManifoldPoint, c: &DVector<f64>) -> Result<ManifoldPoint> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite tangent coefficients".into()));
    }
    if c.iter().all(|&x| x == 0.0) {
        return Ok(base.clone());
    }
    Ok(match base {
        ManifoldPoint::Euclidean(x) => ManifoldPoint::Euclidean(x + c),
        ManifoldPoint::Torus(x) => ManifoldPoint::Torus(torus::exp(x, c)),
        ManifoldPoint::Sphere(x) => ManifoldPoint::Sphere(sphere::exp(x, c)),
        ManifoldPoint::Rotation(m) => ManifoldPoint::Rotation(rotation::exp(m, c)),
        ManifoldPoint::Spd(m) => ManifoldPoint::Spd(spd::exp(m, c)),
        ManifoldPoint::Hyperbolic(x) => ManifoldPoint::Hyperbolic(hyperbolic::exp(x, c)),
        ManifoldPoint::Product(_) => {
            return Err(Error::Unsupported("exponential map on product points".into()))
        }
    })
}

/// Logarithm map: the tangent vector at `p` whose geodesic reaches `q`.
pub fn log_map(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<TangentVector> {
    same_manifold(p, q)?;
    p.validate()?;
    q.validate()?;
    let coeffs = match (p, q) {
        (ManifoldPoint::Euclidean(a), ManifoldPoint::Euclidean(b)) => b - a,
        (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) => torus::log(a, b),
        (ManifoldPoint::Sphere(a), ManifoldPoint::Sphere(b)) => sphere::log(a, b)?,
        (ManifoldPoint::Rotation(a), ManifoldPoint::Rotation(b)) => rotation::log(a, b)?,
        (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => spd::log(a, b),
        (ManifoldPoint::Hyperbolic(a), ManifoldPoint::Hyperbolic(b)) => hyperbolic::log(a, b),
        _ => return Err(Error::Unsupported("logarithm map on product points".into())),
    };
    Ok(TangentVector { base: p.clone(), coeffs })
}

/// Parameters of [`random_point`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingOptions {
    /// Per-coordinate box for Euclidean points.
    pub euclidean_box: (f64, f64),
    /// Eigenvalue box for SPD points (log-uniform).
    pub spd_eigen_box: (f64, f64),
    /// Standard deviation of the Gaussian tangent vector for hyperbolic points.
    pub hyperbolic_scale: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            euclidean_box: (0.0, 1.0),
            spd_eigen_box: (1e-3, 5.0),
            hyperbolic_scale: 1.0,
        }
    }
}

/// Draws a random point: Haar on spheres and SO(3), uniform on tori and
/// Euclidean boxes, log-uniform spectrum with Haar eigenvectors on SPD,
/// exp of a Gaussian tangent vector at the origin on hyperbolic space.
pub fn random_point<R: Rng + ?Sized>(
    rng: &mut R,
    manifold: &Manifold,
    opts: &SamplingOptions,
) -> Result<ManifoldPoint> {
    manifold.check_supported()?;
    Ok(match manifold {
        Manifold::Euclidean { dim } => {
            let (lo, hi) = opts.euclidean_box;
            ManifoldPoint::Euclidean(DVector::from_fn(*dim, |_, _| rng.random_range(lo..=hi)))
        }
        Manifold::Sphere { dim } => ManifoldPoint::Sphere(sphere::random(rng, *dim)),
        Manifold::Torus { dim } => {
            ManifoldPoint::Torus(DVector::from_fn(*dim, |_, _| rng.random::<f64>()))
        }
        Manifold::Rotation => ManifoldPoint::Rotation(rotation::random(rng)),
        Manifold::Spd { dim } => ManifoldPoint::Spd(spd::random(rng, *dim, opts.spd_eigen_box)),
        Manifold::Hyperbolic { dim } => {
            ManifoldPoint::Hyperbolic(hyperbolic::random(rng, *dim, opts.hyperbolic_scale))
        }
        Manifold::Product { factors } => ManifoldPoint::Product(
            factors
                .iter()
                .map(|f| random_point(rng, f, opts))
                .collect::<Result<_>>()?,
        ),
    })
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

pub use rotation::polar_projection;
pub use spd::{clip_eigenvalues, eigenvalues as spd_eigenvalues};
