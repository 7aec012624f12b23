#![allow(dead_code)]

use geobo::kernel::KernelSpec;
use geobo::manifold::{random_point, SamplingOptions};
use geobo::rng::{seeded, Rng};
use geobo::{Manifold, ManifoldPoint};
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng as _;
use rand_distr::StandardNormal;

pub fn gaussian_matrix(rng: &mut Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal(rng: &mut Rng, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

pub fn random_rotation3(rng: &mut Rng) -> Matrix3<f64> {
    let mut q = random_orthogonal(rng, 3);
    if q.determinant() < 0.0 {
        for i in 0..3 {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    Matrix3::from_fn(|i, j| q[(i, j)])
}

/// Lorentz boost of rapidity `phi` along unit direction `n`, composed with a
/// spatial rotation `q`.
pub fn lorentz_transform(n: &DVector<f64>, phi: f64, q: &DMatrix<f64>) -> DMatrix<f64> {
    let d = n.len();
    let mut b = DMatrix::identity(d + 1, d + 1);
    b[(0, 0)] = phi.cosh();
    for i in 0..d {
        b[(0, i + 1)] = phi.sinh() * n[i];
        b[(i + 1, 0)] = phi.sinh() * n[i];
        for j in 0..d {
            b[(i + 1, j + 1)] += (phi.cosh() - 1.0) * n[i] * n[j];
        }
    }
    let mut r = DMatrix::identity(d + 1, d + 1);
    r.view_mut((1, 1), (d, d)).copy_from(q);
    b * r
}

/// A random isometry of `m`, returned as a point map.
pub fn random_isometry(rng: &mut Rng, m: &Manifold) -> Box<dyn Fn(&ManifoldPoint) -> ManifoldPoint> {
    match m {
        Manifold::Euclidean { dim } => {
            let q = random_orthogonal(rng, *dim);
            let t = DVector::from_fn(*dim, |_, _| rng.random_range(-1.0..1.0));
            Box::new(move |p| match p {
                ManifoldPoint::Euclidean(x) => ManifoldPoint::Euclidean(&q * x + &t),
                _ => unreachable!(),
            })
        }
        Manifold::Sphere { dim } => {
            let q = random_orthogonal(rng, dim + 1);
            Box::new(move |p| match p {
                ManifoldPoint::Sphere(x) => {
                    let y = &q * x;
                    ManifoldPoint::sphere((&y / y.norm()).iter().copied().collect()).unwrap()
                }
                _ => unreachable!(),
            })
        }
        Manifold::Torus { dim } => {
            let t: Vec<f64> = (0..*dim).map(|_| rng.random::<f64>()).collect();
            Box::new(move |p| match p {
                ManifoldPoint::Torus(x) => {
                    ManifoldPoint::torus(x.iter().zip(&t).map(|(a, b)| a + b).collect())
                }
                _ => unreachable!(),
            })
        }
        Manifold::Rotation => {
            let (l, r) = (random_rotation3(rng), random_rotation3(rng));
            Box::new(move |p| match p {
                ManifoldPoint::Rotation(x) => {
                    ManifoldPoint::rotation(geobo::manifold::polar_projection(&(l * x * r))).unwrap()
                }
                _ => unreachable!(),
            })
        }
        Manifold::Spd { dim } => {
            let a = gaussian_matrix(rng, *dim) * 0.5 + DMatrix::identity(*dim, *dim);
            Box::new(move |p| match p {
                ManifoldPoint::Spd(x) => {
                    let y = &a * x * a.transpose();
                    ManifoldPoint::spd((&y + y.transpose()) * 0.5).unwrap()
                }
                _ => unreachable!(),
            })
        }
        Manifold::Hyperbolic { dim } => {
            let n = DVector::from_fn(*dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = &n / n.norm();
            let phi = rng.random_range(0.1..1.0);
            let q = random_orthogonal(rng, *dim);
            let b = lorentz_transform(&n, phi, &q);
            Box::new(move |p| match p {
                ManifoldPoint::Hyperbolic(x) => {
                    let y = &b * x;
                    ManifoldPoint::hyperbolic_from_spatial(&y.as_slice()[1..])
                }
                _ => unreachable!(),
            })
        }
        Manifold::Product { .. } => unimplemented!("isometries of products"),
    }
}

pub fn points(seed: u64, m: &Manifold, n: usize) -> Vec<ManifoldPoint> {
    let mut rng = seeded(seed);
    let opts = SamplingOptions::default();
    (0..n).map(|_| random_point(&mut rng, m, &opts).unwrap()).collect()
}

pub fn min_eigenvalue(k: &DMatrix<f64>) -> f64 {
    geobo::linalg::sym_eigen(k).0[0]
}

pub fn spec(nu: Option<f64>, kappa: f64) -> KernelSpec {
    match nu {
        Some(v) => KernelSpec::riemannian_matern(v, kappa),
        None => KernelSpec::riemannian_se(kappa),
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Sphere point at geodesic distance `rho` from the north pole along the
/// first axis.
pub fn sphere_point_at(dim: usize, rho: f64) -> ManifoldPoint {
    let mut v = vec![0.0; dim + 1];
    v[0] = rho.sin();
    v[dim] = rho.cos();
    ManifoldPoint::sphere(v).unwrap()
}

pub fn rotation_z(theta: f64) -> ManifoldPoint {
    let (c, s) = (theta.cos(), theta.sin());
    ManifoldPoint::rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)).unwrap()
}
