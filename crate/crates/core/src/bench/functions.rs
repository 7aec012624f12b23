//! Euclidean test functions and their projection onto a manifold through the
//! tangent space at a base point.

use std::f64::consts::{E, PI, TAU};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::kernel::{Kernel, KernelSpec};
use crate::manifold::log_map;
use crate::{rng, Error, Manifold, ManifoldPoint, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Ackley,
    Rosenbrock,
    Levy,
    StyblinskiTang,
    /// `−k(x, x_hidden)` for a unit-variance SE kernel on the manifold.
    HiddenKernelBump,
}

const STYBLINSKI_ARGMIN: f64 = -2.903_534_027_771_177_6;

impl TestFunction {
    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Ackley => "ackley",
            TestFunction::Rosenbrock => "rosenbrock",
            TestFunction::Levy => "levy",
            TestFunction::StyblinskiTang => "styblinski_tang",
            TestFunction::HiddenKernelBump => "hidden_kernel_bump",
        }
    }

    /// Half-width of the usual search box `[−w, w]^d`.
    pub fn half_width(self) -> f64 {
        match self {
            TestFunction::Ackley => 32.768,
            TestFunction::Rosenbrock => 2.048,
            TestFunction::Levy => 10.0,
            TestFunction::StyblinskiTang => 5.0,
            TestFunction::HiddenKernelBump => 1.0,
        }
    }

    pub fn min_dim(self) -> usize {
        if self == TestFunction::Rosenbrock {
            2
        } else {
            1
        }
    }

    /// Known unconstrained minimizer and minimum.
    pub fn argmin(self, dim: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            TestFunction::Ackley => Some((vec![0.0; dim], 0.0)),
            TestFunction::Rosenbrock | TestFunction::Levy => Some((vec![1.0; dim], 0.0)),
            TestFunction::StyblinskiTang => {
                let z = vec![STYBLINSKI_ARGMIN; dim];
                let f = styblinski_tang(&z);
                Some((z, f))
            }
            TestFunction::HiddenKernelBump => None,
        }
    }

    /// Evaluates the Euclidean function; `HiddenKernelBump` has none.
    pub fn eval(self, z: &[f64]) -> f64 {
        match self {
            TestFunction::Ackley => ackley(z),
            TestFunction::Rosenbrock => rosenbrock(z),
            TestFunction::Levy => levy(z),
            TestFunction::StyblinskiTang => styblinski_tang(z),
            TestFunction::HiddenKernelBump => f64::NAN,
        }
    }
}

pub fn ackley(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let sq = z.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = z.iter().map(|v| (TAU * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

pub fn levy(z: &[f64]) -> f64 {
    let w: Vec<f64> = z.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let mut s = (PI * w[0]).sin().powi(2);
    for wi in &w[..d - 1] {
        s += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
    }
    s + (w[d - 1] - 1.0).powi(2) * (1.0 + (TAU * w[d - 1]).sin().powi(2))
}

pub fn styblinski_tang(z: &[f64]) -> f64 {
    0.5 * z.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
}

/// Shape of the tangent-coefficient domain at the base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// Ball of the given radius.
    Ball(f64),
    /// Cube `[−h, h]^d` (flat tori, where the log map covers a cube).
    Cube(f64),
}

impl Domain {
    pub fn for_manifold(m: &Manifold, radius: f64) -> Domain {
        match m {
            Manifold::Torus { .. } => Domain::Cube(PI),
            _ => Domain::Ball(radius),
        }
    }

    pub fn extent(self) -> f64 {
        match self {
            Domain::Ball(r) | Domain::Cube(r) => r,
        }
    }

    /// Nearest point of the domain (radial shrink for balls).
    pub fn clamp(self, v: &mut [f64]) {
        match self {
            Domain::Ball(r) => {
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n > r {
                    v.iter_mut().for_each(|c| *c *= r / n);
                }
            }
            Domain::Cube(h) => v.iter_mut().for_each(|c| *c = c.clamp(-h, h)),
        }
    }

    pub fn contains(self, v: &[f64]) -> bool {
        match self {
            Domain::Ball(r) => v.iter().map(|c| c * c).sum::<f64>() <= r * r * (1.0 + 1e-12),
            Domain::Cube(h) => v.iter().all(|c| c.abs() <= h),
        }
    }

    /// Point with uniform distribution on the domain.
    pub fn sample(self, r: &mut rng::Rng, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..=1.0) * self.extent()).collect();
            if self.contains(&v) {
                return v;
            }
        }
    }
}

/// A test function projected onto a manifold:
/// `f_M(x) = f(c · log_base(x))` with `c = half_width / radius`.
#[derive(Debug)]
pub struct ProjectedObjective {
    pub function: TestFunction,
    pub manifold: Manifold,
    pub base: ManifoldPoint,
    pub domain: Domain,
    hidden: Option<(ManifoldPoint, Kernel)>,
    cut_locus_hits: AtomicUsize,
}

impl ProjectedObjective {
    /// `radius` bounds the tangent ball on non-compact spaces; compact
    /// spaces use their injectivity radius.
    pub fn new(function: TestFunction, manifold: &Manifold, base: ManifoldPoint, radius: f64) -> Result<Self> {
        if base.manifold() != *manifold {
            return Err(Error::ManifoldMismatch(format!("base point is not on {manifold}")));
        }
        base.validate()?;
        let dim = manifold.intrinsic_dim();
        if dim < function.min_dim() {
            return Err(Error::InvalidArgument(format!("{} needs dimension >= {}", function.name(), function.min_dim())));
        }
        let r = if manifold.injectivity_radius().is_finite() { manifold.injectivity_radius() } else { radius };
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("projection radius must be positive, got {radius}")));
        }
        Ok(ProjectedObjective {
            function,
            manifold: manifold.clone(),
            base,
            domain: Domain::for_manifold(manifold, r),
            hidden: None,
            cut_locus_hits: AtomicUsize::new(0),
        })
    }

    /// `−k(x, hidden)` with an SE kernel of length scale `kappa`.
    pub fn hidden_bump(manifold: &Manifold, hidden: ManifoldPoint, kappa: f64) -> Result<Self> {
        let kernel = Kernel::new(&KernelSpec::riemannian_se(kappa), manifold)?;
        let mut p = ProjectedObjective::new(TestFunction::HiddenKernelBump, manifold, hidden.clone(), 1.0)?;
        p.hidden = Some((hidden, kernel));
        Ok(p)
    }

    pub fn scale(&self) -> f64 {
        self.function.half_width() / self.domain.extent()
    }

    pub fn dim(&self) -> usize {
        self.manifold.intrinsic_dim()
    }

    /// Number of queries that fell on the cut locus of the base point.
    pub fn cut_locus_hits(&self) -> usize {
        self.cut_locus_hits.load(Ordering::Relaxed)
    }

    /// Evaluates at tangent coefficients `v` (clamped into the domain).
    pub fn eval_tangent(&self, v: &[f64]) -> f64 {
        let mut v = v.to_vec();
        self.domain.clamp(&mut v);
        let c = self.scale();
        let z: Vec<f64> = v.iter().map(|t| c * t).collect();
        self.function.eval(&z)
    }

    pub fn eval(&self, x: &ManifoldPoint) -> Result<f64> {
        if let Some((h, k)) = &self.hidden {
            return Ok(-k.eval(x, h)?);
        }
        match log_map(&self.base, x) {
            Ok(v) => Ok(self.eval_tangent(v.coeffs.as_slice())),
            Err(Error::CutLocus(_)) => {
                self.cut_locus_hits.fetch_add(1, Ordering::Relaxed);
                let mut v = vec![0.0; self.dim()];
                v[0] = self.domain.extent();
                Ok(self.eval_tangent(&v))
            }
            Err(e) => Err(e),
        }
    }

    /// Global minimum over the domain: exact when the unconstrained
    /// minimizer is inside, otherwise grid search (d ≤ 3) or random
    /// multistart followed by pattern-search refinement.
    pub fn f_star(&self, seed: u64) -> f64 {
        if self.hidden.is_some() {
            return -1.0;
        }
        let c = self.scale();
        if let Some((z, f)) = self.function.argmin(self.dim()) {
            let v: Vec<f64> = z.iter().map(|t| t / c).collect();
            if self.domain.contains(&v) {
                return f;
            }
        }
        let f = |v: &[f64]| self.eval_tangent(v);
        if self.dim() <= 3 {
            let n = [0, 400, 400, 60][self.dim()];
            grid_minimum(f, self.domain, self.dim(), n)
        } else {
            random_refinement(f, self.domain, self.dim(), 10_000, &mut rng::seeded(seed))
        }
    }
}

/// Compass search inside `domain` from `x0`, step shrinking to `tol`.
pub fn pattern_search(f: impl Fn(&[f64]) -> f64, domain: Domain, x0: &[f64], step: f64, tol: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut h = step;
    while h > tol {
        let mut improved = false;
        for i in 0..x.len() {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += s * h;
                domain.clamp(&mut y);
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Minimum over an `n`-per-axis grid of the domain's bounding cube, with
/// the best ten grid points refined by pattern search.
pub fn grid_minimum(f: impl Fn(&[f64]) -> f64, domain: Domain, dim: usize, n: usize) -> f64 {
    let h = domain.extent();
    let spacing = 2.0 * h / (n - 1) as f64;
    let total = n.pow(dim as u32);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut v = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for c in v.iter_mut() {
            *c = -h + spacing * (r % n) as f64;
            r /= n;
        }
        if !domain.contains(&v) {
            continue;
        }
        let fv = f(&v);
        if best.len() < 10 || fv < best[best.len() - 1].0 {
            best.push((fv, v.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(10);
        }
    }
    best.iter()
        .map(|(_, x)| pattern_search(&f, domain, x, spacing, 1e-10).1)
        .fold(f64::INFINITY, f64::min)
}

/// Best of `n` uniform samples, with the best twenty refined.
pub fn random_refinement(f: impl Fn(&[f64]) -> f64, domain: Domain, dim: usize, n: usize, r: &mut rng::Rng) -> f64 {
    let mut pts: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|_| {
            let v = domain.sample(r, dim);
            (f(&v), v)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step = domain.extent() * 0.05;
    pts.iter()
        .take(20)
        .map(|(_, x)| pattern_search(&f, domain, x, step, 1e-10).1)
        .fold(f64::INFINITY, f64::min)
}
