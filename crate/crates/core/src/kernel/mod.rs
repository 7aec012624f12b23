//! Covariance functions on the supported spaces.
//!
//! A [`KernelSpec`] is a plain serializable description. [`Kernel::new`]
//! prepares it for one [`Manifold`]: series coefficients, lattice tables,
//! quadrature nodes and the normalization constant are computed once, and
//! [`Kernel::eval`] then returns values with `k(x, x) = σ²`.
//!
//! Evaluation goes through a [`PairInvariant`] (geodesic distance, torus
//! offsets, SPD log-spectrum), so callers that sweep hyperparameters over a
//! fixed point set can compute the geometry once.

mod compact;
mod euclidean;
mod noncompact;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::manifold::{distance_unchecked, Manifold, ManifoldPoint};
use crate::quadrature::QuadConfig;
use crate::{linalg, Error, Result};

pub use euclidean::{half_integer_order, matern_half_integer};
pub use noncompact::matern_from_heat;

use compact::{SphereSeries, So3Series, SpectralWeight, TorusImages, TorusTable, GridTable};
use euclidean::EuclideanMatern;
use noncompact::HeatMixture;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RiemannianMatern,
    RiemannianSe,
    EuclideanMatern,
    EuclideanSe,
    NaiveGeodesicSe,
    Product,
    CholeskyEuclidean,
}

/// Smoothness ν; serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    Finite(f64),
    Infinite,
}

impl Smoothness {
    pub fn finite(self) -> Option<f64> {
        match self {
            Smoothness::Finite(v) => Some(v),
            Smoothness::Infinite => None,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(v) => write!(f, "{v}"),
            Smoothness::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Smoothness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Smoothness::Finite(v) => s.serialize_f64(*v),
            Smoothness::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Smoothness {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_infinite() && v > 0.0 => Ok(Smoothness::Infinite),
            Repr::Num(v) => Ok(Smoothness::Finite(v)),
            Repr::Str(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(Smoothness::Infinite),
                other => other
                    .parse::<f64>()
                    .map(Smoothness::Finite)
                    .map_err(|_| serde::de::Error::custom(format!("invalid smoothness {s:?}"))),
            },
        }
    }
}

/// Truncation and quadrature settings. `None` bounds are chosen from the
/// length scale so the omitted tail is below `series_tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationConfig {
    pub torus_l: Option<usize>,
    pub sphere_n: Option<usize>,
    pub so3_l: Option<usize>,
    pub series_tol: f64,
    /// Cap on series length or lattice size when bounds are automatic.
    pub max_terms: usize,
    pub matern_quad_nodes: usize,
    pub line_quad: QuadConfig,
    /// Maximum interval count of an interpolation table replacing the series
    /// on spheres, SO(3) and tori of dimension ≤ 2 (per axis, at most 512 in
    /// two dimensions); trades accuracy for O(1) evaluation.
    pub zonal_table: Option<usize>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            torus_l: None,
            sphere_n: None,
            so3_l: None,
            series_tol: 1e-10,
            max_terms: 40_000,
            matern_quad_nodes: 64,
            line_quad: QuadConfig::default(),
            zonal_table: None,
        }
    }
}

impl TruncationConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("torus_l", self.torus_l), ("sphere_n", self.sphere_n), ("so3_l", self.so3_l)] {
            if v == Some(0) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 1")));
            }
        }
        if self.zonal_table.is_some_and(|m| m < 4) {
            return Err(Error::InvalidArgument("zonal_table needs at least 4 intervals".into()));
        }
        if !(self.series_tol > 0.0) || self.matern_quad_nodes < 2 || self.max_terms < 1 {
            return Err(Error::InvalidArgument("invalid truncation config".into()));
        }
        if !(self.line_quad.abs_tol > 0.0) || self.line_quad.max_subdivisions < 1 {
            return Err(Error::InvalidArgument("invalid line quadrature config".into()));
        }
        Ok(())
    }
}

/// Optional feature map applied to points before a product kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMap {
    /// SPD(2) → (ℝ² eigenvalues, descending) × (T¹ eigenvector angle / π),
    /// with the first eigenvector's sign fixed to the upper half plane.
    SpdEigen,
}

/// Specification of a covariance function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    #[serde(default = "default_nu")]
    pub nu: Smoothness,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(default)]
    pub trunc: TruncationConfig,
    /// Unit-variance factor kernels of a `product` kernel.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_map: Option<InputMap>,
}

fn default_nu() -> Smoothness {
    Smoothness::Finite(2.5)
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn new(family: Family, nu: Smoothness, kappa: f64, sigma2: f64) -> Self {
        KernelSpec {
            family,
            nu,
            kappa,
            sigma2,
            trunc: TruncationConfig::default(),
            factors: Vec::new(),
            input_map: None,
        }
    }

    pub fn riemannian_se(kappa: f64) -> Self {
        KernelSpec::new(Family::RiemannianSe, Smoothness::Infinite, kappa, 1.0)
    }

    pub fn riemannian_matern(nu: f64, kappa: f64) -> Self {
        KernelSpec::new(Family::RiemannianMatern, Smoothness::Finite(nu), kappa, 1.0)
    }

    pub fn product(factors: Vec<KernelSpec>, sigma2: f64) -> Self {
        let mut s = KernelSpec::new(Family::Product, Smoothness::Infinite, 1.0, sigma2);
        s.factors = factors;
        s
    }

    /// Effective smoothness (`None` for ν = ∞ or an SE family).
    pub fn effective_nu(&self) -> Option<f64> {
        match self.family {
            Family::RiemannianSe | Family::EuclideanSe | Family::NaiveGeodesicSe => None,
            _ => self.nu.finite(),
        }
    }

    /// Length scales: one per factor for product kernels.
    pub fn kappas(&self) -> Vec<f64> {
        if self.family == Family::Product {
            self.factors.iter().flat_map(KernelSpec::kappas).collect()
        } else {
            vec![self.kappa]
        }
    }

    /// Replaces the length scales in the order of [`KernelSpec::kappas`].
    pub fn with_kappas(&self, kappas: &[f64]) -> Result<KernelSpec> {
        let mut out = self.clone();
        let mut it = kappas.iter().copied();
        out.assign_kappas(&mut it)?;
        if it.next().is_some() {
            return Err(Error::InvalidArgument("too many length scales".into()));
        }
        Ok(out)
    }

    fn assign_kappas(&mut self, it: &mut impl Iterator<Item = f64>) -> Result<()> {
        if self.family == Family::Product {
            for f in &mut self.factors {
                f.assign_kappas(it)?;
            }
        } else {
            self.kappa = it.next().ok_or_else(|| Error::InvalidArgument("too few length scales".into()))?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.family != Family::Product && !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", self.kappa)));
        }
        if let Smoothness::Finite(nu) = self.nu {
            if !(nu > 0.0) || nu.is_nan() {
                return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
            }
        }
        self.trunc.validate()
    }
}

/// The part of a point pair a prepared kernel depends on.
#[derive(Clone, Debug, PartialEq)]
pub enum PairInvariant {
    Distance(f64),
    /// Per-coordinate signed torus offsets in (−½, ½].
    Offsets(Vec<f64>),
    /// Log-eigenvalues of X⁻¹Y, descending.
    SpdLogSpectrum(f64, f64),
    Factors(Vec<PairInvariant>),
}

#[derive(Clone, Debug)]
enum Imp {
    Euclidean(EuclideanMatern),
    TorusHeat(Vec<f64>),
    /// Heat kernel as a wrapped Gaussian; cheaper than the series at small κ.
    TorusHeatImages { kappa: f64, m: i64 },
    TorusTable(TorusTable),
    TorusImages(TorusImages),
    Sphere(SphereSeries),
    So3(So3Series),
    /// Interpolation table of a geodesic-distance or torus-offset profile.
    Grid(GridTable),
    HypHeat { dim: usize, kappa: f64, quad: QuadConfig },
    HypMatern { dim: usize, mix: HeatMixture, quad: QuadConfig },
    SpdHeat { kappa: f64, quad: QuadConfig },
    SpdMatern { mix: HeatMixture, quad: QuadConfig },
    Naive { kappa: f64 },
    Product(Vec<Kernel>),
}

/// How a kernel reads its inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Input {
    Geodesic,
    TorusOffsets,
    SpdSpectrum,
    /// Euclidean distance between serialized coordinates.
    Coordinates,
    /// Euclidean distance between Cholesky vectors (L₁₁, L₂₁, L₂₂, …).
    Cholesky,
    Product,
}

/// A kernel prepared for one manifold, with cached normalization.
#[derive(Clone, Debug)]
pub struct Kernel {
    spec: KernelSpec,
    manifold: Manifold,
    factor_manifolds: Vec<Manifold>,
    input: Input,
    imp: Imp,
    norm: f64,
}

impl Kernel {
    pub fn new(spec: &KernelSpec, manifold: &Manifold) -> Result<Kernel> {
        spec.validate()?;
        let t = &spec.trunc;
        let nu = spec.effective_nu();
        let kappa = spec.kappa;
        let unsupported =
            || Error::Unsupported(format!("{:?} kernel on {manifold}", spec.family));
        let mut factor_manifolds = Vec::new();
        let (input, imp) = match spec.family {
            Family::EuclideanSe | Family::EuclideanMatern => {
                if matches!(manifold, Manifold::Product { .. }) {
                    return Err(unsupported());
                }
                (Input::Coordinates, Imp::Euclidean(EuclideanMatern::new(nu, kappa, t.matern_quad_nodes)?))
            }
            Family::CholeskyEuclidean => {
                if !matches!(manifold, Manifold::Spd { .. }) {
                    return Err(unsupported());
                }
                (Input::Cholesky, Imp::Euclidean(EuclideanMatern::new(nu, kappa, t.matern_quad_nodes)?))
            }
            Family::NaiveGeodesicSe => (Input::Geodesic, Imp::Naive { kappa }),
            Family::RiemannianSe | Family::RiemannianMatern => riemannian(manifold, nu, kappa, t)?,
            Family::Product => {
                if spec.factors.is_empty() {
                    return Err(Error::InvalidArgument("product kernel without factors".into()));
                }
                factor_manifolds = match (spec.input_map, manifold) {
                    (Some(InputMap::SpdEigen), Manifold::Spd { dim: 2 }) => {
                        vec![Manifold::Euclidean { dim: 2 }, Manifold::Torus { dim: 1 }]
                    }
                    (Some(InputMap::SpdEigen), _) => return Err(unsupported()),
                    (None, Manifold::Product { factors }) => factors.clone(),
                    (None, m) => vec![m.clone()],
                };
                if factor_manifolds.len() != spec.factors.len() {
                    return Err(Error::ManifoldMismatch(format!(
                        "{} kernel factors for {} manifold factors",
                        spec.factors.len(),
                        factor_manifolds.len()
                    )));
                }
                let mut ks = Vec::with_capacity(spec.factors.len());
                for (f, m) in spec.factors.iter().zip(&factor_manifolds) {
                    let mut unit = f.clone();
                    unit.sigma2 = 1.0;
                    ks.push(Kernel::new(&unit, m)?);
                }
                (Input::Product, Imp::Product(ks))
            }
        };
        let mut k = Kernel {
            spec: spec.clone(),
            manifold: manifold.clone(),
            factor_manifolds,
            input,
            imp,
            norm: 1.0,
        };
        let diag = k.raw(&k.diagonal_invariant())?;
        if !(diag > 0.0 && diag.is_finite()) {
            return Err(Error::Numerical(format!("kernel diagonal {diag} is not positive")));
        }
        k.norm = diag;
        Ok(k)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    /// Unnormalized value at the diagonal.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    fn diagonal_invariant(&self) -> PairInvariant {
        match self.input {
            Input::TorusOffsets => PairInvariant::Offsets(vec![0.0; self.manifold.intrinsic_dim()]),
            Input::SpdSpectrum => PairInvariant::SpdLogSpectrum(0.0, 0.0),
            Input::Product => match &self.imp {
                Imp::Product(ks) => {
                    PairInvariant::Factors(ks.iter().map(Kernel::diagonal_invariant).collect())
                }
                _ => unreachable!(),
            },
            _ => PairInvariant::Distance(0.0),
        }
    }

    fn check_point(&self, x: &ManifoldPoint) -> Result<()> {
        let m = x.manifold();
        if m != self.manifold {
            return Err(Error::ManifoldMismatch(format!("kernel on {}, point on {m}", self.manifold)));
        }
        x.validate()
    }

    /// Geometry of a point pair as consumed by [`Kernel::eval_invariant`].
    pub fn invariant(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<PairInvariant> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.invariant_unchecked(x, y)
    }

    fn invariant_unchecked(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<PairInvariant> {
        Ok(match self.input {
            Input::Geodesic => PairInvariant::Distance(distance_unchecked(x, y)),
            Input::TorusOffsets => match (x, y) {
                (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) => PairInvariant::Offsets(
                    a.iter().zip(b.iter()).map(|(&p, &q)| crate::manifold::torus_delta(p, q)).collect(),
                ),
                _ => unreachable!("checked manifold"),
            },
            Input::SpdSpectrum => match (x, y) {
                (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => {
                    let ev = linalg::generalized_eigenvalues(a, b)?;
                    let h1 = ev[ev.len() - 1].ln();
                    let h2 = ev[0].ln();
                    PairInvariant::SpdLogSpectrum(h1, h2)
                }
                _ => unreachable!("checked manifold"),
            },
            Input::Coordinates => {
                let (a, b) = (x.coords(), y.coords());
                PairInvariant::Distance(a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
            }
            Input::Cholesky => {
                let (a, b) = (cholesky_vector(x)?, cholesky_vector(y)?);
                PairInvariant::Distance((a - b).norm())
            }
            Input::Product => {
                let Imp::Product(ks) = &self.imp else { unreachable!() };
                let xs = self.split(x)?;
                let ys = self.split(y)?;
                PairInvariant::Factors(
                    ks.iter()
                        .zip(xs.iter().zip(&ys))
                        .map(|(k, (a, b))| k.invariant_unchecked(a, b))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    fn split(&self, x: &ManifoldPoint) -> Result<Vec<ManifoldPoint>> {
        match (self.spec.input_map, x) {
            (Some(InputMap::SpdEigen), ManifoldPoint::Spd(m)) => Ok(spd_eigen_features(m)),
            (None, ManifoldPoint::Product(parts)) => Ok(parts.clone()),
            (None, p) if self.factor_manifolds.len() == 1 => Ok(vec![p.clone()]),
            _ => Err(Error::ManifoldMismatch("product kernel input".into())),
        }
    }

    /// Unnormalized value.
    fn raw(&self, inv: &PairInvariant) -> Result<f64> {
        let dist = || match inv {
            PairInvariant::Distance(d) => Ok(*d),
            _ => Err(Error::InvalidArgument("expected a distance invariant".into())),
        };
        Ok(match &self.imp {
            Imp::Euclidean(e) => e.eval(dist()?),
            Imp::Naive { kappa } => (-dist()?.powi(2) / kappa).exp(),
            Imp::Sphere(s) => s.eval(dist()?),
            Imp::So3(s) => s.eval(dist()?),
            Imp::Grid(g) if self.input == Input::TorusOffsets => g.eval(offsets(inv)?),
            Imp::Grid(g) => g.eval(&[dist()?]),
            Imp::HypHeat { dim, kappa, quad } => noncompact::hyp_heat(*dim, dist()?, *kappa, quad)?,
            Imp::HypMatern { dim, mix, quad } => {
                let r = dist()?;
                mix.eval(|l| noncompact::hyp_heat(*dim, r, l, quad))?
            }
            Imp::TorusHeat(w) => compact::torus_heat_eval(w, offsets(inv)?),
            Imp::TorusHeatImages { kappa, m } => compact::torus_heat_images(*kappa, *m, offsets(inv)?),
            Imp::TorusTable(t) => t.eval(offsets(inv)?),
            Imp::TorusImages(t) => t.eval(offsets(inv)?),
            Imp::SpdHeat { kappa, quad } => {
                let (h1, h2) = spd_spectrum(inv)?;
                noncompact::spd2(h1, h2, *kappa, quad)?
            }
            Imp::SpdMatern { mix, quad } => {
                let (h1, h2) = spd_spectrum(inv)?;
                mix.eval(|l| noncompact::spd2(h1, h2, l, quad))?
            }
            Imp::Product(ks) => {
                let PairInvariant::Factors(parts) = inv else {
                    return Err(Error::InvalidArgument("expected product invariant".into()));
                };
                let mut v = 1.0;
                for (k, p) in ks.iter().zip(parts) {
                    v *= k.eval_invariant(p)?;
                }
                v
            }
        })
    }

    /// Normalized value `σ²·raw/C` from a precomputed invariant.
    pub fn eval_invariant(&self, inv: &PairInvariant) -> Result<f64> {
        Ok(self.spec.sigma2 * self.raw(inv)? / self.norm)
    }

    pub fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        self.eval_invariant(&self.invariant(x, y)?)
    }

    /// Symmetric Gram matrix; the diagonal is σ² by construction.
    pub fn gram(&self, points: &[ManifoldPoint]) -> Result<DMatrix<f64>> {
        for p in points {
            self.check_point(p)?;
        }
        let n = points.len();
        let mut k = DMatrix::from_element(n, n, self.spec.sigma2);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.eval_invariant(&self.invariant_unchecked(&points[i], &points[j])?)?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// Cross-covariance between `xs` (rows) and `ys` (columns).
    pub fn cross(&self, xs: &[ManifoldPoint], ys: &[ManifoldPoint]) -> Result<DMatrix<f64>> {
        let mut k = DMatrix::zeros(xs.len(), ys.len());
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                k[(i, j)] = self.eval(x, y)?;
            }
        }
        Ok(k)
    }
}

fn offsets(inv: &PairInvariant) -> Result<&[f64]> {
    match inv {
        PairInvariant::Offsets(o) => Ok(o),
        _ => Err(Error::InvalidArgument("expected torus offsets".into())),
    }
}

fn spd_spectrum(inv: &PairInvariant) -> Result<(f64, f64)> {
    match inv {
        PairInvariant::SpdLogSpectrum(a, b) => Ok((*a, *b)),
        _ => Err(Error::InvalidArgument("expected an SPD log-spectrum".into())),
    }
}

impl From<SphereSeries> for Imp {
    fn from(s: SphereSeries) -> Imp {
        Imp::Sphere(s)
    }
}

impl From<So3Series> for Imp {
    fn from(s: So3Series) -> Imp {
        Imp::So3(s)
    }
}

/// Replaces the series by a table when configured; the spacing is at most
/// κ/80 up to the configured interval count.
fn zonal<S: Into<Imp>>(series: S, f: impl Fn(&S, f64) -> f64, kappa: f64, t: &TruncationConfig) -> Imp {
    match t.zonal_table {
        Some(m) => Imp::Grid(GridTable::new(1, std::f64::consts::PI, zonal_intervals(kappa, m), |r| {
            f(&series, r[0])
        })),
        None => series.into(),
    }
}

fn riemannian(manifold: &Manifold, nu: Option<f64>, kappa: f64, t: &TruncationConfig) -> Result<(Input, Imp)> {
    let dim = manifold.intrinsic_dim();
    let weight = SpectralWeight { nu, kappa, dim: dim as f64 };
    Ok(match manifold {
        Manifold::Euclidean { .. } => {
            (Input::Coordinates, Imp::Euclidean(EuclideanMatern::new(nu, kappa, t.matern_quad_nodes)?))
        }
        Manifold::Torus { dim } => {
            let imp = match nu {
                None => {
                    let m = compact::torus_heat_image_count(kappa, t.series_tol);
                    match t.torus_l {
                        Some(l) => Imp::TorusHeat(compact::torus_heat_weights(kappa, l)),
                        None => {
                            let l = compact::torus_heat_bound(kappa, t.series_tol);
                            if (2 * m + 1) as usize <= l + 1 {
                                Imp::TorusHeatImages { kappa, m }
                            } else {
                                Imp::TorusHeat(compact::torus_heat_weights(kappa, l))
                            }
                        }
                    }
                }
                Some(nu) => torus_matern(*dim, nu, kappa, t),
            };
            (Input::TorusOffsets, torus_grid(imp, *dim, kappa, t))
        }
        Manifold::Sphere { dim } => {
            let cap = t.sphere_n.unwrap_or_else(|| series_cap(nu, t));
            let s = SphereSeries::new(*dim, weight, cap, t.series_tol);
            (Input::Geodesic, zonal(s, |s, r| s.eval(r), kappa, t))
        }
        Manifold::Rotation => {
            let cap = t.so3_l.unwrap_or_else(|| series_cap(nu, t));
            let s = So3Series::new(weight, cap, t.series_tol);
            (Input::Geodesic, zonal(s, |s, r| s.eval(r), kappa, t))
        }
        Manifold::Hyperbolic { dim } => {
            if !(2..=5).contains(dim) {
                return Err(Error::Unsupported(format!("hyperbolic kernels need 2 <= d <= 5, got {dim}")));
            }
            let quad = t.line_quad;
            let imp = match nu {
                None => Imp::HypHeat { dim: *dim, kappa, quad },
                Some(nu) => {
                    let d = *dim;
                    let mix = HeatMixture::new(nu, kappa, t.matern_quad_nodes, |l| {
                        noncompact::hyp_heat(d, 0.0, l, &quad)
                    })?;
                    Imp::HypMatern { dim: d, mix, quad }
                }
            };
            (Input::Geodesic, imp)
        }
        Manifold::Spd { dim: 2 } => {
            let quad = t.line_quad;
            let imp = match nu {
                None => Imp::SpdHeat { kappa, quad },
                Some(nu) => {
                    let mix = HeatMixture::new(nu, kappa, t.matern_quad_nodes, |l| {
                        noncompact::spd2(0.0, 0.0, l, &quad)
                    })?;
                    Imp::SpdMatern { mix, quad }
                }
            };
            (Input::SpdSpectrum, imp)
        }
        Manifold::Spd { dim } => {
            return Err(Error::Unsupported(format!("SPD heat kernel for {dim}x{dim} matrices")))
        }
        Manifold::Product { .. } => {
            return Err(Error::Unsupported("riemannian kernel on a product; use the product family".into()))
        }
    })
}

/// Automatic series cap. Gaussian weights stop early on their own; the
/// polynomial Matérn tail is capped harder to bound evaluation cost.
fn series_cap(nu: Option<f64>, t: &TruncationConfig) -> usize {
    match nu {
        None => t.max_terms,
        Some(_) => t.max_terms.min(5000),
    }
}

fn zonal_intervals(kappa: f64, max: usize) -> usize {
    let needed = (80.0 * std::f64::consts::PI / kappa).ceil().max(64.0);
    if needed < max as f64 {
        needed as usize
    } else {
        max
    }
}

fn torus_intervals(dim: usize, kappa: f64, max: usize) -> usize {
    let cap = if dim == 2 { max.min(512) } else { max };
    let needed = (40.0 / kappa).ceil().max(16.0);
    if needed < cap as f64 {
        needed as usize
    } else {
        cap
    }
}

/// Node count of the interpolation table [`Kernel::new`] would build, if any.
pub fn planned_table_nodes(spec: &KernelSpec, manifold: &Manifold) -> Option<usize> {
    let m = spec.trunc.zonal_table?;
    match (spec.family, manifold) {
        (Family::RiemannianSe | Family::RiemannianMatern, Manifold::Sphere { .. } | Manifold::Rotation) => {
            Some(zonal_intervals(spec.kappa, m) + 1)
        }
        (Family::RiemannianSe | Family::RiemannianMatern, Manifold::Torus { dim }) if *dim <= 2 => {
            Some((torus_intervals(*dim, spec.kappa, m) + 1).pow(*dim as u32))
        }
        (Family::Product, _) => {
            let factors = match (spec.input_map, manifold) {
                (Some(InputMap::SpdEigen), _) => vec![Manifold::Euclidean { dim: 2 }, Manifold::Torus { dim: 1 }],
                (None, Manifold::Product { factors }) => factors.clone(),
                (None, m) => vec![m.clone()],
            };
            let n: usize = spec.factors.iter().zip(&factors).filter_map(|(f, m)| planned_table_nodes(f, m)).sum();
            (n > 0).then_some(n)
        }
        _ => None,
    }
}

/// Copy of `spec` with every interpolation table disabled.
pub fn without_tables(spec: &KernelSpec) -> KernelSpec {
    let mut s = spec.clone();
    s.trunc.zonal_table = None;
    s.factors = spec.factors.iter().map(without_tables).collect();
    s
}

fn torus_raw(imp: &Imp, off: &[f64]) -> f64 {
    match imp {
        Imp::TorusHeat(w) => compact::torus_heat_eval(w, off),
        Imp::TorusHeatImages { kappa, m } => compact::torus_heat_images(*kappa, *m, off),
        Imp::TorusTable(t) => t.eval(off),
        Imp::TorusImages(t) => t.eval(off),
        _ => unreachable!("not a torus representation"),
    }
}

/// Tabulates a torus kernel on [0, ½]^d with spacing at most κ/80.
fn torus_grid(imp: Imp, dim: usize, kappa: f64, t: &TruncationConfig) -> Imp {
    match t.zonal_table {
        Some(m) if dim <= 2 => {
            Imp::Grid(GridTable::new(dim, 0.5, torus_intervals(dim, kappa, m), |off| torus_raw(&imp, off)))
        }
        _ => imp,
    }
}

fn torus_matern(dim: usize, nu: f64, kappa: f64, t: &TruncationConfig) -> Imp {
    let weight = SpectralWeight { nu: Some(nu), kappa, dim: dim as f64 };
    if let Some(l) = t.torus_l {
        return Imp::TorusTable(TorusTable::new(dim, l, weight));
    }
    let l = compact::torus_matern_bound(dim, nu, kappa, t.series_tol, t.max_terms);
    let spectral_cost = (l + 1).saturating_pow(dim as u32);
    match TorusImages::with_tol(dim, nu, kappa, t.series_tol) {
        Some(img) if img.cost() * 4 < spectral_cost => Imp::TorusImages(img),
        _ => Imp::TorusTable(TorusTable::new(dim, l, weight)),
    }
}

/// Vectorized lower Cholesky factor, row by row: (L₁₁, L₂₁, L₂₂, …).
pub fn cholesky_vector(x: &ManifoldPoint) -> Result<DVector<f64>> {
    let ManifoldPoint::Spd(m) = x else {
        return Err(Error::ManifoldMismatch("Cholesky vector of a non-SPD point".into()));
    };
    let l = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidPoint("SPD point failed Cholesky".into()))?
        .l();
    let d = m.nrows();
    Ok(DVector::from_iterator(
        d * (d + 1) / 2,
        (0..d).flat_map(|i| (0..=i).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]),
    ))
}

/// Eigen-features of a 2×2 SPD matrix: descending eigenvalues as a
/// Euclidean point and the first eigenvector's angle (mod π, divided by π)
/// as a T¹ point.
pub fn spd_eigen_features(m: &DMatrix<f64>) -> Vec<ManifoldPoint> {
    let (ev, vecs) = linalg::sym_eigen(m);
    let n = ev.len();
    let (l1, l2) = (ev[n - 1], ev[0]);
    let (c, s) = (vecs[(0, n - 1)], vecs[(1, n - 1)]);
    let mut phi = s.atan2(c);
    if phi < 0.0 {
        phi += PI;
    }
    vec![ManifoldPoint::euclidean(vec![l1, l2]), ManifoldPoint::torus(vec![phi / PI])]
}

fn cache() -> &'static Mutex<HashMap<String, Arc<Kernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Kernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Prepared kernel for `(spec, manifold)`, shared through a process-wide
/// cache so repeated [`kernel_eval`] calls reuse the normalization.
pub fn prepared(spec: &KernelSpec, manifold: &Manifold) -> Result<Arc<Kernel>> {
    let key = serde_json::to_string(&(spec, manifold))?;
    if let Some(k) = cache().lock().expect("kernel cache").get(&key) {
        return Ok(Arc::clone(k));
    }
    let k = Arc::new(Kernel::new(spec, manifold)?);
    let mut map = cache().lock().expect("kernel cache");
    if map.len() >= 512 {
        map.clear();
    }
    map.insert(key, Arc::clone(&k));
    Ok(k)
}

/// `k(x, y)` with `k(x, x) = σ²`.
pub fn kernel_eval(spec: &KernelSpec, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    let m = x.manifold();
    if y.manifold() != m {
        return Err(Error::ManifoldMismatch(format!("{m} vs {}", y.manifold())));
    }
    prepared(spec, &m)?.eval(x, y)
}

/// Gram matrix `K_ij = k(x_i, x_j)`.
pub fn gram(spec: &KernelSpec, points: &[ManifoldPoint]) -> Result<DMatrix<f64>> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("gram needs at least one point".into()))?;
    prepared(spec, &first.manifold())?.gram(points)
}

/// Gram matrix together with its smallest eigenvalue, the diagnostic
/// reported for possibly indefinite kernels such as the naive geodesic SE.
pub fn gram_with_min_eigenvalue(spec: &KernelSpec, points: &[ManifoldPoint]) -> Result<(DMatrix<f64>, f64)> {
    let k = gram(spec, points)?;
    let min = linalg::sym_eigen(&k).0[0];
    Ok((k, min))
}

/// Normalization constant `C` (unnormalized diagonal value) of `spec` on
/// `manifold`.
pub fn normalization_constant(spec: &KernelSpec, manifold: &Manifold) -> Result<f64> {
    Ok(prepared(spec, manifold)?.normalization())
}

/// Truncated torus heat sum with an optional tail warning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    /// `exp(−2κ²π²L²)(2L+1)^d` when it exceeds 1e-10 of the leading term.
    pub tail_bound: Option<f64>,
}

fn torus_pair(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<Vec<f64>> {
    match (x, y) {
        (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) if a.len() == b.len() => {
            x.validate()?;
            y.validate()?;
            Ok(a.iter().zip(b.iter()).map(|(&p, &q)| crate::manifold::torus_delta(p, q)).collect())
        }
        _ => Err(Error::ManifoldMismatch("expected two torus points of equal dimension".into())),
    }
}

/// `Σ_{‖τ‖_∞ ≤ L} exp(−2κ²π²‖τ‖²) cos(2π⟨τ, x − y⟩)`.
pub fn heat_torus(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, l: usize) -> Result<TruncatedSum> {
    let off = torus_pair(x, y)?;
    let value = compact::torus_heat_eval(&compact::torus_heat_weights(kappa, l), &off);
    let bound = (-2.0 * (kappa * PI * l as f64).powi(2)).exp() * ((2 * l + 1) as f64).powi(off.len() as i32);
    Ok(TruncatedSum { value, tail_bound: (bound > 1e-10).then_some(bound) })
}

/// `Σ_{‖τ‖_∞ ≤ L} (2ν/κ² + 4π²‖τ‖²)^{−ν−d/2} cos(2π⟨τ, x − y⟩)`.
pub fn matern_torus(x: &ManifoldPoint, y: &ManifoldPoint, nu: f64, kappa: f64, l: usize) -> Result<f64> {
    let off = torus_pair(x, y)?;
    let w = SpectralWeight { nu: Some(nu), kappa, dim: off.len() as f64 };
    Ok(TorusTable::new(off.len(), l, w).eval(&off))
}

fn sphere_pair(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<(usize, f64)> {
    match (x, y) {
        (ManifoldPoint::Sphere(a), ManifoldPoint::Sphere(b)) if a.len() == b.len() => {
            Ok((a.len() - 1, crate::manifold::geodesic_distance(x, y)?))
        }
        _ => Err(Error::ManifoldMismatch("expected two sphere points of equal dimension".into())),
    }
}

/// `Σ_{n ≤ N} c_{n,d} e^{−κ²n(n+d−1)/2} C_n^{((d−1)/2)}(cos d_g(x, y))`.
pub fn heat_sphere(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, n: usize) -> Result<f64> {
    let (d, rho) = sphere_pair(x, y)?;
    let w = SpectralWeight { nu: None, kappa, dim: d as f64 };
    Ok(SphereSeries::new(d, w, n, 0.0).eval(rho))
}

/// Matérn analogue of [`heat_sphere`] with weights `(2ν/κ² + λ_n)^{−ν−d/2}`.
pub fn matern_sphere(x: &ManifoldPoint, y: &ManifoldPoint, nu: f64, kappa: f64, n: usize) -> Result<f64> {
    let (d, rho) = sphere_pair(x, y)?;
    let w = SpectralWeight { nu: Some(nu), kappa, dim: d as f64 };
    Ok(SphereSeries::new(d, w, n, 0.0).eval(rho))
}

fn rotation_angle(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    match (x, y) {
        (ManifoldPoint::Rotation(_), ManifoldPoint::Rotation(_)) => crate::manifold::geodesic_distance(x, y),
        _ => Err(Error::ManifoldMismatch("expected two rotations".into())),
    }
}

/// `Σ_{ℓ ≤ L} e^{−κ²ℓ(ℓ+1)/2} (2ℓ+1) χ_ℓ(θ)`, θ the angle of XᵀY.
pub fn heat_so3(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, l: usize) -> Result<f64> {
    let theta = rotation_angle(x, y)?;
    Ok(So3Series::new(SpectralWeight { nu: None, kappa, dim: 3.0 }, l, 0.0).eval(theta))
}

/// Matérn analogue of [`heat_so3`] with weights `(2ν/κ² + ℓ(ℓ+1))^{−ν−3/2}`.
pub fn matern_so3(x: &ManifoldPoint, y: &ManifoldPoint, nu: f64, kappa: f64, l: usize) -> Result<f64> {
    let theta = rotation_angle(x, y)?;
    Ok(So3Series::new(SpectralWeight { nu: Some(nu), kappa, dim: 3.0 }, l, 0.0).eval(theta))
}

/// Unnormalized heat kernel on ℋ^d, 2 ≤ d ≤ 5.
pub fn heat_hyperbolic(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, quad: &QuadConfig) -> Result<f64> {
    match (x, y) {
        (ManifoldPoint::Hyperbolic(a), ManifoldPoint::Hyperbolic(b)) if a.len() == b.len() => {
            let rho = crate::manifold::geodesic_distance(x, y)?;
            noncompact::hyp_heat(a.len() - 1, rho, kappa, quad)
        }
        _ => Err(Error::ManifoldMismatch("expected two hyperbolic points of equal dimension".into())),
    }
}

/// Unnormalized heat kernel at geodesic distance ρ on ℋ^d.
pub fn heat_hyperbolic_at(dim: usize, rho: f64, kappa: f64, quad: &QuadConfig) -> Result<f64> {
    noncompact::hyp_heat(dim, rho, kappa, quad)
}

/// Unnormalized SPD(2) heat kernel.
pub fn heat_spd2(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, quad: &QuadConfig) -> Result<f64> {
    match (x, y) {
        (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) if a.nrows() == 2 && b.nrows() == 2 => {
            x.validate()?;
            y.validate()?;
            let ev = linalg::generalized_eigenvalues(a, b)?;
            noncompact::spd2(ev[1].ln(), ev[0].ln(), kappa, quad)
        }
        _ => Err(Error::ManifoldMismatch("expected two 2x2 SPD points".into())),
    }
}

/// Unnormalized SPD(2) heat kernel from log-eigenvalues `h1 ≥ h2`.
pub fn heat_spd2_at(h1: f64, h2: f64, kappa: f64, quad: &QuadConfig) -> Result<f64> {
    noncompact::spd2(h1, h2, kappa, quad)
}

/// `σ² Π_j k_j(x_j, y_j)` with each factor normalized to unit variance.
pub fn product_kernel(
    factors: &[KernelSpec],
    sigma2: f64,
    xs: &[ManifoldPoint],
    ys: &[ManifoldPoint],
) -> Result<f64> {
    if factors.len() != xs.len() || xs.len() != ys.len() {
        return Err(Error::ManifoldMismatch(format!(
            "{} factors, {} and {} point components",
            factors.len(),
            xs.len(),
            ys.len()
        )));
    }
    let spec = KernelSpec::product(factors.to_vec(), sigma2);
    kernel_eval(&spec, &ManifoldPoint::Product(xs.to_vec()), &ManifoldPoint::Product(ys.to_vec()))
}

/// `σ² exp(−d_g(x, y)²/κ)`. Not positive definite for every κ.
pub fn naive_geodesic_se(x: &ManifoldPoint, y: &ManifoldPoint, kappa: f64, sigma2: f64) -> Result<f64> {
    let d = crate::manifold::geodesic_distance(x, y)?;
    Ok(sigma2 * (-d * d / kappa).exp())
}
