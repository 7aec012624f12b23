//! Gaussian-process regression on manifolds.
//!
//! [`fit`] maximizes the log marginal likelihood over log length scales,
//! log variance and log noise by multi-start projected gradient ascent with
//! finite-difference gradients. The prior mean is the empirical mean
//! of the targets and stays fixed during the search.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::kernel::{Kernel, KernelSpec, PairInvariant, Smoothness};
use crate::{rng, Error, ManifoldPoint, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Jitter ladder tried when `K + noise·I` is not numerically positive definite.
pub const JITTER_LADDER: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Box bounds on the hyperparameters (natural scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    pub kappa: (f64, f64),
    pub sigma2: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { kappa: (1e-2, 10.0), sigma2: (1e-4, 1e4), noise: (1e-6, 1.0) }
    }
}

impl Bounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("kappa", self.kappa), ("sigma2", self.sigma2), ("noise", self.noise)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("invalid {name} bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Settings of [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Kernel template; its length scales and variance seed the first start.
    pub spec: KernelSpec,
    pub bounds: Bounds,
    pub n_starts: usize,
    pub max_iters: usize,
    /// Central-difference step in log-parameter space.
    pub fd_step: f64,
    pub grad_tol: f64,
    /// Initial noise variance of the first start.
    pub noise: f64,
    /// Optional discrete smoothness grid searched on top of the continuous fit.
    pub nu_grid: Option<Vec<Smoothness>>,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            spec: KernelSpec::riemannian_matern(2.5, 1.0),
            bounds: Bounds::default(),
            n_starts: 5,
            max_iters: 50,
            fd_step: 1e-4,
            grad_tol: 1e-4,
            noise: 1e-6,
            nu_grid: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub kappas: Vec<f64>,
    pub sigma2: f64,
    pub noise: f64,
}

impl Hyperparameters {
    fn to_log(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.kappas.iter().map(|k| k.ln()).collect();
        t.push(self.sigma2.ln());
        t.push(self.noise.ln());
        t
    }

    fn from_log(theta: &[f64]) -> Self {
        let k = theta.len() - 2;
        Hyperparameters {
            kappas: theta[..k].iter().map(|t| t.exp()).collect(),
            sigma2: theta[k].exp(),
            noise: theta[k + 1].exp(),
        }
    }
}

/// A fitted GP: training data, hyperparameters and the cached factorization.
#[derive(Clone, Debug)]
pub struct GpModel {
    inputs: Vec<ManifoldPoint>,
    targets: DVector<f64>,
    kernel: Kernel,
    noise: f64,
    jitter: f64,
    mean: f64,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    lml: f64,
}

fn check_targets(inputs: &[ManifoldPoint], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("GP needs at least one observation".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::InvalidArgument(format!("{} inputs but {} targets", inputs.len(), targets.len())));
    }
    if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite target {t}")));
    }
    Ok(())
}

/// Cholesky of `k + (noise + jitter)·I`, escalating the jitter.
fn factor(k: &DMatrix<f64>, noise: f64) -> Result<(DMatrix<f64>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise + jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok((c.l(), jitter));
        }
    }
    Err(Error::Cholesky(JITTER_LADDER[JITTER_LADDER.len() - 1]))
}

/// `(α, log evidence)` from the factor `l` of K̃ and centered targets.
fn evidence(l: &DMatrix<f64>, yc: &DVector<f64>) -> (DVector<f64>, f64) {
    let z = l.solve_lower_triangular(yc).expect("nonsingular factor");
    let alpha = l.transpose().solve_upper_triangular(&z).expect("nonsingular factor");
    let logdet: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let n = yc.len() as f64;
    (alpha, -0.5 * z.norm_squared() - 0.5 * logdet - 0.5 * n * LN_2PI)
}

impl GpModel {
    /// Conditions a GP with fixed hyperparameters. `mean = None` uses the
    /// empirical mean of the targets.
    pub fn new(
        inputs: Vec<ManifoldPoint>,
        targets: Vec<f64>,
        spec: &KernelSpec,
        noise: f64,
        mean: Option<f64>,
    ) -> Result<GpModel> {
        check_targets(&inputs, &targets)?;
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
        }
        let kernel = Kernel::new(spec, &inputs[0].manifold())?;
        let k = kernel.gram(&inputs)?;
        let targets = DVector::from_vec(targets);
        let mean = mean.unwrap_or_else(|| targets.mean());
        let (chol, jitter) = factor(&k, noise)?;
        let yc = targets.add_scalar(-mean);
        let (alpha, lml) = evidence(&chol, &yc);
        Ok(GpModel { inputs, targets, kernel, noise, jitter, mean, chol, alpha, lml })
    }

    pub fn inputs(&self) -> &[ManifoldPoint] {
        &self.inputs
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn spec(&self) -> &KernelSpec {
        self.kernel.spec()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Jitter added on top of the noise to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Lower Cholesky factor of `K + (noise + jitter)·I`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters { kappas: self.spec().kappas(), sigma2: self.spec().sigma2, noise: self.noise }
    }

    /// Predictive mean and variance of the latent function at `x`.
    pub fn posterior(&self, x: &ManifoldPoint) -> Result<(f64, f64)> {
        let ks = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|p| self.kernel.eval(p, x)).collect::<Result<Vec<_>>>()?,
        );
        let mean = self.mean + ks.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&ks).expect("nonsingular factor");
        let var = (self.spec().sigma2 - v.norm_squared()).max(0.0);
        Ok((mean, var))
    }
}

pub fn log_marginal_likelihood(model: &GpModel) -> f64 {
    model.lml
}

pub fn posterior(model: &GpModel, x: &ManifoldPoint) -> Result<(f64, f64)> {
    model.posterior(x)
}

/// Precomputed pair geometry of a training set.
struct Geometry<'a> {
    template: &'a KernelSpec,
    manifold: crate::Manifold,
    n: usize,
    invs: Vec<PairInvariant>,
}

impl<'a> Geometry<'a> {
    fn new(template: &'a KernelSpec, inputs: &[ManifoldPoint]) -> Result<Self> {
        let manifold = inputs[0].manifold();
        let kernel = Kernel::new(template, &manifold)?;
        let n = inputs.len();
        let mut invs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                invs.push(kernel.invariant(&inputs[i], &inputs[j])?);
            }
        }
        Ok(Geometry { template, manifold, n, invs })
    }

    /// Unit-variance correlation matrix at the given length scales.
    fn correlation(&self, kappas: &[f64]) -> Result<DMatrix<f64>> {
        let mut spec = self.template.with_kappas(kappas)?;
        spec.sigma2 = 1.0;
        // building a table costs more than direct evaluation of fewer pairs
        if crate::kernel::planned_table_nodes(&spec, &self.manifold).is_some_and(|m| self.invs.len() < m) {
            spec = crate::kernel::without_tables(&spec);
        }
        let kernel = Kernel::new(&spec, &self.manifold)?;
        let mut r = DMatrix::identity(self.n, self.n);
        let mut it = self.invs.iter();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = kernel.eval_invariant(it.next().expect("pair count"))?;
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        Ok(r)
    }
}

/// Log evidence of `σ²R + noise·I`; `−∞` when the factorization fails.
fn lml_from_correlation(r: &DMatrix<f64>, sigma2: f64, noise: f64, yc: &DVector<f64>) -> f64 {
    match factor(&(r * sigma2), noise) {
        Ok((l, _)) => evidence(&l, yc).1,
        Err(_) => f64::NEG_INFINITY,
    }
}

struct Objective<'a> {
    geo: Geometry<'a>,
    yc: DVector<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    fd_step: f64,
}

impl Objective<'_> {
    fn value_with(&self, r: &DMatrix<f64>, theta: &[f64]) -> f64 {
        let k = theta.len() - 2;
        lml_from_correlation(r, theta[k].exp(), theta[k + 1].exp(), &self.yc)
    }

    fn value(&self, theta: &[f64]) -> (f64, Option<DMatrix<f64>>) {
        let k = theta.len() - 2;
        let kappas: Vec<f64> = theta[..k].iter().map(|t| t.exp()).collect();
        match self.geo.correlation(&kappas) {
            Ok(r) => (self.value_with(&r, theta), Some(r)),
            Err(_) => (f64::NEG_INFINITY, None),
        }
    }

    /// Finite-difference gradient: forward differences in the length scales
    /// (each costs a correlation build), central ones in σ² and the noise,
    /// one-sided at active bounds.
    fn gradient(&self, theta: &[f64], r: &DMatrix<f64>, f0: f64) -> Vec<f64> {
        let k = theta.len() - 2;
        let h = self.fd_step;
        (0..theta.len())
            .map(|i| {
                let eval = |t: f64| -> f64 {
                    let mut th = theta.to_vec();
                    th[i] = t;
                    if i < k {
                        self.value(&th).0
                    } else {
                        self.value_with(r, &th)
                    }
                };
                let (a, b) = (theta[i] - h, theta[i] + h);
                let g = if i < k && b <= self.hi[i] {
                    (eval(b) - f0) / h
                } else if a >= self.lo[i] && b <= self.hi[i] {
                    (eval(b) - eval(a)) / (2.0 * h)
                } else if b <= self.hi[i] {
                    (eval(b) - f0) / h
                } else {
                    (f0 - eval(a)) / h
                };
                if g.is_finite() {
                    g
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn clamp(&self, theta: &mut [f64]) {
        for ((t, lo), hi) in theta.iter_mut().zip(&self.lo).zip(&self.hi) {
            *t = t.clamp(*lo, *hi);
        }
    }

    /// Projected gradient ascent with an adaptive step length.
    fn ascend(&self, mut theta: Vec<f64>, max_iters: usize, grad_tol: f64) -> (Vec<f64>, f64) {
        self.clamp(&mut theta);
        let (mut f, mut r) = self.value(&theta);
        let mut step = 0.5;
        for _ in 0..max_iters {
            let Some(rc) = r.as_ref() else { break };
            if !f.is_finite() {
                break;
            }
            let mut g = self.gradient(&theta, rc, f);
            // drop components pushing against an active bound
            for (i, gi) in g.iter_mut().enumerate() {
                if (theta[i] <= self.lo[i] && *gi < 0.0) || (theta[i] >= self.hi[i] && *gi > 0.0) {
                    *gi = 0.0;
                }
            }
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm < grad_tol {
                break;
            }
            let mut improved = false;
            while step > 1e-6 {
                let mut cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t + step * gi / gnorm).collect();
                self.clamp(&mut cand);
                let (fc, rcand) = self.value(&cand);
                if fc > f {
                    improved = fc - f > 1e-9;
                    theta = cand;
                    f = fc;
                    r = rcand;
                    step = (step * 2.0).min(2.0);
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (theta, f)
    }
}

/// Fits hyperparameters by maximizing the log marginal likelihood.
pub fn fit(inputs: &[ManifoldPoint], targets: &[f64], cfg: &FitConfig) -> Result<GpModel> {
    fit_from(inputs, targets, cfg, None)
}

/// [`fit`] with an optional warm start replacing the template's initial values.
pub fn fit_from(
    inputs: &[ManifoldPoint],
    targets: &[f64],
    cfg: &FitConfig,
    warm: Option<&Hyperparameters>,
) -> Result<GpModel> {
    check_targets(inputs, targets)?;
    cfg.bounds.validate()?;
    if cfg.n_starts < 1 {
        return Err(Error::InvalidArgument("fit needs at least one start".into()));
    }
    match &cfg.nu_grid {
        None => fit_fixed_nu(inputs, targets, cfg, &cfg.spec, warm),
        Some(grid) => {
            let mut best: Option<GpModel> = None;
            for nu in grid {
                let mut spec = cfg.spec.clone();
                set_nu(&mut spec, *nu);
                let m = fit_fixed_nu(inputs, targets, cfg, &spec, warm)?;
                if best.as_ref().is_none_or(|b| m.lml > b.lml) {
                    best = Some(m);
                }
            }
            best.ok_or_else(|| Error::InvalidArgument("empty smoothness grid".into()))
        }
    }
}

fn set_nu(spec: &mut KernelSpec, nu: Smoothness) {
    use crate::kernel::Family;
    spec.family = match (spec.family, nu) {
        (Family::RiemannianMatern | Family::RiemannianSe, Smoothness::Infinite) => Family::RiemannianSe,
        (Family::RiemannianMatern | Family::RiemannianSe, _) => Family::RiemannianMatern,
        (Family::EuclideanMatern | Family::EuclideanSe, Smoothness::Infinite) => Family::EuclideanSe,
        (Family::EuclideanMatern | Family::EuclideanSe, _) => Family::EuclideanMatern,
        (f, _) => f,
    };
    spec.nu = nu;
    for f in &mut spec.factors {
        set_nu(f, nu);
    }
}

fn fit_fixed_nu(
    inputs: &[ManifoldPoint],
    targets: &[f64],
    cfg: &FitConfig,
    spec: &KernelSpec,
    warm: Option<&Hyperparameters>,
) -> Result<GpModel> {
    let y = DVector::from_column_slice(targets);
    let mean = y.mean();
    let yc = y.add_scalar(-mean);
    let n_k = spec.kappas().len();
    let b = &cfg.bounds;
    let mut lo = vec![b.kappa.0.ln(); n_k];
    let mut hi = vec![b.kappa.1.ln(); n_k];
    lo.extend([b.sigma2.0.ln(), b.noise.0.ln()]);
    hi.extend([b.sigma2.1.ln(), b.noise.1.ln()]);
    let obj = Objective { geo: Geometry::new(spec, inputs)?, yc, lo, hi, fd_step: cfg.fd_step };

    let first = match warm {
        Some(h) if h.kappas.len() == n_k => h.clone(),
        _ => Hyperparameters { kappas: spec.kappas(), sigma2: spec.sigma2, noise: cfg.noise },
    };
    let mut rng = rng::seeded(cfg.seed);
    let mut starts = vec![first.to_log()];
    for _ in 1..cfg.n_starts {
        starts.push(obj.lo.iter().zip(&obj.hi).map(|(l, h)| rng.random_range(*l..=*h)).collect());
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (theta, f) = obj.ascend(s, cfg.max_iters, cfg.grad_tol);
        if f.is_finite() && best.as_ref().is_none_or(|(_, bf)| f > *bf) {
            best = Some((theta, f));
        }
    }
    let (theta, _) = best.ok_or(Error::Cholesky(JITTER_LADDER[JITTER_LADDER.len() - 1]))?;
    let h = Hyperparameters::from_log(&theta);
    let mut fitted = spec.with_kappas(&h.kappas)?;
    fitted.sigma2 = h.sigma2;
    GpModel::new(inputs.to_vec(), targets.to_vec(), &fitted, h.noise, Some(mean))
}

/// Gradient of the log evidence with respect to (log κ₁, …, log σ², log noise)
/// by the trace formula `½ tr((ααᵀ − K̃⁻¹) ∂K̃/∂θ)`. The length-scale
/// derivatives of the Gram matrix are taken by central differences of step
/// `h` in log κ; the variance and noise derivatives are exact.
pub fn lml_gradient(model: &GpModel, h: f64) -> Result<Vec<f64>> {
    let spec = model.spec();
    let n = model.inputs.len();
    let kinv = {
        let id = DMatrix::identity(n, n);
        let z = model.chol.solve_lower_triangular(&id).expect("nonsingular factor");
        z.transpose() * z
    };
    let a = &model.alpha * model.alpha.transpose() - kinv;
    let trace_with = |dk: &DMatrix<f64>| 0.5 * a.component_mul(dk).sum();
    let geo = Geometry::new(spec, &model.inputs)?;
    let kappas = spec.kappas();
    let mut grad = Vec::with_capacity(kappas.len() + 2);
    for i in 0..kappas.len() {
        let mut up = kappas.clone();
        let mut dn = kappas.clone();
        up[i] *= h.exp();
        dn[i] *= (-h).exp();
        let dk = (geo.correlation(&up)? - geo.correlation(&dn)?) * (spec.sigma2 / (2.0 * h));
        grad.push(trace_with(&dk));
    }
    let r = geo.correlation(&kappas)?;
    grad.push(trace_with(&(r * spec.sigma2)));
    grad.push(trace_with(&(DMatrix::identity(n, n) * model.noise)));
    Ok(grad)
}
