//! Riemannian trust-region minimization.
//!
//! The quadratic model lives in the tangent space at the current iterate,
//! written in the orthonormal basis of [`crate::manifold::tangent_basis`].
//! Gradients of the pullback `f ∘ Exp_x` come from central differences and
//! Hessian-vector products from forward differences of those gradients;
//! the subproblem is solved by Steihaug–Toint truncated CG.

mod tcg;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::manifold::{exp_unchecked, geodesic_distance, random_point, SamplingOptions};
use crate::rng::Rng;
use crate::{Error, Manifold, ManifoldPoint, Result};

pub use tcg::{truncated_cg, TcgResult, TcgStop};

/// Solver settings; `None` fields take manifold-dependent defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustRegionConfig {
    /// Initial radius, default 0.1·(diameter or 1).
    pub delta0: Option<f64>,
    /// Radius cap, default the diameter (10 on non-compact spaces).
    pub delta_max: Option<f64>,
    pub rho_accept: f64,
    pub rho_expand: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Inner CG iterations, default 2·dim.
    pub tcg_max_iters: Option<usize>,
    /// Gradient step relative to max(1, ‖x‖).
    pub fd_step: f64,
    /// Step of the Hessian-vector difference.
    pub hv_step: f64,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        TrustRegionConfig {
            delta0: None,
            delta_max: None,
            rho_accept: 0.1,
            rho_expand: 0.75,
            max_iters: 100,
            grad_tol: 1e-6,
            tcg_max_iters: None,
            fd_step: 1e-5,
            hv_step: 1e-4,
        }
    }
}

impl TrustRegionConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.rho_accept && self.rho_accept < self.rho_expand && self.rho_expand < 1.0) {
            return Err(Error::InvalidArgument("need 0 < rho_accept < rho_expand < 1".into()));
        }
        if let (Some(d0), Some(dm)) = (self.delta0, self.delta_max) {
            if !(d0 > 0.0 && d0 <= dm) {
                return Err(Error::InvalidArgument("need 0 < delta0 <= delta_max".into()));
            }
        }
        if !(self.fd_step > 0.0 && self.hv_step > 0.0 && self.grad_tol >= 0.0) {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        Ok(())
    }
}

/// Eigenvalue box `[λ_min, λ_max]` for SPD search domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBox {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl ConstraintBox {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(0.0 < lambda_min && lambda_min < lambda_max && lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid eigenvalue box [{lambda_min}, {lambda_max}]")));
        }
        Ok(ConstraintBox { lambda_min, lambda_max })
    }

    pub fn contains(&self, x: &ManifoldPoint, slack: f64) -> bool {
        match x {
            ManifoldPoint::Spd(m) => crate::manifold::spd_eigenvalues(m)
                .iter()
                .all(|&l| l >= self.lambda_min - slack && l <= self.lambda_max + slack),
            _ => true,
        }
    }
}

/// Feasible set of a constrained search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    /// SPD points with eigenvalues in the box.
    Eigenvalues(ConstraintBox),
    /// Euclidean points inside a coordinate box.
    Coordinates { lower: Vec<f64>, upper: Vec<f64> },
}

impl Constraint {
    /// Nearest feasible point: eigenvalue clipping or coordinate clamping.
    pub fn project(&self, x: &ManifoldPoint) -> ManifoldPoint {
        match (self, x) {
            (Constraint::Eigenvalues(b), ManifoldPoint::Spd(m)) => {
                ManifoldPoint::Spd(crate::manifold::clip_eigenvalues(m, b.lambda_min, b.lambda_max))
            }
            (Constraint::Coordinates { lower, upper }, ManifoldPoint::Euclidean(v)) => ManifoldPoint::Euclidean(
                DVector::from_iterator(v.len(), v.iter().enumerate().map(|(i, c)| c.clamp(lower[i], upper[i]))),
            ),
            _ => x.clone(),
        }
    }

    pub fn contains(&self, x: &ManifoldPoint, slack: f64) -> bool {
        match (self, x) {
            (Constraint::Eigenvalues(b), _) => b.contains(x, slack),
            (Constraint::Coordinates { lower, upper }, ManifoldPoint::Euclidean(v)) => {
                v.iter().enumerate().all(|(i, c)| *c >= lower[i] - slack && *c <= upper[i] + slack)
            }
            _ => true,
        }
    }

    /// Random feasible point.
    pub fn sample(&self, rng: &mut Rng, manifold: &Manifold) -> Result<ManifoldPoint> {
        use rand::Rng as _;
        match self {
            Constraint::Eigenvalues(b) => {
                let opts = SamplingOptions { spd_eigen_box: (b.lambda_min, b.lambda_max), ..Default::default() };
                random_point(rng, manifold, &opts)
            }
            Constraint::Coordinates { lower, upper } => Ok(ManifoldPoint::Euclidean(DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper).map(|(l, u)| rng.random_range(*l..=*u)),
            ))),
        }
    }

    fn check(&self, manifold: &Manifold) -> Result<()> {
        match (self, manifold) {
            (Constraint::Eigenvalues(_), Manifold::Spd { .. }) => Ok(()),
            (Constraint::Coordinates { lower, upper }, Manifold::Euclidean { dim })
                if lower.len() == *dim && upper.len() == *dim && lower.iter().zip(upper).all(|(l, u)| l <= u) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!("constraint does not apply to {manifold}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrStatus {
    GradientTolerance,
    MaxIterations,
    /// Radius collapsed below machine precision.
    Stagnated,
    /// Objective returned a non-finite value; the result is the best so far.
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct TrustRegionResult {
    pub x: ManifoldPoint,
    pub f: f64,
    pub iters: usize,
    pub grad_norm: f64,
    pub evals: usize,
    pub status: TrStatus,
    /// Objective values of the accepted iterates, starting with f(x0).
    pub history: Vec<f64>,
}

struct Problem<'a, F> {
    f: F,
    constraint: Option<&'a Constraint>,
    evals: usize,
}

impl<F: FnMut(&ManifoldPoint) -> f64> Problem<'_, F> {
    fn feasible(&self, x: ManifoldPoint) -> ManifoldPoint {
        match self.constraint {
            Some(c) => c.project(&x),
            None => x,
        }
    }

    fn eval(&mut self, x: &ManifoldPoint) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    fn at(&mut self, x: &ManifoldPoint, v: &DVector<f64>) -> Result<f64> {
        let y = self.feasible(exp_unchecked(x, v)?);
        Ok(self.eval(&y))
    }

    /// Central-difference gradient of `f ∘ Exp_x` at tangent vector `v`.
    fn pullback_gradient(&mut self, x: &ManifoldPoint, v: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
        let n = v.len();
        let mut g = DVector::zeros(n);
        for i in 0..n {
            let mut p = v.clone();
            p[i] += h;
            let up = self.at(x, &p)?;
            p[i] -= 2.0 * h;
            let dn = self.at(x, &p)?;
            g[i] = (up - dn) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Riemannian gradient of `f` at `x` in the tangent basis, by central
/// differences of step `h` along Exp_x.
pub fn fd_gradient(mut f: impl FnMut(&ManifoldPoint) -> f64, x: &ManifoldPoint, h: f64) -> Result<DVector<f64>> {
    x.validate()?;
    let n = x.manifold().intrinsic_dim();
    let mut p = Problem { f: &mut f, constraint: None, evals: 0 };
    p.pullback_gradient(x, &DVector::zeros(n), h)
}

/// Minimizes `f` from `x0`. A constraint projects every evaluated point
/// onto the feasible set; steps whose projection moves farther than the
/// trust radius are rejected.
pub fn tr_minimize(
    f: impl FnMut(&ManifoldPoint) -> f64,
    manifold: &Manifold,
    x0: &ManifoldPoint,
    cfg: &TrustRegionConfig,
    constraint: Option<&Constraint>,
) -> Result<TrustRegionResult> {
    cfg.validate()?;
    if x0.manifold() != *manifold {
        return Err(Error::ManifoldMismatch(format!("start on {}, problem on {manifold}", x0.manifold())));
    }
    x0.validate()?;
    if let Some(c) = constraint {
        c.check(manifold)?;
    }
    let dim = manifold.intrinsic_dim();
    let diameter = manifold.diameter();
    let delta_max = cfg.delta_max.unwrap_or(diameter.unwrap_or(10.0));
    let mut delta = cfg.delta0.unwrap_or(0.1 * diameter.unwrap_or(1.0)).min(delta_max);
    let tcg_iters = cfg.tcg_max_iters.unwrap_or(2 * dim).max(1);

    let mut prob = Problem { f, constraint, evals: 0 };
    let mut x = prob.feasible(x0.clone());
    let mut fx = prob.eval(&x);
    if !fx.is_finite() {
        return Err(Error::Objective(format!("non-finite objective {fx} at the start point")));
    }
    let mut history = vec![fx];
    let zero = DVector::zeros(dim);
    let mut status = TrStatus::MaxIterations;
    let mut grad_norm = f64::NAN;
    let mut iters = 0;
    let mut grad: Option<DVector<f64>> = None;

    while iters < cfg.max_iters {
        let h = cfg.fd_step * x.coord_norm().max(1.0);
        let g = match grad.take() {
            Some(g) => g,
            None => prob.pullback_gradient(&x, &zero, h)?,
        };
        grad_norm = g.norm();
        if !grad_norm.is_finite() {
            status = TrStatus::NonFinite;
            break;
        }
        if grad_norm < cfg.grad_tol {
            status = TrStatus::GradientTolerance;
            break;
        }
        iters += 1;
        let eps = cfg.hv_step;
        let mut hv_failed = false;
        let tcg = {
            let prob = &mut prob;
            let x = &x;
            let g = &g;
            let hv_failed = &mut hv_failed;
            let hessvec = |v: &DVector<f64>| -> DVector<f64> {
                let nv = v.norm();
                if nv == 0.0 {
                    return DVector::zeros(v.len());
                }
                match prob.pullback_gradient(x, &(v * (eps / nv)), h) {
                    Ok(gv) => (gv - g) * (nv / eps),
                    Err(_) => {
                        *hv_failed = true;
                        DVector::zeros(v.len())
                    }
                }
            };
            let rel_tol = grad_norm.sqrt().min(0.1);
            truncated_cg(&g, hessvec, delta, tcg_iters, rel_tol)
        };
        if hv_failed {
            status = TrStatus::NonFinite;
            break;
        }
        let step_norm = tcg.step.norm();
        let raw = exp_unchecked(&x, &tcg.step)?;
        let cand = prob.feasible(raw.clone());
        let clipped = geodesic_distance(&raw, &cand).unwrap_or(f64::INFINITY);
        let mut rho = f64::NEG_INFINITY;
        let mut accepted = false;
        if clipped <= delta {
            let fc = prob.eval(&cand);
            if !fc.is_finite() {
                status = TrStatus::NonFinite;
                break;
            }
            let actual = fx - fc;
            if tcg.model_decrease > 0.0 {
                rho = actual / tcg.model_decrease;
            }
            if rho > cfg.rho_accept && actual > 0.0 {
                x = cand;
                fx = fc;
                history.push(fx);
                accepted = true;
            }
        }
        if !accepted {
            grad = Some(g);
        }
        if rho < 0.25 {
            delta *= 0.25;
        } else if rho > cfg.rho_expand && (tcg.stop != TcgStop::Converged || step_norm >= 0.99 * delta) {
            delta = (2.0 * delta).min(delta_max);
        }
        if delta < 1e-14 {
            status = TrStatus::Stagnated;
            break;
        }
    }
    if status == TrStatus::MaxIterations && iters < cfg.max_iters {
        status = TrStatus::GradientTolerance;
    }
    Ok(TrustRegionResult { x, f: fx, iters, grad_norm, evals: prob.evals, status, history })
}

/// Runs [`tr_minimize`] from `n_starts` random points (feasible under the
/// constraint) plus the optional incumbent, returning the best result.
pub fn multi_start(
    mut f: impl FnMut(&ManifoldPoint) -> f64,
    manifold: &Manifold,
    n_starts: usize,
    cfg: &TrustRegionConfig,
    rng: &mut Rng,
    sampling: &SamplingOptions,
    incumbent: Option<&ManifoldPoint>,
    constraint: Option<&Constraint>,
) -> Result<TrustRegionResult> {
    if n_starts < 1 {
        return Err(Error::InvalidArgument("multi_start needs n_starts >= 1".into()));
    }
    let mut starts = Vec::with_capacity(n_starts + 1);
    for _ in 0..n_starts {
        starts.push(match constraint {
            Some(c) => c.sample(rng, manifold)?,
            None => random_point(rng, manifold, sampling)?,
        });
    }
    starts.extend(incumbent.cloned());
    let total = starts.len();
    let mut best: Option<TrustRegionResult> = None;
    for s in &starts {
        if let Ok(r) = tr_minimize(&mut f, manifold, s, cfg, constraint) {
            if best.as_ref().is_none_or(|b| r.f < b.f) {
                best = Some(r);
            }
        }
    }
    best.ok_or(Error::AllStartsFailed(total))
}
