//! Bayesian optimization with the expected-improvement acquisition.
//!
//! Each iteration refits the GP (warm start from the previous optimum plus
//! fresh random starts) on standardized targets, maximizes EI with
//! multi-start trust-region runs and evaluates the objective at the winner.
//! Everything random is drawn from streams derived from the run seed.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::gp::{fit_from, FitConfig, GpModel, Hyperparameters};
use crate::manifold::{random_point, SamplingOptions};
use crate::optimize::{tr_minimize, Constraint, TrustRegionConfig};
use crate::{rng, Error, Manifold, ManifoldPoint, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoConfig {
    pub n_init: usize,
    pub n_iters: usize,
    pub acq_starts: usize,
    /// Random candidates scored before the trust-region runs; the best
    /// `acq_starts` of them become the starts.
    pub acq_candidates: usize,
    pub seed: u64,
    /// Kernel template, bounds and optimizer settings of the GP fit. Its
    /// `n_starts` is the total per refit, including the warm start.
    pub fit: FitConfig,
    pub acq: TrustRegionConfig,
    pub constraint: Option<Constraint>,
    pub sampling: SamplingOptions,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            n_init: 5,
            n_iters: 20,
            acq_starts: 8,
            acq_candidates: 512,
            seed: 0,
            fit: FitConfig::default(),
            acq: TrustRegionConfig { max_iters: 30, grad_tol: 1e-7, ..Default::default() },
            constraint: None,
            sampling: SamplingOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Bo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoRecord {
    pub iter: usize,
    pub phase: Phase,
    pub query: ManifoldPoint,
    pub y: f64,
    pub best_y: f64,
    /// EI of the chosen query (standardized units); `None` for init points.
    pub ei: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BoTrace {
    pub records: Vec<BoRecord>,
    /// Best observed query.
    pub recommendation: Option<ManifoldPoint>,
    pub failures: usize,
    /// Set when two consecutive objective failures stopped the run.
    pub aborted: bool,
    /// Hyperparameters of the last fit.
    pub last_fit: Option<Hyperparameters>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// EI for minimization from predictive moments: `s·(zΦ(z) + φ(z))`,
/// `z = (best − μ)/s`; `max(best − μ, 0)` when `s < 1e−12`.
pub fn ei_from_moments(mu: f64, s: f64, best_y: f64) -> f64 {
    if s < 1e-12 {
        return (best_y - mu).max(0.0);
    }
    let z = (best_y - mu) / s;
    let n = std_normal();
    (s * (z * n.cdf(z) + n.pdf(z))).max(0.0)
}

/// `ln EI` from predictive moments, finite everywhere: `s` is floored at
/// `1e−12` and the far tail (`z < −30`) uses the asymptotic expansion of
/// `zΦ(z) + φ(z)`.
pub fn log_ei_from_moments(mu: f64, s: f64, best_y: f64) -> f64 {
    let s = s.max(1e-12);
    let z = (best_y - mu) / s;
    let log_h = if z >= -30.0 {
        let n = std_normal();
        (z * n.cdf(z) + n.pdf(z)).ln()
    } else {
        let w = 1.0 / (z * z);
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() + w.ln() + (w * (-3.0 + w * (15.0 - 105.0 * w))).ln_1p()
    };
    s.ln() + log_h
}

pub fn expected_improvement(model: &GpModel, x: &ManifoldPoint, best_y: f64) -> Result<f64> {
    let (mu, var) = model.posterior(x)?;
    Ok(ei_from_moments(mu, var.sqrt(), best_y))
}

/// `r_t = min_{i≤t} y_i − f*`.
pub fn simple_regret(trace: &BoTrace, f_star: f64) -> Vec<f64> {
    trace.records.iter().map(|r| r.best_y - f_star).collect()
}

fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / sd).collect(), mean, sd)
}

struct Run<'a, F> {
    objective: F,
    manifold: &'a Manifold,
    cfg: &'a BoConfig,
    trace: BoTrace,
    xs: Vec<ManifoldPoint>,
    ys: Vec<f64>,
    best: f64,
    consecutive_failures: usize,
}

impl<F: FnMut(&ManifoldPoint) -> Result<f64>> Run<'_, F> {
    fn random_query(&self, label: u64, attempt: u64) -> Result<ManifoldPoint> {
        let mut r = rng::stream(self.cfg.seed, &[label, attempt]);
        match &self.cfg.constraint {
            Some(c) => c.sample(&mut r, self.manifold),
            None => random_point(&mut r, self.manifold, &self.cfg.sampling),
        }
    }

    /// Evaluates `x`; returns `Ok(false)` on a recorded failure.
    fn evaluate(&mut self, x: ManifoldPoint, phase: Phase, ei: Option<f64>) -> bool {
        match (self.objective)(&x) {
            Ok(y) if y.is_finite() => {
                self.consecutive_failures = 0;
                if y < self.best || self.trace.recommendation.is_none() {
                    self.trace.recommendation = Some(x.clone());
                }
                self.best = self.best.min(y);
                let iter = self.trace.records.len();
                self.trace.records.push(BoRecord { iter, phase, query: x.clone(), y, best_y: self.best, ei });
                self.xs.push(x);
                self.ys.push(y);
                true
            }
            _ => {
                self.trace.failures += 1;
                self.consecutive_failures += 1;
                false
            }
        }
    }

    /// Evaluates `first`, retrying once at a fresh random point on failure.
    fn step(&mut self, first: ManifoldPoint, phase: Phase, ei: Option<f64>, label: u64) -> Result<bool> {
        if self.evaluate(first, phase, ei) {
            return Ok(true);
        }
        let retry = self.random_query(label, 1)?;
        if self.evaluate(retry, phase, None) {
            return Ok(true);
        }
        self.trace.aborted = true;
        Ok(false)
    }

    fn propose(&mut self, iter: usize) -> Result<(ManifoldPoint, f64)> {
        let (ys, _, _) = standardize(&self.ys);
        let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let fit_cfg = FitConfig { seed: rng::derive_seed(self.cfg.seed, &[2, iter as u64]), ..self.cfg.fit.clone() };
        let model = fit_from(&self.xs, &ys, &fit_cfg, self.trace.last_fit.as_ref())?;
        self.trace.last_fit = Some(model.hyperparameters());
        let mut acq_rng = rng::stream(self.cfg.seed, &[3, iter as u64]);
        let acq = maximize_ei(
            &model,
            best,
            self.manifold,
            self.cfg,
            &mut acq_rng,
            self.trace.recommendation.as_ref(),
        )?;
        Ok((acq.x, acq.ei))
    }
}

/// Outcome of [`maximize_ei`].
#[derive(Clone, Debug)]
pub struct Acquisition {
    pub x: ManifoldPoint,
    pub ei: f64,
    /// Starting points and their EI, incumbent last when given.
    pub starts: Vec<(ManifoldPoint, f64)>,
}

/// Maximizes EI by trust-region runs on −ln EI from the `acq_starts` best of
/// `acq_candidates` random feasible points, plus the incumbent.
pub fn maximize_ei(
    model: &GpModel,
    best_y: f64,
    manifold: &Manifold,
    cfg: &BoConfig,
    rng: &mut rng::Rng,
    incumbent: Option<&ManifoldPoint>,
) -> Result<Acquisition> {
    let neg_log_ei = |x: &ManifoldPoint| match model.posterior(x) {
        Ok((mu, var)) => -log_ei_from_moments(mu, var.sqrt(), best_y),
        Err(_) => f64::NAN,
    };
    let n_starts = cfg.acq_starts.max(1);
    let mut pool = Vec::with_capacity(cfg.acq_candidates.max(n_starts));
    for _ in 0..cfg.acq_candidates.max(n_starts) {
        let x = match &cfg.constraint {
            Some(c) => c.sample(rng, manifold)?,
            None => random_point(rng, manifold, &cfg.sampling)?,
        };
        pool.push((neg_log_ei(&x), x));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut starts: Vec<ManifoldPoint> = pool.into_iter().take(n_starts).map(|(_, x)| x).collect();
    starts.extend(incumbent.cloned());
    let mut best: Option<(ManifoldPoint, f64)> = None;
    let mut scored = Vec::with_capacity(starts.len());
    for s in starts {
        if let Ok(r) = tr_minimize(neg_log_ei, manifold, &s, &cfg.acq, cfg.constraint.as_ref()) {
            if r.f.is_finite() && best.as_ref().is_none_or(|b| r.f < b.1) {
                best = Some((r.x, r.f));
            }
        }
        let e = expected_improvement(model, &s, best_y).unwrap_or(f64::NAN);
        scored.push((s, e));
    }
    let (x, _) = best.ok_or(Error::AllStartsFailed(scored.len()))?;
    let ei = expected_improvement(model, &x, best_y)?;
    Ok(Acquisition { x, ei, starts: scored })
}

/// Runs `n_init` random evaluations followed by `n_iters` EI-guided ones.
pub fn bo_run(
    objective: impl FnMut(&ManifoldPoint) -> Result<f64>,
    manifold: &Manifold,
    cfg: &BoConfig,
) -> Result<BoTrace> {
    if cfg.n_init < 1 {
        return Err(Error::InvalidArgument("n_init must be >= 1".into()));
    }
    let mut run = Run {
        objective,
        manifold,
        cfg,
        trace: BoTrace { records: Vec::new(), recommendation: None, failures: 0, aborted: false, last_fit: None },
        xs: Vec::new(),
        ys: Vec::new(),
        best: f64::INFINITY,
        consecutive_failures: 0,
    };
    for i in 0..cfg.n_init {
        let label = rng::derive_seed(1, &[i as u64]);
        let x = run.random_query(label, 0)?;
        if !run.step(x, Phase::Init, None, label)? {
            return Ok(run.trace);
        }
    }
    for it in 0..cfg.n_iters {
        let (x, ei) = run.propose(it)?;
        let label = rng::derive_seed(4, &[it as u64]);
        if !run.step(x, Phase::Bo, Some(ei), label)? {
            break;
        }
    }
    debug_assert!(run.consecutive_failures < 2 || run.trace.aborted);
    Ok(run.trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_closed_forms() {
        let s = 0.7;
        assert!((ei_from_moments(1.0, s, 1.0) - s / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(ei_from_moments(2.0, 0.0, 1.0), 0.0);
        assert_eq!(ei_from_moments(0.5, 0.0, 1.0), 0.5);
        assert!(ei_from_moments(5.0, 1e-3, 0.0) >= 0.0);
    }

    #[test]
    fn standardize_handles_constant_targets() {
        let (z, m, s) = standardize(&[3.0, 3.0, 3.0]);
        assert_eq!((m, s), (3.0, 1.0));
        assert!(z.iter().all(|v| *v == 0.0));
    }
}
