//! Closed-form Euclidean Matérn and squared-exponential kernels.

use crate::quadrature::GammaRule;
use crate::Result;

/// Squared exponential `exp(−r²/(2κ²))`.
pub fn se(r: f64, kappa: f64) -> f64 {
    (-0.5 * (r / kappa).powi(2)).exp()
}

/// `Some(p)` when ν = p + ½ for a small non-negative integer p.
pub fn half_integer_order(nu: f64) -> Option<usize> {
    let p = nu - 0.5;
    if p >= 0.0 && (p - p.round()).abs() < 1e-12 && p.round() <= 20.0 {
        Some(p.round() as usize)
    } else {
        None
    }
}

/// Matérn kernel with ν = p + ½, unit variance:
/// `e^{−s} p!/(2p)! Σ_{i≤p} (p+i)!/(i!(p−i)!) (2s)^{p−i}`, s = √(2ν)·r/κ.
pub fn matern_half_integer(p: usize, r: f64, kappa: f64) -> f64 {
    let nu = p as f64 + 0.5;
    let s = (2.0 * nu).sqrt() * r / kappa;
    if p == 0 {
        return (-s).exp();
    }
    let fact = |n: usize| (1..=n).fold(1.0, |a, k| a * k as f64);
    let scale = fact(p) / fact(2 * p);
    let poly: f64 = (0..=p)
        .map(|i| fact(p + i) / (fact(i) * fact(p - i)) * (2.0 * s).powi((p - i) as i32))
        .sum();
    scale * poly * (-s).exp()
}

/// Unit-variance Euclidean Matérn for any ν > 0 (∞ gives SE).
#[derive(Clone, Debug)]
pub(crate) enum EuclideanMatern {
    Se { kappa: f64 },
    HalfInteger { p: usize, kappa: f64 },
    /// Gamma mixture of SE kernels: length scales and weights summing to 1.
    Mixture { lengths: Vec<f64>, weights: Vec<f64> },
}

impl EuclideanMatern {
    pub(crate) fn new(nu: Option<f64>, kappa: f64, nodes: usize) -> Result<Self> {
        Ok(match nu {
            None => EuclideanMatern::Se { kappa },
            Some(nu) => match half_integer_order(nu) {
                Some(p) => EuclideanMatern::HalfInteger { p, kappa },
                None => {
                    let rule = GammaRule::new(nu, nodes)?;
                    let a = 2.0 * nu / (kappa * kappa);
                    let total: f64 = rule.weights.iter().sum();
                    // SE with length √(2u) is exp(−r²/(4u)), u = w/a
                    let lengths = rule.nodes.iter().map(|w| (2.0 * w / a).sqrt()).collect();
                    let weights = rule.weights.iter().map(|w| w / total).collect();
                    EuclideanMatern::Mixture { lengths, weights }
                }
            },
        })
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        match self {
            EuclideanMatern::Se { kappa } => se(r, *kappa),
            EuclideanMatern::HalfInteger { p, kappa } => matern_half_integer(*p, r, *kappa),
            EuclideanMatern::Mixture { lengths, weights } => {
                lengths.iter().zip(weights).map(|(l, w)| w * se(r, *l)).sum()
            }
        }
    }
}
