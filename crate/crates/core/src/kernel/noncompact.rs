//! Heat kernels on hyperbolic space and SPD(2), and the gamma-mixture
//! construction of Matérn kernels from heat kernels.

use crate::quadrature::{integrate, GammaRule, QuadConfig};
use crate::{Error, Result};

/// `s·coth(s) − 1`, accurate near zero.
fn s_coth_minus_one(s: f64) -> f64 {
    if s < 1.0 {
        // s cosh s − sinh s = Σ_{k≥1} 2k s^{2k+1}/(2k+1)!
        let s2 = s * s;
        let mut term = s * s2 / 6.0; // s³/3!
        let mut acc = 0.0;
        for k in 1..20 {
            acc += 2.0 * k as f64 * term;
            term *= s2 / ((2 * k + 2) * (2 * k + 3)) as f64;
            if term < 1e-18 * acc {
                break;
            }
        }
        acc / s.sinh()
    } else {
        s / s.tanh() - 1.0
    }
}

/// ℋ³ heat kernel up to a time-dependent constant: `(ρ/sinh ρ) e^{−ρ²/(2κ²)}`.
pub(crate) fn hyp3(rho: f64, kappa: f64) -> f64 {
    let g = (-0.5 * (rho / kappa).powi(2)).exp();
    if rho < 1e-8 {
        return g;
    }
    if rho > 700.0 {
        return 0.0;
    }
    rho / rho.sinh() * g
}

/// `−d/dρ` of [`hyp3`].
pub(crate) fn hyp3_neg_derivative(s: f64, kappa: f64) -> f64 {
    let beta = 0.5 / (kappa * kappa);
    if s > 700.0 {
        return 0.0;
    }
    // −G' = e^{−βs²}(s coth s − 1 + 2βs²)/sinh s
    let g = (-beta * s * s).exp();
    if s < 1e-8 {
        return g * s * (1.0 / 3.0 + 2.0 * beta);
    }
    g * (s_coth_minus_one(s) + 2.0 * beta * s * s) / s.sinh()
}

/// ℋ⁵ heat kernel: Millson step `−(1/sinh ρ) d/dρ` applied to [`hyp3`].
pub(crate) fn hyp5(rho: f64, kappa: f64) -> f64 {
    let beta = 0.5 / (kappa * kappa);
    if rho < 1e-8 {
        return 2.0 * beta + 1.0 / 3.0;
    }
    if rho > 700.0 {
        return 0.0;
    }
    let g = (-beta * rho * rho).exp();
    let sh = rho.sinh();
    g * (s_coth_minus_one(rho) + 2.0 * beta * rho * rho) / (sh * sh)
}

/// Even dimensions: `∫_ρ^∞ sinh(s) K_{d+1}(s) / √(cosh s − cosh ρ) ds` with
/// s = ρ + t², so the inverse-square-root endpoint singularity disappears.
pub(crate) fn hyp_even(dim: usize, rho: f64, kappa: f64, cfg: &QuadConfig) -> Result<f64> {
    let beta = 0.5 / (kappa * kappa);
    let numer = |s: f64| -> f64 {
        match dim {
            2 => s * (-beta * s * s).exp(),
            _ => hyp3_neg_derivative(s, kappa),
        }
    };
    let t_max = (10.0 * kappa).min(80.0).sqrt();
    let f = |t: f64| -> f64 {
        let h = 0.5 * t * t;
        // 2t/√(sinh(t²/2)) → 2√2 as t → 0
        let g = if h < 1e-8 { 2.0 * std::f64::consts::SQRT_2 } else { 2.0 * t / h.sinh().sqrt() };
        let s = rho + t * t;
        let den = (2.0 * (rho + h).sinh()).sqrt();
        if den == 0.0 || !den.is_finite() {
            return 0.0;
        }
        g * numer(s) / den
    };
    let v = integrate(f, 0.0, t_max, cfg)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature(format!("non-finite hyperbolic heat integral at rho={rho}")))
    }
}

/// Unnormalized heat kernel on ℋ^d at geodesic distance ρ.
pub(crate) fn hyp_heat(dim: usize, rho: f64, kappa: f64, cfg: &QuadConfig) -> Result<f64> {
    match dim {
        3 => Ok(hyp3(rho, kappa)),
        5 => Ok(hyp5(rho, kappa)),
        2 | 4 => hyp_even(dim, rho, kappa, cfg),
        _ => Err(Error::Unsupported(format!("hyperbolic heat kernel in dimension {dim}"))),
    }
}

/// SPD(2) heat kernel from the log-eigenvalues `h1 ≥ h2` of X⁻¹Y.
pub(crate) fn spd2(h1: f64, h2: f64, kappa: f64, cfg: &QuadConfig) -> Result<f64> {
    let k2 = kappa * kappa;
    let alpha = (h1 - h2).abs();
    let pre = (-(h1 * h1 + h2 * h2) / (2.0 * k2)).exp();
    if pre == 0.0 {
        return Ok(0.0);
    }
    let s_max = ((-alpha + (alpha * alpha + 200.0 * k2).sqrt()) / 2.0).min(60.0);
    let f = |t: f64| -> f64 {
        let s = t * t;
        // t/√(sinh t²) → 1 as t → 0
        let g = if s < 1e-8 { 1.0 } else { t / s.sinh().sqrt() };
        let den = (s + alpha).sinh().sqrt();
        if den == 0.0 || !den.is_finite() {
            return 0.0;
        }
        2.0 * g * (2.0 * s + alpha) * (-s * (s + alpha) / k2).exp() / den
    };
    let v = integrate(f, 0.0, s_max.sqrt(), cfg)?;
    if v.is_finite() {
        Ok(pre * v)
    } else {
        Err(Error::Quadrature("non-finite SPD heat integral".into()))
    }
}

/// `∫₀^∞ u^{p−1} e^{−(2ν/κ²)u} heat(√(2u)) du`, where `heat(ℓ)` evaluates a
/// heat kernel at length scale ℓ, by the exp-sinh gamma rule with `nodes`
/// nodes. Use p = ν with normalized heat (non-compact spaces) or p = ν + d/2
/// with the unnormalized spectral heat (compact spaces).
pub fn matern_from_heat(
    mut heat: impl FnMut(f64) -> Result<f64>,
    nu: f64,
    kappa: f64,
    p: f64,
    nodes: usize,
) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("matern_from_heat needs finite nu > 0, got {nu}")));
    }
    let a = 2.0 * nu / (kappa * kappa);
    let rule = GammaRule::new(p, nodes)?;
    let mut total = 0.0;
    for (w, wt) in rule.nodes.iter().zip(&rule.weights) {
        let h = heat((2.0 * w / a).sqrt())?;
        if !h.is_finite() {
            return Err(Error::Numerical(format!("non-finite heat value at node {w}")));
        }
        total += wt * h;
    }
    Ok(total * a.powf(-p))
}

/// Precomputed gamma-mixture with each node's heat kernel normalized to
/// one at the diagonal.
#[derive(Clone, Debug)]
pub(crate) struct HeatMixture {
    pub lengths: Vec<f64>,
    /// weight divided by the node's diagonal heat value
    pub scaled: Vec<f64>,
}

impl HeatMixture {
    pub(crate) fn new(
        nu: f64,
        kappa: f64,
        nodes: usize,
        mut diag: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let rule = GammaRule::new(nu, nodes)?;
        let a = 2.0 * nu / (kappa * kappa);
        let sum: f64 = rule.weights.iter().sum();
        let mut lengths = Vec::new();
        let mut scaled = Vec::new();
        for (w, wt) in rule.nodes.iter().zip(&rule.weights) {
            if *wt < 1e-17 * sum {
                continue;
            }
            let l = (2.0 * w / a).sqrt();
            let d = diag(l)?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Numerical(format!("heat diagonal {d} at length scale {l}")));
            }
            lengths.push(l);
            scaled.push(wt / d);
        }
        Ok(HeatMixture { lengths, scaled })
    }

    pub(crate) fn eval(&self, mut heat: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (l, s) in self.lengths.iter().zip(&self.scaled) {
            acc += s * heat(*l)?;
        }
        Ok(acc)
    }
}
