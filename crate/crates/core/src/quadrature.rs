//! Numerical integration: adaptive Gauss–Kronrod on finite intervals and an
//! exp-sinh rule for gamma-type integrals on the half line.

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd Kronrod abscissae (index 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Settings for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 200 }
    }
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) integration of `f` over `[a, b]`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut segs = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        if segs.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {} subdivisions",
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
}

/// Nodes and positive weights approximating `∫₀^∞ w^{p−1} e^{−w} g(w) dw`
/// by `Σ weights[i]·g(nodes[i])`, using the substitution
/// `w = exp(π/2·sinh t)` and the trapezoid rule in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GammaRule {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) || n < 2 {
            return Err(Error::InvalidArgument(format!("gamma rule needs p > 0, n >= 2 (p={p}, n={n})")));
        }
        let c = std::f64::consts::FRAC_PI_2;
        let w_lo = 1e-17f64.powf(1.0 / p);
        let w_hi = 60.0 + 3.0 * p;
        let t_lo = (w_lo.ln() / c).asinh();
        let t_hi = (w_hi.ln() / c).asinh();
        let h = (t_hi - t_lo) / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let t = t_lo + h * i as f64;
            let lw = c * t.sinh();
            let w = lw.exp();
            let wt = h * (p * lw - w).exp() * c * t.cosh();
            if wt > 0.0 && w > 0.0 {
                nodes.push(w);
                weights.push(wt);
            }
        }
        Ok(GammaRule { nodes, weights })
    }
}
