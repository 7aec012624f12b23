//! Spectral sums on tori, spheres and SO(3).

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::euclidean::{half_integer_order, matern_half_integer};
use crate::spectral::{gegenbauer_at_one, sphere_levels};

/// Spectral weight of an eigenvalue: `exp(−κ²λ/2)` for ν = ∞,
/// `(2ν/κ² + λ)^{−ν−d/2}` otherwise.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SpectralWeight {
    pub nu: Option<f64>,
    pub kappa: f64,
    pub dim: f64,
}

impl SpectralWeight {
    pub(crate) fn at(&self, lambda: f64) -> f64 {
        match self.nu {
            None => (-0.5 * self.kappa * self.kappa * lambda).exp(),
            Some(nu) => (2.0 * nu / (self.kappa * self.kappa) + lambda).powf(-nu - self.dim / 2.0),
        }
    }
}

/// Fills `out[k] = cos(2πkΔ)` for k = 0..out.len() by complex rotation.
fn cos_table(delta: f64, out: &mut [f64]) {
    let (s1, c1) = (2.0 * PI * delta).sin_cos();
    let (mut c, mut s) = (1.0, 0.0);
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = c;
        // refresh every 32 steps to stop rounding drift
        if (k + 1) % 32 == 0 {
            let (sk, ck) = (2.0 * PI * delta * (k + 1) as f64).sin_cos();
            c = ck;
            s = sk;
        } else {
            let nc = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = nc;
        }
    }
}

/// Lattice bound for the Gaussian spectral weights so the first omitted
/// term is below `tol`.
pub(crate) fn torus_heat_bound(kappa: f64, tol: f64) -> usize {
    let l = ((1.0 / tol).ln() / (2.0 * PI * PI)).sqrt() / kappa;
    (l.ceil() as usize).max(3)
}

/// Per-dimension factor weights `e^{−2π²κ²k²}`, k = 0..=L.
pub(crate) fn torus_heat_weights(kappa: f64, l: usize) -> Vec<f64> {
    (0..=l).map(|k| (-2.0 * PI * PI * kappa * kappa * (k * k) as f64).exp()).collect()
}

/// Box-truncated heat sum; it factorizes over coordinates.
pub(crate) fn torus_heat_eval(weights: &[f64], offsets: &[f64]) -> f64 {
    let mut table = vec![0.0; weights.len()];
    offsets
        .iter()
        .map(|&d| {
            cos_table(d, &mut table);
            weights[0] + 2.0 * weights[1..].iter().zip(&table[1..]).map(|(w, c)| w * c).sum::<f64>()
        })
        .product()
}

/// Image count per side so that dropped Gaussian images in the wrapped sum
/// fall below `tol` relative to the peak.
pub(crate) fn torus_heat_image_count(kappa: f64, tol: f64) -> i64 {
    let s0 = if tol > 0.0 { (-tol.ln()).clamp(16.0, 45.0) } else { 45.0 };
    (kappa * (2.0 * s0).sqrt()).ceil() as i64 + 1
}

/// Wrapped Gaussian `Π_j Σ_{|k|≤m} exp(−(δ_j + k)²/(2κ²))`, proportional to
/// the heat series by Poisson summation.
pub(crate) fn torus_heat_images(kappa: f64, m: i64, offsets: &[f64]) -> f64 {
    let c = 0.5 / (kappa * kappa);
    offsets
        .iter()
        .map(|&d| (-m..=m).map(|k| (-(d + k as f64).powi(2) * c).exp()).sum::<f64>())
        .product()
}

/// Matérn spectral weights over the non-negative orthant `{0..=L}^d`,
/// with the 2^{#nonzero} sign multiplicity folded in.
#[derive(Clone, Debug)]
pub(crate) struct TorusTable {
    pub dim: usize,
    pub l: usize,
    pub weights: Vec<f64>,
}

impl TorusTable {
    pub(crate) fn new(dim: usize, l: usize, w: SpectralWeight) -> Self {
        let side = l + 1;
        let n = side.pow(dim as u32);
        let mut weights = Vec::with_capacity(n);
        for mut idx in 0..n {
            let mut norm2 = 0.0;
            let mut mult = 1.0;
            for _ in 0..dim {
                let k = idx % side;
                idx /= side;
                norm2 += (k * k) as f64;
                if k > 0 {
                    mult *= 2.0;
                }
            }
            weights.push(mult * w.at(4.0 * PI * PI * norm2));
        }
        TorusTable { dim, l, weights }
    }

    pub(crate) fn eval(&self, offsets: &[f64]) -> f64 {
        let side = self.l + 1;
        let mut tables = vec![0.0; side * self.dim];
        for (j, &d) in offsets.iter().enumerate() {
            cos_table(d, &mut tables[j * side..(j + 1) * side]);
        }
        match self.dim {
            1 => self.weights.iter().zip(&tables).map(|(w, c)| w * c).sum(),
            2 => {
                let (c0, c1) = tables.split_at(side);
                let mut total = 0.0;
                for b in 0..side {
                    let row = &self.weights[b * side..(b + 1) * side];
                    let inner: f64 = row.iter().zip(c0).map(|(w, c)| w * c).sum();
                    total += inner * c1[b];
                }
                total
            }
            _ => {
                let mut total = 0.0;
                for (mut idx, w) in self.weights.iter().enumerate() {
                    let mut prod = *w;
                    for j in 0..self.dim {
                        prod *= tables[j * side + idx % side];
                        idx /= side;
                    }
                    total += prod;
                }
                total
            }
        }
    }
}

/// Lattice bound for Matérn weights from the integral tail estimate
/// `|S^{d−1}| (4π²)^{−q} L^{−2ν} / (2ν)` relative to the τ = 0 term a^{−q}.
pub(crate) fn torus_matern_bound(dim: usize, nu: f64, kappa: f64, tol: f64, max_terms: usize) -> usize {
    let d = dim as f64;
    let q = nu + d / 2.0;
    let a = 2.0 * nu / (kappa * kappa);
    let area = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0);
    let ln_c = area.ln() - q * (4.0 * PI * PI).ln() + q * a.ln() - (2.0 * nu).ln() - tol.ln();
    let l = (ln_c / (2.0 * nu)).exp();
    let cap = ((max_terms as f64).powf(1.0 / d).floor() as usize).saturating_sub(1).max(3);
    if l.is_finite() {
        (l.ceil() as usize).clamp(3, cap)
    } else {
        cap
    }
}

/// Periodized Euclidean Matérn: `Σ_m k(|Δ + m|)` over image offsets.
/// Same Fourier coefficients as the torus Matérn kernel, so equal after
/// normalization, and fast when κ is small compared to the period.
#[derive(Clone, Debug)]
pub(crate) struct TorusImages {
    pub dim: usize,
    pub p: usize,
    pub kappa: f64,
    pub m: usize,
    pub radius: f64,
}

impl TorusImages {
    #[cfg(test)]
    pub(crate) fn new(dim: usize, nu: f64, kappa: f64) -> Option<Self> {
        Self::with_tol(dim, nu, kappa, 0.0)
    }

    /// Drops images whose summand is below about `1e−7·tol` (`1e−17` at most).
    pub(crate) fn with_tol(dim: usize, nu: f64, kappa: f64, tol: f64) -> Option<Self> {
        let p = half_integer_order(nu)?;
        // e^{−s} times the degree-p polynomial is below e^{−s0} past s = s0 + 4p
        let s0 = if tol > 0.0 { (16.0 - tol.ln()).min(45.0) } else { 45.0 };
        let radius = (s0 + 4.0 * p as f64) * kappa / (2.0 * nu).sqrt();
        let m = (radius + 0.5).ceil() as usize;
        Some(TorusImages { dim, p, kappa, m, radius })
    }

    pub(crate) fn cost(&self) -> usize {
        (2 * self.m + 1).saturating_pow(self.dim as u32)
    }

    pub(crate) fn eval(&self, offsets: &[f64]) -> f64 {
        let side = 2 * self.m + 1;
        let n = side.pow(self.dim as u32);
        let r2max = self.radius * self.radius;
        let mut total = 0.0;
        for mut idx in 0..n {
            let mut r2 = 0.0;
            for &d in offsets {
                let shift = (idx % side) as f64 - self.m as f64;
                idx /= side;
                r2 += (d + shift).powi(2);
            }
            if r2 <= r2max {
                total += matern_half_integer(self.p, r2.sqrt(), self.kappa);
            }
        }
        total
    }
}

/// Series coefficients with early stopping on an estimated relative tail.
/// `diag(n)` is the contribution of level n at the diagonal.
fn truncate_series(
    cap: usize,
    tol: f64,
    nu: Option<f64>,
    mut coef: impl FnMut(usize) -> (f64, f64),
) -> Vec<f64> {
    let mut out = Vec::new();
    let mut total = 0.0;
    let mut prev_diag = f64::INFINITY;
    for n in 0..=cap {
        let (c, diag) = coef(n);
        out.push(c);
        total += diag;
        if n >= 2 && diag <= prev_diag {
            let tail = match nu {
                Some(nu) => diag * n as f64 / (2.0 * nu),
                None => {
                    let r = diag / prev_diag;
                    if r < 1.0 {
                        diag * r / (1.0 - r)
                    } else {
                        f64::INFINITY
                    }
                }
            };
            if tail < tol * total {
                break;
            }
        }
        prev_diag = diag;
    }
    out
}

/// Zonal expansion on S^d: `k(ρ) = Σ coef_n C_n^{(α)}(cos ρ)`, or cosines
/// `Σ coef_n cos(nρ)` on the circle.
#[derive(Clone, Debug)]
pub(crate) struct SphereSeries {
    pub dim: usize,
    pub alpha: f64,
    pub coef: Vec<f64>,
}

impl SphereSeries {
    pub(crate) fn new(dim: usize, w: SpectralWeight, cap: usize, tol: f64) -> Self {
        let alpha = (dim as f64 - 1.0) / 2.0;
        let coef = if dim == 1 {
            truncate_series(cap, tol, w.nu, |n| {
                let m = if n == 0 { 1.0 } else { 2.0 };
                let c = m * w.at((n * n) as f64);
                (c, c)
            })
        } else {
            let levels = sphere_levels(dim, cap).expect("dim >= 2");
            truncate_series(cap, tol, w.nu, |n| {
                let lv = levels[n];
                let c = lv.weight * w.at(lv.lambda);
                (c, c * gegenbauer_at_one(n, alpha))
            })
        };
        SphereSeries { dim, alpha, coef }
    }

    pub(crate) fn eval(&self, rho: f64) -> f64 {
        if self.dim == 1 {
            return self.coef.iter().enumerate().map(|(n, c)| c * (n as f64 * rho).cos()).sum();
        }
        let t = rho.cos().clamp(-1.0, 1.0);
        let a = self.alpha;
        let mut p0 = 1.0;
        let mut total = self.coef[0];
        if self.coef.len() == 1 {
            return total;
        }
        let mut p1 = 2.0 * a * t;
        total += self.coef[1] * p1;
        for (k, c) in self.coef.iter().enumerate().skip(2) {
            let kf = k as f64;
            let p2 = (2.0 * t * (kf + a - 1.0) * p1 - (kf + 2.0 * a - 2.0) * p0) / kf;
            total += c * p2;
            p0 = p1;
            p1 = p2;
        }
        total
    }
}

/// Character expansion on SO(3): `Σ coef_ℓ χ_ℓ(θ)` with coef = w(ℓ)(2ℓ+1).
#[derive(Clone, Debug)]
pub(crate) struct So3Series {
    pub coef: Vec<f64>,
}

impl So3Series {
    pub(crate) fn new(w: SpectralWeight, cap: usize, tol: f64) -> Self {
        let coef = truncate_series(cap, tol, w.nu, |l| {
            let d = (2 * l + 1) as f64;
            let c = w.at((l * (l + 1)) as f64) * d;
            (c, c * d)
        });
        So3Series { coef }
    }

    pub(crate) fn eval(&self, theta: f64) -> f64 {
        if theta.abs() < 1e-6 {
            return self
                .coef
                .iter()
                .enumerate()
                .map(|(l, c)| c * crate::spectral::so3_character(l, theta))
                .sum();
        }
        let s = (0.5 * theta).sin();
        let c2 = 2.0 * theta.cos();
        let mut prev = -s;
        let mut cur = s;
        let mut total = 0.0;
        for c in &self.coef {
            total += c * cur;
            let next = c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        total / s
    }
}

/// Values of a kernel profile on a uniform grid of `[0, extent]^dim`, read
/// back by tensor four-point Lagrange interpolation. The profile must be even
/// about both ends of every axis (zonal kernels on [0, π], torus offsets on
/// [0, ½]), so nodes outside the grid are reflected.
#[derive(Clone, Debug)]
pub(crate) struct GridTable {
    dim: usize,
    intervals: usize,
    h: f64,
    values: Vec<f64>,
}

impl GridTable {
    pub(crate) fn new(dim: usize, extent: f64, intervals: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let h = extent / intervals as f64;
        let side = intervals + 1;
        let mut x = vec![0.0; dim];
        let values = (0..side.pow(dim as u32))
            .map(|mut idx| {
                for c in x.iter_mut() {
                    *c = (idx % side) as f64 * h;
                    idx /= side;
                }
                f(&x)
            })
            .collect();
        GridTable { dim, intervals, h, values }
    }

    fn reflect(&self, k: isize) -> usize {
        let m = self.intervals as isize;
        (if k < 0 { -k } else if k > m { 2 * m - k } else { k }) as usize
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let m = self.intervals as f64;
        let mut base = [0isize; 3];
        let mut w = [[0.0; 4]; 3];
        for (j, &xj) in x.iter().enumerate() {
            let u = (xj.abs() / self.h).min(m);
            let i = (u.floor() as isize).min(self.intervals as isize - 1);
            let t = u - i as f64;
            base[j] = i - 1;
            // nodes at −1, 0, 1, 2
            w[j] = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
        }
        let side = self.intervals + 1;
        let mut total = 0.0;
        for combo in 0..4usize.pow(self.dim as u32) {
            let (mut c, mut idx, mut stride, mut wt) = (combo, 0, 1, 1.0);
            for j in 0..self.dim {
                let k = c % 4;
                c /= 4;
                wt *= w[j][k];
                idx += self.reflect(base[j] + k as isize) * stride;
                stride *= side;
            }
            total += wt * self.values[idx];
        }
        total
    }
}
