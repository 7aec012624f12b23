//! Special functions and Laplace–Beltrami spectral data for spheres, tori
//! and SO(3).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gegenbauer polynomial `C_n^{(α)}(t)` by the three-term recurrence.
pub fn gegenbauer(n: usize, alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("Gegenbauer alpha must be positive, got {alpha}")));
    }
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("Gegenbauer argument {t} outside [-1, 1]")));
    }
    Ok(*gegenbauer_all(n, alpha, t).last().expect("n + 1 values"))
}

/// `C_0^{(α)}(t), …, C_n^{(α)}(t)`; no argument checks.
pub fn gegenbauer_all(n: usize, alpha: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(2.0 * alpha * t);
    for k in 2..=n {
        let kf = k as f64;
        let v = (2.0 * t * (kf + alpha - 1.0) * out[k - 1] - (kf + 2.0 * alpha - 2.0) * out[k - 2]) / kf;
        out.push(v);
    }
    out
}

/// `C_n^{(α)}(1) = Γ(n+2α) / (n! Γ(2α))`, as a product to avoid overflow.
pub fn gegenbauer_at_one(n: usize, alpha: f64) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (k as f64 + 2.0 * alpha) / (k as f64 + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereEigenLevel {
    pub n: usize,
    pub lambda: f64,
    /// Addition-theorem constant `c_{n,d}` with the Gegenbauer polynomial.
    pub weight: f64,
}

/// Number of linearly independent degree-`n` spherical harmonics on S^d.
pub fn harmonic_count(d: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    // (2n+d−1)(n+d−2)! / (n!(d−1)!)
    let mut binom = 1.0;
    for k in 1..=n {
        binom *= (d as f64 - 2.0 + k as f64) / k as f64;
    }
    binom * (2 * n + d - 1) as f64 / (d - 1) as f64
}

/// Eigenlevels n = 0..=N of S^d. The weight is `N(d,n)/C_n^{(α)}(1)` with
/// `α = (d−1)/2`, which simplifies to `(2n+d−1)/(d−1)`.
pub fn sphere_levels(d: usize, big_n: usize) -> Result<Vec<SphereEigenLevel>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("sphere levels need d >= 2, got {d}")));
    }
    Ok((0..=big_n)
        .map(|n| SphereEigenLevel {
            n,
            lambda: (n * (n + d - 1)) as f64,
            weight: (2 * n + d - 1) as f64 / (d - 1) as f64,
        })
        .collect())
}

/// All τ ∈ ℤ^d with ‖τ‖_∞ ≤ L in lexicographic order.
pub fn torus_lattice(d: usize, l: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = 2 * l + 1;
    let total = side.pow(d as u32);
    (0..total).map(move |mut idx| {
        let mut tau = vec![0i64; d];
        for slot in tau.iter_mut().rev() {
            *slot = (idx % side) as i64 - l as i64;
            idx /= side;
        }
        tau
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct So3Level {
    pub l: usize,
    pub lambda: f64,
    pub dim: usize,
}

/// Irreducible representations of SO(3) with highest weight ℓ ≤ L.
pub fn so3_levels(big_l: usize) -> Vec<So3Level> {
    (0..=big_l)
        .map(|l| So3Level { l, lambda: (l * (l + 1)) as f64, dim: 2 * l + 1 })
        .collect()
}

/// Character `χ_ℓ` at a rotation by angle θ: `sin((ℓ+½)θ)/sin(θ/2)`.
pub fn so3_character(l: usize, theta: f64) -> f64 {
    let lf = l as f64;
    if theta.abs() < 1e-6 {
        // series to second order: (2ℓ+1)(1 − ℓ(ℓ+1)θ²/6)
        return (2.0 * lf + 1.0) * (1.0 - lf * (lf + 1.0) * theta * theta / 6.0);
    }
    ((lf + 0.5) * theta).sin() / (0.5 * theta).sin()
}

/// `χ_0(θ), …, χ_L(θ)` via the Chebyshev recurrence on `sin((ℓ+½)θ)`.
pub fn so3_characters(big_l: usize, theta: f64) -> Vec<f64> {
    if theta.abs() < 1e-6 {
        return (0..=big_l).map(|l| so3_character(l, theta)).collect();
    }
    let s = (0.5 * theta).sin();
    let c2 = 2.0 * theta.cos();
    let mut out = Vec::with_capacity(big_l + 1);
    let mut prev = (-0.5 * theta).sin();
    let mut cur = (0.5 * theta).sin();
    for _ in 0..=big_l {
        out.push(cur / s);
        let next = c2 * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadConfig};

    #[test]
    fn gegenbauer_base_cases() {
        assert_eq!(gegenbauer(0, 1.0, 0.3).unwrap(), 1.0);
        assert!((gegenbauer(1, 1.0, 0.3).unwrap() - 0.6).abs() < 1e-15);
        assert!(gegenbauer(3, 1.0, 1.5).is_err());
        assert!(gegenbauer(3, 0.0, 0.5).is_err());
    }

    #[test]
    fn gegenbauer_matches_generating_function() {
        // (1 − 2tx + x²)^{−α} = Σ C_n x^n; expand with binomial series of
        // (1 − y)^{−α}, y = 2tx − x², collecting the x^5 coefficient.
        let (alpha, t, n) = (2.0f64, 0.7f64, 5usize);
        let mut coef = 0.0;
        for k in 0..=n {
            // y^k = Σ_j binom(k,j) (2t x)^{k−j} (−x²)^j, power k + j
            let gen_binom = (0..k).fold(1.0, |a, i| a * (alpha + i as f64) / (i as f64 + 1.0));
            for j in 0..=k {
                if k + j == n {
                    let b = (0..j).fold(1.0, |a, i| a * (k - i) as f64 / (i + 1) as f64);
                    coef += gen_binom * b * (2.0 * t).powi((k - j) as i32) * (-1.0f64).powi(j as i32);
                }
            }
        }
        assert!((gegenbauer(n, alpha, t).unwrap() - coef).abs() < 1e-12);
    }

    #[test]
    fn gegenbauer_derivative_identity() {
        let h = 1e-6;
        for i in 0..20 {
            let t = -0.95 + 0.1 * i as f64;
            for &(n, alpha) in &[(4usize, 0.5), (7, 1.0), (10, 2.0)] {
                let fd = (gegenbauer(n, alpha, t + h).unwrap() - gegenbauer(n, alpha, t - h).unwrap()) / (2.0 * h);
                let exact = 2.0 * alpha * gegenbauer(n - 1, alpha + 1.0, t).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "n={n} t={t}");
            }
        }
    }

    #[test]
    fn gegenbauer_bounded_by_value_at_one() {
        for &alpha in &[0.5, 1.0, 2.0] {
            for n in 0..15 {
                let top = gegenbauer_at_one(n, alpha);
                assert!((gegenbauer(n, alpha, 1.0).unwrap() - top).abs() < 1e-9 * top);
                for k in 0..=200 {
                    let t = -1.0 + k as f64 / 100.0;
                    assert!(gegenbauer(n, alpha, t).unwrap().abs() <= top * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn sphere_levels_basics() {
        let lv = sphere_levels(2, 5).unwrap();
        assert_eq!(lv[0].lambda, 0.0);
        assert_eq!(harmonic_count(2, 0), 1.0);
        assert_eq!(lv[3].lambda, 12.0);
        assert_eq!(harmonic_count(2, 3), 7.0);
        assert_eq!(harmonic_count(3, 2), 9.0);
        for d in 2..6 {
            for l in sphere_levels(d, 8).unwrap() {
                let w = harmonic_count(d, l.n) / gegenbauer_at_one(l.n, (d as f64 - 1.0) / 2.0);
                assert!((w - l.weight).abs() < 1e-12 * w);
            }
        }
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(torus_lattice(1, 1).collect::<Vec<_>>(), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(torus_lattice(2, 2).count(), 25);
        assert_eq!(torus_lattice(3, 0).collect::<Vec<_>>(), vec![vec![0, 0, 0]]);
        let all: std::collections::HashSet<_> = torus_lattice(3, 2).collect();
        assert_eq!(all.len(), 125);
    }

    #[test]
    fn characters() {
        for l in 0..6 {
            assert_eq!(so3_character(l, 0.0), (2 * l + 1) as f64);
            let cs = so3_characters(7, 1.3);
            assert!((cs[l] - so3_character(l, 1.3)).abs() < 1e-12);
        }
        assert!((so3_character(0, 2.0) - 1.0).abs() < 1e-15);
        // small-angle branch is continuous
        let a = so3_character(4, 1.0e-6 * 0.999);
        let b = so3_character(4, 1.0e-6 * 1.001);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn character_orthogonality() {
        let cfg = QuadConfig { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 100 };
        for l in 0..=5 {
            for m in 0..=5 {
                let v = integrate(
                    |t| so3_character(l, t) * so3_character(m, t) * (t / 2.0).sin().powi(2),
                    0.0,
                    std::f64::consts::PI,
                    &cfg,
                )
                .unwrap()
                    * 2.0
                    / std::f64::consts::PI;
                let want = if l == m { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-6, "l={l} m={m} v={v}");
            }
        }
    }
}
