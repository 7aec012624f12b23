mod common;

use std::f64::consts::PI;

use common::*;
use geobo::kernel::{
    gram, gram_with_min_eigenvalue, heat_hyperbolic_at, heat_so3, heat_spd2, heat_spd2_at, heat_sphere,
    heat_torus, kernel_eval, matern_from_heat, matern_torus, naive_geodesic_se, normalization_constant,
    product_kernel, Family, KernelSpec, Smoothness,
};
use geobo::manifold::geodesic_distance;
use geobo::quadrature::QuadConfig;
use geobo::rng::seeded;
use geobo::spectral::gegenbauer;
use geobo::{Manifold, ManifoldPoint};
use nalgebra::DMatrix;
use rand::Rng as _;

fn t1(x: f64) -> ManifoldPoint {
    ManifoldPoint::torus(vec![x])
}

fn spd_diag(a: f64, b: f64) -> ManifoldPoint {
    ManifoldPoint::spd(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b]))).unwrap()
}

/// Point on ℋ^d at distance ρ from the origin along the first axis.
fn hyp_at(dim: usize, rho: f64) -> ManifoldPoint {
    let mut s = vec![0.0; dim];
    s[0] = rho.sinh();
    ManifoldPoint::hyperbolic_from_spatial(&s)
}

#[test]
fn closed_form_examples() {
    let spec = KernelSpec::new(Family::EuclideanMatern, Smoothness::Finite(0.5), 1.0, 1.0);
    let v = kernel_eval(&spec, &ManifoldPoint::euclidean(vec![0.2]), &ManifoldPoint::euclidean(vec![1.2])).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-12);

    let se = KernelSpec::riemannian_se(0.2);
    let a = kernel_eval(&se, &t1(0.05), &t1(0.75)).unwrap();
    let b = kernel_eval(&se, &t1(0.0), &t1(0.3)).unwrap();
    assert!((a - b).abs() < 1e-14);

    let mut s = KernelSpec::riemannian_matern(1.5, 0.4);
    s.sigma2 = 2.5;
    for m in [Manifold::Sphere { dim: 2 }, Manifold::Rotation, Manifold::Spd { dim: 2 }, Manifold::Hyperbolic { dim: 2 }] {
        for p in points(3, &m, 5) {
            assert!((kernel_eval(&s, &p, &p).unwrap() - 2.5).abs() < 1e-12);
        }
    }
}

#[test]
fn torus_heat_matches_wrapped_gaussian() {
    let kappa: f64 = 0.3;
    let wrapped = |delta: f64| -> f64 {
        (-50..=50)
            .map(|m| (-(delta + m as f64).powi(2) / (2.0 * kappa * kappa)).exp())
            .sum::<f64>()
            / ((2.0 * PI).sqrt() * kappa)
    };
    for k in 0..=20 {
        let delta = 0.025 * k as f64;
        let s = heat_torus(&t1(0.1), &t1(0.1 + delta), kappa, 30).unwrap();
        assert!(s.tail_bound.is_none());
        let want = wrapped(delta);
        assert!(rel_err(s.value, want) < 1e-8, "delta={delta}: {} vs {want}", s.value);
    }
    let at_zero = heat_torus(&t1(0.4), &t1(0.4), kappa, 30).unwrap().value;
    let direct: f64 = (-30i64..=30).map(|t| (-2.0 * (kappa * PI * t as f64).powi(2)).exp()).sum();
    assert!((at_zero - direct).abs() < 1e-12);
    assert!(heat_torus(&t1(0.1), &t1(0.2), 0.01, 3).unwrap().tail_bound.is_some());
}

#[test]
fn torus_matern_monotone_in_distance() {
    let spec = KernelSpec::riemannian_matern(2.5, 0.2);
    let mut prev = f64::INFINITY;
    let mut prev_direct = f64::INFINITY;
    for k in 0..50 {
        let delta = 0.5 * k as f64 / 49.0;
        let v = kernel_eval(&spec, &t1(0.0), &t1(delta)).unwrap();
        let d = matern_torus(&t1(0.0), &t1(delta), 2.5, 0.2, 400).unwrap();
        assert!(v <= prev + 1e-12 && d <= prev_direct + 1e-15, "k={k}");
        assert!(d > 0.0);
        prev = v;
        prev_direct = d;
    }
}

/// Heat sum on T^d at length scale `l`, factorized over coordinates.
fn torus_heat_product(offsets: &[f64], l: f64) -> f64 {
    let big_l = ((((1e16f64).ln() / (2.0 * PI * PI)).sqrt() / l).ceil() as usize + 3).min(100_000);
    offsets
        .iter()
        .map(|&d| heat_torus(&t1(0.0), &t1(d), l, big_l).unwrap().value)
        .product()
}

#[test]
fn torus_matern_equals_heat_integral() {
    let kappa = 0.5;
    for dim in [1usize, 2] {
        for nu in [1.5, 2.5] {
            let p = nu + dim as f64 / 2.0;
            let zero = vec![0.0; dim];
            let c = matern_from_heat(|l| Ok(torus_heat_product(&zero, l)), nu, kappa, p, 64).unwrap();
            let spec = KernelSpec::riemannian_matern(nu, kappa);
            for k in 0..=10 {
                let off: Vec<f64> = (0..dim).map(|j| 0.05 * k as f64 * (1.0 - 0.3 * j as f64)).collect();
                let via_heat =
                    matern_from_heat(|l| Ok(torus_heat_product(&off, l)), nu, kappa, p, 64).unwrap() / c;
                let x = ManifoldPoint::torus(zero.clone());
                let y = ManifoldPoint::torus(off.clone());
                let direct = kernel_eval(&spec, &x, &y).unwrap();
                assert!(rel_err(via_heat, direct) < 1e-3, "d={dim} nu={nu} off={off:?}: {via_heat} vs {direct}");
                let raw = matern_torus(&x, &y, nu, kappa, 200).unwrap() / matern_torus(&x, &x, nu, kappa, 200).unwrap();
                assert!(rel_err(raw, direct) < 1e-3);
            }
        }
    }
}

#[test]
fn sphere_kernel_is_zonal_with_flat_large_scale_limit() {
    let mut rng = seeded(5);
    let m = Manifold::Sphere { dim: 2 };
    for spec in [KernelSpec::riemannian_se(0.4), KernelSpec::riemannian_matern(1.5, 0.4)] {
        for _ in 0..5 {
            let rho = rng.random_range(0.1..3.0);
            let iso = random_isometry(&mut rng, &m);
            let (x, y) = (sphere_point_at(2, 0.0), sphere_point_at(2, rho));
            let (a, b) = (kernel_eval(&spec, &x, &y).unwrap(), kernel_eval(&spec, &iso(&x), &iso(&y)).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
    }
    for spec in [KernelSpec::riemannian_se(1e3), KernelSpec::riemannian_matern(2.5, 1e3)] {
        for rho in [0.5, 1.5, 3.0] {
            let v = kernel_eval(&spec, &sphere_point_at(2, 0.0), &sphere_point_at(2, rho)).unwrap();
            assert!((v - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn sphere_heat_semigroup_monte_carlo() {
    // E_z[h_s(x,z) h_t(z,y)] = h_{s+t}(x,y) for z uniform on S², with the
    // addition-theorem weights 2n+1.
    let (k1, k2) = (0.7f64, 0.6f64);
    let k3 = (k1 * k1 + k2 * k2).sqrt();
    let zs = points(17, &Manifold::Sphere { dim: 2 }, 100_000);
    for rho in [0.0, 0.8, 2.0] {
        let x = sphere_point_at(2, 0.0);
        let y = sphere_point_at(2, rho);
        let mc: f64 = zs
            .iter()
            .map(|z| heat_sphere(&x, z, k1, 60).unwrap() * heat_sphere(z, &y, k2, 60).unwrap())
            .sum::<f64>()
            / zs.len() as f64;
        let want = heat_sphere(&x, &y, k3, 60).unwrap();
        assert!(rel_err(mc, want) < 0.02, "rho={rho}: {mc} vs {want}");
    }
}

#[test]
fn so3_heat_is_even_part_of_s3_heat() {
    let kappa = 0.5;
    let ks = kappa / 2.0;
    let s3 = |phi: f64| -> f64 {
        (0..200)
            .step_by(2)
            .map(|n| {
                let w = (-(ks * ks) * (n * (n + 2)) as f64 / 2.0).exp();
                (n + 1) as f64 * w * gegenbauer(n, 1.0, phi.cos()).unwrap()
            })
            .sum()
    };
    let spec = KernelSpec::riemannian_se(kappa);
    let id = rotation_z(0.0);
    for k in 0..20 {
        let theta = 3.1 * k as f64 / 19.0;
        let v = kernel_eval(&spec, &id, &rotation_z(theta)).unwrap();
        let want = s3(theta / 2.0) / s3(0.0);
        assert!(rel_err(v, want) < 1e-4, "theta={theta}: {v} vs {want}");
    }
}

#[test]
fn so3_diagonal_and_bi_invariance() {
    let kappa: f64 = 0.4;
    let diag: f64 = (0..200)
        .map(|l| (-(kappa * kappa) * (l * (l + 1)) as f64 / 2.0).exp() * ((2 * l + 1) as f64).powi(2))
        .sum();
    let x = rotation_z(0.7);
    assert!(rel_err(heat_so3(&x, &x, kappa, 199).unwrap(), diag) < 1e-12);
    let c = normalization_constant(&KernelSpec::riemannian_se(kappa), &Manifold::Rotation).unwrap();
    assert!(rel_err(c, diag) < 1e-9);

    let mut rng = seeded(23);
    let pts = points(29, &Manifold::Rotation, 10);
    for spec in [KernelSpec::riemannian_se(kappa), KernelSpec::riemannian_matern(1.5, kappa)] {
        for pair in pts.chunks(2) {
            let q = random_rotation3(&mut rng);
            let (ManifoldPoint::Rotation(a), ManifoldPoint::Rotation(b)) = (&pair[0], &pair[1]) else { unreachable!() };
            let base = kernel_eval(&spec, &pair[0], &pair[1]).unwrap();
            let left = kernel_eval(
                &spec,
                &ManifoldPoint::rotation(q * a).unwrap(),
                &ManifoldPoint::rotation(q * b).unwrap(),
            )
            .unwrap();
            let right = kernel_eval(
                &spec,
                &ManifoldPoint::rotation(a * q).unwrap(),
                &ManifoldPoint::rotation(b * q).unwrap(),
            )
            .unwrap();
            assert!((base - left).abs() < 1e-10 && (base - right).abs() < 1e-10);
        }
    }
}

#[test]
fn hyperbolic_heat_limits() {
    let q = QuadConfig::default();
    assert_eq!(heat_hyperbolic_at(3, 1e-9, 1.0, &q).unwrap(), 1.0);
    for dim in 2..=5 {
        let spec = KernelSpec::riemannian_se(1.0);
        let v = kernel_eval(&spec, &hyp_at(dim, 0.0), &hyp_at(dim, 0.01)).unwrap();
        let flat = (-0.5f64 * 0.01 * 0.01).exp();
        assert!(rel_err(v, flat) < 1e-3, "d={dim}: {v}");
    }
    assert!(matches!(heat_hyperbolic_at(6, 1.0, 1.0, &q), Err(geobo::Error::Unsupported(_))));
}

#[test]
fn millson_step_matches_finite_difference() {
    let q = QuadConfig::default();
    let h = 1e-5;
    for kappa in [0.5, 1.0, 2.0] {
        for rho in [0.5f64, 1.0, 2.0] {
            let k3 = |r: f64| heat_hyperbolic_at(3, r, kappa, &q).unwrap();
            let fd = -(k3(rho + h) - k3(rho - h)) / (2.0 * h * rho.sinh());
            let k5 = heat_hyperbolic_at(5, rho, kappa, &q).unwrap();
            assert!(rel_err(k5, fd) < 1e-5, "kappa={kappa} rho={rho}: {k5} vs {fd}");
        }
    }
    // the even-dimensional pair obeys the same recurrence
    let tight = QuadConfig { abs_tol: 1e-15, rel_tol: 1e-13, max_subdivisions: 2000 };
    let h = 1e-3;
    for kappa in [0.5, 1.0] {
        for rho in [0.5f64, 1.0, 2.0] {
            let k2 = |r: f64| heat_hyperbolic_at(2, r, kappa, &tight).unwrap();
            let fd = -(k2(rho + h) - k2(rho - h)) / (2.0 * h * rho.sinh());
            let k4 = heat_hyperbolic_at(4, rho, kappa, &tight).unwrap();
            assert!(rel_err(k4, fd) < 1e-5, "kappa={kappa} rho={rho}: {k4} vs {fd}");
        }
    }
}

#[test]
fn spd_heat_symmetric_and_affine_invariant() {
    let m = Manifold::Spd { dim: 2 };
    let pts = points(31, &m, 100);
    let mut rng = seeded(37);
    let spec = KernelSpec::riemannian_se(0.8);
    let q = QuadConfig::default();
    for pair in pts.chunks(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let a = kernel_eval(&spec, x, y).unwrap();
        let b = kernel_eval(&spec, y, x).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert!(rel_err(heat_spd2(x, y, 0.8, &q).unwrap(), heat_spd2(y, x, 0.8, &q).unwrap()) < 1e-8);
        let g = random_isometry(&mut rng, &m);
        let c = kernel_eval(&spec, &g(x), &g(y)).unwrap();
        assert!((a - c).abs() < 1e-8);
    }
    let c = normalization_constant(&spec, &m).unwrap();
    assert!(rel_err(c, heat_spd2_at(0.0, 0.0, 0.8, &q).unwrap()) < 1e-12);
    assert!(c > 0.0 && c.is_finite());
}

#[test]
fn spd_heat_factorizes_into_scale_and_hyperbolic_parts() {
    // SPD(2) = ℝ (log det) × ℋ² (unimodular part)
    let q = QuadConfig::default();
    for kappa in [0.5f64, 1.0, 2.0] {
        for (h1, h2) in [(0.0, 0.0), (0.3, -0.1), (1.0, 0.2), (2.0, -1.5)] {
            let got = heat_spd2_at(h1, h2, kappa, &q).unwrap();
            let alpha: f64 = h1 - h2;
            let want = (-(h1 + h2) * (h1 + h2) / (4.0 * kappa * kappa)).exp() / 2f64.sqrt()
                * heat_hyperbolic_at(2, alpha, 2f64.sqrt() * kappa, &q).unwrap();
            assert!(rel_err(got, want) < 1e-7, "kappa={kappa} h=({h1},{h2}): {got} vs {want}");
        }
    }
}

fn euclidean_matern_closed_form(nu: f64, r: f64, kappa: f64) -> f64 {
    let s = (2.0 * nu).sqrt() * r / kappa;
    match (2.0 * nu).round() as i32 {
        1 => (-s).exp(),
        3 => (1.0 + s) * (-s).exp(),
        5 => (1.0 + s + s * s / 3.0) * (-s).exp(),
        _ => unreachable!(),
    }
}

#[test]
fn matern_from_heat_reproduces_euclidean_matern() {
    let kappa = 0.8;
    for nu in [0.5, 1.5, 2.5] {
        for dim in 1..=3 {
            let d = dim as f64;
            // unit-mass Gaussian heat kernel with the compact-style weight
            let heat = |r: f64| move |l: f64| Ok((2.0 * PI * l * l).powf(-d / 2.0) * (-r * r / (2.0 * l * l)).exp());
            let c = matern_from_heat(heat(0.0), nu, kappa, nu + d / 2.0, 64).unwrap();
            let mut sup: f64 = 0.0;
            for k in 0..=100 {
                let r = 0.05 * k as f64;
                let v = matern_from_heat(heat(r), nu, kappa, nu + d / 2.0, 64).unwrap() / c;
                sup = sup.max((v - euclidean_matern_closed_form(nu, r, kappa)).abs());
            }
            assert!(sup < 1e-4, "nu={nu} d={dim}: sup error {sup}");
        }
        // unit-diagonal heat with the weight u^{ν−1}
        let c = matern_from_heat(|_| Ok(1.0), nu, kappa, nu, 64).unwrap();
        assert!(c > 0.0 && c.is_finite());
        for k in 0..=50 {
            let r = 0.1 * k as f64;
            let v = matern_from_heat(|l| Ok((-r * r / (2.0 * l * l)).exp()), nu, kappa, nu, 64).unwrap() / c;
            assert!((v - euclidean_matern_closed_form(nu, r, kappa)).abs() < 1e-4);
        }
    }
}

#[test]
fn product_kernel_examples() {
    let f = vec![KernelSpec::riemannian_se(0.3), KernelSpec::riemannian_matern(2.5, 0.5)];
    let s2 = Manifold::Sphere { dim: 2 };
    let xs = vec![t1(0.2), points(1, &s2, 1).remove(0)];
    let v = product_kernel(&f, 1.7, &xs, &xs).unwrap();
    assert!((v - 1.7).abs() < 1e-12);

    let ys = vec![t1(0.45), points(2, &s2, 1).remove(0)];
    let single = product_kernel(&f[1..], 1.0, &xs[1..], &ys[1..]).unwrap();
    assert!((single - kernel_eval(&f[1], &xs[1], &ys[1]).unwrap()).abs() < 1e-14);

    let heat = KernelSpec::riemannian_se(0.25);
    for k in 0..10 {
        let (a, b) = (0.1 * k as f64, 0.37 * k as f64);
        let prod = product_kernel(&[heat.clone(), heat.clone()], 1.0, &[t1(0.0), t1(0.0)], &[t1(a), t1(b)]).unwrap();
        let t2 = kernel_eval(&heat, &ManifoldPoint::torus(vec![0.0, 0.0]), &ManifoldPoint::torus(vec![a, b])).unwrap();
        assert!(rel_err(prod, t2) < 1e-8);
    }
    assert!(product_kernel(&f, 1.0, &xs[..1], &ys[..1]).is_err());
}

#[test]
fn naive_geodesic_kernel_examples() {
    let s2 = Manifold::Sphere { dim: 2 };
    let pts = points(41, &s2, 30);
    assert_eq!(naive_geodesic_se(&pts[0], &pts[0], 0.5, 2.0).unwrap(), 2.0);
    let spec = KernelSpec::new(Family::NaiveGeodesicSe, Smoothness::Infinite, 0.5, 1.0);
    let (k, min) = gram_with_min_eigenvalue(&spec, &pts).unwrap();
    assert!(min.is_finite());
    assert!((k[(0, 1)] - naive_geodesic_se(&pts[0], &pts[1], 0.5, 1.0).unwrap()).abs() < 1e-14);
    let pole = sphere_point_at(2, 0.0);
    let mut prev = f64::INFINITY;
    for i in 0..50 {
        let v = naive_geodesic_se(&pole, &sphere_point_at(2, 3.1 * i as f64 / 49.0), 0.5, 1.0).unwrap();
        assert!(v <= prev);
        prev = v;
    }
}

#[test]
fn gram_examples() {
    let s5 = Manifold::Sphere { dim: 5 };
    let pts = points(43, &s5, 20);
    let spec = KernelSpec::riemannian_matern(2.5, 0.7);
    let one = gram(&spec, &pts[..1]).unwrap();
    assert_eq!(one.shape(), (1, 1));
    assert_eq!(one[(0, 0)], 1.0);
    let mut dup = pts[..4].to_vec();
    dup.push(pts[2].clone());
    let k = gram(&spec, &dup).unwrap();
    for j in 0..5 {
        assert_eq!(k[(4, j)], k[(2, j)]);
        assert_eq!(k[(j, 4)], k[(j, 2)]);
    }
    let k = gram(&spec, &pts).unwrap();
    assert_eq!(k, k.transpose());
    assert!(min_eigenvalue(&k) >= -1e-8);
    assert!(gram(&spec, &[]).is_err());
}

/// A geodesic from a base point per manifold, parameterized by distance.
fn geodesic(m: &Manifold) -> (ManifoldPoint, Box<dyn Fn(f64) -> ManifoldPoint>, f64) {
    match m {
        Manifold::Sphere { dim } => {
            let d = *dim;
            (sphere_point_at(d, 0.0), Box::new(move |r| sphere_point_at(d, r)), PI * 0.999)
        }
        Manifold::Torus { dim } => {
            let d = *dim;
            let s = (d as f64).sqrt();
            (
                ManifoldPoint::torus(vec![0.0; d]),
                Box::new(move |r| ManifoldPoint::torus(vec![r / (2.0 * PI * s); d])),
                PI * s,
            )
        }
        Manifold::Rotation => (rotation_z(0.0), Box::new(rotation_z), PI * 0.999),
        Manifold::Spd { .. } => (
            spd_diag(1.0, 1.0),
            Box::new(|r: f64| spd_diag((r * 0.8).exp(), (-r * 0.6).exp())),
            4.0,
        ),
        Manifold::Hyperbolic { dim } => {
            let d = *dim;
            (hyp_at(d, 0.0), Box::new(move |r| hyp_at(d, r)), 4.0)
        }
        Manifold::Euclidean { dim } => {
            let d = *dim;
            (
                ManifoldPoint::euclidean(vec![0.0; d]),
                Box::new(move |r| {
                    let mut v = vec![0.0; d];
                    v[0] = r;
                    ManifoldPoint::euclidean(v)
                }),
                4.0,
            )
        }
        Manifold::Product { .. } => unreachable!(),
    }
}

fn all_spaces() -> Vec<Manifold> {
    vec![
        Manifold::Sphere { dim: 1 },
        Manifold::Sphere { dim: 2 },
        Manifold::Sphere { dim: 5 },
        Manifold::Torus { dim: 1 },
        Manifold::Torus { dim: 2 },
        Manifold::Rotation,
        Manifold::Spd { dim: 2 },
        Manifold::Hyperbolic { dim: 2 },
        Manifold::Hyperbolic { dim: 3 },
        Manifold::Hyperbolic { dim: 4 },
        Manifold::Hyperbolic { dim: 5 },
        Manifold::Euclidean { dim: 3 },
    ]
}

#[test]
fn se_kernels_decrease_along_geodesics() {
    for m in all_spaces() {
        let (base, path, max) = geodesic(&m);
        for kappa in [0.3, 1.0] {
            let spec = KernelSpec::riemannian_se(kappa);
            let mut prev = f64::INFINITY;
            for i in 0..50 {
                let r = max * i as f64 / 49.0;
                let p = path(r);
                assert!((geodesic_distance(&base, &p).unwrap() - r).abs() < 1e-6, "{m} r={r}");
                let v = kernel_eval(&spec, &base, &p).unwrap();
                // slack = default series tolerance relative to k(x, x) = 1
                assert!(v <= prev + 1e-10, "{m} kappa={kappa} r={r}: {v} > {prev}");
                prev = v;
            }
        }
    }
}

#[test]
fn length_scale_limits() {
    for m in all_spaces() {
        let (base, path, max) = geodesic(&m);
        let far = path(0.5 * max.min(2.0));
        let mut specs = vec![KernelSpec::riemannian_se(1e-3)];
        // Matérn spectral series on spheres and SO(3) cannot resolve this
        // scale within the term cap; tori use the image sum instead.
        if !matches!(m, Manifold::Sphere { .. } | Manifold::Rotation) {
            specs.push(KernelSpec::riemannian_matern(0.5, 1e-3));
            specs.push(KernelSpec::riemannian_matern(2.5, 1e-3));
        }
        for s in specs {
            let v = kernel_eval(&s, &base, &far).unwrap();
            assert!(v.abs() < 1e-6, "{m} {:?}: {v}", s.nu);
        }
        if m.is_compact() {
            for s in [KernelSpec::riemannian_se(1e3), KernelSpec::riemannian_matern(2.5, 1e3)] {
                let v = kernel_eval(&s, &base, &far).unwrap();
                assert!((v - 1.0).abs() < 1e-6, "{m} {:?}: {v}", s.nu);
            }
        }
    }
}

#[test]
fn matern_approaches_se_as_smoothness_grows() {
    for m in [Manifold::Sphere { dim: 2 }, Manifold::Torus { dim: 1 }, Manifold::Hyperbolic { dim: 3 }, Manifold::Spd { dim: 2 }] {
        let (base, path, max) = geodesic(&m);
        let kappa = 0.5;
        let se = KernelSpec::riemannian_se(kappa);
        for i in 1..=5 {
            let p = path(0.15 * max.min(3.0) * i as f64 / 5.0);
            let target = kernel_eval(&se, &base, &p).unwrap();
            let gaps: Vec<f64> = [2.5, 10.0, 50.0]
                .iter()
                .map(|&nu| (kernel_eval(&KernelSpec::riemannian_matern(nu, kappa), &base, &p).unwrap() - target).abs())
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{m} pair {i}: {gaps:?}");
        }
    }
}
