//! Steihaug–Toint truncated conjugate gradients.

use nalgebra::DVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcgStop {
    /// Residual below the relative tolerance.
    Converged,
    NegativeCurvature,
    /// Step reached the trust-region boundary.
    Boundary,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct TcgResult {
    pub step: DVector<f64>,
    /// `m(0) − m(step)` for `m(s) = gᵀs + ½ sᵀHs`.
    pub model_decrease: f64,
    pub iters: usize,
    pub stop: TcgStop,
}

/// Positive τ with ‖z + τd‖ = Δ.
fn to_boundary(z: &DVector<f64>, d: &DVector<f64>, delta: f64) -> f64 {
    let (a, b, c) = (d.dot(d), 2.0 * z.dot(d), z.dot(z) - delta * delta);
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // c ≤ 0 inside the region, so the larger root is non-negative
    if b >= 0.0 {
        (-2.0 * c) / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

/// Approximately minimizes `gᵀs + ½ sᵀHs` over `‖s‖ ≤ delta`, stopping when
/// the residual falls below `rel_tol·‖g‖`.
pub fn truncated_cg(
    g: &DVector<f64>,
    mut hessvec: impl FnMut(&DVector<f64>) -> DVector<f64>,
    delta: f64,
    max_iters: usize,
    rel_tol: f64,
) -> TcgResult {
    let n = g.len();
    let gnorm = g.norm();
    let mut z = DVector::zeros(n);
    // model decrease of z is −(gᵀz + ½ zᵀHz); track gᵀz and zᵀHz
    let mut gz = 0.0;
    let mut zhz = 0.0;
    let finish = |z: DVector<f64>, gz: f64, zhz: f64, iters, stop| TcgResult {
        step: z,
        model_decrease: -(gz + 0.5 * zhz),
        iters,
        stop,
    };
    if gnorm == 0.0 || delta <= 0.0 {
        return finish(z, 0.0, 0.0, 0, TcgStop::Converged);
    }
    let mut r = g.clone();
    let mut d = -&r;
    let mut rr = r.dot(&r);
    for it in 0..max_iters {
        let hd = hessvec(&d);
        let dhd = d.dot(&hd);
        let zhd = z.dot(&hd);
        let step_to = |tau: f64, z: &DVector<f64>| {
            let zn = z + &d * tau;
            let gzn = gz + tau * g.dot(&d);
            let zhzn = zhz + 2.0 * tau * zhd + tau * tau * dhd;
            (zn, gzn, zhzn)
        };
        if dhd <= 0.0 {
            let tau = to_boundary(&z, &d, delta);
            let (zn, a, b) = step_to(tau, &z);
            return finish(zn, a, b, it + 1, TcgStop::NegativeCurvature);
        }
        let alpha = rr / dhd;
        let (zn, a, b) = step_to(alpha, &z);
        if zn.norm() >= delta {
            let tau = to_boundary(&z, &d, delta);
            let (zb, a, b) = step_to(tau, &z);
            return finish(zb, a, b, it + 1, TcgStop::Boundary);
        }
        z = zn;
        gz = a;
        zhz = b;
        r += &hd * alpha;
        let rr_new = r.dot(&r);
        if rr_new.sqrt() <= rel_tol * gnorm {
            return finish(z, gz, zhz, it + 1, TcgStop::Converged);
        }
        d = -&r + &d * (rr_new / rr);
        rr = rr_new;
    }
    finish(z, gz, zhz, max_iters, TcgStop::MaxIterations)
}
