//! Flat torus with coordinates in [0,1); tangent coefficients are radians.

use std::f64::consts::TAU;

use nalgebra::DVector;

use crate::{Error, Result};

pub(crate) fn wrap(x: f64) -> f64 {
    let w = x - x.floor();
    // x = -1e-18 floors to -1 and wraps to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed displacement from `a` to `b` in (-½, ½].
pub(crate) fn wrapped_delta(a: f64, b: f64) -> f64 {
    let d = b - a;
    let w = d - d.round();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

pub(super) fn validate(x: &DVector<f64>) -> Result<()> {
    if x.iter().all(|&c| (0.0..1.0).contains(&c)) {
        Ok(())
    } else {
        Err(Error::InvalidPoint("torus coordinates must lie in [0,1)".into()))
    }
}

pub(super) fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    TAU * a
        .iter()
        .zip(b.iter())
        .map(|(&x, &y)| wrapped_delta(x, y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub(super) fn exp(x: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    x.zip_map(c, |a, v| wrap(a + v / TAU))
}

pub(super) fn log(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.zip_map(b, |x, y| TAU * wrapped_delta(x, y))
}
