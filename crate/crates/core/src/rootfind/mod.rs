//! Polynomial and scalar root finding.

mod brent;
mod hqr;
mod poly;

pub use brent::{bracketed_root, Bracket};
pub use poly::{complex_poly_roots, RealPolynomial};

use num_complex::Complex64;

use crate::error::Result;
use crate::plant::Plant;
use poly::{product, sum_of_leave_one_out, ScaledPoly};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `gamma(omega) = (sigma0 - sigma_z)^2 + (omega - omega_z)^2` as a polynomial in omega.
fn gamma(z: &Complex64, sigma0: f64) -> ScaledPoly {
    let ds = sigma0 - z.re;
    ScaledPoly::from_coeffs(vec![c(z.im * z.im + ds * ds), c(-2.0 * z.im), c(1.0)])
}

fn delta_omega(z: &Complex64) -> ScaledPoly {
    ScaledPoly::from_coeffs(vec![c(-z.im), c(1.0)])
}

fn to_real(p: ScaledPoly) -> RealPolynomial {
    RealPolynomial::new(p.into_coeffs().into_iter().map(|z| z.re).collect())
}

/// Numerator of `Lambda'` cleared of denominators.
fn magnitude_polynomial(plant: &Plant, sigma0: f64) -> RealPolynomial {
    let gz: Vec<ScaledPoly> = plant.zeros().iter().map(|z| gamma(z, sigma0)).collect();
    let gp: Vec<ScaledPoly> = plant.poles().iter().map(|p| gamma(p, sigma0)).collect();
    let wz: Vec<ScaledPoly> = plant.zeros().iter().map(delta_omega).collect();
    let wp: Vec<ScaledPoly> = plant.poles().iter().map(delta_omega).collect();
    let a = product(&gz).mul(&sum_of_leave_one_out(&wp, &gp));
    let b = product(&gp).mul(&sum_of_leave_one_out(&wz, &gz));
    to_real(a.sub(&b))
}

/// Numerator of `phi'` cleared of denominators.
fn phase_polynomial(plant: &Plant, sigma0: f64, h: f64) -> RealPolynomial {
    let gz: Vec<ScaledPoly> = plant.zeros().iter().map(|z| gamma(z, sigma0)).collect();
    let gp: Vec<ScaledPoly> = plant.poles().iter().map(|p| gamma(p, sigma0)).collect();
    let sz: Vec<ScaledPoly> = plant.zeros().iter().map(|z| ScaledPoly::constant(c(sigma0 - z.re))).collect();
    let sp: Vec<ScaledPoly> = plant.poles().iter().map(|p| ScaledPoly::constant(c(sigma0 - p.re))).collect();
    let pz = product(&gz);
    let pp = product(&gp);
    let a = pp.mul(&sum_of_leave_one_out(&sz, &gz));
    let b = pz.mul(&sum_of_leave_one_out(&sp, &gp));
    let d = pz.mul(&pp).scale(h);
    to_real(a.sub(&b).sub(&d))
}

/// Newton polish of a zero of `f` with derivative `df`; only accepts steps
/// that reduce `|f|`.
fn polish<F, D>(f: F, df: D, mut x: f64) -> f64
where
    F: Fn(f64) -> Option<f64>,
    D: Fn(f64) -> Option<f64>,
{
    let Some(mut fx) = f(x) else { return x };
    for _ in 0..8 {
        let Some(d) = df(x) else { break };
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let cand = (x - fx / d).max(0.0);
        match f(cand) {
            Some(fc) if fc.abs() < fx.abs() => {
                x = cand;
                fx = fc;
            }
            _ => break,
        }
    }
    x
}

/// Non-negative frequencies where `Lambda'(omega) = 0`.
pub fn magnitude_extremum_freqs(plant: &Plant, sigma0: f64) -> Result<Vec<f64>> {
    let p = magnitude_polynomial(plant, sigma0);
    if p.is_zero() {
        return Ok(Vec::new());
    }
    let roots = p.real_nonneg_roots()?;
    Ok(roots
        .into_iter()
        .map(|w| {
            polish(
                |x| plant.big_lambda_prime(sigma0, x).ok(),
                |x| plant.big_lambda_second(sigma0, x).ok(),
                w,
            )
        })
        .collect())
}

/// Non-negative frequencies where `phi'(omega) = 0` for delay `h`.
pub fn phase_extremum_freqs(plant: &Plant, sigma0: f64, h: f64) -> Result<Vec<f64>> {
    let p = phase_polynomial(plant, sigma0, h);
    if p.is_zero() {
        return Ok(Vec::new());
    }
    let roots = p.real_nonneg_roots()?;
    Ok(roots
        .into_iter()
        .map(|w| {
            polish(
                |x| plant.phi_prime_with(sigma0, x, h).ok(),
                |x| plant.phi_second(sigma0, x).ok(),
                w,
            )
        })
        .collect())
}

/// Structured rational functions whose zeros [`rational_zeros`] computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RationalTarget {
    /// `G'(s)/G(s) - h`
    LogDerivativeShift { h: f64 },
    /// `1 + G(s)`
    UnityFeedback,
}

fn linear_factor(root: &Complex64) -> ScaledPoly {
    ScaledPoly::from_coeffs(vec![-root, c(1.0)])
}

/// Zeros of a structured rational function of the plant, from the
/// polynomial numerator. For `G'/G - h` with repeated poles or zeros the
/// numerator also vanishes at those repeated points; callers filter them.
pub fn rational_zeros(plant: &Plant, target: RationalTarget) -> Result<Vec<Complex64>> {
    let fz: Vec<ScaledPoly> = plant.zeros().iter().map(linear_factor).collect();
    let fp: Vec<ScaledPoly> = plant.poles().iter().map(linear_factor).collect();
    let n = product(&fz);
    let d = product(&fp);
    let poly = match target {
        RationalTarget::LogDerivativeShift { h } => {
            let ones_z = vec![ScaledPoly::one(); fz.len()];
            let ones_p = vec![ScaledPoly::one(); fp.len()];
            let a = sum_of_leave_one_out(&ones_z, &fz).mul(&d);
            let b = sum_of_leave_one_out(&ones_p, &fp).mul(&n);
            a.sub(&b).sub(&n.mul(&d).scale(h))
        }
        RationalTarget::UnityFeedback => d.add(&n.scale(plant.gain())),
    };
    let coeffs = poly.into_coeffs();
    if coeffs.iter().all(|z| z.norm() == 0.0) {
        return Err(crate::error::Error::DegeneratePolynomial);
    }
    complex_poly_roots(&coeffs)
}
