//! Generalised inverse Gaussian, density ∝ x^{ν-1} exp(-(a x + b/x)/2), x > 0.
//!
//! Hörmann & Leydold (2014): the two-parameter form x^{λ-1} exp(-ω(x+1/x)/2)
//! is sampled by ratio-of-uniforms (with or without mode shift) or, for small
//! ω and λ < 1, by a three-piece rejection hat. Negative orders use the
//! reciprocal symmetry GIG(ν, a, b) = 1/GIG(-ν, b, a).

use rand::Rng;

use super::{gamma_rate, open_unit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub nu: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    pub fn new(nu: f64, a: f64, b: f64) -> Result<Self> {
        let bad = !nu.is_finite()
            || !a.is_finite()
            || !b.is_finite()
            || a < 0.0
            || b < 0.0
            || (a == 0.0 && b == 0.0)
            || (a == 0.0 && nu >= 0.0)
            || (b == 0.0 && nu <= 0.0);
        if bad {
            return Err(Error::Domain(format!("invalid GIG parameters nu={nu}, a={a}, b={b}")));
        }
        Ok(Self { nu, a, b })
    }

    /// Unnormalised log density.
    pub fn ln_kernel(&self, x: f64) -> f64 {
        (self.nu - 1.0) * x.ln() - 0.5 * (self.a * x + self.b / x)
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: GigParams, rng: &mut R) -> f64 {
    sample_gig_counted(params, rng).0
}

/// Draw plus the number of proposals the rejection step consumed.
pub fn sample_gig_counted<R: Rng + ?Sized>(params: GigParams, rng: &mut R) -> (f64, u32) {
    let GigParams { nu, a, b } = params;
    if b == 0.0 {
        return (gamma_rate(rng, nu, a / 2.0), 1);
    }
    if a == 0.0 {
        return (1.0 / gamma_rate(rng, -nu, b / 2.0), 1);
    }
    let lambda = nu.abs();
    let omega = (a * b).sqrt();
    let alpha = (b / a).sqrt();
    let (y, tries) = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    };
    let x = if nu < 0.0 { alpha / y } else { alpha * y };
    (x, tries)
}

fn mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

#[inline]
fn half_log_kernel(lambda: f64, omega: f64, x: f64) -> f64 {
    0.5 * (lambda - 1.0) * x.ln() - 0.25 * omega * (x + 1.0 / x)
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> (f64, u32) {
    let xm = mode(lambda, omega);
    let nc = half_log_kernel(lambda, omega, xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - 0.25 * omega * (ym + 1.0 / ym) - nc).exp();
    let mut tries = 0;
    loop {
        tries += 1;
        let u = um * open_unit(rng);
        let v = open_unit(rng);
        let x = u / v;
        if v.ln() <= half_log_kernel(lambda, omega, x) - nc {
            return (x, tries);
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> (f64, u32) {
    let xm = mode(lambda, omega);
    let nc = half_log_kernel(lambda, omega, xm);
    // extremes of (x - xm) sqrt(f(x)) solve x^3 + a x^2 + b x + c = 0
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-p.powi(3) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (half_log_kernel(lambda, omega, y1) - nc).exp();
    let uminus = (y2 - xm) * (half_log_kernel(lambda, omega, y2) - nc).exp();
    let mut tries = 0;
    loop {
        tries += 1;
        let u = uminus + open_unit(rng) * (uplus - uminus);
        let v = open_unit(rng);
        let x = u / v + xm;
        if x <= 0.0 {
            continue;
        }
        if v.ln() <= half_log_kernel(lambda, omega, x) - nc {
            return (x, tries);
        }
    }
}

/// Three-piece hat (constant, power, exponential) for 0 ≤ λ < 1 and small ω.
fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> (f64, u32) {
    let xm = mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2) = if x0 >= 2.0 / omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        let k2 = (2.0 / omega).powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0f64).exp() / omega)
    };
    let total = a0 + a1 + a2;
    let tail_start = x0.max(2.0 / omega);
    let mut tries = 0;
    loop {
        tries += 1;
        let mut v = total * open_unit(rng);
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = x0 * (v / k1).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let x = -2.0 / omega * ((-omega / 2.0 * tail_start).exp() - omega / (2.0 * k2) * v).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let u = open_unit(rng) * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return (x, tries);
        }
    }
}
