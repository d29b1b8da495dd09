use rand::Rng;

use super::{open_unit, std_normal};
use crate::error::{Error, Result};

/// Inverse Gaussian with mean `mu` and shape `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGaussParams {
    pub mu: f64,
    pub lambda: f64,
}

impl InvGaussParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "inverse Gaussian needs finite positive parameters, got mu={mu}, lambda={lambda}"
            )));
        }
        Ok(Self { mu, lambda })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let (mu, l) = (self.mu, self.lambda);
        0.5 * (l / (2.0 * std::f64::consts::PI * x.powi(3))).ln() - l * (x - mu).powi(2) / (2.0 * mu * mu * x)
    }
}

/// Michael, Schucany & Haas (1976) transformation sampler.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(params: InvGaussParams, rng: &mut R) -> f64 {
    let InvGaussParams { mu, lambda } = params;
    let nu = std_normal(rng);
    let t = mu * nu * nu / (2.0 * lambda);
    // smaller root of the quadratic, written without cancellation:
    // mu (1 + t - sqrt(t^2 + 2t)) = mu / (1 + t + sqrt(t^2 + 2t))
    let x = mu / (1.0 + t + t.sqrt() * (t + 2.0).sqrt());
    if open_unit(rng) <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}
