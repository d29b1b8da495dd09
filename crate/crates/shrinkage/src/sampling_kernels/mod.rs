//! Random-variate primitives shared by every sampler.

mod gig;
mod invgauss;
pub mod linalg;
mod mvn;
mod slice;

pub use gig::{sample_gig, sample_gig_counted, GigParams};
pub use invgauss::{sample_inverse_gaussian, InvGaussParams};
pub use mvn::{
    sample_mvn_bhattacharya, sample_mvn_direct, sample_mvn_rue, MvnKernel, PrecisionSystem,
};
pub use slice::{sample_truncated_gamma, slice_halfcauchy};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Floor applied to |β_j| wherever it sits in a denominator.
pub const BETA_FLOOR: f64 = 1e-10;
/// Floor applied to local variances before they are inverted.
pub const TAU2_FLOOR: f64 = 1e-12;

pub type ChainRng = ChaCha8Rng;

/// A reproducible random stream: same `(seed, stream_id)` gives the same sequence,
/// distinct stream ids select independent ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChainRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma with shape/rate parameterisation.
pub fn gamma_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0, "gamma({shape}, {rate})");
    let g = Gamma::new(shape, 1.0 / rate).expect("gamma parameters");
    g.sample(rng)
}

/// Inverse-gamma with density ∝ x^{-shape-1} exp(-scale/x).
pub fn inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    1.0 / gamma_rate(rng, shape, scale)
}

pub fn exponential_rate<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let x = gamma_rate(rng, a, 1.0);
    let y = gamma_rate(rng, b, 1.0);
    x / (x + y)
}

/// Laplace(0, scale) draw.
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let e = exponential_rate(rng, 1.0) * scale;
    if rng.random::<bool>() {
        e
    } else {
        -e
    }
}

/// Absolute value of a standard Cauchy draw.
pub fn half_cauchy<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (std::f64::consts::PI * (open_unit(rng) - 0.5)).tan().abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_reproduces() {
        let a: Vec<f64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..50).map(|_| std_normal(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..50).map(|_| std_normal(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 20_000;
        let mut r1 = RngStream::new(11, 0).rng();
        let mut r2 = RngStream::new(11, 1).rng();
        let a: Vec<f64> = (0..n).map(|_| std_normal(&mut r1)).collect();
        let b: Vec<f64> = (0..n).map(|_| std_normal(&mut r2)).collect();
        let rho = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(rho.abs() < 0.03, "rho = {rho}");
        assert_ne!(a[0], b[0]);
    }

    #[test]
    fn inv_gamma_mean() {
        let mut r = RngStream::new(1, 0).rng();
        let n = 100_000;
        let m = (0..n).map(|_| inv_gamma(&mut r, 5.0, 8.0)).sum::<f64>() / n as f64;
        // mean = scale / (shape - 1) = 2, sd = 2/sqrt(3)
        assert!((m - 2.0).abs() < 4.0 * (2.0 / 3f64.sqrt()) / (n as f64).sqrt());
    }
}
