//! Slice step for half-Cauchy scales written on the precision scale η = 1/λ².

use rand::Rng;
use statrs::function::gamma::gamma_lr;

use super::{gamma_rate, open_unit};

/// One slice transition for the density ∝ η^{shape-1} e^{-μη} / (1+η):
/// u | η ~ U(0, 1/(1+η)), then η | u from the truncated gamma on (0, (1-u)/u).
pub fn slice_halfcauchy<R: Rng + ?Sized>(current: f64, mu: f64, shape: f64, rng: &mut R) -> f64 {
    debug_assert!(current > 0.0 && mu >= 0.0 && shape > 0.0);
    let u = open_unit(rng) / (1.0 + current);
    let upper = (1.0 - u) / u;
    sample_truncated_gamma(shape, mu, upper, rng)
}

/// Draw from ∝ x^{shape-1} e^{-rate·x} on (0, upper).
pub fn sample_truncated_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, upper: f64, rng: &mut R) -> f64 {
    let c = rate * upper;
    let t = if c <= 0.0 {
        // power law on (0, 1)
        open_unit(rng).powf(1.0 / shape)
    } else if shape == 1.0 {
        // truncated exponential by inversion
        -(open_unit(rng) * (-c).exp_m1()).ln_1p() / c
    } else if c >= shape {
        // at least about half the mass lies below the cut
        loop {
            let t = gamma_rate(rng, shape, c);
            if t < 1.0 {
                break t;
            }
        }
    } else {
        let mass = gamma_lr(shape, c);
        if mass > 1e-200 {
            invert_lower_gamma(shape, c, open_unit(rng) * mass)
        } else {
            // deep left tail: c << shape, so Beta(shape - c, 1) is a tight envelope
            loop {
                let t = open_unit(rng).powf(1.0 / (shape - c));
                if open_unit(rng).ln() <= c * (t.ln() + 1.0 - t) {
                    break t;
                }
            }
        }
    };
    (t * upper).max(f64::MIN_POSITIVE)
}

/// Solve P(shape, c·t) = target for t ∈ (0, 1) by bisection on a log grid.
fn invert_lower_gamma(shape: f64, c: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, c * mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling_kernels::RngStream;

    #[test]
    fn step_respects_slice_bound() {
        let mut rng = RngStream::new(1, 0).rng();
        let mut eta = 0.7;
        for _ in 0..1000 {
            eta = slice_halfcauchy(eta, 0.0, 1.0, &mut rng);
            assert!(eta > 0.0 && eta.is_finite());
        }
    }

    #[test]
    fn truncated_gamma_mean() {
        // shape 3, rate 2 on (0, 1): mean by quadrature
        let (s, r, ub) = (3.0, 2.0, 1.0);
        let grid = 20_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..grid {
            let x = (i as f64 + 0.5) / grid as f64 * ub;
            let f = x.powf(s - 1.0) * (-r * x).exp();
            num += x * f;
            den += f;
        }
        let target = num / den;
        let mut rng = RngStream::new(2, 0).rng();
        let n = 100_000;
        let m = (0..n).map(|_| sample_truncated_gamma(s, r, ub, &mut rng)).sum::<f64>() / n as f64;
        assert!((m - target).abs() < 0.005, "{m} vs {target}");
        // branch with c < shape via inversion and deep tail
        let m2 = (0..20_000).map(|_| sample_truncated_gamma(50.0, 1.0, 1.0, &mut rng)).sum::<f64>() / 20_000.0;
        // density ∝ x^49 e^{-x} on (0,1): mean ≈ 50/51 shifted slightly down
        assert!(m2 > 0.95 && m2 < 0.985, "{m2}");
    }
}
