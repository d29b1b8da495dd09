use statrs::distribution::{Binomial, DiscreteCDF};

use super::spec::{Family, Inclusion, PriorSpec, SsvsVariant};
use super::updates::{ln_normal0, logistic};

/// Posterior inclusion weight of one coordinate, computed on the log-odds scale.
pub fn inclusion_weight(beta: f64, s: f64, tau0_2: f64, tau1_2: f64, theta: f64) -> f64 {
    let lo = theta.ln() - (1.0 - theta).ln() + ln_normal0(beta, s * tau1_2) - ln_normal0(beta, s * tau0_2);
    logistic(lo)
}

/// Value of |β| at which the spike and slab densities cross.
pub fn chipman_threshold(tau0_2: f64, tau1_2: f64) -> f64 {
    ((tau1_2 / tau0_2).ln() / (1.0 / tau0_2 - 1.0 / tau1_2)).sqrt()
}

/// Narisetty-He variances and inclusion probability for n observations, p
/// coefficients and a noise-variance guess σ̂².
pub fn narisetty_he(n: usize, p: usize, sigma_hat2: f64) -> (f64, f64, f64) {
    let (nf, pf) = (n as f64, p as f64);
    let tau0_2 = sigma_hat2 / (10.0 * nf);
    let tau1_2 = sigma_hat2 * (pf.powf(2.1) / (100.0 * nf)).max(nf.ln());
    let k = 10f64.max(nf.ln());
    (tau0_2, tau1_2, nh_theta(p, k))
}

/// θ with P(Bin(p, θ) > k) = 0.1. When p ≤ k the event is impossible and θ = 1/2.
fn nh_theta(p: usize, k: f64) -> f64 {
    let kf = k.floor() as u64;
    if (p as u64) <= kf {
        log::warn!("ssvs_nh: p={p} does not exceed K={k:.2}; using theta = 0.5");
        return 0.5;
    }
    let tail = |t: f64| 1.0 - Binomial::new(t, p as u64).expect("binomial").cdf(kf);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) < 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Replace `ssvs_nh` by the equivalent fixed spike/slab prior for this data size.
/// Other specs are returned unchanged.
pub fn resolve_narisetty_he(spec: &PriorSpec, n: usize, p: usize, sigma_hat2: f64) -> PriorSpec {
    let mut out = spec.clone();
    if let Family::Ssvs { variant: SsvsVariant::NarisettyHe, .. } = &spec.family {
        let (tau0_2, tau1_2, theta) = narisetty_he(n, p, sigma_hat2);
        out.family = Family::Ssvs {
            variant: SsvsVariant::Fixed { tau0_2, tau1_2 },
            inclusion: Inclusion::Fixed(theta),
        };
    }
    out
}
