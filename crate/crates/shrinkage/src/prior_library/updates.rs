//! Conditional draws of the scale parameters given β and σ².
//!
//! `s` is σ² under conjugate scaling and 1 under independent scaling; every
//! update below sees β only through β/√s.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use super::spec::{Family, Inclusion, PriorSpec, Rate, Scaling, SsvsVariant};
use super::state::ScaleState;
use crate::error::{Error, Result};
use crate::sampling_kernels::{
    beta as beta_draw, exponential_rate, gamma_rate, inv_gamma, open_unit, sample_gig, sample_inverse_gaussian,
    slice_halfcauchy, GigParams, InvGaussParams, BETA_FLOOR, TAU2_FLOOR,
};

const TAU2_CEIL: f64 = 1.0 / TAU2_FLOOR;

#[inline]
fn clamp_var(v: f64) -> f64 {
    v.clamp(TAU2_FLOOR, TAU2_CEIL)
}

#[inline]
fn abs_floor(b: f64) -> f64 {
    b.abs().max(BETA_FLOOR)
}

/// 1/w with w ~ InverseGaussian(mu, lambda): the usual draw of a Laplace-mixture variance.
fn recip_invgauss<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> Result<f64> {
    let w = sample_inverse_gaussian(InvGaussParams::new(mu, lambda)?, rng);
    Ok(clamp_var(1.0 / w))
}

fn gig<R: Rng + ?Sized>(nu: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    Ok(sample_gig(GigParams::new(nu, a, b)?, rng))
}

pub fn scale_factor(spec: &PriorSpec, sigma2: f64) -> f64 {
    match spec.scaling {
        Scaling::Conjugate => sigma2,
        Scaling::Independent => 1.0,
    }
}

/// Log N(b; 0, v).
#[inline]
pub fn ln_normal0(b: f64, v: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + b * b / v)
}

/// One sweep over every auxiliary of the family, in place.
pub fn update_scales<R: Rng + ?Sized>(
    spec: &PriorSpec,
    state: &mut ScaleState,
    beta: &DVector<f64>,
    sigma2: f64,
    rng: &mut R,
) -> Result<()> {
    let s = scale_factor(spec, sigma2);
    let p = beta.len();
    match &spec.family {
        Family::Jeffreys => {
            for j in 0..p {
                let b = abs_floor(beta[j]);
                state.tau2[j] = clamp_var(inv_gamma(rng, 0.5, b * b / (2.0 * s)));
            }
        }
        Family::StudentT { rho, xi } => {
            for j in 0..p {
                let prec = gamma_rate(rng, rho + 0.5, xi + beta[j] * beta[j] / (2.0 * s));
                state.tau2[j] = clamp_var(1.0 / prec);
            }
        }
        Family::LassoPc { lambda2 } => {
            let l2 = state.global.lambda2;
            for j in 0..p {
                let b = abs_floor(beta[j]);
                state.tau2[j] = recip_invgauss((l2 * s).sqrt() / b, l2, rng)?;
            }
            if let Rate::Gamma { r, delta } = lambda2 {
                state.global.lambda2 = gamma_rate(rng, r + p as f64, state.tau2.sum() / 2.0 + delta);
            }
        }
        Family::FusedLasso { lambda1_2, lambda2_2 } => {
            let (l1, l2) = (state.global.lambda2, state.global.lambda2_b);
            for j in 0..p {
                let b = abs_floor(beta[j]);
                state.tau2[j] = recip_invgauss((l1 * s).sqrt() / b, l1, rng)?;
            }
            for j in 0..p.saturating_sub(1) {
                let d = abs_floor(beta[j + 1] - beta[j]);
                state.omega2[j] = recip_invgauss((l2 * s).sqrt() / d, l2, rng)?;
            }
            if let Rate::Gamma { r, delta } = lambda1_2 {
                state.global.lambda2 = gamma_rate(rng, p as f64 + r, state.tau2.sum() / 2.0 + delta);
            }
            if let Rate::Gamma { r, delta } = lambda2_2 {
                if p > 1 {
                    state.global.lambda2_b =
                        gamma_rate(rng, (p - 1) as f64 + r, state.omega2.sum() / 2.0 + delta);
                }
            }
        }
        Family::GroupLasso { groups, lambda2 } => {
            let k = state.tau2.len();
            let mut norm2 = vec![0.0; k];
            for j in 0..p {
                norm2[groups[j]] += beta[j] * beta[j];
            }
            let l2 = state.global.lambda2;
            for g in 0..k {
                let nrm = norm2[g].sqrt().max(BETA_FLOOR);
                state.tau2[g] = recip_invgauss((l2 * s).sqrt() / nrm, l2, rng)?;
            }
            if let Rate::Gamma { r, delta } = lambda2 {
                let shape = r + (p + k) as f64 / 2.0;
                state.global.lambda2 = gamma_rate(rng, shape, state.tau2.sum() / 2.0 + delta);
            }
        }
        Family::ElasticNet { lambda1_2, lambda2 } => {
            let l1 = state.global.lambda2;
            for j in 0..p {
                let b = abs_floor(beta[j]);
                state.tau2[j] = recip_invgauss((l1 * s).sqrt() / b, l1, rng)?;
            }
            if let Rate::Gamma { r, delta } = lambda1_2 {
                state.global.lambda2 = gamma_rate(rng, r + p as f64, state.tau2.sum() / 2.0 + delta);
            }
            if let Rate::Gamma { r, delta } = lambda2 {
                let ss = beta.norm_squared() / (2.0 * s);
                state.global.lambda2_b = gamma_rate(rng, r + p as f64 / 2.0, ss + delta);
            }
        }
        Family::Gdp { r, delta } => {
            let rs = s.sqrt();
            for j in 0..p {
                let b = abs_floor(beta[j]);
                let lam = gamma_rate(rng, r + 1.0, b / rs + delta);
                state.lambda_j[j] = lam;
                state.tau2[j] = recip_invgauss(lam * rs / b, lam * lam, rng)?;
            }
        }
        Family::NormalGamma { lambda, gamma2 } => {
            for j in 0..p {
                let b = abs_floor(beta[j]);
                state.tau2[j] = clamp_var(gig(lambda - 0.5, 1.0 / gamma2, b * b / s, rng)?);
            }
        }
        Family::DirichletLaplace { alpha } => update_dl(state, beta, s, *alpha, rng)?,
        Family::HorseshoeMs => {
            let t2 = state.global.tau2;
            let mut ss = 0.0;
            for j in 0..p {
                let b2 = beta[j] * beta[j];
                let l2 = clamp_var(inv_gamma(rng, 1.0, 1.0 / state.aux_j[j] + b2 / (2.0 * t2 * s)));
                state.lambda_j[j] = l2;
                state.aux_j[j] = inv_gamma(rng, 1.0, 1.0 + 1.0 / l2);
                ss += b2 / l2;
            }
            let t2 = clamp_var(inv_gamma(rng, (p as f64 + 1.0) / 2.0, 1.0 / state.global.xi + ss / (2.0 * s)));
            state.global.tau2 = t2;
            state.global.xi = inv_gamma(rng, 1.0, 1.0 + 1.0 / t2);
        }
        Family::HorseshoeSlice => {
            let t2 = state.global.tau2;
            let mut ss = 0.0;
            for j in 0..p {
                let b2 = beta[j] * beta[j];
                let eta = slice_halfcauchy(1.0 / state.lambda_j[j], b2 / (2.0 * s * t2), 1.0, rng);
                let l2 = clamp_var(1.0 / eta);
                state.lambda_j[j] = l2;
                ss += b2 / l2;
            }
            let eta = slice_halfcauchy(1.0 / t2, ss / (2.0 * s), (p as f64 + 1.0) / 2.0, rng);
            state.global.tau2 = clamp_var(1.0 / eta);
        }
        Family::Tpb { a, b } => {
            for j in 0..p {
                let bj = abs_floor(beta[j]);
                let t = clamp_var(gig(a - 0.5, 2.0 * state.lambda_j[j], bj * bj / s, rng)?);
                state.tau2[j] = t;
                state.lambda_j[j] = gamma_rate(rng, a + b, t + state.global.phi);
            }
            let phi = gamma_rate(rng, p as f64 * b + 0.5, state.lambda_j.sum() + state.global.omega);
            state.global.phi = phi;
            state.global.omega = gamma_rate(rng, 1.0, phi + 1.0);
        }
        Family::Ssvs { variant, inclusion } => update_ssvs(state, beta, s, variant, inclusion, rng)?,
        // indicators need the data; handled by the engine
        Family::KuoMallick { .. } => {}
    }
    Ok(())
}

fn update_dl<R: Rng + ?Sized>(
    state: &mut ScaleState,
    beta: &DVector<f64>,
    s: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<()> {
    let p = beta.len();
    let rs = s.sqrt();
    let babs: Vec<f64> = beta.iter().map(|b| abs_floor(*b)).collect();
    for j in 0..p {
        state.dl_t[j] = gig(alpha - 1.0, 1.0, 2.0 * babs[j] / rs, rng)?.max(f64::MIN_POSITIVE);
    }
    let total = state.dl_t.sum();
    for j in 0..p {
        state.psi[j] = (state.dl_t[j] / total).max(1e-300);
    }
    let bsum: f64 = (0..p).map(|j| babs[j] / (state.psi[j] * rs)).sum();
    let lam = gig(p as f64 * (alpha - 1.0), 1.0, 2.0 * bsum, rng)?;
    state.global.dl_lambda = lam;
    for j in 0..p {
        state.tau2[j] = recip_invgauss(lam * state.psi[j] * rs / babs[j], 1.0, rng)?;
    }
    Ok(())
}

/// Indicator sweep shared by every SSVS variant: γ_j | β_j, θ, τ in a random order.
fn draw_indicators<R: Rng + ?Sized>(state: &mut ScaleState, beta: &DVector<f64>, s: f64, rng: &mut R) {
    let p = beta.len();
    let theta = state.global.theta;
    let prior_logit = theta.ln() - (1.0 - theta).ln();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    for j in order {
        let b = beta[j];
        let lo = prior_logit + ln_normal0(b, s * state.tau2[j]) - ln_normal0(b, s * state.tau0_2[j]);
        state.gamma[j] = open_unit(rng) < logistic(lo);
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn update_ssvs<R: Rng + ?Sized>(
    state: &mut ScaleState,
    beta: &DVector<f64>,
    s: f64,
    variant: &SsvsVariant,
    inclusion: &Inclusion,
    rng: &mut R,
) -> Result<()> {
    let p = beta.len();
    draw_indicators(state, beta, s, rng);
    if let Inclusion::Beta { c, d } = inclusion {
        let k = state.gamma.iter().filter(|g| **g).count() as f64;
        state.global.theta = beta_draw(rng, c + k, d + p as f64 - k);
    }
    match variant {
        SsvsVariant::Fixed { .. } => {}
        SsvsVariant::NarisettyHe => {
            return Err(Error::Config("ssvs_nh must be resolved against the data before sampling".into()))
        }
        SsvsVariant::Lasso1 { c1, lambda1 } => {
            let l2 = state.global.lambda2;
            let mut incl_sum = 0.0;
            let mut k = 0usize;
            for j in 0..p {
                if state.gamma[j] {
                    let b = abs_floor(beta[j]);
                    state.tau2[j] = recip_invgauss((l2 * s).sqrt() / b, l2, rng)?;
                    incl_sum += state.tau2[j];
                    k += 1;
                }
            }
            if let Rate::Gamma { r, delta } = lambda1 {
                state.global.lambda2 = gamma_rate(rng, k as f64 + r, incl_sum / 2.0 + delta);
            }
            let l2 = state.global.lambda2;
            for j in 0..p {
                if !state.gamma[j] {
                    state.tau2[j] = clamp_var(exponential_rate(rng, l2 / 2.0));
                }
                state.tau0_2[j] = *c1;
            }
        }
        SsvsVariant::Lasso2 { c2, lambda1 } => {
            let l2 = state.global.lambda2;
            for j in 0..p {
                let b = abs_floor(beta[j]);
                let k = if state.gamma[j] { 1.0 } else { *c2 };
                state.tau2[j] = recip_invgauss((l2 * s * k).sqrt() / b, l2, rng)?;
            }
            if let Rate::Gamma { r, delta } = lambda1 {
                state.global.lambda2 = gamma_rate(rng, p as f64 + r, state.tau2.sum() / 2.0 + delta);
            }
            for j in 0..p {
                state.tau0_2[j] = clamp_var(c2 * state.tau2[j]);
            }
        }
        SsvsVariant::Lasso3 { lambda0, lambda1 } => {
            let (l0, l1) = (lambda0 * lambda0, lambda1 * lambda1);
            for j in 0..p {
                let b = abs_floor(beta[j]);
                if state.gamma[j] {
                    state.tau2[j] = recip_invgauss((l1 * s).sqrt() / b, l1, rng)?;
                    state.tau0_2[j] = clamp_var(exponential_rate(rng, l0 / 2.0));
                } else {
                    state.tau0_2[j] = recip_invgauss((l0 * s).sqrt() / b, l0, rng)?;
                    state.tau2[j] = clamp_var(exponential_rate(rng, l1 / 2.0));
                }
            }
        }
    }
    Ok(())
}
