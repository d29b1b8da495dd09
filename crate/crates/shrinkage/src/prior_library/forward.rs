//! Exact draws from the joint prior of (β, σ², scales), used by the
//! joint-distribution test of the samplers.

use nalgebra::DVector;
use rand::Rng;

use super::spec::{Family, Inclusion, PriorSpec, Rate, SsvsVariant};
use super::state::ScaleState;
use super::updates::{scale_factor, update_scales};
use crate::error::{Error, Result};
use crate::sampling_kernels::{
    beta as beta_draw, exponential_rate, gamma_rate, half_cauchy, inv_gamma, laplace, open_unit, std_normal,
};

#[derive(Debug, Clone)]
pub struct PriorDraw {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub state: ScaleState,
}

fn fixed(rate: &Rate, what: &str) -> Result<f64> {
    match rate {
        Rate::Fixed(v) => Ok(*v),
        Rate::Gamma { .. } => Err(Error::Config(format!(
            "{what}: forward simulation needs a fixed rate (the Gamma hyperprior is not a proper joint)"
        ))),
    }
}

/// Rejection from ∝ exp(-l1 Σ|b_j| - penalty(b)) with a Laplace(l1) proposal.
fn laplace_tilted<R: Rng + ?Sized, F: Fn(&[f64]) -> f64>(p: usize, l1: f64, penalty: F, rng: &mut R) -> Vec<f64> {
    loop {
        let b: Vec<f64> = (0..p).map(|_| laplace(rng, 1.0 / l1)).collect();
        if open_unit(rng).ln() <= -penalty(&b) {
            return b;
        }
    }
}

pub fn draw_prior<R: Rng + ?Sized>(spec: &PriorSpec, p: usize, rng: &mut R) -> Result<PriorDraw> {
    if matches!(spec.family, Family::Jeffreys) {
        return Err(Error::ImproperPrior("forward simulation undefined".into()));
    }
    if !spec.sigma.is_proper() {
        return Err(Error::ImproperPrior(
            "forward simulation undefined without a proper sigma prior (a0, b0 > 0)".into(),
        ));
    }
    let sigma2 = inv_gamma(rng, spec.sigma.a0, spec.sigma.b0);
    let s = scale_factor(spec, sigma2);
    let mut st = ScaleState::init(spec, p);
    let mut normal_beta = true;
    let mut beta = DVector::zeros(p);
    match &spec.family {
        Family::Jeffreys => unreachable!(),
        Family::StudentT { rho, xi } => {
            for j in 0..p {
                st.tau2[j] = 1.0 / gamma_rate(rng, *rho, *xi);
            }
        }
        Family::LassoPc { lambda2 } | Family::GroupLasso { lambda2, .. } => {
            let l2 = match lambda2 {
                Rate::Fixed(v) => *v,
                Rate::Gamma { r, delta } => gamma_rate(rng, *r, *delta),
            };
            st.global.lambda2 = l2;
            if let Family::GroupLasso { groups, .. } = &spec.family {
                for k in 0..st.tau2.len() {
                    let m = groups.iter().filter(|g| **g == k).count() as f64;
                    st.tau2[k] = gamma_rate(rng, (m + 1.0) / 2.0, l2 / 2.0);
                }
            } else {
                for j in 0..p {
                    st.tau2[j] = exponential_rate(rng, l2 / 2.0);
                }
            }
        }
        Family::FusedLasso { lambda1_2, lambda2_2 } => {
            let l1 = fixed(lambda1_2, "fused_lasso")?;
            let l2 = fixed(lambda2_2, "fused_lasso")?;
            let (r1, r2) = (l1.sqrt(), l2.sqrt());
            let b = laplace_tilted(p, r1, |b| r2 * b.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>(), rng);
            beta = DVector::from_vec(b) * s.sqrt();
            normal_beta = false;
        }
        Family::ElasticNet { lambda1_2, lambda2 } => {
            let l1 = fixed(lambda1_2, "elastic_net")?;
            let l2 = fixed(lambda2, "elastic_net")?;
            let b = laplace_tilted(p, l1.sqrt(), |b| 0.5 * l2 * b.iter().map(|v| v * v).sum::<f64>(), rng);
            beta = DVector::from_vec(b) * s.sqrt();
            normal_beta = false;
        }
        Family::Gdp { r, delta } => {
            for j in 0..p {
                let lam = gamma_rate(rng, *r, *delta);
                st.lambda_j[j] = lam;
                st.tau2[j] = exponential_rate(rng, lam * lam / 2.0);
            }
        }
        Family::NormalGamma { lambda, gamma2 } => {
            for j in 0..p {
                st.tau2[j] = gamma_rate(rng, *lambda, 1.0 / (2.0 * gamma2));
            }
        }
        Family::DirichletLaplace { alpha } => {
            for j in 0..p {
                st.dl_t[j] = gamma_rate(rng, *alpha, 1.0).max(f64::MIN_POSITIVE);
                st.tau2[j] = exponential_rate(rng, 0.5);
            }
            let total = st.dl_t.sum();
            st.psi = st.dl_t.map(|t| (t / total).max(1e-300));
            st.global.dl_lambda = gamma_rate(rng, p as f64 * alpha, 0.5);
        }
        Family::HorseshoeMs => {
            st.global.xi = inv_gamma(rng, 0.5, 1.0);
            st.global.tau2 = inv_gamma(rng, 0.5, 1.0 / st.global.xi);
            for j in 0..p {
                st.aux_j[j] = inv_gamma(rng, 0.5, 1.0);
                st.lambda_j[j] = inv_gamma(rng, 0.5, 1.0 / st.aux_j[j]);
            }
        }
        Family::HorseshoeSlice => {
            st.global.tau2 = half_cauchy(rng).powi(2);
            for j in 0..p {
                st.lambda_j[j] = half_cauchy(rng).powi(2);
            }
        }
        Family::Tpb { a, b } => {
            st.global.omega = gamma_rate(rng, 0.5, 1.0);
            st.global.phi = gamma_rate(rng, 0.5, st.global.omega);
            for j in 0..p {
                st.lambda_j[j] = gamma_rate(rng, *b, st.global.phi);
                st.tau2[j] = gamma_rate(rng, *a, st.lambda_j[j]);
            }
        }
        Family::Ssvs { variant, inclusion } => {
            st.global.theta = match inclusion {
                Inclusion::Fixed(t) => *t,
                Inclusion::Beta { c, d } => beta_draw(rng, *c, *d),
            };
            for j in 0..p {
                st.gamma[j] = open_unit(rng) < st.global.theta;
            }
            match variant {
                SsvsVariant::Fixed { .. } => {}
                SsvsVariant::NarisettyHe => {
                    return Err(Error::Config("ssvs_nh must be resolved before forward simulation".into()))
                }
                SsvsVariant::Lasso1 { c1, lambda1 } | SsvsVariant::Lasso2 { c2: c1, lambda1 } => {
                    let l2 = match lambda1 {
                        Rate::Fixed(v) => *v,
                        Rate::Gamma { r, delta } => gamma_rate(rng, *r, *delta),
                    };
                    st.global.lambda2 = l2;
                    let relative = matches!(variant, SsvsVariant::Lasso2 { .. });
                    for j in 0..p {
                        st.tau2[j] = exponential_rate(rng, l2 / 2.0);
                        st.tau0_2[j] = if relative { c1 * st.tau2[j] } else { *c1 };
                    }
                }
                SsvsVariant::Lasso3 { lambda0, lambda1 } => {
                    for j in 0..p {
                        st.tau0_2[j] = exponential_rate(rng, lambda0 * lambda0 / 2.0);
                        st.tau2[j] = exponential_rate(rng, lambda1 * lambda1 / 2.0);
                    }
                }
            }
        }
        Family::KuoMallick { pj, .. } => {
            for j in 0..p {
                st.gamma[j] = open_unit(rng) < *pj;
            }
        }
    }
    if normal_beta {
        let d = st.prior_variance(spec);
        let s = if matches!(spec.family, Family::KuoMallick { .. }) { 1.0 } else { s };
        for j in 0..p {
            beta[j] = (s * d[j]).sqrt() * std_normal(rng);
        }
    } else {
        // scales given β are exactly their Gibbs conditionals
        update_scales(spec, &mut st, &beta, sigma2, rng)?;
    }
    Ok(PriorDraw { beta, sigma2, state: st })
}
