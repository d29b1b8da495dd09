//! Mean-field variational Bayes for the Kuo-Mallick regression
//! y = XΓβ + ε with q(β, σ², γ) = q(β) q(σ²) Π q(γ_j).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::gibbs_engine::Problem;
use crate::prior_library::logistic;
use crate::sampling_kernels::linalg::{chol_inverse, chol_logdet, cholesky_jitter};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct VbHyper {
    /// Diagonal of the prior covariance D of β.
    pub d: DVector<f64>,
    pub pi0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl VbHyper {
    pub fn new(p: usize) -> Self {
        Self { d: DVector::from_element(p, 10.0), pi0: 0.5, a0: 0.01, b0: 0.01 }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.d.len() != p || self.d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("variational prior variances must be positive, one per column".into()));
        }
        if !(self.pi0 > 0.0 && self.pi0 < 1.0) {
            return Err(Error::Config("pi0 must lie in (0,1)".into()));
        }
        if !(self.a0 > 0.0 && self.b0 > 0.0) {
            return Err(Error::ImproperPrior("the ELBO needs a0, b0 > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VbState {
    #[serde(skip)]
    pub mu: DVector<f64>,
    #[serde(skip)]
    pub v: DMatrix<f64>,
    /// E[1/σ²] = a/b.
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    #[serde(skip)]
    pub pi: DVector<f64>,
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
}

impl VbState {
    /// π = π₀, κ = 1/var(y), μ = 0, V = D.
    pub fn init(prob: &Problem, hyper: &VbHyper) -> Self {
        let p = prob.p();
        let n = prob.n() as f64;
        let m = prob.y.mean();
        let var_y = prob.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let kappa = if var_y > 0.0 { 1.0 / var_y } else { 1.0 };
        let a = hyper.a0 + n / 2.0;
        Self {
            mu: DVector::zeros(p),
            v: DMatrix::from_diagonal(&hyper.d),
            kappa,
            a,
            b: a / kappa,
            pi: DVector::from_element(p, hyper.pi0),
            elbo_trace: Vec::new(),
            converged: false,
        }
    }
}

/// X'X ⊙ Ω with Ω = ππ' + diag(π(1-π)).
fn weighted_gram(xtx: &DMatrix<f64>, pi: &DVector<f64>) -> DMatrix<f64> {
    let p = pi.len();
    DMatrix::from_fn(p, p, |i, j| if i == j { xtx[(i, i)] * pi[i] } else { xtx[(i, j)] * pi[i] * pi[j] })
}

/// E_q ||y - XΓβ||².
fn expected_sse(prob: &Problem, st: &VbState) -> f64 {
    let g = weighted_gram(&prob.xtx, &st.pi);
    let second = &st.mu * st.mu.transpose() + &st.v;
    let tr = g.component_mul(&second).sum();
    let cross = prob.xty.component_mul(&st.pi).dot(&st.mu);
    prob.yty - 2.0 * cross + tr
}

pub fn compute_elbo(prob: &Problem, st: &VbState, hyper: &VbHyper) -> f64 {
    let n = prob.n() as f64;
    let p = prob.p() as f64;
    let e_log_s2 = st.b.ln() - digamma(st.a);
    let lik = -0.5 * n * LN_2PI - 0.5 * n * e_log_s2 - 0.5 * st.kappa * expected_sse(prob, st);
    let e_bb = DVector::from_fn(prob.p(), |j, _| st.mu[j] * st.mu[j] + st.v[(j, j)]);
    let prior_beta = -0.5 * p * LN_2PI - 0.5 * hyper.d.iter().map(|d| d.ln()).sum::<f64>()
        - 0.5 * e_bb.iter().zip(hyper.d.iter()).map(|(e, d)| e / d).sum::<f64>();
    let prior_s2 = hyper.a0 * hyper.b0.ln() - ln_gamma(hyper.a0) - (hyper.a0 + 1.0) * e_log_s2 - hyper.b0 * st.kappa;
    let (lp, lq) = (hyper.pi0.ln(), (1.0 - hyper.pi0).ln());
    let mut gamma_terms = 0.0;
    for &pj in st.pi.iter() {
        gamma_terms += pj * lp + (1.0 - pj) * lq;
        if pj > 0.0 {
            gamma_terms -= pj * pj.ln();
        }
        if pj < 1.0 {
            gamma_terms -= (1.0 - pj) * (1.0 - pj).ln();
        }
    }
    let ent_beta = match cholesky_jitter(&st.v) {
        Ok(l) => 0.5 * p * (1.0 + LN_2PI) + 0.5 * chol_logdet(&l),
        Err(_) => f64::NEG_INFINITY,
    };
    let ent_s2 = st.a + st.b.ln() + ln_gamma(st.a) - (1.0 + st.a) * digamma(st.a);
    lik + prior_beta + prior_s2 + gamma_terms + ent_beta + ent_s2
}

/// One pass of the three updates (β, then σ², then each γ_j in index order);
/// appends the ELBO.
pub fn cavi_sweep(prob: &Problem, st: &mut VbState, hyper: &VbHyper) -> Result<()> {
    let p = prob.p();
    // q(β)
    let mut q = weighted_gram(&prob.xtx, &st.pi) * st.kappa;
    for j in 0..p {
        q[(j, j)] += 1.0 / hyper.d[j];
    }
    let l = cholesky_jitter(&q)?;
    st.v = chol_inverse(&l);
    st.mu = &st.v * prob.xty.component_mul(&st.pi) * st.kappa;
    // q(σ²)
    st.a = hyper.a0 + prob.n() as f64 / 2.0;
    st.b = hyper.b0 + 0.5 * expected_sse(prob, st).max(0.0);
    st.kappa = st.a / st.b;
    // q(γ_j)
    let prior_logit = hyper.pi0.ln() - (1.0 - hyper.pi0).ln();
    for j in 0..p {
        let mut cross = 0.0;
        for k in 0..p {
            if k != j {
                cross += prob.xtx[(j, k)] * st.pi[k] * (st.mu[k] * st.mu[j] + st.v[(k, j)]);
            }
        }
        let eta = prior_logit - 0.5 * st.kappa * (st.mu[j] * st.mu[j] + st.v[(j, j)]) * prob.xtx[(j, j)]
            + st.kappa * (st.mu[j] * prob.xty[j] - cross);
        st.pi[j] = logistic(eta);
    }
    st.elbo_trace.push(compute_elbo(prob, st, hyper));
    Ok(())
}

/// Iterate until the relative ELBO change drops below `tol`.
pub fn run_cavi(prob: &Problem, hyper: &VbHyper, tol: f64, max_iters: usize) -> Result<VbState> {
    if !(tol > 0.0) {
        return Err(Error::Config("tol must be positive".into()));
    }
    hyper.validate(prob.p())?;
    let mut st = VbState::init(prob, hyper);
    for _ in 0..max_iters {
        cavi_sweep(prob, &mut st, hyper)?;
        let t = &st.elbo_trace;
        if t.len() >= 2 {
            let (prev, cur) = (t[t.len() - 2], t[t.len() - 1]);
            if ((cur - prev) / cur.abs().max(1e-300)).abs() < tol {
                st.converged = true;
                break;
            }
        }
    }
    if !st.converged && max_iters > 0 {
        log::warn!("CAVI did not converge in {max_iters} iterations");
    }
    Ok(st)
}
