//! Closed-form evidence for the natural-conjugate regression
//! β | σ² ~ N(0, σ²D), σ² ~ InvGamma(v0/2, s0/2), plus information criteria,
//! Savage-Dickey ratios and g-prior model averaging.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gibbs_engine::DrawStore;
use crate::sampling_kernels::linalg::{chol_inverse, chol_logdet, cholesky_jitter, cholesky_lower};
use crate::sampling_kernels::{inv_gamma, std_normal, RngStream};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const BMA_MAX_P: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateModel {
    pub d: DMatrix<f64>,
    pub v0: f64,
    pub s0: f64,
    /// Columns of the full design entering the model; `None` means all.
    pub columns: Option<Vec<usize>>,
}

impl ConjugateModel {
    pub fn new(d: DMatrix<f64>, v0: f64, s0: f64) -> Self {
        Self { d, v0, s0, columns: None }
    }

    /// D = τI.
    pub fn ridge(p: usize, tau: f64, v0: f64, s0: f64) -> Self {
        Self::new(DMatrix::from_diagonal_element(p, p, tau), v0, s0)
    }

    fn check(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.s0 > 0.0) {
            return Err(Error::ImproperPrior(
                "the marginal likelihood does not exist unless v0 > 0 and s0 > 0".into(),
            ));
        }
        if self.d.iter().any(|v| !v.is_finite()) {
            return Err(Error::ImproperPrior("prior covariance D must be finite".into()));
        }
        Ok(())
    }

    fn design(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let xr = match &self.columns {
            None => x.clone(),
            Some(cols) => {
                if let Some(c) = cols.iter().find(|c| **c >= x.ncols()) {
                    return Err(Error::Config(format!("column {c} out of range")));
                }
                x.select_columns(cols.iter())
            }
        };
        if xr.ncols() != self.d.nrows() || !self.d.is_square() {
            return Err(Error::Config(format!(
                "D is {}x{} but the model has {} columns",
                self.d.nrows(),
                self.d.ncols(),
                xr.ncols()
            )));
        }
        Ok(xr)
    }
}

/// Posterior quantities shared by the evidence calculations.
#[derive(Debug, Clone)]
pub struct ConjugatePosterior {
    /// (X'X + D⁻¹)⁻¹
    pub v: DMatrix<f64>,
    pub mu: DVector<f64>,
    /// Degrees of freedom v0 + n of the σ² marginal.
    pub dof: f64,
    /// s0 + y'y − μ'V⁻¹μ.
    pub ss: f64,
    ln_det_v: f64,
    ln_det_d: f64,
}

pub fn conjugate_posterior(model: &ConjugateModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<ConjugatePosterior> {
    model.check()?;
    let xr = model.design(x)?;
    if xr.nrows() != y.len() {
        return Err(Error::Data("x and y lengths differ".into()));
    }
    let p = xr.ncols();
    let dof = model.v0 + y.len() as f64;
    if p == 0 {
        return Ok(ConjugatePosterior {
            v: DMatrix::zeros(0, 0),
            mu: DVector::zeros(0),
            dof,
            ss: model.s0 + y.norm_squared(),
            ln_det_v: 0.0,
            ln_det_d: 0.0,
        });
    }
    let ld = cholesky_lower(&model.d).map_err(|pivot| Error::NotPositiveDefinite { pivot })?;
    let d_inv = chol_inverse(&ld);
    let prec = xr.tr_mul(&xr) + d_inv;
    let lp = cholesky_lower(&prec).map_err(|pivot| Error::NotPositiveDefinite { pivot })?;
    let v = chol_inverse(&lp);
    let xty = xr.tr_mul(y);
    let mu = &v * &xty;
    let ss = model.s0 + y.norm_squared() - mu.dot(&xty);
    Ok(ConjugatePosterior { v, mu, dof, ss, ln_det_v: -chol_logdet(&lp), ln_det_d: chol_logdet(&ld) })
}

pub fn log_marginal_conjugate(model: &ConjugateModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let post = conjugate_posterior(model, x, y)?;
    let n = y.len() as f64;
    let (a0, a) = (model.v0 / 2.0, post.dof / 2.0);
    Ok(-0.5 * n * LN_2PI + 0.5 * (post.ln_det_v - post.ln_det_d) + ln_gamma(a) - ln_gamma(a0)
        + a0 * (model.s0 / 2.0).ln()
        - a * (post.ss / 2.0).ln())
}

/// Univariate Student-t with location, squared scale and degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudentT {
    pub location: f64,
    pub scale2: f64,
    pub dof: f64,
}

impl StudentT {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let nu = self.dof;
        let z2 = (x - self.location).powi(2) / self.scale2;
        ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI * self.scale2).ln()
            - (nu + 1.0) / 2.0 * (z2 / nu).ln_1p()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

/// Exact draws from the normal-inverse-gamma posterior:
/// σ² ~ InvGamma(dof/2, ss/2), β | σ² ~ N(μ, σ²V).
pub fn sample_conjugate_posterior(post: &ConjugatePosterior, draws: usize, seed: u64) -> Result<DrawStore> {
    let p = post.mu.len();
    let l = if p > 0 { cholesky_jitter(&post.v)? } else { DMatrix::zeros(0, 0) };
    let mut rng = RngStream::new(seed, 0).rng();
    let mut beta = DMatrix::zeros(draws, p);
    let mut sigma2 = Vec::with_capacity(draws);
    for i in 0..draws {
        let s2 = inv_gamma(&mut rng, post.dof / 2.0, post.ss / 2.0);
        let z = DVector::from_fn(p, |_, _| std_normal(&mut rng));
        let b = &post.mu + &l * z * s2.sqrt();
        beta.row_mut(i).copy_from(&b.transpose());
        sigma2.push(s2);
    }
    Ok(DrawStore { beta, sigma2, gamma: None, scale_diag: None, chain: vec![0; draws], seed })
}

/// Posterior predictive of y at `x_new`.
pub fn predictive_t(
    model: &ConjugateModel,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    x_new: &DVector<f64>,
) -> Result<StudentT> {
    let post = conjugate_posterior(model, x, y)?;
    if x_new.len() != post.mu.len() {
        return Err(Error::Config("x_new has the wrong length".into()));
    }
    let quad = x_new.dot(&(&post.v * x_new));
    Ok(StudentT { location: x_new.dot(&post.mu), scale2: post.ss / post.dof * (1.0 + quad), dof: post.dof })
}

/// Gaussian log-likelihood of the regression.
pub fn log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, sigma2: f64) -> f64 {
    let n = y.len() as f64;
    let r = y - x * beta;
    -0.5 * n * (LN_2PI + sigma2.ln()) - r.norm_squared() / (2.0 * sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DicPlugin {
    /// Posterior mean of (β, σ²).
    #[default]
    Mean,
    /// Retained draw with the highest likelihood, a sample stand-in for the mode.
    Mode,
}

pub fn bic(mode_loglik: f64, p_count: usize, n_count: usize) -> f64 {
    -2.0 * mode_loglik + p_count as f64 * (n_count as f64).ln()
}

/// DIC = −4·E[log p(y|β,σ²)] + 2·log p(y|β̃,σ̃²).
pub fn dic(draws: &DrawStore, x: &DMatrix<f64>, y: &DVector<f64>, plugin: DicPlugin) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Config("DIC needs at least one draw".into()));
    }
    let ll: Vec<f64> = (0..draws.len())
        .map(|i| log_likelihood(x, y, &draws.beta.row(i).transpose(), draws.sigma2[i]))
        .collect();
    let mean_ll = ll.iter().sum::<f64>() / ll.len() as f64;
    let plug = match plugin {
        DicPlugin::Mean => log_likelihood(x, y, &draws.beta_mean(), draws.sigma2_mean()),
        DicPlugin::Mode => ll.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(-4.0 * mean_ll + 2.0 * plug)
}

pub fn info_criteria(
    draws: &DrawStore,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    mode_loglik: f64,
    p_count: usize,
    n_count: usize,
    plugin: DicPlugin,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    out.insert("bic".to_string(), bic(mode_loglik, p_count, n_count));
    out.insert("dic".to_string(), dic(draws, x, y, plugin)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceResult {
    pub log_marginal: f64,
    pub posterior_model_prob: Option<f64>,
    pub criteria: BTreeMap<String, f64>,
}

/// Savage-Dickey log Bayes factor of β_j = β★ against the unrestricted
/// model: log p(β★|y) − log p(β★), both marginal Student-t densities.
pub fn sddr(model: &ConjugateModel, x: &DMatrix<f64>, y: &DVector<f64>, j: usize, beta_star: f64) -> Result<f64> {
    let post = conjugate_posterior(model, x, y)?;
    if j >= post.mu.len() {
        return Err(Error::Config(format!("coordinate {j} out of range")));
    }
    let posterior = StudentT { location: post.mu[j], scale2: post.ss / post.dof * post.v[(j, j)], dof: post.dof };
    let prior = StudentT { location: 0.0, scale2: model.s0 / model.v0 * model.d[(j, j)], dof: model.v0 };
    Ok(posterior.ln_pdf(beta_star) - prior.ln_pdf(beta_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GRule {
    Fixed(f64),
    /// g = p_r / n
    SizeOverN,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmaModel {
    pub columns: Vec<usize>,
    pub log_marginal: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmaResult {
    /// Sorted by decreasing posterior probability.
    pub models: Vec<BmaModel>,
    pub inclusion_probs: Vec<f64>,
    pub median_model: Vec<usize>,
    pub coefficients: Vec<f64>,
}

struct Fit {
    log_marginal: f64,
    coef: Vec<f64>,
}

/// g-prior fit of one submodel on centred data. The shared flat prior on the
/// intercept and log σ² leaves the constant common to all models.
fn gprior_fit(xc: &DMatrix<f64>, yc: &DVector<f64>, yty: f64, cols: &[usize], rule: GRule) -> Fit {
    let n = yc.len() as f64;
    let pr = cols.len();
    if pr == 0 {
        return Fit { log_marginal: -0.5 * (n - 1.0) * yty.ln(), coef: Vec::new() };
    }
    let g = match rule {
        GRule::Fixed(g) => g,
        GRule::SizeOverN => pr as f64 / n,
    };
    let xr = xc.select_columns(cols.iter());
    let xtx = xr.tr_mul(&xr);
    let Ok(l) = cholesky_lower(&xtx) else {
        return Fit { log_marginal: f64::NEG_INFINITY, coef: vec![0.0; pr] };
    };
    let xty = xr.tr_mul(yc);
    let ols = crate::sampling_kernels::linalg::chol_solve(&l, &xty);
    let fitted_ss = ols.dot(&xty);
    let q = yty - fitted_ss / (1.0 + g);
    let log_marginal = 0.5 * pr as f64 * (g / (1.0 + g)).ln() - 0.5 * (n - 1.0) * q.ln();
    Fit { log_marginal, coef: ols.iter().map(|b| b / (1.0 + g)).collect() }
}

fn mask_columns(mask: u64, p: usize) -> Vec<usize> {
    (0..p).filter(|j| mask >> j & 1 == 1).collect()
}

/// Enumerate all 2^p submodels under the g-prior with a Binomial(π₀) model prior.
pub fn bma_enumerate_gprior(x: &DMatrix<f64>, y: &DVector<f64>, rule: GRule, pi0: f64) -> Result<BmaResult> {
    let (n, p) = (x.nrows(), x.ncols());
    if p > BMA_MAX_P {
        return Err(Error::Config(format!(
            "enumeration over 2^{p} models refused (limit p <= {BMA_MAX_P}); use a selection family \
             such as ssvs_nh or kuo_mallick with the fit command instead"
        )));
    }
    if !(pi0 > 0.0 && pi0 < 1.0) {
        return Err(Error::Config("model prior inclusion probability must lie in (0,1)".into()));
    }
    if let GRule::Fixed(g) = rule {
        if !(g > 0.0) {
            return Err(Error::Config("g must be positive".into()));
        }
    }
    if n < 3 {
        return Err(Error::Data("need at least 3 observations".into()));
    }
    let means = x.row_mean();
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - means[j]);
    let ym = y.mean();
    let yc = y.map(|v| v - ym);
    let yty = yc.norm_squared();
    if !(yty > 0.0) {
        return Err(Error::Data("response has zero variance".into()));
    }
    let (lp, lq) = (pi0.ln(), (1.0 - pi0).ln());
    let fits: Vec<(Vec<usize>, Fit, f64)> = (0..1u64 << p)
        .into_par_iter()
        .map(|mask| {
            let cols = mask_columns(mask, p);
            let fit = gprior_fit(&xc, &yc, yty, &cols, rule);
            let prior = cols.len() as f64 * lp + (p - cols.len()) as f64 * lq;
            (cols, fit, prior)
        })
        .collect();
    let lpost: Vec<f64> = fits.iter().map(|(_, f, pr)| f.log_marginal + pr).collect();
    let mx = lpost.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + lpost.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
    let mut pip = vec![0.0; p];
    let mut coef = vec![0.0; p];
    let mut models = Vec::with_capacity(fits.len());
    for ((cols, fit, _), lpst) in fits.into_iter().zip(lpost) {
        let prob = (lpst - lse).exp();
        for (k, &j) in cols.iter().enumerate() {
            pip[j] += prob;
            coef[j] += prob * fit.coef[k];
        }
        models.push(BmaModel { columns: cols, log_marginal: fit.log_marginal, prob });
    }
    models.sort_by(|a, b| b.prob.total_cmp(&a.prob));
    let median_model = (0..p).filter(|j| pip[*j] > 0.5).collect();
    Ok(BmaResult { models, inclusion_probs: pip, median_model, coefficients: coef })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling_kernels::{std_normal, RngStream};
    use approx::assert_relative_eq;

    fn fixture() -> (DMatrix<f64>, DVector<f64>) {
        (DMatrix::from_element(3, 1, 1.0), DVector::from_vec(vec![1.0, 0.0, -1.0]))
    }

    #[test]
    fn posterior_draws_match_moments() {
        let mut rng = RngStream::new(8, 0).rng();
        let x = DMatrix::from_fn(40, 2, |_, _| std_normal(&mut rng));
        let y = DVector::from_fn(40, |i, _| x[(i, 0)] + std_normal(&mut rng));
        let post = conjugate_posterior(&ConjugateModel::ridge(2, 5.0, 1.0, 1.0), &x, &y).unwrap();
        let d = sample_conjugate_posterior(&post, 40_000, 1).unwrap();
        let s2 = post.ss / (post.dof - 2.0);
        assert!((d.sigma2_mean() / s2 - 1.0).abs() < 0.01);
        let m = d.beta_mean();
        for j in 0..2 {
            assert!((m[j] - post.mu[j]).abs() < 4.0 * (s2 * post.v[(j, j)] / 40_000.0).sqrt());
        }
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = RngStream::new(3, 0).rng();
        let x = DMatrix::from_fn(20, 2, |_, _| std_normal(&mut rng));
        let y = DVector::from_fn(20, |_, _| std_normal(&mut rng));
        let m = ConjugateModel::ridge(2, 2.0, 1.0, 1.0);
        let a = log_marginal_conjugate(&m, &x, &y).unwrap();
        let perm: Vec<usize> = (0..20).rev().collect();
        let xp = x.select_rows(perm.iter());
        let yp = DVector::from_fn(20, |i, _| y[perm[i]]);
        assert!((a - log_marginal_conjugate(&m, &xp, &yp).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lindley_effect() {
        let (x, y) = fixture();
        let small = log_marginal_conjugate(&ConjugateModel::ridge(1, 1.0, 1.0, 1.0), &x, &y).unwrap();
        let big = log_marginal_conjugate(&ConjugateModel::ridge(1, 1e6, 1.0, 1.0), &x, &y).unwrap();
        assert!(big < small);
    }

    #[test]
    fn improper_prior_refused() {
        let (x, y) = fixture();
        let e = log_marginal_conjugate(&ConjugateModel::ridge(1, 1.0, 0.0, 1.0), &x, &y).unwrap_err();
        assert!(matches!(e, Error::ImproperPrior(_)));
    }

    #[test]
    fn predictive_at_origin() {
        let (x, y) = fixture();
        let t = predictive_t(&ConjugateModel::ridge(1, 1.0, 1.0, 1.0), &x, &y, &DVector::zeros(1)).unwrap();
        assert_eq!(t.location, 0.0);
        assert_eq!(t.dof, 4.0);
        let h = 0.01;
        let mass: f64 = (-20_000..=20_000).map(|k| t.pdf(k as f64 * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    #[test]
    fn bic_arithmetic() {
        assert_relative_eq!(bic(-150.0, 3, 100), 300.0 + 3.0 * 100f64.ln(), epsilon = 1e-12);
        assert!((bic(-150.0, 3, 100) - 313.8155).abs() < 1e-4);
    }

    #[test]
    fn dic_single_draw() {
        let (x, y) = fixture();
        let d = DrawStore {
            beta: DMatrix::from_element(1, 1, 0.2),
            sigma2: vec![0.7],
            gamma: None,
            scale_diag: None,
            chain: vec![0],
            seed: 0,
        };
        let ll = log_likelihood(&x, &y, &DVector::from_element(1, 0.2), 0.7);
        assert_relative_eq!(dic(&d, &x, &y, DicPlugin::Mean).unwrap(), -2.0 * ll, epsilon = 1e-12);
        assert_relative_eq!(dic(&d, &x, &y, DicPlugin::Mode).unwrap(), -2.0 * ll, epsilon = 1e-12);
    }

    #[test]
    fn bma_noise_prefers_null_and_sums_to_one() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![0.1, -0.1, -0.1, 0.1]);
        let r = bma_enumerate_gprior(&x, &y, GRule::SizeOverN, 0.5).unwrap();
        assert!(r.models[0].columns.is_empty());
        let s: f64 = r.models.iter().map(|m| m.prob).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bma_refuses_large_p() {
        let x = DMatrix::zeros(30, 26);
        let y = DVector::zeros(30);
        assert!(bma_enumerate_gprior(&x, &y, GRule::SizeOverN, 0.5).is_err());
    }

    #[test]
    fn sddr_grows_with_prior_variance() {
        let mut rng = RngStream::new(8, 0).rng();
        let x = DMatrix::from_fn(30, 1, |_, _| std_normal(&mut rng));
        let y = DVector::from_fn(30, |_, _| std_normal(&mut rng));
        let v: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|d| sddr(&ConjugateModel::ridge(1, *d, 2.0, 2.0), &x, &y, 0, 0.0).unwrap())
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
    }
}
