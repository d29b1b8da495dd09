//! Bayesian quantile regression through the normal-exponential mixture of the
//! asymmetric Laplace likelihood, one independent chain per quantile level.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs_engine::DrawStore;
use crate::sampling_kernels::{
    inv_gamma, sample_inverse_gaussian, sample_mvn_rue, InvGaussParams, PrecisionSystem, RngStream,
};

pub const DEFAULT_LEVELS: [f64; 7] = [0.05, 0.10, 0.25, 0.5, 0.75, 0.90, 0.95];
const RESID_FLOOR: f64 = 1e-10;

/// (θ_r, κ²_r) of the mixture representation.
pub fn al_constants(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("quantile level {r} must lie strictly inside (0,1)")));
    }
    let w = r * (1.0 - r);
    Ok(((1.0 - 2.0 * r) / w, 2.0 / w))
}

/// Asymmetric Laplace density with scale σ²: r(1-r)/σ² exp(-ρ_r(ε)/σ²).
pub fn al_density(eps: f64, r: f64, sigma2: f64) -> f64 {
    let rho = if eps > 0.0 { r * eps } else { (r - 1.0) * eps };
    r * (1.0 - r) / sigma2 * (-rho / sigma2).exp()
}

/// Koenker-Bassett check loss.
pub fn check_loss(u: f64, r: f64) -> f64 {
    u * (r - if u < 0.0 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSpec {
    pub levels: Vec<f64>,
    /// β_r ~ N(0, τI).
    pub prior_tau: f64,
    pub n0: f64,
    pub s0: f64,
}

impl Default for QuantileSpec {
    fn default() -> Self {
        Self { levels: DEFAULT_LEVELS.to_vec(), prior_tau: 100.0, n0: 0.1, s0: 0.1 }
    }
}

impl QuantileSpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("at least one quantile level is required".into()));
        }
        for r in &self.levels {
            al_constants(*r).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("quantile levels must be strictly increasing".into()));
        }
        if !(self.prior_tau > 0.0 && self.n0 > 0.0 && self.s0 > 0.0) {
            return Err(Error::Config("prior_tau, n0 and s0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePlan {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for QuantilePlan {
    fn default() -> Self {
        Self { iterations: 4000, burn_in: 1000, thin: 1, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileLatents {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub z: DVector<f64>,
    pub theta: f64,
    pub kappa2: f64,
}

impl QuantileLatents {
    pub fn init(r: f64, n: usize, p: usize) -> Result<Self> {
        let (theta, kappa2) = al_constants(r)?;
        Ok(Self { beta: DVector::zeros(p), sigma2: 1.0, z: DVector::from_element(n, 1.0), theta, kappa2 })
    }
}

/// One sweep: β, then σ², then every z_i through its reciprocal.
pub fn quantile_gibbs_step<R: Rng + ?Sized>(
    state: &mut QuantileLatents,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &QuantileSpec,
    rng: &mut R,
) -> Result<()> {
    let (n, p) = (x.nrows(), x.ncols());
    let (theta, k2) = (state.theta, state.kappa2);
    // β: weights 1/(σ²κ²z_i) on ỹ = y - θz
    let w = DVector::from_fn(n, |i, _| 1.0 / (state.sigma2 * k2 * state.z[i]));
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
    let gram = xw.tr_mul(x);
    let y_tilde = y - &state.z * theta;
    let rhs = xw.tr_mul(&y_tilde);
    let sys = PrecisionSystem::new(gram, DVector::from_element(p, 1.0 / spec.prior_tau), rhs);
    state.beta = sample_mvn_rue(&sys, rng)?;
    // σ²
    let resid = y - x * &state.beta;
    let mut scale = spec.s0;
    for i in 0..n {
        let ys = resid[i] - theta * state.z[i];
        scale += ys * ys / (2.0 * state.z[i] * k2) + state.z[i];
    }
    state.sigma2 = inv_gamma(rng, spec.n0 + 1.5 * n as f64, scale);
    // z
    let c = theta * theta + 2.0 * k2;
    let lambda = c / (state.sigma2 * k2);
    for i in 0..n {
        let mu = c.sqrt() / resid[i].abs().max(RESID_FLOOR);
        let inv_z = sample_inverse_gaussian(InvGaussParams::new(mu, lambda)?, rng);
        state.z[i] = 1.0 / inv_z;
    }
    Ok(())
}

pub fn run_quantile_chain(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &QuantileSpec,
    plan: &QuantilePlan,
    r: f64,
    stream: u64,
) -> Result<DrawStore> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut rng = RngStream::new(plan.seed, stream).rng();
    let mut state = QuantileLatents::init(r, n, p)?;
    let mut beta = Vec::new();
    let mut sigma2 = Vec::new();
    for it in 0..plan.iterations {
        quantile_gibbs_step(&mut state, x, y, spec, &mut rng).map_err(|e| Error::Numeric {
            chain: stream as usize,
            iteration: it,
            detail: e.to_string(),
        })?;
        if !state.sigma2.is_finite() || state.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric { chain: stream as usize, iteration: it, detail: "non-finite state".into() });
        }
        if it >= plan.burn_in && (it - plan.burn_in) % plan.thin == 0 {
            beta.extend(state.beta.iter());
            sigma2.push(state.sigma2);
        }
    }
    let kept = sigma2.len();
    Ok(DrawStore {
        beta: DMatrix::from_row_slice(kept, p, &beta),
        sigma2,
        gamma: None,
        scale_diag: None,
        chain: vec![0; kept],
        seed: plan.seed,
    })
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub level: f64,
    pub draws: std::result::Result<DrawStore, String>,
}

#[derive(Debug, Clone)]
pub struct QuantileGrid {
    pub levels: Vec<LevelResult>,
    /// Share of draws in which some pair of adjacent successful levels
    /// crosses at an observed design point.
    pub crossing_rate: Option<f64>,
}

/// Every level runs its own chain on its own stream; a failing level is
/// reported without affecting the others.
pub fn run_quantile_grid(x: &DMatrix<f64>, y: &DVector<f64>, spec: &QuantileSpec, plan: &QuantilePlan) -> Result<QuantileGrid> {
    spec.validate()?;
    if plan.iterations == 0 || plan.thin == 0 || plan.burn_in >= plan.iterations {
        return Err(Error::Config("quantile plan needs 0 <= burn_in < iterations and thin > 0".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Data("x and y lengths differ".into()));
    }
    let levels: Vec<LevelResult> = spec
        .levels
        .par_iter()
        .enumerate()
        .map(|(k, &r)| LevelResult {
            level: r,
            draws: run_quantile_chain(x, y, spec, plan, r, k as u64).map_err(|e| {
                log::warn!("quantile level {r} failed: {e}");
                e.to_string()
            }),
        })
        .collect();
    let crossing_rate = crossing_rate(x, &levels);
    Ok(QuantileGrid { levels, crossing_rate })
}

fn crossing_rate(x: &DMatrix<f64>, levels: &[LevelResult]) -> Option<f64> {
    let ok: Vec<&DrawStore> = levels.iter().filter_map(|l| l.draws.as_ref().ok()).collect();
    if ok.len() < 2 {
        return None;
    }
    let t = ok.iter().map(|d| d.len()).min()?;
    if t == 0 {
        return None;
    }
    let mut crossed = 0usize;
    for i in 0..t {
        let fits: Vec<DVector<f64>> = ok.iter().map(|d| x * d.beta.row(i).transpose()).collect();
        if fits.windows(2).any(|w| w[0].iter().zip(w[1].iter()).any(|(lo, hi)| lo > hi)) {
            crossed += 1;
        }
    }
    Some(crossed as f64 / t as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling_kernels::{sample_gig, std_normal, GigParams};

    #[test]
    fn constants() {
        assert_eq!(al_constants(0.5).unwrap(), (0.0, 8.0));
        let (t, k) = al_constants(0.25).unwrap();
        assert!((t - 8.0 / 3.0).abs() < 1e-15 && (k - 32.0 / 3.0).abs() < 1e-14);
        let (a, b) = (al_constants(0.1).unwrap(), al_constants(0.9).unwrap());
        assert!((a.0 + b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        assert!(al_constants(0.0).is_err() && al_constants(1.0).is_err());
    }

    #[test]
    fn al_density_integrates_to_one() {
        let h = 1e-3;
        let mass: f64 = (-40_000..40_000).map(|k| al_density((k as f64 + 0.5) * h, 0.3, 0.5) * h).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reciprocal_ig_matches_gig() {
        // z | rest is GIG(1/2, (θ²+2κ²)/(σ²κ²), e²/(σ²κ²))
        let (theta, k2) = al_constants(0.3).unwrap();
        let (sigma2, e) = (0.7, 0.4);
        let c = theta * theta + 2.0 * k2;
        let ig = InvGaussParams::new(c.sqrt() / e, c / (sigma2 * k2)).unwrap();
        let gig = GigParams::new(0.5, c / (sigma2 * k2), e * e / (sigma2 * k2)).unwrap();
        let mut rng = RngStream::new(4, 0).rng();
        let m = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            s1 += 1.0 / sample_inverse_gaussian(ig, &mut rng);
            s2 += sample_gig(gig, &mut rng);
        }
        let (m1, m2) = (s1 / m as f64, s2 / m as f64);
        assert!((m1 - m2).abs() / m2 < 0.02, "{m1} {m2}");
    }

    #[test]
    fn median_recovers_location() {
        let mut rng = RngStream::new(10, 0).rng();
        let n = 300;
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { std_normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| 1.0 + 2.0 * x[(i, 1)] + 0.5 * std_normal(&mut rng));
        let d = run_quantile_chain(&x, &y, &QuantileSpec::default(), &QuantilePlan { iterations: 2000, burn_in: 500, thin: 1, seed: 3 }, 0.5, 0)
            .unwrap();
        let b = d.beta_mean();
        assert!((b[0] - 1.0).abs() < 0.15 && (b[1] - 2.0).abs() < 0.15, "{b}");
    }

    #[test]
    fn grid_is_ordered_and_deterministic() {
        let mut rng = RngStream::new(11, 0).rng();
        let n = 150;
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { std_normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| x[(i, 1)] + std_normal(&mut rng));
        let spec = QuantileSpec { levels: vec![0.1, 0.5, 0.9], ..Default::default() };
        let plan = QuantilePlan { iterations: 600, burn_in: 200, thin: 1, seed: 9 };
        let a = run_quantile_grid(&x, &y, &spec, &plan).unwrap();
        let b = run_quantile_grid(&x, &y, &spec, &plan).unwrap();
        let ints: Vec<f64> = a.levels.iter().map(|l| l.draws.as_ref().unwrap().beta_mean()[0]).collect();
        assert!(ints[0] < ints[1] && ints[1] < ints[2], "{ints:?}");
        assert_eq!(a.levels[1].draws.as_ref().unwrap(), b.levels[1].draws.as_ref().unwrap());
        let rate = a.crossing_rate.unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }

    #[test]
    fn rejects_unsorted_levels() {
        let spec = QuantileSpec { levels: vec![0.5, 0.1], ..Default::default() };
        assert!(spec.validate().is_err());
    }
}
