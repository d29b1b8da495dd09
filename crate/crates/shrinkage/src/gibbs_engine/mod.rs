//! Gibbs samplers built from the (β, σ²) scaffolds and the prior updates.

mod chains;
mod geweke;
mod steps;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use chains::{run_chain, run_chains, DrawStore};
pub use geweke::{geweke_joint_test, geweke_spec, GewekeOptions, GewekeReport};
pub use steps::{step_beta_sigma, step_kuo_mallick_indicators, step_scalable, step_skinny, StepOptions};

use crate::cli_io::Dataset;
use crate::error::{Error, Result};
use crate::prior_library::{resolve_narisetty_he, Family, PriorSpec, ScaleState, Scaling, SsvsVariant};
use crate::sampling_kernels::MvnKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    ThreeBlock,
    Scalable,
    Skinny,
}

impl std::str::FromStr for BlockMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "three_block" => Ok(BlockMode::ThreeBlock),
            "scalable" => Ok(BlockMode::Scalable),
            "skinny" => Ok(BlockMode::Skinny),
            other => Err(format!("unknown block mode '{other}' (three_block, scalable, skinny)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerPlan {
    pub prior: PriorSpec,
    pub mvn_kernel: MvnKernel,
    pub block_mode: BlockMode,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    /// Keep the per-draw diag(D); off in the simulation studies to save memory.
    pub store_scales: bool,
}

impl SamplerPlan {
    pub fn new(prior: PriorSpec) -> Self {
        Self {
            prior,
            mvn_kernel: MvnKernel::Auto,
            block_mode: BlockMode::ThreeBlock,
            iterations: 5000,
            burn_in: 1000,
            thin: 1,
            chains: 2,
            seed: 1,
            store_scales: true,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        self.prior.validate(p)?;
        if self.iterations == 0 || self.thin == 0 || self.chains == 0 {
            return Err(Error::Config("iterations, thin and chains must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ≥ iterations ({} ≥ {})",
                self.burn_in, self.iterations
            )));
        }
        match self.block_mode {
            BlockMode::Scalable if self.prior.scaling != Scaling::Conjugate => Err(Error::Config(
                "scalable block requires conjugate scaling".into(),
            )),
            BlockMode::Scalable if matches!(self.prior.family, Family::KuoMallick { .. }) => {
                Err(Error::Config("scalable block is not available for kuo_mallick".into()))
            }
            BlockMode::Skinny => match &self.prior.family {
                Family::Ssvs { variant: SsvsVariant::Fixed { .. } | SsvsVariant::NarisettyHe, .. } => Ok(()),
                _ => Err(Error::Config("skinny Gibbs needs ssvs_fixed or ssvs_nh".into())),
            },
            _ => Ok(()),
        }
    }

    /// Retained rows per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Sufficient statistics of the data reused every sweep.
#[derive(Debug, Clone)]
pub struct Problem {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub col_sq: DVector<f64>,
}

impl Problem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        let xtx = x.tr_mul(&x);
        let xty = x.tr_mul(&y);
        let yty = y.norm_squared();
        let col_sq = xtx.diagonal();
        Self { x, y, xtx, xty, yty, col_sq }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Self::new(ds.x.clone(), ds.y.clone())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Swap in a new response, keeping the design statistics.
    pub fn set_y(&mut self, y: DVector<f64>) {
        self.xty = self.x.tr_mul(&y);
        self.yty = y.norm_squared();
        self.y = y;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub scales: ScaleState,
}

impl LatentState {
    /// β = 0, σ² = var(y), scales at their initial values, γ = 1.
    pub fn init(spec: &PriorSpec, p: usize, var_y: f64) -> Self {
        Self {
            beta: DVector::zeros(p),
            sigma2: if var_y > 0.0 { var_y } else { 1.0 },
            scales: ScaleState::init(spec, p),
        }
    }

    /// Regression coefficients entering the likelihood (γ∘β for Kuo-Mallick).
    pub fn coefficients(&self, spec: &PriorSpec) -> DVector<f64> {
        if matches!(spec.family, Family::KuoMallick { .. }) {
            DVector::from_fn(self.beta.len(), |j, _| if self.scales.gamma[j] { self.beta[j] } else { 0.0 })
        } else {
            self.beta.clone()
        }
    }
}

/// Prepare a spec for sampling on this data: resolves data-dependent defaults.
pub fn resolve_spec(spec: &PriorSpec, n: usize, p: usize, sigma_hat2: f64) -> PriorSpec {
    let mut out = resolve_narisetty_he(spec, n, p, sigma_hat2);
    if let Family::GroupLasso { groups, .. } = &mut out.family {
        if groups.is_empty() {
            *groups = (0..p).collect();
        }
    }
    out
}

pub(crate) fn sample_variance(y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let m = y.mean();
    y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_rows() {
        let mut plan = SamplerPlan::new(PriorSpec::named("lasso_pc").unwrap());
        plan.iterations = 1000;
        plan.burn_in = 500;
        plan.thin = 5;
        assert_eq!(plan.retained(), 100);
        plan.thin = 3;
        assert_eq!(plan.retained(), 167);
    }

    #[test]
    fn plan_rejects_bad_burn_in() {
        let mut plan = SamplerPlan::new(PriorSpec::named("lasso_pc").unwrap());
        plan.burn_in = plan.iterations;
        assert!(plan.validate(3).is_err());
    }

    #[test]
    fn singleton_groups_by_default() {
        let spec = PriorSpec::named("group_lasso").unwrap();
        let r = resolve_spec(&spec, 10, 3, 1.0);
        match r.family {
            Family::GroupLasso { groups, .. } => assert_eq!(groups, vec![0, 1, 2]),
            _ => unreachable!(),
        }
    }
}
