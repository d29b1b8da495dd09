use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::steps::{step_beta_sigma, step_scalable, step_skinny, StepOptions};
use super::{resolve_spec, sample_variance, BlockMode, LatentState, Problem, SamplerPlan};
use crate::error::{Error, Result};
use crate::prior_library::{PriorSpec, Scaling};
use crate::sampling_kernels::RngStream;

/// Retained draws, rows ordered by chain then iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub beta: DMatrix<f64>,
    pub sigma2: Vec<f64>,
    /// 0/1 indicators for selection families.
    pub gamma: Option<DMatrix<f64>>,
    /// Effective prior variance diag(D) per draw, when requested.
    pub scale_diag: Option<DMatrix<f64>>,
    pub chain: Vec<usize>,
    pub seed: u64,
}

impl DrawStore {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn p(&self) -> usize {
        self.beta.ncols()
    }

    pub fn beta_mean(&self) -> DVector<f64> {
        self.beta.row_mean().transpose()
    }

    pub fn sigma2_mean(&self) -> f64 {
        self.sigma2.iter().sum::<f64>() / self.len() as f64
    }

    /// Posterior inclusion probabilities (selection families only).
    pub fn inclusion_probs(&self) -> Option<DVector<f64>> {
        self.gamma.as_ref().map(|g| g.row_mean().transpose())
    }

    /// Concatenate stores in the given order.
    pub fn merge(stores: Vec<DrawStore>) -> DrawStore {
        let seed = stores.first().map_or(0, |s| s.seed);
        let p = stores.first().map_or(0, |s| s.p());
        let rows: usize = stores.iter().map(|s| s.len()).sum();
        let stack = |get: &dyn Fn(&DrawStore) -> Option<&DMatrix<f64>>| -> Option<DMatrix<f64>> {
            if stores.iter().any(|s| get(s).is_none()) {
                return None;
            }
            let mut m = DMatrix::zeros(rows, p);
            let mut r0 = 0;
            for s in &stores {
                let part = get(s).unwrap();
                m.rows_mut(r0, part.nrows()).copy_from(part);
                r0 += part.nrows();
            }
            Some(m)
        };
        let beta = stack(&|s| Some(&s.beta)).unwrap_or_else(|| DMatrix::zeros(0, p));
        let gamma = stack(&|s| s.gamma.as_ref());
        let scale_diag = stack(&|s| s.scale_diag.as_ref());
        DrawStore {
            beta,
            sigma2: stores.iter().flat_map(|s| s.sigma2.iter().copied()).collect(),
            gamma,
            scale_diag,
            chain: stores.iter().flat_map(|s| s.chain.iter().copied()).collect(),
            seed,
        }
    }
}

fn check_finite(state: &LatentState, chain: usize, iteration: usize) -> Result<()> {
    if !state.sigma2.is_finite() || !(state.sigma2 > 0.0) {
        return Err(Error::Numeric { chain, iteration, detail: format!("sigma2 = {}", state.sigma2) });
    }
    if let Some(j) = state.beta.iter().position(|b| !b.is_finite()) {
        return Err(Error::Numeric { chain, iteration, detail: format!("beta[{j}] = {}", state.beta[j]) });
    }
    Ok(())
}

/// One chain; `spec` must already be resolved against the data.
pub fn run_chain(plan: &SamplerPlan, spec: &PriorSpec, prob: &Problem, chain: usize) -> Result<DrawStore> {
    let (n, p) = (prob.n(), prob.p());
    let mut rng = RngStream::new(plan.seed, chain as u64).rng();
    let opts = StepOptions::new(plan.mvn_kernel.resolve(n, p));
    let mut state = LatentState::init(spec, p, sample_variance(&prob.y));
    let rows = plan.retained();
    let selection = spec.family.is_selection();
    let mut beta = Vec::with_capacity(rows * p);
    let mut gamma = Vec::with_capacity(if selection { rows * p } else { 0 });
    let mut diag = Vec::with_capacity(if plan.store_scales { rows * p } else { 0 });
    let mut sigma2 = Vec::with_capacity(rows);
    for it in 0..plan.iterations {
        match plan.block_mode {
            BlockMode::ThreeBlock => step_beta_sigma(&mut state, prob, spec, &opts, &mut rng),
            BlockMode::Scalable => step_scalable(&mut state, prob, spec, &opts, &mut rng),
            BlockMode::Skinny => step_skinny(&mut state, prob, spec, &opts, &mut rng),
        }
        .map_err(|e| match e {
            Error::Numeric { .. } => e,
            Error::NotPositiveDefinite { .. } | Error::InnerSystemSingular { .. } | Error::Domain(_) => {
                Error::Numeric { chain, iteration: it, detail: e.to_string() }
            }
            other => other,
        })?;
        check_finite(&state, chain, it)?;
        if it >= plan.burn_in && (it - plan.burn_in) % plan.thin == 0 {
            let coef = state.coefficients(spec);
            beta.extend(coef.iter());
            sigma2.push(state.sigma2);
            if selection {
                gamma.extend(state.scales.gamma.iter().map(|g| if *g { 1.0 } else { 0.0 }));
            }
            if plan.store_scales {
                diag.extend(state.scales.prior_variance(spec).iter());
            }
        }
    }
    let kept = sigma2.len();
    Ok(DrawStore {
        beta: DMatrix::from_row_slice(kept, p, &beta),
        sigma2,
        gamma: selection.then(|| DMatrix::from_row_slice(kept, p, &gamma)),
        scale_diag: plan.store_scales.then(|| DMatrix::from_row_slice(kept, p, &diag)),
        chain: vec![chain; kept],
        seed: plan.seed,
    })
}

/// All chains of a plan, concurrently; the merged store is deterministic.
pub fn run_chains(plan: &SamplerPlan, prob: &Problem) -> Result<DrawStore> {
    let (n, p) = (prob.n(), prob.p());
    // Under conjugate scaling σ² already multiplies the NH variances, so the
    // sample-variance factor only enters the unscaled (independent) form.
    let unscaled = plan.block_mode == BlockMode::Skinny || plan.prior.scaling == Scaling::Independent;
    let sigma_hat2 = if unscaled { sample_variance(&prob.y) } else { 1.0 };
    let spec = resolve_spec(&plan.prior, n, p, sigma_hat2);
    plan.validate(p)?;
    spec.validate(p)?;
    let stores = (0..plan.chains)
        .into_par_iter()
        .map(|c| run_chain(plan, &spec, prob, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(DrawStore::merge(stores))
}
