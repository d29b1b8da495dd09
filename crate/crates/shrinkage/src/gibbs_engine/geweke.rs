//! Joint-distribution test (Geweke 2004): moments of (β, σ², scales) from
//! forward simulation must match those of a Gibbs chain that redraws y from
//! the likelihood after every sweep.
//!
//! The Gibbs side runs as many short chains, each started from an exact joint
//! draw, so every state is exactly distributed when the sampler is correct and
//! the standard error comes from independent chain means. A single long chain
//! with batch means understates the error for heavy-tailed scale priors.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::steps::{step_beta_sigma, step_scalable, StepOptions};
use super::{BlockMode, LatentState, Problem};
use crate::error::{Error, Result};
use crate::prior_library::{draw_prior, resolve_narisetty_he, Family, PriorSpec, Rate};
use crate::sampling_kernels::{std_normal, MvnKernel, RngStream};

#[derive(Debug, Clone, Copy)]
pub struct GewekeOptions {
    pub n: usize,
    pub p: usize,
    pub iterations: usize,
    pub seed: u64,
    pub block_mode: BlockMode,
    /// Deliberate error in the σ² shape, for checking that the test has power.
    pub shape_offset: f64,
    /// Independent Gibbs chains sharing the `iterations` budget.
    pub chains: usize,
}

impl Default for GewekeOptions {
    fn default() -> Self {
        Self {
            n: 4,
            p: 3,
            iterations: 200_000,
            seed: 2024,
            block_mode: BlockMode::ThreeBlock,
            shape_offset: 0.0,
            chains: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GewekeReport {
    pub family: String,
    /// (test function, z statistic)
    pub z: Vec<(String, f64)>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().map(|(_, z)| z.abs()).fold(0.0, f64::max)
    }
}

/// Proper version of a family's default spec suitable for forward simulation.
pub fn geweke_spec(name: &str, n: usize, p: usize) -> Result<PriorSpec> {
    if name == "jeffreys" {
        return Err(Error::ImproperPrior("forward simulation undefined".into()));
    }
    let mut spec = PriorSpec::named(name)?.with_sigma(3.0, 2.0);
    match &mut spec.family {
        Family::StudentT { rho, xi } => {
            *rho = 2.0;
            *xi = 1.0;
        }
        Family::FusedLasso { lambda1_2, lambda2_2 } => {
            *lambda1_2 = Rate::Fixed(1.0);
            *lambda2_2 = Rate::Fixed(1.0);
        }
        Family::ElasticNet { lambda1_2, lambda2 } => {
            *lambda1_2 = Rate::Fixed(1.0);
            *lambda2 = Rate::Fixed(1.0);
        }
        Family::GroupLasso { groups, .. } => {
            *groups = (0..p).map(|j| j / 2).collect();
        }
        _ => {}
    }
    Ok(resolve_narisetty_he(&spec, n, p, 1.0))
}

fn test_functions(state: &LatentState, spec: &PriorSpec, out: &mut Vec<f64>, names: Option<&mut Vec<String>>) {
    out.clear();
    let mut nm: Vec<String> = Vec::new();
    for (j, b) in state.beta.iter().enumerate() {
        let t = b / (1.0 + b.abs());
        out.push(t);
        out.push(t * t);
        nm.push(format!("beta{j}"));
        nm.push(format!("beta{j}^2"));
    }
    let ls = state.sigma2.ln();
    out.push(ls);
    out.push(ls * ls);
    nm.push("log_sigma2".into());
    nm.push("log_sigma2^2".into());
    if !matches!(spec.family, Family::KuoMallick { .. }) {
        for (j, d) in state.scales.prior_variance(spec).iter().enumerate() {
            let l = d.ln();
            out.push(l);
            out.push(l * l);
            nm.push(format!("log_d{j}"));
            nm.push(format!("log_d{j}^2"));
        }
    }
    for (k, v) in state.scales.globals_for(spec).into_iter().enumerate() {
        let (name, x) = v;
        let l = x.ln();
        out.push(l);
        out.push(l * l);
        nm.push(format!("log_{name}#{k}"));
        nm.push(format!("log_{name}#{k}^2"));
    }
    if spec.family.is_selection() {
        for (j, g) in state.scales.gamma.iter().enumerate() {
            out.push(if *g { 1.0 } else { 0.0 });
            nm.push(format!("gamma{j}"));
        }
    }
    if let Some(names) = names {
        *names = nm;
    }
}

fn simulate_y(x: &DMatrix<f64>, coef: &DVector<f64>, sigma2: f64, rng: &mut impl rand::Rng) -> DVector<f64> {
    let sd = sigma2.sqrt();
    x * coef + DVector::from_fn(x.nrows(), |_, _| sd * std_normal(rng))
}

struct Moments {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: usize,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self { sum: vec![0.0; k], sumsq: vec![0.0; k], count: 0 }
    }
    fn push(&mut self, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self.sum[i] += x;
            self.sumsq[i] += x * x;
        }
        self.count += 1;
    }
    fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.count as f64
    }
    fn var(&self, i: usize) -> f64 {
        let m = self.mean(i);
        (self.sumsq[i] / self.count as f64 - m * m).max(0.0) * self.count as f64 / (self.count as f64 - 1.0)
    }
}

pub fn geweke_joint_test(spec: &PriorSpec, opts: &GewekeOptions) -> Result<GewekeReport> {
    let (n, p) = (opts.n, opts.p);
    spec.validate(p)?;
    let mut rng = RngStream::new(opts.seed, 0).rng();
    let x = DMatrix::from_fn(n, p, |_, _| std_normal(&mut rng));

    // marginal-conditional simulator
    let mut buf = Vec::new();
    let mut names = Vec::new();
    let first = draw_prior(spec, p, &mut rng)?;
    let probe = LatentState { beta: first.beta.clone(), sigma2: first.sigma2, scales: first.state.clone() };
    test_functions(&probe, spec, &mut buf, Some(&mut names));
    let k = buf.len();
    let mut fwd = Moments::new(k);
    for _ in 0..opts.iterations {
        let d = draw_prior(spec, p, &mut rng)?;
        let st = LatentState { beta: d.beta, sigma2: d.sigma2, scales: d.state };
        test_functions(&st, spec, &mut buf, None);
        fwd.push(&buf);
    }

    // successive-conditional simulator
    let step_opts = StepOptions { kernel: MvnKernel::Rue, shape_offset: opts.shape_offset };
    let chains = opts.chains.clamp(2, opts.iterations.max(2));
    let len = (opts.iterations / chains).max(1);
    let mut chain_means: Vec<Vec<f64>> = Vec::with_capacity(chains);
    for c in 0..chains {
        let mut rng = RngStream::new(opts.seed, 1 + c as u64).rng();
        let d = draw_prior(spec, p, &mut rng)?;
        let mut state = LatentState { beta: d.beta, sigma2: d.sigma2, scales: d.state };
        let y = simulate_y(&x, &state.coefficients(spec), state.sigma2, &mut rng);
        let mut prob = Problem::new(x.clone(), y);
        let mut cur = Moments::new(k);
        for it in 0..len {
            match opts.block_mode {
                BlockMode::Scalable => step_scalable(&mut state, &prob, spec, &step_opts, &mut rng)?,
                _ => step_beta_sigma(&mut state, &prob, spec, &step_opts, &mut rng)?,
            }
            let y = simulate_y(&x, &state.coefficients(spec), state.sigma2, &mut rng);
            prob.set_y(y);
            test_functions(&state, spec, &mut buf, None);
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { chain: c, iteration: it, detail: "non-finite test function".into() });
            }
            cur.push(&buf);
        }
        chain_means.push((0..k).map(|i| cur.mean(i)).collect());
    }
    let nb = chain_means.len() as f64;
    let mut z = Vec::with_capacity(k);
    for i in 0..k {
        let mb = chain_means.iter().map(|b| b[i]).sum::<f64>() / nb;
        let vb = chain_means.iter().map(|b| (b[i] - mb).powi(2)).sum::<f64>() / (nb - 1.0);
        let se2 = fwd.var(i) / fwd.count as f64 + vb / nb;
        let diff = fwd.mean(i) - mb;
        let zi = if se2 > 0.0 {
            diff / se2.sqrt()
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        z.push((names[i].clone(), zi));
    }
    Ok(GewekeReport { family: spec.family.name().to_string(), z })
}
