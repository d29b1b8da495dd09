//! Monte Carlo studies: sparse Gaussian DGP with a target population R²,
//! signal/noise classification and the bias/MSE/FN/FP/TP tables.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli_io::Dataset;
use crate::error::{Error, Result};
use crate::gibbs_engine::{run_chains, DrawStore, Problem, SamplerPlan};
use crate::prior_library::{PriorSpec, Scaling};
use crate::sampling_kernels::{std_normal, ChainRng, RngStream};

pub const BETA_TEMPLATE: [f64; 6] = [1.5, -1.5, 2.0, -2.0, 2.5, -2.5];
/// Minimum ratio of the signal to the noise centroid for 2-means to call any signal.
pub const SEPARATION_RATIO: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub r2_pop: f64,
    pub sigma2_true: f64,
    pub beta_template: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(p: usize, r2_pop: f64) -> Self {
        Self {
            n: 100,
            p,
            r2_pop,
            sigma2_true: 3.0,
            beta_template: BETA_TEMPLATE.to_vec(),
            replications: 20,
            seed: 2021,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r2_pop > 0.0 && self.r2_pop < 1.0) {
            return Err(Error::Config(format!("r2_pop must lie in (0,1), got {}", self.r2_pop)));
        }
        if self.beta_template.len() > self.p {
            return Err(Error::Config("beta template longer than p".into()));
        }
        if self.n < 3 || !(self.sigma2_true > 0.0) {
            return Err(Error::Config("need n >= 3 and sigma2_true > 0".into()));
        }
        if self.beta_template.iter().all(|b| *b == 0.0) {
            return Err(Error::Config("beta template has no signal".into()));
        }
        Ok(())
    }

    /// c with c²·|β̃|²/σ² = R²/(1-R²), for X ~ N(0, I).
    pub fn signal_scale(&self) -> f64 {
        let bb: f64 = self.beta_template.iter().map(|b| b * b).sum();
        (self.r2_pop / (1.0 - self.r2_pop) * self.sigma2_true / bb).sqrt()
    }

    pub fn true_beta(&self) -> DVector<f64> {
        let c = self.signal_scale();
        DVector::from_fn(self.p, |j, _| self.beta_template.get(j).map_or(0.0, |b| c * b))
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.beta_template.len()).filter(|j| self.beta_template[*j] != 0.0).collect()
    }
}

/// Draw X ~ N(0, I), y = Xβ + ε; X is standardised and y demeaned for estimation.
pub fn generate_dgp(config: &SimConfig, rng: &mut ChainRng) -> Result<(Dataset, DVector<f64>)> {
    config.validate()?;
    let (n, p) = (config.n, config.p);
    let beta = config.true_beta();
    let x = DMatrix::from_fn(n, p, |_, _| std_normal(rng));
    let sd = config.sigma2_true.sqrt();
    let y = &x * &beta + DVector::from_fn(n, |_, _| sd * std_normal(rng));
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Ok((Dataset::prepare(x, y, names, true, true)?, beta))
}

/// 2-means on |posterior means|; the cluster with the larger centroid is
/// the signal set unless the two centroids are within `SEPARATION_RATIO`.
pub fn classify_signals(means: &DVector<f64>) -> Vec<bool> {
    let p = means.len();
    let mut a: Vec<(f64, usize)> = means.iter().map(|m| m.abs()).zip(0..p).collect();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    if p < 2 || a[p - 1].0 == 0.0 {
        return vec![false; p];
    }
    // exact 1-D 2-means: best split of the sorted values
    let total: f64 = a.iter().map(|v| v.0).sum();
    let total_sq: f64 = a.iter().map(|v| v.0 * v.0).sum();
    let (mut s, mut sq) = (0.0, 0.0);
    let mut best = (f64::INFINITY, 0usize);
    for k in 1..p {
        s += a[k - 1].0;
        sq += a[k - 1].0 * a[k - 1].0;
        let (n1, n2) = (k as f64, (p - k) as f64);
        let wss = (sq - s * s / n1) + ((total_sq - sq) - (total - s).powi(2) / n2);
        if wss < best.0 - 1e-15 * total_sq {
            best = (wss, k);
        }
    }
    let k = best.1;
    let lo = a[..k].iter().map(|v| v.0).sum::<f64>() / k as f64;
    let hi = a[k..].iter().map(|v| v.0).sum::<f64>() / (p - k) as f64;
    let mut out = vec![false; p];
    if hi < SEPARATION_RATIO * lo {
        return out;
    }
    for &(_, j) in &a[k..] {
        out[j] = true;
    }
    out
}

/// Coordinates whose central 95% credible interval excludes zero.
pub fn classify_by_interval(draws: &DrawStore) -> Vec<bool> {
    (0..draws.p())
        .map(|j| {
            let mut col: Vec<f64> = draws.beta.column(j).iter().copied().collect();
            col.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&col, 0.025);
            let hi = quantile_sorted(&col, 0.975);
            lo > 0.0 || hi < 0.0
        })
        .collect()
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, frac) = (h.floor() as usize, h - h.floor());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub sigma2_hat: f64,
    pub bias: f64,
    pub mse: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
    pub tp: f64,
}

impl Metrics {
    pub fn mean(items: &[Metrics]) -> Metrics {
        let k = items.len().max(1) as f64;
        let mut m = Metrics::default();
        for it in items {
            m.sigma2_hat += it.sigma2_hat / k;
            m.bias += it.bias / k;
            m.mse += it.mse / k;
            m.fn_ += it.fn_ / k;
            m.fp += it.fp / k;
            m.tp += it.tp / k;
        }
        m
    }
}

/// Bias and MSE over the true support; counts over all coordinates.
pub fn compute_metrics(true_beta: &DVector<f64>, estimates: &DVector<f64>, selections: &[bool], sigma2_hat: f64) -> Metrics {
    let support: Vec<usize> = (0..true_beta.len()).filter(|j| true_beta[*j] != 0.0).collect();
    let k = support.len().max(1) as f64;
    let bias = support.iter().map(|&j| (estimates[j] - true_beta[j]).abs()).sum::<f64>() / k;
    let mse = support.iter().map(|&j| (estimates[j] - true_beta[j]).powi(2)).sum::<f64>() / k;
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (j, &sel) in selections.iter().enumerate() {
        match (sel, true_beta[j] != 0.0) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    Metrics { sigma2_hat, bias, mse, fn_, fp, tp }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    SsvsLassoTable,
    ConjVsIndTable,
}

impl std::str::FromStr for Study {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ssvs_lasso_table" | "ssvs" => Ok(Study::SsvsLassoTable),
            "conj_vs_ind_table" | "conj_vs_ind" => Ok(Study::ConjVsIndTable),
            other => Err(format!("unknown study '{other}' (ssvs_lasso_table, conj_vs_ind_table)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    #[default]
    TwoMeans,
    CredibleInterval,
}

/// One row of a study table: a prior (with its scaling) on one DGP cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub label: String,
    pub spec: PriorSpec,
}

fn study_prior(name: &str, scaling: Option<Scaling>) -> Result<PriorSpec> {
    let mut spec = PriorSpec::named(name)?.with_sigma(0.1, 0.1);
    if let Some(s) = scaling {
        spec.scaling = s;
    }
    Ok(spec)
}

pub fn study_methods(study: Study) -> Result<Vec<Method>> {
    Ok(match study {
        Study::SsvsLassoTable => [
            ("SSVS-Lasso-1", "ssvs_lasso1"),
            ("SSVS-Lasso-2", "ssvs_lasso2"),
            ("SSVS-Lasso-3", "ssvs_lasso3"),
            ("Narisetty-He", "ssvs_nh"),
            ("Kuo-Mallick", "kuo_mallick"),
        ]
        .iter()
        .map(|(label, name)| Ok(Method { label: label.to_string(), spec: study_prior(name, None)? }))
        .collect::<Result<_>>()?,
        Study::ConjVsIndTable => {
            let mut out = Vec::new();
            for (scaling, tag) in [(Scaling::Conjugate, "conjugate"), (Scaling::Independent, "independent")] {
                for (label, name) in [("Student-t", "student_t"), ("Bayesian Lasso", "lasso_pc"), ("Horseshoe", "horseshoe_ms")] {
                    out.push(Method { label: format!("{label} ({tag})"), spec: study_prior(name, Some(scaling))? });
                }
            }
            out
        }
    })
}

/// What to run; unset fields take the desk-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub p_values: Vec<usize>,
    pub r2_values: Vec<f64>,
    pub replications: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub classifier: Classifier,
    /// Restrict to methods whose label contains one of these strings.
    pub methods: Option<Vec<String>>,
}

impl StudyOptions {
    pub fn desk() -> Self {
        Self {
            p_values: vec![50, 100, 300],
            r2_values: vec![0.8, 0.4],
            replications: 20,
            iterations: 4000,
            burn_in: 1000,
            seed: 2021,
            classifier: Classifier::TwoMeans,
            methods: None,
        }
    }

    /// Full-fidelity setting: 100 replications with longer chains.
    pub fn full() -> Self {
        Self { replications: 100, iterations: 20_000, burn_in: 5000, ..Self::desk() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub method: String,
    pub p: usize,
    pub r2_pop: f64,
    pub metrics: Metrics,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub study: Study,
    pub options: StudyOptions,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn row(&self, method: &str, p: usize, r2: f64) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.method == method && r.p == p && (r.r2_pop - r2).abs() < 1e-12)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,p,r2_pop,sigma2_hat,bias,mse,fn,fp,tp,completed,failed\n");
        for r in &self.rows {
            let m = r.metrics;
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4},{},{}",
                r.method, r.p, r.r2_pop, m.sigma2_hat, m.bias, m.mse, m.fn_, m.fp, m.tp, r.completed, r.failed
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut last = None;
        for r in &self.rows {
            if last != Some((r.p, r.r2_pop.to_bits())) {
                let _ = writeln!(s, "\nR2_pop = {}, p = {}", r.r2_pop, r.p);
                let _ = writeln!(
                    s,
                    "{:<30} {:>8} {:>7} {:>7} {:>7} {:>7} {:>7}",
                    "", "sigma2", "bias", "mse", "FN", "FP", "TP"
                );
                last = Some((r.p, r.r2_pop.to_bits()));
            }
            let m = r.metrics;
            let _ = writeln!(
                s,
                "{:<30} {:>8.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2}{}",
                r.method,
                m.sigma2_hat,
                m.bias,
                m.mse,
                m.fn_,
                m.fp,
                m.tp,
                if r.failed > 0 { format!("  ({} failed)", r.failed) } else { String::new() }
            );
        }
        s
    }
}

/// Deterministic stream for a (cell, replication, method) triple.
fn mix(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &v in parts {
        h ^= v.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
    }
    h
}

/// One fit of one method on one replication.
pub fn fit_replication(
    method: &Method,
    config: &SimConfig,
    rep: usize,
    opts: &StudyOptions,
) -> Result<Metrics> {
    let cell = mix(&[config.p as u64, config.r2_pop.to_bits()]);
    let mut data_rng = RngStream::new(config.seed, mix(&[cell, rep as u64])).rng();
    let (ds, beta_true) = generate_dgp(config, &mut data_rng)?;
    let mut plan = SamplerPlan::new(method.spec.clone());
    plan.iterations = opts.iterations;
    plan.burn_in = opts.burn_in;
    plan.chains = 1;
    plan.store_scales = false;
    plan.seed = mix(&[config.seed, cell, rep as u64, 1]);
    let draws = run_chains(&plan, &Problem::from_dataset(&ds))?;
    let (est, _) = ds.destandardize(&draws.beta_mean());
    let selected = match opts.classifier {
        Classifier::TwoMeans => classify_signals(&est),
        Classifier::CredibleInterval => classify_by_interval(&draws),
    };
    Ok(compute_metrics(&beta_true, &est, &selected, draws.sigma2_mean()))
}

pub fn run_study(study: Study, opts: &StudyOptions) -> Result<StudyTable> {
    if opts.burn_in >= opts.iterations || opts.replications == 0 {
        return Err(Error::Config("study needs replications > 0 and burn_in < iterations".into()));
    }
    let mut methods = study_methods(study)?;
    if let Some(filter) = &opts.methods {
        methods.retain(|m| filter.iter().any(|f| m.label.contains(f.as_str()) || m.spec.family.name() == f));
        if methods.is_empty() {
            return Err(Error::Config(format!("no method matches {filter:?}")));
        }
    }
    let mut tasks = Vec::new();
    for &r2 in &opts.r2_values {
        for &p in &opts.p_values {
            let mut cfg = SimConfig::new(p, r2);
            cfg.replications = opts.replications;
            cfg.seed = opts.seed;
            cfg.validate()?;
            for (mi, _) in methods.iter().enumerate() {
                for rep in 0..opts.replications {
                    tasks.push((cfg.clone(), mi, rep));
                }
            }
        }
    }
    let results: Vec<Result<Metrics>> = tasks
        .par_iter()
        .map(|(cfg, mi, rep)| fit_replication(&methods[*mi], cfg, *rep, opts))
        .collect();
    let mut rows = Vec::new();
    let mut i = 0;
    for &r2 in &opts.r2_values {
        for &p in &opts.p_values {
            for m in &methods {
                let chunk = &results[i..i + opts.replications];
                i += opts.replications;
                let ok: Vec<Metrics> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
                for e in chunk.iter().filter_map(|r| r.as_ref().err()) {
                    log::warn!("{} p={p} R2={r2}: {e}", m.label);
                }
                rows.push(StudyRow {
                    method: m.label.clone(),
                    p,
                    r2_pop: r2,
                    metrics: Metrics::mean(&ok),
                    completed: ok.len(),
                    failed: chunk.len() - ok.len(),
                });
            }
        }
    }
    Ok(StudyTable { study, options: opts.clone(), rows })
}
