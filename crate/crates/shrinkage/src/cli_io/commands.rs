//! The four subcommands, callable without a process boundary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{Engine, RunConfig};
use super::dataset::{load_csv, Dataset};
use super::output::{sha256_hex, summarize, write_json, write_manifest, write_outputs};
use crate::error::{Error, Result};
use crate::evidence::{
    bma_enumerate_gprior, conjugate_posterior, info_criteria, log_likelihood, log_marginal_conjugate,
    sample_conjugate_posterior, sddr, BmaModel, ConjugateModel, BMA_MAX_P,
};
use crate::gibbs_engine::{run_chains, Problem};
use crate::prior_library::Family;
use crate::quantile::run_quantile_grid;
use crate::sampling_kernels::linalg::{chol_solve, cholesky_lower};
use crate::simulation_harness::run_study;
use crate::variational_engine::{run_cavi, VbHyper};

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    /// Human-readable table for stdout.
    pub report: String,
}

fn data_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.data.path.as_deref().ok_or_else(|| Error::Config("data.path is required for this command".into()))
}

fn load(cfg: &RunConfig, demean: bool) -> Result<Dataset> {
    load_csv(data_path(cfg)?, &cfg.data.response, cfg.data.standardize, demean)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

/// Manifest body: the merged config with the seed and data path pinned.
fn manifest(cfg: &RunConfig, command: &str, seed: u64, dir: &Path) -> Result<PathBuf> {
    let mut src = cfg.source.clone();
    src.insert("sampler.seed".into(), seed.to_string());
    let mut extra = vec![("threads", rayon::current_num_threads().to_string())];
    if let Some(p) = &cfg.data.path {
        let abs = fs::canonicalize(p)?;
        extra.push(("data_sha256", sha256_hex(&fs::read(&abs)?)));
        src.insert("data.path".into(), abs.display().to_string());
    }
    let text: String = src.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    write_manifest(dir, command, &text, &extra)
}

pub fn run_fit(cfg: &RunConfig) -> Result<CommandOutput> {
    let ds = load(cfg, cfg.data.demean)?;
    let dir = &cfg.output.dir;
    prepare_dir(dir)?;
    let seed = cfg.sampler.seed_or(DEFAULT_SEED);
    let prob = Problem::from_dataset(&ds);
    let mut files = Vec::new();
    let mut report = String::new();
    match cfg.sampler.engine {
        Engine::Gibbs => {
            let plan = cfg.sampler_plan(DEFAULT_SEED);
            let store = run_chains(&plan, &prob)?;
            files.extend(write_outputs(&store, Some(&ds.column_names), plan.burn_in, plan.thin, &cfg.output.formats, dir)?);
            let sum = summarize(&store, Some(&ds.column_names))?;
            let (orig, intercept) = ds.destandardize(&store.beta_mean());
            writeln!(report, "{} draws from {} chain(s), prior {}", sum.draws, sum.chains, cfg.prior.family.name()).unwrap();
            writeln!(report, "{:<16}{:>11}{:>11}{:>11}{:>11}{:>11}{:>8}", "name", "mean", "sd", "2.5%", "97.5%", "orig", "pip").unwrap();
            for (j, c) in sum.coefficients.iter().enumerate() {
                let pip = c.pip.map_or(String::from("-"), |v| format!("{v:.3}"));
                writeln!(report, "{:<16}{:>11.4}{:>11.4}{:>11.4}{:>11.4}{:>11.4}{:>8}", c.name, c.mean, c.sd, c.q2_5, c.q97_5, orig[j], pip)
                    .unwrap();
            }
            writeln!(report, "sigma2 mean {:.4}, intercept (original scale) {:.4}", sum.sigma2.mean, intercept).unwrap();
        }
        Engine::Cavi => {
            let Family::KuoMallick { tau2, pj } = cfg.prior.family else {
                return Err(Error::Config("sampler.engine = cavi needs prior.family = kuo_mallick".into()));
            };
            let hyper = VbHyper {
                d: DVector::from_element(ds.p(), tau2),
                pi0: pj,
                a0: cfg.prior.sigma.a0,
                b0: cfg.prior.sigma.b0,
            };
            let st = run_cavi(&prob, &hyper, cfg.sampler.vb_tol, cfg.sampler.vb_max_iters)?;
            #[derive(Serialize)]
            struct VbCoef<'a> {
                name: &'a str,
                mean: f64,
                sd: f64,
                pip: f64,
                median_model: bool,
            }
            #[derive(Serialize)]
            struct VbSummary<'a> {
                coefficients: Vec<VbCoef<'a>>,
                sigma2_shape: f64,
                sigma2_scale: f64,
                converged: bool,
                elbo_trace: &'a [f64],
            }
            let coefficients: Vec<VbCoef> = (0..ds.p())
                .map(|j| VbCoef {
                    name: &ds.column_names[j],
                    mean: st.mu[j],
                    sd: st.v[(j, j)].sqrt(),
                    pip: st.pi[j],
                    median_model: st.pi[j] > 0.5,
                })
                .collect();
            writeln!(report, "CAVI {} after {} sweeps", if st.converged { "converged" } else { "stopped" }, st.elbo_trace.len()).unwrap();
            writeln!(report, "{:<16}{:>11}{:>11}{:>8}", "name", "mean", "sd", "pip").unwrap();
            for c in &coefficients {
                writeln!(report, "{:<16}{:>11.4}{:>11.4}{:>8.3}", c.name, c.mean, c.sd, c.pip).unwrap();
            }
            let path = dir.join("vb_summary.json");
            write_json(
                &VbSummary { coefficients, sigma2_shape: st.a, sigma2_scale: st.b, converged: st.converged, elbo_trace: &st.elbo_trace },
                &path,
            )?;
            files.push(path);
        }
    }
    files.push(manifest(cfg, "fit", seed, dir)?);
    Ok(CommandOutput { files, report })
}

pub fn run_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let dir = &cfg.output.dir;
    prepare_dir(dir)?;
    let opts = cfg.study_options();
    let mut files = Vec::new();
    let mut report = String::new();
    for study in cfg.studies() {
        let table = run_study(study, &opts)?;
        let stem = match study {
            crate::simulation_harness::Study::SsvsLassoTable => "ssvs_lasso_table",
            crate::simulation_harness::Study::ConjVsIndTable => "conj_vs_ind_table",
        };
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, table.to_csv())?;
        let txt = dir.join(format!("{stem}.txt"));
        let text = table.to_text();
        fs::write(&txt, &text)?;
        files.extend([csv, txt]);
        writeln!(report, "== {stem} ({} replications) ==\n{text}", opts.replications).unwrap();
    }
    files.push(manifest(cfg, "simulate", opts.seed, dir)?);
    Ok(CommandOutput { files, report })
}

/// Maximised Gaussian log-likelihood; `None` when X'X is singular.
fn max_loglik(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<f64> {
    let n = y.len();
    if x.ncols() >= n {
        return None;
    }
    let beta = if x.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let l = cholesky_lower(&x.tr_mul(x)).ok()?;
        chol_solve(&l, &x.tr_mul(y))
    };
    let rss = (y - x * &beta).norm_squared();
    Some(log_likelihood(x, y, &beta, rss / n as f64))
}

#[derive(Debug, Serialize)]
struct SddrReport {
    coordinate: usize,
    beta_star: f64,
    log_bayes_factor: f64,
}

#[derive(Debug, Serialize)]
struct BmaReport {
    g: String,
    models_enumerated: usize,
    top_models: Vec<BmaModel>,
    inclusion_probs: Vec<f64>,
    median_model: Vec<usize>,
    coefficients: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct EvidenceReport {
    n: usize,
    p: usize,
    log_marginal: f64,
    criteria: std::collections::BTreeMap<String, f64>,
    bic_uses_mle: bool,
    sddr: Option<SddrReport>,
    bma: Option<BmaReport>,
}

pub fn run_evidence(cfg: &RunConfig) -> Result<CommandOutput> {
    let ds = load(cfg, cfg.data.demean)?;
    let dir = &cfg.output.dir;
    prepare_dir(dir)?;
    let e = &cfg.evidence;
    let seed = cfg.sampler.seed_or(DEFAULT_SEED);
    let (n, p) = (ds.n(), ds.p());
    let model = ConjugateModel::ridge(p, e.tau, e.v0, e.s0);
    let log_marginal = log_marginal_conjugate(&model, &ds.x, &ds.y)?;
    let post = conjugate_posterior(&model, &ds.x, &ds.y)?;
    let draws = sample_conjugate_posterior(&post, e.draws, seed)?;
    let (mode_ll, bic_uses_mle) = match max_loglik(&ds.x, &ds.y) {
        Some(ll) => (ll, true),
        None => {
            log::warn!("X'X is singular; BIC uses the best posterior draw instead of the MLE");
            let best = (0..draws.len())
                .map(|i| log_likelihood(&ds.x, &ds.y, &draws.beta.row(i).transpose(), draws.sigma2[i]))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, false)
        }
    };
    let criteria = info_criteria(&draws, &ds.x, &ds.y, mode_ll, p + 1, n, e.dic_plugin)?;
    let sddr_report = match e.coordinate {
        Some(j) => Some(SddrReport { coordinate: j + 1, beta_star: e.beta_star, log_bayes_factor: sddr(&model, &ds.x, &ds.y, j, e.beta_star)? }),
        None => None,
    };
    let want_bma = e.bma.unwrap_or(p <= BMA_MAX_P);
    let bma = if want_bma {
        let r = bma_enumerate_gprior(&ds.x, &ds.y, e.g, e.pi0)?;
        Some(BmaReport {
            g: format!("{:?}", e.g),
            models_enumerated: r.models.len(),
            top_models: r.models.iter().take(20).cloned().collect(),
            inclusion_probs: r.inclusion_probs,
            median_model: r.median_model,
            coefficients: r.coefficients,
        })
    } else {
        if e.bma.is_none() {
            log::warn!("p = {p} exceeds {BMA_MAX_P}; BMA enumeration skipped");
        }
        None
    };
    let rep = EvidenceReport { n, p, log_marginal, criteria, bic_uses_mle, sddr: sddr_report, bma };
    let mut report = String::new();
    writeln!(report, "log marginal likelihood  {:.6}", rep.log_marginal).unwrap();
    for (k, v) in &rep.criteria {
        writeln!(report, "{k:<24} {v:.4}").unwrap();
    }
    if let Some(s) = &rep.sddr {
        writeln!(report, "log BF (beta_{} = {}) {:.6}", s.coordinate, s.beta_star, s.log_bayes_factor).unwrap();
    }
    if let Some(b) = &rep.bma {
        writeln!(report, "BMA over {} models; median model {:?}", b.models_enumerated, b.median_model.iter().map(|j| ds.column_names[*j].as_str()).collect::<Vec<_>>())
            .unwrap();
        for (j, pip) in b.inclusion_probs.iter().enumerate() {
            writeln!(report, "  {:<16} pip {:.4}  coef {:.4}", ds.column_names[j], pip, b.coefficients[j]).unwrap();
        }
    }
    let path = dir.join("evidence.json");
    write_json(&rep, &path)?;
    let m = manifest(cfg, "evidence", seed, dir)?;
    Ok(CommandOutput { files: vec![path, m], report })
}

#[derive(Debug, Serialize)]
struct QuantileLevelReport {
    level: f64,
    status: String,
    medians: Vec<f64>,
}

pub fn run_quantile(cfg: &RunConfig) -> Result<CommandOutput> {
    // Quantiles are location-dependent, so y keeps its level and an
    // intercept column is added.
    let ds = load(cfg, false)?;
    let dir = &cfg.output.dir;
    prepare_dir(dir)?;
    let n = ds.n();
    let x = DMatrix::from_fn(n, ds.p() + 1, |i, j| if j == 0 { 1.0 } else { ds.x[(i, j - 1)] });
    let mut names = vec!["(intercept)".to_string()];
    names.extend(ds.column_names.iter().cloned());
    let plan = cfg.quantile_plan(DEFAULT_SEED);
    let grid = run_quantile_grid(&x, &ds.y, &cfg.quantile, &plan)?;
    let mut files = Vec::new();
    let mut levels = Vec::new();
    let mut report = String::new();
    write!(report, "{:<8}", "level").unwrap();
    for nm in &names {
        write!(report, "{nm:>14}").unwrap();
    }
    report.push('\n');
    for lr in &grid.levels {
        write!(report, "{:<8}", lr.level).unwrap();
        match &lr.draws {
            Ok(store) => {
                let sub = dir.join(format!("level_{}", lr.level));
                files.extend(write_outputs(store, Some(&names), plan.burn_in, plan.thin, &cfg.output.formats, &sub)?);
                let sum = summarize(store, Some(&names))?;
                let medians: Vec<f64> = sum.coefficients.iter().map(|c| c.q50).collect();
                for m in &medians {
                    write!(report, "{m:>14.4}").unwrap();
                }
                levels.push(QuantileLevelReport { level: lr.level, status: "ok".into(), medians });
            }
            Err(msg) => {
                write!(report, "  failed: {msg}").unwrap();
                levels.push(QuantileLevelReport { level: lr.level, status: format!("failed: {msg}"), medians: Vec::new() });
            }
        }
        report.push('\n');
    }
    if let Some(c) = grid.crossing_rate {
        writeln!(report, "crossing rate {c:.4}").unwrap();
    }
    #[derive(Serialize)]
    struct QuantileReport<'a> {
        names: &'a [String],
        levels: Vec<QuantileLevelReport>,
        crossing_rate: Option<f64>,
    }
    let path = dir.join("quantile.json");
    write_json(&QuantileReport { names: &names, levels, crossing_rate: grid.crossing_rate }, &path)?;
    files.push(path);
    files.push(manifest(cfg, "quantile", plan.seed, dir)?);
    Ok(CommandOutput { files, report })
}
