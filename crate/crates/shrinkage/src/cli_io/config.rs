//! Flat `section.key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evidence::{DicPlugin, GRule};
use crate::gibbs_engine::{BlockMode, SamplerPlan};
use crate::prior_library::{did_you_mean, Family, Inclusion, PriorSpec, Rate, Scaling, SsvsVariant};
use crate::quantile::{QuantilePlan, QuantileSpec};
use crate::sampling_kernels::MvnKernel;
use crate::simulation_harness::{Classifier, Study, StudyOptions};

/// Every key the parser understands. Prior hyperparameters are further
/// checked against the chosen family.
const KNOWN_KEYS: &[&str] = &[
    "prior.family",
    "prior.scaling",
    "prior.a0",
    "prior.b0",
    "prior.legacy_dof",
    "prior.rho",
    "prior.xi",
    "prior.lambda2",
    "prior.r",
    "prior.delta",
    "prior.lambda1_2",
    "prior.lambda2_2",
    "prior.r1",
    "prior.delta1",
    "prior.r2",
    "prior.delta2",
    "prior.groups",
    "prior.lambda",
    "prior.gamma2",
    "prior.alpha",
    "prior.a",
    "prior.b",
    "prior.tau0_2",
    "prior.tau1_2",
    "prior.theta",
    "prior.c",
    "prior.d",
    "prior.c1",
    "prior.c2",
    "prior.lambda0",
    "prior.lambda1",
    "prior.tau2",
    "prior.pj",
    "sampler.engine",
    "sampler.iterations",
    "sampler.burn_in",
    "sampler.thin",
    "sampler.chains",
    "sampler.kernel",
    "sampler.block_mode",
    "sampler.seed",
    "sampler.vb_tol",
    "sampler.vb_max_iters",
    "data.path",
    "data.response",
    "data.standardize",
    "data.demean",
    "output.dir",
    "output.formats",
    "evidence.tau",
    "evidence.v0",
    "evidence.s0",
    "evidence.g",
    "evidence.pi0",
    "evidence.bma",
    "evidence.coordinate",
    "evidence.beta_star",
    "evidence.dic_plugin",
    "evidence.draws",
    "quantile.levels",
    "quantile.tau",
    "quantile.n0",
    "quantile.s0",
    "simulate.study",
    "simulate.full",
    "simulate.p",
    "simulate.r2",
    "simulate.replications",
    "simulate.iterations",
    "simulate.burn_in",
    "simulate.classifier",
    "simulate.methods",
];

/// Parse the flat text format. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'section.key = value', got '{line}'", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !k.contains('.') {
            return Err(Error::Config(format!("line {}: key '{k}' needs a section prefix", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

/// Split `--section.key=value` / `--section.key value` overrides out of an
/// argument list, returning the remaining arguments untouched.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let key_part = body.split('=').next().unwrap_or("");
        if !key_part.contains('.') {
            rest.push(a);
            continue;
        }
        match body.split_once('=') {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| Error::Config(format!("--{body} needs a value")))?;
                overrides.push((body.to_string(), v));
            }
        }
    }
    Ok((rest, overrides))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Gibbs,
    Cavi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub engine: Engine,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub kernel: MvnKernel,
    pub block_mode: BlockMode,
    /// `None` keeps the command's own default seed.
    pub seed: Option<u64>,
    pub vb_tol: f64,
    pub vb_max_iters: usize,
}

impl SamplerSettings {
    pub fn seed_or(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub response: String,
    pub standardize: bool,
    pub demean: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<DrawFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceConfig {
    /// Ridge prior D = τI for the conjugate model.
    pub tau: f64,
    pub v0: f64,
    pub s0: f64,
    pub g: GRule,
    pub pi0: f64,
    /// `None`: enumerate whenever p is small enough.
    pub bma: Option<bool>,
    /// 0-based coefficient for the Savage-Dickey ratio.
    pub coordinate: Option<usize>,
    pub beta_star: f64,
    pub dic_plugin: DicPlugin,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    /// Empty means both studies.
    pub studies: Vec<Study>,
    pub full: bool,
    pub p_values: Option<Vec<usize>>,
    pub r2_values: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub classifier: Classifier,
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prior: PriorSpec,
    pub sampler: SamplerSettings,
    pub data: DataConfig,
    pub output: OutputConfig,
    pub evidence: EvidenceConfig,
    pub quantile: QuantileSpec,
    pub simulate: SimulateConfig,
    /// The merged key/value pairs this config was built from.
    pub source: BTreeMap<String, String>,
}

struct KeyBag {
    map: BTreeMap<String, String>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str, what: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::Config(format!("{key}: expected {what}, got '{raw}'")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{raw}'"))),
    }
}

fn parse_list<T: FromStr>(key: &str, raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_value(key, s, what)).collect()
}

impl KeyBag {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }
    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_value(key, &v, "a number")).transpose()
    }
    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key).map(|v| parse_value(key, &v, "a nonnegative integer")).transpose()
    }
    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.take(key).map(|v| parse_value(key, &v, "a nonnegative integer")).transpose()
    }
    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key).map(|v| parse_bool(key, &v)).transpose()
    }
    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key).map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("{key}: {e}")))).transpose()
    }

    /// A rate given either as a fixed value (`fixed_key`) or as Gamma(r, δ).
    fn rate(&mut self, fixed_key: &str, r_key: &str, d_key: &str, default: Rate) -> Result<Rate> {
        let fixed = self.f64(fixed_key)?;
        let r = self.f64(r_key)?;
        let d = self.f64(d_key)?;
        match (fixed, r, d) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::Config(format!(
                "give either {fixed_key} (fixed) or {r_key}/{d_key} (Gamma hyperprior), not both"
            ))),
            (Some(v), None, None) => Ok(Rate::Fixed(v)),
            (None, None, None) => Ok(default),
            (None, r, d) => {
                let (r0, d0) = match default {
                    Rate::Gamma { r, delta } => (r, delta),
                    Rate::Fixed(_) => (1.0, 1.0),
                };
                Ok(Rate::Gamma { r: r.unwrap_or(r0), delta: d.unwrap_or(d0) })
            }
        }
    }

    fn inclusion(&mut self, default: Inclusion) -> Result<Inclusion> {
        let theta = self.f64("prior.theta")?;
        let c = self.f64("prior.c")?;
        let d = self.f64("prior.d")?;
        match (theta, c, d) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(Error::Config("give either prior.theta (fixed) or prior.c/prior.d (Beta hyperprior)".into()))
            }
            (Some(t), None, None) => Ok(Inclusion::Fixed(t)),
            (None, None, None) => Ok(default),
            (None, c, d) => {
                let (c0, d0) = match default {
                    Inclusion::Beta { c, d } => (c, d),
                    Inclusion::Fixed(_) => (1.0, 1.0),
                };
                Ok(Inclusion::Beta { c: c.unwrap_or(c0), d: d.unwrap_or(d0) })
            }
        }
    }

    /// Leftover keys are either misspelt or belong to another family.
    fn finish(self, family: &str) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            if KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("{k} is not a parameter of prior family '{family}'")));
            }
            return Err(Error::Config(format!("unknown key '{k}'{}", did_you_mean(k, KNOWN_KEYS))));
        }
        Ok(())
    }
}

fn build_family(bag: &mut KeyBag, name: &str) -> Result<Family> {
    let default = Family::default_for(name)?;
    let g11 = Rate::Gamma { r: 1.0, delta: 1.0 };
    Ok(match default {
        Family::Jeffreys | Family::HorseshoeMs | Family::HorseshoeSlice => default,
        Family::StudentT { rho, xi } => Family::StudentT {
            rho: bag.f64("prior.rho")?.unwrap_or(rho),
            xi: bag.f64("prior.xi")?.unwrap_or(xi),
        },
        Family::LassoPc { lambda2 } => Family::LassoPc { lambda2: bag.rate("prior.lambda2", "prior.r", "prior.delta", lambda2)? },
        Family::FusedLasso { .. } => Family::FusedLasso {
            lambda1_2: bag.rate("prior.lambda1_2", "prior.r1", "prior.delta1", g11)?,
            lambda2_2: bag.rate("prior.lambda2_2", "prior.r2", "prior.delta2", g11)?,
        },
        Family::GroupLasso { lambda2, .. } => {
            let groups = match bag.take("prior.groups") {
                None => Vec::new(),
                Some(raw) => {
                    let g: Vec<usize> = parse_list("prior.groups", &raw, "a list of positive group labels")?;
                    if g.contains(&0) {
                        return Err(Error::Config("prior.groups: group labels start at 1".into()));
                    }
                    g.into_iter().map(|v| v - 1).collect()
                }
            };
            Family::GroupLasso { groups, lambda2: bag.rate("prior.lambda2", "prior.r", "prior.delta", lambda2)? }
        }
        Family::ElasticNet { .. } => Family::ElasticNet {
            lambda1_2: bag.rate("prior.lambda1_2", "prior.r1", "prior.delta1", g11)?,
            lambda2: bag.rate("prior.lambda2", "prior.r2", "prior.delta2", g11)?,
        },
        Family::Gdp { r, delta } => Family::Gdp {
            r: bag.f64("prior.r")?.unwrap_or(r),
            delta: bag.f64("prior.delta")?.unwrap_or(delta),
        },
        Family::NormalGamma { lambda, gamma2 } => Family::NormalGamma {
            lambda: bag.f64("prior.lambda")?.unwrap_or(lambda),
            gamma2: bag.f64("prior.gamma2")?.unwrap_or(gamma2),
        },
        Family::DirichletLaplace { alpha } => Family::DirichletLaplace { alpha: bag.f64("prior.alpha")?.unwrap_or(alpha) },
        Family::Tpb { a, b } => Family::Tpb {
            a: bag.f64("prior.a")?.unwrap_or(a),
            b: bag.f64("prior.b")?.unwrap_or(b),
        },
        Family::Ssvs { variant, inclusion } => {
            let variant = match variant {
                SsvsVariant::Fixed { tau0_2, tau1_2 } => SsvsVariant::Fixed {
                    tau0_2: bag.f64("prior.tau0_2")?.unwrap_or(tau0_2),
                    tau1_2: bag.f64("prior.tau1_2")?.unwrap_or(tau1_2),
                },
                SsvsVariant::NarisettyHe => SsvsVariant::NarisettyHe,
                SsvsVariant::Lasso1 { c1, lambda1 } => SsvsVariant::Lasso1 {
                    c1: bag.f64("prior.c1")?.unwrap_or(c1),
                    lambda1: bag.rate("prior.lambda1", "prior.r", "prior.delta", lambda1)?,
                },
                SsvsVariant::Lasso2 { c2, lambda1 } => SsvsVariant::Lasso2 {
                    c2: bag.f64("prior.c2")?.unwrap_or(c2),
                    lambda1: bag.rate("prior.lambda1", "prior.r", "prior.delta", lambda1)?,
                },
                SsvsVariant::Lasso3 { lambda0, lambda1 } => SsvsVariant::Lasso3 {
                    lambda0: bag.f64("prior.lambda0")?.unwrap_or(lambda0),
                    lambda1: bag.f64("prior.lambda1")?.unwrap_or(lambda1),
                },
            };
            Family::Ssvs { variant, inclusion: bag.inclusion(inclusion)? }
        }
        Family::KuoMallick { tau2, pj } => Family::KuoMallick {
            tau2: bag.f64("prior.tau2")?.unwrap_or(tau2),
            pj: bag.f64("prior.pj")?.unwrap_or(pj),
        },
    })
}

fn parse_scaling(raw: &str) -> Result<Scaling> {
    match raw {
        "conjugate" => Ok(Scaling::Conjugate),
        "independent" => Ok(Scaling::Independent),
        other => Err(Error::Config(format!("prior.scaling: unknown scaling '{other}' (conjugate, independent)"))),
    }
}

impl RunConfig {
    /// Build and validate from merged key/value pairs.
    pub fn from_pairs(pairs: BTreeMap<String, String>) -> Result<Self> {
        let source = pairs.clone();
        let mut bag = KeyBag { map: pairs };

        let family_name = bag.take("prior.family").unwrap_or_else(|| "horseshoe_ms".to_string());
        let family = build_family(&mut bag, &family_name)?;
        let mut prior = PriorSpec::new(family);
        if let Some(s) = bag.take("prior.scaling") {
            prior = prior.with_scaling(parse_scaling(&s)?);
        }
        prior.sigma.a0 = bag.f64("prior.a0")?.unwrap_or(0.1);
        prior.sigma.b0 = bag.f64("prior.b0")?.unwrap_or(0.1);
        prior.legacy_dof = bag.bool("prior.legacy_dof")?.unwrap_or(false);

        let engine = match bag.take("sampler.engine").as_deref() {
            None | Some("gibbs") => Engine::Gibbs,
            Some("cavi") => Engine::Cavi,
            Some(other) => return Err(Error::Config(format!("sampler.engine: unknown engine '{other}' (gibbs, cavi)"))),
        };
        let sampler = SamplerSettings {
            engine,
            iterations: bag.usize("sampler.iterations")?.unwrap_or(5000),
            burn_in: bag.usize("sampler.burn_in")?.unwrap_or(1000),
            thin: bag.usize("sampler.thin")?.unwrap_or(1),
            chains: bag.usize("sampler.chains")?.unwrap_or(2),
            kernel: bag.parsed("sampler.kernel")?.unwrap_or(MvnKernel::Auto),
            block_mode: bag.parsed("sampler.block_mode")?.unwrap_or(BlockMode::ThreeBlock),
            seed: bag.u64("sampler.seed")?,
            vb_tol: bag.f64("sampler.vb_tol")?.unwrap_or(1e-8),
            vb_max_iters: bag.usize("sampler.vb_max_iters")?.unwrap_or(1000),
        };
        if engine == Engine::Cavi && !matches!(prior.family, Family::KuoMallick { .. }) {
            return Err(Error::Config("sampler.engine = cavi needs prior.family = kuo_mallick".into()));
        }

        let data = DataConfig {
            path: bag.take("data.path").map(PathBuf::from),
            response: bag.take("data.response").unwrap_or_else(|| "y".to_string()),
            standardize: bag.bool("data.standardize")?.unwrap_or(true),
            demean: bag.bool("data.demean")?.unwrap_or(true),
        };

        let formats = match bag.take("output.formats") {
            None => vec![DrawFormat::Csv],
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| match s {
                    "csv" => Ok(DrawFormat::Csv),
                    "binary" | "bin" => Ok(DrawFormat::Binary),
                    other => Err(Error::Config(format!("output.formats: unknown format '{other}' (csv, binary)"))),
                })
                .collect::<Result<_>>()?,
        };
        let output = OutputConfig { dir: bag.take("output.dir").map_or_else(|| PathBuf::from("out"), PathBuf::from), formats };

        let g = match bag.take("evidence.g") {
            None => GRule::SizeOverN,
            Some(raw) if raw == "p_over_n" => GRule::SizeOverN,
            Some(raw) => GRule::Fixed(parse_value("evidence.g", &raw, "a number or 'p_over_n'")?),
        };
        let dic_plugin = match bag.take("evidence.dic_plugin").as_deref() {
            None | Some("mean") => DicPlugin::Mean,
            Some("mode") => DicPlugin::Mode,
            Some(other) => return Err(Error::Config(format!("evidence.dic_plugin: unknown plug-in '{other}' (mean, mode)"))),
        };
        let coordinate = match bag.usize("evidence.coordinate")? {
            Some(0) => return Err(Error::Config("evidence.coordinate counts from 1".into())),
            c => c.map(|c| c - 1),
        };
        let evidence = EvidenceConfig {
            tau: bag.f64("evidence.tau")?.unwrap_or(10.0),
            v0: bag.f64("evidence.v0")?.unwrap_or(0.2),
            s0: bag.f64("evidence.s0")?.unwrap_or(0.2),
            g,
            pi0: bag.f64("evidence.pi0")?.unwrap_or(0.5),
            bma: bag.bool("evidence.bma")?,
            coordinate,
            beta_star: bag.f64("evidence.beta_star")?.unwrap_or(0.0),
            dic_plugin,
            draws: bag.usize("evidence.draws")?.unwrap_or(4000),
        };

        let mut quantile = QuantileSpec::default();
        if let Some(raw) = bag.take("quantile.levels") {
            quantile.levels = parse_list("quantile.levels", &raw, "a list of levels")?;
        }
        quantile.prior_tau = bag.f64("quantile.tau")?.unwrap_or(quantile.prior_tau);
        quantile.n0 = bag.f64("quantile.n0")?.unwrap_or(quantile.n0);
        quantile.s0 = bag.f64("quantile.s0")?.unwrap_or(quantile.s0);

        let studies = match bag.take("simulate.study").as_deref() {
            None | Some("both") | Some("all") => Vec::new(),
            Some(raw) => vec![raw.parse::<Study>().map_err(|e| Error::Config(format!("simulate.study: {e}")))?],
        };
        let classifier = match bag.take("simulate.classifier").as_deref() {
            None | Some("two_means") => Classifier::TwoMeans,
            Some("credible_interval") => Classifier::CredibleInterval,
            Some(other) => {
                return Err(Error::Config(format!(
                    "simulate.classifier: unknown classifier '{other}' (two_means, credible_interval)"
                )))
            }
        };
        let simulate = SimulateConfig {
            studies,
            full: bag.bool("simulate.full")?.unwrap_or(false),
            p_values: bag.take("simulate.p").map(|r| parse_list("simulate.p", &r, "a list of integers")).transpose()?,
            r2_values: bag.take("simulate.r2").map(|r| parse_list("simulate.r2", &r, "a list of numbers")).transpose()?,
            replications: bag.usize("simulate.replications")?,
            iterations: bag.usize("simulate.iterations")?,
            burn_in: bag.usize("simulate.burn_in")?,
            classifier,
            methods: bag
                .take("simulate.methods")
                .map(|r| r.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
        };

        bag.finish(&family_name)?;
        let cfg = Self { prior, sampler, data, output, evidence, quantile, simulate, source };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Invariants that do not need the data; p-dependent checks run later.
    fn validate(&self) -> Result<()> {
        let s = &self.sampler;
        if s.burn_in >= s.iterations {
            return Err(Error::Config(format!("burn_in ≥ iterations ({} ≥ {})", s.burn_in, s.iterations)));
        }
        if s.thin == 0 || s.chains == 0 {
            return Err(Error::Config("sampler.thin and sampler.chains must be positive".into()));
        }
        if !(s.vb_tol > 0.0) {
            return Err(Error::Config("sampler.vb_tol must be positive".into()));
        }
        // Group maps are checked once p is known.
        let p_hint = match &self.prior.family {
            Family::GroupLasso { groups, .. } if !groups.is_empty() => groups.len(),
            Family::GroupLasso { .. } => return self.validate_rest(),
            _ => 1,
        };
        self.prior.validate(p_hint)?;
        self.validate_rest()
    }

    fn validate_rest(&self) -> Result<()> {
        let e = &self.evidence;
        if !(e.tau > 0.0) {
            return Err(Error::Config("evidence.tau must be positive".into()));
        }
        if !(e.pi0 > 0.0 && e.pi0 < 1.0) {
            return Err(Error::Config("evidence.pi0 must lie in (0,1)".into()));
        }
        if let GRule::Fixed(g) = e.g {
            if !(g > 0.0) {
                return Err(Error::Config("evidence.g must be positive".into()));
            }
        }
        if e.draws == 0 {
            return Err(Error::Config("evidence.draws must be positive".into()));
        }
        self.quantile.validate()?;
        if let (Some(it), Some(b)) = (self.simulate.iterations, self.simulate.burn_in) {
            if b >= it {
                return Err(Error::Config(format!("burn_in ≥ iterations ({b} ≥ {it})")));
            }
        }
        Ok(())
    }

    /// Load an optional file, then apply overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(pairs)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(parse_config_text(text)?)
    }

    /// Canonical text of the merged pairs; parsing it gives back the same config.
    pub fn canonical_text(&self) -> String {
        self.source.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn sampler_plan(&self, default_seed: u64) -> SamplerPlan {
        let s = &self.sampler;
        SamplerPlan {
            prior: self.prior.clone(),
            mvn_kernel: s.kernel,
            block_mode: s.block_mode,
            iterations: s.iterations,
            burn_in: s.burn_in,
            thin: s.thin,
            chains: s.chains,
            seed: s.seed_or(default_seed),
            store_scales: false,
        }
    }

    pub fn quantile_plan(&self, default_seed: u64) -> QuantilePlan {
        let s = &self.sampler;
        QuantilePlan { iterations: s.iterations, burn_in: s.burn_in, thin: s.thin, seed: s.seed_or(default_seed) }
    }

    /// Study options: desk or full defaults with any explicit settings on top.
    pub fn study_options(&self) -> StudyOptions {
        let sim = &self.simulate;
        let mut o = if sim.full { StudyOptions::full() } else { StudyOptions::desk() };
        if let Some(p) = &sim.p_values {
            o.p_values = p.clone();
        }
        if let Some(r) = &sim.r2_values {
            o.r2_values = r.clone();
        }
        o.replications = sim.replications.unwrap_or(o.replications);
        o.iterations = sim.iterations.unwrap_or(o.iterations);
        o.burn_in = sim.burn_in.unwrap_or(o.burn_in);
        o.seed = self.sampler.seed_or(o.seed);
        o.classifier = sim.classifier;
        o.methods = sim.methods.clone();
        o
    }

    pub fn studies(&self) -> Vec<Study> {
        if self.simulate.studies.is_empty() {
            vec![Study::SsvsLassoTable, Study::ConjVsIndTable]
        } else {
            self.simulate.studies.clone()
        }
    }
}
