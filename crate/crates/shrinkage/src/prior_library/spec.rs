use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the coefficient prior variance is multiplied by σ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Conjugate,
    Independent,
}

/// InvGamma(a0, b0) on σ²; a0 = b0 = 0 is the improper 1/σ² limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPrior {
    pub a0: f64,
    pub b0: f64,
}

impl Default for SigmaPrior {
    fn default() -> Self {
        Self { a0: 0.0, b0: 0.0 }
    }
}

impl SigmaPrior {
    pub fn is_proper(&self) -> bool {
        self.a0 > 0.0 && self.b0 > 0.0
    }
}

/// A penalty rate that is either held fixed or carries a Gamma(r, δ) hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    Fixed(f64),
    Gamma { r: f64, delta: f64 },
}

impl Rate {
    pub fn initial(&self) -> f64 {
        match *self {
            Rate::Fixed(v) => v,
            Rate::Gamma { .. } => 1.0,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            Rate::Fixed(v) => v > 0.0 && v.is_finite(),
            Rate::Gamma { r, delta } => r > 0.0 && delta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: rates and Gamma hyperparameters must be positive")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    Fixed(f64),
    Beta { c: f64, d: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsvsVariant {
    /// George-McCulloch with fixed spike/slab variances.
    Fixed { tau0_2: f64, tau1_2: f64 },
    /// Narisetty-He defaults; resolved against the data before sampling.
    NarisettyHe,
    /// Laplace slab, fixed spike variance c1.
    Lasso1 { c1: f64, lambda1: Rate },
    /// Laplace slab, spike variance c2 times the slab variance.
    Lasso2 { c2: f64, lambda1: Rate },
    /// Laplace spike and slab with fixed rates λ0 ≫ λ1.
    Lasso3 { lambda0: f64, lambda1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    Jeffreys,
    StudentT { rho: f64, xi: f64 },
    LassoPc { lambda2: Rate },
    FusedLasso { lambda1_2: Rate, lambda2_2: Rate },
    /// `groups[j]` is the 0-based group of coefficient j.
    GroupLasso { groups: Vec<usize>, lambda2: Rate },
    ElasticNet { lambda1_2: Rate, lambda2: Rate },
    Gdp { r: f64, delta: f64 },
    NormalGamma { lambda: f64, gamma2: f64 },
    DirichletLaplace { alpha: f64 },
    HorseshoeMs,
    HorseshoeSlice,
    Tpb { a: f64, b: f64 },
    Ssvs { variant: SsvsVariant, inclusion: Inclusion },
    KuoMallick { tau2: f64, pj: f64 },
}

pub const FAMILY_NAMES: [&str; 18] = [
    "jeffreys",
    "student_t",
    "lasso_pc",
    "fused_lasso",
    "group_lasso",
    "elastic_net_kyung",
    "gdp",
    "normal_gamma",
    "dirichlet_laplace",
    "horseshoe_ms",
    "horseshoe_slice",
    "tpb",
    "ssvs_fixed",
    "ssvs_nh",
    "ssvs_lasso1",
    "ssvs_lasso2",
    "ssvs_lasso3",
    "kuo_mallick",
];

impl Family {
    /// Family with the default hyperparameters of the studies.
    pub fn default_for(name: &str) -> Result<Family> {
        let beta11 = Inclusion::Beta { c: 1.0, d: 1.0 };
        let gamma11 = Rate::Gamma { r: 1.0, delta: 1.0 };
        Ok(match name {
            "jeffreys" => Family::Jeffreys,
            "student_t" => Family::StudentT { rho: 0.01, xi: 0.01 },
            "lasso_pc" => Family::LassoPc { lambda2: gamma11 },
            "fused_lasso" => Family::FusedLasso { lambda1_2: gamma11, lambda2_2: gamma11 },
            "group_lasso" => Family::GroupLasso { groups: Vec::new(), lambda2: gamma11 },
            "elastic_net_kyung" => Family::ElasticNet { lambda1_2: gamma11, lambda2: gamma11 },
            "gdp" => Family::Gdp { r: 1.0, delta: 1.0 },
            "normal_gamma" => Family::NormalGamma { lambda: 1.0, gamma2: 1.0 },
            "dirichlet_laplace" => Family::DirichletLaplace { alpha: 0.5 },
            "horseshoe_ms" => Family::HorseshoeMs,
            "horseshoe_slice" => Family::HorseshoeSlice,
            "tpb" => Family::Tpb { a: 0.5, b: 0.5 },
            "ssvs_fixed" => Family::Ssvs {
                variant: SsvsVariant::Fixed { tau0_2: 0.01, tau1_2: 4.0 },
                inclusion: beta11,
            },
            "ssvs_nh" => Family::Ssvs { variant: SsvsVariant::NarisettyHe, inclusion: beta11 },
            "ssvs_lasso1" => Family::Ssvs {
                variant: SsvsVariant::Lasso1 { c1: 1e-4, lambda1: gamma11 },
                inclusion: beta11,
            },
            "ssvs_lasso2" => Family::Ssvs {
                variant: SsvsVariant::Lasso2 { c2: 1e-4, lambda1: gamma11 },
                inclusion: beta11,
            },
            "ssvs_lasso3" => Family::Ssvs {
                variant: SsvsVariant::Lasso3 { lambda0: 20.0, lambda1: 1.0 },
                inclusion: beta11,
            },
            "kuo_mallick" => Family::KuoMallick { tau2: 10.0, pj: 0.5 },
            other => {
                return Err(Error::Config(format!(
                    "unknown prior family '{other}'{}",
                    did_you_mean(other, &FAMILY_NAMES)
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Jeffreys => "jeffreys",
            Family::StudentT { .. } => "student_t",
            Family::LassoPc { .. } => "lasso_pc",
            Family::FusedLasso { .. } => "fused_lasso",
            Family::GroupLasso { .. } => "group_lasso",
            Family::ElasticNet { .. } => "elastic_net_kyung",
            Family::Gdp { .. } => "gdp",
            Family::NormalGamma { .. } => "normal_gamma",
            Family::DirichletLaplace { .. } => "dirichlet_laplace",
            Family::HorseshoeMs => "horseshoe_ms",
            Family::HorseshoeSlice => "horseshoe_slice",
            Family::Tpb { .. } => "tpb",
            Family::Ssvs { variant, .. } => match variant {
                SsvsVariant::Fixed { .. } => "ssvs_fixed",
                SsvsVariant::NarisettyHe => "ssvs_nh",
                SsvsVariant::Lasso1 { .. } => "ssvs_lasso1",
                SsvsVariant::Lasso2 { .. } => "ssvs_lasso2",
                SsvsVariant::Lasso3 { .. } => "ssvs_lasso3",
            },
            Family::KuoMallick { .. } => "kuo_mallick",
        }
    }

    /// Scaling used by the appendix derivation of each family.
    pub fn default_scaling(&self) -> Scaling {
        match self {
            Family::NormalGamma { .. } | Family::Tpb { .. } | Family::KuoMallick { .. } => Scaling::Independent,
            _ => Scaling::Conjugate,
        }
    }

    pub fn is_selection(&self) -> bool {
        matches!(self, Family::Ssvs { .. } | Family::KuoMallick { .. })
    }

    /// Laplace-type mixtures whose independent form can be multimodal.
    fn laplace_type(&self) -> bool {
        matches!(
            self,
            Family::LassoPc { .. }
                | Family::FusedLasso { .. }
                | Family::GroupLasso { .. }
                | Family::ElasticNet { .. }
                | Family::Gdp { .. }
                | Family::DirichletLaplace { .. }
        )
    }
}

/// Suggest the closest known name, by edit distance.
pub fn did_you_mean(input: &str, candidates: &[&str]) -> String {
    fn lev(a: &str, b: &str) -> usize {
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for (i, ca) in a.chars().enumerate() {
            let mut cur = vec![i + 1; b.len() + 1];
            for (j, cb) in b.iter().enumerate() {
                cur[j + 1] = (prev[j] + usize::from(ca != *cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }
    // Also score against the stem before the first '_' so "horsehoe" finds horseshoe_*.
    let mut scored: Vec<(usize, &str)> = candidates
        .iter()
        .map(|c| {
            let stem = c.split(['_', '.']).next().unwrap_or(c);
            (lev(input, c).min(lev(input, stem) + 1), *c)
        })
        .collect();
    scored.sort();
    let close: Vec<&str> = scored.iter().filter(|(d, _)| *d <= 3).take(3).map(|(_, c)| *c).collect();
    if close.is_empty() {
        format!("; known: {}", candidates.join(", "))
    } else {
        format!("; did you mean: {}?", close.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: Family,
    pub scaling: Scaling,
    pub sigma: SigmaPrior,
    /// Use the σ² shapes exactly as printed in the source appendix.
    pub legacy_dof: bool,
}

impl PriorSpec {
    pub fn new(family: Family) -> Self {
        let scaling = family.default_scaling();
        Self {
            family,
            scaling,
            sigma: SigmaPrior::default(),
            legacy_dof: false,
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        Ok(Self::new(Family::default_for(name)?))
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        if scaling == Scaling::Independent && self.family.laplace_type() {
            log::warn!(
                "{}: independent scaling of a Laplace-type prior can give a multimodal posterior",
                self.family.name()
            );
        }
        self.scaling = scaling;
        self
    }

    pub fn with_sigma(mut self, a0: f64, b0: f64) -> Self {
        self.sigma = SigmaPrior { a0, b0 };
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let pos = |v: f64, what: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        if self.sigma.a0 < 0.0 || self.sigma.b0 < 0.0 {
            return Err(Error::Config("sigma prior a0, b0 must be nonnegative".into()));
        }
        match &self.family {
            Family::Jeffreys | Family::HorseshoeMs | Family::HorseshoeSlice => {}
            Family::StudentT { rho, xi } => {
                pos(*rho, "student_t rho")?;
                pos(*xi, "student_t xi")?;
            }
            Family::LassoPc { lambda2 } => lambda2.validate("lasso_pc")?,
            Family::FusedLasso { lambda1_2, lambda2_2 } => {
                lambda1_2.validate("fused_lasso lambda1")?;
                lambda2_2.validate("fused_lasso lambda2")?;
            }
            Family::GroupLasso { groups, lambda2 } => {
                lambda2.validate("group_lasso")?;
                if groups.len() != p {
                    return Err(Error::Config(format!(
                        "group_lasso: group map has {} entries for {} coefficients",
                        groups.len(),
                        p
                    )));
                }
                let k = groups.iter().max().map_or(0, |m| m + 1);
                for g in 0..k {
                    if !groups.contains(&g) {
                        return Err(Error::Config(format!("group_lasso: group {} is empty", g + 1)));
                    }
                }
            }
            Family::ElasticNet { lambda1_2, lambda2 } => {
                lambda1_2.validate("elastic_net lambda1")?;
                lambda2.validate("elastic_net lambda2")?;
            }
            Family::Gdp { r, delta } => {
                pos(*r, "gdp r")?;
                pos(*delta, "gdp delta")?;
            }
            Family::NormalGamma { lambda, gamma2 } => {
                pos(*lambda, "normal_gamma lambda")?;
                pos(*gamma2, "normal_gamma gamma2")?;
            }
            Family::DirichletLaplace { alpha } => pos(*alpha, "dirichlet_laplace alpha")?,
            Family::Tpb { a, b } => {
                pos(*a, "tpb a")?;
                pos(*b, "tpb b")?;
            }
            Family::Ssvs { variant, inclusion } => {
                match *inclusion {
                    Inclusion::Fixed(t) if !(t > 0.0 && t < 1.0) => {
                        return Err(Error::Config(format!("inclusion probability must lie in (0,1), got {t}")))
                    }
                    Inclusion::Beta { c, d } => {
                        pos(c, "beta c")?;
                        pos(d, "beta d")?;
                    }
                    _ => {}
                }
                match variant {
                    SsvsVariant::Fixed { tau0_2, tau1_2 } => {
                        pos(*tau0_2, "tau0_2")?;
                        if !(tau1_2 > tau0_2) {
                            return Err(Error::Config(format!(
                                "ssvs requires tau1_2 > tau0_2, got tau1_2={tau1_2}, tau0_2={tau0_2}"
                            )));
                        }
                    }
                    SsvsVariant::NarisettyHe => {}
                    SsvsVariant::Lasso1 { c1, lambda1 } => {
                        pos(*c1, "c1")?;
                        lambda1.validate("ssvs_lasso1")?;
                    }
                    SsvsVariant::Lasso2 { c2, lambda1 } => {
                        if !(*c2 > 0.0 && *c2 < 1.0) {
                            return Err(Error::Config("ssvs_lasso2 needs 0 < c2 < 1".into()));
                        }
                        lambda1.validate("ssvs_lasso2")?;
                    }
                    SsvsVariant::Lasso3 { lambda0, lambda1 } => {
                        pos(*lambda0, "lambda0")?;
                        pos(*lambda1, "lambda1")?;
                        if lambda0 <= lambda1 {
                            return Err(Error::Config("ssvs_lasso3 needs lambda0 > lambda1".into()));
                        }
                    }
                }
            }
            Family::KuoMallick { tau2, pj } => {
                pos(*tau2, "kuo_mallick tau2")?;
                if !(*pj >= 0.0 && *pj <= 1.0) {
                    return Err(Error::Config("kuo_mallick pj must lie in [0,1]".into()));
                }
            }
        }
        Ok(())
    }

    /// Shape of the σ² conditional (without a0) for n observations, p coefficients.
    pub fn sigma_shape(&self, n: usize, p: usize) -> f64 {
        let (n, p) = (n as f64, p as f64);
        if matches!(self.family, Family::KuoMallick { .. }) || self.scaling == Scaling::Independent {
            return self.sigma.a0 + n / 2.0;
        }
        let base = if self.legacy_dof {
            match self.family {
                Family::Jeffreys => (n + 2.0) / 2.0,
                Family::GroupLasso { .. } | Family::ElasticNet { .. } | Family::Gdp { .. } | Family::FusedLasso { .. } => {
                    (n - 1.0 + p) / 2.0
                }
                _ => (n + p) / 2.0,
            }
        } else {
            (n + p) / 2.0
        };
        self.sigma.a0 + base
    }
}
