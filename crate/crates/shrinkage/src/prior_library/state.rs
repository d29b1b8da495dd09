use nalgebra::DVector;

use super::spec::{Family, Inclusion, PriorSpec, SsvsVariant};
use crate::sampling_kernels::TAU2_FLOOR;

/// Auxiliary variables of every family. Fields a family does not use keep
/// their initial value and are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleState {
    /// Local variances τ_j² (slab τ₁ for SSVS, one per group for the group lasso,
    /// τ_j for GDP where it is the variance itself).
    pub tau2: DVector<f64>,
    /// Spike variances τ₀_j² (SSVS).
    pub tau0_2: DVector<f64>,
    /// Difference variances ω_j² (fused lasso), length p-1.
    pub omega2: DVector<f64>,
    /// Dirichlet weights ψ (DL), on the simplex.
    pub psi: DVector<f64>,
    /// Unnormalised Dirichlet auxiliaries T_j (DL).
    pub dl_t: DVector<f64>,
    /// Per-coefficient rates: λ_j (GDP, TPB) or λ_j² (horseshoe).
    pub lambda_j: DVector<f64>,
    /// Horseshoe auxiliaries v_j.
    pub aux_j: DVector<f64>,
    pub global: Globals,
    pub gamma: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Globals {
    /// λ² of lasso/group, λ₁² of fused/EN/SSVS-lasso.
    pub lambda2: f64,
    /// λ₂² of fused, λ₂ of EN.
    pub lambda2_b: f64,
    /// DL global scale λ.
    pub dl_lambda: f64,
    /// Horseshoe global variance τ².
    pub tau2: f64,
    /// Horseshoe auxiliary ξ.
    pub xi: f64,
    /// TPB φ and ω.
    pub phi: f64,
    pub omega: f64,
    /// Inclusion probability θ.
    pub theta: f64,
}

impl ScaleState {
    /// Starting point: every scale 1, every γ_j = 1.
    pub fn init(spec: &PriorSpec, p: usize) -> Self {
        let k = match &spec.family {
            Family::GroupLasso { groups, .. } => groups.iter().max().map_or(0, |m| m + 1),
            _ => p,
        };
        let mut st = Self {
            tau2: DVector::from_element(k, 1.0),
            tau0_2: DVector::from_element(p, 1.0),
            omega2: DVector::from_element(p.saturating_sub(1), 1.0),
            psi: DVector::from_element(p, 1.0 / p.max(1) as f64),
            dl_t: DVector::from_element(p, 1.0),
            lambda_j: DVector::from_element(p, 1.0),
            aux_j: DVector::from_element(p, 1.0),
            global: Globals {
                lambda2: 1.0,
                lambda2_b: 1.0,
                dl_lambda: 1.0,
                tau2: 1.0,
                xi: 1.0,
                phi: 1.0,
                omega: 1.0,
                theta: 0.5,
            },
            gamma: vec![true; p],
        };
        match &spec.family {
            Family::LassoPc { lambda2 } | Family::GroupLasso { lambda2, .. } => st.global.lambda2 = lambda2.initial(),
            Family::FusedLasso { lambda1_2, lambda2_2 } => {
                st.global.lambda2 = lambda1_2.initial();
                st.global.lambda2_b = lambda2_2.initial();
            }
            Family::ElasticNet { lambda1_2, lambda2 } => {
                st.global.lambda2 = lambda1_2.initial();
                st.global.lambda2_b = lambda2.initial();
            }
            Family::Ssvs { variant, inclusion } => {
                if let Inclusion::Fixed(t) = inclusion {
                    st.global.theta = *t;
                }
                match variant {
                    SsvsVariant::Fixed { tau0_2, tau1_2 } => {
                        st.tau0_2.fill(*tau0_2);
                        st.tau2.fill(*tau1_2);
                    }
                    SsvsVariant::Lasso1 { c1, lambda1 } => {
                        st.tau0_2.fill(*c1);
                        st.global.lambda2 = lambda1.initial();
                    }
                    SsvsVariant::Lasso2 { c2, lambda1 } => {
                        st.tau0_2.fill(*c2);
                        st.global.lambda2 = lambda1.initial();
                    }
                    SsvsVariant::Lasso3 { lambda0, .. } => st.tau0_2.fill(2.0 / (lambda0 * lambda0)),
                    // resolved against data before use
                    SsvsVariant::NarisettyHe => {}
                }
            }
            Family::KuoMallick { tau2, pj } => {
                st.tau2.fill(*tau2);
                st.global.theta = *pj;
            }
            _ => {}
        }
        st
    }

    /// Diagonal of the prior covariance D (before any σ² factor).
    pub fn prior_variance(&self, spec: &PriorSpec) -> DVector<f64> {
        let p = self.gamma.len();
        let d = match &spec.family {
            Family::GroupLasso { groups, .. } => DVector::from_fn(p, |j, _| self.tau2[groups[j]]),
            Family::ElasticNet { .. } => DVector::from_fn(p, |j, _| {
                1.0 / (1.0 / self.tau2[j].max(TAU2_FLOOR) + self.global.lambda2_b)
            }),
            Family::DirichletLaplace { .. } => DVector::from_fn(p, |j, _| {
                self.global.dl_lambda.powi(2) * self.tau2[j] * self.psi[j].powi(2)
            }),
            Family::HorseshoeMs | Family::HorseshoeSlice => {
                DVector::from_fn(p, |j, _| self.lambda_j[j] * self.global.tau2)
            }
            Family::Ssvs { .. } => DVector::from_fn(p, |j, _| {
                if self.gamma[j] {
                    self.tau2[j]
                } else {
                    self.tau0_2[j]
                }
            }),
            _ => self.tau2.clone(),
        };
        d.map(|v| v.clamp(TAU2_FLOOR, 1.0 / TAU2_FLOOR))
    }

    /// Prior precision for the fused lasso as (diagonal, first off-diagonal);
    /// `None` for families with a diagonal prior.
    pub fn fused_precision(&self, spec: &PriorSpec) -> Option<(DVector<f64>, DVector<f64>)> {
        if !matches!(spec.family, Family::FusedLasso { .. }) {
            return None;
        }
        let p = self.tau2.len();
        let inv_w = self.omega2.map(|w| 1.0 / w.max(TAU2_FLOOR));
        let diag = DVector::from_fn(p, |j, _| {
            let mut v = 1.0 / self.tau2[j].max(TAU2_FLOOR);
            if j > 0 {
                v += inv_w[j - 1];
            }
            if j + 1 < p {
                v += inv_w[j];
            }
            v
        });
        Some((diag, -inv_w))
    }

    /// β'Σ⁻¹β for the current prior (D diagonal or fused band).
    pub fn quad_form(&self, spec: &PriorSpec, beta: &DVector<f64>) -> f64 {
        if let Some((diag, off)) = self.fused_precision(spec) {
            let mut q = 0.0;
            for j in 0..beta.len() {
                q += diag[j] * beta[j] * beta[j];
            }
            for j in 0..off.len() {
                q += 2.0 * off[j] * beta[j] * beta[j + 1];
            }
            q
        } else {
            let d = self.prior_variance(spec);
            beta.iter().zip(d.iter()).map(|(b, v)| b * b / v).sum()
        }
    }

    /// Positive scalar summaries used in joint-distribution tests, beyond diag(D).
    pub fn globals_for(&self, spec: &PriorSpec) -> Vec<(&'static str, f64)> {
        let g = &self.global;
        match &spec.family {
            Family::LassoPc { .. } | Family::GroupLasso { .. } => vec![("lambda2", g.lambda2)],
            Family::FusedLasso { .. } => {
                let mut v: Vec<(&'static str, f64)> = Vec::new();
                for w in self.omega2.iter() {
                    v.push(("omega2", *w));
                }
                v
            }
            Family::ElasticNet { .. } => vec![("tau2_1", self.tau2[0])],
            Family::Gdp { .. } => vec![("lambda_1", self.lambda_j[0])],
            Family::DirichletLaplace { .. } => vec![("dl_lambda", g.dl_lambda), ("psi_1", self.psi[0])],
            Family::HorseshoeMs | Family::HorseshoeSlice => vec![("tau2", g.tau2)],
            Family::Tpb { .. } => vec![("phi", g.phi), ("omega", g.omega)],
            Family::Ssvs { variant, inclusion } => {
                let mut v: Vec<(&'static str, f64)> = Vec::new();
                if matches!(inclusion, Inclusion::Beta { .. }) {
                    v.push(("theta", g.theta));
                }
                if matches!(variant, SsvsVariant::Lasso1 { .. } | SsvsVariant::Lasso2 { .. }) {
                    v.push(("lambda1_2", g.lambda2));
                }
                v
            }
            _ => Vec::new(),
        }
    }
}
