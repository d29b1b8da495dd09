//! Gaussian posterior samplers for N(Q⁻¹ rhs, Q⁻¹) with Q = gram + prior precision.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::linalg::{cholesky_jitter, cholesky_lower, chol_inverse, solve_lower, solve_upper_t};
use super::std_normal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvnKernel {
    Direct,
    Rue,
    Bhattacharya,
    Auto,
}

impl MvnKernel {
    /// Resolve `Auto`: the Woodbury sampler pays off once p exceeds n.
    pub fn resolve(self, n: usize, p: usize) -> MvnKernel {
        match self {
            MvnKernel::Auto if p > n => MvnKernel::Bhattacharya,
            MvnKernel::Auto => MvnKernel::Rue,
            k => k,
        }
    }
}

impl std::str::FromStr for MvnKernel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "direct" => Ok(MvnKernel::Direct),
            "rue" => Ok(MvnKernel::Rue),
            "bhattacharya" => Ok(MvnKernel::Bhattacharya),
            "auto" => Ok(MvnKernel::Auto),
            other => Err(format!("unknown kernel '{other}' (direct, rue, bhattacharya, auto)")),
        }
    }
}

/// Precision-form Gaussian: Q = gram + diag(prior_precision_diag) (+ a symmetric
/// off-diagonal band for the fused lasso), mean Q⁻¹ rhs.
#[derive(Debug, Clone)]
pub struct PrecisionSystem {
    pub gram: DMatrix<f64>,
    pub prior_precision_diag: DVector<f64>,
    /// Optional first off-diagonal of the prior precision (length p-1).
    pub prior_precision_offdiag: Option<DVector<f64>>,
    pub rhs: DVector<f64>,
}

impl PrecisionSystem {
    pub fn new(gram: DMatrix<f64>, prior_precision_diag: DVector<f64>, rhs: DVector<f64>) -> Self {
        Self {
            gram,
            prior_precision_diag,
            prior_precision_offdiag: None,
            rhs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.gram.nrows();
        if self.gram.ncols() != p || self.prior_precision_diag.len() != p || self.rhs.len() != p {
            return Err(Error::Domain("precision system dimensions disagree".into()));
        }
        if let Some(off) = &self.prior_precision_offdiag {
            if off.len() + 1 != p.max(1) {
                return Err(Error::Domain("off-diagonal band must have length p-1".into()));
            }
        }
        if self.prior_precision_diag.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::Domain("prior precision must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn precision(&self) -> DMatrix<f64> {
        let mut q = self.gram.clone();
        for i in 0..q.nrows() {
            q[(i, i)] += self.prior_precision_diag[i];
        }
        if let Some(off) = &self.prior_precision_offdiag {
            for i in 0..off.len() {
                q[(i, i + 1)] += off[i];
                q[(i + 1, i)] += off[i];
            }
        }
        q
    }

    fn factor(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        cholesky_jitter(&self.precision())
    }
}

fn normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| std_normal(rng))
}

/// Textbook route: factor Q = LL', form V = Q⁻¹ from the factor, mean V·rhs,
/// noise L'⁻¹z.
pub fn sample_mvn_direct<R: Rng + ?Sized>(sys: &PrecisionSystem, rng: &mut R) -> Result<DVector<f64>> {
    let l = sys.factor()?;
    let v = chol_inverse(&l);
    let mean = &v * &sys.rhs;
    let z = normal_vec(rng, sys.rhs.len());
    Ok(mean + solve_upper_t(&l, &z))
}

/// Rue (2001): only triangular solves against the factor of Q.
pub fn sample_mvn_rue<R: Rng + ?Sized>(sys: &PrecisionSystem, rng: &mut R) -> Result<DVector<f64>> {
    let l = sys.factor()?;
    let v = solve_lower(&l, &sys.rhs);
    let mu = solve_upper_t(&l, &v);
    let z = normal_vec(rng, sys.rhs.len());
    let u = solve_upper_t(&l, &z);
    Ok(mu + u)
}

/// Bhattacharya, Chakraborty & Mallick (2016): target N(VX'y, V) with
/// V = (X'X + D⁻¹)⁻¹; only an n×n system is factored.
pub fn sample_mvn_bhattacharya<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    d_diag: &DVector<f64>,
    y: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    if d_diag.len() != p || y.len() != n {
        return Err(Error::Domain("bhattacharya dimensions disagree".into()));
    }
    let eta = DVector::from_fn(p, |j, _| d_diag[j].sqrt() * std_normal(rng));
    let delta = normal_vec(rng, n);
    let v = x * &eta + delta;
    // M = X D X' + I
    let mut xd = x.clone();
    for j in 0..p {
        xd.column_mut(j).scale_mut(d_diag[j]);
    }
    let mut m = &xd * x.transpose();
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let l = match cholesky_lower(&m) {
        Ok(l) => l,
        Err(_) => {
            let jitter = 1e-10 * m.trace() / n as f64;
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            cholesky_lower(&m).map_err(|pivot| Error::InnerSystemSingular { pivot })?
        }
    };
    let w = solve_upper_t(&l, &solve_lower(&l, &(y - v)));
    Ok(eta + xd.transpose() * w)
}
