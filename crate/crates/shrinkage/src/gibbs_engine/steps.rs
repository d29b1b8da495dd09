use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{LatentState, Problem};
use crate::error::{Error, Result};
use crate::prior_library::{ln_normal0, logistic, update_scales, Family, Inclusion, PriorSpec, Scaling, SsvsVariant};
use crate::sampling_kernels::linalg::{cholesky_jitter, cholesky_lower, solve_lower, solve_upper_t};
use crate::sampling_kernels::{
    beta as beta_draw, inv_gamma, open_unit, sample_mvn_bhattacharya, sample_mvn_direct, sample_mvn_rue, std_normal,
    MvnKernel, PrecisionSystem,
};

const SIGMA2_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Already resolved against (n, p); `Auto` is treated as Rue.
    pub kernel: MvnKernel,
    /// Added to the σ² shape. Nonzero only to corrupt a sampler on purpose.
    pub shape_offset: f64,
}

impl StepOptions {
    pub fn new(kernel: MvnKernel) -> Self {
        Self { kernel, shape_offset: 0.0 }
    }
}

fn is_km(spec: &PriorSpec) -> bool {
    matches!(spec.family, Family::KuoMallick { .. })
}

fn scaled_design(x: &DMatrix<f64>, sigma: f64, mask: Option<&[bool]>) -> DMatrix<f64> {
    let mut xs = x / sigma;
    if let Some(m) = mask {
        for (j, keep) in m.iter().enumerate() {
            if !keep {
                xs.column_mut(j).fill(0.0);
            }
        }
    }
    xs
}

fn draw_from_system<R: Rng + ?Sized>(sys: &PrecisionSystem, kernel: MvnKernel, rng: &mut R) -> Result<DVector<f64>> {
    match kernel {
        MvnKernel::Direct => sample_mvn_direct(sys, rng),
        _ => sample_mvn_rue(sys, rng),
    }
}

/// β | σ², scales, y.
fn draw_beta<R: Rng + ?Sized>(
    state: &LatentState,
    prob: &Problem,
    spec: &PriorSpec,
    kernel: MvnKernel,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let s2 = state.sigma2;
    let p = prob.p();
    if is_km(spec) {
        let g = &state.scales.gamma;
        let d = state.scales.prior_variance(spec);
        if kernel == MvnKernel::Bhattacharya {
            let xs = scaled_design(&prob.x, s2.sqrt(), Some(g));
            return sample_mvn_bhattacharya(&xs, &d, &(&prob.y / s2.sqrt()), rng);
        }
        let gram = DMatrix::from_fn(p, p, |i, j| if g[i] && g[j] { prob.xtx[(i, j)] / s2 } else { 0.0 });
        let rhs = DVector::from_fn(p, |j, _| if g[j] { prob.xty[j] / s2 } else { 0.0 });
        let sys = PrecisionSystem::new(gram, d.map(|v| 1.0 / v), rhs);
        return draw_from_system(&sys, kernel, rng);
    }
    let conj = spec.scaling == Scaling::Conjugate;
    let prior_scale = if conj { s2 } else { 1.0 };
    if let Some((diag, off)) = state.scales.fused_precision(spec) {
        let mut sys = PrecisionSystem::new(&prob.xtx / s2, diag / prior_scale, &prob.xty / s2);
        sys.prior_precision_offdiag = Some(off / prior_scale);
        return draw_from_system(&sys, kernel, rng);
    }
    let d_eff = state.scales.prior_variance(spec) * prior_scale;
    if kernel == MvnKernel::Bhattacharya {
        let sd = s2.sqrt();
        return sample_mvn_bhattacharya(&scaled_design(&prob.x, sd, None), &d_eff, &(&prob.y / sd), rng);
    }
    let sys = PrecisionSystem::new(&prob.xtx / s2, d_eff.map(|v| 1.0 / v), &prob.xty / s2);
    draw_from_system(&sys, kernel, rng)
}

fn draw_sigma2<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    inv_gamma(rng, shape, rate.max(SIGMA2_FLOOR)).max(SIGMA2_FLOOR)
}

/// One three-block sweep: β, then σ², then the prior's auxiliaries.
pub fn step_beta_sigma<R: Rng + ?Sized>(
    state: &mut LatentState,
    prob: &Problem,
    spec: &PriorSpec,
    opts: &StepOptions,
    rng: &mut R,
) -> Result<()> {
    let (n, p) = (prob.n(), prob.p());
    state.beta = draw_beta(state, prob, spec, opts.kernel, rng)?;
    let coef = state.coefficients(spec);
    let psi = (&prob.y - &prob.x * &coef).norm_squared();
    let mut rate = spec.sigma.b0 + psi / 2.0;
    if spec.scaling == Scaling::Conjugate && !is_km(spec) {
        rate += state.scales.quad_form(spec, &state.beta) / 2.0;
    }
    let shape = spec.sigma_shape(n, p) + opts.shape_offset;
    state.sigma2 = draw_sigma2(shape, rate, rng);
    if is_km(spec) {
        step_kuo_mallick_indicators(state, prob, spec, rng);
        Ok(())
    } else {
        update_scales(spec, &mut state.scales, &state.beta, state.sigma2, rng)
    }
}

/// (β, σ²) in one block: σ² from its β-marginal, then β | σ²; then the auxiliaries.
/// Conjugate scaling only.
pub fn step_scalable<R: Rng + ?Sized>(
    state: &mut LatentState,
    prob: &Problem,
    spec: &PriorSpec,
    opts: &StepOptions,
    rng: &mut R,
) -> Result<()> {
    if spec.scaling != Scaling::Conjugate || is_km(spec) {
        return Err(Error::Config("scalable block requires conjugate scaling".into()));
    }
    let (n, p) = (prob.n(), prob.p());
    // integrating β out removes the p/2 that β contributes to the shape
    let shape = spec.sigma_shape(n, p) - p as f64 / 2.0 + opts.shape_offset;
    let fused = state.scales.fused_precision(spec);
    if opts.kernel == MvnKernel::Bhattacharya && fused.is_none() {
        let d = state.scales.prior_variance(spec);
        // y'(I - XVX')y = y'(I + XDX')⁻¹y
        let mut xd = prob.x.clone();
        for j in 0..p {
            xd.column_mut(j).scale_mut(d[j]);
        }
        let mut m = &xd * prob.x.transpose();
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let l = cholesky_lower(&m).map_err(|pivot| Error::InnerSystemSingular { pivot })?;
        let quad = solve_lower(&l, &prob.y).norm_squared();
        state.sigma2 = draw_sigma2(shape, spec.sigma.b0 + quad / 2.0, rng);
        let sd = state.sigma2.sqrt();
        state.beta = sample_mvn_bhattacharya(
            &scaled_design(&prob.x, sd, None),
            &(d * state.sigma2),
            &(&prob.y / sd),
            rng,
        )?;
    } else {
        let mut q = prob.xtx.clone();
        match fused {
            Some((diag, off)) => {
                for j in 0..p {
                    q[(j, j)] += diag[j];
                }
                for j in 0..off.len() {
                    q[(j, j + 1)] += off[j];
                    q[(j + 1, j)] += off[j];
                }
            }
            None => {
                let d = state.scales.prior_variance(spec);
                for j in 0..p {
                    q[(j, j)] += 1.0 / d[j];
                }
            }
        }
        let l = cholesky_jitter(&q)?;
        let w = solve_lower(&l, &prob.xty);
        let quad = (prob.yty - w.norm_squared()).max(0.0);
        state.sigma2 = draw_sigma2(shape, spec.sigma.b0 + quad / 2.0, rng);
        let sd = state.sigma2.sqrt();
        let z = DVector::from_fn(p, |_, _| std_normal(rng));
        state.beta = solve_upper_t(&l, &(w + z * sd));
    }
    update_scales(spec, &mut state.scales, &state.beta, state.sigma2, rng)
}

/// Kuo-Mallick indicators given β: each γ_j from its likelihood ratio with the
/// residual updated in place, in a fresh random order.
pub fn step_kuo_mallick_indicators<R: Rng + ?Sized>(
    state: &mut LatentState,
    prob: &Problem,
    spec: &PriorSpec,
    rng: &mut R,
) {
    let pj = match spec.family {
        Family::KuoMallick { pj, .. } => pj,
        _ => return,
    };
    let p = prob.p();
    let coef = state.coefficients(spec);
    let mut r = &prob.y - &prob.x * &coef;
    let prior_logit = pj.ln() - (1.0 - pj).ln();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    for j in order {
        let b = state.beta[j];
        let xj = prob.x.column(j);
        if state.scales.gamma[j] {
            r.axpy(b, &xj, 1.0);
        }
        let on = if pj >= 1.0 {
            true
        } else if pj <= 0.0 {
            false
        } else {
            let lo = prior_logit + (2.0 * b * xj.dot(&r) - b * b * prob.col_sq[j]) / (2.0 * state.sigma2);
            open_unit(rng) < logistic(lo)
        };
        state.scales.gamma[j] = on;
        if on {
            r.axpy(-b, &xj, 1.0);
        }
    }
}

/// Skinny Gibbs for a fixed spike-and-slab prior on standardised columns.
/// Always uses independent scaling: the slab and spike variances are not
/// multiplied by σ².
///
/// The inactive block replaces X_I'X_I by its diagonal n·I and drops the
/// cross terms with X_A, so β_I | · ~ N(0, (n/σ² + 1/τ₀²)⁻¹) coordinatewise.
/// Moving j between the blocks then changes the likelihood by
/// exp{β_j x_j'r_{-j}/σ² - β_j²(x_j'x_j - n)/(2σ²)}, r_{-j} the active-block
/// residual without j; that factor is the compensation term in the odds.
pub fn step_skinny<R: Rng + ?Sized>(
    state: &mut LatentState,
    prob: &Problem,
    spec: &PriorSpec,
    opts: &StepOptions,
    rng: &mut R,
) -> Result<()> {
    let (tau0_2, tau1_2, inclusion) = match &spec.family {
        Family::Ssvs { variant: SsvsVariant::Fixed { tau0_2, tau1_2 }, inclusion } => (*tau0_2, *tau1_2, *inclusion),
        _ => return Err(Error::Config("skinny Gibbs needs a fixed spike-and-slab prior".into())),
    };
    let (n, p) = (prob.n(), prob.p());
    let nf = n as f64;
    let s2 = state.sigma2;
    let active: Vec<usize> = (0..p).filter(|&j| state.scales.gamma[j]).collect();
    let k = active.len();
    if k > 0 {
        let beta_a = if opts.kernel == MvnKernel::Bhattacharya || k > n {
            let xa = prob.x.select_columns(&active) / s2.sqrt();
            sample_mvn_bhattacharya(&xa, &DVector::from_element(k, tau1_2), &(&prob.y / s2.sqrt()), rng)?
        } else {
            let gram = DMatrix::from_fn(k, k, |a, b| prob.xtx[(active[a], active[b])] / s2);
            let rhs = DVector::from_fn(k, |a, _| prob.xty[active[a]] / s2);
            let sys = PrecisionSystem::new(gram, DVector::from_element(k, 1.0 / tau1_2), rhs);
            draw_from_system(&sys, opts.kernel, rng)?
        };
        for (a, &j) in active.iter().enumerate() {
            state.beta[j] = beta_a[a];
        }
    }
    let sd_i = (1.0 / (nf / s2 + 1.0 / tau0_2)).sqrt();
    for j in 0..p {
        if !state.scales.gamma[j] {
            state.beta[j] = sd_i * std_normal(rng);
        }
    }
    // residual of the active block
    let mut r = prob.y.clone();
    for &j in &active {
        r.axpy(-state.beta[j], &prob.x.column(j), 1.0);
    }
    state.sigma2 = draw_sigma2(
        spec.sigma.a0 + nf / 2.0 + opts.shape_offset,
        spec.sigma.b0 + r.norm_squared() / 2.0,
        rng,
    );
    let s2 = state.sigma2;
    let theta = state.scales.global.theta;
    let prior_logit = theta.ln() - (1.0 - theta).ln();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    for j in order {
        let b = state.beta[j];
        let xj = prob.x.column(j);
        if state.scales.gamma[j] {
            r.axpy(b, &xj, 1.0);
        }
        let lo = prior_logit + ln_normal0(b, tau1_2) - ln_normal0(b, tau0_2) + b * xj.dot(&r) / s2
            - b * b * (prob.col_sq[j] - nf) / (2.0 * s2);
        let on = open_unit(rng) < logistic(lo);
        state.scales.gamma[j] = on;
        if on {
            r.axpy(-b, &xj, 1.0);
        }
    }
    if let Inclusion::Beta { c, d } = inclusion {
        let kk = state.scales.gamma.iter().filter(|g| **g).count() as f64;
        state.scales.global.theta = beta_draw(rng, c + kk, d + p as f64 - kk);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior_library::{Rate, ScaleState};
    use crate::sampling_kernels::RngStream;

    fn toy(n: usize, p: usize, seed: u64) -> Problem {
        let mut rng = RngStream::new(seed, 99).rng();
        let x = DMatrix::from_fn(n, p, |_, _| std_normal(&mut rng));
        let y = DVector::from_fn(n, |i, _| 1.5 * x[(i, 0)] + std_normal(&mut rng));
        Problem::new(x, y)
    }

    #[test]
    fn flat_prior_mean_is_ols() {
        let prob = toy(40, 3, 1);
        let spec = PriorSpec::new(Family::StudentT { rho: 1.0, xi: 1.0 });
        let mut st = LatentState::init(&spec, 3, 1.0);
        st.scales.tau2.fill(1e11);
        let ols = prob.xtx.clone().try_inverse().unwrap() * &prob.xty;
        let mut rng = RngStream::new(2, 0).rng();
        let m = 4000;
        let mut acc = DVector::zeros(3);
        for _ in 0..m {
            acc += draw_beta(&st, &prob, &spec, MvnKernel::Rue, &mut rng).unwrap();
        }
        acc /= m as f64;
        assert!((acc - ols).amax() < 0.01);
    }

    #[test]
    fn kernels_agree_in_step() {
        let prob = toy(30, 5, 3);
        let spec = PriorSpec::named("horseshoe_ms").unwrap();
        let mut means = Vec::new();
        for kernel in [MvnKernel::Direct, MvnKernel::Rue, MvnKernel::Bhattacharya] {
            let mut st = LatentState::init(&spec, 5, 1.0);
            st.scales = ScaleState::init(&spec, 5);
            let mut rng = RngStream::new(4, 0).rng();
            let mut acc = DVector::zeros(5);
            for _ in 0..3000 {
                acc += draw_beta(&st, &prob, &spec, kernel, &mut rng).unwrap();
            }
            means.push(acc / 3000.0);
        }
        assert!((&means[0] - &means[1]).amax() < 0.03);
        assert!((&means[0] - &means[2]).amax() < 0.03);
    }

    #[test]
    fn km_zero_column_keeps_prior_odds() {
        let mut prob = toy(20, 2, 5);
        prob.x.column_mut(1).fill(0.0);
        let x = prob.x.clone();
        let y = prob.y.clone();
        let prob = Problem::new(x, y);
        let spec = PriorSpec::new(Family::KuoMallick { tau2: 10.0, pj: 0.3 });
        let mut st = LatentState::init(&spec, 2, 1.0);
        st.beta = DVector::from_vec(vec![1.0, 2.0]);
        let mut rng = RngStream::new(6, 0).rng();
        let m = 20_000;
        let mut on = 0;
        for _ in 0..m {
            step_kuo_mallick_indicators(&mut st, &prob, &spec, &mut rng);
            on += st.scales.gamma[1] as usize;
        }
        let f = on as f64 / m as f64;
        assert!((f - 0.3).abs() < 0.015, "{f}");
    }

    #[test]
    fn km_certain_inclusion() {
        let prob = toy(20, 2, 7);
        let spec = PriorSpec::new(Family::KuoMallick { tau2: 10.0, pj: 1.0 });
        let mut st = LatentState::init(&spec, 2, 1.0);
        st.beta = DVector::from_vec(vec![0.0, 100.0]);
        let mut rng = RngStream::new(8, 0).rng();
        for _ in 0..100 {
            step_kuo_mallick_indicators(&mut st, &prob, &spec, &mut rng);
            assert!(st.scales.gamma.iter().all(|g| *g));
        }
    }

    #[test]
    fn scalable_rate_is_projection_residual() {
        // y orthogonal to the columns, flat prior: rate → y'y/2
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        let prob = Problem::new(x, y);
        let spec = PriorSpec::new(Family::LassoPc { lambda2: Rate::Fixed(1.0) });
        let mut st = LatentState::init(&spec, 1, 1.0);
        st.scales.tau2.fill(1e11);
        let mut q = prob.xtx.clone();
        q[(0, 0)] += 1e-11;
        let l = cholesky_jitter(&q).unwrap();
        let w = solve_lower(&l, &prob.xty);
        assert!((prob.yty - w.norm_squared() - 4.0).abs() < 1e-9);
        let mut rng = RngStream::new(9, 0).rng();
        let opts = StepOptions::new(MvnKernel::Rue);
        step_scalable(&mut st, &prob, &spec, &opts, &mut rng).unwrap();
        assert!(st.sigma2 > 0.0);
    }

    #[test]
    fn skinny_all_active_matches_independent_posterior() {
        let prob = toy(50, 3, 10);
        let spec = PriorSpec::new(Family::Ssvs {
            variant: SsvsVariant::Fixed { tau0_2: 0.01, tau1_2: 4.0 },
            inclusion: Inclusion::Fixed(0.999_999),
        });
        // with γ = 1 the active block is the independent-prior conditional with D = τ₁²I
        let mut st = LatentState::init(&spec, 3, 1.0);
        let v = (&prob.xtx / st.sigma2 + DMatrix::identity(3, 3) / 4.0).try_inverse().unwrap();
        let mean = &v * &prob.xty / st.sigma2;
        let mut rng = RngStream::new(11, 0).rng();
        let opts = StepOptions::new(MvnKernel::Rue);
        let m = 4000;
        let mut acc = DVector::zeros(3);
        for _ in 0..m {
            st.sigma2 = 1.0;
            st.scales.gamma = vec![true; 3];
            step_skinny(&mut st, &prob, &spec, &opts, &mut rng).unwrap();
            acc += &st.beta;
        }
        acc /= m as f64;
        assert!((acc - mean).amax() < 0.01);
    }
}
