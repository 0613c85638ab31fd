//! Parameter recovery from return series and calibration of the
//! comparison models: rolling-window variance, the equilibrium-variance
//! and feedback-parameter estimators, maximum-likelihood distribution
//! fits with chi-square GOF, GARCH(1,1) quasi-MLE, and the power-law ACF
//! fit.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, InverseGamma, LogNormal};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::opt::{golden_section_min, NelderMead};
use crate::sampling::RngState;
use crate::stats::{self, GofResult};

pub const DEFAULT_WINDOW: usize = 42;

/// Rolling-window variance estimates aligned to a return series. Defined
/// only where the full centered window fits.
#[derive(Debug, Clone)]
pub struct VarianceSeries {
    values: Vec<f64>,
    /// Index into the source return series of the first estimate's center.
    start: usize,
    window: usize,
}

impl VarianceSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index interval of the source return series the estimates cover.
    pub fn valid_range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.values.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// Centered rolling-window variance: for window `w` (even),
/// `var_t = sum_{i=-w/2}^{w/2-1} (r_{t+i} - mu_hat)^2 / w` where `mu_hat`
/// is the full-sample mean. The divisor is the window size, not size-1.
pub fn rolling_variance(returns: &[f64], window: usize) -> Result<VarianceSeries> {
    if window < 2 {
        return Err(Error::Domain(format!("window must be >= 2, got {window}")));
    }
    if !window.is_multiple_of(2) {
        return Err(Error::Domain(format!("window must be even for centered alignment, got {window}")));
    }
    if returns.len() < window {
        return Err(Error::InsufficientData(format!(
            "need at least {window} returns for a window of {window}, got {}",
            returns.len()
        )));
    }
    let mu = stats::mean(returns);
    // prefix sums of squared deviations
    let mut prefix = Vec::with_capacity(returns.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &r in returns {
        let d = r - mu;
        acc += d * d;
        prefix.push(acc);
    }
    let values: Vec<f64> = (0..=returns.len() - window)
        .map(|i| (prefix[i + window] - prefix[i]) / window as f64)
        .collect();
    Ok(VarianceSeries { values, start: window / 2, window })
}

/// Equilibrium variance estimator: the inverse of the mean inverse
/// variance.
pub fn estimate_sigma0(vars: &VarianceSeries) -> Result<f64> {
    if vars.values.iter().any(|v| *v <= 0.0) {
        return Err(Error::Data(
            "variance series contains non-positive entries; sigma0^2 estimator is degenerate".into(),
        ));
    }
    let mean_inv = stats::mean(&vars.values.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    Ok(1.0 / mean_inv)
}

/// Outcome of the least-squares feedback-parameter search.
#[derive(Debug, Clone, Serialize)]
pub struct BEstimate {
    pub b: f64,
    pub objective: f64,
    /// All local minima found on the coarse log-B grid (length 1 when the
    /// objective is unimodal, the usual case).
    pub local_minima: Vec<f64>,
}

/// Least-squares estimator of `B`: minimizes
/// `sum_t (1/var_t - (1 + B s0/var_{t-1}) / ((1+B) s0))^2`
/// by golden-section search on log B over [1, 1e6], tolerance 1e-3 in
/// log B. A coarse grid scan locates the bracket(s); multiple local
/// minima are all reported, the global one is returned.
pub fn estimate_b(vars: &VarianceSeries, sigma0_sq: f64) -> Result<BEstimate> {
    if vars.values.len() < 2 {
        return Err(Error::InsufficientData("B estimator needs at least 2 variance estimates".into()));
    }
    if !sigma0_sq.is_finite() || sigma0_sq <= 0.0 {
        return Err(Error::Domain(format!("sigma0_sq must be finite and > 0, got {sigma0_sq}")));
    }
    let inv: Vec<f64> = vars.values.iter().map(|v| 1.0 / v).collect();
    let objective = |log_b: f64| -> f64 {
        let b = log_b.exp();
        let mut sum = 0.0;
        for t in 1..inv.len() {
            let pred = (1.0 + b * sigma0_sq * inv[t - 1]) / ((1.0 + b) * sigma0_sq);
            let e = inv[t] - pred;
            sum += e * e;
        }
        sum
    };

    let (lo, hi) = (0.0f64, 1e6f64.ln());
    let grid_n = 200;
    let grid: Vec<f64> =
        (0..=grid_n).map(|i| lo + (hi - lo) * i as f64 / grid_n as f64).collect();
    let fg: Vec<f64> = grid.iter().map(|&x| objective(x)).collect();

    // interior local minima on the grid, plus the endpoints if they undercut
    let mut brackets = Vec::new();
    for i in 1..grid_n {
        if fg[i] <= fg[i - 1] && fg[i] <= fg[i + 1] {
            brackets.push((grid[i - 1], grid[i + 1]));
        }
    }
    if fg[0] < fg[1] {
        brackets.push((grid[0], grid[1]));
    }
    if fg[grid_n] < fg[grid_n - 1] {
        brackets.push((grid[grid_n - 1], grid[grid_n]));
    }
    if brackets.is_empty() {
        return Err(Error::Numerical("no bracket found for the B objective".into()));
    }

    let mut minima: Vec<(f64, f64)> = brackets
        .iter()
        .map(|&(a, b)| golden_section_min(objective, a, b, 1e-3))
        .collect();
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    minima.dedup_by(|a, b| (a.0 - b.0).abs() < 2e-3);
    let local_minima: Vec<f64> = minima.iter().map(|(x, _)| x.exp()).collect();
    Ok(BEstimate { b: minima[0].0.exp(), objective: minima[0].1, local_minima })
}

/// Distribution family of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistFamily {
    Gamma,
    Lognormal,
    InverseGamma,
    ModelPredicted,
    GarchPredicted,
}

/// Fitted distribution plus its goodness-of-fit outcome.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub family: DistFamily,
    /// Primary convention: shape/rate for gamma and inverse-gamma,
    /// (mu, sigma) for lognormal.
    pub params: Vec<f64>,
    /// Alternate convention (shape/scale) where one exists; Table-style
    /// reports print both since the source convention is ambiguous.
    pub params_alt: Option<Vec<f64>>,
    pub gof: GofResult,
    pub n: usize,
}

fn require_positive(samples: &[f64], what: &str) -> Result<()> {
    if samples.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::Domain(format!("{what} requires strictly positive samples")));
    }
    Ok(())
}

fn require_n(samples: &[f64], min: usize, what: &str) -> Result<()> {
    if samples.len() < min {
        return Err(Error::InsufficientData(format!("{what} needs n >= {min}, got {}", samples.len())));
    }
    Ok(())
}

// trigamma via recurrence + asymptotic series; enough accuracy for Newton
fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv * (1.0 + inv / 2.0 + inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)))
}

/// ML gamma shape: solves `ln a - psi(a) = s` by Newton from the standard
/// closed-form start.
fn gamma_ml_shape(s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::Numerical(format!("degenerate gamma ML statistic s={s}")));
    }
    let mut a = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..100 {
        let f = a.ln() - digamma(a) - s;
        let df = 1.0 / a - trigamma(a);
        let next = a - f / df;
        if !next.is_finite() || next <= 0.0 {
            return Err(Error::Numerical("gamma ML Newton step left the domain".into()));
        }
        if (next - a).abs() < 1e-12 * a {
            return Ok(next);
        }
        a = next;
    }
    Ok(a)
}

fn fit_gamma_on(params_sample: &[f64], gof_sample: &[f64]) -> Result<FitResult> {
    require_n(params_sample, 100, "gamma fit")?;
    require_positive(params_sample, "gamma fit")?;
    let m = stats::mean(params_sample);
    let mean_ln = stats::mean(&params_sample.iter().map(|x| x.ln()).collect::<Vec<_>>());
    let shape = gamma_ml_shape(m.ln() - mean_ln)?;
    let rate = shape / m;
    let dist = GammaDist::new(shape, rate)
        .map_err(|e| Error::Numerical(format!("gamma CDF construction: {e}")))?;
    let gof = stats::chi_square_gof(gof_sample, |x| dist.cdf(x), 2, None)?;
    Ok(FitResult {
        family: DistFamily::Gamma,
        params: vec![shape, rate],
        params_alt: Some(vec![shape, 1.0 / rate]),
        gof,
        n: gof_sample.len(),
    })
}

/// Maximum-likelihood gamma fit with chi-square GOF; samples must be
/// independent. `params` is shape/rate, `params_alt` shape/scale.
pub fn fit_gamma(samples: &[f64]) -> Result<FitResult> {
    fit_gamma_on(samples, samples)
}

/// Gamma fit for an autocorrelated series: parameters from the full
/// series (ML point estimates remain consistent under dependence), GOF on
/// a thinned, near-independent subsample so the chi-square null is valid.
pub fn fit_gamma_dependent(samples: &[f64]) -> Result<FitResult> {
    fit_gamma_on(samples, &stats::thin_to_independent(samples)?)
}

fn fit_lognormal_on(params_sample: &[f64], gof_sample: &[f64]) -> Result<FitResult> {
    require_n(params_sample, 100, "lognormal fit")?;
    require_positive(params_sample, "lognormal fit")?;
    let logs: Vec<f64> = params_sample.iter().map(|x| x.ln()).collect();
    let mu = stats::mean(&logs);
    let sigma = stats::variance(&logs).sqrt();
    if sigma == 0.0 {
        return Err(Error::Numerical("lognormal fit degenerate: zero log-variance".into()));
    }
    let dist = LogNormal::new(mu, sigma)
        .map_err(|e| Error::Numerical(format!("lognormal CDF construction: {e}")))?;
    let gof = stats::chi_square_gof(gof_sample, |x| dist.cdf(x), 2, None)?;
    Ok(FitResult {
        family: DistFamily::Lognormal,
        params: vec![mu, sigma],
        params_alt: None,
        gof,
        n: gof_sample.len(),
    })
}

/// Maximum-likelihood lognormal fit (mu, sigma of the log); samples must
/// be independent.
pub fn fit_lognormal(samples: &[f64]) -> Result<FitResult> {
    fit_lognormal_on(samples, samples)
}

/// Lognormal fit for an autocorrelated series; see [`fit_gamma_dependent`].
pub fn fit_lognormal_dependent(samples: &[f64]) -> Result<FitResult> {
    fit_lognormal_on(samples, &stats::thin_to_independent(samples)?)
}

fn fit_invgamma_on(params_sample: &[f64], gof_sample: &[f64]) -> Result<FitResult> {
    require_n(params_sample, 100, "inverse-gamma fit")?;
    require_positive(params_sample, "inverse-gamma fit")?;
    let recip: Vec<f64> = params_sample.iter().map(|x| 1.0 / x).collect();
    let m = stats::mean(&recip);
    let mean_ln = stats::mean(&recip.iter().map(|x| x.ln()).collect::<Vec<_>>());
    let shape = gamma_ml_shape(m.ln() - mean_ln)?;
    let b = shape / m;
    let dist = InverseGamma::new(shape, b)
        .map_err(|e| Error::Numerical(format!("inverse-gamma CDF construction: {e}")))?;
    let gof = stats::chi_square_gof(gof_sample, |x| dist.cdf(x), 2, None)?;
    Ok(FitResult {
        family: DistFamily::InverseGamma,
        params: vec![shape, b],
        params_alt: Some(vec![shape, 1.0 / b]),
        gof,
        n: gof_sample.len(),
    })
}

/// Maximum-likelihood inverse-gamma fit; samples must be independent. If
/// `X ~ InvGamma(a, b)` then `1/X ~ Gamma(a, rate b)`, so the fit is the
/// gamma ML on reciprocals. `params` is shape and the `b` of the density
/// `b^a/Gamma(a) x^(-a-1) exp(-b/x)`; `params_alt` is shape and `1/b`.
pub fn fit_invgamma(samples: &[f64]) -> Result<FitResult> {
    fit_invgamma_on(samples, samples)
}

/// Inverse-gamma fit for an autocorrelated series; see
/// [`fit_gamma_dependent`].
pub fn fit_invgamma_dependent(samples: &[f64]) -> Result<FitResult> {
    fit_invgamma_on(samples, &stats::thin_to_independent(samples)?)
}

/// The model's predicted normalized inverse-variance sample, produced
/// through the identical rolling-window pipeline applied to empirical
/// data (simulate, rolling variance, sigma0 estimate, beta').
/// Prediction and data must suffer the same estimator distortion.
pub fn model_predicted_beta_dist(
    params: &ModelParams,
    t_len: usize,
    window: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if t_len <= 10 * window {
        return Err(Error::Domain(format!("t_len must be much larger than the window, got {t_len} vs {window}")));
    }
    let path = model::generate_path(params, t_len, params.sigma0_sq(), model::DEFAULT_BURN_IN, rng)?;
    beta_prime_pipeline(path.returns(), window)
}

/// Rolling-window beta' sample from a return series: the shared pipeline
/// applied to empirical and simulated data alike.
pub fn beta_prime_pipeline(returns: &[f64], window: usize) -> Result<Vec<f64>> {
    let vars = rolling_variance(returns, window)?;
    let s0 = estimate_sigma0(&vars)?;
    Ok(vars.values().iter().map(|v| s0 / v).collect())
}

/// GARCH(1,1) parameters: `var_t = omega + alpha r_{t-1}^2 + beta var_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GarchParams {
    omega: f64,
    alpha: f64,
    beta: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !omega.is_finite() || omega <= 0.0 {
            problems.push(format!("omega must be finite and > 0, got {omega}"));
        }
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            problems.push(format!("alpha must be in [0,1), got {alpha}"));
        }
        if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
            problems.push(format!("beta must be in [0,1), got {beta}"));
        }
        if alpha + beta >= 1.0 {
            problems.push(format!("alpha + beta must be < 1 for stationarity, got {}", alpha + beta));
        }
        if problems.is_empty() {
            Ok(Self { omega, alpha, beta })
        } else {
            Err(Error::Domain(problems.join("; ")))
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn stationary_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Gaussian quasi-MLE of GARCH(1,1). The recursion is initialized at the
/// sample variance; the stationarity constraint alpha + beta < 1 is
/// enforced by reparameterization (log omega, logit of the persistence,
/// logit of the alpha share).
pub fn fit_garch11(returns: &[f64]) -> Result<GarchParams> {
    require_n(returns, 1000, "GARCH(1,1) QMLE")?;
    let sample_var = stats::variance(returns);
    if sample_var == 0.0 {
        return Err(Error::Data("constant return series: GARCH variance undefined".into()));
    }
    let r_sq: Vec<f64> = returns.iter().map(|r| r * r).collect();
    let nll = |theta: &[f64]| -> f64 {
        let omega = theta[0].exp();
        let persistence = sigmoid(theta[1]);
        let share = sigmoid(theta[2]);
        let alpha = persistence * share;
        let beta = persistence * (1.0 - share);
        let mut var = sample_var;
        let mut total = 0.0;
        for &r2 in &r_sq {
            total += var.ln() + r2 / var;
            var = omega + alpha * r2 + beta * var;
        }
        total
    };
    // moment-based start: modest ARCH effects with persistence 0.95
    let (alpha0, beta0) = (0.05, 0.90);
    let start = [
        (sample_var * (1.0 - alpha0 - beta0)).ln(),
        logit(alpha0 + beta0),
        logit(alpha0 / (alpha0 + beta0)),
    ];
    let outcome = NelderMead { max_iter: 4000, x_tol: 1e-7, f_tol: 1e-9 }
        .minimize(nll, &start, 0.05)?;
    if !outcome.converged {
        return Err(Error::Numerical(format!(
            "GARCH QMLE did not converge after {} iterations (best nll {:.6e} at {:?})",
            outcome.iterations, outcome.f, outcome.x
        )));
    }
    let omega = outcome.x[0].exp();
    let persistence = sigmoid(outcome.x[1]);
    let share = sigmoid(outcome.x[2]);
    GarchParams::new(omega, persistence * share, persistence * (1.0 - share))
}

/// Simulate a GARCH(1,1) return series with Gaussian innovations.
pub fn simulate_garch(g: &GarchParams, t_len: usize, burn_in: usize, rng: &mut RngState) -> Vec<f64> {
    let mut var = g.stationary_variance();
    let mut prev_r2 = var;
    let mut out = Vec::with_capacity(t_len);
    for t in 0..burn_in + t_len {
        var = g.omega + g.alpha * prev_r2 + g.beta * var;
        let r = var.sqrt() * rng.standard_normal();
        prev_r2 = r * r;
        if t >= burn_in {
            out.push(r);
        }
    }
    out
}

/// GARCH-predicted beta' sample through the shared rolling-window
/// pipeline (not the analytic stationary law, which is not the law of the
/// windowed estimator).
pub fn garch_predicted_beta_dist(
    g: &GarchParams,
    t_len: usize,
    window: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if t_len <= 10 * window {
        return Err(Error::Domain(format!("t_len must be much larger than the window, got {t_len} vs {window}")));
    }
    let returns = simulate_garch(g, t_len, model::DEFAULT_BURN_IN, rng);
    beta_prime_pipeline(&returns, window)
}

/// Power-law fit `C(tau) = c * tau^(-gamma)` to ACF values by least
/// squares in log-log coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// Quadratic coefficient of the log-log residuals; a clearly non-zero
    /// value signals systematic curvature (misspecification, e.g.
    /// exponential decay).
    pub curvature: f64,
    /// Lags actually used; shorter than requested when non-positive ACF
    /// values forced a range reduction.
    pub lags_used: (usize, usize),
    pub range_reduced: bool,
}

/// Fit a power law to ACF values at lags `lag_min..=lag_max` (1-based).
pub fn fit_powerlaw_acf(acf_values: &[f64], lag_min: usize, lag_max: usize) -> Result<PowerLawFit> {
    if lag_min == 0 || lag_max < lag_min || lag_max > acf_values.len() {
        return Err(Error::Domain(format!(
            "invalid lag range [{lag_min}, {lag_max}] for {} ACF values",
            acf_values.len()
        )));
    }
    let mut hi = lag_max;
    // shrink the upper end until all values in range are positive
    while hi >= lag_min && acf_values[lag_min - 1..hi].iter().any(|v| *v <= 0.0) {
        hi -= 1;
    }
    if hi < lag_min + 2 {
        return Err(Error::Numerical(
            "too few positive ACF values in the requested range for a power-law fit".into(),
        ));
    }
    let range_reduced = hi != lag_max;
    let xs: Vec<f64> = (lag_min..=hi).map(|l| (l as f64).ln()).collect();
    let ys: Vec<f64> = (lag_min..=hi).map(|l| acf_values[l - 1].ln()).collect();
    let mx = stats::mean(&xs);
    let my = stats::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    // quadratic term of the residuals via orthogonalized x^2 regressor
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let mx2 = stats::mean(&x2);
    let sx2x: f64 = x2.iter().zip(&xs).map(|(a, x)| (a - mx2) * (x - mx)).sum();
    let ortho: Vec<f64> = x2.iter().zip(&xs).map(|(a, x)| a - mx2 - sx2x / sxx * (x - mx)).collect();
    let soo: f64 = ortho.iter().map(|o| o * o).sum();
    let resid: Vec<f64> =
        xs.iter().zip(&ys).map(|(x, y)| y - intercept - slope * x).collect();
    let curvature = if soo > 0.0 {
        ortho.iter().zip(&resid).map(|(o, r)| o * r).sum::<f64>() / soo
    } else {
        0.0
    };

    Ok(PowerLawFit {
        amplitude: intercept.exp(),
        exponent: -slope,
        curvature,
        lags_used: (lag_min, hi),
        range_reduced,
    })
}
