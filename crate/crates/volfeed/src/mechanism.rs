//! The generating micro-mechanism behind the variance recursion.
//!
//! Market participants observe an exogenous Poisson process with rate
//! `lambda_e` and scale their activity by its estimated rate. With
//! `M(t) = 1 + A / sigma_{t-1}^2` exogenous events per observation
//! window, the waiting time is `tau ~ Gamma(M, lambda_e)`, the rate
//! estimate `M/tau` is inverse-gamma, and the resulting daily variance is
//! `sigma_t^2 = delta^2 N / tau`. Under the equilibrium closure
//! `A = sigma0^2 (lambda_e - 1)`, `delta^2 N = sigma0^2`, this is exactly
//! the model recursion with `lambda_e = B + 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::sampling::{sample_exponential, sample_gamma, GammaParams, RngState};
use crate::stats;

/// Parameters of the rate-estimation mechanism. `delta` and `N` appear
/// only through the product `delta^2 N`, which the equilibrium closure
/// pins to `sigma0^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismParams {
    lambda_e: f64,
    sigma0_sq: f64,
    a_coeff: f64,
    delta_sq_n: f64,
}

impl MechanismParams {
    /// Mechanism with the equilibrium closure `A = sigma0^2 (lambda_e - 1)`.
    pub fn new(lambda_e: f64, sigma0_sq: f64) -> Result<Self> {
        if !lambda_e.is_finite() || lambda_e <= 1.0 {
            return Err(Error::Domain(format!("lambda_e must be finite and > 1, got {lambda_e}")));
        }
        if !sigma0_sq.is_finite() || sigma0_sq <= 0.0 {
            return Err(Error::Domain(format!("sigma0_sq must be finite and > 0, got {sigma0_sq}")));
        }
        Ok(Self { lambda_e, sigma0_sq, a_coeff: sigma0_sq * (lambda_e - 1.0), delta_sq_n: sigma0_sq })
    }

    /// Mechanism equivalent to the given model: `lambda_e = B + 1`.
    pub fn from_model(p: &ModelParams) -> Self {
        // closure invariants hold by construction; B > 1 implies lambda_e > 2
        Self::new(p.b() + 1.0, p.sigma0_sq()).expect("valid model params")
    }

    /// Mechanism with the feedback coefficient still tied to the model's
    /// `B` (`A = B sigma0^2`) but an arbitrary exogenous rate. For
    /// `lambda_e != B + 1` this deliberately breaks the equilibrium
    /// closure; used for reduction sensitivity checks.
    pub fn with_rate(p: &ModelParams, lambda_e: f64) -> Result<Self> {
        if !lambda_e.is_finite() || lambda_e <= 1.0 {
            return Err(Error::Domain(format!("lambda_e must be finite and > 1, got {lambda_e}")));
        }
        Ok(Self {
            lambda_e,
            sigma0_sq: p.sigma0_sq(),
            a_coeff: p.sigma0_sq() * p.b(),
            delta_sq_n: p.sigma0_sq(),
        })
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn a_coeff(&self) -> f64 {
        self.a_coeff
    }

    pub fn delta_sq_n(&self) -> f64 {
        self.delta_sq_n
    }
}

/// One mechanism step, with every intermediate quantity exposed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MechanismStep {
    /// Exogenous events per observation window, `M = 1 + A / prev_var`.
    pub m: f64,
    /// Elapsed time for those events, `tau ~ Gamma(M, lambda_e)`, days.
    pub tau: f64,
    /// Estimated exogenous rate `M / tau`.
    pub lambda_hat_e: f64,
    /// Daily price-fluctuation rate under the `delta^2 = 1` normalization
    /// (`delta` and `N` are not separately identifiable), so numerically
    /// `lambda_t = delta_sq_n / tau = var`.
    pub lambda_t: f64,
    /// Resulting daily variance `sigma_t^2 = delta^2 N / tau`.
    pub var: f64,
}

fn check_prev(prev_var: f64) -> Result<()> {
    if !prev_var.is_finite() || prev_var <= 0.0 {
        return Err(Error::Domain(format!("previous variance must be finite and > 0, got {prev_var}")));
    }
    Ok(())
}

/// One step of the mechanism with gamma-distributed waiting time
/// (the generic form; `M` is non-integer).
pub fn mech_step(prev_var: f64, p: &MechanismParams, rng: &mut RngState) -> Result<MechanismStep> {
    check_prev(prev_var)?;
    let m = 1.0 + p.a_coeff / prev_var;
    let tau = sample_gamma(&GammaParams::new(m, p.lambda_e)?, rng);
    Ok(MechanismStep {
        m,
        tau,
        lambda_hat_e: m / tau,
        lambda_t: p.delta_sq_n / tau,
        var: p.delta_sq_n / tau,
    })
}

/// Demonstration mode: rounds `M` to the nearest integer >= 1 and draws
/// `tau` as that many exponential interarrival times.
pub fn mech_step_integer_events(
    prev_var: f64,
    p: &MechanismParams,
    rng: &mut RngState,
) -> Result<MechanismStep> {
    check_prev(prev_var)?;
    let m_int = (1.0 + p.a_coeff / prev_var).round().max(1.0);
    let mut tau = 0.0;
    for _ in 0..m_int as u64 {
        tau += sample_exponential(p.lambda_e, rng)?;
    }
    Ok(MechanismStep {
        m: m_int,
        tau,
        lambda_hat_e: m_int / tau,
        lambda_t: p.delta_sq_n / tau,
        var: p.delta_sq_n / tau,
    })
}

/// Iterate the mechanism chain and return the stationary variance series.
pub fn run_chain(
    p: &MechanismParams,
    t_len: usize,
    burn_in: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let mut var = p.sigma0_sq;
    let mut out = Vec::with_capacity(t_len);
    for t in 0..burn_in + t_len {
        let step = mech_step(var, p, rng)?;
        var = step.var;
        if t >= burn_in {
            out.push(var);
        }
    }
    Ok(out)
}

/// Equivalence report between the mechanism chain and the reduced model
/// recursion.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub lambda_e: f64,
    pub b: f64,
    /// Thinning stride applied before the KS test; the variance chain has
    /// an autocorrelation time of order B, so raw chain samples are far
    /// from independent and would invalidate the KS null.
    pub thin: usize,
    pub n_thinned: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Max absolute difference of the |r| ACF over lags 1..=50.
    pub acf_abs_diff_max: f64,
}

/// Run both the mechanism chain and the model recursion for `t_len`
/// stationary steps and compare their variance distributions (two-sample
/// KS on thinned samples) and their |r| autocorrelations.
///
/// `lambda_e` defaults to `B + 1` (the exact reduction); overriding it
/// keeps `A = B sigma0^2` and changes only the rate, deliberately
/// breaking the closure.
pub fn verify_reduction(
    model_params: &ModelParams,
    t_len: usize,
    lambda_e: Option<f64>,
    rng: &RngState,
) -> Result<ReductionReport> {
    let mech_params = match lambda_e {
        Some(rate) => MechanismParams::with_rate(model_params, rate)?,
        None => MechanismParams::from_model(model_params),
    };
    let burn_in = model::DEFAULT_BURN_IN;

    let mut rng_model = rng.substream(0);
    let mut rng_mech = rng.substream(1);

    let model_path =
        model::generate_path(model_params, t_len, model_params.sigma0_sq(), burn_in, &mut rng_model)?;
    let mech_vars = run_chain(&mech_params, t_len, burn_in, &mut rng_mech)?;

    let thin = (5.0 * (model_params.b() + 1.0)).ceil() as usize;
    let model_thin: Vec<f64> = model_path.variance().iter().copied().step_by(thin).collect();
    let mech_thin: Vec<f64> = mech_vars.iter().copied().step_by(thin).collect();
    let ks = stats::ks_two_sample(&model_thin, &mech_thin)?;

    // returns for the mechanism chain, one normal per step
    let mech_abs_r: Vec<f64> =
        mech_vars.iter().map(|v| (v.sqrt() * rng_mech.standard_normal()).abs()).collect();
    let model_abs_r: Vec<f64> = model_path.returns().iter().map(|r| r.abs()).collect();
    let acf_model = stats::acf(&model_abs_r, 50)?;
    let acf_mech = stats::acf(&mech_abs_r, 50)?;
    let acf_abs_diff_max = acf_model
        .values
        .iter()
        .zip(&acf_mech.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    Ok(ReductionReport {
        lambda_e: mech_params.lambda_e,
        b: model_params.b(),
        thin,
        n_thinned: model_thin.len(),
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        acf_abs_diff_max,
    })
}
