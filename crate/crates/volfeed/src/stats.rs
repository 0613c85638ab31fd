//! Shared statistical kernels: autocorrelation, histograms, empirical
//! survival functions, chi-square goodness-of-fit with equal-probability
//! binning, two-sample / one-sample Kolmogorov–Smirnov, reference
//! densities, and moment summaries.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Sample excess kurtosis (fourth standardized moment minus 3).
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64> {
    if xs.len() < 4 {
        return Err(Error::InsufficientData("kurtosis needs at least 4 samples".into()));
    }
    let m = mean(xs);
    let n = xs.len() as f64;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(Error::Numerical("kurtosis undefined for a constant series".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Sample autocorrelation function at lags 1..=max_lag.
#[derive(Debug, Clone)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub n: usize,
    /// Approximate white-noise band: +-1.96/sqrt(n).
    pub confidence_band: f64,
}

/// Biased (denominator n) sample ACF with a single global mean subtraction.
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if max_lag == 0 || max_lag >= n / 4 {
        return Err(Error::Domain(format!("max_lag must be in 1..len/4, got {max_lag} for n={n}")));
    }
    let m = mean(series);
    let c0: f64 = series.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return Err(Error::Numerical("autocorrelation undefined for a constant series".into()));
    }
    let mut values = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let c: f64 = series[lag..]
            .iter()
            .zip(series.iter())
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64;
        values.push(c / c0);
    }
    Ok(AcfResult {
        lags: (1..=max_lag).collect(),
        values,
        n,
        confidence_band: 1.96 / (n as f64).sqrt(),
    })
}

/// Integrated autocorrelation time, 0.5 + sum of the ACF up to the first
/// non-positive value (truncated at n/4). Returns at least 0.5.
pub fn integrated_autocorr_time(series: &[f64]) -> Result<f64> {
    let max_lag = (series.len() / 4).saturating_sub(1).clamp(1, 2000);
    let r = acf(series, max_lag)?;
    let mut tau = 0.5;
    for v in r.values {
        if v <= 0.0 {
            break;
        }
        tau += v;
    }
    Ok(tau)
}

/// Keep every k-th element so the result is approximately independent,
/// with k derived from the integrated autocorrelation time.
pub fn thin_to_independent(series: &[f64]) -> Result<Vec<f64>> {
    let tau = integrated_autocorr_time(series)?;
    let k = (2.0 * tau).ceil().max(1.0) as usize;
    Ok(series.iter().copied().step_by(k).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Counts,
    Density,
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub normalization: Normalization,
}

impl Histogram {
    /// Histogram over equal-width bins spanning the sample range.
    pub fn from_samples(samples: &[f64], bins: usize, normalization: Normalization) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::InsufficientData("histogram needs samples and bins > 0".into()));
        }
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| lo + span * i as f64 / bins as f64).collect();
        Self::with_edges(samples, edges, normalization)
    }

    /// Logarithmically spaced bins for semilog/log-log presentation.
    /// Requires strictly positive samples.
    pub fn log_binned(samples: &[f64], bins: usize, normalization: Normalization) -> Result<Self> {
        if samples.iter().any(|x| *x <= 0.0) {
            return Err(Error::Domain("log binning requires strictly positive samples".into()));
        }
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min).ln();
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln();
        let span = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> =
            (0..=bins).map(|i| (lo + span * i as f64 / bins as f64).exp()).collect();
        Self::with_edges(samples, edges, normalization)
    }

    pub fn with_edges(samples: &[f64], edges: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("histogram edges must be strictly increasing".into()));
        }
        let mut counts = vec![0u64; edges.len() - 1];
        for &x in samples {
            if x < edges[0] || x > *edges.last().unwrap() {
                continue;
            }
            // partition_point: first edge > x, clamped so the top edge is inclusive
            let last = counts.len() - 1;
            let idx = edges.partition_point(|e| *e <= x).min(counts.len());
            counts[idx.saturating_sub(1).min(last)] += 1;
        }
        Ok(Self { edges, counts, normalization })
    }

    /// Bin heights under the configured normalization. With `Density`,
    /// sum(height * width) == 1.
    pub fn heights(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        match self.normalization {
            Normalization::Counts => self.counts.iter().map(|c| *c as f64).collect(),
            Normalization::Density => self
                .counts
                .iter()
                .zip(self.edges.windows(2))
                .map(|(c, w)| *c as f64 / (total as f64 * (w[1] - w[0])))
                .collect(),
        }
    }
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
    /// Set when the requested bin count was reduced to keep the expected
    /// count per bin at 5 or more.
    pub bins_merged: bool,
}

/// Default equal-probability bin count: max(10, n/200) capped at 50.
pub fn default_bin_count(n: usize) -> usize {
    (n / 200).clamp(10, 50)
}

/// Pearson chi-square GOF against `reference_cdf` with equal-probability
/// binning under the reference. `dof = bins - 1 - fitted_param_count`.
/// Samples must be (approximately) independent; thin dependent series
/// first (see [`thin_to_independent`]).
pub fn chi_square_gof<F: Fn(f64) -> f64>(
    samples: &[f64],
    reference_cdf: F,
    fitted_param_count: usize,
    bins: Option<usize>,
) -> Result<GofResult> {
    let n = samples.len();
    if n < 50 {
        return Err(Error::InsufficientData(format!("chi-square GOF needs n >= 50, got {n}")));
    }
    let mut k = bins.unwrap_or_else(|| default_bin_count(n));
    let mut merged = false;
    // expected count >= 5 per bin
    if (n as f64 / k as f64) < 5.0 {
        k = (n / 5).max(2);
        merged = true;
    }
    if k <= fitted_param_count + 1 {
        return Err(Error::Domain(format!(
            "bin count {k} leaves no degrees of freedom after {fitted_param_count} fitted parameters"
        )));
    }
    let expected = n as f64 / k as f64;
    let mut counts = vec![0u64; k];
    for &x in samples {
        let u = reference_cdf(x).clamp(0.0, 1.0);
        let idx = ((u * k as f64) as usize).min(k - 1);
        counts[idx] += 1;
    }
    let statistic: f64 =
        counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = k - 1 - fitted_param_count;
    let p_value = chi_square_sf(statistic, dof as f64);
    Ok(GofResult { statistic, dof, p_value, bins: k, bins_merged: merged })
}

/// Two-sample chi-square: bins the data sample into equal-probability bins
/// of the reference sample's empirical distribution. Used to test data
/// against simulated model/GARCH predictions.
pub fn chi_square_gof_vs_sample(
    data: &[f64],
    reference_sample: &[f64],
    bins: Option<usize>,
) -> Result<GofResult> {
    if reference_sample.len() < 100 {
        return Err(Error::InsufficientData("reference sample too small".into()));
    }
    let mut sorted = reference_sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nref = sorted.len();
    let ecdf = move |x: f64| sorted.partition_point(|v| *v <= x) as f64 / nref as f64;
    chi_square_gof(data, ecdf, 0, bins)
}

fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    let d = ChiSquared::new(dof).expect("dof > 0");
    (1.0 - d.cdf(stat)).clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov test outcome.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function with the Stephens small-sample
/// correction.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = 2.0 * (-1f64).powi(j + 1) * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sample KS test on independent samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS needs non-empty samples".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n_eff) })
}

/// One-sample KS test against an analytic CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("KS needs a non-empty sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n) })
}

/// Exact empirical survival function 1 - CDF(x) at the sorted sample points.
pub fn survival_curve(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut out = Vec::with_capacity(xs.len());
    let mut i = 0usize;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        out.push((x, 1.0 - j as f64 / n));
        i = j;
    }
    out
}

/// Student's t density with `dof` degrees of freedom and a scale parameter,
/// parameterized so that a Gaussian whose inverse variance is
/// Gamma(a, b)-distributed has dof = 2a and scale = sqrt(b/a).
pub fn student_t_density(x: f64, dof: f64, scale: f64) -> f64 {
    let z = x / scale;
    let ln_c = ln_gamma((dof + 1.0) / 2.0)
        - ln_gamma(dof / 2.0)
        - 0.5 * (dof * std::f64::consts::PI).ln()
        - scale.ln();
    (ln_c - 0.5 * (dof + 1.0) * (1.0 + z * z / dof).ln()).exp()
}

pub fn gaussian_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}
