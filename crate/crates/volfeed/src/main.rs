//! Command-line driver: simulation, mechanism verification, parameter
//! estimation, figure-data emission, and the model-comparison fit report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use volfeed::error::{Error, Result};
use volfeed::estimation::{self, DistFamily, FitResult};
use volfeed::interface::{self, output, RunConfig};
use volfeed::mechanism;
use volfeed::model::{self, ModelParams};
use volfeed::sampling::RngState;
use volfeed::stats;

#[derive(Parser)]
#[command(name = "volfeed", about = "Stochastic feedback volatility model toolkit", version)]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flag overrides for the config file. Only the flags a subcommand needs
/// are relevant; the rest are ignored by it.
#[derive(Args, Clone)]
struct Overrides {
    #[arg(long, global = true)]
    sigma0_sq: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    max_lag: Option<usize>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Daily price CSV (date,close).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    date_column: Option<String>,
    #[arg(long, global = true)]
    price_column: Option<String>,
    #[arg(long, global = true)]
    date_format: Option<String>,
    /// Comma-separated aggregation intervals, e.g. 1,5,42.
    #[arg(long, global = true)]
    delta_ts: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one path and write returns + variances to CSV.
    Simulate,
    /// Run the rate-estimation mechanism and the reduction-equivalence report.
    Mechanism {
        /// Override the exogenous rate (default B+1); any other value
        /// deliberately breaks the reduction.
        #[arg(long)]
        lambda_e: Option<f64>,
    },
    /// Estimate sigma0^2 and B from a daily price CSV.
    Estimate,
    /// Emit figure data: |r'| ACF, beta' histogram and survival curve, r' PDFs.
    Analyze {
        /// Returns CSV produced by `simulate` (alternative to --data).
        #[arg(long)]
        returns: Option<PathBuf>,
    },
    /// Fit report: gamma/lognormal/inverse-gamma fits plus model- and
    /// GARCH-predicted distributions with chi-square p-values.
    Fit,
    /// Overlay model-vs-data statistics for a price CSV and fitted params.
    Compare,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.sigma0_sq {
        cfg.sigma0_sq = v;
    }
    if let Some(v) = o.b {
        cfg.b = v;
    }
    if let Some(v) = o.mu {
        cfg.mu = v;
    }
    if let Some(v) = o.steps {
        cfg.steps = v;
    }
    if let Some(v) = o.burn_in {
        cfg.burn_in = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.window {
        cfg.window = v;
    }
    if let Some(v) = o.max_lag {
        cfg.max_lag = v;
    }
    if let Some(v) = o.paths {
        cfg.paths = v;
    }
    if let Some(v) = &o.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = &o.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &o.date_column {
        cfg.date_column = v.clone();
    }
    if let Some(v) = &o.price_column {
        cfg.price_column = v.clone();
    }
    if let Some(v) = &o.date_format {
        cfg.date_format = v.clone();
    }
    if let Some(v) = &o.delta_ts {
        cfg.set("delta_ts", v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Mechanism { lambda_e } => mechanism_cmd(&cfg, *lambda_e),
        Command::Estimate => estimate(&cfg),
        Command::Analyze { returns } => analyze(&cfg, returns.as_deref()),
        Command::Fit => fit(&cfg),
        Command::Compare => compare(&cfg),
    }
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let params = cfg.model_params()?;
    let mut rng = RngState::from_seed(cfg.seed);
    let path = model::generate_path(&params, cfg.steps, params.sigma0_sq(), cfg.burn_in, &mut rng)?;
    let rows: Vec<Vec<f64>> = path
        .returns()
        .iter()
        .zip(path.variance())
        .enumerate()
        .map(|(t, (r, v))| vec![t as f64, *r, *v])
        .collect();
    let out = cfg.out_dir.join("path.csv");
    output::write_csv(&out, &cfg.header_json(), &["t", "return", "variance"], &rows)?;
    println!("wrote {} ({} steps, seed {})", out.display(), cfg.steps, cfg.seed);
    Ok(())
}

fn mechanism_cmd(cfg: &RunConfig, lambda_e: Option<f64>) -> Result<()> {
    let params = cfg.model_params()?;
    let rng = RngState::from_seed(cfg.seed);
    let report = mechanism::verify_reduction(&params, cfg.steps, lambda_e, &rng)?;

    // a stationary mechanism chain for inspection
    let mech_params = match lambda_e {
        Some(rate) => mechanism::MechanismParams::with_rate(&params, rate)?,
        None => mechanism::MechanismParams::from_model(&params),
    };
    let mut rng_chain = rng.substream(2);
    let vars = mechanism::run_chain(&mech_params, cfg.steps.min(10_000), cfg.burn_in, &mut rng_chain)?;
    let rows: Vec<Vec<f64>> = vars.iter().enumerate().map(|(t, v)| vec![t as f64, *v]).collect();
    let out = cfg.out_dir.join("mechanism_variance.csv");
    output::write_csv(&out, &cfg.header_json(), &["t", "variance"], &rows)?;

    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    println!(
        "reduction {}: KS p = {:.4} (thin {}, n {})",
        if report.ks_p_value > 0.01 { "consistent" } else { "REJECTED" },
        report.ks_p_value,
        report.thin,
        report.n_thinned
    );
    Ok(())
}

fn load_returns_from_data(cfg: &RunConfig) -> Result<(Vec<f64>, String)> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --data <price csv>".into()))?;
    let loaded = interface::load_price_csv(path, &cfg.csv_schema())?;
    let label = loaded.series.source_label().to_string();
    let returns = interface::log_returns(&loaded.series)?;
    println!(
        "loaded {}: {} prices, {} returns ({} dropped, {} skipped)",
        label,
        loaded.series.len(),
        returns.len(),
        loaded.dropped_rows,
        loaded.skipped_rows
    );
    Ok((returns, label))
}

#[derive(serde::Serialize)]
struct EstimateReport {
    source: String,
    n_returns: usize,
    window: usize,
    sigma0_sq_hat: f64,
    b_hat: f64,
    b_local_minima: Vec<f64>,
    objective: f64,
}

fn estimate(cfg: &RunConfig) -> Result<()> {
    let (returns, label) = load_returns_from_data(cfg)?;
    let vars = estimation::rolling_variance(&returns, cfg.window)?;
    let s0 = estimation::estimate_sigma0(&vars)?;
    let b = estimation::estimate_b(&vars, s0)?;
    let report = EstimateReport {
        source: label,
        n_returns: returns.len(),
        window: cfg.window,
        sigma0_sq_hat: s0,
        b_hat: b.b,
        b_local_minima: b.local_minima.clone(),
        objective: b.objective,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    println!("sigma0_sq = {s0:.4e}   B = {:.1}", b.b);
    if b.local_minima.len() > 1 {
        println!("note: objective has {} local minima: {:?}", b.local_minima.len(), b.local_minima);
    }
    Ok(())
}

/// Returns plus the normalization needed for r' and beta'.
struct AnalysisInput {
    returns: Vec<f64>,
    sigma0_sq: f64,
    mu: f64,
    beta_prime: Vec<f64>,
    label: String,
}

fn analysis_input(cfg: &RunConfig, returns_csv: Option<&std::path::Path>) -> Result<AnalysisInput> {
    if let Some(path) = returns_csv {
        let (_, cols, rows) = output::read_csv(path)?;
        let idx = cols
            .iter()
            .position(|c| c == "return")
            .ok_or_else(|| Error::Data(format!("{}: no 'return' column", path.display())))?;
        let returns: Vec<f64> = rows.iter().map(|r| r[idx]).collect();
        let beta = estimation::beta_prime_pipeline(&returns, cfg.window)?;
        let vars = estimation::rolling_variance(&returns, cfg.window)?;
        let s0 = estimation::estimate_sigma0(&vars)?;
        let mu = stats::mean(&returns);
        Ok(AnalysisInput { returns, sigma0_sq: s0, mu, beta_prime: beta, label: "returns-csv".into() })
    } else if cfg.data.is_some() {
        let (returns, label) = load_returns_from_data(cfg)?;
        let vars = estimation::rolling_variance(&returns, cfg.window)?;
        let s0 = estimation::estimate_sigma0(&vars)?;
        let mu = stats::mean(&returns);
        let beta = vars.values().iter().map(|v| s0 / v).collect();
        Ok(AnalysisInput { returns, sigma0_sq: s0, mu, beta_prime: beta, label })
    } else {
        // no data: simulate from the configured params and use the
        // instantaneous variances
        let params = cfg.model_params()?;
        let mut rng = RngState::from_seed(cfg.seed);
        let path = model::generate_path(&params, cfg.steps, params.sigma0_sq(), cfg.burn_in, &mut rng)?;
        let norm = model::normalize(&path, &params, 1)?;
        Ok(AnalysisInput {
            returns: path.returns().to_vec(),
            sigma0_sq: params.sigma0_sq(),
            mu: params.mu(),
            beta_prime: norm.beta_prime,
            label: "simulation".into(),
        })
    }
}

fn analyze(cfg: &RunConfig, returns_csv: Option<&std::path::Path>) -> Result<()> {
    let input = analysis_input(cfg, returns_csv)?;
    let header = cfg.header_json();
    let sigma0 = input.sigma0_sq.sqrt();

    // |r'| autocorrelation
    let abs_r_prime: Vec<f64> =
        input.returns.iter().map(|r| ((r - input.mu) / sigma0).abs()).collect();
    let max_lag = cfg.max_lag.min(input.returns.len() / 4 - 1);
    let acf = stats::acf(&abs_r_prime, max_lag)?;
    let rows: Vec<Vec<f64>> =
        acf.lags.iter().zip(&acf.values).map(|(l, v)| vec![*l as f64, *v]).collect();
    output::write_csv(&cfg.out_dir.join("acf_abs_rprime.csv"), &header, &["lag", "acf"], &rows)?;

    // beta' histogram and survival curve
    let hist = stats::Histogram::from_samples(&input.beta_prime, 60, stats::Normalization::Density)?;
    let rows: Vec<Vec<f64>> = hist
        .heights()
        .iter()
        .enumerate()
        .map(|(i, d)| vec![hist.edges[i], hist.edges[i + 1], *d])
        .collect();
    output::write_csv(&cfg.out_dir.join("beta_prime_hist.csv"), &header, &["lo", "hi", "density"], &rows)?;

    let surv = stats::survival_curve(&input.beta_prime);
    let rows: Vec<Vec<f64>> = surv.iter().map(|(x, p)| vec![*x, *p]).collect();
    output::write_csv(&cfg.out_dir.join("beta_prime_survival.csv"), &header, &["x", "one_minus_cdf"], &rows)?;

    // r' PDFs per aggregation interval
    for &dt in &cfg.delta_ts {
        let agg = model::aggregate_returns(&input.returns, dt)?;
        let denom = sigma0 * (dt as f64).sqrt();
        let shift = input.mu * dt as f64;
        let r_prime: Vec<f64> = agg.iter().map(|r| (r - shift) / denom).collect();
        if r_prime.len() < 10 {
            eprintln!("warning: only {} aggregated returns at delta_t={dt}; skipping", r_prime.len());
            continue;
        }
        let hist = stats::Histogram::from_samples(&r_prime, 80, stats::Normalization::Density)?;
        let rows: Vec<Vec<f64>> = hist
            .heights()
            .iter()
            .enumerate()
            .map(|(i, d)| vec![hist.edges[i], hist.edges[i + 1], *d])
            .collect();
        output::write_csv(
            &cfg.out_dir.join(format!("rprime_pdf_dt{dt}.csv")),
            &header,
            &["lo", "hi", "density"],
            &rows,
        )?;
    }

    println!(
        "analyzed {} ({} returns): wrote ACF, beta' histogram/survival, {} r' PDFs to {}",
        input.label,
        input.returns.len(),
        cfg.delta_ts.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct FitReport {
    source: String,
    n_beta: usize,
    n_beta_thinned: usize,
    sigma0_sq_hat: f64,
    b_hat: f64,
    garch: estimation::GarchParams,
    gamma: FitResult,
    model: FitSummary,
    garch_predicted: FitSummary,
    lognormal: FitResult,
    inverse_gamma: FitResult,
}

#[derive(serde::Serialize)]
struct FitSummary {
    family: DistFamily,
    statistic: f64,
    dof: usize,
    p_value: f64,
}

fn fit(cfg: &RunConfig) -> Result<()> {
    let (returns, label) = load_returns_from_data(cfg)?;
    let vars = estimation::rolling_variance(&returns, cfg.window)?;
    let s0 = estimation::estimate_sigma0(&vars)?;
    let b_est = estimation::estimate_b(&vars, s0)?;
    let beta: Vec<f64> = vars.values().iter().map(|v| s0 / v).collect();
    // rolling windows overlap heavily; thin to near-independence before
    // any GOF so the chi-square null is valid
    let beta_thin = stats::thin_to_independent(&beta)?;

    // parameters from the full series, GOF on the thinned subsample
    let gamma = estimation::fit_gamma_dependent(&beta)?;
    let lognormal = estimation::fit_lognormal_dependent(&beta)?;
    let inverse_gamma = estimation::fit_invgamma_dependent(&beta)?;

    let params = ModelParams::new(s0, b_est.b, stats::mean(&returns))?;
    let mut rng = RngState::from_seed(cfg.seed);
    let sim_len = cfg.steps.max(20 * returns.len());
    let model_beta = estimation::model_predicted_beta_dist(&params, sim_len, cfg.window, &mut rng)?;
    let model_beta_thin = stats::thin_to_independent(&model_beta)?;
    let model_gof = stats::chi_square_gof_vs_sample(&beta_thin, &model_beta_thin, None)?;

    let garch = estimation::fit_garch11(&returns)?;
    let mut rng_g = RngState::from_seed(cfg.seed).substream(1);
    let garch_beta = estimation::garch_predicted_beta_dist(&garch, sim_len, cfg.window, &mut rng_g)?;
    let garch_beta_thin = stats::thin_to_independent(&garch_beta)?;
    let garch_gof = stats::chi_square_gof_vs_sample(&beta_thin, &garch_beta_thin, None)?;

    let report = FitReport {
        source: label.clone(),
        n_beta: beta.len(),
        n_beta_thinned: beta_thin.len(),
        sigma0_sq_hat: s0,
        b_hat: b_est.b,
        garch,
        model: FitSummary {
            family: DistFamily::ModelPredicted,
            statistic: model_gof.statistic,
            dof: model_gof.dof,
            p_value: model_gof.p_value,
        },
        garch_predicted: FitSummary {
            family: DistFamily::GarchPredicted,
            statistic: garch_gof.statistic,
            dof: garch_gof.dof,
            p_value: garch_gof.p_value,
        },
        gamma,
        lognormal,
        inverse_gamma,
    };

    std::fs::create_dir_all(&cfg.out_dir)?;
    let json_path = cfg.out_dir.join("fit_report.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report).expect("report serializes"))?;

    let star = |p: f64| {
        if p < 0.01 {
            "**"
        } else if p < 0.05 {
            "*"
        } else {
            ""
        }
    };
    println!("Chi-square p-values (normalized inverse variance)");
    println!("{:<10} {:>8} {:>8} {:>8} {:>8} {:>8}", "", "Gamma", "Model", "GARCH", "Logn", "InvGam");
    println!(
        "{:<10} {:>6.2}{:<2} {:>6.2}{:<2} {:>6.2}{:<2} {:>6.2}{:<2} {:>6.2}{:<2}",
        label,
        report.gamma.gof.p_value,
        star(report.gamma.gof.p_value),
        report.model.p_value,
        star(report.model.p_value),
        report.garch_predicted.p_value,
        star(report.garch_predicted.p_value),
        report.lognormal.gof.p_value,
        star(report.lognormal.gof.p_value),
        report.inverse_gamma.gof.p_value,
        star(report.inverse_gamma.gof.p_value),
    );
    println!(
        "gamma params: shape/rate {:?}, shape/scale {:?}",
        report.gamma.params,
        report.gamma.params_alt.as_ref().unwrap()
    );
    println!("sigma0_sq = {s0:.4e}, B = {:.1}", b_est.b);
    println!("wrote {}", json_path.display());
    Ok(())
}

fn compare(cfg: &RunConfig) -> Result<()> {
    let (returns, label) = load_returns_from_data(cfg)?;
    let vars = estimation::rolling_variance(&returns, cfg.window)?;
    let s0 = estimation::estimate_sigma0(&vars)?;
    let mu = stats::mean(&returns);
    let data_beta: Vec<f64> = vars.values().iter().map(|v| s0 / v).collect();

    let params = cfg.model_params()?;
    let mut rng = RngState::from_seed(cfg.seed);
    let sim_len = cfg.steps.max(returns.len());
    let path = model::generate_path(&params, sim_len, params.sigma0_sq(), cfg.burn_in, &mut rng)?;
    let model_beta = estimation::beta_prime_pipeline(path.returns(), cfg.window)?;

    let header = cfg.header_json();
    let max_lag = cfg.max_lag.min(returns.len() / 4 - 1);

    let abs_data: Vec<f64> = returns.iter().map(|r| ((r - mu) / s0.sqrt()).abs()).collect();
    let abs_model: Vec<f64> = path
        .returns()
        .iter()
        .map(|r| ((r - params.mu()) / params.sigma0_sq().sqrt()).abs())
        .collect();
    let acf_data = stats::acf(&abs_data, max_lag)?;
    let acf_model = stats::acf(&abs_model, max_lag)?;
    let powerlaw = estimation::fit_powerlaw_acf(&acf_data.values, 1, max_lag).ok();
    let rows: Vec<Vec<f64>> = acf_data
        .lags
        .iter()
        .zip(acf_data.values.iter().zip(&acf_model.values))
        .map(|(l, (d, m))| {
            let pl = powerlaw
                .as_ref()
                .map(|p| p.amplitude * (*l as f64).powf(-p.exponent))
                .unwrap_or(f64::NAN);
            vec![*l as f64, *d, *m, pl]
        })
        .collect();
    output::write_csv(
        &cfg.out_dir.join("compare_acf.csv"),
        &header,
        &["lag", "data", "model", "powerlaw_fit"],
        &rows,
    )?;

    let surv_data = stats::survival_curve(&data_beta);
    let surv_model = stats::survival_curve(&model_beta);
    let rows: Vec<Vec<f64>> = surv_data.iter().map(|(x, p)| vec![*x, *p]).collect();
    output::write_csv(&cfg.out_dir.join("compare_beta_survival_data.csv"), &header, &["x", "one_minus_cdf"], &rows)?;
    let rows: Vec<Vec<f64>> = surv_model.iter().map(|(x, p)| vec![*x, *p]).collect();
    output::write_csv(&cfg.out_dir.join("compare_beta_survival_model.csv"), &header, &["x", "one_minus_cdf"], &rows)?;

    let ks = stats::ks_two_sample(
        &stats::thin_to_independent(&data_beta)?,
        &stats::thin_to_independent(&model_beta)?,
    )?;
    println!(
        "{label} vs model (sigma0_sq {:.3e}, B {}): beta' KS stat {:.4}, p {:.4}",
        params.sigma0_sq(),
        params.b(),
        ks.statistic,
        ks.p_value
    );
    if let Some(pl) = &powerlaw {
        println!(
            "data |r'| ACF power-law fit: c {:.4}, exponent {:.4} over lags {:?}",
            pl.amplitude, pl.exponent, pl.lags_used
        );
    }
    println!("wrote comparison CSVs to {}", cfg.out_dir.display());
    Ok(())
}
