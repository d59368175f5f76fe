//! Command-line interface: simulate trajectories, block series, fit GEV
//! models, estimate extremal indices, apply scaling predictions, run full
//! experiments, ingest station CSVs, and build return-level tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 fit failure.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use evtlab::dynamics;
use evtlab::ei;
use evtlab::error::{Error, Result};
use evtlab::evt::{self, GevParams};
use evtlab::observables;
use evtlab::pipeline::{self, CsvSchema, ExperimentConfig};
use evtlab::scaling::{self, ScalingInput, TailKind};

#[derive(Parser)]
#[command(name = "evtlab", version, about = "Extreme value laboratory for chaotic map time series")]
struct Cli {
    /// Override the master seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config file (flat key = value TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for commands that write files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Output format for tables printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate trajectories from the config's map and write trajectories.csv.
    Simulate,
    /// Block a single-column series CSV and print the block maxima.
    Blockmax(BlockmaxArgs),
    /// Fit a GEV to a single-column CSV of block maxima.
    Fit(InputArgs),
    /// Estimate the extremal index of a single-column series CSV.
    Ei(EiArgs),
    /// Predict windowed-functional GEV parameters from base parameters.
    Predict(PredictArgs),
    /// Run the full per-k experiment from the config; writes params_by_k.csv.
    Experiment,
    /// Ingest a station CSV; writes yearly_maxima.csv and ingest_report.json.
    Ingest(IngestArgs),
    /// Empirical (and optionally model) return levels from block maxima.
    ReturnLevels(ReturnLevelsArgs),
    /// Compare MLE and predicted return levels against empirical maxima.
    Compare(CompareArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Single-column CSV with header `value`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct BlockmaxArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    block_length: usize,
}

#[derive(Args)]
struct EiArgs {
    #[arg(long)]
    input: PathBuf,
    /// Threshold as an empirical quantile of the series.
    #[arg(long, default_value_t = 0.99)]
    threshold_quantile: f64,
    /// Absolute threshold; overrides the quantile when given.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = EiMethodArg::FerroSegers)]
    method: EiMethodArg,
    /// Gap parameter for the cluster-ratio estimator.
    #[arg(long, default_value_t = 1)]
    q: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum EiMethodArg {
    FerroSegers,
    ClusterRatio,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    theta1: f64,
    #[arg(long, default_value_t = 1.0)]
    theta2: f64,
    /// Normalizing-sequence ratio g(k, T); see `g-*` helpers in the library.
    #[arg(long)]
    g: f64,
    #[arg(long, value_enum)]
    tail: TailArg,
    /// Window length recorded in the output row.
    #[arg(long, default_value_t = 1)]
    k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    Frechet,
    Weibull,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "station")]
    station_col: String,
    #[arg(long, default_value = "date")]
    date_col: String,
    #[arg(long, default_value = "value")]
    value_col: String,
}

#[derive(Args)]
struct ReturnLevelsArgs {
    /// Single-column CSV of block maxima.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated exceedance probabilities, e.g. 0.5,0.1,0.01.
    #[arg(long, default_value = "0.5,0.2,0.1,0.05,0.02,0.01")]
    probs: String,
    /// Optional GEV parameters `mu,sigma,xi` for a model column.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// MLE parameters `mu,sigma,xi`.
    #[arg(long)]
    mle: String,
    /// Predicted parameters `mu,sigma,xi`.
    #[arg(long)]
    pred: String,
    /// Single-column CSV of long-run empirical block maxima.
    #[arg(long)]
    empirical: PathBuf,
    #[arg(long, default_value = "0.9,0.99,0.999")]
    probs: String,
    #[arg(long, default_value_t = 500)]
    bootstrap: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successes, everything else is a
            // usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("this command needs --config <file>".into()))?;
    let text = fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut buf = String::new();
    fs::File::open(path)?.read_to_string(&mut buf)?;
    observables::read_series_csv(buf.as_bytes())
}

fn parse_probs(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad probability `{t}`")))
        })
        .collect()
}

fn parse_params(s: &str) -> Result<GevParams> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!("expected `mu,sigma,xi`, got `{s}`")));
    }
    let parse = |t: &str| {
        t.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad parameter `{t}`")))
    };
    GevParams::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Simulate => {
            let cfg = load_config(&cli)?;
            let exp = cfg.resolve()?;
            let trajectories = dynamics::simulate(&exp.map, &exp.sim)?;
            fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("trajectories.csv");
            let file = fs::File::create(&path)?;
            dynamics::write_trajectories_csv(std::io::BufWriter::new(file), &trajectories)?;
            println!("wrote {} trajectories to {}", trajectories.len(), path.display());
            Ok(())
        }
        Cmd::Blockmax(args) => {
            let series = read_series(&args.input)?;
            let bm = pipeline::block_maxima(&series, args.block_length)?;
            match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    observables::write_series_csv(&mut buf, &bm.maxima)?;
                    print!("{}", String::from_utf8_lossy(&buf));
                }
                Format::Json => println!("{}", serde_json::json!({
                    "block_length": bm.block_length,
                    "n_blocks": bm.n_blocks,
                    "maxima": bm.maxima,
                })),
            }
            Ok(())
        }
        Cmd::Fit(args) => {
            let maxima = read_series(&args.input)?;
            let fit = evt::fit_gev_mle(&maxima)?;
            if fit.shape_warning {
                eprintln!(
                    "warning: fitted shape {} <= -0.5; standard MLE regularity fails",
                    fit.params.xi
                );
            }
            match cli.format {
                Format::Json => println!("{}", fit.to_json()),
                Format::Csv => {
                    println!("mu,sigma,xi,nll,converged,n");
                    println!(
                        "{},{},{},{},{},{}",
                        fit.params.mu,
                        fit.params.sigma,
                        fit.params.xi,
                        fit.neg_log_likelihood,
                        fit.converged,
                        fit.n_samples
                    );
                }
            }
            Ok(())
        }
        Cmd::Ei(args) => {
            let series = read_series(&args.input)?;
            if series.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "series has {} values; need at least 2",
                    series.len()
                )));
            }
            let threshold = match args.threshold {
                Some(u) => u,
                None => {
                    if !(args.threshold_quantile > 0.0 && args.threshold_quantile < 1.0) {
                        return Err(Error::InvalidInput(
                            "threshold quantile must lie in (0,1)".into(),
                        ));
                    }
                    pipeline::quantile(&series, args.threshold_quantile)
                }
            };
            let est = match args.method {
                EiMethodArg::FerroSegers => ei::ferro_segers(&series, threshold)?,
                EiMethodArg::ClusterRatio => ei::cluster_ratio(&series, threshold, args.q)?,
            };
            println!(
                "{}",
                serde_json::json!({
                    "theta": est.theta,
                    "method": est.method,
                    "threshold": threshold,
                    "n_exceedances": est.n_exceedances,
                })
            );
            Ok(())
        }
        Cmd::Predict(args) => {
            let base = GevParams::new(args.mu, args.sigma, args.xi)?;
            let input = ScalingInput {
                base,
                theta1: args.theta1,
                theta2: args.theta2,
                g: args.g,
                tail: match args.tail {
                    TailArg::Frechet => TailKind::Frechet,
                    TailArg::Weibull => TailKind::Weibull,
                },
            };
            let pred = match args.tail {
                TailArg::Frechet => scaling::predict_frechet(&input)?,
                TailArg::Weibull => scaling::predict_weibull(&input)?,
            };
            println!("{}", pred.to_json_row(args.k));
            Ok(())
        }
        Cmd::Experiment => {
            let cfg = load_config(&cli)?;
            let out = pipeline::run_experiment(&cfg)?;
            if out.all_fits_failed() {
                return Err(Error::FitFailed(
                    "maximum-likelihood fitting failed for every window length".into(),
                ));
            }
            fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("params_by_k.csv");
            fs::write(&path, pipeline::params_by_k_csv(&out))?;
            println!(
                "base fit: mu={} sigma={} xi={} (theta_fs={})",
                out.base.params.mu, out.base.params.sigma, out.base.params.xi, out.base_theta.theta
            );
            for row in &out.rows {
                if let Some(err) = &row.fit_error {
                    eprintln!("k={}: fit failed: {err}", row.k);
                }
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Ingest(args) => {
            let schema = CsvSchema {
                station_col: args.station_col.clone(),
                date_col: args.date_col.clone(),
                value_col: args.value_col.clone(),
            };
            let file = fs::File::open(&args.input)?;
            let report = pipeline::ingest_csv(file, &schema)?;
            let pooled = pipeline::pooled_yearly_maxima(&report.stations)?;
            fs::create_dir_all(&cli.out)?;
            let maxima_path = cli.out.join("yearly_maxima.csv");
            let mut buf = Vec::new();
            observables::write_series_csv(&mut buf, &pooled.maxima)?;
            fs::write(&maxima_path, buf)?;
            let report_path = cli.out.join("ingest_report.json");
            fs::write(
                &report_path,
                serde_json::to_string_pretty(&serde_json::json!({
                    "stations": report.stations.iter().map(|s| serde_json::json!({
                        "station_id": s.station_id,
                        "days": s.values.len(),
                        "missing_filled": s.missing_filled,
                        "flagged_missing": s.flagged_missing,
                    })).collect::<Vec<_>>(),
                    "rejects": report.rejects,
                    "pooled_yearly_maxima": pooled.n_blocks,
                }))
                .expect("report serializes"),
            )?;
            println!(
                "{} stations, {} pooled yearly maxima, {} rejected rows; wrote {} and {}",
                report.stations.len(),
                pooled.n_blocks,
                report.rejects.len(),
                maxima_path.display(),
                report_path.display()
            );
            Ok(())
        }
        Cmd::ReturnLevels(args) => {
            let maxima = read_series(&args.input)?;
            let probs = parse_probs(&args.probs)?;
            let z_emp = pipeline::empirical_return_levels_from_maxima(&maxima, &probs)?;
            let model = args.params.as_deref().map(parse_params).transpose()?;
            match cli.format {
                Format::Csv => {
                    println!("prob,return_period,z_empirical{}", if model.is_some() { ",z_model" } else { "" });
                    for (i, &p) in probs.iter().enumerate() {
                        match &model {
                            Some(m) => println!(
                                "{p},{},{},{}",
                                1.0 / p,
                                z_emp[i],
                                evt::return_level(m, p)?
                            ),
                            None => println!("{p},{},{}", 1.0 / p, z_emp[i]),
                        }
                    }
                }
                Format::Json => {
                    let rows: Vec<serde_json::Value> = probs
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            let mut row = serde_json::json!({
                                "prob": p,
                                "return_period": 1.0 / p,
                                "z_empirical": z_emp[i],
                            });
                            if let Some(m) = &model {
                                row["z_model"] =
                                    evt::return_level(m, p).map(Into::into).unwrap_or(serde_json::Value::Null);
                            }
                            row
                        })
                        .collect();
                    println!("{}", serde_json::Value::Array(rows));
                }
            }
            Ok(())
        }
        Cmd::Compare(args) => {
            let mle = parse_params(&args.mle)?;
            let pred = parse_params(&args.pred)?;
            let maxima = read_series(&args.empirical)?;
            let probs = parse_probs(&args.probs)?;
            let n = maxima.len();
            let bm = pipeline::BlockMaxSeries {
                maxima,
                block_length: 0,
                n_blocks: n,
                source_label: args.empirical.display().to_string(),
            };
            let table = pipeline::compare_return_levels(
                &mle,
                &pred,
                &bm,
                &probs,
                args.bootstrap,
                cli.seed.unwrap_or(0),
            )?;
            match cli.format {
                Format::Csv => print!("{}", table.to_csv()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&table).expect("table serializes")),
            }
            Ok(())
        }
    }
}
