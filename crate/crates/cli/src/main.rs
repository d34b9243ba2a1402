use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempocast::config::RunConfig;
use tempocast::error::CliError;
use tempocast::pipeline::{self, SweepGrid};
use tempocast_core::dataset::read_training_set;
use tempocast_core::eventlog::write_events;
use tempocast_core::features::{featurize, write_feature_matrix, PeriodSeries};
use tempocast_core::forecast::{actual_counts, estimate_drift, rmsle, write_predictions, Drift};
use tempocast_core::gbt::{fit, read_model, write_model};
use tempocast_core::synthgen::{simulate, simulate_block_growth, BlockGrowth, ProfileSampler, RegimeShift, SimParams};
use tempocast_core::{dataset, design_matrix};

#[derive(Parser)]
#[command(name = "tempocast", version, about = "Forecast per-user activity from event-log temporal dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic edit log.
    Simulate(SimulateArgs),
    /// Parse an edit log and report row counts.
    IngestCheck(IngestArgs),
    /// Export the feature matrix of editors active at a time-point.
    Featurize(FeaturizeArgs),
    /// Fit a model on examples labelled at t_test - horizon.
    Train(TrainArgs),
    /// Predict counts for editors active at t_test.
    Predict(PredictArgs),
    /// Score predictions with RMSLE.
    Evaluate(EvaluateArgs),
    /// Learn and predict in one go, writing model, predictions and manifest.
    Run(RunArgs),
    /// Score a weak_count or period-prefix grid one horizon back.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct IngestArgs {
    /// Edit-log CSV file(s).
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Dataset epoch (first day of a month).
    #[arg(long)]
    epoch: Option<String>,
    /// Input files have no header row.
    #[arg(long)]
    no_header: bool,
    /// Keep only namespaces in this inclusive range, e.g. `0-5`.
    #[arg(long)]
    namespaces: Option<String>,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    /// JSON config file or run manifest; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    t_test: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    lookback: Option<f64>,
    /// Comma-separated window lengths in months.
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<f64>>,
    #[arg(long)]
    weak_count: Option<usize>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// `log` or `raw`.
    #[arg(long)]
    drift_space: Option<String>,
    /// Disable the drift correction.
    #[arg(long)]
    no_drift: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let i = &self.ingest;
        if !i.input.is_empty() {
            c.input = i.input.clone();
        }
        if let Some(v) = &i.epoch {
            c.epoch = v.clone();
        }
        if i.no_header {
            c.has_header = false;
        }
        if i.namespaces.is_some() {
            c.namespaces = i.namespaces.clone();
        }
        macro_rules! overlay {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {$(
                if let Some(v) = &self.$flag {
                    c.$($field).+ = v.clone().into();
                }
            )*};
        }
        overlay!(
            t_test => t_test,
            horizon => horizon,
            lookback => lookback,
            periods => periods,
            weak_count => gbt.weak_count,
            shrinkage => gbt.shrinkage,
            subsample => gbt.subsample_fraction,
            max_depth => gbt.max_depth,
            min_samples_leaf => gbt.min_samples_leaf,
            drift_space => drift_space,
            seed => seed,
            threads => threads,
        );
        if self.no_drift {
            c.drift = false;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    population: usize,
    /// Months covered by the log.
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "2001-01-01")]
    epoch: String,
    /// Every editor active throughout at this fixed rate (edits/month).
    #[arg(long, conflicts_with = "growth_first_count")]
    constant_rate: Option<f64>,
    /// Latest editor start in months.
    #[arg(long)]
    start_max: Option<f64>,
    /// Mean active span in months.
    #[arg(long)]
    mean_lifetime: Option<f64>,
    /// Scale every rate from this month onward.
    #[arg(long, requires = "regime_shift_factor")]
    regime_shift_at: Option<f64>,
    #[arg(long, requires = "regime_shift_at")]
    regime_shift_factor: Option<f64>,
    /// Deterministic growth: this many edits in the first 5-month block,
    /// then 2c+1 per block.
    #[arg(long)]
    growth_first_count: Option<u64>,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    /// Time-point to featurize at.
    #[arg(long)]
    t: f64,
    /// Window cap; defaults to `t`.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 12.0)]
    lookback: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    run: ConfigArgs,
    /// Train from an exported training-set CSV instead of an edit log.
    #[arg(long, conflicts_with = "input")]
    training_set: Option<PathBuf>,
    /// Also export the training set.
    #[arg(long)]
    training_set_out: Option<PathBuf>,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    run: ConfigArgs,
    #[arg(long)]
    model: PathBuf,
    /// Use this drift instead of estimating it.
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// `user_id,prediction` CSV.
    #[arg(long)]
    predictions: PathBuf,
    /// `user_id,actual` CSV.
    #[arg(long, conflicts_with = "input")]
    actual: Option<PathBuf>,
    #[command(flatten)]
    ingest: IngestArgs,
    /// With --input: count actual edits in [t_test, t_test + horizon).
    #[arg(long)]
    t_test: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    run: ConfigArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Score predictions against edits logged after t_test.
    #[arg(long)]
    evaluate: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: ConfigArgs,
    /// weak_count grid, e.g. 200,400,600.
    #[arg(long, value_delimiter = ',', conflicts_with = "period_prefixes", required_unless_present = "period_prefixes")]
    weak_counts: Option<Vec<usize>>,
    /// Period prefix lengths, e.g. 1,2,3 (default series: 1..10).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    period_prefixes: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tempocast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn base_config(ingest: &IngestArgs) -> RunConfig {
    let args = ConfigArgs {
        ingest: ingest.clone(),
        config: None,
        t_test: None,
        horizon: None,
        lookback: None,
        periods: None,
        weak_count: None,
        shrinkage: None,
        subsample: None,
        max_depth: None,
        min_samples_leaf: None,
        drift_space: None,
        no_drift: false,
        seed: None,
        threads: None,
    };
    args.config().expect("no config file to read")
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::IngestCheck(a) => {
            let cfg = base_config(&a);
            if cfg.input.is_empty() {
                return Err(CliError::Config("at least one --input is required".into()));
            }
            let (histories, stats) = pipeline::load(&cfg.input, &cfg.ingest_options()?)?;
            let times = histories.values().flat_map(|h| h.events().iter().map(|e| e.time.value()));
            let (lo, hi) = times.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
            println!("rows {}\nevents {}\ndropped {}\neditors {}", stats.rows, stats.events, stats.dropped, stats.editors);
            if stats.events > 0 {
                println!("first {lo:.6}\nlast {hi:.6}");
            }
            Ok(())
        }
        Command::Featurize(a) => {
            let cfg = base_config(&a.ingest);
            if cfg.input.is_empty() {
                return Err(CliError::Config("at least one --input is required".into()));
            }
            let periods = PeriodSeries::default_periods(a.cap.unwrap_or(a.t)).map_err(|e| CliError::Config(e.to_string()))?;
            let (histories, _) = pipeline::load(&cfg.input, &cfg.ingest_options()?)?;
            let active = dataset::active_editors(&histories, a.t, a.lookback)?;
            let rows = active.iter().map(|u| Ok((*u, featurize(&histories[u], a.t, &periods)?))).collect::<Result<Vec<_>, CliError>>()?;
            pipeline::write_atomic(&a.out, |w| Ok(write_feature_matrix(rows.iter().map(|(u, x)| (*u, x)), periods.len(), w)?))?;
            eprintln!("featurized {} editors", rows.len());
            Ok(())
        }
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Run(a) => {
            let cfg = a.run.config()?;
            cfg.resolve()?;
            init_threads(cfg.threads)?;
            let summary = pipeline::run_pipeline(&cfg, &a.out_dir, a.evaluate)?;
            let m = &summary.manifest;
            eprintln!(
                "t_train {} t_test {}: trained on {} editors, predicted {} editors, drift {:.6}",
                m.t_train, m.t_test, m.train_population, m.predict_population, m.drift
            );
            if let Some(e) = m.evaluation {
                println!("rmsle {e:.6}\nn {}", m.predict_population);
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let cfg = a.run.config()?;
            let resolved = cfg.resolve()?;
            init_threads(cfg.threads)?;
            let grid = match (a.weak_counts, a.period_prefixes) {
                (Some(w), _) => SweepGrid::WeakCount(w),
                (None, Some(p)) if p.is_empty() => SweepGrid::PeriodPrefix((1..=resolved.periods.len()).collect()),
                (None, Some(p)) => SweepGrid::PeriodPrefix(p),
                (None, None) => unreachable!("clap requires one grid"),
            };
            let rows = pipeline::run_sweep(&cfg, &grid, &a.out)?;
            let mut stdout = std::io::stdout();
            pipeline::write_sweep_table(grid.column(), &rows, &mut stdout)
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = RunConfig { epoch: a.epoch.clone(), ..Default::default() };
    let calendar = cfg.calendar()?;
    let events = if let Some(first_count) = a.growth_first_count {
        let blocks = (a.horizon / 5.0).floor() as usize;
        let g = BlockGrowth { population: a.population, block_months: 5.0, blocks, first_count, article_pool: 20, seed: a.seed };
        simulate_block_growth(&g, &calendar)?
    } else {
        let mut profiles = match a.constant_rate {
            Some(r) => ProfileSampler::constant_rate(r),
            None => ProfileSampler::default(),
        };
        if let Some(s) = a.start_max {
            profiles.start_max = s;
        } else if a.constant_rate.is_none() {
            profiles.start_max = profiles.start_max.min(a.horizon * 0.9);
        }
        if let Some(m) = a.mean_lifetime {
            profiles.mean_lifetime = Some(m);
        }
        if let (Some(at), Some(factor)) = (a.regime_shift_at, a.regime_shift_factor) {
            profiles.regime_shift = Some(RegimeShift { at, factor });
        }
        simulate(&SimParams { population: a.population, horizon: a.horizon, profiles, seed: a.seed }, &calendar)?
    };
    pipeline::write_atomic(&a.out, |w| Ok(write_events(&events, &calendar, w)?))?;
    eprintln!("wrote {} events for {} editors", events.len(), a.population);
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let cfg = a.run.config()?;
    init_threads(cfg.threads)?;
    let gbt = cfg.gbt_params()?;
    let examples = match &a.training_set {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            read_training_set(BufReader::new(file))?
        }
        None => {
            let r = cfg.resolve()?;
            let (histories, _) = pipeline::load(&r.inputs, &r.ingest)?;
            dataset::build_training_set(&histories, &r.split, &r.periods)?
        }
    };
    if let Some(path) = &a.training_set_out {
        pipeline::write_atomic(path, |w| Ok(dataset::write_training_set(&examples, w)?))?;
    }
    let (rows, targets) = design_matrix(&examples);
    let model = fit(&rows, &targets, &gbt)?;
    pipeline::write_atomic(&a.model_out, |w| Ok(write_model(&model, w)?))?;
    eprintln!("trained {} trees on {} examples", model.trees().len(), examples.len());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<(), CliError> {
    let cfg = a.run.config()?;
    let r = cfg.resolve()?;
    init_threads(cfg.threads)?;
    let file = File::open(&a.model).map_err(|e| CliError::Data(format!("{}: {e}", a.model.display())))?;
    let model = read_model(BufReader::new(file))?;
    let (histories, _) = pipeline::load(&r.inputs, &r.ingest)?;
    let drift = match (a.drift, r.drift) {
        (Some(d), _) => Drift(d),
        (None, Some(space)) => estimate_drift(&histories, r.split.t_train(), r.split.horizon(), r.split.lookback(), space)?,
        (None, None) => Drift(0.0),
    };
    let (_, pred) = pipeline::predict(&histories, &r.split, &r.periods, &model, drift)?;
    pipeline::write_atomic(&a.out, |w| Ok(write_predictions(&pred, w)?))?;
    eprintln!("predicted {} editors, drift {:.6}", pred.len(), drift.0);
    Ok(())
}

fn read_pairs(path: &PathBuf) -> Result<BTreeMap<u64, f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || CliError::Data(format!("{}:{}: expected `user_id,value`", path.display(), i + 1));
        let (u, v) = line.split_once(',').ok_or_else(bad)?;
        out.insert(u.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?);
    }
    Ok(out)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let pred = read_pairs(&a.predictions)?;
    let actual = match (&a.actual, a.t_test) {
        (Some(path), _) => read_pairs(path)?,
        (None, Some(t)) => {
            let cfg = base_config(&a.ingest);
            if cfg.input.is_empty() {
                return Err(CliError::Config("either --actual or --input with --t-test is required".into()));
            }
            let (histories, _) = pipeline::load(&cfg.input, &cfg.ingest_options()?)?;
            actual_counts(&histories, pred.keys().copied(), t, a.horizon)
        }
        (None, None) => return Err(CliError::Config("either --actual or --input with --t-test is required".into())),
    };
    let report = rmsle(&pred, &actual)?;
    println!("{report}");
    Ok(())
}
