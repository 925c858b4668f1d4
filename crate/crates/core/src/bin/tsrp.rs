use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tsreprogram::backbone::Backbone;
use tsreprogram::baselines::DLinear;
use tsreprogram::checkpoint::Container;
use tsreprogram::dataio::{
    default_fixture, limit_fraction, write_normalized_csv, write_power_csv, AuditedSplits, PlantRegistry,
    SplitKind,
};
use tsreprogram::harness::{
    fit_model, load_plants, load_report, run_experiment, select_plants, summarize, write_csv, ExperimentConfig,
    FittedModel, ModelKind, Protocol,
};
use tsreprogram::trainer::{evaluate, Forecast, Forecaster, PromptEncoder};
use tsreprogram::Error;

const DEFAULT_CONFIG: &str = "tsrp.toml";
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "tsrp", version, about = "Reprogrammed-backbone PV power forecasting")]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic three-plant fixture as MW CSVs plus plants.toml.
    Synth {
        #[arg(long, default_value_t = 60)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clean, normalize and split every configured plant.
    Prep(Common),
    /// Train one model on one plant and save a checkpoint.
    Train(Common),
    /// Score a checkpoint on a plant's test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run a full protocol and write report, summary and traces.
    Experiment(Common),
    /// Aggregate a report CSV over plants and seeds.
    Summarize {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Experiment config (TOML); defaults to ./tsrp.toml.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<usize>,
    #[arg(long)]
    input_len: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    fraction: Vec<f64>,
    /// Training plant (zero-shot source).
    #[arg(long)]
    source: Option<String>,
    /// Evaluation plant (zero-shot target).
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    model: Vec<ModelKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 3,
        Error::Data(_) | Error::Parse { .. } => 4,
        Error::Io { .. } => 5,
        Error::Format(_) => 6,
        Error::Shape(_) | Error::Numeric(_) | Error::Degenerate(_) => 7,
    }
}

fn out_dir(flag: Option<&Path>, cfg: Option<&ExperimentConfig>) -> CliResult<PathBuf> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("TSRP_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("tsrp-out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl Common {
    /// Loads the config file and applies command-line overrides.
    fn config(&self) -> CliResult<ExperimentConfig> {
        let path = match &self.config {
            Some(p) => p.clone(),
            None if Path::new(DEFAULT_CONFIG).exists() => PathBuf::from(DEFAULT_CONFIG),
            None => {
                return Err(Failure::Usage(format!(
                    "no --config given and no ./{DEFAULT_CONFIG} found"
                )))
            }
        };
        let mut cfg = ExperimentConfig::load(&path)?;
        if let Some(p) = self.protocol {
            cfg.protocol = p;
        }
        if !self.horizon.is_empty() {
            cfg.horizons = self.horizon.clone();
        }
        if self.input_len.is_some() {
            cfg.input_len = self.input_len;
        }
        if !self.fraction.is_empty() {
            cfg.fractions = self.fraction.clone();
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if !self.model.is_empty() {
            cfg.models = self.model.clone();
        }
        match (&self.source, &self.target) {
            (Some(s), Some(t)) if cfg.protocol == Protocol::Zeroshot => cfg.pairs = vec![[s.clone(), t.clone()]],
            (Some(p), None) | (None, Some(p)) if cfg.protocol != Protocol::Zeroshot => cfg.plants = vec![p.clone()],
            (None, None) => {}
            _ => {
                return Err(Failure::Usage(
                    "--source with --target selects a zero-shot pair; other protocols take one of them".into(),
                ))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn synth(days: usize, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let dir = out_dir(out, None)?;
    let fixture = default_fixture(days, seed)?;
    let mut plants = Vec::new();
    for (mut m, series) in fixture {
        m.file = Some(m.csv_name());
        let path = dir.join(m.csv_name());
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_power_csv(std::io::BufWriter::new(file), &series)?;
        println!("{}: {} points -> {}", m.plant_id, series.len(), path.display());
        plants.push(m);
    }
    let manifest = dir.join("plants.toml");
    std::fs::write(&manifest, PlantRegistry::new(plants)?.to_toml_string()).map_err(|e| Error::io(&manifest, e))?;
    println!("manifest -> {}", manifest.display());
    Ok(())
}

#[derive(Serialize)]
struct SplitSummary {
    plant: String,
    points: usize,
    train: [usize; 2],
    val: [usize; 2],
    test: [usize; 2],
}

fn prep(common: &Common) -> CliResult<()> {
    let cfg = common.config()?;
    let dir = out_dir(common.out.as_deref(), Some(&cfg))?;
    let all = load_plants(&cfg)?;
    let mut splits = Vec::new();
    for series in select_plants(&cfg, &all)? {
        let path = dir.join(format!("{}_clean.csv", series.plant_id));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_normalized_csv(std::io::BufWriter::new(file), &series)?;
        let audited = AuditedSplits::new(series)?;
        let r = audited.ranges();
        splits.push(SplitSummary {
            plant: audited.plant_id().to_string(),
            points: r.total(),
            train: [r.train.start, r.train.end],
            val: [r.val.start, r.val.end],
            test: [r.test.start, r.test.end],
        });
        println!("{}: {} points -> {}", audited.plant_id(), r.total(), path.display());
    }
    write_json(&dir.join("splits.json"), &splits)
}

fn train_cmd(common: &Common) -> CliResult<()> {
    let cfg = common.config()?;
    let dir = out_dir(common.out.as_deref(), Some(&cfg))?;
    let all = load_plants(&cfg)?;
    let series = select_plants(&cfg, &all)?.remove(0);
    let horizon = cfg.horizons()[0];
    let input_len = cfg.input_len(horizon);
    let seed = cfg.seeds[0];
    let kind = cfg.models[0];
    let splits = AuditedSplits::new(series)?;
    let ws = cfg.windows;
    let mut train_set = splits.windows(SplitKind::Train, input_len, horizon, ws.train_stride)?;
    if cfg.protocol == Protocol::Fewshot {
        let p = cfg.fractions[0];
        let available = train_set.len();
        train_set = limit_fraction(&train_set, p)?;
        println!("few-shot p={p}: {} of {available} training windows", train_set.len());
    }
    let val = splits.windows(SplitKind::Val, input_len, horizon, ws.val_stride)?;
    let encoder = Arc::new(PromptEncoder::new(Arc::new(Backbone::new(cfg.model.backbone)?)));
    let (model, history) = fit_model(kind, &cfg, &encoder, &train_set, &val, seed)?;
    let path = dir.join("model.tsrp");
    match &model {
        FittedModel::Tsreprogram(f) => f.save(&path)?,
        FittedModel::Dlinear(d) => d.save(&path)?,
        FittedModel::Persistence(_) => {
            return Err(Failure::Usage("persistence has no parameters to train".into()));
        }
    }
    if let Some(h) = &history {
        write_json(&dir.join("history.json"), h)?;
        let last = h.epochs.last();
        println!(
            "{kind} on {} L={input_len} H={horizon}: {} epochs, {} steps, best epoch {:?}, final val loss {:?}",
            splits.plant_id(),
            h.epochs.len(),
            h.steps,
            h.best_epoch,
            last.and_then(|e| e.val_loss)
        );
    }
    println!("checkpoint -> {}", path.display());
    Ok(())
}

fn load_checkpoint(path: &Path) -> CliResult<Box<dyn Forecast>> {
    let c = Container::load(path)?;
    let meta: serde_json::Value =
        serde_json::from_str(&c.meta).map_err(|e| Error::format(format!("checkpoint metadata: {e}")))?;
    if meta.get("model").and_then(|m| m.as_str()) == Some("dlinear") {
        Ok(Box::new(DLinear::from_container(&c)?))
    } else {
        Ok(Box::new(Forecaster::from_container(&c)?))
    }
}

fn eval_cmd(common: &Common, checkpoint: &Path) -> CliResult<()> {
    let cfg = common.config()?;
    let dir = out_dir(common.out.as_deref(), Some(&cfg))?;
    let model = load_checkpoint(checkpoint)?;
    let all = load_plants(&cfg)?;
    let mut plants = select_plants(&cfg, &all)?;
    let series = match common.target.as_ref().or(common.source.as_ref()) {
        Some(id) => plants
            .into_iter()
            .find(|s| &s.plant_id == id)
            .ok_or_else(|| Error::config(format!("no data for plant {id}")))?,
        None => plants.remove(0),
    };
    let splits = AuditedSplits::new(series)?;
    let test = splits.windows(SplitKind::Test, model.input_len(), model.horizon(), cfg.windows.test_stride)?;
    let eval = evaluate(model.as_ref(), &test)?;
    #[derive(Serialize)]
    struct Scored<'a> {
        plant: &'a str,
        model: &'a str,
        input_len: usize,
        horizon: usize,
        windows: usize,
        metrics: tsreprogram::metrics::MetricsReport,
    }
    let scored = Scored {
        plant: splits.plant_id(),
        model: model.label(),
        input_len: model.input_len(),
        horizon: model.horizon(),
        windows: test.len(),
        metrics: eval.report,
    };
    println!("{}", serde_json::to_string_pretty(&scored).map_err(|e| Error::format(e.to_string()))?);
    write_json(&dir.join("metrics.json"), &scored)
}

fn experiment(common: &Common) -> CliResult<()> {
    let cfg = common.config()?;
    let dir = out_dir(common.out.as_deref(), Some(&cfg))?;
    let out = run_experiment(&cfg, &dir)?;
    println!(
        "{} rows -> {}\nsummary -> {}\ncases -> {}\n{} traces",
        out.rows.len(),
        out.report_path.display(),
        out.summary_path.display(),
        out.cases_path.display(),
        out.traces.len()
    );
    Ok(())
}

fn summarize_cmd(report: &Path, out: Option<&Path>) -> CliResult<()> {
    let rows = load_report(report)?;
    let summary = summarize(&rows)?;
    match out {
        Some(_) => {
            let dir = out_dir(out, None)?;
            let path = dir.join("summary.csv");
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_csv(std::io::BufWriter::new(file), &summary)?;
            println!("summary -> {}", path.display());
        }
        None => write_csv(std::io::stdout().lock(), &summary)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Synth { days, seed, out } => synth(*days, *seed, out.as_deref()),
        Command::Prep(c) => prep(c),
        Command::Train(c) => train_cmd(c),
        Command::Eval { common, checkpoint } => eval_cmd(common, checkpoint),
        Command::Experiment(c) => experiment(c),
        Command::Summarize { report, out } => summarize_cmd(report, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(e)) => {
            eprintln!("{} error: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
