//! Command-line entry point: stream generation, experiment runs,
//! strategy comparison, pseudo-label budget sweeps, and plot exports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fraudstream::evaluation::{rank_strategies, read_records, write_records, MetricKind};
use fraudstream::harness::{
    init_training_indices, m_sweep, run_experiment, DataSource, ExperimentConfig, HarnessError,
    Simulation,
};
use fraudstream::models::{train_balanced_forest, LabeledSample, Scorer};
use fraudstream::stream::{export_dataset, load_dataset, Dataset};
use fraudstream::viz::{density_grid, export_overlay, fit_pca, score_report, write_score_report};

const DENSITY_RESOLUTION: usize = 100;
const SCORE_BINS: usize = 50;

#[derive(Parser)]
#[command(
    name = "fraudstream",
    version,
    about = "Streaming fraud-detection simulator and alert-strategy lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a transaction stream and write it to a CSV file.
    Generate {
        /// Configuration file with generator settings.
        #[arg(long)]
        config: PathBuf,
        /// Destination CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured experiment and write per-day metric records.
    Run {
        /// Configuration file describing data, strategies, and budgets.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for records.csv and queries.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the strategies found in a records CSV.
    Compare {
        /// records.csv produced by the run command.
        #[arg(long)]
        records: PathBuf,
        /// Comparison metric: topk, aucpr, aucroc, or amount.
        #[arg(long, default_value = "topk")]
        metric: String,
        /// Significance level of the pairwise tests.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Rerun the experiment across pseudo-label budgets and tabulate
    /// the mean top-k precision per budget.
    SweepM {
        /// Configuration file; its strategy list must be exactly SR.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated budget values, e.g. 0,250,500,1000.
        #[arg(long)]
        values: String,
    },
    /// Project a stream into its two leading principal components and
    /// export class densities, query overlays, and score diagnostics.
    Viz {
        /// Stream CSV as written by the generate command.
        #[arg(long)]
        dataset: PathBuf,
        /// Optional CSV of query sets to overlay (header: name,trx_id).
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Output directory for grids, overlays, figure, and report.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let result = match &cli.command {
        Command::Generate { config, out } => cmd_generate(config, out),
        Command::Run { config, out } => cmd_run(config, out),
        Command::Compare {
            records,
            metric,
            alpha,
        } => cmd_compare(records, metric, *alpha),
        Command::SweepM { config, values } => cmd_sweep_m(config, values),
        Command::Viz {
            dataset,
            queries,
            out,
        } => cmd_viz(dataset, queries.as_deref(), out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Config(_) | HarnessError::Init(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn cmd_generate(config: &Path, out: &Path) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_file(config)?;
    if let DataSource::File(path) = &cfg.source {
        return Err(HarnessError::Config(format!(
            "generate needs generator settings, but the config names dataset = {}",
            path.display()
        )));
    }
    let ds = cfg.load_dataset()?;
    export_dataset(&ds, out)?;
    println!(
        "wrote {} transactions ({} frauds) over {} days to {}",
        ds.transactions().len(),
        ds.ground_truth().fraud_count(),
        ds.days(),
        out.display()
    );
    Ok(())
}

fn cmd_run(config: &Path, out_dir: &Path) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_file(config)?;
    let ds = cfg.load_dataset()?;
    let output = run_experiment(&cfg, &ds)?;

    std::fs::create_dir_all(out_dir)?;
    let records_path = out_dir.join("records.csv");
    write_records(&output.records, &records_path)?;
    let queries_path = out_dir.join("queries.csv");
    write_query_log(&cfg, &ds, &queries_path)?;

    println!(
        "wrote {} per-day records for {} strategies × {} repetitions to {}",
        output.records.len(),
        cfg.strategies.len(),
        cfg.repetitions,
        records_path.display()
    );
    if !output.failures.is_empty() {
        let failures_path = out_dir.join("failures.txt");
        let mut w = BufWriter::new(File::create(&failures_path)?);
        for f in &output.failures {
            writeln!(w, "strategy {}, repetition {}: {}", f.strategy, f.rep, f.error)?;
        }
        w.flush()?;
        eprintln!(
            "warning: {} cell(s) aborted, see {}",
            output.failures.len(),
            failures_path.display()
        );
    }
    Ok(())
}

/// Replays repetition 0 of every strategy (identical to the experiment's
/// cell by seeding) and writes each strategy's investigated transaction
/// ids, ready to overlay with the viz command.
fn write_query_log(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    path: &Path,
) -> Result<(), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed(0));
    let init = init_training_indices(ds, cfg.warmup, &mut rng)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "name,trx_id")?;
    for (si, id) in cfg.strategies.iter().enumerate() {
        let spec = cfg.strategy_spec(id, cfg.cell_seed(0, si));
        let mut sim = Simulation::new(ds, cfg, spec, init.clone())?;
        for day in cfg.warmup..ds.days() {
            sim.step_day(day)?;
        }
        for call in sim.oracle().calls() {
            for trx_id in &call.revealed {
                writeln!(w, "{id},{trx_id}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_compare(records_path: &Path, metric: &str, alpha: f64) -> Result<(), HarnessError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let kind = match metric {
        "topk" => MetricKind::TopkPrecision,
        "aucpr" => MetricKind::AucPr,
        "aucroc" => MetricKind::AucRoc,
        "amount" => MetricKind::FraudAmountRatio,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown metric {other:?} (expected topk, aucpr, aucroc, or amount)"
            )))
        }
    };
    let records = read_records(records_path)?;
    let report = rank_strategies(&records, kind, alpha)?;
    print!("{report}");
    Ok(())
}

fn cmd_sweep_m(config: &Path, values: &str) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_file(config)?;
    let mut parsed = Vec::new();
    for item in values.split(',') {
        let item = item.trim();
        let value: usize = item.parse().map_err(|_| {
            HarnessError::Config(format!("bad m value {item:?} (expected a non-negative integer)"))
        })?;
        parsed.push(value);
    }
    let ds = cfg.load_dataset()?;
    let points = m_sweep(&cfg, &ds, &parsed)?;
    println!("{:>8}  {:>14}  {:>6}", "m", "mean_topk", "days");
    for p in &points {
        println!("{:>8}  {:>14.6}  {:>6}", p.m, p.mean_topk, p.records);
    }
    Ok(())
}

fn cmd_viz(dataset: &Path, queries: Option<&Path>, out_dir: &Path) -> Result<(), HarnessError> {
    let ds = load_dataset(dataset)?;
    let truth = ds.ground_truth();
    let features: Vec<&[f64]> = ds
        .transactions()
        .iter()
        .map(|t| t.features.as_slice())
        .collect();
    let is_fraud: Vec<bool> = ds
        .transactions()
        .iter()
        .map(|t| truth.is_fraud(&t.trx_id))
        .collect();

    // Project everything onto the two leading principal components.
    let pca = fit_pca(&features)?;
    let coords = pca.project(&features, 2)?;
    let points: Vec<(f64, f64)> = coords.iter().map(|row| (row[0], row[1])).collect();
    let grid = density_grid(&points, &is_fraud, DENSITY_RESOLUTION, None)?;

    // Optional query overlays: project the listed transactions.
    let mut overlays: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    if let Some(queries_path) = queries {
        let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        let text = std::fs::read_to_string(queries_path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if lineno == 0 {
                if line != "name,trx_id" {
                    return Err(HarnessError::Config(format!(
                        "queries file must start with 'name,trx_id', found {line:?}"
                    )));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (name, trx_id) = line.split_once(',').ok_or_else(|| {
                HarnessError::Config(format!("queries row {}: expected name,trx_id", lineno + 1))
            })?;
            let trx = ds.transaction_by_id(trx_id).ok_or_else(|| {
                HarnessError::Config(format!(
                    "queries row {}: unknown transaction id {trx_id:?}",
                    lineno + 1
                ))
            })?;
            let projected = pca.project(&[trx.features.as_slice()], 2)?;
            groups
                .entry(name.to_string())
                .or_default()
                .push((projected[0][0], projected[0][1]));
        }
        overlays = groups.into_iter().collect();
    }

    std::fs::create_dir_all(out_dir)?;
    let written = export_overlay(&grid, &overlays, out_dir)?;

    // Score distribution diagnostic: a detector trained on the labeled
    // stream, scored in-sample.
    let samples: Vec<LabeledSample> = ds
        .transactions()
        .iter()
        .map(|t| {
            LabeledSample::new(
                t.features.clone(),
                truth.class_of(&t.trx_id).expect("dataset ids have truth"),
            )
        })
        .collect();
    let forest = train_balanced_forest(&samples, &Default::default())?;
    let mut scores = Vec::with_capacity(samples.len());
    for t in ds.transactions() {
        scores.push(forest.score(&t.features)?);
    }
    let report = score_report(&scores, &is_fraud, SCORE_BINS)?;
    let report_path = out_dir.join("score_report.csv");
    write_score_report(&report, &report_path)?;

    println!(
        "wrote {} file(s) and {} to {}",
        written.len(),
        report_path.file_name().unwrap().to_string_lossy(),
        out_dir.display()
    );
    Ok(())
}
