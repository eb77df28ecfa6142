//! `fairpost` command line: fairness audits, threshold sweeps, score
//! ablations, bias certificates, synthetic checks, and latency probes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpost_core::harness::{
    self, AblationRow, ExperimentConfig, PostProc, SweepResult, SyntheticConfig,
};
use fairpost_core::model::{Model, ModelKind};

use fairpost::error::{Error, Result};
use fairpost::ingest::LoadedDataset;
use fairpost::{ingest, latency, model_io, parallel, report};

#[derive(Parser)]
#[command(name = "fairpost", version, about = "Fairness auditing and post-processing for binary classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated-split audit of post-processors against the base model.
    Audit(AuditArgs),
    /// Accuracy and parity curves across decision thresholds.
    Sweep(SweepArgs),
    /// Factual, counterfactual, and averaged scores from one fitted model.
    Ablate(AblateArgs),
    /// Counterfactual-bias certificate for a trained model.
    Certify(CertifyArgs),
    /// Synthetic-data checks of the averaging guarantees.
    Synthcheck(SynthArgs),
    /// Per-prediction overhead of averaging relative to the base model.
    Latency(LatencyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV file.
    #[arg(long)]
    dataset: PathBuf,
    /// Schema JSON describing columns, label, and protected attribute.
    #[arg(long)]
    schema: PathBuf,
    /// Model family to train.
    #[arg(long, value_enum, default_value_t = ModelArg::Lr)]
    model: ModelArg,
    /// Base seed for splits and training.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows in each training split.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
}

#[derive(Args)]
struct OutArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timestamps so identical inputs produce identical bytes.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Lr,
    Rf,
    Gbt,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Lr => ModelKind::Lr,
            ModelArg::Rf => ModelKind::Rf,
            ModelArg::Gbt => ModelKind::Gbt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PostProcArg {
    None,
    Cafp,
    Eqodds,
    Reject,
}

impl From<PostProcArg> for PostProc {
    fn from(p: PostProcArg) -> Self {
        match p {
            PostProcArg::None => PostProc::None,
            PostProcArg::Cafp => PostProc::Cafp,
            PostProcArg::Eqodds => PostProc::EqOdds,
            PostProcArg::Reject => PostProc::Reject,
        }
    }
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Post-processor to evaluate; repeatable. Defaults to all four.
    #[arg(long = "postproc", value_enum)]
    postproc: Vec<PostProcArg>,
    /// Number of repeated splits.
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// Decision threshold for audited predictions.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Directory for plot-ready CSV tables.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Directory for plot-ready CSV tables.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Directory for plot-ready CSV tables.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Save the trained model envelope here.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Certify a previously saved model instead of training one.
    #[arg(long, conflicts_with = "model_out")]
    model_in: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Base seed for the generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample size.
    #[arg(long, default_value_t = 10000)]
    n: usize,
    /// Direct protected-attribute coefficient in the label model.
    #[arg(long, default_value_t = 1.5)]
    a_coef: f64,
    /// Shift of the first feature for protected rows; nonzero voids the
    /// independence premise and waives the checks that rest on it.
    #[arg(long, default_value_t = 0.0)]
    confound: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct LatencyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Rows per timed batch.
    #[arg(long, default_value_t = 1000)]
    batch: usize,
    /// Timing repetitions; the median is reported.
    #[arg(long, default_value_t = 21)]
    trials: usize,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit(args) => cmd_audit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Synthcheck(args) => cmd_synthcheck(args),
        Command::Latency(args) => cmd_latency(args),
    }
}

fn base_config(data: &DataArgs, loaded: &LoadedDataset) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        &loaded.dataset_id,
        &data.schema.display().to_string(),
        data.model.into(),
    );
    cfg.base_seed = data.seed;
    cfg.train_fraction = data.train_fraction;
    cfg
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let loaded = ingest::load_with_ids(&args.data.dataset, &args.data.schema)?;
    let mut cfg = base_config(&args.data, &loaded);
    cfg.repeats = args.repeats;
    cfg.threshold = args.threshold;
    if !args.postproc.is_empty() {
        let mut chosen: Vec<PostProc> = Vec::new();
        for p in &args.postproc {
            let p = PostProc::from(*p);
            if !chosen.contains(&p) {
                chosen.push(p);
            }
        }
        cfg.postprocessors = chosen;
    }
    let fairness = parallel::run_experiment_parallel(&loaded.dataset, &cfg)?;
    if let Some(dir) = &args.plot_data {
        report::write_plot_data(dir, &[("metric_bars.csv", report::metric_bars_csv(&fairness))])?;
    }
    let text = report::render_json("audit", &fairness, args.out.reproducible)?;
    report::emit(args.out.out.as_deref(), &text)
}

#[derive(serde::Serialize)]
struct SweepPayload<'a> {
    config: &'a ExperimentConfig,
    note: &'static str,
    sweep: &'a SweepResult,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let loaded = ingest::load_with_ids(&args.data.dataset, &args.data.schema)?;
    let cfg = base_config(&args.data, &loaded);
    let sweep = harness::threshold_sweep(&loaded.dataset, &cfg)?;
    if let Some(dir) = &args.plot_data {
        report::write_plot_data(dir, &[("sweep_curves.csv", report::sweep_csv(&sweep))])?;
    }
    let payload = SweepPayload {
        config: &cfg,
        note: "equalized-odds rows repeat the fitted mixer's fixed operating point; \
               the mixer has no tunable threshold",
        sweep: &sweep,
    };
    let text = report::render_json("sweep", &payload, args.out.reproducible)?;
    report::emit(args.out.out.as_deref(), &text)
}

#[derive(serde::Serialize)]
struct AblatePayload<'a> {
    config: &'a ExperimentConfig,
    rows: &'a [AblationRow],
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let loaded = ingest::load_with_ids(&args.data.dataset, &args.data.schema)?;
    let cfg = base_config(&args.data, &loaded);
    let table = harness::ablation(&loaded.dataset, &cfg)?;
    if let Some(dir) = &args.plot_data {
        report::write_plot_data(dir, &[("ablation_rows.csv", report::ablation_csv(&table))])?;
    }
    let payload = AblatePayload { config: &cfg, rows: &table.rows };
    let text = report::render_json("ablate", &payload, args.out.reproducible)?;
    report::emit(args.out.out.as_deref(), &text)
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let loaded = ingest::load_with_ids(&args.data.dataset, &args.data.schema)?;
    let mut cfg = base_config(&args.data, &loaded);
    cfg.repeats = 1;

    let (model, test): (Model, _) = match &args.model_in {
        Some(path) => {
            let envelope = model_io::load_model(path)?;
            if envelope.schema_sha256 != loaded.schema_sha256 {
                return Err(Error::Check(format!(
                    "model at {} was trained under a different schema \
                     (stored hash {}, current {})",
                    path.display(),
                    &envelope.schema_sha256[..8.min(envelope.schema_sha256.len())],
                    &loaded.schema_sha256[..8],
                )));
            }
            let test = harness::eval_split(&loaded.dataset, &cfg, 0)?;
            (envelope.model, test)
        }
        None => harness::fit_pipeline(&loaded.dataset, &cfg, 0)?,
    };

    if let Some(path) = &args.model_out {
        let envelope = model_io::ModelEnvelope {
            format_version: model_io::FORMAT_VERSION,
            schema_sha256: loaded.schema_sha256.clone(),
            feature_names: loaded.dataset.feature_names().to_vec(),
            model: model.clone(),
        };
        model_io::save_model(path, &envelope)?;
    }

    let cert = fairpost_core::cafp::eo_bound_certificate(&model, &test)?;
    let payload = serde_json::json!({
        "b0": cert.b0,
        "b1": cert.b1,
        "bound": cert.bound,
        "n0": cert.n0,
        "n1": cert.n1,
        "model_id": model_io::model_id(&model)?,
        "dataset_id": loaded.dataset_id,
    });
    let mut text = serde_json::to_string_pretty(&payload)?;
    text.push('\n');
    report::emit(args.out.out.as_deref(), &text)
}

fn cmd_synthcheck(args: SynthArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        seed: args.seed,
        n: args.n,
        a_coefficient: args.a_coef,
        confound: args.confound,
    };
    let ledger = harness::synthetic_theorem_suite(&cfg)?;
    let text = report::render_json("synthcheck", &ledger, args.out.reproducible)?;
    report::emit(args.out.out.as_deref(), &text)?;
    if !ledger.all_pass() {
        let failed: Vec<&str> = ledger
            .checks
            .iter()
            .filter(|c| !c.passed && !c.waived)
            .map(|c| c.name)
            .collect();
        return Err(Error::Check(format!("synthetic checks failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn cmd_latency(args: LatencyArgs) -> Result<()> {
    let loaded = ingest::load_with_ids(&args.data.dataset, &args.data.schema)?;
    let mut cfg = base_config(&args.data, &loaded);
    cfg.repeats = 1;
    let (model, test) = harness::fit_pipeline(&loaded.dataset, &cfg, 0)?;
    let probe = latency::latency_probe(&model, &test, args.batch, args.trials)?;
    let text = report::render_json("latency", &probe, args.out.reproducible)?;
    report::emit(args.out.out.as_deref(), &text)
}
