//! The `fraudgraph` command line.
//!
//! Exit statuses: 0 success, 1 usage error, 2 data or validation error,
//! 3 failed gradient check. Failures print one line of the form
//! `error[<kind>]: <reason>` on stderr, where kind is `usage`, `data` or
//! `gradcheck`.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use fraudgraph::checkpoint::Checkpoint;
use fraudgraph::fixtures::toy_gradcheck;
use fraudgraph::ingest::{parse_transactions, TransactionRecord};
use fraudgraph::pipeline::{fit, prepare_with_encoder, Prepared};
use fraudgraph::synthgen::generate_csv;
use fraudgraph::training::{evaluate, split_labels, Metrics};
use fraudgraph::workflow::{alerts_for, simulate_workflow, AdvicePolicy};

pub use config::{RunConfigFile, WorkflowConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_GRADCHECK: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            kind: "data",
            message: message.into(),
        }
    }

    /// The single stderr line for this failure.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("error[{}]: {}", self.kind, flat.join(" "))
    }
}

impl From<fraudgraph::Error> for Failure {
    fn from(e: fraudgraph::Error) -> Self {
        Failure::data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fraudgraph", version, about = "Relational GCN fraud scoring over card/merchant transaction graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic transaction corpus
    Gen(GenArgs),
    /// Parse, encode, build the graph, train, and save model and loss history
    Train(TrainArgs),
    /// Print metrics of a saved model on the held-out split
    Eval(EvalArgs),
    /// Finite-difference gradient check on a small fixed graph
    Gradcheck(GradcheckArgs),
    /// Route the held-out transactions through the contact workflow
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_cards: Option<usize>,
    #[arg(long)]
    n_merchants: Option<usize>,
    #[arg(long)]
    n_transactions: Option<usize>,
    #[arg(long)]
    fraud_rate: Option<f64>,
    #[arg(long)]
    signal_strength: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_history: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Skip malformed rows instead of failing
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, required_unless_present = "baseline")]
    model: Option<PathBuf>,
    /// Split settings when no model is given
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Which transactions to score
    #[arg(long, value_enum, default_value = "test")]
    split: SplitChoice,
    /// Score a fixed predictor instead of a model
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Baseline {
    /// Predict "legitimate" for every transaction
    AllLegit,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    contact_fraction: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Seed of the association-advice draw
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lenient: bool,
}

/// Runs the command line with process stdout/stderr and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => return usage_error(e, out, err),
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Train(a) => cmd_train(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.line());
            f.code
        }
    }
}

fn usage_error(e: clap::Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    use clap::error::ErrorKind;
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = write!(out, "{e}");
        return EXIT_OK;
    }
    let rendered = e.to_string();
    let reason = rendered
        .lines()
        .next()
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ");
    let failure = Failure {
        code: EXIT_USAGE,
        kind: "usage",
        message: reason.to_string(),
    };
    let _ = writeln!(err, "{}", failure.line());
    let _ = write!(err, "{}", Cli::command().render_help());
    EXIT_USAGE
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), Failure> {
    w.flush()
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn read_records(path: &Path, lenient: bool, err: &mut dyn Write) -> Result<Vec<TransactionRecord>, Failure> {
    let file = File::open(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_transactions(BufReader::new(file), !lenient)?;
    if parsed.skipped > 0 {
        let _ = writeln!(err, "warning: skipped {} malformed rows", parsed.skipped);
    }
    Ok(parsed.records)
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    let file = File::open(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(Checkpoint::read(BufReader::new(file))?)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::data(format!("cannot write output: {e}")))
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = RunConfigFile::load(a.config.as_deref())?.gen;
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.n_cards {
        cfg.n_cards = v;
    }
    if let Some(v) = a.n_merchants {
        cfg.n_merchants = v;
    }
    if let Some(v) = a.n_transactions {
        cfg.n_transactions = v;
    }
    if let Some(v) = a.fraud_rate {
        cfg.fraud_rate = v;
    }
    if let Some(v) = a.signal_strength {
        cfg.signal_strength = v;
    }
    cfg.validate()?;
    let mut w = create(&a.out)?;
    let records = generate_csv(&cfg, &mut w)?;
    finish(w, &a.out)?;
    let frauds = records.iter().filter(|r| r.is_fraud).count();
    emit(out, &format!("rows = {}\nfrauds = {frauds}\n", records.len()))
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let file = RunConfigFile::load(a.config.as_deref())?;
    let mut train = file.training();
    if let Some(v) = a.epochs {
        train.epochs = v;
    }
    if let Some(v) = a.seed {
        train.seed = v;
    }
    if let Some(v) = a.learning_rate {
        train.learning_rate = v;
    }
    if let Some(v) = a.threshold {
        train.threshold = v;
    }
    train.validate()?;
    let records = read_records(&a.data, a.lenient, err)?;
    let (prepared, params, history) = fit(&records, &train, &file.encoder)?;

    let checkpoint = Checkpoint::new(&prepared.graph, params, prepared.encoder, train);
    let mut w = create(&a.out_model)?;
    checkpoint.write(&mut w)?;
    finish(w, &a.out_model)?;
    let mut w = create(&a.out_history)?;
    history.write_csv(&mut w)?;
    finish(w, &a.out_history)?;

    let last = history.records.last().expect("at least one epoch");
    emit(
        out,
        &format!(
            "epochs = {}\nfinal_train_loss = {}\nfinal_test_loss = {}\nsplit = test\nevaluated = {}\n{}",
            history.records.len(),
            last.train_loss,
            last.test_loss,
            prepared.split.test.len(),
            history.final_metrics.to_kv()
        ),
    )
}

fn chosen(prepared: &Prepared, split: SplitChoice) -> Vec<usize> {
    match split {
        SplitChoice::Train => prepared.split.train.clone(),
        SplitChoice::Test => prepared.split.test.clone(),
        SplitChoice::All => (0..prepared.graph.num_transactions()).collect(),
    }
}

fn split_name(split: SplitChoice) -> &'static str {
    match split {
        SplitChoice::Train => "train",
        SplitChoice::Test => "test",
        SplitChoice::All => "all",
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let records = read_records(&a.data, a.lenient, err)?;
    let (metrics, evaluated, predictor) = match (&a.model, a.baseline) {
        (_, Some(Baseline::AllLegit)) => {
            let train = match &a.model {
                Some(m) => read_checkpoint(m)?.training,
                None => RunConfigFile::load(a.config.as_deref())?.training(),
            };
            let labels: Vec<bool> = records.iter().map(|r| r.is_fraud).collect();
            let split = split_labels(&labels, train.split_ratio, train.seed)?;
            let idx: Vec<usize> = match a.split {
                SplitChoice::Train => split.train,
                SplitChoice::Test => split.test,
                SplitChoice::All => (0..labels.len()).collect(),
            };
            let m = Metrics::from_predictions(idx.iter().map(|&i| (false, labels[i])));
            (m, idx.len(), "all-legit")
        }
        (Some(model), None) => {
            let ck = read_checkpoint(model)?;
            let prepared = prepare_with_encoder(&records, &ck.training, &ck.encoder)?;
            ck.check_graph(&prepared.graph)?;
            let threshold = a.threshold.unwrap_or(ck.training.threshold);
            let idx = chosen(&prepared, a.split);
            let m = evaluate(&prepared.graph, &ck.params, &idx, threshold)?;
            (m, idx.len(), "model")
        }
        (None, None) => unreachable!("clap requires --model without --baseline"),
    };
    emit(
        out,
        &format!(
            "predictor = {predictor}\nsplit = {}\nevaluated = {evaluated}\n{}",
            split_name(a.split),
            metrics.to_kv()
        ),
    )
}

fn cmd_gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let report = toy_gradcheck(a.seed, a.epsilon, a.tolerance)?;
    let mut text = format!(
        "max_rel_error = {:e}\nworst_param = {}\ntolerance = {:e}\nscalars_checked = {}\n",
        report.max_rel_error, report.worst_param, report.tolerance, report.scalars_checked
    );
    for (name, e) in &report.per_param_errors {
        text.push_str(&format!("param {name} = {e:e}\n"));
    }
    text.push_str(&format!("passed = {}\n", report.passed()));
    emit(out, &text)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_GRADCHECK,
            kind: "gradcheck",
            message: format!(
                "max_rel_error {:e} at {} exceeds tolerance {:e}",
                report.max_rel_error, report.worst_param, report.tolerance
            ),
        })
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut wf = RunConfigFile::load(a.config.as_deref())?.workflow;
    if let Some(v) = a.contact_fraction {
        wf.contact_fraction = v;
    }
    if let Some(v) = a.threshold {
        wf.threshold = v;
    }
    if let Some(v) = a.seed {
        wf.seed = v;
    }
    let records = read_records(&a.data, a.lenient, err)?;
    let ck = read_checkpoint(&a.model)?;
    let prepared = prepare_with_encoder(&records, &ck.training, &ck.encoder)?;
    ck.check_graph(&prepared.graph)?;
    let alerts = alerts_for(&prepared.graph, &prepared.split.test);
    let policy = AdvicePolicy::Bernoulli {
        contact_fraction: wf.contact_fraction,
        seed: wf.seed,
    };
    let sim = simulate_workflow(&prepared.graph, &ck.params, &alerts, &policy, wf.threshold)?;
    let mut w = create(&a.out)?;
    sim.write_log(&alerts, &mut w)?;
    finish(w, &a.out)?;
    emit(out, &sim.stats.to_kv())
}
