//! The `granulex` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use granulex::combiners::HFunction;
use granulex::evaluation::{run_protocol, MethodSpec};
use granulex::learners::{Dataset, LearnerSpec};
use granulex::seed;
use granulex::training::{check_stratifiable, generate_meta_cv, select_alpha, train, AlphaGrid, FoldPlan, TrainedEnsemble};

use crate::config::{ExperimentConfig, Overrides};
use crate::data::{read_features, LabelColumn};
use crate::report::{human_table, runs_csv, summary_csv, EvaluationOutput};
use crate::WorkbenchError;

/// Caps the rayon pool size.
pub const THREADS_ENV: &str = "GRANULEX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "granulex", version, about = "Granular combination of classifier ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a granular ensemble on one dataset and write it as JSON
    /// (`--output` is the model file; stdout when omitted).
    Train(ExperimentArgs),
    /// Classify the rows of a CSV with a trained ensemble.
    Predict(PredictArgs),
    /// Run repeated stratified cross-validation over datasets and methods
    /// (`--output` is a report directory; only the table is printed when omitted).
    Evaluate(ExperimentArgs),
    /// Cross-validated error for every alpha of the grid, as CSV
    /// (`--output` is the CSV file; stdout when omitted).
    AlphaCurve(ExperimentArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV path or `bundled:<iris|wine|breast-cancer>`; repeatable.
    #[arg(long)]
    data: Vec<String>,
    /// Label column index or header name (default: last column).
    #[arg(long)]
    label_column: Option<LabelColumn>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed alpha instead of a cross-validated grid search.
    #[arg(long, conflicts_with = "grid")]
    alpha: Option<f64>,
    /// Alpha grid `lo:step:hi`.
    #[arg(long)]
    grid: Option<AlphaGrid>,
    /// De-granulation weight.
    #[arg(long)]
    h: Option<HFunction>,
    /// Comma-separated learners, e.g. `lda,naive-bayes,knn:5,decision-tree`.
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<LearnerSpec>>,
    /// Comma-separated methods, e.g. `learners,sum,median,granular-cv,granular-fixed:1`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodSpec>>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with a header row. A label column is dropped when named by
    /// `--label-column` or when the file has one column more than the model.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// Also emit per-class intervals and numerical class memberships.
    #[arg(long)]
    emit_intervals: bool,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, WorkbenchError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        config.apply(Overrides {
            data: self.data,
            label_column: self.label_column,
            folds: self.folds,
            repeats: self.repeats,
            seed: self.seed,
            alpha: self.alpha,
            grid: self.grid,
            h: self.h,
            learners: self.learners,
            methods: self.methods,
            output: self.output,
        })?;
        Ok(config)
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// status: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|()| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("granulex: {}", e.to_string().replace('\n', " "));
            if matches!(e, WorkbenchError::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() -> Result<(), WorkbenchError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| WorkbenchError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    // A pool that already exists (repeated calls in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(command: Command) -> Result<(), WorkbenchError> {
    match command {
        Command::Train(args) => cmd_train(args.resolve()?),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args.resolve()?),
        Command::AlphaCurve(args) => cmd_alpha_curve(args.resolve()?),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), WorkbenchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| WorkbenchError::io(format!("creating {}", parent.display()), e))?;
    }
    std::fs::write(path, contents).map_err(|e| WorkbenchError::io(format!("writing {}", path.display()), e))
}

fn emit(output: Option<&Path>, contents: &str) -> Result<(), WorkbenchError> {
    match output {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn single_dataset(config: &ExperimentConfig) -> Result<Dataset, WorkbenchError> {
    config.validate()?;
    if config.datasets.len() != 1 {
        return Err(WorkbenchError::Usage(format!("expected exactly one dataset, got {}", config.datasets.len())));
    }
    config.datasets[0].load()
}

fn cmd_train(config: ExperimentConfig) -> Result<(), WorkbenchError> {
    let data = single_dataset(&config)?;
    let ensemble = train(&data, &config.learners, &config.alpha, config.h, config.folds, config.seed)?;
    eprintln!(
        "trained {} classifiers on {} ({} observations); alpha = {}, h = {}",
        ensemble.n_classifiers(),
        data.name(),
        data.len(),
        ensemble.alpha,
        ensemble.h
    );
    let mut json = ensemble.to_json()?;
    json.push('\n');
    emit(config.output.as_deref(), &json)
}

/// Cross-validated `(alpha, error)` pairs; same seeds as `train`, so the
/// curve matches the one stored in a model trained with this config.
pub fn alpha_curve(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<(f64, f64)>, WorkbenchError> {
    let grid = config
        .grid()
        .ok_or_else(|| WorkbenchError::Usage("alpha-curve needs a grid, not a fixed --alpha".into()))?;
    check_stratifiable(data, config.folds)?;
    let plan = FoldPlan::stratified(data.labels(), config.folds, seed::derive(config.seed, &[0]))?;
    let meta = generate_meta_cv(data, &config.learners, &plan, seed::derive(config.seed, &[1]))?;
    let (_, curve) = select_alpha(&meta, data.labels(), grid, config.h)?;
    Ok(curve)
}

fn cmd_alpha_curve(config: ExperimentConfig) -> Result<(), WorkbenchError> {
    let data = single_dataset(&config)?;
    let curve = alpha_curve(&data, &config)?;
    let mut out = String::from("alpha,error\n");
    for (alpha, error) in curve {
        let _ = writeln!(out, "{alpha},{error}");
    }
    emit(config.output.as_deref(), &out)
}

fn cmd_evaluate(config: ExperimentConfig) -> Result<(), WorkbenchError> {
    config.validate()?;
    let datasets = config.load_datasets()?;
    let report = run_protocol(&datasets, &config.protocol()?)?;
    let table = human_table(&report);
    print!("{table}");
    if let Some(dir) = &config.output {
        let output = EvaluationOutput { config: config.clone(), report };
        write_file(&dir.join("report.json"), &output.to_json())?;
        write_file(&dir.join("runs.csv"), &runs_csv(&output.report)?)?;
        write_file(&dir.join("summary.csv"), &summary_csv(&output.report)?)?;
        write_file(&dir.join("report.txt"), &table)?;
        write_file(&dir.join("config.json"), &(config.to_json() + "\n"))?;
    }
    Ok(())
}

/// Predictions as CSV: `obs_id`, then with `emit_intervals` the per-class
/// `lower`/`upper` bounds and `ncm` values, then the decided class name.
pub fn predictions_csv(
    ensemble: &TrainedEnsemble,
    rows: &[Vec<f64>],
    emit_intervals: bool,
) -> Result<String, WorkbenchError> {
    let predictions = ensemble.predict_batch(rows)?;
    let names = ensemble.catalog.labels();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["obs_id".to_string()];
    if emit_intervals {
        for name in names {
            header.push(format!("{name}_lower"));
            header.push(format!("{name}_upper"));
        }
        header.extend(names.iter().map(|n| format!("{n}_ncm")));
    }
    header.push("decision".into());
    let err = |e: csv::Error| WorkbenchError::Data(format!("writing CSV: {e}"));
    w.write_record(&header).map_err(err)?;
    for (i, p) in predictions.iter().enumerate() {
        let mut record = vec![i.to_string()];
        if emit_intervals {
            for g in &p.intervals.granules {
                record.push(g.lower.to_string());
                record.push(g.upper.to_string());
            }
            record.extend(p.decision.memberships.values.iter().map(ToString::to_string));
        }
        record.push(names[p.class()].clone());
        w.write_record(&record).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| WorkbenchError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| WorkbenchError::Data(e.to_string()))
}

fn cmd_predict(args: PredictArgs) -> Result<(), WorkbenchError> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| WorkbenchError::io(format!("reading {}", args.model.display()), e))?;
    let ensemble = TrainedEnsemble::from_json(&text)?;
    let csv_text = std::fs::read_to_string(&args.data)
        .map_err(|e| WorkbenchError::io(format!("reading {}", args.data.display()), e))?;
    let width = csv::Reader::from_reader(csv_text.as_bytes())
        .headers()
        .map_err(|e| WorkbenchError::Data(format!("{}: {e}", args.data.display())))?
        .len();
    let drop = match args.label_column {
        Some(column) => Some(column),
        None if width == ensemble.dim() + 1 => Some(LabelColumn::default()),
        None => None,
    };
    let rows = read_features(csv_text.as_bytes(), true, drop.as_ref())
        .map_err(|e| WorkbenchError::Data(format!("{}: {}", args.data.display(), e.message())))?;
    if let Some(row) = rows.first().filter(|r| r.len() != ensemble.dim()) {
        return Err(WorkbenchError::Data(format!(
            "{}: {} feature columns, model expects {}",
            args.data.display(),
            row.len(),
            ensemble.dim()
        )));
    }
    emit(args.output.as_deref(), &predictions_csv(&ensemble, &rows, args.emit_intervals)?)
}
