use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lupi_core::bundle::{diagnose, ModelBundle};
use lupi_core::data::{
    load_dataset, make_synthetic_lupi_with_easiness, normalize, read_vector_csv, write_labels_csv,
    write_matrix_csv, Dataset, HumanScores, LabelSource, Normalization, Space, SyntheticSpec,
};
use lupi_core::experiment::{run_experiment, DataSource, ExperimentConfig};
use lupi_core::method::{Method, TrainSettings};
use lupi_core::model_selection::{cross_validate, grid_for, CvGrid, CvPlan};
use lupi_core::par;
use lupi_core::qp::{solve_qp, QpDocument, QpOptions, QpProblem, QpStatus};
use lupi_core::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "lupi", version, about = "Learning using privileged information: SVM+, Margin Transfer and baselines")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with controllable sample easiness.
    Gen(GenArgs),
    /// Train one model and write it as a JSON bundle.
    Train(TrainArgs),
    /// Compare methods over repeated train/test splits.
    Experiment(ExperimentArgs),
    /// Inspect models and solver problems.
    #[command(subcommand)]
    Diag(DiagCommand),
}

#[derive(Subcommand)]
enum DiagCommand {
    /// Per-sample margins, slacks and rank correlations of a binary model.
    Model(DiagModelArgs),
    /// Solve a QP given in JSON and print the solution.
    Qp(DiagQpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    L1,
    L2,
    None,
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::L1 => Normalization::L1,
            NormalizeArg::L2 => Normalization::L2,
            NormalizeArg::None => Normalization::None,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Number of samples (even).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    d_star: usize,
    /// Noise level of the original features.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Noise level of the privileged features.
    #[arg(long, default_value_t = 0.05)]
    noise_priv: f64,
    #[arg(long, default_value_t = 0.2)]
    easiness_min: f64,
    #[arg(long, default_value_t = 2.0)]
    easiness_max: f64,
}

impl SynthArgs {
    fn spec(&self, default_n: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n: self.n.unwrap_or(default_n),
            d: self.d,
            d_star: self.d_star,
            noise_orig: self.noise,
            noise_priv: self.noise_priv,
            easiness: (self.easiness_min, self.easiness_max),
            seed,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Original features CSV.
    #[arg(long)]
    features: PathBuf,
    /// Privileged features CSV, row-aligned with the original features.
    #[arg(long)]
    privileged: Option<PathBuf>,
    /// Labels CSV; without it the last feature column holds the labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Per-sample normalization applied to both feature spaces.
    #[arg(long, value_enum, default_value = "none")]
    normalize: NormalizeArg,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let labels = self.labels.clone().map_or(LabelSource::LastColumn, LabelSource::File);
        let data = load_dataset(&self.features, self.privileged.as_deref(), &labels)?;
        normalized(data, self.normalize.into())
    }
}

fn normalized(mut data: Dataset, scheme: Normalization) -> Result<Dataset> {
    if scheme != Normalization::None {
        data = normalize(&data, scheme, Space::Original)?;
        if data.x_star.is_some() {
            data = normalize(&data, scheme, Space::Privileged)?;
        }
    }
    Ok(data)
}

#[derive(Args)]
struct SolverArgs {
    /// Lower bound of the transferred margins.
    #[arg(long, default_value_t = lupi_core::margin_transfer::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Original-space C values.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Privileged-space values: teacher C for margin_transfer and the
    /// reference, γ for svm_plus.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn settings(&self) -> TrainSettings {
        TrainSettings {
            epsilon: self.epsilon,
            ..TrainSettings::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Cross-validation repetitions when a grid has several values.
    #[arg(long)]
    repeats: Option<usize>,
    /// Model bundle path. Margin Transfer also writes `<stem>.margins.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Methods to compare, comma separated. Defaults to all four.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Original features CSV; without it a synthetic dataset is drawn.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    privileged: Option<PathBuf>,
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    normalize: NormalizeArg,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Train/test resplits.
    #[arg(long, default_value_t = lupi_core::experiment::DEFAULT_REPEATS)]
    repeats: usize,
    /// Cross-validation repetitions inside each split.
    #[arg(long)]
    cv_repeats: Option<usize>,
    #[arg(long, default_value_t = 100)]
    n_train_per_class: usize,
    /// Name of the task row in the CSV report.
    #[arg(long)]
    task: Option<String>,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagModelArgs {
    /// Model bundle written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Human easiness scores in [1, 16], one per row.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Output directory for diagnostics.json and diagnostics.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagQpArgs {
    /// QP in JSON: {"p", "q", "g", "h", "a", "b"} with matrices as row arrays.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("serialization: {e}")))
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let spec = args.synth.spec(SyntheticSpec::default().n, args.seed);
    let draw = make_synthetic_lupi_with_easiness(&spec)?;
    create_dir(&args.out)?;
    let d = &draw.data;
    write_matrix_csv(&args.out.join("original.csv"), &d.x)?;
    write_matrix_csv(&args.out.join("privileged.csv"), d.privileged()?)?;
    write_labels_csv(&args.out.join("labels.csv"), &d.y)?;
    let positives = d.y.iter().filter(|&&l| l == 1).count();
    println!(
        "N={} d={} d_star={} positives={} negatives={}",
        d.len(),
        d.dim(),
        spec.d_star,
        positives,
        d.len() - positives
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let data = args.data.load()?;
    let method = args.method;
    if method.needs_privileged() && data.x_star.is_none() {
        return Err(Error::InvalidArgument(format!("{method} needs --privileged")));
    }
    let scheme: Normalization = args.data.normalize.into();
    let orig_space = if method == Method::ReferencePrivileged {
        Space::Privileged
    } else {
        Space::Original
    };
    let orig = args.solver.c_grid.clone().unwrap_or_else(|| grid_for(scheme, orig_space));
    let grid = if method.is_lupi() {
        let priv_values = args
            .solver
            .gamma_grid
            .clone()
            .unwrap_or_else(|| grid_for(scheme, Space::Privileged));
        CvGrid::new(orig, priv_values)?
    } else {
        CvGrid::single(orig)?
    };
    let settings = args.solver.settings();
    let points = grid.points();
    let point = if points.len() == 1 {
        points[0]
    } else {
        let default = CvPlan::for_data(&data, args.solver.seed);
        let plan = CvPlan {
            folds: args.solver.folds.unwrap_or(default.folds),
            outer_repeats: args.repeats.unwrap_or(default.outer_repeats),
            ..default
        };
        let cv = cross_validate(&data, method, &grid, &plan, &settings)?;
        eprintln!("selected {} with mean validation accuracy {:.4}", cv.best, cv.best_mean);
        cv.best
    };
    let bundle = ModelBundle::train(method, &data, &point, &settings)?;
    write_file(&args.out, &bundle.to_json()?)?;
    if let lupi_core::bundle::BundleModel::MarginTransfer { margins, .. } = &bundle.model {
        let path = args.out.with_extension("margins.csv");
        let mut text = String::from("rho\n");
        for r in &margins.rho {
            text.push_str(&format!("{r:?}\n"));
        }
        write_file(&path, &text)?;
    }
    let acc = lupi_core::stats::accuracy(&bundle.predict(&data)?, &data.y)?;
    println!("{method} {point}: training accuracy {acc:.4}");
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let (source, task) = match &args.features {
        Some(features) => (
            DataSource::Files {
                features: features.clone(),
                privileged: args.privileged.clone(),
                labels: args.labels.clone(),
            },
            features
                .file_stem()
                .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned()),
        ),
        None => {
            // Test set twice the training set per class.
            let n = 6 * args.n_train_per_class;
            (DataSource::Synthetic(args.synth.spec(n, args.solver.seed)), "synthetic".to_string())
        }
    };
    let scheme: Normalization = args.normalize.into();
    let config = ExperimentConfig {
        methods: if args.method.is_empty() {
            Method::ALL.to_vec()
        } else {
            args.method.clone()
        },
        repeats: args.repeats,
        n_train_per_class: args.n_train_per_class,
        normalize_original: scheme,
        normalize_privileged: scheme,
        folds: args.solver.folds,
        cv_repeats: args.cv_repeats,
        c_grid: args.solver.c_grid.clone(),
        priv_grid: args.solver.gamma_grid.clone(),
        gamma_grid: args.solver.gamma_grid.clone(),
        seed: args.solver.seed,
        settings: args.solver.settings(),
        ..ExperimentConfig::new(args.task.clone().unwrap_or(task), source)
    };
    let report = run_experiment(&config)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("report.json"), &report.to_json()?)?;
    let csv_path = args.out.join("report.csv");
    let mut csv = Vec::new();
    report
        .write_csv(&mut csv)
        .map_err(|source| Error::Io {
            file: csv_path.clone(),
            source,
        })?;
    write_file(&csv_path, &String::from_utf8_lossy(&csv))?;
    for s in &report.summary {
        match s.stderr {
            Some(se) => println!("{:<28} {:.4} ± {:.4}", s.method.name(), s.mean, se),
            None => println!("{:<28} {:.4}", s.method.name(), s.mean),
        }
    }
    Ok(())
}

fn cmd_diag_model(args: &DiagModelArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).map_err(|source| Error::Io {
        file: args.model.clone(),
        source,
    })?;
    let bundle = ModelBundle::from_json(&text)?;
    let data = args.data.load()?;
    let scores = match &args.scores {
        Some(p) => Some(HumanScores::new(read_vector_csv(p)?)?),
        None => None,
    };
    let diag = diagnose(&bundle, &data, scores.as_ref())?;
    create_dir(&args.out)?;
    write_file(&args.out.join("diagnostics.json"), &to_json(&diag)?)?;

    let columns: Vec<(&str, &Option<Vec<f64>>)> = vec![
        ("original_margin", &diag.original_margins),
        ("teacher_margin", &diag.teacher_margins),
        ("slack", &diag.slacks),
        ("rho", &diag.rho),
        ("score_margin", &diag.score_margins),
    ];
    let present: Vec<(&str, &Vec<f64>)> = columns
        .into_iter()
        .filter_map(|(name, v)| v.as_ref().map(|v| (name, v)))
        .collect();
    let mut csv = String::from("index,label");
    for (name, _) in &present {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for (i, label) in data.y.iter().enumerate() {
        csv.push_str(&format!("{i},{label}"));
        for (_, v) in &present {
            csv.push_str(&format!(",{:?}", v[i]));
        }
        csv.push('\n');
    }
    write_file(&args.out.join("diagnostics.csv"), &csv)?;
    println!("{}", to_json(&diag.tau)?);
    Ok(())
}

fn cmd_diag_qp(args: &DiagQpArgs) -> Result<()> {
    let text = fs::read_to_string(&args.problem).map_err(|source| Error::Io {
        file: args.problem.clone(),
        source,
    })?;
    let doc: QpDocument = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: args.problem.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let problem = QpProblem::try_from(doc)?;
    let options = QpOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let solution = solve_qp(&problem, &options)?;
    let json = to_json(&solution)?;
    match &args.out {
        Some(p) => write_file(p, &json)?,
        // A closed pipe is not an error for a printing command.
        None => drop(writeln!(std::io::stdout().lock(), "{json}")),
    }
    if solution.status != QpStatus::Optimal {
        return Err(Error::Solver(format!(
            "solver stopped with status {:?} after {} iterations (kkt residual {:.3e})",
            solution.status, solution.iterations, solution.kkt_residual
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    par::with_jobs(cli.jobs, || match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Diag(DiagCommand::Model(a)) => cmd_diag_model(a),
        Command::Diag(DiagCommand::Qp(a)) => cmd_diag_qp(a),
    })
}

fn exit_code(err: &Error) -> u8 {
    if err.is_usage() {
        EXIT_USAGE
    } else if err.is_solver() {
        EXIT_SOLVER
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
