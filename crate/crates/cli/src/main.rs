use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use igiwerm::experiment::{
    ic_grid, iwcv_objective, load_pool, prepare_trial, run_experiment, DataSource,
    ExperimentConfig, Method, TrialReport,
};
use igiwerm::libsvm::parse_sparse;
use igiwerm::report::{emit_report, emit_surface, render_table, summarize};
use igiwerm::selection::{bayes_opt, grid_search, SearchBox, SelectionResult, Surface};
use igiwerm::{learners::LearnerConfig, Error};

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "igiwerm",
    version,
    about = "Covariate shift adaptation with generalized importance weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated trials on the synthetic quadratic regression task.
    Synth(RunArgs),
    /// Repeated trials on a LIBSVM classification file.
    Bench {
        /// LIBSVM file; overrides `source` in the config.
        data: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Grid search over (λ, α) on one trial, writing the loss surface.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        single: SingleArgs,
        /// Score grid nodes by the information criterion instead of
        /// importance-weighted cross-validation.
        #[arg(long)]
        criterion: bool,
        /// Surface CSV path.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Bayesian optimization of (λ, α) on one trial.
    Bopt {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        single: SingleArgs,
    },
    /// Parse a LIBSVM file and report its shape.
    ParseCheck { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerKind {
    Linear,
    Logistic,
    KernelRidge,
}

/// Settings shared by every experiment command. Flags override the JSON
/// config, which overrides the defaults.
#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synth` or a LIBSVM path.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    learner: Option<LearnerKind>,
    /// Kernel bandwidth for the kernel-ridge learner.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Ridge penalty for the kernel-ridge learner.
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    bo_init: Option<usize>,
    #[arg(long)]
    bo_iter: Option<usize>,
    #[arg(long)]
    grid_lambda: Option<usize>,
    #[arg(long)]
    grid_alpha: Option<usize>,
    /// `LO,HI`
    #[arg(long, value_delimiter = ',', num_args = 2)]
    lambda_range: Option<Vec<f64>>,
    /// `LO,HI`
    #[arg(long, value_delimiter = ',', num_args = 2)]
    alpha_range: Option<Vec<f64>>,
    /// Summary CSV; a `.txt` table is written beside it.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for per-trial surfaces of grid-based methods.
    #[arg(long)]
    surface_dir: Option<PathBuf>,
    /// Per-trial reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SingleArgs {
    /// Trial index whose split is used.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Selection result as JSON.
    #[arg(long)]
    selection: Option<PathBuf>,
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = &self.source {
            cfg.source = DataSource::from(s.clone());
        }
        if let Some(ms) = &self.methods {
            cfg.methods = ms.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(kind) = self.learner {
            cfg.learner = match kind {
                LearnerKind::Linear => LearnerConfig::Linear,
                LearnerKind::Logistic => LearnerConfig::logistic(),
                LearnerKind::KernelRidge => LearnerConfig::kernel_ridge(),
            };
        }
        if self.bandwidth.is_some() || self.ridge.is_some() {
            match &mut cfg.learner {
                LearnerConfig::KernelRidge { bandwidth, ridge } => {
                    *bandwidth = self.bandwidth.or(*bandwidth);
                    *ridge = self.ridge.or(*ridge);
                }
                _ => {
                    return Err(config_error(
                        "--bandwidth and --ridge apply only to the kernel-ridge learner",
                    ))
                }
            }
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        set!(
            trials,
            seed,
            folds,
            n_train,
            n_test,
            bo_init,
            bo_iter,
            grid_lambda,
            grid_alpha
        );
        let range = |v: &Vec<f64>| (v[0], v[1]);
        if let Some(r) = &self.lambda_range {
            cfg.search.lambda_range = range(r);
        }
        if let Some(r) = &self.alpha_range {
            cfg.search.alpha_range = range(r);
        }
        if self.report.is_some() {
            cfg.report.clone_from(&self.report);
        }
        if self.surface_dir.is_some() {
            cfg.surface_dir.clone_from(&self.surface_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn surface_path(dir: &Path, method: Method, trial: usize) -> PathBuf {
    dir.join(format!("{}_trial{trial}.csv", method.name()))
}

fn run(cfg: ExperimentConfig, json: Option<&Path>) -> Result<ExitCode, Error> {
    let reports = run_experiment(&cfg)?;
    if let Some(dir) = &cfg.surface_dir {
        fs::create_dir_all(dir)?;
        for r in &reports {
            if let Some(s) = &r.surface {
                emit_surface(s, &surface_path(dir, r.method, r.trial))?;
            }
        }
    }
    let summaries = match &cfg.report {
        Some(path) => emit_report(&reports, path)?,
        None => summarize(&reports),
    };
    print!("{}", render_table(&summaries));
    if let Some(path) = json {
        write_json(&reports, path)?;
    }
    report_failures(&reports);
    Ok(if reports.iter().any(TrialReport::failed) {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn report_failures(reports: &[TrialReport]) {
    for r in reports.iter().filter(|r| r.failed()) {
        eprintln!(
            "trial {} {}: {}",
            r.trial,
            r.method,
            r.error.as_deref().unwrap_or("failed")
        );
    }
}

fn single_trial<F>(
    cfg: &ExperimentConfig,
    single: &SingleArgs,
    select: F,
) -> Result<SelectionResult, Error>
where
    F: FnOnce(&igiwerm::experiment::TrialData, SearchBox) -> Result<SelectionResult, Error>,
{
    if single.trial >= cfg.trials {
        return Err(config_error(format!(
            "trial {} is outside 0..{}",
            single.trial, cfg.trials
        )));
    }
    let pool = load_pool(&cfg.source)?;
    let data = prepare_trial(cfg, pool.as_ref(), single.trial)?;
    let result = select(&data, cfg.search)?;
    println!(
        "best λ = {}, α = {}, loss = {} after {} evaluations",
        result.best_params.lambda, result.best_params.alpha, result.best_loss, result.evaluations
    );
    if let Some(path) = &single.selection {
        write_json(&result, path)?;
    }
    Ok(result)
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Synth(args) => {
            let mut cfg = args.resolve()?;
            if cfg.source != DataSource::Synth {
                return Err(config_error(
                    "synth runs on the synthetic source only; use `bench` for files",
                ));
            }
            cfg.source = DataSource::Synth;
            run(cfg, args.json.as_deref())
        }
        Command::Bench { data, run: args } => {
            let args = RunArgs {
                source: data
                    .map(|p| p.to_string_lossy().into_owned())
                    .or(args.source.clone()),
                ..args
            };
            let cfg = args.resolve()?;
            if cfg.source == DataSource::Synth {
                return Err(config_error("bench needs a LIBSVM file"));
            }
            run(cfg, args.json.as_deref())
        }
        Command::Grid {
            run: args,
            single,
            criterion,
            out,
        } => {
            let cfg = args.resolve()?;
            let mut surface: Option<Surface> = None;
            single_trial(&cfg, &single, |data, _| {
                let (sel, s) = if criterion {
                    ic_grid(&cfg, data)?
                } else {
                    let objective = iwcv_objective(&cfg, data)?;
                    grid_search(
                        |wp| objective.evaluate(wp),
                        cfg.search,
                        cfg.grid_lambda,
                        cfg.grid_alpha,
                    )?
                };
                surface = Some(s);
                Ok(sel)
            })?;
            emit_surface(&surface.expect("grid produced a surface"), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bopt { run: args, single } => {
            let cfg = args.resolve()?;
            single_trial(&cfg, &single, |data, search| {
                let objective = iwcv_objective(&cfg, data)?;
                bayes_opt(
                    |wp| objective.evaluate(wp),
                    search,
                    cfg.bo_init,
                    cfg.bo_iter,
                    data.selection_seed,
                )
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ParseCheck { path } => {
            let file = fs::File::open(&path)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            match parse_sparse(std::io::BufReader::new(file)) {
                Ok(rows) => {
                    let mut labels = rows.labels.clone();
                    labels.sort_by(f64::total_cmp);
                    labels.dedup();
                    println!(
                        "{}: {} rows, {} columns, {} distinct labels",
                        path.display(),
                        rows.rows.len(),
                        rows.width,
                        labels.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    Ok(ExitCode::from(EXIT_PARTIAL))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
