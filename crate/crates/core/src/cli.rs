//! Command-line front end: `train`, `predict`, `eval` and `oracle`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{self, Dataset, Label, LabeledData};
use crate::error::{Result, UsmoError};
use crate::initializer::InitMode;
use crate::kernel::KernelSpec;
use crate::model::{label_of, Model};
use crate::oracle;
use crate::solver::{self, derive_constants, Hyperparams, Solution};

#[derive(Debug, Parser)]
#[command(
    name = "usmo",
    version,
    about = "Positive-unlabeled learning with the double-hinge loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to --model.
    Train(TrainArgs),
    /// Score samples with a saved model.
    Predict(PredictArgs),
    /// Split labeled data into PU form, train, and report the F-measure on the unlabeled pool.
    Eval(TrainArgs),
    /// Compare the solver with the dense reference solvers on a small instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Ranked,
    Uniform,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Labeled positives (LIBSVM or CSV; labels ignored).
    #[arg(long, requires = "unlabeled", conflicts_with = "data")]
    pub positive: Option<PathBuf>,
    /// Unlabeled samples (LIBSVM or CSV; labels ignored).
    #[arg(long, requires = "positive")]
    pub unlabeled: Option<PathBuf>,
    /// Fully labeled data, split into PU form with --labeled-fraction.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column of CSV input (0-based).
    #[arg(long, default_value_t = 0)]
    pub label_col: usize,
    /// CSV input starts with a header row.
    #[arg(long)]
    pub header: bool,
    /// Class treated as positive (one-vs-all); otherwise labels must be +1/-1.
    #[arg(long, allow_hyphen_values = true)]
    pub target_class: Option<i64>,
    /// Fraction of positives whose label is kept.
    #[arg(long, default_value_t = 0.2)]
    pub labeled_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Class prior; defaults to the class proportion of --data.
    #[arg(long)]
    pub pi: Option<f64>,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = KernelKind::Gaussian)]
    pub kernel: KernelKind,
    /// Gaussian kernel width.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Ranked)]
    pub init: InitArg,
    #[arg(long, default_value_t = 1000)]
    pub max_full_scans: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write the model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write the per-iteration trace (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub label_col: usize,
    #[arg(long)]
    pub header: bool,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also grid-enumerate (n <= 4 only).
    #[arg(long)]
    pub enumerate: bool,
    /// Grid points per coordinate for --enumerate.
    #[arg(long, default_value_t = 1001)]
    pub steps: usize,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| UsmoError::input(format!("cannot open {}: {e}", path.display())))
}

fn load_file(path: &Path, label_col: usize, header: bool) -> Result<LabeledData> {
    let reader = open(path)?;
    if is_csv(path) {
        data::load_csv(reader, label_col, header)
    } else {
        data::load_libsvm(reader)
    }
}

/// A training set plus, when it came from a split, the hidden labels and prior.
struct Prepared {
    dataset: Dataset,
    hidden: Option<Vec<Label>>,
    prior: Option<f64>,
}

fn prepare(a: &DataArgs) -> Result<Prepared> {
    match (&a.positive, &a.unlabeled, &a.data) {
        (Some(pos), Some(unl), None) => {
            let pos = load_file(pos, a.label_col, a.header)?;
            let unl = load_file(unl, a.label_col, a.header)?;
            let dim = pos.dim.max(unl.dim);
            let (pos, unl) = (pos.with_dim(dim)?, unl.with_dim(dim)?);
            Ok(Prepared {
                dataset: Dataset::new(&pos.samples, &unl.samples)?,
                hidden: None,
                prior: None,
            })
        }
        (None, None, Some(path)) => {
            let raw = load_file(path, a.label_col, a.header)?;
            let labels = raw.binarize(a.target_class)?;
            let split = data::make_pu_split(&raw.samples, &labels, a.labeled_fraction, a.seed)?;
            Ok(Prepared {
                dataset: split.dataset,
                hidden: Some(split.hidden_labels),
                prior: Some(split.prior),
            })
        }
        _ => Err(UsmoError::config("give either --positive and --unlabeled, or --data")),
    }
}

fn hyperparams(s: &SolverArgs, prior: Option<f64>) -> Result<Hyperparams> {
    let pi =
        s.pi.or(prior)
            .ok_or_else(|| UsmoError::config("--pi is required when training from --positive/--unlabeled"))?;
    let kernel = match s.kernel {
        KernelKind::Linear => KernelSpec::Linear,
        KernelKind::Gaussian => KernelSpec::Gaussian { scale: s.scale },
    };
    let mut h = Hyperparams::new(pi, s.lambda, kernel).with_tau(s.tau);
    h.max_full_scans = s.max_full_scans;
    h.validate()?;
    Ok(h)
}

fn init_mode(s: &SolverArgs) -> InitMode {
    match s.init {
        InitArg::Ranked => InitMode::Ranked,
        InitArg::Uniform => InitMode::Uniform,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| UsmoError::input(format!("cannot create {}: {e}", path.display())))
}

fn summary(sol: &Solution) -> String {
    format!(
        "objective={} iters={} full_scans={} kernel_evals={} time_ms={:.3}",
        sol.state.objective,
        sol.trace.iterations(),
        sol.trace.full_scans,
        sol.trace.cache.evaluations,
        sol.trace.elapsed_ms
    )
}

fn train_and_write(a: &TrainArgs, prep: &Prepared, out: &mut dyn Write) -> Result<Solution> {
    let h = hyperparams(&a.solver, prep.prior)?;
    let sol = solver::train(&prep.dataset, &h, init_mode(&a.solver))?;
    if let Some(path) = &a.model {
        let mut w = create(path)?;
        sol.model.save(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.trace {
        let mut w = create(path)?;
        sol.trace.write_csv(&mut w)?;
        w.flush()?;
    }
    writeln!(out, "{}", summary(&sol))?;
    Ok(sol)
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(&a.data)?;
    train_and_write(a, &prep, out).map(|_| ())
}

/// Score rounded to 9 significant digits, printed in shortest form.
pub fn format_score(score: f64) -> String {
    let rounded: f64 = format!("{score:.8e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

pub fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = Model::load(open(&a.model)?)?;
    let raw = load_file(&a.data, a.label_col, a.header)?;
    let raw = if is_csv(&a.data) || raw.dim > model.dim {
        if !raw.is_empty() && raw.dim != model.dim {
            return Err(UsmoError::input(format!(
                "data has dimension {}, model expects {}",
                raw.dim, model.dim
            )));
        }
        raw
    } else {
        raw.with_dim(model.dim)?
    };
    let mut sink: Box<dyn Write + '_> = match &a.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(&mut *out),
    };
    for x in &raw.samples {
        let score = model.predict_score(x)?;
        writeln!(sink, "{} {}", label_of(score).as_signed_str(), format_score(score))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn cmd_eval(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    if a.data.data.is_none() {
        return Err(UsmoError::config("eval needs --data with ground-truth labels"));
    }
    let prep = prepare(&a.data)?;
    let sol = train_and_write(a, &prep, out)?;
    let truth = prep.hidden.as_ref().expect("split always records labels");
    let predicted = (0..prep.dataset.n())
        .map(|u| sol.model.predict_label(prep.dataset.unlabeled(u)))
        .collect::<Result<Vec<_>>>()?;
    writeln!(out, "f_measure={}", data::f_measure(&predicted, truth)?)?;
    Ok(())
}

pub fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(&a.data)?;
    let h = hyperparams(&a.solver, prep.prior)?;
    let ds = &prep.dataset;
    let c = derive_constants(&h, ds.p(), ds.n())?;
    let dense = oracle::solve_dense(ds, &c, h.kernel)?;
    writeln!(out, "dense_objective={}", dense.objective)?;

    let mut best = dense.objective;
    let mut enumerate_err = None;
    if a.enumerate {
        match oracle::enumerate_tiny(ds, &c, h.kernel, a.steps) {
            Ok(e) => {
                writeln!(
                    out,
                    "enumerate_objective={} certified_gap={}",
                    e.objective, e.certified_gap
                )?;
                best = best.min(e.objective);
            }
            Err(e) => enumerate_err = Some(e),
        }
    }

    let sol = solver::train(ds, &h, init_mode(&a.solver))?;
    writeln!(out, "usmo_objective={}", sol.state.objective)?;
    writeln!(out, "usmo_minus_oracle={}", sol.state.objective - best)?;
    match enumerate_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(1.0), "1.0");
        assert_eq!(format_score(-1.0), "-1.0");
        assert_eq!(format_score(0.1234567891234), "0.123456789");
        assert_eq!(format_score(0.0), "0.0");
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "usmo",
            "train",
            "--data",
            "x.svm",
            "--labeled-fraction",
            "0.3",
            "--lambda",
            "0.1",
            "--kernel",
            "linear",
            "--init",
            "uniform",
            "--seed",
            "4",
            "--max-full-scans",
            "7",
            "--target-class",
            "-1",
        ])
        .unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        assert_eq!(a.data.labeled_fraction, 0.3);
        assert_eq!(a.data.target_class, Some(-1));
        assert_eq!(a.solver.kernel, KernelKind::Linear);
        assert_eq!(a.solver.max_full_scans, 7);
    }

    #[test]
    fn missing_prior_is_config_error() {
        let s = SolverArgs {
            pi: None,
            lambda: 0.1,
            tau: 1e-3,
            kernel: KernelKind::Linear,
            scale: 1.0,
            init: InitArg::Ranked,
            max_full_scans: 10,
        };
        assert!(matches!(hyperparams(&s, None), Err(UsmoError::Config(_))));
        assert!(hyperparams(&s, Some(0.4)).is_ok());
    }
}
