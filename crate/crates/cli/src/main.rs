use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use selfnest::approx::{
    approximate_tree, approximate_with_report, build_worst_case_tree, min_self_nested_distance,
    worst_case_bound, ApproximationReport,
};
use selfnest::bench::{self, BenchKind};
use selfnest::bottomup::{eval_tree, Registry};
use selfnest::combinatorics::{
    asymptotic_equivalent, count_self_nested_eq, count_unordered_le, frequency_table,
    log_count_self_nested,
};
use selfnest::editdist::MethodRegistry;
use selfnest::predictor::{
    evaluate, evaluate_raw, fit_ols_with, generate_dataset, make_features, predict, read_dataset,
    write_dataset, ErrorSummary, LinearModel, FEATURE_NAMES,
};
use selfnest::reduction::{
    expand, expand_linear, is_linear, random_linear_dag, random_linear_dag_direct,
    reduce,
};
use selfnest::{DagReduction, Error, Tree};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_REFUSED: u8 = 3;

#[derive(Parser)]
#[command(name = "selfnest", version, about = "Trees, DAG reductions and self-nested approximations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a random tree, or a random self-nested tree with --self-nested
    Gen(GenArgs),
    /// Print the DAG reduction of a tree
    Reduce { file: PathBuf },
    /// Print the tree a DAG reduction encodes
    Expand { file: PathBuf },
    /// Print the canonical form of a tree
    Canon { file: PathBuf },
    /// Print whether two trees are isomorphic
    Iso { a: PathBuf, b: PathBuf },
    /// Print whether a tree is self-nested
    Selfnested { file: PathBuf },
    /// Print the edit distance between two trees
    Distance {
        #[arg(long, default_value = "tree")]
        method: String,
        a: PathBuf,
        b: PathBuf,
    },
    /// Print the averaging self-nested approximation of a tree
    Approximate {
        file: PathBuf,
        /// Print size, distance and height as CSV instead of the tree
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
    },
    /// Evaluate a bottom-up function on a tree
    Bottomup {
        #[arg(long = "fn")]
        function: String,
        file: PathBuf,
    },
    /// Count trees of bounded height and outdegree
    Count(CountArgs),
    /// Relative frequencies of self-nested trees as CSV
    Freq {
        #[arg(long = "maxH")]
        max_height: u64,
        #[arg(long = "maxD")]
        max_degree: u64,
        #[arg(long = "minH", default_value_t = 2)]
        min_height: u64,
        #[arg(long = "minD", default_value_t = 2)]
        min_degree: u64,
    },
    /// Log of the number of self-nested trees and its asymptotic equivalent
    Logcount {
        #[arg(long)]
        height: u64,
        #[arg(long)]
        degree: u64,
    },
    /// Worst-case tree for self-nested approximation and its bound
    Worstcase {
        #[arg(long)]
        height: usize,
        #[arg(long)]
        degree: usize,
        /// Search for the nearest self-nested tree of height up to H + 1
        #[arg(long)]
        verify: bool,
        #[arg(long, requires = "verify")]
        max_label: Option<u64>,
    },
    /// Run a benchmark and write CSV records
    Bench(BenchArgs),
    /// Generate a prediction dataset as CSV
    Dataset {
        #[arg(long, default_value_t = 500)]
        pairs: usize,
        #[arg(long, default_value_t = 20)]
        min_size: usize,
        #[arg(long, default_value_t = 200)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a linear model on a dataset
    Train {
        dataset: PathBuf,
        /// Comma-separated feature names; all 17 by default
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the edit distance between two trees
    Predict {
        #[arg(long)]
        model: PathBuf,
        a: PathBuf,
        b: PathBuf,
    },
    /// Relative-error summary of a model on a dataset
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Summarize the raw approximation distance instead of a model
        #[arg(long, conflicts_with = "model")]
        raw: bool,
        dataset: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, requires_all = ["height", "degree"])]
    self_nested: bool,
    #[arg(long, requires = "self_nested")]
    height: Option<usize>,
    #[arg(long, requires = "self_nested")]
    degree: Option<u64>,
    /// Sample rows directly instead of by rejection
    #[arg(long, requires = "self_nested")]
    direct: bool,
}

#[derive(Args)]
struct CountArgs {
    /// Self-nested trees of height exactly H
    #[arg(long, conflicts_with = "le", required_unless_present = "le")]
    eq: bool,
    /// Unordered trees of height at most H, excluding the single vertex
    #[arg(long)]
    le: bool,
    #[arg(long)]
    height: u64,
    #[arg(long)]
    degree: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    sizes: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Space,
    Bottomup,
    Distance,
}

enum Failure {
    Usage(String),
    Data(String),
    Refused(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => Failure::Usage(e.to_string()),
            Error::Refused(_) | Error::Generation(_) => Failure::Refused(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(EXIT_DATA);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Data(m) => (EXIT_DATA, m),
                Failure::Refused(m) => (EXIT_REFUSED, m),
            };
            eprintln!("selfnest: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    let mut s = String::new();
    let res = if path == Path::new("-") {
        io::stdin().read_to_string(&mut s).map(|_| ())
    } else {
        fs::read_to_string(path).map(|t| s = t)
    };
    res.map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(s)
}

fn read_tree(path: &Path) -> Result<Tree, Failure> {
    Tree::parse(read_text(path)?.trim_end())
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_dag(path: &Path) -> Result<DagReduction, Failure> {
    DagReduction::parse(&read_text(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<LinearModel, Failure> {
    LinearModel::parse(&read_text(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_rows(path: &Path) -> Result<Vec<selfnest::predictor::DatasetRow>, Failure> {
    read_dataset(read_text(path)?.as_bytes()).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Writes to `out` when given and returns nothing to print; otherwise
/// returns the text for standard output.
fn emit(out: Option<PathBuf>, text: String) -> Outcome {
    match out {
        Some(p) => {
            fs::write(&p, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", p.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn line(v: impl std::fmt::Display) -> String {
    format!("{v}\n")
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => {
            let tree = if a.self_nested {
                let (h, d) = (a.height.expect("required"), a.degree.expect("required"));
                let l = if a.direct {
                    random_linear_dag_direct(h, d, a.seed)?
                } else {
                    random_linear_dag(h, d, a.seed)?
                };
                expand_linear(&l)
            } else {
                selfnest::trees::random_tree(a.size, a.seed)?
            };
            Ok(line(tree))
        }
        Command::Reduce { file } => Ok(reduce(&read_tree(&file)?).to_text()),
        Command::Expand { file } => {
            let d = read_dag(&file)?;
            Ok(line(expand(&d, d.root()?)?))
        }
        Command::Canon { file } => Ok(line(read_tree(&file)?.canonical_key())),
        Command::Iso { a, b } => Ok(line(read_tree(&a)?.is_isomorphic(&read_tree(&b)?))),
        Command::Selfnested { file } => Ok(line(is_linear(&reduce(&read_tree(&file)?)))),
        Command::Distance { method, a, b } => {
            let registry = MethodRegistry::with_builtins();
            let m = registry.get(&method)?;
            Ok(line(m.distance(&read_tree(&a)?, &read_tree(&b)?)?))
        }
        Command::Approximate { file, report } => {
            let t = read_tree(&file)?;
            match report {
                None => Ok(line(approximate_tree(&t))),
                Some(ReportFormat::Csv) => {
                    let (_, r) = approximate_with_report(&t);
                    Ok(format!("{}\n{}\n", ApproximationReport::CSV_HEADER, r.csv_row()))
                }
            }
        }
        Command::Bottomup { function, file } => {
            let registry = Registry::with_builtins();
            let f = registry.get(&function)?;
            Ok(line(eval_tree(f, &read_tree(&file)?)))
        }
        Command::Count(a) => {
            if a.height == 0 || a.degree == 0 {
                return Err(Failure::Usage("height and degree must be at least 1".into()));
            }
            Ok(line(if a.eq {
                count_self_nested_eq(a.height, a.degree)
            } else {
                count_unordered_le(a.height, a.degree)
            }))
        }
        Command::Freq {
            max_height,
            max_degree,
            min_height,
            min_degree,
        } => {
            if min_height == 0 || min_degree == 0 {
                return Err(Failure::Usage("height and degree must be at least 1".into()));
            }
            let mut s = String::from("H,d,numerator,denominator,value\n");
            for c in frequency_table(min_height, max_height, min_degree, max_degree) {
                s.push_str(&format!(
                    "{},{},{},{},{:e}\n",
                    c.height, c.degree, c.numerator, c.denominator, c.value
                ));
            }
            Ok(s)
        }
        Command::Logcount { height, degree } => {
            if height == 0 || degree == 0 {
                return Err(Failure::Usage("height and degree must be at least 1".into()));
            }
            let lc = log_count_self_nested(height, degree);
            let eq = asymptotic_equivalent(height, degree);
            Ok(format!("log_count {lc}\nequivalent {eq}\nratio {}\n", lc / eq))
        }
        Command::Worstcase {
            height,
            degree,
            verify,
            max_label,
        } => {
            let bound = worst_case_bound(height, degree as u64)?;
            let t = build_worst_case_tree(height, degree)?;
            let mut s = format!("bound {bound}\ntree {t}\n");
            if verify {
                let label = max_label.unwrap_or(degree as u64 + 2);
                let (dist, nearest) = min_self_nested_distance(&t, height + 1, label)?;
                s.push_str(&format!("distance {dist}\nnearest {}\n", expand_linear(&nearest)));
            }
            Ok(s)
        }
        Command::Bench(a) => {
            let kind = match a.experiment {
                Experiment::Space => BenchKind::Space,
                Experiment::Bottomup => BenchKind::BottomUp,
                Experiment::Distance => BenchKind::Distance,
            };
            let records = bench::run(kind, &a.sizes, a.reps, a.seed)?;
            let mut buf = Vec::new();
            bench::write_csv(&records, &mut buf).expect("writing to memory");
            emit(a.out, String::from_utf8(buf).expect("ASCII output"))
        }
        Command::Dataset {
            pairs,
            min_size,
            max_size,
            seed,
            out,
        } => {
            let rows = generate_dataset(pairs, min_size, max_size, seed)?;
            let mut buf = Vec::new();
            write_dataset(&rows, &mut buf)?;
            emit(out, String::from_utf8(buf).expect("ASCII output"))
        }
        Command::Train {
            dataset,
            features,
            seed,
            out,
        } => {
            let rows = read_rows(&dataset)?;
            let names: Vec<String> =
                features.unwrap_or_else(|| FEATURE_NAMES.iter().map(|s| s.to_string()).collect());
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let model = fit_ols_with(&rows, &names, seed)?;
            emit(out, model.to_text())
        }
        Command::Predict { model, a, b } => {
            let model = read_model(&model)?;
            let f = make_features(&read_tree(&a)?, &read_tree(&b)?);
            Ok(line(predict(&model, &f)?))
        }
        Command::Eval { model, raw, dataset } => {
            let rows = read_rows(&dataset)?;
            let summary = match (model, raw) {
                (_, true) => evaluate_raw(&rows),
                (Some(m), false) => evaluate(&read_model(&m)?, &rows)?,
                (None, false) => return Err(Failure::Usage("eval needs --model or --raw".into())),
            };
            Ok(summary_text(&summary))
        }
    }
}

fn summary_text(s: &ErrorSummary) -> String {
    format!(
        "count {}\nexcluded {}\nmean {}\nq1 {}\nmedian {}\nq3 {}\n",
        s.count, s.excluded, s.mean, s.q1, s.median, s.q3
    )
}
