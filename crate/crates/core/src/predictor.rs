//! Fast prediction of the edit distance from the distance between
//! self-nested approximations, corrected by a linear model over tree
//! statistics.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rayon::prelude::*;

use crate::approx::approximate_linear;
use crate::bottomup::{eval_dag, eval_tree, Strahler};
use crate::editdist::{edit_distance, edit_distance_dag};
use crate::error::{Error, Result};
use crate::reduction::{from_linear, linear_size, LinearDag};
use crate::trees::{random_tree_with, Tree};

pub const FEATURE_COUNT: usize = 17;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "delta_hat",
    "t1_size",
    "t1_height",
    "t1_outdegree",
    "t1_strahler",
    "t2_size",
    "t2_height",
    "t2_outdegree",
    "t2_strahler",
    "t1hat_size",
    "t1hat_height",
    "t1hat_outdegree",
    "t1hat_strahler",
    "t2hat_size",
    "t2hat_height",
    "t2hat_outdegree",
    "t2hat_strahler",
];

/// Statistics of the original trees only; the regressors of the baseline
/// model that ignores the approximations.
pub const PLAIN_FEATURE_NAMES: [&str; 8] = [
    "t1_size",
    "t1_height",
    "t1_outdegree",
    "t1_strahler",
    "t2_size",
    "t2_height",
    "t2_outdegree",
    "t2_strahler",
];

pub const TARGET_COLUMN: &str = "delta_true";

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn delta_hat(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

fn tree_stats(t: &Tree) -> [f64; 4] {
    [
        t.size() as f64,
        t.height() as f64,
        t.outdegree() as f64,
        eval_tree(&Strahler, t) as f64,
    ]
}

fn linear_stats(l: &LinearDag) -> [f64; 4] {
    let strahler = eval_dag(&Strahler, &from_linear(l)).expect("linear DAGs have one root");
    [
        linear_size(l) as f64,
        l.height() as f64,
        l.outdegree() as f64,
        strahler as f64,
    ]
}

pub fn make_features(t1: &Tree, t2: &Tree) -> FeatureVector {
    let (l1, l2) = (approximate_linear(t1), approximate_linear(t2));
    let delta_hat =
        edit_distance_dag(&from_linear(&l1), &from_linear(&l2)).expect("linear DAGs have one root");
    let mut values = [0.0; FEATURE_COUNT];
    values[0] = delta_hat as f64;
    let blocks = [tree_stats(t1), tree_stats(t2), linear_stats(&l1), linear_stats(&l2)];
    for (b, stats) in blocks.iter().enumerate() {
        values[1 + 4 * b..5 + 4 * b].copy_from_slice(stats);
    }
    FeatureVector { values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub features: FeatureVector,
    pub delta_true: u64,
}

/// `pairs` rows, each from two independent random trees with sizes uniform in
/// `size_lo..=size_hi`. Row `i` draws from its own ChaCha8 stream, so the
/// output depends only on the arguments.
pub fn generate_dataset(pairs: usize, size_lo: usize, size_hi: usize, seed: u64) -> Result<Vec<DatasetRow>> {
    if size_lo < 2 || size_hi < size_lo {
        return Err(Error::Argument(format!(
            "size range [{size_lo}, {size_hi}] must satisfy 2 <= lo <= hi"
        )));
    }
    Ok((0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let n1 = rng.gen_range(size_lo..=size_hi);
            let t1 = random_tree_with(n1, &mut rng).expect("positive size");
            let n2 = rng.gen_range(size_lo..=size_hi);
            let t2 = random_tree_with(n2, &mut rng).expect("positive size");
            DatasetRow {
                features: make_features(&t1, &t2),
                delta_true: edit_distance(&t1, &t2),
            }
        })
        .collect())
}

pub fn write_dataset<W: Write>(rows: &[DatasetRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Argument(format!("cannot write dataset: {e}"));
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push(TARGET_COLUMN);
    w.write_record(&header).map_err(io)?;
    for row in rows {
        let mut rec: Vec<String> = row.features.values.iter().map(|v| v.to_string()).collect();
        rec.push(row.delta_true.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Argument(format!("cannot write dataset: {e}")))
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<DatasetRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain([TARGET_COLUMN]).collect();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema(format!(
            "dataset header must be {}",
            expected.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("row {}: {e}", line + 1)))?;
        let bad = |col: usize| Error::Schema(format!("row {}: bad value in column {}", line + 1, expected[col]));
        let mut values = [0.0; FEATURE_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            *v = rec[i].trim().parse::<f64>().map_err(|_| bad(i))?;
            if !v.is_finite() || *v < 0.0 {
                return Err(bad(i));
            }
        }
        let delta_true = rec[FEATURE_COUNT]
            .trim()
            .parse()
            .map_err(|_| bad(FEATURE_COUNT))?;
        rows.push(DatasetRow {
            features: FeatureVector { values },
            delta_true,
        });
    }
    Ok(rows)
}

/// Intercept plus one coefficient per named feature.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub rows: usize,
    pub seed: u64,
    /// Whether the ridge term was needed to solve the normal equations.
    pub ridge: bool,
}

impl LinearModel {
    pub fn predict_values(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "model v1 n={} seed={}{}\n",
            self.rows,
            self.seed,
            if self.ridge { " ridge=1e-8" } else { "" }
        );
        s.push_str(&format!("intercept {}\n", self.intercept));
        for (n, b) in self.names.iter().zip(&self.coefficients) {
            s.push_str(&format!("{n} {b}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::Schema(format!("model line {}: {msg}", line + 1));
        let (i, head) = lines.next().ok_or_else(|| bad(0, "empty model file"))?;
        let mut tokens = head.split_whitespace();
        if tokens.next() != Some("model") || tokens.next() != Some("v1") {
            return Err(bad(i, "expected \"model v1\""));
        }
        let (mut rows, mut seed, mut ridge) = (None, None, false);
        for tok in tokens {
            match tok.split_once('=') {
                Some(("n", v)) => rows = Some(v.parse().map_err(|_| bad(i, "bad n"))?),
                Some(("seed", v)) => seed = Some(v.parse().map_err(|_| bad(i, "bad seed"))?),
                Some(("ridge", _)) => ridge = true,
                _ => return Err(bad(i, &format!("unknown field {tok:?}"))),
            }
        }
        let (rows, seed) = match (rows, seed) {
            (Some(r), Some(s)) => (r, s),
            _ => return Err(bad(i, "header needs n= and seed=")),
        };
        let mut intercept = None;
        let mut names = Vec::new();
        let mut coefficients = Vec::new();
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let (name, value) = match (parts.next(), parts.next(), parts.next()) {
                (Some(n), Some(v), None) => (n, v),
                _ => return Err(bad(i, "expected \"name value\"")),
            };
            let value: f64 = value.parse().map_err(|_| bad(i, "bad coefficient"))?;
            if name == "intercept" {
                if intercept.replace(value).is_some() {
                    return Err(bad(i, "duplicate intercept"));
                }
            } else {
                if !FEATURE_NAMES.contains(&name) {
                    return Err(bad(i, &format!("unknown feature {name:?}")));
                }
                if names.iter().any(|n| n == name) {
                    return Err(bad(i, &format!("duplicate feature {name:?}")));
                }
                names.push(name.to_string());
                coefficients.push(value);
            }
        }
        Ok(LinearModel {
            names,
            intercept: intercept.ok_or_else(|| Error::Schema("model has no intercept".into()))?,
            coefficients,
            rows,
            seed,
            ridge,
        })
    }
}

const RIDGE: f64 = 1e-8;
/// Cholesky pivots below this fraction of the (unit) diagonal count as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Least squares of `y` on the columns of `x` plus an intercept, through the
/// normal equations. Columns are scaled to unit norm before the Cholesky
/// factorization; if a pivot vanishes, `1e-8 · I` is added to the scaled Gram
/// matrix and the model records it.
pub fn fit_ols_matrix(names: &[&str], x: &[Vec<f64>], y: &[f64], seed: u64) -> Result<LinearModel> {
    let p = names.len() + 1;
    if x.len() != y.len() {
        return Err(Error::Argument("feature and target row counts differ".into()));
    }
    if x.len() < 2 * p {
        return Err(Error::Argument(format!(
            "{} rows is too few for {p} coefficients; need at least {}",
            x.len(),
            2 * p
        )));
    }
    if let Some(row) = x.iter().find(|r| r.len() != names.len()) {
        return Err(Error::Schema(format!("row has {} features, expected {}", row.len(), names.len())));
    }
    let design = |r: &Vec<f64>, j: usize| if j == 0 { 1.0 } else { r[j - 1] };
    let mut scale = vec![0.0; p];
    for r in x {
        for (j, s) in scale.iter_mut().enumerate() {
            *s += design(r, j).powi(2);
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (r, &t) in x.iter().zip(y) {
        for a in 0..p {
            let va = design(r, a) / scale[a];
            rhs[a] += va * t;
            for b in 0..=a {
                gram[a][b] += va * design(r, b) / scale[b];
            }
        }
    }
    for a in 1..p {
        let (upper, lower) = gram.split_at_mut(a);
        for (b, row) in upper.iter_mut().enumerate() {
            row[a] = lower[0][b];
        }
    }
    let (beta, ridge) = match cholesky_solve(&gram, &rhs) {
        Some(beta) => (beta, false),
        None => {
            for (a, row) in gram.iter_mut().enumerate() {
                row[a] += RIDGE;
            }
            let beta = cholesky_solve(&gram, &rhs)
                .ok_or_else(|| Error::Argument("normal equations are singular even with ridge".into()))?;
            (beta, true)
        }
    };
    let unscaled: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    Ok(LinearModel {
        names: names.iter().map(|s| s.to_string()).collect(),
        intercept: unscaled[0],
        coefficients: unscaled[1..].to_vec(),
        rows: x.len(),
        seed,
        ridge,
    })
}

fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= PIVOT_TOLERANCE * a[i][i].max(1.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (z[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// OLS on the named subset of features.
pub fn fit_ols_with(rows: &[DatasetRow], names: &[&str], seed: u64) -> Result<LinearModel> {
    let idx = feature_indices(names)?;
    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| idx.iter().map(|&i| r.features.values[i]).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta_true as f64).collect();
    fit_ols_matrix(names, &x, &y, seed)
}

/// OLS on all 17 features.
pub fn fit_ols(rows: &[DatasetRow], seed: u64) -> Result<LinearModel> {
    fit_ols_with(rows, &FEATURE_NAMES, seed)
}

fn feature_indices<S: AsRef<str>>(names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            FEATURE_NAMES
                .iter()
                .position(|f| *f == n.as_ref())
                .ok_or_else(|| Error::Schema(format!("unknown feature {:?}", n.as_ref())))
        })
        .collect()
}

pub fn predict(model: &LinearModel, features: &FeatureVector) -> Result<f64> {
    if model.names.len() != model.coefficients.len() {
        return Err(Error::Schema("model has mismatched names and coefficients".into()));
    }
    let idx = feature_indices(&model.names)?;
    let x: Vec<f64> = idx.iter().map(|&i| features.values[i]).collect();
    Ok(model.predict_values(&x))
}

/// Summary of relative errors `(predicted - true) / true`. Rows with a true
/// distance of zero are left out and counted in `excluded`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSummary {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
    pub excluded: usize,
}

impl ErrorSummary {
    pub fn from_errors(errors: &[f64], excluded: usize) -> Self {
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = if n == 0 { f64::NAN } else { sorted.iter().sum::<f64>() / n as f64 };
        ErrorSummary {
            mean,
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            count: n,
            excluded,
        }
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Relative errors of `predictions` against the rows' true distances.
pub fn relative_errors(rows: &[DatasetRow], predictions: &[f64]) -> (Vec<f64>, usize) {
    let mut errors = Vec::with_capacity(rows.len());
    let mut excluded = 0;
    for (r, p) in rows.iter().zip(predictions) {
        if r.delta_true == 0 {
            excluded += 1;
        } else {
            let t = r.delta_true as f64;
            errors.push((p - t) / t);
        }
    }
    (errors, excluded)
}

pub fn evaluate(model: &LinearModel, rows: &[DatasetRow]) -> Result<ErrorSummary> {
    let preds = rows
        .iter()
        .map(|r| predict(model, &r.features))
        .collect::<Result<Vec<_>>>()?;
    let (errors, excluded) = relative_errors(rows, &preds);
    Ok(ErrorSummary::from_errors(&errors, excluded))
}

/// Error summary of `delta_hat` used directly as the prediction.
pub fn evaluate_raw(rows: &[DatasetRow]) -> ErrorSummary {
    let preds: Vec<f64> = rows.iter().map(|r| r.features.delta_hat()).collect();
    let (errors, excluded) = relative_errors(rows, &preds);
    ErrorSummary::from_errors(&errors, excluded)
}
