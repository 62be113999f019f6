//! Self-nested approximation by averaging the height profile, and the
//! worst-case construction for approximation error.

use crate::editdist::edit_distance_dag;
use crate::error::{Error, Result};
use crate::reduction::{
    expand_linear, from_linear, linear_size, multiplicities_counted, reduce,
    DagReduction, LinearDag,
};
use crate::trees::Tree;

/// Largest number of candidate linear DAGs [`min_self_nested_distance`] will scan.
pub const SEARCH_LIMIT: u64 = 1_000_000;

/// Edge visits made by one averaging pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AveragingTrace {
    pub multiplicity_edge_visits: usize,
    pub averaging_edge_visits: usize,
}

impl AveragingTrace {
    pub fn total(&self) -> usize {
        self.multiplicity_edge_visits + self.averaging_edge_visits
    }
}

/// Linear DAG whose label `N̂(h1, h2)` is the multiplicity-weighted mean of
/// `ν(h1, ·, h2)` over the classes of height `h1`, rounded half away from
/// zero. The mean is formed as an exact integer fraction before rounding.
pub fn average_to_linear(d: &DagReduction) -> Result<LinearDag> {
    average_to_linear_traced(d).map(|(l, _)| l)
}

pub fn average_to_linear_traced(d: &DagReduction) -> Result<(LinearDag, AveragingTrace)> {
    let (mu, multiplicity_edge_visits) = multiplicities_counted(d)?;
    let levels = d.levels();
    let mut weight = vec![0u128; levels];
    let mut numer: Vec<Vec<u128>> = (0..levels).map(|h| vec![0; h]).collect();
    let mut averaging_edge_visits = 0;
    for (f, v) in d.vertices().enumerate() {
        let m = mu.flat(f) as u128;
        weight[v.height] += m;
        for &(c, n) in d.flat_children(f) {
            let h2 = d.id(c).height;
            numer[v.height][h2] += m * n as u128;
            averaging_edge_visits += 1;
        }
    }
    let rows = numer
        .iter()
        .zip(&weight)
        .map(|(row, &w)| row.iter().map(|&num| round_half_away(num, w)).collect())
        .collect();
    let linear = LinearDag::new(rows)?;
    Ok((
        linear,
        AveragingTrace {
            multiplicity_edge_visits,
            averaging_edge_visits,
        },
    ))
}

/// `num / den` rounded to the nearest integer, halves away from zero.
fn round_half_away(num: u128, den: u128) -> u64 {
    ((2 * num + den) / (2 * den)) as u64
}

/// Self-nested tree with the averaged height profile of `t`.
pub fn approximate_tree(t: &Tree) -> Tree {
    expand_linear(&approximate_linear(t))
}

/// Linear DAG of the averaging approximation of `t`.
pub fn approximate_linear(t: &Tree) -> LinearDag {
    average_to_linear(&reduce(t)).expect("reductions of trees have one root")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApproximationReport {
    pub size_in: u64,
    pub size_out: u64,
    pub delta: u64,
    pub height_in: usize,
    pub height_out: usize,
}

impl ApproximationReport {
    pub const CSV_HEADER: &'static str = "size_in,size_out,delta,height";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.size_in, self.size_out, self.delta, self.height_out)
    }
}

/// Approximation of `t` with its size, height and distance to `t`.
pub fn approximate_with_report(t: &Tree) -> (Tree, ApproximationReport) {
    let d = reduce(t);
    let l = average_to_linear(&d).expect("reductions of trees have one root");
    let delta = edit_distance_dag(&d, &from_linear(&l)).expect("single-rooted inputs");
    let report = ApproximationReport {
        size_in: t.size() as u64,
        size_out: linear_size(&l),
        delta,
        height_in: t.height(),
        height_out: l.height(),
    };
    (expand_linear(&l), report)
}

/// `⌊d/2⌋ · ⌈d/2⌉ · d^(H-2)`, the largest distance from a tree of height at
/// most `H` and outdegree at most `d` to its nearest self-nested tree.
pub fn worst_case_bound(height: usize, degree: u64) -> Result<u64> {
    if height < 2 {
        return Err(Error::Argument("height must be at least 2".into()));
    }
    let pow = degree
        .checked_pow((height - 2) as u32)
        .ok_or_else(|| Error::Argument("bound overflows u64".into()))?;
    (degree / 2)
        .checked_mul(degree.div_ceil(2))
        .and_then(|x| x.checked_mul(pow))
        .ok_or_else(|| Error::Argument("bound overflows u64".into()))
}

/// Tree attaining [`worst_case_bound`]: the root carries `⌈d/2⌉` copies of a
/// pattern whose lowest internal vertices have `⌊d/2⌋` leaves and `⌊d/2⌋`
/// copies of one whose lowest internal vertices have `d` leaves. Every other
/// internal vertex of both patterns has `d` children.
pub fn build_worst_case_tree(height: usize, degree: usize) -> Result<Tree> {
    if height < 2 || degree < 2 {
        return Err(Error::Argument(
            "worst case needs height >= 2 and degree >= 2".into(),
        ));
    }
    let pattern = |fringe: usize| {
        let mut t = Tree::from_children((0..fringe).map(|_| Tree::leaf()));
        for _ in 2..height {
            t = Tree::from_children((0..degree).map(|_| t.clone()));
        }
        t
    };
    let sparse = pattern(degree / 2);
    let full = pattern(degree);
    let copies = (0..degree.div_ceil(2))
        .map(|_| sparse.clone())
        .chain((0..degree / 2).map(|_| full.clone()));
    Ok(Tree::from_children(copies))
}

/// Number of linear DAGs of height at most `max_height` with every label at
/// most `max_label`, saturating at `u64::MAX`.
pub fn candidate_count(max_height: usize, max_label: u64) -> u64 {
    let mut total: u64 = 0;
    for h in 0..=max_height {
        // h sub-diagonal labels in 1..=max_label, h(h-1)/2 others in 0..=max_label
        let free = (h * h.saturating_sub(1) / 2) as u32;
        let count = max_label
            .checked_pow(h as u32)
            .and_then(|a| (max_label + 1).checked_pow(free).and_then(|b| a.checked_mul(b)));
        total = match count.and_then(|c| total.checked_add(c)) {
            Some(t) => t,
            None => return u64::MAX,
        };
    }
    total
}

/// Exhaustive `min δ(t, τ)` over self-nested `τ` whose linear DAG has height
/// at most `max_height` and labels at most `max_label`.
///
/// Candidates are scanned by height, then by labels in row-major order, and
/// only strict improvements replace the incumbent, so the returned argmin is
/// the smallest minimizer in that order.
pub fn min_self_nested_distance(
    t: &Tree,
    max_height: usize,
    max_label: u64,
) -> Result<(u64, LinearDag)> {
    let count = candidate_count(max_height, max_label);
    if count > SEARCH_LIMIT {
        return Err(Error::Refused(format!(
            "{count} candidates exceed the search limit {SEARCH_LIMIT}"
        )));
    }
    let target = reduce(t);
    let mut search = Search::new(&target);
    let mut best: Option<(u64, LinearDag)> = None;
    for h in 0..=max_height {
        let mut rows = vec![Vec::new()];
        search.columns.truncate(1);
        search.extend(&mut rows, h, max_label, &mut best);
    }
    best.ok_or_else(|| Error::Argument("empty search space".into()))
}

/// Depth-first enumeration of linear DAGs that reuses, for every prefix of
/// rows, the column of distances between target vertices and the candidate's
/// height-`h` class.
struct Search<'a> {
    target: &'a DagReduction,
    target_sizes: Vec<u64>,
    /// `columns[h][u]` = δ(target vertex u, candidate class of height h).
    columns: Vec<Vec<u64>>,
    candidate_sizes: Vec<u64>,
}

impl<'a> Search<'a> {
    fn new(target: &'a DagReduction) -> Self {
        let mut target_sizes = Vec::with_capacity(target.vertex_count());
        for u in 0..target.vertex_count() {
            let s = 1 + target
                .flat_children(u)
                .iter()
                .map(|&(c, n)| n * target_sizes[c])
                .sum::<u64>();
            target_sizes.push(s);
        }
        // Candidate class of height 0 is the single vertex.
        let leaf_column = target_sizes.iter().map(|s| s - 1).collect();
        Search {
            target,
            target_sizes,
            columns: vec![leaf_column],
            candidate_sizes: vec![1],
        }
    }

    fn extend(
        &mut self,
        rows: &mut Vec<Vec<u64>>,
        height: usize,
        max_label: u64,
        best: &mut Option<(u64, LinearDag)>,
    ) {
        let h1 = rows.len();
        if h1 > height {
            let root = self.target.flat_root().expect("reduction has one root");
            let d = self.columns[height][root];
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                *best = Some((d, LinearDag::new(rows.clone()).expect("valid labels")));
            }
            return;
        }
        let mut row = vec![0u64; h1];
        row[h1 - 1] = 1;
        loop {
            self.push_column(&row);
            rows.push(row.clone());
            self.extend(rows, height, max_label, best);
            rows.pop();
            self.columns.pop();
            self.candidate_sizes.pop();
            if !next_row(&mut row, max_label) {
                break;
            }
        }
    }

    /// Appends the distance column and size for a new top class with labels `row`.
    fn push_column(&mut self, row: &[u64]) {
        let size = 1 + row
            .iter()
            .zip(&self.candidate_sizes)
            .map(|(n, s)| n * s)
            .sum::<u64>();
        let kids: Vec<(usize, u64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(h, &n)| (h, n))
            .collect();
        let column: Vec<u64> = (0..self.target.vertex_count())
            .map(|u| {
                let ku = self.target.flat_children(u);
                if ku.is_empty() {
                    return size - 1;
                }
                crate::editdist::assignment_distance(
                    ku.iter().map(|&(c, n)| (n, self.target_sizes[c])),
                    kids.iter().map(|&(h, n)| (n, self.candidate_sizes[h])),
                    |i, j| self.columns[kids[j].0][ku[i].0],
                )
            })
            .collect();
        self.columns.push(column);
        self.candidate_sizes.push(size);
    }
}

/// Advances `row` to the next label vector in row-major order, keeping the
/// last (sub-diagonal) entry at least 1. Returns false after the last one.
fn next_row(row: &mut [u64], max_label: u64) -> bool {
    let last = row.len() - 1;
    for i in (0..row.len()).rev() {
        if row[i] < max_label {
            row[i] += 1;
            return true;
        }
        row[i] = if i == last { 1 } else { 0 };
    }
    false
}
