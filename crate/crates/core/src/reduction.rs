//! DAG reduction of unordered trees.
//!
//! The reduction of a tree is its quotient by subtree isomorphism: one vertex
//! per isomorphism class of subtrees, and an edge `C1 -> C2` labelled with the
//! number of children of a `C1` root that belong to `C2`. Vertices are
//! addressed by `(height, index)` with 1-based indices, numbered within a
//! height by ascending canonical key.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::trees::{ClassInterner, Tree};

/// Maximum number of consecutive rejected proposals for one row of
/// [`random_linear_dag`].
pub const REJECTION_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DagVertexId {
    pub height: usize,
    /// 1-based position among the classes of the same height.
    pub index: usize,
}

impl DagVertexId {
    pub fn new(height: usize, index: usize) -> Self {
        DagVertexId { height, index }
    }
}

impl fmt::Display for DagVertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.height, self.index)
    }
}

/// A labelled DAG in which every vertex stands for a tree.
///
/// Vertices are stored flat, sorted by `(height, index)`, so a forward scan
/// visits children before parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagReduction {
    level_start: Vec<usize>,
    /// Outgoing edges of each flat vertex as `(flat child, label)`, sorted by child.
    out: Vec<Vec<(usize, u64)>>,
}

impl DagReduction {
    /// Validates and builds a DAG from per-height class counts and labelled
    /// edges.
    pub fn new(
        level_counts: &[usize],
        edges: impl IntoIterator<Item = (DagVertexId, DagVertexId, u64)>,
    ) -> Result<Self> {
        if level_counts.is_empty() {
            return Err(Error::Contract("a DAG needs at least one height".into()));
        }
        if let Some(h) = level_counts.iter().position(|&m| m == 0) {
            return Err(Error::Contract(format!("height {h} has no vertex")));
        }
        let mut level_start = Vec::with_capacity(level_counts.len() + 1);
        let mut acc = 0;
        for &m in level_counts {
            level_start.push(acc);
            acc += m;
        }
        level_start.push(acc);
        let mut dag = DagReduction {
            level_start,
            out: vec![Vec::new(); acc],
        };
        let mut seen = HashSet::new();
        for (from, to, label) in edges {
            let (Some(f), Some(t)) = (dag.flat(from), dag.flat(to)) else {
                return Err(Error::Contract(format!("edge {from} -> {to} names an unknown vertex")));
            };
            if from.height <= to.height {
                return Err(Error::Contract(format!("edge {from} -> {to} does not go down")));
            }
            if label == 0 {
                return Err(Error::Contract(format!("edge {from} -> {to} has label 0")));
            }
            if !seen.insert((f, t)) {
                return Err(Error::Contract(format!("duplicate edge {from} -> {to}")));
            }
            dag.out[f].push((t, label));
        }
        for kids in &mut dag.out {
            kids.sort_unstable();
        }
        for v in dag.vertices() {
            if v.height > 0
                && !dag
                    .children(v)
                    .any(|(c, _)| c.height + 1 == v.height)
            {
                return Err(Error::Contract(format!("vertex {v} has no child one level below")));
            }
        }
        // Children are distinct classes by induction, so equal labelled child
        // maps would mean two vertices for one class.
        for h in 0..dag.levels() {
            let mut maps = HashSet::new();
            for f in dag.level_start[h]..dag.level_start[h + 1] {
                if !maps.insert(&dag.out[f]) {
                    return Err(Error::Contract(format!(
                        "vertex {} duplicates another class of height {h}",
                        dag.id(f)
                    )));
                }
            }
        }
        Ok(dag)
    }

    /// Number of heights, i.e. `H + 1`.
    pub fn levels(&self) -> usize {
        self.level_start.len() - 1
    }

    /// Height `H` of the topmost level.
    pub fn height(&self) -> usize {
        self.levels() - 1
    }

    /// `M_h`, the number of classes of height `h`.
    pub fn level_count(&self, h: usize) -> usize {
        self.level_start[h + 1] - self.level_start[h]
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = DagVertexId> + '_ {
        (0..self.vertex_count()).map(|f| self.id(f))
    }

    pub fn contains(&self, v: DagVertexId) -> bool {
        self.flat(v).is_some()
    }

    /// Outgoing edges of `v` as `(child, label)`.
    pub fn children(&self, v: DagVertexId) -> impl Iterator<Item = (DagVertexId, u64)> + '_ {
        let f = self.flat(v);
        f.into_iter()
            .flat_map(move |f| self.out[f].iter().map(|&(c, n)| (self.id(c), n)))
    }

    /// Label `N(from, to)`, zero when there is no edge.
    pub fn label(&self, from: DagVertexId, to: DagVertexId) -> u64 {
        match (self.flat(from), self.flat(to)) {
            (Some(f), Some(t)) => self.out[f]
                .binary_search_by_key(&t, |&(c, _)| c)
                .map(|i| self.out[f][i].1)
                .unwrap_or(0),
            _ => 0,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (DagVertexId, DagVertexId, u64)> + '_ {
        self.out.iter().enumerate().flat_map(move |(f, kids)| {
            kids.iter().map(move |&(c, n)| (self.id(f), self.id(c), n))
        })
    }

    /// Vertices without incoming edges.
    pub fn roots(&self) -> Vec<DagVertexId> {
        let mut has_parent = vec![false; self.vertex_count()];
        for kids in &self.out {
            for &(c, _) in kids {
                has_parent[c] = true;
            }
        }
        (0..self.vertex_count())
            .filter(|&f| !has_parent[f])
            .map(|f| self.id(f))
            .collect()
    }

    /// The unique root, or a contract error when there are several.
    pub fn root(&self) -> Result<DagVertexId> {
        let roots = self.roots();
        match roots.as_slice() {
            [r] => Ok(*r),
            _ => Err(Error::Contract(format!(
                "expected a single root, found {}",
                roots.len()
            ))),
        }
    }

    pub(crate) fn flat(&self, v: DagVertexId) -> Option<usize> {
        if v.height >= self.levels() || v.index == 0 || v.index > self.level_count(v.height) {
            return None;
        }
        Some(self.level_start[v.height] + v.index - 1)
    }

    pub(crate) fn id(&self, f: usize) -> DagVertexId {
        let h = self.level_start.partition_point(|&s| s <= f) - 1;
        DagVertexId::new(h, f - self.level_start[h] + 1)
    }

    pub(crate) fn flat_children(&self, f: usize) -> &[(usize, u64)] {
        &self.out[f]
    }

    pub(crate) fn flat_root(&self) -> Result<usize> {
        self.root().map(|r| self.flat(r).expect("root is a vertex"))
    }

    /// Serializes to the line-based DAG text format.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the line-based DAG text format: a `dag H=<H>` header, one
    /// `m <h> <M_h>` line per height and one `e <h1>.<i1> <h2>.<i2> <N>` line
    /// per edge.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut counts: Vec<Option<usize>> = Vec::new();
        let mut edges = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len();
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::parse(start, msg.to_string());
            match fields[0] {
                "dag" => {
                    if declared.is_some() {
                        return Err(bad("duplicate header"));
                    }
                    let h = fields
                        .get(1)
                        .and_then(|f| f.strip_prefix("H="))
                        .and_then(|f| f.parse::<usize>().ok())
                        .filter(|_| fields.len() == 2)
                        .ok_or_else(|| bad("malformed header, expected `dag H=<H>`"))?;
                    declared = Some(h);
                    counts = vec![None; h + 1];
                }
                "m" => {
                    if declared.is_none() {
                        return Err(bad("`m` line before header"));
                    }
                    let (h, m) = match fields.as_slice() {
                        [_, h, m] => (h.parse::<usize>(), m.parse::<usize>()),
                        _ => return Err(bad("malformed `m` line")),
                    };
                    let (Ok(h), Ok(m)) = (h, m) else {
                        return Err(bad("malformed `m` line"));
                    };
                    let slot = counts.get_mut(h).ok_or_else(|| bad("height out of range"))?;
                    if slot.replace(m).is_some() {
                        return Err(bad("duplicate `m` line"));
                    }
                }
                "e" => {
                    if declared.is_none() {
                        return Err(bad("`e` line before header"));
                    }
                    let [_, a, b, n] = fields.as_slice() else {
                        return Err(bad("malformed `e` line"));
                    };
                    let a = parse_vertex(a).ok_or_else(|| bad("malformed vertex id"))?;
                    let b = parse_vertex(b).ok_or_else(|| bad("malformed vertex id"))?;
                    let n = n.parse::<u64>().map_err(|_| bad("malformed label"))?;
                    edges.push((a, b, n));
                }
                _ => return Err(bad("unknown line kind")),
            }
        }
        if declared.is_none() {
            return Err(Error::parse(0, "missing `dag H=<H>` header"));
        }
        let counts: Vec<usize> = counts
            .into_iter()
            .enumerate()
            .map(|(h, m)| m.ok_or_else(|| Error::parse(text.len(), format!("missing `m {h}` line"))))
            .collect::<Result<_>>()?;
        DagReduction::new(&counts, edges)
    }
}

fn parse_vertex(s: &str) -> Option<DagVertexId> {
    let (h, i) = s.split_once('.')?;
    Some(DagVertexId::new(h.parse().ok()?, i.parse().ok()?))
}

impl fmt::Display for DagReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dag H={}", self.height())?;
        for h in 0..self.levels() {
            writeln!(f, "m {} {}", h, self.level_count(h))?;
        }
        for (a, b, n) in self.edges() {
            writeln!(f, "e {a} {b} {n}")?;
        }
        Ok(())
    }
}

/// Compresses `t` into its DAG reduction by hashing each subtree's sorted
/// multiset of child classes.
pub fn reduce(t: &Tree) -> DagReduction {
    let mut interner = ClassInterner::new();
    let root_class = interner.classify(t)[t.root()];
    let classes = interner.len();

    // Child classes always get smaller ids than their parents.
    let mut keys: Vec<String> = Vec::with_capacity(classes);
    for c in 0..classes {
        let mut parts: Vec<&str> = interner.kids[c].iter().map(|&k| keys[k].as_str()).collect();
        parts.sort_unstable();
        let mut key = String::from("(");
        parts.iter().for_each(|p| key.push_str(p));
        key.push(')');
        keys.push(key);
    }

    let height = interner.heights[root_class];
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); height + 1];
    for c in 0..classes {
        by_level[interner.heights[c]].push(c);
    }
    let mut flat_of = vec![0; classes];
    let mut level_start = Vec::with_capacity(height + 2);
    let mut next = 0;
    for level in &mut by_level {
        level.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        level_start.push(next);
        for &c in level.iter() {
            flat_of[c] = next;
            next += 1;
        }
    }
    level_start.push(next);

    let mut out = vec![Vec::new(); classes];
    for c in 0..classes {
        let mut kids: Vec<(usize, u64)> = Vec::new();
        for &k in &interner.kids[c] {
            match kids.last_mut() {
                Some((last, n)) if *last == flat_of[k] => *n += 1,
                _ => kids.push((flat_of[k], 1)),
            }
        }
        kids.sort_unstable();
        out[flat_of[c]] = kids;
    }
    DagReduction { level_start, out }
}

/// Reconstructs the tree represented by vertex `v`.
pub fn expand(d: &DagReduction, v: DagVertexId) -> Result<Tree> {
    let start = d
        .flat(v)
        .ok_or_else(|| Error::Contract(format!("unknown vertex {v}")))?;
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut class_of = vec![start];
    let mut i = 0;
    while i < class_of.len() {
        let f = class_of[i];
        let mut kids = Vec::new();
        for &(c, n) in d.flat_children(f) {
            for _ in 0..n {
                kids.push(class_of.len());
                class_of.push(c);
                children.push(Vec::new());
            }
        }
        children[i] = kids;
        i += 1;
    }
    Tree::from_child_lists(children)
}

/// `μ`: number of occurrences of each class as a subtree of the whole tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityMap {
    values: Vec<u64>,
    ids: Vec<DagVertexId>,
}

impl MultiplicityMap {
    pub fn get(&self, v: DagVertexId) -> Option<u64> {
        self.ids.binary_search(&v).ok().map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (DagVertexId, u64)> + '_ {
        self.ids.iter().copied().zip(self.values.iter().copied())
    }

    pub(crate) fn flat(&self, f: usize) -> u64 {
        self.values[f]
    }
}

/// Occurrence counts of every class, propagated from the root down as
/// `μ(u) = Σ N(w, u) · μ(w)` over the parents `w` of `u`.
pub fn multiplicities(d: &DagReduction) -> Result<MultiplicityMap> {
    multiplicities_counted(d).map(|(m, _)| m)
}

/// [`multiplicities`] together with the number of edge visits it made.
pub(crate) fn multiplicities_counted(d: &DagReduction) -> Result<(MultiplicityMap, usize)> {
    let root = d.flat_root()?;
    let mut values = vec![0u64; d.vertex_count()];
    values[root] = 1;
    let mut visits = 0;
    for f in (0..d.vertex_count()).rev() {
        let mu = values[f];
        for &(c, n) in d.flat_children(f) {
            values[c] += n * mu;
            visits += 1;
        }
    }
    let ids = d.vertices().collect();
    Ok((MultiplicityMap { values, ids }, visits))
}

/// `ν(h1, i, h2)`: how many children of a class-`(h1, i)` root have height `h2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightProfile {
    rows: Vec<Vec<u64>>,
    level_start: Vec<usize>,
}

impl HeightProfile {
    /// Profile row of `v`, indexed by child height `h2 < v.height`.
    pub fn row(&self, v: DagVertexId) -> &[u64] {
        &self.rows[self.level_start[v.height] + v.index - 1]
    }

    pub fn get(&self, v: DagVertexId, h2: usize) -> u64 {
        self.row(v).get(h2).copied().unwrap_or(0)
    }
}

pub fn height_profile(d: &DagReduction) -> HeightProfile {
    let rows = (0..d.vertex_count())
        .map(|f| {
            let mut row = vec![0u64; d.id(f).height];
            for &(c, n) in d.flat_children(f) {
                row[d.id(c).height] += n;
            }
            row
        })
        .collect();
    HeightProfile {
        rows,
        level_start: d.level_start.clone(),
    }
}

/// One class per height.
pub fn is_linear(d: &DagReduction) -> bool {
    (0..d.levels()).all(|h| d.level_count(h) == 1)
}

/// Every class of a given height has the same height profile.
pub fn is_self_nested_profile(d: &DagReduction) -> bool {
    let profile = height_profile(d);
    (0..d.levels()).all(|h| {
        let first = profile.row(DagVertexId::new(h, 1));
        (2..=d.level_count(h)).all(|i| profile.row(DagVertexId::new(h, i)) == first)
    })
}

/// Definitional check: all subtrees of equal height share one canonical key.
pub fn is_self_nested_naive(t: &Tree) -> bool {
    let heights = t.vertex_heights();
    let keys = t.vertex_keys();
    let mut first: HashMap<usize, &str> = HashMap::new();
    heights
        .iter()
        .zip(&keys)
        .all(|(h, k)| *first.entry(*h).or_insert(k.as_str()) == k.as_str())
}

/// DAG reduction of a self-nested tree: one class per height, with labels
/// `N(h1, h2)` for `h2 < h1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearDag {
    rows: Vec<Vec<u64>>,
}

impl LinearDag {
    /// `rows[h1][h2] = N(h1, h2)`; row `h1` has exactly `h1` entries.
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Contract("a linear DAG has at least height 0".into()));
        }
        for (h, row) in rows.iter().enumerate() {
            if row.len() != h {
                return Err(Error::Contract(format!("row {h} has {} labels", row.len())));
            }
            if h > 0 && row[h - 1] == 0 {
                return Err(Error::Contract(format!("N({h}, {}) must be at least 1", h - 1)));
            }
        }
        Ok(LinearDag { rows })
    }

    pub fn single_vertex() -> Self {
        LinearDag { rows: vec![Vec::new()] }
    }

    pub fn height(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn label(&self, h1: usize, h2: usize) -> u64 {
        self.rows.get(h1).and_then(|r| r.get(h2)).copied().unwrap_or(0)
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// Largest number of children of any vertex of the expansion.
    pub fn outdegree(&self) -> u64 {
        self.rows.iter().map(|r| r.iter().sum()).max().unwrap_or(0)
    }
}

pub fn to_linear(d: &DagReduction) -> Result<LinearDag> {
    if !is_linear(d) {
        return Err(Error::Contract("DAG is not linear".into()));
    }
    let rows = (0..d.levels())
        .map(|h1| {
            (0..h1)
                .map(|h2| d.label(DagVertexId::new(h1, 1), DagVertexId::new(h2, 1)))
                .collect()
        })
        .collect();
    LinearDag::new(rows)
}

pub fn from_linear(l: &LinearDag) -> DagReduction {
    let levels = l.height() + 1;
    let out = l
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(h2, &n)| (h2, n))
                .collect()
        })
        .collect();
    DagReduction {
        level_start: (0..=levels).collect(),
        out,
    }
}

pub fn expand_linear(l: &LinearDag) -> Tree {
    let d = from_linear(l);
    expand(&d, DagVertexId::new(l.height(), 1)).expect("top vertex exists")
}

/// Size of the expansion: `s(0) = 1` and `s(h1) = 1 + Σ N(h1, h2) s(h2)`.
pub fn linear_size(l: &LinearDag) -> u64 {
    let mut sizes: Vec<u64> = Vec::with_capacity(l.rows.len());
    for row in &l.rows {
        let s = 1 + row.iter().zip(&sizes).map(|(n, s)| n * s).sum::<u64>();
        sizes.push(s);
    }
    *sizes.last().expect("at least one row")
}

/// Random linear DAG of height `height` whose rows are uniform over
/// `{ Σ_h2 N(h1, h2) ≤ max_degree, N(h1, h1 - 1) ≥ 1 }`, drawn by rejection
/// from independent uniform labels in `0..=max_degree`.
///
/// Fails when a row sees [`REJECTION_CAP`] consecutive rejections; that
/// happens for tall rows with a small degree bound, where
/// [`random_linear_dag_direct`] is the practical choice.
pub fn random_linear_dag(height: usize, max_degree: u64, seed: u64) -> Result<LinearDag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_linear_dag_with(height, max_degree, &mut rng)
}

pub fn random_linear_dag_with<R: Rng>(
    height: usize,
    max_degree: u64,
    rng: &mut R,
) -> Result<LinearDag> {
    if max_degree == 0 {
        return Err(Error::Argument("degree bound must be at least 1".into()));
    }
    let mut rows = vec![Vec::new()];
    for h1 in 1..=height {
        let mut accepted = None;
        for _ in 0..REJECTION_CAP {
            let row: Vec<u64> = (0..h1).map(|_| rng.gen_range(0..=max_degree)).collect();
            if row[h1 - 1] >= 1 && row.iter().sum::<u64>() <= max_degree {
                accepted = Some(row);
                break;
            }
        }
        let row = accepted.ok_or_else(|| {
            Error::Generation(format!(
                "row {h1} rejected {REJECTION_CAP} consecutive proposals (degree bound {max_degree})"
            ))
        })?;
        rows.push(row);
    }
    LinearDag::new(rows)
}

/// Same distribution as [`random_linear_dag`], sampled without rejection:
/// shifting `N(h1, h1 - 1)` down by one turns each row into a point of the
/// discrete simplex `{ n ≥ 0 : Σ n ≤ d - 1 }`, drawn uniformly by stars and bars.
pub fn random_linear_dag_direct(height: usize, max_degree: u64, seed: u64) -> Result<LinearDag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_linear_dag_direct_with(height, max_degree, &mut rng)
}

pub fn random_linear_dag_direct_with<R: Rng>(
    height: usize,
    max_degree: u64,
    rng: &mut R,
) -> Result<LinearDag> {
    if max_degree == 0 {
        return Err(Error::Argument("degree bound must be at least 1".into()));
    }
    let stars = (max_degree - 1) as usize;
    let mut rows = vec![Vec::new()];
    for h1 in 1..=height {
        // h1 bars among stars + h1 slots split the stars into h1 + 1 parts;
        // the last part is the slack.
        let mut bars = rand::seq::index::sample(rng, stars + h1, h1).into_vec();
        bars.sort_unstable();
        let mut row = Vec::with_capacity(h1);
        let mut prev = 0;
        for (k, &b) in bars.iter().enumerate() {
            let start = if k == 0 { 0 } else { prev + 1 };
            row.push((b - start) as u64);
            prev = b;
        }
        row[h1 - 1] += 1;
        rows.push(row);
    }
    LinearDag::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tree {
        Tree::parse(s).unwrap()
    }

    fn v(h: usize, i: usize) -> DagVertexId {
        DagVertexId::new(h, i)
    }

    #[test]
    fn reduce_examples() {
        let d = reduce(&t("()"));
        assert_eq!(d.vertex_count(), 1);
        assert_eq!(d.edge_count(), 0);

        let d = reduce(&t("(()())"));
        assert_eq!(d.vertex_count(), 2);
        assert_eq!(d.edges().collect::<Vec<_>>(), [(v(1, 1), v(0, 1), 2)]);
        assert_eq!(d.to_text(), "dag H=1\nm 0 1\nm 1 1\ne 1.1 0.1 2\n");
    }

    #[test]
    fn classes_ordered_by_key() {
        // "(()())" < "(())" byte-wise
        let d = reduce(&t("((())(()()))"));
        assert_eq!(d.level_count(1), 2);
        assert_eq!(expand(&d, v(1, 1)).unwrap().canonical_key(), "(()())");
        assert_eq!(expand(&d, v(1, 2)).unwrap().canonical_key(), "(())");
    }

    #[test]
    fn expand_examples() {
        let d = reduce(&Tree::leaf());
        assert_eq!(expand(&d, v(0, 1)).unwrap().to_string(), "()");
        let d = reduce(&t("(()())"));
        assert!(expand(&d, d.root().unwrap()).unwrap().is_isomorphic(&t("(()())")));
        assert!(expand(&d, v(3, 1)).is_err());
        assert!(expand(&d, v(0, 2)).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        let d = reduce(&t("(()())"));
        let mu = multiplicities(&d).unwrap();
        assert_eq!(mu.get(v(1, 1)), Some(1));
        assert_eq!(mu.get(v(0, 1)), Some(2));

        let two_roots = DagReduction::new(&[1, 2], [(v(1, 1), v(0, 1), 1), (v(1, 2), v(0, 1), 2)]).unwrap();
        assert!(matches!(multiplicities(&two_roots), Err(Error::Contract(_))));
    }

    #[test]
    fn profile_examples() {
        let d = reduce(&t("(()())"));
        let p = height_profile(&d);
        assert_eq!(p.get(v(1, 1), 0), 2);
        assert!(p.row(v(0, 1)).is_empty());
    }

    #[test]
    fn linearity_checks_agree() {
        for (s, expected) in [("()", true), ("(()())", true), ("((())(()()))", false)] {
            let tree = t(s);
            let d = reduce(&tree);
            assert_eq!(is_linear(&d), expected, "{s}");
            assert_eq!(is_self_nested_profile(&d), expected, "{s}");
            assert_eq!(is_self_nested_naive(&tree), expected, "{s}");
        }
    }

    #[test]
    fn linear_conversions() {
        let l = to_linear(&reduce(&t("(()())"))).unwrap();
        assert_eq!(l.rows(), &[vec![], vec![2]]);
        assert_eq!(to_linear(&from_linear(&l)).unwrap(), l);
        assert!(to_linear(&reduce(&t("((())(()()))"))).is_err());
    }

    #[test]
    fn linear_size_examples() {
        assert_eq!(linear_size(&LinearDag::single_vertex()), 1);
        let l = LinearDag::new(vec![vec![], vec![2], vec![1, 2]]).unwrap();
        assert_eq!(linear_size(&l), 8);
        assert_eq!(expand_linear(&l).size(), 8);
    }

    #[test]
    fn linear_dag_rejects_bad_rows() {
        assert!(LinearDag::new(vec![vec![], vec![0]]).is_err());
        assert!(LinearDag::new(vec![vec![], vec![1, 1]]).is_err());
        assert!(LinearDag::new(vec![]).is_err());
    }

    #[test]
    fn random_linear_dag_examples() {
        assert_eq!(random_linear_dag(0, 3, 1).unwrap(), LinearDag::single_vertex());
        for seed in 0..20 {
            assert_eq!(random_linear_dag(1, 1, seed).unwrap().rows(), &[vec![], vec![1]]);
        }
        for seed in 0..1000 {
            let l = random_linear_dag(3, 4, seed).unwrap();
            for h in 1..=3 {
                assert!(l.label(h, h - 1) >= 1);
                assert!(l.rows()[h].iter().sum::<u64>() <= 4);
            }
        }
        assert!(random_linear_dag(2, 0, 1).is_err());
    }

    #[test]
    fn rejection_cap_surfaces_as_error() {
        // Row 30 with degree bound 1 accepts with probability 2^-30.
        assert!(matches!(random_linear_dag(30, 1, 5), Err(Error::Generation(_))));
        assert!(random_linear_dag_direct(30, 1, 5).is_ok());
    }

    #[test]
    fn both_samplers_are_uniform_on_small_rows() {
        // Admissible rows for h1 = 2, d = 2: (N(2,0), N(2,1)) in {(0,1),(0,2),(1,1)}.
        let mut rej = HashMap::new();
        let mut dir = HashMap::new();
        let draws = 6000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..draws {
            let a = random_linear_dag_with(2, 2, &mut rng).unwrap();
            *rej.entry(a.rows()[2].clone()).or_insert(0) += 1;
            let b = random_linear_dag_direct_with(2, 2, &mut rng).unwrap();
            *dir.entry(b.rows()[2].clone()).or_insert(0) += 1;
        }
        for counts in [rej, dir] {
            assert_eq!(counts.len(), 3);
            for (_, c) in counts {
                assert!((c as f64 - draws as f64 / 3.0).abs() < 200.0, "{c}");
            }
        }
    }

    #[test]
    fn dag_text_round_trip_and_errors() {
        let d = reduce(&t("((())(()())())"));
        assert_eq!(DagReduction::parse(&d.to_text()).unwrap(), d);
        assert!(matches!(DagReduction::parse("m 0 1\n"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(
            DagReduction::parse("dag H=1\nm 0 1\nm 1 1\ne 1.1 0.1 x\n"),
            Err(Error::Parse { offset: 20, .. })
        ));
        // upward edge
        assert!(DagReduction::parse("dag H=1\nm 0 1\nm 1 1\ne 0.1 1.1 1\n").is_err());
        // height-1 vertex without a child one level down
        assert!(DagReduction::parse("dag H=1\nm 0 1\nm 1 1\n").is_err());
        // two identical classes at height 1
        assert!(DagReduction::parse("dag H=1\nm 0 1\nm 1 2\ne 1.1 0.1 1\ne 1.2 0.1 1\n").is_err());
        assert!(DagReduction::parse("dag H=1\nm 0 1\n").is_err());
    }
}
