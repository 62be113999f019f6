//! Constrained edit distance between unordered trees.
//!
//! The only edit operations are inserting and deleting a leaf, each at unit
//! cost. Roots are always mapped onto each other, so the distance obeys a
//! recursion over the two child forests: match as many subtrees as possible
//! pairwise, pay the recursive distance for each matched pair and the full
//! subtree size for every unmatched one. Each step of that recursion is an
//! assignment problem solved as a min-cost max-flow.
//!
//! Three interchangeable methods compute the same value and are available
//! by name through [`MethodRegistry`]:
//!
//! * `tree`: recursion on trees, memoized on isomorphism classes;
//! * `dag`: dynamic program over all vertex pairs of two DAG reductions,
//!   where flow capacities carry the edge labels;
//! * `oracle`: direct enumeration of subsets and permutations, for small
//!   outdegrees only.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::flow::{min_cost_max_flow, FlowNetwork};
use crate::reduction::{reduce, DagReduction};
use crate::trees::{ClassInterner, Tree};

/// Outdegree bound accepted by [`brute_force_distance`].
pub const BRUTE_FORCE_MAX_CHILDREN: usize = 6;

/// A tree or the empty tree `∅`, which has size 0.
#[derive(Clone, Copy, Debug)]
pub enum TreeOrEmpty<'a> {
    Empty,
    Tree(&'a Tree),
}

impl TreeOrEmpty<'_> {
    pub fn size(&self) -> usize {
        match self {
            TreeOrEmpty::Empty => 0,
            TreeOrEmpty::Tree(t) => t.size(),
        }
    }
}

impl<'a> From<&'a Tree> for TreeOrEmpty<'a> {
    fn from(t: &'a Tree) -> Self {
        TreeOrEmpty::Tree(t)
    }
}

impl<'a> From<Option<&'a Tree>> for TreeOrEmpty<'a> {
    fn from(t: Option<&'a Tree>) -> Self {
        t.map_or(TreeOrEmpty::Empty, TreeOrEmpty::Tree)
    }
}

/// A group of identical subtrees on one side of an assignment step.
#[derive(Clone, Copy, Debug)]
struct Group {
    count: i64,
    size: i64,
}

/// Builds the assignment network of one recursion step and returns its
/// minimum cost. `pair_cost(i, j)` is the distance between left group `i`
/// and right group `j`.
///
/// Nodes: source, sink, `∅_left`, `∅_right`, the left groups, the right
/// groups. Every left subtree either meets a right subtree or flows into
/// `∅_right` (deletion); every right subtree is fed either by a left subtree
/// or by `∅_left` (insertion). `∅_left` supplies the right-side surplus and
/// `∅_right` drains the left-side surplus, which saturates all subtree arcs
/// and forces exactly `min(η_left, η_right)` matches.
fn assignment_cost(
    left: &[Group],
    right: &[Group],
    pair_cost: impl FnMut(usize, usize) -> i64,
) -> Result<i64> {
    let net = assignment_network(left, right, pair_cost);
    let res = min_cost_max_flow(&net)?;
    Ok(res.cost)
}

fn assignment_network(
    left: &[Group],
    right: &[Group],
    mut pair_cost: impl FnMut(usize, usize) -> i64,
) -> FlowNetwork {
    let eta_left: i64 = left.iter().map(|g| g.count).sum();
    let eta_right: i64 = right.iter().map(|g| g.count).sum();
    let matched = eta_left.min(eta_right);
    let (source, sink, empty_left, empty_right) = (0, 1, 2, 3);
    let first_left = 4;
    let first_right = first_left + left.len();
    let mut net = FlowNetwork::new(first_right + right.len(), source, sink);
    net.add_arc(source, empty_left, eta_right - matched, 0);
    net.add_arc(empty_right, sink, eta_left - matched, 0);
    for (i, g) in left.iter().enumerate() {
        net.add_arc(source, first_left + i, g.count, 0);
        net.add_arc(first_left + i, empty_right, g.count, g.size);
    }
    for (j, g) in right.iter().enumerate() {
        net.add_arc(first_right + j, sink, g.count, 0);
        net.add_arc(empty_left, first_right + j, g.count, g.size);
    }
    for (i, gl) in left.iter().enumerate() {
        for (j, gr) in right.iter().enumerate() {
            net.add_arc(first_left + i, first_right + j, gl.count.min(gr.count), pair_cost(i, j));
        }
    }
    net
}

/// The assignment network of the first recursion step between `t1` and
/// `t2`: one unit group per child subtree, cross arcs costed by the distance
/// between subtrees. Its minimum cost is `δ(t1, t2)`. `None` when either root
/// is a leaf, where no flow is needed.
pub fn root_assignment_network(t1: &Tree, t2: &Tree) -> Option<FlowNetwork> {
    let (f1, f2) = (t1.child_forest(), t2.child_forest());
    if f1.is_empty() || f2.is_empty() {
        return None;
    }
    let unit = |t: &Tree| Group {
        count: 1,
        size: t.size() as i64,
    };
    let left: Vec<Group> = f1.iter().map(unit).collect();
    let right: Vec<Group> = f2.iter().map(unit).collect();
    Some(assignment_network(&left, &right, |i, j| {
        edit_distance(&f1[i], &f2[j]) as i64
    }))
}

/// [`assignment_cost`] over `(count, size)` groups with unsigned distances.
pub(crate) fn assignment_distance(
    left: impl IntoIterator<Item = (u64, u64)>,
    right: impl IntoIterator<Item = (u64, u64)>,
    mut pair_cost: impl FnMut(usize, usize) -> u64,
) -> u64 {
    let group = |(count, size): (u64, u64)| Group {
        count: count as i64,
        size: size as i64,
    };
    let left: Vec<Group> = left.into_iter().map(group).collect();
    let right: Vec<Group> = right.into_iter().map(group).collect();
    assignment_cost(&left, &right, |i, j| pair_cost(i, j) as i64)
        .expect("assignment networks are well formed") as u64
}

/// Memo of distances between isomorphism classes, keyed on the unordered
/// class pair so that both orientations share one entry.
#[derive(Default, Debug)]
pub struct DistanceMemo {
    entries: HashMap<(usize, usize), u64>,
}

impl DistanceMemo {
    fn key(a: usize, b: usize) -> (usize, usize) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn get(&self, a: usize, b: usize) -> Option<u64> {
        self.entries.get(&Self::key(a, b)).copied()
    }

    fn insert(&mut self, a: usize, b: usize, d: u64) {
        self.entries.insert(Self::key(a, b), d);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `δ(t1, t2)` by the recursion on trees, one unit-capacity flow per step.
pub fn edit_distance<'a, 'b>(t1: impl Into<TreeOrEmpty<'a>>, t2: impl Into<TreeOrEmpty<'b>>) -> u64 {
    let (a, b) = match (t1.into(), t2.into()) {
        (TreeOrEmpty::Tree(a), TreeOrEmpty::Tree(b)) => (a, b),
        (x, y) => return (x.size() + y.size()) as u64,
    };
    let mut interner = ClassInterner::new();
    let ca = interner.classify(a)[a.root()];
    let cb = interner.classify(b)[b.root()];
    let mut memo = DistanceMemo::default();
    class_distance(&interner, &mut memo, ca, cb)
}

fn class_distance(classes: &ClassInterner, memo: &mut DistanceMemo, a: usize, b: usize) -> u64 {
    if a == b {
        return 0;
    }
    if let Some(d) = memo.get(a, b) {
        return d;
    }
    let (ka, kb) = (&classes.kids[a], &classes.kids[b]);
    let d = if ka.is_empty() || kb.is_empty() {
        // A bare root against a tree: insert or delete everything below the root.
        (classes.sizes[a] + classes.sizes[b] - 2) as u64
    } else {
        let unit = |c: &usize| Group {
            count: 1,
            size: classes.sizes[*c] as i64,
        };
        let left: Vec<Group> = ka.iter().map(unit).collect();
        let right: Vec<Group> = kb.iter().map(unit).collect();
        let mut costs = vec![0i64; ka.len() * kb.len()];
        for (i, &x) in ka.iter().enumerate() {
            for (j, &y) in kb.iter().enumerate() {
                costs[i * kb.len() + j] = class_distance(classes, memo, x, y) as i64;
            }
        }
        assignment_cost(&left, &right, |i, j| costs[i * kb.len() + j])
            .expect("assignment networks are well formed") as u64
    };
    memo.insert(a, b, d);
    d
}

/// `δ` between the trees of the roots of two DAG reductions, by a dynamic
/// program over every pair of DAG vertices in increasing height.
pub fn edit_distance_dag(d1: &DagReduction, d2: &DagReduction) -> Result<u64> {
    let r1 = d1.flat_root()?;
    let r2 = d2.flat_root()?;
    let sizes1 = vertex_sizes(d1);
    let sizes2 = vertex_sizes(d2);
    let n2 = d2.vertex_count();
    let mut table = vec![0u64; d1.vertex_count() * n2];
    for u in 0..d1.vertex_count() {
        let ku = d1.flat_children(u);
        for v in 0..n2 {
            let kv = d2.flat_children(v);
            table[u * n2 + v] = if ku.is_empty() || kv.is_empty() {
                sizes1[u] + sizes2[v] - 2
            } else {
                let left: Vec<Group> = ku
                    .iter()
                    .map(|&(c, n)| Group {
                        count: n as i64,
                        size: sizes1[c] as i64,
                    })
                    .collect();
                let right: Vec<Group> = kv
                    .iter()
                    .map(|&(c, n)| Group {
                        count: n as i64,
                        size: sizes2[c] as i64,
                    })
                    .collect();
                assignment_cost(&left, &right, |i, j| table[ku[i].0 * n2 + kv[j].0] as i64)? as u64
            };
        }
    }
    Ok(table[r1 * n2 + r2])
}

/// Expansion size of every vertex, by flat index.
fn vertex_sizes(d: &DagReduction) -> Vec<u64> {
    let mut sizes = Vec::with_capacity(d.vertex_count());
    for v in 0..d.vertex_count() {
        let s = 1 + d
            .flat_children(v)
            .iter()
            .map(|&(c, n)| n * sizes[c])
            .sum::<u64>();
        sizes.push(s);
    }
    sizes
}

/// `δ` by explicit enumeration of every choice of matched subtrees and every
/// pairing between them, memoized on canonical keys. Refuses trees with a
/// vertex of more than [`BRUTE_FORCE_MAX_CHILDREN`] children.
pub fn brute_force_distance<'a, 'b>(
    t1: impl Into<TreeOrEmpty<'a>>,
    t2: impl Into<TreeOrEmpty<'b>>,
) -> Result<u64> {
    let (a, b) = match (t1.into(), t2.into()) {
        (TreeOrEmpty::Tree(a), TreeOrEmpty::Tree(b)) => (a, b),
        (x, y) => {
            for t in [x, y] {
                if let TreeOrEmpty::Tree(t) = t {
                    guard(t)?;
                }
            }
            return Ok((x.size() + y.size()) as u64);
        }
    };
    guard(a)?;
    guard(b)?;
    let mut memo = HashMap::new();
    Ok(enumerate_distance(a, b, &mut memo))
}

fn guard(t: &Tree) -> Result<()> {
    if t.outdegree() > BRUTE_FORCE_MAX_CHILDREN {
        return Err(Error::Refused(format!(
            "outdegree {} exceeds the enumeration bound {BRUTE_FORCE_MAX_CHILDREN}",
            t.outdegree()
        )));
    }
    Ok(())
}

fn enumerate_distance(a: &Tree, b: &Tree, memo: &mut HashMap<(String, String), u64>) -> u64 {
    let key = (a.canonical_key(), b.canonical_key());
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let fa = a.child_forest();
    let fb = b.child_forest();
    let mut pair = vec![vec![0u64; fb.len()]; fa.len()];
    for (i, x) in fa.iter().enumerate() {
        for (j, y) in fb.iter().enumerate() {
            pair[i][j] = enumerate_distance(x, y, memo);
        }
    }
    let sa: Vec<u64> = fa.iter().map(|t| t.size() as u64).collect();
    let sb: Vec<u64> = fb.iter().map(|t| t.size() as u64).collect();

    // Injective maps from the smaller forest into the larger one cover every
    // (subset, subset, permutation) choice.
    let swap = fa.len() > fb.len();
    let (small, large) = if swap { (fb.len(), fa.len()) } else { (fa.len(), fb.len()) };
    let cost = |s: usize, l: usize| if swap { pair[l][s] } else { pair[s][l] };
    let l_sizes = if swap { &sa } else { &sb };
    let mut best = u64::MAX;
    let mut used = vec![false; large];
    #[allow(clippy::too_many_arguments)]
    fn search(
        s: usize,
        small: usize,
        used: &mut Vec<bool>,
        acc: u64,
        cost: &dyn Fn(usize, usize) -> u64,
        l_sizes: &[u64],
        best: &mut u64,
    ) {
        if s == small {
            let unmatched: u64 = used
                .iter()
                .zip(l_sizes)
                .filter(|(u, _)| !**u)
                .map(|(_, sz)| *sz)
                .sum();
            *best = (*best).min(acc + unmatched);
            return;
        }
        for l in 0..used.len() {
            if !used[l] {
                used[l] = true;
                search(s + 1, small, used, acc + cost(s, l), cost, l_sizes, best);
                used[l] = false;
            }
        }
    }
    search(0, small, &mut used, 0, &cost, l_sizes, &mut best);
    memo.insert(key, best);
    best
}

/// A way of computing `δ` between two trees.
pub trait DistanceMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn distance(&self, a: &Tree, b: &Tree) -> Result<u64>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TreeMethod;

impl DistanceMethod for TreeMethod {
    fn name(&self) -> &'static str {
        "tree"
    }
    fn distance(&self, a: &Tree, b: &Tree) -> Result<u64> {
        Ok(edit_distance(a, b))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DagMethod;

impl DistanceMethod for DagMethod {
    fn name(&self) -> &'static str {
        "dag"
    }
    fn distance(&self, a: &Tree, b: &Tree) -> Result<u64> {
        edit_distance_dag(&reduce(a), &reduce(b))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OracleMethod;

impl DistanceMethod for OracleMethod {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn distance(&self, a: &Tree, b: &Tree) -> Result<u64> {
        brute_force_distance(a, b)
    }
}

/// Distance methods selectable by name.
pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Box<dyn DistanceMethod>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry {
            methods: BTreeMap::new(),
        }
    }

    /// `tree`, `dag` and `oracle`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TreeMethod));
        r.register(Box::new(DagMethod));
        r.register(Box::new(OracleMethod));
        r
    }

    pub fn register(&mut self, m: Box<dyn DistanceMethod>) {
        self.methods.insert(m.name(), m);
    }

    pub fn get(&self, name: &str) -> Result<&dyn DistanceMethod> {
        self.methods.get(name).map(|m| m.as_ref()).ok_or_else(|| {
            Error::Argument(format!(
                "unknown method {name:?}; expected one of {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
