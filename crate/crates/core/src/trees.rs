//! Unordered rooted trees.
//!
//! A [`Tree`] is stored as an arena: vertex `0` is the root and every child
//! has a larger index than its parent, so a reverse scan of the arena visits
//! children before parents. None of the traversals below recurse, which keeps
//! deep paths (height in the tens of thousands) off the call stack.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An immutable unordered rooted tree.
#[derive(Clone, Debug)]
pub struct Tree {
    children: Vec<Vec<usize>>,
}

impl Tree {
    /// The single-vertex tree.
    pub fn leaf() -> Self {
        Tree {
            children: vec![Vec::new()],
        }
    }

    /// A new root whose children are the given trees.
    pub fn from_children<I>(subtrees: I) -> Self
    where
        I: IntoIterator<Item = Tree>,
    {
        let mut children = vec![Vec::new()];
        for sub in subtrees {
            let offset = children.len();
            children[0].push(offset);
            children.extend(
                sub.children
                    .into_iter()
                    .map(|kids| kids.into_iter().map(|k| k + offset).collect()),
            );
        }
        Tree { children }
    }

    /// Builds a tree from per-vertex child lists. Vertex 0 is the root and
    /// every child index must exceed its parent's.
    pub fn from_child_lists(children: Vec<Vec<usize>>) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::Argument("a tree needs at least one vertex".into()));
        }
        let n = children.len();
        let mut seen = vec![false; n];
        seen[0] = true;
        for (v, kids) in children.iter().enumerate() {
            for &k in kids {
                if k <= v || k >= n || seen[k] {
                    return Err(Error::Argument(format!(
                        "vertex {v} has an invalid child {k}"
                    )));
                }
                seen[k] = true;
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(Error::Argument(format!("vertex {orphan} has no parent")));
        }
        Ok(Tree { children })
    }

    /// Parses the parenthesis format `Tree := "(" Tree* ")"`. ASCII
    /// whitespace between tokens is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let bytes = text.as_bytes();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut closed = false;
        for (offset, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => {
                    if closed {
                        return Err(Error::parse(offset, "trailing input after tree"));
                    }
                    let id = children.len();
                    children.push(Vec::new());
                    if let Some(&parent) = stack.last() {
                        children[parent].push(id);
                    }
                    stack.push(id);
                }
                b')' => {
                    if stack.pop().is_none() {
                        return Err(Error::parse(offset, "unbalanced ')'"));
                    }
                    if stack.is_empty() {
                        closed = true;
                    }
                }
                b if b.is_ascii_whitespace() => {}
                _ => {
                    return Err(Error::parse(
                        offset,
                        format!("unexpected character {:?}", b as char),
                    ))
                }
            }
        }
        if children.is_empty() {
            return Err(Error::parse(bytes.len(), "empty input"));
        }
        if !stack.is_empty() {
            return Err(Error::parse(bytes.len(), "unbalanced '(' at end of input"));
        }
        Ok(Tree { children })
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn size(&self) -> usize {
        self.children.len()
    }

    pub fn height(&self) -> usize {
        self.vertex_heights()[0]
    }

    /// Maximal number of children over all vertices.
    pub fn outdegree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn leaf_count(&self) -> usize {
        self.children.iter().filter(|c| c.is_empty()).count()
    }

    /// Height of every vertex, indexed by arena position.
    pub fn vertex_heights(&self) -> Vec<usize> {
        let mut heights = vec![0; self.size()];
        for v in (0..self.size()).rev() {
            heights[v] = self.children[v]
                .iter()
                .map(|&c| heights[c] + 1)
                .max()
                .unwrap_or(0);
        }
        heights
    }

    /// Number of vertices in the subtree of every vertex.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1; self.size()];
        for v in (0..self.size()).rev() {
            sizes[v] += self.children[v].iter().map(|&c| sizes[c]).sum::<usize>();
        }
        sizes
    }

    /// Copy of the subtree rooted at `v`.
    pub fn subtree(&self, v: usize) -> Tree {
        let mut map = HashMap::new();
        let mut order = vec![v];
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            map.insert(u, i);
            order.extend_from_slice(&self.children[u]);
            i += 1;
        }
        let children = order
            .iter()
            .map(|u| self.children[*u].iter().map(|c| map[c]).collect())
            .collect();
        Tree { children }
    }

    /// Canonical key of every vertex's subtree.
    pub fn vertex_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = vec![String::new(); self.size()];
        for v in (0..self.size()).rev() {
            let mut parts: Vec<&str> = self.children[v].iter().map(|&c| keys[c].as_str()).collect();
            parts.sort_unstable();
            let mut key = String::with_capacity(2 + parts.iter().map(|p| p.len()).sum::<usize>());
            key.push('(');
            for p in parts {
                key.push_str(p);
            }
            key.push(')');
            keys[v] = key;
        }
        keys
    }

    /// Encoding that is equal for two trees exactly when they are isomorphic:
    /// a vertex is `(` followed by its children's keys in ascending byte
    /// order (`(` < `)`) and then `)`.
    pub fn canonical_key(&self) -> String {
        let mut keys: Vec<String> = vec![String::new(); self.size()];
        for v in (0..self.size()).rev() {
            let mut parts: Vec<String> = self.children[v]
                .iter()
                .map(|&c| std::mem::take(&mut keys[c]))
                .collect();
            parts.sort_unstable();
            let mut key = String::with_capacity(2 + parts.iter().map(String::len).sum::<usize>());
            key.push('(');
            for p in &parts {
                key.push_str(p);
            }
            key.push(')');
            keys[v] = key;
        }
        std::mem::take(&mut keys[0])
    }

    pub fn is_isomorphic(&self, other: &Tree) -> bool {
        self.size() == other.size() && self.canonical_key() == other.canonical_key()
    }

    /// Subtrees hanging under the root, sorted by canonical key.
    pub fn child_forest(&self) -> Vec<Tree> {
        let mut forest: Vec<(String, Tree)> = self.children[0]
            .iter()
            .map(|&c| {
                let t = self.subtree(c);
                (t.canonical_key(), t)
            })
            .collect();
        forest.sort_by(|a, b| a.0.cmp(&b.0));
        forest.into_iter().map(|(_, t)| t).collect()
    }

    /// Same tree with every child list permuted by `rng`.
    pub fn shuffled<R: Rng>(&self, rng: &mut R) -> Tree {
        use rand::seq::SliceRandom;
        let mut children = self.children.clone();
        for kids in &mut children {
            kids.shuffle(rng);
        }
        Tree { children }
    }
}

impl FromStr for Tree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tree::parse(s)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::with_capacity(2 * self.size());
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        out.push('(');
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&c) = self.children[*v].get(*next) {
                *next += 1;
                out.push('(');
                stack.push((c, 0));
            } else {
                out.push(')');
                stack.pop();
            }
        }
        f.write_str(&out)
    }
}

/// Grows a tree from a single vertex by attaching `n - 1` leaves, each under a
/// vertex chosen uniformly among those already present.
///
/// The generator is ChaCha8 seeded with `seed`.
pub fn random_tree(n: usize, seed: u64) -> Result<Tree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tree_with(n, &mut rng)
}

pub fn random_tree_with<R: Rng>(n: usize, rng: &mut R) -> Result<Tree> {
    if n == 0 {
        return Err(Error::Argument("tree size must be at least 1".into()));
    }
    let mut children: Vec<Vec<usize>> = Vec::with_capacity(n);
    children.push(Vec::new());
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        children[parent].push(v);
        children.push(Vec::new());
    }
    Ok(Tree { children })
}

/// Assigns isomorphism classes to subtrees, shared across any number of
/// trees. Two vertices get the same class id iff their subtrees are
/// isomorphic.
#[derive(Default, Debug)]
pub(crate) struct ClassInterner {
    ids: HashMap<Vec<usize>, usize>,
    /// Sorted child classes of each class, with repetition.
    pub(crate) kids: Vec<Vec<usize>>,
    pub(crate) sizes: Vec<usize>,
    pub(crate) heights: Vec<usize>,
}

impl ClassInterner {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Class id of every vertex of `t`.
    pub(crate) fn classify(&mut self, t: &Tree) -> Vec<usize> {
        let mut class = vec![0; t.size()];
        for v in (0..t.size()).rev() {
            let mut sig: Vec<usize> = t.children(v).iter().map(|&c| class[c]).collect();
            sig.sort_unstable();
            class[v] = self.intern(sig);
        }
        class
    }

    fn intern(&mut self, sig: Vec<usize>) -> usize {
        if let Some(&id) = self.ids.get(&sig) {
            return id;
        }
        let id = self.kids.len();
        let size = 1 + sig.iter().map(|&c| self.sizes[c]).sum::<usize>();
        let height = sig.iter().map(|&c| self.heights[c] + 1).max().unwrap_or(0);
        self.ids.insert(sig.clone(), id);
        self.kids.push(sig);
        self.sizes.push(size);
        self.heights.push(height);
        id
    }

    pub(crate) fn len(&self) -> usize {
        self.kids.len()
    }
}
