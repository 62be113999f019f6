//! Bottom-up recursive functions on trees and on their DAG reductions.
//!
//! A function is given by a leaf value and a combiner over the children's
//! values. Combiners see `(value, repetitions)` pairs, so a DAG vertex whose
//! edge to a child class is labelled `N` passes that class's value once with
//! count `N` instead of `N` copies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::reduction::DagReduction;
use crate::trees::Tree;

pub trait BottomUp<X>: Send + Sync {
    fn name(&self) -> &'static str;

    /// Value at a leaf.
    fn leaf(&self) -> X;

    /// Value at an internal vertex from its children's values. Never called
    /// with an empty slice; must not depend on the order of `children`.
    fn combine(&self, children: &[(X, u64)]) -> X;
}

/// Evaluates `f` on every vertex of `t` in one post-order pass and returns
/// the value at the root.
pub fn eval_tree<X: Clone>(f: &dyn BottomUp<X>, t: &Tree) -> X {
    let mut values: Vec<Option<X>> = vec![None; t.size()];
    let mut buf = Vec::new();
    for v in (0..t.size()).rev() {
        let kids = t.children(v);
        let value = if kids.is_empty() {
            f.leaf()
        } else {
            buf.clear();
            buf.extend(kids.iter().map(|&c| {
                (values[c].take().expect("children precede parents"), 1)
            }));
            f.combine(&buf)
        };
        values[v] = Some(value);
    }
    values[0].take().expect("root evaluated")
}

/// Evaluates `f` once per DAG vertex, in increasing height, and returns the
/// value at the root.
pub fn eval_dag<X: Clone>(f: &dyn BottomUp<X>, d: &DagReduction) -> Result<X> {
    let root = d.flat_root()?;
    let mut values: Vec<X> = Vec::with_capacity(d.vertex_count());
    let mut buf = Vec::new();
    for v in 0..d.vertex_count() {
        let kids = d.flat_children(v);
        let value = if kids.is_empty() {
            f.leaf()
        } else {
            buf.clear();
            buf.extend(kids.iter().map(|&(c, n)| (values[c].clone(), n)));
            f.combine(&buf)
        };
        values.push(value);
    }
    Ok(values.swap_remove(root))
}

/// `1 + Σ children`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VertexCount;

impl BottomUp<u64> for VertexCount {
    fn name(&self) -> &'static str {
        "vertex_count"
    }
    fn leaf(&self) -> u64 {
        1
    }
    fn combine(&self, children: &[(u64, u64)]) -> u64 {
        1 + children.iter().map(|(v, n)| v * n).sum::<u64>()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LeafCount;

impl BottomUp<u64> for LeafCount {
    fn name(&self) -> &'static str {
        "leaf_count"
    }
    fn leaf(&self) -> u64 {
        1
    }
    fn combine(&self, children: &[(u64, u64)]) -> u64 {
        children.iter().map(|(v, n)| v * n).sum()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Height;

impl BottomUp<u64> for Height {
    fn name(&self) -> &'static str {
        "height"
    }
    fn leaf(&self) -> u64 {
        0
    }
    fn combine(&self, children: &[(u64, u64)]) -> u64 {
        1 + children.iter().map(|(v, _)| *v).max().unwrap_or(0)
    }
}

/// Strahler number: leaves have order 0; an internal vertex takes the
/// maximum child order, plus one when at least two children attain it.
#[derive(Clone, Copy, Debug, Default)]
pub struct Strahler;

impl BottomUp<u64> for Strahler {
    fn name(&self) -> &'static str {
        "strahler"
    }
    fn leaf(&self) -> u64 {
        0
    }
    fn combine(&self, children: &[(u64, u64)]) -> u64 {
        let max = children.iter().map(|(v, _)| *v).max().unwrap_or(0);
        let ties: u64 = children.iter().filter(|(v, _)| *v == max).map(|(_, n)| n).sum();
        if ties >= 2 {
            max + 1
        } else {
            max
        }
    }
}

/// Named integer-valued bottom-up functions.
pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn BottomUp<u64>>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding `vertex_count`, `leaf_count`, `height` and `strahler`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(VertexCount));
        r.register(Box::new(LeafCount));
        r.register(Box::new(Height));
        r.register(Box::new(Strahler));
        r
    }

    pub fn register(&mut self, f: Box<dyn BottomUp<u64>>) {
        self.entries.insert(f.name(), f);
    }

    pub fn get(&self, name: &str) -> Result<&dyn BottomUp<u64>> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::Argument(format!(
                "unknown function {name:?}; expected one of {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn BottomUp<u64>> + '_ {
        self.entries.values().map(|b| b.as_ref())
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::reduce;

    fn all_four(s: &str) -> (u64, u64, u64, u64) {
        let t = Tree::parse(s).unwrap();
        (
            eval_tree(&VertexCount, &t),
            eval_tree(&LeafCount, &t),
            eval_tree(&Height, &t),
            eval_tree(&Strahler, &t),
        )
    }

    #[test]
    fn builtin_values() {
        assert_eq!(all_four("()"), (1, 1, 0, 0));
        assert_eq!(all_four("((()))"), (3, 1, 2, 0));
        assert_eq!(all_four("((()())(()()))"), (7, 4, 2, 2));
        assert_eq!(eval_tree(&VertexCount, &Tree::parse("(()())").unwrap()), 3);
        assert_eq!(eval_tree(&Strahler, &Tree::parse("(()())").unwrap()), 1);
    }

    #[test]
    fn strahler_single_max_does_not_increment() {
        // children orders {1, 0}: max attained once
        assert_eq!(all_four("((()())())").3, 1);
    }

    #[test]
    fn dag_values() {
        assert_eq!(eval_dag(&VertexCount, &reduce(&Tree::leaf())).unwrap(), 1);
        let d = reduce(&Tree::parse("(()())").unwrap());
        assert_eq!(eval_dag(&VertexCount, &d).unwrap(), 3);
    }

    #[test]
    fn combiners_ignore_order() {
        let reg = Registry::with_builtins();
        let args = [(3u64, 1u64), (1, 2), (3, 1), (0, 4)];
        let mut rev = args;
        rev.reverse();
        for f in reg.iter() {
            assert_eq!(f.combine(&args), f.combine(&rev), "{}", f.name());
        }
    }

    #[test]
    fn registry_lookup() {
        let reg = Registry::with_builtins();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            ["height", "leaf_count", "strahler", "vertex_count"]
        );
        assert_eq!(reg.get("strahler").unwrap().name(), "strahler");
        assert!(matches!(reg.get("depth"), Err(Error::Argument(_))));
    }
}
