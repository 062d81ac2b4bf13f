use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fincat::FiniteCategory;

/// `apex -> left` and `apex -> right`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub left: usize,
    pub right: usize,
    pub apex: usize,
    pub to_left: usize,
    pub to_right: usize,
}

/// `first ∘ via = second ∘ via` for a parallel pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualizerWitness {
    pub first: usize,
    pub second: usize,
    pub via: usize,
}

/// A finite cofiltering category together with the witnesses that make it
/// one. An arrow `i -> j` is read as "i lies deeper than j": pro-objects
/// have bonding maps `X_i -> X_j` along it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CofilteringIndex {
    pub category: Arc<FiniteCategory>,
    pub cones: Vec<ConeWitness>,
    pub equalizers: Vec<EqualizerWitness>,
}

impl CofilteringIndex {
    /// Finds witnesses for every pair of objects and every parallel pair.
    pub fn new(category: Arc<FiniteCategory>) -> Result<Self> {
        let report = category.validate();
        if !report.is_ok() {
            return Err(Error::InvalidCategory(format!("{:?}", report.violations.first())));
        }
        let c = &category;
        let n = c.n_objects();
        if n == 0 {
            return Err(Error::InvalidCategory("a cofiltering index needs an object".into()));
        }
        let mut cones = Vec::new();
        for left in 0..n {
            for right in left + 1..n {
                let w = (0..n)
                    .find_map(|apex| {
                        let a = c.hom(apex, left).first().copied()?;
                        let b = c.hom(apex, right).first().copied()?;
                        Some(ConeWitness { left, right, apex, to_left: a, to_right: b })
                    })
                    .ok_or_else(|| Error::InvalidCategory(format!("objects {left} and {right} have no common cone")))?;
                cones.push(w);
            }
        }
        let mut equalizers = Vec::new();
        for first in 0..c.n_morphisms() {
            for second in first + 1..c.n_morphisms() {
                let (s, t) = (c.source(first), c.target(first));
                if c.source(second) != s || c.target(second) != t {
                    continue;
                }
                let via = (0..n)
                    .flat_map(|k| c.hom(k, s))
                    .find(|&h| c.compose(first, h) == c.compose(second, h))
                    .ok_or_else(|| Error::InvalidCategory(format!("parallel pair {first}, {second} is never equalized")))?;
                equalizers.push(EqualizerWitness { first, second, via });
            }
        }
        Ok(CofilteringIndex { category, cones, equalizers })
    }

    /// The truncated tower `N-1 -> ... -> 0`.
    pub fn tower(levels: usize) -> Self {
        Self::new(Arc::new(FiniteCategory::tower(levels))).expect("towers are cofiltering")
    }

    pub fn point() -> Self {
        Self::tower(1)
    }

    /// Re-checks every witness and that none is missing.
    pub fn check(&self) -> Result<()> {
        let c = &self.category;
        let fresh = Self::new(c.clone())?;
        let bad = |what: String| Err(Error::InvalidCategory(what));
        if fresh.cones.len() != self.cones.len() || fresh.equalizers.len() != self.equalizers.len() {
            return bad("witness list is incomplete".into());
        }
        for w in &self.cones {
            let ok = c.source(w.to_left) == w.apex
                && c.source(w.to_right) == w.apex
                && c.target(w.to_left) == w.left
                && c.target(w.to_right) == w.right;
            if !ok {
                return bad(format!("cone witness for {} and {} is wrong", w.left, w.right));
            }
        }
        for w in &self.equalizers {
            if c.compose(w.first, w.via).is_none() || c.compose(w.first, w.via) != c.compose(w.second, w.via) {
                return bad(format!("equalizer witness for {} and {} is wrong", w.first, w.second));
            }
        }
        Ok(())
    }

    pub fn n_objects(&self) -> usize {
        self.category.n_objects()
    }

    /// Whether there is an arrow `i -> j`.
    pub fn below(&self, i: usize, j: usize) -> bool {
        !self.category.hom(i, j).is_empty()
    }

    pub fn is_thin(&self) -> bool {
        self.category.is_thin()
    }

    /// A finite cofiltering poset is automatically strongly directed and
    /// cofinite, so this is the Mardešić normal-form test.
    pub fn is_directed_poset(&self) -> bool {
        self.category.is_poset()
    }

    /// The unique morphism `i -> j` of a thin index.
    pub fn arrow(&self, i: usize, j: usize) -> Option<usize> {
        let h = self.category.hom(i, j);
        (h.len() == 1).then(|| h[0])
    }

    /// An object with exactly one arrow to every object, if any.
    pub fn apex(&self) -> Option<usize> {
        (0..self.n_objects()).find(|&k| (0..self.n_objects()).all(|j| self.category.hom(k, j).len() == 1))
    }

    /// Objects `j != i` with an arrow `i -> j`, the predecessors of `i`.
    pub fn predecessors(&self, i: usize) -> Vec<usize> {
        (0..self.n_objects()).filter(|&j| j != i && self.below(i, j)).collect()
    }
}
