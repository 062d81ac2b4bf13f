//! Pro-objects over finite cofiltering indices.
//!
//! A pro-map `X -> Y` is presented by a representative: a function `θ` from
//! the objects of `Y`'s index to those of `X`'s, and base maps
//! `f_k: X_{θ(k)} -> Y_k`. Two representatives present the same pro-map when
//! some third one rarefies both; `hom_pro` computes the same set directly as
//! `lim_k colim_j hom(X_j, Y_k)`.
//!
//! A finite cofiltering poset has a least element, so every pro-object here
//! is isomorphic to a constant one. The calculus is kept in full anyway: the
//! point is to have reindexing and strictification that can be checked
//! exhaustively.

mod base;
mod index;
mod reindex;

pub use base::{BaseCategory, Complexes, FinSets, SplitIdempotent, HOM_LIMIT};
pub use index::{CofilteringIndex, ConeWitness, EqualizerWitness};
pub use reindex::{levelwise_replace, mardesic_reindex, strict_representative, Levelwise, ProIso};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ProObject<B: BaseCategory> {
    pub index: CofilteringIndex,
    pub levels: Vec<B::Obj>,
    /// One base map per morphism of the index, `X_i -> X_j` for `i -> j`.
    pub bonding: Vec<B::Map>,
}

impl<B: BaseCategory> ProObject<B> {
    pub fn new(base: &B, index: CofilteringIndex, levels: Vec<B::Obj>, bonding: Vec<B::Map>) -> Result<Self> {
        let x = ProObject { index, levels, bonding };
        x.check(base)?;
        Ok(x)
    }

    pub fn constant(base: &B, x: B::Obj) -> Self {
        let id = base.identity(&x);
        ProObject { index: CofilteringIndex::point(), levels: vec![x], bonding: vec![id] }
    }

    /// A tower `X_{N-1} -> ... -> X_0` from its one-step bondings, with
    /// `down[k]: X_{k+1} -> X_k`.
    pub fn tower(base: &B, levels: Vec<B::Obj>, down: Vec<B::Map>) -> Result<Self> {
        if levels.is_empty() || down.len() + 1 != levels.len() {
            return Err(Error::Shape("a tower of N levels needs N - 1 bondings".into()));
        }
        let index = CofilteringIndex::tower(levels.len());
        let c = index.category.clone();
        let mut bonding = Vec::with_capacity(c.n_morphisms());
        for m in 0..c.n_morphisms() {
            let (i, j) = (c.source(m), c.target(m));
            let mut b = base.identity(&levels[j]);
            for step in j..i {
                b = base.compose(&b, &down[step])?;
            }
            bonding.push(b);
        }
        Self::new(base, index, levels, bonding)
    }

    /// Functoriality of the bonding maps.
    pub fn check(&self, base: &B) -> Result<()> {
        let c = &self.index.category;
        if self.levels.len() != c.n_objects() || self.bonding.len() != c.n_morphisms() {
            return Err(Error::Shape("levels or bonding maps do not match the index".into()));
        }
        for m in 0..c.n_morphisms() {
            let b = &self.bonding[m];
            if base.source(b) != self.levels[c.source(m)] || base.target(b) != self.levels[c.target(m)] {
                return Err(Error::EndpointMismatch(format!("bonding map {} has the wrong endpoints", c.morphisms()[m].name)));
            }
            if c.is_identity(m) && *b != base.identity(&self.levels[c.source(m)]) {
                return Err(Error::InvalidDiagram(format!("identity {} is not sent to an identity", c.morphisms()[m].name)));
            }
        }
        for g in 0..c.n_morphisms() {
            for f in 0..c.n_morphisms() {
                if let Some(gf) = c.compose(g, f) {
                    if base.compose(&self.bonding[g], &self.bonding[f])? != self.bonding[gf] {
                        return Err(Error::InvalidDiagram(format!("bonding does not preserve {}", c.morphisms()[gf].name)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn bond(&self, m: usize) -> &B::Map {
        &self.bonding[m]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Representative<B: BaseCategory> {
    /// `theta[k]`: the level of the source used for target level `k`.
    pub theta: Vec<usize>,
    /// `maps[k]: X_{theta[k]} -> Y_k`.
    pub maps: Vec<B::Map>,
}

/// For `v: k -> k'`: `Y(v) ∘ f_k ∘ X(a) = f_{k'} ∘ X(b)` with `a: deep -> θ(k)`
/// and `b: deep -> θ(k')`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityWitness {
    pub morphism: usize,
    pub deep: usize,
    pub to_first: usize,
    pub to_second: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ProMap<B: BaseCategory> {
    pub source: Arc<ProObject<B>>,
    pub target: Arc<ProObject<B>>,
    pub rep: Representative<B>,
}

/// Some `(i, a, b)` with `f ∘ X(a) = g ∘ X(b)` for `f: X_j -> T`, `g: X_j' -> T`:
/// equality of germs in `colim_j hom(X_j, T)`.
fn common_germ<B: BaseCategory>(
    base: &B,
    x: &ProObject<B>,
    j: usize,
    f: &B::Map,
    j2: usize,
    g: &B::Map,
) -> Result<Option<(usize, usize, usize)>> {
    let c = &x.index.category;
    for i in 0..c.n_objects() {
        for a in c.hom(i, j) {
            let fa = base.compose(f, x.bond(a))?;
            for b in c.hom(i, j2) {
                if fa == base.compose(g, x.bond(b))? {
                    return Ok(Some((i, a, b)));
                }
            }
        }
    }
    Ok(None)
}

/// Checks that `rep` has the right shape and is compatible, returning one
/// witness per non-identity morphism of the target index.
pub fn compatibility<B: BaseCategory>(
    base: &B,
    x: &ProObject<B>,
    y: &ProObject<B>,
    rep: &Representative<B>,
) -> Result<Vec<CompatibilityWitness>> {
    let k_cat = &y.index.category;
    if rep.theta.len() != y.n_levels() || rep.maps.len() != y.n_levels() {
        return Err(Error::Shape("representative does not cover every target level".into()));
    }
    for (k, (&t, m)) in rep.theta.iter().zip(&rep.maps).enumerate() {
        if t >= x.n_levels() || base.source(m) != x.levels[t] || base.target(m) != y.levels[k] {
            return Err(Error::EndpointMismatch(format!("map at target level {k} has the wrong endpoints")));
        }
    }
    let mut witnesses = Vec::new();
    for v in 0..k_cat.n_morphisms() {
        if k_cat.is_identity(v) {
            continue;
        }
        let (k, k2) = (k_cat.source(v), k_cat.target(v));
        let pushed = base.compose(y.bond(v), &rep.maps[k])?;
        let (deep, to_first, to_second) = common_germ(base, x, rep.theta[k], &pushed, rep.theta[k2], &rep.maps[k2])?
            .ok_or_else(|| Error::Precondition(format!("representative is not compatible along {}", k_cat.morphisms()[v].name)))?;
        witnesses.push(CompatibilityWitness { morphism: v, deep, to_first, to_second });
    }
    Ok(witnesses)
}

impl<B: BaseCategory> ProMap<B> {
    pub fn new(base: &B, source: Arc<ProObject<B>>, target: Arc<ProObject<B>>, rep: Representative<B>) -> Result<Self> {
        compatibility(base, &source, &target, &rep)?;
        Ok(ProMap { source, target, rep })
    }

    pub fn identity(base: &B, x: Arc<ProObject<B>>) -> Self {
        let maps = x.levels.iter().map(|l| base.identity(l)).collect();
        ProMap { rep: Representative { theta: (0..x.n_levels()).collect(), maps }, source: x.clone(), target: x }
    }

    /// The representative rarefied all the way to the apex of the source
    /// index. When the apex exists, two pro-maps are equal exactly when these
    /// agree, so it serves as the identity of the equivalence class.
    pub fn canonical(&self, base: &B) -> Result<Option<Representative<B>>> {
        let Some(apex) = self.source.index.apex() else { return Ok(None) };
        let maps = self
            .rep
            .theta
            .iter()
            .zip(&self.rep.maps)
            .map(|(&t, m)| {
                let a = self.source.index.arrow(apex, t).expect("apex has one arrow everywhere");
                base.compose(m, self.source.bond(a))
            })
            .collect::<Result<_>>()?;
        Ok(Some(Representative { theta: vec![apex; self.target.n_levels()], maps }))
    }
}

/// Per target level, an arrow `φ(k) -> θ(k)` with `g_k = f_k ∘ X(arrow)`,
/// when `finer = (φ, g)` rarefies `coarser = (θ, f)`.
pub fn rarefaction<B: BaseCategory>(
    base: &B,
    x: &ProObject<B>,
    finer: &Representative<B>,
    coarser: &Representative<B>,
) -> Result<Option<Vec<usize>>> {
    if finer.theta.len() != coarser.theta.len() {
        return Ok(None);
    }
    let c = &x.index.category;
    let mut arrows = Vec::with_capacity(finer.theta.len());
    for k in 0..finer.theta.len() {
        let mut found = None;
        for a in c.hom(finer.theta[k], coarser.theta[k]) {
            if base.compose(&coarser.maps[k], x.bond(a))? == finer.maps[k] {
                found = Some(a);
                break;
            }
        }
        match found {
            Some(a) => arrows.push(a),
            None => return Ok(None),
        }
    }
    Ok(Some(arrows))
}

pub fn rarefies<B: BaseCategory>(base: &B, x: &ProObject<B>, finer: &Representative<B>, coarser: &Representative<B>) -> Result<bool> {
    Ok(rarefaction(base, x, finer, coarser)?.is_some())
}

/// A representative rarefying both sides, with the arrows that show it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Equivalence<B: BaseCategory> {
    pub common: Representative<B>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl<B: BaseCategory> Equivalence<B> {
    pub fn check(&self, base: &B, f: &ProMap<B>, g: &ProMap<B>) -> Result<bool> {
        let c = &f.source.index.category;
        for (side, arrows) in [(&f.rep, &self.left), (&g.rep, &self.right)] {
            if arrows.len() != side.theta.len() {
                return Ok(false);
            }
            for k in 0..arrows.len() {
                let a = arrows[k];
                if a >= c.n_morphisms() || c.source(a) != self.common.theta[k] || c.target(a) != side.theta[k] {
                    return Ok(false);
                }
                if base.compose(&side.maps[k], f.source.bond(a))? != self.common.maps[k] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Whether `f` and `g` present the same pro-map. The common rarefaction is
/// found level by level, since rarefying one level never constrains another.
pub fn reps_equivalent<B: BaseCategory>(base: &B, f: &ProMap<B>, g: &ProMap<B>) -> Result<Option<Equivalence<B>>> {
    if f.source != g.source || f.target != g.target {
        return Ok(None);
    }
    let x = &f.source;
    let mut common = Representative { theta: Vec::new(), maps: Vec::new() };
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for k in 0..f.target.n_levels() {
        let Some((i, a, b)) = common_germ(base, x, f.rep.theta[k], &f.rep.maps[k], g.rep.theta[k], &g.rep.maps[k])? else {
            return Ok(None);
        };
        common.theta.push(i);
        common.maps.push(base.compose(&f.rep.maps[k], x.bond(a))?);
        left.push(a);
        right.push(b);
    }
    Ok(Some(Equivalence { common, left, right }))
}

pub fn equivalent<B: BaseCategory>(base: &B, f: &ProMap<B>, g: &ProMap<B>) -> Result<bool> {
    Ok(reps_equivalent(base, f, g)?.is_some())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub strict: bool,
    pub levelwise: bool,
    /// `θ` on morphisms when it extends to a functor with natural maps.
    pub functor: Option<Vec<usize>>,
}

/// Searches for an extension of `θ` to a functor making the maps natural.
pub fn classify_representative<B: BaseCategory>(base: &B, f: &ProMap<B>) -> Result<Classification> {
    let (x, y) = (&f.source, &f.target);
    let (ic, kc) = (&x.index.category, &y.index.category);
    let theta = &f.rep.theta;
    // Candidate images per morphism: arrows θ(k) -> θ(k') making the square commute.
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(kc.n_morphisms());
    for v in 0..kc.n_morphisms() {
        let (k, k2) = (kc.source(v), kc.target(v));
        let pushed = base.compose(y.bond(v), &f.rep.maps[k])?;
        let mut cs = Vec::new();
        for u in ic.hom(theta[k], theta[k2]) {
            if kc.is_identity(v) && !ic.is_identity(u) {
                continue;
            }
            if base.compose(&f.rep.maps[k2], x.bond(u))? == pushed {
                cs.push(u);
            }
        }
        candidates.push(cs);
    }
    let same_index = x.index == y.index && theta.iter().enumerate().all(|(k, &t)| k == t);
    if same_index && (0..kc.n_morphisms()).all(|v| candidates[v].contains(&v)) {
        let functor: Vec<usize> = (0..kc.n_morphisms()).collect();
        return Ok(Classification { strict: true, levelwise: true, functor: Some(functor) });
    }
    let mut assign: Vec<Option<usize>> = vec![None; kc.n_morphisms()];
    let functor = extend_functor(kc, ic, &candidates, &mut assign, 0);
    Ok(Classification { strict: functor.is_some(), levelwise: false, functor })
}

fn extend_functor(
    kc: &crate::fincat::FiniteCategory,
    ic: &crate::fincat::FiniteCategory,
    candidates: &[Vec<usize>],
    assign: &mut Vec<Option<usize>>,
    v: usize,
) -> Option<Vec<usize>> {
    if v == candidates.len() {
        return Some(assign.iter().map(|a| a.expect("all assigned")).collect());
    }
    for &u in &candidates[v] {
        assign[v] = Some(u);
        let consistent = (0..=v).all(|g| {
            (0..=v).all(|h| match kc.compose(g, h) {
                Some(gh) if gh <= v => ic.compose(assign[g].unwrap(), assign[h].unwrap()) == assign[gh],
                _ => true,
            })
        });
        if consistent {
            if let Some(done) = extend_functor(kc, ic, candidates, assign, v + 1) {
                return Some(done);
            }
        }
    }
    assign[v] = None;
    None
}

/// `g ∘ f`: level `k` of the composite reads `g_k ∘ f_{θ_g(k)}`.
pub fn compose_promaps<B: BaseCategory>(base: &B, g: &ProMap<B>, f: &ProMap<B>) -> Result<ProMap<B>> {
    if f.target != g.source {
        return Err(Error::EndpointMismatch("composite of pro-maps".into()));
    }
    let mut rep = Representative { theta: Vec::new(), maps: Vec::new() };
    for k in 0..g.target.n_levels() {
        let mid = g.rep.theta[k];
        rep.theta.push(f.rep.theta[mid]);
        rep.maps.push(base.compose(&g.rep.maps[k], &f.rep.maps[mid])?);
    }
    ProMap::new(base, f.source.clone(), g.target.clone(), rep)
}

fn find_root(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// `Hom(X, Y) = lim_k colim_j hom(X_j, Y_k)`, as canonical representatives.
///
/// The colimit is the quotient of the disjoint union of hom-sets by
/// precomposition with bonding maps; the limit is the set of families of
/// classes compatible with the bonding maps of `Y`.
pub fn hom_pro<B: BaseCategory>(base: &B, x: &Arc<ProObject<B>>, y: &Arc<ProObject<B>>) -> Result<Vec<ProMap<B>>> {
    let (ic, kc) = (&x.index.category, &y.index.category);
    // Per target level: the germs (j, h), their class labels, and class representatives.
    let mut germs: Vec<Vec<(usize, B::Map)>> = Vec::new();
    let mut labels: Vec<Vec<usize>> = Vec::new();
    let mut reps: Vec<Vec<usize>> = Vec::new();
    for k in 0..y.n_levels() {
        let mut elems: Vec<(usize, B::Map)> = Vec::new();
        let mut start = Vec::new();
        for j in 0..x.n_levels() {
            start.push(elems.len());
            for h in base.hom(&x.levels[j], &y.levels[k])? {
                elems.push((j, h));
            }
        }
        start.push(elems.len());
        let mut parent: Vec<usize> = (0..elems.len()).collect();
        for e in 0..elems.len() {
            let (j, h) = elems[e].clone();
            for a in 0..ic.n_morphisms() {
                if ic.target(a) != j || ic.is_identity(a) {
                    continue;
                }
                let j2 = ic.source(a);
                let ha = base.compose(&h, x.bond(a))?;
                let pos = (start[j2]..start[j2 + 1])
                    .find(|&q| elems[q].1 == ha)
                    .ok_or_else(|| Error::Internal("precomposite missing from its hom-set".into()))?;
                let (r1, r2) = (find_root(&mut parent, e), find_root(&mut parent, pos));
                // The smaller index stays root, so roots are the least members.
                parent[r1.max(r2)] = r1.min(r2);
            }
        }
        let label: Vec<usize> = (0..elems.len()).map(|e| find_root(&mut parent, e)).collect();
        let mut roots: Vec<usize> = label.clone();
        roots.sort_unstable();
        roots.dedup();
        labels.push(label);
        reps.push(roots);
        germs.push(elems);
    }
    let class_of = |k: usize, root: usize| reps[k].iter().position(|&r| r == root);
    // post[v][c]: class at the target of v of Y(v) ∘ (representative of class c).
    let mut post: Vec<Vec<usize>> = Vec::with_capacity(kc.n_morphisms());
    for v in 0..kc.n_morphisms() {
        let (k, k2) = (kc.source(v), kc.target(v));
        let mut row = Vec::new();
        for &r in &reps[k] {
            let (j, h) = &germs[k][r];
            let pushed = base.compose(y.bond(v), h)?;
            let pos = germs[k2]
                .iter()
                .position(|(j2, h2)| j2 == j && *h2 == pushed)
                .ok_or_else(|| Error::Internal("postcomposite missing from its hom-set".into()))?;
            row.push(class_of(k2, labels[k2][pos]).expect("labels are roots"));
        }
        post.push(row);
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; y.n_levels()];
    compatible_families(kc, &post, &reps, &mut choice, 0, &mut |choice| {
        let theta = (0..choice.len()).map(|k| germs[k][reps[k][choice[k]]].0).collect();
        let maps = (0..choice.len()).map(|k| germs[k][reps[k][choice[k]]].1.clone()).collect();
        out.push(Representative { theta, maps });
    });
    out.into_iter().map(|rep| ProMap::new(base, x.clone(), y.clone(), rep)).collect()
}

fn compatible_families(
    kc: &crate::fincat::FiniteCategory,
    post: &[Vec<usize>],
    reps: &[Vec<usize>],
    choice: &mut Vec<usize>,
    k: usize,
    emit: &mut dyn FnMut(&[usize]),
) {
    if k == choice.len() {
        emit(choice);
        return;
    }
    for c in 0..reps[k].len() {
        choice[k] = c;
        let ok = (0..kc.n_morphisms()).all(|v| {
            let (s, t) = (kc.source(v), kc.target(v));
            s > k || t > k || post[v][choice[s]] == choice[t]
        });
        if ok {
            compatible_families(kc, post, reps, choice, k + 1, emit);
        }
    }
}
