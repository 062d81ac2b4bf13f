//! Reindexing: Mardešić normal form, levelwise replacement of a map, and
//! strict representatives. Every construction returns isomorphisms that are
//! checked by composing them and comparing with identities.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{classify_representative, compose_promaps, equivalent, BaseCategory, CofilteringIndex, ProMap, ProObject, Representative};
use crate::error::{Error, Result};
use crate::fincat::FiniteCategory;

/// Mutually inverse pro-maps between an old and a new presentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct ProIso<B: BaseCategory> {
    pub to_new: ProMap<B>,
    pub to_old: ProMap<B>,
}

impl<B: BaseCategory> ProIso<B> {
    pub fn identity(base: &B, x: &Arc<ProObject<B>>) -> Self {
        let id = ProMap::identity(base, x.clone());
        ProIso { to_new: id.clone(), to_old: id }
    }

    pub fn old(&self) -> &Arc<ProObject<B>> {
        &self.to_new.source
    }

    pub fn new_object(&self) -> &Arc<ProObject<B>> {
        &self.to_new.target
    }

    /// Both composites are equivalent to identities.
    pub fn verify(&self, base: &B) -> Result<()> {
        let there_and_back = compose_promaps(base, &self.to_old, &self.to_new)?;
        let back_and_there = compose_promaps(base, &self.to_new, &self.to_old)?;
        if !equivalent(base, &there_and_back, &ProMap::identity(base, self.old().clone()))? {
            return Err(Error::Internal("isomorphism fails on the old side".into()));
        }
        if !equivalent(base, &back_and_there, &ProMap::identity(base, self.new_object().clone()))? {
            return Err(Error::Internal("isomorphism fails on the new side".into()));
        }
        Ok(())
    }
}

/// The restriction `X ∘ F` along a functor `F` from a poset, with the
/// comparison maps; `None` if they are not compatible or not inverse.
fn restrict_along<B: BaseCategory>(
    base: &B,
    x: &Arc<ProObject<B>>,
    poset: FiniteCategory,
    on_objects: &[usize],
    on_morphisms: &[usize],
) -> Result<Option<(Arc<ProObject<B>>, ProIso<B>)>> {
    let index = CofilteringIndex::new(Arc::new(poset))?;
    let levels = on_objects.iter().map(|&i| x.levels[i].clone()).collect();
    let bonding = on_morphisms.iter().map(|&m| x.bond(m).clone()).collect();
    let new = Arc::new(ProObject::new(base, index, levels, bonding)?);
    let ic = &x.index.category;
    let to_new = Representative { theta: on_objects.to_vec(), maps: on_objects.iter().map(|&i| base.identity(&x.levels[i])).collect() };
    let mut to_old = Representative { theta: Vec::new(), maps: Vec::new() };
    for i in 0..x.n_levels() {
        let Some((p, m)) = (0..on_objects.len()).find_map(|p| ic.hom(on_objects[p], i).first().map(|&m| (p, m))) else {
            return Ok(None);
        };
        to_old.theta.push(p);
        to_old.maps.push(x.bond(m).clone());
    }
    let (Ok(to_new), Ok(to_old)) = (ProMap::new(base, x.clone(), new.clone(), to_new), ProMap::new(base, new.clone(), x.clone(), to_old)) else {
        return Ok(None);
    };
    let iso = ProIso { to_new, to_old };
    Ok(iso.verify(base).is_ok().then(|| (new, iso)))
}

/// Replaces `X` by an isomorphic pro-object indexed by a finite directed
/// poset (which is automatically cofinite and strongly directed).
///
/// Inputs already indexed by such a poset come back unchanged. Otherwise the
/// candidates are, in order: the poset reflection of the index with a
/// functorial choice of arrows, then each single object. The first candidate
/// whose comparison maps verify as inverse isomorphisms is returned; the
/// result is canonical for that order but not claimed to be minimal.
///
/// When an idempotent of the index acts non-trivially no level works on its
/// own, and the last candidates are the constant objects on the split
/// images of idempotents `X(e)` at objects that map to every other object.
/// Bases without idempotent splitting report a precondition failure there.
pub fn mardesic_reindex<B: BaseCategory>(base: &B, x: &Arc<ProObject<B>>) -> Result<(Arc<ProObject<B>>, ProIso<B>)> {
    if x.index.is_directed_poset() {
        return Ok((x.clone(), ProIso::identity(base, x)));
    }
    let ic = x.index.category.clone();
    let n = ic.n_objects();
    let mut classes: Vec<usize> = Vec::new();
    for i in 0..n {
        if !classes.iter().any(|&r| x.index.below(r, i) && x.index.below(i, r)) {
            classes.push(i);
        }
    }
    let names: Vec<String> = classes.iter().map(|&r| ic.objects()[r].clone()).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let poset = FiniteCategory::from_preorder(&refs, |p, q| x.index.below(classes[p], classes[q]));
    let mut choice: Vec<Option<usize>> = vec![None; poset.n_morphisms()];
    let mut attempts = 0usize;
    if let Some(found) = reflect(base, x, &poset, &classes, &mut choice, 0, &mut attempts)? {
        return Ok(found);
    }
    for c in 0..n {
        let point = FiniteCategory::from_preorder(&[ic.objects()[c].as_str()], |_, _| false);
        if let Some(found) = restrict_along(base, x, point, &[c], &[ic.identity(c)])? {
            return Ok(found);
        }
    }
    for c in (0..n).filter(|&c| (0..n).all(|k| x.index.below(c, k))) {
        for e in ic.hom(c, c) {
            if ic.is_identity(e) || ic.compose(e, e) != Some(e) {
                continue;
            }
            if let Some(found) = split_at(base, x, c, e)? {
                return Ok(found);
            }
        }
    }
    Err(Error::Precondition(
        "no finite poset presents this pro-object: an idempotent of the index acts non-trivially and does not split".into(),
    ))
}

/// `X` against the constant object on the image of `X(e)` at level `c`.
fn split_at<B: BaseCategory>(base: &B, x: &Arc<ProObject<B>>, c: usize, e: usize) -> Result<Option<(Arc<ProObject<B>>, ProIso<B>)>> {
    let Some(split) = base.split_idempotent(x.bond(e))? else { return Ok(None) };
    let new = Arc::new(ProObject::constant(base, split.image.clone()));
    let ic = &x.index.category;
    let to_new = Representative { theta: vec![c], maps: vec![split.retraction.clone()] };
    let mut to_old = Representative { theta: Vec::new(), maps: Vec::new() };
    for k in 0..x.n_levels() {
        let a = ic.hom(c, k)[0];
        to_old.theta.push(0);
        to_old.maps.push(base.compose(x.bond(a), &split.section)?);
    }
    let (Ok(to_new), Ok(to_old)) = (ProMap::new(base, x.clone(), new.clone(), to_new), ProMap::new(base, new.clone(), x.clone(), to_old)) else {
        return Ok(None);
    };
    let iso = ProIso { to_new, to_old };
    Ok(iso.verify(base).is_ok().then(|| (new, iso)))
}

const REFLECTION_ATTEMPTS: usize = 4096;

fn reflect<B: BaseCategory>(
    base: &B,
    x: &Arc<ProObject<B>>,
    poset: &FiniteCategory,
    classes: &[usize],
    choice: &mut Vec<Option<usize>>,
    m: usize,
    attempts: &mut usize,
) -> Result<Option<(Arc<ProObject<B>>, ProIso<B>)>> {
    let ic = &x.index.category;
    if m == poset.n_morphisms() {
        *attempts += 1;
        let on_morphisms: Vec<usize> = choice.iter().map(|c| c.expect("assigned")).collect();
        return restrict_along(base, x, poset.clone(), classes, &on_morphisms);
    }
    let (p, q) = (poset.source(m), poset.target(m));
    let options = if p == q { vec![ic.identity(classes[p])] } else { ic.hom(classes[p], classes[q]) };
    for u in options {
        if *attempts >= REFLECTION_ATTEMPTS {
            break;
        }
        choice[m] = Some(u);
        let functorial = (0..=m).all(|g| {
            (0..=m).all(|h| match poset.compose(g, h) {
                Some(gh) if gh <= m => ic.compose(choice[g].unwrap(), choice[h].unwrap()) == choice[gh],
                _ => true,
            })
        });
        if functorial {
            if let Some(found) = reflect(base, x, poset, classes, choice, m + 1, attempts)? {
                return Ok(Some(found));
            }
        }
    }
    choice[m] = None;
    Ok(None)
}

/// A levelwise replacement `L(f): X' -> Y'` of `f: X -> Y` with the
/// isomorphisms `X ≅ X'` and `Y ≅ Y'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Levelwise<B: BaseCategory> {
    pub map: ProMap<B>,
    pub source_iso: ProIso<B>,
    pub target_iso: ProIso<B>,
}

impl<B: BaseCategory> Levelwise<B> {
    /// Isomorphisms verify, `L(f)` is levelwise, and `f ∘ (X' -> X)` is
    /// equivalent to `(Y' -> Y) ∘ L(f)`.
    pub fn verify(&self, base: &B, f: &ProMap<B>) -> Result<()> {
        self.source_iso.verify(base)?;
        self.target_iso.verify(base)?;
        if !classify_representative(base, &self.map)?.levelwise {
            return Err(Error::Internal("replacement is not levelwise".into()));
        }
        let left = compose_promaps(base, f, &self.source_iso.to_old)?;
        let right = compose_promaps(base, &self.target_iso.to_old, &self.map)?;
        if !equivalent(base, &left, &right)? {
            return Err(Error::Internal("replacement square does not commute".into()));
        }
        Ok(())
    }
}

/// Reindexes `f` over the pairs `(i, k)` of the graph of `θ` on which `f`
/// is already natural, ordered componentwise.
///
/// A pair is kept when `i` lies below `θ(k)` and below `θ(k')` for every
/// `k -> k'`, and `Y(k -> k') ∘ f_k ∘ X(i -> θ(k)) = f_{k'} ∘ X(i -> θ(k'))`.
/// Compatibility of the representative makes the kept pairs cofinal in both
/// factors, and the maps `f_k ∘ X(i -> θ(k))` are natural on them.
pub fn levelwise_replace<B: BaseCategory>(base: &B, f: &ProMap<B>) -> Result<Levelwise<B>> {
    if classify_representative(base, f)?.levelwise {
        return Ok(Levelwise {
            map: f.clone(),
            source_iso: ProIso::identity(base, &f.source),
            target_iso: ProIso::identity(base, &f.target),
        });
    }
    let (x, y) = (&f.source, &f.target);
    if !x.index.is_thin() || !y.index.is_thin() {
        return Err(Error::Precondition("levelwise replacement needs thin indices; run mardesic_reindex first".into()));
    }
    let (xi, yi) = (&x.index, &y.index);
    let theta = &f.rep.theta;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for k in 0..y.n_levels() {
        'deep: for i in 0..x.n_levels() {
            let Some(a) = xi.arrow(i, theta[k]) else { continue };
            let fk = base.compose(&f.rep.maps[k], x.bond(a))?;
            for k2 in 0..y.n_levels() {
                let Some(v) = yi.arrow(k, k2) else { continue };
                let Some(b) = xi.arrow(i, theta[k2]) else { continue 'deep };
                if base.compose(y.bond(v), &fk)? != base.compose(&f.rep.maps[k2], x.bond(b))? {
                    continue 'deep;
                }
            }
            pairs.push((i, k));
        }
    }
    let xc = &xi.category;
    let yc = &yi.category;
    let names: Vec<String> = pairs.iter().map(|&(i, k)| format!("({},{})", xc.objects()[i], yc.objects()[k])).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let graph = FiniteCategory::from_preorder(&refs, |p, q| {
        let ((i, k), (i2, k2)) = (pairs[p], pairs[q]);
        xi.below(i, i2) && yi.below(k, k2)
    });
    let index = CofilteringIndex::new(Arc::new(graph))?;
    let gc = index.category.clone();
    let arrow_in = |idx: &CofilteringIndex, m: usize, first: bool| {
        let ((i, k), (i2, k2)) = (pairs[gc.source(m)], pairs[gc.target(m)]);
        if first {
            idx.arrow(i, i2).expect("componentwise order")
        } else {
            idx.arrow(k, k2).expect("componentwise order")
        }
    };
    let x_new = Arc::new(ProObject::new(
        base,
        index.clone(),
        pairs.iter().map(|&(i, _)| x.levels[i].clone()).collect(),
        (0..gc.n_morphisms()).map(|m| x.bond(arrow_in(xi, m, true)).clone()).collect(),
    )?);
    let y_new = Arc::new(ProObject::new(
        base,
        index,
        pairs.iter().map(|&(_, k)| y.levels[k].clone()).collect(),
        (0..gc.n_morphisms()).map(|m| y.bond(arrow_in(yi, m, false)).clone()).collect(),
    )?);
    let maps = pairs
        .iter()
        .map(|&(i, k)| base.compose(&f.rep.maps[k], x.bond(xi.arrow(i, theta[k]).expect("kept pairs lie below θ"))))
        .collect::<Result<_>>()?;
    let map = ProMap::new(base, x_new.clone(), y_new.clone(), Representative { theta: (0..pairs.len()).collect(), maps })?;

    let identities = |levels: &[usize], obj: &ProObject<B>| levels.iter().map(|&l| base.identity(&obj.levels[l])).collect::<Vec<_>>();
    let first: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let second: Vec<usize> = pairs.iter().map(|&(_, k)| k).collect();
    let x_to_new = ProMap::new(base, x.clone(), x_new.clone(), Representative { theta: first.clone(), maps: identities(&first, x) })?;
    let mut back = Representative { theta: Vec::new(), maps: Vec::new() };
    for i0 in 0..x.n_levels() {
        let p = (0..pairs.len())
            .find(|&p| xi.below(pairs[p].0, i0))
            .ok_or_else(|| Error::Internal("kept pairs are not cofinal in the source index".into()))?;
        back.theta.push(p);
        back.maps.push(x.bond(xi.arrow(pairs[p].0, i0).unwrap()).clone());
    }
    let x_to_old = ProMap::new(base, x_new, x.clone(), back)?;
    let y_to_new = ProMap::new(base, y.clone(), y_new.clone(), Representative { theta: second.clone(), maps: identities(&second, y) })?;
    let mut back = Representative { theta: Vec::new(), maps: Vec::new() };
    for k0 in 0..y.n_levels() {
        let p = (0..pairs.len())
            .find(|&p| pairs[p].1 == k0)
            .ok_or_else(|| Error::Internal("kept pairs miss a target level".into()))?;
        back.theta.push(p);
        back.maps.push(base.identity(&y.levels[k0]));
    }
    let y_to_old = ProMap::new(base, y_new, y.clone(), back)?;
    let out = Levelwise {
        map,
        source_iso: ProIso { to_new: x_to_new, to_old: x_to_old },
        target_iso: ProIso { to_new: y_to_new, to_old: y_to_old },
    };
    out.verify(base, f)?;
    Ok(out)
}

/// A strict representative of `f`, built by induction on the number of
/// predecessors of each target level: a level's source index is chosen deep
/// enough to make every square to an already-treated predecessor commute.
pub fn strict_representative<B: BaseCategory>(base: &B, f: &ProMap<B>) -> Result<ProMap<B>> {
    let (x, y) = (&f.source, &f.target);
    if !y.index.is_directed_poset() {
        return Err(Error::Precondition(
            "target index is not a cofinite strongly directed poset; run mardesic_reindex first".into(),
        ));
    }
    if !x.index.is_thin() {
        return Err(Error::Precondition("source index is not thin; run mardesic_reindex first".into()));
    }
    if classify_representative(base, f)?.strict {
        return Ok(f.clone());
    }
    let (xi, yi) = (&x.index, &y.index);
    let mut order: Vec<usize> = (0..y.n_levels()).collect();
    order.sort_by_key(|&k| yi.predecessors(k).len());
    let mut theta: Vec<Option<usize>> = vec![None; y.n_levels()];
    let mut maps: Vec<Option<B::Map>> = vec![None; y.n_levels()];
    for &k in &order {
        let preds = yi.predecessors(k);
        let mut chosen = None;
        'deep: for i in 0..x.n_levels() {
            let Some(a) = xi.arrow(i, f.rep.theta[k]) else { continue };
            let fk = base.compose(&f.rep.maps[k], x.bond(a))?;
            for &k2 in &preds {
                let t2 = theta[k2].expect("predecessors come first");
                let Some(b) = xi.arrow(i, t2) else { continue 'deep };
                let v = yi.arrow(k, k2).expect("poset");
                if base.compose(y.bond(v), &fk)? != base.compose(maps[k2].as_ref().unwrap(), x.bond(b))? {
                    continue 'deep;
                }
            }
            chosen = Some((i, fk));
            break;
        }
        let (i, fk) = chosen.ok_or_else(|| Error::Internal(format!("no level of the source strictifies target level {k}")))?;
        theta[k] = Some(i);
        maps[k] = Some(fk);
    }
    let rep = Representative { theta: theta.into_iter().map(Option::unwrap).collect(), maps: maps.into_iter().map(Option::unwrap).collect() };
    let strict = ProMap::new(base, x.clone(), y.clone(), rep)?;
    if !classify_representative(base, &strict)?.strict {
        return Err(Error::Internal("predecessor induction produced a non-strict representative".into()));
    }
    Ok(strict)
}
