//! Constructions on bounded complexes of F_p vector spaces (diagrams over the
//! terminal category) that the pro factorization needs: finite sums,
//! pullbacks, extension problems, fibration tests and a rank test for the
//! left lifting property.

use std::sync::Arc;

use crate::equichain::{chain_hom_basis, ChainAdapter, ChainDiagram, ChainMap};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::soa::{CellAdapter, LiftOutcome};

pub(crate) fn require_terminal(x: &ChainDiagram) -> Result<()> {
    let c = x.category();
    if c.n_objects() != 1 || c.n_morphisms() != 1 {
        return Err(Error::Precondition("pro factorization works over complexes of vector spaces (terminal D)".into()));
    }
    Ok(())
}

/// Builds a complex of vector spaces from dimensions and differentials.
fn assemble(like: &ChainDiagram, dims: &[usize], differentials: &[Matrix]) -> Result<Arc<ChainDiagram>> {
    Ok(Arc::new(ChainDiagram::constant(like.category().clone(), like.p(), like.lo(), dims, differentials)?))
}

pub fn zero_like(x: &ChainDiagram) -> Arc<ChainDiagram> {
    Arc::new(ChainDiagram::zero(x.category().clone(), x.p(), x.lo(), x.hi()))
}

pub fn direct_sum(parts: &[Arc<ChainDiagram>]) -> Result<Arc<ChainDiagram>> {
    let (first, rest) = parts.split_first().ok_or_else(|| Error::Shape("empty direct sum".into()))?;
    let mut sum = (**first).clone();
    for x in rest {
        sum = sum.direct_sum(x)?;
    }
    Ok(Arc::new(sum))
}

/// `⊕ maps: ⊕ sources -> ⊕ targets`.
pub fn sum_of_maps(maps: &[ChainMap]) -> Result<ChainMap> {
    let source = direct_sum(&maps.iter().map(|m| m.source.clone()).collect::<Vec<_>>())?;
    let target = direct_sum(&maps.iter().map(|m| m.target.clone()).collect::<Vec<_>>())?;
    let components = source
        .degrees()
        .map(|n| {
            let mut block = maps[0].comp(n, 0).clone();
            for m in &maps[1..] {
                block = block.block_diag(m.comp(n, 0));
            }
            vec![block]
        })
        .collect();
    ChainMap::new(source, target, components)
}

/// The map `W -> ⊕ targets` with the given components.
pub fn tuple(source: &Arc<ChainDiagram>, maps: &[ChainMap]) -> Result<ChainMap> {
    let target = direct_sum(&maps.iter().map(|m| m.target.clone()).collect::<Vec<_>>())?;
    let components = source
        .degrees()
        .map(|n| {
            let mut block = maps[0].comp(n, 0).clone();
            for m in &maps[1..] {
                block = block.vstack(m.comp(n, 0));
            }
            vec![block]
        })
        .collect();
    ChainMap::new(source.clone(), target, components)
}

/// The projection `⊕ parts -> parts[which]`.
pub fn projection(parts: &[Arc<ChainDiagram>], which: usize) -> Result<ChainMap> {
    let sum = direct_sum(parts)?;
    let p = sum.p();
    let components = sum
        .degrees()
        .map(|n| {
            let before: usize = parts[..which].iter().map(|x| x.dim(n, 0)).sum();
            let own = parts[which].dim(n, 0);
            let mut m = Matrix::zeros(p, own, sum.dim(n, 0));
            m.paste(0, before, &Matrix::identity(p, own));
            vec![m]
        })
        .collect();
    ChainMap::new(sum, parts[which].clone(), components)
}

/// `B ×_A Z` for `c: B -> A` and `a: Z -> A`, as the kernel of `(c, -a)`.
pub struct Pullback {
    pub object: Arc<ChainDiagram>,
    pub to_cell: ChainMap,
    pub to_base: ChainMap,
    /// Per degree, a basis of the kernel inside `B ⊕ Z`.
    basis: Vec<Matrix>,
}

pub fn pullback(c: &ChainMap, a: &ChainMap) -> Result<Pullback> {
    if c.target != a.target {
        return Err(Error::EndpointMismatch("pullback legs have different targets".into()));
    }
    let (b, z) = (&c.source, &a.source);
    let basis: Vec<Matrix> = b.degrees().map(|n| c.comp(n, 0).hstack(&a.comp(n, 0).neg()).kernel()).collect();
    let lo = b.lo();
    let k = |n: i64| &basis[(n - lo) as usize];
    let dims: Vec<usize> = basis.iter().map(|m| m.cols()).collect();
    let mut differentials = Vec::new();
    for n in lo + 1..=b.hi() {
        let ambient = b.d(n, 0).block_diag(&z.d(n, 0));
        let d = k(n - 1)
            .solve(&ambient.mul(k(n)))
            .ok_or_else(|| Error::Internal("pullback is not closed under the differential".into()))?;
        differentials.push(d);
    }
    let object = assemble(b, &dims, &differentials)?;
    let split = |first: bool| -> Vec<Vec<Matrix>> {
        b.degrees()
            .map(|n| {
                let m = k(n);
                let db = b.dim(n, 0);
                vec![if first { m.submatrix(0..db, 0..m.cols()) } else { m.submatrix(db..m.rows(), 0..m.cols()) }]
            })
            .collect()
    };
    let to_cell = ChainMap::new(object.clone(), b.clone(), split(true))?;
    let to_base = ChainMap::new(object.clone(), z.clone(), split(false))?;
    Ok(Pullback { object, to_cell, to_base, basis })
}

impl Pullback {
    /// The map into the pullback with components `u: W -> B` and `v: W -> Z`.
    pub fn pair(&self, u: &ChainMap, v: &ChainMap) -> Result<ChainMap> {
        let lo = self.object.lo();
        let components = self
            .object
            .degrees()
            .map(|n| {
                let stacked = u.comp(n, 0).vstack(v.comp(n, 0));
                self.basis[(n - lo) as usize]
                    .solve(&stacked)
                    .map(|m| vec![m])
                    .ok_or_else(|| Error::NonCommutingSquare(format!("pair misses the pullback in degree {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ChainMap::new(u.source.clone(), self.object.clone(), components)
    }
}

/// Some `g` with `g ∘ l = m`.
pub fn extend_along(l: &ChainMap, m: &ChainMap) -> Result<Option<ChainMap>> {
    let zero = zero_like(&m.target);
    let to_zero = ChainMap::zero(m.target.clone(), zero.clone());
    let bottom = ChainMap::zero(l.target.clone(), zero);
    Ok(ChainAdapter.find_lift(l, &to_zero, m, &bottom)?.lift())
}

/// Surjective in every degree above the bottom of the window; the bottom
/// degree plays the role of degree 0 for non-negatively graded complexes.
pub fn is_fibration(m: &ChainMap) -> bool {
    let t = &m.target;
    (t.lo() + 1..=t.hi()).all(|n| m.comp(n, 0).rank() == t.dim(n, 0))
}

/// Whether `H_n(m)` is an isomorphism.
pub fn homology_iso(m: &ChainMap, n: i64) -> bool {
    let (x, y) = (&m.source, &m.target);
    let zx = x.d(n, 0).kernel();
    let zy = y.d(n, 0).kernel();
    let by = y.d(n + 1, 0);
    let bx_rank = x.d(n + 1, 0).rank();
    let image = m.comp(n, 0).mul(&zx);
    let onto = image.hstack(&by).rank() == zy.cols();
    // Cycles of X that land in boundaries of Y must already be boundaries.
    let k = image.hstack(&by.neg()).kernel();
    let pulled = zx.mul(&k.submatrix(0..zx.cols(), 0..k.cols()));
    onto && pulled.rank() == bx_rank
}

/// A fibration that is a homology isomorphism below the top degree of the
/// window, the part of the window that cells can reach.
pub fn is_trivial_fibration(m: &ChainMap) -> bool {
    let t = &m.target;
    is_fibration(m) && (t.lo()..t.hi()).all(|n| homology_iso(m, n))
}

fn flat(m: &ChainMap) -> Vec<u32> {
    m.components.iter().flat_map(|row| row.iter().flat_map(|c| (0..c.rows()).flat_map(move |r| c.row(r).to_vec()))).collect()
}

fn rank_of(p: u32, rows: usize, columns: &[Vec<u32>]) -> usize {
    if columns.is_empty() || rows == 0 {
        return 0;
    }
    Matrix::from_columns(p, rows, columns).rank()
}

/// Whether `r: A -> B` has the left lifting property against `g: E -> F`.
///
/// Squares `(t: A -> E, b: B -> F)` with `g t = b r` form a vector space, and
/// the liftable ones are the image of `h ↦ (h r, g h)`, so the property holds
/// exactly when the two dimensions agree.
pub fn lifts_against(r: &ChainMap, g: &ChainMap) -> Result<bool> {
    let p = r.source.p();
    let ae = chain_hom_basis(&r.source, &g.source);
    let bf = chain_hom_basis(&r.target, &g.target);
    let be = chain_hom_basis(&r.target, &g.source);
    let mut relation: Vec<Vec<u32>> = Vec::new();
    for t in &ae {
        relation.push(flat(&g.after(t)?));
    }
    for b in &bf {
        relation.push(flat(&b.after(r)?.neg()));
    }
    let rows = r.source.degrees().map(|n| r.source.dim(n, 0) * g.target.dim(n, 0)).sum();
    let squares = ae.len() + bf.len() - rank_of(p, rows, &relation);
    let lifted: Vec<Vec<u32>> = be
        .iter()
        .map(|h| Ok([flat(&h.after(r)?), flat(&g.after(h)?)].concat()))
        .collect::<Result<_>>()?;
    let rows = r.source.degrees().map(|n| r.source.dim(n, 0) * g.source.dim(n, 0) + r.target.dim(n, 0) * g.target.dim(n, 0)).sum();
    Ok(rank_of(p, rows, &lifted) == squares)
}

pub(crate) fn lift(l: &ChainMap, p: &ChainMap, top: &ChainMap, bottom: &ChainMap) -> Result<LiftOutcome<ChainMap>> {
    ChainAdapter.find_lift(l, p, top, bottom)
}
