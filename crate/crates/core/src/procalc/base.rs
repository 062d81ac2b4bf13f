//! Base categories a pro-object can live over. Everything the pro calculus
//! does reduces to composing base maps, comparing them, and (for the Hom
//! formula) enumerating finite hom-sets.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::Debug;
use std::sync::Arc;

use crate::equichain::{chain_hom_basis, ChainDiagram, ChainMap};
use crate::error::{Error, Result};
use crate::linalg::{space_size, vector_from_index, Matrix};
use crate::soa::finset::FinMap;

/// Largest hom-set `hom` will enumerate.
pub const HOM_LIMIT: usize = 1 << 16;

pub trait BaseCategory: Clone + Debug + PartialEq {
    type Obj: Clone + Debug + PartialEq + Serialize + DeserializeOwned;
    type Map: Clone + Debug + PartialEq + Serialize + DeserializeOwned;

    fn source(&self, m: &Self::Map) -> Self::Obj;
    fn target(&self, m: &Self::Map) -> Self::Obj;
    fn identity(&self, x: &Self::Obj) -> Self::Map;
    /// `g ∘ f`.
    fn compose(&self, g: &Self::Map, f: &Self::Map) -> Result<Self::Map>;
    /// Every map `a -> b`, in a fixed order.
    fn hom(&self, a: &Self::Obj, b: &Self::Obj) -> Result<Vec<Self::Map>>;

    /// For an idempotent `e: X -> X`, its image `I` with `r: X -> I` and
    /// `s: I -> X` such that `r s = id` and `s r = e`.
    fn split_idempotent(&self, _e: &Self::Map) -> Result<Option<SplitIdempotent<Self>>> {
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitIdempotent<B: BaseCategory> {
    pub image: B::Obj,
    pub retraction: B::Map,
    pub section: B::Map,
}

/// Finite sets `{0..n}` and functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FinSets;

impl BaseCategory for FinSets {
    type Obj = usize;
    type Map = FinMap;

    fn source(&self, m: &FinMap) -> usize {
        m.source
    }
    fn target(&self, m: &FinMap) -> usize {
        m.target
    }
    fn identity(&self, x: &usize) -> FinMap {
        FinMap::identity(*x)
    }
    fn compose(&self, g: &FinMap, f: &FinMap) -> Result<FinMap> {
        if f.target != g.source {
            return Err(Error::EndpointMismatch(format!("compose {} -> {} after {} -> {}", g.source, g.target, f.source, f.target)));
        }
        Ok(FinMap { source: f.source, target: g.target, values: f.values.iter().map(|&x| g.values[x]).collect() })
    }
    fn hom(&self, a: &usize, b: &usize) -> Result<Vec<FinMap>> {
        let count = (*b as u128).checked_pow(*a as u32).unwrap_or(u128::MAX);
        if count > HOM_LIMIT as u128 {
            return Err(Error::HomNotFinite(format!("{b}^{a} functions")));
        }
        Ok(FinMap::all(*a, *b))
    }

    /// The image of an idempotent is its set of fixed points.
    fn split_idempotent(&self, e: &FinMap) -> Result<Option<SplitIdempotent<Self>>> {
        if self.compose(e, e)? != *e {
            return Ok(None);
        }
        let fixed: Vec<usize> = (0..e.source).filter(|&x| e.values[x] == x).collect();
        let retraction = FinMap::new(e.source, fixed.len(), e.values.iter().map(|v| fixed.binary_search(v).expect("image is fixed")).collect());
        let section = FinMap::new(fixed.len(), e.source, fixed.clone());
        Ok(Some(SplitIdempotent { image: fixed.len(), retraction, section }))
    }
}

/// Bounded F_p chain complexes (diagrams over any fixed finite category, in
/// practice the terminal one) and chain maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Complexes;

impl BaseCategory for Complexes {
    type Obj = Arc<ChainDiagram>;
    type Map = ChainMap;

    fn source(&self, m: &ChainMap) -> Arc<ChainDiagram> {
        m.source.clone()
    }
    fn target(&self, m: &ChainMap) -> Arc<ChainDiagram> {
        m.target.clone()
    }
    fn identity(&self, x: &Arc<ChainDiagram>) -> ChainMap {
        ChainMap::identity(x.clone())
    }
    fn compose(&self, g: &ChainMap, f: &ChainMap) -> Result<ChainMap> {
        g.after(f)
    }
    /// All `F_p`-combinations of a basis of chain maps.
    fn hom(&self, a: &Arc<ChainDiagram>, b: &Arc<ChainDiagram>) -> Result<Vec<ChainMap>> {
        let basis = chain_hom_basis(a, b);
        let p = a.p();
        let count = space_size(p, basis.len())
            .filter(|&c| c <= HOM_LIMIT)
            .ok_or_else(|| Error::HomNotFinite(format!("{p}^{} chain maps", basis.len())))?;
        let mut out = Vec::with_capacity(count);
        for idx in 0..count {
            let coeffs = vector_from_index(p, basis.len(), idx);
            let mut m = ChainMap::zero(a.clone(), b.clone());
            for (c, bm) in coeffs.iter().zip(&basis) {
                for _ in 0..*c {
                    m = m.plus(bm)?;
                }
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Degreewise column space of the idempotent, spanned by its pivot columns.
    /// Complexes of vector spaces only.
    fn split_idempotent(&self, e: &ChainMap) -> Result<Option<SplitIdempotent<Self>>> {
        let x = &e.source;
        if x.n_objects() != 1 || e.after(e)? != *e {
            return Ok(None);
        }
        let p = x.p();
        let sections: Vec<Matrix> = x
            .degrees()
            .map(|n| {
                let m = e.comp(n, 0);
                let (_, pivots) = m.rref();
                let cols: Vec<Vec<u32>> = pivots.iter().map(|&j| m.col(j)).collect();
                Matrix::from_columns(p, m.rows(), &cols)
            })
            .collect();
        let lo = x.lo();
        let retractions: Vec<Matrix> = x
            .degrees()
            .map(|n| sections[(n - lo) as usize].solve(e.comp(n, 0)).expect("e lands in its image"))
            .collect();
        let dims: Vec<usize> = sections.iter().map(|s| s.cols()).collect();
        let differentials: Vec<Matrix> = (lo + 1..=x.hi())
            .map(|n| retractions[(n - 1 - lo) as usize].mul(&x.d(n, 0)).mul(&sections[(n - lo) as usize]))
            .collect();
        let image = Arc::new(ChainDiagram::constant(x.category().clone(), p, lo, &dims, &differentials)?);
        let section = ChainMap::new(image.clone(), x.clone(), sections.into_iter().map(|m| vec![m]).collect())?;
        let retraction = ChainMap::new(x.clone(), image.clone(), retractions.into_iter().map(|m| vec![m]).collect())?;
        Ok(Some(SplitIdempotent { image, retraction, section }))
    }
}
