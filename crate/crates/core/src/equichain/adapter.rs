//! Chain complexes of diagrams as a cell adapter. All lifting and factoring
//! questions become linear systems over F_p and are decided exactly.

use std::sync::Arc;

use super::complex::{ChainDiagram, ChainMap};
use super::module::{add_naturality, ModuleDiagram};
use crate::error::{Error, Result};
use crate::linalg::{LinearSystem, Matrix, Term};
use crate::soa::{CellAdapter, LiftOutcome, Obstruction, Pushout};

#[derive(Clone, Copy, Debug, Default)]
pub struct ChainAdapter;

/// Unknown chain maps `source -> target` registered in a linear system, one
/// block per degree and object.
pub(crate) struct MapUnknown {
    pub blocks: Vec<Vec<usize>>,
    pub source: Arc<ChainDiagram>,
    pub target: Arc<ChainDiagram>,
}

impl MapUnknown {
    /// Registers the blocks together with naturality and chain-map equations.
    pub fn new(sys: &mut LinearSystem, source: &Arc<ChainDiagram>, target: &Arc<ChainDiagram>) -> Self {
        let p = source.p();
        let blocks: Vec<Vec<usize>> = source
            .degrees()
            .map(|n| (0..source.n_objects()).map(|o| sys.add_block(target.dim(n, o), source.dim(n, o))).collect())
            .collect();
        for n in source.degrees() {
            let k = (n - source.lo()) as usize;
            add_naturality(sys, &blocks[k], source.module(n).unwrap(), target.module(n).unwrap());
            if n > source.lo() {
                for o in 0..source.n_objects() {
                    let dt = target.d(n, o);
                    let ds = source.d(n, o);
                    let id_s = Matrix::identity(p, source.dim(n, o));
                    let neg = Matrix::identity(p, target.dim(n - 1, o)).neg();
                    let rhs = Matrix::zeros(p, target.dim(n - 1, o), source.dim(n, o));
                    sys.add_equation(
                        &[Term { left: &dt, block: blocks[k][o], right: &id_s }, Term { left: &neg, block: blocks[k - 1][o], right: &ds }],
                        &rhs,
                    );
                }
            }
        }
        MapUnknown { blocks, source: source.clone(), target: target.clone() }
    }

    pub fn read(&self, solution: &[Matrix]) -> ChainMap {
        let components = self.blocks.iter().map(|row| row.iter().map(|&b| solution[b].clone()).collect()).collect();
        ChainMap::unchecked(self.source.clone(), self.target.clone(), components)
    }
}

/// One summand `L ∘ X ∘ R` of a chain-map equation, where `L` and `R` are
/// known chain maps (or identities when `None`).
pub(crate) struct MapTerm<'a> {
    pub left: Option<&'a ChainMap>,
    pub unknown: &'a MapUnknown,
    pub right: Option<&'a ChainMap>,
    pub negate: bool,
}

/// Adds `sum of terms = rhs` degreewise and objectwise.
pub(crate) fn add_map_equation(sys: &mut LinearSystem, terms: &[MapTerm<'_>], rhs: &ChainMap) {
    let p = rhs.source.p();
    let lo = rhs.source.lo();
    for n in rhs.source.degrees() {
        let k = (n - lo) as usize;
        for o in 0..rhs.source.n_objects() {
            let mats: Vec<(Matrix, usize, Matrix)> = terms
                .iter()
                .map(|t| {
                    let u = t.unknown;
                    let mut l = match t.left {
                        Some(m) => m.comp(n, o).clone(),
                        None => Matrix::identity(p, u.target.dim(n, o)),
                    };
                    if t.negate {
                        l = l.neg();
                    }
                    let r = match t.right {
                        Some(m) => m.comp(n, o).clone(),
                        None => Matrix::identity(p, u.source.dim(n, o)),
                    };
                    (l, u.blocks[k][o], r)
                })
                .collect();
            let ts: Vec<Term<'_>> = mats.iter().map(|(l, b, r)| Term { left: l, block: *b, right: r }).collect();
            sys.add_equation(&ts, &rhs.components[k][o]);
        }
    }
}

impl ChainAdapter {
    /// Solves `j ∘ x = m` blockwise, which is exact when `j` is injective.
    fn factor_blockwise(j: &ChainMap, m: &ChainMap) -> Option<ChainMap> {
        let mut components = Vec::new();
        for (k, n) in m.source.degrees().enumerate() {
            let mut row = Vec::new();
            for o in 0..m.source.n_objects() {
                row.push(j.comp(n, o).solve(&m.components[k][o])?);
            }
            components.push(row);
        }
        let x = ChainMap::unchecked(m.source.clone(), j.source.clone(), components);
        x.check().ok().map(|_| x)
    }
}

impl CellAdapter for ChainAdapter {
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
    fn maps_equal(&self, a: &ChainMap, b: &ChainMap) -> bool {
        a == b
    }

    /// `(B ⊕ Z) / {(cell a, -attach a)}` degreewise and objectwise. Coordinates
    /// of `B` come first, so the reduced-echelon pivots fall on `B` whenever
    /// possible and `Z` survives as the trailing coordinates.
    fn pushout(&self, cell: &ChainMap, attach: &ChainMap) -> Result<Pushout<Arc<ChainDiagram>, ChainMap>> {
        if cell.source != attach.source {
            return Err(Error::EndpointMismatch("pushout legs have different sources".into()));
        }
        let (b, z) = (&cell.target, &attach.target);
        let p = b.p();
        let no = b.n_objects();
        let c = b.category().clone();
        let lo = b.lo();
        // Per degree and object: quotient map q (dim_P x (b+z)) and section s.
        let mut q: Vec<Vec<Matrix>> = Vec::new();
        let mut s: Vec<Vec<Matrix>> = Vec::new();
        for n in b.degrees() {
            let (mut qr, mut sr) = (Vec::new(), Vec::new());
            for o in 0..no {
                let (db, dz) = (b.dim(n, o), z.dim(n, o));
                let rel = cell.comp(n, o).vstack(&attach.comp(n, o).neg());
                let (rref, pivots) = rel.transpose().rref();
                let free: Vec<usize> = (0..db + dz).filter(|j| !pivots.contains(j)).collect();
                let mut qm = Matrix::zeros(p, free.len(), db + dz);
                let mut sm = Matrix::zeros(p, db + dz, free.len());
                for (i, &j) in free.iter().enumerate() {
                    qm.set(i, j, 1);
                    sm.set(j, i, 1);
                    // v ↦ v - sum_r v[pivot_r] row_r, restricted to free coordinates.
                    for (r, &pc) in pivots.iter().enumerate() {
                        let x = rref.get(r, j);
                        if x != 0 {
                            qm.set(i, pc, (p - x) % p);
                        }
                    }
                }
                qr.push(qm);
                sr.push(sm);
            }
            q.push(qr);
            s.push(sr);
        }
        let mut modules = Vec::new();
        for n in b.degrees() {
            let k = (n - lo) as usize;
            let dims = (0..no).map(|o| q[k][o].rows()).collect();
            let actions = (0..c.n_morphisms())
                .map(|m| {
                    let (src, tgt) = (c.source(m), c.target(m));
                    let amb = b.action(n, m).block_diag(&z.action(n, m));
                    q[k][tgt].mul(&amb).mul(&s[k][src])
                })
                .collect();
            modules.push(ModuleDiagram { category: c.clone(), p, dims, actions });
        }
        let differentials = (lo + 1..=b.hi())
            .map(|n| {
                let k = (n - lo) as usize;
                (0..no)
                    .map(|o| q[k - 1][o].mul(&b.d(n, o).block_diag(&z.d(n, o))).mul(&s[k][o]))
                    .collect()
            })
            .collect();
        let object = Arc::new(ChainDiagram::from_parts_unchecked(c, p, lo, modules, differentials));
        let leg = |first: bool| -> Vec<Vec<Matrix>> {
            b.degrees()
                .map(|n| {
                    let k = (n - lo) as usize;
                    (0..no)
                        .map(|o| {
                            let (db, dz) = (b.dim(n, o), z.dim(n, o));
                            if first {
                                q[k][o].submatrix(0..q[k][o].rows(), 0..db)
                            } else {
                                q[k][o].submatrix(0..q[k][o].rows(), db..db + dz)
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let from_cell = ChainMap::unchecked(b.clone(), object.clone(), leg(true));
        let from_base = ChainMap::unchecked(z.clone(), object.clone(), leg(false));
        Ok(Pushout { object, from_cell, from_base })
    }

    fn copair(&self, po: &Pushout<Arc<ChainDiagram>, ChainMap>, from_cell: &ChainMap, from_base: &ChainMap) -> Result<ChainMap> {
        if from_cell.target != from_base.target {
            return Err(Error::EndpointMismatch("copair legs have different targets".into()));
        }
        let w = &from_cell.target;
        let mut components = Vec::new();
        for n in po.object.degrees() {
            let mut row = Vec::new();
            for o in 0..w.n_objects() {
                // m * [legs] = [maps]  <=>  legs^T m^T = maps^T.
                let legs = po.from_cell.comp(n, o).hstack(po.from_base.comp(n, o));
                let maps = from_cell.comp(n, o).hstack(from_base.comp(n, o));
                let mt = legs
                    .transpose()
                    .solve(&maps.transpose())
                    .ok_or_else(|| Error::NonCommutingSquare(format!("copair legs disagree in degree {n}")))?;
                row.push(mt.transpose());
            }
            components.push(row);
        }
        Ok(ChainMap::unchecked(po.object.clone(), w.clone(), components))
    }

    fn find_lift(&self, l: &ChainMap, p: &ChainMap, top: &ChainMap, bottom: &ChainMap) -> Result<LiftOutcome<ChainMap>> {
        let mut sys = LinearSystem::new(l.source.p());
        let h = MapUnknown::new(&mut sys, &l.target, &p.source);
        add_map_equation(&mut sys, &[MapTerm { left: None, unknown: &h, right: Some(l), negate: false }], top);
        add_map_equation(&mut sys, &[MapTerm { left: Some(p), unknown: &h, right: None, negate: false }], bottom);
        Ok(match sys.solve() {
            Ok(sol) => LiftOutcome::Lift(h.read(&sol)),
            Err(cert) => LiftOutcome::NoLift(Obstruction {
                reason: "the linear system for a diagonal filler is inconsistent".into(),
                witness: cert,
            }),
        })
    }

    fn factor_through(&self, j: &ChainMap, m: &ChainMap) -> Result<Option<ChainMap>> {
        if j.target != m.target {
            return Err(Error::EndpointMismatch("factor_through: different targets".into()));
        }
        if j.is_injective() {
            return Ok(Self::factor_blockwise(j, m));
        }
        let mut sys = LinearSystem::new(m.source.p());
        let x = MapUnknown::new(&mut sys, &m.source, &j.source);
        add_map_equation(&mut sys, &[MapTerm { left: Some(j), unknown: &x, right: None, negate: false }], m);
        Ok(sys.solve().ok().map(|sol| x.read(&sol)))
    }

    fn add(&self, a: &ChainMap, b: &ChainMap) -> Option<ChainMap> {
        a.plus(b).ok()
    }
}

/// A basis of the space of chain maps `source -> target`.
pub fn chain_hom_basis(source: &Arc<ChainDiagram>, target: &Arc<ChainDiagram>) -> Vec<ChainMap> {
    let mut sys = LinearSystem::new(source.p());
    let x = MapUnknown::new(&mut sys, source, target);
    sys.kernel().iter().map(|sol| x.read(sol)).collect()
}
