//! The opposite of pro-complexes as a cell adapter. Pushouts become
//! pullbacks of pro-objects, and attaching cells along `S(f)` builds the
//! cocell (fibration) part of a factorization.
//!
//! Convention: `Opposite(m)` for a pro-map `m: P -> Q` is the arrow `Q -> P`.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::complexes::{self, extend_along, lifts_against, pullback, Pullback};
use super::{apex_map, build_s, from_apex_map, widen_pro, FibrationKind, GeneratingFibration, ProChainMap, ProClass, ProComplex};
use crate::equichain::{ChainAdapter, ChainDiagram, ChainMap, ModuleDiagram};
use crate::error::{Error, Result};
use crate::fincat::FiniteCategory;
use crate::linalg::Matrix;
use crate::procalc::{compose_promaps, equivalent, BaseCategory, CofilteringIndex, Complexes, ProMap, ProObject, Representative};
use crate::soa::{self, Budget, CellAdapter, FactorizationCertificate, LiftOutcome, Matched, MatchingSystem, Pushout, Split, Square};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Opposite(pub ProChainMap);

#[derive(Clone, Copy, Debug, Default)]
pub struct ProDual;

fn apex(x: &ProComplex) -> Result<usize> {
    x.index.apex().ok_or_else(|| Error::Precondition("pro-object without a deepest level".into()))
}

/// `f` read at one target level from the deepest source level.
fn at_apex_into(f: &ProChainMap, k: usize) -> Result<ChainMap> {
    let a = apex(&f.source)?;
    let arrow = f.source.index.arrow(a, f.rep.theta[k]).expect("apex");
    Complexes.compose(&f.rep.maps[k], f.source.bond(arrow))
}

impl CellAdapter for ProDual {
    type Obj = Arc<ProComplex>;
    type Map = Opposite;

    fn source(&self, m: &Opposite) -> Arc<ProComplex> {
        m.0.target.clone()
    }
    fn target(&self, m: &Opposite) -> Arc<ProComplex> {
        m.0.source.clone()
    }
    fn identity(&self, x: &Arc<ProComplex>) -> Opposite {
        Opposite(ProMap::identity(&Complexes, x.clone()))
    }
    fn compose(&self, g: &Opposite, f: &Opposite) -> Result<Opposite> {
        Ok(Opposite(compose_promaps(&Complexes, &f.0, &g.0)?))
    }
    fn maps_equal(&self, a: &Opposite, b: &Opposite) -> bool {
        equivalent(&Complexes, &a.0, &b.0).unwrap_or(false)
    }

    /// `B ×_A Z` for a constant cell `B -> A` and `Z -> A` represented at
    /// level `j`, indexed by the levels of `Z` below `j`.
    fn pushout(&self, cell: &Opposite, attach: &Opposite) -> Result<Pushout<Arc<ProComplex>, Opposite>> {
        let (c, a) = (&cell.0, &attach.0);
        if c.source.n_levels() != 1 || c.target.n_levels() != 1 || a.target.n_levels() != 1 {
            return Err(Error::Precondition("cells must be maps of constant pro-objects".into()));
        }
        if c.target != a.target {
            return Err(Error::EndpointMismatch("pullback legs have different targets".into()));
        }
        let z = &a.source;
        if !z.index.is_thin() {
            return Err(Error::Precondition("pullback needs a thin index".into()));
        }
        let (cell0, j, a0) = (&c.rep.maps[0], a.rep.theta[0], &a.rep.maps[0]);
        let kept: Vec<usize> = (0..z.n_levels()).filter(|&k| z.index.below(k, j)).collect();
        let pbs: Vec<Pullback> = kept
            .iter()
            .map(|&k| pullback(cell0, &a0.after(z.bond(z.index.arrow(k, j).expect("thin")))?))
            .collect::<Result<_>>()?;
        let names: Vec<&str> = kept.iter().map(|&k| z.index.category.objects()[k].as_str()).collect();
        let cat = Arc::new(FiniteCategory::from_preorder(&names, |s, t| z.index.below(kept[s], kept[t])));
        let index = CofilteringIndex::new(cat.clone())?;
        let bonding = cat
            .morphisms()
            .iter()
            .map(|m| {
                let (s, t) = (m.source, m.target);
                let down = z.bond(z.index.arrow(kept[s], kept[t]).expect("thin")).after(&pbs[s].to_base)?;
                pbs[t].pair(&pbs[s].to_cell, &down)
            })
            .collect::<Result<Vec<_>>>()?;
        let object = Arc::new(ProObject::new(&Complexes, index, pbs.iter().map(|p| p.object.clone()).collect(), bonding)?);
        let jpos = kept.iter().position(|&k| k == j).expect("j is below itself");
        let from_cell = ProMap::new(
            &Complexes,
            object.clone(),
            c.source.clone(),
            Representative { theta: vec![jpos], maps: vec![pbs[jpos].to_cell.clone()] },
        )?;
        // Each level of Z is reached from itself when kept, else from the first kept level below it.
        let (mut theta, mut maps) = (Vec::new(), Vec::new());
        for k in 0..z.n_levels() {
            let pos = kept.iter().position(|&q| q == k).or_else(|| kept.iter().position(|&q| z.index.below(q, k)));
            let pos = pos.ok_or_else(|| Error::Internal("cofiltering index without a common lower bound".into()))?;
            theta.push(pos);
            maps.push(z.bond(z.index.arrow(kept[pos], k).expect("thin")).after(&pbs[pos].to_base)?);
        }
        let from_base = ProMap::new(&Complexes, object.clone(), z.clone(), Representative { theta, maps })?;
        Ok(Pushout { object, from_cell: Opposite(from_cell), from_base: Opposite(from_base) })
    }

    fn copair(&self, po: &Pushout<Arc<ProComplex>, Opposite>, from_cell: &Opposite, from_base: &Opposite) -> Result<Opposite> {
        let (u, v) = (&from_cell.0, &from_base.0);
        if u.source != v.source {
            return Err(Error::EndpointMismatch("copair legs have different sources".into()));
        }
        let (pobj, pc, pb) = (&po.object, &po.from_cell.0, &po.from_base.0);
        let w = &u.source;
        let w0 = apex(w)?;
        let u0 = at_apex_into(u, 0)?;
        let jpos = pc.rep.theta[0];
        let mut maps = Vec::with_capacity(pobj.n_levels());
        for idx in 0..pobj.n_levels() {
            let name = &pobj.index.category.objects()[idx];
            let k = pb.target.index.category.object_index(name).expect("pullback levels are named after Z");
            if pb.rep.theta[k] != idx {
                return Err(Error::Internal("pullback projection is not read at its own level".into()));
            }
            let to_cell = pc.rep.maps[0].after(pobj.bond(pobj.index.arrow(idx, jpos).expect("below j")))?;
            let to_base = &pb.rep.maps[k];
            let vk = at_apex_into(v, k)?;
            let target = &pobj.levels[idx];
            let components = target
                .degrees()
                .map(|n| {
                    let legs = to_cell.comp(n, 0).vstack(to_base.comp(n, 0));
                    let rhs = u0.comp(n, 0).vstack(vk.comp(n, 0));
                    legs.solve(&rhs)
                        .map(|m| vec![m])
                        .ok_or_else(|| Error::NonCommutingSquare(format!("copair legs disagree in degree {n}")))
                })
                .collect::<Result<Vec<_>>>()?;
            maps.push(ChainMap::new(w.levels[w0].clone(), target.clone(), components)?);
        }
        let rep = Representative { theta: vec![w0; pobj.n_levels()], maps };
        Ok(Opposite(ProMap::new(&Complexes, w.clone(), pobj.clone(), rep)?))
    }

    /// Decided at the deepest levels, where the pro-objects are constant.
    fn find_lift(&self, l: &Opposite, p: &Opposite, top: &Opposite, bottom: &Opposite) -> Result<LiftOutcome<Opposite>> {
        let (lc, pc) = (apex_map(&l.0)?, apex_map(&p.0)?);
        let (tc, bc) = (apex_map(&top.0)?, apex_map(&bottom.0)?);
        Ok(match ChainAdapter.find_lift(&pc, &lc, &bc, &tc)? {
            LiftOutcome::Lift(h) => LiftOutcome::Lift(Opposite(from_apex_map(&p.0.target, &l.0.source, &h)?)),
            LiftOutcome::NoLift(o) => LiftOutcome::NoLift(o),
        })
    }

    fn factor_through(&self, j: &Opposite, m: &Opposite) -> Result<Option<Opposite>> {
        if j.0.source != m.0.source {
            return Err(Error::EndpointMismatch("factor_through: different targets".into()));
        }
        let Some(x) = extend_along(&apex_map(&j.0)?, &apex_map(&m.0)?)? else { return Ok(None) };
        Ok(Some(Opposite(from_apex_map(&j.0.target, &m.0.target, &x)?)))
    }

    fn is_dual(&self) -> bool {
        true
    }
}

/// Cells `S(rho)` from the levelwise factorizations of `rho`, and a probe
/// against a fixed finite set of constant fibrations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProFactorSystem {
    pub class: ProClass,
    pub generators: Vec<GeneratingFibration>,
}

fn disk_to_sphere(x: &ChainDiagram, n: i64) -> Result<ChainMap> {
    let point = ModuleDiagram::constant(x.category().clone(), x.p(), 1);
    let disk = Arc::new(ChainDiagram::disk(&point, n, x.lo(), x.hi()));
    let sphere = Arc::new(ChainDiagram::sphere(&point, n, x.lo(), x.hi()));
    let components = disk
        .degrees()
        .map(|k| vec![if k == n { Matrix::identity(x.p(), 1) } else { Matrix::zeros(x.p(), sphere.dim(k, 0), disk.dim(k, 0)) }])
        .collect();
    ChainMap::new(disk, sphere, components)
}

fn disk_to_zero(x: &ChainDiagram, n: i64) -> Result<ChainMap> {
    let point = ModuleDiagram::constant(x.category().clone(), x.p(), 1);
    let disk = Arc::new(ChainDiagram::disk(&point, n, x.lo(), x.hi()));
    Ok(ChainMap::zero(disk, complexes::zero_like(x)))
}

impl ProFactorSystem {
    /// Disks and spheres over the window of `f`, plus the `p_g` of `S(f)`.
    pub fn for_map(f: &ProChainMap, class: ProClass) -> Result<Self> {
        let x = &f.source.levels[0];
        let mut generators = Vec::new();
        for n in x.lo() + 1..=x.hi() {
            generators.push(GeneratingFibration::new(disk_to_zero(x, n)?, FibrationKind::TrivialFibration)?);
            if class == ProClass::M {
                generators.push(GeneratingFibration::new(disk_to_sphere(x, n)?, FibrationKind::Fibration)?);
            }
        }
        let build = build_s(f, class)?;
        for g in 0..build.factorizations.len() {
            let p = build.p(g).clone();
            if !generators.iter().any(|q| q.map == p) {
                generators.push(GeneratingFibration::new(p, class.kind())?);
            }
        }
        Ok(ProFactorSystem { class, generators })
    }
}

impl MatchingSystem<ProDual> for ProFactorSystem {
    fn is_functorial(&self) -> bool {
        false
    }

    fn matched(&self, _adapter: &ProDual, rho: &Opposite) -> Result<Matched<Opposite>> {
        let build = build_s(&rho.0, self.class)?;
        Ok(Matched {
            cells: Opposite(build.s_pro()),
            top: Opposite(build.bottom.clone()),
            bottom: Opposite(build.top.clone()),
            count: build.factorizations.len(),
        })
    }

    fn probe(&self, _adapter: &ProDual, rho: &Opposite) -> Result<bool> {
        let r = apex_map(&rho.0)?;
        for g in &self.generators {
            if !lifts_against(&r, &g.map)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn split_square(&self, _: &ProDual, _: &Opposite, _: &Matched<Opposite>, _: &Square<Opposite>) -> Result<Option<Split<Opposite>>> {
        Ok(None)
    }
}

pub type ProCertificate = FactorizationCertificate<ProDual>;

/// `f = fibration_part ∘ other_part`. For `M` the other part is a trivial
/// cofibration; for `N` it is a cofibration and the fibration part is trivial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProFactorization {
    pub class: ProClass,
    /// `f` padded to its working window.
    pub map: ProChainMap,
    pub certificate: ProCertificate,
    pub generators: Vec<GeneratingFibration>,
}

impl ProFactorization {
    /// `Z -> Y`.
    pub fn fibration_part(&self) -> &ProChainMap {
        &self.certificate.gamma.0
    }

    /// `X -> Z`.
    pub fn other_part(&self) -> &ProChainMap {
        &self.certificate.delta.0
    }

    pub fn stages(&self) -> usize {
        self.certificate.stages_used
    }

    pub fn stabilized(&self) -> bool {
        self.certificate.stabilized
    }

    pub fn composite(&self) -> Result<ProChainMap> {
        compose_promaps(&Complexes, self.fibration_part(), self.other_part())
    }

    /// Replays the stages, checks `composite ≡ f`, the kind of the fibration
    /// part and, once stabilized, the probe on the other part.
    pub fn verify(&self) -> Result<()> {
        soa::replay(&ProDual, &self.certificate)?;
        if !equivalent(&Complexes, &self.composite()?, &self.map)? {
            return Err(Error::Internal("factors do not compose to the map".into()));
        }
        let fib = apex_map(self.fibration_part())?;
        let ok = match self.class.kind() {
            FibrationKind::Fibration => complexes::is_fibration(&fib),
            FibrationKind::TrivialFibration => complexes::is_trivial_fibration(&fib),
        };
        if !ok {
            return Err(Error::Internal(format!("fibration part is not a {:?}", self.class.kind())));
        }
        if self.stabilized() {
            let system = ProFactorSystem { class: self.class, generators: self.generators.clone() };
            if !system.probe(&ProDual, &self.certificate.delta)? {
                return Err(Error::Internal("stabilized factorization fails its probe".into()));
            }
        }
        Ok(())
    }
}

/// Factors a map of pro-complexes over the terminal category. Both indices
/// need a deepest level (towers do); the map is padded to a common window.
pub fn pro_factorize(f: &ProChainMap, class: ProClass, budget: Budget) -> Result<ProFactorization> {
    let widened = widen_pro(f)?;
    let system = ProFactorSystem::for_map(&widened, class)?;
    let certificate = soa::soa_factorize(&ProDual, &Opposite(widened.clone()), &system, budget)?;
    Ok(ProFactorization { class, map: widened, certificate, generators: system.generators })
}

