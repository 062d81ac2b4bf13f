//! Factorizations in the strict structure on pro-complexes.
//!
//! The base is bounded F_p complexes of vector spaces. A map `f` of
//! pro-complexes is replaced by a levelwise one, each level is factored in
//! the base, and the fibration parts are multiplied together into a single
//! map of constant pro-objects `S(f)`. The dual (cosmall) engine then pulls
//! `S(f)` back stage by stage.
//!
//! Lifting problems are decided at the deepest level of each index: a
//! finite directed poset has one, and a pro-object is isomorphic to the
//! constant object at that level.

mod complexes;
mod dual;

pub use complexes::{
    direct_sum, extend_along, homology_iso, is_fibration, is_trivial_fibration, lifts_against, projection, pullback, sum_of_maps,
    tuple, zero_like, Pullback,
};
pub use dual::{pro_factorize, Opposite, ProCertificate, ProDual, ProFactorSystem, ProFactorization};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::equichain::{factorize_equivariant, widen_to, ChainCertificate, ChainDiagram, ChainMap, GeneratorClass};
use crate::error::{Error, Result};
use crate::procalc::{
    compose_promaps, equivalent, levelwise_replace, BaseCategory, Complexes, Levelwise, ProMap, ProObject, Representative,
};
use crate::soa::{Budget, LiftOutcome};

pub type ProComplex = ProObject<Complexes>;
pub type ProChainMap = ProMap<Complexes>;

/// Stage budget for each base factorization inside `build_s`.
pub const LEVEL_BUDGET: usize = 8;

/// Which generating class the dual engine uses: `M`, the constant
/// fibrations, or `N`, the constant trivial fibrations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProClass {
    M,
    N,
}

impl ProClass {
    /// The base class whose factorization yields fibrations of this kind.
    pub fn base_class(self) -> GeneratorClass {
        match self {
            ProClass::M => GeneratorClass::J,
            ProClass::N => GeneratorClass::I,
        }
    }

    pub fn kind(self) -> FibrationKind {
        match self {
            ProClass::M => FibrationKind::Fibration,
            ProClass::N => FibrationKind::TrivialFibration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FibrationKind {
    Fibration,
    TrivialFibration,
}

/// A base complex viewed as a pro-object over the one-point index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantProObject {
    pub object: Arc<ChainDiagram>,
}

impl ConstantProObject {
    pub fn pro(&self) -> Arc<ProComplex> {
        Arc::new(ProObject::constant(&Complexes, self.object.clone()))
    }

    pub fn from_pro(x: &ProComplex) -> Option<Self> {
        (x.n_levels() == 1 && x.index.category.n_morphisms() == 1).then(|| ConstantProObject { object: x.levels[0].clone() })
    }
}

/// A base map tagged as a fibration or trivial fibration; the tag is checked
/// by rank computations on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingFibration {
    pub map: ChainMap,
    pub kind: FibrationKind,
}

impl GeneratingFibration {
    pub fn new(map: ChainMap, kind: FibrationKind) -> Result<Self> {
        let g = GeneratingFibration { map, kind };
        g.verify()?;
        Ok(g)
    }

    pub fn verify(&self) -> Result<()> {
        complexes::require_terminal(&self.map.source)?;
        let ok = match self.kind {
            FibrationKind::Fibration => is_fibration(&self.map),
            FibrationKind::TrivialFibration => is_trivial_fibration(&self.map),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("map is not a {:?}", self.kind)))
        }
    }

    pub fn pro(&self) -> ProChainMap {
        constant_map(&self.map)
    }
}

/// A base map as a map of constant pro-objects.
pub fn constant_map(m: &ChainMap) -> ProChainMap {
    ProMap {
        source: Arc::new(ProObject::constant(&Complexes, m.source.clone())),
        target: Arc::new(ProObject::constant(&Complexes, m.target.clone())),
        rep: Representative { theta: vec![0], maps: vec![m.clone()] },
    }
}

fn apex_of(x: &ProComplex) -> Result<usize> {
    x.index.apex().ok_or_else(|| Error::Precondition("index has no deepest level; run mardesic_reindex first".into()))
}

/// `f` at the deepest levels: `X_apex -> Y_apex`.
pub fn apex_map(f: &ProChainMap) -> Result<ChainMap> {
    let (ax, ay) = (apex_of(&f.source)?, apex_of(&f.target)?);
    let a = f.source.index.arrow(ax, f.rep.theta[ay]).expect("apex has an arrow everywhere");
    Complexes.compose(&f.rep.maps[ay], f.source.bond(a))
}

/// The pro-map `X -> Y` determined by a base map between the deepest levels.
pub fn from_apex_map(x: &Arc<ProComplex>, y: &Arc<ProComplex>, m: &ChainMap) -> Result<ProChainMap> {
    let (ax, ay) = (apex_of(x)?, apex_of(y)?);
    let maps = (0..y.n_levels())
        .map(|k| Complexes.compose(y.bond(y.index.arrow(ay, k).expect("apex")), m))
        .collect::<Result<_>>()?;
    ProMap::new(&Complexes, x.clone(), y.clone(), Representative { theta: vec![ax; y.n_levels()], maps })
}

/// Pads every level of both endpoints to one common window with a spare
/// degree at each end, where base factorizations have room for their cells.
pub fn widen_pro(f: &ProChainMap) -> Result<ProChainMap> {
    let all = f.source.levels.iter().chain(&f.target.levels);
    let lo = all.clone().map(|x| x.lo()).min().expect("levels") - 1;
    let hi = all.map(|x| x.hi()).max().expect("levels") + 1;
    let pad = |x: &ProComplex| -> Result<Arc<ProComplex>> {
        let bonding = x.bonding.iter().map(|b| widen_to(b, lo, hi)).collect::<Result<Vec<_>>>()?;
        let levels = x.levels.iter().map(|l| Ok(Arc::new(l.padded(lo, hi)?))).collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(ProObject::new(&Complexes, x.index.clone(), levels, bonding)?))
    };
    let (x, y) = (pad(&f.source)?, pad(&f.target)?);
    let maps = f.rep.maps.iter().map(|m| widen_to(m, lo, hi)).collect::<Result<Vec<_>>>()?;
    ProMap::new(&Complexes, x, y, Representative { theta: f.rep.theta.clone(), maps })
}

/// `f: X -> A` (constant `A`) read off at source level `level`: some
/// `g: X_level -> A` with `(level, g)` equivalent to `f`.
pub fn factor_at_level(f: &ProChainMap, level: usize) -> Result<Option<ChainMap>> {
    if f.target.n_levels() != 1 {
        return Err(Error::Precondition("target is not constant".into()));
    }
    let x = &f.source;
    let c = &x.index.category;
    let (theta, f0) = (f.rep.theta[0], &f.rep.maps[0]);
    for k in 0..c.n_objects() {
        for b in c.hom(k, theta) {
            let target = Complexes.compose(f0, x.bond(b))?;
            for a in c.hom(k, level) {
                if let Some(g) = extend_along(x.bond(a), &target)? {
                    return Ok(Some(g));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFactorization {
    pub level: usize,
    pub map: ChainMap,
}

/// The least source level through which a map to a constant pro-object
/// factors. Always succeeds: the level of any representative works.
pub fn factor_through_constant(f: &ProChainMap) -> Result<ConstantFactorization> {
    for level in 0..f.source.n_levels() {
        if let Some(map) = factor_at_level(f, level)? {
            let through = ProMap::new(&Complexes, f.source.clone(), f.target.clone(), Representative { theta: vec![level], maps: vec![map.clone()] })?;
            if !equivalent(&Complexes, &through, f)? {
                return Err(Error::Internal("factorization through a level does not recover the map".into()));
            }
            return Ok(ConstantFactorization { level, map });
        }
    }
    Err(Error::Internal("no level of the source admits the map".into()))
}

/// `S(f) = ⊕ p_g` over the levels of a levelwise replacement, with the square
/// `t_f = (top, bottom): f -> S(f)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SBuild {
    pub class: ProClass,
    pub levelwise: Levelwise<Complexes>,
    /// Level `g` of the replacement factored as `p_g ∘ q_g` (`gamma`, `delta`).
    pub factorizations: Vec<ChainCertificate>,
    pub s: ChainMap,
    /// `X -> ⊕ Z_g`.
    pub top: ProChainMap,
    /// `Y -> ⊕ Y'_g`.
    pub bottom: ProChainMap,
}

impl SBuild {
    pub fn q(&self, g: usize) -> &ChainMap {
        &self.factorizations[g].gamma
    }

    pub fn p(&self, g: usize) -> &ChainMap {
        &self.factorizations[g].delta
    }

    pub fn s_pro(&self) -> ProChainMap {
        constant_map(&self.s)
    }

    /// The level tags and the square `S(f) ∘ top = bottom ∘ f`.
    pub fn verify(&self, f: &ProChainMap) -> Result<()> {
        for g in 0..self.factorizations.len() {
            let (q, p) = (self.q(g), self.p(g));
            let ok = match self.class {
                ProClass::M => q.is_quasi_isomorphism() && is_fibration(p),
                ProClass::N => q.is_injective() && is_trivial_fibration(p),
            };
            if !ok {
                return Err(Error::Internal(format!("level {g} factorization has the wrong kind")));
            }
        }
        let left = compose_promaps(&Complexes, &self.s_pro(), &self.top)?;
        let right = compose_promaps(&Complexes, &self.bottom, f)?;
        if !equivalent(&Complexes, &left, &right)? {
            return Err(Error::NonCommutingSquare("t_f".into()));
        }
        Ok(())
    }
}

pub fn build_s(f: &ProChainMap, class: ProClass) -> Result<SBuild> {
    complexes::require_terminal(&f.source.levels[0])?;
    let lw = levelwise_replace(&Complexes, f)?;
    let (xn, yn) = (lw.map.source.clone(), lw.map.target.clone());
    let mut factorizations = Vec::with_capacity(xn.n_levels());
    for (g, level) in lw.map.rep.maps.iter().enumerate() {
        let cert = factorize_equivariant(level, class.base_class(), Budget::new(LEVEL_BUDGET))?;
        if !cert.stabilized {
            return Err(Error::BudgetExhausted(format!("base factorization of level {g} did not stabilize")));
        }
        factorizations.push(cert);
    }
    let g0 = apex_of(&xn)?;
    let arrow = |g: usize| xn.index.arrow(g0, g).expect("apex");
    let to_z = (0..xn.n_levels())
        .map(|g| factorizations[g].gamma.after(xn.bond(arrow(g))))
        .collect::<Result<Vec<_>>>()?;
    let to_y: Vec<ChainMap> = (0..yn.n_levels()).map(|g| yn.bond(arrow(g)).clone()).collect();
    let top_new = into_constant(&xn, g0, tuple(&xn.levels[g0], &to_z)?)?;
    let bottom_new = into_constant(&yn, g0, tuple(&yn.levels[g0], &to_y)?)?;
    let top = compose_promaps(&Complexes, &top_new, &lw.source_iso.to_new)?;
    let bottom = compose_promaps(&Complexes, &bottom_new, &lw.target_iso.to_new)?;
    let s = sum_of_maps(&factorizations.iter().map(|c| c.delta.clone()).collect::<Vec<_>>())?;
    let out = SBuild { class, levelwise: lw, factorizations, s, top, bottom };
    out.verify(f)?;
    Ok(out)
}

fn into_constant(x: &Arc<ProComplex>, level: usize, m: ChainMap) -> Result<ProChainMap> {
    let target = Arc::new(ProObject::constant(&Complexes, m.target.clone()));
    ProMap::new(&Complexes, x.clone(), target, Representative { theta: vec![level], maps: vec![m] })
}

/// How a square `f -> g` factors through `t_f`: at replacement level
/// `level`, the lift `Z_level -> E`, and the induced square `S(f) -> g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFactorization {
    pub level: usize,
    pub lift: ChainMap,
    /// `⊕ Z_g -> E`.
    pub top: ChainMap,
    /// `⊕ Y'_g -> B`.
    pub bottom: ChainMap,
}

/// Factors a square `(top: X -> E, bottom: Y -> B)` from `f` to a constant
/// generating fibration `g: E -> B` through `t_f`.
pub fn factor_through_s(
    build: &SBuild,
    f: &ProChainMap,
    g: &GeneratingFibration,
    top: &ProChainMap,
    bottom: &ProChainMap,
) -> Result<SquareFactorization> {
    let gp = g.pro();
    if !equivalent(&Complexes, &compose_promaps(&Complexes, &gp, top)?, &compose_promaps(&Complexes, bottom, f)?)? {
        return Err(Error::NonCommutingSquare("square into the generator".into()));
    }
    let lw = &build.levelwise;
    let top_new = compose_promaps(&Complexes, top, &lw.source_iso.to_old)?;
    let bottom_new = compose_promaps(&Complexes, bottom, &lw.target_iso.to_old)?;
    let zs: Vec<Arc<ChainDiagram>> = build.factorizations.iter().map(|c| c.z_final.clone()).collect();
    let ys: Vec<Arc<ChainDiagram>> = lw.map.target.levels.clone();
    for level in 0..lw.map.source.n_levels() {
        let (Some(t), Some(b)) = (factor_at_level(&top_new, level)?, factor_at_level(&bottom_new, level)?) else {
            continue;
        };
        if g.map.after(&t)? != b.after(&lw.map.rep.maps[level])? {
            continue;
        }
        let lift = match complexes::lift(build.q(level), &g.map, &t, &b.after(build.p(level))?)? {
            LiftOutcome::Lift(h) => h,
            LiftOutcome::NoLift(o) => {
                return Err(Error::Internal(format!("no lift at level {level} ({}); is the generator mis-tagged?", o.reason)))
            }
        };
        let top_s = lift.after(&projection(&zs, level)?)?;
        let bottom_s = b.after(&projection(&ys, level)?)?;
        let replay_top = compose_promaps(&Complexes, &constant_map(&top_s), &build.top)?;
        let replay_bottom = compose_promaps(&Complexes, &constant_map(&bottom_s), &build.bottom)?;
        if !equivalent(&Complexes, &replay_top, top)? || !equivalent(&Complexes, &replay_bottom, bottom)? {
            return Err(Error::Internal("factorization through S(f) does not replay the square".into()));
        }
        if g.map.after(&top_s)? != bottom_s.after(&build.s)? {
            return Err(Error::Internal("induced square S(f) -> g does not commute".into()));
        }
        return Ok(SquareFactorization { level, lift, top: top_s, bottom: bottom_s });
    }
    Err(Error::Internal("square does not factor through any level".into()))
}
