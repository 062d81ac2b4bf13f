//! The cell-attachment engine.
//!
//! Starting from `f: X -> Y`, the engine sets `Z_0 = X`, `rho_0 = f` and at
//! every stage pushes the matched cells `S(rho_b)` out along their attaching
//! map, producing `Z_{b+1}` and `rho_{b+1}`. The record of all stages is a
//! [`FactorizationCertificate`] that can be replayed and queried for lifts.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;

use crate::error::{Error, Result};

pub mod finset;

/// The categorical operations the engine needs from an ambient category.
///
/// A dual adapter answers `pushout` with a pullback in the underlying category
/// and reports `is_dual() == true`; the engine itself is oblivious.
pub trait CellAdapter {
    type Obj: Clone + Debug + PartialEq + Serialize + DeserializeOwned;
    type Map: Clone + Debug + Serialize + DeserializeOwned;

    fn source(&self, m: &Self::Map) -> Self::Obj;
    fn target(&self, m: &Self::Map) -> Self::Obj;
    fn identity(&self, x: &Self::Obj) -> Self::Map;
    /// `g ∘ f`.
    fn compose(&self, g: &Self::Map, f: &Self::Map) -> Result<Self::Map>;
    fn maps_equal(&self, a: &Self::Map, b: &Self::Map) -> bool;

    /// Pushout of `cell: A -> B` along `attach: A -> Z`.
    fn pushout(&self, cell: &Self::Map, attach: &Self::Map) -> Result<Pushout<Self::Obj, Self::Map>>;

    /// The map out of a pushout determined by maps out of `B` and `Z`.
    fn copair(
        &self,
        po: &Pushout<Self::Obj, Self::Map>,
        from_cell: &Self::Map,
        from_base: &Self::Map,
    ) -> Result<Self::Map>;

    /// Searches for `h` with `h ∘ l = top` and `p ∘ h = bottom`.
    fn find_lift(
        &self,
        l: &Self::Map,
        p: &Self::Map,
        top: &Self::Map,
        bottom: &Self::Map,
    ) -> Result<LiftOutcome<Self::Map>>;

    /// Some `x` with `j ∘ x = m`, if one exists.
    fn factor_through(&self, j: &Self::Map, m: &Self::Map) -> Result<Option<Self::Map>>;

    /// Sum of parallel maps in additive categories.
    fn add(&self, _a: &Self::Map, _b: &Self::Map) -> Option<Self::Map> {
        None
    }

    fn is_dual(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pushout<O, M> {
    pub object: O,
    /// `B -> P`.
    pub from_cell: M,
    /// `Z -> P`.
    pub from_base: M,
}

/// Why a lifting problem has no solution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstruction {
    pub reason: String,
    /// Adapter-specific evidence, e.g. a dual vector certifying infeasibility.
    pub witness: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LiftOutcome<M> {
    Lift(M),
    NoLift(Obstruction),
}

impl<M> LiftOutcome<M> {
    pub fn lift(self) -> Option<M> {
        match self {
            LiftOutcome::Lift(m) => Some(m),
            LiftOutcome::NoLift(_) => None,
        }
    }

    pub fn is_lift(&self) -> bool {
        matches!(self, LiftOutcome::Lift(_))
    }
}

/// A commutative square from a generator `l` into some map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square<M> {
    pub generator: M,
    pub top: M,
    pub bottom: M,
}

/// The output of a matching system on one map: the cells `S(f): A -> B` and
/// the square `t_f` from `S(f)` to `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matched<M> {
    pub cells: M,
    pub top: M,
    pub bottom: M,
    pub count: usize,
}

/// How a generator square into `rho` is absorbed by the next stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Split<M> {
    /// The square already lifts against `rho`.
    Direct(M),
    /// The square factors through `t` via a map of arrows `(a, b)` into the cells.
    Through { a: M, b: M },
    /// Sum of a liftable square and one that factors through `t`.
    Mixed { direct: M, a: M, b: M },
}

/// Supplies the cells attached at each stage.
pub trait MatchingSystem<A: CellAdapter> {
    /// Whether `matched` is a functor with `t` natural.
    fn is_functorial(&self) -> bool;

    fn matched(&self, adapter: &A, f: &A::Map) -> Result<Matched<A::Map>>;

    /// True when `f` lifts against every generator square the system tracks.
    fn probe(&self, adapter: &A, f: &A::Map) -> Result<bool>;

    /// Decomposes a generator square into `f` relative to `matched(f)`.
    fn split_square(
        &self,
        adapter: &A,
        f: &A::Map,
        matched: &Matched<A::Map>,
        square: &Square<A::Map>,
    ) -> Result<Option<Split<A::Map>>>;

    /// `S(g)` for a morphism of maps `g = (g_top, g_bottom): f1 -> f2`.
    #[allow(clippy::too_many_arguments)]
    fn induced(
        &self,
        _adapter: &A,
        _f1: &A::Map,
        _m1: &Matched<A::Map>,
        _f2: &A::Map,
        _m2: &Matched<A::Map>,
        _g_top: &A::Map,
        _g_bottom: &A::Map,
    ) -> Result<(A::Map, A::Map)> {
        Err(Error::NonFunctorial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    /// Probe before every stage and stop as soon as the probe passes.
    EveryStage,
    /// Run exactly `stage_limit` stages and probe once at the end. Used when
    /// factorizations of different maps must have matching stage counts.
    FinalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub stage_limit: usize,
    pub probes: ProbeMode,
}

impl Budget {
    pub fn new(stage_limit: usize) -> Self {
        Budget { stage_limit, probes: ProbeMode::EveryStage }
    }

    pub fn fixed(stage_limit: usize) -> Self {
        Budget { stage_limit, probes: ProbeMode::FinalOnly }
    }
}

/// One pushout step `Z_b -> Z_{b+1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Stage<A: CellAdapter> {
    pub z: A::Obj,
    pub rho: A::Map,
    pub matched: Matched<A::Map>,
    /// `B -> Z_{b+1}`, the cell corner of the pushout.
    pub cell_corner: A::Map,
    /// `Z_b -> Z_{b+1}`.
    pub inclusion: A::Map,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct FactorizationCertificate<A: CellAdapter> {
    pub map: A::Map,
    pub stages: Vec<Stage<A>>,
    pub z_final: A::Obj,
    pub gamma: A::Map,
    pub delta: A::Map,
    pub stabilized: bool,
    pub stages_used: usize,
}

impl<A: CellAdapter> FactorizationCertificate<A> {
    /// `rho_b`, with `rho_used = delta`.
    pub fn rho(&self, stage: usize) -> &A::Map {
        if stage < self.stages.len() {
            &self.stages[stage].rho
        } else {
            &self.delta
        }
    }

    /// `Z_b`, with `Z_used = z_final`.
    pub fn z(&self, stage: usize) -> &A::Obj {
        if stage < self.stages.len() {
            &self.stages[stage].z
        } else {
            &self.z_final
        }
    }

    /// The composite inclusion `k_b: Z_b -> Z_final`.
    pub fn to_final(&self, adapter: &A, stage: usize) -> Result<A::Map> {
        let mut k = adapter.identity(&self.z_final);
        for s in self.stages[stage..].iter().rev() {
            k = adapter.compose(&k, &s.inclusion)?;
        }
        Ok(k)
    }
}

/// Runs the stage construction on `f` until the probe passes or the budget
/// is spent. Exhaustion is not an error: the certificate says `stabilized = false`.
pub fn soa_factorize<A, S>(adapter: &A, f: &A::Map, system: &S, budget: Budget) -> Result<FactorizationCertificate<A>>
where
    A: CellAdapter,
    S: MatchingSystem<A> + ?Sized,
{
    let mut z = adapter.source(f);
    let mut rho = f.clone();
    let mut gamma = adapter.identity(&z);
    let mut stages: Vec<Stage<A>> = Vec::new();
    let mut stabilized = false;
    loop {
        if budget.probes == ProbeMode::EveryStage && system.probe(adapter, &rho)? {
            stabilized = true;
            break;
        }
        if stages.len() >= budget.stage_limit {
            break;
        }
        let matched = system.matched(adapter, &rho)?;
        if budget.probes == ProbeMode::EveryStage && matched.count == 0 {
            // Nothing left to attach but the probe still fails: further stages are identical.
            break;
        }
        let po = adapter.pushout(&matched.cells, &matched.top)?;
        let next_rho = adapter.copair(&po, &matched.bottom, &rho)?;
        gamma = adapter.compose(&po.from_base, &gamma)?;
        stages.push(Stage {
            z: z.clone(),
            rho: rho.clone(),
            matched,
            cell_corner: po.from_cell,
            inclusion: po.from_base,
        });
        z = po.object;
        rho = next_rho;
    }
    if budget.probes == ProbeMode::FinalOnly {
        stabilized = system.probe(adapter, &rho)?;
    }
    let stages_used = stages.len();
    Ok(FactorizationCertificate { map: f.clone(), stages, z_final: z, gamma, delta: rho, stabilized, stages_used })
}

/// Recomputes every pushout from the recorded attaching data and checks that
/// the certificate's objects and maps are reproduced exactly, that
/// `delta ∘ gamma = f`, and that every stage square commutes.
pub fn replay<A: CellAdapter>(adapter: &A, cert: &FactorizationCertificate<A>) -> Result<()> {
    let fail = |what: String| Err(Error::Internal(format!("replay: {what}")));
    let mut z = adapter.source(&cert.map);
    let mut rho = cert.map.clone();
    let mut gamma = adapter.identity(&z);
    if cert.stages_used != cert.stages.len() {
        return fail("stage count disagrees with stage list".into());
    }
    for (b, s) in cert.stages.iter().enumerate() {
        if s.z != z || !adapter.maps_equal(&s.rho, &rho) {
            return fail(format!("stage {b} does not start where the previous one ended"));
        }
        let m = &s.matched;
        let t_cod = adapter.compose(&rho, &m.top)?;
        let t_dom = adapter.compose(&m.bottom, &m.cells)?;
        if !adapter.maps_equal(&t_cod, &t_dom) {
            return fail(format!("attaching square at stage {b} does not commute"));
        }
        let po = adapter.pushout(&m.cells, &m.top)?;
        if !adapter.maps_equal(&po.from_cell, &s.cell_corner) || !adapter.maps_equal(&po.from_base, &s.inclusion) {
            return fail(format!("pushout at stage {b} differs from the record"));
        }
        rho = adapter.copair(&po, &m.bottom, &rho)?;
        gamma = adapter.compose(&po.from_base, &gamma)?;
        z = po.object;
    }
    if z != cert.z_final {
        return fail("final object differs".into());
    }
    if !adapter.maps_equal(&rho, &cert.delta) || !adapter.maps_equal(&gamma, &cert.gamma) {
        return fail("gamma or delta differs".into());
    }
    let composite = adapter.compose(&cert.delta, &cert.gamma)?;
    if !adapter.maps_equal(&composite, &cert.map) {
        return fail("delta ∘ gamma differs from the input map".into());
    }
    Ok(())
}

/// Checks `p ∘ top = bottom ∘ l`, in whichever variance the adapter uses.
pub fn check_square<A: CellAdapter>(adapter: &A, l: &A::Map, p: &A::Map, top: &A::Map, bottom: &A::Map) -> Result<()> {
    let a = adapter.compose(p, top)?;
    let b = adapter.compose(bottom, l)?;
    if adapter.maps_equal(&a, &b) {
        Ok(())
    } else {
        Err(Error::NonCommutingSquare("p ∘ top differs from bottom ∘ l".into()))
    }
}

/// Solves each lifting problem against `p`, returning a lift or an obstruction.
pub fn verify_rlp<A: CellAdapter>(adapter: &A, p: &A::Map, squares: &[Square<A::Map>]) -> Result<Vec<LiftOutcome<A::Map>>> {
    squares
        .iter()
        .map(|s| {
            check_square(adapter, &s.generator, p, &s.top, &s.bottom)?;
            let out = adapter.find_lift(&s.generator, p, &s.top, &s.bottom)?;
            if let LiftOutcome::Lift(h) = &out {
                check_lift(adapter, &s.generator, p, &s.top, &s.bottom, h)?;
            }
            Ok(out)
        })
        .collect()
}

/// Both triangles of a lift, checked exactly.
pub fn check_lift<A: CellAdapter>(
    adapter: &A,
    l: &A::Map,
    p: &A::Map,
    top: &A::Map,
    bottom: &A::Map,
    h: &A::Map,
) -> Result<()> {
    let upper = adapter.compose(h, l)?;
    let lower = adapter.compose(p, h)?;
    if adapter.maps_equal(&upper, top) && adapter.maps_equal(&lower, bottom) {
        Ok(())
    } else {
        Err(Error::Internal("lift does not make both triangles commute".into()))
    }
}

/// The kind of lift produced by [`lift_through_factorization`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftKind {
    Direct,
    ThroughCells,
    Mixed,
    Final,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageLift<M> {
    pub stage: usize,
    pub kind: LiftKind,
    pub lift: M,
}

/// Solves a generator square against `delta` the way the construction
/// predicts: find the least stage whose image contains the top map, then use
/// the cells attached at that stage.
pub fn lift_through_factorization<A, S>(
    adapter: &A,
    cert: &FactorizationCertificate<A>,
    system: &S,
    square: &Square<A::Map>,
) -> Result<StageLift<A::Map>>
where
    A: CellAdapter,
    S: MatchingSystem<A> + ?Sized,
{
    if !cert.stabilized {
        return Err(Error::Precondition("certificate has not stabilized".into()));
    }
    let l = &square.generator;
    check_square(adapter, l, &cert.delta, &square.top, &square.bottom)?;
    let n = cert.stages_used;
    for b in 0..=n {
        let k = cert.to_final(adapter, b)?;
        let Some(top_b) = adapter.factor_through(&k, &square.top)? else {
            continue;
        };
        if b == n {
            if let LiftOutcome::Lift(h) = adapter.find_lift(l, &cert.delta, &top_b, &square.bottom)? {
                return Ok(StageLift { stage: b, kind: LiftKind::Final, lift: h });
            }
            break;
        }
        let stage = &cert.stages[b];
        let local = Square { generator: l.clone(), top: top_b, bottom: square.bottom.clone() };
        let Some(split) = system.split_square(adapter, &stage.rho, &stage.matched, &local)? else {
            continue;
        };
        let k_next = cert.to_final(adapter, b + 1)?;
        let through = |b_map: &A::Map| -> Result<A::Map> {
            let into_next = adapter.compose(&stage.cell_corner, b_map)?;
            adapter.compose(&k_next, &into_next)
        };
        let (kind, lift) = match split {
            Split::Direct(h) => (LiftKind::Direct, adapter.compose(&k, &h)?),
            Split::Through { b: bm, .. } => (LiftKind::ThroughCells, through(&bm)?),
            Split::Mixed { direct, b: bm, .. } => {
                let d = adapter.compose(&k, &direct)?;
                let t = through(&bm)?;
                let sum = adapter
                    .add(&d, &t)
                    .ok_or_else(|| Error::Internal("mixed split in a non-additive adapter".into()))?;
                (LiftKind::Mixed, sum)
            }
        };
        check_lift(adapter, l, &cert.delta, &square.top, &square.bottom, &lift)?;
        return Ok(StageLift { stage: b, kind, lift });
    }
    Err(Error::NoFactorizationStage(format!("searched stages 0..={n}")))
}

/// The stagewise maps `xi_b: Z1_b -> Z2_b` induced by a morphism of maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct InducedMaps<A: CellAdapter> {
    pub stages: Vec<A::Map>,
    pub last: A::Map,
}

/// Builds `xi^g` stage by stage: `xi_0 = g_top`, and `xi_{b+1}` is the map of
/// pushouts determined by `S(xi_b, g_bottom)` and `xi_b`.
pub fn induced_map<A, S>(
    adapter: &A,
    system: &S,
    g_top: &A::Map,
    g_bottom: &A::Map,
    c1: &FactorizationCertificate<A>,
    c2: &FactorizationCertificate<A>,
) -> Result<InducedMaps<A>>
where
    A: CellAdapter,
    S: MatchingSystem<A> + ?Sized,
{
    if !system.is_functorial() {
        return Err(Error::NonFunctorial);
    }
    if c1.stages_used != c2.stages_used {
        return Err(Error::StageMismatch(format!(
            "{} stages versus {}",
            c1.stages_used, c2.stages_used
        )));
    }
    check_square(adapter, &c1.map, &c2.map, g_top, g_bottom)?;
    let mut xi = g_top.clone();
    let mut out = vec![xi.clone()];
    for (s1, s2) in c1.stages.iter().zip(&c2.stages) {
        let (_, s_bot) = system.induced(adapter, &s1.rho, &s1.matched, &s2.rho, &s2.matched, &xi, g_bottom)?;
        let po1 = Pushout {
            object: c1.z(out.len()).clone(),
            from_cell: s1.cell_corner.clone(),
            from_base: s1.inclusion.clone(),
        };
        let from_cell = adapter.compose(&s2.cell_corner, &s_bot)?;
        let from_base = adapter.compose(&s2.inclusion, &xi)?;
        xi = adapter.copair(&po1, &from_cell, &from_base)?;
        out.push(xi.clone());
    }
    Ok(InducedMaps { last: xi, stages: out })
}

#[cfg(test)]
mod tests {
    use super::finset::*;
    use super::*;

    fn point_generator() -> FinSetGenerators {
        FinSetGenerators::new(vec![FinMap::new(0, 1, vec![])])
    }

    #[test]
    fn empty_to_point_attaches_one_cell() {
        let a = FinSetAdapter;
        let f = FinMap::new(0, 1, vec![]);
        let cert = soa_factorize(&a, &f, &point_generator(), Budget::new(4)).unwrap();
        assert!(cert.stabilized);
        assert_eq!(cert.stages_used, 1);
        assert_eq!(cert.delta, FinMap::new(1, 1, vec![0]));
        replay(&a, &cert).unwrap();
    }

    #[test]
    fn surjection_needs_no_stage() {
        let a = FinSetAdapter;
        let f = FinMap::new(3, 2, vec![0, 1, 1]);
        let cert = soa_factorize(&a, &f, &point_generator(), Budget::new(4)).unwrap();
        assert!(cert.stabilized);
        assert_eq!(cert.stages_used, 0);
        assert_eq!(cert.gamma, FinMap::identity(3));
    }

    #[test]
    fn identity_lift_is_the_bottom_map() {
        let a = FinSetAdapter;
        let p = FinMap::identity(2);
        let l = FinMap::new(1, 3, vec![2]);
        let top = FinMap::new(1, 2, vec![1]);
        let bottom = FinMap::new(3, 2, vec![0, 0, 1]);
        let out = verify_rlp(&a, &p, &[Square { generator: l, top, bottom: bottom.clone() }]).unwrap();
        assert_eq!(out[0], LiftOutcome::Lift(bottom));
    }

    #[test]
    fn non_commuting_square_is_rejected() {
        let a = FinSetAdapter;
        let p = FinMap::identity(2);
        let l = FinMap::new(1, 1, vec![0]);
        let sq = Square { generator: l, top: FinMap::new(1, 2, vec![0]), bottom: FinMap::new(1, 2, vec![1]) };
        assert!(matches!(verify_rlp(&a, &p, &[sq]), Err(Error::NonCommutingSquare(_))));
    }

    #[test]
    fn induced_identity_is_identity() {
        let a = FinSetAdapter;
        let f = FinMap::new(1, 3, vec![0]);
        let sys = point_generator();
        let c = soa_factorize(&a, &f, &sys, Budget::fixed(2)).unwrap();
        let xi = induced_map(&a, &sys, &FinMap::identity(1), &FinMap::identity(3), &c, &c).unwrap();
        for (b, m) in xi.stages.iter().enumerate() {
            assert_eq!(*m, FinMap::identity(c.z(b).clone()));
        }
    }

    #[test]
    fn lift_from_first_stage() {
        let a = FinSetAdapter;
        let f = FinMap::new(1, 3, vec![0]);
        let sys = point_generator();
        let cert = soa_factorize(&a, &f, &sys, Budget::new(4)).unwrap();
        assert!(cert.stabilized);
        let sq = Square {
            generator: FinMap::new(0, 1, vec![]),
            top: FinMap::new(0, cert.z_final, vec![]),
            bottom: FinMap::new(1, 3, vec![2]),
        };
        let got = lift_through_factorization(&a, &cert, &sys, &sq).unwrap();
        assert_eq!(got.stage, 0);
        assert_eq!(got.kind, LiftKind::ThroughCells);
        let pre = lift_through_factorization(&a, &cert, &sys, &Square {
            bottom: FinMap::new(1, 3, vec![0]),
            ..sq
        })
        .unwrap();
        assert_eq!(pre.kind, LiftKind::Direct);
    }
}
