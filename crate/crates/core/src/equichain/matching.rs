//! Matching systems for the generating classes.
//!
//! For `I = {Σ^{n-1}P_T -> D^n P_T}` a square into `f: Z -> Y` is a natural
//! map `T -> U W_n` with `W_n = {(x, y) ∈ Z_{n-1} ⊕ Y_n : dx = 0, f x = d y}`;
//! for `J = {0 -> D^n P_T}` it is a map `T -> U Y_n`. Every such map lands in
//! one orbit of `U W_n`, so the universal squares of the orbits generate all
//! squares by precomposition.
//!
//! Those orbits get large quickly, so the reduced system works with a fixed
//! finite set of orbits instead (representables plus the orbits found in the
//! source and target). For a fixed `T` the squares form the vector space
//! `hom(P_T, W_n)`, the liftable ones are the image of `hom(P_T, Z_n)`, and a
//! complement basis of that image is exactly what needs cells.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::adapter::{add_map_equation, ChainAdapter, MapTerm, MapUnknown};
use super::complex::{ChainDiagram, ChainMap};
use super::module::{push_families, FamilySpace, ModuleDiagram, Submodule};
use crate::error::{Error, Result};
use crate::fincat::{
    colim_set, generated_subdiagram, is_orbit, isomorphic, orbit_from_colimit, orbits, representable, SetDiagram,
};
use crate::linalg::{space_size, vector_from_index, LinearSystem, Matrix};
use crate::soa::{CellAdapter, LiftOutcome, Matched, MatchingSystem, Split, Square};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorClass {
    /// Sphere-to-disk inclusions; factorizations are cofibration then trivial fibration.
    I,
    /// Zero-to-disk maps; factorizations are trivial cofibration then fibration.
    J,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    /// One cell per orbit of every `U W_n`. Functorial, but the cell count
    /// grows exponentially with the stage.
    Full,
    /// Cells for a complement of the liftable squares from a fixed orbit set,
    /// skipping squares that factor through cells chosen earlier in the same
    /// degree. Not functorial.
    Reduced,
}

/// The orbit data of one degree.
#[derive(Clone, Debug)]
pub(crate) struct DegreeOrbits {
    pub n: i64,
    pub w: Submodule,
    pub components: Vec<Component>,
}

#[derive(Clone, Debug)]
pub(crate) struct Component {
    pub orbit: SetDiagram,
    /// `coords[o][e]`: coordinates in `W(o)` of the element `e` at object `o`.
    pub coords: Vec<Vec<Vec<u32>>>,
}

impl Component {
    fn universal_family(&self, fs: &FamilySpace) -> Vec<u32> {
        let mut v = vec![0; fs.len];
        for (o, es) in self.coords.iter().enumerate() {
            for (e, c) in es.iter().enumerate() {
                let off = fs.offsets[o][e];
                v[off..off + c.len()].copy_from_slice(c);
            }
        }
        v
    }
}

impl Component {
    fn from_family(orbit: &SetDiagram, fs: &FamilySpace, dims: &[usize], family: &[u32]) -> Component {
        let coords = (0..dims.len())
            .map(|o| (0..orbit.size(o)).map(|e| fs.slot(family, o, e, dims[o]).to_vec()).collect())
            .collect();
        Component { orbit: orbit.clone(), coords }
    }
}

/// A chosen cell: degree and orbit, with the coordinates of its attaching data.
#[derive(Clone, Debug)]
pub(crate) struct Cell<'a> {
    pub n: i64,
    pub w: &'a Submodule,
    pub component: Component,
}

/// A generator square together with the degree and orbit of its cell.
#[derive(Clone, Debug)]
pub struct OrbitSquare {
    pub degree: i64,
    pub orbit: SetDiagram,
    pub square: Square<ChainMap>,
}

#[derive(Clone, Debug)]
pub struct EquivariantSystem {
    pub class: GeneratorClass,
    pub kind: SystemKind,
    /// The orbits squares are drawn from in the reduced system.
    pub orbits: Vec<SetDiagram>,
}

impl EquivariantSystem {
    pub fn full(class: GeneratorClass) -> Self {
        EquivariantSystem { class, kind: SystemKind::Full, orbits: Vec::new() }
    }

    pub fn reduced(class: GeneratorClass, orbits: Vec<SetDiagram>) -> Self {
        EquivariantSystem { class, kind: SystemKind::Reduced, orbits }
    }

    /// Reduced system over the instance orbits of `f`.
    pub fn for_map(class: GeneratorClass, f: &ChainMap) -> Result<Self> {
        Ok(Self::reduced(class, instance_orbits(f)?))
    }

    /// Degrees `n` whose cells fit inside the complex's range.
    pub(crate) fn cell_degrees(f: &ChainMap) -> std::ops::RangeInclusive<i64> {
        f.source.lo() + 1..=f.source.hi()
    }

    /// The subdiagram `W_n` inside its ambient diagram.
    pub(crate) fn w_module(&self, f: &ChainMap, n: i64) -> Submodule {
        let (z, y) = (&f.source, &f.target);
        match self.class {
            GeneratorClass::J => {
                let ym = y.module_or_zero(n);
                let basis = ym.dims.iter().map(|&d| Matrix::identity(ym.p, d)).collect();
                Submodule::from_basis(&ym, basis)
            }
            GeneratorClass::I => {
                let amb = z.module_or_zero(n - 1).direct_sum(&y.module_or_zero(n));
                let constraint: Vec<Matrix> = (0..z.n_objects())
                    .map(|o| {
                        let top = z.d(n - 1, o).hstack(&Matrix::zeros(z.p(), z.dim(n - 2, o), y.dim(n, o)));
                        let bottom = f_comp(f, n - 1, o).hstack(&y.d(n, o).neg());
                        top.vstack(&bottom)
                    })
                    .collect();
                Submodule::kernel(&amb, &constraint)
            }
        }
    }

    pub(crate) fn degree_orbits(&self, f: &ChainMap, n: i64) -> Result<DegreeOrbits> {
        let w = self.w_module(f, n);
        let u = w.module.underlying()?;
        let colim = colim_set(&u);
        let p = w.module.p;
        let components = (0..colim.size())
            .map(|pt| {
                let orbit = orbit_from_colimit(&u, &colim, pt)?;
                let coords = orbit
                    .projection
                    .components
                    .iter()
                    .enumerate()
                    .map(|(o, idx)| idx.iter().map(|&i| vector_from_index(p, w.module.dims[o], i)).collect())
                    .collect();
                Ok(Component { orbit: orbit.diagram, coords })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DegreeOrbits { n, w, components })
    }

    /// The map `Z_n -> W_n` sending `z` to the square of the lift it defines.
    fn lift_square_map(&self, f: &ChainMap, w: &Submodule, n: i64) -> Vec<Matrix> {
        let z = &f.source;
        (0..z.n_objects())
            .map(|o| {
                let amb = match self.class {
                    GeneratorClass::I => z.d(n, o).vstack(&f_comp(f, n, o)),
                    GeneratorClass::J => f_comp(f, n, o),
                };
                w.basis[o].solve(&amb).expect("lift squares lie in W")
            })
            .collect()
    }


    fn lifts(&self, f: &ChainMap, d: &DegreeOrbits, c: &Component) -> bool {
        let fs_w = FamilySpace::new(&c.orbit, &d.w.module);
        let u = c.universal_family(&fs_w);
        if u.iter().all(|&x| x == 0) {
            return true;
        }
        let span = self.liftable_families(f, d.n, &d.w, &c.orbit, &fs_w);
        Matrix::from_columns(d.w.module.p, fs_w.len, &span).spans(&u)
    }

    /// Families spanning the liftable squares from `P_T`.
    fn liftable_families(&self, f: &ChainMap, n: i64, w: &Submodule, t: &SetDiagram, fs_w: &FamilySpace) -> Vec<Vec<u32>> {
        let zn = f.source.module_or_zero(n);
        let fs_z = FamilySpace::new(t, &zn);
        let map = self.lift_square_map(f, w, n);
        push_families(&fs_z.basis, &fs_z, &zn.dims, &map, fs_w)
    }

    /// Cells of the reduced system in degree `n`.
    fn choose_reduced<'a>(&self, f: &ChainMap, n: i64, w: &'a Submodule) -> Vec<Cell<'a>> {
        let p = w.module.p;
        let mut cells: Vec<Cell<'a>> = Vec::new();
        for t in &self.orbits {
            let fs_w = FamilySpace::new(t, &w.module);
            if fs_w.dim() == 0 {
                continue;
            }
            let mut span = self.liftable_families(f, n, w, t, &fs_w);
            if !cells.is_empty() {
                let free = free_sum(cells.iter().map(|c| &c.component.orbit), p);
                let to_w = universal_columns(&cells, w);
                let fs_g = FamilySpace::new(t, &free);
                span.extend(push_families(&fs_g.basis, &fs_g, &free.dims, &to_w, &fs_w));
            }
            let mut basis = Matrix::from_columns(p, fs_w.len, &span).column_basis();
            for fam in &fs_w.basis {
                if basis.spans(fam) {
                    continue;
                }
                basis = basis.hstack(&Matrix::column(p, fam));
                cells.push(Cell { n, w, component: Component::from_family(t, &fs_w, &w.module.dims, fam) });
            }
        }
        cells
    }

    /// Whether every square from `P_t` in degree `n` lifts.
    fn orbit_lifts(&self, f: &ChainMap, n: i64, w: &Submodule, t: &SetDiagram) -> bool {
        let fs_w = FamilySpace::new(t, &w.module);
        if fs_w.dim() == 0 {
            return true;
        }
        let span = self.liftable_families(f, n, w, t, &fs_w);
        Matrix::from_columns(w.module.p, fs_w.len, &span).rank() == fs_w.dim()
    }

    pub(crate) fn all_degree_orbits(&self, f: &ChainMap) -> Result<Vec<DegreeOrbits>> {
        Self::cell_degrees(f).map(|n| self.degree_orbits(f, n)).collect()
    }

    /// Builds `S: A -> B` and `t = (A -> Z, B -> Y)` for a list of cells.
    pub(crate) fn realize(&self, f: &ChainMap, cells: &[Cell<'_>]) -> Result<Matched<ChainMap>> {
        let (z, y) = (&f.source, &f.target);
        let (lo, hi) = (z.lo(), z.hi());
        let p = z.p();
        let cat = z.category().clone();
        let no = z.n_objects();
        let mut a = ChainDiagram::zero(cat.clone(), p, lo, hi);
        let mut b = ChainDiagram::zero(cat.clone(), p, lo, hi);
        let mut pieces: Vec<(ModuleDiagram, i64)> = Vec::new();
        for cell in cells {
            let free = ModuleDiagram::free_on(&cell.component.orbit, p);
            if self.class == GeneratorClass::I {
                a = a.direct_sum(&ChainDiagram::sphere(&free, cell.n - 1, lo, hi))?;
            }
            b = b.direct_sum(&ChainDiagram::disk(&free, cell.n, lo, hi))?;
            pieces.push((free, cell.n));
        }
        let (a, b) = (Arc::new(a), Arc::new(b));
        let mut inc = ChainMap::zero(a.clone(), b.clone());
        let mut top = ChainMap::zero(a.clone(), z.clone());
        let mut bottom = ChainMap::zero(b.clone(), y.clone());
        // Running column offsets per degree and object in A and B.
        let width = (hi - lo + 1) as usize;
        let mut a_off = vec![vec![0usize; no]; width];
        let mut b_off = vec![vec![0usize; no]; width];
        for (cell, (free, n)) in cells.iter().zip(&pieces) {
            let n = *n;
            for o in 0..no {
                let k = free.dims[o];
                let elems = &cell.component.coords[o];
                let amb: Vec<Vec<u32>> = elems.iter().map(|c| cell.w.ambient_vector(o, c)).collect();
                let zdim = if self.class == GeneratorClass::I { z.dim(n - 1, o) } else { 0 };
                let xs: Vec<Vec<u32>> = amb.iter().map(|v| v[..zdim].to_vec()).collect();
                let ys: Vec<Vec<u32>> = amb.iter().map(|v| v[zdim..].to_vec()).collect();
                if (lo..=hi).contains(&n) {
                    let kn = (n - lo) as usize;
                    bottom.components[kn][o].paste(0, b_off[kn][o], &Matrix::from_columns(p, y.dim(n, o), &ys));
                }
                if (lo..=hi).contains(&(n - 1)) {
                    let km = (n - 1 - lo) as usize;
                    let dys: Vec<Vec<u32>> = ys.iter().map(|v| y.d(n, o).mul_vec(v)).collect();
                    bottom.components[km][o].paste(0, b_off[km][o], &Matrix::from_columns(p, y.dim(n - 1, o), &dys));
                    if self.class == GeneratorClass::I {
                        top.components[km][o].paste(0, a_off[km][o], &Matrix::from_columns(p, z.dim(n - 1, o), &xs));
                        inc.components[km][o].paste(b_off[km][o], a_off[km][o], &Matrix::identity(p, k));
                        a_off[km][o] += k;
                    }
                }
                for deg in [n, n - 1] {
                    if (lo..=hi).contains(&deg) {
                        b_off[(deg - lo) as usize][o] += k;
                    }
                }
            }
        }
        Ok(Matched { cells: inc, top, bottom, count: cells.len() })
    }

    /// Runs `k` on the cells `S(f)` attaches.
    fn with_cells<R>(&self, f: &ChainMap, k: impl FnOnce(&[Cell<'_>]) -> Result<R>) -> Result<R> {
        match self.kind {
            SystemKind::Full => {
                let degrees = self.all_degree_orbits(f)?;
                let cells: Vec<Cell<'_>> = degrees
                    .iter()
                    .flat_map(|d| d.components.iter().map(|c| Cell { n: d.n, w: &d.w, component: c.clone() }))
                    .collect();
                k(&cells)
            }
            SystemKind::Reduced => {
                let ws: Vec<(i64, Submodule)> = Self::cell_degrees(f).map(|n| (n, self.w_module(f, n))).collect();
                let cells: Vec<Cell<'_>> = ws.iter().flat_map(|(n, w)| self.choose_reduced(f, *n, w)).collect();
                k(&cells)
            }
        }
    }

    /// Generator squares into `f` that every square factors through (full
    /// system) or spans (reduced system): universal squares of the orbits of
    /// `U W_n`, or one square per basis family of each `hom(P_T, W_n)`.
    pub fn generator_squares(&self, f: &ChainMap) -> Result<Vec<OrbitSquare>> {
        let mut out = Vec::new();
        match self.kind {
            SystemKind::Full => {
                for d in &self.all_degree_orbits(f)? {
                    for c in &d.components {
                        out.push(self.square(f, Cell { n: d.n, w: &d.w, component: c.clone() })?);
                    }
                }
            }
            SystemKind::Reduced => {
                for n in Self::cell_degrees(f) {
                    let w = self.w_module(f, n);
                    for t in &self.orbits {
                        let fs = FamilySpace::new(t, &w.module);
                        for fam in &fs.basis {
                            let component = Component::from_family(t, &fs, &w.module.dims, fam);
                            out.push(self.square(f, Cell { n, w: &w, component })?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every square from the orbit set of the reduced system, enumerated
    /// exhaustively. Fails when some `hom(P_T, W_n)` has more than `cap`
    /// elements.
    pub fn exhaustive_squares(&self, f: &ChainMap, cap: usize) -> Result<Vec<OrbitSquare>> {
        let mut out = Vec::new();
        for n in Self::cell_degrees(f) {
            let w = self.w_module(f, n);
            let p = w.module.p;
            for t in &self.orbits {
                let fs = FamilySpace::new(t, &w.module);
                let total = space_size(p, fs.dim()).filter(|&s| s <= cap).ok_or_else(|| {
                    Error::Precondition(format!("{}^{} squares exceed the cap {cap}", p, fs.dim()))
                })?;
                for idx in 0..total {
                    let coeffs = vector_from_index(p, fs.dim(), idx);
                    let mut fam = vec![0u32; fs.len];
                    for (c, b) in coeffs.iter().zip(&fs.basis) {
                        for (x, y) in fam.iter_mut().zip(b) {
                            *x = (*x + c * y) % p;
                        }
                    }
                    let component = Component::from_family(t, &fs, &w.module.dims, &fam);
                    out.push(self.square(f, Cell { n, w: &w, component })?);
                }
            }
        }
        Ok(out)
    }

    fn square(&self, f: &ChainMap, cell: Cell<'_>) -> Result<OrbitSquare> {
        let (degree, orbit) = (cell.n, cell.component.orbit.clone());
        let m = self.realize(f, &[cell])?;
        Ok(OrbitSquare { degree, orbit, square: Square { generator: m.cells, top: m.top, bottom: m.bottom } })
    }

    /// Number of cells per degree that `S(f)` would attach.
    pub fn cell_counts(&self, f: &ChainMap) -> Result<Vec<(i64, usize)>> {
        self.with_cells(f, |cells| {
            Ok(Self::cell_degrees(f).map(|n| (n, cells.iter().filter(|c| c.n == n).count())).collect())
        })
    }
}

/// Representables, the orbits of the underlying diagrams of source and
/// target in every degree, and the orbits generated by one or two elements
/// of those, up to isomorphism, smallest first.
///
/// The small generated orbits are not needed for the probe, but their cells
/// absorb most squares from the large orbits: on the walking arrow, lifting
/// against the orbit of two points over one implies lifting against every
/// orbit of `k` points over one.
pub fn instance_orbits(f: &ChainMap) -> Result<Vec<SetDiagram>> {
    let cat = f.source.category().clone();
    let mut found: Vec<SetDiagram> = (0..cat.n_objects()).map(|c| representable(&cat, c)).collect();
    let add = |t: SetDiagram, found: &mut Vec<SetDiagram>| {
        if is_orbit(&t) && !found.iter().any(|s| isomorphic(s, &t)) {
            found.push(t);
        }
    };
    for x in [&f.source, &f.target] {
        for n in x.degrees() {
            let u = x.module_or_zero(n).underlying()?;
            for orbit in orbits(&u) {
                let t = orbit.diagram;
                let elems: Vec<(usize, usize)> =
                    (0..cat.n_objects()).flat_map(|o| (0..t.size(o)).map(move |e| (o, e))).collect();
                for (i, &a) in elems.iter().enumerate() {
                    for &b in &elems[i..] {
                        add(generated_subdiagram(&t, &[a, b]).0, &mut found);
                    }
                }
                add(t, &mut found);
            }
        }
    }
    found.sort_by_key(|t| t.total_size());
    Ok(found)
}

fn f_comp(f: &ChainMap, n: i64, o: usize) -> Matrix {
    if (f.source.lo()..=f.source.hi()).contains(&n) {
        f.comp(n, o).clone()
    } else {
        Matrix::zeros(f.source.p(), f.target.dim(n, o), f.source.dim(n, o))
    }
}

fn free_sum<'a>(orbits: impl Iterator<Item = &'a SetDiagram>, p: u32) -> ModuleDiagram {
    let mut acc: Option<ModuleDiagram> = None;
    for t in orbits {
        let m = ModuleDiagram::free_on(t, p);
        acc = Some(match acc {
            None => m,
            Some(a) => a.direct_sum(&m),
        });
    }
    acc.expect("at least one orbit")
}

/// The module map `⊕ P_{T_g} -> W` sending each generator to its element.
fn universal_columns(cells: &[Cell<'_>], w: &Submodule) -> Vec<Matrix> {
    let p = w.module.p;
    (0..w.module.dims.len())
        .map(|o| {
            let cols: Vec<Vec<u32>> = cells.iter().flat_map(|c| c.component.coords[o].iter().cloned()).collect();
            Matrix::from_columns(p, w.module.dims[o], &cols)
        })
        .collect()
}

impl MatchingSystem<ChainAdapter> for EquivariantSystem {
    fn is_functorial(&self) -> bool {
        self.kind == SystemKind::Full
    }

    fn matched(&self, _a: &ChainAdapter, f: &ChainMap) -> Result<Matched<ChainMap>> {
        self.with_cells(f, |cells| self.realize(f, cells))
    }

    fn probe(&self, _a: &ChainAdapter, f: &ChainMap) -> Result<bool> {
        for n in Self::cell_degrees(f) {
            let ok = match self.kind {
                SystemKind::Full => {
                    let d = self.degree_orbits(f, n)?;
                    d.components.iter().all(|c| self.lifts(f, &d, c))
                }
                SystemKind::Reduced => {
                    let w = self.w_module(f, n);
                    self.orbits.iter().all(|t| self.orbit_lifts(f, n, &w, t))
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn split_square(
        &self,
        a: &ChainAdapter,
        f: &ChainMap,
        matched: &Matched<ChainMap>,
        square: &Square<ChainMap>,
    ) -> Result<Option<Split<ChainMap>>> {
        let l = &square.generator;
        if let LiftOutcome::Lift(h) = a.find_lift(l, f, &square.top, &square.bottom)? {
            return Ok(Some(Split::Direct(h)));
        }
        let mut sys = LinearSystem::new(f.source.p());
        let h = MapUnknown::new(&mut sys, &l.target, &f.source);
        let am = MapUnknown::new(&mut sys, &l.source, &matched.cells.source);
        let bm = MapUnknown::new(&mut sys, &l.target, &matched.cells.target);
        add_map_equation(
            &mut sys,
            &[
                MapTerm { left: None, unknown: &h, right: Some(l), negate: false },
                MapTerm { left: Some(&matched.top), unknown: &am, right: None, negate: false },
            ],
            &square.top,
        );
        add_map_equation(
            &mut sys,
            &[
                MapTerm { left: Some(f), unknown: &h, right: None, negate: false },
                MapTerm { left: Some(&matched.bottom), unknown: &bm, right: None, negate: false },
            ],
            &square.bottom,
        );
        let zero = ChainMap::zero(l.source.clone(), matched.cells.target.clone());
        add_map_equation(
            &mut sys,
            &[
                MapTerm { left: Some(&matched.cells), unknown: &am, right: None, negate: false },
                MapTerm { left: None, unknown: &bm, right: Some(l), negate: true },
            ],
            &zero,
        );
        let Ok(sol) = sys.solve() else {
            return Ok(None);
        };
        let (h, am, bm) = (h.read(&sol), am.read(&sol), bm.read(&sol));
        Ok(Some(if h.is_zero() { Split::Through { a: am, b: bm } } else { Split::Mixed { direct: h, a: am, b: bm } }))
    }

    fn induced(
        &self,
        _a: &ChainAdapter,
        f1: &ChainMap,
        m1: &Matched<ChainMap>,
        f2: &ChainMap,
        m2: &Matched<ChainMap>,
        g_top: &ChainMap,
        g_bottom: &ChainMap,
    ) -> Result<(ChainMap, ChainMap)> {
        if self.kind != SystemKind::Full {
            return Err(Error::NonFunctorial);
        }
        let d1 = self.all_degree_orbits(f1)?;
        let d2 = self.all_degree_orbits(f2)?;
        let p = f1.source.p();
        let (lo, hi) = (f1.source.lo(), f1.source.hi());
        let no = f1.source.n_objects();
        let width = (hi - lo + 1) as usize;
        // Offsets of every cell of the second system, per degree of the complex and object.
        let offsets = |degrees: &[DegreeOrbits]| -> (Vec<Vec<Vec<usize>>>, Vec<Vec<Vec<usize>>>) {
            let mut a_run = vec![vec![0usize; no]; width];
            let mut b_run = vec![vec![0usize; no]; width];
            let (mut a_all, mut b_all) = (Vec::new(), Vec::new());
            for d in degrees {
                for c in &d.components {
                    a_all.push(a_run.clone());
                    b_all.push(b_run.clone());
                    for o in 0..no {
                        let k = c.orbit.size(o);
                        if self.class == GeneratorClass::I && (lo..=hi).contains(&(d.n - 1)) {
                            a_run[(d.n - 1 - lo) as usize][o] += k;
                        }
                        for deg in [d.n, d.n - 1] {
                            if (lo..=hi).contains(&deg) {
                                b_run[(deg - lo) as usize][o] += k;
                            }
                        }
                    }
                }
            }
            (a_all, b_all)
        };
        let (a1, b1) = offsets(&d1);
        let (a2, b2) = offsets(&d2);
        let mut s_top = ChainMap::zero(m1.cells.source.clone(), m2.cells.source.clone());
        let mut s_bot = ChainMap::zero(m1.cells.target.clone(), m2.cells.target.clone());
        let mut idx1 = 0;
        for (dd1, dd2) in d1.iter().zip(&d2) {
            let n = dd1.n;
            // Where each element of U W_n(f2) sits: (component, position).
            let mut locate: Vec<std::collections::HashMap<Vec<u32>, (usize, usize)>> = vec![Default::default(); no];
            for (ci, c) in dd2.components.iter().enumerate() {
                for o in 0..no {
                    for (e, v) in c.coords[o].iter().enumerate() {
                        locate[o].insert(v.clone(), (ci, e));
                    }
                }
            }
            let first2: usize = d2.iter().take_while(|d| d.n != n).map(|d| d.components.len()).sum();
            for c in &dd1.components {
                for o in 0..no {
                    for (e, v) in c.coords[o].iter().enumerate() {
                        let amb = dd1.w.ambient_vector(o, v);
                        let moved = match self.class {
                            GeneratorClass::J => f_comp(g_bottom, n, o).mul_vec(&amb),
                            GeneratorClass::I => {
                                let zd = f1.source.dim(n - 1, o);
                                let mut x = f_comp(g_top, n - 1, o).mul_vec(&amb[..zd]);
                                x.extend(f_comp(g_bottom, n, o).mul_vec(&amb[zd..]));
                                x
                            }
                        };
                        let coords = dd2
                            .w
                            .coordinates(o, &moved)
                            .ok_or_else(|| Error::Internal("morphism of maps does not preserve W".into()))?;
                        let &(c2, e2) = locate[o]
                            .get(&coords)
                            .ok_or_else(|| Error::Internal("image element missing from the orbit table".into()))?;
                        let j = first2 + c2;
                        if self.class == GeneratorClass::I && (lo..=hi).contains(&(n - 1)) {
                            let k = (n - 1 - lo) as usize;
                            s_top.components[k][o].set(a2[j][k][o] + e2, a1[idx1][k][o] + e, 1);
                        }
                        for deg in [n, n - 1] {
                            if (lo..=hi).contains(&deg) {
                                let k = (deg - lo) as usize;
                                s_bot.components[k][o].set(b2[j][k][o] + e2, b1[idx1][k][o] + e, 1);
                            }
                        }
                    }
                }
                idx1 += 1;
            }
        }
        let _ = p;
        Ok((s_top, s_bot))
    }
}
