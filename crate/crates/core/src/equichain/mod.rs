//! Diagrams of F_p chain complexes with the orbit-relative model structure.
//!
//! A map `f` is a weak equivalence (fibration) when `hom(P_T, f)` is a
//! quasi-isomorphism (degreewise surjection) for every orbit `T`, where `P_T`
//! is the free diagram on `T`. The generating classes are built from these
//! free diagrams and the factorizations run through the generic engine.

mod adapter;
mod complex;
mod matching;
mod module;

pub use adapter::{chain_hom_basis, ChainAdapter};
pub use complex::{hom_orbit_complex, ChainDiagram, ChainMap, VectorComplex};
pub use matching::{instance_orbits, EquivariantSystem, GeneratorClass, OrbitSquare, SystemKind};
pub use module::{check_module_map, FamilySpace, ModuleDiagram, Submodule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fincat::{colim_set, orbit_from_colimit, SetDiagram};
use crate::linalg::{index_from_vector, vector_from_index, Matrix};
use crate::soa::{self, Budget, FactorizationCertificate};

pub type ChainCertificate = FactorizationCertificate<ChainAdapter>;

/// `P_T`: the free diagram on an orbit.
pub fn free_on_orbit(t: &SetDiagram, p: u32) -> ModuleDiagram {
    ModuleDiagram::free_on(t, p)
}

/// The resolution `ε: P X -> X` with `P X = ⊕_x P_{T_x}` over the points of
/// `colim U X`, together with the orbits `T_x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Resolution {
    pub module: ModuleDiagram,
    pub epsilon: Vec<Matrix>,
    pub orbits: Vec<SetDiagram>,
    /// `offsets[x][o]`: first basis index of the summand `P_{T_x}` at object `o`.
    pub offsets: Vec<Vec<usize>>,
    /// `members[x][o]`: the vectors (as base-p indices) of `T_x` at object `o`.
    pub members: Vec<Vec<Vec<usize>>>,
}

pub fn resolution(x: &ModuleDiagram) -> Result<Resolution> {
    let u = x.underlying()?;
    let colim = colim_set(&u);
    let no = x.dims.len();
    let p = x.p;
    let mut module: Option<ModuleDiagram> = None;
    let mut orbits = Vec::new();
    let mut members = Vec::new();
    let mut offsets = Vec::new();
    let mut running = vec![0usize; no];
    let mut eps_cols: Vec<Vec<Vec<u32>>> = vec![Vec::new(); no];
    for pt in 0..colim.size() {
        let orbit = orbit_from_colimit(&u, &colim, pt)?;
        let free = ModuleDiagram::free_on(&orbit.diagram, p);
        offsets.push(running.clone());
        for o in 0..no {
            running[o] += free.dims[o];
            for &i in &orbit.projection.components[o] {
                eps_cols[o].push(vector_from_index(p, x.dims[o], i));
            }
        }
        module = Some(match module {
            None => free,
            Some(m) => m.direct_sum(&free),
        });
        members.push(orbit.projection.components.clone());
        orbits.push(orbit.diagram);
    }
    let module = module.expect("U X always has a point");
    let epsilon = (0..no).map(|o| Matrix::from_columns(p, x.dims[o], &eps_cols[o])).collect();
    Ok(Resolution { module, epsilon, orbits, offsets, members })
}

/// Refines `φ: P_T -> X` to `ψ: P_T -> P X` with `ε ∘ ψ = φ`: the element
/// `φ(e)` lies in a single orbit `T_x`, and `ψ` sends `e` to its generator.
pub fn factor_through_resolution(t: &SetDiagram, x: &ModuleDiagram, phi: &[Matrix], res: &Resolution) -> Result<Vec<Matrix>> {
    let pt = ModuleDiagram::free_on(t, x.p);
    check_module_map(&pt, x, phi)?;
    let no = x.dims.len();
    let mut psi: Vec<Matrix> = (0..no).map(|o| Matrix::zeros(x.p, res.module.dims[o], pt.dims[o])).collect();
    for o in 0..no {
        for e in 0..t.size(o) {
            let v = phi[o].col(e);
            let idx = index_from_vector(x.p, &v);
            let (orb, pos) = res
                .members
                .iter()
                .enumerate()
                .find_map(|(xi, mem)| mem[o].iter().position(|&i| i == idx).map(|pos| (xi, pos)))
                .ok_or_else(|| Error::Internal("element missing from every orbit".into()))?;
            psi[o].set(res.offsets[orb][o] + pos, e, 1);
        }
    }
    Ok(psi)
}

/// The degree window used for factorizations: one degree of room below and
/// above the declared range of the map.
pub fn window(f: &ChainMap) -> (i64, i64) {
    (f.source.lo().min(f.target.lo()) - 1, f.source.hi().max(f.target.hi()) + 1)
}

/// Pads both ends of `f` to the factorization window.
pub fn widen(f: &ChainMap) -> Result<ChainMap> {
    let (lo, hi) = window(f);
    widen_to(f, lo, hi)
}

pub fn widen_to(f: &ChainMap, lo: i64, hi: i64) -> Result<ChainMap> {
    let s = std::sync::Arc::new(f.source.padded(lo, hi)?);
    let t = std::sync::Arc::new(f.target.padded(lo, hi)?);
    let components = (lo..=hi)
        .map(|n| {
            (0..s.n_objects())
                .map(|o| {
                    if (f.source.lo()..=f.source.hi()).contains(&n) {
                        f.comp(n, o).clone()
                    } else {
                        Matrix::zeros(s.p(), t.dim(n, o), s.dim(n, o))
                    }
                })
                .collect()
        })
        .collect();
    ChainMap::new(s, t, components)
}

/// Factors `f` through the cells of the chosen class. The map must already
/// live in its working window (see [`widen`]).
pub fn factorize_equivariant(f: &ChainMap, class: GeneratorClass, budget: Budget) -> Result<ChainCertificate> {
    f.check()?;
    let system = EquivariantSystem::for_map(class, f)?;
    soa::soa_factorize(&ChainAdapter, f, &system, budget)
}

/// Like [`factorize_equivariant`] with the functorial system.
pub fn factorize_functorial(f: &ChainMap, class: GeneratorClass, stages: usize) -> Result<ChainCertificate> {
    f.check()?;
    let system = EquivariantSystem::full(class);
    soa::soa_factorize(&ChainAdapter, f, &system, Budget::fixed(stages))
}
