//! Diagrams of finite-dimensional F_p vector spaces and their maps.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fincat::{FiniteCategory, SetDiagram};
use crate::linalg::{index_from_vector, space_size, vector_from_index, LinearSystem, Matrix, Term};

/// Largest underlying set we are willing to materialize per object.
pub const MAX_UNDERLYING: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDiagram {
    pub category: Arc<FiniteCategory>,
    pub p: u32,
    pub dims: Vec<usize>,
    /// One matrix per morphism, `dims[target] x dims[source]`.
    pub actions: Vec<Matrix>,
}

impl ModuleDiagram {
    pub fn zero(category: Arc<FiniteCategory>, p: u32) -> Self {
        let dims = vec![0; category.n_objects()];
        Self::constant_dims(category, p, dims)
    }

    fn constant_dims(category: Arc<FiniteCategory>, p: u32, dims: Vec<usize>) -> Self {
        let actions = category
            .morphisms()
            .iter()
            .map(|m| {
                if m.source == m.target {
                    Matrix::identity(p, dims[m.source])
                } else {
                    Matrix::zeros(p, dims[m.target], dims[m.source])
                }
            })
            .collect();
        ModuleDiagram { category, p, dims, actions }
    }

    /// The same space `F_p^dim` at every object with identity actions.
    pub fn constant(category: Arc<FiniteCategory>, p: u32, dim: usize) -> Self {
        let actions = category.morphisms().iter().map(|_| Matrix::identity(p, dim)).collect();
        let dims = vec![dim; category.n_objects()];
        ModuleDiagram { category, p, dims, actions }
    }

    pub fn new(category: Arc<FiniteCategory>, p: u32, dims: Vec<usize>, actions: Vec<Matrix>) -> Result<Self> {
        let m = ModuleDiagram { category, p, dims, actions };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        let c = &self.category;
        if self.dims.len() != c.n_objects() || self.actions.len() != c.n_morphisms() {
            return Err(Error::InvalidDiagram("dimension or action table has wrong length".into()));
        }
        for (m, a) in self.actions.iter().enumerate() {
            if a.p() != self.p || a.shape() != (self.dims[c.target(m)], self.dims[c.source(m)]) {
                return Err(Error::Shape(format!("action of {}", c.morphisms()[m].name)));
            }
        }
        for o in 0..c.n_objects() {
            if self.actions[c.identity(o)] != Matrix::identity(self.p, self.dims[o]) {
                return Err(Error::InvalidDiagram(format!("identity at {} acts nontrivially", c.objects()[o])));
            }
        }
        for f in 0..c.n_morphisms() {
            for g in 0..c.n_morphisms() {
                if c.target(f) == c.source(g) {
                    let gf = c
                        .compose(g, f)
                        .ok_or_else(|| Error::InvalidCategory("composition not total".into()))?;
                    if self.actions[g].mul(&self.actions[f]) != self.actions[gf] {
                        return Err(Error::InvalidDiagram(format!(
                            "actions do not respect {} ∘ {}",
                            c.morphisms()[g].name,
                            c.morphisms()[f].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    pub fn direct_sum(&self, other: &ModuleDiagram) -> ModuleDiagram {
        ModuleDiagram {
            category: self.category.clone(),
            p: self.p,
            dims: self.dims.iter().zip(&other.dims).map(|(a, b)| a + b).collect(),
            actions: self.actions.iter().zip(&other.actions).map(|(a, b)| a.block_diag(b)).collect(),
        }
    }

    /// The free module on a set diagram: basis the elements, actions the
    /// 0/1 incidence matrices of the set actions.
    pub fn free_on(t: &SetDiagram, p: u32) -> ModuleDiagram {
        let c = &t.category;
        let dims = t.sizes();
        let actions = (0..c.n_morphisms())
            .map(|m| {
                let (s, tg) = (c.source(m), c.target(m));
                let mut a = Matrix::zeros(p, dims[tg], dims[s]);
                for x in 0..dims[s] {
                    a.set(t.act(m, x), x, 1);
                }
                a
            })
            .collect();
        ModuleDiagram { category: t.category.clone(), p, dims, actions }
    }

    /// The underlying set diagram: every vector, indexed little-endian base p.
    pub fn underlying(&self) -> Result<SetDiagram> {
        let c = &self.category;
        let mut sizes = Vec::with_capacity(self.dims.len());
        for &d in &self.dims {
            match space_size(self.p, d) {
                Some(n) if n <= MAX_UNDERLYING => sizes.push(n),
                _ => {
                    return Err(Error::Precondition(format!(
                        "underlying set of F_{}^{d} is too large to enumerate",
                        self.p
                    )))
                }
            }
        }
        let sets = (0..c.n_objects())
            .map(|o| (0..sizes[o]).map(|i| vector_label(&vector_from_index(self.p, self.dims[o], i))).collect())
            .collect();
        let actions = (0..c.n_morphisms())
            .map(|m| {
                let s = c.source(m);
                (0..sizes[s])
                    .map(|i| {
                        let v = vector_from_index(self.p, self.dims[s], i);
                        index_from_vector(self.p, &self.actions[m].mul_vec(&v))
                    })
                    .collect()
            })
            .collect();
        Ok(SetDiagram { category: c.clone(), sets, actions })
    }

    /// Natural maps `self -> target`: basis of the solution space.
    pub fn hom_basis(&self, target: &ModuleDiagram) -> Vec<Vec<Matrix>> {
        let c = &self.category;
        let mut sys = LinearSystem::new(self.p);
        let blocks: Vec<usize> = (0..c.n_objects()).map(|o| sys.add_block(target.dims[o], self.dims[o])).collect();
        add_naturality(&mut sys, &blocks, self, target);
        sys.kernel()
    }
}

/// Adds `target_m * X_s = X_t * source_m` for every morphism `m`.
pub(crate) fn add_naturality(sys: &mut LinearSystem, blocks: &[usize], source: &ModuleDiagram, target: &ModuleDiagram) {
    let c = &source.category;
    let p = source.p;
    for m in 0..c.n_morphisms() {
        if c.is_identity(m) {
            continue;
        }
        let (s, t) = (c.source(m), c.target(m));
        let id_s = Matrix::identity(p, source.dims[s]);
        let neg_t = Matrix::identity(p, target.dims[t]).neg();
        let rhs = Matrix::zeros(p, target.dims[t], source.dims[s]);
        sys.add_equation(
            &[
                Term { left: &target.actions[m], block: blocks[s], right: &id_s },
                Term { left: &neg_t, block: blocks[t], right: &source.actions[m] },
            ],
            &rhs,
        );
    }
}

pub(crate) fn vector_label(v: &[u32]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Checks that `components` is a natural map `source -> target`.
pub fn check_module_map(source: &ModuleDiagram, target: &ModuleDiagram, components: &[Matrix]) -> Result<()> {
    let c = &source.category;
    if components.len() != c.n_objects() {
        return Err(Error::Shape("module map has wrong number of components".into()));
    }
    for (o, m) in components.iter().enumerate() {
        if m.shape() != (target.dims[o], source.dims[o]) {
            return Err(Error::Shape(format!("module map component at {}", c.objects()[o])));
        }
    }
    for m in 0..c.n_morphisms() {
        let (s, t) = (c.source(m), c.target(m));
        if target.actions[m].mul(&components[s]) != components[t].mul(&source.actions[m]) {
            return Err(Error::InvalidDiagram(format!("naturality fails at {}", c.morphisms()[m].name)));
        }
    }
    Ok(())
}

/// A sub-diagram `W ⊆ M` cut out objectwise by a basis, with the induced actions.
#[derive(Clone, Debug)]
pub struct Submodule {
    pub module: ModuleDiagram,
    /// Columns span `W(o)` inside `M(o)`.
    pub basis: Vec<Matrix>,
}

impl Submodule {
    /// The kernel of a natural map out of `ambient`, given objectwise.
    pub fn kernel(ambient: &ModuleDiagram, map: &[Matrix]) -> Submodule {
        let basis: Vec<Matrix> = map.iter().map(|m| m.kernel()).collect();
        Self::from_basis(ambient, basis)
    }

    /// Induced actions on an invariant subspace family.
    pub fn from_basis(ambient: &ModuleDiagram, basis: Vec<Matrix>) -> Submodule {
        let c = &ambient.category;
        let actions = (0..c.n_morphisms())
            .map(|m| {
                let (s, t) = (c.source(m), c.target(m));
                let image = ambient.actions[m].mul(&basis[s]);
                basis[t].solve(&image).expect("subspace is invariant under the actions")
            })
            .collect();
        let dims = basis.iter().map(|b| b.cols()).collect();
        Submodule {
            module: ModuleDiagram { category: ambient.category.clone(), p: ambient.p, dims, actions },
            basis,
        }
    }

    /// Coordinates of an ambient vector at object `o`.
    pub fn coordinates(&self, o: usize, v: &[u32]) -> Option<Vec<u32>> {
        let p = self.module.p;
        self.basis[o].solve(&Matrix::column(p, v)).map(|x| x.col(0))
    }

    pub fn ambient_vector(&self, o: usize, coords: &[u32]) -> Vec<u32> {
        self.basis[o].mul_vec(coords)
    }
}

/// Maps of set diagrams `T -> U M`, which are natural maps `P_T -> M`,
/// written as families `(m_e)` indexed by the elements of `T`.
///
/// A family is flattened object by object, element by element.
#[derive(Clone, Debug)]
pub struct FamilySpace {
    pub offsets: Vec<Vec<usize>>,
    pub len: usize,
    /// Basis of the space of natural families, one flattened vector each.
    pub basis: Vec<Vec<u32>>,
}

impl FamilySpace {
    pub fn new(t: &SetDiagram, m: &ModuleDiagram) -> FamilySpace {
        let c = &t.category;
        let p = m.p;
        let mut offsets = Vec::with_capacity(c.n_objects());
        let mut len = 0;
        for o in 0..c.n_objects() {
            offsets.push((0..t.size(o)).map(|e| len + e * m.dims[o]).collect::<Vec<_>>());
            len += t.size(o) * m.dims[o];
        }
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for mor in 0..c.n_morphisms() {
            if c.is_identity(mor) {
                continue;
            }
            let (s, tg) = (c.source(mor), c.target(mor));
            for e in 0..t.size(s) {
                let e2 = t.act(mor, e);
                for r in 0..m.dims[tg] {
                    let mut row = vec![0u32; len];
                    for k in 0..m.dims[s] {
                        row[offsets[s][e] + k] = m.actions[mor].get(r, k);
                    }
                    let slot = &mut row[offsets[tg][e2] + r];
                    *slot = (*slot + p - 1) % p;
                    rows.push(row);
                }
            }
        }
        let basis = if rows.is_empty() {
            (0..len)
                .map(|i| {
                    let mut v = vec![0; len];
                    v[i] = 1;
                    v
                })
                .collect()
        } else {
            let mut a = Matrix::zeros(p, rows.len(), len);
            for (i, row) in rows.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    if x != 0 {
                        a.set(i, j, x);
                    }
                }
            }
            let k = a.kernel();
            (0..k.cols()).map(|j| k.col(j)).collect()
        };
        FamilySpace { offsets, len, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn slot<'a>(&self, family: &'a [u32], o: usize, e: usize, dim: usize) -> &'a [u32] {
        let off = self.offsets[o][e];
        &family[off..off + dim]
    }
}

/// Pushes every family forward along a module map, landing in the family
/// layout of `target_layout`.
pub fn push_families(
    families: &[Vec<u32>],
    from: &FamilySpace,
    from_dims: &[usize],
    map: &[Matrix],
    to: &FamilySpace,
) -> Vec<Vec<u32>> {
    families
        .iter()
        .map(|fam| {
            let mut out = vec![0; to.len];
            for (o, offs) in from.offsets.iter().enumerate() {
                for (e, &off) in offs.iter().enumerate() {
                    let img = map[o].mul_vec(&fam[off..off + from_dims[o]]);
                    let dst = to.offsets[o][e];
                    out[dst..dst + img.len()].copy_from_slice(&img);
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{orbit_over_point, FiniteCategory};

    fn walking_orbit() -> SetDiagram {
        let c = Arc::new(FiniteCategory::walking_arrow());
        let u = c.morphism_index("a>b").unwrap();
        let mut actions = vec![vec![]; 3];
        actions[c.identity(0)] = vec![0, 1];
        actions[c.identity(1)] = vec![0];
        actions[u] = vec![0, 0];
        SetDiagram::new(c, &[2, 1], actions).unwrap()
    }

    #[test]
    fn free_module_on_walking_orbit() {
        let t = walking_orbit();
        let m = ModuleDiagram::free_on(&t, 2);
        m.check().unwrap();
        assert_eq!(m.dims, vec![2, 1]);
        let u = t.category.morphism_index("a>b").unwrap();
        assert_eq!(m.actions[u], Matrix::from_rows(2, 1, 2, &[vec![1, 1]]));
    }

    #[test]
    fn families_count_maps_of_set_diagrams() {
        let t = walking_orbit();
        let m = ModuleDiagram::free_on(&t, 2);
        let fam = FamilySpace::new(&t, &m);
        let ux = m.underlying().unwrap();
        let maps = crate::fincat::enumerate_maps(&t, &ux, 1 << 12);
        assert_eq!(1usize << fam.dim(), maps.len());
    }

    #[test]
    fn underlying_of_constant_line_has_two_orbits() {
        let c = Arc::new(FiniteCategory::walking_arrow());
        let m = ModuleDiagram::constant(c, 2, 1);
        let u = m.underlying().unwrap();
        assert_eq!(crate::fincat::colim_set(&u).size(), 2);
        let o = orbit_over_point(&u, 1).unwrap();
        assert_eq!(o.diagram.sizes(), vec![1, 1]);
    }
}
