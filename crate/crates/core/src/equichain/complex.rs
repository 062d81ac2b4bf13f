//! Bounded chain complexes of module diagrams, chain maps, and homology.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::module::{check_module_map, FamilySpace, ModuleDiagram};
use crate::error::{Error, Result};
use crate::fincat::{FiniteCategory, SetDiagram};
use crate::linalg::Matrix;

/// A chain complex of `D`-diagrams concentrated in degrees `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ChainRepr", into = "ChainRepr")]
pub struct ChainDiagram {
    category: Arc<FiniteCategory>,
    p: u32,
    lo: i64,
    modules: Vec<ModuleDiagram>,
    /// `differentials[k][o]` is `d: X_{lo+k+1}(o) -> X_{lo+k}(o)`.
    differentials: Vec<Vec<Matrix>>,
}

#[derive(Serialize, Deserialize)]
struct ChainRepr {
    category: FiniteCategory,
    p: u32,
    lo: i64,
    degrees: Vec<DegreeRepr>,
    differentials: Vec<Vec<Matrix>>,
}

#[derive(Serialize, Deserialize)]
struct DegreeRepr {
    dims: Vec<usize>,
    actions: Vec<Matrix>,
}

impl TryFrom<ChainRepr> for ChainDiagram {
    type Error = Error;

    fn try_from(r: ChainRepr) -> Result<Self> {
        let category = Arc::new(r.category);
        let modules = r
            .degrees
            .into_iter()
            .map(|d| ModuleDiagram::new(category.clone(), r.p, d.dims, d.actions))
            .collect::<Result<Vec<_>>>()?;
        ChainDiagram::new(category, r.p, r.lo, modules, r.differentials)
    }
}

impl From<ChainDiagram> for ChainRepr {
    fn from(c: ChainDiagram) -> Self {
        ChainRepr {
            category: (*c.category).clone(),
            p: c.p,
            lo: c.lo,
            degrees: c.modules.into_iter().map(|m| DegreeRepr { dims: m.dims, actions: m.actions }).collect(),
            differentials: c.differentials,
        }
    }
}

impl ChainDiagram {
    pub fn new(
        category: Arc<FiniteCategory>,
        p: u32,
        lo: i64,
        modules: Vec<ModuleDiagram>,
        differentials: Vec<Vec<Matrix>>,
    ) -> Result<Self> {
        if modules.is_empty() {
            return Err(Error::Shape("a complex needs at least one degree".into()));
        }
        if differentials.len() + 1 != modules.len() {
            return Err(Error::Shape("expected one differential between consecutive degrees".into()));
        }
        for m in &modules {
            if m.p != p || *m.category != *category {
                return Err(Error::MismatchedBases);
            }
            m.check()?;
        }
        let c = ChainDiagram { category, p, lo, modules, differentials };
        c.check()?;
        Ok(c)
    }

    pub fn zero(category: Arc<FiniteCategory>, p: u32, lo: i64, hi: i64) -> Self {
        let n = (hi - lo + 1).max(1) as usize;
        let no = category.n_objects();
        let modules = vec![ModuleDiagram::zero(category.clone(), p); n];
        let differentials = vec![vec![Matrix::zeros(p, 0, 0); no]; n - 1];
        ChainDiagram { category, p, lo, modules, differentials }
    }

    /// The constant diagram on a complex of vector spaces: identity actions
    /// everywhere. `differentials[k]` maps degree `lo + k + 1` to `lo + k`.
    pub fn constant(category: Arc<FiniteCategory>, p: u32, lo: i64, dims: &[usize], differentials: &[Matrix]) -> Result<Self> {
        let modules = dims.iter().map(|&d| ModuleDiagram::constant(category.clone(), p, d)).collect();
        let no = category.n_objects();
        let ds = differentials.iter().map(|m| vec![m.clone(); no]).collect();
        Self::new(category, p, lo, modules, ds)
    }

    /// `module` concentrated in degree `degree`, inside the range `lo..=hi`.
    pub fn sphere(module: &ModuleDiagram, degree: i64, lo: i64, hi: i64) -> Self {
        let mut c = Self::zero(module.category.clone(), module.p, lo, hi);
        if (lo..=hi).contains(&degree) {
            c.modules[(degree - lo) as usize] = module.clone();
            c.refresh_differential_shapes();
        }
        c
    }

    /// `module` in degrees `n` and `n - 1` with identity differential,
    /// inside `lo..=hi`. Parts outside the range are dropped.
    pub fn disk(module: &ModuleDiagram, n: i64, lo: i64, hi: i64) -> Self {
        let mut c = Self::zero(module.category.clone(), module.p, lo, hi);
        for k in [n, n - 1] {
            if (lo..=hi).contains(&k) {
                c.modules[(k - lo) as usize] = module.clone();
            }
        }
        c.refresh_differential_shapes();
        if (lo..=hi).contains(&n) && (lo..=hi).contains(&(n - 1)) {
            let k = (n - 1 - lo) as usize;
            c.differentials[k] = module.dims.iter().map(|&d| Matrix::identity(module.p, d)).collect();
        }
        c
    }

    fn refresh_differential_shapes(&mut self) {
        for k in 0..self.differentials.len() {
            for o in 0..self.category.n_objects() {
                let want = (self.modules[k].dims[o], self.modules[k + 1].dims[o]);
                if self.differentials[k][o].shape() != want {
                    self.differentials[k][o] = Matrix::zeros(self.p, want.0, want.1);
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        let no = self.category.n_objects();
        for (k, ds) in self.differentials.iter().enumerate() {
            if ds.len() != no {
                return Err(Error::Shape("differential has wrong number of components".into()));
            }
            check_module_map(&self.modules[k + 1], &self.modules[k], ds)
                .map_err(|e| Error::InvalidDiagram(format!("differential out of degree {}: {e}", self.lo + k as i64 + 1)))?;
        }
        for k in 1..self.differentials.len() {
            for o in 0..no {
                if !self.differentials[k - 1][o].mul(&self.differentials[k][o]).is_zero() {
                    return Err(Error::InvalidDiagram(format!(
                        "d∘d is nonzero out of degree {}",
                        self.lo + k as i64 + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn category(&self) -> &Arc<FiniteCategory> {
        &self.category
    }
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.lo + self.modules.len() as i64 - 1
    }
    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi()
    }
    pub fn n_objects(&self) -> usize {
        self.category.n_objects()
    }

    pub fn module(&self, n: i64) -> Option<&ModuleDiagram> {
        if (self.lo..=self.hi()).contains(&n) {
            Some(&self.modules[(n - self.lo) as usize])
        } else {
            None
        }
    }

    /// The module in degree `n`, zero outside the range.
    pub fn module_or_zero(&self, n: i64) -> ModuleDiagram {
        self.module(n).cloned().unwrap_or_else(|| ModuleDiagram::zero(self.category.clone(), self.p))
    }

    pub fn dim(&self, n: i64, o: usize) -> usize {
        self.module(n).map_or(0, |m| m.dims[o])
    }

    pub fn total_dim(&self) -> usize {
        self.modules.iter().map(|m| m.dims.iter().sum::<usize>()).sum()
    }

    /// `d: X_n(o) -> X_{n-1}(o)`, zero when either degree is out of range.
    pub fn d(&self, n: i64, o: usize) -> Matrix {
        if n > self.lo && n <= self.hi() {
            self.differentials[(n - 1 - self.lo) as usize][o].clone()
        } else {
            Matrix::zeros(self.p, self.dim(n - 1, o), self.dim(n, o))
        }
    }

    pub fn action(&self, n: i64, m: usize) -> Matrix {
        match self.module(n) {
            Some(md) => md.actions[m].clone(),
            None => Matrix::zeros(self.p, 0, 0),
        }
    }

    /// The same complex viewed in a wider range.
    pub fn padded(&self, lo: i64, hi: i64) -> Result<ChainDiagram> {
        for n in self.degrees() {
            if !(lo..=hi).contains(&n) && !self.module(n).unwrap().is_zero() {
                return Err(Error::Precondition(format!("degree {n} is nonzero but outside {lo}..={hi}")));
            }
        }
        let modules: Vec<ModuleDiagram> = (lo..=hi).map(|n| self.module_or_zero(n)).collect();
        let differentials = (lo + 1..=hi)
            .map(|n| (0..self.n_objects()).map(|o| self.d(n, o)).collect())
            .collect();
        Ok(ChainDiagram { category: self.category.clone(), p: self.p, lo, modules, differentials })
    }

    pub fn direct_sum(&self, other: &ChainDiagram) -> Result<ChainDiagram> {
        if self.degrees() != other.degrees() {
            return Err(Error::Shape("direct sum of complexes over different degree ranges".into()));
        }
        let modules = self.modules.iter().zip(&other.modules).map(|(a, b)| a.direct_sum(b)).collect();
        let differentials = self
            .differentials
            .iter()
            .zip(&other.differentials)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.block_diag(y)).collect())
            .collect();
        Ok(ChainDiagram { category: self.category.clone(), p: self.p, lo: self.lo, modules, differentials })
    }

    /// Builds a complex from raw parts with no checks; for internal constructions
    /// that are correct by design and verified separately in tests.
    pub(crate) fn from_parts_unchecked(
        category: Arc<FiniteCategory>,
        p: u32,
        lo: i64,
        modules: Vec<ModuleDiagram>,
        differentials: Vec<Vec<Matrix>>,
    ) -> Self {
        ChainDiagram { category, p, lo, modules, differentials }
    }

    /// Objectwise homology dimensions, `[degree index][object]`.
    pub fn homology_dims(&self) -> Vec<Vec<usize>> {
        self.degrees()
            .map(|n| {
                (0..self.n_objects())
                    .map(|o| {
                        let cycles = self.dim(n, o) - self.d(n, o).rank();
                        cycles - self.d(n + 1, o).rank()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.homology_dims().iter().flatten().all(|&h| h == 0)
    }
}

/// A chain map between complexes over the same degree range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMap {
    pub source: Arc<ChainDiagram>,
    pub target: Arc<ChainDiagram>,
    /// `components[k][o]` acts in degree `lo + k` at object `o`.
    pub components: Vec<Vec<Matrix>>,
}

impl ChainMap {
    pub fn new(source: Arc<ChainDiagram>, target: Arc<ChainDiagram>, components: Vec<Vec<Matrix>>) -> Result<Self> {
        let m = ChainMap { source, target, components };
        m.check()?;
        Ok(m)
    }

    pub(crate) fn unchecked(source: Arc<ChainDiagram>, target: Arc<ChainDiagram>, components: Vec<Vec<Matrix>>) -> Self {
        ChainMap { source, target, components }
    }

    pub fn zero(source: Arc<ChainDiagram>, target: Arc<ChainDiagram>) -> Self {
        let components = source
            .degrees()
            .map(|n| (0..source.n_objects()).map(|o| Matrix::zeros(source.p(), target.dim(n, o), source.dim(n, o))).collect())
            .collect();
        ChainMap { source, target, components }
    }

    pub fn identity(x: Arc<ChainDiagram>) -> Self {
        let components = x
            .degrees()
            .map(|n| (0..x.n_objects()).map(|o| Matrix::identity(x.p(), x.dim(n, o))).collect())
            .collect();
        ChainMap { source: x.clone(), target: x, components }
    }

    pub fn lo(&self) -> i64 {
        self.source.lo()
    }

    pub fn comp(&self, n: i64, o: usize) -> &Matrix {
        &self.components[(n - self.lo()) as usize][o]
    }

    pub fn check(&self) -> Result<()> {
        let (s, t) = (&self.source, &self.target);
        if s.degrees() != t.degrees() {
            return Err(Error::Shape("chain map between different degree ranges".into()));
        }
        if s.category() != t.category() || s.p() != t.p() {
            return Err(Error::MismatchedBases);
        }
        if self.components.len() != s.degrees().count() {
            return Err(Error::Shape("chain map has wrong number of degrees".into()));
        }
        for n in s.degrees() {
            check_module_map(s.module(n).unwrap(), t.module(n).unwrap(), &self.components[(n - s.lo()) as usize])
                .map_err(|e| Error::InvalidDiagram(format!("degree {n}: {e}")))?;
            if n > s.lo() {
                for o in 0..s.n_objects() {
                    if t.d(n, o).mul(self.comp(n, o)) != self.comp(n - 1, o).mul(&s.d(n, o)) {
                        return Err(Error::InvalidDiagram(format!("map does not commute with d in degree {n}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `self ∘ f`.
    pub fn after(&self, f: &ChainMap) -> Result<ChainMap> {
        if f.target != self.source {
            return Err(Error::EndpointMismatch("composite of chain maps".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&f.components)
            .map(|(g, h)| g.iter().zip(h).map(|(a, b)| a.mul(b)).collect())
            .collect();
        Ok(ChainMap { source: f.source.clone(), target: self.target.clone(), components })
    }

    pub fn plus(&self, other: &ChainMap) -> Result<ChainMap> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::EndpointMismatch("sum of chain maps".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(g, h)| g.iter().zip(h).map(|(a, b)| a.add(b)).collect())
            .collect();
        Ok(ChainMap { source: self.source.clone(), target: self.target.clone(), components })
    }

    pub fn neg(&self) -> ChainMap {
        let components = self.components.iter().map(|row| row.iter().map(|m| m.neg()).collect()).collect();
        ChainMap { source: self.source.clone(), target: self.target.clone(), components }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().all(|m| m.is_zero())
    }

    /// Degreewise and objectwise surjective.
    pub fn is_surjective(&self) -> bool {
        self.source.degrees().all(|n| {
            (0..self.source.n_objects()).all(|o| self.comp(n, o).rank() == self.target.dim(n, o))
        })
    }

    pub fn is_injective(&self) -> bool {
        self.source.degrees().all(|n| {
            (0..self.source.n_objects()).all(|o| self.comp(n, o).rank() == self.source.dim(n, o))
        })
    }

    /// The mapping cone, objectwise: `C_n = X_{n-1} ⊕ Y_n`, `d(x, y) = (-dx, fx + dy)`.
    pub fn cone_is_acyclic(&self) -> bool {
        let (x, y) = (&self.source, &self.target);
        let p = x.p();
        let lo = x.lo();
        let hi = x.hi() + 1;
        for o in 0..x.n_objects() {
            let dim = |n: i64| x.dim(n - 1, o) + y.dim(n, o);
            let cone_d = |n: i64| -> Matrix {
                // C_n -> C_{n-1}
                let mut m = Matrix::zeros(p, dim(n - 1), dim(n));
                let (xa, ya) = (x.dim(n - 1, o), y.dim(n, o));
                let (xb, yb) = (x.dim(n - 2, o), y.dim(n - 1, o));
                debug_assert_eq!(m.shape(), (xb + yb, xa + ya));
                m.paste(0, 0, &x.d(n - 1, o).neg());
                if (x.lo()..=x.hi()).contains(&(n - 1)) {
                    m.paste(xb, 0, self.comp(n - 1, o));
                }
                m.paste(xb, xa, &y.d(n, o));
                m
            };
            for n in lo..=hi {
                let cycles = dim(n) - cone_d(n).rank();
                if cycles != cone_d(n + 1).rank() {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_quasi_isomorphism(&self) -> bool {
        self.cone_is_acyclic()
    }
}

/// A complex of plain vector spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorComplex {
    pub p: u32,
    pub lo: i64,
    pub dims: Vec<usize>,
    /// `differentials[k]: V_{lo+k+1} -> V_{lo+k}`.
    pub differentials: Vec<Matrix>,
}

impl VectorComplex {
    pub fn d(&self, n: i64) -> Option<&Matrix> {
        let k = n - 1 - self.lo;
        if k >= 0 {
            self.differentials.get(k as usize)
        } else {
            None
        }
    }

    pub fn homology_dims(&self) -> Vec<usize> {
        (0..self.dims.len())
            .map(|k| {
                let n = self.lo + k as i64;
                let out = self.d(n).map_or(0, |m| m.rank());
                let inc = self.d(n + 1).map_or(0, |m| m.rank());
                self.dims[k] - out - inc
            })
            .collect()
    }
}

/// The complex `hom(P_T, X)`: in each degree the natural families
/// `T -> U X_n`, with the differential induced by `d`.
pub fn hom_orbit_complex(t: &SetDiagram, x: &ChainDiagram) -> Result<VectorComplex> {
    if **x.category() != *t.category {
        return Err(Error::MismatchedBases);
    }
    let p = x.p();
    let spaces: Vec<FamilySpace> = x.degrees().map(|n| FamilySpace::new(t, x.module(n).unwrap())).collect();
    let basis_matrix = |fs: &FamilySpace| Matrix::from_columns(p, fs.len, &fs.basis);
    let mut differentials = Vec::new();
    for n in x.lo() + 1..=x.hi() {
        let k = (n - x.lo()) as usize;
        let dn: Vec<Matrix> = (0..x.n_objects()).map(|o| x.d(n, o)).collect();
        let pushed = super::module::push_families(&spaces[k].basis, &spaces[k], &x.module(n).unwrap().dims, &dn, &spaces[k - 1]);
        let target = basis_matrix(&spaces[k - 1]);
        let image = Matrix::from_columns(p, spaces[k - 1].len, &pushed);
        let coords = target
            .solve(&image)
            .ok_or_else(|| Error::Internal("image of a natural family is not natural".into()))?;
        differentials.push(coords);
    }
    Ok(VectorComplex { p, lo: x.lo(), dims: spaces.iter().map(|s| s.dim()).collect(), differentials })
}
