//! The single-file JSON workspace: named categories, set diagrams, complexes,
//! chain maps, pro-objects and pro-maps, plus run configuration.
//!
//! Documents refer to each other by name. Matrices are written as rows of
//! integers and reduced mod `p`, so one workspace can be run at several primes
//! when its entries allow it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use soa_core::equichain::{ChainDiagram, ChainMap, ModuleDiagram};
use soa_core::procalc::{CofilteringIndex, Complexes, FinSets, ProMap, ProObject, Representative};
use soa_core::soa::finset::FinMap;
use soa_core::soa::ProbeMode;
use soa_core::{FiniteCategory, Matrix, SetDiagram};

pub const SCHEMA_VERSION: u32 = 1;

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or unresolvable input.
    Schema(String),
    /// Well-formed input violating a law or an operation's precondition.
    Precondition(String),
}

impl Failure {
    pub fn from_core(e: soa_core::Error) -> Self {
        use soa_core::Error as E;
        match e {
            E::Shape(m) => Failure::Schema(format!("shape mismatch: {m}")),
            E::EndpointMismatch(m) => Failure::Schema(format!("endpoint mismatch: {m}")),
            other => Failure::Precondition(other.to_string()),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Precondition(m) => m,
        }
    }
}

pub type Resolved<T> = std::result::Result<T, Failure>;

fn schema<T>(msg: impl Into<String>) -> Resolved<T> {
    Err(Failure::Schema(msg.into()))
}

trait CoreExt<T> {
    fn core(self) -> Resolved<T>;
}

impl<T> CoreExt<T> for soa_core::Result<T> {
    fn core(self) -> Resolved<T> {
        self.map_err(Failure::from_core)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub p: Option<u32>,
    pub budget: Option<usize>,
    pub probes: Option<ProbeMode>,
    pub seed: Option<u64>,
}

/// Either a named built-in shape or an explicit composition table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CategoryDoc {
    Builtin { builtin: String },
    Explicit(FiniteCategory),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramDoc {
    pub category: String,
    pub sets: Vec<Vec<String>>,
    /// Image indices per non-identity morphism, keyed by morphism name.
    #[serde(default)]
    pub actions: BTreeMap<String, Vec<usize>>,
}

pub type Rows = Vec<Vec<i64>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeDoc {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub actions: BTreeMap<String, Rows>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub category: String,
    pub lo: i64,
    pub degrees: Vec<DegreeDoc>,
    /// `differentials[k][o]`: `d` from degree `lo + k + 1` to `lo + k` at object `o`.
    /// Omitted entries are zero.
    #[serde(default)]
    pub differentials: Vec<Vec<Rows>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub source: String,
    pub target: String,
    /// `components[k][o]` in degree `lo + k`.
    pub components: Vec<Vec<Rows>>,
}

/// A level of a pro-object: a finite set by size, or a named complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelDoc {
    Set(usize),
    Complex(String),
}

/// A bonding or component map: a function table, or a named chain map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArrowDoc {
    Function(Vec<usize>),
    Chain(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProObjectDoc {
    pub levels: Vec<LevelDoc>,
    /// Index category; omitted for towers given by `down`.
    pub index: Option<String>,
    /// Bonding maps per non-identity morphism of `index`.
    #[serde(default)]
    pub bonding: BTreeMap<String, ArrowDoc>,
    /// For towers: `down[k]` is the map from level `k + 1` to level `k`.
    pub down: Option<Vec<ArrowDoc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProMapDoc {
    pub source: String,
    pub target: String,
    /// Per target level, the source level (by object name) it is read from.
    pub theta: Vec<String>,
    pub maps: Vec<ArrowDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub schema_version: u32,
    #[serde(default)]
    pub config: Config,
    #[serde(default)]
    pub categories: BTreeMap<String, CategoryDoc>,
    #[serde(default)]
    pub diagrams: BTreeMap<String, DiagramDoc>,
    #[serde(default)]
    pub complexes: BTreeMap<String, ComplexDoc>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapDoc>,
    #[serde(default)]
    pub pro_objects: BTreeMap<String, ProObjectDoc>,
    #[serde(default)]
    pub pro_maps: BTreeMap<String, ProMapDoc>,
}

/// A pro-object over one of the two supported bases.
#[derive(Clone, Debug)]
pub enum AnyPro {
    Sets(Arc<ProObject<FinSets>>),
    Complexes(Arc<ProObject<Complexes>>),
}

#[derive(Clone, Debug)]
pub enum AnyProMap {
    Sets(ProMap<FinSets>),
    Complexes(ProMap<Complexes>),
}

pub fn parse(text: &str) -> Resolved<Workspace> {
    let ws: Workspace = serde_json::from_str(text).map_err(|e| Failure::Schema(format!("workspace: {e}")))?;
    if ws.schema_version != SCHEMA_VERSION {
        return schema(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", ws.schema_version));
    }
    Ok(ws)
}

fn matrix(p: u32, rows: usize, cols: usize, doc: &Rows, what: &str) -> Resolved<Matrix> {
    if doc.len() != rows {
        return schema(format!("{what}: expected {rows} rows, found {}", doc.len()));
    }
    let mut m = Matrix::zeros(p, rows, cols);
    for (r, row) in doc.iter().enumerate() {
        if row.len() != cols {
            return schema(format!("{what}: row {r} has {} entries, expected {cols}", row.len()));
        }
        for (c, &x) in row.iter().enumerate() {
            m.set(r, c, x.rem_euclid(p as i64) as u32);
        }
    }
    Ok(m)
}

fn lookup<'a, T>(table: &'a BTreeMap<String, T>, kind: &str, name: &str) -> Resolved<&'a T> {
    table.get(name).ok_or_else(|| Failure::Schema(format!("unknown {kind} {name:?}")))
}

fn morphism(c: &FiniteCategory, name: &str, owner: &str) -> Resolved<usize> {
    c.morphism_index(name).ok_or_else(|| Failure::Schema(format!("{owner}: unknown morphism {name:?}")))
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

impl Workspace {
    pub fn p(&self) -> Resolved<u32> {
        let p = self.config.p.unwrap_or(2);
        if !is_prime(p) {
            return schema(format!("p = {p} is not prime"));
        }
        Ok(p)
    }

    pub fn category(&self, name: &str) -> Resolved<Arc<FiniteCategory>> {
        let cat = match lookup(&self.categories, "category", name)? {
            CategoryDoc::Explicit(c) => c.clone(),
            CategoryDoc::Builtin { builtin } => match builtin.as_str() {
                "terminal" => FiniteCategory::terminal(),
                "walking-arrow" => FiniteCategory::walking_arrow(),
                "span" => FiniteCategory::span(),
                other => match other.strip_prefix("tower-").and_then(|n| n.parse::<usize>().ok()) {
                    Some(n) if n >= 1 => FiniteCategory::tower(n),
                    _ => return schema(format!("category {name:?}: unknown builtin {other:?}")),
                },
            },
        };
        let report = cat.validate();
        if !report.is_ok() {
            let first = &report.violations[0];
            return Err(Failure::Precondition(format!("category {name:?} breaks {}: {:?}", first.law, first.witness)));
        }
        Ok(Arc::new(cat))
    }

    pub fn diagram(&self, name: &str) -> Resolved<SetDiagram> {
        let doc = lookup(&self.diagrams, "diagram", name)?;
        let cat = self.category(&doc.category)?;
        if doc.sets.len() != cat.n_objects() {
            return schema(format!("diagram {name:?}: {} sets for {} objects", doc.sets.len(), cat.n_objects()));
        }
        let mut actions: Vec<Vec<usize>> =
            (0..cat.n_morphisms()).map(|m| (0..doc.sets[cat.source(m)].len()).collect()).collect();
        for (mname, table) in &doc.actions {
            let m = morphism(&cat, mname, name)?;
            actions[m] = table.clone();
        }
        for m in 0..cat.n_morphisms() {
            if !cat.is_identity(m) && !doc.actions.contains_key(&cat.morphisms()[m].name) {
                return schema(format!("diagram {name:?}: no action for {:?}", cat.morphisms()[m].name));
            }
        }
        let sizes: Vec<usize> = doc.sets.iter().map(|s| s.len()).collect();
        let mut d = SetDiagram::new(cat, &sizes, actions).core()?;
        d.sets = doc.sets.clone();
        Ok(d)
    }

    pub fn complex(&self, name: &str) -> Resolved<Arc<ChainDiagram>> {
        let doc = lookup(&self.complexes, "complex", name)?;
        let cat = self.category(&doc.category)?;
        let p = self.p()?;
        let no = cat.n_objects();
        if doc.degrees.is_empty() {
            return schema(format!("complex {name:?} has no degrees"));
        }
        let mut modules = Vec::new();
        for (k, deg) in doc.degrees.iter().enumerate() {
            let what = format!("complex {name:?} degree {}", doc.lo + k as i64);
            if deg.dims.len() != no {
                return schema(format!("{what}: {} dims for {no} objects", deg.dims.len()));
            }
            let mut actions = Vec::new();
            for m in 0..cat.n_morphisms() {
                let (s, t) = (cat.source(m), cat.target(m));
                let mname = &cat.morphisms()[m].name;
                actions.push(match deg.actions.get(mname) {
                    Some(rows) => matrix(p, deg.dims[t], deg.dims[s], rows, &format!("{what} action {mname}"))?,
                    None if cat.is_identity(m) => Matrix::identity(p, deg.dims[s]),
                    None => return schema(format!("{what}: no action for {mname:?}")),
                });
            }
            for a in deg.actions.keys() {
                morphism(&cat, a, &what)?;
            }
            modules.push(ModuleDiagram::new(cat.clone(), p, deg.dims.clone(), actions).core()?);
        }
        if doc.differentials.len() > doc.degrees.len() - 1 {
            return schema(format!("complex {name:?}: more differentials than degree gaps"));
        }
        let mut differentials = Vec::new();
        for k in 0..doc.degrees.len() - 1 {
            let (lower, upper) = (&doc.degrees[k].dims, &doc.degrees[k + 1].dims);
            let row = match doc.differentials.get(k) {
                None => (0..no).map(|o| Matrix::zeros(p, lower[o], upper[o])).collect(),
                Some(per_object) => {
                    if per_object.len() != no {
                        return schema(format!("complex {name:?}: differential {k} has {} objects", per_object.len()));
                    }
                    (0..no)
                        .map(|o| matrix(p, lower[o], upper[o], &per_object[o], &format!("complex {name:?} differential {k}")))
                        .collect::<Resolved<Vec<_>>>()?
                }
            };
            differentials.push(row);
        }
        Ok(Arc::new(ChainDiagram::new(cat, p, doc.lo, modules, differentials).core()?))
    }

    pub fn map(&self, name: &str) -> Resolved<ChainMap> {
        let doc = lookup(&self.maps, "map", name)?;
        let (s, t) = (self.complex(&doc.source)?, self.complex(&doc.target)?);
        if s.lo() != t.lo() || s.hi() != t.hi() || s.category() != t.category() {
            return schema(format!("map {name:?}: source and target live over different ranges or bases"));
        }
        if doc.components.len() != s.degrees().count() {
            return schema(format!("map {name:?}: {} degrees of components", doc.components.len()));
        }
        let p = s.p();
        let components = s
            .degrees()
            .zip(&doc.components)
            .map(|(n, per_object)| {
                if per_object.len() != s.n_objects() {
                    return schema(format!("map {name:?} degree {n}: wrong number of objects"));
                }
                (0..s.n_objects())
                    .map(|o| matrix(p, t.dim(n, o), s.dim(n, o), &per_object[o], &format!("map {name:?} degree {n}")))
                    .collect()
            })
            .collect::<Resolved<Vec<Vec<Matrix>>>>()?;
        ChainMap::new(s, t, components).core()
    }

    fn set_arrow(&self, a: &ArrowDoc, source: usize, target: usize, owner: &str) -> Resolved<FinMap> {
        let ArrowDoc::Function(values) = a else {
            return schema(format!("{owner}: expected a function table between finite sets"));
        };
        if values.len() != source || values.iter().any(|&v| v >= target) {
            return schema(format!("{owner}: {values:?} is not a function {source} -> {target}"));
        }
        Ok(FinMap::new(source, target, values.clone()))
    }

    fn chain_arrow(&self, a: &ArrowDoc, source: &Arc<ChainDiagram>, target: &Arc<ChainDiagram>, owner: &str) -> Resolved<ChainMap> {
        let ArrowDoc::Chain(name) = a else {
            return schema(format!("{owner}: expected the name of a chain map"));
        };
        let m = self.map(name)?;
        if &m.source != source || &m.target != target {
            return schema(format!("{owner}: map {name:?} has the wrong endpoints"));
        }
        Ok(m)
    }

    pub fn pro_object(&self, name: &str) -> Resolved<AnyPro> {
        let doc = lookup(&self.pro_objects, "pro-object", name)?;
        if doc.levels.is_empty() {
            return schema(format!("pro-object {name:?} has no levels"));
        }
        let (index, bonding): (Arc<FiniteCategory>, Vec<Option<&ArrowDoc>>) = match (&doc.index, &doc.down) {
            (Some(iname), None) => {
                let c = self.category(iname)?;
                for b in doc.bonding.keys() {
                    morphism(&c, b, name)?;
                }
                let arrows = c.morphisms().iter().map(|m| doc.bonding.get(&m.name)).collect();
                (c, arrows)
            }
            (None, Some(down)) => {
                let n = doc.levels.len();
                if down.len() + 1 != n {
                    return schema(format!("pro-object {name:?}: {n} levels need {} down maps", n - 1));
                }
                if !doc.bonding.is_empty() {
                    return schema(format!("pro-object {name:?}: give either bonding or down"));
                }
                // Only the one-step maps are given; longer composites are filled in by the tower constructor.
                (Arc::new(FiniteCategory::tower(n)), Vec::new())
            }
            _ => return schema(format!("pro-object {name:?}: exactly one of index and down is required")),
        };
        if index.n_objects() != doc.levels.len() {
            return schema(format!("pro-object {name:?}: {} levels for {} index objects", doc.levels.len(), index.n_objects()));
        }
        let cofiltering = || CofilteringIndex::new(index.clone()).core();
        let owner = |m: usize| format!("pro-object {name:?} bonding {:?}", index.morphisms()[m].name);
        let missing = |m: usize| Failure::Schema(format!("{}: missing", owner(m)));
        match &doc.levels[0] {
            LevelDoc::Set(_) => {
                let sizes = doc
                    .levels
                    .iter()
                    .map(|l| match l {
                        LevelDoc::Set(n) => Ok(*n),
                        LevelDoc::Complex(_) => schema(format!("pro-object {name:?} mixes sets and complexes")),
                    })
                    .collect::<Resolved<Vec<usize>>>()?;
                let x = if let Some(down) = &doc.down {
                    let maps = down
                        .iter()
                        .enumerate()
                        .map(|(k, a)| self.set_arrow(a, sizes[k + 1], sizes[k], &format!("pro-object {name:?} down {k}")))
                        .collect::<Resolved<Vec<_>>>()?;
                    ProObject::tower(&FinSets, sizes, maps).core()?
                } else {
                    let maps = (0..index.n_morphisms())
                        .map(|m| {
                            let (s, t) = (sizes[index.source(m)], sizes[index.target(m)]);
                            match bonding[m] {
                                Some(a) => self.set_arrow(a, s, t, &owner(m)),
                                None if index.is_identity(m) => Ok(FinMap::identity(s)),
                                None => Err(missing(m)),
                            }
                        })
                        .collect::<Resolved<Vec<_>>>()?;
                    ProObject::new(&FinSets, cofiltering()?, sizes, maps).core()?
                };
                Ok(AnyPro::Sets(Arc::new(x)))
            }
            LevelDoc::Complex(_) => {
                let levels = doc
                    .levels
                    .iter()
                    .map(|l| match l {
                        LevelDoc::Complex(c) => self.complex(c),
                        LevelDoc::Set(_) => schema(format!("pro-object {name:?} mixes sets and complexes")),
                    })
                    .collect::<Resolved<Vec<_>>>()?;
                let x = if let Some(down) = &doc.down {
                    let maps = down
                        .iter()
                        .enumerate()
                        .map(|(k, a)| self.chain_arrow(a, &levels[k + 1], &levels[k], &format!("pro-object {name:?} down {k}")))
                        .collect::<Resolved<Vec<_>>>()?;
                    ProObject::tower(&Complexes, levels, maps).core()?
                } else {
                    let maps = (0..index.n_morphisms())
                        .map(|m| {
                            let (s, t) = (&levels[index.source(m)], &levels[index.target(m)]);
                            match bonding[m] {
                                Some(a) => self.chain_arrow(a, s, t, &owner(m)),
                                None if index.is_identity(m) => Ok(ChainMap::identity(s.clone())),
                                None => Err(missing(m)),
                            }
                        })
                        .collect::<Resolved<Vec<_>>>()?;
                    ProObject::new(&Complexes, cofiltering()?, levels, maps).core()?
                };
                Ok(AnyPro::Complexes(Arc::new(x)))
            }
        }
    }

    pub fn pro_map(&self, name: &str) -> Resolved<AnyProMap> {
        let doc = lookup(&self.pro_maps, "pro-map", name)?;
        let (source, target) = (self.pro_object(&doc.source)?, self.pro_object(&doc.target)?);
        let n_target = match &target {
            AnyPro::Sets(y) => y.n_levels(),
            AnyPro::Complexes(y) => y.n_levels(),
        };
        if doc.theta.len() != n_target || doc.maps.len() != n_target {
            return schema(format!("pro-map {name:?}: theta and maps need one entry per target level ({n_target})"));
        }
        let level = |idx: &CofilteringIndex, l: &str| {
            idx.category.object_index(l).ok_or_else(|| Failure::Schema(format!("pro-map {name:?}: unknown source level {l:?}")))
        };
        let owner = |k: usize| format!("pro-map {name:?} component {k}");
        match (source, target) {
            (AnyPro::Sets(x), AnyPro::Sets(y)) => {
                let theta = doc.theta.iter().map(|l| level(&x.index, l)).collect::<Resolved<Vec<_>>>()?;
                let maps = (0..n_target)
                    .map(|k| self.set_arrow(&doc.maps[k], x.levels[theta[k]], y.levels[k], &owner(k)))
                    .collect::<Resolved<Vec<_>>>()?;
                Ok(AnyProMap::Sets(ProMap::new(&FinSets, x, y, Representative { theta, maps }).core()?))
            }
            (AnyPro::Complexes(x), AnyPro::Complexes(y)) => {
                let theta = doc.theta.iter().map(|l| level(&x.index, l)).collect::<Resolved<Vec<_>>>()?;
                let maps = (0..n_target)
                    .map(|k| self.chain_arrow(&doc.maps[k], &x.levels[theta[k]], &y.levels[k], &owner(k)))
                    .collect::<Resolved<Vec<_>>>()?;
                Ok(AnyProMap::Complexes(ProMap::new(&Complexes, x, y, Representative { theta, maps }).core()?))
            }
            _ => schema(format!("pro-map {name:?}: source and target live over different bases")),
        }
    }
}
