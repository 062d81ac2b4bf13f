//! Finite categories, set-valued diagrams over them, and the colimit, fiber
//! and pullback constructions the rest of the crate is built on.
//!
//! Elements of a diagram are addressed by `(object, index)` pairs; that pair
//! ordering is also the canonical order used to pick class representatives.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub name: String,
    pub source: usize,
    pub target: usize,
}

/// A finite category presented by an explicit composition table.
///
/// The table is not validated on construction so that defective categories can
/// be represented and reported on; see [`FiniteCategory::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CategoryRepr", into = "CategoryRepr")]
pub struct FiniteCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identities: Vec<usize>,
    composition: BTreeMap<(usize, usize), usize>,
}

#[derive(Serialize, Deserialize)]
struct CategoryRepr {
    objects: Vec<String>,
    morphisms: Vec<MorphismRepr>,
    identities: Vec<[String; 2]>,
    /// Triples `[g, f, g∘f]` by morphism name.
    composition: Vec<[String; 3]>,
}

#[derive(Serialize, Deserialize)]
struct MorphismRepr {
    name: String,
    source: String,
    target: String,
}

impl TryFrom<CategoryRepr> for FiniteCategory {
    type Error = String;

    fn try_from(r: CategoryRepr) -> std::result::Result<Self, String> {
        let obj = |n: &str| {
            r.objects
                .iter()
                .position(|o| o == n)
                .ok_or_else(|| format!("unknown object {n:?}"))
        };
        let mut morphisms = Vec::new();
        for m in &r.morphisms {
            morphisms.push(Morphism {
                name: m.name.clone(),
                source: obj(&m.source)?,
                target: obj(&m.target)?,
            });
        }
        let mor = |n: &str| {
            morphisms
                .iter()
                .position(|m| m.name == n)
                .ok_or_else(|| format!("unknown morphism {n:?}"))
        };
        let mut identities = vec![usize::MAX; r.objects.len()];
        for [o, m] in &r.identities {
            identities[obj(o)?] = mor(m)?;
        }
        if let Some(o) = identities.iter().position(|&i| i == usize::MAX) {
            return Err(format!("object {:?} has no identity", r.objects[o]));
        }
        let mut composition = BTreeMap::new();
        for [g, f, gf] in &r.composition {
            composition.insert((mor(g)?, mor(f)?), mor(gf)?);
        }
        Ok(FiniteCategory { objects: r.objects, morphisms, identities, composition })
    }
}

impl From<FiniteCategory> for CategoryRepr {
    fn from(c: FiniteCategory) -> Self {
        let name = |m: usize| c.morphisms[m].name.clone();
        CategoryRepr {
            objects: c.objects.clone(),
            morphisms: c
                .morphisms
                .iter()
                .map(|m| MorphismRepr {
                    name: m.name.clone(),
                    source: c.objects[m.source].clone(),
                    target: c.objects[m.target].clone(),
                })
                .collect(),
            identities: c
                .identities
                .iter()
                .enumerate()
                .map(|(o, &m)| [c.objects[o].clone(), name(m)])
                .collect(),
            composition: c
                .composition
                .iter()
                .map(|(&(g, f), &gf)| [name(g), name(f), name(gf)])
                .collect(),
        }
    }
}

/// One violated law with the offending morphism names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub law: String,
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, law: &str, witness: Vec<String>) {
        self.violations.push(Violation { law: law.to_string(), witness });
    }
}

impl FiniteCategory {
    /// Builds a category from raw parts. Nothing is checked here.
    pub fn from_parts(
        objects: Vec<String>,
        morphisms: Vec<Morphism>,
        identities: Vec<usize>,
        composition: BTreeMap<(usize, usize), usize>,
    ) -> Self {
        FiniteCategory { objects, morphisms, identities, composition }
    }

    /// Builds a thin category from a reflexive, transitive relation:
    /// `arrow(i, j)` means there is exactly one morphism `i -> j`.
    pub fn from_preorder(names: &[&str], arrow: impl Fn(usize, usize) -> bool) -> Self {
        let n = names.len();
        let mut morphisms = Vec::new();
        let mut index = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || arrow(i, j) {
                    let name = if i == j {
                        format!("id_{}", names[i])
                    } else {
                        format!("{}>{}", names[i], names[j])
                    };
                    index.insert((i, j), morphisms.len());
                    morphisms.push(Morphism { name, source: i, target: j });
                }
            }
        }
        let identities = (0..n).map(|i| index[&(i, i)]).collect();
        let mut composition = BTreeMap::new();
        for (&(a, b), &f) in &index {
            for (&(b2, c), &g) in &index {
                if b == b2 {
                    if let Some(&gf) = index.get(&(a, c)) {
                        composition.insert((g, f), gf);
                    }
                }
            }
        }
        FiniteCategory {
            objects: names.iter().map(|s| s.to_string()).collect(),
            morphisms,
            identities,
            composition,
        }
    }

    /// The category with one object and only its identity.
    pub fn terminal() -> Self {
        Self::from_preorder(&["*"], |_, _| false)
    }

    /// `a -> b`.
    pub fn walking_arrow() -> Self {
        Self::from_preorder(&["a", "b"], |i, j| i == 0 && j == 1)
    }

    /// `l <- m -> r`.
    pub fn span() -> Self {
        Self::from_preorder(&["l", "m", "r"], |i, j| i == 1 && j != 1)
    }

    /// A truncated tower `N -> N-1 -> ... -> 0`, oriented as a pro-index:
    /// there is an arrow `i -> j` exactly when `i >= j`.
    pub fn tower(levels: usize) -> Self {
        let names: Vec<String> = (0..levels).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Self::from_preorder(&refs, |i, j| i >= j)
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }
    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }
    pub fn n_morphisms(&self) -> usize {
        self.morphisms.len()
    }
    pub fn identity(&self, object: usize) -> usize {
        self.identities[object]
    }
    pub fn source(&self, m: usize) -> usize {
        self.morphisms[m].source
    }
    pub fn target(&self, m: usize) -> usize {
        self.morphisms[m].target
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn morphism_index(&self, name: &str) -> Option<usize> {
        self.morphisms.iter().position(|m| m.name == name)
    }

    /// `g ∘ f`, if the table has an entry.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.composition.get(&(g, f)).copied()
    }

    /// Morphisms `a -> b`, in index order.
    pub fn hom(&self, a: usize, b: usize) -> Vec<usize> {
        (0..self.morphisms.len())
            .filter(|&m| self.morphisms[m].source == a && self.morphisms[m].target == b)
            .collect()
    }

    pub fn is_identity(&self, m: usize) -> bool {
        self.identities.get(self.morphisms[m].source) == Some(&m)
    }

    /// At most one morphism between any two objects.
    pub fn is_thin(&self) -> bool {
        (0..self.n_objects())
            .all(|a| (0..self.n_objects()).all(|b| self.hom(a, b).len() <= 1))
    }

    /// Thin and antisymmetric.
    pub fn is_poset(&self) -> bool {
        self.is_thin()
            && (0..self.n_objects()).all(|a| {
                (0..self.n_objects())
                    .all(|b| a == b || self.hom(a, b).is_empty() || self.hom(b, a).is_empty())
            })
    }

    /// Checks every category law and reports each violation with witnesses.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let name = |m: usize| self.morphisms[m].name.clone();
        let nm = self.morphisms.len();
        for m in &self.morphisms {
            if m.source >= self.objects.len() || m.target >= self.objects.len() {
                report.push("morphism endpoint out of range", vec![m.name.clone()]);
                return report;
            }
        }
        if self.identities.len() != self.objects.len() {
            report.push("identity table incomplete", vec![]);
            return report;
        }
        for (o, &i) in self.identities.iter().enumerate() {
            if i >= nm || self.morphisms[i].source != o || self.morphisms[i].target != o {
                report.push("identity has wrong endpoints", vec![self.objects[o].clone()]);
            }
        }
        for (&(g, f), &gf) in &self.composition {
            if g >= nm || f >= nm || gf >= nm {
                report.push("composition entry out of range", vec![]);
                continue;
            }
            if self.morphisms[f].target != self.morphisms[g].source {
                report.push("composition entry for non-composable pair", vec![name(g), name(f)]);
            } else if self.morphisms[gf].source != self.morphisms[f].source
                || self.morphisms[gf].target != self.morphisms[g].target
            {
                report.push("composite has wrong endpoints", vec![name(g), name(f), name(gf)]);
            }
        }
        let mut total = true;
        for f in 0..nm {
            for g in 0..nm {
                if self.morphisms[f].target == self.morphisms[g].source
                    && self.compose(g, f).is_none()
                {
                    report.push("composition not total", vec![name(g), name(f)]);
                    total = false;
                }
            }
        }
        if !total || !report.is_ok() {
            return report;
        }
        for f in 0..nm {
            let (s, t) = (self.morphisms[f].source, self.morphisms[f].target);
            if self.compose(self.identities[t], f) != Some(f) {
                report.push("left identity law", vec![name(f)]);
            }
            if self.compose(f, self.identities[s]) != Some(f) {
                report.push("right identity law", vec![name(f)]);
            }
        }
        for f in 0..nm {
            for g in self.hom_from(self.morphisms[f].target) {
                let gf = self.compose(g, f).unwrap();
                for h in self.hom_from(self.morphisms[g].target) {
                    let hg = self.compose(h, g).unwrap();
                    if self.compose(h, gf) != self.compose(hg, f) {
                        report.push("associativity", vec![name(h), name(g), name(f)]);
                    }
                }
            }
        }
        report
    }

    fn hom_from(&self, a: usize) -> Vec<usize> {
        (0..self.morphisms.len()).filter(|&m| self.morphisms[m].source == a).collect()
    }
}

/// A functor from a finite category to finite sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetDiagram {
    pub category: Arc<FiniteCategory>,
    /// Element labels per object; the element count is the list length.
    pub sets: Vec<Vec<String>>,
    /// For each morphism, the image index of every source element.
    pub actions: Vec<Vec<usize>>,
}

/// A family of functions between the values of two diagrams over one base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramMap {
    pub components: Vec<Vec<usize>>,
}

impl SetDiagram {
    /// Builds a diagram with numeric labels and checks functoriality.
    pub fn new(category: Arc<FiniteCategory>, sizes: &[usize], actions: Vec<Vec<usize>>) -> Result<Self> {
        let sets = sizes
            .iter()
            .map(|&n| (0..n).map(|i| i.to_string()).collect())
            .collect();
        let d = SetDiagram { category, sets, actions };
        d.check()?;
        Ok(d)
    }

    /// The diagram whose value is one point everywhere.
    pub fn constant_singleton(category: Arc<FiniteCategory>) -> Self {
        let n = category.n_objects();
        let m = category.n_morphisms();
        SetDiagram { category, sets: vec![vec!["*".into()]; n], actions: vec![vec![0]; m] }
    }

    pub fn size(&self, object: usize) -> usize {
        self.sets[object].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.len()).collect()
    }

    pub fn total_size(&self) -> usize {
        self.sets.iter().map(|s| s.len()).sum()
    }

    /// Applies morphism `m` to element `x` of its source.
    pub fn act(&self, m: usize, x: usize) -> usize {
        self.actions[m][x]
    }

    /// Checks shapes, identities and composition.
    pub fn check(&self) -> Result<()> {
        let c = &self.category;
        if self.sets.len() != c.n_objects() || self.actions.len() != c.n_morphisms() {
            return Err(Error::InvalidDiagram("value or action table has wrong length".into()));
        }
        for (m, act) in self.actions.iter().enumerate() {
            let (s, t) = (c.source(m), c.target(m));
            if act.len() != self.size(s) || act.iter().any(|&y| y >= self.size(t)) {
                return Err(Error::InvalidDiagram(format!(
                    "action of {} is not a function between the value sets",
                    c.morphisms()[m].name
                )));
            }
        }
        for o in 0..c.n_objects() {
            let id = c.identity(o);
            if self.actions[id].iter().enumerate().any(|(i, &y)| i != y) {
                return Err(Error::InvalidDiagram(format!("identity at {} acts nontrivially", c.objects()[o])));
            }
        }
        for f in 0..c.n_morphisms() {
            for g in 0..c.n_morphisms() {
                if c.target(f) != c.source(g) {
                    continue;
                }
                let gf = c.compose(g, f).ok_or_else(|| {
                    Error::InvalidCategory("composition not total".into())
                })?;
                for x in 0..self.size(c.source(f)) {
                    if self.act(g, self.act(f, x)) != self.act(gf, x) {
                        return Err(Error::InvalidDiagram(format!(
                            "action does not respect {} ∘ {}",
                            c.morphisms()[g].name,
                            c.morphisms()[f].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn flat_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.sets.len());
        let mut acc = 0;
        for s in &self.sets {
            off.push(acc);
            acc += s.len();
        }
        off
    }
}

impl DiagramMap {
    /// Checks that every naturality square commutes and the components fit.
    pub fn check(&self, source: &SetDiagram, target: &SetDiagram) -> Result<()> {
        if source.category != target.category {
            return Err(Error::MismatchedBases);
        }
        let c = &source.category;
        if self.components.len() != c.n_objects() {
            return Err(Error::InvalidDiagram("component table has wrong length".into()));
        }
        for o in 0..c.n_objects() {
            if self.components[o].len() != source.size(o)
                || self.components[o].iter().any(|&y| y >= target.size(o))
            {
                return Err(Error::InvalidDiagram(format!("component at {} is not a function", c.objects()[o])));
            }
        }
        for m in 0..c.n_morphisms() {
            let (s, t) = (c.source(m), c.target(m));
            for x in 0..source.size(s) {
                if self.components[t][source.act(m, x)] != target.act(m, self.components[s][x]) {
                    return Err(Error::InvalidDiagram(format!(
                        "naturality fails at {}",
                        c.morphisms()[m].name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn identity(d: &SetDiagram) -> Self {
        DiagramMap { components: d.sets.iter().map(|s| (0..s.len()).collect()).collect() }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &DiagramMap) -> Self {
        DiagramMap {
            components: first
                .components
                .iter()
                .zip(&self.components)
                .map(|(f, g)| f.iter().map(|&x| g[x]).collect())
                .collect(),
        }
    }
}

/// A colimit of a set diagram: the quotient of the disjoint union of all
/// values by the relation generated by `x ~ action(m)(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColimitPresentation {
    /// Canonical (least) representative of each class, as `(object, element)`.
    pub apex: Vec<(usize, usize)>,
    /// For each object and element, the apex point it is sent to.
    pub cocone: Vec<Vec<usize>>,
    /// The classes of the disjoint union, each listed in canonical order.
    pub classes: Vec<Vec<(usize, usize)>>,
}

impl ColimitPresentation {
    pub fn size(&self) -> usize {
        self.apex.len()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Computes the colimit of a set diagram with a union-find over the disjoint union.
pub fn colim_set(x: &SetDiagram) -> ColimitPresentation {
    let c = &x.category;
    let off = x.flat_offsets();
    let total = x.total_size();
    let mut parent: Vec<usize> = (0..total).collect();
    for m in 0..c.n_morphisms() {
        let (s, t) = (c.source(m), c.target(m));
        for e in 0..x.size(s) {
            let a = find(&mut parent, off[s] + e);
            let b = find(&mut parent, off[t] + x.act(m, e));
            if a != b {
                // Keep the smaller flat index as root so roots are least members.
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    let mut root_to_point = BTreeMap::new();
    let mut flat_to_elem = Vec::with_capacity(total);
    for (o, s) in x.sets.iter().enumerate() {
        for e in 0..s.len() {
            flat_to_elem.push((o, e));
        }
    }
    let mut apex = Vec::new();
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut cocone: Vec<Vec<usize>> = x.sets.iter().map(|s| vec![0; s.len()]).collect();
    for flat in 0..total {
        let r = find(&mut parent, flat);
        let point = *root_to_point.entry(r).or_insert_with(|| {
            apex.push(flat_to_elem[r]);
            classes.push(Vec::new());
            apex.len() - 1
        });
        let (o, e) = flat_to_elem[flat];
        cocone[o][e] = point;
        classes[point].push((o, e));
    }
    ColimitPresentation { apex, cocone, classes }
}

/// A diagram whose colimit is a single point, together with its embedding
/// into the ambient diagram it was cut out of.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    pub diagram: SetDiagram,
    /// Per object, the ambient index of each orbit element.
    pub projection: DiagramMap,
    /// The apex point of the ambient colimit this orbit lies over.
    pub point: usize,
}

/// True when the colimit of `x` is a singleton.
pub fn is_orbit(x: &SetDiagram) -> bool {
    colim_set(x).size() == 1
}

/// The fiber of the colimit cocone over `point`, with its inclusion.
pub fn orbit_over_point(x: &SetDiagram, point: usize) -> Result<Orbit> {
    let colim = colim_set(x);
    orbit_from_colimit(x, &colim, point)
}

/// Like [`orbit_over_point`] but reuses an already computed colimit.
pub fn orbit_from_colimit(x: &SetDiagram, colim: &ColimitPresentation, point: usize) -> Result<Orbit> {
    if point >= colim.size() {
        return Err(Error::PointNotInApex(point));
    }
    let c = &x.category;
    let members: Vec<Vec<usize>> = (0..c.n_objects())
        .map(|o| (0..x.size(o)).filter(|&e| colim.cocone[o][e] == point).collect())
        .collect();
    let local: Vec<BTreeMap<usize, usize>> = members
        .iter()
        .map(|m| m.iter().enumerate().map(|(i, &e)| (e, i)).collect())
        .collect();
    let actions = (0..c.n_morphisms())
        .map(|m| {
            let (s, t) = (c.source(m), c.target(m));
            members[s].iter().map(|&e| local[t][&x.act(m, e)]).collect()
        })
        .collect();
    let sets = members
        .iter()
        .enumerate()
        .map(|(o, m)| m.iter().map(|&e| x.sets[o][e].clone()).collect())
        .collect();
    Ok(Orbit {
        diagram: SetDiagram { category: x.category.clone(), sets, actions },
        projection: DiagramMap { components: members },
        point,
    })
}

/// All orbits of `x`, one per apex point, in apex order.
pub fn orbits(x: &SetDiagram) -> Vec<Orbit> {
    let colim = colim_set(x);
    (0..colim.size())
        .map(|p| orbit_from_colimit(x, &colim, p).expect("point in range"))
        .collect()
}

/// The subdiagram generated by some elements `(object, index)`, with its
/// inclusion into `x`.
pub fn generated_subdiagram(x: &SetDiagram, seeds: &[(usize, usize)]) -> (SetDiagram, DiagramMap) {
    let c = &x.category;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c.n_objects()];
    for &(o, e) in seeds {
        for m in 0..c.n_morphisms() {
            if c.source(m) == o {
                let t = c.target(m);
                let y = x.act(m, e);
                if !members[t].contains(&y) {
                    members[t].push(y);
                }
            }
        }
    }
    for ms in &mut members {
        ms.sort_unstable();
    }
    let sets = members.iter().enumerate().map(|(o, ms)| ms.iter().map(|&e| x.sets[o][e].clone()).collect()).collect();
    let actions = (0..c.n_morphisms())
        .map(|m| {
            let t = c.target(m);
            members[c.source(m)]
                .iter()
                .map(|&e| members[t].binary_search(&x.act(m, e)).expect("closed under actions"))
                .collect()
        })
        .collect();
    (SetDiagram { category: c.clone(), sets, actions }, DiagramMap { components: members })
}

/// The representable diagram `hom(c, -)`, labelled by morphism names.
pub fn representable(category: &Arc<FiniteCategory>, c: usize) -> SetDiagram {
    let homs: Vec<Vec<usize>> = (0..category.n_objects()).map(|o| category.hom(c, o)).collect();
    let sets = homs.iter().map(|h| h.iter().map(|&m| category.morphisms()[m].name.clone()).collect()).collect();
    let actions = (0..category.n_morphisms())
        .map(|m| {
            let t = category.target(m);
            homs[category.source(m)]
                .iter()
                .map(|&g| {
                    let mg = category.compose(m, g).expect("composable");
                    homs[t].iter().position(|&h| h == mg).expect("hom is closed under composition")
                })
                .collect()
        })
        .collect();
    SetDiagram { category: category.clone(), sets, actions }
}

/// Whether two diagrams are isomorphic, by backtracking over bijections.
pub fn isomorphic(a: &SetDiagram, b: &SetDiagram) -> bool {
    if a.category != b.category || a.sizes() != b.sizes() {
        return false;
    }
    let c = &a.category;
    let elems: Vec<(usize, usize)> = (0..c.n_objects()).flat_map(|o| (0..a.size(o)).map(move |e| (o, e))).collect();
    let mut assign: Vec<Vec<Option<usize>>> = a.sets.iter().map(|s| vec![None; s.len()]).collect();
    let mut used: Vec<Vec<bool>> = b.sets.iter().map(|s| vec![false; s.len()]).collect();
    fn ok(a: &SetDiagram, b: &SetDiagram, assign: &[Vec<Option<usize>>], o: usize, e: usize) -> bool {
        let c = &a.category;
        let v = assign[o][e].unwrap();
        (0..c.n_morphisms()).all(|m| {
            if c.source(m) == o {
                if let Some(w) = assign[c.target(m)][a.act(m, e)] {
                    if w != b.act(m, v) {
                        return false;
                    }
                }
            }
            if c.target(m) == o {
                let s = c.source(m);
                for x in 0..a.size(s) {
                    if a.act(m, x) == e {
                        if let Some(u) = assign[s][x] {
                            if b.act(m, u) != v {
                                return false;
                            }
                        }
                    }
                }
            }
            true
        })
    }
    fn go(
        k: usize,
        elems: &[(usize, usize)],
        a: &SetDiagram,
        b: &SetDiagram,
        assign: &mut Vec<Vec<Option<usize>>>,
        used: &mut Vec<Vec<bool>>,
    ) -> bool {
        let Some(&(o, e)) = elems.get(k) else {
            return true;
        };
        for v in 0..b.size(o) {
            if used[o][v] {
                continue;
            }
            assign[o][e] = Some(v);
            used[o][v] = true;
            if ok(a, b, assign, o, e) && go(k + 1, elems, a, b, assign, used) {
                return true;
            }
            used[o][v] = false;
            assign[o][e] = None;
        }
        false
    }
    go(0, &elems, a, b, &mut assign, &mut used)
}

/// An objectwise fiber product with its two projections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pullback {
    pub diagram: SetDiagram,
    pub left: DiagramMap,
    pub right: DiagramMap,
}

/// Fiber product of `f: a -> c` and `g: b -> c`, with pairs listed
/// lexicographically at each object.
pub fn pullback_set(
    a: &SetDiagram,
    f: &DiagramMap,
    b: &SetDiagram,
    g: &DiagramMap,
    c: &SetDiagram,
) -> Result<Pullback> {
    if a.category != c.category || b.category != c.category {
        return Err(Error::MismatchedBases);
    }
    f.check(a, c)?;
    g.check(b, c)?;
    let cat = &c.category;
    let mut pairs: Vec<Vec<(usize, usize)>> = Vec::new();
    for o in 0..cat.n_objects() {
        let mut ps = Vec::new();
        for x in 0..a.size(o) {
            for y in 0..b.size(o) {
                if f.components[o][x] == g.components[o][y] {
                    ps.push((x, y));
                }
            }
        }
        pairs.push(ps);
    }
    let index: Vec<BTreeMap<(usize, usize), usize>> = pairs
        .iter()
        .map(|ps| ps.iter().enumerate().map(|(i, &p)| (p, i)).collect())
        .collect();
    let actions = (0..cat.n_morphisms())
        .map(|m| {
            let (s, t) = (cat.source(m), cat.target(m));
            pairs[s]
                .iter()
                .map(|&(x, y)| index[t][&(a.act(m, x), b.act(m, y))])
                .collect()
        })
        .collect();
    let sets = pairs
        .iter()
        .enumerate()
        .map(|(o, ps)| {
            ps.iter()
                .map(|&(x, y)| format!("({},{})", a.sets[o][x], b.sets[o][y]))
                .collect()
        })
        .collect();
    let left = DiagramMap { components: pairs.iter().map(|ps| ps.iter().map(|p| p.0).collect()).collect() };
    let right = DiagramMap { components: pairs.iter().map(|ps| ps.iter().map(|p| p.1).collect()).collect() };
    Ok(Pullback { diagram: SetDiagram { category: c.category.clone(), sets, actions }, left, right })
}

/// Enumerates every natural transformation `source -> target` by backtracking,
/// stopping after `limit` results. Choosing the value of an element forces
/// the values of everything it maps to, which is checked right away.
pub fn enumerate_maps(source: &SetDiagram, target: &SetDiagram, limit: usize) -> Vec<DiagramMap> {
    let c = &source.category;
    let elems: Vec<(usize, usize)> = (0..c.n_objects())
        .flat_map(|o| (0..source.size(o)).map(move |e| (o, e)))
        .collect();
    let mut assign: Vec<Vec<Option<usize>>> = source.sets.iter().map(|s| vec![None; s.len()]).collect();
    let mut out = Vec::new();
    /// Assigns `v` to `(o, e)` and everything it forces; returns the cells
    /// written, or `None` (after undoing them) on a clash.
    fn assign_forced(
        source: &SetDiagram,
        target: &SetDiagram,
        assign: &mut [Vec<Option<usize>>],
        o: usize,
        e: usize,
        v: usize,
    ) -> Option<Vec<(usize, usize)>> {
        let c = &source.category;
        let mut written: Vec<(usize, usize)> = Vec::new();
        for m in 0..c.n_morphisms() {
            if c.source(m) != o {
                continue;
            }
            let (t, x, y) = (c.target(m), source.act(m, e), target.act(m, v));
            match assign[t][x] {
                Some(w) if w != y => {
                    for &(t, x) in &written {
                        assign[t][x] = None;
                    }
                    return None;
                }
                Some(_) => {}
                None => {
                    assign[t][x] = Some(y);
                    written.push((t, x));
                }
            }
        }
        Some(written)
    }
    fn go(
        k: usize,
        elems: &[(usize, usize)],
        source: &SetDiagram,
        target: &SetDiagram,
        assign: &mut Vec<Vec<Option<usize>>>,
        out: &mut Vec<DiagramMap>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        let Some(&(o, e)) = elems.get(k) else {
            out.push(DiagramMap {
                components: assign.iter().map(|v| v.iter().map(|x| x.unwrap()).collect()).collect(),
            });
            return;
        };
        if assign[o][e].is_some() {
            // Forced earlier; images of a forced element were forced too.
            go(k + 1, elems, source, target, assign, out, limit);
            return;
        }
        for v in 0..target.size(o) {
            if let Some(written) = assign_forced(source, target, assign, o, e, v) {
                go(k + 1, elems, source, target, assign, out, limit);
                for (t, x) in written {
                    assign[t][x] = None;
                }
            }
        }
    }
    go(0, &elems, source, target, &mut assign, &mut out, limit);
    out
}
