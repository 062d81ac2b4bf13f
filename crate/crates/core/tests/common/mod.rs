//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use soa_core::equichain::{chain_hom_basis, widen, ChainDiagram, ChainMap, ModuleDiagram};
use soa_core::fincat::{representable, FiniteCategory, SetDiagram};
use soa_core::Matrix;
use soa_core::profactor::{from_apex_map, ProChainMap, ProComplex};

/// Largest dimension of a single sphere or disk block in random complexes.
pub const BLOCK_DIM: usize = 2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn base_categories() -> Vec<Arc<FiniteCategory>> {
    vec![
        Arc::new(FiniteCategory::terminal()),
        Arc::new(FiniteCategory::walking_arrow()),
        Arc::new(FiniteCategory::span()),
    ]
}

pub fn random_matrix(rng: &mut impl Rng, p: u32, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(p, rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, rng.gen_range(0..p));
        }
    }
    m
}

/// A random module over a category without composable pairs of
/// non-identity arrows, where any choice of action matrices is functorial.
pub fn random_module(rng: &mut impl Rng, cat: &Arc<FiniteCategory>, p: u32, dims: Vec<usize>) -> ModuleDiagram {
    let actions = cat
        .morphisms()
        .iter()
        .enumerate()
        .map(|(m, mor)| {
            if cat.is_identity(m) {
                Matrix::identity(p, dims[mor.source])
            } else {
                random_matrix(rng, p, dims[mor.target], dims[mor.source])
            }
        })
        .collect();
    ModuleDiagram::new(cat.clone(), p, dims, actions).expect("random module is functorial")
}

/// A sum of random spheres and disks in degrees `0..=hi`, each object and
/// degree of dimension at most `max_dim`.
pub fn random_complex(rng: &mut impl Rng, cat: &Arc<FiniteCategory>, p: u32, hi: i64, max_dim: usize) -> ChainDiagram {
    let no = cat.n_objects();
    let mut x = ChainDiagram::zero(cat.clone(), p, 0, hi);
    let mut used = vec![vec![0usize; no]; (hi + 1) as usize];
    for _ in 0..rng.gen_range(1..=4) {
        let n = rng.gen_range(0..=hi);
        let disk = n > 0 && rng.gen_bool(0.5);
        let degs: Vec<i64> = if disk { vec![n, n - 1] } else { vec![n] };
        let dims: Vec<usize> = (0..no)
            .map(|o| {
                let room = degs.iter().map(|&d| max_dim - used[d as usize][o]).min().unwrap();
                rng.gen_range(0..=room.min(BLOCK_DIM))
            })
            .collect();
        if dims.iter().all(|&d| d == 0) {
            continue;
        }
        for &d in &degs {
            for o in 0..no {
                used[d as usize][o] += dims[o];
            }
        }
        let m = random_module(rng, cat, p, dims);
        let block = if disk { ChainDiagram::disk(&m, n, 0, hi) } else { ChainDiagram::sphere(&m, n, 0, hi) };
        x = x.direct_sum(&block).unwrap();
    }
    x
}

pub fn random_map(rng: &mut impl Rng, x: &Arc<ChainDiagram>, y: &Arc<ChainDiagram>) -> ChainMap {
    let mut f = ChainMap::zero(x.clone(), y.clone());
    for b in chain_hom_basis(x, y) {
        if rng.gen_bool(0.5) {
            f = f.plus(&b).unwrap();
        }
    }
    f
}

/// The equivariant corpus: maps over the three small shapes, degrees within
/// `0..=3`, dimensions at most 3, widened to their working window.
pub fn chain_corpus(seed: u64, count: usize) -> Vec<ChainMap> {
    let mut r = rng(seed);
    let cats = base_categories();
    (0..count)
        .map(|i| {
            let cat = &cats[i % cats.len()];
            let hi = r.gen_range(0..=3);
            let x = Arc::new(random_complex(&mut r, cat, 2, hi, 3));
            let y = Arc::new(random_complex(&mut r, cat, 2, hi, 3));
            let f = random_map(&mut r, &x, &y);
            widen(&f).unwrap()
        })
        .collect()
}

/// Searches every natural map `T -> U Z_n` for a lift of an orbit square
/// against `p`. `None` when the search space is too large to enumerate.
pub fn brute_force_lift(sq: &soa_core::equichain::OrbitSquare, p: &ChainMap, cap: usize) -> Option<Option<ChainMap>> {
    use soa_core::fincat::enumerate_maps;
    use soa_core::linalg::vector_from_index;
    let z = &p.source;
    let n = sq.degree;
    let zn = z.module_or_zero(n);
    if zn.dims.iter().any(|&d| d > 12) {
        return None;
    }
    // Elements hit by no other element are free choices; the rest are forced.
    let t = &sq.orbit;
    let c = &t.category;
    let mut free_bits = 0usize;
    for o in 0..c.n_objects() {
        for e in 0..t.size(o) {
            let hit = (0..c.n_morphisms())
                .any(|m| !c.is_identity(m) && c.target(m) == o && (0..t.size(c.source(m))).any(|x| t.act(m, x) == e));
            if !hit {
                free_bits += zn.dims[o];
            }
        }
    }
    if free_bits > 16 {
        return None;
    }
    let u = zn.underlying().ok()?;
    let maps = enumerate_maps(&sq.orbit, &u, cap + 1);
    if maps.len() > cap {
        return None;
    }
    let disk = &sq.square.generator.target;
    let no = z.n_objects();
    for m in maps {
        let mut h = ChainMap::zero(disk.clone(), z.clone());
        for o in 0..no {
            let cols: Vec<Vec<u32>> = m.components[o].iter().map(|&i| vector_from_index(z.p(), zn.dims[o], i)).collect();
            let top = Matrix::from_columns(z.p(), zn.dims[o], &cols);
            if (z.lo()..=z.hi()).contains(&n) {
                h.components[(n - z.lo()) as usize][o] = top.clone();
            }
            if (z.lo()..=z.hi()).contains(&(n - 1)) && (z.lo()..=z.hi()).contains(&n) {
                h.components[(n - 1 - z.lo()) as usize][o] = z.d(n, o).mul(&top);
            }
        }
        let upper = h.after(&sq.square.generator).ok()?;
        let lower = p.after(&h).ok()?;
        if upper == sq.square.top && lower == sq.square.bottom {
            return Some(Some(h));
        }
    }
    Some(None)
}

// ---- pro-objects of finite sets ----

use soa_core::procalc::{Complexes, FinSets, ProMap, ProObject, Representative};
use soa_core::soa::finset::FinMap;

pub type SetPro = Arc<ProObject<FinSets>>;

pub fn random_finmap(rng: &mut impl Rng, source: usize, target: usize) -> FinMap {
    FinMap::new(source, target, (0..source).map(|_| rng.gen_range(0..target)).collect())
}

pub fn random_set_tower(rng: &mut impl Rng, levels: usize, max_size: usize) -> SetPro {
    let sizes: Vec<usize> = (0..levels).map(|_| rng.gen_range(1..=max_size)).collect();
    let down = (0..levels - 1).map(|k| random_finmap(rng, sizes[k + 1], sizes[k])).collect();
    Arc::new(ProObject::tower(&FinSets, sizes, down).unwrap())
}

/// `c -> a ⇉ b` with `u ∘ w = v ∘ w`: cofiltering but not a poset.
pub fn parallel_index() -> Arc<FiniteCategory> {
    use soa_core::fincat::Morphism;
    let names = ["id_a", "id_b", "id_c", "u", "v", "w", "uw"];
    let ends = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 1), (2, 0), (2, 1)];
    let morphisms = names
        .iter()
        .zip(ends)
        .map(|(n, (s, t))| Morphism { name: n.to_string(), source: s, target: t })
        .collect();
    let mut comp = std::collections::BTreeMap::new();
    for m in 0..7 {
        let (s, t) = ends[m];
        comp.insert((t, m), m);
        comp.insert((m, s), m);
    }
    comp.insert((3, 5), 6);
    comp.insert((4, 5), 6);
    Arc::new(FiniteCategory::from_parts(vec!["a".into(), "b".into(), "c".into()], morphisms, vec![0, 1, 2], comp))
}

/// A pro-set over [`parallel_index`].
pub fn random_parallel_pro(rng: &mut impl Rng, max_size: usize) -> SetPro {
    use soa_core::procalc::CofilteringIndex;
    let (sa, sb) = (rng.gen_range(1..=max_size), rng.gen_range(1..=max_size));
    let sc = rng.gen_range(1..=max_size);
    let u = random_finmap(rng, sa, sb);
    let v = random_finmap(rng, sa, sb);
    // w lands where u and v agree, so u ∘ w = v ∘ w.
    let agree: Vec<usize> = (0..sa).filter(|&x| u.values[x] == v.values[x]).collect();
    let (u, v, agree) = if agree.is_empty() { (u.clone(), u, (0..sa).collect::<Vec<_>>()) } else { (u, v, agree) };
    let w = FinMap::new(sc, sa, (0..sc).map(|_| agree[rng.gen_range(0..agree.len())]).collect());
    let uw = FinMap::new(sc, sb, w.values.iter().map(|&x| u.values[x]).collect());
    let index = CofilteringIndex::new(parallel_index()).unwrap();
    let bonding = vec![FinMap::identity(sa), FinMap::identity(sb), FinMap::identity(sc), u, v, w, uw];
    Arc::new(ProObject::new(&FinSets, index, vec![sa, sb, sc], bonding).unwrap())
}

pub fn random_pro_set(rng: &mut impl Rng, max_levels: usize, max_size: usize) -> SetPro {
    if rng.gen_range(0..5) == 0 {
        random_parallel_pro(rng, max_size)
    } else {
        let levels = rng.gen_range(1..=max_levels);
        random_set_tower(rng, levels, max_size)
    }
}

/// Moves each level of the representative to a random deeper source level.
pub fn random_rarefied(rng: &mut impl Rng, f: &ProMap<FinSets>) -> ProMap<FinSets> {
    use soa_core::procalc::BaseCategory;
    let c = &f.source.index.category;
    let mut rep = f.rep.clone();
    for k in 0..rep.theta.len() {
        let arrows: Vec<usize> = (0..c.n_objects()).flat_map(|i| c.hom(i, rep.theta[k])).collect();
        let a = arrows[rng.gen_range(0..arrows.len())];
        rep.maps[k] = FinSets.compose(&rep.maps[k], f.source.bond(a)).unwrap();
        rep.theta[k] = c.source(a);
    }
    ProMap::new(&FinSets, f.source.clone(), f.target.clone(), rep).unwrap()
}

fn compose_fn(g: &FinMap, f: &FinMap) -> FinMap {
    FinMap::new(f.source, g.target, f.values.iter().map(|&x| g.values[x]).collect())
}

/// Whether `(j, f)` and `(j2, g)` agree after precomposing with some pair of
/// bonding maps out of a common level. Plain loops, independent of the
/// library's search.
pub fn brute_same_germ(x: &ProObject<FinSets>, j: usize, f: &FinMap, j2: usize, g: &FinMap) -> bool {
    let c = &x.index.category;
    (0..c.n_morphisms()).any(|a| {
        c.target(a) == j
            && (0..c.n_morphisms())
                .any(|b| c.target(b) == j2 && c.source(b) == c.source(a) && compose_fn(f, &x.bonding[a]) == compose_fn(g, &x.bonding[b]))
    })
}

/// Every compatible representative `x -> y`, or `None` above `cap` candidates.
pub fn brute_representatives(x: &ProObject<FinSets>, y: &ProObject<FinSets>, cap: usize) -> Option<Vec<Representative<FinSets>>> {
    let per_level: Vec<Vec<(usize, FinMap)>> = (0..y.n_levels())
        .map(|k| (0..x.n_levels()).flat_map(|j| FinMap::all(x.levels[j], y.levels[k]).into_iter().map(move |m| (j, m))).collect())
        .collect();
    let total = per_level.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()).filter(|&t| t <= cap))?;
    let kc = &y.index.category;
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut rep = Representative { theta: Vec::new(), maps: Vec::new() };
        for level in &per_level {
            let (j, m) = &level[rest % level.len()];
            rest /= level.len();
            rep.theta.push(*j);
            rep.maps.push(m.clone());
        }
        let compatible = (0..kc.n_morphisms()).all(|v| {
            let (k, k2) = (kc.source(v), kc.target(v));
            brute_same_germ(x, rep.theta[k], &compose_fn(&y.bonding[v], &rep.maps[k]), rep.theta[k2], &rep.maps[k2])
        });
        if compatible {
            out.push(rep);
        }
    }
    Some(out)
}

/// Number of classes of representatives under "agree level by level in the
/// colimit", computed by pairwise comparison.
pub fn brute_class_count(x: &ProObject<FinSets>, reps: &[Representative<FinSets>]) -> usize {
    let mut classes: Vec<&Representative<FinSets>> = Vec::new();
    for r in reps {
        let same = |s: &&Representative<FinSets>| (0..r.theta.len()).all(|k| brute_same_germ(x, r.theta[k], &r.maps[k], s.theta[k], &s.maps[k]));
        if !classes.iter().any(same) {
            classes.push(r);
        }
    }
    classes.len()
}

/// A tower `X_0 <- X_1 <- ... ` of random complexes over the terminal category.
pub fn random_complex_tower(rng: &mut impl Rng, levels: usize, hi: i64, max_dim: usize) -> Arc<ProComplex> {
    let cat = Arc::new(FiniteCategory::terminal());
    let xs: Vec<Arc<ChainDiagram>> = (0..levels).map(|_| Arc::new(random_complex(rng, &cat, 2, hi, max_dim))).collect();
    let down = (0..levels - 1).map(|k| random_map(rng, &xs[k + 1], &xs[k])).collect();
    Arc::new(ProObject::tower(&Complexes, xs, down).unwrap())
}

/// A map of random towers with at most `max_levels` levels, given by a
/// random map between the deepest levels.
pub fn random_tower_map(rng: &mut impl Rng, max_levels: usize, max_dim: usize) -> ProChainMap {
    let hi = rng.gen_range(0..=2);
    let (lx, ly) = (rng.gen_range(1..=max_levels), rng.gen_range(1..=max_levels));
    let x = random_complex_tower(rng, lx, hi, max_dim);
    let y = random_complex_tower(rng, ly, hi, max_dim);
    let m = random_map(rng, &x.levels[lx - 1], &y.levels[ly - 1]);
    from_apex_map(&x, &y, &m).unwrap()
}

/// One object with a non-identity idempotent `e`.
pub fn idempotent_monoid() -> Arc<FiniteCategory> {
    use soa_core::fincat::Morphism;
    let morphisms = vec![
        Morphism { name: "id".into(), source: 0, target: 0 },
        Morphism { name: "e".into(), source: 0, target: 0 },
    ];
    let comp = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)].into_iter().collect();
    Arc::new(FiniteCategory::from_parts(vec!["*".into()], morphisms, vec![0], comp))
}

/// A random category on at most three objects: usually a random preorder,
/// sometimes one of the non-thin examples.
pub fn random_small_category(rng: &mut impl Rng) -> Arc<FiniteCategory> {
    match rng.gen_range(0..8) {
        0 => idempotent_monoid(),
        1 => parallel_index(),
        _ => {
            let n = rng.gen_range(1..=3);
            let mut rel = vec![vec![false; n]; n];
            for (i, row) in rel.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = i == j || rng.gen_bool(0.4);
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if rel[i][k] && rel[k][j] {
                            rel[i][j] = true;
                        }
                    }
                }
            }
            let names: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            Arc::new(FiniteCategory::from_preorder(&refs, |i, j| rel[i][j]))
        }
    }
}

fn find_root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// A random functor into sets of size at most `max_size`: a quotient of a sum
/// of representables by the congruence generated by a few random identifications.
/// Functorial by construction.
pub fn random_set_diagram(rng: &mut impl Rng, cat: &Arc<FiniteCategory>, max_size: usize) -> SetDiagram {
    loop {
        let seeds: Vec<usize> = (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(0..cat.n_objects())).collect();
        let reps: Vec<SetDiagram> = seeds.iter().map(|&c| representable(cat, c)).collect();
        // Flat numbering of the disjoint union, object by object.
        let mut elems: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cat.n_objects()];
        for (r, d) in reps.iter().enumerate() {
            for (o, set) in elems.iter_mut().enumerate() {
                set.extend((0..d.size(o)).map(|e| (r, e)));
            }
        }
        let off: Vec<usize> = elems.iter().scan(0, |acc, s| { let o = *acc; *acc += s.len(); Some(o) }).collect();
        let total: usize = elems.iter().map(|s| s.len()).sum();
        let flat = |o: usize, r: usize, e: usize| off[o] + elems[o].iter().position(|&x| x == (r, e)).unwrap();
        let mut parent: Vec<usize> = (0..total).collect();
        let mut pending = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            let o = rng.gen_range(0..cat.n_objects());
            if elems[o].len() >= 2 {
                let a = rng.gen_range(0..elems[o].len());
                let b = rng.gen_range(0..elems[o].len());
                pending.push((o, a, b));
            }
        }
        // Close the identifications under the action.
        while let Some((o, a, b)) = pending.pop() {
            let (ra, rb) = (find_root(&mut parent, off[o] + a), find_root(&mut parent, off[o] + b));
            if ra == rb {
                continue;
            }
            parent[ra.max(rb)] = ra.min(rb);
            for m in 0..cat.n_morphisms() {
                if cat.source(m) != o {
                    continue;
                }
                let t = cat.target(m);
                let img = |i: usize| {
                    let (r, e) = elems[o][i];
                    flat(t, r, reps[r].act(m, e)) - off[t]
                };
                pending.push((t, img(a), img(b)));
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![0; total];
        for o in 0..cat.n_objects() {
            let mut roots: Vec<usize> = Vec::new();
            for i in 0..elems[o].len() {
                let r = find_root(&mut parent, off[o] + i);
                let k = roots.iter().position(|&x| x == r).unwrap_or_else(|| { roots.push(r); roots.len() - 1 });
                class_of[off[o] + i] = k;
            }
            classes.push(roots);
        }
        let sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        if sizes.iter().any(|&s| s > max_size) {
            continue;
        }
        let actions = (0..cat.n_morphisms())
            .map(|m| {
                let (s, t) = (cat.source(m), cat.target(m));
                (0..sizes[s])
                    .map(|k| {
                        let i = (0..elems[s].len()).find(|&i| class_of[off[s] + i] == k).unwrap();
                        let (r, e) = elems[s][i];
                        class_of[flat(t, r, reps[r].act(m, e))]
                    })
                    .collect()
            })
            .collect();
        return SetDiagram::new(cat.clone(), &sizes, actions).expect("quotient of representables is functorial");
    }
}

/// Counts cocones from `x` into a set of size `t` by trying every family of functions.
pub fn brute_cocone_count(x: &SetDiagram, t: usize) -> usize {
    let c = &x.category;
    let total = x.total_size();
    let off: Vec<usize> = x.sizes().iter().scan(0, |acc, &s| { let o = *acc; *acc += s; Some(o) }).collect();
    let mut count = 0;
    let mut values = vec![0usize; total];
    loop {
        let compatible = (0..c.n_morphisms()).all(|m| {
            let (s, tg) = (c.source(m), c.target(m));
            (0..x.size(s)).all(|e| values[off[tg] + x.act(m, e)] == values[off[s] + e])
        });
        count += compatible as usize;
        let mut i = 0;
        loop {
            if i == total {
                return count;
            }
            values[i] += 1;
            if values[i] < t {
                break;
            }
            values[i] = 0;
            i += 1;
        }
    }
}

/// Functoriality, colimit universality against an exhaustive cocone count, and
/// the orbit partition, for one diagram.
pub fn check_diagram_laws(x: &SetDiagram) -> Result<(), String> {
    use soa_core::fincat::{colim_set, is_orbit, orbits};
    x.check().map_err(|e| format!("functoriality: {e}"))?;
    let colim = colim_set(x);
    // Cocone legs must form a cocone.
    let c = &x.category;
    for m in 0..c.n_morphisms() {
        for e in 0..x.size(c.source(m)) {
            if colim.cocone[c.target(m)][x.act(m, e)] != colim.cocone[c.source(m)][e] {
                return Err("colimit legs do not form a cocone".into());
            }
        }
    }
    // Every cocone into T factors uniquely: there are exactly |T|^|colim| of them.
    for t in 1..=3usize {
        if t.pow(x.total_size() as u32) > 1 << 16 {
            break;
        }
        let want = t.pow(colim.size() as u32);
        let got = brute_cocone_count(x, t);
        if got != want {
            return Err(format!("{got} cocones into {t} points, universality predicts {want}"));
        }
    }
    let os = orbits(x);
    if os.len() != colim.size() {
        return Err(format!("{} orbits for {} colimit points", os.len(), colim.size()));
    }
    let mut seen: Vec<Vec<usize>> = x.sizes().iter().map(|&s| vec![0; s]).collect();
    for o in &os {
        o.diagram.check().map_err(|e| format!("orbit diagram: {e}"))?;
        o.projection.check(&o.diagram, x).map_err(|e| format!("orbit inclusion: {e}"))?;
        if !is_orbit(&o.diagram) {
            return Err(format!("orbit over point {} is not connected", o.point));
        }
        for (obj, members) in o.projection.components.iter().enumerate() {
            for &e in members {
                seen[obj][e] += 1;
            }
        }
    }
    if seen.iter().flatten().any(|&n| n != 1) {
        return Err("orbits do not partition the elements".into());
    }
    Ok(())
}
