mod common;

use std::sync::Arc;

use proptest::prelude::*;
use soa_core::procalc::{
    classify_representative, compose_promaps, equivalent, hom_pro, levelwise_replace, mardesic_reindex, rarefies,
    reps_equivalent, strict_representative, BaseCategory, CofilteringIndex, FinSets, ProMap, ProObject, Representative,
};
use soa_core::soa::finset::FinMap;
use soa_core::Error;

use common::*;

fn constant(n: usize) -> SetPro {
    Arc::new(ProObject::constant(&FinSets, n))
}

fn identity_tower(levels: usize, size: usize) -> SetPro {
    Arc::new(ProObject::tower(&FinSets, vec![size; levels], vec![FinMap::identity(size); levels - 1]).unwrap())
}

/// `{0,1,2}` at every level, each level folding `2` onto `1`.
fn folding_tower(levels: usize) -> SetPro {
    let fold = FinMap::new(3, 3, vec![0, 1, 1]);
    Arc::new(ProObject::tower(&FinSets, vec![3; levels], vec![fold; levels - 1]).unwrap())
}

/// `θ(k) = k + 1` with identity level maps into the same tower's bondings.
fn shift(x: &SetPro, by: usize) -> ProMap<FinSets> {
    let n = x.n_levels();
    let theta: Vec<usize> = (0..n).map(|k| (k + by).min(n - 1)).collect();
    let maps = (0..n).map(|k| x.bond(x.index.arrow(theta[k], k).unwrap()).clone()).collect();
    ProMap::new(&FinSets, x.clone(), x.clone(), Representative { theta, maps }).unwrap()
}

#[test]
fn tower_bonding_is_functorial() {
    let mut rng = rng(1);
    for _ in 0..20 {
        let x = random_set_tower(&mut rng, 4, 3);
        x.check(&FinSets).unwrap();
        x.index.check().unwrap();
    }
}

#[test]
fn idempotent_index_is_cofiltering_but_not_a_poset() {
    let idx = CofilteringIndex::new(parallel_index()).unwrap();
    assert!(!idx.is_directed_poset());
    assert_eq!(idx.equalizers.len(), 1);
    idx.check().unwrap();
}

#[test]
fn two_discrete_objects_are_not_cofiltering() {
    let cat = soa_core::FiniteCategory::from_preorder(&["a", "b"], |_, _| false);
    assert!(matches!(CofilteringIndex::new(Arc::new(cat)), Err(Error::InvalidCategory(_))));
}

#[test]
fn hom_between_constants_is_the_base_hom() {
    let homs = hom_pro(&FinSets, &constant(2), &constant(3)).unwrap();
    assert_eq!(homs.len(), 9);
}

#[test]
fn maps_into_a_point_are_unique() {
    let mut rng = rng(2);
    for _ in 0..10 {
        let x = random_pro_set(&mut rng, 4, 3);
        assert_eq!(hom_pro(&FinSets, &x, &constant(1)).unwrap().len(), 1);
    }
}

#[test]
fn point_into_identity_tower_of_pairs() {
    assert_eq!(hom_pro(&FinSets, &constant(1), &identity_tower(2, 2)).unwrap().len(), 2);
}

#[test]
fn hom_counts_match_representative_classes() {
    let mut rng = rng(3);
    let (mut checked, mut deep, mut nonzero) = (0, 0, 0);
    while checked < 60 {
        let x = random_pro_set(&mut rng, 4, 3);
        let y = random_pro_set(&mut rng, 4, 3);
        let Some(reps) = brute_representatives(&x, &y, 20_000) else { continue };
        deep += usize::from(x.n_levels() >= 3 && y.n_levels() >= 3);
        let homs = hom_pro(&FinSets, &x, &y).unwrap();
        assert_eq!(homs.len(), brute_class_count(&x, &reps));
        nonzero += usize::from(homs.len() > 1);
        // Every representative lands in exactly one computed class.
        for r in reps.iter().take(200) {
            let f = ProMap::new(&FinSets, x.clone(), y.clone(), r.clone()).unwrap();
            let hits = homs.iter().filter(|h| equivalent(&FinSets, &f, h).unwrap()).count();
            assert_eq!(hits, 1);
        }
        checked += 1;
    }
    assert!(deep >= 5 && nonzero >= 20, "{deep} deep instances, {nonzero} with several maps");
}

#[test]
fn representative_rarefies_itself() {
    let x = folding_tower(3);
    let id = ProMap::identity(&FinSets, x.clone());
    assert!(rarefies(&FinSets, &x, &id.rep, &id.rep).unwrap());
}

#[test]
fn shift_is_equivalent_to_identity() {
    let x = folding_tower(3);
    let id = ProMap::identity(&FinSets, x.clone());
    let s = shift(&x, 1);
    assert!(rarefies(&FinSets, &x, &s.rep, &id.rep).unwrap());
    let eq = reps_equivalent(&FinSets, &id, &s).unwrap().expect("equivalent");
    assert!(eq.check(&FinSets, &id, &s).unwrap());
}

#[test]
fn maps_differing_for_good_are_not_equivalent() {
    let x = identity_tower(2, 2);
    let homs = hom_pro(&FinSets, &constant(1), &x).unwrap();
    assert!(reps_equivalent(&FinSets, &homs[0], &homs[1]).unwrap().is_none());
}

#[test]
fn equivalence_is_an_equivalence_relation() {
    let mut rng = rng(4);
    for _ in 0..30 {
        let x = random_pro_set(&mut rng, 3, 3);
        let y = random_pro_set(&mut rng, 3, 3);
        let Ok(homs) = hom_pro(&FinSets, &x, &y) else { continue };
        let mut maps: Vec<ProMap<FinSets>> = Vec::new();
        for h in homs.iter().take(4) {
            maps.push(h.clone());
            maps.push(random_rarefied(&mut rng, h));
            maps.push(random_rarefied(&mut rng, h));
        }
        for a in &maps {
            assert!(equivalent(&FinSets, a, a).unwrap());
            for b in &maps {
                let ab = equivalent(&FinSets, a, b).unwrap();
                assert_eq!(ab, equivalent(&FinSets, b, a).unwrap());
                if let Some(w) = reps_equivalent(&FinSets, a, b).unwrap() {
                    assert!(w.check(&FinSets, a, b).unwrap());
                }
                for c in &maps {
                    if ab && equivalent(&FinSets, b, c).unwrap() {
                        assert!(equivalent(&FinSets, a, c).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn canonical_form_decides_equality() {
    let mut rng = rng(5);
    for _ in 0..30 {
        let x = random_set_tower(&mut rng, 3, 3);
        let y = random_set_tower(&mut rng, 3, 3);
        let homs = hom_pro(&FinSets, &x, &y).unwrap();
        for a in homs.iter().take(5) {
            let b = random_rarefied(&mut rng, a);
            assert_eq!(a.canonical(&FinSets).unwrap(), b.canonical(&FinSets).unwrap());
            for c in homs.iter().take(5) {
                let same = a.canonical(&FinSets).unwrap() == c.canonical(&FinSets).unwrap();
                assert_eq!(same, equivalent(&FinSets, a, c).unwrap());
            }
        }
    }
}

#[test]
fn identity_is_strict_and_levelwise() {
    let x = folding_tower(3);
    let c = classify_representative(&FinSets, &ProMap::identity(&FinSets, x)).unwrap();
    assert!(c.strict && c.levelwise);
}

#[test]
fn shift_is_strict_but_not_levelwise() {
    let c = classify_representative(&FinSets, &shift(&folding_tower(3), 1)).unwrap();
    assert!(c.strict && !c.levelwise);
}

#[test]
fn broken_square_is_neither() {
    // Level 1 of the target is mapped from level 0 of the source and level 0
    // from level 1: the only arrow 1 -> 0 of the target has no partner.
    let x = identity_tower(2, 2);
    let swap = FinMap::new(2, 2, vec![1, 0]);
    let rep = Representative { theta: vec![1, 0], maps: vec![FinMap::identity(2), swap] };
    let f = ProMap { source: x.clone(), target: x, rep };
    let c = classify_representative(&FinSets, &f).unwrap();
    assert!(!c.strict && !c.levelwise);
    assert!(soa_core::procalc::compatibility(&FinSets, &f.source, &f.target, &f.rep).is_err());
}

#[test]
fn identity_is_neutral_for_composition() {
    let mut rng = rng(6);
    for _ in 0..20 {
        let x = random_pro_set(&mut rng, 3, 3);
        let y = random_pro_set(&mut rng, 3, 3);
        let Ok(homs) = hom_pro(&FinSets, &x, &y) else { continue };
        for f in homs.iter().take(3) {
            let left = compose_promaps(&FinSets, &ProMap::identity(&FinSets, y.clone()), f).unwrap();
            let right = compose_promaps(&FinSets, f, &ProMap::identity(&FinSets, x.clone())).unwrap();
            assert!(equivalent(&FinSets, &left, f).unwrap());
            assert!(equivalent(&FinSets, &right, f).unwrap());
        }
    }
}

#[test]
fn composition_is_associative() {
    let mut rng = rng(7);
    let mut checked = 0;
    while checked < 20 {
        let towers: Vec<SetPro> = (0..4).map(|_| random_set_tower(&mut rng, 3, 3)).collect();
        let pick = |rng: &mut rand_chacha::ChaCha8Rng, a: &SetPro, b: &SetPro| {
            let homs = hom_pro(&FinSets, a, b).unwrap();
            use rand::Rng;
            if homs.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..homs.len());
            Some(random_rarefied(rng, &homs[i]))
        };
        let (Some(f), Some(g), Some(h)) = (
            pick(&mut rng, &towers[0], &towers[1]),
            pick(&mut rng, &towers[1], &towers[2]),
            pick(&mut rng, &towers[2], &towers[3]),
        ) else {
            continue;
        };
        let a = compose_promaps(&FinSets, &compose_promaps(&FinSets, &h, &g).unwrap(), &f).unwrap();
        let b = compose_promaps(&FinSets, &h, &compose_promaps(&FinSets, &g, &f).unwrap()).unwrap();
        assert!(equivalent(&FinSets, &a, &b).unwrap());
        checked += 1;
    }
}

#[test]
fn two_shifts_make_a_double_shift() {
    let x = folding_tower(4);
    let twice = compose_promaps(&FinSets, &shift(&x, 1), &shift(&x, 1)).unwrap();
    assert!(equivalent(&FinSets, &twice, &shift(&x, 2)).unwrap());
}

#[test]
fn poset_indexed_objects_are_already_normal() {
    let x = folding_tower(3);
    let (y, iso) = mardesic_reindex(&FinSets, &x).unwrap();
    assert_eq!(y, x);
    iso.verify(&FinSets).unwrap();
}

#[test]
fn parallel_pair_index_becomes_a_poset() {
    let mut rng = rng(8);
    for _ in 0..20 {
        let x = random_parallel_pro(&mut rng, 3);
        let (y, iso) = mardesic_reindex(&FinSets, &x).unwrap();
        assert!(y.index.is_directed_poset());
        y.index.check().unwrap();
        iso.verify(&FinSets).unwrap();
    }
}

#[test]
fn cone_over_two_objects_stays_three_elements() {
    let cat = soa_core::FiniteCategory::from_preorder(&["i", "j", "k"], |a, b| a == 2 && b != 2);
    let index = CofilteringIndex::new(Arc::new(cat)).unwrap();
    let c = &index.category;
    let bonding = (0..c.n_morphisms()).map(|m| FinMap::new(2, 2, vec![0, if c.is_identity(m) { 1 } else { 0 }])).collect();
    let x = Arc::new(ProObject::new(&FinSets, index, vec![2, 2, 2], bonding).unwrap());
    let (y, iso) = mardesic_reindex(&FinSets, &x).unwrap();
    assert_eq!(y.n_levels(), 3);
    iso.verify(&FinSets).unwrap();
}

#[test]
fn nontrivial_idempotent_splits_to_a_constant() {
    use soa_core::fincat::Morphism;
    let morphisms = vec![
        Morphism { name: "id".into(), source: 0, target: 0 },
        Morphism { name: "e".into(), source: 0, target: 0 },
    ];
    let comp = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)].into_iter().collect();
    let cat = soa_core::FiniteCategory::from_parts(vec!["*".into()], morphisms, vec![0], comp);
    let index = CofilteringIndex::new(Arc::new(cat)).unwrap();
    // e collapses {0, 1, 2} onto {0, 2}: no level is isomorphic to X, the image is.
    let collapse = FinMap::new(3, 3, vec![0, 0, 2]);
    let x = Arc::new(ProObject::new(&FinSets, index.clone(), vec![3], vec![FinMap::identity(3), collapse]).unwrap());
    let (y, iso) = mardesic_reindex(&FinSets, &x).unwrap();
    assert!(y.index.is_directed_poset());
    assert_eq!(y.levels, vec![2]);
    iso.verify(&FinSets).unwrap();
    // An idempotent acting as the identity is harmless.
    let trivial = Arc::new(ProObject::new(&FinSets, index, vec![2], vec![FinMap::identity(2); 2]).unwrap());
    let (y, iso) = mardesic_reindex(&FinSets, &trivial).unwrap();
    assert!(y.index.is_directed_poset());
    iso.verify(&FinSets).unwrap();
}

#[test]
fn random_idempotent_actions_always_reindex() {
    use rand::Rng;
    use soa_core::fincat::Morphism;
    let morphisms = vec![
        Morphism { name: "id".into(), source: 0, target: 0 },
        Morphism { name: "e".into(), source: 0, target: 0 },
    ];
    let comp = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)].into_iter().collect();
    let cat = Arc::new(soa_core::FiniteCategory::from_parts(vec!["*".into()], morphisms, vec![0], comp));
    let index = CofilteringIndex::new(cat).unwrap();
    let mut rng = rng(9);
    for _ in 0..30 {
        let n = rng.gen_range(1..=4);
        let fixed: Vec<usize> = (0..n).filter(|&i| i == 0 || rng.gen_bool(0.5)).collect();
        let values = (0..n).map(|i| if fixed.contains(&i) { i } else { fixed[rng.gen_range(0..fixed.len())] }).collect();
        let e = FinMap::new(n, n, values);
        let x = Arc::new(ProObject::new(&FinSets, index.clone(), vec![n], vec![FinMap::identity(n), e]).unwrap());
        let (y, iso) = mardesic_reindex(&FinSets, &x).unwrap();
        assert!(y.index.is_directed_poset());
        assert_eq!(y.levels.iter().min(), Some(&fixed.len()));
        iso.verify(&FinSets).unwrap();
    }
}

#[test]
fn idempotent_on_a_complex_splits_to_its_image() {
    use soa_core::equichain::{ChainDiagram, ChainMap};
    use soa_core::fincat::Morphism;
    use soa_core::procalc::Complexes;
    use soa_core::Matrix;
    let morphisms = vec![
        Morphism { name: "id".into(), source: 0, target: 0 },
        Morphism { name: "e".into(), source: 0, target: 0 },
    ];
    let comp = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)].into_iter().collect();
    let cat = soa_core::FiniteCategory::from_parts(vec!["*".into()], morphisms, vec![0], comp);
    let index = CofilteringIndex::new(Arc::new(cat)).unwrap();
    let point = Arc::new(soa_core::FiniteCategory::terminal());
    // F_2^2 in degree 0, e the projection onto the first coordinate.
    let v = Arc::new(ChainDiagram::constant(point, 2, 0, &[2], &[]).unwrap());
    let mut proj = Matrix::zeros(2, 2, 2);
    proj.set(0, 0, 1);
    let e = ChainMap::new(v.clone(), v.clone(), vec![vec![proj]]).unwrap();
    let x = Arc::new(ProObject::new(&Complexes, index, vec![v.clone()], vec![ChainMap::identity(v), e]).unwrap());
    let (y, iso) = mardesic_reindex(&Complexes, &x).unwrap();
    assert_eq!(y.levels[0].dim(0, 0), 1);
    iso.verify(&Complexes).unwrap();
}

#[test]
fn levelwise_map_is_returned_as_is() {
    let x = folding_tower(3);
    let id = ProMap::identity(&FinSets, x);
    let lw = levelwise_replace(&FinSets, &id).unwrap();
    assert_eq!(lw.map, id);
    lw.verify(&FinSets, &id).unwrap();
}

#[test]
fn shift_becomes_levelwise_over_the_graph() {
    let x = folding_tower(3);
    let s = shift(&x, 1);
    let lw = levelwise_replace(&FinSets, &s).unwrap();
    assert!(classify_representative(&FinSets, &lw.map).unwrap().levelwise);
    assert!(lw.map.source.index.is_thin());
    lw.verify(&FinSets, &s).unwrap();
}

#[test]
fn constant_to_tower_is_levelwise_over_the_tower() {
    let y = folding_tower(3);
    for f in hom_pro(&FinSets, &constant(2), &y).unwrap() {
        let lw = levelwise_replace(&FinSets, &f).unwrap();
        assert_eq!(lw.map.target.n_levels(), 3);
        lw.verify(&FinSets, &f).unwrap();
    }
}

#[test]
fn random_maps_replace_levelwise() {
    let mut rng = rng(9);
    for _ in 0..40 {
        let x = random_set_tower(&mut rng, 4, 3);
        let y = random_set_tower(&mut rng, 3, 3);
        let homs = hom_pro(&FinSets, &x, &y).unwrap();
        for h in homs.iter().take(3) {
            let f = random_rarefied(&mut rng, h);
            levelwise_replace(&FinSets, &f).unwrap().verify(&FinSets, &f).unwrap();
        }
    }
}

#[test]
fn strict_representative_needs_a_poset_target() {
    let mut rng = rng(10);
    let y = random_parallel_pro(&mut rng, 2);
    let f = hom_pro(&FinSets, &constant(1), &y).unwrap().remove(0);
    assert!(matches!(strict_representative(&FinSets, &f), Err(Error::Precondition(_))));
}

#[test]
fn constant_target_is_always_strict() {
    let x = folding_tower(3);
    for f in hom_pro(&FinSets, &x, &constant(2)).unwrap() {
        assert!(classify_representative(&FinSets, &f).unwrap().strict);
        assert_eq!(strict_representative(&FinSets, &f).unwrap(), f);
    }
}

#[test]
fn strictification_succeeds_on_random_towers() {
    let mut rng = rng(11);
    let (mut total, mut non_strict) = (0, 0);
    for _ in 0..60 {
        let x = random_set_tower(&mut rng, 4, 3);
        let y = random_set_tower(&mut rng, 4, 3);
        let homs = hom_pro(&FinSets, &x, &y).unwrap();
        for h in homs.iter().take(3) {
            let f = random_rarefied(&mut rng, h);
            non_strict += usize::from(!classify_representative(&FinSets, &f).unwrap().strict);
            let s = strict_representative(&FinSets, &f).unwrap();
            assert!(classify_representative(&FinSets, &s).unwrap().strict);
            assert!(equivalent(&FinSets, &s, &f).unwrap());
            total += 1;
        }
    }
    assert!(total >= 100 && non_strict > 0, "{total} maps, {non_strict} non-strict");
}

#[test]
fn strictification_after_levelwise_replacement() {
    let x = folding_tower(3);
    let lw = levelwise_replace(&FinSets, &shift(&x, 1)).unwrap();
    let s = strict_representative(&FinSets, &lw.map).unwrap();
    assert!(classify_representative(&FinSets, &s).unwrap().strict);
}

#[test]
fn pro_objects_round_trip_through_json() {
    let mut rng = rng(12);
    let x = random_pro_set(&mut rng, 3, 3);
    let s = serde_json::to_string(&*x).unwrap();
    let back: ProObject<FinSets> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, *x);
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rarefying_keeps_the_class(seed in 0u64..10_000) {
        let mut rng = rng(seed);
        let x = random_pro_set(&mut rng, 3, 3);
        let y = random_pro_set(&mut rng, 3, 3);
        let homs = hom_pro(&FinSets, &x, &y).unwrap();
        for h in homs.iter().take(3) {
            let f = random_rarefied(&mut rng, h);
            prop_assert!(rarefies(&FinSets, &x, &f.rep, &h.rep).unwrap());
            prop_assert!(equivalent(&FinSets, &f, h).unwrap());
            let distinct = homs.iter().filter(|g| equivalent(&FinSets, &f, g).unwrap()).count();
            prop_assert_eq!(distinct, 1);
        }
    }

    #[test]
    fn base_composition_matches_tables(a in 1usize..4, b in 1usize..4, c in 1usize..4, seed in 0u64..1000) {
        let mut rng = rng(seed);
        let f = random_finmap(&mut rng, a, b);
        let g = random_finmap(&mut rng, b, c);
        let gf = FinSets.compose(&g, &f).unwrap();
        for x in 0..a {
            prop_assert_eq!(gf.apply(x), g.apply(f.apply(x)));
        }
    }
}
