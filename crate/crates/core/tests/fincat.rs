mod common;

use std::sync::Arc;

use common::{check_diagram_laws, random_set_diagram, random_small_category, rng};
use soa_core::fincat::{colim_set, orbits, FiniteCategory, SetDiagram};

#[test]
fn random_diagrams_obey_the_laws() {
    let mut r = rng(1);
    for i in 0..200 {
        let cat = random_small_category(&mut r);
        let x = random_set_diagram(&mut r, &cat, 4);
        if let Err(e) = check_diagram_laws(&x) {
            panic!("instance {i} over {:?}: {e}\n{x:?}", cat.objects());
        }
    }
}

#[test]
fn generator_reaches_every_small_shape() {
    let mut r = rng(2);
    let mut sizes = std::collections::BTreeSet::new();
    let mut points = std::collections::BTreeSet::new();
    for _ in 0..300 {
        let cat = random_small_category(&mut r);
        let x = random_set_diagram(&mut r, &cat, 4);
        sizes.extend(x.sizes());
        points.insert(colim_set(&x).size());
    }
    assert_eq!(sizes, (0..=4).collect());
    assert!(points.contains(&0) && points.contains(&1) && points.contains(&3), "{points:?}");
}

#[test]
fn cocone_count_rejects_a_wrong_colimit() {
    // Two points glued along an arrow have a one-point colimit, so two cocones into 2 points.
    let c = Arc::new(FiniteCategory::walking_arrow());
    let x = SetDiagram::new(c, &[1, 1], vec![vec![0], vec![0], vec![0]]).unwrap();
    assert_eq!(common::brute_cocone_count(&x, 2), 2);
    assert_eq!(colim_set(&x).size(), 1);
}

#[test]
fn idempotent_action_has_one_orbit_per_fixed_point() {
    let cat = common::idempotent_monoid();
    // e sends 0,1 -> 0 and 2,3 -> 3.
    let x = SetDiagram::new(cat, &[4], vec![vec![0, 1, 2, 3], vec![0, 0, 3, 3]]).unwrap();
    let os = orbits(&x);
    assert_eq!(os.len(), 2);
    assert_eq!(os[0].projection.components, vec![vec![0, 1]]);
    check_diagram_laws(&x).unwrap();
}

#[test]
fn non_functorial_action_is_refused() {
    let c = Arc::new(FiniteCategory::tower(3));
    let n = c.n_morphisms();
    let mut actions = vec![vec![0, 1]; n];
    // Swap along 1>0 and 2>1 but leave the composite 2>0 alone.
    for m in 0..n {
        let name = &c.morphisms()[m].name;
        if name == "1>0" || name == "2>1" {
            actions[m] = vec![1, 0];
        }
    }
    let swapped_twice_is_identity = SetDiagram::new(c.clone(), &[2, 2, 2], actions.clone());
    assert!(swapped_twice_is_identity.is_ok());
    let two_to_zero = c.morphism_index("2>0").unwrap();
    actions[two_to_zero] = vec![1, 0];
    assert!(SetDiagram::new(c, &[2, 2, 2], actions).is_err());
}
