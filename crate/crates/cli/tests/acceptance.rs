//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use soa_core::equichain::{ChainAdapter, ChainMap, EquivariantSystem, GeneratorClass};
use soa_core::procalc::{
    classify_representative, compose_promaps, equivalent, hom_pro, levelwise_replace, mardesic_reindex,
    strict_representative, Complexes, FinSets, ProMap, Representative,
};
use soa_core::profactor::{factor_through_constant, pro_factorize, widen_pro, ConstantProObject, ProClass};
use soa_core::soa::{self, Budget};

type Verdict = Result<String, String>;

fn within(start: Instant, limit: u64, detail: String) -> Verdict {
    let took = start.elapsed();
    if took > Duration::from_secs(limit) {
        Err(format!("{detail}; took {took:.1?}, limit {limit} s"))
    } else {
        Ok(format!("{detail}; {took:.2?}"))
    }
}

fn diagram_laws() -> Verdict {
    let start = Instant::now();
    let mut r = rng(101);
    for i in 0..200 {
        let cat = random_small_category(&mut r);
        let x = random_set_diagram(&mut r, &cat, 4);
        check_diagram_laws(&x).map_err(|e| format!("instance {i}: {e}"))?;
    }
    within(start, 10, "200 diagrams".into())
}

/// Criteria 2 and 4 share the corpus and its certificates.
struct Corpus {
    maps: Vec<ChainMap>,
}

impl Corpus {
    fn new() -> Self {
        Corpus { maps: chain_corpus(102, 54) }
    }
}

fn equivariant_factorization(corpus: &Corpus) -> Verdict {
    let start = Instant::now();
    let (mut exhaustive, mut squares) = (0, 0);
    for (i, f) in corpus.maps.iter().enumerate() {
        for class in [GeneratorClass::I, GeneratorClass::J] {
            let system = EquivariantSystem::for_map(class, f).map_err(|e| e.to_string())?;
            let c = soa::soa_factorize(&ChainAdapter, f, &system, Budget::new(8)).map_err(|e| e.to_string())?;
            if !c.stabilized {
                return Err(format!("map {i} {class:?} did not stabilize within 8 stages"));
            }
            if c.delta.after(&c.gamma).map_err(|e| e.to_string())? != *f {
                return Err(format!("map {i} {class:?}: delta after gamma differs from f"));
            }
            soa::replay(&ChainAdapter, &c).map_err(|e| format!("map {i} {class:?} replay: {e}"))?;
            // Exhaustive squares when the hom sets are small enough, generator squares always.
            let all = match system.exhaustive_squares(&c.delta, 1 << 10) {
                Ok(s) => {
                    exhaustive += 1;
                    s.into_iter().map(|s| s.square).collect::<Vec<_>>()
                }
                Err(_) => system.generator_squares(&c.delta).map_err(|e| e.to_string())?.into_iter().map(|s| s.square).collect(),
            };
            let outcomes = soa::verify_rlp(&ChainAdapter, &c.delta, &all).map_err(|e| e.to_string())?;
            if !outcomes.iter().all(|o| o.is_lift()) {
                return Err(format!("map {i} {class:?}: a square has no lift against delta"));
            }
            squares += all.len();
        }
    }
    within(start, 60, format!("{} maps x 2 classes, {squares} squares, {exhaustive} certificates checked exhaustively", corpus.maps.len()))
}

fn classical_sanity() -> Verdict {
    let maps: Vec<ChainMap> =
        chain_corpus(103, 90).into_iter().filter(|f| f.source.category().n_objects() == 1).collect();
    for (i, f) in maps.iter().enumerate() {
        let c = soa_core::equichain::factorize_equivariant(f, GeneratorClass::J, Budget::new(8)).map_err(|e| e.to_string())?;
        if !c.gamma.is_quasi_isomorphism() {
            return Err(format!("map {i}: class-J gamma is not a quasi-isomorphism"));
        }
    }
    Ok(format!("{} maps over the terminal category", maps.len()))
}

fn proof_lift_agreement(corpus: &Corpus) -> Verdict {
    let (mut compared, mut too_big) = (0, 0);
    for (i, f) in corpus.maps.iter().enumerate() {
        for class in [GeneratorClass::I, GeneratorClass::J] {
            let system = EquivariantSystem::for_map(class, f).map_err(|e| e.to_string())?;
            let c = soa::soa_factorize(&ChainAdapter, f, &system, Budget::new(8)).map_err(|e| e.to_string())?;
            for sq in system.generator_squares(&c.delta).map_err(|e| e.to_string())? {
                let got = soa::lift_through_factorization(&ChainAdapter, &c, &system, &sq.square).map_err(|e| e.to_string())?;
                soa::check_lift(&ChainAdapter, &sq.square.generator, &c.delta, &sq.square.top, &sq.square.bottom, &got.lift)
                    .map_err(|e| format!("map {i} {class:?}: engine lift: {e}"))?;
                match brute_force_lift(&sq, &c.delta, 1 << 12) {
                    Some(Some(h)) => {
                        soa::check_lift(&ChainAdapter, &sq.square.generator, &c.delta, &sq.square.top, &sq.square.bottom, &h)
                            .map_err(|e| format!("map {i}: brute-force lift: {e}"))?;
                        compared += 1;
                    }
                    Some(None) => return Err(format!("map {i} {class:?}: brute force finds no lift for a solved square")),
                    None => too_big += 1,
                }
            }
        }
    }
    if compared == 0 {
        return Err("no square small enough to enumerate".into());
    }
    Ok(format!("{compared} squares agree with enumeration, {too_big} too large to enumerate"))
}

fn functoriality() -> Verdict {
    let system = EquivariantSystem::full(GeneratorClass::I);
    let mut r = rng(105);
    let cats = base_categories();
    let mut morphisms = 0;
    for i in 0..12 {
        let cat = &cats[i % 2];
        let small = |r: &mut rand_chacha::ChaCha8Rng| Arc::new(random_complex(r, cat, 2, 1, 1).padded(-1, 2).unwrap());
        let xs: Vec<_> = (0..3).map(|_| small(&mut r)).collect();
        let y = small(&mut r);
        let a = random_map(&mut r, &xs[0], &xs[1]);
        let b = random_map(&mut r, &xs[1], &xs[2]);
        let f = random_map(&mut r, &xs[2], &y);
        let f1 = f.after(&b).unwrap();
        let f0 = f1.after(&a).unwrap();
        let cert = |m: &ChainMap| soa::soa_factorize(&ChainAdapter, m, &system, Budget::fixed(2)).map_err(|e| e.to_string());
        let (c0, c1, c2) = (cert(&f0)?, cert(&f1)?, cert(&f)?);
        let id_y = ChainMap::identity(y.clone());
        let induced = |g: &ChainMap, s, t| soa::induced_map(&ChainAdapter, &system, g, &id_y, s, t).map_err(|e| e.to_string());
        let xi_a = induced(&a, &c0, &c1)?;
        let xi_b = induced(&b, &c1, &c2)?;
        let ba = b.after(&a).unwrap();
        let xi_ba = induced(&ba, &c0, &c2)?;
        for (g, xi, src, dst) in [(&a, &xi_a, &c0, &c1), (&b, &xi_b, &c1, &c2), (&ba, &xi_ba, &c0, &c2)] {
            if dst.gamma.after(g).unwrap() != xi.last.after(&src.gamma).unwrap() || dst.delta.after(&xi.last).unwrap() != src.delta {
                return Err(format!("instance {i}: induced squares do not commute"));
            }
        }
        for (k, x) in xi_ba.stages.iter().enumerate() {
            if *x != xi_b.stages[k].after(&xi_a.stages[k]).unwrap() {
                return Err(format!("instance {i} stage {k}: induced map of a composite is not the composite"));
            }
        }
        morphisms += 3;
    }
    if morphisms < 30 {
        return Err(format!("only {morphisms} morphisms"));
    }
    Ok(format!("{morphisms} morphisms of maps"))
}

fn pro_hom_oracle() -> Verdict {
    let start = Instant::now();
    let mut r = rng(106);
    let (mut checked, mut skipped) = (0, 0);
    while checked < 60 {
        let x = random_pro_set(&mut r, 4, 3);
        let y = random_pro_set(&mut r, 4, 3);
        let Some(reps) = brute_representatives(&x, &y, 20_000) else {
            skipped += 1;
            continue;
        };
        let homs = hom_pro(&FinSets, &x, &y).map_err(|e| e.to_string())?;
        let want = brute_class_count(&x, &reps);
        if homs.len() != want {
            return Err(format!("instance {checked}: hom_pro has {} maps, enumeration {want}", homs.len()));
        }
        checked += 1;
    }
    within(start, 10, format!("{checked} pairs, {skipped} too large to enumerate"))
}

fn reindexing() -> Verdict {
    let mut r = rng(107);
    let (mut reindexed, mut levelwise, mut strict) = (0, 0, 0);
    for i in 0..40 {
        let x = if i % 2 == 0 { random_parallel_pro(&mut r, 3) } else { random_pro_set(&mut r, 4, 3) };
        let (y, iso) = mardesic_reindex(&FinSets, &x).map_err(|e| format!("reindex {i}: {e}"))?;
        if !y.index.is_directed_poset() {
            return Err(format!("reindex {i}: result is not a directed poset"));
        }
        y.index.check().map_err(|e| e.to_string())?;
        iso.verify(&FinSets).map_err(|e| format!("reindex {i}: {e}"))?;
        reindexed += 1;
    }
    for i in 0..40 {
        let x = random_set_tower(&mut r, 4, 3);
        let y = random_set_tower(&mut r, 3, 3);
        for h in hom_pro(&FinSets, &x, &y).map_err(|e| e.to_string())?.iter().take(3) {
            let f = random_rarefied(&mut r, h);
            let lw = levelwise_replace(&FinSets, &f).map_err(|e| format!("levelwise {i}: {e}"))?;
            lw.verify(&FinSets, &f).map_err(|e| format!("levelwise {i}: {e}"))?;
            if !classify_representative(&FinSets, &lw.map).map_err(|e| e.to_string())?.levelwise {
                return Err(format!("levelwise {i}: output does not classify as levelwise"));
            }
            levelwise += 1;
            // Towers are directed posets, so every map here is eligible.
            let s = strict_representative(&FinSets, &f).map_err(|e| format!("strict {i}: {e}"))?;
            if !classify_representative(&FinSets, &s).map_err(|e| e.to_string())?.strict || !equivalent(&FinSets, &s, &f).map_err(|e| e.to_string())? {
                return Err(format!("strict {i}: result is not a strict representative of f"));
            }
            strict += 1;
        }
    }
    Ok(format!("{reindexed} reindexings, {levelwise} levelwise replacements, {strict} strictifications"))
}

fn pro_factorization() -> Verdict {
    let start = Instant::now();
    let mut r = rng(108);
    let mut probes = 0;
    for i in 0..24 {
        let f = random_tower_map(&mut r, 3, 2);
        for class in [ProClass::M, ProClass::N] {
            let fac = pro_factorize(&f, class, Budget::new(6)).map_err(|e| format!("map {i} {class:?}: {e}"))?;
            if !fac.stabilized() {
                return Err(format!("map {i} {class:?} did not stabilize within 6"));
            }
            fac.verify().map_err(|e| format!("map {i} {class:?}: {e}"))?;
            let wide = widen_pro(&f).map_err(|e| e.to_string())?;
            if !equivalent(&Complexes, &fac.composite().map_err(|e| e.to_string())?, &wide).map_err(|e| e.to_string())? {
                return Err(format!("map {i} {class:?}: composite is not equivalent to f"));
            }
        }
        for k in 0..f.target.n_levels() {
            let level = ConstantProObject { object: f.target.levels[k].clone() }.pro();
            let proj = ProMap::new(
                &Complexes,
                f.target.clone(),
                level,
                Representative { theta: vec![k], maps: vec![ChainMap::identity(f.target.levels[k].clone())] },
            )
            .map_err(|e| e.to_string())?;
            let probe = compose_promaps(&Complexes, &proj, &f).map_err(|e| e.to_string())?;
            factor_through_constant(&probe).map_err(|e| format!("map {i} level {k}: {e}"))?;
            probes += 1;
        }
    }
    within(start, 60, format!("24 tower maps x 2 classes, {probes} probes"))
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let failures = support::determinism_and_replay(dir.path());
    if failures.is_empty() {
        Ok(format!("{} fixture runs", support::fixture_invocations().len()))
    } else {
        Err(failures.join("; "))
    }
}

fn main() {
    let corpus = Corpus::new();
    let results: Vec<(&str, Verdict)> = vec![
        ("category and diagram laws", diagram_laws()),
        ("equivariant factorization", equivariant_factorization(&corpus)),
        ("classical sanity", classical_sanity()),
        ("proof-lift agreement", proof_lift_agreement(&corpus)),
        ("functoriality", functoriality()),
        ("pro hom oracle", pro_hom_oracle()),
        ("reindexing", reindexing()),
        ("pro factorization", pro_factorization()),
        ("cli determinism", cli_determinism()),
    ];
    let mut failed = Vec::new();
    for (i, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                println!("criterion {} {name}: FAIL ({why})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
