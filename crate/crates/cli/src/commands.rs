//! One function per subcommand. Each returns a JSON result and an exit
//! status; reports are wrapped and written by `main`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use soa_core::equichain::{factorize_equivariant, widen, ChainAdapter, ChainCertificate, EquivariantSystem, GeneratorClass, OrbitSquare};
use soa_core::fincat::{colim_set, orbits};
use soa_core::procalc::{
    classify_representative, hom_pro, levelwise_replace, mardesic_reindex, BaseCategory, Complexes, FinSets, ProMap, ProObject,
};
use soa_core::profactor::{pro_factorize, ProClass, ProFactorization};
use soa_core::soa::{check_lift as lift_commutes, lift_through_factorization, replay, Square};
use soa_core::{Budget, ProbeMode};

use crate::workspace::{AnyPro, AnyProMap, Failure, Resolved, Workspace};

/// Resolved run configuration.
#[derive(Clone, Copy, Debug)]
pub struct Run {
    pub p: u32,
    pub budget: usize,
    pub probes: ProbeMode,
    pub seed: u64,
}

impl Run {
    pub fn budget(&self) -> Budget {
        Budget { stage_limit: self.budget, probes: self.probes }
    }

    pub fn to_json(self) -> Value {
        json!({ "p": self.p, "budget": self.budget, "probes": self.probes, "seed": self.seed })
    }
}

pub struct Outcome {
    pub result: Value,
    /// Exit status; the report is written whatever it is.
    pub exit: i32,
    pub summary: String,
}

impl Outcome {
    fn done(result: Value, summary: String) -> Self {
        Outcome { result, exit: 0, summary }
    }
}

fn core<T>(r: soa_core::Result<T>) -> Resolved<T> {
    r.map_err(Failure::from_core)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("core types serialize")
}

pub const EXIT_SCHEMA: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Extra squares in `check-lift`: random sums of generator squares with the same cell.
const SAMPLED_SQUARES: usize = 8;

pub fn validate(ws: &Workspace) -> Outcome {
    let mut entries = Vec::new();
    let mut record = |kind: &str, name: &str, r: Resolved<()>| {
        let (ok, kind_of, message) = match &r {
            Ok(()) => (true, Value::Null, Value::Null),
            Err(f) => (
                false,
                json!(match f {
                    Failure::Schema(_) => "schema",
                    Failure::Precondition(_) => "precondition",
                }),
                json!(f.message()),
            ),
        };
        entries.push(json!({ "kind": kind, "name": name, "ok": ok, "failure": kind_of, "message": message }));
    };
    if let Err(f) = ws.p() {
        record("config", "p", Err(f));
    }
    for name in ws.categories.keys() {
        record("category", name, ws.category(name).map(|_| ()));
    }
    for name in ws.diagrams.keys() {
        record("diagram", name, ws.diagram(name).map(|_| ()));
    }
    for name in ws.complexes.keys() {
        record("complex", name, ws.complex(name).map(|_| ()));
    }
    for name in ws.maps.keys() {
        record("map", name, ws.map(name).map(|_| ()));
    }
    for name in ws.pro_objects.keys() {
        record("pro-object", name, ws.pro_object(name).map(|_| ()));
    }
    for name in ws.pro_maps.keys() {
        record("pro-map", name, ws.pro_map(name).map(|_| ()));
    }
    let bad = entries.iter().filter(|e| e["ok"] == json!(false)).count();
    let summary = format!("{} documents, {} invalid", entries.len(), bad);
    // A schema failure anywhere outranks law violations.
    let failed = |kind: &str| entries.iter().any(|e| e["failure"] == json!(kind));
    let exit = if failed("schema") {
        EXIT_SCHEMA
    } else if failed("precondition") {
        EXIT_PRECONDITION
    } else {
        0
    };
    Outcome { result: json!({ "documents": entries, "valid": bad == 0 }), exit, summary }
}

pub fn colim(ws: &Workspace, diagram: &str) -> Resolved<Outcome> {
    let d = ws.diagram(diagram)?;
    let c = colim_set(&d);
    let label = |(o, e): (usize, usize)| format!("{}:{}", d.category.objects()[o], d.sets[o][e]);
    let points: Vec<Value> = c
        .classes
        .iter()
        .map(|class| json!({ "representative": label(class[0]), "members": class.iter().map(|&x| label(x)).collect::<Vec<_>>() }))
        .collect();
    let summary = format!("colimit of {diagram}: {} points", c.size());
    Ok(Outcome::done(json!({ "diagram": diagram, "size": c.size(), "points": points, "presentation": to_value(&c) }), summary))
}

pub fn orbit_report(ws: &Workspace, diagram: &str) -> Resolved<Outcome> {
    let d = ws.diagram(diagram)?;
    let found = orbits(&d);
    let list: Vec<Value> = found
        .iter()
        .map(|o| {
            let elements: Vec<Vec<String>> = o
                .projection
                .components
                .iter()
                .enumerate()
                .map(|(obj, idx)| idx.iter().map(|&e| d.sets[obj][e].clone()).collect())
                .collect();
            json!({ "point": o.point, "sizes": o.diagram.sizes(), "elements": elements })
        })
        .collect();
    let points = colim_set(&d).size();
    let summary = format!("{diagram}: {} orbits over {points} apex points", found.len());
    Ok(Outcome::done(json!({ "diagram": diagram, "apex_points": points, "orbits": list }), summary))
}

pub fn factorize(ws: &Workspace, run: Run, map: &str, class: GeneratorClass) -> Resolved<Outcome> {
    let f = core(widen(&ws.map(map)?))?;
    let cert = core(factorize_equivariant(&f, class, run.budget()))?;
    let replayed = replay(&ChainAdapter, &cert).is_ok();
    let summary = format!(
        "{map} class {class:?}: {} after {} stages{}",
        if cert.stabilized { "stabilized" } else { "not stabilized" },
        cert.stages_used,
        if replayed { "" } else { ", REPLAY FAILED" }
    );
    if !replayed {
        return Err(Failure::Precondition(format!("certificate for {map} does not replay")));
    }
    Ok(Outcome {
        result: json!({
            "map": map,
            "class": class,
            "stabilized": cert.stabilized,
            "stages_used": cert.stages_used,
            "replayed": replayed,
            "certificate": to_value(&cert),
        }),
        exit: if cert.stabilized { 0 } else { EXIT_BUDGET },
        summary,
    })
}

/// Sums of two random generator squares sharing a generator.
fn sampled_squares(squares: &[OrbitSquare], seed: u64) -> Resolved<Vec<Square<soa_core::equichain::ChainMap>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..SAMPLED_SQUARES {
        let Some(a) = squares.choose(&mut rng) else { break };
        let partners: Vec<&OrbitSquare> = squares.iter().filter(|b| b.square.generator == a.square.generator).collect();
        let b = partners.choose(&mut rng).expect("a partners itself");
        out.push(Square {
            generator: a.square.generator.clone(),
            top: core(a.square.top.plus(&b.square.top))?,
            bottom: core(a.square.bottom.plus(&b.square.bottom))?,
        });
    }
    Ok(out)
}

/// Replays a certificate from a `factorize` or `pro-factorize` report and
/// solves its lifting problems.
pub fn check_lift(report: &Value, run: Run) -> Resolved<Outcome> {
    let command = report["command"].as_str().unwrap_or_default();
    let result = &report["result"];
    match command {
        "factorize" => {
            let cert: ChainCertificate = serde_json::from_value(result["certificate"].clone())
                .map_err(|e| Failure::Schema(format!("certificate: {e}")))?;
            let class: GeneratorClass =
                serde_json::from_value(result["class"].clone()).map_err(|e| Failure::Schema(format!("class: {e}")))?;
            core(replay(&ChainAdapter, &cert))?;
            if !cert.stabilized {
                return Err(Failure::Precondition("certificate has not stabilized; lifts are not guaranteed".into()));
            }
            let system = core(EquivariantSystem::for_map(class, &cert.map))?;
            let generators = core(system.generator_squares(&cert.delta))?;
            let mut squares: Vec<Square<_>> = generators.iter().map(|s| s.square.clone()).collect();
            squares.extend(sampled_squares(&generators, run.seed)?);
            let mut by_stage = std::collections::BTreeMap::<usize, usize>::new();
            for sq in &squares {
                let got = core(lift_through_factorization(&ChainAdapter, &cert, &system, sq))?;
                core(lift_commutes(&ChainAdapter, &sq.generator, &cert.delta, &sq.top, &sq.bottom, &got.lift))?;
                *by_stage.entry(got.stage).or_default() += 1;
            }
            let summary = format!("replayed {} stages, lifted {} squares", cert.stages_used, squares.len());
            Ok(Outcome::done(
                json!({
                    "certificate": "chain",
                    "replayed": true,
                    "stages": cert.stages_used,
                    "squares": squares.len(),
                    "lifted": squares.len(),
                    "lifts_by_stage": by_stage.iter().map(|(s, n)| json!({ "stage": s, "count": n })).collect::<Vec<_>>(),
                }),
                summary,
            ))
        }
        "pro-factorize" => {
            let fac: ProFactorization = serde_json::from_value(result["factorization"].clone())
                .map_err(|e| Failure::Schema(format!("factorization: {e}")))?;
            if !fac.stabilized() {
                return Err(Failure::Precondition("pro factorization has not stabilized".into()));
            }
            core(fac.verify())?;
            let summary = format!("replayed {} dual stages, {} probe fibrations lift", fac.stages(), fac.generators.len());
            Ok(Outcome::done(
                json!({ "certificate": "pro", "replayed": true, "stages": fac.stages(), "probes": fac.generators.len() }),
                summary,
            ))
        }
        other => Err(Failure::Schema(format!("check-lift needs a factorize or pro-factorize report, got {other:?}"))),
    }
}

fn hom_report<B: BaseCategory>(base: &B, x: &std::sync::Arc<ProObject<B>>, y: &std::sync::Arc<ProObject<B>>) -> Resolved<Value> {
    let maps = core(hom_pro(base, x, y))?;
    Ok(json!({ "count": maps.len(), "maps": maps.iter().map(|m| to_value(&m.rep)).collect::<Vec<_>>() }))
}

pub fn pro_hom(ws: &Workspace, source: &str, target: &str) -> Resolved<Outcome> {
    let result = match (ws.pro_object(source)?, ws.pro_object(target)?) {
        (AnyPro::Sets(x), AnyPro::Sets(y)) => hom_report(&FinSets, &x, &y)?,
        (AnyPro::Complexes(x), AnyPro::Complexes(y)) => hom_report(&Complexes, &x, &y)?,
        _ => return Err(Failure::Schema("pro-hom: objects live over different bases".into())),
    };
    let summary = format!("Hom({source}, {target}) has {} elements", result["count"]);
    Ok(Outcome::done(json!({ "source": source, "target": target, "hom": result }), summary))
}

fn reindex_report<B: BaseCategory>(base: &B, x: &std::sync::Arc<ProObject<B>>) -> Resolved<Value> {
    let (y, iso) = core(mardesic_reindex(base, x))?;
    core(iso.verify(base))?;
    Ok(json!({
        "unchanged": &y == x,
        "levels": y.n_levels(),
        "directed_poset": y.index.is_directed_poset(),
        "iso_verified": true,
        "object": to_value(&*y),
        "iso": to_value(&iso),
    }))
}

pub fn pro_reindex(ws: &Workspace, object: &str) -> Resolved<Outcome> {
    let result = match ws.pro_object(object)? {
        AnyPro::Sets(x) => reindex_report(&FinSets, &x)?,
        AnyPro::Complexes(x) => reindex_report(&Complexes, &x)?,
    };
    let summary = format!("{object}: reindexed over a directed poset with {} levels", result["levels"]);
    Ok(Outcome::done(json!({ "object_name": object, "reindex": result }), summary))
}

fn levelwise_report<B: BaseCategory>(base: &B, f: &ProMap<B>) -> Resolved<Value> {
    let lw = core(levelwise_replace(base, f))?;
    core(lw.verify(base, f))?;
    let class = core(classify_representative(base, &lw.map))?;
    Ok(json!({
        "levels": lw.map.target.n_levels(),
        "classification": to_value(&class),
        "verified": true,
        "replacement": to_value(&lw),
    }))
}

pub fn pro_levelwise(ws: &Workspace, map: &str) -> Resolved<Outcome> {
    let result = match ws.pro_map(map)? {
        AnyProMap::Sets(f) => levelwise_report(&FinSets, &f)?,
        AnyProMap::Complexes(f) => levelwise_report(&Complexes, &f)?,
    };
    let summary = format!("{map}: levelwise over {} levels", result["levels"]);
    Ok(Outcome::done(json!({ "map": map, "levelwise": result }), summary))
}

pub fn pro_factor(ws: &Workspace, run: Run, map: &str, class: ProClass) -> Resolved<Outcome> {
    let AnyProMap::Complexes(f) = ws.pro_map(map)? else {
        return Err(Failure::Precondition("pro-factorize needs a map of pro-complexes".into()));
    };
    let fac = match pro_factorize(&f, class, run.budget()) {
        Ok(fac) => fac,
        Err(soa_core::Error::BudgetExhausted(m)) => {
            return Ok(Outcome {
                result: json!({ "map": map, "class": class, "stabilized": false, "reason": m }),
                exit: EXIT_BUDGET,
                summary: format!("{map} class {class:?}: budget exhausted ({m})"),
            })
        }
        Err(e) => return Err(Failure::from_core(e)),
    };
    core(fac.verify())?;
    let summary = format!(
        "{map} class {class:?}: {} after {} dual stages",
        if fac.stabilized() { "stabilized" } else { "not stabilized" },
        fac.stages()
    );
    Ok(Outcome {
        result: json!({
            "map": map,
            "class": class,
            "stabilized": fac.stabilized(),
            "stages_used": fac.stages(),
            "verified": true,
            "factorization": to_value(&fac),
        }),
        exit: if fac.stabilized() { 0 } else { EXIT_BUDGET },
        summary,
    })
}
