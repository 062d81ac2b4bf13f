//! Finite sets as a cell adapter, with generator systems given by a finite
//! list of maps. Small enough that every claim can be checked by enumeration.

use serde::{Deserialize, Serialize};

use super::{CellAdapter, LiftOutcome, Matched, MatchingSystem, Obstruction, Pushout, Split, Square};
use crate::error::{Error, Result};

/// A function `{0..source} -> {0..target}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinMap {
    pub source: usize,
    pub target: usize,
    pub values: Vec<usize>,
}

impl FinMap {
    pub fn new(source: usize, target: usize, values: Vec<usize>) -> Self {
        assert_eq!(values.len(), source, "function table length");
        assert!(values.iter().all(|&v| v < target), "value out of range");
        FinMap { source, target, values }
    }

    pub fn identity(n: usize) -> Self {
        FinMap { source: n, target: n, values: (0..n).collect() }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.values[x]
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target];
        for &v in &self.values {
            hit[v] = true;
        }
        hit.into_iter().all(|h| h)
    }

    /// Every function `source -> target`, in lexicographic order of tables.
    pub fn all(source: usize, target: usize) -> Vec<FinMap> {
        if target == 0 {
            return if source == 0 { vec![FinMap::identity(0)] } else { vec![] };
        }
        let mut out = Vec::new();
        let mut vals = vec![0; source];
        loop {
            out.push(FinMap { source, target, values: vals.clone() });
            let mut i = source;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                vals[i] += 1;
                if vals[i] < target {
                    break;
                }
                vals[i] = 0;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FinSetAdapter;

impl CellAdapter for FinSetAdapter {
    type Obj = usize;
    type Map = FinMap;

    fn source(&self, m: &FinMap) -> usize {
        m.source
    }
    fn target(&self, m: &FinMap) -> usize {
        m.target
    }
    fn identity(&self, x: &usize) -> FinMap {
        FinMap::identity(*x)
    }

    fn compose(&self, g: &FinMap, f: &FinMap) -> Result<FinMap> {
        if f.target != g.source {
            return Err(Error::EndpointMismatch(format!("{} -> {} after {} -> {}", g.source, g.target, f.source, f.target)));
        }
        Ok(FinMap { source: f.source, target: g.target, values: f.values.iter().map(|&x| g.values[x]).collect() })
    }

    fn maps_equal(&self, a: &FinMap, b: &FinMap) -> bool {
        a == b
    }

    fn pushout(&self, cell: &FinMap, attach: &FinMap) -> Result<Pushout<usize, FinMap>> {
        if cell.source != attach.source {
            return Err(Error::EndpointMismatch("pushout legs have different sources".into()));
        }
        // Elements of Z come first, then B; the root of a class is its least member.
        let nz = attach.target;
        let total = nz + cell.target;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for a in 0..cell.source {
            let u = find(&mut parent, attach.values[a]);
            let v = find(&mut parent, nz + cell.values[a]);
            if u != v {
                let (lo, hi) = if u < v { (u, v) } else { (v, u) };
                parent[hi] = lo;
            }
        }
        let mut label = vec![usize::MAX; total];
        let mut next = 0;
        let mut image = vec![0; total];
        for x in 0..total {
            let r = find(&mut parent, x);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            image[x] = label[r];
        }
        Ok(Pushout {
            object: next,
            from_cell: FinMap { source: cell.target, target: next, values: image[nz..].to_vec() },
            from_base: FinMap { source: nz, target: next, values: image[..nz].to_vec() },
        })
    }

    fn copair(&self, po: &Pushout<usize, FinMap>, from_cell: &FinMap, from_base: &FinMap) -> Result<FinMap> {
        let target = from_cell.target;
        if from_base.target != target {
            return Err(Error::EndpointMismatch("copair legs have different targets".into()));
        }
        let mut values = vec![None; po.object];
        let legs = [(&po.from_cell, from_cell), (&po.from_base, from_base)];
        for (leg, map) in legs {
            for x in 0..leg.source {
                let slot = &mut values[leg.values[x]];
                match *slot {
                    None => *slot = Some(map.values[x]),
                    Some(v) if v != map.values[x] => {
                        return Err(Error::NonCommutingSquare("copair legs disagree on the glued part".into()))
                    }
                    _ => {}
                }
            }
        }
        let values = values
            .into_iter()
            .map(|v| v.ok_or_else(|| Error::Internal("pushout legs are not jointly surjective".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(FinMap { source: po.object, target, values })
    }

    fn find_lift(&self, l: &FinMap, p: &FinMap, top: &FinMap, bottom: &FinMap) -> Result<LiftOutcome<FinMap>> {
        let mut values = vec![None; l.target];
        for a in 0..l.source {
            let b = l.values[a];
            match values[b] {
                None => values[b] = Some(top.values[a]),
                Some(v) if v != top.values[a] => {
                    return Ok(LiftOutcome::NoLift(Obstruction {
                        reason: "generator identifies points that the top map separates".into(),
                        witness: vec![b as u32],
                    }))
                }
                _ => {}
            }
        }
        for b in 0..l.target {
            if values[b].is_none() {
                match (0..p.source).find(|&x| p.values[x] == bottom.values[b]) {
                    Some(x) => values[b] = Some(x),
                    None => {
                        return Ok(LiftOutcome::NoLift(Obstruction {
                            reason: "bottom map hits a point outside the image".into(),
                            witness: vec![b as u32],
                        }))
                    }
                }
            }
        }
        Ok(LiftOutcome::Lift(FinMap { source: l.target, target: p.source, values: values.into_iter().map(Option::unwrap).collect() }))
    }

    fn factor_through(&self, j: &FinMap, m: &FinMap) -> Result<Option<FinMap>> {
        let mut values = Vec::with_capacity(m.source);
        for &y in &m.values {
            match (0..j.source).find(|&z| j.values[z] == y) {
                Some(z) => values.push(z),
                None => return Ok(None),
            }
        }
        Ok(Some(FinMap { source: m.source, target: j.source, values }))
    }
}

/// The functorial system attaching one copy of a generator per commuting
/// square from that generator into `f`.
#[derive(Clone, Debug)]
pub struct FinSetGenerators {
    pub generators: Vec<FinMap>,
}

impl FinSetGenerators {
    pub fn new(generators: Vec<FinMap>) -> Self {
        FinSetGenerators { generators }
    }

    /// All commuting squares `g -> f`, grouped by generator, in canonical order.
    pub fn squares(&self, f: &FinMap) -> Vec<(usize, Square<FinMap>)> {
        let mut out = Vec::new();
        for (gi, g) in self.generators.iter().enumerate() {
            for top in FinMap::all(g.source, f.source) {
                for bottom in FinMap::all(g.target, f.target) {
                    let ok = (0..g.source).all(|a| f.values[top.values[a]] == bottom.values[g.values[a]]);
                    if ok {
                        out.push((gi, Square { generator: g.clone(), top: top.clone(), bottom }));
                    }
                }
            }
        }
        out
    }

    fn cell_offsets(&self, squares: &[(usize, Square<FinMap>)]) -> (Vec<usize>, Vec<usize>) {
        let mut a_off = Vec::new();
        let mut b_off = Vec::new();
        let (mut a, mut b) = (0, 0);
        for (gi, _) in squares {
            a_off.push(a);
            b_off.push(b);
            a += self.generators[*gi].source;
            b += self.generators[*gi].target;
        }
        a_off.push(a);
        b_off.push(b);
        (a_off, b_off)
    }
}

impl MatchingSystem<FinSetAdapter> for FinSetGenerators {
    fn is_functorial(&self) -> bool {
        true
    }

    fn matched(&self, _a: &FinSetAdapter, f: &FinMap) -> Result<Matched<FinMap>> {
        let squares = self.squares(f);
        let (a_off, b_off) = self.cell_offsets(&squares);
        let (na, nb) = (*a_off.last().unwrap(), *b_off.last().unwrap());
        let mut cells = Vec::with_capacity(na);
        let mut top = Vec::with_capacity(na);
        let mut bottom = Vec::with_capacity(nb);
        for (k, (gi, sq)) in squares.iter().enumerate() {
            let g = &self.generators[*gi];
            cells.extend(g.values.iter().map(|&v| b_off[k] + v));
            top.extend(&sq.top.values);
            bottom.extend(&sq.bottom.values);
        }
        Ok(Matched {
            cells: FinMap { source: na, target: nb, values: cells },
            top: FinMap { source: na, target: f.source, values: top },
            bottom: FinMap { source: nb, target: f.target, values: bottom },
            count: squares.len(),
        })
    }

    fn probe(&self, a: &FinSetAdapter, f: &FinMap) -> Result<bool> {
        for (_, sq) in self.squares(f) {
            if !a.find_lift(&sq.generator, f, &sq.top, &sq.bottom)?.is_lift() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn split_square(
        &self,
        a: &FinSetAdapter,
        f: &FinMap,
        matched: &Matched<FinMap>,
        square: &Square<FinMap>,
    ) -> Result<Option<Split<FinMap>>> {
        if let LiftOutcome::Lift(h) = a.find_lift(&square.generator, f, &square.top, &square.bottom)? {
            return Ok(Some(Split::Direct(h)));
        }
        let squares = self.squares(f);
        let (a_off, b_off) = self.cell_offsets(&squares);
        for (k, (gi, sq)) in squares.iter().enumerate() {
            if self.generators[*gi] == square.generator && sq.top == square.top && sq.bottom == square.bottom {
                let g = &self.generators[*gi];
                let am = FinMap {
                    source: g.source,
                    target: matched.cells.source,
                    values: (0..g.source).map(|x| a_off[k] + x).collect(),
                };
                let bm = FinMap {
                    source: g.target,
                    target: matched.cells.target,
                    values: (0..g.target).map(|x| b_off[k] + x).collect(),
                };
                return Ok(Some(Split::Through { a: am, b: bm }));
            }
        }
        Ok(None)
    }

    fn induced(
        &self,
        _a: &FinSetAdapter,
        _f1: &FinMap,
        m1: &Matched<FinMap>,
        f2: &FinMap,
        m2: &Matched<FinMap>,
        g_top: &FinMap,
        g_bottom: &FinMap,
    ) -> Result<(FinMap, FinMap)> {
        let sq1 = self.squares(_f1);
        let sq2 = self.squares(f2);
        let (a1, b1) = self.cell_offsets(&sq1);
        let (a2, b2) = self.cell_offsets(&sq2);
        let mut top = Vec::with_capacity(m1.cells.source);
        let mut bottom = Vec::with_capacity(m1.cells.target);
        for (k, (gi, sq)) in sq1.iter().enumerate() {
            let moved_top: Vec<usize> = sq.top.values.iter().map(|&x| g_top.values[x]).collect();
            let moved_bottom: Vec<usize> = sq.bottom.values.iter().map(|&y| g_bottom.values[y]).collect();
            let j = sq2
                .iter()
                .position(|(gj, s)| gj == gi && s.top.values == moved_top && s.bottom.values == moved_bottom)
                .ok_or_else(|| Error::Internal("image square missing from the target system".into()))?;
            let g = &self.generators[*gi];
            top.extend((0..g.source).map(|x| a2[j] + x));
            bottom.extend((0..g.target).map(|x| b2[j] + x));
            debug_assert_eq!(top.len(), a1[k + 1]);
            debug_assert_eq!(bottom.len(), b1[k + 1]);
        }
        Ok((
            FinMap { source: m1.cells.source, target: m2.cells.source, values: top },
            FinMap { source: m1.cells.target, target: m2.cells.target, values: bottom },
        ))
    }
}
