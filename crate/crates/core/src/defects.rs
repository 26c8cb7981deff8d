//! Fermion (and me^q) strings, condensation defect lines and their twist endpoints.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::algebra::{operator_with_syndrome, product};
use crate::error::{Error, Result};
use crate::floquet::{make_measurable, run_rounds, FloquetCode, Round, RunTrace, Schedule};
use crate::lattice::{HexLattice, LatticePath, Topology};
use crate::modular::{howell_rows, left_kernel, solve_combination};
use crate::pauli::PauliWord;
use crate::stabilizer::{Expectation, StabilizerGroup};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectLine {
    pub path: LatticePath,
    pub defect_checks: Vec<PauliWord>,
    /// Path edge hosting each defect check.
    pub defect_edges: Vec<usize>,
    pub removed: Vec<usize>,
    /// Twist sites, `None` for closed lines.
    pub endpoints: Option<(usize, usize)>,
}

impl DefectLine {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "path": self.path.vertices,
            "edges": self.path.edges,
            "removed": self.removed,
            "defect_edges": self.defect_edges,
            "defect_checks": self.defect_checks.iter().map(|w| w.to_text()).collect::<Vec<_>>(),
            "endpoints": self.endpoints,
        })
    }
}

/// Single-site factor of the right-hand completion at path vertex `k`.
///
/// At an interior vertex this is the product of the `S_p` factors at that
/// vertex over the plaquettes to the right of the direction of travel; at an
/// open endpoint only the plaquette to the right of the single path edge counts.
fn vertex_factor(code: &FloquetCode, path: &LatticePath, k: usize) -> PauliWord {
    let lat = &code.lattice;
    let verts = &path.vertices;
    let n_body = if path.closed { verts.len() - 1 } else { verts.len() };
    let v = verts[k % n_body];
    let prev = if k > 0 {
        Some(verts[k - 1])
    } else if path.closed {
        Some(verts[n_body - 1])
    } else {
        None
    };
    let next = if k + 1 < verts.len() { Some(verts[k + 1]) } else { None };
    let mut plaqs: Vec<usize> = Vec::new();
    if let Some(u) = prev {
        plaqs.extend(lat.right_plaquette(u, v));
    }
    if let Some(w) = next {
        if let Some(p) = lat.right_plaquette(v, w) {
            if !plaqs.contains(&p) {
                plaqs.push(p);
            }
        }
    }
    let mut out = PauliWord::identity(code.n_qudits(), code.params.n);
    for p in plaqs {
        out.mul_assign_unchecked(&code.site_pauli(v, lat.external_label(p, v)));
    }
    out
}

/// Unwrapped extent of a path in lattice coordinates.
fn path_extent(lat: &HexLattice, path: &LatticePath) -> (f64, f64) {
    let (mut i, mut j) = (0.0f64, 0.0f64);
    let (mut lo, mut hi) = ((0.0f64, 0.0f64), (0.0f64, 0.0f64));
    for w in path.vertices.windows(2) {
        let d = lat.vertex_step(w[0], w[1]);
        i += d.0;
        j += d.1;
        lo = (lo.0.min(i), lo.1.min(j));
        hi = (hi.0.max(i), hi.1.max(j));
    }
    (hi.0 - lo.0, hi.1 - lo.1)
}

/// The emergent-fermion string along `path` (the me^q string for N > 2).
pub fn fermion_string(code: &FloquetCode, path: &LatticePath) -> Result<PauliWord> {
    if code.params.n == 2 {
        let mut out = PauliWord::identity(code.n_qudits(), 2);
        for &e in &path.edges {
            out.mul_assign_unchecked(&code.edge_check(e));
        }
        return Ok(out);
    }
    if !path.closed {
        if let Topology::Torus { lx, ly } = code.lattice.topology {
            let (di, dj) = path_extent(&code.lattice, path);
            if di >= lx as f64 - 1.0 || dj >= ly as f64 - 1.0 {
                return Err(Error::Completion(format!("open path spans {di:.0}x{dj:.0} cells on a {lx}x{ly} torus; no disk completion")));
            }
        }
    }
    let n_body = if path.closed { path.vertices.len() - 1 } else { path.vertices.len() };
    let mut out = PauliWord::identity(code.n_qudits(), code.params.n);
    for k in 0..n_body {
        out.mul_assign_unchecked(&vertex_factor(code, path, k));
    }
    Ok(out)
}

/// Closed string along the straight non-contractible zigzag at offset 0.
pub fn closed_fermion_loop(code: &FloquetCode, horizontal: bool) -> Result<PauliWord> {
    let cycle = code.lattice.noncontractible_cycle(horizontal, 0)?;
    fermion_string(code, &cycle)
}

/// Condenses the fermion along `path`: adds its defect checks and removes the
/// checks they fail to commute with.
pub fn insert_defect_line(code: &FloquetCode, path: &LatticePath) -> Result<(FloquetCode, DefectLine)> {
    let len = path.len();
    if !path.closed && len.is_multiple_of(2) {
        return Err(Error::OddLengthRequired(len));
    }
    if path.closed && len % 2 == 1 {
        return Err(Error::InvalidPath("closed defect lines need even length".into()));
    }
    if !path.closed && len < 3 {
        return Err(Error::InvalidPath("defect lines need at least three edges".into()));
    }
    let lat = &code.lattice;
    // Vertices of the line must be bulk trivalent so every factor is defined.
    for &v in &path.vertices {
        if lat.degree(v) != 3 {
            return Err(Error::InvalidPath(format!("vertex {v} lies on the boundary")));
        }
    }
    let used: BTreeSet<usize> = code.defect_lines.iter().flat_map(|l| l.path.vertices.iter().copied()).collect();
    if let Some(&v) = path.vertices.iter().find(|v| used.contains(v)) {
        return Err(Error::DefectConflict(v));
    }
    let m = if path.closed { len / 2 } else { (len - 1) / 2 };
    let mut defect_checks = Vec::with_capacity(m);
    let mut defect_edges = Vec::with_capacity(m);
    for j in 1..=m {
        let (a, b) = (2 * j - 1, 2 * j);
        let mut d = vertex_factor(code, path, a);
        d.mul_assign_unchecked(&vertex_factor(code, path, b));
        defect_checks.push(make_measurable(d));
        defect_edges.push(path.edges[a]);
    }
    let removed: Vec<usize> = (0..len).step_by(2).map(|k| path.edges[k]).collect();
    if let Some(&e) = removed.iter().find(|e| code.removed.contains(e)) {
        return Err(Error::DefectConflict(e));
    }
    let mut out = code.clone();
    out.removed.extend(removed.iter().copied());
    let endpoints = (!path.closed).then(|| path.endpoints());
    let line = DefectLine { path: path.clone(), defect_checks, defect_edges, removed, endpoints };
    out.defect_lines.push(line.clone());
    check_defect_invariants(&out)?;
    Ok((out, line))
}

fn check_defect_invariants(code: &FloquetCode) -> Result<()> {
    let active = code.active_checks();
    for (id, d) in active.iter().filter(|(id, _)| matches!(id, crate::floquet::CheckId::Defect(_))) {
        if let Some((other, _)) = active.iter().find(|(_, k)| !k.commutes_with(d)) {
            return Err(Error::Decomposition(format!("defect check {id} fails to commute with {other}")));
        }
    }
    Ok(())
}

/// The three-round period `(0̃*,1*,2*)` after `d−1` plain periods, or the six-round period.
pub fn defect_schedule(code: &FloquetCode, d: usize, six_round: bool) -> Result<Schedule> {
    if code.defect_lines.is_empty() {
        return Err(Error::Schedule("defect schedule needs defect lines".into()));
    }
    if d == 0 {
        return Err(Error::Params("distance must be at least 1".into()));
    }
    let mut init = Schedule::standard().init;
    for _ in 1..d {
        init.extend([Round::Plain(0), Round::Plain(1), Round::Plain(2)]);
    }
    let period = if six_round {
        if code.removed.iter().any(|&e| code.lattice.edges[e].color == 2) {
            return Err(Error::InferenceImpossible);
        }
        vec![Round::Tilde(0), Round::Star(1), Round::Star(2), Round::Star(1), Round::Tilde(0), Round::Star(2)]
    } else {
        vec![Round::Tilde(0), Round::Star(1), Round::Star(2)]
    };
    Ok(Schedule { init, period })
}

/// Plaquettes whose stabilizer is disturbed by the defect lines: they contain
/// a removed edge or fail to commute with some defect check.
pub fn touched_plaquettes(code: &FloquetCode) -> Vec<usize> {
    let defects = code.defect_checks();
    (0..code.lattice.num_plaquettes())
        .filter(|&p| {
            let s = code.plaquette_stabilizer(p);
            code.lattice.plaquettes[p].edges.iter().any(|e| code.removed.contains(e)) || defects.iter().any(|d| !d.commutes_with(&s))
        })
        .collect()
}

/// Untouched `S_p`, products of touched ones that commute with every defect
/// check, and the defect checks themselves.
pub fn static_generators(code: &FloquetCode) -> Result<Vec<PauliWord>> {
    let touched = touched_plaquettes(code);
    let mut gens: Vec<PauliWord> =
        (0..code.lattice.num_plaquettes()).filter(|p| !touched.contains(p)).map(|p| code.plaquette_stabilizer(p)).collect();
    gens.extend(touched_products(code, &touched));
    gens.extend(code.defect_checks());
    Ok(gens)
}

fn touched_products(code: &FloquetCode, touched: &[usize]) -> Vec<PauliWord> {
    local_touched_products(code, touched).into_iter().map(|(_, w)| w).collect()
}

/// A generating set of the touched products that commute with every defect
/// check, built from the smallest adjacent clusters of touched plaquettes
/// first so each element stays local to the line. Each entry lists the
/// plaquette exponents alongside the word.
fn local_touched_products(code: &FloquetCode, touched: &[usize]) -> Vec<(Vec<(usize, u64)>, PauliWord)> {
    if touched.is_empty() {
        return Vec::new();
    }
    let n = code.params.n as u64;
    let defects = code.defect_checks();
    let words: Vec<PauliWord> = touched.iter().map(|&p| code.plaquette_stabilizer(p)).collect();
    let mat: Vec<Vec<u64>> = words.iter().map(|w| defects.iter().map(|d| w.comm_unchecked(d) as u64).collect()).collect();
    let full = left_kernel(&mat, n);
    let lat = &code.lattice;
    let adjacent = |a: usize, b: usize| {
        let ca = &lat.plaquettes[touched[a]].cycle;
        lat.plaquettes[touched[b]].cycle.iter().filter(|v| ca.contains(v)).count() >= 2
    };
    let m = touched.len();
    let mut clusters: Vec<Vec<usize>> = (0..m).map(|a| vec![a]).collect();
    for a in 0..m {
        for b in a + 1..m {
            if adjacent(a, b) {
                clusters.push(vec![a, b]);
            }
        }
    }
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let links = [adjacent(a, b), adjacent(b, c), adjacent(a, c)];
                if links.iter().filter(|&&x| x).count() >= 2 {
                    clusters.push(vec![a, b, c]);
                }
            }
        }
    }
    let mut chosen: Vec<Vec<u64>> = Vec::new();
    let spans = |chosen: &Vec<Vec<u64>>, v: &Vec<u64>| solve_combination(chosen, v, n).is_some();
    let push = |chosen: &mut Vec<Vec<u64>>, v: Vec<u64>| {
        if !spans(chosen, &v) {
            chosen.push(v);
        }
    };
    for cl in &clusters {
        if full.iter().all(|v| spans(&chosen, v)) {
            break;
        }
        let sub: Vec<Vec<u64>> = cl.iter().map(|&a| mat[a].clone()).collect();
        for kv in left_kernel(&sub, n) {
            let mut v = vec![0u64; m];
            for (&a, &c) in cl.iter().zip(&kv) {
                v[a] = c;
            }
            push(&mut chosen, v);
        }
    }
    for v in &full {
        push(&mut chosen, v.clone());
    }
    chosen
        .into_iter()
        .map(|c| {
            let w = product(&words[0], &words, &c);
            let exps = touched.iter().zip(&c).filter(|(_, &e)| e != 0).map(|(&p, &e)| (p, e)).collect();
            (exps, w)
        })
        .filter(|(_, w)| !w.is_scalar())
        .collect()
}

/// For each removed edge, the product of the two plaquettes sharing it raised
/// to the exponents that commute with every defect check. Long strings along
/// whole lines are deliberately not produced.
fn removed_edge_products(code: &FloquetCode) -> Vec<(Vec<(usize, u64)>, PauliWord)> {
    let n = code.params.n as u64;
    let defects = code.defect_checks();
    let mut out: Vec<(Vec<(usize, u64)>, PauliWord)> = Vec::new();
    for &e in &code.removed {
        let plaqs = code.lattice.edge_plaquettes(e);
        let words: Vec<PauliWord> = plaqs.iter().map(|&p| code.plaquette_stabilizer(p)).collect();
        let mat: Vec<Vec<u64>> = words.iter().map(|w| defects.iter().map(|d| w.comm_unchecked(d) as u64).collect()).collect();
        for c in left_kernel(&mat, n) {
            let w = product(&words[0], &words, &c);
            if w.is_scalar() || out.iter().any(|(_, o)| o.phaseless() == w.phaseless()) {
                continue;
            }
            let exps = plaqs.iter().zip(&c).filter(|(_, &a)| a != 0).map(|(&p, &a)| (p, a)).collect();
            out.push((exps, w));
        }
    }
    out
}

/// A touched-plaquette product dressed with defect checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineProduct {
    pub plaquettes: Vec<(usize, u64)>,
    pub defects: Vec<(usize, u64)>,
    #[serde(skip)]
    pub word: PauliWord,
}

/// Static stabilizers used as detectors: untouched plaquettes, dressed line
/// products and the defect checks, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticStabilizers {
    pub plaquettes: Vec<usize>,
    pub products: Vec<LineProduct>,
    pub defects: Vec<PauliWord>,
    words: Vec<PauliWord>,
}

impl StaticStabilizers {
    pub fn generators(&self) -> &[PauliWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn label(&self, i: usize) -> String {
        let (a, b) = (self.plaquettes.len(), self.products.len());
        if i < a {
            format!("S{}", self.plaquettes[i])
        } else if i < a + b {
            format!("P{}", i - a)
        } else {
            format!("D{}", i - a - b)
        }
    }

    pub fn is_defect(&self, i: usize) -> bool {
        i >= self.plaquettes.len() + self.products.len()
    }
}

/// The Pauli error that may follow each active edge check: its factor on the
/// first endpoint.
pub fn single_error_paulis(code: &FloquetCode) -> Vec<(usize, PauliWord)> {
    (0..code.lattice.num_edges())
        .filter(|e| !code.removed.contains(e))
        .map(|e| {
            let edge = &code.lattice.edges[e];
            (e, code.site_pauli(edge.a, edge.label))
        })
        .collect()
}

/// Number of single errors whose count of violated generators is not 2
/// (1 is also accepted on planar patches, where the boundary absorbs the other end).
pub fn pair_flip_violations(code: &FloquetCode, gens: &[PauliWord]) -> usize {
    let planar = !code.lattice.is_torus();
    single_error_paulis(code)
        .iter()
        .filter(|(_, e)| {
            let c = gens.iter().filter(|g| !g.commutes_with(e)).count();
            !(c == 2 || planar && c == 1)
        })
        .count()
}

const MAX_MULTIPLIERS: usize = 4096;

/// Static stabilizers with each line product multiplied by nearby defect
/// checks so that single errors violate pairs of generators where possible.
pub fn static_stabilizers(code: &FloquetCode) -> Result<StaticStabilizers> {
    let touched = touched_plaquettes(code);
    let plaquettes: Vec<usize> = (0..code.lattice.num_plaquettes()).filter(|p| !touched.contains(p)).collect();
    let defects = code.defect_checks();
    let raw = removed_edge_products(code);
    let n = code.params.n as u64;
    let planar = !code.lattice.is_torus();
    let errors: Vec<PauliWord> = single_error_paulis(code).into_iter().map(|(_, w)| w).collect();
    let flips = |w: &PauliWord| -> Vec<bool> { errors.iter().map(|e| !w.commutes_with(e)).collect() };
    let mut counts = vec![0usize; errors.len()];
    for w in plaquettes.iter().map(|&p| code.plaquette_stabilizer(p)).chain(defects.iter().cloned()) {
        for (c, f) in counts.iter_mut().zip(flips(&w)) {
            *c += f as usize;
        }
    }
    let penalty = |counts: &[usize]| counts.iter().filter(|&&c| !(c == 2 || planar && c == 1)).count();

    // Each product is treated in turn and multiplied by whichever combination
    // of nearby defect checks and other products lowers the violation count.
    // Every move keeps a unit exponent on the product itself, so the set
    // stays a generating set.
    #[derive(Clone)]
    struct State {
        plaqs: Vec<u64>,
        dexps: Vec<u64>,
        word: PauliWord,
        flips: Vec<bool>,
    }
    let m = touched.len();
    let mut states: Vec<State> = raw
        .iter()
        .map(|(exps, w)| {
            let mut plaqs = vec![0u64; m];
            for &(p, e) in exps {
                plaqs[touched.iter().position(|&q| q == p).unwrap()] = e;
            }
            State { plaqs, dexps: vec![0; defects.len()], word: w.clone(), flips: flips(w) }
        })
        .collect();
    let add = |counts: &mut [usize], f: &[bool], sign: bool| {
        for (c, &x) in counts.iter_mut().zip(f) {
            if x {
                if sign {
                    *c += 1
                } else {
                    *c -= 1
                }
            }
        }
    };
    for st in &states {
        add(&mut counts, &st.flips, true);
    }
    let nearby = |a: &PauliWord, b: &PauliWord| {
        let near: BTreeSet<usize> = a.support().iter().flat_map(|&v| ball(&code.lattice, v, 1)).collect();
        b.support().iter().any(|v| near.contains(v))
    };
    for _sweep in 0..8 {
        let mut changed = false;
        for k in 0..states.len() {
            add(&mut counts, &states[k].flips, false);
            // Factors: (is_defect, index).
            let factors: Vec<(bool, usize)> =
                (0..defects.len()).filter(|&d| nearby(&states[k].word, &defects[d])).map(|d| (true, d)).collect();
            let nn = n as usize;
            let mut total = 1usize;
            let mut used_factors = 0;
            while used_factors < factors.len() && total.saturating_mul(nn) <= MAX_MULTIPLIERS {
                total *= nn;
                used_factors += 1;
            }
            let score = |f: &[bool]| {
                let trial: Vec<usize> = counts.iter().zip(f).map(|(&c, &x)| c + x as usize).collect();
                penalty(&trial)
            };
            let mut best: (usize, Option<State>) = (score(&states[k].flips), None);
            for idx in 1..total {
                let mut rest = idx;
                let mut cand = states[k].clone();
                for &(is_d, j) in &factors[..used_factors] {
                    let a = (rest % nn) as u64;
                    rest /= nn;
                    if a == 0 {
                        continue;
                    }
                    if is_d {
                        cand.word.mul_pow_assign(&defects[j], a as i64);
                        cand.dexps[j] = (cand.dexps[j] + a) % n;
                    } else {
                        cand.word.mul_pow_assign(&states[j].word, a as i64);
                        for t in 0..m {
                            cand.plaqs[t] = (cand.plaqs[t] + a * states[j].plaqs[t]) % n;
                        }
                        for t in 0..defects.len() {
                            cand.dexps[t] = (cand.dexps[t] + a * states[j].dexps[t]) % n;
                        }
                    }
                }
                cand.flips = flips(&cand.word);
                let sc = score(&cand.flips);
                if sc < best.0 {
                    best = (sc, Some(cand));
                }
            }
            if let Some(c) = best.1 {
                states[k] = c;
                changed = true;
            }
            add(&mut counts, &states[k].flips, true);
        }
        if !changed || penalty(&counts) == 0 {
            break;
        }
    }
    let products: Vec<LineProduct> = states
        .into_iter()
        .map(|st| LineProduct {
            plaquettes: touched.iter().zip(&st.plaqs).filter(|(_, &e)| e != 0).map(|(&p, &e)| (p, e)).collect(),
            defects: st.dexps.iter().enumerate().filter(|(_, &e)| e != 0).map(|(d, &e)| (d, e)).collect(),
            word: st.word,
        })
        .collect();
    let mut words: Vec<PauliWord> = plaquettes.iter().map(|&p| code.plaquette_stabilizer(p)).collect();
    words.extend(products.iter().map(|p| p.word.clone()));
    words.extend(defects.iter().cloned());
    Ok(StaticStabilizers { plaquettes, products, defects, words })
}

/// Vertices within graph distance `r` of `v`.
pub fn ball(lat: &HexLattice, v: usize, r: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; lat.num_vertices()];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut out = vec![v];
    while let Some(u) = queue.pop_front() {
        if dist[u] == r {
            continue;
        }
        for w in lat.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out
}

/// Multiplies `w` by an operator near `sites` so that the result commutes
/// with every active check.
pub fn complete_near(code: &FloquetCode, w: &PauliWord, sites: &[usize]) -> Result<PauliWord> {
    let constraints: Vec<PauliWord> = code.active_checks().into_iter().map(|(_, k)| k).collect();
    let n = code.params.n as u64;
    let targets: Vec<u64> = constraints.iter().map(|k| (n - w.comm_unchecked(k) as u64) % n).collect();
    let fix = operator_with_syndrome(code.n_qudits(), code.params.n, sites, &constraints, &targets)
        .ok_or_else(|| Error::Completion("no local endpoint correction commutes with the checks".into()))?;
    w.mul(&fix)
}

/// `W^ψ` along the line between its two twists, corrected at the endpoints
/// so that it commutes with every check.
pub fn line_string(code: &FloquetCode, line: usize) -> Result<PauliWord> {
    let l = code.defect_lines.get(line).ok_or(Error::Unknown { kind: "defect line", index: line })?;
    let w = fermion_string(code, &l.path)?;
    let Some((a, b)) = l.endpoints else { return Ok(w) };
    let mut sites = ball(&code.lattice, a, 2);
    sites.extend(ball(&code.lattice, b, 2));
    sites.sort_unstable();
    sites.dedup();
    complete_near(code, &w, &sites)
}

/// The line string carried over from the defect-free ISG `⟨S_p, pre-checks⟩`
/// into the defect code: an element of that group times defect checks which
/// commutes with every active check and agrees with the line's fermion string
/// away from the twists.
pub fn carried_line_string(code: &FloquetCode, line: usize, pre: Round) -> Result<PauliWord> {
    let l = code.defect_lines.get(line).ok_or(Error::Unknown { kind: "defect line", index: line })?;
    let w = fermion_string(code, &l.path)?;
    let Some((a, b)) = l.endpoints else { return Ok(w) };
    let mut near = ball(&code.lattice, a, 2);
    near.extend(ball(&code.lattice, b, 2));
    let far: Vec<usize> = (0..code.n_qudits()).filter(|v| !near.contains(v)).collect();
    let mut gens = code.plaquette_stabilizers();
    let plain = FloquetCode { removed: BTreeSet::new(), defect_lines: Vec::new(), ..code.clone() };
    gens.extend(plain.round_checks(Round::Plain(pre.color()))?.into_iter().map(|(_, k)| k));
    gens.extend(code.defect_checks());
    let active: Vec<PauliWord> = code.active_checks().into_iter().map(|(_, k)| k).collect();
    let row = |g: &PauliWord| -> Vec<u64> {
        let mut r: Vec<u64> = active.iter().map(|k| g.comm_unchecked(k) as u64).collect();
        for &v in &far {
            r.push(g.x_at(v) as u64);
            r.push(g.z_at(v) as u64);
        }
        r
    };
    let rows: Vec<Vec<u64>> = gens.iter().map(row).collect();
    let mut target = vec![0u64; active.len()];
    for &v in &far {
        target.push(w.x_at(v) as u64);
        target.push(w.z_at(v) as u64);
    }
    let exps = crate::modular::solve_combination(&rows, &target, code.params.n as u64)
        .ok_or_else(|| Error::Completion(format!("line {line} string is not carried by the {}-round group", pre.color())))?;
    Ok(product(&w, &gens, &exps))
}

/// Geometric side of plaquette `p` relative to a line through vertex `mid`
/// with direction `dir`: positive on the left.
fn side(lat: &HexLattice, mid: usize, dir: (f64, f64), p: usize) -> f64 {
    let rel = lat.vertex_to_plaquette(mid, p);
    dir.0 * rel.1 - dir.1 * rel.0
}

fn path_direction(lat: &HexLattice, path: &LatticePath) -> (f64, f64) {
    path.vertices.windows(2).fold((0.0, 0.0), |acc, w| {
        let d = lat.vertex_delta(w[0], w[1]);
        (acc.0 + d.0, acc.1 + d.1)
    })
}

/// Pairs of plaquettes on opposite sides of `path`, next to it and away from
/// its ends, nearest pairs first. The first of each pair lies on the left.
pub fn crossing_candidates(code: &FloquetCode, path: &LatticePath, limit: usize) -> Vec<(usize, usize)> {
    let lat = &code.lattice;
    let mid = path.vertices[path.vertices.len() / 2];
    let dir = path_direction(lat, path);
    let d_path = distances(lat, &path.vertices);
    let ends = [path.vertices[0], *path.vertices.last().unwrap()];
    let d_ends = distances(lat, &ends);
    let near: Vec<usize> = (0..lat.num_plaquettes())
        .filter(|&p| {
            let cyc = &lat.plaquettes[p].cycle;
            cyc.iter().all(|&v| d_path[v] > 0 && d_ends[v] > 1) && cyc.iter().any(|&v| d_path[v] == 1)
        })
        .collect();
    let (left, right): (Vec<usize>, Vec<usize>) = near.iter().partition(|&&p| side(lat, mid, dir, p) > 0.0);
    let centre = |p: usize| {
        let r = lat.vertex_to_plaquette(mid, p);
        r.0.hypot(r.1)
    };
    let mut pairs: Vec<(f64, usize, usize)> =
        left.iter().flat_map(|&a| right.iter().map(move |&b| (centre(a) + centre(b), a, b))).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().take(limit).map(|(_, a, b)| (a, b)).collect()
}

/// Local generators after round `t`: the static set plus the round's checks.
fn local_generators(code: &FloquetCode, trace: &RunTrace, t: usize) -> Result<Vec<PauliWord>> {
    let mut base = if code.defect_lines.is_empty() { code.plaquette_stabilizers() } else { static_generators(code)? };
    base.extend(code.round_checks(trace.rounds[t].label)?.into_iter().map(|(_, w)| w));
    Ok(base)
}

/// Graph distance from the nearest of `src` to every vertex.
fn distances(lat: &HexLattice, src: &[usize]) -> Vec<usize> {
    let mut d = vec![usize::MAX; lat.num_vertices()];
    let mut q = VecDeque::new();
    for &s in src {
        d[s] = 0;
        q.push_back(s);
    }
    while let Some(u) = q.pop_front() {
        for w in lat.neighbors(u) {
            if d[w] == usize::MAX {
                d[w] = d[u] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// The part of a group supported inside a window of sites, kept as exponent
/// rows so that balls inside the window can be cut out cheaply.
struct Window {
    n_qudits: usize,
    dim: u32,
    sites: Vec<usize>,
    rows: Vec<Vec<u64>>,
}

impl Window {
    fn new(n_qudits: usize, dim: u32, gens: &[PauliWord], sites: Vec<usize>) -> Self {
        let inside: BTreeSet<usize> = sites.iter().copied().collect();
        let outside: Vec<usize> = (0..n_qudits).filter(|v| !inside.contains(v)).collect();
        let rows = supported_rows(gens.iter().map(|g| exps_on(g, &outside, &sites)).collect(), 2 * outside.len(), dim);
        Window { n_qudits, dim, sites, rows }
    }

    /// Group elements supported on `ball`, which must lie inside the window.
    fn local(&self, ball: &[usize]) -> Vec<PauliWord> {
        let inside: BTreeSet<usize> = ball.iter().copied().collect();
        let pos: Vec<usize> = (0..self.sites.len()).filter(|&i| !inside.contains(&self.sites[i])).collect();
        let keep: Vec<usize> = (0..self.sites.len()).filter(|&i| inside.contains(&self.sites[i])).collect();
        let pick = |r: &Vec<u64>, idx: &[usize]| idx.iter().flat_map(|&i| [r[2 * i], r[2 * i + 1]]).collect::<Vec<u64>>();
        let rows: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|r| {
                let mut out = pick(r, &pos);
                out.extend(pick(r, &keep));
                out
            })
            .collect();
        supported_rows(rows, 2 * pos.len(), self.dim)
            .into_iter()
            .map(|r| {
                let mut x = vec![0i64; self.n_qudits];
                let mut z = vec![0i64; self.n_qudits];
                for (k, &i) in keep.iter().enumerate() {
                    x[self.sites[i]] = r[2 * k] as i64;
                    z[self.sites[i]] = r[2 * k + 1] as i64;
                }
                PauliWord::from_parts(self.dim, x, z, 0).expect("matching lengths")
            })
            .collect()
    }
}

fn exps_on(g: &PauliWord, first: &[usize], then: &[usize]) -> Vec<u64> {
    first.iter().chain(then).flat_map(|&v| [g.x_at(v) as u64, g.z_at(v) as u64]).collect()
}

/// Rows of the span that vanish on the first `skip` columns, with those
/// columns dropped. Relies on the Howell property of the echelon form.
fn supported_rows(rows: Vec<Vec<u64>>, skip: usize, dim: u32) -> Vec<Vec<u64>> {
    if rows.is_empty() {
        return rows;
    }
    howell_rows(rows, dim as u64).into_iter().filter(|r| r[..skip].iter().all(|&x| x == 0)).map(|r| r[skip..].to_vec()).collect()
}

/// Radius of the balls used to cut a group into local pieces.
const LOCAL_RADIUS: usize = 3;

/// Local elements of `group` on balls centred within `LOCAL_RADIUS` of
/// `sites`, skipping balls that meet `exclude`.
fn local_constraints(code: &FloquetCode, group: &[PauliWord], sites: &[usize], exclude: &[usize]) -> Vec<PauliWord> {
    let lat = &code.lattice;
    let d_sites = distances(lat, sites);
    let d_excl = distances(lat, exclude);
    let centres: Vec<usize> = (0..lat.num_vertices()).filter(|&v| d_sites[v] <= LOCAL_RADIUS && d_excl[v] > LOCAL_RADIUS).collect();
    let window: Vec<usize> = (0..lat.num_vertices()).filter(|&v| d_sites[v] <= 2 * LOCAL_RADIUS).collect();
    let win = Window::new(code.n_qudits(), code.params.n, group, window);
    let mut out: Vec<PauliWord> = Vec::new();
    for v in centres {
        out.extend(win.local(&ball(lat, v, LOCAL_RADIUS)));
    }
    out
}

/// A string on a tube around `pa`, `pb` and a near-geodesic between them that
/// carries unit charge at `pa`, charge `cb` at `pb`, and commutes with every
/// other local element of `group` along the way.
///
/// `base` supplies the plaquette stabilizers and checks; the local pieces of
/// `group` are cut from balls that stay clear of both plaquettes.
pub fn crossing_string(code: &FloquetCode, base: &[PauliWord], group: &[PauliWord], pa: usize, pb: usize, cb: u32) -> Option<PauliWord> {
    let lat = &code.lattice;
    let (sa, sb) = (code.plaquette_stabilizer(pa), code.plaquette_stabilizer(pb));
    let (ca, cbv) = (&lat.plaquettes[pa].cycle, &lat.plaquettes[pb].cycle);
    let (da, db) = (distances(lat, ca), distances(lat, cbv));
    let gap = ca.iter().map(|&v| db[v]).min()?;
    let tube: Vec<usize> = (0..lat.num_vertices()).filter(|&v| da[v].saturating_add(db[v]) <= gap + 2).collect();
    let same = |g: &PauliWord, s: &PauliWord| g.x_exps() == s.x_exps() && g.z_exps() == s.z_exps();
    let touches = |g: &PauliWord| g.support().iter().any(|v| tube.binary_search(v).is_ok());
    let mut constraints = vec![sa.clone(), sb.clone()];
    let mut targets = vec![1u64, cb as u64];
    for g in base {
        if !same(g, &sa) && !same(g, &sb) && touches(g) {
            constraints.push(g.clone());
            targets.push(0);
        }
    }
    let ends: Vec<usize> = ca.iter().chain(cbv).copied().collect();
    for g in local_constraints(code, group, &tube, &ends) {
        constraints.push(g);
        targets.push(0);
    }
    operator_with_syndrome(code.n_qudits(), code.params.n, &tube, &constraints, &targets)
}

/// Corrects the string `w`, which starts at `twist` and ends at `far`, by an
/// operator near the twist so it commutes with every local element of the
/// group except those at the far end. `None` means the string cannot
/// terminate at `twist`.
pub fn condensed_at(code: &FloquetCode, gens: &[PauliWord], w: &PauliWord, twist: usize, far: usize) -> Option<PauliWord> {
    let lat = &code.lattice;
    let near = ball(lat, twist, 2);
    let n = code.params.n as u64;
    let mut sites = w.support();
    sites.extend(&near);
    let far_end: Vec<usize> = (0..lat.num_plaquettes())
        .filter(|&p| lat.plaquettes[p].cycle.contains(&far))
        .flat_map(|p| lat.plaquettes[p].cycle.clone())
        .collect();
    let constraints = local_constraints(code, gens, &sites, &far_end);
    let targets: Vec<u64> = constraints.iter().map(|g| (n - w.comm_unchecked(g) as u64) % n).collect();
    let fix = operator_with_syndrome(code.n_qudits(), code.params.n, &near, &constraints, &targets)?;
    w.mul(&fix).ok()
}

/// A path of the given length from `v` heading away from the `avoid` vertices.
pub fn outward_path(lat: &HexLattice, v: usize, len: usize, avoid: &[usize]) -> Option<LatticePath> {
    let nv = lat.num_vertices();
    let bfs = |src: &[usize]| {
        let mut d = vec![usize::MAX; nv];
        let mut q = VecDeque::new();
        for &s in src {
            d[s] = 0;
            q.push_back(s);
        }
        while let Some(u) = q.pop_front() {
            for w in lat.neighbors(u) {
                if d[w] == usize::MAX {
                    d[w] = d[u] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    };
    let from_v = bfs(&[v]);
    let from_avoid = bfs(avoid);
    let target = (0..nv).filter(|&w| from_v[w] == len).max_by_key(|&w| (from_avoid[w], std::cmp::Reverse(w)))?;
    lat.shortest_path(v, target)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectRoundCheck {
    pub round_index: usize,
    pub round: String,
    /// Charge placed on the r-plaquette by the crossing string, if one exists.
    pub crossing_charge: Option<u32>,
    pub plaquettes: (usize, usize),
    /// Endpoint condensation at each twist.
    pub condensed: Vec<bool>,
}

impl DefectRoundCheck {
    pub fn passed(&self) -> bool {
        self.crossing_charge.is_some() && self.condensed.iter().all(|&c| c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectLineReport {
    pub line: usize,
    pub rounds: Vec<DefectRoundCheck>,
    /// `|⟨W⟩|` for the string between the line's interior points, final snapshot.
    pub order_parameter: f64,
}

impl DefectLineReport {
    pub fn passed(&self) -> bool {
        !self.rounds.is_empty() && self.rounds.iter().all(|r| r.passed()) && (self.order_parameter - 1.0).abs() < 1e-12
    }
}

/// `|⟨w⟩|` in a stabilizer state: 1 when `w` is in the group up to phase, else 0.
pub fn order_parameter(isg: &StabilizerGroup, w: &PauliWord) -> f64 {
    match isg.expectation(w) {
        Expectation::Zero => 0.0,
        Expectation::Gamma(_) => 1.0,
    }
}

/// The string between the first and last interior vertices of a line: the product of its defect checks.
pub fn interior_string(code: &FloquetCode, line: &DefectLine) -> PauliWord {
    let mut w = PauliWord::identity(code.n_qudits(), code.params.n);
    for d in &line.defect_checks {
        w.mul_assign_unchecked(d);
    }
    w
}

/// Crossing-string and condensation checks for the first three defect rounds of `trace`.
///
/// `code` may be defect-free, in which case `line` only supplies geometry and
/// the checks are expected to fail.
pub fn verify_defect_line(code: &FloquetCode, line: &DefectLine, trace: &RunTrace) -> Result<DefectLineReport> {
    let line_idx = code.defect_lines.iter().position(|l| l.path == line.path).unwrap_or(usize::MAX);
    let first = trace.rounds.iter().position(|r| r.label.is_defect_round()).unwrap_or(trace.init_len);
    let mut rounds = Vec::new();
    let dim = code.params.n;
    let twists: Vec<usize> = line.endpoints.map(|(a, b)| vec![a, b]).unwrap_or_default();
    for t in first..(first + 3).min(trace.len()) {
        let base = local_generators(code, trace, t)?;
        let gens = trace.rounds[t].isg.generators();
        let r = trace.rounds[t].label.color();
        // The e-type end may sit on either side of the line.
        let mut crossing_charge = None;
        let mut plaquettes = (usize::MAX, usize::MAX);
        for (x, y) in crossing_candidates(code, &line.path, 40) {
            let color = |p: usize| code.lattice.plaquettes[p].color;
            for (pa, pb) in [(x, y), (y, x)] {
                if color(pa) == r || color(pb) != r {
                    continue;
                }
                crossing_charge = (1..dim).find(|&cb| crossing_string(code, &base, gens, pa, pb, cb).is_some());
                if crossing_charge.is_some() {
                    plaquettes = (pa, pb);
                    break;
                }
            }
            if crossing_charge.is_some() {
                break;
            }
        }
        let (pa, pb) = plaquettes;
        let mut condensed = Vec::new();
        for &tw in &twists {
            let ok = outward_path(&code.lattice, tw, 6, &line.path.vertices)
                .and_then(|p| {
                    let far = *p.vertices.last().unwrap();
                    let w = fermion_string(code, &p).ok()?;
                    condensed_at(code, gens, &w, tw, far)
                })
                .is_some();
            condensed.push(ok);
        }
        rounds.push(DefectRoundCheck {
            round_index: t,
            round: trace.rounds[t].label.to_string(),
            crossing_charge,
            plaquettes: (pa, pb),
            condensed,
        });
    }
    let w = interior_string(code, line);
    let order = trace.final_isg().map_or(0.0, |g| order_parameter(g, &w));
    Ok(DefectLineReport { line: line_idx, rounds, order_parameter: order })
}

/// `k−1` line strings, each commuting with every check, that act as the
/// logical operators added by `k` defect lines.
pub fn logical_defect_operators(code: &FloquetCode) -> Result<Vec<PauliWord>> {
    let k = code.defect_lines.iter().filter(|l| l.endpoints.is_some()).count();
    if k < 2 {
        return Err(Error::InsufficientDefects { need: 2, found: k });
    }
    let open: Vec<usize> = (0..code.defect_lines.len()).filter(|&i| code.defect_lines[i].endpoints.is_some()).collect();
    open[..k - 1].iter().map(|&i| carried_line_string(code, i, Round::Plain(2))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceEntry {
    pub generator: String,
    /// Colors of the removed checks shared by the product's plaquettes.
    pub removed_colors: Vec<u8>,
    /// Round (counted from the first defect round) where a full
    /// `(r−1)*, r*, (r+1)*` subsequence has completed for every removed color
    /// and the product is an ISG element.
    pub inferred_at: Option<usize>,
    /// First round at which the product is an ISG element at all.
    pub member_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceReport {
    pub schedule: String,
    pub period: usize,
    pub horizon: usize,
    pub entries: Vec<InferenceEntry>,
}

impl InferenceReport {
    pub fn all_inferred(&self) -> bool {
        self.entries.iter().all(|e| e.inferred_at.is_some())
    }

    pub fn none_inferred(&self) -> bool {
        self.entries.iter().all(|e| e.inferred_at.is_none())
    }

    /// Every product is inferred at most one period after the first defect round.
    pub fn within_one_period(&self) -> bool {
        self.entries.iter().all(|e| e.inferred_at.is_some_and(|t| t <= self.period))
    }
}

/// Indices `t` where rounds `t−2, t−1, t` have colors `r−1, r, r+1` and round
/// `t−1` leaves out the removed checks.
fn inference_points(rounds: &[Round], r: u8, first: usize) -> Vec<usize> {
    (2..rounds.len())
        .filter(|&t| {
            t > first
                && rounds[t - 2].color() == (r + 2) % 3
                && rounds[t - 1].color() == r
                && rounds[t - 1].is_defect_round()
                && rounds[t].color() == (r + 1) % 3
        })
        .collect()
}

/// Runs the defect period of `s` from a state with no stabilizers, preceded by
/// the last two rounds before insertion, and reports for each plaquette
/// product along the lines the first round it is inferred.
pub fn verify_inference<R: Rng + ?Sized>(code: &FloquetCode, s: &Schedule, periods: usize, rng: &mut R) -> Result<InferenceReport> {
    if code.defect_lines.is_empty() {
        return Err(Error::InsufficientDefects { need: 1, found: 0 });
    }
    let touched = touched_plaquettes(code);
    let products = local_touched_products(code, &touched);
    let lead = s.init.len().min(2);
    let mut rounds = s.init[s.init.len() - lead..].to_vec();
    rounds.extend(s.period.repeat(periods.max(1)));
    let recs = run_rounds(code, &rounds, code.empty_group(), rng)?;
    let lat = &code.lattice;
    let entries = products
        .iter()
        .map(|(exps, w)| {
            let mut colors: Vec<u8> = exps
                .iter()
                .filter(|&&(_, e)| e != 0)
                .flat_map(|&(p, _)| lat.plaquettes[p].edges.iter())
                .filter(|e| code.removed.contains(e))
                .map(|&e| lat.edges[e].color)
                .collect();
            colors.sort_unstable();
            colors.dedup();
            let member = |t: usize| recs[t].isg.contains_unchecked(w).up_to_phase();
            let ready =
                colors.iter().map(|&r| inference_points(&rounds, r, lead).first().copied()).try_fold(lead, |acc, t| t.map(|t| acc.max(t)));
            let inferred_at = ready.and_then(|t0| (t0..recs.len()).find(|&t| member(t))).map(|t| t - lead);
            let member_at = (lead..recs.len()).find(|&t| member(t)).map(|t| t - lead);
            InferenceEntry { generator: w.to_text(), removed_colors: colors, inferred_at, member_at }
        })
        .collect();
    Ok(InferenceReport { schedule: s.to_string(), period: s.period.len(), horizon: rounds.len() - lead, entries })
}

/// Searches for an open path of odd length `len` from `start` whose
/// even-position edges (the removed ones) all have the given color, preferring
/// the largest end-to-end displacement.
pub fn find_line(lat: &HexLattice, start: usize, len: usize, removed_color: Option<u8>) -> Option<LatticePath> {
    fn dfs(lat: &HexLattice, verts: &mut Vec<usize>, len: usize, color: Option<u8>, best: &mut Option<(f64, Vec<usize>)>) {
        let k = verts.len() - 1;
        if k == len {
            let path = LatticePath::from_vertices(lat, verts.clone()).ok();
            if let Some(p) = path {
                let d = path_direction(lat, &p);
                let score = d.0.hypot(d.1);
                if best.as_ref().is_none_or(|(b, _)| score > *b + 1e-9) {
                    *best = Some((score, verts.clone()));
                }
            }
            return;
        }
        let u = *verts.last().unwrap();
        let nbrs: Vec<usize> = lat.neighbors(u).collect();
        for w in nbrs {
            if verts.contains(&w) || lat.degree(w) != 3 {
                continue;
            }
            let e = lat.edge_between(u, w).unwrap();
            if k.is_multiple_of(2) && color.is_some_and(|c| lat.edges[e].color != c) {
                continue;
            }
            verts.push(w);
            dfs(lat, verts, len, color, best);
            verts.pop();
        }
    }
    if len.is_multiple_of(2) || lat.degree(start) != 3 {
        return None;
    }
    let mut best = None;
    dfs(lat, &mut vec![start], len, removed_color, &mut best);
    best.and_then(|(_, v)| LatticePath::from_vertices(lat, v).ok())
}

/// Straight horizontal zigzag of odd length starting at cell `(i, j)`.
pub fn zigzag_line(lat: &HexLattice, i: i64, j: i64, len: usize) -> Result<LatticePath> {
    let mut verts = Vec::with_capacity(len + 1);
    let mut c = i;
    while verts.len() < len + 1 {
        for sub in [0u8, 1] {
            let v = lat.vertex_at((c, j), sub).ok_or(Error::InvalidPath(format!("cell ({c},{j}) is outside the lattice")))?;
            verts.push(v);
        }
        c += 1;
    }
    verts.truncate(len + 1);
    LatticePath::from_vertices(lat, verts)
}
