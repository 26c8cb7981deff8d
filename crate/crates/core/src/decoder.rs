//! Single-site noise model, the spacetime syndrome graph built from static
//! stabilizer inferences, and minimum-weight matching decoding.
//!
//! Detectors are differences between consecutive inferences of the same
//! static stabilizer. An inference at round `t` is a product of checks from a
//! window of at most three rounds ending at `t`, where every partial product
//! survives the next round of measurements. A Pauli error applied after round
//! `τ` shifts the outcome of every later check it fails to commute with, so its
//! effect on an inference is the sum of those shifts over the window.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::ops::Range;

use mwmatching::{Matching, SENTINEL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::defects::{static_stabilizers, StaticStabilizers};
use crate::error::{Error, Result};
use crate::floquet::{CheckId, FloquetCode, Round, Schedule};
use crate::lattice::EdgeLabel;
use crate::modular::{left_kernel, solve_combination};
use crate::pauli::PauliWord;

/// Longest window of rounds an inference may use.
const MAX_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    /// The Pauli of the edge type on one endpoint, right after that edge's check.
    Pauli { site: usize, label: EdgeLabel },
    /// A flipped outcome of a defect-check measurement.
    MeasurementFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErrorEvent {
    pub time: usize,
    pub location: CheckId,
    pub kind: ErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Detector {
    pub stabilizer: usize,
    pub time: usize,
    /// Round of the previous inference this one is compared with.
    pub previous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorClass {
    pub event: ErrorEvent,
    /// Detectors flipped by this error.
    pub flips: Vec<usize>,
    /// The flips grouped into graph edges (terminals included).
    pub edges: Vec<(usize, usize)>,
    /// Whether the last edge is a genuine spatial pair rather than a transient one.
    pub spatial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    /// Error class whose Pauli this edge applies as a correction; `None` for
    /// edges that only record a wrong inference.
    pub class: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SyndromeGraph {
    pub detectors: Vec<Detector>,
    /// `(time, vertex)` of each terminal; empty on the torus.
    pub terminals: Vec<(usize, usize)>,
    pub edges: Vec<GraphEdge>,
    pub classes: Vec<ErrorClass>,
    pub labels: Vec<String>,
    pub noisy: Range<usize>,
    pub n_qudits: usize,
    /// Operators commuting with every check; a residual failing to commute
    /// with one of them is a decoding failure.
    pub logicals: Vec<PauliWord>,
    adjacency: Vec<Vec<(usize, usize)>>,
    class_edges: Vec<Vec<usize>>,
}

impl SyndromeGraph {
    pub fn n_vertices(&self) -> usize {
        self.detectors.len() + self.terminals.len()
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        v >= self.detectors.len()
    }

    pub fn vertex_label(&self, v: usize) -> String {
        match self.detectors.get(v) {
            Some(d) => format!("{}@{}", self.labels[d.stabilizer], d.time),
            None => format!("T@{}", self.terminals[v - self.detectors.len()].0),
        }
    }

    pub fn edges_of_class(&self, class: usize) -> &[usize] {
        &self.class_edges[class]
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph syndrome {\n");
        for v in 0..self.n_vertices() {
            let shape = if self.is_terminal(v) { "box" } else { "ellipse" };
            let _ = writeln!(out, "  v{v} [label=\"{}\", shape={shape}];", self.vertex_label(v));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  v{} -- v{} [weight={:.4}];", e.a, e.b, e.weight);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": (0..self.n_vertices()).map(|v| self.vertex_label(v)).collect::<Vec<_>>(),
            "edges": self.edges,
            "noisy_rounds": [self.noisy.start, self.noisy.end],
            "classes": self.classes.len(),
        })
    }
}

/// Result of the exhaustive single-error sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub classes: usize,
    pub detectors: usize,
    /// Classes whose flips cannot be read as one edge plus transient pairs.
    pub violations: Vec<String>,
    /// Classes flipping more than two detectors that split into an edge
    /// plus transient pairs of one stabilizer at consecutive inferences.
    pub split: Vec<String>,
}

impl SweepReport {
    /// Every class flips exactly two detectors, or one plus a terminal.
    pub fn all_pairs(&self) -> bool {
        self.violations.is_empty() && self.split.is_empty()
    }
}

type Terms = Vec<(usize, usize, u64)>;

struct Inference {
    time: usize,
    start: usize,
    /// `(round, check index within round, exponent)`.
    terms: Vec<(usize, usize, u64)>,
}

struct Experiment<'a> {
    code: &'a FloquetCode,
    labels: Vec<Round>,
    checks: Vec<Vec<(CheckId, PauliWord)>>,
    supports: Vec<Vec<Vec<usize>>>,
}

impl Experiment<'_> {
    /// Checks of round `j` with support meeting `sites`.
    fn checks_near(&self, j: usize, sites: &BTreeSet<usize>) -> Vec<usize> {
        self.checks[j].iter().enumerate().filter(|(i, _)| self.supports[j][*i].iter().any(|s| sites.contains(s))).map(|(i, _)| i).collect()
    }

    /// A representation of `g` by checks of rounds `start..=end`, avoiding
    /// defect-check outcomes when possible so their measurement errors stay local.
    fn represent(&self, g: &PauliWord, start: usize, end: usize) -> Option<Vec<(usize, usize, u64)>> {
        self.represent_with(g, start, end, false).or_else(|| self.represent_with(g, start, end, true))
    }

    fn represent_with(&self, g: &PauliWord, start: usize, end: usize, defects: bool) -> Option<Vec<(usize, usize, u64)>> {
        let n = self.code.params.n as u64;
        let lat = &self.code.lattice;
        let gsup: BTreeSet<usize> = g.support().into_iter().collect();
        let mut near = gsup.clone();
        for &s in &gsup {
            near.extend(lat.neighbors(s));
        }
        let cands: Vec<(usize, usize)> = (start..=end)
            .flat_map(|j| self.checks_near(j, &near).into_iter().map(move |i| (j, i)))
            .filter(|&(j, i)| defects || !matches!(self.checks[j][i].0, CheckId::Defect(_)))
            .collect();
        if cands.is_empty() {
            return None;
        }
        let mut sites: BTreeSet<usize> = gsup.clone();
        for &(j, i) in &cands {
            sites.extend(self.supports[j][i].iter().copied());
        }
        // Constraints: partial products must survive the following round.
        let mut constraints: Vec<(usize, PauliWord)> = Vec::new();
        for j in start..end {
            let reach: BTreeSet<usize> =
                cands.iter().filter(|(r, _)| *r <= j).flat_map(|&(r, i)| self.supports[r][i].iter().copied()).collect();
            for i in self.checks_near(j + 1, &reach) {
                constraints.push((j, self.checks[j + 1][i].1.clone()));
            }
        }
        let sites: Vec<usize> = sites.into_iter().collect();
        let rows: Vec<Vec<u64>> = cands
            .iter()
            .map(|&(r, i)| {
                let k = &self.checks[r][i].1;
                let mut row: Vec<u64> = Vec::with_capacity(2 * sites.len() + constraints.len());
                row.extend(sites.iter().map(|&s| k.x_at(s) as u64));
                row.extend(sites.iter().map(|&s| k.z_at(s) as u64));
                row.extend(constraints.iter().map(|(j, c)| if r <= *j { k.comm_unchecked(c) as u64 } else { 0 }));
                row
            })
            .collect();
        let mut target: Vec<u64> = Vec::with_capacity(rows[0].len());
        target.extend(sites.iter().map(|&s| g.x_at(s) as u64));
        target.extend(sites.iter().map(|&s| g.z_at(s) as u64));
        target.extend(std::iter::repeat_n(0, constraints.len()));
        let sol = solve_combination(&rows, &target, n)?;
        Some(cands.iter().zip(sol).filter(|(_, c)| *c != 0).map(|(&(r, i), c)| (r, i, c)).collect())
    }

    /// Every round at which `g` is newly inferred, with its representation.
    fn inferences(&self, g: &PauliWord, cache: &mut HashMap<Vec<Round>, Option<Terms>>) -> Vec<Inference> {
        let mut out = Vec::new();
        let mut prev_len: Option<usize> = None;
        for t in 0..self.labels.len() {
            let mut found = None;
            for w in 1..=MAX_WINDOW.min(t + 1) {
                let start = t + 1 - w;
                let key = self.labels[start..=t].to_vec();
                let rel = cache
                    .entry(key)
                    .or_insert_with(|| {
                        // Representations only depend on the labels in the window.
                        self.represent(g, start, t).map(|terms| terms.into_iter().map(|(r, i, c)| (r - start, i, c)).collect())
                    })
                    .clone();
                if let Some(terms) = rel {
                    found = Some((w, terms.into_iter().map(|(r, i, c)| (r + start, i, c)).collect::<Vec<_>>()));
                    break;
                }
            }
            let new = match (&found, prev_len) {
                (Some((w, _)), Some(p)) => *w <= p,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if new {
                let (w, terms) = found.clone().unwrap();
                out.push(Inference { time: t, start: t + 1 - w, terms });
            }
            prev_len = found.map(|(w, _)| w);
        }
        out
    }
}

/// Rounds `[warm-up | noisy | readout]` used by the memory experiment; two
/// noiseless periods of readout close every detector.
fn experiment_rounds(s: &Schedule, periods: usize) -> (Vec<Round>, Range<usize>) {
    let rounds = s.rounds(periods + 3);
    let start = s.init.len() + s.period.len();
    (rounds, start..start + periods * s.period.len())
}

/// Basis of the operators commuting with every active check.
pub fn check_centralizer(code: &FloquetCode) -> Vec<PauliWord> {
    let n = code.n_qudits();
    let dim = code.params.n;
    let checks: Vec<PauliWord> = code.active_checks().into_iter().map(|(_, w)| w).collect();
    let mat: Vec<Vec<u64>> = (0..2 * n)
        .map(|b| {
            let unit = if b < n { PauliWord::x_on(n, dim, b) } else { PauliWord::z_on(n, dim, b - n) };
            checks.iter().map(|k| unit.comm_unchecked(k) as u64).collect()
        })
        .collect();
    left_kernel(&mat, dim as u64)
        .into_iter()
        .map(|c| {
            let x: Vec<i64> = c[..n].iter().map(|&a| a as i64).collect();
            let z: Vec<i64> = c[n..].iter().map(|&a| a as i64).collect();
            PauliWord::from_parts(dim, x, z, 0).expect("lengths match")
        })
        .filter(|w| !w.is_identity())
        .collect()
}

fn sweep(code: &FloquetCode, s: &Schedule, periods: usize, p: f64) -> Result<(SyndromeGraph, Vec<String>, Vec<String>)> {
    if code.params.n != 2 {
        return Err(Error::Params(format!("the matching decoder handles N=2 only, got N={}", code.params.n)));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Params(format!("error probability {p} outside [0,1)")));
    }
    s.validate(code)?;
    let statics: StaticStabilizers = static_stabilizers(code)?;
    let (labels, noisy) = experiment_rounds(s, periods);
    let checks = labels.iter().map(|&r| code.round_checks(r)).collect::<Result<Vec<_>>>()?;
    let supports = checks.iter().map(|r| r.iter().map(|(_, w)| w.support()).collect()).collect();
    let exp = Experiment { code, labels, checks, supports };

    let mut detectors: Vec<Detector> = Vec::new();
    // Representations of (current, previous) inference per detector.
    let mut reps: Vec<(Inference, Inference)> = Vec::new();
    let mut first_round = vec![usize::MAX; statics.len()];
    for (gi, g) in statics.generators().iter().enumerate() {
        let mut cache = HashMap::new();
        let infs = exp.inferences(g, &mut cache);
        first_round[gi] = infs.first().map_or(usize::MAX, |f| f.time);
        let mut it = infs.into_iter();
        let Some(mut prev) = it.next() else { continue };
        for cur in it {
            let next_prev = Inference { time: cur.time, start: cur.start, terms: cur.terms.clone() };
            if cur.time >= noisy.start {
                detectors.push(Detector { stabilizer: gi, time: cur.time, previous: prev.time });
                reps.push((cur, prev));
            }
            prev = next_prev;
        }
    }
    let mut violations = Vec::new();
    let mut multi = Vec::new();
    for (gi, &t) in first_round.iter().enumerate() {
        if t >= noisy.start {
            violations.push(format!("{} is not inferred before the noisy rounds", statics.label(gi)));
        }
    }

    let n_det = detectors.len();
    let planar = !code.lattice.is_torus();
    let mut terminals: Vec<(usize, usize)> = Vec::new();
    let mut terminal_at: HashMap<usize, usize> = HashMap::new();
    let dim = code.params.n as u64;
    let mut classes: Vec<ErrorClass> = Vec::new();
    for tau in noisy.clone() {
        for (ci, (id, _)) in exp.checks[tau].iter().enumerate() {
            let (event, pauli) = match *id {
                CheckId::Edge(e) => {
                    let edge = &code.lattice.edges[e];
                    let kind = ErrorKind::Pauli { site: edge.a, label: edge.label };
                    let e = code.site_pauli(edge.a, edge.label);
                    let local = (edge.a, e.x_at(edge.a) as u64, e.z_at(edge.a) as u64);
                    (ErrorEvent { time: tau, location: *id, kind }, Some(local))
                }
                CheckId::Defect(_) => (ErrorEvent { time: tau, location: *id, kind: ErrorKind::MeasurementFlip }, None),
                // A single-site check is its own error; nothing to model.
                CheckId::Site(_) => continue,
            };
            let effect = |inf: &Inference| -> u64 {
                match &pauli {
                    Some((site, ex, ez)) => {
                        inf.terms
                            .iter()
                            .filter(|(r, _, _)| *r > tau)
                            .map(|&(r, i, c)| {
                                let k = &exp.checks[r][i].1;
                                let z = k.z_at(*site) as u64 * ex;
                                let x = k.x_at(*site) as u64 * ez;
                                c * ((z + dim * dim - x) % dim)
                            })
                            .sum::<u64>()
                            % dim
                    }
                    None => inf.terms.iter().filter(|(r, i, _)| *r == tau && *i == ci).map(|&(_, _, c)| c).sum::<u64>() % dim,
                }
            };
            let mut flips: Vec<usize> = Vec::new();
            for (d, (cur, prev)) in reps.iter().enumerate() {
                let after = if pauli.is_some() { cur.time <= tau } else { cur.time < tau };
                if after || prev.start > tau {
                    continue;
                }
                if !(effect(cur) + dim - effect(prev)).is_multiple_of(dim) {
                    flips.push(d);
                }
            }
            let names = |fl: &[usize]| -> Vec<String> {
                fl.iter().map(|&d| format!("{}@{}", statics.label(detectors[d].stabilizer), detectors[d].time)).collect()
            };
            let describe = format!("{:?} after round {tau} at {id} flips {} detectors {:?}", event.kind, flips.len(), names(&flips));
            // Split off transient flips: one stabilizer flipped at two
            // consecutive inferences and nowhere else.
            let mut rest = flips.clone();
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            if flips.len() > 2 {
                let mut i = 0;
                while i < rest.len() {
                    let (gi, ti) = (detectors[rest[i]].stabilizer, detectors[rest[i]].time);
                    let partner =
                        (0..rest.len()).find(|&j| j != i && detectors[rest[j]].stabilizer == gi && detectors[rest[j]].previous == ti);
                    match partner {
                        Some(j) => {
                            pairs.push((rest[i], rest[j]));
                            let (hi, lo) = (i.max(j), i.min(j));
                            rest.remove(hi);
                            rest.remove(lo);
                            i = 0;
                        }
                        None => i += 1,
                    }
                }
            }
            let transient = pairs.len();
            match rest.len() {
                2 => pairs.push((rest[0], rest[1])),
                1 if planar => {
                    let t = detectors[rest[0]].time;
                    let v = *terminal_at.entry(t).or_insert_with(|| {
                        terminals.push((t, n_det + terminals.len()));
                        n_det + terminals.len() - 1
                    });
                    pairs.push((rest[0], v));
                }
                0 if transient > 0 => {}
                _ => {
                    violations.push(describe);
                    continue;
                }
            }
            if flips.len() > 2 {
                multi.push(describe);
            }
            classes.push(ErrorClass { event, flips, edges: pairs, spatial: !rest.is_empty() });
        }
    }

    let weight = if p > 0.0 { ((1.0 - p) / p).ln() } else { f64::INFINITY };
    let mut edges: Vec<GraphEdge> = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut class_edges = Vec::with_capacity(classes.len());
    for (ci, c) in classes.iter().enumerate() {
        let mut mine = Vec::new();
        for (k, &(u, v)) in c.edges.iter().enumerate() {
            let key = (u.min(v), u.max(v));
            // Only the last edge of a class can carry its Pauli; the others are transient.
            let carries = c.spatial && k + 1 == c.edges.len() && matches!(c.event.kind, ErrorKind::Pauli { .. });
            let e = *edge_index.entry(key).or_insert_with(|| {
                edges.push(GraphEdge { a: key.0, b: key.1, weight, class: None });
                edges.len() - 1
            });
            if carries && edges[e].class.is_none() {
                edges[e].class = Some(ci);
            }
            mine.push(e);
        }
        class_edges.push(mine);
    }
    let n_vert = n_det + terminals.len();
    let mut adjacency = vec![Vec::new(); n_vert];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.a].push((e.b, i));
        adjacency[e.b].push((e.a, i));
    }
    let labels = (0..statics.len()).map(|i| statics.label(i)).collect();
    let graph = SyndromeGraph {
        detectors,
        terminals,
        edges,
        classes,
        labels,
        noisy,
        n_qudits: code.n_qudits(),
        logicals: check_centralizer(code),
        adjacency,
        class_edges,
    };
    Ok((graph, violations, multi))
}

/// Simulates every single error class once and reports those that do not
/// flip exactly two detectors.
pub fn single_error_sweep(code: &FloquetCode, s: &Schedule, periods: usize) -> Result<SweepReport> {
    let (g, violations, multi) = sweep(code, s, periods, 0.01)?;
    Ok(SweepReport { classes: g.classes.len() + violations.len(), detectors: g.detectors.len(), violations, split: multi })
}

pub fn build_syndrome_graph(code: &FloquetCode, s: &Schedule, periods: usize, p: f64) -> Result<SyndromeGraph> {
    let (g, violations, _) = sweep(code, s, periods, p)?;
    if let Some(first) = violations.first() {
        return Err(Error::Graph(format!("{} error classes break the pair rule; first: {first}", violations.len())));
    }
    Ok(g)
}

/// Indices of the error classes that occur, each independently with probability `p`.
pub fn sample_classes<R: Rng + ?Sized>(graph: &SyndromeGraph, p: f64, rng: &mut R) -> Vec<usize> {
    if p <= 0.0 {
        return Vec::new();
    }
    (0..graph.classes.len()).filter(|_| rng.gen::<f64>() < p).collect()
}

pub fn sample_errors<R: Rng + ?Sized>(graph: &SyndromeGraph, p: f64, rng: &mut R) -> Vec<ErrorEvent> {
    sample_classes(graph, p, rng).into_iter().map(|c| graph.classes[c].event).collect()
}

/// Flipped vertices (terminals excluded) caused by a set of error classes.
pub fn syndrome_of(graph: &SyndromeGraph, classes: &[usize]) -> Vec<usize> {
    let mut flipped = vec![false; graph.n_vertices()];
    for &c in classes {
        for &v in &graph.classes[c].flips {
            flipped[v] ^= true;
        }
    }
    (0..graph.detectors.len()).filter(|&v| flipped[v]).collect()
}

struct Tree {
    dist: Vec<u32>,
    via: Vec<usize>,
}

/// Breadth-first search that never passes through a terminal.
fn bfs(graph: &SyndromeGraph, src: usize) -> Tree {
    let n = graph.n_vertices();
    let mut dist = vec![u32::MAX; n];
    let mut via = vec![usize::MAX; n];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        if graph.is_terminal(u) {
            continue;
        }
        for &(w, e) in &graph.adjacency[u] {
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                via[w] = e;
                queue.push_back(w);
            }
        }
    }
    Tree { dist, via }
}

fn walk_back(graph: &SyndromeGraph, tree: &Tree, mut v: usize, out: &mut Vec<usize>) {
    while tree.via[v] != usize::MAX {
        let e = tree.via[v];
        out.push(e);
        let edge = &graph.edges[e];
        v = if edge.a == v { edge.b } else { edge.a };
    }
}

/// Minimum-weight perfect matching of the flipped detectors, with each one
/// allowed to pair with the boundary on planar patches. Returns the edges of
/// the correction, each listed once.
pub fn decode(graph: &SyndromeGraph, syndrome: &[usize]) -> Result<Vec<usize>> {
    let k = syndrome.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let planar = !graph.terminals.is_empty();
    if !planar && k % 2 == 1 {
        return Err(Error::Graph(format!("odd syndrome of size {k} on a closed graph")));
    }
    let trees: Vec<Tree> = syndrome.iter().map(|&v| bfs(graph, v)).collect();
    let boundary: Vec<(u32, usize)> =
        trees.iter().map(|t| graph.terminals.iter().map(|&(_, v)| (t.dist[v], v)).min().unwrap_or((u32::MAX, usize::MAX))).collect();
    let mut pairs: Vec<(usize, usize, u32)> = Vec::new();
    for i in 0..k {
        for (j, &s) in syndrome.iter().enumerate().skip(i + 1) {
            let d = trees[i].dist[s];
            if d != u32::MAX {
                pairs.push((i, j, d));
            }
        }
        if planar && boundary[i].0 != u32::MAX {
            pairs.push((i, k + i, boundary[i].0));
        }
    }
    let maxd = pairs.iter().map(|p| p.2).max().unwrap_or(0) as i64;
    let big = 2 * maxd + 2;
    let to_w = |d: u32| i32::try_from(big - d as i64).expect("distances fit in i32");
    let mut medges: Vec<(usize, usize, i32)> = pairs.iter().map(|&(a, b, d)| (a, b, to_w(d))).collect();
    if planar {
        for i in 0..k {
            for j in i + 1..k {
                medges.push((k + i, k + j, to_w(0)));
            }
        }
    }
    let mate = Matching::new(medges).max_cardinality().solve();
    let mut path = Vec::new();
    for i in 0..k {
        let m = mate.get(i).copied().unwrap_or(SENTINEL);
        if m == SENTINEL {
            return Err(Error::Graph(format!("detector {} left unmatched", syndrome[i])));
        }
        if m < k {
            if i < m {
                walk_back(graph, &trees[i], syndrome[m], &mut path);
            }
        } else {
            walk_back(graph, &trees[i], boundary[i].1, &mut path);
        }
    }
    path.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < path.len() {
        let mut j = i;
        while j < path.len() && path[j] == path[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(path[i]);
        }
        i = j;
    }
    Ok(out)
}

/// Single-site Pauli part of the combined error and correction, as x/z bits.
pub fn residual(graph: &SyndromeGraph, errors: &[usize], correction: &[usize]) -> (Vec<u8>, Vec<u8>) {
    let n = graph.n_qudits;
    let (mut x, mut z) = (vec![0u8; n], vec![0u8; n]);
    let classes = errors.iter().copied().chain(correction.iter().filter_map(|&e| graph.edges[e].class));
    for c in classes {
        if let ErrorKind::Pauli { site, label } = graph.classes[c].event.kind {
            match label {
                EdgeLabel::X => x[site] ^= 1,
                EdgeLabel::Z => z[site] ^= 1,
                EdgeLabel::Y => {
                    x[site] ^= 1;
                    z[site] ^= 1;
                }
            }
        }
    }
    (x, z)
}

/// Whether the residual fails to commute with some tracked logical.
pub fn is_logical_failure(graph: &SyndromeGraph, res: &(Vec<u8>, Vec<u8>)) -> bool {
    let sites: Vec<usize> = (0..graph.n_qudits).filter(|&s| res.0[s] | res.1[s] != 0).collect();
    graph
        .logicals
        .iter()
        .any(|l| sites.iter().map(|&s| (l.z_at(s) * res.0[s] as u32 + l.x_at(s) * res.1[s] as u32) % 2).sum::<u32>() % 2 == 1)
}

/// Whether one seeded trial ends in a logical failure.
pub fn run_trial(graph: &SyndromeGraph, p: f64, seed: u64, index: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let errors = sample_classes(graph, p, &mut rng);
    if errors.is_empty() {
        return false;
    }
    let syndrome = syndrome_of(graph, &errors);
    match decode(graph, &syndrome) {
        Ok(corr) => is_logical_failure(graph, &residual(graph, &errors, &corr)),
        Err(_) => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub p: f64,
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    pub stderr: f64,
    pub seed: u64,
}

impl RateEstimate {
    fn new(p: f64, trials: usize, failures: usize, seed: u64) -> Self {
        let rate = failures as f64 / trials.max(1) as f64;
        let stderr = (rate * (1.0 - rate) / trials.max(1) as f64).sqrt();
        RateEstimate { p, trials, failures, rate, stderr, seed }
    }

    pub fn csv_header() -> &'static str {
        "p,d_or_layout,trials,failures,rate,stderr,seed"
    }

    pub fn csv_row(&self, layout: &str) -> String {
        format!("{},{},{},{},{:.6e},{:.6e},{}", self.p, layout, self.trials, self.failures, self.rate, self.stderr, self.seed)
    }
}

pub fn estimate_sequential(graph: &SyndromeGraph, p: f64, trials: usize, seed: u64) -> RateEstimate {
    let failures = (0..trials as u64).filter(|&i| run_trial(graph, p, seed, i)).count();
    RateEstimate::new(p, trials, failures, seed)
}

#[cfg(feature = "parallel")]
pub fn estimate_parallel(graph: &SyndromeGraph, p: f64, trials: usize, seed: u64) -> RateEstimate {
    use rayon::prelude::*;
    let failures = (0..trials as u64).into_par_iter().filter(|&i| run_trial(graph, p, seed, i)).count();
    RateEstimate::new(p, trials, failures, seed)
}

/// Failure fraction over `trials` seeded trials; uses all threads when the
/// `parallel` feature is on. Identical counts either way.
pub fn estimate_logical_error_rate(graph: &SyndromeGraph, p: f64, trials: usize, seed: u64) -> RateEstimate {
    #[cfg(feature = "parallel")]
    {
        estimate_parallel(graph, p, trials, seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        estimate_sequential(graph, p, trials, seed)
    }
}
