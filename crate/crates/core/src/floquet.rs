//! Check operators, measurement schedules and ISG traces of the honeycomb Floquet code.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{commuting_completion, product};
use crate::defects::DefectLine;
use crate::error::{Error, Result};
use crate::lattice::{EdgeLabel, HexLattice, Topology};
use crate::modular::mod_inv;
use crate::pauli::{ModParams, PauliWord};
use crate::stabilizer::StabilizerGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    Edge(usize),
    /// Single-site check at a bivalent boundary vertex.
    Site(usize),
    /// Index into [`FloquetCode::defect_checks`].
    Defect(usize),
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckId::Edge(e) => write!(f, "e{e}"),
            CheckId::Site(v) => write!(f, "s{v}"),
            CheckId::Defect(d) => write!(f, "d{d}"),
        }
    }
}

/// One round of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Round {
    /// All r-checks, as in the defect-free code.
    Plain(u8),
    /// r-checks minus the removed ones.
    Star(u8),
    /// r*-checks together with every defect check.
    Tilde(u8),
}

impl Round {
    pub fn color(self) -> u8 {
        match self {
            Round::Plain(r) | Round::Star(r) | Round::Tilde(r) => r,
        }
    }

    pub fn is_defect_round(self) -> bool {
        !matches!(self, Round::Plain(_))
    }
}

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Round::Plain(r) => write!(f, "{r}"),
            Round::Star(r) => write!(f, "{r}*"),
            Round::Tilde(r) => write!(f, "~{r}*"),
        }
    }
}

impl FromStr for Round {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Schedule(format!("unknown round label {s:?}"));
        let (tilde, rest) = match t.strip_prefix('~') {
            Some(r) => (true, r),
            None => (false, t),
        };
        let (star, digits) = match rest.strip_suffix('*') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let r: u8 = digits.parse().map_err(|_| bad())?;
        if r > 2 || (tilde && !star) {
            return Err(bad());
        }
        Ok(match (tilde, star) {
            (true, _) => Round::Tilde(r),
            (false, true) => Round::Star(r),
            (false, false) => Round::Plain(r),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub init: Vec<Round>,
    pub period: Vec<Round>,
}

impl Schedule {
    /// `[2,0,1,2](0,1,2)...`
    pub fn standard() -> Self {
        Schedule {
            init: vec![Round::Plain(2), Round::Plain(0), Round::Plain(1), Round::Plain(2)],
            period: vec![Round::Plain(0), Round::Plain(1), Round::Plain(2)],
        }
    }

    /// Parses `"2,0,1,2|0,1,2"` (init, then period).
    pub fn parse(text: &str) -> Result<Self> {
        let (init, period) = text.split_once('|').unwrap_or(("", text));
        let parse_list = |s: &str| -> Result<Vec<Round>> { s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect() };
        let s = Schedule { init: parse_list(init)?, period: parse_list(period)? };
        if s.period.is_empty() {
            return Err(Error::Schedule("period must not be empty".into()));
        }
        Ok(s)
    }

    pub fn validate(&self, code: &FloquetCode) -> Result<()> {
        if self.period.is_empty() {
            return Err(Error::Schedule("period must not be empty".into()));
        }
        let has_defects = !code.defect_lines.is_empty();
        for r in self.init.iter().chain(&self.period) {
            if r.color() > 2 {
                return Err(Error::Schedule(format!("round {r} has no color")));
            }
            if r.is_defect_round() && !has_defects {
                return Err(Error::Schedule(format!("round {r} needs defect lines")));
            }
        }
        if has_defects && !self.period.iter().all(|r| r.is_defect_round()) {
            return Err(Error::Schedule("with defect lines every periodic round must be a defect round".into()));
        }
        Ok(())
    }

    pub fn rounds(&self, n_periods: usize) -> Vec<Round> {
        let mut out = self.init.clone();
        for _ in 0..n_periods {
            out.extend_from_slice(&self.period);
        }
        out
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Round]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "[{}]({})", join(&self.init), join(&self.period))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub label: Round,
    pub checks: Vec<CheckId>,
    pub outcomes: Vec<u32>,
    pub isg: StabilizerGroup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub rounds: Vec<RoundRecord>,
    /// Number of leading rounds that came from the schedule's init list.
    pub init_len: usize,
    pub period_len: usize,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn final_isg(&self) -> Option<&StabilizerGroup> {
        self.rounds.last().map(|r| &r.isg)
    }

    pub fn outcome_of(&self, round: usize, id: CheckId) -> Option<u32> {
        let rec = self.rounds.get(round)?;
        rec.checks.iter().position(|&c| c == id).map(|k| rec.outcomes[k])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rounds: Vec<_> = self
            .rounds
            .iter()
            .enumerate()
            .map(|(t, r)| {
                json!({
                    "index": t,
                    "round": r.label.to_string(),
                    "checks": r.checks.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "outcomes": r.outcomes,
                    "isg": r.isg.to_json(),
                    "logical_count": r.isg.logical_count().as_f64(),
                })
            })
            .collect();
        json!({ "init_len": self.init_len, "period_len": self.period_len, "rounds": rounds })
    }
}

/// Single-site Pauli matching an edge label: X, (XZ^q)† or Z^q (X, Y, Z for qubits).
pub fn site_pauli(params: ModParams, n_qudits: usize, v: usize, label: EdgeLabel) -> PauliWord {
    let dim = params.n;
    match label {
        EdgeLabel::X => PauliWord::x_on(n_qudits, dim, v),
        EdgeLabel::Y if dim == 2 => PauliWord::y_on(n_qudits, v),
        EdgeLabel::Y => PauliWord::single(n_qudits, dim, v, 1, params.q as i64).adjoint(),
        EdgeLabel::Z => PauliWord::single(n_qudits, dim, v, 0, params.q as i64),
    }
}

/// Multiplies by a power of γ, if needed, so that `w^N` is the identity.
pub fn make_measurable(mut w: PauliWord) -> PauliWord {
    let n = w.dim() as i64;
    if !w.pow(n).is_identity() {
        w.add_phase(1);
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetCode {
    pub lattice: HexLattice,
    pub params: ModParams,
    pub removed: BTreeSet<usize>,
    pub defect_lines: Vec<DefectLine>,
}

impl FloquetCode {
    pub fn new(lattice: HexLattice, params: ModParams) -> Result<Self> {
        if !lattice.is_torus() && params.n.is_multiple_of(2) && params.n > 2 {
            // A lone (XZ^q)† has N-th power -1 for even N; boundaries would need it.
            return Err(Error::Params(format!("planar patches support N=2 or odd N, got N={}", params.n)));
        }
        let code = FloquetCode { lattice, params, removed: BTreeSet::new(), defect_lines: Vec::new() };
        code.self_test()?;
        Ok(code)
    }

    pub fn torus(l: usize, params: ModParams) -> Result<Self> {
        Self::new(HexLattice::build_torus(l, l)?, params)
    }

    fn self_test(&self) -> Result<()> {
        let checks = self.all_checks();
        let dim = self.params.n as i64;
        for (id, k) in &checks {
            if !k.pow(dim).is_identity() {
                return Err(Error::NotMeasurable(format!("{id}: {k}")));
            }
        }
        for p in 0..self.lattice.num_plaquettes() {
            let s = self.plaquette_stabilizer(p);
            if let Some((id, _)) = checks.iter().find(|(_, k)| !k.commutes_with(&s)) {
                return Err(Error::Degenerate(format!("plaquette {p} stabilizer fails to commute with check {id}")));
            }
        }
        Ok(())
    }

    pub fn n_qudits(&self) -> usize {
        self.lattice.num_vertices()
    }

    pub fn site_pauli(&self, v: usize, label: EdgeLabel) -> PauliWord {
        site_pauli(self.params, self.n_qudits(), v, label)
    }

    /// The original check on an edge, ignoring whether it was removed.
    pub fn edge_check(&self, e: usize) -> PauliWord {
        let edge = &self.lattice.edges[e];
        let mut k = self.site_pauli(edge.a, edge.label);
        k.mul_assign_unchecked(&self.site_pauli(edge.b, edge.label));
        k
    }

    pub fn site_check(&self, v: usize) -> Option<PauliWord> {
        self.lattice.missing_label(v).map(|l| self.site_pauli(v, l))
    }

    pub fn check_operator(&self, id: CheckId) -> Result<PauliWord> {
        match id {
            CheckId::Edge(e) => {
                if e >= self.lattice.num_edges() {
                    return Err(Error::Unknown { kind: "edge", index: e });
                }
                if self.removed.contains(&e) {
                    return Err(Error::CheckRemoved(e));
                }
                Ok(self.edge_check(e))
            }
            CheckId::Site(v) => self.site_check(v).ok_or(Error::Unknown { kind: "boundary vertex", index: v }),
            CheckId::Defect(d) => self.defect_checks().into_iter().nth(d).ok_or(Error::Unknown { kind: "defect check", index: d }),
        }
    }

    pub fn check_color(&self, id: CheckId) -> Option<u8> {
        match id {
            CheckId::Edge(e) => Some(self.lattice.edges[e].color),
            CheckId::Site(v) => self.lattice.missing_color(v),
            CheckId::Defect(_) => None,
        }
    }

    pub fn defect_checks(&self) -> Vec<PauliWord> {
        self.defect_lines.iter().flat_map(|l| l.defect_checks.iter().cloned()).collect()
    }

    pub fn plaquette_stabilizer(&self, p: usize) -> PauliWord {
        let mut s = PauliWord::identity(self.n_qudits(), self.params.n);
        for &v in &self.lattice.plaquettes[p].cycle {
            s.mul_assign_unchecked(&self.site_pauli(v, self.lattice.external_label(p, v)));
        }
        s
    }

    pub fn plaquette_stabilizers(&self) -> Vec<PauliWord> {
        (0..self.lattice.num_plaquettes()).map(|p| self.plaquette_stabilizer(p)).collect()
    }

    /// Every check of the defect-free code.
    pub fn all_checks(&self) -> Vec<(CheckId, PauliWord)> {
        let mut out: Vec<(CheckId, PauliWord)> = (0..self.lattice.num_edges()).map(|e| (CheckId::Edge(e), self.edge_check(e))).collect();
        for &v in &self.lattice.boundary_vertices {
            out.push((CheckId::Site(v), self.site_check(v).unwrap()));
        }
        out
    }

    /// Active checks of all colors plus defect checks.
    pub fn active_checks(&self) -> Vec<(CheckId, PauliWord)> {
        let mut out: Vec<_> = self.all_checks().into_iter().filter(|(id, _)| !self.is_removed(*id)).collect();
        out.extend(self.defect_checks().into_iter().enumerate().map(|(d, w)| (CheckId::Defect(d), w)));
        out
    }

    pub fn is_removed(&self, id: CheckId) -> bool {
        matches!(id, CheckId::Edge(e) if self.removed.contains(&e))
    }

    /// Checks measured in a round, in the fixed order: edges, sites, defect checks.
    pub fn round_checks(&self, round: Round) -> Result<Vec<(CheckId, PauliWord)>> {
        let r = round.color();
        if r > 2 {
            return Err(Error::Schedule(format!("round {round} has no color")));
        }
        if round.is_defect_round() && self.defect_lines.is_empty() {
            return Err(Error::Schedule(format!("round {round} needs defect lines")));
        }
        let skip_removed = round.is_defect_round();
        let mut out = Vec::new();
        for e in self.lattice.edges_of_color(r) {
            if skip_removed && self.removed.contains(&e) {
                continue;
            }
            out.push((CheckId::Edge(e), self.edge_check(e)));
        }
        for &v in &self.lattice.boundary_vertices {
            if self.lattice.missing_color(v) == Some(r) {
                out.push((CheckId::Site(v), self.site_check(v).unwrap()));
            }
        }
        if matches!(round, Round::Tilde(_)) {
            out.extend(self.defect_checks().into_iter().enumerate().map(|(d, w)| (CheckId::Defect(d), w)));
        }
        Ok(out)
    }

    pub fn empty_group(&self) -> StabilizerGroup {
        StabilizerGroup::empty(self.n_qudits(), self.params)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "lattice": self.lattice.to_json(),
            "params": { "N": self.params.n, "p": self.params.p, "q": self.params.q },
            "removed": self.removed,
            "defect_lines": self.defect_lines.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
            "checks": self.active_checks().iter().map(|(id, w)| json!({"id": id.to_string(), "word": w.to_text()})).collect::<Vec<_>>(),
        })
    }
}

/// Measures each round in turn starting from `start`.
pub fn run_rounds<R: Rng + ?Sized>(code: &FloquetCode, rounds: &[Round], start: StabilizerGroup, rng: &mut R) -> Result<Vec<RoundRecord>> {
    let mut g = start;
    let mut out = Vec::with_capacity(rounds.len());
    for &label in rounds {
        let checks = code.round_checks(label)?;
        let mut ids = Vec::with_capacity(checks.len());
        let mut outcomes = Vec::with_capacity(checks.len());
        for (id, w) in checks {
            outcomes.push(g.measure(&w, rng)?);
            ids.push(id);
        }
        out.push(RoundRecord { label, checks: ids, outcomes, isg: g.clone() });
    }
    Ok(out)
}

pub fn run_schedule<R: Rng + ?Sized>(code: &FloquetCode, s: &Schedule, n_periods: usize, rng: &mut R) -> Result<RunTrace> {
    s.validate(code)?;
    let rounds = run_rounds(code, &s.rounds(n_periods), code.empty_group(), rng)?;
    Ok(RunTrace { rounds, init_len: s.init.len(), period_len: s.period.len() })
}

/// Elements of `⟨prev⟩` commuting with every check in `cur`.
pub fn carried_products(prev: &[PauliWord], cur: &[PauliWord]) -> Vec<PauliWord> {
    let Some(first) = prev.first().or(cur.first()) else { return Vec::new() };
    let n = first.dim() as u64;
    let mat: Vec<Vec<u64>> = prev.iter().map(|w| cur.iter().map(|k| w.comm_unchecked(k) as u64).collect()).collect();
    let kernel = crate::modular::left_kernel(&mat, n);
    kernel.iter().map(|c| product(first, prev, c)).filter(|w| !w.is_scalar()).collect()
}

/// Generators predicted for the ISG after `round`, preceded by the rounds in
/// `history` (oldest first).
///
/// Without defects on a torus this is exactly `⟨S_p, r-checks⟩`. Otherwise
/// the set also carries the defect-line classes and the products of earlier
/// rounds' checks that survive every later round.
pub fn predicted_generators(code: &FloquetCode, round: Round, history: &[Round], inserted_after: Option<Round>) -> Result<Vec<PauliWord>> {
    let cur: Vec<PauliWord> = code.round_checks(round)?.into_iter().map(|(_, w)| w).collect();
    if code.defect_lines.is_empty() && code.lattice.is_torus() {
        let mut gens = code.plaquette_stabilizers();
        gens.extend(cur);
        return Ok(gens);
    }
    let mut gens = if code.defect_lines.is_empty() { code.plaquette_stabilizers() } else { crate::defects::static_generators(code)? };
    let mut carried: Vec<PauliWord> = Vec::new();
    for &r in history {
        let words: Vec<PauliWord> = code.round_checks(r)?.into_iter().map(|(_, w)| w).collect();
        carried = carried_products(&carried, &words);
        carried.extend(words);
    }
    gens.extend(carried_products(&carried, &cur));
    if let (Some(pre), false) = (inserted_after, code.defect_lines.is_empty()) {
        for line in 0..code.defect_lines.len() {
            gens.push(crate::defects::carried_line_string(code, line, pre)?);
        }
    }
    gens.extend(cur);
    Ok(gens)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsgReport {
    pub round_index: usize,
    pub round: String,
    pub post_init: bool,
    pub equal: bool,
    /// Predicted generators missing from the measured group.
    pub missing: Vec<String>,
    /// Measured generators not generated by the prediction.
    pub extra: Vec<String>,
}

pub fn verify_isg(code: &FloquetCode, trace: &RunTrace, round_index: usize) -> Result<IsgReport> {
    let rec = trace
        .rounds
        .get(round_index)
        .ok_or_else(|| Error::Schedule(format!("round {round_index} is outside the trace ({} rounds)", trace.len())))?;
    let history: Vec<Round> = trace.rounds[round_index.saturating_sub(2)..round_index].iter().map(|r| r.label).collect();
    // Line strings survive from the last defect-free round, if the trace had one.
    let inserted_after = if rec.label.is_defect_round() {
        trace.rounds[..round_index].iter().rev().find(|r| !r.label.is_defect_round()).map(|r| r.label)
    } else {
        None
    };
    let gens = predicted_generators(code, rec.label, &history, inserted_after)?;
    let predicted = StabilizerGroup::phaseless(code.n_qudits(), code.params, gens.clone())?;
    let measured = &rec.isg;
    let missing = gens.iter().filter(|g| !measured.contains_unchecked(g).up_to_phase()).map(|g| g.to_text()).collect::<Vec<_>>();
    let extra =
        measured.generators().iter().filter(|g| !predicted.contains_unchecked(g).up_to_phase()).map(|g| g.to_text()).collect::<Vec<_>>();
    Ok(IsgReport {
        round_index,
        round: rec.label.to_string(),
        post_init: round_index + 1 >= 4.min(trace.init_len),
        equal: missing.is_empty() && extra.is_empty(),
        missing,
        extra,
    })
}

/// Moves a logical representative of the ISG after round `t` to one that
/// commutes with the next round's checks, multiplying by round-`t` checks
/// (then by the whole ISG if that is not enough).
pub fn advance_logical(op: &PauliWord, current: &[PauliWord], isg: &StabilizerGroup, next: &[PauliWord]) -> Option<PauliWord> {
    if let Some(a) = commuting_completion(op, current, next) {
        return op.mul(&product(op, current, &a)).ok();
    }
    let gens = isg.generators();
    let a = commuting_completion(op, gens, next)?;
    op.mul(&product(op, gens, &a)).ok()
}

/// Anyon type of a logical string as seen by an effective toric code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Anyon {
    E,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringMap {
    pub from: Anyon,
    /// `Some((kind, k))` when the evolved string equals the canonical `kind^k` string modulo the ISG.
    pub to: Option<(Anyon, u32)>,
    pub commuted_every_round: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomorphismReport {
    pub start_round: usize,
    pub horizontal: bool,
    pub e: StringMap,
    pub m: StringMap,
    /// The ψ (or me^q) loop commutes with every check and is a nontrivial logical in every round.
    pub psi_invariant: bool,
    pub expected_e: (Anyon, u32),
    pub expected_m: (Anyon, u32),
}

impl AutomorphismReport {
    pub fn passed(&self) -> bool {
        self.e.to == Some(self.expected_e) && self.m.to == Some(self.expected_m) && self.psi_invariant
    }
}

/// Canonical e and m loops after an `r` round.
pub struct ToricStrings {
    pub e: PauliWord,
    pub m: PauliWord,
}

/// Effective qudit operators `(X_e, Z_e)` on an edge in the ISG of its own color.
pub fn effective_pair(code: &FloquetCode, e: usize) -> (PauliWord, PauliWord) {
    let edge = &code.lattice.edges[e];
    let (n, dim) = (code.n_qudits(), code.params.n);
    let q = code.params.q as i64;
    let p = code.params.p as i64;
    let (i, j) = (edge.a, edge.b);
    let w = |parts: &[(usize, i64, i64)]| {
        let mut out = PauliWord::identity(n, dim);
        for &(s, x, z) in parts {
            out.mul_assign_unchecked(&PauliWord::single(n, dim, s, x, z));
        }
        out
    };
    let y_dag = |s: usize| PauliWord::single(n, dim, s, 1, q).adjoint();
    let (xe, ze) = match edge.label {
        EdgeLabel::X => (y_dag(i).mul(&w(&[(j, 0, q)])).unwrap(), w(&[(i, p, 0)])),
        EdgeLabel::Y => (w(&[(i, 0, q), (j, 1, 0)]), w(&[(j, p, 1)])),
        EdgeLabel::Z => (y_dag(i).mul(&w(&[(j, 1, 0)])).unwrap(), w(&[(j, 0, 1)])),
    };
    (make_measurable(xe), make_measurable(ze))
}

fn unwrapped_loop(code: &FloquetCode, allowed: impl Fn(u8) -> bool, steps: &[(i64, i64)], horizontal: bool) -> Result<Vec<usize>> {
    let Topology::Torus { lx, ly } = code.lattice.topology else {
        return Err(Error::Params("logical loops need a torus".into()));
    };
    let (lx, ly) = (lx as i64, ly as i64);
    let start = (0..lx)
        .flat_map(|i| (0..ly).map(move |j| (i, j)))
        .find(|&(i, j)| allowed(crate::lattice::site_color(i, j)))
        .ok_or_else(|| Error::Params("no admissible start site".into()))?;
    let goal = if horizontal { (start.0 + lx, start.1) } else { (start.0, start.1 + ly) };
    let span = lx.max(ly) + 4;
    let mut prev = std::collections::HashMap::new();
    let mut queue = std::collections::VecDeque::from([start]);
    prev.insert(start, start);
    while let Some(s) = queue.pop_front() {
        if s == goal {
            break;
        }
        for d in steps {
            let t = (s.0 + d.0, s.1 + d.1);
            if (t.0 - start.0).abs() > span || (t.1 - start.1).abs() > span || prev.contains_key(&t) {
                continue;
            }
            if !allowed(crate::lattice::site_color(t.0, t.1)) {
                continue;
            }
            prev.insert(t, s);
            queue.push_back(t);
        }
    }
    if !prev.contains_key(&goal) {
        return Err(Error::Params("no non-contractible loop found".into()));
    }
    let mut sites = vec![goal];
    while *sites.last().unwrap() != start {
        sites.push(prev[sites.last().unwrap()]);
    }
    sites.reverse();
    sites.iter().map(|&s| code.lattice.plaquette_at(s).ok_or(Error::Unknown { kind: "plaquette", index: 0 })).collect()
}

fn shared_edge(code: &FloquetCode, a: usize, b: usize, color: u8) -> Option<usize> {
    let (pa, pb) = (&code.lattice.plaquettes[a], &code.lattice.plaquettes[b]);
    if let Some(&e) = pa.edges.iter().find(|e| pb.edges.contains(e)) {
        return (code.lattice.edges[e].color == color).then_some(e);
    }
    // Legs: an edge of the given color with one end on each plaquette.
    code.lattice.edges_of_color(color).into_iter().find(|&e| {
        let ed = &code.lattice.edges[e];
        (pa.cycle.contains(&ed.a) && pb.cycle.contains(&ed.b)) || (pa.cycle.contains(&ed.b) && pb.cycle.contains(&ed.a))
    })
}

/// Builds a loop string from hops between consecutive plaquettes, choosing
/// each hop's power so that it deposits charge `head` on the forward plaquette.
fn hop_loop(code: &FloquetCode, plaqs: &[usize], hop: impl Fn(usize) -> PauliWord, color: u8, head: u32) -> Result<PauliWord> {
    let dim = code.params.n as u64;
    let mut out = PauliWord::identity(code.n_qudits(), code.params.n);
    for w in plaqs.windows(2) {
        let e = shared_edge(code, w[0], w[1], color).ok_or_else(|| Error::Degenerate("loop plaquettes are not linked".into()))?;
        let h = hop(e);
        let s_head = code.plaquette_stabilizer(w[1]);
        let s_tail = code.plaquette_stabilizer(w[0]);
        let c = s_head.comm_unchecked(&h) as u64;
        let inv = mod_inv(c, dim).ok_or_else(|| Error::Degenerate(format!("hop on edge {e} does not move a unit charge")))?;
        let k = (head as u64 * inv) % dim;
        let h = h.pow(k as i64);
        if !(s_tail.comm_unchecked(&h) as u64 + head as u64).is_multiple_of(dim) {
            return Err(Error::Degenerate(format!("hop on edge {e} is not a pair creation")));
        }
        out.mul_assign_unchecked(&h);
    }
    Ok(out)
}

/// The canonical e loop (moving `e` along the cycle) and m loop after an `r` round.
pub fn toric_strings(code: &FloquetCode, r: u8, horizontal: bool) -> Result<ToricStrings> {
    let nbrs: Vec<(i64, i64)> = vec![(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let second: Vec<(i64, i64)> = vec![(1, 1), (-1, 2), (-2, 1), (-1, -1), (1, -2), (2, -1)];
    let e_plaqs = unwrapped_loop(code, |c| c != r, &nbrs, horizontal)?;
    let m_plaqs = unwrapped_loop(code, |c| c == r, &second, horizontal)?;
    let e = hop_loop(code, &e_plaqs, |edge| effective_pair(code, edge).1, r, 1)?;
    let m = hop_loop(code, &m_plaqs, |edge| effective_pair(code, edge).0, r, code.params.q)?;
    Ok(ToricStrings { e, m })
}

/// `Some(k)` with `op · target^{-k}` in the group (phases ignored).
fn power_in_class(op: &PauliWord, target: &PauliWord, group: &StabilizerGroup) -> Option<u32> {
    (0..op.dim()).find(|&k| group.contains_unchecked(&op.mul(&target.pow(-(k as i64))).unwrap()).up_to_phase())
}

/// Tracks the e and m loops through one period of the standard schedule.
pub fn verify_automorphism<R: Rng + ?Sized>(code: &FloquetCode, horizontal: bool, rng: &mut R) -> Result<AutomorphismReport> {
    if !code.defect_lines.is_empty() || !code.lattice.is_torus() {
        return Err(Error::Params("automorphism check needs a defect-free torus".into()));
    }
    let schedule = Schedule::standard();
    let trace = run_schedule(code, &schedule, 2, rng)?;
    let start = trace.init_len;
    let r = trace.rounds[start].label.color();
    let strings = toric_strings(code, r, horizontal)?;
    let round_words = |t: usize| -> Vec<PauliWord> { trace.rounds[t].checks.iter().map(|&id| code.check_operator(id).unwrap()).collect() };
    let track = |op: &PauliWord| -> (PauliWord, bool) {
        let mut cur = op.clone();
        let mut ok = trace.rounds[start].isg.generators().iter().all(|g| g.commutes_with(&cur));
        for t in start..start + 3 {
            let next = round_words(t + 1);
            match advance_logical(&cur, &round_words(t), &trace.rounds[t].isg, &next) {
                Some(o) => cur = o,
                None => {
                    ok = false;
                    break;
                }
            }
            ok &= trace.rounds[t + 1].isg.generators().iter().all(|g| g.commutes_with(&cur));
        }
        (cur, ok)
    };
    let end_isg = &trace.rounds[start + 3].isg;
    let classify = |op: &PauliWord| -> Option<(Anyon, u32)> {
        if end_isg.contains_unchecked(op).up_to_phase() {
            return None;
        }
        if let Some(k) = power_in_class(op, &strings.m, end_isg) {
            if k != 0 {
                return Some((Anyon::M, k));
            }
        }
        power_in_class(op, &strings.e, end_isg).filter(|&k| k != 0).map(|k| (Anyon::E, k))
    };
    let (e_end, e_ok) = track(&strings.e);
    let (m_end, m_ok) = track(&strings.m);
    let psi = crate::defects::closed_fermion_loop(code, horizontal)?;
    let all = code.all_checks();
    let psi_invariant = all.iter().all(|(_, k)| k.commutes_with(&psi))
        && trace.rounds[start..].iter().all(|rec| !rec.isg.contains_unchecked(&psi).up_to_phase());
    Ok(AutomorphismReport {
        start_round: start,
        horizontal,
        e: StringMap { from: Anyon::E, to: classify(&e_end), commuted_every_round: e_ok },
        m: StringMap { from: Anyon::M, to: classify(&m_end), commuted_every_round: m_ok },
        psi_invariant,
        expected_e: (Anyon::M, code.params.p),
        expected_m: (Anyon::E, code.params.q),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveToricReport {
    pub round_index: usize,
    pub color: Option<u8>,
    /// r-plaquettes whose stabilizer matched a super-lattice plaquette of `Z_e`.
    pub plaquettes_ok: usize,
    /// Other plaquettes matched to super-lattice vertices of `X_e`.
    pub vertices_ok: usize,
    pub failures: Vec<String>,
    /// Effective pairs satisfy `X_e Z_e = ω^{u} Z_e X_e` with a unit `u` and commute with their check.
    pub pairs_ok: bool,
}

impl EffectiveToricReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.pairs_ok
    }
}

/// Exponent `k` with `local ∝ piece^k` after moving `piece` onto `v` with the check `k_e`.
fn local_power(code: &FloquetCode, target: &PauliWord, piece: &PauliWord, check: &PauliWord, sites: &[usize]) -> Option<(i64, i64)> {
    let dim = code.params.n as i64;
    let target = target.restrict(sites);
    for s in 0..dim {
        for t in 0..dim {
            let mut w = piece.pow(s);
            w.mul_pow_assign(check, t);
            let w = w.restrict(sites);
            if w.x_exps() == target.x_exps() && w.z_exps() == target.z_exps() {
                return Some((s, t));
            }
        }
    }
    None
}

/// Checks the Table-style dictionary between the ISG after an `r` round and a
/// toric code on the super-lattice whose edges are the r-edges.
pub fn verify_effective_toric(code: &FloquetCode, trace: &RunTrace, round_index: usize) -> Result<EffectiveToricReport> {
    let rec = trace.rounds.get(round_index).ok_or_else(|| Error::Schedule(format!("round {round_index} is outside the trace")))?;
    if rec.label.is_defect_round() {
        return Err(Error::Schedule("effective toric check needs a defect-free round".into()));
    }
    let mut report =
        EffectiveToricReport { round_index, color: None, plaquettes_ok: 0, vertices_ok: 0, failures: Vec::new(), pairs_ok: true };
    if rec.isg.is_empty() {
        return Ok(report);
    }
    let r = rec.label.color();
    report.color = Some(r);
    let lat = &code.lattice;
    let dim = code.params.n as u64;
    let r_checks: Vec<PauliWord> = code.round_checks(Round::Plain(r))?.into_iter().map(|(_, w)| w).collect();
    let check_group = StabilizerGroup::phaseless(code.n_qudits(), code.params, r_checks)?;
    for e in lat.edges_of_color(r) {
        let (xe, ze) = effective_pair(code, e);
        let k = code.edge_check(e);
        let c = xe.comm_unchecked(&ze) as u64;
        if !xe.commutes_with(&k) || !ze.commutes_with(&k) || crate::modular::gcd(c, dim) != 1 {
            report.pairs_ok = false;
            report.failures.push(format!("edge {e}: effective pair is not a qudit algebra"));
        }
    }
    // Exponents used on each edge, per side, to check orientation consistency.
    let mut used: std::collections::BTreeMap<(usize, char), Vec<i64>> = Default::default();
    for p in 0..lat.num_plaquettes() {
        let sp = code.plaquette_stabilizer(p);
        let pl = &lat.plaquettes[p];
        let is_face = pl.color == r;
        let mut approx = PauliWord::identity(code.n_qudits(), code.params.n);
        let mut ok = true;
        // Edges of color r touching this plaquette: legs for faces, sides for vertices.
        let touching: Vec<usize> = if is_face {
            pl.cycle.iter().filter_map(|&v| lat.edge_at(v, lat.external_label(p, v))).collect()
        } else {
            pl.edges.iter().copied().filter(|&e| lat.edges[e].color == r).collect()
        };
        for e in touching {
            let ed = &lat.edges[e];
            let (xe, ze) = effective_pair(code, e);
            let piece = if is_face { &ze } else { &xe };
            let sites = [ed.a, ed.b];
            let on_p: Vec<usize> = sites.iter().copied().filter(|v| pl.cycle.contains(v)).collect();
            let target = sp.restrict(&on_p);
            let target_full = {
                let mut t = PauliWord::identity(code.n_qudits(), code.params.n);
                t.mul_assign_unchecked(&target);
                t
            };
            match local_power(code, &target_full, piece, &code.edge_check(e), &sites) {
                Some((s, _)) if crate::modular::gcd(s as u64, dim) == 1 => {
                    approx.mul_pow_assign(piece, s);
                    used.entry((e, if is_face { 'z' } else { 'x' })).or_default().push(s);
                }
                _ => {
                    ok = false;
                    report.failures.push(format!("plaquette {p}: no unit power of the effective operator on edge {e}"));
                }
            }
        }
        if ok {
            let diff = sp.mul(&approx.adjoint()).unwrap();
            if !check_group.contains_unchecked(&diff).up_to_phase() {
                ok = false;
                report.failures.push(format!("plaquette {p}: mismatch modulo {r}-checks"));
            }
        }
        if ok {
            if is_face {
                report.plaquettes_ok += 1;
            } else {
                report.vertices_ok += 1;
            }
        }
    }
    // On the super-lattice each edge borders two faces and two vertices; an
    // oriented toric code uses opposite powers at the two ends.
    if lat.is_torus() {
        for ((e, kind), powers) in &used {
            let consistent = powers.len() == 2 && (powers[0] + powers[1]).rem_euclid(dim as i64) == 0;
            if !consistent && dim > 2 {
                report.failures.push(format!("edge {e}: {kind}-powers {powers:?} are not opposite"));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_labels_round_trip() {
        for s in ["0", "2", "1*", "~0*"] {
            assert_eq!(s.parse::<Round>().unwrap().to_string(), s);
        }
        assert!("~1".parse::<Round>().is_err());
        assert_eq!(Schedule::parse("2,0,1,2|0,1,2").unwrap(), Schedule::standard());
    }

    #[test]
    fn qubit_checks_match_labels() {
        let code = FloquetCode::torus(3, ModParams::qubit()).unwrap();
        for (e, edge) in code.lattice.edges.iter().enumerate() {
            let k = code.edge_check(e);
            let (a, b) = (edge.a, edge.b);
            let expect = match edge.label {
                EdgeLabel::X => (1, 0, 1, 0),
                EdgeLabel::Y => (1, 1, 1, 1),
                EdgeLabel::Z => (0, 1, 0, 1),
            };
            assert_eq!((k.x_at(a), k.z_at(a), k.x_at(b), k.z_at(b)), expect);
            assert!(k.mul(&k).unwrap().is_identity());
        }
    }

    #[test]
    fn qutrit_z_check() {
        let code = FloquetCode::torus(3, ModParams::new(3, 2, 2).unwrap()).unwrap();
        let e = code.lattice.edges.iter().position(|e| e.label == EdgeLabel::Z).unwrap();
        let k = code.edge_check(e);
        let ed = &code.lattice.edges[e];
        assert_eq!((k.z_at(ed.a), k.z_at(ed.b), k.x_at(ed.a)), (2, 2, 0));
    }

    #[test]
    fn isg_shape_small_torus() {
        let code = FloquetCode::torus(3, ModParams::qubit()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = run_schedule(&code, &Schedule::standard(), 2, &mut rng).unwrap();
        for t in 3..trace.len() {
            let rep = verify_isg(&code, &trace, t).unwrap();
            assert!(rep.equal, "{rep:?}");
        }
        assert_eq!(trace.final_isg().unwrap().logical_count().as_integer(), Some(2));
    }
}
