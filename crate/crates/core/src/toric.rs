//! Square-lattice Z2 toric code with fermion-condensation lines, used as a
//! static reference for twist defects.
//!
//! Conventions: vertex `(i, j)`, edge `h(i, j)` from `(i, j)` to `(i+1, j)`,
//! edge `v(i, j)` from `(i, j)` to `(i, j+1)`, plaquette `(i, j)` with lower-left
//! corner `(i, j)`. A ψ sits on a plaquette together with its lower-left vertex.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::algebra::operator_with_syndrome;
use crate::error::{Error, Result};
use crate::modular::{howell_rows, left_kernel};
use crate::pauli::{ModParams, PauliWord};
use crate::stabilizer::{Expectation, LogicalCount, StabilizerGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SquareTopology {
    Torus {
        lx: usize,
        ly: usize,
    },
    /// `width × height` plaquettes with smooth (truncated-vertex) edges all around.
    Planar {
        width: usize,
        height: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Species {
    E,
    M,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SquareEdge {
    pub horizontal: bool,
    pub i: usize,
    pub j: usize,
}

/// One condensed line: the dual path and its commuting two-body pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensationLine {
    pub path: Vec<usize>,
    /// Plaquettes of `path` where the direction turns.
    pub corners: Vec<usize>,
    #[serde(skip)]
    pub pieces: Vec<PauliWord>,
    /// Sites of the full string dropped at its ends.
    pub trimmed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareToricCode {
    pub topology: SquareTopology,
    edges: Vec<SquareEdge>,
    vertex_edges: Vec<Vec<usize>>,
    plaquette_edges: Vec<[usize; 4]>,
    pub lines: Vec<CondensationLine>,
}

pub fn build_toric(topology: SquareTopology) -> Result<SquareToricCode> {
    let (w, h, torus) = match topology {
        SquareTopology::Torus { lx, ly } => {
            if lx < 2 || ly < 2 {
                return Err(Error::Degenerate(format!("{lx}x{ly} torus")));
            }
            (lx, ly, true)
        }
        SquareTopology::Planar { width, height } => {
            if width < 1 || height < 1 {
                return Err(Error::Degenerate(format!("{width}x{height} patch")));
            }
            (width, height, false)
        }
    };
    let (vw, vh) = if torus { (w, h) } else { (w + 1, h + 1) };
    let mut code = SquareToricCode {
        topology,
        edges: Vec::new(),
        vertex_edges: vec![Vec::new(); vw * vh],
        plaquette_edges: Vec::with_capacity(w * h),
        lines: Vec::new(),
    };
    for j in 0..vh {
        for i in 0..vw {
            if torus || i < w {
                code.edges.push(SquareEdge { horizontal: true, i, j });
            }
            if torus || j < h {
                code.edges.push(SquareEdge { horizontal: false, i, j });
            }
        }
    }
    for (e, edge) in code.edges.clone().iter().enumerate() {
        let (a, b) = code.endpoints(edge);
        code.vertex_edges[a].push(e);
        code.vertex_edges[b].push(e);
    }
    for j in 0..h {
        for i in 0..w {
            let q = [code.h_edge(i, j), code.h_edge(i, j + 1), code.v_edge(i, j), code.v_edge(i + 1, j)];
            code.plaquette_edges.push(q.map(|e| e.expect("plaquette edge exists")));
        }
    }
    Ok(code)
}

impl SquareToricCode {
    pub fn n_qubits(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_edges.len()
    }

    pub fn n_plaquettes(&self) -> usize {
        self.plaquette_edges.len()
    }

    pub fn edge(&self, e: usize) -> SquareEdge {
        self.edges[e]
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.topology, SquareTopology::Torus { .. })
    }

    fn size(&self) -> (usize, usize) {
        match self.topology {
            SquareTopology::Torus { lx, ly } => (lx, ly),
            SquareTopology::Planar { width, height } => (width, height),
        }
    }

    fn vertex_width(&self) -> usize {
        let (w, _) = self.size();
        if self.is_torus() {
            w
        } else {
            w + 1
        }
    }

    fn wrap(&self, i: i64, j: i64, vertices: bool) -> Option<(usize, usize)> {
        let (w, h) = self.size();
        if self.is_torus() {
            return Some((i.rem_euclid(w as i64) as usize, j.rem_euclid(h as i64) as usize));
        }
        let (mw, mh) = if vertices { (w + 1, h + 1) } else { (w, h) };
        (i >= 0 && j >= 0 && (i as usize) < mw && (j as usize) < mh).then_some((i as usize, j as usize))
    }

    pub fn vertex_at(&self, i: i64, j: i64) -> Option<usize> {
        self.wrap(i, j, true).map(|(i, j)| j * self.vertex_width() + i)
    }

    pub fn plaquette_at(&self, i: i64, j: i64) -> Option<usize> {
        let (w, _) = self.size();
        self.wrap(i, j, false).map(|(i, j)| j * w + i)
    }

    pub fn plaquette_coords(&self, p: usize) -> (usize, usize) {
        let (w, _) = self.size();
        (p % w, p / w)
    }

    pub fn vertex_coords(&self, v: usize) -> (usize, usize) {
        (v % self.vertex_width(), v / self.vertex_width())
    }

    fn find_edge(&self, horizontal: bool, i: i64, j: i64) -> Option<usize> {
        let (i, j) = self.wrap(i, j, true)?;
        // Edge lists are short per vertex, so a scan is fine.
        let v = self.vertex_at(i as i64, j as i64)?;
        self.vertex_edges[v].iter().copied().find(|&e| {
            let ed = self.edges[e];
            ed.horizontal == horizontal && ed.i == i && ed.j == j
        })
    }

    pub fn h_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.find_edge(true, i as i64, j as i64)
    }

    pub fn v_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.find_edge(false, i as i64, j as i64)
    }

    fn endpoints(&self, e: &SquareEdge) -> (usize, usize) {
        let a = self.vertex_at(e.i as i64, e.j as i64).expect("edge origin");
        let b = if e.horizontal { self.vertex_at(e.i as i64 + 1, e.j as i64) } else { self.vertex_at(e.i as i64, e.j as i64 + 1) };
        (a, b.expect("edge end"))
    }

    /// Plaquettes on either side of an edge (one for a boundary edge).
    pub fn edge_plaquettes(&self, e: usize) -> Vec<usize> {
        (0..self.n_plaquettes()).filter(|&p| self.plaquette_edges[p].contains(&e)).collect()
    }

    pub fn plaquette_corners(&self, p: usize) -> [usize; 4] {
        let (i, j) = self.plaquette_coords(p);
        let (i, j) = (i as i64, j as i64);
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].map(|(a, b)| self.vertex_at(a, b).expect("corner"))
    }

    pub fn vertex_term(&self, v: usize) -> PauliWord {
        let mut w = PauliWord::identity(self.n_qubits(), 2);
        for &e in &self.vertex_edges[v] {
            w.set_site(e, 1, 0);
        }
        w
    }

    pub fn plaquette_term(&self, p: usize) -> PauliWord {
        let mut w = PauliWord::identity(self.n_qubits(), 2);
        for &e in &self.plaquette_edges[p] {
            w.set_site(e, 0, 1);
        }
        w
    }

    /// `A_v` for all vertices followed by `B_p` for all plaquettes.
    pub fn toric_generators(&self) -> Vec<PauliWord> {
        let mut out: Vec<PauliWord> = (0..self.n_vertices()).map(|v| self.vertex_term(v)).collect();
        out.extend((0..self.n_plaquettes()).map(|p| self.plaquette_term(p)));
        out
    }

    pub fn toric_group(&self) -> Result<StabilizerGroup> {
        StabilizerGroup::new(self.n_qubits(), ModParams::qubit(), self.toric_generators())
    }

    fn pieces(&self) -> Vec<&PauliWord> {
        self.lines.iter().flat_map(|l| l.pieces.iter()).collect()
    }

    /// Toric terms split into those commuting with every piece and the rest,
    /// the latter with their commutation rows and a reference point.
    #[allow(clippy::type_complexity)]
    fn split_terms(&self) -> (Vec<PauliWord>, Vec<(PauliWord, Vec<u64>, (f64, f64))>) {
        let pieces = self.pieces();
        let (mut free, mut touched) = (Vec::new(), Vec::new());
        let points = (0..self.n_vertices())
            .map(|v| {
                let (i, j) = self.vertex_coords(v);
                (i as f64, j as f64)
            })
            .chain((0..self.n_plaquettes()).map(|p| self.plaquette_center(p)));
        for (g, at) in self.toric_generators().into_iter().zip(points) {
            let row: Vec<u64> = pieces.iter().map(|p| g.comm_unchecked(p) as u64).collect();
            if row.iter().all(|&c| c == 0) {
                free.push(g);
            } else {
                touched.push((g, row, at));
            }
        }
        (free, touched)
    }

    /// Generators of the condensed group: untouched toric terms, commuting
    /// products of up to three nearby touched terms, then the pieces. Products
    /// running along a whole line are left out; they would fix the fusion
    /// channel of each twist pair.
    pub fn generators(&self) -> Vec<PauliWord> {
        let (mut out, touched) = self.split_terms();
        if touched.is_empty() {
            return out;
        }
        let k = touched.len();
        let mut span: Vec<Vec<u64>> = Vec::new();
        let mut rank = 0;
        let near = |a: usize, b: usize| self.distance(touched[a].2, touched[b].2) <= 1.5;
        let mut try_combo = |combo: &[usize], out: &mut Vec<PauliWord>| {
            let commutes = (0..touched[0].1.len()).all(|c| combo.iter().map(|&i| touched[i].1[c]).sum::<u64>() % 2 == 0);
            if !commutes {
                return;
            }
            let mut coeffs = vec![0u64; k];
            combo.iter().for_each(|&i| coeffs[i] = 1);
            let mut next = span.clone();
            next.push(coeffs);
            let reduced = howell_rows(next, 2);
            if reduced.len() > rank {
                rank = reduced.len();
                span = reduced;
                let mut w = PauliWord::identity(self.n_qubits(), 2);
                combo.iter().for_each(|&i| w.mul_assign_unchecked(&touched[i].0));
                out.push(w);
            }
        };
        for a in 0..k {
            try_combo(&[a], &mut out);
        }
        for a in 0..k {
            for b in a + 1..k {
                if near(a, b) {
                    try_combo(&[a, b], &mut out);
                }
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    if near(a, b) && near(a, c) && near(b, c) {
                        try_combo(&[a, b, c], &mut out);
                    }
                }
            }
        }
        out.extend(self.pieces().into_iter().cloned());
        out
    }

    /// Rank of the commuting products of touched terms that no local
    /// cluster reaches (one per isolated line on a torus).
    pub fn nonlocal_rank(&self) -> usize {
        let (_, touched) = self.split_terms();
        if touched.is_empty() {
            return 0;
        }
        let rows: Vec<Vec<u64>> = touched.iter().map(|t| t.1.clone()).collect();
        let words = |gens: Vec<PauliWord>| StabilizerGroup::phaseless(self.n_qubits(), ModParams::qubit(), gens).map(|g| g.len());
        let mut full = self.toric_generators().into_iter().filter(|g| self.pieces().iter().all(|p| g.commutes_with(p))).collect::<Vec<_>>();
        for kv in left_kernel(&rows, 2) {
            let mut w = PauliWord::identity(self.n_qubits(), 2);
            kv.iter().zip(&touched).filter(|(c, _)| **c != 0).for_each(|(_, t)| w.mul_assign_unchecked(&t.0));
            full.push(w);
        }
        full.extend(self.pieces().into_iter().cloned());
        match (words(full), words(self.generators())) {
            (Ok(a), Ok(b)) => a.saturating_sub(b),
            _ => 0,
        }
    }

    pub fn group(&self) -> Result<StabilizerGroup> {
        StabilizerGroup::new(self.n_qubits(), ModParams::qubit(), self.generators())
    }

    pub fn logical_count(&self) -> Result<LogicalCount> {
        Ok(self.group()?.logical_count())
    }

    pub fn without_line(&self, index: usize) -> Result<SquareToricCode> {
        if index >= self.lines.len() {
            return Err(Error::Unknown { kind: "condensation line", index });
        }
        let mut out = self.clone();
        out.lines.remove(index);
        Ok(out)
    }

    /// The plaquette across edge `e` from `p`.
    fn across(&self, p: usize, e: usize) -> Option<usize> {
        self.edge_plaquettes(e).into_iter().find(|&q| q != p)
    }

    /// Edge shared by two plaquettes.
    pub fn shared_edge(&self, p: usize, q: usize) -> Option<usize> {
        self.plaquette_edges[p].iter().copied().find(|&e| self.across(p, e) == Some(q))
    }

    fn min_image(&self, d: f64, period: usize) -> f64 {
        if self.is_torus() {
            let p = period as f64;
            let r = d.rem_euclid(p);
            r.min(p - r)
        } else {
            d.abs()
        }
    }

    fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (w, h) = self.size();
        self.min_image(a.0 - b.0, w).hypot(self.min_image(a.1 - b.1, h))
    }

    fn edge_mid(&self, e: usize) -> (f64, f64) {
        let ed = self.edges[e];
        if ed.horizontal {
            (ed.i as f64 + 0.5, ed.j as f64)
        } else {
            (ed.i as f64, ed.j as f64 + 0.5)
        }
    }

    fn plaquette_center(&self, p: usize) -> (f64, f64) {
        let (i, j) = self.plaquette_coords(p);
        (i as f64 + 0.5, j as f64 + 0.5)
    }

    /// Edges within `radius` of a point.
    pub fn edges_near(&self, at: (f64, f64), radius: f64) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&e| self.distance(self.edge_mid(e), at) <= radius).collect()
    }

    /// Distance from a point to the open boundary (infinite on a torus).
    fn boundary_distance(&self, at: (f64, f64)) -> f64 {
        match self.topology {
            SquareTopology::Torus { .. } => f64::INFINITY,
            SquareTopology::Planar { width, height } => at.0.min(at.1).min(width as f64 - at.0).min(height as f64 - at.1),
        }
    }
}

/// Short string of a species on edge `e`. For ψ the edge is the one crossed
/// by the dual hop; the partner edge carries the `e`-hop.
pub fn short_string(code: &SquareToricCode, species: Species, e: usize) -> Result<PauliWord> {
    if e >= code.n_qubits() {
        return Err(Error::Unknown { kind: "edge", index: e });
    }
    let n = code.n_qubits();
    match species {
        Species::E => Ok(PauliWord::z_on(n, 2, e)),
        Species::M => Ok(PauliWord::x_on(n, 2, e)),
        Species::Psi => {
            let ed = code.edge(e);
            let (i, j) = (ed.i as i64, ed.j as i64);
            let partner = if ed.horizontal { code.find_edge(false, i, j - 1) } else { code.find_edge(true, i - 1, j) };
            let partner = partner
                .filter(|_| code.edge_plaquettes(e).len() == 2)
                .ok_or_else(|| Error::InvalidPath(format!("edge {e} is on the boundary and has no ψ hop")))?;
            let mut w = PauliWord::x_on(n, 2, e);
            w.set_site(partner, 0, 1);
            Ok(w)
        }
    }
}

/// Vertices and plaquettes whose terms anticommute with `w`.
pub fn violations(code: &SquareToricCode, w: &PauliWord) -> (Vec<usize>, Vec<usize>) {
    let vs = (0..code.n_vertices()).filter(|&v| !code.vertex_term(v).commutes_with(w)).collect();
    let ps = (0..code.n_plaquettes()).filter(|&p| !code.plaquette_term(p).commutes_with(w)).collect();
    (vs, ps)
}

/// True when the violations split into exactly two (vertex, adjacent plaquette) pairs.
fn is_psi_pair(code: &SquareToricCode, vs: &[usize], ps: &[usize]) -> bool {
    if vs.len() != 2 || ps.len() != 2 {
        return false;
    }
    let adj = |v: usize, p: usize| code.plaquette_corners(p).contains(&v);
    (adj(vs[0], ps[0]) && adj(vs[1], ps[1])) || (adj(vs[0], ps[1]) && adj(vs[1], ps[0]))
}

fn hermitian(mut w: PauliWord) -> PauliWord {
    let ys = (0..w.len()).filter(|&i| w.x_at(i) == 1 && w.z_at(i) == 1).count();
    w = w.with_phase(ys as i64);
    w
}

fn check_dual_path(code: &SquareToricCode, path: &[usize]) -> Result<Vec<usize>> {
    if path.len() < 2 {
        return Err(Error::InvalidPath("a dual path needs at least two plaquettes".into()));
    }
    if let Some(&p) = path.iter().find(|&&p| p >= code.n_plaquettes()) {
        return Err(Error::Unknown { kind: "plaquette", index: p });
    }
    if path.iter().collect::<BTreeSet<_>>().len() != path.len() {
        return Err(Error::InvalidPath("dual path intersects itself".into()));
    }
    path.windows(2)
        .map(|s| {
            code.shared_edge(s[0], s[1]).ok_or_else(|| Error::InvalidPath(format!("plaquettes {} and {} are not adjacent", s[0], s[1])))
        })
        .collect()
}

/// Product of ψ short strings along a dual path, without any re-pairing.
pub fn open_psi_string(code: &SquareToricCode, path: &[usize]) -> Result<PauliWord> {
    let mut w = PauliWord::identity(code.n_qubits(), 2);
    for e in check_dual_path(code, path)? {
        w.mul_assign_unchecked(&short_string(code, Species::Psi, e)?);
    }
    Ok(hermitian(w.phaseless()))
}

/// Sites of the path string in path order, with the plaquette index each came from.
fn ordered_sites(code: &SquareToricCode, crossed: &[usize]) -> Result<(PauliWord, Vec<(usize, usize)>)> {
    let steps: Vec<Vec<usize>> =
        crossed.iter().map(|&e| short_string(code, Species::Psi, e).map(|w| w.support())).collect::<Result<_>>()?;
    let mut total = PauliWord::identity(code.n_qubits(), 2);
    for &e in crossed {
        total.mul_assign_unchecked(&short_string(code, Species::Psi, e)?);
    }
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (k, s) in steps.iter().enumerate() {
        let mut s = s.clone();
        // Put the site shared with the previous hop first and the one shared with the next hop last.
        if (k > 0 && steps[k - 1].contains(&s[1])) || (k + 1 < steps.len() && steps[k + 1].contains(&s[0])) {
            s.swap(0, 1);
        }
        for site in s {
            if order.iter().all(|&(x, _)| x != site) {
                order.push((site, k + 1));
            }
        }
    }
    order.retain(|&(s, _)| total.x_at(s) != 0 || total.z_at(s) != 0);
    Ok((total, order))
}

/// Turning points of a dual path.
fn corners_of(code: &SquareToricCode, path: &[usize], crossed: &[usize]) -> Vec<usize> {
    (1..path.len() - 1).filter(|&k| code.edge(crossed[k - 1]).horizontal != code.edge(crossed[k]).horizontal).map(|k| path[k]).collect()
}

/// Condenses ψ along `path`: the string is re-cut into commuting, disjoint
/// two-body pieces that each create a ψ pair, trimming at most one site per end.
pub fn condense_fermion_line(code: &SquareToricCode, path: &[usize]) -> Result<SquareToricCode> {
    let crossed = check_dual_path(code, path)?;
    let (total, order) = ordered_sites(code, &crossed)?;
    let corners = corners_of(code, path, &crossed);
    let mut best: Option<(usize, Vec<PauliWord>, Vec<usize>)> = None;
    let mut offending = None;
    for offset in 0..2 {
        let mut trimmed: Vec<usize> = order[..offset].iter().map(|&(s, _)| s).collect();
        let rest = &order[offset..];
        let mut pieces = Vec::new();
        let mut xy = 0;
        let mut ok = true;
        for pair in rest.chunks(2) {
            if pair.len() == 1 {
                trimmed.push(pair[0].0);
                continue;
            }
            let piece = hermitian(total.restrict(&[pair[0].0, pair[1].0]));
            let (vs, ps) = violations(code, &piece);
            if !is_psi_pair(code, &vs, &ps) || pieces.iter().any(|q: &PauliWord| !q.commutes_with(&piece)) {
                ok = false;
                offending.get_or_insert(path[pair[0].1.min(path.len() - 1)]);
                break;
            }
            let kinds: Vec<(u32, u32)> = pair.iter().map(|&(s, _)| (total.x_at(s), total.z_at(s))).collect();
            if kinds.contains(&(1, 1)) && kinds.contains(&(1, 0)) {
                xy += 1;
            }
            pieces.push(piece);
        }
        if ok && best.as_ref().is_none_or(|b| xy > b.0) {
            best = Some((xy, pieces, trimmed));
        }
    }
    let (_, pieces, trimmed) = best.ok_or_else(|| {
        let at = offending.unwrap_or(path[0]);
        Error::Decomposition(format!("no ψ re-pairing near plaquette {at} {:?}", code.plaquette_coords(at)))
    })?;
    let mut out = code.clone();
    let claimed: BTreeSet<usize> = out.lines.iter().flat_map(|l| l.pieces.iter().flat_map(|p| p.support())).collect();
    if let Some(s) = pieces.iter().flat_map(|p| p.support()).find(|s| claimed.contains(s)) {
        return Err(Error::DefectConflict(s));
    }
    out.lines.push(CondensationLine { path: path.to_vec(), corners, pieces, trimmed });
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TcTwistReport {
    pub line: usize,
    /// A string with an `e` on one side of the line and an `m` on the other.
    pub crossing_string: bool,
    /// A ψ string ending on each endpoint without other violations.
    pub condensed_at_start: bool,
    pub condensed_at_end: bool,
    /// `⟨W^ψ⟩` for the string between the second and second-to-last pieces.
    pub fermion_string_expectation: f64,
    /// Every probed region stays at least `margin` away from the open boundary.
    pub interior: bool,
    pub margin: f64,
}

impl TcTwistReport {
    pub fn passed(&self) -> bool {
        self.crossing_string
            && self.condensed_at_start
            && self.condensed_at_end
            && (self.fermion_string_expectation - 1.0).abs() < 1e-12
            && self.interior
    }
}

pub const INTERIOR_MARGIN: f64 = 3.0;

fn expectation_value(e: Expectation) -> f64 {
    match e {
        Expectation::Zero => 0.0,
        // γ = i for qubits; a hermitian stabilizer only reaches ±1.
        Expectation::Gamma(k) => match k % 4 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        },
    }
}

/// Solves for an operator on `region` whose syndrome on `gens` is exactly `flagged`.
pub fn local_string(code: &SquareToricCode, gens: &[PauliWord], region: &[usize], flagged: &[PauliWord]) -> Option<PauliWord> {
    let set: BTreeSet<usize> = region.iter().copied().collect();
    let cons: Vec<PauliWord> = gens.iter().filter(|g| g.support().iter().any(|s| set.contains(s))).cloned().collect();
    let targets: Vec<u64> = cons.iter().map(|g| u64::from(flagged.contains(g))).collect();
    if targets.iter().sum::<u64>() as usize != flagged.len() {
        return None;
    }
    operator_with_syndrome(code.n_qubits(), 2, region, &cons, &targets)
}

fn step_dir(code: &SquareToricCode, from: usize, to: usize) -> (i64, i64) {
    let (a, b) = (code.plaquette_coords(from), code.plaquette_coords(to));
    let (w, h) = code.size();
    let wrapd = |d: i64, n: usize| {
        let n = n as i64;
        let d = d.rem_euclid(n);
        if d > n / 2 {
            d - n
        } else {
            d
        }
    };
    (wrapd(b.0 as i64 - a.0 as i64, w), wrapd(b.1 as i64 - a.1 as i64, h))
}

/// Probes one condensation line: the e↔m crossing string at its middle, ψ
/// termination at both ends, and the interior fermion-string expectation.
pub fn verify_tc_twist(code: &SquareToricCode, line: usize) -> Result<TcTwistReport> {
    let l = code.lines.get(line).ok_or(Error::Unknown { kind: "condensation line", index: line })?;
    let gens = code.generators();
    let group = code.group()?;
    let mut interior = true;
    let mut note = |at: (f64, f64), r: f64| interior &= code.boundary_distance(at) - r >= INTERIOR_MARGIN;

    // Crossing: vertex two steps to one side of the middle, plaquette two to the other.
    let mid = l.path.len() / 2;
    let (dx, dy) = step_dir(code, l.path[mid - 1], l.path[mid]);
    let (ci, cj) = code.plaquette_coords(l.path[mid]);
    let (ci, cj) = (ci as i64, cj as i64);
    let (nx, ny) = (-dy, dx);
    let q = code.plaquette_at(ci - 2 * nx, cj - 2 * ny);
    let v = code.vertex_at(ci + 2 * nx + i64::from(nx > 0), cj + 2 * ny + i64::from(ny > 0));
    let centre = code.plaquette_center(l.path[mid]);
    note(centre, 3.5);
    let crossing = match (v, q) {
        (Some(v), Some(q)) => {
            let flagged = [code.vertex_term(v), code.plaquette_term(q)];
            let region = code.edges_near(centre, 3.5);
            flagged.iter().all(|f| gens.contains(f)) && local_string(code, &gens, &region, &flagged).is_some()
        }
        _ => false,
    };

    let mut ends = [false; 2];
    for (slot, (tip, next)) in [(l.path[0], l.path[1]), (l.path[l.path.len() - 1], l.path[l.path.len() - 2])].into_iter().enumerate() {
        let (dx, dy) = step_dir(code, next, tip);
        let (ti, tj) = code.plaquette_coords(tip);
        let (qi, qj) = (ti as i64 + 3 * dx, tj as i64 + 3 * dy);
        let at = code.plaquette_center(tip);
        note(at, 4.5);
        ends[slot] = match (code.plaquette_at(qi, qj), code.vertex_at(qi, qj)) {
            (Some(q), Some(v)) => {
                let flagged = [code.vertex_term(v), code.plaquette_term(q)];
                let region = code.edges_near(at, 4.5);
                flagged.iter().all(|f| gens.contains(f)) && local_string(code, &gens, &region, &flagged).is_some()
            }
            _ => false,
        };
    }

    let fermion_string_expectation = match l.pieces.len() {
        0..=2 => 0.0,
        k => {
            let mut w = PauliWord::identity(code.n_qubits(), 2);
            for p in &l.pieces[1..k - 1] {
                w.mul_assign_unchecked(p);
            }
            expectation_value(group.expectation(&w))
        }
    };
    Ok(TcTwistReport {
        line,
        crossing_string: crossing,
        condensed_at_start: ends[0],
        condensed_at_end: ends[1],
        fermion_string_expectation,
        interior,
        margin: INTERIOR_MARGIN,
    })
}

/// `⟨w⟩` in the code state of `code` as a real number (0 when `w` anticommutes with a stabilizer).
pub fn expectation(code: &SquareToricCode, w: &PauliWord) -> Result<f64> {
    Ok(expectation_value(code.group()?.expectation(w)))
}

/// A straight horizontal dual path of `len` plaquettes starting at `(i, j)`.
pub fn straight_path(code: &SquareToricCode, i: usize, j: usize, len: usize) -> Result<Vec<usize>> {
    (0..len)
        .map(|k| {
            code.plaquette_at((i + k) as i64, j as i64)
                .ok_or_else(|| Error::InvalidPath(format!("plaquette ({}, {j}) is outside the lattice", i + k)))
        })
        .collect()
}

/// Horizontal run of `a` plaquettes from `(i, j)` then a vertical run of `b` more.
pub fn l_path(code: &SquareToricCode, i: usize, j: usize, a: usize, b: usize) -> Result<Vec<usize>> {
    let mut out = straight_path(code, i, j, a)?;
    let x = i + a - 1;
    for k in 1..=b {
        out.push(
            code.plaquette_at(x as i64, (j + k) as i64)
                .ok_or_else(|| Error::InvalidPath(format!("plaquette ({x}, {}) is outside the lattice", j + k)))?,
        );
    }
    Ok(out)
}
