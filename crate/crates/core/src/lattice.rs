//! Honeycomb lattice with x/y/z edge labels and a 3-coloring of plaquettes.
//!
//! Plaquettes sit on triangular-lattice sites `P(i, j)` with color
//! `(i - j) mod 3`. Each site cell holds two qudits: `A(i, j)` is the corner
//! shared by `P(i,j), P(i+1,j), P(i,j+1)` and `B(i, j)` the corner shared by
//! `P(i+1,j), P(i,j+1), P(i+1,j+1)`. Edges from `A(i,j)`:
//! x to `B(i,j-1)`, y to `B(i-1,j)`, z to `B(i,j)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    X,
    Y,
    Z,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 3] = [EdgeLabel::X, EdgeLabel::Y, EdgeLabel::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 3]
    }

    /// The label different from both arguments (which must differ).
    pub fn third(a: EdgeLabel, b: EdgeLabel) -> EdgeLabel {
        debug_assert_ne!(a, b);
        Self::from_index(3 - a.index() - b.index())
    }

    pub fn as_char(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Torus { lx: usize, ly: usize },
    Planar { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// 0 for the A sublattice, 1 for B.
    pub sublattice: u8,
    pub cell: (i64, i64),
    pub pos: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// A-sublattice endpoint.
    pub a: usize,
    /// B-sublattice endpoint.
    pub b: usize,
    pub label: EdgeLabel,
    pub color: u8,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plaquette {
    pub site: (i64, i64),
    pub color: u8,
    /// Corners ordered so that their off-plaquette legs read x, y, z, x, y, z.
    pub cycle: Vec<usize>,
    /// `edges[k]` joins `cycle[k]` and `cycle[k+1]`.
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexLattice {
    pub topology: Topology,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub plaquettes: Vec<Plaquette>,
    /// Bivalent vertices (planar patches only).
    pub boundary_vertices: Vec<usize>,
    /// `incident[v][label]` is the edge of that label at `v`, if present.
    pub incident: Vec<[Option<usize>; 3]>,
    /// Plaquettes having `v` as a corner.
    pub vertex_plaquettes: Vec<Vec<usize>>,
}

pub fn site_color(i: i64, j: i64) -> u8 {
    (i - j).rem_euclid(3) as u8
}

fn site_pos(i: f64, j: f64) -> (f64, f64) {
    (i + 0.5 * j, j * 3f64.sqrt() / 2.0)
}

fn vertex_pos(cell: (i64, i64), sub: u8) -> (f64, f64) {
    let (x, y) = site_pos(cell.0 as f64, cell.1 as f64);
    let f = if sub == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
    let (dx, dy) = site_pos(f, f);
    (x + dx, y + dy)
}

/// Corners of `P(i, j)` in the x, y, z, x, y, z leg order.
fn site_corners(i: i64, j: i64) -> [((i64, i64), u8); 6] {
    [((i, j - 1), 0), ((i, j - 1), 1), ((i, j), 0), ((i - 1, j), 1), ((i - 1, j), 0), ((i - 1, j - 1), 1)]
}

/// Neighbouring sites in cyclic order around a site.
const SITE_NEIGHBORS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// The three A-to-B bonds from `A(i, j)`.
fn bonds(i: i64, j: i64) -> [((i64, i64), EdgeLabel, u8); 3] {
    [
        ((i, j - 1), EdgeLabel::X, (i - j + 2).rem_euclid(3) as u8),
        ((i - 1, j), EdgeLabel::Y, (i - j + 1).rem_euclid(3) as u8),
        ((i, j), EdgeLabel::Z, (i - j).rem_euclid(3) as u8),
    ]
}

struct Builder {
    index: HashMap<((i64, i64), u8), usize>,
    wrap: Option<(i64, i64)>,
    vertices: Vec<Vertex>,
}

impl Builder {
    fn norm(&self, c: (i64, i64)) -> (i64, i64) {
        match self.wrap {
            Some((lx, ly)) => (c.0.rem_euclid(lx), c.1.rem_euclid(ly)),
            None => c,
        }
    }

    fn vertex(&mut self, cell: (i64, i64), sub: u8) -> usize {
        let cell = self.norm(cell);
        if let Some(&v) = self.index.get(&(cell, sub)) {
            return v;
        }
        let v = self.vertices.len();
        self.vertices.push(Vertex { sublattice: sub, cell, pos: vertex_pos(cell, sub) });
        self.index.insert((cell, sub), v);
        v
    }

    fn lookup(&self, cell: (i64, i64), sub: u8) -> Option<usize> {
        self.index.get(&(self.norm(cell), sub)).copied()
    }
}

fn assemble(topology: Topology, sites: &[(i64, i64)], wrap: Option<(i64, i64)>) -> Result<HexLattice> {
    let mut b = Builder { index: HashMap::new(), wrap, vertices: Vec::new() };
    let mut plaquettes = Vec::with_capacity(sites.len());
    for &(i, j) in sites {
        let cycle: Vec<usize> = site_corners(i, j).iter().map(|&(c, s)| b.vertex(c, s)).collect();
        plaquettes.push(Plaquette { site: (i, j), color: site_color(i, j), cycle, edges: Vec::new() });
    }
    let nv = b.vertices.len();
    let mut edges = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut incident = vec![[None; 3]; nv];
    // Edges are exactly the sides of the included plaquettes.
    let mut sides: BTreeSet<(usize, usize)> = BTreeSet::new();
    for p in &plaquettes {
        for k in 0..6 {
            let (u, w) = (p.cycle[k], p.cycle[(k + 1) % 6]);
            let (a, bb) = if b.vertices[u].sublattice == 0 { (u, w) } else { (w, u) };
            sides.insert((a, bb));
        }
    }
    for a in 0..nv {
        if b.vertices[a].sublattice != 0 {
            continue;
        }
        let (i, j) = b.vertices[a].cell;
        for (cell, label, color) in bonds(i, j) {
            let Some(bv) = b.lookup(cell, 1) else { continue };
            if !sides.contains(&(a, bv)) || edge_index.contains_key(&(a, bv)) {
                continue;
            }
            let e = edges.len();
            edges.push(Edge { a, b: bv, label, color });
            edge_index.insert((a, bv), e);
            incident[a][label.index()] = Some(e);
            incident[bv][label.index()] = Some(e);
        }
    }
    for p in plaquettes.iter_mut() {
        for k in 0..6 {
            let (u, w) = (p.cycle[k], p.cycle[(k + 1) % 6]);
            let key = if b.vertices[u].sublattice == 0 { (u, w) } else { (w, u) };
            let e = *edge_index.get(&key).ok_or_else(|| Error::Degenerate(format!("plaquette side {u}-{w} has no edge")))?;
            p.edges.push(e);
        }
    }
    let mut vertex_plaquettes = vec![Vec::new(); nv];
    for (pi, p) in plaquettes.iter().enumerate() {
        for &v in &p.cycle {
            if !vertex_plaquettes[v].contains(&pi) {
                vertex_plaquettes[v].push(pi);
            }
        }
    }
    let boundary_vertices = (0..nv).filter(|&v| incident[v].iter().flatten().count() == 2).collect();
    let lat = HexLattice { topology, vertices: b.vertices, edges, plaquettes, boundary_vertices, incident, vertex_plaquettes };
    lat.validate()?;
    Ok(lat)
}

impl HexLattice {
    pub fn build_torus(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::Degenerate(format!("torus {lx}x{ly}")));
        }
        if !lx.is_multiple_of(3) || !ly.is_multiple_of(3) {
            return Err(Error::ColoringInfeasible(lx, ly));
        }
        let sites: Vec<(i64, i64)> = (0..ly as i64).flat_map(|j| (0..lx as i64).map(move |i| (i, j))).collect();
        assemble(Topology::Torus { lx, ly }, &sites, Some((lx as i64, ly as i64)))
    }

    /// A disk-shaped patch cut from a `rows x cols` parallelogram of sites,
    /// trimmed until every bivalent corner belongs to a 0-plaquette.
    pub fn build_planar(rows: usize, cols: usize) -> Result<Self> {
        if rows < 4 || cols < 4 {
            return Err(Error::Degenerate(format!("planar patch {rows}x{cols} is too small (need at least 4x4)")));
        }
        let mut keep: BTreeSet<(i64, i64)> = (0..rows as i64).flat_map(|j| (0..cols as i64).map(move |i| (i, j))).collect();
        loop {
            let outside = |s: &(i64, i64), keep: &BTreeSet<(i64, i64)>| -> Vec<bool> {
                SITE_NEIGHBORS.iter().map(|d| !keep.contains(&(s.0 + d.0, s.1 + d.1))).collect()
            };
            let mut drop = Vec::new();
            for s in &keep {
                let out = outside(s, &keep);
                let inside = out.iter().filter(|&&o| !o).count();
                let bivalent_corner = (0..6).any(|k| out[k] && out[(k + 1) % 6]);
                if (site_color(s.0, s.1) != 0 && bivalent_corner) || inside < 2 {
                    drop.push(*s);
                }
            }
            if drop.is_empty() {
                break;
            }
            for s in drop {
                keep.remove(&s);
            }
        }
        let sites: Vec<(i64, i64)> = keep.into_iter().collect();
        if !(0..3u8).all(|c| sites.iter().any(|s| site_color(s.0, s.1) == c)) {
            return Err(Error::Degenerate(format!("planar patch {rows}x{cols} has no interior plaquette of every color")));
        }
        let lat = assemble(Topology::Planar { rows, cols }, &sites, None)?;
        let euler = lat.vertices.len() as i64 - lat.edges.len() as i64 + lat.plaquettes.len() as i64;
        if euler != 1 {
            return Err(Error::Degenerate(format!("planar patch {rows}x{cols} is not a disk (Euler sum {euler})")));
        }
        Ok(lat)
    }

    fn validate(&self) -> Result<()> {
        for (e, edge) in self.edges.iter().enumerate() {
            if self.vertices[edge.a].sublattice == self.vertices[edge.b].sublattice {
                return Err(Error::Degenerate(format!("edge {e} is not bipartite")));
            }
        }
        for (v, inc) in self.incident.iter().enumerate() {
            let deg = inc.iter().flatten().count();
            if deg < 2 {
                return Err(Error::Degenerate(format!("vertex {v} has degree {deg}")));
            }
        }
        for p in &self.plaquettes {
            for &e in &p.edges {
                // Sides of a c-plaquette never have color c.
                if self.edges[e].color == p.color {
                    return Err(Error::Degenerate(format!("plaquette {:?} has a side of its own color", p.site)));
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }

    pub fn euler(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.plaquettes.len() as i64
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.topology, Topology::Torus { .. })
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].iter().flatten().count()
    }

    pub fn edge_at(&self, v: usize, label: EdgeLabel) -> Option<usize> {
        self.incident[v][label.index()]
    }

    pub fn edge_between(&self, u: usize, w: usize) -> Option<usize> {
        self.incident[u].iter().flatten().copied().find(|&e| self.edges[e].touches(w))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[v].iter().flatten().map(move |&e| self.edges[e].other(v))
    }

    /// Label of the missing leg at a bivalent vertex.
    pub fn missing_label(&self, v: usize) -> Option<EdgeLabel> {
        if self.degree(v) != 2 {
            return None;
        }
        (0..3).find(|&k| self.incident[v][k].is_none()).map(EdgeLabel::from_index)
    }

    /// Color the missing leg at a bivalent vertex would have: the color of its
    /// only plaquette.
    pub fn missing_color(&self, v: usize) -> Option<u8> {
        if self.degree(v) != 2 {
            return None;
        }
        self.vertex_plaquettes[v].first().map(|&p| self.plaquettes[p].color)
    }

    pub fn plaquette_cycle(&self, p: usize) -> Result<&[usize]> {
        self.plaquettes.get(p).map(|pl| pl.cycle.as_slice()).ok_or(Error::Unknown { kind: "plaquette", index: p })
    }

    /// Label of the leg at corner `v` that is not a side of plaquette `p`.
    pub fn external_label(&self, p: usize, v: usize) -> EdgeLabel {
        let pl = &self.plaquettes[p];
        let k = pl.cycle.iter().position(|&u| u == v).expect("vertex is a corner");
        let before = self.edges[pl.edges[(k + 5) % 6]].label;
        let after = self.edges[pl.edges[k]].label;
        EdgeLabel::third(before, after)
    }

    /// The two plaquettes having `e` as a side.
    pub fn edge_plaquettes(&self, e: usize) -> Vec<usize> {
        let edge = &self.edges[e];
        self.vertex_plaquettes[edge.a].iter().copied().filter(|&p| self.plaquettes[p].edges.contains(&e)).collect()
    }

    pub fn plaquette_at(&self, site: (i64, i64)) -> Option<usize> {
        let site = match self.topology {
            Topology::Torus { lx, ly } => (site.0.rem_euclid(lx as i64), site.1.rem_euclid(ly as i64)),
            Topology::Planar { .. } => site,
        };
        self.plaquettes.iter().position(|p| p.site == site)
    }

    pub fn vertex_at(&self, cell: (i64, i64), sublattice: u8) -> Option<usize> {
        let cell = match self.topology {
            Topology::Torus { lx, ly } => (cell.0.rem_euclid(lx as i64), cell.1.rem_euclid(ly as i64)),
            Topology::Planar { .. } => cell,
        };
        self.vertices.iter().position(|v| v.cell == cell && v.sublattice == sublattice)
    }

    /// Shortest path between the two vertices with odd length.
    pub fn odd_path(&self, v1: usize, v2: usize) -> Result<LatticePath> {
        let nv = self.vertices.len();
        if v1 >= nv {
            return Err(Error::Unknown { kind: "vertex", index: v1 });
        }
        if v2 >= nv {
            return Err(Error::Unknown { kind: "vertex", index: v2 });
        }
        if v1 == v2 || self.vertices[v1].sublattice == self.vertices[v2].sublattice {
            return Err(Error::OddPathUnavailable(v1, v2));
        }
        let path = self.shortest_path(v1, v2).ok_or(Error::OddPathUnavailable(v1, v2))?;
        debug_assert!(path.len() % 2 == 1);
        Ok(path)
    }

    /// Breadth-first shortest path with deterministic tie breaking.
    pub fn shortest_path(&self, v1: usize, v2: usize) -> Option<LatticePath> {
        let nv = self.vertices.len();
        let mut prev = vec![usize::MAX; nv];
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([v1]);
        seen[v1] = true;
        while let Some(u) = queue.pop_front() {
            if u == v2 {
                break;
            }
            for w in self.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if !seen[v2] {
            return None;
        }
        let mut verts = vec![v2];
        while *verts.last().unwrap() != v1 {
            verts.push(prev[*verts.last().unwrap()]);
        }
        verts.reverse();
        LatticePath::from_vertices(self, verts).ok()
    }

    /// A closed path along the x/z (horizontal) or x/... zigzag wrapping the torus.
    pub fn noncontractible_cycle(&self, horizontal: bool, offset: i64) -> Result<LatticePath> {
        let Topology::Torus { lx, ly } = self.topology else {
            return Err(Error::InvalidPath("non-contractible cycles need a torus".into()));
        };
        let mut verts = Vec::new();
        if horizontal {
            for i in 0..lx as i64 {
                verts.push(self.vertex_at((i, offset), 0).unwrap());
                verts.push(self.vertex_at((i, offset), 1).unwrap());
            }
        } else {
            for j in 0..ly as i64 {
                verts.push(self.vertex_at((offset, j), 0).unwrap());
                verts.push(self.vertex_at((offset, j), 1).unwrap());
            }
        }
        verts.push(verts[0]);
        LatticePath::from_vertices(self, verts)
    }

    /// JSON description of the lattice.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("lattice serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let lat: HexLattice = serde_json::from_value(value.clone()).map_err(|e| Error::Degenerate(format!("bad lattice JSON: {e}")))?;
        lat.validate()?;
        Ok(lat)
    }

    pub fn to_dot(&self) -> String {
        let colors = ["red", "gold", "blue"];
        let mut s = String::from("graph honeycomb {\n  node [shape=point];\n");
        for (v, vert) in self.vertices.iter().enumerate() {
            s.push_str(&format!("  v{} [pos=\"{:.3},{:.3}!\"];\n", v, vert.pos.0, vert.pos.1));
        }
        for e in &self.edges {
            s.push_str(&format!("  v{} -- v{} [label=\"{}\", color={}];\n", e.a, e.b, e.label.as_char(), colors[e.color as usize]));
        }
        s.push_str("}\n");
        s
    }

    /// Edges grouped by color.
    pub fn edges_of_color(&self, color: u8) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].color == color).collect()
    }

    pub fn plaquettes_of_color(&self, color: u8) -> Vec<usize> {
        (0..self.plaquettes.len()).filter(|&p| self.plaquettes[p].color == color).collect()
    }

    /// Plaquettes whose site lies inside the closed polygon through the positions of `path`.
    pub fn enclosed_plaquettes(&self, path: &LatticePath) -> Vec<usize> {
        let poly: Vec<(f64, f64)> = path.vertices.iter().map(|&v| self.vertices[v].pos).collect();
        (0..self.plaquettes.len())
            .filter(|&p| {
                let (i, j) = self.plaquettes[p].site;
                point_in_polygon(site_pos(i as f64, j as f64), &poly)
            })
            .collect()
    }

    /// Euclidean position of a plaquette centre.
    pub fn plaquette_pos(&self, p: usize) -> (f64, f64) {
        let (i, j) = self.plaquettes[p].site;
        site_pos(i as f64, j as f64)
    }

    fn frac_vertex(&self, v: usize) -> (f64, f64) {
        let vert = &self.vertices[v];
        let f = if vert.sublattice == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
        (vert.cell.0 as f64 + f, vert.cell.1 as f64 + f)
    }

    fn frac_site(&self, p: usize) -> (f64, f64) {
        let (i, j) = self.plaquettes[p].site;
        (i as f64, j as f64)
    }

    /// Euclidean displacement between two points given in lattice coordinates,
    /// using the nearest periodic image on a torus.
    fn delta(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let (mut di, mut dj) = (b.0 - a.0, b.1 - a.1);
        if let Topology::Torus { lx, ly } = self.topology {
            let (lx, ly) = (lx as f64, ly as f64);
            di -= (di / lx).round() * lx;
            dj -= (dj / ly).round() * ly;
        }
        site_pos(di, dj)
    }

    /// Nearest-image displacement `u -> w` in lattice (cell) coordinates.
    pub fn vertex_step(&self, u: usize, w: usize) -> (f64, f64) {
        let (a, b) = (self.frac_vertex(u), self.frac_vertex(w));
        let (mut di, mut dj) = (b.0 - a.0, b.1 - a.1);
        if let Topology::Torus { lx, ly } = self.topology {
            let (lx, ly) = (lx as f64, ly as f64);
            di -= (di / lx).round() * lx;
            dj -= (dj / ly).round() * ly;
        }
        (di, dj)
    }

    pub fn vertex_delta(&self, u: usize, w: usize) -> (f64, f64) {
        self.delta(self.frac_vertex(u), self.frac_vertex(w))
    }

    pub fn vertex_to_plaquette(&self, v: usize, p: usize) -> (f64, f64) {
        self.delta(self.frac_vertex(v), self.frac_site(p))
    }

    pub fn plaquette_delta(&self, p: usize, q: usize) -> (f64, f64) {
        self.delta(self.frac_site(p), self.frac_site(q))
    }

    /// The plaquette to the right of the directed edge `u -> w`, if present.
    pub fn right_plaquette(&self, u: usize, w: usize) -> Option<usize> {
        let e = self.edge_between(u, w)?;
        let d = self.vertex_delta(u, w);
        self.edge_plaquettes(e).into_iter().find(|&p| {
            let c = self.vertex_to_plaquette(u, p);
            d.0 * c.1 - d.1 * c.0 < 0.0
        })
    }

    /// Summary counts keyed by name, handy for reports.
    pub fn summary(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            ("vertices", self.vertices.len()),
            ("edges", self.edges.len()),
            ("plaquettes", self.plaquettes.len()),
            ("bivalent", self.boundary_vertices.len()),
        ])
    }
}

fn point_in_polygon(pt: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > pt.1) != (yj > pt.1) && pt.0 < (xj - xi) * (pt.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// An ordered, connected, non-self-intersecting walk on the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    /// Vertex sequence; closed paths repeat the first vertex at the end.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub closed: bool,
}

impl LatticePath {
    pub fn from_vertices(lat: &HexLattice, vertices: Vec<usize>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two vertices".into()));
        }
        let closed = vertices.first() == vertices.last();
        let body = if closed { &vertices[..vertices.len() - 1] } else { &vertices[..] };
        let distinct: BTreeSet<usize> = body.iter().copied().collect();
        if distinct.len() != body.len() {
            return Err(Error::InvalidPath("path intersects itself".into()));
        }
        let mut edges = Vec::with_capacity(vertices.len() - 1);
        for w in vertices.windows(2) {
            let e = lat
                .edge_between(w[0], w[1])
                .ok_or_else(|| Error::InvalidPath(format!("vertices {} and {} are not adjacent", w[0], w[1])))?;
            edges.push(e);
        }
        Ok(LatticePath { vertices, edges, closed })
    }

    /// Rebuilds a path from an edge list, ordering it from `start`.
    pub fn from_edges(lat: &HexLattice, edges: &[usize], start: Option<usize>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidPath("empty edge list".into()));
        }
        for &e in edges {
            if e >= lat.edges.len() {
                return Err(Error::Unknown { kind: "edge", index: e });
            }
        }
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in edges {
            *degree.entry(lat.edges[e].a).or_default() += 1;
            *degree.entry(lat.edges[e].b).or_default() += 1;
        }
        let ends: Vec<usize> = degree.iter().filter(|(_, &d)| d == 1).map(|(&v, _)| v).collect();
        let first = match start {
            Some(s) => s,
            None => ends.first().copied().unwrap_or(lat.edges[edges[0]].a),
        };
        let mut remaining: Vec<usize> = edges.to_vec();
        let mut verts = vec![first];
        let mut cur = first;
        while !remaining.is_empty() {
            let pos = remaining
                .iter()
                .position(|&e| lat.edges[e].touches(cur))
                .ok_or_else(|| Error::InvalidPath("edges are not connected".into()))?;
            let e = remaining.swap_remove(pos);
            cur = lat.edges[e].other(cur);
            verts.push(cur);
        }
        Self::from_vertices(lat, verts)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.vertices[0], *self.vertices.last().unwrap())
    }

    /// True when edge `k` is traversed from its A-end to its B-end.
    pub fn forward(&self, lat: &HexLattice, k: usize) -> bool {
        lat.edges[self.edges[k]].a == self.vertices[k]
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        let mut edges = self.edges.clone();
        edges.reverse();
        LatticePath { vertices, edges, closed: self.closed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let l = HexLattice::build_torus(3, 3).unwrap();
        assert_eq!((l.num_vertices(), l.num_edges(), l.num_plaquettes()), (18, 27, 9));
        assert_eq!(l.euler(), 0);
        for c in 0..3 {
            assert_eq!(l.edges_of_color(c).len(), 9);
        }
        assert!(matches!(HexLattice::build_torus(4, 3), Err(Error::ColoringInfeasible(4, 3))));
    }

    #[test]
    fn every_vertex_has_one_edge_per_label() {
        let l = HexLattice::build_torus(6, 3).unwrap();
        for inc in &l.incident {
            assert!(inc.iter().all(|e| e.is_some()));
        }
    }

    #[test]
    fn edge_color_is_color_of_joined_plaquettes() {
        let l = HexLattice::build_torus(6, 6).unwrap();
        for e in 0..l.num_edges() {
            let sides = l.edge_plaquettes(e);
            assert_eq!(sides.len(), 2);
            let (c1, c2) = (l.plaquettes[sides[0]].color, l.plaquettes[sides[1]].color);
            assert_ne!(c1, c2);
            assert_eq!(l.edges[e].color, 3 - c1 - c2);
        }
    }

    #[test]
    fn legs_read_xyzxyz() {
        let l = HexLattice::build_torus(3, 6).unwrap();
        for p in 0..l.num_plaquettes() {
            let legs: Vec<EdgeLabel> = l.plaquettes[p].cycle.iter().map(|&v| l.external_label(p, v)).collect();
            assert_eq!(legs, [EdgeLabel::X, EdgeLabel::Y, EdgeLabel::Z, EdgeLabel::X, EdgeLabel::Y, EdgeLabel::Z]);
        }
    }

    #[test]
    fn odd_paths() {
        let l = HexLattice::build_torus(6, 6).unwrap();
        let e = &l.edges[0];
        assert_eq!(l.odd_path(e.a, e.b).unwrap().len(), 1);
        let other_a = l.vertex_at((3, 3), 0).unwrap();
        assert!(matches!(l.odd_path(e.a, other_a), Err(Error::OddPathUnavailable(..))));
        let far_b = l.vertex_at((3, 2), 1).unwrap();
        assert_eq!(l.odd_path(e.a, far_b).unwrap().len() % 2, 1);
    }

    #[test]
    fn planar_patch_shape() {
        let l = HexLattice::build_planar(7, 7).unwrap();
        assert_eq!(l.euler(), 1);
        assert!(!l.boundary_vertices.is_empty());
        for &v in &l.boundary_vertices {
            assert_eq!(l.vertex_plaquettes[v].len(), 1);
            assert_eq!(l.plaquettes[l.vertex_plaquettes[v][0]].color, 0);
        }
        for v in 0..l.num_vertices() {
            assert!(l.degree(v) == 3 || l.boundary_vertices.contains(&v));
        }
        assert!(HexLattice::build_planar(2, 9).is_err());
    }

    #[test]
    fn json_round_trip() {
        let l = HexLattice::build_torus(3, 3).unwrap();
        assert_eq!(HexLattice::from_json(&l.to_json()).unwrap(), l);
        assert!(l.to_dot().starts_with("graph"));
    }
}
