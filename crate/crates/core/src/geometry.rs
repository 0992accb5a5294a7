//! Exploration domain, face/edge indexing, connection templates and FT reachability.
//!
//! Faces are indexed `0..6 = {I-, I+, J-, J+, K-, K+}`, i.e. `f = 2*axis + (sign > 0)`.
//! The four local edges of a face run counterclockwise as seen from the outward normal.
//! With `u = (a+1)%3`, `v = (a+2)%3` for normal axis `a`:
//!
//! * normal `+a`: `0:(u,+) 1:(v,+) 2:(u,-) 3:(v,-)`
//! * normal `-a`: `0:(u,+) 1:(v,-) 2:(u,-) 3:(v,+)`

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const AXIS_I: usize = 0;
pub const AXIS_J: usize = 1;
pub const AXIS_K: usize = 2;

pub const FACE_NAMES: [&str; 6] = ["I-", "I+", "J-", "J+", "K-", "K+"];

/// Longest chain of connections pivoting around one vertex kept as a path template.
pub const PIVOT_CHAIN_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainExtent {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
}

impl DomainExtent {
    pub fn new(width: usize, height: usize, depth: usize) -> Option<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return None;
        }
        Some(DomainExtent { width, height, depth })
    }

    pub fn cube_count(&self) -> usize {
        self.width * self.height * self.depth
    }

    pub fn face_count(&self) -> usize {
        6 * self.cube_count()
    }

    pub fn contains_cube(&self, c: [i32; 3]) -> bool {
        c[0] >= 0
            && c[1] >= 0
            && c[2] >= 0
            && (c[0] as usize) < self.width
            && (c[1] as usize) < self.height
            && (c[2] as usize) < self.depth
    }

    pub fn contains(&self, s: &FaceSlot) -> bool {
        s.f < 6 && self.contains_cube(s.cube())
    }

    /// Dense index of an in-domain face, in enumeration order.
    pub fn index(&self, s: &FaceSlot) -> usize {
        debug_assert!(self.contains(s));
        (((s.i as usize * self.height) + s.j as usize) * self.depth + s.k as usize) * 6 + s.f as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceSlot {
    pub i: i32,
    pub j: i32,
    pub k: i32,
    pub f: u8,
}

impl FaceSlot {
    pub fn new(i: i32, j: i32, k: i32, f: u8) -> Self {
        FaceSlot { i, j, k, f }
    }

    pub fn from_parts(c: [i32; 3], axis: usize, sign: i32) -> Self {
        FaceSlot { i: c[0], j: c[1], k: c[2], f: face_index(axis, sign) }
    }

    pub fn cube(&self) -> [i32; 3] {
        [self.i, self.j, self.k]
    }

    pub fn axis(&self) -> usize {
        (self.f / 2) as usize
    }

    pub fn sign(&self) -> i32 {
        if self.f % 2 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn translate(&self, d: [i32; 3]) -> Self {
        FaceSlot { i: self.i + d[0], j: self.j + d[1], k: self.k + d[2], f: self.f }
    }

    pub fn is_vertical(&self) -> bool {
        self.axis() != AXIS_K
    }

    /// Corners of the face in doubled coordinates (cube `c` spans `2c..2c+2`).
    pub fn vertices(&self) -> [[i32; 3]; 4] {
        let (u, su) = edge_dir(self.f, 0);
        let (v, sv) = edge_dir(self.f, 1);
        let mut c = [2 * self.i + 1, 2 * self.j + 1, 2 * self.k + 1];
        c[self.axis()] += self.sign();
        let mut out = [c; 4];
        for (n, (du, dv)) in [(1, 1), (-1, 1), (-1, -1), (1, -1)].into_iter().enumerate() {
            out[n][u] += du * su;
            out[n][v] += dv * sv;
        }
        out
    }

    pub fn edge(&self, e: u8) -> EdgeSlot {
        EdgeSlot { face: *self, e }
    }

    pub fn edge_at(&self, b: usize, t: i32) -> EdgeSlot {
        EdgeSlot { face: *self, e: local_edge(self.f, b, t) }
    }
}

impl std::fmt::Display for FaceSlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.i, self.j, self.k, FACE_NAMES[self.f as usize])
    }
}

pub fn face_index(axis: usize, sign: i32) -> u8 {
    (2 * axis + usize::from(sign > 0)) as u8
}

fn unit(axis: usize, d: i32) -> [i32; 3] {
    let mut v = [0; 3];
    v[axis] = d;
    v
}

fn add(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// (axis, side) of local edge `e` on face `f`.
pub fn edge_dir(f: u8, e: u8) -> (usize, i32) {
    let a = (f / 2) as usize;
    let u = (a + 1) % 3;
    let v = (a + 2) % 3;
    let plus = f % 2 == 1;
    match (e, plus) {
        (0, _) => (u, 1),
        (1, true) => (v, 1),
        (1, false) => (v, -1),
        (2, _) => (u, -1),
        (3, true) => (v, -1),
        (3, false) => (v, 1),
        _ => panic!("local edge index out of range: {e}"),
    }
}

pub fn local_edge(f: u8, b: usize, t: i32) -> u8 {
    (0..4).find(|&e| edge_dir(f, e) == (b, t)).expect("edge axis parallel to the face normal")
}

/// Cube-global edge id: `4*line_axis + 2*(side along lower other axis) + side along higher`.
pub fn global_edge(f: u8, e: u8) -> u8 {
    let a = (f / 2) as usize;
    let s = if f % 2 == 1 { 1 } else { -1 };
    let (b, t) = edge_dir(f, e);
    let line = 3 - a - b;
    let (lo, hi) = if a < b { (s, t) } else { (t, s) };
    (4 * line + 2 * usize::from(lo > 0) + usize::from(hi > 0)) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeSlot {
    pub face: FaceSlot,
    pub e: u8,
}

impl EdgeSlot {
    pub fn dir(&self) -> (usize, i32) {
        edge_dir(self.face.f, self.e)
    }

    pub fn global_id(&self) -> u8 {
        global_edge(self.face.f, self.e)
    }

    /// Both endpoints, doubled coordinates.
    pub fn vertices(&self) -> [[i32; 3]; 2] {
        let a = self.face.axis();
        let (b, t) = self.dir();
        let mut base = [2 * self.face.i + 1, 2 * self.face.j + 1, 2 * self.face.k + 1];
        base[a] += self.face.sign();
        base[b] += t;
        let line = 3 - a - b;
        let mut p = base;
        let mut q = base;
        p[line] -= 1;
        q[line] += 1;
        [p, q]
    }

    pub fn touches(&self, v: [i32; 3]) -> bool {
        self.vertices().contains(&v)
    }

    pub fn translate(&self, d: [i32; 3]) -> Self {
        EdgeSlot { face: self.face.translate(d), e: self.e }
    }
}

impl std::fmt::Display for EdgeSlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}e{}", self.face, self.e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateKind {
    SpaceContinuation,
    TimeContinuation,
    CubeFold,
    CornerFold,
    MergeFold,
}

impl TemplateKind {
    pub fn name(&self) -> &'static str {
        match self {
            TemplateKind::SpaceContinuation => "space-continuation",
            TemplateKind::TimeContinuation => "time-continuation",
            TemplateKind::CubeFold => "cube-fold",
            TemplateKind::CornerFold => "corner-fold",
            TemplateKind::MergeFold => "merge-fold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConnectionCandidate {
    pub from: EdgeSlot,
    pub to: EdgeSlot,
    pub kind: TemplateKind,
}

impl ConnectionCandidate {
    /// Unordered key, smaller endpoint first.
    pub fn key(&self) -> (EdgeSlot, EdgeSlot) {
        if self.from <= self.to {
            (self.from, self.to)
        } else {
            (self.to, self.from)
        }
    }

    pub fn canonical(&self) -> Self {
        let (from, to) = self.key();
        ConnectionCandidate { from, to, kind: self.kind }
    }

    pub fn translate(&self, d: [i32; 3]) -> Self {
        ConnectionCandidate { from: self.from.translate(d), to: self.to.translate(d), kind: self.kind }
    }

    /// Faces on this connection's edge line that no legal line configuration allows beside it.
    pub fn line_excluded(&self) -> Vec<FaceSlot> {
        let ring = line_ring(self.from);
        let j = ring.iter().position(|e| *e == self.to).expect("partner lies on the line");
        let p = (0, j);
        ring_exclusions().1.iter().filter(|(q, _)| *q == p).map(|(_, slot)| ring[*slot].face).collect()
    }

    /// Faces that must be absent while this connection is active, unclipped.
    pub fn forbidden_raw(&self) -> Vec<FaceSlot> {
        let f = self.from.face;
        let (c, a, s) = (f.cube(), f.axis(), f.sign());
        let (b, t) = self.from.dir();
        match self.kind {
            TemplateKind::CornerFold => {
                let q = add(c, unit(b, t));
                vec![FaceSlot::from_parts(q, a, s), FaceSlot::from_parts(q, b, -t)]
            }
            TemplateKind::MergeFold => {
                let q1 = add(c, unit(b, t));
                let q2 = add(q1, unit(a, s));
                vec![
                    FaceSlot::from_parts(q1, a, s),
                    FaceSlot::from_parts(q1, b, -t),
                    FaceSlot::from_parts(q2, a, -s),
                    FaceSlot::from_parts(q2, b, -t),
                ]
            }
            _ => Vec::new(),
        }
    }
}

/// All four partner templates of an edge, ignoring the domain.
pub fn raw_candidates(edge: EdgeSlot) -> [ConnectionCandidate; 4] {
    let f = edge.face;
    let (c, a, s) = (f.cube(), f.axis(), f.sign());
    let (b, t) = edge.dir();
    let straight = FaceSlot::from_parts(add(c, unit(b, t)), a, s).edge_at(b, -t);
    let convex = FaceSlot::from_parts(c, b, t).edge_at(a, s);
    let concave = FaceSlot::from_parts(add(add(c, unit(b, t)), unit(a, s)), b, -t).edge_at(a, -s);
    let uturn = FaceSlot::from_parts(add(c, unit(a, s)), a, -s).edge_at(b, t);
    let cont = if b == AXIS_K { TemplateKind::TimeContinuation } else { TemplateKind::SpaceContinuation };
    [
        ConnectionCandidate { from: edge, to: straight, kind: cont },
        ConnectionCandidate { from: edge, to: convex, kind: TemplateKind::CubeFold },
        ConnectionCandidate { from: edge, to: concave, kind: TemplateKind::CornerFold },
        ConnectionCandidate { from: edge, to: uturn, kind: TemplateKind::MergeFold },
    ]
}

pub fn connection_candidates(edge: EdgeSlot, domain: &DomainExtent) -> Vec<ConnectionCandidate> {
    raw_candidates(edge).into_iter().filter(|c| domain.contains(&c.to.face)).collect()
}

pub fn forbidden_faces(cand: &ConnectionCandidate, domain: &DomainExtent) -> Vec<FaceSlot> {
    cand.forbidden_raw().into_iter().filter(|s| domain.contains(s)).collect()
}

pub fn enumerate_faces(domain: &DomainExtent) -> Vec<FaceSlot> {
    let mut out = Vec::with_capacity(domain.face_count());
    for i in 0..domain.width as i32 {
        for j in 0..domain.height as i32 {
            for k in 0..domain.depth as i32 {
                for f in 0..6 {
                    out.push(FaceSlot { i, j, k, f });
                }
            }
        }
    }
    out
}

/// Every in-domain candidate, once per unordered pair, in canonical form and sorted.
pub fn all_candidates(domain: &DomainExtent) -> Vec<ConnectionCandidate> {
    let mut set = BTreeSet::new();
    for face in enumerate_faces(domain) {
        for e in 0..4 {
            for c in connection_candidates(face.edge(e), domain) {
                set.insert(c.canonical());
            }
        }
    }
    set.into_iter().collect()
}

/// The eight face edges lying on the cube-edge line of `edge`, in ring order. Slot 0 is `edge`
/// itself; the ring alternates cube and gap regions `X00 g X10 g X11 g X01 g`.
pub fn line_ring(edge: EdgeSlot) -> [EdgeSlot; 8] {
    let f = edge.face;
    let (c, a, s) = (f.cube(), f.axis(), f.sign());
    let (b, t) = edge.dir();
    let x10 = add(c, unit(b, t));
    let x01 = add(c, unit(a, s));
    let x11 = add(x10, unit(a, s));
    [
        edge,
        FaceSlot::from_parts(c, b, t).edge_at(a, s),
        FaceSlot::from_parts(x10, b, -t).edge_at(a, s),
        FaceSlot::from_parts(x10, a, s).edge_at(b, -t),
        FaceSlot::from_parts(x11, a, -s).edge_at(b, -t),
        FaceSlot::from_parts(x11, b, -t).edge_at(a, -s),
        FaceSlot::from_parts(x01, b, t).edge_at(a, -s),
        FaceSlot::from_parts(x01, a, -s).edge_at(b, t),
    ]
}

/// One legal occupancy of a line ring: present slots and the connected slot pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RingConfig {
    pub faces: u8,
    pub pairs: Vec<(usize, usize)>,
}

/// Every legal ring configuration. Regions `0,2,4,6` are cubes and `1,3,5,7` gaps; a gap can
/// only be occupied when both its cubes are. Slot `2m` sits between region `2m` and `2m-1`,
/// slot `2m+1` between region `2m` and `2m+1`.
pub fn ring_configs() -> Vec<RingConfig> {
    let mut out = BTreeSet::new();
    for occ in 0u16..256 {
        let inside = |r: usize| occ >> (r % 8) & 1 == 1;
        if (0..4).any(|g| inside(2 * g + 1) && !(inside(2 * g) && inside(2 * g + 2))) {
            continue;
        }
        let mut faces = 0u8;
        let mut pairs = Vec::new();
        if (0..8).all(inside) {
            out.insert(RingConfig { faces, pairs });
            continue;
        }
        // walk in-runs starting after an outside region
        let start = (0..8).find(|&r| !inside(r)).unwrap_or(0);
        let mut r = 0;
        while r < 8 {
            let at = (start + r) % 8;
            if !inside(at) {
                r += 1;
                continue;
            }
            let first = at;
            let mut last = at;
            while r + 1 < 8 && inside((start + r + 1) % 8) {
                r += 1;
                last = (start + r) % 8;
            }
            r += 1;
            // runs begin and end on cubes
            let lo = first;
            let hi = last;
            let lo_slot = lo; // face toward the region before `lo`
            let hi_slot = hi + 1; // face toward the region after `hi`
            faces |= 1 << lo_slot | 1 << hi_slot;
            pairs.push((lo_slot.min(hi_slot), lo_slot.max(hi_slot)));
        }
        pairs.sort_unstable();
        out.insert(RingConfig { faces, pairs });
    }
    out.into_iter().collect()
}

/// Slot-pair and slot/face exclusions implied by the ring model: `(p, q)` connection pairs that
/// never occur together, and `(p, slot)` where the face at `slot` is never present beside `p`.
pub fn ring_exclusions() -> &'static RingExclusions {
    static TABLE: std::sync::OnceLock<RingExclusions> = std::sync::OnceLock::new();
    TABLE.get_or_init(compute_ring_exclusions)
}

pub type RingExclusions = (Vec<((usize, usize), (usize, usize))>, Vec<((usize, usize), usize)>);

fn compute_ring_exclusions() -> RingExclusions {
    let configs = ring_configs();
    let all_pairs: BTreeSet<(usize, usize)> = configs.iter().flat_map(|c| c.pairs.iter().copied()).collect();
    let mut cc = Vec::new();
    let mut cf = Vec::new();
    for &p in &all_pairs {
        for &q in all_pairs.range((p.0, p.1 + 1)..) {
            if q.0 == p.0 || q.0 == p.1 || q.1 == p.0 || q.1 == p.1 {
                continue;
            }
            if !configs.iter().any(|c| c.pairs.contains(&p) && c.pairs.contains(&q)) {
                cc.push((p, q));
            }
        }
        for slot in 0..8 {
            if slot == p.0 || slot == p.1 {
                continue;
            }
            if !configs.iter().any(|c| c.pairs.contains(&p) && c.faces >> slot & 1 == 1) {
                cf.push((p, slot));
            }
        }
    }
    (cc, cf)
}

pub(crate) fn ring_candidate(ring: &[EdgeSlot; 8], (i, j): (usize, usize)) -> ConnectionCandidate {
    raw_candidates(ring[i]).into_iter().find(|c| c.to == ring[j]).expect("ring pairs are templates").canonical()
}

/// Line-consistency exclusions instantiated over the domain, each line once: pairs of
/// candidates that cannot both be active, and (candidate, face) pairs that cannot coexist.
pub fn line_exclusions(domain: &DomainExtent) -> (Vec<(ConnectionCandidate, ConnectionCandidate)>, Vec<(ConnectionCandidate, FaceSlot)>) {
    let (cc, cf) = ring_exclusions();
    let mut seen = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    let mut faces = BTreeSet::new();
    for face in enumerate_faces(domain) {
        for e in 0..4 {
            let ring = line_ring(face.edge(e));
            let mut key: Vec<EdgeSlot> = ring.to_vec();
            key.sort();
            if !seen.insert(key) {
                continue;
            }
            let inside = |slot: usize| domain.contains(&ring[slot].face);
            for &(p, q) in cc {
                if [p.0, p.1, q.0, q.1].iter().all(|&x| inside(x)) {
                    let (x, y) = (ring_candidate(&ring, p), ring_candidate(&ring, q));
                    pairs.insert(if x.key() <= y.key() { (x, y) } else { (y, x) });
                }
            }
            for &(p, slot) in cf {
                if [p.0, p.1, slot].iter().all(|&x| inside(x)) {
                    faces.insert((ring_candidate(&ring, p), ring[slot].face));
                }
            }
        }
    }
    (pairs.into_iter().collect(), faces.into_iter().collect())
}

/// A path template: the candidates (relative to the source cube) whose conjunction links two faces.
pub type PathTemplate = Vec<ConnectionCandidate>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachEntry {
    pub target: FaceSlot,
    pub paths: Vec<PathTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtReachTable {
    pub f: u8,
    pub m: u32,
    pub entries: Vec<ReachEntry>,
}

impl FtReachTable {
    pub fn path_count(&self) -> usize {
        self.entries.iter().map(|e| e.paths.len()).sum()
    }

    pub fn targets(&self) -> BTreeSet<FaceSlot> {
        self.entries.iter().map(|e| e.target).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("distance multiplier must be at least 1")]
    ZeroMultiplier,
}

/// Source face used for tables: orientation `f` at cube (0,0,0); targets are relative to it.
fn origin(f: u8) -> FaceSlot {
    FaceSlot { i: 0, j: 0, k: 0, f }
}

struct PathSearch {
    m: u32,
    found: BTreeMap<FaceSlot, BTreeSet<Vec<ConnectionCandidate>>>,
}

impl PathSearch {
    /// Walk one pivot chain around vertex `p`, then optionally start the next segment at each
    /// face reached.
    #[allow(clippy::too_many_arguments)]
    fn chain(
        &mut self,
        face: FaceSlot,
        in_edge: Option<u8>,
        p: [i32; 3],
        depth: usize,
        segment: u32,
        used_faces: &mut Vec<FaceSlot>,
        used_edges: &mut Vec<EdgeSlot>,
        cons: &mut Vec<ConnectionCandidate>,
        forbidden: &mut Vec<FaceSlot>,
    ) {
        for e in 0..4u8 {
            if Some(e) == in_edge {
                continue;
            }
            let edge = face.edge(e);
            if !edge.touches(p) || used_edges.contains(&edge) {
                continue;
            }
            for cand in raw_candidates(edge) {
                let g = cand.to.face;
                if used_faces.contains(&g) || forbidden.contains(&g) || used_edges.contains(&cand.to) {
                    continue;
                }
                let mut delta = cand.forbidden_raw();
                delta.extend(cand.line_excluded());
                if delta.iter().any(|x| *x == g || used_faces.contains(x)) {
                    continue;
                }
                used_faces.push(g);
                used_edges.push(edge);
                used_edges.push(cand.to);
                cons.push(cand.canonical());
                let nf = forbidden.len();
                forbidden.extend(delta);

                let mut key = cons.clone();
                key.sort();
                self.found.entry(g).or_default().insert(key);
                if depth + 1 < PIVOT_CHAIN_LEN {
                    self.chain(g, Some(cand.to.e), p, depth + 1, segment, used_faces, used_edges, cons, forbidden);
                }
                if segment + 1 < self.m {
                    for q in g.vertices() {
                        if q != p {
                            self.chain(g, None, q, 0, segment + 1, used_faces, used_edges, cons, forbidden);
                        }
                    }
                }

                forbidden.truncate(nf);
                cons.pop();
                used_edges.pop();
                used_edges.pop();
                used_faces.pop();
            }
        }
    }
}

/// Reachable targets and LS-legal connection paths for a face of orientation `f`.
pub fn ft_reach_table(f: u8, m: u32) -> Result<FtReachTable, GeometryError> {
    if m == 0 {
        return Err(GeometryError::ZeroMultiplier);
    }
    let src = origin(f);
    let mut search = PathSearch { m, found: BTreeMap::new() };
    for p in src.vertices() {
        let mut used_faces = vec![src];
        let mut used_edges = Vec::new();
        let mut cons = Vec::new();
        let mut forbidden = Vec::new();
        search.chain(src, None, p, 0, 0, &mut used_faces, &mut used_edges, &mut cons, &mut forbidden);
    }
    let entries = search
        .found
        .into_iter()
        .map(|(target, set)| {
            let mut paths: Vec<_> = set.into_iter().collect();
            // a path containing another path for the same target adds nothing to the disjunction
            paths.sort_by_key(|p| p.len());
            let mut kept: Vec<PathTemplate> = Vec::new();
            for p in paths {
                if !kept.iter().any(|k| k.iter().all(|c| p.contains(c))) {
                    kept.push(p);
                }
            }
            kept.sort();
            ReachEntry { target, paths: kept }
        })
        .collect();
    Ok(FtReachTable { f, m, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Face(FaceSlot),
    Corner(FaceSlot, [i32; 3]),
}

/// Shortest distances (in units of 0.5) from `src` over the face/corner graph, up to `limit`.
pub fn face_distances(src: FaceSlot, limit_half_units: u32) -> BTreeMap<FaceSlot, u32> {
    let mut dist: BTreeMap<Node, u32> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(Node::Face(src), 0);
    heap.push(Reverse((0u32, Node::Face(src))));
    while let Some(Reverse((d, node))) = heap.pop() {
        if dist.get(&node).is_some_and(|&x| x < d) {
            continue;
        }
        let mut relax = |n: Node, nd: u32, heap: &mut BinaryHeap<Reverse<(u32, Node)>>| {
            if nd <= limit_half_units && dist.get(&n).is_none_or(|&x| nd < x) {
                dist.insert(n, nd);
                heap.push(Reverse((nd, n)));
            }
        };
        match node {
            Node::Face(face) => {
                for v in face.vertices() {
                    relax(Node::Corner(face, v), d + 1, &mut heap);
                }
            }
            Node::Corner(face, v) => {
                relax(Node::Face(face), d + 1, &mut heap);
                for e in 0..4 {
                    let edge = face.edge(e);
                    if !edge.touches(v) {
                        continue;
                    }
                    for cand in raw_candidates(edge) {
                        relax(Node::Corner(cand.to.face, v), d, &mut heap);
                    }
                }
            }
        }
    }
    dist.into_iter()
        .filter_map(|(n, d)| match n {
            Node::Face(f) => Some((f, d)),
            Node::Corner(..) => None,
        })
        .collect()
}

/// Independent cross-check of the reachable target set: all faces within distance `m`, excluding
/// the source itself.
pub fn dijkstra_reach_oracle(f: u8, m: u32) -> BTreeSet<FaceSlot> {
    let src = origin(f);
    face_distances(src, 2 * m).into_keys().filter(|x| *x != src).collect()
}

/// Deterministic text listing of the templates and reach tables.
pub fn debug_dump(domain: &DomainExtent, m: u32) -> String {
    let mut out = String::new();
    for c in all_candidates(domain) {
        let _ = writeln!(out, "{} {} {}", c.from, c.to, c.kind.name());
    }
    for f in 0..6 {
        if let Ok(t) = ft_reach_table(f, m) {
            for e in &t.entries {
                let _ = writeln!(out, "reach {} {} paths={}", FACE_NAMES[f as usize], e.target, e.paths.len());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(w: usize, h: usize, d: usize) -> DomainExtent {
        DomainExtent::new(w, h, d).unwrap()
    }

    #[test]
    fn face_counts() {
        assert_eq!(enumerate_faces(&dom(1, 1, 1)).len(), 6);
        assert_eq!(enumerate_faces(&dom(2, 2, 3)).len(), 72);
        assert_eq!(enumerate_faces(&dom(3, 2, 4)).len(), 144);
        assert!(DomainExtent::new(0, 1, 1).is_none());
    }

    #[test]
    fn enumeration_matches_index() {
        let d = dom(3, 2, 4);
        for (n, s) in enumerate_faces(&d).iter().enumerate() {
            assert_eq!(d.index(s), n);
        }
    }

    #[test]
    fn global_edge_map_is_bijective_per_cube() {
        let mut seen = BTreeMap::new();
        for f in 0..6u8 {
            for e in 0..4u8 {
                *seen.entry(global_edge(f, e)).or_insert(0) += 1;
            }
        }
        // 12 cube edges, each shared by exactly two faces of the cube
        assert_eq!(seen.len(), 12);
        assert!(seen.values().all(|&n| n == 2));
        assert!(seen.keys().all(|&g| g < 12));
    }

    #[test]
    fn local_edges_are_counterclockwise() {
        for f in 0..6u8 {
            let s = origin(f);
            let normal = unit(s.axis(), s.sign());
            for e in 0..4u8 {
                let (b0, t0) = edge_dir(f, e);
                let (b1, t1) = edge_dir(f, (e + 1) % 4);
                let x = unit(b0, t0);
                let y = unit(b1, t1);
                let cross = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
                assert_eq!(cross, normal);
            }
        }
    }

    #[test]
    fn interior_edge_has_four_candidates() {
        let d = dom(3, 3, 3);
        for f in 0..6 {
            for e in 0..4 {
                let edge = FaceSlot::new(1, 1, 1, f).edge(e);
                assert_eq!(connection_candidates(edge, &d).len(), 4);
            }
        }
    }

    #[test]
    fn clipped_in_single_cube() {
        let d = dom(1, 1, 1);
        for f in 0..6 {
            for e in 0..4 {
                // only the in-cube fold survives
                let c = connection_candidates(FaceSlot::new(0, 0, 0, f).edge(e), &d);
                assert_eq!(c.len(), 1);
                assert_eq!(c[0].kind, TemplateKind::CubeFold);
            }
        }
    }

    #[test]
    fn side_top_edge_does_not_fold_into_next_beat_bottom() {
        let d = dom(2, 2, 3);
        let side = FaceSlot::from_parts([0, 0, 0], AXIS_I, 1);
        let edge = side.edge_at(AXIS_K, 1);
        let bottom_next = FaceSlot::from_parts([0, 0, 1], AXIS_K, -1);
        assert!(connection_candidates(edge, &d).iter().all(|c| c.to.face != bottom_next));
    }

    #[test]
    fn candidates_are_symmetric() {
        let d = dom(3, 3, 3);
        for face in enumerate_faces(&d) {
            for e in 0..4 {
                for c in connection_candidates(face.edge(e), &d) {
                    let back = connection_candidates(c.to, &d);
                    let rev = back.iter().find(|r| r.to == c.from).expect("missing reverse");
                    assert_eq!(rev.kind, c.kind);
                    assert_eq!(rev.key(), c.key());
                    let mut a = c.forbidden_raw();
                    let mut b = rev.forbidden_raw();
                    a.sort();
                    b.sort();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn partner_shares_the_edge_line() {
        for f in 0..6 {
            for e in 0..4 {
                let edge = FaceSlot::new(0, 0, 0, f).edge(e);
                let mut a = edge.vertices();
                a.sort();
                for c in raw_candidates(edge) {
                    let mut b = c.to.vertices();
                    b.sort();
                    assert_eq!(a, b, "{c:?}");
                }
            }
        }
    }

    #[test]
    fn time_continuation_forbids_nothing() {
        let side = FaceSlot::new(0, 0, 0, face_index(AXIS_I, 1));
        let c = raw_candidates(side.edge_at(AXIS_K, 1))[0];
        assert_eq!(c.kind, TemplateKind::TimeContinuation);
        assert!(c.forbidden_raw().is_empty());
    }

    #[test]
    fn merge_fold_forbids_walls_inside_the_patch() {
        // a J+ wall folding over to the J- wall of the next row, at its +I edge
        let wall = FaceSlot::from_parts([0, 0, 1], AXIS_J, 1);
        let c = raw_candidates(wall.edge_at(AXIS_I, 1))[3];
        assert_eq!(c.kind, TemplateKind::MergeFold);
        let mut got = c.forbidden_raw();
        got.sort();
        let mut want = vec![
            FaceSlot::from_parts([1, 0, 1], AXIS_J, 1),
            FaceSlot::from_parts([1, 0, 1], AXIS_I, -1),
            FaceSlot::from_parts([1, 1, 1], AXIS_J, -1),
            FaceSlot::from_parts([1, 1, 1], AXIS_I, -1),
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(forbidden_faces(&c, &dom(1, 2, 2)), Vec::<FaceSlot>::new());
    }

    #[test]
    fn reach_is_65_and_matches_oracle() {
        for f in 0..6 {
            let t = ft_reach_table(f, 1).unwrap();
            assert_eq!(t.entries.len(), 65);
            assert_eq!(t.targets(), dijkstra_reach_oracle(f, 1));
            let n = t.path_count();
            assert!((200..=5000).contains(&n), "{n}");
        }
        assert_eq!(ft_reach_table(0, 0), Err(GeometryError::ZeroMultiplier));
    }

    #[test]
    fn reach_equals_vertex_neighbours() {
        let src = origin(0);
        let vs: BTreeSet<_> = src.vertices().into_iter().collect();
        let mut want = BTreeSet::new();
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    for f in 0..6 {
                        let g = FaceSlot::new(i, j, k, f);
                        if g != src && g.vertices().iter().any(|v| vs.contains(v)) {
                            want.insert(g);
                        }
                    }
                }
            }
        }
        assert_eq!(dijkstra_reach_oracle(0, 1), want);
    }

    #[test]
    fn distance_to_self_is_zero_and_large_m_saturates() {
        let src = origin(2);
        assert_eq!(face_distances(src, 2)[&src], 0);
        let far = face_distances(src, 12);
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    for f in 0..6 {
                        assert!(far.contains_key(&FaceSlot::new(i, j, k, f)));
                    }
                }
            }
        }
    }

    #[test]
    fn path_templates_are_legal_candidates() {
        let t = ft_reach_table(4, 1).unwrap();
        for e in &t.entries {
            for p in &e.paths {
                assert!(!p.is_empty() && p.len() <= PIVOT_CHAIN_LEN);
                for c in p {
                    assert!(raw_candidates(c.from).iter().any(|r| r.to == c.to && r.kind == c.kind));
                }
            }
        }
    }

    #[test]
    fn dump_is_deterministic() {
        let d = dom(1, 1, 2);
        assert_eq!(debug_dump(&d, 1), debug_dump(&d, 1));
        assert!(debug_dump(&d, 1).contains("cube-fold"));
    }

    #[test]
    fn ring_slots_match_candidate_kinds() {
        for f in 0..6 {
            for e in 0..4 {
                let ring = line_ring(origin(f).edge(e));
                let kinds: Vec<(usize, TemplateKind)> = raw_candidates(ring[0])
                    .iter()
                    .map(|c| (ring.iter().position(|x| *x == c.to).unwrap(), c.kind))
                    .collect();
                assert_eq!(kinds.iter().map(|k| k.0).collect::<Vec<_>>(), vec![3, 1, 5, 7]);
                // every slot sees the same ring, rotated or reflected
                for slot in ring {
                    let mut a: Vec<_> = line_ring(slot).to_vec();
                    let mut b = ring.to_vec();
                    a.sort();
                    b.sort();
                    assert_eq!(a, b);
                }
            }
        }
    }

    /// Local clauses (edge matching, one connection per edge, Δ, line exclusions) restricted to
    /// one line admit exactly the occupancy configurations.
    #[test]
    fn line_clauses_admit_only_occupancies() {
        let ring = line_ring(origin(5).edge(1));
        let slot_of = |e: &EdgeSlot| ring.iter().position(|x| x == e);
        let mut legal: Vec<(usize, usize, ConnectionCandidate)> = Vec::new();
        for (i, e) in ring.iter().enumerate() {
            for c in raw_candidates(*e) {
                let j = slot_of(&c.to).unwrap();
                if i < j {
                    legal.push((i, j, c));
                }
            }
        }
        assert_eq!(legal.len(), 16);
        let (cc, cf) = ring_exclusions();
        let mut admitted = BTreeSet::new();
        for mask in 0u32..(1 << legal.len()) {
            let chosen: Vec<_> = legal.iter().enumerate().filter(|(n, _)| mask >> n & 1 == 1).map(|(_, x)| x).collect();
            let mut deg = [0; 8];
            for (i, j, _) in &chosen {
                deg[*i] += 1;
                deg[*j] += 1;
            }
            if deg.iter().any(|&d| d > 1) {
                continue;
            }
            let faces: u8 = (0..8).filter(|&x| deg[x] == 1).fold(0, |m, x| m | 1 << x);
            let present = |g: &FaceSlot| ring.iter().position(|x| x.face == *g).is_some_and(|x| faces >> x & 1 == 1);
            if chosen.iter().any(|(_, _, c)| c.forbidden_raw().iter().any(present)) {
                continue;
            }
            let pairs: Vec<(usize, usize)> = chosen.iter().map(|(i, j, _)| (*i, *j)).collect();
            if cc.iter().any(|(p, q)| pairs.contains(p) && pairs.contains(q)) {
                continue;
            }
            if cf.iter().any(|(p, x)| pairs.contains(p) && faces >> x & 1 == 1) {
                continue;
            }
            admitted.insert(RingConfig { faces, pairs });
        }
        let want: BTreeSet<_> = ring_configs().into_iter().collect();
        assert_eq!(admitted, want);
    }

    #[test]
    fn line_exclusions_cover_crossing_surfaces() {
        // a horizontal face turning onto the neighbour's wall while its own wall goes on
        let top = FaceSlot::from_parts([0, 0, 0], AXIS_K, 1);
        let c = raw_candidates(top.edge_at(AXIS_I, 1)).into_iter().find(|c| c.kind == TemplateKind::CornerFold).unwrap();
        assert!(c.line_excluded().contains(&FaceSlot::from_parts([0, 0, 0], AXIS_I, 1)));
        for c in raw_candidates(top.edge(0)) {
            for d in c.forbidden_raw() {
                assert!(c.line_excluded().contains(&d), "{d}");
            }
        }
    }
}
