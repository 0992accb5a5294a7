//! Direct evaluation of every constraint family on a decoded bulk, without a solver.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::bulk::Bulk;
use super::EncodeOptions;
use crate::encoder_func::{plan_ports, NumRule, PortAssignment};
use crate::encoder_ft::{FtRule, FtTables};
use crate::flows::{Color, TargetSpec};
use crate::geometry::{line_ring, raw_candidates, ring_candidate, ring_exclusions, ConnectionCandidate, EdgeSlot, FaceSlot, TemplateKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowAudit {
    pub c: usize,
    pub pairs: Vec<(FaceSlot, FaceSlot)>,
    pub cross_pairs: usize,
    pub loops: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ls_violations: Vec<String>,
    pub func_violations: Vec<String>,
    pub ft_violations: Vec<String>,
    pub audit: Vec<FlowAudit>,
    pub verdict: bool,
}

impl VerificationReport {
    pub fn violation_count(&self) -> usize {
        self.ls_violations.len() + self.func_violations.len() + self.ft_violations.len()
    }

    pub fn audit_pass(&self) -> bool {
        self.audit.iter().all(|a| a.pass)
    }
}

struct View<'a> {
    faces: BTreeMap<FaceSlot, (Color, u32)>,
    /// edge -> partner edges over active connections
    links: BTreeMap<EdgeSlot, Vec<EdgeSlot>>,
    cons: Vec<ConnectionCandidate>,
    ports: &'a PortAssignment,
}

fn legal_kind(a: &EdgeSlot, b: &EdgeSlot) -> Option<TemplateKind> {
    raw_candidates(*a).into_iter().find(|c| c.to == *b).map(|c| c.kind)
}

pub fn verify(bulk: &Bulk, target: &TargetSpec, opts: &EncodeOptions, tables: Option<&FtTables>) -> VerificationReport {
    let mut r = VerificationReport::default();
    let ports = match plan_ports(target, bulk.beats) {
        Ok(p) => p,
        Err(e) => {
            r.func_violations.push(format!("target: {e}"));
            return r;
        }
    };
    if (bulk.width, bulk.height) != (target.width, target.height) {
        r.ls_violations.push(format!("bulk footprint {}x{} differs from target {}x{}", bulk.width, bulk.height, target.width, target.height));
        return r;
    }
    let domain = bulk.domain();
    let mut view = View { faces: BTreeMap::new(), links: BTreeMap::new(), cons: Vec::new(), ports: &ports };
    for f in &bulk.faces {
        let s = f.slot();
        if !domain.contains(&s) {
            r.ls_violations.push(format!("face {s} outside the domain"));
        } else if view.faces.insert(s, (f.color, f.num)).is_some() {
            r.ls_violations.push(format!("face {s} listed twice"));
        }
    }
    for c in &bulk.connections {
        match legal_kind(&c.from, &c.to) {
            None => r.ls_violations.push(format!("connection {} - {} is not a legal template", c.from, c.to)),
            Some(kind) => {
                view.links.entry(c.from).or_default().push(c.to);
                view.links.entry(c.to).or_default().push(c.from);
                view.cons.push(ConnectionCandidate { from: c.from, to: c.to, kind });
            }
        }
    }
    check_ls(&view, &mut r);
    check_ports(&view, &mut r);
    if opts.num_rule == NumRule::Propagate {
        for c in &view.cons {
            if matches!(c.kind, TemplateKind::SpaceContinuation | TemplateKind::TimeContinuation | TemplateKind::CubeFold) {
                let (a, b) = (view.faces.get(&c.from.face), view.faces.get(&c.to.face));
                if let (Some(a), Some(b)) = (a, b) {
                    if a.1 != b.1 {
                        r.func_violations.push(format!("group number changes across {} - {}", c.from, c.to));
                    }
                }
            }
        }
    }
    for fl in &bulk.flows {
        if fl.c >= ports.anchors.len() {
            r.func_violations.push(format!("flow {} not in target", fl.c));
            continue;
        }
        r.audit.push(check_flow(&view, fl.c, &fl.marked, &mut r.func_violations));
    }
    if bulk.flows.len() != ports.anchors.len() {
        r.func_violations.push(format!("bulk carries {} flows, target has {}", bulk.flows.len(), ports.anchors.len()));
    }
    if opts.ft {
        let owned;
        let tables = match tables {
            Some(t) => t,
            None => {
                owned = FtTables::new(target.m).expect("m validated");
                &owned
            }
        };
        check_ft(&view, tables, opts.ft_rule, &mut r);
    }
    r.verdict = r.violation_count() == 0 && r.audit_pass();
    r
}

fn check_ls(v: &View, r: &mut VerificationReport) {
    let active: BTreeSet<(EdgeSlot, EdgeSlot)> = v.cons.iter().map(|c| c.key()).collect();
    for c in &v.cons {
        for end in [c.from.face, c.to.face] {
            if !v.faces.contains_key(&end) {
                r.ls_violations.push(format!("connection {} - {} touches absent face {end}", c.from, c.to));
            }
        }
        for d in c.forbidden_raw() {
            if v.faces.contains_key(&d) {
                r.ls_violations.push(format!("face {d} present inside the forbidden region of {} - {}", c.from, c.to));
            }
        }
        for d in c.line_excluded() {
            if v.faces.contains_key(&d) {
                r.ls_violations.push(format!("face {d} crosses the edge line of {} - {}", c.from, c.to));
            }
        }
        let ring = line_ring(c.from);
        for (p, q) in &ring_exclusions().0 {
            if ring_candidate(&ring, *p).key() == c.key() && active.contains(&ring_candidate(&ring, *q).key()) {
                r.ls_violations.push(format!("connections {} - {} and {} - {} cross on one edge line", c.from, c.to, ring[q.0], ring[q.1]));
            }
        }
        for e in [c.from, c.to] {
            if v.ports.external.contains(&e) {
                r.ls_violations.push(format!("connection on external edge {e}"));
            }
        }
    }
    for (edge, partners) in &v.links {
        if partners.len() > 1 {
            r.ls_violations.push(format!("edge {edge} has {} connections", partners.len()));
        }
    }
    for face in v.faces.keys() {
        for e in 0..4 {
            let edge = face.edge(e);
            if !v.ports.external.contains(&edge) && !v.links.contains_key(&edge) {
                r.ls_violations.push(format!("face {face} edge {e} unmatched"));
            }
        }
    }
}

fn check_ports(v: &View, r: &mut VerificationReport) {
    let p = v.ports;
    for (f, &want) in &p.exist {
        if v.faces.contains_key(f) != want {
            r.func_violations.push(format!("port face {f} should {}exist", if want { "" } else { "not " }));
        }
    }
    for (f, &c) in &p.color {
        if let Some(&(got, _)) = v.faces.get(f) {
            if got != c {
                r.func_violations.push(format!("port face {f} has colour {got}, expected {c}"));
            }
        }
    }
    for (f, &n) in &p.num {
        if let Some(&(_, got)) = v.faces.get(f) {
            if got != n {
                r.func_violations.push(format!("port face {f} has group {got}, expected {n}"));
            }
        }
    }
}

fn check_flow(v: &View, c: usize, marked: &[FaceSlot], out: &mut Vec<String>) -> FlowAudit {
    let marked: BTreeSet<FaceSlot> = marked.iter().copied().collect();
    let anchors = &v.ports.anchors[c];
    let outputs = &v.ports.output_anchors[c];
    let before = out.len();
    for a in anchors {
        if !marked.contains(a) {
            out.push(format!("flow {c}: anchor {a} not marked"));
        }
    }
    for f in &v.ports.port_faces {
        if !anchors.contains(f) && marked.contains(f) {
            out.push(format!("flow {c}: non-anchor port face {f} marked"));
        }
    }
    let mut adj: BTreeMap<FaceSlot, Vec<FaceSlot>> = BTreeMap::new();
    for f in &marked {
        let Some(&me) = v.faces.get(f) else {
            out.push(format!("flow {c}: marked face {f} absent"));
            continue;
        };
        let mut deg = 0;
        let mut ext = 0;
        for e in 0..4 {
            let edge = f.edge(e);
            if v.ports.external.contains(&edge) {
                ext += 1;
            }
            for p in v.links.get(&edge).into_iter().flatten() {
                let g = p.face;
                if marked.contains(&g) && v.faces.get(&g) == Some(&me) {
                    deg += 1;
                    adj.entry(*f).or_default().push(g);
                }
            }
        }
        let want = 2 - ext.min(2);
        if deg != want {
            out.push(format!("flow {c}: face {f} has {deg} flow links, expected {want}"));
        }
    }
    // walk each anchor to its partner
    let mut seen: BTreeSet<FaceSlot> = BTreeSet::new();
    let mut pairs = Vec::new();
    for &a in anchors {
        if seen.contains(&a) {
            continue;
        }
        seen.insert(a);
        let (mut prev, mut cur) = (a, a);
        let end = loop {
            let next = adj.get(&cur).and_then(|n| n.iter().find(|g| **g != prev && !seen.contains(g)).copied());
            match next {
                Some(g) => {
                    seen.insert(g);
                    prev = cur;
                    cur = g;
                    if anchors.contains(&g) {
                        break Some(g);
                    }
                }
                None => break None,
            }
        };
        match end {
            Some(b) => pairs.push((a, b)),
            None => out.push(format!("flow {c}: path from anchor {a} does not reach another anchor")),
        }
    }
    let loops = marked.iter().filter(|f| !seen.contains(f)).count();
    let n_out = outputs.len();
    let n_in = anchors.len() - n_out;
    let cross_pairs = pairs.iter().filter(|(a, b)| outputs.contains(a) != outputs.contains(b)).count();
    let pass = out.len() == before && cross_pairs == n_in.min(n_out);
    FlowAudit { c, pairs, cross_pairs, loops, pass }
}

fn check_ft(v: &View, tables: &FtTables, rule: FtRule, r: &mut VerificationReport) {
    let active: BTreeSet<(EdgeSlot, EdgeSlot)> = v.cons.iter().map(|c| c.key()).collect();
    for (a, &(ca, na)) in &v.faces {
        for entry in &tables.tables[a.f as usize].entries {
            let b = entry.target.translate(a.cube());
            if b <= *a {
                continue;
            }
            let Some(&(cb, nb)) = v.faces.get(&b) else { continue };
            if ca != cb {
                continue;
            }
            let bad = match rule {
                FtRule::SameNum => na == nb,
                FtRule::DifferentNum => na != nb,
            };
            if !bad {
                continue;
            }
            let linked = entry.paths.iter().any(|p| p.iter().all(|c| active.contains(&c.translate(a.cube()).key())));
            if !linked {
                r.ft_violations.push(format!("faces {a} and {b} ({ca}, groups {na}/{nb}) are within distance without a connecting path"));
            }
        }
    }
}
