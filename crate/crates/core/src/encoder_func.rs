//! Port initialisation and the flow path-finding constraints.
//!
//! The instance domain is the requested beat range plus one virtual layer on each side:
//! layer `0` holds the input patches and layer `beats + 1` the output patches. Their vertical
//! boundary faces are forced, and the edge pointing out of the domain is satisfied externally.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cnf::{CnfInstance, Lit, VarKey};
use crate::encoder_ls::{color, con, exist};
use crate::flows::{anchors_for, Color, FlowError, PatchSpec, PortMode, StabilizerFlow, TargetSpec};
use crate::geometry::{all_candidates, connection_candidates, enumerate_faces, face_index, ConnectionCandidate, DomainExtent, EdgeSlot, FaceSlot, AXIS_K};

/// How group numbers relate across connections off the ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumRule {
    /// Equal only where a flow link demands it.
    #[default]
    Free,
    /// Additionally equal across continuations and in-cube folds.
    Propagate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortAssignment {
    pub domain: DomainExtent,
    pub beats: usize,
    pub exist: BTreeMap<FaceSlot, bool>,
    pub color: BTreeMap<FaceSlot, Color>,
    pub num: BTreeMap<FaceSlot, u32>,
    pub num_bits: usize,
    pub external: BTreeSet<EdgeSlot>,
    /// Faces carrying an external edge.
    pub port_faces: BTreeSet<FaceSlot>,
    pub anchors: Vec<BTreeSet<FaceSlot>>,
    /// Which anchors sit on the output layer, per flow.
    pub output_anchors: Vec<BTreeSet<FaceSlot>>,
}

impl PortAssignment {
    /// Anchors that must each pair with an anchor on the other side: the smaller side.
    pub fn labelled_anchors(&self, c: usize) -> Vec<FaceSlot> {
        let outs = &self.output_anchors[c];
        let n_out = outs.len();
        let n_in = self.anchors[c].len() - n_out;
        let want_output = n_out < n_in;
        self.anchors[c].iter().filter(|a| outs.contains(a) == want_output).copied().collect()
    }

    pub fn label_bits(&self, c: usize) -> usize {
        let n = self.labelled_anchors(c).len();
        if n < 2 {
            0
        } else {
            (usize::BITS - (n - 1).leading_zeros()) as usize
        }
    }

    pub fn input_layer(&self) -> i32 {
        0
    }

    pub fn output_layer(&self) -> i32 {
        self.beats as i32 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PortError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("beats must be at least 1")]
    NoBeats,
    #[error("layer port mode needs at least 2 beats")]
    LayerTooShort,
    #[error("{needed} bits needed for group numbers, {given} requested")]
    NumWidth { needed: usize, given: usize },
    #[error("port face {0} demanded with conflicting colours")]
    Collision(FaceSlot),
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a.max(b)] = a.min(b);
    }
}

fn patch_faces(p: &PatchSpec, k: i32) -> Vec<(FaceSlot, Color, usize)> {
    let mut out = Vec::new();
    for (s, seg) in p.segments().iter().enumerate() {
        for &m in &seg.members {
            let b = p.boundaries[m];
            out.push((FaceSlot { i: b.tile.0, j: b.tile.1, k, f: b.side.face() }, b.color, s));
        }
    }
    out
}

pub fn plan_ports(target: &TargetSpec, beats: usize) -> Result<PortAssignment, PortError> {
    if beats == 0 {
        return Err(PortError::NoBeats);
    }
    if target.port_mode == PortMode::Layer && beats < 2 {
        return Err(PortError::LayerTooShort);
    }
    let domain = DomainExtent::new(target.width, target.height, beats + 2).expect("positive extent");
    let flows = target.flows();
    let top = beats as i32 + 1;

    // segments of every port patch, numbered globally
    let mut seg_ids: BTreeMap<(bool, usize, usize), usize> = BTreeMap::new();
    let mut seg_color = Vec::new();
    for (output, list) in [(false, &target.patches_in), (true, &target.patches_out)] {
        for (pi, p) in list.iter().enumerate() {
            for (s, seg) in p.segments().iter().enumerate() {
                seg_ids.insert((output, pi, s), seg_color.len());
                seg_color.push(seg.color);
            }
        }
    }
    let mut dsu = Dsu((0..seg_color.len()).collect());
    let mut anchors = Vec::new();
    let mut output_anchors = Vec::new();
    for flow in &flows {
        let a = anchors_for(flow, target)?;
        for c in [Color::X, Color::Z] {
            let ids: Vec<usize> = a.iter().filter(|x| x.color == c).map(|x| seg_ids[&(x.output, x.patch, x.segment)]).collect();
            for w in ids.windows(2) {
                dsu.union(w[0], w[1]);
            }
        }
        anchors.push(a.iter().map(|x| x.face(if x.output { top } else { 0 })).collect::<BTreeSet<_>>());
        output_anchors.push(a.iter().filter(|x| x.output).map(|x| x.face(top)).collect::<BTreeSet<_>>());
    }
    // dense codes per colour in order of first appearance
    let mut code_of: HashMap<usize, u32> = HashMap::new();
    let mut next = [0u32; 2];
    let mut seg_code = Vec::new();
    for s in 0..seg_color.len() {
        let r = dsu.find(s);
        let ci = usize::from(seg_color[s] == Color::Z);
        let code = *code_of.entry(r).or_insert_with(|| {
            next[ci] += 1;
            next[ci] - 1
        });
        seg_code.push(code);
    }
    let max_code = next.iter().copied().max().unwrap_or(1).max(1);
    let needed = (32 - (max_code - 1).leading_zeros()) as usize;
    let default_bits = (target.n_in() + target.n_out()).max(needed).max(1);
    let num_bits = match target.num_bits {
        Some(b) if b < needed => return Err(PortError::NumWidth { needed, given: b }),
        Some(b) => b,
        None => default_bits,
    };

    let mut pa = PortAssignment {
        domain,
        beats,
        exist: BTreeMap::new(),
        color: BTreeMap::new(),
        num: BTreeMap::new(),
        num_bits,
        external: BTreeSet::new(),
        port_faces: BTreeSet::new(),
        anchors,
        output_anchors,
    };
    for (output, list) in [(false, &target.patches_in), (true, &target.patches_out)] {
        let (k, inner, free_f, out_dir) = if output {
            (top, beats as i32, face_index(AXIS_K, -1), 1)
        } else {
            (0, 1, face_index(AXIS_K, 1), -1)
        };
        let mut tiles = BTreeSet::new();
        for (pi, p) in list.iter().enumerate() {
            tiles.extend(p.tiles.iter().copied());
            for (face, c, s) in patch_faces(p, k) {
                if pa.color.insert(face, c).is_some_and(|old| old != c) {
                    return Err(PortError::Collision(face));
                }
                pa.exist.insert(face, true);
                pa.num.insert(face, seg_code[seg_ids[&(output, pi, s)]]);
                pa.external.insert(face.edge_at(AXIS_K, out_dir));
                pa.port_faces.insert(face);
                if target.port_mode == PortMode::Layer {
                    let g = FaceSlot { k: inner, ..face };
                    pa.exist.insert(g, true);
                    pa.color.insert(g, c);
                }
            }
        }
        for i in 0..target.width as i32 {
            for j in 0..target.height as i32 {
                for f in 0..6 {
                    let face = FaceSlot { i, j, k, f };
                    let free = f == free_f && tiles.contains(&(i, j));
                    if !free && !pa.port_faces.contains(&face) {
                        pa.exist.insert(face, false);
                    }
                    // the port beat itself holds exactly the declared patches
                    if target.port_mode == PortMode::Layer {
                        let g = FaceSlot { k: inner, ..face };
                        let vertical = f < 4;
                        let blocked = vertical || (f != free_f && tiles.contains(&(i, j)));
                        if blocked && !pa.exist.contains_key(&g) {
                            pa.exist.insert(g, false);
                        }
                    }
                }
            }
        }
    }
    Ok(pa)
}

fn num_lits(inst: &mut CnfInstance, f: &FaceSlot, bits: usize) -> Vec<Lit> {
    (0..bits).map(|b| inst.registry.var(VarKey::Num(*f, b as u8)) as Lit).collect()
}

fn conn_lit(inst: &mut CnfInstance, f: &FaceSlot, c: usize) -> Lit {
    inst.registry.var(VarKey::Connectivity(*f, c)) as Lit
}

/// Registers Num and Connectivity families in enumeration order.
pub fn register_func(pa: &PortAssignment, flows: usize, inst: &mut CnfInstance) {
    let faces = enumerate_faces(&pa.domain);
    for f in &faces {
        num_lits(inst, f, pa.num_bits);
    }
    for c in 0..flows {
        for f in &faces {
            conn_lit(inst, f, c);
        }
    }
    for c in 0..flows {
        let bits = pa.label_bits(c);
        for f in &faces {
            for b in 0..bits {
                inst.registry.var(VarKey::Label(*f, c, b as u8));
            }
        }
    }
}

fn label_lits(inst: &CnfInstance, f: &FaceSlot, c: usize, bits: usize) -> Vec<Lit> {
    (0..bits).map(|b| inst.registry.lit(&VarKey::Label(*f, c, b as u8))).collect()
}

pub fn encode_ports(pa: &PortAssignment, flows: usize, inst: &mut CnfInstance) {
    for (f, &e) in &pa.exist {
        let l = exist(inst, f);
        inst.unit(if e { l } else { -l });
    }
    for (f, &c) in &pa.color {
        let l = color(inst, f);
        inst.unit(if c == Color::Z { l } else { -l });
    }
    for (f, &code) in &pa.num {
        let bits = num_lits(inst, f, pa.num_bits);
        for (b, l) in bits.into_iter().enumerate() {
            inst.unit(if code >> b & 1 == 1 { l } else { -l });
        }
    }
    for c in 0..flows {
        for f in &pa.port_faces {
            let l = conn_lit(inst, f, c);
            inst.unit(if pa.anchors[c].contains(f) { l } else { -l });
        }
        let bits = pa.label_bits(c);
        for (n, a) in pa.labelled_anchors(c).iter().enumerate() {
            for (b, l) in label_lits(inst, a, c, bits).into_iter().enumerate() {
                inst.unit(if n >> b & 1 == 1 { l } else { -l });
            }
        }
    }
}

/// Literal true iff the two faces of `cand` share colour and group number.
pub fn same_group(inst: &mut CnfInstance, cache: &mut HashMap<(EdgeSlot, EdgeSlot), Lit>, cand: &ConnectionCandidate, bits: usize) -> Lit {
    if let Some(&l) = cache.get(&cand.key()) {
        return l;
    }
    let (a, b) = (cand.from.face, cand.to.face);
    let mut na = num_lits(inst, &a, bits);
    let mut nb = num_lits(inst, &b, bits);
    na.push(color(inst, &a));
    nb.push(color(inst, &b));
    let l = inst.eq_over_bits(&na, &nb);
    cache.insert(cand.key(), l);
    l
}

pub fn encode_func(pa: &PortAssignment, flows: &[StabilizerFlow], rule: NumRule, inst: &mut CnfInstance) {
    let domain = pa.domain;
    let faces = enumerate_faces(&domain);
    for f in &faces {
        let e = exist(inst, f);
        for l in num_lits(inst, f, pa.num_bits) {
            inst.add(vec![e, -l]);
        }
    }
    if rule == NumRule::Propagate {
        use crate::geometry::TemplateKind::*;
        for cand in all_candidates(&domain) {
            if matches!(cand.kind, SpaceContinuation | TimeContinuation | CubeFold) {
                let na = num_lits(inst, &cand.from.face, pa.num_bits);
                let nb = num_lits(inst, &cand.to.face, pa.num_bits);
                let l = con(inst, &cand);
                for (x, y) in na.into_iter().zip(nb) {
                    inst.add(vec![-l, -x, y]);
                    inst.add(vec![-l, x, -y]);
                }
            }
        }
    }
    let mut sg_cache = HashMap::new();
    for flow in flows {
        let c = flow.c;
        let mut link: HashMap<(EdgeSlot, EdgeSlot), Lit> = HashMap::new();
        for cand in all_candidates(&domain) {
            let sg = same_group(inst, &mut sg_cache, &cand, pa.num_bits);
            let ca = conn_lit(inst, &cand.from.face, c);
            let cb = conn_lit(inst, &cand.to.face, c);
            let cl = con(inst, &cand);
            let l = inst.and_gate(&[ca, cb, cl, sg]);
            let bits = pa.label_bits(c);
            let la = label_lits(inst, &cand.from.face, c, bits);
            let lb = label_lits(inst, &cand.to.face, c, bits);
            for (x, y) in la.into_iter().zip(lb) {
                inst.add(vec![-l, -x, y]);
                inst.add(vec![-l, x, -y]);
            }
            link.insert(cand.key(), l);
        }
        for f in &faces {
            let cf = conn_lit(inst, f, c);
            inst.add(vec![-cf, exist(inst, f)]);
            if pa.port_faces.contains(f) && !pa.anchors[c].contains(f) {
                continue;
            }
            let mut edge_links = Vec::new();
            let mut ext = 0;
            for e in 0..4 {
                let edge = f.edge(e);
                if pa.external.contains(&edge) {
                    ext += 1;
                    continue;
                }
                let ls: Vec<Lit> = connection_candidates(edge, &domain).iter().map(|x| link[&x.key()]).collect();
                if !ls.is_empty() {
                    let o = inst.or_gate(&ls);
                    edge_links.push(o);
                }
            }
            let want = 2usize.saturating_sub(ext);
            if want > edge_links.len() {
                inst.add(vec![-cf]);
            } else {
                inst.exactly_k_guarded(&edge_links, want, &[-cf]).expect("at most four edges");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{Action, CliffordCircuit};

    fn idle(beats: Option<usize>) -> TargetSpec {
        TargetSpec {
            width: 1,
            height: 1,
            beats,
            search_from: None,
            port_mode: PortMode::Boundary,
            m: 1,
            num_bits: None,
            patches_in: vec![PatchSpec::single("q", (0, 0), true)],
            patches_out: vec![PatchSpec::single("q", (0, 0), true)],
            action: Action::Circuit(CliffordCircuit::new(1, vec![]).unwrap()),
        }
    }

    #[test]
    fn idle_ports() {
        let pa = plan_ports(&idle(None), 2).unwrap();
        assert_eq!(pa.domain.depth, 4);
        assert_eq!(pa.port_faces.len(), 8);
        let bottom: Vec<_> = pa.port_faces.iter().filter(|f| f.k == 0).map(|f| pa.color[f]).collect();
        assert_eq!(bottom.iter().filter(|c| **c == Color::X).count(), 2);
        // X faces share one code, Z faces another
        assert!(pa.port_faces.iter().all(|f| pa.num[f] == 0));
        assert_eq!(pa.anchors[0].len(), 4);
        assert_eq!(pa.num_bits, 2);
    }

    #[test]
    fn out_of_domain_patch_rejected() {
        let mut t = idle(None);
        t.patches_out[0] = PatchSpec::single("q", (2, 0), true);
        assert!(t.validate().is_err());
    }

    #[test]
    fn zero_beats_rejected() {
        assert_eq!(plan_ports(&idle(None), 0), Err(PortError::NoBeats));
    }
}
