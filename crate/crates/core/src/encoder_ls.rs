//! Lattice-surgery legality: edge matching, one connection per edge, forbidden regions.

use std::collections::BTreeSet;

use crate::cnf::{CnfInstance, Lit, VarKey};
use crate::geometry::{all_candidates, connection_candidates, enumerate_faces, forbidden_faces, line_exclusions, ConnectionCandidate, DomainExtent, EdgeSlot, FaceSlot};

pub fn exist(inst: &CnfInstance, f: &FaceSlot) -> Lit {
    inst.registry.lit(&VarKey::FaceExist(*f))
}

pub fn color(inst: &CnfInstance, f: &FaceSlot) -> Lit {
    inst.registry.lit(&VarKey::FaceColor(*f))
}

pub fn con(inst: &CnfInstance, c: &ConnectionCandidate) -> Lit {
    let (a, b) = c.key();
    inst.registry.lit(&VarKey::ConFace(a, b))
}

/// Registers FaceExist, FaceColor and ConFace in enumeration order; returns the candidates.
pub fn register_geometry(domain: &DomainExtent, inst: &mut CnfInstance) -> Vec<ConnectionCandidate> {
    let faces = enumerate_faces(domain);
    for f in &faces {
        inst.registry.var(VarKey::FaceExist(*f));
    }
    for f in &faces {
        inst.registry.var(VarKey::FaceColor(*f));
    }
    let cands = all_candidates(domain);
    for c in &cands {
        inst.registry.var(VarKey::ConFace(c.from, c.to));
    }
    cands
}

/// `external` edges are satisfied from outside the domain and may not host a connection.
pub fn encode_ls(domain: &DomainExtent, external: &BTreeSet<EdgeSlot>, inst: &mut CnfInstance) {
    for face in enumerate_faces(domain) {
        let ef = exist(inst, &face);
        for e in 0..4 {
            let edge = face.edge(e);
            let lits: Vec<Lit> = connection_candidates(edge, domain).iter().map(|c| con(inst, c)).collect();
            if external.contains(&edge) {
                for l in lits {
                    inst.unit(-l);
                }
                continue;
            }
            let mut clause = vec![-ef];
            clause.extend(&lits);
            inst.add(clause);
            inst.at_most_one(&lits);
        }
    }
    for c in all_candidates(domain) {
        let l = con(inst, &c);
        inst.add(vec![-l, exist(inst, &c.from.face)]);
        inst.add(vec![-l, exist(inst, &c.to.face)]);
        for d in forbidden_faces(&c, domain) {
            inst.add(vec![-l, -exist(inst, &d)]);
        }
    }
    // faces meeting on one cube-edge line must bound a single occupancy of its four cubes
    let (pairs, faces) = line_exclusions(domain);
    for (x, y) in pairs {
        inst.add(vec![-con(inst, &x), -con(inst, &y)]);
    }
    for (x, f) in faces {
        inst.add(vec![-con(inst, &x), -exist(inst, &f)]);
    }
    // colour of an absent face is irrelevant; pin it to cut symmetric models
    for face in enumerate_faces(domain) {
        inst.add(vec![exist(inst, &face), -color(inst, &face)]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Model;

    #[test]
    fn isolated_face_violates() {
        let d = DomainExtent::new(1, 1, 1).unwrap();
        let mut inst = CnfInstance::new();
        register_geometry(&d, &mut inst);
        encode_ls(&d, &BTreeSet::new(), &mut inst);
        let f = FaceSlot::new(0, 0, 0, 0);
        let mut m = Model::new(inst.num_vars());
        m.set(exist(&inst, &f) as u32, true);
        assert!(inst.eval(&m).is_some());
        // the closed cube of six faces folded along all twelve edges is legal
        let mut m = Model::new(inst.num_vars());
        for g in enumerate_faces(&d) {
            m.set(exist(&inst, &g) as u32, true);
        }
        for c in all_candidates(&d) {
            m.set(con(&inst, &c) as u32, true);
        }
        assert_eq!(inst.eval(&m), None);
    }

    #[test]
    fn clause_count_is_linear_in_depth() {
        let count = |k| {
            let d = DomainExtent::new(2, 2, k).unwrap();
            let mut inst = CnfInstance::new();
            register_geometry(&d, &mut inst);
            encode_ls(&d, &BTreeSet::new(), &mut inst);
            inst.num_clauses() as i64
        };
        let (a, b, c) = (count(3), count(4), count(5));
        assert_eq!(b - a, c - b);
    }
}
