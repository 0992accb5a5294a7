//! Fault-tolerance constraint over nearby face pairs.

use std::collections::HashMap;

use crate::cnf::{CnfInstance, Lit, VarKey};
use crate::encoder_ls::{color, con, exist};
use crate::geometry::{enumerate_faces, ft_reach_table, ConnectionCandidate, DomainExtent, FaceSlot, FtReachTable, GeometryError};

/// Which group relation makes a nearby unconnected same-colour pair a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FtRule {
    /// Violation when the group numbers are equal.
    SameNum,
    /// Violation when the group numbers differ.
    #[default]
    DifferentNum,
}

pub struct FtTables {
    pub m: u32,
    pub tables: Vec<FtReachTable>,
}

impl FtTables {
    pub fn new(m: u32) -> Result<Self, GeometryError> {
        let tables = (0..6).map(|f| ft_reach_table(f, m)).collect::<Result<_, _>>()?;
        Ok(FtTables { m, tables })
    }
}

/// One clause per unordered pair of nearby faces. Returns the number of pair clauses.
pub fn encode_ft(domain: &DomainExtent, tables: &FtTables, num_bits: usize, rule: FtRule, inst: &mut CnfInstance) -> usize {
    let mut path_cache: HashMap<Vec<ConnectionCandidate>, Lit> = HashMap::new();
    let mut pairs = 0;
    for a in enumerate_faces(domain) {
        let ia = domain.index(&a);
        for entry in &tables.tables[a.f as usize].entries {
            let b = entry.target.translate(a.cube());
            if !domain.contains(&b) || domain.index(&b) <= ia {
                continue;
            }
            let mut clause = vec![-exist(inst, &a), -exist(inst, &b)];
            let (ca, cb) = (color(inst, &a), color(inst, &b));
            clause.push(inst.xor_lit(ca, cb));
            let diffs: Vec<Lit> = (0..num_bits).map(|bit| num_xor(inst, &a, &b, bit)).collect();
            match rule {
                FtRule::SameNum => clause.extend(diffs),
                FtRule::DifferentNum => {
                    let any = inst.or_gate(&diffs);
                    clause.push(-any);
                }
            }
            for p in &entry.paths {
                let placed: Vec<ConnectionCandidate> = p.iter().map(|c| c.translate(a.cube())).collect();
                if !placed.iter().all(|c| domain.contains(&c.from.face) && domain.contains(&c.to.face)) {
                    continue;
                }
                let l = match path_cache.get(&placed) {
                    Some(&l) => l,
                    None => {
                        let lits: Vec<Lit> = placed.iter().map(|c| con(inst, c)).collect();
                        let l = inst.and_gate(&lits);
                        path_cache.insert(placed, l);
                        l
                    }
                };
                clause.push(l);
            }
            inst.add(clause);
            pairs += 1;
        }
    }
    pairs
}

fn num_xor(inst: &mut CnfInstance, a: &FaceSlot, b: &FaceSlot, bit: usize) -> Lit {
    let x = inst.registry.var(VarKey::Num(*a, bit as u8)) as Lit;
    let y = inst.registry.var(VarKey::Num(*b, bit as u8)) as Lit;
    inst.xor_lit(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder_ls::register_geometry;

    #[test]
    fn interior_face_pairs_with_65_neighbours() {
        let d = DomainExtent::new(3, 3, 3).unwrap();
        let t = FtTables::new(1).unwrap();
        let centre = FaceSlot::new(1, 1, 1, 0);
        let n = t.tables[0].entries.iter().filter(|e| d.contains(&e.target.translate(centre.cube()))).count();
        assert_eq!(n, 65);
        let mut inst = CnfInstance::new();
        register_geometry(&d, &mut inst);
        let pairs = encode_ft(&d, &t, 1, FtRule::SameNum, &mut inst);
        assert!(pairs > 0);
    }
}
