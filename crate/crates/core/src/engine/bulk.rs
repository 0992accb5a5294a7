use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cnf::{CnfInstance, Model, VarKey};
use crate::flows::Color;
use crate::geometry::{DomainExtent, EdgeSlot, FaceSlot};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkFace {
    pub i: i32,
    pub j: i32,
    pub k: i32,
    pub f: u8,
    pub color: Color,
    pub num: u32,
}

impl BulkFace {
    pub fn slot(&self) -> FaceSlot {
        FaceSlot { i: self.i, j: self.j, k: self.k, f: self.f }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkConnection {
    pub from: EdgeSlot,
    pub to: EdgeSlot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkFlow {
    pub c: usize,
    pub marked: Vec<FaceSlot>,
}

/// Decoded space-time solution. Layers `0` and `beats + 1` are the port layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bulk {
    pub width: usize,
    pub height: usize,
    pub beats: usize,
    pub faces: Vec<BulkFace>,
    pub connections: Vec<BulkConnection>,
    pub flows: Vec<BulkFlow>,
}

impl Bulk {
    pub fn domain(&self) -> DomainExtent {
        DomainExtent { width: self.width, height: self.height, depth: self.beats + 2 }
    }

    pub fn face(&self, s: &FaceSlot) -> Option<&BulkFace> {
        self.faces.iter().find(|f| f.slot() == *s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bulk serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn decode(model: &Model, inst: &CnfInstance, width: usize, height: usize, beats: usize, num_bits: usize, flows: usize) -> Bulk {
    let mut faces = Vec::new();
    let mut connections = Vec::new();
    let mut marks: Vec<BTreeSet<FaceSlot>> = vec![BTreeSet::new(); flows];
    for (v, key) in inst.registry.keys() {
        if !model.value(v) {
            continue;
        }
        match key {
            VarKey::FaceExist(s) => {
                let color = if model.value(inst.registry.lit(&VarKey::FaceColor(*s)) as u32) { Color::Z } else { Color::X };
                let mut num = 0;
                for b in 0..num_bits {
                    if let Some(x) = inst.registry.get(&VarKey::Num(*s, b as u8)) {
                        if model.value(x) {
                            num |= 1 << b;
                        }
                    }
                }
                faces.push(BulkFace { i: s.i, j: s.j, k: s.k, f: s.f, color, num });
            }
            VarKey::ConFace(a, b) => connections.push(BulkConnection { from: *a, to: *b }),
            VarKey::Connectivity(s, c) if *c < flows => {
                marks[*c].insert(*s);
            }
            _ => {}
        }
    }
    Bulk {
        width,
        height,
        beats,
        faces,
        connections,
        flows: marks.into_iter().enumerate().map(|(c, m)| BulkFlow { c, marked: m.into_iter().collect() }).collect(),
    }
}
