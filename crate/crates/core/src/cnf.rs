//! Variable registry, small gadgets, DIMACS export and model parsing.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use crate::geometry::{EdgeSlot, FaceSlot};

pub type Lit = i32;
pub type Var = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    FaceExist(FaceSlot),
    FaceColor(FaceSlot),
    ConFace(EdgeSlot, EdgeSlot),
    Num(FaceSlot, u8),
    Connectivity(FaceSlot, usize),
    /// Per-flow path label bit, keeps anchors on the smaller port side apart.
    Label(FaceSlot, usize, u8),
    Aux(String),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: &FaceSlot| format!("{}_{}_{}_{}", x.i, x.j, x.k, x.f);
        match self {
            VarKey::FaceExist(x) => write!(f, "FaceExist_{}", s(x)),
            VarKey::FaceColor(x) => write!(f, "FaceColor_{}", s(x)),
            VarKey::ConFace(a, b) => write!(f, "ConFace_{}_{}_{}_{}", s(&a.face), a.e, s(&b.face), b.e),
            VarKey::Num(x, b) => write!(f, "Num_{}_{}", s(x), b),
            VarKey::Connectivity(x, c) => write!(f, "Connectivity_{}_{}", s(x), c),
            VarKey::Label(x, c, b) => write!(f, "Label_{}_{}_{}", s(x), c, b),
            VarKey::Aux(n) => write!(f, "aux_{n}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VarRegistry {
    names: Vec<VarKey>,
    ids: HashMap<VarKey, Var>,
    aux_count: usize,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Returns the id for `key`, registering it on first use.
    pub fn var(&mut self, key: VarKey) -> Var {
        if let Some(&v) = self.ids.get(&key) {
            return v;
        }
        self.names.push(key.clone());
        let v = self.names.len() as Var;
        self.ids.insert(key, v);
        v
    }

    pub fn get(&self, key: &VarKey) -> Option<Var> {
        self.ids.get(key).copied()
    }

    pub fn lit(&self, key: &VarKey) -> Lit {
        self.get(key).unwrap_or_else(|| panic!("unregistered variable {key}")) as Lit
    }

    pub fn fresh(&mut self, tag: &str) -> Var {
        self.aux_count += 1;
        let key = VarKey::Aux(format!("{}_{}", tag, self.aux_count));
        self.var(key)
    }

    pub fn name(&self, v: Var) -> &VarKey {
        &self.names[v as usize - 1]
    }

    pub fn keys(&self) -> impl Iterator<Item = (Var, &VarKey)> {
        self.names.iter().enumerate().map(|(i, k)| (i as Var + 1, k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GadgetError {
    #[error("cardinality {k} exceeds {n} literals")]
    KTooLarge { k: usize, n: usize },
    #[error("direct cardinality encoding limited to 8 literals, got {0}")]
    TooWide(usize),
}

#[derive(Debug, Clone, Default)]
pub struct CnfInstance {
    pub registry: VarRegistry,
    pub clauses: Vec<Vec<Lit>>,
    true_lit: Option<Lit>,
}

impl CnfInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.registry.len()
    }

    /// An instance over anonymous variables `1..=nvars`, e.g. from parsed DIMACS.
    pub fn from_clauses(nvars: usize, clauses: Vec<Vec<Lit>>) -> Self {
        let mut inst = Self::new();
        for _ in 0..nvars {
            inst.registry.fresh("v");
        }
        inst.clauses = clauses;
        inst
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn add(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }

    pub fn unit(&mut self, l: Lit) {
        self.clauses.push(vec![l]);
    }

    pub fn constant(&mut self, value: bool) -> Lit {
        let t = match self.true_lit {
            Some(t) => t,
            None => {
                let t = self.registry.var(VarKey::Aux("true".into())) as Lit;
                self.unit(t);
                self.true_lit = Some(t);
                t
            }
        };
        if value {
            t
        } else {
            -t
        }
    }

    pub fn at_most_one(&mut self, lits: &[Lit]) {
        for a in 0..lits.len() {
            for b in a + 1..lits.len() {
                self.add(vec![-lits[a], -lits[b]]);
            }
        }
    }

    /// Forbids every assignment of `lits` whose true count differs from `k`, each clause
    /// also carrying `guard` literals (the constraint only applies when all guards are false).
    pub fn exactly_k_guarded(&mut self, lits: &[Lit], k: usize, guard: &[Lit]) -> Result<(), GadgetError> {
        let n = lits.len();
        if k > n {
            return Err(GadgetError::KTooLarge { k, n });
        }
        if n > 8 {
            return Err(GadgetError::TooWide(n));
        }
        // at most k: every (k+1)-subset has a false member
        for sub in subsets(n, k + 1) {
            let mut c = guard.to_vec();
            c.extend(sub.iter().map(|&i| -lits[i]));
            self.add(c);
        }
        // at least k: every (n-k+1)-subset has a true member
        if k > 0 {
            for sub in subsets(n, n - k + 1) {
                let mut c = guard.to_vec();
                c.extend(sub.iter().map(|&i| lits[i]));
                self.add(c);
            }
        }
        Ok(())
    }

    pub fn exactly_k(&mut self, lits: &[Lit], k: usize) -> Result<(), GadgetError> {
        self.exactly_k_guarded(lits, k, &[])
    }

    pub fn and_gate(&mut self, lits: &[Lit]) -> Lit {
        match lits {
            [] => self.constant(true),
            [l] => *l,
            _ => {
                let g = self.registry.fresh("and") as Lit;
                for &l in lits {
                    self.add(vec![-g, l]);
                }
                let mut c: Vec<Lit> = lits.iter().map(|&l| -l).collect();
                c.push(g);
                self.add(c);
                g
            }
        }
    }

    pub fn or_gate(&mut self, lits: &[Lit]) -> Lit {
        let neg: Vec<Lit> = lits.iter().map(|&l| -l).collect();
        -self.and_gate(&neg)
    }

    pub fn xor_lit(&mut self, a: Lit, b: Lit) -> Lit {
        let g = self.registry.fresh("xor") as Lit;
        self.add(vec![-g, a, b]);
        self.add(vec![-g, -a, -b]);
        self.add(vec![g, -a, b]);
        self.add(vec![g, a, -b]);
        g
    }

    pub fn eq_over_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        assert_eq!(a.len(), b.len());
        let eqs: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| -self.xor_lit(x, y)).collect();
        self.and_gate(&eqs)
    }

    pub fn write_dimacs<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p cnf {} {}", self.num_vars(), self.num_clauses())?;
        let mut line = String::new();
        for c in &self.clauses {
            line.clear();
            for l in c {
                line.push_str(&l.to_string());
                line.push(' ');
            }
            line.push('0');
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_dimacs(&self) -> String {
        let mut v = Vec::new();
        self.write_dimacs(&mut v).expect("writing to memory");
        String::from_utf8(v).expect("ascii")
    }

    pub fn write_name_map<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (v, k) in self.registry.keys() {
            writeln!(w, "{v} {k}")?;
        }
        Ok(())
    }

    pub fn eval(&self, model: &Model) -> Option<usize> {
        self.clauses.iter().position(|c| !c.iter().any(|&l| model.lit(l)))
    }
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    go(0, n, r, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("solver reported UNSAT")]
    Unsat,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Parses DIMACS CNF text into (declared variable count, clauses).
pub fn parse_dimacs(text: &str) -> Result<(usize, Vec<Vec<Lit>>), ParseError> {
    let mut nvars = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let v: Vec<usize> = rest.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            if v.len() != 2 {
                return Err(ParseError::Malformed { line: n + 1, msg: "bad header".into() });
            }
            nvars = Some(v[0]);
            continue;
        }
        for t in line.split_whitespace() {
            let l: Lit = t.parse().map_err(|_| ParseError::Malformed { line: n + 1, msg: format!("bad literal {t:?}") })?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else {
                cur.push(l);
            }
        }
    }
    let nvars = nvars.ok_or(ParseError::Malformed { line: 0, msg: "missing header".into() })?;
    Ok((nvars, clauses))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn new(nvars: usize) -> Self {
        Model { values: vec![false; nvars + 1] }
    }

    pub fn from_fn(nvars: usize, f: impl Fn(Var) -> bool) -> Self {
        let mut m = Self::new(nvars);
        for v in 1..=nvars as Var {
            m.values[v as usize] = f(v);
        }
        m
    }

    pub fn num_vars(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, v: Var) -> bool {
        self.values.get(v as usize).copied().unwrap_or(false)
    }

    pub fn set(&mut self, v: Var, b: bool) {
        if v as usize >= self.values.len() {
            self.values.resize(v as usize + 1, false);
        }
        self.values[v as usize] = b;
    }

    pub fn lit(&self, l: Lit) -> bool {
        let b = self.value(l.unsigned_abs());
        if l > 0 {
            b
        } else {
            !b
        }
    }
}

/// Accepts `s SATISFIABLE` + `v` lines, or a bare literal list. Unmentioned variables are false.
pub fn parse_model(text: &str, nvars: usize) -> Result<Model, ParseError> {
    let mut m = Model::new(nvars);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(status) = line.strip_prefix('s') {
            let status = status.trim();
            if status.contains("UNSAT") {
                return Err(ParseError::Unsat);
            }
            if status != "SATISFIABLE" {
                return Err(ParseError::Malformed { line: n + 1, msg: format!("unknown status {status:?}") });
            }
            continue;
        }
        if line == "UNSAT" || line == "UNSATISFIABLE" {
            return Err(ParseError::Unsat);
        }
        if line == "SAT" || line == "SATISFIABLE" {
            continue;
        }
        let body = line.strip_prefix('v').unwrap_or(line);
        for t in body.split_whitespace() {
            let l: Lit = t.parse().map_err(|_| ParseError::Malformed { line: n + 1, msg: format!("bad literal {t:?}") })?;
            if l != 0 {
                m.set(l.unsigned_abs(), l > 0);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    #[test]
    fn amo_counts() {
        let mut c = CnfInstance::new();
        c.at_most_one(&[1, 2, 3, 4]);
        assert_eq!(c.num_clauses(), 6);
    }

    #[test]
    fn exactly_one_single() {
        let mut c = CnfInstance::new();
        c.exactly_k(&[1], 1).unwrap();
        assert_eq!(c.clauses, vec![vec![1]]);
        assert!(c.exactly_k(&[1], 2).is_err());
    }

    #[test]
    fn exactly_two_of_four() {
        let mut c = CnfInstance::new();
        for _ in 0..4 {
            c.registry.fresh("x");
        }
        c.exactly_k(&[1, 2, 3, 4], 2).unwrap();
        let mut sat = 0;
        for a in all_assignments(4) {
            let m = Model::from_fn(4, |v| a[v as usize - 1]);
            if c.eval(&m).is_none() {
                sat += 1;
                assert_eq!(a.iter().filter(|&&b| b).count(), 2);
            }
        }
        assert_eq!(sat, 6);
    }

    #[test]
    fn and_of_one_is_identity() {
        let mut c = CnfInstance::new();
        assert_eq!(c.and_gate(&[5]), 5);
        assert_eq!(c.num_clauses(), 0);
    }

    #[test]
    fn xor_truth_table() {
        let mut c = CnfInstance::new();
        let a = c.registry.fresh("a") as Lit;
        let b = c.registry.fresh("b") as Lit;
        let g = c.xor_lit(a, b);
        for bits in all_assignments(2) {
            for gv in [false, true] {
                let mut m = Model::new(3);
                m.set(1, bits[0]);
                m.set(2, bits[1]);
                m.set(g as Var, gv);
                assert_eq!(c.eval(&m).is_none(), gv == (bits[0] ^ bits[1]));
            }
        }
    }

    #[test]
    fn dimacs_basics() {
        assert_eq!(CnfInstance::new().to_dimacs(), "p cnf 0 0\n");
        let mut c = CnfInstance::new();
        c.registry.fresh("x");
        c.unit(1);
        assert_eq!(c.to_dimacs(), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn model_formats() {
        let m = parse_model("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 4).unwrap();
        assert!(m.value(1) && !m.value(2) && m.value(3) && !m.value(4));
        let m = parse_model("-1 2 0", 2).unwrap();
        assert!(!m.value(1) && m.value(2));
        assert_eq!(parse_model("s UNSATISFIABLE\n", 2), Err(ParseError::Unsat));
        assert!(parse_model("v x\n", 2).is_err());
    }

    #[test]
    fn name_map_lines() {
        let mut c = CnfInstance::new();
        c.registry.var(VarKey::FaceExist(FaceSlot::new(0, 1, 2, 3)));
        c.registry.fresh("and");
        let mut out = Vec::new();
        c.write_name_map(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 FaceExist_0_1_2_3\n2 aux_and_1\n");
    }
}
