//! Clifford conjugation, stabilizer flows, patch specs and the target document.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{face_index, FaceSlot, AXIS_I, AXIS_J};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("qubit index {q} out of range for {n} qubits")]
    QubitRange { q: usize, n: usize },
    #[error("pauli has {got} qubits, circuit has {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("flow touches qubit {0} which has no declared patch")]
    NoPatch(usize),
    #[error("{path}: {msg}")]
    Document { path: String, msg: String },
}

fn doc_err(path: impl Into<String>, msg: impl Into<String>) -> FlowError {
    FlowError::Document { path: path.into(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    X,
    Z,
}

impl Color {
    pub fn other(self) -> Color {
        match self {
            Color::X => Color::Z,
            Color::Z => Color::X,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::X => "X",
            Color::Z => "Z",
        })
    }
}

/// Sign-free Pauli string over at most 64 qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub n: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: 0, z: 0 }
    }

    pub fn single(n: usize, q: usize, c: Color) -> Self {
        let mut p = Self::identity(n);
        match c {
            Color::X => p.x = 1 << q,
            Color::Z => p.z = 1 << q,
        }
        p
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn mul(&self, o: &PauliString) -> PauliString {
        PauliString { n: self.n, x: self.x ^ o.x, z: self.z ^ o.z }
    }

    pub fn commutes(&self, o: &PauliString) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 0
    }

    pub fn has(&self, q: usize, c: Color) -> bool {
        let m = match c {
            Color::X => self.x,
            Color::Z => self.z,
        };
        m >> q & 1 == 1
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| (self.x | self.z) >> q & 1 == 1).collect()
    }

    /// Parses `X1`, `Z1Z2`, `Y3`, `I`; qubits are 1-based in text.
    pub fn parse(s: &str, n: usize) -> Result<Self, String> {
        let mut p = Self::identity(n);
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(p);
        }
        let b = s.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            i += 1;
            let st = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let q: usize = s[st..i].parse().map_err(|_| format!("missing qubit index in {s:?}"))?;
            if q == 0 || q > n {
                return Err(format!("qubit {q} out of range 1..={n}"));
            }
            let bit = 1u64 << (q - 1);
            match c {
                'X' => p.x ^= bit,
                'Z' => p.z ^= bit,
                'Y' => {
                    p.x ^= bit;
                    p.z ^= bit
                }
                _ => return Err(format!("unknown pauli letter {c:?}")),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        for q in 0..self.n {
            let l = match (self.x >> q & 1, self.z >> q & 1) {
                (1, 0) => "X",
                (0, 1) => "Z",
                (1, 1) => "Y",
                _ => continue,
            };
            write!(f, "{}{}", l, q + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    X(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::X(q) | Gate::Z(q) => vec![q],
            Gate::Cnot(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    /// `H 1`, `CNOT 1 2`; 1-based.
    pub fn parse(line: &str) -> Result<Gate, String> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let qs: Vec<usize> = toks
            .iter()
            .skip(1)
            .map(|t| t.parse::<usize>().map_err(|_| format!("bad qubit {t:?}")))
            .collect::<Result<_, _>>()?;
        if qs.contains(&0) {
            return Err("qubits are numbered from 1".into());
        }
        let name = toks.first().ok_or("empty gate line")?.to_ascii_uppercase();
        let arity = if matches!(name.as_str(), "CNOT" | "CX" | "CZ") { 2 } else { 1 };
        if qs.len() != arity {
            return Err(format!("{name} takes {arity} qubit(s)"));
        }
        let q = |i: usize| qs[i] - 1;
        Ok(match name.as_str() {
            "H" => Gate::H(q(0)),
            "S" => Gate::S(q(0)),
            "X" => Gate::X(q(0)),
            "Z" => Gate::Z(q(0)),
            "CNOT" | "CX" => Gate::Cnot(q(0), q(1)),
            "CZ" => Gate::Cz(q(0), q(1)),
            _ => return Err(format!("unsupported gate {name}")),
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {}", q + 1),
            Gate::S(q) => write!(f, "S {}", q + 1),
            Gate::X(q) => write!(f, "X {}", q + 1),
            Gate::Z(q) => write!(f, "Z {}", q + 1),
            Gate::Cnot(a, b) => write!(f, "CNOT {} {}", a + 1, b + 1),
            Gate::Cz(a, b) => write!(f, "CZ {} {}", a + 1, b + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordCircuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl CliffordCircuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self, FlowError> {
        for g in &gates {
            for q in g.qubits() {
                if q >= n {
                    return Err(FlowError::QubitRange { q, n });
                }
            }
        }
        Ok(CliffordCircuit { n, gates })
    }
}

pub fn conjugate(circuit: &CliffordCircuit, p: &PauliString) -> Result<PauliString, FlowError> {
    if p.n != circuit.n {
        return Err(FlowError::WidthMismatch { got: p.n, want: circuit.n });
    }
    let mut r = *p;
    let bit = |m: u64, q: usize| m >> q & 1;
    for g in &circuit.gates {
        match *g {
            Gate::H(q) => {
                let (x, z) = (bit(r.x, q), bit(r.z, q));
                r.x = (r.x & !(1 << q)) | z << q;
                r.z = (r.z & !(1 << q)) | x << q;
            }
            Gate::S(q) => r.z ^= bit(r.x, q) << q,
            Gate::X(_) | Gate::Z(_) => {}
            Gate::Cnot(c, t) => {
                r.x ^= bit(r.x, c) << t;
                r.z ^= bit(r.z, t) << c;
            }
            Gate::Cz(a, b) => {
                r.z ^= bit(r.x, b) << a;
                r.z ^= bit(r.x, a) << b;
            }
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerFlow {
    pub c: usize,
    pub input: PauliString,
    pub output: PauliString,
}

impl fmt::Display for StabilizerFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.input, self.output)
    }
}

/// One flow per generator, ordered `X1, Z1, X2, Z2, ...`.
pub fn derive_flows(circuit: &CliffordCircuit) -> Vec<StabilizerFlow> {
    let mut out = Vec::new();
    for q in 0..circuit.n {
        for c in [Color::X, Color::Z] {
            let input = PauliString::single(circuit.n, q, c);
            let output = conjugate(circuit, &input).expect("width matches");
            out.push(StabilizerFlow { c: out.len(), input, output });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "I-")]
    IMinus,
    #[serde(rename = "I+")]
    IPlus,
    #[serde(rename = "J-")]
    JMinus,
    #[serde(rename = "J+")]
    JPlus,
}

impl Side {
    pub fn face(self) -> u8 {
        match self {
            Side::IMinus => face_index(AXIS_I, -1),
            Side::IPlus => face_index(AXIS_I, 1),
            Side::JMinus => face_index(AXIS_J, -1),
            Side::JPlus => face_index(AXIS_J, 1),
        }
    }

    pub fn offset(self) -> (i32, i32) {
        match self {
            Side::IMinus => (-1, 0),
            Side::IPlus => (1, 0),
            Side::JMinus => (0, -1),
            Side::JPlus => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Boundary {
    pub tile: (i32, i32),
    pub side: Side,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchSpec {
    pub id: String,
    pub tiles: Vec<(i32, i32)>,
    /// Perimeter faces in counterclockwise order.
    pub boundaries: Vec<Boundary>,
    pub qubits: usize,
}

/// Maximal run of same-colored consecutive perimeter faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub color: Color,
    pub members: Vec<usize>,
}

impl PatchSpec {
    /// Single-tile patch; `x_on_i` puts the X boundaries on the I-facing sides.
    pub fn single(id: &str, tile: (i32, i32), x_on_i: bool) -> Self {
        let (ci, cj) = if x_on_i { (Color::X, Color::Z) } else { (Color::Z, Color::X) };
        let boundaries = [(Side::JMinus, cj), (Side::IPlus, ci), (Side::JPlus, cj), (Side::IMinus, ci)]
            .into_iter()
            .map(|(side, color)| Boundary { tile, side, color })
            .collect();
        PatchSpec { id: id.into(), tiles: vec![tile], boundaries, qubits: 1 }
    }

    /// Two-qubit patch over `(i,j)` and `(i+1,j)`.
    pub fn two_qubit_row(id: &str, i: i32, j: i32) -> Self {
        let a = (i, j);
        let b = (i + 1, j);
        let order = [(a, Side::JMinus), (b, Side::JMinus), (b, Side::IPlus), (b, Side::JPlus), (a, Side::JPlus), (a, Side::IMinus)];
        Self::alternating(id, &order, 2)
    }

    /// Two-qubit patch over `(i,j)` and `(i,j+1)`: the row patch turned a quarter counterclockwise.
    pub fn two_qubit_column(id: &str, i: i32, j: i32) -> Self {
        let a = (i, j);
        let b = (i, j + 1);
        let order = [(a, Side::IPlus), (b, Side::IPlus), (b, Side::JPlus), (b, Side::IMinus), (a, Side::IMinus), (a, Side::JMinus)];
        Self::alternating(id, &order, 2)
    }

    fn alternating(id: &str, order: &[((i32, i32), Side)], qubits: usize) -> Self {
        let mut tiles: Vec<_> = order.iter().map(|x| x.0).collect();
        tiles.sort();
        tiles.dedup();
        let boundaries = order
            .iter()
            .enumerate()
            .map(|(n, &(tile, side))| Boundary { tile, side, color: if n % 2 == 0 { Color::X } else { Color::Z } })
            .collect();
        PatchSpec { id: id.into(), tiles, boundaries, qubits }
    }

    pub fn segments(&self) -> Vec<Segment> {
        let n = self.boundaries.len();
        if n == 0 {
            return Vec::new();
        }
        // start at a color change so a run never wraps around
        let start = (0..n).find(|&i| self.boundaries[i].color != self.boundaries[(i + n - 1) % n].color).unwrap_or(0);
        let mut segs: Vec<Segment> = Vec::new();
        for off in 0..n {
            let i = (start + off) % n;
            let c = self.boundaries[i].color;
            match segs.last_mut() {
                Some(s) if s.color == c => s.members.push(i),
                _ => segs.push(Segment { color: c, members: vec![i] }),
            }
        }
        segs.sort_by_key(|s| s.members[0]);
        segs
    }

    /// Segment indices (into `segments()`) a logical operator rides, for local qubit `q`.
    pub fn operator_segments(&self, q: usize, c: Color) -> Vec<usize> {
        let segs = self.segments();
        let of: Vec<usize> = (0..segs.len()).filter(|&s| segs[s].color == c).collect();
        let k = of.len();
        match c {
            Color::X => vec![of[q], of[q + 1]],
            Color::Z => vec![of[q], of[k - 1]],
        }
    }

    fn validate(&self, path: &str, w: usize, h: usize) -> Result<(), FlowError> {
        if self.tiles.is_empty() {
            return Err(doc_err(format!("{path}.tiles"), "patch has no tiles"));
        }
        for (n, t) in self.tiles.iter().enumerate() {
            if t.0 < 0 || t.1 < 0 || t.0 as usize >= w || t.1 as usize >= h {
                return Err(doc_err(format!("{path}.tiles[{n}]"), format!("tile {t:?} outside the {w}x{h} footprint")));
            }
        }
        let mut perimeter: Vec<((i32, i32), Side)> = Vec::new();
        for &t in &self.tiles {
            for s in [Side::IMinus, Side::IPlus, Side::JMinus, Side::JPlus] {
                let (di, dj) = s.offset();
                if !self.tiles.contains(&(t.0 + di, t.1 + dj)) {
                    perimeter.push((t, s));
                }
            }
        }
        let mut declared: Vec<_> = self.boundaries.iter().map(|b| (b.tile, b.side)).collect();
        for (n, b) in self.boundaries.iter().enumerate() {
            if !perimeter.contains(&(b.tile, b.side)) {
                return Err(doc_err(format!("{path}.boundaries[{n}]"), "not a perimeter side of the patch"));
            }
        }
        perimeter.sort();
        declared.sort();
        let before = declared.len();
        declared.dedup();
        if declared.len() != before || declared != perimeter {
            return Err(doc_err(format!("{path}.boundaries"), "every perimeter side must be listed exactly once"));
        }
        let segs = self.segments();
        if segs.len() < 4 || segs.len() % 2 != 0 {
            return Err(doc_err(format!("{path}.boundaries"), "boundary colors must alternate in at least two X/Z pairs"));
        }
        if segs.len() / 2 - 1 != self.qubits {
            return Err(doc_err(
                format!("{path}.qubits"),
                format!("{} boundary pairs encode {} qubits, not {}", segs.len() / 2, segs.len() / 2 - 1, self.qubits),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortMode {
    /// Patches sit on virtual layers just outside the beat range.
    Boundary,
    /// Patches additionally occupy the first and last beat of the domain.
    Layer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Circuit(CliffordCircuit),
    Flows(Vec<(PauliString, PauliString)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    pub width: usize,
    pub height: usize,
    pub beats: Option<usize>,
    pub search_from: Option<usize>,
    pub port_mode: PortMode,
    pub m: u32,
    pub num_bits: Option<usize>,
    pub patches_in: Vec<PatchSpec>,
    pub patches_out: Vec<PatchSpec>,
    pub action: Action,
}

impl TargetSpec {
    pub fn n_in(&self) -> usize {
        self.patches_in.iter().map(|p| p.qubits).sum()
    }

    pub fn n_out(&self) -> usize {
        self.patches_out.iter().map(|p| p.qubits).sum()
    }

    pub fn flows(&self) -> Vec<StabilizerFlow> {
        match &self.action {
            Action::Circuit(c) => derive_flows(c),
            Action::Flows(v) => v.iter().enumerate().map(|(c, (i, o))| StabilizerFlow { c, input: *i, output: *o }).collect(),
        }
    }

    /// Maps global qubit `q` to (patch index, local qubit).
    pub fn locate(patches: &[PatchSpec], q: usize) -> Option<(usize, usize)> {
        let mut base = 0;
        for (n, p) in patches.iter().enumerate() {
            if q < base + p.qubits {
                return Some((n, q - base));
            }
            base += p.qubits;
        }
        None
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if self.width == 0 || self.height == 0 {
            return Err(doc_err("domain", "width and height must be positive"));
        }
        if self.beats == Some(0) {
            return Err(doc_err("domain.beats", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(doc_err("m", "must be at least 1"));
        }
        for (name, list) in [("patches_in", &self.patches_in), ("patches_out", &self.patches_out)] {
            let mut used = BTreeMap::new();
            for (n, p) in list.iter().enumerate() {
                p.validate(&format!("{name}[{n}]"), self.width, self.height)?;
                for t in &p.tiles {
                    if let Some(o) = used.insert(*t, n) {
                        return Err(doc_err(format!("{name}[{n}].tiles"), format!("tile {t:?} overlaps {name}[{o}]")));
                    }
                }
            }
        }
        let (nin, nout) = (self.n_in(), self.n_out());
        match &self.action {
            Action::Circuit(c) => {
                if c.n != nin || c.n != nout {
                    return Err(doc_err("action.circuit", format!("circuit acts on {} qubits, patches hold {nin} in / {nout} out", c.n)));
                }
            }
            Action::Flows(v) => {
                for (n, (i, o)) in v.iter().enumerate() {
                    if i.n != nin || o.n != nout {
                        return Err(doc_err(format!("action.flows[{n}]"), "pauli width does not match patch qubit counts"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A port face that terminates a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Anchor {
    pub output: bool,
    pub patch: usize,
    pub segment: usize,
    pub color: Color,
    /// Tile side of the segment's first face; the engine places it at the port layer.
    pub tile: (i32, i32),
    pub f: u8,
}

impl Anchor {
    pub fn face(&self, k: i32) -> FaceSlot {
        FaceSlot { i: self.tile.0, j: self.tile.1, k, f: self.f }
    }
}

fn side_anchors(patches: &[PatchSpec], p: &PauliString, output: bool) -> Result<Vec<Anchor>, FlowError> {
    let mut parity: BTreeMap<(usize, usize), Color> = BTreeMap::new();
    let mut toggle = |key: (usize, usize), c: Color| {
        if parity.remove(&key).is_none() {
            parity.insert(key, c);
        }
    };
    for q in p.support() {
        let (pi, lq) = TargetSpec::locate(patches, q).ok_or(FlowError::NoPatch(q))?;
        for c in [Color::X, Color::Z] {
            if p.has(q, c) {
                for s in patches[pi].operator_segments(lq, c) {
                    toggle((pi, s), c);
                }
            }
        }
    }
    Ok(parity
        .into_iter()
        .map(|((pi, s), color)| {
            let segs = patches[pi].segments();
            let b = patches[pi].boundaries[segs[s].members[0]];
            Anchor { output, patch: pi, segment: s, color, tile: b.tile, f: b.side.face() }
        })
        .collect())
}

/// Input-side then output-side anchors of a flow; segments hit twice cancel.
pub fn anchors_for(flow: &StabilizerFlow, spec: &TargetSpec) -> Result<Vec<Anchor>, FlowError> {
    let mut a = side_anchors(&spec.patches_in, &flow.input, false)?;
    a.extend(side_anchors(&spec.patches_out, &flow.output, true)?);
    Ok(a)
}

// ---- document form ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainDoc {
    width: usize,
    height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beats: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    search_from: Option<usize>,
    #[serde(default = "default_mode")]
    port_mode: PortMode,
}

fn default_mode() -> PortMode {
    PortMode::Boundary
}

fn default_m() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchDoc {
    id: String,
    qubits: usize,
    tiles: Vec<(i32, i32)>,
    boundaries: Vec<Boundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDoc {
    #[serde(rename = "in")]
    input: String,
    out: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    circuit: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flows: Option<Vec<FlowDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    #[serde(default = "default_m")]
    m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_bits: Option<usize>,
    domain: DomainDoc,
    action: ActionDoc,
    patches_in: Vec<PatchDoc>,
    patches_out: Vec<PatchDoc>,
}

pub fn parse_target(text: &str) -> Result<TargetSpec, FlowError> {
    let doc: TargetDoc = toml::from_str(text).map_err(|e| {
        let path = e.span().map(|s| format!("byte {}", s.start)).unwrap_or_else(|| "document".into());
        doc_err(path, e.message().to_string())
    })?;
    let patch = |p: PatchDoc| PatchSpec { id: p.id, tiles: p.tiles, boundaries: p.boundaries, qubits: p.qubits };
    let patches_in: Vec<_> = doc.patches_in.into_iter().map(patch).collect();
    let patches_out: Vec<_> = doc.patches_out.into_iter().map(patch).collect();
    let nin: usize = patches_in.iter().map(|p| p.qubits).sum();
    let nout: usize = patches_out.iter().map(|p| p.qubits).sum();
    let action = match (doc.action.circuit, doc.action.flows) {
        (Some(lines), None) => {
            let mut gates = Vec::new();
            for (n, l) in lines.iter().enumerate() {
                gates.push(Gate::parse(l).map_err(|m| doc_err(format!("action.circuit[{n}]"), m))?);
            }
            Action::Circuit(CliffordCircuit::new(nin, gates).map_err(|e| doc_err("action.circuit", e.to_string()))?)
        }
        (None, Some(flows)) => {
            let mut v = Vec::new();
            for (n, f) in flows.iter().enumerate() {
                let i = PauliString::parse(&f.input, nin).map_err(|m| doc_err(format!("action.flows[{n}].in"), m))?;
                let o = PauliString::parse(&f.out, nout).map_err(|m| doc_err(format!("action.flows[{n}].out"), m))?;
                v.push((i, o));
            }
            Action::Flows(v)
        }
        _ => return Err(doc_err("action", "exactly one of `circuit` or `flows` is required")),
    };
    let spec = TargetSpec {
        width: doc.domain.width,
        height: doc.domain.height,
        beats: doc.domain.beats,
        search_from: doc.domain.search_from,
        port_mode: doc.domain.port_mode,
        m: doc.m,
        num_bits: doc.num_bits,
        patches_in,
        patches_out,
        action,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn render_target(spec: &TargetSpec) -> String {
    let patch = |p: &PatchSpec| PatchDoc { id: p.id.clone(), qubits: p.qubits, tiles: p.tiles.clone(), boundaries: p.boundaries.clone() };
    let action = match &spec.action {
        Action::Circuit(c) => ActionDoc { circuit: Some(c.gates.iter().map(|g| g.to_string()).collect()), flows: None },
        Action::Flows(v) => ActionDoc {
            circuit: None,
            flows: Some(v.iter().map(|(i, o)| FlowDoc { input: i.to_string(), out: o.to_string() }).collect()),
        },
    };
    let doc = TargetDoc {
        m: spec.m,
        num_bits: spec.num_bits,
        domain: DomainDoc {
            width: spec.width,
            height: spec.height,
            beats: spec.beats,
            search_from: spec.search_from,
            port_mode: spec.port_mode,
        },
        action,
        patches_in: spec.patches_in.iter().map(patch).collect(),
        patches_out: spec.patches_out.iter().map(patch).collect(),
    };
    toml::to_string(&doc).expect("target document serializes")
}
