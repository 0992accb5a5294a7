use std::path::PathBuf;

use proptest::prelude::*;

use lsat_core::engine::{build_instance, min_time_search, verify, EncodeOptions, SearchConfig, SolverBackend};
use lsat_core::flows::{conjugate, parse_target, render_target, CliffordCircuit, Gate, PauliString, TargetSpec};
use lsat_core::geometry::{raw_candidates, FaceSlot};

fn targets() -> Vec<(String, String)> {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "targets"].iter().collect();
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn load(name: &str) -> TargetSpec {
    let (_, text) = targets().into_iter().find(|t| t.0 == name).unwrap();
    parse_target(&text).unwrap()
}

#[test]
fn shipped_targets_round_trip() {
    for (name, text) in targets() {
        let spec = parse_target(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_target(&render_target(&spec)).unwrap(), spec, "{name}");
    }
}

#[test]
fn sat_persists_with_more_beats() {
    let t = load("cnot_1q.toml");
    let cfg = SearchConfig { from: 2, max: 6, ..SearchConfig::default() };
    let r = min_time_search(&t, &SolverBackend::embedded(), &cfg).unwrap();
    assert_eq!(r.k_star, 4);
    for k in r.k_star + 1..=6 {
        let later = SearchConfig { from: k, max: k, ..cfg.clone() };
        assert_eq!(min_time_search(&t, &SolverBackend::embedded(), &later).unwrap().k_star, k);
    }
}

#[test]
fn idle_patch_golden_bulk() {
    let t = load("idle.toml");
    let cfg = SearchConfig { from: 2, max: 2, ..SearchConfig::default() };
    let r = min_time_search(&t, &SolverBackend::embedded(), &cfg).unwrap();
    // four walls per layer over four layers, nothing horizontal
    assert_eq!(r.bulk.faces.len(), 16);
    assert!(r.bulk.faces.iter().all(|f| f.slot().is_vertical()));
    for k in 0..4 {
        let mut walls: Vec<_> = r.bulk.faces.iter().filter(|f| f.k == k).map(|f| (f.f, f.color)).collect();
        walls.sort();
        let mut first: Vec<_> = r.bulk.faces.iter().filter(|f| f.k == 0).map(|f| (f.f, f.color)).collect();
        first.sort();
        assert_eq!(walls, first);
    }
    assert!(verify(&r.bulk, &t, &EncodeOptions::default(), None).verdict);
}

#[test]
fn instance_size_grows_with_beats() {
    let t = load("move_2q.toml");
    let opts = EncodeOptions::default();
    let sizes: Vec<_> = (2..6).map(|k| build_instance(&t, k, &opts, None).unwrap().cnf.num_clauses()).collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
}

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliString { n, x: x & mask, z: z & mask })
}

fn circuit(n: usize) -> impl Strategy<Value = CliffordCircuit> {
    let gate = (0..6u8, 0..n, 0..n).prop_map(move |(g, a, b)| {
        let b = if a == b { (a + 1) % n } else { b };
        match g {
            0 => Gate::H(a),
            1 => Gate::S(a),
            2 => Gate::X(a),
            3 => Gate::Z(a),
            4 if n > 1 => Gate::Cnot(a, b),
            5 if n > 1 => Gate::Cz(a, b),
            _ => Gate::H(a),
        }
    });
    proptest::collection::vec(gate, 0..24).prop_map(move |g| CliffordCircuit::new(n, g).unwrap())
}

fn case() -> impl Strategy<Value = (CliffordCircuit, PauliString, PauliString)> {
    (1..=8usize).prop_flat_map(|n| (circuit(n), pauli(n), pauli(n)))
}

proptest! {
    #[test]
    fn conjugation_is_a_homomorphism((c, p, q) in case()) {
        let lhs = conjugate(&c, &p.mul(&q)).unwrap();
        let rhs = conjugate(&c, &p).unwrap().mul(&conjugate(&c, &q).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn conjugation_preserves_commutation((c, p, q) in case()) {
        let (cp, cq) = (conjugate(&c, &p).unwrap(), conjugate(&c, &q).unwrap());
        prop_assert_eq!(p.commutes(&q), cp.commutes(&cq));
    }

    #[test]
    fn conjugation_keeps_identity_and_is_injective((c, p, q) in case()) {
        prop_assert!(conjugate(&c, &PauliString::identity(c.n)).unwrap().is_identity());
        if p != q {
            prop_assert_ne!(conjugate(&c, &p).unwrap(), conjugate(&c, &q).unwrap());
        }
    }

    #[test]
    fn candidates_are_symmetric(i in -3i32..3, j in -3i32..3, k in -3i32..3, f in 0u8..6, e in 0u8..4) {
        let edge = FaceSlot::new(i, j, k, f).edge(e);
        for c in raw_candidates(edge) {
            let back = raw_candidates(c.to);
            prop_assert!(back.iter().any(|b| b.to == edge && b.kind == c.kind), "{:?}", c);
            prop_assert_eq!(c.canonical(), back.iter().find(|b| b.to == edge).unwrap().canonical());
        }
    }
}
