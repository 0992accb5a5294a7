//! Static renderings of a bulk: one SVG per layer and a Wavefront OBJ mesh.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::engine::Bulk;
use crate::flows::Color;
use crate::geometry::{face_index, FaceSlot, AXIS_I, AXIS_J};

const TILE: i32 = 60;
const GAP: i32 = 14;
const MARGIN: i32 = 20;

pub fn color_hex(c: Color) -> &'static str {
    match c {
        Color::Z => "#d62728",
        Color::X => "#1f5fd6",
    }
}

fn origin(i: i32, j: i32, height: usize) -> (i32, i32) {
    let x = MARGIN + i * (TILE + GAP);
    let y = MARGIN + (height as i32 - 1 - j) * (TILE + GAP);
    (x, y)
}

/// Per-layer SVG documents, layers `0..=beats+1` in order; names are `slice_<k>.svg`.
pub fn render_slices(bulk: &Bulk) -> Vec<(String, String)> {
    let mut by_layer: BTreeMap<i32, BTreeMap<FaceSlot, Color>> = BTreeMap::new();
    for f in &bulk.faces {
        by_layer.entry(f.k).or_default().insert(f.slot(), f.color);
    }
    let empty = BTreeMap::new();
    (0..bulk.beats as i32 + 2)
        .map(|k| (format!("slice_{k}.svg"), render_layer(bulk, k, by_layer.get(&k).unwrap_or(&empty))))
        .collect()
}

fn render_layer(bulk: &Bulk, k: i32, faces: &BTreeMap<FaceSlot, Color>) -> String {
    let w = 2 * MARGIN + bulk.width as i32 * (TILE + GAP) - GAP;
    let h = 2 * MARGIN + bulk.height as i32 * (TILE + GAP) - GAP + 20;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" font-family="monospace" font-size="12">k={k}</text>"#, h - 6);
    let occupied = |i: i32, j: i32| faces.keys().any(|f| f.i == i && f.j == j);
    for i in 0..bulk.width as i32 {
        for j in 0..bulk.height as i32 {
            let (x, y) = origin(i, j, bulk.height);
            let fill = if occupied(i, j) { "#e8e8e8" } else { "none" };
            let _ = writeln!(s, r##"<rect x="{x}" y="{y}" width="{TILE}" height="{TILE}" fill="{fill}" stroke="#cccccc" stroke-dasharray="3,3"/>"##);
            // merged gaps towards the +I and +J neighbours
            if i + 1 < bulk.width as i32 && occupied(i, j) && occupied(i + 1, j) && !has(faces, i, j, AXIS_I, 1) && !has(faces, i + 1, j, AXIS_I, -1) {
                let _ = writeln!(s, r##"<rect x="{}" y="{y}" width="{GAP}" height="{TILE}" fill="#b0b0b0"/>"##, x + TILE);
            }
            if j + 1 < bulk.height as i32 && occupied(i, j) && occupied(i, j + 1) && !has(faces, i, j, AXIS_J, 1) && !has(faces, i, j + 1, AXIS_J, -1) {
                let _ = writeln!(s, r##"<rect x="{x}" y="{}" width="{TILE}" height="{GAP}" fill="#b0b0b0"/>"##, y - GAP);
            }
            for (f, c) in faces.iter().filter(|(f, _)| f.i == i && f.j == j) {
                let (x1, y1, x2, y2) = match (f.axis(), f.sign()) {
                    (AXIS_I, -1) => (x, y, x, y + TILE),
                    (AXIS_I, _) => (x + TILE, y, x + TILE, y + TILE),
                    (AXIS_J, -1) => (x, y + TILE, x + TILE, y + TILE),
                    (AXIS_J, _) => (x, y, x + TILE, y),
                    _ => {
                        // initialisation / measurement marker
                        let (label, dy) = if f.sign() < 0 { ("init", 20) } else { ("meas", 44) };
                        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="{}">{label} {c}</text>"#, x + 8, y + dy, color_hex(*c));
                        continue;
                    }
                };
                let _ = writeln!(s, r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{}" stroke-width="5"/>"#, color_hex(*c));
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

fn has(faces: &BTreeMap<FaceSlot, Color>, i: i32, j: i32, axis: usize, sign: i32) -> bool {
    faces.keys().any(|f| f.i == i && f.j == j && f.f == face_index(axis, sign))
}

/// OBJ text with one quad per face, X faces first then Z, each group in bulk order. Cubes are
/// shrunk slightly so the gaps stay visible.
pub fn export_mesh(bulk: &Bulk) -> String {
    let mut s = String::from("# bulk mesh\n");
    let mut n = 0usize;
    for color in [Color::X, Color::Z] {
        let _ = writeln!(s, "g {}_boundary", if color == Color::X { "x" } else { "z" });
        let _ = writeln!(s, "usemtl {}", if color == Color::X { "blue" } else { "red" });
        for f in bulk.faces.iter().filter(|f| f.color == color) {
            let slot = f.slot();
            let cube = [slot.i, slot.j, slot.k];
            for v in slot.vertices() {
                let p: Vec<f64> = (0..3).map(|a| cube[a] as f64 + 0.05 + 0.45 * f64::from(v[a] - 2 * cube[a])).collect();
                let _ = writeln!(s, "v {:.3} {:.3} {:.3}", p[0], p[1], p[2]);
            }
            let _ = writeln!(s, "f {} {} {} {}", n + 1, n + 2, n + 3, n + 4);
            n += 4;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::BulkFace;

    fn idle(beats: usize) -> Bulk {
        let mut faces = Vec::new();
        for k in 0..beats as i32 + 2 {
            for (f, color) in [(0, Color::Z), (1, Color::Z), (2, Color::X), (3, Color::X)] {
                faces.push(BulkFace { i: 0, j: 0, k, f, color, num: 0 });
            }
        }
        Bulk { width: 1, height: 1, beats, faces, connections: vec![], flows: vec![] }
    }

    #[test]
    fn idle_slices_are_identical_up_to_label() {
        let docs = render_slices(&idle(3));
        assert_eq!(docs.len(), 5);
        let strip = |d: &str| d.lines().filter(|l| !l.contains("k=")).collect::<Vec<_>>().join("\n");
        for d in &docs[1..] {
            assert_eq!(strip(&d.1), strip(&docs[0].1));
        }
        assert_eq!(docs[2].0, "slice_2.svg");
        assert!(docs[0].1.contains(color_hex(Color::Z)) && docs[0].1.contains(color_hex(Color::X)));
    }

    #[test]
    fn empty_bulk_renders() {
        let b = Bulk { width: 2, height: 1, beats: 1, faces: vec![], connections: vec![], flows: vec![] };
        let docs = render_slices(&b);
        assert_eq!(docs.len(), 3);
        assert!(docs.iter().all(|d| d.1.starts_with("<svg") && !d.1.contains("<line")));
        assert_eq!(export_mesh(&b).lines().filter(|l| l.starts_with("f ")).count(), 0);
    }

    #[test]
    fn mesh_has_one_quad_per_face_and_is_deterministic() {
        let b = idle(2);
        let m = export_mesh(&b);
        assert_eq!(m.lines().filter(|l| l.starts_with("f ")).count(), b.faces.len());
        assert_eq!(m.lines().filter(|l| l.starts_with("v ")).count(), 4 * b.faces.len());
        assert_eq!(m, export_mesh(&b));
        let x = m.find("g x_boundary").unwrap();
        let z = m.find("g z_boundary").unwrap();
        assert!(x < z);
    }
}
