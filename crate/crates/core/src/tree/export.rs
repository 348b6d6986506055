use std::fmt::Write as _;

use super::factor::FactorTree;
use super::nesting::{FusedNesting, RegionKind};
use crate::word::{arc_name, Letter};

/// One line per edge: `letter parent child length`.
pub fn edge_list(tree: &FactorTree, letters: &[Vec<Letter>]) -> String {
    let mut out = String::from("# letter parent child length\n");
    for (e, edge) in tree.edges.iter().enumerate() {
        let name = match letters.get(e) {
            Some(ls) if !ls.is_empty() => ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("+"),
            _ => arc_name(e as u32),
        };
        let _ = writeln!(out, "{name} {} {} {:.9}", edge.parent, edge.child, edge.length);
    }
    out
}

const UNIT: f64 = 60.0;
const MARGIN: f64 = 20.0;

fn region_colour(kind: RegionKind) -> &'static str {
    match kind {
        RegionKind::Root => "#444444",
        RegionKind::Tip => "#2a9d8f",
        RegionKind::Corner => "#e9c46a",
        RegionKind::Branch => "#e76f51",
    }
}

/// Semi-annulus picture of the word above its axis, with the dual tree
/// drawn underneath.
pub fn svg(fused: &FusedNesting, tree: &FactorTree) -> String {
    let n = fused.nesting.word_len().max(1);
    let width = n as f64 * UNIT + 2.0 * MARGIN;
    let arch = n as f64 * UNIT / 2.0;
    let depth_max = tree
        .vertices
        .iter()
        .map(|v| v.coords.values().sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let tree_h = 200.0;
    let axis_y = MARGIN + arch;
    let height = axis_y + tree_h + 3.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let x_of = |pos: usize, frac: f64| MARGIN + (pos as f64 + frac) * UNIT;

    for (c, chain) in fused.chains.iter().enumerate() {
        let hue = (c * 67) % 360;
        for &a in chain {
            let an = &fused.nesting.annuli[a];
            let (ol, or) = (x_of(an.left, 0.1), x_of(an.right, 0.9));
            let (il, ir) = (x_of(an.left, 0.9), x_of(an.right, 0.1));
            let (ro, ri) = ((or - ol) / 2.0, (ir - il) / 2.0);
            let _ = writeln!(
                s,
                r#"<path d="M {ol:.2} {axis_y:.2} A {ro:.2} {ro:.2} 0 0 1 {or:.2} {axis_y:.2} L {ir:.2} {axis_y:.2} A {ri:.2} {ri:.2} 0 0 0 {il:.2} {axis_y:.2} Z" fill="hsl({hue},60%,75%)" fill-opacity="0.6" stroke="hsl({hue},60%,35%)"/>"#
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="#000000"/>"##,
        width - MARGIN
    );

    // Dual tree: vertices placed under the mean of their gaps, depth downward.
    let top = axis_y + 2.0 * MARGIN;
    let pos: Vec<(f64, f64)> = tree
        .vertices
        .iter()
        .map(|v| {
            let gx = v.gaps.iter().map(|&g| MARGIN + g as f64 * UNIT).sum::<f64>() / v.gaps.len().max(1) as f64;
            let d = v.coords.values().sum::<f64>() / depth_max;
            (gx, top + d * tree_h)
        })
        .collect();
    for e in &tree.edges {
        let (a, b) = (pos[e.parent], pos[e.child]);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="2"/>"##,
            a.0, a.1, b.0, b.1
        );
    }
    for (v, p) in tree.vertices.iter().zip(&pos) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/>"#,
            p.0,
            p.1,
            region_colour(v.kind)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::factor::build_tree;
    use crate::tree::nesting::{build_nesting, fuse_corners};

    #[test]
    fn edge_list_and_svg_are_well_formed() {
        let n = build_nesting(&"a b b' c c' a'".parse().unwrap()).unwrap();
        let f = fuse_corners(&n, |_| false);
        let t = build_tree(&f, &[1.0, 0.5, 0.25]).unwrap();
        let list = edge_list(&t, &[]);
        assert_eq!(list.lines().count(), 4);
        assert!(list.contains("a 0 1 1.000000000"));
        let doc = svg(&f, &t);
        assert!(doc.starts_with("<svg"));
        assert_eq!(doc.matches("<path").count(), 3);
        assert_eq!(doc.matches("<circle").count(), 4);
    }
}
