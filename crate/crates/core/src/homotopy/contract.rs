use crate::curve::{uniform_grid, SampledCurve};
use crate::reparam::{bump_unchecked, padded_lengths};
use crate::tree::{FactorTree, Factorization, TreePoint};
use crate::{Error, Result};

use super::grid::{halt, unhalt, HomotopyGrid};

/// Edge lengths padded to twice their sum.
pub fn default_padding(tree: &FactorTree) -> Result<Vec<f64>> {
    let lengths: Vec<f64> = tree.edges.iter().map(|e| e.length).collect();
    if lengths.is_empty() {
        return Ok(Vec::new());
    }
    padded_lengths(&lengths, 2.0 * lengths.iter().sum::<f64>())
}

/// The retraction `χ` of a tree onto its root, driven by padded lengths.
///
/// A point at padded depth `|x|′` waits until `r = L′ − |x|′`, then runs down
/// its root path so that at `q = L′ − r` it sits at true depth `ρₓ(q)`,
/// where `ρₓ` sends each `|y|′` to `|y|` with zero slope. Points inside an
/// edge ride along proportionally with the edge's lower vertex.
#[derive(Debug, Clone)]
pub struct Contraction<'a> {
    tree: &'a FactorTree,
    padded: Vec<f64>,
    /// `|v|′` per vertex.
    padded_depth: Vec<f64>,
    total: f64,
}

impl<'a> Contraction<'a> {
    /// `total` is `L′`; it must be at least the largest padded depth.
    pub fn new(tree: &'a FactorTree, padded: &[f64], total: f64) -> Result<Self> {
        if padded.len() != tree.edges.len() {
            return Err(Error::TreeMismatch(format!(
                "{} padded lengths for {} edges",
                padded.len(),
                tree.edges.len()
            )));
        }
        for (e, (&lp, edge)) in padded.iter().zip(&tree.edges).enumerate() {
            if !(lp >= edge.length && lp > 0.0) {
                return Err(Error::Inconsistent(format!(
                    "padded length {lp} of edge {e} is below its length {}",
                    edge.length
                )));
            }
        }
        let mut padded_depth = vec![0.0; tree.vertices.len()];
        // Edges are created parent-first, so one pass in edge order suffices.
        let mut order: Vec<usize> = (0..tree.edges.len()).collect();
        order.sort_by_key(|&e| tree.ancestors(tree.edges[e].child).len());
        for e in order {
            let edge = &tree.edges[e];
            padded_depth[edge.child] = padded_depth[edge.parent] + padded[e];
        }
        let deepest = padded_depth.iter().cloned().fold(0.0, f64::max);
        if total < deepest - 1e-12 * deepest.max(1.0) {
            return Err(Error::Inconsistent(format!("L′ = {total} is below the padded depth {deepest}")));
        }
        Ok(Self {
            tree,
            padded: padded.to_vec(),
            padded_depth,
            total,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn padded_depth(&self, v: usize) -> f64 {
        self.padded_depth[v]
    }

    /// Times `r = L′ − |v|′` at which some vertex starts to move, with `0`
    /// and `L′`, sorted and deduplicated.
    pub fn start_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .padded_depth
            .iter()
            .map(|d| (self.total - d).max(0.0))
            .chain([0.0, self.total])
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.total);
        times
    }

    /// Where vertex `v` sits once only `q` of padded depth remains.
    fn vertex_at(&self, mut v: usize, q: f64) -> TreePoint {
        loop {
            if q >= self.padded_depth[v] {
                return TreePoint::Vertex(v);
            }
            let e = self.tree.vertices[v]
                .parent_edge
                .expect("only the root has no parent and its padded depth is zero");
            let parent = self.tree.edges[e].parent;
            let base = self.padded_depth[parent];
            if q >= base {
                let len = self.tree.edges[e].length;
                return self.tree.edge_point(e, len * bump_unchecked((q - base) / self.padded[e]));
            }
            v = parent;
        }
    }

    /// `χ(x, r)` written in terms of `q = L′ − r`.
    pub fn chi(&self, x: TreePoint, q: f64) -> TreePoint {
        match x {
            TreePoint::Vertex(v) => self.vertex_at(v, q),
            TreePoint::Edge { edge, offset } => {
                let e = &self.tree.edges[edge];
                if q >= self.padded_depth[e.child] {
                    x
                } else if q >= self.padded_depth[e.parent] {
                    let w = bump_unchecked((q - self.padded_depth[e.parent]) / self.padded[edge]);
                    self.tree.edge_point(edge, offset * w)
                } else {
                    self.vertex_at(e.parent, q)
                }
            }
        }
    }

    /// `H(·, r)` for a factorized curve, `r ∈ [0, L′]`. Points that have not
    /// started moving keep their own samples.
    pub fn row(&self, fac: &Factorization, r: f64, out: &mut [f64]) {
        let d = fac.curve.dim();
        let q = self.total - r;
        for (i, o) in out.chunks_mut(d).enumerate() {
            let x = fac.gamma_tilde[i];
            let y = self.chi(x, q);
            if y == x {
                o.copy_from_slice(fac.fold_sample(i));
            } else {
                fac.fold_into(y, o);
            }
        }
    }
}

/// The `r` axis of a contraction run at `R = L′·halt(r)`: at least `per`
/// uniform steps between consecutive start times, so that every edge's
/// motion is resolved however short it is compared with `L′`, and enough
/// that no step moves `R` by more than `max_step`.
pub fn schedule_axis(start_times: &[f64], total: f64, per: usize, max_step: f64) -> Vec<f64> {
    let mut knots: Vec<f64> = start_times.iter().map(|&r| unhalt(r / total)).collect();
    knots.extend([0.0, 1.0]);
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let per = per.max(1);
    let mut axis = Vec::with_capacity(per * (knots.len() - 1) + 1);
    for w in knots.windows(2) {
        // Steepest slope of R over the window, sampled.
        let probes = 64;
        let slope = (0..probes)
            .map(|k| {
                let a = w[0] + (w[1] - w[0]) * k as f64 / probes as f64;
                let b = w[0] + (w[1] - w[0]) * (k + 1) as f64 / probes as f64;
                total * (halt(b) - halt(a)) / (b - a)
            })
            .fold(0.0, f64::max);
        let need = if max_step > 0.0 {
            (1.25 * slope * (w[1] - w[0]) / max_step).ceil() as usize
        } else {
            0
        };
        let n = per.max(need);
        for k in 0..n {
            axis.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
    }
    axis.push(1.0);
    axis
}

/// Largest `R` step for a contraction of `curve`: a few arclength steps of
/// its `t` grid, so both partials are resolved alike.
pub fn default_r_step(curve: &SampledCurve) -> f64 {
    R_STEP_SAMPLES * curve.arclength_table().total() / curve.segments().max(1) as f64
}

/// `R` step allowed per `t` step, in mean arclength steps.
pub const R_STEP_SAMPLES: f64 = 4.0;

/// Contract a factorized whisker curve onto its basepoint:
/// `H = fold ∘ χ ∘ γ̃`, with `r` halted at both ends.
///
/// `padded` gives `l′` per tree edge; `L′` is their sum. The `r` axis has
/// `per` steps between consecutive start times (see [`schedule_axis`]).
pub fn contract_tree(fac: &Factorization, padded: &[f64], per: usize) -> Result<HomotopyGrid> {
    let total: f64 = padded.iter().sum();
    if fac.tree.edges.is_empty() {
        return HomotopyGrid::constant(&fac.curve, uniform_grid(per + 1), "contract");
    }
    let chi = Contraction::new(&fac.tree, padded, total)?;
    HomotopyGrid::from_rows(
        fac.curve.dim(),
        fac.curve.params().to_vec(),
        schedule_axis(&chi.start_times(), total, per, default_r_step(&fac.curve)),
        "contract",
        |_, r, out| chi.row(fac, total * halt(r), out),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::corpus::{spec_for, word_from_names};
    use crate::curve::{decompose, synth_curve, DecomposeOptions, SynthOptions};
    use crate::geom::dist;
    use crate::homotopy::grid::{check_thin, image_containment};
    use crate::tree::{factorize, DEFAULT_THETA_TOL};

    fn factor(names: &str) -> Factorization {
        let spec = spec_for(2, &word_from_names(names));
        let c = synth_curve(&spec, &SynthOptions::default()).unwrap().curve;
        let dec = decompose(&c, &DecomposeOptions::default()).unwrap();
        factorize(&c, &dec, DEFAULT_THETA_TOL).unwrap()
    }

    #[test]
    fn chi_matches_hand_computation_on_a_path() {
        let fac = factor("s0 t0.0 t0.0' s0'");
        let tree = &fac.tree;
        assert_eq!(tree.edges.len(), 2);
        let pad = vec![1.0, 0.5];
        let chi = Contraction::new(tree, &pad, 1.5).unwrap();
        let tip = tree.edges[1].child;
        let (l0, l1) = (tree.edges[0].length, tree.edges[1].length);
        // Nothing moves before r = L′ − |tip|′ = 0.
        assert_eq!(chi.chi(TreePoint::Vertex(tip), 1.5), TreePoint::Vertex(tip));
        // Halfway down the second edge's padded span.
        match chi.chi(TreePoint::Vertex(tip), 1.25) {
            TreePoint::Edge { edge, offset } => {
                assert_eq!(edge, 1);
                assert!((offset - l1 * 0.5).abs() < 1e-12);
            }
            p => panic!("{p:?}"),
        }
        // Pauses exactly at the interior vertex.
        assert_eq!(chi.chi(TreePoint::Vertex(tip), 1.0), TreePoint::Vertex(tree.edges[0].child));
        // A point in the middle of the first edge waits for q < 1.
        let mid = tree.edge_point(0, l0 / 2.0);
        assert_eq!(chi.chi(mid, 1.2), mid);
        match chi.chi(mid, 0.5) {
            TreePoint::Edge { edge, offset } => {
                assert_eq!(edge, 0);
                assert!((offset - l0 / 2.0 * 0.5).abs() < 1e-12);
            }
            p => panic!("{p:?}"),
        }
        assert_eq!(chi.chi(mid, 0.0), TreePoint::Vertex(FactorTree::ROOT));
    }

    #[test]
    fn tip_pauses_at_interior_vertex() {
        let fac = factor("s0 t0.0 t0.0' s0'");
        let pad = default_padding(&fac.tree).unwrap();
        let g = contract_tree(&fac, &pad, 256).unwrap();
        // The tip sample sits in the middle gap.
        let tip_gap = fac.curve.len() / 2;
        let tip = fac.gamma_tilde[tip_gap];
        assert!(matches!(tip, TreePoint::Vertex(_)));
        let chi = Contraction::new(&fac.tree, &pad, pad.iter().sum()).unwrap();
        let inner = fac.tree.edges[0].child;
        let q = chi.padded_depth(inner);
        let h = 1e-6;
        let a = fac.fold(chi.chi(tip, q + h));
        let b = fac.fold(chi.chi(tip, q - h));
        assert!(dist(&a, &b) / (2.0 * h) < 1e-3);
        let rep = check_thin(&g, 1e-3, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(image_containment(&g, &fac.curve, 1e-3).unwrap().within);
    }

    #[test]
    fn contraction_ends_at_the_basepoint() {
        for names in ["s0 s0'", "p0 p0'", "s0 t0.0 t0.0' t0.1 t0.1' s0'", "s1 s1' s2 s2'"] {
            let fac = factor(names);
            let pad = default_padding(&fac.tree).unwrap();
            let g = contract_tree(&fac, &pad, 256).unwrap();
            assert_eq!(g.row(0), fac.curve.points_flat());
            let base = fac.curve.point(0);
            for i in 0..=g.n_t() {
                assert!(dist(g.at(i, g.n_r()), base) < 1e-9, "{names}");
            }
            let rep = check_thin(&g, 1e-3, 1e-6).unwrap();
            eprintln!("{names}: {rep:?}");
            assert!(rep.pass, "{names}: {rep:?}");
            assert_eq!(g.endpoint_drift(), 0.0);
        }
    }

    #[test]
    fn rejects_short_padding() {
        let fac = factor("s0 s0'");
        let l = fac.tree.edges[0].length;
        assert!(Contraction::new(&fac.tree, &[l / 2.0], l).is_err());
        assert!(Contraction::new(&fac.tree, &[l, l], 2.0 * l).is_err());
    }
}
