use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::nesting::{
    build_nesting, detect_spurious_corners, relabel_occurrences, FusedNesting, RegionKind, Relabeled,
};
use crate::curve::{ArcDecomposition, ArclengthTable, SampledCurve};
use crate::geom::dist;
use crate::word::Letter;
use crate::{Error, Result};

/// Sparse point of `ℓ¹`: axis ↦ coordinate.
pub type Sparse = BTreeMap<usize, f64>;

pub fn l1_distance(a: &Sparse, b: &Sparse) -> f64 {
    let mut acc = 0.0;
    for (k, x) in a {
        acc += (x - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            acc += y.abs();
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeVertex {
    pub kind: RegionKind,
    pub parent_edge: Option<usize>,
    pub child_edges: Vec<usize>,
    pub coords: Sparse,
    /// Word gaps the vertex region touches.
    pub gaps: Vec<usize>,
}

/// Edge `i` runs along axis `i` from `parent` to `child`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeEdge {
    /// Relabeled letters merged into this edge, outermost first.
    pub letters: Vec<u32>,
    pub parent: usize,
    pub child: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TreePoint {
    Vertex(usize),
    Edge { edge: usize, offset: f64 },
}

/// A finite tree in `ℓ¹` with axis-aligned edges; vertex 0 is the root at
/// the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorTree {
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<TreeEdge>,
}

impl FactorTree {
    pub const ROOT: usize = 0;

    pub fn coords(&self, p: TreePoint) -> Sparse {
        match p {
            TreePoint::Vertex(v) => self.vertices[v].coords.clone(),
            TreePoint::Edge { edge, offset } => {
                let mut c = self.vertices[self.edges[edge].parent].coords.clone();
                if offset != 0.0 {
                    c.insert(edge, offset);
                }
                c
            }
        }
    }

    pub fn norm(&self, p: TreePoint) -> f64 {
        self.coords(p).values().map(|x| x.abs()).sum()
    }

    pub fn distance(&self, a: TreePoint, b: TreePoint) -> f64 {
        l1_distance(&self.coords(a), &self.coords(b))
    }

    /// Edges from the root down to vertex `v`.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(e) = self.vertices[cur].parent_edge {
            path.push(e);
            cur = self.edges[e].parent;
        }
        path.reverse();
        path
    }

    /// The unit-speed path from the root to `x`.
    pub fn root_path(&self, x: TreePoint) -> RootPath {
        let (v, tail) = match x {
            TreePoint::Vertex(v) => (v, None),
            TreePoint::Edge { edge, offset } => (self.edges[edge].parent, Some((edge, offset))),
        };
        let mut legs: Vec<(usize, f64)> = self.ancestors(v).into_iter().map(|e| (e, self.edges[e].length)).collect();
        if let Some((e, o)) = tail {
            if o > 0.0 {
                legs.push((e, o));
            }
        }
        RootPath { legs }
    }

    /// Point at `offset` along edge `edge`, snapped to the end vertices.
    pub fn edge_point(&self, edge: usize, offset: f64) -> TreePoint {
        let e = &self.edges[edge];
        if offset <= 0.0 {
            TreePoint::Vertex(e.parent)
        } else if offset >= e.length {
            TreePoint::Vertex(e.child)
        } else {
            TreePoint::Edge { edge, offset }
        }
    }

    /// Every vertex's coordinates equal the edge lengths along its root path.
    pub fn check_invariants(&self) -> Result<()> {
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(Error::Inconsistent("tree needs one more vertex than edges".into()));
        }
        if !self.vertices[Self::ROOT].coords.is_empty() {
            return Err(Error::Inconsistent("root is not at the origin".into()));
        }
        for (v, vert) in self.vertices.iter().enumerate().skip(1) {
            let expect: Sparse = self.ancestors(v).into_iter().map(|e| (e, self.edges[e].length)).collect();
            if expect != vert.coords {
                return Err(Error::Inconsistent(format!("vertex {v} coordinates disagree with its root path")));
            }
        }
        Ok(())
    }
}

/// `σₓ`: the isometric path from the root to a tree point, as consecutive
/// (edge, distance travelled along it) legs.
#[derive(Debug, Clone, PartialEq)]
pub struct RootPath {
    pub legs: Vec<(usize, f64)>,
}

impl RootPath {
    pub fn length(&self) -> f64 {
        self.legs.iter().map(|l| l.1).sum()
    }

    /// `σₓ(s)` for `s ∈ [0, ‖x‖₁]`.
    pub fn at(&self, tree: &FactorTree, s: f64) -> TreePoint {
        let mut rest = s.max(0.0);
        for &(e, len) in &self.legs {
            if rest <= len {
                return tree.edge_point(e, rest);
            }
            rest -= len;
        }
        match self.legs.last() {
            Some(&(e, len)) => tree.edge_point(e, len),
            None => TreePoint::Vertex(FactorTree::ROOT),
        }
    }
}

/// The tree of a fused nesting: one edge per chain, of length the sum of its
/// letters' lengths.
pub fn build_tree(fused: &FusedNesting, lengths: &[f64]) -> Result<FactorTree> {
    if lengths.len() != fused.nesting.annuli.len() {
        return Err(Error::TreeMismatch(format!(
            "{} lengths for {} letters",
            lengths.len(),
            fused.nesting.annuli.len()
        )));
    }
    let mut vertices = vec![TreeVertex {
        kind: RegionKind::Root,
        parent_edge: None,
        child_edges: Vec::new(),
        coords: Sparse::new(),
        gaps: fused.nesting.regions[0].gaps.clone(),
    }];
    let mut edges = Vec::with_capacity(fused.chains.len());
    // Chains are ordered by their outermost annulus, so parents come first.
    for (c, chain) in fused.chains.iter().enumerate() {
        let parent = fused.chain_parent[c].map_or(FactorTree::ROOT, |p| p + 1);
        let length: f64 = chain.iter().map(|&a| lengths[fused.nesting.annuli[a].letter as usize]).sum();
        let mut coords = vertices[parent].coords.clone();
        coords.insert(c, length);
        let child = vertices.len();
        vertices.push(TreeVertex {
            kind: fused.kind_below(Some(c)),
            parent_edge: Some(c),
            child_edges: Vec::new(),
            coords,
            gaps: fused.nesting.regions[fused.regions[c + 1]].gaps.clone(),
        });
        vertices[parent].child_edges.push(c);
        edges.push(TreeEdge {
            letters: chain.iter().map(|&a| fused.nesting.annuli[a].letter).collect(),
            parent,
            child,
            length,
        });
    }
    Ok(FactorTree { vertices, edges })
}

/// Where each tree edge sits on the curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSpans {
    /// Inclusive sample range of the first (outbound) traversal.
    pub left: (usize, usize),
    /// Inclusive sample range of the return traversal.
    pub right: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorReport {
    /// Largest `‖γ(tᵢ) − fold(γ̃(tᵢ))‖` over the samples.
    pub max_error: f64,
    /// Largest `|fold(x) − fold(y)| / ‖x − y‖₁` over sampled tree point pairs.
    pub lipschitz: f64,
    /// Largest `‖γ̃(t₁) − γ̃(t₂)‖₁ / |l(t₂) − l(t₁)|` over sampled parameter pairs.
    pub gamma_tilde_ratio: f64,
    pub total_length: f64,
}

/// `γ = fold ∘ γ̃` for a tree-like curve.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub relabeled: Relabeled,
    pub fused: FusedNesting,
    pub tree: FactorTree,
    pub spans: Vec<EdgeSpans>,
    /// `γ̃` at every curve sample.
    pub gamma_tilde: Vec<TreePoint>,
    /// A sample lying on each vertex region.
    pub vertex_sample: Vec<usize>,
    pub curve: SampledCurve,
    pub table: ArclengthTable,
}

fn letter_lengths(decomp: &ArcDecomposition, relabeled: &Relabeled, table: &ArclengthTable) -> Vec<f64> {
    let mut lengths = vec![0.0; relabeled.original.len()];
    let mut seen = vec![false; lengths.len()];
    for (pos, l) in relabeled.word.letters.iter().enumerate() {
        let id = l.arc as usize;
        if !seen[id] {
            seen[id] = true;
            let iv = &decomp.intervals[pos];
            lengths[id] = table.at_sample(iv.end) - table.at_sample(iv.start);
        }
    }
    lengths
}

/// Factor a tree-like curve through its tree.
pub fn factorize(curve: &SampledCurve, decomp: &ArcDecomposition, theta_tol: f64) -> Result<Factorization> {
    let word = decomp.word();
    let pairing = word
        .nesting_pairing()
        .ok_or_else(|| Error::NotWhisker(word.reduce().to_string()))?;
    let relabeled = relabel_occurrences(&word, &pairing)?;
    let nesting = build_nesting(&relabeled.word)?;
    let fused = detect_spurious_corners(&nesting, curve, decomp, theta_tol)?;
    let table = curve.arclength_table();
    let lengths = letter_lengths(decomp, &relabeled, &table);
    let tree = build_tree(&fused, &lengths)?;

    let spans: Vec<EdgeSpans> = fused
        .chains
        .iter()
        .map(|chain| {
            let outer = &nesting.annuli[chain[0]];
            let inner = &nesting.annuli[*chain.last().unwrap()];
            EdgeSpans {
                left: (decomp.intervals[outer.left].start, decomp.intervals[inner.left].end),
                right: (decomp.intervals[inner.right].start, decomp.intervals[outer.right].end),
            }
        })
        .collect();

    let n = curve.len();
    let mut gamma_tilde = vec![TreePoint::Vertex(FactorTree::ROOT); n];
    let mut vertex_sample = vec![usize::MAX; tree.vertices.len()];
    for (v, vert) in tree.vertices.iter().enumerate() {
        for &g in &vert.gaps {
            let (a, b) = decomp.a0_samples[g];
            if vertex_sample[v] == usize::MAX {
                vertex_sample[v] = a;
            }
            for slot in &mut gamma_tilde[a..=b] {
                *slot = TreePoint::Vertex(v);
            }
        }
    }
    for (e, sp) in spans.iter().enumerate() {
        let len = tree.edges[e].length;
        let (l0, l1) = (table.at_sample(sp.left.0), table.at_sample(sp.left.1));
        let (r0, r1) = (table.at_sample(sp.right.0), table.at_sample(sp.right.1));
        for i in sp.left.0..=sp.left.1 {
            let w = if l1 > l0 { (table.at_sample(i) - l0) / (l1 - l0) } else { 0.0 };
            gamma_tilde[i] = tree.edge_point(e, len * w);
        }
        for i in sp.right.0..=sp.right.1 {
            let w = if r1 > r0 { (table.at_sample(i) - r0) / (r1 - r0) } else { 0.0 };
            gamma_tilde[i] = tree.edge_point(e, len * (1.0 - w));
        }
    }
    Ok(Factorization {
        relabeled,
        fused,
        tree,
        spans,
        gamma_tilde,
        vertex_sample,
        curve: curve.clone(),
        table,
    })
}

impl Factorization {
    /// `fold`: a tree point mapped to the curve through the outbound
    /// traversal of its edge, by arclength.
    pub fn fold(&self, p: TreePoint) -> Vec<f64> {
        let mut out = vec![0.0; self.curve.dim()];
        self.fold_into(p, &mut out);
        out
    }

    /// [`Self::fold`] into a caller's buffer.
    pub fn fold_into(&self, p: TreePoint, out: &mut [f64]) {
        match p {
            TreePoint::Vertex(v) => out.copy_from_slice(self.curve.point(self.vertex_sample[v])),
            TreePoint::Edge { edge, offset } => {
                let sp = &self.spans[edge];
                let (l0, l1) = (self.table.at_sample(sp.left.0), self.table.at_sample(sp.left.1));
                let len = self.tree.edges[edge].length;
                let s = l0 + (l1 - l0) * (offset / len).clamp(0.0, 1.0);
                self.curve.point_at_arclength_into(&self.table, s, out);
            }
        }
    }

    /// The point of the curve at sample `i` itself, which `fold(γ̃(tᵢ))`
    /// approximates on return traversals.
    pub fn fold_sample(&self, i: usize) -> &[f64] {
        self.curve.point(i)
    }

    pub fn total_length(&self) -> f64 {
        self.table.total()
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> TreePoint {
        if self.tree.edges.is_empty() {
            return TreePoint::Vertex(FactorTree::ROOT);
        }
        let e = rng.gen_range(0..self.tree.edges.len());
        let len = self.tree.edges[e].length;
        self.tree.edge_point(e, rng.gen_range(0.0..=len))
    }

    /// Factorization error and sampled Lipschitz constants, from `pairs`
    /// seeded random pairs.
    pub fn report(&self, pairs: usize, seed: u64) -> FactorReport {
        let max_error = (0..self.curve.len())
            .map(|i| dist(self.curve.point(i), &self.fold(self.gamma_tilde[i])))
            .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let floor = 1e-9 * self.total_length().max(1.0);
        let mut lipschitz = 0.0f64;
        for _ in 0..pairs {
            let (x, y) = (self.random_point(&mut rng), self.random_point(&mut rng));
            let d = self.tree.distance(x, y);
            if d > floor {
                lipschitz = lipschitz.max(dist(&self.fold(x), &self.fold(y)) / d);
            }
        }
        let n = self.curve.len();
        let mut ratio = 0.0f64;
        for _ in 0..pairs {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let dl = (self.table.at_sample(i) - self.table.at_sample(j)).abs();
            if dl > floor {
                ratio = ratio.max(self.tree.distance(self.gamma_tilde[i], self.gamma_tilde[j]) / dl);
            }
        }
        FactorReport {
            max_error,
            lipschitz,
            gamma_tilde_ratio: ratio,
            total_length: self.total_length(),
        }
    }

    /// Original letters along each edge, outermost first.
    pub fn edge_letters(&self, e: usize) -> Vec<Letter> {
        self.tree.edges[e]
            .letters
            .iter()
            .map(|&l| self.relabeled.original[l as usize])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::corpus::{collinear_pair, spec_for, word_from_names};
    use crate::curve::{decompose, synth_curve, DecomposeOptions, SynthOptions};
    use crate::tree::nesting::fuse_corners;
    use crate::word::Word;

    fn tree_of(word: &str, lengths: &[f64]) -> FactorTree {
        let n = build_nesting(&word.parse::<Word>().unwrap()).unwrap();
        build_tree(&fuse_corners(&n, |_| false), lengths).unwrap()
    }

    fn factor(spec: &crate::curve::CurveSpec) -> Factorization {
        let s = synth_curve(spec, &SynthOptions::default()).unwrap();
        let d = decompose(&s.curve, &DecomposeOptions::default()).unwrap();
        factorize(&s.curve, &d, 1e-3).unwrap()
    }

    #[test]
    fn single_edge() {
        let t = tree_of("a a'", &[2.5]);
        assert_eq!(t.vertices.len(), 2);
        assert_eq!(t.vertices[1].coords, Sparse::from([(0, 2.5)]));
        t.check_invariants().unwrap();
    }

    #[test]
    fn path_of_two_edges() {
        let t = tree_of("a b b' a'", &[1.0, 0.5]);
        assert_eq!(t.norm(TreePoint::Vertex(2)), 1.5);
        assert_eq!(t.root_path(TreePoint::Vertex(2)).legs, vec![(0, 1.0), (1, 0.5)]);
        assert!(t.root_path(TreePoint::Vertex(0)).legs.is_empty());
    }

    #[test]
    fn branch_of_degree_three() {
        let t = tree_of("a b b' c c' a'", &[1.0, 1.0, 1.0]);
        let v = t.edges[0].child;
        assert_eq!(t.vertices[v].kind, RegionKind::Branch);
        assert_eq!(t.vertices[v].child_edges.len() + 1, 3);
        t.check_invariants().unwrap();
    }

    #[test]
    fn root_path_is_isometric() {
        let t = tree_of("a b c c' b' a'", &[1.0, 0.25, 0.5]);
        let x = TreePoint::Edge { edge: 2, offset: 0.3 };
        let path = t.root_path(x);
        assert!((path.length() - t.norm(x)).abs() < 1e-15);
        for (s1, s2) in [(0.0, 1.2), (0.4, 1.5), (1.1, 1.25)] {
            let d = t.distance(path.at(&t, s1), path.at(&t, s2));
            assert!((d - (s2 - s1)).abs() < 1e-12);
        }
        assert_eq!(path.at(&t, path.length()), x);
    }

    #[test]
    fn out_and_back_walks_to_tip_and_back() {
        let f = factor(&spec_for(2, &word_from_names("s0 s0'")));
        assert_eq!(f.gamma_tilde[0], TreePoint::Vertex(0));
        assert_eq!(*f.gamma_tilde.last().unwrap(), TreePoint::Vertex(0));
        assert_eq!(f.gamma_tilde[512], TreePoint::Vertex(1));
        let r = f.report(2000, 1);
        assert!(r.max_error < 1e-3 * r.total_length);
        assert!(r.lipschitz <= 1.01);
    }

    #[test]
    fn fold_of_root_is_base_point() {
        let f = factor(&spec_for(2, &word_from_names("p0 s1 t1.0 t1.0' s1' p0'")));
        assert_eq!(f.fold(TreePoint::Vertex(0)), f.curve.point(0));
        f.tree.check_invariants().unwrap();
        let r = f.report(5000, 2);
        assert!(r.max_error < 1e-3 * r.total_length, "{r:?}");
        assert!(r.lipschitz <= 1.01, "{r:?}");
        assert!(r.gamma_tilde_ratio <= 1.0 + 1e-6, "{r:?}");
    }

    #[test]
    fn collinear_corner_is_fused_and_bent_is_not() {
        let straight = factor(&collinear_pair(false));
        assert_eq!(straight.tree.edges.len(), 1);
        assert_eq!(straight.edge_letters(0).len(), 2);
        let bent = factor(&collinear_pair(true));
        assert_eq!(bent.tree.edges.len(), 2);
        assert_eq!(bent.tree.vertices[1].kind, RegionKind::Corner);
    }

    #[test]
    fn non_whisker_has_no_tree() {
        let s = synth_curve(&spec_for(2, &word_from_names("p0 p1 p0' p1'")), &SynthOptions::default()).unwrap();
        let d = decompose(&s.curve, &DecomposeOptions::default()).unwrap();
        assert!(matches!(factorize(&s.curve, &d, 1e-3), Err(Error::NotWhisker(_))));
    }
}
