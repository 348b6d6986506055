use serde::Serialize;

use crate::curve::{ArcDecomposition, SampledCurve};
use crate::geom::{dist, dot, sub};
use crate::word::{Letter, Pairing, Word};
use crate::{Error, Result};

/// A whisker word with every matched pair renamed to its own letter.
#[derive(Debug, Clone, PartialEq)]
pub struct Relabeled {
    /// Letters `0..m`, each appearing once positive and later once inverted.
    pub word: Word,
    /// The original letter at the left occurrence of each new letter.
    pub original: Vec<Letter>,
}

/// Give each matched pair of `w` a fresh letter, numbered by left occurrence,
/// with the left occurrence positive.
pub fn relabel_occurrences(w: &Word, pairing: &Pairing) -> Result<Relabeled> {
    if pairing.len() != w.len() {
        return Err(Error::Inconsistent("pairing does not match word length".into()));
    }
    let mut letters = vec![Letter::new(0); w.len()];
    let mut original = Vec::with_capacity(w.len() / 2);
    for (i, j) in pairing.matches() {
        if !w.letters[i].cancels(w.letters[j]) {
            return Err(Error::Inconsistent(format!("positions {i} and {j} are not inverse letters")));
        }
        let id = original.len() as u32;
        original.push(w.letters[i]);
        letters[i] = Letter::new(id);
        letters[j] = Letter::new(id).inv();
    }
    Ok(Relabeled {
        word: Word::new(letters),
        original,
    })
}

/// The region between the semicircles over a matched pair of positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiAnnulus {
    pub letter: u32,
    /// Word positions of the left and right occurrence.
    pub left: usize,
    pub right: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Root,
    Tip,
    Corner,
    Branch,
}

/// A component of the complement of the semi-annuli.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexRegion {
    pub kind: RegionKind,
    /// Semi-annulus bounding the region from above; `None` for the root.
    pub above: Option<usize>,
    /// Semi-annuli bounding it from below, in word order.
    pub below: Vec<usize>,
    /// Gaps of the word touched by the region: gap `k` sits before position
    /// `k`, so a word of length `n` has gaps `0..=n`.
    pub gaps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nesting {
    pub annuli: Vec<SemiAnnulus>,
    /// Region 0 is the root; region `k + 1` lies directly below annulus `k`.
    pub regions: Vec<VertexRegion>,
}

impl Nesting {
    pub fn region_below(&self, annulus: usize) -> usize {
        annulus + 1
    }

    pub fn word_len(&self) -> usize {
        2 * self.annuli.len()
    }
}

fn kind_for(above: Option<usize>, children: usize) -> RegionKind {
    match (above, children) {
        (None, _) => RegionKind::Root,
        (_, 0) => RegionKind::Tip,
        (_, 1) => RegionKind::Corner,
        _ => RegionKind::Branch,
    }
}

/// The parenthesis structure of a relabeled whisker word.
pub fn build_nesting(w: &Word) -> Result<Nesting> {
    let pairing = w.nesting_pairing().ok_or_else(|| Error::NotWhisker(w.reduce().to_string()))?;
    let m = w.len() / 2;
    let mut annuli: Vec<SemiAnnulus> = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut open: Vec<usize> = Vec::new();
    let mut top = Vec::new();
    for (pos, &l) in w.letters.iter().enumerate() {
        let j = pairing.partner(pos);
        if pos < j {
            let id = l.arc as usize;
            if l.inverse || id >= m || seen[id] || w.letters[j].arc != l.arc {
                return Err(Error::Inconsistent(
                    "word is not relabeled: letters must be 0..m, once positive then once inverted".into(),
                ));
            }
            seen[id] = true;
            let parent = open.last().copied();
            let k = annuli.len();
            annuli.push(SemiAnnulus {
                letter: l.arc,
                left: pos,
                right: j,
                parent,
                children: Vec::new(),
            });
            match parent {
                Some(p) => annuli[p].children.push(k),
                None => top.push(k),
            }
            open.push(k);
        } else {
            open.pop();
        }
    }

    let mut regions = Vec::with_capacity(m + 1);
    let mut root_gaps = vec![0];
    root_gaps.extend(top.iter().map(|&a| annuli[a].right + 1));
    regions.push(VertexRegion {
        kind: RegionKind::Root,
        above: None,
        below: top,
        gaps: root_gaps,
    });
    for (k, a) in annuli.iter().enumerate() {
        let mut gaps = vec![a.left + 1];
        gaps.extend(a.children.iter().map(|&c| annuli[c].right + 1));
        regions.push(VertexRegion {
            kind: kind_for(Some(k), a.children.len()),
            above: Some(k),
            below: a.children.clone(),
            gaps,
        });
    }
    Ok(Nesting { annuli, regions })
}

/// A nesting in which chains of semi-annuli separated by spurious corners
/// have been merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedNesting {
    pub nesting: Nesting,
    /// Each chain lists annuli from outermost to innermost; consecutive
    /// annuli in a chain are separated by a fused corner.
    pub chains: Vec<Vec<usize>>,
    /// Surviving regions: the root, then the region below each chain.
    pub regions: Vec<usize>,
    /// Parent chain of each chain (`None` when it hangs from the root).
    pub chain_parent: Vec<Option<usize>>,
}

impl FusedNesting {
    /// Kind of the region below chain `c` (or the root for `None`).
    pub fn kind_below(&self, chain: Option<usize>) -> RegionKind {
        match chain {
            None => RegionKind::Root,
            Some(c) => {
                let last = *self.chains[c].last().expect("chains are non-empty");
                kind_for(Some(last), self.nesting.annuli[last].children.len())
            }
        }
    }
}

/// Merge every corner region whose two junctions pass `smooth_gap`, chaining
/// recursively. Tips and branches are never merged.
pub fn fuse_corners(nesting: &Nesting, smooth_gap: impl Fn(usize) -> bool) -> FusedNesting {
    let fused_into_parent: Vec<bool> = nesting
        .annuli
        .iter()
        .map(|a| match a.parent {
            Some(p) => {
                let region = &nesting.regions[nesting.region_below(p)];
                region.kind == RegionKind::Corner && region.gaps.iter().all(|&g| smooth_gap(g))
            }
            None => false,
        })
        .collect();

    let mut chains = Vec::new();
    let mut chain_of = vec![usize::MAX; nesting.annuli.len()];
    for (k, _) in nesting.annuli.iter().enumerate() {
        if fused_into_parent[k] {
            continue;
        }
        let mut chain = vec![k];
        let mut cur = k;
        loop {
            let a = &nesting.annuli[cur];
            if a.children.len() == 1 && fused_into_parent[a.children[0]] {
                cur = a.children[0];
                chain.push(cur);
            } else {
                break;
            }
        }
        for &c in &chain {
            chain_of[c] = chains.len();
        }
        chains.push(chain);
    }
    let chain_parent = chains
        .iter()
        .map(|chain| nesting.annuli[chain[0]].parent.map(|p| chain_of[p]))
        .collect();
    let mut regions = vec![0];
    regions.extend(chains.iter().map(|c| nesting.region_below(*c.last().unwrap())));
    FusedNesting {
        nesting: nesting.clone(),
        chains,
        regions,
        chain_parent,
    }
}

/// Unit direction of arrival at sample `a` and of departure from sample `b`,
/// read off the nearest samples at least `min_step` away.
fn junction_directions(curve: &SampledCurve, a: usize, b: usize, min_step: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let pa = curve.point(a);
    let before = (0..a).rev().find(|&k| dist(curve.point(k), pa) > min_step)?;
    let pb = curve.point(b);
    let after = (b + 1..curve.len()).find(|&k| dist(curve.point(k), pb) > min_step)?;
    let inc = sub(pa, curve.point(before));
    let out = sub(curve.point(after), pb);
    let (ni, no) = (dot(&inc, &inc).sqrt(), dot(&out, &out).sqrt());
    Some((inc.iter().map(|x| x / ni).collect(), out.iter().map(|x| x / no).collect()))
}

/// Angle between the arclength tangents on either side of a word gap.
pub fn gap_turn_angle(curve: &SampledCurve, decomp: &ArcDecomposition, gap: usize) -> Option<f64> {
    let (a, b) = *decomp.a0_samples.get(gap)?;
    if gap == 0 || gap + 1 == decomp.a0_samples.len() {
        return None;
    }
    let scale = curve.polyline_length().max(f64::MIN_POSITIVE);
    let (u, v) = junction_directions(curve, a, b, 1e-6 * scale)?;
    Some(dot(&u, &v).clamp(-1.0, 1.0).acos())
}

/// Fuse the corners of `nesting` at which the curve passes straight through
/// both junctions, to within `theta_tol` radians.
pub fn detect_spurious_corners(
    nesting: &Nesting,
    curve: &SampledCurve,
    decomp: &ArcDecomposition,
    theta_tol: f64,
) -> Result<FusedNesting> {
    if decomp.intervals.len() != nesting.word_len() {
        return Err(Error::TreeMismatch(format!(
            "nesting covers {} letters but the curve has {}",
            nesting.word_len(),
            decomp.intervals.len()
        )));
    }
    Ok(fuse_corners(nesting, |g| {
        gap_turn_angle(curve, decomp, g).is_some_and(|a| a <= theta_tol)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn relabel(s: &str) -> Relabeled {
        let word = w(s);
        relabel_occurrences(&word, &word.nesting_pairing().unwrap()).unwrap()
    }

    #[test]
    fn relabel_examples() {
        assert_eq!(relabel("a a' a a'").word, w("a a' b b'"));
        let r = relabel("a' a");
        assert_eq!(r.word, w("a a'"));
        assert_eq!(r.original, vec![Letter::new(0).inv()]);
    }

    #[test]
    fn nested_pair() {
        let n = build_nesting(&w("a b b' a'")).unwrap();
        assert_eq!(n.annuli[1].parent, Some(0));
        assert_eq!(n.regions[0].kind, RegionKind::Root);
        assert_eq!(n.regions[1].kind, RegionKind::Corner);
        assert_eq!(n.regions[2].kind, RegionKind::Tip);
        assert_eq!(n.regions[1].gaps, vec![1, 3]);
        assert_eq!(n.regions[0].gaps, vec![0, 4]);
    }

    #[test]
    fn sequential_pairs_branch_at_root() {
        let n = build_nesting(&w("a a' b b'")).unwrap();
        assert_eq!(n.regions[0].below, vec![0, 1]);
        assert_eq!(n.regions[0].gaps, vec![0, 2, 4]);
        assert!(n.regions[1..].iter().all(|r| r.kind == RegionKind::Tip));
    }

    #[test]
    fn minimal_annulus_orders_children() {
        // z outermost with x then y inside it.
        let n = build_nesting(&w("a b b' c c' a'")).unwrap();
        assert_eq!(n.annuli[0].children, vec![1, 2]);
        assert_eq!(n.regions[1].kind, RegionKind::Branch);
        assert_eq!(n.regions[1].gaps, vec![1, 3, 5]);
    }

    #[test]
    fn rejects_non_whisker_and_unrelabeled() {
        assert!(matches!(build_nesting(&w("a b a' b'")), Err(Error::NotWhisker(_))));
        assert!(build_nesting(&w("a a' a a'")).is_err());
    }

    #[test]
    fn fusion_merges_smooth_corner_chains() {
        let n = build_nesting(&w("a b c c' b' a'")).unwrap();
        let all = fuse_corners(&n, |_| true);
        assert_eq!(all.chains, vec![vec![0, 1, 2]]);
        assert_eq!(all.regions, vec![0, 3]);
        let none = fuse_corners(&n, |_| false);
        assert_eq!(none.chains.len(), 3);
        // Only the corner below `a` is smooth.
        let partial = fuse_corners(&n, |g| g == 1 || g == 5);
        assert_eq!(partial.chains, vec![vec![0, 1], vec![2]]);
        assert_eq!(partial.chain_parent, vec![None, Some(0)]);
    }

    #[test]
    fn tips_never_fuse() {
        let n = build_nesting(&w("a a'")).unwrap();
        let f = fuse_corners(&n, |_| true);
        assert_eq!(f.chains, vec![vec![0]]);
        assert_eq!(f.kind_below(Some(0)), RegionKind::Tip);
    }

    proptest! {
        #[test]
        fn relabeled_letters_occur_twice(half in prop::collection::vec((0u32..3, any::<bool>()), 0..6)) {
            let u = Word::new(half.into_iter().map(|(arc, inverse)| Letter { arc, inverse }).collect());
            let word = u.concat(&u.inverse());
            let r = relabel_occurrences(&word, &word.nesting_pairing().unwrap()).unwrap();
            let m = word.len() / 2;
            for id in 0..m as u32 {
                let pos: Vec<&Letter> = r.word.letters.iter().filter(|l| l.arc == id).collect();
                prop_assert_eq!(pos.len(), 2);
                prop_assert!(!pos[0].inverse && pos[1].inverse);
            }
            let n = build_nesting(&r.word).unwrap();
            prop_assert_eq!(n.regions.len(), m + 1);
            let gaps: usize = n.regions.iter().map(|g| g.gaps.len()).sum();
            prop_assert_eq!(gaps, word.len() + 1);
        }
    }
}
