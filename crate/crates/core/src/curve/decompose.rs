use std::collections::BTreeMap;

use super::overlap::{self_overlap_index, OverlapIndex};
use super::sampled::SampledCurve;
use super::synth::Arc;
use crate::geom::{dist, dot, normalized, padded_box, point_segment, segment_segment, sub, wedge_norm, HashGrid};
use crate::word::{Letter, Word};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Geometric identification distance.
    pub eps_geo: f64,
    /// Speeds below this are critical.
    pub v_min: f64,
    /// Samples closer than this to a critical point image are left in `A₀`.
    pub junction_radius: f64,
    /// Partners whose direction makes a sine above this with the sample
    /// tangent are transverse crossings rather than overlaps.
    pub crossing_sin: f64,
}

impl DecomposeOptions {
    pub fn new(eps_geo: f64, v_min: f64) -> Self {
        Self {
            eps_geo,
            v_min,
            junction_radius: 10.0 * eps_geo,
            crossing_sin: 0.2,
        }
    }
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self::new(1e-3, 1e-6)
    }
}

/// One interval of a stratum: the open sample range `(start, end)` traversing
/// a recovered arc. Both endpoint samples belong to `A₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LetterInterval {
    pub start: usize,
    pub end: usize,
    pub letter: Letter,
    pub multiplicity: usize,
    /// Inclusive range of samples away from every critical point, on which
    /// the multiplicity was measured.
    pub core: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcDecomposition {
    /// `n ↦` open parameter intervals of multiplicity `n`.
    pub strata: BTreeMap<usize, Vec<(f64, f64)>>,
    /// Closed parameter intervals making up the complement of the strata.
    pub a0: Vec<(f64, f64)>,
    /// The same complement as inclusive sample ranges.
    pub a0_samples: Vec<(usize, usize)>,
    /// Stratum intervals in curve order.
    pub intervals: Vec<LetterInterval>,
    /// Recovered arcs, indexed by letter id.
    pub arcs: Vec<Arc>,
    pub eps_geo: f64,
}

impl ArcDecomposition {
    pub fn word(&self) -> Word {
        Word::new(self.intervals.iter().map(|iv| iv.letter).collect())
    }
}

/// The word of a decomposed curve, letters ordered along the curve.
pub fn word_of(decomp: &ArcDecomposition) -> Word {
    decomp.word()
}

fn resolution(curve: &SampledCurve, i: usize, reason: impl Into<String>) -> Error {
    Error::Resolution {
        t: curve.param(i),
        reason: reason.into(),
    }
}

/// Union-find with the relative orientation of every element to its root.
struct ParityUnion {
    parent: Vec<usize>,
    flip: Vec<bool>,
}

impl ParityUnion {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            flip: vec![false; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let p = self.parent[x];
        if p == x {
            return (x, false);
        }
        let (root, f) = self.find(p);
        self.parent[x] = root;
        self.flip[x] ^= f;
        (root, self.flip[x])
    }

    /// Record that `a` and `b` have relative orientation `opposite`; false on
    /// contradiction.
    fn union(&mut self, a: usize, b: usize, opposite: bool) -> bool {
        let (ra, fa) = self.find(a);
        let (rb, fb) = self.find(b);
        if ra == rb {
            return (fa ^ fb) == opposite;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.flip[hi] = fa ^ fb ^ opposite;
        true
    }
}

/// Samples within `radius` of the image of a critical sample.
fn junction_mask(curve: &SampledCurve, critical: &[bool], radius: f64) -> Vec<bool> {
    let crit: Vec<usize> = (0..curve.len()).filter(|&i| critical[i]).collect();
    if crit.is_empty() || radius <= 0.0 {
        return critical.to_vec();
    }
    let mut grid = HashGrid::new(radius);
    for (k, &i) in crit.iter().enumerate() {
        let p = curve.point(i);
        let (lo, hi) = padded_box(p, p, radius);
        grid.insert_box(k as u32, &lo, &hi);
    }
    (0..curve.len())
        .map(|i| {
            critical[i]
                || grid
                    .candidates(curve.point(i))
                    .iter()
                    .any(|&k| dist(curve.point(crit[k as usize]), curve.point(i)) < radius)
        })
        .collect()
}

/// Samples bounding a segment that passes within `eps` of another,
/// non-adjacent segment at a transverse angle, away from the junction mask.
/// Catches crossings that fall between samples.
fn transverse_contacts(curve: &SampledCurve, mask: &[bool], eps: f64, crossing_sin: f64) -> Vec<bool> {
    let segs = curve.segments();
    let mut marked = vec![false; curve.len()];
    let mean = curve.polyline_length() / segs as f64;
    let mut grid = HashGrid::new(eps.max(mean).max(1e-12));
    for s in 0..segs {
        let (lo, hi) = padded_box(curve.point(s), curve.point(s + 1), eps);
        grid.insert_box(s as u32, &lo, &hi);
    }
    for s in 0..segs {
        if mask[s] && mask[s + 1] {
            continue;
        }
        let (a, b) = (curve.point(s), curve.point(s + 1));
        let Some(u) = normalized(&sub(b, a)) else {
            continue;
        };
        let (lo, hi) = padded_box(a, b, 0.0);
        for r in grid.candidates_box(&lo, &hi) {
            let r = r as usize;
            if r.abs_diff(s) <= 1 || (mask[r] && mask[r + 1]) {
                continue;
            }
            let (c, d) = (curve.point(r), curve.point(r + 1));
            let Some(v) = normalized(&sub(d, c)) else {
                continue;
            };
            if wedge_norm(&u, &v) > crossing_sin && segment_segment(a, b, c, d) <= eps {
                marked[s] = true;
                marked[s + 1] = true;
            }
        }
    }
    marked
}

/// Largest distance from a point of `a` to the polyline `b`, provided every
/// point of `a` is within `eps` of `b`.
fn hausdorff_within(a: &[&[f64]], b: &[&[f64]], eps: f64) -> Option<f64> {
    if b.len() < 2 {
        return None;
    }
    let cell = eps.max(1e-12);
    let mut grid = HashGrid::new(cell);
    for s in 0..b.len() - 1 {
        let (lo, hi) = padded_box(b[s], b[s + 1], eps);
        grid.insert_box(s as u32, &lo, &hi);
    }
    let mut worst = 0.0f64;
    for p in a {
        let d = grid
            .candidates(p)
            .iter()
            .map(|&s| point_segment(p, b[s as usize], b[s as usize + 1]).0)
            .fold(f64::INFINITY, f64::min);
        if d > eps {
            return None;
        }
        worst = worst.max(d);
    }
    Some(worst)
}

/// Discrete stratification of a sampled curve into multiplicity strata and
/// embedded arcs.
pub fn decompose(curve: &SampledCurve, opts: &DecomposeOptions) -> Result<ArcDecomposition> {
    let index = self_overlap_index(curve, opts.eps_geo, opts.v_min);
    decompose_with_index(curve, &index, opts)
}

pub fn decompose_with_index(
    curve: &SampledCurve,
    index: &OverlapIndex,
    opts: &DecomposeOptions,
) -> Result<ArcDecomposition> {
    let n = curve.len();
    let eps = opts.eps_geo;
    let critical = &index.critical;
    let mask = junction_mask(curve, critical, opts.junction_radius);
    let contacts = transverse_contacts(curve, &mask, eps, opts.crossing_sin);

    // Multiplicity per sample; 0 marks A₀.
    let mut mult = vec![0usize; n];
    for i in 0..n {
        if mask[i] || contacts[i] {
            continue;
        }
        let Some(u) = normalized(curve.tangent(i)) else {
            continue;
        };
        let clusters = &index.samples[i];
        let mut crossing = false;
        for run in clusters.partners() {
            let s = run.closest as usize;
            let Some(dir) = normalized(&sub(curve.point(s + 1), curve.point(s))) else {
                continue;
            };
            if wedge_norm(&u, &dir) > opts.crossing_sin {
                crossing = true;
            } else if run.min_dist > 0.25 * eps {
                return Err(resolution(
                    curve,
                    i,
                    format!("nearly parallel strands {:.3e} apart at tolerance {eps:.3e}", run.min_dist),
                ));
            }
        }
        if !crossing {
            mult[i] = clusters.multiplicity();
        }
    }

    // Core runs of constant multiplicity.
    let mut cores: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if mult[i] == 0 {
            i += 1;
            continue;
        }
        let a = i;
        while i + 1 < n && mult[i + 1] == mult[a] {
            i += 1;
        }
        if i + 1 - a < 3 {
            return Err(resolution(curve, a, "multiplicity run shorter than three samples"));
        }
        cores.push((a, i));
        i += 1;
    }

    // Extend cores to the nearest critical samples, or split gaps without
    // one at their midpoint.
    let mut bounds: Vec<(usize, usize)> = Vec::with_capacity(cores.len());
    for (k, &(a, b)) in cores.iter().enumerate() {
        let start = if k == 0 {
            (0..a).rev().find(|&j| critical[j]).unwrap_or(0)
        } else {
            let prev_b = cores[k - 1].1;
            if prev_b + 1 == a {
                return Err(resolution(curve, a, "multiplicity changes away from critical points"));
            }
            match (prev_b + 1..a).rev().find(|&j| critical[j]) {
                Some(j) => j,
                None => (prev_b + 1 + a - 1) / 2,
            }
        };
        let end = if k + 1 == cores.len() {
            (b + 1..n).find(|&j| critical[j]).unwrap_or(n - 1)
        } else {
            let next_a = cores[k + 1].0;
            match (b + 1..next_a).find(|&j| critical[j]) {
                Some(j) => j,
                None => (b + 1 + next_a - 1) / 2,
            }
        };
        bounds.push((start, end));
    }

    // Which interval owns each segment.
    let mut seg_owner = vec![usize::MAX; curve.segments()];
    for (k, &(s, e)) in bounds.iter().enumerate() {
        for slot in &mut seg_owner[s..e] {
            *slot = k;
        }
    }

    let mut uf = ParityUnion::new(cores.len());
    for (k, &(a, b)) in cores.iter().enumerate() {
        for i in a..=b {
            let u = curve.tangent(i);
            for run in index.samples[i].partners() {
                let s = run.closest as usize;
                let other = seg_owner[s];
                if other == usize::MAX {
                    return Err(resolution(curve, i, "overlap partner lies in the critical set"));
                }
                if mult[cores[other].0] != mult[i] {
                    return Err(resolution(curve, i, "overlap partner has a different multiplicity"));
                }
                let opposite = dot(u, &sub(curve.point(s + 1), curve.point(s))) < 0.0;
                if !uf.union(k, other, opposite) {
                    return Err(resolution(curve, i, "inconsistent orientation between overlapping strands"));
                }
            }
        }
    }

    // Group into arcs in order of first appearance.
    let mut class_of_root: BTreeMap<usize, u32> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut intervals = Vec::with_capacity(cores.len());
    for k in 0..cores.len() {
        let (root, flip) = uf.find(k);
        let next_id = class_of_root.len() as u32;
        let id = *class_of_root.entry(root).or_insert(next_id);
        if id as usize == members.len() {
            members.push(Vec::new());
        }
        members[id as usize].push(k);
        let (_, rep_flip) = uf.find(members[id as usize][0]);
        intervals.push(LetterInterval {
            start: bounds[k].0,
            end: bounds[k].1,
            letter: Letter {
                arc: id,
                inverse: flip != rep_flip,
            },
            multiplicity: mult[cores[k].0],
            core: cores[k],
        });
    }

    let mut arcs = Vec::with_capacity(members.len());
    for (id, group) in members.iter().enumerate() {
        let rep = &intervals[group[0]];
        if group.len() != rep.multiplicity {
            return Err(resolution(
                curve,
                rep.core.0,
                format!(
                    "arc traversed {} times but sampled multiplicity is {}",
                    group.len(),
                    rep.multiplicity
                ),
            ));
        }
        let rep_pts: Vec<&[f64]> = (rep.start..=rep.end).map(|j| curve.point(j)).collect();
        for &k in &group[1..] {
            let iv = &intervals[k];
            let pts: Vec<&[f64]> = (iv.start..=iv.end).map(|j| curve.point(j)).collect();
            if hausdorff_within(&pts, &rep_pts, eps).is_none() || hausdorff_within(&rep_pts, &pts, eps).is_none() {
                return Err(resolution(curve, iv.core.0, "overlapping strands differ by more than the tolerance"));
            }
        }
        arcs.push(Arc::new(id as u32, rep_pts.iter().map(|p| p.to_vec()).collect()));
    }

    let mut strata: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for iv in &intervals {
        strata
            .entry(iv.multiplicity)
            .or_default()
            .push((curve.param(iv.start), curve.param(iv.end)));
    }
    let mut a0_samples = Vec::new();
    let mut cursor = 0;
    for iv in &intervals {
        a0_samples.push((cursor, iv.start));
        cursor = iv.end;
    }
    a0_samples.push((cursor, n - 1));
    let a0 = a0_samples
        .iter()
        .map(|&(a, b)| (curve.param(a), curve.param(b)))
        .collect();

    Ok(ArcDecomposition {
        strata,
        a0,
        a0_samples,
        intervals,
        arcs,
        eps_geo: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::overlap::self_overlap_index_brute;
    use crate::curve::synth::{synth_curve, CurveSpec, SynthOptions};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    /// Closed loop through the origin leaving at ±45° about `heading`.
    fn teardrop(id: u32, heading: f64) -> Arc {
        Arc::new(
            id,
            (0..=120)
                .map(|k| {
                    let s = k as f64 / 120.0;
                    let phi = heading - FRAC_PI_4 + FRAC_PI_2 * s;
                    let r = (PI * s).sin();
                    vec![r * phi.cos(), r * phi.sin()]
                })
                .collect(),
        )
    }

    fn synth(arcs: Vec<Arc>, word: &str) -> SampledCurve {
        let spec = CurveSpec::from_word(2, arcs, &word.parse().unwrap());
        synth_curve(&spec, &SynthOptions::default()).unwrap().curve
    }

    #[test]
    fn constant_curve_is_all_critical() {
        let c = SampledCurve::new(2, vec![0.0, 0.5, 1.0], vec![1.0; 6], vec![0.0; 6]).unwrap();
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        assert!(d.strata.is_empty());
        assert_eq!(d.a0, vec![(0.0, 1.0)]);
        assert!(d.word().is_empty());
    }

    #[test]
    fn out_and_back_is_one_arc_twice() {
        let c = synth(vec![Arc::new(0, vec![vec![0.0, 0.0], vec![1.0, 0.0]])], "a a'");
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.strata.keys().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(d.strata[&2].len(), 2);
        assert_eq!(d.word().to_string(), "a a'");
        assert_eq!(d.arcs.len(), 1);

        // Brute-force cross-check: every core sample of the first pass has a
        // segment of the second pass within tolerance, and vice versa.
        let brute = self_overlap_index_brute(&c, 1e-3, 1e-6);
        for iv in &d.intervals {
            for i in iv.core.0..=iv.core.1 {
                assert_eq!(brute.multiplicity(i), 2);
            }
        }
    }

    #[test]
    fn figure_eight_has_two_arcs() {
        let c = synth(vec![teardrop(0, 0.0), teardrop(1, std::f64::consts::PI)], "a b");
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.strata.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(d.strata[&1].len(), 2);
        assert_eq!(d.word().to_string(), "a b");
    }

    #[test]
    fn spur_word_round_trips() {
        let arcs = vec![
            Arc::new(0, vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
            Arc::new(1, vec![vec![1.0, 0.0], vec![1.0, 1.0]]),
            Arc::new(2, vec![vec![1.0, 0.0], vec![2.0, 0.3]]),
        ];
        let c = synth(arcs, "a b b' c");
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.word().to_string(), "a b b' c");
        assert_eq!(d.strata[&1].len(), 2);
        assert_eq!(d.strata[&2].len(), 2);
    }

    #[test]
    fn stratum_invariants_hold() {
        let c = synth(vec![teardrop(0, 0.0), teardrop(1, std::f64::consts::PI)], "a b b' a' a");
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.word().to_string(), "a b b' a' a");
        // Strata and A₀ tile the parameter interval.
        let mut cover: Vec<(f64, f64)> = d.a0.clone();
        cover.extend(d.strata.values().flatten().copied());
        cover.sort_by(|x, y| x.0.total_cmp(&y.0));
        assert_eq!(cover[0].0, 0.0);
        assert_eq!(cover.last().unwrap().1, 1.0);
        for w in cover.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        for iv in &d.intervals {
            for i in iv.start + 1..iv.end {
                assert!(c.speed(i) > 1e-6);
            }
        }
    }

    #[test]
    fn near_parallel_arcs_are_rejected() {
        // Two segments leaving the origin 3° apart stay within tolerance well
        // outside the junction neighbourhood.
        let th: f64 = 3f64.to_radians();
        let arcs = vec![
            Arc::new(0, vec![vec![0.0, 0.0], vec![1.0, 0.0]]),
            Arc::new(1, vec![vec![0.0, 0.0], vec![th.cos(), th.sin()]]),
        ];
        let c = synth(arcs, "a a' b b'");
        assert!(matches!(
            decompose(&c, &DecomposeOptions::default()),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn transverse_crossing_splits_both_arcs() {
        let arcs = vec![
            Arc::new(0, vec![vec![0.0, 0.0], vec![2.0, 0.0]]),
            Arc::new(1, vec![vec![2.0, 0.0], vec![2.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]]),
        ];
        let c = synth(arcs, "a b");
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        // The crossing cuts each pass in two, and no piece repeats.
        assert_eq!(d.word().len(), 4);
        assert_eq!(d.arcs.len(), 4);
        assert_eq!(d.strata.keys().copied().collect::<Vec<_>>(), vec![1]);
    }
}
