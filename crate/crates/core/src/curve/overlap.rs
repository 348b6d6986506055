use rayon::prelude::*;

use super::sampled::SampledCurve;
use crate::geom::{dot, padded_box, point_segment, HashGrid};

/// A maximal run of consecutive segments `first..=last` lying within `ε` of
/// a sample point, not broken by a critical sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentRun {
    pub first: u32,
    pub last: u32,
    /// Segment of the run closest to the sample, and its distance.
    pub closest: u32,
    pub min_dist: f64,
}

impl SegmentRun {
    pub fn contains(&self, seg: u32) -> bool {
        (self.first..=self.last).contains(&seg)
    }
}

/// Preimage clusters of one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleClusters {
    pub runs: Vec<SegmentRun>,
    /// Index into `runs` of the run through the sample itself.
    pub own: Option<usize>,
}

impl SampleClusters {
    pub fn multiplicity(&self) -> usize {
        self.runs.len()
    }

    /// Runs other than the sample's own.
    pub fn partners(&self) -> impl Iterator<Item = &SegmentRun> {
        let own = self.own;
        self.runs
            .iter()
            .enumerate()
            .filter(move |(k, _)| Some(*k) != own)
            .map(|(_, r)| r)
    }
}

/// Per-sample multiplicities and cluster assignments at resolution `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapIndex {
    pub eps: f64,
    pub critical: Vec<bool>,
    pub samples: Vec<SampleClusters>,
}

impl OverlapIndex {
    pub fn multiplicity(&self, i: usize) -> usize {
        self.samples[i].multiplicity()
    }
}

/// Samples where the speed drops below `v_min` or the chord direction
/// reverses.
pub fn critical_samples(curve: &SampledCurve, v_min: f64) -> Vec<bool> {
    let n = curve.len();
    (0..n)
        .map(|i| {
            if curve.speed(i) < v_min {
                return true;
            }
            if i == 0 || i + 1 == n {
                return false;
            }
            let a: Vec<f64> = curve.point(i).iter().zip(curve.point(i - 1)).map(|(x, y)| x - y).collect();
            let b: Vec<f64> = curve.point(i + 1).iter().zip(curve.point(i)).map(|(x, y)| x - y).collect();
            dot(&a, &b) < 0.0
        })
        .collect()
}

fn group_runs(curve: &SampledCurve, i: usize, near: &[(u32, f64)], critical: &[bool]) -> SampleClusters {
    let mut runs: Vec<SegmentRun> = Vec::new();
    for &(seg, d) in near {
        match runs.last_mut() {
            Some(run) if seg == run.last + 1 && !critical[seg as usize] => {
                run.last = seg;
                if d < run.min_dist {
                    run.min_dist = d;
                    run.closest = seg;
                }
            }
            _ => runs.push(SegmentRun {
                first: seg,
                last: seg,
                closest: seg,
                min_dist: d,
            }),
        }
    }
    let segs = curve.segments() as u32;
    let own_seg = [i as u32, (i as u32).wrapping_sub(1)];
    let own = runs
        .iter()
        .position(|r| own_seg.iter().any(|&s| s < segs && r.contains(s)));
    SampleClusters { runs, own }
}

fn segment_distance(curve: &SampledCurve, p: &[f64], seg: usize) -> f64 {
    point_segment(p, curve.point(seg), curve.point(seg + 1)).0
}

/// For every sample, the segments within `eps` grouped into runs of
/// consecutive segments split at critical samples. Uses a spatial hash;
/// agrees exactly with [`self_overlap_index_brute`].
pub fn self_overlap_index(curve: &SampledCurve, eps: f64, v_min: f64) -> OverlapIndex {
    let critical = critical_samples(curve, v_min);
    let segs = curve.segments();
    let mean = curve.polyline_length() / segs as f64;
    let cell = eps.max(mean).max(1e-12);
    let mut grid = HashGrid::new(cell);
    for s in 0..segs {
        let (lo, hi) = padded_box(curve.point(s), curve.point(s + 1), eps);
        grid.insert_box(s as u32, &lo, &hi);
    }
    let samples = (0..curve.len())
        .into_par_iter()
        .map(|i| {
            let p = curve.point(i);
            let mut near: Vec<(u32, f64)> = grid
                .candidates(p)
                .iter()
                .map(|&s| (s, segment_distance(curve, p, s as usize)))
                .filter(|&(_, d)| d <= eps)
                .collect();
            near.sort_unstable_by_key(|&(s, _)| s);
            near.dedup_by_key(|&mut (s, _)| s);
            group_runs(curve, i, &near, &critical)
        })
        .collect();
    OverlapIndex { eps, critical, samples }
}

/// All-pairs reference for [`self_overlap_index`].
pub fn self_overlap_index_brute(curve: &SampledCurve, eps: f64, v_min: f64) -> OverlapIndex {
    let critical = critical_samples(curve, v_min);
    let samples = (0..curve.len())
        .map(|i| {
            let p = curve.point(i);
            let near: Vec<(u32, f64)> = (0..curve.segments())
                .map(|s| (s as u32, segment_distance(curve, p, s)))
                .filter(|&(_, d)| d <= eps)
                .collect();
            group_runs(curve, i, &near, &critical)
        })
        .collect();
    OverlapIndex { eps, critical, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::synth::{synth_curve, Arc, CurveSpec, SynthOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disjoint_segments_have_multiplicity_one() {
        let c = SampledCurve::from_points(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 1.0]).unwrap();
        let idx = self_overlap_index(&c, 1e-3, 1e-9);
        assert!((0..3).all(|i| idx.multiplicity(i) == 1));
    }

    #[test]
    fn out_and_back_has_multiplicity_two() {
        let spec = CurveSpec::from_word(
            2,
            vec![Arc::new(0, vec![vec![0.0, 0.0], vec![1.0, 0.0]])],
            &"a a'".parse().unwrap(),
        );
        let s = synth_curve(&spec, &SynthOptions { samples_per_unit: 64, junction_tol: 1e-3 }).unwrap();
        let idx = self_overlap_index(&s.curve, 1e-3, 1e-6);
        assert_eq!(idx.multiplicity(32), 2);
        assert_eq!(idx.multiplicity(100), 2);
        assert_eq!(idx, self_overlap_index_brute(&s.curve, 1e-3, 1e-6));
    }

    #[test]
    fn random_thousand_point_polyline_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pts = vec![0.0, 0.0];
        for _ in 1..1000 {
            let n = pts.len();
            let (x, y) = (pts[n - 2], pts[n - 1]);
            pts.push(x + rng.gen_range(-0.02..0.02));
            pts.push(y + rng.gen_range(-0.02..0.02));
        }
        let c = SampledCurve::from_points(2, pts).unwrap();
        let eps = 5e-3;
        assert_eq!(self_overlap_index(&c, eps, 1e-9), self_overlap_index_brute(&c, eps, 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hash_agrees_with_brute_force(
            dim in 2usize..5,
            steps in prop::collection::vec(prop::collection::vec(-0.05f64..0.05, 4), 20..120),
            eps in 1e-3f64..3e-2,
        ) {
            let mut pts = vec![0.0; dim];
            for s in &steps {
                let n = pts.len();
                let last: Vec<f64> = pts[n - dim..].to_vec();
                pts.extend(last.iter().zip(s).map(|(x, d)| x + d));
            }
            let c = SampledCurve::from_points(dim, pts).unwrap();
            prop_assert_eq!(self_overlap_index(&c, eps, 1e-9), self_overlap_index_brute(&c, eps, 1e-9));
        }
    }
}
