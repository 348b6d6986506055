use std::collections::BTreeMap;

use crate::curve::{ArcDecomposition, ArclengthTable, Path, SampledCurve};
use crate::geom::{dist, dot, norm, padded_box, point_polyline, point_segment, HashGrid};
use crate::reparam::bump_unchecked;
use crate::{Error, Result};

use super::connection::ConnectionField;
use super::group::{GroupKind, Mat};

/// Fraction of each arc's length, at either end, where a tube field vanishes.
pub const TUBE_END_MARGIN: f64 = 0.1;

/// Tube radius as a fraction of the smallest distance between one arc's
/// active middle and any other arc.
pub const TUBE_RADIUS_FRACTION: f64 = 1.0 / 3.0;

/// Smooth profile along the arc: positive on the open middle, zero with all
/// derivatives outside it.
fn along(sigma: f64) -> f64 {
    let a = TUBE_END_MARGIN;
    let u = (sigma - a) / (1.0 - 2.0 * a);
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

/// `∫₀¹ along(σ) dσ` by composite Gauss–Legendre.
fn along_integral() -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
        (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
        (0.5, 0.284_444_444_444_444_4),
        (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
        (0.953_089_922_969_332, 0.118_463_442_528_094_5),
    ];
    let panels = 256;
    let h = 1.0 / panels as f64;
    (0..panels)
        .map(|k| NODES.iter().map(|&(x, w)| w * along((k as f64 + x) * h)).sum::<f64>() * h)
        .sum()
}

/// Radial cutoff: one inside a third of the radius, zero beyond it.
fn across(u: f64) -> f64 {
    if u <= 1.0 / 3.0 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        1.0 - bump_unchecked((u - 1.0 / 3.0) * 1.5)
    }
}

/// One arc with its constant algebra element.
#[derive(Debug, Clone)]
struct Tube {
    arc: SampledCurve,
    table: ArclengthTable,
    xi: Vec<f64>,
    /// `∫ along(σ) dl` over the arc.
    norm: f64,
}

/// Bump-supported fields on disjoint tubes around embedded arcs. On its own
/// arc, tube `i` is `ξᵢ · along(σ) τ / N`, so transport across the arc,
/// which only ever sees multiples of `ξᵢ`, is exactly `exp(ξᵢ)`.
#[derive(Debug, Clone)]
pub(crate) struct TubeField {
    tubes: Vec<Tube>,
    radius: f64,
    /// Segments of every tube's active middle; ids index into `index`,
    /// which holds `(tube, segment)`.
    grid: HashGrid,
    index: Vec<(usize, usize)>,
}

impl TubeField {
    pub(crate) fn radius(&self) -> f64 {
        self.radius
    }

    /// Closest point on tube `k`'s arc to `x`, refined from the chord guess.
    fn project(&self, k: usize, seg: usize, frac: f64, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let arc = &self.tubes[k].arc;
        let (lo, hi) = (arc.param(seg), arc.param(seg + 1));
        let mut t = lo + frac * (hi - lo);
        let (mut p, mut v) = arc.eval(t);
        for _ in 0..8 {
            let v2 = dot(&v, &v);
            if v2 == 0.0 {
                break;
            }
            let r: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            let step = dot(&r, &v) / v2;
            let next = (t + step).clamp(0.0, 1.0);
            let moved = (next - t).abs();
            t = next;
            (p, v) = arc.eval(t);
            if moved <= 1e-15 {
                break;
            }
        }
        (t, p, v)
    }

    pub(crate) fn add_coefficients(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let cands = self.grid.candidates(x);
        if cands.is_empty() {
            return;
        }
        let mut best: BTreeMap<usize, (f64, usize, f64)> = BTreeMap::new();
        for &id in cands {
            let (k, seg) = self.index[id as usize];
            let arc = &self.tubes[k].arc;
            let (d, w) = point_segment(x, arc.point(seg), arc.point(seg + 1));
            let e = best.entry(k).or_insert((f64::INFINITY, 0, 0.0));
            if d < e.0 {
                *e = (d, seg, w);
            }
        }
        for (k, (d, seg, frac)) in best {
            if d >= self.radius {
                continue;
            }
            let tube = &self.tubes[k];
            let (t, p, tangent) = self.project(k, seg, frac, x);
            let speed = norm(&tangent);
            if speed == 0.0 {
                continue;
            }
            let sigma = tube.arc.arclength_at(&tube.table, t) / tube.table.total();
            let w = along(sigma) * across(dist(x, &p) / self.radius);
            if w == 0.0 {
                continue;
            }
            let flow = w * dot(&tangent, v) / (speed * tube.norm);
            for (o, xi) in out.iter_mut().zip(&tube.xi) {
                *o += flow * xi;
            }
        }
    }
}

/// A connection whose transport around the loop equals the word map of the
/// loop's word at `target`, realised by tube fields around the arcs.
///
/// Each arc `i` carries `ξᵢ = log gᵢ` times a bump in arclength (zero on the
/// outer tenth at either end) times a radial cutoff of radius
/// `⅓ · min distance` from its middle to every other arc. Letters missing
/// from `target` get the identity.
pub fn distinguishing_connection(
    curve: &SampledCurve,
    decomp: &ArcDecomposition,
    group: GroupKind,
    target: &BTreeMap<u32, Mat>,
) -> Result<ConnectionField> {
    let dim = curve.dim();
    let id = group.identity();
    if target.values().all(|g| (g - &id).norm() == 0.0) {
        return Ok(ConnectionField::zero(group, dim));
    }
    let mut arcs: Vec<(u32, SampledCurve)> = Vec::new();
    for iv in &decomp.intervals {
        if iv.letter.inverse || arcs.iter().any(|(a, _)| *a == iv.letter.arc) {
            continue;
        }
        arcs.push((iv.letter.arc, curve.slice(iv.start, iv.end)?));
    }
    let tables: Vec<ArclengthTable> = arcs.iter().map(|(_, c)| c.arclength_table()).collect();
    let middle = |k: usize| -> Vec<usize> {
        let total = tables[k].total();
        (0..arcs[k].1.len())
            .filter(|&j| {
                let s = tables[k].at_sample(j) / total;
                (TUBE_END_MARGIN..=1.0 - TUBE_END_MARGIN).contains(&s)
            })
            .collect()
    };
    let mids: Vec<Vec<usize>> = (0..arcs.len()).map(middle).collect();

    let polylines: Vec<Vec<Vec<f64>>> = arcs.iter().map(|(_, c)| c.point_vec()).collect();
    let mut sep = f64::INFINITY;
    for k in 0..arcs.len() {
        for &j in &mids[k] {
            let p = arcs[k].1.point(j);
            for (m, line) in polylines.iter().enumerate() {
                if m != k {
                    sep = sep.min(point_polyline(p, line));
                }
            }
        }
    }
    if !sep.is_finite() {
        // A single arc: nothing to keep apart from.
        sep = tables.iter().map(|t| t.total()).fold(f64::INFINITY, f64::min) * 0.3;
    }
    let radius = TUBE_RADIUS_FRACTION * sep;
    if !(radius > 1e-9) {
        return Err(Error::ArcsTooClose(sep));
    }

    let ni = along_integral();
    let mut tubes = Vec::new();
    let mut grid = HashGrid::new(radius);
    let mut index = Vec::new();
    for (k, ((arc_id, arc), table)) in arcs.into_iter().zip(tables).enumerate() {
        let Some(g) = target.get(&arc_id) else { continue };
        let xi = group.coordinates(&group.log(g)?);
        if xi.iter().all(|&c| c == 0.0) {
            continue;
        }
        let mid = &mids[k];
        let slot = tubes.len();
        if let (Some(&first), Some(&last)) = (mid.first(), mid.last()) {
            for seg in first.saturating_sub(1)..(last + 1).min(arc.len() - 1) {
                let (lo, hi) = padded_box(arc.point(seg), arc.point(seg + 1), radius);
                grid.insert_box(index.len() as u32, &lo, &hi);
                index.push((slot, seg));
            }
        }
        let norm = table.total() * ni;
        tubes.push(Tube { arc, table, xi, norm });
    }
    Ok(ConnectionField::with_tubes(
        group,
        dim,
        TubeField {
            tubes,
            radius,
            grid,
            index,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::corpus::{spec_for, word_from_names};
    use crate::curve::{decompose, synth_curve, DecomposeOptions, SynthOptions};
    use crate::holonomy::{distance_from_identity, transport, word_map_eval};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(names: &str) -> (SampledCurve, ArcDecomposition) {
        let c = synth_curve(&spec_for(2, &word_from_names(names)), &SynthOptions::default())
            .unwrap()
            .curve;
        let d = decompose(&c, &DecomposeOptions::default()).unwrap();
        (c, d)
    }

    #[test]
    fn along_profile_integrates_consistently() {
        let ni = along_integral();
        assert!(ni > 0.0 && ni < 1.0 - 2.0 * TUBE_END_MARGIN);
        assert_eq!(along(0.05), 0.0);
        assert_eq!(along(0.95), 0.0);
    }

    #[test]
    fn identity_target_gives_zero_connection() {
        let (c, d) = setup("p0 p1 p0' p1'");
        let g = GroupKind::SU2;
        let target = BTreeMap::from([(0, g.identity()), (1, g.identity())]);
        let conn = distinguishing_connection(&c, &d, g, &target).unwrap();
        assert!(conn.is_explicit());
        assert_eq!(transport(&c, &conn, 64).unwrap().u, g.identity());
    }

    #[test]
    fn single_arc_transport_hits_the_target() {
        let (c, d) = setup("p0");
        let g = GroupKind::SU2;
        let xi = g.algebra_element(&[0.4, -0.3, 0.9]);
        let target = BTreeMap::from([(0, g.exp(&xi))]);
        let conn = distinguishing_connection(&c, &d, g, &target).unwrap();
        let u = transport(&c, &conn, c.segments()).unwrap().u;
        assert!((u - &target[&0]).norm() < 1e-4);
    }

    #[test]
    fn commutator_transport_matches_the_word_map() {
        let (c, d) = setup("p0 p1 p0' p1'");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in [GroupKind::SU2, GroupKind::SO3] {
            let target: BTreeMap<u32, Mat> = (0..2).map(|a| (a, g.random_element(&mut rng))).collect();
            let conn = distinguishing_connection(&c, &d, g, &target).unwrap();
            assert!(conn.tube_radius().unwrap() > 0.0);
            let u = transport(&c, &conn, c.segments()).unwrap().u;
            let w = word_map_eval(g, &d.word(), &target).unwrap();
            assert!((&u - &w).norm() < 1e-4, "{g}: {}", (&u - &w).norm());
            assert!(distance_from_identity(&w) > 1e-2);
        }
    }
}
