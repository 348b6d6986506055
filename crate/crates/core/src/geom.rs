//! Small dense-vector helpers shared by the geometric modules.
//!
//! Points live in ℝᵈ for a runtime `d`, so everything here works on slices.

use std::collections::HashMap;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

/// Norm of the wedge product `a ∧ b`, i.e. the root sum of squares of all
/// 2×2 minors of the matrix with columns `a` and `b`.
pub fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len();
    let mut acc = 0.0;
    for p in 0..d {
        for q in (p + 1)..d {
            let m = a[p] * b[q] - a[q] * b[p];
            acc += m * m;
        }
    }
    acc.sqrt()
}

/// Distance from `p` to the segment `[a, b]` and the clamped segment
/// parameter of the closest point.
pub fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for k in 0..p.len() {
        let e = b[k] - a[k];
        ab2 += e * e;
        ap_ab += (p[k] - a[k]) * e;
    }
    let w = if ab2 > 0.0 {
        (ap_ab / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut d2 = 0.0;
    for k in 0..p.len() {
        let c = a[k] + w * (b[k] - a[k]);
        d2 += (p[k] - c) * (p[k] - c);
    }
    (d2.sqrt(), w)
}

/// Cubic Hermite interpolation on `[0, 1]` with end slopes already scaled to
/// the unit interval. Returns the value and the derivative in `τ`.
pub fn hermite(p0: &[f64], p1: &[f64], m0: &[f64], m1: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>) {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + tau;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let d00 = 6.0 * t2 - 6.0 * tau;
    let d10 = 3.0 * t2 - 4.0 * tau + 1.0;
    let d01 = -6.0 * t2 + 6.0 * tau;
    let d11 = 3.0 * t2 - 2.0 * tau;
    let d = p0.len();
    let mut x = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    for k in 0..d {
        x.push(h00 * p0[k] + h10 * m0[k] + h01 * p1[k] + h11 * m1[k]);
        v.push(d00 * p0[k] + d10 * m0[k] + d01 * p1[k] + d11 * m1[k]);
    }
    (x, v)
}

/// Distance between the segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_segment(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return dist(p0, q0);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let mut acc = 0.0;
    for k in 0..p0.len() {
        let x = p0[k] + s * d1[k] - q0[k] - t * d2[k];
        acc += x * x;
    }
    acc.sqrt()
}

/// Distance from `p` to a polyline given as a point sequence.
pub fn point_polyline(p: &[f64], line: &[Vec<f64>]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => dist(p, &line[0]),
        _ => line
            .windows(2)
            .map(|w| point_segment(p, &w[0], &w[1]).0)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Directed Hausdorff distance from the vertices of `a` to the polyline `b`.
pub fn directed_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().map(|p| point_polyline(p, b)).fold(0.0, f64::max)
}

/// Uniform hash grid over the first (at most three) coordinates.
///
/// Projection never increases distances, so any item within `r` of a query
/// point in ℝᵈ is found among the candidates of the projected query.
#[derive(Debug, Clone)]
pub struct HashGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl HashGrid {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key_of(&self, p: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (slot, x) in k.iter_mut().zip(p) {
            *slot = (x / self.cell).floor() as i64;
        }
        k
    }

    /// Insert `id` into every cell touched by the bounding box `[lo, hi]`.
    pub fn insert_box(&mut self, id: u32, lo: &[f64], hi: &[f64]) {
        let a = self.key_of(lo);
        let b = self.key_of(hi);
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    self.cells.entry([x, y, z]).or_default().push(id);
                }
            }
        }
    }

    /// Sorted, deduplicated ids stored in any cell meeting the box `[lo, hi]`.
    pub fn candidates_box(&self, lo: &[f64], hi: &[f64]) -> Vec<u32> {
        let a = self.key_of(lo);
        let b = self.key_of(hi);
        let mut out = Vec::new();
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    if let Some(ids) = self.cells.get(&[x, y, z]) {
                        out.extend_from_slice(ids);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Candidate ids stored in the cell containing `p`.
    pub fn candidates(&self, p: &[f64]) -> &[u32] {
        self.cells
            .get(&self.key_of(p))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Bounding box of a segment, grown by `pad` on every side.
pub fn padded_box(a: &[f64], b: &[f64], pad: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = a.iter().zip(b).map(|(x, y)| x.min(*y) - pad).collect();
    let hi = a.iter().zip(b).map(|(x, y)| x.max(*y) + pad).collect();
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_clamps() {
        let (d, w) = point_segment(&[2.0, 1.0], &[0.0, 0.0], &[1.0, 0.0]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w, 1.0);
        let (d, w) = point_segment(&[0.5, -3.0], &[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(d, 3.0);
        assert_eq!(w, 0.5);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        // x(τ) = τ³ has slopes 0 and 3 at the ends.
        let (x, v) = hermite(&[0.0], &[1.0], &[0.0], &[3.0], 0.5);
        assert!((x[0] - 0.125).abs() < 1e-15);
        assert!((v[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn segment_pairs() {
        // Crossing segments touch.
        assert!(segment_segment(&[0.0, -1.0], &[0.0, 1.0], &[-1.0, 0.0], &[1.0, 0.0]) < 1e-15);
        // Parallel offset.
        assert!((segment_segment(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 2.0], &[3.0, 2.0]) - 2.0).abs() < 1e-15);
        // Endpoint to endpoint.
        let d = segment_segment(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0], &[3.0, 5.0]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        // Skew lines in space.
        let d = segment_segment(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.5, -1.0, 1.0], &[0.5, 1.0, 1.0]);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wedge_of_parallel_vectors_vanishes() {
        assert_eq!(wedge_norm(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 0.0);
        assert!((wedge_norm(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
