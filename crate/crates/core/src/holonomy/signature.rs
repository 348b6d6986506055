use rayon::prelude::*;

use crate::curve::SampledCurve;
use crate::{Error, Result};

/// Deepest signature level computed (level `k` stores `dᵏ` numbers).
pub const MAX_SIGNATURE_LEVEL: usize = 5;

/// Truncated path signature: level `k` holds the iterated integrals
/// `∫_{t₁<…<t_k} dx^{i₁}⋯dx^{i_k}`, indexed row-major by `(i₁, …, i_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTensor {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl SignatureTensor {
    /// The signature of a constant path: every level zero.
    pub fn trivial(dim: usize, depth: usize) -> Self {
        Self {
            dim,
            levels: (1..=depth).map(|k| vec![0.0; dim.pow(k as u32)]).collect(),
        }
    }

    /// Tensor exponential of a displacement: level `k` is `v^{⊗k}/k!`.
    pub fn of_segment(v: &[f64], depth: usize) -> Self {
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut prev = vec![1.0];
        for k in 1..=depth {
            let next: Vec<f64> = prev
                .iter()
                .flat_map(|&a| v.iter().map(move |&b| a * b / k as f64))
                .collect();
            levels.push(next.clone());
            prev = next;
        }
        Self { dim: v.len(), levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `k ≥ 1`.
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k - 1]
    }

    /// Chen's identity: the signature of `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.depth(), other.depth());
        let levels = (1..=self.depth())
            .map(|k| {
                let mut out: Vec<f64> = self.levels[k - 1].iter().zip(&other.levels[k - 1]).map(|(a, b)| a + b).collect();
                for i in 1..k {
                    let (a, b) = (&self.levels[i - 1], &other.levels[k - i - 1]);
                    let nb = b.len();
                    for (ia, &x) in a.iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for (o, &y) in out[ia * nb..(ia + 1) * nb].iter_mut().zip(b) {
                            *o += x * y;
                        }
                    }
                }
                out
            })
            .collect();
        Self { dim: self.dim, levels }
    }

    /// Largest absolute entry over all levels.
    pub fn max_abs(&self) -> f64 {
        self.levels.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Largest absolute entry of level `k`.
    pub fn level_max_abs(&self, k: usize) -> f64 {
        self.level(k).iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// `(S^{ij} − S^{ji}) / 2`, the signed area swept in the `(i, j)` plane.
    pub fn area(&self, i: usize, j: usize) -> f64 {
        let s = self.level(2);
        0.5 * (s[i * self.dim + j] - s[j * self.dim + i])
    }
}

/// Signature of the polyline through `points`, combined pairwise so that
/// rounding grows with the logarithm of the length.
pub fn polyline_signature(dim: usize, points: &[f64], depth: usize) -> Result<SignatureTensor> {
    if depth == 0 || depth > MAX_SIGNATURE_LEVEL {
        return Err(Error::Inconsistent(format!(
            "signature depth must be in 1..={MAX_SIGNATURE_LEVEL}, got {depth}"
        )));
    }
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::InvalidCurve("point array does not match the dimension".into()));
    }
    let n = points.len() / dim;
    Ok((0..n.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let v: Vec<f64> = (0..dim).map(|k| points[(i + 1) * dim + k] - points[i * dim + k]).collect();
            SignatureTensor::of_segment(&v, depth)
        })
        .reduce(|| SignatureTensor::trivial(dim, depth), |a, b| a.concat(&b)))
}

/// Signature of the polyline through a curve's samples.
pub fn signature(curve: &SampledCurve, depth: usize) -> Result<SignatureTensor> {
    polyline_signature(curve.dim(), curve.points_flat(), depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn segment_levels_are_scaled_powers() {
        let s = SignatureTensor::of_segment(&[2.0, -1.0], 3);
        assert_eq!(s.level(1), &[2.0, -1.0]);
        assert_eq!(s.level(2), &[2.0, -1.0, -1.0, 0.5]);
        assert!((s.level(3)[0] - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unit_square_area() {
        let pts = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let s = polyline_signature(2, &pts, 4).unwrap();
        assert!((s.area(0, 1) - 1.0).abs() < 1e-15);
        assert!(s.level_max_abs(1) < 1e-15);
    }

    #[test]
    fn depth_is_bounded() {
        assert!(polyline_signature(2, &[0.0, 0.0, 1.0, 1.0], 6).is_err());
        assert!(polyline_signature(2, &[0.0, 0.0, 1.0, 1.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn collinear_steps_give_the_segment_signature(steps in proptest::collection::vec(0.01f64..1.0, 1..8)) {
            let dir = [0.6, -0.8];
            let mut pts = vec![0.0, 0.0];
            let mut at = 0.0;
            for s in &steps {
                at += s;
                pts.extend_from_slice(&[dir[0] * at, dir[1] * at]);
            }
            let whole = SignatureTensor::of_segment(&[dir[0] * at, dir[1] * at], 4);
            let s = polyline_signature(2, &pts, 4).unwrap();
            for k in 1..=4 {
                for (a, b) in s.level(k).iter().zip(whole.level(k)) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn retraced_polylines_have_trivial_signature(
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..12)
        ) {
            let mut pts: Vec<f64> = vec![0.0, 0.0, 0.0];
            for (x, y, z) in &raw {
                pts.extend_from_slice(&[*x, *y, *z]);
            }
            let back: Vec<f64> = pts.chunks(3).rev().skip(1).flatten().cloned().collect();
            pts.extend(back);
            let s = polyline_signature(3, &pts, 4).unwrap();
            prop_assert!(s.max_abs() < 1e-12, "{}", s.max_abs());
        }
    }
}
