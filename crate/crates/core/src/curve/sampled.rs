use crate::geom::{dist, hermite, norm};
use crate::{Error, Result};

/// Anything that can be evaluated as a C¹ path on `[0, 1]`.
pub trait Path: Sync {
    fn dim(&self) -> usize;

    /// Write `γ(t)` into `x` and `γ̇(t)` into `v`.
    fn eval_into(&self, t: f64, x: &mut [f64], v: &mut [f64]);

    fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; self.dim()];
        let mut v = vec![0.0; self.dim()];
        self.eval_into(t, &mut x, &mut v);
        (x, v)
    }
}

/// A path given by a closure returning position and velocity.
pub struct FnPath<F> {
    dim: usize,
    f: F,
}

impl<F> FnPath<F>
where
    F: Fn(f64, &mut [f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Path for FnPath<F>
where
    F: Fn(f64, &mut [f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, t: f64, x: &mut [f64], v: &mut [f64]) {
        (self.f)(t, x, v)
    }
}

/// A C¹ curve on `[0, 1]` sampled on a strictly increasing grid, with
/// tangents stored alongside the points. Between samples the curve is the
/// cubic Hermite interpolant of the stored points and tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    dim: usize,
    params: Vec<f64>,
    points: Vec<f64>,
    tangents: Vec<f64>,
}

impl SampledCurve {
    pub fn new(dim: usize, params: Vec<f64>, points: Vec<f64>, tangents: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCurve("dimension must be positive".into()));
        }
        let n = params.len();
        if n < 2 {
            return Err(Error::InvalidCurve("need at least two samples".into()));
        }
        if points.len() != n * dim || tangents.len() != n * dim {
            return Err(Error::InvalidCurve(format!(
                "{n} params but {} point and {} tangent coordinates in dimension {dim}",
                points.len(),
                tangents.len()
            )));
        }
        if params[0] != 0.0 || params[n - 1] != 1.0 {
            return Err(Error::InvalidCurve("parameter grid must run from 0 to 1".into()));
        }
        if params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurve("parameter grid must be strictly increasing".into()));
        }
        if let Some(x) = points.iter().chain(&tangents).find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*x));
        }
        Ok(Self {
            dim,
            params,
            points,
            tangents,
        })
    }

    /// Uniform grid `tᵢ = i/N` with tangents from central differences
    /// (one-sided at the ends).
    pub fn from_points(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = points.len() / dim.max(1);
        let params = uniform_grid(n);
        let mut tangents = vec![0.0; points.len()];
        if n >= 2 {
            for i in 0..n {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                let dt = params[b] - params[a];
                for k in 0..dim {
                    tangents[i * dim + k] = (points[b * dim + k] - points[a * dim + k]) / dt;
                }
            }
        }
        Self::new(dim, params, points, tangents)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples, `N + 1`.
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of grid intervals, `N`.
    pub fn segments(&self) -> usize {
        self.params.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.tangents[i * self.dim..(i + 1) * self.dim]
    }

    pub fn speed(&self, i: usize) -> f64 {
        norm(self.tangent(i))
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn tangents_flat(&self) -> &[f64] {
        &self.tangents
    }

    pub fn point_vec(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// Closed with vanishing end tangents, compared exactly.
    pub fn is_loop(&self) -> bool {
        let n = self.len() - 1;
        self.point(0) == self.point(n)
            && self.tangent(0).iter().all(|&x| x == 0.0)
            && self.tangent(n).iter().all(|&x| x == 0.0)
    }

    /// Largest `‖tangentᵢ₊₁ − tangentᵢ‖ / Δt` over the grid.
    pub fn c1_modulus(&self) -> f64 {
        (0..self.segments())
            .map(|i| dist(self.tangent(i + 1), self.tangent(i)) / (self.params[i + 1] - self.params[i]))
            .fold(0.0, f64::max)
    }

    /// Index `k` with `params[k] ≤ t ≤ params[k + 1]`.
    pub fn interval_of(&self, t: f64) -> usize {
        let t = t.clamp(0.0, 1.0);
        let k = self.params.partition_point(|&p| p <= t);
        k.saturating_sub(1).min(self.segments() - 1)
    }

    /// `|dp/dτ|` of the Hermite segment `k` at local parameter `τ ∈ [0, 1]`.
    fn segment_speed(&self, k: usize, tau: f64) -> f64 {
        let h = self.params[k + 1] - self.params[k];
        let t2 = tau * tau;
        let a = 6.0 * t2 - 6.0 * tau;
        let b = (3.0 * t2 - 4.0 * tau + 1.0) * h;
        let c = (3.0 * t2 - 2.0 * tau) * h;
        let (p0, p1) = (self.point(k), self.point(k + 1));
        let (m0, m1) = (self.tangent(k), self.tangent(k + 1));
        let mut acc = 0.0;
        for q in 0..self.dim {
            let v = a * (p0[q] - p1[q]) + b * m0[q] + c * m1[q];
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Arclength of the Hermite segment `k` over `[0, τ]`.
    fn segment_arclength(&self, k: usize, tau: f64) -> f64 {
        let h = tau / GAUSS_PANELS as f64;
        let mut acc = 0.0;
        for p in 0..GAUSS_PANELS {
            let a = p as f64 * h;
            acc += GAUSS5.iter().map(|&(x, w)| w * self.segment_speed(k, a + h * x)).sum::<f64>();
        }
        acc * h
    }

    /// Cumulative arclength of the Hermite interpolant at every sample,
    /// by composite five-point Gauss–Legendre quadrature per segment.
    pub fn arclength_table(&self) -> ArclengthTable {
        let mut cumulative = Vec::with_capacity(self.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..self.segments() {
            acc += self.segment_arclength(k, 1.0);
            cumulative.push(acc);
        }
        ArclengthTable {
            params: self.params.clone(),
            cumulative,
        }
    }

    /// `l(t)` on the Hermite interpolant; agrees with `table` at samples.
    pub fn arclength_at(&self, table: &ArclengthTable, t: f64) -> f64 {
        let k = self.interval_of(t);
        let tau = ((t - self.params[k]) / (self.params[k + 1] - self.params[k])).clamp(0.0, 1.0);
        if tau == 1.0 {
            return table.cumulative[k + 1];
        }
        table.cumulative[k] + self.segment_arclength(k, tau)
    }

    /// Arclength of the Hermite segment `k` over `[a, b]`, signed, by two
    /// Gauss panels; for the short steps of a Newton iteration.
    fn segment_arclength_between(&self, k: usize, a: f64, b: f64) -> f64 {
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for p in 0..2 {
            let lo = a + p as f64 * h;
            acc += GAUSS5.iter().map(|&(x, w)| w * self.segment_speed(k, lo + h * x)).sum::<f64>();
        }
        acc * h
    }

    /// Segment and local parameter of the smallest `t` with `l(t) = s`.
    fn locate_arclength(&self, table: &ArclengthTable, s: f64) -> (usize, f64) {
        let c = &table.cumulative;
        let s = s.clamp(0.0, table.total());
        let k = c.partition_point(|&x| x < s);
        if k == 0 {
            return (0, 0.0);
        }
        let seg = k - 1;
        if s == c[k] {
            return (seg, 1.0);
        }
        let (target, len) = (s - c[seg], c[k] - c[seg]);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut tau = (target / len).clamp(0.0, 1.0);
        // One accurate evaluation, then short increments as Newton settles.
        let mut g = self.segment_arclength(seg, tau) - target;
        for _ in 0..60 {
            if g.abs() <= 1e-15 * len {
                break;
            }
            if g < 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            if hi - lo <= 1e-16 {
                break;
            }
            let v = self.segment_speed(seg, tau);
            let newton = tau - g / v;
            let next = if v > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            g += self.segment_arclength_between(seg, tau, next);
            tau = next;
        }
        (seg, tau)
    }

    /// Smallest `t` with `l(t) = s`, solved on the Hermite interpolant
    /// rather than interpolated from the table, so `s ↦ γ(t(s))` is smooth
    /// wherever the speed is positive. `table` must be this curve's.
    pub fn param_at_arclength(&self, table: &ArclengthTable, s: f64) -> f64 {
        let (seg, tau) = self.locate_arclength(table, s);
        if tau == 1.0 {
            return self.params[seg + 1];
        }
        self.params[seg] + tau * (self.params[seg + 1] - self.params[seg])
    }

    /// `γ(t(s))` written into `out`, without allocating.
    pub fn point_at_arclength_into(&self, table: &ArclengthTable, s: f64, out: &mut [f64]) {
        let (seg, tau) = self.locate_arclength(table, s);
        self.segment_point_into(seg, tau, out);
    }

    /// The Hermite segment `k` at local parameter `τ`.
    fn segment_point_into(&self, k: usize, tau: f64, out: &mut [f64]) {
        if tau == 0.0 {
            out.copy_from_slice(self.point(k));
            return;
        }
        if tau == 1.0 {
            out.copy_from_slice(self.point(k + 1));
            return;
        }
        let h = self.params[k + 1] - self.params[k];
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + tau) * h;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * h;
        let (p0, p1) = (self.point(k), self.point(k + 1));
        let (m0, m1) = (self.tangent(k), self.tangent(k + 1));
        for q in 0..self.dim {
            out[q] = h00 * p0[q] + h10 * m0[q] + h01 * p1[q] + h11 * m1[q];
        }
    }

    /// Sum of the chord lengths between consecutive samples.
    pub fn polyline_length(&self) -> f64 {
        (0..self.segments())
            .map(|i| dist(self.point(i), self.point(i + 1)))
            .sum()
    }

    /// The same curve traversed backwards, `t ↦ γ(1 − t)`.
    pub fn reverse(&self) -> Self {
        let n = self.len();
        let d = self.dim;
        let params = if is_uniform(&self.params) {
            uniform_grid(n)
        } else {
            self.params.iter().rev().map(|t| 1.0 - t).collect()
        };
        let mut points = Vec::with_capacity(self.points.len());
        let mut tangents = Vec::with_capacity(self.tangents.len());
        for i in (0..n).rev() {
            points.extend_from_slice(&self.points[i * d..(i + 1) * d]);
            tangents.extend(self.tangents[i * d..(i + 1) * d].iter().map(|x| -x));
        }
        let mut params = params;
        params[0] = 0.0;
        params[n - 1] = 1.0;
        Self {
            dim: d,
            params,
            points,
            tangents,
        }
    }

    /// `self · other`: `self` on `[0, ½]`, `other` on `[½, 1]`.
    ///
    /// Requires `self(1) = other(0)` within `tol` and vanishing tangents at
    /// both ends of the join.
    pub fn concat(&self, other: &SampledCurve, tol: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidCurve("dimension mismatch in concat".into()));
        }
        let last = self.len() - 1;
        let gap = dist(self.point(last), other.point(0));
        if gap > tol {
            return Err(Error::EndpointMismatch(gap));
        }
        let tan = norm(self.tangent(last)).max(norm(other.tangent(0)));
        if tan > tol {
            return Err(Error::EndpointMismatch(tan));
        }
        let d = self.dim;
        let mut params: Vec<f64> = self.params.iter().map(|t| 0.5 * t).collect();
        params.extend(other.params[1..].iter().map(|t| 0.5 + 0.5 * t));
        if is_uniform(&self.params) && is_uniform(&other.params) && self.len() == other.len() {
            params = uniform_grid(params.len());
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[d..]);
        let mut tangents: Vec<f64> = self.tangents.iter().map(|x| 2.0 * x).collect();
        tangents.extend(other.tangents[d..].iter().map(|x| 2.0 * x));
        let n = params.len();
        params[n - 1] = 1.0;
        Self::new(d, params, points, tangents)
    }

    /// Sub-curve between sample indices `a < b`, reparametrised onto `[0, 1]`.
    pub fn slice(&self, a: usize, b: usize) -> Result<Self> {
        if !(a < b && b < self.len()) {
            return Err(Error::Inconsistent(format!("bad slice [{a}, {b}]")));
        }
        let (t0, t1) = (self.params[a], self.params[b]);
        let w = t1 - t0;
        let d = self.dim;
        let mut params: Vec<f64> = self.params[a..=b].iter().map(|t| (t - t0) / w).collect();
        params[0] = 0.0;
        *params.last_mut().unwrap() = 1.0;
        let points = self.points[a * d..(b + 1) * d].to_vec();
        let tangents = self.tangents[a * d..(b + 1) * d].iter().map(|x| x * w).collect();
        Self::new(d, params, points, tangents)
    }

    /// Resample onto the uniform grid with `n + 1` points by Hermite
    /// evaluation.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let params = uniform_grid(n + 1);
        let mut points = Vec::with_capacity((n + 1) * self.dim);
        let mut tangents = Vec::with_capacity((n + 1) * self.dim);
        let mut x = vec![0.0; self.dim];
        let mut v = vec![0.0; self.dim];
        for &t in &params {
            self.eval_into(t, &mut x, &mut v);
            points.extend_from_slice(&x);
            tangents.extend_from_slice(&v);
        }
        Self::new(self.dim, params, points, tangents)
    }
}

impl Path for SampledCurve {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, t: f64, x: &mut [f64], v: &mut [f64]) {
        let k = self.interval_of(t);
        let (t0, t1) = (self.params[k], self.params[k + 1]);
        let h = t1 - t0;
        let tau = ((t - t0) / h).clamp(0.0, 1.0);
        let m0: Vec<f64> = self.tangent(k).iter().map(|m| m * h).collect();
        let m1: Vec<f64> = self.tangent(k + 1).iter().map(|m| m * h).collect();
        let (px, pv) = hermite(self.point(k), self.point(k + 1), &m0, &m1, tau);
        x.copy_from_slice(&px);
        for (o, dv) in v.iter_mut().zip(pv) {
            *o = dv / h;
        }
    }
}

/// Cumulative arclength `l(tᵢ)` of a sampled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ArclengthTable {
    params: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ArclengthTable {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn at_sample(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    /// `l(t)`, linear between samples.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.params.partition_point(|&p| p <= t).saturating_sub(1);
        let k = k.min(self.params.len() - 2);
        let w = (t - self.params[k]) / (self.params[k + 1] - self.params[k]);
        self.cumulative[k] + w * (self.cumulative[k + 1] - self.cumulative[k])
    }

    /// Smallest `t` with `l(t) = s`.
    pub fn inverse(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total());
        let k = self.cumulative.partition_point(|&c| c < s);
        if k == 0 {
            return self.params[0];
        }
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        if s == c1 {
            return self.params[k];
        }
        let w = if c1 > c0 { (s - c0) / (c1 - c0) } else { 1.0 };
        self.params[k - 1] + w * (self.params[k] - self.params[k - 1])
    }
}

/// Panels per segment in the arclength quadrature; several, so that a
/// speed minimum inside a segment is integrated accurately.
const GAUSS_PANELS: usize = 8;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

pub fn uniform_grid(n: usize) -> Vec<f64> {
    let m = (n.max(2) - 1) as f64;
    (0..n).map(|i| i as f64 / m).collect()
}

fn is_uniform(params: &[f64]) -> bool {
    let m = (params.len() - 1) as f64;
    params
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - i as f64 / m).abs() <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn segment(n: usize) -> SampledCurve {
        let points: Vec<f64> = uniform_grid(n).iter().flat_map(|&t| [t, 0.0]).collect();
        let tangents: Vec<f64> = (0..n).flat_map(|_| [1.0, 0.0]).collect();
        SampledCurve::new(2, uniform_grid(n), points, tangents).unwrap()
    }

    fn smooth_circle(r: f64, n: usize) -> SampledCurve {
        // Angle θ(t) = 2π·(t − sin(2πt)/2π) so the speed vanishes at the ends.
        let params = uniform_grid(n);
        let mut points = Vec::new();
        let mut tangents = Vec::new();
        for &t in &params {
            let th = TAU * (t - (TAU * t).sin() / TAU);
            let dth = TAU * (1.0 - (TAU * t).cos());
            points.extend([r * th.cos(), r * th.sin()]);
            tangents.extend([-r * th.sin() * dth, r * th.cos() * dth]);
        }
        SampledCurve::new(2, params, points, tangents).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampledCurve::new(2, vec![0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(SampledCurve::new(1, vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4], vec![0.0; 4]).is_err());
        assert!(SampledCurve::new(1, vec![0.0, 1.0], vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn unit_segment_arclength() {
        let table = segment(33).arclength_table();
        assert!((table.total() - 1.0).abs() < 1e-15);
        assert!((table.eval(0.3) - 0.3).abs() < 1e-15);
        assert!((table.inverse(0.7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn dwell_keeps_arclength_constant() {
        let n = 9;
        let params = uniform_grid(n);
        let mut points = Vec::new();
        let mut tangents = Vec::new();
        for &t in &params {
            let x = (2.0 * t).min(1.0);
            points.push(x);
            tangents.push(if t < 0.5 { 2.0 } else { 0.0 });
        }
        tangents[4] = 0.0;
        let c = SampledCurve::new(1, params, points, tangents).unwrap();
        let table = c.arclength_table();
        for i in 4..n {
            assert_eq!(table.at_sample(i), table.at_sample(4));
        }
    }

    #[test]
    fn circle_length_within_one_percent() {
        let r = 1.7;
        let c = smooth_circle(r, 513);
        let l = c.arclength_table().total();
        assert!((l - 2.0 * PI * r).abs() < 0.01 * 2.0 * PI * r);
        assert!(dist(c.point(0), c.point(512)) < 1e-12);
    }

    #[test]
    fn arclength_inverse_hits_unit_speed_points() {
        let r = 1.3;
        let c = smooth_circle(r, 257);
        let table = c.arclength_table();
        assert!((table.total() - TAU * r).abs() < 1e-6);
        for k in 1..40 {
            let s = table.total() * k as f64 / 40.0;
            let t = c.param_at_arclength(&table, s);
            let (x, _) = c.eval(t);
            // Arclength s on a circle of radius r is the angle s / r.
            let a = s / r;
            assert!(dist(&x, &[r * a.cos(), r * a.sin()]) < 1e-6, "s = {s}");
        }
        assert_eq!(c.param_at_arclength(&table, table.at_sample(100)), c.param(100));
        assert_eq!(c.param_at_arclength(&table, 0.0), 0.0);
    }

    #[test]
    fn reverse_twice_is_identity() {
        let c = smooth_circle(1.0, 65);
        assert_eq!(c.reverse().reverse(), c);
        let r = c.reverse();
        assert_eq!(r.point(0), c.point(64));
        assert_eq!(r.tangent(10), c.tangent(54).iter().map(|x| -x).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn concat_adds_lengths() {
        let c = smooth_circle(1.0, 257);
        let cc = c.concat(&c.reverse(), 1e-12).unwrap();
        let (a, b) = (c.arclength_table().total(), cc.arclength_table().total());
        assert!((b - 2.0 * a).abs() < 1e-9 * a);
        assert_eq!(cc.len(), 513);
        assert!(cc.is_loop());
        assert!(c.concat(&segment(5), 1e-9).is_err());
    }

    #[test]
    fn hermite_eval_hits_samples() {
        let c = smooth_circle(2.0, 129);
        for i in [0, 7, 64, 128] {
            let (x, v) = c.eval(c.param(i));
            assert_eq!(x, c.point(i));
            for (a, b) in v.iter().zip(c.tangent(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slice_and_resample_preserve_shape() {
        let c = smooth_circle(1.0, 129);
        let s = c.slice(32, 96).unwrap();
        assert_eq!(s.len(), 65);
        assert_eq!(s.point(0), c.point(32));
        let r = c.resample(256).unwrap();
        assert_eq!(r.len(), 257);
        assert!((r.arclength_table().total() - c.arclength_table().total()).abs() < 1e-3);
    }

    #[test]
    fn from_points_finite_differences() {
        let c = SampledCurve::from_points(1, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.tangent(1), &[1.0]);
        assert_eq!(c.tangent(0), &[1.0]);
    }
}
