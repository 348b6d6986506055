use rayon::prelude::*;

use crate::curve::SampledCurve;
use crate::geom::{dist, norm, padded_box, point_segment, wedge_norm, HashGrid};
use crate::reparam::bump_unchecked;
use crate::{Error, Result};

/// A map `H` sampled on a tensor grid `t × r`. Row `j` holds `H(·, r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyGrid {
    dim: usize,
    t: Vec<f64>,
    r: Vec<f64>,
    points: Vec<f64>,
    /// Which construction produced the grid.
    pub construction: String,
}

fn check_axis(name: &str, xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::DegenerateGrid(format!("{name} axis needs at least two nodes")));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateGrid(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

impl HomotopyGrid {
    pub fn new(dim: usize, t: Vec<f64>, r: Vec<f64>, points: Vec<f64>, construction: impl Into<String>) -> Result<Self> {
        check_axis("t", &t)?;
        check_axis("r", &r)?;
        if dim == 0 || points.len() != dim * t.len() * r.len() {
            return Err(Error::DegenerateGrid(format!(
                "expected {} coordinates, got {}",
                dim * t.len() * r.len(),
                points.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*x));
        }
        Ok(Self {
            dim,
            t,
            r,
            points,
            construction: construction.into(),
        })
    }

    /// Build row by row in parallel; `row(j, r_j, out)` fills `H(·, r_j)`.
    pub fn from_rows<F>(dim: usize, t: Vec<f64>, r: Vec<f64>, construction: impl Into<String>, row: F) -> Result<Self>
    where
        F: Fn(usize, f64, &mut [f64]) + Sync,
    {
        check_axis("t", &t)?;
        check_axis("r", &r)?;
        let width = dim * t.len();
        let mut points = vec![0.0; width * r.len()];
        points
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, out)| row(j, r[j], out));
        Self::new(dim, t, r, points, construction)
    }

    /// `H(t, r) = γ(t)` for every `r`.
    pub fn constant(curve: &SampledCurve, r: Vec<f64>, construction: impl Into<String>) -> Result<Self> {
        let flat = curve.points_flat();
        Self::from_rows(curve.dim(), curve.params().to_vec(), r, construction, |_, _, out| {
            out.copy_from_slice(flat)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of `t` intervals, `N_t`.
    pub fn n_t(&self) -> usize {
        self.t.len() - 1
    }

    /// Number of `r` intervals, `N_r`.
    pub fn n_r(&self) -> usize {
        self.r.len() - 1
    }

    pub fn t_params(&self) -> &[f64] {
        &self.t
    }

    pub fn r_params(&self) -> &[f64] {
        &self.r
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let k = (j * self.t.len() + i) * self.dim;
        &self.points[k..k + self.dim]
    }

    /// `H(·, r_j)` as a flat coordinate slice.
    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.dim * self.t.len();
        &self.points[j * w..(j + 1) * w]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    /// The curve `H(·, r_j)`, tangents by finite differences.
    pub fn row_curve(&self, j: usize) -> Result<SampledCurve> {
        SampledCurve::from_points(self.dim, self.row(j).to_vec())
    }

    /// Largest distance of `H(0, ·)` and `H(1, ·)` from their values at `r = 0`.
    pub fn endpoint_drift(&self) -> f64 {
        let last = self.n_t();
        (0..self.r.len())
            .map(|j| dist(self.at(0, j), self.at(0, 0)).max(dist(self.at(last, j), self.at(last, 0))))
            .fold(0.0, f64::max)
    }

    /// Run `self` on `r ∈ [0, ½]` and `next` on `[½, 1]`. The last row of
    /// `self` must equal the first row of `next`.
    pub fn then(&self, next: &HomotopyGrid) -> Result<Self> {
        if self.dim != next.dim || self.t != next.t {
            return Err(Error::DegenerateGrid("grids have different t axes".into()));
        }
        let gap = self
            .row(self.n_r())
            .iter()
            .zip(next.row(0))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > 1e-9 {
            return Err(Error::Inconsistent(format!("grids do not meet: row gap {gap:.3e}")));
        }
        let (a0, a1) = (self.r[0], self.r[self.n_r()]);
        let (b0, b1) = (next.r[0], next.r[next.n_r()]);
        let mut r: Vec<f64> = self.r.iter().map(|x| 0.5 * (x - a0) / (a1 - a0)).collect();
        r.extend(next.r[1..].iter().map(|x| 0.5 + 0.5 * (x - b0) / (b1 - b0)));
        let mut points = self.points.clone();
        points.extend_from_slice(&next.points[self.dim * self.t.len()..]);
        Self::new(self.dim, self.t.clone(), r, points, format!("{}+{}", self.construction, next.construction))
    }
}

/// `r ↦ bump(r)` on `[0, 1]`: the halting reparametrisation applied to `r`.
#[inline]
pub fn halt(r: f64) -> f64 {
    bump_unchecked(r.clamp(0.0, 1.0))
}

/// Inverse of [`halt`] on `[0, 1]`.
pub fn unhalt(y: f64) -> f64 {
    let y = y.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if halt(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if y == 0.0 || y == 1.0 {
        y
    } else {
        0.5 * (lo + hi)
    }
}

/// Reparametrise `r` by [`halt`], so `∂H/∂r` vanishes on the first and last
/// rows. Rows are interpolated linearly in `r` between existing rows.
pub fn glue_and_halt(grid: &HomotopyGrid) -> HomotopyGrid {
    let (r0, r1) = (grid.r[0], grid.r[grid.n_r()]);
    let width = grid.dim * grid.t.len();
    let mut points = vec![0.0; grid.points.len()];
    points.par_chunks_mut(width).enumerate().for_each(|(j, out)| {
        let target = r0 + (r1 - r0) * halt((grid.r[j] - r0) / (r1 - r0));
        let k = grid.r.partition_point(|&x| x <= target).clamp(1, grid.n_r());
        let (ra, rb) = (grid.r[k - 1], grid.r[k]);
        let w = ((target - ra) / (rb - ra)).clamp(0.0, 1.0);
        let (lo, hi) = (grid.row(k - 1), grid.row(k));
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = if w == 0.0 {
                *a
            } else if w == 1.0 {
                *b
            } else {
                a + w * (b - a)
            };
        }
    });
    HomotopyGrid {
        dim: grid.dim,
        t: grid.t.clone(),
        r: grid.r.clone(),
        points,
        construction: format!("halt({})", grid.construction),
    }
}

/// Nodes in the one-sided edge stencil; exact on quintics, which the
/// halting profile `bump(x) ≈ (2π)²x³/6 − (2π)⁴x⁵/120` is to leading orders.
const EDGE_STENCIL: usize = 6;

/// Weights of the first derivative at `z` of the interpolating polynomial
/// through `xs`.
fn derivative_weights(z: f64, xs: &[f64]) -> [f64; EDGE_STENCIL] {
    let n = xs.len();
    debug_assert!(n <= EDGE_STENCIL);
    let mut w = [0.0; EDGE_STENCIL];
    for k in 0..n {
        let mut acc = 0.0;
        for m in 0..n {
            if m == k {
                continue;
            }
            let mut term = 1.0 / (xs[k] - xs[m]);
            for q in 0..n {
                if q != k && q != m {
                    term *= (z - xs[q]) / (xs[k] - xs[q]);
                }
            }
            acc += term;
        }
        w[k] = acc;
    }
    w
}

/// Derivative weights at one node: `w` applied to nodes `start..start + len`.
#[derive(Clone, Copy)]
struct Stencil {
    start: usize,
    len: usize,
    w: [f64; EDGE_STENCIL],
}

/// Five-point central differences inside, three-point next to the edges,
/// one-sided on them.
fn stencils(nodes: &[f64]) -> Vec<Stencil> {
    let n = nodes.len() - 1;
    (0..=n)
        .map(|k| {
            let (start, len) = if k == 0 {
                (0, EDGE_STENCIL.min(n + 1))
            } else if k == n {
                let start = n.saturating_sub(EDGE_STENCIL - 1);
                (start, n + 1 - start)
            } else if k == 1 || k + 1 == n {
                (k - 1, 3)
            } else {
                (k - 2, 5)
            };
            Stencil {
                start,
                len,
                w: derivative_weights(nodes[k], &nodes[start..start + len]),
            }
        })
        .collect()
}

/// The grid seen through a stride, so the same code serves both resolutions.
struct View<'a> {
    g: &'a HomotopyGrid,
    stride: usize,
    nt: usize,
    nr: usize,
    st: Vec<Stencil>,
    sr: Vec<Stencil>,
}

/// Partials of one row, `(nt + 1) · d` each.
struct RowPartials {
    t: Vec<f64>,
    r: Vec<f64>,
}

/// Everything one pass over a view measures.
#[derive(Clone, Copy, Default)]
struct Scan {
    minor: f64,
    edge_t: f64,
    edge_r: f64,
    modulus: (f64, f64),
}

impl Scan {
    fn max(self, o: Scan) -> Scan {
        Scan {
            minor: self.minor.max(o.minor),
            edge_t: self.edge_t.max(o.edge_t),
            edge_r: self.edge_r.max(o.edge_r),
            modulus: (self.modulus.0.max(o.modulus.0), self.modulus.1.max(o.modulus.1)),
        }
    }
}

/// Rows per parallel block of a scan; each block recomputes one extra row.
const SCAN_BLOCK: usize = 32;

impl<'a> View<'a> {
    fn new(g: &'a HomotopyGrid, stride: usize) -> Self {
        let (nt, nr) = (g.n_t() / stride, g.n_r() / stride);
        let t: Vec<f64> = (0..=nt).map(|k| g.t[k * stride]).collect();
        let r: Vec<f64> = (0..=nr).map(|k| g.r[k * stride]).collect();
        Self {
            g,
            stride,
            nt,
            nr,
            st: stencils(&t),
            sr: stencils(&r),
        }
    }

    fn value(&self, i: usize, j: usize) -> &[f64] {
        self.g.at(i * self.stride, j * self.stride)
    }

    fn row_partials(&self, j: usize, out: &mut RowPartials) {
        let d = self.g.dim;
        out.t.iter_mut().for_each(|o| *o = 0.0);
        out.r.iter_mut().for_each(|o| *o = 0.0);
        let sr = &self.sr[j];
        for i in 0..=self.nt {
            let st = &self.st[i];
            let (ot, or) = (&mut out.t[i * d..(i + 1) * d], &mut out.r[i * d..(i + 1) * d]);
            for m in 0..st.len {
                for (o, x) in ot.iter_mut().zip(self.value(st.start + m, j)) {
                    *o += st.w[m] * x;
                }
            }
            for m in 0..sr.len {
                for (o, x) in or.iter_mut().zip(self.value(i, sr.start + m)) {
                    *o += sr.w[m] * x;
                }
            }
        }
    }

    /// Minors, edge partials and the largest change of each partial between
    /// lattice neighbours.
    fn scan(&self) -> Scan {
        let d = self.g.dim;
        let (nt, nr) = (self.nt, self.nr);
        let fresh = || RowPartials {
            t: vec![0.0; (nt + 1) * d],
            r: vec![0.0; (nt + 1) * d],
        };
        (0..=nr / SCAN_BLOCK)
            .into_par_iter()
            .map(|block| {
                let mut acc = Scan::default();
                let (mut cur, mut next) = (fresh(), fresh());
                let lo = block * SCAN_BLOCK;
                let hi = (lo + SCAN_BLOCK).min(nr + 1);
                if lo < hi {
                    self.row_partials(lo, &mut cur);
                }
                for j in lo..hi {
                    let r_edge = j == 0 || j == nr;
                    for i in 0..=nt {
                        let a = &cur.t[i * d..(i + 1) * d];
                        let b = &cur.r[i * d..(i + 1) * d];
                        let t_edge = i == 0 || i == nt;
                        if !(t_edge || r_edge) {
                            acc.minor = acc.minor.max(wedge_norm(a, b));
                        }
                        if t_edge {
                            acc.edge_t = acc.edge_t.max(norm(a));
                        }
                        if r_edge {
                            acc.edge_r = acc.edge_r.max(norm(b));
                        }
                        if i < nt {
                            acc.modulus.0 = acc.modulus.0.max(dist(a, &cur.t[(i + 1) * d..(i + 2) * d]));
                            acc.modulus.1 = acc.modulus.1.max(dist(b, &cur.r[(i + 1) * d..(i + 2) * d]));
                        }
                    }
                    if j < nr {
                        self.row_partials(j + 1, &mut next);
                        acc.modulus.0 = acc.modulus.0.max(
                            cur.t.chunks(d).zip(next.t.chunks(d)).map(|(x, y)| dist(x, y)).fold(0.0, f64::max),
                        );
                        acc.modulus.1 = acc.modulus.1.max(
                            cur.r.chunks(d).zip(next.r.chunks(d)).map(|(x, y)| dist(x, y)).fold(0.0, f64::max),
                        );
                        std::mem::swap(&mut cur, &mut next);
                    }
                }
                acc
            })
            .reduce(Scan::default, Scan::max)
    }
}

/// Ratio above which the partials' modulus of continuity is judged not to
/// shrink with the mesh.
pub const C1_RATIO_TOL: f64 = 0.8;

/// Finite-difference evidence that a grid is a thin homotopy.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThinnessReport {
    /// Largest `|∂ₜH ∧ ∂ᵣH|` over interior nodes, divided by `speed²`.
    pub max_minor: f64,
    /// Largest of `|∂ᵣH|` on the first and last rows and `|∂ₜH|` on the
    /// first and last columns, divided by `speed`.
    pub max_edge_partial: f64,
    /// `|∂ᵣH|` on the first and last rows alone, divided by `speed`.
    pub edge_r: f64,
    /// `|∂ₜH|` on the first and last columns alone, divided by `speed`.
    pub edge_t: f64,
    /// Largest `|∂ₜH|` on the source row; the scale of the two measures above.
    pub speed: f64,
    /// Modulus of continuity of `(∂ₜH, ∂ᵣH)` at full resolution.
    pub modulus_full: (f64, f64),
    /// The same at half resolution.
    pub modulus_half: (f64, f64),
    /// `modulus_full / modulus_half`, worst partial. About ½ for C¹ data.
    pub c1_ratio: f64,
    pub tol_rank: f64,
    pub tol_edge: f64,
    pub pass: bool,
}

impl ThinnessReport {
    pub fn rank_ok(&self) -> bool {
        self.max_minor <= self.tol_rank
    }

    pub fn edges_ok(&self) -> bool {
        self.max_edge_partial <= self.tol_edge
    }

    pub fn c1_ok(&self) -> bool {
        self.c1_ratio <= C1_RATIO_TOL
    }
}

/// Certify rank ≤ 1, halting at the edges and C¹-ness of the partials.
pub fn check_thin(grid: &HomotopyGrid, tol_rank: f64, tol_edge: f64) -> Result<ThinnessReport> {
    if grid.t.len() < 2 * EDGE_STENCIL || grid.r.len() < 2 * EDGE_STENCIL {
        return Err(Error::DegenerateGrid(format!(
            "check_thin needs at least {} nodes per axis",
            2 * EDGE_STENCIL
        )));
    }
    let full = View::new(grid, 1);
    let mut source = RowPartials {
        t: vec![0.0; grid.t.len() * grid.dim],
        r: vec![0.0; grid.t.len() * grid.dim],
    };
    full.row_partials(0, &mut source);
    let speed = source.t.chunks(grid.dim).map(norm).fold(0.0, f64::max);
    let scale = if speed > 0.0 { speed } else { 1.0 };

    let fine = full.scan();
    let coarse = View::new(grid, 2).scan();
    let (minor, edge_t, edge_r) = (fine.minor, fine.edge_t, fine.edge_r);
    let (modulus_full, modulus_half) = (fine.modulus, coarse.modulus);
    // Partials that barely vary carry only rounding noise; skip them.
    let floor = 1e-9 * scale;
    let ratio = |f: f64, h: f64| if h > floor { f / h } else { 0.0 };
    let c1_ratio = ratio(modulus_full.0, modulus_half.0).max(ratio(modulus_full.1, modulus_half.1));

    let mut report = ThinnessReport {
        max_minor: minor / (scale * scale),
        max_edge_partial: edge_t.max(edge_r) / scale,
        edge_r: edge_r / scale,
        edge_t: edge_t / scale,
        speed,
        modulus_full,
        modulus_half,
        c1_ratio,
        tol_rank,
        tol_edge,
        pass: false,
    };
    report.pass = report.rank_ok() && report.edges_ok() && report.c1_ok();
    Ok(report)
}

/// How far the image of a grid strays from the image of a curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ImageReport {
    /// Largest distance from a grid point to the sampled polyline. Values
    /// below `tol / 100` are upper bounds, not refined further.
    pub max_distance: f64,
    pub tol: f64,
    pub within: bool,
}

/// Distance of every grid point to the polyline through the curve samples.
pub fn image_containment(grid: &HomotopyGrid, curve: &SampledCurve, tol: f64) -> Result<ImageReport> {
    if grid.dim != curve.dim() {
        return Err(Error::DegenerateGrid("grid and curve dimensions differ".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Inconsistent("image tolerance must be positive".into()));
    }
    let mean_segment = curve.polyline_length() / curve.segments().max(1) as f64;
    let cell = (4.0 * tol).max(mean_segment);
    let mut hash = HashGrid::new(cell);
    for s in 0..curve.segments() {
        let (lo, hi) = padded_box(curve.point(s), curve.point(s + 1), cell);
        hash.insert_box(s as u32, &lo, &hi);
    }
    let seg_dist = |p: &[f64], s: usize| point_segment(p, curve.point(s), curve.point(s + 1)).0;
    let brute = |p: &[f64]| (0..curve.segments()).map(|s| seg_dist(p, s)).fold(f64::INFINITY, f64::min);
    // Distances this far inside the tolerance need no refinement.
    let enough = 1e-2 * tol;
    let nearest = |p: &[f64]| {
        if curve.segments() == 0 {
            return dist(p, curve.point(0));
        }
        let mut near = f64::INFINITY;
        for &s in hash.candidates(p) {
            near = near.min(seg_dist(p, s as usize));
            if near <= enough {
                return near;
            }
        }
        if near <= cell {
            near
        } else {
            brute(p)
        }
    };
    let width = grid.t.len();
    // Points that did not move since the previous row were measured there.
    let max_distance = (0..grid.r.len())
        .into_par_iter()
        .map(|j| {
            (0..width)
                .filter(|&i| j == 0 || grid.at(i, j) != grid.at(i, j - 1))
                .map(|i| nearest(grid.at(i, j)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(ImageReport {
        max_distance,
        tol,
        within: max_distance <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::uniform_grid;

    fn square(n: usize) -> HomotopyGrid {
        let t = uniform_grid(n + 1);
        HomotopyGrid::from_rows(2, t.clone(), t.clone(), "square", |_, r, out| {
            for (i, p) in out.chunks_mut(2).enumerate() {
                p[0] = t[i];
                p[1] = r;
            }
        })
        .unwrap()
    }

    fn circle(n: usize) -> SampledCurve {
        let pts: Vec<f64> = uniform_grid(n + 1)
            .iter()
            .flat_map(|&t| {
                let a = std::f64::consts::TAU * halt(t);
                [a.cos(), a.sin()]
            })
            .collect();
        SampledCurve::from_points(2, pts).unwrap()
    }

    #[test]
    fn constant_homotopy_is_thin() {
        let c = circle(400);
        let g = HomotopyGrid::constant(&c, uniform_grid(65), "const").unwrap();
        let rep = check_thin(&g, 1e-3, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_minor < 1e-12);
        assert!(image_containment(&g, &c, 1e-9).unwrap().within);
        assert_eq!(g.endpoint_drift(), 0.0);
    }

    #[test]
    fn square_sweep_has_unit_minor() {
        let rep = check_thin(&square(32), 1e-3, 1e-6).unwrap();
        assert!((rep.max_minor - 1.0).abs() < 1e-12, "{rep:?}");
        assert!(!rep.pass);
    }

    #[test]
    fn halting_kills_edge_partials() {
        let g = square(64);
        assert!(!check_thin(&g, 2.0, 1e-6).unwrap().edges_ok());
        let h = glue_and_halt(&g);
        let rep = check_thin(&h, 2.0, 1e-6).unwrap();
        // The t-edges of the square still move, so only the r-rows halt.
        assert!(rep.edge_r < 1e-6, "{rep:?}");
        assert!(rep.max_edge_partial > 0.5);
    }

    #[test]
    fn one_sided_weights_are_exact_on_cubics() {
        let xs = [0.0, 0.1, 0.25, 0.3];
        let w = derivative_weights(0.0, &xs);
        let d: f64 = xs.iter().zip(w).map(|(x, wk)| wk * (1.0 + 2.0 * x - x * x + 3.0 * x * x * x)).sum();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn jump_in_partial_is_flagged() {
        let t = uniform_grid(129);
        let g = HomotopyGrid::from_rows(1, t.clone(), uniform_grid(17), "kink", |_, _, out| {
            for (o, x) in out.iter_mut().zip(&t) {
                *o = (x - 0.5).abs();
            }
        })
        .unwrap();
        let rep = check_thin(&g, 1.0, 10.0).unwrap();
        assert!(rep.c1_ratio > 0.9, "{rep:?}");
        let smooth = HomotopyGrid::from_rows(1, t.clone(), uniform_grid(17), "smooth", |_, _, out| {
            for (o, x) in out.iter_mut().zip(&t) {
                *o = (3.0 * x).sin();
            }
        })
        .unwrap();
        assert!(check_thin(&smooth, 1.0, 10.0).unwrap().c1_ok());
    }

    #[test]
    fn stacking_rescales_r() {
        let c = circle(50);
        let a = HomotopyGrid::constant(&c, uniform_grid(9), "a").unwrap();
        let s = a.then(&a).unwrap();
        assert_eq!(s.n_r(), 16);
        assert_eq!(s.r_params()[8], 0.5);
        assert_eq!(s.construction, "a+a");
    }

    #[test]
    fn image_containment_detects_escape() {
        let c = circle(200);
        let g = square(16);
        let rep = image_containment(&g, &c, 1e-3).unwrap();
        assert!(!rep.within);
        assert!(rep.max_distance > 0.5);
    }
}
