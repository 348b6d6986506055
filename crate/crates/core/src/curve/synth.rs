use serde::{Deserialize, Serialize};

use super::sampled::{uniform_grid, SampledCurve};
use crate::geom::{dist, segment_segment};
use crate::reparam::{bump_derivative, bump_unchecked};
use crate::word::{arc_name, Letter, Word};
use crate::{Error, Result};

/// An embedded polyline arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub id: u32,
    pub points: Vec<Vec<f64>>,
}

impl Arc {
    pub fn new(id: u32, points: Vec<Vec<f64>>) -> Self {
        Self { id, points }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        self.points.last().expect("arc has points")
    }

    /// Check that no two segments come within `eps` of each other except
    /// where the polyline itself joins them within `2·eps` of arclength
    /// (wrapping around for closed arcs).
    pub fn check_embedded(&self, eps: f64) -> Result<()> {
        let n = self.points.len();
        if n < 2 {
            return Err(Error::InvalidCurve(format!("arc `{}` has fewer than two points", arc_name(self.id))));
        }
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + dist(&self.points[i - 1], &self.points[i]);
        }
        let total = cum[n - 1];
        let closed = dist(self.start(), self.end()) <= eps;
        for i in 0..n - 1 {
            for j in (i + 2)..n - 1 {
                let d = segment_segment(&self.points[i], &self.points[i + 1], &self.points[j], &self.points[j + 1]);
                if d > eps {
                    continue;
                }
                let along = cum[j] - cum[i + 1];
                let around = if closed { total - cum[j + 1] + cum[i] } else { f64::INFINITY };
                if along.min(around) > 2.0 * eps {
                    return Err(Error::InvalidCurve(format!(
                        "arc `{}` is not embedded: segments {i} and {j} are {d:.3e} apart",
                        arc_name(self.id)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub arc: u32,
    /// `+1` along the arc's stored orientation, `−1` against it.
    pub direction: i8,
}

impl Step {
    pub fn letter(self) -> Letter {
        Letter {
            arc: self.arc,
            inverse: self.direction < 0,
        }
    }
}

/// Arcs plus the order in which a curve traverses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub dim: usize,
    pub arcs: Vec<Arc>,
    pub traversal: Vec<Step>,
    /// Pause length at each interior junction, in arc units; empty means none.
    #[serde(default)]
    pub dwell: Vec<f64>,
}

impl CurveSpec {
    pub fn from_word(dim: usize, arcs: Vec<Arc>, word: &Word) -> Self {
        let traversal = word
            .letters
            .iter()
            .map(|l| Step {
                arc: l.arc,
                direction: l.sign(),
            })
            .collect();
        Self {
            dim,
            arcs,
            traversal,
            dwell: Vec::new(),
        }
    }

    pub fn arc(&self, id: u32) -> Result<&Arc> {
        self.arcs
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| Error::MissingArc(arc_name(id)))
    }

    pub fn word(&self) -> Word {
        Word::new(self.traversal.iter().map(|s| s.letter()).collect())
    }

    fn oriented_ends(&self, step: Step) -> Result<(&[f64], &[f64])> {
        let arc = self.arc(step.arc)?;
        Ok(if step.direction > 0 {
            (arc.start(), arc.end())
        } else {
            (arc.end(), arc.start())
        })
    }

    pub fn validate(&self, junction_tol: f64) -> Result<()> {
        if self.traversal.is_empty() {
            return Err(Error::Empty("traversal"));
        }
        for arc in &self.arcs {
            if arc.points.iter().any(|p| p.len() != self.dim) {
                return Err(Error::InvalidCurve(format!(
                    "arc `{}` has points outside dimension {}",
                    arc_name(arc.id),
                    self.dim
                )));
            }
            arc.check_embedded(junction_tol)?;
        }
        for s in &self.traversal {
            if s.direction != 1 && s.direction != -1 {
                return Err(Error::InvalidCurve("direction must be +1 or -1".into()));
            }
            self.arc(s.arc)?;
        }
        for k in 0..self.traversal.len() - 1 {
            let (_, end) = self.oriented_ends(self.traversal[k])?;
            let (start, _) = self.oriented_ends(self.traversal[k + 1])?;
            let gap = dist(end, start);
            if gap > junction_tol {
                return Err(Error::JunctionMismatch {
                    index: k,
                    next: k + 1,
                    gap,
                });
            }
        }
        if !self.dwell.is_empty() && self.dwell.len() + 1 != self.traversal.len() {
            return Err(Error::InvalidCurve(format!(
                "{} dwell entries for {} interior junctions",
                self.dwell.len(),
                self.traversal.len() - 1
            )));
        }
        if self.dwell.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidCurve("dwell lengths must be non-negative".into()));
        }
        Ok(())
    }
}

/// Natural cubic spline through the arc's vertices, parametrised by
/// cumulative chord length.
#[derive(Debug, Clone)]
pub struct ArcSpline {
    dim: usize,
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl ArcSpline {
    pub fn new(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let dim = points[0].len();
        let mut knots = vec![0.0; n];
        for i in 1..n {
            knots[i] = knots[i - 1] + dist(&points[i - 1], &points[i]);
        }
        let mut second = vec![vec![0.0; dim]; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let m = n - 2;
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            for k in 0..dim {
                let mut diag = vec![0.0; m];
                let mut upper = vec![0.0; m];
                let mut rhs = vec![0.0; m];
                for r in 0..m {
                    let i = r + 1;
                    diag[r] = 2.0 * (h[i - 1] + h[i]);
                    upper[r] = h[i];
                    rhs[r] = 6.0
                        * ((points[i + 1][k] - points[i][k]) / h[i] - (points[i][k] - points[i - 1][k]) / h[i - 1]);
                }
                for r in 1..m {
                    let lower = h[r];
                    let w = lower / diag[r - 1];
                    diag[r] -= w * upper[r - 1];
                    rhs[r] -= w * rhs[r - 1];
                }
                let mut sol = vec![0.0; m];
                sol[m - 1] = rhs[m - 1] / diag[m - 1];
                for r in (0..m - 1).rev() {
                    sol[r] = (rhs[r] - upper[r] * sol[r + 1]) / diag[r];
                }
                for r in 0..m {
                    second[r + 1][k] = sol[r];
                }
            }
        }
        Self {
            dim,
            knots,
            values: points.to_vec(),
            second,
        }
    }

    pub fn length_param(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Position and derivative with respect to the chord parameter.
    pub fn eval(&self, c: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.knots.len();
        let c = c.clamp(0.0, self.length_param());
        let i = self.knots.partition_point(|&k| k <= c).saturating_sub(1).min(n - 2);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - c) / h;
        let b = (c - self.knots[i]) / h;
        let mut x = vec![0.0; self.dim];
        let mut v = vec![0.0; self.dim];
        for k in 0..self.dim {
            let (y0, y1) = (self.values[i][k], self.values[i + 1][k]);
            let (m0, m1) = (self.second[i][k], self.second[i + 1][k]);
            x[k] = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
            v[k] = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        }
        (x, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Grid intervals per arc traversal (and per unit of dwell).
    pub samples_per_unit: usize,
    /// Allowed gap between consecutive arc ends.
    pub junction_tol: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            samples_per_unit: 512,
            junction_tol: 1e-3,
        }
    }
}

/// A synthesised curve together with its ground-truth word.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub curve: SampledCurve,
    pub word: Word,
    /// Sample index of every junction, including both ends.
    pub junctions: Vec<usize>,
}

/// Traverse the arcs of `spec` in order. Each traversal is the arc's spline
/// run through the bump profile, so the speed vanishes at every junction.
/// A pass in direction `−1` visits exactly the sample points of a forward
/// pass, in reverse order.
pub fn synth_curve(spec: &CurveSpec, opts: &SynthOptions) -> Result<Synthesized> {
    if opts.samples_per_unit < 32 {
        return Err(Error::InvalidCurve(format!(
            "samples_per_unit must be at least 32, got {}",
            opts.samples_per_unit
        )));
    }
    spec.validate(opts.junction_tol)?;
    let spu = opts.samples_per_unit;
    let dwell_samples: Vec<usize> = (0..spec.traversal.len().saturating_sub(1))
        .map(|k| spec.dwell.get(k).map_or(0, |d| (d * spu as f64).round() as usize))
        .collect();
    let n = spu * spec.traversal.len() + dwell_samples.iter().sum::<usize>();
    let du_dt = n as f64 / spu as f64;
    let dim = spec.dim;

    let mut splines = std::collections::BTreeMap::new();
    for s in &spec.traversal {
        splines
            .entry(s.arc)
            .or_insert_with(|| ArcSpline::new(&spec.arc(s.arc).expect("validated").points));
    }

    let mut points = Vec::with_capacity((n + 1) * dim);
    let mut tangents = Vec::with_capacity((n + 1) * dim);
    let mut junctions = vec![0];
    for (k, step) in spec.traversal.iter().enumerate() {
        let arc = spec.arc(step.arc)?;
        let spline = &splines[&step.arc];
        let c_total = spline.length_param();
        let first = if k == 0 { 0 } else { 1 };
        for j in first..=spu {
            let pos = if step.direction > 0 { j } else { spu - j };
            let u = pos as f64 / spu as f64;
            let (x, dx) = if pos == 0 {
                (arc.start().to_vec(), vec![0.0; dim])
            } else if pos == spu {
                (arc.end().to_vec(), vec![0.0; dim])
            } else {
                let (x, dc) = spline.eval(c_total * bump_unchecked(u));
                let speed = c_total * bump_derivative(u) * du_dt * f64::from(step.direction);
                (x, dc.iter().map(|d| d * speed).collect())
            };
            points.extend_from_slice(&x);
            tangents.extend_from_slice(&dx);
        }
        let end = points.len() / dim - 1;
        if let Some(&pause) = dwell_samples.get(k) {
            let last = points[end * dim..].to_vec();
            for _ in 0..pause {
                points.extend_from_slice(&last);
                tangents.extend(std::iter::repeat_n(0.0, dim));
            }
        }
        junctions.push(end);
        if k + 1 < spec.traversal.len() && dwell_samples[k] > 0 {
            junctions.push(points.len() / dim - 1);
        }
    }
    debug_assert_eq!(points.len(), (n + 1) * dim);
    if dist(&points[..dim], &points[n * dim..]) <= opts.junction_tol {
        let head = points[..dim].to_vec();
        points[n * dim..].copy_from_slice(&head);
    }
    let curve = SampledCurve::new(dim, uniform_grid(n + 1), points, tangents)?;
    Ok(Synthesized {
        curve,
        word: spec.word(),
        junctions,
    })
}
