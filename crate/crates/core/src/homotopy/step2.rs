use crate::curve::{uniform_grid, ArcDecomposition, ArclengthTable, Path, SampledCurve};
use crate::geom::{dot, norm, sub};
use crate::reparam::{phi, MonotoneC1Map};
use crate::{Error, Result};

use super::grid::{halt, HomotopyGrid};

/// The straight-line homotopy between `l` and `φ ∘ l`, pushed onto the
/// curve by unit-speed evaluation `γ̂`.
pub(crate) struct Slide<'a> {
    curve: &'a SampledCurve,
    table: ArclengthTable,
    phi: MonotoneC1Map,
    /// Samples left in place for every `r`.
    pinned: Vec<bool>,
}

/// Arclength of the turning point near sample `i`.
///
/// A reversal between samples puts a corner in the unit-speed curve `γ̂`;
/// `φ` must fix that point, not the nearest sample, or the homotopy drags
/// points across the corner. Returns `l(tᵢ)` when `i` is no reversal.
fn turn_arclength(curve: &SampledCurve, table: &ArclengthTable, i: usize) -> f64 {
    let li = table.at_sample(i);
    if i == 0 || i + 1 >= curve.len() || curve.tangent(i).iter().all(|&v| v == 0.0) {
        return li;
    }
    let dir_in = sub(curve.point(i), curve.point(i - 1));
    let dir_out = sub(curve.point(i + 1), curve.point(i));
    if dot(&dir_in, &dir_out) >= 0.0 {
        return li;
    }
    let seg = if dot(curve.tangent(i), &dir_in) > 0.0 { i } else { i - 1 };
    let (t0, t1) = (curve.param(seg), curve.param(seg + 1));
    let f = |t: f64| dot(&curve.eval(t).1, &dir_in);
    let (mut lo, mut hi) = (t0, t1);
    if !(f(lo) > 0.0 && f(hi) <= 0.0) {
        return li;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    curve.arclength_at(table, 0.5 * (lo + hi))
}

impl<'a> Slide<'a> {
    /// `φ` fixes the arclength image of every listed sample range.
    pub(crate) fn new(curve: &'a SampledCurve, fixed: &[(usize, usize)]) -> Result<Self> {
        let table = curve.arclength_table();
        let total = table.total();
        if !(total > 0.0) {
            return Err(Error::InvalidCurve("curve has zero length".into()));
        }
        let mut ranges: Vec<(f64, f64)> = fixed
            .iter()
            .map(|&(a, b)| {
                if a == b {
                    let l = turn_arclength(curve, &table, a);
                    (l, l)
                } else {
                    (table.at_sample(a), table.at_sample(b))
                }
            })
            .collect();
        ranges.push((0.0, 0.0));
        ranges.push((total, total));
        ranges.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in ranges {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let phi = phi(total, &merged, &[])?;
        let pinned = (0..curve.len())
            .map(|i| {
                let s = table.at_sample(i);
                merged.iter().any(|&(a, b)| a <= s && s <= b)
            })
            .collect();
        Ok(Self {
            curve,
            table,
            phi,
            pinned,
        })
    }

    /// `γ̂(s)` and its unit tangent.
    fn unit_speed(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let t = self.curve.param_at_arclength(&self.table, s);
        let (x, v) = self.curve.eval(t);
        let n = norm(&v);
        let u = if n > 0.0 { v.iter().map(|c| c / n).collect() } else { vec![0.0; v.len()] };
        (x, u)
    }

    /// `H(·, r)` with `r` already halted.
    pub(crate) fn row(&self, w: f64, out: &mut [f64]) {
        let d = self.curve.dim();
        for (i, o) in out.chunks_mut(d).enumerate() {
            if self.pinned[i] || w == 0.0 {
                o.copy_from_slice(self.curve.point(i));
            } else {
                let l = self.table.at_sample(i);
                let s = (1.0 - w) * l + w * self.phi.eval(l);
                o.copy_from_slice(&self.unit_speed(s).0);
            }
        }
    }

    /// `γ̂ ∘ φ ∘ l` with its exact tangent `γ̂′(φ(l)) φ′(l) |γ′|`.
    pub(crate) fn target(&self) -> Result<SampledCurve> {
        let d = self.curve.dim();
        let mut points = Vec::with_capacity(self.curve.len() * d);
        let mut tangents = Vec::with_capacity(self.curve.len() * d);
        for i in 0..self.curve.len() {
            let l = self.table.at_sample(i);
            let (p, dp) = self.phi.eval_with_derivative(l);
            let speed = self.curve.speed(i);
            if self.pinned[i] {
                points.extend_from_slice(self.curve.point(i));
                tangents.extend(self.curve.tangent(i).iter().map(|v| v * dp));
            } else {
                let (x, u) = self.unit_speed(p);
                points.extend_from_slice(&x);
                tangents.extend(u.iter().map(|c| c * dp * speed));
            }
        }
        SampledCurve::new(d, self.curve.params().to_vec(), points, tangents)
    }
}

/// Make the curve halt at every vertex preimage without changing its image:
/// `H(t, r) = γ̂((1 − ψ(r)) l(t) + ψ(r) φ(l(t)))` with `φ` fixing the
/// arclength of every `A₀` component and bump-shaped in between.
///
/// Returns the grid, `n_r` intervals in `r`, and the target curve `H(·, 1)`.
pub fn vanish_at_vertices(
    curve: &SampledCurve,
    decomp: &ArcDecomposition,
    n_r: usize,
) -> Result<(HomotopyGrid, SampledCurve)> {
    let word = decomp.word();
    if word.nesting_pairing().is_none() {
        return Err(Error::NotWhisker(word.reduce().to_string()));
    }
    vanish_at_gaps(curve, decomp, n_r)
}

/// [`vanish_at_vertices`] without the whisker precondition: halts at every
/// `A₀` component of any decomposed curve.
pub fn vanish_at_gaps(curve: &SampledCurve, decomp: &ArcDecomposition, n_r: usize) -> Result<(HomotopyGrid, SampledCurve)> {
    if decomp.a0_samples.iter().any(|&(_, b)| b >= curve.len()) {
        return Err(Error::Inconsistent("decomposition does not match the curve".into()));
    }
    if decomp.intervals.is_empty() {
        let grid = HomotopyGrid::constant(curve, uniform_grid(n_r + 1), "vanish")?;
        return Ok((grid, curve.clone()));
    }
    let slide = Slide::new(curve, &decomp.a0_samples)?;
    let grid = HomotopyGrid::from_rows(
        curve.dim(),
        curve.params().to_vec(),
        uniform_grid(n_r + 1),
        "vanish",
        |_, r, out| slide.row(halt(r), out),
    )?;
    Ok((grid, slide.target()?))
}
