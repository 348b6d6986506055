//! C¹ monotone reparametrisations with prescribed critical values.
//!
//! Everything is built from one profile, [`bump`], `f(x) = x − sin(2πx)/2π`,
//! which is increasing on `[0, 1]`, fixes both endpoints and has derivative
//! `1 − cos(2πx)` vanishing only at the endpoints, with supremum 2.

use std::f64::consts::TAU;

use crate::{Error, Result};

/// Supremum of |ψ′| certified by [`psi`] for every finite critical set.
pub const PSI_DERIVATIVE_BOUND: f64 = 4.0;

pub fn bump(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(bump_unchecked(x))
}

#[inline]
pub(crate) fn bump_unchecked(x: f64) -> f64 {
    x - (TAU * x).sin() / TAU
}

#[inline]
pub fn bump_derivative(x: f64) -> f64 {
    1.0 - (TAU * x).cos()
}

/// Pad a finite sequence of positive lengths so that it sums to `target`.
///
/// Each length gets `s·2⁻ⁿ` added, where `n` is its 1-based rank in
/// non-increasing order, so `l′ₙ ≥ lₙ` and `l′` stays ordered like `l`.
/// The result is returned in input order.
pub fn padded_lengths(lengths: &[f64], target: f64) -> Result<Vec<f64>> {
    if lengths.is_empty() {
        return Err(Error::Empty("padded_lengths needs at least one length"));
    }
    if lengths.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Inconsistent("lengths must be finite and non-negative".into()));
    }
    let total: f64 = lengths.iter().sum();
    if target < total {
        return Err(Error::Inconsistent(format!(
            "target {target} is below the total length {total}"
        )));
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| lengths[b].total_cmp(&lengths[a]));
    let mut weight = vec![0.0; lengths.len()];
    for (rank, &i) in order.iter().enumerate() {
        weight[i] = 0.5f64.powi(rank as i32 + 1);
    }
    let wsum: f64 = weight.iter().sum();
    let s = (target - total) / wsum;
    let mut out: Vec<f64> = lengths.iter().zip(&weight).map(|(l, w)| l + s * w).collect();
    // Put the rounding residue on the largest padded entry so the sum is exact.
    let residue = target - out.iter().sum::<f64>();
    out[order[0]] += residue;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PieceKind {
    /// `y0 + (y1 − y0)·f((x − x0)/(x1 − x0))`
    Bump,
    /// Straight line from `(x0, y0)` to `(x1, y1)`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    kind: PieceKind,
}

impl Piece {
    fn eval(&self, x: f64) -> (f64, f64) {
        let w = self.x1 - self.x0;
        if w <= 0.0 {
            return (self.y0, 0.0);
        }
        let u = ((x - self.x0) / w).clamp(0.0, 1.0);
        let h = self.y1 - self.y0;
        match self.kind {
            PieceKind::Bump => (self.y0 + h * bump_unchecked(u), h / w * bump_derivative(u)),
            PieceKind::Linear => (self.y0 + h * u, h / w),
        }
    }
}

/// A non-decreasing C¹ map on a closed interval, stored as closed-form
/// pieces (affine images of the bump profile, or straight lines).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneC1Map {
    lo: f64,
    hi: f64,
    pieces: Vec<Piece>,
    critical_values: Vec<f64>,
}

impl MonotoneC1Map {
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// The prescribed critical values the map was built with.
    pub fn critical_values(&self) -> &[f64] {
        &self.critical_values
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.x1 < x);
        &self.pieces[idx.min(self.pieces.len() - 1)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece_at(x.clamp(self.lo, self.hi)).eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.piece_at(x.clamp(self.lo, self.hi)).eval(x).1
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        self.piece_at(x.clamp(self.lo, self.hi)).eval(x)
    }

    /// Conjugate by the affine map `[lo, hi] → [a, b]` on both sides.
    fn rescaled(&self, a: f64, b: f64) -> Self {
        let scale = (b - a) / (self.hi - self.lo);
        let map = |v: f64| a + (v - self.lo) * scale;
        Self {
            lo: a,
            hi: b,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    x0: map(p.x0),
                    x1: map(p.x1),
                    y0: map(p.y0),
                    y1: map(p.y1),
                    kind: p.kind,
                })
                .collect(),
            critical_values: self.critical_values.iter().map(|&v| map(v)).collect(),
        }
    }
}

/// Monotone C¹ surjection `ψ: [0, 1] → [0, 1]` whose critical values are
/// exactly `S ∪ {0, 1}`.
///
/// The complement of `S` in `[0, 1]` is a list of intervals of lengths `lₙ`.
/// They are padded to `l′ₙ` summing to 2, laid out in order on `[0, 2]`, and
/// each padded interval is mapped onto its original by a scaled bump. The
/// result is compressed back to `[0, 1]`, which doubles the slope: the
/// derivative never exceeds [`PSI_DERIVATIVE_BOUND`].
pub fn psi(critical: &[f64]) -> Result<MonotoneC1Map> {
    for &s in critical {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain {
                value: s,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let mut values: Vec<f64> = critical.to_vec();
    values.push(0.0);
    values.push(1.0);
    values.sort_by(f64::total_cmp);
    values.dedup();

    let lengths: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let padded = padded_lengths(&lengths, 2.0)?;
    let mut pieces = Vec::with_capacity(lengths.len());
    let mut x = 0.0;
    for (k, lp) in padded.iter().enumerate() {
        let x1 = if k + 1 == padded.len() { 2.0 } else { x + lp };
        pieces.push(Piece {
            x0: x / 2.0,
            x1: x1 / 2.0,
            y0: values[k],
            y1: values[k + 1],
            kind: PieceKind::Bump,
        });
        x = x1;
    }
    Ok(MonotoneC1Map {
        lo: 0.0,
        hi: 1.0,
        pieces,
        critical_values: values,
    })
}

/// [`psi`] transported to the interval `[a, b]`.
pub fn psi_scaled(a: f64, b: f64, critical: &[f64]) -> Result<MonotoneC1Map> {
    if !(b > a) {
        return Err(Error::Inconsistent(format!("empty interval [{a}, {b}]")));
    }
    let mut unit = Vec::with_capacity(critical.len());
    for &s in critical {
        if !(a..=b).contains(&s) {
            return Err(Error::Domain {
                value: s,
                lo: a,
                hi: b,
            });
        }
        unit.push((s - a) / (b - a));
    }
    Ok(psi(&unit)?.rescaled(a, b))
}

/// Map of `[0, L]` that fixes the closed set `fixed` (a list of possibly
/// degenerate closed intervals) and on every complementary interval `(a, b)`
/// is `ψ` scaled to `[a, b]` with critical values at the branch values in it.
pub fn phi(length: f64, fixed: &[(f64, f64)], branch_values: &[f64]) -> Result<MonotoneC1Map> {
    if !(length > 0.0) {
        return Err(Error::Inconsistent("phi needs a positive length".into()));
    }
    let mut fixed: Vec<(f64, f64)> = fixed.to_vec();
    for &(a, b) in &fixed {
        if a > b || a < 0.0 || b > length {
            return Err(Error::Inconsistent(format!(
                "fixed interval [{a}, {b}] not inside [0, {length}]"
            )));
        }
    }
    fixed.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Merge overlaps.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in fixed {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }

    let mut gaps = Vec::new();
    let mut cursor = 0.0;
    for &(a, b) in &merged {
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < length {
        gaps.push((cursor, length));
    }

    for &v in branch_values {
        let inside_gap = gaps.iter().any(|&(a, b)| v >= a && v <= b);
        if !inside_gap {
            return Err(Error::Inconsistent(format!(
                "branch value {v} lies in the interior of the fixed set"
            )));
        }
    }

    let mut pieces = Vec::new();
    let mut critical = Vec::new();
    let mut gi = 0;
    let mut fi = 0;
    // Interleave fixed intervals and gaps in order.
    while gi < gaps.len() || fi < merged.len() {
        let take_gap = match (gaps.get(gi), merged.get(fi)) {
            (Some(g), Some(f)) => g.0 < f.0,
            (Some(_), None) => true,
            _ => false,
        };
        if take_gap {
            let (a, b) = gaps[gi];
            gi += 1;
            let inside: Vec<f64> = branch_values
                .iter()
                .copied()
                .filter(|&v| v >= a && v <= b)
                .collect();
            let m = psi_scaled(a, b, &inside)?;
            critical.extend_from_slice(&m.critical_values);
            pieces.extend(m.pieces);
        } else {
            let (a, b) = merged[fi];
            fi += 1;
            if b > a {
                pieces.push(Piece {
                    x0: a,
                    x1: b,
                    y0: a,
                    y1: b,
                    kind: PieceKind::Linear,
                });
            }
        }
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup();
    if pieces.is_empty() {
        pieces.push(Piece {
            x0: 0.0,
            x1: length,
            y0: 0.0,
            y1: length,
            kind: PieceKind::Linear,
        });
    }
    Ok(MonotoneC1Map {
        lo: 0.0,
        hi: length,
        pieces,
        critical_values: critical,
    })
}

/// Piecewise bump interpolation through the knots `(xs[k], ys[k])`: C¹,
/// non-decreasing, with zero derivative at every knot.
pub fn knot_interpolant(xs: &[f64], ys: &[f64]) -> Result<MonotoneC1Map> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Inconsistent("need at least two matching knots".into()));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) || ys.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Inconsistent("knots must be non-decreasing".into()));
    }
    let pieces = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| Piece {
            x0: x[0],
            x1: x[1],
            y0: y[0],
            y1: y[1],
            kind: PieceKind::Bump,
        })
        .collect();
    Ok(MonotoneC1Map {
        lo: xs[0],
        hi: *xs.last().unwrap(),
        pieces,
        critical_values: ys.to_vec(),
    })
}
