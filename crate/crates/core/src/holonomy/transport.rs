use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::{Path, SampledCurve};
use crate::{Error, Result};

use super::connection::{ConnectionField, OneForm};
use super::group::{distance_from_identity, GroupKind, Mat};

/// Fewest RK4 steps a transport may use.
pub const MIN_STEPS: usize = 64;

/// Parallel transport around a curve.
#[derive(Debug, Clone)]
pub struct HolonomyResult {
    pub group: GroupKind,
    pub u: Mat,
    /// RK4 steps actually taken (a whole number per curve segment).
    pub steps: usize,
    /// Group-membership defect of `u`.
    pub defect: f64,
    /// Error estimate `16/15 · ‖U_h − U_{h/2}‖`.
    pub richardson: f64,
}

impl HolonomyResult {
    /// `‖U − I‖`, Frobenius.
    pub fn deviation(&self) -> f64 {
        distance_from_identity(&self.u)
    }
}

/// RK4 steps per curve segment for at least `steps` in total. Steps never
/// straddle a sample, where the Hermite interpolant is only C¹.
fn per_segment(curve: &SampledCurve, steps: usize) -> usize {
    steps.div_ceil(curve.segments()).max(1)
}

fn check(curve: &SampledCurve, conn: &ConnectionField, steps: usize) -> Result<()> {
    if curve.dim() != conn.dim() {
        return Err(Error::Inconsistent(format!(
            "curve in ℝ^{} but connection on ℝ^{}",
            curve.dim(),
            conn.dim()
        )));
    }
    if steps < MIN_STEPS {
        return Err(Error::Inconsistent(format!("transport needs at least {MIN_STEPS} steps, got {steps}")));
    }
    Ok(())
}

/// Solve `dU/dt = A(γ(t)) γ̇(t) U`, `U(0) = I` with `sub` classical RK4
/// steps per segment, projecting onto the group after every step.
fn integrate(curve: &SampledCurve, conn: &ConnectionField, sub: usize) -> Result<Mat> {
    let group = conn.group();
    let basis = group.basis();
    let d = curve.dim();
    let (mut x, mut v) = (vec![0.0; d], vec![0.0; d]);
    let mut c = vec![0.0; basis.len()];
    let n = group.n();
    let mut generator = |t: f64| -> Mat {
        curve.eval_into(t, &mut x, &mut v);
        conn.coefficients_into(&x, &v, &mut c);
        let mut m = Mat::zeros(n, n);
        for (cb, e) in c.iter().zip(&basis) {
            if *cb != 0.0 {
                m.zip_apply(e, |a, b| *a += b * cb);
            }
        }
        m
    };
    let mut u = group.identity();
    let cplx = |r: f64| Complex64::new(r, 0.0);
    let mut ma = generator(0.0);
    for seg in 0..curve.segments() {
        let (t0, t1) = (curve.param(seg), curve.param(seg + 1));
        let h = (t1 - t0) / sub as f64;
        for s in 0..sub {
            let ta = t0 + s as f64 * h;
            let tb = if s + 1 == sub { t1 } else { ta + h };
            let mm = generator(ta + 0.5 * h);
            let mb = generator(tb);
            let k1 = &ma * &u;
            let k2 = &mm * (&u + &k1 * cplx(0.5 * h));
            let k3 = &mm * (&u + &k2 * cplx(0.5 * h));
            let k4 = &mb * (&u + &k3 * cplx(h));
            u += (k1 + (k2 + k3) * cplx(2.0) + k4) * cplx(h / 6.0);
            u = group.project(&u);
            ma = mb;
        }
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(t1));
        }
    }
    Ok(u)
}

/// Holonomy at one resolution, without an error estimate.
pub fn holonomy(curve: &SampledCurve, conn: &ConnectionField, steps: usize) -> Result<Mat> {
    check(curve, conn, steps)?;
    integrate(curve, conn, per_segment(curve, steps))
}

/// Parallel transport with a Richardson error estimate from a second run at
/// twice the steps.
pub fn transport(curve: &SampledCurve, conn: &ConnectionField, steps: usize) -> Result<HolonomyResult> {
    check(curve, conn, steps)?;
    let sub = per_segment(curve, steps);
    let coarse = integrate(curve, conn, sub)?;
    let fine = integrate(curve, conn, 2 * sub)?;
    let group = conn.group();
    let u = group.project(&coarse);
    Ok(HolonomyResult {
        group,
        defect: group.defect(&u),
        richardson: (&coarse - &fine).norm() * 16.0 / 15.0,
        steps: sub * curve.segments(),
        u,
    })
}

/// Observed convergence order `log₂(‖U_h − U_{h/2}‖ / ‖U_{h/2} − U_{h/4}‖)`.
pub fn richardson_order(curve: &SampledCurve, conn: &ConnectionField, steps: usize) -> Result<f64> {
    check(curve, conn, steps)?;
    let sub = per_segment(curve, steps);
    let u: Vec<Mat> = [sub, 2 * sub, 4 * sub]
        .par_iter()
        .map(|&s| integrate(curve, conn, s))
        .collect::<Result<_>>()?;
    let e1 = (&u[0] - &u[1]).norm();
    let e2 = (&u[1] - &u[2]).norm();
    Ok((e1 / e2).log2())
}

/// Outcome of transporting around a loop against seeded random connections.
#[derive(Debug, Clone)]
pub struct TrivialityReport {
    pub group: GroupKind,
    /// `(seed, ‖U − I‖)` per connection.
    pub deviations: Vec<(u64, f64)>,
    pub worst: f64,
    pub tol: f64,
    /// Every deviation is within `tol`. Sampling evidence, not a proof.
    pub trivial: bool,
}

/// Transport around `curve` against `n_conn` random connections seeded
/// `seed, seed + 1, …`, one RK4 step per curve segment.
pub fn holonomy_trivial(
    curve: &SampledCurve,
    group: GroupKind,
    n_conn: usize,
    seed: u64,
    tol: f64,
) -> Result<TrivialityReport> {
    if !curve.is_loop() {
        return Err(Error::NotALoop);
    }
    let steps = curve.segments().max(MIN_STEPS);
    let deviations = (0..n_conn as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k);
            let conn = ConnectionField::random(group, curve.dim(), s);
            Ok((s, distance_from_identity(&holonomy(curve, &conn, steps)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(TrivialityReport {
        group,
        deviations,
        worst,
        tol,
        trivial: worst <= tol,
    })
}

/// Nested line integrals `∫_{t₁<…<t_k} w¹(γ̇(t₁))⋯wᵏ(γ̇(t_k))` for every
/// prefix `w¹…wʲ`, integrated as one triangular ODE with RK4.
pub fn iterated_integrals(curve: &SampledCurve, forms: &[OneForm], steps: usize) -> Result<Vec<f64>> {
    if forms.is_empty() {
        return Err(Error::Empty("forms"));
    }
    for f in forms {
        if f.dim != curve.dim() {
            return Err(Error::Inconsistent("form and curve dimensions differ".into()));
        }
        f.validate()?;
    }
    let k = forms.len();
    let d = curve.dim();
    let (mut x, mut v) = (vec![0.0; d], vec![0.0; d]);
    let mut rates = |t: f64| -> Vec<f64> {
        curve.eval_into(t, &mut x, &mut v);
        forms.iter().map(|f| f.pair(&x, &v)).collect()
    };
    // y′₀ = a₀, y′ⱼ = yⱼ₋₁ aⱼ.
    let field = |a: &[f64], y: &[f64]| -> Vec<f64> {
        (0..k).map(|j| if j == 0 { a[0] } else { y[j - 1] * a[j] }).collect()
    };
    let axpy = |y: &[f64], s: f64, dy: &[f64]| -> Vec<f64> { y.iter().zip(dy).map(|(a, b)| a + s * b).collect() };
    let sub = per_segment(curve, steps.max(MIN_STEPS));
    let mut y = vec![0.0; k];
    let mut aa = rates(0.0);
    for seg in 0..curve.segments() {
        let (t0, t1) = (curve.param(seg), curve.param(seg + 1));
        let h = (t1 - t0) / sub as f64;
        for s in 0..sub {
            let ta = t0 + s as f64 * h;
            let tb = if s + 1 == sub { t1 } else { ta + h };
            let am = rates(ta + 0.5 * h);
            let ab = rates(tb);
            let k1 = field(&aa, &y);
            let k2 = field(&am, &axpy(&y, 0.5 * h, &k1));
            let k3 = field(&am, &axpy(&y, 0.5 * h, &k2));
            let k4 = field(&ab, &axpy(&y, h, &k3));
            for j in 0..k {
                y[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
            }
            aa = ab;
        }
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(t1));
        }
    }
    Ok(y)
}
