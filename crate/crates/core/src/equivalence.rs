//! Four independent answers to "is this loop tree-like?" and, through the
//! loop `γ₁·γ̄₂`, to "are these two loops equivalent?":
//!
//! * (a) the reduced word is empty;
//! * (b) the whisker-removal homotopy passes the thinness check and ends at
//!   a constant curve;
//! * (c) transport around the loop is trivial for seeded random connections
//!   (with a tube connection built to separate it as a fallback);
//! * (d) the loop factors through a tree with a 1-Lipschitz fold.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{decompose, ArcDecomposition, DecomposeOptions, SampledCurve};
use crate::geom::dist;
use crate::holonomy::{distinguishing_connection, holonomy, holonomy_trivial, distance_from_identity, GroupKind, Mat};
use crate::homotopy::{check_thin, image_containment, remove_whiskers};
use crate::tree::{factorize, DEFAULT_THETA_TOL};
use crate::word::Word;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    /// A route could not decide at the configured resolution.
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Equivalent => "equivalent",
            Verdict::NotEquivalent => "not-equivalent",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    Word,
    Homotopy,
    Holonomy,
    Tree,
}

impl Route {
    pub fn tag(self) -> char {
        match self {
            Route::Word => 'a',
            Route::Homotopy => 'b',
            Route::Holonomy => 'c',
            Route::Tree => 'd',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryOptions {
    pub decompose: DecomposeOptions,
    pub theta_tol: f64,
    /// Relative tolerance on the 2×2 minors of the homotopy Jacobian.
    pub tol_rank: f64,
    /// Relative tolerance on the boundary partial derivatives.
    pub tol_edge: f64,
    /// Uniform `r` steps of the halting stage.
    pub n_r: usize,
    /// `r` steps between start times of the contraction stage.
    pub per_window: usize,
    pub group: GroupKind,
    pub connections: usize,
    pub seed: u64,
    /// `‖U − I‖` at or below this counts as trivial.
    pub tol_trivial: f64,
    /// `‖U − I‖` above this counts as a separating connection.
    pub tol_separating: f64,
    /// Fold error allowed, relative to the curve length.
    pub tol_factor: f64,
    pub lipschitz_max: f64,
    pub lipschitz_pairs: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            decompose: DecomposeOptions::default(),
            theta_tol: DEFAULT_THETA_TOL,
            tol_rank: 1e-3,
            tol_edge: 1e-6,
            n_r: 256,
            per_window: 64,
            group: GroupKind::SU2,
            connections: 20,
            seed: 0,
            tol_trivial: 1e-5,
            tol_separating: 1e-2,
            tol_factor: 1e-3,
            lipschitz_max: 1.01,
            lipschitz_pairs: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteOutcome {
    pub route: Route,
    pub verdict: Verdict,
    /// The measured quantities behind the verdict.
    pub detail: BTreeMap<String, f64>,
    pub note: String,
}

impl RouteOutcome {
    fn new(route: Route, verdict: Verdict, note: impl Into<String>) -> Self {
        Self {
            route,
            verdict,
            detail: BTreeMap::new(),
            note: note.into(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.detail.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    /// Words of the two curves in the labelling of the combined loop; for a
    /// single loop the second is empty.
    pub word_a: String,
    pub word_b: String,
    pub loop_word: String,
    pub reduced: String,
    pub routes: Vec<RouteOutcome>,
    /// Routes (a), (b), (d) agree, and so does (c) unless the group is
    /// abelian.
    pub agree: bool,
    pub verdict: Verdict,
}

impl EquivalenceReport {
    pub fn route(&self, r: Route) -> &RouteOutcome {
        self.routes.iter().find(|o| o.route == r).expect("every route runs")
    }
}

fn route_homotopy(curve: &SampledCurve, dec: &ArcDecomposition, opts: &BatteryOptions) -> RouteOutcome {
    let run = || -> Result<RouteOutcome> {
        let (grid, target) = remove_whiskers(curve, dec, opts.theta_tol, opts.n_r, opts.per_window)?;
        let thin = check_thin(&grid, opts.tol_rank, opts.tol_edge)?;
        let image = image_containment(&grid, curve, dec.eps_geo)?;
        let base = curve.point(0);
        let spread = (0..target.len()).map(|i| dist(target.point(i), base)).fold(0.0, f64::max);
        let out = |v, note: &str| {
            RouteOutcome::new(Route::Homotopy, v, note)
                .with("max_minor", thin.max_minor)
                .with("max_edge_partial", thin.max_edge_partial)
                .with("c1_ratio", thin.c1_ratio)
                .with("image_distance", image.max_distance)
                .with("target_spread", spread)
                .with("rows", grid.n_r() as f64 + 1.0)
        };
        Ok(if !thin.pass || !image.within {
            out(Verdict::Undecided, "homotopy failed the thinness check")
        } else if spread <= dec.eps_geo {
            out(Verdict::Equivalent, "thin homotopy to the constant loop")
        } else {
            out(Verdict::NotEquivalent, "thin homotopy ends at a reduced non-constant loop")
        })
    };
    run().unwrap_or_else(|e| RouteOutcome::new(Route::Homotopy, Verdict::Undecided, e.to_string()))
}

fn route_holonomy(curve: &SampledCurve, dec: &ArcDecomposition, opts: &BatteryOptions) -> RouteOutcome {
    let run = || -> Result<RouteOutcome> {
        let rep = holonomy_trivial(curve, opts.group, opts.connections, opts.seed, opts.tol_trivial)?;
        let base = RouteOutcome::new(Route::Holonomy, Verdict::Undecided, "")
            .with("worst_sampled", rep.worst)
            .with("connections", rep.deviations.len() as f64);
        if rep.trivial {
            return Ok(RouteOutcome {
                verdict: Verdict::Equivalent,
                note: format!("all {} {} connections trivial", rep.deviations.len(), opts.group),
                ..base
            });
        }
        if rep.worst > opts.tol_separating {
            return Ok(RouteOutcome {
                verdict: Verdict::NotEquivalent,
                note: format!("a sampled {} connection separates", opts.group),
                ..base
            });
        }
        // Sampling was inconclusive: aim a tube connection at the word map.
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let target: BTreeMap<u32, Mat> = (0..dec.arcs.len() as u32)
            .map(|a| (a, opts.group.random_element(&mut rng)))
            .collect();
        let conn = distinguishing_connection(curve, dec, opts.group, &target)?;
        let dev = distance_from_identity(&holonomy(curve, &conn, curve.segments())?);
        let verdict = if dev > opts.tol_separating { Verdict::NotEquivalent } else { Verdict::Undecided };
        Ok(RouteOutcome {
            verdict,
            note: "sampling inconclusive; tube connection".into(),
            ..base.with("tube_deviation", dev)
        })
    };
    run().unwrap_or_else(|e| RouteOutcome::new(Route::Holonomy, Verdict::Undecided, e.to_string()))
}

fn route_tree(curve: &SampledCurve, dec: &ArcDecomposition, opts: &BatteryOptions) -> RouteOutcome {
    match factorize(curve, dec, opts.theta_tol) {
        Ok(fac) => {
            let rep = fac.report(opts.lipschitz_pairs, opts.seed);
            let ok = rep.max_error <= opts.tol_factor * rep.total_length.max(f64::MIN_POSITIVE)
                && rep.lipschitz <= opts.lipschitz_max;
            let out = RouteOutcome::new(
                Route::Tree,
                if ok { Verdict::Equivalent } else { Verdict::Undecided },
                if ok { "factors through a tree" } else { "tree factorization out of tolerance" },
            );
            out.with("max_error", rep.max_error)
                .with("total_length", rep.total_length)
                .with("lipschitz", rep.lipschitz)
                .with("edges", fac.tree.edges.len() as f64)
        }
        Err(Error::NotWhisker(w)) => {
            RouteOutcome::new(Route::Tree, Verdict::NotEquivalent, format!("no tree: word reduces to {w}"))
        }
        Err(e) => RouteOutcome::new(Route::Tree, Verdict::Undecided, e.to_string()),
    }
}

fn conclude(word_a: &Word, word_b: &Word, loop_word: &Word, routes: Vec<RouteOutcome>, group: GroupKind) -> EquivalenceReport {
    let core: Vec<Verdict> = routes
        .iter()
        .filter(|r| r.route != Route::Holonomy || group != GroupKind::U1)
        .map(|r| r.verdict)
        .collect();
    let agree = core.iter().all(|&v| v == core[0]);
    let verdict = if agree { core[0] } else { Verdict::Undecided };
    EquivalenceReport {
        word_a: word_a.to_string(),
        word_b: word_b.to_string(),
        loop_word: loop_word.to_string(),
        reduced: loop_word.reduce().to_string(),
        routes,
        agree,
        verdict,
    }
}

fn battery(curve: &SampledCurve, dec: &ArcDecomposition, split: Option<usize>, opts: &BatteryOptions) -> Result<EquivalenceReport> {
    let loop_word = dec.word();
    let (wa, wb) = match split {
        None => (loop_word.clone(), Word::empty()),
        Some(join) => {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for iv in &dec.intervals {
                if iv.end <= join {
                    a.push(iv.letter);
                } else if iv.start >= join {
                    b.push(iv.letter);
                } else {
                    return Err(Error::Resolution {
                        t: curve.param(join),
                        reason: "a letter runs across the join of the two curves".into(),
                    });
                }
            }
            (Word::new(a), Word::new(b).inverse())
        }
    };
    let word = RouteOutcome::new(
        Route::Word,
        if wa.reduce() == wb.reduce() { Verdict::Equivalent } else { Verdict::NotEquivalent },
        format!("reduced words `{}` and `{}`", wa.reduce(), wb.reduce()),
    );
    let (homotopy, (holonomy, tree)) = rayon::join(
        || route_homotopy(curve, dec, opts),
        || rayon::join(|| route_holonomy(curve, dec, opts), || route_tree(curve, dec, opts)),
    );
    Ok(conclude(&wa, &wb, &loop_word, vec![word, homotopy, holonomy, tree], opts.group))
}

/// Run every route on one loop: is it equivalent to the constant loop?
pub fn loop_battery(curve: &SampledCurve, opts: &BatteryOptions) -> Result<EquivalenceReport> {
    if !curve.is_loop() {
        return Err(Error::NotALoop);
    }
    let dec = decompose(curve, &opts.decompose)?;
    battery(curve, &dec, None, opts)
}

/// Run every route on `a·b̄`. Both curves must be loops at the same
/// basepoint, halting at their ends.
pub fn crosscheck(a: &SampledCurve, b: &SampledCurve, opts: &BatteryOptions) -> Result<EquivalenceReport> {
    if !a.is_loop() || !b.is_loop() {
        return Err(Error::NotALoop);
    }
    let joined = a.concat(&b.reverse(), opts.decompose.eps_geo)?;
    let dec = decompose(&joined, &opts.decompose)?;
    battery(&joined, &dec, Some(a.len() - 1), opts)
}

/// The loop that stays at `base` for the whole parameter interval.
pub fn constant_loop(base: &[f64], samples: usize) -> Result<SampledCurve> {
    let n = samples.max(2);
    let points = (0..n).flat_map(|_| base.iter().cloned()).collect();
    SampledCurve::new(base.len(), crate::curve::uniform_grid(n), points, vec![0.0; n * base.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::corpus::{spec_for, word_from_names};
    use crate::curve::{synth_curve, SynthOptions};

    fn synth(names: &str) -> SampledCurve {
        synth_curve(&spec_for(2, &word_from_names(names)), &SynthOptions::default())
            .unwrap()
            .curve
    }

    fn all(rep: &EquivalenceReport, v: Verdict) {
        for r in &rep.routes {
            assert_eq!(r.verdict, v, "route ({}) {r:?}", r.route.tag());
        }
        assert!(rep.agree);
        assert_eq!(rep.verdict, v);
    }

    #[test]
    fn spur_word_is_equivalent_to_its_reduction() {
        let rep = crosscheck(&synth("p0 s1 s1' p1"), &synth("p0 p1"), &BatteryOptions::default()).unwrap();
        all(&rep, Verdict::Equivalent);
        assert_eq!(rep.word_a.split(' ').count(), 4);
        assert_eq!(rep.word_b.split(' ').count(), 2);
    }

    #[test]
    fn a_loop_is_equivalent_to_itself() {
        let c = synth("p0 p1 p0' p1'");
        all(&crosscheck(&c, &c, &BatteryOptions::default()).unwrap(), Verdict::Equivalent);
    }

    #[test]
    fn commutator_is_not_the_constant_loop() {
        let c = synth("p0 p1 p0' p1'");
        let k = constant_loop(c.point(0), 64).unwrap();
        all(&crosscheck(&c, &k, &BatteryOptions::default()).unwrap(), Verdict::NotEquivalent);
    }

    #[test]
    fn abelian_holonomy_may_disagree() {
        let c = synth("p0 p1 p0' p1'");
        let opts = BatteryOptions {
            group: GroupKind::U1,
            ..BatteryOptions::default()
        };
        let rep = loop_battery(&c, &opts).unwrap();
        assert_eq!(rep.route(Route::Holonomy).verdict, Verdict::Equivalent);
        assert!(rep.agree);
        assert_eq!(rep.verdict, Verdict::NotEquivalent);
    }
}
