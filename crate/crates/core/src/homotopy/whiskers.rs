use std::collections::BTreeMap;

use crate::curve::{uniform_grid, ArcDecomposition, LetterInterval, SampledCurve};
use crate::reparam::padded_lengths;
use crate::tree::{factorize, Factorization};
use crate::{Error, Result};

use super::contract::{default_r_step, schedule_axis, Contraction};
use super::grid::{halt, HomotopyGrid};
use super::step2::vanish_at_gaps;

/// The piece of a decomposed curve spanned by letters `first..last`, from the
/// end of the gap before `first` to the start of the gap after `last - 1`.
pub fn sub_decomposition(
    curve: &SampledCurve,
    decomp: &ArcDecomposition,
    first: usize,
    last: usize,
) -> Result<(SampledCurve, ArcDecomposition, usize)> {
    if !(first < last && last <= decomp.intervals.len()) {
        return Err(Error::Inconsistent(format!("bad letter range {first}..{last}")));
    }
    let sa = decomp.a0_samples[first].1;
    let sb = decomp.a0_samples[last].0;
    let sub = curve.slice(sa, sb)?;
    let end = sb - sa;
    let mut a0_samples: Vec<(usize, usize)> = decomp.a0_samples[first..=last]
        .iter()
        .map(|&(a, b)| (a.saturating_sub(sa), b.saturating_sub(sa).min(end)))
        .collect();
    a0_samples[0] = (0, 0);
    *a0_samples.last_mut().unwrap() = (end, end);
    let intervals: Vec<LetterInterval> = decomp.intervals[first..last]
        .iter()
        .map(|iv| LetterInterval {
            start: iv.start - sa,
            end: iv.end - sa,
            core: (iv.core.0 - sa, iv.core.1 - sa),
            ..*iv
        })
        .collect();
    let p = sub.params();
    let mut strata: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for iv in &intervals {
        strata.entry(iv.multiplicity).or_default().push((p[iv.start], p[iv.end]));
    }
    let a0 = a0_samples.iter().map(|&(a, b)| (p[a], p[b])).collect();
    let dec = ArcDecomposition {
        strata,
        a0,
        a0_samples,
        intervals,
        arcs: decomp.arcs.clone(),
        eps_geo: decomp.eps_geo,
    };
    Ok((sub, dec, sa))
}

/// One whisker segment of a curve, factored through its own tree.
struct Segment {
    offset: usize,
    fac: Factorization,
    padded: Vec<f64>,
}

/// Contract every maximal whisker subword of a curve at once.
///
/// First the curve is made to halt at every `A₀` component. Then each
/// whisker segment is factored through its tree and contracted to its root;
/// all trees share one padded-length sequence, so one `L′` drives them all.
/// Returns the composite grid and the target curve, whose word is the
/// reduced source word. The halting stage has `n_r` uniform steps in `r`;
/// the contraction stage has `per` steps between start times.
pub fn remove_whiskers(
    curve: &SampledCurve,
    decomp: &ArcDecomposition,
    theta_tol: f64,
    n_r: usize,
    per: usize,
) -> Result<(HomotopyGrid, SampledCurve)> {
    let runs = decomp.word().whisker_runs();
    if runs.is_empty() {
        let g = HomotopyGrid::constant(curve, uniform_grid(n_r + 1), "no-whiskers")?;
        return Ok((g, curve.clone()));
    }
    let (halting, halted) = vanish_at_gaps(curve, decomp, n_r)?;

    let mut segments = Vec::with_capacity(runs.len());
    for &(first, last) in &runs {
        let (sub, dec, offset) = sub_decomposition(&halted, decomp, first, last)?;
        let fac = factorize(&sub, &dec, theta_tol)?;
        segments.push(Segment {
            offset,
            fac,
            padded: Vec::new(),
        });
    }
    let lengths: Vec<f64> = segments
        .iter()
        .flat_map(|s| s.fac.tree.edges.iter().map(|e| e.length))
        .collect();
    let padded = padded_lengths(&lengths, 2.0 * lengths.iter().sum::<f64>())?;
    let total: f64 = padded.iter().sum();
    let mut at = 0;
    for s in &mut segments {
        let n = s.fac.tree.edges.len();
        s.padded = padded[at..at + n].to_vec();
        at += n;
    }
    let contractions = segments
        .iter()
        .map(|s| Contraction::new(&s.fac.tree, &s.padded, total))
        .collect::<Result<Vec<_>>>()?;

    let mut starts: Vec<f64> = contractions.iter().flat_map(|c| c.start_times()).collect();
    starts.sort_by(f64::total_cmp);
    let d = curve.dim();
    let base = halted.points_flat();
    let axis = schedule_axis(&starts, total, per, default_r_step(curve));
    let contract = HomotopyGrid::from_rows(d, curve.params().to_vec(), axis, "contract", |_, r, out| {
        out.copy_from_slice(base);
        let rr = total * halt(r);
        for (s, chi) in segments.iter().zip(&contractions) {
            let lo = s.offset * d;
            let hi = lo + s.fac.curve.len() * d;
            chi.row(&s.fac, rr, &mut out[lo..hi]);
        }
    })?;

    let mut points = base.to_vec();
    let mut tangents = halted.tangents_flat().to_vec();
    for s in &segments {
        let root = s.fac.fold(crate::tree::TreePoint::Vertex(crate::tree::FactorTree::ROOT));
        for i in s.offset..s.offset + s.fac.curve.len() {
            points[i * d..(i + 1) * d].copy_from_slice(&root);
            tangents[i * d..(i + 1) * d].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let target = SampledCurve::new(d, curve.params().to_vec(), points, tangents)?;
    let grid = halting.then(&contract)?;
    Ok((grid, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::corpus::{spec_for, word_from_names};
    use crate::curve::{decompose, synth_curve, DecomposeOptions, SynthOptions};
    use crate::homotopy::grid::{check_thin, image_containment};
    use crate::tree::DEFAULT_THETA_TOL;

    fn run(names: &str) -> (SampledCurve, ArcDecomposition, HomotopyGrid, SampledCurve) {
        let spec = spec_for(2, &word_from_names(names));
        let c = synth_curve(&spec, &SynthOptions::default()).unwrap().curve;
        let opts = DecomposeOptions::default();
        let dec = decompose(&c, &opts).unwrap();
        let (g, target) = remove_whiskers(&c, &dec, DEFAULT_THETA_TOL, 256, 64).unwrap();
        (c, dec, g, target)
    }

    #[test]
    fn spur_word_loses_its_whisker() {
        let (c, dec, g, target) = run("p0 s1 s1' p1");
        assert_eq!(dec.word().to_string(), "a b b' c");
        let td = decompose(&target, &DecomposeOptions::default()).unwrap();
        assert_eq!(td.word().canonical(), dec.word().reduce().canonical());
        let rep = check_thin(&g, 1e-3, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(image_containment(&g, &c, 1e-3).unwrap().within);
        assert_eq!(g.row(g.n_r()), target.points_flat());
    }

    #[test]
    fn whisker_collapses_to_a_point() {
        let (c, _, g, target) = run("s0 t0.1 t0.1' s0' p2 s2 s2' p2'");
        let base = c.point(0);
        for i in 0..target.len() {
            assert!(crate::geom::dist(target.point(i), base) < 1e-9);
        }
        let rep = check_thin(&g, 1e-3, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn reduced_word_is_untouched() {
        let (c, _, g, target) = run("p0 p1 p0' p1'");
        assert_eq!(target, c);
        assert_eq!(g.row(g.n_r()), c.points_flat());
    }
}
