//! A reusable family of test curves built on one "star" of arcs.
//!
//! All arcs meet only at their ends. Four petals of a three-leaved rose leave
//! the origin `O` and return to it, four spikes run from `O` to a tip `Pₖ`,
//! and every tip carries two short sub-spikes. Any walk on this graph that
//! starts and ends at `O` is a loop whose ground-truth word is known.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

use rand::Rng;

use super::synth::{Arc, CurveSpec};
use crate::word::{Letter, Word};
use crate::{Error, Result};

pub const PETALS: u32 = 4;
pub const SPIKES: u32 = 4;
const PETAL_RADIUS: f64 = 1.0;
const SPIKE_LENGTH: f64 = 0.8;
const SUB_SPIKE_LENGTH: f64 = 0.3;
const SUB_SPIKE_TURN: f64 = std::f64::consts::FRAC_PI_3;
const PETAL_VERTICES: usize = 240;

pub fn petal_id(k: u32) -> u32 {
    k
}

pub fn spike_id(k: u32) -> u32 {
    PETALS + k
}

pub fn sub_spike_id(k: u32, side: u32) -> u32 {
    PETALS + SPIKES + 2 * k + side
}

fn lift(p: [f64; 2], dim: usize) -> Vec<f64> {
    let mut v = vec![p[0], p[1]];
    if dim >= 3 {
        v.push(0.2 * (p[0] * p[0] - p[1] * p[1]));
    }
    for k in 3..dim {
        v.push(0.1 * k as f64 * p[0] * p[1]);
    }
    v
}

fn spike_tip(k: u32) -> [f64; 2] {
    let a = FRAC_PI_4 + FRAC_PI_2 * k as f64;
    [SPIKE_LENGTH * a.cos(), SPIKE_LENGTH * a.sin()]
}

/// Every arc of the star, embedded in `ℝ^dim` by an injective lift of the
/// plane (`dim ≥ 2`).
pub fn star_arcs(dim: usize) -> Vec<Arc> {
    let mut arcs = Vec::new();
    for k in 0..PETALS {
        let centre = FRAC_PI_2 * k as f64;
        let pts = (0..=PETAL_VERTICES)
            .map(|j| {
                let phi = centre - FRAC_PI_6 + 2.0 * FRAC_PI_6 * j as f64 / PETAL_VERTICES as f64;
                let r = if j == 0 || j == PETAL_VERTICES {
                    0.0
                } else {
                    PETAL_RADIUS * (3.0 * (phi - centre)).cos()
                };
                lift([r * phi.cos(), r * phi.sin()], dim)
            })
            .collect();
        arcs.push(Arc::new(petal_id(k), pts));
    }
    for k in 0..SPIKES {
        arcs.push(Arc::new(spike_id(k), vec![lift([0.0, 0.0], dim), lift(spike_tip(k), dim)]));
    }
    for k in 0..SPIKES {
        let tip = spike_tip(k);
        let base = FRAC_PI_4 + FRAC_PI_2 * k as f64;
        for side in 0..2 {
            let a = base + if side == 0 { SUB_SPIKE_TURN } else { -SUB_SPIKE_TURN };
            let end = [tip[0] + SUB_SPIKE_LENGTH * a.cos(), tip[1] + SUB_SPIKE_LENGTH * a.sin()];
            arcs.push(Arc::new(sub_spike_id(k, side), vec![lift(tip, dim), lift(end, dim)]));
        }
    }
    arcs
}

/// A named corpus entry.
#[derive(Debug, Clone)]
pub struct CorpusCurve {
    pub name: String,
    pub spec: CurveSpec,
}

fn entry(name: &str, dim: usize, word: &str) -> CorpusCurve {
    CorpusCurve {
        name: name.to_string(),
        spec: spec_for(dim, &word_from_names(word)),
    }
}

/// Build the spec for a word over the star's arc ids, keeping only the
/// arcs the word uses.
pub fn spec_for(dim: usize, word: &Word) -> CurveSpec {
    let used: std::collections::BTreeSet<u32> = word.letters.iter().map(|l| l.arc).collect();
    let arcs = star_arcs(dim).into_iter().filter(|a| used.contains(&a.id)).collect();
    CurveSpec::from_word(dim, arcs, word)
}

/// Parse a word written with star names: `pK` petal, `sK` spike, `tK.S`
/// sub-spike, each optionally followed by `'`.
pub fn parse_star_word(text: &str) -> Result<Word> {
    let bad = |tok: &str| Error::Parse(format!("unknown star arc `{tok}`"));
    let index = |s: &str, bound: u32, tok: &str| -> Result<u32> {
        s.parse::<u32>().ok().filter(|&k| k < bound).ok_or_else(|| bad(tok))
    };
    text.split_whitespace()
        .map(|tok| {
            let (name, inverse) = match tok.strip_suffix('\'') {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let (kind, rest) = name.split_at(name.chars().next().map_or(0, char::len_utf8));
            let arc = match kind {
                "p" => petal_id(index(rest, PETALS, tok)?),
                "s" => spike_id(index(rest, SPIKES, tok)?),
                "t" => {
                    let (k, side) = rest.split_once('.').ok_or_else(|| bad(tok))?;
                    sub_spike_id(index(k, SPIKES, tok)?, index(side, 2, tok)?)
                }
                _ => return Err(bad(tok)),
            };
            Ok(Letter { arc, inverse })
        })
        .collect::<Result<Vec<_>>>()
        .map(Word::new)
}

/// [`parse_star_word`] for literals known to be valid.
pub fn word_from_names(text: &str) -> Word {
    parse_star_word(text).expect("valid star word")
}

/// Hand-picked loops at the origin covering the standard shapes.
pub fn named_loops() -> Vec<CorpusCurve> {
    vec![
        entry("petal-out-and-back", 2, "p0 p0'"),
        entry("spike-whisker", 2, "s0 s0'"),
        entry("spur-abb'c", 2, "p0 s1 s1' p1"),
        entry("abab'a'", 2, "p0 p1 p0 p1' p0'"),
        entry("commutator", 2, "p0 p1 p0' p1'"),
        entry("figure-eight", 2, "p0 p2"),
        entry("nested-whisker", 2, "s0 t0.0 t0.0' t0.1 t0.1' s0'"),
        entry("petal-whisker-nest", 2, "p0 p1 s2 s2' p1' p0'"),
        entry("conjugated-petal", 2, "p1 p0 p1'"),
        entry("double-petal", 2, "p0 p0"),
        entry("branch-at-root", 2, "s0 s0' s1 s1' s2 s2'"),
        entry("whisker-3d", 3, "p0 s1 t1.0 t1.0' s1' p0'"),
        entry("commutator-3d", 3, "p2 p3 p2' p3'"),
        entry("petal-4d", 4, "p1 p3 p3' p1'"),
    ]
}

/// Random walk on the star from the origin back to it, of `moves` steps.
/// Each step is a petal (either direction) or a spike excursion with at most
/// one sub-spike excursion at its tip. With `whisker` set the walk is
/// followed by its own reverse, so the loop is tree-like.
pub fn random_loop<R: Rng>(rng: &mut R, moves: usize, whisker: bool) -> Word {
    let mut letters = Vec::new();
    for _ in 0..moves {
        if rng.gen_bool(0.5) {
            let p = Letter::new(petal_id(rng.gen_range(0..PETALS)));
            letters.push(if rng.gen_bool(0.5) { p } else { p.inv() });
        } else {
            let k = rng.gen_range(0..SPIKES);
            letters.push(Letter::new(spike_id(k)));
            for _ in 0..rng.gen_range(0..=1) {
                let t = Letter::new(sub_spike_id(k, rng.gen_range(0..2)));
                letters.push(t);
                letters.push(t.inv());
            }
            letters.push(Letter::new(spike_id(k)).inv());
        }
    }
    let mut word = Word::new(letters);
    if whisker {
        word = word.concat(&word.inverse());
    }
    word
}

/// The named loops plus `random` seeded random walks, half of them
/// tree-like by construction.
pub fn corpus<R: Rng>(rng: &mut R, random: usize) -> Vec<CorpusCurve> {
    let mut out = named_loops();
    for k in 0..random {
        let whisker = k % 2 == 0;
        let moves = rng.gen_range(1..=if whisker { 2 } else { 4 });
        let word = random_loop(rng, moves, whisker);
        out.push(CorpusCurve {
            name: format!("random-{k}"),
            spec: spec_for(2, &word),
        });
    }
    out
}

/// Two collinear sub-arcs `O → (½, 0) → (1, 0)` and, for comparison, a bent
/// pair turning by a right angle at the shared point. Either way the loop is
/// `a b b⁻¹ a⁻¹`.
pub fn collinear_pair(bent: bool) -> CurveSpec {
    let far = if bent { vec![0.5, 0.5] } else { vec![1.0, 0.0] };
    let arcs = vec![
        Arc::new(0, vec![vec![0.0, 0.0], vec![0.5, 0.0]]),
        Arc::new(1, vec![vec![0.5, 0.0], far]),
    ];
    CurveSpec::from_word(2, arcs, &"a b b' a'".parse().expect("literal word"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_star_arcs_validate() {
        for dim in 2..=4 {
            for a in star_arcs(dim) {
                a.check_embedded(1e-3).unwrap();
            }
        }
    }

    #[test]
    fn corpus_specs_are_valid_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in corpus(&mut rng, 20) {
            c.spec.validate(1e-3).unwrap_or_else(|e| panic!("{}: {e}", c.name));
        }
    }

    #[test]
    fn whisker_walks_reduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(random_loop(&mut rng, 4, true).is_whisker());
        }
    }
}
