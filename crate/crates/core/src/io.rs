//! Versioned TOML files for curve specs, sampled curves and connections.
//!
//! Every file carries `version = 1`; readers reject any other version.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::curve::corpus::{parse_star_word, spec_for};
use crate::curve::{Arc, CurveSpec, SampledCurve, Step};
use crate::holonomy::{ConnectionField, GroupKind, OneForm};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported file version {v} (expected {FORMAT_VERSION})")));
    }
    Ok(())
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn render<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Parse(e.to_string()))
}

/// A curve spec on disk: explicit arcs and traversal, or a word over the
/// built-in star (`star_word = "p0 s1 s1' p1"`).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecFile {
    version: u32,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    star_word: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    arcs: Vec<Arc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    traversal: Vec<Step>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dwell: Vec<f64>,
}

pub fn spec_from_str(text: &str) -> Result<CurveSpec> {
    let f: SpecFile = parse(text)?;
    check_version(f.version)?;
    if f.dim < 2 {
        return Err(Error::Parse(format!("dimension must be at least 2, got {}", f.dim)));
    }
    let mut spec = match f.star_word {
        Some(w) => {
            if !f.arcs.is_empty() || !f.traversal.is_empty() {
                return Err(Error::Parse("give either `star_word` or `arcs` + `traversal`, not both".into()));
            }
            spec_for(f.dim, &parse_star_word(&w)?)
        }
        None => CurveSpec {
            dim: f.dim,
            arcs: f.arcs,
            traversal: f.traversal,
            dwell: Vec::new(),
        },
    };
    spec.dwell = f.dwell;
    for a in &spec.arcs {
        if a.points.iter().any(|p| p.len() != spec.dim) {
            return Err(Error::Parse(format!("arc {} has points of the wrong dimension", a.id)));
        }
    }
    Ok(spec)
}

pub fn spec_to_string(spec: &CurveSpec) -> Result<String> {
    render(&SpecFile {
        version: FORMAT_VERSION,
        dim: spec.dim,
        star_word: None,
        arcs: spec.arcs.clone(),
        traversal: spec.traversal.clone(),
        dwell: spec.dwell.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CurveFile {
    version: u32,
    dim: usize,
    params: Vec<f64>,
    points: Vec<Vec<f64>>,
    tangents: Vec<Vec<f64>>,
}

pub fn curve_from_str(text: &str) -> Result<SampledCurve> {
    let f: CurveFile = parse(text)?;
    check_version(f.version)?;
    let flat = |rows: Vec<Vec<f64>>, what: &str| -> Result<Vec<f64>> {
        if rows.iter().any(|r| r.len() != f.dim) {
            return Err(Error::Parse(format!("{what} rows must have {} entries", f.dim)));
        }
        Ok(rows.into_iter().flatten().collect())
    };
    let points = flat(f.points, "point")?;
    let tangents = flat(f.tangents, "tangent")?;
    SampledCurve::new(f.dim, f.params, points, tangents)
}

pub fn curve_to_string(curve: &SampledCurve) -> Result<String> {
    let rows = |flat: &[f64]| flat.chunks(curve.dim()).map(<[f64]>::to_vec).collect();
    render(&CurveFile {
        version: FORMAT_VERSION,
        dim: curve.dim(),
        params: curve.params().to_vec(),
        points: rows(curve.points_flat()),
        tangents: rows(curve.tangents_flat()),
    })
}

/// A connection on disk: a seed for the random family, or explicit forms
/// (one per algebra basis element).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConnectionFile {
    version: u32,
    group: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forms: Vec<OneForm>,
}

pub fn connection_from_str(text: &str) -> Result<ConnectionField> {
    let f: ConnectionFile = parse(text)?;
    check_version(f.version)?;
    let group: GroupKind = f.group.parse()?;
    match (f.seed, f.forms.is_empty()) {
        (Some(seed), true) => Ok(ConnectionField::random(group, f.dim, seed)),
        (None, false) => {
            let c = ConnectionField::from_forms(group, f.forms)?;
            if c.dim() != f.dim {
                return Err(Error::Parse("form dimension differs from `dim`".into()));
            }
            Ok(c)
        }
        _ => Err(Error::Parse("give exactly one of `seed` and `forms`".into())),
    }
}

/// Seeded connections are written by seed, others by their forms. Tube
/// connections have no file form.
pub fn connection_to_string(conn: &ConnectionField) -> Result<String> {
    if !conn.is_explicit() {
        return Err(Error::Inconsistent("tube connections cannot be written to a file".into()));
    }
    render(&ConnectionFile {
        version: FORMAT_VERSION,
        group: conn.group().name().to_string(),
        dim: conn.dim(),
        seed: conn.seed(),
        forms: if conn.seed().is_some() { Vec::new() } else { conn.forms().to_vec() },
    })
}

pub fn read_to_string(path: impl AsRef<FsPath>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn read_spec(path: impl AsRef<FsPath>) -> Result<CurveSpec> {
    spec_from_str(&read_to_string(path)?)
}

pub fn read_curve(path: impl AsRef<FsPath>) -> Result<SampledCurve> {
    curve_from_str(&read_to_string(path)?)
}

pub fn read_connection(path: impl AsRef<FsPath>) -> Result<ConnectionField> {
    connection_from_str(&read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{synth_curve, SynthOptions};

    #[test]
    fn star_word_spec_round_trips() {
        let spec = spec_from_str("version = 1\ndim = 2\nstar_word = \"p0 s1 s1' p1\"\n").unwrap();
        assert_eq!(spec.word().len(), 4);
        let again = spec_from_str(&spec_to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn wrong_version_and_mixed_spec_are_rejected() {
        assert!(spec_from_str("version = 2\ndim = 2\nstar_word = \"p0\"\n").is_err());
        assert!(spec_from_str("version = 1\ndim = 2\nstar_word = \"q0\"\n").is_err());
        assert!(connection_from_str("version = 1\ngroup = \"SU2\"\ndim = 2\n").is_err());
        assert!(connection_from_str("version = 1\ngroup = \"SU7\"\ndim = 2\nseed = 1\n").is_err());
    }

    #[test]
    fn curve_round_trip_is_exact() {
        let spec = spec_from_str("version = 1\ndim = 3\nstar_word = \"p2 p3\"\n").unwrap();
        let opts = SynthOptions {
            samples_per_unit: 64,
            ..SynthOptions::default()
        };
        let c = synth_curve(&spec, &opts).unwrap().curve;
        let text = curve_to_string(&c).unwrap();
        assert_eq!(curve_from_str(&text).unwrap(), c);
    }

    #[test]
    fn connections_round_trip() {
        let seeded = ConnectionField::random(GroupKind::SO3, 2, 42);
        let back = connection_from_str(&connection_to_string(&seeded).unwrap()).unwrap();
        assert_eq!(back.forms(), seeded.forms());
        assert_eq!(back.seed(), Some(42));
        let explicit = ConnectionField::from_forms(GroupKind::U1, vec![OneForm::constant(&[0.5, -1.0])]).unwrap();
        let text = connection_to_string(&explicit).unwrap();
        let back = connection_from_str(&text).unwrap();
        assert_eq!(back.forms(), explicit.forms());
        assert_eq!(back.group(), GroupKind::U1);
    }
}
