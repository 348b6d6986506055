use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::group::{GroupKind, Mat};
use super::tube::TubeField;
use crate::{Error, Result};

/// Polynomial degree of randomly drawn forms.
pub const RANDOM_DEGREE: u32 = 2;

/// A scalar function on `ℝᵈ` from the family connections are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFunction {
    /// `Π xᵢ^{eᵢ}`.
    Monomial { exponents: Vec<u32> },
    /// `sin(ω·x + c)`.
    Sine { freq: Vec<f64>, phase: f64 },
}

impl BasisFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BasisFunction::Monomial { exponents } => exponents
                .iter()
                .zip(x)
                .map(|(&e, &xi)| xi.powi(e as i32))
                .product(),
            BasisFunction::Sine { freq, phase } => {
                (freq.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + phase).sin()
            }
        }
    }
}

/// Every exponent vector in `dim` variables of total degree at most `p`,
/// constant first.
pub fn monomials(dim: usize, p: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, p, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// One basis function and its coefficient in each coordinate direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(flatten)]
    pub function: BasisFunction,
    pub coeffs: Vec<f64>,
}

/// A real 1-form `w = w_μ(x) dx^μ` with `w_μ = Σ_k C_{μ,k} φ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub dim: usize,
    pub terms: Vec<Term>,
}

impl OneForm {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// Constant form `c_μ dx^μ`.
    pub fn constant(coeffs: &[f64]) -> Self {
        Self {
            dim: coeffs.len(),
            terms: vec![Term {
                function: BasisFunction::Monomial {
                    exponents: vec![0; coeffs.len()],
                },
                coeffs: coeffs.to_vec(),
            }],
        }
    }

    /// Monomials up to `degree` and one sinusoid per coordinate, every
    /// coefficient and frequency uniform in `[−1, 1]`.
    pub fn random<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Self {
        let mut terms: Vec<Term> = monomials(dim, degree)
            .into_iter()
            .map(|exponents| Term {
                function: BasisFunction::Monomial { exponents },
                coeffs: (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            })
            .collect();
        for mu in 0..dim {
            let freq = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut coeffs = vec![0.0; dim];
            coeffs[mu] = rng.gen_range(-1.0..=1.0);
            terms.push(Term {
                function: BasisFunction::Sine { freq, phase },
                coeffs,
            });
        }
        Self { dim, terms }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            let n = match &t.function {
                BasisFunction::Monomial { exponents } => exponents.len(),
                BasisFunction::Sine { freq, .. } => freq.len(),
            };
            if n != self.dim || t.coeffs.len() != self.dim {
                return Err(Error::Inconsistent(format!("form term has wrong dimension (expected {})", self.dim)));
            }
            if t.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Inconsistent("non-finite form coefficient".into()));
            }
        }
        Ok(())
    }

    /// `w_μ(x) v^μ`.
    pub fn pair(&self, x: &[f64], v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let c: f64 = t.coeffs.iter().zip(v).map(|(c, v)| c * v).sum();
                if c == 0.0 {
                    0.0
                } else {
                    c * t.function.eval(x)
                }
            })
            .sum()
    }
}

/// A connection `A = A_μ dx^μ` with values in a Lie algebra:
/// `A = Σ_b w_b E_b` for 1-forms `w_b` and the algebra basis `E_b`, plus
/// optional tube terms (see [`super::distinguishing_connection`]).
#[derive(Debug, Clone)]
pub struct ConnectionField {
    group: GroupKind,
    dim: usize,
    seed: Option<u64>,
    forms: Vec<OneForm>,
    tubes: Option<TubeField>,
}

impl ConnectionField {
    pub fn zero(group: GroupKind, dim: usize) -> Self {
        let nb = group.basis().len();
        Self {
            group,
            dim,
            seed: None,
            forms: vec![OneForm::zero(dim); nb],
            tubes: None,
        }
    }

    /// One random form per algebra basis element, drawn from a ChaCha
    /// stream seeded with `seed`.
    pub fn random(group: GroupKind, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forms = (0..group.basis().len())
            .map(|_| OneForm::random(dim, RANDOM_DEGREE, &mut rng))
            .collect();
        Self {
            group,
            dim,
            seed: Some(seed),
            forms,
            tubes: None,
        }
    }

    /// A connection from explicit forms, one per algebra basis element.
    pub fn from_forms(group: GroupKind, forms: Vec<OneForm>) -> Result<Self> {
        let nb = group.basis().len();
        if forms.len() != nb {
            return Err(Error::Inconsistent(format!("{group} needs {nb} forms, got {}", forms.len())));
        }
        let dim = forms[0].dim;
        for f in &forms {
            if f.dim != dim {
                return Err(Error::Inconsistent("forms of different dimensions".into()));
            }
            f.validate()?;
        }
        Ok(Self {
            group,
            dim,
            seed: None,
            forms,
            tubes: None,
        })
    }

    pub(crate) fn with_tubes(group: GroupKind, dim: usize, tubes: TubeField) -> Self {
        let mut c = Self::zero(group, dim);
        c.tubes = Some(tubes);
        c
    }

    pub fn group(&self) -> GroupKind {
        self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn forms(&self) -> &[OneForm] {
        &self.forms
    }

    /// Whether the field has a closed-form description (forms only).
    pub fn is_explicit(&self) -> bool {
        self.tubes.is_none()
    }

    /// Radius of the tube terms, if any.
    pub fn tube_radius(&self) -> Option<f64> {
        self.tubes.as_ref().map(|t| t.radius())
    }

    /// Algebra coordinates of `A_μ(x) v^μ`.
    pub fn coefficients_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.forms) {
            *o = f.pair(x, v);
        }
        if let Some(t) = &self.tubes {
            t.add_coefficients(x, v, out);
        }
    }

    /// `A_μ(x) v^μ` as a matrix.
    pub fn matrix(&self, x: &[f64], v: &[f64]) -> Mat {
        let mut c = vec![0.0; self.forms.len()];
        self.coefficients_into(x, v, &mut c);
        self.group.algebra_element(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count_and_order() {
        let m = monomials(2, 2);
        assert_eq!(m.len(), 6);
        assert_eq!(m[0], vec![0, 0]);
        assert_eq!(m[1], vec![1, 0]);
        assert_eq!(monomials(3, 2).len(), 10);
    }

    #[test]
    fn random_connection_is_reproducible_and_in_the_algebra() {
        let a = ConnectionField::random(GroupKind::SU2, 2, 11);
        let b = ConnectionField::random(GroupKind::SU2, 2, 11);
        assert_eq!(a.forms(), b.forms());
        assert_ne!(a.forms(), ConnectionField::random(GroupKind::SU2, 2, 12).forms());
        let m = a.matrix(&[0.3, -0.2], &[1.0, 0.5]);
        assert!((m.adjoint() + &m).norm() < 1e-14);
        assert!(m.trace().norm() < 1e-14);
    }

    #[test]
    fn constant_form_pairs_linearly() {
        let w = OneForm::constant(&[2.0, -1.0]);
        assert_eq!(w.pair(&[5.0, 7.0], &[1.0, 3.0]), -1.0);
    }
}
