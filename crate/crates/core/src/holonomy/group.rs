use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::word::{arc_name, Word};
use crate::{Error, Result};

/// Group elements and algebra elements alike: complex square matrices.
/// Real groups keep every imaginary part at zero.
pub type Mat = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The matrix groups transport can run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    SU2,
    SO3,
    SL2R,
    /// Abelian, so not semi-simple: holonomy only sees the enclosed flux.
    U1,
}

impl GroupKind {
    pub const ALL: [GroupKind; 4] = [GroupKind::SU2, GroupKind::SO3, GroupKind::SL2R, GroupKind::U1];

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::SU2 => "SU2",
            GroupKind::SO3 => "SO3",
            GroupKind::SL2R => "SL2R",
            GroupKind::U1 => "U1",
        }
    }

    /// Matrix size.
    pub fn n(self) -> usize {
        match self {
            GroupKind::SU2 | GroupKind::SL2R => 2,
            GroupKind::SO3 => 3,
            GroupKind::U1 => 1,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, GroupKind::SO3 | GroupKind::SL2R)
    }

    pub fn identity(self) -> Mat {
        Mat::identity(self.n(), self.n())
    }

    /// A basis of the Lie algebra.
    pub fn basis(self) -> Vec<Mat> {
        let c = |re: f64| Complex64::new(re, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            // i times the Pauli matrices: anti-Hermitian and traceless.
            GroupKind::SU2 => vec![
                Mat::from_row_slice(2, 2, &[z, I, I, z]),
                Mat::from_row_slice(2, 2, &[z, c(1.0), c(-1.0), z]),
                Mat::from_row_slice(2, 2, &[I, z, z, -I]),
            ],
            GroupKind::SO3 => vec![
                Mat::from_row_slice(3, 3, &[z, z, z, z, z, c(-1.0), z, c(1.0), z]),
                Mat::from_row_slice(3, 3, &[z, z, c(1.0), z, z, z, c(-1.0), z, z]),
                Mat::from_row_slice(3, 3, &[z, c(-1.0), z, c(1.0), z, z, z, z, z]),
            ],
            GroupKind::SL2R => vec![
                Mat::from_row_slice(2, 2, &[c(1.0), z, z, c(-1.0)]),
                Mat::from_row_slice(2, 2, &[z, c(1.0), z, z]),
                Mat::from_row_slice(2, 2, &[z, z, c(1.0), z]),
            ],
            GroupKind::U1 => vec![Mat::from_element(1, 1, I)],
        }
    }

    /// `Σ c_b E_b`.
    pub fn algebra_element(self, coeffs: &[f64]) -> Mat {
        let mut m = Mat::zeros(self.n(), self.n());
        for (c, e) in coeffs.iter().zip(self.basis()) {
            m += e * Complex64::new(*c, 0.0);
        }
        m
    }

    /// Nearest group element to a matrix that is already close to the group.
    ///
    /// On group elements this is the identity up to rounding.
    pub fn project(self, u: &Mat) -> Mat {
        match self {
            GroupKind::U1 => {
                let z = u[(0, 0)];
                let r = z.norm();
                Mat::from_element(1, 1, if r > 0.0 { z / r } else { Complex64::new(1.0, 0.0) })
            }
            GroupKind::SU2 => {
                // [[a, −b̄], [b, ā]] with |a|² + |b|² = 1.
                let a = 0.5 * (u[(0, 0)] + u[(1, 1)].conj());
                let b = 0.5 * (u[(1, 0)] - u[(0, 1)].conj());
                let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
                let (a, b) = (a / r, b / r);
                Mat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
            }
            GroupKind::SO3 => {
                let re = u.map(|z| z.re);
                let svd = re.svd(true, true);
                let (uu, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
                let mut q = &uu * &vt;
                if q.determinant() < 0.0 {
                    let mut flip = uu.clone();
                    flip.column_mut(2).neg_mut();
                    q = flip * vt;
                }
                q.map(|x| Complex64::new(x, 0.0))
            }
            GroupKind::SL2R => {
                let re = u.map(|z| z.re);
                let det = re.determinant();
                let s = if det > 0.0 { det.sqrt() } else { 1.0 };
                re.map(|x| Complex64::new(x / s, 0.0))
            }
        }
    }

    /// How far `u` is from satisfying the group's defining equations.
    pub fn defect(self, u: &Mat) -> f64 {
        let n = self.n();
        if u.nrows() != n || u.ncols() != n {
            return f64::INFINITY;
        }
        let imag = if self.is_real() { u.iter().map(|z| z.im.abs()).fold(0.0, f64::max) } else { 0.0 };
        let det = u.determinant();
        match self {
            GroupKind::U1 => (u[(0, 0)].norm() - 1.0).abs(),
            GroupKind::SU2 | GroupKind::SO3 => {
                let gram = u.adjoint() * u - Mat::identity(n, n);
                gram.norm() + (det - 1.0).norm() + imag
            }
            GroupKind::SL2R => (det - 1.0).norm() + imag,
        }
    }

    /// A logarithm in the algebra for elements near the identity component.
    pub fn log(self, g: &Mat) -> Result<Mat> {
        let n = self.n();
        let none = || Error::Inconsistent(format!("{} element has no logarithm in the algebra", self.name()));
        match self {
            GroupKind::U1 => Ok(Mat::from_element(1, 1, I * g[(0, 0)].arg())),
            GroupKind::SU2 | GroupKind::SL2R => {
                // g = cos θ·I + (sin θ/θ)·ξ for elliptic elements, cosh/sinh
                // for hyperbolic ones, I + ξ for parabolic ones.
                let c = 0.5 * (g[(0, 0)] + g[(1, 1)]).re;
                let traceless = g - Mat::identity(n, n) * Complex64::new(c, 0.0);
                let scale = if (c - 1.0).abs() < 1e-14 {
                    1.0
                } else if c < 1.0 {
                    if c <= -1.0 + 1e-12 {
                        return Err(none());
                    }
                    let th = c.acos();
                    th / th.sin()
                } else {
                    let th = c.acosh();
                    th / th.sinh()
                };
                Ok(traceless * Complex64::new(scale, 0.0))
            }
            GroupKind::SO3 => {
                let c = ((g.trace().re - 1.0) / 2.0).clamp(-1.0, 1.0);
                let th = c.acos();
                if th > std::f64::consts::PI - 1e-9 {
                    return Err(none());
                }
                let scale = if th < 1e-12 { 0.5 } else { th / (2.0 * th.sin()) };
                Ok((g - g.transpose()) * Complex64::new(scale, 0.0))
            }
        }
    }

    /// Basis coefficients of an algebra element.
    pub fn coordinates(self, xi: &Mat) -> Vec<f64> {
        self.basis()
            .iter()
            .map(|e| {
                let ip: Complex64 = e.iter().zip(xi.iter()).map(|(a, b)| a.conj() * b).sum();
                ip.re / e.norm_squared()
            })
            .collect()
    }

    pub fn exp(self, xi: &Mat) -> Mat {
        self.project(&xi.exp())
    }

    /// A random element: Haar for SU2 and U1, `exp` of a random algebra
    /// element with coefficients in `[−1, 1]` otherwise.
    pub fn random_element<R: Rng>(self, rng: &mut R) -> Mat {
        match self {
            GroupKind::SU2 => {
                // A normalised Gaussian quaternion is Haar-distributed.
                let q: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
                let a = Complex64::new(q[0], q[1]);
                let b = Complex64::new(q[2], q[3]);
                self.project(&Mat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]))
            }
            GroupKind::U1 => {
                let th = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                Mat::from_element(1, 1, Complex64::from_polar(1.0, th))
            }
            _ => {
                let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                self.exp(&self.algebra_element(&c))
            }
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SU2" | "SU(2)" => Ok(GroupKind::SU2),
            "SO3" | "SO(3)" => Ok(GroupKind::SO3),
            "SL2R" | "SL(2,R)" => Ok(GroupKind::SL2R),
            "U1" | "U(1)" => Ok(GroupKind::U1),
            other => Err(Error::Parse(format!("unknown group `{other}`"))),
        }
    }
}

/// Frobenius distance from the identity.
pub fn distance_from_identity(u: &Mat) -> f64 {
    (u - Mat::identity(u.nrows(), u.ncols())).norm()
}

/// Evaluate a word under `letter ↦ g`, inverses for inverted letters.
///
/// Transport composes right to left, `U(γ₁·γ₂) = U(γ₂)·U(γ₁)`, so the
/// letters are multiplied in that order: the value is the transport along
/// any loop whose arcs realise the assignment.
pub fn word_map_eval(group: GroupKind, word: &Word, assignment: &BTreeMap<u32, Mat>) -> Result<Mat> {
    let mut u = group.identity();
    for l in &word.letters {
        let g = assignment.get(&l.arc).ok_or_else(|| Error::Unassigned(arc_name(l.arc)))?;
        let g = if l.inverse { inverse(group, g) } else { g.clone() };
        u = g * u;
    }
    Ok(u)
}

/// Group inverse, exact for the unitary groups.
pub fn inverse(group: GroupKind, g: &Mat) -> Mat {
    match group {
        GroupKind::SU2 | GroupKind::U1 => g.adjoint(),
        GroupKind::SO3 => g.transpose(),
        GroupKind::SL2R => {
            // [[a, b], [c, d]]⁻¹ = [[d, −b], [−c, a]] at determinant one.
            Mat::from_row_slice(2, 2, &[g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_lies_in_the_algebra() {
        for g in GroupKind::ALL {
            for e in g.basis() {
                let t = e.trace().norm();
                match g {
                    GroupKind::U1 => assert_eq!(e[(0, 0)].re, 0.0),
                    GroupKind::SL2R => assert!(t < 1e-15),
                    _ => {
                        assert!(t < 1e-15);
                        assert!((e.adjoint() + &e).norm() < 1e-15);
                    }
                }
                assert!(g.defect(&g.exp(&(e * Complex64::new(0.7, 0.0)))) < 1e-12);
            }
        }
    }

    #[test]
    fn projection_fixes_group_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in GroupKind::ALL {
            for _ in 0..20 {
                let u = g.random_element(&mut rng);
                assert!(g.defect(&u) < 1e-12, "{g}");
                assert!((g.project(&u) - &u).norm() < 1e-12, "{g}");
                let noisy = &u + Mat::from_element(g.n(), g.n(), Complex64::new(1e-4, 0.0));
                assert!(g.defect(&g.project(&noisy)) < 1e-12, "{g}");
            }
        }
    }

    #[test]
    fn log_inverts_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for g in GroupKind::ALL {
            for _ in 0..20 {
                let c: Vec<f64> = (0..g.basis().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let xi = g.algebra_element(&c);
                let back = g.log(&g.exp(&xi)).unwrap();
                assert!((back - &xi).norm() < 1e-10, "{g}");
                let cc = g.coordinates(&xi);
                for (a, b) in cc.iter().zip(&c) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn word_map_basics() {
        let g = GroupKind::SU2;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = g.random_element(&mut rng);
        let mut asg = BTreeMap::new();
        asg.insert(0, x.clone());
        assert_eq!(word_map_eval(g, &Word::empty(), &asg).unwrap(), g.identity());
        assert_eq!(word_map_eval(g, &"a".parse().unwrap(), &asg).unwrap(), x);
        assert!(matches!(
            word_map_eval(g, &"b".parse().unwrap(), &asg),
            Err(Error::Unassigned(_))
        ));
        let aa: Word = "a a'".parse().unwrap();
        assert!(distance_from_identity(&word_map_eval(g, &aa, &asg).unwrap()) < 1e-14);
    }

    #[test]
    fn commutator_word_map_is_mostly_far_from_identity() {
        let g = GroupKind::SU2;
        let w: Word = "a b a' b'".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let far = (0..1000)
            .filter(|_| {
                let mut asg = BTreeMap::new();
                asg.insert(0, g.random_element(&mut rng));
                asg.insert(1, g.random_element(&mut rng));
                distance_from_identity(&word_map_eval(g, &w, &asg).unwrap()) > 0.1
            })
            .count();
        assert!(far > 500, "{far}");
    }

    #[test]
    fn inverse_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in GroupKind::ALL {
            let u = g.random_element(&mut rng);
            assert!(distance_from_identity(&(inverse(g, &u) * &u)) < 1e-12, "{g}");
        }
    }
}
