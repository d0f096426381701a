//! Representatives of pre-Bloch group classes: formal rational combinations
//! of shape parameters.
//!
//! A [`PreBlochElement`] is a normalized list of `(coefficient, shape)` pairs.
//! The five-term relation is never applied symbolically. Relations are
//! elements in their own right, and the numeric invariants
//! ([`PreBlochElement::volume`], [`mu_regulator`]) vanish on them.

mod wedge;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::dilog::{self, DilogError, Flattening, RogersOffset};

pub use wedge::{
    bloch_defect, is_root_of_unity, wedge_delta, wedge_delta_with, wedge_residual, WedgeConfig,
    WedgeElement,
};

/// Shapes closer than this are the same symbol.
pub const SHAPE_TOLERANCE: f64 = 1e-12;

/// `2 pi^2`, the normalization shared by the Borel and Bloch regulators.
pub const REGULATOR_NORMALIZATION: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreBlochError {
    #[error("invalid shapes (0, 1 or non-finite) at term positions {positions:?}: {shapes:?}")]
    InvalidShape {
        positions: Vec<usize>,
        shapes: Vec<Complex64>,
    },
    #[error("wedge factor {0} is zero or not finite")]
    InvalidWedgeFactor(Complex64),
    #[error("{flattenings} flattenings supplied for {terms} terms")]
    Misaligned { terms: usize, flattenings: usize },
    #[error("coefficient {coeff} of term {index} is not an integer")]
    NonIntegerCoefficient { index: usize, coeff: Rational64 },
    #[error(transparent)]
    Dilog(#[from] DilogError),
}

pub(crate) fn rational_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn cmp_shapes(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// `sum n_i [z_i]` with rational `n_i`, normalized: shapes off `{0, 1}`,
/// near-equal shapes merged, zero coefficients dropped, sorted by `(re, im)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreBlochElement {
    terms: Vec<(Rational64, Complex64)>,
}

impl PreBlochElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Validates and normalizes.
    pub fn new<I>(terms: I) -> Result<Self, PreBlochError>
    where
        I: IntoIterator<Item = (Rational64, Complex64)>,
    {
        let terms: Vec<_> = terms.into_iter().collect();
        let bad: Vec<usize> = terms
            .iter()
            .enumerate()
            .filter(|(_, (_, z))| !(z.re.is_finite() && z.im.is_finite()) || dilog::is_singular(*z))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(PreBlochError::InvalidShape {
                shapes: bad.iter().map(|&i| terms[i].1).collect(),
                positions: bad,
            });
        }
        Ok(Self::normalized(terms))
    }

    /// Integer-coefficient convenience constructor.
    pub fn from_integer_terms(terms: &[(i64, Complex64)]) -> Result<Self, PreBlochError> {
        Self::new(terms.iter().map(|&(n, z)| (Rational64::from_integer(n), z)))
    }

    /// `1 * [z]`.
    pub fn symbol(z: Complex64) -> Result<Self, PreBlochError> {
        Self::new([(Rational64::from_integer(1), z)])
    }

    // Shapes are assumed valid.
    fn normalized(terms: Vec<(Rational64, Complex64)>) -> Self {
        let mut merged: Vec<(Rational64, Complex64)> = Vec::with_capacity(terms.len());
        for (n, z) in terms {
            match merged.iter_mut().find(|(_, w)| (*w - z).norm() < SHAPE_TOLERANCE) {
                Some(slot) => slot.0 += n,
                None => merged.push((n, z)),
            }
        }
        merged.retain(|(n, _)| !n.is_zero());
        merged.sort_by(|a, b| cmp_shapes(&a.1, &b.1));
        PreBlochElement { terms: merged }
    }

    pub fn terms(&self) -> &[(Rational64, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Complex conjugation on every symbol.
    pub fn conjugate(&self) -> Self {
        Self::normalized(self.terms.iter().map(|&(n, z)| (n, z.conj())).collect())
    }

    /// `(x - conj(x)) / 2`, the part on which conjugation acts by `-1`.
    pub fn minus_eigenprojection(&self) -> Self {
        (self - &self.conjugate()) * Rational64::new(1, 2)
    }

    pub fn scale(&self, k: Rational64) -> Self {
        Self::normalized(self.terms.iter().map(|&(n, z)| (n * k, z)).collect())
    }

    /// `sum n_i D(z_i)` as accumulated, before the round trip through the
    /// regulator normalization.
    pub fn raw_volume(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(n, z)| rational_to_f64(n) * dilog::bloch_wigner_d(z).expect("normalized shapes are regular"))
            .sum()
    }

    /// `sum n_i D(z_i)`, rounded so that `borel_regulator() * 2 pi^2 == volume()`
    /// holds in floating point. Differs from [`Self::raw_volume`] by at most
    /// one ulp.
    pub fn volume(&self) -> f64 {
        self.borel_regulator() * REGULATOR_NORMALIZATION
    }

    /// `sum n_i D(z_i) / (2 pi^2)`.
    pub fn borel_regulator(&self) -> f64 {
        self.raw_volume() / REGULATOR_NORMALIZATION
    }

    /// Every coefficient as an integer, or the first offending term.
    pub fn integer_coefficients(&self) -> Result<Vec<i64>, PreBlochError> {
        self.terms
            .iter()
            .enumerate()
            .map(|(index, &(n, _))| {
                if n.is_integer() {
                    Ok(n.to_integer())
                } else {
                    Err(PreBlochError::NonIntegerCoefficient { index, coeff: n })
                }
            })
            .collect()
    }
}

impl fmt::Display for PreBlochElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (n, z)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{n}[{}{:+}i]", z.re, z.im)?;
        }
        Ok(())
    }
}

impl Add for &PreBlochElement {
    type Output = PreBlochElement;
    fn add(self, rhs: &PreBlochElement) -> PreBlochElement {
        PreBlochElement::normalized(self.terms.iter().chain(&rhs.terms).copied().collect())
    }
}

impl Sub for &PreBlochElement {
    type Output = PreBlochElement;
    fn sub(self, rhs: &PreBlochElement) -> PreBlochElement {
        self + &(-rhs)
    }
}

impl Neg for &PreBlochElement {
    type Output = PreBlochElement;
    fn neg(self) -> PreBlochElement {
        PreBlochElement {
            terms: self.terms.iter().map(|&(n, z)| (-n, z)).collect(),
        }
    }
}

impl Mul<Rational64> for PreBlochElement {
    type Output = PreBlochElement;
    fn mul(self, k: Rational64) -> PreBlochElement {
        self.scale(k)
    }
}

/// `[z1] - [z2] + [z2/z1] - [(1-z2)/(1-z1)] + [(1-1/z2)/(1-1/z1)]`.
pub fn five_term_element(z1: Complex64, z2: Complex64) -> Result<PreBlochElement, PreBlochError> {
    let args = dilog::five_term_arguments(z1, z2)?;
    PreBlochElement::new(
        args.into_iter()
            .zip(dilog::FIVE_TERM_SIGNS)
            .map(|(z, s)| (Rational64::from_integer(s), z)),
    )
}

/// One unmerged term of a flattened triangulation class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlattenedTerm {
    pub coeff: i64,
    pub shape: Complex64,
    pub flattening: Flattening,
}

/// `(1 / 2 pi^2) sum n_i R(z_i; p_i, q_i)`.
///
/// The imaginary part equals `volume / (2 pi^2)` for a flattening satisfying
/// the edge and cusp conditions; the real part is `-CS / (2 pi^2)` up to the
/// lattice documented on [`crate::invariants::CS_AMBIGUITY_MODULUS`].
pub fn mu_regulator(
    x: &PreBlochElement,
    flats: &[Flattening],
    offset: RogersOffset,
) -> Result<Complex64, PreBlochError> {
    if flats.len() != x.terms.len() {
        return Err(PreBlochError::Misaligned {
            terms: x.terms.len(),
            flattenings: flats.len(),
        });
    }
    let coeffs = x.integer_coefficients()?;
    let terms: Vec<FlattenedTerm> = coeffs
        .into_iter()
        .zip(&x.terms)
        .zip(flats)
        .map(|((coeff, &(_, shape)), &flattening)| FlattenedTerm {
            coeff,
            shape,
            flattening,
        })
        .collect();
    mu_regulator_terms(&terms, offset)
}

/// [`mu_regulator`] on unmerged terms, so that repeated shapes may carry
/// different flattenings.
pub fn mu_regulator_terms(terms: &[FlattenedTerm], offset: RogersOffset) -> Result<Complex64, PreBlochError> {
    let mut sum = Complex64::new(0.0, 0.0);
    for t in terms {
        sum += t.coeff as f64 * dilog::extended_rogers(t.shape, t.flattening, offset)?;
    }
    Ok(sum / REGULATOR_NORMALIZATION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilog::principal_log;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn sixth_root() -> Complex64 {
        Complex64::from_polar(1.0, PI / 3.0)
    }

    #[test]
    fn cancellation_gives_empty_element() {
        let z = c(0.2, 0.9);
        let x = PreBlochElement::new([(r(1), z), (r(-1), z)]).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn single_term_is_already_normal() {
        let x = PreBlochElement::new([(r(1), c(0.5, 0.0))]).unwrap();
        assert_eq!(x.terms(), &[(r(1), c(0.5, 0.0))]);
    }

    #[test]
    fn near_equal_shapes_merge() {
        let z = c(0.3, 0.8);
        let perturbed = z + Complex64::from_polar(5e-14, 1.1);
        assert!((z - perturbed).norm() < 1e-13);
        let x = PreBlochElement::new([(r(1), z), (r(2), perturbed)]).unwrap();
        assert_eq!(x.terms(), &[(r(3), z)]);
        // just outside the tolerance they stay apart
        let far = z + 1e-11;
        assert_eq!(PreBlochElement::new([(r(1), z), (r(2), far)]).unwrap().len(), 2);
    }

    #[test]
    fn invalid_shapes_are_listed() {
        let err = PreBlochElement::new([(r(1), c(0.5, 0.5)), (r(1), c(1.0, 0.0)), (r(2), c(0.0, 1e-14))]).unwrap_err();
        match err {
            PreBlochError::InvalidShape { positions, .. } => assert_eq!(positions, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conjugate_examples() {
        let x = PreBlochElement::symbol(c(0.0, 1.0)).unwrap();
        assert_eq!(x.conjugate().terms(), &[(r(1), c(0.0, -1.0))]);
        let real = PreBlochElement::from_integer_terms(&[(2, c(0.5, 0.0)), (-1, c(3.0, 0.0))]).unwrap();
        assert_eq!(real.conjugate(), real);
    }

    #[test]
    fn eigenprojection_examples() {
        let z = c(0.4, 0.7);
        let sym = PreBlochElement::from_integer_terms(&[(1, z), (1, z.conj())]).unwrap();
        assert!(sym.minus_eigenprojection().is_zero());
        let x = PreBlochElement::symbol(c(0.0, 1.0)).unwrap();
        let p = x.minus_eigenprojection();
        let half = Rational64::new(1, 2);
        assert_eq!(p.terms(), &[(-half, c(0.0, -1.0)), (half, c(0.0, 1.0))]);
    }

    #[test]
    fn volume_examples() {
        let fig8 = PreBlochElement::from_integer_terms(&[(2, sixth_root())]).unwrap();
        assert!((fig8.volume() - 2.029883212819307).abs() < 1e-12);
        let oct = PreBlochElement::from_integer_terms(&[(4, c(0.0, 1.0))]).unwrap();
        assert!((oct.volume() - 3.663862376708876).abs() < 1e-12);
        assert_eq!(PreBlochElement::zero().volume(), 0.0);
        assert_eq!(fig8.borel_regulator() * REGULATOR_NORMALIZATION, fig8.volume());
        assert!((fig8.volume() - fig8.raw_volume()).abs() <= 2.0 * f64::EPSILON * fig8.raw_volume());
    }

    #[test]
    fn five_term_element_has_no_volume() {
        let x = five_term_element(c(0.0, 2.0), c(3.0, 1.0)).unwrap();
        assert_eq!(x.len(), 5);
        assert!(x.volume().abs() < 1e-11);
        assert!(five_term_element(c(0.3, 0.3), c(0.3, 0.3)).is_err());
    }

    #[test]
    fn mu_regulator_checks_alignment_and_integrality() {
        let x = PreBlochElement::from_integer_terms(&[(2, sixth_root()), (1, c(0.0, 1.0))]).unwrap();
        assert!(matches!(
            mu_regulator(&x, &[Flattening::ZERO], RogersOffset::None),
            Err(PreBlochError::Misaligned { terms: 2, flattenings: 1 })
        ));
        let half = x.scale(Rational64::new(1, 2));
        assert!(matches!(
            mu_regulator(&half, &[Flattening::ZERO; 2], RogersOffset::None),
            Err(PreBlochError::NonIntegerCoefficient { .. })
        ));
        assert_eq!(
            mu_regulator(&PreBlochElement::zero(), &[], RogersOffset::None).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn mu_regulator_of_figure_eight_class() {
        let x = PreBlochElement::from_integer_terms(&[(2, sixth_root())]).unwrap();
        let mu = mu_regulator(&x, &[Flattening::ZERO], RogersOffset::None).unwrap();
        assert!((mu.im - 2.029883212819307 / REGULATOR_NORMALIZATION).abs() < 1e-12);
        assert!((mu.im - 0.1028350848892818).abs() < 1e-12);
    }

    fn shape() -> impl Strategy<Value = Complex64> {
        (0.1f64..5.0, -3.1f64..3.1)
            .prop_map(|(m, a)| Complex64::from_polar(m, a))
            .prop_filter("away from 1", |z| (z - 1.0).norm() > 1e-3)
    }

    fn element() -> impl Strategy<Value = PreBlochElement> {
        prop::collection::vec((-5i64..=5, shape()), 0..6)
            .prop_map(|t| PreBlochElement::from_integer_terms(&t).unwrap())
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(x in element()) {
            let again = PreBlochElement::new(x.terms().iter().copied()).unwrap();
            prop_assert_eq!(again, x);
        }

        #[test]
        fn conjugation_is_an_involution(x in element()) {
            prop_assert_eq!(x.conjugate().conjugate(), x);
        }

        #[test]
        fn conjugation_negates_volume(x in element()) {
            prop_assert!((x.conjugate().volume() + x.volume()).abs() < 1e-11);
        }

        #[test]
        fn eigenprojection_is_anti_invariant_and_keeps_volume(x in element()) {
            let p = x.minus_eigenprojection();
            prop_assert_eq!(p.conjugate(), -&p);
            prop_assert!((p.volume() - x.volume()).abs() < 1e-11);
        }

        #[test]
        fn borel_regulator_is_volume_over_two_pi_squared(x in element()) {
            prop_assert_eq!(x.borel_regulator() * REGULATOR_NORMALIZATION, x.volume());
        }

        #[test]
        fn flattening_changes_are_linear(z in shape(), n in -3i64..=3, p in -3i64..=3, q in -3i64..=3,
                                         dp in -3i64..=3, dq in -3i64..=3) {
            prop_assume!(n != 0);
            let x = PreBlochElement::from_integer_terms(&[(n, z)]).unwrap();
            let a = mu_regulator(&x, &[Flattening::new(p, q)], RogersOffset::None).unwrap();
            let b = mu_regulator(&x, &[Flattening::new(p + dp, q + dq)], RogersOffset::None).unwrap();
            let expected = n as f64 * Complex64::new(0.0, PI / 2.0)
                * (dq as f64 * principal_log(z) + dp as f64 * principal_log(1.0 - z))
                / REGULATOR_NORMALIZATION;
            prop_assert!((b - a - expected).norm() < 1e-12);
        }
    }
}
