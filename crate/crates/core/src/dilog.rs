//! The dilogarithm and its single-valued relatives.
//!
//! Branch conventions used throughout the crate:
//!
//! * `log` is principal with `arg` in `(-pi, pi]`; a point on the negative real
//!   axis gets `arg = pi` regardless of the sign of its zero imaginary part.
//! * `li2` is principal with its cut along `(1, inf)`. A point exactly on the
//!   cut takes the limit from the lower half-plane, unless
//!   [`CutConvention::Strict`] is requested, in which case it is an error.
//!
//! `li2` is evaluated by the power series for `|z| <= 1/2`, by inversion
//! `z -> 1/z` for `|z| > 1`, by reflection `z -> 1 - z` for `Re z > 1/2`, and
//! by the Bernoulli series in `-log(1 - z)` on what is left of the unit disk.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `zeta(2) = pi^2 / 6`.
pub const ZETA2: f64 = PI * PI / 6.0;

/// Distance from `0` or `1` below which an argument counts as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DilogError {
    #[error("argument {re}{im:+}i is not finite")]
    NonFinite { re: f64, im: f64 },
    #[error("argument {re}{im:+}i is a singular point (0 or 1)")]
    Singular { re: f64, im: f64 },
    #[error("argument {0} lies on the branch cut (1, inf) and strict mode is on")]
    OnBranchCut(f64),
    #[error("degenerate five-term configuration: {0}")]
    Degenerate(String),
}

/// How `li2` treats arguments exactly on its cut `(1, inf)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutConvention {
    /// Continuous from the lower half-plane.
    #[default]
    LowerLimit,
    /// Reject points on the cut.
    Strict,
}

/// Whether [`extended_rogers`] subtracts `pi^2/6` from every term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RogersOffset {
    #[default]
    None,
    SubtractZeta2,
}

/// Log-branch corrections `(p, q)` attached to one tetrahedron: the corrected
/// log-parameters are `log z + p*pi*i` and `-log(1 - z) + q*pi*i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flattening {
    pub p: i64,
    pub q: i64,
}

impl Flattening {
    pub const ZERO: Flattening = Flattening { p: 0, q: 0 };

    pub fn new(p: i64, q: i64) -> Self {
        Flattening { p, q }
    }
}

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        PI
    } else {
        z.im.atan2(z.re)
    }
}

/// Principal logarithm, `arg` in `(-pi, pi]`.
pub fn principal_log(z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), principal_arg(z))
}

fn check_finite(z: Complex64) -> Result<(), DilogError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(DilogError::NonFinite { re: z.re, im: z.im })
    }
}

/// True when `z` is within [`SINGULAR_TOLERANCE`] of `0` or `1`.
pub fn is_singular(z: Complex64) -> bool {
    z.norm() < SINGULAR_TOLERANCE || (z - 1.0).norm() < SINGULAR_TOLERANCE
}

fn check_regular(z: Complex64) -> Result<(), DilogError> {
    check_finite(z)?;
    if z == Complex64::new(0.0, 0.0) || z == Complex64::new(1.0, 0.0) {
        return Err(DilogError::Singular { re: z.re, im: z.im });
    }
    Ok(())
}

/// B_{2k} / (2k+1)! for k = 1..=19.
const BERNOULLI_COEFFS: [f64; 19] = bernoulli_coeffs();

const fn bernoulli_coeffs() -> [f64; 19] {
    // Even Bernoulli numbers B_2 .. B_38 as numerator / denominator.
    const B: [(f64, f64); 19] = [
        (1.0, 6.0),
        (-1.0, 30.0),
        (1.0, 42.0),
        (-1.0, 30.0),
        (5.0, 66.0),
        (-691.0, 2730.0),
        (7.0, 6.0),
        (-3617.0, 510.0),
        (43867.0, 798.0),
        (-174611.0, 330.0),
        (854513.0, 138.0),
        (-236364091.0, 2730.0),
        (8553103.0, 6.0),
        (-23749461029.0, 870.0),
        (8615841276005.0, 14322.0),
        (-7709321041217.0, 510.0),
        (2577687858367.0, 6.0),
        (-26315271553053477373.0, 1919190.0),
        (2929993913841559.0, 6.0),
    ];
    let mut out = [0.0; 19];
    let mut fact = 1.0; // (2k+1)!
    let mut k = 0;
    while k < 19 {
        let n = 2 * k + 2;
        fact *= (n as f64) * ((n + 1) as f64);
        out[k] = B[k].0 / B[k].1 / fact;
        k += 1;
    }
    out
}

fn power_series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zk = z;
    for k in 1..=200u32 {
        let term = zk / f64::from(k * k);
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            break;
        }
        zk *= z;
    }
    sum
}

// Valid for |u| < 2 pi where u = -log(1 - z).
fn bernoulli_series(z: Complex64) -> Complex64 {
    let u = -principal_log(Complex64::new(1.0, 0.0) - z);
    let u2 = u * u;
    let mut sum = u - u2 / 4.0;
    let mut pow = u * u2;
    for c in BERNOULLI_COEFFS {
        let term = pow * c;
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            break;
        }
        pow *= u2;
    }
    sum
}

// |z| <= 1, z != 1.
fn li2_disk(z: Complex64) -> Complex64 {
    if z.norm() <= 0.5 {
        return power_series(z);
    }
    if z.re > 0.5 {
        let w = Complex64::new(1.0, 0.0) - z;
        return ZETA2 - principal_log(z) * principal_log(w) - bernoulli_series(w);
    }
    bernoulli_series(z)
}

fn li2_off_cut(z: Complex64) -> Complex64 {
    if z.norm() > 1.0 {
        let l = principal_log(-z);
        -li2_disk(z.inv()) - ZETA2 - 0.5 * l * l
    } else {
        li2_disk(z)
    }
}

/// Principal-branch dilogarithm with an explicit convention on the cut.
pub fn try_li2(z: Complex64, cut: CutConvention) -> Result<Complex64, DilogError> {
    check_finite(z)?;
    if z.im == 0.0 {
        if z.re == 1.0 {
            return Ok(Complex64::new(ZETA2, 0.0));
        }
        if z.re > 1.0 {
            if cut == CutConvention::Strict {
                return Err(DilogError::OnBranchCut(z.re));
            }
            let x = z.re;
            let lx = x.ln();
            let re = 2.0 * ZETA2 - 0.5 * lx * lx - li2_disk(Complex64::new(x.recip(), 0.0)).re;
            return Ok(Complex64::new(re, -PI * lx));
        }
    }
    Ok(li2_off_cut(z))
}

/// Principal-branch dilogarithm, lower-limit convention on `(1, inf)`.
/// Non-finite input propagates as NaN.
pub fn li2(z: Complex64) -> Complex64 {
    try_li2(z, CutConvention::LowerLimit).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// Bloch–Wigner function `D(z) = Im li2(z) + arg(1 - z) log|z|`.
pub fn bloch_wigner_d(z: Complex64) -> Result<f64, DilogError> {
    check_regular(z)?;
    let one_minus = Complex64::new(1.0, 0.0) - z;
    Ok(li2(z).im + principal_arg(one_minus) * z.norm().ln())
}

/// Rogers dilogarithm `R(z) = li2(z) + log(z) log(1 - z) / 2`.
pub fn rogers_r(z: Complex64) -> Result<Complex64, DilogError> {
    check_regular(z)?;
    let one_minus = Complex64::new(1.0, 0.0) - z;
    Ok(li2(z) + 0.5 * principal_log(z) * principal_log(one_minus))
}

/// `R(z) + (pi i / 2)(q log z + p log(1 - z))`, optionally minus `pi^2/6`.
pub fn extended_rogers(z: Complex64, f: Flattening, offset: RogersOffset) -> Result<Complex64, DilogError> {
    let mut value = rogers_r(z)?;
    if f.p != 0 || f.q != 0 {
        value += flattening_correction(z, f);
    }
    if offset == RogersOffset::SubtractZeta2 {
        value -= ZETA2;
    }
    Ok(value)
}

/// The flattening term `(pi i / 2)(q log z + p log(1 - z))` on its own.
pub fn flattening_correction(z: Complex64, f: Flattening) -> Complex64 {
    let one_minus = Complex64::new(1.0, 0.0) - z;
    let inner = principal_log(z) * f.q as f64 + principal_log(one_minus) * f.p as f64;
    Complex64::new(0.0, PI / 2.0) * inner
}

/// The five arguments `z1, z2, z2/z1, (1-z2)/(1-z1), (1-1/z2)/(1-1/z1)` of the
/// five-term relation, in that order. Their signs alternate `+ - + - +`.
pub fn five_term_arguments(z1: Complex64, z2: Complex64) -> Result<[Complex64; 5], DilogError> {
    check_finite(z1)?;
    check_finite(z2)?;
    if (z1 - z2).norm() < SINGULAR_TOLERANCE {
        return Err(DilogError::Degenerate("z1 = z2".into()));
    }
    for (label, z) in [("z1", z1), ("z2", z2)] {
        if is_singular(z) {
            return Err(DilogError::Degenerate(format!("{label} = {z} is 0 or 1")));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let args = [
        z1,
        z2,
        z2 / z1,
        (one - z2) / (one - z1),
        (one - z2.inv()) / (one - z1.inv()),
    ];
    for (i, z) in args.iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) || is_singular(*z) {
            return Err(DilogError::Degenerate(format!("argument {} = {z} is 0 or 1", i + 1)));
        }
    }
    Ok(args)
}

pub const FIVE_TERM_SIGNS: [i64; 5] = [1, -1, 1, -1, 1];

/// `|sum of +-D over the five-term arguments|`; zero in exact arithmetic.
pub fn five_term_defect(z1: Complex64, z2: Complex64) -> Result<f64, DilogError> {
    let args = five_term_arguments(z1, z2)?;
    let mut sum = 0.0;
    for (z, s) in args.iter().zip(FIVE_TERM_SIGNS) {
        sum += s as f64 * bloch_wigner_d(*z)?;
    }
    Ok(sum.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Independent oracle: raw power series, no argument reduction.
    fn series_oracle(z: Complex64, terms: u32) -> Complex64 {
        (1..=terms).map(|k| z.powu(k) / f64::from(k * k)).sum()
    }

    #[test]
    fn li2_trivial_values() {
        assert_eq!(li2(c(0.0, 0.0)), c(0.0, 0.0));
        assert!((li2(c(1.0, 0.0)) - c(ZETA2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn li2_half_matches_series_and_closed_form() {
        let oracle = series_oracle(c(0.5, 0.0), 200);
        let closed = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        assert!((oracle.re - closed).abs() < 1e-15);
        assert!((li2(c(0.5, 0.0)) - oracle).norm() < 1e-15);
    }

    #[test]
    fn li2_minus_one() {
        // alternating series, averaged consecutive partial sums
        let mut s = 0.0;
        let mut prev = 0.0;
        for k in 1..=200_000u64 {
            prev = s;
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            s += sign / (k * k) as f64;
        }
        let oracle = 0.5 * (s + prev);
        assert!((oracle + PI * PI / 12.0).abs() < 1e-12);
        assert!((li2(c(-1.0, 0.0)) - c(-PI * PI / 12.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn li2_series_region_agrees_with_truncated_series() {
        for i in 0..64 {
            let t = i as f64 * 0.1;
            for r in [0.05, 0.2, 0.35, 0.5] {
                let z = Complex64::from_polar(r, t);
                assert!((li2(z) - series_oracle(z, 200)).norm() < 1e-14, "z = {z}");
            }
        }
    }

    #[test]
    fn inversion_and_reflection_are_continuous_across_region_borders() {
        for i in 0..50 {
            let t = 0.03 + i as f64 * 0.125;
            for r in [0.5, 1.0] {
                let inside = Complex64::from_polar(r * (1.0 - 1e-9), t);
                let outside = Complex64::from_polar(r * (1.0 + 1e-9), t);
                assert!((li2(inside) - li2(outside)).norm() < 1e-7, "r = {r}, t = {t}");
            }
        }
        let a = li2(c(0.5 - 1e-12, 0.7));
        let b = li2(c(0.5 + 1e-12, 0.7));
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn cut_takes_lower_limit() {
        let x = 3.0;
        let on = li2(c(x, 0.0));
        let below = li2(c(x, -1e-10));
        let above = li2(c(x, 1e-10));
        assert!((on - below).norm() < 1e-8);
        assert!((on - above).norm() > 1.0);
        assert!((on.im + PI * x.ln()).abs() < 1e-14);
        assert_eq!(try_li2(c(x, 0.0), CutConvention::Strict), Err(DilogError::OnBranchCut(x)));
        assert!(try_li2(c(x, 1e-9), CutConvention::Strict).is_ok());
        assert!(try_li2(c(0.5, 0.0), CutConvention::Strict).is_ok());
    }

    #[test]
    fn derivative_matches_minus_log_over_z() {
        for z in [c(0.3, 0.4), c(-2.0, 1.5), c(0.9, -0.8), c(4.0, 3.0), c(0.6, 0.1)] {
            let h = 1e-6;
            let fd = (li2(z + h) - li2(z - h)) / (2.0 * h);
            let exact = -principal_log(1.0 - z) / z;
            assert!((fd - exact).norm() < 1e-8, "z = {z}");
        }
    }

    #[test]
    fn d_vanishes_on_real_axis() {
        for x in [-5.0, -0.5, 0.25, 0.5, 0.75, 2.0, 10.0] {
            assert!(bloch_wigner_d(c(x, 0.0)).unwrap().abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn d_at_sixth_root_of_unity() {
        // Cl2(pi/3) = (sqrt3/2) sum_m [1/(6m+1)^2 + 1/(6m+2)^2 - 1/(6m+4)^2 - 1/(6m+5)^2]
        let mut s = 0.0;
        // smallest terms first to keep the rounding error below the tail
        for m in (0..1_000_000u64).rev() {
            let b = 6.0 * m as f64;
            s += 1.0 / (b + 1.0).powi(2) + 1.0 / (b + 2.0).powi(2) - 1.0 / (b + 4.0).powi(2) - 1.0 / (b + 5.0).powi(2);
        }
        let oracle = 3f64.sqrt() / 2.0 * s;
        assert!((oracle - 1.014941606409653).abs() < 1e-12);
        let d = bloch_wigner_d(Complex64::from_polar(1.0, PI / 3.0)).unwrap();
        assert!((d - oracle).abs() < 1e-12);
    }

    #[test]
    fn d_at_i_is_catalan() {
        let mut s = 0.0;
        let mut prev = 0.0;
        for m in 0..200_000u64 {
            prev = s;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            s += sign / ((2 * m + 1) as f64).powi(2);
        }
        let catalan = 0.5 * (s + prev);
        assert!((catalan - 0.915965594177219).abs() < 1e-14);
        assert!((bloch_wigner_d(c(0.0, 1.0)).unwrap() - catalan).abs() < 1e-14);
    }

    #[test]
    fn d_rejects_singular_points() {
        assert!(matches!(bloch_wigner_d(c(0.0, 0.0)), Err(DilogError::Singular { .. })));
        assert!(matches!(bloch_wigner_d(c(1.0, 0.0)), Err(DilogError::Singular { .. })));
        assert!(matches!(rogers_r(c(1.0, 0.0)), Err(DilogError::Singular { .. })));
        assert!(matches!(bloch_wigner_d(c(f64::NAN, 0.0)), Err(DilogError::NonFinite { .. })));
    }

    #[test]
    fn rogers_at_half() {
        let oracle = series_oracle(c(0.5, 0.0), 200) + 0.5 * 0.5f64.ln().powi(2);
        let r = rogers_r(c(0.5, 0.0)).unwrap();
        assert!((r - oracle).norm() < 1e-15);
        assert!((r.re - PI * PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn rogers_vanishes_at_zero() {
        let r = rogers_r(c(1e-10, 1e-12)).unwrap();
        assert!(r.norm() < 1e-8);
    }

    #[test]
    fn extended_rogers_zero_flattening_is_bitwise_rogers() {
        for z in [c(0.3, 0.4), c(-2.0, 1.5), c(3.0, 0.0), c(0.5, 0.8660254037844386)] {
            let a = rogers_r(z).unwrap();
            let b = extended_rogers(z, Flattening::ZERO, RogersOffset::None).unwrap();
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn extended_rogers_is_linear_in_flattening() {
        let z = Complex64::from_polar(1.0, PI / 3.0);
        let a = extended_rogers(z, Flattening::new(0, 0), RogersOffset::None).unwrap();
        let b = extended_rogers(z, Flattening::new(2, 0), RogersOffset::None).unwrap();
        let expected = Complex64::new(0.0, PI / 2.0) * 2.0 * principal_log(1.0 - z);
        assert!((b - a - expected).norm() < 1e-15);
        let shifted = extended_rogers(z, Flattening::ZERO, RogersOffset::SubtractZeta2).unwrap();
        assert!((a - shifted - ZETA2).norm() < 1e-15);
    }

    #[test]
    fn five_term_at_reference_pair() {
        assert!(five_term_defect(c(0.0, 2.0), c(3.0, 1.0)).unwrap() < 1e-12);
    }

    #[test]
    fn five_term_rejects_degenerate_pairs() {
        let z = c(0.3, 0.7);
        assert!(matches!(five_term_defect(z, z), Err(DilogError::Degenerate(_))));
        assert!(matches!(five_term_defect(c(1.0, 0.0), z), Err(DilogError::Degenerate(_))));
        assert!(matches!(five_term_defect(z, c(0.0, 0.0)), Err(DilogError::Degenerate(_))));
    }
}
