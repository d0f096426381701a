//! The wedge target `Lambda^2(C*/mu)` and the map `[z] -> 2 (z ^ (1 - z))`.
//!
//! Reduction in the quotient by roots of unity is bounded: a factor is torsion
//! when it lies within `tolerance` of a root of unity of order at most
//! `torsion_order_bound`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;

use super::{rational_to_f64, PreBlochElement, PreBlochError};
use crate::dilog::principal_arg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeConfig {
    pub torsion_order_bound: u32,
    pub tolerance: f64,
}

impl Default for WedgeConfig {
    fn default() -> Self {
        WedgeConfig {
            torsion_order_bound: 24,
            tolerance: 1e-12,
        }
    }
}

/// True when `z` is within `tol` of `exp(2 pi i k / n)` for some `n <= max_order`.
pub fn is_root_of_unity(z: Complex64, max_order: u32, tol: f64) -> bool {
    if (z.norm() - 1.0).abs() >= tol {
        return false;
    }
    let arg = principal_arg(z);
    (1..=max_order).any(|n| {
        let k = (arg * f64::from(n) / (2.0 * PI)).round();
        let root = Complex64::from_polar(1.0, 2.0 * PI * k / f64::from(n));
        (z - root).norm() < tol
    })
}

fn order_key(z: &Complex64) -> (f64, f64) {
    (z.norm(), principal_arg(*z))
}

fn key_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    let (ma, aa) = order_key(a);
    let (mb, ab) = order_key(b);
    ma.total_cmp(&mb).then(aa.total_cmp(&ab))
}

/// `sum n_i (a_i ^ b_i)`, normalized: torsion factors dropped, each pair
/// ordered so that `(|a|, arg a) < (|b|, arg b)` with the sign moved into the
/// coefficient, `a ^ a` dropped, equal pairs merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WedgeElement {
    terms: Vec<(Rational64, Complex64, Complex64)>,
}

impl WedgeElement {
    pub fn new<I>(terms: I, cfg: &WedgeConfig) -> Result<Self, PreBlochError>
    where
        I: IntoIterator<Item = (Rational64, Complex64, Complex64)>,
    {
        let terms: Vec<_> = terms.into_iter().collect();
        for &(_, a, b) in &terms {
            for z in [a, b] {
                if !(z.re.is_finite() && z.im.is_finite()) || z.norm() < cfg.tolerance {
                    return Err(PreBlochError::InvalidWedgeFactor(z));
                }
            }
        }
        Ok(Self::normalized(terms, cfg))
    }

    fn normalized(terms: Vec<(Rational64, Complex64, Complex64)>, cfg: &WedgeConfig) -> Self {
        let tol = cfg.tolerance;
        let torsion = |z: Complex64| is_root_of_unity(z, cfg.torsion_order_bound, tol);
        let mut merged: Vec<(Rational64, Complex64, Complex64)> = Vec::new();
        for (n, a, b) in terms {
            if n.is_zero() || torsion(a) || torsion(b) || (a - b).norm() < tol {
                continue;
            }
            let (n, a, b) = if key_cmp(&a, &b).is_gt() { (-n, b, a) } else { (n, a, b) };
            match merged
                .iter_mut()
                .find(|(_, x, y)| (*x - a).norm() < tol && (*y - b).norm() < tol)
            {
                Some(slot) => slot.0 += n,
                None => merged.push((n, a, b)),
            }
        }
        merged.retain(|(n, _, _)| !n.is_zero());
        merged.sort_by(|x, y| key_cmp(&x.1, &y.1).then(key_cmp(&x.2, &y.2)));
        WedgeElement { terms: merged }
    }

    pub fn terms(&self) -> &[(Rational64, Complex64, Complex64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &WedgeElement, cfg: &WedgeConfig) -> WedgeElement {
        Self::normalized(self.terms.iter().chain(&other.terms).copied().collect(), cfg)
    }
}

/// `sum n_i * 2 (z_i ^ (1 - z_i))` with the default reduction settings.
pub fn wedge_delta(x: &PreBlochElement) -> WedgeElement {
    wedge_delta_with(x, &WedgeConfig::default())
}

pub fn wedge_delta_with(x: &PreBlochElement, cfg: &WedgeConfig) -> WedgeElement {
    let two = Rational64::from_integer(2);
    WedgeElement::normalized(
        x.terms()
            .iter()
            .map(|&(n, z)| (n * two, z, Complex64::new(1.0, 0.0) - z))
            .collect(),
        cfg,
    )
}

/// Heuristic residual of `x` in the wedge target; see [`wedge_residual`].
pub fn bloch_defect(x: &PreBlochElement, shift_bound: u32) -> f64 {
    wedge_residual(&wedge_delta(x), shift_bound)
}

/// Numeric size of a wedge element after optimal branch choices.
///
/// Each factor `a` is embedded as `v(a) = (log|a|, arg a + k pi)`, and the
/// real antisymmetric 2-tensor `T = sum n (v(a) (x) v(b) - v(b) (x) v(a))` is
/// formed. The shift `k` ranges over `|k| <= shift_bound` independently for
/// every factor occurrence; shifts are multiples of `pi` because `-1` is
/// torsion. The result is the Frobenius norm of `T` at the best shifts.
///
/// A vanishing residual is evidence of membership, not a proof: with many
/// factors the bounded shift lattice can approximate any value closely.
pub fn wedge_residual(w: &WedgeElement, shift_bound: u32) -> f64 {
    // T = [[0, s], [-s, 0]] with s = sum n (log|a| (arg b + k_b pi) - (arg a + k_a pi) log|b|)
    let mut s0 = 0.0;
    let mut vars = Vec::with_capacity(2 * w.len());
    for &(n, a, b) in w.terms() {
        let n = rational_to_f64(n);
        let (la, lb) = (a.norm().ln(), b.norm().ln());
        s0 += n * (la * principal_arg(b) - principal_arg(a) * lb);
        vars.push(n * la * PI);
        vars.push(-n * lb * PI);
    }
    std::f64::consts::SQRT_2 * minimize_shifted_sum(s0, &vars, i64::from(shift_bound))
}

const ENUMERATION_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
struct ShiftVar {
    weight: f64,
    range: i64,
}

impl ShiftVar {
    fn size(&self) -> usize {
        (2 * self.range + 1) as usize
    }
}

/// `min |s0 + sum k_i w_i|` over integers `|k_i| <= bound`.
fn minimize_shifted_sum(s0: f64, weights: &[f64], bound: i64) -> f64 {
    if bound == 0 {
        return s0.abs();
    }
    // Equal |w| collapse into one variable with a wider range.
    let mut vars: Vec<ShiftVar> = Vec::new();
    let mut sorted: Vec<f64> = weights.iter().map(|w| w.abs()).filter(|w| *w > 1e-300).collect();
    sorted.sort_by(f64::total_cmp);
    for w in sorted {
        match vars.last_mut() {
            Some(v) if (v.weight - w).abs() <= 1e-12 * w.max(1.0) => v.range += bound,
            _ => vars.push(ShiftVar { weight: w, range: bound }),
        }
    }
    if vars.is_empty() {
        return s0.abs();
    }

    let mut halves: [Vec<ShiftVar>; 2] = [Vec::new(), Vec::new()];
    let mut log_sizes = [0.0f64; 2];
    let mut by_size = vars.clone();
    by_size.sort_by_key(|v| std::cmp::Reverse(v.size()));
    for v in by_size {
        let h = if log_sizes[0] <= log_sizes[1] { 0 } else { 1 };
        log_sizes[h] += (v.size() as f64).ln();
        halves[h].push(v);
    }
    let fits = log_sizes.iter().all(|s| *s <= (ENUMERATION_LIMIT as f64).ln());
    if !fits {
        return coordinate_descent(s0, &vars);
    }

    let sums = |vs: &[ShiftVar]| {
        let mut out = vec![0.0f64];
        for v in vs {
            let mut next = Vec::with_capacity(out.len() * v.size());
            for s in &out {
                for k in -v.range..=v.range {
                    next.push(s + k as f64 * v.weight);
                }
            }
            out = next;
        }
        out
    };
    let mut left = sums(&halves[0]);
    left.sort_by(f64::total_cmp);
    let right = sums(&halves[1]);
    let mut best = f64::INFINITY;
    for r in right {
        let target = -s0 - r;
        let i = left.partition_point(|x| *x < target);
        for j in [i.wrapping_sub(1), i] {
            if let Some(l) = left.get(j) {
                best = best.min((s0 + r + l).abs());
            }
        }
    }
    best
}

fn coordinate_descent(s0: f64, vars: &[ShiftVar]) -> f64 {
    let mut ks = vec![0i64; vars.len()];
    let mut total = s0;
    for _ in 0..64 {
        let mut changed = false;
        for (k, v) in ks.iter_mut().zip(vars) {
            let rest = total - *k as f64 * v.weight;
            let best = (-rest / v.weight).round().clamp(-(v.range as f64), v.range as f64) as i64;
            if best != *k {
                *k = best;
                total = rest + best as f64 * v.weight;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    total.abs()
}
