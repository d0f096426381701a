//! Integer flattenings of a solved triangulation.
//!
//! With `w0 = log z + p pi i` and `w1 = -log(1 - z) + q pi i`, a flattening
//! makes `sum_j a_kj w0_j - b_kj w1_j` vanish for every edge and cusp row.
//! Writing `L_k` for the row's principal-log sum this is the integer system
//! `sum_j a_kj p_j - b_kj q_j = -L_k / (pi i)`, solved through the Smith normal
//! form and enumerated over the box `|p_j|, |q_j| <= bound`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::{row_log_sums, IdealTriangulation, ShapeAssignment, TriangulationError};
use crate::dilog::Flattening;
use crate::homology::{smith_normal_form, IntegerMatrix};

/// Enumeration stops after this many flattenings.
pub const MAX_FLATTENINGS: usize = 10_000;

const INTEGRALITY_TOLERANCE: f64 = 1e-6;
const FLATTENING_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum FlatteningError {
    #[error("no flattening with |p|, |q| <= {bound}; try a larger bound")]
    NotFound { bound: u32 },
    #[error("the flattening equations have no integer solution")]
    NoIntegerSolution,
    #[error("row {row} sums to {value}, not an integer multiple of pi i; the shapes do not solve the gluing equations")]
    NotCertified { row: usize, value: Complex64 },
    #[error("flattening coordinates overflow")]
    Overflow,
    #[error(transparent)]
    Input(#[from] TriangulationError),
}

/// Integer right-hand side `-L_k / (pi i)` of every edge and cusp row.
pub fn flattening_targets(tri: &IdealTriangulation, s: &ShapeAssignment) -> Result<Vec<i64>, FlatteningError> {
    let sums = row_log_sums(tri, s.log_shapes());
    sums.into_iter()
        .enumerate()
        .map(|(row, l)| {
            let t = -l.im / PI;
            if l.re.abs() > INTEGRALITY_TOLERANCE || (t - t.round()).abs() > INTEGRALITY_TOLERANCE {
                return Err(FlatteningError::NotCertified { row, value: l });
            }
            Ok(t.round() as i64)
        })
        .collect()
}

/// Checks the corrected row sums numerically.
pub fn is_flattening(tri: &IdealTriangulation, s: &ShapeAssignment, flats: &[Flattening]) -> bool {
    if flats.len() != tri.n_tet() {
        return false;
    }
    let sums = row_log_sums(tri, s.log_shapes());
    tri.rows().zip(sums).all(|((row, _), l)| {
        let shift: i64 = (0..tri.n_tet())
            .map(|j| row.a[j] * flats[j].p - row.b[j] * flats[j].q)
            .sum();
        (l + Complex64::new(0.0, PI * shift as f64)).norm() < FLATTENING_TOLERANCE
    })
}

fn to_i128(x: &BigInt) -> Result<i128, FlatteningError> {
    x.to_i128().ok_or(FlatteningError::Overflow)
}

/// Integer column operations bringing `cols` to echelon form; returns the
/// pivot row of each column, with positive pivots.
fn column_echelon(cols: &mut [Vec<i128>]) -> Vec<usize> {
    let f = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    let mut pivots = Vec::with_capacity(f);
    let mut next = 0;
    for r in 0..n {
        if next == f {
            break;
        }
        loop {
            let Some(best) = (next..f)
                .filter(|&c| cols[c][r] != 0)
                .min_by_key(|&c| cols[c][r].unsigned_abs())
            else {
                break;
            };
            cols.swap(next, best);
            let mut done = true;
            for c in next + 1..f {
                if cols[c][r] == 0 {
                    continue;
                }
                let q = Integer::div_floor(&cols[c][r], &cols[next][r]);
                for i in 0..n {
                    cols[c][i] -= q * cols[next][i];
                }
                done &= cols[c][r] == 0;
            }
            if done {
                if cols[next][r] < 0 {
                    cols[next].iter_mut().for_each(|x| *x = -*x);
                }
                pivots.push(r);
                next += 1;
                break;
            }
        }
    }
    pivots
}

struct Enumerator<'a> {
    kernel: &'a [Vec<i128>],
    pivots: &'a [usize],
    bound: i128,
    found: Vec<Vec<i128>>,
}

impl Enumerator<'_> {
    fn in_box(&self, x: &[i128], rows: std::ops::Range<usize>) -> bool {
        x[rows].iter().all(|v| v.abs() <= self.bound)
    }

    fn descend(&mut self, level: usize, x: &mut Vec<i128>) {
        if self.found.len() >= MAX_FLATTENINGS {
            return;
        }
        if level == self.kernel.len() {
            if self.in_box(x, 0..x.len()) {
                self.found.push(x.clone());
            }
            return;
        }
        let p = self.pivots[level];
        if !self.in_box(x, 0..p) {
            return;
        }
        let col = &self.kernel[level];
        let piv = col[p];
        let lo = Integer::div_ceil(&(-self.bound - x[p]), &piv);
        let hi = Integer::div_floor(&(self.bound - x[p]), &piv);
        for k in lo..=hi {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi += k * ci;
            }
            self.descend(level + 1, x);
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi -= k * ci;
            }
        }
    }
}

/// All flattenings in the box, at most [`MAX_FLATTENINGS`], ordered by the
/// sum of `|p_j| + |q_j|` and then lexicographically.
pub fn flattenings_search(
    tri: &IdealTriangulation,
    s: &ShapeAssignment,
    bound: u32,
) -> Result<Vec<Vec<Flattening>>, FlatteningError> {
    let n = tri.n_tet();
    if s.shapes().len() != n {
        return Err(TriangulationError::ShapeCount {
            expected: n,
            got: s.shapes().len(),
        }
        .into());
    }
    let targets = flattening_targets(tri, s)?;
    let rows: Vec<i64> = tri
        .rows()
        .flat_map(|(row, _)| row.a.iter().copied().chain(row.b.iter().map(|b| -b)))
        .collect();
    let m = IntegerMatrix::from_i64(tri.n_rows(), 2 * n, &rows).expect("row lengths are validated");
    let snf = smith_normal_form(&m);
    let t: Vec<BigInt> = targets.iter().map(|&x| BigInt::from(x)).collect();
    let ut = snf.left.mul_vec(&t).expect("dimensions agree");
    let d = snf.diagonal_entries();
    let rank = snf.rank();

    let mut y = vec![BigInt::zero(); 2 * n];
    for (i, rhs) in ut.iter().enumerate() {
        if i < rank {
            let (q, r) = rhs.div_rem(&d[i]);
            if !r.is_zero() {
                return Err(FlatteningError::NoIntegerSolution);
            }
            y[i] = q;
        } else if !rhs.is_zero() {
            return Err(FlatteningError::NoIntegerSolution);
        }
    }
    let x0 = snf.right.mul_vec(&y).expect("dimensions agree");
    let mut x: Vec<i128> = x0.iter().map(to_i128).collect::<Result<_, _>>()?;
    let mut kernel: Vec<Vec<i128>> = (rank..2 * n)
        .map(|c| (0..2 * n).map(|r| to_i128(snf.right.get(r, c))).collect())
        .collect::<Result<_, _>>()?;
    let pivots = column_echelon(&mut kernel);

    let mut en = Enumerator {
        kernel: &kernel,
        pivots: &pivots,
        bound: bound as i128,
        found: Vec::new(),
    };
    en.descend(0, &mut x);
    if en.found.is_empty() {
        return Err(FlatteningError::NotFound { bound });
    }
    let mut found = en.found;
    found.sort_by_key(|v| (v.iter().map(|c| c.abs()).sum::<i128>(), v.clone()));
    Ok(found
        .into_iter()
        .map(|v| (0..n).map(|j| Flattening::new(v[j] as i64, v[n + j] as i64)).collect())
        .collect())
}
