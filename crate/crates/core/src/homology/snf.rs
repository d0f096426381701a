//! Smith normal form with unimodular transforms.
//!
//! Pivots are chosen as the nonzero entry of least absolute value in the
//! remaining submatrix, which keeps intermediate growth modest on the small
//! matrices this crate handles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::IntegerMatrix;

/// `left * m * right = diagonal`, `left` and `right` unimodular, the diagonal
/// nonnegative with `d_1 | d_2 | ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub left: IntegerMatrix,
    pub diagonal: IntegerMatrix,
    pub right: IntegerMatrix,
}

impl SmithDecomposition {
    pub fn diagonal_entries(&self) -> Vec<BigInt> {
        let n = self.diagonal.rows().min(self.diagonal.cols());
        (0..n).map(|i| self.diagonal.get(i, i).clone()).collect()
    }

    /// Nonzero diagonal entries, in order.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diagonal_entries().into_iter().filter(|d| !d.is_zero()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

fn min_abs_nonzero(a: &IntegerMatrix, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for r in from..a.rows() {
        for c in from..a.cols() {
            let v = a.get(r, c);
            if v.is_zero() {
                continue;
            }
            if best.as_ref().is_none_or(|(_, _, b)| v.abs() < *b) {
                best = Some((r, c, v.abs()));
            }
        }
    }
    best.map(|(r, c, _)| (r, c))
}

pub fn smith_normal_form(m: &IntegerMatrix) -> SmithDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut u = IntegerMatrix::identity(rows);
    let mut v = IntegerMatrix::identity(cols);

    for t in 0..rows.min(cols) {
        let Some((pr, pc)) = min_abs_nonzero(&a, t) else {
            break;
        };
        a.swap_rows(t, pr);
        u.swap_rows(t, pr);
        a.swap_cols(t, pc);
        v.swap_cols(t, pc);

        loop {
            let mut leftover = false;
            for i in t + 1..rows {
                if a.get(i, t).is_zero() {
                    continue;
                }
                let q = -a.get(i, t).div_floor(a.get(t, t));
                a.add_row_multiple(i, t, &q);
                u.add_row_multiple(i, t, &q);
                leftover |= !a.get(i, t).is_zero();
            }
            for j in t + 1..cols {
                if a.get(t, j).is_zero() {
                    continue;
                }
                let q = -a.get(t, j).div_floor(a.get(t, t));
                a.add_col_multiple(j, t, &q);
                v.add_col_multiple(j, t, &q);
                leftover |= !a.get(t, j).is_zero();
            }
            if leftover {
                // a remainder smaller than the pivot is left in row or column t
                let mut best = (t, t);
                for i in t + 1..rows {
                    if !a.get(i, t).is_zero() && a.get(i, t).abs() < a.get(best.0, best.1).abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if !a.get(t, j).is_zero() && a.get(t, j).abs() < a.get(best.0, best.1).abs() {
                        best = (t, j);
                    }
                }
                a.swap_rows(t, best.0);
                u.swap_rows(t, best.0);
                a.swap_cols(t, best.1);
                v.swap_cols(t, best.1);
                continue;
            }
            // row and column clear; enforce divisibility of the rest
            let pivot = a.get(t, t).clone();
            let bad_row = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a.get(i, j).is_multiple_of(&pivot)));
            match bad_row {
                Some(i) => {
                    let one = BigInt::from(1);
                    a.add_row_multiple(t, i, &one);
                    u.add_row_multiple(t, i, &one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithDecomposition {
        left: u,
        diagonal: a,
        right: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &IntegerMatrix) -> SmithDecomposition {
        let snf = smith_normal_form(m);
        let prod = snf.left.mul(m).unwrap().mul(&snf.right).unwrap();
        assert_eq!(prod, snf.diagonal);
        assert_eq!(snf.left.determinant().unwrap().abs(), BigInt::from(1));
        assert_eq!(snf.right.determinant().unwrap().abs(), BigInt::from(1));
        snf
    }

    #[test]
    fn identity_is_fixed() {
        let snf = check(&IntegerMatrix::identity(3));
        assert_eq!(snf.diagonal, IntegerMatrix::identity(3));
    }

    #[test]
    fn diag_two_three_becomes_one_six() {
        let m = IntegerMatrix::from_rows(&[vec![2, 0], vec![0, 3]], None).unwrap();
        let snf = check(&m);
        assert_eq!(snf.diagonal_entries(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn diag_two_three_brute_force_oracle() {
        // d1 = gcd of entries, d1*d2 = |det|; independent of the elimination
        let m = IntegerMatrix::from_rows(&[vec![2, 0], vec![0, 3]], None).unwrap();
        let entries = [2i64, 0, 0, 3];
        let d1 = entries.iter().fold(0i64, |g, &x| g.gcd(&x));
        let det = m.determinant().unwrap();
        assert_eq!(d1, 1);
        assert_eq!(det, BigInt::from(6));
    }

    #[test]
    fn zero_and_empty_matrices() {
        let snf = check(&IntegerMatrix::zeros(2, 3));
        assert!(snf.diagonal.is_zero());
        let snf = check(&IntegerMatrix::zeros(0, 3));
        assert_eq!(snf.rank(), 0);
        let snf = check(&IntegerMatrix::zeros(2, 0));
        assert_eq!(snf.rank(), 0);
    }

    #[test]
    fn negative_and_rectangular() {
        let m = IntegerMatrix::from_rows(&[vec![-4, 6, 2], vec![8, -2, 10]], None).unwrap();
        let snf = check(&m);
        let d = snf.invariant_factors();
        assert_eq!(d[0], BigInt::from(2));
        assert!(d[1].is_multiple_of(&d[0]));
    }
}
