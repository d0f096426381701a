//! Damped Gauss-Newton on the logarithmic gluing equations.
//!
//! The unknowns are `u_j = log z_j`. Systems with cusp rows are overdetermined,
//! so each step is the least-squares solution of `J du = F`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use super::{gluing_defect, gluing_jacobian, max_norm, IdealTriangulation, ShapeAssignment, TriangulationError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Converged when the max-norm defect drops below this.
    pub tolerance: f64,
    /// Step halvings tried when a full step does not reduce the defect.
    pub max_halvings: u32,
    /// Accept solutions with flat or negatively oriented tetrahedra.
    pub permissive: bool,
    /// Jacobians with smallest/largest singular value below this are singular.
    pub singular_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 100,
            tolerance: 1e-12,
            max_halvings: 20,
            permissive: false,
            singular_ratio: 1e-13,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("solution has flat or negatively oriented tetrahedra {indices:?} (residual {residual:e})")]
    Degenerate {
        indices: Vec<usize>,
        shapes: Vec<Complex64>,
        residual: f64,
    },
    #[error(transparent)]
    Input(#[from] TriangulationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub assignment: ShapeAssignment,
    /// Newton steps taken.
    pub iterations: usize,
    /// Max-norm defect at the start and after every step.
    pub history: Vec<f64>,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves with default options, starting from `initial` or from regular ideal
/// tetrahedra.
pub fn solve_shapes(tri: &IdealTriangulation, initial: Option<&[Complex64]>) -> Result<ShapeAssignment, SolveError> {
    solve_shapes_with(tri, initial, &SolverOptions::default()).map(|r| r.assignment)
}

pub fn solve_shapes_with(
    tri: &IdealTriangulation,
    initial: Option<&[Complex64]>,
    opts: &SolverOptions,
) -> Result<SolveReport, SolveError> {
    let mut z: Vec<Complex64> = match initial {
        Some(init) => init.to_vec(),
        None => vec![Complex64::from_polar(1.0, PI / 3.0); tri.n_tet()],
    };
    let mut f = gluing_defect(tri, &z)?;
    let mut history = vec![max_norm(&f)];
    let mut iterations = 0;

    while max_norm(&f) >= opts.tolerance {
        if iterations == opts.max_iter {
            return Err(SolveError::NonConvergence {
                iterations,
                residual: max_norm(&f),
            });
        }
        let jac = gluing_jacobian(tri, &z)?;
        let svd = jac.svd(true, true);
        let (smin, smax) = svd
            .singular_values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if smax == 0.0 || smin / smax < opts.singular_ratio {
            return Err(SolveError::SingularJacobian { iteration: iterations });
        }
        let delta = svd
            .solve(&DVector::from_column_slice(&f), 0.0)
            .map_err(|_| SolveError::SingularJacobian { iteration: iterations })?;

        let norm0 = l2(&f);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<Complex64> = z.iter().zip(delta.iter()).map(|(&zj, &dj)| zj * (-step * dj).exp()).collect();
            if let Ok(ft) = gluing_defect(tri, &trial) {
                if l2(&ft) < norm0 {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((zn, fnew)) = accepted else {
            log::debug!("line search failed at iteration {iterations}");
            return Err(SolveError::NonConvergence {
                iterations,
                residual: max_norm(&f),
            });
        };
        z = zn;
        f = fnew;
        history.push(max_norm(&f));
        log::trace!("iteration {iterations}: residual {:e}, step {step}", max_norm(&f));
    }

    let assignment = ShapeAssignment::evaluate(tri, z)?;
    let indices = assignment.degenerate_indices();
    if !indices.is_empty() && !opts.permissive {
        return Err(SolveError::Degenerate {
            indices,
            shapes: assignment.shapes().to_vec(),
            residual: assignment.residual(),
        });
    }
    Ok(SolveReport {
        assignment,
        iterations,
        history,
    })
}
