//! Shared descent engine: spectral trial steps with a monotone Armijo
//! backtracking line search.
//!
//! Both the Rayleigh-quotient minimizer and the torsion energy minimizer
//! drive this loop; they differ only in how values, gradients, and the
//! post-step projection are computed. The engine guarantees a non-increasing
//! objective sequence, which callers expose as a per-iteration invariant.

/// Problem hooks consumed by [`descend`].
pub(crate) trait DescentProblem {
    /// Objective value at `x`.
    fn value(&mut self, x: &[f64]) -> f64;

    /// Gradient at `x`, written into `grad` (same length as `x`).
    fn gradient(&mut self, x: &[f64], grad: &mut [f64]);

    /// Projection applied after an accepted step, for example p-norm
    /// renormalization. Must leave the objective value unchanged up to
    /// round-off.
    fn project(&mut self, x: &mut [f64]);
}

/// Result of a descent run. The engine never fails: hitting the iteration
/// budget simply returns the best point found, whose objective value is a
/// valid upper bound for the discrete minimum.
pub(crate) struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Relative objective change over the last accepted step.
    pub residual: f64,
    /// Objective value after every accepted step, starting with the
    /// initial value. Non-increasing by construction.
    pub history: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: u32 = 60;
/// Consecutive sub-tolerance steps required before declaring convergence.
const QUIET_STEPS_NEEDED: u32 = 3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `problem` starting from `x0`.
///
/// Trial steps use the spectral (Barzilai-Borwein) length from the previous
/// displacement and gradient change, halved until the Armijo sufficient
/// decrease test passes. Convergence is declared after
/// [`QUIET_STEPS_NEEDED`] consecutive accepted steps whose relative
/// objective change stays below `tolerance`.
pub(crate) fn descend(
    problem: &mut impl DescentProblem,
    mut x: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
) -> DescentOutcome {
    problem.project(&mut x);
    let mut value = problem.value(&x);
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut prev_x = vec![0.0; n];
    let mut prev_grad = vec![0.0; n];
    let mut have_prev = false;
    let mut alpha = 0.0_f64;
    let mut residual = f64::INFINITY;
    let mut quiet = 0u32;
    let mut history = Vec::with_capacity(64);
    history.push(value);
    let mut iterations = 0usize;

    while iterations < max_iterations {
        iterations += 1;
        problem.gradient(&x, &mut grad);
        let gg = dot(&grad, &grad);
        if gg == 0.0 || !gg.is_finite() {
            residual = 0.0;
            break;
        }

        if have_prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for k in 0..n {
                let s = x[k] - prev_x[k];
                let y = grad[k] - prev_grad[k];
                ss += s * s;
                sy += s * y;
            }
            let bb = ss / sy;
            alpha = if bb.is_finite() && bb > 0.0 {
                bb
            } else {
                (alpha * 2.0).max(f64::MIN_POSITIVE)
            };
        } else {
            // First step: displace x by roughly one percent of its norm,
            // or fall back to a gradient-scaled unit step from the origin.
            let xx = dot(&x, &x);
            alpha = if xx > 0.0 {
                0.01 * (xx / gg).sqrt()
            } else {
                1.0 / gg.sqrt()
            };
        }

        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for k in 0..n {
                trial[k] = x[k] - alpha * grad[k];
            }
            let tv = problem.value(&trial);
            if tv.is_finite() && tv <= value - ARMIJO_C1 * alpha * gg {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // No representable progress along the gradient: numerical floor.
            residual = 0.0;
            break;
        }

        prev_x.copy_from_slice(&x);
        prev_grad.copy_from_slice(&grad);
        have_prev = true;
        std::mem::swap(&mut x, &mut trial);
        problem.project(&mut x);
        let new_value = problem.value(&x);
        // The projection is value-preserving and the line search only accepts
        // decreasing steps, so growth beyond round-off indicates a bug.
        debug_assert!(
            new_value <= value + 1e-9 * (1.0 + value.abs()),
            "objective increased from {value} to {new_value}"
        );
        residual = (value - new_value).abs() / value.abs().max(f64::MIN_POSITIVE);
        value = new_value;
        history.push(value);
        if residual < tolerance {
            quiet += 1;
            if quiet >= QUIET_STEPS_NEEDED {
                break;
            }
        } else {
            quiet = 0;
        }
    }

    DescentOutcome {
        x,
        value,
        iterations,
        residual,
        history,
    }
}
