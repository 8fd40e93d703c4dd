//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! min_α  ½ αᵀQα − eᵀα   s.t.  0 ≤ α_i ≤ C_i,  yᵀα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each step updates the maximal violating pair analytically (two-variable
//! subproblem with box clipping), so the dual objective never decreases.

use super::kernel::QMatrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    /// Gradient `Qα − e` at the solution.
    pub grad: Vec<f64>,
    /// Offset so that `f(x) = Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation `m(α) − M(α)`.
    pub gap: f64,
    /// Dual objective `eᵀα − ½αᵀQα` after every step, when tracing.
    pub trace: Vec<f64>,
}

fn in_up(alpha: f64, c: f64, y: f64) -> bool {
    if y > 0.0 {
        alpha < c
    } else {
        alpha > 0.0
    }
}

fn in_low(alpha: f64, c: f64, y: f64) -> bool {
    if y > 0.0 {
        alpha > 0.0
    } else {
        alpha < c
    }
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // eᵀα − ½αᵀQα with Qα = grad + e.
    alpha.iter().zip(grad).map(|(a, g)| a - 0.5 * a * (g + 1.0)).sum()
}

pub(crate) fn solve(
    q: &mut QMatrix<'_>,
    y: &[f64],
    upper: &[f64],
    tolerance: f64,
    max_iter: usize,
    trace: bool,
) -> DualSolution {
    let n = q.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace_values = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iter {
        // i maximizes −y_t G_t over I_up. The violation gap uses the minimum
        // over I_low, but j is the violating partner with the largest
        // second-order decrease of the objective; plain maximal-violating
        // pairs can zigzag for thousands of steps on degenerate problems.
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], upper[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
        }
        let qi = if i == usize::MAX { None } else { Some(q.row(i)) };
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], upper[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            let b = g_max - v;
            if let (Some(qi), true) = (&qi, b > 0.0) {
                let a = (q.diag(i) + q.diag(t) - 2.0 * y[i] * y[t] * qi[t]).max(TAU);
                let gain = -b * b / a;
                if gain < best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let qi = qi.expect("i was selected");
        let qj = q.row(j);
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q.diag(i) + q.diag(j) + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (q.diag(i) + q.diag(j) - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += qi[k] * di + qj[k] * dj;
        }
        if trace {
            trace_values.push(dual_objective(&alpha, &grad));
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:e} (tolerance {tolerance:e})");
    }

    let rho = compute_rho(&alpha, &grad, y, upper);
    DualSolution { alpha, grad, rho, iterations, converged, gap, trace: trace_values }
}

/// Average of `y_i G_i` over free variables, or the midpoint of the feasible
/// interval when every variable is at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}
