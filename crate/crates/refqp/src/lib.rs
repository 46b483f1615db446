//! Dense reference solver for box- and equality-constrained quadratic
//! programs, used as an independent oracle when validating iterative solvers.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 x' Q x + p' x
//!     subject to  0 <= x_i <= c,   z' x = 0
//! ```
//!
//! by a log-barrier path-following method: for increasing t, Newton steps
//! minimize t(1/2 x'Qx + p'x) - sum log(x_i) - sum log(c - x_i) subject to
//! z'x = 0, via the dense KKT system. Q only needs to be positive
//! semidefinite; the barrier Hessian keeps the KKT matrix nonsingular.
//!
//! The front-end [`solve_svr_dual`] instantiates the ε-insensitive support
//! vector regression dual over a squared-exponential kernel that this crate
//! evaluates itself, so that no code is shared with the solver under test.

use nalgebra::{DMatrix, DVector};

/// Solution of the box/equality QP.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multiplier of the equality constraint z'x = 0 at the optimum.
    pub eq_multiplier: f64,
}

fn objective(q: &DMatrix<f64>, p: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * (q * x).dot(x) + p.dot(x)
}

/// Solves the QP described in the crate docs. `z` must have entries ±1 in
/// equal numbers so that the analytic center x = c/2 is feasible.
pub fn solve_box_eq_qp(
    q: &DMatrix<f64>,
    p: &DVector<f64>,
    c: f64,
    z: &DVector<f64>,
) -> QpSolution {
    let n = p.len();
    assert_eq!(q.nrows(), n);
    assert_eq!(q.ncols(), n);
    assert!(c > 0.0);
    assert_eq!(
        z.iter().filter(|v| **v > 0.0).count() * 2,
        n,
        "z must contain +1 and -1 in equal numbers"
    );

    let mut x = DVector::from_element(n, c / 2.0);
    let mut t = 1.0;
    let mu = 20.0;
    let m_constraints = (2 * n) as f64;
    let mut eq_multiplier = 0.0;

    // Outer loop: tighten the barrier until the duality-gap bound m/t is
    // negligible next to the objective scale.
    loop {
        // Inner Newton iterations at fixed t.
        for _ in 0..60 {
            let mut grad = (q * &x + p) * t;
            let mut hdiag = DVector::zeros(n);
            for i in 0..n {
                grad[i] += -1.0 / x[i] + 1.0 / (c - x[i]);
                hdiag[i] = 1.0 / (x[i] * x[i]) + 1.0 / ((c - x[i]) * (c - x[i]));
            }
            // KKT system [[tQ + D, z], [z', 0]] [dx; w] = [-grad; 0].
            let mut kkt = DMatrix::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    kkt[(i, j)] = t * q[(i, j)];
                }
                kkt[(i, i)] += hdiag[i];
                kkt[(i, n)] = z[i];
                kkt[(n, i)] = z[i];
            }
            let mut rhs = DVector::zeros(n + 1);
            for i in 0..n {
                rhs[i] = -grad[i];
            }
            let sol = kkt
                .lu()
                .solve(&rhs)
                .expect("singular KKT system in reference QP solver");
            let dx = sol.rows(0, n).into_owned();
            eq_multiplier = sol[n] / t;

            let decrement = -grad.dot(&dx);
            if decrement / 2.0 < 1e-13 {
                break;
            }

            // Largest step keeping x strictly inside the box, then backtrack
            // on the barrier objective.
            let mut smax = 1.0f64;
            for i in 0..n {
                if dx[i] < 0.0 {
                    smax = smax.min(-x[i] / dx[i]);
                } else if dx[i] > 0.0 {
                    smax = smax.min((c - x[i]) / dx[i]);
                }
            }
            let mut s = 0.99 * smax.min(1.0);
            let barrier = |xv: &DVector<f64>| -> f64 {
                let mut val = t * objective(q, p, xv);
                for i in 0..n {
                    val -= xv[i].ln() + (c - xv[i]).ln();
                }
                val
            };
            let base = barrier(&x);
            for _ in 0..60 {
                let cand = &x + &dx * s;
                if cand.iter().all(|v| *v > 0.0 && *v < c) && barrier(&cand) < base {
                    x = cand;
                    break;
                }
                s *= 0.5;
            }
        }

        let scale = objective(q, p, &x).abs().max(1.0);
        if m_constraints / t < 1e-10 * scale {
            break;
        }
        t *= mu;
        if t > 1e18 {
            break;
        }
    }

    QpSolution {
        objective: objective(q, p, &x),
        eq_multiplier,
        x,
    }
}

/// Solution of the ε-SVR dual as produced by the reference solver.
#[derive(Debug, Clone)]
pub struct SvrDualSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub objective: f64,
    /// Bias recovered from the equality multiplier.
    pub bias: f64,
}

impl SvrDualSolution {
    /// Prediction at a query point using this solver's own kernel evaluation.
    pub fn predict(
        &self,
        train: &[Vec<f64>],
        query: &[f64],
        gamma: f64,
        scales: &[f64],
    ) -> f64 {
        let mut out = self.bias;
        for (i, xi) in train.iter().enumerate() {
            out += (self.alpha[i] - self.beta[i]) * rbf(xi, query, gamma, scales);
        }
        out
    }
}

fn rbf(x: &[f64], y: &[f64], gamma: f64, scales: &[f64]) -> f64 {
    let mut q = 0.0;
    for j in 0..x.len() {
        let d = x[j] - y[j];
        q += d * d / scales[j];
    }
    (-gamma * q).exp()
}

/// Solves the ε-SVR dual
///
/// ```text
///   min_{α,β}  1/2 Σij (αi-βi)(αj-βj) K(xi,xj) + ε Σ (αi+βi) - Σ yi (αi-βi)
///   s.t.       0 <= αi, βi <= c,   Σ (αi-βi) = 0
/// ```
///
/// over the squared-exponential kernel K(x, x') = exp(-γ Σj (xj-x'j)²/Σj).
pub fn solve_svr_dual(
    x: &[Vec<f64>],
    y: &[f64],
    eps: f64,
    c: f64,
    gamma: f64,
    scales: &[f64],
) -> SvrDualSolution {
    let n = x.len();
    assert_eq!(y.len(), n);
    let mut qmat = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let k = rbf(&x[i], &x[j], gamma, scales);
            qmat[(i, j)] = k;
            qmat[(i, n + j)] = -k;
            qmat[(n + i, j)] = -k;
            qmat[(n + i, n + j)] = k;
        }
    }
    let mut p = DVector::zeros(2 * n);
    let mut z = DVector::zeros(2 * n);
    for i in 0..n {
        p[i] = eps - y[i];
        p[n + i] = eps + y[i];
        z[i] = 1.0;
        z[n + i] = -1.0;
    }
    let sol = solve_box_eq_qp(&qmat, &p, c, &z);
    SvrDualSolution {
        alpha: sol.x.iter().take(n).cloned().collect(),
        beta: sol.x.iter().skip(n).cloned().collect(),
        objective: sol.objective,
        bias: sol.eq_multiplier,
    }
}
