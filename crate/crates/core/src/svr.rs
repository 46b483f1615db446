//! ε-insensitive support vector regression: the dual problem solved by
//! sequential minimal optimization (SMO) with warm starting, and kernel-sum
//! prediction.
//!
//! The dual over multipliers 0 ≤ αᵢ, βᵢ ≤ C with Σ(αᵢ − βᵢ) = 0 is
//!
//! ```text
//!   min  1/2 Σij (αi−βi)(αj−βj) K(xi,xj) + ε Σi (αi+βi) − Σi yi (αi−βi)
//! ```
//!
//! SMO repeatedly selects the maximal-KKT-violating pair of multipliers and
//! solves the two-variable subproblem analytically. Candidate bias values
//! φ = y ∓ ε − o (with o the kernel expansion without bias) double as the
//! violation measure: the pair (argmax over the upward-feasible set, argmin
//! over the downward-feasible set) is optimized until max − min ≤ tol.
//!
//! The regression function is f(x) = Σᵢ wᵢ κ(xᵢ, x) + b with w = α − β; only
//! samples with nonzero w are support vectors and survive pruning.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gram::SymMatrix;
use crate::kernel::{kernel_eval_unchecked, KernelParams};

/// Two-variable step curvature floor for degenerate kernel rows.
const TAU: f64 = 1e-12;

/// Weights at or below this magnitude mark a sample as a non-support-vector.
pub const PRUNE_WEIGHT_TOL: f64 = 1e-12;

/// One timestamped input/target pair of the regression problem.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Feature vector (body velocities and thruster speeds in the vehicle
    /// problem).
    pub x: Vec<f64>,
    /// Scalar regression target (one acceleration component).
    pub y: f64,
    /// Acquisition time in seconds since the stream epoch.
    pub t_s: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64, t_s: f64) -> Result<Self> {
        let s = Self { x, y, t_s };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x.iter().all(|v| v.is_finite()) || !self.y.is_finite() || !self.t_s.is_finite() {
            return Err(Error::NonFinite("sample"));
        }
        if self.t_s < 0.0 {
            return Err(Error::InvalidArgument("sample timestamp must be >= 0"));
        }
        Ok(())
    }
}

/// Per-output-dimension tuning record: the SVR triple (ε, C, γ), the buffer
/// size, the forgetting age weight k, the inclusion-gate thresholds a, b, ξ,
/// and the KDE bandwidth multiplier h.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// ε-tube half-width in target units.
    pub epsilon: f64,
    /// Box constraint C on the dual multipliers.
    pub cost: f64,
    /// Kernel sharpness γ.
    pub gamma: f64,
    /// Maximum number of buffered support vectors.
    pub buffer_size: usize,
    /// k in the forgetting score φ = d / (√t + k).
    pub age_weight: f64,
    /// a: kernel proximity threshold of the target-closeness gate.
    pub gate_proximity: f64,
    /// b: target closeness threshold, in target units.
    pub gate_target: f64,
    /// ξ: kernel proximity threshold of the residual-fit gate.
    pub gate_fit: f64,
    /// h: bandwidth multiplier for density estimation.
    pub kde_scale: f64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon >= 0.0
            && self.cost > 0.0
            && self.gamma > 0.0
            && self.buffer_size >= 1
            && self.age_weight >= 0.0
            && self.gate_proximity > 0.0
            && self.gate_proximity < 1.0
            && self.gate_target > 0.0
            && self.gate_fit > 0.0
            && self.gate_fit < 1.0
            && self.kde_scale > 0.0;
        let finite = [
            self.epsilon,
            self.cost,
            self.gamma,
            self.age_weight,
            self.gate_proximity,
            self.gate_target,
            self.gate_fit,
            self.kde_scale,
        ]
        .iter()
        .all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidArgument("hyperparameters out of range"))
        }
    }
}

/// Stopping controls of the SMO loop.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Maximum allowed KKT violation at termination.
    pub kkt_tol: f64,
    /// Cap on two-variable pair updates; hitting it returns the best solution
    /// so far flagged as non-converged.
    pub max_iter: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

/// Dual solution of one solve, with diagnostics.
#[derive(Debug, Clone)]
pub struct SvrSolution {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub bias: f64,
    /// Final dual objective value.
    pub objective: f64,
    /// Number of pair updates performed.
    pub iterations: u64,
    pub converged: bool,
}

impl SvrSolution {
    /// Support weights w = α − β.
    pub fn weights(&self) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.betas)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Largest excursion of any multiplier outside [0, C].
    pub fn box_violation(&self, cost: f64) -> f64 {
        self.alphas
            .iter()
            .chain(&self.betas)
            .map(|v| (-v).max(v - cost))
            .fold(0.0, f64::max)
    }

    /// Largest product αᵢβᵢ; at most one side may be active per sample.
    pub fn complementarity_violation(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.betas)
            .map(|(a, b)| a * b)
            .fold(0.0, f64::max)
    }

    /// |Σ(α − β)|, the residual of the dual equality constraint.
    pub fn equality_residual(&self) -> f64 {
        crate::math::abs(
            self.alphas
                .iter()
                .zip(&self.betas)
                .map(|(a, b)| a - b)
                .sum(),
        )
    }
}

/// The bounded support-vector buffer of one output dimension: samples, their
/// weights w = α − β, the bias, and the frozen kernel. This is the entire
/// model state consumed by prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    samples: Vec<Sample>,
    weights: Vec<f64>,
    bias: f64,
    kernel: KernelParams,
    capacity: usize,
}

impl SupportSet {
    pub fn new(kernel: KernelParams, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be >= 1"));
        }
        Ok(Self {
            samples: Vec::new(),
            weights: Vec::new(),
            bias: 0.0,
            kernel,
            capacity,
        })
    }

    pub fn from_parts(
        samples: Vec<Sample>,
        weights: Vec<f64>,
        bias: f64,
        kernel: KernelParams,
        capacity: usize,
    ) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be >= 1"));
        }
        if samples.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "samples and weights must have equal length",
            ));
        }
        if samples.len() > capacity {
            return Err(Error::InvalidArgument("more samples than capacity"));
        }
        if !bias.is_finite() || !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("support set weights"));
        }
        for s in &samples {
            s.validate()?;
            if s.x.len() != kernel.dim() {
                return Err(Error::DimensionMismatch {
                    expected: kernel.dim(),
                    got: s.x.len(),
                });
            }
        }
        Ok(Self {
            samples,
            weights,
            bias,
            kernel,
            capacity,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// f(x) = Σᵢ wᵢ κ(xᵢ, x) + b.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("prediction query"));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut out = self.bias;
        for (s, w) in self.samples.iter().zip(&self.weights) {
            out += w * kernel_eval_unchecked(&s.x, x, &self.kernel);
        }
        out
    }

    pub(crate) fn push(&mut self, sample: Sample, weight: f64) {
        self.samples.push(sample);
        self.weights.push(weight);
    }

    pub(crate) fn set_bias(&mut self, bias: f64) {
        self.bias = bias;
    }

    pub(crate) fn set_weights(&mut self, weights: Vec<f64>) {
        debug_assert_eq!(weights.len(), self.samples.len());
        self.weights = weights;
    }

    /// Removes the given (sorted, unique) indices and returns the removed
    /// samples in index order.
    pub(crate) fn remove_indices(&mut self, sorted: &[usize]) -> Vec<Sample> {
        if sorted.is_empty() {
            return Vec::new();
        }
        let mut removed = Vec::with_capacity(sorted.len());
        let mut del = sorted.iter().peekable();
        let mut keep_samples = Vec::with_capacity(self.samples.len() - sorted.len());
        let mut keep_weights = Vec::with_capacity(self.weights.len() - sorted.len());
        for (i, (s, w)) in self
            .samples
            .drain(..)
            .zip(self.weights.drain(..))
            .enumerate()
        {
            if del.peek() == Some(&&i) {
                del.next();
                removed.push(s);
            } else {
                keep_samples.push(s);
                keep_weights.push(w);
            }
        }
        self.samples = keep_samples;
        self.weights = keep_weights;
        removed
    }
}

/// Removes every buffered sample whose weight magnitude is at or below
/// [`PRUNE_WEIGHT_TOL`] — they are not support vectors and do not contribute
/// to predictions. Returns the number removed; the bias is retained.
pub fn prune_weights(model: &mut SupportSet) -> usize {
    let idx: Vec<usize> = model
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| crate::math::abs(**w) <= PRUNE_WEIGHT_TOL)
        .map(|(i, _)| i)
        .collect();
    model.remove_indices(&idx);
    idx.len()
}

/// Solves the ε-SVR dual for the given samples.
///
/// With a warm start, the previous solution's weights seed the multipliers
/// (split by sign) and newly appended samples start at zero, which typically
/// converges in far fewer pair updates than a cold solve. On hitting the
/// iteration cap the best-so-far solution is returned with
/// `converged = false`; the caller decides whether to accept it.
pub fn solve_dual(
    samples: &[Sample],
    kernel: &KernelParams,
    hp: &Hyperparams,
    warm: Option<&SvrSolution>,
    opts: &SolverOptions,
) -> Result<SvrSolution> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("solve_dual needs >= 1 sample"));
    }
    hp.validate()?;
    for s in samples {
        s.validate()?;
        if s.x.len() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: s.x.len(),
            });
        }
    }
    let warm_weights = match warm {
        Some(sol) => {
            if sol.alphas.len() > samples.len() || sol.alphas.len() != sol.betas.len() {
                return Err(Error::InvalidArgument(
                    "warm start does not match the sample prefix",
                ));
            }
            let mut w = sol.weights();
            w.resize(samples.len(), 0.0);
            Some(w)
        }
        None => None,
    };
    let gram = SymMatrix::build(samples.len(), |i, j| {
        kernel_eval_unchecked(&samples[i].x, &samples[j].x, kernel)
    });
    let y: Vec<f64> = samples.iter().map(|s| s.y).collect();
    Ok(solve_dual_gram(
        &gram,
        &y,
        hp.epsilon,
        hp.cost,
        warm_weights.as_deref(),
        opts,
    ))
}

/// SMO over a prebuilt kernel matrix. `warm` holds per-sample weights w = α−β
/// from a previous solution; they are split by sign and rescaled so the
/// equality constraint holds at the starting point.
pub(crate) fn solve_dual_gram(
    gram: &SymMatrix,
    y: &[f64],
    eps: f64,
    cost: f64,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> SvrSolution {
    let n = y.len();
    debug_assert_eq!(gram.n(), n);

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    if let Some(w) = warm {
        debug_assert_eq!(w.len(), n);
        for i in 0..n {
            if w[i] > 0.0 {
                alpha[i] = w[i].min(cost);
            } else if w[i] < 0.0 {
                beta[i] = (-w[i]).min(cost);
            }
        }
        // Removals since the last solve can leave Σα ≠ Σβ; rescale the heavier
        // side down so the start is feasible.
        let sa: f64 = alpha.iter().sum();
        let sb: f64 = beta.iter().sum();
        if sa > sb && sa > 0.0 {
            let f = sb / sa;
            for a in alpha.iter_mut() {
                *a *= f;
            }
        } else if sb > sa && sb > 0.0 {
            let f = sa / sb;
            for b in beta.iter_mut() {
                *b *= f;
            }
        }
    }

    // o_i = Σ_j (α_j − β_j) K_ij, maintained incrementally across updates.
    let mut o = vec![0.0; n];
    expand_outputs(gram, &alpha, &beta, &mut o);

    let mut iterations = 0u64;
    let mut converged = false;
    loop {
        // First index: maximal violator over the upward-feasible set. φ values
        // are the per-sample candidate biases; feasibility follows KKT signs.
        let mut up_val = f64::NEG_INFINITY;
        let mut up_idx = 0usize;
        let mut up_alpha = true;
        let mut low_val = f64::INFINITY;
        for i in 0..n {
            let pa = y[i] - eps - o[i];
            let pb = y[i] + eps - o[i];
            if alpha[i] < cost && pa > up_val {
                up_val = pa;
                up_idx = i;
                up_alpha = true;
            }
            if beta[i] > 0.0 && pb > up_val {
                up_val = pb;
                up_idx = i;
                up_alpha = false;
            }
            if alpha[i] > 0.0 && pa < low_val {
                low_val = pa;
            }
            if beta[i] < cost && pb < low_val {
                low_val = pb;
            }
        }
        if up_val - low_val <= opts.kkt_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        // Second index: the downward-feasible violator with the largest
        // second-order objective gain (φ_up − φ)² / η against the first.
        let i1 = up_idx;
        let row1 = gram.row(i1);
        let k11 = row1[i1];
        let mut best_gain = f64::NEG_INFINITY;
        let mut low_idx = 0usize;
        let mut low_alpha = true;
        let mut low_eta = TAU;
        for i in 0..n {
            let eta = (k11 + gram.get(i, i) - 2.0 * row1[i]).max(TAU);
            let pa = y[i] - eps - o[i];
            if alpha[i] > 0.0 && pa < up_val {
                let d = up_val - pa;
                let gain = d * d / eta;
                if gain > best_gain {
                    best_gain = gain;
                    low_idx = i;
                    low_alpha = true;
                    low_eta = eta;
                }
            }
            let pb = y[i] + eps - o[i];
            if beta[i] < cost && pb < up_val {
                let d = up_val - pb;
                let gain = d * d / eta;
                if gain > best_gain {
                    best_gain = gain;
                    low_idx = i;
                    low_alpha = false;
                    low_eta = eta;
                }
            }
        }

        let i2 = low_idx;
        let phi2 = if low_alpha {
            y[i2] - eps - o[i2]
        } else {
            y[i2] + eps - o[i2]
        };
        let mut step = (up_val - phi2) / low_eta;
        let cap1 = if up_alpha { cost - alpha[i1] } else { beta[i1] };
        let cap2 = if low_alpha { alpha[i2] } else { cost - beta[i2] };
        step = step.min(cap1).min(cap2);

        // The up-side weight rises by `step`, the low side falls; bounds are
        // hit exactly so feasibility never drifts.
        if up_alpha {
            alpha[i1] = if step == cap1 { cost } else { alpha[i1] + step };
        } else {
            beta[i1] = if step == cap1 { 0.0 } else { beta[i1] - step };
        }
        if low_alpha {
            alpha[i2] = if step == cap2 { 0.0 } else { alpha[i2] - step };
        } else {
            beta[i2] = if step == cap2 { cost } else { beta[i2] + step };
        }
        if i1 != i2 {
            let r1 = gram.row(i1);
            let r2 = gram.row(i2);
            for k in 0..n {
                o[k] += step * (r1[k] - r2[k]);
            }
        }
    }

    // Recompute the expansion exactly before deriving bias and objective.
    expand_outputs(gram, &alpha, &beta, &mut o);
    let mut quad = 0.0;
    let mut l1 = 0.0;
    let mut lin = 0.0;
    for i in 0..n {
        let w = alpha[i] - beta[i];
        quad += 0.5 * w * o[i];
        l1 += alpha[i] + beta[i];
        lin += y[i] * w;
    }
    let objective = quad + eps * l1 - lin;
    let bias = recover_bias(&alpha, &beta, &o, y, eps, cost);

    SvrSolution {
        alphas: alpha,
        betas: beta,
        bias,
        objective,
        iterations,
        converged,
    }
}

fn expand_outputs(gram: &SymMatrix, alpha: &[f64], beta: &[f64], o: &mut [f64]) {
    let n = alpha.len();
    for v in o.iter_mut() {
        *v = 0.0;
    }
    for j in 0..n {
        let w = alpha[j] - beta[j];
        if w != 0.0 {
            let row = gram.row(j);
            for i in 0..n {
                o[i] += w * row[i];
            }
        }
    }
}

/// Recovers the bias from the KKT conditions: the average implied bias over
/// unbounded support vectors when any exist, else the midpoint of the
/// feasible bias interval, else (all multipliers zero) the target mean
/// clipped into the intersection of the ε-tubes.
fn recover_bias(alpha: &[f64], beta: &[f64], o: &[f64], y: &[f64], eps: f64, cost: f64) -> f64 {
    let n = y.len();
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for i in 0..n {
        if alpha[i] > 0.0 && alpha[i] < cost {
            free_sum += y[i] - eps - o[i];
            free_count += 1;
        }
        if beta[i] > 0.0 && beta[i] < cost {
            free_sum += y[i] + eps - o[i];
            free_count += 1;
        }
    }
    if free_count > 0 {
        return free_sum / free_count as f64;
    }

    let any_active = alpha.iter().chain(beta.iter()).any(|v| *v > 0.0);
    if any_active {
        let mut lb = f64::NEG_INFINITY;
        let mut ub = f64::INFINITY;
        for i in 0..n {
            let pa = y[i] - eps - o[i];
            let pb = y[i] + eps - o[i];
            if alpha[i] < cost {
                lb = lb.max(pa);
            }
            if beta[i] > 0.0 {
                lb = lb.max(pb);
            }
            if alpha[i] > 0.0 {
                ub = ub.min(pa);
            }
            if beta[i] < cost {
                ub = ub.min(pb);
            }
        }
        return 0.5 * (lb + ub);
    }

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let lo = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - eps;
    let hi = y.iter().cloned().fold(f64::INFINITY, f64::min) + eps;
    if lo <= hi {
        mean_y.clamp(lo, hi)
    } else {
        mean_y
    }
}
