//! Squared-exponential kernel and multivariate kernel density estimation.
//!
//! The kernel is κ(x, z) = exp(−γ (x − z)ᵀ Σ⁻¹ (x − z)) with Σ a frozen
//! diagonal of per-feature variance scales, so closeness is measured in
//! units of the training data's spread. Densities are unnormalized Gaussian
//! KDE averages
//!
//! d(x) = (1/n) Σᵢ det(H)⁻¹ exp(−‖H⁻¹(x − xᵢ)‖²)
//!
//! over a diagonal bandwidth H = h · diag(σ), keeping bandwidth selection a
//! single-scalar problem. Only relative density values matter to the callers,
//! so no Gaussian normalization constant is applied.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Minimum admissible per-feature standard deviation, relative to the largest
/// feature's deviation, used to keep degenerate (constant) features from
/// collapsing the kernel metric or the bandwidth determinant.
const STD_FLOOR_RELATIVE: f64 = 1e-6;
const STD_FLOOR_ABSOLUTE: f64 = 1e-9;

/// Frozen parameters of the squared-exponential kernel.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    feature_scales: Vec<f64>,
    gamma: f64,
}

impl KernelParams {
    /// `feature_scales` holds the per-feature variance estimates (the
    /// diagonal of Σ); `gamma` sharpens or flattens the metric.
    pub fn new(feature_scales: Vec<f64>, gamma: f64) -> Result<Self> {
        if feature_scales.is_empty() {
            return Err(Error::InvalidArgument("feature_scales must be nonempty"));
        }
        if !feature_scales.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidArgument(
                "feature_scales entries must be finite and strictly positive",
            ));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument("gamma must be finite and positive"));
        }
        Ok(Self {
            feature_scales,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_scales.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn feature_scales(&self) -> &[f64] {
        &self.feature_scales
    }
}

fn check_vector(x: &[f64], dim: usize, what: &'static str) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// κ(x, z) without argument validation; callers guarantee matching, finite
/// inputs.
#[inline]
pub(crate) fn kernel_eval_unchecked(x: &[f64], z: &[f64], p: &KernelParams) -> f64 {
    let mut q = 0.0;
    for j in 0..x.len() {
        let d = x[j] - z[j];
        q += d * d / p.feature_scales[j];
    }
    math::exp(-p.gamma * q)
}

/// Evaluates the squared-exponential kernel κ(x, z) ∈ (0, 1].
///
/// Returns 1 exactly when `x == z` and decays with the Σ-scaled squared
/// distance between the points.
pub fn kernel_eval(x: &[f64], z: &[f64], p: &KernelParams) -> Result<f64> {
    check_vector(x, p.dim(), "kernel input x")?;
    check_vector(z, p.dim(), "kernel input z")?;
    Ok(kernel_eval_unchecked(x, z, p))
}

/// Evaluates κ(x, ·) against every vector of a buffer.
pub fn kernel_row<'a, I>(x: &[f64], buffer: I, p: &KernelParams) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    check_vector(x, p.dim(), "kernel input x")?;
    let mut row = Vec::new();
    for z in buffer {
        check_vector(z, p.dim(), "kernel buffer entry")?;
        row.push(kernel_eval_unchecked(x, z, p));
    }
    Ok(row)
}

/// Diagonal bandwidth matrix H = scale · diag(base) for kernel density
/// estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthMatrix {
    scale: f64,
    base: Vec<f64>,
    inv: Vec<f64>,
    det: f64,
}

impl BandwidthMatrix {
    pub fn new(scale: f64, base: Vec<f64>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::InvalidArgument("bandwidth base must be nonempty"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(
                "bandwidth scale must be finite and positive",
            ));
        }
        if !base.iter().all(|b| b.is_finite() && *b > 0.0) {
            return Err(Error::InvalidArgument(
                "bandwidth base entries must be finite and strictly positive",
            ));
        }
        let mut det = 1.0;
        let mut inv = Vec::with_capacity(base.len());
        for b in &base {
            let h = scale * b;
            det *= h;
            inv.push(1.0 / h);
        }
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::InvalidArgument("bandwidth determinant degenerate"));
        }
        Ok(Self {
            scale,
            base,
            inv,
            det,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Per-feature standard deviations before scaling.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// det(H), the product of the scaled diagonal entries.
    pub fn det_value(&self) -> f64 {
        self.det
    }
}

/// Unnormalized Gaussian bump at the H-scaled distance between two points.
#[inline]
pub(crate) fn kde_kernel_unchecked(x: &[f64], z: &[f64], h: &BandwidthMatrix) -> f64 {
    let mut q = 0.0;
    for j in 0..x.len() {
        let u = (x[j] - z[j]) * h.inv[j];
        q += u * u;
    }
    math::exp(-q)
}

/// Kernel density estimate of `x` against a nonempty buffer of observations.
///
/// Averages det(H)⁻¹ exp(−‖H⁻¹(x − xᵢ)‖²) over the buffer; strictly positive
/// and invariant under buffer permutation.
pub fn kde_density<'a, I>(x: &[f64], buffer: I, h: &BandwidthMatrix) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    check_vector(x, h.dim(), "density query")?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for z in buffer {
        check_vector(z, h.dim(), "density buffer entry")?;
        sum += kde_kernel_unchecked(x, z, h);
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "density undefined over an empty buffer",
        ));
    }
    Ok(sum / (n as f64 * h.det))
}

/// Applies the degenerate-feature floor to a set of standard deviations.
pub(crate) fn floor_std_devs(stds: &mut [f64]) {
    let max_std = stds.iter().cloned().fold(0.0f64, f64::max);
    for s in stds.iter_mut() {
        *s = s.max(STD_FLOOR_RELATIVE * max_std).max(STD_FLOOR_ABSOLUTE);
    }
}

/// Per-feature sample standard deviations (n − 1 denominator) of a buffer.
pub(crate) fn feature_std_devs<'a, I>(buffer: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let mut n = 0usize;
    let mut dim = 0usize;
    let mut means: Vec<f64> = Vec::new();
    for x in buffer.clone() {
        if means.is_empty() {
            dim = x.len();
            means = alloc::vec![0.0; dim];
        }
        check_vector(x, dim, "bandwidth buffer entry")?;
        for (m, v) in means.iter_mut().zip(x) {
            *m += v;
        }
        n += 1;
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "bandwidth fit needs at least two points",
        ));
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut vars = alloc::vec![0.0; dim];
    for x in buffer {
        for j in 0..dim {
            let d = x[j] - means[j];
            vars[j] += d * d;
        }
    }
    let mut stds: Vec<f64> = vars
        .into_iter()
        .map(|v| math::sqrt(v / (n - 1) as f64))
        .collect();
    floor_std_devs(&mut stds);
    Ok(stds)
}

/// Fits a diagonal bandwidth H = scale · diag(std-dev of each feature) from a
/// buffer of at least two points. Constant features are floored so H stays
/// nonsingular.
pub fn fit_bandwidth<'a, I>(buffer: I, scale: f64) -> Result<BandwidthMatrix>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let stds = feature_std_devs(buffer)?;
    BandwidthMatrix::new(scale, stds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn params(dim: usize, gamma: f64) -> KernelParams {
        KernelParams::new(vec![1.0; dim], gamma).unwrap()
    }

    #[test]
    fn kernel_is_one_at_zero_distance() {
        let p = params(3, 2.5);
        let x = [0.3, -1.2, 4.0];
        assert_eq!(kernel_eval(&x, &x, &p).unwrap(), 1.0);
    }

    #[test]
    fn kernel_single_feature_analytic() {
        let p = params(1, 1.0);
        let v = kernel_eval(&[0.0], &[1.0], &p).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn kernel_matches_direct_formula_in_six_dims() {
        // Re-evaluate the closed form with an independent loop.
        let scales = vec![0.7, 1.3, 2.0, 0.2, 5.0, 0.9];
        let gamma = 3.7;
        let p = KernelParams::new(scales.clone(), gamma).unwrap();
        let x = [0.1, -0.4, 2.2, 0.05, -3.0, 1.7];
        let z = [-0.3, 0.9, 1.8, 0.0, -2.1, 2.4];
        let mut expected = 0.0;
        for j in 0..6 {
            expected += (x[j] - z[j]) * (x[j] - z[j]) * gamma / scales[j];
        }
        let expected = (-expected).exp();
        let got = kernel_eval(&x, &z, &p).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn kernel_rejects_bad_inputs() {
        let p = params(2, 1.0);
        assert!(matches!(
            kernel_eval(&[0.0], &[0.0, 1.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            kernel_eval(&[f64::NAN, 0.0], &[0.0, 1.0], &p),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn kernel_row_matches_scalar_calls() {
        let p = params(2, 0.8);
        let x = [0.5, -0.5];
        let buffer = [vec![0.5, -0.5], vec![1.0, 0.0], vec![-2.0, 3.0]];
        let row = kernel_row(&x, buffer.iter().map(|b| b.as_slice()), &p).unwrap();
        assert_eq!(row.len(), 3);
        assert_eq!(row[0], 1.0);
        for (r, b) in row.iter().zip(&buffer) {
            assert_eq!(*r, kernel_eval(&x, b, &p).unwrap());
        }
    }

    #[test]
    fn kernel_row_empty_buffer() {
        let p = params(2, 0.8);
        let row = kernel_row(&[0.0, 0.0], core::iter::empty(), &p).unwrap();
        assert!(row.is_empty());
    }

    #[test]
    fn density_of_single_identical_point_is_one_over_det() {
        let h = BandwidthMatrix::new(1.0, vec![1.0, 1.0]).unwrap();
        let x = [0.4, -0.1];
        let d = kde_density(&x, [x.as_slice()], &h).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn density_unchanged_by_duplicating_the_buffer() {
        let h = BandwidthMatrix::new(0.7, vec![1.0, 2.0]).unwrap();
        let p1 = [0.0, 0.0];
        let q = [0.3, -0.6];
        let single = kde_density(&q, [p1.as_slice()], &h).unwrap();
        let doubled = kde_density(&q, [p1.as_slice(), p1.as_slice()], &h).unwrap();
        assert_abs_diff_eq!(single, doubled, epsilon = 1e-15);
    }

    #[test]
    fn density_higher_at_cluster_than_at_isolated_point() {
        let h = BandwidthMatrix::new(1.0, vec![1.0]).unwrap();
        let mut buffer: Vec<Vec<f64>> = (0..10).map(|i| vec![0.01 * i as f64]).collect();
        buffer.push(vec![10.0]);
        let views: Vec<&[f64]> = buffer.iter().map(|b| b.as_slice()).collect();
        let centroid = kde_density(&[0.045], views.iter().cloned(), &h).unwrap();
        let isolated = kde_density(&[10.0], views.iter().cloned(), &h).unwrap();
        // Cross-check the closed form with a hand-rolled loop.
        let mut by_hand = 0.0;
        for b in &buffer {
            let u = 0.045 - b[0];
            by_hand += (-u * u).exp();
        }
        by_hand /= buffer.len() as f64;
        assert_relative_eq!(centroid, by_hand, max_relative = 1e-12);
        assert!(centroid > isolated);
    }

    #[test]
    fn density_requires_nonempty_buffer() {
        let h = BandwidthMatrix::new(1.0, vec![1.0]).unwrap();
        assert!(kde_density(&[0.0], core::iter::empty(), &h).is_err());
    }

    #[test]
    fn bandwidth_fit_two_points() {
        // Two points differing only in feature 0 by 2.0: sample std-dev of
        // {-1, +1} with the n-1 convention is sqrt(2).
        let a = [1.0, 5.0];
        let b = [3.0, 5.0];
        let h = fit_bandwidth([a.as_slice(), b.as_slice()], 0.5).unwrap();
        assert_relative_eq!(h.base()[0], 2.0f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn bandwidth_floors_constant_features() {
        let a = [1.0, 5.0];
        let b = [3.0, 5.0];
        let h = fit_bandwidth([a.as_slice(), b.as_slice()], 1.0).unwrap();
        let expected_floor = 1e-6 * 2.0f64.sqrt();
        assert_relative_eq!(h.base()[1], expected_floor, max_relative = 1e-12);
        assert!(h.det_value() > 0.0);
    }

    #[test]
    fn bandwidth_det_scales_with_scale_power_dim() {
        let pts = [
            [0.0, 1.0, -1.0],
            [2.0, 0.0, 0.5],
            [1.0, -1.0, 2.0],
            [0.5, 0.5, 0.5],
        ];
        let views = pts.iter().map(|p| p.as_slice());
        let h1 = fit_bandwidth(views.clone(), 1.0).unwrap();
        let h2 = fit_bandwidth(views, 2.0).unwrap();
        assert_relative_eq!(h2.det_value(), h1.det_value() * 8.0, max_relative = 1e-12);
        assert_relative_eq!(
            h1.det_value(),
            h1.base().iter().product::<f64>(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn bandwidth_fit_needs_two_points() {
        let a = [1.0, 2.0];
        assert!(fit_bandwidth([a.as_slice()], 1.0).is_err());
    }

    fn arb_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, dim)
    }

    proptest! {
        // Ranges below keep the kernel exponent comfortably inside f64, away
        // from exp underflow (exponent ~ -745) and rounding to 1.
        #[test]
        fn kernel_symmetric_and_bounded(
            x in prop::collection::vec(-2.0f64..2.0, 4),
            z in prop::collection::vec(-2.0f64..2.0, 4),
            gamma in 0.05f64..10.0,
        ) {
            let p = KernelParams::new(vec![0.5, 1.0, 2.0, 4.0], gamma).unwrap();
            let a = kernel_eval(&x, &z, &p).unwrap();
            let b = kernel_eval(&z, &x, &p).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a > 0.0 && a <= 1.0);
            if x == z {
                prop_assert_eq!(a, 1.0);
            }
            let sep = x.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if sep > 1e-3 {
                prop_assert!(a < 1.0);
            }
        }

        #[test]
        fn kernel_decays_along_a_ray(
            x in prop::collection::vec(-2.0f64..2.0, 3),
            dir in prop::collection::vec(-1.0f64..1.0, 3),
            t in 0.1f64..2.0,
        ) {
            prop_assume!(dir.iter().any(|d| d.abs() > 1e-2));
            let p = KernelParams::new(vec![1.0, 2.0, 0.5], 1.0).unwrap();
            let near: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + d * t).collect();
            let far: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + d * (t * 2.0)).collect();
            let kn = kernel_eval(&x, &near, &p).unwrap();
            let kf = kernel_eval(&x, &far, &p).unwrap();
            prop_assert!(kf < kn);
        }

        #[test]
        fn gram_matrix_is_numerically_psd(
            pts in prop::collection::vec(arb_vec(3), 2..8),
            gamma in 0.1f64..10.0,
        ) {
            let p = KernelParams::new(vec![1.0, 1.0, 1.0], gamma).unwrap();
            let n = pts.len();
            let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    gram[(i, j)] = kernel_eval(&pts[i], &pts[j], &p).unwrap();
                }
            }
            let eig = nalgebra::SymmetricEigen::new(gram);
            for ev in eig.eigenvalues.iter() {
                prop_assert!(*ev >= -1e-9);
            }
        }

        #[test]
        fn density_permutation_invariant_and_det_scaling(
            pts in prop::collection::vec(arb_vec(2), 1..10),
            q in arb_vec(2),
        ) {
            let h = BandwidthMatrix::new(1.0, vec![1.0, 3.0]).unwrap();
            let views: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let mut reversed = views.clone();
            reversed.reverse();
            let d1 = kde_density(&q, views.iter().cloned(), &h).unwrap();
            let d2 = kde_density(&q, reversed.into_iter(), &h).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12 * d1.max(d2));

            // Scaling every pairwise H⁻¹-distance-preserving direction: widen H
            // and the data together; the density shrinks exactly by the det ratio.
            let c = 2.0;
            let hw = BandwidthMatrix::new(c, vec![1.0, 3.0]).unwrap();
            let scaled: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] * c, p[1] * c]).collect();
            let qs = [q[0] * c, q[1] * c];
            let d3 = kde_density(&qs, scaled.iter().map(|p| p.as_slice()), &hw).unwrap();
            prop_assert!((d3 - d1 / (c * c)).abs() <= 1e-9 * d1.max(1e-300));
        }
    }
}
