use super::matrix::Matrix;
use crate::error::Result;

/// `ln(1 + e^x)` without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 20.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mish: `x · tanh(ln(1 + e^x))`.
pub fn mish_scalar(x: f64) -> f64 {
    x * softplus(x).tanh()
}

/// d/dx of Mish: `tanh(sp(x)) + x · sech²(sp(x)) · σ(x)`.
pub fn mish_derivative(x: f64) -> f64 {
    let t = softplus(x).tanh();
    let sigmoid = 1.0 / (1.0 + (-x).exp());
    t + x * (1.0 - t * t) * sigmoid
}

/// Mish and its derivative from one exponential, using
/// `tanh(ln(1 + e^x)) = n / (n + 2)` with `n = e^x (e^x + 2)`.
pub(crate) fn mish_and_derivative(x: f64) -> (f64, f64) {
    if x > 20.0 {
        // tanh(softplus(x)) rounds to exactly 1 here
        return (x, 1.0);
    }
    let e = x.exp();
    let n = e * (e + 2.0);
    let t = n / (n + 2.0);
    let sech2 = (4.0 * n + 4.0) / ((n + 2.0) * (n + 2.0));
    let sigmoid = e / (1.0 + e);
    (x * t, t + x * sech2 * sigmoid)
}

pub fn mish(x: &Matrix) -> Matrix {
    x.map(mish_scalar)
}

pub fn mish_backward(x: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    upstream.ensure_shape(x.rows(), x.cols(), "mish upstream gradient")?;
    let data = x
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&v, &g)| g * mish_derivative(v))
        .collect();
    Matrix::from_vec(x.rows(), x.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values evaluated with mpmath at 40 digits.
    const MISH_1: f64 = 0.865_098_388_267_310_3;
    const MISH_NEG_1: f64 = -0.303_401_461_374_108_9;
    const DMISH_1: f64 = 1.049_036_220_099_792_2;
    const DMISH_NEG_2: f64 = -0.108_355_092_420_393_94;
    const MISH_MIN: f64 = -0.308_843_413_017_250_4;

    #[test]
    fn reference_values() {
        assert_eq!(mish_scalar(0.0), 0.0);
        assert!((mish_scalar(1.0) - 0.865098).abs() < 1e-6);
        assert!((mish_scalar(1.0) - MISH_1).abs() < 1e-14);
        assert!((mish_scalar(-1.0) - MISH_NEG_1).abs() < 1e-14);
        assert!((mish_scalar(30.0) - 30.0).abs() < 1e-6);
        assert!((mish_derivative(0.0) - 0.6).abs() < 1e-9);
        assert!((mish_derivative(1.0) - DMISH_1).abs() < 1e-13);
        assert!((mish_derivative(-2.0) - DMISH_NEG_2).abs() < 1e-13);
        assert!((mish_derivative(40.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_at_zero_matches_finite_difference() {
        let h = 1e-5;
        let fd = (mish_scalar(h) - mish_scalar(-h)) / (2.0 * h);
        assert!((fd - 0.6).abs() < 1e-9);
    }

    #[test]
    fn large_inputs_do_not_overflow() {
        let y = mish_scalar(1e4);
        assert!(y.is_finite());
        assert!(((y - 1e4) / 1e4).abs() < 1e-6);
        assert!(mish_derivative(1e4).is_finite());
        assert!(mish_scalar(-1e4).abs() < 1e-300);
        assert!(mish_derivative(-1e4).is_finite());
    }

    #[test]
    fn fused_kernel_matches_reference_formula() {
        for i in -40_000..=40_000 {
            let x = i as f64 * 1e-3;
            let (f, d) = mish_and_derivative(x);
            let (rf, rd) = (mish_scalar(x), mish_derivative(x));
            assert!((f - rf).abs() <= 1e-15 * rf.abs().max(1e-300) + 1e-300, "x={x}: {f} vs {rf}");
            assert!((d - rd).abs() <= 1e-14 * rd.abs().max(1.0), "x={x}: {d} vs {rd}");
        }
        for x in [-1e4, -700.0, 25.0, 1e4] {
            let (f, d) = mish_and_derivative(x);
            assert!(f.is_finite() && d.is_finite());
            assert!((f - mish_scalar(x)).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn global_minimum_bound_on_grid() {
        let mut lowest = f64::INFINITY;
        for i in -20_000..=20_000 {
            let y = mish_scalar(i as f64 * 1e-3);
            assert!(y >= -0.309);
            lowest = lowest.min(y);
        }
        assert!((lowest - MISH_MIN).abs() < 1e-6);
    }

    #[test]
    fn backward_scales_upstream() {
        let x = Matrix::from_vec(1, 3, vec![-1.0, 0.0, 2.0]).unwrap();
        let g = Matrix::from_vec(1, 3, vec![2.0, 2.0, 0.0]).unwrap();
        let out = mish_backward(&x, &g).unwrap();
        assert_eq!(out.as_slice()[2], 0.0);
        assert!((out.as_slice()[1] - 1.2).abs() < 1e-12);
        assert!(mish_backward(&x, &Matrix::zeros(3, 1)).is_err());
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(x in -15.0f64..15.0) {
            let h = 1e-5;
            let fd = (mish_scalar(x + h) - mish_scalar(x - h)) / (2.0 * h);
            let an = mish_derivative(x);
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "x={} fd={} an={}", x, fd, an);
        }
    }
}
