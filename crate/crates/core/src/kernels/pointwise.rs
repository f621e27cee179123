use crate::fields::Scalar;

use super::VPParams;

/// Parameters pre-rounded to the kernel precision.
#[derive(Clone, Copy, Debug)]
pub struct KernelConsts<T> {
    pub pstar: T,
    pub delta_min_sq: T,
    pub c: T,
    pub alpha_inv: T,
    /// `1 - 1/alpha`
    pub fac: T,
}

impl<T: Scalar> KernelConsts<T> {
    pub fn new(params: &VPParams) -> Self {
        let alpha_inv = T::one() / T::lit(params.alpha);
        let dmin = T::lit(params.delta_min);
        KernelConsts {
            pstar: T::lit(params.pstar),
            delta_min_sq: dmin * dmin,
            c: T::lit(params.c),
            alpha_inv,
            fac: T::one() - alpha_inv,
        }
    }
}

/// Intermediate quantities at one Gauss point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPointValues<T> {
    /// Ice height after clipping at zero.
    pub h: T,
    /// Concentration clamped to `[0, 1]`.
    pub a: T,
    /// Ice strength.
    pub p: T,
    /// Regularized deformation rate.
    pub delta: T,
    pub p_delta: T,
}

/// Evaluates the pointwise part of the rheology from raw Gauss-point values.
#[inline(always)]
pub fn gauss_point_values<T: Scalar>(
    k: &KernelConsts<T>,
    h_raw: T,
    a_raw: T,
    e11: T,
    e12: T,
    e22: T,
) -> GaussPointValues<T> {
    let h = h_raw.max(T::zero());
    let a = a_raw.max(T::zero()).min(T::one());
    let p = k.pstar * h * (-(k.c * (T::one() - a))).exp();
    let delta = (k.delta_min_sq
        + T::lit(1.25) * (e11 * e11 + e22 * e22)
        + T::lit(1.5) * e11 * e22
        + e12 * e12)
        .sqrt();
    GaussPointValues {
        h,
        a,
        p,
        delta,
        p_delta: p / delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_inputs() {
        let k = KernelConsts::<f64>::new(&VPParams::default());
        let v = gauss_point_values(&k, -0.5, 1.7, 0.0, 0.0, 0.0);
        assert_eq!(v.h, 0.0);
        assert_eq!(v.a, 1.0);
        assert_eq!(v.p, 0.0);
        assert_eq!(v.delta, 2e-9);

        let w = gauss_point_values(&k, 2.0, -3.0, 0.0, 0.0, 0.0);
        assert_eq!(w.a, 0.0);
        assert!((w.p - 27500.0 * 2.0 * (-20.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn delta_of_pure_shear() {
        let k = KernelConsts::<f64>::new(&VPParams::default());
        let v = gauss_point_values(&k, 1.0, 1.0, 0.0, 3e-6, 0.0);
        assert!((v.delta - (4e-18 + 9e-12f64).sqrt()).abs() < 1e-20);
        assert!((v.p_delta - 27500.0 / v.delta).abs() < 1e-6);
    }
}
