use crate::error::KernelError;
use crate::kernel::{check_lag, Dispersion, OuParams, SpaceTimeCovariance};
use crate::scalar::{c, Scalar};
use crate::special::cauchy_norm;

/// C(r, τ) of the Ornstein-Uhlenbeck kernels.
pub fn ou_kernel<T: Scalar>(p: &OuParams<T>, r: T, tau: T) -> Result<T, KernelError> {
    check_lag(r)?;
    Ok(ou_eval(p, r, tau.abs()))
}

fn ou_eval<T: Scalar>(p: &OuParams<T>, r: T, at: T) -> T {
    let decay = (-p.a() * at / p.tau_c()).exp();
    let w = p.beta() + p.scale() * at / p.tau_c();
    let d = p.dim() as f64;
    match p.dispersion() {
        Dispersion::Quadratic => {
            p.sigma0_sq() * decay * (-r * r / (c::<T>(4.0) * w)).exp()
                / (c::<T>(4.0) * T::PI() * w).powf(T::of(0.5 * d))
        }
        Dispersion::Linear => {
            p.sigma0_sq() * T::of(cauchy_norm(p.dim())) * w * decay
                / (r * r + w * w).powf(T::of(0.5 * (d + 1.0)))
        }
    }
}

impl<T: Scalar> SpaceTimeCovariance<T> for OuParams<T> {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn covariance(&self, r: T, tau: T) -> Result<T, KernelError> {
        ou_kernel(self, r, tau)
    }

    fn marginal_spatial(&self, r: T) -> T {
        let r = r.abs();
        let b = self.beta();
        let d = self.dim() as f64;
        match self.dispersion() {
            Dispersion::Quadratic => {
                self.sigma0_sq() * (-r * r / (c::<T>(4.0) * b)).exp()
                    / (c::<T>(4.0) * T::PI() * b).powf(T::of(0.5 * d))
            }
            Dispersion::Linear => {
                self.sigma0_sq() * T::of(cauchy_norm(self.dim())) * b
                    / (r * r + b * b).powf(T::of(0.5 * (d + 1.0)))
            }
        }
    }

    fn marginal_temporal(&self, tau: T) -> T {
        let at = tau.abs();
        let decay = (-self.a() * at / self.tau_c()).exp();
        let d = self.dim() as f64;
        match self.dispersion() {
            Dispersion::Quadratic => {
                let stretch = T::one() + self.scale() * at / (self.beta() * self.tau_c());
                self.sigma0_sq() * decay * stretch.powf(T::of(-0.5 * d))
                    / (c::<T>(4.0) * T::PI() * self.beta()).powf(T::of(0.5 * d))
            }
            Dispersion::Linear => {
                let w = self.beta() + self.scale() * at / self.tau_c();
                self.sigma0_sq() * T::of(cauchy_norm(self.dim())) * decay / w.powf(T::of(d))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_lag_values() {
        let q = OuParams::new(Dispersion::Quadratic, 2, 1.7, 0.8, 0.5, 0.4, 8.0).unwrap();
        assert!((ou_kernel(&q, 0.0, 0.0).unwrap() - 1.7 / (32.0 * PI)).abs() < 1e-16);
        let l = OuParams::new(Dispersion::Linear, 3, 1.7, 0.8, 0.5, 0.4, 8.0).unwrap();
        for r in [0.0, 1.0, 5.0] {
            let want = 1.7 * 8.0 / (PI * PI * (r * r + 64.0f64).powi(2));
            assert!((ou_kernel(&l, r, 0.0).unwrap() - want).abs() < 1e-15 * want);
        }
    }

    #[test]
    fn separable_when_scale_vanishes() {
        let q = OuParams::new(Dispersion::Quadratic, 2, 1.0, 0.8, 0.5, 0.0, 8.0).unwrap();
        for &(r, t) in &[(0.5, 0.3), (3.0, 2.0)] {
            let want = (-0.5 * t / 0.8f64).exp() * (-r * r / 32.0f64).exp() / (32.0 * PI);
            assert!((ou_kernel(&q, r, t).unwrap() - want).abs() < 1e-16);
        }
    }
}
