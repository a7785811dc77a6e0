use crate::error::KernelError;
use crate::jet::{overdamped_combination, Jet};
use crate::kernel::{
    check_lag, Dispersion, InteractionFunctions, LdhoParams, Regime, SpaceTimeCovariance,
    CRITICAL_BAND,
};
use crate::scalar::{c, Scalar};
use crate::special::{cauchy_norm, sinc};

pub fn classify_regime<T: Scalar>(p: &LdhoParams<T>) -> Regime {
    let x = (p.omega0() * p.tau_c()).f64() - 0.5;
    if x.abs() <= CRITICAL_BAND {
        Regime::Critical
    } else if x > 0.0 {
        Regime::Underdamped
    } else {
        Regime::Overdamped
    }
}

/// |ω_d|; zero inside the critical band.
pub fn damped_frequency<T: Scalar>(p: &LdhoParams<T>) -> T {
    match classify_regime(p) {
        Regime::Critical => T::zero(),
        _ => p.omega_d_raw(),
    }
}

/// (τ_s, τ_f) = 2τ_c/(1 ∓ 2τ_c|ω_d|).
pub fn fast_slow_times<T: Scalar>(p: &LdhoParams<T>) -> Result<(T, T), KernelError> {
    let regime = classify_regime(p);
    if regime != Regime::Overdamped {
        return Err(KernelError::Regime {
            required: "overdamped",
            actual: regime.name(),
        });
    }
    let two_tc = p.tau_c() + p.tau_c();
    let delta = two_tc * p.omega_d_raw();
    Ok((two_tc / (T::one() - delta), two_tc / (T::one() + delta)))
}

/// Unit-variance temporal kernel of a damped oscillator.
pub(crate) fn temporal_shape<T: Scalar>(regime: Regime, tau_c: T, omega_d: T, tau: T) -> T {
    let at = tau.abs();
    let x = at / (tau_c + tau_c);
    match regime {
        Regime::Underdamped if omega_d > T::zero() => {
            let ph = omega_d * at;
            (-x).exp() * (ph.cos() + x * T::of(sinc(ph.f64())))
        }
        Regime::Underdamped | Regime::Critical => (-x).exp() * (T::one() + x),
        Regime::Overdamped => {
            let delta = (tau_c + tau_c) * omega_d;
            overdamped_combination(delta, |b: Jet<T>| (b * (-x)).exp())
        }
    }
}

/// Purely temporal covariance, C(0) = c0.
pub fn temporal_kernel<T: Scalar>(p: &LdhoParams<T>, tau: T) -> T {
    p.c0() * temporal_shape(classify_regime(p), p.tau_c(), p.omega_d_raw(), tau)
}

pub fn interaction_functions_quadratic<T: Scalar>(
    p: &LdhoParams<T>,
    tau: T,
) -> Result<InteractionFunctions<T>, KernelError> {
    if p.dispersion() != Dispersion::Quadratic {
        return Err(KernelError::Regime {
            required: "quadratic dispersion",
            actual: "linear dispersion",
        });
    }
    let regime = classify_regime(p);
    if regime != Regime::Underdamped {
        return Err(KernelError::Regime {
            required: "underdamped",
            actual: regime.name(),
        });
    }
    Ok(interaction_quadratic(p, p.omega_d_raw(), tau.abs()))
}

fn interaction_quadratic<T: Scalar>(p: &LdhoParams<T>, wd: T, at: T) -> InteractionFunctions<T> {
    let tc = p.tau_c();
    let b = p.interaction();
    let eps = p.epsilon();
    let ar = b * at / (tc + tc) + eps;
    let ai = b * wd * at;
    let m2 = ar * ar + ai * ai;
    let four = c::<T>(4.0);
    InteractionFunctions {
        kappa_sq: ai / (four * m2),
        lambda_sq: ar / (four * m2),
        phi: (-(c::<T>(2.0) * b * wd * at * tc)).atan2(b * at + c::<T>(2.0) * eps * tc),
    }
}

/// C(r, τ) for the regime returned by [`classify_regime`].
pub fn ldho_kernel<T: Scalar>(p: &LdhoParams<T>, r: T, tau: T) -> Result<T, KernelError> {
    ldho_kernel_in_regime(p, classify_regime(p), r, tau)
}

/// C(r, τ) from the closed form of a chosen regime, using the stored |ω_d|.
///
/// Lets the overdamped expression be evaluated arbitrarily close to critical
/// damping, where [`classify_regime`] would already select the critical form.
pub fn ldho_kernel_in_regime<T: Scalar>(
    p: &LdhoParams<T>,
    regime: Regime,
    r: T,
    tau: T,
) -> Result<T, KernelError> {
    check_lag(r)?;
    let at = tau.abs();
    let wd = p.omega_d_raw();
    let regime = match regime {
        Regime::Underdamped if wd <= T::zero() => Regime::Critical,
        other => other,
    };
    Ok(match (p.dispersion(), regime) {
        (Dispersion::Quadratic, Regime::Underdamped) => quadratic_underdamped(p, wd, r, at),
        (Dispersion::Quadratic, Regime::Overdamped) => quadratic_overdamped(p, wd, r, at),
        (Dispersion::Quadratic, Regime::Critical) => quadratic_critical(p, r, at),
        (Dispersion::Linear, Regime::Underdamped) => linear_underdamped(p, wd, r, at),
        (Dispersion::Linear, Regime::Overdamped) => linear_overdamped(p, wd, r, at),
        (Dispersion::Linear, Regime::Critical) => linear_critical(p, r, at),
    })
}

fn half_dim<T: Scalar>(p: &LdhoParams<T>) -> T {
    T::of(p.dim() as f64 * 0.5)
}

fn quadratic_underdamped<T: Scalar>(p: &LdhoParams<T>, wd: T, r: T, at: T) -> T {
    let tc = p.tau_c();
    let f = interaction_quadratic(p, wd, at);
    let ar = p.interaction() * at / (tc + tc) + p.epsilon();
    let ai = p.interaction() * wd * at;
    let m2 = ar * ar + ai * ai;
    let hd = half_dim(p);
    let four_pi = c::<T>(4.0) * T::PI();
    let envelope = (-f.lambda_sq * r * r).exp() / (four_pi.powf(hd) * m2.powf(hd * c(0.5)));
    let theta = wd * at - f.kappa_sq * r * r - hd * f.phi;
    let q = (c::<T>(2.0) * wd * tc).recip();
    p.c0() * (-at / (tc + tc)).exp() * envelope * (theta.cos() + q * theta.sin())
}

fn quadratic_overdamped<T: Scalar>(p: &LdhoParams<T>, wd: T, r: T, at: T) -> T {
    let tc = p.tau_c();
    let x = at / (tc + tc);
    let slope = p.interaction() * x;
    let eps = p.epsilon();
    let hd = half_dim(p);
    let r2q = r * r * c(0.25);
    let four_pi = c::<T>(4.0) * T::PI();
    let h = |beta: Jet<T>| {
        let width = beta * slope + eps;
        (beta * (-x)).exp() * (width.recip() * (-r2q)).exp() * (width * four_pi).powf(-hd)
    };
    p.c0() * overdamped_combination((tc + tc) * wd, h)
}

fn quadratic_critical<T: Scalar>(p: &LdhoParams<T>, r: T, at: T) -> T {
    let tc = p.tau_c();
    let x = at / (tc + tc);
    let bx = p.interaction() * x;
    let a = bx + p.epsilon();
    let hd = half_dim(p);
    let g = (-r * r / (c::<T>(4.0) * a)).exp() / (c::<T>(4.0) * T::PI() * a).powf(hd);
    let laplacian = hd / a - r * r / (c::<T>(4.0) * a * a);
    p.c0() * (-x).exp() * g * (T::one() + x + bx * laplacian)
}

fn linear_underdamped<T: Scalar>(p: &LdhoParams<T>, wd: T, r: T, at: T) -> T {
    let tc = p.tau_c();
    let x = at / (tc + tc);
    let ar = p.interaction() * x + p.epsilon();
    let ai = p.interaction() * at * wd;
    let dp1 = T::of(p.dim() as f64 + 1.0);
    let k = T::of(cauchy_norm(p.dim()));
    let re = ar * ar - ai * ai + r * r;
    let im = c::<T>(2.0) * ar * ai;
    let g0 = k * (ar * ar + ai * ai).sqrt() / (re * re + im * im).powf(dp1 * c(0.25));
    let gamma = im.atan2(re);
    let phi = ai.atan2(ar);
    let theta = wd * at + dp1 * gamma * c(0.5) - phi;
    let q = (c::<T>(2.0) * wd * tc).recip();
    p.c0() * (-x).exp() * g0 * (theta.cos() + q * theta.sin())
}

fn linear_overdamped<T: Scalar>(p: &LdhoParams<T>, wd: T, r: T, at: T) -> T {
    let tc = p.tau_c();
    let x = at / (tc + tc);
    let slope = p.interaction() * x;
    let eps = p.epsilon();
    let half_dp1 = T::of((p.dim() as f64 + 1.0) * 0.5);
    let k = T::of(cauchy_norm(p.dim()));
    let h = |beta: Jet<T>| {
        let a = beta * slope + eps;
        (beta * (-x)).exp() * a * (a * a + r * r).powf(-half_dp1)
    };
    p.c0() * k * overdamped_combination((tc + tc) * wd, h)
}

fn linear_critical<T: Scalar>(p: &LdhoParams<T>, r: T, at: T) -> T {
    let tc = p.tau_c();
    let x = at / (tc + tc);
    let xx = p.interaction() * x;
    let a = xx + p.epsilon();
    let d = T::of(p.dim() as f64);
    let k = T::of(cauchy_norm(p.dim()));
    let s = a * a + r * r;
    let half_dp1 = (d + T::one()) * c(0.5);
    let c1 = k * a / s.powf(half_dp1);
    let c2 = k * (d * a * a - r * r) / s.powf(half_dp1 + T::one());
    p.c0() * (-x).exp() * ((T::one() + x) * c1 + xx * c2)
}

/// τ_c → ∞ limit of the quadratic underdamped kernel at fixed ω₀.
pub fn vlrt_kernel<T: Scalar>(p: &LdhoParams<T>, r: T, tau: T) -> Result<T, KernelError> {
    check_lag(r)?;
    if p.dispersion() != Dispersion::Quadratic {
        return Err(KernelError::Regime {
            required: "quadratic dispersion",
            actual: "linear dispersion",
        });
    }
    let at = tau.abs();
    let w0 = p.omega0();
    let eps = p.epsilon();
    let bwt = p.interaction() * w0 * at;
    let m2 = eps * eps + bwt * bwt;
    let four = c::<T>(4.0);
    let kappa0 = bwt / (four * m2);
    let lambda0 = eps / (four * m2);
    let phi0 = (-bwt / eps).atan();
    let hd = half_dim(p);
    let theta = w0 * at - kappa0 * r * r - hd * phi0;
    Ok(p.c0() * (-lambda0 * r * r).exp() * theta.cos()
        / ((four * T::PI()).powf(hd) * m2.powf(hd * c(0.5))))
}

impl<T: Scalar> SpaceTimeCovariance<T> for LdhoParams<T> {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn covariance(&self, r: T, tau: T) -> Result<T, KernelError> {
        ldho_kernel(self, r, tau)
    }

    fn marginal_spatial(&self, r: T) -> T {
        let r = r.abs();
        let eps = self.epsilon();
        match self.dispersion() {
            Dispersion::Quadratic => {
                self.c0() * (-r * r / (c::<T>(4.0) * eps)).exp()
                    / (c::<T>(4.0) * T::PI() * eps).powf(half_dim(self))
            }
            Dispersion::Linear => {
                let half_dp1 = T::of((self.dim() as f64 + 1.0) * 0.5);
                self.c0() * T::of(cauchy_norm(self.dim())) * eps
                    / (eps * eps + r * r).powf(half_dp1)
            }
        }
    }

    fn marginal_temporal(&self, tau: T) -> T {
        let regime = match classify_regime(self) {
            Regime::Underdamped if self.omega_d_raw() <= T::zero() => Regime::Critical,
            other => other,
        };
        let at = tau.abs();
        let wd = self.omega_d_raw();
        let z = T::zero();
        match (self.dispersion(), regime) {
            (Dispersion::Quadratic, Regime::Underdamped) => quadratic_underdamped(self, wd, z, at),
            (Dispersion::Quadratic, Regime::Overdamped) => quadratic_overdamped(self, wd, z, at),
            (Dispersion::Quadratic, Regime::Critical) => quadratic_critical(self, z, at),
            (Dispersion::Linear, Regime::Underdamped) => linear_underdamped(self, wd, z, at),
            (Dispersion::Linear, Regime::Overdamped) => linear_overdamped(self, wd, z, at),
            (Dispersion::Linear, Regime::Critical) => linear_critical(self, z, at),
        }
    }
}
