//! Truncated Taylor arithmetic (degree 3) used to expand the overdamped
//! kernels around critical damping without cancellation.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Taylor coefficients `[f, f', f''/2, f'''/6]` of a function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet<T>(pub [T; 4]);

impl<T: Scalar> Jet<T> {
    pub fn constant(x: T) -> Self {
        Self([x, T::zero(), T::zero(), T::zero()])
    }

    /// The independent variable expanded at `x0`.
    pub fn variable(x0: T) -> Self {
        Self([x0, T::one(), T::zero(), T::zero()])
    }

    pub fn value(self) -> T {
        self.0[0]
    }

    pub fn scale(self, s: T) -> Self {
        Self(self.0.map(|c| c * s))
    }

    /// Nilpotent part (zero constant term).
    fn tail(self) -> Self {
        let mut t = self.0;
        t[0] = T::zero();
        Self(t)
    }

    /// Σ_n coef[n] u^n for nilpotent u, truncated at degree 3.
    fn series(u: Self, coef: [T; 4]) -> Self {
        let u2 = u * u;
        let u3 = u2 * u;
        let mut out = [T::zero(); 4];
        out[0] = coef[0];
        for i in 1..4 {
            out[i] = coef[1] * u.0[i] + coef[2] * u2.0[i] + coef[3] * u3.0[i];
        }
        Self(out)
    }

    pub fn exp(self) -> Self {
        let e = self.0[0].exp();
        let half = T::of(0.5);
        let sixth = T::of(1.0 / 6.0);
        Self::series(self.tail(), [e, e, e * half, e * sixth])
    }

    /// self^p for a positive leading coefficient.
    pub fn powf(self, p: T) -> Self {
        let a0 = self.0[0];
        let u = self.tail().scale(a0.recip());
        let one = T::one();
        let two = T::of(2.0);
        let c1 = p;
        let c2 = p * (p - one) / two;
        let c3 = c2 * (p - two) / T::of(3.0);
        Self::series(u, [one, c1, c2, c3]).scale(a0.powf(p))
    }

    pub fn recip(self) -> Self {
        self.powf(-T::one())
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = self.0;
        let b = o.0;
        Self([
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
        ])
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Self;
    fn add(self, o: T) -> Self {
        let mut c = self.0;
        c[0] += o;
        Self(c)
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, o: T) -> Self {
        self.scale(o)
    }
}

/// Below this value of δ = 2 τ_c ω_d the overdamped combination is expanded in δ.
pub(crate) const SERIES_DELTA: f64 = 1e-4;

/// Evaluates [(1+δ) H(1-δ) - (1-δ) H(1+δ)] / (2δ), the overdamped
/// slow/fast combination, where `h` maps the rate multiplier β to H(β).
///
/// For small δ the quotient is replaced by h₀ - h₁ + δ²(h₂ - h₃), with h_n the
/// Taylor coefficients of H at β = 1; the dropped terms are O(δ⁴).
pub(crate) fn overdamped_combination<T: Scalar>(delta: T, h: impl Fn(Jet<T>) -> Jet<T>) -> T {
    let one = T::one();
    if delta < T::of(SERIES_DELTA) {
        let c = h(Jet::variable(one)).0;
        c[0] - c[1] + delta * delta * (c[2] - c[3])
    } else {
        let bs = one - delta;
        let bf = one + delta;
        let hs = h(Jet::constant(bs)).value();
        let hf = h(Jet::constant(bf)).value();
        (bf * hs - bs * hf) / (delta + delta)
    }
}
