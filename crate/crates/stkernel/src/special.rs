//! Bessel functions of the orders needed by radial Fourier transforms in one to
//! five dimensions, gamma at half-integers, and Gauss-Legendre rules.
//!
//! Integer orders use the fdlibm rational/asymptotic split (`libm::j0`,
//! `libm::j1`); half-integer orders use their elementary closed forms.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::OnceLock;

use crate::scalar::Scalar;

/// Order ν of J_ν. The radial transform in dimension d uses ν = d/2 - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    MinusHalf,
    Zero,
    Half,
    One,
    ThreeHalves,
}

impl BesselOrder {
    /// The order ν = d/2 - 1 for spatial dimension `d` in 1..=5.
    pub fn for_dim(d: usize) -> Option<Self> {
        match d {
            1 => Some(Self::MinusHalf),
            2 => Some(Self::Zero),
            3 => Some(Self::Half),
            4 => Some(Self::One),
            5 => Some(Self::ThreeHalves),
            _ => None,
        }
    }

    pub fn nu(self) -> f64 {
        match self {
            Self::MinusHalf => -0.5,
            Self::Zero => 0.0,
            Self::Half => 0.5,
            Self::One => 1.0,
            Self::ThreeHalves => 1.5,
        }
    }
}

/// J_ν(x) for x ≥ 0.
pub fn bessel_j<T: Scalar>(order: BesselOrder, x: T) -> T {
    T::of(bessel_j_f64(order, x.f64()))
}

fn bessel_j_f64(order: BesselOrder, x: f64) -> f64 {
    match order {
        BesselOrder::Zero => libm::j0(x),
        BesselOrder::One => libm::j1(x),
        BesselOrder::MinusHalf => (FRAC_2_PI / x).sqrt() * x.cos(),
        BesselOrder::Half => {
            if x == 0.0 {
                0.0
            } else {
                (FRAC_2_PI / x).sqrt() * x.sin()
            }
        }
        BesselOrder::ThreeHalves => {
            if x == 0.0 {
                0.0
            } else {
                x.powf(1.5) * reduced_bessel_f64(order, x)
            }
        }
    }
}

/// x^{-ν} J_ν(x), which is entire in x and equals 1/(2^ν Γ(ν+1)) at the origin.
pub fn reduced_bessel<T: Scalar>(order: BesselOrder, x: T) -> T {
    T::of(reduced_bessel_f64(order, x.f64()))
}

pub(crate) fn reduced_bessel_f64(order: BesselOrder, x: f64) -> f64 {
    let s = FRAC_2_PI.sqrt();
    match order {
        BesselOrder::MinusHalf => s * x.cos(),
        BesselOrder::Zero => libm::j0(x),
        BesselOrder::Half => s * sinc(x),
        BesselOrder::One => {
            if x.abs() < 1e-3 {
                let x2 = x * x;
                0.5 - x2 / 16.0 + x2 * x2 / 384.0
            } else {
                libm::j1(x) / x
            }
        }
        BesselOrder::ThreeHalves => {
            // (sin x - x cos x)/x³ with its Taylor series near the origin
            if x.abs() < 1.0 {
                let x2 = x * x;
                let mut term_pow = 1.0;
                let mut fact = 6.0; // (2n+1)! for n = 1
                let mut sum = 0.0;
                for n in 1..=12u32 {
                    let nf = n as f64;
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    sum += sign * 2.0 * nf * term_pow / fact;
                    term_pow *= x2;
                    fact *= (2.0 * nf + 2.0) * (2.0 * nf + 3.0);
                }
                s * sum
            } else {
                s * (x.sin() - x * x.cos()) / (x * x * x)
            }
        }
    }
}

/// sin(x)/x.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// The n-th positive zero of J_ν (n ≥ 1).
pub fn bessel_zero(order: BesselOrder, n: usize) -> f64 {
    assert!(n >= 1, "zeros are counted from 1");
    let nf = n as f64;
    match order {
        BesselOrder::MinusHalf => (nf - 0.5) * PI,
        BesselOrder::Half => nf * PI,
        _ => {
            let nu = order.nu();
            let mu = 4.0 * nu * nu;
            let beta = (nf + 0.5 * nu - 0.25) * PI;
            let e = 8.0 * beta;
            let mut x =
                beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
            for _ in 0..6 {
                let (f, df) = match order {
                    BesselOrder::Zero => (libm::j0(x), -libm::j1(x)),
                    BesselOrder::One => {
                        let j1 = libm::j1(x);
                        (j1, libm::j0(x) - j1 / x)
                    }
                    _ => {
                        // zeros of sin x - x cos x
                        (x.sin() - x * x.cos(), x * x.sin())
                    }
                };
                let step = f / df;
                x -= step;
                if step.abs() <= 1e-15 * x {
                    break;
                }
            }
            x
        }
    }
}

/// Γ(n/2) for a positive integer n, by exact recursion from Γ(1/2) and Γ(1).
pub fn gamma_half(n: u32) -> f64 {
    assert!(n >= 1, "gamma_half needs a positive argument");
    let (mut g, mut a) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = n as f64 / 2.0;
    while a < target {
        g *= a;
        a += 1.0;
    }
    g
}

/// Γ((d+1)/2)/π^{(d+1)/2}, the normalization of the radial transform of e^{-ak}.
pub fn cauchy_norm(d: usize) -> f64 {
    gamma_half(d as u32 + 1) / PI.powf(0.5 * (d as f64 + 1.0))
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(0.5 * d as f64) / gamma_half(d as u32)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached 32-point rule.
    pub fn order32() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(32))
    }

    /// Cached 16-point rule.
    pub fn order16() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(16))
    }

    /// ∫_a^b f.
    pub fn integrate<T: Scalar>(&self, a: T, b: T, f: &impl Fn(T) -> T) -> T {
        let half = (b - a) * T::of(0.5);
        let mid = (b + a) * T::of(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += T::of(*w) * f(mid + half * T::of(*x));
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
