use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::scalar::Scalar;
use crate::special::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureScheme {
    /// Refine the worst panel until the error estimate meets the tolerance.
    AdaptivePanel,
    /// Integrate the initial panels once.
    FixedGaussLegendre,
}

/// Discretization of a radial wavenumber integral on [0, k_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Upper limit; `None` lets the caller derive it from the spectral envelope.
    pub k_max: Option<f64>,
    /// Minimum number of Gauss nodes across the initial panels.
    pub node_count: usize,
    pub scheme: QuadratureScheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Panel splits allowed beyond the initial partition.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            k_max: None,
            node_count: 256,
            scheme: QuadratureScheme::AdaptivePanel,
            abs_tol: 1e-15,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), SpectralError> {
        if let Some(k) = self.k_max {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SpectralError::Spec("k_max must be positive and finite"));
            }
        }
        if self.node_count < 64 {
            return Err(SpectralError::Spec("node_count must be at least 64"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(SpectralError::Spec("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    left: T,
    right: T,
    err: T,
}

fn make_panel<T: Scalar>(a: T, b: T, whole: T, f: &impl Fn(T) -> T) -> Panel<T> {
    let rule = GaussLegendre::order32();
    let m = (a + b) * T::of(0.5);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    Panel {
        a,
        b,
        left,
        right,
        err: (whole - left - right).abs(),
    }
}

/// ∫ f over the union of consecutive intervals given by `breaks`.
///
/// Each panel carries the two-half 32-point Gauss-Legendre sum as its value and
/// the difference from the single 32-point sum as its error. Panels are split
/// worst-first in a fixed order, so results are reproducible.
pub fn integrate_panels<T: Scalar>(
    breaks: &[T],
    f: &impl Fn(T) -> T,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>, SpectralError> {
    let rule = GaussLegendre::order32();
    let mut panels: Vec<Panel<T>> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| make_panel(w[0], w[1], rule.integrate(w[0], w[1], f), f))
        .collect();
    let eps = T::of(T::EPS);
    let mut splits = 0usize;
    loop {
        let mut value = T::zero();
        let mut err = T::zero();
        let mut mass = T::zero();
        let mut worst = 0usize;
        for (i, p) in panels.iter().enumerate() {
            value += p.left + p.right;
            err += p.err;
            mass += p.left.abs() + p.right.abs();
            if p.err > panels[worst].err {
                worst = i;
            }
        }
        let tol = T::of(spec.abs_tol).max(T::of(spec.rel_tol) * value.abs());
        let roundoff = T::of(50.0) * eps * mass;
        if err <= tol || err <= roundoff {
            return Ok(Estimate {
                value,
                error: err.max(roundoff),
                panels: panels.len(),
            });
        }
        if spec.scheme == QuadratureScheme::FixedGaussLegendre || splits >= spec.max_subdivisions {
            return Err(SpectralError::QuadratureFailure {
                estimate: err.f64(),
                tolerance: tol.f64(),
                panels: panels.len(),
            });
        }
        let p = &panels[worst];
        let (a, b, left, right) = (p.a, p.b, p.left, p.right);
        let m = (a + b) * T::of(0.5);
        if !(m > a && m < b) {
            // interval exhausted at working precision
            return Err(SpectralError::QuadratureFailure {
                estimate: err.f64(),
                tolerance: tol.f64(),
                panels: panels.len(),
            });
        }
        panels[worst] = make_panel(a, m, left, f);
        panels.push(make_panel(m, b, right, f));
        splits += 1;
    }
}
