//! Named hyperparameter sets used for figures and self-checks.
//!
//! Amplitudes are c0 = 1 (oscillator) and σ₀² = 1 (O-U); nuggets are zero;
//! d = 2 throughout.

use std::f64::consts::PI;

use crate::kernel::{Damping, Dispersion, KernelModel, LdhoParams, OuParams, Regime};

pub const NAMES: &[&str] = &[
    "fig1", "fig2", "fig3", "lin1", "lin2", "ou1", "ou2", "s2", "s2b",
];

fn ldho(
    dispersion: Dispersion,
    omega_d: f64,
    regime: Regime,
    tau_c: f64,
    epsilon: f64,
    s: f64,
) -> KernelModel<f64> {
    let p = LdhoParams::new(
        dispersion,
        2,
        1.0,
        tau_c,
        Damping::Damped { omega_d, regime },
        epsilon,
        s,
    )
    .expect("preset parameters are valid");
    KernelModel::ldho(p, 0.0).expect("zero nugget")
}

fn ou(dispersion: Dispersion) -> KernelModel<f64> {
    let p =
        OuParams::new(dispersion, 2, 1.0, 0.8, 0.5, 0.4, 8.0).expect("preset parameters are valid");
    KernelModel::ou(p, 0.0).expect("zero nugget")
}

/// Model for a preset name, `None` when unknown.
///
/// - `fig1`: quadratic, underdamped, ω_d = 3π/2, τ_c = 3, b = 0.4, ε = 1
/// - `fig2`: quadratic, overdamped, ω_d = π/10, τ_c = 0.8, b = 0.4, ε = 8
/// - `fig3`: as `fig1` with ε = 3
/// - `lin1`, `lin2`: linear dispersion with the `fig1`, `fig2` values (ξ = 0.4)
/// - `ou1`, `ou2`: O-U, quadratic and linear, τ_c = 0.8, scale 0.4, a = 0.5, β = 8
/// - `s2`, `s2b`: quadratic, underdamped, ω_d = 3π/2, τ_c = 2, ε = 3, b = 0.4 and b = 4
pub fn preset(name: &str) -> Option<KernelModel<f64>> {
    use Dispersion::{Linear, Quadratic};
    use Regime::{Overdamped, Underdamped};
    Some(match name {
        "fig1" => ldho(Quadratic, 1.5 * PI, Underdamped, 3.0, 1.0, 0.4),
        "fig2" => ldho(Quadratic, 0.1 * PI, Overdamped, 0.8, 8.0, 0.4),
        "fig3" => ldho(Quadratic, 1.5 * PI, Underdamped, 3.0, 3.0, 0.4),
        "lin1" => ldho(Linear, 1.5 * PI, Underdamped, 3.0, 1.0, 0.4),
        "lin2" => ldho(Linear, 0.1 * PI, Overdamped, 0.8, 8.0, 0.4),
        "ou1" => ou(Quadratic),
        "ou2" => ou(Linear),
        "s2" => ldho(Quadratic, 1.5 * PI, Underdamped, 2.0, 3.0, 0.4),
        "s2b" => ldho(Quadratic, 1.5 * PI, Underdamped, 2.0, 3.0, 4.0),
        _ => return None,
    })
}
