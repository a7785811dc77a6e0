use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use stkernel::estimate::{
    fit_pipeline, model_variogram, wls_objective, EmpiricalVariogram, GridVariograms, LagBins,
    PipelineSpec, VariogramBin, VariogramKind, VariogramSource,
};
use stkernel::kernel::{
    ldho_kernel, vlrt_kernel, Damping, Dispersion, KernelModel, LdhoParams, Regime,
    SpaceTimeCovariance,
};
use stkernel::presets::{preset, NAMES};
use stkernel::simulate::{
    empirical_covariance, simulate_field, FieldRealization, GridLag, GridSpec,
};
use stkernel::spectral::{hankel_ift_oracle, temporal_fourier_mode, QuadratureSpec, SpectralModel};

fn lag_grid() -> Vec<(f64, f64)> {
    (0..10)
        .flat_map(|i| (0..10).map(move |j| (0.25 * i as f64, 0.3 * j as f64)))
        .collect()
}

#[test]
fn regimes_meet_at_critical_damping() {
    for disp in [Dispersion::Quadratic, Dispersion::Linear] {
        let tau_c = 1.3;
        let crit = LdhoParams::new(
            disp,
            2,
            1.0,
            tau_c,
            Damping::Damped {
                omega_d: 0.0,
                regime: Regime::Critical,
            },
            0.7,
            0.9,
        )
        .unwrap();
        for sign in [-1.0, 1.0] {
            let w0 = 0.5 * (1.0 + sign * 1e-6) / tau_c;
            let p = LdhoParams::new(disp, 2, 1.0, tau_c, Damping::Natural(w0), 0.7, 0.9).unwrap();
            let expected = if sign > 0.0 {
                Regime::Underdamped
            } else {
                Regime::Overdamped
            };
            assert_eq!(p.regime(), expected);
            for (r, t) in lag_grid() {
                let a = ldho_kernel(&p, r, t).unwrap();
                let b = ldho_kernel(&crit, r, t).unwrap();
                assert!(
                    (a - b).abs() <= 1e-4 * b.abs(),
                    "{disp:?} {expected:?} at ({r}, {t}): {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn long_correlation_time_approaches_vlrt() {
    let w0 = 2.0;
    let mut prev = f64::INFINITY;
    for k in 2..=6 {
        let p = LdhoParams::new(
            Dispersion::Quadratic,
            2,
            1.0,
            10f64.powi(k),
            Damping::Natural(w0),
            1.5,
            0.4,
        )
        .unwrap();
        let dist = lag_grid()
            .into_iter()
            .map(|(r, t)| (ldho_kernel(&p, r, t).unwrap() - vlrt_kernel(&p, r, t).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(dist < prev, "k = {k}: {dist} !< {prev}");
        prev = dist;
    }
}

#[test]
fn spectral_density_non_negative_on_wide_grid() {
    let grid: Vec<f64> = (0..100)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0))
        .collect();
    for name in NAMES {
        let m = preset(name).unwrap();
        for &k in &grid {
            for &w in &grid {
                let v = SpectralModel::<f64>::density(&m, k, w);
                assert!(v >= 0.0, "{name}: C~({k}, {w}) = {v}");
            }
        }
    }
}

#[test]
fn inverse_transform_of_modes_reproduces_kernel() {
    for name in ["fig1", "fig2", "lin1", "lin2"] {
        let m = preset(name).unwrap();
        let stkernel::BaseKernel::Ldho(p) = m.base() else {
            unreachable!()
        };
        let q = QuadratureSpec {
            k_max: Some(SpectralModel::<f64>::k_max(p)),
            ..Default::default()
        };
        for (r, t) in [(0.0, 0.0), (0.5, 0.3), (1.2, 1.1), (2.0, 0.05)] {
            let est =
                hankel_ift_oracle(|k, tau| temporal_fourier_mode(p, k, tau), 2, r, t, &q).unwrap();
            let c = ldho_kernel(p, r, t).unwrap();
            assert!(
                (est.value - c).abs() <= 1e-9 * m.variance(),
                "{name} ({r}, {t}): {} vs {c}",
                est.value
            );
        }
    }
}

fn fidelity_model() -> KernelModel<f64> {
    let p = LdhoParams::new(
        Dispersion::Quadratic,
        2,
        10.0,
        2.0,
        Damping::Damped {
            omega_d: 1.0,
            regime: Regime::Underdamped,
        },
        1.0,
        0.5,
    )
    .unwrap();
    KernelModel::ldho(p, 0.05).unwrap()
}

/// Expected divide-by-N covariance at a grid lag: periodized kernel times
/// the fraction of nodes that have a partner at that lag.
fn expected_covariance(m: &KernelModel<f64>, g: &GridSpec, lag: &GridLag) -> f64 {
    let (n, nt) = (g.spatial[0] as isize, g.nt as isize);
    let mut c = 0.0;
    for it in -1..=1 {
        for ix in -1..=1 {
            for iy in -1..=1 {
                let dx = (lag.s[0] + ix * n) as f64 * g.ds;
                let dy = (lag.s[1] + iy * n) as f64 * g.ds;
                let dt = (lag.t + it * nt) as f64 * g.dt;
                c += m.covariance(dx.hypot(dy), dt).unwrap();
            }
        }
    }
    if lag.t == 0 && lag.s.iter().all(|&x| x == 0) {
        c += m.nugget();
    }
    let frac =
        (n - lag.s[0].abs()) as f64 * (n - lag.s[1].abs()) as f64 * (nt - lag.t.abs()) as f64
            / (n * n * nt) as f64;
    frac * c
}

#[test]
fn simulated_covariance_matches_kernel() {
    let m = fidelity_model();
    let lags: Vec<GridLag> = [
        (0, [0, 0]),
        (0, [1, 0]),
        (0, [0, 2]),
        (1, [0, 0]),
        (2, [0, 0]),
        (3, [1, 1]),
        (1, [1, 0]),
        (4, [0, 0]),
        (6, [0, 0]),
        (2, [2, 1]),
    ]
    .iter()
    .map(|&(t, s)| GridLag { t, s: s.to_vec() })
    .collect();
    let seeds = 20;
    let mut samples = vec![Vec::new(); lags.len()];
    let mut grid = GridSpec {
        spatial: vec![32, 32],
        nt: 64,
        ds: 0.5,
        dt: 0.25,
        seed: 0,
    };
    for seed in 0..seeds {
        grid.seed = seed;
        let f = simulate_field(&m, &grid).unwrap();
        assert!(f.warning.is_none(), "{:?}", f.warning);
        for (i, c) in empirical_covariance(&f, &lags)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            samples[i].push(c);
        }
    }
    for (lag, xs) in lags.iter().zip(&samples) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let se = sd / n.sqrt();
        let want = expected_covariance(&m, &grid, lag);
        assert!(
            (mean - want).abs() <= 4.0 * se,
            "{lag:?}: mean {mean}, expected {want}, se {se}"
        );
    }
}

#[test]
fn white_noise_variogram_is_unbiased() {
    let sigma2: f64 = 0.7;
    let grid = GridSpec {
        spatial: vec![16, 16],
        nt: 32,
        ds: 1.0,
        dt: 1.0,
        seed: 0,
    };
    let mut means = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
        let values = (0..grid.len())
            .map(|_| sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let f = FieldRealization {
            grid: grid.clone(),
            values,
            model_json: String::new(),
            warning: None,
            imag_ratio: 0.0,
        };
        let gv = GridVariograms::new(&f);
        let s = gv.spatial_marginal(&LagBins::regular(1.0, 4)).unwrap();
        let t = gv.temporal_marginal(&LagBins::regular(1.0, 4)).unwrap();
        let all: Vec<f64> = s.bins.iter().chain(&t.bins).map(|b| b.gamma).collect();
        means.push(all);
    }
    let nb = means[0].len();
    for j in 0..nb {
        let xs: Vec<f64> = means.iter().map(|m| m[j]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        assert!(
            (mean - sigma2).abs() <= 3.0 * se,
            "bin {j}: {mean} vs {sigma2} (se {se})"
        );
    }
}

#[test]
fn true_parameters_minimize_noise_free_objective() {
    let m = preset("s2").unwrap().with_nugget(0.002).unwrap();
    let bins: Vec<VariogramBin> = (1..=10)
        .flat_map(|i| (0..=8).map(move |j| (0.2 * i as f64, 0.15 * j as f64)))
        .map(|(r, tau)| VariogramBin {
            r: Some(r),
            tau: Some(tau),
            gamma: model_variogram(&m, r, tau).unwrap(),
            n: 50 + (r * 10.0) as u64,
        })
        .collect();
    let v = EmpiricalVariogram {
        kind: VariogramKind::SpaceTime,
        bins,
        tolerance: 0.1,
        tau_tolerance: Some(0.075),
        empty_bins: 0,
    };
    let at_truth = wls_objective(&m, &v).unwrap().value;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (layout, x0) = stkernel::estimate::ParamLayout::of_model(&m).unwrap();
    for _ in 0..1000 {
        let x: Vec<f64> = x0.iter().map(|v| v * rng.gen_range(0.1f64..10.0)).collect();
        let Ok(probe) = layout.build(&x) else {
            continue;
        };
        if let Ok(w) = wls_objective(&probe, &v) {
            assert!(w.value >= at_truth, "{x:?}: {} < {at_truth}", w.value);
        }
    }
}

#[test]
fn joint_stage_never_worsens_marginal_fit() {
    let p = LdhoParams::new(
        Dispersion::Quadratic,
        2,
        20.0,
        4.0,
        Damping::Damped {
            omega_d: 0.6,
            regime: Regime::Underdamped,
        },
        2.0,
        0.8,
    )
    .unwrap();
    let m = KernelModel::ldho(p, 0.05).unwrap();
    let f = simulate_field(
        &m,
        &GridSpec {
            spatial: vec![32, 32],
            nt: 64,
            ds: 1.0,
            dt: 1.0,
            seed: 9,
        },
    )
    .unwrap();
    let spec = PipelineSpec {
        r_bins: 10,
        tau_bins: 20,
        ..Default::default()
    };
    let res = fit_pipeline(&GridVariograms::new(&f), &spec).unwrap();
    let theta0 = res.marginal.result.kernel_model().unwrap();
    let j0 = wls_objective(&theta0, &res.space_time).unwrap().value;
    assert_eq!(j0, res.joint_objective_theta0);
    assert!(res.full.objective <= j0);
}
