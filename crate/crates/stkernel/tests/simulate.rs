use stkernel::kernel::{Damping, Dispersion, KernelModel, LdhoParams, Regime, SpaceTimeCovariance};
use stkernel::simulate::{empirical_covariance, simulate_field, GridLag, GridSpec};

fn truth(nugget: f64) -> KernelModel<f64> {
    let p = LdhoParams::new(
        Dispersion::Quadratic,
        2,
        50.0,
        8.0,
        Damping::Damped {
            omega_d: 0.5,
            regime: Regime::Underdamped,
        },
        4.0,
        0.5,
    )
    .unwrap();
    KernelModel::ldho(p, nugget).unwrap()
}

fn grid(n: usize, nt: usize, seed: u64) -> GridSpec {
    GridSpec {
        spatial: vec![n, n],
        nt,
        ds: 1.0,
        dt: 1.0,
        seed,
    }
}

#[test]
fn sample_variance_and_lag_correlation() {
    let m = truth(0.1);
    let f = simulate_field(&m, &grid(64, 128, 7)).unwrap();
    assert!(f.warning.is_none(), "{:?}", f.warning);
    assert!(f.imag_ratio < 1e-10);
    let c = empirical_covariance(
        &f,
        &[
            GridLag {
                t: 0,
                s: vec![0, 0],
            },
            GridLag {
                t: 0,
                s: vec![1, 0],
            },
        ],
    )
    .unwrap();
    let sill = m.sill();
    assert!((c[0] / sill - 1.0).abs() < 0.1, "{} vs {sill}", c[0]);
    let want = m.covariance(1.0, 0.0).unwrap() / m.variance();
    let got = c[1] / c[0] * sill / m.variance();
    assert!((got - want).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn same_seed_same_field() {
    let m = truth(0.1);
    let a = simulate_field(&m, &grid(16, 32, 3)).unwrap();
    let b = simulate_field(&m, &grid(16, 32, 3)).unwrap();
    let c = simulate_field(&m, &grid(16, 32, 4)).unwrap();
    let bits = |f: &stkernel::simulate::FieldRealization<f64>| {
        f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn lag_out_of_range() {
    let f = simulate_field(&truth(0.0), &grid(8, 8, 1)).unwrap();
    assert!(empirical_covariance(
        &f,
        &[GridLag {
            t: 8,
            s: vec![0, 0]
        }]
    )
    .is_err());
    assert!(empirical_covariance(&f, &[GridLag { t: 0, s: vec![0] }]).is_err());
}

#[test]
fn coarse_grid_warns() {
    let mut g = grid(16, 16, 1);
    g.ds = 6.0;
    let f = simulate_field(&truth(0.0), &g).unwrap();
    assert!(f.warning.is_some());
}
