use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use stkernel::estimate::{fit_pipeline, GridVariograms, LagBins, PipelineSpec, VariogramSource};
use stkernel::gp::{
    predict as gp_predict, read_points_csv, write_predictions_csv, SpaceTimeDataset,
};
use stkernel::io::{fmt_f64, to_json, write_csv};
use stkernel::kernel::interaction_ratio;
use stkernel::presets::{preset, NAMES};
use stkernel::simulate::{simulate_field, summary, FieldRealization, GridSpec};
use stkernel::{KernelModel, SpaceTimeCovariance};

use crate::checks::{self, Tolerances};
use crate::error::CliError;
use crate::{
    ChecksArgs, Cli, EvalArgs, FigureArg, FitArgs, InputArgs, PredictArgs, SimulateArgs,
    VariogramArgs,
};

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn create(cli: &Cli, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = cli.out.join(name);
    let f =
        File::create(&path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(f)))
}

fn write_text(cli: &Cli, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(cli, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn preset_model(name: &str) -> Result<KernelModel<f64>, CliError> {
    preset(name).ok_or_else(|| {
        CliError::config(format!(
            "unknown figure preset `{name}`; known: {}",
            NAMES.join(", ")
        ))
    })
}

/// The model from `--model` or `--figure`; exactly one must be given.
fn load_model(cli: &Cli, fig: &FigureArg) -> Result<KernelModel<f64>, CliError> {
    match (&cli.model, &fig.figure) {
        (Some(_), Some(_)) => Err(CliError::config(
            "give either --model or --figure, not both",
        )),
        (Some(path), None) => KernelModel::from_json(&read_text(path)?)
            .map_err(|e| CliError::from(e).context(path.display())),
        (None, Some(name)) => preset_model(name),
        (None, None) => Err(CliError::config(
            "a model is required: pass --model or --figure",
        )),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(CliError::config(format!(
            "invalid range [{lo}, {hi}] with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

pub fn eval(cli: &Cli, a: &EvalArgs) -> Result<(), CliError> {
    let m = load_model(cli, &a.figure)?;
    if a.r_min < 0.0 {
        return Err(CliError::config("--r-min must be non-negative"));
    }
    let rs = linspace(a.r_min, a.r_max, a.r_count)?;
    let taus = linspace(a.tau_min, a.tau_max, a.tau_count)?;
    let c00 = m.variance();
    let header: Vec<String> = ["r", "tau", "C", "C_norm", "Cs", "Ct", "Qint"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::with_capacity(rs.len() * taus.len());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &r in &rs {
        for &tau in &taus {
            let c = m.covariance(r, tau)?;
            let norm = c / c00;
            // Q_int is undefined where a marginal vanishes.
            let q = interaction_ratio(&m, r, tau).unwrap_or(f64::NAN);
            if norm < best.0 {
                best = (norm, r, tau);
            }
            rows.push(vec![
                r,
                tau,
                c,
                norm,
                m.marginal_spatial(r),
                m.marginal_temporal(tau),
                q,
            ]);
        }
    }
    let (path, w) = create(cli, "kernel_grid.csv")?;
    write_csv(w, &header, rows)?;
    println!("wrote {}", path.display());
    println!(
        "min C_norm = {} at r = {}, tau = {}",
        fmt_f64(best.0),
        fmt_f64(best.1),
        fmt_f64(best.2)
    );
    Ok(())
}

pub fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), CliError> {
    let m = load_model(cli, &a.figure)?;
    let mut grid = match &a.grid {
        Some(p) => read_json::<GridSpec>(p)?,
        None => GridSpec {
            spatial: a.spatial.clone(),
            nt: a.nt,
            ds: a.ds,
            dt: a.dt,
            seed: 0,
        },
    };
    if let Some(s) = cli.seed {
        grid.seed = s;
    }
    let field = simulate_field(&m, &grid)?;
    if let Some(w) = &field.warning {
        eprintln!("warning: {w}");
    }
    let (bin_path, mut w) = create(cli, "field.bin")?;
    field.write_binary(&mut w)?;
    w.flush()?;
    let side = write_text(cli, "field.json", &field.sidecar_json())?;
    println!("wrote {} and {}", bin_path.display(), side.display());
    if a.csv {
        let (p, mut w) = create(cli, "field.csv")?;
        field.write_csv(&mut w)?;
        w.flush()?;
        println!("wrote {}", p.display());
    }
    println!("{}", summary(&field));
    Ok(())
}

enum Input {
    Grid(GridVariograms),
    Scattered(SpaceTimeDataset<f64>),
}

impl Input {
    fn source(&self) -> &dyn VariogramSource {
        match self {
            Self::Grid(g) => g,
            Self::Scattered(d) => d,
        }
    }
}

fn load_input(a: &InputArgs) -> Result<Input, CliError> {
    match (&a.field, &a.data) {
        (Some(side), None) => {
            let bin = side.with_extension("bin");
            let f = FieldRealization::<f64>::read(open(&bin)?, &read_text(side)?)
                .map_err(|e| CliError::from(e).context(side.display()))?;
            Ok(Input::Grid(GridVariograms::new(&f)))
        }
        (None, Some(path)) => {
            let d = SpaceTimeDataset::read_csv(open(path)?, 0.0)
                .map_err(|e| CliError::from(e).context(format!("data file {}", path.display())))?;
            Ok(Input::Scattered(d))
        }
        _ => Err(CliError::config(
            "an input is required: pass --field or --data",
        )),
    }
}

pub fn variogram(cli: &Cli, a: &VariogramArgs) -> Result<(), CliError> {
    let input = load_input(&a.input)?;
    let src = input.source();
    let (ds, dt) = src.spacing();
    let rs = a.r_step.unwrap_or(ds);
    let ts = a.tau_step.unwrap_or(dt);
    if !(rs > 0.0 && ts > 0.0) || a.r_bins == 0 || a.tau_bins == 0 {
        return Err(CliError::config("bin steps and counts must be positive"));
    }
    let outputs = [
        (
            "variogram_spatial.json",
            src.spatial_marginal(&LagBins::regular(rs, a.r_bins))?,
        ),
        (
            "variogram_temporal.json",
            src.temporal_marginal(&LagBins::regular(ts, a.tau_bins))?,
        ),
        (
            "variogram_space_time.json",
            src.space_time(
                &LagBins::regular_from_zero(rs, a.r_bins),
                &LagBins::regular_from_zero(ts, a.tau_bins),
            )?,
        ),
    ];
    for (name, v) in outputs {
        if v.empty_bins > 0 {
            eprintln!("note: {name}: {} bins received no pairs", v.empty_bins);
        }
        let p = write_text(cli, name, &v.to_json())?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn parse_enum<T: DeserializeOwned>(flag: &str, value: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::config(format!("invalid {flag} `{value}`")))
}

pub fn fit(cli: &Cli, a: &FitArgs) -> Result<(), CliError> {
    let input = load_input(&a.input)?;
    let spec = PipelineSpec {
        family: parse_enum("--family", &a.family)?,
        dispersion: parse_enum("--dispersion", &a.dispersion)?,
        r_bins: a.r_bins,
        tau_bins: a.tau_bins,
        options: match &a.options {
            Some(p) => read_json(p)?,
            None => Default::default(),
        },
    };
    if spec.r_bins == 0 || spec.tau_bins == 0 {
        return Err(CliError::config("bin counts must be positive"));
    }
    let res = fit_pipeline(input.source(), &spec)?;
    let fitted = res.full.kernel_model()?;
    let p = write_text(cli, "fit.json", &res.full.to_json())?;
    write_text(cli, "fit_marginal.json", &to_json(&res.marginal))?;
    write_text(cli, "fitted_model.json", &fitted.to_json())?;
    println!(
        "wrote {} (plus fit_marginal.json, fitted_model.json)",
        p.display()
    );
    println!(
        "joint objective {} -> {}",
        fmt_f64(res.full.initial_objective),
        fmt_f64(res.full.objective)
    );
    Ok(())
}

pub fn predict(cli: &Cli, a: &PredictArgs) -> Result<(), CliError> {
    let m = load_model(cli, &a.figure)?;
    let what = || format!("data file {}", a.data.display());
    let raw = SpaceTimeDataset::read_csv(open(&a.data)?, 0.0)
        .map_err(|e| CliError::from(e).context(what()))?;
    let mean = a
        .mean
        .unwrap_or_else(|| raw.values().iter().sum::<f64>() / raw.len() as f64);
    let data = SpaceTimeDataset::new(raw.points().to_vec(), raw.values().to_vec(), mean)
        .map_err(|e| CliError::from(e).context(what()))?;
    let query = read_points_csv(open(&a.query)?)
        .map_err(|e| CliError::from(e).context(format!("query file {}", a.query.display())))?;
    let (means, vars) = gp_predict(&m, &data, &query)?;
    let (p, mut w) = create(cli, "predictions.csv")?;
    write_predictions_csv(&mut w, &query, &means, &vars)?;
    w.flush()?;
    println!("wrote {} ({} queries)", p.display(), query.len());
    Ok(())
}

pub fn checks(cli: &Cli, a: &ChecksArgs) -> Result<(), CliError> {
    let models: Vec<(String, KernelModel<f64>)> = match (&cli.model, &a.figure.figure) {
        (None, None) => NAMES
            .iter()
            .map(|n| Ok((n.to_string(), preset_model(n)?)))
            .collect::<Result<_, CliError>>()?,
        (Some(p), None) => vec![(p.display().to_string(), load_model(cli, &a.figure)?)],
        (_, Some(n)) => vec![(n.clone(), load_model(cli, &a.figure)?)],
    };
    let tol: Tolerances = match &a.tolerances {
        Some(p) => read_json(p)?,
        None => Tolerances::default(),
    };
    let report = checks::run(&models, cli.seed.unwrap_or(0), &tol)?;
    let p = write_text(cli, "checks.json", &to_json(&report))?;
    for m in &report.models {
        println!("{}: {}", m.name, if m.pass { "pass" } else { "FAIL" });
    }
    println!("wrote {}", p.display());
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .models
            .iter()
            .filter(|m| !m.pass)
            .map(|m| m.name.as_str())
            .collect();
        Err(CliError::Check(format!("failed for {}", failed.join(", "))))
    }
}
