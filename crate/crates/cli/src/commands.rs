//! Subcommand bodies. Each returns the tables to write.

use qcmap_core::dynamics::IntegratorConfig;
use qcmap_core::ensemble::{estimate_correlation, estimate_mre, histogram_sz, EnsembleConfig};
use qcmap_core::ergodic::{self, Limit};
use qcmap_core::models::{BathSpec, ModelKind, TwoLevelModel};
use qcmap_core::{Error, Method};

use crate::config::{Command, RunConfig, Target};
use crate::output::{Cell, PlotStyle, Table};
use crate::CliError;

pub fn execute(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Predict | Command::SweepEps | Command::SweepAlpha => Ok(vec![predictions(cfg)?]),
        Command::Simulate => simulate(cfg),
        Command::Histogram => Ok(vec![histogram(cfg)?]),
        Command::Table1 => Ok(vec![table1()?]),
        Command::Mre => Ok(vec![mre(cfg)?]),
        Command::Potentials => Ok(vec![potentials(cfg)]),
    }
}

fn model(cfg: &RunConfig, eps: f64, alpha: f64) -> TwoLevelModel {
    match cfg.model {
        ModelKind::SpinBoson => TwoLevelModel::spin_boson(cfg.delta, eps, alpha, cfg.omega),
        ModelKind::Anharmonic => TwoLevelModel::anharmonic(cfg.delta, alpha, cfg.omega, cfg.xbar),
    }
}

fn single_model(cfg: &RunConfig) -> TwoLevelModel {
    model(cfg, cfg.eps.values()[0], cfg.alpha.values()[0])
}

fn bath(cfg: &RunConfig) -> Result<BathSpec, CliError> {
    Ok(BathSpec::new(cfg.beta, cfg.eta(), cfg.omega)?)
}

fn model_notes(t: &mut Table, cfg: &RunConfig) {
    let name = match cfg.model {
        ModelKind::SpinBoson => "spin-boson",
        ModelKind::Anharmonic => "anharmonic",
    };
    t.note("model", name);
    t.note("beta", cfg.beta);
    t.note("delta", cfg.delta);
    t.note("omega", cfg.omega);
    match cfg.model {
        ModelKind::SpinBoson => t.note("eps", cfg.eps),
        ModelKind::Anharmonic => t.note("xbar", cfg.xbar),
    }
    t.note("alpha", cfg.alpha);
}

/// Prediction value, or `None` where the method has an inverted potential.
fn predict_cell(target: Target, m: &TwoLevelModel, beta: f64) -> Result<Option<ergodic::PredictionResult>, CliError> {
    match ergodic::predict(target.method(), m, beta) {
        Ok(p) => Ok(Some(p)),
        Err(Error::InvertedPotential { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn predictions(cfg: &RunConfig) -> Result<Table, CliError> {
    let axes: Vec<&str> = match cfg.command {
        Command::SweepEps => vec!["eps"],
        Command::SweepAlpha => vec!["alpha"],
        _ => vec!["eps", "alpha"],
    };
    let mut columns: Vec<String> = axes.iter().map(|s| s.to_string()).collect();
    for t in &cfg.methods {
        columns.push(t.name().to_string());
        columns.push(format!("{}_err", t.name()));
    }
    let title = match cfg.command {
        Command::SweepEps => "long-time C_Iz against bias",
        Command::SweepAlpha => "long-time C_Iz against coupling",
        _ => "long-time C_Iz predictions",
    };
    let mut table = Table::new(title, columns);
    model_notes(&mut table, cfg);
    table.note("columns", "value and quadrature error per method; empty cells mark inverted potentials (alpha*r_max >= 1)");
    let eps_values = cfg.eps.values();
    let alpha_values = cfg.alpha.values();
    let mut clipped = false;
    for &eps in &eps_values {
        for &alpha in &alpha_values {
            let m = model(cfg, eps, alpha);
            let mut row: Vec<Cell> = axes
                .iter()
                .map(|a| Cell::Num(if *a == "eps" { eps } else { alpha }))
                .collect();
            for &t in &cfg.methods {
                let p = predict_cell(t, &m, cfg.beta)?;
                clipped |= p.is_some_and(|p| !p.normalizable);
                row.push(p.map(|p| p.value).into());
                row.push(p.map(|p| p.abs_err).into());
            }
            table.push(row);
        }
    }
    if clipped {
        table.note("warning", "Boltzmann weight not normalizable for some rows; values are on the capped domain |x| <= 1000");
    }
    let x_label = axes[0].to_string();
    table.plot = PlotStyle::Lines {
        x_label,
        y_label: "C_Iz(t -> inf)".into(),
        columns: (0..cfg.methods.len()).map(|k| axes.len() + 2 * k).collect(),
    };
    Ok(table)
}

fn ensemble_config(cfg: &RunConfig, method: Method) -> Result<EnsembleConfig, CliError> {
    Ok(EnsembleConfig {
        method,
        model: single_model(cfg),
        bath: bath(cfg)?,
        integrator: IntegratorConfig::new(cfg.dt, cfg.tmax),
        n_traj: cfg.ntraj,
        master_seed: cfg.seed,
        sample_times: EnsembleConfig::uniform_times(cfg.tmax, cfg.interval),
    })
}

fn ensemble_notes(t: &mut Table, cfg: &RunConfig, method: Method) {
    t.note("method", method);
    model_notes(t, cfg);
    t.note("eta", cfg.eta());
    t.note("ntraj", cfg.ntraj);
    t.note("dt", cfg.dt);
    t.note("tmax", cfg.tmax);
    t.note("seed", cfg.seed);
}

fn simulate(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let mut tables = Vec::new();
    for target in &cfg.methods {
        let Target::Method(method) = *target else { continue };
        let series = estimate_correlation(&ensemble_config(cfg, method)?)?;
        let sqc = series.renormalization_denominator.is_some();
        let mut columns: Vec<String> = ["t", "c", "c_err", "c_live", "c_live_err", "n_live"].map(String::from).to_vec();
        if sqc {
            columns.push("denominator".into());
        }
        let mut table = Table::new(format!("C_Iz(t) for {method}"), columns);
        ensemble_notes(&mut table, cfg, method);
        let (avg, err) = series.long_time_average();
        table.note("long_time_average", format!("{avg} +- {err} (final quarter)"));
        match predict_cell(*target, &single_model(cfg), cfg.beta)? {
            Some(p) => table.note("prediction", p.value),
            None => table.note("prediction", "none (inverted potential)"),
        }
        table.note("n_diverged", series.n_diverged);
        if series.has_diverged() {
            table.note("warning", "diverged trajectories present; c includes them frozen, c_live excludes them");
        }
        for j in 0..series.times.len() {
            let mut row = vec![
                Cell::Num(series.times[j]),
                Cell::Num(series.c_values[j]),
                Cell::Num(series.std_errs[j]),
                Cell::Num(series.c_values_live[j]),
                Cell::Num(series.std_errs_live[j]),
                Cell::Int(series.n_live[j] as u64),
            ];
            if let Some(d) = &series.renormalization_denominator {
                row.push(Cell::Num(d[j]));
            }
            table.push(row);
        }
        table.plot = PlotStyle::Lines {
            x_label: "t".into(),
            y_label: "C_Iz(t)".into(),
            columns: vec![1],
        };
        tables.push(table);
    }
    Ok(tables)
}

fn histogram(cfg: &RunConfig) -> Result<Table, CliError> {
    let t = cfg.t.unwrap_or(cfg.tmax);
    let ens = ensemble_config(cfg, Method::Mash)?;
    let h = histogram_sz(&ens, t, cfg.bins)?;
    let (up, lo) = ergodic::mash_hemisphere_masses(&ens.model, cfg.beta)?;
    let mut table = Table::new(format!("MASH S_z density at t = {t}"), vec!["s_z".into(), "density".into()]);
    ensemble_notes(&mut table, cfg, Method::Mash);
    table.note("mass_lower", format!("{} (equilibrium {lo})", h.mass_lower));
    table.note("mass_upper", format!("{} (equilibrium {up})", h.mass_upper));
    table.note("flatness_p", format!("lower {} upper {}", h.flatness_p.0, h.flatness_p.1));
    for (c, d) in h.centers.iter().zip(&h.density) {
        table.push(vec![Cell::Num(*c), Cell::Num(*d)]);
    }
    table.plot = PlotStyle::Steps {
        x_label: "S_z".into(),
        y_label: "density".into(),
    };
    Ok(table)
}

/// Limit factors for every method; MASH and SQC are exact in both limits.
pub fn table1() -> Result<Table, CliError> {
    let mut table = Table::new(
        "ratio of long-time limit to exact",
        vec!["method".into(), "high_t".into(), "low_t".into(), "weak_coupling_bv1".into()],
    );
    table.note("weak_coupling_bv1", "weak-coupling ratio at beta*V_z = 1; no constant factor exists");
    for m in Method::ALL {
        let factor = |limit| match ergodic::limit_factor(m, limit) {
            Ok(v) => Ok(v),
            Err(Error::NotApplicable(_)) => Ok(1.0),
            Err(e) => Err(CliError::from(e)),
        };
        table.push(vec![
            Cell::Text(m.name().into()),
            Cell::Num(factor(Limit::HighT)?),
            Cell::Num(factor(Limit::LowT)?),
            Cell::Num(factor(Limit::WeakCoupling { beta_v0: 1.0 })?),
        ]);
    }
    Ok(table)
}

fn mre(cfg: &RunConfig) -> Result<Table, CliError> {
    let series = estimate_mre(&ensemble_config(cfg, Method::Mash)?)?;
    let mut table = Table::new("MASH microscopic-reversibility error", vec!["t".into(), "mre".into(), "mre_err".into()]);
    ensemble_notes(&mut table, cfg, Method::Mash);
    for ((t, v), e) in series.times.iter().zip(&series.values).zip(&series.std_errs) {
        table.push(vec![Cell::Num(*t), Cell::Num(*v), Cell::Num(*e)]);
    }
    table.plot = PlotStyle::Lines {
        x_label: "t".into(),
        y_label: "MRE".into(),
        columns: vec![1],
    };
    Ok(table)
}

fn potentials(cfg: &RunConfig) -> Table {
    let m = single_model(cfg);
    let (lo, hi) = match cfg.model {
        ModelKind::SpinBoson => (-6.0, 6.0),
        ModelKind::Anharmonic => (-1.0, 12.0),
    };
    let mut table = Table::new(
        "potential energy surfaces",
        ["x", "u", "v_minus", "v_plus", "kappa", "d_nac"].map(String::from).to_vec(),
    );
    model_notes(&mut table, cfg);
    let n = 321;
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let d = m.eval_diabatic(x);
        let nac: Cell = m.eval_adiabatic(x).ok().map(|a| a.d_nac).into();
        let v = d.half_gap();
        table.push(vec![
            Cell::Num(x),
            Cell::Num(d.u),
            Cell::Num(d.u - v),
            Cell::Num(d.u + v),
            Cell::Num(d.kappa),
            nac,
        ]);
    }
    table.plot = PlotStyle::Lines {
        x_label: "x".into(),
        y_label: "energy".into(),
        columns: vec![1, 2, 3],
    };
    table
}
