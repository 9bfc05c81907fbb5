use std::fs;
use std::path::Path;

use coevolve_core::analysis::{convergence_sweep, spearman, write_sweep_csv, SweepSpec};
use coevolve_core::dynamics::{trajectory_json, write_trajectory_csv, DynamicsError};
use coevolve_core::experiments::{
    self, communities_repeated, prepare, CheckName, CheckStatus, InitError, RunError, VerifySpec,
};
use coevolve_core::riccati::{
    commuting_closed_form, first_singular_time, predict_blowup, series_solve,
    symmetric_closed_form, CSpectrum, RiccatiError,
};
use coevolve_core::spectral::{
    default_commute_tol, max_abs, simultaneous_diagonalize, SpectralError,
};
use coevolve_core::{GraphTopology, RunSpec, SymmetricMatrix, Trajectory};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::config::{parse_list, Settings};
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn init_error(e: InitError) -> CliError {
    CliError::Config(e.to_string())
}

fn run_error(e: RunError) -> CliError {
    match e {
        RunError::Init(e) => init_error(e),
        RunError::Underflow { t, .. } => CliError::Numerical(format!(
            "step size underflow at t = {t} before the blow-up threshold was crossed"
        )),
        RunError::Dynamics(
            e @ (DynamicsError::InvalidConfig(_)
            | DynamicsError::Dimension(_)
            | DynamicsError::Graph(_)
            | DynamicsError::SelfLoopPresent),
        ) => CliError::Config(e.to_string()),
        RunError::Dynamics(e) => CliError::Numerical(e.to_string()),
    }
}

fn riccati_error(e: RiccatiError) -> CliError {
    match e {
        RiccatiError::SingularY { t } => CliError::Numerical(format!(
            "W(t) does not exist at t = {t}: Y(t) is singular (blow-up)"
        )),
        RiccatiError::ModeSingular { mode, t_star, t } => CliError::Numerical(format!(
            "mode {mode} blows up at t* = {t_star}, before t = {t}"
        )),
        e @ RiccatiError::NegativeTime(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

/// Wraps a command's payload with the version and the resolved config.
fn envelope(command: &str, config: Value, mut body: Value) -> Value {
    let mut out = json!({ "version": VERSION, "command": command, "config": config });
    if let (Some(dst), Some(src)) = (out.as_object_mut(), body.as_object_mut()) {
        dst.append(src);
    }
    out
}

fn emit(out: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_trajectory(
    dir: &Path,
    traj: &Trajectory,
    g: &GraphTopology,
    meta: Value,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let csv_path = dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(|e| io_error(&csv_path, e))?;
    write_trajectory_csv(traj, g, std::io::BufWriter::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", csv_path.display())))?;
    emit(
        Some(&dir.join("trajectory.json")),
        &trajectory_json(traj, meta),
    )
}

pub fn simulate(flags: Settings) -> Result<(), CliError> {
    let settings = Settings::resolve(Settings::default(), flags)?;
    let spec = settings.run_spec()?;
    let config = json!(spec);
    let meta = json!({ "version": VERSION, "config": config });
    let report = match experiments::run(&spec) {
        Ok(report) => report,
        Err(RunError::Underflow { t, partial }) => {
            if let Some(dir) = &settings.out {
                let g = prepare(&spec).map_err(init_error)?.graph.topology;
                write_trajectory(dir, &partial, &g, meta)?;
            }
            return Err(run_error(RunError::Underflow { t, partial }));
        }
        Err(e) => return Err(run_error(e)),
    };
    let traj = &report.trajectory;
    let last = traj.last();
    let body = envelope(
        "simulate",
        config,
        json!({
            "stop_reason": traj.stop_reason,
            "stop_time": traj.stop_time,
            "steps": traj.steps,
            "samples": traj.len(),
            "outcome": report.outcome,
            "balance": report.balance,
            "partition": report.partition,
            "seeds": report.seeds,
            "accuracy": report.accuracy,
            "final": { "t": last.t, "v": last.v.as_slice(), "w": rows(&last.w) },
        }),
    );
    match &settings.out {
        Some(dir) => {
            write_trajectory(dir, traj, &report.graph.topology, meta)?;
            emit(Some(&dir.join("report.json")), &body)
        }
        None => emit(None, &body),
    }
}

/// `W̃ = aW` obeys `W̃' = W̃² + C̃` with `C̃ = ab·VVᵀ − a²W²`, so the closed
/// forms apply to `(B, C) = (aW(0), C̃)` and `W(t) = W̃(t)/a`.
fn riccati_data(spec: &RunSpec) -> Result<(SymmetricMatrix, SymmetricMatrix, f64), CliError> {
    let prepared = prepare(spec).map_err(init_error)?;
    let g = &prepared.graph.topology;
    if !(g.is_complete() && g.self_loops()) {
        return Err(CliError::Config(
            "closed forms hold on the complete graph with self-loops".into(),
        ));
    }
    let state = prepared.state;
    if state.m() != 1 {
        return Err(CliError::Config("closed forms need scalar opinions".into()));
    }
    if state.asymmetry() != 0.0 {
        return Err(CliError::Config(
            "closed forms need a symmetric W(0)".into(),
        ));
    }
    let (a, b) = (spec.sim.a, spec.sim.b);
    let w = &state.w;
    let big_b = SymmetricMatrix::new(w * a).map_err(|e| CliError::Config(e.to_string()))?;
    let c = SymmetricMatrix::new(&state.v * state.v.transpose() * (a * b) - w * w * (a * a))
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((big_b, c, a))
}

pub fn closed_form(
    flags: Settings,
    times: Option<String>,
    t_max: f64,
    points: usize,
) -> Result<(), CliError> {
    let defaults = Settings {
        mode: Some("continuous".into()),
        n: Some(4),
        w0: Some("random_symmetric:1".into()),
        ..Settings::default()
    };
    let settings = Settings::resolve(defaults, flags)?;
    let spec = settings.run_spec()?;
    let (b, c, a) = riccati_data(&spec)?;
    let times: Vec<f64> = match times {
        Some(list) => parse_list(&list, "time")?,
        None => {
            if points == 0 || !(t_max > 0.0) {
                return Err(CliError::Config(
                    "--points and --t-max must be positive".into(),
                ));
            }
            (1..=points)
                .map(|k| t_max * k as f64 / points as f64)
                .collect()
        }
    };
    let cs = CSpectrum::from_c(&c).map_err(riccati_error)?;
    let commuting =
        simultaneous_diagonalize(&b, &c, default_commute_tol(b.as_matrix(), c.as_matrix())).ok();

    let horizon = times.iter().fold(0.0_f64, |m, &t| m.max(t));
    let t_star = first_singular_time(&b, &cs, horizon).map_err(riccati_error)?;
    let mut table = Vec::new();
    let mut failure = None;
    for &t in &times {
        if let Some(ts) = t_star.filter(|&ts| t >= ts) {
            failure = Some(RiccatiError::SingularY { t: ts });
            break;
        }
        let row = (|| -> Result<Value, RiccatiError> {
            let series = series_solve(b.as_matrix(), c.as_matrix(), t, 1e-15)?;
            let closed = symmetric_closed_form(&b, &cs, t)?;
            let comm = commuting
                .as_ref()
                .map(|sd| commuting_closed_form(&sd.diag_b, &sd.diag_c, &sd.u, t))
                .transpose()?;
            let mut deviation = max_abs(&(&series.w - &closed));
            if let Some(m) = &comm {
                deviation = deviation.max(max_abs(&(m - &closed)));
            }
            Ok(json!({
                "t": t,
                "w_series": rows(&(series.w / a)),
                "w_closed": rows(&(closed / a)),
                "w_commuting": comm.map(|m| rows(&(m / a))),
                "series_terms": series.terms_used,
                "series_deferred": series.deferred,
                "max_deviation": deviation / a.abs(),
            }))
        })();
        match row {
            Ok(v) => table.push(v),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let singular_at = match &failure {
        Some(RiccatiError::SingularY { t }) | Some(RiccatiError::ModeSingular { t, .. }) => {
            Some(*t)
        }
        _ => None,
    };
    let max_deviation = table
        .iter()
        .filter_map(|r| r["max_deviation"].as_f64())
        .fold(0.0, f64::max);
    let body = envelope(
        "closed-form",
        json!(spec),
        json!({
            "commuting": commuting.is_some(),
            "rows": table,
            "max_deviation": max_deviation,
            "singular_at": singular_at,
        }),
    );
    emit(settings.out.as_deref(), &body)?;
    match failure {
        Some(e) => Err(riccati_error(e)),
        None => Ok(()),
    }
}

pub fn predict(flags: Settings) -> Result<(), CliError> {
    let defaults = Settings {
        mode: Some("continuous".into()),
        n: Some(4),
        ..Settings::default()
    };
    let settings = Settings::resolve(defaults, flags)?;
    let spec = settings.run_spec()?;
    let (b, c, _) = riccati_data(&spec)?;
    let sd =
        match simultaneous_diagonalize(&b, &c, default_commute_tol(b.as_matrix(), c.as_matrix())) {
            Ok(sd) => sd,
            Err(SpectralError::NotCommuting { defect, .. }) => {
                return Err(CliError::Config(format!(
                    "W(0) and C do not commute (defect {defect:.3e}), which means V(0) is not an \
                 eigenvector of W(0); there is no closed-form prediction, use `coevolve simulate`"
                )))
            }
            Err(e) => return Err(CliError::Numerical(e.to_string())),
        };
    let prediction = predict_blowup(&sd.diag_b, &sd.diag_c);
    let body = envelope(
        "predict",
        json!(spec),
        json!({
            "blows_up": prediction.blows_up,
            "t_star": prediction.blows_up.then_some(prediction.t_star),
            "case": prediction.case,
            "mode_index": prediction.mode_index,
            "modes": prediction.modes,
            "diag_b": sd.diag_b,
            "diag_c": sd.diag_c,
            "basis": rows(&sd.u),
        }),
    );
    emit(settings.out.as_deref(), &body)
}

pub fn communities(flags: Settings, fraction: Option<f64>, repeats: u64) -> Result<(), CliError> {
    let defaults = Settings {
        graph: Some("file".into()),
        w0: Some("edge:0.01".into()),
        v0: Some("seeds:0.2".into()),
        ..Settings::default()
    };
    let mut settings = Settings::resolve(defaults, flags)?;
    if let Some(f) = fraction {
        settings.v0 = Some(format!("seeds:{f}"));
    }
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let spec = settings.run_spec()?;
    let graph = spec.graph.build(spec.seed).map_err(init_error)?;
    if graph.labels.is_none() {
        return Err(CliError::Config("communities needs --labels".into()));
    }
    let seeds: Vec<u64> = (spec.seed..spec.seed + repeats).collect();
    let reports = communities_repeated(&spec, &seeds, settings.workers).map_err(run_error)?;
    let accs: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.accuracy.map(|a| a.accuracy))
        .collect();
    let mean = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);
    let body = envelope(
        "communities",
        json!(spec),
        json!({
            "ids": graph.ids,
            "mean_accuracy": mean,
            "runs": reports,
        }),
    );
    emit(settings.out.as_deref(), &body)
}

pub fn sweep(flags: Settings, n_values: Option<String>, samples: usize) -> Result<(), CliError> {
    let defaults = Settings {
        n: Some(16),
        ..Settings::default()
    };
    let settings = Settings::resolve(defaults, flags)?;
    let spec = settings.run_spec()?;
    let n_values = match n_values {
        Some(list) => parse_list(&list, "size")?,
        None => vec![settings.n.unwrap_or(16)],
    };
    let sweep = SweepSpec {
        graph: spec.graph.clone(),
        n_values,
        samples_per_n: samples,
        w0: spec.w0.clone(),
        v0: spec.v0.clone(),
        base_seed: spec.seed,
    };
    let rows = convergence_sweep(&sweep, &spec.sim, settings.workers)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).map_err(|e| CliError::Config(e.to_string()))?;
    match &settings.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| io_error(path, e))?;
            let ok: Vec<_> = rows.iter().filter(|r| r.error.is_none()).collect();
            let x: Vec<f64> = ok.iter().map(|r| r.pos_eig).collect();
            let y: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
            let rho = spearman(&x, &y);
            let meta = envelope(
                "sweep",
                json!({ "sweep": sweep, "sim": spec.sim }),
                json!({
                    "rows": rows.len(),
                    "failed": rows.len() - ok.len(),
                    "spearman_pos_eig_iterations": rho.is_finite().then_some(rho),
                }),
            );
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".json");
            emit(Some(Path::new(&meta_path)), &meta)
        }
        None => {
            print!("{}", String::from_utf8(csv).expect("csv is utf-8"));
            Ok(())
        }
    }
}

pub fn verify(
    flags: Settings,
    checks: Option<String>,
    horizon: Option<f64>,
    perturb: Option<f64>,
) -> Result<(), CliError> {
    let defaults = Settings {
        mode: Some("continuous".into()),
        n: Some(4),
        self_loops: Some(true),
        w0: Some("random_symmetric:1".into()),
        ..Settings::default()
    };
    let settings = Settings::resolve(defaults, flags)?;
    let spec = settings.run_spec()?;
    let mut vs = VerifySpec::new(spec);
    if let Some(list) = checks {
        vs.checks = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| {
                serde_json::from_value::<CheckName>(Value::String(name.to_string()))
                    .map_err(|_| CliError::Config(format!("unknown check {name:?}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(h) = horizon {
        if !(h > 0.0) {
            return Err(CliError::Config("--horizon must be positive".into()));
        }
        vs.horizon = h;
    }
    if let Some(t) = settings.threshold {
        vs.threshold = t;
    }
    vs.perturb = perturb;
    let report = experiments::verify(&vs).map_err(run_error)?;
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .map(|c| format!("{:?}", c.name))
        .collect();
    let body = envelope(
        "verify",
        json!({ "run": vs.run, "checks": vs.checks, "horizon": vs.horizon, "threshold": vs.threshold, "perturb": vs.perturb }),
        json!(report),
    );
    emit(settings.out.as_deref(), &body)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed.join(", ")))
    }
}
