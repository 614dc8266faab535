use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sparsevb::bench::{run_scenario, run_scenario_with_noise, write_records_csv, Method, ScenarioRun, ScenarioSpec};
use sparsevb::data::normalize_design;
use sparsevb::diagnostics::compatibility_report_capped;
use sparsevb::noise::{estimate_noise_sd, rescale, NoiseMethod};
use sparsevb::{Engine, FitConfig, RegressionData, UpdateOrder};

use crate::io::{read_matrix, read_vector};
use crate::{CliError, CompareArgs, DiagnoseArgs, EngineArg, FitArgs, OrderArg, SimulateArgs};

const SCHEMA_VERSION: u32 = 1;

fn order(arg: OrderArg, seed: u64) -> UpdateOrder {
    match arg {
        OrderArg::Prioritized => UpdateOrder::Prioritized,
        OrderArg::Lex => UpdateOrder::Lexicographic,
        OrderArg::Random => UpdateOrder::Randomized { seed },
    }
}

fn engine(arg: EngineArg, slab_sd: f64) -> Result<Engine, CliError> {
    Ok(match arg {
        EngineArg::Laplace => Engine::Laplace,
        EngineArg::Qmf => Engine::Qmf,
        EngineArg::Gauss => Engine::Gauss { slab_sd },
        EngineArg::GaussBatch => Engine::GaussBatch,
        EngineArg::GaussOracle => {
            return Err(CliError::Input("gauss-oracle needs the true signal and is only available in simulations".into()))
        }
    })
}

fn method(arg: EngineArg, slab_sd: f64) -> Method {
    match arg {
        EngineArg::GaussOracle => Method::GaussOracle,
        other => engine(other, slab_sd).map(Method::from).expect("non-oracle engine"),
    }
}

fn emit_json(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serialises")
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let mut x = read_matrix(&a.x)?;
    let y = read_vector(&a.y)?;
    if x.nrows() != y.len() {
        return Err(CliError::Input(format!(
            "design has {} rows but response has {}",
            x.nrows(),
            y.len()
        )));
    }
    if a.normalize {
        x = normalize_design(&x);
    }
    let p = x.ncols();
    let raw = RegressionData::precompute(x, y)?;
    let noise = if a.estimate_sigma {
        NoiseMethod::RidgeDf
    } else {
        NoiseMethod::Known(a.known_sigma.unwrap_or(1.0))
    };
    let est = estimate_noise_sd(&raw, noise)?;
    let data = if est.sigma_hat == 1.0 { raw } else { rescale(&raw, &est)? };

    let eng = engine(a.engine, a.slab_sd)?;
    let b0 = a.b0.unwrap_or(p as f64);
    let prior = eng.prior(a.lambda, a.a0, b0);
    let config = FitConfig {
        order: order(a.order, a.seed),
        epsilon: a.epsilon,
        max_sweeps: a.max_sweeps,
        track_elbo: a.track_elbo,
        ..FitConfig::default()
    };
    let fit = eng.fit(&data, &prior, &config)?;
    let selected: Vec<usize> = fit
        .state
        .gamma
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > 0.5)
        .map(|(i, _)| i + 1)
        .collect();
    let mut body = json!({
        "schema_version": SCHEMA_VERSION,
        "config": {
            "engine": eng.name(),
            "lambda": a.lambda,
            "a0": a.a0,
            "b0": b0,
            "slab_sd": a.slab_sd,
            "epsilon": a.epsilon,
            "order": config.order.name(),
            "seed": a.seed,
            "max_sweeps": a.max_sweeps,
            "normalize": a.normalize,
            "noise": to_value(&est.method),
        },
        "n": data.n(),
        "p": p,
        "sigma_hat": est.sigma_hat,
        "mu": fit.state.mu,
        "sigma": fit.state.sigma,
        "gamma": fit.state.gamma,
        "posterior_mean": fit.state.posterior_mean(),
        "selected": selected,
        "sweeps": fit.sweeps,
        "converged": fit.converged,
    });
    if let Some(trace) = &fit.elbo_trace {
        body["elbo_trace"] = to_value(trace);
    }
    body["timing"] = json!({ "wall_time_s": fit.wall_time });
    emit_json(&body, a.out.as_deref())
}

fn load_scenario(path: &Path, replicates: Option<usize>) -> Result<ScenarioSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut spec: ScenarioSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Input(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
    if let Some(r) = replicates {
        spec.replicates = r;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(spec: &ScenarioSpec, m: Method, config: &FitConfig, plugin: Option<f64>) -> Result<ScenarioRun, CliError> {
    Ok(match plugin {
        Some(v) => run_scenario_with_noise(spec, m, config, NoiseMethod::Plugin(v))?,
        None => run_scenario(spec, m, config)?,
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let spec = load_scenario(&a.scenario, a.replicates)?;
    let m = method(a.engine, a.slab_sd);
    let config = FitConfig {
        order: order(a.order, a.seed),
        epsilon: a.epsilon,
        max_sweeps: a.max_sweeps,
        ..FitConfig::default()
    };
    let result = run(&spec, m, &config, a.plugin_sigma)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut csv = Vec::new();
    write_records_csv(&result.records, &mut csv)?;
    fs::write(a.out_dir.join("replicates.csv"), csv)?;
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "method": m.name(),
        "order": config.order.name(),
        "scenario": to_value(&spec),
        "report": to_value(&result.report),
    });
    emit_json(&body, Some(&a.out_dir.join("summary.json")))
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let spec = load_scenario(&a.scenario, a.replicates)?;
    let mut out = String::from("method,order,metric,mean,sd\n");
    for &e in &a.engines {
        let m = method(e, a.slab_sd);
        for &o in &a.orders {
            let config = FitConfig {
                order: order(o, a.seed),
                epsilon: a.epsilon,
                max_sweeps: a.max_sweeps,
                ..FitConfig::default()
            };
            let r = run(&spec, m, &config, a.plugin_sigma)?.report;
            let mut rows = vec![("l2", r.l2_mean, r.l2_sd), ("fdr", r.fdr_mean, r.fdr_sd), ("tpr", r.tpr_mean, r.tpr_sd)];
            if a.with_runtime {
                rows.push(("runtime_s", r.runtime_mean_s, r.runtime_sd_s));
            }
            for (metric, mean, sd) in rows {
                out.push_str(&format!("{},{},{metric},{mean:.16e},{sd:.16e}\n", m.name(), config.order.name()));
            }
        }
    }
    match &a.out {
        Some(path) => fs::write(path, out)?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    let x = read_matrix(&a.x)?;
    let n = x.nrows();
    let data = RegressionData::precompute(x, sparsevb::nalgebra::DVector::zeros(n))?;
    let report = compatibility_report_capped(&data, a.s_max, a.max_subsets as u128)?;
    let mut body = json!({ "schema_version": SCHEMA_VERSION });
    if let (Value::Object(dst), Value::Object(src)) = (&mut body, to_value(&report)) {
        dst.extend(src);
    }
    emit_json(&body, a.out.as_deref())
}
