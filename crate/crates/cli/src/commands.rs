//! Subcommand bodies. Each returns the process exit code.

use std::path::Path;

use clayer::energy::{
    check_decay, check_master_inequality, check_smallness, constants, empirical_radius,
    DsOneReading, EnergyParams, InequalitySeries,
};
use clayer::integrator::{simulate, Trajectory};
use clayer::io::Checkpoint;
use clayer::lemma::run_suite;
use clayer::mms::{convergence_study, OrderTable};
use clayer::model::{Parameters, State};
use clayer::rescaling::{run_verification, Regime};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{InitialData, RunConfig};
use crate::output;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DIVERGENCE: u8 = 2;
pub const EXIT_SMALLNESS: u8 = 3;
pub const EXIT_FAILED: u8 = 4;

/// Tolerances of the trajectory verdicts.
const DECAY_REL: f64 = 1e-12;
const MASTER_REL: f64 = 1e-10;
const LEMMA_TOL: f64 = 1e-8;

pub struct Outcome {
    pub code: u8,
    pub line: String,
}

fn initial_state(cfg: &RunConfig) -> Result<State<f64>, String> {
    match &cfg.initial {
        InitialData::Checkpoint { path } => {
            let cp = Checkpoint::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
            if cp.params != cfg.parameters {
                log::warn!(
                    "checkpoint parameters differ from the configuration; using the configuration"
                );
            }
            cp.to_state().map_err(|e| e.to_string())
        }
        other => {
            let preset = other.preset().expect("non-checkpoint initial data");
            let grid = cfg.grid()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            preset
                .build(&grid, &cfg.parameters, &mut rng)
                .map_err(|e| e.to_string())
        }
    }
}

struct Run {
    traj: Trajectory<f64>,
    aborted: Option<String>,
    decay: InequalitySeries<f64>,
    master: Vec<(DsOneReading, InequalitySeries<f64>, Option<f64>)>,
}

fn run_and_write(cfg: &RunConfig, initial: &State<f64>) -> Result<Run, String> {
    let params = &cfg.parameters;
    let core_cfg = cfg.integrator.to_core();
    let (traj, aborted) = match simulate(
        initial,
        params,
        &core_cfg,
        cfg.integrator.monitor_every,
        None,
    ) {
        Ok(t) => (t, None),
        Err(a) => {
            log::error!("{}", a.error);
            (a.trajectory, Some(a.error.to_string()))
        }
    };
    let ct = constants(params);
    let ep = EnergyParams::new(params);
    let decay = check_decay(&traj.reports, params, &ct);
    let master: Vec<_> = [DsOneReading::Derivation, DsOneReading::Printed]
        .into_iter()
        .map(|r| {
            let m = check_master_inequality(&traj.reports, params, &ep, &ct, r);
            (r, m.series, m.richardson_relative_change)
        })
        .collect();
    let dir = &cfg.output_dir;
    output::write_report(dir, &traj.reports, &decay.slack, &master[0].1.slack)?;
    write_checkpoints(dir, &traj, params)?;
    Ok(Run {
        traj,
        aborted,
        decay,
        master,
    })
}

fn write_checkpoints(
    dir: &Path,
    traj: &Trajectory<f64>,
    params: &Parameters<f64>,
) -> Result<(), String> {
    let cdir = dir.join("checkpoints");
    output::prepare(&cdir)?;
    let (_, dt) = traj.config.step_plan();
    let t0 = traj.snapshots.first().map_or(0.0, |s| s.t);
    for s in &traj.snapshots {
        let step = ((s.t - t0) / dt).round() as usize;
        let path = cdir.join(format!("step_{step:07}.clayer"));
        Checkpoint::from_state(s, params, step)
            .save(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn trajectory_results(run: &Run) -> Value {
    let last = run.traj.reports.last();
    json!({
        "steps_taken": run.traj.steps_taken,
        "dt_effective": run.traj.config.step_plan().1,
        "t_final": run.traj.final_state().t,
        "samples": run.traj.reports.len(),
        "aborted": run.aborted,
        "final_report": last,
        "decay": {
            "passes": run.decay.passes(DECAY_REL),
            "worst_relative_slack": run.decay.worst_relative_slack(),
        },
        "master": run.master.iter().map(|(r, s, rich)| json!({
            "reading": format!("{r:?}"),
            "passes": s.passes(MASTER_REL),
            "worst_relative_slack": s.worst_relative_slack(),
            "richardson_relative_change": rich,
        })).collect::<Vec<_>>(),
    })
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Outcome, String> {
    output::prepare(&cfg.output_dir)?;
    let initial = initial_state(cfg)?;
    let run = run_and_write(cfg, &initial)?;
    let code = if run.aborted.is_some() {
        EXIT_DIVERGENCE
    } else {
        EXIT_OK
    };
    output::write_summary(
        &cfg.output_dir,
        "simulate",
        cfg,
        trajectory_results(&run),
        code == EXIT_OK,
        code,
    )?;
    let line = match &run.aborted {
        Some(e) => format!(
            "simulate: aborted after {} steps: {e}",
            run.traj.steps_taken
        ),
        None => format!(
            "simulate: {} steps to t = {}",
            run.traj.steps_taken,
            run.traj.final_state().t
        ),
    };
    Ok(Outcome { code, line })
}

pub fn verify_theorem(cfg: &RunConfig) -> Result<Outcome, String> {
    output::prepare(&cfg.output_dir)?;
    let params = &cfg.parameters;
    let ct = constants(params);
    let initial = initial_state(cfg)?;
    let (small_ok, margin) = check_smallness(&initial, params, &ct).map_err(|e| e.to_string())?;
    let smallness = json!({ "passes": small_ok, "margin": margin, "delta": ct.delta_small });
    let constants_json =
        json!({ "D_s": ct.d_s, "eps_s": ct.eps_s, "delta": ct.delta_small, "C_decay": ct.c_decay });
    if !small_ok {
        let results = json!({ "constants": constants_json, "smallness": smallness });
        output::write_summary(
            &cfg.output_dir,
            "verify-theorem",
            cfg,
            results,
            false,
            EXIT_SMALLNESS,
        )?;
        return Ok(Outcome {
            code: EXIT_SMALLNESS,
            line: format!("verify-theorem: smallness fails (margin {margin:.3e})"),
        });
    }
    let run = run_and_write(cfg, &initial)?;
    let ep = EnergyParams::new(params);
    let radius: Vec<Value> = run
        .traj
        .snapshots
        .iter()
        .map(|s| json!({ "t": s.t, "empirical": empirical_radius(&s.u), "tau": ep.tau(s.t) }))
        .collect();
    let mut results = trajectory_results(&run);
    results["constants"] = constants_json;
    results["smallness"] = smallness;
    results["radius"] = Value::Array(radius);
    let passes =
        run.decay.passes(DECAY_REL) && run.master.iter().all(|(_, s, _)| s.passes(MASTER_REL));
    let code = if run.aborted.is_some() {
        EXIT_DIVERGENCE
    } else if passes {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    output::write_summary(
        &cfg.output_dir,
        "verify-theorem",
        cfg,
        results,
        code == EXIT_OK,
        code,
    )?;
    Ok(Outcome {
        code,
        line: format!(
            "verify-theorem: smallness margin {margin:.3e}, decay {}, master {}",
            verdict(run.decay.passes(DECAY_REL)),
            verdict(run.master.iter().all(|(_, s, _)| s.passes(MASTER_REL)))
        ),
    })
}

pub fn verify_lemma(cfg: &RunConfig) -> Result<Outcome, String> {
    output::prepare(&cfg.output_dir)?;
    let l = &cfg.lemma;
    let report = run_suite(cfg.seed, l.cases, l.n_x, l.n_y).map_err(|e| e.to_string())?;
    output::write_rows(&cfg.output_dir.join("lemma_cases.csv"), &report.cases)?;
    let passes = report.product_law_holds(LEMMA_TOL) && report.triangle_holds();
    let code = if passes { EXIT_OK } else { EXIT_FAILED };
    let results = json!({
        "cases": report.cases.len(),
        "worst_product_ratio": report.worst_product_ratio,
        "tolerance": LEMMA_TOL,
        "triangle": report.triangle,
    });
    output::write_summary(&cfg.output_dir, "verify-lemma", cfg, results, passes, code)?;
    Ok(Outcome {
        code,
        line: format!(
            "verify-lemma: {} cases, worst ratio {:.4}, triangle {}",
            report.cases.len(),
            report.worst_product_ratio,
            verdict(report.triangle_holds())
        ),
    })
}

#[derive(Serialize)]
struct TermCsv<'a> {
    regime: Regime,
    equation: u8,
    term: &'a str,
    in_display: bool,
    claimed: f64,
    multiplier: f64,
    observed: Option<f64>,
    fit_residual: Option<f64>,
}

pub fn verify_scaling(cfg: &RunConfig) -> Result<Outcome, String> {
    output::prepare(&cfg.output_dir)?;
    let sc = &cfg.scaling;
    let report = run_verification(&sc.params(Regime::Prandtl), &sc.small_values, &sc.frame)
        .map_err(|e| e.to_string())?;
    let rows = [&report.prandtl, &report.hartmann]
        .into_iter()
        .flat_map(|t| {
            t.rows.iter().map(move |r| TermCsv {
                regime: t.regime,
                equation: r.equation,
                term: &r.term,
                in_display: r.in_display,
                claimed: r.claimed,
                multiplier: r.multiplier,
                observed: r.observed,
                fit_residual: r.fit_residual,
            })
        });
    output::write_rows(&cfg.output_dir.join("terms.csv"), rows)?;
    let passes = report.passes(sc.tolerance);
    let code = if passes { EXIT_OK } else { EXIT_FAILED };
    let dev = |t: &clayer::rescaling::TermOrderTable| t.max_deviation();
    let line = format!(
        "verify-scaling: max deviation Prandtl {:?}, Hartmann {:?}, round trip {:.1e}: {}",
        dev(&report.prandtl),
        dev(&report.hartmann),
        report.round_trip,
        verdict(passes)
    );
    let results = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    output::write_summary(
        &cfg.output_dir,
        "verify-scaling",
        cfg,
        results,
        passes,
        code,
    )?;
    Ok(Outcome { code, line })
}

#[derive(Serialize)]
struct OrderCsv<'a> {
    study: &'a str,
    level: f64,
    error: f64,
    order: Option<f64>,
}

pub fn mms(cfg: &RunConfig) -> Result<Outcome, String> {
    output::prepare(&cfg.output_dir)?;
    let (temporal, spatial) = match convergence_study(&cfg.parameters, &cfg.mms) {
        Ok(t) => t,
        Err(e) => {
            let results = json!({ "error": e.to_string() });
            output::write_summary(&cfg.output_dir, "mms", cfg, results, false, EXIT_CONFIG)?;
            return Ok(Outcome {
                code: EXIT_CONFIG,
                line: format!("mms: {e}"),
            });
        }
    };
    let rows = |t: &OrderTable| -> Vec<(String, f64, f64, Option<f64>)> {
        (0..t.levels.len())
            .map(|i| {
                (
                    t.label.clone(),
                    t.levels[i],
                    t.errors[i],
                    t.orders.get(i).copied(),
                )
            })
            .collect()
    };
    let all: Vec<_> = rows(&temporal).into_iter().chain(rows(&spatial)).collect();
    output::write_rows(
        &cfg.output_dir.join("orders.csv"),
        all.iter().map(|(s, l, e, o)| OrderCsv {
            study: s,
            level: *l,
            error: *e,
            order: *o,
        }),
    )?;
    let passes = temporal.within(1.8, 2.2) && spatial.within(1.8, 2.2);
    let code = if passes { EXIT_OK } else { EXIT_FAILED };
    let results = json!({ "temporal": temporal, "spatial": spatial, "window": [1.8, 2.2] });
    output::write_summary(&cfg.output_dir, "mms", cfg, results, passes, code)?;
    Ok(Outcome {
        code,
        line: format!(
            "mms: temporal orders {:.3?}, spatial orders {:.3?}",
            temporal.orders, spatial.orders
        ),
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
