//! Per-instance construction runs: algorithmic Holevo-Helstrom and Uhlmann.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qzk_core::circuits::{parse_pair, StatePrepPair};
use qzk_core::helstrom::{advantage, algo_helstrom, exact_helstrom, plan_hh_with_delta, HHPlan};
use qzk_core::numerics::{fidelity_sq, operator_norm, trace_distance};
use qzk_core::protocols::{run_distance_test, run_fidelity_test};
use qzk_core::uhlmann::{
    algo_uhlmann, exact_uhlmann, overlap_sq, physical_overlap, plan_uhlmann_with_delta, UhlmannPlan,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{emit, Cell, RunRecord, Table};

/// Slack on the upper side of every two-sided bound.
pub const UPPER_SLACK: f64 = 1e-9;

pub struct Instance {
    pub source: String,
    pub pair: StatePrepPair,
}

pub fn load_instances(paths: &[PathBuf]) -> CliResult<Vec<Instance>> {
    if paths.is_empty() {
        return Err(CliError::Invalid("no pair files given".into()));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let pair = parse_pair(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Instance {
                source: p.display().to_string(),
                pair,
            })
        })
        .collect()
}

fn infeasible(e: qzk_core::Error, what: &str, cfg: &RunConfig, r: usize) -> CliError {
    match e {
        qzk_core::Error::DegreeCapExceeded { .. } => CliError::Infeasible(format!(
            "{e}; schedule: {what} eps_target = {}, r = {r}, delta override = {:?}, max_degree = {}",
            cfg.eps, cfg.delta, cfg.max_degree
        )),
        other => other.into(),
    }
}

fn distinct_r(instances: &[Instance]) -> Vec<usize> {
    let mut rs: Vec<usize> = instances.iter().map(|i| i.pair.r()).collect();
    rs.sort_unstable();
    rs.dedup();
    rs
}

/// Outcome of a batch run: number of rows whose bound check failed.
pub struct BatchSummary {
    pub rows: usize,
    pub failures: usize,
}

const HH_HEADER: [&str; 24] = [
    "instance",
    "source",
    "label",
    "n",
    "r",
    "seed",
    "mode",
    "eps",
    "delta",
    "eps_inner",
    "c_hat_sgn",
    "degree",
    "query_estimate",
    "trace_distance",
    "advantage_exact",
    "advantage_algo",
    "pi0_min_eig",
    "pi0_max_eig",
    "hadamard_deviation",
    "lower_ok",
    "upper_ok",
    "pass",
    "sampled_rate",
    "sampled_sigma",
];

#[derive(Serialize)]
struct HHMeasured {
    schedules: Vec<BTreeMap<&'static str, serde_json::Value>>,
}

pub fn cmd_hh(cfg: &RunConfig, paths: &[PathBuf], out: Option<&Path>) -> CliResult<BatchSummary> {
    let start = Instant::now();
    let mode = cfg.svt_mode()?;
    let instances = load_instances(paths)?;
    let mut plans: BTreeMap<usize, HHPlan> = BTreeMap::new();
    for r in distinct_r(&instances) {
        let plan = plan_hh_with_delta(cfg.eps, r, cfg.max_degree, cfg.delta)
            .map_err(|e| infeasible(e, "hh", cfg, r))?;
        log::info!(
            "hh schedule r = {r}: delta = {:e}, eps_inner = {:e}, c_hat = {:.6}, degree = {}",
            plan.schedule.delta,
            plan.schedule.eps_inner,
            plan.schedule.c_hat_sgn,
            plan.series.degree()
        );
        plans.insert(r, plan);
    }
    let plan_time = start.elapsed().as_secs_f64();

    let results: Vec<CliResult<(Vec<Cell>, bool, f64)>> = cfg.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| hh_row(cfg, mode, i, inst, &plans[&inst.pair.r()]))
            .collect()
    })?;
    let mut table = Table::new(HH_HEADER.to_vec());
    let mut failures = 0;
    let mut times = Vec::new();
    for res in results {
        let (row, pass, secs) = res?;
        failures += usize::from(!pass);
        times.push(secs);
        table.push(row);
    }
    let measured = HHMeasured {
        schedules: plans
            .values()
            .map(|p| {
                let s = &p.schedule;
                BTreeMap::from([
                    ("r", serde_json::json!(s.r)),
                    ("eps_target", serde_json::json!(qzk_core::format::sig17(s.eps_target))),
                    ("delta", serde_json::json!(qzk_core::format::sig17(s.delta))),
                    ("eps_inner", serde_json::json!(qzk_core::format::sig17(s.eps_inner))),
                    ("c_hat_sgn", serde_json::json!(qzk_core::format::sig17(s.c_hat_sgn))),
                    ("coeff_l1", serde_json::json!(qzk_core::format::sig17(p.series.coeff_l1()))),
                    ("degree", serde_json::json!(p.series.degree())),
                ])
            })
            .collect(),
    };
    let record = RunRecord {
        tool: "qzk",
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "hh",
        config: cfg,
        measured,
        rows: table.to_json_rows(),
        timings: serde_json::json!({
            "schedule_s": plan_time,
            "instance_s": times,
            "total_s": start.elapsed().as_secs_f64(),
        }),
    };
    emit(out, &table, &record)?;
    Ok(BatchSummary {
        rows: table.rows.len(),
        failures,
    })
}

fn hh_row(
    cfg: &RunConfig,
    mode: qzk_core::qsvt::SvtMode,
    index: usize,
    inst: &Instance,
    plan: &HHPlan,
) -> CliResult<(Vec<Cell>, bool, f64)> {
    let t = Instant::now();
    let pair = &inst.pair;
    let seed = cfg.seed.wrapping_add(index as u64);
    let (r0, r1) = pair.reduced_states()?;
    let td = trace_distance(&r0, &r1)?;
    let exact = exact_helstrom(&r0, &r1)?;
    let adv_exact = advantage(&exact, &r0, &r1)?;
    let algo = algo_helstrom(pair, plan, mode)?;
    let adv = advantage(&algo.measurement, &r0, &r1)?;
    let (lo, hi) = algo.measurement.spectrum_range()?;
    let mut hadamard_dev: f64 = 0.0;
    for rho in [&r0, &r1] {
        let via_circuit = algo.prob_zero_via_circuit(rho)?;
        hadamard_dev = hadamard_dev.max((via_circuit - algo.measurement.prob_zero(rho)?).abs());
    }
    let lower_ok = adv >= td - cfg.eps;
    let upper_ok = adv <= td + UPPER_SLACK;
    let spectrum_ok = lo >= -UPPER_SLACK && hi <= 1.0 + UPPER_SLACK;
    let pass = lower_ok && upper_ok && spectrum_ok && hadamard_dev <= 1e-10;
    let (rate, sigma) = if cfg.samples > 0 {
        let run = run_distance_test(pair, &algo.measurement, cfg.samples, seed)?;
        (Some(run.rate()), Some(run.sigma()))
    } else {
        (None, None)
    };
    let s = &plan.schedule;
    let row = vec![
        index.into(),
        inst.source.as_str().into(),
        pair.label.as_str().into(),
        pair.n().into(),
        pair.r().into(),
        seed.into(),
        mode.to_string().into(),
        cfg.eps.into(),
        s.delta.into(),
        s.eps_inner.into(),
        s.c_hat_sgn.into(),
        algo.transformed.degree.into(),
        algo.transformed.query_estimate.into(),
        td.into(),
        adv_exact.into(),
        adv.into(),
        lo.into(),
        hi.into(),
        hadamard_dev.into(),
        lower_ok.into(),
        upper_ok.into(),
        pass.into(),
        rate.into(),
        sigma.into(),
    ];
    Ok((row, pass, t.elapsed().as_secs_f64()))
}

const UHL_HEADER: [&str; 27] = [
    "instance",
    "source",
    "label",
    "n",
    "r",
    "seed",
    "mode",
    "eps",
    "delta",
    "b0",
    "b1",
    "k_const",
    "eps_inner",
    "c_hat_sgn",
    "degree",
    "query_estimate",
    "fidelity_sq",
    "overlap_exact",
    "overlap_algo",
    "accept_physical",
    "contraction_norm",
    "lower_ok",
    "upper_ok",
    "pass",
    "closing_residual",
    "sampled_rate",
    "sampled_sigma",
];

pub fn cmd_uhlmann(cfg: &RunConfig, paths: &[PathBuf], out: Option<&Path>) -> CliResult<BatchSummary> {
    let start = Instant::now();
    let mode = cfg.svt_mode()?;
    let instances = load_instances(paths)?;
    let mut plans: BTreeMap<usize, UhlmannPlan> = BTreeMap::new();
    for r in distinct_r(&instances) {
        let plan = plan_uhlmann_with_delta(cfg.eps, r, cfg.max_degree, cfg.delta)
            .map_err(|e| infeasible(e, "uhlmann", cfg, r))?;
        log::info!(
            "uhlmann schedule r = {r}: delta = {:e}, K = {:.6}, eps_inner = {:e}, degree = {}",
            plan.schedule.delta,
            plan.schedule.k_const,
            plan.schedule.eps_inner,
            plan.series.degree()
        );
        plans.insert(r, plan);
    }
    let plan_time = start.elapsed().as_secs_f64();

    let results: Vec<CliResult<(Vec<Cell>, bool, f64)>> = cfg.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| uhlmann_row(cfg, mode, i, inst, &plans[&inst.pair.r()]))
            .collect()
    })?;
    let mut table = Table::new(UHL_HEADER.to_vec());
    let mut failures = 0;
    let mut times = Vec::new();
    for res in results {
        let (row, pass, secs) = res?;
        failures += usize::from(!pass);
        times.push(secs);
        table.push(row);
    }
    let measured: Vec<BTreeMap<&'static str, serde_json::Value>> = plans
        .values()
        .map(|p| {
            let s = &p.schedule;
            let f = |x: f64| serde_json::json!(qzk_core::format::sig17(x));
            BTreeMap::from([
                ("r", serde_json::json!(s.r)),
                ("eps_target", f(s.eps_target)),
                ("delta", f(s.delta)),
                ("b0", f(s.b0)),
                ("b1", f(s.b1)),
                ("k_const", f(s.k_const)),
                ("eps_inner", f(s.eps_inner)),
                ("c_hat_sgn", f(s.c_hat_sgn)),
                ("coeff_l1", f(p.series.coeff_l1())),
                ("degree", serde_json::json!(p.series.degree())),
            ])
        })
        .collect();
    let record = RunRecord {
        tool: "qzk",
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "uhlmann",
        config: cfg,
        measured: serde_json::json!({ "schedules": measured }),
        rows: table.to_json_rows(),
        timings: serde_json::json!({
            "schedule_s": plan_time,
            "instance_s": times,
            "total_s": start.elapsed().as_secs_f64(),
        }),
    };
    emit(out, &table, &record)?;
    Ok(BatchSummary {
        rows: table.rows.len(),
        failures,
    })
}

fn uhlmann_row(
    cfg: &RunConfig,
    mode: qzk_core::qsvt::SvtMode,
    index: usize,
    inst: &Instance,
    plan: &UhlmannPlan,
) -> CliResult<(Vec<Cell>, bool, f64)> {
    let t = Instant::now();
    let pair = &inst.pair;
    let seed = cfg.seed.wrapping_add(index as u64);
    let (r0, r1) = pair.reduced_states()?;
    let f2 = fidelity_sq(&r0, &r1)?;
    let exact = exact_uhlmann(pair)?;
    let ov_exact = overlap_sq(pair, &exact)?;
    let algo = algo_uhlmann(pair, plan, mode)?;
    let ov = overlap_sq(pair, &algo.prover)?;
    let phys = physical_overlap(pair, &algo.prover)?;
    let norm = operator_norm(algo.prover.operator())?;
    let s = &plan.schedule;
    let lower_ok = ov >= f2 - cfg.eps;
    let upper_ok = ov <= f2 + UPPER_SLACK && phys <= f2 + UPPER_SLACK;
    let pass = lower_ok && upper_ok && norm <= 1.0 + UPPER_SLACK && s.closing_residual() >= -1e-6;
    let (rate, sigma) = if cfg.samples > 0 {
        let run = run_fidelity_test(pair, &algo.prover, cfg.samples, seed)?;
        (Some(run.rate()), Some(run.sigma()))
    } else {
        (None, None)
    };
    let row = vec![
        index.into(),
        inst.source.as_str().into(),
        pair.label.as_str().into(),
        pair.n().into(),
        pair.r().into(),
        seed.into(),
        mode.to_string().into(),
        cfg.eps.into(),
        s.delta.into(),
        s.b0.into(),
        s.b1.into(),
        s.k_const.into(),
        s.eps_inner.into(),
        s.c_hat_sgn.into(),
        algo.transformed.degree.into(),
        algo.transformed.query_estimate.into(),
        f2.into(),
        ov_exact.into(),
        ov.into(),
        phys.into(),
        norm.into(),
        lower_ok.into(),
        upper_ok.into(),
        pass.into(),
        s.closing_residual().into(),
        rate.into(),
        sigma.into(),
    ];
    Ok((row, pass, t.elapsed().as_secs_f64()))
}
