//! Protocol simulation: the distance test, the fidelity test, the
//! maximally-mixed closeness variant, and parallel repetition.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use qzk_core::circuits::parse_circuit;
use qzk_core::format::sig17;
use qzk_core::helstrom::{algo_helstrom, exact_helstrom, plan_hh_with_delta, MeasurementPair};
use qzk_core::numerics::{fidelity_sq, trace_distance};
use qzk_core::protocols::{
    distance_test_accept_prob, fidelity_test_accept_prob, qscmm_spec, repeated_accept_prob,
    repetition_params, run_distance_test, run_fidelity_test, run_repetition_sampled,
    simulate_distance_test, simulate_fidelity_test, ProtocolSpec, RepetitionParams, SampledRun,
};
use qzk_core::random::{random_povm_element, rng_for};
use qzk_core::uhlmann::{algo_uhlmann, channel_soundness_probe, exact_uhlmann, plan_uhlmann_with_delta};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{to_pretty_json, write_file};
use crate::runs::load_instances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Distance,
    Fidelity,
    Qscmm,
    /// Repetition statistics alone, from `--c` and `--s`.
    Repetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProverChoice {
    Exact,
    Algo,
    /// Best of random cheating strategies.
    Probe,
}

pub struct ProtocolArgs {
    pub kind: Kind,
    pub pair: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
    pub prover: ProverChoice,
    pub alpha: f64,
    pub beta: f64,
    pub c: Option<f64>,
    pub s: Option<f64>,
    pub l: Option<u64>,
    pub q: Option<u64>,
    pub trials: usize,
    pub transcripts: u64,
}

fn f(x: f64) -> Value {
    Value::String(sig17(x))
}

fn sampled_json(run: &SampledRun) -> Value {
    json!({
        "seed": run.seed,
        "samples": run.samples,
        "accepted": run.accepted,
        "rate": f(run.rate()),
        "sigma": f(run.sigma()),
        "within_3_sigma": run.within_sigmas(3.0),
    })
}

fn classify(value: f64, alpha: f64, beta: f64) -> &'static str {
    if value >= alpha {
        "yes"
    } else if value <= beta {
        "no"
    } else {
        "outside-promise"
    }
}

/// Result of one protocol run: the JSON document and the summary lines.
pub struct ProtocolOutcome {
    pub document: Value,
    pub summary: Vec<String>,
    pub circuit_mismatch: bool,
}

pub fn cmd_protocol(cfg: &RunConfig, args: &ProtocolArgs, out: Option<&Path>) -> CliResult<ProtocolOutcome> {
    let start = Instant::now();
    let mut outcome = match args.kind {
        Kind::Distance => distance(cfg, args)?,
        Kind::Fidelity | Kind::Qscmm => fidelity(cfg, args)?,
        Kind::Repetition => repetition_only(cfg, args)?,
    };
    outcome.document["config"] = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    outcome.document["tool"] = json!("qzk");
    outcome.document["tool_version"] = json!(env!("CARGO_PKG_VERSION"));
    outcome.document["timings"] = json!({ "total_s": start.elapsed().as_secs_f64() });
    if let Some(path) = out {
        write_file(path, &to_pretty_json(&outcome.document)?)?;
    }
    Ok(outcome)
}

fn repetition_block(
    cfg: &RunConfig,
    args: &ProtocolArgs,
    c: f64,
    s: f64,
    p_instance: Option<f64>,
    summary: &mut Vec<String>,
) -> CliResult<Option<Value>> {
    let (l, q) = match (args.l, args.q) {
        (Some(l), Some(q)) => (l, q),
        (None, None) => return Ok(None),
        _ => return Err(CliError::Invalid("--l and --q must be given together".into())),
    };
    let params: RepetitionParams = repetition_params(l, q, c, s)?;
    let yes = repeated_accept_prob(c, &params)?;
    let no = repeated_accept_prob(s, &params)?;
    let guarantee = 1.0 - 0.5f64.powi(l as i32);
    summary.push(format!(
        "repetition l={l} q={q}: t0={} t1={} threshold={} min_votes={}",
        params.t0,
        params.t1,
        sig17(params.threshold),
        params.min_votes
    ));
    summary.push(format!(
        "repetition yes (p=c={}) = {}  [>= {}: {}]",
        sig17(c),
        sig17(yes),
        sig17(guarantee),
        yes >= guarantee
    ));
    summary.push(format!(
        "repetition no  (p=s={}) = {}  [<= {}: {}]",
        sig17(s),
        sig17(no),
        sig17(1.0 - guarantee),
        no <= 1.0 - guarantee
    ));
    let mut block = json!({
        "params": params,
        "yes": f(yes),
        "no": f(no),
        "yes_meets_guarantee": yes >= guarantee,
        "no_meets_guarantee": no <= 1.0 - guarantee,
    });
    let mut sampled = Vec::new();
    let mut points = vec![("c", c), ("s", s)];
    if let Some(p) = p_instance {
        let at = repeated_accept_prob(p, &params)?;
        block["instance"] = json!({ "p_single": f(p), "accept": f(at) });
        summary.push(format!("repetition at instance p={} = {}", sig17(p), sig17(at)));
        points.push(("instance", p));
    }
    if args.transcripts > 0 {
        for (name, p) in points {
            let analytic = repeated_accept_prob(p, &params)?;
            let mut hits = 0u64;
            for k in 0..args.transcripts {
                let seed = cfg.seed.wrapping_add(k);
                hits += u64::from(run_repetition_sampled(p, &params, seed)?.accepted);
            }
            let run = SampledRun {
                seed: cfg.seed,
                samples: args.transcripts,
                accepted: hits,
                analytic,
            };
            summary.push(format!(
                "repetition sampled at {name}: {}/{} (analytic {})",
                hits,
                args.transcripts,
                sig17(analytic)
            ));
            sampled.push(json!({ "point": name, "p_single": f(p), "run": sampled_json(&run) }));
        }
        let first = run_repetition_sampled(p_instance.unwrap_or(c), &params, cfg.seed)?;
        block["first_transcript"] = serde_json::to_value(&first).map_err(|e| CliError::Io(e.to_string()))?;
    }
    block["sampled"] = Value::Array(sampled);
    Ok(Some(block))
}

fn repetition_only(cfg: &RunConfig, args: &ProtocolArgs) -> CliResult<ProtocolOutcome> {
    let (Some(c), Some(s)) = (args.c, args.s) else {
        return Err(CliError::Invalid("repetition needs --c and --s".into()));
    };
    let mut summary = Vec::new();
    let block = repetition_block(cfg, args, c, s, None, &mut summary)?
        .ok_or_else(|| CliError::Invalid("repetition needs --l and --q".into()))?;
    Ok(ProtocolOutcome {
        document: json!({ "kind": "repetition", "repetition": block }),
        summary,
        circuit_mismatch: false,
    })
}

fn single_pair(args: &ProtocolArgs) -> CliResult<qzk_core::circuits::StatePrepPair> {
    let path = args
        .pair
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--pair is required for this protocol".into()))?;
    Ok(load_instances(std::slice::from_ref(path))?.remove(0).pair)
}

fn distance(cfg: &RunConfig, args: &ProtocolArgs) -> CliResult<ProtocolOutcome> {
    let spec = ProtocolSpec::distance_test(args.alpha, args.beta, cfg.eps)?;
    let pair = single_pair(args)?;
    let (r0, r1) = pair.reduced_states()?;
    let t = trace_distance(&r0, &r1)?;
    let mut summary = vec![format!(
        "distance test: T = {} ({}), c = {}, s = {}",
        sig17(t),
        classify(t, spec.alpha, spec.beta),
        sig17(spec.completeness),
        sig17(spec.soundness)
    )];
    let ceiling = 0.5 + 0.5 * t;
    let mut doc = json!({ "kind": "distance", "spec": spec, "trace_distance": f(t), "ceiling": f(ceiling) });

    let measurement: MeasurementPair = match args.prover {
        ProverChoice::Exact => exact_helstrom(&r0, &r1)?,
        ProverChoice::Algo => {
            let plan = plan_hh_with_delta(cfg.eps, pair.r(), cfg.max_degree, cfg.delta)?;
            doc["degree"] = json!(plan.series.degree());
            algo_helstrom(&pair, &plan, cfg.svt_mode()?)?.measurement
        }
        ProverChoice::Probe => {
            if args.trials == 0 {
                return Err(CliError::Invalid("--trials must be at least 1".into()));
            }
            let mut rng = rng_for(cfg.seed, 0);
            let mut best: Option<(f64, MeasurementPair)> = None;
            for _ in 0..args.trials {
                let m = MeasurementPair::custom(random_povm_element(1 << pair.r(), 0.3, &mut rng))?;
                let p = distance_test_accept_prob(&m, &r0, &r1)?;
                if best.as_ref().is_none_or(|(b, _)| p > *b) {
                    best = Some((p, m));
                }
            }
            let (p, m) = best.expect("at least one trial");
            doc["probe"] = json!({ "trials": args.trials, "max_accept": f(p), "below_ceiling": p <= ceiling + 1e-9 });
            summary.push(format!(
                "probe: best of {} random POVMs accepts with {} (ceiling {})",
                args.trials,
                sig17(p),
                sig17(ceiling)
            ));
            m
        }
    };
    let analytic = distance_test_accept_prob(&measurement, &r0, &r1)?;
    let circuit = simulate_distance_test(&pair, &measurement)?;
    let mismatch = (analytic - circuit).abs() > 1e-10;
    summary.push(format!(
        "acceptance: analytic {} circuit {}",
        sig17(analytic),
        sig17(circuit)
    ));
    doc["analytic"] = f(analytic);
    doc["circuit"] = f(circuit);
    if cfg.samples > 0 {
        let run = run_distance_test(&pair, &measurement, cfg.samples, cfg.seed)?;
        summary.push(format!(
            "sampled: {}/{} = {} (3 sigma band {})",
            run.accepted,
            run.samples,
            sig17(run.rate()),
            sig17(3.0 * run.sigma())
        ));
        doc["sampled"] = sampled_json(&run);
    }
    let (c, s) = (args.c.unwrap_or(spec.completeness), args.s.unwrap_or(spec.soundness));
    if let Some(block) = repetition_block(cfg, args, c, s, Some(analytic), &mut summary)? {
        doc["repetition"] = block;
    }
    Ok(ProtocolOutcome {
        document: doc,
        summary,
        circuit_mismatch: mismatch,
    })
}

fn fidelity(cfg: &RunConfig, args: &ProtocolArgs) -> CliResult<ProtocolOutcome> {
    let (pair, spec) = if args.kind == Kind::Qscmm {
        let path = args
            .circuit
            .as_ref()
            .ok_or_else(|| CliError::Invalid("--circuit is required for qscmm".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let q1 = parse_circuit(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        qscmm_spec(q1, args.alpha, args.beta, cfg.eps)?
    } else {
        (single_pair(args)?, ProtocolSpec::fidelity_test(args.alpha, args.beta, cfg.eps)?)
    };
    let (r0, r1) = pair.reduced_states()?;
    let f2 = fidelity_sq(&r0, &r1)?;
    let name = if args.kind == Kind::Qscmm { "qscmm" } else { "fidelity" };
    let mut summary = vec![format!(
        "{name} test: F^2 = {} ({}), c = {}, s = {}",
        sig17(f2),
        classify(f2, spec.alpha, spec.beta),
        sig17(spec.completeness),
        sig17(spec.soundness)
    )];
    let mut doc = json!({ "kind": name, "spec": spec, "fidelity_sq": f(f2), "ceiling": f(f2) });
    let prover = match args.prover {
        ProverChoice::Exact => exact_uhlmann(&pair)?,
        ProverChoice::Algo => {
            let plan = plan_uhlmann_with_delta(cfg.eps, pair.r(), cfg.max_degree, cfg.delta)?;
            doc["degree"] = json!(plan.series.degree());
            algo_uhlmann(&pair, &plan, cfg.svt_mode()?)?.prover
        }
        ProverChoice::Probe => {
            if args.trials == 0 {
                return Err(CliError::Invalid("--trials must be at least 1".into()));
            }
            let report = channel_soundness_probe(&pair, args.trials, cfg.seed)?;
            doc["probe"] = json!({
                "trials": report.trials,
                "max_accept": f(report.max_overlap),
                "identity_accept": f(report.identity_overlap),
                "below_ceiling": report.bound_holds,
            });
            summary.push(format!(
                "probe: best of {} random unitaries/channels accepts with {} (ceiling {})",
                args.trials,
                sig17(report.max_overlap),
                sig17(f2)
            ));
            qzk_core::uhlmann::ProverOperator::identity(1 << (pair.n() - pair.r()))
        }
    };
    let analytic = fidelity_test_accept_prob(&pair, &prover)?;
    let circuit = simulate_fidelity_test(&pair, &prover)?;
    let mismatch = (analytic - circuit).abs() > 1e-10;
    summary.push(format!(
        "acceptance: analytic {} circuit {}",
        sig17(analytic),
        sig17(circuit)
    ));
    doc["analytic"] = f(analytic);
    doc["circuit"] = f(circuit);
    if cfg.samples > 0 {
        let run = run_fidelity_test(&pair, &prover, cfg.samples, cfg.seed)?;
        summary.push(format!(
            "sampled: {}/{} = {} (3 sigma band {})",
            run.accepted,
            run.samples,
            sig17(run.rate()),
            sig17(3.0 * run.sigma())
        ));
        doc["sampled"] = sampled_json(&run);
    }
    let (c, s) = (args.c.unwrap_or(spec.completeness), args.s.unwrap_or(spec.soundness));
    if let Some(block) = repetition_block(cfg, args, c, s, Some(analytic), &mut summary)? {
        doc["repetition"] = block;
    }
    Ok(ProtocolOutcome {
        document: doc,
        summary,
        circuit_mismatch: mismatch,
    })
}
