//! Fixed-seed invariant battery. Every check can be sabotaged by name through
//! a sign flip in its measured quantity, which must make it fail.

use qzk_core::blockenc::{block_of, halved_difference_encoding, uhlmann_encoding};
use qzk_core::circuits::{parse_pair, random_pair, serialize_pair};
use qzk_core::format::sig17;
use qzk_core::helstrom::{advantage, algo_helstrom, exact_helstrom, plan_hh, MeasurementPair};
use qzk_core::numerics::{
    fidelity_sq, max_abs_diff, partial_trace, outer, svd, trace, trace_distance, CMatrix,
};
use qzk_core::protocols::{
    distance_test_accept_prob, fidelity_test_accept_prob, qsc_to_f2est, repeated_accept_prob,
    repetition_params, simulate_distance_test, simulate_fidelity_test,
};
use qzk_core::qsvt::{chebyshev_apply, hadamard_test_prob, sv_transform_oracle, Parity, SvtMode};
use qzk_core::random::{ginibre, random_density, random_hermitian, random_povm_element, rng_for};
use qzk_core::signpoly::{build_sign_poly, verify_bounds, SignPolyRequest, DEFAULT_MAX_DEGREE};
use qzk_core::uhlmann::{algo_uhlmann, channel_soundness_probe, exact_uhlmann, overlap_sq, plan_uhlmann, x_uhl};
use qzk_core::blockenc::BlockEncoding;

use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Error target for the algorithmic checks; large enough to keep degrees small.
pub const SELFTEST_EPS: f64 = 0.1;
pub const SELFTEST_SEED: u64 = 2024;

type Check = fn(f64) -> qzk_core::Result<(bool, String)>;

pub struct Invariant {
    pub name: &'static str,
    pub property: &'static str,
    check: Check,
}

pub const REGISTRY: &[Invariant] = &[
    Invariant { name: "numerics.svd_reconstruction", property: "A = U S V^dagger with unitary factors", check: svd_reconstruction },
    Invariant { name: "numerics.fuchs_van_de_graaf", property: "1 - F <= T <= sqrt(1 - F^2)", check: fuchs_van_de_graaf },
    Invariant { name: "circuits.purification", property: "Tr_R |psi><psi| = reduced state", check: purification },
    Invariant { name: "circuits.serialization", property: "parse(serialize(pair)) = pair", check: serialization },
    Invariant { name: "signpoly.bounds", property: "|P - sgn| <= C_sgn eps off the band, |P| <= 1", check: signpoly_bounds },
    Invariant { name: "blockenc.halved_difference", property: "block = (rho0 - rho1)/2", check: halved_difference },
    Invariant { name: "blockenc.uhlmann", property: "block = Tr_A |psi0><psi1|", check: uhlmann_block },
    Invariant { name: "qsvt.mode_equivalence", property: "recurrence = SVD oracle", check: mode_equivalence },
    Invariant { name: "qsvt.hadamard_test", property: "P(0) = (1 + Re Tr(A rho))/2", check: hadamard },
    Invariant { name: "helstrom.exact_identity", property: "advantage of exact measurement = T", check: helstrom_exact },
    Invariant { name: "helstrom.algorithmic_bound", property: "T - eps <= advantage <= T", check: helstrom_algo },
    Invariant { name: "helstrom.povm_ceiling", property: "any POVM advantage <= T", check: helstrom_ceiling },
    Invariant { name: "uhlmann.exact_identity", property: "overlap of exact transform = F^2", check: uhlmann_exact },
    Invariant { name: "uhlmann.trace_norm", property: "||Tr_A |psi0><psi1| ||_1 = F", check: uhlmann_trace_norm },
    Invariant { name: "uhlmann.algorithmic_bound", property: "F^2 - eps <= overlap <= F^2", check: uhlmann_algo },
    Invariant { name: "uhlmann.channel_ceiling", property: "any channel overlap <= F^2", check: uhlmann_ceiling },
    Invariant { name: "protocols.distance_circuit", property: "circuit acceptance = 1/2 + advantage/2", check: distance_circuit },
    Invariant { name: "protocols.fidelity_circuit", property: "circuit acceptance = overlap", check: fidelity_circuit },
    Invariant { name: "protocols.repetition", property: "yes >= 1 - 2^-l, no <= 2^-l", check: repetition },
    Invariant { name: "protocols.qsc_mapping", property: "(alpha, beta) -> (1 - beta, 1 - alpha^2)", check: qsc_mapping },
];

fn pair(k: u64) -> qzk_core::Result<qzk_core::circuits::StatePrepPair> {
    random_pair(3, 1 + (k as usize % 2), 20, SELFTEST_SEED + k)
}

fn report(pass: bool, label: &str, value: f64) -> (bool, String) {
    (pass, format!("{label} = {}", sig17(value)))
}

fn svd_reconstruction(sign: f64) -> qzk_core::Result<(bool, String)> {
    let mut rng = rng_for(SELFTEST_SEED, 1);
    let a = ginibre(6, 4, &mut rng);
    let dec = svd(&a)?;
    let err = max_abs_diff(&dec.reconstruct().scale(sign), &a);
    Ok(report(err <= 1e-12, "max |USV^dagger - A|", err))
}

fn fuchs_van_de_graaf(sign: f64) -> qzk_core::Result<(bool, String)> {
    let mut rng = rng_for(SELFTEST_SEED, 2);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let (r0, r1) = (random_density(4, 2, &mut rng), random_density(4, 3, &mut rng));
        let t = sign * trace_distance(&r0, &r1)?;
        let f = fidelity_sq(&r0, &r1)?.sqrt();
        worst = worst.min(t - (1.0 - f)).min((1.0 - f * f).sqrt() - t);
    }
    Ok(report(worst >= -1e-10, "min slack", worst))
}

fn purification(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(0)?;
    let psi = p.q0.purification()?;
    let (n, r) = (p.n(), p.r());
    let reduced = partial_trace(&outer(&psi, &psi), &[1 << r, 1 << (n - r)], &[1])?;
    let err = max_abs_diff(&reduced.scale(sign), &p.q0.reduced_state()?);
    Ok(report(err <= 1e-12, "max deviation", err))
}

fn serialization(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(1)?;
    let back = parse_pair(&serialize_pair(&p))?;
    let (a, _) = p.reduced_states()?;
    let (b, _) = back.reduced_states()?;
    let err = max_abs_diff(&a, &b.scale(sign));
    Ok(report(err == 0.0, "max deviation", err))
}

fn signpoly_bounds(sign: f64) -> qzk_core::Result<(bool, String)> {
    let s = build_sign_poly(&SignPolyRequest::new(0.1, 1e-3, DEFAULT_MAX_DEGREE)?)?;
    let flipped = s.scaled(sign);
    let b = verify_bounds(&flipped, 20_001);
    Ok(report(b.pass, "max error off band", b.max_err_outside_band))
}

fn halved_difference(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(2)?;
    let (r0, r1) = p.reduced_states()?;
    let be = halved_difference_encoding(&p)?;
    let err = max_abs_diff(&block_of(&be), &(&r0 - &r1).scale(0.5 * sign));
    Ok(report(err <= 1e-12, "max deviation", err))
}

fn uhlmann_block(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(3)?;
    let be = uhlmann_encoding(&p)?;
    let err = max_abs_diff(&block_of(&be), &x_uhl(&p)?.scale(sign));
    Ok(report(err <= 1e-12, "max deviation", err))
}

fn mode_equivalence(sign: f64) -> qzk_core::Result<(bool, String)> {
    let s = build_sign_poly(&SignPolyRequest::new(0.1, 1e-3, DEFAULT_MAX_DEGREE)?)?;
    let mut rng = rng_for(SELFTEST_SEED, 3);
    let a = random_hermitian(16, 1.0, &mut rng);
    let cheb = chebyshev_apply(&s, &a)?;
    let oracle = sv_transform_oracle(|x| s.eval_unchecked(x.min(1.0)), Parity::Odd, &a)?;
    let err = max_abs_diff(&cheb, &oracle.scale(sign));
    Ok(report(err <= 1e-9, "max deviation", err))
}

fn hadamard(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(4)?;
    let be: BlockEncoding = halved_difference_encoding(&p)?;
    let mut rng = rng_for(SELFTEST_SEED, 4);
    let rho = random_density(be.system_dim(), 2, &mut rng);
    let a: CMatrix = block_of(&be);
    let closed = 0.5 * (1.0 + sign * trace(&(&a * &rho)).re);
    let err = (hadamard_test_prob(&be, &rho)? - closed).abs();
    Ok(report(err <= 1e-10, "deviation", err))
}

fn helstrom_exact(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(5)?;
    let (r0, r1) = p.reduced_states()?;
    let m = exact_helstrom(&r0, &r1)?;
    let err = (sign * advantage(&m, &r0, &r1)? - trace_distance(&r0, &r1)?).abs();
    Ok(report(err <= 1e-10, "|advantage - T|", err))
}

fn helstrom_algo(sign: f64) -> qzk_core::Result<(bool, String)> {
    let plan = plan_hh(SELFTEST_EPS, 1, DEFAULT_MAX_DEGREE)?;
    let p = random_pair(3, 1, 20, SELFTEST_SEED + 6)?;
    let (r0, r1) = p.reduced_states()?;
    let t = trace_distance(&r0, &r1)?;
    let algo = algo_helstrom(&p, &plan, SvtMode::Chebyshev)?;
    let adv = sign * advantage(&algo.measurement, &r0, &r1)?;
    Ok(report(t - SELFTEST_EPS <= adv && adv <= t + 1e-9, "advantage - T", adv - t))
}

fn helstrom_ceiling(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(7)?;
    let (r0, r1) = p.reduced_states()?;
    let t = trace_distance(&r0, &r1)?;
    let mut rng = rng_for(SELFTEST_SEED, 7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let m = MeasurementPair::custom(random_povm_element(r0.nrows(), 0.3, &mut rng))?;
        worst = worst.max(advantage(&m, &r0, &r1)? - t);
    }
    // the sabotaged version compares against -T
    let excess = if sign < 0.0 { worst + 2.0 * t } else { worst };
    Ok(report(excess <= 1e-9, "max advantage - T", excess))
}

fn uhlmann_exact(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(8)?;
    let (r0, r1) = p.reduced_states()?;
    let err = (sign * overlap_sq(&p, &exact_uhlmann(&p)?)? - fidelity_sq(&r0, &r1)?).abs();
    Ok(report(err <= 1e-9, "|overlap - F^2|", err))
}

fn uhlmann_trace_norm(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(9)?;
    let (r0, r1) = p.reduced_states()?;
    let tn: f64 = svd(&x_uhl(&p)?)?.singulars.iter().sum();
    let err = (sign * tn - fidelity_sq(&r0, &r1)?.sqrt()).abs();
    Ok(report(err <= 1e-9, "|trace norm - F|", err))
}

fn uhlmann_algo(sign: f64) -> qzk_core::Result<(bool, String)> {
    let plan = plan_uhlmann(SELFTEST_EPS, 1, DEFAULT_MAX_DEGREE)?;
    let p = random_pair(3, 1, 20, SELFTEST_SEED + 10)?;
    let (r0, r1) = p.reduced_states()?;
    let f2 = fidelity_sq(&r0, &r1)?;
    let algo = algo_uhlmann(&p, &plan, SvtMode::Chebyshev)?;
    let ov = sign * overlap_sq(&p, &algo.prover)?;
    let residual_ok = plan.schedule.closing_residual() >= -1e-6;
    Ok(report(
        residual_ok && f2 - SELFTEST_EPS <= ov && ov <= f2 + 1e-9,
        "overlap - F^2",
        ov - f2,
    ))
}

fn uhlmann_ceiling(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(11)?;
    let r = channel_soundness_probe(&p, 200, SELFTEST_SEED)?;
    let excess = r.max_overlap - sign * r.fidelity_sq;
    Ok(report(excess <= 1e-9, "max overlap - F^2", excess))
}

fn distance_circuit(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(12)?;
    let (r0, r1) = p.reduced_states()?;
    let m = exact_helstrom(&r0, &r1)?;
    let analytic = distance_test_accept_prob(&m, &r0, &r1)?;
    let err = (simulate_distance_test(&p, &m)? - sign * analytic).abs();
    Ok(report(err <= 1e-10, "|circuit - analytic|", err))
}

fn fidelity_circuit(sign: f64) -> qzk_core::Result<(bool, String)> {
    let p = pair(13)?;
    let u = exact_uhlmann(&p)?;
    let analytic = fidelity_test_accept_prob(&p, &u)?;
    let err = (simulate_fidelity_test(&p, &u)? - sign * analytic).abs();
    Ok(report(err <= 1e-10, "|circuit - analytic|", err))
}

fn repetition(sign: f64) -> qzk_core::Result<(bool, String)> {
    let params = repetition_params(2, 2, 0.8, 0.3)?;
    let yes = repeated_accept_prob(0.8, &params)?;
    let no = repeated_accept_prob(0.3, &params)?;
    let margin = (sign * (yes - 0.75)).min(0.25 - no);
    Ok(report(margin >= 0.0, "min margin", margin))
}

fn qsc_mapping(sign: f64) -> qzk_core::Result<(bool, String)> {
    let (c, s) = qsc_to_f2est(0.9, 0.1)?;
    let err = (c - 0.9).abs().max((sign * s - 0.19).abs());
    Ok(report(err <= 1e-15, "max deviation", err))
}

#[derive(Debug, Clone)]
pub struct SelftestRow {
    pub name: &'static str,
    pub property: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Runs every registered invariant; `fault` names one to sabotage.
pub fn run(fault: Option<&str>) -> CliResult<Vec<SelftestRow>> {
    if let Some(name) = fault {
        if !REGISTRY.iter().any(|inv| inv.name == name) {
            return Err(CliError::Invalid(format!("no invariant named '{name}'")));
        }
    }
    Ok(REGISTRY
        .iter()
        .map(|inv| {
            let sign = if fault == Some(inv.name) { -1.0 } else { 1.0 };
            let (pass, detail) = match (inv.check)(sign) {
                Ok(res) => res,
                Err(e) => (false, format!("error: {e}")),
            };
            log::debug!("{}: {pass} ({detail})", inv.name);
            SelftestRow {
                name: inv.name,
                property: inv.property,
                pass,
                detail,
            }
        })
        .collect())
}

pub fn table(rows: &[SelftestRow]) -> Table {
    let mut t = Table::new(vec!["invariant", "property", "pass", "detail"]);
    for r in rows {
        t.push(vec![
            Cell::from(r.name),
            Cell::from(r.property),
            Cell::from(r.pass),
            Cell::from(r.detail.clone()),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = REGISTRY.iter().map(|i| i.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
    }

    #[test]
    fn clean_run_passes_and_every_fault_is_caught() {
        let rows = run(None).unwrap();
        for r in &rows {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
        for inv in REGISTRY {
            let rows = run(Some(inv.name)).unwrap();
            let failed: Vec<_> = rows.iter().filter(|r| !r.pass).map(|r| r.name).collect();
            assert_eq!(failed, vec![inv.name]);
        }
        assert!(run(Some("nope")).is_err());
    }
}
