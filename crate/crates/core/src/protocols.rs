//! The two-message distance and fidelity tests, the closeness-to-maximally-mixed
//! specialization, and parallel repetition with per-batch threshold votes.
//!
//! Acceptance probabilities are computed analytically, by direct statevector
//! simulation of the verifier's circuit, and by Monte-Carlo sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::circuits::{amplitude_matrix, apply_matrix, epr_prep, Circuit, StatePrepPair};
use crate::helstrom::{sample_outcome, MeasurementPair};
use crate::numerics::{complete_to_unitary, psd_sqrt, CMatrix};
use crate::random::rng_for;
use crate::uhlmann::{physical_overlap, ProverOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    DistanceTest,
    FidelityTest,
    Qscmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub alpha: f64,
    pub beta: f64,
    /// Error of the honest prover's schedule.
    pub eps: f64,
    pub completeness: f64,
    pub soundness: f64,
}

fn check_thresholds(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0 <= beta && beta < alpha && alpha <= 1.0) {
        return Err(Error::InvalidThresholds(format!(
            "need 0 <= beta < alpha <= 1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(())
}

impl ProtocolSpec {
    /// `c = (1 + alpha - eps) / 2`, `s = (1 + beta) / 2`
    pub fn distance_test(alpha: f64, beta: f64, eps: f64) -> Result<Self> {
        check_thresholds(alpha, beta)?;
        Ok(ProtocolSpec {
            kind: ProtocolKind::DistanceTest,
            alpha,
            beta,
            eps,
            completeness: (1.0 + alpha - eps) / 2.0,
            soundness: (1.0 + beta) / 2.0,
        })
    }

    /// `c = alpha - eps`, `s = beta`
    pub fn fidelity_test(alpha: f64, beta: f64, eps: f64) -> Result<Self> {
        check_thresholds(alpha, beta)?;
        Ok(ProtocolSpec {
            kind: ProtocolKind::FidelityTest,
            alpha,
            beta,
            eps,
            completeness: alpha - eps,
            soundness: beta,
        })
    }
}

/// `1/2 + (Tr(pi0 rho0) - Tr(pi0 rho1)) / 2`
pub fn distance_test_accept_prob(m: &MeasurementPair, rho0: &CMatrix, rho1: &CMatrix) -> Result<f64> {
    Ok(0.5 + 0.5 * (m.prob_zero(rho0)? - m.prob_zero(rho1)?))
}

/// Naimark unitary on `[ancilla, A]` whose first `d` columns are
/// `[sqrt(pi0); sqrt(pi1)]`.
pub fn naimark_unitary(m: &MeasurementPair) -> Result<CMatrix> {
    let d = m.dim();
    let mut iso = CMatrix::zeros(2 * d, d);
    iso.view_mut((0, 0), (d, d)).copy_from(&psd_sqrt(&m.pi0)?);
    iso.view_mut((d, 0), (d, d)).copy_from(&psd_sqrt(&m.pi1)?);
    Ok(complete_to_unitary(&iso))
}

/// Distance-test acceptance from the verifier's circuit: for each `b`, prepare
/// `|psi_b>` on `(A, R)`, let the prover run the Naimark unitary on
/// `[ancilla, A]` and read the ancilla; accept when it equals `b`.
pub fn simulate_distance_test(pair: &StatePrepPair, m: &MeasurementPair) -> Result<f64> {
    let (n, r) = (pair.n(), pair.r());
    if m.dim() != 1 << r {
        return Err(Error::DimensionMismatch(format!(
            "measurement acts on dimension {}, output register has dimension {}",
            m.dim(),
            1usize << r
        )));
    }
    let u = naimark_unitary(m)?;
    let d = m.dim();
    let (psi0, psi1) = pair.purifications()?;
    let mut accept = 0.0;
    for (b, psi) in [psi0, psi1].iter().enumerate() {
        let amps = amplitude_matrix(psi, r, n);
        // ancilla starts in |0>, so only the first d columns of u contribute
        let out = u.columns(0, d) * amps;
        accept += 0.5 * out.rows(b * d, d).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(accept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledRun {
    pub seed: u64,
    pub samples: u64,
    pub accepted: u64,
    pub analytic: f64,
}

impl SampledRun {
    pub fn rate(&self) -> f64 {
        self.accepted as f64 / self.samples as f64
    }

    /// `sqrt(p (1 - p) / samples)` at the analytic `p`.
    pub fn sigma(&self) -> f64 {
        (self.analytic * (1.0 - self.analytic) / self.samples as f64).sqrt()
    }

    /// Whether the empirical rate lies within `k` standard deviations. A
    /// degenerate `p` in {0, 1} must be matched exactly.
    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.rate() - self.analytic).abs() <= k * self.sigma() + 1e-12
    }
}

/// Monte-Carlo run of the distance test: the verifier draws `b` uniformly,
/// sends `rho_b`, and accepts when the prover's outcome equals `b`.
pub fn run_distance_test(pair: &StatePrepPair, m: &MeasurementPair, samples: u64, seed: u64) -> Result<SampledRun> {
    if samples == 0 {
        return Err(Error::InvalidRequest("samples must be at least 1".into()));
    }
    let (rho0, rho1) = pair.reduced_states()?;
    let analytic = distance_test_accept_prob(m, &rho0, &rho1)?;
    let mut rng = rng_for(seed, 0);
    let mut accepted = 0;
    for _ in 0..samples {
        let b: u8 = rng.random_range(0..2);
        let rho = if b == 0 { &rho0 } else { &rho1 };
        if sample_outcome(m, rho, &mut rng)? == b {
            accepted += 1;
        }
    }
    Ok(SampledRun {
        seed,
        samples,
        accepted,
        analytic,
    })
}

/// Fidelity-test acceptance for the prover as physically carried out; for a
/// unitary or channel this is the overlap `|<psi0|(I (x) U)|psi1>|^2`.
pub fn fidelity_test_accept_prob(pair: &StatePrepPair, prover: &ProverOperator) -> Result<f64> {
    physical_overlap(pair, prover)
}

/// Final statevector of the fidelity test on `[prover ancillas, A, R]`:
/// `Q1` prepares `(A, R)`, the prover applies its dilation to
/// `[ancillas, R]`, the verifier undoes `Q0`. Returns it with the ancilla count.
pub fn fidelity_test_final_state(
    pair: &StatePrepPair,
    prover: &ProverOperator,
) -> Result<(Vec<num_complex::Complex64>, usize)> {
    let (n, r) = (pair.n(), pair.r());
    if prover.dim() != 1 << (n - r) {
        return Err(Error::DimensionMismatch(format!(
            "prover acts on dimension {}, reference register has dimension {}",
            prover.dim(),
            1usize << (n - r)
        )));
    }
    let (u, a) = prover.dilation()?;
    let total = a + n;
    if total > crate::circuits::MAX_WIDTH {
        return Err(Error::TooWide {
            qubits: total,
            limit: crate::circuits::MAX_WIDTH,
        });
    }
    let mut state = vec![num_complex::Complex64::new(0.0, 0.0); 1 << total];
    state[0] = num_complex::Complex64::new(1.0, 0.0);
    pair.q1.apply_embedded(&mut state, total, a);
    let targets: Vec<usize> = (0..a).chain(a + r..a + n).collect();
    apply_matrix(&mut state, total, &targets, &u);
    pair.q0.adjoint().apply_embedded(&mut state, total, a);
    Ok((state, a))
}

/// Probability that `(A, R)` reads all zeros at the end of the fidelity test.
pub fn simulate_fidelity_test(pair: &StatePrepPair, prover: &ProverOperator) -> Result<f64> {
    let (state, a) = fidelity_test_final_state(pair, prover)?;
    let n = pair.n();
    Ok((0..1usize << a).map(|k| state[k << n].norm_sqr()).sum())
}

/// Monte-Carlo run of the fidelity test, sampling full measurement outcomes
/// from the final state.
pub fn run_fidelity_test(pair: &StatePrepPair, prover: &ProverOperator, samples: u64, seed: u64) -> Result<SampledRun> {
    if samples == 0 {
        return Err(Error::InvalidRequest("samples must be at least 1".into()));
    }
    let analytic = fidelity_test_accept_prob(pair, prover)?;
    let (state, _) = fidelity_test_final_state(pair, prover)?;
    let weights: Vec<f64> = state.iter().map(|z| z.norm_sqr()).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidRequest(format!("final state has no weight: {e}")))?;
    let mask = (1usize << pair.n()) - 1;
    let mut rng = rng_for(seed, 0);
    let accepted = (0..samples)
        .filter(|_| dist.sample(&mut rng) & mask == 0)
        .count() as u64;
    Ok(SampledRun {
        seed,
        samples,
        accepted,
        analytic,
    })
}

/// `(c_hat, s_hat) = (1 - beta, 1 - alpha^2)`
pub fn qsc_to_f2est(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_thresholds(alpha, beta)?;
    let (c_hat, s_hat) = (1.0 - beta, 1.0 - alpha * alpha);
    if c_hat <= s_hat {
        return Err(Error::GapNonpositive { gap: c_hat - s_hat });
    }
    Ok((c_hat, s_hat))
}

/// Closeness of `Q1`'s output to the maximally mixed state: `Q0 = epr_prep(r)`
/// and the fidelity test runs at the mapped thresholds, honest completeness
/// reduced by `eps`.
pub fn qscmm_spec(q1: Circuit, alpha: f64, beta: f64, eps: f64) -> Result<(StatePrepPair, ProtocolSpec)> {
    let (c_hat, s_hat) = qsc_to_f2est(alpha, beta)?;
    let q0 = epr_prep(q1.r())?;
    let pair = StatePrepPair::new(q0, q1, "qscmm")?;
    let spec = ProtocolSpec {
        kind: ProtocolKind::Qscmm,
        alpha: c_hat,
        beta: s_hat,
        eps,
        completeness: c_hat - eps,
        soundness: s_hat,
    };
    Ok((pair, spec))
}

/// Tolerance, relative to `t1`, within which `t1 (c + s) / 2` counts as an integer.
pub const THRESHOLD_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionParams {
    pub l: u64,
    pub q: u64,
    pub c: f64,
    pub s: f64,
    /// `2 l q` batches
    pub t0: u64,
    /// `8 l q^2 t0` executions per batch
    pub t1: u64,
    /// `t1 (c + s) / 2`
    pub threshold: f64,
    /// Smallest vote count meeting the threshold.
    pub min_votes: u64,
    /// The threshold was within rounding of an integer and taken as that integer.
    pub threshold_snapped: bool,
    /// `c - s >= 1/q`
    pub gap_condition_met: bool,
}

impl RepetitionParams {
    /// Parameters without the `c - s >= 1/q` precondition.
    pub fn compute(l: u64, q: u64, c: f64, s: f64) -> Result<Self> {
        if l == 0 || q == 0 {
            return Err(Error::InvalidRequest("l and q must be positive".into()));
        }
        if !(0.0 <= s && s < c && c <= 1.0) {
            return Err(Error::InvalidThresholds(format!(
                "need 0 <= s < c <= 1, got c = {c}, s = {s}"
            )));
        }
        let t0 = 2 * l * q;
        let t1 = 8 * l * q * q * t0;
        let threshold = t1 as f64 * (c + s) / 2.0;
        let nearest = threshold.round();
        let threshold_snapped = (threshold - nearest).abs() <= THRESHOLD_SNAP * t1 as f64;
        let min_votes = if threshold_snapped { nearest } else { threshold.ceil() } as u64;
        Ok(RepetitionParams {
            l,
            q,
            c,
            s,
            t0,
            t1,
            threshold,
            min_votes,
            threshold_snapped,
            gap_condition_met: c - s >= 1.0 / q as f64,
        })
    }
}

/// Parameters with the gap precondition enforced.
pub fn repetition_params(l: u64, q: u64, c: f64, s: f64) -> Result<RepetitionParams> {
    let p = RepetitionParams::compute(l, q, c, s)?;
    if !p.gap_condition_met {
        return Err(Error::GapTooSmall {
            gap: c - s,
            min: 1.0 / q as f64,
        });
    }
    Ok(p)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `P(Bin(t, p) >= k)` summed in log space. The side of the distribution away
/// from the mean is summed and the other side obtained by complement.
pub fn binomial_upper_tail(t: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > t || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let log_pmf = |j: u64| ln_binomial(t, j) + j as f64 * lp + (t - j) as f64 * lq;
    if k as f64 >= t as f64 * p {
        log_sum_exp((k..=t).map(log_pmf)).exp().min(1.0)
    } else {
        (1.0 - log_sum_exp((0..k).map(log_pmf)).exp()).max(0.0)
    }
}

/// `P(Bin(t1, p) >= min_votes)^t0`
pub fn repeated_accept_prob(p_single: f64, params: &RepetitionParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_single) {
        return Err(Error::InvalidRequest(format!("probability {p_single} outside [0, 1]")));
    }
    let tail = binomial_upper_tail(params.t1, p_single, params.min_votes);
    Ok(tail.powf(params.t0 as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub params: RepetitionParams,
    pub p_single: f64,
    /// `y[i][j]`, one row per batch; empty in analytic transcripts.
    pub outcomes: Vec<Vec<u8>>,
    pub votes: Vec<u64>,
    pub z: Vec<bool>,
    pub accepted: bool,
    /// Set in analytic transcripts.
    pub accept_prob: Option<f64>,
}

impl Transcript {
    pub fn analytic(p_single: f64, params: RepetitionParams) -> Result<Self> {
        let accept_prob = repeated_accept_prob(p_single, &params)?;
        Ok(Transcript {
            seed: 0,
            params,
            p_single,
            outcomes: Vec::new(),
            votes: Vec::new(),
            z: Vec::new(),
            accepted: accept_prob >= 0.5,
            accept_prob: Some(accept_prob),
        })
    }
}

/// Samples every execution as an independent Bernoulli(`p_single`), takes a
/// threshold vote per batch and accepts when all batches pass.
pub fn run_repetition_sampled(p_single: f64, params: &RepetitionParams, seed: u64) -> Result<Transcript> {
    if !(0.0..=1.0).contains(&p_single) {
        return Err(Error::InvalidRequest(format!("probability {p_single} outside [0, 1]")));
    }
    let mut rng = rng_for(seed, 0);
    let outcomes: Vec<Vec<u8>> = (0..params.t0)
        .map(|_| {
            (0..params.t1)
                .map(|_| u8::from(rng.random::<f64>() < p_single))
                .collect()
        })
        .collect();
    let votes: Vec<u64> = outcomes
        .iter()
        .map(|row| row.iter().map(|&y| y as u64).sum())
        .collect();
    let z: Vec<bool> = votes.iter().map(|&v| v >= params.min_votes).collect();
    let accepted = z.iter().all(|&b| b);
    Ok(Transcript {
        seed,
        params: *params,
        p_single,
        outcomes,
        votes,
        z,
        accepted,
        accept_prob: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{bell_prep, random_pair, Gate};
    use crate::helstrom::exact_helstrom;
    use crate::numerics::{fidelity_sq, identity, trace_distance};
    use crate::random::{random_povm_element, random_unitary};
    use crate::uhlmann::{exact_uhlmann, overlap_sq, random_prover};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn orth_pair() -> StatePrepPair {
        let zero = Circuit::empty(2, 1).unwrap();
        StatePrepPair::new(zero.clone(), zero.with(Gate::x(0)), "orth").unwrap()
    }

    /// Direct sum of binomial probabilities, for comparison with the log-space tail.
    fn tail_oracle(t: u64, p: f64, k: u64) -> f64 {
        let mut pmf = (1.0 - p).powi(t as i32);
        let mut total = 0.0;
        for j in 0..=t {
            if j >= k {
                total += pmf;
            }
            pmf *= (t - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
        }
        total
    }

    #[test]
    fn spec_constructors() {
        let d = ProtocolSpec::distance_test(0.9, 0.1, 0.01).unwrap();
        assert_abs_diff_eq!(d.completeness, 0.945, epsilon = 1e-15);
        assert_abs_diff_eq!(d.soundness, 0.55, epsilon = 1e-15);
        let f = ProtocolSpec::fidelity_test(0.9, 0.1, 0.01).unwrap();
        assert_abs_diff_eq!(f.completeness, 0.89, epsilon = 1e-15);
        assert!(ProtocolSpec::fidelity_test(0.1, 0.1, 0.0).is_err());
        assert!(ProtocolSpec::fidelity_test(1.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn distance_test_examples() {
        let pair = orth_pair();
        let (r0, r1) = pair.reduced_states().unwrap();
        let half = MeasurementPair::custom(identity(2).scale(0.5)).unwrap();
        assert_abs_diff_eq!(distance_test_accept_prob(&half, &r0, &r1).unwrap(), 0.5);
        let exact = exact_helstrom(&r0, &r1).unwrap();
        assert_abs_diff_eq!(distance_test_accept_prob(&exact, &r0, &r1).unwrap(), 1.0, epsilon = 1e-12);
        let always0 = MeasurementPair::custom(identity(2)).unwrap();
        let run = run_distance_test(&pair, &always0, 10_000, 3).unwrap();
        assert!(run.within_sigmas(3.0));
        assert_abs_diff_eq!(run.analytic, 0.5);

        for seed in 0..10 {
            let pair = random_pair(3, 1 + seed as usize % 2, 20, seed).unwrap();
            let (r0, r1) = pair.reduced_states().unwrap();
            let m = exact_helstrom(&r0, &r1).unwrap();
            let t = trace_distance(&r0, &r1).unwrap();
            let p = distance_test_accept_prob(&m, &r0, &r1).unwrap();
            assert_abs_diff_eq!(p, 0.5 + 0.5 * t, epsilon = 1e-10);
            assert_abs_diff_eq!(simulate_distance_test(&pair, &m).unwrap(), p, epsilon = 1e-10);
        }
    }

    #[test]
    fn distance_test_sampling_matches() {
        let pair = random_pair(3, 1, 20, 2).unwrap();
        let (r0, r1) = pair.reduced_states().unwrap();
        let m = exact_helstrom(&r0, &r1).unwrap();
        let run = run_distance_test(&pair, &m, 20_000, 8).unwrap();
        assert!(run.within_sigmas(3.0), "{run:?}");
        assert_eq!(run, run_distance_test(&pair, &m, 20_000, 8).unwrap());
    }

    #[test]
    fn fidelity_test_examples() {
        let same = StatePrepPair::new(bell_prep(), bell_prep(), "same").unwrap();
        let id = ProverOperator::identity(2);
        assert_abs_diff_eq!(fidelity_test_accept_prob(&same, &id).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(simulate_fidelity_test(&same, &id).unwrap(), 1.0, epsilon = 1e-12);

        let mut rng = rng_for(1, 0);
        for seed in 0..10 {
            let pair = random_pair(4, 1 + seed as usize % 3, 20, seed).unwrap();
            let (r0, r1) = pair.reduced_states().unwrap();
            let f2 = fidelity_sq(&r0, &r1).unwrap();
            let u = exact_uhlmann(&pair).unwrap();
            assert_abs_diff_eq!(fidelity_test_accept_prob(&pair, &u).unwrap(), f2, epsilon = 1e-9);
            assert_abs_diff_eq!(simulate_fidelity_test(&pair, &u).unwrap(), f2, epsilon = 1e-9);
            let d = 1 << (pair.n() - pair.r());
            for channel in [false, true] {
                let p = random_prover(d, channel, &mut rng).unwrap();
                let analytic = fidelity_test_accept_prob(&pair, &p).unwrap();
                assert_abs_diff_eq!(analytic, overlap_sq(&pair, &p).unwrap(), epsilon = 1e-12);
                assert_abs_diff_eq!(simulate_fidelity_test(&pair, &p).unwrap(), analytic, epsilon = 1e-10);
            }
            let c = ProverOperator::contraction(random_unitary(d, &mut rng).scale(0.7)).unwrap();
            assert_abs_diff_eq!(
                simulate_fidelity_test(&pair, &c).unwrap(),
                fidelity_test_accept_prob(&pair, &c).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn fidelity_test_sampling_matches() {
        let pair = random_pair(3, 1, 20, 5).unwrap();
        let u = exact_uhlmann(&pair).unwrap();
        let run = run_fidelity_test(&pair, &u, 20_000, 4).unwrap();
        assert!(run.within_sigmas(3.0), "{run:?}");
    }

    #[test]
    fn qsc_mapping_examples() {
        assert_eq!(qsc_to_f2est(1.0, 0.0).unwrap(), (1.0, 0.0));
        let (c, s) = qsc_to_f2est(0.9, 0.1).unwrap();
        assert_abs_diff_eq!(c, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.19, epsilon = 1e-15);
        assert!(matches!(qsc_to_f2est(0.5, 0.25), Err(Error::GapNonpositive { .. })));
        assert!(matches!(qsc_to_f2est(0.2, 0.3), Err(Error::InvalidThresholds(_))));
    }

    #[test]
    fn qscmm_examples() {
        let (pair, spec) = qscmm_spec(bell_prep(), 0.9, 0.1, 0.01).unwrap();
        assert_eq!(spec.kind, ProtocolKind::Qscmm);
        let (r0, r1) = pair.reduced_states().unwrap();
        assert_abs_diff_eq!(fidelity_sq(&r1, &r0).unwrap(), 1.0, epsilon = 1e-12);
        let (pair, _) = qscmm_spec(Circuit::empty(2, 1).unwrap(), 0.9, 0.1, 0.01).unwrap();
        let u = exact_uhlmann(&pair).unwrap();
        assert_abs_diff_eq!(fidelity_test_accept_prob(&pair, &u).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn repetition_examples() {
        let p = RepetitionParams::compute(1, 1, 0.8, 0.3).unwrap();
        assert_eq!((p.t0, p.t1, p.min_votes), (2, 16, 9));
        let p = repetition_params(2, 2, 0.8, 0.3).unwrap();
        assert_eq!((p.t0, p.t1, p.min_votes), (8, 512, 282));
        assert!(matches!(repetition_params(1, 1, 0.8, 0.3), Err(Error::GapTooSmall { .. })));
        let snapped = RepetitionParams::compute(1, 1, 0.75, 0.25).unwrap();
        assert!(snapped.threshold_snapped);
        assert_eq!(snapped.min_votes, 8);

        assert_eq!(repeated_accept_prob(1.0, &p).unwrap(), 1.0);
        assert_eq!(repeated_accept_prob(0.0, &p).unwrap(), 0.0);
        assert!(repeated_accept_prob(0.8, &p).unwrap() >= 0.75);
        assert!(repeated_accept_prob(0.3, &p).unwrap() <= 0.25);
        assert!(run_repetition_sampled(1.0, &p, 0).unwrap().accepted);
        assert!(!run_repetition_sampled(0.0, &p, 0).unwrap().accepted);
    }

    #[test]
    fn tail_matches_direct_sum() {
        for &(t, p, k) in &[(16, 0.8, 9), (16, 0.3, 9), (512, 0.55, 282), (512, 0.3, 282), (40, 0.5, 0)] {
            let got = binomial_upper_tail(t, p, k);
            let want = tail_oracle(t, p, k);
            assert!((got - want).abs() <= 1e-12 + 1e-10 * want, "{t} {p} {k}: {got} vs {want}");
        }
    }

    #[test]
    fn sampled_repetition_matches_analytic() {
        let p = RepetitionParams::compute(1, 1, 0.8, 0.3).unwrap();
        let trials = 4000;
        let hits = (0..trials)
            .filter(|&k| run_repetition_sampled(0.6, &p, k).unwrap().accepted)
            .count();
        let want = repeated_accept_prob(0.6, &p).unwrap();
        let sigma = (want * (1.0 - want) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - want).abs() <= 3.0 * sigma);
    }

    #[test]
    fn transcript_votes_are_consistent() {
        let p = RepetitionParams::compute(1, 1, 0.8, 0.3).unwrap();
        let t = run_repetition_sampled(0.55, &p, 17).unwrap();
        for (row, (&v, &z)) in t.outcomes.iter().zip(t.votes.iter().zip(&t.z)) {
            assert_eq!(row.iter().map(|&y| y as u64).sum::<u64>(), v);
            assert_eq!(z, v >= p.min_votes);
        }
        assert_eq!(t.accepted, t.z.iter().all(|&z| z));
        let back: Transcript = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn cheating_povms_stay_below_ceiling() {
        let pair = random_pair(3, 2, 20, 6).unwrap();
        let (r0, r1) = pair.reduced_states().unwrap();
        let t = trace_distance(&r0, &r1).unwrap();
        let mut rng = rng_for(6, 2);
        for _ in 0..300 {
            let m = MeasurementPair::custom(random_povm_element(4, 0.3, &mut rng)).unwrap();
            assert!(distance_test_accept_prob(&m, &r0, &r1).unwrap() <= 0.5 + 0.5 * t + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn repetition_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = RepetitionParams::compute(2, 2, 0.8, 0.3).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(repeated_accept_prob(lo, &p).unwrap() <= repeated_accept_prob(hi, &p).unwrap() + 1e-15);
        }

        #[test]
        fn qsc_yes_instances_are_fidelity_yes_instances(seed in 0u64..500) {
            let pair = random_pair(3, 1, 12, seed).unwrap();
            let (r0, r1) = pair.reduced_states().unwrap();
            let t = trace_distance(&r0, &r1).unwrap();
            let f2 = fidelity_sq(&r0, &r1).unwrap();
            prop_assert!(f2 >= 1.0 - t - 1e-9);
        }
    }
}
