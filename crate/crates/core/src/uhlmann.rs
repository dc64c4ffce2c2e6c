//! The Uhlmann transform: the exact sign-completion of `Tr_A(|psi0><psi1|)`,
//! the algorithmic contraction obtained from the sign series, and the
//! purification overlap these provers achieve.

use rand::Rng;

use crate::blockenc::uhlmann_encoding;
use crate::circuits::StatePrepPair;
use crate::numerics::{
    complete_to_unitary, diag_real, identity, operator_norm, outer, partial_trace,
    sign_sv_completed, svd, unitarity_deviation, CMatrix, CVector,
};
use crate::qsvt::{transform_encoding, unitary_dilation, SvtMode, TransformedEncoding};
use crate::random::{kraus_completeness, random_kraus, random_unitary, rng_for};
use crate::signpoly::{calibrate_c_hat, ChebyshevSeries, SignPolyRequest};
use crate::{Error, Result, C_SGN};

/// Tolerance on unitarity, contraction norm and Kraus completeness.
pub const PROVER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProverKind {
    Unitary,
    Contraction,
    Channel,
}

/// Operation the prover applies to the reference register.
#[derive(Debug, Clone)]
pub struct ProverOperator {
    kind: ProverKind,
    ops: Vec<CMatrix>,
}

impl ProverOperator {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let dev = if u.is_square() { unitarity_deviation(&u) } else { f64::INFINITY };
        if dev > PROVER_TOL {
            return Err(Error::InvalidOperator(format!(
                "prover unitary deviates from unitarity by {dev:.3e}"
            )));
        }
        Ok(ProverOperator {
            kind: ProverKind::Unitary,
            ops: vec![u],
        })
    }

    pub fn contraction(p: CMatrix) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::DimensionMismatch("prover operator must be square".into()));
        }
        let norm = operator_norm(&p)?;
        if norm > 1.0 + PROVER_TOL {
            return Err(Error::InvalidOperator(format!("contraction has norm {norm}")));
        }
        Ok(ProverOperator {
            kind: ProverKind::Contraction,
            ops: vec![p],
        })
    }

    pub fn channel(kraus: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidOperator("empty Kraus set".into()));
        };
        let d = first.nrows();
        if kraus.iter().any(|k| k.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("Kraus operators must share one square shape".into()));
        }
        let dev = kraus_completeness(&kraus).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > PROVER_TOL {
            return Err(Error::InvalidOperator(format!(
                "Kraus completeness violated by {dev:.3e}"
            )));
        }
        Ok(ProverOperator {
            kind: ProverKind::Channel,
            ops: kraus,
        })
    }

    pub fn identity(d: usize) -> Self {
        ProverOperator {
            kind: ProverKind::Unitary,
            ops: vec![identity(d)],
        }
    }

    pub fn kind(&self) -> ProverKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// The operator itself; the first Kraus operator for a channel.
    pub fn operator(&self) -> &CMatrix {
        &self.ops[0]
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Kraus operators of what the prover physically does to the register.
    /// A contraction `P` is run through its unitary dilation with the ancilla
    /// discarded, giving `{P, sqrt(I - P^dagger P)}`.
    pub fn physical_kraus(&self) -> Result<Vec<CMatrix>> {
        match self.kind {
            ProverKind::Unitary | ProverKind::Channel => Ok(self.ops.clone()),
            ProverKind::Contraction => {
                let p = &self.ops[0];
                let dec = svd(p)?;
                let comp: Vec<f64> = dec
                    .singulars
                    .iter()
                    .map(|&s| {
                        let s = s.min(1.0);
                        ((1.0 - s) * (1.0 + s)).sqrt()
                    })
                    .collect();
                let rest = &dec.right * diag_real(&comp) * dec.right.adjoint();
                Ok(vec![p.clone(), rest])
            }
        }
    }

    /// Unitary on `[ancillas, register]` whose action with the ancillas in
    /// `|0>` realizes the prover; returns it with the ancilla count.
    pub fn dilation(&self) -> Result<(CMatrix, usize)> {
        match self.kind {
            ProverKind::Unitary => Ok((self.ops[0].clone(), 0)),
            ProverKind::Contraction => Ok((unitary_dilation(&self.ops[0])?, 1)),
            ProverKind::Channel => {
                let d = self.dim();
                let m = self.ops.len();
                let a = m.next_power_of_two().trailing_zeros() as usize;
                let mut iso = CMatrix::zeros(d << a, d);
                for (k, op) in self.ops.iter().enumerate() {
                    iso.view_mut((k * d, 0), (d, d)).copy_from(op);
                }
                Ok((complete_to_unitary(&iso), a))
            }
        }
    }
}

fn check_prover_dim(pair: &StatePrepPair, prover: &ProverOperator) -> Result<()> {
    let d = 1usize << (pair.n() - pair.r());
    if prover.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "prover acts on dimension {}, reference register has dimension {d}",
            prover.dim()
        )));
    }
    Ok(())
}

/// `Tr_A(|psi0><psi1|)` on the reference register.
pub fn x_uhl(pair: &StatePrepPair) -> Result<CMatrix> {
    let (psi0, psi1) = pair.purifications()?;
    let (n, r) = (pair.n(), pair.r());
    partial_trace(&outer(&psi0, &psi1), &[1 << r, 1 << (n - r)], &[0])
}

/// `sgn^(SV)(X_Uhl)` completed to a unitary.
pub fn exact_uhlmann(pair: &StatePrepPair) -> Result<ProverOperator> {
    ProverOperator::unitary(sign_sv_completed(&x_uhl(pair)?)?)
}

/// `<psi0| (I (x) K) |psi1>` for an operator `K` on the reference register.
fn amplitude(psi0: &CVector, psi1: &CVector, k: &CMatrix) -> num_complex::Complex64 {
    let ref_dim = k.nrows();
    let out_dim = psi0.len() / ref_dim;
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for a in 0..out_dim {
        let x0 = psi0.rows(a * ref_dim, ref_dim);
        let x1 = psi1.rows(a * ref_dim, ref_dim);
        acc += x0.dotc(&(k * x1));
    }
    acc
}

/// `|<psi0|(I (x) P)|psi1>|^2` for unitaries and contractions;
/// `<psi0|(I (x) Phi)(|psi1><psi1|)|psi0>` for channels.
pub fn overlap_sq(pair: &StatePrepPair, prover: &ProverOperator) -> Result<f64> {
    check_prover_dim(pair, prover)?;
    let (psi0, psi1) = pair.purifications()?;
    Ok(prover
        .kraus()
        .iter()
        .map(|k| amplitude(&psi0, &psi1, k).norm_sqr())
        .sum())
}

/// Overlap achieved when the prover's operation is carried out physically
/// (see [`ProverOperator::physical_kraus`]). Equals [`overlap_sq`] for
/// unitaries and channels; at least as large for contractions.
pub fn physical_overlap(pair: &StatePrepPair, prover: &ProverOperator) -> Result<f64> {
    check_prover_dim(pair, prover)?;
    let (psi0, psi1) = pair.purifications()?;
    Ok(prover
        .physical_kraus()?
        .iter()
        .map(|k| amplitude(&psi0, &psi1, k).norm_sqr())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UhlmannSchedule {
    pub eps_target: f64,
    pub r: usize,
    pub c_hat_sgn: f64,
    /// `eps_target / 2^(r+3)`
    pub delta: f64,
    /// `(36 c_hat + 37)^2 + C_sgn^2`
    pub b0: f64,
    /// `8 (36 c_hat + 37) + 9 C_sgn`
    pub b1: f64,
    /// `(b1 + sqrt(b1^2 + 12 b0)) / 3`
    pub k_const: f64,
    /// `eps_target / k_const`
    pub eps_inner: f64,
    pub degree: Option<usize>,
}

pub fn uhlmann_schedule(eps_target: f64, r: usize, c_hat_sgn: f64) -> Result<UhlmannSchedule> {
    if !(eps_target > 0.0 && eps_target < 0.5) {
        return Err(Error::InvalidEps(eps_target));
    }
    if !(c_hat_sgn > 0.0) || !c_hat_sgn.is_finite() {
        return Err(Error::InvalidRequest(format!("c_hat = {c_hat_sgn} must be positive")));
    }
    let base = 36.0 * c_hat_sgn + 37.0;
    let b0 = base * base + C_SGN * C_SGN;
    let b1 = 8.0 * base + 9.0 * C_SGN;
    let k_const = (b1 + (b1 * b1 + 12.0 * b0).sqrt()) / 3.0;
    Ok(UhlmannSchedule {
        eps_target,
        r,
        c_hat_sgn,
        delta: eps_target / 2f64.powi(r as i32 + 3),
        b0,
        b1,
        k_const,
        eps_inner: eps_target / k_const,
        degree: None,
    })
}

impl UhlmannSchedule {
    /// `3 K^2 - 2 b1 K - 4 b0`, nonnegative for a valid `k_const`.
    pub fn closing_residual(&self) -> f64 {
        let k = self.k_const;
        3.0 * k * k - 2.0 * self.b1 * k - 4.0 * self.b0
    }

    pub fn request(&self, max_degree: usize) -> Result<SignPolyRequest> {
        SignPolyRequest::new(self.delta, self.eps_inner, max_degree)
    }
}

#[derive(Debug, Clone)]
pub struct UhlmannPlan {
    pub schedule: UhlmannSchedule,
    pub series: ChebyshevSeries,
}

/// Schedule with `c_hat` calibrated against the series it produces.
pub fn plan_uhlmann(eps_target: f64, r: usize, max_degree: usize) -> Result<UhlmannPlan> {
    plan_uhlmann_with_delta(eps_target, r, max_degree, None)
}

/// [`plan_uhlmann`] with the band half-width optionally replaced by `delta`.
pub fn plan_uhlmann_with_delta(
    eps_target: f64,
    r: usize,
    max_degree: usize,
    delta: Option<f64>,
) -> Result<UhlmannPlan> {
    let schedule_for = |c: f64| -> Result<UhlmannSchedule> {
        let mut s = uhlmann_schedule(eps_target, r, c)?;
        if let Some(d) = delta {
            s.delta = d;
        }
        Ok(s)
    };
    let (c_hat, series) = calibrate_c_hat(|c| schedule_for(c)?.request(max_degree))?;
    let mut schedule = schedule_for(c_hat)?;
    schedule.degree = Some(series.degree());
    Ok(UhlmannPlan { schedule, series })
}

#[derive(Debug, Clone)]
pub struct AlgoUhlmann {
    pub prover: ProverOperator,
    pub transformed: TransformedEncoding,
}

/// The contraction obtained by applying the sign series to the block of
/// [`uhlmann_encoding`].
pub fn algo_uhlmann(pair: &StatePrepPair, plan: &UhlmannPlan, mode: SvtMode) -> Result<AlgoUhlmann> {
    if pair.r() != plan.schedule.r {
        return Err(Error::DimensionMismatch(format!(
            "schedule was built for r = {}, pair has r = {}",
            plan.schedule.r,
            pair.r()
        )));
    }
    let be = uhlmann_encoding(pair)?;
    let transformed = transform_encoding(&plan.series, &be, mode)?;
    let prover = ProverOperator::contraction(transformed.realized_block.clone())?;
    Ok(AlgoUhlmann {
        prover,
        transformed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    pub max_overlap: f64,
    pub identity_overlap: f64,
    pub fidelity_sq: f64,
    /// `max_overlap <= fidelity_sq + 1e-9`
    pub bound_holds: bool,
}

/// Maximum overlap over the identity, random unitaries and random rank-2
/// channels on the reference register, alternating between the two families.
pub fn channel_soundness_probe(pair: &StatePrepPair, trials: usize, seed: u64) -> Result<ProbeReport> {
    if trials == 0 {
        return Err(Error::InvalidRequest("probe needs at least one trial".into()));
    }
    let d = 1usize << (pair.n() - pair.r());
    let (rho0, rho1) = pair.reduced_states()?;
    let f2 = crate::numerics::fidelity_sq(&rho0, &rho1)?;
    let identity_overlap = overlap_sq(pair, &ProverOperator::identity(d))?;
    let mut rng = rng_for(seed, 0);
    let mut best = identity_overlap;
    for t in 0..trials {
        let prover = random_prover(d, t % 2 == 1, &mut rng)?;
        best = best.max(overlap_sq(pair, &prover)?);
    }
    Ok(ProbeReport {
        trials,
        max_overlap: best,
        identity_overlap,
        fidelity_sq: f2,
        bound_holds: best <= f2 + 1e-9,
    })
}

/// Haar unitary, or a channel with two Kraus operators cut from a Haar isometry.
pub fn random_prover<R: Rng + ?Sized>(d: usize, channel: bool, rng: &mut R) -> Result<ProverOperator> {
    if channel {
        ProverOperator::channel(random_kraus(d, 2, rng))
    } else {
        ProverOperator::unitary(random_unitary(d, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{amplitude_matrix, bell_prep, random_pair, Circuit, Gate};
    use crate::numerics::{fidelity_sq, max_abs_diff, schatten_norm};
    use crate::signpoly::DEFAULT_MAX_DEGREE;
    use approx::assert_abs_diff_eq;

    fn product_pair() -> StatePrepPair {
        let zero = Circuit::empty(2, 1).unwrap();
        let one_r = zero.clone().with(Gate::x(1));
        StatePrepPair::new(zero, one_r, "product").unwrap()
    }

    #[test]
    fn x_uhl_matches_amplitude_formula() {
        for seed in 0..10 {
            let pair = random_pair(4, 1 + seed as usize % 3, 20, seed).unwrap();
            let (psi0, psi1) = pair.purifications().unwrap();
            let m0 = amplitude_matrix(&psi0, pair.r(), pair.n());
            let m1 = amplitude_matrix(&psi1, pair.r(), pair.n());
            let expected = m0.transpose() * m1.map(|z| z.conj());
            assert!(max_abs_diff(&x_uhl(&pair).unwrap(), &expected) < 1e-14);
        }
    }

    #[test]
    fn exact_examples() {
        let same = StatePrepPair::new(bell_prep(), bell_prep(), "same").unwrap();
        let u = exact_uhlmann(&same).unwrap();
        assert!(max_abs_diff(u.operator(), &identity(2)) < 1e-12);
        assert_abs_diff_eq!(overlap_sq(&same, &u).unwrap(), 1.0, epsilon = 1e-12);

        let pair = product_pair();
        let u = exact_uhlmann(&pair).unwrap();
        assert!(max_abs_diff(u.operator(), &Gate::x(0).matrix()) < 1e-12);
        assert_abs_diff_eq!(overlap_sq(&pair, &u).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap_sq(&pair, &ProverOperator::identity(2)).unwrap(), 0.0);
    }

    #[test]
    fn exact_overlap_is_fidelity_and_trace_norm_is_root_fidelity() {
        for seed in 0..30 {
            let pair = random_pair(2 + seed as usize % 3, 1, 20, seed).unwrap();
            let (r0, r1) = pair.reduced_states().unwrap();
            let f2 = fidelity_sq(&r0, &r1).unwrap();
            let u = exact_uhlmann(&pair).unwrap();
            assert_abs_diff_eq!(overlap_sq(&pair, &u).unwrap(), f2, epsilon = 1e-9);
            let tn = schatten_norm(&x_uhl(&pair).unwrap(), 1.0).unwrap();
            assert_abs_diff_eq!(tn, f2.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn schedule_examples() {
        let s = uhlmann_schedule(1e-2, 1, 1.0).unwrap();
        assert_abs_diff_eq!(s.delta, 6.25e-4, epsilon = 1e-18);
        assert_eq!(s.b0, 5354.0);
        assert_eq!(s.b1, 629.0);
        assert!(s.closing_residual().abs() <= 1e-6 * s.k_const * s.k_const);
        assert!(s.closing_residual() >= -1e-6);
        assert!(matches!(uhlmann_schedule(0.5, 1, 1.0), Err(Error::InvalidEps(_))));
        assert!(matches!(uhlmann_schedule(-1e-3, 1, 1.0), Err(Error::InvalidEps(_))));
    }

    #[test]
    fn prover_validation() {
        assert!(ProverOperator::unitary(identity(2).scale(0.5)).is_err());
        assert!(ProverOperator::contraction(identity(2).scale(1.1)).is_err());
        assert!(ProverOperator::contraction(identity(2).scale(0.5)).is_ok());
        assert!(ProverOperator::channel(vec![identity(2).scale(0.5)]).is_err());
        assert!(ProverOperator::channel(vec![]).is_err());
        let half = identity(2).scale(0.5f64.sqrt());
        let ch = ProverOperator::channel(vec![half.clone(), half]).unwrap();
        assert_eq!(ch.kind(), ProverKind::Channel);
    }

    #[test]
    fn dilations_realize_the_prover() {
        let mut rng = rng_for(4, 0);
        for channel in [false, true] {
            let p = random_prover(4, channel, &mut rng).unwrap();
            let (u, a) = p.dilation().unwrap();
            assert!(unitarity_deviation(&u) < 1e-10);
            for (k, op) in p.kraus().iter().enumerate() {
                assert!(max_abs_diff(&u.view((4 * k, 0), (4, 4)).into_owned(), op) < 1e-12);
            }
            assert_eq!(a, if channel { 1 } else { 0 });
        }
        let c = ProverOperator::contraction(identity(2).scale(0.6)).unwrap();
        let k = c.physical_kraus().unwrap();
        assert!(max_abs_diff(&k[1], &identity(2).scale(0.8)) < 1e-12);
    }

    #[test]
    fn algorithmic_contraction_examples() {
        let plan = plan_uhlmann(0.1, 1, DEFAULT_MAX_DEGREE).unwrap();
        assert!(plan.series.coeff_l1() <= plan.schedule.c_hat_sgn);
        let same = StatePrepPair::new(bell_prep(), bell_prep(), "same").unwrap();
        let algo = algo_uhlmann(&same, &plan, SvtMode::Chebyshev).unwrap();
        assert!(overlap_sq(&same, &algo.prover).unwrap() >= 0.9);

        let pair = product_pair();
        let orth = StatePrepPair::new(pair.q0.clone(), pair.q0.clone().with(Gate::x(0)), "orth").unwrap();
        let algo = algo_uhlmann(&orth, &plan, SvtMode::Oracle).unwrap();
        assert!(overlap_sq(&orth, &algo.prover).unwrap() <= 1e-9);

        for seed in 0..4 {
            let pair = random_pair(3, 1, 20, seed).unwrap();
            let (r0, r1) = pair.reduced_states().unwrap();
            let f2 = fidelity_sq(&r0, &r1).unwrap();
            let a = algo_uhlmann(&pair, &plan, SvtMode::Chebyshev).unwrap();
            let b = algo_uhlmann(&pair, &plan, SvtMode::Oracle).unwrap();
            let (oa, ob) = (overlap_sq(&pair, &a.prover).unwrap(), overlap_sq(&pair, &b.prover).unwrap());
            assert!(f2 - 0.1 <= oa && oa <= f2 + 1e-9, "{f2} {oa}");
            assert_abs_diff_eq!(oa, ob, epsilon = 1e-8);
            let phys = physical_overlap(&pair, &a.prover).unwrap();
            assert!(oa - 1e-12 <= phys && phys <= f2 + 1e-9);
        }
    }

    #[test]
    fn probe_respects_fidelity() {
        let pair = random_pair(3, 1, 20, 11).unwrap();
        let report = channel_soundness_probe(&pair, 200, 5).unwrap();
        assert!(report.bound_holds);
        assert!(report.max_overlap >= report.identity_overlap);
        let orth = StatePrepPair::new(
            Circuit::empty(2, 1).unwrap(),
            Circuit::empty(2, 1).unwrap().with(Gate::x(0)),
            "orth",
        )
        .unwrap();
        assert!(channel_soundness_probe(&orth, 50, 1).unwrap().max_overlap <= 1e-9);
        assert!(channel_soundness_probe(&orth, 0, 1).is_err());
    }
}
