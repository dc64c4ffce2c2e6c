//! The Holevo-Helstrom measurement: the exact spectral construction and the
//! algorithmic one obtained from the sign-series transform of the halved
//! difference encoding.

use rand::Rng;

use crate::blockenc::halved_difference_encoding;
use crate::circuits::StatePrepPair;
use crate::numerics::{
    hermitian_eigendecompose, hermitian_part, identity, trace, CMatrix,
};
use crate::qsvt::{hadamard_test_prob, transform_encoding, SvtMode, TransformedEncoding};
use crate::signpoly::{calibrate_c_hat, ChebyshevSeries, SignPolyRequest};
use crate::{Error, Result, C_SGN};

/// Tolerance on the POVM invariants.
pub const POVM_TOL: f64 = 1e-9;

/// Eigenvalues of `(rho0 - rho1) / 2` this close to zero get sign 0.
pub const SIGN_ZERO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementTag {
    Exact,
    Algorithmic,
    Custom,
}

/// Two-outcome POVM `{pi0, pi1}`.
#[derive(Debug, Clone)]
pub struct MeasurementPair {
    pub pi0: CMatrix,
    pub pi1: CMatrix,
    pub tag: MeasurementTag,
}

impl MeasurementPair {
    /// `{pi0, I - pi0}`, checked to be a valid POVM.
    pub fn from_pi0(pi0: CMatrix, tag: MeasurementTag) -> Result<Self> {
        if !pi0.is_square() {
            return Err(Error::DimensionMismatch("POVM element must be square".into()));
        }
        let pi0 = hermitian_part(&pi0);
        let eig = hermitian_eigendecompose(&pi0)?;
        if eig.min() < -POVM_TOL || eig.max() > 1.0 + POVM_TOL {
            return Err(Error::InvalidOperator(format!(
                "POVM element spectrum [{:.3e}, {:.12}] leaves [0, 1]",
                eig.min(),
                eig.max()
            )));
        }
        let pi1 = identity(pi0.nrows()) - &pi0;
        Ok(MeasurementPair { pi0, pi1, tag })
    }

    pub fn custom(pi0: CMatrix) -> Result<Self> {
        MeasurementPair::from_pi0(pi0, MeasurementTag::Custom)
    }

    pub fn dim(&self) -> usize {
        self.pi0.nrows()
    }

    /// `Tr(pi0 rho)`
    pub fn prob_zero(&self, rho: &CMatrix) -> Result<f64> {
        if rho.shape() != self.pi0.shape() {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, measurement acts on dimension {}",
                rho.nrows(),
                rho.ncols(),
                self.dim()
            )));
        }
        Ok(trace(&(&self.pi0 * rho)).re)
    }

    /// Spectrum range of `pi0`.
    pub fn spectrum_range(&self) -> Result<(f64, f64)> {
        let eig = hermitian_eigendecompose(&self.pi0)?;
        Ok((eig.min(), eig.max()))
    }
}

/// `pi0 = I/2 + sgn((rho0 - rho1)/2) / 2`, with `sgn(0) = 0`.
pub fn exact_helstrom(rho0: &CMatrix, rho1: &CMatrix) -> Result<MeasurementPair> {
    if rho0.shape() != rho1.shape() || !rho0.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "states are {}x{} and {}x{}",
            rho0.nrows(),
            rho0.ncols(),
            rho1.nrows(),
            rho1.ncols()
        )));
    }
    let diff = hermitian_part(&(rho0 - rho1).scale(0.5));
    let sign = hermitian_eigendecompose(&diff)?.map(|x| {
        if x > SIGN_ZERO {
            1.0
        } else if x < -SIGN_ZERO {
            -1.0
        } else {
            0.0
        }
    });
    let pi0 = (identity(rho0.nrows()) + sign).scale(0.5);
    MeasurementPair::from_pi0(pi0, MeasurementTag::Exact)
}

/// `Tr(pi0 rho0) - Tr(pi0 rho1)`
pub fn advantage(m: &MeasurementPair, rho0: &CMatrix, rho1: &CMatrix) -> Result<f64> {
    Ok(m.prob_zero(rho0)? - m.prob_zero(rho1)?)
}

/// Draws the outcome of measuring `rho` with `m`: 0 with probability `Tr(pi0 rho)`.
pub fn sample_outcome<R: Rng + ?Sized>(m: &MeasurementPair, rho: &CMatrix, rng: &mut R) -> Result<u8> {
    let p0 = m.prob_zero(rho)?.clamp(0.0, 1.0);
    Ok(if rng.random::<f64>() < p0 { 0 } else { 1 })
}

/// Parameters of the algorithmic measurement at overall error `eps_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HHSchedule {
    pub eps_target: f64,
    pub r: usize,
    pub c_hat_sgn: f64,
    /// `eps_target / 2^(r+2)`
    pub delta: f64,
    /// `eps_target / (2 (36 c_hat + 2 C_sgn + 37))`
    pub eps_inner: f64,
    pub degree: Option<usize>,
}

pub fn hh_schedule(eps_target: f64, r: usize, c_hat_sgn: f64) -> Result<HHSchedule> {
    if !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(Error::InvalidEps(eps_target));
    }
    if !(c_hat_sgn > 0.0) || !c_hat_sgn.is_finite() {
        return Err(Error::InvalidRequest(format!("c_hat = {c_hat_sgn} must be positive")));
    }
    let delta = eps_target / 2f64.powi(r as i32 + 2);
    let eps_inner = eps_target / (2.0 * (36.0 * c_hat_sgn + 2.0 * C_SGN + 37.0));
    Ok(HHSchedule {
        eps_target,
        r,
        c_hat_sgn,
        delta,
        eps_inner,
        degree: None,
    })
}

impl HHSchedule {
    pub fn request(&self, max_degree: usize) -> Result<SignPolyRequest> {
        SignPolyRequest::new(self.delta, self.eps_inner, max_degree)
    }
}

/// A schedule together with the sign series it calls for.
#[derive(Debug, Clone)]
pub struct HHPlan {
    pub schedule: HHSchedule,
    pub series: ChebyshevSeries,
}

/// Builds the schedule with `c_hat` set to a bound on the coefficient norm of
/// the very series the schedule produces.
pub fn plan_hh(eps_target: f64, r: usize, max_degree: usize) -> Result<HHPlan> {
    plan_hh_with_delta(eps_target, r, max_degree, None)
}

/// [`plan_hh`] with the band half-width optionally replaced by `delta`.
pub fn plan_hh_with_delta(eps_target: f64, r: usize, max_degree: usize, delta: Option<f64>) -> Result<HHPlan> {
    let schedule_for = |c: f64| -> Result<HHSchedule> {
        let mut s = hh_schedule(eps_target, r, c)?;
        if let Some(d) = delta {
            s.delta = d;
        }
        Ok(s)
    };
    let (c_hat, series) = calibrate_c_hat(|c| schedule_for(c)?.request(max_degree))?;
    let mut schedule = schedule_for(c_hat)?;
    schedule.degree = Some(series.degree());
    Ok(HHPlan { schedule, series })
}

#[derive(Debug, Clone)]
pub struct AlgoHelstrom {
    pub measurement: MeasurementPair,
    pub transformed: TransformedEncoding,
}

impl AlgoHelstrom {
    /// Probability of outcome 0 read off the Hadamard test on the transformed encoding.
    pub fn prob_zero_via_circuit(&self, rho: &CMatrix) -> Result<f64> {
        hadamard_test_prob(&self.transformed.base, rho)
    }
}

/// `pi0 = (I + P) / 2` where `P` is the sign series applied to the halved
/// difference encoding of the pair.
pub fn algo_helstrom(pair: &StatePrepPair, plan: &HHPlan, mode: SvtMode) -> Result<AlgoHelstrom> {
    if pair.r() != plan.schedule.r {
        return Err(Error::DimensionMismatch(format!(
            "schedule was built for r = {}, pair has r = {}",
            plan.schedule.r,
            pair.r()
        )));
    }
    let be = halved_difference_encoding(pair)?;
    let transformed = transform_encoding(&plan.series, &be, mode)?;
    let d = transformed.realized_block.nrows();
    let pi0 = (identity(d) + hermitian_part(&transformed.realized_block)).scale(0.5);
    let measurement = MeasurementPair::from_pi0(pi0, MeasurementTag::Algorithmic)?;
    Ok(AlgoHelstrom {
        measurement,
        transformed,
    })
}
