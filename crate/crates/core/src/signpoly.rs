//! Bounded odd Chebyshev approximations of the sign function.
//!
//! The series approximates `(1 - eps) * erf(k x)` with `k = erfc^{-1}(eps) / delta`,
//! so `erf` is within `eps` of `sgn` outside `[-delta, delta]` and the `(1 - eps)`
//! factor leaves room for the truncation error under the `|S| <= 1` ceiling.
//! Coefficients come from a discrete cosine transform at Chebyshev nodes; the
//! truncation degree is the smallest odd degree that passes a grid check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::erf::{erf, erfc_inv};

use crate::format::{sig17_vec, Sig17};
use crate::{Error, Result, C_SGN};

/// Uniform points used by [`build_sign_poly`]'s final verification.
pub const VERIFY_GRID_POINTS: usize = 100_000;

/// Coefficients with smaller magnitude are set to exactly zero.
pub const COEFF_FLOOR: f64 = 1e-15;

/// Slack on the `|S(x)| <= 1` ceiling.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignPolyRequest {
    pub delta: f64,
    pub eps: f64,
    pub max_degree: usize,
}

impl SignPolyRequest {
    pub fn new(delta: f64, eps: f64, max_degree: usize) -> Result<Self> {
        let req = SignPolyRequest {
            delta,
            eps,
            max_degree,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidRequest(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidRequest(format!(
                "eps = {} must lie in (0, 1)",
                self.eps
            )));
        }
        if self.max_degree == 0 || self.max_degree.is_multiple_of(2) {
            return Err(Error::InvalidRequest(format!(
                "max_degree = {} must be a positive odd integer",
                self.max_degree
            )));
        }
        Ok(())
    }
}

/// `S(x) = c_0 / 2 + sum_{k >= 1} c_k T_k(x)` with every even coefficient zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    coeffs: Vec<f64>,
    delta: f64,
    eps: f64,
    coeff_l1: f64,
}

impl ChebyshevSeries {
    /// Wraps raw coefficients; trailing zeros are trimmed so the degree is exact.
    pub fn from_coeffs(mut coeffs: Vec<f64>, delta: f64, eps: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidRequest("non-finite coefficient".into()));
        }
        if let Some(k) = coeffs.iter().step_by(2).position(|&c| c != 0.0) {
            return Err(Error::InvalidRequest(format!(
                "coefficient {} is nonzero; the series must be odd",
                2 * k
            )));
        }
        while coeffs.len() > 2 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            coeffs.resize(2, 0.0);
        }
        let coeff_l1 = coeffs.iter().map(|c| c.abs()).sum();
        Ok(ChebyshevSeries {
            coeffs,
            delta,
            eps,
            coeff_l1,
        })
    }

    /// The degree-1 series `T_1(x) = x`.
    pub fn identity() -> Self {
        ChebyshevSeries::from_coeffs(vec![0.0, 1.0], 1.0, 0.0).unwrap()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn c_sgn(&self) -> f64 {
        C_SGN
    }

    /// `sum_k |c_k|`
    pub fn coeff_l1(&self) -> f64 {
        self.coeff_l1
    }

    /// `d = (degree + 1) / 2`, the number of odd terms.
    pub fn half_degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn scaled(&self, factor: f64) -> ChebyshevSeries {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        ChebyshevSeries::from_coeffs(coeffs, self.delta, self.eps).unwrap()
    }

    /// Evaluation without the domain check.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let mut out = [0.0];
        odd_clenshaw(&self.coeffs, &[x], &mut out);
        out[0]
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_series(self, x)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc {
            degree: usize,
            delta: Sig17,
            eps: Sig17,
            coeffs: Vec<Sig17>,
            coeff_l1: Sig17,
        }
        let doc = Doc {
            degree: self.degree(),
            delta: Sig17(self.delta),
            eps: Sig17(self.eps),
            coeffs: sig17_vec(&self.coeffs),
            coeff_l1: Sig17(self.coeff_l1),
        };
        serde_json::to_string(&doc).expect("series serializes")
    }
}

/// Clenshaw evaluation of an odd series at several points.
///
/// With `y = T_2(x)` the odd polynomials obey `T_{2j+3} = 2y T_{2j+1} - T_{2j-1}`,
/// so the sum over `a_j = c_{2j+1}` collapses to `x (b_0 - b_1)`. Points are
/// processed in lanes to keep several recurrences in flight.
fn odd_clenshaw(coeffs: &[f64], xs: &[f64], out: &mut [f64]) {
    const LANES: usize = 8;
    let odd: Vec<f64> = coeffs.iter().skip(1).step_by(2).copied().collect();
    for (xc, oc) in xs.chunks(LANES).zip(out.chunks_mut(LANES)) {
        let mut y2 = [0.0; LANES];
        for (t, x) in y2.iter_mut().zip(xc) {
            *t = 2.0 * (2.0 * x * x - 1.0);
        }
        let mut b1 = [0.0; LANES];
        let mut b2 = [0.0; LANES];
        for &a in odd.iter().rev() {
            for l in 0..LANES {
                let b0 = a + y2[l] * b1[l] - b2[l];
                b2[l] = b1[l];
                b1[l] = b0;
            }
        }
        // after the loop b1 = b_0 and b2 = b_1
        for (l, (o, x)) in oc.iter_mut().zip(xc).enumerate() {
            *o = x * (b1[l] - b2[l]);
        }
    }
}

/// `S(x)` for `|x| <= 1`.
pub fn eval_series(s: &ChebyshevSeries, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(s.eval_unchecked(x))
}

/// Values of `c_0/2 + sum_k c_k T_k` at the first-kind Chebyshev nodes
/// `x_j = cos(pi (j + 1/2) / m)`, `j < m`, through one FFT of length `2m`.
fn values_at_chebyshev_nodes(
    planner: &mut FftPlanner<f64>,
    coeffs: &[f64],
    m: usize,
) -> (Vec<f64>, Vec<f64>) {
    assert!(coeffs.len() <= m);
    let len = 2 * m;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, &ck) in coeffs.iter().enumerate() {
        let w = if k == 0 { 0.5 } else { 1.0 };
        buf[k] = Complex64::from_polar(w * ck, PI * k as f64 / len as f64);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let xs = (0..m)
        .map(|j| (PI * (j as f64 + 0.5) / m as f64).cos())
        .collect();
    let vals = buf[..m].iter().map(|z| z.re).collect();
    (xs, vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct GridStats {
    max_err_outside_band: f64,
    max_abs: f64,
}

impl GridStats {
    fn absorb(&mut self, delta: f64, x: f64, v: f64) {
        self.max_abs = self.max_abs.max(v.abs());
        if x.abs() >= delta {
            let err = (x.signum() - v).abs();
            self.max_err_outside_band = self.max_err_outside_band.max(err);
        }
    }
}

fn node_count(degree: usize) -> usize {
    (4 * degree).max(64)
}

fn node_stats(planner: &mut FftPlanner<f64>, s: &ChebyshevSeries) -> GridStats {
    let (xs, vals) = values_at_chebyshev_nodes(planner, &s.coeffs, node_count(s.degree()));
    let mut stats = GridStats::default();
    for (x, v) in xs.into_iter().zip(vals) {
        stats.absorb(s.delta, x, v);
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub max_err_outside_band: f64,
    pub max_abs_on_interval: f64,
    pub pass: bool,
}

/// Checks the band-error and boundedness ceilings on `grid_points` uniform
/// points over `[-1, 1]` together with the Chebyshev nodes of order `4 * degree`.
pub fn verify_bounds(s: &ChebyshevSeries, grid_points: usize) -> BoundsReport {
    let mut planner = FftPlanner::new();
    verify_with(&mut planner, s, grid_points)
}

fn verify_with(
    planner: &mut FftPlanner<f64>,
    s: &ChebyshevSeries,
    grid_points: usize,
) -> BoundsReport {
    let mut stats = node_stats(planner, s);
    let n = grid_points.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|i| (-1.0 + 2.0 * i as f64 / (n - 1) as f64).clamp(-1.0, 1.0))
        .collect();
    let mut vals = vec![0.0; n];
    odd_clenshaw(&s.coeffs, &xs, &mut vals);
    for (x, v) in xs.into_iter().zip(vals) {
        stats.absorb(s.delta, x, v);
    }
    BoundsReport {
        max_err_outside_band: stats.max_err_outside_band,
        max_abs_on_interval: stats.max_abs,
        pass: stats.max_err_outside_band <= C_SGN * s.eps && stats.max_abs <= 1.0 + BOUND_SLACK,
    }
}

/// Smoothing rate with `1 - erf(k delta) = eps`.
fn smoothing(delta: f64, eps: f64) -> f64 {
    erfc_inv(eps) / delta
}

/// Chebyshev coefficients `c_0..c_{len-1}` of `(1 - eps) erf(k x)` from `n` nodes.
fn erf_coefficients(planner: &mut FftPlanner<f64>, k: f64, eps: f64, n: usize, len: usize) -> Vec<f64> {
    let samples: Vec<f64> = (0..n)
        .map(|j| (1.0 - eps) * erf(k * (PI * (j as f64 + 0.5) / n as f64).cos()))
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (j, &f) in samples.iter().enumerate() {
        buf[j] = Complex64::new(f, 0.0);
        buf[2 * n - 1 - j] = Complex64::new(f, 0.0);
    }
    planner.plan_fft_forward(2 * n).process(&mut buf);
    (0..len)
        .map(|k| {
            if k % 2 == 0 {
                return 0.0;
            }
            let phase = Complex64::from_polar(1.0, -PI * k as f64 / (2 * n) as f64);
            let c = (phase * buf[k]).re / n as f64;
            if c.abs() < COEFF_FLOOR {
                0.0
            } else {
                c
            }
        })
        .collect()
}

/// Construction-side acceptance, stricter than [`verify_bounds`] on the ceiling
/// so that sampling between grid points cannot hide an overshoot past 1.
fn candidate_ok(planner: &mut FftPlanner<f64>, s: &ChebyshevSeries) -> bool {
    let stats = node_stats(planner, s);
    stats.max_err_outside_band <= C_SGN * s.eps && stats.max_abs <= 1.0 - 0.5 * s.eps
}

fn truncate(coeffs: &[f64], degree: usize, req: &SignPolyRequest) -> ChebyshevSeries {
    ChebyshevSeries::from_coeffs(coeffs[..=degree].to_vec(), req.delta, req.eps)
        .expect("erf coefficients are odd and finite")
}

fn odd_at_most(d: usize) -> usize {
    if d % 2 == 1 {
        d
    } else {
        d - 1
    }
}

/// Smallest odd degree (by doubling then bisection) whose truncated erf series
/// passes the bounds, verified once more on the full grid.
pub fn build_sign_poly(req: &SignPolyRequest) -> Result<ChebyshevSeries> {
    req.validate()?;
    let cap_err = || Error::DegreeCapExceeded {
        cap: req.max_degree,
        delta: req.delta,
        eps: req.eps,
    };
    let k = smoothing(req.delta, req.eps);
    // coefficients decay like exp(-j^2 / 4k^2); twice that cutoff is ample
    let needed = 4.0 * k * (10.0 / req.eps).ln().sqrt() + 64.0;
    let len = (needed.min(req.max_degree as f64) as usize + 2).min(req.max_degree + 1);
    let nodes = (4 * len).next_power_of_two().max(4096);
    let mut planner = FftPlanner::new();
    let coeffs = erf_coefficients(&mut planner, k, req.eps, nodes, len);

    let ok = |d: usize, planner: &mut FftPlanner<f64>| {
        candidate_ok(planner, &truncate(&coeffs, d, req))
    };
    let top = odd_at_most(len - 1);

    let mut lo = 0usize; // largest degree known to fail (0 = none tested)
    let mut hi = 1usize;
    loop {
        if ok(hi, &mut planner) {
            break;
        }
        lo = hi;
        if hi == top {
            return Err(cap_err());
        }
        hi = (2 * hi + 1).min(top);
    }
    while hi - lo > 2 {
        let mid = odd_at_most((lo + hi) / 2).max(lo + 2);
        if ok(mid, &mut planner) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut degree = hi;
    loop {
        let series = truncate(&coeffs, degree, req);
        let report = verify_with(&mut planner, &series, VERIFY_GRID_POINTS);
        if report.pass {
            log::debug!(
                "sign series delta={:e} eps={:e}: degree {} coeff_l1 {:.6}",
                req.delta,
                req.eps,
                degree,
                series.coeff_l1
            );
            return Ok(series);
        }
        if degree >= top {
            return Err(cap_err());
        }
        degree = odd_at_most((degree + (degree / 10).max(2)).min(top));
    }
}

/// Default cap on the odd degree.
pub const DEFAULT_MAX_DEGREE: usize = 200_001;

const CALIBRATION_ROUNDS: usize = 8;
const CALIBRATION_HEADROOM: f64 = 1.05;

/// Resolves the circular dependence between a schedule and the coefficient
/// bound it assumes: starting from `c_hat = 1`, builds the series the schedule
/// asks for and, while its `coeff_l1` exceeds `c_hat`, raises `c_hat` to
/// `1.05 * coeff_l1` and rebuilds. Returns the final `c_hat` and series.
pub fn calibrate_c_hat(
    request_for: impl Fn(f64) -> Result<SignPolyRequest>,
) -> Result<(f64, ChebyshevSeries)> {
    let mut c_hat = 1.0f64;
    for _ in 0..CALIBRATION_ROUNDS {
        let series = build_sign_poly(&request_for(c_hat)?)?;
        if series.coeff_l1() <= c_hat {
            return Ok((c_hat, series));
        }
        c_hat = CALIBRATION_HEADROOM * series.coeff_l1();
        log::debug!("raising c_hat to {c_hat:.6}");
    }
    Err(Error::NoConvergence("coefficient-bound calibration"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn build(delta: f64, eps: f64) -> ChebyshevSeries {
        build_sign_poly(&SignPolyRequest::new(delta, eps, 200_001).unwrap()).unwrap()
    }

    /// Direct cosine-sum evaluation, independent of both Clenshaw and the FFT.
    fn cosine_sum(s: &ChebyshevSeries, x: f64) -> f64 {
        let theta = x.acos();
        s.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { c / 2.0 } else { c * (k as f64 * theta).cos() })
            .sum()
    }

    #[test]
    fn request_validation() {
        assert!(SignPolyRequest::new(0.0, 0.1, 11).is_err());
        assert!(SignPolyRequest::new(0.1, 1.0, 11).is_err());
        assert!(SignPolyRequest::new(0.1, 0.1, 10).is_err());
        assert!(SignPolyRequest::new(0.1, 0.1, 11).is_ok());
    }

    #[test]
    fn coarse_request_has_low_degree() {
        let s = build(0.5, 0.4);
        assert!(s.degree() <= 15, "degree {}", s.degree());
        assert!(verify_bounds(&s, 10_000).pass);
    }

    #[test]
    fn band_error_within_five_eps() {
        let s = build(0.1, 1e-3);
        let report = verify_bounds(&s, 100_000);
        assert!(report.pass);
        assert!(report.max_err_outside_band <= 5e-3);
        assert!(report.max_abs_on_interval <= 1.0 + 1e-12);
        assert!((s.eval(0.8).unwrap() - 1.0).abs() <= 5e-3);
    }

    #[test]
    fn evaluation_is_odd_and_zero_at_origin() {
        let s = build(0.05, 1e-2);
        assert_eq!(s.eval(0.0).unwrap(), 0.0);
        for x in [0.01, 0.3, 0.77, 1.0] {
            assert_abs_diff_eq!(s.eval(-x).unwrap(), -s.eval(x).unwrap(), epsilon = 1e-12);
        }
        assert!(s.coeffs().iter().step_by(2).all(|&c| c == 0.0));
        assert!(matches!(s.eval(1.5), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn three_evaluation_routes_agree() {
        let s = build(0.05, 1e-3);
        let mut planner = FftPlanner::new();
        let (xs, vals) = values_at_chebyshev_nodes(&mut planner, s.coeffs(), 4 * s.degree());
        for i in (0..xs.len()).step_by(37) {
            let direct = cosine_sum(&s, xs[i]);
            assert_abs_diff_eq!(vals[i], direct, epsilon = 1e-12);
            assert_abs_diff_eq!(s.eval(xs[i]).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn coefficients_match_quadrature_oracle() {
        // c_k = (2/pi) int_0^pi f(cos t) cos(k t) dt by a plain midpoint rule
        let (delta, eps) = (0.2, 1e-2);
        let s = build(delta, eps);
        let k = smoothing(delta, eps);
        let m = 20_000;
        for idx in [1usize, 3, 9] {
            let sum: f64 = (0..m)
                .map(|j| {
                    let t = PI * (j as f64 + 0.5) / m as f64;
                    (1.0 - eps) * erf(k * t.cos()) * (idx as f64 * t).cos()
                })
                .sum();
            assert_abs_diff_eq!(s.coeffs()[idx], 2.0 * sum / m as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn verify_bounds_examples() {
        let t1 = ChebyshevSeries::from_coeffs(vec![0.0, 1.0], 0.5, 0.2).unwrap();
        let report = verify_bounds(&t1, 10_000);
        assert_abs_diff_eq!(report.max_err_outside_band, 0.5, epsilon = 2e-4);
        assert!(report.pass);

        let s = build(0.1, 1e-2);
        let bumped = verify_bounds(&s.scaled(1.1), 10_000);
        assert!(bumped.max_abs_on_interval > 1.0 && !bumped.pass);
        assert!(verify_bounds(&s, 100_000).pass);
    }

    #[test]
    fn cap_is_enforced() {
        let req = SignPolyRequest::new(0.01, 1e-3, 31).unwrap();
        assert!(matches!(build_sign_poly(&req), Err(Error::DegreeCapExceeded { cap: 31, .. })));
    }

    #[test]
    fn degree_is_minimal_under_construction_check() {
        let req = SignPolyRequest::new(0.1, 1e-2, 200_001).unwrap();
        let s = build_sign_poly(&req).unwrap();
        let mut planner = FftPlanner::new();
        let below = ChebyshevSeries::from_coeffs(s.coeffs()[..s.degree() - 1].to_vec(), 0.1, 1e-2)
            .unwrap();
        assert!(!candidate_ok(&mut planner, &below));
    }

    #[test]
    fn degree_scaling_and_l1_growth() {
        for eps in [1e-2, 1e-3] {
            let mut prev: Option<usize> = None;
            for delta in [0.2, 0.1, 0.05, 0.025] {
                let s = build(delta, eps);
                if let Some(p) = prev {
                    assert!(s.degree() <= 4 * p, "{} vs {}", s.degree(), p);
                }
                prev = Some(s.degree());
                assert!(s.coeff_l1() < 10.0);
            }
        }
    }

    #[test]
    fn json_export() {
        let s = ChebyshevSeries::from_coeffs(vec![0.0, 0.5], 0.25, 0.125).unwrap();
        assert_eq!(
            s.to_json(),
            r#"{"degree":1,"delta":2.5000000000000000e-1,"eps":1.2500000000000000e-1,"coeffs":[0.0000000000000000e0,5.0000000000000000e-1],"coeff_l1":5.0000000000000000e-1}"#
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn oddness_on_random_points(x in -1.0f64..=1.0, delta in 0.05f64..0.5, eps in 1e-3f64..0.1) {
            let s = build(delta, eps);
            let a = s.eval(x).unwrap();
            prop_assert!((s.eval(-x).unwrap() + a).abs() <= 1e-12);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }
    }
}
