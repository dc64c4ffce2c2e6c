use approx::assert_abs_diff_eq;
use qzk_core::blockenc::{block_of, halved_difference_encoding, uhlmann_encoding};
use qzk_core::circuits::{parse_pair, random_pair, serialize_pair};
use qzk_core::helstrom::{advantage, algo_helstrom, exact_helstrom, plan_hh};
use qzk_core::numerics::{fidelity_sq, max_abs_diff, trace_distance};
use qzk_core::protocols::{
    distance_test_accept_prob, fidelity_test_accept_prob, simulate_distance_test,
    simulate_fidelity_test,
};
use qzk_core::qsvt::SvtMode;
use qzk_core::signpoly::DEFAULT_MAX_DEGREE;
use qzk_core::uhlmann::{algo_uhlmann, exact_uhlmann, overlap_sq, plan_uhlmann, x_uhl};

#[test]
fn serialized_pairs_give_identical_results() {
    let pair = random_pair(3, 1, 15, 42).unwrap();
    let back = parse_pair(&serialize_pair(&pair)).unwrap();
    let (a0, a1) = pair.reduced_states().unwrap();
    let (b0, b1) = back.reduced_states().unwrap();
    assert_eq!(max_abs_diff(&a0, &b0), 0.0);
    assert_eq!(max_abs_diff(&a1, &b1), 0.0);
}

#[test]
fn encodings_hold_the_oracle_operators() {
    for seed in 0..5 {
        let pair = random_pair(3, 1 + seed as usize % 2, 20, seed).unwrap();
        let (r0, r1) = pair.reduced_states().unwrap();
        let diff = (&r0 - &r1).scale(0.5);
        let hd = halved_difference_encoding(&pair).unwrap();
        assert!(max_abs_diff(&block_of(&hd), &diff) < 1e-12);
        let w = uhlmann_encoding(&pair).unwrap();
        assert!(max_abs_diff(&block_of(&w), &x_uhl(&pair).unwrap()) < 1e-12);
    }
}

#[test]
fn honest_provers_meet_completeness_at_eps() {
    let eps = 0.05;
    let hh = plan_hh(eps, 1, DEFAULT_MAX_DEGREE).unwrap();
    let uh = plan_uhlmann(eps, 1, DEFAULT_MAX_DEGREE).unwrap();
    for seed in 0..6 {
        let pair = random_pair(3, 1, 20, 100 + seed).unwrap();
        let (r0, r1) = pair.reduced_states().unwrap();
        let t = trace_distance(&r0, &r1).unwrap();
        let f2 = fidelity_sq(&r0, &r1).unwrap();

        let exact = exact_helstrom(&r0, &r1).unwrap();
        assert_abs_diff_eq!(advantage(&exact, &r0, &r1).unwrap(), t, epsilon = 1e-10);
        let algo = algo_helstrom(&pair, &hh, SvtMode::Chebyshev).unwrap();
        let p = distance_test_accept_prob(&algo.measurement, &r0, &r1).unwrap();
        assert!(p >= 0.5 + 0.5 * (t - eps) && p <= 0.5 + 0.5 * t + 1e-9);
        assert_abs_diff_eq!(simulate_distance_test(&pair, &algo.measurement).unwrap(), p, epsilon = 1e-10);

        let u = exact_uhlmann(&pair).unwrap();
        assert_abs_diff_eq!(overlap_sq(&pair, &u).unwrap(), f2, epsilon = 1e-9);
        let algo = algo_uhlmann(&pair, &uh, SvtMode::Chebyshev).unwrap();
        let acc = fidelity_test_accept_prob(&pair, &algo.prover).unwrap();
        assert!(acc >= f2 - eps && acc <= f2 + 1e-9, "{acc} vs {f2}");
        assert_abs_diff_eq!(simulate_fidelity_test(&pair, &algo.prover).unwrap(), acc, epsilon = 1e-10);
    }
}
