mod common;

use eqc_transfer::bound::{
    d_param, d_struct, fit_alpha, gen_error, generator_difference, tetrahedral, transfer_lower_bound,
    unitary_deviation, BoundInputs, GeneratorPool,
};
use proptest::prelude::*;

#[test]
fn unitary_deviation_and_step_one() {
    let o = common::criterion_4();
    assert!(o.pass, "{}", o.detail);
}

#[test]
fn lipschitz_pairs() {
    let o = common::criterion_5();
    assert!(o.pass, "{}", o.detail);
}

#[test]
fn arithmetic() {
    let o = common::criterion_6();
    assert!(o.pass, "{}", o.detail);
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn inputs(n: usize, m: usize, l1: f64, tmax: f64, alpha: Option<f64>) -> BoundInputs {
    BoundInputs {
        n,
        m,
        theta_l1: l1,
        theta_max: tmax,
        a_norm: 1.0,
        l_u: 2.0,
        c_prime: 0.25,
        m_episodes: 1000,
        delta: 0.05,
        alpha_n: alpha,
    }
}

proptest! {
    #[test]
    fn tetrahedral_is_a_binomial(n in 0..2000u64) {
        prop_assert_eq!(tetrahedral(n), binom(n + 3, 3));
    }

    #[test]
    fn generalisation_term_shrinks_with_episodes(n in 1..20usize, m in 1..5000usize, delta in 0.001..0.5f64) {
        let a = gen_error(n, m, delta).unwrap();
        let b = gen_error(n, 2 * m, delta).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
    }

    #[test]
    fn lower_bound_is_p_hat_minus_terms(
        n in 2..10usize,
        gap in 0..8usize,
        p in 0.0..=1.0f64,
        l1 in 0.0..3.0f64,
        tmax in 0.0..1.5f64,
    ) {
        let inp = inputs(n, n + gap, l1, tmax, None);
        let r = transfer_lower_bound(p, &inp).unwrap();
        let m = (n + gap) as f64;
        let by_hand_param = 2.0 * l1 * tmax.exp() * 2.0 * gap as f64 / m;
        let by_hand_struct = 0.25 * gap as f64 / (n as f64).sqrt();
        prop_assert!((r.d_param - by_hand_param).abs() <= 1e-12 * by_hand_param.max(1.0));
        prop_assert!((r.d_struct - by_hand_struct).abs() <= 1e-12);
        prop_assert!((r.lower_bound - (p - r.gen_error - r.d_param - r.d_struct)).abs() <= 1e-12);
        if gap == 0 {
            prop_assert_eq!(r.d_total, 0.0);
        }
    }

    #[test]
    fn penalties_grow_with_target(n in 2..10usize, gap in 1..8usize, alpha in 0.01..2.0f64) {
        for a in [None, Some(alpha)] {
            prop_assert!(d_param(&inputs(n, n + gap + 1, 1.0, 0.5, a)) > d_param(&inputs(n, n + gap, 1.0, 0.5, a)));
        }
        prop_assert!(d_struct(n, n + gap + 1, 0.3) > d_struct(n, n + gap, 0.3));
    }

    #[test]
    fn alpha_recovers_noise_free_slope(alpha in 0.0..3.0f64) {
        let recs: Vec<_> = [(4, 6), (4, 10), (6, 15), (8, 12)]
            .iter()
            .map(|&(n, m)| (n, m, alpha * (m - n) as f64 / m as f64))
            .collect();
        prop_assert!((fit_alpha(&recs).unwrap() - alpha).abs() < 1e-12);
    }
}

#[test]
fn pooled_x_difference_is_tight() {
    // (1/m)ΣX over m qubits minus (1/n)ΣX over the first n: top eigenvalue
    // (m−n)/m + n(1/n − 1/m) = 2(m−n)/m
    for (n, m) in [(2, 4), (3, 5), (4, 8)] {
        let c = generator_difference(GeneratorPool::X, n, m).unwrap();
        let exact = 2.0 * (m - n) as f64 / m as f64;
        assert!((c.measured - exact).abs() < 1e-6, "{n}->{m}: {}", c.measured);
    }
}

#[test]
fn zero_angles_give_no_deviation() {
    let t = unitary_deviation(3, 5, &[0.0, 0.0, 0.0]).unwrap();
    assert!(t.true_deviation < 1e-12 && t.bound == 0.0);
}
