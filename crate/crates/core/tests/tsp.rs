mod common;

use eqc_transfer::tsp::{
    brute_force, christofides_with_info, env_reset, env_step, gen_instance, held_karp, nearest_neighbor,
    normalize_performance, PerfNormalizer, Tour, TspInstance,
};
use proptest::prelude::*;

use common::GENERATORS;

fn generator() -> impl Strategy<Value = eqc_transfer::tsp::Generator> {
    prop::sample::select(GENERATORS.to_vec())
}

fn check_tour(inst: &TspInstance, t: &Tour) {
    let mut seen = vec![false; inst.k()];
    for &c in &t.order {
        assert!(!seen[c], "city {c} twice");
        seen[c] = true;
    }
    assert!(seen.iter().all(|&s| s));
    let k = t.order.len();
    let by_hand: f64 = (0..k).map(|i| inst.weight(t.order[i], t.order[(i + 1) % k])).sum();
    assert!((by_hand - t.length).abs() < 1e-9);
}

#[test]
fn held_karp_equals_brute_force_exhaustively() {
    let o = common::criterion_1();
    assert!(o.pass, "{}", o.detail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solvers_return_valid_tours(k in 3..=10usize, g in generator(), seed in any::<u64>()) {
        let inst = gen_instance(k, g, seed).unwrap();
        let opt = held_karp(&inst).unwrap();
        for t in [opt.clone(), nearest_neighbor(&inst, 0).unwrap(), christofides_with_info(&inst).unwrap().0] {
            check_tour(&inst, &t);
            prop_assert!(t.length >= opt.length - 1e-9);
        }
    }

    #[test]
    fn christofides_within_three_halves_on_metric(k in 3..=12usize, seed in any::<u64>()) {
        let inst = gen_instance(k, eqc_transfer::tsp::Generator::EuclideanUnitSquare, seed).unwrap();
        let (t, exact) = christofides_with_info(&inst).unwrap();
        if exact {
            prop_assert!(t.length <= 1.5 * held_karp(&inst).unwrap().length + 1e-9);
        }
    }

    #[test]
    fn rewards_sum_to_minus_tour_length(
        k in 3..=10usize,
        g in generator(),
        seed in any::<u64>(),
        start_pick in any::<prop::sample::Index>(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 10),
    ) {
        let inst = gen_instance(k, g, seed).unwrap();
        let start = start_pick.index(k);
        let mut s = env_reset(&inst, start).unwrap();
        let mut order = vec![start];
        let mut total = 0.0;
        for p in &picks {
            let open: Vec<usize> = s.unvisited(k).collect();
            if open.is_empty() {
                break;
            }
            let a = open[p.index(open.len())];
            let out = env_step(&inst, &s, a).unwrap();
            total += out.reward;
            order.push(a);
            s = out.state;
            prop_assert_eq!(out.done, order.len() == k);
        }
        let tour = Tour::from_order(&inst, order).unwrap();
        prop_assert_eq!(s.partial_cost, tour.length);
        prop_assert!((total + tour.length).abs() <= 1e-12 * tour.length);
        prop_assert!(env_step(&inst, &s, 0).is_err());
    }

    #[test]
    fn performance_is_monotone(
        l_opt in 0.5..10.0f64,
        spread in 0.0..5.0f64,
        a in 0.0..20.0f64,
        b in 0.0..20.0f64,
    ) {
        let norm = PerfNormalizer { l_opt, l_max: l_opt + spread };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p, q) = (normalize_performance(lo, &norm), normalize_performance(hi, &norm));
        prop_assert!(p.value >= q.value);
        prop_assert!((0.0..=1.0).contains(&p.value) && (0.0..=1.0).contains(&q.value));
    }

    #[test]
    fn relabeling_keeps_optimum(k in 4..=8usize, g in generator(), seed in any::<u64>(), pseed in any::<u64>()) {
        let inst = gen_instance(k, g, seed).unwrap();
        let perm = common::random_perm(k, &mut eqc_transfer::seeding::rng(pseed));
        let a = held_karp(&inst).unwrap().length;
        let b = held_karp(&inst.permuted(&perm).unwrap()).unwrap().length;
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn generation_is_reproducible() {
    for g in GENERATORS {
        let a = gen_instance(7, g, 99).unwrap();
        let b = gen_instance(7, g, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_instance(7, g, 100).unwrap());
        let back = TspInstance::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
    }
}

#[test]
fn brute_force_refuses_large_instances() {
    let inst = gen_instance(10, GENERATORS[0], 0).unwrap();
    assert!(brute_force(&inst).is_err());
    assert!(held_karp(&inst).is_ok());
}
