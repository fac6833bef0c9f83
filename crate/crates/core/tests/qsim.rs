mod common;

use eqc_transfer::qsim::{
    dense_unitary, operator_norm, zero_state, CMatrix, Complex64, GateOp, Observable, StateVector,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::max_abs_diff;

fn gate(k: usize) -> impl Strategy<Value = GateOp> {
    let pi = std::f64::consts::PI;
    (0..6u8, 0..k, 1..k.max(2), -pi..pi).prop_map(move |(g, q, off, t)| {
        let other = (q + off) % k;
        match g {
            _ if k == 1 && g >= 4 => GateOp::RY(q, t),
            0 => GateOp::H(q),
            1 => GateOp::RX(q, t),
            2 => GateOp::RY(q, t),
            3 => GateOp::RZ(q, t),
            4 => GateOp::Cnot { control: q, target: other },
            _ => GateOp::RZZ(q, other, t),
        }
    })
}

fn circuit(max_k: usize, max_depth: usize) -> impl Strategy<Value = (usize, Vec<GateOp>)> {
    (1..=max_k).prop_flat_map(move |k| (Just(k), prop::collection::vec(gate(k), 0..=max_depth)))
}

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 matrix of a single-qubit gate, from the textbook definitions.
fn one_qubit(g: &GateOp) -> M {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        GateOp::H(_) => M::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        GateOp::RX(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            M::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)])
        }
        GateOp::RY(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            M::from_row_slice(2, 2, &[c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)])
        }
        GateOp::RZ(_, t) => M::from_row_slice(
            2,
            2,
            &[Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
        ),
        _ => unreachable!(),
    }
}

/// Full `2^k` matrix built from Kronecker products and projectors, with
/// qubit 0 as the least-significant factor.
fn kron_unitary(circuit: &[GateOp], k: usize) -> M {
    let id = M::identity(2, 2);
    let p0 = M::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p1 = M::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let x = M::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let z = M::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    // factors[q] placed so that the highest qubit is leftmost
    let embed = |factors: &dyn Fn(usize) -> M| {
        let mut out = M::identity(1, 1);
        for q in (0..k).rev() {
            out = out.kronecker(&factors(q));
        }
        out
    };
    let dim = 1 << k;
    let mut u = M::identity(dim, dim);
    for g in circuit {
        let step = match *g {
            GateOp::Cnot { control, target } => {
                let a = embed(&|q| if q == control { p0.clone() } else { id.clone() });
                let b = embed(&|q| {
                    if q == control {
                        p1.clone()
                    } else if q == target {
                        x.clone()
                    } else {
                        id.clone()
                    }
                });
                a + b
            }
            GateOp::RZZ(i, j, t) => {
                let zz = embed(&|q| if q == i || q == j { z.clone() } else { id.clone() });
                // exp(−iθZZ) = cos θ·I − i sin θ·ZZ
                M::identity(dim, dim) * c(t.cos(), 0.0) + zz * c(0.0, -t.sin())
            }
            GateOp::H(q0) | GateOp::RX(q0, _) | GateOp::RY(q0, _) | GateOp::RZ(q0, _) => {
                let m = one_qubit(g);
                embed(&|q| if q == q0 { m.clone() } else { id.clone() })
            }
        };
        u = step * u;
    }
    u
}

fn to_nalgebra(m: &CMatrix) -> M {
    M::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn norm_is_preserved((k, c) in circuit(8, 40)) {
        let mut s = zero_state(k).unwrap();
        s.run(&c).unwrap();
        prop_assert!((s.norm_sqr().sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_unitary_is_unitary((k, c) in circuit(6, 40)) {
        let u = dense_unitary(&c, k).unwrap();
        let uu = u.adjoint().matmul(&u).unwrap();
        prop_assert!(uu.max_abs_diff(&CMatrix::identity(1 << k)) < 1e-8);
    }

    #[test]
    fn gates_match_dense_product((k, c) in circuit(6, 40)) {
        let mut s = zero_state(k).unwrap();
        s.run(&c).unwrap();
        let u = dense_unitary(&c, k).unwrap();
        prop_assert!(max_abs_diff(s.amplitudes(), &u.column(0)) < 1e-9);
    }

    #[test]
    fn gates_match_kronecker_oracle((k, c) in circuit(5, 25)) {
        let ours = to_nalgebra(&dense_unitary(&c, k).unwrap());
        let oracle = kron_unitary(&c, k);
        let worst = (ours - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-9, "{}", worst);
    }

    #[test]
    fn rzz_keeps_probabilities(
        k in 2..=8usize,
        seed in any::<u64>(),
        angles in prop::collection::vec((0..8usize, 1..8usize, -4.0..4.0f64), 1..12),
    ) {
        let mut rng = eqc_transfer::seeding::rng(seed);
        let mut s = common::random_state(k, &mut rng);
        let before = s.probabilities();
        for (i, off, t) in angles {
            let i = i % k;
            let j = (i + 1 + off % (k - 1)) % k;
            s.apply_gate(&GateOp::RZZ(i, j, t)).unwrap();
        }
        for (a, b) in before.iter().zip(s.probabilities()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_undoes_circuit((k, c) in circuit(6, 30)) {
        let mut rng = eqc_transfer::seeding::rng(c.len() as u64);
        let start = common::random_state(k, &mut rng);
        let mut s = start.clone();
        s.run(&c).unwrap();
        let undo: Vec<GateOp> = c.iter().rev().map(GateOp::inverse).collect();
        s.run(&undo).unwrap();
        prop_assert!(max_abs_diff(s.amplitudes(), start.amplitudes()) < 1e-9);
    }

    #[test]
    fn operator_norm_matches_svd(dim_log in 1..=5usize, seed in any::<u64>()) {
        use rand::Rng;
        let dim = 1 << dim_log;
        let mut rng = eqc_transfer::seeding::rng(seed);
        let rows: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| (0..dim).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect();
        let m = CMatrix::from_rows(&rows).unwrap();
        let ours = operator_norm(&m).unwrap();
        let svd = to_nalgebra(&m).singular_values().max();
        prop_assert!(ours <= svd * (1.0 + 1e-12));
        prop_assert!((ours - svd).abs() <= 1e-9 * svd, "{} vs {}", ours, svd);
    }
}

#[test]
fn unitary_difference_norm_matches_svd() {
    let mut rng = eqc_transfer::seeding::rng(11);
    for i in 0..40 {
        let k = 3 + i % 4;
        let a = eqc_transfer::bound::random_circuit(k, 12, &mut rng);
        let b = eqc_transfer::bound::random_circuit(k, 12, &mut rng);
        let d = dense_unitary(&a, k).unwrap().sub(&dense_unitary(&b, k).unwrap()).unwrap();
        let svd = to_nalgebra(&d).singular_values().max();
        let ours = operator_norm(&d).unwrap();
        assert!(ours <= svd + 1e-12 && svd - ours < 1e-9 * svd.max(1.0), "{ours} vs {svd}");
    }
}

#[test]
fn large_unitary_difference_norm_matches_svd() {
    let mut rng = eqc_transfer::seeding::rng(12);
    for _ in 0..3 {
        let a = eqc_transfer::bound::random_circuit(8, 30, &mut rng);
        let mut b = a.clone();
        b.extend(eqc_transfer::bound::random_circuit(8, 3, &mut rng));
        let d = dense_unitary(&a, 8).unwrap().sub(&dense_unitary(&b, 8).unwrap()).unwrap();
        let svd = to_nalgebra(&d).singular_values().max();
        let ours = operator_norm(&d).unwrap();
        assert!(ours <= svd + 1e-12 && svd - ours < 1e-9 * svd.max(1.0), "{ours} vs {svd}");
    }
}

#[test]
fn expectation_matches_diagonal_sum() {
    let mut rng = eqc_transfer::seeding::rng(4);
    let s: StateVector = common::random_state(4, &mut rng);
    let obs = Observable::zz(0, 2).plus(Observable::term(-0.5, &[1]));
    let by_hand: f64 = s
        .probabilities()
        .iter()
        .enumerate()
        .map(|(x, p)| {
            let z = |q: usize| if x >> q & 1 == 0 { 1.0 } else { -1.0 };
            p * (z(0) * z(2) - 0.5 * z(1))
        })
        .sum();
    assert!((s.expectation_z(&obs).unwrap() - by_hand).abs() < 1e-12);
}

#[test]
fn qubit_zero_is_least_significant() {
    let mut s = zero_state(3).unwrap();
    s.apply_gate(&GateOp::RX(0, std::f64::consts::PI)).unwrap();
    let p = s.probabilities();
    assert!((p[1] - 1.0).abs() < 1e-12);
}
