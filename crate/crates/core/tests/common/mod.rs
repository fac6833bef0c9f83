//! Shared checks for the integration suites and the acceptance runner.
#![allow(dead_code)]

use eqc_transfer::agent;
use eqc_transfer::ansatz::{AnsatzKind, AnsatzParams, Readout};
use eqc_transfer::qsim::{dense_unitary, zero_state, CMatrix, Complex64, GateOp, StateVector};
use eqc_transfer::seeding;
use eqc_transfer::tsp::{self, Generator, TourState, TspInstance};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

pub const GENERATORS: [Generator; 2] = [Generator::RandomUniform, Generator::EuclideanUnitSquare];

pub fn random_perm(k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    p.shuffle(rng);
    p
}

/// A reachable mid-episode state: `current` visited, at least one city open.
pub fn random_tour_state(k: usize, rng: &mut impl Rng) -> TourState {
    let current = rng.random_range(0..k);
    let mut visited = 1u32 << current;
    let mut start = current;
    for c in 0..k {
        if c != current && rng.random_bool(0.4) {
            visited |= 1 << c;
            start = c;
        }
    }
    if visited.count_ones() as usize == k {
        let free = (0..k).find(|&c| c != current).unwrap();
        visited &= !(1 << free);
        if start == free {
            start = current;
        }
    }
    TourState {
        start,
        current,
        visited,
        partial_cost: 0.0,
    }
}

pub fn random_state(k: usize, rng: &mut impl Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..1usize << k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / n).collect()).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn criterion_1() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for g in GENERATORS {
        for k in 4..=9 {
            for seed in 0..100 {
                let inst = tsp::gen_instance(k, g, seed).unwrap();
                let hk = tsp::held_karp(&inst).unwrap();
                let bf = tsp::brute_force(&inst).unwrap();
                checked += 1;
                if hk.length != bf.length {
                    bad.push(format!("{}/k={k}/seed={seed}: {} vs {}", g.as_str(), hk.length, bf.length));
                }
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("{checked} instances, {} mismatches {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    )
}

pub fn criterion_2() -> Outcome {
    let mut rng = seeding::rng(2);
    let mut worst_norm = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let depth = rng.random_range(0..=40);
        let c = eqc_transfer::bound::random_circuit(k, depth, &mut rng);
        let mut s = zero_state(k).unwrap();
        s.run(&c).unwrap();
        worst_norm = worst_norm.max((s.norm_sqr().sqrt() - 1.0).abs());
    }
    let mut worst_unitary = 0.0f64;
    let mut worst_agree = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(1..=6);
        let depth = rng.random_range(0..=40);
        let c = eqc_transfer::bound::random_circuit(k, depth, &mut rng);
        let u = dense_unitary(&c, k).unwrap();
        let uu = u.adjoint().matmul(&u).unwrap();
        worst_unitary = worst_unitary.max(uu.max_abs_diff(&CMatrix::identity(1 << k)));
        let mut s = zero_state(k).unwrap();
        s.run(&c).unwrap();
        worst_agree = worst_agree.max(max_abs_diff(s.amplitudes(), &u.column(0)));
    }
    let mut worst_diag = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(2..=8);
        let mut s = random_state(k, &mut rng);
        let before = s.probabilities();
        for _ in 0..10 {
            let i = rng.random_range(0..k);
            let j = (i + rng.random_range(1..k)) % k;
            s.apply_gate(&GateOp::RZZ(i, j, rng.random_range(-3.2..3.2))).unwrap();
        }
        let after = s.probabilities();
        for (a, b) in before.iter().zip(&after) {
            worst_diag = worst_diag.max((a - b).abs());
        }
    }
    Outcome::new(
        worst_norm <= 1e-9 && worst_unitary <= 1e-8 && worst_agree <= 1e-9 && worst_diag <= 1e-12,
        format!(
            "norm {worst_norm:.1e}, unitarity {worst_unitary:.1e}, gate-vs-dense {worst_agree:.1e}, rzz |amp|² {worst_diag:.1e}"
        ),
    )
}

/// Largest violation of `Q'[π(j)] = Q[j]` over one instance, state and
/// parameter draw.
pub fn equivariance_gap(inst: &TspInstance, state: &TourState, params: &AnsatzParams, perm: &[usize]) -> f64 {
    let q = agent::q_values(inst, state, params).unwrap();
    let pinst = inst.permuted(perm).unwrap();
    let qp = agent::q_values(&pinst, &state.permuted(perm), params).unwrap();
    let mut worst = 0.0f64;
    for (j, &v) in q.iter().enumerate() {
        let w = qp[perm[j]];
        if v == agent::MASKED || w == agent::MASKED {
            if v != w {
                return f64::INFINITY;
            }
        } else {
            worst = worst.max((v - w).abs());
        }
    }
    worst
}

/// Whether the greedy tour on the relabelled instance is the relabelled tour.
pub fn relabeling_holds(inst: &TspInstance, params: &AnsatzParams, perm: &[usize]) -> bool {
    let tour = agent::greedy_rollout(inst, params, 0, Readout::CurrentPair).unwrap();
    let pinst = inst.permuted(perm).unwrap();
    let ptour = agent::greedy_rollout(&pinst, params, perm[0], Readout::CurrentPair).unwrap();
    let mapped: Vec<usize> = tour.order.iter().map(|&c| perm[c]).collect();
    mapped == ptour.order && (tour.length - ptour.length).abs() < 1e-9
}

pub fn criterion_3() -> Outcome {
    let mut rng = seeding::rng(3);
    let pi = std::f64::consts::PI;
    let mut worst = 0.0f64;
    let mut relabel_fail = 0;
    let mut relabel_total = 0;
    for k in 3..=5 {
        for i in 0..20 {
            let g = GENERATORS[i % 2];
            let inst = tsp::gen_instance(k, g, rng.random()).unwrap();
            let layers = rng.random_range(1..=3);
            let params = AnsatzParams::random(AnsatzKind::Eqc, layers, k, pi, &mut rng).unwrap();
            for _ in 0..20 {
                let perm = random_perm(k, &mut rng);
                let state = random_tour_state(k, &mut rng);
                worst = worst.max(equivariance_gap(&inst, &state, &params, &perm));
                relabel_total += 1;
                if !relabeling_holds(&inst, &params, &perm) {
                    relabel_fail += 1;
                }
            }
        }
    }
    Outcome::new(
        worst <= 1e-9 && relabel_fail == 0,
        format!("max Q gap {worst:.1e} over 1200 draws, tour relabeling {relabel_fail}/{relabel_total} failures"),
    )
}

pub const DEVIATION_PAIRS: [(usize, usize); 5] = [(2, 3), (2, 4), (3, 5), (4, 6), (4, 8)];

pub fn criterion_4() -> Outcome {
    use eqc_transfer::bound::{generator_difference, verify_unitary_deviation, GeneratorPool};
    let mut trials = 0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for (i, &(n, m)) in DEVIATION_PAIRS.iter().enumerate() {
        for depth in 1..=4 {
            let rep = verify_unitary_deviation(n, m, depth, 50, 40 + 10 * i as u64 + depth as u64).unwrap();
            trials += rep.trials.len();
            violations += rep.violations();
            for t in &rep.trials {
                min_slack = min_slack.min(t.slack());
            }
        }
    }
    let mut step1 = 0;
    let mut step1_fail = Vec::new();
    for n in 2..=8 {
        for m in n..=8 {
            for pool in [GeneratorPool::X, GeneratorPool::ZZ] {
                let c = generator_difference(pool, n, m).unwrap();
                step1 += 1;
                if !c.holds() {
                    step1_fail.push((pool, n, m, c.measured, c.bound));
                }
            }
        }
    }
    Outcome::new(
        violations == 0 && step1_fail.is_empty(),
        format!(
            "{violations}/{trials} deviation violations (min slack {min_slack:.2e}), step-1 {}/{step1} failures {:?}",
            step1_fail.len(),
            step1_fail
        ),
    )
}

pub fn criterion_5() -> Outcome {
    let samples = eqc_transfer::bound::lipschitz_check(200, 5, 5).unwrap();
    let violations = samples.iter().filter(|s| s.value_gap > s.bound + 1e-9).count();
    let ratio = samples
        .iter()
        .filter(|s| s.bound > 0.0)
        .map(|s| s.value_gap / s.bound)
        .fold(0.0, f64::max);
    Outcome::new(
        samples.len() == 200 && violations == 0,
        format!("{violations}/{} violations, max gap/bound {ratio:.3}", samples.len()),
    )
}

pub fn criterion_6() -> Outcome {
    use eqc_transfer::bound::{d_param, d_struct, fit_alpha, tetrahedral, BoundInputs};
    let mut notes = Vec::new();
    let tet = tetrahedral(1) == 4 && tetrahedral(4) == 35;
    if !tet {
        notes.push("tetrahedral".to_string());
    }
    let inputs = |n: usize, m: usize, alpha: Option<f64>| BoundInputs {
        n,
        m,
        theta_l1: 1.3,
        theta_max: 0.7,
        a_norm: 1.0,
        l_u: 2.0,
        c_prime: 0.4,
        m_episodes: 1000,
        delta: 0.05,
        alpha_n: alpha,
    };
    let mut zero = true;
    let mut monotone = true;
    for n in 3..=10 {
        for alpha in [None, Some(0.3)] {
            zero &= d_param(&inputs(n, n, alpha)) == 0.0 && d_struct(n, n, 0.4) == 0.0;
            let mut prev = (0.0, 0.0);
            for m in n + 1..=16 {
                let cur = (d_param(&inputs(n, m, alpha)), d_struct(n, m, 0.4));
                monotone &= cur.0 > prev.0 && cur.1 > prev.1;
                prev = cur;
            }
        }
    }
    if !zero {
        notes.push("nonzero at m=n".into());
    }
    if !monotone {
        notes.push("not monotone".into());
    }
    let mut rng = seeding::rng(6);
    let mut records = Vec::new();
    for n in [4, 6, 8, 10] {
        for m in [6, 8, 10, 12, 15] {
            if m > n {
                let x = (m - n) as f64 / m as f64;
                records.push((n, m, 0.3 * x + rng.random_range(-0.02..0.02)));
            }
        }
    }
    let alpha = fit_alpha(&records).unwrap();
    let fit_ok = (alpha - 0.3).abs() <= 0.05;
    if !fit_ok {
        notes.push(format!("alpha {alpha}"));
    }
    Outcome::new(
        tet && zero && monotone && fit_ok,
        format!("T(1)={} T(4)={}, fitted slope {alpha:.4} {}", tetrahedral(1), tetrahedral(4), notes.join(", ")),
    )
}

pub mod grid {
    use std::collections::BTreeMap;
    use std::path::{Path, PathBuf};

    use eqc_transfer::ansatz::AnsatzKind;
    use eqc_transfer::harness::{
        enumerate_jobs, read_telemetry, run_bound_overlay, run_grid, BoundMode, BoundRow, ExperimentConfig, Job,
        ResultStore, RunResult,
    };

    use super::Outcome;

    pub const SEEDS: u64 = 10;

    pub fn eqc_config() -> ExperimentConfig {
        ExperimentConfig {
            ansatz: vec![AnsatzKind::Eqc],
            sources: vec![4, 6, 8, 10],
            targets: vec![6, 8, 10, 12, 15],
            seeds: (0..SEEDS).collect(),
            scratch_at_target: false,
            ..ExperimentConfig::default()
        }
    }

    pub fn effsu2_config() -> ExperimentConfig {
        ExperimentConfig {
            ansatz: vec![AnsatzKind::EffSu2],
            sources: vec![8, 10],
            targets: vec![15],
            ..eqc_config()
        }
    }

    /// Store directory: `EQCT_ACCEPTANCE_DIR` if set, else a persistent
    /// directory under the target dir so reruns resume.
    pub fn store_dir() -> PathBuf {
        std::env::var_os("EQCT_ACCEPTANCE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-store"))
    }

    pub struct GridData {
        pub eqc: ExperimentConfig,
        pub effsu2: ExperimentConfig,
        pub rows: BTreeMap<String, RunResult>,
        pub bounds: Vec<BoundRow>,
        pub dir: PathBuf,
    }

    impl GridData {
        fn transfer(&self, cfg: &ExperimentConfig, kind: AnsatzKind, n: usize, m: usize) -> Vec<(&RunResult, &RunResult)> {
            cfg.seeds
                .iter()
                .map(|&seed| {
                    let ids = Job::Transfer { kind, n, m, seed }.row_ids(cfg);
                    (&self.rows[&ids[0]], &self.rows[&ids[1]])
                })
                .collect()
        }
    }

    pub fn run() -> eqc_transfer::Result<GridData> {
        let dir = store_dir();
        let (eqc, effsu2) = (eqc_config(), effsu2_config());
        let a = run_grid(&eqc, &dir)?;
        let b = run_grid(&effsu2, &dir)?;
        if let Some(f) = a.failures.iter().chain(&b.failures).next() {
            return Err(eqc_transfer::Error::Missing(format!("grid job {} failed: {}", f.job, f.error)));
        }
        let bounds = run_bound_overlay(&eqc, &dir)?;
        let store = ResultStore::open(&dir)?;
        let rows = store.rows().map(|r| (r.run_id.clone(), r.clone())).collect();
        Ok(GridData {
            eqc,
            effsu2,
            rows,
            bounds,
            dir,
        })
    }

    fn mean(v: impl Iterator<Item = f64>) -> f64 {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }

    pub fn criterion_7(d: &GridData) -> Outcome {
        let mut pass = true;
        let mut parts = Vec::new();
        for n in [8, 10] {
            let eqc = mean(d.transfer(&d.eqc, AnsatzKind::Eqc, n, 15).iter().map(|p| p.0.mean_tour_length));
            let su2 = mean(d.transfer(&d.effsu2, AnsatzKind::EffSu2, n, 15).iter().map(|p| p.0.mean_tour_length));
            let adv = (su2 - eqc) / su2;
            pass &= eqc < su2 && adv >= 0.05;
            parts.push(format!("{n}->15 eqc {eqc:.3} vs effsu2 {su2:.3} ({:+.1}%)", 100.0 * adv));
        }
        Outcome::new(pass, parts.join(", "))
    }

    pub fn criterion_8(d: &GridData) -> Outcome {
        let cells: Vec<&BoundRow> = d
            .bounds
            .iter()
            .filter(|r| r.mode == BoundMode::Fitted && r.seed.is_none())
            .collect();
        let above = cells.iter().filter(|r| r.empirical >= r.lower_bound).count();
        let seeded: Vec<&BoundRow> = d
            .bounds
            .iter()
            .filter(|r| r.mode == BoundMode::Fitted && r.seed.is_some())
            .collect();
        let seeded_above = seeded.iter().filter(|r| r.empirical >= r.lower_bound).count();
        Outcome::new(
            !cells.is_empty() && above as f64 >= 0.95 * cells.len() as f64,
            format!(
                "{above}/{} cells above the fitted bound (per seed {seeded_above}/{})",
                cells.len(),
                seeded.len()
            ),
        )
    }

    pub fn criterion_9(d: &GridData) -> Outcome {
        let mut cells = 0;
        let mut better = 0;
        let mut parts = Vec::new();
        for (n, m) in d.eqc.transfer_pairs() {
            if m - n < 4 {
                continue;
            }
            let pairs = d.transfer(&d.eqc, AnsatzKind::Eqc, n, m);
            let zs = mean(pairs.iter().map(|p| p.0.mean_normalized_perf));
            let ft = mean(pairs.iter().map(|p| p.1.mean_normalized_perf));
            cells += 1;
            if ft > zs {
                better += 1;
            }
            parts.push(format!("{n}->{m} {zs:.3}/{ft:.3}"));
        }
        Outcome::new(
            cells > 0 && better as f64 >= 0.7 * cells as f64,
            format!("fine-tuned > zero-shot in {better}/{cells} cells (zero-shot/fine-tuned: {})", parts.join(" ")),
        )
    }

    pub fn criterion_10(d: &GridData) -> Outcome {
        let store = ResultStore::open(&d.dir).expect("store");
        let mut improved = 0;
        let mut total = 0;
        let mut deltas = Vec::new();
        for job in enumerate_jobs(&d.eqc) {
            if let Job::Scratch { kind: AnsatzKind::Eqc, k: 4, .. } = job {
                let id = &job.row_ids(&d.eqc)[0];
                let recs = read_telemetry(&store.telemetry_path(id)).expect("telemetry");
                let first = mean(recs[..100].iter().map(|r| r.normalized_perf));
                let last = mean(recs[recs.len() - 100..].iter().map(|r| r.normalized_perf));
                total += 1;
                if last > first {
                    improved += 1;
                }
                deltas.push(format!("{:+.2}", last - first));
            }
        }
        Outcome::new(
            total == 10 && improved >= 8,
            format!("{improved}/{total} seeds improved (last-100 minus first-100: {})", deltas.join(" ")),
        )
    }
}
