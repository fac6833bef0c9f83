//! The zero-shot transfer bound
//!
//! `P_m ≥ P̂_n − G_n(δ) − D_param − D_struct`
//!
//! with `G_n = √(T_n/M) + √(ln(1/δ)/M)`, `T_n = C(n+3, 3)`,
//! `D_param = L_U·‖θ‖₁·e^{θ_max‖A‖}·2‖A‖·(m−n)/m` (or `α_n·(m−n)/m` once the
//! coefficient is fitted) and `D_struct = C′·(m−n)/√n`. The big-O constant
//! of `G_n` is taken to be 1.
//!
//! The second half of the module checks the inequalities behind `D_param`
//! numerically on dense unitaries built from pooled permutation-invariant
//! generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qsim::{dense_unitary, operator_norm, zero_state, CMatrix, Complex64, GateOp, Observable, MAX_DENSE_QUBITS};
use crate::seeding;
use crate::{Error, Result};

/// Beardwood–Halton–Hammersley constant estimate for the unit square.
pub const BETA2: f64 = 0.712;

pub const DEFAULT_DELTA: f64 = 0.05;

/// `C(n+3, 3)`.
pub fn tetrahedral(n: u64) -> u64 {
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// `√(T_n/M) + √(ln(1/δ)/M)`, clamped to `[0, 1]`.
pub fn gen_error(n: usize, m_episodes: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    if m_episodes == 0 {
        return Err(Error::InvalidArgument("need at least one episode".into()));
    }
    let m = m_episodes as f64;
    let g = (tetrahedral(n as u64) as f64 / m).sqrt() + ((1.0 / delta).ln() / m).sqrt();
    Ok(g.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub m: usize,
    pub theta_l1: f64,
    pub theta_max: f64,
    pub a_norm: f64,
    pub l_u: f64,
    pub c_prime: f64,
    pub m_episodes: usize,
    pub delta: f64,
    #[serde(default)]
    pub alpha_n: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.m < self.n {
            return Err(Error::InvalidArgument(format!(
                "need m >= n >= 1, got n={} m={}",
                self.n, self.m
            )));
        }
        let norms = [self.theta_l1, self.theta_max, self.a_norm, self.l_u, self.c_prime];
        if norms.iter().any(|v| !(*v >= 0.0)) || self.alpha_n.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::InvalidArgument("norms and constants must be non-negative".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }

    fn gap_ratio(&self) -> f64 {
        (self.m - self.n) as f64 / self.m as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub t_tet: u64,
    pub gen_error: f64,
    pub d_param: f64,
    pub d_struct: f64,
    pub d_total: f64,
    /// Not clamped; may be negative.
    pub lower_bound: f64,
}

pub fn d_param(inputs: &BoundInputs) -> f64 {
    let r = inputs.gap_ratio();
    match inputs.alpha_n {
        Some(alpha) => alpha * r,
        None => {
            inputs.l_u
                * inputs.theta_l1
                * (inputs.theta_max * inputs.a_norm).exp()
                * 2.0
                * inputs.a_norm
                * r
        }
    }
}

pub fn d_struct(n: usize, m: usize, c_prime: f64) -> f64 {
    c_prime * m.saturating_sub(n) as f64 / (n as f64).sqrt()
}

/// `β₂ / (2·(L̄_max − L̄_opt))`.
pub fn estimate_c_prime(l_max_mean: f64, l_opt_mean: f64) -> Result<f64> {
    let gap = l_max_mean - l_opt_mean;
    if !(gap > 0.0) {
        return Err(Error::Degenerate(format!(
            "L_max mean {l_max_mean} does not exceed L_opt mean {l_opt_mean}"
        )));
    }
    Ok(BETA2 / (2.0 * gap))
}

/// Mean optimal and nearest-neighbour tour lengths at one size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub k: usize,
    pub mean_l_opt: f64,
    pub mean_l_max: f64,
}

/// Smallest `C′` with `|L̄opt_m − L̄opt_n| / (L̄max_n − L̄opt_n) ≤ C′·(m−n)/√n`
/// over every ordered pair of measured sizes. Used where the BHH scaling
/// does not apply.
pub fn fit_c_prime(stats: &[SizeStats]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for a in stats {
        let gap = a.mean_l_max - a.mean_l_opt;
        if !(gap > 0.0) {
            return Err(Error::Degenerate(format!("no L_max/L_opt gap at k={}", a.k)));
        }
        for b in stats.iter().filter(|b| b.k > a.k) {
            let shift = (b.mean_l_opt - a.mean_l_opt).abs() / gap;
            let c = shift * (a.k as f64).sqrt() / (b.k - a.k) as f64;
            best = Some(best.map_or(c, |x: f64| x.max(c)));
        }
    }
    best.ok_or_else(|| Error::Missing("need statistics at two distinct sizes".into()))
}

/// Least-squares slope through the origin of `gap` against `(m−n)/m`,
/// clamped to be non-negative. Records with `m <= n` are ignored.
pub fn fit_alpha(records: &[(usize, usize, f64)]) -> Result<f64> {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, m, gap) in records.iter().filter(|r| r.1 > r.0) {
        let x = (m - n) as f64 / m as f64;
        sxy += x * gap;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::Missing("no record with m > n".into()));
    }
    Ok((sxy / sxx).max(0.0))
}

pub fn transfer_lower_bound(p_hat_n: f64, inputs: &BoundInputs) -> Result<BoundResult> {
    inputs.validate()?;
    if !(0.0..=1.0).contains(&p_hat_n) {
        return Err(Error::InvalidArgument(format!("P̂_n = {p_hat_n} outside [0, 1]")));
    }
    let gen = gen_error(inputs.n, inputs.m_episodes, inputs.delta)?;
    let dp = d_param(inputs);
    let ds = d_struct(inputs.n, inputs.m, inputs.c_prime);
    Ok(BoundResult {
        t_tet: tetrahedral(inputs.n as u64),
        gen_error: gen,
        d_param: dp,
        d_struct: ds,
        d_total: dp + ds,
        lower_bound: p_hat_n - gen - dp - ds,
    })
}

/// Pooled permutation-invariant generators, each with unit-norm local terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorPool {
    /// `(1/k) Σ_j X_j`
    X,
    /// `(1/C(k,2)) Σ_{i<j} Z_i Z_j`
    ZZ,
}

impl GeneratorPool {
    /// Number of pooled terms on `k` qubits.
    pub fn terms(&self, k: usize) -> usize {
        match self {
            GeneratorPool::X => k,
            GeneratorPool::ZZ => k * k.saturating_sub(1) / 2,
        }
    }

    /// Layer `l` of the canonical alternation.
    pub fn for_layer(l: usize) -> Self {
        if l % 2 == 0 {
            GeneratorPool::ZZ
        } else {
            GeneratorPool::X
        }
    }

    /// Gates for `exp(−iθ H^{(k)})` acting on qubits `0..k`.
    pub fn gates(&self, k: usize, theta: f64) -> Vec<GateOp> {
        match self {
            GeneratorPool::X => (0..k).map(|q| GateOp::RX(q, 2.0 * theta / k as f64)).collect(),
            GeneratorPool::ZZ => {
                let c = theta / self.terms(k) as f64;
                let mut out = Vec::new();
                for i in 0..k {
                    for j in i + 1..k {
                        out.push(GateOp::RZZ(i, j, c));
                    }
                }
                out
            }
        }
    }

    /// Dense `H^{(k)}` on the first `k` of `total` qubits.
    pub fn matrix(&self, k: usize, total: usize) -> Result<CMatrix> {
        if total > MAX_DENSE_QUBITS {
            return Err(Error::DenseTooLarge(total));
        }
        let dim = 1usize << total;
        let mut h = CMatrix::zeros(dim, dim);
        let n_terms = self.terms(k);
        if n_terms == 0 {
            return Ok(h);
        }
        let c = 1.0 / n_terms as f64;
        for x in 0..dim {
            match self {
                GeneratorPool::X => {
                    for q in 0..k {
                        h[(x ^ (1 << q), x)] += Complex64::new(c, 0.0);
                    }
                }
                GeneratorPool::ZZ => {
                    let mut d = 0.0;
                    for i in 0..k {
                        for j in i + 1..k {
                            let parity = ((x >> i) ^ (x >> j)) & 1;
                            d += if parity == 0 { c } else { -c };
                        }
                    }
                    h[(x, x)] = Complex64::new(d, 0.0);
                }
            }
        }
        Ok(h)
    }

    /// `2·(N_m − N_n)/N_m`, with `N_k` the pooled term count.
    pub fn step1_bound(&self, n: usize, m: usize) -> f64 {
        let (tn, tm) = (self.terms(n) as f64, self.terms(m) as f64);
        if tm == 0.0 {
            0.0
        } else {
            2.0 * (tm - tn) / tm
        }
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if m > MAX_DENSE_QUBITS {
        return Err(Error::DenseTooLarge(m));
    }
    if n < 2 || m < n {
        return Err(Error::InvalidArgument(format!("need 2 <= n <= m, got n={n} m={m}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub pool: GeneratorPool,
    pub n: usize,
    pub m: usize,
    pub measured: f64,
    pub bound: f64,
}

impl GeneratorCheck {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound + 1e-9
    }
}

/// `‖H^{(m)} − H^{(n)} ⊗ I‖` against its pooled-count bound.
pub fn generator_difference(pool: GeneratorPool, n: usize, m: usize) -> Result<GeneratorCheck> {
    check_sizes(n, m)?;
    let diff = pool.matrix(m, m)?.sub(&pool.matrix(n, m)?)?;
    Ok(GeneratorCheck {
        pool,
        n,
        m,
        measured: operator_norm(&diff)?,
        bound: pool.step1_bound(n, m),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationTrial {
    pub theta: Vec<f64>,
    /// `‖U_m(θ) − U_n(θ) ⊗ I‖`
    pub true_deviation: f64,
    /// `Σ_l |θ_l|·‖H_l^{(m)} − H_l^{(n)} ⊗ I‖·e^{|θ_l|·‖A‖}`
    pub bound: f64,
}

impl DeviationTrial {
    pub fn slack(&self) -> f64 {
        self.bound - self.true_deviation
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub n: usize,
    pub m: usize,
    pub trials: Vec<DeviationTrial>,
}

impl DeviationReport {
    pub fn violations(&self) -> usize {
        self.trials.iter().filter(|t| t.slack() < -1e-9).count()
    }
}

/// Local term norm of both pools.
const POOL_TERM_NORM: f64 = 1.0;

/// One deviation measurement for a fixed angle vector (one angle per layer,
/// layers alternating ZZ, X, ZZ, …).
pub fn unitary_deviation(n: usize, m: usize, theta: &[f64]) -> Result<DeviationTrial> {
    check_sizes(n, m)?;
    let mut big = Vec::new();
    let mut lifted = Vec::new();
    let mut bound = 0.0;
    let mut diffs = [None, None];
    for (l, &t) in theta.iter().enumerate() {
        let pool = GeneratorPool::for_layer(l);
        big.extend(pool.gates(m, t));
        lifted.extend(pool.gates(n, t));
        let slot = &mut diffs[l % 2];
        let d = match slot {
            Some(d) => *d,
            None => *slot.insert(generator_difference(pool, n, m)?.measured),
        };
        bound += t.abs() * d * (t.abs() * POOL_TERM_NORM).exp();
    }
    let diff = dense_unitary(&big, m)?.sub(&dense_unitary(&lifted, m)?)?;
    Ok(DeviationTrial {
        theta: theta.to_vec(),
        true_deviation: operator_norm(&diff)?,
        bound,
    })
}

/// `trials` random angle vectors of length `depth`, uniform on `[−π, π]`.
pub fn verify_unitary_deviation(
    n: usize,
    m: usize,
    depth: usize,
    trials: usize,
    seed: u64,
) -> Result<DeviationReport> {
    check_sizes(n, m)?;
    let mut rng = seeding::rng(seed);
    let pi = std::f64::consts::PI;
    let trials = (0..trials)
        .map(|_| {
            let theta: Vec<f64> = (0..depth).map(|_| rng.random_range(-pi..=pi)).collect();
            unitary_deviation(n, m, &theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationReport { n, m, trials })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSample {
    pub k: usize,
    pub value_gap: f64,
    pub bound: f64,
}

/// `|⟨M⟩_U − ⟨M⟩_U′| ≤ 2‖M‖·‖U − U′‖` for `M = Z_0` and `ρ = |0…0⟩⟨0…0|`.
/// Half the pairs are small perturbations of each other, half independent.
pub fn lipschitz_check(pairs: usize, max_k: usize, seed: u64) -> Result<Vec<LipschitzSample>> {
    if max_k == 0 || max_k > MAX_DENSE_QUBITS {
        return Err(Error::DenseTooLarge(max_k));
    }
    let mut rng = seeding::rng(seed);
    let obs = Observable::z(0);
    let m_norm = obs.operator_norm();
    let mut out = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let k = rng.random_range(1..=max_k);
        let depth = rng.random_range(1..=12);
        let a = random_circuit(k, depth, &mut rng);
        let b = if p % 2 == 0 {
            perturb(&a, 0.1, &mut rng)
        } else {
            random_circuit(k, depth, &mut rng)
        };
        let value = |c: &[GateOp]| -> Result<f64> {
            let mut s = zero_state(k)?;
            s.run(c)?;
            s.expectation_z(&obs)
        };
        let gap = (value(&a)? - value(&b)?).abs();
        let dist = operator_norm(&dense_unitary(&a, k)?.sub(&dense_unitary(&b, k)?)?)?;
        out.push(LipschitzSample {
            k,
            value_gap: gap,
            bound: 2.0 * m_norm * dist,
        });
    }
    Ok(out)
}

/// Random gates over the full gate set, angles uniform on `[−π, π]`.
pub fn random_circuit(k: usize, depth: usize, rng: &mut impl Rng) -> Vec<GateOp> {
    let pi = std::f64::consts::PI;
    (0..depth)
        .map(|_| {
            let q = rng.random_range(0..k);
            let t = rng.random_range(-pi..=pi);
            let choice = if k < 2 { rng.random_range(0..4) } else { rng.random_range(0..6) };
            let other = (q + 1 + if k > 1 { rng.random_range(0..k - 1) } else { 0 }) % k;
            match choice {
                0 => GateOp::H(q),
                1 => GateOp::RX(q, t),
                2 => GateOp::RY(q, t),
                3 => GateOp::RZ(q, t),
                4 => GateOp::Cnot {
                    control: q,
                    target: other,
                },
                _ => GateOp::RZZ(q, other, t),
            }
        })
        .collect()
}

fn perturb(circuit: &[GateOp], scale: f64, rng: &mut impl Rng) -> Vec<GateOp> {
    let mut jitter = || rng.random_range(-scale..=scale);
    circuit
        .iter()
        .map(|g| match *g {
            GateOp::RX(q, t) => GateOp::RX(q, t + jitter()),
            GateOp::RY(q, t) => GateOp::RY(q, t + jitter()),
            GateOp::RZ(q, t) => GateOp::RZ(q, t + jitter()),
            GateOp::RZZ(i, j, t) => GateOp::RZZ(i, j, t + jitter()),
            other => other,
        })
        .collect()
}
