//! ε-greedy Q-learning with circuit expectation values as the Q-function.
//!
//! Each step simulates the circuit for the current tour state and reads one
//! value per city. Visited cities are masked with `-∞`. Updates are per-step
//! TD(0) with gradients by central finite differences; for EffSU2 the same
//! finite difference is obtained in one adjoint sweep (see [`q_gradient`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{self, AnsatzKind, AnsatzParams, Readout};
use crate::qsim::{GateOp, Observable, PrefixRunner, StateVector};
use crate::seeding::{self, derive, label};
use crate::tsp::{
    env_reset, env_step, gen_instance, normalize_performance, Generator, PerfNormalizer, Tour,
    TourState, TspInstance,
};
use crate::{Error, Result};

/// Masked Q-value.
pub const MASKED: f64 = f64::NEG_INFINITY;

/// Cities are always entered from city 0.
pub const START_CITY: usize = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceMode {
    /// A new instance every episode.
    #[default]
    Fresh,
    /// One instance for the whole run.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay: f64,
    pub discount: f64,
    pub fd_step: f64,
    pub episodes: usize,
    /// Half-width of the uniform initialisation interval.
    pub init_scale: f64,
    pub readout: Readout,
    pub instance_mode: InstanceMode,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.01,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay: 1000.0,
            discount: 0.9,
            fd_step: 0.01,
            episodes: 1000,
            init_scale: 0.1,
            readout: Readout::CurrentPair,
            instance_mode: InstanceMode::Fresh,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be non-negative");
        }
        if !(0.0 <= self.eps_end && self.eps_end <= self.eps_start && self.eps_start <= 1.0) {
            return bad("need 0 <= eps_end <= eps_start <= 1");
        }
        if !(self.eps_decay > 0.0) {
            return bad("eps_decay must be positive");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must be in (0, 1]");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step must be positive");
        }
        if !(self.init_scale >= 0.0) {
            return bad("init_scale must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub tour_length: f64,
    pub normalized_perf: f64,
    pub epsilon: f64,
    pub td_loss_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: TourState,
    pub action: usize,
    pub reward: f64,
    pub next_state: TourState,
    pub done: bool,
}

/// Final circuit state for a tour state.
pub fn simulate(instance: &TspInstance, state: &TourState, params: &AnsatzParams) -> Result<StateVector> {
    Ok(runner_for(instance, state, params)?.final_state().clone())
}

/// Read masked Q-values out of a simulated state.
pub fn q_from_state(
    sv: &StateVector,
    instance: &TspInstance,
    state: &TourState,
    readout: Readout,
) -> Result<Vec<f64>> {
    let obs = ansatz::readout_observables(readout, instance, state.current)?;
    let mut q = sv.expectations(&obs)?;
    for (c, v) in q.iter_mut().enumerate() {
        if state.is_visited(c) {
            *v = MASKED;
        }
    }
    Ok(q)
}

/// Q-values with the default readout.
pub fn q_values(instance: &TspInstance, state: &TourState, params: &AnsatzParams) -> Result<Vec<f64>> {
    q_values_with(instance, state, params, Readout::default())
}

pub fn q_values_with(
    instance: &TspInstance,
    state: &TourState,
    params: &AnsatzParams,
    readout: Readout,
) -> Result<Vec<f64>> {
    let sv = simulate(instance, state, params)?;
    q_from_state(&sv, instance, state, readout)
}

fn q_single(
    instance: &TspInstance,
    state: &TourState,
    action: usize,
    params: &AnsatzParams,
    readout: Readout,
) -> Result<f64> {
    let sv = simulate(instance, state, params)?;
    let obs = &ansatz::readout_observables(readout, instance, state.current)?[action];
    sv.expectation_z(obs)
}

pub fn epsilon_at(episode: usize, hp: &Hyperparams) -> f64 {
    hp.eps_end + (hp.eps_start - hp.eps_end) * (-(episode as f64) / hp.eps_decay).exp()
}

/// ε-greedy choice over unmasked entries; greedy ties go to the lowest index.
pub fn select_action(qvals: &[f64], eps: f64, rng: &mut impl Rng) -> Result<usize> {
    let open: Vec<usize> = (0..qvals.len()).filter(|&c| qvals[c] != MASKED).collect();
    if open.is_empty() {
        return Err(Error::AllMasked);
    }
    if eps > 0.0 && rng.random::<f64>() < eps {
        return Ok(open[rng.random_range(0..open.len())]);
    }
    Ok(argmax(qvals, &open))
}

fn argmax(qvals: &[f64], open: &[usize]) -> usize {
    let mut best = open[0];
    for &c in &open[1..] {
        if qvals[c] > qvals[best] {
            best = c;
        }
    }
    best
}

fn max_unmasked(qvals: &[f64]) -> f64 {
    qvals
        .iter()
        .copied()
        .filter(|&v| v != MASKED)
        .fold(MASKED, f64::max)
}

/// `∂Q(s, a)/∂θ` by central differences of step `h`, one parameter at a time.
pub fn fd_gradient(
    instance: &TspInstance,
    state: &TourState,
    action: usize,
    params: &AnsatzParams,
    readout: Readout,
    h: f64,
) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(params.values.len());
    let mut shifted = params.clone();
    for i in 0..params.values.len() {
        shifted.values[i] = params.values[i] + h;
        let plus = q_single(instance, state, action, &shifted, readout)?;
        shifted.values[i] = params.values[i] - h;
        let minus = q_single(instance, state, action, &shifted, readout)?;
        shifted.values[i] = params.values[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

fn fd_gradient_cached(
    runner: &PrefixRunner,
    instance: &TspInstance,
    state: &TourState,
    obs: &Observable,
    params: &AnsatzParams,
    h: f64,
) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(params.values.len());
    let mut shifted = params.clone();
    for i in 0..params.values.len() {
        let mut q = [0.0; 2];
        for (slot, sign) in q.iter_mut().zip([1.0, -1.0]) {
            shifted.values[i] = params.values[i] + sign * h;
            let sv = runner.run(&ansatz::build_circuit(instance, state, &shifted)?)?;
            *slot = sv.expectation_z(obs)?;
        }
        shifted.values[i] = params.values[i];
        grad.push((q[0] - q[1]) / (2.0 * h));
    }
    Ok(grad)
}

/// The same central difference as [`fd_gradient`], computed for EffSU2 by
/// one backward sweep. Every EffSU2 angle enters one Pauli rotation, so
/// `Q(θ_p)` is a first-order trigonometric polynomial and its central
/// difference is exactly `sin(h)/h · ∂Q/∂θ_p`.
fn effsu2_fd_gradient(
    circuit: &[GateOp],
    final_state: &StateVector,
    obs: &Observable,
    h: f64,
) -> Result<Vec<f64>> {
    let mut phi = final_state.clone();
    let mut lambda = phi.clone();
    lambda.apply_diagonal_observable(obs)?;
    let scale = if h == 0.0 { 1.0 } else { h.sin() / h };
    let n_params = circuit
        .iter()
        .filter(|g| matches!(g, GateOp::RY(..) | GateOp::RZ(..)))
        .count();
    let mut grad = vec![0.0; n_params];
    let mut p = n_params;
    for gate in circuit.iter().rev() {
        if matches!(gate, GateOp::RY(..) | GateOp::RZ(..)) {
            p -= 1;
            let mut pphi = phi.clone();
            pphi.apply_rotation_generator(gate);
            grad[p] = scale * lambda.inner(&pphi).im;
        }
        let inv = gate.inverse();
        phi.apply_unchecked(&inv);
        lambda.apply_unchecked(&inv);
    }
    debug_assert_eq!(p, 0);
    Ok(grad)
}

/// Gradient used by [`td_update`].
pub fn q_gradient(
    instance: &TspInstance,
    state: &TourState,
    action: usize,
    params: &AnsatzParams,
    readout: Readout,
    h: f64,
) -> Result<Vec<f64>> {
    let runner = PrefixRunner::new(instance.k(), ansatz::build_circuit(instance, state, params)?)?;
    let obs = &ansatz::readout_observables(readout, instance, state.current)?[action];
    gradient_from(&runner, instance, state, obs, params, h)
}

fn gradient_from(
    runner: &PrefixRunner,
    instance: &TspInstance,
    state: &TourState,
    obs: &Observable,
    params: &AnsatzParams,
    h: f64,
) -> Result<Vec<f64>> {
    match params.kind {
        AnsatzKind::EffSu2 => effsu2_fd_gradient(runner.base(), runner.final_state(), obs, h),
        AnsatzKind::Eqc => fd_gradient_cached(runner, instance, state, obs, params, h),
    }
}

fn runner_for(instance: &TspInstance, state: &TourState, params: &AnsatzParams) -> Result<PrefixRunner> {
    PrefixRunner::new(instance.k(), ansatz::build_circuit(instance, state, params)?)
}

/// One TD(0) step. Returns the new parameters and `Q(s, a) − y`.
pub fn td_update(
    params: &AnsatzParams,
    transition: &Transition,
    instance: &TspInstance,
    hp: &Hyperparams,
) -> Result<(AnsatzParams, f64)> {
    let runner = runner_for(instance, &transition.state, params)?;
    td_update_with(params, transition, instance, hp, &runner)
}

/// `runner` holds the circuit for `tr.state` under `params`.
fn td_update_with(
    params: &AnsatzParams,
    tr: &Transition,
    instance: &TspInstance,
    hp: &Hyperparams,
    runner: &PrefixRunner,
) -> Result<(AnsatzParams, f64)> {
    let obs = &ansatz::readout_observables(hp.readout, instance, tr.state.current)?[tr.action];
    let q_sa = runner.final_state().expectation_z(obs)?;
    let target = if tr.done {
        tr.reward
    } else {
        let next_circuit = ansatz::build_circuit(instance, &tr.next_state, params)?;
        let sv = runner.run(&next_circuit)?;
        let next = q_from_state(&sv, instance, &tr.next_state, hp.readout)?;
        tr.reward + hp.discount * max_unmasked(&next)
    };
    let err = q_sa - target;
    let mut out = params.clone();
    if err == 0.0 || hp.learning_rate == 0.0 {
        return Ok((out, err));
    }
    let grad = gradient_from(runner, instance, &tr.state, obs, params, hp.fd_step)?;
    for (v, g) in out.values.iter_mut().zip(grad) {
        *v -= hp.learning_rate * 2.0 * err * g;
    }
    Ok((out, err))
}

/// Seeded initialisation followed by [`train_from`].
pub fn train(
    generator: Generator,
    k: usize,
    hp: &Hyperparams,
    kind: AnsatzKind,
    layers: usize,
    seed: u64,
) -> Result<(AnsatzParams, Vec<EpisodeRecord>)> {
    let mut rng = seeding::rng(derive(seed, &[label("init")]));
    let init = AnsatzParams::random(kind, layers, k, hp.init_scale, &mut rng)?;
    train_from(init, generator, k, hp, seed)
}

/// Run `hp.episodes` episodes of per-step Q-learning on `k`-city instances,
/// starting from `params` (adapted to `k` if trained on fewer cities).
pub fn train_from(
    params: AnsatzParams,
    generator: Generator,
    k: usize,
    hp: &Hyperparams,
    seed: u64,
) -> Result<(AnsatzParams, Vec<EpisodeRecord>)> {
    hp.validate()?;
    let mut params = if params.trained_on < k {
        ansatz::adapt_params(&params, k)?
    } else {
        params
    };
    params.validate()?;
    let mut explore = seeding::rng(derive(seed, &[label("explore"), k as u64]));
    let mut fixed: Option<TspInstance> = None;
    let mut records = Vec::with_capacity(hp.episodes);
    for episode in 0..hp.episodes {
        let instance = match hp.instance_mode {
            InstanceMode::Fresh => train_instance(generator, k, seed, episode)?,
            InstanceMode::Fixed => match &fixed {
                Some(i) => i.clone(),
                None => fixed.insert(train_instance(generator, k, seed, 0)?).clone(),
            },
        };
        let eps = epsilon_at(episode, hp);
        let mut state = env_reset(&instance, START_CITY)?;
        let mut order = vec![START_CITY];
        let mut loss = 0.0;
        loop {
            let runner = runner_for(&instance, &state, &params)?;
            let q = q_from_state(runner.final_state(), &instance, &state, hp.readout)?;
            let action = select_action(&q, eps, &mut explore)?;
            let out = env_step(&instance, &state, action)?;
            let tr = Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                done: out.done,
            };
            let (next_params, err) = td_update_with(&params, &tr, &instance, hp, &runner)?;
            params = next_params;
            loss += err * err;
            order.push(action);
            state = out.state;
            if out.done {
                break;
            }
        }
        let tour = Tour::from_order(&instance, order)?;
        let norm = PerfNormalizer::for_instance(&instance)?;
        records.push(EpisodeRecord {
            episode,
            tour_length: tour.length,
            normalized_perf: normalize_performance(tour.length, &norm).value,
            epsilon: eps,
            td_loss_sum: loss,
        });
    }
    Ok((params, records))
}

fn train_instance(generator: Generator, k: usize, seed: u64, episode: usize) -> Result<TspInstance> {
    gen_instance(k, generator, derive(seed, &[label("train"), k as u64, episode as u64]))
}

/// Evaluation instances with their normalisers, shared by every solver that
/// is compared on them.
#[derive(Clone, Debug)]
pub struct EvalSet {
    pub instances: Vec<TspInstance>,
    pub normalizers: Vec<PerfNormalizer>,
}

impl EvalSet {
    pub fn generate(k: usize, generator: Generator, count: usize, seed: u64) -> Result<Self> {
        let instances = (0..count)
            .map(|i| gen_instance(k, generator, derive(seed, &[label("eval"), k as u64, i as u64])))
            .collect::<Result<Vec<_>>>()?;
        Self::from_instances(instances)
    }

    pub fn from_instances(instances: Vec<TspInstance>) -> Result<Self> {
        let normalizers = instances
            .iter()
            .map(PerfNormalizer::for_instance)
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalSet {
            instances,
            normalizers,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub tour: Tour,
    pub normalized_perf: f64,
    pub degenerate: bool,
}

/// Roll out the policy on `k`-city instances drawn from `seed`. Greedy mode
/// uses ε = 0; otherwise ε = `hp.eps_end` with exploration drawn from `seed`.
pub fn evaluate(
    params: &AnsatzParams,
    k: usize,
    num_instances: usize,
    seed: u64,
    greedy: bool,
    generator: Generator,
    hp: &Hyperparams,
) -> Result<Vec<(f64, f64)>> {
    let set = EvalSet::generate(k, generator, num_instances, seed)?;
    let eps = if greedy { 0.0 } else { hp.eps_end };
    let mut rng = seeding::rng(derive(seed, &[label("eval-explore")]));
    Ok(evaluate_on(params, &set, eps, hp.readout, &mut rng)?
        .into_iter()
        .map(|o| (o.tour.length, o.normalized_perf))
        .collect())
}

/// Frozen-parameter rollouts on a prepared set.
pub fn evaluate_on(
    params: &AnsatzParams,
    set: &EvalSet,
    eps: f64,
    readout: Readout,
    rng: &mut impl Rng,
) -> Result<Vec<EvalOutcome>> {
    let mut out = Vec::with_capacity(set.len());
    for (inst, norm) in set.instances.iter().zip(&set.normalizers) {
        let params = ansatz::adapt_params(params, inst.k().max(params.trained_on))?;
        let tour = rollout(inst, &params, START_CITY, eps, readout, rng)?;
        let perf = normalize_performance(tour.length, norm);
        out.push(EvalOutcome {
            tour,
            normalized_perf: perf.value,
            degenerate: perf.degenerate,
        });
    }
    Ok(out)
}

fn rollout(
    instance: &TspInstance,
    params: &AnsatzParams,
    start: usize,
    eps: f64,
    readout: Readout,
    rng: &mut impl Rng,
) -> Result<Tour> {
    let mut state = env_reset(instance, start)?;
    let runner = runner_for(instance, &state, params)?;
    let mut order = vec![start];
    while order.len() < instance.k() {
        let sv = runner.run(&ansatz::build_circuit(instance, &state, params)?)?;
        let q = q_from_state(&sv, instance, &state, readout)?;
        let a = select_action(&q, eps, rng)?;
        state = env_step(instance, &state, a)?.state;
        order.push(a);
    }
    Tour::from_order(instance, order)
}

/// ε = 0 rollout from `start`.
pub fn greedy_rollout(
    instance: &TspInstance,
    params: &AnsatzParams,
    start: usize,
    readout: Readout,
) -> Result<Tour> {
    let params = ansatz::adapt_params(params, instance.k().max(params.trained_on))?;
    rollout(instance, &params, start, 0.0, readout, &mut seeding::rng(0))
}
