//! The two circuit families used as Q-function approximators and the rule
//! for moving trained parameters between problem sizes.
//!
//! The equivariant circuit (EQC) starts from `|+⟩^k`, then each layer applies
//! `RZZ(γ·w_ij)` on every edge and `RX(s_q·β)` on every qubit, with
//! `s_q = 1` for unvisited cities. Its parameter vector is `[γ_1, β_1, γ_2, …]`
//! and does not depend on the number of cities.
//!
//! The hardware-efficient circuit (EffSU2) alternates blocks of `RY`/`RZ`
//! rotations with a linear CNOT chain, ending on a rotation block, so `layers`
//! entangling blocks carry `layers + 1` rotation blocks.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::Hyperparams;
use crate::qsim::{GateOp, Observable, MAX_QUBITS};
use crate::tsp::{Generator, TourState, TspInstance};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnsatzKind {
    #[serde(rename = "eqc")]
    Eqc,
    #[serde(rename = "effsu2")]
    EffSu2,
}

impl AnsatzKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnsatzKind::Eqc => "eqc",
            AnsatzKind::EffSu2 => "effsu2",
        }
    }

    /// Parameter count for a circuit on `k` qubits.
    pub fn num_params(&self, layers: usize, k: usize) -> usize {
        match self {
            AnsatzKind::Eqc => 2 * layers,
            AnsatzKind::EffSu2 => 2 * (layers + 1) * k,
        }
    }
}

impl std::str::FromStr for AnsatzKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eqc" => Ok(AnsatzKind::Eqc),
            "effsu2" => Ok(AnsatzKind::EffSu2),
            other => Err(Error::InvalidArgument(format!("unknown ansatz {other:?}"))),
        }
    }
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Map from circuit state to one Q-value per city.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// `Q(s, j) = ⟨Z_c Z_j⟩` with `c` the current city.
    #[default]
    CurrentPair,
    /// `Q(s, j) = w_cj·⟨Z_c Z_j⟩`.
    WeightedPair,
    /// `Q(s, j) = ⟨Z_j⟩`. Identically zero for a one-layer EQC.
    SingleZ,
}

/// Trainable angles.
///
/// Layouts: EQC `values[2l] = γ_l`, `values[2l+1] = β_l`. EffSU2
/// `values[b·2k + 2q] = θ` (RY) and `values[b·2k + 2q + 1] = φ` (RZ) for
/// rotation block `b` and qubit `q`, where `k = trained_on`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub kind: AnsatzKind,
    pub layers: usize,
    pub values: Vec<f64>,
    /// City count the value layout is sized for.
    pub trained_on: usize,
    /// Source size when these values were padded by [`adapt_params`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapted_from: Option<usize>,
}

impl AnsatzParams {
    pub fn new(kind: AnsatzKind, layers: usize, values: Vec<f64>, trained_on: usize) -> Result<Self> {
        let p = AnsatzParams {
            kind,
            layers,
            values,
            trained_on,
            adapted_from: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(kind: AnsatzKind, layers: usize, k: usize) -> Result<Self> {
        Self::new(kind, layers, vec![0.0; kind.num_params(layers, k)], k)
    }

    /// Uniform draws in `[-scale, scale]`.
    pub fn random(kind: AnsatzKind, layers: usize, k: usize, scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let values = (0..kind.num_params(layers, k))
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        Self::new(kind, layers, values, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidArgument("layers must be positive".into()));
        }
        let want = self.kind.num_params(self.layers, self.trained_on);
        if self.values.len() != want {
            return Err(Error::SizeMismatch(format!(
                "{} with {} layers on {} cities needs {want} values, got {}",
                self.kind,
                self.layers,
                self.trained_on,
                self.values.len()
            )));
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {bad}")));
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn check_kind(params: &AnsatzParams, kind: AnsatzKind) -> Result<()> {
    if params.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected {kind} parameters, got {}",
            params.kind
        )));
    }
    params.validate()
}

/// EQC circuit for an instance and encoded state (`enc[i] = 1` iff unvisited).
pub fn build_eqc(instance: &TspInstance, enc: &[u8], params: &AnsatzParams) -> Result<Vec<GateOp>> {
    check_kind(params, AnsatzKind::Eqc)?;
    let k = instance.k();
    if enc.len() != k {
        return Err(Error::SizeMismatch(format!(
            "encoded state has length {}, instance has {k} cities",
            enc.len()
        )));
    }
    if k > MAX_QUBITS {
        return Err(Error::QubitCount(k));
    }
    let edges = k * (k - 1) / 2;
    let mut circuit = Vec::with_capacity(k + params.layers * (edges + k));
    circuit.extend((0..k).map(GateOp::H));
    for l in 0..params.layers {
        let (gamma, beta) = (params.values[2 * l], params.values[2 * l + 1]);
        for i in 0..k {
            for j in i + 1..k {
                circuit.push(GateOp::RZZ(i, j, gamma * instance.weight(i, j)));
            }
        }
        for (q, &s) in enc.iter().enumerate() {
            circuit.push(GateOp::RX(q, f64::from(s) * beta));
        }
    }
    Ok(circuit)
}

/// EffSU2 circuit on `k` qubits; `params` must already be laid out for `k`.
pub fn build_effsu2(k: usize, params: &AnsatzParams) -> Result<Vec<GateOp>> {
    check_kind(params, AnsatzKind::EffSu2)?;
    if params.trained_on != k {
        return Err(Error::SizeMismatch(format!(
            "effsu2 parameters laid out for {} qubits, circuit has {k}; adapt first",
            params.trained_on
        )));
    }
    if k == 0 || k > MAX_QUBITS {
        return Err(Error::QubitCount(k));
    }
    let mut circuit = Vec::with_capacity((params.layers + 1) * 2 * k + params.layers * (k - 1));
    for b in 0..=params.layers {
        if b > 0 {
            circuit.extend((0..k - 1).map(|q| GateOp::Cnot {
                control: q,
                target: q + 1,
            }));
        }
        let block = &params.values[b * 2 * k..(b + 1) * 2 * k];
        for q in 0..k {
            circuit.push(GateOp::RY(q, block[2 * q]));
            circuit.push(GateOp::RZ(q, block[2 * q + 1]));
        }
    }
    Ok(circuit)
}

/// Circuit for either kind at a given tour state.
pub fn build_circuit(instance: &TspInstance, state: &TourState, params: &AnsatzParams) -> Result<Vec<GateOp>> {
    match params.kind {
        AnsatzKind::Eqc => build_eqc(instance, &state.encode(instance.k()), params),
        AnsatzKind::EffSu2 => build_effsu2(instance.k(), params),
    }
}

/// Resize parameters for an `m`-city problem. EQC values are unchanged;
/// EffSU2 rotation blocks are zero-padded for the new qubits.
pub fn adapt_params(params: &AnsatzParams, m: usize) -> Result<AnsatzParams> {
    params.validate()?;
    let n = params.trained_on;
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "cannot shrink parameters from {n} to {m} cities"
        )));
    }
    if m == n {
        return Ok(params.clone());
    }
    let values = match params.kind {
        AnsatzKind::Eqc => params.values.clone(),
        AnsatzKind::EffSu2 => {
            let mut out = Vec::with_capacity(2 * (params.layers + 1) * m);
            for block in params.values.chunks(2 * n) {
                out.extend_from_slice(block);
                out.extend(std::iter::repeat_n(0.0, 2 * (m - n)));
            }
            out
        }
    };
    Ok(AnsatzParams {
        kind: params.kind,
        layers: params.layers,
        values,
        trained_on: m,
        adapted_from: Some(params.adapted_from.unwrap_or(n)),
    })
}

/// `[Z_0, …, Z_{k-1}]`.
pub fn q_observables(k: usize) -> Result<Vec<Observable>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 cities, got {k}")));
    }
    Ok((0..k).map(Observable::z).collect())
}

/// `[Z_c Z_0, …, Z_c Z_{k-1}]` for current city `c`; the `j = c` entry is
/// the identity and is always masked by the agent.
pub fn pair_observables(k: usize, current: usize) -> Result<Vec<Observable>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 cities, got {k}")));
    }
    if current >= k {
        return Err(Error::CityIndex { city: current, k });
    }
    Ok((0..k)
        .map(|j| {
            if j == current {
                Observable::term(1.0, &[])
            } else {
                Observable::zz(current, j)
            }
        })
        .collect())
}

/// `[w_c0·Z_c Z_0, …]`; the `j = c` entry is zero.
pub fn weighted_pair_observables(instance: &TspInstance, current: usize) -> Result<Vec<Observable>> {
    let mut obs = pair_observables(instance.k(), current)?;
    for (j, o) in obs.iter_mut().enumerate() {
        o.terms[0].coefficient = instance.weight(current, j);
    }
    Ok(obs)
}

pub fn readout_observables(readout: Readout, instance: &TspInstance, current: usize) -> Result<Vec<Observable>> {
    match readout {
        Readout::CurrentPair => pair_observables(instance.k(), current),
        Readout::WeightedPair => weighted_pair_observables(instance, current),
        Readout::SingleZ => q_observables(instance.k()),
    }
}

/// Saved training result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: AnsatzKind,
    pub layers: usize,
    pub trained_on: usize,
    pub values: Vec<f64>,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default = "default_rng")]
    pub rng: String,
}

fn default_rng() -> String {
    crate::seeding::RNG_ALGORITHM.to_string()
}

impl Checkpoint {
    pub fn new(params: &AnsatzParams, hyperparams: &Hyperparams, seed: u64, generator: Option<Generator>) -> Self {
        Checkpoint {
            kind: params.kind,
            layers: params.layers,
            trained_on: params.trained_on,
            values: params.values.clone(),
            hyperparams: hyperparams.clone(),
            seed,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            generator,
            rng: default_rng(),
        }
    }

    pub fn params(&self) -> Result<AnsatzParams> {
        AnsatzParams::new(self.kind, self.layers, self.values.clone(), self.trained_on)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        c.params()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
