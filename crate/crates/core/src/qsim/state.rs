use num_complex::Complex64;

use super::observable::eigenvalue;
use super::{GateOp, Observable, MAX_QUBITS};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Full amplitude vector of a `num_qubits`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// `|0…0⟩` on `k` qubits.
pub fn zero_state(k: usize) -> Result<StateVector> {
    if !(1..=MAX_QUBITS).contains(&k) {
        return Err(Error::QubitCount(k));
    }
    let mut amplitudes = vec![ZERO; 1 << k];
    amplitudes[0] = ONE;
    Ok(StateVector {
        num_qubits: k,
        amplitudes,
    })
}

impl StateVector {
    /// Wrap an explicit amplitude vector. The length must be a power of two
    /// and the vector must be normalised to within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::SizeMismatch(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let k = len.trailing_zeros() as usize;
        if k > MAX_QUBITS {
            return Err(Error::QubitCount(k));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "amplitudes have squared norm {norm}"
            )));
        }
        Ok(StateVector {
            num_qubits: k,
            amplitudes,
        })
    }

    /// `|+…+⟩`, the result of a Hadamard on every qubit of `|0…0⟩`.
    pub fn uniform(k: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&k) {
            return Err(Error::QubitCount(k));
        }
        let n = 1usize << k;
        let a = Complex64::new((n as f64).sqrt().recip(), 0.0);
        Ok(StateVector {
            num_qubits: k,
            amplitudes: vec![a; n],
        })
    }

    pub fn basis(k: usize, index: usize) -> Result<Self> {
        let mut s = zero_state(k)?;
        if index >= s.amplitudes.len() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {k} qubits"
            )));
        }
        s.amplitudes[0] = ZERO;
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Apply a circuit in order. Consecutive `RZZ` gates are merged into a
    /// single diagonal pass.
    pub fn run(&mut self, circuit: &[GateOp]) -> Result<()> {
        for g in circuit {
            g.validate(self.num_qubits)?;
        }
        let mut i = 0;
        while i < circuit.len() {
            if let GateOp::RZZ(..) = circuit[i] {
                let start = i;
                while i < circuit.len() && matches!(circuit[i], GateOp::RZZ(..)) {
                    i += 1;
                }
                if i - start == 1 {
                    self.apply_unchecked(&circuit[start]);
                } else {
                    self.apply_zz_block(&circuit[start..i]);
                }
            } else {
                self.apply_unchecked(&circuit[i]);
                i += 1;
            }
        }
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &GateOp) {
        if let GateOp::RX(_, t) | GateOp::RY(_, t) | GateOp::RZ(_, t) | GateOp::RZZ(_, _, t) = *gate {
            if t == 0.0 {
                return;
            }
        }
        match *gate {
            GateOp::H(q) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_1q(q, |a, b| ((a + b) * h, (a - b) * h));
            }
            GateOp::RX(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let mis = Complex64::new(0.0, -s);
                self.apply_1q(q, |a, b| (a * c + b * mis, a * mis + b * c));
            }
            GateOp::RY(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                self.apply_1q(q, |a, b| (a * c - b * s, a * s + b * c));
            }
            GateOp::RZ(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                self.apply_1q(q, |a, b| (a * lo, b * hi));
            }
            GateOp::Cnot { control, target } => {
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for x in 0..self.amplitudes.len() {
                    if x & cbit != 0 && x & tbit == 0 {
                        self.amplitudes.swap(x, x | tbit);
                    }
                }
            }
            GateOp::RZZ(i, j, t) => {
                let mask = (1usize << i) | (1usize << j);
                let (s, c) = t.sin_cos();
                let even = Complex64::new(c, -s);
                let odd = Complex64::new(c, s);
                for (x, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if (x & mask).count_ones() % 2 == 0 {
                        even
                    } else {
                        odd
                    };
                }
            }
        }
    }

    fn apply_1q<F>(&mut self, q: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let stride = 1usize << q;
        let amps = &mut self.amplitudes;
        for block in (0..amps.len()).step_by(stride << 1) {
            for x in block..block + stride {
                let (a, b) = f(amps[x], amps[x + stride]);
                amps[x] = a;
                amps[x + stride] = b;
            }
        }
    }

    /// Multiply by `exp(-i Σ θ_g Z_i Z_j)` for a run of RZZ gates.
    ///
    /// The Ising energy `E(x) = Σ J_ij s_i s_j` is built incrementally: `x`
    /// differs from `x & (x - 1)` in its lowest set bit only.
    fn apply_zz_block(&mut self, gates: &[GateOp]) {
        let k = self.num_qubits;
        let mut coupling = vec![0.0; k * k];
        let mut total = 0.0;
        for g in gates {
            if let GateOp::RZZ(i, j, t) = *g {
                coupling[i * k + j] += t;
                coupling[j * k + i] += t;
                total += t;
            }
        }
        let row_sum: Vec<f64> = (0..k)
            .map(|b| coupling[b * k..(b + 1) * k].iter().sum())
            .collect();
        let n = self.amplitudes.len();
        let mut energy = vec![0.0; n];
        energy[0] = total;
        for x in 1..n {
            let b = x.trailing_zeros() as usize;
            let prev = x & (x - 1);
            let row = &coupling[b * k..(b + 1) * k];
            let mut field = row_sum[b];
            let mut rest = prev;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                field -= 2.0 * row[j];
                rest &= rest - 1;
            }
            energy[x] = energy[prev] - 2.0 * field;
        }
        for (a, e) in self.amplitudes.iter_mut().zip(energy) {
            let (s, c) = e.sin_cos();
            *a *= Complex64::new(c, -s);
        }
    }

    /// `⟨ψ|obs|ψ⟩` for a diagonal observable.
    pub fn expectation_z(&self, obs: &Observable) -> Result<f64> {
        let masks = obs.masks(self.num_qubits)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(x, a)| a.norm_sqr() * eigenvalue(&masks, x))
            .sum())
    }

    /// Expectations of several observables from one pass over the
    /// probabilities.
    pub fn expectations(&self, observables: &[Observable]) -> Result<Vec<f64>> {
        let masks = observables
            .iter()
            .map(|o| o.masks(self.num_qubits))
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; observables.len()];
        for (x, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(&masks) {
                *o += p * eigenvalue(m, x);
            }
        }
        Ok(out)
    }

    /// Apply a diagonal observable to the vector (not normalised afterwards).
    pub(crate) fn apply_diagonal_observable(&mut self, obs: &Observable) -> Result<()> {
        let masks = obs.masks(self.num_qubits)?;
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= eigenvalue(&masks, x);
        }
        Ok(())
    }

    /// Apply the Pauli generator of a rotation gate (`X`, `Y` or `Z` on its
    /// qubit) without the rotation. Used by the adjoint gradient sweep.
    pub(crate) fn apply_rotation_generator(&mut self, gate: &GateOp) {
        match *gate {
            GateOp::RX(q, _) => self.apply_1q(q, |a, b| (b, a)),
            GateOp::RY(q, _) => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_1q(q, |a, b| (-i * b, i * a));
            }
            GateOp::RZ(q, _) => self.apply_1q(q, |a, b| (a, -b)),
            _ => panic!("gate {gate:?} is not a single-qubit rotation"),
        }
    }
}
