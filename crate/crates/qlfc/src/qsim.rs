//! Exact statevector simulation of small quantum circuits.
//!
//! The register is dense: 2^n complex amplitudes indexed in big-endian qubit
//! order, i.e. qubit 0 is the most significant bit of the basis index. Gates
//! are applied in place with stride arithmetic. Measurement sampling is a
//! seeded multinomial draw (ChaCha8, inverse CDF) so every experiment is
//! bit-reproducible.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_1_SQRT_2;

/// Dense quantum register of 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0...0⟩ on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits > 0, "register needs at least one qubit");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// Computational basis state |index⟩ (big-endian).
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(index < 1 << n_qubits, "basis index out of range");
        let mut sv = Statevector::zero(n_qubits);
        sv.amps[0] = Complex64::new(0.0, 0.0);
        sv.amps[index] = Complex64::new(1.0, 0.0);
        sv
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Σ_b |amplitude_b|².
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply a single gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::H { target } => {
                self.map_pairs(target, |a0, a1| {
                    (
                        FRAC_1_SQRT_2 * (a0 + a1),
                        FRAC_1_SQRT_2 * (a0 - a1),
                    )
                });
            }
            Gate::Phase { target, angle } => {
                let phase = Complex64::from_polar(1.0, angle);
                self.map_pairs(target, |a0, a1| (a0, phase * a1));
            }
            Gate::Rx { target, angle } => {
                let c = (angle / 2.0).cos();
                let s = (angle / 2.0).sin();
                let mis = Complex64::new(0.0, -s);
                self.map_pairs(target, |a0, a1| (c * a0 + mis * a1, mis * a0 + c * a1));
            }
            Gate::Rz { target, angle } => {
                let minus = Complex64::from_polar(1.0, -angle / 2.0);
                let plus = Complex64::from_polar(1.0, angle / 2.0);
                self.map_pairs(target, |a0, a1| (minus * a0, plus * a1));
            }
            Gate::Cnot { control, target } => {
                let cmask = self.mask(control);
                let tmask = self.mask(target);
                for i in 0..self.amps.len() {
                    // swap each |c=1, t=0⟩ with its |c=1, t=1⟩ partner once
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amps.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    /// |amplitude_b|² for every basis index b.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨Z⟩ on one qubit: +|amp|² where its bit is 0, −|amp|² where it is 1.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let mask = self.mask(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let sign = if b & mask == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum())
    }

    /// Bit mask of `qubit` in the basis index (qubit 0 = most significant).
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Apply a 2×2 map to every (bit=0, bit=1) amplitude pair of `target`.
    fn map_pairs<F>(&mut self, target: usize, f: F)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
    {
        let mask = self.mask(target);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (b0, b1) = f(self.amps[i], self.amps[j]);
                self.amps[i] = b0;
                self.amps[j] = b1;
            }
        }
    }
}

/// One gate of the supported set.
///
/// Matrices: H = (1/√2)[[1,1],[1,−1]]; Phase(λ) = diag(1, e^{iλ});
/// RX(θ) = [[cos θ/2, −i sin θ/2],[−i sin θ/2, cos θ/2]];
/// RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2}); CNOT flips target where control is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { target: usize },
    Phase { target: usize, angle: f64 },
    Rx { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |index: usize| {
            if index < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { index, n_qubits })
            }
        };
        match *self {
            Gate::H { target }
            | Gate::Phase { target, .. }
            | Gate::Rx { target, .. }
            | Gate::Rz { target, .. } => check(target),
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::DegenerateCnot { qubit: control });
                }
                Ok(())
            }
        }
    }
}

/// Ordered gate sequence over a fixed register width.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn h(&mut self, target: usize) -> &mut Self {
        self.push(Gate::H { target })
    }

    pub fn phase(&mut self, target: usize, angle: f64) -> &mut Self {
        self.push(Gate::Phase { target, angle })
    }

    pub fn rx(&mut self, target: usize, angle: f64) -> &mut Self {
        self.push(Gate::Rx { target, angle })
    }

    pub fn rz(&mut self, target: usize, angle: f64) -> &mut Self {
        self.push(Gate::Rz { target, angle })
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Gate::Cnot { control, target })
    }

    /// Append another fragment of the same width.
    pub fn extend(&mut self, other: &Circuit) -> &mut Self {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.gates.extend_from_slice(&other.gates);
        self
    }
}

/// Run all gates in order on a copy of `initial`.
pub fn run_circuit(circuit: &Circuit, initial: &Statevector) -> Result<Statevector> {
    if circuit.n_qubits != initial.n_qubits() {
        return Err(Error::DimensionMismatch {
            circuit: circuit.n_qubits,
            state: initial.n_qubits(),
        });
    }
    let mut state = initial.clone();
    for gate in &circuit.gates {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Histogram of sampled measurement outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    shots: u64,
    counts: Vec<u64>,
}

impl ShotCounts {
    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Count per basis index; length 2^n.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// counts / shots for every basis index.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }
}

/// Multinomial draw of `shots` outcomes from `probs`, inverse-CDF over the
/// cumulative distribution. Deterministic for a fixed seed.
pub fn sample_counts(probs: &[f64], shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedProbabilities { sum, tol: 1e-9 });
    }
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    let last = probs.len() - 1;
    for _ in 0..shots {
        let u: f64 = rng.gen();
        // cumulative rounding can leave the top slightly below 1; the
        // partition_point then lands past the end, so clamp to the last bin
        let outcome = cumulative.partition_point(|&c| c <= u).min(last);
        counts[outcome] += 1;
    }
    Ok(ShotCounts { shots, counts })
}
