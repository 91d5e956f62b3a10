//! Feature map, parameterized ansatz, forward pass, loss, and gradients.
//!
//! Classical inputs are three recent frequency-deviation samples. They are
//! clamped to a full-scale range, mapped to phases, and encoded with a
//! second-order phase map (H on every qubit, single-qubit phases, CNOT-
//! conjugated pair phases over a linear chain). The trainable part alternates
//! RX/RZ rotations with CNOT entanglers. Classification reads the
//! computational-basis distribution and takes the argmax over the leading
//! `n_classes` outcomes.

use crate::error::{Error, Result};
use crate::qsim::{run_circuit, sample_counts, Circuit, Statevector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// The three most recent frequency-deviation samples, in Hz
/// (oldest first: [Δf_{t−3}, Δf_{t−2}, Δf_{t−1}]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow(pub [f64; 3]);

impl FeatureWindow {
    pub fn values(&self) -> &[f64; 3] {
        &self.0
    }
}

/// Encoding configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub n_qubits: usize,
    /// Normalization scale: inputs are clamped to ±full_scale_hz.
    pub full_scale_hz: f64,
    pub repetitions: usize,
}

impl Default for FeatureMapSpec {
    fn default() -> Self {
        FeatureMapSpec {
            n_qubits: 3,
            full_scale_hz: 1.0,
            repetitions: 1,
        }
    }
}

/// Trainable-circuit configuration: `layers` rounds of per-qubit RX+RZ
/// rotations, each followed by the layer's CNOT pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub layers: usize,
    /// CNOT (control, target) pairs applied after each rotation round.
    pub entanglement: Vec<(usize, usize)>,
}

impl AnsatzSpec {
    pub fn linear(layers: usize) -> Self {
        AnsatzSpec {
            layers,
            entanglement: vec![(0, 1), (1, 2)],
        }
    }

    /// One RX and one RZ angle per qubit per layer.
    pub fn parameter_count(&self, n_qubits: usize) -> usize {
        self.layers * n_qubits * 2
    }
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        AnsatzSpec::linear(2)
    }
}

/// Trainable rotation angles, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcParams(pub Vec<f64>);

impl VqcParams {
    /// Uniform random angles in [−π, π], ChaCha8-seeded.
    pub fn random(spec: &AnsatzSpec, n_qubits: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VqcParams(
            (0..spec.parameter_count(n_qubits))
                .map(|_| rng.gen_range(-PI..PI))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Measurement backend for the forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Exact basis probabilities from the statevector.
    Exact,
    /// Empirical frequencies from a seeded multinomial draw.
    Shots { shots: u64, seed: u64 },
}

/// The full classifier: encoding, ansatz, parameters, and class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub feature_map: FeatureMapSpec,
    pub ansatz: AnsatzSpec,
    pub params: VqcParams,
    pub n_classes: usize,
}

/// Clamp to ±full_scale and scale to ±π.
fn scaled_feature(x: f64, full_scale: f64) -> f64 {
    PI * (x / full_scale).clamp(-1.0, 1.0)
}

/// Build the encoding fragment for one input window.
///
/// Per repetition: H on every qubit, Phase(2·x̃_i) on qubit i, then for each
/// chain pair (i, j): CNOT(i,j), Phase(2·(π−x̃_i)(π−x̃_j)) on j, CNOT(i,j).
pub fn encode_features(x: &FeatureWindow, spec: &FeatureMapSpec) -> Circuit {
    let n = spec.n_qubits;
    let scaled: Vec<f64> = x
        .0
        .iter()
        .map(|&v| scaled_feature(v, spec.full_scale_hz))
        .collect();
    let mut circuit = Circuit::new(n);
    for _ in 0..spec.repetitions {
        for q in 0..n {
            circuit.h(q);
        }
        for q in 0..n {
            circuit.phase(q, 2.0 * scaled[q]);
        }
        for (i, j) in (0..n - 1).map(|i| (i, i + 1)) {
            circuit.cnot(i, j);
            circuit.phase(j, 2.0 * (PI - scaled[i]) * (PI - scaled[j]));
            circuit.cnot(i, j);
        }
    }
    circuit
}

/// Build the trainable fragment. Parameters are consumed in qubit order
/// within each layer, RX before RZ.
pub fn build_ansatz(params: &VqcParams, spec: &AnsatzSpec, n_qubits: usize) -> Result<Circuit> {
    let expected = spec.parameter_count(n_qubits);
    if params.len() != expected {
        return Err(Error::ParameterLength {
            expected,
            got: params.len(),
        });
    }
    let mut circuit = Circuit::new(n_qubits);
    let mut theta = params.0.iter();
    for _ in 0..spec.layers {
        for q in 0..n_qubits {
            circuit.rx(q, *theta.next().unwrap());
            circuit.rz(q, *theta.next().unwrap());
        }
        for &(control, target) in &spec.entanglement {
            circuit.cnot(control, target);
        }
    }
    Ok(circuit)
}

impl VqcModel {
    pub fn new(
        feature_map: FeatureMapSpec,
        ansatz: AnsatzSpec,
        params: VqcParams,
        n_classes: usize,
    ) -> Self {
        debug_assert!(n_classes <= 1 << feature_map.n_qubits);
        VqcModel {
            feature_map,
            ansatz,
            params,
            n_classes,
        }
    }

    /// Forward pass: probability (or empirical frequency) per basis outcome.
    pub fn forward(&self, x: &FeatureWindow, backend: Backend) -> Result<Vec<f64>> {
        self.forward_with(&self.params, x, backend)
    }

    /// Forward pass under an explicit parameter vector (used by gradients).
    fn forward_with(
        &self,
        params: &VqcParams,
        x: &FeatureWindow,
        backend: Backend,
    ) -> Result<Vec<f64>> {
        let n = self.feature_map.n_qubits;
        let mut circuit = encode_features(x, &self.feature_map);
        circuit.extend(&build_ansatz(params, &self.ansatz, n)?);
        let state = run_circuit(&circuit, &Statevector::zero(n))?;
        let probs = state.probabilities();
        match backend {
            Backend::Exact => Ok(probs),
            Backend::Shots { shots, seed } => {
                Ok(sample_counts(&probs, shots, seed)?.frequencies())
            }
        }
    }

    /// Argmax over the leading `n_classes` outcomes; ties go to the lowest
    /// index.
    pub fn predict_class(&self, x: &FeatureWindow, backend: Backend) -> Result<usize> {
        let dist = self.forward(x, backend)?;
        Ok(argmax_class(&dist, self.n_classes))
    }

    /// Mean squared error between forward distributions and one-hot targets
    /// over all 2^n outcomes. Always evaluated on the exact backend.
    pub fn loss(&self, dataset: &[(FeatureWindow, usize)]) -> Result<f64> {
        self.loss_with(&self.params, dataset, Backend::Exact)
    }

    fn loss_with(
        &self,
        params: &VqcParams,
        dataset: &[(FeatureWindow, usize)],
        backend: Backend,
    ) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = 1 << self.feature_map.n_qubits;
        let mut total = 0.0;
        for (x, target) in dataset {
            let dist = self.forward_with(params, x, backend)?;
            for (b, p) in dist.iter().enumerate() {
                let y = if b == *target { 1.0 } else { 0.0 };
                total += (y - p) * (y - p);
            }
            debug_assert_eq!(dist.len(), dim);
        }
        Ok(total / dataset.len() as f64)
    }

    /// Exact loss gradient by the parameter-shift rule: each probability's
    /// derivative is (P(θ+π/2) − P(θ−π/2))/2, chained through the MSE.
    pub fn parameter_shift_gradient(
        &self,
        dataset: &[(FeatureWindow, usize)],
    ) -> Result<Vec<f64>> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_params = self.params.len();
        let mut grad = vec![0.0; n_params];
        for (x, target) in dataset {
            let base = self.forward_with(&self.params, x, Backend::Exact)?;
            for j in 0..n_params {
                let mut plus = self.params.clone();
                plus.0[j] += FRAC_PI_2;
                let mut minus = self.params.clone();
                minus.0[j] -= FRAC_PI_2;
                let p_plus = self.forward_with(&plus, x, Backend::Exact)?;
                let p_minus = self.forward_with(&minus, x, Backend::Exact)?;
                let mut dl = 0.0;
                for b in 0..base.len() {
                    let y = if b == *target { 1.0 } else { 0.0 };
                    let dp = (p_plus[b] - p_minus[b]) / 2.0;
                    dl += 2.0 * (base[b] - y) * dp;
                }
                grad[j] += dl;
            }
        }
        for g in &mut grad {
            *g /= dataset.len() as f64;
        }
        Ok(grad)
    }
}

fn argmax_class(dist: &[f64], n_classes: usize) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate().take(n_classes).skip(1) {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

/// SPSA gain schedules and perturbation seed.
///
/// Step sizes follow a_k = a/(k+1+A)^α and c_k = c/(k+1)^γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            a: 0.2,
            c: 0.2,
            big_a: 10.0,
            alpha: 0.602,
            gamma: 0.101,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    fn ak(&self, k: u64) -> f64 {
        self.a / (k as f64 + 1.0 + self.big_a).powf(self.alpha)
    }

    fn ck(&self, k: u64) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

/// One SPSA update of the model parameters against the dataset loss.
///
/// Two loss evaluations at θ ± c_k·Δ with a Bernoulli ±1 perturbation Δ give
/// the simultaneous gradient estimate; θ moves by −a_k·ĝ. The perturbation
/// stream is seeded per iteration, so a fixed seed replays the trajectory.
pub fn spsa_step(
    model: &mut VqcModel,
    dataset: &[(FeatureWindow, usize)],
    iteration: u64,
    config: &SpsaConfig,
    backend: Backend,
) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.c <= 0.0 {
        return Err(Error::ZeroPerturbation);
    }
    let ck = config.ck(iteration);
    let ak = config.ak(iteration);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let delta: Vec<f64> = (0..model.params.len())
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();

    let mut plus = model.params.clone();
    let mut minus = model.params.clone();
    for (i, d) in delta.iter().enumerate() {
        plus.0[i] += ck * d;
        minus.0[i] -= ck * d;
    }
    let loss_plus = model.loss_with(&plus, dataset, backend)?;
    let loss_minus = model.loss_with(&minus, dataset, shifted(backend))?;

    for (i, d) in delta.iter().enumerate() {
        let g = (loss_plus - loss_minus) / (2.0 * ck * d);
        model.params.0[i] -= ak * g;
    }
    Ok(())
}

/// Decorrelate the second SPSA evaluation's shot noise from the first.
fn shifted(backend: Backend) -> Backend {
    match backend {
        Backend::Exact => Backend::Exact,
        Backend::Shots { shots, seed } => Backend::Shots {
            shots,
            seed: seed.wrapping_add(0x5DEECE66D),
        },
    }
}
