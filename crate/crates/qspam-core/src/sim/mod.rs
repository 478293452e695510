//! Shot-level simulation of the characterization circuits and of noisy GHZ
//! preparation, plus frequency estimators with binomial error bars.
//!
//! Bitstring convention everywhere: qubit 0 is the leftmost character and
//! '0' is the z+ outcome.

pub mod rng;

use crate::mitigation::{compile_sp_correction, CorrectionPulse};
use crate::qcore::{tol, DensityMatrix, Gate, Mat2, QcoreError, C, MAX_QUBITS};
use crate::spam_model::{
    build_measurement_model, rotated_sp_params, Experiment, ModelError, SpamParams,
};
use rayon::prelude::*;
use rng::{stream_id, ShotStream};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
    #[error("no shots satisfy the conditioning event")]
    EmptyCondition,
    #[error("mitigation error: {0}")]
    Mitigation(String),
}

/// Which circuit a histogram came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitLabel {
    #[serde(rename = "qspam")]
    Qspam(Experiment),
    #[serde(rename = "ghz")]
    Ghz(usize),
}

/// A runnable circuit: the labelled structure plus the optional injected
/// Rx rotation placed immediately after initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub label: CircuitLabel,
    pub injected_rx: f64,
}

impl CircuitSpec {
    pub fn qspam(exp: Experiment, injected_rx: f64) -> Self {
        Self { label: CircuitLabel::Qspam(exp), injected_rx }
    }

    pub fn num_measurements(&self) -> usize {
        match self.label {
            CircuitLabel::Qspam(e) => {
                if e.is_double() {
                    2
                } else {
                    1
                }
            }
            CircuitLabel::Ghz(n) => n,
        }
    }
}

/// Noise and error parameters of a synthetic device.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-qubit SPAM parameters, in qubit order.
    pub spam: Vec<SpamParams>,
    /// Depolarizing probability after each single-qubit gate layer.
    #[serde(default)]
    pub p1: f64,
    /// Depolarizing probability applied to both qubits of each CNOT.
    #[serde(default)]
    pub p2: f64,
    /// Amplitude-damping probability per circuit layer.
    #[serde(default)]
    pub gamma: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (q, p) in self.spam.iter().enumerate() {
            p.validate()
                .map_err(|e| SimError::InvalidConfig(format!("qubit {q}: {e}")))?;
        }
        for (name, v) in [("p1", self.p1), ("p2", self.p2), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidConfig(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Outcome counts of one circuit. `nu` always equals the sum of counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutHistogram {
    nu: u64,
    counts: BTreeMap<String, u64>,
    #[serde(skip, default)]
    n_bits: usize,
}

impl ReadoutHistogram {
    pub fn empty(n_bits: usize) -> Self {
        Self { nu: 0, counts: BTreeMap::new(), n_bits }
    }

    pub fn nu(&self) -> u64 {
        self.nu
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn num_bits(&self) -> usize {
        self.counts
            .keys()
            .next()
            .map_or(self.n_bits, |k| k.len())
    }

    pub fn record(&mut self, key: &str) {
        self.record_count(key, 1);
    }

    pub fn record_count(&mut self, key: &str, count: u64) {
        debug_assert!(key.len() == self.num_bits() || self.counts.is_empty());
        *self.counts.entry(key.to_string()).or_insert(0) += count;
        self.nu += count;
    }

    pub fn frequency(&self, key: &str) -> f64 {
        if self.nu == 0 {
            return 0.0;
        }
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.nu as f64
    }

    pub fn merge(&mut self, other: &ReadoutHistogram) {
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += c;
        }
        self.nu += other.nu;
    }
}

/// Pre-computed outcome distribution of one characterization circuit.
enum CircuitDist {
    /// P(read z-).
    Single(f64),
    /// P(first = z-), P(second = z- | first = z+), P(second = z- | first = z-).
    Double { first_minus: f64, minus_after_plus: f64, minus_after_minus: f64 },
}

fn circuit_distribution(
    p: &SpamParams,
    exp: Experiment,
    injected_rx: f64,
) -> Result<CircuitDist, ModelError> {
    let model = build_measurement_model(p, false)?;
    let mut rho = p.fiducial_state();
    if injected_rx != 0.0 {
        rho = rho.conj_by(&Gate::Rx(injected_rx).matrix());
    }
    if let Some(g) = exp.prep_gate() {
        rho = rho.conj_by(&g.matrix());
    }
    let theta = exp.rz_angle();
    if theta != 0.0 {
        rho = rho.conj_by(&Gate::Rz(theta).matrix());
    }
    let p_minus = model.povm_minus.mul(&rho).trace().re.clamp(0.0, 1.0);
    if !exp.is_double() {
        return Ok(CircuitDist::Single(p_minus));
    }
    let cond_minus = |plus_branch: bool| -> f64 {
        let k = model.kraus(plus_branch);
        let branch_prob = if plus_branch { 1.0 - p_minus } else { p_minus };
        if branch_prob <= 1e-15 {
            return 0.0;
        }
        let branch = rho.conj_by(k);
        (model.povm_minus.mul(&branch).trace().re / branch_prob).clamp(0.0, 1.0)
    };
    Ok(CircuitDist::Double {
        first_minus: p_minus,
        minus_after_plus: cond_minus(true),
        minus_after_minus: cond_minus(false),
    })
}

/// One consecutive double measurement of `rho` under the given parameters.
/// Returns the two outcome bits (0 = z+), first measurement first.
pub fn sample_double_measurement<R: rand::Rng>(
    p: &SpamParams,
    rho: &Mat2,
    rng: &mut R,
) -> Result<(u8, u8), ModelError> {
    let model = build_measurement_model(p, false)?;
    let p_first_minus = model.povm_minus.mul(rho).trace().re.clamp(0.0, 1.0);
    let first = u8::from(rng.gen::<f64>() < p_first_minus);
    let branch_prob = if first == 1 { p_first_minus } else { 1.0 - p_first_minus };
    if branch_prob <= 1e-15 {
        return Err(ModelError::ImpossibleOutcome { prob: branch_prob });
    }
    let branch = rho.conj_by(model.kraus(first == 0));
    let p_second_minus =
        (model.povm_minus.mul(&branch).trace().re / branch_prob).clamp(0.0, 1.0);
    let second = u8::from(rng.gen::<f64>() < p_second_minus);
    Ok((first, second))
}

fn sample_circuit(dist: &CircuitDist, stream: &ShotStream, nu: u64) -> ReadoutHistogram {
    use rand::Rng;
    let bits = match dist {
        CircuitDist::Single(_) => 1,
        CircuitDist::Double { .. } => 2,
    };
    let chunk: u64 = 1 << 14;
    let n_chunks = nu.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut h = ReadoutHistogram::empty(bits);
            let lo = ci * chunk;
            let hi = (lo + chunk).min(nu);
            for shot in lo..hi {
                let mut rng = stream.at_shot(shot);
                match dist {
                    CircuitDist::Single(p_minus) => {
                        h.record(if rng.gen::<f64>() < *p_minus { "1" } else { "0" });
                    }
                    CircuitDist::Double { first_minus, minus_after_plus, minus_after_minus } => {
                        let first = rng.gen::<f64>() < *first_minus;
                        let p2 = if first { *minus_after_minus } else { *minus_after_plus };
                        let second = rng.gen::<f64>() < p2;
                        let key = match (first, second) {
                            (false, false) => "00",
                            (false, true) => "01",
                            (true, false) => "10",
                            (true, true) => "11",
                        };
                        h.record(key);
                    }
                }
            }
            h
        })
        .reduce(
            || ReadoutHistogram::empty(bits),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}

/// All eight characterization circuits for every qubit, `nu` shots each,
/// with a common injected Rx angle. Deterministic in `seed` independent of
/// thread count.
pub fn run_qspam_circuits(
    params: &[SpamParams],
    injected_rx: f64,
    nu: u64,
    seed: u64,
) -> Result<Vec<BTreeMap<Experiment, ReadoutHistogram>>, SimError> {
    if params.is_empty() {
        return Err(SimError::InvalidConfig("no qubits".into()));
    }
    params
        .iter()
        .enumerate()
        .map(|(q, p)| {
            let mut per_exp = BTreeMap::new();
            for (i, exp) in Experiment::QSPAM.iter().enumerate() {
                let dist = circuit_distribution(p, *exp, injected_rx)?;
                let stream =
                    ShotStream::new(seed, stream_id(i as u64, q as u64));
                per_exp.insert(*exp, sample_circuit(&dist, &stream, nu));
            }
            Ok(per_exp)
        })
        .collect()
}

/// State-preparation handling for the GHZ circuit.
#[derive(Debug, Clone)]
pub enum SpCorrection<'a> {
    /// Use the faulty initial states as-is.
    Off,
    /// Compile corrective pulses from the true (injected) Bloch vectors.
    FromTruth,
    /// Apply externally compiled pulses, one per qubit.
    Pulses(&'a [CorrectionPulse]),
}

fn depolarizing_kraus(p: f64) -> [Mat2; 4] {
    let i = C::new(0.0, 1.0);
    let z = C::new(0.0, 0.0);
    let s0 = (1.0 - 3.0 * p / 4.0).sqrt();
    let s = (p / 4.0).sqrt();
    [
        Mat2::diag(C::new(s0, 0.0), C::new(s0, 0.0)),
        Mat2::new([[z, C::new(s, 0.0)], [C::new(s, 0.0), z]]),
        Mat2::new([[z, -i * s], [i * s, z]]),
        Mat2::diag(C::new(s, 0.0), C::new(-s, 0.0)),
    ]
}

fn damping_kraus(gamma: f64) -> [Mat2; 2] {
    let z = C::new(0.0, 0.0);
    [
        Mat2::diag(C::new(1.0, 0.0), C::new((1.0 - gamma).sqrt(), 0.0)),
        Mat2::new([[z, C::new(gamma.sqrt(), 0.0)], [z, z]]),
    ]
}

/// Exact readout distribution of the noisy N-qubit GHZ circuit: faulty
/// (optionally corrected) initial states, H on qubit 0, a CNOT chain, gate
/// noise, then per-qubit readout confusion. Indexed with qubit 0 as the
/// most significant bit.
pub fn ghz_distribution(
    noise: &NoiseConfig,
    n: usize,
    injections: &[f64],
    correction: &SpCorrection,
) -> Result<Vec<f64>, SimError> {
    noise.validate()?;
    if n < 2 || n > MAX_QUBITS || n % 2 != 0 {
        return Err(SimError::InvalidConfig(format!(
            "GHZ size {n} not an even number in [2, {MAX_QUBITS}]"
        )));
    }
    if injections.len() != n {
        return Err(SimError::InvalidConfig(format!(
            "{} injection angles for {n} qubits",
            injections.len()
        )));
    }
    if noise.spam.len() < n {
        return Err(SimError::InvalidConfig(format!(
            "{} SPAM parameter sets for {n} qubits",
            noise.spam.len()
        )));
    }
    let mut initial = Vec::with_capacity(n);
    for q in 0..n {
        let mut rho = noise.spam[q].fiducial_state();
        if injections[q] != 0.0 {
            rho = rho.conj_by(&Gate::Rx(injections[q]).matrix());
        }
        let pulse = match correction {
            SpCorrection::Off => None,
            SpCorrection::FromTruth => {
                let alpha = rotated_sp_params(&noise.spam[q].alpha_sp(), injections[q]);
                Some(
                    compile_sp_correction(&alpha, (0.0, 0.0))
                        .map_err(|e| SimError::Mitigation(e.to_string()))?,
                )
            }
            SpCorrection::Pulses(pulses) => {
                if pulses.len() != n {
                    return Err(SimError::InvalidConfig(format!(
                        "{} correction pulses for {n} qubits",
                        pulses.len()
                    )));
                }
                Some(pulses[q].clone())
            }
        };
        if let Some(p) = pulse {
            rho = p.apply(&rho);
        }
        initial.push(rho);
    }
    let mut state = DensityMatrix::product(&initial)?;
    let damp = damping_kraus(noise.gamma);
    let damp_layer = |state: DensityMatrix| -> Result<DensityMatrix, SimError> {
        if noise.gamma == 0.0 {
            return Ok(state);
        }
        let mut s = state;
        for q in 0..n {
            s = s.apply_channel(&damp, q)?;
        }
        Ok(s)
    };
    state = state.apply_unitary(&Gate::H, &[0])?;
    if noise.p1 > 0.0 {
        state = state.apply_channel(&depolarizing_kraus(noise.p1), 0)?;
    }
    state = damp_layer(state)?;
    for q in 0..n - 1 {
        state = state.apply_unitary(&Gate::Cnot, &[q, q + 1])?;
        if noise.p2 > 0.0 {
            let d2 = depolarizing_kraus(noise.p2);
            state = state.apply_channel(&d2, q)?;
            state = state.apply_channel(&d2, q + 1)?;
        }
        state = damp_layer(state)?;
    }
    let mut probs: Vec<f64> = state.diagonal_probs();
    // per-qubit readout confusion, Eq.(7) entries with alpha_m and delta
    for q in 0..n {
        let p = &noise.spam[q];
        let a00 = (1.0 + p.alpha_m + p.delta) / 2.0;
        let a01 = (1.0 - p.alpha_m + p.delta) / 2.0;
        let bit = n - 1 - q;
        for idx in 0..probs.len() {
            if idx >> bit & 1 == 0 {
                let partner = idx | (1 << bit);
                let p0 = probs[idx];
                let p1 = probs[partner];
                probs[idx] = a00 * p0 + a01 * p1;
                probs[partner] = (1.0 - a00) * p0 + (1.0 - a01) * p1;
            }
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol::CHANNEL {
        return Err(SimError::InvalidConfig(format!(
            "readout distribution sums to {total}"
        )));
    }
    for v in probs.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(probs)
}

fn bit_key(idx: usize, n: usize) -> String {
    (0..n)
        .map(|q| if idx >> (n - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Sample `nu` shots of the noisy GHZ circuit. Deterministic in
/// `noise.seed` independent of thread count.
pub fn run_ghz(
    noise: &NoiseConfig,
    n: usize,
    injections: &[f64],
    correction: &SpCorrection,
    nu: u64,
) -> Result<ReadoutHistogram, SimError> {
    use rand::Rng;
    let probs = ghz_distribution(noise, n, injections, correction)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let correction_tag = match correction {
        SpCorrection::Off => 0u64,
        SpCorrection::FromTruth => 1,
        SpCorrection::Pulses(_) => 2,
    };
    let stream = ShotStream::new(noise.seed, stream_id(100 + correction_tag, n as u64));
    let chunk: u64 = 1 << 13;
    let n_chunks = nu.div_ceil(chunk);
    let h = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut h = ReadoutHistogram::empty(n);
            let lo = ci * chunk;
            let hi = (lo + chunk).min(nu);
            for shot in lo..hi {
                let u: f64 = stream.at_shot(shot).gen();
                let idx = cdf.partition_point(|c| *c < u).min(probs.len() - 1);
                h.record(&bit_key(idx, n));
            }
            h
        })
        .reduce(
            || ReadoutHistogram::empty(n),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    Ok(h)
}

fn floored_variance(p: f64, nu: f64) -> f64 {
    (p * (1.0 - p) / nu).max(1.0 / (4.0 * nu * nu))
}

/// Frequency of outcomes satisfying `event`, with binomial variance floored
/// at 1/(4 nu^2) so all-zero and all-one counts keep a usable error bar.
pub fn estimate_probability(
    h: &ReadoutHistogram,
    event: impl Fn(&str) -> bool,
) -> (f64, f64) {
    let nu = h.nu() as f64;
    let hits: u64 = h
        .counts()
        .iter()
        .filter(|(k, _)| event(k))
        .map(|(_, c)| *c)
        .sum();
    let p = hits as f64 / nu;
    (p, floored_variance(p, nu))
}

/// Conditional frequency P(event | given) with the effective shot count of
/// the conditioning event.
pub fn estimate_conditional(
    h: &ReadoutHistogram,
    event: impl Fn(&str) -> bool,
    given: impl Fn(&str) -> bool,
) -> Result<(f64, f64), SimError> {
    let cond: u64 = h
        .counts()
        .iter()
        .filter(|(k, _)| given(k))
        .map(|(_, c)| *c)
        .sum();
    if cond == 0 {
        return Err(SimError::EmptyCondition);
    }
    let both: u64 = h
        .counts()
        .iter()
        .filter(|(k, _)| given(k) && event(k))
        .map(|(_, c)| *c)
        .sum();
    let p = both as f64 / cond as f64;
    Ok((p, floored_variance(p, cond as f64)))
}
