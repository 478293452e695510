//! SP-error corrective rotations, measurement-error mitigation by sparse
//! confusion-matrix inversion, mitigated expectation values with variances,
//! and the standard-vs-QSPAM bias bounds.

use crate::qcore::{density_from_bloch, tol, BlochVector, Gate, Mat2};
use crate::sim::ReadoutHistogram;
use crate::spam_model::SpamParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MitigationError {
    #[error("confusion matrix for qubit {qubit} is singular (det = {det:.3e})")]
    NonInvertibleConfusion { qubit: usize, det: f64 },
    #[error("zero-length Bloch vector admits no corrective rotation")]
    NoCorrectionPossible,
    #[error("histogram has {histogram} qubits but confusion set has {confusion}")]
    QubitCountMismatch { histogram: usize, confusion: usize },
}

/// Which parameterization the confusion matrices came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Separate characterization: entries built from alpha_M and delta.
    #[serde(rename = "qspam_a")]
    QspamA,
    /// Standard protocol: the measured product alpha_M * alpha_SP^z stands
    /// in for alpha_M.
    #[serde(rename = "standard_b")]
    StandardB,
}

/// Ordered per-qubit 2x2 column-stochastic confusion matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionSet {
    matrices: Vec<[[f64; 2]; 2]>,
    provenance: Provenance,
}

fn confusion_entries(m: f64, delta: f64) -> [[f64; 2]; 2] {
    [
        [(1.0 + m + delta) / 2.0, (1.0 - m + delta) / 2.0],
        [(1.0 - m - delta) / 2.0, (1.0 + m - delta) / 2.0],
    ]
}

fn det2(a: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn inv2(a: &[[f64; 2]; 2], qubit: usize) -> Result<[[f64; 2]; 2], MitigationError> {
    let det = det2(a);
    if det.abs() < 1e-12 {
        return Err(MitigationError::NonInvertibleConfusion { qubit, det });
    }
    Ok([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

impl ConfusionSet {
    pub fn num_qubits(&self) -> usize {
        self.matrices.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn matrix(&self, qubit: usize) -> &[[f64; 2]; 2] {
        &self.matrices[qubit]
    }

    pub fn inverses(&self) -> Result<Vec<[[f64; 2]; 2]>, MitigationError> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(q, a)| inv2(a, q))
            .collect()
    }
}

/// Per-qubit confusion matrices from characterized parameters.
pub fn build_confusion(params: &[SpamParams], mode: Provenance) -> ConfusionSet {
    let matrices = params
        .iter()
        .map(|p| {
            let m = match mode {
                Provenance::QspamA => p.alpha_m,
                Provenance::StandardB => p.alpha_m * p.alpha_sp_z,
            };
            confusion_entries(m, p.delta)
        })
        .collect();
    ConfusionSet { matrices, provenance: mode }
}

/// Corrected readout quasi-probabilities: entries may be negative but sum
/// to 1 by construction. Not clipped; clipping would reintroduce bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiDistribution {
    pub entries: BTreeMap<String, f64>,
}

impl QuasiDistribution {
    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn negative_entries(&self) -> Vec<(&str, f64)> {
        self.entries
            .iter()
            .filter(|(_, v)| **v < 0.0)
            .map(|(k, v)| (k.as_str(), *v))
            .collect()
    }
}

fn bits_of(key: &str) -> u64 {
    key.bytes().fold(0, |acc, b| (acc << 1) | u64::from(b == b'1'))
}

fn key_of(bits: u64, n: usize) -> String {
    (0..n)
        .map(|q| if bits >> (n - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Appendix-B sparse correction: for each output string beta, sum the
/// observed outcomes gamma weighted by products of per-qubit inverse
/// confusion entries. Theta(N |P|) per output string.
pub fn mitigate_histogram(
    h: &ReadoutHistogram,
    c: &ConfusionSet,
) -> Result<QuasiDistribution, MitigationError> {
    let n = c.num_qubits();
    if h.num_bits() != n {
        return Err(MitigationError::QubitCountMismatch {
            histogram: h.num_bits(),
            confusion: n,
        });
    }
    let inv = c.inverses()?;
    let support: Vec<(u64, f64)> = h
        .counts()
        .iter()
        .map(|(k, v)| (bits_of(k), *v as f64 / h.nu() as f64))
        .collect();
    let mut entries = BTreeMap::new();
    for beta in 0..(1u64 << n) {
        let mut acc = 0.0;
        for (gamma, freq) in &support {
            let mut w = *freq;
            for (q, m) in inv.iter().enumerate() {
                let bi = (beta >> (n - 1 - q) & 1) as usize;
                let gi = (gamma >> (n - 1 - q) & 1) as usize;
                w *= m[bi][gi];
            }
            acc += w;
        }
        entries.insert(key_of(beta, n), acc);
    }
    Ok(QuasiDistribution { entries })
}

/// Diagonal observable: eigenvalue for the basis state whose bits are given
/// with qubit 0 as the most significant bit. Eigenvalues must obey |O| <= 1.
pub type Observable<'a> = &'a dyn Fn(u64, usize) -> f64;

/// Parity observable Z^(tensor N).
pub fn z_parity(bits: u64, _n: usize) -> f64 {
    if bits.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-observed-outcome mitigation weight c_gamma = sum_beta O(beta)
/// prod_i [A^(i)]^-1_{beta_i, gamma_i}.
fn outcome_weight(inv: &[[[f64; 2]; 2]], gamma: u64, n: usize, observable: Observable) -> f64 {
    let mut acc = 0.0;
    for beta in 0..(1u64 << n) {
        let mut w = observable(beta, n);
        for (q, m) in inv.iter().enumerate() {
            let bi = (beta >> (n - 1 - q) & 1) as usize;
            let gi = (gamma >> (n - 1 - q) & 1) as usize;
            w *= m[bi][gi];
        }
        acc += w;
    }
    acc
}

/// Error-mitigated expectation value with its propagated standard deviation.
pub fn mitigated_expectation(
    h: &ReadoutHistogram,
    c: &ConfusionSet,
    observable: Observable,
) -> Result<(f64, f64), MitigationError> {
    let n = c.num_qubits();
    if h.num_bits() != n {
        return Err(MitigationError::QubitCountMismatch {
            histogram: h.num_bits(),
            confusion: n,
        });
    }
    let inv = c.inverses()?;
    let nu = h.nu() as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for (key, count) in h.counts() {
        let freq = *count as f64 / nu;
        let cg = outcome_weight(&inv, bits_of(key), n, observable);
        value += cg * freq;
        var += cg * cg * freq * (1.0 - freq) / nu;
    }
    Ok((value, var.sqrt()))
}

/// Worst-case standard deviation of a mitigated estimate,
/// nu^(-1/2) max_gamma sum_beta prod_i |[A^(i)]^-1_{beta_i, gamma_i}|,
/// with gamma ranging over the histogram support.
pub fn mitigation_sigma_bound(
    h: &ReadoutHistogram,
    c: &ConfusionSet,
) -> Result<f64, MitigationError> {
    let n = c.num_qubits();
    let inv = c.inverses()?;
    let mut worst: f64 = 0.0;
    for key in h.counts().keys() {
        let gamma = bits_of(key);
        // sum_beta of a product over qubits factorizes into column sums
        let mut prod = 1.0;
        for (q, m) in inv.iter().enumerate() {
            let gi = (gamma >> (n - 1 - q) & 1) as usize;
            prod *= m[0][gi].abs() + m[1][gi].abs();
        }
        worst = worst.max(prod);
    }
    Ok(worst / (h.nu() as f64).sqrt())
}

/// Compiled corrective rotation: six native gates in application order,
/// Rz(t1), Rx(pi/2), Rz(t2), Rz(pi), Rx(pi/2), Rz(-pi).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionPulse {
    pub theta1: f64,
    pub theta2: f64,
    pub x_degenerate: bool,
    pub y_degenerate: bool,
    /// The Bloch vector the pulse was compiled for, after degenerate-rule
    /// zeroing.
    pub target: BlochVector,
}

impl CorrectionPulse {
    pub fn gates(&self) -> [Gate; 6] {
        [
            Gate::Rz(self.theta1),
            Gate::Rx(FRAC_PI_2),
            Gate::Rz(self.theta2),
            Gate::Rz(PI),
            Gate::Rx(FRAC_PI_2),
            Gate::Rz(-PI),
        ]
    }

    /// Effect of the pulse on a single-qubit state.
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        self.gates()
            .iter()
            .fold(*rho, |acc, g| acc.conj_by(&g.matrix()))
    }

    pub fn apply_to_bloch(&self, v: &BlochVector) -> BlochVector {
        crate::qcore::bloch_from_density(&self.apply(&density_from_bloch(v)))
    }
}

/// Compile the corrective rotation aligning the estimated faulty Bloch
/// vector with +z. `uncertainty_xy` are the estimate errors (Delta alpha^x,
/// Delta alpha^y); transverse components within twice their uncertainty are
/// zeroed per the degenerate-angle rules.
pub fn compile_sp_correction(
    alpha: &BlochVector,
    uncertainty_xy: (f64, f64),
) -> Result<CorrectionPulse, MitigationError> {
    let mut a = *alpha;
    let x_degenerate = a.x.abs() <= 2.0 * uncertainty_xy.0;
    if x_degenerate {
        a.x = 0.0;
    }
    let y_degenerate = a.y.abs() <= 2.0 * uncertainty_xy.1;
    if y_degenerate {
        a.y = 0.0;
    }
    if a.norm() < 1e-12 {
        return Err(MitigationError::NoCorrectionPossible);
    }
    // -atan2 covers the degenerate rules as limits: theta1 = -pi/2 when
    // alpha_x is zeroed (and alpha_y > 0), 0 when alpha_y is zeroed
    // (and alpha_x > 0), and picks the mirrored angles for negative
    // components so the projection always lands on +x
    let theta1 = -a.y.atan2(a.x);
    let theta2 = (a.z / a.norm()).asin() - FRAC_PI_2;
    Ok(CorrectionPulse { theta1, theta2, x_degenerate, y_degenerate, target: a })
}

/// Standard-vs-QSPAM bias bounds on the mitigated-estimate difference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasBounds {
    /// Small-SPAM-error bound; absent when the weak condition fails.
    pub weak: Option<f64>,
    /// Sign-maximized product-sum bound, valid without the small-error
    /// assumption.
    pub general: f64,
}

/// Bounds on |<O>_B - <O>_A| from per-qubit SPAM parameters, the observed
/// outcome count |P|, and the per-qubit marginal ground-state probabilities.
pub fn bias_bound(params: &[SpamParams], support_size: usize, pi0: &[f64]) -> BiasBounds {
    assert_eq!(params.len(), pi0.len());
    let t_a: Vec<f64> = params
        .iter()
        .zip(pi0)
        .map(|(p, q0)| (1.0 - 2.0 * q0 + p.delta) / (2.0 * p.alpha_m))
        .collect();
    let t_b: Vec<f64> = params
        .iter()
        .zip(pi0)
        .map(|(p, q0)| (1.0 - 2.0 * q0 + p.delta) / (2.0 * p.alpha_m * p.alpha_sp_z))
        .collect();
    let sp_factor: Vec<f64> = params
        .iter()
        .map(|p| (1.0 / p.alpha_sp_z - 1.0).abs())
        .collect();

    let weak_ok = t_a.iter().all(|t| t.abs() <= 0.5 + tol::BOUND);
    let weak = weak_ok.then(|| {
        support_size as f64
            * sp_factor
                .iter()
                .zip(&t_a)
                .map(|(s, t)| s * t.abs())
                .sum::<f64>()
    });

    let n = params.len();
    let mut general = 0.0;
    for k in 0..n {
        let mut term = sp_factor[k] * t_a[k].abs();
        for j in 0..k {
            term *= 0.5 + t_b[j].abs();
        }
        for j in (k + 1)..n {
            term *= 0.5 + t_a[j].abs();
        }
        general += term;
    }
    BiasBounds { weak, general: support_size as f64 * general }
}

/// Side-by-side raw / A-mitigated / B-mitigated estimates from one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub raw: f64,
    pub raw_sigma: f64,
    pub qspam_a: f64,
    pub qspam_a_sigma: f64,
    pub standard_b: f64,
    pub standard_b_sigma: f64,
    pub difference: f64,
    pub bounds: BiasBounds,
    /// Set when an estimate leaves the physical eigenvalue range [-1, 1].
    pub a_nonphysical: bool,
    pub b_nonphysical: bool,
    /// A-corrected single-qubit ground-state marginals (diagnostic).
    pub corrected_marginals: Vec<f64>,
}

/// Raw expectation of a diagonal observable over observed frequencies.
pub fn raw_expectation(h: &ReadoutHistogram, observable: Observable) -> (f64, f64) {
    let n = h.num_bits();
    let nu = h.nu() as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for (key, count) in h.counts() {
        let freq = *count as f64 / nu;
        let o = observable(bits_of(key), n);
        value += o * freq;
        var += o * o * freq * (1.0 - freq) / nu;
    }
    (value, var.sqrt())
}

pub fn compare_standard_vs_qspam(
    h: &ReadoutHistogram,
    params: &[SpamParams],
    observable: Observable,
) -> Result<ComparisonReport, MitigationError> {
    let n = h.num_bits();
    if params.len() != n {
        return Err(MitigationError::QubitCountMismatch { histogram: n, confusion: params.len() });
    }
    let conf_a = build_confusion(params, Provenance::QspamA);
    let conf_b = build_confusion(params, Provenance::StandardB);
    let (raw, raw_sigma) = raw_expectation(h, observable);
    let (a, a_sigma) = mitigated_expectation(h, &conf_a, observable)?;
    let (b, b_sigma) = mitigated_expectation(h, &conf_b, observable)?;

    let pi0: Vec<f64> = (0..n)
        .map(|q| {
            h.counts()
                .iter()
                .filter(|(k, _)| k.as_bytes()[q] == b'0')
                .map(|(_, c)| *c as f64)
                .sum::<f64>()
                / h.nu() as f64
        })
        .collect();
    // The bound must hold for arbitrarily correlated readouts, where the
    // per-qubit factorization is conditional on each observed string; the
    // worst case over an observed bit is Pi_0 in {0, 1}, whichever
    // maximizes |1 - 2 Pi_0 + delta|.
    let pi0_worst: Vec<f64> = params
        .iter()
        .map(|p| if p.delta >= 0.0 { 0.0 } else { 1.0 })
        .collect();
    let bounds = bias_bound(params, h.counts().len(), &pi0_worst);
    let inv_a = conf_a.inverses()?;
    let corrected_marginals = pi0
        .iter()
        .enumerate()
        .map(|(q, p0)| inv_a[q][0][0] * p0 + inv_a[q][0][1] * (1.0 - p0))
        .collect();
    Ok(ComparisonReport {
        raw,
        raw_sigma,
        qspam_a: a,
        qspam_a_sigma: a_sigma,
        standard_b: b,
        standard_b_sigma: b_sigma,
        difference: b - a,
        bounds,
        a_nonphysical: a.abs() > 1.0,
        b_nonphysical: b.abs() > 1.0,
        corrected_marginals,
    })
}
