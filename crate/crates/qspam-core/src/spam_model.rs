//! SPAM parameter set, Kraus/POVM construction, and the forward probability
//! model for the standard, sQSPAM, QSPAM, and faulty-gate protocols.
//!
//! Every closed-form probability here is cross-checked against the explicit
//! density-matrix pipeline (`circuit_probability`), which is also the
//! implementation of record whenever the measurement operators are
//! non-diagonal: the published closed form for the eps != 0 double-measurement
//! probability is inconsistent with its own eps -> 0 limit, so the Kraus
//! algebra is treated as ground truth.

use crate::qcore::{
    density_from_bloch, tol, BlochVector, Gate, Mat2, QcoreError, C,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid SPAM parameters: {reason}")]
    InvalidParams { reason: String },
    #[error("model variant requires {requirement}")]
    WrongModelVariant { requirement: String },
    #[error("outcome has probability {prob:.3e}; post-measurement state undefined")]
    ImpossibleOutcome { prob: f64 },
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// Labels for the eight QSPAM experiments (the first five form sQSPAM, the
/// first four plus the two theta=0 doubles form the faulty-gate set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    /// Prepare z+, read z-.
    #[serde(rename = "zp_to_zm")]
    ZpToZm,
    /// Prepare z- (X gate), read z+.
    #[serde(rename = "zm_to_zp")]
    ZmToZp,
    /// Prepare x+ (H gate), read z-.
    #[serde(rename = "xp_to_zm")]
    XpToZm,
    /// Prepare y+ (SX gate), read z-.
    #[serde(rename = "yp_to_zm")]
    YpToZm,
    /// Prepare z+, Rz(0), read z+ twice (second conditional on first).
    #[serde(rename = "zp_keep_theta0")]
    ZpKeepTheta0,
    /// Prepare z+, Rz(pi), read z+ twice.
    #[serde(rename = "zp_keep_thetapi")]
    ZpKeepThetaPi,
    /// Prepare z-, Rz(0), read z+ twice.
    #[serde(rename = "zm_keep_theta0")]
    ZmKeepTheta0,
    /// Prepare z-, Rz(pi), read z+ twice.
    #[serde(rename = "zm_keep_thetapi")]
    ZmKeepThetaPi,
}

impl Experiment {
    pub const QSPAM: [Experiment; 8] = [
        Experiment::ZpToZm,
        Experiment::ZmToZp,
        Experiment::XpToZm,
        Experiment::YpToZm,
        Experiment::ZpKeepTheta0,
        Experiment::ZpKeepThetaPi,
        Experiment::ZmKeepTheta0,
        Experiment::ZmKeepThetaPi,
    ];
    pub const SQSPAM: [Experiment; 5] = [
        Experiment::ZpToZm,
        Experiment::ZmToZp,
        Experiment::XpToZm,
        Experiment::YpToZm,
        Experiment::ZpKeepTheta0,
    ];
    pub const FAULTY_GATE: [Experiment; 6] = [
        Experiment::ZpToZm,
        Experiment::ZmToZp,
        Experiment::XpToZm,
        Experiment::YpToZm,
        Experiment::ZpKeepTheta0,
        Experiment::ZmKeepTheta0,
    ];

    /// State-preparation gate of the circuit, if any.
    pub fn prep_gate(&self) -> Option<Gate> {
        match self {
            Experiment::ZpToZm | Experiment::ZpKeepTheta0 | Experiment::ZpKeepThetaPi => None,
            Experiment::ZmToZp | Experiment::ZmKeepTheta0 | Experiment::ZmKeepThetaPi => {
                Some(Gate::X)
            }
            Experiment::XpToZm => Some(Gate::H),
            Experiment::YpToZm => Some(Gate::Sx),
        }
    }

    /// Pre-measurement Rz angle (only nonzero for the theta=pi doubles).
    pub fn rz_angle(&self) -> f64 {
        match self {
            Experiment::ZpKeepThetaPi | Experiment::ZmKeepThetaPi => PI,
            _ => 0.0,
        }
    }

    pub fn is_double(&self) -> bool {
        matches!(
            self,
            Experiment::ZpKeepTheta0
                | Experiment::ZpKeepThetaPi
                | Experiment::ZmKeepTheta0
                | Experiment::ZmKeepThetaPi
        )
    }

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::ZpToZm => "zp_to_zm",
            Experiment::ZmToZp => "zm_to_zp",
            Experiment::XpToZm => "xp_to_zm",
            Experiment::YpToZm => "yp_to_zm",
            Experiment::ZpKeepTheta0 => "zp_keep_theta0",
            Experiment::ZpKeepThetaPi => "zp_keep_thetapi",
            Experiment::ZmKeepTheta0 => "zm_keep_theta0",
            Experiment::ZmKeepThetaPi => "zm_keep_thetapi",
        }
    }
}

/// Named map experiment -> probability.
pub type ProbabilitySet = BTreeMap<Experiment, f64>;

fn default_zero() -> f64 {
    0.0
}

/// The estimable SPAM parameter set.
///
/// `alpha_m` is the readout fidelity, `delta` the ground/excited readout
/// asymmetry, `alpha_sp_*` the Bloch vector of the faulty fiducial state,
/// `epsilon` the squared-off-diagonal-to-diagonal ratio of the z+ Kraus
/// operator, and the `phi_*` fields its phases (not needed to reconstruct
/// POVMs; default 0 and excluded from estimation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpamParams {
    pub alpha_m: f64,
    pub delta: f64,
    pub alpha_sp_x: f64,
    pub alpha_sp_y: f64,
    pub alpha_sp_z: f64,
    #[serde(default = "default_zero")]
    pub epsilon: f64,
    #[serde(default = "default_zero")]
    pub phi_pp: f64,
    #[serde(default = "default_zero")]
    pub phi_plus: f64,
    #[serde(default = "default_zero")]
    pub phi_minus: f64,
}

impl SpamParams {
    pub fn ideal() -> Self {
        Self {
            alpha_m: 1.0,
            delta: 0.0,
            alpha_sp_x: 0.0,
            alpha_sp_y: 0.0,
            alpha_sp_z: 1.0,
            epsilon: 0.0,
            phi_pp: 0.0,
            phi_plus: 0.0,
            phi_minus: 0.0,
        }
    }

    pub fn diagonal(alpha_m: f64, delta: f64, alpha_sp: BlochVector) -> Self {
        Self {
            alpha_m,
            delta,
            alpha_sp_x: alpha_sp.x,
            alpha_sp_y: alpha_sp.y,
            alpha_sp_z: alpha_sp.z,
            ..Self::ideal()
        }
    }

    pub fn alpha_sp(&self) -> BlochVector {
        BlochVector { x: self.alpha_sp_x, y: self.alpha_sp_y, z: self.alpha_sp_z }
    }

    /// Faulty fiducial state rho = (1 + alpha . sigma) / 2.
    pub fn fiducial_state(&self) -> Mat2 {
        density_from_bloch(&self.alpha_sp())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let t = tol::BOUND;
        let fail = |reason: String| Err(ModelError::InvalidParams { reason });
        let fields = [
            self.alpha_m,
            self.delta,
            self.alpha_sp_x,
            self.alpha_sp_y,
            self.alpha_sp_z,
            self.epsilon,
            self.phi_pp,
            self.phi_plus,
            self.phi_minus,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return fail("non-finite field".into());
        }
        if !(-t..=1.0 + t).contains(&self.alpha_m) {
            return fail(format!("alpha_m = {} outside [0, 1]", self.alpha_m));
        }
        if self.delta < self.alpha_m - 1.0 - t || self.delta > 1.0 - self.alpha_m + t {
            return fail(format!(
                "delta = {} outside [alpha_m - 1, 1 - alpha_m] = [{}, {}]",
                self.delta,
                self.alpha_m - 1.0,
                1.0 - self.alpha_m
            ));
        }
        if self.alpha_sp_z <= 0.0 || self.alpha_sp_z > 1.0 + t {
            return fail(format!("alpha_sp_z = {} outside (0, 1]", self.alpha_sp_z));
        }
        if self.alpha_sp_x.abs() >= 1.0 || self.alpha_sp_y.abs() >= 1.0 {
            return fail("alpha_sp_x/y outside (-1, 1)".into());
        }
        let norm2 = self.alpha_sp_x.powi(2) + self.alpha_sp_y.powi(2) + self.alpha_sp_z.powi(2);
        if norm2 > 1.0 + t {
            return fail(format!("|alpha_sp|^2 = {norm2} exceeds 1"));
        }
        if self.epsilon < -t {
            return fail(format!("epsilon = {} negative", self.epsilon));
        }
        // |M+_{z-z+}|^2 <= 1 - |M+_{z+z+}|^2
        let a2 = (1.0 + self.alpha_m + self.delta) / (2.0 * (1.0 + self.epsilon));
        if self.epsilon * a2 > 1.0 - a2 + t {
            return fail(format!(
                "epsilon = {} violates off-diagonal Kraus bound",
                self.epsilon
            ));
        }
        Ok(())
    }

    /// Draw a parameter set satisfying every bound. Used by property tests
    /// and synthetic campaigns.
    pub fn random_valid<R: rand::Rng>(rng: &mut R) -> Self {
        let alpha_m: f64 = rng.gen_range(0.3..1.0);
        let delta = rng.gen_range(-(1.0 - alpha_m)..=(1.0 - alpha_m).max(f64::MIN_POSITIVE));
        let alpha_sp_z: f64 = rng.gen_range(0.2..1.0);
        let cap = (1.0 - alpha_sp_z * alpha_sp_z).sqrt() / std::f64::consts::SQRT_2;
        let lim = cap.min(0.3);
        let alpha_sp_x = rng.gen_range(-lim..=lim);
        let alpha_sp_y = rng.gen_range(-lim..=lim);
        let a2 = (1.0 + alpha_m + delta) / 2.0;
        let eps_cap = ((1.0 - a2) / a2).max(0.0).min(0.05);
        let epsilon = rng.gen_range(0.0..=eps_cap);
        let phi = |rng: &mut R| rng.gen_range(-PI..PI);
        Self {
            alpha_m,
            delta,
            alpha_sp_x,
            alpha_sp_y,
            alpha_sp_z,
            epsilon,
            phi_pp: phi(rng),
            phi_plus: phi(rng),
            phi_minus: phi(rng),
        }
    }
}

/// Faulty-rotation parameters of the Appendix-A protocol variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePrimeParams {
    pub alpha_sp_x: f64,
    pub alpha_sp_y: f64,
    pub alpha_sp_z: f64,
}

/// Kraus pair and derived POVM pair for one qubit's readout.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementModel {
    pub kraus_plus: Mat2,
    pub kraus_minus: Mat2,
    pub povm_plus: Mat2,
    pub povm_minus: Mat2,
}

impl MeasurementModel {
    pub fn kraus(&self, plus: bool) -> &Mat2 {
        if plus {
            &self.kraus_plus
        } else {
            &self.kraus_minus
        }
    }

    pub fn povm(&self, plus: bool) -> &Mat2 {
        if plus {
            &self.povm_plus
        } else {
            &self.povm_minus
        }
    }
}

/// Construct the measurement operators from the parameter set.
///
/// With `diagonal` set, epsilon must be zero and the four-parameter diagonal
/// Kraus form is used; otherwise the general form with one off-diagonal
/// element in the z+ operator. Either way the POVM diagonal is exactly
/// ((1 + alpha_m + delta)/2, (1 - alpha_m + delta)/2).
pub fn build_measurement_model(
    p: &SpamParams,
    diagonal: bool,
) -> Result<MeasurementModel, ModelError> {
    p.validate()?;
    if diagonal && p.epsilon.abs() > tol::BOUND {
        return Err(ModelError::WrongModelVariant {
            requirement: "epsilon = 0 for the diagonal Kraus form".into(),
        });
    }
    Ok(measurement_model_unchecked(p, diagonal))
}

/// Kraus construction without parameter validation; negative radicands are
/// clamped. The estimator evaluates this on trial points that may sit
/// slightly outside the physical region.
pub(crate) fn measurement_model_unchecked(p: &SpamParams, diagonal: bool) -> MeasurementModel {
    let eps = if diagonal { 0.0 } else { p.epsilon.max(0.0) };
    let a2 = ((1.0 + p.alpha_m + p.delta) / (2.0 * (1.0 + eps))).max(0.0);
    let d2 = ((1.0 - p.alpha_m + p.delta) / (2.0 * (1.0 + eps))).max(0.0);
    let c2 = eps * a2;
    let (a, d, c) = (a2.sqrt(), d2.sqrt(), c2.sqrt());
    let phase = |phi: f64| C::new(0.0, phi).exp();
    let off = if a > 0.0 {
        -phase(p.phi_pp + p.phi_plus) * (d * c / a)
    } else {
        C::new(0.0, 0.0)
    };
    let kraus_plus = Mat2::new([
        [phase(p.phi_pp) * a, off],
        [C::new(c, 0.0), phase(p.phi_plus) * d],
    ]);
    let bm2 = ((1.0 - p.alpha_m - p.delta) / 2.0).max(0.0);
    let dm2 = ((1.0 + p.alpha_m - p.delta) / 2.0).max(0.0);
    let kraus_minus = Mat2::diag(C::new(bm2.sqrt(), 0.0), phase(p.phi_minus) * dm2.sqrt());
    let povm_plus = Mat2::diag(
        C::new((1.0 + p.alpha_m + p.delta) / 2.0, 0.0),
        C::new((1.0 - p.alpha_m + p.delta) / 2.0, 0.0),
    );
    let povm_minus = Mat2::diag(C::new(bm2, 0.0), C::new(dm2, 0.0));
    MeasurementModel { kraus_plus, kraus_minus, povm_plus, povm_minus }
}

/// Pipeline probability without validation, clamped to [0, 1]; conditionals
/// on a vanishing branch return 1/2. Only meaningful as an optimization
/// surface.
pub(crate) fn circuit_probability_unchecked(
    p: &SpamParams,
    exp: Experiment,
    injected_rx: f64,
) -> f64 {
    let model = measurement_model_unchecked(p, false);
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
    if !exp.is_double() {
        let plus = matches!(exp, Experiment::ZmToZp);
        return outcome_probability(&model, &rho, plus).clamp(0.0, 1.0);
    }
    let p_first = outcome_probability(&model, &rho, true);
    if p_first <= 1e-12 {
        return 0.5;
    }
    let branch = rho.conj_by(&model.kraus_plus);
    (outcome_probability(&model, &branch, true) / p_first).clamp(0.0, 1.0)
}

fn outcome_probability(model: &MeasurementModel, rho: &Mat2, plus: bool) -> f64 {
    model.povm(plus).mul(rho).trace().re
}

/// Explicit density-matrix pipeline for one characterization circuit:
/// fiducial state, optional injected Rx, prep gate, Rz(theta), then one POVM
/// trace or the selective-Kraus conditional for double measurements. This is
/// both the simulator's probability source and the oracle the closed forms
/// are tested against.
pub fn circuit_probability(
    p: &SpamParams,
    exp: Experiment,
    injected_rx: f64,
) -> Result<f64, ModelError> {
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
    if !exp.is_double() {
        // flip experiments report the "wrong" outcome: z- for z+/x+/y+ prep,
        // z+ for z- prep
        let plus = matches!(exp, Experiment::ZmToZp);
        return Ok(outcome_probability(&model, &rho, plus));
    }
    let p_first = outcome_probability(&model, &rho, true);
    if p_first <= 1e-12 {
        return Err(ModelError::ImpossibleOutcome { prob: p_first });
    }
    let branch = rho.conj_by(&model.kraus_plus);
    Ok(outcome_probability(&model, &branch, true) / p_first)
}

/// Standard two-experiment protocol probabilities (P_{z+->z-}, P_{z-->z+}).
pub fn forward_standard(p: &SpamParams) -> Result<(f64, f64), ModelError> {
    p.validate()?;
    let m = p.alpha_m * p.alpha_sp_z;
    Ok(((1.0 - m - p.delta) / 2.0, (1.0 - m + p.delta) / 2.0))
}

/// Five-experiment sQSPAM closed forms; requires diagonal M (epsilon = 0).
pub fn forward_sqspam(p: &SpamParams) -> Result<ProbabilitySet, ModelError> {
    p.validate()?;
    if p.epsilon.abs() > tol::BOUND {
        return Err(ModelError::WrongModelVariant {
            requirement: "epsilon = 0 for sQSPAM".into(),
        });
    }
    let (am, d) = (p.alpha_m, p.delta);
    let mut out = ProbabilitySet::new();
    out.insert(Experiment::ZpToZm, (1.0 - am * p.alpha_sp_z - d) / 2.0);
    out.insert(Experiment::ZmToZp, (1.0 - am * p.alpha_sp_z + d) / 2.0);
    out.insert(Experiment::XpToZm, (1.0 - am * p.alpha_sp_x - d) / 2.0);
    out.insert(Experiment::YpToZm, (1.0 - am * p.alpha_sp_y - d) / 2.0);
    out.insert(
        Experiment::ZpKeepTheta0,
        double_keep_closed_form(am, d, p.alpha_sp_z, true),
    );
    Ok(out)
}

/// Eq. (14)-style conditional for diagonal M: prepared in z+ (plus) or z-
/// (minus, Appendix A form).
fn double_keep_closed_form(alpha_m: f64, delta: f64, alpha_z: f64, plus: bool) -> f64 {
    let s = if plus { 1.0 } else { -1.0 };
    (alpha_m * alpha_m + s * 2.0 * alpha_m * alpha_z * (1.0 + delta) + (1.0 + delta).powi(2))
        / (2.0 * (1.0 + s * alpha_m * alpha_z + delta))
}

/// All eight QSPAM probabilities, from the Kraus pipeline.
pub fn forward_qspam(p: &SpamParams) -> Result<ProbabilitySet, ModelError> {
    let mut out = ProbabilitySet::new();
    for exp in Experiment::QSPAM {
        out.insert(exp, circuit_probability(p, exp, 0.0)?);
    }
    Ok(out)
}

/// Six Appendix-A probabilities with faulty prep rotations: the primed
/// parameters describe the state actually produced by the X / H / SX gates.
pub fn forward_faulty_gate(
    p: &SpamParams,
    g: &GatePrimeParams,
) -> Result<ProbabilitySet, ModelError> {
    p.validate()?;
    if p.epsilon.abs() > tol::BOUND {
        return Err(ModelError::WrongModelVariant {
            requirement: "epsilon = 0 for the faulty-gate sQSPAM variant".into(),
        });
    }
    let (am, d) = (p.alpha_m, p.delta);
    let mut out = ProbabilitySet::new();
    out.insert(Experiment::ZpToZm, (1.0 - am * p.alpha_sp_z - d) / 2.0);
    out.insert(Experiment::ZmToZp, (1.0 - am * g.alpha_sp_z + d) / 2.0);
    out.insert(Experiment::XpToZm, (1.0 - am * g.alpha_sp_x - d) / 2.0);
    out.insert(Experiment::YpToZm, (1.0 - am * g.alpha_sp_y - d) / 2.0);
    out.insert(
        Experiment::ZpKeepTheta0,
        double_keep_closed_form(am, d, p.alpha_sp_z, true),
    );
    out.insert(
        Experiment::ZmKeepTheta0,
        double_keep_closed_form(am, d, g.alpha_sp_z, false),
    );
    Ok(out)
}

/// Bloch vector after an injected Rx(phi) on the faulty fiducial state.
pub fn rotated_sp_params(alpha_sp: &BlochVector, phi: f64) -> BlochVector {
    BlochVector {
        x: alpha_sp.x,
        y: alpha_sp.y * phi.cos() - alpha_sp.z * phi.sin(),
        z: alpha_sp.z * phi.cos() + alpha_sp.y * phi.sin(),
    }
}

/// Normalized post-measurement state M rho M^dag / Tr[Pi rho].
pub fn post_measurement_state(
    p: &SpamParams,
    rho_in: &Mat2,
    plus: bool,
) -> Result<Mat2, ModelError> {
    let model = build_measurement_model(p, false)?;
    let prob = outcome_probability(&model, rho_in, plus);
    if prob <= 1e-12 {
        return Err(ModelError::ImpossibleOutcome { prob });
    }
    Ok(rho_in.conj_by(model.kraus(plus)).scale(1.0 / prob))
}
