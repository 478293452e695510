//! Parameter recovery from measured circuit frequencies: closed forms for
//! the five-experiment protocol and its faulty-gate variant, and a
//! least-squares fit of the full eight-experiment model, all with
//! delta-method confidence intervals.

pub mod lm;

use crate::sim::{estimate_conditional, estimate_probability, ReadoutHistogram, SimError};
use crate::spam_model::{
    circuit_probability_unchecked, Experiment, GatePrimeParams, SpamParams,
};
use lm::{covariance_from_jacobian, levenberg_marquardt, LmProblem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("missing observation for experiment {0}")]
    MissingExperiment(&'static str),
    #[error("observations are incompatible with the model: {0}")]
    DegenerateData(String),
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One measured circuit probability with its sampling variance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbabilityObservation {
    pub experiment: Experiment,
    pub p_hat: f64,
    pub variance: f64,
}

/// Extract the per-experiment observations the estimators consume.
/// Flip circuits report the wrong-outcome frequency; double circuits the
/// conditional frequency of z+ given a first z+ outcome.
pub fn observations_from_histograms(
    histograms: &BTreeMap<Experiment, ReadoutHistogram>,
) -> Result<Vec<ProbabilityObservation>, EstimatorError> {
    let mut out = Vec::with_capacity(histograms.len());
    for (exp, h) in histograms {
        let (p_hat, variance) = if exp.is_double() {
            estimate_conditional(h, |k| k == "00", |k| k.starts_with('0'))?
        } else if *exp == Experiment::ZmToZp {
            estimate_probability(h, |k| k == "0")
        } else {
            estimate_probability(h, |k| k == "1")
        };
        out.push(ProbabilityObservation { experiment: *exp, p_hat, variance });
    }
    Ok(out)
}

/// A recovered parameter set with uncertainties and fit diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub params: SpamParams,
    /// Faulty-rotation parameters, present only for the faulty-gate solver.
    pub gate_prime: Option<GatePrimeParams>,
    /// Estimated parameter order for `covariance`.
    pub param_names: Vec<String>,
    /// Covariance of the estimated parameters, delta method or (J^T J)^-1.
    pub covariance: Vec<Vec<f64>>,
    /// Half-widths of the 95% confidence intervals, 1.96 sigma.
    pub ci95: BTreeMap<String, f64>,
    /// Root of the weighted sum of squared residuals (0 for exact closed
    /// forms on model-consistent data).
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Parameters that left their physical range and were clipped to it.
    pub clipped: Vec<String>,
    /// Transverse components indistinguishable from zero at the 2-sigma
    /// level; corrective-pulse compilation treats them as exact zeros.
    pub below_threshold: Vec<String>,
}

impl EstimateResult {
    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.ci95.get(name).map(|w| w / 1.96)
    }
}

fn require(
    obs: &[ProbabilityObservation],
    exp: Experiment,
) -> Result<(f64, f64), EstimatorError> {
    obs.iter()
        .find(|o| o.experiment == exp)
        .map(|o| (o.p_hat, o.variance))
        .ok_or(EstimatorError::MissingExperiment(exp.id()))
}

/// Closed-form map of the five-experiment protocol:
/// (P_{z+->z-}, P_{z-->z+}, P_x, P_y, P_{z+z+z+}) ->
/// (alpha_m, delta, alpha_x, alpha_y, alpha_z).
fn sqspam_closed_form_map(p: &[f64; 5]) -> Result<[f64; 5], EstimatorError> {
    let [p_zp, p_zm, p_x, p_y, p000] = *p;
    let delta = p_zm - p_zp;
    let m = 1.0 - p_zp - p_zm;
    let am2 = 2.0 * p000 * (1.0 + m + delta) - 2.0 * m * (1.0 + delta) - (1.0 + delta).powi(2);
    if am2 <= 0.0 {
        return Err(EstimatorError::DegenerateData(format!(
            "alpha_m^2 = {am2:.3e} from the double-measurement equation"
        )));
    }
    let alpha_m = am2.sqrt();
    Ok([
        alpha_m,
        delta,
        (1.0 - 2.0 * p_x - delta) / alpha_m,
        (1.0 - 2.0 * p_y - delta) / alpha_m,
        m / alpha_m,
    ])
}

const SQSPAM_NAMES: [&str; 5] = ["alpha_m", "delta", "alpha_sp_x", "alpha_sp_y", "alpha_sp_z"];

fn delta_method<const NP: usize, const NO: usize>(
    map: impl Fn(&[f64; NO]) -> Result<[f64; NP], EstimatorError>,
    p: &[f64; NO],
    variances: &[f64; NO],
) -> Result<DMatrix<f64>, EstimatorError> {
    let base = map(p)?;
    let mut jac = DMatrix::zeros(NP, NO);
    for j in 0..NO {
        let h = 1e-6;
        let mut pp = *p;
        pp[j] += h;
        let shifted = map(&pp)?;
        for i in 0..NP {
            jac[(i, j)] = (shifted[i] - base[i]) / h;
        }
    }
    let cov_p = DMatrix::from_fn(NO, NO, |r, c| if r == c { variances[r] } else { 0.0 });
    Ok(&jac * cov_p * jac.transpose())
}

fn finish_result(
    mut values: Vec<f64>,
    names: &[&'static str],
    cov: DMatrix<f64>,
    residual_norm: f64,
    iterations: usize,
    converged: bool,
    build: impl Fn(&[f64]) -> (SpamParams, Option<GatePrimeParams>),
) -> EstimateResult {
    let mut clipped = Vec::new();
    let mut below_threshold = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let (lo, hi) = match *name {
            "alpha_m" => (0.0, 1.0),
            "alpha_sp_z" => (f64::NEG_INFINITY, 1.0),
            "alpha_sp_x" | "alpha_sp_y" | "alpha_gp_x" | "alpha_gp_y" | "alpha_gp_z" => {
                (-1.0, 1.0)
            }
            "delta" => (-1.0, 1.0),
            "epsilon" => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        };
        if values[i] < lo || values[i] > hi {
            values[i] = values[i].clamp(lo, hi);
            clipped.push(name.to_string());
        }
        let sigma = cov[(i, i)].max(0.0).sqrt();
        if matches!(*name, "alpha_sp_x" | "alpha_sp_y" | "alpha_gp_x" | "alpha_gp_y")
            && values[i].abs() <= 2.0 * sigma
        {
            below_threshold.push(name.to_string());
        }
    }
    let ci95 = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), 1.96 * cov[(i, i)].max(0.0).sqrt()))
        .collect();
    let covariance = (0..names.len())
        .map(|r| (0..names.len()).map(|c| cov[(r, c)]).collect())
        .collect();
    let (params, gate_prime) = build(&values);
    EstimateResult {
        params,
        gate_prime,
        param_names: names.iter().map(|n| n.to_string()).collect(),
        covariance,
        ci95,
        residual_norm,
        iterations,
        converged,
        clipped,
        below_threshold,
    }
}

/// Exact closed-form solution of the five-experiment protocol (diagonal
/// measurement model, epsilon = 0).
pub fn solve_sqspam_closed_form(
    obs: &[ProbabilityObservation],
) -> Result<EstimateResult, EstimatorError> {
    let mut p = [0.0; 5];
    let mut var = [0.0; 5];
    for (i, exp) in Experiment::SQSPAM.iter().enumerate() {
        let (ph, v) = require(obs, *exp)?;
        p[i] = ph;
        var[i] = v;
    }
    let values = sqspam_closed_form_map(&p)?;
    let cov = delta_method(sqspam_closed_form_map, &p, &var)?;
    Ok(finish_result(
        values.to_vec(),
        &SQSPAM_NAMES,
        cov,
        0.0,
        0,
        true,
        |v| {
            (
                SpamParams {
                    alpha_m: v[0],
                    delta: v[1],
                    alpha_sp_x: v[2],
                    alpha_sp_y: v[3],
                    alpha_sp_z: v[4],
                    ..SpamParams::ideal()
                },
                None,
            )
        },
    ))
}

/// Closed-form map of the faulty-gate variant:
/// (P_{z+->z-}, P_{z-->z+}, P_x, P_y, P_{z+z+z+}, P_{z-z+z+}) ->
/// (alpha_m, delta, alpha_z, alpha'_x, alpha'_y, alpha'_z).
fn faulty_gate_closed_form_map(p: &[f64; 6]) -> Result<[f64; 6], EstimatorError> {
    let [p_zp, p_zm, p_x, p_y, p000, q000] = *p;
    // both double-measurement denominators are fixed by the flip
    // probabilities, which makes the system linear in (1 + delta)
    let c1 = 4.0 * p000 * (1.0 - p_zp) - 4.0 * q000 * p_zm;
    let c2 = 2.0 - 2.0 * p_zp - 2.0 * p_zm;
    if c2.abs() < 1e-12 {
        return Err(EstimatorError::DegenerateData(
            "flip probabilities sum to 1".into(),
        ));
    }
    let delta = c1 / (2.0 * c2) - 1.0;
    let u = 1.0 - 2.0 * p_zp - delta; // alpha_m alpha_z
    let v = 1.0 - 2.0 * p_zm + delta; // alpha_m alpha'_z
    let am2 = 4.0 * p000 * (1.0 - p_zp) - 2.0 * u * (1.0 + delta) - (1.0 + delta).powi(2);
    if am2 <= 0.0 {
        return Err(EstimatorError::DegenerateData(format!(
            "alpha_m^2 = {am2:.3e} from the double-measurement equation"
        )));
    }
    let alpha_m = am2.sqrt();
    Ok([
        alpha_m,
        delta,
        u / alpha_m,
        (1.0 - 2.0 * p_x - delta) / alpha_m,
        (1.0 - 2.0 * p_y - delta) / alpha_m,
        v / alpha_m,
    ])
}

const FAULTY_NAMES: [&str; 6] =
    ["alpha_m", "delta", "alpha_sp_z", "alpha_gp_x", "alpha_gp_y", "alpha_gp_z"];

/// Closed-form solution of the six-experiment faulty-gate variant, which
/// does not assume the preparation rotations are exact.
pub fn solve_faulty_gate_sqspam(
    obs: &[ProbabilityObservation],
) -> Result<EstimateResult, EstimatorError> {
    let mut p = [0.0; 6];
    let mut var = [0.0; 6];
    for (i, exp) in Experiment::FAULTY_GATE.iter().enumerate() {
        let (ph, v) = require(obs, *exp)?;
        p[i] = ph;
        var[i] = v;
    }
    let values = faulty_gate_closed_form_map(&p)?;
    let cov = delta_method(faulty_gate_closed_form_map, &p, &var)?;
    Ok(finish_result(
        values.to_vec(),
        &FAULTY_NAMES,
        cov,
        0.0,
        0,
        true,
        |v| {
            (
                SpamParams {
                    alpha_m: v[0],
                    delta: v[1],
                    alpha_sp_x: 0.0,
                    alpha_sp_y: 0.0,
                    alpha_sp_z: v[2],
                    ..SpamParams::ideal()
                },
                Some(GatePrimeParams {
                    alpha_sp_x: v[3],
                    alpha_sp_y: v[4],
                    alpha_sp_z: v[5],
                }),
            )
        },
    ))
}

const QSPAM_NAMES: [&str; 7] = [
    "alpha_m",
    "delta",
    "alpha_sp_x",
    "alpha_sp_y",
    "alpha_sp_z",
    "epsilon",
    "phi_pp",
];

fn params_from_vector(x: &[f64], estimate_phi_pp: bool) -> SpamParams {
    SpamParams {
        alpha_m: x[0],
        delta: x[1],
        alpha_sp_x: x[2],
        alpha_sp_y: x[3],
        alpha_sp_z: x[4],
        epsilon: x[5],
        phi_pp: if estimate_phi_pp { x[6] } else { 0.0 },
        ..SpamParams::ideal()
    }
}

/// Weighted least-squares fit of the full eight-experiment model,
/// recovering epsilon alongside the diagonal parameters. Multi-start
/// Levenberg-Marquardt; ties resolve toward smaller epsilon, then larger
/// alpha_z. The Kraus phases are not identifiable from the flip circuits
/// and default to zero; `estimate_phi_pp` adds phi_pp as a seventh degree
/// of freedom for the doubles.
pub fn solve_qspam(
    obs: &[ProbabilityObservation],
    estimate_phi_pp: bool,
) -> Result<EstimateResult, EstimatorError> {
    let mut p_hat = [0.0; 8];
    let mut sigma = [0.0; 8];
    for (i, exp) in Experiment::QSPAM.iter().enumerate() {
        let (ph, v) = require(obs, *exp)?;
        p_hat[i] = ph;
        sigma[i] = v.sqrt().max(1e-12);
    }
    let n = if estimate_phi_pp { 7 } else { 6 };
    let lower = [0.0, -1.0, -1.0, -1.0, 1e-6, 0.0, -PI];
    let upper = [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, PI];
    let residual = |x: &[f64], out: &mut [f64]| {
        let params = params_from_vector(x, estimate_phi_pp);
        for (i, exp) in Experiment::QSPAM.iter().enumerate() {
            let model = circuit_probability_unchecked(&params, *exp, 0.0);
            out[i] = (model - p_hat[i]) / sigma[i];
        }
    };
    let problem = LmProblem {
        residual: &residual,
        n_residuals: 8,
        lower: &lower[..n],
        upper: &upper[..n],
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    // warm start from the closed form where the data allow it
    if let Ok(cf) = solve_sqspam_closed_form(obs) {
        let p = cf.params;
        starts.push(vec![
            p.alpha_m.clamp(0.05, 1.0),
            p.delta.clamp(-0.9, 0.9),
            p.alpha_sp_x.clamp(-0.9, 0.9),
            p.alpha_sp_y.clamp(-0.9, 0.9),
            p.alpha_sp_z.clamp(0.05, 1.0),
            0.001,
            0.0,
        ]);
    }
    for am in [0.7, 0.95] {
        for dl in [-0.05, 0.05] {
            for az in [0.8, 0.99] {
                starts.push(vec![am, dl, 0.0, 0.0, az, 0.01, 0.0]);
            }
        }
    }

    let mut best: Option<(lm::LmResult, f64, f64)> = None;
    for s in &starts {
        let res = levenberg_marquardt(&problem, &s[..n]);
        let eps = res.x[5];
        let az = res.x[4];
        let better = match &best {
            None => true,
            Some((b, beps, baz)) => {
                res.cost < b.cost - 1e-9
                    || ((res.cost - b.cost).abs() <= 1e-9
                        && (eps < beps - 1e-12
                            || ((eps - beps).abs() <= 1e-12 && az > *baz)))
            }
        };
        if better {
            best = Some((res, eps, az));
        }
        // an essentially exact fit cannot be beaten by another start
        if best.as_ref().map_or(false, |(b, _, _)| b.converged && b.cost < 1e-18) {
            break;
        }
    }
    let (res, _, _) = best.expect("at least one start");
    let cov = covariance_from_jacobian(&res.jacobian)
        .ok_or(EstimatorError::SingularCovariance)?;
    let names = &QSPAM_NAMES[..n];
    Ok(finish_result(
        res.x.clone(),
        names,
        cov,
        res.cost.sqrt(),
        res.iterations,
        res.converged,
        |v| (params_from_vector(v, estimate_phi_pp), None),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spam_model::{forward_faulty_gate, forward_qspam, forward_sqspam};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Binomial, Distribution};

    fn obs_from_probs(probs: &BTreeMap<Experiment, f64>, var: f64) -> Vec<ProbabilityObservation> {
        probs
            .iter()
            .map(|(e, p)| ProbabilityObservation { experiment: *e, p_hat: *p, variance: var })
            .collect()
    }

    fn diagonal_fixture() -> SpamParams {
        SpamParams {
            alpha_m: 0.9,
            delta: 0.05,
            alpha_sp_x: 0.02,
            alpha_sp_y: 0.01,
            alpha_sp_z: 0.98,
            ..SpamParams::ideal()
        }
    }

    #[test]
    fn closed_form_round_trip_is_exact() {
        let truth = diagonal_fixture();
        let probs = forward_sqspam(&truth).unwrap();
        let est = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-8)).unwrap();
        assert_abs_diff_eq!(est.params.alpha_m, truth.alpha_m, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.delta, truth.delta, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.alpha_sp_x, truth.alpha_sp_x, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.alpha_sp_y, truth.alpha_sp_y, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.alpha_sp_z, truth.alpha_sp_z, epsilon = 1e-9);
        assert!(est.clipped.is_empty());
        assert!(est.converged);
    }

    #[test]
    fn closed_form_round_trip_many_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut truth = SpamParams::random_valid(&mut rng);
            truth.epsilon = 0.0;
            let probs = forward_sqspam(&truth).unwrap();
            let est = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-10)).unwrap();
            assert_abs_diff_eq!(est.params.alpha_m, truth.alpha_m, epsilon = 1e-8);
            assert_abs_diff_eq!(est.params.alpha_sp_z, truth.alpha_sp_z, epsilon = 1e-8);
        }
    }

    #[test]
    fn closed_form_ci_scales_with_variance() {
        let probs = forward_sqspam(&diagonal_fixture()).unwrap();
        let wide = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-4)).unwrap();
        let narrow = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-6)).unwrap();
        let ratio = wide.ci95["alpha_m"] / narrow.ci95["alpha_m"];
        assert_abs_diff_eq!(ratio, 10.0, epsilon = 0.1);
    }

    #[test]
    fn closed_form_clips_unphysical_alpha_z() {
        // frequencies implying alpha_z slightly above 1
        let obs = vec![
            ProbabilityObservation { experiment: Experiment::ZpToZm, p_hat: 0.01, variance: 1e-6 },
            ProbabilityObservation { experiment: Experiment::ZmToZp, p_hat: 0.012, variance: 1e-6 },
            ProbabilityObservation { experiment: Experiment::XpToZm, p_hat: 0.5, variance: 1e-6 },
            ProbabilityObservation { experiment: Experiment::YpToZm, p_hat: 0.5, variance: 1e-6 },
            ProbabilityObservation {
                experiment: Experiment::ZpKeepTheta0,
                p_hat: 0.985,
                variance: 1e-6,
            },
        ];
        let est = solve_sqspam_closed_form(&obs).unwrap();
        assert!(est.clipped.iter().any(|s| s == "alpha_sp_z"));
        assert_abs_diff_eq!(est.params.alpha_sp_z, 1.0);
    }

    #[test]
    fn closed_form_rejects_degenerate_double() {
        let mut probs = forward_sqspam(&diagonal_fixture()).unwrap();
        probs.insert(Experiment::ZpKeepTheta0, 0.2); // impossible conditional
        let err = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-8));
        assert!(matches!(err, Err(EstimatorError::DegenerateData(_))));
    }

    #[test]
    fn faulty_gate_round_trip() {
        let truth = SpamParams {
            alpha_m: 0.9,
            delta: 0.05,
            alpha_sp_x: 0.0,
            alpha_sp_y: 0.0,
            alpha_sp_z: 0.95,
            ..SpamParams::ideal()
        };
        let gp = GatePrimeParams { alpha_sp_x: 0.03, alpha_sp_y: -0.02, alpha_sp_z: 0.93 };
        let probs = forward_faulty_gate(&truth, &gp).unwrap();
        let est = solve_faulty_gate_sqspam(&obs_from_probs(&probs, 1e-8)).unwrap();
        assert_abs_diff_eq!(est.params.alpha_m, 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.delta, 0.05, epsilon = 1e-9);
        assert_abs_diff_eq!(est.params.alpha_sp_z, 0.95, epsilon = 1e-9);
        let g = est.gate_prime.unwrap();
        assert_abs_diff_eq!(g.alpha_sp_x, 0.03, epsilon = 1e-9);
        assert_abs_diff_eq!(g.alpha_sp_y, -0.02, epsilon = 1e-9);
        assert_abs_diff_eq!(g.alpha_sp_z, 0.93, epsilon = 1e-9);
    }

    #[test]
    fn qspam_fit_recovers_epsilon() {
        let truth = SpamParams {
            alpha_m: 0.92,
            delta: 0.03,
            alpha_sp_x: 0.04,
            alpha_sp_y: -0.02,
            alpha_sp_z: 0.96,
            epsilon: 0.01,
            ..SpamParams::ideal()
        };
        let probs = forward_qspam(&truth).unwrap();
        let est = solve_qspam(&obs_from_probs(&probs, 1e-10), false).unwrap();
        assert!(est.converged, "fit did not converge");
        assert_abs_diff_eq!(est.params.alpha_m, truth.alpha_m, epsilon = 1e-6);
        assert_abs_diff_eq!(est.params.delta, truth.delta, epsilon = 1e-6);
        assert_abs_diff_eq!(est.params.alpha_sp_x, truth.alpha_sp_x, epsilon = 1e-5);
        assert_abs_diff_eq!(est.params.alpha_sp_y, truth.alpha_sp_y, epsilon = 1e-5);
        assert_abs_diff_eq!(est.params.alpha_sp_z, truth.alpha_sp_z, epsilon = 1e-6);
        assert_abs_diff_eq!(est.params.epsilon, truth.epsilon, epsilon = 1e-5);
        assert!(est.residual_norm < 1e-4);
    }

    #[test]
    fn qspam_fit_multi_start_agrees_across_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let truth = SpamParams {
                phi_pp: 0.0,
                phi_plus: 0.0,
                phi_minus: 0.0,
                ..SpamParams::random_valid(&mut rng)
            };
            let probs = forward_qspam(&truth).unwrap();
            let est = solve_qspam(&obs_from_probs(&probs, 1e-10), false).unwrap();
            assert_abs_diff_eq!(est.params.alpha_m, truth.alpha_m, epsilon = 1e-4);
            assert_abs_diff_eq!(est.params.alpha_sp_z, truth.alpha_sp_z, epsilon = 1e-4);
            assert_abs_diff_eq!(est.params.epsilon, truth.epsilon, epsilon = 1e-3);
        }
    }

    #[test]
    fn observations_bridge_from_histograms() {
        use crate::sim::run_qspam_circuits;
        let p = diagonal_fixture();
        let runs = run_qspam_circuits(&[p], 0.0, 400_000, 3).unwrap();
        let obs = observations_from_histograms(&runs[0]).unwrap();
        assert_eq!(obs.len(), 8);
        let est = solve_sqspam_closed_form(&obs).unwrap();
        assert!((est.params.alpha_m - p.alpha_m).abs() < 4.0 * est.sigma("alpha_m").unwrap());
        assert!(
            (est.params.alpha_sp_z - p.alpha_sp_z).abs()
                < 4.0 * est.sigma("alpha_sp_z").unwrap()
        );
    }

    #[test]
    fn confidence_interval_coverage() {
        let truth = diagonal_fixture();
        let probs = forward_sqspam(&truth).unwrap();
        let nu = 20_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut covered_am = 0u32;
        let mut covered_az = 0u32;
        let reps = 1500u32;
        for _ in 0..reps {
            let mut obs = Vec::new();
            for (exp, p) in &probs {
                let (p_hat, var) = if exp.is_double() {
                    // two-stage draw: first-outcome count, then conditional
                    let p_first = (1.0 + truth.alpha_m * truth.alpha_sp_z + truth.delta) / 2.0;
                    let k0 = Binomial::new(nu, p_first).unwrap().sample(&mut rng).max(1);
                    let k00 = Binomial::new(k0, *p).unwrap().sample(&mut rng);
                    let ph = k00 as f64 / k0 as f64;
                    (ph, (ph * (1.0 - ph) / k0 as f64).max(0.25 / (k0 * k0) as f64))
                } else {
                    let k = Binomial::new(nu, *p).unwrap().sample(&mut rng);
                    let ph = k as f64 / nu as f64;
                    (ph, (ph * (1.0 - ph) / nu as f64).max(0.25 / (nu * nu) as f64))
                };
                obs.push(ProbabilityObservation { experiment: *exp, p_hat, variance: var });
            }
            let est = solve_sqspam_closed_form(&obs).unwrap();
            if (est.params.alpha_m - truth.alpha_m).abs() <= est.ci95["alpha_m"] {
                covered_am += 1;
            }
            if (est.params.alpha_sp_z - truth.alpha_sp_z).abs() <= est.ci95["alpha_sp_z"] {
                covered_az += 1;
            }
        }
        let cov_am = f64::from(covered_am) / f64::from(reps);
        let cov_az = f64::from(covered_az) / f64::from(reps);
        assert!((0.93..=0.97).contains(&cov_am), "alpha_m coverage {cov_am}");
        assert!((0.93..=0.97).contains(&cov_az), "alpha_z coverage {cov_az}");
    }

    #[test]
    fn missing_experiment_is_reported() {
        let probs = forward_sqspam(&diagonal_fixture()).unwrap();
        let mut obs = obs_from_probs(&probs, 1e-8);
        obs.retain(|o| o.experiment != Experiment::YpToZm);
        assert!(matches!(
            solve_sqspam_closed_form(&obs),
            Err(EstimatorError::MissingExperiment("yp_to_zm"))
        ));
    }

    #[test]
    fn below_threshold_flags_tiny_transverse_components() {
        let truth = SpamParams {
            alpha_sp_x: 0.0005,
            alpha_sp_y: 0.0,
            ..diagonal_fixture()
        };
        let probs = forward_sqspam(&truth).unwrap();
        let est = solve_sqspam_closed_form(&obs_from_probs(&probs, 1e-6)).unwrap();
        assert!(est.below_threshold.iter().any(|s| s == "alpha_sp_x"));
        assert!(est.below_threshold.iter().any(|s| s == "alpha_sp_y"));
    }
}
