//! Reproducible experiment campaigns: each command consumes one JSON config
//! and emits a report (JSON plus CSV plot series) whose bytes depend only on
//! the config and seed.

use qspam_core::estimator::{
    observations_from_histograms, solve_qspam, solve_sqspam_closed_form, EstimateResult,
};
use qspam_core::mitigation::{
    build_confusion, compile_sp_correction, mitigate_histogram, mitigated_expectation,
    raw_expectation, compare_standard_vs_qspam, z_parity, BiasBounds, CorrectionPulse,
    Provenance,
};
use qspam_core::sim::{
    run_ghz, run_qspam_circuits, NoiseConfig, ReadoutHistogram, SpCorrection,
};
use qspam_core::spam_model::{rotated_sp_params, Experiment, SpamParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("config error: {0}")]
    Config(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CampaignError {
    /// Process exit code: 2 config, 3 estimation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CampaignError::Config(_) => 2,
            CampaignError::Estimation(_) => 3,
            CampaignError::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "characterize")]
    Characterize,
    #[serde(rename = "validate-injection")]
    ValidateInjection,
    #[serde(rename = "ghz-compare")]
    GhzCompare,
    #[serde(rename = "mitigate")]
    Mitigate,
}

/// Estimator used by the characterization pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    /// Five-experiment closed form (diagonal measurement model).
    #[serde(rename = "sqspam")]
    Sqspam,
    /// Eight-experiment least-squares fit including epsilon.
    #[serde(rename = "qspam")]
    #[default]
    Qspam,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GateNoise {
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    #[serde(default)]
    pub gamma: f64,
}

/// One campaign, fully described: the report embeds this resolved document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Optional; must agree with the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub nu: u64,
    pub seed: u64,
    /// Ground-truth per-qubit parameters for simulated campaigns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spam: Option<Vec<SpamParams>>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub estimate_phi_pp: bool,
    /// Injected Rx angles for validate-injection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_grid: Option<Vec<f64>>,
    /// GHZ sizes for ghz-compare.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub noise: GateNoise,
    /// Per-qubit Rx angles applied to the GHZ initial states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injections: Option<Vec<f64>>,
    /// Pre-recorded characterization histograms (JSON: one map of
    /// experiment -> histogram per qubit) instead of simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histograms_file: Option<PathBuf>,
    /// Histogram to correct (mitigate mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_file: Option<PathBuf>,
    /// Per-qubit parameters file (mitigate mode alternative to `spam`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl CampaignConfig {
    pub fn from_file(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: CampaignConfig = serde_json::from_str(&text)
            .map_err(|e| CampaignError::Config(format!("{}: {e}", path.display())))?;
        if cfg.nu == 0 {
            return Err(CampaignError::Config("nu must be at least 1".into()));
        }
        Ok(cfg)
    }

    fn truth(&self) -> Result<&[SpamParams], CampaignError> {
        self.spam
            .as_deref()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CampaignError::Config("per-qubit `spam` parameters required".into()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub mode: Mode,
    pub seed: u64,
    pub config: CampaignConfig,
}

/// Per-qubit characterization outcome; failures are carried, not fatal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitOutcome {
    pub qubit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionPoint {
    pub phi: f64,
    pub alpha_m: f64,
    pub alpha_m_ci95: f64,
    pub alpha_sp_z: f64,
    pub alpha_sp_z_ci95: f64,
}

/// Fig.-2-style summary: constancy of alpha_M across the grid and the
/// cosine response of alpha_SP^z.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionSummary {
    pub points: Vec<InjectionPoint>,
    pub alpha_m_mean: f64,
    /// Points whose alpha_M lies within its own 95% CI of the grid mean.
    pub alpha_m_within_band: usize,
    /// Least-squares a cos(phi) + b sin(phi) fit of alpha_SP^z.
    pub cosine_a: f64,
    pub cosine_b: f64,
    pub cosine_rms_residual: f64,
    pub mean_alpha_sp_z_ci95: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhzRow {
    pub n: usize,
    pub raw: f64,
    pub raw_sigma: f64,
    /// Corrective pulses only, no confusion inversion.
    pub sp_only: f64,
    pub sp_only_sigma: f64,
    /// A-inversion on the uncorrected histogram. The sigma fields of the
    /// mitigated estimates combine shot noise with the characterization
    /// uncertainty propagated through the confusion matrices.
    pub m_only: f64,
    pub m_only_sigma: f64,
    /// Pulses plus A-inversion.
    pub qspam_a: f64,
    pub qspam_a_sigma: f64,
    /// B-inversion on the uncorrected histogram (standard practice).
    pub standard_b: f64,
    pub standard_b_sigma: f64,
    /// standard_b - m_only: the same-dataset confusion-model bias.
    pub difference: f64,
    pub bounds: BiasBounds,
    pub a_nonphysical: bool,
    pub b_nonphysical: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiEntry {
    pub bitstring: String,
    pub value: f64,
    pub negative: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigateOutput {
    pub entries: Vec<QuasiEntry>,
    pub sum: f64,
    pub parity: f64,
    pub parity_sigma: f64,
    pub raw_parity: f64,
    pub raw_parity_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignReport {
    pub manifest: Manifest,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qubits: Vec<QubitOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ghz: Vec<GhzRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigateOutput>,
    /// Plot data, one CSV per entry: rows of (x, y, yerr).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Vec<[f64; 3]>>,
}

impl CampaignReport {
    fn new(mode: Mode, config: &CampaignConfig) -> Self {
        CampaignReport {
            manifest: Manifest {
                version: VERSION.to_string(),
                mode,
                seed: config.seed,
                config: config.clone(),
            },
            qubits: Vec::new(),
            injection: None,
            ghz: Vec::new(),
            mitigation: None,
            series: BTreeMap::new(),
        }
    }

    /// Write `report.json` and one `<series>.csv` per plot series.
    pub fn write(&self, out_dir: &Path) -> Result<(), CampaignError> {
        std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let json_path = out_dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)
            .expect("report serialization cannot fail");
        text.push('\n');
        std::fs::write(&json_path, text).map_err(io_err(&json_path))?;
        for (name, rows) in &self.series {
            let path = out_dir.join(format!("{name}.csv"));
            let mut csv = String::from("x,y,yerr\n");
            for [x, y, e] in rows {
                csv.push_str(&format!("{x},{y},{e}\n"));
            }
            std::fs::write(&path, csv).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn solve_one(
    histograms: &BTreeMap<Experiment, ReadoutHistogram>,
    method: Method,
    estimate_phi_pp: bool,
) -> Result<EstimateResult, String> {
    let obs = observations_from_histograms(histograms).map_err(|e| e.to_string())?;
    match method {
        Method::Sqspam => solve_sqspam_closed_form(&obs).map_err(|e| e.to_string()),
        Method::Qspam => solve_qspam(&obs, estimate_phi_pp).map_err(|e| e.to_string()),
    }
}

fn characterization_histograms(
    config: &CampaignConfig,
    injected_rx: f64,
    seed: u64,
) -> Result<Vec<BTreeMap<Experiment, ReadoutHistogram>>, CampaignError> {
    if let Some(path) = &config.histograms_file {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        return serde_json::from_str(&text)
            .map_err(|e| CampaignError::Config(format!("{}: {e}", path.display())));
    }
    run_qspam_circuits(config.truth()?, injected_rx, config.nu, seed)
        .map_err(|e| CampaignError::Config(e.to_string()))
}

/// Characterize every qubit from the eight circuits; per-qubit estimation
/// failures are reported in place and only a full wipe-out is fatal.
pub fn cmd_characterize(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let histograms = characterization_histograms(config, 0.0, config.seed)?;
    let mut report = CampaignReport::new(Mode::Characterize, config);
    let mut alpha_m_series = Vec::new();
    let mut any_ok = false;
    for (q, h) in histograms.iter().enumerate() {
        match solve_one(h, config.method, config.estimate_phi_pp) {
            Ok(est) => {
                any_ok = true;
                alpha_m_series.push([q as f64, est.params.alpha_m, est.ci95["alpha_m"]]);
                report.qubits.push(QubitOutcome { qubit: q, estimate: Some(est), error: None });
            }
            Err(e) => {
                report.qubits.push(QubitOutcome { qubit: q, estimate: None, error: Some(e) });
            }
        }
    }
    if !any_ok {
        return Err(CampaignError::Estimation(
            "estimation failed on every qubit".into(),
        ));
    }
    report.series.insert("alpha_m_per_qubit".into(), alpha_m_series);
    Ok(report)
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Characterization contribution to a mitigated estimate's error bar:
/// shift each qubit's (alpha_m, delta, alpha_sp_z) by one standard error,
/// recompute the estimate, and combine the shifts in quadrature.
fn characterization_sigma(
    h: &ReadoutHistogram,
    params: &[SpamParams],
    estimates: &[EstimateResult],
    mode: Provenance,
    base: f64,
) -> Result<f64, CampaignError> {
    let mut acc = 0.0;
    for q in 0..params.len() {
        for name in ["alpha_m", "delta", "alpha_sp_z"] {
            let s = estimates[q].sigma(name).unwrap_or(0.0);
            if s == 0.0 {
                continue;
            }
            let mut shifted = params.to_vec();
            match name {
                "alpha_m" => shifted[q].alpha_m += s,
                "delta" => shifted[q].delta += s,
                _ => shifted[q].alpha_sp_z += s,
            }
            let conf = build_confusion(&shifted, mode);
            let (v, _) = mitigated_expectation(h, &conf, &z_parity)
                .map_err(|e| CampaignError::Config(e.to_string()))?;
            acc += (v - base) * (v - base);
        }
    }
    Ok(acc.sqrt())
}

/// Sweep the injected Rx angle: alpha_M must stay constant while
/// alpha_SP^z follows a cosine.
pub fn cmd_validate_injection(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let grid = config
        .phi_grid
        .as_deref()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CampaignError::Config("non-empty `phi_grid` required".into()))?;
    let mut report = CampaignReport::new(Mode::ValidateInjection, config);
    let mut points = Vec::new();
    for (i, &phi) in grid.iter().enumerate() {
        let histograms = characterization_histograms(config, phi, point_seed(config.seed, i))?;
        let est = solve_one(&histograms[0], config.method, config.estimate_phi_pp)
            .map_err(CampaignError::Estimation)?;
        points.push(InjectionPoint {
            phi,
            alpha_m: est.params.alpha_m,
            alpha_m_ci95: est.ci95["alpha_m"],
            alpha_sp_z: est.params.alpha_sp_z,
            alpha_sp_z_ci95: est.ci95["alpha_sp_z"],
        });
    }
    let n = points.len() as f64;
    let alpha_m_mean = points.iter().map(|p| p.alpha_m).sum::<f64>() / n;
    let alpha_m_within_band = points
        .iter()
        .filter(|p| (p.alpha_m - alpha_m_mean).abs() <= p.alpha_m_ci95)
        .count();
    // linear least squares for z(phi) = a cos(phi) + b sin(phi)
    let (mut scc, mut sss, mut scs, mut scz, mut ssz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &points {
        let (c, s) = (p.phi.cos(), p.phi.sin());
        scc += c * c;
        sss += s * s;
        scs += c * s;
        scz += c * p.alpha_sp_z;
        ssz += s * p.alpha_sp_z;
    }
    let det = scc * sss - scs * scs;
    let (a, b) = if det.abs() > 1e-12 {
        ((scz * sss - ssz * scs) / det, (ssz * scc - scz * scs) / det)
    } else {
        // degenerate grid (e.g. single point): pure cosine amplitude
        (scz / scc, 0.0)
    };
    let rms = (points
        .iter()
        .map(|p| (p.alpha_sp_z - a * p.phi.cos() - b * p.phi.sin()).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let mean_ci = points.iter().map(|p| p.alpha_sp_z_ci95).sum::<f64>() / n;
    report.series.insert(
        "alpha_m_vs_phi".into(),
        points.iter().map(|p| [p.phi, p.alpha_m, p.alpha_m_ci95]).collect(),
    );
    report.series.insert(
        "alpha_sp_z_vs_phi".into(),
        points
            .iter()
            .map(|p| [p.phi, p.alpha_sp_z, p.alpha_sp_z_ci95])
            .collect(),
    );
    report.injection = Some(InjectionSummary {
        points,
        alpha_m_mean,
        alpha_m_within_band,
        cosine_a: a,
        cosine_b: b,
        cosine_rms_residual: rms,
        mean_alpha_sp_z_ci95: mean_ci,
    });
    Ok(report)
}

/// Characterize once, then for each N prepare a noisy GHZ state and compare
/// every mitigation strategy on the same shots.
pub fn cmd_ghz_compare(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let n_list = config
        .n_list
        .as_deref()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| CampaignError::Config("non-empty `n_list` required".into()))?;
    let truth = config.truth()?;
    let max_n = *n_list.iter().max().expect("non-empty");
    for &n in n_list {
        if n < 2 || n % 2 != 0 || n > 12 {
            return Err(CampaignError::Config(format!(
                "GHZ size {n} not an even number in [2, 12]"
            )));
        }
    }
    if truth.len() < max_n {
        return Err(CampaignError::Config(format!(
            "{} SPAM parameter sets for GHZ size {max_n}",
            truth.len()
        )));
    }
    let injections: Vec<f64> = match &config.injections {
        Some(v) if v.len() >= max_n => v.clone(),
        Some(v) => {
            return Err(CampaignError::Config(format!(
                "{} injection angles for GHZ size {max_n}",
                v.len()
            )))
        }
        None => vec![0.0; max_n],
    };

    // one characterization pass for all N
    let histograms = characterization_histograms(config, 0.0, config.seed)?;
    let mut report = CampaignReport::new(Mode::GhzCompare, config);
    let mut estimates = Vec::with_capacity(truth.len());
    for (q, h) in histograms.iter().enumerate() {
        let est = solve_one(h, config.method, config.estimate_phi_pp)
            .map_err(CampaignError::Estimation)?;
        estimates.push(est.clone());
        report.qubits.push(QubitOutcome { qubit: q, estimate: Some(est), error: None });
    }

    let mut diff_series = Vec::new();
    for &n in n_list {
        let noise = NoiseConfig {
            spam: truth[..n].to_vec(),
            p1: config.noise.p1,
            p2: config.noise.p2,
            gamma: config.noise.gamma,
            seed: point_seed(config.seed, n),
        };
        let inj = &injections[..n];
        let h_raw = run_ghz(&noise, n, inj, &SpCorrection::Off, config.nu)
            .map_err(|e| CampaignError::Config(e.to_string()))?;
        // pulses target the estimated faulty state, rotated by the
        // injection actually applied on each qubit
        let pulses: Vec<CorrectionPulse> = estimates[..n]
            .iter()
            .zip(inj)
            .map(|(est, &phi)| {
                let alpha = rotated_sp_params(&est.params.alpha_sp(), phi);
                let unc = (
                    est.sigma("alpha_sp_x").unwrap_or(0.0),
                    est.sigma("alpha_sp_y").unwrap_or(0.0),
                );
                compile_sp_correction(&alpha, unc)
                    .map_err(|e| CampaignError::Estimation(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let h_corr = run_ghz(&noise, n, inj, &SpCorrection::Pulses(&pulses), config.nu)
            .map_err(|e| CampaignError::Config(e.to_string()))?;

        let est_params: Vec<SpamParams> = estimates[..n].iter().map(|e| e.params).collect();
        let cmp = compare_standard_vs_qspam(&h_raw, &est_params, &z_parity)
            .map_err(|e| CampaignError::Config(e.to_string()))?;
        let (sp_only, sp_only_sigma) = raw_expectation(&h_corr, &z_parity);
        let conf_a = build_confusion(&est_params, Provenance::QspamA);
        let (qspam_a, qspam_a_shot) =
            mitigated_expectation(&h_corr, &conf_a, &z_parity)
                .map_err(|e| CampaignError::Config(e.to_string()))?;

        let ests = &estimates[..n];
        let m_only_sigma = cmp.qspam_a_sigma.hypot(characterization_sigma(
            &h_raw, &est_params, ests, Provenance::QspamA, cmp.qspam_a,
        )?);
        let standard_b_sigma = cmp.standard_b_sigma.hypot(characterization_sigma(
            &h_raw, &est_params, ests, Provenance::StandardB, cmp.standard_b,
        )?);
        let qspam_a_sigma = qspam_a_shot.hypot(characterization_sigma(
            &h_corr, &est_params, ests, Provenance::QspamA, qspam_a,
        )?);

        diff_series.push([n as f64, cmp.difference, m_only_sigma + standard_b_sigma]);
        report.ghz.push(GhzRow {
            n,
            raw: cmp.raw,
            raw_sigma: cmp.raw_sigma,
            sp_only,
            sp_only_sigma,
            m_only: cmp.qspam_a,
            m_only_sigma,
            qspam_a,
            qspam_a_sigma,
            standard_b: cmp.standard_b,
            standard_b_sigma,
            difference: cmp.difference,
            bounds: cmp.bounds,
            a_nonphysical: cmp.a_nonphysical,
            b_nonphysical: cmp.b_nonphysical,
        });
    }
    report.series.insert("b_minus_a_vs_n".into(), diff_series);
    report.series.insert(
        "standard_b_vs_n".into(),
        report
            .ghz
            .iter()
            .map(|r| [r.n as f64, r.standard_b, r.standard_b_sigma])
            .collect(),
    );
    report.series.insert(
        "qspam_a_vs_n".into(),
        report
            .ghz
            .iter()
            .map(|r| [r.n as f64, r.m_only, r.m_only_sigma])
            .collect(),
    );
    Ok(report)
}

/// Correct a recorded histogram with confusion matrices built from given
/// parameters; emits the quasi-distribution and the mitigated parity.
pub fn cmd_mitigate(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let hist_path = config
        .histogram_file
        .as_deref()
        .ok_or_else(|| CampaignError::Config("`histogram_file` required".into()))?;
    let text = std::fs::read_to_string(hist_path).map_err(io_err(hist_path))?;
    let histogram: ReadoutHistogram = serde_json::from_str(&text)
        .map_err(|e| CampaignError::Config(format!("{}: {e}", hist_path.display())))?;
    let params: Vec<SpamParams> = match (&config.params_file, &config.spam) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text)
                .map_err(|e| CampaignError::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(spam)) => spam.clone(),
        (None, None) => {
            return Err(CampaignError::Config(
                "either `params_file` or `spam` required".into(),
            ))
        }
    };
    if params.len() != histogram.num_bits() {
        return Err(CampaignError::Config(format!(
            "{} parameter sets for a {}-bit histogram",
            params.len(),
            histogram.num_bits()
        )));
    }
    let conf = build_confusion(&params, Provenance::QspamA);
    let quasi = mitigate_histogram(&histogram, &conf)
        .map_err(|e| CampaignError::Config(e.to_string()))?;
    let (parity, parity_sigma) =
        qspam_core::mitigation::mitigated_expectation(&histogram, &conf, &z_parity)
            .map_err(|e| CampaignError::Config(e.to_string()))?;
    let (raw_parity, raw_parity_sigma) = raw_expectation(&histogram, &z_parity);
    let mut report = CampaignReport::new(Mode::Mitigate, config);
    report.mitigation = Some(MitigateOutput {
        sum: quasi.sum(),
        entries: quasi
            .entries
            .iter()
            .map(|(k, v)| QuasiEntry { bitstring: k.clone(), value: *v, negative: *v < 0.0 })
            .collect(),
        parity,
        parity_sigma,
        raw_parity,
        raw_parity_sigma,
    });
    Ok(report)
}

/// Dispatch by mode after checking it against the config document.
pub fn run(mode: Mode, config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    if let Some(declared) = config.mode {
        if declared != mode {
            return Err(CampaignError::Config(format!(
                "config declares mode {declared:?} but the {mode:?} subcommand was invoked"
            )));
        }
    }
    match mode {
        Mode::Characterize => cmd_characterize(config),
        Mode::ValidateInjection => cmd_validate_injection(config),
        Mode::GhzCompare => cmd_ghz_compare(config),
        Mode::Mitigate => cmd_mitigate(config),
    }
}
