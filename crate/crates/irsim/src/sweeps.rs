//! Declarative parameter sweeps emitting tidy CSV.
//!
//! A sweep spec names one swept axis (SNR, IRS elements, BS antennas, UE
//! count, or impairment severity), a list of axis values, and any number of
//! labelled curves that override parts of the base scenario (impairment
//! level, phase-noise model, correlation, phase optimization, perfect CSI).
//! Every (value, curve) pair is evaluated independently: the large-scale
//! statistics are rebuilt for the point, the reflection phases are optionally
//! optimized once, and the analytic sum SE and NMSE are recorded, optionally
//! next to a Monte-Carlo overlay. A failing point is recorded in the error
//! column and the sweep continues.

use crate::channel::{ChannelStatistics, RbmPhases};
use crate::error::{Error, Result};
use crate::estimation::EstimatorState;
use crate::montecarlo::{mc_nmse, mc_sinr_terms_opts, McOptions};
use crate::optimizer::{optimize_phases, OptimizerConfig};
use crate::parallel::map_trials;
use crate::performance::evaluate;
use crate::scenario::{linear_to_db, PhaseNoiseConfig, Scenario, ScenarioConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Transmit SNR in dB; pilot and data power are set so that the
    /// direct-link receive SNR of UE 0 equals the axis value.
    SnrDb,
    /// Number of IRS elements.
    NIrs,
    /// Number of BS antennas.
    MBs,
    /// Number of UEs.
    KUes,
    /// Impairment severity kappa_bar: kappa_BS = kappa_bar and
    /// kappa_UE = kappa_bar + 0.03.
    KappaBar,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::NIrs => "n_irs",
            SweepAxis::MBs => "m_bs",
            SweepAxis::KUes => "k_ues",
            SweepAxis::KappaBar => "kappa_bar",
        }
    }
}

/// One labelled curve: overrides applied on top of the base scenario.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    /// Sets both kappa_BS and kappa_UE.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub phase_noise: Option<PhaseNoiseConfig>,
    /// Toggles spatial correlation at both arrays.
    #[serde(default)]
    pub correlated: Option<bool>,
    /// Optimize the reflection phases at every point.
    #[serde(default)]
    pub optimize: bool,
    /// Evaluate with Psi_k = R_k (zero estimation error).
    #[serde(default)]
    pub perfect_csi: bool,
}

/// On-disk sweep spec (TOML).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Monte-Carlo overlay trial count; 0 disables the overlay.
    #[serde(default)]
    pub trials: u64,
    /// Path to a scenario file, resolved against the spec's directory.
    #[serde(default)]
    pub scenario_path: Option<String>,
    /// Inline scenario, exclusive with `scenario_path`.
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    /// Curves; a single unmodified curve labelled "base" when absent.
    #[serde(default, rename = "curve")]
    pub curves: Vec<CurveSpec>,
}

impl SweepSpec {
    /// Parses a spec with an inline scenario from TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        spec.validate()
    }

    /// Loads a spec file, resolving a relative `scenario_path` against the
    /// spec's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec: SweepSpec =
            toml::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        if let Some(rel) = &spec.scenario_path {
            let scenario_file = path.parent().unwrap_or(Path::new(".")).join(rel);
            let scenario_text = std::fs::read_to_string(&scenario_file)?;
            spec.scenario = Some(ScenarioConfig::from_toml(&scenario_text)?);
            spec.scenario_path = None;
        }
        spec.validate()
    }

    fn validate(self) -> Result<Self> {
        if self.scenario.is_none() && self.scenario_path.is_none() {
            return Err(Error::InvalidScenario(
                "sweep spec needs a scenario (inline or scenario_path)".into(),
            ));
        }
        if self.scenario.is_some() && self.scenario_path.is_some() {
            return Err(Error::InvalidScenario(
                "scenario and scenario_path are mutually exclusive".into(),
            ));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidScenario("sweep needs at least one axis value".into()));
        }
        Ok(self)
    }

    fn effective_curves(&self) -> Vec<CurveSpec> {
        if self.curves.is_empty() {
            vec![CurveSpec {
                label: "base".into(),
                kappa: None,
                phase_noise: None,
                correlated: None,
                optimize: false,
                perfect_csi: false,
            }]
        } else {
            self.curves.clone()
        }
    }
}

/// One sweep point: metric columns are absent when the point errored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub curve: String,
    pub sum_se: Option<f64>,
    /// NMSE averaged over UEs.
    pub nmse: Option<f64>,
    pub optimized: bool,
    pub opt_iterations: Option<usize>,
    pub mc_sum_se: Option<f64>,
    pub mc_nmse: Option<f64>,
    pub error: Option<String>,
}

/// All rows of a sweep in deterministic (value-major, curve-minor) order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn had_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// Tidy CSV, one row per (axis value, curve).
    pub fn to_csv(&self) -> String {
        fn opt(x: Option<f64>) -> String {
            x.map(|v| format!("{v:.12e}")).unwrap_or_default()
        }
        let mut out = String::from(
            "axis,value,curve,sum_se,nmse,optimized,opt_iterations,mc_sum_se,mc_nmse,error\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.axis,
                r.value,
                r.curve,
                opt(r.sum_se),
                opt(r.nmse),
                r.optimized,
                r.opt_iterations.map(|i| i.to_string()).unwrap_or_default(),
                opt(r.mc_sum_se),
                opt(r.mc_nmse),
                r.error
                    .as_deref()
                    .map(|e| e.replace([',', '\n'], ";"))
                    .unwrap_or_default(),
            ));
        }
        out
    }
}

fn apply_curve(cfg: &mut ScenarioConfig, curve: &CurveSpec) {
    if let Some(kappa) = curve.kappa {
        cfg.kappa_bs = Some(kappa);
        cfg.kappa_ue = Some(kappa);
        cfg.adc_bits = None;
    }
    if let Some(pn) = &curve.phase_noise {
        cfg.phase_noise = pn.clone();
    }
    if let Some(corr) = curve.correlated {
        cfg.spatial_correlation = corr;
    }
}

fn apply_axis(cfg: &mut ScenarioConfig, axis: SweepAxis, value: f64) -> Result<()> {
    match axis {
        SweepAxis::SnrDb => {
            // probe build to learn the direct-link gain and noise power,
            // then set P = rho = snr * sigma^2 / beta_d(UE 0)
            let probe = cfg.build()?;
            let (_, _, beta_d) = probe.geometry.path_loss(0);
            let power = crate::scenario::db_to_linear(value) * probe.sigma2 / beta_d;
            cfg.p_db = linear_to_db(power);
            cfg.rho_db = linear_to_db(power);
        }
        SweepAxis::NIrs => {
            cfg.n = positive_count(value, "n_irs")?;
        }
        SweepAxis::MBs => {
            cfg.m = positive_count(value, "m_bs")?;
        }
        SweepAxis::KUes => {
            cfg.k = positive_count(value, "k_ues")?;
            cfg.tau = None;
        }
        SweepAxis::KappaBar => {
            if value < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "kappa_bar must be non-negative, got {value}"
                )));
            }
            cfg.kappa_bs = Some(value);
            cfg.kappa_ue = Some(value + 0.03);
            cfg.adc_bits = None;
        }
    }
    Ok(())
}

fn positive_count(value: f64, what: &str) -> Result<usize> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(Error::InvalidScenario(format!(
            "{what} axis values must be positive integers, got {value}"
        )));
    }
    Ok(value as usize)
}

fn eval_point(spec: &SweepSpec, curve: &CurveSpec, value: f64) -> Result<SweepRow> {
    let mut cfg = spec
        .scenario
        .clone()
        .ok_or_else(|| Error::InvalidScenario("sweep spec has no scenario".into()))?;
    apply_curve(&mut cfg, curve);
    apply_axis(&mut cfg, spec.axis, value)?;
    let scenario: Scenario = cfg.build()?;
    let stats = ChannelStatistics::build(&scenario)?;

    let (rbm, opt_iterations) = if curve.optimize {
        let result = optimize_phases(&stats, &scenario, &OptimizerConfig::default())?;
        (result.rbm, Some(result.iterations))
    } else {
        (RbmPhases::default_init(scenario.n), None)
    };

    let est = if curve.perfect_csi {
        EstimatorState::perfect(stats.effective_covariances(&rbm)?)
    } else {
        EstimatorState::compute(&stats, &scenario, &rbm)?
    };
    let perf = evaluate(&est, &scenario);
    let nmse = est.nmse_all().iter().sum::<f64>() / scenario.k as f64;

    let (mc_sum_se, mc_nmse_mean) = if spec.trials > 0 {
        let opts = McOptions {
            perfect_csi: curve.perfect_csi,
            ..McOptions::default()
        };
        let report = mc_sinr_terms_opts(&stats, &rbm, &scenario, spec.trials, opts)?;
        let mc_se: f64 = report.per_ue.iter().map(|u| u.se_mc).sum();
        let mc_nmse_mean = if curve.perfect_csi {
            0.0
        } else {
            let nm = mc_nmse(&stats, &rbm, &scenario, spec.trials)?;
            nm.terms.iter().map(|t| t.mc_mean).sum::<f64>() / scenario.k as f64
        };
        (Some(mc_se), Some(mc_nmse_mean))
    } else {
        (None, None)
    };

    Ok(SweepRow {
        axis: spec.axis.name().to_string(),
        value,
        curve: curve.label.clone(),
        sum_se: Some(perf.sum_se),
        nmse: Some(nmse),
        optimized: curve.optimize,
        opt_iterations,
        mc_sum_se,
        mc_nmse: mc_nmse_mean,
        error: None,
    })
}

/// Runs every (axis value, curve) point of the sweep. Point failures land in
/// the row's error column; the sweep itself only fails on an invalid spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let spec = spec.clone().validate()?;
    let curves = spec.effective_curves();
    let points: Vec<(f64, &CurveSpec)> = spec
        .values
        .iter()
        .flat_map(|&v| curves.iter().map(move |c| (v, c)))
        .collect();
    let rows = map_trials(points.len() as u64, |i| {
        let (value, curve) = points[i as usize];
        eval_point(&spec, curve, value).unwrap_or_else(|e| SweepRow {
            axis: spec.axis.name().to_string(),
            value,
            curve: curve.label.clone(),
            sum_se: None,
            nmse: None,
            optimized: curve.optimize,
            opt_iterations: None,
            mc_sum_se: None,
            mc_nmse: None,
            error: Some(e.to_string()),
        })
    });
    Ok(SweepResult { rows })
}
