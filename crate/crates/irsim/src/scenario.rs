//! System parameters, unit conversions, and scenario-file parsing.
//!
//! All internal computation is in linear units (mW for powers); dB appears
//! only at the config/reporting boundary, where every dB-valued field carries
//! a `_db` suffix.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Converts a dB value to a linear ratio.
pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise power in dBm for a bandwidth of `bc_hz` Hz.
pub fn noise_power_dbm(bc_hz: f64) -> f64 {
    -174.0 + 10.0 * bc_hz.log10()
}

/// Additive receive-distortion proportionality of a `b`-bit ADC.
pub fn adc_kappa(b: u32) -> f64 {
    let q = 2f64.powi(-2 * b as i32);
    q / (1.0 - q)
}

/// Phase-noise model of the IRS reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseNoiseModel {
    /// Perfect phase configuration (characteristic factor 1).
    None,
    /// Uniform phase errors on [-pi, pi) (characteristic factor 0).
    Uniform,
    /// Zero-mean Von Mises phase errors with concentration `kappa`.
    VonMises { kappa: f64 },
}

/// Link geometry: distances, path-loss exponents/gains, and array spacings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// BS-IRS distance in meters.
    pub d_bs_irs: f64,
    /// IRS-UE distance in meters, per UE.
    pub d_irs_ue: Vec<f64>,
    /// Direct-link (BS-UE) distance in meters, per UE.
    pub d_direct: Vec<f64>,
    /// BS-IRS path-loss exponent.
    pub alpha1: f64,
    /// IRS-UE path-loss exponent.
    pub alpha2: f64,
    /// BS-IRS path-loss gain (linear).
    pub c1: f64,
    /// IRS-UE path-loss gain (linear).
    pub c2: f64,
    /// Direct-link penetration loss (linear, <= 1 attenuates).
    pub penetration: f64,
    /// Carrier wavelength in meters.
    pub lambda: f64,
    /// BS inter-antenna spacing in meters.
    pub d_bs: f64,
    /// IRS inter-element spacing in meters.
    pub d_irs: f64,
}

impl Geometry {
    /// Path losses (beta1, beta2_k, beta_d_k) for UE `k`.
    ///
    /// beta1 = C1 d^(-alpha1) for the BS-IRS link, beta2_k = C2 d_k^(-alpha2)
    /// for the IRS-UE link, and the direct link reuses the beta2 model on the
    /// direct distance with the penetration loss applied.
    pub fn path_loss(&self, k: usize) -> (f64, f64, f64) {
        let beta1 = self.c1 * self.d_bs_irs.powf(-self.alpha1);
        let beta2 = self.c2 * self.d_irs_ue[k].powf(-self.alpha2);
        let beta_d = self.c2 * self.d_direct[k].powf(-self.alpha2) * self.penetration;
        (beta1, beta2, beta_d)
    }
}

/// Validated system scenario; immutable after construction and safe to share
/// read-only across parallel workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// BS antennas.
    pub m: usize,
    /// IRS elements.
    pub n: usize,
    /// Single-antenna UEs.
    pub k: usize,
    /// Coherence block length in channel uses.
    pub tau_c: usize,
    /// Pilot length in channel uses.
    pub tau: usize,
    /// Per-UE pilot power, linear mW.
    pub pilot_power: f64,
    /// Per-UE uplink data power, linear mW.
    pub data_power: Vec<f64>,
    /// Receiver noise power, linear mW.
    pub sigma2: f64,
    /// BS additive-distortion proportionality.
    pub kappa_bs: f64,
    /// UE additive-distortion proportionality.
    pub kappa_ue: f64,
    /// IRS phase-noise model.
    pub phase_noise: PhaseNoiseModel,
    /// Link geometry.
    pub geometry: Geometry,
    /// Exponential BS correlation coefficient r in [0, 1).
    pub bs_correlation: f64,
    /// false collapses both spatial correlation matrices to identity.
    pub spatial_correlation: bool,
    /// Draw count for the IRS correlation expectation.
    pub corr_draws: usize,
    /// Master RNG seed.
    pub seed: u64,
}

impl Scenario {
    /// Checks every invariant; returns the scenario unchanged on success.
    pub fn validate(self) -> Result<Self> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        // rejects NaN and infinities along with the non-positive range
        let not_positive = |x: f64| !x.is_finite() || x <= 0.0;
        if self.m < 1 || self.n < 1 || self.k < 1 {
            return fail(format!("M, N, K must all be >= 1 (got {}, {}, {})", self.m, self.n, self.k));
        }
        if self.tau < self.k {
            return fail(format!(
                "pilot length tau = {} is smaller than K = {}; orthogonal pilots require tau >= K",
                self.tau, self.k
            ));
        }
        if self.tau >= self.tau_c {
            return fail(format!(
                "pilot length tau = {} must be smaller than the coherence block tau_c = {}",
                self.tau, self.tau_c
            ));
        }
        if not_positive(self.pilot_power) || not_positive(self.sigma2) {
            return fail("pilot power and noise power must be strictly positive".into());
        }
        if self.data_power.len() != self.k {
            return fail(format!(
                "data_power has {} entries but K = {}",
                self.data_power.len(),
                self.k
            ));
        }
        if self.data_power.iter().any(|&p| not_positive(p)) {
            return fail("every data power must be strictly positive".into());
        }
        if self.kappa_bs < 0.0 || self.kappa_ue < 0.0 {
            return fail("kappa_BS and kappa_UE must be non-negative".into());
        }
        if let PhaseNoiseModel::VonMises { kappa } = self.phase_noise {
            if kappa < 0.0 {
                return fail("Von Mises concentration must be non-negative".into());
            }
        }
        let g = &self.geometry;
        if g.d_irs_ue.len() != self.k || g.d_direct.len() != self.k {
            return fail("geometry distance lists must have one entry per UE".into());
        }
        for &d in [g.d_bs_irs, g.lambda, g.d_bs, g.d_irs]
            .iter()
            .chain(g.d_irs_ue.iter())
            .chain(g.d_direct.iter())
        {
            if not_positive(d) {
                return fail("all distances and spacings must be strictly positive".into());
            }
        }
        if not_positive(g.c1) || not_positive(g.c2) || not_positive(g.penetration) {
            return fail("path-loss gains and penetration factor must be strictly positive".into());
        }
        if g.alpha1 < 0.0 || g.alpha2 < 0.0 {
            return fail("path-loss exponents must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.bs_correlation) {
            return fail(format!(
                "BS correlation coefficient must lie in [0, 1), got {}",
                self.bs_correlation
            ));
        }
        if self.corr_draws == 0 {
            return fail("corr_draws must be positive".into());
        }
        Ok(self)
    }

    /// Fraction of the coherence block available for data.
    pub fn prelog(&self) -> f64 {
        (self.tau_c - self.tau) as f64 / self.tau_c as f64
    }

    /// Dedicated RNG for a named deterministic sub-computation.
    ///
    /// Every consumer of randomness draws from its own ChaCha stream keyed by
    /// (master seed, stream id), so components never perturb each other.
    pub fn stream_rng(&self, stream: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// RNG for Monte-Carlo trial `trial`; independent of all other trials.
    pub fn trial_rng(&self, trial: u64) -> ChaCha12Rng {
        self.stream_rng(streams::TRIAL_BASE + trial)
    }
}

/// Stream ids for [`Scenario::stream_rng`].
pub mod streams {
    /// LoS channel angle draws.
    pub const H1_ANGLES: u64 = 1;
    /// IRS correlation integration for UE k uses `IRS_CORR_BASE + k`.
    pub const IRS_CORR_BASE: u64 = 0x1000;
    /// Monte-Carlo trial t uses `TRIAL_BASE + t`.
    pub const TRIAL_BASE: u64 = 0x4000_0000;
}

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

fn default_tau_c() -> usize {
    200
}
fn default_bs_corr() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_corr_draws() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}

/// Phase-noise section of the scenario file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseNoiseConfig {
    pub kind: String,
    #[serde(default)]
    pub kappa: Option<f64>,
}

/// Geometry section of the scenario file. Distances in meters, gains in dB.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub d_bs_irs_m: f64,
    /// Scalar applied to every UE, or one entry per UE.
    pub d_irs_ue_m: DistanceSpec,
    /// Defaults to `d_irs_ue_m` when absent.
    #[serde(default)]
    pub d_direct_m: Option<DistanceSpec>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub c1_db: f64,
    pub c2_db: f64,
    pub penetration_db: f64,
    pub carrier_ghz: f64,
    /// BS antenna spacing in wavelengths; default 0.5.
    #[serde(default)]
    pub d_bs_lambda: Option<f64>,
    /// IRS element spacing in wavelengths; default 0.5.
    #[serde(default)]
    pub d_irs_lambda: Option<f64>,
}

/// A distance given either as one scalar for all UEs or as a per-UE list.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum DistanceSpec {
    Scalar(f64),
    PerUe(Vec<f64>),
}

impl DistanceSpec {
    fn expand(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            DistanceSpec::Scalar(d) => Ok(vec![*d; k]),
            DistanceSpec::PerUe(v) if v.len() == k => Ok(v.clone()),
            DistanceSpec::PerUe(v) => Err(Error::InvalidScenario(format!(
                "distance list has {} entries but K = {k}",
                v.len()
            ))),
        }
    }
}

/// On-disk scenario schema (TOML). Powers in dBm carry the `_db` suffix.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_tau_c")]
    pub tau_c: usize,
    /// Defaults to K (minimum orthogonal-pilot length).
    #[serde(default)]
    pub tau: Option<usize>,
    /// Pilot power in dBm.
    pub p_db: f64,
    /// Data power in dBm, identical for all UEs.
    pub rho_db: f64,
    /// Noise power in dBm; defaults to -174 + 10 log10(bandwidth_hz).
    #[serde(default)]
    pub sigma2_db: Option<f64>,
    /// Coherence bandwidth in Hz, used when `sigma2_db` is absent.
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
    /// Distortion proportionalities; `adc_bits` fills both when absent.
    #[serde(default)]
    pub kappa_bs: Option<f64>,
    #[serde(default)]
    pub kappa_ue: Option<f64>,
    #[serde(default)]
    pub adc_bits: Option<u32>,
    #[serde(default = "default_bs_corr")]
    pub bs_correlation: f64,
    #[serde(default = "default_true")]
    pub spatial_correlation: bool,
    #[serde(default = "default_corr_draws")]
    pub corr_draws: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub phase_noise: PhaseNoiseConfig,
    pub geometry: GeometryConfig,
}

impl ScenarioConfig {
    /// Parses a TOML scenario file.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Resolves defaults, converts dB fields to linear, and validates.
    pub fn build(&self) -> Result<Scenario> {
        let tau = self.tau.unwrap_or(self.k);
        let sigma2_db = match (self.sigma2_db, self.bandwidth_hz) {
            (Some(s), _) => s,
            (None, Some(bw)) => noise_power_dbm(bw),
            (None, None) => {
                return Err(Error::InvalidScenario(
                    "one of sigma2_db or bandwidth_hz is required".into(),
                ))
            }
        };
        let (kappa_bs, kappa_ue) = match (self.kappa_bs, self.kappa_ue, self.adc_bits) {
            (Some(b), Some(u), _) => (b, u),
            (None, None, Some(bits)) => {
                let k = adc_kappa(bits);
                (k, k)
            }
            (b, u, Some(bits)) => {
                let k = adc_kappa(bits);
                (b.unwrap_or(k), u.unwrap_or(k))
            }
            _ => {
                return Err(Error::InvalidScenario(
                    "kappa_bs/kappa_ue (or adc_bits) are required".into(),
                ))
            }
        };
        let phase_noise = match self.phase_noise.kind.as_str() {
            "none" => PhaseNoiseModel::None,
            "uniform" => PhaseNoiseModel::Uniform,
            "von_mises" => PhaseNoiseModel::VonMises {
                kappa: self.phase_noise.kappa.ok_or_else(|| {
                    Error::InvalidScenario("von_mises phase noise requires kappa".into())
                })?,
            },
            other => {
                return Err(Error::InvalidScenario(format!(
                    "unknown phase noise kind {other:?} (expected none|uniform|von_mises)"
                )))
            }
        };
        let g = &self.geometry;
        let lambda = 299_792_458.0 / (g.carrier_ghz * 1e9);
        let d_irs_ue = g.d_irs_ue_m.expand(self.k)?;
        let d_direct = match &g.d_direct_m {
            Some(spec) => spec.expand(self.k)?,
            None => d_irs_ue.clone(),
        };
        let geometry = Geometry {
            d_bs_irs: g.d_bs_irs_m,
            d_irs_ue,
            d_direct,
            alpha1: g.alpha1,
            alpha2: g.alpha2,
            c1: db_to_linear(g.c1_db),
            c2: db_to_linear(g.c2_db),
            penetration: db_to_linear(-g.penetration_db),
            lambda,
            d_bs: g.d_bs_lambda.unwrap_or(0.5) * lambda,
            d_irs: g.d_irs_lambda.unwrap_or(0.5) * lambda,
        };
        Scenario {
            m: self.m,
            n: self.n,
            k: self.k,
            tau_c: self.tau_c,
            tau,
            pilot_power: db_to_linear(self.p_db),
            data_power: vec![db_to_linear(self.rho_db); self.k],
            sigma2: db_to_linear(sigma2_db),
            kappa_bs,
            kappa_ue,
            phase_noise,
            geometry,
            bs_correlation: self.bs_correlation,
            spatial_correlation: self.spatial_correlation,
            corr_draws: self.corr_draws,
            seed: self.seed,
        }
        .validate()
    }
}
