//! Channel statistics and sampling.
//!
//! Builds the IRS/BS spatial correlation matrices, the deterministic
//! high-rank LoS BS-IRS matrix, the phase-noise-averaged IRS covariance, and
//! the per-user effective covariance as a function of the reflecting
//! beamforming phases. Also draws full channel/impairment realizations for
//! Monte-Carlo use.

use crate::error::{Error, Result};
use crate::linalg::{check_hermitian_psd, hermitian_sqrt, identity, CMat, CVec};
use crate::math::{bessel_ratio_i1_i0, complex_gaussian, sample_truncated_laplace, sample_von_mises};
use crate::scenario::{streams, PhaseNoiseModel, Scenario};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Elevation angle distribution for the IRS correlation: Laplace mean (deg).
pub const ELEVATION_MEAN_DEG: f64 = 90.0;
/// Elevation angle Laplace spread (deg), interpreted as the scale parameter.
pub const ELEVATION_SPREAD_DEG: f64 = 8.0;
/// Azimuth Von Mises concentration.
pub const AZIMUTH_CONCENTRATION: f64 = 0.2;

/// Unit-modulus IRS reflection coefficients (the optimization variable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmPhases {
    /// Reflection coefficients phi_n = exp(j theta_n); amplitude fixed at 1.
    pub phi: CVec,
}

impl RbmPhases {
    /// Algorithm default: every phase at pi/2.
    pub fn default_init(n: usize) -> Self {
        let phi = CVec::from_element(n, Complex64::new(0.0, 1.0));
        Self { phi }
    }

    /// Builds from explicit phase angles (radians).
    pub fn from_angles(angles: &[f64]) -> Self {
        let phi = CVec::from_iterator(angles.len(), angles.iter().map(|&t| Complex64::cis(t)));
        Self { phi }
    }

    /// Uniformly random phases.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Self::from_angles(&angles)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.len() == 0
    }

    /// Maximum deviation of |phi_n| from 1.
    pub fn modulus_defect(&self) -> f64 {
        self.phi.iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Everything needed to form the per-user effective covariances:
/// correlation matrices, LoS matrix, path losses, and the phase-noise
/// characteristic factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelStatistics {
    /// IRS spatial correlation per UE, N x N, unit diagonal.
    pub r_irs: Vec<CMat>,
    /// BS spatial correlation per UE, M x M, unit diagonal.
    pub r_bs: Vec<CMat>,
    /// Deterministic LoS BS-IRS matrix, M x N.
    pub h1: CMat,
    /// BS-IRS path loss.
    pub beta1: f64,
    /// IRS-UE path loss per UE.
    pub beta2: Vec<f64>,
    /// Direct-link path loss per UE.
    pub beta_d: Vec<f64>,
    /// Phase-noise characteristic factor |E[exp(j theta)]| in [0, 1].
    pub m_factor: f64,
    /// Cached square roots for channel sampling.
    pub r_irs_sqrt: Vec<CMat>,
    pub r_bs_sqrt: Vec<CMat>,
}

/// Characteristic factor of the phase-noise distribution: 1 for perfect
/// phases, 0 for uniform errors, I1(kappa)/I0(kappa) for Von Mises.
pub fn characteristic_factor(model: PhaseNoiseModel) -> f64 {
    match model {
        PhaseNoiseModel::None => 1.0,
        PhaseNoiseModel::Uniform => 0.0,
        PhaseNoiseModel::VonMises { kappa } => bessel_ratio_i1_i0(kappa),
    }
}

/// IRS spatial correlation for UE `k`: entry (n, n') is the expectation of
/// exp(j (2 pi / lambda) d_IRS (n - n') sin(elevation) sin(azimuth)) over the
/// angle distributions, estimated by seeded Monte-Carlo averaging.
///
/// The estimate is assembled from per-lag averages of a Vandermonde outer
/// product, so it is Hermitian Toeplitz with exact unit diagonal and PSD up
/// to rounding.
pub fn build_irs_correlation(scenario: &Scenario, k: usize) -> Result<CMat> {
    let n = scenario.n;
    if !scenario.spatial_correlation {
        return Ok(identity(n));
    }
    let mut rng = scenario.stream_rng(streams::IRS_CORR_BASE + k as u64);
    let c = 2.0 * PI / scenario.geometry.lambda * scenario.geometry.d_irs;
    let draws = scenario.corr_draws;
    let mut lags = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..draws {
        let elev = sample_truncated_laplace(
            &mut rng,
            ELEVATION_MEAN_DEG.to_radians(),
            ELEVATION_SPREAD_DEG.to_radians(),
            0.0,
            PI,
        );
        let azim = sample_von_mises(&mut rng, AZIMUTH_CONCENTRATION);
        let w = Complex64::cis(c * elev.sin() * azim.sin());
        let mut p = Complex64::new(1.0, 0.0);
        for lag in lags.iter_mut() {
            *lag += p;
            p *= w;
        }
    }
    let scale = 1.0 / draws as f64;
    for lag in lags.iter_mut() {
        *lag *= scale;
    }
    lags[0] = Complex64::new(1.0, 0.0);
    let r = CMat::from_fn(n, n, |i, j| {
        if i >= j {
            lags[i - j]
        } else {
            lags[j - i].conj()
        }
    });
    check_hermitian_psd(&r, 1e-12, 1e-8, "build_irs_correlation")?;
    Ok(r)
}

/// BS spatial correlation for UE `k`: exponential model r^|p - q| with the
/// scenario's coefficient. Identity when spatial correlation is disabled.
pub fn build_bs_correlation(scenario: &Scenario, _k: usize) -> CMat {
    let m = scenario.m;
    if !scenario.spatial_correlation || scenario.bs_correlation == 0.0 {
        return identity(m);
    }
    let r = scenario.bs_correlation;
    CMat::from_fn(m, m, |p, q| {
        Complex64::new(r.powi((p as i32 - q as i32).abs()), 0.0)
    })
}

/// Departure/arrival angles for the LoS BS-IRS matrix.
#[derive(Debug, Clone)]
pub struct LosAngles {
    /// Elevation at the BS towards IRS element n, U[0, pi].
    pub theta1: Vec<f64>,
    /// Azimuth at the BS towards IRS element n, U[0, 2 pi].
    pub psi1: Vec<f64>,
}

impl LosAngles {
    /// Draws one angle pair per index up to max(M, N).
    pub fn draw<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        let theta1 = (0..count).map(|_| rng.gen_range(0.0..PI)).collect();
        let psi1 = (0..count).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Self { theta1, psi1 }
    }
}

/// LoS BS-IRS matrix from explicit angles: entry (m, n) is
/// sqrt(beta1) exp(j (2 pi/lambda) ((m-1) d_BS sin theta1_n sin psi1_n
///                                + (n-1) d_IRS sin theta2_m sin psi2_m))
/// with theta2 = pi - theta1 and psi2 = pi + psi1.
pub fn los_channel_from_angles(scenario: &Scenario, beta1: f64, angles: &LosAngles) -> CMat {
    let g = &scenario.geometry;
    let wave = 2.0 * PI / g.lambda;
    let amp = beta1.sqrt();
    CMat::from_fn(scenario.m, scenario.n, |m, n| {
        let theta2_m = PI - angles.theta1[m];
        let psi2_m = PI + angles.psi1[m];
        let phase = wave
            * (m as f64 * g.d_bs * angles.theta1[n].sin() * angles.psi1[n].sin()
                + n as f64 * g.d_irs * theta2_m.sin() * psi2_m.sin());
        Complex64::from_polar(amp, phase)
    })
}

/// LoS BS-IRS matrix with angles drawn from the scenario's dedicated stream.
pub fn build_los_channel(scenario: &Scenario, beta1: f64) -> CMat {
    let mut rng = scenario.stream_rng(streams::H1_ANGLES);
    let angles = LosAngles::draw(scenario.m.max(scenario.n), &mut rng);
    los_channel_from_angles(scenario, beta1, &angles)
}

/// Phase-noise-averaged IRS correlation: m^2 R + (1 - m^2) I.
pub fn effective_irs_correlation(r_irs: &CMat, m_factor: f64) -> CMat {
    let n = r_irs.nrows();
    let m2 = Complex64::new(m_factor * m_factor, 0.0);
    let mut out = r_irs * m2;
    for i in 0..n {
        out[(i, i)] += Complex64::new(1.0 - m_factor * m_factor, 0.0);
    }
    out
}

impl ChannelStatistics {
    /// Builds all statistics for a validated scenario. Deterministic given
    /// the scenario (including its seed).
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let mut r_irs = Vec::with_capacity(scenario.k);
        let mut r_bs = Vec::with_capacity(scenario.k);
        let mut beta2 = Vec::with_capacity(scenario.k);
        let mut beta_d = Vec::with_capacity(scenario.k);
        let mut beta1 = 0.0;
        for k in 0..scenario.k {
            let (b1, b2, bd) = scenario.geometry.path_loss(k);
            beta1 = b1;
            beta2.push(b2);
            beta_d.push(bd);
            r_irs.push(build_irs_correlation(scenario, k)?);
            r_bs.push(build_bs_correlation(scenario, k));
        }
        let h1 = build_los_channel(scenario, beta1);
        let r_irs_sqrt = r_irs.iter().map(hermitian_sqrt).collect();
        let r_bs_sqrt = r_bs.iter().map(hermitian_sqrt).collect();
        Ok(Self {
            r_irs,
            r_bs,
            h1,
            beta1,
            beta2,
            beta_d,
            m_factor: characteristic_factor(scenario.phase_noise),
            r_irs_sqrt,
            r_bs_sqrt,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.r_irs.len()
    }

    /// Effective covariance R_k of the overall UE-k channel for reflection
    /// phases `rbm`, with the phase-noise averaging applied:
    ///
    ///   R_k = beta_d R_BS + beta_2 (m^2 H1 T R_IRS T^H H1^H
    ///                               + (1 - m^2) H1 H1^H)
    ///
    /// For unit-modulus phases this equals
    /// beta_d R_BS + beta_2 H1 T (m^2 R_IRS + (1-m^2) I) T^H H1^H; the
    /// identity part is kept outside the phase matrix so that the covariance
    /// is bitwise phase-independent when m = 0 and so that its Wirtinger
    /// derivative flows only through the m^2 R_IRS part.
    pub fn effective_covariance(&self, rbm: &RbmPhases, k: usize) -> Result<CMat> {
        if rbm.len() != self.h1.ncols() {
            return Err(Error::DimensionMismatch {
                context: "effective_covariance".into(),
                details: format!("RBM has {} phases, IRS has {}", rbm.len(), self.h1.ncols()),
            });
        }
        let m2 = self.m_factor * self.m_factor;
        let base = &self.r_bs[k] * Complex64::new(self.beta_d[k], 0.0);
        let mut cov = base;
        if m2 > 0.0 {
            // H1 Theta: scale column n of H1 by phi_n
            let mut h1_theta = self.h1.clone();
            for n in 0..h1_theta.ncols() {
                let phi = rbm.phi[n];
                for m in 0..h1_theta.nrows() {
                    h1_theta[(m, n)] *= phi;
                }
            }
            let mid = &h1_theta * &self.r_irs[k] * h1_theta.adjoint();
            cov += mid * Complex64::new(self.beta2[k] * m2, 0.0);
        }
        if m2 < 1.0 {
            let los = &self.h1 * self.h1.adjoint();
            cov += los * Complex64::new(self.beta2[k] * (1.0 - m2), 0.0);
        }
        Ok(crate::linalg::hermitize(&cov))
    }

    /// Effective covariances for all UEs.
    pub fn effective_covariances(&self, rbm: &RbmPhases) -> Result<Vec<CMat>> {
        (0..self.num_ues()).map(|k| self.effective_covariance(rbm, k)).collect()
    }
}

/// One Monte-Carlo realization of all random quantities, plus the composed
/// overall channels h_k = h_d,k + H1 Theta Theta~ h_2,k.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    /// Direct channel per UE, M-vector.
    pub h_d: Vec<CVec>,
    /// IRS-UE channel per UE, N-vector.
    pub h_2: Vec<CVec>,
    /// IRS phase errors, N angles.
    pub theta_tilde: Vec<f64>,
    /// Transmit distortion per UE (data phase).
    pub delta_t: Vec<Complex64>,
    /// Receive distortion at the BS (data phase), M-vector.
    pub delta_r: CVec,
    /// Overall channel per UE, M-vector.
    pub h: Vec<CVec>,
}

/// Samples one channel/impairment realization from the given RNG stream.
pub fn sample_draw<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    rbm: &RbmPhases,
    scenario: &Scenario,
    rng: &mut R,
) -> ChannelDraw {
    let (m, n, k_ues) = (scenario.m, scenario.n, scenario.k);
    let mut h_d = Vec::with_capacity(k_ues);
    let mut h_2 = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let z = CVec::from_fn(n, |_, _| complex_gaussian(rng));
        let zd = CVec::from_fn(m, |_, _| complex_gaussian(rng));
        h_2.push(&stats.r_irs_sqrt[k] * z * Complex64::new(stats.beta2[k].sqrt(), 0.0));
        h_d.push(&stats.r_bs_sqrt[k] * zd * Complex64::new(stats.beta_d[k].sqrt(), 0.0));
    }
    let theta_tilde: Vec<f64> = (0..n)
        .map(|_| match scenario.phase_noise {
            PhaseNoiseModel::None => 0.0,
            PhaseNoiseModel::Uniform => rng.gen_range(-PI..PI),
            PhaseNoiseModel::VonMises { kappa } => sample_von_mises(rng, kappa),
        })
        .collect();
    // overall channels
    let mut h = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let mut reflected = h_2[k].clone();
        for i in 0..n {
            reflected[i] *= rbm.phi[i] * Complex64::cis(theta_tilde[i]);
        }
        h.push(&h_d[k] + &stats.h1 * reflected);
    }
    // data-phase transceiver distortions, conditioned on the drawn channels
    let delta_t: Vec<Complex64> = (0..k_ues)
        .map(|k| {
            let var = scenario.kappa_ue * scenario.data_power[k];
            complex_gaussian(rng) * Complex64::new(var.sqrt(), 0.0)
        })
        .collect();
    let delta_r = CVec::from_fn(m, |row, _| {
        let var: f64 = scenario.kappa_bs
            * (0..k_ues)
                .map(|i| scenario.data_power[i] * h[i][row].norm_sqr())
                .sum::<f64>();
        complex_gaussian(rng) * Complex64::new(var.sqrt(), 0.0)
    });
    ChannelDraw {
        h_d,
        h_2,
        theta_tilde,
        delta_t,
        delta_r,
        h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::scenario::ScenarioConfig;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn scenario(m: usize, n: usize, k: usize) -> Scenario {
        let toml = format!(
            r#"
            m = {m}
            n = {n}
            k = {k}
            p_db = -50.0
            rho_db = -50.0
            bandwidth_hz = 200e3
            kappa_bs = 0.015876
            kappa_ue = 0.015876
            corr_draws = 20000
            [phase_noise]
            kind = "von_mises"
            kappa = 2.0
            [geometry]
            d_bs_irs_m = 8.0
            d_irs_ue_m = 60.0
            alpha1 = 2.2
            alpha2 = 3.67
            c1_db = 26.0
            c2_db = 28.0
            penetration_db = 15.0
            carrier_ghz = 2.5
            "#
        );
        ScenarioConfig::from_toml(&toml).unwrap().build().unwrap()
    }

    #[test]
    fn characteristic_factor_cases() {
        assert_eq!(characteristic_factor(PhaseNoiseModel::Uniform), 0.0);
        assert_eq!(characteristic_factor(PhaseNoiseModel::None), 1.0);
        assert_relative_eq!(
            characteristic_factor(PhaseNoiseModel::VonMises { kappa: 2.0 }),
            0.697774,
            max_relative = 1e-5
        );
        assert!(characteristic_factor(PhaseNoiseModel::VonMises { kappa: 1e6 }) > 0.999999);
    }

    #[test]
    fn irs_correlation_shape_and_reproducibility() {
        let sc = scenario(4, 4, 1);
        let r1 = build_irs_correlation(&sc, 0).unwrap();
        let r2 = build_irs_correlation(&sc, 0).unwrap();
        assert_eq!(r1, r2); // bit-identical rerun
        for i in 0..4 {
            assert_eq!(r1[(i, i)], Complex64::new(1.0, 0.0));
            for j in 0..4 {
                if i != j {
                    assert!(r1[(i, j)].norm() < 1.0);
                }
            }
        }
        assert!(min_eigenvalue(&r1) > -1e-10);
        assert_relative_eq!(r1.trace().re, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn irs_correlation_zero_spacing_fully_correlated() {
        let mut sc = scenario(2, 4, 1);
        sc.geometry.d_irs = 1e-300; // validation requires > 0
        let r = build_irs_correlation(&sc, 0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(r[(i, j)].re, 1.0, epsilon = 1e-9);
                assert_relative_eq!(r[(i, j)].im, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn irs_correlation_matches_direct_mc_oracle() {
        // Independent oracle: per-entry averaging with its own RNG and 10^6
        // draws, no Toeplitz/power structure shared with production.
        let sc = scenario(2, 4, 1);
        let r = build_irs_correlation(&sc, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0xABCDEF);
        let c = 2.0 * PI / sc.geometry.lambda * sc.geometry.d_irs;
        let draws = 1_000_000;
        let mut oracle = [Complex64::new(0.0, 0.0); 4];
        for _ in 0..draws {
            let elev = sample_truncated_laplace(
                &mut rng,
                ELEVATION_MEAN_DEG.to_radians(),
                ELEVATION_SPREAD_DEG.to_radians(),
                0.0,
                PI,
            );
            let azim = sample_von_mises(&mut rng, AZIMUTH_CONCENTRATION);
            let u = elev.sin() * azim.sin();
            for (d, slot) in oracle.iter_mut().enumerate() {
                *slot += Complex64::cis(c * d as f64 * u);
            }
        }
        for (d, slot) in oracle.iter().enumerate() {
            let est = slot / draws as f64;
            assert!(
                (r[(d, 0)] - est.conj()).norm() < 1.5e-2,
                "lag {d}: production {} vs oracle {}",
                r[(d, 0)],
                est.conj()
            );
        }
    }

    #[test]
    fn bs_correlation_exponential() {
        let sc = scenario(4, 2, 1);
        let r = build_bs_correlation(&sc, 0);
        for p in 0..4 {
            for q in 0..4 {
                assert_relative_eq!(
                    r[(p, q)].re,
                    0.5f64.powi((p as i32 - q as i32).abs()),
                    epsilon = 1e-15
                );
            }
        }
        assert!(min_eigenvalue(&r) >= 0.0);
        let mut sc0 = sc;
        sc0.bs_correlation = 0.0;
        assert_eq!(build_bs_correlation(&sc0, 0), identity(4));
    }

    #[test]
    fn los_channel_entry_magnitudes_and_rank() {
        let sc = scenario(8, 16, 1);
        let (b1, _, _) = sc.geometry.path_loss(0);
        let h1 = build_los_channel(&sc, b1);
        for e in h1.iter() {
            assert_relative_eq!(e.norm(), b1.sqrt(), max_relative = 1e-12);
        }
        // numerical rank via SVD oracle
        let svd = h1.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > smax * 1e-10)
            .count();
        assert_eq!(rank, 8);
    }

    #[test]
    fn los_channel_degenerate_scalar() {
        let mut sc = scenario(1, 1, 1);
        sc.m = 1;
        sc.n = 1;
        let angles = LosAngles {
            theta1: vec![0.0],
            psi1: vec![0.0],
        };
        let h1 = los_channel_from_angles(&sc, 4.0, &angles);
        assert_relative_eq!(h1[(0, 0)].re, 2.0, epsilon = 1e-15);
        assert_relative_eq!(h1[(0, 0)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_irs_correlation_cases() {
        let r = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.4, 0.3),
                Complex64::new(0.4, -0.3),
                Complex64::new(1.0, 0.0),
            ],
        );
        let id = effective_irs_correlation(&r, 0.0);
        assert_eq!(id, identity(2));
        let same = effective_irs_correlation(&r, 1.0);
        assert_eq!(same, r);
        let half = effective_irs_correlation(&r, 0.5);
        assert_relative_eq!(half[(0, 1)].re, 0.1, epsilon = 1e-15);
        assert_relative_eq!(half[(0, 1)].im, 0.075, epsilon = 1e-15);
        assert_relative_eq!(half[(0, 0)].re, 1.0, epsilon = 1e-15);
        // trace preserved for any m
        for m in [0.0, 0.3, 0.8, 1.0] {
            assert_relative_eq!(effective_irs_correlation(&r, m).trace().re, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_covariance_m_zero_rbm_invariant_bitwise() {
        let mut sc = scenario(3, 4, 1);
        sc.phase_noise = PhaseNoiseModel::Uniform;
        let stats = ChannelStatistics::build(&sc).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let a = RbmPhases::random(4, &mut rng);
        let b = RbmPhases::random(4, &mut rng);
        let ca = stats.effective_covariance(&a, 0).unwrap();
        let cb = stats.effective_covariance(&b, 0).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn effective_covariance_no_irs_link() {
        let sc = scenario(3, 4, 1);
        let mut stats = ChannelStatistics::build(&sc).unwrap();
        stats.beta2[0] = 0.0;
        let rbm = RbmPhases::default_init(4);
        let cov = stats.effective_covariance(&rbm, 0).unwrap();
        let expect = &stats.r_bs[0] * Complex64::new(stats.beta_d[0], 0.0);
        for (a, b) in cov.iter().zip(expect.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn effective_covariance_psd_for_random_rbm() {
        let sc = scenario(4, 6, 2);
        let stats = ChannelStatistics::build(&sc).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let rbm = RbmPhases::random(6, &mut rng);
            let cov = stats.effective_covariance(&rbm, 1).unwrap();
            check_hermitian_psd(&cov, 1e-12, 1e-10, "test").unwrap();
        }
    }

    #[test]
    fn effective_covariance_dimension_mismatch() {
        let sc = scenario(3, 4, 1);
        let stats = ChannelStatistics::build(&sc).unwrap();
        let rbm = RbmPhases::default_init(3);
        assert!(matches!(
            stats.effective_covariance(&rbm, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_channels_match_effective_covariance() {
        // brute-force E[h h^H] over sampled channels vs the closed form
        let sc = scenario(2, 2, 1);
        let stats = ChannelStatistics::build(&sc).unwrap();
        let rbm = RbmPhases::default_init(2);
        let cov = stats.effective_covariance(&rbm, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let trials = 100_000;
        let mut acc = CMat::zeros(2, 2);
        for _ in 0..trials {
            let draw = sample_draw(&stats, &rbm, &sc, &mut rng);
            acc += &draw.h[0] * draw.h[0].adjoint();
        }
        acc /= Complex64::new(trials as f64, 0.0);
        let scale = cov.trace().re / 2.0;
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (acc[(i, j)] - cov[(i, j)]).norm() < 2e-2 * scale,
                    "entry ({i},{j}): {} vs {}",
                    acc[(i, j)],
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn ideal_hardware_draws_have_zero_distortion() {
        let mut sc = scenario(3, 4, 2);
        sc.kappa_bs = 0.0;
        sc.kappa_ue = 0.0;
        let stats = ChannelStatistics::build(&sc).unwrap();
        let rbm = RbmPhases::default_init(4);
        let mut rng = sc.trial_rng(0);
        let draw = sample_draw(&stats, &rbm, &sc, &mut rng);
        assert!(draw.delta_t.iter().all(|d| d.norm() == 0.0));
        assert!(draw.delta_r.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn uniform_phase_noise_has_zero_characteristic_mean() {
        let mut sc = scenario(2, 8, 1);
        sc.phase_noise = PhaseNoiseModel::Uniform;
        let stats = ChannelStatistics::build(&sc).unwrap();
        let rbm = RbmPhases::default_init(8);
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let trials = 20_000;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for _ in 0..trials {
            let draw = sample_draw(&stats, &rbm, &sc, &mut rng);
            for &t in &draw.theta_tilde {
                acc += Complex64::cis(t);
                count += 1;
            }
        }
        let mean = acc / count as f64;
        assert!(mean.norm() < 3.0 / (count as f64).sqrt());
    }

    #[test]
    fn draws_reproducible_per_trial() {
        let sc = scenario(3, 4, 2);
        let stats = ChannelStatistics::build(&sc).unwrap();
        let rbm = RbmPhases::default_init(4);
        let d1 = sample_draw(&stats, &rbm, &sc, &mut sc.trial_rng(42));
        let d2 = sample_draw(&stats, &rbm, &sc, &mut sc.trial_rng(42));
        assert_eq!(d1.h[0], d2.h[0]);
        assert_eq!(d1.theta_tilde, d2.theta_tilde);
        let d3 = sample_draw(&stats, &rbm, &sc, &mut sc.trial_rng(43));
        assert_ne!(d1.h[0], d3.h[0]);
    }
}
