//! Linear MMSE channel estimation under impaired training.
//!
//! During training every UE sends an orthogonal pilot of length tau at power
//! P. After pilot correlation the processed observation for UE k is
//!
//!   r_k = h_k + sum_i (d_t,i / (tau P)) h_i + (d_r + w_k) / (tau P)
//!
//! where d_t,i is the accumulated transmit distortion of UE i
//! (variance kappa_UE P tau P), d_r the accumulated BS receive distortion
//! (covariance tau P Upsilon with Upsilon = kappa_BS P sum_i diag(|h_i|^2)
//! conditioned on the channels), and w_k thermal noise (covariance
//! tau P sigma^2 I). The LMMSE estimate and its error statistics follow from
//! E[r_k r_k^H] and E[r_k h_k^H] = R_k.

use crate::channel::{ChannelDraw, ChannelStatistics, RbmPhases};
use crate::error::Result;
use crate::linalg::{hadamard_identity, hermitian_solve, hermitize, identity, trace_re, CMat, CVec};
use crate::math::complex_gaussian;
use crate::scenario::Scenario;
use num_complex::Complex64;
use rand::Rng;

/// Per-UE LMMSE quantities for a fixed reflection configuration.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    /// Effective channel covariances R_k.
    pub r: Vec<CMat>,
    /// Inverses Q_k of the observation covariances E[r_k r_k^H].
    pub q: Vec<CMat>,
    /// Estimate covariances Psi_k = R_k Q_k R_k (= error-free part of R_k).
    pub psi: Vec<CMat>,
}

impl EstimatorState {
    /// Builds the estimator for the given statistics and reflection phases.
    pub fn compute(
        stats: &ChannelStatistics,
        scenario: &Scenario,
        rbm: &RbmPhases,
    ) -> Result<Self> {
        let r = stats.effective_covariances(rbm)?;
        Self::from_covariances(r, scenario)
    }

    /// Builds the estimator from precomputed effective covariances.
    pub fn from_covariances(r: Vec<CMat>, scenario: &Scenario) -> Result<Self> {
        let m = scenario.m;
        let tau = scenario.tau as f64;
        let tau_p = tau * scenario.pilot_power;
        let r_sum: CMat = r.iter().fold(CMat::zeros(m, m), |acc, ri| acc + ri);
        let diag_sum: CMat = r
            .iter()
            .fold(CMat::zeros(m, m), |acc, ri| acc + hadamard_identity(ri));
        let mut q = Vec::with_capacity(r.len());
        let mut psi = Vec::with_capacity(r.len());
        for rk in &r {
            let mut obs_cov = rk
                + &r_sum * Complex64::new(scenario.kappa_ue / tau, 0.0)
                + &diag_sum * Complex64::new(scenario.kappa_bs / tau, 0.0);
            let noise = scenario.sigma2 / tau_p;
            for i in 0..m {
                obs_cov[(i, i)] += Complex64::new(noise, 0.0);
            }
            let qk = hermitian_solve(&obs_cov, &identity(m), "lmmse observation covariance")?;
            let qk = hermitize(&qk);
            psi.push(hermitize(&(rk * &qk * rk)));
            q.push(qk);
        }
        Ok(Self { r, q, psi })
    }

    /// Estimator for perfect channel knowledge: the estimate is the channel
    /// itself, so Psi_k = R_k.
    pub fn perfect(r: Vec<CMat>) -> Self {
        let q = r.iter().map(|rk| identity(rk.nrows())).collect();
        let psi = r.clone();
        Self { r, q, psi }
    }

    pub fn num_ues(&self) -> usize {
        self.r.len()
    }

    /// LMMSE estimate of h_k from the processed observation r_k.
    pub fn estimate(&self, k: usize, observation: &CVec) -> CVec {
        &self.r[k] * &self.q[k] * observation
    }

    /// Normalized mean-square error 1 - tr(Psi_k) / tr(R_k).
    pub fn nmse(&self, k: usize) -> f64 {
        1.0 - trace_re(&self.psi[k]) / trace_re(&self.r[k])
    }

    pub fn nmse_all(&self) -> Vec<f64> {
        (0..self.num_ues()).map(|k| self.nmse(k)).collect()
    }
}

/// Samples the processed training observations r_k for one channel draw,
/// conditioning the distortion covariances on the drawn channels.
pub fn training_observations<R: Rng + ?Sized>(
    scenario: &Scenario,
    draw: &ChannelDraw,
    rng: &mut R,
) -> Vec<CVec> {
    let m = scenario.m;
    let k_ues = scenario.k;
    let tau_p = scenario.tau as f64 * scenario.pilot_power;
    let dt_std = (scenario.kappa_ue * scenario.pilot_power * tau_p).sqrt();
    let mut out = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let mut r = draw.h[k].clone();
        // transmit distortion accumulated over the pilot, one scalar per UE
        for hi in draw.h.iter() {
            let dt = complex_gaussian(rng) * Complex64::new(dt_std / tau_p, 0.0);
            r += hi * dt;
        }
        // receive distortion and thermal noise, element-wise
        for row in 0..m {
            let upsilon: f64 = scenario.kappa_bs
                * scenario.pilot_power
                * draw.h.iter().map(|hi| hi[row].norm_sqr()).sum::<f64>();
            let dr_var = tau_p * upsilon;
            let w_var = tau_p * scenario.sigma2;
            let noise = complex_gaussian(rng) * Complex64::new(dr_var.sqrt(), 0.0)
                + complex_gaussian(rng) * Complex64::new(w_var.sqrt(), 0.0);
            r[row] += noise / Complex64::new(tau_p, 0.0);
        }
        out.push(r);
    }
    out
}
