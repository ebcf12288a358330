//! Reflection-phase optimization by projected gradient ascent.
//!
//! The objective is the closed-form sum spectral efficiency as a function of
//! the N reflection coefficients. Its Wirtinger gradient with respect to the
//! conjugated coefficients has a closed form because every SINR term is built
//! from traces of products of the effective covariances R_i and the estimate
//! covariances Psi_k, and the phases enter R_i only through the
//! phase-noise-weighted quadratic form H1 Theta R_IRS Theta^H H1^H.
//!
//! The objective is defined for arbitrary (non-unit-modulus) coefficients,
//! which is what lets finite differences in the free complex variables
//! cross-check the analytic gradient. The ascent itself projects every
//! iterate back onto the unit-modulus manifold.

use crate::channel::{ChannelStatistics, RbmPhases};
use crate::error::Result;
use crate::estimation::EstimatorState;
use crate::linalg::{hadamard_identity, identity, trace_re, CMat, CVec};
use crate::performance::evaluate;
use crate::scenario::Scenario;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The trace-derivative primitive: entry n is
/// tr(A dR_i/dphi_n^*) = m^2 beta_2,i [H1^H A H1 Theta R_IRS,i]_{n,n}.
fn t_vec(stats: &ChannelStatistics, rbm: &RbmPhases, i: usize, a: &CMat) -> CVec {
    let n = rbm.len();
    let m2 = stats.m_factor * stats.m_factor;
    if m2 == 0.0 {
        return CVec::zeros(n);
    }
    let g = stats.h1.adjoint() * a * &stats.h1;
    let scale = Complex64::new(m2 * stats.beta2[i], 0.0);
    CVec::from_fn(n, |row, _| {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..n {
            acc += g[(row, l)] * rbm.phi[l] * stats.r_irs[i][(l, row)];
        }
        acc * scale
    })
}

/// Derivative of tr(C Psi_k) with respect to the conjugated phases, given
/// three precomposed arguments: with QR = Q_k R_k this is
///
///   l(A, B, C) = T_k(A) + T_k(B)
///              - [T_k(C) + (kappa_UE/tau) sum_i T_i(C)
///                        + (kappa_BS/tau) sum_i T_i(diag(C))]
///
/// and tr(C dPsi_k) = l(QR C, C QR^H, QR C QR^H). The bracket is the
/// observation-covariance sensitivity propagated through the inverse.
pub fn l_function(
    stats: &ChannelStatistics,
    scenario: &Scenario,
    rbm: &RbmPhases,
    a: &CMat,
    b: &CMat,
    c: &CMat,
    k: usize,
) -> CVec {
    let tau = scenario.tau as f64;
    let mut out = t_vec(stats, rbm, k, a) + t_vec(stats, rbm, k, b) - t_vec(stats, rbm, k, c);
    let c_diag = hadamard_identity(c);
    for i in 0..scenario.k {
        out -= t_vec(stats, rbm, i, c) * Complex64::new(scenario.kappa_ue / tau, 0.0);
        out -= t_vec(stats, rbm, i, &c_diag) * Complex64::new(scenario.kappa_bs / tau, 0.0);
    }
    out
}

/// Sum spectral efficiency and its Wirtinger gradient d(sum SE)/d phi^* at
/// arbitrary (possibly off-manifold) reflection coefficients.
pub fn sum_se_gradient(
    stats: &ChannelStatistics,
    scenario: &Scenario,
    rbm: &RbmPhases,
) -> Result<(f64, CVec)> {
    let est = EstimatorState::compute(stats, scenario, rbm)?;
    let perf = evaluate(&est, scenario);
    let n = scenario.n;
    let ln2 = std::f64::consts::LN_2;
    let mut grad = CVec::zeros(n);
    for k in 0..scenario.k {
        let qr = &est.q[k] * &est.r[k];
        let d_tr_c_psi = |c: &CMat| -> CVec {
            let a = &qr * c;
            let b = c * qr.adjoint();
            let w = &a * qr.adjoint();
            l_function(stats, scenario, rbm, &a, &b, &w, k)
        };
        let rho_k = scenario.data_power[k];
        let tr_psi = trace_re(&est.psi[k]);
        let f_id = d_tr_c_psi(&identity(scenario.m));

        let s_prime = &f_id * Complex64::new(2.0 * rho_k * tr_psi, 0.0);

        // sum_i rho_i d tr(Psi_k R_i)
        let mut mui_prime = CVec::zeros(n);
        for i in 0..scenario.k {
            let rho_i = scenario.data_power[i];
            mui_prime += (d_tr_c_psi(&est.r[i]) + t_vec(stats, rbm, i, &est.psi[k]))
                * Complex64::new(rho_i, 0.0);
        }
        let coherent_mui_prime = mui_prime * Complex64::new(1.0 + scenario.kappa_ue, 0.0);

        let ue_dist_prime = &s_prime * Complex64::new(scenario.kappa_ue, 0.0);

        let psi_diag = hadamard_identity(&est.psi[k]);
        // d tr((I o Psi) Psi) = 2 tr((I o Psi) dPsi)
        let bs_coh_prime =
            d_tr_c_psi(&psi_diag) * Complex64::new(2.0 * rho_k * scenario.kappa_bs, 0.0);
        let mut bs_cross_prime = CVec::zeros(n);
        for i in 0..scenario.k {
            let rho_i = scenario.data_power[i];
            bs_cross_prime += (t_vec(stats, rbm, i, &psi_diag)
                + d_tr_c_psi(&hadamard_identity(&est.r[i])))
                * Complex64::new(rho_i, 0.0);
        }
        bs_cross_prime *= Complex64::new(scenario.kappa_bs, 0.0);

        let noise_prime = &f_id * Complex64::new(scenario.sigma2, 0.0);

        let d_prime =
            coherent_mui_prime + ue_dist_prime + bs_coh_prime + bs_cross_prime + noise_prime;
        let b = &perf.per_ue[k];
        let den = b.denominator();
        let gamma_prime = (s_prime * Complex64::new(den, 0.0)
            - d_prime * Complex64::new(b.signal, 0.0))
            * Complex64::new(1.0 / (den * den), 0.0);
        grad += gamma_prime * Complex64::new(scenario.prelog() / ((1.0 + b.gamma) * ln2), 0.0);
    }
    Ok((perf.sum_se, grad))
}

/// Projected gradient ascent settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Stop once an accepted step improves the objective by less than this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Armijo sufficient-increase fraction.
    pub ls_alpha: f64,
    /// Line-search backtracking factor.
    pub ls_beta: f64,
    /// Initial step size each iteration.
    pub mu0: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 200,
            ls_alpha: 0.3,
            ls_beta: 0.5,
            mu0: 1.0,
        }
    }
}

/// Why the ascent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerStatus {
    /// Objective improvement fell below epsilon.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// Line search could not find an improving step.
    Stalled,
    /// Gradient is (numerically) zero; phases do not affect the objective.
    ZeroGradient,
}

/// Optimization outcome: best iterate, its objective, and the per-iteration
/// objective history (index 0 is the initial point).
#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub rbm: RbmPhases,
    pub objective: f64,
    pub history: Vec<f64>,
    pub status: OptimizerStatus,
    pub iterations: usize,
}

fn project(v: &CVec) -> RbmPhases {
    let phi = CVec::from_iterator(
        v.len(),
        v.iter().map(|c| {
            let r = c.norm();
            if r > 0.0 {
                c / r
            } else {
                Complex64::new(1.0, 0.0)
            }
        }),
    );
    RbmPhases { phi }
}

const GRAD_ZERO_TOL: f64 = 1e-13;
const MU_MIN: f64 = 1e-12;

/// Maximizes the sum spectral efficiency over the reflection phases by
/// projected gradient ascent with backtracking line search, starting from
/// the all-(pi/2) configuration.
pub fn optimize_phases(
    stats: &ChannelStatistics,
    scenario: &Scenario,
    config: &OptimizerConfig,
) -> Result<OptimizerResult> {
    let mut current = RbmPhases::default_init(scenario.n);
    let (mut obj, mut grad) = sum_se_gradient(stats, scenario, &current)?;
    let mut history = vec![obj];
    for iter in 0..config.max_iters {
        let grad_norm_sq = grad.norm_squared();
        if grad_norm_sq.sqrt() <= GRAD_ZERO_TOL {
            return Ok(OptimizerResult {
                rbm: current,
                objective: obj,
                history,
                status: OptimizerStatus::ZeroGradient,
                iterations: iter,
            });
        }
        let mut mu = config.mu0;
        let mut accepted = None;
        while mu >= MU_MIN {
            let candidate = project(&(&current.phi + &grad * Complex64::new(mu, 0.0)));
            let (cand_obj, cand_grad) = sum_se_gradient(stats, scenario, &candidate)?;
            if cand_obj >= obj + config.ls_alpha * mu * grad_norm_sq {
                accepted = Some((candidate, cand_obj, cand_grad));
                break;
            }
            mu *= config.ls_beta;
        }
        let Some((candidate, cand_obj, cand_grad)) = accepted else {
            return Ok(OptimizerResult {
                rbm: current,
                objective: obj,
                history,
                status: OptimizerStatus::Stalled,
                iterations: iter,
            });
        };
        let improvement = cand_obj - obj;
        current = candidate;
        obj = cand_obj;
        grad = cand_grad;
        history.push(obj);
        if improvement < config.epsilon {
            return Ok(OptimizerResult {
                rbm: current,
                objective: obj,
                history,
                status: OptimizerStatus::Converged,
                iterations: iter + 1,
            });
        }
    }
    Ok(OptimizerResult {
        rbm: current,
        objective: obj,
        history,
        status: OptimizerStatus::MaxIters,
        iterations: config.max_iters,
    })
}

/// Finite-difference Wirtinger gradient oracle:
/// q_n = (dF/dRe + j dF/dIm) / 2 by central differences in the free complex
/// coefficients.
pub fn finite_difference_gradient(
    stats: &ChannelStatistics,
    scenario: &Scenario,
    rbm: &RbmPhases,
    step: f64,
) -> Result<CVec> {
    let n = rbm.len();
    let eval = |phi: &CVec| -> Result<f64> {
        let probe = RbmPhases { phi: phi.clone() };
        let est = EstimatorState::compute(stats, scenario, &probe)?;
        Ok(evaluate(&est, scenario).sum_se)
    };
    let mut out = CVec::zeros(n);
    for i in 0..n {
        let mut p = rbm.phi.clone();
        p[i] = rbm.phi[i] + Complex64::new(step, 0.0);
        let fp = eval(&p)?;
        p[i] = rbm.phi[i] - Complex64::new(step, 0.0);
        let fm = eval(&p)?;
        let d_re = (fp - fm) / (2.0 * step);
        p[i] = rbm.phi[i] + Complex64::new(0.0, step);
        let fp = eval(&p)?;
        p[i] = rbm.phi[i] - Complex64::new(0.0, step);
        let fm = eval(&p)?;
        let d_im = (fp - fm) / (2.0 * step);
        out[i] = Complex64::new(d_re / 2.0, d_im / 2.0);
    }
    Ok(out)
}
