//! Sampling-based oracle for the closed-form SINR terms and the NMSE.
//!
//! Reconstructs every expectation behind the rate bound from raw draws: each
//! trial produces channels and a training observation, forms the LMMSE
//! estimate and the MR combiner v_k, and accumulates the per-term statistics.
//! The transmit/receive distortions of the data phase are integrated
//! analytically conditioned on the drawn channels (their conditional second
//! moments are known exactly), which removes a layer of simulation noise
//! without biasing any expectation.
//!
//! Two sampling models are offered. The analytic model draws channels and
//! observation noise exactly from the distribution the closed form assumes
//! (independent Gaussian channels at the effective covariances), so every
//! term estimate converges to its closed form and the validator checks the
//! trace algebra by brute force. The physical model composes the cascaded
//! and direct channel components with a shared per-trial phase-noise
//! realization and simulates the impaired training chain; it quantifies how
//! far the real channel distribution is from the Gaussian surrogate the
//! bound is evaluated on.

use crate::channel::{sample_draw, ChannelStatistics, RbmPhases};
use crate::error::{Error, Result};
use crate::estimation::{training_observations, EstimatorState};
use crate::linalg::{
    hadamard_identity, hermitian_sqrt, identity, trace_product_re, trace_re, CMat, CVec,
};
use crate::math::complex_gaussian;
use crate::parallel::map_trials;
use crate::performance::sinr_breakdown;
use crate::scenario::Scenario;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One validated expectation: its closed-form value and the matching
/// empirical estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermEstimate {
    pub name: String,
    pub ue: usize,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// |mc_mean - closed_form| / |closed_form| (infinite if the closed form
    /// is zero and the estimate is not).
    pub rel_err: f64,
}

/// Per-UE SINR/SE from the empirical term estimates next to the closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UeEstimate {
    pub ue: usize,
    pub gamma_mc: f64,
    pub gamma_closed: f64,
    pub se_mc: f64,
    pub se_closed: f64,
}

/// Full validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub trials: u64,
    pub terms: Vec<TermEstimate>,
    pub per_ue: Vec<UeEstimate>,
}

impl McReport {
    /// Worst per-term relative error.
    pub fn max_rel_err(&self) -> f64 {
        self.terms.iter().map(|t| t.rel_err).fold(0.0, f64::max)
    }

    /// Tidy CSV rendering, one row per term.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,ue,closed_form,mc_mean,mc_stderr,rel_err,trials\n");
        for t in &self.terms {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.6e},{}\n",
                t.name, t.ue, t.closed_form, t.mc_mean, t.mc_stderr, t.rel_err, self.trials
            ));
        }
        out
    }
}

fn rel_err(mc: f64, closed: f64) -> f64 {
    if closed == 0.0 {
        if mc == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mc - closed).abs() / closed.abs()
    }
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-trial raw statistics for one UE pair structure.
struct TrialStats {
    /// v_k^H h_k per UE.
    a: Vec<Complex64>,
    /// |v_k^H h_i|^2 per (k, i), flattened row-major.
    b: Vec<f64>,
    /// Receive-distortion quadratic form kappa_BS sum_i rho_i sum_m
    /// |v_km|^2 |h_im|^2 per UE.
    c: Vec<f64>,
    /// ||v_k||^2 per UE.
    d: Vec<f64>,
    /// ||hhat_k - h_k||^2 and ||h_k||^2 per UE.
    err_sq: Vec<f64>,
    h_sq: Vec<f64>,
}

/// How the validator draws its per-trial realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingModel {
    /// Independent Gaussian channels at the effective covariances, with the
    /// training observation formed as the channel plus independent Gaussian
    /// noise at its exact aggregate covariance Q_k^{-1} - R_k. This is the
    /// distributional model the closed form is an expectation over.
    Analytic,
    /// Fully composed channels (cascaded plus direct component, one shared
    /// phase-noise realization per trial) and a simulated impaired training
    /// chain. Phase noise makes the channels a Gaussian mixture coupled
    /// across UEs, so some term estimates carry a small model gap relative
    /// to the closed form.
    Physical,
}

/// Options for [`mc_sinr_terms_opts`].
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    /// Use the true channel as the combiner instead of the LMMSE estimate.
    pub perfect_csi: bool,
    pub sampling: SamplingModel,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            perfect_csi: false,
            sampling: SamplingModel::Analytic,
        }
    }
}

fn run_trials(
    stats: &ChannelStatistics,
    rbm: &RbmPhases,
    scenario: &Scenario,
    est: &EstimatorState,
    trials: u64,
    opts: McOptions,
) -> Vec<TrialStats> {
    // square roots for the analytic sampler: channels and the aggregate
    // observation noise e_k ~ CN(0, Q_k^{-1} - R_k), the latter shared
    // across UEs because orthogonal pilots see the same impairment budget
    let (r_sqrt, noise_sqrt) = if opts.sampling == SamplingModel::Analytic {
        let m = scenario.m;
        let tau = scenario.tau as f64;
        let r_sqrt: Vec<CMat> = est.r.iter().map(hermitian_sqrt).collect();
        let mut noise_cov = CMat::zeros(m, m);
        for ri in &est.r {
            noise_cov += ri * Complex64::new(scenario.kappa_ue / tau, 0.0);
            noise_cov += hadamard_identity(ri) * Complex64::new(scenario.kappa_bs / tau, 0.0);
        }
        noise_cov += identity(m) * Complex64::new(
            scenario.sigma2 / (tau * scenario.pilot_power),
            0.0,
        );
        (r_sqrt, hermitian_sqrt(&noise_cov))
    } else {
        (Vec::new(), CMat::zeros(0, 0))
    };
    map_trials(trials, |t| {
        let mut rng = scenario.trial_rng(t);
        let k_ues = scenario.k;
        let (h, obs) = match opts.sampling {
            SamplingModel::Physical => {
                let draw = sample_draw(stats, rbm, scenario, &mut rng);
                let obs = training_observations(scenario, &draw, &mut rng);
                (draw.h, obs)
            }
            SamplingModel::Analytic => {
                let m = scenario.m;
                let mut h = Vec::with_capacity(k_ues);
                let mut obs = Vec::with_capacity(k_ues);
                for rs in r_sqrt.iter() {
                    let z = CVec::from_fn(m, |_, _| complex_gaussian(&mut rng));
                    let w = CVec::from_fn(m, |_, _| complex_gaussian(&mut rng));
                    let hk = rs * z;
                    let rk = &hk + &noise_sqrt * w;
                    h.push(hk);
                    obs.push(rk);
                }
                (h, obs)
            }
        };
        let mut a = Vec::with_capacity(k_ues);
        let mut b = Vec::with_capacity(k_ues * k_ues);
        let mut c = Vec::with_capacity(k_ues);
        let mut d = Vec::with_capacity(k_ues);
        let mut err_sq = Vec::with_capacity(k_ues);
        let mut h_sq = Vec::with_capacity(k_ues);
        for k in 0..k_ues {
            let hhat = est.estimate(k, &obs[k]);
            let v = if opts.perfect_csi {
                h[k].clone()
            } else {
                hhat.clone()
            };
            a.push(v.dotc(&h[k]));
            for hi in h.iter() {
                b.push(v.dotc(hi).norm_sqr());
            }
            let mut quad = 0.0;
            for (hi, &rho_i) in h.iter().zip(scenario.data_power.iter()) {
                let mut s = 0.0;
                for m in 0..scenario.m {
                    s += v[m].norm_sqr() * hi[m].norm_sqr();
                }
                quad += rho_i * s;
            }
            c.push(scenario.kappa_bs * quad);
            d.push(v.norm_squared());
            err_sq.push((&h[k] - &hhat).norm_squared());
            h_sq.push(h[k].norm_squared());
        }
        TrialStats {
            a,
            b,
            c,
            d,
            err_sq,
            h_sq,
        }
    })
}

/// Empirically reconstructs every SINR term of the rate bound and pairs it
/// with its closed form.
pub fn mc_sinr_terms(
    stats: &ChannelStatistics,
    rbm: &RbmPhases,
    scenario: &Scenario,
    trials: u64,
) -> Result<McReport> {
    mc_sinr_terms_opts(stats, rbm, scenario, trials, McOptions::default())
}

/// As [`mc_sinr_terms`], with a choice of sampling model and the option of a
/// perfect-CSI combiner v_k = h_k.
pub fn mc_sinr_terms_opts(
    stats: &ChannelStatistics,
    rbm: &RbmPhases,
    scenario: &Scenario,
    trials: u64,
    opts: McOptions,
) -> Result<McReport> {
    if trials < 100 {
        return Err(Error::InvalidScenario(format!(
            "Monte-Carlo validation needs at least 100 trials, got {trials}"
        )));
    }
    let est = if opts.perfect_csi {
        EstimatorState::perfect(stats.effective_covariances(rbm)?)
    } else {
        EstimatorState::compute(stats, scenario, rbm)?
    };
    let raw = run_trials(stats, rbm, scenario, &est, trials, opts);
    let k_ues = scenario.k;
    let nt = trials as usize;
    let mut terms = Vec::new();
    let mut per_ue = Vec::new();
    for k in 0..k_ues {
        let closed = sinr_breakdown(&est, scenario, k);
        let rho_k = scenario.data_power[k];
        let tr_psi = trace_re(&est.psi[k]);

        // desired signal: rho_k |E[v^H h_k]|^2
        let a_mean = raw.iter().map(|t| t.a[k]).sum::<Complex64>() / nt as f64;
        let ds_mc = rho_k * a_mean.norm_sqr();
        let ds_closed = rho_k * tr_psi * tr_psi;
        // delta-method stderr: project the per-trial a on the mean direction
        let dir = if a_mean.norm() > 0.0 {
            a_mean / a_mean.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let proj: Vec<f64> = raw.iter().map(|t| (t.a[k] * dir.conj()).re).collect();
        let (_, proj_se) = mean_stderr(&proj);
        let ds_se = rho_k * 2.0 * a_mean.norm() * proj_se;
        terms.push(TermEstimate {
            name: "ds".into(),
            ue: k,
            closed_form: ds_closed,
            mc_mean: ds_mc,
            mc_stderr: ds_se,
            rel_err: rel_err(ds_mc, ds_closed),
        });

        // beamforming uncertainty: rho_k (E|v^H h_k|^2 - |E v^H h_k|^2)
        let bkk: Vec<f64> = raw.iter().map(|t| t.b[k * k_ues + k]).collect();
        let (bkk_mean, bkk_se) = mean_stderr(&bkk);
        let bu_mc = rho_k * (bkk_mean - a_mean.norm_sqr());
        let bu_closed = rho_k * trace_product_re(&est.psi[k], &est.r[k]);
        let bu_se = rho_k * (bkk_se * bkk_se + (2.0 * a_mean.norm() * proj_se).powi(2)).sqrt();
        terms.push(TermEstimate {
            name: "bu".into(),
            ue: k,
            closed_form: bu_closed,
            mc_mean: bu_mc,
            mc_stderr: bu_se,
            rel_err: rel_err(bu_mc, bu_closed),
        });

        // multi-user interference, one row per interferer
        let mut mui_mc_total = 0.0;
        let mut mui_closed_total = 0.0;
        for i in 0..k_ues {
            if i == k {
                continue;
            }
            let bi: Vec<f64> = raw.iter().map(|t| t.b[k * k_ues + i]).collect();
            let (bi_mean, bi_se) = mean_stderr(&bi);
            let rho_i = scenario.data_power[i];
            let mc = rho_i * bi_mean;
            let cf = rho_i * trace_product_re(&est.psi[k], &est.r[i]);
            mui_mc_total += mc;
            mui_closed_total += cf;
            terms.push(TermEstimate {
                name: format!("mui_{i}"),
                ue: k,
                closed_form: cf,
                mc_mean: mc,
                mc_stderr: rho_i * bi_se,
                rel_err: rel_err(mc, cf),
            });
        }

        // UE transmit distortion: kappa_UE sum_i rho_i E|v^H h_i|^2
        let td: Vec<f64> = raw
            .iter()
            .map(|t| {
                scenario.kappa_ue
                    * (0..k_ues)
                        .map(|i| scenario.data_power[i] * t.b[k * k_ues + i])
                        .sum::<f64>()
            })
            .collect();
        let (td_mc, td_se) = mean_stderr(&td);
        let td_closed =
            scenario.kappa_ue * (rho_k * tr_psi * tr_psi + mui_closed_total + bu_closed);
        if scenario.kappa_ue > 0.0 {
            terms.push(TermEstimate {
                name: "td".into(),
                ue: k,
                closed_form: td_closed,
                mc_mean: td_mc,
                mc_stderr: td_se,
                rel_err: rel_err(td_mc, td_closed),
            });
        }

        // BS receive distortion
        let rd: Vec<f64> = raw.iter().map(|t| t.c[k]).collect();
        let (rd_mc, rd_se) = mean_stderr(&rd);
        let diag_psi = hadamard_identity(&est.psi[k]);
        let rd_closed = scenario.kappa_bs
            * (rho_k * trace_product_re(&diag_psi, &est.psi[k])
                + (0..k_ues)
                    .map(|i| {
                        scenario.data_power[i]
                            * trace_product_re(&hadamard_identity(&est.r[i]), &est.psi[k])
                    })
                    .sum::<f64>());
        if scenario.kappa_bs > 0.0 {
            terms.push(TermEstimate {
                name: "rd".into(),
                ue: k,
                closed_form: rd_closed,
                mc_mean: rd_mc,
                mc_stderr: rd_se,
                rel_err: rel_err(rd_mc, rd_closed),
            });
        }

        // receiver noise: sigma^2 E||v||^2
        let rn: Vec<f64> = raw.iter().map(|t| scenario.sigma2 * t.d[k]).collect();
        let (rn_mc, rn_se) = mean_stderr(&rn);
        let rn_closed = scenario.sigma2 * tr_psi;
        terms.push(TermEstimate {
            name: "rn".into(),
            ue: k,
            closed_form: rn_closed,
            mc_mean: rn_mc,
            mc_stderr: rn_se,
            rel_err: rel_err(rn_mc, rn_closed),
        });

        let denom_mc = bu_mc + mui_mc_total + td_mc + rd_mc + rn_mc;
        let gamma_mc = ds_mc / denom_mc;
        let se_mc = scenario.prelog() * (1.0 + gamma_mc).log2();
        per_ue.push(UeEstimate {
            ue: k,
            gamma_mc,
            gamma_closed: closed.gamma,
            se_mc,
            se_closed: closed.se,
        });
    }
    Ok(McReport {
        trials,
        terms,
        per_ue,
    })
}

/// Empirical NMSE per UE with its standard error, paired with the closed
/// form 1 - tr(Psi_k)/tr(R_k).
pub fn mc_nmse(
    stats: &ChannelStatistics,
    rbm: &RbmPhases,
    scenario: &Scenario,
    trials: u64,
) -> Result<McReport> {
    if trials < 100 {
        return Err(Error::InvalidScenario(format!(
            "Monte-Carlo validation needs at least 100 trials, got {trials}"
        )));
    }
    let est = EstimatorState::compute(stats, scenario, rbm)?;
    // the NMSE is a pure second-moment quantity, which the physically
    // composed draws reproduce exactly, so validate the full pipeline
    let opts = McOptions {
        perfect_csi: false,
        sampling: SamplingModel::Physical,
    };
    let raw = run_trials(stats, rbm, scenario, &est, trials, opts);
    let nt = trials as usize;
    let mut terms = Vec::new();
    for k in 0..scenario.k {
        let num: Vec<f64> = raw.iter().map(|t| t.err_sq[k]).collect();
        let den: Vec<f64> = raw.iter().map(|t| t.h_sq[k]).collect();
        let num_mean = num.iter().sum::<f64>() / nt as f64;
        let den_mean = den.iter().sum::<f64>() / nt as f64;
        let ratio = num_mean / den_mean;
        // ratio-estimator stderr via the linearized residuals
        let resid: Vec<f64> = num
            .iter()
            .zip(den.iter())
            .map(|(n, d)| (n - ratio * d) / den_mean)
            .collect();
        let (_, se) = mean_stderr(&resid);
        let closed = est.nmse(k);
        terms.push(TermEstimate {
            name: "nmse".into(),
            ue: k,
            closed_form: closed,
            mc_mean: ratio,
            mc_stderr: se,
            rel_err: rel_err(ratio, closed),
        });
    }
    Ok(McReport {
        trials,
        terms,
        per_ue: Vec::new(),
    })
}
