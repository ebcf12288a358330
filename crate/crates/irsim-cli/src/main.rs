//! Single-binary command surface for the irsim library.
//!
//! Subcommands: `validate` (parse and check a scenario file), `stats` (build
//! and cache channel statistics), `evaluate` (closed-form SINR/SE), `optimize`
//! (projected-gradient phase optimization), `validate-mc` (Monte-Carlo
//! validation of the closed forms), and `sweep` (parameter sweeps to tidy
//! CSV).
//!
//! Every run prints a machine-readable `key=value` metrics block on stdout;
//! progress notes go to stderr and are silenced by `--quiet`. Output files
//! are written atomically (temp file + rename). Exit codes: 2 for config
//! parse/validation errors, 3 for numeric failures (the message names the
//! failing computation), 1 for I/O problems.
//!
//! The sweep and Monte-Carlo workers run data-parallel; set
//! `RAYON_NUM_THREADS` to bound the worker count.

mod cache;

use clap::{Args, Parser, Subcommand};
use irsim::channel::RbmPhases;
use irsim::estimation::EstimatorState;
use irsim::performance::evaluate;
use irsim::scenario::{linear_to_db, Scenario, ScenarioConfig};
use irsim::{
    mc_nmse, mc_sinr_terms_opts, optimize_phases, McOptions, OptimizerConfig, OptimizerStatus,
    SamplingModel, SweepSpec,
};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "irsim",
    version,
    about = "IRS-assisted MU-MISO uplink simulator with hardware impairments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; flags that a subcommand does not use
/// are rejected only by their own documentation, not by the parser.
#[derive(Args, Clone)]
struct Common {
    /// Scenario file (sweep spec file for `sweep`)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, written atomically
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Monte-Carlo trial count
    #[arg(long)]
    trials: Option<u64>,
    /// Optimize the reflection phases before evaluating
    #[arg(long)]
    optimize: bool,
    /// Evaluate with zero estimation error (Psi_k = R_k)
    #[arg(long)]
    perfect_csi: bool,
    /// Suppress progress notes on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and check every invariant
    Validate(Common),
    /// Build the channel statistics, caching them by content hash
    Stats(Common),
    /// Closed-form SINR breakdown and sum spectral efficiency
    Evaluate(Common),
    /// Projected gradient ascent over the reflection phases
    Optimize(Common),
    /// Monte-Carlo validation of the closed-form SINR terms or the NMSE
    ValidateMc {
        #[command(flatten)]
        common: Common,
        /// Physically composed channel draws instead of the analytic
        /// surrogate distribution
        #[arg(long)]
        physical: bool,
        /// Validate the channel-estimation NMSE instead of the SINR terms
        #[arg(long)]
        nmse: bool,
    },
    /// Run a parameter sweep and emit tidy CSV
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &irsim::Error) -> u8 {
    use irsim::Error::*;
    match e {
        InvalidScenario(_) | ConfigParse(_) => 2,
        DimensionMismatch { .. } | NotPsd { .. } | Singular { .. } | Numeric { .. } => 3,
        Io(_) => 1,
    }
}

fn dispatch(command: Command) -> irsim::Result<u8> {
    match command {
        Command::Validate(c) => cmd_validate(&c),
        Command::Stats(c) => cmd_stats(&c),
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Optimize(c) => cmd_optimize(&c),
        Command::ValidateMc {
            common,
            physical,
            nmse,
        } => cmd_validate_mc(&common, physical, nmse),
        Command::Sweep(c) => cmd_sweep(&c),
    }
}

/// Loads and builds the scenario, applying the seed override and anchoring
/// parse errors to the config path.
fn load_scenario(common: &Common) -> irsim::Result<(ScenarioConfig, Scenario)> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = ScenarioConfig::from_toml(&text).map_err(|e| anchor(&common.config, e))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let sc = cfg.build().map_err(|e| anchor(&common.config, e))?;
    Ok((cfg, sc))
}

/// Prefixes a config-stage error with the file it came from; TOML errors
/// already carry line/column positions.
fn anchor(path: &std::path::Path, e: irsim::Error) -> irsim::Error {
    match e {
        irsim::Error::ConfigParse(msg) => {
            irsim::Error::ConfigParse(format!("{}: {msg}", path.display()))
        }
        irsim::Error::InvalidScenario(msg) => {
            irsim::Error::InvalidScenario(format!("{}: {msg}", path.display()))
        }
        other => other,
    }
}

fn note(common: &Common, msg: &str) {
    if !common.quiet {
        eprintln!("{msg}");
    }
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key}={value}").expect("string write");
}

fn kvf(out: &mut String, key: &str, value: f64) {
    writeln!(out, "{key}={value:.12e}").expect("string write");
}

fn phase_noise_label(sc: &Scenario) -> String {
    use irsim::PhaseNoiseModel::*;
    match sc.phase_noise {
        None => "none".into(),
        Uniform => "uniform".into(),
        VonMises { kappa } => format!("von_mises(kappa={kappa})"),
    }
}

fn cmd_validate(common: &Common) -> irsim::Result<u8> {
    let (_, sc) = load_scenario(common)?;
    let mut out = String::new();
    kv(&mut out, "config", common.config.display());
    kv(&mut out, "m", sc.m);
    kv(&mut out, "n", sc.n);
    kv(&mut out, "k", sc.k);
    kv(&mut out, "tau", sc.tau);
    kv(&mut out, "tau_c", sc.tau_c);
    kvf(&mut out, "pilot_power_dbm", linear_to_db(sc.pilot_power));
    kvf(&mut out, "sigma2_dbm", linear_to_db(sc.sigma2));
    kvf(&mut out, "kappa_bs", sc.kappa_bs);
    kvf(&mut out, "kappa_ue", sc.kappa_ue);
    kv(&mut out, "phase_noise", phase_noise_label(&sc));
    kv(&mut out, "seed", sc.seed);
    kv(&mut out, "status", "ok");
    print!("{out}");
    Ok(0)
}

fn cmd_stats(common: &Common) -> irsim::Result<u8> {
    let (_, sc) = load_scenario(common)?;
    let (stats, key, hit) = cache::load_or_build(&sc)?;
    note(
        common,
        &format!("statistics {} (cache {})", key, if hit { "hit" } else { "miss" }),
    );
    if let Some(out_path) = &common.out {
        let text = serde_json::to_string_pretty(&stats)
            .map_err(|e| irsim::Error::Io(std::io::Error::other(e.to_string())))?;
        cache::atomic_write(out_path, text.as_bytes())?;
        note(common, &format!("wrote {}", out_path.display()));
    }
    let mut out = String::new();
    kv(&mut out, "stats_key", &key);
    kv(&mut out, "cache", if hit { "hit" } else { "miss" });
    kv(
        &mut out,
        "cache_path",
        cache::cache_dir().join(format!("{key}.json")).display(),
    );
    kvf(&mut out, "m_factor", stats.m_factor);
    kvf(&mut out, "beta1", stats.beta1);
    for k in 0..sc.k {
        kvf(&mut out, &format!("ue.{k}.beta2"), stats.beta2[k]);
        kvf(&mut out, &format!("ue.{k}.beta_d"), stats.beta_d[k]);
    }
    print!("{out}");
    Ok(0)
}

/// Reflection phases for an evaluation: optimized when requested, the
/// default initialization otherwise.
fn choose_rbm(
    common: &Common,
    stats: &irsim::ChannelStatistics,
    sc: &Scenario,
) -> irsim::Result<(RbmPhases, Option<usize>)> {
    if common.optimize {
        let result = optimize_phases(stats, sc, &OptimizerConfig::default())?;
        note(
            common,
            &format!(
                "phase optimization: {:?} after {} iterations",
                result.status, result.iterations
            ),
        );
        Ok((result.rbm, Some(result.iterations)))
    } else {
        Ok((RbmPhases::default_init(sc.n), None))
    }
}

fn cmd_evaluate(common: &Common) -> irsim::Result<u8> {
    let (_, sc) = load_scenario(common)?;
    let (stats, _, _) = cache::load_or_build(&sc)?;
    let (rbm, iterations) = choose_rbm(common, &stats, &sc)?;
    let est = if common.perfect_csi {
        EstimatorState::perfect(stats.effective_covariances(&rbm)?)
    } else {
        EstimatorState::compute(&stats, &sc, &rbm)?
    };
    let perf = evaluate(&est, &sc);

    let mut out = String::new();
    kvf(&mut out, "sum_se", perf.sum_se);
    let nmse = est.nmse_all();
    kvf(&mut out, "nmse_mean", nmse.iter().sum::<f64>() / sc.k as f64);
    kv(&mut out, "optimized", common.optimize);
    if let Some(iters) = iterations {
        kv(&mut out, "opt_iterations", iters);
    }
    for (k, b) in perf.per_ue.iter().enumerate() {
        kvf(&mut out, &format!("ue.{k}.gamma"), b.gamma);
        kvf(&mut out, &format!("ue.{k}.se"), b.se);
        kvf(&mut out, &format!("ue.{k}.nmse"), nmse[k]);
    }
    print!("{out}");

    if let Some(out_path) = &common.out {
        let mut csv = String::from(
            "ue,gamma,se,nmse,signal,coherent_mui,ue_distortion,bs_distortion_coherent,bs_distortion_cross,noise\n",
        );
        for (k, b) in perf.per_ue.iter().enumerate() {
            writeln!(
                csv,
                "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                b.gamma,
                b.se,
                nmse[k],
                b.signal,
                b.coherent_mui,
                b.ue_distortion,
                b.bs_distortion_coherent,
                b.bs_distortion_cross,
                b.noise
            )
            .expect("string write");
        }
        cache::atomic_write(out_path, csv.as_bytes())?;
        note(common, &format!("wrote {}", out_path.display()));
    }
    Ok(0)
}

fn cmd_optimize(common: &Common) -> irsim::Result<u8> {
    let (_, sc) = load_scenario(common)?;
    let (stats, _, _) = cache::load_or_build(&sc)?;
    let result = optimize_phases(&stats, &sc, &OptimizerConfig::default())?;

    let mut out = String::new();
    let status = match result.status {
        OptimizerStatus::Converged => "converged",
        OptimizerStatus::MaxIters => "max_iterations",
        OptimizerStatus::Stalled => "stalled",
        OptimizerStatus::ZeroGradient => "zero_gradient",
    };
    kv(&mut out, "status", status);
    kv(&mut out, "iterations", result.iterations);
    kvf(&mut out, "initial_sum_se", result.history[0]);
    kvf(&mut out, "sum_se", result.objective);
    print!("{out}");
    if result.status == OptimizerStatus::ZeroGradient {
        note(
            common,
            &format!(
                "zero gradient detected at iteration {}; the phases do not affect the objective",
                result.iterations + 1
            ),
        );
    }

    if let Some(out_path) = &common.out {
        let mut csv = String::from("element,phase_rad\n");
        for (n, phi) in result.rbm.phi.iter().enumerate() {
            writeln!(csv, "{n},{:.12e}", phi.arg()).expect("string write");
        }
        cache::atomic_write(out_path, csv.as_bytes())?;
        note(common, &format!("wrote {}", out_path.display()));
    }
    Ok(0)
}

fn cmd_validate_mc(common: &Common, physical: bool, nmse_mode: bool) -> irsim::Result<u8> {
    let (_, sc) = load_scenario(common)?;
    let (stats, _, _) = cache::load_or_build(&sc)?;
    let (rbm, _) = choose_rbm(common, &stats, &sc)?;
    let trials = common.trials.unwrap_or(10_000);
    note(common, &format!("running {trials} trials"));

    let report = if nmse_mode {
        mc_nmse(&stats, &rbm, &sc, trials)?
    } else {
        let opts = McOptions {
            perfect_csi: common.perfect_csi,
            sampling: if physical {
                SamplingModel::Physical
            } else {
                SamplingModel::Analytic
            },
        };
        mc_sinr_terms_opts(&stats, &rbm, &sc, trials, opts)?
    };

    let mut out = String::new();
    kv(&mut out, "trials", report.trials);
    // the NMSE validator always uses the physically composed draws
    let sampling = if nmse_mode || physical {
        "physical"
    } else {
        "analytic"
    };
    kv(&mut out, "sampling", sampling);
    kvf(&mut out, "max_rel_err", report.max_rel_err());
    for u in &report.per_ue {
        kvf(&mut out, &format!("ue.{}.gamma_closed", u.ue), u.gamma_closed);
        kvf(&mut out, &format!("ue.{}.gamma_mc", u.ue), u.gamma_mc);
        kvf(&mut out, &format!("ue.{}.se_closed", u.ue), u.se_closed);
        kvf(&mut out, &format!("ue.{}.se_mc", u.ue), u.se_mc);
    }
    print!("{out}");

    if let Some(out_path) = &common.out {
        cache::atomic_write(out_path, report.to_csv().as_bytes())?;
        note(common, &format!("wrote {}", out_path.display()));
    }
    Ok(0)
}

fn cmd_sweep(common: &Common) -> irsim::Result<u8> {
    let mut spec = SweepSpec::load(&common.config).map_err(|e| anchor(&common.config, e))?;
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    if let Some(seed) = common.seed {
        if let Some(sc) = spec.scenario.as_mut() {
            sc.seed = seed;
        }
    }
    note(
        common,
        &format!(
            "sweeping {} over {} values",
            spec.axis.name(),
            spec.values.len()
        ),
    );
    let result = irsim::run_sweep(&spec)?;
    let csv = result.to_csv();
    match &common.out {
        Some(out_path) => {
            cache::atomic_write(out_path, csv.as_bytes())?;
            note(common, &format!("wrote {}", out_path.display()));
        }
        None => print!("{csv}"),
    }
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    let mut out = String::new();
    kv(&mut out, "points", result.rows.len());
    kv(&mut out, "failed_points", failed);
    if common.out.is_some() {
        print!("{out}");
    } else {
        eprint!("{out}");
    }
    if failed > 0 {
        eprintln!("error: {failed} sweep point(s) failed; see the error column");
        return Ok(3);
    }
    Ok(0)
}
