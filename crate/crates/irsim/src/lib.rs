//! Analytic performance model and Monte-Carlo validator for an uplink
//! multi-user MISO system assisted by an intelligent reflecting surface with
//! hardware impairments: transceiver distortion at both ends and phase noise
//! on the reflecting elements.
//!
//! The library builds channel statistics from a scenario description, runs
//! linear MMSE channel estimation under impaired training, evaluates a
//! use-and-then-forget ergodic rate bound in closed form, optimizes the
//! reflection phases by projected gradient ascent, and cross-checks the
//! closed form against brute-force channel simulation.

pub mod channel;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod math;
pub mod montecarlo;
pub mod optimizer;
pub mod parallel;
pub mod performance;
pub mod scenario;
pub mod sweeps;

pub use channel::{ChannelDraw, ChannelStatistics, RbmPhases};
pub use error::{Error, Result};
pub use estimation::EstimatorState;
pub use montecarlo::{mc_nmse, mc_sinr_terms, mc_sinr_terms_opts, McOptions, McReport, SamplingModel};
pub use optimizer::{optimize_phases, OptimizerConfig, OptimizerResult, OptimizerStatus};
pub use performance::{Performance, SinrBreakdown};
pub use scenario::{PhaseNoiseModel, Scenario, ScenarioConfig};
pub use sweeps::{run_sweep, SweepResult, SweepSpec};
