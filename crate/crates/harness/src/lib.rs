//! Reproducible experiments over `padic-tree`: identity sweeps, structure checks,
//! frame sums, operator application and the brute-force quadrature oracle.

pub mod apply;
pub mod config;
pub mod oracle;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use report::{Case, Provenance, Report};

/// Runs the named experiment.
pub fn run(experiment: &str, cfg: &ExperimentConfig) -> Result<Report, String> {
    match experiment {
        "frame-bound" => Ok(suites::run_frame_bound(cfg)),
        "identities" => Ok(suites::run_identity_suite(cfg)),
        "structure" => Ok(suites::run_structure_suite(cfg)),
        "oracle" => Ok(suites::run_oracle(cfg)),
        "apply" => apply::run_apply(cfg),
        other => Err(format!("unknown experiment {other:?}")),
    }
}
