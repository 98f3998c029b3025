//! Evidence-producing checks, their configuration and report bundles.

mod admissibility;
mod config;
mod lemmas;
mod region;
mod report;

use rayon::prelude::*;

pub use admissibility::{check_a3, choose_a_and_cbar, gain, level_function, AdmissibilityReport, Convention, ConventionCheck, LevelChoice};
pub use config::{Overrides, PotentialSpec, ProblemSpec, RunConfig};
pub use lemmas::{verify_lemma, LemmaId, Verifier};
pub use region::{
    evaluate_region, homotopy_boundary_check, homotopy_times, scan_region, LambdaRow, Piece, Region, RegionScan, Sample, ScanConfig,
};
pub use report::{limit_trend, Check, EvidenceRow, LemmaReport, ReportBundle, Status, Table};

use crate::error::Error;

/// Runs the given checks, sharing artifacts through `v`. Report order
/// follows `ids` regardless of scheduling.
pub fn run_checks(v: &Verifier, ids: &[LemmaId]) -> ReportBundle {
    v.warm();
    let reports: Vec<LemmaReport> = ids.par_iter().map(|&id| verify_lemma(id, v)).collect();
    let all_passed = reports.iter().all(LemmaReport::passed);
    ReportBundle { seed: v.cfg.seed, config: v.cfg.to_json_value(), reports, all_passed }
}

pub fn run_all(v: &Verifier) -> ReportBundle {
    run_checks(v, &LemmaId::ALL)
}

/// Process exit status for a run that stopped on `err`.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::Domain(_) | Error::Io { .. } | Error::Config(_) => 2,
        _ => 3,
    }
}

/// Exit status of a completed run.
pub fn bundle_exit_code(b: &ReportBundle) -> i32 {
    if b.all_passed {
        0
    } else {
        1
    }
}
