//! Explanation-quality metrics, the perturbation robustness protocol and
//! exhaustive verification of the robustness guarantees on grids.

mod antipodal;
mod perturb;
mod protocol;
mod quality;
mod verify;

pub use antipodal::{antipodal_demo, AntipodalConfig, AntipodalDemo};
pub use perturb::{perturb_same_class, trial_rng, Perturbation, PerturbationConfig};
pub use protocol::{
    robustness_protocol, write_aggregate_csv, AggregateRow, FailureRecord, InputRecord,
    ProtocolConfig, RobustnessReport, SetQuality, TrialMeasures, TrialRecord,
    REPORT_SCHEMA_VERSION,
};
pub use quality::{k_distance, k_diversity, DiversityScore};
pub use verify::{
    verify_theory, verify_theory_with, CheckResult, Counterexample, GridScenario,
    RobustnessEstimate, VerificationConfig, VerificationReport, MAX_VERIFY_POINTS,
};
