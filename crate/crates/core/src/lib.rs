//! Latency-minimizing semantic downlink scheduling for LEO constellations.
//!
//! Each satellite picks a compression ratio for its image and is matched to
//! one ground subcarrier. [`solve_bcd`] alternates a discrete whale search
//! over ratios ([`dwoa`]) with deferred-acceptance matching ([`matching`]).

pub mod dwoa;
pub mod error;
pub mod eval;
pub mod link;
pub mod matching;
pub mod report;
pub mod scenario;
pub mod semantic;
pub mod serde_float;
pub mod solve;

pub use dwoa::{optimize_lengths, optimize_lengths_warm, DwoaOutcome, DwoaParams};
pub use error::{Error, Result};
pub use eval::{Evaluation, LinkTable, PenaltyWeights};
pub use link::{
    average_latency, downlink_rate, free_space_snr, link_rate, satellite_latencies, transmission_latency,
    AssignmentMatrix, GroundTerminal, PhysicalConstants, SatelliteNode, SnrFormulaMode, SubcarrierChannel,
};
pub use matching::{deferred_acceptance, is_stable, MatchingOutcome, PreferenceProfile, StabilityReport};
pub use report::{export_report, ExportFormat, MethodSummary, ScenarioRun};
pub use scenario::{generate_random_scenario, load_scenario, parse_scenario, Scenario, ScenarioRanges};
pub use semantic::{
    psnr_surrogate, transmitted_length, CompressionRatio, CompressionRatioSet, LengthVector, PsnrCalibration,
};
pub use solve::{
    baseline_matching_only, baseline_only_whale, baseline_random, brute_force_oracle, solve_bcd, solve_bcd_with,
    solve_method, BcdOptions, Method, SolutionReport,
};
