//! Closed-loop experiments: a perturbed plant driven by MPC or a rule-based
//! baseline, scored with the horizon objective terms.

mod closed_loop;
mod config;
mod metrics;
mod rbc;
mod report;
mod uncertainty;

pub use closed_loop::{load_inputs, prepare, run_batch, run_scenario, PreparedScenario};
pub use config::{ControllerConfig, ControllerKind, ScenarioConfig, TimeScales};
pub use metrics::{compute_metrics, compute_metrics_from, MetricWeights, Metrics};
pub use rbc::{deviation, rbc_control, Rule, RuleTable};
pub use report::{export_report, ControlRecord, Recovery, Sample, ScenarioReport};
pub use uncertainty::{apply_uncertainty, DisturbanceEvent, PlantInputs, UncertaintySpec};
