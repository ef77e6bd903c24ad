use eulerspec_core::lab::OperatorReport;
use eulerspec_core::topology::{FixedPointScan, HypothesisReport};
use eulerspec_core::{DomainSpec, GapReport, IndexSet, PeriodFunction, SpectrumSet};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    /// Results assembled, but some period samples are flagged or some
    /// validation check failed.
    Partial,
    Failure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Failure => 1,
            RunStatus::Partial => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Wall time; the only field that differs between identical runs.
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSummary {
    pub domain: DomainSpec,
    pub area: f64,
    pub diameter: f64,
    pub oscillation: f64,
    pub median_speed: f64,
    /// `None` on the torus.
    pub boundary_tangency_residual: Option<f64>,
}

/// One pass/fail validation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value, threshold, passed: value < threshold, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub status: RunStatus,
    pub stages: Vec<StageRecord>,
    pub field: Option<FieldSummary>,
    pub fixed_points: Option<FixedPointScan>,
    pub index_set: Option<IndexSet>,
    #[serde(rename = "hypothesis_H")]
    pub hypothesis_h: Option<HypothesisReport>,
    pub period_functions: Option<Vec<PeriodFunction>>,
    pub spectrum: Option<SpectrumSet>,
    pub gap_report: Option<GapReport>,
    pub unit_circle: Option<bool>,
    pub operator_report: Option<OperatorReport>,
    pub checks: Vec<Check>,
    pub warnings: Vec<Warning>,
}

impl RunReport {
    pub fn flagged_samples(&self) -> usize {
        self.period_functions.iter().flatten().map(PeriodFunction::flagged_count).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// The report as JSON with every stage time zeroed, for comparing runs.
    pub fn without_timing(&self) -> serde_json::Value {
        let mut r = self.clone();
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        serde_json::to_value(r).expect("report serializes")
    }
}
