//! Serializable report documents emitted by the command-line front end.
//!
//! Schedule reports follow a fixed JSON shape: cost breakdown, per-machine
//! intervals, an assignment list with exact `num/den` amounts (null for
//! skeleton-only results), plus optional guarantee, LP-trace and
//! infeasibility-certificate sections. JSON reports round-trip through
//! serde.

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::feasibility::DeficiencyCertificate;
use crate::lp::{FractionalSolution, RoundingTrace};
use crate::model::{ActiveInterval, Assignment, CostBreakdown, Schedule, Time};
use crate::multi::MultiSkeleton;

/// Exact rational as `"num/den"`.
pub fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub job: usize,
    pub slot: Time,
    pub amount: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSection {
    pub intervals: Vec<ActiveInterval>,
    pub value: i64,
}

impl From<&DeficiencyCertificate> for CertificateSection {
    fn from(cert: &DeficiencyCertificate) -> Self {
        CertificateSection { intervals: cert.intervals.clone(), value: cert.value }
    }
}

/// Oracle comparison: achieved cost against the algorithm's proven bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeSection {
    pub opt: i64,
    pub volume: i64,
    pub q_min: i64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Exact per-stage costs of the LP rounding pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSection {
    pub lp_value: String,
    pub cost_f1: String,
    pub cost_f2: String,
    pub cost_f3: String,
    pub extension_steps: i64,
}

impl From<&RoundingTrace> for LpSection {
    fn from(trace: &RoundingTrace) -> Self {
        LpSection {
            lp_value: rational_str(&trace.lp_value),
            cost_f1: rational_str(&trace.cost_f1),
            cost_f2: rational_str(&trace.cost_f2),
            cost_f3: rational_str(&trace.cost_f3),
            extension_steps: trace.extension_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub algorithm: String,
    pub cost: CostBreakdown,
    pub machines: Vec<Vec<ActiveInterval>>,
    /// `null` for skeleton-only results
    pub assignment: Option<Vec<AssignmentEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_certificate: Option<CertificateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<GuaranteeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp: Option<LpSection>,
}

impl ScheduleReport {
    pub fn from_schedule(algorithm: &str, schedule: &Schedule) -> Self {
        let mut entries: Vec<AssignmentEntry> = schedule
            .assignment
            .slots
            .iter()
            .flat_map(|(&job, slots)| {
                slots.iter().map(move |&slot| AssignmentEntry {
                    job,
                    slot,
                    amount: "1/1".to_string(),
                })
            })
            .collect();
        entries.sort_by_key(|e| (e.job, e.slot));
        ScheduleReport {
            algorithm: algorithm.to_string(),
            cost: schedule.cost,
            machines: schedule.machines.clone(),
            assignment: Some(entries),
            bound_certificate: None,
            guarantee: None,
            lp: None,
        }
    }

    /// Skeleton-only report: one machine row per level, `assignment: null`.
    pub fn from_multi_skeleton(algorithm: &str, skeleton: &MultiSkeleton, wake_cost: i64) -> Self {
        let machines: Vec<Vec<ActiveInterval>> =
            skeleton.levels.iter().map(|s| s.intervals.clone()).collect();
        let active = machines.iter().flatten().map(ActiveInterval::len).sum();
        let wakeups = machines.iter().flatten().count() as i64;
        ScheduleReport {
            algorithm: algorithm.to_string(),
            cost: CostBreakdown::new(active, wakeups, wake_cost),
            machines,
            assignment: None,
            bound_certificate: None,
            guarantee: None,
            lp: None,
        }
    }

    /// Rebuilds the integral assignment from the report entries, if any.
    pub fn to_assignment(&self) -> Option<Assignment> {
        let entries = self.assignment.as_ref()?;
        let mut asg = Assignment::default();
        for e in entries {
            if e.amount != "1/1" {
                return None;
            }
            asg.assign(e.job, e.slot);
        }
        asg.normalize();
        Some(asg)
    }
}

/// The exact fractional LP optimum, emitted by `solve --lp-only`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalReport {
    pub lp_value: String,
    pub x: Vec<WeightedInterval>,
    pub f: Vec<AssignmentEntry>,
    pub m_t: Vec<String>,
    pub y_t: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedInterval {
    pub start: Time,
    pub end: Time,
    pub weight: String,
}

impl From<&FractionalSolution> for FractionalReport {
    fn from(sol: &FractionalSolution) -> Self {
        FractionalReport {
            lp_value: rational_str(&sol.value),
            x: sol
                .x
                .iter()
                .map(|(iv, w)| WeightedInterval {
                    start: iv.start,
                    end: iv.end,
                    weight: rational_str(w),
                })
                .collect(),
            f: sol
                .f
                .iter()
                .map(|(&(job, slot), amount)| AssignmentEntry {
                    job,
                    slot,
                    amount: rational_str(amount),
                })
                .collect(),
            m_t: sol.m_t.iter().map(rational_str).collect(),
            y_t: sol.y_t.iter().map(rational_str).collect(),
        }
    }
}

/// One row of the `report` comparison table; stable column order
/// `instance, algorithm, cost, opt, ratio, runtime_ms, status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance: String,
    pub algorithm: String,
    pub cost: Option<i64>,
    pub opt: Option<i64>,
    pub ratio: Option<f64>,
    pub runtime_ms: u128,
    pub status: String,
}

pub const COMPARISON_HEADER: &str = "instance,algorithm,cost,opt,ratio,runtime_ms,status";

impl ComparisonRow {
    pub fn to_csv(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{}",
            self.instance,
            self.algorithm,
            opt(&self.cost),
            opt(&self.opt),
            opt(&self.ratio),
            self.runtime_ms,
            self.status
        )
    }
}
