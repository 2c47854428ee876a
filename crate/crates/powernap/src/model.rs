//! Domain types shared by every algorithm: jobs, instances, intervals,
//! capacity profiles, assignments and cost accounting.
//!
//! Time is integral. Slot `t` is the half-open unit interval `[t, t+1)`;
//! an [`ActiveInterval`] `[s, e)` covers the slots `s..e-1`. All costs on
//! integral schedules are exact integers.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer time point. Slots are indexed by their left endpoint.
pub type Time = i64;

/// A job with a release time, deadline and processing requirement.
///
/// Invariant: `release < deadline` and `1 <= processing <= deadline - release`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    #[serde(rename = "r")]
    pub release: Time,
    #[serde(rename = "d")]
    pub deadline: Time,
    #[serde(rename = "p")]
    pub processing: Time,
}

impl Job {
    pub fn new(id: usize, release: Time, deadline: Time, processing: Time) -> Self {
        Job { id, release, deadline, processing }
    }

    /// Length of the span `[release, deadline]`.
    pub fn window_len(&self) -> Time {
        self.deadline - self.release
    }

    /// Slots in which this job may be processed: `release..deadline`.
    pub fn window_slots(&self) -> std::ops::Range<Time> {
        self.release..self.deadline
    }
}

/// A normalized scheduling instance: jobs, machine count `m`, wake-up cost
/// `q` and horizon `D = max deadline`. The minimum release time is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub machines: i64,
    pub wake_cost: i64,
    pub horizon: Time,
}

impl Instance {
    /// Builds a normalized instance: times are shifted so the minimum
    /// release is 0, jobs are ordered by id and re-numbered densely.
    pub fn new(mut jobs: Vec<Job>, machines: i64, wake_cost: i64) -> Result<Self, LoadError> {
        if machines < 1 {
            return Err(LoadError::BadMachines(machines));
        }
        if wake_cost < 1 {
            return Err(LoadError::BadWakeCost(wake_cost));
        }
        jobs.sort_by_key(|j| j.id);
        for w in jobs.windows(2) {
            if w[0].id == w[1].id {
                return Err(LoadError::DuplicateId(w[0].id));
            }
        }
        let shift = jobs.iter().map(|j| j.release).min().unwrap_or(0);
        for (idx, job) in jobs.iter_mut().enumerate() {
            job.id = idx;
            job.release -= shift;
            job.deadline -= shift;
            if job.release < 0 {
                return Err(LoadError::NegativeRelease(idx));
            }
            if job.processing < 1 || job.processing > job.window_len() {
                return Err(LoadError::WindowTooSmall {
                    id: idx,
                    processing: job.processing,
                    window: job.window_len(),
                });
            }
        }
        let horizon = jobs.iter().map(|j| j.deadline).max().unwrap_or(0);
        Ok(Instance { jobs, machines, wake_cost, horizon })
    }

    /// Total processing volume `P`.
    pub fn total_volume(&self) -> i64 {
        self.jobs.iter().map(|j| j.processing).sum()
    }

    /// Sorted, de-duplicated event points `T = union of releases and deadlines`.
    pub fn event_points(&self) -> Vec<Time> {
        let mut pts: Vec<Time> =
            self.jobs.iter().flat_map(|j| [j.release, j.deadline]).collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// A half-open run of active slots `[start, end)` with `start < end`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct ActiveInterval {
    pub start: Time,
    pub end: Time,
}

impl ActiveInterval {
    pub fn new(start: Time, end: Time) -> Self {
        debug_assert!(start < end, "interval [{start}, {end}) is empty");
        ActiveInterval { start, end }
    }

    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn covers_slot(&self, t: Time) -> bool {
        self.start <= t && t < self.end
    }

    pub fn slots(&self) -> std::ops::Range<Time> {
        self.start..self.end
    }

    /// Overlap in the closed-interval sense: two intervals that are
    /// right next to each other also overlap.
    pub fn overlaps_closed(&self, other: &ActiveInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Closed-sense overlap with the time interval `[a, b]`.
    pub fn overlaps_span(&self, a: Time, b: Time) -> bool {
        self.start <= b && a <= self.end
    }

    pub fn contains(&self, other: &ActiveInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for ActiveInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Merges a sorted slot set into maximal disjoint intervals.
pub fn slots_to_intervals(slots: impl IntoIterator<Item = Time>) -> Vec<ActiveInterval> {
    let mut out: Vec<ActiveInterval> = Vec::new();
    for t in slots {
        match out.last_mut() {
            Some(last) if last.end == t => last.end = t + 1,
            _ => out.push(ActiveInterval::new(t, t + 1)),
        }
    }
    out
}

/// Per-slot machine capacity `m_t`, indexed by slot `0..D-1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CapacityProfile(pub Vec<i64>);

impl CapacityProfile {
    pub fn at(&self, t: Time) -> i64 {
        if t < 0 || t as usize >= self.0.len() { 0 } else { self.0[t as usize] }
    }

    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }
}

/// Integral job-to-slot assignment; every entry carries amount 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// job id -> sorted slots in which one unit is processed.
    pub slots: BTreeMap<usize, Vec<Time>>,
}

impl Assignment {
    pub fn assign(&mut self, job: usize, slot: Time) {
        self.slots.entry(job).or_default().push(slot);
    }

    pub fn volume(&self, job: usize) -> i64 {
        self.slots.get(&job).map_or(0, |s| s.len() as i64)
    }

    pub fn normalize(&mut self) {
        for s in self.slots.values_mut() {
            s.sort_unstable();
        }
    }
}

/// Energy cost split into active length and wake-ups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub active: i64,
    pub wakeups: i64,
    pub total: i64,
}

impl CostBreakdown {
    pub fn new(active: i64, wakeups: i64, wake_cost: i64) -> Self {
        CostBreakdown { active, wakeups, total: active + wake_cost * wakeups }
    }

    pub fn zero() -> Self {
        CostBreakdown { active: 0, wakeups: 0, total: 0 }
    }
}

/// A complete (not necessarily feasible) integral solution: per-machine
/// active intervals plus a job assignment and its cost.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub machines: Vec<Vec<ActiveInterval>>,
    pub assignment: Assignment,
    pub cost: CostBreakdown,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule { machines: Vec::new(), assignment: Assignment::default(), cost: CostBreakdown::zero() }
    }

    /// Slot-capacity profile induced by the per-machine intervals.
    pub fn profile(&self, horizon: Time) -> CapacityProfile {
        let mut prof = vec![0i64; horizon.max(0) as usize];
        for machine in &self.machines {
            for iv in machine {
                for t in iv.slots() {
                    if t >= 0 && (t as usize) < prof.len() {
                        prof[t as usize] += 1;
                    }
                }
            }
        }
        CapacityProfile(prof)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("malformed instance document: {0}")]
    Malformed(String),
    #[error("job {id}: processing {processing} exceeds window {window}")]
    WindowTooSmall { id: usize, processing: i64, window: i64 },
    #[error("machine count {0} must be at least 1")]
    BadMachines(i64),
    #[error("wake cost {0} must be at least 1")]
    BadWakeCost(i64),
    #[error("duplicate job id {0}")]
    DuplicateId(usize),
    #[error("job {0} has a negative release time")]
    NegativeRelease(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    #[error("machine {machine}: intervals {a} and {b} overlap")]
    Overlap { machine: usize, a: ActiveInterval, b: ActiveInterval },
    #[error("machine {machine}: intervals {a} and {b} are adjacent and must be merged")]
    Adjacent { machine: usize, a: ActiveInterval, b: ActiveInterval },
}

/// First violated feasibility condition of a schedule, with its location.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleViolation {
    #[error("job {job} assigned outside its window at slot {slot}")]
    OutsideWindow { job: usize, slot: Time },
    #[error("job {job} processed more than once in slot {slot}")]
    SelfParallel { job: usize, slot: Time },
    #[error("job {job}: volume {got} < p {want}")]
    VolumeMismatch { job: usize, got: i64, want: i64 },
    #[error("capacity exceeded at t={slot}: load {load} > m_t {capacity}")]
    CapacityExceeded { slot: Time, load: i64, capacity: i64 },
}

#[derive(Deserialize)]
struct JobDoc {
    id: Option<usize>,
    r: Time,
    d: Time,
    p: Time,
}

#[derive(Deserialize)]
struct InstanceDoc {
    q: i64,
    m: i64,
    jobs: Vec<JobDoc>,
}

/// Parses the JSON instance format
/// `{"q": int, "m": int, "jobs": [{"id": int, "r": int, "d": int, "p": int}, ...]}`
/// (ids optional) into a normalized [`Instance`].
pub fn load_instance(text: &str) -> Result<Instance, LoadError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| LoadError::Malformed(e.to_string()))?;
    let jobs = doc
        .jobs
        .into_iter()
        .enumerate()
        .map(|(i, j)| Job::new(j.id.unwrap_or(i), j.r, j.d, j.p))
        .collect();
    Instance::new(jobs, doc.m, doc.q)
}

/// Serializes an instance back to the JSON instance format.
pub fn serialize_instance(instance: &Instance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        q: i64,
        m: i64,
        jobs: &'a [Job],
    }
    serde_json::to_string_pretty(&Doc {
        q: instance.wake_cost,
        m: instance.machines,
        jobs: &instance.jobs,
    })
    .expect("instance serialization cannot fail")
}

/// Cost of a per-machine interval set: total length plus `q` per interval.
///
/// Intervals on a machine must be pairwise disjoint and non-adjacent.
pub fn schedule_cost(
    machines: &[Vec<ActiveInterval>],
    wake_cost: i64,
) -> Result<CostBreakdown, CostError> {
    let mut active = 0i64;
    let mut wakeups = 0i64;
    for (k, machine) in machines.iter().enumerate() {
        let mut sorted = machine.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[1].start < w[0].end {
                return Err(CostError::Overlap { machine: k, a: w[0], b: w[1] });
            }
            if w[1].start == w[0].end {
                return Err(CostError::Adjacent { machine: k, a: w[0], b: w[1] });
            }
        }
        active += sorted.iter().map(ActiveInterval::len).sum::<i64>();
        wakeups += sorted.len() as i64;
    }
    Ok(CostBreakdown::new(active, wakeups, wake_cost))
}

/// Minimal number of wake-ups realizing an integer capacity profile, i.e.
/// `sum_t (m_t - m_{t-1})^+` with `m_{-1} = 0`, together with the laminar
/// per-machine decomposition (machine `k` is active at `t` iff `m_t >= k+1`).
pub fn wakeups_from_profile(profile: &CapacityProfile) -> (i64, Vec<Vec<ActiveInterval>>) {
    let levels = profile.0.iter().copied().max().unwrap_or(0).max(0);
    let mut machines: Vec<Vec<ActiveInterval>> = vec![Vec::new(); levels as usize];
    let mut wakeups = 0i64;
    let mut prev = 0i64;
    for (t, &mt) in profile.0.iter().enumerate() {
        wakeups += (mt - prev).max(0);
        prev = mt;
        for k in 0..mt.max(0) {
            let machine = &mut machines[k as usize];
            match machine.last_mut() {
                Some(last) if last.end == t as Time => last.end += 1,
                _ => machine.push(ActiveInterval::new(t as Time, t as Time + 1)),
            }
        }
    }
    (wakeups, machines)
}

/// Checks a schedule against the instance: window containment, no
/// self-parallelism, complete volume, slot capacity. Returns the first
/// violated condition.
pub fn validate_schedule(
    instance: &Instance,
    machines: &[Vec<ActiveInterval>],
    assignment: &Assignment,
) -> Result<(), ScheduleViolation> {
    let sched = Schedule {
        machines: machines.to_vec(),
        assignment: assignment.clone(),
        cost: CostBreakdown::zero(),
    };
    let profile = sched.profile(instance.horizon);

    for job in &instance.jobs {
        if let Some(slots) = assignment.slots.get(&job.id) {
            let mut sorted = slots.clone();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(ScheduleViolation::SelfParallel { job: job.id, slot: w[0] });
                }
            }
            for &t in &sorted {
                if t < job.release || t >= job.deadline {
                    return Err(ScheduleViolation::OutsideWindow { job: job.id, slot: t });
                }
            }
        }
    }
    for job in &instance.jobs {
        let got = assignment.volume(job.id);
        if got != job.processing {
            return Err(ScheduleViolation::VolumeMismatch {
                job: job.id,
                got,
                want: job.processing,
            });
        }
    }
    let mut load = vec![0i64; instance.horizon.max(0) as usize];
    for slots in assignment.slots.values() {
        for &t in slots {
            if t >= 0 && (t as usize) < load.len() {
                load[t as usize] += 1;
            }
        }
    }
    for (t, &l) in load.iter().enumerate() {
        let cap = profile.at(t as Time);
        if l > cap {
            return Err(ScheduleViolation::CapacityExceeded {
                slot: t as Time,
                load: l,
                capacity: cap,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(id: usize, r: Time, d: Time, p: Time) -> Job {
        Job::new(id, r, d, p)
    }

    #[test]
    fn load_maps_fields() {
        let inst = load_instance(r#"{"q":2,"m":1,"jobs":[{"r":0,"d":3,"p":2}]}"#).unwrap();
        assert_eq!(inst.jobs.len(), 1);
        assert_eq!(inst.horizon, 3);
        assert_eq!(inst.total_volume(), 2);
    }

    #[test]
    fn load_shifts_releases() {
        let inst = load_instance(r#"{"q":2,"m":1,"jobs":[{"r":5,"d":8,"p":2}]}"#).unwrap();
        assert_eq!(inst.jobs[0].release, 0);
        assert_eq!(inst.jobs[0].deadline, 3);
        assert_eq!(inst.horizon, 3);
    }

    #[test]
    fn load_rejects_overfull_window() {
        let err = load_instance(r#"{"q":1,"m":1,"jobs":[{"r":0,"d":1,"p":2}]}"#).unwrap_err();
        assert!(matches!(err, LoadError::WindowTooSmall { .. }));
    }

    #[test]
    fn load_rejects_bad_params() {
        assert!(load_instance(r#"{"q":0,"m":1,"jobs":[]}"#).is_err());
        assert!(load_instance(r#"{"q":1,"m":0,"jobs":[]}"#).is_err());
        assert!(load_instance("not json").is_err());
    }

    #[test]
    fn cost_sums_lengths_and_wakeups() {
        let m0 = vec![ActiveInterval::new(0, 2), ActiveInterval::new(5, 6)];
        let cost = schedule_cost(&[m0], 2).unwrap();
        assert_eq!(cost.total, 7);
        assert_eq!(cost.active, 3);
        assert_eq!(cost.wakeups, 2);
    }

    #[test]
    fn cost_of_empty_schedule_is_zero() {
        assert_eq!(schedule_cost(&[], 5).unwrap().total, 0);
    }

    #[test]
    fn cost_sums_over_machines() {
        let machines = vec![vec![ActiveInterval::new(0, 1)], vec![ActiveInterval::new(0, 1)]];
        assert_eq!(schedule_cost(&machines, 3).unwrap().total, 8);
    }

    #[test]
    fn cost_rejects_overlap() {
        let m0 = vec![ActiveInterval::new(0, 3), ActiveInterval::new(2, 4)];
        assert!(matches!(schedule_cost(&[m0], 1), Err(CostError::Overlap { .. })));
    }

    #[test]
    fn wakeups_from_profile_examples() {
        assert_eq!(wakeups_from_profile(&CapacityProfile(vec![0, 2, 1, 3, 0])).0, 4);
        assert_eq!(wakeups_from_profile(&CapacityProfile(vec![1, 1, 1])).0, 1);
        assert_eq!(wakeups_from_profile(&CapacityProfile(vec![0, 0])).0, 0);
    }

    #[test]
    fn laminar_decomposition_matches_profile() {
        let profile = CapacityProfile(vec![0, 2, 1, 3, 0]);
        let (wakeups, machines) = wakeups_from_profile(&profile);
        let sched =
            Schedule { machines, assignment: Assignment::default(), cost: CostBreakdown::zero() };
        assert_eq!(sched.profile(5), profile);
        let total_intervals: usize =
            sched.machines.iter().map(|m| m.len()).sum();
        assert_eq!(total_intervals as i64, wakeups);
    }

    #[test]
    fn validate_accepts_exact_schedule() {
        let inst = Instance::new(vec![j(0, 0, 3, 2)], 1, 2).unwrap();
        let machines = vec![vec![ActiveInterval::new(0, 2)]];
        let mut asg = Assignment::default();
        asg.assign(0, 0);
        asg.assign(0, 1);
        assert_eq!(validate_schedule(&inst, &machines, &asg), Ok(()));
    }

    #[test]
    fn validate_reports_missing_volume() {
        let inst = Instance::new(vec![j(0, 0, 3, 2)], 1, 2).unwrap();
        let machines = vec![vec![ActiveInterval::new(0, 2)]];
        let mut asg = Assignment::default();
        asg.assign(0, 0);
        assert_eq!(
            validate_schedule(&inst, &machines, &asg),
            Err(ScheduleViolation::VolumeMismatch { job: 0, got: 1, want: 2 })
        );
    }

    #[test]
    fn validate_reports_capacity() {
        let inst = Instance::new(vec![j(0, 0, 2, 1), j(1, 0, 2, 1)], 1, 1).unwrap();
        let machines = vec![vec![ActiveInterval::new(0, 1)]];
        let mut asg = Assignment::default();
        asg.assign(0, 0);
        asg.assign(1, 0);
        assert_eq!(
            validate_schedule(&inst, &machines, &asg),
            Err(ScheduleViolation::CapacityExceeded { slot: 0, load: 2, capacity: 1 })
        );
    }

    #[test]
    fn single_machine_interval_count_equals_profile_wakeups() {
        let m0 = vec![ActiveInterval::new(0, 2), ActiveInterval::new(4, 7)];
        let sched = Schedule {
            machines: vec![m0.clone()],
            assignment: Assignment::default(),
            cost: CostBreakdown::zero(),
        };
        let profile = sched.profile(8);
        assert_eq!(wakeups_from_profile(&profile).0, m0.len() as i64);
    }
}
