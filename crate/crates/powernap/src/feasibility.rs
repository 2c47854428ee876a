//! Feasibility engines: EDF on a single machine, the max-flow
//! deadline-scheduling-on-intervals check with deficiency certificates,
//! forced volume, and the one-slot supply extension EXT-ALG.

use thiserror::Error;

use crate::model::{ActiveInterval, Assignment, CapacityProfile, Job, Time};

/// A multiset of supply intervals (not necessarily disjoint). The derived
/// per-slot capacity is the number of covering intervals, clamped to the
/// machine count where an algorithm requires it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupplySet {
    pub intervals: Vec<ActiveInterval>,
}

impl SupplySet {
    pub fn new(intervals: Vec<ActiveInterval>) -> Self {
        SupplySet { intervals }
    }

    /// Raw per-slot multiplicity, unclamped.
    pub fn multiplicity(&self, horizon: Time) -> Vec<i64> {
        let mut prof = vec![0i64; horizon.max(0) as usize];
        for iv in &self.intervals {
            for t in iv.slots() {
                if t >= 0 && (t as usize) < prof.len() {
                    prof[t as usize] += 1;
                }
            }
        }
        prof
    }

    /// Capacity profile clamped to `m` machines.
    pub fn profile(&self, horizon: Time, m: i64) -> CapacityProfile {
        CapacityProfile(self.multiplicity(horizon).into_iter().map(|c| c.min(m)).collect())
    }

    pub fn total_length(&self) -> i64 {
        self.intervals.iter().map(ActiveInterval::len).sum()
    }
}

/// Disjoint interval set witnessing infeasibility, with its deficiency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeficiencyCertificate {
    pub intervals: Vec<ActiveInterval>,
    pub value: i64,
}

/// Verdict of the deadline-scheduling-on-intervals check.
#[derive(Debug, Clone)]
pub enum DsiOutcome {
    Feasible(Assignment),
    Infeasible(DeficiencyCertificate),
}

impl DsiOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, DsiOutcome::Feasible(_))
    }

    pub fn max_deficiency(&self) -> i64 {
        match self {
            DsiOutcome::Feasible(_) => 0,
            DsiOutcome::Infeasible(cert) => cert.value,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no supply interval overlaps a deficiency interval without containing it")]
pub struct NoExtensiblePair;

/// Runs EDF over the given single-machine active slots: in each active slot
/// the unfinished released job with the earliest deadline (ties by smallest
/// id) is processed. Returns the processed volume per job and the assignment.
///
/// For a single machine the total processed volume equals the max-flow value
/// of [`dsi_check`] on the same supply.
pub fn edf_schedule(active_slots: &[Time], jobs: &[Job]) -> (Vec<i64>, Assignment) {
    let mut remaining: Vec<i64> = jobs.iter().map(|j| j.processing).collect();
    let mut assignment = Assignment::default();
    let mut slots = active_slots.to_vec();
    slots.sort_unstable();
    slots.dedup();
    for t in slots {
        let pick = jobs
            .iter()
            .enumerate()
            .filter(|(i, j)| remaining[*i] > 0 && j.release <= t && t < j.deadline)
            .min_by_key(|(_, j)| (j.deadline, j.id));
        if let Some((i, j)) = pick {
            remaining[i] -= 1;
            assignment.assign(j.id, t);
        }
    }
    let processed =
        jobs.iter().zip(&remaining).map(|(j, r)| j.processing - r).collect();
    (processed, assignment)
}

/// Length of the slot intersection of `iv` with the span `[r, d]`.
fn span_overlap(iv: &ActiveInterval, r: Time, d: Time) -> i64 {
    (iv.end.min(d) - iv.start.max(r)).max(0)
}

/// Volume of `job` that must be processed inside the disjoint interval set
/// `within` in any feasible schedule:
/// `max(0, p - (|[r,d]| - sum of overlaps))`.
pub fn forced_volume(job: &Job, within: &[ActiveInterval]) -> i64 {
    let overlap: i64 =
        within.iter().map(|iv| span_overlap(iv, job.release, job.deadline)).sum();
    (job.processing - (job.window_len() - overlap)).max(0)
}

/// Deficiency of the disjoint interval set `within` against a supply
/// profile: total forced volume minus the supply capacity inside `within`,
/// clamped at zero.
pub fn deficiency(jobs: &[Job], within: &[ActiveInterval], profile: &CapacityProfile) -> i64 {
    let demand: i64 = jobs.iter().map(|j| forced_volume(j, within)).sum();
    let capacity: i64 =
        within.iter().flat_map(ActiveInterval::slots).map(|t| profile.at(t)).sum();
    (demand - capacity).max(0)
}

/// Deadline-scheduling-on-intervals on a supply set, with capacity clamped
/// to `m` machines. Feasible iff the max flow of the job/slot network equals
/// the total volume; otherwise returns a minimal disjoint interval set of
/// maximum deficiency `P - maxflow`, extracted from the residual min cut and
/// shrunk left to right.
pub fn dsi_check(supply: &SupplySet, jobs: &[Job], m: i64) -> DsiOutcome {
    let horizon = supply
        .intervals
        .iter()
        .map(|iv| iv.end)
        .chain(jobs.iter().map(|j| j.deadline))
        .max()
        .unwrap_or(0);
    dsi_check_profile(&supply.profile(horizon, m), jobs)
}

/// [`dsi_check`] over an explicit integer capacity profile.
pub fn dsi_check_profile(profile: &CapacityProfile, jobs: &[Job]) -> DsiOutcome {
    let slots = profile.0.len().max(jobs.iter().map(|j| j.deadline).max().unwrap_or(0) as usize);
    let n = jobs.len();
    // nodes: 0 source, 1..=n jobs, n+1..n+1+slots slots, n+slots+1 sink
    let sink = n + slots + 1;
    let mut net = FlowNetwork::new(sink + 1);
    for (i, job) in jobs.iter().enumerate() {
        net.add_edge(0, 1 + i, job.processing);
        for t in job.window_slots() {
            if t >= 0 && (t as usize) < slots {
                net.add_edge(1 + i, n + 1 + t as usize, 1);
            }
        }
    }
    for t in 0..slots {
        net.add_edge(n + 1 + t, sink, profile.at(t as Time));
    }
    let total: i64 = jobs.iter().map(|j| j.processing).sum();
    let flow = net.max_flow(0, sink);
    if flow == total {
        let mut assignment = Assignment::default();
        for (i, job) in jobs.iter().enumerate() {
            for (to, _cap, f) in net.edges_from(1 + i) {
                if f > 0 && to != 0 {
                    assignment.assign(job.id, (to - n - 1) as Time);
                }
            }
        }
        assignment.normalize();
        return DsiOutcome::Feasible(assignment);
    }
    let value = total - flow;
    let reachable = net.residual_reachable(0);
    let cut_slots =
        (0..slots).filter(|&t| reachable[n + 1 + t]).map(|t| t as Time);
    let mut intervals = crate::model::slots_to_intervals(cut_slots);
    // Shrink to an inclusion-minimal witness, left to right.
    let mut i = 0;
    while i < intervals.len() {
        let mut trial = intervals.clone();
        trial.remove(i);
        if deficiency(jobs, &trial, profile) == value {
            intervals = trial;
        } else {
            i += 1;
        }
    }
    debug_assert_eq!(deficiency(jobs, &intervals, profile), value);
    DsiOutcome::Infeasible(DeficiencyCertificate { intervals, value })
}

/// One EXT-ALG step: extends a supply interval by one slot into a
/// deficiency interval it overlaps without containing, so that the maximum
/// deficiency drops by exactly one. Candidate supply intervals are tried by
/// smallest start (leftward extension before rightward); candidate
/// deficiency intervals by smallest start. Slots already at capacity `m`
/// are not extended into.
pub fn ext_alg_step(
    supply: &SupplySet,
    jobs: &[Job],
    m: i64,
    certificate: &DeficiencyCertificate,
) -> Result<(SupplySet, DsiOutcome), NoExtensiblePair> {
    assert!(certificate.value > 0, "EXT-ALG requires positive deficiency");
    let horizon = supply
        .intervals
        .iter()
        .map(|iv| iv.end)
        .chain(jobs.iter().map(|j| j.deadline))
        .chain(certificate.intervals.iter().map(|iv| iv.end))
        .max()
        .unwrap_or(0);
    let multiplicity = supply.multiplicity(horizon);

    let mut order: Vec<usize> = (0..supply.intervals.len()).collect();
    order.sort_by_key(|&i| (supply.intervals[i].start, supply.intervals[i].end, i));
    let mut targets = certificate.intervals.clone();
    targets.sort();

    for &i in &order {
        let iv = supply.intervals[i];
        for d in &targets {
            if iv.contains(d) || !iv.overlaps_closed(d) {
                continue;
            }
            // Leftward extension first when the deficiency interval sticks
            // out on the left.
            let mut slots = Vec::new();
            if d.start < iv.start {
                slots.push(iv.start - 1);
            }
            if d.end > iv.end {
                slots.push(iv.end);
            }
            for slot in slots {
                debug_assert!(d.covers_slot(slot));
                if slot < 0 || multiplicity.get(slot as usize).copied().unwrap_or(0) >= m {
                    continue;
                }
                let mut extended = supply.clone();
                let target = &mut extended.intervals[i];
                if slot < target.start {
                    target.start = slot;
                } else {
                    target.end = slot + 1;
                }
                let outcome = dsi_check(&extended, jobs, m);
                assert_eq!(
                    outcome.max_deficiency(),
                    certificate.value - 1,
                    "EXT-ALG step must decrease the maximum deficiency by exactly one"
                );
                return Ok((extended, outcome));
            }
        }
    }
    Err(NoExtensiblePair)
}

/// Plain Dinic max-flow on a small dense-ish graph with integer capacities.
struct FlowNetwork {
    first: Vec<Vec<usize>>, // adjacency: edge indices
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork { first: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        let id = self.to.len();
        self.first[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.first[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut flow = 0;
        loop {
            let level = self.bfs_levels(source);
            if level[sink].is_none() {
                return flow;
            }
            let mut iter = vec![0usize; self.first.len()];
            loop {
                let pushed = self.dfs(source, sink, i64::MAX, &level, &mut iter);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    fn bfs_levels(&self, source: usize) -> Vec<Option<u32>> {
        let mut level = vec![None; self.first.len()];
        level[source] = Some(0);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v].is_none() {
                    level[v] = Some(level[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn dfs(
        &mut self,
        u: usize,
        sink: usize,
        limit: i64,
        level: &[Option<u32>],
        iter: &mut [usize],
    ) -> i64 {
        if u == sink {
            return limit;
        }
        while iter[u] < self.first[u].len() {
            let e = self.first[u][iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u].map(|l| l + 1) {
                let pushed = self.dfs(v, sink, limit.min(self.cap[e]), level, iter);
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        0
    }

    fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.first.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &e in &self.first[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Forward edges out of `u` with their residual cap and flow.
    fn edges_from(&self, u: usize) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        self.first[u].iter().filter(|&&e| e % 2 == 0).map(move |&e| {
            let flow = self.cap[e ^ 1];
            (self.to[e], self.cap[e], flow)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(id: usize, r: Time, d: Time, p: Time) -> Job {
        Job::new(id, r, d, p)
    }

    #[test]
    fn edf_forced_order() {
        let jobs = [j(0, 0, 2, 1), j(1, 1, 2, 1)];
        let (p, asg) = edf_schedule(&[0, 1], &jobs);
        assert_eq!(p, vec![1, 1]);
        assert_eq!(asg.slots[&0], vec![0]);
        assert_eq!(asg.slots[&1], vec![1]);
    }

    #[test]
    fn edf_empty_supply() {
        let jobs = [j(0, 0, 2, 1)];
        let (p, _) = edf_schedule(&[], &jobs);
        assert_eq!(p, vec![0]);
    }

    #[test]
    fn edf_earliest_deadline_wins() {
        let jobs = [j(0, 0, 3, 3), j(1, 0, 1, 1)];
        let (p, asg) = edf_schedule(&[0, 1, 2], &jobs);
        assert_eq!(p, vec![2, 1]);
        assert_eq!(asg.slots[&1], vec![0]);
    }

    #[test]
    fn forced_volume_examples() {
        assert_eq!(forced_volume(&j(0, 0, 4, 3), &[ActiveInterval::new(1, 3)]), 1);
        assert_eq!(forced_volume(&j(0, 0, 4, 1), &[ActiveInterval::new(1, 2)]), 0);
        assert_eq!(forced_volume(&j(0, 0, 2, 2), &[ActiveInterval::new(0, 2)]), 2);
    }

    #[test]
    fn deficiency_examples() {
        let d = vec![ActiveInterval::new(0, 2)];
        let ones = CapacityProfile(vec![1, 1]);
        let twos = CapacityProfile(vec![2, 2]);
        assert_eq!(deficiency(&[j(0, 0, 2, 2), j(1, 0, 2, 2)], &d, &ones), 2);
        assert_eq!(deficiency(&[j(0, 0, 2, 2)], &[], &ones), 0);
        assert_eq!(deficiency(&[j(0, 0, 2, 2)], &d, &twos), 0);
    }

    #[test]
    fn dsi_feasible_when_volumes_fit() {
        let supply = SupplySet::new(vec![ActiveInterval::new(0, 2)]);
        let jobs = [j(0, 0, 2, 1), j(1, 0, 2, 1)];
        assert!(dsi_check(&supply, &jobs, 1).is_feasible());
    }

    #[test]
    fn dsi_certificate_matches_brute_force() {
        let supply = SupplySet::new(vec![ActiveInterval::new(0, 2)]);
        let jobs = [j(0, 0, 2, 2), j(1, 0, 2, 2)];
        match dsi_check(&supply, &jobs, 1) {
            DsiOutcome::Infeasible(cert) => {
                assert_eq!(cert.value, 2);
                assert_eq!(cert.intervals, vec![ActiveInterval::new(0, 2)]);
            }
            DsiOutcome::Feasible(_) => panic!("must be infeasible"),
        }
    }

    #[test]
    fn dsi_empty_supply() {
        let supply = SupplySet::default();
        let jobs = [j(0, 0, 1, 1)];
        match dsi_check(&supply, &jobs, 1) {
            DsiOutcome::Infeasible(cert) => {
                assert_eq!(cert.value, 1);
                assert_eq!(cert.intervals, vec![ActiveInterval::new(0, 1)]);
            }
            DsiOutcome::Feasible(_) => panic!("must be infeasible"),
        }
    }

    #[test]
    fn ext_step_decreases_deficiency() {
        let supply = SupplySet::new(vec![ActiveInterval::new(0, 1)]);
        let jobs = [j(0, 0, 3, 3)];
        let cert = match dsi_check(&supply, &jobs, 1) {
            DsiOutcome::Infeasible(c) => c,
            _ => panic!(),
        };
        assert_eq!(cert.value, 2);
        let (extended, outcome) = ext_alg_step(&supply, &jobs, 1, &cert).unwrap();
        assert_eq!(extended.intervals, vec![ActiveInterval::new(0, 2)]);
        assert_eq!(outcome.max_deficiency(), 1);
    }

    #[test]
    fn ext_step_detects_no_pair() {
        let supply = SupplySet::new(vec![ActiveInterval::new(0, 2)]);
        let jobs = [j(0, 0, 2, 2), j(1, 0, 2, 2)];
        let cert = match dsi_check(&supply, &jobs, 1) {
            DsiOutcome::Infeasible(c) => c,
            _ => panic!(),
        };
        assert_eq!(ext_alg_step(&supply, &jobs, 1, &cert).unwrap_err(), NoExtensiblePair);
    }

    #[test]
    fn ext_reaches_feasibility() {
        let mut supply = SupplySet::new(vec![ActiveInterval::new(0, 1)]);
        let jobs = [j(0, 0, 3, 2)];
        let mut steps = 0;
        loop {
            match dsi_check(&supply, &jobs, 1) {
                DsiOutcome::Feasible(_) => break,
                DsiOutcome::Infeasible(cert) => {
                    let (next, _) = ext_alg_step(&supply, &jobs, 1, &cert).unwrap();
                    supply = next;
                    steps += 1;
                }
            }
        }
        assert!(steps <= 2, "took {steps} steps");
    }

    #[test]
    fn edf_volume_matches_max_flow_on_single_machine() {
        let jobs = [j(0, 0, 4, 2), j(1, 1, 3, 2), j(2, 2, 6, 1)];
        let supply = SupplySet::new(vec![ActiveInterval::new(1, 4), ActiveInterval::new(5, 6)]);
        let slots: Vec<Time> = supply.intervals.iter().flat_map(ActiveInterval::slots).collect();
        let (p, _) = edf_schedule(&slots, &jobs);
        let edf_total: i64 = p.iter().sum();
        let flow_total = match dsi_check(&supply, &jobs, 1) {
            DsiOutcome::Feasible(_) => jobs.iter().map(|j| j.processing).sum(),
            DsiOutcome::Infeasible(cert) => {
                jobs.iter().map(|j| j.processing).sum::<i64>() - cert.value
            }
        };
        assert_eq!(edf_total, flow_total);
    }
}
