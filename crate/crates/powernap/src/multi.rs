//! Multi-machine skeletons and the combinatorial 6-approximation.
//!
//! The multi-machine skeleton is built per level: for every event-point
//! pair `(a, b)` the blackout level `l(a, b)` is the largest number of
//! machines that can sleep throughout `[a, b)` without losing feasibility.
//! Level `k` collects a unit job `(a, b, 1)` for every pair that needs at
//! least `k` awake machines; its single-machine minimum skeleton becomes
//! `S_k`. The 6-approximation turns the union of the level skeletons into a
//! feasible supply by one-slot extensions, falling back to tripling the
//! profile when no extensible pair remains.

use std::collections::BTreeMap;

use num::rational::Rational64;
use num::One;

use crate::feasibility::{dsi_check, dsi_check_profile, ext_alg_step, DsiOutcome, SupplySet};
use crate::model::{
    schedule_cost, wakeups_from_profile, CapacityProfile, Instance, Job, Schedule, Time,
};
use crate::skeleton::{min_cost_skeleton_for_jobs, InfeasibleInstance, Skeleton};

/// Blackout levels for all event-point pairs `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlackoutTable {
    pub levels: BTreeMap<(Time, Time), i64>,
}

impl BlackoutTable {
    /// Monotonicity check: blacking out over a superset is harder, so
    /// `l(a, b) <= l(a', b')` whenever `[a', b']` is inside `[a, b]`.
    pub fn is_monotone(&self) -> bool {
        self.levels.iter().all(|(&(a, b), &l)| {
            self.levels
                .iter()
                .filter(|(&(a2, b2), _)| a <= a2 && b2 <= b)
                .all(|(_, &l2)| l <= l2)
        })
    }
}

/// One single-machine skeleton per level; their union is the supply the
/// 6-approximation starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSkeleton {
    pub levels: Vec<Skeleton>,
}

impl MultiSkeleton {
    pub fn total_cost(&self, wake_cost: i64) -> i64 {
        self.levels.iter().map(|s| s.cost(wake_cost)).sum()
    }

    pub fn supply(&self) -> SupplySet {
        SupplySet::new(self.levels.iter().flat_map(|s| s.intervals.clone()).collect())
    }

    /// The defining property: for every pair, at least `m - l(a, b)`
    /// intervals across all levels intersect `[a, b]` (adjacency counts).
    pub fn covers(&self, table: &BlackoutTable, machines: i64) -> bool {
        table.levels.iter().all(|(&(a, b), &l)| {
            let overlapping = self
                .levels
                .iter()
                .flat_map(|s| &s.intervals)
                .filter(|iv| iv.start <= b && iv.end >= a)
                .count() as i64;
            overlapping >= machines - l
        })
    }

    /// Pairs where no single slot has `m - l(a, b)` intervals on top of it
    /// (the stricter pointwise reading; informational only).
    pub fn single_slot_violations(&self, table: &BlackoutTable, machines: i64) -> usize {
        table
            .levels
            .iter()
            .filter(|(&(a, b), &l)| {
                let need = machines - l;
                if need <= 0 {
                    return false;
                }
                !(((a - 1).max(0))..=b).any(|t| {
                    let stacked = self
                        .levels
                        .iter()
                        .flat_map(|s| &s.intervals)
                        .filter(|iv| iv.covers_slot(t))
                        .count() as i64;
                    stacked >= need
                })
            })
            .count()
    }
}

fn blackout_profile(instance: &Instance, a: Time, b: Time, l: i64) -> CapacityProfile {
    let m = instance.machines;
    CapacityProfile(
        (0..instance.horizon).map(|t| if a <= t && t < b { m - l } else { m }).collect(),
    )
}

/// Largest `l` such that the instance stays feasible with only `m - l`
/// machines available throughout `[a, b)`; binary search over `l`.
pub fn blackout_level(instance: &Instance, a: Time, b: Time) -> Result<i64, InfeasibleInstance> {
    assert!(a < b);
    let feasible = |l: i64| {
        dsi_check_profile(&blackout_profile(instance, a, b, l), &instance.jobs).is_feasible()
    };
    if !feasible(0) {
        return Err(InfeasibleInstance);
    }
    let (mut lo, mut hi) = (0, instance.machines);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

/// Blackout levels for every event-point pair, computed eagerly.
pub fn build_blackout_table(instance: &Instance) -> Result<BlackoutTable, InfeasibleInstance> {
    let points = instance.event_points();
    let mut levels = BTreeMap::new();
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            levels.insert((a, b), blackout_level(instance, a, b)?);
        }
    }
    Ok(BlackoutTable { levels })
}

/// Level instances: level `k` holds a unit job `(a, b, 1)` per pair with
/// `m - l(a, b) >= k`. The levels are nested, `I_1 ⊇ I_2 ⊇ ...`.
pub fn level_instances(instance: &Instance, table: &BlackoutTable) -> Vec<Vec<Job>> {
    (1..=instance.machines)
        .map(|k| {
            table
                .levels
                .iter()
                .filter(|(_, &l)| instance.machines - l >= k)
                .enumerate()
                .map(|(id, (&(a, b), _))| Job::new(id, a, b, 1))
                .collect()
        })
        .collect()
}

/// Per-level minimum skeletons; their total cost is at most OPT.
pub fn multi_skeleton(instance: &Instance) -> Result<MultiSkeleton, InfeasibleInstance> {
    let table = build_blackout_table(instance)?;
    let levels = level_instances(instance, &table)
        .iter()
        .map(|jobs| min_cost_skeleton_for_jobs(jobs, instance.wake_cost, Rational64::one()))
        .collect();
    let skeleton = MultiSkeleton { levels };
    debug_assert!(skeleton.covers(&table, instance.machines));
    Ok(skeleton)
}

/// Extends the multi-skeleton to a feasible supply: one-slot extensions
/// while possible, then (if still infeasible) the profile is tripled,
/// capped at `m`. The result is realized laminarly and costs at most 6·OPT.
pub fn six_approx(instance: &Instance) -> Result<Schedule, InfeasibleInstance> {
    let jobs = &instance.jobs;
    let m = instance.machines;
    if jobs.is_empty() {
        return Ok(Schedule::empty());
    }
    let mut supply = multi_skeleton(instance)?.supply();
    let mut outcome = dsi_check(&supply, jobs, m);
    loop {
        let cert = match outcome {
            DsiOutcome::Feasible(_) => break,
            DsiOutcome::Infeasible(ref c) => c.clone(),
        };
        match ext_alg_step(&supply, jobs, m, &cert) {
            Ok((next, next_outcome)) => {
                supply = next;
                outcome = next_outcome;
            }
            Err(_) => {
                let tripled: Vec<i64> = supply
                    .profile(instance.horizon, m)
                    .0
                    .iter()
                    .map(|&c| (3 * c).min(m))
                    .collect();
                let profile = CapacityProfile(tripled);
                outcome = dsi_check_profile(&profile, jobs);
                assert!(
                    outcome.is_feasible(),
                    "tripled supply must be feasible for a feasible instance"
                );
                supply = SupplySet::new(
                    wakeups_from_profile(&profile).1.into_iter().flatten().collect(),
                );
                break;
            }
        }
    }
    let DsiOutcome::Feasible(_) = outcome else { unreachable!() };
    // realize the final profile laminarly: fewest wake-ups for this profile
    let profile = supply.profile(instance.horizon, m);
    let (_, machines) = wakeups_from_profile(&profile);
    let assignment = match dsi_check_profile(&profile, jobs) {
        DsiOutcome::Feasible(asg) => asg,
        DsiOutcome::Infeasible(_) => unreachable!("profile was just verified feasible"),
    };
    let cost = schedule_cost(&machines, instance.wake_cost).expect("laminar decomposition");
    Ok(Schedule { machines, assignment, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_schedule;
    use crate::oracle::{brute_opt_multi, random_instance};
    use crate::skeleton::min_cost_skeleton;

    fn inst(jobs: &[(Time, Time, Time)], m: i64, q: i64) -> Instance {
        let jobs = jobs
            .iter()
            .enumerate()
            .map(|(i, &(r, d, p))| Job::new(i, r, d, p))
            .collect();
        Instance::new(jobs, m, q).unwrap()
    }

    #[test]
    fn blackout_level_examples() {
        let i = inst(&[(0, 2, 2), (0, 2, 2)], 2, 2);
        assert_eq!(blackout_level(&i, 0, 2).unwrap(), 0);
        // both machines can sleep through slots {0,1}: the four units of
        // volume fit into slots {2,3} on two machines
        let i = inst(&[(0, 4, 2), (0, 4, 2)], 2, 2);
        assert_eq!(blackout_level(&i, 0, 2).unwrap(), 2);
        assert_eq!(blackout_level(&i, 0, 4).unwrap(), 1);
        let empty = Instance::new(vec![], 3, 2).unwrap();
        // no event points exist, so probe a degenerate widened instance
        assert!(build_blackout_table(&empty).unwrap().levels.is_empty());
    }

    #[test]
    fn levels_are_nested() {
        for seed in 0..30 {
            let i = random_instance(seed, 3, 8, 2, 2);
            let Ok(table) = build_blackout_table(&i) else { continue };
            assert!(table.is_monotone(), "seed {seed}");
            let levels = level_instances(&i, &table);
            for w in levels.windows(2) {
                let spans: Vec<(Time, Time)> =
                    w[1].iter().map(|j| (j.release, j.deadline)).collect();
                assert!(spans
                    .iter()
                    .all(|s| w[0].iter().any(|j| (j.release, j.deadline) == *s)));
            }
        }
    }

    /// On one machine the pair constraints refine the per-job coverage: the
    /// multi-skeleton is at least as constrained as the single-machine one
    /// (a pair can force activity where no single job does), yet both stay
    /// below OPT.
    #[test]
    fn single_machine_reduction_brackets() {
        for seed in 0..40 {
            let i = random_instance(seed, 3, 9, 2, 1);
            let multi = multi_skeleton(&i).unwrap().total_cost(i.wake_cost);
            let single = min_cost_skeleton(&i, Rational64::one()).cost(i.wake_cost);
            let opt = crate::oracle::brute_opt_single(&i).unwrap().opt_cost;
            assert!(single <= multi, "seed {seed}");
            assert!(multi <= opt, "seed {seed}: multi {multi} > opt {opt}");
        }
    }

    #[test]
    fn pair_constraints_beyond_job_windows() {
        // all six slots are busy in any feasible schedule, so blacking out
        // [0,3) is impossible even though no job window fits inside it
        let i = inst(&[(0, 6, 3), (3, 6, 3)], 1, 2);
        assert_eq!(blackout_level(&i, 0, 3).unwrap(), 0);
        let multi = multi_skeleton(&i).unwrap().total_cost(2);
        assert_eq!(multi, 3);
    }

    #[test]
    fn two_identical_jobs_need_two_levels() {
        let i = inst(&[(0, 2, 2), (0, 2, 2)], 2, 2);
        let s = multi_skeleton(&i).unwrap();
        assert_eq!(s.levels.len(), 2);
        assert_eq!(s.total_cost(2), 6);
        let opt = brute_opt_multi(&i).unwrap().opt_cost;
        assert_eq!(opt, 8);
        assert!(s.total_cost(2) <= opt);
    }

    #[test]
    fn six_approx_examples() {
        let i = inst(&[(0, 2, 2), (0, 2, 2)], 2, 2);
        let sched = six_approx(&i).unwrap();
        validate_schedule(&i, &sched.machines, &sched.assignment).unwrap();
        assert!(sched.cost.total <= 6 * 8);

        let i = inst(&[(0, 3, 2), (1, 4, 2), (2, 5, 2)], 3, 1);
        let sched = six_approx(&i).unwrap();
        validate_schedule(&i, &sched.machines, &sched.assignment).unwrap();
        let opt = brute_opt_multi(&i).unwrap().opt_cost;
        assert!(sched.cost.total <= 6 * opt);
    }

    #[test]
    fn multi_suite_on_random_instances() {
        let mut tested = 0;
        for seed in 0..80 {
            let m = 1 + (seed % 3) as i64;
            let i = random_instance(seed, 1 + (seed as usize % 4), 8, 1 + (seed % 3) as i64, m);
            let Ok(oracle) = brute_opt_multi(&i) else { continue };
            tested += 1;
            let skeleton = multi_skeleton(&i).unwrap();
            assert!(
                skeleton.total_cost(i.wake_cost) <= oracle.opt_cost,
                "seed {seed}: skeleton {} > opt {}",
                skeleton.total_cost(i.wake_cost),
                oracle.opt_cost
            );
            let sched = six_approx(&i).unwrap();
            validate_schedule(&i, &sched.machines, &sched.assignment).unwrap();
            assert!(sched.cost.total <= 6 * oracle.opt_cost, "seed {seed}");
            assert!(sched.cost.total >= oracle.opt_cost, "seed {seed}");
        }
        assert!(tested >= 40, "only {tested} feasible draws");
    }
}
