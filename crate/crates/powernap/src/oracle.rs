//! Brute-force ground truth at desk scale: exact optima for one and many
//! machines, exact minimum skeleton cost, exact maximum deficiency, the
//! integrality-gap instance family, and a seeded random instance generator.
//!
//! The enumerations are intentionally simple; the only speedups are skipping
//! candidates that already cost more than the incumbent (the cost function
//! is cheap) and a necessary-condition window precheck before running the
//! max-flow feasibility test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::feasibility::{deficiency, dsi_check, dsi_check_profile, edf_schedule, DsiOutcome, SupplySet};
use crate::model::{
    schedule_cost, slots_to_intervals, wakeups_from_profile, ActiveInterval, CapacityProfile,
    Instance, Job, Schedule, Time,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has no feasible schedule")]
    Infeasible,
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("gap instance requires q >= 2, got {0}")]
    BadGapParameter(i64),
}

/// Exact optimum with a witness and the fewest wake-ups over all optima
/// (`Q_min = q * min_wakeups`).
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub opt_cost: i64,
    pub min_wakeups: i64,
    pub witness: Schedule,
}

fn mask_slots(mask: u32) -> Vec<Time> {
    (0..32).filter(|t| mask >> t & 1 == 1).map(|t| t as Time).collect()
}

fn mask_cost(mask: u32, q: i64) -> (i64, i64) {
    let runs = (mask & !(mask << 1)).count_ones() as i64;
    (mask.count_ones() as i64 + q * runs, runs)
}

/// Exhaustive single-machine optimum. Up to D = 16 this enumerates all 2^D
/// active-slot subsets; for larger horizons (up to 64) it switches to an
/// exact dynamic program over Hall's condition, cross-checked against the
/// enumeration in the test suite.
pub fn brute_opt_single(instance: &Instance) -> Result<OracleResult, OracleError> {
    assert_eq!(instance.machines, 1);
    let d = instance.horizon;
    if d > 64 {
        return Err(OracleError::TooLarge(format!("horizon {d} slots")));
    }
    if d > 16 {
        return exact_opt_single_dp(instance);
    }
    let q = instance.wake_cost;
    let jobs = &instance.jobs;
    let feasible = |mask: u32| {
        let (done, asg) = edf_schedule(&mask_slots(mask), jobs);
        done.iter().zip(jobs).all(|(got, j)| *got == j.processing).then_some(asg)
    };

    let full = (1u32 << d) - 1;
    let mut best: Option<(i64, i64, u32)> = None;
    for mask in 0..=full {
        let (cost, runs) = mask_cost(mask, q);
        if let Some((bc, bw, _)) = best {
            if cost > bc || (cost == bc && runs >= bw) {
                continue;
            }
        }
        if feasible(mask).is_some() {
            best = Some((cost, runs, mask));
        }
    }
    let (opt_cost, min_wakeups, mask) = best.ok_or(OracleError::Infeasible)?;
    let (_, assignment) = edf_schedule(&mask_slots(mask), jobs);
    let machines = vec![slots_to_intervals(mask_slots(mask))];
    let cost = schedule_cost(&machines, q).expect("disjoint by construction");
    debug_assert_eq!(cost.total, opt_cost);
    Ok(OracleResult { opt_cost, min_wakeups, witness: Schedule { machines, assignment, cost } })
}

/// Exact single-machine optimum via Hall's condition: a slot set is
/// feasible iff `|S ∩ [a,b)| >= demand(a,b)` for every release `a` and
/// deadline `b`, where `demand` sums the volume of jobs confined to
/// `[a,b)`. A forward scan over slots keeps, per release point, the active
/// count so far (clamped at the largest demand it can still matter for),
/// minimizing `(cost, wakeups)` lexicographically.
fn exact_opt_single_dp(instance: &Instance) -> Result<OracleResult, OracleError> {
    use std::collections::HashMap;

    let d = instance.horizon;
    let q = instance.wake_cost;
    let jobs = &instance.jobs;
    let mut releases: Vec<Time> = jobs.iter().map(|j| j.release).collect();
    releases.sort_unstable();
    releases.dedup();
    let mut deadlines: Vec<Time> = jobs.iter().map(|j| j.deadline).collect();
    deadlines.sort_unstable();
    deadlines.dedup();

    let demand = |a: Time, b: Time| -> i64 {
        jobs.iter()
            .filter(|j| j.release >= a && j.deadline <= b)
            .map(|j| j.processing)
            .sum()
    };
    let clamp: Vec<i64> = releases
        .iter()
        .map(|&a| deadlines.iter().map(|&b| demand(a, b)).max().unwrap_or(0))
        .collect();

    // state: per-release clamped active counts plus whether the previous
    // slot was active; value: lex-min (cost, wakeups) plus a backpointer
    type Key = (Vec<i64>, bool);
    struct Entry {
        cost: i64,
        wakeups: i64,
        parent: usize,
        active: bool,
    }
    let mut layer: HashMap<Key, usize> = HashMap::new();
    let mut entries: Vec<Vec<Entry>> = vec![Vec::new()];
    layer.insert((vec![0; releases.len()], false), 0);
    entries[0].push(Entry { cost: 0, wakeups: 0, parent: usize::MAX, active: false });

    for t in 0..d {
        let prev: Vec<(Key, usize)> = layer.drain().collect();
        let mut next: HashMap<Key, usize> = HashMap::new();
        entries.push(Vec::new());
        let (old, new) = {
            let (a, b) = entries.split_at_mut(t as usize + 1);
            (&a[t as usize], &mut b[0])
        };
        for ((counts, on), idx) in prev {
            let e = &old[idx];
            let base = (e.cost, e.wakeups, idx);
            for active in [false, true] {
                let mut counts = counts.clone();
                if active {
                    for (k, (&a, &cap)) in
                        counts.iter_mut().zip(releases.iter().zip(&clamp))
                    {
                        if a <= t && *k < cap {
                            *k += 1;
                        }
                    }
                }
                // every demand window ending at t+1 must be satisfied
                if deadlines.contains(&(t + 1))
                    && releases.iter().zip(&counts).any(|(&a, &k)| k < demand(a, t + 1))
                {
                    continue;
                }
                let wake = i64::from(active && !on);
                let cand = (base.0 + i64::from(active) + q * wake, base.1 + wake);
                let key = (counts, active);
                match next.get(&key) {
                    Some(&i) if (new[i].cost, new[i].wakeups) <= cand => {}
                    Some(&i) => {
                        new[i] =
                            Entry { cost: cand.0, wakeups: cand.1, parent: idx, active };
                    }
                    None => {
                        next.insert(key, new.len());
                        new.push(Entry {
                            cost: cand.0,
                            wakeups: cand.1,
                            parent: idx,
                            active,
                        });
                    }
                }
            }
        }
        layer = next;
    }

    let mut best: Option<(i64, i64, usize)> = None;
    for (_, &idx) in layer.iter() {
        let e = &entries[d as usize][idx];
        if best.is_none_or(|(c, w, _)| (e.cost, e.wakeups) < (c, w)) {
            best = Some((e.cost, e.wakeups, idx));
        }
    }
    let (opt_cost, min_wakeups, mut idx) = best.ok_or(OracleError::Infeasible)?;
    let mut slots = Vec::new();
    for t in (0..d).rev() {
        let e = &entries[t as usize + 1][idx];
        if e.active {
            slots.push(t);
        }
        idx = e.parent;
    }
    slots.reverse();
    let (done, assignment) = edf_schedule(&slots, jobs);
    assert!(
        done.iter().zip(jobs.iter()).all(|(got, j)| *got == j.processing),
        "Hall-feasible slot set must be EDF-feasible"
    );
    let machines = vec![slots_to_intervals(slots)];
    let cost = schedule_cost(&machines, q).expect("disjoint by construction");
    assert_eq!(cost.total, opt_cost);
    Ok(OracleResult { opt_cost, min_wakeups, witness: Schedule { machines, assignment, cost } })
}

fn profile_cost(profile: &[i64], q: i64) -> (i64, i64) {
    let active: i64 = profile.iter().sum();
    let mut wakeups = 0;
    let mut prev = 0;
    for &v in profile {
        wakeups += (v - prev).max(0);
        prev = v;
    }
    (active + q * wakeups, wakeups)
}

/// Every window must hold the volume of jobs confined to it; cheap
/// necessary condition checked before the max-flow test.
fn windows_ok(profile: &[i64], jobs: &[Job]) -> bool {
    let d = profile.len() as Time;
    for a in 0..d {
        for b in a + 1..=d {
            let need: i64 = jobs
                .iter()
                .filter(|j| j.release >= a && j.deadline <= b)
                .map(|j| j.processing)
                .sum();
            let cap: i64 = profile[a as usize..b as usize].iter().sum();
            if need > cap {
                return false;
            }
        }
    }
    true
}

/// Exhaustive multi-machine optimum over all (m+1)^D capacity profiles.
pub fn brute_opt_multi(instance: &Instance) -> Result<OracleResult, OracleError> {
    let d = instance.horizon as usize;
    let m = instance.machines;
    if d > 12 || (m + 1).pow(d as u32) > 20_000_000 {
        return Err(OracleError::TooLarge(format!("{}^{d} capacity profiles", m + 1)));
    }
    let q = instance.wake_cost;
    let jobs = &instance.jobs;

    let solve = |profile: &[i64]| match dsi_check_profile(&CapacityProfile(profile.to_vec()), jobs)
    {
        DsiOutcome::Feasible(asg) => Some(asg),
        DsiOutcome::Infeasible(_) => None,
    };

    let full = vec![m; d];
    if solve(&full).is_none() {
        return Err(OracleError::Infeasible);
    }
    let mut best: Option<(i64, i64, Vec<i64>)> = None;
    let mut profile = vec![0i64; d];
    loop {
        let (cost, wakeups) = profile_cost(&profile, q);
        let dominated = best
            .as_ref()
            .is_some_and(|(bc, bw, _)| cost > *bc || (cost == *bc && wakeups >= *bw));
        if !dominated && windows_ok(&profile, jobs) && solve(&profile).is_some() {
            best = Some((cost, wakeups, profile.clone()));
        }
        // increment the base-(m+1) counter
        let mut i = 0;
        loop {
            if i == d {
                let (opt_cost, min_wakeups, profile) = best.expect("full profile is feasible");
                let assignment = solve(&profile).unwrap();
                let cap = CapacityProfile(profile);
                let (_, machines) = wakeups_from_profile(&cap);
                let cost = schedule_cost(&machines, q).expect("laminar decomposition");
                debug_assert_eq!(cost.total, opt_cost);
                return Ok(OracleResult {
                    opt_cost,
                    min_wakeups,
                    witness: Schedule { machines, assignment, cost },
                });
            }
            if profile[i] < m {
                profile[i] += 1;
                break;
            }
            profile[i] = 0;
            i += 1;
        }
    }
}

/// Exhaustive minimum skeleton cost: cheapest slot subset with an active
/// slot in `[r-1, d]` (clipped to the horizon) for every job.
pub fn brute_min_skeleton(instance: &Instance) -> Result<i64, OracleError> {
    let d = instance.horizon;
    if d > 16 {
        return Err(OracleError::TooLarge(format!("2^{d} slot subsets")));
    }
    if instance.jobs.is_empty() {
        return Ok(0);
    }
    let q = instance.wake_cost;
    let cover_masks: Vec<u32> = instance
        .jobs
        .iter()
        .map(|j| {
            let lo = (j.release - 1).max(0);
            let hi = j.deadline.min(d - 1);
            (lo..=hi).fold(0u32, |acc, t| acc | 1 << t)
        })
        .collect();
    let mut best = i64::MAX;
    for mask in 0..1u32 << d {
        let (cost, _) = mask_cost(mask, q);
        if cost < best && cover_masks.iter().all(|&c| mask & c != 0) {
            best = cost;
        }
    }
    Ok(best)
}

/// Exhaustive maximum deficiency over all slot unions. Returns the maximum
/// value and every maximizing disjoint interval set; a feasible pair yields
/// `(0, [[]])`.
pub fn brute_max_deficiency(
    jobs: &[Job],
    supply: &SupplySet,
    m: i64,
) -> Result<(i64, Vec<Vec<ActiveInterval>>), OracleError> {
    let horizon = supply
        .intervals
        .iter()
        .map(|iv| iv.end)
        .chain(jobs.iter().map(|j| j.deadline))
        .max()
        .unwrap_or(0);
    if horizon > 12 {
        return Err(OracleError::TooLarge(format!("2^{horizon} slot unions")));
    }
    let profile = supply.profile(horizon, m);
    let mut best = 0;
    let mut argmax: Vec<Vec<ActiveInterval>> = vec![Vec::new()];
    for mask in 1..1u32 << horizon {
        let intervals = slots_to_intervals(mask_slots(mask));
        let value = deficiency(jobs, &intervals, &profile);
        if value > best {
            best = value;
            argmax = vec![intervals];
        } else if value == best && best > 0 {
            argmax.push(intervals);
        }
    }
    Ok((best, argmax))
}

/// The single-machine family with integral/fractional cost ratio tending to
/// 4/3: q unit jobs in windows 2q+1 apart, plus q-1 long jobs of volume q
/// spanning consecutive unit windows. Wake cost q, optimum cost 2q².
pub fn gap_instance(q: i64) -> Result<Instance, OracleError> {
    if q < 2 {
        return Err(OracleError::BadGapParameter(q));
    }
    let release = |i: i64| 2 * (i - 1) * q + i - 1;
    let mut jobs = Vec::new();
    for i in 1..=q {
        jobs.push(Job::new(jobs.len(), release(i), release(i) + 1, 1));
    }
    for i in 1..q {
        jobs.push(Job::new(jobs.len(), release(i), release(i + 1) + 1, q));
    }
    Ok(Instance::new(jobs, 1, q).expect("gap family is well-formed"))
}

/// Seeded random instance: each job gets `r` uniform in `[0, d-1]`, a window
/// length uniform in `[1, d-r]` and volume uniform in the window. For a
/// single machine, EDF-infeasible draws are rejected and redrawn from the
/// same stream.
pub fn random_instance(seed: u64, n: usize, d: Time, q: i64, m: i64) -> Instance {
    assert!(d >= 1 && q >= 1 && m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let jobs: Vec<Job> = (0..n)
            .map(|id| {
                let r = rng.gen_range(0..d);
                let window = rng.gen_range(1..=d - r);
                let p = rng.gen_range(1..=window);
                Job::new(id, r, r + window, p)
            })
            .collect();
        let instance = Instance::new(jobs, m, q).expect("generated within bounds");
        if !instance.jobs.is_empty() {
            let full = SupplySet::new(
                (0..m).map(|_| ActiveInterval::new(0, instance.horizon)).collect(),
            );
            if matches!(dsi_check(&full, &instance.jobs, m), DsiOutcome::Infeasible(_)) {
                continue;
            }
        }
        return instance;
    }
    panic!("could not draw a feasible instance for n={n}, d={d}, m={m}");
}
