//! The strengthened LP relaxation and its rounding to a 2-approximation.
//!
//! Stage 1 minimizes `sum x_I (|I| + q)` over fractional supply intervals
//! subject to volume, capacity and blackout-overlap constraints; stage 2
//! pins that cost and maximizes the saturation `sum min(m_t, 1)`. The
//! fractional optimum is then rounded: add one integral interval per busy
//! non-block (F1), floor the non-block capacity (F2), swap a weight-1
//! sub-family for an integral skeleton obtained by round-robin dealing
//! (F3), and extend to feasibility one slot at a time. Every inequality of
//! the analysis is asserted at runtime in exact rational arithmetic; the
//! final cost is at most twice the LP value.

use std::collections::{BTreeMap, HashSet};

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::feasibility::{dsi_check, ext_alg_step, DsiOutcome, SupplySet};
use crate::model::{
    schedule_cost, wakeups_from_profile, ActiveInterval, CapacityProfile, Instance, Job,
    Schedule, Time,
};
use crate::multi::{build_blackout_table, BlackoutTable};
use crate::simplex::{self, Problem, Relation, Row, Solved};
use crate::skeleton::{InfeasibleInstance, Skeleton};

/// The stage-2 optimum of the strengthened LP, all values exact.
#[derive(Debug, Clone)]
pub struct FractionalSolution {
    /// nonzero interval weights, `0 <= x_I <= m`
    pub x: BTreeMap<ActiveInterval, BigRational>,
    /// fractional job-to-slot assignment, `0 <= f(i,t) <= 1`
    pub f: BTreeMap<(usize, Time), BigRational>,
    /// per-slot capacity `m_t = sum over I containing t of x_I`
    pub m_t: Vec<BigRational>,
    /// per-slot saturation, `y_t <= min(m_t, 1)`, stage-2 maximal
    pub y_t: Vec<BigRational>,
    /// stage-1 objective `sum x_I (|I| + q)`
    pub value: BigRational,
    pub wake_cost: i64,
}

/// Partition of `[0, D)` into maximal runs with `m_t < 1` (blocks) and
/// `m_t >= 1` (non-blocks).
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub blocks: Vec<ActiveInterval>,
    pub non_blocks: Vec<ActiveInterval>,
    /// capacity inside blocks, `sum over block slots of m_t`
    pub p_b: BigRational,
    /// capacity inside non-blocks
    pub p_n: BigRational,
    /// total wake-up cost `q * sum x_I`
    pub q_f: BigRational,
}

/// Violation of the skeleton-LP preconditions of the round-robin rounding.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SkeletonLpViolation {
    #[error("total interval weight at slot {0} exceeds 1")]
    SlotOverweight(Time),
    #[error("job {0} has total overlapping interval weight below 1")]
    JobUncovered(usize),
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn interval_cost(iv: &ActiveInterval, wake_cost: i64) -> i64 {
    iv.len() + wake_cost
}

/// Row identities, used to rebuild the problem as interval columns are
/// generated and to price candidate columns from the duals.
#[derive(Debug, Clone, Copy)]
enum RowKind {
    /// `sum_t f(i,t) = p_i`
    JobVolume,
    /// `sum_i f(i,t) - sum_{I contains t} x_I <= 0`
    SlotDemand(Time),
    /// `sum_{I contains t} x_I <= m`
    SlotCap(Time),
    /// `f(i,t) <= 1` (only needed when m > 1)
    FUpper,
    /// `sum_{I overlapping [a,b]} x_I >= m - l(a,b)`
    Blackout(Time, Time),
    /// `y_t - sum_{I contains t} x_I <= 0`
    YLink(Time),
    /// `y_t <= 1`
    YUpper,
    /// `sum x_I (|I| + q) = stage-1 value`
    Pin,
}

struct LpContext<'a> {
    instance: &'a Instance,
    /// pruned blackout rows `(a, b, m - l)` with positive right-hand side
    pairs: Vec<(Time, Time, i64)>,
    /// (job index, slot) pairs indexing the f variables
    f_vars: Vec<(usize, Time)>,
}

impl<'a> LpContext<'a> {
    fn new(instance: &'a Instance, blackout: &BlackoutTable) -> Self {
        let m = instance.machines;
        let mut raw: Vec<(Time, Time, i64)> = blackout
            .levels
            .iter()
            .filter_map(|(&(a, b), &l)| (m - l > 0).then_some((a, b, m - l)))
            .collect();
        // a row is implied by any row over a contained span with an equal
        // or larger right-hand side (its overlap sum is a sub-sum)
        raw.sort();
        let pairs: Vec<_> = raw
            .iter()
            .filter(|&&(a, b, rhs)| {
                !raw.iter().any(|&(a2, b2, rhs2)| {
                    (a2, b2) != (a, b) && a <= a2 && b2 <= b && rhs2 >= rhs
                })
            })
            .copied()
            .collect();
        let mut f_vars = Vec::new();
        for (i, job) in instance.jobs.iter().enumerate() {
            for t in job.release..job.deadline {
                f_vars.push((i, t));
            }
        }
        LpContext { instance, pairs, f_vars }
    }

    /// Builds the stage-1 or stage-2 problem over the given interval
    /// columns. Variable order: x (one per interval), f, then (stage 2
    /// only) y per slot. Returns the problem and the row kinds.
    fn build(
        &self,
        ivs: &[ActiveInterval],
        pin: Option<&BigRational>,
    ) -> (Problem, Vec<RowKind>) {
        let instance = self.instance;
        let d = instance.horizon;
        let m = instance.machines;
        let nx = ivs.len();
        let nf = self.f_vars.len();
        let f_base = nx;
        let y_base = nx + nf;
        let stage2 = pin.is_some();

        let mut objective = vec![BigRational::zero(); if stage2 { y_base + d as usize } else { y_base }];
        if stage2 {
            for t in 0..d as usize {
                objective[y_base + t] = -BigRational::one();
            }
        } else {
            for (j, iv) in ivs.iter().enumerate() {
                objective[j] = big(interval_cost(iv, instance.wake_cost));
            }
        }

        let mut rows = Vec::new();
        let mut kinds = Vec::new();
        // per-job volume
        for (i, job) in instance.jobs.iter().enumerate() {
            let coeffs = self
                .f_vars
                .iter()
                .enumerate()
                .filter(|(_, &(fi, _))| fi == i)
                .map(|(k, _)| (f_base + k, BigRational::one()))
                .collect();
            rows.push(Row {
                coeffs,
                relation: Relation::Eq,
                rhs: big(job.processing),
            });
            kinds.push(RowKind::JobVolume);
        }
        // per-slot demand and machine cap
        for t in 0..d {
            let x_cols: Vec<usize> = ivs
                .iter()
                .enumerate()
                .filter(|(_, iv)| iv.covers_slot(t))
                .map(|(j, _)| j)
                .collect();
            let mut demand: Vec<(usize, BigRational)> = self
                .f_vars
                .iter()
                .enumerate()
                .filter(|(_, &(_, ft))| ft == t)
                .map(|(k, _)| (f_base + k, BigRational::one()))
                .collect();
            demand.extend(x_cols.iter().map(|&j| (j, -BigRational::one())));
            rows.push(Row { coeffs: demand, relation: Relation::Le, rhs: BigRational::zero() });
            kinds.push(RowKind::SlotDemand(t));
            rows.push(Row {
                coeffs: x_cols.iter().map(|&j| (j, BigRational::one())).collect(),
                relation: Relation::Le,
                rhs: big(m),
            });
            kinds.push(RowKind::SlotCap(t));
        }
        // f <= 1 is implied by the demand rows when m = 1
        if m > 1 {
            for k in 0..nf {
                rows.push(Row {
                    coeffs: vec![(f_base + k, BigRational::one())],
                    relation: Relation::Le,
                    rhs: BigRational::one(),
                });
                kinds.push(RowKind::FUpper);
            }
        }
        // blackout overlap
        for &(a, b, rhs) in &self.pairs {
            rows.push(Row {
                coeffs: ivs
                    .iter()
                    .enumerate()
                    .filter(|(_, iv)| iv.overlaps_span(a, b))
                    .map(|(j, _)| (j, BigRational::one()))
                    .collect(),
                relation: Relation::Ge,
                rhs: big(rhs),
            });
            kinds.push(RowKind::Blackout(a, b));
        }
        if let Some(v) = pin {
            for t in 0..d {
                let mut coeffs = vec![(y_base + t as usize, BigRational::one())];
                coeffs.extend(
                    ivs.iter()
                        .enumerate()
                        .filter(|(_, iv)| iv.covers_slot(t))
                        .map(|(j, _)| (j, -BigRational::one())),
                );
                rows.push(Row { coeffs, relation: Relation::Le, rhs: BigRational::zero() });
                kinds.push(RowKind::YLink(t));
                rows.push(Row {
                    coeffs: vec![(y_base + t as usize, BigRational::one())],
                    relation: Relation::Le,
                    rhs: BigRational::one(),
                });
                kinds.push(RowKind::YUpper);
            }
            rows.push(Row {
                coeffs: ivs
                    .iter()
                    .enumerate()
                    .map(|(j, iv)| (j, big(interval_cost(iv, instance.wake_cost))))
                    .collect(),
                relation: Relation::Eq,
                rhs: v.clone(),
            });
            kinds.push(RowKind::Pin);
        }
        (Problem { objective, rows }, kinds)
    }

    /// Reduced cost of the column of a candidate interval under the duals
    /// of the current restricted problem.
    fn reduced_cost(
        &self,
        iv: &ActiveInterval,
        kinds: &[RowKind],
        duals: &[BigRational],
        stage2: bool,
    ) -> BigRational {
        let cost = big(interval_cost(iv, self.instance.wake_cost));
        let mut priced = if stage2 { BigRational::zero() } else { cost.clone() };
        for (kind, y) in kinds.iter().zip(duals) {
            if y.is_zero() {
                continue;
            }
            let coef: i64 = match kind {
                RowKind::SlotDemand(t) if iv.covers_slot(*t) => -1,
                RowKind::SlotCap(t) if iv.covers_slot(*t) => 1,
                RowKind::Blackout(a, b) if iv.overlaps_span(*a, *b) => 1,
                RowKind::YLink(t) if iv.covers_slot(*t) => -1,
                RowKind::Pin => {
                    priced -= y * &cost;
                    continue;
                }
                _ => 0,
            };
            if coef != 0 {
                priced -= y * big(coef);
            }
        }
        priced
    }

    /// Solves the restricted problem, generating interval columns until no
    /// candidate prices out. Returns the solution and the final columns.
    fn solve_with_generation(
        &self,
        ivs: &mut Vec<ActiveInterval>,
        candidates: &[ActiveInterval],
        pin: Option<&BigRational>,
    ) -> Result<simplex::Solution, InfeasibleInstance> {
        loop {
            let (problem, kinds) = self.build(ivs, pin);
            let solution = match simplex::solve(&problem) {
                Solved::Optimal(s) => s,
                Solved::Infeasible => return Err(InfeasibleInstance),
                Solved::Unbounded => unreachable!("the objective is bounded"),
            };
            let present: HashSet<ActiveInterval> = ivs.iter().copied().collect();
            let mut entering: Vec<(BigRational, ActiveInterval)> = candidates
                .iter()
                .filter(|iv| !present.contains(iv))
                .map(|iv| (self.reduced_cost(iv, &kinds, &solution.duals, pin.is_some()), *iv))
                .filter(|(rc, _)| rc.is_negative())
                .collect();
            if entering.is_empty() {
                return Ok(solution);
            }
            entering.sort();
            ivs.extend(entering.iter().take(40).map(|&(_, iv)| iv));
        }
    }
}

/// Solves the two-stage LP exactly: stage 1 minimizes the supply cost,
/// stage 2 pins that cost and maximizes `sum y_t`. For larger horizons the
/// interval columns are generated lazily from the duals.
pub fn build_and_solve_lp(
    instance: &Instance,
    blackout: &BlackoutTable,
) -> Result<FractionalSolution, InfeasibleInstance> {
    let d = instance.horizon;
    if instance.jobs.is_empty() || d == 0 {
        return Ok(FractionalSolution {
            x: BTreeMap::new(),
            f: BTreeMap::new(),
            m_t: vec![BigRational::zero(); d as usize],
            y_t: vec![BigRational::zero(); d as usize],
            value: BigRational::zero(),
            wake_cost: instance.wake_cost,
        });
    }
    let ctx = LpContext::new(instance, blackout);

    let candidates: Vec<ActiveInterval> = (0..d)
        .flat_map(|s| (s + 1..=d).map(move |e| ActiveInterval::new(s, e)))
        .collect();
    let mut ivs: Vec<ActiveInterval> = if candidates.len() <= 170 {
        candidates.clone()
    } else {
        // event-point spans, unit slots and the full horizon; [0, D) keeps
        // the restricted problem feasible whenever the instance is
        let mut endpoints = instance.event_points();
        endpoints.extend([0, d]);
        endpoints.sort_unstable();
        endpoints.dedup();
        endpoints.retain(|&t| (0..=d).contains(&t));
        let mut initial: Vec<ActiveInterval> = endpoints
            .iter()
            .flat_map(|&s| endpoints.iter().filter(move |&&e| e > s).map(move |&e| ActiveInterval::new(s, e)))
            .collect();
        initial.extend((0..d).map(|t| ActiveInterval::new(t, t + 1)));
        initial.sort_unstable();
        initial.dedup();
        initial
    };

    let stage1 = ctx.solve_with_generation(&mut ivs, &candidates, None)?;
    let value = stage1.value.clone();
    let stage2 = ctx.solve_with_generation(&mut ivs, &candidates, Some(&value))?;

    let mut x = BTreeMap::new();
    for (j, iv) in ivs.iter().enumerate() {
        if !stage2.x[j].is_zero() {
            x.insert(*iv, stage2.x[j].clone());
        }
    }
    let f_base = ivs.len();
    let mut f = BTreeMap::new();
    for (k, &(i, t)) in ctx.f_vars.iter().enumerate() {
        if !stage2.x[f_base + k].is_zero() {
            f.insert((i, t), stage2.x[f_base + k].clone());
        }
    }
    let y_base = f_base + ctx.f_vars.len();
    let y_t = (0..d as usize).map(|t| stage2.x[y_base + t].clone()).collect();
    let m_t = (0..d)
        .map(|t| {
            x.iter()
                .filter(|(iv, _)| iv.covers_slot(t))
                .map(|(_, v)| v.clone())
                .sum()
        })
        .collect();
    Ok(FractionalSolution { x, f, m_t, y_t, value, wake_cost: instance.wake_cost })
}

/// Splits rational interval weights into equal-weight copies (weight
/// `eps = gcd of the weights`) and uncrosses them: a crossing pair with
/// spans `[a,b], [c,d]`, `a < c < b < d`, becomes union `[a,d]` plus
/// intersection `[c,b]`. Returns `(interval, copies)` pairs and `eps`;
/// per-slot weight totals are preserved exactly.
pub fn normalize_noncrossing(
    x: &BTreeMap<ActiveInterval, BigRational>,
) -> (Vec<(ActiveInterval, i64)>, BigRational) {
    let weights: Vec<(&ActiveInterval, &BigRational)> =
        x.iter().filter(|(_, v)| !v.is_zero()).collect();
    if weights.is_empty() {
        return (Vec::new(), BigRational::one());
    }
    let lcm = weights
        .iter()
        .fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
    let gcd = weights
        .iter()
        .map(|(_, v)| v.numer() * (&lcm / v.denom()))
        .fold(BigInt::zero(), |acc, n| acc.gcd(&n));
    let eps = BigRational::new(gcd, lcm);

    let mut counts: BTreeMap<ActiveInterval, i64> = BTreeMap::new();
    for (iv, v) in &weights {
        let c = (*v / &eps).to_integer().to_i64().expect("copy count fits i64");
        *counts.entry(**iv).or_insert(0) += c;
    }
    // uncross until fixpoint; sum of count * len^2 strictly increases
    loop {
        let keys: Vec<ActiveInterval> = counts.keys().copied().collect();
        let mut found = None;
        'scan: for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                // keys are sorted, so a.start <= b.start
                if a.start < b.start && b.start < a.end && a.end < b.end {
                    found = Some((*a, *b));
                    break 'scan;
                }
            }
        }
        let Some((a, b)) = found else { break };
        let k = counts[&a].min(counts[&b]);
        for iv in [a, b] {
            let c = counts.get_mut(&iv).unwrap();
            *c -= k;
            if *c == 0 {
                counts.remove(&iv);
            }
        }
        *counts.entry(ActiveInterval::new(a.start, b.end)).or_insert(0) += k;
        *counts.entry(ActiveInterval::new(b.start, a.end)).or_insert(0) += k;
    }

    #[cfg(debug_assertions)]
    {
        let horizon = x.keys().map(|iv| iv.end).max().unwrap_or(0);
        for t in 0..horizon {
            let before: BigRational = x
                .iter()
                .filter(|(iv, _)| iv.covers_slot(t))
                .map(|(_, v)| v.clone())
                .sum();
            let after: i64 = counts
                .iter()
                .filter(|(iv, _)| iv.covers_slot(t))
                .map(|(_, &c)| c)
                .sum();
            debug_assert_eq!(before, big(after) * &eps, "uncrossing changed slot {t}");
        }
    }
    (counts.into_iter().collect(), eps)
}

/// Maximal runs of block (`m_t < 1`) and non-block (`m_t >= 1`) slots.
pub fn classify_blocks(solution: &FractionalSolution) -> BlockStructure {
    let one = BigRational::one();
    let mut blocks = Vec::new();
    let mut non_blocks = Vec::new();
    let mut p_b = BigRational::zero();
    let mut p_n = BigRational::zero();
    let mut t = 0usize;
    let d = solution.m_t.len();
    while t < d {
        let is_block = solution.m_t[t] < one;
        let start = t;
        while t < d && (solution.m_t[t] < one) == is_block {
            if is_block {
                p_b += &solution.m_t[t];
            } else {
                p_n += &solution.m_t[t];
            }
            t += 1;
        }
        let run = ActiveInterval::new(start as Time, t as Time);
        if is_block {
            blocks.push(run);
        } else {
            non_blocks.push(run);
        }
    }
    let q_f = big(solution.wake_cost)
        * solution.x.values().cloned().sum::<BigRational>();
    BlockStructure { blocks, non_blocks, p_b, p_n, q_f }
}

/// Rewrites every nesting `[a,b] properly containing [c,d]` (`a < c`,
/// `d < b`) into `[a,d], [c,b]` until none remain. Slot totals, copy count
/// and total length are preserved; afterwards any containment shares an
/// endpoint, so under (start, end) order the copies overlapping a fixed
/// span form a contiguous run — the property the round-robin deal needs.
/// Terminates because the sum of count * len^2 drops by `2uw` per step.
fn unnest(copies: Vec<(ActiveInterval, i64)>) -> Vec<(ActiveInterval, i64)> {
    let mut counts: BTreeMap<ActiveInterval, i64> = copies.into_iter().collect();
    loop {
        let keys: Vec<ActiveInterval> = counts.keys().copied().collect();
        let mut found = None;
        'scan: for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                // keys are sorted, so a.start <= b.start
                if a.start < b.start && b.end < a.end {
                    found = Some((*a, *b));
                    break 'scan;
                }
            }
        }
        let Some((a, b)) = found else { break };
        let k = counts[&a].min(counts[&b]);
        for iv in [a, b] {
            let c = counts.get_mut(&iv).unwrap();
            *c -= k;
            if *c == 0 {
                counts.remove(&iv);
            }
        }
        *counts.entry(ActiveInterval::new(a.start, b.end)).or_insert(0) += k;
        *counts.entry(ActiveInterval::new(b.start, a.end)).or_insert(0) += k;
    }
    counts.into_iter().collect()
}

/// Rounds a fractional skeleton (per-slot weight at most 1, per-job
/// overlapping weight at least 1) to an integral one of no larger cost:
/// normalize to `eps`-copies, remove proper nestings, sort by (start, end)
/// and deal the copies round-robin into `ceil(1/eps)` candidates; each
/// candidate is verified disjoint and covering, and the cheapest is
/// returned.
pub fn round_robin_skeleton(
    x: &BTreeMap<ActiveInterval, BigRational>,
    jobs: &[Job],
    wake_cost: i64,
) -> Result<Skeleton, SkeletonLpViolation> {
    let one = BigRational::one();
    let horizon = x.keys().map(|iv| iv.end).max().unwrap_or(0);
    for t in 0..horizon {
        let w: BigRational = x
            .iter()
            .filter(|(iv, _)| iv.covers_slot(t))
            .map(|(_, v)| v.clone())
            .sum();
        if w > one {
            return Err(SkeletonLpViolation::SlotOverweight(t));
        }
    }
    for job in jobs {
        let w: BigRational = x
            .iter()
            .filter(|(iv, _)| iv.overlaps_span(job.release, job.deadline))
            .map(|(_, v)| v.clone())
            .sum();
        if w < one {
            return Err(SkeletonLpViolation::JobUncovered(job.id));
        }
    }

    let (grouped, eps) = normalize_noncrossing(x);
    if grouped.is_empty() {
        return Ok(Skeleton::new(Vec::new()));
    }
    let grouped = unnest(grouped);
    let mut copies: Vec<ActiveInterval> = Vec::new();
    for (iv, c) in grouped {
        copies.extend(std::iter::repeat_n(iv, c as usize));
    }
    copies.sort_unstable();
    // ceil(1/eps)
    let t_cand = ((eps.denom() + eps.numer() - BigInt::one()) / eps.numer())
        .to_i64()
        .expect("candidate count fits i64")
        .max(1) as usize;

    let frac_cost: BigRational = x
        .iter()
        .map(|(iv, v)| v * big(interval_cost(iv, wake_cost)))
        .sum();
    let mut best: Option<(i64, Vec<ActiveInterval>)> = None;
    for j in 0..t_cand.min(copies.len()) {
        // dealt copies are non-crossing and sorted, so merging adjacent or
        // equal spans yields a disjoint family
        let mut dealt: Vec<ActiveInterval> = Vec::new();
        for iv in copies.iter().skip(j).step_by(t_cand) {
            match dealt.last_mut() {
                Some(last) if iv.start <= last.end => {
                    assert!(
                        iv.start >= last.end || iv.end <= last.end,
                        "round-robin candidate {j} has properly overlapping intervals"
                    );
                    last.end = last.end.max(iv.end);
                }
                _ => dealt.push(*iv),
            }
        }
        for w in dealt.windows(2) {
            assert!(w[0].end < w[1].start || w[0].end == w[1].start, "sorted");
        }
        let candidate = Skeleton::new(dealt);
        assert!(
            candidate.covers(jobs),
            "round-robin candidate {j} misses a job"
        );
        let cost = candidate.cost(wake_cost);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, candidate.intervals));
        }
    }
    let (cost, intervals) = best.expect("at least one candidate");
    assert!(
        big(cost) <= frac_cost,
        "integral skeleton must not cost more than the fractional one"
    );
    Ok(Skeleton::new(intervals))
}

/// One `eps`-granular copy group of the working supply multiset. Counts
/// are in units of `1/b` where `b` is the denominator of `eps`, so that
/// the weight-1 intervals added by F1 are representable too.
#[derive(Debug, Clone)]
struct Group {
    iv: ActiveInterval,
    units: i64,
    /// F1 intervals are never trimmed
    locked: bool,
}

fn coverage_units(groups: &[Group], horizon: usize) -> Vec<i64> {
    let mut cov = vec![0i64; horizon];
    for g in groups {
        for t in g.iv.slots() {
            cov[t as usize] += g.units;
        }
    }
    cov
}

fn cost_units(groups: &[Group], wake_cost: i64) -> i64 {
    groups.iter().map(|g| g.units * interval_cost(&g.iv, wake_cost)).sum()
}

/// Removes the fractional excess above `floor(m1_t)` inside each
/// non-block by deleting pieces of unlocked copies, preferring whole-copy
/// deletions and end trims over interior splits. Block slots are never
/// modified.
fn trim_non_blocks(
    groups: &mut Vec<Group>,
    non_blocks: &[ActiveInterval],
    b: i64,
    horizon: usize,
) {
    for nb in non_blocks {
        let mut cov = coverage_units(groups, horizon);
        let target: Vec<i64> =
            nb.slots().map(|t| cov[t as usize] - cov[t as usize] % b).collect();
        let tg = |t: Time| target[(t - nb.start) as usize];
        for t in nb.slots() {
            while cov[t as usize] > tg(t) {
                let mut rend = t + 1;
                while rend < nb.end && cov[rend as usize] > tg(rend) {
                    rend += 1;
                }
                // candidate copies covering t; a piece [t, p) is split-free
                // when it starts at the copy start or reaches the copy end
                let mut pick: Option<(bool, i64, Time, usize)> = None;
                for (gi, g) in groups.iter().enumerate() {
                    if g.locked || g.units == 0 || !g.iv.covers_slot(t) {
                        continue;
                    }
                    let p = g.iv.end.min(rend);
                    let clean = g.iv.start == t || g.iv.end == p;
                    let key = (clean, p - t, g.iv.start, gi);
                    if pick.is_none_or(|best| (key.0, key.1, key.2) > (best.0, best.1, best.2)) {
                        pick = Some(key);
                    }
                }
                let (_, _, _, gi) =
                    pick.expect("excess implies an unlocked copy covers the slot");
                let (start, end) = (groups[gi].iv.start, groups[gi].iv.end);
                let p = end.min(rend);
                groups[gi].units -= 1;
                if start < t {
                    groups.push(Group { iv: ActiveInterval::new(start, t), units: 1, locked: false });
                }
                if p < end {
                    groups.push(Group { iv: ActiveInterval::new(p, end), units: 1, locked: false });
                }
                for s in t..p {
                    cov[s as usize] -= 1;
                }
            }
        }
        groups.retain(|g| g.units > 0);
        let cov = coverage_units(groups, horizon);
        for t in nb.slots() {
            debug_assert_eq!(cov[t as usize], tg(t), "trim must hit the floor profile");
        }
    }
    // merge duplicate spans
    let mut merged: BTreeMap<(ActiveInterval, bool), i64> = BTreeMap::new();
    for g in groups.iter() {
        *merged.entry((g.iv, g.locked)).or_insert(0) += g.units;
    }
    *groups = merged
        .into_iter()
        .map(|((iv, locked), units)| Group { iv, units, locked })
        .collect();
}

/// Maximum-total-length sub-multiset of the copies with per-slot weight at
/// most 1, forced to contain every copy that covers a block slot and to
/// saturate weight exactly 1 on every non-block slot. Solved as an exact
/// LP over the interval matrix; the vertex is integral in copy units.
fn select_f_prime(
    groups: &[Group],
    is_block: &[bool],
    b: i64,
) -> Vec<i64> {
    let horizon = is_block.len();
    let forced: Vec<bool> = groups
        .iter()
        .map(|g| g.iv.slots().any(|t| (t as usize) < horizon && is_block[t as usize]))
        .collect();
    let mut rows = Vec::new();
    for t in 0..horizon {
        let coeffs: Vec<(usize, BigRational)> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iv.covers_slot(t as Time))
            .map(|(j, _)| (j, BigRational::one()))
            .collect();
        if coeffs.is_empty() {
            assert!(is_block[t], "non-block slots retain coverage after F2");
            continue;
        }
        rows.push(Row {
            coeffs,
            relation: if is_block[t] { Relation::Le } else { Relation::Eq },
            rhs: big(b),
        });
    }
    for (j, g) in groups.iter().enumerate() {
        rows.push(Row {
            coeffs: vec![(j, BigRational::one())],
            relation: if forced[j] { Relation::Eq } else { Relation::Le },
            rhs: big(g.units),
        });
    }
    let objective = groups.iter().map(|g| -big(g.iv.len())).collect();
    match simplex::solve(&Problem { objective, rows }) {
        Solved::Optimal(s) => s
            .x
            .iter()
            .map(|v| {
                assert!(v.is_integer(), "interval-matrix vertex must be integral");
                v.to_integer().to_i64().expect("selection fits i64")
            })
            .collect(),
        other => panic!("skeleton sub-family selection must be solvable: {other:?}"),
    }
}

/// Exact per-stage costs of one [`round_two_approx`] run.
#[derive(Debug, Clone)]
pub struct RoundingTrace {
    pub lp_value: BigRational,
    pub cost_f1: BigRational,
    pub cost_f2: BigRational,
    pub cost_f3: BigRational,
    pub extension_steps: i64,
}

/// The pseudo-polynomial 2-approximation: solve the strengthened LP, round
/// F -> F1 -> F2 -> F3 and extend to feasibility. Every inequality of the
/// analysis is asserted exactly; the result costs at most twice the LP
/// value (hence at most 2 OPT).
pub fn round_two_approx(instance: &Instance) -> Result<Schedule, InfeasibleInstance> {
    round_two_approx_traced(instance).map(|(schedule, _)| schedule)
}

/// [`round_two_approx`] with the per-stage cost trace.
pub fn round_two_approx_traced(
    instance: &Instance,
) -> Result<(Schedule, RoundingTrace), InfeasibleInstance> {
    if instance.jobs.is_empty() {
        let trace = RoundingTrace {
            lp_value: BigRational::zero(),
            cost_f1: BigRational::zero(),
            cost_f2: BigRational::zero(),
            cost_f3: BigRational::zero(),
            extension_steps: 0,
        };
        return Ok((Schedule::empty(), trace));
    }
    let blackout = build_blackout_table(instance)?;
    let sol = build_and_solve_lp(instance, &blackout)?;
    let q = instance.wake_cost;
    let m = instance.machines;
    let d = instance.horizon as usize;
    let structure = classify_blocks(&sol);
    let mut is_block = vec![false; d];
    for blk in &structure.blocks {
        for t in blk.slots() {
            is_block[t as usize] = true;
        }
    }

    let (copies, eps) = normalize_noncrossing(&sol.x);
    let a = eps.numer().to_i64().expect("eps numerator fits i64");
    let b = eps.denom().to_i64().expect("eps denominator fits i64");
    let mut groups: Vec<Group> = copies
        .iter()
        .map(|&(iv, c)| Group { iv, units: c * a, locked: false })
        .collect();
    let cost_f = big(cost_units(&groups, q)) / big(b);
    assert_eq!(cost_f, sol.value, "copy cost must match the LP objective");

    // F1: one weight-1 interval per non-block that exceeds capacity 1
    let one = BigRational::one();
    for nb in &structure.non_blocks {
        if nb.slots().any(|t| sol.m_t[t as usize] > one) {
            let overlap: BigRational = sol
                .x
                .iter()
                .filter(|(iv, _)| iv.overlaps_span(nb.start, nb.end))
                .map(|(_, v)| v.clone())
                .sum();
            assert!(
                overlap >= big(2),
                "a busy non-block must overlap weight at least 2"
            );
            groups.push(Group { iv: *nb, units: b, locked: true });
        }
    }
    let cost_f1 = big(cost_units(&groups, q)) / big(b);
    assert!(
        cost_f1 <= &cost_f + &structure.p_n + &structure.q_f,
        "Cost(F1) <= Cost(F) + P_N + Q_F"
    );

    // F2: floor the capacity on non-block slots
    trim_non_blocks(&mut groups, &structure.non_blocks, b, d);
    let cost_f2 = big(cost_units(&groups, q)) / big(b);
    assert!(cost_f2 <= cost_f1, "Cost(F2) <= Cost(F1)");

    // F'_2 and the round-robin skeleton over J_S = J_B + unit jobs
    let selected = select_f_prime(&groups, &is_block, b);
    let mut f_prime: BTreeMap<ActiveInterval, BigRational> = BTreeMap::new();
    for (g, &z) in groups.iter().zip(&selected) {
        if z > 0 {
            *f_prime.entry(g.iv).or_insert_with(BigRational::zero) +=
                BigRational::new(z.into(), b.into());
        }
    }
    let mut j_s: Vec<Job> = instance
        .jobs
        .iter()
        .filter(|j| j.window_slots().all(|t| (t as usize) < d && is_block[t as usize]))
        .cloned()
        .collect();
    let mut next_id = instance.jobs.len();
    for (t, &blk) in is_block.iter().enumerate() {
        if !blk {
            j_s.push(Job::new(next_id, t as Time, t as Time + 1, 1));
            next_id += 1;
        }
    }
    let skeleton = round_robin_skeleton(&f_prime, &j_s, q)
        .expect("F'_2 is a feasible fractional skeleton for J_S");

    // F3: integral skeleton plus a laminar realization of the remainder
    let mut rem = vec![0i64; d];
    for (g, &z) in groups.iter().zip(&selected) {
        for t in g.iv.slots() {
            rem[t as usize] += g.units - z;
        }
    }
    let rem: Vec<i64> = rem
        .into_iter()
        .map(|units| {
            assert!(units % b == 0, "remainder capacity must be integral");
            units / b
        })
        .collect();
    let (_, rem_machines) = wakeups_from_profile(&CapacityProfile(rem));
    let mut f3: Vec<ActiveInterval> = rem_machines.into_iter().flatten().collect();
    f3.extend(skeleton.intervals.iter().copied());
    let cost_f3 = big(f3.iter().map(|iv| interval_cost(iv, q)).sum::<i64>());
    assert!(cost_f3 <= cost_f2, "Cost(F3) <= Cost(F2)");

    // extension phase: one slot per step, at most P_B steps
    let mut supply = SupplySet::new(f3);
    let mut steps = 0i64;
    let assignment = loop {
        match dsi_check(&supply, &instance.jobs, m) {
            DsiOutcome::Feasible(asg) => break asg,
            DsiOutcome::Infeasible(cert) => {
                let (next, _) = ext_alg_step(&supply, &instance.jobs, m, &cert)
                    .map_err(|_| InfeasibleInstance)?;
                supply = next;
                steps += 1;
            }
        }
    };
    assert!(big(steps) <= structure.p_b, "extension uses at most P_B steps");

    let profile = supply.profile(instance.horizon, m);
    let (_, machines) = wakeups_from_profile(&profile);
    let cost = schedule_cost(&machines, q).expect("laminar machines are disjoint");
    assert!(
        big(cost.total) <= big(2) * &sol.value,
        "rounded cost must stay within twice the LP value"
    );
    debug_assert!(
        crate::model::validate_schedule(instance, &machines, &assignment).is_ok()
    );
    let trace = RoundingTrace {
        lp_value: sol.value.clone(),
        cost_f1,
        cost_f2,
        cost_f3,
        extension_steps: steps,
    };
    Ok((Schedule { machines, assignment, cost }, trace))
}
