//! Single-machine approximation algorithms and their guarantee checks.
//!
//! All four algorithms reduce to "compute a minimum-cost skeleton at some
//! wake-cost scale, then extend it to a feasible schedule":
//!
//! * `opt_plus_p` — scale 1; cost at most OPT + P.
//! * `scaled_algorithm(alpha)` — cost at most OPT + 2(alpha+1)Q + P/(alpha-1).
//! * `near_optimal` — best of scales sqrt(P/(i*q)) for doubling i; cost at
//!   most OPT(1 + 8/sqrt(t)) with t = max(P/Q, Q/P).
//! * `approx_35_18` — best of scale 1 and scale 3; a 35/18-approximation.
//!
//! Q is the wake-up cost of the optimum with fewest wake-ups among all
//! minimum-cost schedules, the strictest testable reading.

use num::rational::Rational64;
use num::{BigInt, BigRational, One};

use crate::model::{Instance, Schedule};
use crate::oracle::OracleResult;
use crate::skeleton::{extend_skeleton_to_feasible, min_cost_skeleton, InfeasibleInstance};

/// A named single-machine algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleAlgorithm {
    OptPlusP,
    Scaled(Rational64),
    NearOptimal,
    Approx3518,
}

impl SingleAlgorithm {
    pub fn name(&self) -> &'static str {
        match self {
            SingleAlgorithm::OptPlusP => "opt-plus-p",
            SingleAlgorithm::Scaled(_) => "scaled",
            SingleAlgorithm::NearOptimal => "near-opt",
            SingleAlgorithm::Approx3518 => "a35-18",
        }
    }
}

/// How an achieved cost compares against the algorithm's proven bound.
#[derive(Debug, Clone)]
pub struct GuaranteeReport {
    pub algorithm: String,
    pub achieved: i64,
    pub opt: i64,
    pub volume: i64,
    pub q_min: i64,
    pub alpha: Option<Rational64>,
    pub t: Option<Rational64>,
    /// bound value for display; the `satisfied` flag is computed exactly
    pub bound: f64,
    pub satisfied: bool,
}

pub fn run_single(
    instance: &Instance,
    alg: SingleAlgorithm,
) -> Result<Schedule, InfeasibleInstance> {
    assert_eq!(instance.machines, 1, "single-machine algorithm");
    match alg {
        SingleAlgorithm::OptPlusP => opt_plus_p(instance),
        SingleAlgorithm::Scaled(alpha) => scaled_algorithm(instance, alpha),
        SingleAlgorithm::NearOptimal => near_optimal(instance),
        SingleAlgorithm::Approx3518 => approx_35_18(instance),
    }
}

/// Minimum-cost skeleton extended to feasibility: cost at most OPT + P.
pub fn opt_plus_p(instance: &Instance) -> Result<Schedule, InfeasibleInstance> {
    let s = min_cost_skeleton(instance, Rational64::one());
    extend_skeleton_to_feasible(&s, instance)
}

/// Skeleton at wake cost scaled by `alpha > 1`, extended to feasibility:
/// cost at most OPT + 2(alpha+1)Q + P/(alpha-1).
pub fn scaled_algorithm(
    instance: &Instance,
    alpha: Rational64,
) -> Result<Schedule, InfeasibleInstance> {
    assert!(alpha > Rational64::one(), "scale must exceed 1");
    let s = min_cost_skeleton(instance, alpha);
    extend_skeleton_to_feasible(&s, instance)
}

/// Floor of sqrt(num/den) in units of 1/2^20.
fn rational_sqrt(num: i64, den: i64) -> Rational64 {
    const SHIFT: u32 = 20;
    let scaled = (num as u128) << (2 * SHIFT);
    let target = scaled / den as u128;
    Rational64::new(isqrt(target) as i64, 1 << SHIFT)
}

fn isqrt(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    let mut x = (v as f64).sqrt() as u128 + 2;
    while x * x > v {
        x = (x + v / x) / 2;
    }
    x
}

/// Best of OPT+P and the scaled algorithm at alpha = sqrt(P/(i*q)) for
/// i = 1, 2, 4, ... while alpha > 1: cost at most OPT(1 + 8/sqrt(t)).
pub fn near_optimal(instance: &Instance) -> Result<Schedule, InfeasibleInstance> {
    let mut best = opt_plus_p(instance)?;
    let p = instance.total_volume();
    let mut i = 1i64;
    while i <= p.max(1) {
        let alpha = rational_sqrt(p, i * instance.wake_cost);
        if alpha <= Rational64::one() {
            break;
        }
        let candidate = scaled_algorithm(instance, alpha)?;
        if candidate.cost.total < best.cost.total {
            best = candidate;
        }
        i *= 2;
    }
    Ok(best)
}

/// Best of OPT+P and the scaled algorithm at alpha = 3: at most (35/18)·OPT.
pub fn approx_35_18(instance: &Instance) -> Result<Schedule, InfeasibleInstance> {
    let a = opt_plus_p(instance)?;
    let b = scaled_algorithm(instance, Rational64::from_integer(3))?;
    Ok(if a.cost.total <= b.cost.total { a } else { b })
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn big_ratio(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Evaluates the proven bound for `alg` against `achieved`, using the
/// oracle optimum. Comparisons are exact; the irrational near-optimal bound
/// is checked via an equivalent squared inequality.
pub fn check_guarantee(
    instance: &Instance,
    alg: SingleAlgorithm,
    achieved: i64,
    oracle: &OracleResult,
) -> GuaranteeReport {
    let opt = oracle.opt_cost;
    let p = instance.total_volume();
    let q_min = instance.wake_cost * oracle.min_wakeups;
    let mut report = GuaranteeReport {
        algorithm: alg.name().to_string(),
        achieved,
        opt,
        volume: p,
        q_min,
        alpha: None,
        t: None,
        bound: f64::NAN,
        satisfied: false,
    };
    match alg {
        SingleAlgorithm::OptPlusP => {
            report.bound = (opt + p) as f64;
            report.satisfied = achieved <= opt + p;
        }
        SingleAlgorithm::Scaled(alpha) => {
            let a = big_ratio(alpha);
            let bound = big(opt)
                + big(2) * (a.clone() + BigRational::one()) * big(q_min)
                + big(p) / (a - BigRational::one());
            report.alpha = Some(alpha);
            report.bound = to_f64(&bound);
            report.satisfied = big(achieved) <= bound;
        }
        SingleAlgorithm::NearOptimal => {
            if p == 0 || q_min == 0 {
                report.bound = opt as f64;
                report.satisfied = achieved <= opt;
            } else {
                let t = Rational64::new(p, q_min).max(Rational64::new(q_min, p));
                report.t = Some(t);
                let tf = *t.numer() as f64 / *t.denom() as f64;
                report.bound = opt as f64 * (1.0 + 8.0 / tf.sqrt());
                // achieved <= OPT(1 + 8/sqrt(t))  <=>  excess^2 * t <= 64 OPT^2
                let excess = achieved - opt;
                report.satisfied = excess <= 0
                    || big(excess) * big(excess) * big_ratio(t) <= big(64) * big(opt) * big(opt);
            }
        }
        SingleAlgorithm::Approx3518 => {
            report.bound = 35.0 * opt as f64 / 18.0;
            report.satisfied = 18 * achieved <= 35 * opt;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_schedule, Job, Time};
    use crate::oracle::{brute_opt_single, random_instance};

    fn inst(jobs: &[(Time, Time, Time)], q: i64) -> Instance {
        let jobs = jobs
            .iter()
            .enumerate()
            .map(|(i, &(r, d, p))| Job::new(i, r, d, p))
            .collect();
        Instance::new(jobs, 1, q).unwrap()
    }

    #[test]
    fn opt_plus_p_examples() {
        let i = inst(&[(0, 3, 2)], 2);
        assert_eq!(opt_plus_p(&i).unwrap().cost.total, 4);
        let i = inst(&[(0, 1, 1), (5, 6, 1)], 2);
        assert_eq!(opt_plus_p(&i).unwrap().cost.total, 6);
        let empty = Instance::new(vec![], 1, 2).unwrap();
        assert_eq!(opt_plus_p(&empty).unwrap().cost.total, 0);
    }

    #[test]
    fn near_optimal_examples() {
        let i = inst(&[(0, 100, 100)], 1);
        assert_eq!(near_optimal(&i).unwrap().cost.total, 101);
        let i = inst(&[(0, 1, 1)], 5);
        assert_eq!(near_optimal(&i).unwrap().cost.total, 6);
        let empty = Instance::new(vec![], 1, 5).unwrap();
        assert_eq!(near_optimal(&empty).unwrap().cost.total, 0);
    }

    #[test]
    fn sqrt_approximation_brackets() {
        let r = rational_sqrt(2, 1);
        let v = *r.numer() as f64 / *r.denom() as f64;
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-5);
        assert_eq!(rational_sqrt(9, 1), Rational64::from_integer(3));
    }

    #[test]
    fn guarantees_hold_on_random_instances() {
        let algs = [
            SingleAlgorithm::OptPlusP,
            SingleAlgorithm::Scaled(Rational64::from_integer(2)),
            SingleAlgorithm::Scaled(Rational64::from_integer(3)),
            SingleAlgorithm::NearOptimal,
            SingleAlgorithm::Approx3518,
        ];
        for seed in 0..60 {
            let i = random_instance(seed, 1 + (seed as usize % 4), 10, 1 + (seed % 4) as i64, 1);
            let oracle = brute_opt_single(&i).unwrap();
            for alg in algs {
                let sched = run_single(&i, alg).unwrap();
                validate_schedule(&i, &sched.machines, &sched.assignment).unwrap();
                assert!(sched.cost.total >= oracle.opt_cost, "seed {seed} {alg:?}");
                let rep = check_guarantee(&i, alg, sched.cost.total, &oracle);
                assert!(rep.satisfied, "seed {seed} {alg:?}: {rep:?}");
            }
        }
    }

    #[test]
    fn gap_instance_within_35_18() {
        let g = crate::oracle::gap_instance(2).unwrap();
        let sched = approx_35_18(&g).unwrap();
        let oracle = brute_opt_single(&g).unwrap();
        assert_eq!(oracle.opt_cost, 8);
        let rep = check_guarantee(&g, SingleAlgorithm::Approx3518, sched.cost.total, &oracle);
        assert!(rep.satisfied);
    }
}
