//! Benchmark harness for the sleep-state scheduling algorithms.
//!
//! Exit codes: 0 success (and, with `--oracle`, bound satisfied), 1 generic
//! error or bound violated, 2 unknown algorithm, 3 infeasible instance,
//! 4 instance too large for the exhaustive oracle.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num::rational::Rational64;

use powernap::approx::{check_guarantee, run_single, SingleAlgorithm};
use powernap::feasibility::{dsi_check, DsiOutcome, SupplySet};
use powernap::lp::{build_and_solve_lp, round_two_approx_traced};
use powernap::model::{load_instance, serialize_instance, validate_schedule, ActiveInterval, Instance};
use powernap::multi::{build_blackout_table, multi_skeleton, six_approx};
use powernap::oracle::{brute_opt_multi, brute_opt_single, gap_instance, random_instance, OracleError, OracleResult};
use powernap::report::{
    CertificateSection, ComparisonRow, FractionalReport, GuaranteeSection, LpSection,
    ScheduleReport, COMPARISON_HEADER,
};

#[derive(Parser)]
#[command(name = "powernap", version, about = "Minimum-energy scheduling with a sleep state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one instance and emit a JSON schedule report.
    Solve {
        /// Instance file (JSON).
        instance: PathBuf,
        /// Algorithm: opt-plus-p, scaled, near-opt, a35-18, multi-skeleton,
        /// six-approx, lp-two-approx, brute.
        #[arg(long)]
        alg: String,
        /// Scaling parameter for `scaled`, as an integer or fraction `a/b`.
        #[arg(long, default_value = "2")]
        alpha: String,
        /// Also run the exhaustive oracle and check the algorithm's bound.
        #[arg(long)]
        oracle: bool,
        /// Emit the exact fractional LP optimum instead of a schedule.
        #[arg(long)]
        lp_only: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate an instance file.
    Gen {
        /// Lower-bound family parameter q (emits the gap instance).
        #[arg(long)]
        gap_instance: Option<i64>,
        /// Generate a random feasible instance (requires --seed or POWERNAP_SEED).
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: i64,
        #[arg(long, default_value_t = 2)]
        q: i64,
        #[arg(long, default_value_t = 1)]
        m: i64,
        /// RNG seed; the POWERNAP_SEED environment variable takes precedence.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a schedule report against its instance.
    Check {
        instance: PathBuf,
        report: PathBuf,
    },
    /// Run several algorithms over several instances and tabulate results.
    Report {
        /// Instance files.
        instances: Vec<PathBuf>,
        /// Comma-separated algorithm names.
        #[arg(long, value_delimiter = ',', required = true)]
        algs: Vec<String>,
        #[arg(long, default_value = "2")]
        alpha: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Worker threads; output order is deterministic regardless.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_UNKNOWN_ALG: i32 = 2;
const EXIT_INFEASIBLE: i32 = 3;
const EXIT_TOO_LARGE: i32 = 4;

#[derive(Debug, Clone)]
enum Algorithm {
    Single(SingleAlgorithm),
    MultiSkeleton,
    SixApprox,
    LpTwoApprox,
    Brute,
}

fn parse_algorithm(name: &str, alpha: Rational64) -> Option<Algorithm> {
    Some(match name {
        "opt-plus-p" => Algorithm::Single(SingleAlgorithm::OptPlusP),
        "scaled" => Algorithm::Single(SingleAlgorithm::Scaled(alpha)),
        "near-opt" => Algorithm::Single(SingleAlgorithm::NearOptimal),
        "a35-18" => Algorithm::Single(SingleAlgorithm::Approx3518),
        "multi-skeleton" => Algorithm::MultiSkeleton,
        "six-approx" => Algorithm::SixApprox,
        "lp-two-approx" => Algorithm::LpTwoApprox,
        "brute" => Algorithm::Brute,
        _ => return None,
    })
}

#[derive(Debug)]
enum RunError {
    Infeasible,
    TooLarge(String),
    NotApplicable(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Infeasible => write!(f, "instance has no feasible schedule"),
            RunError::TooLarge(why) => write!(f, "instance too large for exhaustive search: {why}"),
            RunError::NotApplicable(why) => write!(f, "{why}"),
        }
    }
}

fn oracle_for(instance: &Instance) -> Result<OracleResult, OracleError> {
    if instance.machines == 1 {
        brute_opt_single(instance)
    } else {
        brute_opt_multi(instance)
    }
}

fn run_algorithm(instance: &Instance, alg: &Algorithm, name: &str) -> Result<ScheduleReport, RunError> {
    match alg {
        Algorithm::Single(sa) => {
            if instance.machines != 1 {
                return Err(RunError::NotApplicable(format!(
                    "algorithm `{name}` handles a single machine, instance has {}",
                    instance.machines
                )));
            }
            let schedule = run_single(instance, *sa).map_err(|_| RunError::Infeasible)?;
            Ok(ScheduleReport::from_schedule(name, &schedule))
        }
        Algorithm::MultiSkeleton => {
            let skeleton = multi_skeleton(instance).map_err(|_| RunError::Infeasible)?;
            Ok(ScheduleReport::from_multi_skeleton(name, &skeleton, instance.wake_cost))
        }
        Algorithm::SixApprox => {
            let schedule = six_approx(instance).map_err(|_| RunError::Infeasible)?;
            Ok(ScheduleReport::from_schedule(name, &schedule))
        }
        Algorithm::LpTwoApprox => {
            let (schedule, trace) =
                round_two_approx_traced(instance).map_err(|_| RunError::Infeasible)?;
            let mut report = ScheduleReport::from_schedule(name, &schedule);
            report.lp = Some(LpSection::from(&trace));
            Ok(report)
        }
        Algorithm::Brute => {
            let result = oracle_for(instance).map_err(|e| match e {
                OracleError::Infeasible => RunError::Infeasible,
                OracleError::TooLarge(why) => RunError::TooLarge(why),
                OracleError::BadGapParameter(q) => RunError::NotApplicable(format!("bad q {q}")),
            })?;
            Ok(ScheduleReport::from_schedule(name, &result.witness))
        }
    }
}

/// Guarantee the algorithm is expected to meet, checked exactly against OPT.
fn guarantee_for(
    instance: &Instance,
    alg: &Algorithm,
    achieved: i64,
    oracle: &OracleResult,
) -> GuaranteeSection {
    if let Algorithm::Single(sa) = alg {
        let g = check_guarantee(instance, *sa, achieved, oracle);
        return GuaranteeSection {
            opt: g.opt,
            volume: g.volume,
            q_min: g.q_min,
            bound: g.bound,
            satisfied: g.satisfied,
        };
    }
    let opt = oracle.opt_cost;
    let (bound, satisfied) = match alg {
        Algorithm::MultiSkeleton => (opt, achieved <= opt),
        Algorithm::SixApprox => (6 * opt, achieved <= 6 * opt),
        Algorithm::LpTwoApprox => (2 * opt, achieved <= 2 * opt),
        Algorithm::Brute => (opt, achieved == opt),
        Algorithm::Single(_) => unreachable!(),
    };
    GuaranteeSection {
        opt,
        volume: instance.total_volume(),
        q_min: instance.wake_cost * oracle.min_wakeups,
        bound: bound as f64,
        satisfied,
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let mut out = std::io::stdout();
            writeln!(out, "{text}").map_err(|e| e.to_string())
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<Instance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// On an infeasible instance, exhibits an interval set whose demand exceeds
/// the full-horizon supply, when the deficiency engine can find one.
fn infeasibility_certificate(instance: &Instance) -> Option<CertificateSection> {
    if instance.horizon == 0 || instance.jobs.is_empty() {
        return None;
    }
    let full: Vec<ActiveInterval> = (0..instance.machines)
        .map(|_| ActiveInterval::new(0, instance.horizon))
        .collect();
    match dsi_check(&SupplySet::new(full), &instance.jobs, instance.machines) {
        DsiOutcome::Infeasible(cert) => Some(CertificateSection::from(&cert)),
        DsiOutcome::Feasible(_) => None,
    }
}

fn cmd_solve(
    instance_path: PathBuf,
    alg_name: String,
    alpha: String,
    oracle: bool,
    lp_only: bool,
    output: Option<PathBuf>,
) -> i32 {
    let alpha: Rational64 = match alpha.parse() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: bad --alpha `{alpha}`: {e}");
            return EXIT_ERROR;
        }
    };
    let Some(alg) = parse_algorithm(&alg_name, alpha) else {
        eprintln!("error: unknown algorithm `{alg_name}`");
        return EXIT_UNKNOWN_ALG;
    };
    let instance = match read_instance(&instance_path) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };

    if lp_only {
        let table = match build_blackout_table(&instance) {
            Ok(t) => t,
            Err(_) => return report_infeasible(&instance),
        };
        return match build_and_solve_lp(&instance, &table) {
            Ok(sol) => {
                let report = FractionalReport::from(&sol);
                match emit(&serde_json::to_string_pretty(&report).unwrap(), &output) {
                    Ok(()) => EXIT_OK,
                    Err(e) => {
                        eprintln!("error: {e}");
                        EXIT_ERROR
                    }
                }
            }
            Err(_) => report_infeasible(&instance),
        };
    }

    let mut report = match run_algorithm(&instance, &alg, &alg_name) {
        Ok(r) => r,
        Err(RunError::Infeasible) => return report_infeasible(&instance),
        Err(RunError::TooLarge(why)) => {
            eprintln!("error: instance too large for exhaustive search: {why}");
            return EXIT_TOO_LARGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };

    let mut code = EXIT_OK;
    if oracle {
        match oracle_for(&instance) {
            Ok(result) => {
                let g = guarantee_for(&instance, &alg, report.cost.total, &result);
                if !g.satisfied {
                    code = EXIT_ERROR;
                }
                report.guarantee = Some(g);
            }
            Err(OracleError::TooLarge(why)) => {
                eprintln!("error: instance too large for exhaustive search: {why}");
                return EXIT_TOO_LARGE;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    }

    match emit(&serde_json::to_string_pretty(&report).unwrap(), &output) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn report_infeasible(instance: &Instance) -> i32 {
    eprintln!("error: instance has no feasible schedule");
    if let Some(cert) = infeasibility_certificate(instance) {
        let doc = serde_json::json!({ "infeasible": true, "bound_certificate": cert });
        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    }
    EXIT_INFEASIBLE
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    gap: Option<i64>,
    random: bool,
    n: usize,
    d: i64,
    q: i64,
    m: i64,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> i32 {
    let instance = if let Some(gq) = gap {
        match gap_instance(gq) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    } else if random {
        let env_seed = std::env::var("POWERNAP_SEED").ok().map(|s| s.parse::<u64>());
        let seed = match (env_seed, seed) {
            (Some(Ok(s)), _) => s,
            (Some(Err(e)), _) => {
                eprintln!("error: bad POWERNAP_SEED: {e}");
                return EXIT_ERROR;
            }
            (None, Some(s)) => s,
            (None, None) => {
                eprintln!("error: --random requires --seed or POWERNAP_SEED");
                return EXIT_ERROR;
            }
        };
        if d < 1 || q < 1 || m < 1 {
            eprintln!("error: --random requires d, q, m >= 1");
            return EXIT_ERROR;
        }
        random_instance(seed, n, d, q, m)
    } else {
        eprintln!("error: gen requires --gap-instance or --random");
        return EXIT_ERROR;
    };
    match emit(&serialize_instance(&instance), &output) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn cmd_check(instance_path: PathBuf, report_path: PathBuf) -> i32 {
    let instance = match read_instance(&instance_path) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let report: ScheduleReport = match fs::read_to_string(&report_path)
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
    {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", report_path.display());
            return EXIT_ERROR;
        }
    };
    let Some(assignment) = report.to_assignment() else {
        eprintln!("error: report carries no integral assignment to check");
        return EXIT_ERROR;
    };
    match validate_schedule(&instance, &report.machines, &assignment) {
        Ok(()) => {
            println!("ok: schedule is feasible, cost {}", report.cost.total);
            EXIT_OK
        }
        Err(v) => {
            eprintln!("error: {v}");
            EXIT_ERROR
        }
    }
}

fn comparison_row(path: &PathBuf, alg_name: &str, alpha: Rational64) -> ComparisonRow {
    let instance_name = path.display().to_string();
    let mut row = ComparisonRow {
        instance: instance_name,
        algorithm: alg_name.to_string(),
        cost: None,
        opt: None,
        ratio: None,
        runtime_ms: 0,
        status: "ok".to_string(),
    };
    // unknown names are rejected before any row is computed
    let alg = parse_algorithm(alg_name, alpha).expect("algorithm validated");
    let instance = match read_instance(path) {
        Ok(i) => i,
        Err(_) => {
            row.status = "load-error".to_string();
            return row;
        }
    };
    let start = Instant::now();
    let outcome = run_algorithm(&instance, &alg, alg_name);
    row.runtime_ms = start.elapsed().as_millis();
    match outcome {
        Ok(report) => row.cost = Some(report.cost.total),
        Err(RunError::Infeasible) => row.status = "infeasible".to_string(),
        Err(RunError::TooLarge(_)) => row.status = "too-large".to_string(),
        Err(RunError::NotApplicable(_)) => row.status = "not-applicable".to_string(),
    }
    if let (Some(cost), Ok(oracle)) = (row.cost, oracle_for(&instance)) {
        row.opt = Some(oracle.opt_cost);
        if oracle.opt_cost > 0 {
            row.ratio = Some(cost as f64 / oracle.opt_cost as f64);
        }
    }
    row
}

fn cmd_report(
    instances: Vec<PathBuf>,
    algs: Vec<String>,
    alpha: String,
    format: Format,
    jobs: usize,
    output: Option<PathBuf>,
) -> i32 {
    let alpha: Rational64 = match alpha.parse() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: bad --alpha `{alpha}`: {e}");
            return EXIT_ERROR;
        }
    };
    for name in &algs {
        if parse_algorithm(name, alpha).is_none() {
            eprintln!("error: unknown algorithm `{name}`");
            return EXIT_UNKNOWN_ALG;
        }
    }

    let tasks: Vec<(&PathBuf, &String)> = instances
        .iter()
        .flat_map(|path| algs.iter().map(move |alg| (path, alg)))
        .collect();
    let rows: Mutex<Vec<Option<ComparisonRow>>> = Mutex::new(vec![None; tasks.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (path, alg) = tasks[i];
                let row = comparison_row(path, alg, alpha);
                rows.lock().unwrap()[i] = Some(row);
            });
        }
    });
    let rows: Vec<ComparisonRow> =
        rows.into_inner().unwrap().into_iter().map(|r| r.expect("row computed")).collect();

    let text = match format {
        Format::Csv => {
            let mut lines = vec![COMPARISON_HEADER.to_string()];
            lines.extend(rows.iter().map(ComparisonRow::to_csv));
            lines.join("\n")
        }
        Format::Json => serde_json::to_string_pretty(&rows).unwrap(),
    };
    match emit(&text, &output) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Solve { instance, alg, alpha, oracle, lp_only, output } => {
            cmd_solve(instance, alg, alpha, oracle, lp_only, output)
        }
        Command::Gen { gap_instance, random, n, d, q, m, seed, output } => {
            cmd_gen(gap_instance, random, n, d, q, m, seed, output)
        }
        Command::Check { instance, report } => cmd_check(instance, report),
        Command::Report { instances, algs, alpha, format, jobs, output } => {
            cmd_report(instances, algs, alpha, format, jobs, output)
        }
    };
    std::process::exit(code);
}
