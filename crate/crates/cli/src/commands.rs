use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use weylqw_core::lattice::{past_causal_cone, string_counts};
use weylqw_core::propagator::propagator_brute_force_with_budget;
use weylqw_core::wire::{distribution, distribution_csv, parse_state, propagators_csv, PropagatorRecord};
use weylqw_core::{
    convolve, propagator_closed_form, propagator_from_evolution, run_suite, Chirality, CombinatoricsError, Engine,
    FloatOverflow, Propagator, PropagatorTable, Scale, Site, Suite, SuiteReport, VerifyConfig,
};

use crate::{BenchArgs, ConeArgs, EvolveArgs, EvolveEngine, Format, Output, PropagateArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Io(PathBuf, io::Error),
    Overflow(FloatOverflow),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Input(_) => 65,
            CliError::Overflow(_) => 70,
            CliError::Io(..) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Overflow(e) => write!(f, "float view: {e}"),
        }
    }
}

impl From<FloatOverflow> for CliError {
    fn from(e: FloatOverflow) -> Self {
        CliError::Overflow(e)
    }
}

impl From<CombinatoricsError> for CliError {
    fn from(e: CombinatoricsError) -> Self {
        CliError::Usage(format!("{e}; raise --budget or pick another engine"))
    }
}

fn emit(output: &Output, body: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => write_file(path, body),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn compute(engine: Engine, from: &Site, to: &Site, t: u64, c: Chirality, budget: u128) -> Result<Propagator, CliError> {
    Ok(match engine {
        Engine::ClosedForm => propagator_closed_form(from, to, t, c),
        Engine::BruteForce => propagator_brute_force_with_budget(from, to, t, c, budget)?,
        Engine::Step => propagator_from_evolution(from, to, t, c),
    })
}

pub fn propagate(a: PropagateArgs) -> Result<ExitCode, CliError> {
    if a.strict && string_counts(&a.from, &a.to, a.t).is_none() {
        eprintln!("weylqw: no path of length {} leads from {} to {}", a.t, a.from, a.to);
        return Ok(ExitCode::from(2));
    }
    let p = compute(a.engine.into(), &a.from, &a.to, a.t, a.chi, a.budget)?;
    let record = PropagatorRecord::new(&p)?;
    let body = match a.output.format {
        Format::Json => to_json(&record),
        Format::Csv => propagators_csv(&[record]),
    };
    emit(&a.output, &body)?;
    Ok(ExitCode::SUCCESS)
}

pub fn evolve(a: EvolveArgs) -> Result<ExitCode, CliError> {
    let text = fs::read_to_string(&a.state).map_err(|e| CliError::Io(a.state.clone(), e))?;
    let initial = parse_state(&text).map_err(|e| CliError::Input(format!("{}: {e}", a.state.display())))?;
    let state = match a.engine {
        EvolveEngine::Step => weylqw_core::evolve(&initial, a.t, a.chi),
        EvolveEngine::Convolve => convolve(&initial, a.t, a.chi),
    };
    let body = match a.output.format {
        Format::Json => to_json(&distribution(&state)?),
        Format::Csv => distribution_csv(&state)?,
    };
    emit(&a.output, &body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConeRow {
    k: [u64; 3],
    #[serde(flatten)]
    propagator: PropagatorRecord,
}

pub fn cone(a: ConeArgs) -> Result<ExitCode, CliError> {
    let table = PropagatorTable::build(a.engine.into(), a.t, a.chi, a.budget)?;
    let sources = past_causal_cone(&a.at, a.t);
    let rows: Vec<ConeRow> = sources
        .par_iter()
        .map(|from| {
            let k = string_counts(from, &a.at, a.t).expect("cone sites reach the apex").k;
            Ok(ConeRow { k, propagator: PropagatorRecord::new(&table.propagator(from, &a.at))? })
        })
        .collect::<Result<_, FloatOverflow>>()?;
    let body = match a.output.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let records: Vec<PropagatorRecord> = rows.into_iter().map(|r| r.propagator).collect();
            propagators_csv(&records)
        }
    };
    emit(&a.output, &body)?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(a: VerifyArgs) -> Result<ExitCode, CliError> {
    let cfg =
        VerifyConfig { scale: if a.quick { Scale::Quick } else { Scale::Full }, seed: a.seed, fault: a.inject_fault };
    let suites = if a.suites.is_empty() { Suite::ALL.to_vec() } else { a.suites };
    let reports: Vec<SuiteReport> = suites.par_iter().map(|&s| run_suite(s, &cfg)).collect();
    let mut first_failure = None;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<16} {:>8} checks  {}", r.suite.name(), r.checks, r.suite.description());
        if !r.passed && first_failure.is_none() {
            first_failure = r.counterexample.as_ref();
        }
    }
    if let Some(path) = &a.out {
        write_file(path, &to_json(&reports))?;
    }
    match first_failure {
        None => Ok(ExitCode::SUCCESS),
        Some(cx) => {
            println!("counterexample: {cx}");
            Ok(ExitCode::from(1))
        }
    }
}

#[derive(Serialize)]
struct BenchRow {
    t: u64,
    engine: Engine,
    to: [i64; 3],
    seconds: f64,
    /// Largest numerator among the matrix entries, in bits.
    numerator_bits: u64,
    log2_den: u32,
}

#[derive(Serialize)]
struct BenchReport {
    t_max: u64,
    budget: String,
    seed: u64,
    rows: Vec<BenchRow>,
}

/// Cells visited when stepping a point source `t` times.
fn step_work(t: u64) -> u128 {
    let n = (t as u128 + 1) * (t as u128 + 2) / 2;
    n * n
}

/// String triples a brute-force coefficient sum enumerates, saturating.
fn brute_work(t: u64, k: [u64; 3]) -> u128 {
    k.iter().map(|&ki| binomial(t, ki).unwrap_or(u128::MAX)).fold(1u128, u128::saturating_mul)
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    (0..k).try_fold(1u128, |acc, i| Some(acc.checked_mul((n - i) as u128)? / (i + 1) as u128))
}

pub fn bench(a: BenchArgs) -> Result<ExitCode, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let c = Chirality::Plus;
    let mut rows = Vec::new();
    for t in 0..=a.t_max {
        let d: [i64; 3] = std::array::from_fn(|_| t as i64 - 2 * rng.gen_range(0..=t as i64));
        let to = Site::ORIGIN.offset(d).map_err(|e| CliError::Usage(e.to_string()))?;
        let k = string_counts(&Site::ORIGIN, &to, t).expect("target drawn inside the cone").k;
        for engine in Engine::ALL {
            let admitted = match engine {
                Engine::ClosedForm => true,
                Engine::BruteForce => brute_work(t, k) <= a.budget,
                Engine::Step => step_work(t) <= a.budget,
            };
            if !admitted {
                continue;
            }
            let start = Instant::now();
            let p = compute(engine, &Site::ORIGIN, &to, t, c, a.budget)?;
            let seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                t,
                engine,
                to: d,
                seconds,
                numerator_bits: p.matrix.bits(),
                log2_den: p.matrix.0.iter().flatten().map(|x| x.log2_den()).max().unwrap_or(0),
            });
        }
    }
    let body = match a.output.format {
        Format::Json => to_json(&BenchReport { t_max: a.t_max, budget: a.budget.to_string(), seed: a.seed, rows }),
        Format::Csv => {
            let mut s = String::from("t,engine,to1,to2,to3,seconds,numerator_bits,log2_den\n");
            for r in rows {
                let [x1, x2, x3] = r.to;
                s.push_str(&format!(
                    "{},{},{x1},{x2},{x3},{:e},{},{}\n",
                    r.t,
                    r.engine.name(),
                    r.seconds,
                    r.numerator_bits,
                    r.log2_den
                ));
            }
            s
        }
    };
    emit(&a.output, &body)?;
    Ok(ExitCode::SUCCESS)
}
