//! Two-level full-factorial design and the seeded sweep runner.
//!
//! Every run seed is `derive_seed(base_seed, point_id, rep)`, so a single run
//! can be reproduced with [`crate::simulate`] alone and the output never
//! depends on how runs were scheduled across threads.

use std::io::{self, Read, Write};

use serde::{Deserialize, Deserializer};
use thiserror::Error;

use crate::engine::simulate;
use crate::params::{Factor, ParamError, SimParams, DEFAULT_MAX_TICKS};
use crate::rng::derive_seed;

pub const FACTOR_COUNT: usize = 9;
pub const DESIGN_SIZE: usize = 1 << FACTOR_COUNT;
pub const DEFAULT_REPS: u32 = 10;

/// Low/high level per factor, indexed by [`Factor::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorLevels {
    levels: [(f64, f64); FACTOR_COUNT],
}

impl Default for FactorLevels {
    fn default() -> Self {
        Self {
            levels: [
                (2.0, 9.0),
                (2.0, 9.0),
                (70.0, 90.0),
                (25.0, 50.0),
                (10.0, 15.0),
                (0.0, 0.1),
                (50.0, 100.0),
                (50.0, 100.0),
                (30.0, 60.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevelsError {
    #[error("{factor}: low and high levels must differ (both {value})")]
    Degenerate { factor: &'static str, value: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

impl FactorLevels {
    pub fn get(&self, factor: Factor) -> (f64, f64) {
        self.levels[factor.index()]
    }

    pub fn set(&mut self, factor: Factor, low: f64, high: f64) -> Result<(), LevelsError> {
        if low == high {
            return Err(LevelsError::Degenerate {
                factor: factor.key(),
                value: low,
            });
        }
        if factor.is_integer() {
            crate::params::to_u32(factor.key(), low)?;
            crate::params::to_u32(factor.key(), high)?;
        }
        self.levels[factor.index()] = (low, high);
        Ok(())
    }

    /// Resolves a level vector (bit `i` = factor `i` at its high level).
    pub fn resolve(&self, point_id: u32) -> SimParams {
        let mut params = SimParams {
            max_ticks: DEFAULT_MAX_TICKS,
            ..SimParams::default()
        };
        for factor in Factor::ALL {
            let (low, high) = self.get(factor);
            let value = if level_bit(point_id, factor) {
                high
            } else {
                low
            };
            params
                .set_factor(factor, value)
                .expect("integer factors hold whole-number levels");
        }
        params
    }
}

/// Whether `factor` sits at its high level in `point_id`.
pub fn level_bit(point_id: u32, factor: Factor) -> bool {
    point_id >> factor.index() & 1 == 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub point_id: u32,
    pub params: SimParams,
}

impl DesignPoint {
    pub fn levels(&self) -> [bool; FACTOR_COUNT] {
        Factor::ALL.map(|f| level_bit(self.point_id, f))
    }
}

/// All 512 level combinations in `point_id` order.
///
/// Bit `i` of `point_id` selects the high level of the `i`-th factor in table
/// order (m, k, UP, LW, BC, SD, QTY, BG, B), so point 0 is all-low and point
/// 511 all-high.
pub fn full_factorial(levels: &FactorLevels) -> Vec<DesignPoint> {
    (0..DESIGN_SIZE as u32)
        .map(|point_id| DesignPoint {
            point_id,
            params: levels.resolve(point_id),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub point_id: u32,
    pub rep: u32,
    pub m: u32,
    pub k: u32,
    pub up: f64,
    pub lw: f64,
    pub bc: f64,
    pub sd: f64,
    pub qty: u32,
    pub bg: f64,
    pub b: f64,
    pub seed: u64,
    pub ticks_run: u32,
    pub remaining: u32,
    pub asrd: f64,
    #[serde(deserialize_with = "flag_from_digit")]
    pub critical: bool,
}

fn flag_from_digit<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(serde::de::Error::custom(format!(
            "critical must be 0 or 1, got {other}"
        ))),
    }
}

impl RunRecord {
    pub fn factor(&self, factor: Factor) -> f64 {
        match factor {
            Factor::M => self.m.into(),
            Factor::K => self.k.into(),
            Factor::Up => self.up,
            Factor::Lw => self.lw,
            Factor::Bc => self.bc,
            Factor::Sd => self.sd,
            Factor::Qty => self.qty.into(),
            Factor::Bg => self.bg,
            Factor::B => self.b,
        }
    }
}

/// How the sweep distributes runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with `workers` threads (0 = one per core). Runs
    /// sequentially when the `parallel` feature is off.
    Parallel {
        workers: usize,
    },
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }

    /// Maps `f` over `items`, keeping input order in the output.
    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel { workers } => {
                use rayon::prelude::*;
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to start worker pool");
                pool.install(|| items.par_iter().map(f).collect())
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel { .. } => items.iter().map(f).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("repetition count must be at least 1")]
    NoRepetitions,
    #[error("run failed at point {point_id}, rep {rep}: {source}")]
    Run {
        point_id: u32,
        rep: u32,
        source: ParamError,
    },
}

/// Seed of one run.
pub fn run_seed(base_seed: u64, point_id: u32, rep: u32) -> u64 {
    derive_seed(base_seed, point_id.into(), rep.into())
}

/// Runs `reps` seeded repetitions of every design point.
///
/// Records come back in `(point_id, rep)` order whatever the execution mode.
/// The first failing run in that order aborts the sweep.
pub fn run_sweep(
    design: &[DesignPoint],
    reps: u32,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<RunRecord>, SweepError> {
    if reps == 0 {
        return Err(SweepError::NoRepetitions);
    }
    let jobs: Vec<(usize, u32)> = (0..design.len())
        .flat_map(|i| (0..reps).map(move |rep| (i, rep)))
        .collect();
    let results = execution.map(&jobs, |&(i, rep)| {
        let point = &design[i];
        let seed = run_seed(base_seed, point.point_id, rep);
        let params = SimParams {
            seed,
            ..point.params
        };
        simulate(&params)
            .map(|result| RunRecord {
                run_id: (i as u64) * u64::from(reps) + u64::from(rep),
                point_id: point.point_id,
                rep,
                m: params.m,
                k: params.k,
                up: params.up,
                lw: params.lw,
                bc: params.bc,
                sd: params.sd,
                qty: params.qty,
                bg: params.bg,
                b: params.b,
                seed,
                ticks_run: result.ticks_run,
                remaining: result.remaining,
                asrd: result.asrd,
                critical: result.asrd < 1.0,
            })
            .map_err(|source| SweepError::Run {
                point_id: point.point_id,
                rep,
                source,
            })
    });
    results.into_iter().collect()
}

pub const RESULTS_HEADER: &str =
    "run_id,point_id,rep,m,k,up,lw,bc,sd,qty,bg,b,seed,ticks_run,remaining,asrd,critical";

pub fn write_results_csv<W: Write>(mut out: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{}",
            r.run_id,
            r.point_id,
            r.rep,
            r.m,
            r.k,
            r.up,
            r.lw,
            r.bc,
            r.sd,
            r.qty,
            r.bg,
            r.b,
            r.seed,
            r.ticks_run,
            r.remaining,
            r.asrd,
            u8::from(r.critical)
        )?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ResultsReadError {
    #[error("results header mismatch: expected `{RESULTS_HEADER}`, found `{0}`")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, ResultsReadError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != RESULTS_HEADER {
        return Err(ResultsReadError::Header(header));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .map_err(Into::into)
}
