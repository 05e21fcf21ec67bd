//! Parallel execution of harness jobs.

use std::time::Instant;

use quadsgd_core::{ExperimentConfig, Job, JobOutcome, SweepRecord};
use rayon::prelude::*;

use crate::error::CliError;

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run `jobs` in parallel; results come back in job order with wall-clock ms.
pub fn run_jobs(
    config: &ExperimentConfig,
    jobs: &[Job],
    threads: Option<usize>,
) -> Result<Vec<(JobOutcome, f64)>, CliError> {
    let results: Vec<Result<(JobOutcome, f64), quadsgd_core::Error>> = in_pool(threads, || {
        jobs.par_iter()
            .map(|job| {
                let start = Instant::now();
                let outcome = config.run_job(job)?;
                Ok((outcome, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect()
    })?;
    results
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

/// One record per `(grid point, model kind, rep)`, sorted by that key.
pub fn run_sweep(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<SweepRecord>, CliError> {
    config.validate()?;
    let jobs = config.jobs();
    let mut records: Vec<SweepRecord> = run_jobs(config, &jobs, threads)?
        .iter()
        .map(|(outcome, ms)| config.record(outcome, *ms))
        .collect();
    records.sort_by_key(|r| (r.grid_id, r.kind, r.rep));
    Ok(records)
}
