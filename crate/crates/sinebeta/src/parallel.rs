//! Multi-threaded Monte Carlo.
//!
//! Work is split into the engine's fixed path chunks and the chunk results
//! are merged in index order, so the estimates are bit-identical for every
//! thread count.

use rayon::prelude::*;
use sinebeta_core::sde::{PreparedSde, SdeConfig, SdeRun};

use crate::error::{usage, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SINEBETA_THREADS";

/// Worker count: `SINEBETA_THREADS` if set, else the hardware parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Err(e) => Err(usage(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Runs `config` on `threads` workers.
pub fn simulate_paths(config: SdeConfig, threads: usize) -> Result<SdeRun> {
    let prepared = PreparedSde::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()?;
    let chunks = pool.install(|| {
        prepared
            .chunks()
            .into_par_iter()
            .map(|r| prepared.simulate_chunk(r))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    Ok(prepared.finish(chunks)?)
}
