use anyhow::{Context, Result};
use nsosc_core::systems::OscillatorKind;
use nsosc_core::table::{compute_point, FrequencyTable, Method, SolveSettings};
use rayon::prelude::*;

pub const THREADS_VAR: &str = "NSOSC_THREADS";

/// Pool sized by `NSOSC_THREADS` when set, rayon's default otherwise.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_VAR} = '{v}'"))?;
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

/// ε points in parallel; the table comes back in (ε, method) order.
pub fn sweep(kind: OscillatorKind, eps: &[f64], methods: &[Method], settings: &SolveSettings) -> Result<FrequencyTable> {
    let pool = thread_pool()?;
    let points: Vec<_> = pool.install(|| eps.par_iter().map(|&e| compute_point(kind, e, methods, settings)).collect());
    let mut table = FrequencyTable::new(kind, settings.amplitude);
    table.extend(points.into_iter().flatten().collect());
    Ok(table)
}
