//! Parallel drivers over the core routines.
//!
//! Every driver splits work into pieces whose results do not depend on the
//! split (independent grid points, independent trials, independent
//! parameters), so the output is identical for any thread count.

use std::ops::Range;

use ctrlmart_core::certifier::{
    rank_parameters, scan_lambda_with, ScanOptions, ScanRow,
};
use ctrlmart_core::eigensolver::{solve_alpha, EigenPair, ShootOptions};
use ctrlmart_core::simulator::{check_trials, hit_count, McEstimate, Strategy};
use ctrlmart_core::value_dp::{
    check_dp_size, dp_step_with, init_indicator, run_dp_from, step_values, DpOptions, DpResult, Lattice,
    LatticeFamily, ValueGrid,
};
use ctrlmart_core::{ControlFamily, FiniteFamily, Mode};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the worker count; 0 or unset means one
/// worker per core.
pub const THREADS_ENV: &str = "CTRLMART_THREADS";

const DP_CHUNK: usize = 4096;
const MC_CHUNK: u64 = 1024;
const SCAN_CHUNK: usize = 64;

pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::Usage(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
    }
}

/// Runs `f` on a pool with `threads` workers (0 = automatic).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// One recursion step with the output box filled in parallel chunks.
pub fn dp_step_par(grid: &ValueGrid, family: &LatticeFamily, mode: Mode, max_points: usize) -> ctrlmart_core::Result<ValueGrid> {
    dp_step_with(grid, family, max_points, |lo, shape, out| {
        out.par_chunks_mut(DP_CHUNK)
            .enumerate()
            .for_each(|(k, chunk)| step_values(grid, family, mode, lo, shape, k * DP_CHUNK, chunk));
    })
}

/// Full run from the indicator of `B_delta`; `observe` sees the initial grid
/// and every new grid in step order.
pub fn run_dp_par(
    lattice: &Lattice,
    delta: f64,
    family: &FiniteFamily,
    opts: &DpOptions,
    mut observe: impl FnMut(&ValueGrid),
) -> Result<DpResult> {
    let lf = LatticeFamily::new(*lattice, family)?;
    check_dp_size(lattice, delta, family, opts)?;
    let start = init_indicator(lattice, delta)?;
    observe(&start);
    let result = run_dp_from(start, &lf, opts, |g, lf, mode, cap| {
        let next = dp_step_par(g, lf, mode, cap)?;
        observe(&next);
        Ok(next)
    })?;
    Ok(result)
}

fn chunks(range: Range<u64>, size: u64) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut lo = range.start;
    while lo < range.end {
        let hi = (lo + size).min(range.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Monte Carlo hit estimate with trials spread over the pool.
pub fn estimate_hit_par(
    family: &FiniteFamily,
    strategy: &Strategy,
    n: usize,
    start: &[f64],
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let counts: Vec<u64> = chunks(0..trials, MC_CHUNK)
        .into_par_iter()
        .map(|r| hit_count(family, strategy, n, start, delta, seed, r))
        .collect::<ctrlmart_core::Result<_>>()?;
    Ok(McEstimate::from_count(counts.iter().sum(), trials, seed))
}

/// Bent-Gaussian certificates at one `lambda` with the parameter ranking in
/// parallel.
pub fn scan_lambda_par(dim: usize, lambda: f64, opts: &ScanOptions) -> Result<ScanRow> {
    let row = scan_lambda_with(dim, lambda, opts, |family, direction, p, params, grid| {
        let ranked: Vec<Vec<(f64, f64, f64)>> = params
            .par_chunks(SCAN_CHUNK)
            .map(|c| rank_parameters(family, direction, p, c, grid))
            .collect::<ctrlmart_core::Result<_>>()?;
        Ok(ranked.concat())
    })?;
    Ok(row)
}

pub fn lambda_scan_par(dim: usize, lambdas: &[f64], opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    lambdas.par_iter().map(|&l| scan_lambda_par(dim, l, opts)).collect()
}

/// Eigenpairs for several families, in input order.
pub fn solve_many(families: &[ControlFamily], tol: f64, opts: &ShootOptions) -> Vec<ctrlmart_core::Result<EigenPair>> {
    families.par_iter().map(|f| solve_alpha(f, tol, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctrlmart_core::certifier::lambda_scan;
    use ctrlmart_core::value_dp::{run_dp, Retain};
    use ctrlmart_core::DiscreteMeasure;

    fn two_speed_2d() -> FiniteFamily {
        FiniteFamily::new(vec![
            DiscreteMeasure::axis_cross(2, 1.0, 2.0).unwrap(),
            DiscreteMeasure::symmetric_pair(&[0.5, 0.5], 2.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn parallel_dp_matches_serial_bitwise() {
        let fam = two_speed_2d();
        let lattice = Lattice::new(2, 0.5).unwrap();
        let opts = DpOptions::new(Mode::Sup, 30).retain(Retain::Last);
        let serial = run_dp(&lattice, 1.0, &fam, &opts).unwrap();
        for threads in [1, 3] {
            let par = with_threads(threads, || run_dp_par(&lattice, 1.0, &fam, &opts, |_| {})).unwrap().unwrap();
            assert_eq!(par, serial);
        }
    }

    #[test]
    fn parallel_mc_matches_serial() {
        let fam = two_speed_2d();
        let s = Strategy::FixedMeasure(1);
        let serial = hit_count(&fam, &s, 20, &[0.0, 0.0], 1.0, 3, 0..5000).unwrap();
        for threads in [1, 4] {
            let est = with_threads(threads, || estimate_hit_par(&fam, &s, 20, &[0.0, 0.0], 1.0, 5000, 3)).unwrap().unwrap();
            assert_eq!(est.hits, serial);
        }
    }

    #[test]
    fn parallel_scan_matches_serial() {
        let opts = ScanOptions { per_decade: 5, ..ScanOptions::default() };
        let serial = lambda_scan(2, &[0.2, 0.6], &opts).unwrap();
        let par = lambda_scan_par(2, &[0.2, 0.6], &opts).unwrap();
        assert_eq!(par, serial);
    }

    #[test]
    fn chunking_covers_range() {
        assert_eq!(chunks(0..2500, 1024), vec![0..1024, 1024..2048, 2048..2500]);
        assert!(chunks(5..5, 10).is_empty());
    }
}
