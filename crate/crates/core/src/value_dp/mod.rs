//! Exact dynamic programming for the maximal and minimal hitting probabilities
//!
//! ```text
//! w(x, 0)     = 1{|x| <= delta}
//! w(x, n + 1) = sup_rho E_rho[w(x + X, n)]      (v: inf instead of sup)
//! ```
//!
//! on a lattice `h Z^d` that contains every atom of every control, so the
//! recursion is evaluated without interpolation.

mod grid;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use grid::{init_indicator, init_indicator_at, Lattice, ValueGrid, BOUNDARY_SLACK, DROP_BELOW};

use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt};
use crate::operators::{FiniteFamily, Mode};

/// Default cap on the number of points a single grid may hold.
pub const DEFAULT_MAX_POINTS: usize = 50_000_000;

/// A finite family whose atoms have been mapped to integer lattice offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFamily {
    lattice: Lattice,
    /// Per measure: `(offset, weight)` pairs.
    measures: Vec<Vec<(Vec<i64>, f64)>>,
    min_offset: Vec<i64>,
    max_offset: Vec<i64>,
    max_step: f64,
}

impl LatticeFamily {
    /// Fails with [`Error::OffLattice`] naming the first atom off the lattice.
    pub fn new(lattice: Lattice, family: &FiniteFamily) -> Result<Self> {
        if family.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch { expected: lattice.dim(), found: family.dim() });
        }
        let d = lattice.dim();
        let mut min_offset = vec![0i64; d];
        let mut max_offset = vec![0i64; d];
        let mut measures = Vec::with_capacity(family.len());
        for (m, mu) in family.measures().iter().enumerate() {
            let mut atoms = Vec::with_capacity(mu.atoms().len());
            for (a, atom) in mu.atoms().iter().enumerate() {
                let off = lattice
                    .index_of(&atom.point)
                    .ok_or(Error::OffLattice { measure: m, atom: a })?;
                for k in 0..d {
                    min_offset[k] = min_offset[k].min(off[k]);
                    max_offset[k] = max_offset[k].max(off[k]);
                }
                atoms.push((off, atom.weight));
            }
            measures.push(atoms);
        }
        Ok(LatticeFamily { lattice, measures, min_offset, max_offset, max_step: family.max_step() })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measures(&self) -> &[Vec<(Vec<i64>, f64)>] {
        &self.measures
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    /// `E_rho[grid(y + X)]` for measure `m`, summed in atom order.
    pub fn expectation(&self, grid: &ValueGrid, m: usize, y: &[i64], scratch: &mut Vec<i64>) -> f64 {
        let mut acc = 0.0;
        for (off, w) in &self.measures[m] {
            scratch.clear();
            scratch.extend(y.iter().zip(off).map(|(a, b)| a + b));
            acc += w * grid.get(scratch);
        }
        acc
    }

    /// Index of the extremal measure at `y`, lowest index on ties, and its value.
    pub fn best_measure(&self, grid: &ValueGrid, y: &[i64], mode: Mode) -> (usize, f64) {
        let mut scratch = Vec::with_capacity(y.len());
        let mut best = (0, self.expectation(grid, 0, y, &mut scratch));
        for m in 1..self.measures.len() {
            let v = self.expectation(grid, m, y, &mut scratch);
            if mode.better(v, best.1) {
                best = (m, v);
            }
        }
        best
    }
}

/// Box of the grid produced by one step from `grid`: every point that can
/// reach the current support in one move.
pub fn step_layout(grid: &ValueGrid, family: &LatticeFamily) -> (Vec<i64>, Vec<usize>) {
    let d = grid.dim();
    if grid.is_empty() {
        return (vec![0; d], vec![0; d]);
    }
    let lo: Vec<i64> = (0..d).map(|k| grid.lo()[k] - family.max_offset[k]).collect();
    let shape: Vec<usize> = (0..d)
        .map(|k| grid.shape()[k] + (family.max_offset[k] - family.min_offset[k]) as usize)
        .collect();
    (lo, shape)
}

/// Fills `out` with next-step values for the flat output indices
/// `start .. start + out.len()` of the box `(lo, shape)`.
///
/// Each point is computed independently with a fixed summation order, so
/// any partition of the range gives bit-identical results.
pub fn step_values(
    grid: &ValueGrid,
    family: &LatticeFamily,
    mode: Mode,
    lo: &[i64],
    shape: &[usize],
    start: usize,
    out: &mut [f64],
) {
    let d = grid.dim();
    if out.is_empty() {
        return;
    }
    let old_strides = grid.strides();
    let old_lo = grid.lo();
    let old_shape = grid.shape();
    let vals = grid.values();
    // decode the first output index
    let out_strides = grid::strides(shape);
    let mut y = vec![0i64; d];
    let mut rem = start;
    for k in 0..d {
        y[k] = lo[k] + (rem / out_strides[k]) as i64;
        rem %= out_strides[k];
    }
    let prepared: Vec<Vec<(Vec<i64>, i64, f64)>> = family
        .measures
        .iter()
        .map(|atoms| {
            atoms
                .iter()
                .map(|(off, w)| {
                    let delta: i64 = (0..d).map(|k| off[k] * old_strides[k] as i64).sum();
                    (off.clone(), delta, *w)
                })
                .collect()
        })
        .collect();
    let mut rel = vec![0i64; d];
    for slot in out.iter_mut() {
        let mut base = 0i64;
        for k in 0..d {
            rel[k] = y[k] - old_lo[k];
            base += rel[k] * old_strides[k] as i64;
        }
        let mut best = 0.0;
        for (m, atoms) in prepared.iter().enumerate() {
            let mut acc = 0.0;
            for (off, delta, w) in atoms {
                let inside = (0..d).all(|k| {
                    let r = rel[k] + off[k];
                    r >= 0 && (r as usize) < old_shape[k]
                });
                if inside {
                    acc += w * vals[(base + delta) as usize];
                }
            }
            best = if m == 0 { acc } else { mode.pick(best, acc) };
        }
        *slot = best;
        grid::advance(&mut y, lo, shape);
    }
}

/// One step of the recursion with a prepared lattice family.
pub fn dp_step_lattice(grid: &ValueGrid, family: &LatticeFamily, mode: Mode, max_points: usize) -> Result<ValueGrid> {
    dp_step_with(grid, family, max_points, |lo, shape, out| step_values(grid, family, mode, lo, shape, 0, out))
}

/// One step where `fill(lo, shape, out)` computes the values of the next
/// box, typically by running [`step_values`] over chunks of `out`.
pub fn dp_step_with<F>(grid: &ValueGrid, family: &LatticeFamily, max_points: usize, fill: F) -> Result<ValueGrid>
where
    F: FnOnce(&[i64], &[usize], &mut [f64]),
{
    let (lo, shape) = step_layout(grid, family);
    let total = checked_total(&shape, max_points)?;
    let mut values = vec![0.0; total];
    fill(&lo, &shape, &mut values);
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!("step produced value {v} outside [0, 1]")));
    }
    let mut next = ValueGrid::from_parts(grid.step() + 1, grid.spacing(), lo, shape, values);
    next.trim();
    Ok(next)
}

pub(crate) fn checked_total(shape: &[usize], cap: usize) -> Result<usize> {
    let mut total: usize = 1;
    for &s in shape {
        total = total.checked_mul(s).ok_or(Error::TooLarge { projected: usize::MAX, cap })?;
    }
    if total > cap {
        return Err(Error::TooLarge { projected: total, cap });
    }
    Ok(total)
}

/// One step of the recursion: `value(x) = ext_rho sum_i w_i grid(x + x_i)`.
pub fn dp_step(grid: &ValueGrid, family: &FiniteFamily, mode: Mode) -> Result<ValueGrid> {
    let lf = LatticeFamily::new(grid.lattice(), family)?;
    dp_step_lattice(grid, &lf, mode, DEFAULT_MAX_POINTS)
}

/// Which grids [`run_dp`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retain {
    None,
    All,
    Last,
}

impl core::str::FromStr for Retain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Retain::None),
            "all" => Ok(Retain::All),
            "last" => Ok(Retain::Last),
            other => Err(Error::InvalidParameter(format!("unknown retain policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpOptions {
    pub mode: Mode,
    pub n_max: usize,
    pub retain: Retain,
    pub max_points: usize,
}

impl DpOptions {
    pub fn new(mode: Mode, n_max: usize) -> Self {
        DpOptions { mode, n_max, retain: Retain::None, max_points: DEFAULT_MAX_POINTS }
    }

    pub fn retain(mut self, retain: Retain) -> Self {
        self.retain = retain;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpResult {
    pub mode: Mode,
    /// `(n, w(0, n))` for `n = 0 ..= n_max`.
    pub series: Vec<(usize, f64)>,
    /// Retained grids in increasing step order.
    pub grids: Vec<ValueGrid>,
}

/// Runs the recursion from an arbitrary initial grid. `step` is the
/// function used to advance one step, so callers may substitute a parallel
/// implementation.
pub fn run_dp_from<S>(start: ValueGrid, family: &LatticeFamily, opts: &DpOptions, mut step: S) -> Result<DpResult>
where
    S: FnMut(&ValueGrid, &LatticeFamily, Mode, usize) -> Result<ValueGrid>,
{
    let origin = vec![0i64; start.dim()];
    let mut series = Vec::with_capacity(opts.n_max + 1);
    let mut grids = Vec::new();
    series.push((start.step(), start.get(&origin)));
    let mut current = start;
    for _ in 0..opts.n_max {
        let next = step(&current, family, opts.mode, opts.max_points)?;
        series.push((next.step(), next.get(&origin)));
        let prev = core::mem::replace(&mut current, next);
        if opts.retain == Retain::All {
            grids.push(prev);
        }
    }
    if opts.retain != Retain::None {
        grids.push(current);
    }
    Ok(DpResult { mode: opts.mode, series, grids })
}

/// Rejects runs whose worst-case support `delta + n R` would not fit in
/// `opts.max_points`.
pub fn check_dp_size(lattice: &Lattice, delta: f64, family: &FiniteFamily, opts: &DpOptions) -> Result<()> {
    let reach = sqrt(lattice.dim() as f64) * (delta + opts.n_max as f64 * family.max_step()) / lattice.spacing();
    let side = 2.0 * reach + 1.0;
    let projected = libm::pow(side, lattice.dim() as f64);
    if projected > opts.max_points as f64 {
        return Err(Error::TooLarge { projected: projected as usize, cap: opts.max_points });
    }
    Ok(())
}

/// Value function from the indicator of `B_delta` up to `opts.n_max`.
pub fn run_dp(lattice: &Lattice, delta: f64, family: &FiniteFamily, opts: &DpOptions) -> Result<DpResult> {
    let lf = LatticeFamily::new(*lattice, family)?;
    check_dp_size(lattice, delta, family, opts)?;
    let start = init_indicator(lattice, delta)?;
    run_dp_from(start, &lf, opts, dp_step_lattice)
}

/// Least-squares decay exponent from `log w(0, n) ~ c - alpha log n`.
///
/// Only dyadic `n` (powers of two) inside `[n_lo, n_hi]` are used. Returns
/// `(alpha, stderr)`; the error is 0 when only two points are available.
pub fn fit_exponent(series: &[(usize, f64)], n_lo: usize, n_hi: usize) -> Result<(f64, f64)> {
    if n_lo < 1 || n_hi <= n_lo {
        return Err(Error::Fit(format!("need 1 <= n_lo < n_hi, got [{n_lo}, {n_hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, w) in series {
        if n < n_lo || n > n_hi || !n.is_power_of_two() {
            continue;
        }
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Fit(format!(
                "value {w} at n = {n} is not in (0, 1]; use a larger target radius or a smaller range"
            )));
        }
        xs.push(ln(n as f64));
        ys.push(ln(w));
    }
    let m = xs.len();
    if m < 2 {
        return Err(Error::Fit(format!("only {m} dyadic points in [{n_lo}, {n_hi}]")));
    }
    let (slope, stderr) = least_squares_slope(&xs, &ys);
    Ok((-slope, stderr))
}

/// Ordinary least-squares slope and its standard error.
pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if xs.len() <= 2 {
        return (slope, 0.0);
    }
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x)).sum();
    (slope, sqrt(ssr / (m - 2.0) / sxx))
}

/// Worst ratio of the grid to the bound `exp(-(|x| - delta)^2 / (2 n R^2))`
/// over points outside the target ball. A ratio at most 1 means the grid
/// sits under the bounded-increment martingale tail envelope.
pub fn azuma_check(grid: &ValueGrid, delta: f64, step_bound: f64) -> f64 {
    let n = grid.step() as f64;
    let h = grid.spacing();
    let mut worst: f64 = 0.0;
    for (idx, v) in grid.iter() {
        if v <= 0.0 {
            continue;
        }
        let r = sqrt(idx.iter().map(|&k| (k as f64 * h) * (k as f64 * h)).sum());
        if r <= delta + BOUNDARY_SLACK {
            continue;
        }
        if n == 0.0 {
            return f64::INFINITY;
        }
        let gap = r - delta;
        worst = worst.max(v / exp(-gap * gap / (2.0 * n * step_bound * step_bound)));
    }
    worst
}
