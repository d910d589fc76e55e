//! Monte Carlo paths of controlled martingales.
//!
//! Every trial draws from its own ChaCha8 stream keyed by `(seed, trial)`,
//! so a trial's path does not depend on which thread runs it or in what
//! order. Counts over disjoint trial ranges can be summed.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{norm, sqrt};
use crate::operators::{FiniteFamily, Mode};
use crate::value_dp::{LatticeFamily, ValueGrid, BOUNDARY_SLACK};

/// Smallest trial count accepted by [`estimate_hit`].
pub const MIN_TRIALS: u64 = 1000;

/// Markov control: the step law depends on the current state and the
/// number of steps left.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Always the measure with this index.
    FixedMeasure(usize),
    /// The measure attaining the extremum in the dynamic programming step,
    /// replayed from stored value grids.
    GreedyFromGrids(GreedyPolicy),
    /// Symmetric steps orthogonal to the current position.
    Tangential,
}

/// Value grids `v(., k)` for `k = 0, 1, ...` with the lattice form of the
/// family they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPolicy {
    family: LatticeFamily,
    grids: Vec<ValueGrid>,
    mode: Mode,
}

impl GreedyPolicy {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Longest path the stored grids can steer.
    pub fn horizon(&self) -> usize {
        self.grids.len()
    }
}

impl Strategy {
    /// Greedy policy from grids in increasing step order starting at 0, as
    /// retained by a full dynamic programming run.
    pub fn greedy(family: &FiniteFamily, grids: Vec<ValueGrid>, mode: Mode) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| Error::InvalidParameter("greedy strategy needs at least one grid".into()))?;
        let lattice = first.lattice();
        for (k, g) in grids.iter().enumerate() {
            if g.step() != k {
                return Err(Error::InvalidParameter(format!("grid {k} holds step {}, expected {k}", g.step())));
            }
            if g.lattice() != lattice {
                return Err(Error::InvalidParameter(format!("grid {k} lives on a different lattice")));
            }
        }
        let family = LatticeFamily::new(lattice, family)?;
        Ok(Strategy::GreedyFromGrids(GreedyPolicy { family, grids, mode }))
    }

    /// Tangential strategy; only defined from dimension 2 on.
    pub fn tangential(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedFamily("tangential steps need d >= 2".into()));
        }
        Ok(Strategy::Tangential)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FixedMeasure(_) => "fixed",
            Strategy::GreedyFromGrids(_) => "greedy",
            Strategy::Tangential => "tangential",
        }
    }

    /// Checks the strategy can drive `n` steps of `family` and returns the
    /// tangential step length where relevant.
    fn prepare(&self, family: &FiniteFamily, n: usize) -> Result<f64> {
        match self {
            Strategy::FixedMeasure(i) => {
                if *i >= family.len() {
                    return Err(Error::InvalidParameter(format!(
                        "measure index {i} out of range for a family of {}",
                        family.len()
                    )));
                }
                Ok(0.0)
            }
            Strategy::GreedyFromGrids(p) => {
                if p.family.len() != family.len() || p.family.lattice().dim() != family.dim() {
                    return Err(Error::InvalidParameter("greedy grids were computed for another family".into()));
                }
                if n > p.horizon() {
                    return Err(Error::InvalidParameter(format!(
                        "greedy grids cover {} steps, {n} requested",
                        p.horizon()
                    )));
                }
                Ok(0.0)
            }
            Strategy::Tangential => {
                if family.dim() < 2 {
                    return Err(Error::UnsupportedFamily("tangential steps need d >= 2".into()));
                }
                fixed_norm_step(family)
            }
        }
    }
}

/// Common root mean square step length of a fixed-norm family.
fn fixed_norm_step(family: &FiniteFamily) -> Result<f64> {
    let moments: Vec<f64> = family.measures().iter().map(|mu| 2.0 * mu.second_moment().trace()).collect();
    let first = moments[0];
    if moments.iter().any(|m| (m - first).abs() > 1e-12 * first) {
        return Err(Error::UnsupportedFamily(
            "tangential steps need a family whose measures share E|X|^2".into(),
        ));
    }
    Ok(sqrt(first))
}

/// Unit vector orthogonal to `x`, built from the coordinate axis least
/// aligned with it.
fn tangent(x: &[f64], r: f64) -> Vec<f64> {
    if x.len() == 2 {
        return alloc::vec![-x[1] / r, x[0] / r];
    }
    let (k, _) = x
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty point");
    let coef = x[k] / (r * r);
    let mut v: Vec<f64> = x.iter().map(|xi| -coef * xi).collect();
    v[k] += 1.0;
    let n = norm(&v);
    v.iter_mut().for_each(|c| *c /= n);
    v
}

/// Generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform draw on `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Cumulative weights of every measure, normalized so the last entry is 1.
struct Sampler {
    cumulative: Vec<Vec<f64>>,
}

impl Sampler {
    fn new(family: &FiniteFamily) -> Self {
        let cumulative = family
            .measures()
            .iter()
            .map(|mu| {
                let total: f64 = mu.atoms().iter().map(|a| a.weight).sum();
                let mut acc = 0.0;
                mu.atoms()
                    .iter()
                    .map(|a| {
                        acc += a.weight / total;
                        acc
                    })
                    .collect()
            })
            .collect();
        Sampler { cumulative }
    }

    fn atom(&self, measure: usize, u: f64) -> usize {
        let c = &self.cumulative[measure];
        c.partition_point(|&w| w <= u).min(c.len() - 1)
    }
}

struct Walker<'a> {
    family: &'a FiniteFamily,
    strategy: &'a Strategy,
    sampler: Sampler,
    step_len: f64,
}

impl<'a> Walker<'a> {
    fn new(family: &'a FiniteFamily, strategy: &'a Strategy, n: usize) -> Result<Self> {
        let step_len = strategy.prepare(family, n)?;
        Ok(Walker { family, strategy, sampler: Sampler::new(family), step_len })
    }

    fn run(&self, n: usize, start: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if start.len() != self.family.dim() {
            return Err(Error::DimensionMismatch { expected: self.family.dim(), found: start.len() });
        }
        let mut x = start.to_vec();
        for done in 0..n {
            self.step(&mut x, n - done, rng)?;
        }
        Ok(x)
    }

    fn step(&self, x: &mut [f64], remaining: usize, rng: &mut ChaCha8Rng) -> Result<()> {
        let measure = match self.strategy {
            Strategy::FixedMeasure(i) => *i,
            Strategy::GreedyFromGrids(p) => {
                let lattice = p.family.lattice();
                let idx = lattice
                    .index_of(x)
                    .ok_or_else(|| Error::InvalidParameter("greedy path left the lattice".into()))?;
                p.family.best_measure(&p.grids[remaining - 1], &idx, p.mode).0
            }
            Strategy::Tangential => {
                let r = norm(x);
                if r > 0.0 {
                    let v = tangent(x, r);
                    let sign = if uniform(rng) < 0.5 { 1.0 } else { -1.0 };
                    for (xi, vi) in x.iter_mut().zip(&v) {
                        *xi += sign * self.step_len * vi;
                    }
                    return Ok(());
                }
                0
            }
        };
        let atom = &self.family.measures()[measure].atoms()[self.sampler.atom(measure, uniform(rng))];
        for (xi, a) in x.iter_mut().zip(&atom.point) {
            *xi += a;
        }
        Ok(())
    }
}

/// Terminal point of one path of length `n` from `start`.
pub fn sample_path(
    family: &FiniteFamily,
    strategy: &Strategy,
    n: usize,
    start: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    Walker::new(family, strategy, n)?.run(n, start, rng)
}

/// Number of trials in `trials` whose terminal point lies in the closed
/// ball of radius `delta` around the origin.
pub fn hit_count(
    family: &FiniteFamily,
    strategy: &Strategy,
    n: usize,
    start: &[f64],
    delta: f64,
    seed: u64,
    trials: Range<u64>,
) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("target radius {delta} must be positive")));
    }
    let walker = Walker::new(family, strategy, n)?;
    let mut hits = 0;
    for trial in trials {
        let mut rng = trial_rng(seed, trial);
        let end = walker.run(n, start, &mut rng)?;
        if norm(&end) <= delta + BOUNDARY_SLACK {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Hit frequency with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
    pub ci95: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_count(hits: u64, trials: u64, seed: u64) -> Self {
        let p_hat = hits as f64 / trials as f64;
        let ci95 = 1.96 * sqrt(p_hat * (1.0 - p_hat) / trials as f64);
        McEstimate { p_hat, hits, trials, ci95, seed }
    }
}

pub fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Estimates `P[|X_n| <= delta]` for paths from `start` under `strategy`.
pub fn estimate_hit(
    family: &FiniteFamily,
    strategy: &Strategy,
    n: usize,
    start: &[f64],
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let hits = hit_count(family, strategy, n, start, delta, seed, 0..trials)?;
    Ok(McEstimate::from_count(hits, trials, seed))
}
