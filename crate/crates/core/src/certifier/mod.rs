//! Super- and subsolution certificates for the decay exponent.
//!
//! A positive, Gaussian-decaying `g` with
//!
//! ```text
//! F(D^2 g) - x.Dg / 2 >= beta g    proves  alpha >= beta
//! F(D^2 g) - x.Dg / 2 <= beta g    proves  alpha <= beta
//! ```
//!
//! For radial test functions the left side divided by `g` only depends on
//! `r`, and is evaluated in that ratio form so that tails never underflow.
//! Beyond the grid cutoff the sign is sampled at log-spaced radii, not
//! proven.
//!
//! The module also reports on the two finite-difference estimates used in
//! the convergence argument: the barrier `Psi` and the bent self-similar
//! profiles.

mod lemmas;
mod test_fn;

use alloc::format;
use alloc::vec::Vec;

pub use lemmas::{
    verify_bent_profile_lemma, verify_psi_lemma, BentProfileGrid, BentProfileReport, PsiGrid, PsiReport,
    PsiWitness,
};
pub use test_fn::{Sign, TestEval, TestFunction};

use crate::eigensolver::Radial;
use crate::error::{Error, Result};
use crate::math::{ceil, dot, floor, ln, powf, round};
use crate::operators::{op_matrix, ControlFamily, Mode};

/// Which side of the exponent a certificate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Supersolution: proves `alpha >= beta`.
    Lower,
    /// Subsolution: proves `alpha <= beta`.
    Upper,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }
}

impl core::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Direction::Lower),
            "upper" => Ok(Direction::Upper),
            other => Err(Error::InvalidParameter(format!("unknown direction `{other}`"))),
        }
    }
}

/// How the residual sign beyond the grid cutoff was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailStatus {
    /// Checked at log-spaced radii beyond the cutoff.
    Sampled,
}

impl TailStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TailStatus::Sampled => "sampled-tail",
        }
    }
}

/// Radial grid used for a certificate: nodes `r_cut (i / nodes)^2` plus
/// `tail_samples` radii log-spaced on `(r_cut, tail_factor * r_cut]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_cut: f64,
    pub nodes: usize,
    pub tail_samples: usize,
    pub tail_factor: f64,
}

impl Default for RadialGrid {
    fn default() -> Self {
        RadialGrid { r_cut: 12.0, nodes: 2000, tail_samples: 20, tail_factor: 100.0 }
    }
}

impl RadialGrid {
    pub fn refined(&self) -> Self {
        RadialGrid { nodes: 2 * self.nodes, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_cut > 0.0 && self.nodes >= 2 && self.tail_factor > 1.0) {
            return Err(Error::InvalidParameter(format!("bad certificate grid {self:?}")));
        }
        Ok(())
    }

    /// Grid radii, then tail radii.
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.nodes as f64;
        let inner = (0..=self.nodes).map(move |i| {
            let u = i as f64 / n;
            self.r_cut * u * u
        });
        let m = self.tail_samples;
        let tail = (1..=m).map(move |k| self.r_cut * powf(self.tail_factor, k as f64 / m as f64));
        inner.chain(tail)
    }
}

/// Resolution of the certified rate.
pub const BETA_STEP: f64 = 1e-4;
/// Rounding allowance when snapping the residual extreme to the rate grid.
/// Tail ratios are differences of terms of size `r^2`.
pub const ROUNDOFF: f64 = 1e-9;
/// Allowed sign violation when re-checking on the refined grid.
pub const REFINED_SLACK: f64 = 1e-9;

/// A certified one-sided bound on the exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub direction: Direction,
    pub beta: f64,
    pub family: ControlFamily,
    pub test: TestFunction,
    pub grid: RadialGrid,
    /// Extreme of `(F(D^2 g) - x.Dg/2) / g - beta` over the grid and tail
    /// samples: the minimum for lower certificates, the maximum for upper ones.
    pub worst_residual: f64,
    /// `worst_residual` oriented so that positive means slack; at least
    /// `-ROUNDOFF` for every emitted certificate.
    pub margin: f64,
    /// Same extreme on the grid refined twice.
    pub refined_residual: f64,
    pub tail_status: TailStatus,
    /// Tail dominance inequality of the bent Gaussian, checked at the tail
    /// radii; only for upper bent-Gaussian certificates with `p < 1/2`.
    pub tail_dominance: Option<bool>,
}

/// `F(D^2 g(x)) - x.Dg(x) / 2 - beta g(x)`, through the full Hessian.
/// Finite families are evaluated with the concave operator.
pub fn elliptic_residual(family: &ControlFamily, test: &TestFunction, beta: f64, x: &[f64]) -> Result<f64> {
    if test.is_time_dependent() {
        return Err(Error::InvalidParameter("elliptic residual needs a stationary test function".into()));
    }
    if x.len() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: x.len() });
    }
    let e = test.eval(x, None)?;
    let drift = dot(x, &e.gradient);
    Ok(op_matrix(family, &e.hessian, Mode::Sup)? - 0.5 * drift - beta * e.value)
}

/// `(F(D^2 g) - x.Dg / 2) / g` at radius `r` for a stationary radial test function.
fn ratio(radial: &Radial, test: &TestFunction, r: f64) -> f64 {
    let s = r * r;
    let (d1, d2) = test.log_derivatives(s).expect("stationary test function");
    let tangential = 2.0 * d1;
    let normal = 2.0 * d1 + 4.0 * s * d2;
    radial.apply(normal, tangential) - s * d1
}

fn extreme_ratio(radial: &Radial, test: &TestFunction, grid: &RadialGrid, direction: Direction) -> f64 {
    let values = grid.radii().map(|r| ratio(radial, test, r));
    match direction {
        Direction::Lower => values.fold(f64::INFINITY, f64::min),
        Direction::Upper => values.fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Whether the ratio is still moving towards the extreme between the last
/// two tail radii, which means no finite rate bounds it.
fn tail_runs_away(radial: &Radial, test: &TestFunction, grid: &RadialGrid, direction: Direction) -> bool {
    let m = grid.tail_samples;
    if m < 2 {
        return false;
    }
    let r = |k: usize| grid.r_cut * powf(grid.tail_factor, k as f64 / m as f64);
    let last = ratio(radial, test, r(m));
    let prev = ratio(radial, test, r(m - 1));
    let drift = last - prev;
    let tol = 1e-9 * (1.0 + last.abs());
    match direction {
        Direction::Lower => drift < -tol,
        Direction::Upper => drift > tol,
    }
}

fn check_radial(family: &ControlFamily, test: &TestFunction) -> Result<Radial> {
    if test.is_time_dependent() {
        return Err(Error::InvalidParameter("certificates need a stationary radial test function".into()));
    }
    Radial::new(family)
}

/// Bent-Gaussian tail inequality `E(x) >= a|x|^2/2 + b p |x|^2 (1 + |x|^2/lambda)^(p/2-1) / 2`
/// at the tail radii, with `E` the radial Hessian eigenvalue of the lower
/// bound `M(x)` used in the upper-bound argument.
pub fn bent_tail_dominance(test: &TestFunction, grid: &RadialGrid) -> Option<bool> {
    let TestFunction::BentGaussian { a, b, p, lambda } = *test else {
        return None;
    };
    let m = grid.tail_samples;
    let ok = (1..=m).all(|k| {
        let r = grid.r_cut * powf(grid.tail_factor, k as f64 / m as f64);
        let s = r * r;
        let base = lambda + s;
        let e = a * a * s - a + b * p * (2.0 - p) * powf(base, 0.5 * p - 2.0) * s - b * p * powf(base, 0.5 * p - 1.0);
        e >= 0.5 * a * s + 0.5 * b * p * s * powf(1.0 + s / lambda, 0.5 * p - 1.0)
    });
    Some(ok)
}

/// Best rate on the `BETA_STEP` grid for which the residual has the required
/// sign at every grid radius and tail sample.
///
/// The rate is then re-checked on the grid refined twice and moved by
/// further steps if the refined residual violates the sign by more than
/// [`REFINED_SLACK`].
pub fn certify(family: &ControlFamily, test: &TestFunction, direction: Direction, grid: &RadialGrid) -> Result<Certificate> {
    grid.validate()?;
    let radial = check_radial(family, test)?;
    let extreme = extreme_ratio(&radial, test, grid, direction);
    if !extreme.is_finite() {
        return Err(Error::NoCertificate(format!(
            "residual ratio is unbounded on the grid ({extreme}); the test function does not fit this direction"
        )));
    }
    if tail_runs_away(&radial, test, grid, direction) {
        return Err(Error::NoCertificate(format!(
            "residual ratio keeps {} at the outermost tail radius; the test function does not fit this direction",
            match direction {
                Direction::Lower => "falling",
                Direction::Upper => "rising",
            }
        )));
    }
    let mut steps = match direction {
        Direction::Lower => floor((extreme + ROUNDOFF) / BETA_STEP),
        Direction::Upper => ceil((extreme - ROUNDOFF) / BETA_STEP),
    };
    let mut beta = steps * BETA_STEP;
    let refined = extreme_ratio(&radial, test, &grid.refined(), direction);
    let violated = |beta: f64| match direction {
        Direction::Lower => refined - beta < -REFINED_SLACK,
        Direction::Upper => refined - beta > REFINED_SLACK,
    };
    while violated(beta) {
        steps += match direction {
            Direction::Lower => -1.0,
            Direction::Upper => 1.0,
        };
        beta = steps * BETA_STEP;
    }
    if !(beta > 0.0) {
        return Err(Error::NoCertificate(format!(
            "best {} rate {beta} is not positive (residual ratio extreme {extreme})",
            direction.as_str()
        )));
    }
    let worst = extreme - beta;
    let tail_dominance = match (direction, test) {
        (Direction::Upper, TestFunction::BentGaussian { p, .. }) if *p < 0.5 => bent_tail_dominance(test, grid),
        _ => None,
    };
    Ok(Certificate {
        direction,
        beta,
        family: family.clone(),
        test: test.clone(),
        grid: *grid,
        worst_residual: worst,
        margin: match direction {
            Direction::Lower => worst,
            Direction::Upper => -worst,
        },
        refined_residual: refined - beta,
        tail_status: TailStatus::Sampled,
        tail_dominance,
    })
}

/// Parameter sweep settings for [`lambda_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub p_lower: f64,
    pub p_upper: f64,
    /// Log-grid density for `a` and `b`.
    pub per_decade: usize,
    /// Decades of `a` scanned away from `1/2`.
    pub a_decades: f64,
    /// Range of `b` as powers of ten; `b = 0` is always included.
    pub b_log10: (f64, f64),
    /// Coarse grid used to rank parameter pairs.
    pub coarse: RadialGrid,
    /// Grid used for the final certificates.
    pub fine: RadialGrid,
    /// Number of best-ranked pairs re-certified on the fine grid.
    pub finalists: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            p_lower: 0.6,
            p_upper: 0.4,
            per_decade: 40,
            a_decades: 2.0,
            b_log10: (-3.0, 3.0),
            coarse: RadialGrid { nodes: 200, ..RadialGrid::default() },
            fine: RadialGrid::default(),
            finalists: 4,
        }
    }
}

/// One row of a λ scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub lower: Certificate,
    pub upper: Certificate,
}

fn log_grid(start: f64, decades: f64, per_decade: usize, sign: f64) -> Vec<f64> {
    let n = round(decades * per_decade as f64) as usize;
    (0..=n).map(|k| start * powf(10.0, sign * k as f64 / per_decade as f64)).collect()
}

/// Candidate `(a, b)` pairs. The Gaussian part must decay at least as fast
/// as `exp(-|x|^2/4)` for upper certificates and at most as fast for lower
/// ones, so `a` runs up from `1/2` or down from it.
pub fn scan_parameters(direction: Direction, opts: &ScanOptions) -> Vec<(f64, f64)> {
    let sign = match direction {
        Direction::Upper => 1.0,
        Direction::Lower => -1.0,
    };
    let a_values = log_grid(0.5, opts.a_decades, opts.per_decade, sign);
    let (b_lo, b_hi) = opts.b_log10;
    let mut b_values = alloc::vec![0.0];
    b_values.extend(log_grid(powf(10.0, b_lo), b_hi - b_lo, opts.per_decade, 1.0));
    let mut out = Vec::with_capacity(a_values.len() * b_values.len());
    for &a in &a_values {
        for &b in &b_values {
            out.push((a, b));
        }
    }
    out
}

/// Ranks a slice of parameter pairs on the coarse grid. Returns
/// `(score, a, b)` with the score being the rate each pair would certify;
/// pairs whose tail runs away are dropped.
pub fn rank_parameters(
    family: &ControlFamily,
    direction: Direction,
    p: f64,
    params: &[(f64, f64)],
    grid: &RadialGrid,
) -> Result<Vec<(f64, f64, f64)>> {
    let radial = Radial::new(family)?;
    let lambda = family.lambda().expect("rotational family");
    Ok(params
        .iter()
        .filter_map(|&(a, b)| {
            let test = TestFunction::BentGaussian { a, b, p, lambda };
            let score = extreme_ratio(&radial, &test, grid, direction);
            (score.is_finite() && !tail_runs_away(&radial, &test, grid, direction)).then_some((score, a, b))
        })
        .collect())
}

/// Best certificate among ranked candidates: the top `finalists` by coarse
/// score are certified on the fine grid.
pub fn best_certificate(
    family: &ControlFamily,
    direction: Direction,
    p: f64,
    mut ranked: Vec<(f64, f64, f64)>,
    opts: &ScanOptions,
) -> Result<Certificate> {
    match direction {
        Direction::Lower => ranked.sort_by(|x, y| y.0.total_cmp(&x.0)),
        Direction::Upper => ranked.sort_by(|x, y| x.0.total_cmp(&y.0)),
    }
    let lambda = family.lambda().expect("rotational family");
    let mut best: Option<Certificate> = None;
    let mut last_err = None;
    for &(_, a, b) in ranked.iter().take(opts.finalists.max(1)) {
        let test = TestFunction::BentGaussian { a, b, p, lambda };
        match certify(family, &test, direction, &opts.fine) {
            Ok(cert) => {
                let better = match (&best, direction) {
                    (None, _) => true,
                    (Some(c), Direction::Lower) => cert.beta > c.beta,
                    (Some(c), Direction::Upper) => cert.beta < c.beta,
                };
                if better {
                    best = Some(cert);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::NoCertificate(format!("no {} candidate survived ranking", direction.as_str())))
    })
}

/// Certificates on both sides for the minimal Pucci operator at one `lambda`.
pub fn scan_lambda(dim: usize, lambda: f64, opts: &ScanOptions) -> Result<ScanRow> {
    scan_lambda_with(dim, lambda, opts, rank_parameters)
}

/// [`scan_lambda`] with a caller-supplied ranking step, which receives the
/// same arguments as [`rank_parameters`] and must return the same pairs.
pub fn scan_lambda_with<R>(dim: usize, lambda: f64, opts: &ScanOptions, mut rank: R) -> Result<ScanRow>
where
    R: FnMut(&ControlFamily, Direction, f64, &[(f64, f64)], &RadialGrid) -> Result<Vec<(f64, f64, f64)>>,
{
    if !(opts.p_lower > 0.5 && opts.p_lower < 1.0 && opts.p_upper > 0.0 && opts.p_upper < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "need p_lower in (1/2, 1) and p_upper in (0, 1/2), got {} and {}",
            opts.p_lower, opts.p_upper
        )));
    }
    let family = ControlFamily::pucci_minimal(lambda, dim)?;
    let mut certs = Vec::with_capacity(2);
    for (direction, p) in [(Direction::Lower, opts.p_lower), (Direction::Upper, opts.p_upper)] {
        let params = scan_parameters(direction, opts);
        let ranked = rank(&family, direction, p, &params, &opts.coarse)?;
        certs.push(best_certificate(&family, direction, p, ranked, opts)?);
    }
    let upper = certs.pop().expect("two certificates");
    let lower = certs.pop().expect("two certificates");
    Ok(ScanRow { lambda, lower, upper })
}

/// Bent-Gaussian certificates for each `lambda`, in order.
pub fn lambda_scan(dim: usize, lambdas: &[f64], opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    lambdas.iter().map(|&l| scan_lambda(dim, l, opts)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| ln(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| ln(p.1)).collect();
    crate::value_dp::least_squares_slope(&xs, &ys).0
}
