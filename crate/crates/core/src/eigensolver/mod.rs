//! Principal eigenpair of the self-similar problem for rotationally
//! invariant operators.
//!
//! A radial profile `g(r)` with `Phi(x, t) = t^-alpha g(|x| / sqrt t)` solves
//!
//! ```text
//! F(g'', g'/r) - r g' / 2 = alpha g,    g(0) = 1, g'(0) = 0
//! ```
//!
//! where `F` acts on the radial Hessian spectrum (`g''` once, `g'/r` with
//! multiplicity `d - 1`). For `alpha` below the eigenvalue the solution stays
//! positive with an algebraic tail, above it the solution changes sign, and
//! the eigenvalue is found by bisection between the two.

mod profile;

use alloc::format;
use alloc::vec::Vec;

pub use profile::{GaussianDecay, RadialProfile};

use crate::error::{Error, Result};
use crate::math::{norm, powf, sqrt};
use crate::operators::{pucci_theta, ControlFamily, FiniteFamily};

/// Profiles below this value are not trusted for reconstruction.
pub const TRUST_FLOOR: f64 = 1e-9;
/// Relative disagreement between the bracket profiles that ends the trusted range.
pub const BRACKET_AGREEMENT: f64 = 1e-6;
/// Allowed halved-step disagreement, relative to `sup |g|`.
pub const RICHARDSON_TOL: f64 = 1e-8;

/// Integration settings for the shooting method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    pub r_max: f64,
    pub h_ode: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { r_max: 12.0, h_ode: 1e-3 }
    }
}

/// Outcome of a single shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// The profile reached zero at the given radius.
    CrossedZero(f64),
    /// Positive with Gaussian-like decay at `r_max`.
    Gaussian,
    /// Positive with a slowly decaying tail at `r_max`.
    Algebraic,
}

impl Branch {
    /// Whether the shot indicates a trial exponent below the eigenvalue.
    pub fn is_subcritical(self) -> bool {
        matches!(self, Branch::Algebraic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::CrossedZero(_) => "crossed_zero",
            Branch::Gaussian => "gaussian_branch",
            Branch::Algebraic => "algebraic_branch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Minimal,
    Maximal,
    FixedNorm,
}

/// Radial reduction of a rotationally invariant operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Radial {
    kind: Kind,
    lambda: f64,
    dim: usize,
}

impl Radial {
    pub(crate) fn new(family: &ControlFamily) -> Result<Self> {
        let (kind, lambda, dim) = match *family {
            ControlFamily::PucciMinimal { lambda, dim } => (Kind::Minimal, lambda, dim),
            ControlFamily::PucciMaximal { lambda, dim } => (Kind::Maximal, lambda, dim),
            ControlFamily::FixedNorm { lambda, dim } => (Kind::FixedNorm, lambda, dim),
            ControlFamily::Finite(_) => {
                return Err(Error::UnsupportedFamily(
                    "radial reduction needs a rotationally invariant family".into(),
                ))
            }
        };
        Ok(Radial { kind, lambda, dim })
    }

    fn theta(&self, s: f64) -> f64 {
        match self.kind {
            Kind::Maximal => {
                if s > 0.0 {
                    self.lambda * s
                } else {
                    s
                }
            }
            _ => pucci_theta(self.lambda, s),
        }
    }

    pub(crate) fn apply(&self, g_pp: f64, g_p_over_r: f64) -> f64 {
        let tangential = (self.dim - 1) as f64;
        match self.kind {
            Kind::Minimal | Kind::Maximal => -self.theta(g_pp) - tangential * self.theta(g_p_over_r),
            Kind::FixedNorm => {
                if self.dim == 1 {
                    -0.5 * self.lambda * g_pp
                } else {
                    -0.5 * self.lambda * g_pp.max(g_p_over_r)
                }
            }
        }
    }

    /// `g''(0)` from the equation at the origin, where `g'/r -> g''`.
    fn origin_curvature(&self, alpha: f64) -> f64 {
        match self.kind {
            Kind::Minimal => -alpha / (self.dim as f64 * self.lambda),
            Kind::Maximal => -alpha / self.dim as f64,
            Kind::FixedNorm => -2.0 * alpha / self.lambda,
        }
    }

    /// Solves the equation for `g''`. The flag is set when the fixed-norm
    /// operator loses its dependence on `g''`.
    fn second_derivative(&self, alpha: f64, r: f64, g: f64, gp: f64) -> (f64, bool) {
        let tangential = (self.dim - 1) as f64;
        let gpr = gp / r;
        match self.kind {
            Kind::Minimal | Kind::Maximal => {
                let q = -alpha * g - 0.5 * r * gp - tangential * self.theta(gpr);
                let slope_pos = if self.kind == Kind::Minimal { 1.0 } else { self.lambda };
                let slope_neg = if self.kind == Kind::Minimal { self.lambda } else { 1.0 };
                (if q > 0.0 { q / slope_pos } else { q / slope_neg }, false)
            }
            Kind::FixedNorm => {
                let q = -2.0 * (alpha * g + 0.5 * r * gp) / self.lambda;
                if self.dim > 1 && q < gpr {
                    (gpr, true)
                } else {
                    (q, false)
                }
            }
        }
    }

    fn initial_step(&self) -> f64 {
        1e-4 * sqrt(self.lambda).min(1.0)
    }

    /// Local step length. The minimal operator has an inner layer of width
    /// about `sqrt(lambda)` near the origin and a unit-scale tail.
    fn step(&self, h_ode: f64, r: f64) -> f64 {
        match self.kind {
            Kind::Minimal => h_ode * sqrt(self.lambda).max(r.min(1.0)),
            _ => h_ode * sqrt(self.lambda).min(1.0),
        }
    }
}

/// Radial form of the operator: `F` applied to the spectrum with `g_pp`
/// once and `g_p_over_r` repeated `d - 1` times.
pub fn radial_f(family: &ControlFamily, g_pp: f64, g_p_over_r: f64) -> Result<f64> {
    Ok(Radial::new(family)?.apply(g_pp, g_p_over_r))
}

#[derive(Debug, Clone)]
struct Trajectory {
    r: Vec<f64>,
    g: Vec<f64>,
    gp: Vec<f64>,
    gpp: Vec<f64>,
    branch: Branch,
    degenerate: usize,
}

impl Radial {
    /// One classical fourth-order step; returns the new state and the
    /// number of degenerate right-hand-side evaluations.
    fn rk4(&self, alpha: f64, r: f64, g: f64, gp: f64, h: f64) -> (f64, f64, usize) {
        let mut flagged = 0;
        let mut rhs = |r: f64, g: f64, gp: f64| {
            let (gpp, degenerate) = self.second_derivative(alpha, r, g, gp);
            flagged += degenerate as usize;
            gpp
        };
        let k1 = (gp, rhs(r, g, gp));
        let k2 = (gp + 0.5 * h * k1.1, rhs(r + 0.5 * h, g + 0.5 * h * k1.0, gp + 0.5 * h * k1.1));
        let k3 = (gp + 0.5 * h * k2.1, rhs(r + 0.5 * h, g + 0.5 * h * k2.0, gp + 0.5 * h * k2.1));
        let k4 = (gp + h * k3.1, rhs(r + h, g + h * k3.0, gp + h * k3.1));
        (
            g + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            gp + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            flagged,
        )
    }

    /// The Pucci right-hand side is only piecewise smooth: it switches
    /// slope where `g''` changes sign. Steps that straddle the switch are
    /// shortened to end on it so each step stays in one smooth piece.
    fn has_kinks(&self) -> bool {
        self.kind != Kind::FixedNorm && self.lambda != 1.0
    }
}

fn shoot(radial: &Radial, alpha: f64, opts: &ShootOptions, record: bool) -> Trajectory {
    let c = radial.origin_curvature(alpha);
    let mut r = radial.initial_step();
    let mut g = 1.0 + 0.5 * c * r * r;
    let mut gp = c * r;
    let mut degenerate = 0;
    let mut t = Trajectory {
        r: Vec::new(),
        g: Vec::new(),
        gp: Vec::new(),
        gpp: Vec::new(),
        branch: Branch::Algebraic,
        degenerate: 0,
    };
    let curvature = |r: f64, g: f64, gp: f64| radial.second_derivative(alpha, r, g, gp).0;
    if record {
        t.r.extend([0.0, r]);
        t.g.extend([1.0, g]);
        t.gp.extend([0.0, gp]);
        t.gpp.extend([c, curvature(r, g, gp)]);
    }
    while r < opts.r_max {
        let mut h = radial.step(opts.h_ode, r).min(opts.r_max - r);
        let (mut g_next, mut gp_next, mut flagged) = radial.rk4(alpha, r, g, gp, h);
        if radial.has_kinks() && g_next > 0.0 {
            let e0 = curvature(r, g, gp);
            let e1 = curvature(r + h, g_next, gp_next);
            if e0 != 0.0 && e1 != 0.0 && (e0 > 0.0) != (e1 > 0.0) {
                let (mut a, mut b) = (0.0, h);
                loop {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let (gm, gpm, _) = radial.rk4(alpha, r, g, gp, m);
                    let em = curvature(r + m, gm, gpm);
                    if em != 0.0 && (em > 0.0) == (e0 > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                h = b;
                (g_next, gp_next, flagged) = radial.rk4(alpha, r, g, gp, h);
            }
        }
        degenerate += flagged;
        if !(g_next > 0.0) {
            t.branch = Branch::CrossedZero(r + h * g / (g - g_next));
            t.degenerate = degenerate;
            return t;
        }
        r = if opts.r_max - r <= h { opts.r_max } else { r + h };
        g = g_next;
        gp = gp_next;
        if record {
            t.r.push(r);
            t.g.push(g);
            t.gp.push(gp);
            t.gpp.push(curvature(r, g, gp));
        }
    }
    t.branch = if gp / g < -opts.r_max / 4.0 { Branch::Gaussian } else { Branch::Algebraic };
    t.degenerate = degenerate;
    t
}

fn check_shot_inputs(alpha: f64, opts: &ShootOptions) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    if !(opts.r_max > 0.0 && opts.h_ode > 0.0 && opts.h_ode < opts.r_max) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < h_ode < r_max, got h_ode = {}, r_max = {}",
            opts.h_ode, opts.r_max
        )));
    }
    Ok(())
}

/// Largest difference between a trajectory and a finer one, on the coarse
/// nodes up to `r_limit`, relative to `sup |g|`.
fn richardson_gap(coarse: &Trajectory, fine: &RadialProfile, r_limit: f64) -> f64 {
    let sup = coarse.g.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    for (r, g) in coarse.r.iter().zip(&coarse.g) {
        if *r > r_limit {
            break;
        }
        if let Ok(v) = fine.value(*r) {
            worst = worst.max((v - g).abs());
        }
    }
    worst / sup
}

fn to_profile(family: &ControlFamily, t: Trajectory, len: usize) -> RadialProfile {
    let mut p = RadialProfile {
        family: family.clone(),
        r: t.r,
        g: t.g,
        g_prime: t.gp,
        g_second: t.gpp,
        decay: None,
    };
    p.r.truncate(len);
    p.g.truncate(len);
    p.g_prime.truncate(len);
    p.g_second.truncate(len);
    p.decay = p.fit_decay().ok();
    p
}

/// Integrates the radial equation at a trial exponent and classifies the
/// result. The profile stops at the first zero crossing.
///
/// The step is checked against a run with half the step; a disagreement
/// above [`RICHARDSON_TOL`] is an error.
pub fn integrate_profile(family: &ControlFamily, alpha: f64, opts: &ShootOptions) -> Result<(RadialProfile, Branch)> {
    check_shot_inputs(alpha, opts)?;
    let radial = Radial::new(family)?;
    let coarse = shoot(&radial, alpha, opts, true);
    let half = ShootOptions { h_ode: 0.5 * opts.h_ode, ..*opts };
    let fine = shoot(&radial, alpha, &half, true);
    let fine_len = fine.r.len();
    let fine = to_profile(family, fine, fine_len);
    let limit = match coarse.branch {
        Branch::CrossedZero(r) => r,
        _ => opts.r_max,
    };
    let gap = richardson_gap(&coarse, &fine, limit);
    if gap > RICHARDSON_TOL {
        return Err(Error::StepTooCoarse { disagreement: gap });
    }
    let branch = coarse.branch;
    let len = coarse.r.len();
    Ok((to_profile(family, coarse, len), branch))
}

/// Diagnostics recorded while solving for the eigenpair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub bisection_steps: usize,
    /// Halved-step disagreement of the accepted profile.
    pub richardson_gap: f64,
    /// Steps where the fixed-norm operator lost its `g''` dependence.
    pub degenerate_steps: usize,
    /// Sign changes of `g''` along the accepted profile.
    pub curvature_sign_changes: usize,
}

/// Principal eigenvalue with its profile.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub alpha: f64,
    /// Final bisection bracket width.
    pub tolerance: f64,
    pub profile: RadialProfile,
    pub diagnostics: SolveDiagnostics,
}

/// Known enclosure of the eigenvalue, when one is proven for the family.
pub fn alpha_bounds(family: &ControlFamily) -> Option<(f64, f64)> {
    match *family {
        ControlFamily::PucciMinimal { lambda, dim } => {
            let d = dim as f64;
            Some((d * lambda / 2.0, (d - 1.0) * lambda / 2.0 + 0.5))
        }
        ControlFamily::PucciMaximal { lambda, dim } => {
            let d = dim as f64;
            Some(((d - 1.0) / (2.0 * lambda) + 0.5, d / (2.0 * lambda)))
        }
        ControlFamily::FixedNorm { .. } => Some((0.5, 0.5)),
        ControlFamily::Finite(_) => None,
    }
}

/// Checks the bisection convention on the `lambda = 1`, `d = 1` case, whose
/// eigenvalue is `1/2`.
pub fn orientation_self_test(opts: &ShootOptions) -> Result<()> {
    let radial = Radial::new(&ControlFamily::PucciMinimal { lambda: 1.0, dim: 1 })?;
    let below = shoot(&radial, 0.4, opts, false).branch;
    let above = shoot(&radial, 0.6, opts, false).branch;
    if below.is_subcritical() && matches!(above, Branch::CrossedZero(_)) {
        Ok(())
    } else {
        Err(Error::Orientation)
    }
}

/// Principal eigenpair by bisection on the trial exponent.
///
/// The bracket is the proven enclosure widened by a factor 2 on each side.
/// Bisection runs until the bracket stops shrinking, which is always below
/// `tol`. The accepted profile is the positive endpoint, cut where it drops
/// under [`TRUST_FLOOR`] or stops agreeing with the other endpoint.
pub fn solve_alpha(family: &ControlFamily, tol: f64, opts: &ShootOptions) -> Result<EigenPair> {
    if !(1e-10..1.0).contains(&tol) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must lie in [1e-10, 1)")));
    }
    check_shot_inputs(1.0, opts)?;
    let radial = Radial::new(family)?;
    orientation_self_test(opts)?;
    let (lower, upper) = alpha_bounds(family).expect("rotational family");
    let (mut lo, mut hi) = (0.5 * lower, 2.0 * upper);
    if !shoot(&radial, lo, opts, false).branch.is_subcritical() || shoot(&radial, hi, opts, false).branch.is_subcritical() {
        return Err(Error::Bracket { lo, hi });
    }
    let mut steps = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || steps >= 200 {
            break;
        }
        if shoot(&radial, mid, opts, false).branch.is_subcritical() {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let below = shoot(&radial, lo, opts, true);
    let above = shoot(&radial, hi, opts, true);
    let above_len = above.r.len();
    let above = to_profile(family, above, above_len);
    let mut len = 2;
    while len < below.r.len() {
        let a = below.g[len];
        let Ok(b) = above.value(below.r[len]) else { break };
        if a < TRUST_FLOOR || (a - b).abs() > BRACKET_AGREEMENT * a {
            break;
        }
        len += 1;
    }
    let r_trust = below.r[len - 1];
    let half = ShootOptions { h_ode: 0.5 * opts.h_ode, ..*opts };
    let fine = shoot(&radial, lo, &half, true);
    let fine_len = fine.r.len();
    let fine = to_profile(family, fine, fine_len);
    let gap = richardson_gap(&below, &fine, r_trust);
    if gap > RICHARDSON_TOL {
        return Err(Error::StepTooCoarse { disagreement: gap });
    }
    let degenerate = below.degenerate;
    let profile = to_profile(family, below, len);
    if profile.decay.is_none() {
        return Err(Error::Fit("accepted profile has no Gaussian decay fit".into()));
    }
    let diagnostics = SolveDiagnostics {
        bisection_steps: steps,
        richardson_gap: gap,
        degenerate_steps: degenerate,
        curvature_sign_changes: profile.curvature_sign_changes(),
    };
    Ok(EigenPair { alpha: 0.5 * (lo + hi), tolerance: hi - lo, profile, diagnostics })
}

/// `Phi(x, t) = t^-alpha g(|x| / sqrt t)`.
pub fn reconstruct_phi(pair: &EigenPair, x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let dim = pair.profile.family.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
    }
    let r = norm(x) / sqrt(t);
    Ok(powf(t, -pair.alpha) * pair.profile.value(r)?)
}

/// Residual `F(D^2 g) - r g'/2 - alpha g` of the stored profile at radius `r`,
/// with derivatives taken from the interpolant.
pub fn residual(pair: &EigenPair, r: f64) -> Result<f64> {
    let [g, gp, gpp] = pair.profile.eval(r)?;
    let gpr = if r > 0.0 { gp / r } else { gpp };
    Ok(radial_f(&pair.profile.family, gpp, gpr)? - 0.5 * r * gp - pair.alpha * g)
}

/// Rotational family with the same exponent as a one-dimensional finite
/// family under `Mode::Sup`.
///
/// In one dimension the concave operator is `-s_max m` for `m > 0` and
/// `-s_min m` otherwise, with `s` the second moments of the controls.
/// Rescaling space by `sqrt(s_max)` turns it into the minimal Pucci operator
/// with `lambda = s_min / s_max`, and the exponent is scale invariant.
pub fn rotational_equivalent(family: &FiniteFamily) -> Result<ControlFamily> {
    if family.dim() != 1 {
        return Err(Error::UnsupportedFamily(format!(
            "only one-dimensional finite families have a rotational equivalent, got d = {}",
            family.dim()
        )));
    }
    let moments: Vec<f64> = family.measures().iter().map(|mu| mu.second_moment().get(0, 0)).collect();
    let hi = moments.iter().copied().fold(0.0, f64::max);
    let lo = moments.iter().copied().fold(f64::INFINITY, f64::min);
    ControlFamily::pucci_minimal(lo / hi, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;
    use crate::operators::{op_matrix, DiscreteMeasure, Mode, SymMatrix};
    use proptest::prelude::*;

    fn pmin(lambda: f64, dim: usize) -> ControlFamily {
        ControlFamily::pucci_minimal(lambda, dim).unwrap()
    }

    #[test]
    fn radial_examples() {
        for d in 1..=3 {
            let v = radial_f(&pmin(1.0, d), 0.7, -0.3).unwrap();
            assert!((v - (-0.7 + (d - 1) as f64 * 0.3)).abs() < 1e-15);
        }
        let got = radial_f(&pmin(0.5, 2), 1.0, -1.0).unwrap();
        let oracle = op_matrix(&pmin(0.5, 2), &SymMatrix::diag(&[1.0, -1.0]), Mode::Sup).unwrap();
        assert_eq!(got, -0.5);
        assert_eq!(got, oracle);
        let fnorm = ControlFamily::fixed_norm(0.4, 2).unwrap();
        assert!((radial_f(&fnorm, 2.0, -3.0).unwrap() + 0.4).abs() < 1e-15);
        assert!(radial_f(&ControlFamily::Finite(one_d_family(&[1.0])), 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn radial_matches_matrix_operator(lambda in 0.05f64..=1.0, d in 1usize..4, a in -3.0f64..3.0, b in -3.0f64..3.0, kind in 0usize..3) {
            let fam = match kind {
                0 => ControlFamily::pucci_minimal(lambda, d).unwrap(),
                1 => ControlFamily::pucci_maximal(lambda, d).unwrap(),
                _ => ControlFamily::fixed_norm(lambda, d).unwrap(),
            };
            let mut spectrum = vec![a];
            spectrum.extend(core::iter::repeat_n(b, d - 1));
            let m = SymMatrix::diag(&spectrum);
            let want = op_matrix(&fam, &m, Mode::Sup).unwrap();
            prop_assert!((radial_f(&fam, a, b).unwrap() - want).abs() < 1e-12);
        }
    }

    fn one_d_family(steps: &[f64]) -> FiniteFamily {
        FiniteFamily::new(steps.iter().map(|&s| DiscreteMeasure::symmetric_pair(&[s], 1.5).unwrap()).collect()).unwrap()
    }

    #[test]
    fn integrate_classifies_trial_exponents() {
        let fam = pmin(1.0, 1);
        let opts = ShootOptions::default();
        let (_, b) = integrate_profile(&fam, 0.6, &opts).unwrap();
        assert!(matches!(b, Branch::CrossedZero(_)));
        let (_, b) = integrate_profile(&fam, 0.3, &opts).unwrap();
        assert_eq!(b, Branch::Algebraic);
        let short = ShootOptions { r_max: 8.0, ..opts };
        let (p, b) = integrate_profile(&fam, 0.5, &short).unwrap();
        assert_eq!(b, Branch::Gaussian);
        let mut worst = 0.0f64;
        for k in 0..=600 {
            let r = k as f64 * 0.01;
            worst = worst.max((p.value(r).unwrap() - exp(-r * r / 4.0)).abs());
        }
        assert!(worst < 1e-8, "sup error {worst}");
    }

    #[test]
    fn coarse_step_is_rejected() {
        let fam = pmin(0.3, 2);
        let opts = ShootOptions { r_max: 6.0, h_ode: 0.4 };
        assert!(matches!(integrate_profile(&fam, 0.5, &opts), Err(Error::StepTooCoarse { .. })));
    }

    #[test]
    fn gaussian_cases() {
        let opts = ShootOptions::default();
        for d in 1..=3 {
            let pair = solve_alpha(&pmin(1.0, d), 1e-8, &opts).unwrap();
            assert!((pair.alpha - d as f64 / 2.0).abs() < 1e-8, "d = {d}: {}", pair.alpha);
            assert!(pair.profile.r_max() >= 6.0);
        }
        let fam = ControlFamily::fixed_norm(0.7, 3).unwrap();
        let pair = solve_alpha(&fam, 1e-8, &opts).unwrap();
        assert!((pair.alpha - 0.5).abs() < 1e-8);
        assert_eq!(pair.diagnostics.degenerate_steps, 0);
        for k in 0..=400 {
            let r = k as f64 * 0.01;
            let want = exp(-r * r / 1.4);
            assert!((pair.profile.value(r).unwrap() - want).abs() < 1e-6);
        }
    }

    #[test]
    fn bracketed_examples() {
        let opts = ShootOptions::default();
        let a = solve_alpha(&pmin(0.5, 2), 1e-8, &opts).unwrap().alpha;
        assert!((0.5..=0.75).contains(&a), "{a}");
        let b = solve_alpha(&ControlFamily::pucci_maximal(0.5, 2).unwrap(), 1e-8, &opts).unwrap().alpha;
        assert!((1.5..=2.0).contains(&b), "{b}");
    }

    #[test]
    fn reconstruct_examples() {
        let opts = ShootOptions::default();
        let pair = solve_alpha(&ControlFamily::fixed_norm(1.0, 3).unwrap(), 1e-8, &opts).unwrap();
        assert_eq!(reconstruct_phi(&pair, &[0.0; 3], 1.0).unwrap(), 1.0);
        assert!((reconstruct_phi(&pair, &[0.0; 3], 4.0).unwrap() - 0.5).abs() < 1e-8);
        assert!((reconstruct_phi(&pair, &[1.0, 0.0, 0.0], 1.0).unwrap() - exp(-0.5)).abs() < 1e-6);
        let far = [pair.profile.r_max() + 1.0, 0.0, 0.0];
        assert!(matches!(reconstruct_phi(&pair, &far, 1.0), Err(Error::OutOfRange { .. })));
        assert!(reconstruct_phi(&pair, &[0.0; 2], 1.0).is_err());
    }

    #[test]
    fn residual_and_self_similarity() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let opts = ShootOptions::default();
        let pair = solve_alpha(&pmin(0.4, 2), 1e-8, &opts).unwrap();
        let decay = pair.profile.decay.unwrap();
        assert!(decay.a > 0.0 && decay.k > 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let half = pair.profile.r_max() / 2.0;
        for _ in 0..200 {
            let t = 0.1 + 10.0 * unit();
            let r = half * unit();
            let ang = core::f64::consts::TAU * unit();
            let x = [r * sqrt(t) * libm::cos(ang), r * sqrt(t) * libm::sin(ang)];
            let phi = reconstruct_phi(&pair, &x, t).unwrap();
            let res = residual(&pair, norm(&x) / sqrt(t)).unwrap();
            let g = pair.profile.value(r).unwrap();
            assert!(res.abs() <= 1e-6 * g, "r = {r}: residual {res}, g = {g}");
            let s = 0.5 + 1.5 * unit();
            let scaled = reconstruct_phi(&pair, &[sqrt(s) * x[0], sqrt(s) * x[1]], s * t).unwrap();
            assert!((scaled - powf(s, -pair.alpha) * phi).abs() <= 1e-8 * scaled.abs());
        }
    }

    #[test]
    fn monotone_in_lambda_and_dual_bounds() {
        let opts = ShootOptions::default();
        for d in 1..=2 {
            let mut prev = 0.0;
            for k in 1..=10 {
                let lambda = k as f64 / 10.0;
                let a = solve_alpha(&pmin(lambda, d), 1e-8, &opts).unwrap().alpha;
                assert!(a >= prev - 1e-9, "d = {d}, lambda = {lambda}");
                prev = a;
                let b = solve_alpha(&ControlFamily::pucci_maximal(lambda, d).unwrap(), 1e-8, &opts).unwrap().alpha;
                let half_d = d as f64 / 2.0;
                if k < 10 {
                    assert!(a < half_d && half_d < b, "d = {d}, lambda = {lambda}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn finite_family_maps_to_pucci() {
        let fam = rotational_equivalent(&one_d_family(&[1.0, 0.125])).unwrap();
        assert_eq!(fam, pmin(1.0 / 64.0, 1));
        assert!(rotational_equivalent(&FiniteFamily::new(vec![DiscreteMeasure::axis_cross(2, 1.0, 2.0).unwrap()]).unwrap()).is_err());
    }

    #[test]
    fn bad_inputs() {
        let opts = ShootOptions::default();
        assert!(solve_alpha(&pmin(1.0, 1), 1e-12, &opts).is_err());
        assert!(integrate_profile(&pmin(1.0, 1), -1.0, &opts).is_err());
        assert!(matches!(
            solve_alpha(&ControlFamily::Finite(one_d_family(&[1.0])), 1e-8, &opts),
            Err(Error::UnsupportedFamily(_))
        ));
    }
}
