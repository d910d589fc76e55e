use alloc::format;
use alloc::vec::Vec;

use crate::eigensolver::EigenPair;
use crate::error::{Error, Result};
use crate::math::{exp, ln, powf, round, sqrt};
use crate::operators::{finite_op_apply, op_matrix, ControlFamily, FiniteFamily, Mode, SymMatrix};

/// Unit directions `+-e_1` in one dimension, evenly spaced angles in the
/// `(e_1, e_2)` plane otherwise.
fn default_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return alloc::vec![alloc::vec![1.0], alloc::vec![-1.0]];
    }
    (0..8)
        .map(|k| {
            let angle = core::f64::consts::PI * k as f64 / 4.0;
            let mut v = alloc::vec![0.0; dim];
            v[0] = libm::cos(angle);
            v[1] = libm::sin(angle);
            v
        })
        .collect()
}

fn log_times(lo_exp: f64, hi_exp: f64, per_decade: usize) -> Vec<f64> {
    let n = round((hi_exp - lo_exp) * per_decade as f64) as usize;
    (0..=n).map(|k| powf(10.0, lo_exp + k as f64 / per_decade as f64)).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn check_directions(dirs: &[Vec<f64>], dim: usize) -> Result<()> {
    if dirs.is_empty() {
        return Err(Error::InvalidParameter("no directions in the grid".into()));
    }
    for d in dirs {
        if d.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d.len() });
        }
    }
    Ok(())
}

/// Points `x = rho sqrt(t) e` for each time, self-similar radius and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiGrid {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl PsiGrid {
    /// `t` from `10^2` to `10^5` with four points per decade, `rho` in `[0, 20]`.
    pub fn standard(dim: usize) -> Self {
        PsiGrid { times: log_times(2.0, 5.0, 4), rho: linspace(0.0, 20.0, 401), directions: default_directions(dim) }
    }
}

/// Grid point where no constants fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiWitness {
    pub t: f64,
    pub x: Vec<f64>,
    /// `t (Psi(x,t+1) - Psi(x,t) + F[Psi(.,t)](x)) / Psi(x,t)`.
    pub scaled_lhs: f64,
}

/// Constants for the two-regime lower bound
///
/// ```text
/// Psi(x,t+1) - Psi(x,t) + F[Psi(.,t)](x) >= c t^-1 Psi(x,t) |x|/sqrt(t)   for |x| >= C sqrt(t)
///                                        >= -C c t^-1 Psi(x,t)            otherwise
/// ```
///
/// over the grid times `t >= min_passing_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiReport {
    pub beta: f64,
    pub mode: Mode,
    pub holds: bool,
    pub c: Option<f64>,
    pub big_c: Option<f64>,
    /// Smallest grid time from which on the constants hold.
    pub min_passing_t: Option<f64>,
    /// Worst point over the whole grid, reported when even the largest time fails.
    pub witness: Option<PsiWitness>,
    pub points: usize,
    /// Minimum of the scaled left side over each time, in grid order.
    pub min_scaled_lhs: Vec<(f64, f64)>,
}

/// Feasible `(c, C)` given per-radius minima of the scaled left side.
/// The threshold `C` runs over the positive grid radii; the first one that
/// works is returned with the largest admissible `c`.
fn fit_constants(rho: &[f64], min_q: &[f64]) -> Option<(f64, f64)> {
    for (j, &big_c) in rho.iter().enumerate() {
        if !(big_c > 0.0) {
            continue;
        }
        let c = rho
            .iter()
            .zip(min_q)
            .skip(j)
            .map(|(r, q)| q / r)
            .fold(f64::INFINITY, f64::min);
        if !(c > 0.0 && c.is_finite()) {
            continue;
        }
        let inner_ok = min_q[..j].iter().all(|&q| q >= -big_c * c);
        if inner_ok {
            return Some((c, big_c));
        }
    }
    None
}

/// Evaluates the left side of the barrier inequality for `Psi` on the grid
/// with the exact finite-difference operator of `family`.
///
/// `amplitude` multiplies `Psi`; by homogeneity it cannot change the report.
pub fn verify_psi_lemma(
    family: &FiniteFamily,
    beta: f64,
    grid: &PsiGrid,
    mode: Mode,
    amplitude: f64,
) -> Result<PsiReport> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("amplitude = {amplitude} must be positive")));
    }
    let dim = family.dim();
    check_directions(&grid.directions, dim)?;
    if grid.times.is_empty() || grid.rho.is_empty() || grid.times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("psi grid needs positive times and at least one radius".into()));
    }
    let mut rho: Vec<f64> = grid.rho.clone();
    rho.sort_by(f64::total_cmp);
    let mut times = grid.times.clone();
    times.sort_by(f64::total_cmp);

    // per time, per radius: minimum over directions of the scaled left side, with its point
    let mut table: Vec<Vec<(f64, usize)>> = Vec::with_capacity(times.len());
    let mut x = alloc::vec![0.0; dim];
    for &t in &times {
        let root = sqrt(t);
        let mut row = Vec::with_capacity(rho.len());
        for &r in &rho {
            let mut worst = (f64::INFINITY, 0);
            for (k, e) in grid.directions.iter().enumerate() {
                for (xi, ei) in x.iter_mut().zip(e) {
                    *xi = r * root * ei;
                }
                let q = scaled_psi_lhs(family, beta, amplitude, &x, t, mode)?;
                if q < worst.0 {
                    worst = (q, k);
                }
            }
            row.push(worst);
        }
        table.push(row);
    }

    let mut min_passing = None;
    let mut suffix_min = alloc::vec![f64::INFINITY; rho.len()];
    let mut found = None;
    for k in (0..times.len()).rev() {
        for (m, (q, _)) in suffix_min.iter_mut().zip(&table[k]) {
            *m = m.min(*q);
        }
        match fit_constants(&rho, &suffix_min) {
            Some(cc) => {
                min_passing = Some(times[k]);
                found = Some(cc);
            }
            None => break,
        }
    }

    let witness = if found.is_none() {
        let last = times.len() - 1;
        let (j, &(q, k)) = table[last]
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let sa = if rho[a.0] > 0.0 { a.1 .0 / rho[a.0] } else { a.1 .0 };
                let sb = if rho[b.0] > 0.0 { b.1 .0 / rho[b.0] } else { b.1 .0 };
                sa.total_cmp(&sb)
            })
            .expect("non-empty grid");
        let t = times[last];
        let point = grid.directions[k].iter().map(|e| rho[j] * sqrt(t) * e).collect();
        Some(PsiWitness { t, x: point, scaled_lhs: q })
    } else {
        None
    };

    let min_scaled_lhs = times
        .iter()
        .zip(&table)
        .map(|(&t, row)| (t, row.iter().map(|p| p.0).fold(f64::INFINITY, f64::min)))
        .collect();
    Ok(PsiReport {
        beta,
        mode,
        holds: found.is_some(),
        c: found.map(|f| f.0),
        big_c: found.map(|f| f.1),
        min_passing_t: min_passing,
        witness,
        points: times.len() * rho.len() * grid.directions.len(),
        min_scaled_lhs,
    })
}

/// `t (Psi(x,t+1) - Psi(x,t) + F[Psi(.,t)](x)) / Psi(x,t)` for `amplitude * Psi`,
/// with every value taken relative to `Psi(x,t)`.
fn scaled_psi_lhs(family: &FiniteFamily, beta: f64, amplitude: f64, x: &[f64], t: f64, mode: Mode) -> Result<f64> {
    let s: f64 = x.iter().map(|v| v * v).sum();
    let q = sqrt(1.0 + s / t);
    let relative = |y: &[f64]| {
        let sy: f64 = y.iter().map(|v| v * v).sum();
        let qy = sqrt(1.0 + sy / t);
        amplitude * exp(-beta * (sy - s) / t / (qy + q))
    };
    let q_next = sqrt(1.0 + s / (t + 1.0));
    let dq = (s / (t + 1.0) - s / t) / (q_next + q);
    let later = amplitude * powf(t / (t + 1.0), beta) * exp(-beta * dq);
    let op = finite_op_apply(family, &relative, x, mode)?;
    Ok(t * (later - amplitude + op) / amplitude)
}

/// Points `x = rho sqrt(t) e` for the bent-profile estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BentProfileGrid {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl BentProfileGrid {
    /// `t` from 10 to `10^4`, `rho` up to half the profile range.
    pub fn standard(pair: &EigenPair) -> Self {
        let dim = pair.profile.family.dim();
        BentProfileGrid {
            times: log_times(1.0, 4.0, 4),
            rho: linspace(0.0, 0.5 * pair.profile.r_max(), 121),
            directions: default_directions(dim),
        }
    }
}

/// Excess of the bent profile over the leading bound, fitted as `C t^-kappa`.
///
/// For the upward bend the excess is `LHS + t^(-1-theta) Phi`, for the
/// downward one `t^(-1-theta) Phi - LHS`, with
/// `LHS = Phi_theta(x,t+1) - Phi_theta(x,t) + F[Phi_theta(.,t)](x)`.
/// Per time the report keeps the maximum over `x` of the excess divided by
/// `t^(-1-alpha) exp(-a |x|^2 / (2t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BentProfileReport {
    pub theta: f64,
    pub sign: super::Sign,
    pub mode: Mode,
    pub decay_rate: f64,
    /// `(t, max scaled excess)`.
    pub excess: Vec<(f64, f64)>,
    /// Fitted decay exponent of the excess; absent when fewer than two
    /// times have a positive excess.
    pub kappa: Option<f64>,
    /// Smallest `C` with `excess(t) <= C t^-kappa` on the grid (with
    /// `kappa = 0` when no fit exists).
    pub constant: f64,
    /// `t^(1+theta) LHS / Phi` at `x = 0` and the largest grid time.
    pub origin_ratio: f64,
}

/// Mode in which a finite family reproduces the operator of `family`.
fn pair_mode(family: &ControlFamily) -> Result<Mode> {
    match family {
        ControlFamily::PucciMinimal { .. } | ControlFamily::FixedNorm { .. } => Ok(Mode::Sup),
        ControlFamily::PucciMaximal { .. } => Ok(Mode::Inf),
        ControlFamily::Finite(_) => Err(Error::UnsupportedFamily("eigenpair must come from a rotational family".into())),
    }
}

fn check_compatible(pair_family: &ControlFamily, family: &FiniteFamily, mode: Mode) -> Result<()> {
    let dim = family.dim();
    if dim != pair_family.dim() {
        return Err(Error::DimensionMismatch { expected: pair_family.dim(), found: dim });
    }
    let finite = ControlFamily::Finite(family.clone());
    let mut probes = alloc::vec![SymMatrix::identity(dim), SymMatrix::identity(dim).neg()];
    let diag: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 1.5 } else { -0.7 }).collect();
    probes.push(SymMatrix::diag(&diag));
    probes.push(SymMatrix::diag(&diag).neg());
    for m in &probes {
        let want = op_matrix(pair_family, m, Mode::Sup)?;
        let got = op_matrix(&finite, m, mode)?;
        if (want - got).abs() > 1e-9 * (1.0 + m.norm()) {
            return Err(Error::UnsupportedFamily(format!(
                "finite family does not reproduce the {} operator ({got} vs {want})",
                pair_family.kind()
            )));
        }
    }
    Ok(())
}

/// Evaluates the finite-difference expression for the bent profile
/// `exp(+-t^-theta / theta) Phi` on the grid, where the finite `family`
/// must reproduce the operator the eigenpair was solved for.
pub fn verify_bent_profile_lemma(
    pair: &EigenPair,
    theta: f64,
    sign: super::Sign,
    family: &FiniteFamily,
    grid: &BentProfileGrid,
) -> Result<BentProfileReport> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in (0, 1/2)")));
    }
    let profile = &pair.profile;
    let mode = pair_mode(&profile.family)?;
    check_compatible(&profile.family, family, mode)?;
    let dim = family.dim();
    check_directions(&grid.directions, dim)?;
    if grid.times.is_empty() || grid.rho.is_empty() || grid.times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("bent-profile grid needs positive times and radii".into()));
    }
    let decay = profile.decay.ok_or_else(|| Error::Fit("profile has no Gaussian decay fit".into()))?;
    let r_max = profile.r_max();
    let step = family.max_step();
    let rho_top = grid.rho.iter().copied().fold(0.0, f64::max);
    for &t in &grid.times {
        let reach = rho_top + step / sqrt(t);
        if reach > r_max {
            return Err(Error::OutOfRange { radius: reach, max: r_max });
        }
    }

    let alpha = pair.alpha;
    let bend = |t: f64| exp(sign.factor() * powf(t, -theta) / theta);
    let mut times = grid.times.clone();
    times.sort_by(f64::total_cmp);
    let mut excess = Vec::with_capacity(times.len());
    let mut x = alloc::vec![0.0; dim];
    let mut origin_ratio = f64::NAN;
    for &t in &times {
        let root = sqrt(t);
        // values relative to t^-alpha bend(t)
        let shape = |y: &[f64]| {
            let r = sqrt(y.iter().map(|v| v * v).sum::<f64>()) / root;
            profile.value(r).unwrap_or(f64::NAN)
        };
        let later_scale = bend(t + 1.0) / bend(t) * powf(t / (t + 1.0), alpha);
        let lead = powf(t, -1.0 - theta);
        let mut worst = f64::NEG_INFINITY;
        for &r in &grid.rho {
            for e in &grid.directions {
                for (xi, ei) in x.iter_mut().zip(e) {
                    *xi = r * root * ei;
                }
                let g = profile.value(r)?;
                let later = later_scale * profile.value(r * sqrt(t / (t + 1.0)))?;
                let lhs = later - g + finite_op_apply(family, &shape, &x, mode)?;
                if lhs.is_nan() {
                    return Err(Error::OutOfRange { radius: r + step / root, max: r_max });
                }
                let plain = lead * g / bend(t);
                let ex = match sign {
                    super::Sign::Plus => lhs + plain,
                    super::Sign::Minus => plain - lhs,
                };
                let scaled = ex * bend(t) * t / exp(-0.5 * decay.a * r * r);
                worst = worst.max(scaled);
                if r == 0.0 {
                    origin_ratio = lhs / (lead * g);
                }
            }
        }
        excess.push((t, worst));
    }

    let positive: Vec<(f64, f64)> = excess.iter().copied().filter(|p| p.1 > 0.0).collect();
    let kappa = if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|p| ln(p.0)).collect();
        let ys: Vec<f64> = positive.iter().map(|p| ln(p.1)).collect();
        Some(-crate::value_dp::least_squares_slope(&xs, &ys).0)
    } else {
        None
    };
    let k = kappa.unwrap_or(0.0);
    let constant = excess.iter().map(|&(t, m)| m * powf(t, k)).fold(0.0, f64::max);
    Ok(BentProfileReport { theta, sign, mode, decay_rate: decay.a, excess, kappa, constant, origin_ratio })
}

#[cfg(test)]
mod tests {
    use super::super::{Sign, TestFunction};
    use super::*;
    use crate::eigensolver::{solve_alpha, ShootOptions};
    use crate::operators::DiscreteMeasure;

    fn walk(dim: usize) -> FiniteFamily {
        let r = sqrt(2.0 * dim as f64);
        FiniteFamily::new(alloc::vec![DiscreteMeasure::axis_cross(dim, 1.0, r).unwrap()]).unwrap()
    }

    fn two_speed() -> FiniteFamily {
        let r = sqrt(2.0);
        FiniteFamily::new(alloc::vec![
            DiscreteMeasure::symmetric_pair(&[1.0], r).unwrap(),
            DiscreteMeasure::symmetric_pair(&[0.5], r).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn psi_constants_exist_for_simple_walk() {
        let grid = PsiGrid { times: log_times(2.0, 4.0, 2), ..PsiGrid::standard(1) };
        let report = verify_psi_lemma(&walk(1), 1.0, &grid, Mode::Sup, 1.0).unwrap();
        assert!(report.holds, "{report:?}");
        assert!(report.c.unwrap() > 0.0 && report.big_c.unwrap().is_finite());
        assert!(report.min_passing_t.unwrap() <= 1e4);
    }

    #[test]
    fn psi_report_is_scale_invariant() {
        let grid = PsiGrid { times: log_times(2.0, 3.0, 2), rho: linspace(0.0, 10.0, 51), ..PsiGrid::standard(1) };
        let one = verify_psi_lemma(&two_speed(), 1.0, &grid, Mode::Sup, 1.0).unwrap();
        let two = verify_psi_lemma(&two_speed(), 1.0, &grid, Mode::Sup, 2.0).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn psi_lhs_matches_direct_evaluation() {
        // oracle: evaluate Psi through the closed form, no relative scaling
        let fam = two_speed();
        let beta = 1.3;
        let psi = |y: &[f64], t: f64| powf(t, -beta) * exp(-beta * sqrt(1.0 + y[0] * y[0] / t));
        for (x, t) in [(0.0, 50.0), (7.0, 50.0), (-30.0, 120.0)] {
            let p = |y: &[f64]| psi(y, t);
            let direct = psi(&[x], t + 1.0) - psi(&[x], t) + finite_op_apply(&fam, &p, &[x], Mode::Sup).unwrap();
            let want = t * direct / psi(&[x], t);
            let got = scaled_psi_lhs(&fam, beta, 1.0, &[x], t, Mode::Sup).unwrap();
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn psi_lhs_approaches_continuum_operator() {
        // oracle: t (d/dt Psi - 1/2 E[X . D^2 Psi X]) / Psi from the closed-form derivatives
        let fam = walk(2);
        let psi = TestFunction::psi(1.0).unwrap();
        let t = 1e4;
        for rho in [0.0, 1.0, 5.0, 20.0] {
            let x = [rho * sqrt(t), 0.0];
            let e = psi.eval(&x, Some(t)).unwrap();
            let quad = fam.measures()[0].expected_quad(&e.hessian);
            let want = t * (e.time_derivative.unwrap() - 0.5 * quad) / e.value;
            let got = scaled_psi_lhs(&fam, 1.0, 1.0, &x, t, Mode::Sup).unwrap();
            assert!((got - want).abs() < 0.02 * (1.0 + want.abs()), "rho = {rho}: {got} vs {want}");
        }
    }

    #[test]
    fn fit_constants_examples() {
        let rho = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(fit_constants(&rho, &[-1.0, 0.5, 1.0, 1.5]), Some((0.5, 2.0)));
        assert_eq!(fit_constants(&rho, &[-0.5, 0.5, 1.0, 1.5]), Some((0.5, 1.0)));
        assert_eq!(fit_constants(&rho, &[-5.0, -1.0, 1.0, 1.5]), None);
        assert_eq!(fit_constants(&rho, &[-1.0, -1.0, 1.0, 1.5]), Some((0.5, 2.0)));
        assert_eq!(fit_constants(&rho, &[0.0, -1.0, -1.0, -1.0]), None);
    }

    fn pucci_pair(lambda: f64) -> (EigenPair, FiniteFamily) {
        let pair = solve_alpha(&ControlFamily::pucci_minimal(lambda, 1).unwrap(), 1e-10, &ShootOptions::default()).unwrap();
        let r = 2.0;
        let fam = FiniteFamily::new(alloc::vec![
            DiscreteMeasure::symmetric_pair(&[sqrt(2.0)], r).unwrap(),
            DiscreteMeasure::symmetric_pair(&[sqrt(2.0 * lambda)], r).unwrap(),
        ])
        .unwrap();
        (pair, fam)
    }

    #[test]
    fn bent_profile_leading_term_at_origin() {
        let (pair, fam) = pucci_pair(0.5);
        let grid = BentProfileGrid { times: log_times(2.0, 4.0, 2), rho: linspace(0.0, 4.0, 21), ..BentProfileGrid::standard(&pair) };
        let plus = verify_bent_profile_lemma(&pair, 0.25, Sign::Plus, &fam, &grid).unwrap();
        let minus = verify_bent_profile_lemma(&pair, 0.25, Sign::Minus, &fam, &grid).unwrap();
        assert!(plus.origin_ratio < 0.0 && (plus.origin_ratio + 1.0).abs() < 0.2, "{plus:?}");
        assert!(minus.origin_ratio > 0.0 && (minus.origin_ratio - 1.0).abs() < 0.2, "{minus:?}");
        assert_eq!(plus.mode, Mode::Sup);
        assert!(plus.constant.is_finite() && minus.constant.is_finite());
    }

    #[test]
    fn bent_profile_rejects_bad_inputs() {
        let (pair, fam) = pucci_pair(0.5);
        let grid = BentProfileGrid::standard(&pair);
        assert!(verify_bent_profile_lemma(&pair, 0.5, Sign::Plus, &fam, &grid).is_err());
        let (_, other) = pucci_pair(0.3);
        assert!(matches!(
            verify_bent_profile_lemma(&pair, 0.2, Sign::Plus, &other, &grid),
            Err(Error::UnsupportedFamily(_))
        ));
        let wide = BentProfileGrid { rho: alloc::vec![0.0, pair.profile.r_max()], ..grid };
        assert!(matches!(
            verify_bent_profile_lemma(&pair, 0.2, Sign::Plus, &fam, &wide),
            Err(Error::OutOfRange { .. })
        ));
    }
}
