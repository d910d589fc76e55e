//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that every criterion is reported even
//! when an earlier one fails. Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use ctrlmart::par;
use ctrlmart_core::certifier::{log_log_slope, verify_psi_lemma, PsiGrid, ScanOptions};
use ctrlmart_core::eigensolver::{rotational_equivalent, solve_alpha, EigenPair, ShootOptions};
use ctrlmart_core::operators::{op_apply, op_matrix};
use ctrlmart_core::simulator::{trial_rng, Strategy};
use ctrlmart_core::value_dp::{azuma_check, dp_step, fit_exponent, DpOptions, Lattice, ValueGrid};
use ctrlmart_core::{ControlFamily, DiscreteMeasure, FiniteFamily, Mode, SymMatrix};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

type Check = Box<dyn FnOnce(&mut Vec<f64>) -> Outcome + Send>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

fn solve(family: &ControlFamily) -> EigenPair {
    solve_alpha(family, TOL, &ShootOptions::default()).expect("solver converges")
}

fn solve_all(families: &[ControlFamily]) -> Vec<EigenPair> {
    par::solve_many(families, TOL, &ShootOptions::default())
        .into_iter()
        .map(|r| r.expect("solver converges"))
        .collect()
}

/// Sup-norm distance to `exact` on `[0, 6]`. The profile is cut where it
/// falls under the solver's trust floor, so past the cut only `exact`
/// itself contributes.
fn profile_error(pair: &EigenPair, exact: impl Fn(f64) -> f64) -> f64 {
    let p = &pair.profile;
    let inside = p.r.iter().zip(&p.g).filter(|(r, _)| **r <= 6.0).map(|(r, g)| (g - exact(*r)).abs());
    let beyond = if p.r_max() < 6.0 { exact(p.r_max()) } else { 0.0 };
    inside.fold(beyond, f64::max)
}

fn lambda_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

fn walk_1d() -> FiniteFamily {
    FiniteFamily::new(vec![DiscreteMeasure::symmetric_pair(&[1.0], 1.5).unwrap()]).unwrap()
}

fn two_speed_1d() -> FiniteFamily {
    FiniteFamily::new(vec![
        DiscreteMeasure::symmetric_pair(&[1.0], 1.5).unwrap(),
        DiscreteMeasure::symmetric_pair(&[0.125], 1.5).unwrap(),
    ])
    .unwrap()
}

fn fixed_norm_cross() -> FiniteFamily {
    FiniteFamily::new(vec![
        DiscreteMeasure::symmetric_pair(&[0.5, 0.0], 2.0).unwrap(),
        DiscreteMeasure::symmetric_pair(&[0.0, 0.5], 2.0).unwrap(),
    ])
    .unwrap()
}

fn two_speed_2d() -> FiniteFamily {
    FiniteFamily::new(vec![
        DiscreteMeasure::axis_cross(2, 1.0, 2.0).unwrap(),
        DiscreteMeasure::axis_cross(2, 0.5, 2.0).unwrap(),
    ])
    .unwrap()
}

fn c1() -> Outcome {
    let mut worst_alpha: f64 = 0.0;
    let mut worst_profile: f64 = 0.0;
    for d in 1..=3 {
        let pair = solve(&ControlFamily::pucci_minimal(1.0, d).unwrap());
        worst_alpha = worst_alpha.max((pair.alpha - d as f64 / 2.0).abs());
        worst_profile = worst_profile.max(profile_error(&pair, |r| (-r * r / 4.0).exp()));
    }
    outcome(
        worst_alpha <= 1e-6 && worst_profile <= 1e-6,
        format!("max |alpha - d/2| = {worst_alpha:.1e}, profile sup error {worst_profile:.1e}"),
    )
}

fn c2() -> Outcome {
    let mut worst_alpha: f64 = 0.0;
    let mut worst_profile: f64 = 0.0;
    for lambda in [0.3, 0.7, 1.0] {
        for d in [2, 3] {
            let pair = solve(&ControlFamily::fixed_norm(lambda, d).unwrap());
            worst_alpha = worst_alpha.max((pair.alpha - 0.5).abs());
            worst_profile = worst_profile.max(profile_error(&pair, |r| (-r * r / (2.0 * lambda)).exp()));
        }
    }
    outcome(
        worst_alpha <= 1e-6 && worst_profile <= 1e-6,
        format!("max |alpha - 1/2| = {worst_alpha:.1e}, profile sup error {worst_profile:.1e}"),
    )
}

/// Smallest distance to the nearer bound over `lambda < 1`, and whether
/// every row lies inside its bounds (up to `TOL` at `lambda = 1`).
fn bound_margins(rows: &[(f64, f64, f64, f64)]) -> (bool, f64) {
    let mut inside = true;
    let mut margin = f64::INFINITY;
    for &(lambda, alpha, lo, hi) in rows {
        inside &= lo - TOL <= alpha && alpha <= hi + TOL;
        if lambda < 1.0 {
            margin = margin.min(alpha - lo).min(hi - alpha);
        }
    }
    (inside, margin)
}

fn c3() -> Outcome {
    let mut families = Vec::new();
    for d in 1..=3 {
        for &l in &lambda_grid() {
            families.push(ControlFamily::pucci_minimal(l, d).unwrap());
        }
    }
    let pairs = solve_all(&families);
    let rows: Vec<_> = families
        .iter()
        .zip(&pairs)
        .map(|(f, p)| {
            let ControlFamily::PucciMinimal { lambda, dim } = *f else { unreachable!() };
            let d = dim as f64;
            (lambda, p.alpha, d * lambda / 2.0, (d - 1.0) * lambda / 2.0 + 0.5)
        })
        .collect();
    let (inside, margin) = bound_margins(&rows);
    outcome(inside && margin >= 1e-4, format!("{} solves inside the bounds, strict margin {margin:.2e}", rows.len()))
}

fn c4() -> Outcome {
    let mut min_families = Vec::new();
    let mut max_families = Vec::new();
    for d in 1..=3 {
        for &l in &lambda_grid() {
            min_families.push(ControlFamily::pucci_minimal(l, d).unwrap());
            max_families.push(ControlFamily::pucci_maximal(l, d).unwrap());
        }
    }
    let mins = solve_all(&min_families);
    let maxs = solve_all(&max_families);
    let mut rows = Vec::new();
    let mut separated = true;
    for ((f, lo_pair), hi_pair) in max_families.iter().zip(&mins).zip(&maxs) {
        let ControlFamily::PucciMaximal { lambda, dim } = *f else { unreachable!() };
        let d = dim as f64;
        rows.push((lambda, hi_pair.alpha, (d - 1.0) / (2.0 * lambda) + 0.5, d / (2.0 * lambda)));
        if lambda < 1.0 {
            separated &= lo_pair.alpha < d / 2.0 && d / 2.0 < hi_pair.alpha;
        }
    }
    let (inside, margin) = bound_margins(&rows);
    outcome(
        inside && separated,
        format!("maximal operator inside its bounds: {inside} (margin {margin:.2e}); alpha(F-) < d/2 < alpha(F+): {separated}"),
    )
}

fn c5() -> Outcome {
    let lambdas = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let families: Vec<_> = lambdas.iter().map(|&l| ControlFamily::pucci_minimal(l, 2).unwrap()).collect();
    let alphas: Vec<f64> = solve_all(&families).iter().map(|p| p.alpha).collect();
    let slope = log_log_slope(&lambdas.iter().copied().zip(alphas.iter().copied()).collect::<Vec<_>>());
    let rows = par::lambda_scan_par(2, &lambdas, &ScanOptions::default()).expect("certificates exist");
    let bracketed = rows.iter().zip(&alphas).all(|(r, &a)| r.lower.beta <= a && a <= r.upper.beta);
    let slope_ok = (0.20..=0.30).contains(&slope);
    let brackets: Vec<String> = rows
        .iter()
        .zip(&alphas)
        .map(|(r, a)| format!("{:.0e}: {:.4} <= {a:.4} <= {:.4}", r.lambda, r.lower.beta, r.upper.beta))
        .collect();
    outcome(
        slope_ok && bracketed,
        format!(
            "slope {slope:.3} {} [0.20, 0.30]; brackets contain solver alpha: {bracketed} ({})",
            if slope_ok { "in" } else { "NOT in" },
            brackets.join(", ")
        ),
    )
}

/// Origin series of a sup-mode run plus the worst Azuma ratio over every
/// grid after the first step.
fn sup_run(family: &FiniteFamily, h: f64, n_max: usize) -> (Vec<(usize, f64)>, f64) {
    let lattice = Lattice::new(1, h).unwrap();
    let bound = family.max_step();
    let mut worst: f64 = 0.0;
    let result = par::run_dp_par(&lattice, 1.0, family, &DpOptions::new(Mode::Sup, n_max), |g| {
        if g.step() > 0 {
            worst = worst.max(azuma_check(g, 1.0, bound));
        }
    })
    .expect("dp runs");
    (result.series, worst)
}

fn c6(azuma: &mut Vec<f64>) -> Outcome {
    let (series, worst) = sup_run(&walk_1d(), 1.0, 4096);
    azuma.push(worst);
    let (alpha, _) = fit_exponent(&series, 256, 4096).unwrap();
    // Only S_2m = 0 lies in the closed unit ball at even times.
    let mut central = 1.0;
    let mut worst_gap: f64 = 0.0;
    for m in 1..=2048 {
        central *= (2 * m - 1) as f64 / (2 * m) as f64;
        worst_gap = worst_gap.max((series[2 * m].1 - central).abs());
    }
    outcome(
        (alpha - 0.5).abs() <= 0.03 && worst_gap <= 1e-12,
        format!("alpha_hat = {alpha:.4}, max |w(0,2m) - C(2m,m)/4^m| = {worst_gap:.1e}"),
    )
}

fn c7(azuma: &mut Vec<f64>) -> Outcome {
    let family = two_speed_1d();
    let (series, worst) = sup_run(&family, 0.125, 4096);
    azuma.push(worst);
    let (alpha_hat, _) = fit_exponent(&series, 256, 4096).unwrap();
    let solver = solve(&rotational_equivalent(&family).unwrap()).alpha;
    outcome(
        alpha_hat <= 0.48 && (alpha_hat - solver).abs() <= 0.05,
        format!("alpha_hat = {alpha_hat:.4}, solver alpha = {solver:.4}"),
    )
}

fn random_box(rng: &mut ChaCha8Rng, lattice: &Lattice, scale: impl Fn(&mut ChaCha8Rng) -> f64) -> ValueGrid {
    let dim = lattice.dim();
    let k = 1 + (rng.next_u64() % 6) as i64;
    ValueGrid::from_fn(lattice, 0, vec![-k; dim], vec![(2 * k + 1) as usize; dim], |_| scale(rng)).unwrap()
}

fn c8() -> Outcome {
    let families = [(walk_1d(), 1.0), (two_speed_1d(), 0.125), (fixed_norm_cross(), 0.5), (two_speed_2d(), 0.5)];
    let mut rng = trial_rng(8, 0);
    let mut violations = 0usize;
    for pair in 0..100 {
        let (family, h) = &families[pair % families.len()];
        let mode = if pair % 2 == 0 { Mode::Sup } else { Mode::Inf };
        let lattice = Lattice::new(family.dim(), *h).unwrap();
        let mut upper = random_box(&mut rng, &lattice, |r| uniform(r, 0.0, 1.0));
        let mut lower = ValueGrid::from_fn(&lattice, 0, upper.lo().to_vec(), upper.shape().to_vec(), |idx| {
            upper.get(idx) * uniform(&mut rng, 0.0, 1.0)
        })
        .unwrap();
        for _ in 0..20 {
            upper = dp_step(&upper, family, mode).unwrap();
            lower = dp_step(&lower, family, mode).unwrap();
            violations += lower.iter().filter(|(idx, u)| *u > upper.get(idx)).count();
        }
    }
    outcome(violations == 0, format!("100 pairs x 20 steps, {violations} ordering violations"))
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
    SymMatrix::from_upper(dim, |_, _| uniform(rng, -1.0, 1.0))
}

fn c9() -> Outcome {
    let families = [
        walk_1d(),
        two_speed_1d(),
        fixed_norm_cross(),
        two_speed_2d(),
        FiniteFamily::new(vec![
            DiscreteMeasure::axis_cross(3, 1.0, 3.0).unwrap(),
            DiscreteMeasure::symmetric_pair(&[1.0, 1.0, 0.0], 3.0).unwrap(),
        ])
        .unwrap(),
    ];
    let mut rng = trial_rng(9, 0);
    let mut worst: f64 = 0.0;
    for family in &families {
        let dim = family.dim();
        let control = ControlFamily::Finite(family.clone());
        for k in 0..100 {
            let m = random_sym(&mut rng, dim);
            let b: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let c = uniform(&mut rng, -1.0, 1.0);
            let x: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let phi = |y: &[f64]| 0.5 * m.quad_form(y) + b.iter().zip(y).map(|(bi, yi)| bi * yi).sum::<f64>() + c;
            let mode = if k % 2 == 0 { Mode::Sup } else { Mode::Inf };
            let fd = op_apply(&control, &phi, &x, mode).unwrap();
            let exact = op_matrix(&control, &m, mode).unwrap();
            worst = worst.max((fd - exact).abs());
        }
    }
    outcome(worst <= 1e-12, format!("500 quadratics, max |op_apply - op_matrix| = {worst:.1e}"))
}

fn c10(azuma: &[f64]) -> Outcome {
    let worst = azuma.iter().copied().fold(0.0, f64::max);
    outcome(worst <= 1.0, format!("worst ratio {worst:.4} over every sup grid of criteria 6 and 7"))
}

fn c11() -> Outcome {
    let family = fixed_norm_cross();
    let delta = 1.0;
    let start = [3.0, 3.0];
    let n = 200;
    let strategy = Strategy::tangential(2).unwrap();
    let est = par::estimate_hit_par(&family, &strategy, n, &start, delta, 100_000, 11).unwrap();

    let lattice = Lattice::new(2, 0.5).unwrap();
    let far = 2.0 * 2f64.sqrt() * delta;
    let mut nonzero_far = 0usize;
    let mut at_start = 0.0f64;
    par::run_dp_par(&lattice, delta, &family, &DpOptions::new(Mode::Inf, n), |g| {
        at_start = at_start.max(g.value_at(&start));
        if g.step() > 0 {
            nonzero_far += g
                .iter()
                .filter(|(idx, v)| *v > 0.0 && lattice.point(idx).iter().map(|x| x * x).sum::<f64>().sqrt() > far)
                .count();
        }
    })
    .unwrap();
    outcome(
        est.hits == 0 && nonzero_far == 0 && at_start == 0.0,
        format!(
            "{} hits in {} trials; inf-mode v nonzero at {nonzero_far} lattice points beyond 2 sqrt(2) delta, v(start) = {at_start}",
            est.hits, est.trials
        ),
    )
}

fn c12() -> Outcome {
    let two_speed = FiniteFamily::new(vec![
        DiscreteMeasure::symmetric_pair(&[1.0], 2f64.sqrt()).unwrap(),
        DiscreteMeasure::symmetric_pair(&[0.5], 2f64.sqrt()).unwrap(),
    ])
    .unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for family in [two_speed, two_speed_2d()] {
        let d = family.dim();
        let report = verify_psi_lemma(&family, 1.0, &PsiGrid::standard(d), Mode::Sup, 1.0).unwrap();
        let ok = report.holds && report.min_passing_t.is_some_and(|t| t <= 1e3);
        pass &= ok;
        details.push(format!(
            "d={d}: c = {:?}, C = {:?}, holds from t = {:?}",
            report.c.map(|c| (c * 1e4).round() / 1e4),
            report.big_c,
            report.min_passing_t
        ));
    }
    outcome(pass, details.join("; "))
}

fn main() {
    let threads = par::threads_from_env().expect("CTRLMART_THREADS");
    let mut azuma = Vec::new();
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("analytic eigenvalue at lambda = 1", Duration::from_secs(10), Box::new(|_| c1())),
        ("fixed-norm exact case", Duration::from_secs(10), Box::new(|_| c2())),
        ("classical bounds for the minimal operator", Duration::from_secs(120), Box::new(|_| c3())),
        ("dual bounds for the maximal operator", Duration::from_secs(120), Box::new(|_| c4())),
        ("lambda^(1/4) scaling and certificate brackets", Duration::from_secs(600), Box::new(|_| c5())),
        ("simple random walk decay", Duration::from_secs(60), Box::new(c6)),
        ("controlled slowdown", Duration::from_secs(300), Box::new(c7)),
        ("comparison principle", Duration::from_secs(60), Box::new(|_| c8())),
        ("quadratic consistency", Duration::from_secs(5), Box::new(|_| c9())),
        ("Azuma envelope", Duration::from_secs(60), Box::new(|a| c10(a))),
        ("tangential vanishing", Duration::from_secs(60), Box::new(|_| c11())),
        ("Psi barrier constants", Duration::from_secs(120), Box::new(|_| c12())),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.into_iter().enumerate() {
        let clock = Instant::now();
        let result = par::with_threads(threads, || run(&mut azuma)).expect("thread pool");
        let elapsed = clock.elapsed();
        let pass = result.pass && elapsed <= budget;
        failures += usize::from(!pass);
        println!(
            "criterion {:>2}: {} {name}: {} [{:.2}s of {}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
