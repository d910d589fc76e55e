use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::eigensolver::EigenPair;
use crate::error::{Error, Result};
use crate::math::{exp, powf, sqrt};
use crate::operators::SymMatrix;

/// Direction of the time-dependent bending factor of [`TestFunction::BentProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Explicit positive test functions with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `exp(-a |x|^2)`.
    ScaledGaussian { a: f64 },
    /// `exp(-a |x|^2 / 2 - b (lambda + |x|^2)^(p/2))`.
    BentGaussian { a: f64, b: f64, p: f64, lambda: f64 },
    /// `t^-beta exp(-beta sqrt(1 + |x|^2 / t))`.
    Psi { beta: f64 },
    /// `exp(+-t^-theta / theta) Phi(x, t)` for a computed eigenpair.
    BentProfile { theta: f64, sign: Sign, pair: Box<EigenPair> },
}

/// Value and derivatives of a test function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TestEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
    /// Present for the time-dependent variants.
    pub time_derivative: Option<f64>,
}

/// Derivatives of `h(s)`, `s = |x|^2`, divided by `h`: `(h'/h, h''/h)`.
/// Any radial function is `value * exp(...)`, so the Hessian is
/// `2 h' I + 4 h'' x x^T`.
fn radial_eval(value: f64, d1: f64, d2: f64, x: &[f64]) -> (Vec<f64>, SymMatrix) {
    let gradient = x.iter().map(|xi| 2.0 * d1 * value * xi).collect();
    let mut hess = SymMatrix::identity(x.len()).scaled(2.0 * d1 * value);
    hess.add_outer(x, 4.0 * d2 * value);
    (gradient, hess)
}

impl TestFunction {
    pub fn scaled_gaussian(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("Gaussian rate a = {a} must be positive")));
        }
        Ok(TestFunction::ScaledGaussian { a })
    }

    pub fn bent_gaussian(a: f64, b: f64, p: f64, lambda: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0 && p > 0.0 && p < 1.0 && lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bent Gaussian needs a > 0, b >= 0, p in (0, 1), lambda in (0, 1]; got a = {a}, b = {b}, p = {p}, lambda = {lambda}"
            )));
        }
        Ok(TestFunction::BentGaussian { a, b, p, lambda })
    }

    pub fn psi(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
        }
        Ok(TestFunction::Psi { beta })
    }

    pub fn bent_profile(theta: f64, sign: Sign, pair: EigenPair) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta = {theta} must be positive")));
        }
        Ok(TestFunction::BentProfile { theta, sign, pair: Box::new(pair) })
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, TestFunction::Psi { .. } | TestFunction::BentProfile { .. })
    }

    /// `(h'/h, h''/h)` for the stationary radial variants, as functions of `s = |x|^2`.
    pub(crate) fn log_derivatives(&self, s: f64) -> Option<(f64, f64)> {
        match *self {
            TestFunction::ScaledGaussian { a } => Some((-a, a * a)),
            TestFunction::BentGaussian { a, b, p, lambda } => {
                let base = lambda + s;
                let d1 = 0.5 * a + 0.5 * b * p * powf(base, 0.5 * p - 1.0);
                let d2 = 0.5 * b * p * (0.5 * p - 1.0) * powf(base, 0.5 * p - 2.0);
                Some((-d1, d1 * d1 - d2))
            }
            _ => None,
        }
    }

    fn stationary_value(&self, s: f64) -> f64 {
        match *self {
            TestFunction::ScaledGaussian { a } => exp(-a * s),
            TestFunction::BentGaussian { a, b, p, lambda } => exp(-0.5 * a * s - b * powf(lambda + s, 0.5 * p)),
            _ => unreachable!("stationary variants only"),
        }
    }

    /// Value, gradient, Hessian and (for time-dependent variants) `d/dt`.
    pub fn eval(&self, x: &[f64], t: Option<f64>) -> Result<TestEval> {
        let s: f64 = x.iter().map(|v| v * v).sum();
        match self {
            TestFunction::ScaledGaussian { .. } | TestFunction::BentGaussian { .. } => {
                let value = self.stationary_value(s);
                let (d1, d2) = self.log_derivatives(s).expect("stationary");
                let (gradient, hessian) = radial_eval(value, d1, d2, x);
                Ok(TestEval { value, gradient, hessian, time_derivative: None })
            }
            TestFunction::Psi { beta } => {
                let t = require_time(t)?;
                let beta = *beta;
                let q = sqrt(1.0 + s / t);
                let value = powf(t, -beta) * exp(-beta * q);
                let d1 = -beta / (2.0 * t * q);
                let d2 = beta / (4.0 * t * t * q * q * q) + beta * beta / (4.0 * t * t * q * q);
                let (gradient, hessian) = radial_eval(value, d1, d2, x);
                let dt = -beta / t * value * (1.0 - s / (2.0 * t * q));
                Ok(TestEval { value, gradient, hessian, time_derivative: Some(dt) })
            }
            TestFunction::BentProfile { theta, sign, pair } => {
                let t = require_time(t)?;
                let dim = pair.profile.family.dim();
                if x.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: x.len() });
                }
                let root = sqrt(t);
                let norm = sqrt(s);
                let r = norm / root;
                let [g, gp, gpp] = pair.profile.eval(r)?;
                let bend = exp(sign.factor() * powf(t, -theta) / theta);
                let amp = bend * powf(t, -pair.alpha);
                let value = amp * g;
                let (gradient, hessian) = if norm > 0.0 {
                    let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
                    let gradient = unit.iter().map(|u| amp * gp / root * u).collect();
                    let tangential = gp / r;
                    let mut h = SymMatrix::identity(dim).scaled(amp * tangential / t);
                    h.add_outer(&unit, amp * (gpp - tangential) / t);
                    (gradient, h)
                } else {
                    (alloc::vec![0.0; dim], SymMatrix::identity(dim).scaled(amp * gpp / t))
                };
                let phi_t = -pair.alpha / t * g - 0.5 * r / t * gp;
                let dt = amp * (phi_t - sign.factor() * powf(t, -theta - 1.0) * g);
                Ok(TestEval { value, gradient, hessian, time_derivative: Some(dt) })
            }
        }
    }

    /// Value only; cheaper than [`TestFunction::eval`].
    pub fn value(&self, x: &[f64], t: Option<f64>) -> Result<f64> {
        let s: f64 = x.iter().map(|v| v * v).sum();
        match self {
            TestFunction::ScaledGaussian { .. } | TestFunction::BentGaussian { .. } => Ok(self.stationary_value(s)),
            TestFunction::Psi { beta } => {
                let t = require_time(t)?;
                Ok(powf(t, -beta) * exp(-beta * sqrt(1.0 + s / t)))
            }
            TestFunction::BentProfile { theta, sign, pair } => {
                let t = require_time(t)?;
                let g = pair.profile.value(sqrt(s / t))?;
                Ok(exp(sign.factor() * powf(t, -theta) / theta) * powf(t, -pair.alpha) * g)
            }
        }
    }
}

fn require_time(t: Option<f64>) -> Result<f64> {
    match t {
        Some(t) if t > 0.0 => Ok(t),
        Some(t) => Err(Error::InvalidParameter(format!("t = {t} must be positive"))),
        None => Err(Error::InvalidParameter("this test function needs a time argument".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_alpha, ShootOptions};
    use crate::ControlFamily;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let e = TestFunction::scaled_gaussian(0.25).unwrap().eval(&[0.0, 0.0], None).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
        assert_eq!(e.hessian, SymMatrix::identity(2).scaled(-0.5));

        let e = TestFunction::bent_gaussian(1.0, 0.0, 0.5, 0.3).unwrap().eval(&[1.0, 0.0], None).unwrap();
        let want = SymMatrix::diag(&[0.0, -1.0]).scaled(exp(-0.5));
        assert!(e.hessian.sub(&want).unwrap().norm() < 1e-15);

        let e = TestFunction::psi(1.0).unwrap().eval(&[0.0], Some(1.0)).unwrap();
        assert!((e.value - exp(-1.0)).abs() < 1e-16);
        assert!((e.time_derivative.unwrap() + exp(-1.0)).abs() < 1e-16);
        assert!(TestFunction::psi(1.0).unwrap().eval(&[0.0], None).is_err());
    }

    fn fd_check(f: &TestFunction, x: &[f64], t: Option<f64>) {
        let h = 1e-5;
        let e = f.eval(x, t).unwrap();
        let scale = e.value.abs().max(1e-300);
        let d = x.len();
        for i in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let g_fd = (f.value(&xp, t).unwrap() - f.value(&xm, t).unwrap()) / (2.0 * h);
            assert!((g_fd - e.gradient[i]).abs() <= 1e-6 * scale, "gradient {i}: {g_fd} vs {}", e.gradient[i]);
            let ep = f.eval(&xp, t).unwrap();
            let em = f.eval(&xm, t).unwrap();
            for j in 0..d {
                let h_fd = (ep.gradient[j] - em.gradient[j]) / (2.0 * h);
                assert!((h_fd - e.hessian.get(i, j)).abs() <= 1e-6 * scale, "hessian ({i},{j})");
            }
        }
        if let Some(dt) = e.time_derivative {
            let t = t.unwrap();
            let ht = 1e-5 * t;
            let dt_fd = (f.value(x, Some(t + ht)).unwrap() - f.value(x, Some(t - ht)).unwrap()) / (2.0 * ht);
            assert!((dt_fd - dt).abs() <= 1e-6 * scale / t, "time derivative {dt_fd} vs {dt}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn stationary_derivatives(x in proptest::collection::vec(-3.0f64..3.0, 1..4),
                                  a in 0.1f64..2.0, b in 0.0f64..3.0, p in 0.05f64..0.95, lambda in 0.01f64..1.0) {
            fd_check(&TestFunction::scaled_gaussian(a / 2.0).unwrap(), &x, None);
            fd_check(&TestFunction::bent_gaussian(a, b, p, lambda).unwrap(), &x, None);
        }

        #[test]
        fn psi_derivatives(x in proptest::collection::vec(-20.0f64..20.0, 1..4), beta in 0.2f64..3.0, t in 1.0f64..100.0) {
            fd_check(&TestFunction::psi(beta).unwrap(), &x, Some(t));
        }
    }

    #[test]
    fn bent_profile_derivatives() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let pair = solve_alpha(&ControlFamily::pucci_minimal(0.5, 2).unwrap(), 1e-8, &ShootOptions::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        for sign in [Sign::Plus, Sign::Minus] {
            let f = TestFunction::bent_profile(0.25, sign, pair.clone()).unwrap();
            for _ in 0..100 {
                let t = 1.0 + 20.0 * unit();
                let x = [4.0 * (unit() - 0.5) * sqrt(t), 4.0 * (unit() - 0.5) * sqrt(t)];
                fd_check(&f, &x, Some(t));
            }
        }
    }
}
