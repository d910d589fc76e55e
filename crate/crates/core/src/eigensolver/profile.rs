use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::operators::ControlFamily;

/// Radial slice `g(r) = Phi(r e, 1)` sampled on an increasing grid from 0.
///
/// Between nodes the profile is the quintic Hermite interpolant of
/// `(g, g', g'')`, so first and second derivatives are available everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub family: ControlFamily,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    pub g_second: Vec<f64>,
    /// Gaussian envelope on the outer half of the range, when one fits.
    pub decay: Option<GaussianDecay>,
}

/// `g(r) <= k * exp(-a r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDecay {
    pub k: f64,
    pub a: f64,
}

const H0: [f64; 6] = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];
const H1: [f64; 6] = [0.0, 1.0, 0.0, -6.0, 8.0, -3.0];
const H2: [f64; 6] = [0.0, 0.0, 0.5, -1.5, 1.5, -0.5];
const H3: [f64; 6] = [0.0, 0.0, 0.0, 0.5, -1.0, 0.5];
const H4: [f64; 6] = [0.0, 0.0, 0.0, -4.0, 7.0, -3.0];
const H5: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

/// Value, first and second derivative of the quintic Hermite interpolant on
/// `[r0, r0 + h]` at relative position `t`.
pub(crate) fn hermite5(left: [f64; 3], right: [f64; 3], h: f64, t: f64) -> [f64; 3] {
    let w = [left[0], h * left[1], h * h * left[2], h * h * right[2], h * right[1], right[0]];
    let basis = [H0, H1, H2, H3, H4, H5];
    let mut c = [0.0; 6];
    for (wk, b) in w.iter().zip(basis.iter()) {
        for k in 0..6 {
            c[k] += wk * b[k];
        }
    }
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for k in (0..6).rev() {
        p = p * t + c[k];
    }
    for k in (1..6).rev() {
        dp = dp * t + k as f64 * c[k];
    }
    for k in (2..6).rev() {
        ddp = ddp * t + (k * (k - 1)) as f64 * c[k];
    }
    [p, dp / h, ddp / (h * h)]
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Largest radius covered by the profile.
    pub fn r_max(&self) -> f64 {
        self.r.last().copied().unwrap_or(0.0)
    }

    /// `(g, g', g'')` at radius `r`.
    pub fn eval(&self, r: f64) -> Result<[f64; 3]> {
        let max = self.r_max();
        if !(0.0..=max).contains(&r) {
            return Err(Error::OutOfRange { radius: r, max });
        }
        let i = match self.r.binary_search_by(|p| p.total_cmp(&r)) {
            Ok(i) => return Ok([self.g[i], self.g_prime[i], self.g_second[i]]),
            Err(i) => i - 1,
        };
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        Ok(hermite5(self.node(i), self.node(i + 1), h, t))
    }

    /// Interpolated `g(r)`.
    pub fn value(&self, r: f64) -> Result<f64> {
        self.eval(r).map(|v| v[0])
    }

    fn node(&self, i: usize) -> [f64; 3] {
        [self.g[i], self.g_prime[i], self.g_second[i]]
    }

    /// Number of sign changes of `g''` along the grid.
    pub fn curvature_sign_changes(&self) -> usize {
        let mut changes = 0;
        let mut last = 0.0f64;
        for &s in &self.g_second {
            if s != 0.0 {
                if last != 0.0 && (s > 0.0) != (last > 0.0) {
                    changes += 1;
                }
                last = s;
            }
        }
        changes
    }

    /// Fits `g <= K exp(-a r^2)` on the outer half of the range.
    pub(crate) fn fit_decay(&self) -> Result<GaussianDecay> {
        let r_top = self.r_max();
        let pts: Vec<(f64, f64)> = self
            .r
            .iter()
            .zip(&self.g)
            .filter(|(r, g)| **r >= 0.5 * r_top && **g > 0.0)
            .map(|(r, g)| (r * r, ln(*g)))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Fit("too few profile nodes for the decay fit".into()));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (slope, _) = crate::value_dp::least_squares_slope(&xs, &ys);
        let a = -slope;
        if !(a > 0.0) {
            return Err(Error::Fit(alloc::format!("profile tail is not decaying (a = {a})")));
        }
        let log_k = pts.iter().map(|(r2, lg)| lg + a * r2).fold(f64::NEG_INFINITY, f64::max);
        Ok(GaussianDecay { k: exp(log_k), a })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintics() {
        let f = |x: f64| [1.0 - 2.0 * x + x.powi(5), -2.0 + 5.0 * x.powi(4), 20.0 * x.powi(3)];
        let (a, b) = (0.3, 0.55);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let got = hermite5(f(a), f(b), b - a, t);
            let want = f(a + t * (b - a));
            for j in 0..3 {
                assert!((got[j] - want[j]).abs() < 1e-12, "t = {t}, j = {j}");
            }
        }
    }
}
