//! Control families and the extremal operators they induce.
//!
//! For a family `P` of centered step laws, the concave operator is
//!
//! ```text
//! F-[phi](x) = phi(x) - sup_{rho in P} E_rho[phi(x + X)]
//! F-(M)      = -1/2 sup_{rho in P} E_rho[X . M X]
//! ```
//!
//! and `F+` replaces the supremum by an infimum. The matrix form has closed
//! expressions for the Pucci and fixed-norm families; finite families are
//! evaluated atom by atom.

mod family;
mod matrix;
mod measure;
mod parse;

use alloc::vec::Vec;

pub use family::{ControlFamily, FiniteFamily, Mode};
pub use matrix::SymMatrix;
pub use measure::{Atom, DiscreteMeasure};
pub use parse::{format_family, parse_family};

use crate::error::{Error, Result};

/// Eigenvalues this close to zero count as zero in the closed forms.
pub const ZERO_EIGEN_TOL: f64 = 1e-12;

/// `1/2 E[X X^T]` of a single control.
pub fn second_moment(measure: &DiscreteMeasure) -> SymMatrix {
    measure.second_moment()
}

/// Pucci weight: identity on positive arguments, `lambda * s` otherwise.
#[inline]
pub fn pucci_theta(lambda: f64, s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        lambda * s
    }
}

/// Sums of the positive and negative parts of a spectrum, ignoring values
/// within [`ZERO_EIGEN_TOL`] of zero.
fn signed_sums(eigs: &[f64]) -> (f64, f64) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &e in eigs {
        if e > ZERO_EIGEN_TOL {
            pos += e;
        } else if e < -ZERO_EIGEN_TOL {
            neg += e;
        }
    }
    (pos, neg)
}

/// Matrix form of the operator induced by `family`.
///
/// `mode` only matters for [`ControlFamily::Finite`]; the continuum variants
/// already name their operator (`PucciMinimal` is `F-`, `PucciMaximal` is
/// `F+`, `FixedNorm` is `F-`).
pub fn op_matrix(family: &ControlFamily, m: &SymMatrix, mode: Mode) -> Result<f64> {
    family::check_matrix(family, m)?;
    Ok(match family {
        ControlFamily::PucciMinimal { lambda, .. } => {
            let (pos, neg) = signed_sums(&m.eigenvalues());
            -pos - lambda * neg
        }
        ControlFamily::PucciMaximal { lambda, .. } => {
            let (pos, neg) = signed_sums(&m.eigenvalues());
            -lambda * pos - neg
        }
        ControlFamily::FixedNorm { lambda, .. } => {
            let ev = m.eigenvalues();
            let top = ev[ev.len() - 1];
            let top = if top.abs() <= ZERO_EIGEN_TOL { 0.0 } else { top };
            -0.5 * lambda * top
        }
        ControlFamily::Finite(f) => {
            let mut best = f.measures()[0].expected_quad(m);
            for mu in &f.measures()[1..] {
                best = mode.pick(best, mu.expected_quad(m));
            }
            -0.5 * best
        }
    })
}

/// Finite-difference form `phi(x) - ext_rho E_rho[phi(x + X)]`.
pub fn op_apply<F: Fn(&[f64]) -> f64>(
    family: &ControlFamily,
    phi: &F,
    x: &[f64],
    mode: Mode,
) -> Result<f64> {
    let f = family.as_finite().ok_or_else(|| {
        Error::UnsupportedFamily("finite-difference evaluation needs a finite family".into())
    })?;
    finite_op_apply(f, phi, x, mode)
}

pub fn finite_op_apply<F: Fn(&[f64]) -> f64>(
    family: &FiniteFamily,
    phi: &F,
    x: &[f64],
    mode: Mode,
) -> Result<f64> {
    if x.len() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: x.len() });
    }
    let measures = family.measures();
    if measures.is_empty() {
        return Err(Error::InvalidMeasure("control family is empty".into()));
    }
    let mut scratch = Vec::with_capacity(x.len());
    let mut best = measures[0].expect_at(phi, x, &mut scratch);
    for mu in &measures[1..] {
        best = mode.pick(best, mu.expect_at(phi, x, &mut scratch));
    }
    Ok(phi(x) - best)
}
