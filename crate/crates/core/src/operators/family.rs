use alloc::format;
use alloc::vec::Vec;

use super::{DiscreteMeasure, SymMatrix};
use crate::error::{Error, Result};

/// Whether the controller maximizes or minimizes the hitting probability.
///
/// `Sup` pairs with the concave operator `F-`, `Inf` with the convex `F+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Sup,
    Inf,
}

impl Mode {
    #[inline]
    pub(crate) fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Mode::Sup => a.max(b),
            Mode::Inf => a.min(b),
        }
    }

    #[inline]
    pub(crate) fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Mode::Sup => candidate > incumbent,
            Mode::Inf => candidate < incumbent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sup => "sup",
            Mode::Inf => "inf",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" | "max" => Ok(Mode::Sup),
            "inf" | "min" => Ok(Mode::Inf),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Non-empty list of discrete step laws sharing a dimension and radius bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFamily {
    dim: usize,
    radius: f64,
    measures: Vec<DiscreteMeasure>,
}

impl FiniteFamily {
    pub fn new(measures: Vec<DiscreteMeasure>) -> Result<Self> {
        let first = measures
            .first()
            .ok_or_else(|| Error::InvalidMeasure("control family is empty".into()))?;
        let (dim, radius) = (first.dim(), first.radius());
        for (k, mu) in measures.iter().enumerate() {
            if mu.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: mu.dim() });
            }
            if mu.radius() != radius {
                return Err(Error::InvalidMeasure(format!(
                    "measure {k} has radius bound {} but the family uses {radius}",
                    mu.radius()
                )));
            }
        }
        Ok(FiniteFamily { dim, radius, measures })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Returns a family with one more control.
    pub fn with_measure(&self, mu: DiscreteMeasure) -> Result<Self> {
        let mut measures = self.measures.clone();
        measures.push(mu);
        Self::new(measures)
    }

    /// Largest step any control can take.
    pub fn max_step(&self) -> f64 {
        self.measures.iter().map(DiscreteMeasure::max_step).fold(0.0, f64::max)
    }

    /// Checks `lambda I <= 1/2 E[X X^T] <= I` for every control.
    pub fn check_ellipticity(&self, lambda: f64) -> Result<()> {
        for (k, mu) in self.measures.iter().enumerate() {
            let ev = mu.second_moment().eigenvalues();
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            if lo < lambda - 1e-12 || hi > 1.0 + 1e-12 {
                return Err(Error::InvalidMeasure(format!(
                    "measure {k} has second-moment spectrum [{lo}, {hi}] outside [{lambda}, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// A control set together with the operator it induces.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlFamily {
    /// All laws with `lambda I <= 1/2 E[XX^T] <= I`; induces the minimal Pucci operator.
    PucciMinimal { lambda: f64, dim: usize },
    /// Same control set, minimizing controller: the maximal Pucci operator.
    PucciMaximal { lambda: f64, dim: usize },
    /// Laws on the unit ball with `E|X|^2 = lambda`.
    FixedNorm { lambda: f64, dim: usize },
    Finite(FiniteFamily),
}

fn check_lambda(lambda: f64, dim: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} is not in (0, 1]")));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(())
}

impl ControlFamily {
    pub fn pucci_minimal(lambda: f64, dim: usize) -> Result<Self> {
        check_lambda(lambda, dim)?;
        Ok(ControlFamily::PucciMinimal { lambda, dim })
    }

    pub fn pucci_maximal(lambda: f64, dim: usize) -> Result<Self> {
        check_lambda(lambda, dim)?;
        Ok(ControlFamily::PucciMaximal { lambda, dim })
    }

    pub fn fixed_norm(lambda: f64, dim: usize) -> Result<Self> {
        check_lambda(lambda, dim)?;
        Ok(ControlFamily::FixedNorm { lambda, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlFamily::PucciMinimal { dim, .. }
            | ControlFamily::PucciMaximal { dim, .. }
            | ControlFamily::FixedNorm { dim, .. } => *dim,
            ControlFamily::Finite(f) => f.dim(),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            ControlFamily::PucciMinimal { lambda, .. }
            | ControlFamily::PucciMaximal { lambda, .. }
            | ControlFamily::FixedNorm { lambda, .. } => Some(*lambda),
            ControlFamily::Finite(_) => None,
        }
    }

    pub fn is_rotational(&self) -> bool {
        !matches!(self, ControlFamily::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&FiniteFamily> {
        match self {
            ControlFamily::Finite(f) => Some(f),
            _ => None,
        }
    }

    /// Short tag used in tables and file headers.
    pub fn kind(&self) -> &'static str {
        match self {
            ControlFamily::PucciMinimal { .. } => "pucci-min",
            ControlFamily::PucciMaximal { .. } => "pucci-max",
            ControlFamily::FixedNorm { .. } => "fixed-norm",
            ControlFamily::Finite(_) => "finite",
        }
    }
}

impl From<FiniteFamily> for ControlFamily {
    fn from(f: FiniteFamily) -> Self {
        ControlFamily::Finite(f)
    }
}

pub(crate) fn check_matrix(family: &ControlFamily, m: &SymMatrix) -> Result<()> {
    m.check_dim(family.dim())
}
