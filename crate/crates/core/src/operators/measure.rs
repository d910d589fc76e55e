use alloc::format;
use alloc::vec::Vec;

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::math::{norm, sqrt};

pub const WEIGHT_SUM_TOL: f64 = 1e-12;
pub const CENTERING_TOL: f64 = 1e-12;
pub const MIN_WEIGHT: f64 = 1e-15;

/// One support point of a discrete step law.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: Vec<f64>, weight: f64) -> Self {
        Atom { point, weight }
    }
}

/// Centered probability measure with finitely many atoms inside the closed
/// ball of radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    radius: f64,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, radius: f64, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        let min_radius = sqrt(2.0 * dim as f64);
        if !(radius.is_finite() && radius >= min_radius - 1e-12) {
            return Err(Error::InvalidMeasure(format!(
                "radius bound {radius} is below sqrt(2d) = {min_radius}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        let mut total = 0.0;
        let mut mean = alloc::vec![0.0; dim];
        for (k, atom) in atoms.iter().enumerate() {
            if atom.point.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: atom.point.len() });
            }
            if !(atom.weight.is_finite() && atom.weight >= MIN_WEIGHT && atom.weight <= 1.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k} has weight {} outside [1e-15, 1]",
                    atom.weight
                )));
            }
            if atom.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {k} is not finite")));
            }
            let r = norm(&atom.point);
            if r > radius + 1e-12 {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k} has norm {r} beyond the radius bound {radius}"
                )));
            }
            total += atom.weight;
            for (m, x) in mean.iter_mut().zip(&atom.point) {
                *m += atom.weight * x;
            }
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let drift = norm(&mean);
        if drift > CENTERING_TOL {
            return Err(Error::InvalidMeasure(format!("measure is not centered: |mean| = {drift:e}")));
        }
        Ok(DiscreteMeasure { dim, radius, atoms })
    }

    /// `1/2 (delta_v + delta_{-v})`.
    pub fn symmetric_pair(v: &[f64], radius: f64) -> Result<Self> {
        let minus = v.iter().map(|x| -x).collect();
        Self::new(v.len(), radius, alloc::vec![Atom::new(v.to_vec(), 0.5), Atom::new(minus, 0.5)])
    }

    /// Uniform law on `{+-s e_i}` over the coordinate axes.
    pub fn axis_cross(dim: usize, step: f64, radius: f64) -> Result<Self> {
        let w = 1.0 / (2 * dim) as f64;
        let mut atoms = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut p = alloc::vec![0.0; dim];
                p[i] = sign * step;
                atoms.push(Atom::new(p, w));
            }
        }
        Self::new(dim, radius, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Largest atom norm.
    pub fn max_step(&self) -> f64 {
        self.atoms.iter().map(|a| norm(&a.point)).fold(0.0, f64::max)
    }

    /// `1/2 E[X X^T]`.
    pub fn second_moment(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        for atom in &self.atoms {
            m.add_outer(&atom.point, 0.5 * atom.weight);
        }
        m
    }

    /// `E[X . M X]`, summed atom by atom.
    pub fn expected_quad(&self, m: &SymMatrix) -> f64 {
        self.atoms.iter().map(|a| a.weight * m.quad_form(&a.point)).sum()
    }

    /// `E[phi(x + X)]`, reusing `scratch` for the shifted point.
    pub fn expect_at<F: Fn(&[f64]) -> f64>(&self, phi: &F, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let mut acc = 0.0;
        for atom in &self.atoms {
            scratch.clear();
            scratch.extend(x.iter().zip(&atom.point).map(|(a, b)| a + b));
            acc += atom.weight * phi(scratch);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const R1: f64 = 1.5;

    #[test]
    fn second_moment_of_fair_coin() {
        let mu = DiscreteMeasure::symmetric_pair(&[1.0], R1).unwrap();
        assert_eq!(mu.second_moment().entries(), &[0.5]);
    }

    #[test]
    fn second_moment_of_scaled_cross_is_half_identity() {
        let s = core::f64::consts::SQRT_2;
        let mu = DiscreteMeasure::axis_cross(2, s, 2.0).unwrap();
        let m = mu.second_moment();
        for (got, want) in m.entries().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn second_moment_of_diagonal_pair() {
        let mu = DiscreteMeasure::symmetric_pair(&[1.0, 1.0], 2.0).unwrap();
        assert_eq!(mu.second_moment().entries(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn rejects_uncentered() {
        let atoms = vec![Atom::new(vec![1.0], 0.5), Atom::new(vec![-0.5], 0.5)];
        assert!(matches!(DiscreteMeasure::new(1, R1, atoms), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn rejects_bad_weights_and_support() {
        let heavy = vec![Atom::new(vec![1.0], 0.6), Atom::new(vec![-1.0], 0.6)];
        assert!(DiscreteMeasure::new(1, R1, heavy).is_err());
        let tiny = vec![
            Atom::new(vec![1.0], 0.5),
            Atom::new(vec![-1.0], 0.5 - 1e-16),
            Atom::new(vec![0.0], 1e-16),
        ];
        assert!(DiscreteMeasure::new(1, R1, tiny).is_err());
        assert!(DiscreteMeasure::symmetric_pair(&[2.0], R1).is_err());
        assert!(DiscreteMeasure::symmetric_pair(&[1.0], 1.0).is_err());
    }
}
