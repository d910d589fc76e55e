use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, floor, round, sqrt};

/// Values below this are dropped when a grid is trimmed.
pub const DROP_BELOW: f64 = 1e-300;

/// Slack for points on the boundary of the closed target ball.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Cubic lattice `h Z^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    dim: usize,
    spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, spacing: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("lattice dimension must be positive".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("lattice spacing {spacing} must be positive")));
        }
        Ok(Lattice { dim, spacing })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Integer coordinates of `x`, if it lies on the lattice within `1e-12`.
    pub fn index_of(&self, x: &[f64]) -> Option<Vec<i64>> {
        if x.len() != self.dim {
            return None;
        }
        x.iter()
            .map(|&c| {
                let k = round(c / self.spacing);
                ((c - k * self.spacing).abs() <= 1e-12).then_some(k as i64)
            })
            .collect()
    }

    pub fn point(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().map(|&k| k as f64 * self.spacing).collect()
    }
}

/// Value function at one time step, stored densely on a bounding box of the
/// lattice. Points outside the box carry value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    step: usize,
    spacing: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl ValueGrid {
    /// Grid on the box `lo .. lo + shape` filled from `f(index)`.
    pub fn from_fn(
        lattice: &Lattice,
        step: usize,
        lo: Vec<i64>,
        shape: Vec<usize>,
        mut f: impl FnMut(&[i64]) -> f64,
    ) -> Result<Self> {
        if lo.len() != lattice.dim() || shape.len() != lattice.dim() {
            return Err(Error::DimensionMismatch { expected: lattice.dim(), found: lo.len() });
        }
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = lo.clone();
        for _ in 0..total {
            let v = f(&idx);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(alloc::format!("grid value {v} outside [0, 1]")));
            }
            values.push(v);
            advance(&mut idx, &lo, &shape);
        }
        Ok(ValueGrid { step, spacing: lattice.spacing(), lo, shape, values })
    }

    pub(crate) fn from_parts(step: usize, spacing: f64, lo: Vec<i64>, shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.iter().product::<usize>());
        ValueGrid { step, spacing, lo, shape, values }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { dim: self.dim(), spacing: self.spacing }
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    /// Value at an integer lattice index.
    pub fn get(&self, idx: &[i64]) -> f64 {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for k in (0..self.dim()).rev() {
            let rel = idx[k] - self.lo[k];
            if rel < 0 || rel as usize >= self.shape[k] {
                return 0.0;
            }
            flat += rel as usize * stride;
            stride *= self.shape[k];
        }
        self.values[flat]
    }

    /// Value at a real point; points off the lattice carry value 0.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self.lattice().index_of(x) {
            Some(idx) => self.get(&idx),
            None => 0.0,
        }
    }

    /// Iterates `(index, value)` over every stored point.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        let mut idx = self.lo.clone();
        self.values.iter().map(move |&v| {
            let here = idx.clone();
            advance(&mut idx, &self.lo, &self.shape);
            (here, v)
        })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|x|` over points with positive value.
    pub fn support_radius(&self) -> f64 {
        self.iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(idx, _)| {
                let r2: f64 = idx.iter().map(|&k| (k as f64 * self.spacing) * (k as f64 * self.spacing)).sum();
                sqrt(r2)
            })
            .fold(0.0, f64::max)
    }

    /// Multiplies every value by `c` in `[0, 1]`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v *= c);
        g
    }

    /// Zeroes values below [`DROP_BELOW`] and shrinks the box to the rest.
    pub fn trim(&mut self) {
        let d = self.dim();
        let mut min_rel = vec![usize::MAX; d];
        let mut max_rel = vec![0usize; d];
        let mut rel = vec![0usize; d];
        let mut any = false;
        for v in self.values.iter_mut() {
            if *v < DROP_BELOW {
                *v = 0.0;
            } else {
                any = true;
                for k in 0..d {
                    min_rel[k] = min_rel[k].min(rel[k]);
                    max_rel[k] = max_rel[k].max(rel[k]);
                }
            }
            for k in (0..d).rev() {
                rel[k] += 1;
                if rel[k] < self.shape[k] {
                    break;
                }
                rel[k] = 0;
            }
        }
        if !any {
            self.lo = vec![0; d];
            self.shape = vec![0; d];
            self.values.clear();
            return;
        }
        if (0..d).all(|k| min_rel[k] == 0 && max_rel[k] + 1 == self.shape[k]) {
            return;
        }
        let new_shape: Vec<usize> = (0..d).map(|k| max_rel[k] - min_rel[k] + 1).collect();
        let new_lo: Vec<i64> = (0..d).map(|k| self.lo[k] + min_rel[k] as i64).collect();
        let old = core::mem::take(&mut self.values);
        let old_strides = strides(&self.shape);
        let total: usize = new_shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut r = vec![0usize; d];
        for _ in 0..total {
            let flat: usize = (0..d).map(|k| (r[k] + min_rel[k]) * old_strides[k]).sum();
            values.push(old[flat]);
            for k in (0..d).rev() {
                r[k] += 1;
                if r[k] < new_shape[k] {
                    break;
                }
                r[k] = 0;
            }
        }
        self.lo = new_lo;
        self.shape = new_shape;
        self.values = values;
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Odometer increment of an absolute index inside the box `lo .. lo + shape`.
pub(crate) fn advance(idx: &mut [i64], lo: &[i64], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < lo[k] + shape[k] as i64 {
            return;
        }
        idx[k] = lo[k];
    }
}

/// Indicator of the closed ball of radius `delta` around `center`, at step 0.
pub fn init_indicator_at(lattice: &Lattice, center: &[f64], delta: f64) -> Result<ValueGrid> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("target radius {delta} must be positive")));
    }
    if center.len() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), found: center.len() });
    }
    let h = lattice.spacing();
    let lo: Vec<i64> = center.iter().map(|&c| ceil((c - delta - BOUNDARY_SLACK) / h) as i64).collect();
    let hi: Vec<i64> = center.iter().map(|&c| floor((c + delta + BOUNDARY_SLACK) / h) as i64).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(Error::UnreachableTarget);
    }
    let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
    let mut grid = ValueGrid::from_fn(lattice, 0, lo, shape, |idx| {
        let r2: f64 = idx
            .iter()
            .zip(center)
            .map(|(&k, &c)| (k as f64 * h - c) * (k as f64 * h - c))
            .sum();
        if sqrt(r2) <= delta + BOUNDARY_SLACK {
            1.0
        } else {
            0.0
        }
    })?;
    grid.trim();
    if grid.is_empty() {
        return Err(Error::UnreachableTarget);
    }
    Ok(grid)
}

/// Indicator of the closed ball `B_delta` around the origin.
pub fn init_indicator(lattice: &Lattice, delta: f64) -> Result<ValueGrid> {
    let center = vec![0.0; lattice.dim()];
    init_indicator_at(lattice, &center, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(grid: &ValueGrid) -> Vec<Vec<i64>> {
        grid.iter().filter(|(_, v)| *v == 1.0).map(|(i, _)| i).collect()
    }

    #[test]
    fn indicator_examples() {
        let l1 = Lattice::new(1, 1.0).unwrap();
        let g = init_indicator(&l1, 1.0).unwrap();
        assert_eq!(ones(&g), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(g.get(&[2]), 0.0);
        let g = init_indicator(&l1, 0.1).unwrap();
        assert_eq!(ones(&g), vec![vec![0]]);
        let l2 = Lattice::new(2, 1.0).unwrap();
        let g = init_indicator(&l2, 0.5).unwrap();
        assert_eq!(ones(&g), vec![vec![0, 0]]);
        assert_eq!(g.step(), 0);
    }

    #[test]
    fn indicator_includes_boundary_points() {
        let l2 = Lattice::new(2, 1.0).unwrap();
        let g = init_indicator(&l2, 2.0_f64.sqrt()).unwrap();
        assert_eq!(g.get(&[1, 1]), 1.0);
        assert_eq!(g.get(&[2, 0]), 0.0);
    }

    #[test]
    fn off_lattice_target_can_be_unreachable() {
        let l1 = Lattice::new(1, 1.0).unwrap();
        assert_eq!(init_indicator_at(&l1, &[0.5], 0.2), Err(Error::UnreachableTarget));
        assert!(init_indicator(&l1, 0.0).is_err());
    }

    #[test]
    fn trim_shrinks_to_support() {
        let l1 = Lattice::new(1, 1.0).unwrap();
        let mut g = ValueGrid::from_fn(&l1, 3, vec![-5], vec![11], |i| if i[0] == 2 { 0.5 } else { 1e-310 }).unwrap();
        g.trim();
        assert_eq!(g.lo(), &[2]);
        assert_eq!(g.shape(), &[1]);
        assert_eq!(g.get(&[2]), 0.5);
        assert_eq!(g.get(&[0]), 0.0);
    }

    #[test]
    fn lattice_index_tolerance() {
        let l = Lattice::new(2, 0.125).unwrap();
        assert_eq!(l.index_of(&[1.0, -0.125]), Some(vec![8, -1]));
        assert_eq!(l.index_of(&[0.1, 0.0]), None);
    }
}
