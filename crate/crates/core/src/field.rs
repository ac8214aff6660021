use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::scalar::{weighted_dot, Real};

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InconsistentInputs(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: Arc<Grid<T>>, value: T) -> Self {
        let values = vec![value; grid.node_count()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(usize) -> T) -> Self {
        let values = (0..grid.node_count()).map(f).collect();
        Self { grid, values }
    }

    /// `1 / w_i` at `node`, zero elsewhere, so that `<delta, f>_h = f_i`.
    pub fn delta(grid: Arc<Grid<T>>, node: usize) -> Self {
        let mut field = Self::zeros(grid);
        field.values[node] = T::one() / field.grid.weight(node);
        field
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn on_same_grid(&self, other: &Field<T>) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `<self, other>_h = sum_i w_i f_i g_i`.
    pub fn dot(&self, other: &Field<T>) -> Result<T> {
        if !self.on_same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(weighted_dot(
            self.grid.weights(),
            &self.values,
            &other.values,
        ))
    }

    pub fn norm(&self) -> T {
        weighted_dot(self.grid.weights(), &self.values, &self.values).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

pub(crate) fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
