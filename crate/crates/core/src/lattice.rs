//! Uniform lattices, nodal tensor fields and the cell index indicator.

use crate::error::{GldError, Result};
use crate::interp::InterpOrder;
use crate::kinematics::AnalyticVelocity;
use crate::tensor::{Component, Point, SymTensor};

/// Stability bound on `dt * |u|_{W^{1,inf}}` used by [`validate_time_step`].
pub const TIME_STEP_BOUND: f64 = 0.125;

/// Axis-aligned lattice on `[0, a_1] (x [0, a_2])` with `N_k` intervals per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    divisions: [usize; 2],
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn divisions(&self, axis: usize) -> usize {
        self.divisions[axis]
    }

    /// Spacing `h_k = a_k / N_k`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.divisions[axis] as f64
    }

    /// Node count along an axis; inactive axes have a single node.
    pub fn nodes_along(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.divisions[axis] + 1
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_along(0) * self.nodes_along(1)
    }

    /// Row-major linear index with `i` running fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes_along(0) + i
    }

    pub fn lattice_indices(&self, idx: usize) -> (usize, usize) {
        let nx = self.nodes_along(0);
        (idx % nx, idx / nx)
    }

    /// Node coordinate `(i h_1, j h_2)`, computed directly rather than accumulated.
    pub fn coord(&self, i: usize, j: usize) -> Point {
        let x = i as f64 * self.spacing(0);
        let y = if self.dim == 2 {
            j as f64 * self.spacing(1)
        } else {
            0.0
        };
        [x, y]
    }

    pub fn node(&self, idx: usize) -> Point {
        let (i, j) = self.lattice_indices(idx);
        self.coord(i, j)
    }

    /// Product of the active spacings, the cell measure.
    pub fn cell_measure(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// `h_max / h_min` over the active axes.
    pub fn mesh_ratio(&self) -> f64 {
        let hs: Vec<f64> = (0..self.dim).map(|a| self.spacing(a)).collect();
        let max = hs.iter().cloned().fold(f64::MIN, f64::max);
        let min = hs.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// Whether `y` lies in the closed domain.
    pub fn contains(&self, y: Point) -> bool {
        (0..self.dim).all(|a| y[a] >= 0.0 && y[a] <= self.extents[a])
    }

    /// Checks that every active axis supports the interpolation order.
    pub fn check_order(&self, order: InterpOrder) -> Result<()> {
        if order == InterpOrder::Quadratic {
            for axis in 0..self.dim {
                if !self.divisions[axis].is_multiple_of(2) {
                    return Err(GldError::OddDivisionForQuadratic {
                        axis,
                        divisions: self.divisions[axis],
                    });
                }
            }
        }
        Ok(())
    }
}

/// Builds a grid, rejecting odd divisions when `order` is quadratic.
pub fn build_grid(
    dim: usize,
    extents: &[f64],
    divisions: &[usize],
    order: InterpOrder,
) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(GldError::UnsupportedDimension(dim));
    }
    if extents.len() < dim || divisions.len() < dim {
        return Err(GldError::IncompatibleGrid(format!(
            "expected {dim} extents and divisions"
        )));
    }
    let mut grid = Grid {
        dim,
        extents: [0.0; 2],
        divisions: [0; 2],
    };
    for axis in 0..dim {
        let (a, n) = (extents[axis], divisions[axis]);
        if !(a.is_finite() && a > 0.0) {
            return Err(GldError::NonPositiveExtent { axis, extent: a });
        }
        if n < 2 {
            return Err(GldError::TooFewDivisions { axis, divisions: n });
        }
        grid.extents[axis] = a;
        grid.divisions[axis] = n;
    }
    grid.check_order(order)?;
    Ok(grid)
}

/// One time level of the unknown: a symmetric tensor per node, stored as
/// three scalar planes (`xy`, `yy` stay zero in 1D).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: Grid,
    xx: Vec<f64>,
    xy: Vec<f64>,
    yy: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.node_count();
        SymTensorField {
            grid,
            xx: vec![0.0; n],
            xy: vec![0.0; n],
            yy: vec![0.0; n],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> SymTensor) -> Self {
        let mut field = Self::zeros(grid);
        for idx in 0..grid.node_count() {
            field.set(idx, f(grid.node(idx)));
        }
        field
    }

    pub fn from_values(grid: Grid, values: &[SymTensor]) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(GldError::IncompatibleGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        let mut field = Self::zeros(grid);
        for (idx, v) in values.iter().enumerate() {
            field.set(idx, *v);
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.xx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xx.is_empty()
    }

    pub fn get(&self, idx: usize) -> SymTensor {
        SymTensor::new(self.xx[idx], self.xy[idx], self.yy[idx])
    }

    pub fn at(&self, i: usize, j: usize) -> SymTensor {
        self.get(self.grid.index(i, j))
    }

    pub fn set(&mut self, idx: usize, v: SymTensor) {
        self.xx[idx] = v.xx;
        if self.grid.dim == 2 {
            self.xy[idx] = v.xy;
            self.yy[idx] = v.yy;
        }
    }

    /// Scalar plane for one component.
    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::Xx => &self.xx,
            Component::Xy => &self.xy,
            Component::Yy => &self.yy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx
            .iter()
            .chain(&self.xy)
            .chain(&self.yy)
            .all(|v| v.is_finite())
    }
}

/// Cell locator `I(s; alpha, beta, N0)`: `floor((s - alpha) / delta0)` inside the
/// interval, `0` at or below `alpha`, `N0` at or above `beta`.
///
/// The interior result satisfies `i0 delta0 + alpha <= s < (i0 + 1) delta0 + alpha`
/// with the node positions evaluated the same way. Values within one ulp of
/// `beta` are clamped to `N0`.
pub fn index_indicator(s: f64, alpha: f64, beta: f64, n0: usize) -> Result<usize> {
    if alpha >= beta || alpha.is_nan() || beta.is_nan() {
        return Err(GldError::DegenerateInterval { alpha, beta });
    }
    if s <= alpha {
        return Ok(0);
    }
    if s >= beta || beta - s <= f64::EPSILON * beta.abs() {
        return Ok(n0);
    }
    let delta = (beta - alpha) / n0 as f64;
    let mut i0 = (((s - alpha) / delta).floor() as usize).min(n0);
    // Repair one-off rounding so the bracket holds exactly.
    while i0 > 0 && i0 as f64 * delta + alpha > s {
        i0 -= 1;
    }
    while i0 < n0 && (i0 + 1) as f64 * delta + alpha <= s {
        i0 += 1;
    }
    Ok(i0)
}

/// Outcome of [`validate_time_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepReport {
    /// Sampled `dt * max |du_i/dx_k|`.
    pub bound: f64,
    pub limit: f64,
    pub satisfied: bool,
}

/// Estimates `dt |u|_{C0(W1,inf)}` by sampling the velocity gradient on a
/// `samples`-per-axis lattice at `samples + 1` times in `[0, T]`. Advisory only:
/// a violated bound is logged, never rejected.
pub fn validate_time_step(
    velocity: &AnalyticVelocity,
    dt: f64,
    final_time: f64,
    grid: &Grid,
    samples: usize,
) -> TimeStepReport {
    let samples = samples.max(1);
    let mut max_grad = 0.0_f64;
    let ny = if grid.dim() == 2 { samples } else { 0 };
    for k in 0..=samples {
        let t = final_time * k as f64 / samples as f64;
        for a in 0..=samples {
            for b in 0..=ny {
                let x = grid.extent(0) * a as f64 / samples as f64;
                let y = if grid.dim() == 2 {
                    grid.extent(1) * b as f64 / samples as f64
                } else {
                    0.0
                };
                max_grad = max_grad.max(velocity.gradient([x, y], t).max_abs());
            }
        }
    }
    let bound = dt * max_grad;
    let satisfied = bound <= TIME_STEP_BOUND;
    if !satisfied {
        log::warn!(
            "time step {dt:e} gives dt*|grad u| = {bound:.4} above the {TIME_STEP_BOUND} guideline"
        );
    }
    TimeStepReport {
        bound,
        limit: TIME_STEP_BOUND,
        satisfied,
    }
}
