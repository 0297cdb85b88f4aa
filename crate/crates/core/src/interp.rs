//! Lagrange basis functions and the (bi)linear / (bi)quadratic interpolation
//! operators on a uniform lattice.

use crate::error::{GldError, Result};
use crate::lattice::{index_indicator, Grid, SymTensorField};
use crate::tensor::{Point, SymTensor};

/// Polynomial degree of the interpolation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpOrder {
    Linear,
    Quadratic,
}

impl InterpOrder {
    pub fn from_degree(p: u32) -> Result<Self> {
        match p {
            1 => Ok(InterpOrder::Linear),
            2 => Ok(InterpOrder::Quadratic),
            other => Err(GldError::InvalidOrder(other)),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            InterpOrder::Linear => 1,
            InterpOrder::Quadratic => 2,
        }
    }
}

/// Piecewise-linear hat centred on node `i` of a lattice with spacing `delta`.
pub fn eta1(i: i64, delta: f64, s: f64) -> f64 {
    let i = i as f64;
    let r = s / delta;
    if s >= (i - 1.0) * delta && s < i * delta {
        r - i + 1.0
    } else if s >= i * delta && s <= (i + 1.0) * delta {
        i + 1.0 - r
    } else {
        0.0
    }
}

/// Quadratic Lagrange basis for node `i`. Even nodes are cell end points with
/// support `[(i-2)δ, (i+2)δ]`; odd nodes are cell midpoints with support
/// `[(i-1)δ, (i+1)δ]`.
pub fn eta2(i: i64, delta: f64, s: f64) -> f64 {
    let fi = i as f64;
    let r = s / delta;
    if i.rem_euclid(2) == 0 {
        if s >= (fi - 2.0) * delta && s < fi * delta {
            (r - fi + 1.0) * (0.5 * r - 0.5 * fi + 1.0)
        } else if s >= fi * delta && s <= (fi + 2.0) * delta {
            (fi + 1.0 - r) * (0.5 * fi + 1.0 - 0.5 * r)
        } else {
            0.0
        }
    } else if s >= (fi - 1.0) * delta && s <= (fi + 1.0) * delta {
        (r - fi + 1.0) * (fi + 1.0 - r)
    } else {
        0.0
    }
}

/// Nodes and weights along one axis of the cell containing a coordinate.
#[derive(Debug, Clone, Copy)]
struct AxisStencil {
    first: usize,
    weights: [f64; 3],
    len: usize,
}

fn axis_stencil(grid: &Grid, axis: usize, s: f64, order: InterpOrder) -> Result<AxisStencil> {
    let a = grid.extent(axis);
    let n = grid.divisions(axis);
    let h = grid.spacing(axis);
    match order {
        InterpOrder::Linear => {
            let i0 = index_indicator(s, 0.0, a, n)?.min(n - 1);
            let w = [eta1(i0 as i64, h, s), eta1(i0 as i64 + 1, h, s), 0.0];
            Ok(AxisStencil {
                first: i0,
                weights: w,
                len: 2,
            })
        }
        InterpOrder::Quadratic => {
            if !n.is_multiple_of(2) {
                return Err(GldError::OddDivisionForQuadratic { axis, divisions: n });
            }
            let m = n / 2;
            let k0 = index_indicator(s, 0.0, a, m)?.min(m - 1);
            let i0 = 2 * k0 as i64;
            let w = [eta2(i0, h, s), eta2(i0 + 1, h, s), eta2(i0 + 2, h, s)];
            Ok(AxisStencil {
                first: 2 * k0,
                weights: w,
                len: 3,
            })
        }
    }
}

/// The lattice nodes and tensor-product weights used to interpolate at a point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    nodes: [usize; 9],
    weights: [f64; 9],
    len: usize,
}

impl Stencil {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.len]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights[..self.len]
    }
}

/// Locates the containing cell of `y` and returns its node weights.
pub fn stencil(grid: &Grid, y: Point, order: InterpOrder) -> Result<Stencil> {
    if !grid.contains(y) || !y[0].is_finite() || !y[1].is_finite() {
        return Err(GldError::PointOutsideDomain { x: y[0], y: y[1] });
    }
    let sx = axis_stencil(grid, 0, y[0], order)?;
    let sy = if grid.dim() == 2 {
        axis_stencil(grid, 1, y[1], order)?
    } else {
        AxisStencil {
            first: 0,
            weights: [1.0, 0.0, 0.0],
            len: 1,
        }
    };
    let mut st = Stencil {
        nodes: [0; 9],
        weights: [0.0; 9],
        len: 0,
    };
    for b in 0..sy.len {
        for a in 0..sx.len {
            st.nodes[st.len] = grid.index(sx.first + a, sy.first + b);
            st.weights[st.len] = sx.weights[a] * sy.weights[b];
            st.len += 1;
        }
    }
    Ok(st)
}

/// `(Π_h v)(y)` for a symmetric tensor field; `y` must lie in the closed domain.
pub fn interpolate(field: &SymTensorField, y: Point, order: InterpOrder) -> Result<SymTensor> {
    let st = stencil(field.grid(), y, order)?;
    let mut acc = SymTensor::ZERO;
    for (&node, &w) in st.nodes().iter().zip(st.weights()) {
        acc = acc + field.get(node).scale(w);
    }
    Ok(acc)
}

/// Scalar counterpart of [`interpolate`] over nodal values in lattice order.
pub fn interpolate_scalar(
    grid: &Grid,
    values: &[f64],
    y: Point,
    order: InterpOrder,
) -> Result<f64> {
    if values.len() != grid.node_count() {
        return Err(GldError::IncompatibleGrid(format!(
            "{} values for {} nodes",
            values.len(),
            grid.node_count()
        )));
    }
    let st = stencil(grid, y, order)?;
    Ok(st
        .nodes()
        .iter()
        .zip(st.weights())
        .map(|(&n, &w)| values[n] * w)
        .sum())
}
