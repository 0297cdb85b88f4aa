//! Two-step semi-Lagrangian scheme for the upper-convected derivative and the
//! Oldroyd-B constitutive equation.
//!
//! Each step is explicit: the new value at a node depends on the previous two
//! levels interpolated at the upwind points `x - dt u` and `x - 2 dt u`,
//! conjugated with the deformation matrices `I + dt ∇u` and `I + 2 dt ∇u`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GldError, Result};
use crate::interp::{interpolate, InterpOrder};
use crate::kinematics::{deformation_matrix, upwind_point, AnalyticVelocity};
use crate::lattice::{Grid, SymTensorField};
use crate::tensor::{Point, SymTensor};

/// Time-dependent tensor data `(x, t) -> ζ`.
pub type TensorFn = Arc<dyn Fn(Point, f64) -> SymTensor + Send + Sync>;
/// Initial data `x -> ζ⁰(x)`.
pub type InitialFn = Arc<dyn Fn(Point) -> SymTensor + Send + Sync>;

/// Equation being advanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// `UCTD(ζ) = F`.
    PureUctd,
    /// `ζ + Wi UCTD(ζ) = 2(1 - β) D(u) + F`.
    OldroydB { weissenberg: f64, beta: f64 },
}

/// Treatment of nodes whose upwind points leave the closed domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// The node takes the inflow value `ζ_in(x, tⁿ)`.
    InflowExact,
    /// As `InflowExact`, then outflow boundary nodes copy their inward neighbour.
    NeumannOutflow,
    /// Exterior upwind points read `ζ_in` at the lattice node closest to them.
    ClampedNearest,
}

/// How the level `ζ¹` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// One backward-Euler characteristic step.
    BackwardEuler,
    /// Sample the exact solution at `t = dt` (diagnostic; needs exact data).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub order: InterpOrder,
    pub dt: f64,
    pub final_time: f64,
    pub model: Model,
    pub boundary: BoundaryPolicy,
    pub start: StartMode,
}

impl SchemeConfig {
    pub fn new(order: InterpOrder, dt: f64, final_time: f64) -> Self {
        SchemeConfig {
            order,
            dt,
            final_time,
            model: Model::PureUctd,
            boundary: BoundaryPolicy::InflowExact,
            start: StartMode::BackwardEuler,
        }
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_start(mut self, start: StartMode) -> Self {
        self.start = start;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(GldError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.step_count() < 2 {
            return Err(GldError::InvalidConfig(format!(
                "final time {} must allow at least two steps of {}",
                self.final_time, self.dt
            )));
        }
        if let Model::OldroydB { weissenberg, beta } = self.model {
            if weissenberg.is_nan() || weissenberg <= 0.0 {
                return Err(GldError::InvalidConfig(format!(
                    "Wi must be positive, got {weissenberg}"
                )));
            }
            if !(beta > 0.0 && beta < 1.0) {
                return Err(GldError::InvalidConfig(format!(
                    "beta must lie in (0, 1), got {beta}"
                )));
            }
        }
        Ok(())
    }

    /// `N_T = floor(T / dt)`, rounding to the nearest integer when the ratio is
    /// within one ulp of it.
    pub fn step_count(&self) -> usize {
        let r = self.final_time / self.dt;
        if !r.is_finite() || r < 0.0 {
            return 0;
        }
        let nearest = r.round();
        if (r - nearest).abs() <= f64::EPSILON * r.max(1.0) {
            nearest as usize
        } else {
            r.floor() as usize
        }
    }
}

/// Velocity, source, boundary and initial data for one run.
#[derive(Clone)]
pub struct ProblemData {
    pub velocity: AnalyticVelocity,
    pub source: TensorFn,
    pub inflow: Option<TensorFn>,
    pub initial: InitialFn,
    pub exact: Option<TensorFn>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("velocity", &self.velocity)
            .field("inflow", &self.inflow.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemData {
    pub fn new(velocity: AnalyticVelocity, source: TensorFn, initial: InitialFn) -> Self {
        ProblemData {
            velocity,
            source,
            inflow: None,
            initial,
            exact: None,
        }
    }

    pub fn with_inflow(mut self, inflow: TensorFn) -> Self {
        self.inflow = Some(inflow);
        self
    }

    pub fn with_exact(mut self, exact: TensorFn) -> Self {
        self.exact = Some(exact);
        self
    }
}

/// Previous levels feeding a step.
#[derive(Clone, Copy)]
enum History<'a> {
    First(&'a SymTensorField),
    General(&'a SymTensorField, &'a SymTensorField),
}

/// Result of composing a previous level with an upwind point.
enum Upwind {
    Value(SymTensor),
    Exited,
}

fn nearest_node(grid: &Grid, y: Point) -> usize {
    let mut ij = [0usize; 2];
    for axis in 0..grid.dim() {
        let n = grid.divisions(axis);
        let s = y[axis].clamp(0.0, grid.extent(axis)) / grid.spacing(axis);
        ij[axis] = (s.round().max(0.0) as usize).min(n);
    }
    grid.index(ij[0], ij[1])
}

fn compose(
    field: &SymTensorField,
    y: Point,
    t_level: f64,
    order: InterpOrder,
    policy: BoundaryPolicy,
    inflow: Option<&TensorFn>,
    step: usize,
) -> Result<Upwind> {
    let grid = field.grid();
    if grid.contains(y) {
        return interpolate(field, y, order).map(Upwind::Value);
    }
    match policy {
        BoundaryPolicy::InflowExact | BoundaryPolicy::NeumannOutflow => Ok(Upwind::Exited),
        BoundaryPolicy::ClampedNearest => {
            let node = nearest_node(grid, y);
            let zin = inflow.ok_or(GldError::MissingInflowData { step })?;
            Ok(Upwind::Value(zin(grid.node(node), t_level)))
        }
    }
}

fn node_update(
    idx: usize,
    grid: &Grid,
    problem: &ProblemData,
    config: &SchemeConfig,
    history: History<'_>,
    step: usize,
) -> Result<SymTensor> {
    let dt = config.dt;
    let t = step as f64 * dt;
    let x = grid.node(idx);
    let u = problem.velocity.velocity(x, t);
    let g = problem.velocity.gradient(x, t);
    let inflow = problem.inflow.as_ref();
    let take_inflow = || {
        inflow
            .map(|f| f(x, t))
            .ok_or(GldError::MissingInflowData { step })
    };

    let l1 = deformation_matrix(&g, dt, 1).0;
    let y1 = upwind_point(x, u, dt, 1);
    let source = (problem.source)(x, t);
    match history {
        History::First(prev) => {
            let z = match compose(
                prev,
                y1,
                t - dt,
                config.order,
                config.boundary,
                inflow,
                step,
            )? {
                Upwind::Value(z) => z,
                Upwind::Exited => return take_inflow(),
            };
            let carried = z.congruence(&l1);
            Ok(match config.model {
                Model::PureUctd => carried + source.scale(dt),
                Model::OldroydB {
                    weissenberg: wi,
                    beta,
                } => {
                    let rhs = g.sym_part().scale(2.0 * (1.0 - beta)) + source;
                    (rhs + carried.scale(wi / dt)).scale(1.0 / (1.0 + wi / dt))
                }
            })
        }
        History::General(prev, prev2) => {
            let l2 = deformation_matrix(&g, dt, 2).0;
            let y2 = upwind_point(x, u, dt, 2);
            let z1 = compose(
                prev,
                y1,
                t - dt,
                config.order,
                config.boundary,
                inflow,
                step,
            )?;
            let z2 = compose(
                prev2,
                y2,
                t - 2.0 * dt,
                config.order,
                config.boundary,
                inflow,
                step,
            )?;
            let (z1, z2) = match (z1, z2) {
                (Upwind::Value(a), Upwind::Value(b)) => (a, b),
                _ => return take_inflow(),
            };
            let a = z1.congruence(&l1);
            let b = z2.congruence(&l2);
            Ok(match config.model {
                Model::PureUctd => {
                    a.scale(4.0 / 3.0) - b.scale(1.0 / 3.0) + source.scale(2.0 * dt / 3.0)
                }
                Model::OldroydB {
                    weissenberg: wi,
                    beta,
                } => {
                    let rhs = g.sym_part().scale(2.0 * (1.0 - beta)) + source;
                    let carried = (a.scale(4.0) - b).scale(wi / (2.0 * dt));
                    (rhs + carried).scale(1.0 / (1.0 + 1.5 * wi / dt))
                }
            })
        }
    }
}

/// Outflow nodes copy their inward neighbour, one axis at a time.
fn apply_neumann_outflow(field: &mut SymTensorField, velocity: &AnalyticVelocity, t: f64) {
    let grid = *field.grid();
    for axis in 0..grid.dim() {
        let n = grid.divisions(axis);
        let other = if grid.dim() == 2 {
            grid.nodes_along(1 - axis)
        } else {
            1
        };
        for k in 0..other {
            let ij = |m: usize| if axis == 0 { (m, k) } else { (k, m) };
            for (edge, inner, sign) in [(n, n - 1, 1.0), (0, 1, -1.0)] {
                let (i, j) = ij(edge);
                let x = grid.coord(i, j);
                if sign * velocity.velocity(x, t)[axis] > 0.0 {
                    let (ii, jj) = ij(inner);
                    let v = field.at(ii, jj);
                    field.set(grid.index(i, j), v);
                }
            }
        }
    }
}

fn advance(
    grid: &Grid,
    problem: &ProblemData,
    config: &SchemeConfig,
    history: History<'_>,
    step: usize,
) -> Result<SymTensorField> {
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|idx| node_update(idx, grid, problem, config, history, step))
        .collect::<Result<Vec<_>>>()?;
    let mut field = SymTensorField::from_values(*grid, &values)?;
    if config.boundary == BoundaryPolicy::NeumannOutflow {
        apply_neumann_outflow(&mut field, &problem.velocity, step as f64 * config.dt);
    }
    if !field.is_finite() {
        return Err(GldError::NonFinite { step });
    }
    Ok(field)
}

fn check_compatible(grid: &Grid, problem: &ProblemData, config: &SchemeConfig) -> Result<()> {
    config.validate()?;
    if grid.dim() != problem.velocity.dim() {
        return Err(GldError::IncompatibleGrid(format!(
            "{}D grid with {}D velocity",
            grid.dim(),
            problem.velocity.dim()
        )));
    }
    grid.check_order(config.order)
}

/// `ζ¹` from `ζ⁰` by one backward-Euler characteristic step (or the chosen
/// start mode). The model in `config` selects the update formula.
pub fn model_first_step(
    zeta0: &SymTensorField,
    problem: &ProblemData,
    config: &SchemeConfig,
) -> Result<SymTensorField> {
    let grid = *zeta0.grid();
    check_compatible(&grid, problem, config)?;
    match config.start {
        StartMode::BackwardEuler => advance(&grid, problem, config, History::First(zeta0), 1),
        StartMode::Exact => {
            let exact = problem.exact.as_ref().ok_or(GldError::MissingExact)?;
            Ok(SymTensorField::from_fn(grid, |x| exact(x, config.dt)))
        }
    }
}

/// `ζⁿ` for `n >= 2` from `ζⁿ⁻¹` and `ζⁿ⁻²`, with `t_n = n dt`.
pub fn model_general_step(
    zeta_nm1: &SymTensorField,
    zeta_nm2: &SymTensorField,
    problem: &ProblemData,
    config: &SchemeConfig,
    t_n: f64,
) -> Result<SymTensorField> {
    let grid = *zeta_nm1.grid();
    check_compatible(&grid, problem, config)?;
    if zeta_nm2.grid() != &grid {
        return Err(GldError::IncompatibleGrid(
            "history levels on different grids".into(),
        ));
    }
    let step = (t_n / config.dt).round() as usize;
    if step < 2 {
        return Err(GldError::InvalidConfig(format!(
            "general step needs n >= 2, got t_n = {t_n}"
        )));
    }
    advance(
        &grid,
        problem,
        config,
        History::General(zeta_nm1, zeta_nm2),
        step,
    )
}

/// Runs the scheme from `ζ⁰` to `N_T`, handing every level (including `n = 0`)
/// to `observer`, and returns the final level.
pub fn solve_model_with(
    problem: &ProblemData,
    config: &SchemeConfig,
    grid: &Grid,
    mut observer: impl FnMut(usize, f64, &SymTensorField) -> Result<()>,
) -> Result<SymTensorField> {
    check_compatible(grid, problem, config)?;
    let steps = config.step_count();
    let zeta0 = SymTensorField::from_fn(*grid, |x| (problem.initial)(x));
    observer(0, 0.0, &zeta0)?;
    let zeta1 = model_first_step(&zeta0, problem, config)?;
    observer(1, config.dt, &zeta1)?;
    let (mut older, mut newer) = (zeta0, zeta1);
    for n in 2..=steps {
        let next = advance(grid, problem, config, History::General(&newer, &older), n)?;
        observer(n, n as f64 * config.dt, &next)?;
        older = std::mem::replace(&mut newer, next);
    }
    Ok(newer)
}

/// Runs the scheme and returns all levels `ζ⁰ … ζ^{N_T}`.
pub fn solve_model(
    problem: &ProblemData,
    config: &SchemeConfig,
    grid: &Grid,
) -> Result<Vec<SymTensorField>> {
    let mut levels = Vec::with_capacity(config.step_count() + 1);
    solve_model_with(problem, config, grid, |_, _, f| {
        levels.push(f.clone());
        Ok(())
    })?;
    Ok(levels)
}

/// Oldroyd-B variant of [`solve_model_with`]; rejects other models.
pub fn solve_oldroyd_b_with(
    problem: &ProblemData,
    config: &SchemeConfig,
    grid: &Grid,
    observer: impl FnMut(usize, f64, &SymTensorField) -> Result<()>,
) -> Result<SymTensorField> {
    if !matches!(config.model, Model::OldroydB { .. }) {
        return Err(GldError::InvalidConfig(
            "Oldroyd-B solve needs an Oldroyd-B model".into(),
        ));
    }
    solve_model_with(problem, config, grid, observer)
}

/// Runs the Oldroyd-B scheme and returns all levels.
///
/// The step isolates `ζⁿ` in `ζⁿ + Wi A_h ζ = 2(1-β) D(uⁿ) + Fⁿ`; since the
/// operator is affine in `ζⁿ` with coefficient `3/(2dt)` (`1/dt` at `n = 1`) the
/// update is a pointwise division.
pub fn solve_oldroyd_b(
    problem: &ProblemData,
    config: &SchemeConfig,
    grid: &Grid,
) -> Result<Vec<SymTensorField>> {
    let mut levels = Vec::with_capacity(config.step_count() + 1);
    solve_oldroyd_b_with(problem, config, grid, |_, _, f| {
        levels.push(f.clone());
        Ok(())
    })?;
    Ok(levels)
}

/// Output of [`apply_ah`]: values plus a mask of nodes whose upwind points
/// stay inside the domain (the operator is undefined elsewhere).
#[derive(Debug, Clone)]
pub struct OperatorField {
    pub values: SymTensorField,
    pub defined: Vec<bool>,
}

/// Discrete upper-convected derivative at `t_n`:
/// `(3ζⁿ - 4 L₁ Z L₁ᵀ + L̃₁ Z̃ L̃₁ᵀ) / (2dt)` when `zeta_nm2` is given, else
/// `(ζ¹ - L₁ Z L₁ᵀ) / dt`.
pub fn apply_ah(
    zeta_n: &SymTensorField,
    zeta_nm1: &SymTensorField,
    zeta_nm2: Option<&SymTensorField>,
    velocity: &AnalyticVelocity,
    t_n: f64,
    dt: f64,
    order: InterpOrder,
) -> Result<OperatorField> {
    let grid = *zeta_n.grid();
    grid.check_order(order)?;
    if zeta_nm1.grid() != &grid || zeta_nm2.is_some_and(|f| f.grid() != &grid) {
        return Err(GldError::IncompatibleGrid(
            "levels on different grids".into(),
        ));
    }
    let per_node = (0..grid.node_count())
        .into_par_iter()
        .map(|idx| -> Result<Option<SymTensor>> {
            let x = grid.node(idx);
            let u = velocity.velocity(x, t_n);
            let g = velocity.gradient(x, t_n);
            let y1 = upwind_point(x, u, dt, 1);
            if !grid.contains(y1) {
                return Ok(None);
            }
            let a = interpolate(zeta_nm1, y1, order)?.congruence(&deformation_matrix(&g, dt, 1).0);
            let now = zeta_n.get(idx);
            match zeta_nm2 {
                None => Ok(Some((now - a).scale(1.0 / dt))),
                Some(older) => {
                    let y2 = upwind_point(x, u, dt, 2);
                    if !grid.contains(y2) {
                        return Ok(None);
                    }
                    let b =
                        interpolate(older, y2, order)?.congruence(&deformation_matrix(&g, dt, 2).0);
                    Ok(Some((now.scale(3.0) - a.scale(4.0) + b).scale(0.5 / dt)))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let defined = per_node.iter().map(Option::is_some).collect();
    let values: Vec<SymTensor> = per_node
        .into_iter()
        .map(|v| v.unwrap_or_default())
        .collect();
    Ok(OperatorField {
        values: SymTensorField::from_values(grid, &values)?,
        defined,
    })
}

/// Writes one level as CSV: `i[,j],x[,y],zeta11[,zeta12,zeta22]`.
pub fn write_snapshot<W: Write>(field: &SymTensorField, writer: W) -> Result<()> {
    let grid = field.grid();
    let two_d = grid.dim() == 2;
    let mut w = csv::Writer::from_writer(writer);
    let header: &[&str] = if two_d {
        &["i", "j", "x", "y", "zeta11", "zeta12", "zeta22"]
    } else {
        &["i", "x", "zeta11"]
    };
    w.write_record(header)
        .map_err(|e| GldError::Csv(e.to_string()))?;
    for idx in 0..grid.node_count() {
        let (i, j) = grid.lattice_indices(idx);
        let x = grid.node(idx);
        let v = field.get(idx);
        let rec: Vec<String> = if two_d {
            vec![
                i.to_string(),
                j.to_string(),
                format!("{:e}", x[0]),
                format!("{:e}", x[1]),
                format!("{:e}", v.xx),
                format!("{:e}", v.xy),
                format!("{:e}", v.yy),
            ]
        } else {
            vec![i.to_string(), format!("{:e}", x[0]), format!("{:e}", v.xx)]
        };
        w.write_record(&rec)
            .map_err(|e| GldError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| GldError::Csv(e.to_string()))?;
    Ok(())
}
