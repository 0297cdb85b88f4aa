//! Manufactured problems, error norms, and convergence / stability /
//! truncation studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{GldError, Result};
use crate::interp::InterpOrder;
use crate::kinematics::{uctd_analytic, AnalyticTensor, AnalyticVelocity};
use crate::lattice::{build_grid, Grid, SymTensorField};
use crate::scheme::{
    apply_ah, solve_model_with, BoundaryPolicy, Model, ProblemData, SchemeConfig, StartMode,
    TensorFn,
};
use crate::tensor::{Component, Point, SymTensor};

/// Names accepted by [`ManufacturedProblem::named`].
pub const EXAMPLE_NAMES: [&str; 8] = [
    "ex1d-i",
    "ex1d-ii",
    "ex1d-iii",
    "ex2d-i",
    "ex2d-ii",
    "ex2d-iii",
    "oldb2d",
    "venkatesan",
];

/// A velocity field paired with a closed-form solution; the source term is
/// derived so the solution satisfies the governing equation exactly.
#[derive(Debug, Clone)]
pub struct ManufacturedProblem {
    name: String,
    dim: usize,
    extents: [f64; 2],
    final_time: f64,
    model: Model,
    velocity: AnalyticVelocity,
    exact: AnalyticTensor,
}

fn sine_scalar() -> AnalyticTensor {
    AnalyticTensor::new(
        |x, t| SymTensor::scalar((x[0] + t).sin() + 2.0),
        |x, t| SymTensor::scalar((x[0] + t).cos()),
        |x, t| [SymTensor::scalar((x[0] + t).cos()), SymTensor::ZERO],
    )
}

/// `[[s + 2, s], [s, sign s + 2]]` with `s = sin(x1 + x2 + t)`.
fn sine_tensor(sign: f64) -> AnalyticTensor {
    let d = move |x: Point, t: f64| {
        let c = (x[0] + x[1] + t).cos();
        SymTensor::new(c, c, sign * c)
    };
    AnalyticTensor::new(
        move |x, t| {
            let s = (x[0] + x[1] + t).sin();
            SymTensor::new(s + 2.0, s, sign * s + 2.0)
        },
        d,
        move |x, t| [d(x, t), d(x, t)],
    )
}

fn decaying_cellular() -> AnalyticTensor {
    AnalyticTensor::new(
        |x, t| {
            let e = (-0.1 * t).exp();
            let (s1, c1) = (PI * x[0]).sin_cos();
            SymTensor::new(e * s1, -PI * e * x[1] * c1, e * s1 * (PI * x[1]).cos())
        },
        |x, t| {
            let e = (-0.1 * t).exp();
            let (s1, c1) = (PI * x[0]).sin_cos();
            SymTensor::new(e * s1, -PI * e * x[1] * c1, e * s1 * (PI * x[1]).cos()).scale(-0.1)
        },
        |x, t| {
            let e = (-0.1 * t).exp();
            let (s1, c1) = (PI * x[0]).sin_cos();
            let (s2, c2) = (PI * x[1]).sin_cos();
            [
                SymTensor::new(PI * e * c1, PI * PI * e * x[1] * s1, PI * e * c1 * c2),
                SymTensor::new(0.0, -PI * e * c1, -PI * e * s1 * s2),
            ]
        },
    )
}

impl ManufacturedProblem {
    pub fn named(name: &str) -> Result<Self> {
        let (dim, final_time, model, velocity, exact) = match name {
            "ex1d-i" | "ex1d-ii" | "ex1d-iii" => (
                1,
                1.0,
                Model::PureUctd,
                AnalyticVelocity::named(name)?,
                sine_scalar(),
            ),
            "ex2d-i" | "ex2d-ii" | "ex2d-iii" => (
                2,
                1.0,
                Model::PureUctd,
                AnalyticVelocity::named(name)?,
                sine_tensor(1.0),
            ),
            "oldb2d" => (
                2,
                1.0,
                Model::OldroydB {
                    weissenberg: 0.025,
                    beta: 1.0 / 9.0,
                },
                AnalyticVelocity::named("ex2d-iii")?,
                sine_tensor(-1.0),
            ),
            "venkatesan" => (
                2,
                0.5,
                Model::OldroydB {
                    weissenberg: 0.25,
                    beta: 0.75,
                },
                AnalyticVelocity::named("venkatesan")?,
                decaying_cellular(),
            ),
            other => return Err(GldError::UnknownExample(other.to_string())),
        };
        Ok(ManufacturedProblem {
            name: name.to_string(),
            dim,
            extents: [1.0, 1.0],
            final_time,
            model,
            velocity,
            exact,
        })
    }

    /// Replaces the model (e.g. a different Weissenberg number). The source is
    /// re-derived for the new model.
    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn velocity(&self) -> &AnalyticVelocity {
        &self.velocity
    }

    pub fn exact(&self) -> &AnalyticTensor {
        &self.exact
    }

    /// Source `F` making the exact solution satisfy the model equation.
    pub fn source(&self, x: Point, t: f64) -> SymTensor {
        source_for(self.model, &self.velocity, &self.exact, x, t)
    }

    pub fn problem_data(&self) -> ProblemData {
        let (model, velocity, exact) = (self.model, self.velocity.clone(), self.exact.clone());
        let source: TensorFn = Arc::new(move |x, t| source_for(model, &velocity, &exact, x, t));
        let e = self.exact.clone();
        let exact_fn: TensorFn = Arc::new(move |x, t| e.value(x, t));
        let e = self.exact.clone();
        ProblemData::new(
            self.velocity.clone(),
            source,
            Arc::new(move |x| e.value(x, 0.0)),
        )
        .with_inflow(exact_fn.clone())
        .with_exact(exact_fn)
    }

    /// Lattice with `n` intervals per axis on the unit domain.
    pub fn grid(&self, n: usize, order: InterpOrder) -> Result<Grid> {
        build_grid(
            self.dim,
            &self.extents[..self.dim],
            &[n, n][..self.dim],
            order,
        )
    }

    /// Time-step rule used for this example's published tables.
    pub fn default_rule(&self, order: InterpOrder) -> DtRule {
        let two_d_model = self.name.starts_with("ex2d");
        let oldroyd = matches!(self.name.as_str(), "oldb2d" | "venkatesan");
        match order {
            InterpOrder::Linear if two_d_model => DtRule::SqrtH(1.0 / 20.0),
            InterpOrder::Linear => DtRule::SqrtH(1.0 / 50.0),
            InterpOrder::Quadratic if two_d_model => DtRule::LinearH(1.0 / 10.0),
            InterpOrder::Quadratic if self.name == "venkatesan" => DtRule::LinearH(1.0 / 10.0),
            InterpOrder::Quadratic if oldroyd => DtRule::LinearH(1.0 / 5.0),
            InterpOrder::Quadratic => DtRule::LinearH(1.0),
        }
    }

    pub fn components(&self) -> &'static [Component] {
        Component::active(self.dim)
    }
}

fn source_for(
    model: Model,
    velocity: &AnalyticVelocity,
    exact: &AnalyticTensor,
    x: Point,
    t: f64,
) -> SymTensor {
    let uctd = uctd_analytic(velocity, exact, x, t);
    match model {
        Model::PureUctd => uctd,
        Model::OldroydB { weissenberg, beta } => {
            let strain = velocity.gradient(x, t).sym_part();
            exact.value(x, t) + uctd.scale(weissenberg) - strain.scale(2.0 * (1.0 - beta))
        }
    }
}

/// Time step as a function of the spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = c sqrt(h)`, paired with linear interpolation.
    SqrtH(f64),
    /// `dt = c' h`, paired with quadratic interpolation.
    LinearH(f64),
}

impl DtRule {
    pub fn dt(&self, h: f64) -> f64 {
        match *self {
            DtRule::SqrtH(c) => c * h.sqrt(),
            DtRule::LinearH(c) => c * h,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DtRule::SqrtH(c) => format!("dt = {c} sqrt(h)"),
            DtRule::LinearH(c) => format!("dt = {c} h"),
        }
    }
}

/// How nodal errors are aggregated over space and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    /// Maximum over steps `n = 1..N_T` of the maximum nodal error.
    #[default]
    MaxMax,
    /// Maximum over steps of `sqrt(h_1 h_2 Σ e²)` over all nodes (diagnostic).
    DiscreteL2,
}

/// Running per-component error under a chosen norm.
#[derive(Debug, Clone)]
pub struct ErrorAccumulator {
    norm: ErrorNorm,
    components: &'static [Component],
    values: Vec<f64>,
}

impl ErrorAccumulator {
    pub fn new(norm: ErrorNorm, dim: usize) -> Self {
        let components = Component::active(dim);
        ErrorAccumulator {
            norm,
            components,
            values: vec![0.0; components.len()],
        }
    }

    /// Folds in one level at time `t`.
    pub fn observe(
        &mut self,
        field: &SymTensorField,
        exact: impl Fn(Point, f64) -> SymTensor,
        t: f64,
    ) {
        let grid = field.grid();
        let mut level = vec![0.0; self.components.len()];
        for idx in 0..grid.node_count() {
            let diff = field.get(idx) - exact(grid.node(idx), t);
            for (k, c) in self.components.iter().enumerate() {
                let e = diff.get(*c).abs();
                match self.norm {
                    ErrorNorm::MaxMax => level[k] = f64::max(level[k], e),
                    ErrorNorm::DiscreteL2 => level[k] += e * e,
                }
            }
        }
        for (k, v) in level.into_iter().enumerate() {
            let v = match self.norm {
                ErrorNorm::MaxMax => v,
                ErrorNorm::DiscreteL2 => (v * grid.cell_measure()).sqrt(),
            };
            self.values[k] = self.values[k].max(v);
        }
    }

    pub fn errors(&self) -> &[f64] {
        &self.values
    }
}

/// `E_ij = max_{n >= 1, node} |[ζ_h]_ij - ζ_ij|` over a stored run, where
/// `levels[n]` is the level at `t = n dt`. Level 0 is excluded.
pub fn error_linf_linf(
    levels: &[SymTensorField],
    exact: Option<&TensorFn>,
    dt: f64,
) -> Result<Vec<f64>> {
    let exact = exact.ok_or(GldError::MissingExact)?;
    let dim = levels.first().map(|f| f.grid().dim()).unwrap_or(1);
    let mut acc = ErrorAccumulator::new(ErrorNorm::MaxMax, dim);
    for (n, level) in levels.iter().enumerate().skip(1) {
        acc.observe(level, |x, t| exact(x, t), n as f64 * dt);
    }
    Ok(acc.errors().to_vec())
}

/// Observed order `ln(E_c / E_f) / ln(dt_c / dt_f)`.
pub fn slope(e_coarse: f64, e_fine: f64, dt_coarse: f64, dt_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && dt_fine > 0.0 && dt_coarse > dt_fine) {
        return Err(GldError::NonPositiveInput);
    }
    Ok((e_coarse / e_fine).ln() / (dt_coarse / dt_fine).ln())
}

/// Knobs shared by the study drivers. The defaults are the reference
/// configuration: max-max norm, backward-Euler start, inflow boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    pub norm: ErrorNorm,
    pub start: Option<StartMode>,
    pub boundary: Option<BoundaryPolicy>,
}

impl StudyOptions {
    fn apply(&self, config: SchemeConfig) -> SchemeConfig {
        let config = match self.start {
            Some(s) => config.with_start(s),
            None => config,
        };
        match self.boundary {
            Some(b) => config.with_boundary(b),
            None => config,
        }
    }
}

/// Solves one manufactured problem on an `n`-interval grid and returns the
/// per-component error.
pub fn run_error(
    problem: &ManufacturedProblem,
    order: InterpOrder,
    dt: f64,
    n: usize,
    options: &StudyOptions,
) -> Result<Vec<f64>> {
    let grid = problem.grid(n, order)?;
    let config = options
        .apply(SchemeConfig::new(order, dt, problem.final_time()).with_model(problem.model()));
    let data = problem.problem_data();
    let mut acc = ErrorAccumulator::new(options.norm, problem.dim());
    let exact = problem.exact().clone();
    solve_model_with(&data, &config, &grid, |step, t, field| {
        if step >= 1 {
            acc.observe(field, |x, t| exact.value(x, t), t);
        }
        Ok(())
    })?;
    Ok(acc.errors().to_vec())
}

fn format_sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn format_slope(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.4}")).unwrap_or_default()
}

fn render_markdown(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len(), 3])
                .max()
                .unwrap_or(3)
        })
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(header);
    let rule: Vec<String> = widths
        .iter()
        .map(|w| format!("{}:", "-".repeat(w.saturating_sub(1))))
        .collect();
    let _ = writeln!(out, "| {} |", rule.join(" | "));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn write_csv<W: Write>(writer: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)
        .map_err(|e| GldError::Csv(e.to_string()))?;
    for r in rows {
        w.write_record(r)
            .map_err(|e| GldError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| GldError::Csv(e.to_string()))
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dt: f64,
    /// Per-component errors, empty when the run failed.
    pub errors: Vec<f64>,
    /// Slopes against the previous successful row.
    pub slopes: Option<Vec<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub label: String,
    pub components: Vec<Component>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["N".to_string(), "dt".to_string()];
        h.extend(self.components.iter().map(|c| format!("E{}", c.label())));
        h.extend(
            self.components
                .iter()
                .map(|c| format!("slope{}", c.label())),
        );
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.n.to_string(), format_sci(r.dt)];
                for k in 0..self.components.len() {
                    cells.push(
                        r.errors
                            .get(k)
                            .map(|e| format_sci(*e))
                            .unwrap_or_else(|| "failed".into()),
                    );
                }
                for k in 0..self.components.len() {
                    cells.push(format_slope(r.slopes.as_ref().map(|s| s[k])));
                }
                cells
            })
            .collect()
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(writer, &self.header(), &self.cells())
    }

    pub fn to_markdown(&self) -> String {
        render_markdown(&self.header(), &self.cells())
    }
}

fn check_refinements(n_list: &[usize], order: InterpOrder) -> Result<()> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GldError::InvalidConfig(
            "N list must be non-empty and strictly increasing".into(),
        ));
    }
    if order == InterpOrder::Quadratic {
        if let Some(&n) = n_list.iter().find(|n| *n % 2 != 0) {
            return Err(GldError::OddDivisionForQuadratic {
                axis: 0,
                divisions: n,
            });
        }
    }
    Ok(())
}

/// Errors and consecutive slopes over a sequence of grids `h = 1/N` with
/// `dt` from `rule`. Failed rows are recorded, not propagated.
pub fn run_convergence_study(
    problem: &ManufacturedProblem,
    order: InterpOrder,
    rule: DtRule,
    n_list: &[usize],
    options: &StudyOptions,
) -> Result<ConvergenceTable> {
    check_refinements(n_list, order)?;
    let results: Vec<(usize, f64, Result<Vec<f64>>)> = n_list
        .par_iter()
        .map(|&n| {
            let dt = rule.dt(1.0 / n as f64);
            (n, dt, run_error(problem, order, dt, n, options))
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(results.len());
    let mut last_ok: Option<(f64, Vec<f64>)> = None;
    for (n, dt, res) in results {
        match res {
            Ok(errors) => {
                let slopes = last_ok.as_ref().map(|(dtc, ec)| {
                    ec.iter()
                        .zip(&errors)
                        .map(|(c, f)| slope(*c, *f, *dtc, dt).unwrap_or(f64::NAN))
                        .collect()
                });
                last_ok = Some((dt, errors.clone()));
                rows.push(ConvergenceRow {
                    n,
                    dt,
                    errors,
                    slopes,
                    failure: None,
                });
            }
            Err(e) => rows.push(ConvergenceRow {
                n,
                dt,
                errors: Vec::new(),
                slopes: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(ConvergenceTable {
        label: format!(
            "{} p={} {}",
            problem.name(),
            order.degree(),
            rule.describe()
        ),
        components: problem.components().to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub k: u32,
    pub dt: f64,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    pub label: String,
    pub components: Vec<Component>,
    pub rows: Vec<StabilityRow>,
}

impl StabilityTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["k".to_string(), "dt".to_string()];
        h.extend(self.components.iter().map(|c| format!("E{}", c.label())));
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.k.to_string(), format_sci(r.dt)];
                cells.extend(r.errors.iter().map(|e| format_sci(*e)));
                cells
            })
            .collect()
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(writer, &self.header(), &self.cells())
    }

    pub fn to_markdown(&self) -> String {
        render_markdown(&self.header(), &self.cells())
    }
}

/// Fixed grid with `n` intervals, `dt(k) = base / 2^k` for `k = 0..=k_max`.
pub fn run_stability_study(
    problem: &ManufacturedProblem,
    order: InterpOrder,
    base_rule: DtRule,
    n: usize,
    k_max: u32,
    options: &StudyOptions,
) -> Result<StabilityTable> {
    if k_max < 1 {
        return Err(GldError::InvalidConfig("k_max must be at least 1".into()));
    }
    let base = base_rule.dt(1.0 / n as f64);
    let rows = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let dt = base / f64::powi(2.0, k as i32);
            run_error(problem, order, dt, n, options).map(|errors| StabilityRow { k, dt, errors })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityTable {
        label: format!(
            "{} p={} h=1/{} {}",
            problem.name(),
            order.degree(),
            n,
            base_rule.describe()
        ),
        components: problem.components().to_vec(),
        rows,
    })
}

/// Largest nodal residual `|A_h ζ - UCTD(ζ)|` over steps `n = 2..N_T` when the
/// exact solution is sampled on the lattice. Nodes whose upwind points leave
/// the domain are skipped.
pub fn truncation_residual(
    problem: &ManufacturedProblem,
    order: InterpOrder,
    dt: f64,
    n: usize,
) -> Result<f64> {
    let grid = problem.grid(n, order)?;
    let steps = SchemeConfig::new(order, dt, problem.final_time()).step_count();
    let exact = problem.exact();
    let level = |m: usize| SymTensorField::from_fn(grid, |x| exact.value(x, m as f64 * dt));
    let comps = problem.components();
    let (mut older, mut old) = (level(0), level(1));
    let mut worst = 0.0_f64;
    for m in 2..=steps {
        let now = level(m);
        let t = m as f64 * dt;
        let ah = apply_ah(&now, &old, Some(&older), problem.velocity(), t, dt, order)?;
        for idx in (0..grid.node_count()).filter(|i| ah.defined[*i]) {
            let r =
                ah.values.get(idx) - uctd_analytic(problem.velocity(), exact, grid.node(idx), t);
            for c in comps {
                worst = worst.max(r.get(*c).abs());
            }
        }
        older = std::mem::replace(&mut old, now);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub n: usize,
    pub dt: f64,
    pub residual: f64,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationTable {
    pub label: String,
    pub rows: Vec<TruncationRow>,
}

impl TruncationTable {
    fn header(&self) -> Vec<String> {
        ["N", "dt", "residual", "slope"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    format_sci(r.dt),
                    format_sci(r.residual),
                    format_slope(r.slope),
                ]
            })
            .collect()
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(writer, &self.header(), &self.cells())
    }

    pub fn to_markdown(&self) -> String {
        render_markdown(&self.header(), &self.cells())
    }
}

/// Residual decay of the discrete operator under grid/time-step refinement.
pub fn run_truncation_study(
    problem: &ManufacturedProblem,
    order: InterpOrder,
    rule: DtRule,
    n_list: &[usize],
) -> Result<TruncationTable> {
    check_refinements(n_list, order)?;
    let residuals = n_list
        .par_iter()
        .map(|&n| {
            let dt = rule.dt(1.0 / n as f64);
            truncation_residual(problem, order, dt, n).map(|r| (n, dt, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<TruncationRow> = Vec::with_capacity(residuals.len());
    for (n, dt, residual) in residuals {
        let slope = rows
            .last()
            .and_then(|p| slope(p.residual, residual, p.dt, dt).ok());
        rows.push(TruncationRow {
            n,
            dt,
            residual,
            slope,
        });
    }
    Ok(TruncationTable {
        label: format!(
            "{} p={} {}",
            problem.name(),
            order.degree(),
            rule.describe()
        ),
        rows,
    })
}
