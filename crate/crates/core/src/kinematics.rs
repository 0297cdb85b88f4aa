//! Prescribed velocity fields, upwind points, first-order deformation
//! matrices, and RK4 reference integrators for the flow map and the
//! deformation gradient.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{GldError, Result};
use crate::tensor::{Mat2, Point, SymTensor};

type VectorFn = dyn Fn(Point, f64) -> Point + Send + Sync;
type GradientFn = dyn Fn(Point, f64) -> Mat2 + Send + Sync;
type TensorValueFn = dyn Fn(Point, f64) -> SymTensor + Send + Sync;
type TensorGradientFn = dyn Fn(Point, f64) -> [SymTensor; 2] + Send + Sync;

/// Names accepted by [`AnalyticVelocity::named`].
pub const VELOCITY_NAMES: [&str; 7] = [
    "ex1d-i",
    "ex1d-ii",
    "ex1d-iii",
    "ex2d-i",
    "ex2d-ii",
    "ex2d-iii",
    "venkatesan",
];

/// Closed-form velocity `u(x, t)` with its exact Jacobian, entry `(i, k)` being
/// `du_i/dx_k`.
#[derive(Clone)]
pub struct AnalyticVelocity {
    name: String,
    dim: usize,
    eval: Arc<VectorFn>,
    grad: Arc<GradientFn>,
}

impl fmt::Debug for AnalyticVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticVelocity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl AnalyticVelocity {
    /// User-supplied field. `grad` must be the exact Jacobian of `eval`.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(Point, f64) -> Point + Send + Sync + 'static,
        grad: impl Fn(Point, f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        AnalyticVelocity {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::custom("zero", dim, |_, _| [0.0, 0.0], |_, _| Mat2::ZERO)
    }

    /// Registry of the prescribed fields used by the manufactured problems.
    pub fn named(name: &str) -> Result<Self> {
        let v = match name {
            "ex1d-i" => Self::custom(name, 1, |_, t| [t, 0.0], |_, _| Mat2::ZERO),
            "ex1d-ii" => Self::custom(
                name,
                1,
                |x, t| [x[0] + t, 0.0],
                |_, _| Mat2::new(1.0, 0.0, 0.0, 0.0),
            ),
            "ex1d-iii" => Self::custom(
                name,
                1,
                |x, t| [(x[0] + t).sin(), 0.0],
                |x, t| Mat2::new((x[0] + t).cos(), 0.0, 0.0, 0.0),
            ),
            "ex2d-i" => Self::custom(name, 2, |_, t| [t, t], |_, _| Mat2::ZERO),
            "ex2d-ii" => Self::custom(name, 2, |x, t| [x[0] + t, x[1] + t], |_, _| Mat2::IDENTITY),
            "ex2d-iii" => Self::custom(
                name,
                2,
                |x, t| {
                    let s = (x[0] + x[1] + t).sin();
                    [s, s]
                },
                |x, t| {
                    let c = (x[0] + x[1] + t).cos();
                    Mat2::new(c, c, c, c)
                },
            ),
            "venkatesan" => Self::custom(
                name,
                2,
                |x, t| {
                    let e = (-0.1 * t).exp();
                    [e * (PI * x[0]).sin(), -PI * e * x[1] * (PI * x[0]).cos()]
                },
                |x, t| {
                    let e = (-0.1 * t).exp();
                    let (s1, c1) = (PI * x[0]).sin_cos();
                    Mat2::new(PI * e * c1, 0.0, PI * PI * e * x[1] * s1, -PI * e * c1)
                },
            ),
            other => return Err(GldError::UnknownExample(other.to_string())),
        };
        Ok(v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn velocity(&self, x: Point, t: f64) -> Point {
        (self.eval)(x, t)
    }

    pub fn gradient(&self, x: Point, t: f64) -> Mat2 {
        (self.grad)(x, t)
    }
}

/// `I + k dt ∇u`, the first-order approximation of the deformation gradient
/// over `k` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationMatrix(pub Mat2);

impl DeformationMatrix {
    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }
}

/// `x - k dt u`; `k = 1` gives the one-step upwind point, `k = 2` the two-step one.
pub fn upwind_point(x: Point, u: Point, dt: f64, k: u32) -> Point {
    let s = k as f64 * dt;
    [x[0] - s * u[0], x[1] - s * u[1]]
}

pub fn deformation_matrix(grad_u: &Mat2, dt: f64, k: u32) -> DeformationMatrix {
    DeformationMatrix(Mat2::IDENTITY + grad_u.scale(k as f64 * dt))
}

fn rk4_position(velocity: &AnalyticVelocity, x: Point, t0: f64, t1: f64, substeps: usize) -> Point {
    let n = substeps.max(1);
    let h = (t1 - t0) / n as f64;
    let mut p = x;
    for m in 0..n {
        let s = t0 + m as f64 * h;
        let k1 = velocity.velocity(p, s);
        let k2 = velocity.velocity(axpy(p, 0.5 * h, k1), s + 0.5 * h);
        let k3 = velocity.velocity(axpy(p, 0.5 * h, k2), s + 0.5 * h);
        let k4 = velocity.velocity(axpy(p, h, k3), s + h);
        for d in 0..2 {
            p[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
    }
    p
}

fn axpy(p: Point, a: f64, v: Point) -> Point {
    [p[0] + a * v[0], p[1] + a * v[1]]
}

/// Position at time `s` of the particle that sits at `x` at time `t`,
/// integrated with fixed-step RK4.
pub fn flow_map_oracle(
    x: Point,
    t: f64,
    s: f64,
    velocity: &AnalyticVelocity,
    substeps: usize,
) -> Point {
    rk4_position(velocity, x, t, s, substeps)
}

/// Deformation gradient `L(x, t; t1, t2)` along the trajectory through `(x, t)`,
/// from RK4 on `dL/ds = ∇u(X(s), s) L` with `L(t1) = I`.
pub fn deformation_oracle(
    x: Point,
    t: f64,
    t1: f64,
    t2: f64,
    velocity: &AnalyticVelocity,
    substeps: usize,
) -> Mat2 {
    let start = rk4_position(velocity, x, t, t1, substeps);
    let n = substeps.max(1);
    let h = (t2 - t1) / n as f64;
    let rhs = |p: Point, l: Mat2, s: f64| (velocity.velocity(p, s), velocity.gradient(p, s) * l);
    let mut p = start;
    let mut l = Mat2::IDENTITY;
    for m in 0..n {
        let s = t1 + m as f64 * h;
        let (v1, d1) = rhs(p, l, s);
        let (v2, d2) = rhs(axpy(p, 0.5 * h, v1), l + d1.scale(0.5 * h), s + 0.5 * h);
        let (v3, d3) = rhs(axpy(p, 0.5 * h, v2), l + d2.scale(0.5 * h), s + 0.5 * h);
        let (v4, d4) = rhs(axpy(p, h, v3), l + d3.scale(h), s + h);
        for d in 0..2 {
            p[d] += h / 6.0 * (v1[d] + 2.0 * v2[d] + 2.0 * v3[d] + v4[d]);
        }
        l = l + (d1 + d2.scale(2.0) + d3.scale(2.0) + d4).scale(h / 6.0);
    }
    l
}

/// Symmetric tensor field with closed-form time and space partials.
#[derive(Clone)]
pub struct AnalyticTensor {
    value: Arc<TensorValueFn>,
    time_derivative: Arc<TensorValueFn>,
    gradient: Arc<TensorGradientFn>,
}

impl fmt::Debug for AnalyticTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticTensor")
    }
}

impl AnalyticTensor {
    /// `gradient` returns `[dζ/dx_1, dζ/dx_2]`.
    pub fn new(
        value: impl Fn(Point, f64) -> SymTensor + Send + Sync + 'static,
        time_derivative: impl Fn(Point, f64) -> SymTensor + Send + Sync + 'static,
        gradient: impl Fn(Point, f64) -> [SymTensor; 2] + Send + Sync + 'static,
    ) -> Self {
        AnalyticTensor {
            value: Arc::new(value),
            time_derivative: Arc::new(time_derivative),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, x: Point, t: f64) -> SymTensor {
        (self.value)(x, t)
    }

    pub fn time_derivative(&self, x: Point, t: f64) -> SymTensor {
        (self.time_derivative)(x, t)
    }

    pub fn gradient(&self, x: Point, t: f64) -> [SymTensor; 2] {
        (self.gradient)(x, t)
    }
}

/// Upper-convected derivative `ζ_t + (u·∇)ζ - (∇u)ζ - ζ(∇u)ᵀ` at a point.
pub fn uctd_analytic(
    velocity: &AnalyticVelocity,
    zeta: &AnalyticTensor,
    x: Point,
    t: f64,
) -> SymTensor {
    let u = velocity.velocity(x, t);
    let g = velocity.gradient(x, t);
    let z = zeta.value(x, t);
    let [dz1, dz2] = zeta.gradient(x, t);
    zeta.time_derivative(x, t) + dz1.scale(u[0]) + dz2.scale(u[1]) - z.stretch(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn upwind_point_examples() {
        assert_eq!(upwind_point([0.5, 0.0], [0.0, 0.0], 0.01, 1), [0.5, 0.0]);
        let y = upwind_point([0.5, 0.0], [1.0, 0.0], 0.01, 2);
        assert_abs_diff_eq!(y[0], 0.48, epsilon = 1e-15);
        let y = upwind_point([0.2, 0.3], [1.0, -1.0], 0.1, 1);
        assert_abs_diff_eq!(y[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn deformation_matrix_examples() {
        assert_eq!(deformation_matrix(&Mat2::ZERO, 0.1, 1).0, Mat2::IDENTITY);
        let l = deformation_matrix(&Mat2::new(2.0, 0.0, 0.0, 0.0), 0.1, 1);
        assert_abs_diff_eq!(l.0 .0[0][0], 1.2, epsilon = 1e-15);
        let l = deformation_matrix(&Mat2::new(0.0, 1.0, 1.0, 0.0), 0.1, 2);
        let expect = Mat2::new(1.0, 0.2, 0.2, 1.0);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(l.0 .0[i][j], expect.0[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn flow_map_stationary_and_closed_forms() {
        let zero = AnalyticVelocity::zero(2);
        assert_eq!(flow_map_oracle([0.3, 0.7], 0.5, 0.0, &zero, 10), [0.3, 0.7]);

        let shear = AnalyticVelocity::named("ex1d-i").unwrap();
        let x = flow_map_oracle([0.5, 0.0], 0.2, 0.0, &shear, 100);
        assert_abs_diff_eq!(x[0], 0.48, epsilon = 1e-12);

        let stretch = AnalyticVelocity::custom(
            "x",
            1,
            |x, _| [x[0], 0.0],
            |_, _| Mat2::new(1.0, 0.0, 0.0, 0.0),
        );
        let x = flow_map_oracle([1.0, 0.0], 0.0, 1.0, &stretch, 1000);
        assert_abs_diff_eq!(x[0], std::f64::consts::E, epsilon = 1e-10);
    }

    #[test]
    fn deformation_oracle_closed_forms() {
        let zero = AnalyticVelocity::zero(2);
        assert_eq!(
            deformation_oracle([0.1, 0.2], 1.0, 0.3, 0.9, &zero, 8),
            Mat2::IDENTITY
        );

        let v = AnalyticVelocity::named("ex2d-iii").unwrap();
        assert_eq!(
            deformation_oracle([0.1, 0.2], 1.0, 0.4, 0.4, &v, 8),
            Mat2::IDENTITY
        );

        let stretch = AnalyticVelocity::custom(
            "x",
            1,
            |x, _| [x[0], 0.0],
            |_, _| Mat2::new(1.0, 0.0, 0.0, 0.0),
        );
        let l = deformation_oracle([0.4, 0.0], 0.5, 0.4, 0.5, &stretch, 100);
        assert_abs_diff_eq!(l.0[0][0], 1.105170918075648, epsilon = 1e-10);
    }

    #[test]
    fn uctd_examples() {
        let zero = AnalyticVelocity::zero(2);
        let ramp = AnalyticTensor::new(
            |_, t| SymTensor::identity(2).scale(t),
            |_, _| SymTensor::identity(2),
            |_, _| [SymTensor::ZERO; 2],
        );
        assert_eq!(
            uctd_analytic(&zero, &ramp, [0.3, 0.4], 0.7),
            SymTensor::identity(2)
        );

        let u = AnalyticVelocity::named("ex1d-i").unwrap();
        let zeta = AnalyticTensor::new(
            |x, t| SymTensor::scalar((x[0] + t).sin() + 2.0),
            |x, t| SymTensor::scalar((x[0] + t).cos()),
            |x, t| [SymTensor::scalar((x[0] + t).cos()), SymTensor::ZERO],
        );
        assert_abs_diff_eq!(
            uctd_analytic(&u, &zeta, [0.0, 0.0], 0.0).xx,
            1.0,
            epsilon = 1e-15
        );
        let (x, t) = (0.3, 0.6);
        assert_abs_diff_eq!(
            uctd_analytic(&u, &zeta, [x, 0.0], t).xx,
            (1.0 + t) * (x + t).cos(),
            epsilon = 1e-14
        );

        let v = AnalyticVelocity::named("venkatesan").unwrap();
        let id = AnalyticTensor::new(
            |_, _| SymTensor::identity(2),
            |_, _| SymTensor::ZERO,
            |_, _| [SymTensor::ZERO; 2],
        );
        let p = [0.3, 0.8];
        let g = v.gradient(p, 0.2);
        let expect = (g + g.transpose()).scale(-1.0);
        let got = uctd_analytic(&v, &id, p, 0.2);
        assert_abs_diff_eq!(got.xx, expect.0[0][0], epsilon = 1e-14);
        assert_abs_diff_eq!(got.xy, expect.0[0][1], epsilon = 1e-14);
        assert_abs_diff_eq!(got.yy, expect.0[1][1], epsilon = 1e-14);
    }

    #[test]
    fn registry_rejects_unknown_names() {
        assert!(matches!(
            AnalyticVelocity::named("nope"),
            Err(GldError::UnknownExample(_))
        ));
        for name in VELOCITY_NAMES {
            assert_eq!(AnalyticVelocity::named(name).unwrap().name(), name);
        }
    }
}
