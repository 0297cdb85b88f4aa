//! Fixed-size 2x2 matrices and symmetric tensors.
//!
//! One-dimensional problems are embedded in the same types: only the first
//! coordinate and the `xx` component are active, everything else stays zero.

use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane; the second entry is zero in 1D.
pub type Point = [f64; 2];

/// Dense 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn transpose(&self) -> Mat2 {
        let a = self.0;
        Mat2([[a[0][0], a[1][0]], [a[0][1], a[1][1]]])
    }

    /// Symmetric part `(A + Aᵀ) / 2`.
    pub fn sym_part(&self) -> SymTensor {
        let a = self.0;
        SymTensor::new(a[0][0], 0.5 * (a[0][1] + a[1][0]), a[1][1])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let a = self.0;
        Mat2([[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]])
    }

    pub fn apply(&self, v: Point) -> Point {
        let a = self.0;
        [
            a[0][0] * v[0] + a[0][1] * v[1],
            a[1][0] * v[0] + a[1][1] * v[1],
        ]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(c)
    }
}

/// Tensor component selector, `Xy` being the (shared) off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Xx,
    Xy,
    Yy,
}

impl Component {
    /// Components carrying data in `dim` space dimensions.
    pub fn active(dim: usize) -> &'static [Component] {
        if dim == 1 {
            &[Component::Xx]
        } else {
            &[Component::Xx, Component::Xy, Component::Yy]
        }
    }

    /// Conventional label, e.g. `11`, `12`, `22`.
    pub fn label(&self) -> &'static str {
        match self {
            Component::Xx => "11",
            Component::Xy => "12",
            Component::Yy => "22",
        }
    }
}

/// Symmetric 2x2 tensor storing the upper triangle only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor { xx, xy, yy }
    }

    /// Scalar value embedded as a 1D tensor.
    pub fn scalar(v: f64) -> Self {
        SymTensor {
            xx: v,
            xy: 0.0,
            yy: 0.0,
        }
    }

    /// Identity in `dim` dimensions (1D leaves `yy` at zero).
    pub fn identity(dim: usize) -> Self {
        if dim == 1 {
            Self::scalar(1.0)
        } else {
            SymTensor::new(1.0, 0.0, 1.0)
        }
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Xx => self.xx,
            Component::Xy => self.xy,
            Component::Yy => self.yy,
        }
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2([[self.xx, self.xy], [self.xy, self.yy]])
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor::new(s * self.xx, s * self.xy, s * self.yy)
    }

    /// Congruence `L Z Lᵀ`, symmetric by construction.
    pub fn congruence(&self, l: &Mat2) -> SymTensor {
        let a = l.0;
        let lz = *l * self.to_mat();
        let m = lz.0;
        SymTensor::new(
            m[0][0] * a[0][0] + m[0][1] * a[0][1],
            m[0][0] * a[1][0] + m[0][1] * a[1][1],
            m[1][0] * a[1][0] + m[1][1] * a[1][1],
        )
    }

    /// `G Z + Z Gᵀ`, the stretching term of the upper-convected derivative.
    pub fn stretch(&self, g: &Mat2) -> SymTensor {
        let gz = (*g * self.to_mat()).0;
        SymTensor::new(2.0 * gz[0][0], gz[0][1] + gz[1][0], 2.0 * gz[1][1])
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor> for f64 {
    type Output = SymTensor;
    fn mul(self, t: SymTensor) -> SymTensor {
        t.scale(self)
    }
}
