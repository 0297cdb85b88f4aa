use std::sync::Arc;

use approx::assert_abs_diff_eq;
use gld_core::{
    build_grid, deformation_matrix, deformation_oracle, flow_map_oracle, index_indicator,
    interpolate, interpolate_scalar, solve_model, stencil, upwind_point, AnalyticVelocity,
    InterpOrder, ManufacturedProblem, Mat2, Model, Point, ProblemData, SchemeConfig, SymTensor,
    SymTensorField, EXAMPLE_NAMES, VELOCITY_NAMES,
};
use proptest::prelude::*;

fn order_strategy() -> impl Strategy<Value = InterpOrder> {
    prop_oneof![Just(InterpOrder::Linear), Just(InterpOrder::Quadratic)]
}

proptest! {
    #[test]
    fn index_indicator_brackets(s in -0.5f64..1.5, beta in 0.1f64..4.0, n0 in 1usize..400) {
        let i = index_indicator(s * beta, 0.0, beta, n0).unwrap();
        prop_assert!(i <= n0);
        let delta = beta / n0 as f64;
        let s = s * beta;
        if s > 0.0 && s < beta && i < n0 {
            prop_assert!(i as f64 * delta <= s && s < (i + 1) as f64 * delta);
        }
        if s <= 0.0 {
            prop_assert_eq!(i, 0);
        }
        if s >= beta {
            prop_assert_eq!(i, n0);
        }
    }

    #[test]
    fn index_indicator_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, n0 in 1usize..300) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(index_indicator(lo, 0.0, 1.0, n0).unwrap() <= index_indicator(hi, 0.0, 1.0, n0).unwrap());
    }

    #[test]
    fn weights_partition_unity(
        x in 0.0f64..=1.0,
        y in 0.0f64..=1.0,
        half in 1usize..40,
        dim in 1usize..=2,
        order in order_strategy(),
    ) {
        let grid = build_grid(dim, &[1.0, 2.5][..dim], &[2 * half, 2 * half + 2][..dim], order).unwrap();
        let st = stencil(&grid, [x, y * 2.5], order).unwrap();
        let sum: f64 = st.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-13, "sum = {sum}");
    }

    #[test]
    fn interpolation_exact_at_nodes(
        seed in proptest::collection::vec(-5.0f64..5.0, 121),
        i in 0usize..=10,
        j in 0usize..=10,
        order in order_strategy(),
    ) {
        let grid = build_grid(2, &[1.0, 1.0], &[10, 10], order).unwrap();
        let idx = grid.index(i, j);
        let v = interpolate_scalar(&grid, &seed, grid.node(idx), order).unwrap();
        prop_assert!((v - seed[idx]).abs() <= 1e-13 * (1.0 + seed[idx].abs()));
    }

    #[test]
    fn reproduces_degree_p_polynomials(
        coef in proptest::collection::vec(-2.0f64..2.0, 6),
        x in 0.0f64..=1.0,
        y in 0.0f64..=1.0,
        order in order_strategy(),
    ) {
        let grid = build_grid(2, &[1.0, 1.0], &[8, 12], order).unwrap();
        let poly = |p: Point| match order {
            InterpOrder::Linear => coef[0] + coef[1] * p[0] + coef[2] * p[1] + coef[3] * p[0] * p[1],
            InterpOrder::Quadratic => {
                coef[0] + coef[1] * p[0] + coef[2] * p[1] + coef[3] * p[0] * p[1]
                    + coef[4] * p[0] * p[0] * p[1] * p[1] + coef[5] * p[1] * p[1]
            }
        };
        let field = SymTensorField::from_fn(grid, |p| SymTensor::new(poly(p), -poly(p), 2.0 * poly(p)));
        let v = interpolate(&field, [x, y], order).unwrap();
        let want = poly([x, y]);
        prop_assert!((v.xx - want).abs() <= 1e-13 * 16.0, "{} vs {}", v.xx, want);
        prop_assert!((v.xy + want).abs() <= 1e-13 * 16.0);
        prop_assert!((v.yy - 2.0 * want).abs() <= 2e-13 * 16.0);
    }

    #[test]
    fn congruence_matches_full_product(
        l in proptest::array::uniform4(-3.0f64..3.0),
        z in proptest::array::uniform3(-3.0f64..3.0),
    ) {
        let lm = Mat2::new(l[0], l[1], l[2], l[3]);
        let zt = SymTensor::new(z[0], z[1], z[2]);
        let full = (lm * zt.to_mat() * lm.transpose()).0;
        let c = zt.congruence(&lm);
        let scale = 1.0 + full.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!((c.xx - full[0][0]).abs() <= 1e-14 * scale);
        prop_assert!((c.yy - full[1][1]).abs() <= 1e-14 * scale);
        prop_assert!((c.xy - full[0][1]).abs() <= 1e-14 * scale);
        prop_assert!((c.xy - full[1][0]).abs() <= 1e-14 * scale);
        // One stored off-diagonal: the carried tensor is symmetric by construction.
        prop_assert_eq!(c.to_mat().0[0][1], c.to_mat().0[1][0]);
    }

    #[test]
    fn deformation_inverse_identity(
        x in 0.05f64..0.95,
        y in 0.05f64..0.95,
        t in 0.0f64..1.0,
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
        which in 0usize..VELOCITY_NAMES.len(),
    ) {
        let v = AnalyticVelocity::named(VELOCITY_NAMES[which]).unwrap();
        let x = if v.dim() == 1 { [x, 0.0] } else { [x, y] };
        let forward = deformation_oracle(x, t, t1, t2, &v, 200);
        let backward = deformation_oracle(x, t, t2, t1, &v, 200);
        let prod = (forward * backward).0;
        let id = Mat2::IDENTITY.0;
        for a in 0..2 {
            for b in 0..2 {
                prop_assert!((prod[a][b] - id[a][b]).abs() <= 1e-8, "{prod:?}");
            }
        }
    }

    #[test]
    fn velocity_gradients_match_finite_differences(
        x in 0.05f64..0.95,
        y in 0.05f64..0.95,
        t in 0.0f64..1.0,
        which in 0usize..VELOCITY_NAMES.len(),
    ) {
        let v = AnalyticVelocity::named(VELOCITY_NAMES[which]).unwrap();
        let h = 1e-6;
        let g = v.gradient([x, y], t).0;
        for k in 0..v.dim() {
            let mut p = [x, y];
            let mut m = [x, y];
            p[k] += h;
            m[k] -= h;
            let (up, um) = (v.velocity(p, t), v.velocity(m, t));
            for i in 0..v.dim() {
                let fd = (up[i] - um[i]) / (2.0 * h);
                prop_assert!((fd - g[i][k]).abs() <= 1e-7, "d u{i}/d x{k}: {fd} vs {}", g[i][k]);
            }
        }
    }

    /// Source term audit: `F` against the model equation evaluated with
    /// central differences of the exact solution.
    #[test]
    fn manufactured_source_satisfies_equation(
        x in 0.05f64..0.95,
        y in 0.05f64..0.95,
        t in 0.01f64..0.5,
        which in 0usize..EXAMPLE_NAMES.len(),
    ) {
        let problem = ManufacturedProblem::named(EXAMPLE_NAMES[which]).unwrap();
        let exact = problem.exact();
        let vel = problem.velocity();
        let dim = problem.dim();
        let p: Point = if dim == 1 { [x, 0.0] } else { [x, y] };
        let h = 1e-5;
        let z = |q: Point, s: f64| exact.value(q, s);
        let dzdt = (z(p, t + h) - z(p, t - h)).scale(0.5 / h);
        let u = vel.velocity(p, t);
        let mut convect = SymTensor::ZERO;
        for k in 0..dim {
            let (mut a, mut b) = (p, p);
            a[k] += h;
            b[k] -= h;
            convect = convect + (z(a, t) - z(b, t)).scale(0.5 * u[k] / h);
        }
        let g = vel.gradient(p, t);
        let uctd = dzdt + convect - z(p, t).stretch(&g);
        let want = match problem.model() {
            Model::PureUctd => uctd,
            Model::OldroydB { weissenberg, beta } => {
                z(p, t) + uctd.scale(weissenberg) - g.sym_part().scale(2.0 * (1.0 - beta))
            }
        };
        let f = problem.source(p, t);
        prop_assert!((f - want).max_abs() <= 1e-6, "{f:?} vs {want:?}");
    }
}

fn consistency_slope(err: impl Fn(f64) -> f64) -> f64 {
    let (e1, e2) = (err(0.02), err(0.01));
    assert!(e1 > 0.0 && e2 > 0.0);
    (e1 / e2).log2()
}

#[test]
fn upwind_point_consistency_against_flow_map() {
    for name in VELOCITY_NAMES {
        let v = AnalyticVelocity::named(name).unwrap();
        for x in [[0.3, 0.6], [0.7, 0.2], [0.55, 0.45]] {
            let x = if v.dim() == 1 { [x[0], 0.0] } else { x };
            let t = 0.5;
            let err = |dt: f64| {
                let y = upwind_point(x, v.velocity(x, t), dt, 1);
                let exact = flow_map_oracle(x, t, t - dt, &v, 400);
                ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
            };
            if err(0.02) < 1e-13 {
                continue; // upwind point exact for this field
            }
            let s = consistency_slope(err);
            assert!(s >= 1.8, "{name} at {x:?}: slope {s}");
        }
    }
}

#[test]
fn deformation_matrix_consistency_against_oracle() {
    for name in VELOCITY_NAMES {
        let v = AnalyticVelocity::named(name).unwrap();
        for x in [[0.3, 0.6], [0.7, 0.2], [0.55, 0.45]] {
            let x = if v.dim() == 1 { [x[0], 0.0] } else { x };
            let t = 0.5;
            let err = |dt: f64| {
                let l1 = deformation_matrix(&v.gradient(x, t), dt, 1).0;
                let exact = deformation_oracle(x, t, t - dt, t, &v, 400);
                (l1 - exact).max_abs()
            };
            if err(0.02) < 1e-13 {
                continue;
            }
            let s = consistency_slope(err);
            assert!(s >= 1.8, "{name} at {x:?}: slope {s}");
        }
    }
}

#[test]
fn zero_velocity_matches_brute_force_recursion() {
    let grid = build_grid(1, &[1.0], &[4], InterpOrder::Quadratic).unwrap();
    let source = |x: Point, t: f64| SymTensor::scalar((3.0 * x[0] - t).cos() + x[0] * t);
    let initial = |x: Point| SymTensor::scalar(1.0 + x[0] * x[0]);
    let data = ProblemData::new(
        AnalyticVelocity::zero(1),
        Arc::new(source),
        Arc::new(initial),
    );
    let dt = 0.05;
    for order in [InterpOrder::Linear, InterpOrder::Quadratic] {
        let config = SchemeConfig::new(order, dt, 1.0);
        let levels = solve_model(&data, &config, &grid).unwrap();
        assert_eq!(levels.len(), 21);

        let nodes: Vec<f64> = (0..5).map(|i| grid.node(i)[0]).collect();
        let mut z0: Vec<f64> = nodes.iter().map(|&x| initial([x, 0.0]).xx).collect();
        let mut z1: Vec<f64> = nodes
            .iter()
            .zip(&z0)
            .map(|(&x, z)| z + source([x, 0.0], dt).xx * dt)
            .collect();
        for (i, z) in z1.iter().enumerate() {
            assert_eq!(levels[1].get(i).xx, *z);
        }
        for (n, level) in levels.iter().enumerate().skip(2) {
            let t = n as f64 * dt;
            let z2: Vec<f64> = (0..5)
                .map(|i| {
                    z1[i] * (4.0 / 3.0) - z0[i] * (1.0 / 3.0)
                        + source([nodes[i], 0.0], t).xx * (2.0 * dt / 3.0)
                })
                .collect();
            for (i, z) in z2.iter().enumerate() {
                assert_eq!(level.get(i).xx, *z, "order {order:?} step {n} node {i}");
            }
            z0 = std::mem::replace(&mut z1, z2);
        }
    }
}

#[test]
fn interpolation_at_far_corner() {
    let grid = build_grid(2, &[1.0, 1.0], &[6, 6], InterpOrder::Quadratic).unwrap();
    let f = SymTensorField::from_fn(grid, |p| SymTensor::new(p[0], p[1], p[0] * p[1]));
    let v = interpolate(&f, [1.0, 1.0], InterpOrder::Quadratic).unwrap();
    assert_abs_diff_eq!(v.xx, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(v.yy, 1.0, epsilon = 1e-14);
}
