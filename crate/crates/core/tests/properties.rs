use proptest::prelude::*;

use robin_tri::equilateral;
use robin_tri::fem;
use robin_tri::geometry::TriangleParams;
use robin_tri::scan::{self, Row, ScanMode, ScanResult};
use robin_tri::trial;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_map_sends_reference_to_target(a in -3.0..3.0f64, c in 0.2..3.0f64, area in 0.1..4.0f64) {
        let p = TriangleParams::new(a, c, area).unwrap();
        let eq = TriangleParams::equilateral(area).unwrap();
        let map = p.affine_map();
        prop_assert!((map.metric_determinant() - 1.0).abs() < 1e-10);
        for (v0, v) in eq.vertices().iter().zip(p.vertices()) {
            let w = map.apply(*v0);
            prop_assert!((w - v).norm() < 1e-12 * (1.0 + v.norm()));
            prop_assert!((map.apply_inverse(w) - *v0).norm() < 1e-12 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn geometry_is_consistent(a in -4.0..4.0f64, c in 0.1..4.0f64, area in 0.1..4.0f64) {
        let g = TriangleParams::new(a, c, area).unwrap().geometry();
        prop_assert!((g.signed_area() - area).abs() < 1e-12 * area);
        prop_assert!((g.angles.iter().sum::<f64>() - std::f64::consts::PI).abs() < 1e-12);
        prop_assert!((g.side_lengths.iter().sum::<f64>() - g.perimeter).abs() < 1e-12 * g.perimeter);
        // the equilateral triangle has the smallest perimeter at fixed area
        prop_assert!(g.perimeter_normalizer() <= 1.0 + 1e-12);
    }

    #[test]
    fn equilateral_solution_is_consistent(alpha in -40.0..-0.01f64, area in 0.05..5.0f64) {
        let sol = equilateral::solve_equilateral(alpha, area).unwrap();
        prop_assert!(sol.residuals().max_abs() < 1e-9);
        let eq = TriangleParams::equilateral(area).unwrap().geometry();
        // between the corner lower bound and the constant trial function
        prop_assert!(sol.lambda0 < alpha * eq.perimeter / area + 1e-9);
        prop_assert!(sol.lambda0 >= trial::lambda0_lower_bound(alpha, area).unwrap() - 1e-9);
        // scaling: λ(α, S) = λ(α√(S/S'), S')/(S/S')
        let r = 1.7f64;
        let scaled = equilateral::lambda0(alpha * r.sqrt(), area / r).unwrap() / r;
        prop_assert!((scaled - sol.lambda0).abs() < 1e-9 * sol.lambda0.abs());
    }

    #[test]
    fn lambda0_increases_with_area(alpha in -6.0..-0.05f64, s in 0.1..2.0f64, ds in 0.05..1.0f64) {
        let small = equilateral::lambda0(alpha, s).unwrap();
        let large = equilateral::lambda0(alpha, s + ds).unwrap();
        prop_assert!(large > small);
    }

    #[test]
    fn trial_quantities_are_even_in_a(a in 0.01..3.0f64, c in 0.2..3.0f64, alpha in -8.0..-0.05f64) {
        let area = 1.0 / 3f64.sqrt();
        let p = TriangleParams::new(a, c, area).unwrap();
        let m = TriangleParams::new(-a, c, area).unwrap();
        let lambda0 = equilateral::lambda0(alpha, area).unwrap();
        let (bp, bm) = (trial::constant_bound_with(alpha, &p, lambda0), trial::constant_bound_with(alpha, &m, lambda0));
        prop_assert!((bp.bound - bm.bound).abs() <= 1e-12 * bp.bound.abs());
        prop_assert!((trial::metric_excess(&p) - trial::metric_excess(&m)).abs() <= 1e-12);
    }

    #[test]
    fn constant_bound_dominates_lambda0_at_equilateral(alpha in -20.0..-0.01f64, area in 0.1..4.0f64) {
        let eq = TriangleParams::equilateral(area).unwrap();
        let lambda0 = equilateral::lambda0(alpha, area).unwrap();
        prop_assert!(!trial::constant_bound_with(alpha, &eq, lambda0).verdict);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(prop::num::f64::ANY, 1..40), verdict in any::<Option<bool>>()) {
        let result = ScanResult {
            mode: ScanMode::GCurve,
            header: vec!["test".into()],
            columns: (0..values.len()).map(|k| format!("v{k}")).collect(),
            rows: vec![Row { values: values.clone(), verdict, error: Some("cell, failed\\nhere".into()) }],
        };
        let (cols, rows) = scan::parse_csv(&scan::to_csv(&result)).unwrap();
        prop_assert_eq!(cols, result.columns);
        prop_assert_eq!(rows[0].verdict, verdict);
        prop_assert!(rows[0].error.is_some());
        for (x, y) in rows[0].values.iter().zip(&values) {
            prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn meshes_tile_the_triangle(a in -3.0..3.0f64, c in 0.2..3.0f64, level in 1u32..5, beta in 0.0..3.0f64) {
        let area = 1.0 / 3f64.sqrt();
        let tri = TriangleParams::new(a, c, area).unwrap().geometry();
        for mesh in [fem::build_mesh(&tri, level).unwrap(), fem::build_solver_mesh(&tri, level, [beta, 0.0, 0.0]).unwrap()] {
            let mut total = 0.0;
            for e in &mesh.elements {
                let [p, q, r] = e.map(|k| mesh.nodes[k]);
                let signed = 0.5 * (q - p).cross(r - p);
                prop_assert!(signed > 0.0);
                total += signed;
            }
            prop_assert!((total - area).abs() < 1e-12 * area);
            let boundary: f64 = mesh.boundary_edges.iter().map(|(e, _)| (mesh.nodes[e[1]] - mesh.nodes[e[0]]).norm()).sum();
            prop_assert!((boundary - tri.perimeter).abs() < 1e-12 * tri.perimeter);
        }
        let uniform = fem::build_mesh(&tri, level).unwrap();
        prop_assert_eq!(uniform.elements.len(), 4usize.pow(level));
    }

    #[test]
    fn fem_eigenvalue_is_below_constant_bound(a in -2.0..2.0f64, c in 0.3..1.5f64, alpha in -3.0..-0.1f64) {
        let area = 1.0 / 3f64.sqrt();
        let p = TriangleParams::new(a, c, area).unwrap();
        let geom = p.geometry();
        let r = fem::eigen_at_level(&geom, alpha, 5, fem::auto_grading(&geom, alpha)).unwrap();
        // constants lie in the P1 space, so the discrete minimum is below their quotient
        let constant = alpha * geom.perimeter / area;
        prop_assert!(r.lambda1 <= constant + 1e-9 * constant.abs());
    }
}

#[test]
fn conforming_fem_approaches_from_above() {
    let area = 1.0 / 3f64.sqrt();
    let tri = TriangleParams::equilateral(area).unwrap().geometry();
    for alpha in [-0.3, -2.0, -6.0] {
        let l0 = equilateral::lambda0(alpha, area).unwrap();
        let levels: Vec<f64> = (2..=6)
            .map(|k| fem::eigen_at_level(&tri, alpha, k, [0.0; 3]).unwrap().lambda1)
            .collect();
        assert!(levels.iter().all(|&l| l >= l0), "alpha={alpha}: {levels:?} vs {l0}");
        assert!(levels.windows(2).all(|w| w[1] < w[0]), "alpha={alpha}: {levels:?}");
    }
}
