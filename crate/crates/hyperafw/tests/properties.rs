use proptest::prelude::*;

use hyperafw::adaptivity::mark_cells;
use hyperafw::fe::make_quadrature;
use hyperafw::mesh::{build_geometry, refine, Domain};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_keeps_the_mesh_conforming(picks in proptest::collection::vec(0usize..10_000, 1..12), rounds in 1usize..4) {
        let mut mesh = build_geometry(Domain::LShape, 0.5).unwrap();
        let area = mesh.total_area();
        let angle = mesh.min_angle();
        for _ in 0..rounds {
            let marked: Vec<usize> = picks.iter().map(|p| p % mesh.num_cells()).collect();
            let before = mesh.num_cells();
            mesh = refine(&mesh, &marked).mesh;
            prop_assert!(mesh.num_cells() >= before + 3);
        }
        prop_assert!(mesh.conformity_audit());
        prop_assert!((mesh.total_area() - area).abs() < 1e-12 * area);
        // Bisection produces finitely many similarity classes.
        prop_assert!(mesh.min_angle() >= angle / 4.0);
    }

    #[test]
    fn marking_is_a_minimal_bulk_set(eta in proptest::collection::vec(0.0f64..10.0, 1..60), theta in 0.05f64..1.0) {
        let total: f64 = eta.iter().map(|e| e * e).sum();
        prop_assume!(total > 0.0);
        let marked = mark_cells(&eta, theta);
        let sum: f64 = marked.iter().map(|&c| eta[c] * eta[c]).sum();
        prop_assert!(sum >= theta * total * (1.0 - 1e-12));
        let smallest = marked.iter().map(|&c| eta[c] * eta[c]).fold(f64::INFINITY, f64::min);
        prop_assert!(sum - smallest < theta * total);
        let unmarked_max = (0..eta.len()).filter(|c| !marked.contains(c)).map(|c| eta[c]).fold(0.0, f64::max);
        prop_assert!(marked.iter().all(|&c| eta[c] >= unmarked_max));
    }

    #[test]
    fn quadrature_integrates_monomials_exactly(degree in 1usize..=12, i in 0usize..=12, j in 0usize..=12) {
        prop_assume!(i + j <= degree);
        let rule = make_quadrature(degree).unwrap();
        // Mean over the reference triangle of x^i y^j is 2 i! j! / (i + j + 2)!.
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let exact = 2.0 * fact(i) * fact(j) / fact(i + j + 2);
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(b, w)| w * b[1].powi(i as i32) * b[2].powi(j as i32)).sum();
        prop_assert!((q - exact).abs() <= 1e-13 * exact.max(1e-3));
    }
}
