mod common;

use chemopattern::discretization::{build_laplacian, chemotaxis_divergence, spatial_mean};
use chemopattern::Grid2D;
use common::DenseGrid;
use proptest::prelude::*;

fn grid_and_fields(max: usize) -> impl Strategy<Value = (Grid2D, Vec<f64>, Vec<f64>)> {
    (3usize..=max, 3usize..=max, 0.5..30.0f64, 0.5..30.0f64).prop_flat_map(|(nx, ny, lx, ly)| {
        let n = nx * ny;
        (
            Just(Grid2D::new(lx, ly, nx, ny).unwrap()),
            proptest::collection::vec(-2.0..2.0f64, n),
            proptest::collection::vec(0.0..3.0f64, n),
        )
    })
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn laplacian_conserves_mass((grid, u, _) in grid_and_fields(12)) {
        let au = build_laplacian(&grid).mul_vec(&u);
        let mean = spatial_mean(&au, &grid).unwrap();
        let scale = norm_inf(&au).max(norm_inf(&u));
        prop_assert!(mean.abs() <= 1e-12 * scale, "{mean:e}");
    }

    #[test]
    fn chemotaxis_conserves_mass((grid, u, v) in grid_and_fields(12)) {
        let chi = chemotaxis_divergence(&u, &v, &grid).unwrap();
        let mean = spatial_mean(&chi, &grid).unwrap();
        prop_assert!(mean.abs() <= 1e-12 * norm_inf(&chi).max(1.0), "{mean:e}");
    }

    #[test]
    fn chemotaxis_matches_independent_oracle((grid, u, v) in grid_and_fields(6)) {
        let lib = chemotaxis_divergence(&u, &v, &grid).unwrap();
        let dg = DenseGrid::new(grid.lx(), grid.ly(), grid.nx(), grid.ny());
        let want = dg.chemotaxis(&u, &v);
        let scale = norm_inf(&want).max(1e-300);
        for (a, b) in lib.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-13 * scale);
        }
    }
}

#[test]
fn laplacian_equals_dense_assembly() {
    for nx in 3..=5 {
        for ny in 3..=5 {
            let grid = Grid2D::new(1.5, 2.5, nx, ny).unwrap();
            let lib = build_laplacian(&grid).to_dense();
            let want = DenseGrid::new(1.5, 2.5, nx, ny).laplacian();
            assert_eq!(lib, want, "{nx}x{ny}");
        }
    }
}

#[test]
fn laplacian_of_constant_is_zero_and_mean_of_constant_is_itself() {
    let grid = Grid2D::new(4.0, 3.0, 7, 5).unwrap();
    let c = vec![2.5; grid.len()];
    assert!(norm_inf(&build_laplacian(&grid).mul_vec(&c)) < 1e-13);
    assert!((spatial_mean(&c, &grid).unwrap() - 2.5).abs() < 1e-15);
}
