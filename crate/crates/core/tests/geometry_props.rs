mod common;

use common::*;
use equipart::geometry::{power_diagram, ConvexPolygon, GeneratorSet, Point};
use proptest::prelude::*;

fn power(x: Point, gens: &GeneratorSet, i: usize) -> f64 {
    (x - gens.position(i)).norm_sq() - gens.weight(i)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cells_cover_region(seed in any::<u64>(), m in 2usize..=10) {
        let mut r = rng(seed);
        let region = random_polygon(&mut r);
        let gens = random_generators(&mut r, &region, m, 0.05, 1e-3);
        let d = power_diagram(&region, &gens).unwrap();
        let total: f64 = d.cells().iter().map(ConvexPolygon::area).sum();
        prop_assert!((total - region.area()).abs() <= 1e-9 * region.area(), "{total} vs {}", region.area());
        for cell in d.cells().iter().filter(|c| !c.is_empty()) {
            prop_assert!(ConvexPolygon::new(cell.vertices().to_vec()).is_ok());
        }
    }
}

proptest! {
    #[test]
    fn uniform_weight_shift_keeps_cells(seed in any::<u64>(), m in 2usize..=10) {
        let mut r = rng(seed);
        let region = random_polygon(&mut r);
        let gens = dyadic_weights(&random_generators(&mut r, &region, m, 0.05, 1e-3));
        let base = power_diagram(&region, &gens).unwrap();
        for t in [-5.0, 1.0, 17.3] {
            let shifted = power_diagram(&region, &gens.shifted(t)).unwrap();
            for (a, b) in base.cells().iter().zip(shifted.cells()) {
                prop_assert_eq!(a.len(), b.len());
                for (p, q) in a.vertices().iter().zip(b.vertices()) {
                    prop_assert!(p.distance(*q) <= 1e-12, "t={t}: {p:?} vs {q:?}");
                }
            }
        }
    }

    #[test]
    fn equal_weights_give_perpendicular_bisectors(seed in any::<u64>(), m in 2usize..=10) {
        let mut r = rng(seed);
        let region = random_polygon(&mut r);
        let gens = random_generators(&mut r, &region, m, 0.0, 1e-3);
        let d = power_diagram(&region, &gens).unwrap();
        for i in 0..m {
            prop_assert!(d.cell(i).contains(gens.position(i)));
        }
        for f in d.faces() {
            let (gi, gj) = (gens.position(f.i), gens.position(f.j));
            // Both endpoints lie on the perpendicular bisector of g_i g_j.
            let mid = gi.lerp(gj, 0.5);
            let u = (gj - gi) / gi.distance(gj);
            prop_assert!((f.a - mid).dot(u).abs() <= 1e-12);
            prop_assert!((f.b - mid).dot(u).abs() <= 1e-12);
        }
    }
}

/// Points sampled in the region fall in one cell, and that cell minimizes
/// the power distance.
#[test]
fn sampled_points_lie_in_their_power_cell() {
    let mut r = rng(2024);
    let mut samples = 0;
    for _ in 0..100 {
        let region = random_polygon(&mut r);
        let m = rand::Rng::random_range(&mut r, 2..=10);
        let gens = random_generators(&mut r, &region, m, 0.05, 1e-3);
        let d = power_diagram(&region, &gens).unwrap();
        for _ in 0..10_000 {
            let x = random_point_in(&mut r, &region);
            let owners: Vec<usize> = (0..m).filter(|&i| d.cell(i).contains(x)).collect();
            let best = (0..m).map(|i| power(x, &gens, i)).fold(f64::INFINITY, f64::min);
            assert!(!owners.is_empty(), "{x:?} in no cell");
            for &i in &owners {
                assert!(power(x, &gens, i) <= best + 1e-9, "{x:?} in cell {i} but not its nearest");
            }
            if owners.len() > 1 {
                let ties = (0..m).filter(|&i| power(x, &gens, i) <= best + 1e-9).count();
                assert!(ties > 1, "{x:?} in several cells without a tie");
            }
            samples += 1;
        }
    }
    assert_eq!(samples, 1_000_000);
}

/// A heavy generator can swallow a light one's cell and leave another
/// generator outside its own cell; coverage must survive both.
#[test]
fn empty_cells_and_outside_generators() {
    let sq = ConvexPolygon::unit_square();
    let gens = GeneratorSet::new(
        vec![Point::new(0.3, 0.5), Point::new(0.4, 0.5), Point::new(0.8, 0.5)],
        vec![0.3, 0.0, 0.05],
    )
    .unwrap();
    let d = power_diagram(&sq, &gens).unwrap();
    assert!(d.cell(1).is_empty());
    let total: f64 = d.cells().iter().map(ConvexPolygon::area).sum();
    assert!((total - 1.0).abs() <= 1e-12);

    let gens = GeneratorSet::new(vec![Point::new(0.45, 0.5), Point::new(0.55, 0.5)], vec![0.0, 0.03]).unwrap();
    let d = power_diagram(&sq, &gens).unwrap();
    assert!(!d.cell(0).is_empty());
    assert!(!d.cell(0).contains(gens.position(0)));
    let total: f64 = d.cells().iter().map(ConvexPolygon::area).sum();
    assert!((total - 1.0).abs() <= 1e-12);
}

