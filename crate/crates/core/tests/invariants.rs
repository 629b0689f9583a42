use proptest::prelude::*;

use akt_core::fractional::{average_field, periodicity_check, sample_shifts, GridSpec};
use akt_core::pointprocess::{palm, sample_binomial, sample_poisson};
use akt_core::transport::{run_akt, VOLUME_RTOL};
use akt_core::verify::shift_formula_check;
use akt_core::{Cuboid, Point};

fn shift_in(d: usize, side: f64, raw: &[f64]) -> Point {
    Point(raw.iter().take(d).map(|x| x * side).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn cells_have_equal_volume_and_hold_their_point(
        d in 1usize..=3,
        levels in 1u32..=3,
        n in 1usize..40,
        seed in any::<u64>(),
        raw in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let side = 2f64.powi(levels as i32);
        let v = shift_in(d, 1.0, &raw);
        let base = sample_binomial(&Cuboid::cube(d, side), n, seed).unwrap();
        let config = base.translated(&v.0);
        let report = run_akt(&config, &v, levels).unwrap();
        let check = report.equipartition_error();
        prop_assert!(check.passes(VOLUME_RTOL), "{}", check.describe(&report));
        prop_assert_eq!(report.straddle_violations, 0);
        prop_assert_eq!(report.containment_violations, 0);
        for c in report.owned_cells() {
            let p = c.carried_point.as_ref().unwrap();
            prop_assert!(c.bounds.contains(p), "carried point {:?} outside {}", p.0, c.bounds);
        }
    }

    #[test]
    fn origin_cell_is_periodic_in_the_shift(
        d in 2usize..=3,
        levels in 1u32..=3,
        seed in any::<u64>(),
        raw in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let side = 2f64.powi(levels as i32);
        let domain = Cuboid::new(vec![-side; d], vec![side; d]).unwrap();
        let config = palm(&sample_poisson(&domain, 1.0, seed).unwrap()).unwrap();
        let v = shift_in(d, side, &raw);
        prop_assert!(periodicity_check(&config, &v, levels).unwrap());
    }

    #[test]
    fn recorded_shifts_follow_the_closed_form(
        d in 2usize..=3,
        levels in 1u32..=3,
        seed in any::<u64>(),
        raw in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let side = 2f64.powi(levels as i32);
        let v = shift_in(d, side, &raw);
        let top = akt_core::transport::TopBox::containing(&v, levels, &Point::origin(d)).unwrap();
        let config = palm(&sample_poisson(&top.bounds, 1.0, seed).unwrap()).unwrap();
        let report = akt_core::transport::run_in_box(&config, &top, &Default::default()).unwrap();
        let check = shift_formula_check(&report).unwrap();
        prop_assert!(check.max_step_error <= 1e-12, "{check:?}");
        prop_assert!(check.max_stage_error <= 1e-12, "{check:?}");
    }

    #[test]
    fn translating_points_and_shift_translates_cells(
        levels in 1u32..=3,
        n in 1usize..30,
        seed in any::<u64>(),
        t in proptest::collection::vec(-50.0f64..50.0, 2),
        raw in proptest::collection::vec(0.0f64..1.0, 2),
    ) {
        let side = 2f64.powi(levels as i32);
        let v = shift_in(2, 1.0, &raw);
        let config = sample_binomial(&Cuboid::cube(2, side), n, seed).unwrap().translated(&v.0);
        let moved_v = v.translated(&t);
        let a = run_akt(&config, &v, levels).unwrap();
        let b = run_akt(&config.translated(&t), &moved_v, levels).unwrap();
        let cells = |r: &akt_core::transport::RunReport| {
            let mut c: Vec<_> = r.owned_cells().filter(|c| c.volume() > 0.0).cloned().collect();
            c.sort_by_key(|c| c.owner_id);
            c
        };
        let (ca, cb) = (cells(&a), cells(&b));
        prop_assert_eq!(ca.len(), cb.len());
        for (x, y) in ca.iter().zip(&cb) {
            prop_assert_eq!(x.owner_id, y.owner_id);
            prop_assert!(x.bounds.translated(&t).max_abs_diff(&y.bounds) < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    #[test]
    fn fractional_weights_sum_to_one(seed in any::<u64>(), levels in 2u32..=3) {
        let side = 2f64.powi(levels as i32);
        let domain = Cuboid::new(vec![-(side + 1.0); 2], vec![side + 1.0; 2]).unwrap();
        let config = palm(&sample_poisson(&domain, 1.0, seed).unwrap()).unwrap();
        let grid = GridSpec::new(Cuboid::new(vec![-1.0; 2], vec![1.0; 2]).unwrap(), 0.25).unwrap();
        let field = average_field(&config, levels, &sample_shifts(2, levels, 8, seed), &grid).unwrap();
        prop_assert!(field.audit().passes(1e-9), "{:?}", field.audit());
    }
}

#[test]
fn single_point_is_periodic_for_any_shift() {
    let domain = Cuboid::new(vec![-8.0; 2], vec![8.0; 2]).unwrap();
    let config = palm(&akt_core::Configuration::new(domain, vec![], 0).unwrap()).unwrap();
    for v in [[0.0, 0.0], [0.3, 3.9], [7.99, 1.5]] {
        assert!(periodicity_check(&config, &Point(v.to_vec()), 3).unwrap());
    }
}

#[test]
fn non_period_shift_changes_an_asymmetric_configuration() {
    let domain = Cuboid::new(vec![-16.0; 2], vec![16.0; 2]).unwrap();
    let config = palm(&sample_poisson(&domain, 1.0, 41).unwrap()).unwrap();
    let v = Point(vec![0.25, 0.5]);
    let base = akt_core::fractional::run_origin_box(&config, &v, 4).unwrap();
    let base_cell = akt_core::transport::origin_cell(&base).unwrap().bounds.clone();
    let mut differs = 0;
    for k in 1..10 {
        let u = Point(vec![0.25 + 0.37 * k as f64, 0.5 + 0.11 * k as f64]);
        let r = akt_core::fractional::run_origin_box(&config, &u, 4).unwrap();
        let c = &akt_core::transport::origin_cell(&r).unwrap().bounds;
        if c.max_abs_diff(&base_cell) > 1e-12 {
            differs += 1;
        }
    }
    assert!(differs > 0);
}
