use std::f64::consts::PI;

use dcsf::metric::ConicalMetric;
use dcsf::sector::{from_sector, hausdorff, to_sector};
use dcsf::Vec2;
use proptest::prelude::*;

proptest! {
    #[test]
    fn sector_map_round_trips(beta in -0.95f64..0.0, r in 1e-3f64..10.0, t in 1e-6f64..(2.0 * PI - 1e-6)) {
        let z = Vec2::polar(r, t);
        let w = to_sector(z, beta).unwrap();
        prop_assert!((w.norm() - r.powf(1.0 + beta) / (1.0 + beta)).abs() <= 1e-12 * w.norm());
        prop_assert!(from_sector(w, beta).unwrap().dist(z) <= 1e-11 * r);
    }

    #[test]
    fn hausdorff_is_symmetric_and_shift_bounded(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..12),
        dx in -0.5f64..0.5,
        dy in -0.5f64..0.5,
    ) {
        let a: Vec<Vec2> = a.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let shift = Vec2::new(dx, dy);
        let b: Vec<Vec2> = a.iter().map(|p| *p + shift).collect();
        let h = hausdorff(&a, &b);
        prop_assert_eq!(h, hausdorff(&b, &a));
        prop_assert!(h <= shift.norm() + 1e-15);
        prop_assert!(hausdorff(&a, &a) <= 1e-15);
    }

    #[test]
    fn conformal_factor_is_a_power_of_the_radius(beta in -0.95f64..0.0, r in 1e-3f64..10.0, t in 0.0f64..(2.0 * PI)) {
        let m = ConicalMetric::flat_cone(beta).unwrap();
        let l = m.conformal_factor_at(Vec2::polar(r, t), None).unwrap();
        prop_assert!((l - r.powf(2.0 * beta)).abs() <= 1e-12 * l);
    }
}
