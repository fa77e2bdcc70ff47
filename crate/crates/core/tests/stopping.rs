use mplsqr::stopping::{dp_first, oracle_optimal, CornerDetector, MengerCorner, DEFAULT_TAU};
use proptest::prelude::*;

/// Points on a dyadic grid so that translations by integers are exact.
fn l_curve() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1u32..200, 1u32..200), 5..40).prop_map(|steps| {
        let mut pts = Vec::with_capacity(steps.len());
        let (mut x, mut y) = (0.0f64, 0.0f64);
        for (dx, dy) in steps {
            x -= dx as f64 / 1024.0;
            y += dy as f64 / 1024.0;
            pts.push((x, y));
        }
        pts
    })
}

#[test]
fn monotone_errors_pick_last() {
    assert_eq!(oracle_optimal(&[0.9, 0.5, 0.3, 0.1]), Some(4));
    assert_eq!(oracle_optimal(&[0.5, 0.2, 0.3]), Some(2));
}

proptest! {
    #[test]
    fn corner_survives_translation(pts in l_curve(), sx in -50i32..50, sy in -50i32..50) {
        let shifted: Vec<_> = pts.iter().map(|&(x, y)| (x + sx as f64, y + sy as f64)).collect();
        let a = MengerCorner.corner(&pts).ok();
        let b = MengerCorner.corner(&shifted).ok();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn optimum_survives_monotone_maps(re in prop::collection::vec(1u32..5000, 1..60)) {
        let base: Vec<f64> = re.iter().map(|&v| v as f64).collect();
        let k = oracle_optimal(&base);
        let affine: Vec<f64> = base.iter().map(|v| 2.0 * v + 3.0).collect();
        let cubed: Vec<f64> = base.iter().map(|v| v * v * v).collect();
        let logged: Vec<f64> = base.iter().map(|v| v.ln()).collect();
        prop_assert_eq!(oracle_optimal(&affine), k);
        prop_assert_eq!(oracle_optimal(&cubed), k);
        prop_assert_eq!(oracle_optimal(&logged), k);
    }

    #[test]
    fn discrepancy_picks_first_crossing(
        drops in prop::collection::vec(0.5f64..1.0, 1..80),
        level in 1e-6f64..1.0,
    ) {
        let mut phi = Vec::with_capacity(drops.len());
        let mut r = 1.0;
        for d in drops {
            r *= d;
            phi.push(r);
        }
        let bound = DEFAULT_TAU * level;
        match dp_first(&phi, level, DEFAULT_TAU).unwrap() {
            Some(k1) => {
                prop_assert!(k1 >= 1);
                prop_assert!(phi[k1 - 1] <= bound);
                prop_assert!(phi[..k1 - 1].iter().all(|&p| p > bound));
            }
            None => prop_assert!(phi.iter().all(|&p| p > bound)),
        }
    }
}
