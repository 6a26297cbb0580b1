//! Density normalization and identity checks: everything here is pure
//! quadrature against the closed-form kernels, no Monte Carlo.

use rand::Rng;
use serde_json::Map;

use crate::dyson;
use crate::nonint;
use crate::numerics::{det2, quad_ordered_pairs, quadrature_1d, SeedSpec};
use crate::paths;
use crate::report::{timed_check, CheckReport};
use crate::suites::SuiteScale;

pub fn run(seed: SeedSpec, _scale: SuiteScale) -> Vec<CheckReport> {
    vec![
        dbm_entrance_normalization(seed),
        nibm_density_normalization(seed),
        nibb_one_point_normalization(seed),
        bessel_bridge_one_point_normalization(seed),
        harmonicity_identity(seed),
        bridge_to_dbm_ratio_bound(seed),
        gibbs_weight_reference_value(seed),
    ]
}

fn dbm_entrance_normalization(seed: SeedSpec) -> CheckReport {
    timed_check("dbm_entrance_normalization", seed, || {
        let mass = quad_ordered_pairs(
            |y1, y2| dyson::dbm_entrance(1.0, y1, y2).unwrap_or(0.0),
            12.0,
            -12.0,
            12.0,
            1e-9,
        )
        .unwrap_or(f64::NAN);
        let err = (mass - 1.0).abs();
        (err < 1e-6, err, "|mass - 1| < 1e-6 at t = 1".into(), Map::new())
    })
}

fn nibm_density_normalization(seed: SeedSpec) -> CheckReport {
    timed_check("nibm_density_normalization", seed, || {
        let mass = quad_ordered_pairs(
            |y1, y2| nonint::nibm_density(0.5, y1, y2).unwrap_or(0.0),
            10.0,
            -10.0,
            10.0,
            1e-8,
        )
        .unwrap_or(f64::NAN);
        let err = (mass - 1.0).abs();
        (err < 1e-6, err, "|mass - 1| < 1e-6 at t = 0.5".into(), Map::new())
    })
}

fn nibb_one_point_normalization(seed: SeedSpec) -> CheckReport {
    timed_check("nibb_one_point_normalization", seed, || {
        let dens = nonint::nibb_one_point(0.5, 1.0, -1.0).unwrap();
        let mass = quad_ordered_pairs(dens, 10.0, -10.0, 10.0, 1e-8).unwrap_or(f64::NAN);
        let err = (mass - 1.0).abs();
        (
            err < 1e-6,
            err,
            "|mass - 1| < 1e-6 at t = 0.5, z = (1, -1)".into(),
            Map::new(),
        )
    })
}

fn bessel_bridge_one_point_normalization(seed: SeedSpec) -> CheckReport {
    timed_check("bessel_bridge_one_point_normalization", seed, || {
        let dens = paths::bessel_bridge_one_point(0.5, 1.0).unwrap();
        let mass = quadrature_1d(dens, 0.0, 14.0, 1e-9).unwrap_or(f64::NAN);
        let err = (mass - 1.0).abs();
        (
            err < 1e-6,
            err,
            "|mass - 1| < 1e-6 at t = 0.5, a = 1".into(),
            Map::new(),
        )
    })
}

fn harmonicity_identity(seed: SeedSpec) -> CheckReport {
    timed_check("harmonicity_identity", seed, || {
        // int (y1 - y2) det(p_s(x_i - y_j)) dy = x1 - x2, at 5 seeded
        // random tuples.
        let mut rng = seed.rng_for(11);
        let mut worst = 0.0f64;
        let mut details = Map::new();
        for k in 0..5 {
            let x2 = -2.0 + 3.0 * rng.random::<f64>();
            let x1 = x2 + 0.2 + 2.0 * rng.random::<f64>();
            let s = 0.1 + 1.5 * rng.random::<f64>();
            let span = 10.0 + x1.abs().max(x2.abs());
            let integral = quad_ordered_pairs(
                |y1, y2| (y1 - y2) * det2(x1, x2, y1, y2, s),
                span,
                -span,
                span,
                1e-8,
            )
            .unwrap_or(f64::NAN);
            let err = (integral - (x1 - x2)).abs();
            worst = worst.max(err);
            details.insert(format!("tuple{k}_err"), err.into());
        }
        (worst < 1e-6, worst, "max |integral - (x1 - x2)| < 1e-6 over 5 tuples".into(), details)
    })
}

fn bridge_to_dbm_ratio_bound(seed: SeedSpec) -> CheckReport {
    timed_check("bridge_to_dbm_ratio_bound", seed, || {
        // The one-point bridge density over the entrance law stays below
        // 2 e^{M^2} / (1 - delta)^2 for t <= delta, endpoints in [-M, M].
        let (m, delta) = (1.0f64, 0.5f64);
        let ceiling = 2.0 * (m * m).exp() / (1.0 - delta).powi(2);
        let mut worst = 0.0f64;
        for t in [0.02, 0.1, 0.25, 0.4, 0.5] {
            for (a1, a2) in [(1.0, -1.0), (0.6, -0.9), (0.9, 0.6), (-0.3, -0.9), (1.0, 0.98)] {
                let bridge = nonint::nibb_one_point(t, a1, a2).unwrap();
                for (y1, y2) in [
                    (0.5, -0.5),
                    (1.5, 0.7),
                    (0.02, -0.01),
                    (3.0, -3.0),
                    (0.3, 0.29),
                ] {
                    let den = dyson::dbm_entrance(t, y1, y2).unwrap();
                    if den > 0.0 {
                        worst = worst.max(bridge(y1, y2) / den);
                    }
                }
            }
        }
        let mut details = Map::new();
        details.insert("ceiling".into(), ceiling.into());
        (
            worst <= ceiling && worst > 0.0,
            worst,
            format!("sup ratio <= 2 e^(M^2)/(1-delta)^2 = {ceiling:.4}"),
            details,
        )
    })
}

fn gibbs_weight_reference_value(seed: SeedSpec) -> CheckReport {
    timed_check("gibbs_weight_reference_value", seed, || {
        // Touching flat curves on [0, 1] at t = 1: weight exp(-1).
        let grid = paths::Grid::uniform(0.0, 1.0, 1000).unwrap();
        let zeros = paths::Path::new(grid.clone(), vec![0.0; grid.len()], 1.0).unwrap();
        let w = crate::decomp::gibbs_weight(&crate::decomp::GibbsWeightInput {
            f: &zeros,
            g: &zeros,
            t: 1.0,
            interval: (0.0, 1.0),
        })
        .unwrap_or(f64::NAN);
        let err = (w - (-1.0f64).exp()).abs();
        (err < 1e-10, err, "|weight - exp(-1)| < 1e-10".into(), Map::new())
    })
}
