//! Decomposition checks: exact structural assertions on extractions,
//! matched-conditioning equality-in-law, and left/right independence.

use rayon::prelude::*;
use serde_json::Map;

use crate::decomp::{
    extract_joint, extract_single, refine_max_joint, refine_max_single, synth_joint, synth_single,
    JointBridgeParams, SingleBridgeParams,
};
use crate::numerics::SeedSpec;
use crate::paths::{sample_brownian_bridge, Grid};
use crate::report::{timed_check, CheckReport};
use crate::stats::{ks_two_sample, pearson_r};
use crate::suites::SuiteScale;

pub fn run(seed: SeedSpec, scale: SuiteScale) -> Vec<CheckReport> {
    vec![
        structural_assertions(seed, scale),
        single_equality_in_law(seed, scale),
        joint_equality_in_law(seed, scale),
        left_right_independence(seed, scale),
    ]
}

/// Grid resolution for decomposition checks: 2^10 points per unit time.
const GRID_STEPS: usize = 1 << 10;

fn structural_assertions(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("decomposition_structural_assertions", seed, || {
        let n = scale.count(100_000);
        let grid = Grid::uniform(0.0, 1.0, GRID_STEPS).unwrap();
        let failures: usize = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed.child(k as u64).rng();
                let mut bad = 0usize;
                // Single path: sides start at 0, stay nonnegative, and the
                // endpoint algebra is exact.
                let p = sample_brownian_bridge(&grid, 0.1, -0.2, 1.0, &mut rng).unwrap();
                let d = extract_single(&p);
                if d.left_incr.values[0] != 0.0
                    || d.right_incr.values[0] != 0.0
                    || d.left_incr.values.iter().any(|&v| v < 0.0)
                    || d.right_incr.values.iter().any(|&v| v < 0.0)
                    || *d.left_incr.values.last().unwrap() != d.max_data.value - p.values[0]
                    || *d.right_incr.values.last().unwrap()
                        != d.max_data.value - p.values.last().unwrap()
                {
                    bad += 1;
                }
                // Pair: components vanish at 0 and stay ordered.
                let p1 = sample_brownian_bridge(&grid, 0.0, 0.3, 1.0, &mut rng).unwrap();
                let p2 = sample_brownian_bridge(&grid, 0.0, -0.1, 1.0, &mut rng).unwrap();
                let dj = extract_joint(&p1, &p2).unwrap();
                for side in [&dj.left_incr, &dj.right_incr] {
                    if side.upper[0] != 0.0 || side.lower[0] != 0.0 {
                        bad += 1;
                    }
                    if side.upper.iter().zip(side.lower.iter()).any(|(u, l)| u < l) {
                        bad += 1;
                    }
                }
                bad
            })
            .sum();
        let mut details = Map::new();
        details.insert("extractions".into(), n.into());
        (
            failures == 0,
            failures as f64,
            "0 structural violations over all extractions".into(),
            details,
        )
    })
}

fn single_equality_in_law(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("single_decomposition_equality_in_law", seed, || {
        let n = scale.count(50_000);
        let grid = Grid::uniform(0.0, 1.0, GRID_STEPS).unwrap();
        let params = SingleBridgeParams {
            interval: (0.0, 1.0),
            start: 0.0,
            end: 0.0,
            sigma: 1.0,
            steps_per_side: 64,
        };
        let pairs: Vec<Option<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed.child(k as u64).rng();
                let p = sample_brownian_bridge(&grid, 0.0, 0.0, 1.0, &mut rng).unwrap();
                let md = refine_max_single(&p, &mut rng);
                if md.location <= 0.01 || md.location >= 0.99 {
                    return None;
                }
                let rebuilt = synth_single(&md, &params, &mut rng).ok()?;
                Some((
                    p.value_at(md.location / 2.0),
                    rebuilt.value_at(md.location / 2.0),
                ))
            })
            .collect();
        let orig: Vec<f64> = pairs.iter().flatten().map(|v| v.0).collect();
        let synth: Vec<f64> = pairs.iter().flatten().map(|v| v.1).collect();
        let r = ks_two_sample(&orig, &synth).unwrap();
        let p_value = r.p_value.unwrap_or(0.0);
        let mut details = Map::new();
        details.insert("samples".into(), orig.len().into());
        details.insert("ks_statistic".into(), r.statistic.into());
        (p_value > 0.01, p_value, "two-sample KS p > 0.01".into(), details)
    })
}

fn joint_equality_in_law(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("joint_decomposition_equality_in_law", seed, || {
        let n = scale.count(50_000);
        let grid = Grid::uniform(0.0, 1.0, GRID_STEPS).unwrap();
        let params = JointBridgeParams {
            interval: (0.0, 1.0),
            starts: (0.0, 0.0),
            ends: (0.0, 0.0),
            sigma: 1.0,
            steps_per_side: 64,
        };
        let pairs: Vec<Option<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed.child(k as u64).rng();
                let p1 = sample_brownian_bridge(&grid, 0.0, 0.0, 1.0, &mut rng).unwrap();
                let p2 = sample_brownian_bridge(&grid, 0.0, 0.0, 1.0, &mut rng).unwrap();
                let md = refine_max_joint(&p1, &p2, &mut rng).ok()?;
                let m = md.location;
                if m <= 0.01 || m >= 0.99 {
                    return None;
                }
                let sum_max = md.value1 + md.value2;
                let (r1, r2) = synth_joint(&md, &params, &mut rng).ok()?;
                Some((
                    sum_max - (p1.value_at(m / 2.0) + p2.value_at(m / 2.0)),
                    sum_max - (r1.value_at(m / 2.0) + r2.value_at(m / 2.0)),
                ))
            })
            .collect();
        let orig: Vec<f64> = pairs.iter().flatten().map(|v| v.0).collect();
        let synth: Vec<f64> = pairs.iter().flatten().map(|v| v.1).collect();
        let r = ks_two_sample(&orig, &synth).unwrap();
        let p_value = r.p_value.unwrap_or(0.0);
        let mut details = Map::new();
        details.insert("samples".into(), orig.len().into());
        details.insert("ks_statistic".into(), r.statistic.into());
        (p_value > 0.01, p_value, "two-sample KS p > 0.01".into(), details)
    })
}

fn left_right_independence(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("left_right_conditional_independence", seed, || {
        let n = scale.count(100_000);
        let grid = Grid::uniform(0.0, 1.0, 512).unwrap();
        let rows: Vec<Option<((i64, i64), f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = seed.child(k as u64).rng();
                let p1 = sample_brownian_bridge(&grid, 0.0, 0.0, 1.0, &mut rng).unwrap();
                let p2 = sample_brownian_bridge(&grid, 0.0, 0.0, 1.0, &mut rng).unwrap();
                let md = refine_max_joint(&p1, &p2, &mut rng).ok()?;
                let m = md.location;
                if m <= 0.05 || m >= 0.95 {
                    return None;
                }
                let key = ((m / 0.05) as i64, ((md.value1 + md.value2) / 0.05).floor() as i64);
                let sum_max = md.value1 + md.value2;
                let sum_at = |t: f64| p1.value_at(t) + p2.value_at(t);
                Some((key, sum_max - sum_at(m / 2.0), sum_max - sum_at(m + (1.0 - m) / 2.0)))
            })
            .collect();
        let mut cells: std::collections::BTreeMap<(i64, i64), (Vec<f64>, Vec<f64>)> =
            std::collections::BTreeMap::new();
        for row in rows.into_iter().flatten() {
            let e = cells.entry(row.0).or_default();
            e.0.push(row.1);
            e.1.push(row.2);
        }
        let min_cell = ((200.0 * scale.0) as usize).clamp(20, 200);
        let mut weighted = 0.0;
        let mut weight = 0.0;
        for (ls, rs) in cells.values() {
            if ls.len() >= min_cell {
                if let Ok(r) = pearson_r(ls, rs) {
                    weighted += r * ls.len() as f64;
                    weight += ls.len() as f64;
                }
            }
        }
        let r = if weight > 0.0 { weighted / weight } else { f64::NAN };
        let mut details = Map::new();
        details.insert("conditioned_samples".into(), (weight as u64).into());
        (
            r.is_finite() && r.abs() < 0.02 && weight > 1000.0 * scale.0,
            r,
            "|cell-weighted correlation| < 0.02".into(),
            details,
        )
    })
}
