//! Polymer checks: the exhaustive-enumeration oracle, the discrete
//! Chapman-Kolmogorov identity at production size, and the localization,
//! scaling, shape and ergodicity experiments at their acceptance sizes.

use serde_json::Map;

use crate::numerics::{log_sum_exp, SeedSpec};
use crate::polymer::{
    bessel_shape_experiment, ergodicity_experiment, favorite_point_scaling,
    localization_experiment, log_partition_backward, log_partition_forward, quenched_density,
    sample_environment, DisorderField, PolymerKind,
};
use crate::report::{timed_check, CheckReport};
use crate::suites::SuiteScale;

pub fn run(seed: SeedSpec, scale: SuiteScale) -> Vec<CheckReport> {
    vec![
        enumeration_oracle(seed),
        chapman_kolmogorov_at_size(seed, scale),
        localization(seed, scale),
        favorite_point(seed, scale),
        bessel_shape(seed, scale),
        ergodicity(seed, scale),
    ]
}

/// Linear-space quenched slice masses by enumerating all 2^n walks.
/// Independent of the transfer-matrix path: no shared arithmetic beyond
/// the environment itself.
fn enumerate_slice_masses(
    env: &DisorderField,
    beta: f64,
    slice: usize,
    kind: PolymerKind,
) -> (Vec<f64>, f64) {
    let n = env.n;
    let mut masses = vec![0.0f64; slice + 1];
    let mut total = 0.0f64;
    for mask in 0u64..(1 << n) {
        let mut pos = 0i64;
        let mut energy = 0.0;
        let mut slice_pos = 0i64;
        for step in 0..n {
            pos += if mask >> step & 1 == 1 { 1 } else { -1 };
            energy += env.omega(step + 1, pos);
            if step + 1 == slice {
                slice_pos = pos;
            }
        }
        if kind == PolymerKind::PointToPoint && pos != 0 {
            continue;
        }
        let w = (beta * energy).exp() / 2f64.powi(n as i32);
        total += w;
        masses[((slice_pos + slice as i64) / 2) as usize] += w;
    }
    (masses, total)
}

fn enumeration_oracle(seed: SeedSpec) -> CheckReport {
    timed_check("polymer_enumeration_oracle", seed, || {
        let mut worst = 0.0f64;
        for (n, kind, p) in [
            (8usize, PolymerKind::PointToPoint, 0.5),
            (10, PolymerKind::PointToLine, 1.0),
            (12, PolymerKind::PointToPoint, 0.5),
            (12, PolymerKind::PointToLine, 0.4),
        ] {
            let env = sample_environment(n, seed.child(n as u64)).unwrap();
            let beta = 0.9;
            let q = quenched_density(&env, beta, p, kind).unwrap();
            let (masses, total) = enumerate_slice_masses(&env, beta, q.slice, kind);
            for (idx, &site) in q.sites.iter().enumerate() {
                let expected = masses[((site + q.slice as i64) / 2) as usize] / total;
                worst = worst.max((q.logf[idx].exp() - expected).abs());
            }
        }
        (
            worst < 1e-10,
            worst,
            "max |transfer-matrix - enumeration| < 1e-10 for n <= 12".into(),
            Map::new(),
        )
    })
}

fn chapman_kolmogorov_at_size(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("polymer_chapman_kolmogorov_n4096", seed, || {
        // The total log partition function, recombined at every slice,
        // must be constant across slices up to floating point.
        let n = if scale.0 >= 1.0 { 4096 } else { 1024 };
        let env = sample_environment(n, seed.child(40)).unwrap();
        let beta = 4.0 * (n as f64).powf(-0.25);
        let fwd = log_partition_forward(&env, beta);
        let bwd = log_partition_backward(&env, beta, PolymerKind::PointToPoint).unwrap();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..=n {
            let combined: Vec<f64> = fwd.rows[i]
                .iter()
                .zip(bwd.rows[i].iter())
                .map(|(f, b)| f + b)
                .collect();
            let total = log_sum_exp(&combined).unwrap();
            lo = lo.min(total);
            hi = hi.max(total);
        }
        let drift = hi - lo;
        let mut details = Map::new();
        details.insert("n".into(), n.into());
        (
            drift < 1e-10,
            drift,
            "total log partition drift across slices < 1e-10".into(),
            details,
        )
    })
}

fn localization(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("polymer_localization", seed, || {
        let replicas = scale.replicas(200);
        let n = if scale.0 >= 1.0 { 4096 } else { 1024 };
        let k_values = [1.0, 2.0, 4.0, 8.0, 16.0, 24.0];
        let mut worst = f64::MIN;
        let mut pass = true;
        let mut details = Map::new();
        for (ki, kappa) in [2.0, 4.0].into_iter().enumerate() {
            match localization_experiment(
                n,
                kappa,
                0.5,
                PolymerKind::PointToPoint,
                &k_values,
                replicas,
                seed.child(50 + ki as u64),
            ) {
                Ok(rep) => {
                    let m = rep.statistics["median_outside_largest"].as_f64().unwrap_or(f64::NAN);
                    details.insert(format!("median_outside_largest_kappa{kappa}"), m.into());
                    details.insert(
                        format!("median_mode_mass_kappa{kappa}"),
                        rep.statistics["median_mode_mass"].clone(),
                    );
                    worst = worst.max(m);
                    pass &= rep.pass;
                }
                Err(e) => {
                    pass = false;
                    details.insert(format!("error_kappa{kappa}"), format!("{e}").into());
                }
            }
        }
        details.insert("replicas".into(), replicas.into());
        details.insert("largest_k".into(), (*k_values.last().unwrap()).into());
        (
            pass,
            worst,
            "median outside-mass at the largest window < 0.1 for kappa in {2, 4}".into(),
            details,
        )
    })
}

fn favorite_point(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("polymer_favorite_point_exponent", seed, || {
        let replicas = scale.replicas(400);
        let n = if scale.0 >= 1.0 { 4096 } else { 1024 };
        match favorite_point_scaling(
            n,
            &[1.0, 2.0, 4.0, 8.0],
            replicas,
            PolymerKind::PointToLine,
            seed.child(60),
        ) {
            Ok(rep) => {
                let slope = rep.statistics["exponent"].as_f64().unwrap_or(f64::NAN);
                let control = rep.statistics["control_exponent"].as_f64().unwrap_or(f64::NAN);
                let mut details = Map::new();
                for (k, v) in rep.statistics.iter() {
                    details.insert(k.clone(), v.clone());
                }
                details.insert("replicas".into(), replicas.into());
                let pass = (0.52..=0.82).contains(&slope) && (0.4..=0.6).contains(&control);
                (
                    pass,
                    slope,
                    "exponent in [0.52, 0.82]; beta = 0 control in [0.4, 0.6]".into(),
                    details,
                )
            }
            Err(e) => (false, f64::NAN, format!("error: {e}"), Map::new()),
        }
    })
}

fn bessel_shape(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("polymer_bessel_shape", seed, || {
        let replicas = scale.replicas(400);
        let n = if scale.0 >= 1.0 { 4096 } else { 1024 };
        let mut details = Map::new();
        let mut pass = true;
        let mut worst = 0.0f64;
        for (kind, p, tag) in [
            (PolymerKind::PointToPoint, 0.5, "midpoint_r2"),
            (PolymerKind::PointToLine, 1.0, "endpoint_r1"),
        ] {
            match bessel_shape_experiment(n, 4.0, p, kind, &[1.0, 2.0], replicas, seed.child(70)) {
                Ok((rep, _)) => {
                    let w = rep.statistics["w1_at_unit_offset"].as_f64().unwrap_or(f64::NAN);
                    details.insert(format!("w1_at_unit_{tag}"), w.into());
                    details.insert(
                        format!("w1_raw_marginal_{tag}"),
                        rep.statistics["w1_raw_marginal_offset_1"].clone(),
                    );
                    worst = worst.max(w);
                    pass &= rep.pass;
                }
                Err(e) => {
                    pass = false;
                    details.insert(format!("error_{tag}"), format!("{e}").into());
                }
            }
        }
        details.insert("replicas".into(), replicas.into());
        (
            pass,
            worst,
            "W1 at one continuum unit < 0.15 for both polymer kinds".into(),
            details,
        )
    })
}

fn ergodicity(seed: SeedSpec, scale: SuiteScale) -> CheckReport {
    timed_check("polymer_ergodicity", seed, || {
        let replicas = scale.replicas(400);
        let n = if scale.0 >= 1.0 { 4096 } else { 1024 };
        match ergodicity_experiment(n, 4.0, &[1.0, 2.0, 4.0], replicas, seed.child(80)) {
            Ok(rep) => {
                let p = rep.statistics["ks_normal_p_gap1"].as_f64().unwrap_or(0.0);
                let ratio = rep.statistics["var_doubling_ratio"].as_f64().unwrap_or(f64::NAN);
                let mut details = Map::new();
                for (k, v) in rep.statistics.iter() {
                    details.insert(k.clone(), v.clone());
                }
                details.insert("replicas".into(), replicas.into());
                let pass = p > 0.01 && ratio.is_finite() && (1.7..=2.3).contains(&ratio);
                (
                    pass,
                    p,
                    "increment KS vs fitted normal p > 0.01; variance doubling in [1.7, 2.3]".into(),
                    details,
                )
            }
            Err(e) => (false, f64::NAN, format!("error: {e}"), Map::new()),
        }
    })
}
