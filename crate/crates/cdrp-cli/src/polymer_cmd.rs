use std::io::Write;
use std::path::PathBuf;

use cdrp_core::numerics::SeedSpec;
use cdrp_core::polymer::{
    bessel_shape_experiment, ergodicity_experiment, favorite_point_scaling,
    localization_experiment, PolymerKind,
};
use cdrp_core::report::ExperimentReport;
use clap::Args;

use crate::config::{load, resolve_out, PolymerConfig};
use crate::usage_error;

#[derive(Args)]
pub struct PolymerArgs {
    /// Lattice steps (even for point-to-point).
    #[arg(long)]
    n: Option<usize>,
    /// Intermediate-disorder strength for single-kappa experiments.
    #[arg(long)]
    kappa: Option<f64>,
    /// Kappa sweep for the favorite-point experiment (comma separated).
    #[arg(long, value_delimiter = ',')]
    kappas: Option<Vec<f64>>,
    /// Slice fraction.
    #[arg(long)]
    p: Option<f64>,
    /// point-to-point | point-to-line
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// localization | favorite-point | shape | ergodicity | all
    #[arg(long)]
    experiment: Option<String>,
    /// Localization windows in continuum units (comma separated).
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<f64>>,
    /// Shape profile offsets in continuum units.
    #[arg(long, value_delimiter = ',')]
    offsets: Option<Vec<f64>>,
    /// Ergodicity gaps in continuum units.
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
    /// Write the quenched density of the first replica as CSV.
    #[arg(long, default_value_t = false)]
    dump_density: bool,
    /// Write the first replica's disorder field as CSV (large for big n).
    #[arg(long, default_value_t = false)]
    dump_environment: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<PolymerKind, String> {
    match s {
        "point-to-point" | "p2p" => Ok(PolymerKind::PointToPoint),
        "point-to-line" | "p2l" => Ok(PolymerKind::PointToLine),
        other => Err(format!("unknown kind {other:?}; expected point-to-point or point-to-line")),
    }
}

pub fn run(args: PolymerArgs) -> i32 {
    let cfg: PolymerConfig = match args.config.as_deref().map(load) {
        Some(Ok(c)) => c,
        Some(Err(msg)) => return usage_error(&msg),
        None => PolymerConfig::default(),
    };
    let n = args.n.or(cfg.n).unwrap_or(4096);
    let kappa = args.kappa.or(cfg.kappa).unwrap_or(4.0);
    let kappas = args.kappas.or(cfg.kappas).unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
    let p = args.p.or(cfg.p).unwrap_or(0.5);
    let kind = match parse_kind(&args.kind.or(cfg.kind).unwrap_or_else(|| "point-to-point".into())) {
        Ok(k) => k,
        Err(msg) => return usage_error(&msg),
    };
    let replicas = args.replicas.or(cfg.replicas).unwrap_or(200);
    if replicas == 0 {
        return usage_error("replica count must be positive");
    }
    if kind == PolymerKind::PointToPoint && n % 2 != 0 {
        return usage_error("point-to-point polymers need even n");
    }
    let seed = SeedSpec::new(args.seed.or(cfg.seed).unwrap_or(1), args.stream.or(cfg.stream).unwrap_or(0));
    let experiment = args.experiment.or(cfg.experiment).unwrap_or_else(|| "all".into());
    let k_values = args.k_values.or(cfg.k_values).unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0, 24.0]);
    let offsets = args.offsets.or(cfg.offsets).unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let gaps = args.gaps.or(cfg.gaps).unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let out = resolve_out(args.out, cfg.out);
    if std::fs::create_dir_all(&out).is_err() {
        return usage_error(&format!("cannot create output directory {}", out.display()));
    }
    let threads = args.threads.or(cfg.threads);

    if args.dump_density {
        let params = match cdrp_core::polymer::PolymerParams::intermediate(n, kappa, kind) {
            Ok(p) => p,
            Err(e) => return usage_error(&e.to_string()),
        };
        match cdrp_core::polymer::quenched_density_streaming(&params, p, seed.child(0)) {
            Ok(q) => {
                let path = out.join("density.csv");
                let mut w = String::from("site,logf,mass\n");
                for (s, lf) in q.sites.iter().zip(q.logf.iter()) {
                    w.push_str(&format!("{s},{lf:.16e},{:.16e}\n", lf.exp()));
                }
                if let Err(e) = std::fs::write(&path, w) {
                    return usage_error(&format!("cannot write {}: {e}", path.display()));
                }
            }
            Err(e) => return usage_error(&e.to_string()),
        }
    }
    if args.dump_environment {
        match cdrp_core::polymer::sample_environment(n, seed.child(0)) {
            Ok(env) => {
                let path = out.join("environment.csv");
                let mut w = String::from("i,j,omega\n");
                for i in 1..=n {
                    for (k, v) in env.row(i).iter().enumerate() {
                        let j = 2 * k as i64 - i as i64;
                        w.push_str(&format!("{i},{j},{v:.16e}\n"));
                    }
                }
                if let Err(e) = std::fs::write(&path, w) {
                    return usage_error(&format!("cannot write {}: {e}", path.display()));
                }
            }
            Err(e) => return usage_error(&e.to_string()),
        }
    }

    let run_all = || -> Result<Vec<(String, ExperimentReport)>, cdrp_core::Error> {
        let mut out_reports = Vec::new();
        if experiment == "all" || experiment == "localization" {
            let rep = localization_experiment(n, kappa, p, kind, &k_values, replicas, seed.child(1))?;
            out_reports.push(("localization".to_string(), rep));
        }
        if experiment == "all" || experiment == "favorite-point" {
            let rep = favorite_point_scaling(n, &kappas, replicas, PolymerKind::PointToLine, seed.child(2))?;
            out_reports.push(("favorite_point".to_string(), rep));
        }
        if experiment == "all" || experiment == "shape" {
            let (rep, profiles) = bessel_shape_experiment(n, kappa, p, kind, &offsets, replicas, seed.child(3))?;
            // Mode-centered profiles for external plotting.
            let path = out.join("profiles.csv");
            let mut w = std::io::BufWriter::new(std::fs::File::create(&path).map_err(|e| {
                cdrp_core::Error::Domain(format!("cannot create {}: {e}", path.display()))
            })?);
            writeln!(w, "replica,offset_sites,offset_cdrp,profile").ok();
            for s in &profiles {
                for (d, x, v) in &s.values {
                    writeln!(w, "{},{d},{x:.16e},{v:.16e}", s.replica).ok();
                }
            }
            out_reports.push(("bessel_shape".to_string(), rep));
        }
        if experiment == "all" || experiment == "ergodicity" {
            let rep = ergodicity_experiment(n, kappa, &gaps, replicas, seed.child(4))?;
            out_reports.push(("ergodicity".to_string(), rep));
        }
        Ok(out_reports)
    };
    let reports = match crate::install_pool(threads) {
        Some(pool) => pool.install(run_all),
        None => run_all(),
    };
    let reports = match reports {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    if reports.is_empty() {
        return usage_error(&format!(
            "unknown experiment {experiment:?}; expected localization, favorite-point, shape, ergodicity or all"
        ));
    }

    let mut all_pass = true;
    for (name, rep) in &reports {
        all_pass &= rep.pass;
        println!("{} {:<20}", if rep.pass { "PASS" } else { "FAIL" }, name);
        let path = out.join(format!("{name}.json"));
        if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(rep).unwrap()) {
            return usage_error(&format!("cannot write {}: {e}", path.display()));
        }
    }
    if all_pass {
        0
    } else {
        1
    }
}
