use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use cdrp_core::dyson;
use cdrp_core::nonint;
use cdrp_core::numerics::SeedSpec;
use cdrp_core::paths::{self, Grid};
use clap::Args;

use crate::usage_error;

#[derive(Args)]
pub struct SampleArgs {
    /// Object kind: bm | bb | bessel3 | bessel-bridge | meander | nibb |
    /// nonint-walks | dbm | dbm-two-sided | bessel3-two-sided
    #[arg(long)]
    object: String,
    /// Grid as start:end:steps (ignored for nonint-walks).
    #[arg(long, default_value = "0:1:1024")]
    grid: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Diffusion coefficient.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Start value (bm) or left endpoint (bb).
    #[arg(long, default_value_t = 0.0)]
    x: f64,
    /// Right endpoint (bb).
    #[arg(long, default_value_t = 0.0)]
    y: f64,
    /// Upper endpoint (nibb).
    #[arg(long)]
    z1: Option<f64>,
    /// Lower endpoint (nibb).
    #[arg(long)]
    z2: Option<f64>,
    /// Bessel bridge endpoint.
    #[arg(long)]
    endpoint: Option<f64>,
    /// Steps for nonint-walks.
    #[arg(long, default_value_t = 100)]
    walk_steps: usize,
    /// Output CSV file; defaults to <object>.csv inside $CDRP_OUT or the
    /// working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(spec: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be start:end:steps, got {spec:?}"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad grid start {:?}", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad grid end {:?}", parts[1]))?;
    let steps: usize = parts[2].parse().map_err(|_| format!("bad grid steps {:?}", parts[2]))?;
    Grid::uniform(a, b, steps).map_err(|e| e.to_string())
}

pub fn run(args: SampleArgs) -> i32 {
    let out_dir = crate::config::resolve_out(None, None);
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("{}.csv", args.object)));
    match write_object(&args, &out_path) {
        Ok(()) => {
            println!("wrote {}", out_path.display());
            0
        }
        Err(msg) => usage_error(&msg),
    }
}

fn write_object(args: &SampleArgs, out_path: &PathBuf) -> Result<(), String> {
    let seed = SeedSpec::new(args.seed, args.stream);
    let mut rng = seed.rng();
    let grid = parse_grid(&args.grid)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
    }
    let file = File::create(out_path).map_err(|e| format!("cannot create {}: {e}", out_path.display()))?;
    let mut w = BufWriter::new(file);
    let err = |e: cdrp_core::Error| e.to_string();
    match args.object.as_str() {
        "bm" => paths::sample_brownian_motion(&grid, args.x, args.sigma, &mut rng)
            .map_err(err)?
            .write_csv(&mut w)
            .map_err(|e| e.to_string()),
        "bb" => paths::sample_brownian_bridge(&grid, args.x, args.y, args.sigma, &mut rng)
            .map_err(err)?
            .write_csv(&mut w)
            .map_err(|e| e.to_string()),
        "bessel3" => paths::sample_bessel3(&grid, args.sigma, &mut rng)
            .map_err(err)?
            .write_csv(&mut w)
            .map_err(|e| e.to_string()),
        "bessel-bridge" => {
            let endpoint = args.endpoint.ok_or("bessel-bridge requires --endpoint > 0")?;
            paths::sample_bessel_bridge(&grid, endpoint, args.sigma, &mut rng)
                .map_err(err)?
                .write_csv(&mut w)
                .map_err(|e| e.to_string())
        }
        "meander" => paths::sample_meander(&grid, &mut rng)
            .map_err(err)?
            .write_csv(&mut w)
            .map_err(|e| e.to_string()),
        "nibb" => {
            let z1 = args.z1.ok_or("nibb requires --z1")?;
            let z2 = args.z2.ok_or("nibb requires --z2")?;
            if z1 <= z2 {
                return Err(format!(
                    "nibb endpoints must satisfy z1 > z2, got z1 = {z1}, z2 = {z2}"
                ));
            }
            nonint::sample_nibb(&grid, z1, z2, &mut rng)
                .map_err(err)?
                .write_csv(&mut w)
                .map_err(|e| e.to_string())
        }
        "nonint-walks" => {
            let walks = nonint::sample_nonint_walks(args.walk_steps, &mut rng).map_err(err)?;
            walks.pair.rescaled().write_csv(&mut w).map_err(|e| e.to_string())?;
            // Rejection statistics sidecar.
            let meta = serde_json::json!({
                "n": args.walk_steps,
                "attempts": walks.attempts,
                "accepted": walks.pair.accepted,
            });
            let meta_path = out_path.with_extension("json");
            std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())
                .map_err(|e| e.to_string())
        }
        "dbm" => {
            let p = dyson::sample_dbm(&grid, &mut rng).map_err(err)?;
            write_pair_csv(&mut w, p.grid.times(), &p.upper, &p.lower).map_err(|e| e.to_string())
        }
        "dbm-two-sided" => {
            let ts = dyson::sample_two_sided_dbm(&grid, seed).map_err(err)?;
            let (times, upper, lower) = glue_pair(&ts);
            write_pair_csv(&mut w, &times, &upper, &lower).map_err(|e| e.to_string())
        }
        "bessel3-two-sided" => {
            let sigma = args.sigma;
            let ts = dyson::sample_two_sided(
                |rng| paths::sample_bessel3(&grid, sigma, rng),
                seed,
            )
            .map_err(err)?;
            ts.glued().write_csv(&mut w).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "unknown object kind {other:?}; expected bm, bb, bessel3, bessel-bridge, meander, nibb, nonint-walks, dbm, dbm-two-sided or bessel3-two-sided"
        )),
    }
}

fn glue_pair(ts: &dyson::TwoSidedDbm) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let neg = &ts.negative_side;
    let pos = &ts.positive_side;
    let mut times: Vec<f64> = neg.grid.times().iter().rev().map(|t| -t).collect();
    let mut upper: Vec<f64> = neg.upper.iter().rev().cloned().collect();
    let mut lower: Vec<f64> = neg.lower.iter().rev().cloned().collect();
    times.extend_from_slice(&pos.grid.times()[1..]);
    upper.extend_from_slice(&pos.upper[1..]);
    lower.extend_from_slice(&pos.lower[1..]);
    (times, upper, lower)
}

fn write_pair_csv<W: Write>(w: &mut W, times: &[f64], upper: &[f64], lower: &[f64]) -> std::io::Result<()> {
    writeln!(w, "time,value1,value2")?;
    for ((t, u), l) in times.iter().zip(upper.iter()).zip(lower.iter()) {
        writeln!(w, "{t:.16e},{u:.16e},{l:.16e}")?;
    }
    Ok(())
}
