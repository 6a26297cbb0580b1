//! Two-level non-intersecting Brownian motions and bridges, and the
//! discrete non-intersecting random walk they arise from.
//!
//! A NonInt-BM pair on `[0, 1]` starts glued at 0 and is conditioned (in
//! the Doob sense) never to cross; its marginals are the determinantal
//! densities below. A NonInt-BrBridge additionally pins the endpoint pair
//! `(z1, z2)`, `z1 > z2`. Lengths other than 1 follow the rescaling
//! contract: `V` on `[0, M]` iff `M^(-1/2) V(M x)` is a unit-length pair.

use std::io::Write;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::numerics::{det2, hk, quad_ordered_pairs, StreamRng};
use crate::paths::{sample_bessel_bridge, sample_brownian_bridge, Grid};

/// A pair of paths on a common grid with `upper >= lower`.
#[derive(Debug, Clone)]
pub struct PairPath {
    pub grid: Grid,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub diffusion_coeff: f64,
}

impl PairPath {
    pub fn new(grid: Grid, upper: Vec<f64>, lower: Vec<f64>, diffusion_coeff: f64) -> Result<Self> {
        if grid.len() != upper.len() || grid.len() != lower.len() {
            return Err(Error::domain("pair path component lengths must match grid"));
        }
        Ok(PairPath {
            grid,
            upper,
            lower,
            diffusion_coeff,
        })
    }

    /// Strict ordering on the interior grid (equality allowed at the
    /// shared start only).
    pub fn is_strictly_ordered(&self) -> bool {
        self.upper
            .iter()
            .zip(self.lower.iter())
            .skip(1)
            .all(|(u, l)| u > l)
    }

    /// CSV with header `time,value1,value2`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "time,value1,value2")?;
        for ((t, u), l) in self
            .grid
            .times()
            .iter()
            .zip(self.upper.iter())
            .zip(self.lower.iter())
        {
            writeln!(w, "{t:.16e},{u:.16e},{l:.16e}")?;
        }
        Ok(())
    }
}

/// Endpoint data for a NonInt-BrBridge on `[0, M]`.
#[derive(Debug, Clone, Copy)]
pub struct NibbSpec {
    pub length: f64,
    pub z1: f64,
    pub z2: f64,
}

impl NibbSpec {
    pub fn new(length: f64, z1: f64, z2: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("NibbSpec: length must be > 0, got {length}")));
        }
        if !(z1 > z2) {
            return Err(Error::domain(format!("NibbSpec: need z1 > z2, got z1={z1}, z2={z2}")));
        }
        Ok(NibbSpec { length, z1, z2 })
    }
}

/// Mass of the heat-kernel determinant over the ordered half-plane:
/// `int_{r1 > r2} det(p_s(y_i - r_j)) dr1 dr2 = erf((y1 - y2)/(2 sqrt(s)))`
/// (rotate to sum/difference coordinates; the sum coordinate integrates
/// out). Verified against 2D adaptive quadrature in the tests; `s -> 0`
/// degenerates smoothly to 1 for `y1 > y2`.
pub fn ordered_det_mass(y1: f64, y2: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return if y1 > y2 { 1.0 } else { 0.0 };
    }
    erf((y1 - y2) / (2.0 * s.sqrt()))
}

/// Normalizing constant of the time-1 NonInt-BM law,
/// `int_{r1 > r2} (r1 - r2) p_1(r1) p_1(r2) dr`, computed once by 2D
/// adaptive quadrature to 1e-10 and cached (analytically `1/sqrt(pi)`;
/// the tests pin the cached value against that closed form).
pub fn nibm_t1_normalizer() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        quad_ordered_pairs(
            |r1, r2| (r1 - r2) * hk(r1, 1.0) * hk(r2, 1.0),
            14.0,
            -14.0,
            14.0,
            1e-10,
        )
        .expect("time-1 normalizer quadrature")
    })
}

/// Time-1 joint density of a NonInt-BM pair:
/// `1{y1 > y2} (y1 - y2) p_1(y1) p_1(y2) / Z`.
pub fn nibm_density_t1(y1: f64, y2: f64) -> f64 {
    if y1 <= y2 {
        return 0.0;
    }
    (y1 - y2) * hk(y1, 1.0) * hk(y2, 1.0) / nibm_t1_normalizer()
}

/// Interior one-point density of a NonInt-BM pair at time `t` in (0, 1).
pub fn nibm_density(t: f64, y1: f64, y2: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("nibm_density: need 0 < t < 1, got {t}")));
    }
    if y1 <= y2 {
        return Ok(0.0);
    }
    Ok(
        (y1 - y2) * hk(y1, t) * hk(y2, t) * ordered_det_mass(y1, y2, 1.0 - t)
            / (t * nibm_t1_normalizer()),
    )
}

/// Transition density of a NonInt-BM pair from `(x1, x2)` at time `s` to
/// `(y1, y2)` at time `t <= 1` (at `t = 1` the forward mass factor
/// degenerates smoothly to the indicator).
pub fn nibm_transition(s: f64, t: f64, x1: f64, x2: f64) -> Result<impl Fn(f64, f64) -> f64> {
    if !(s > 0.0 && s < t && t <= 1.0) {
        return Err(Error::domain(format!(
            "nibm_transition: need 0 < s < t <= 1, got s={s}, t={t}"
        )));
    }
    if !(x1 > x2) {
        return Err(Error::domain(format!("nibm_transition: need x1 > x2, got {x1}, {x2}")));
    }
    let denom = ordered_det_mass(x1, x2, 1.0 - s);
    Ok(move |y1: f64, y2: f64| {
        if y1 <= y2 {
            return 0.0;
        }
        det2(y1, y2, x1, x2, t - s) * ordered_det_mass(y1, y2, 1.0 - t) / denom
    })
}

/// One-point density of a unit-length NonInt-BrBridge ending at
/// `(z1, z2)`:
/// `1{y1>y2} (y1-y2) p_t(y1) p_t(y2) det(p_{1-t}(y_i - z_j))
///  / (t (z1-z2) p_1(z1) p_1(z2))`; the denominator is exact, no
/// quadrature enters.
pub fn nibb_one_point(t: f64, z1: f64, z2: f64) -> Result<impl Fn(f64, f64) -> f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("nibb_one_point: need 0 < t < 1, got {t}")));
    }
    if !(z1 > z2) {
        return Err(Error::domain(format!("nibb_one_point: need z1 > z2, got {z1}, {z2}")));
    }
    let denom = t * (z1 - z2) * hk(z1, 1.0) * hk(z2, 1.0);
    Ok(move |y1: f64, y2: f64| {
        if y1 <= y2 {
            return 0.0;
        }
        (y1 - y2) * hk(y1, t) * hk(y2, t) * det2(y1, y2, z1, z2, 1.0 - t) / denom
    })
}

/// Transition density of a unit-length NonInt-BrBridge ending at
/// `(z1, z2)`, from `(x1, x2)` at `s` to `(y1, y2)` at `t < 1`. The
/// kernel at `t = 1` is a point mass at the endpoints and has no density,
/// so `t = 1` is rejected.
pub fn nibb_transition(
    s: f64,
    t: f64,
    x1: f64,
    x2: f64,
    z1: f64,
    z2: f64,
) -> Result<impl Fn(f64, f64) -> f64> {
    if !(s > 0.0 && s < t && t < 1.0) {
        return Err(Error::domain(format!(
            "nibb_transition: need 0 < s < t < 1 (t = 1 degenerates to a point mass), got s={s}, t={t}"
        )));
    }
    if !(x1 > x2) || !(z1 > z2) {
        return Err(Error::domain("nibb_transition: need x1 > x2 and z1 > z2"));
    }
    let denom = det2(x1, x2, z1, z2, 1.0 - s);
    Ok(move |y1: f64, y2: f64| {
        if y1 <= y2 {
            return 0.0;
        }
        det2(y1, y2, x1, x2, t - s) * det2(y1, y2, z1, z2, 1.0 - t) / denom
    })
}

/// Exact NonInt-BrBridge sampler on a grid over `[0, M]` ending at
/// `(z1, z2)`, by independent sum and difference processes: the
/// difference is `sqrt(2)` times a Bessel bridge ending at
/// `(z1 - z2)/sqrt(2)`, the sum is `sqrt(2)` times an independent
/// Brownian bridge ending at `(z1 + z2)/sqrt(2)`. Continuum rejection
/// would accept with probability zero for bridges sharing a start point.
/// Sum/difference independence and the joint marginals are verified
/// against the explicit densities in the tests.
pub fn sample_nibb(grid: &Grid, z1: f64, z2: f64, rng: &mut StreamRng) -> Result<PairPath> {
    if grid.origin() != 0.0 {
        return Err(Error::domain("NonInt-BrBridge grid must start at 0"));
    }
    if !(z1 > z2) {
        return Err(Error::domain(format!("sample_nibb: need z1 > z2, got z1={z1}, z2={z2}")));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let sum = sample_brownian_bridge(grid, 0.0, (z1 + z2) * inv_sqrt2, 1.0, rng)?;
    let diff = sample_bessel_bridge(grid, (z1 - z2) * inv_sqrt2, 1.0, rng)?;
    let mut upper: Vec<f64> = sum
        .values
        .iter()
        .zip(diff.values.iter())
        .map(|(s, d)| (s + d) * inv_sqrt2)
        .collect();
    let mut lower: Vec<f64> = sum
        .values
        .iter()
        .zip(diff.values.iter())
        .map(|(s, d)| (s - d) * inv_sqrt2)
        .collect();
    let n = upper.len();
    upper[0] = 0.0;
    lower[0] = 0.0;
    upper[n - 1] = z1;
    lower[n - 1] = z2;
    PairPath::new(grid.clone(), upper, lower, 1.0)
}

/// A conditioned pair of Gaussian random walks: `accepted` iff
/// `S_j^(1) > S_j^(2)` for all `j = 1..n`.
#[derive(Debug, Clone)]
pub struct WalkPair {
    pub n: usize,
    pub increments: (Vec<f64>, Vec<f64>),
    pub accepted: bool,
}

impl WalkPair {
    /// Diffusively rescaled, linearly interpolated view: values
    /// `S_{nt}/sqrt(n)` on the grid `{j/n}`.
    pub fn rescaled(&self) -> PairPath {
        let n = self.n;
        let inv = 1.0 / (n as f64).sqrt();
        let mut times = Vec::with_capacity(n + 1);
        let mut upper = Vec::with_capacity(n + 1);
        let mut lower = Vec::with_capacity(n + 1);
        times.push(0.0);
        upper.push(0.0);
        lower.push(0.0);
        let (mut s1, mut s2) = (0.0, 0.0);
        for j in 0..n {
            s1 += self.increments.0[j];
            s2 += self.increments.1[j];
            times.push((j + 1) as f64 / n as f64);
            upper.push(s1 * inv);
            lower.push(s2 * inv);
        }
        PairPath::new(Grid::new(times).unwrap(), upper, lower, 1.0).unwrap()
    }
}

/// An accepted walk pair plus the number of rejection rounds it took.
#[derive(Debug, Clone)]
pub struct ConditionedWalks {
    pub pair: WalkPair,
    pub attempts: u64,
}

/// Rejection sampler for the non-intersecting walk event. Retries are
/// unbounded; the attempt count is reported. Rejected attempts abort at
/// the first ordering violation.
pub fn sample_nonint_walks(n: usize, rng: &mut StreamRng) -> Result<ConditionedWalks> {
    if n < 1 {
        return Err(Error::domain("sample_nonint_walks: need n >= 1"));
    }
    let mut attempts = 0u64;
    let mut inc1 = Vec::with_capacity(n);
    let mut inc2 = Vec::with_capacity(n);
    loop {
        attempts += 1;
        inc1.clear();
        inc2.clear();
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        let mut ok = true;
        for _ in 0..n {
            let x1: f64 = rng.sample(StandardNormal);
            let x2: f64 = rng.sample(StandardNormal);
            inc1.push(x1);
            inc2.push(x2);
            s1 += x1;
            s2 += x2;
            if s1 <= s2 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(ConditionedWalks {
                pair: WalkPair {
                    n,
                    increments: (inc1, inc2),
                    accepted: true,
                },
                attempts,
            });
        }
    }
}

/// Trapezoid evaluation of the separation functional
/// `int_theta^n exp(-sqrt(n) [V1(y/n) - V2(y/n)]) dy`
/// on a unit-interval pair's grid (substituting `y = n x`).
pub fn pgamma_statistic(pair: &PairPath, n_scale: f64, theta: f64) -> Result<f64> {
    if pair.grid.origin() != 0.0 || pair.grid.horizon() != 1.0 {
        return Err(Error::domain("pgamma_statistic: pair must live on [0, 1]"));
    }
    if !(n_scale > 0.0) || !(theta < n_scale) {
        return Err(Error::domain("pgamma_statistic: need 0 < theta < n"));
    }
    let x_lo = (theta / n_scale).max(0.0);
    let ts = pair.grid.times();
    let inside = ts.iter().filter(|&&t| t >= x_lo).count();
    if inside < 8 {
        return Err(Error::domain(
            "pgamma_statistic: grid too coarse to cover [theta/n, 1]",
        ));
    }
    let root_n = n_scale.sqrt();
    let gap = |i: usize| pair.upper[i] - pair.lower[i];
    let first = ts.partition_point(|&t| t < x_lo);
    let mut acc = 0.0;
    // Partial cell from x_lo to the first grid point at or above it.
    if first > 0 && ts[first] > x_lo {
        let i = first - 1;
        let w = (x_lo - ts[i]) / (ts[i + 1] - ts[i]);
        let gap_lo = gap(i) + w * (gap(i + 1) - gap(i));
        acc += 0.5
            * (ts[first] - x_lo)
            * ((-root_n * gap_lo).exp() + (-root_n * gap(first)).exp());
    }
    for i in first..ts.len() - 1 {
        acc += 0.5
            * (ts[i + 1] - ts[i])
            * ((-root_n * gap(i)).exp() + (-root_n * gap(i + 1)).exp());
    }
    Ok(n_scale * acc)
}
