//! Statistical test kit: two-sample and one-sample Kolmogorov-Smirnov,
//! binned chi-square against a density oracle, 1D Wasserstein-1 and
//! log-log exponent regression. Asymptotic p-values throughout; every
//! consumer works with sample sizes of 10^4 and up.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numerics::quadrature_2d;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    /// Present for KS and chi-square; `None` when only a distance is defined.
    pub p_value: Option<f64>,
    pub n1: usize,
    pub n2: usize,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-comparable sample value"));
    v
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`,
/// with the theta-dual series for small `lambda` where the alternating
/// series converges slowly.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let t = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (t + t.powi(9) + t.powi(25) + t.powi(49));
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let e = (-2.0 * lambda * lambda).exp();
        (2.0 * (e - e.powi(4) + e.powi(9) - e.powi(16))).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sn = effective_n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Two-sample KS test: sup-distance between the two ECDFs, p-value from
/// the asymptotic Kolmogorov distribution at the effective sample size
/// `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("ks_two_sample: empty sample"));
    }
    let xs = sorted(a);
    let ys = sorted(b);
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < n && j < m {
        let z = xs[i].min(ys[j]);
        while i < n && xs[i] <= z {
            i += 1;
        }
        while j < m && ys[j] <= z {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    Ok(TestResult {
        statistic: d,
        p_value: Some(ks_p_value(d, ne)),
        n1: n,
        n2: m,
    })
}

/// One-sample KS test against a CDF oracle.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<TestResult> {
    if a.is_empty() {
        return Err(Error::domain("ks_one_sample: empty sample"));
    }
    let xs = sorted(a);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max(((i + 1) as f64 / n - c).abs());
        d = d.max((c - i as f64 / n).abs());
    }
    Ok(TestResult {
        statistic: d,
        p_value: Some(ks_p_value(d, n)),
        n1: xs.len(),
        n2: 0,
    })
}

fn chi2_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof > 0");
    (1.0 - dist.cdf(stat)).clamp(0.0, 1.0)
}

/// Binned two-sample chi-square with `bins` equal-probability bins taken
/// from the pooled sample quantiles.
pub fn chi2_two_sample(a: &[f64], b: &[f64], bins: usize) -> Result<TestResult> {
    if a.len() < bins * 5 || b.len() < bins * 5 {
        return Err(Error::domain("chi2_two_sample: too few samples for requested bins"));
    }
    let mut pooled = a.to_vec();
    pooled.extend_from_slice(b);
    let pooled = sorted(&pooled);
    let edges: Vec<f64> = (1..bins)
        .map(|k| pooled[k * pooled.len() / bins])
        .collect();
    let count = |xs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; bins];
        for &x in xs {
            let idx = edges.partition_point(|&e| e < x);
            c[idx] += 1.0;
        }
        c
    };
    let ca = count(a);
    let cb = count(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut stat = 0.0;
    for k in 0..bins {
        let tot = ca[k] + cb[k];
        if tot == 0.0 {
            continue;
        }
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (ca[k] - ea).powi(2) / ea + (cb[k] - eb).powi(2) / eb;
    }
    Ok(TestResult {
        statistic: stat,
        p_value: Some(chi2_p(stat, bins - 1)),
        n1: a.len(),
        n2: b.len(),
    })
}

/// Binned chi-square of a 1D sample against a density oracle. Bin edges
/// are equal-probability quantiles of the sample; expected masses come
/// from adaptive quadrature of the density, and bins whose expected count
/// falls below 5 are merged into the tail cell.
pub fn chi2_vs_density<F: Fn(f64) -> f64>(a: &[f64], density: F, bins: usize) -> Result<TestResult> {
    if a.len() < bins * 10 {
        return Err(Error::domain("chi2_vs_density: too few samples for requested bins"));
    }
    let xs = sorted(a);
    let n = xs.len();
    // Interior edges at quantiles 1/bins .. (bins-1)/bins, clipped cells at
    // the extreme 0.2% so every expected mass is a proper integral.
    let lo = xs[(n as f64 * 0.002) as usize];
    let hi = xs[((n as f64 * 0.998) as usize).min(n - 1)];
    let mut edges = vec![lo];
    for k in 1..bins {
        edges.push(xs[k * n / bins]);
    }
    edges.push(hi);
    edges.dedup_by(|a, b| *a <= *b);
    let m = edges.len() - 1;
    if m < 2 {
        return Err(Error::domain("chi2_vs_density: degenerate sample"));
    }
    let mut observed = vec![0.0f64; m + 1];
    for &x in xs.iter() {
        if x < edges[0] || x > edges[m] {
            observed[m] += 1.0;
        } else {
            let idx = edges[1..m].partition_point(|&e| e < x);
            observed[idx] += 1.0;
        }
    }
    let mut expected = vec![0.0f64; m + 1];
    let mut interior = 0.0;
    for k in 0..m {
        let mass = crate::numerics::quadrature_1d(&density, edges[k], edges[k + 1], 1e-9)?;
        expected[k] = mass * n as f64;
        interior += mass;
    }
    expected[m] = ((1.0 - interior) * n as f64).max(0.0);
    merge_small_cells_and_score(observed, expected, n)
}

/// Binned chi-square of a 2D sample against a joint-density oracle on a
/// `k x k` grid. Bin edges are marginal sample quantiles; expected masses
/// come from 2D quadrature; cells with expected count below 5 (common far
/// from an ordered-pair support) merge into one remainder cell.
pub fn chi2_vs_density_2d<F: Fn(f64, f64) -> f64>(
    pts: &[(f64, f64)],
    density: F,
    k: usize,
) -> Result<TestResult> {
    let n = pts.len();
    if n < k * k * 5 {
        return Err(Error::domain("chi2_vs_density_2d: too few samples for requested bins"));
    }
    let xs = sorted(&pts.iter().map(|p| p.0).collect::<Vec<_>>());
    let ys = sorted(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
    let quantile_edges = |s: &[f64]| -> Vec<f64> {
        let mut e = vec![s[(n as f64 * 0.002) as usize]];
        for j in 1..k {
            e.push(s[j * n / k]);
        }
        e.push(s[((n as f64 * 0.998) as usize).min(n - 1)]);
        e
    };
    let ex = quantile_edges(&xs);
    let ey = quantile_edges(&ys);
    let cell = |x: f64, edges: &[f64]| -> Option<usize> {
        if x < edges[0] || x > edges[k] {
            None
        } else {
            Some(edges[1..k].partition_point(|&e| e < x))
        }
    };
    let mut observed = vec![0.0f64; k * k + 1];
    for &(x, y) in pts {
        match (cell(x, &ex), cell(y, &ey)) {
            (Some(i), Some(j)) => observed[i * k + j] += 1.0,
            _ => observed[k * k] += 1.0,
        }
    }
    let mut expected = vec![0.0f64; k * k + 1];
    let mut interior = 0.0;
    for i in 0..k {
        for j in 0..k {
            let mass = quadrature_2d(
                &density,
                (ex[i], ex[i + 1]),
                (ey[j], ey[j + 1]),
                2e-7 / (k * k) as f64,
            )?
            .max(0.0);
            expected[i * k + j] = mass * n as f64;
            interior += mass;
        }
    }
    expected[k * k] = ((1.0 - interior) * n as f64).max(0.0);
    merge_small_cells_and_score(observed, expected, n)
}

fn merge_small_cells_and_score(observed: Vec<f64>, expected: Vec<f64>, n: usize) -> Result<TestResult> {
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut rest_obs = 0.0;
    let mut rest_exp = 0.0;
    for (o, e) in observed.iter().zip(expected.iter()) {
        if *e >= 5.0 {
            stat += (o - e).powi(2) / e;
            cells += 1;
        } else {
            rest_obs += o;
            rest_exp += e;
        }
    }
    if rest_exp >= 5.0 {
        stat += (rest_obs - rest_exp).powi(2) / rest_exp;
        cells += 1;
    }
    if cells < 2 {
        return Err(Error::domain("chi-square: fewer than 2 usable cells"));
    }
    Ok(TestResult {
        statistic: stat,
        p_value: Some(chi2_p(stat, cells - 1)),
        n1: n,
        n2: 0,
    })
}

/// 1D Wasserstein-1 distance between empirical measures: the mean
/// absolute difference of matched quantiles. Equal-size samples pair
/// order statistics directly; unequal sizes compare the two empirical
/// quantile functions on a uniform probability grid.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("wasserstein1: empty sample"));
    }
    let xs = sorted(a);
    let ys = sorted(b);
    if xs.len() == ys.len() {
        let n = xs.len() as f64;
        return Ok(xs.iter().zip(ys.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n);
    }
    let m = xs.len().max(ys.len());
    let q = |s: &[f64], p: f64| -> f64 {
        let idx = (p * s.len() as f64) as usize;
        s[idx.min(s.len() - 1)]
    };
    let mut acc = 0.0;
    for k in 0..m {
        let p = (k as f64 + 0.5) / m as f64;
        acc += (q(&xs, p) - q(&ys, p)).abs();
    }
    Ok(acc / m as f64)
}

/// Least-squares fit of `log y = slope * log x + c`; returns
/// `(slope, stderr_of_slope)`. Inputs must be positive.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::domain("fit_exponent: need >= 3 matching points"));
    }
    if xs.iter().chain(ys.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::domain("fit_exponent: inputs must be positive"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit_exponent: degenerate abscissae"));
    }
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = (lx.len() - 2).max(1) as f64;
    let stderr = (ssr / dof / sxx).sqrt();
    Ok((slope, stderr))
}

/// Sample Pearson correlation.
pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::domain("pearson_r: need >= 3 matching points"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
        sab += (x - ma) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::domain("pearson_r: zero-variance input"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Spearman rank correlation (Pearson on mid-ranks).
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    let ranks = |s: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap());
        let mut r = vec![0.0; s.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    };
    pearson_r(&ranks(a), &ranks(b))
}

/// Piecewise-linear CDF built by cumulative quadrature of a density over
/// `[lo, hi]`; evaluations clamp to `[0, 1]` outside. The mass is not
/// renormalized, so a density that fails to integrate to one shows up as
/// a KS discrepancy rather than being hidden.
pub struct NumericCdf {
    xs: Vec<f64>,
    cs: Vec<f64>,
}

impl NumericCdf {
    pub fn build<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo < hi) || cells < 8 {
            return Err(Error::domain("NumericCdf: need lo < hi and >= 8 cells"));
        }
        let h = (hi - lo) / cells as f64;
        let mut xs = Vec::with_capacity(cells + 1);
        let mut cs = Vec::with_capacity(cells + 1);
        xs.push(lo);
        cs.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            let a = lo + k as f64 * h;
            let b = a + h;
            acc += crate::numerics::quadrature_1d(&density, a, b, 1e-11)?;
            xs.push(b);
            cs.push(acc);
        }
        Ok(NumericCdf { xs, cs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return self.cs.last().unwrap().clamp(0.0, 1.0);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        (self.cs[i] + w * (self.cs[i + 1] - self.cs[i])).clamp(0.0, 1.0)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let s = sorted(xs);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
