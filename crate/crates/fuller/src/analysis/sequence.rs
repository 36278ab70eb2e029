//! Interval ratios and the slowly decaying recursion `t' = t (1 - c t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// `exp` of the least-squares slope of `ln gap_i` against `i`.
    pub ratio: f64,
    /// Sample standard deviation of `ln(gap_{i+1} / gap_i)`.
    pub dispersion: f64,
    pub intervals: usize,
}

/// Ratio estimate from consecutive interval lengths; needs at least five.
pub fn chatter_ratio_gaps(gaps: &[f64]) -> Result<RatioEstimate> {
    let n = gaps.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("{n} intervals, need at least 5")));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput(format!("interval {g}")));
    }
    let logs: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let xm = (n - 1) as f64 / 2.0;
    let ym = logs.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let steps: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let m = steps.iter().sum::<f64>() / steps.len() as f64;
    let var = steps.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (steps.len() - 1) as f64;
    Ok(RatioEstimate {
        ratio: (sxy / sxx).exp(),
        dispersion: var.sqrt(),
        intervals: n,
    })
}

/// Ratio estimate from sorted switch times.
pub fn chatter_ratio(times: &[f64]) -> Result<RatioEstimate> {
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    chatter_ratio_gaps(&gaps)
}

/// `t_1, ..., t_n` with `t_{i+1} = t_i (1 - c t_i)`.
pub fn recursion_simulate(t1: f64, c: f64, n: usize) -> Result<Vec<f64>> {
    if !(t1 > 0.0 && c >= 0.0 && c * t1 < 1.0) {
        return Err(Error::InvalidInput(format!("need 0 < t1 < 1/c, got t1 = {t1}, c = {c}")));
    }
    let mut out = Vec::with_capacity(n);
    let mut t = t1;
    for _ in 0..n {
        out.push(t);
        t *= 1.0 - c * t;
    }
    Ok(out)
}

/// Zero-based index of the first partial sum exceeding `m`.
pub fn divergence_check(seq: &[f64], m: f64) -> Option<usize> {
    let mut s = 0.0;
    seq.iter().position(|t| {
        s += t;
        s > m
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    /// Model `S_N = a ln N + b`.
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

/// Fit partial sums against `ln N` at `points` log-spaced `N` in `[lo, hi]`
/// (one-based counts, clipped to the sequence length).
pub fn log_growth_fit(seq: &[f64], lo: usize, hi: usize, points: usize) -> Result<LogFit> {
    let hi = hi.min(seq.len());
    if lo < 1 || hi <= lo || points < 3 {
        return Err(Error::InvalidInput(format!("fit range [{lo}, {hi}] with {points} points")));
    }
    let mut partial = Vec::with_capacity(hi);
    let mut s = 0.0;
    for t in &seq[..hi] {
        s += t;
        partial.push(s);
    }
    let (l0, l1) = ((lo as f64).ln(), (hi as f64).ln());
    let mut ns: Vec<usize> = (0..points)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp().round() as usize)
        .map(|n| n.clamp(lo, hi))
        .collect();
    ns.dedup();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ns.iter().map(|&n| partial[n - 1]).collect();
    let k = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let a = sxy / sxx;
    let b = ym - a * xm;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    Ok(LogFit {
        a,
        b,
        r2: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}
