//! Layered stripping of isolated points from finite switch sets.
//!
//! Distances are taken from the stored gaps rather than from differences of
//! the stored times: near an accumulation point the times agree to all
//! printed digits while the gaps are still resolved.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimResult;

/// Finite, sorted set of switch times on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchSet {
    pub times: Vec<f64>,
    /// `gaps[k]` separates `times[k]` and `times[k + 1]`.
    pub gaps: Vec<f64>,
    pub horizon: f64,
    pub resolution: f64,
}

impl SwitchSet {
    /// Build from plain times; they must be strictly increasing.
    pub fn new(times: Vec<f64>, horizon: f64, resolution: f64) -> Result<SwitchSet> {
        let gaps = times.windows(2).map(|w| w[1] - w[0]).collect();
        SwitchSet::with_gaps(times, gaps, horizon, resolution)
    }

    /// Build from times and separately computed gaps. Times only need to be
    /// non-decreasing, gaps must be positive.
    pub fn with_gaps(
        times: Vec<f64>,
        gaps: Vec<f64>,
        horizon: f64,
        resolution: f64,
    ) -> Result<SwitchSet> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidInput(format!("horizon {horizon}")));
        }
        if !(resolution >= 0.0) {
            return Err(Error::InvalidInput(format!("resolution {resolution}")));
        }
        if gaps.len() + 1 != times.len() && !(times.is_empty() && gaps.is_empty()) {
            return Err(Error::DimensionMismatch {
                expected: times.len().saturating_sub(1),
                found: gaps.len(),
            });
        }
        if let Some(t) = times
            .iter()
            .find(|t| !t.is_finite() || **t < 0.0 || **t > horizon)
        {
            return Err(Error::InvalidInput(format!("time {t} outside [0, {horizon}]")));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("times are not sorted".into()));
        }
        if let Some(g) = gaps.iter().find(|g| !(**g > 0.0)) {
            return Err(Error::InvalidInput(format!("non-positive gap {g}")));
        }
        Ok(SwitchSet {
            times,
            gaps,
            horizon,
            resolution,
        })
    }

    pub fn from_result(r: &SimResult) -> Result<SwitchSet> {
        SwitchSet::with_gaps(
            r.switch_times.clone(),
            r.switch_gaps.clone(),
            r.t_final,
            r.resolution,
        )
    }

    /// One time per line; blank lines and `#` comments are skipped.
    pub fn parse_lines(text: &str, horizon: Option<f64>, resolution: f64) -> Result<SwitchSet> {
        let mut times = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let s = line.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let t: f64 = s
                .parse()
                .map_err(|_| Error::parse(format!("line {}", k + 1), format!("bad time `{s}`")))?;
            times.push(t);
        }
        let horizon = horizon.unwrap_or_else(|| times.last().copied().unwrap_or(0.0));
        SwitchSet::new(times, horizon, resolution)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The set with one occurrence of each value in `drop` removed; gaps
    /// across removed points are summed.
    pub fn without(&self, drop: &[f64]) -> Result<SwitchSet> {
        let mut pending: Vec<f64> = drop.to_vec();
        let mut keep = Vec::with_capacity(self.times.len());
        for (k, t) in self.times.iter().enumerate() {
            match pending.iter().position(|d| d == t) {
                Some(p) => {
                    pending.swap_remove(p);
                }
                None => keep.push(k),
            }
        }
        if let Some(t) = pending.first() {
            return Err(Error::InvalidInput(format!("time {t} is not in the set")));
        }
        let gaps = keep
            .windows(2)
            .map(|w| self.gaps[w[0]..w[1]].iter().sum())
            .collect();
        SwitchSet::with_gaps(
            keep.iter().map(|&k| self.times[k]).collect(),
            gaps,
            self.horizon,
            self.resolution,
        )
    }
}

/// Points of a set by index into the original, with the gaps between
/// consecutive retained points.
#[derive(Clone, Debug)]
struct Points {
    idx: Vec<usize>,
    gaps: Vec<f64>,
}

impl Points {
    fn nearest(&self, i: usize) -> f64 {
        let left = if i > 0 { self.gaps[i - 1] } else { f64::INFINITY };
        let right = self.gaps.get(i).copied().unwrap_or(f64::INFINITY);
        left.min(right)
    }

    fn isolated(&self, eps: f64) -> Vec<bool> {
        (0..self.idx.len()).map(|i| self.nearest(i) > eps).collect()
    }

    fn subset(&self, keep: &[usize]) -> Points {
        let mut gaps = Vec::with_capacity(keep.len().saturating_sub(1));
        for w in keep.windows(2) {
            gaps.push(self.gaps[w[0]..w[1]].iter().sum());
        }
        Points {
            idx: keep.iter().map(|&i| self.idx[i]).collect(),
            gaps,
        }
    }

    /// Maximal runs of non-isolated points linked by gaps `<= eps`, as
    /// ranges of positions.
    fn clusters(&self, iso: &[bool], eps: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < iso.len() {
            if iso[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < iso.len() && !iso[i + 1] && self.gaps[i] <= eps {
                i += 1;
            }
            out.push((start, i));
            i += 1;
        }
        out
    }
}

/// Split sorted `times` into points whose nearest neighbour is farther than
/// `eps` and the rest.
pub fn strip_isolated(times: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let pts = Points {
        idx: (0..times.len()).collect(),
        gaps: times.windows(2).map(|w| w[1] - w[0]).collect(),
    };
    let mut isolated = Vec::new();
    let mut residual = Vec::new();
    for (t, iso) in times.iter().zip(pts.isolated(eps)) {
        if iso {
            isolated.push(*t);
        } else {
            residual.push(*t);
        }
    }
    (isolated, residual)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Epsilon {
    Fixed(f64),
    Auto,
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Epsilon> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Epsilon::Auto);
        }
        s.parse::<f64>()
            .map(Epsilon::Fixed)
            .map_err(|_| Error::InvalidInput(format!("epsilon `{s}` is neither a number nor `auto`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterPoint {
    #[default]
    Supremum,
    Centroid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderOptions {
    /// Scale factor between consecutive stripping rounds.
    pub level_growth: f64,
    pub report: ClusterPoint,
}

impl Default for OrderOptions {
    fn default() -> Self {
        OrderOptions {
            level_growth: 16.0,
            report: ClusterPoint::Supremum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationPoint {
    pub t: f64,
    /// Round in which the cluster was found; 1 for limits of layer 0 points.
    pub level: usize,
    pub cluster_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub layers: Vec<Vec<f64>>,
    pub estimated_order: usize,
    pub accumulation_points: Vec<AccumulationPoint>,
    pub epsilon_used: f64,
    pub level_growth: f64,
}

/// Threshold separating the two modes of the log-gap distribution.
///
/// Sorted log-gaps are split at their widest jump and the result is the
/// geometric mean of the two group means. If all gaps lie within a factor
/// of 4 of each other the set has no cluster scale and half the smallest gap
/// is returned. The value never drops below `2 * resolution`.
pub fn auto_epsilon(set: &SwitchSet) -> f64 {
    let floor = 2.0 * set.resolution;
    let mut logs: Vec<f64> = set.gaps.iter().map(|g| g.ln()).collect();
    if logs.is_empty() {
        return floor.max(f64::MIN_POSITIVE);
    }
    logs.sort_by(f64::total_cmp);
    let (lo, hi) = (logs[0], logs[logs.len() - 1]);
    if hi - lo < 4f64.ln() {
        return (0.5 * lo.exp()).max(floor);
    }
    let jumps: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let widest = jumps.iter().copied().fold(0.0, f64::max);
    // among near-ties take the middle one, so an even ladder splits in half
    let ties: Vec<usize> = (0..jumps.len())
        .filter(|&k| jumps[k] >= widest * (1.0 - 1e-9))
        .collect();
    let cut = ties[ties.len() / 2] + 1;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (0.5 * (mean(&logs[..cut]) + mean(&logs[cut..])))
        .exp()
        .max(floor)
}

/// Layered stripping at the scales `eps, eps g, eps g^2, ...`.
///
/// Each round removes the isolated points, collapses every remaining cluster
/// onto its supremum and hands those limits to the next round at scale
/// `g` times larger. Points of a cluster other than its limit join the
/// current layer. The recursion stops when a round isolates everything,
/// which includes single-point sets.
pub fn fuller_order(set: &SwitchSet, eps: Epsilon, opts: &OrderOptions) -> Result<OrderReport> {
    let eps = match eps {
        Epsilon::Auto => auto_epsilon(set),
        Epsilon::Fixed(e) => {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidInput(format!("epsilon {e} must be positive")));
            }
            if e < 2.0 * set.resolution {
                return Err(Error::InvalidInput(format!(
                    "epsilon {e} below twice the resolution {}",
                    set.resolution
                )));
            }
            e
        }
    };
    if !(opts.level_growth >= 1.0) {
        return Err(Error::InvalidInput(format!("level growth {}", opts.level_growth)));
    }
    let mut pts = Points {
        idx: (0..set.len()).collect(),
        gaps: set.gaps.clone(),
    };
    let mut layers = Vec::new();
    let mut accumulation_points = Vec::new();
    let mut scale = eps;
    let mut level = 0;
    while !pts.idx.is_empty() {
        level += 1;
        let iso = pts.isolated(scale);
        let clusters = pts.clusters(&iso, scale);
        if clusters.is_empty() {
            layers.push(pts.idx.iter().map(|&i| set.times[i]).collect());
            break;
        }
        let mut reps = Vec::with_capacity(clusters.len());
        let mut is_rep = vec![false; pts.idx.len()];
        for &(a, b) in &clusters {
            reps.push(b);
            is_rep[b] = true;
            let t = match opts.report {
                ClusterPoint::Supremum => set.times[pts.idx[b]],
                ClusterPoint::Centroid => {
                    (a..=b).map(|i| set.times[pts.idx[i]]).sum::<f64>() / (b - a + 1) as f64
                }
            };
            accumulation_points.push(AccumulationPoint {
                t,
                level,
                cluster_size: b - a + 1,
            });
        }
        layers.push(
            (0..pts.idx.len())
                .filter(|&i| !is_rep[i])
                .map(|i| set.times[pts.idx[i]])
                .collect(),
        );
        pts = pts.subset(&reps);
        scale *= opts.level_growth;
    }
    Ok(OrderReport {
        estimated_order: layers.len().saturating_sub(1),
        layers,
        accumulation_points,
        epsilon_used: eps,
        level_growth: opts.level_growth,
    })
}
