//! Constructed switch sets with known layer structure.

use rand::Rng;

use crate::analysis::order::SwitchSet;
use crate::error::Result;

/// `n` points `start, start + spacing, ...`.
pub fn evenly_spaced(n: usize, start: f64, spacing: f64) -> Vec<f64> {
    (0..n).map(|k| start + spacing * k as f64).collect()
}

/// `limit - d r^k` for `k = 0..n`, increasing towards `limit`.
pub fn geometric(n: usize, limit: f64, d: f64, r: f64) -> Vec<f64> {
    (0..n).map(|k| limit - d * r.powi(k as i32)).collect()
}

/// Like [`geometric`], continued while consecutive gaps stay `>= floor`.
pub fn geometric_to_floor(limit: f64, d: f64, r: f64, floor: f64) -> Vec<f64> {
    let mut out = vec![limit - d];
    let mut k = 1;
    while d * r.powi(k - 1) * (1.0 - r) >= floor {
        out.push(limit - d * r.powi(k));
        k += 1;
    }
    out
}

/// Two-level construction: anchors `a_j = 1 - 2^-j`, and just below each
/// anchor a geometric cluster `a_j - s g_j 2^-k` converging to it, where
/// `g_j` is the gap from the previous anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct Nested {
    pub anchors: usize,
    /// Cluster extent as a fraction of the anchor gap.
    pub scale: f64,
    pub cluster_points: usize,
}

impl Default for Nested {
    fn default() -> Self {
        Nested {
            anchors: 8,
            scale: 1e-3,
            cluster_points: 12,
        }
    }
}

impl Nested {
    pub fn times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 1..=self.anchors {
            let a = 1.0 - 0.5f64.powi(j as i32);
            let gap = 0.5f64.powi(j as i32);
            out.extend(geometric(self.cluster_points, a, self.scale * gap, 0.5));
        }
        out
    }

    pub fn set(&self) -> Result<SwitchSet> {
        SwitchSet::new(self.times(), 1.0, 0.0)
    }
}

/// With the default [`Nested`] set and level growth 16, every epsilon in
/// this range yields order 2. The lower end is the smallest anchor gap
/// `2^-8` divided by the growth: below it no anchors link in the second
/// round. From `1/4` up the first round already links every cluster into
/// one.
pub const NESTED_WINDOW: (f64, f64) = (2.5e-4, 0.2);

/// Random set whose accumulation structure is followed down to
/// `resolution`: a few evenly spaced points, geometric clusters, and
/// possibly a cluster of clusters, each continued until its gaps reach the
/// floor.
pub fn random_resolved_set<R: Rng>(rng: &mut R, resolution: f64) -> SwitchSet {
    let mut times = Vec::new();
    let mut cursor = 0.0;
    let blocks = rng.gen_range(1..=4);
    for _ in 0..blocks {
        let width = rng.gen_range(0.5..2.0);
        match rng.gen_range(0..3) {
            0 => {
                let n = rng.gen_range(1..6);
                let step = width / n as f64;
                times.extend(evenly_spaced(n, cursor + step / 2.0, step));
            }
            1 => {
                let r = rng.gen_range(0.1..0.7);
                times.extend(geometric_to_floor(cursor + width, width * 0.9, r, resolution));
            }
            _ => {
                let rho = rng.gen_range(0.2..0.6);
                let s = rng.gen_range(0.01..0.2);
                let r = rng.gen_range(0.1..0.6);
                let limit = cursor + width;
                let anchors = geometric_to_floor(limit, width * 0.9, rho, resolution);
                let mut prev = cursor;
                for a in anchors {
                    let floor_ok = s * (a - prev) * (1.0 - r) >= resolution;
                    if floor_ok {
                        times.extend(geometric_to_floor(a, s * (a - prev), r, resolution));
                    } else {
                        times.push(a);
                    }
                    prev = a;
                }
            }
        }
        cursor += width + rng.gen_range(0.2..1.0);
    }
    times.dedup();
    SwitchSet::new(times, cursor, resolution).expect("generator emits increasing times")
}
