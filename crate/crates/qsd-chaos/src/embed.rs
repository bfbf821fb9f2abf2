//! Delay-embedding reconstruction and neighbor search.
//!
//! A scalar series x₀, x₁, … is lifted to m-dimensional points
//! vᵢ = (xᵢ, xᵢ₊τ, …, xᵢ₊₍ₘ₋₁₎τ). Neighborhoods use the max-norm and a
//! Theiler window that excludes temporally close (hence trivially
//! correlated) points. The delay τ is chosen from the first minimum of the
//! time-lagged mutual information, with an autocorrelation fallback.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Histogram resolution for the mutual-information delay estimator.
const MI_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EmbeddingConfig {
    /// Embedding dimension m ≥ 1.
    pub m: usize,
    /// Delay in samples, ≥ 1.
    pub tau: usize,
    /// Theiler exclusion window in samples; neighbor pairs require |i−j| > theiler.
    pub theiler: usize,
}

impl EmbeddingConfig {
    pub fn new(m: usize, tau: usize, theiler: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Config("embedding dimension m must be >= 1".into()));
        }
        if tau < 1 {
            return Err(Error::Config("delay tau must be >= 1".into()));
        }
        Ok(Self { m, tau, theiler })
    }

    /// Default Theiler window: one embedding-window length, τ·m.
    pub fn with_default_theiler(m: usize, tau: usize) -> Result<Self> {
        Self::new(m, tau, tau * m)
    }
}

/// Delay-embedded point cloud; points stored row-major in a flat buffer.
#[derive(Debug, Clone)]
pub struct EmbeddedCloud {
    coords: Vec<f64>,
    count: usize,
    pub source_len: usize,
    pub config: EmbeddingConfig,
}

impl EmbeddedCloud {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.config.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.config.m..(i + 1) * self.config.m]
    }

    /// Max-norm distance between points i and j.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Delay-embed a series: point i component j is sample i + j·τ.
pub fn embed(series: &TimeSeries, config: EmbeddingConfig) -> Result<EmbeddedCloud> {
    let n = series.len();
    let span = (config.m - 1) * config.tau;
    if n <= span {
        return Err(Error::TooShort {
            need: span + 1,
            got: n,
        });
    }
    let count = n - span;
    let values = series.values();
    let mut coords = Vec::with_capacity(count * config.m);
    for i in 0..count {
        for j in 0..config.m {
            coords.push(values[i + j * config.tau]);
        }
    }
    Ok(EmbeddedCloud {
        coords,
        count,
        source_len: n,
        config,
    })
}

/// Time-lagged mutual information of the series with itself, in nats, from
/// a `MI_BINS`×`MI_BINS` joint histogram spanning the series range.
fn lagged_mutual_information(values: &[f64], lag: usize, lo: f64, width: f64) -> f64 {
    let n = values.len() - lag;
    let bin = |v: f64| -> usize { (((v - lo) / width * MI_BINS as f64) as usize).min(MI_BINS - 1) };
    let mut joint = [[0u32; MI_BINS]; MI_BINS];
    for i in 0..n {
        joint[bin(values[i])][bin(values[i + lag])] += 1;
    }
    let mut row = [0u32; MI_BINS];
    let mut col = [0u32; MI_BINS];
    for (r, jr) in joint.iter().enumerate() {
        for (c, &cnt) in jr.iter().enumerate() {
            row[r] += cnt;
            col[c] += cnt;
        }
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for (r, jr) in joint.iter().enumerate() {
        for (c, &cnt) in jr.iter().enumerate() {
            if cnt > 0 {
                let pij = cnt as f64 / nf;
                mi += pij * (pij * nf * nf / (row[r] as f64 * col[c] as f64)).ln();
            }
        }
    }
    mi
}

/// Boxcar half-width used to smooth the MI curve before minimum detection.
const MI_SMOOTH: usize = 4;
/// A smoothed-MI minimum must be lowest within ± this many lags.
const MI_MIN_WINDOW: usize = 5;

/// Choose the embedding delay from the lagged-mutual-information curve.
///
/// Rules, in order, scanning lags 1..=len/4:
/// 1. the first lag whose raw MI falls below the independence floor
///    (B−1)²/n nats, twice the plug-in estimator bias, so uncorrelated
///    series deterministically yield τ = 1;
/// 2. otherwise the first minimum of the boxcar-smoothed MI curve
///    (half-width [`MI_SMOOTH`]), where "minimum" means lowest value within
///    ±[`MI_MIN_WINDOW`] lags; raw binned MI of near-periodic signals
///    carries bin-edge moiré of the same scale as its true dips, so strict
///    one-lag minima are unreliable;
/// 3. otherwise the first lag where the autocorrelation drops below 1/e
///    (len/4 if it never does).
///
/// The MI curve is evaluated lazily; typical signals resolve within a few
/// dozen lags.
pub fn choose_delay(series: &TimeSeries) -> Result<usize> {
    let values = series.values();
    let n = values.len();
    if n < 100 {
        return Err(Error::TooShort { need: 100, got: n });
    }
    let lo = series.min();
    let hi = series.max();
    let width = hi - lo;
    if width == 0.0 {
        return Err(Error::Degenerate(
            "constant series has no information structure to choose a delay from".into(),
        ));
    }
    let max_lag = n / 4;

    // mi[c] is the raw MI at lag c+1; extended on demand.
    let mut mi: Vec<f64> = Vec::new();
    // Smoothed value at curve index j; needs raw MI through j + MI_SMOOTH
    // (or the curve end). Edge cells shrink the boxcar.
    let smoothed = |mi: &[f64], j: usize| -> f64 {
        let a = j.saturating_sub(MI_SMOOTH);
        let b = (j + MI_SMOOTH + 1).min(max_lag);
        mi[a..b].iter().sum::<f64>() / (b - a) as f64
    };
    let mut candidate = 0usize; // next curve index to test as a minimum
    for lag in 1..=max_lag {
        let value = lagged_mutual_information(values, lag, lo, width);
        let floor = ((MI_BINS - 1) * (MI_BINS - 1)) as f64 / (n - lag) as f64;
        if value <= floor {
            return Ok(lag);
        }
        mi.push(value);
        // Confirm pending candidates whose full smoothing+window context is
        // now available. Candidates in the trailing window of the curve are
        // skipped: a "minimum" against a boundary is an artifact.
        while candidate + MI_MIN_WINDOW < max_lag
            && candidate + MI_MIN_WINDOW + MI_SMOOTH < mi.len()
        {
            let c = candidate;
            let sc = smoothed(&mi, c);
            let a = c.saturating_sub(MI_MIN_WINDOW);
            let b = c + MI_MIN_WINDOW;
            let window = (a..=b).map(|j| smoothed(&mi, j));
            let is_min = window.clone().all(|v| sc <= v) && window.clone().any(|v| sc < v);
            if is_min {
                return Ok(c + 1);
            }
            candidate += 1;
        }
    }
    // Drain candidates whose windows clamp at the curve end (raw MI is now
    // complete, so the stricter lookahead bound above no longer applies).
    while candidate + MI_MIN_WINDOW < max_lag {
        let c = candidate;
        let sc = smoothed(&mi, c);
        let a = c.saturating_sub(MI_MIN_WINDOW);
        let b = c + MI_MIN_WINDOW;
        let window = (a..=b).map(|j| smoothed(&mi, j));
        if window.clone().all(|v| sc <= v) && window.clone().any(|v| sc < v) {
            return Ok(c + 1);
        }
        candidate += 1;
    }

    let mean = series.mean();
    let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let target = var / std::f64::consts::E;
    for lag in 1..=max_lag {
        let acf: f64 = (0..n - lag)
            .map(|i| (values[i] - mean) * (values[i + lag] - mean))
            .sum();
        // Compare unnormalized sums scaled to equal length.
        if acf * n as f64 / (n - lag) as f64 <= target {
            return Ok(lag);
        }
    }
    Ok(max_lag.max(1))
}

/// Box-assisted neighbor index for one fixed radius.
///
/// Points are binned by their first and last embedding coordinates into
/// cells of side ε, so all max-norm neighbors of a point lie in the 3×3
/// block around its cell; candidates are then filtered by the exact
/// distance and the Theiler window.
pub struct NeighborGrid {
    cells: HashMap<(i64, i64), Vec<u32>>,
    epsilon: f64,
}

impl NeighborGrid {
    pub fn build(cloud: &EmbeddedCloud, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!(
                "neighbor radius epsilon = {epsilon} must be finite and positive"
            )));
        }
        let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for i in 0..cloud.count() {
            cells.entry(Self::cell_of(cloud, i, epsilon)).or_default().push(i as u32);
        }
        Ok(Self { cells, epsilon })
    }

    fn cell_of(cloud: &EmbeddedCloud, i: usize, epsilon: f64) -> (i64, i64) {
        let p = cloud.point(i);
        (
            (p[0] / epsilon).floor() as i64,
            (p[p.len() - 1] / epsilon).floor() as i64,
        )
    }

    /// Indices j (ascending) with ‖pᵢ−pⱼ‖∞ ≤ ε and |i−j| > theiler.
    pub fn neighbors(&self, cloud: &EmbeddedCloud, index: usize) -> Vec<usize> {
        let (cx, cy) = Self::cell_of(cloud, index, self.epsilon);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        let j = j as usize;
                        if index.abs_diff(j) > cloud.config.theiler
                            && cloud.distance(index, j) <= self.epsilon
                        {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// One-shot neighbor query; builds a throwaway grid.
pub fn neighbors(cloud: &EmbeddedCloud, index: usize, epsilon: f64) -> Result<Vec<usize>> {
    if index >= cloud.count() {
        return Err(Error::Config(format!(
            "point index {index} out of range (cloud has {} points)",
            cloud.count()
        )));
    }
    Ok(NeighborGrid::build(cloud, epsilon)?.neighbors(cloud, index))
}

/// Quadratic-scan reference for the accelerated neighbor search; used by
/// tests to certify the grid and available for small clouds.
pub fn brute_force_neighbors(cloud: &EmbeddedCloud, index: usize, epsilon: f64) -> Vec<usize> {
    (0..cloud.count())
        .filter(|&j| index.abs_diff(j) > cloud.config.theiler && cloud.distance(index, j) <= epsilon)
        .collect()
}
