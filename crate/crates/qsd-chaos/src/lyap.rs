//! Maximal-Lyapunov-exponent estimation from scalar time series.
//!
//! The estimator follows the Kantz construction: delay-embed the series,
//! collect the ε-neighborhood of each reference point, and track the mean
//! absolute separation of the scalar signal at growing horizons,
//!
//! ```text
//! S(t) = ⟨ ln[ (1/|U_ε(i)|) Σ_{j ∈ U_ε(i)} |x_{e_i+t} − x_{e_j+t}| ] ⟩_i
//! ```
//!
//! where e_i is the time index of the final embedding coordinate of point i.
//! Exponential divergence shows up as an initial linear segment of S versus
//! time whose slope is λ_max; saturation at the attractor diameter follows.
//! The slope is extracted by least squares over an automatically detected
//! linear region (or caller-fixed bounds), giving λ in inverse scaled-time
//! units.

use rayon::prelude::*;

use crate::embed::{embed, EmbeddingConfig, NeighborGrid};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Default λ threshold separating chaotic from non-chaotic classifications.
pub const DEFAULT_CHAOS_THRESHOLD: f64 = 0.05;
/// Embedding dimensions scanned by default panels.
pub const DEFAULT_M_LIST: [usize; 6] = [2, 3, 4, 5, 6, 7];
/// Minimum r² for a window to count as a linear region.
const FIT_R2_MIN: f64 = 0.98;
/// Minimum window length (horizon points) for the linear-region search.
const FIT_MIN_POINTS: usize = 10;

/// Default neighborhood ladder: 4 geometric radii from σ/100 to σ/10.
pub fn default_epsilon_ladder(sigma: f64) -> [f64; 4] {
    let lo = sigma / 100.0;
    let step = 10f64.powf(1.0 / 3.0);
    [lo, lo * step, lo * step * step, sigma / 10.0]
}

/// Tuning knobs for [`kantz_divergence`].
#[derive(Debug, Clone, Copy)]
pub struct KantzParams {
    /// Reference points need at least this many neighbors to contribute.
    pub n_min: usize,
    /// Cap on reference points; the valid range is strided down to at most
    /// this many. Full TISEAN-style exhaustive references are obtained with
    /// `usize::MAX`.
    pub max_refs: usize,
    /// A curve averaged over fewer qualifying references than this is
    /// rejected: single-digit reference counts produce slopes dominated by
    /// individual neighborhoods.
    pub min_refs: usize,
}

impl Default for KantzParams {
    fn default() -> Self {
        Self {
            n_min: 5,
            max_refs: 4096,
            min_refs: 50,
        }
    }
}

/// One divergence curve S(ε, m, t) at fixed ε and m.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCurve {
    pub m: usize,
    pub epsilon: f64,
    /// S at horizon steps 0..=t_max.
    pub s_values: Vec<f64>,
    /// References that had ≥ n_min usable neighbors.
    pub ref_count: usize,
    /// Sample interval of the underlying series; horizon step h is time h·dt.
    pub dt: f64,
}

impl DivergenceCurve {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.s_values.len()).map(|h| h as f64 * self.dt)
    }
}

/// Kantz divergence curve with default tuning.
pub fn kantz_divergence(
    series: &TimeSeries,
    config: EmbeddingConfig,
    epsilon: f64,
    t_max: usize,
) -> Result<DivergenceCurve> {
    kantz_divergence_with(series, config, epsilon, t_max, &KantzParams::default())
}

pub fn kantz_divergence_with(
    series: &TimeSeries,
    config: EmbeddingConfig,
    epsilon: f64,
    t_max: usize,
    params: &KantzParams,
) -> Result<DivergenceCurve> {
    if t_max < 1 {
        return Err(Error::Config("t_max must be >= 1".into()));
    }
    if params.n_min < 1 {
        return Err(Error::Config("n_min must be >= 1".into()));
    }
    let cloud = embed(series, config)?;
    // Points whose final coordinate has t_max future samples available; only
    // these may serve as references or neighbors.
    let valid = cloud.count().checked_sub(t_max).filter(|&v| v > 0).ok_or(Error::TooShort {
        need: (config.m - 1) * config.tau + t_max + 2,
        got: series.len(),
    })?;
    let grid = NeighborGrid::build(&cloud, epsilon)?;
    let values = series.values();
    let span = (config.m - 1) * config.tau;

    let stride = valid.div_ceil(params.max_refs.max(1)).max(1);
    let refs: Vec<usize> = (0..valid).step_by(stride).collect();

    // Per-reference curves computed in parallel, reduced sequentially so the
    // result is independent of thread scheduling.
    let per_ref: Vec<Option<Vec<f64>>> = refs
        .par_iter()
        .map(|&i| {
            let neigh: Vec<usize> = grid
                .neighbors(&cloud, i)
                .into_iter()
                .filter(|&j| j < valid)
                .collect();
            if neigh.len() < params.n_min {
                return None;
            }
            let e_i = i + span;
            let inv = 1.0 / neigh.len() as f64;
            let mut curve = Vec::with_capacity(t_max + 1);
            for h in 0..=t_max {
                let mut sum = 0.0;
                for &j in &neigh {
                    sum += (values[e_i + h] - values[j + span + h]).abs();
                }
                // Coincident neighbors would give ln(0); floor keeps S finite.
                curve.push((sum * inv).max(1e-300).ln());
            }
            Some(curve)
        })
        .collect();

    let mut s_values = vec![0.0; t_max + 1];
    let mut ref_count = 0usize;
    for curve in per_ref.into_iter().flatten() {
        for (acc, v) in s_values.iter_mut().zip(&curve) {
            *acc += v;
        }
        ref_count += 1;
    }
    if ref_count == 0 {
        return Err(Error::InsufficientNeighbors {
            epsilon,
            n_min: params.n_min,
        });
    }
    if ref_count < params.min_refs {
        return Err(Error::InsufficientReferences {
            epsilon,
            got: ref_count,
            need: params.min_refs,
        });
    }
    for v in &mut s_values {
        *v /= ref_count as f64;
    }
    Ok(DivergenceCurve {
        m: config.m,
        epsilon,
        s_values,
        ref_count,
        dt: series.dt(),
    })
}

/// A (m, ε) combination skipped by [`divergence_panel`] and why.
#[derive(Debug, Clone)]
pub struct SkippedCombo {
    pub m: usize,
    pub epsilon: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PanelOutcome {
    pub curves: Vec<DivergenceCurve>,
    pub skipped: Vec<SkippedCombo>,
}

/// Divergence curves over the (m, ε) product grid.
///
/// Combinations that fail (too few neighbors at small ε, series too short
/// for large m) are reported in `skipped` rather than aborting the panel;
/// only a panel with no valid curve at all is an error.
pub fn divergence_panel(
    series: &TimeSeries,
    m_list: &[usize],
    epsilon_list: &[f64],
    t_max: usize,
    tau: usize,
    params: &KantzParams,
) -> Result<PanelOutcome> {
    if m_list.is_empty() || epsilon_list.is_empty() {
        return Err(Error::Config("panel needs non-empty m and epsilon lists".into()));
    }
    let total = m_list.len() * epsilon_list.len();
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for &m in m_list {
        let config = match EmbeddingConfig::with_default_theiler(m, tau) {
            Ok(c) => c,
            Err(e) => {
                for &epsilon in epsilon_list {
                    skipped.push(SkippedCombo {
                        m,
                        epsilon,
                        reason: e.to_string(),
                    });
                }
                continue;
            }
        };
        for &epsilon in epsilon_list {
            match kantz_divergence_with(series, config, epsilon, t_max, params) {
                Ok(curve) => curves.push(curve),
                Err(e) => skipped.push(SkippedCombo {
                    m,
                    epsilon,
                    reason: e.to_string(),
                }),
            }
        }
    }
    if curves.is_empty() {
        return Err(Error::PanelEmpty(total));
    }
    Ok(PanelOutcome { curves, skipped })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LyapunovEstimate {
    /// Slope of the mean divergence curve, per unit scaled time.
    pub lambda: f64,
    /// First horizon index of the fitted window (inclusive).
    pub fit_from: usize,
    /// Last horizon index of the fitted window (inclusive).
    pub fit_to: usize,
    pub r_squared: f64,
    /// (m, ε) of every curve that entered the pointwise mean.
    pub curves_used: Vec<(usize, f64)>,
}

/// Outcome of slope extraction: a fitted estimate, or the distinguished
/// no-linear-region result (no evidence of exponential divergence).
#[derive(Debug, Clone, PartialEq)]
pub enum LyapunovFit {
    Linear(LyapunovEstimate),
    NoLinearRegion,
}

impl LyapunovFit {
    pub fn estimate(&self) -> Option<&LyapunovEstimate> {
        match self {
            LyapunovFit::Linear(e) => Some(e),
            LyapunovFit::NoLinearRegion => None,
        }
    }
}

/// Least-squares line through (x[a..=b]·dt, s[a..=b]); returns (slope, r²).
fn window_fit(s: &[f64], dt: f64, a: usize, b: usize) -> (f64, f64) {
    let n = (b - a + 1) as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for h in a..=b {
        sx += h as f64 * dt;
        sy += s[h];
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for h in a..=b {
        let dx = h as f64 * dt - mx;
        let dy = s[h] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res = syy - slope * sxy;
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        // Exactly flat data is a perfect (zero-slope) line.
        1.0
    };
    (slope, r2)
}

/// Fit λ from one or more divergence curves.
///
/// The curves are averaged pointwise (they must share dt; differing lengths
/// are truncated to the shortest) and a single line is fitted to the mean
/// curve. Explicit `fit_from..=fit_to` horizon bounds override detection;
/// otherwise the linear region is found automatically: among all windows of
/// at least 10 points lying in the first half of the curve with r² ≥ 0.98,
/// the longest wins, ties broken by smaller start index. No qualifying
/// window means no evidence of exponential divergence and yields
/// [`LyapunovFit::NoLinearRegion`].
pub fn fit_lambda(
    curves: &[DivergenceCurve],
    fit_from: Option<usize>,
    fit_to: Option<usize>,
) -> Result<LyapunovFit> {
    if curves.is_empty() {
        return Err(Error::Config("fit_lambda needs at least one curve".into()));
    }
    let dt = curves[0].dt;
    if curves.iter().any(|c| c.dt != dt) {
        return Err(Error::Config(
            "divergence curves disagree on dt; fit one series at a time".into(),
        ));
    }
    let len = curves.iter().map(|c| c.s_values.len()).min().unwrap();
    if len < 2 {
        return Err(Error::Config("divergence curves too short to fit".into()));
    }
    let mean: Vec<f64> = (0..len)
        .map(|h| curves.iter().map(|c| c.s_values[h]).sum::<f64>() / curves.len() as f64)
        .collect();
    let curves_used: Vec<(usize, f64)> = curves.iter().map(|c| (c.m, c.epsilon)).collect();

    let (a, b) = match (fit_from, fit_to) {
        (Some(a), Some(b)) => {
            if a >= b || b >= len {
                return Err(Error::Config(format!(
                    "fit window {a}..{b} invalid for curve of length {len}"
                )));
            }
            (a, b)
        }
        (None, None) => {
            // Window must end in the first half so saturation cannot leak in.
            let half_end = (len - 1) / 2;
            let mut best: Option<(usize, usize)> = None;
            for a in 0..=half_end.saturating_sub(FIT_MIN_POINTS - 1) {
                for b in (a + FIT_MIN_POINTS - 1)..=half_end {
                    let (_, r2) = window_fit(&mean, dt, a, b);
                    if r2 >= FIT_R2_MIN {
                        let better = match best {
                            None => true,
                            Some((ba, bb)) => {
                                let (cur, old) = (b - a, bb - ba);
                                cur > old || (cur == old && a < ba)
                            }
                        };
                        if better {
                            best = Some((a, b));
                        }
                    }
                }
            }
            match best {
                Some(w) => w,
                None => return Ok(LyapunovFit::NoLinearRegion),
            }
        }
        _ => {
            return Err(Error::Config(
                "fit bounds must be both given or both omitted".into(),
            ))
        }
    };

    let (slope, r2) = window_fit(&mean, dt, a, b);
    Ok(LyapunovFit::Linear(LyapunovEstimate {
        lambda: slope,
        fit_from: a,
        fit_to: b,
        r_squared: r2,
        curves_used,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChaosClass {
    Chaotic,
    NotChaotic,
}

impl std::fmt::Display for ChaosClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChaosClass::Chaotic => write!(f, "chaotic"),
            ChaosClass::NotChaotic => write!(f, "not-chaotic"),
        }
    }
}

/// Chaotic iff a linear region was found and its slope reaches `threshold`
/// (per unit scaled time).
pub fn classify_chaos(fit: &LyapunovFit, threshold: f64) -> ChaosClass {
    match fit {
        LyapunovFit::Linear(est) if est.lambda >= threshold => ChaosClass::Chaotic,
        _ => ChaosClass::NotChaotic,
    }
}
