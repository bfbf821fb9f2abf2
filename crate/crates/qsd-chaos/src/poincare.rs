//! Stroboscopic Poincaré sections and attractor-shape classification.
//!
//! For a periodically driven system the natural section is the strobe map:
//! sample (x, p) once per drive period at a fixed phase. A chaotic attractor
//! fills an extended fractal set; a period-n orbit collapses onto n points.
//! The occupancy summary (grid occupancy plus single-linkage cluster count)
//! turns that visual distinction into a reproducible classification.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Cluster-count ceiling for the point-like class.
pub const POINT_LIKE_MAX_CLUSTERS: usize = 3;
/// Cluster-count ceiling for the few-cycle class.
pub const FEW_CYCLE_MAX_CLUSTERS: usize = 20;
/// Default occupancy grid resolution per axis.
pub const DEFAULT_SECTION_GRID: usize = 50;
/// Default single-linkage radius; calibrated so a strobed chaotic attractor
/// stays fragmented while a noise blob or periodic orbit coalesces.
pub const DEFAULT_R_CLUSTER: f64 = 0.03;
/// Minimum points for a meaningful classification.
pub const MIN_SECTION_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SectionPoints {
    /// (x, p) at successive strobe times.
    pub points: Vec<(f64, f64)>,
    pub period: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OccupancySummary {
    pub grid_cells: usize,
    /// Nonempty cells of the grid_cells × grid_cells occupancy grid.
    pub occupied: usize,
    /// Single-linkage clusters at the radius given to [`occupancy`].
    pub cluster_count: usize,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionClass {
    PointLike,
    FewCycle,
    Extended,
}

impl std::fmt::Display for SectionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SectionClass::PointLike => "point-like",
            SectionClass::FewCycle => "few-cycle",
            SectionClass::Extended => "extended",
        })
    }
}

/// Stroboscopic section: linear interpolation of (x, p) at times
/// phase, phase + T, phase + 2T, … relative to the series start.
pub fn strobe(x: &TimeSeries, p: &TimeSeries, period: f64, phase: f64) -> Result<SectionPoints> {
    if x.t0() != p.t0() || x.dt() != p.dt() || x.len() != p.len() {
        return Err(Error::Config(
            "x and p series must share t0, dt and length".into(),
        ));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Config(format!("strobe period {period} must be positive")));
    }
    if !(0.0..period).contains(&phase) {
        return Err(Error::Config(format!(
            "strobe phase {phase} must lie in [0, period)"
        )));
    }
    let t_end = (x.len() - 1) as f64 * x.dt();
    let count = if phase > t_end {
        0
    } else {
        ((t_end - phase) / period).floor() as usize + 1
    };
    if count < 2 {
        return Err(Error::InsufficientDuration { period });
    }
    let interp = |s: &TimeSeries, t_rel: f64| -> f64 {
        let pos = t_rel / s.dt();
        let i = (pos.floor() as usize).min(s.len() - 2);
        let frac = pos - i as f64;
        s.values()[i] * (1.0 - frac) + s.values()[i + 1] * frac
    };
    let points = (0..count)
        .map(|j| {
            let t_rel = phase + j as f64 * period;
            (interp(x, t_rel), interp(p, t_rel))
        })
        .collect();
    Ok(SectionPoints {
        points,
        period,
        phase,
    })
}

/// Occupancy grid and single-linkage cluster count.
///
/// The grid spans the bounding box expanded by 5%; clusters merge any two
/// points within Euclidean distance `r_cluster`. A fully degenerate section
/// (all points identical) is valid: one cell, one cluster.
pub fn occupancy(
    section: &SectionPoints,
    grid_cells: usize,
    r_cluster: f64,
) -> Result<OccupancySummary> {
    let pts = &section.points;
    if pts.is_empty() {
        return Err(Error::Config("occupancy of an empty section".into()));
    }
    if grid_cells < 1 {
        return Err(Error::Config("grid_cells must be >= 1".into()));
    }
    if !(r_cluster.is_finite() && r_cluster > 0.0) {
        return Err(Error::Config(format!(
            "r_cluster = {r_cluster} must be positive"
        )));
    }
    let (mut x_lo, mut x_hi, mut p_lo, mut p_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, p) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        p_lo = p_lo.min(p);
        p_hi = p_hi.max(p);
    }
    let expand = |lo: f64, hi: f64| {
        // Floor the width so an axis that is constant up to float jitter
        // collapses to one cell row instead of being resolved by the grid.
        let floor = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
        let w = (hi - lo).max(floor);
        (lo - 0.025 * w, 1.05 * w)
    };
    let (x0, xw) = expand(x_lo, x_hi);
    let (p0, pw) = expand(p_lo, p_hi);
    let cell = |v: f64, lo: f64, w: f64| -> usize {
        (((v - lo) / w * grid_cells as f64) as usize).min(grid_cells - 1)
    };
    let mut cells: Vec<(u32, u32)> = pts
        .iter()
        .map(|&(x, p)| (cell(x, x0, xw) as u32, cell(p, p0, pw) as u32))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let occupied = cells.len();

    // Single-linkage via union-find over all close pairs.
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let r2 = r_cluster * r_cluster;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dx = pts[i].0 - pts[j].0;
            let dp = pts[i].1 - pts[j].1;
            if dx * dx + dp * dp <= r2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let cluster_count = (0..pts.len())
        .filter(|&i| find(&mut parent, i) == i)
        .count();

    Ok(OccupancySummary {
        grid_cells,
        occupied,
        cluster_count,
        n_points: pts.len(),
    })
}

/// Map a section summary onto the three observed attractor outcomes.
pub fn classify_section(summary: &OccupancySummary) -> Result<SectionClass> {
    if summary.n_points < MIN_SECTION_POINTS {
        return Err(Error::InsufficientPoints {
            got: summary.n_points,
            need: MIN_SECTION_POINTS,
        });
    }
    Ok(if summary.cluster_count <= POINT_LIKE_MAX_CLUSTERS {
        SectionClass::PointLike
    } else if summary.cluster_count <= FEW_CYCLE_MAX_CLUSTERS {
        SectionClass::FewCycle
    } else {
        SectionClass::Extended
    })
}
