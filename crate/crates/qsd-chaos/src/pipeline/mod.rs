//! End-to-end pipeline behind the CLI: config resolution, run manifests,
//! and the four commands (simulate / analyze / sweep / report).
//!
//! Every command resolves its configuration fully (no defaults left
//! implicit), writes its outputs, then writes a manifest recording the
//! resolved config; re-running from a manifest reproduces the CSV outputs
//! byte-identically.

pub mod svg;

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyap::{
    classify_chaos, default_epsilon_ladder, divergence_panel, fit_lambda, ChaosClass,
    DivergenceCurve, KantzParams, DEFAULT_CHAOS_THRESHOLD, DEFAULT_M_LIST,
};
use crate::embed::choose_delay;
use crate::poincare::{
    classify_section, occupancy, strobe, SectionClass, DEFAULT_R_CLUSTER, DEFAULT_SECTION_GRID,
};
use crate::qsd::{
    coherent_state, default_basis_size, default_dt, simulate, QsdParams,
    DEFAULT_SAMPLES_PER_PERIOD, DEFAULT_TRANSIENT_PERIODS,
};
use crate::seed::SeedSpec;
use crate::series::TimeSeries;
use crate::spectral::{
    averaged_spectrum, default_flatness_band, spectral_flatness, SpectrumMethod,
};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Spectral flatness at or above this votes "chaotic" in concordance
/// reports. Line spectra of periodic attractors sit well below 10⁻²;
/// broadband chaotic spectra sit well above 10⁻¹ in the default band.
pub const FLATNESS_CHAOS_THRESHOLD: f64 = 0.05;

/// Analysis horizon for divergence curves, in drive periods.
pub const DEFAULT_T_MAX_PERIODS: usize = 12;

/// Production run length after the transient, in drive periods.
pub const DEFAULT_PERIODS: f64 = 500.0;

/// The six (Γ, β) pairs of the standard sweep.
pub const DEFAULT_GRID: [(f64, f64); 6] = [
    (0.125, 0.01),
    (0.125, 0.3),
    (0.125, 1.0),
    (0.3, 0.01),
    (0.3, 0.3),
    (0.3, 1.0),
];

/// Worker-count environment variable for sweeps.
pub const WORKERS_ENV: &str = "QSD_CHAOS_WORKERS";

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifests

/// Record of one command invocation: the fully resolved config plus the
/// files it produced. Sufficient to reproduce the run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: SeedSpec,
    pub code_version: String,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_str(&read_to_string(path)?)?;
        Ok(manifest)
    }
}

// ---------------------------------------------------------------------------
// simulate

/// User-facing simulate config: every field optional, JSON with unknown
/// keys rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub g: Option<f64>,
    pub omega: Option<f64>,
    pub n_basis: Option<usize>,
    pub dt: Option<f64>,
    pub periods: Option<f64>,
    pub transient_periods: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub x0: Option<f64>,
    pub p0: Option<f64>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
}

impl SimulateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulateConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }

    /// Overlay: fields set in `other` win.
    pub fn overlaid(mut self, other: &SimulateConfig) -> Self {
        macro_rules! take {
            ($f:ident) => {
                if other.$f.is_some() {
                    self.$f = other.$f;
                }
            };
        }
        take!(gamma);
        take!(beta);
        take!(g);
        take!(omega);
        take!(n_basis);
        take!(dt);
        take!(periods);
        take!(transient_periods);
        take!(samples_per_period);
        take!(x0);
        take!(p0);
        take!(seed);
        take!(stream);
        self
    }

    pub fn resolve(&self) -> Result<ResolvedSimulate> {
        let gamma = self.gamma.unwrap_or(0.3);
        let beta = self.beta.unwrap_or(0.3);
        let g = self.g.unwrap_or(crate::duffing::DEFAULT_DRIVE_AMPLITUDE);
        let omega = self.omega.unwrap_or(crate::duffing::DEFAULT_DRIVE_FREQUENCY);
        let n_basis = self.n_basis.unwrap_or_else(|| default_basis_size(beta));
        let dt = self.dt.unwrap_or_else(|| default_dt(gamma, n_basis, omega));
        let samples_per_period = self.samples_per_period.unwrap_or(DEFAULT_SAMPLES_PER_PERIOD);
        let resolved = ResolvedSimulate {
            gamma,
            beta,
            g,
            omega,
            n_basis,
            dt,
            periods: self.periods.unwrap_or(DEFAULT_PERIODS),
            transient_periods: self.transient_periods.unwrap_or(DEFAULT_TRANSIENT_PERIODS),
            samples_per_period,
            x0: self.x0.unwrap_or(1.0),
            p0: self.p0.unwrap_or(0.0),
            seed: SeedSpec::new(self.seed.unwrap_or(1), self.stream.unwrap_or(0)),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

/// Fully resolved simulate parameters; serialized into sidecars and
/// manifests verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSimulate {
    pub gamma: f64,
    pub beta: f64,
    pub g: f64,
    pub omega: f64,
    pub n_basis: usize,
    pub dt: f64,
    pub periods: f64,
    pub transient_periods: f64,
    pub samples_per_period: usize,
    pub x0: f64,
    pub p0: f64,
    pub seed: SeedSpec,
}

impl ResolvedSimulate {
    fn validate(&self) -> Result<()> {
        if !(self.periods.is_finite() && self.periods > 0.0) {
            return Err(Error::Config(format!(
                "periods = {} must be > 0",
                self.periods
            )));
        }
        if !(self.transient_periods.is_finite() && self.transient_periods >= 0.0) {
            return Err(Error::Config(format!(
                "transient_periods = {} must be >= 0",
                self.transient_periods
            )));
        }
        if self.samples_per_period == 0 {
            return Err(Error::Config("samples_per_period must be >= 1".into()));
        }
        self.qsd_params(self.n_basis)?;
        Ok(())
    }

    pub fn drive_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    fn out_stride(&self) -> usize {
        let period = self.drive_period();
        let stride = period / (self.samples_per_period as f64 * self.dt);
        (stride.round() as usize).max(1)
    }

    fn qsd_params(&self, n_basis: usize) -> Result<QsdParams> {
        QsdParams::new(
            self.gamma,
            self.beta,
            self.g,
            self.omega,
            n_basis,
            self.dt,
            self.seed,
            self.out_stride(),
        )
    }
}

/// Sidecar written next to a series CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub params: ResolvedSimulate,
    pub seed: SeedSpec,
    /// Basis size the run actually used (after any escalation).
    pub n_final: usize,
    pub dt: f64,
    pub transient_discard: f64,
    pub code_version: String,
}

/// Escalation target after a truncation failure: one step of at least 25%,
/// kept on the multiple-of-20 ladder the defaults live on.
pub fn escalated_basis(n: usize) -> usize {
    let want = (n as f64 * 1.25).ceil() as usize;
    want.div_ceil(20) * 20
}

pub struct SimulateOutcome {
    pub manifest_path: PathBuf,
    pub series_path: PathBuf,
    pub n_final: usize,
}

/// Writes `series.csv` (t,x,p), `series.json` sidecar and
/// `simulate_manifest.json` into `out_dir`. On a truncation failure the
/// basis is escalated once and the run repeated from scratch.
pub fn run_simulate(resolved: &ResolvedSimulate, out_dir: &Path) -> Result<SimulateOutcome> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;

    let mut n_basis = resolved.n_basis;
    let (series, n_final) = loop {
        match simulate_once(resolved, n_basis) {
            Ok(series) => break (series, n_basis),
            Err(Error::Truncation { t, tail }) if n_basis == resolved.n_basis => {
                eprintln!(
                    "truncation at t = {t:.3} (tail {tail:.3e}); escalating N: {} -> {}",
                    n_basis,
                    escalated_basis(n_basis)
                );
                n_basis = escalated_basis(n_basis);
            }
            Err(e) => return Err(e),
        }
    };

    let series_path = out_dir.join("series.csv");
    write_xp_csv(&series_path, &series.0, &series.1)?;
    let sidecar = SeriesSidecar {
        params: resolved.clone(),
        seed: resolved.seed,
        n_final,
        dt: resolved.dt,
        transient_discard: resolved.transient_periods,
        code_version: CODE_VERSION.to_string(),
    };
    let sidecar_path = out_dir.join("series.json");
    write_json(&sidecar_path, &sidecar)?;

    let manifest = RunManifest {
        command: "simulate".into(),
        config: serde_json::to_value(resolved)?,
        seed: resolved.seed,
        code_version: CODE_VERSION.into(),
        outputs: vec![
            series_path.display().to_string(),
            sidecar_path.display().to_string(),
        ],
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = manifest.write(out_dir, "simulate_manifest.json")?;
    Ok(SimulateOutcome {
        manifest_path,
        series_path,
        n_final,
    })
}

/// One full run at the given basis size; returns the post-transient series.
fn simulate_once(resolved: &ResolvedSimulate, n_basis: usize) -> Result<(TimeSeries, TimeSeries)> {
    let params = resolved.qsd_params(n_basis)?;
    let initial = coherent_state(n_basis, resolved.beta, resolved.x0, resolved.p0)?;
    let period = resolved.drive_period();
    let duration = (resolved.transient_periods + resolved.periods) * period;
    let run = simulate(&params, &initial, duration)?;
    let dt_out = run.x.dt();
    let discard = ((resolved.transient_periods * period) / dt_out).round() as usize;
    let from = discard.min(run.x.len().saturating_sub(2));
    Ok((run.x.slice(from, run.x.len())?, run.p.slice(from, run.p.len())?))
}

/// Three-column CSV `t,x,p` with the crate-wide 17-significant-digit
/// format.
pub fn write_xp_csv(path: &Path, x: &TimeSeries, p: &TimeSeries) -> Result<()> {
    if x.len() != p.len() {
        return Err(Error::Config("x and p series differ in length".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,x,p")?;
    for i in 0..x.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e}",
            x.time_at(i),
            x.values()[i],
            p.values()[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_xp_csv`].
pub fn read_xp_csv(path: &Path) -> Result<(TimeSeries, TimeSeries)> {
    let reader = BufReader::new(
        File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?,
    );
    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if lineno == 0 {
            if line != "t,x,p" {
                return Err(Error::Config(format!(
                    "expected header 't,x,p', got {line:?}"
                )));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::Config(format!("line {}: missing {what}", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("line {}: bad {what}: {e}", lineno + 1)))
        };
        times.push(next("t")?);
        xs.push(next("x")?);
        ps.push(next("p")?);
    }
    if times.len() < 2 {
        return Err(Error::Config("need at least two data rows".into()));
    }
    let t0 = times[0];
    let dt = times[1] - times[0];
    Ok((
        TimeSeries::new(t0, dt, xs)?,
        TimeSeries::new(t0, dt, ps)?,
    ))
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzeMethod {
    Lyap,
    Psd,
    Poincare,
}

impl std::str::FromStr for AnalyzeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lyap" => Ok(AnalyzeMethod::Lyap),
            "psd" => Ok(AnalyzeMethod::Psd),
            "poincare" => Ok(AnalyzeMethod::Poincare),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected lyap|psd|poincare)"
            ))),
        }
    }
}

/// Analyze options; unset fields take method defaults at run time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub method: AnalyzeMethod,
    pub tau: Option<usize>,
    pub m_list: Option<Vec<usize>>,
    pub epsilons: Option<Vec<f64>>,
    pub t_max: Option<usize>,
    pub fit_from: Option<usize>,
    pub fit_to: Option<usize>,
    pub segment_len: Option<usize>,
    pub grid_cells: Option<usize>,
    pub r_cluster: Option<f64>,
    /// Drive period; defaults to the sidecar's if one is found.
    pub period: Option<f64>,
    pub phase: Option<f64>,
}

impl Default for AnalyzeMethod {
    fn default() -> Self {
        AnalyzeMethod::Lyap
    }
}

/// Result of the lyap method, serialized as `lyap.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct LyapReport {
    pub lambda: Option<f64>,
    pub lambda_per_period: Option<f64>,
    pub fit_from: Option<usize>,
    pub fit_to: Option<usize>,
    pub r2: Option<f64>,
    pub classification: ChaosClass,
}

/// Result of the psd method, serialized as `psd.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PsdReport {
    pub flatness: f64,
    pub band: (f64, f64),
    pub method: SpectrumMethod,
    pub peak_frequency: f64,
}

/// Result of the poincare method, serialized as `section.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SectionReport {
    pub occupied: usize,
    pub cluster_count: usize,
    pub n_points: usize,
    pub classification: SectionClass,
}

/// The sidecar period for a series path, if its `.json` neighbor exists
/// and parses.
fn sidecar_period(series_path: &Path) -> Option<f64> {
    let sidecar = series_path.with_extension("json");
    let text = fs::read_to_string(sidecar).ok()?;
    let sidecar: SeriesSidecar = serde_json::from_str(&text).ok()?;
    Some(sidecar.params.drive_period())
}

pub struct AnalyzeOutcome {
    pub manifest_path: PathBuf,
    pub outputs: Vec<PathBuf>,
    /// The chaotic-vs-not vote of the method that ran.
    pub chaotic_vote: bool,
}

pub fn run_analyze(cfg: &AnalyzeConfig, out_dir: &Path) -> Result<AnalyzeOutcome> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let (x, p) = read_xp_csv(&cfg.input)?;
    let period = cfg.period.or_else(|| sidecar_period(&cfg.input));

    let (outputs, vote) = match cfg.method {
        AnalyzeMethod::Lyap => analyze_lyap(cfg, &x, period, out_dir)?,
        AnalyzeMethod::Psd => analyze_psd(cfg, &x, period, out_dir)?,
        AnalyzeMethod::Poincare => analyze_poincare(cfg, &x, &p, period, out_dir)?,
    };

    let manifest = RunManifest {
        command: "analyze".into(),
        config: serde_json::to_value(cfg)?,
        seed: SeedSpec::new(0, 0),
        code_version: CODE_VERSION.into(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let name = match cfg.method {
        AnalyzeMethod::Lyap => "lyap_manifest.json",
        AnalyzeMethod::Psd => "psd_manifest.json",
        AnalyzeMethod::Poincare => "section_manifest.json",
    };
    let manifest_path = manifest.write(out_dir, name)?;
    Ok(AnalyzeOutcome {
        manifest_path,
        outputs,
        chaotic_vote: vote,
    })
}

/// Default divergence horizon in samples: [`DEFAULT_T_MAX_PERIODS`] drive
/// periods when the period is known, else a fixed 256 samples; always at
/// most a quarter of the series.
fn default_t_max(len: usize, dt: f64, period: Option<f64>) -> usize {
    let wanted = match period {
        Some(t) => (DEFAULT_T_MAX_PERIODS as f64 * t / dt).round() as usize,
        None => 256,
    };
    wanted.clamp(1, (len / 4).max(1))
}

fn analyze_lyap(
    cfg: &AnalyzeConfig,
    x: &TimeSeries,
    period: Option<f64>,
    out_dir: &Path,
) -> Result<(Vec<PathBuf>, bool)> {
    let tau = match cfg.tau {
        Some(t) => t,
        None => choose_delay(x)?,
    };
    let m_list = cfg.m_list.clone().unwrap_or_else(|| DEFAULT_M_LIST.to_vec());
    let epsilons = cfg
        .epsilons
        .clone()
        .unwrap_or_else(|| default_epsilon_ladder(x.std_dev()).to_vec());
    let t_max = cfg
        .t_max
        .unwrap_or_else(|| default_t_max(x.len(), x.dt(), period));
    let mut params = KantzParams::default();
    params.min_refs = params.min_refs.min(x.len() / 20).max(5);
    let panel = divergence_panel(x, &m_list, &epsilons, t_max, tau, &params)?;

    let fit = fit_lambda(&panel.curves, cfg.fit_from, cfg.fit_to)?;
    let classification = classify_chaos(&fit, DEFAULT_CHAOS_THRESHOLD);
    let report = match fit.estimate() {
        Some(est) => LyapReport {
            lambda: Some(est.lambda),
            lambda_per_period: period.map(|t| est.lambda * t),
            fit_from: Some(est.fit_from),
            fit_to: Some(est.fit_to),
            r2: Some(est.r_squared),
            classification,
        },
        None => LyapReport {
            lambda: None,
            lambda_per_period: None,
            fit_from: None,
            fit_to: None,
            r2: None,
            classification,
        },
    };

    let curves_path = out_dir.join("lyap_curves.csv");
    write_curves_csv(&curves_path, &panel.curves, t_max)?;
    let json_path = out_dir.join("lyap.json");
    write_json(&json_path, &report)?;
    let svg_path = out_dir.join("lyap.svg");
    let svg = svg::lyap_panel(&panel.curves, fit.estimate(), "divergence curves");
    fs::write(&svg_path, svg)?;

    Ok((
        vec![curves_path, json_path, svg_path],
        classification == ChaosClass::Chaotic,
    ))
}

/// Long-form divergence CSV `m,epsilon,horizon,t,S`.
fn write_curves_csv(path: &Path, curves: &[DivergenceCurve], _t_max: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "m,epsilon,horizon,t,S")?;
    for curve in curves {
        for (h, s) in curve.s_values.iter().enumerate() {
            writeln!(
                w,
                "{},{:.16e},{},{:.16e},{:.16e}",
                curve.m,
                curve.epsilon,
                h,
                h as f64 * curve.dt,
                s
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Largest power of two that fits `len`, capped at 4096; Welch segments
/// need structure, so fall back to the full length only for tiny inputs.
fn default_segment_len(len: usize) -> usize {
    let mut seg = 4096usize;
    while seg > len && seg > 8 {
        seg /= 2;
    }
    seg.min(len)
}

fn analyze_psd(
    cfg: &AnalyzeConfig,
    x: &TimeSeries,
    period: Option<f64>,
    out_dir: &Path,
) -> Result<(Vec<PathBuf>, bool)> {
    let segment_len = cfg.segment_len.unwrap_or_else(|| default_segment_len(x.len()));
    let spectrum = averaged_spectrum(x, segment_len, 0.5)?;
    let band = match period {
        Some(t) => default_flatness_band(2.0 * std::f64::consts::PI / t),
        None => (0.0, spectrum.nyquist()),
    };
    let flatness = spectral_flatness(&spectrum, band)?;

    let csv_path = out_dir.join("psd.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    writeln!(w, "f,power")?;
    for (f, p) in spectrum.frequencies.iter().zip(&spectrum.power) {
        writeln!(w, "{f:.16e},{p:.16e}")?;
    }
    w.flush()?;

    let report = PsdReport {
        flatness,
        band,
        method: spectrum.method,
        peak_frequency: spectrum.peak_frequency(),
    };
    let json_path = out_dir.join("psd.json");
    write_json(&json_path, &report)?;
    Ok((
        vec![csv_path, json_path],
        flatness >= FLATNESS_CHAOS_THRESHOLD,
    ))
}

fn analyze_poincare(
    cfg: &AnalyzeConfig,
    x: &TimeSeries,
    p: &TimeSeries,
    period: Option<f64>,
    out_dir: &Path,
) -> Result<(Vec<PathBuf>, bool)> {
    let period = period.ok_or_else(|| {
        Error::Config("poincare needs a drive period (sidecar or --period)".into())
    })?;
    let section = strobe(x, p, period, cfg.phase.unwrap_or(0.0))?;
    let summary = occupancy(
        &section,
        cfg.grid_cells.unwrap_or(DEFAULT_SECTION_GRID),
        cfg.r_cluster.unwrap_or(DEFAULT_R_CLUSTER),
    )?;
    let classification = classify_section(&summary)?;

    let csv_path = out_dir.join("section.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    writeln!(w, "x,p")?;
    for (sx, sp) in &section.points {
        writeln!(w, "{sx:.16e},{sp:.16e}")?;
    }
    w.flush()?;

    let report = SectionReport {
        occupied: summary.occupied,
        cluster_count: summary.cluster_count,
        n_points: summary.n_points,
        classification,
    };
    let json_path = out_dir.join("section.json");
    write_json(&json_path, &report)?;
    Ok((
        vec![csv_path, json_path],
        classification == SectionClass::Extended,
    ))
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// (Γ, β) pairs; the paper's six-case grid when omitted.
    pub grid: Option<Vec<(f64, f64)>>,
    #[serde(flatten)]
    pub shared: SimulateConfig,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedSweep {
    pub grid: Vec<(f64, f64)>,
    pub shared: ResolvedSharedParams,
    pub seed: u64,
}

/// The sweep-level subset of simulate parameters; per-case Γ, β, N, dt and
/// stream index are derived per grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedSharedParams {
    pub g: f64,
    pub omega: f64,
    pub periods: f64,
    pub transient_periods: f64,
    pub samples_per_period: usize,
    pub x0: f64,
    pub p0: f64,
}

pub fn resolve_sweep(cfg: &SweepConfig) -> Result<ResolvedSweep> {
    let grid = cfg.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    for &(gamma, beta) in &grid {
        if !(gamma.is_finite() && gamma >= 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!(
                "invalid grid point (gamma={gamma}, beta={beta})"
            )));
        }
    }
    if cfg.shared.gamma.is_some() || cfg.shared.beta.is_some() {
        return Err(Error::Config(
            "sweep config sets gamma/beta globally; put them in `grid`".into(),
        ));
    }
    let s = &cfg.shared;
    Ok(ResolvedSweep {
        grid,
        shared: ResolvedSharedParams {
            g: s.g.unwrap_or(crate::duffing::DEFAULT_DRIVE_AMPLITUDE),
            omega: s.omega.unwrap_or(crate::duffing::DEFAULT_DRIVE_FREQUENCY),
            periods: s.periods.unwrap_or(DEFAULT_PERIODS),
            transient_periods: s.transient_periods.unwrap_or(DEFAULT_TRANSIENT_PERIODS),
            samples_per_period: s.samples_per_period.unwrap_or(DEFAULT_SAMPLES_PER_PERIOD),
            x0: s.x0.unwrap_or(1.0),
            p0: s.p0.unwrap_or(0.0),
        },
        seed: s.seed.unwrap_or(1),
    })
}

/// One row of the sweep summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub gamma: f64,
    pub beta: f64,
    pub status: String,
    pub n_final: Option<usize>,
    pub lambda: Option<f64>,
    pub lambda_class: Option<ChaosClass>,
    pub flatness: Option<f64>,
    pub section_class: Option<SectionClass>,
    pub case_dir: String,
}

pub struct SweepOutcome {
    pub manifest_path: PathBuf,
    pub summary_path: PathBuf,
    pub svg_path: PathBuf,
    pub cases: Vec<CaseOutcome>,
}

pub fn case_dir_name(gamma: f64, beta: f64) -> String {
    format!("case_gamma{gamma}_beta{beta}")
}

/// Worker count: the env override, else available parallelism.
pub fn worker_count() -> usize {
    if let Ok(text) = std::env::var(WORKERS_ENV) {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
        eprintln!("ignoring invalid {WORKERS_ENV}={text:?}");
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `workers = None` falls back to [`worker_count`] (env var, then available
/// parallelism).
pub fn run_sweep(
    resolved: &ResolvedSweep,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<SweepOutcome> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;

    let workers = workers
        .unwrap_or_else(worker_count)
        .min(resolved.grid.len())
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let cases: Vec<(CaseOutcome, Vec<DivergenceCurve>)> = pool.install(|| {
        use rayon::prelude::*;
        resolved
            .grid
            .par_iter()
            .enumerate()
            .map(|(idx, &(gamma, beta))| run_case(resolved, idx, gamma, beta, out_dir))
            .collect()
    });

    let summary_path = out_dir.join("summary.csv");
    {
        let mut w = BufWriter::new(File::create(&summary_path)?);
        writeln!(
            w,
            "gamma,beta,lambda,lambda_class,flatness,section_class,status"
        )?;
        for (case, _) in &cases {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                case.gamma,
                case.beta,
                case.lambda.map_or(String::new(), |v| format!("{v:.6}")),
                case.lambda_class.map_or(String::new(), |c| c.to_string()),
                case.flatness.map_or(String::new(), |v| format!("{v:.6}")),
                case.section_class.map_or(String::new(), |c| c.to_string()),
                case.status
            )?;
        }
        w.flush()?;
    }

    let svg_path = out_dir.join("sweep.svg");
    let panels: Vec<svg::CasePanel> = cases
        .iter()
        .map(|(case, curves)| svg::CasePanel {
            gamma: case.gamma,
            beta: case.beta,
            lambda: case.lambda,
            curves: curves.clone(),
            status: case.status.clone(),
        })
        .collect();
    fs::write(&svg_path, svg::sweep_grid(&panels))?;

    let case_rows: Vec<CaseOutcome> = cases.into_iter().map(|(c, _)| c).collect();
    let manifest = RunManifest {
        command: "sweep".into(),
        config: serde_json::to_value(resolved)?,
        seed: SeedSpec::new(resolved.seed, 0),
        code_version: CODE_VERSION.into(),
        outputs: vec![
            summary_path.display().to_string(),
            svg_path.display().to_string(),
        ],
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = manifest.write(out_dir, "sweep_manifest.json")?;
    Ok(SweepOutcome {
        manifest_path,
        summary_path,
        svg_path,
        cases: case_rows,
    })
}

/// Simulate + all three analyses for one grid point. Failures land in the
/// status column; the sweep itself continues.
fn run_case(
    resolved: &ResolvedSweep,
    idx: usize,
    gamma: f64,
    beta: f64,
    out_dir: &Path,
) -> (CaseOutcome, Vec<DivergenceCurve>) {
    let s = &resolved.shared;
    let dir = out_dir.join(case_dir_name(gamma, beta));
    let mut outcome = CaseOutcome {
        gamma,
        beta,
        status: "ok".into(),
        n_final: None,
        lambda: None,
        lambda_class: None,
        flatness: None,
        section_class: None,
        case_dir: dir.display().to_string(),
    };

    let sim = ResolvedSimulate {
        gamma,
        beta,
        g: s.g,
        omega: s.omega,
        n_basis: default_basis_size(beta),
        dt: default_dt(gamma, default_basis_size(beta), s.omega),
        periods: s.periods,
        transient_periods: s.transient_periods,
        samples_per_period: s.samples_per_period,
        x0: s.x0,
        p0: s.p0,
        seed: SeedSpec::new(resolved.seed, idx as u64),
    };

    let curves = match run_case_inner(&sim, &dir, &mut outcome) {
        Ok(curves) => curves,
        Err(e) => {
            outcome.status = e.to_string().replace(',', ";");
            Vec::new()
        }
    };
    (outcome, curves)
}

fn run_case_inner(
    sim: &ResolvedSimulate,
    dir: &Path,
    outcome: &mut CaseOutcome,
) -> Result<Vec<DivergenceCurve>> {
    let sim_result = run_simulate(sim, dir)?;
    outcome.n_final = Some(sim_result.n_final);

    let lyap_cfg = AnalyzeConfig {
        input: sim_result.series_path.clone(),
        method: AnalyzeMethod::Lyap,
        ..Default::default()
    };
    run_analyze(&lyap_cfg, dir)?;
    let lyap: LyapReport =
        serde_json::from_str(&read_to_string(&dir.join("lyap.json"))?)?;
    outcome.lambda = lyap.lambda;
    outcome.lambda_class = Some(lyap.classification);

    let psd_cfg = AnalyzeConfig {
        input: sim_result.series_path.clone(),
        method: AnalyzeMethod::Psd,
        ..Default::default()
    };
    run_analyze(&psd_cfg, dir)?;
    let psd: PsdReport = serde_json::from_str(&read_to_string(&dir.join("psd.json"))?)?;
    outcome.flatness = Some(psd.flatness);

    let section_cfg = AnalyzeConfig {
        input: sim_result.series_path.clone(),
        method: AnalyzeMethod::Poincare,
        ..Default::default()
    };
    run_analyze(&section_cfg, dir)?;
    let section: SectionReport =
        serde_json::from_str(&read_to_string(&dir.join("section.json"))?)?;
    outcome.section_class = Some(section.classification);

    // Reload the curves for the sweep figure.
    let curves = read_curves_csv(&dir.join("lyap_curves.csv"))?;
    Ok(curves)
}

/// Reads the long-form divergence CSV back into curves.
pub fn read_curves_csv(path: &Path) -> Result<Vec<DivergenceCurve>> {
    let reader = BufReader::new(File::open(path)?);
    let mut curves: Vec<DivergenceCurve> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if lineno == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Config(format!(
                "line {}: expected 5 columns",
                lineno + 1
            )));
        }
        let m: usize = cols[0].parse().map_err(|e| {
            Error::Config(format!("line {}: bad m: {e}", lineno + 1))
        })?;
        let epsilon: f64 = cols[1].parse().map_err(|e| {
            Error::Config(format!("line {}: bad epsilon: {e}", lineno + 1))
        })?;
        let h: usize = cols[2].parse().map_err(|e| {
            Error::Config(format!("line {}: bad horizon: {e}", lineno + 1))
        })?;
        let t: f64 = cols[3].parse().map_err(|e| {
            Error::Config(format!("line {}: bad t: {e}", lineno + 1))
        })?;
        let s: f64 = cols[4].parse().map_err(|e| {
            Error::Config(format!("line {}: bad S: {e}", lineno + 1))
        })?;
        let fresh = match curves.last() {
            Some(c) => c.m != m || c.epsilon != epsilon || h == 0,
            None => true,
        };
        if fresh {
            let dt = if h == 0 { 0.0 } else { t / h as f64 };
            curves.push(DivergenceCurve {
                m,
                epsilon,
                s_values: vec![s],
                ref_count: 0,
                dt,
            });
        } else {
            let curve = curves.last_mut().unwrap();
            if curve.dt == 0.0 && h > 0 {
                curve.dt = t / h as f64;
            }
            curve.s_values.push(s);
        }
    }
    if curves.is_empty() {
        return Err(Error::Config("no divergence curves in file".into()));
    }
    Ok(curves)
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Serialize, Deserialize)]
pub struct CaseConcordance {
    pub gamma: f64,
    pub beta: f64,
    pub lambda_chaotic: bool,
    pub psd_chaotic: bool,
    pub section_chaotic: bool,
    pub concordant: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConcordanceReport {
    pub cases: Vec<CaseConcordance>,
    pub excluded: Vec<String>,
    pub three_method_concordance: bool,
    pub flatness_threshold: f64,
    pub lambda_threshold: f64,
}

pub struct ReportOutcome {
    pub manifest_path: PathBuf,
    pub report_path: PathBuf,
    pub report: ConcordanceReport,
    pub table: String,
}

/// Builds the concordance report from a completed sweep directory.
pub fn run_report(sweep_dir: &Path, out_dir: &Path) -> Result<ReportOutcome> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;

    let manifest = RunManifest::read(&sweep_dir.join("sweep_manifest.json")).map_err(|_| {
        Error::Report(format!(
            "{} has no readable sweep_manifest.json",
            sweep_dir.display()
        ))
    })?;
    let resolved: ResolvedSweep = serde_json::from_value(manifest.config.clone())
        .map_err(|e| Error::Report(format!("sweep manifest config: {e}")))?;

    let mut cases = Vec::new();
    let mut excluded = Vec::new();
    for &(gamma, beta) in &resolved.grid {
        let dir = sweep_dir.join(case_dir_name(gamma, beta));
        let label = format!("gamma={gamma}, beta={beta}");
        let reports = (|| -> Result<(LyapReport, PsdReport, SectionReport)> {
            let lyap = serde_json::from_str(&read_to_string(&dir.join("lyap.json"))?)?;
            let psd = serde_json::from_str(&read_to_string(&dir.join("psd.json"))?)?;
            let section = serde_json::from_str(&read_to_string(&dir.join("section.json"))?)?;
            Ok((lyap, psd, section))
        })();
        match reports {
            Ok((lyap, psd, section)) => {
                let lambda_chaotic = lyap.classification == ChaosClass::Chaotic;
                let psd_chaotic = psd.flatness >= FLATNESS_CHAOS_THRESHOLD;
                let section_chaotic = section.classification == SectionClass::Extended;
                cases.push(CaseConcordance {
                    gamma,
                    beta,
                    lambda_chaotic,
                    psd_chaotic,
                    section_chaotic,
                    concordant: lambda_chaotic == psd_chaotic
                        && psd_chaotic == section_chaotic,
                });
            }
            Err(e) => excluded.push(format!("{label}: {e}")),
        }
    }
    if cases.is_empty() {
        return Err(Error::Report("no successful sweep cases to report".into()));
    }

    let report = ConcordanceReport {
        three_method_concordance: cases.iter().all(|c| c.concordant),
        cases,
        excluded,
        flatness_threshold: FLATNESS_CHAOS_THRESHOLD,
        lambda_threshold: DEFAULT_CHAOS_THRESHOLD,
    };

    let mut table = String::new();
    table.push_str("gamma    beta     lyap      psd       section   concordant\n");
    for c in &report.cases {
        let vote = |b: bool| if b { "chaotic " } else { "regular " };
        table.push_str(&format!(
            "{:<8} {:<8} {} {} {} {}\n",
            c.gamma,
            c.beta,
            vote(c.lambda_chaotic),
            vote(c.psd_chaotic),
            vote(c.section_chaotic),
            if c.concordant { "yes" } else { "NO" }
        ));
    }
    for e in &report.excluded {
        table.push_str(&format!("excluded: {e}\n"));
    }
    table.push_str(&format!(
        "three-method concordance: {}\n",
        report.three_method_concordance
    ));

    let report_path = out_dir.join("report.json");
    write_json(&report_path, &report)?;
    let manifest = RunManifest {
        command: "report".into(),
        config: serde_json::json!({ "sweep_dir": sweep_dir.display().to_string() }),
        seed: SeedSpec::new(0, 0),
        code_version: CODE_VERSION.into(),
        outputs: vec![report_path.display().to_string()],
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = manifest.write(out_dir, "report_manifest.json")?;
    Ok(ReportOutcome {
        manifest_path,
        report_path,
        report,
        table,
    })
}
