//! Uniformly sampled scalar time series with CSV and binary persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic bytes heading the binary container format.
const MAGIC: &[u8; 8] = b"QSDTSER\0";
/// Binary container format version.
const FORMAT_VERSION: u32 = 1;

/// A uniformly sampled real-valued series: sample `i` was taken at
/// `t0 + i * dt`.
///
/// Invariants enforced at construction: at least one sample, all samples
/// finite, `dt > 0` and finite, `t0` finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("time series must be non-empty".into()));
        }
        if !t0.is_finite() {
            return Err(Error::Config(format!("t0 = {t0} is not finite")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt = {dt} must be finite and positive")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "sample {i} = {} is not finite",
                values[i]
            )));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-emptiness is a construction invariant
    }

    /// Sample time of index `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Sub-series covering `[from, to)` of the sample indices.
    ///
    /// Errors if the range is empty or runs past the end; the result keeps
    /// the same `dt` and shifts `t0` to the time of sample `from`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.values.len() {
            return Err(Error::Range {
                from,
                to,
                len: self.values.len(),
            });
        }
        Ok(Self {
            t0: self.time_at(from),
            dt: self.dt,
            values: self.values[from..to].to_vec(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance (divides by `n`, not `n - 1`).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Write as two-column CSV with a `t,value` header.
    ///
    /// Values are printed with 17 significant digits so a read-back
    /// reproduces every f64 bit-exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.time_at(i), v)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a CSV written by [`write_csv`](Self::write_csv).
    ///
    /// `t0` is taken from the first row and `dt` from the spacing of the
    /// first two rows (a single-row file is rejected since its `dt` is
    /// unknowable).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line != "t,value" {
                    return Err(Error::Config(format!(
                        "expected header 't,value', got {line:?}"
                    )));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (ts, vs) = line.split_once(',').ok_or_else(|| {
                Error::Config(format!("line {}: expected 't,value', got {line:?}", lineno + 1))
            })?;
            let t: f64 = ts.trim().parse().map_err(|e| {
                Error::Config(format!("line {}: bad time {ts:?}: {e}", lineno + 1))
            })?;
            let v: f64 = vs.trim().parse().map_err(|e| {
                Error::Config(format!("line {}: bad value {vs:?}: {e}", lineno + 1))
            })?;
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(Error::Config(
                "need at least two rows to recover the sample spacing".into(),
            ));
        }
        let t0 = times[0];
        let dt = times[1] - times[0];
        Self::new(t0, dt, values)
    }

    /// Write the compact binary container: an 8-byte magic, format version,
    /// then `t0`, `dt` and the little-endian f64 samples.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?; // reserved
        w.write_all(&self.t0.to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a container written by [`write_binary`](Self::write_binary).
    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config(format!(
                "bad magic {magic:?}, not a time-series container"
            )));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported container version {version} (expected {FORMAT_VERSION})"
            )));
        }
        r.read_exact(&mut u32buf)?; // reserved
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let t0 = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let dt = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let n = u64::from_le_bytes(f64buf) as usize;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut f64buf)?;
            values.push(f64::from_le_bytes(f64buf));
        }
        Self::new(t0, dt, values)
    }
}
