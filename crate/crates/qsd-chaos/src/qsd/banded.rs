//! Banded complex operators on a truncated Fock basis.
//!
//! Every operator needed here is a low-order polynomial in a and a†, so its
//! matrix has a handful of diagonals (a: +1; X, P: ±1; H0: −4..4 in steps
//! of 2). Storing only those diagonals keeps the per-step applies at
//! O(bands · N) and makes the one-off products needed to assemble the
//! Hamiltonian cheap and exact: entries outside the algebraic bands are
//! structural zeros, not rounded ones.

use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedOp {
    n: usize,
    /// Sorted diagonal offsets d; bands[k][i] stores A[row][row+d] where
    /// row = i + max(0, −d), so each band has n − |d| entries.
    offsets: Vec<i64>,
    bands: Vec<Vec<Complex64>>,
}

impl BandedOp {
    pub fn zero(n: usize) -> Self {
        BandedOp {
            n,
            offsets: Vec::new(),
            bands: Vec::new(),
        }
    }

    /// Annihilation matrix: A[i][i+1] = √(i+1).
    pub fn annihilation(n: usize) -> Self {
        let band = (0..n - 1)
            .map(|i| Complex64::new(((i + 1) as f64).sqrt(), 0.0))
            .collect();
        BandedOp {
            n,
            offsets: vec![1],
            bands: vec![band],
        }
    }

    pub fn diagonal(values: Vec<Complex64>) -> Self {
        BandedOp {
            n: values.len(),
            offsets: vec![0],
            bands: vec![values],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    /// Conjugate transpose. Offset d maps to −d with the same band layout,
    /// since A†[i+d][i] = conj(A[i][i+d]).
    pub fn dagger(&self) -> Self {
        let mut pairs: Vec<(i64, Vec<Complex64>)> = self
            .offsets
            .iter()
            .zip(&self.bands)
            .map(|(&d, band)| (-d, band.iter().map(|z| z.conj()).collect()))
            .collect();
        pairs.sort_by_key(|&(d, _)| d);
        let (offsets, bands) = pairs.into_iter().unzip();
        BandedOp {
            n: self.n,
            offsets,
            bands,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        BandedOp {
            n: self.n,
            offsets: self.offsets.clone(),
            bands: self
                .bands
                .iter()
                .map(|b| b.iter().map(|z| z * c).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch in operator sum");
        let mut acc: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
        for op in [self, other] {
            for (&d, band) in op.offsets.iter().zip(&op.bands) {
                let entry = acc
                    .entry(d)
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); band.len()]);
                for (e, &v) in entry.iter_mut().zip(band) {
                    *e += v;
                }
            }
        }
        Self::from_band_map(self.n, acc)
    }

    /// Exact banded product: offsets add, and row i contributes only where
    /// i, i+d1 and i+d1+d2 all lie inside the basis.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch in operator product");
        let n = self.n as i64;
        let mut acc: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
        for (&d1, b1) in self.offsets.iter().zip(&self.bands) {
            for (&d2, b2) in other.offsets.iter().zip(&other.bands) {
                let d = d1 + d2;
                if d.unsigned_abs() as usize >= self.n {
                    continue;
                }
                let lo = 0i64.max(-d1).max(-d);
                let hi = (n - 1).min(n - 1 - d1).min(n - 1 - d);
                if lo > hi {
                    continue;
                }
                let band = acc
                    .entry(d)
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); self.n - d.unsigned_abs() as usize]);
                let base = 0i64.max(-d);
                for i in lo..=hi {
                    let v1 = b1[(i - 0i64.max(-d1)) as usize];
                    let v2 = b2[(i + d1 - 0i64.max(-d2)) as usize];
                    band[(i - base) as usize] += v1 * v2;
                }
            }
        }
        Self::from_band_map(self.n, acc)
    }

    fn from_band_map(n: usize, acc: BTreeMap<i64, Vec<Complex64>>) -> Self {
        let mut offsets = Vec::new();
        let mut bands = Vec::new();
        for (d, band) in acc {
            if band.iter().any(|z| z.norm_sqr() != 0.0) {
                offsets.push(d);
                bands.push(band);
            }
        }
        BandedOp { n, offsets, bands }
    }

    /// out = A·psi. The caller provides the output buffer so the integration
    /// loop allocates nothing.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        out.fill(Complex64::new(0.0, 0.0));
        for (&d, band) in self.offsets.iter().zip(&self.bands) {
            let row0 = 0i64.max(-d) as usize;
            let col0 = 0i64.max(d) as usize;
            for (k, &v) in band.iter().enumerate() {
                out[row0 + k] += v * psi[col0 + k];
            }
        }
    }

    /// ⟨psi|A|psi⟩ for an arbitrary (not necessarily normalized) vector.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.apply(psi, &mut out);
        psi.iter()
            .zip(&out)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Dense row-major copy for entrywise checks.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.n];
        for (&d, band) in self.offsets.iter().zip(&self.bands) {
            let row0 = 0i64.max(-d) as usize;
            let col0 = 0i64.max(d) as usize;
            for (k, &v) in band.iter().enumerate() {
                m[row0 + k][col0 + k] = v;
            }
        }
        m
    }

    /// Largest |A[i][j] − conj(A[j][i])| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let dag = self.dagger();
        let mut worst = 0.0f64;
        let a = self.to_dense();
        let b = dag.to_dense();
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((a[i][j] - b[i][j]).norm());
            }
        }
        worst
    }
}
