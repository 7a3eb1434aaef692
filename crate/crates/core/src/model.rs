//! Model parameters and the truncated Hamiltonian matrices.
//!
//! Two truncations are provided. For ε = 0 each parity sector is a
//! tridiagonal matrix in the Fock basis. For general ε the two-spin problem
//! is stored as a symmetric band matrix using the interleaved index
//! `2n + s` (Fock level `n`, spin `s`), which puts every coupling at offset
//! 1 or 3. [`aqrm_block_dense`] gives the same operator in the 2×2 block
//! layout `[[M₁, M₂], [M₂, M₃]]`; the two differ only by a symmetric
//! permutation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of one model instance. The photon frequency is 1.
///
/// The spectrum is even in ε, so a negative bias is stored as |ε|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    g: f64,
    delta: f64,
    epsilon: f64,
}

impl ModelParams {
    pub fn new(g: f64, delta: f64, epsilon: f64) -> Result<Self> {
        if !g.is_finite() || !delta.is_finite() || !epsilon.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        if g <= 0.0 {
            return Err(Error::invalid(format!("coupling g must be > 0, got {g}")));
        }
        if delta <= 0.0 {
            return Err(Error::invalid(format!(
                "level splitting delta must be > 0, got {delta}"
            )));
        }
        Ok(ModelParams {
            g,
            delta,
            epsilon: epsilon.abs(),
        })
    }

    /// Symmetric model (ε = 0).
    pub fn qrm(g: f64, delta: f64) -> Result<Self> {
        Self::new(g, delta, 0.0)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_symmetric(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.g, self.delta, epsilon)
    }
}

/// ℤ₂ parity sector of the symmetric model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Parity {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" | "p" => Ok(Parity::Plus),
            "minus" | "-" | "m" => Ok(Parity::Minus),
            other => Err(Error::invalid(format!("unknown parity '{other}'"))),
        }
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSymmetric {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalSymmetric {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Shape("empty diagonal".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::Shape(format!(
                "offdiag length {} does not match diag length {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal entries"));
        }
        Ok(TridiagonalSymmetric { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Leading principal submatrix of size `k`.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::invalid(format!(
                "leading block size {k} outside 1..={}",
                self.dim()
            )));
        }
        Self::new(self.diag[..k].to_vec(), self.offdiag[..k - 1].to_vec())
    }

    /// Interval `[lo, hi]` containing every eigenvalue.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let d: f64 = self.diag.iter().map(|v| v * v).sum();
        let e: f64 = self.offdiag.iter().map(|v| v * v).sum();
        (d + 2.0 * e).sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i + 1][i] = self.offdiag[i];
                a[i][i + 1] = self.offdiag[i];
            }
        }
        a
    }
}

/// Real symmetric band matrix in lower storage: `bands[k][j] = A[j + k][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetric {
    dim: usize,
    bandwidth: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedSymmetric {
    /// `bands[0]` is the main diagonal and `bands[k]` the k-th subdiagonal
    /// (length `dim - k`).
    pub fn new(bands: Vec<Vec<f64>>) -> Result<Self> {
        let dim = bands.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Shape("empty main diagonal".into()));
        }
        let bandwidth = bands.len() - 1;
        if bandwidth >= dim && bandwidth > 0 {
            return Err(Error::Shape(format!(
                "bandwidth {bandwidth} too large for dimension {dim}"
            )));
        }
        for (k, band) in bands.iter().enumerate() {
            if band.len() != dim - k {
                return Err(Error::Shape(format!(
                    "band {k} has length {}, expected {}",
                    band.len(),
                    dim - k
                )));
            }
            if band.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("band entries"));
            }
        }
        Ok(BandedSymmetric {
            dim,
            bandwidth,
            bands,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    /// Entry `A[i][j]`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        if k > self.bandwidth {
            0.0
        } else {
            self.bands[k][c]
        }
    }

    pub fn trace(&self) -> f64 {
        self.bands[0].iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s: f64 = self.bands[0].iter().map(|v| v * v).sum();
        for band in &self.bands[1..] {
            s += 2.0 * band.iter().map(|v| v * v).sum::<f64>();
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut a = vec![vec![0.0; n]; n];
        for (k, band) in self.bands.iter().enumerate() {
            for (j, &v) in band.iter().enumerate() {
                a[j + k][j] = v;
                a[j][j + k] = v;
            }
        }
        a
    }
}

/// Truncated parity Hamiltonian `H±` on Fock levels `0..=n_trunc`:
/// `diag[k] = k ± (-1)^k Δ`, `offdiag[k] = √(k+1) g`.
pub fn build_qrm_parity_matrix(
    params: &ModelParams,
    parity: Parity,
    n_trunc: usize,
) -> Result<TridiagonalSymmetric> {
    if !params.is_symmetric() {
        return Err(Error::invalid(format!(
            "parity decomposition requires epsilon = 0, got {}",
            params.epsilon()
        )));
    }
    let g = params.g();
    let delta = params.delta() * parity.sign();
    let diag = (0..=n_trunc)
        .map(|k| {
            let alt = if k % 2 == 0 { 1.0 } else { -1.0 };
            k as f64 + alt * delta
        })
        .collect();
    let offdiag = (0..n_trunc).map(|k| ((k + 1) as f64).sqrt() * g).collect();
    TridiagonalSymmetric::new(diag, offdiag)
}

/// Band position of Fock level `n` with spin `s` (0 = upper, 1 = lower).
pub fn interleaved_index(n: usize, spin: usize) -> usize {
    2 * n + spin
}

/// Full truncated Hamiltonian of dimension `2(n_trunc + 1)` in interleaved
/// band form (bandwidth 3).
pub fn build_aqrm_matrix(params: &ModelParams, n_trunc: usize) -> Result<BandedSymmetric> {
    let levels = n_trunc + 1;
    let dim = 2 * levels;
    let g = params.g();
    let delta = params.delta();
    let eps = params.epsilon();

    let bandwidth = 3.min(dim - 1);
    let mut bands: Vec<Vec<f64>> = (0..=bandwidth).map(|k| vec![0.0; dim - k]).collect();
    let mut put = |row: usize, col: usize, v: f64| {
        let k = row - col;
        if k <= bandwidth {
            bands[k][col] = v;
        }
    };

    for n in 0..levels {
        let up = interleaved_index(n, 0);
        let down = interleaved_index(n, 1);
        put(up, up, n as f64 + delta);
        put(down, down, n as f64 - delta);
        // (n, down) - (n, up): bias
        put(down, up, eps);
        if n + 1 < levels {
            let c = g * ((n + 1) as f64).sqrt();
            put(interleaved_index(n + 1, 0), down, c);
            put(interleaved_index(n + 1, 1), up, c);
        }
    }
    BandedSymmetric::new(bands)
}

/// The same operator in block layout: index `i` is (level i, upper spin),
/// index `levels + i` is (level i, lower spin).
pub fn aqrm_block_dense(params: &ModelParams, n_trunc: usize) -> Vec<Vec<f64>> {
    let levels = n_trunc + 1;
    let dim = 2 * levels;
    let mut a = vec![vec![0.0; dim]; dim];
    for i in 0..levels {
        a[i][i] = i as f64 + params.delta();
        a[levels + i][levels + i] = i as f64 - params.delta();
        for j in 0..levels {
            let m2 = if i == j {
                params.epsilon()
            } else if i.abs_diff(j) == 1 {
                params.g() * (i.max(j) as f64).sqrt()
            } else {
                0.0
            };
            a[i][levels + j] = m2;
            a[levels + j][i] = m2;
        }
    }
    a
}

/// Largest entrywise difference between the band matrix and the block
/// matrix after mapping block indices to interleaved ones.
pub fn band_block_mismatch(params: &ModelParams, n_trunc: usize) -> Result<f64> {
    let band = build_aqrm_matrix(params, n_trunc)?;
    let block = aqrm_block_dense(params, n_trunc);
    let levels = n_trunc + 1;
    let to_band = |b: usize| {
        if b < levels {
            interleaved_index(b, 0)
        } else {
            interleaved_index(b - levels, 1)
        }
    };
    let mut worst = 0.0f64;
    for (bi, row) in block.iter().enumerate() {
        for (bj, &v) in row.iter().enumerate() {
            worst = worst.max((band.get(to_band(bi), to_band(bj)) - v).abs());
        }
    }
    Ok(worst)
}
