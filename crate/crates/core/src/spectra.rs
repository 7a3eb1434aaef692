//! Convergence-certified spectra.
//!
//! A spectrum is certified by truncation doubling: the lowest K eigenvalues
//! are computed at truncation N and 2N, and N is doubled until no level moves
//! by `tol` or more. The result at the larger truncation is returned.

use std::io::Write;

use serde::Serialize;

use crate::eigensolver::{band_eigenvalues, tridiag_eigenvalues, EigenRange, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{build_aqrm_matrix, build_qrm_parity_matrix, ModelParams, Parity};
use crate::output::{fmt_f64, write_csv};

/// Sorted eigenvalues with an optional parity label per level.
///
/// Only the first `n_converged` levels are certified; statistics in this
/// crate read [`Spectrum::certified`] and never the uncertified tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    params: ModelParams,
    levels: Vec<f64>,
    labels: Option<Vec<Parity>>,
    n_converged: usize,
    trunc_used: usize,
    tol: f64,
}

impl Spectrum {
    /// Spectrum from explicit data, e.g. synthetic levels in tests.
    pub fn from_levels(
        params: ModelParams,
        levels: Vec<f64>,
        labels: Option<Vec<Parity>>,
        n_converged: usize,
        trunc_used: usize,
        tol: f64,
    ) -> Result<Self> {
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum levels"));
        }
        if levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("spectrum levels must be nondecreasing"));
        }
        if let Some(l) = &labels {
            if l.len() != levels.len() {
                return Err(Error::Shape(format!(
                    "{} labels for {} levels",
                    l.len(),
                    levels.len()
                )));
            }
        }
        if n_converged > levels.len() {
            return Err(Error::Shape(format!(
                "n_converged {n_converged} exceeds {} levels",
                levels.len()
            )));
        }
        Ok(Spectrum {
            params,
            levels,
            labels,
            n_converged,
            trunc_used,
            tol,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// All levels, including any uncertified tail.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn labels(&self) -> Option<&[Parity]> {
        self.labels.as_deref()
    }

    pub fn n_converged(&self) -> usize {
        self.n_converged
    }

    pub fn trunc_used(&self) -> usize {
        self.trunc_used
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The certified prefix.
    pub fn certified(&self) -> &[f64] {
        &self.levels[..self.n_converged]
    }

    pub fn certified_labels(&self) -> Option<&[Parity]> {
        self.labels.as_deref().map(|l| &l[..self.n_converged])
    }

    /// Keeps at most `k` levels.
    pub fn truncated(&self, k: usize) -> Spectrum {
        let k = k.min(self.levels.len());
        Spectrum {
            levels: self.levels[..k].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..k].to_vec()),
            n_converged: self.n_converged.min(k),
            ..self.clone()
        }
    }

    /// Adds `shift` to every level.
    pub fn shifted(&self, shift: f64) -> Spectrum {
        Spectrum {
            levels: self.levels.iter().map(|v| v + shift).collect(),
            ..self.clone()
        }
    }

    /// The levels carrying `parity`, in order. The certified prefix of the
    /// result is the part that came from the certified prefix here.
    pub fn filter_parity(&self, parity: Parity) -> Result<Spectrum> {
        let labels = self.labels.as_ref().ok_or(Error::MissingLabels)?;
        let mut levels = Vec::new();
        let mut n_converged = 0;
        for (i, (&v, &p)) in self.levels.iter().zip(labels).enumerate() {
            if p == parity {
                levels.push(v);
                if i < self.n_converged {
                    n_converged += 1;
                }
            }
        }
        let labels = vec![parity; levels.len()];
        Ok(Spectrum {
            levels,
            labels: Some(labels),
            n_converged,
            ..self.clone()
        })
    }

    /// CSV with header `index,eigenvalue,parity,converged`; `index` is
    /// 1-based.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows = self.levels.iter().enumerate().map(|(i, &v)| {
            let parity = self
                .labels
                .as_ref()
                .map(|l| l[i].symbol().to_string())
                .unwrap_or_default();
            vec![
                (i + 1).to_string(),
                fmt_f64(v),
                parity,
                (i < self.n_converged).to_string(),
            ]
        });
        write_csv(out, &["index", "eigenvalue", "parity", "converged"], rows)
    }
}

/// Adds g² to every level (the coordinate in which spectral curves flatten
/// at large coupling).
pub fn renormalize(spec: &Spectrum) -> Spectrum {
    let g = spec.params.g();
    spec.shifted(g * g)
}

/// Knobs for truncation doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Starting truncation; `None` picks a default from K.
    pub initial_trunc: Option<usize>,
    /// Largest truncation that may be tried.
    pub n_max: usize,
    /// Bisection bracket width; `None` uses `min(1e-10, tol / 10)`.
    pub eig_tol: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            initial_trunc: None,
            n_max: 1 << 16,
            eig_tol: None,
        }
    }
}

impl CertifyOptions {
    fn eig_tol(&self, tol: f64) -> f64 {
        self.eig_tol.unwrap_or(DEFAULT_TOL.min(tol / 10.0))
    }
}

fn check_request(k_levels: usize, tol: f64) -> Result<()> {
    if k_levels == 0 {
        return Err(Error::invalid("at least one level must be requested"));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(())
}

/// Number of leading levels that agree to within `tol`.
fn stable_prefix(a: &[f64], b: &[f64], tol: f64) -> usize {
    a.iter()
        .zip(b)
        .take_while(|(x, y)| (*x - *y).abs() < tol)
        .count()
}

/// Doubles the truncation until the lowest `k` levels settle.
fn certify<F>(
    params: ModelParams,
    k: usize,
    tol: f64,
    n0: usize,
    n_max: usize,
    eval: F,
) -> Result<Spectrum>
where
    F: Fn(usize) -> Result<Vec<f64>>,
{
    let mut n = n0.min(n_max / 2).max(1);
    let mut prev = eval(n)?;
    loop {
        let n2 = 2 * n;
        let next = eval(n2)?;
        let prefix = stable_prefix(&prev, &next, tol);
        if prefix >= k && next.len() >= k {
            return Spectrum::from_levels(params, next, None, k, n2, tol);
        }
        if 2 * n2 > n_max {
            let partial = Spectrum::from_levels(params, next, None, prefix.min(k), n2, tol)?;
            return Err(Error::NotConverged {
                requested: k,
                certified: prefix.min(k),
                trunc: n2,
                partial: Box::new(partial),
            });
        }
        n = n2;
        prev = next;
    }
}

/// Lowest `k_levels` eigenvalues of the full two-spin Hamiltonian, certified
/// to `tol` by truncation doubling.
pub fn compute_spectrum(params: &ModelParams, k_levels: usize, tol: f64) -> Result<Spectrum> {
    compute_spectrum_with(params, k_levels, tol, &CertifyOptions::default())
}

/// [`compute_spectrum`] with explicit options.
///
/// The default starting truncation is `max(K, 256)` Fock levels. Each Fock
/// level contributes two states, so this already leaves a margin of K
/// states above the requested ones.
pub fn compute_spectrum_with(
    params: &ModelParams,
    k_levels: usize,
    tol: f64,
    opts: &CertifyOptions,
) -> Result<Spectrum> {
    check_request(k_levels, tol)?;
    let eig_tol = opts.eig_tol(tol);
    let n0 = opts.initial_trunc.unwrap_or(k_levels.max(256));
    certify(*params, k_levels, tol, n0, opts.n_max, |n| {
        let m = build_aqrm_matrix(params, n)?;
        let k = k_levels.min(m.dim());
        band_eigenvalues(&m, EigenRange::Lowest(k), eig_tol)
    })
}

/// Certified lowest `k_levels` eigenvalues of one parity sector.
pub fn compute_parity_spectrum(
    params: &ModelParams,
    parity: Parity,
    k_levels: usize,
    tol: f64,
    opts: &CertifyOptions,
) -> Result<Spectrum> {
    check_request(k_levels, tol)?;
    let eig_tol = opts.eig_tol(tol);
    let n0 = opts.initial_trunc.unwrap_or((4 * k_levels).max(256));
    let spec = certify(*params, k_levels, tol, n0, opts.n_max, |n| {
        let m = build_qrm_parity_matrix(params, parity, n)?;
        let k = k_levels.min(m.dim());
        tridiag_eigenvalues(&m, EigenRange::Lowest(k), eig_tol)
    });
    let label = |s: Spectrum| {
        let n = s.levels.len();
        Spectrum {
            labels: Some(vec![parity; n]),
            ..s
        }
    };
    match spec {
        Ok(s) => Ok(label(s)),
        Err(Error::NotConverged {
            requested,
            certified,
            trunc,
            partial,
        }) => Err(Error::NotConverged {
            requested,
            certified,
            trunc,
            partial: Box::new(label(*partial)),
        }),
        Err(e) => Err(e),
    }
}

/// Sorted union of two single-parity spectra with labels. Ties go Plus
/// first. The certified prefix is every level not above the lower of the
/// two highest certified levels.
pub fn merge_parity_spectra(plus: &Spectrum, minus: &Spectrum) -> Result<Spectrum> {
    let (a, b) = (plus.levels(), minus.levels());
    let mut levels = Vec::with_capacity(a.len() + b.len());
    let mut labels = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            levels.push(a[i]);
            labels.push(Parity::Plus);
            i += 1;
        } else {
            levels.push(b[j]);
            labels.push(Parity::Minus);
            j += 1;
        }
    }
    let n_converged = match (plus.certified().last(), minus.certified().last()) {
        (Some(&p), Some(&m)) => {
            let top = p.min(m);
            levels.partition_point(|&v| v <= top)
        }
        _ => 0,
    };
    Spectrum::from_levels(
        plus.params,
        levels,
        Some(labels),
        n_converged,
        plus.trunc_used.max(minus.trunc_used),
        plus.tol.max(minus.tol),
    )
}

/// Both parity spectra of the symmetric model and their labelled merge.
pub fn compute_parity_spectra(
    params: &ModelParams,
    k_levels: usize,
    tol: f64,
    opts: &CertifyOptions,
) -> Result<(Spectrum, Spectrum, Spectrum)> {
    if !params.is_symmetric() {
        return Err(Error::invalid(format!(
            "parity spectra require epsilon = 0, got {}",
            params.epsilon()
        )));
    }
    let (plus, minus) = rayon::join(
        || compute_parity_spectrum(params, Parity::Plus, k_levels, tol, opts),
        || compute_parity_spectrum(params, Parity::Minus, k_levels, tol, opts),
    );
    let (plus, minus) = (plus?, minus?);
    let merged = merge_parity_spectra(&plus, &minus)?;
    Ok((plus, minus, merged))
}
