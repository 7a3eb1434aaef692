//! Level spacings and the statistics built from them.
//!
//! Gaps are numbered like the levels they start from: `s_n = λ_{n+1} − λ_n`
//! with 1-based `n`. A [`SpacingSet`] may be a tail of the full gap list, in
//! which case [`SpacingSet::first_index`] is the `n` of its first gap.
//! Normalizations use the level count `N = gaps + 1`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Parity};
use crate::output::{fmt_f64, fmt_opt, write_csv};
use crate::spectra::{compute_parity_spectrum, compute_spectrum_with, CertifyOptions, Spectrum};

/// Parity type of a gap from the labels of its two levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GapType {
    /// both levels in H₊
    Positive,
    /// both levels in H₋
    Negative,
    Mixed,
}

impl GapType {
    pub fn from_labels(lower: Parity, upper: Parity) -> GapType {
        match (lower, upper) {
            (Parity::Plus, Parity::Plus) => GapType::Positive,
            (Parity::Minus, Parity::Minus) => GapType::Negative,
            _ => GapType::Mixed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GapType::Positive => "positive",
            GapType::Negative => "negative",
            GapType::Mixed => "mixed",
        }
    }
}

/// Consecutive gaps of a certified spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingSet {
    gaps: Vec<f64>,
    types: Option<Vec<GapType>>,
    alpha0: f64,
    first_index: usize,
    params: ModelParams,
}

/// Gaps of the certified prefix. Gaps below the spectrum tolerance are
/// set to exactly zero, since bisection cannot resolve them from a true
/// degeneracy.
pub fn spacings(spec: &Spectrum) -> Result<SpacingSet> {
    let levels = spec.certified();
    if levels.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: levels.len(),
        });
    }
    let zero = spec.tol();
    let gaps: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            let s = w[1] - w[0];
            if s < zero {
                0.0
            } else {
                s
            }
        })
        .collect();
    let types = spec.certified_labels().map(|l| {
        l.windows(2)
            .map(|w| GapType::from_labels(w[0], w[1]))
            .collect()
    });
    Ok(SpacingSet::assemble(gaps, types, 1, *spec.params()))
}

impl SpacingSet {
    fn assemble(
        gaps: Vec<f64>,
        types: Option<Vec<GapType>>,
        first_index: usize,
        params: ModelParams,
    ) -> SpacingSet {
        let alpha0 = gaps.iter().cloned().fold(0.0, f64::max);
        SpacingSet {
            gaps,
            types,
            alpha0,
            first_index,
            params,
        }
    }

    /// Spacing set from raw gaps (numbered from 1).
    pub fn from_gaps(
        params: ModelParams,
        gaps: Vec<f64>,
        types: Option<Vec<GapType>>,
    ) -> Result<SpacingSet> {
        if gaps.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("gaps must be finite and nonnegative"));
        }
        if let Some(t) = &types {
            if t.len() != gaps.len() {
                return Err(Error::Shape(format!(
                    "{} types for {} gaps",
                    t.len(),
                    gaps.len()
                )));
            }
        }
        Ok(SpacingSet::assemble(gaps, types, 1, params))
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn types(&self) -> Option<&[GapType]> {
        self.types.as_deref()
    }

    /// Largest gap.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Index `n` of the first gap.
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    /// Level count `N` used in normalizations.
    pub fn n_levels(&self) -> usize {
        self.gaps.len() + 1
    }

    /// Gap `s_n` by its index.
    pub fn gap(&self, n: usize) -> Option<f64> {
        n.checked_sub(self.first_index)
            .and_then(|i| self.gaps.get(i).copied())
    }

    /// Gaps with index `n >= n_min`.
    pub fn tail(&self, n_min: usize) -> SpacingSet {
        let skip = n_min
            .saturating_sub(self.first_index)
            .min(self.gaps.len());
        SpacingSet::assemble(
            self.gaps[skip..].to_vec(),
            self.types.as_ref().map(|t| t[skip..].to_vec()),
            self.first_index + skip,
            self.params,
        )
    }

    /// CSV with header `n,gap,type` (type empty when unlabeled).
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows = self.gaps.iter().enumerate().map(|(i, &s)| {
            vec![
                (self.first_index + i).to_string(),
                fmt_f64(s),
                self.types
                    .as_ref()
                    .map(|t| t[i].name().to_string())
                    .unwrap_or_default(),
            ]
        });
        write_csv(out, &["n", "gap", "type"], rows)
    }
}

/// Number of gaps strictly below `alpha`.
pub fn counting(ss: &SpacingSet, alpha: f64) -> usize {
    ss.gaps.iter().filter(|&&s| s < alpha).count()
}

/// Number of exact degeneracies (zero gaps).
pub fn degeneracy_count(ss: &SpacingSet) -> usize {
    ss.gaps.iter().filter(|&&s| s == 0.0).count()
}

/// `bins + 1` equally spaced edges on `[lo, hi]`.
pub fn uniform_partition(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidPartition(format!(
            "cannot split [{lo}, {hi}] into {bins} bins"
        )));
    }
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + w * i as f64).collect();
    edges.push(hi);
    Ok(edges)
}

fn check_partition(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidPartition("need at least two edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidPartition("non-finite edge".into()));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidPartition(
            "edges must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Histogram density of gaps over a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDensity {
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
    /// level count `N` used in the normalization
    pub n_levels: usize,
}

impl EmpiricalDensity {
    /// Mass per bin, `value × width`.
    pub fn masses(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    /// Index of the heaviest bin among those whose left edge lies in
    /// `[lo, hi)`; the leftmost wins ties.
    pub fn argmax_in(&self, lo: f64, hi: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            let left = self.bin_edges[i];
            if left < lo || left >= hi {
                continue;
            }
            if best.map_or(true, |b| *v > self.values[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Midpoint of bin `i`.
    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// CSV with header `bin_left,bin_right,density`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows = self.values.iter().enumerate().map(|(i, &v)| {
            vec![
                fmt_f64(self.bin_edges[i]),
                fmt_f64(self.bin_edges[i + 1]),
                fmt_f64(v),
            ]
        });
        write_csv(out, &["bin_left", "bin_right", "density"], rows)
    }
}

/// `f_l = (M(α_{l+1}) − M(α_l)) / ((α_{l+1} − α_l) N)` for each bin.
pub fn density(ss: &SpacingSet, edges: &[f64]) -> Result<EmpiricalDensity> {
    check_partition(edges)?;
    let mut sorted = ss.gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let m = |a: f64| sorted.partition_point(|&s| s < a);
    let n = ss.n_levels() as f64;
    let values = edges
        .windows(2)
        .map(|w| (m(w[1]) - m(w[0])) as f64 / ((w[1] - w[0]) * n))
        .collect();
    Ok(EmpiricalDensity {
        bin_edges: edges.to_vec(),
        values,
        n_levels: ss.n_levels(),
    })
}

/// `h(α) = M_N(α) / N` on a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulativeCurve {
    pub alphas: Vec<f64>,
    pub h: Vec<f64>,
    pub n_used: usize,
}

impl CumulativeCurve {
    /// CSV with header `alpha,h`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows = self
            .alphas
            .iter()
            .zip(&self.h)
            .map(|(&a, &h)| vec![fmt_f64(a), fmt_f64(h)]);
        write_csv(out, &["alpha", "h"], rows)
    }
}

pub fn cumulative(ss: &SpacingSet, alphas: &[f64]) -> Result<CumulativeCurve> {
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("cumulative thresholds"));
    }
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidPartition(
            "thresholds must be nondecreasing".into(),
        ));
    }
    let n = ss.n_levels();
    let h = alphas
        .iter()
        .map(|&a| counting(ss, a) as f64 / n as f64)
        .collect();
    Ok(CumulativeCurve {
        alphas: alphas.to_vec(),
        h,
        n_used: n,
    })
}

/// Parity statistics of the first `n` levels of a labelled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityProportions {
    pub n: usize,
    /// same-parity adjacent pairs divided by `n`
    pub d: f64,
    /// both-Minus pairs over both-Plus pairs; `None` if there are no
    /// both-Plus pairs
    pub r: Option<f64>,
    /// gaps in `(0, η)` over gaps in `(1−η, 1+η)`; `None` if the latter is
    /// empty
    pub d_eta: Option<f64>,
    pub eta: f64,
}

pub fn parity_proportions(merged: &Spectrum, n: usize, eta: f64) -> Result<ParityProportions> {
    let labels = merged.certified_labels().ok_or(Error::MissingLabels)?;
    if n < 2 || n > labels.len() {
        return Err(Error::TooShort {
            needed: n.max(2),
            have: labels.len(),
        });
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be > 0, got {eta}")));
    }
    let levels = &merged.certified()[..n];
    let (mut plus, mut minus) = (0usize, 0usize);
    for w in labels[..n].windows(2) {
        match GapType::from_labels(w[0], w[1]) {
            GapType::Positive => plus += 1,
            GapType::Negative => minus += 1,
            GapType::Mixed => {}
        }
    }
    let (mut small, mut near_one) = (0usize, 0usize);
    for w in levels.windows(2) {
        let s = w[1] - w[0];
        if s > 0.0 && s < eta {
            small += 1;
        }
        if s > 1.0 - eta && s < 1.0 + eta {
            near_one += 1;
        }
    }
    Ok(ParityProportions {
        n,
        d: (plus + minus) as f64 / n as f64,
        r: (plus > 0).then(|| minus as f64 / plus as f64),
        d_eta: (near_one > 0).then(|| small as f64 / near_one as f64),
        eta,
    })
}

/// [`parity_proportions`] at each prefix length in `ns`.
pub fn parity_proportion_series(
    merged: &Spectrum,
    ns: &[usize],
    eta: f64,
) -> Result<Vec<ParityProportions>> {
    ns.iter()
        .map(|&n| parity_proportions(merged, n, eta))
        .collect()
}

/// CSV with header `n,d,r,d_eta` (empty fields where undefined).
pub fn write_proportions_csv<W: Write>(rows: &[ParityProportions], out: W) -> std::io::Result<()> {
    let rows = rows.iter().map(|p| {
        vec![
            p.n.to_string(),
            fmt_f64(p.d),
            fmt_opt(p.r),
            fmt_opt(p.d_eta),
        ]
    });
    write_csv(out, &["n", "d", "r", "d_eta"], rows)
}

/// Residuals `|s_n + s_{n+1} − 1|`, starting at `n = first_index`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryResiduals {
    pub first_index: usize,
    pub residuals: Vec<f64>,
}

impl SymmetryResiduals {
    pub fn max(&self) -> Option<f64> {
        self.residuals.iter().cloned().reduce(f64::max)
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.residuals.is_empty())
            .then(|| self.residuals.iter().sum::<f64>() / self.residuals.len() as f64)
    }

    /// Index `n` of the largest residual.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, r) in self.residuals.iter().enumerate() {
            if best.map_or(true, |b| *r > self.residuals[b]) {
                best = Some(i);
            }
        }
        best.map(|i| i + self.first_index)
    }
}

pub fn internal_symmetry_residuals(ss: &SpacingSet, n_min: usize) -> Result<SymmetryResiduals> {
    if n_min == 0 {
        return Err(Error::invalid("n_min is 1-based and must be >= 1"));
    }
    let t = ss.tail(n_min);
    let residuals = t
        .gaps
        .windows(2)
        .map(|w| (w[0] + w[1] - 1.0).abs())
        .collect();
    Ok(SymmetryResiduals {
        first_index: t.first_index,
        residuals,
    })
}

/// Interval expected to contain the gaps of the biased model, by cases of
/// the fractional part of ε.
pub fn containment_interval(epsilon: f64) -> (f64, f64) {
    let f = epsilon.abs().fract();
    if f < 0.25 {
        (f, 1.0 - f)
    } else if f < 0.5 {
        (0.5 - f, 0.5 + f)
    } else if f < 0.75 {
        (f - 0.5, 1.5 - f)
    } else {
        (1.0 - f, f)
    }
}

/// Local maxima of the envelope and the index distances between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakAnalysis {
    /// `(n, s_n)` of every peak
    pub peaks: Vec<(usize, f64)>,
    pub periods: Vec<usize>,
}

/// Peaks of the gap sequence restricted to gaps `>= threshold`.
///
/// The restricted sequence keeps the original indices. A peak is a strict
/// local maximum of it; on a plateau the leftmost index is taken. The first
/// and last restricted entries are never peaks.
pub fn extract_peaks_and_periods(ss: &SpacingSet, threshold: f64) -> PeakAnalysis {
    let kept: Vec<(usize, f64)> = ss
        .gaps
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, &s)| (ss.first_index + i, s))
        .collect();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < kept.len() {
        let v = kept[i].1;
        if v <= kept[i - 1].1 {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < kept.len() && kept[j + 1].1 == v {
            j += 1;
        }
        if j + 1 < kept.len() && kept[j + 1].1 < v {
            peaks.push(kept[i]);
        }
        i = j + 1;
    }
    let periods = peaks.windows(2).map(|w| w[1].0 - w[0].0).collect();
    PeakAnalysis { peaks, periods }
}

/// What an α₀ sweep diagonalizes at each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepTarget {
    /// one parity sector of the symmetric model
    Parity(Parity),
    /// the full spectrum at the given bias
    Full { epsilon: f64 },
}

/// Largest gap at one grid point; failures are recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alpha0Entry {
    pub g: f64,
    pub delta: f64,
    pub alpha0: Option<f64>,
    pub certified: usize,
    pub error: Option<String>,
}

/// α₀ over the grid `gs × deltas` (row-major in `g`), from `k_levels`
/// certified levels per point.
pub fn alpha0_sweep(
    gs: &[f64],
    deltas: &[f64],
    target: SweepTarget,
    k_levels: usize,
    tol: f64,
    opts: &CertifyOptions,
) -> Vec<Alpha0Entry> {
    let grid: Vec<(f64, f64)> = gs
        .iter()
        .flat_map(|&g| deltas.iter().map(move |&d| (g, d)))
        .collect();
    grid.par_iter()
        .map(|&(g, delta)| {
            let spec = match target {
                SweepTarget::Parity(p) => ModelParams::qrm(g, delta)
                    .and_then(|m| compute_parity_spectrum(&m, p, k_levels, tol, opts)),
                SweepTarget::Full { epsilon } => ModelParams::new(g, delta, epsilon)
                    .and_then(|m| compute_spectrum_with(&m, k_levels, tol, opts)),
            };
            let spec = match spec {
                Err(Error::NotConverged { partial, .. }) => Ok(*partial),
                other => other,
            };
            let failure = |e: Error| Alpha0Entry {
                g,
                delta,
                alpha0: None,
                certified: 0,
                error: Some(e.to_string()),
            };
            match spec.and_then(|s| spacings(&s).map(|ss| (s.n_converged(), ss))) {
                Ok((certified, ss)) => Alpha0Entry {
                    g,
                    delta,
                    alpha0: Some(ss.alpha0()),
                    certified,
                    error: (certified < k_levels)
                        .then(|| format!("only {certified} of {k_levels} levels certified")),
                },
                Err(e) => failure(e),
            }
        })
        .collect()
}

/// CSV with header `g,delta,alpha0` (empty where a point failed).
pub fn write_alpha0_csv<W: Write>(rows: &[Alpha0Entry], out: W) -> std::io::Result<()> {
    let rows = rows
        .iter()
        .map(|e| vec![fmt_f64(e.g), fmt_f64(e.delta), fmt_opt(e.alpha0)]);
    write_csv(out, &["g", "delta", "alpha0"], rows)
}
