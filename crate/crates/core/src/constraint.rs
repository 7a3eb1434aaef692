//! Constraint-polynomial determinants and the zero curves of `p_ℓ`.
//!
//! Both polynomials are determinants of ℓ×ℓ tridiagonal matrices and are
//! evaluated with the three-term recurrence
//! `D_i = a_i D_{i−1} − b_{i−1} c_{i−1} D_{i−2}`, `D_0 = 1`, `D_{−1} = 0`,
//! where `b_i` sits above the diagonal and `c_i` below it.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::{fmt_f64, write_csv};

/// Explicit tridiagonal matrix for determinant evaluation. Indices are
/// 1-based in the formulas: `a[i-1] = a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagDetSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl TridiagDetSpec {
    /// Fills `a_i, b_i, c_i` from generators, `i = 1..=n` (`b`, `c` up to
    /// `n − 1`).
    pub fn from_fn(
        n: usize,
        a: impl Fn(usize) -> f64,
        b: impl Fn(usize) -> f64,
        c: impl Fn(usize) -> f64,
    ) -> Self {
        TridiagDetSpec {
            a: (1..=n).map(&a).collect(),
            b: (1..n).map(&b).collect(),
            c: (1..n).map(&c).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.a.len()
    }

    pub fn determinant(&self) -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        for (i, &ai) in self.a.iter().enumerate() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.b[i - 1] * self.c[i - 1]
            };
            let next = ai * cur - coupling * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Dense matrix with `b` on the superdiagonal and `c` below.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.a[i];
            if i + 1 < n {
                m[i][i + 1] = self.b[i];
                m[i + 1][i] = self.c[i];
            }
        }
        m
    }
}

fn check_ell(ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::invalid("ell must be >= 1"));
    }
    Ok(())
}

/// `A^ℓ_N(u, v)`: `(N+ℓ)!/N!` times the determinant with
/// `a_i = u + v/(N+i) − ℓ + 2i − 1`, `b_i = 1`, `c_i = −i(ℓ−i)`.
pub fn a_poly(ell: usize, n_idx: usize, u: f64, v: f64) -> Result<f64> {
    check_ell(ell)?;
    let l = ell as f64;
    let spec = TridiagDetSpec::from_fn(
        ell,
        |i| u + v / (n_idx + i) as f64 - l + 2.0 * i as f64 - 1.0,
        |_| 1.0,
        |i| -(i as f64) * (l - i as f64),
    );
    let ratio: f64 = (1..=ell).map(|i| (n_idx + i) as f64).product();
    Ok(ratio * spec.determinant())
}

/// The tridiagonal whose determinant is `p_ℓ(x; g, Δ)`.
pub fn p_matrix(ell: usize, x: f64, g: f64, delta: f64) -> TridiagDetSpec {
    let l = ell as f64;
    let g2 = g * g;
    let t = move |i: usize| x - 0.5 * l + g2 + i as f64;
    TridiagDetSpec::from_fn(
        ell,
        |i| delta * delta + (4.0 * g2 - l + 2.0 * i as f64 - 1.0) * t(i),
        t,
        |i| -(i as f64) * (l - i as f64) * t(i + 1),
    )
}

/// `p_ℓ(x; g, Δ)` at the unrenormalized spectral parameter `x`.
pub fn p_poly(ell: usize, x: f64, g: f64, delta: f64) -> Result<f64> {
    check_ell(ell)?;
    Ok(p_matrix(ell, x, g, delta).determinant())
}

const ROOT_TOL: f64 = 1e-10;

fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of `p_ℓ(·; g, Δ)` whose renormalized value `x + g²` lies in
/// `window`, sorted, returned renormalized.
pub fn p_roots(ell: usize, g: f64, delta: f64, window: (f64, f64)) -> Result<Vec<f64>> {
    check_ell(ell)?;
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad root window [{lo}, {hi}]")));
    }
    let g2 = g * g;
    let f = |y: f64| p_matrix(ell, y - g2, g, delta).determinant();
    let samples = ((hi - lo) * 128.0).ceil().max(256.0) as usize;
    let step = (hi - lo) / samples as f64;
    let mut roots = Vec::new();
    let mut y0 = lo;
    let mut f0 = f(y0);
    if f0 == 0.0 {
        roots.push(y0);
    }
    for k in 1..=samples {
        let y1 = if k == samples { hi } else { lo + step * k as f64 };
        let f1 = f(y1);
        if f1 == 0.0 {
            roots.push(y1);
        } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(bisect_root(&f, y0, y1, f0));
        }
        y0 = y1;
        f0 = f1;
    }
    Ok(roots)
}

/// Default search window `[−ℓ/2 − 1, ℓ/2 + 1]` for renormalized roots.
pub fn default_window(ell: usize) -> (f64, f64) {
    let h = 0.5 * ell as f64;
    (-h - 1.0, h + 1.0)
}

/// One continued zero curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCurve {
    pub id: usize,
    /// `(g, x + g²)` in increasing `g`
    pub points: Vec<(f64, f64)>,
}

/// Traced curves plus the coupling values where the number of roots in the
/// window changes even after local refinement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCurves {
    pub curves: Vec<ZeroCurve>,
    pub discontinuities: Vec<f64>,
}

impl ZeroCurves {
    /// CSV with header `g,curve_id,renormalized_x`, ordered by `g` then id.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut rows: Vec<(f64, usize, f64)> = self
            .curves
            .iter()
            .flat_map(|c| c.points.iter().map(move |&(g, x)| (g, c.id, x)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        write_csv(
            out,
            &["g", "curve_id", "renormalized_x"],
            rows.into_iter()
                .map(|(g, id, x)| vec![fmt_f64(g), id.to_string(), fmt_f64(x)]),
        )
    }

    /// Value of curve `id` at coupling `g`, if sampled there.
    pub fn value_at(&self, id: usize, g: f64) -> Option<f64> {
        self.curves
            .iter()
            .find(|c| c.id == id)
            .and_then(|c| c.points.iter().find(|p| p.0 == g).map(|p| p.1))
    }
}

/// Refinement depth when the root count changes between grid points.
pub const MAX_REFINE_DEPTH: usize = 8;

fn refine(
    ell: usize,
    delta: f64,
    window: (f64, f64),
    left: &(f64, Vec<f64>),
    right: &(f64, Vec<f64>),
    depth: usize,
    out: &mut Vec<(f64, Vec<f64>)>,
    jumps: &mut Vec<f64>,
) -> Result<()> {
    if left.1.len() == right.1.len() {
        return Ok(());
    }
    if depth == 0 {
        jumps.push(0.5 * (left.0 + right.0));
        return Ok(());
    }
    let gm = 0.5 * (left.0 + right.0);
    let mid = (gm, p_roots(ell, gm, delta, window)?);
    refine(ell, delta, window, left, &mid, depth - 1, out, jumps)?;
    out.push(mid.clone());
    refine(ell, delta, window, &mid, right, depth - 1, out, jumps)
}

/// Zero curves of `p_ℓ` over a coupling grid, renormalized to `x + g²`.
///
/// Roots are bracketed by sign changes on a fine grid and bisected to
/// 1e−10. Points are joined into curves by nearest-neighbour continuation.
/// When the root count differs between adjacent grid points the interval
/// is halved locally up to [`MAX_REFINE_DEPTH`] times before the change is
/// reported as a discontinuity.
pub fn p_zero_curves(
    ell: usize,
    delta: f64,
    g_grid: &[f64],
    window: Option<(f64, f64)>,
) -> Result<ZeroCurves> {
    check_ell(ell)?;
    if g_grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::invalid("coupling grid must be positive and finite"));
    }
    if g_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("coupling grid must be strictly increasing"));
    }
    let window = window.unwrap_or_else(|| default_window(ell));
    let coarse: Vec<(f64, Vec<f64>)> = g_grid
        .par_iter()
        .map(|&g| p_roots(ell, g, delta, window).map(|r| (g, r)))
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(coarse.len());
    let mut jumps = Vec::new();
    for (i, s) in coarse.iter().enumerate() {
        if i > 0 {
            refine(
                ell,
                delta,
                window,
                &coarse[i - 1],
                s,
                MAX_REFINE_DEPTH,
                &mut samples,
                &mut jumps,
            )?;
        }
        samples.push(s.clone());
    }

    let mut curves: Vec<ZeroCurve> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    for (g, roots) in samples {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, &c) in active.iter().enumerate() {
            let last = curves[c].points.last().unwrap().1;
            for (ri, &x) in roots.iter().enumerate() {
                pairs.push(((x - last).abs(), ai, ri));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut curve_for_root = vec![None; roots.len()];
        let mut used = vec![false; active.len()];
        for (_, ai, ri) in pairs {
            if !used[ai] && curve_for_root[ri].is_none() {
                used[ai] = true;
                curve_for_root[ri] = Some(active[ai]);
            }
        }
        let mut next_active = Vec::with_capacity(roots.len());
        for (ri, &x) in roots.iter().enumerate() {
            let c = curve_for_root[ri].unwrap_or_else(|| {
                curves.push(ZeroCurve {
                    id: curves.len(),
                    points: Vec::new(),
                });
                curves.len() - 1
            });
            curves[c].points.push((g, x));
            next_active.push(c);
        }
        active = next_active;
    }
    Ok(ZeroCurves {
        curves,
        discontinuities: jumps,
    })
}
