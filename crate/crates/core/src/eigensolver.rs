//! Eigenvalues of real symmetric tridiagonal and band matrices.
//!
//! Eigenvalues only. Tridiagonal matrices are handled by Sturm-sequence
//! bisection; band matrices are first reduced to tridiagonal form with
//! Givens rotations (bulge chasing), which is an orthogonal similarity.
//!
//! Bisection keeps a work list of disjoint intervals and evaluates the Sturm
//! counts of many midpoints in one pass over the matrix. The recurrence is a
//! chain of dependent divisions, so running several shifts side by side is
//! what keeps the divider busy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BandedSymmetric, TridiagonalSymmetric};

/// Default absolute bracket width for bisection.
pub const DEFAULT_TOL: f64 = 1e-10;

const LANES: usize = 8;
const PAR_THRESHOLD: usize = 4 * LANES;

/// Which eigenvalues to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenRange {
    /// The `k` smallest eigenvalues.
    Lowest(usize),
    /// Eigenvalues in the half-open interval `[a, b)`.
    Interval(f64, f64),
}

/// Precomputed data for repeated Sturm counts.
struct Sturm<'a> {
    diag: &'a [f64],
    off2: Vec<f64>,
    pivmin: f64,
}

impl<'a> Sturm<'a> {
    fn new(m: &'a TridiagonalSymmetric) -> Self {
        let off2: Vec<f64> = m.offdiag().iter().map(|e| e * e).collect();
        let emax = off2.iter().cloned().fold(1.0f64, f64::max);
        Sturm {
            diag: m.diag(),
            off2,
            pivmin: f64::MIN_POSITIVE * emax,
        }
    }

    fn count(&self, x: f64) -> usize {
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = self.pivmin;
        }
        let mut neg = (q < 0.0) as usize;
        for (d, e2) in self.diag[1..].iter().zip(&self.off2) {
            q = (d - x) - e2 / q;
            if q.abs() < self.pivmin {
                q = self.pivmin;
            }
            neg += (q < 0.0) as usize;
        }
        neg
    }

    /// Counts for up to `LANES` shifts in one sweep. Unused lanes repeat the
    /// last shift.
    fn count_lanes(&self, xs: &[f64]) -> [usize; LANES] {
        debug_assert!(!xs.is_empty() && xs.len() <= LANES);
        let mut x = [0.0; LANES];
        for (l, slot) in x.iter_mut().enumerate() {
            *slot = xs[l.min(xs.len() - 1)];
        }
        let pivmin = self.pivmin;
        let mut q = [0.0; LANES];
        let mut neg = [0usize; LANES];
        let d0 = self.diag[0];
        for l in 0..LANES {
            let mut t = d0 - x[l];
            if t.abs() < pivmin {
                t = pivmin;
            }
            neg[l] += (t < 0.0) as usize;
            q[l] = t;
        }
        for (d, e2) in self.diag[1..].iter().zip(&self.off2) {
            for l in 0..LANES {
                let mut t = (d - x[l]) - e2 / q[l];
                if t.abs() < pivmin {
                    t = pivmin;
                }
                neg[l] += (t < 0.0) as usize;
                q[l] = t;
            }
        }
        neg
    }

    fn counts(&self, xs: &[f64]) -> Vec<usize> {
        let chunk = |c: &[f64]| -> Vec<usize> {
            let r = self.count_lanes(c);
            r[..c.len()].to_vec()
        };
        if xs.len() >= PAR_THRESHOLD {
            xs.par_chunks(LANES).flat_map_iter(chunk).collect()
        } else {
            xs.chunks(LANES).flat_map(chunk).collect()
        }
    }
}

/// Number of eigenvalues of `m` strictly below `x`.
///
/// Zero pivots in the LDLᵀ recurrence are replaced by a tiny positive value,
/// so an eigenvalue exactly at `x` is not counted.
pub fn sturm_count(m: &TridiagonalSymmetric, x: f64) -> Result<usize> {
    if !x.is_finite() {
        return Err(Error::NonFinite("sturm shift"));
    }
    Ok(Sturm::new(m).count(x))
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
    /// eigenvalue index range `[c_lo, c_hi)` inside the bracket
    c_lo: usize,
    c_hi: usize,
}

/// Eigenvalues of `m` in `range`, sorted, with multiplicity.
///
/// Every value is the midpoint of a bisection bracket of width at most
/// `tol`; eigenvalues closer together than `tol` come back as repeated
/// values.
pub fn tridiag_eigenvalues(
    m: &TridiagonalSymmetric,
    range: EigenRange,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid(format!("tolerance must be > 0, got {tol}")));
    }
    let sturm = Sturm::new(m);
    let n = m.dim();
    let (glo, ghi) = m.gershgorin_bounds();
    let pad = 2.0 * f64::EPSILON * glo.abs().max(ghi.abs()) + 2.0 * sturm.pivmin + tol;
    let (mut lo, mut hi) = (glo - pad, ghi + pad);
    while sturm.count(lo) > 0 {
        lo -= (hi - lo).max(1.0);
    }
    while sturm.count(hi) < n {
        hi += (hi - lo).max(1.0);
    }

    let (t0, t1, root) = match range {
        EigenRange::Lowest(k) => {
            if k > n {
                return Err(Error::invalid(format!(
                    "requested {k} eigenvalues of a {n}x{n} matrix"
                )));
            }
            (
                0,
                k,
                Bracket {
                    lo,
                    hi,
                    c_lo: 0,
                    c_hi: n,
                },
            )
        }
        EigenRange::Interval(a, b) => {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("eigenvalue interval"));
            }
            if a >= b {
                return Ok(Vec::new());
            }
            let (a, b) = (a.max(lo), b.min(hi));
            if a >= b {
                return Ok(Vec::new());
            }
            let ca = sturm.count(a);
            let cb = sturm.count(b).max(ca);
            (
                ca,
                cb,
                Bracket {
                    lo: a,
                    hi: b,
                    c_lo: ca,
                    c_hi: cb,
                },
            )
        }
    };
    if t0 >= t1 {
        return Ok(Vec::new());
    }

    let wanted = |b: &Bracket| b.c_lo.max(t0) < b.c_hi.min(t1);
    let mut out = vec![f64::NAN; t1 - t0];
    let mut active = vec![root];
    while !active.is_empty() {
        let mut split = Vec::with_capacity(active.len());
        for b in active.drain(..) {
            let mid = 0.5 * (b.lo + b.hi);
            if b.hi - b.lo <= tol || mid <= b.lo || mid >= b.hi {
                for idx in b.c_lo.max(t0)..b.c_hi.min(t1) {
                    out[idx - t0] = mid;
                }
            } else {
                split.push(b);
            }
        }
        if split.is_empty() {
            break;
        }
        let mids: Vec<f64> = split.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
        let counts = sturm.counts(&mids);
        for ((b, mid), c) in split.into_iter().zip(mids).zip(counts) {
            let c = c.clamp(b.c_lo, b.c_hi);
            let left = Bracket {
                lo: b.lo,
                hi: mid,
                c_lo: b.c_lo,
                c_hi: c,
            };
            let right = Bracket {
                lo: mid,
                hi: b.hi,
                c_lo: c,
                c_hi: b.c_hi,
            };
            if left.c_hi > left.c_lo && wanted(&left) {
                active.push(left);
            }
            if right.c_hi > right.c_lo && wanted(&right) {
                active.push(right);
            }
        }
    }
    debug_assert!(out.iter().all(|v| v.is_finite()));
    Ok(out)
}

/// Working copy of a band matrix with one extra subdiagonal for the bulge.
struct BandWork {
    n: usize,
    cap: usize,
    stride: usize,
    w: Vec<f64>,
}

impl BandWork {
    fn from_band(m: &BandedSymmetric) -> Self {
        let n = m.dim();
        let cap = m.bandwidth() + 1;
        let stride = cap + 1;
        let mut w = vec![0.0; n * stride];
        for (k, band) in m.bands().iter().enumerate() {
            for (j, &v) in band.iter().enumerate() {
                w[j * stride + k] = v;
            }
        }
        BandWork { n, cap, stride, w }
    }

    /// `A[i][j]` for `i >= j`, `i - j <= cap`.
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.w[j * self.stride + (i - j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.w[j * self.stride + (i - j)] = v;
    }

    /// Similarity `A ← G A Gᵀ` with `G` rotating rows/columns `p` and `p+1`
    /// as `(c x + s y, -s x + c y)`.
    fn rotate(&mut self, p: usize, c: f64, s: f64) {
        let q = p + 1;
        let cap = self.cap;
        let kmin = q.saturating_sub(cap);
        debug_assert!(p < cap || kmin == 0 || self.at(p, kmin - 1) == 0.0);
        for k in kmin..p {
            let x = self.at(p, k);
            let y = self.at(q, k);
            self.set(p, k, c * x + s * y);
            self.set(q, k, -s * x + c * y);
        }
        let app = self.at(p, p);
        let aqq = self.at(q, q);
        let aqp = self.at(q, p);
        let cs = c * s;
        self.set(p, p, c * c * app + 2.0 * cs * aqp + s * s * aqq);
        self.set(q, q, s * s * app - 2.0 * cs * aqp + c * c * aqq);
        self.set(q, p, cs * (aqq - app) + (c * c - s * s) * aqp);
        let kmax = (p + cap).min(self.n - 1);
        for k in q + 1..=kmax {
            let x = self.at(k, p);
            let y = self.at(k, q);
            self.set(k, p, c * x + s * y);
            self.set(k, q, -s * x + c * y);
        }
        debug_assert!(q + cap >= self.n || self.at(q + cap, q) == 0.0);
    }

    /// Rotate in plane `(i-1, i)` so that `A[i][j]` becomes zero.
    fn annihilate(&mut self, i: usize, j: usize) -> bool {
        let y = self.at(i, j);
        if y == 0.0 {
            return false;
        }
        let x = self.at(i - 1, j);
        let r = x.hypot(y);
        self.rotate(i - 1, x / r, y / r);
        self.set(i, j, 0.0);
        true
    }
}

/// Orthogonally similar tridiagonal form of a symmetric band matrix.
pub fn band_to_tridiagonal(m: &BandedSymmetric) -> Result<TridiagonalSymmetric> {
    let n = m.dim();
    let b = m.bandwidth();
    if b <= 1 {
        let off = if b == 1 {
            m.bands()[1].clone()
        } else {
            vec![0.0; n.saturating_sub(1)]
        };
        return TridiagonalSymmetric::new(m.bands()[0].clone(), off);
    }
    let mut work = BandWork::from_band(m);
    for j in 0..n.saturating_sub(2) {
        for k in (2..=b).rev() {
            let i = j + k;
            if i >= n || !work.annihilate(i, j) {
                continue;
            }
            // bulge sits at distance b+1 below the diagonal; chase it out
            let (mut row, mut col) = (i + b, i - 1);
            while row < n && work.annihilate(row, col) {
                col = row - 1;
                row += b;
            }
        }
    }
    let diag = (0..n).map(|i| work.at(i, i)).collect();
    let off = (0..n - 1).map(|i| work.at(i + 1, i)).collect();
    TridiagonalSymmetric::new(diag, off)
}

/// Eigenvalues of a band matrix via reduction and bisection.
pub fn band_eigenvalues(m: &BandedSymmetric, range: EigenRange, tol: f64) -> Result<Vec<f64>> {
    let t = band_to_tridiagonal(m)?;
    tridiag_eigenvalues(&t, range, tol)
}
