//! Nonlinear least squares (Levenberg-Marquardt) for three small models.
//!
//! The Jacobian is a forward difference with step `1e-6·max(1, |θ_j|)`.
//! Damping starts at 1e−3 and moves by a factor 10 on each rejected or
//! accepted step; the iteration stops when an accepted step changes the SSE
//! by less than 1e−12 relative, or after 500 iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression model `f(x; θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `arctan(a·log₁₀x + b)/π + c`, θ = (a, b, c)
    ArctanProportion,
    /// `a·x^b`, θ = (a, b)
    PowerLaw,
    /// `p₁·x + p₀`, θ = (p₁, p₀)
    Linear,
}

impl FitModel {
    pub fn n_params(self) -> usize {
        match self {
            FitModel::ArctanProportion => 3,
            FitModel::PowerLaw | FitModel::Linear => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitModel::ArctanProportion => "arctan_proportion",
            FitModel::PowerLaw => "power_law",
            FitModel::Linear => "linear",
        }
    }

    pub fn eval(self, theta: &[f64], x: f64) -> f64 {
        match self {
            FitModel::ArctanProportion => {
                (theta[0] * x.log10() + theta[1]).atan() / std::f64::consts::PI + theta[2]
            }
            FitModel::PowerLaw => theta[0] * x.powf(theta[1]),
            FitModel::Linear => theta[0] * x + theta[1],
        }
    }
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arctan_proportion" | "arctan" => Ok(FitModel::ArctanProportion),
            "power_law" | "power" => Ok(FitModel::PowerLaw),
            "linear" => Ok(FitModel::Linear),
            other => Err(Error::invalid(format!("unknown fit model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub lambda0: f64,
    pub rel_tol: f64,
    /// Report linearized 95% intervals (normal approximation).
    pub intervals: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            lambda0: 1e-3,
            rel_tol: 1e-12,
            intervals: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub sse: f64,
    /// `None` when the data have zero variance
    pub r_square: Option<f64>,
    pub rmse: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Goodness {
    pub sse: f64,
    pub r_square: Option<f64>,
    pub rmse: f64,
}

/// SSE, R² = 1 − SSE/SST and RMSE = √(SSE/m).
pub fn goodness(ys: &[f64], fitted: &[f64]) -> Result<Goodness> {
    if ys.len() != fitted.len() {
        return Err(Error::Shape(format!(
            "{} observations vs {} fitted values",
            ys.len(),
            fitted.len()
        )));
    }
    if ys.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: ys.len(),
        });
    }
    let m = ys.len() as f64;
    let sse: f64 = ys.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let mean = ys.iter().sum::<f64>() / m;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    Ok(Goodness {
        sse,
        r_square: (sst > 0.0).then(|| 1.0 - sse / sst),
        rmse: (sse / m).sqrt(),
    })
}

fn sse_at(model: FitModel, theta: &[f64], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - model.eval(theta, x)).powi(2))
        .sum()
}

/// Forward-difference Jacobian of the model values, `m × p` row-major.
pub fn jacobian(model: FitModel, theta: &[f64], xs: &[f64]) -> Vec<Vec<f64>> {
    let base: Vec<f64> = xs.iter().map(|&x| model.eval(theta, x)).collect();
    let mut jac = vec![vec![0.0; theta.len()]; xs.len()];
    let mut t = theta.to_vec();
    for j in 0..theta.len() {
        let h = 1e-6 * theta[j].abs().max(1.0);
        t[j] = theta[j] + h;
        for (i, &x) in xs.iter().enumerate() {
            jac[i][j] = (model.eval(&t, x) - base[i]) / h;
        }
        t[j] = theta[j];
    }
    jac
}

/// Solves `A x = b` for small dense `A` by Gaussian elimination with
/// partial pivoting; `None` if a pivot is negligible.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = jac.first().map_or(0, |row| row.len());
    let mut jtj = vec![vec![0.0; p]; p];
    let mut jtr = vec![0.0; p];
    for (row, &ri) in jac.iter().zip(r) {
        for a in 0..p {
            jtr[a] += row[a] * ri;
            for b in 0..p {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    (jtj, jtr)
}

fn inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_small(a.to_vec(), e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Minimizes `Σ (y − f(x; θ))²` from `init`.
///
/// Degenerate data never panic: a singular system at the end is reported
/// through `converged = false` and `message`.
pub fn fit(
    model: FitModel,
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    let p = model.n_params();
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} x values vs {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < p.max(2) {
        return Err(Error::TooShort {
            needed: p.max(2),
            have: xs.len(),
        });
    }
    if init.len() != p {
        return Err(Error::Shape(format!(
            "{} needs {p} parameters, got {}",
            model.name(),
            init.len()
        )));
    }
    if init.iter().chain(xs).chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit inputs"));
    }

    let residuals = |t: &[f64]| -> Vec<f64> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| y - model.eval(t, x))
            .collect()
    };
    let mut theta = init.to_vec();
    let mut sse = sse_at(model, &theta, xs, ys);
    if !sse.is_finite() {
        return Err(Error::NonFinite("initial residuals"));
    }
    let mut lambda = opts.lambda0;
    let mut converged = sse == 0.0;
    let mut iterations = 0;
    let mut message = None;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian(model, &theta, xs);
        let (jtj, jtr) = normal_equations(&jac, &residuals(&theta));
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p {
                let d = if jtj[k][k] > 0.0 { jtj[k][k] } else { 1.0 };
                a[k][k] += lambda * d;
            }
            let trial = solve_small(a, jtr.clone()).map(|step| {
                let t: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
                let s = sse_at(model, &t, xs, ys);
                (t, s)
            });
            match trial {
                Some((t, s)) if s.is_finite() && s <= sse => {
                    let rel = if sse > 0.0 { (sse - s) / sse } else { 0.0 };
                    theta = t;
                    sse = s;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if rel < opts.rel_tol || sse == 0.0 {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            // no descent direction left: the SSE no longer changes
            converged = true;
        }
    }

    let jac = jacobian(model, &theta, xs);
    let (jtj, _) = normal_equations(&jac, &residuals(&theta));
    let cov_unscaled = inverse(&jtj);
    if cov_unscaled.is_none() {
        converged = false;
        message = Some("rank-deficient normal equations at the solution".to_string());
    } else if !converged {
        message = Some(format!("stopped after {iterations} iterations"));
    }
    let fitted: Vec<f64> = xs.iter().map(|&x| model.eval(&theta, x)).collect();
    let gof = goodness(ys, &fitted)?;
    let intervals = match (&cov_unscaled, opts.intervals) {
        (Some(c), true) if xs.len() > p => {
            let s2 = gof.sse / (xs.len() - p) as f64;
            Some(
                theta
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let half = 1.96 * (s2 * c[k][k]).max(0.0).sqrt();
                        (t - half, t + half)
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    Ok(FitResult {
        model,
        params: theta,
        sse: gof.sse,
        r_square: gof.r_square,
        rmse: gof.rmse,
        converged,
        iterations,
        intervals,
        message,
    })
}

/// Ordinary least squares `(slope, intercept)`.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: xs.len().min(ys.len()),
        });
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x values have zero variance"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Starting point for `model`: log-log regression for the power law,
/// ordinary least squares for the line, a grid search for the arctan model.
pub fn default_init(model: FitModel, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    match model {
        FitModel::Linear => {
            let (s, i) = ols_line(xs, ys)?;
            Ok(vec![s, i])
        }
        FitModel::PowerLaw => {
            let (lx, ly): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(ys)
                .filter(|(x, y)| **x > 0.0 && **y > 0.0)
                .map(|(x, y)| (x.ln(), y.ln()))
                .unzip();
            let (b, ln_a) = ols_line(&lx, &ly)?;
            Ok(vec![ln_a.exp(), b])
        }
        FitModel::ArctanProportion => arctan_grid_init(xs, ys),
    }
}

/// Grid over `a ∈ {1, …, 50}` with the inflection placed at the median of
/// `log₁₀x`; `c` is the mean offset.
fn arctan_grid_init(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::TooShort {
            needed: 1,
            have: 0,
        });
    }
    let mut logs: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    logs.sort_by(f64::total_cmp);
    let med = logs[logs.len() / 2];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for a in 1..=50 {
        let a = a as f64;
        let b = -a * med;
        let c = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| y - (a * x.log10() + b).atan() / std::f64::consts::PI)
            .sum::<f64>()
            / xs.len() as f64;
        let theta = vec![a, b, c];
        let s = sse_at(FitModel::ArctanProportion, &theta, xs, ys);
        if best.as_ref().map_or(true, |(bs, _)| s < *bs) {
            best = Some((s, theta));
        }
    }
    Ok(best.unwrap().1)
}

/// Arctan fit of `(N, d(N))` samples; the fitted curve tends to `½ + c`.
pub fn fit_proportion_curve(samples: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if samples.iter().any(|(n, _)| !(*n > 0.0)) {
        return Err(Error::invalid("sample sizes N must be positive"));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("sample sizes N must be increasing"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().cloned().unzip();
    let init = default_init(FitModel::ArctanProportion, &xs, &ys)?;
    fit(FitModel::ArctanProportion, &xs, &ys, &init, opts)
}
