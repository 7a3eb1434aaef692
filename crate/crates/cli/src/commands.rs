use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aqrm_core::asymptotics::{
    compare_with_asymptotics, hybrid_levels, period_model, predicted_cumulative_constants,
    predicted_measure, write_comparison_csv, CumulativeConstants,
};
use aqrm_core::constraint::{default_window, p_zero_curves};
use aqrm_core::fitting::{default_init, fit, fit_proportion_curve, FitModel, FitOptions};
use aqrm_core::output::{fmt_f64, write_csv};
use aqrm_core::spacing::{
    alpha0_sweep, containment_interval, cumulative, density, extract_peaks_and_periods,
    parity_proportion_series, spacings, uniform_partition, write_alpha0_csv,
    write_proportions_csv, SpacingSet, SweepTarget,
};
use aqrm_core::spectra::{
    compute_parity_spectrum, compute_spectrum_with, merge_parity_spectra, renormalize,
    CertifyOptions,
};
use aqrm_core::{Error, ModelParams, Parity, Spectrum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::failure::{Failure, EXIT_NOT_CONVERGED};
use crate::{Command, MapTarget, ModelArgs, OutArgs, Sector, SectorSign, SolverArgs};

type CliResult<T> = Result<T, Failure>;

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Spectrum {
            model,
            solver,
            parity,
            renormalize: shift,
            out,
        } => run_spectral(&model, &solver, parity, &out, |s| {
            let s = if shift { renormalize(s) } else { s.clone() };
            Ok(in_memory(|buf| s.write_csv(buf)))
        }),
        Command::Spacing {
            model,
            solver,
            parity,
            nmin,
            out,
        } => run_spectral(&model, &solver, parity, &out, |s| {
            let ss = spacings(s)?.tail(nmin);
            Ok(in_memory(|buf| ss.write_csv(buf)))
        }),
        Command::Density {
            model,
            solver,
            parity,
            nmin,
            bins,
            alpha_max,
            out,
        } => {
            let edges = uniform_partition(0.0, alpha_max, bins)?;
            run_spectral(&model, &solver, parity, &out, |s| {
                let d = density(&spacings(s)?.tail(nmin), &edges)?;
                Ok(in_memory(|buf| d.write_csv(buf)))
            })
        }
        Command::Cdf {
            model,
            solver,
            parity,
            nmin,
            alphas,
            out,
        } => run_spectral(&model, &solver, parity, &out, |s| {
            let c = cumulative(&spacings(s)?.tail(nmin), &alphas)?;
            Ok(in_memory(|buf| c.write_csv(buf)))
        }),
        Command::SweepEps {
            g,
            delta,
            solver,
            eps_from,
            eps_to,
            eps_step,
            raw,
            nmin,
            bins,
            alpha_max,
            density_out,
            out,
        } => sweep_eps(
            g,
            delta,
            &solver,
            grid(eps_from, eps_to, eps_step, "eps")?,
            raw,
            nmin,
            uniform_partition(0.0, alpha_max, bins)?,
            density_out,
            &out,
        ),
        Command::Alpha0Map {
            g_grid,
            delta_grid,
            parity,
            epsilon,
            solver,
            out,
        } => alpha0_map(&g_grid, &delta_grid, parity, epsilon, &solver, &out),
        Command::Proportions {
            g,
            delta,
            solver,
            eta,
            points,
            n_points,
            out,
        } => proportions(g, delta, &solver, eta, points, n_points, &out),
        Command::ConstraintCurves {
            ell,
            delta,
            g_from,
            g_to,
            g_step,
            x_min,
            x_max,
            unrenormalized,
            out,
        } => {
            let grid = grid(g_from, g_to, g_step, "g")?;
            let (lo, hi) = default_window(ell);
            let window = (x_min.unwrap_or(lo), x_max.unwrap_or(hi));
            constraint_curves(ell, delta, &grid, window, unrenormalized, &out)
        }
        Command::Envelope {
            g,
            delta,
            parity,
            n_from,
            n_to,
            use_asymptotic,
            crossover,
            threshold,
            tol,
            n_max,
            peaks_out,
            periods_out,
            out,
        } => envelope(EnvelopeRequest {
            g,
            delta,
            parity: parity.into(),
            n_from,
            n_to,
            crossover: use_asymptotic.then_some(crossover),
            threshold,
            tol,
            n_max,
            peaks_out,
            periods_out,
            out: out.out,
        }),
        Command::CompareAsymptotic {
            g,
            delta,
            parity,
            n_from,
            n_to,
            tol,
            n_max,
            out,
        } => compare_asymptotic(g, delta, parity.into(), n_from, n_to, tol, n_max, &out),
        Command::FitProportion {
            input,
            intervals,
            out,
        } => fit_proportion(&input, intervals, &out),
        Command::Predict { epsilon, out } => {
            let constants = match predicted_cumulative_constants(epsilon) {
                CumulativeConstants::Two { c1, c2 } => vec![c1, c2],
                CumulativeConstants::Single { c1 } => vec![c1],
            };
            let atoms: Vec<Value> = predicted_measure(epsilon)
                .atoms
                .iter()
                .map(|&(location, weight)| json!({ "location": location, "weight": weight }))
                .collect();
            let (lo, hi) = containment_interval(epsilon);
            let v = json!({
                "epsilon": epsilon.abs(),
                "atoms": atoms,
                "constants": constants,
                "containment_interval": [lo, hi],
            });
            deliver(&out.out, &json_bytes(&v), false).map(drop)
        }
        Command::Schema { out } => {
            deliver(&out.out, &json_bytes(&crate::schema::schema()), false).map(drop)
        }
    }
}

impl From<SectorSign> for Parity {
    fn from(s: SectorSign) -> Parity {
        match s {
            SectorSign::Plus => Parity::Plus,
            SectorSign::Minus => Parity::Minus,
        }
    }
}

impl ModelArgs {
    fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.g, self.delta, self.epsilon)?)
    }
}

impl SolverArgs {
    fn options(&self) -> CertifyOptions {
        CertifyOptions {
            n_max: self.n_max,
            ..Default::default()
        }
    }
}

fn in_memory(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(v).expect("report serializes");
    buf.push(b'\n');
    buf
}

fn partial_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_os_string();
    s.push(".partial");
    PathBuf::from(s)
}

/// Writes `bytes` to `out` (stdout when `None`). Partial results go to
/// `out` with a `.partial` suffix and are dropped when writing to stdout.
/// Returns the path of a written partial file.
fn deliver(out: &Option<PathBuf>, bytes: &[u8], partial: bool) -> CliResult<Option<PathBuf>> {
    match (out, partial) {
        (None, false) => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
            Ok(None)
        }
        (None, true) => Ok(None),
        (Some(p), false) => {
            fs::write(p, bytes).map_err(|e| Failure::io(p, e))?;
            Ok(None)
        }
        (Some(p), true) => {
            let pp = partial_path(p);
            fs::write(&pp, bytes).map_err(|e| Failure::io(&pp, e))?;
            Ok(Some(pp))
        }
    }
}

/// Splits a convergence failure into its failure report and partial result.
fn split(r: aqrm_core::Result<Spectrum>) -> CliResult<(Spectrum, Option<Failure>)> {
    match r {
        Ok(s) => Ok((s, None)),
        Err(Error::NotConverged {
            requested,
            certified,
            trunc,
            partial,
        }) => {
            let spec = (*partial).clone();
            let f = Failure::from(Error::NotConverged {
                requested,
                certified,
                trunc,
                partial,
            });
            Ok((spec, Some(f)))
        }
        Err(e) => Err(e.into()),
    }
}

/// Both parity sectors merged. A sector that fails to certify contributes
/// its certified prefix and the merge is reported as not converged.
fn merged_spectrum(
    params: &ModelParams,
    k: usize,
    tol: f64,
    opts: &CertifyOptions,
) -> aqrm_core::Result<Spectrum> {
    let (plus, minus) = rayon::join(
        || compute_parity_spectrum(params, Parity::Plus, k, tol, opts),
        || compute_parity_spectrum(params, Parity::Minus, k, tol, opts),
    );
    let mut short = None;
    let mut take = |r: aqrm_core::Result<Spectrum>| match r {
        Err(Error::NotConverged { trunc, partial, .. }) => {
            short = Some(trunc);
            Ok(*partial)
        }
        other => other,
    };
    let plus = take(plus)?;
    let minus = take(minus)?;
    let merged = merge_parity_spectra(&plus, &minus)?;
    match short {
        None => Ok(merged),
        Some(trunc) => Err(Error::NotConverged {
            requested: 2 * k,
            certified: merged.n_converged(),
            trunc,
            partial: Box::new(merged),
        }),
    }
}

fn solve(params: &ModelParams, sector: Sector, solver: &SolverArgs) -> aqrm_core::Result<Spectrum> {
    let (k, tol, opts) = (solver.levels, solver.tol, solver.options());
    match sector {
        Sector::Full => compute_spectrum_with(params, k, tol, &opts),
        Sector::Plus => compute_parity_spectrum(params, Parity::Plus, k, tol, &opts),
        Sector::Minus => compute_parity_spectrum(params, Parity::Minus, k, tol, &opts),
        Sector::Merged => merged_spectrum(params, k, tol, &opts),
    }
}

/// Computes one spectrum and writes `render` of it, or of its certified
/// prefix to the `.partial` file when certification falls short.
fn run_spectral<F>(
    model: &ModelArgs,
    solver: &SolverArgs,
    sector: Sector,
    out: &OutArgs,
    render: F,
) -> CliResult<()>
where
    F: Fn(&Spectrum) -> CliResult<Vec<u8>>,
{
    let params = model.params()?;
    if sector != Sector::Full && !params.is_symmetric() {
        return Err(Failure::usage(
            "--parity plus|minus|merged requires --epsilon 0",
        ));
    }
    let (spec, failed) = split(solve(&params, sector, solver))?;
    let spec = if sector == Sector::Merged {
        spec.truncated(solver.levels)
    } else {
        spec
    };
    match failed {
        None => deliver(&out.out, &render(&spec)?, false).map(drop),
        Some(f) => {
            let written = match render(&spec) {
                Ok(bytes) => deliver(&out.out, &bytes, true)?,
                Err(_) => None,
            };
            Err(f.with_partial(&written.into_iter().collect::<Vec<_>>()))
        }
    }
}

/// `from, from + step, …` up to `to` inclusive, tolerant of rounding.
fn grid(from: f64, to: f64, step: f64, name: &str) -> CliResult<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || !(step > 0.0) || to < from {
        return Err(Failure::usage(format!(
            "bad {name} grid: from {from} to {to} step {step}"
        )));
    }
    let x = (to - from) / step;
    let n = (x + 1e-9 * x.max(1.0)).floor();
    if n > 1e6 {
        return Err(Failure::usage(format!("{name} grid has more than 1e6 points")));
    }
    // snap to 12 decimals so that 0.1 * 3 prints as 0.3
    Ok((0..=n as usize)
        .map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn sweep_eps(
    g: f64,
    delta: f64,
    solver: &SolverArgs,
    eps: Vec<f64>,
    raw: bool,
    nmin: usize,
    edges: Vec<f64>,
    density_out: Option<PathBuf>,
    out: &OutArgs,
) -> CliResult<()> {
    let base = ModelParams::qrm(g, delta)?;
    let opts = solver.options();
    let results: Vec<_> = eps
        .par_iter()
        .map(|&e| {
            base.with_epsilon(e)
                .and_then(|p| compute_spectrum_with(&p, solver.levels, solver.tol, &opts))
        })
        .collect();
    let mut spectra = Vec::with_capacity(eps.len());
    let mut failure = None;
    for r in results {
        let (s, f) = split(r)?;
        if failure.is_none() {
            failure = f;
        }
        spectra.push(s);
    }
    let shift = if raw { 0.0 } else { g * g };
    let rows = eps.iter().zip(&spectra).flat_map(|(&e, s)| {
        s.certified()
            .iter()
            .enumerate()
            .map(move |(i, &v)| vec![fmt_f64(e), (i + 1).to_string(), fmt_f64(v + shift)])
    });
    let levels = in_memory(|buf| write_csv(buf, &["epsilon", "index", "eigenvalue"], rows));
    let densities = match &density_out {
        None => None,
        Some(_) => {
            let mut rows = Vec::new();
            for (&e, s) in eps.iter().zip(&spectra) {
                let d = match spacings(s) {
                    Ok(ss) => density(&ss.tail(nmin), &edges)?,
                    Err(err) if failure.is_some() => {
                        eprintln!("{}", json!({ "warning": { "epsilon": e, "message": err.to_string() } }));
                        continue;
                    }
                    Err(err) => return Err(err.into()),
                };
                for (w, v) in d.bin_edges.windows(2).zip(&d.values) {
                    rows.push(vec![fmt_f64(e), fmt_f64(w[0]), fmt_f64(w[1]), fmt_f64(*v)]);
                }
            }
            Some(in_memory(|buf| {
                write_csv(buf, &["epsilon", "bin_left", "bin_right", "density"], rows)
            }))
        }
    };
    let partial = failure.is_some();
    let mut written = Vec::new();
    written.extend(deliver(&out.out, &levels, partial)?);
    if let Some(bytes) = densities {
        written.extend(deliver(&density_out, &bytes, partial)?);
    }
    match failure {
        None => Ok(()),
        Some(f) => Err(f.with_partial(&written)),
    }
}

fn alpha0_map(
    gs: &[f64],
    deltas: &[f64],
    target: MapTarget,
    epsilon: f64,
    solver: &SolverArgs,
    out: &OutArgs,
) -> CliResult<()> {
    for &g in gs {
        for &d in deltas {
            ModelParams::new(g, d, epsilon)?;
        }
    }
    let target = match target {
        MapTarget::Plus => SweepTarget::Parity(Parity::Plus),
        MapTarget::Minus => SweepTarget::Parity(Parity::Minus),
        MapTarget::Full => SweepTarget::Full { epsilon },
    };
    let mut rows = alpha0_sweep(
        gs,
        deltas,
        target,
        solver.levels,
        solver.tol,
        &solver.options(),
    );
    for e in rows.iter_mut().filter(|e| e.error.is_some()) {
        eprintln!(
            "{}",
            json!({ "warning": {
                "g": e.g,
                "delta": e.delta,
                "certified": e.certified,
                "prefix_alpha0": e.alpha0,
                "message": e.error,
            }})
        );
        e.alpha0 = None;
    }
    let bytes = in_memory(|buf| write_alpha0_csv(&rows, buf));
    deliver(&out.out, &bytes, false).map(drop)
}

/// Roughly log-spaced prefix lengths between `min(10, m)` and `m`.
fn log_points(m: usize, count: usize) -> Vec<usize> {
    let lo = 10.min(m).max(2) as f64;
    let hi = m as f64;
    if count < 2 || hi <= lo {
        return vec![m];
    }
    let mut ns: Vec<usize> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (lo.ln() + t * (hi.ln() - lo.ln())).exp().round() as usize
        })
        .collect();
    ns.dedup();
    ns
}

fn proportions(
    g: f64,
    delta: f64,
    solver: &SolverArgs,
    eta: f64,
    points: Vec<usize>,
    n_points: usize,
    out: &OutArgs,
) -> CliResult<()> {
    let params = ModelParams::qrm(g, delta)?;
    let (spec, failed) = split(merged_spectrum(
        &params,
        solver.levels,
        solver.tol,
        &solver.options(),
    ))?;
    let m = spec.n_converged();
    let ns = if points.is_empty() {
        log_points(m, n_points)
    } else if failed.is_some() {
        points.into_iter().filter(|&n| n <= m).collect()
    } else {
        points
    };
    let render = || -> CliResult<Vec<u8>> {
        let rows = parity_proportion_series(&spec, &ns, eta)?;
        Ok(in_memory(|buf| write_proportions_csv(&rows, buf)))
    };
    match failed {
        None => deliver(&out.out, &render()?, false).map(drop),
        Some(f) => {
            let written = match render() {
                Ok(bytes) => deliver(&out.out, &bytes, true)?,
                Err(_) => None,
            };
            Err(f.with_partial(&written.into_iter().collect::<Vec<_>>()))
        }
    }
}

fn constraint_curves(
    ell: usize,
    delta: f64,
    grid: &[f64],
    window: (f64, f64),
    unrenormalized: bool,
    out: &OutArgs,
) -> CliResult<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Failure::usage(format!("delta must be > 0, got {delta}")));
    }
    let curves = p_zero_curves(ell, delta, grid, Some(window))?;
    for g in &curves.discontinuities {
        eprintln!(
            "{}",
            json!({ "warning": { "g": g, "message": "root count changes in the window" } })
        );
    }
    let bytes = if unrenormalized {
        let mut rows: Vec<(f64, usize, f64)> = curves
            .curves
            .iter()
            .flat_map(|c| c.points.iter().map(move |&(g, x)| (g, c.id, x - g * g)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let rows = rows
            .into_iter()
            .map(|(g, id, x)| vec![fmt_f64(g), id.to_string(), fmt_f64(x)]);
        in_memory(|buf| write_csv(buf, &["g", "curve_id", "x"], rows))
    } else {
        in_memory(|buf| curves.write_csv(buf))
    };
    deliver(&out.out, &bytes, false).map(drop)
}

struct EnvelopeRequest {
    g: f64,
    delta: f64,
    parity: Parity,
    n_from: usize,
    n_to: usize,
    crossover: Option<usize>,
    threshold: f64,
    tol: f64,
    n_max: usize,
    peaks_out: Option<PathBuf>,
    periods_out: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn fit_or_error(model: FitModel, xs: &[f64], ys: &[f64]) -> Value {
    let r = default_init(model, xs, ys)
        .and_then(|init| fit(model, xs, ys, &init, &FitOptions::default()));
    match r {
        Ok(r) => serde_json::to_value(r).expect("fit report serializes"),
        Err(e) => json!({ "model": model.name(), "error": e.to_string() }),
    }
}

fn envelope(req: EnvelopeRequest) -> CliResult<()> {
    if req.n_from < 1 || req.n_to <= req.n_from {
        return Err(Failure::usage("need 1 <= n-from < n-to"));
    }
    let params = ModelParams::qrm(req.g, req.delta)?;
    // gap s_n = λ_n − λ_{n−1} with 0-based levels, so s_{n_to} needs n_to + 1 levels
    let needed = req.n_to + 1;
    let computed = req.crossover.map_or(needed, |c| c.min(needed));
    let opts = CertifyOptions {
        n_max: req.n_max,
        ..Default::default()
    };
    let spec = compute_parity_spectrum(&params, req.parity, computed, req.tol, &opts)?;
    let levels = match req.crossover {
        Some(c) if needed > c => {
            hybrid_levels(spec.certified(), c, needed, req.g, req.delta, req.parity)?
        }
        _ => spec.certified()[..needed].to_vec(),
    };
    let gaps = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let ss = SpacingSet::from_gaps(params, gaps, None)?.tail(req.n_from);
    let pa = extract_peaks_and_periods(&ss, req.threshold);

    let (px, py): (Vec<f64>, Vec<f64>) = pa
        .peaks
        .iter()
        .map(|&(n, s)| (n as f64, s - 1.0))
        .unzip();
    let kx: Vec<f64> = (1..=pa.periods.len()).map(|k| k as f64).collect();
    let ky: Vec<f64> = pa.periods.iter().map(|&p| p as f64).collect();
    let report = json!({
        "g": req.g,
        "delta": req.delta,
        "parity": req.parity.symbol(),
        "n_from": req.n_from,
        "n_to": req.n_to,
        "asymptotic_from": req.crossover.filter(|&c| needed > c),
        "threshold": req.threshold,
        "peaks": pa.peaks.len(),
        "periods": pa.periods.len(),
        "power_law": fit_or_error(FitModel::PowerLaw, &px, &py),
        "linear": fit_or_error(FitModel::Linear, &kx, &ky),
        "period_model": period_model(0.5 * (req.n_from + req.n_to) as f64)?,
    });

    if req.peaks_out.is_some() {
        let rows = pa
            .peaks
            .iter()
            .map(|&(n, s)| vec![n.to_string(), fmt_f64(s)]);
        let bytes = in_memory(|buf| write_csv(buf, &["n", "gap"], rows));
        deliver(&req.peaks_out, &bytes, false)?;
    }
    if req.periods_out.is_some() {
        let rows = pa.periods.iter().enumerate().map(|(i, &p)| {
            vec![(i + 1).to_string(), pa.peaks[i].0.to_string(), p.to_string()]
        });
        let bytes = in_memory(|buf| write_csv(buf, &["index", "n", "period"], rows));
        deliver(&req.periods_out, &bytes, false)?;
    }
    deliver(&req.out, &json_bytes(&report), false).map(drop)
}

#[allow(clippy::too_many_arguments)]
fn compare_asymptotic(
    g: f64,
    delta: f64,
    parity: Parity,
    n_from: usize,
    n_to: usize,
    tol: f64,
    n_max: usize,
    out: &OutArgs,
) -> CliResult<()> {
    let params = ModelParams::qrm(g, delta)?;
    let opts = CertifyOptions {
        n_max,
        ..Default::default()
    };
    let (spec, failed) = split(compute_parity_spectrum(&params, parity, n_to, tol, &opts))?;
    let upto = n_to.min(spec.n_converged());
    let rows = compare_with_asymptotics(&spec, parity, n_from, upto)?;
    let bytes = in_memory(|buf| write_comparison_csv(&rows, buf));
    let written = deliver(&out.out, &bytes, failed.is_some())?;
    match failed {
        None => Ok(()),
        Some(f) => Err(f.with_partial(&written.into_iter().collect::<Vec<_>>())),
    }
}

fn read_proportion_samples(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_failure(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_failure(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Failure::usage(format!("{}: no '{name}' column", path.display())))
    };
    let (ni, di) = (col("n")?, col("d")?);
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_failure(path, e))?;
        let d = rec.get(di).unwrap_or("").trim();
        if d.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                Failure::usage(format!(
                    "{}: bad number '{s}' on data row {}",
                    path.display(),
                    line + 1
                ))
            })
        };
        samples.push((parse(rec.get(ni).unwrap_or(""))?, parse(d)?));
    }
    Ok(samples)
}

fn csv_failure(path: &Path, e: csv::Error) -> Failure {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Failure::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Failure::usage(format!("{}: {e}", path.display()))
    }
}

fn fit_proportion(input: &Path, intervals: bool, out: &OutArgs) -> CliResult<()> {
    let samples = read_proportion_samples(input)?;
    let opts = FitOptions {
        intervals,
        ..Default::default()
    };
    let r = fit_proportion_curve(&samples, &opts)?;
    let converged = r.converged;
    let report = json!({ "limit": 0.5 + r.params[2], "fit": r });
    let written = deliver(&out.out, &json_bytes(&report), !converged)?;
    if converged {
        return Ok(());
    }
    let message = report["fit"]["message"]
        .as_str()
        .unwrap_or("fit did not converge")
        .to_string();
    Err(Failure {
        kind: "fit_not_converged",
        message,
        code: EXIT_NOT_CONVERGED,
        extra: Default::default(),
    }
    .with_partial(&written.into_iter().collect::<Vec<_>>()))
}
