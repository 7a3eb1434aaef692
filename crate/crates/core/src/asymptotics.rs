//! Closed-form large-n models of the spectrum and of the spacing measure.
//!
//! Levels of a parity sector are indexed from 0 (the lowest level of the
//! sector is `λ_0`). With the sector matrices of [`crate::model`], the
//! oscillating correction of `H₊` at even `n` is positive:
//!
//! ```text
//! λ_n(H±) ≈ n − g² ± (−1)ⁿ Δ cos(4g√n − π/4) / √(2πg) · n^(−1/4)
//! ```

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Parity;
use crate::output::{fmt_f64, write_csv};
use crate::spectra::Spectrum;

/// Oscillating large-n approximation of level `n` of `H±`.
pub fn qrm_asymptotic_level(n: usize, g: f64, delta: f64, parity: Parity) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("asymptotic level index must be >= 1"));
    }
    let nf = n as f64;
    let alt = if n % 2 == 0 { 1.0 } else { -1.0 };
    let osc = delta * (4.0 * g * nf.sqrt() - PI / 4.0).cos() / (2.0 * PI * g).sqrt()
        * nf.powf(-0.25);
    Ok(nf - g * g + parity.sign() * alt * osc)
}

/// Asymptotic levels `n_from..n_to` of one sector.
pub fn qrm_asymptotic_levels(
    n_from: usize,
    n_to: usize,
    g: f64,
    delta: f64,
    parity: Parity,
) -> Result<Vec<f64>> {
    (n_from..n_to)
        .map(|n| qrm_asymptotic_level(n, g, delta, parity))
        .collect()
}

/// Levels `0..n_to` of one sector: computed values below `crossover`,
/// asymptotic ones from there on. `computed` must hold at least
/// `min(crossover, n_to)` levels.
pub fn hybrid_levels(
    computed: &[f64],
    crossover: usize,
    n_to: usize,
    g: f64,
    delta: f64,
    parity: Parity,
) -> Result<Vec<f64>> {
    let cut = crossover.min(n_to).max(1);
    if computed.len() < cut {
        return Err(Error::TooShort {
            needed: cut,
            have: computed.len(),
        });
    }
    let mut levels = computed[..cut].to_vec();
    levels.extend(qrm_asymptotic_levels(cut, n_to, g, delta, parity)?);
    Ok(levels)
}

/// Branch of the biased model's linear skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Upper,
    Lower,
}

/// `n − g² ± ε`.
pub fn aqrm_asymptotic_level(n: usize, g: f64, epsilon: f64, branch: Branch) -> f64 {
    let s = match branch {
        Branch::Upper => 1.0,
        Branch::Lower => -1.0,
    };
    n as f64 - g * g + s * epsilon
}

/// Limit distribution of the full-spectrum gaps as point masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurePrediction {
    /// `(location, weight)`, sorted by location
    pub atoms: Vec<(f64, f64)>,
}

/// `½δ({2ε}) + ½δ(1 − {2ε})`, a single unit atom at ½ when `{2ε} = ½`.
pub fn predicted_measure(epsilon: f64) -> MeasurePrediction {
    let f = (2.0 * epsilon.abs()).fract();
    let atoms = if f == 0.5 {
        vec![(0.5, 1.0)]
    } else {
        let (a, b) = (f, 1.0 - f);
        vec![(a.min(b), 0.5), (a.max(b), 0.5)]
    };
    MeasurePrediction { atoms }
}

/// Limits of `h(α)` between and above the critical gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CumulativeConstants {
    Two { c1: f64, c2: f64 },
    Single { c1: f64 },
}

/// `c₁ = α₁/2`, `c₂ = 1 − α₁/2` with `α₁ = min({2ε}, 1 − {2ε})`; a single
/// constant ½ when the critical gaps coincide.
pub fn predicted_cumulative_constants(epsilon: f64) -> CumulativeConstants {
    let f = (2.0 * epsilon.abs()).fract();
    if f == 0.5 {
        return CumulativeConstants::Single { c1: 0.5 };
    }
    let alpha1 = f.min(1.0 - f);
    CumulativeConstants::Two {
        c1: 0.5 * alpha1,
        c2: 1.0 - 0.5 * alpha1,
    }
}

/// Period of the oscillating correction near level `n0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodModel {
    /// `π√n₀`
    pub l: f64,
    /// period seen in the envelope of one gap sign, `L/2`
    pub observed_l: f64,
    /// `8/π²`, the inverse slope of period against period index
    pub xi_slope: f64,
}

pub fn period_model(n0: f64) -> Result<PeriodModel> {
    if !(n0 >= 1.0) || !n0.is_finite() {
        return Err(Error::invalid(format!("n0 must be >= 1, got {n0}")));
    }
    let l = PI * n0.sqrt();
    Ok(PeriodModel {
        l,
        observed_l: 0.5 * l,
        xi_slope: 8.0 / (PI * PI),
    })
}

/// One row of a computed-vs-asymptotic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelComparison {
    pub n: usize,
    pub computed: f64,
    pub asymptotic: f64,
    pub diff: f64,
}

/// Certified levels of a single-parity spectrum against the asymptotic
/// formula, for `n` in `n_from..n_to` (0-based, `n_from >= 1`).
pub fn compare_with_asymptotics(
    spec: &Spectrum,
    parity: Parity,
    n_from: usize,
    n_to: usize,
) -> Result<Vec<LevelComparison>> {
    let levels = spec.certified();
    if n_to > levels.len() {
        return Err(Error::TooShort {
            needed: n_to,
            have: levels.len(),
        });
    }
    let (g, delta) = (spec.params().g(), spec.params().delta());
    (n_from.max(1)..n_to)
        .map(|n| {
            let a = qrm_asymptotic_level(n, g, delta, parity)?;
            Ok(LevelComparison {
                n,
                computed: levels[n],
                asymptotic: a,
                diff: levels[n] - a,
            })
        })
        .collect()
}

/// CSV with header `n,computed,asymptotic,diff`.
pub fn write_comparison_csv<W: Write>(rows: &[LevelComparison], out: W) -> std::io::Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            fmt_f64(r.computed),
            fmt_f64(r.asymptotic),
            fmt_f64(r.diff),
        ]
    });
    write_csv(out, &["n", "computed", "asymptotic", "diff"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_delta_leaves_linear_part() {
        for n in [1, 7, 100] {
            let v = qrm_asymptotic_level(n, 1.5, 0.0, Parity::Plus).unwrap();
            assert_eq!(v, n as f64 - 2.25);
        }
        assert!(qrm_asymptotic_level(0, 1.0, 1.0, Parity::Plus).is_err());
    }

    #[test]
    fn parity_difference() {
        let (g, d) = (1.0, 1.0);
        for n in [10usize, 11, 2000] {
            let p = qrm_asymptotic_level(n, g, d, Parity::Plus).unwrap();
            let m = qrm_asymptotic_level(n, g, d, Parity::Minus).unwrap();
            let alt = if n % 2 == 0 { 1.0 } else { -1.0 };
            let nf = n as f64;
            let want = 2.0 * alt * d * (4.0 * g * nf.sqrt() - PI / 4.0).cos()
                / (2.0 * PI * g).sqrt()
                * nf.powf(-0.25);
            assert!((p - m - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_parity_gaps_approach_one() {
        let (g, d) = (1.0, 1.0);
        let lv = qrm_asymptotic_levels(100, 3000, g, d, Parity::Plus).unwrap();
        for (i, w) in lv.windows(2).enumerate() {
            let n = (100 + i) as f64;
            let bound = 3.0 * d / (2.0 * PI * g).sqrt() * n.powf(-0.25);
            assert!((w[1] - w[0] - 1.0).abs() <= bound);
        }
    }

    #[test]
    fn skeleton_branches() {
        assert_eq!(
            aqrm_asymptotic_level(3, 2.0, 0.0, Branch::Upper),
            aqrm_asymptotic_level(3, 2.0, 0.0, Branch::Lower)
        );
        let eps = 0.2;
        let mut lv: Vec<f64> = (0..20)
            .flat_map(|n| {
                [
                    aqrm_asymptotic_level(n, 1.0, eps, Branch::Upper),
                    aqrm_asymptotic_level(n, 1.0, eps, Branch::Lower),
                ]
            })
            .collect();
        lv.sort_by(f64::total_cmp);
        for (i, w) in lv.windows(2).enumerate() {
            let want = if i % 2 == 0 { 2.0 * eps } else { 1.0 - 2.0 * eps };
            assert!((w[1] - w[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_examples() {
        assert_eq!(predicted_measure(0.0).atoms, vec![(0.0, 0.5), (1.0, 0.5)]);
        let m = predicted_measure(0.2).atoms;
        assert!((m[0].0 - 0.4).abs() < 1e-15 && (m[1].0 - 0.6).abs() < 1e-15);
        assert_eq!(predicted_measure(0.25).atoms, vec![(0.5, 1.0)]);
        assert_eq!(predicted_measure(-0.2), predicted_measure(0.2));
    }

    #[test]
    fn measure_periodicity_and_reflection() {
        for k in 0..32 {
            let eps = k as f64 / 64.0;
            assert_eq!(predicted_measure(eps), predicted_measure(eps + 0.5));
            let eta = eps.min(0.25);
            assert_eq!(
                predicted_measure(0.25 - eta),
                predicted_measure(0.25 + eta)
            );
        }
    }

    #[test]
    fn cumulative_constants() {
        match predicted_cumulative_constants(0.2) {
            CumulativeConstants::Two { c1, c2 } => {
                assert!((c1 - 0.2).abs() < 1e-15 && (c2 - 0.8).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            predicted_cumulative_constants(0.25),
            CumulativeConstants::Single { c1: 0.5 }
        );
        match predicted_cumulative_constants(0.6) {
            CumulativeConstants::Two { c1, c2 } => {
                assert!((c1 - 0.1).abs() < 1e-12 && (c2 - 0.9).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn period_model_values() {
        let p = period_model(10_000.0).unwrap();
        assert!((p.observed_l - 157.079_632_679).abs() < 1e-6);
        assert!((1.0 / p.xi_slope - 1.233_700_55).abs() < 1e-8);
        assert!((period_model(40_000.0).unwrap().l - 2.0 * p.l).abs() < 1e-9);
        assert!(period_model(0.5).is_err());
    }

    #[test]
    fn hybrid_switches_at_crossover() {
        let computed: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let lv = hybrid_levels(&computed, 5, 8, 1.0, 1.0, Parity::Plus).unwrap();
        assert_eq!(lv.len(), 8);
        assert_eq!(&lv[..5], &computed[..5]);
        assert_eq!(lv[6], qrm_asymptotic_level(6, 1.0, 1.0, Parity::Plus).unwrap());
        assert!(hybrid_levels(&computed[..3], 5, 8, 1.0, 1.0, Parity::Plus).is_err());
    }
}
