use aqrm_core::spacing::{
    cumulative, density, extract_peaks_and_periods, internal_symmetry_residuals,
    parity_proportions, spacings, uniform_partition, GapType, SpacingSet,
};
use aqrm_core::spectra::{compute_parity_spectra, compute_spectrum, Spectrum};
use aqrm_core::{ModelParams, Parity};
use proptest::prelude::*;

fn merged(g: f64, delta: f64, k: usize) -> Spectrum {
    let p = ModelParams::qrm(g, delta).unwrap();
    compute_parity_spectra(&p, k, 1e-8, &Default::default())
        .unwrap()
        .2
}

#[test]
fn single_parity_gaps_settle_near_one() {
    let p = ModelParams::qrm(1.0, 1.0).unwrap();
    let (plus, _, _) = compute_parity_spectra(&p, 2001, 1e-8, &Default::default()).unwrap();
    let ss = spacings(&plus).unwrap();
    for s in &ss.gaps()[ss.len() - 100..] {
        assert!((s - 1.0).abs() < 0.2, "{s}");
    }
}

#[test]
fn every_labelled_gap_has_one_type() {
    let m = merged(1.0, 1.0, 300);
    let ss = spacings(&m).unwrap();
    let types = ss.types().unwrap();
    assert_eq!(types.len(), ss.len());
    let labels = m.certified_labels().unwrap();
    for (i, t) in types.iter().enumerate() {
        let same = labels[i] == labels[i + 1];
        assert_eq!(same, *t != GapType::Mixed);
    }
}

#[test]
fn juddian_point_is_a_degeneracy() {
    // (2g)² + Δ² = 1 puts a doubly degenerate level at 1 − g²
    let p = ModelParams::qrm(0.4, 0.6).unwrap();
    let s = compute_spectrum(&p, 200, 1e-8).unwrap();
    let ss = spacings(&s).unwrap();
    let zeros = aqrm_core::spacing::degeneracy_count(&ss);
    assert_eq!(zeros, 1);
    assert_eq!(aqrm_core::spacing::counting(&ss, 0.0), 0);
}

#[test]
fn zero_bias_gaps_alternate_between_clusters() {
    let m = merged(1.0, 1.0, 1500);
    let ss = spacings(&m).unwrap().tail(200);
    let eta = 0.35;
    let cluster = |s: f64| {
        if s < eta {
            Some(0)
        } else if (1.0 - eta..1.0 + eta).contains(&s) {
            Some(1)
        } else {
            None
        }
    };
    let seq: Vec<_> = ss.gaps().iter().map(|&s| cluster(s)).collect();
    let decided = seq.windows(2).filter(|w| w[0].is_some() && w[1].is_some());
    let (mut alternating, mut total) = (0, 0);
    for w in decided {
        total += 1;
        if w[0] != w[1] {
            alternating += 1;
        }
    }
    assert!(total > 0);
    assert!(alternating as f64 / total as f64 > 0.95);
}

#[test]
fn equidistribution_of_small_and_unit_gaps() {
    let m = merged(1.0, 1.0, 2600);
    let pp = parity_proportions(&m, 5000, 0.25).unwrap();
    let d_eta = pp.d_eta.unwrap();
    assert!((d_eta - 1.0).abs() < 0.1, "D_eta = {d_eta}");
}

#[test]
fn cumulative_curve_plateaus_for_biased_model() {
    let p = ModelParams::new(1.0, 1.0, 0.2).unwrap();
    let s = compute_spectrum(&p, 2000, 1e-8).unwrap();
    let ss = spacings(&s).unwrap().tail(200);
    let c = cumulative(&ss, &[0.3, 0.5, 0.7, 1.01]).unwrap();
    assert!(c.h[0] < 0.1, "{:?}", c.h);
    assert!((c.h[1] - 0.5).abs() < 0.1, "{:?}", c.h);
    assert!(c.h[3] > 0.99, "{:?}", c.h);
}

#[test]
fn biased_gaps_stay_in_containment_interval() {
    for eps in [0.1, 0.3] {
        let p = ModelParams::new(1.0, 1.0, eps).unwrap();
        let s = compute_spectrum(&p, 1500, 1e-8).unwrap();
        let ss = spacings(&s).unwrap().tail(200);
        let (lo, hi) = aqrm_core::spacing::containment_interval(eps);
        let inside = ss
            .gaps()
            .iter()
            .filter(|&&x| x > lo - 0.1 && x < hi + 0.1)
            .count();
        assert!(inside as f64 / ss.len() as f64 > 0.95, "eps {eps}");
    }
}

#[test]
fn internal_symmetry_for_moderate_bias() {
    let p = ModelParams::new(1.0, 1.0, 0.3).unwrap();
    let s = compute_spectrum(&p, 1000, 1e-8).unwrap();
    let r = internal_symmetry_residuals(&spacings(&s).unwrap(), 200).unwrap();
    assert!(r.max().unwrap() < 0.1);
}

#[test]
fn large_bias_low_residuals_are_excluded_region() {
    let p = ModelParams::new(1.0, 1.0, 5.5).unwrap();
    let s = compute_spectrum(&p, 60, 1e-8).unwrap();
    let r = internal_symmetry_residuals(&spacings(&s).unwrap(), 1).unwrap();
    let early = r.residuals[..10].iter().cloned().fold(0.0, f64::max);
    assert!(early > 0.5, "{:?}", &r.residuals[..12]);
}

#[test]
fn peaks_of_asymptotic_gaps_have_growing_periods() {
    let lv = aqrm_core::asymptotics::qrm_asymptotic_levels(9000, 20000, 1.0, 1.0, Parity::Plus)
        .unwrap();
    let gaps: Vec<f64> = lv.windows(2).map(|w| w[1] - w[0]).collect();
    let p = ModelParams::qrm(1.0, 1.0).unwrap();
    let ss = SpacingSet::from_gaps(p, gaps, None).unwrap();
    let pa = extract_peaks_and_periods(&ss, 1.0);
    assert!(pa.periods.len() > 10);
    let first = pa.periods[..5].iter().sum::<usize>();
    let last = pa.periods[pa.periods.len() - 5..].iter().sum::<usize>();
    assert!(last > first);
}

proptest! {
    #[test]
    fn counting_is_monotone_and_density_is_exact(
        gaps in prop::collection::vec(0.0f64..2.0, 2..200),
        bins in 1usize..50,
    ) {
        let p = ModelParams::qrm(1.0, 1.0).unwrap();
        let ss = SpacingSet::from_gaps(p, gaps, None).unwrap();
        let edges = uniform_partition(0.0, 2.0, bins).unwrap();
        let d = density(&ss, &edges).unwrap();
        let n = ss.n_levels() as f64;
        let mut prev = 0;
        for (i, m) in d.masses().iter().enumerate() {
            let lo = aqrm_core::spacing::counting(&ss, edges[i]);
            let hi = aqrm_core::spacing::counting(&ss, edges[i + 1]);
            prop_assert!(hi >= lo && lo >= prev);
            prev = lo;
            prop_assert!((m * n - (hi - lo) as f64).abs() < 1e-9);
        }
    }
}
