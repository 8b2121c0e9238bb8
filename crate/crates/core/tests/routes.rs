//! Cross-validation of the three evaluation routes for the limiting means
//! and covariances: closed forms, rectangle contours with the sigma kernel,
//! and the unit-circle representation.

use seqspec_core::limits::{
    circle_cov, circle_mean, law_logdet, lss_cov_auto, lss_mean_auto, ContourConfig, TracePairLaw,
};
use seqspec_core::model::{Dimensions, SymmetryClass, TimeGrid};
use seqspec_core::mp::{SpectralFn, SpectralMeasure};

fn closed_mean(f: SpectralFn, t: f64, y: f64) -> f64 {
    match f {
        SpectralFn::Identity => 0.0,
        SpectralFn::Square => t * y,
        SpectralFn::Log => 0.5 * (1.0 - y / t).ln(),
        SpectralFn::Quartic => unreachable!(),
    }
}

fn closed_cov(f1: SpectralFn, f2: SpectralFn, t1: f64, t2: f64, y: f64) -> f64 {
    let pair = TracePairLaw::from_ratio(y);
    match (f1, f2) {
        (SpectralFn::Identity, SpectralFn::Identity) => pair.cov_f1_f1(t1, t2),
        (SpectralFn::Square, SpectralFn::Square) => pair.cov_f2_f2(t1, t2),
        (SpectralFn::Identity, SpectralFn::Square) => pair.cov_f1_f2(t1, t2),
        (SpectralFn::Square, SpectralFn::Identity) => pair.cov_f2_f1(t1, t2),
        (SpectralFn::Log, SpectralFn::Log) => {
            -2.0 * (1.0 - y / t1.max(t2)).ln()
        }
        _ => unreachable!(),
    }
}

#[test]
fn means_agree_across_routes() {
    let h = SpectralMeasure::identity();
    let cfg = ContourConfig::circle_default();
    for &t in &[0.5, 0.75, 1.0] {
        for &y in &[0.1, 0.25, 0.4] {
            for &f in &[SpectralFn::Identity, SpectralFn::Square, SpectralFn::Log] {
                let closed = closed_mean(f, t, y);
                let circ = circle_mean(f, t, y, &cfg).unwrap();
                let rect = lss_mean_auto(f, t, y, &h).unwrap();
                assert!(
                    (circ - closed).abs() < 1e-4,
                    "circle vs closed: f={f:?}, t={t}, y={y}: {circ} vs {closed}"
                );
                assert!(
                    (rect - closed).abs() < 1e-4,
                    "rect vs closed: f={f:?}, t={t}, y={y}: {rect} vs {closed}"
                );
            }
        }
    }
}

#[test]
fn diagonal_covariances_agree_across_routes() {
    let h = SpectralMeasure::identity();
    let cfg = ContourConfig::circle_default();
    for &t in &[0.5, 0.75, 1.0] {
        for &y in &[0.1, 0.25, 0.4] {
            for &f in &[SpectralFn::Identity, SpectralFn::Square, SpectralFn::Log] {
                let closed = closed_cov(f, f, t, t, y);
                let circ = circle_cov(f, f, t, t, y, SymmetryClass::Real, &cfg).unwrap();
                let rect = lss_cov_auto(f, f, t, t, y, &h, SymmetryClass::Real).unwrap();
                assert!(
                    (circ - closed).abs() < 1e-3,
                    "circle vs closed: f={f:?}, t={t}, y={y}: {circ} vs {closed}"
                );
                assert!(
                    (rect - closed).abs() < 1e-3,
                    "rect vs closed: f={f:?}, t={t}, y={y}: {rect} vs {closed}"
                );
            }
        }
    }
}

#[test]
fn off_diagonal_circle_covariances_match_closed_forms() {
    let cfg = ContourConfig::circle_default();
    let y = 0.2;
    for &(t1, t2) in &[(1.0, 0.5), (0.5, 1.0), (0.9, 0.6)] {
        for &(f1, f2) in &[
            (SpectralFn::Identity, SpectralFn::Identity),
            (SpectralFn::Square, SpectralFn::Square),
            (SpectralFn::Identity, SpectralFn::Square),
            (SpectralFn::Square, SpectralFn::Identity),
            (SpectralFn::Log, SpectralFn::Log),
        ] {
            let closed = closed_cov(f1, f2, t1, t2, y);
            let circ = circle_cov(f1, f2, t1, t2, y, SymmetryClass::Real, &cfg).unwrap();
            assert!(
                (circ - closed).abs() < 1e-3,
                "f1={f1:?}, f2={f2:?}, t1={t1}, t2={t2}: {circ} vs {closed}"
            );
        }
    }
}

#[test]
fn complex_class_halves_the_circle_covariance() {
    let cfg = ContourConfig::circle_default();
    let real = circle_cov(
        SpectralFn::Square,
        SpectralFn::Square,
        1.0,
        0.7,
        0.3,
        SymmetryClass::Real,
        &cfg,
    )
    .unwrap();
    let complex = circle_cov(
        SpectralFn::Square,
        SpectralFn::Square,
        1.0,
        0.7,
        0.3,
        SymmetryClass::Complex,
        &cfg,
    )
    .unwrap();
    assert!((real - 2.0 * complex).abs() < 1e-12);
}

#[test]
fn logdet_law_matches_circle_route() {
    // example values of the log-det law against the quadrature
    let cfg = ContourConfig::circle_default();
    let dims = Dimensions::new(200, 100).unwrap();
    let grid = TimeGrid::canonical(200, 0.6).unwrap();
    let law = law_logdet(dims, grid, SymmetryClass::Real).unwrap();
    let y = 0.5;
    for &t in &[0.7, 1.0] {
        let m = circle_mean(SpectralFn::Log, t, y, &cfg).unwrap();
        assert!((m - law.mean(t)).abs() < 1e-6, "t={t}: {m} vs {}", law.mean(t));
    }
    let c = circle_cov(
        SpectralFn::Log,
        SpectralFn::Log,
        0.7,
        1.0,
        y,
        SymmetryClass::Real,
        &cfg,
    )
    .unwrap();
    assert!((c - law.cov(0.7, 1.0)).abs() < 1e-3, "{c} vs {}", law.cov(0.7, 1.0));
}
