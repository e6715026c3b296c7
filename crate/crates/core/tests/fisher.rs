mod common;

use std::f64::consts::PI;

use isac_pcrb::fisher::*;
use isac_pcrb::geometry::{steering_rx, steering_tx, UpaGeometry};
use isac_pcrb::linalg::{fro, lambda_min};
use isac_pcrb::{CMat, Complex64};
use proptest::prelude::*;
use rand::Rng;

const REFERENCE: [(f64, f64, f64); 2] = [(-1.2, 300.0, 0.54), (-0.6, 80.0, 0.46)];

/// Prior-averaged matrices from finite-difference steering derivatives and
/// the reference density on a fixed dense grid.
fn reference_matrices(geom: &UpaGeometry, angles: &isac_pcrb::geometry::SceneAngles, nodes: usize) -> (CMat, CMat, CMat) {
    let r = common::RefMixture::new(&REFERENCE);
    let nt = geom.n_tx();
    let nr = geom.n_rx() as f64;
    let (mut a1, mut a2, mut a3) = (CMat::zeros(nt, nt), CMat::zeros(nt, nt), CMat::zeros(nt, nt));
    let h = 2.0 * PI / nodes as f64;
    for k in 0..nodes {
        let t = -PI + h * k as f64;
        let w = r.pdf(t) * h;
        if w < 1e-300 {
            continue;
        }
        let a = steering_tx(geom, angles, t);
        let ad = common::fd_steering(|x| steering_tx(geom, angles, x), t, 1e-6);
        let bd = common::fd_steering(|x| steering_rx(geom, angles, x), t, 1e-6);
        let aa = &a * a.adjoint();
        a1 += (aa * Complex64::from(bd.norm_squared()) + &ad * ad.adjoint() * Complex64::from(nr)) * Complex64::from(w);
        a2 += &ad * a.adjoint() * Complex64::from(nr * w);
        a3 += &a * a.adjoint() * Complex64::from(nr * w);
    }
    (a1, a2, a3)
}

#[test]
fn assembled_matrices_match_reference_quadrature() {
    let (_, sc) = common::scenario();
    let (a1, a2, a3) = reference_matrices(&sc.geometry, &sc.angles, 1 << 15);
    let m = &sc.matrices;
    assert!(fro(&(&m.a1 - &a1)) <= 1e-6 * fro(&a1), "A1");
    assert!(fro(&(&m.a2 - &a2)) <= 1e-6 * fro(&a2), "A2");
    assert!(fro(&(&m.a3 - &a3)) <= 1e-6 * fro(&a3), "A3");
}

#[test]
fn matrix_identities() {
    let (_, sc) = common::scenario();
    let m = &sc.matrices;
    let nn = (sc.geometry.n_tx() * sc.geometry.n_rx()) as f64;
    assert!((m.a3.trace().re - nn).abs() <= 1e-8 * nn);
    assert!(m.a2.trace().norm() <= 1e-8 * nn);
    for a in [&m.a1, &m.a3] {
        assert!(fro(&(a - a.adjoint())) <= 1e-12 * fro(a));
        assert!(lambda_min(a) >= -1e-10 * fro(a));
    }
}

#[test]
fn point_mass_fim_matches_slepian_bangs() {
    let (_, sc) = common::scenario();
    let mut rng = common::rng(3);
    let symbols = 6;
    for _ in 0..10 {
        let theta = rng.random_range(-PI..PI);
        let alpha = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let noise = rng.random_range(0.5..2.0);
        let x = CMat::from_fn(sc.geometry.n_tx(), symbols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let r = &x * x.adjoint() / Complex64::from(symbols as f64);
        let sb = common::slepian_bangs(&sc.geometry, &sc.angles, theta, alpha, &x, noise);
        let link = SensingLinkBudget::new(alpha, symbols, noise).unwrap();
        let f = SensingMatrices::point_mass(&sc.geometry, &sc.angles, theta).fim_blocks(&link, &r).posterior_fim(0.0);
        let scale = sb.norm();
        assert!((f - sb).norm() <= 1e-6 * scale, "θ={theta}\n{f}\nvs\n{sb}");
    }
}

#[test]
fn bound_decreases_with_power() {
    let (_, sc) = common::scenario();
    let mut rng = common::rng(5);
    let r = common::random_psd(sc.geometry.n_tx(), 3, &mut rng);
    let mut last = f64::INFINITY;
    for s in [1e-4, 1e-2, 1.0, 1e2] {
        let b = sc.matrices.pcrb_periodic(&sc.link, &(&r * Complex64::from(s))).unwrap();
        assert!(b < last && b > 0.0 && b < 2.0);
        last = b;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_pcrb_equals_explicit_inversion(seed in any::<u64>()) {
        let (_, sc) = common::scenario();
        let mut rng = common::rng(seed);
        let rank = rng.random_range(1..=16);
        let r = common::random_psd(16, rank, &mut rng) * Complex64::from(10f64.powf(rng.random_range(-4.0..0.0)));
        let alpha = Complex64::from_polar(10f64.powf(rng.random_range(-7.0..-5.0)), rng.random_range(-PI..PI));
        let link = SensingLinkBudget::new(alpha, rng.random_range(1..50), 10f64.powf(rng.random_range(-13.0..-11.0))).unwrap();
        let closed = sc.matrices.pcrb_periodic(&link, &r).unwrap();
        let fim = sc.matrices.fim_blocks(&link, &r).posterior_fim(sc.matrices.prior_fisher);
        let inv = fim.try_inverse().unwrap();
        let explicit = common::periodic_bound(inv[(0, 0)]);
        prop_assert!((closed - explicit).abs() <= 1e-10 * explicit, "{closed} vs {explicit}");
    }

    #[test]
    fn sensing_gain_is_concave_and_homogeneous(seed in any::<u64>()) {
        let (_, sc) = common::scenario();
        let mut rng = common::rng(seed);
        let r1 = common::random_psd(16, 2, &mut rng);
        let r2 = common::random_psd(16, 2, &mut rng);
        let g = |r: &CMat| sc.matrices.sensing_gain(r).unwrap();
        let mid = (&r1 + &r2) * Complex64::from(0.5);
        prop_assert!(g(&mid) >= 0.5 * (g(&r1) + g(&r2)) * (1.0 - 1e-10));
        prop_assert!((g(&(&r1 * Complex64::from(3.0))) - 3.0 * g(&r1)).abs() <= 1e-10 * g(&r1));
        prop_assert!(g(&r1) <= sc.matrices.traces(&r1).0 * (1.0 + 1e-12));
    }
}
