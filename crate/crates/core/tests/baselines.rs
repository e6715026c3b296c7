mod common;

use std::time::Instant;

use isac_pcrb::baselines::*;
use isac_pcrb::beamopt::{optimize, rate};

#[test]
fn sensing_oriented_rate_anchor() {
    let (cfg, sc) = common::scenario();
    let start = Instant::now();
    let b = sensing_oriented(&sc.instance(1.0).unwrap(), &sc.tolerances).unwrap();
    assert!(start.elapsed().as_secs_f64() <= 10.0);
    assert!((1.911..=1.950).contains(&b.rate), "{}", b.rate);
    assert!(b.rate < 0.25 * cfg.mrt_capacity());
    // one beam carrying the whole budget, no communication beam
    assert_eq!(b.s.len(), 1);
    assert_eq!(b.w.norm(), 0.0);
    assert!((b.total_power() - sc.power).abs() <= 1e-6 * sc.power);
    let inst = sc.instance(1.0).unwrap();
    assert!((rate(&inst.channel, &b.s[0], &[], inst.noise) - b.rate).abs() < 1e-12);
}

#[test]
fn sensing_oriented_ignores_rate_target() {
    let (cfg, sc) = common::scenario();
    let g = cfg.rate_grid();
    let a = sensing_oriented(&sc.instance(g[0]).unwrap(), &sc.tolerances).unwrap();
    let b = sensing_oriented(&sc.instance(g[g.len() - 1]).unwrap(), &sc.tolerances).unwrap();
    assert!((a.pcrb - b.pcrb).abs() <= 1e-9 * a.pcrb);
    assert!((a.rate - b.rate).abs() <= 1e-6);
}

#[test]
fn sensing_oriented_lower_bounds_every_scheme() {
    let (cfg, sc) = common::scenario();
    let g = cfg.rate_grid();
    let b1 = sensing_oriented(&sc.instance(g[0]).unwrap(), &sc.tolerances).unwrap();
    for r in [g[0], g[g.len() / 2], g[g.len() - 1]] {
        let p = optimize(&sc.instance(r).unwrap(), &sc.tolerances).unwrap();
        assert!(b1.pcrb <= p.pcrb + 1e-8, "R̄={r}");
    }
}

#[test]
fn most_probable_angle_is_the_sharp_mode() {
    let (_, sc) = common::scenario();
    let theta = sc.prior.mode(MODE_GRID);
    assert!((theta + 1.2).abs() < 1e-3, "{theta}");
}

#[test]
fn most_probable_angle_is_scored_under_the_prior() {
    let (cfg, sc) = common::scenario();
    let g = cfg.rate_grid();
    for r in [g[0], g[g.len() / 2]] {
        let inst = sc.instance(r).unwrap();
        let b3 = most_probable_angle(&inst, &sc.geometry, &sc.angles, &sc.prior, &sc.tolerances).unwrap();
        let cov = b3.covariance();
        let expect = sc.matrices.pcrb_periodic(&sc.link, &cov).unwrap();
        assert!((b3.pcrb - expect).abs() <= 1e-12 * expect);
        assert!(b3.rate >= r - 1e-6);
        assert!(b3.total_power() <= sc.power * (1.0 + 1e-9));
        let p = optimize(&inst, &sc.tolerances).unwrap();
        assert!(p.pcrb <= b3.pcrb + 1e-8, "R̄={r}: {} vs {}", p.pcrb, b3.pcrb);
    }
}

#[test]
fn dual_functional_is_feasible_and_never_better() {
    let (cfg, sc) = common::scenario();
    let g = cfg.rate_grid();
    for r in [g[0], g[g.len() / 2], g[g.len() - 1]] {
        let inst = sc.instance(r).unwrap();
        let b2 = dual_functional(&inst, &sc.tolerances, 7).unwrap();
        assert!(b2.s.is_empty());
        assert!(b2.rate >= r - 1e-6);
        assert!(b2.total_power() <= sc.power * (1.0 + 1e-9));
        // randomization can only lose against the restricted relaxation
        assert!(b2.sensing_gain <= b2.relaxed_objective * (1.0 + 1e-8));
        let p = optimize(&inst, &sc.tolerances).unwrap();
        assert!(p.pcrb <= b2.pcrb + 1e-8, "R̄={r}");
    }
}

#[test]
fn dual_functional_matches_proposed_at_capacity() {
    let (_, sc) = common::scenario();
    let cap = sc.instance(0.0).unwrap().mrt_capacity();
    let inst = sc.instance(cap).unwrap();
    let b2 = dual_functional(&inst, &sc.tolerances, 1).unwrap();
    let p = optimize(&inst, &sc.tolerances).unwrap();
    assert!((b2.pcrb - p.pcrb).abs() <= 1e-9 * p.pcrb);
    // the beam is the maximum-ratio one
    let h = &inst.channel;
    let overlap = h.dotc(&b2.w).norm() / (h.norm() * b2.w.norm());
    assert!((overlap - 1.0).abs() < 1e-9);
    assert!(h.dotc(&b2.w).im.abs() < 1e-9 * h.norm() * b2.w.norm());
}

#[test]
fn dual_functional_is_reproducible() {
    let (cfg, sc) = common::scenario();
    let g = cfg.rate_grid();
    let inst = sc.instance(g[g.len() / 2]).unwrap();
    let a = dual_functional(&inst, &sc.tolerances, 11).unwrap();
    let b = dual_functional(&inst, &sc.tolerances, 11).unwrap();
    assert_eq!(a.pcrb.to_bits(), b.pcrb.to_bits());
    assert_eq!(a.w, b.w);
}
