use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use scissorkin::model::{
    build_unit, chord_width, design_report, four_bar, link_lengths, solve_angle_from_width, stretched_length,
    DesignParams,
};

proptest! {
    #[test]
    fn width_and_angle_are_inverse(theta in 1e-3..(PI - 1e-3), rod in 0.1..20.0f64) {
        let w = chord_width(rod, theta);
        let back = solve_angle_from_width(rod, w).unwrap();
        prop_assert!((back - theta).abs() < 1e-10);
    }

    #[test]
    fn halving_chain(h in 0.5..20.0f64, theta in 0.1..3.0f64) {
        let l = link_lengths(h, theta).unwrap();
        prop_assert_eq!(l.l(7), l.l(1) / 2.0);
        prop_assert_eq!(l.l(11), l.l(1) / 4.0);
    }

    #[test]
    fn report_ratios_are_exact_quotients(units in 3usize..40, d in 5.0..60.0f64) {
        let p = DesignParams::new(d, units, 0.2 * d, 80f64.to_radians(), 12.54f64.to_radians()).unwrap();
        let r = design_report(&p).unwrap();
        prop_assert_eq!(r.storage_ratio_diameter, r.deployed_diameter_m / r.stowed_diameter_m);
        prop_assert_eq!(r.storage_ratio_height, r.deployed_height_m / r.stowed_height_m);
        prop_assert_eq!(r.storage_ratio_volume, r.deployed_volume_m3 / r.stowed_volume_m3);
    }
}

#[test]
fn polygon_perimeter_grows_toward_circle() {
    let d = 25.0;
    let mut prev = 0.0;
    for n in 3..=64 {
        let p = stretched_length(d, n).unwrap() * n as f64;
        assert!(p > prev && p < PI * d);
        prev = p;
    }
}

#[test]
fn link_lengths_hold_at_random_angles() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let models = [
        build_unit(&DesignParams::reference(12).unwrap()).unwrap(),
        build_unit(&DesignParams::reference(18).unwrap()).unwrap(),
        build_unit(&DesignParams::reference(24).unwrap()).unwrap(),
        four_bar(4.0, 1.0, 3.5, 3.0).unwrap(),
    ];
    for m in &models {
        let (lo, hi) = m.working_range.unwrap_or((0.05, PI - 0.05));
        for _ in 0..100 {
            let th = rng.random_range(lo..=hi);
            let p = m.node_positions(th).unwrap().positions;
            for l in &m.links {
                let d = (p[l.ends[1]] - p[l.ends[0]]).norm();
                assert!((d - l.length).abs() < 1e-9, "{} at {th}", l.id);
            }
            assert!(m.closure_error(&p) < 1e-9);
        }
    }
}

#[test]
fn positions_are_smooth_in_theta() {
    // third differences stay bounded, so the second derivative is continuous
    let m = build_unit(&DesignParams::reference(12).unwrap()).unwrap();
    let h = 1e-3;
    let (lo, hi) = m.working_range.unwrap();
    let mut th = lo + 2.0 * h;
    while th < hi - 2.0 * h {
        let p: Vec<_> = (-2..=1).map(|k| m.node_positions(th + k as f64 * h).unwrap().positions).collect();
        for i in 0..p[0].len() {
            let d3 = (p[3][i] - 3.0 * p[2][i] + 3.0 * p[1][i] - p[0][i]).norm() / h.powi(3);
            assert!(d3 < 1e3, "node {i} at {th}: {d3}");
        }
        th += 0.05;
    }
}

#[test]
fn each_reference_design_closes_its_ring() {
    for units in [12, 18, 24] {
        let p = DesignParams::reference(units).unwrap();
        let m = build_unit(&p).unwrap();
        let gap = scissorkin::sim::interface_gap(&m, p.theta_deployed, units).unwrap();
        assert!(gap < 1e-12);
        let s = stretched_length(p.diameter, units).unwrap();
        let r = design_report(&p).unwrap();
        assert!(((r.unit_span_m - s) / s).abs() < 2e-2, "{units}: {} vs {s}", r.unit_span_m);
    }
}
