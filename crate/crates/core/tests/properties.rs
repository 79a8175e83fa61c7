//! Property tests across the public core API.

use std::f64::consts::PI;

use plunge_core::bessel::{bessel_j, bessel_j_sequence};
use plunge_core::concentration::{
    classify, interior_residual_count_by_dilation, residual_count, Part, PartitionParams,
};
use plunge_core::geometry::WellShapedDomain;
use plunge_core::gevrey::{AngularCutoffs, GevreyMother, RadialCutoffs, Variant};
use plunge_core::sectorization::{arc_count, locate, sectors, PacketIndex, Sector};
use plunge_core::wavepackets::PacketFamily;
use proptest::prelude::*;

fn gevrey_index() -> impl Strategy<Value = f64> {
    1.05f64..4.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radial_squares_sum_to_one(jm in 1u32..6, s in gevrey_index(), t in 0.0f64..1.0) {
        let c = RadialCutoffs::new(jm, s).unwrap();
        let r = t * c.big_r() * (1.0 - 1e-12);
        let sum: f64 = c.active(r).iter().map(|(_, v)| v * v).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angular_squares_sum_to_one(jm in 1u32..6, s in gevrey_index(), theta in -10.0f64..10.0, pick in 0u32..6) {
        let j = (pick % (jm + 1)) as i32;
        let a = AngularCutoffs::new(jm, j, s).unwrap();
        let sum: f64 = (1..=a.m).map(|k| a.eta_unchecked(k, theta).powi(2)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mothers_stay_in_unit_interval(s in gevrey_index(), x in -1.0f64..2.0) {
        for v in [Variant::Radial, Variant::Angular] {
            let u = GevreyMother::new(s, v).unwrap();
            let y = u.eval(x);
            prop_assert!((0.0..=1.0).contains(&y));
            let (a, b) = u.support();
            if x <= a || x >= b {
                prop_assert_eq!(y, 0.0);
            }
        }
    }

    #[test]
    fn located_sector_contains_the_point(jm in 1u32..6, t in 0.0f64..0.999, theta in 0.0f64..6.2) {
        let big_r = 2f64.powi(jm as i32);
        let p = [t * big_r * theta.cos(), t * big_r * theta.sin()];
        if let Some((j, k)) = locate(jm, -30, p) {
            prop_assert!(Sector::new(jm, j, k).contains(p));
            prop_assert!(Sector::new(jm, j, k).star_contains(p));
            prop_assert!(k >= 1 && k <= arc_count(jm, j));
        }
    }

    #[test]
    fn bessel_three_term_recurrence(n in 1i64..40, t in 0.1f64..60.0) {
        let lhs = bessel_j(n - 1, t) + bessel_j(n + 1, t);
        let rhs = 2.0 * n as f64 / t * bessel_j(n, t);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn bessel_sequence_agrees_with_pointwise(t in 0.0f64..40.0) {
        let seq = bessel_j_sequence(30, t);
        for (n, v) in seq.iter().enumerate() {
            prop_assert!((v - bessel_j(n as i64, t)).abs() < 1e-13);
        }
    }

    #[test]
    fn disk_dilation_scales_area(r in 0.05f64..0.5, a in 0.1f64..20.0) {
        let d = WellShapedDomain::disk([0.1, -0.2], r).unwrap();
        let e = d.dilate(a).unwrap();
        prop_assert!((e.area() - a * a * d.area()).abs() < 1e-9 * e.area());
    }

    #[test]
    fn partition_parts_are_consistent(eps in 0.02f64..0.45, j in -6i32..3, m1 in -30i64..30, m2 in -30i64..30) {
        let s = WellShapedDomain::disk([0.0, 0.0], 0.5).unwrap();
        let p = PartitionParams::new(eps, 2, 2.0, 1.0, 2.0, 2.0);
        let part = classify(&p, &s, &PacketIndex::new(j, 1, [m1, m2]));
        if j < 0 {
            // boundary packets never fall in I₂
            prop_assert!(part != Part::I2);
        }
    }
}

#[test]
fn sector_areas_tile_the_resolved_disk() {
    for jm in 1..5u32 {
        let j_min = -20;
        let total: f64 = sectors(jm, j_min).iter().map(|s| s.area()).sum();
        let big_r = 2f64.powi(jm as i32);
        let rim = big_r - 2f64.powi(j_min - 1);
        assert!((total - PI * rim * rim).abs() < 1e-9 * total, "jm = {jm}");
    }
}

#[test]
fn interior_count_matches_dilation_route() {
    let s = WellShapedDomain::disk([0.0, 0.0], 0.5).unwrap();
    for (jm, eps) in [(2u32, 0.25), (3, 0.1)] {
        let p = PartitionParams::new(eps, jm, 2.0, 1.0, 2.0, 2.0);
        let direct = residual_count(&p, &s).interior;
        let dil = interior_residual_count_by_dilation(&p, &s).unwrap();
        assert_eq!(direct, dil, "R = {}", 1 << jm);
    }
}

#[test]
fn random_packets_have_unit_norm() {
    let fam = PacketFamily::new(3, 1.5, -5).unwrap();
    for (j, k, m) in [(3, 1, [0, 0]), (1, 3, [4, -7]), (-1, 5, [2, 2]), (-5, 7, [-3, 11])] {
        let p = fam.packet(PacketIndex::new(j, k, m)).unwrap();
        assert!((p.norm_squared(512) - 1.0).abs() < 1e-9, "{j} {k} {m:?}");
    }
}
