//! ε-dependent partition of packet indices into I₁ (little energy in S),
//! I₂ (little energy off S) and the residual I₃, with residual counts.
//!
//! log is base 2 throughout; L = log(1/δ).

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::WellShapedDomain;
use crate::gevrey::pow2;
use crate::sectorization::{arc_count, frequency_step, PacketIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    I1,
    I2,
    I3,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::I1 => "I1",
            Part::I2 => "I2",
            Part::I3 => "I3",
        })
    }
}

/// δ = ε²/(C·R³), clipped into (0, 1/2).
pub fn choose_delta(epsilon: f64, big_r: f64, c_cal: f64) -> f64 {
    let d = epsilon * epsilon / (c_cal * big_r * big_r * big_r);
    d.clamp(f64::MIN_POSITIVE, 0.5)
}

/// Parameters fixing one partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub epsilon: f64,
    pub j_max: u32,
    pub s: f64,
    pub c_cal: f64,
    pub a_margin: f64,
    pub c_bdry: f64,
    pub delta: f64,
}

impl PartitionParams {
    pub fn new(epsilon: f64, j_max: u32, s: f64, c_cal: f64, a_margin: f64, c_bdry: f64) -> Self {
        let delta = choose_delta(epsilon, pow2(j_max as i32), c_cal);
        Self {
            epsilon,
            j_max,
            s,
            c_cal,
            a_margin,
            c_bdry,
            delta,
        }
    }

    pub fn big_r(&self) -> f64 {
        pow2(self.j_max as i32)
    }

    /// L = log₂(1/δ).
    pub fn log_inv_delta(&self) -> f64 {
        -self.delta.log2()
    }

    /// Interior margin A·2^{−j}·L^s.
    pub fn interior_margin(&self, j: i32) -> f64 {
        self.a_margin * pow2(-j) * self.log_inv_delta().powf(self.s)
    }

    /// Half-width ⌊C·L^s⌋ of the residual boundary box in m.
    pub fn boundary_box(&self) -> i64 {
        (self.c_bdry * self.log_inv_delta().powf(self.s)).floor() as i64
    }

    /// Boundary scales −L < j ≤ −1 carrying residual packets.
    pub fn boundary_scales(&self) -> Vec<i32> {
        let l = self.log_inv_delta();
        (1..).map(|a: i32| -a).take_while(|&j| (j as f64) > -l).collect()
    }
}

/// Interior rule: far from S → I₁, deep inside S → I₂, otherwise I₃.
pub fn classify_interior(p: &PartitionParams, s_dom: &WellShapedDomain, j: i32, m: [i64; 2]) -> Part {
    let f = frequency_step() * pow2(-j);
    let w = [f * m[0] as f64, f * m[1] as f64];
    let margin = p.interior_margin(j);
    if s_dom.distance_to_set(w) >= margin {
        Part::I1
    } else if s_dom.depth(w) >= margin {
        Part::I2
    } else {
        Part::I3
    }
}

/// Boundary rule: deep ladder or large |m₁|, |m₂| → I₁, otherwise I₃.
pub fn classify_boundary(p: &PartitionParams, j: i32, m: [i64; 2]) -> Part {
    let l = p.log_inv_delta();
    let b = p.c_bdry * l.powf(p.s);
    if (j as f64) <= -l || (m[0].abs() as f64) > b || (m[1].abs() as f64) > b {
        Part::I1
    } else {
        Part::I3
    }
}

pub fn classify(p: &PartitionParams, s_dom: &WellShapedDomain, nu: &PacketIndex) -> Part {
    if nu.j >= 0 {
        classify_interior(p, s_dom, nu.j, nu.m)
    } else {
        classify_boundary(p, nu.j, nu.m)
    }
}

/// Closed-form #I₃^bdry = #{−L < j < 0}·R·(2⌊C L^s⌋ + 1)².
pub fn boundary_residual_count(p: &PartitionParams) -> u64 {
    let side = 2 * p.boundary_box() as u64 + 1;
    p.boundary_scales().len() as u64 * arc_count(p.j_max, -1) as u64 * side * side
}

/// Lattice box |m_i| ≤ M containing every m with c*2^{−j}m within the
/// interior margin of S.
pub fn interior_m_box(p: &PartitionParams, s_dom: &WellShapedDomain, j: i32) -> i64 {
    let reach = s_dom.max_norm() + p.interior_margin(j);
    (reach / (frequency_step() * pow2(-j))).ceil() as i64 + 1
}

/// Residual m's for one interior sector at scale j (identical for all k).
pub fn interior_residual_lattice(p: &PartitionParams, s_dom: &WellShapedDomain, j: i32) -> Vec<[i64; 2]> {
    let mb = interior_m_box(p, s_dom, j);
    let mut out = Vec::new();
    for a in -mb..=mb {
        for b in -mb..=mb {
            if classify_interior(p, s_dom, j, [a, b]) == Part::I3 {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Per-scale interior residual counts (j, m(j), count per sector).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub j: i32,
    pub sectors: u32,
    pub per_sector: u64,
}

pub fn interior_residual_counts(p: &PartitionParams, s_dom: &WellShapedDomain) -> Vec<ScaleCount> {
    (0..=p.j_max as i32)
        .map(|j| ScaleCount {
            j,
            sectors: arc_count(p.j_max, j),
            per_sector: interior_residual_lattice(p, s_dom, j).len() as u64,
        })
        .collect()
}

/// Second route: lattice points of ℤ² within A·L^s/c* of the boundary of
/// the dilated domain c*^{−1}2^jS, summed with multiplicity m(j).
pub fn interior_residual_count_by_dilation(p: &PartitionParams, s_dom: &WellShapedDomain) -> Option<u64> {
    let cs = frequency_step();
    let t = p.a_margin * p.log_inv_delta().powf(p.s) / cs;
    let mut total = 0u64;
    for j in 0..=p.j_max as i32 {
        let d = s_dom.dilate(pow2(j) / cs).ok()?;
        total += arc_count(p.j_max, j) as u64 * d.count_lattice_near_boundary(t).count;
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualCount {
    pub interior: u64,
    pub boundary: u64,
    pub total: u64,
}

pub fn residual_count(p: &PartitionParams, s_dom: &WellShapedDomain) -> ResidualCount {
    let interior: u64 = interior_residual_counts(p, s_dom)
        .iter()
        .map(|c| c.sectors as u64 * c.per_sector)
        .sum();
    let boundary = boundary_residual_count(p);
    ResidualCount {
        interior,
        boundary,
        total: interior + boundary,
    }
}

/// R·log₂(R/ε)^{1+2s}, the shape of the residual budget.
pub fn budget_shape(big_r: f64, epsilon: f64, s: f64) -> f64 {
    big_r * (big_r / epsilon).log2().powf(1.0 + 2.0 * s)
}

/// max{log R·L^s, L^{2s}}·R, the interior lattice-count shape.
pub fn interior_count_shape(big_r: f64, delta: f64, s: f64) -> f64 {
    let l = -delta.log2();
    big_r * (big_r.log2() * l.powf(s)).max(l.powf(2.0 * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> WellShapedDomain {
        WellShapedDomain::disk([0.0, 0.0], 0.5).unwrap()
    }

    #[test]
    fn delta_formula() {
        let d = choose_delta(0.1, 8.0, 1.0);
        assert!((d - 0.01 / 512.0).abs() < 1e-18);
        assert!((choose_delta(0.1, 16.0, 1.0) * 8.0 - d).abs() < 1e-18);
        let tiny = choose_delta(0.4999, 2.0, 1e9);
        assert!(tiny > 0.0 && tiny < 0.5);
        assert_eq!(choose_delta(0.49, 2.0, 1e-6), 0.5);
    }

    #[test]
    fn boundary_rules() {
        let p = PartitionParams {
            epsilon: 0.1,
            j_max: 2,
            s: 2.0,
            c_cal: 1.0,
            a_margin: 1.0,
            c_bdry: 1.0,
            delta: 1e-3,
        };
        assert_eq!(classify_boundary(&p, -1, [0, 0]), Part::I3);
        assert_eq!(classify_boundary(&p, -10, [0, 0]), Part::I1);
        assert_eq!(classify_boundary(&p, -1, [10_000, 0]), Part::I1);
        let half = PartitionParams { delta: 0.5, ..p.clone() };
        assert!(half.boundary_scales().is_empty());
        assert_eq!(boundary_residual_count(&half), 0);
        // L = log2(1000) ≈ 9.97 → j = −1..−9, box ⌊99.3⌋ = 99
        assert_eq!(p.boundary_scales().len(), 9);
        assert_eq!(boundary_residual_count(&p), 9 * 4 * 199 * 199);
    }

    #[test]
    fn interior_extremes() {
        let p = PartitionParams::new(0.25, 2, 1.5, 1.0, 1.0, 1.0);
        let s = disk();
        assert_eq!(classify_interior(&p, &s, 0, [100_000, 0]), Part::I1);
        assert_eq!(classify_interior(&p, &s, 0, [0, 0]), Part::I3);
        // tiny margin: the centroid is deep inside
        let q = PartitionParams { a_margin: 1e-4, ..p };
        assert_eq!(classify_interior(&q, &s, 2, [0, 0]), Part::I2);
    }

    #[test]
    fn two_counting_routes_agree() {
        let s = disk();
        let p = PartitionParams {
            epsilon: 0.25,
            j_max: 2,
            s: 1.5,
            c_cal: 1.0,
            a_margin: 0.1,
            c_bdry: 1.0,
            delta: 1e-3,
        };
        let direct = residual_count(&p, &s).interior;
        let lattice = interior_residual_count_by_dilation(&p, &s).unwrap();
        assert_eq!(direct, lattice);
        let sq = WellShapedDomain::polygon(alloc::vec![[-0.3, -0.3], [0.3, -0.3], [0.3, 0.3], [-0.3, 0.3]]).unwrap();
        assert_eq!(residual_count(&p, &sq).interior, interior_residual_count_by_dilation(&p, &sq).unwrap());
    }

    #[test]
    fn partition_is_exclusive_and_exhaustive() {
        let s = disk();
        let p = PartitionParams::new(0.2, 2, 1.5, 1.0, 0.05, 0.5);
        for j in -12..=2 {
            for a in -30..=30 {
                for b in -30..=30 {
                    let nu = PacketIndex::new(j, 1, [a, b]);
                    let part = classify(&p, &s, &nu);
                    let w = [frequency_step() * pow2(-j) * a as f64, frequency_step() * pow2(-j) * b as f64];
                    let hits = if j >= 0 {
                        let m = p.interior_margin(j);
                        let i1 = s.distance_to_set(w) >= m;
                        let i2 = s.depth(w) >= m;
                        assert!(!(i1 && i2));
                        [i1, i2, !i1 && !i2]
                    } else {
                        let i1 = classify_boundary(&p, j, [a, b]) == Part::I1;
                        [i1, false, !i1]
                    };
                    assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
                    let expect = [Part::I1, Part::I2, Part::I3][hits.iter().position(|&h| h).unwrap()];
                    assert_eq!(part, expect);
                }
            }
        }
    }

    #[test]
    fn larger_s_enlarges_residual() {
        let s = disk();
        let a = residual_count(&PartitionParams::new(0.25, 2, 1.5, 1.0, 0.5, 0.5), &s);
        let b = residual_count(&PartitionParams::new(0.25, 2, 2.0, 1.0, 0.5, 0.5), &s);
        assert!(b.total > a.total);
        assert!(b.interior > a.interior && b.boundary > a.boundary);
    }
}
