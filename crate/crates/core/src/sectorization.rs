//! Whitney-type decomposition of D(R) into radial–angular sectors and the
//! packet index set I = {(j, k, m)}.
//!
//! Scale j ≥ 0 sectors are interior; j < 0 sectors form the boundary ladder
//! accumulating at |x| = R.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::gevrey::pow2;
use crate::math::wrap_2pi;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SectorError {
    NonDyadicRadius(u64),
    NonNegativeJmin(i32),
}

impl fmt::Display for SectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorError::NonDyadicRadius(r) => write!(f, "R = {r} is not a power of two >= 2"),
            SectorError::NonNegativeJmin(j) => write!(f, "j_min must be negative, got {j}"),
        }
    }
}

/// j_max with R = 2^{j_max}, for dyadic R ≥ 2.
pub fn j_max_of(big_r: u64) -> Result<u32, SectorError> {
    if big_r < 2 || !big_r.is_power_of_two() {
        return Err(SectorError::NonDyadicRadius(big_r));
    }
    Ok(big_r.trailing_zeros())
}

/// Number of arcs m(j): 2^{j_max − j} for j ≥ 0 and 2^{j_max} for j < 0.
pub fn arc_count(j_max: u32, j: i32) -> u32 {
    if j >= 0 {
        1u32 << (j_max as i32 - j) as u32
    } else {
        1u32 << j_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    Interior,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketIndex {
    pub j: i32,
    pub k: u32,
    pub m: [i64; 2],
}

impl PacketIndex {
    pub fn new(j: i32, k: u32, m: [i64; 2]) -> Self {
        Self { j, k, m }
    }

    pub fn classify(&self) -> PacketKind {
        if self.j >= 0 {
            PacketKind::Interior
        } else {
            PacketKind::Boundary
        }
    }
}

/// A sector S_{j,k} together with its enlargement S*_{j,k}.
///
/// Angles are stored unwrapped (θ_lo < θ_hi, possibly outside [0, 2π)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub j: i32,
    pub k: u32,
    pub r_inner: f64,
    pub r_outer: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub star_r_inner: f64,
    pub star_r_outer: f64,
    pub star_theta_lo: f64,
    pub star_theta_hi: f64,
}

impl Sector {
    pub fn new(j_max: u32, j: i32, k: u32) -> Self {
        let big_r = pow2(j_max as i32);
        let m = arc_count(j_max, j);
        let d = 2.0 * PI / m as f64;
        let h = pow2(j);
        let (theta_lo, theta_hi, star_theta_lo, star_theta_hi) = if m == 1 {
            (0.0, 2.0 * PI, 0.0, 2.0 * PI)
        } else {
            let lo = (k - 1) as f64 * d;
            let hi = k as f64 * d;
            (lo, hi, lo - 0.05 * d, hi + 0.05 * d)
        };
        Self {
            j,
            k,
            r_inner: (big_r - h).max(0.0),
            r_outer: big_r - 0.5 * h,
            theta_lo,
            theta_hi,
            star_r_inner: (big_r - 1.1 * h).max(0.0),
            star_r_outer: (big_r - 0.45 * h).min(big_r),
            star_theta_lo,
            star_theta_hi,
        }
    }

    pub fn kind(&self) -> PacketKind {
        if self.j >= 0 {
            PacketKind::Interior
        } else {
            PacketKind::Boundary
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.theta_hi - self.theta_lo) * (self.r_outer * self.r_outer - self.r_inner * self.r_inner)
    }

    fn full_circle(&self) -> bool {
        self.theta_hi - self.theta_lo >= 2.0 * PI
    }

    /// Membership in S_{j,k} (closed).
    pub fn contains(&self, p: Point) -> bool {
        let r = p[0].hypot(p[1]);
        if r < self.r_inner || r > self.r_outer {
            return false;
        }
        self.full_circle() || angle_in(p[1].atan2(p[0]), self.theta_lo, self.theta_hi)
    }

    /// Membership in S*_{j,k} (closed).
    pub fn star_contains(&self, p: Point) -> bool {
        let r = p[0].hypot(p[1]);
        if r < self.star_r_inner || r > self.star_r_outer {
            return false;
        }
        self.star_theta_hi - self.star_theta_lo >= 2.0 * PI
            || angle_in(p[1].atan2(p[0]), self.star_theta_lo, self.star_theta_hi)
    }

    /// Smallest axis-aligned square containing S*_{j,k}: (center, side).
    pub fn star_bounding_square(&self) -> (Point, f64) {
        let (lo, hi) = annular_bbox(
            self.star_r_inner,
            self.star_r_outer,
            self.star_theta_lo,
            self.star_theta_hi,
        );
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        ([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])], side)
    }
}

/// θ ∈ [lo, hi] modulo 2π.
pub fn angle_in(theta: f64, lo: f64, hi: f64) -> bool {
    let t = wrap_2pi(theta - lo);
    t <= hi - lo
}

/// Bounding box of {r ∈ [r0, r1], θ ∈ [a, b]}: x = r cos θ is linear in r, so
/// extremes sit at r0 or r1 and at θ ∈ {a, b} or a multiple of π/2 inside.
fn annular_bbox(r0: f64, r1: f64, a: f64, b: f64) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut push = |t: f64| {
        for r in [r0, r1] {
            let p = [r * t.cos(), r * t.sin()];
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
    };
    if b - a >= 2.0 * PI {
        for q in 0..4 {
            push(q as f64 * 0.5 * PI);
        }
    } else {
        push(a);
        push(b);
        let q0 = (a / (0.5 * PI)).ceil() as i64;
        let q1 = (b / (0.5 * PI)).floor() as i64;
        for q in q0..=q1 {
            push(q as f64 * 0.5 * PI);
        }
    }
    (lo, hi)
}

/// All sectors with j_min ≤ j ≤ j_max.
pub fn sectors(j_max: u32, j_min: i32) -> Vec<Sector> {
    let mut v = Vec::new();
    for j in (j_min..=j_max as i32).rev() {
        for k in 1..=arc_count(j_max, j) {
            v.push(Sector::new(j_max, j, k));
        }
    }
    v
}

/// R-independent square constant C*. For arcs narrower than π the bounding
/// square is at most the diameter of S*_{j,k}, which is below
/// 2^j·√((2.2π)² + 0.65²) (outer chord 2.2π·2^j, radial thickness 0.65·2^j);
/// the wide arcs near the center are far smaller. The per-R maximum
/// approaches this value from below as R grows.
pub fn square_constant() -> f64 {
    (2.2 * PI).hypot(0.65)
}

/// c* = 2π/C* for [`square_constant`].
pub fn frequency_step() -> f64 {
    2.0 * PI / square_constant()
}

/// (C*, 2π/C*) with C* the largest ratio side(T_{j,k})/2^j over the interior
/// sectors of D(R) at this particular R.
pub fn bounding_square_constant(j_max: u32) -> (f64, f64) {
    let mut c = 0.0f64;
    for j in 0..=j_max as i32 {
        for k in 1..=arc_count(j_max, j) {
            let (_, side) = Sector::new(j_max, j, k).star_bounding_square();
            c = c.max(side / pow2(j));
        }
    }
    (c, 2.0 * PI / c)
}

/// The sector S_{j,k} containing p, with ties going to the lower j and lower
/// k. `None` outside D(R) or in the unresolved annulus below scale j_min.
pub fn locate(j_max: u32, j_min: i32, p: Point) -> Option<(i32, u32)> {
    let big_r = pow2(j_max as i32);
    let r = p[0].hypot(p[1]);
    if r > big_r {
        return None;
    }
    let theta = wrap_2pi(p[1].atan2(p[0]));
    for j in j_min..=j_max as i32 {
        let s = Sector::new(j_max, j, 1);
        if r >= s.r_inner && r <= s.r_outer {
            let m = arc_count(j_max, j);
            if m == 1 {
                return Some((j, 1));
            }
            let d = 2.0 * PI / m as f64;
            let mut k = (theta / d).floor() as i64;
            // a point exactly on an arc boundary belongs to the lower arc
            if k > 0 && theta == k as f64 * d {
                k -= 1;
            }
            let k = (k.clamp(0, m as i64 - 1) + 1) as u32;
            return Some((j, k));
        }
    }
    None
}

/// Truncated index set with its truncation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    pub j_max: u32,
    pub j_min: i32,
    pub m_box: i64,
    pub indices: Vec<PacketIndex>,
}

/// All (j, k, m) with j_min ≤ j ≤ j_max, 1 ≤ k ≤ m(j), |m₁|, |m₂| ≤ m_box.
pub fn build_index_set(big_r: u64, j_min: i32, m_box: i64) -> Result<IndexSet, SectorError> {
    let j_max = j_max_of(big_r)?;
    if j_min >= 0 {
        return Err(SectorError::NonNegativeJmin(j_min));
    }
    let mut indices = Vec::new();
    for j in (j_min..=j_max as i32).rev() {
        for k in 1..=arc_count(j_max, j) {
            for m1 in -m_box..=m_box {
                for m2 in -m_box..=m_box {
                    indices.push(PacketIndex::new(j, k, [m1, m2]));
                }
            }
        }
    }
    Ok(IndexSet {
        j_max,
        j_min,
        m_box,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_counts() {
        assert_eq!([arc_count(2, 0), arc_count(2, 1), arc_count(2, 2)], [4, 2, 1]);
        assert_eq!(arc_count(2, -1), 4);
        assert_eq!(arc_count(2, -7), 4);
    }

    #[test]
    fn index_set_count() {
        let set = build_index_set(4, -2, 1).unwrap();
        assert_eq!(set.indices.len(), 135);
        assert!(build_index_set(6, -2, 1).is_err());
        assert!(build_index_set(1, -2, 1).is_err());
        assert!(build_index_set(4, 0, 1).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(PacketIndex::new(0, 1, [0, 0]).classify(), PacketKind::Interior);
        assert_eq!(PacketIndex::new(-1, 3, [2, -1]).classify(), PacketKind::Boundary);
        assert_eq!(PacketIndex::new(3, 1, [5, 5]).classify(), PacketKind::Interior);
    }

    #[test]
    fn core_sector_square() {
        // the j = j_max sector is the disk of radius 0.55R
        let s = Sector::new(3, 3, 1);
        let (c, side) = s.star_bounding_square();
        assert!((side - 1.1 * 8.0).abs() < 1e-12);
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    #[test]
    fn square_constant_grows_toward_its_supremum() {
        let mut prev = 0.0;
        for j_max in 1..=12 {
            let (c, cs) = bounding_square_constant(j_max);
            assert!(c >= prev && c < square_constant(), "{j_max}: {c}");
            assert!((cs - 2.0 * PI / c).abs() < 1e-15);
            prev = c;
        }
        assert!(square_constant() - prev < 0.05, "{prev}");
    }

    #[test]
    fn square_matches_boundary_sampling() {
        let s = Sector::new(2, 0, 1);
        let (c, side) = s.star_bounding_square();
        let n = 250_000;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut upd = |p: [f64; 2]| {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        };
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let t = s.star_theta_lo + u * (s.star_theta_hi - s.star_theta_lo);
            let r = s.star_r_inner + u * (s.star_r_outer - s.star_r_inner);
            for rr in [s.star_r_inner, s.star_r_outer] {
                upd([rr * t.cos(), rr * t.sin()]);
            }
            for tt in [s.star_theta_lo, s.star_theta_hi] {
                upd([r * tt.cos(), r * tt.sin()]);
            }
        }
        let side_s = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        assert!((side - side_s).abs() < 1e-9, "{side} vs {side_s}");
        assert!((c[0] - 0.5 * (lo[0] + hi[0])).abs() < 1e-9);
    }

    #[test]
    fn arcs_tile_the_circle() {
        for j in 0..=3 {
            let m = arc_count(3, j);
            let mut total = 0.0;
            for k in 1..=m {
                let s = Sector::new(3, j, k);
                total += s.theta_hi - s.theta_lo;
                if k > 1 {
                    let prev = Sector::new(3, j, k - 1);
                    assert_eq!(prev.theta_hi, s.theta_lo);
                }
            }
            assert!((total - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_areas_fill_the_disk() {
        let j_max = 3;
        let big_r = 8.0f64;
        let total: f64 = sectors(j_max, -30).iter().map(|s| s.area()).sum();
        assert!((total - PI * big_r * big_r).abs() < 1e-3 * PI * big_r * big_r);
    }

    #[test]
    fn located_sector_contains_point() {
        let j_max = 3;
        for i in 0..2000 {
            let r = 8.0 * (i as f64 + 0.5) / 2000.0;
            let t = 0.7 + 13.0 * i as f64;
            let p = [r * t.cos(), r * t.sin()];
            if let Some((j, k)) = locate(j_max, -12, p) {
                let s = Sector::new(j_max, j, k);
                assert!(s.contains(p), "{p:?} -> ({j},{k})");
                assert!(s.star_contains(p));
            }
        }
    }
}
