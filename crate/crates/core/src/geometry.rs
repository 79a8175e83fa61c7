//! Frequency-side regions S: disks, axis-aligned ellipses and convex polygons.
//!
//! Membership uses closed-region semantics (boundary points count as inside).

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use core::fmt;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeometryError {
    NonPositiveRadius,
    NonPositiveScale,
    NonPositiveThickness,
    DegeneratePolygon,
    NotConvexCcw,
    TooFewSamples,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            GeometryError::NonPositiveRadius => "radius / semi-axes must be positive",
            GeometryError::NonPositiveScale => "dilation factor must be positive",
            GeometryError::NonPositiveThickness => "neighborhood thickness must be positive",
            GeometryError::DegeneratePolygon => "polygon needs at least three distinct vertices",
            GeometryError::NotConvexCcw => "polygon must be convex with counterclockwise vertices",
            GeometryError::TooFewSamples => "Monte-Carlo estimate needs at least 10^4 samples",
        };
        f.write_str(msg)
    }
}

/// Shape description; this is also the on-disk JSON form
/// `{"kind": "disk", "params": {"center": [0, 0], "radius": 0.5}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2] },
    Polygon { vertices: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellShapedDomain {
    pub shape: Shape,
    pub boundary_length: f64,
    pub ws_constant: f64,
}

/// Exact constant for a disk: sup over t of the annulus area divided by
/// max(t², t·2πρ), attained at t = 2πρ.
pub fn disk_ws_constant() -> f64 {
    let a = 1.0 + 2.0 * PI;
    a * a / (4.0 * PI)
}

/// Valid constant for any convex body: the band area is at most
/// 2tH + πt² by the Steiner formula.
pub const CONVEX_WS_CONSTANT: f64 = 2.0 + PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeCount {
    pub count: u64,
    pub bound: f64,
}

impl WellShapedDomain {
    pub fn new(shape: Shape) -> Result<Self, GeometryError> {
        validate(&shape)?;
        let boundary_length = perimeter(&shape);
        let ws_constant = match shape {
            Shape::Disk { .. } => disk_ws_constant(),
            _ => CONVEX_WS_CONSTANT,
        };
        Ok(Self {
            shape,
            boundary_length,
            ws_constant,
        })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self, GeometryError> {
        Self::new(Shape::Disk { center, radius })
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2]) -> Result<Self, GeometryError> {
        Self::new(Shape::Ellipse { center, semi_axes })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        Self::new(Shape::Polygon { vertices })
    }

    pub fn with_ws_constant(mut self, c: f64) -> Self {
        self.ws_constant = c;
        self
    }

    pub fn contains(&self, p: Point) -> bool {
        match &self.shape {
            Shape::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Ellipse { center, semi_axes } => {
                let u = (p[0] - center[0]) / semi_axes[0];
                let v = (p[1] - center[1]) / semi_axes[1];
                u * u + v * v <= 1.0
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    cross(sub(b, a), sub(p, a)) >= 0.0
                })
            }
        }
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => (hypot(p[0] - center[0], p[1] - center[1]) - radius).abs(),
            Shape::Ellipse { center, semi_axes } => {
                ellipse_distance(semi_axes[0], semi_axes[1], p[0] - center[0], p[1] - center[1])
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Distance to the closed region (zero inside).
    pub fn distance_to_set(&self, p: Point) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.distance_to_boundary(p)
        }
    }

    /// Distance to the complement (zero outside).
    pub fn depth(&self, p: Point) -> f64 {
        if self.contains(p) {
            self.distance_to_boundary(p)
        } else {
            0.0
        }
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            Shape::Polygon { vertices } => polygon_area(vertices),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
            Shape::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max(hypot(a[0] - b[0], a[1] - b[1]));
                    }
                }
                d
            }
        }
    }

    /// (min corner, max corner) of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Ellipse { center, semi_axes } => (
                [center[0] - semi_axes[0], center[1] - semi_axes[1]],
                [center[0] + semi_axes[0], center[1] + semi_axes[1]],
            ),
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Largest distance from the origin to a point of S.
    pub fn max_norm(&self) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => hypot(center[0], center[1]) + radius,
            Shape::Ellipse { center, semi_axes } => {
                // crude but valid upper bound
                hypot(center[0], center[1]) + semi_axes[0].max(semi_axes[1])
            }
            Shape::Polygon { vertices } => vertices
                .iter()
                .map(|v| hypot(v[0], v[1]))
                .fold(0.0, f64::max),
        }
    }

    pub fn centroid(&self) -> Point {
        match &self.shape {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => *center,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut cx = 0.0;
                let mut cy = 0.0;
                let mut a2 = 0.0;
                for i in 0..n {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % n];
                    let c = p[0] * q[1] - q[0] * p[1];
                    a2 += c;
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                [cx / (3.0 * a2), cy / (3.0 * a2)]
            }
        }
    }

    /// aS, scaling about the origin. The well-shaped constant is unchanged.
    pub fn dilate(&self, a: f64) -> Result<Self, GeometryError> {
        if !(a > 0.0) {
            return Err(GeometryError::NonPositiveScale);
        }
        let sc = |p: &Point| [a * p[0], a * p[1]];
        let shape = match &self.shape {
            Shape::Disk { center, radius } => Shape::Disk {
                center: sc(center),
                radius: a * radius,
            },
            Shape::Ellipse { center, semi_axes } => Shape::Ellipse {
                center: sc(center),
                semi_axes: [a * semi_axes[0], a * semi_axes[1]],
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(sc).collect(),
            },
        };
        Ok(Self {
            shape,
            boundary_length: a * self.boundary_length,
            ws_constant: self.ws_constant,
        })
    }

    pub fn translate(&self, v: Point) -> Self {
        let tr = |p: &Point| [p[0] + v[0], p[1] + v[1]];
        let shape = match &self.shape {
            Shape::Disk { center, radius } => Shape::Disk {
                center: tr(center),
                radius: *radius,
            },
            Shape::Ellipse { center, semi_axes } => Shape::Ellipse {
                center: tr(center),
                semi_axes: *semi_axes,
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(tr).collect(),
            },
        };
        Self {
            shape,
            boundary_length: self.boundary_length,
            ws_constant: self.ws_constant,
        }
    }

    /// Area of the t-neighborhood of ∂S with its standard error.
    ///
    /// Disks use the annulus formula (standard error 0); other shapes use
    /// uniform sampling over the bounding box inflated by t.
    pub fn neighborhood_area<G: Rng + ?Sized>(
        &self,
        t: f64,
        samples: usize,
        rng: &mut G,
    ) -> Result<(f64, f64), GeometryError> {
        if !(t > 0.0) {
            return Err(GeometryError::NonPositiveThickness);
        }
        if let Shape::Disk { radius, .. } = self.shape {
            let outer = radius + t;
            let inner = (radius - t).max(0.0);
            return Ok((PI * (outer * outer - inner * inner), 0.0));
        }
        if samples < 10_000 {
            return Err(GeometryError::TooFewSamples);
        }
        let (lo, hi) = self.bounding_box();
        let lo = [lo[0] - t, lo[1] - t];
        let hi = [hi[0] + t, hi[1] + t];
        let box_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let mut hits = 0u64;
        for _ in 0..samples {
            let p = [
                lo[0] + (hi[0] - lo[0]) * rng.gen::<f64>(),
                lo[1] + (hi[1] - lo[1]) * rng.gen::<f64>(),
            ];
            if self.distance_to_boundary(p) <= t {
                hits += 1;
            }
        }
        let frac = hits as f64 / samples as f64;
        let se = (frac * (1.0 - frac) / samples as f64).sqrt() * box_area;
        Ok((frac * box_area, se))
    }

    /// Smallest C with neighborhood_area(t) ≤ C·max(t², t·H¹(∂S)) over the grid.
    pub fn fit_ws_constant<G: Rng + ?Sized>(
        &self,
        t_grid: &[f64],
        samples: usize,
        rng: &mut G,
    ) -> Result<f64, GeometryError> {
        let mut c: f64 = 0.0;
        for &t in t_grid {
            let (a, _) = self.neighborhood_area(t, samples, rng)?;
            c = c.max(a / (t * t).max(t * self.boundary_length));
        }
        Ok(c)
    }

    /// Integer points m with distance_to_boundary(m) ≤ t, together with the
    /// lattice bound 4C·max{t², t·H¹(∂S)}.
    pub fn count_lattice_near_boundary(&self, t: f64) -> LatticeCount {
        let (lo, hi) = self.bounding_box();
        let x0 = (lo[0] - t).floor() as i64;
        let x1 = (hi[0] + t).ceil() as i64;
        let y0 = (lo[1] - t).floor() as i64;
        let y1 = (hi[1] + t).ceil() as i64;
        let mut count = 0u64;
        for mx in x0..=x1 {
            for my in y0..=y1 {
                if self.distance_to_boundary([mx as f64, my as f64]) <= t {
                    count += 1;
                }
            }
        }
        LatticeCount {
            count,
            bound: 4.0 * self.ws_constant * (t * t).max(t * self.boundary_length),
        }
    }
}

fn validate(shape: &Shape) -> Result<(), GeometryError> {
    match shape {
        Shape::Disk { radius, .. } => {
            if !(*radius > 0.0) {
                return Err(GeometryError::NonPositiveRadius);
            }
        }
        Shape::Ellipse { semi_axes, .. } => {
            if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) {
                return Err(GeometryError::NonPositiveRadius);
            }
        }
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            if n < 3 {
                return Err(GeometryError::DegeneratePolygon);
            }
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let c = vertices[(i + 2) % n];
                if hypot(b[0] - a[0], b[1] - a[1]) == 0.0 {
                    return Err(GeometryError::DegeneratePolygon);
                }
                if cross(sub(b, a), sub(c, b)) <= 0.0 {
                    return Err(GeometryError::NotConvexCcw);
                }
            }
        }
    }
    Ok(())
}

fn perimeter(shape: &Shape) -> f64 {
    match shape {
        Shape::Disk { radius, .. } => 2.0 * PI * radius,
        Shape::Ellipse { semi_axes, .. } => ellipse_perimeter(semi_axes[0], semi_axes[1]),
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            (0..n)
                .map(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    hypot(b[0] - a[0], b[1] - a[1])
                })
                .sum()
        }
    }
}

/// Exact ellipse perimeter via the arithmetic–geometric mean.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut an, mut bn) = (a.max(b), a.min(b));
    let mut cn2 = an * an - bn * bn;
    let mut acc = 0.5 * cn2;
    let mut pow = 0.5;
    for _ in 0..64 {
        let a1 = 0.5 * (an + bn);
        let b1 = (an * bn).sqrt();
        let c1 = 0.5 * (an - bn);
        cn2 = c1 * c1;
        pow *= 2.0;
        acc += pow * cn2;
        an = a1;
        bn = b1;
        if cn2 <= 1e-34 * a * a {
            break;
        }
    }
    let amax = a.max(b);
    2.0 * PI / an * (amax * amax - acc)
}

/// Distance from (x, y) to the ellipse with semi-axes (a, b) centered at 0.
fn ellipse_distance(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // fold into the first quadrant with the major axis along x
    let (e0, e1, y0, y1) = if a >= b {
        (a, b, x.abs(), y.abs())
    } else {
        (b, a, y.abs(), x.abs())
    };
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let n0 = r0 * z0;
            let mut s0 = z1 - 1.0;
            let mut s1 = if g < 0.0 { 0.0 } else { hypot(n0, z1) - 1.0 };
            let mut s = 0.0;
            for _ in 0..200 {
                s = 0.5 * (s0 + s1);
                if s == s0 || s == s1 {
                    break;
                }
                let ratio0 = n0 / (s + r0);
                let ratio1 = z1 / (s + 1.0);
                let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                if gs > 0.0 {
                    s0 = s;
                } else if gs < 0.0 {
                    s1 = s;
                } else {
                    break;
                }
            }
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            hypot(x0 - y0, x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xd = numer / denom;
            let x0 = e0 * xd;
            let x1 = e1 * (1.0 - xd * xd).max(0.0).sqrt();
            hypot(x0 - y0, x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn hypot(x: f64, y: f64) -> f64 {
    x.hypot(y)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    hypot(ap[0] - t * ab[0], ap[1] - t * ab[1])
}

fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(v[i], v[(i + 1) % n]);
    }
    0.5 * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_disk() -> WellShapedDomain {
        WellShapedDomain::disk([0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(unit_disk().contains([0.0, 0.0]));
        assert!(!unit_disk().contains([2.0, 0.0]));
        let e = WellShapedDomain::ellipse([0.0, 0.0], [2.0, 1.0]).unwrap();
        assert!(e.contains([1.9, 0.0]));
    }

    #[test]
    fn disk_distances() {
        assert_eq!(unit_disk().distance_to_boundary([0.0, 0.0]), 1.0);
        assert_eq!(unit_disk().distance_to_boundary([3.0, 0.0]), 2.0);
    }

    #[test]
    fn ellipse_distance_matches_dense_sampling() {
        let e = WellShapedDomain::ellipse([0.3, -0.2], [2.0, 1.0]).unwrap();
        assert!((e.distance_to_boundary([0.3, -0.2]) - 1.0).abs() < 1e-12);
        let pts = [[0.3, -0.2], [1.0, 0.5], [3.0, 2.0], [-1.7, 0.1], [0.31, 0.7], [2.5, -0.2]];
        for p in pts {
            let n = 200_000;
            let mut best = f64::INFINITY;
            for i in 0..n {
                let t = 2.0 * PI * i as f64 / n as f64;
                let q = [0.3 + 2.0 * t.cos(), -0.2 + t.sin()];
                best = best.min(hypot(q[0] - p[0], q[1] - p[1]));
            }
            let d = e.distance_to_boundary(p);
            assert!(d <= best + 1e-12, "{p:?}: {d} vs {best}");
            assert!(best - d < 1e-8, "{p:?}: {d} vs {best}");
        }
    }

    #[test]
    fn ellipse_perimeter_matches_quadrature() {
        let (a, b) = (2.0, 0.7);
        let gl = crate::math::GaussLegendre::new(400);
        let p = gl.integrate(0.0, 2.0 * PI, |t| hypot(a * t.sin(), b * t.cos()));
        assert!((ellipse_perimeter(a, b) - p).abs() < 1e-10 * p);
        assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * PI).abs() < 1e-14);
        assert!((ellipse_perimeter(0.7, 2.0) - p).abs() < 1e-10 * p);
    }

    #[test]
    fn disk_neighborhood_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, se) = unit_disk().neighborhood_area(0.5, 10_000, &mut rng).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-12 && se == 0.0);
        let (a, _) = unit_disk().neighborhood_area(2.0, 10_000, &mut rng).unwrap();
        assert!((a - 9.0 * PI).abs() < 1e-12);
        assert_eq!(
            unit_disk().neighborhood_area(0.0, 10_000, &mut rng),
            Err(GeometryError::NonPositiveThickness)
        );
    }

    #[test]
    fn square_neighborhood_matches_offset_formula() {
        let sq = WellShapedDomain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = 0.1;
        let (a, se) = sq.neighborhood_area(t, 200_000, &mut rng).unwrap();
        // outer parallel body minus inner parallel square
        let outer = 1.0 + 4.0 * t + PI * t * t;
        let inner = (1.0 - 2.0 * t) * (1.0 - 2.0 * t);
        let exact = outer - inner;
        assert!((a - exact).abs() <= 3.0 * se, "{a} vs {exact} (se {se})");
    }

    #[test]
    fn dilation_examples() {
        let d = unit_disk().dilate(2.0).unwrap();
        assert!((d.boundary_length - 4.0 * PI).abs() < 1e-14);
        assert_eq!(unit_disk().dilate(1.0).unwrap(), unit_disk());
        let d8 = unit_disk().dilate(8.0).unwrap();
        assert_eq!(d8.shape, Shape::Disk { center: [0.0, 0.0], radius: 8.0 });
        assert!(unit_disk().dilate(0.0).is_err());
    }

    #[test]
    fn lattice_count_examples() {
        assert_eq!(unit_disk().count_lattice_near_boundary(1.0).count, 13);
        assert_eq!(unit_disk().count_lattice_near_boundary(0.0).count, 4);
        let big = WellShapedDomain::disk([0.0, 0.0], 10.0).unwrap();
        let c = big.count_lattice_near_boundary(1.0);
        assert!((c.count as f64) <= c.bound);
        assert!((c.bound - 4.0 * disk_ws_constant() * 20.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn polygon_validation() {
        assert_eq!(
            WellShapedDomain::polygon(vec![[0.0, 0.0], [1.0, 0.0]]),
            Err(GeometryError::DegeneratePolygon)
        );
        assert_eq!(
            WellShapedDomain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]),
            Err(GeometryError::NotConvexCcw)
        );
    }
}
