//! Frequency regions S: Fourier transform of the indicator 1_S and polar
//! quadrature rules over S.

use std::f64::consts::PI;

use num_complex::Complex64;
use plunge_core::bessel::bessel_j;
use plunge_core::geometry::{Point, Shape, WellShapedDomain};
use plunge_core::math::GaussLegendre;

/// κ(y) = ∫_S e^{−iy·ξ} dξ, prepared once per region.
pub struct IndicatorFt {
    shape: Shape,
    area: f64,
    diam: f64,
    small: Vec<(Point, f64)>,
}

impl IndicatorFt {
    pub fn new(s: &WellShapedDomain) -> Self {
        let small = match s.shape {
            Shape::Polygon { .. } => polar_rule(s, 16, 16),
            _ => Vec::new(),
        };
        Self {
            shape: s.shape.clone(),
            area: s.area(),
            diam: s.diameter(),
            small,
        }
    }

    pub fn eval(&self, y: Point) -> Complex64 {
        match &self.shape {
            Shape::Disk { center, radius } => {
                shift(center, y) * disk_ft(*radius, y[0].hypot(y[1]))
            }
            Shape::Ellipse { center, semi_axes } => {
                let a = semi_axes[0] * semi_axes[1];
                let t = (semi_axes[0] * y[0]).hypot(semi_axes[1] * y[1]);
                shift(center, y) * a * disk_ft(1.0, t)
            }
            Shape::Polygon { vertices } => {
                let ny = y[0].hypot(y[1]);
                if ny * self.diam < 1.0 {
                    if ny == 0.0 {
                        return Complex64::new(self.area, 0.0);
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(p, w) in &self.small {
                        acc += Complex64::from_polar(w, -(y[0] * p[0] + y[1] * p[1]));
                    }
                    return acc;
                }
                let n = vertices.len();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let len = e[0].hypot(e[1]);
                    // outward normal of a counterclockwise edge
                    let nrm = [e[1] / len, -e[0] / len];
                    let yn = y[0] * nrm[0] + y[1] * nrm[1];
                    let z = Complex64::new(0.0, -(y[0] * e[0] + y[1] * e[1]));
                    let base = Complex64::from_polar(1.0, -(y[0] * a[0] + y[1] * a[1]));
                    acc += yn * len * base * exp_m1_over(z);
                }
                acc * Complex64::new(0.0, 1.0) / (ny * ny)
            }
        }
    }
}

fn shift(c: &Point, y: Point) -> Complex64 {
    Complex64::from_polar(1.0, -(y[0] * c[0] + y[1] * c[1]))
}

/// 2πρ₀J₁(ρ₀t)/t, equal to πρ₀² at t = 0.
fn disk_ft(r0: f64, t: f64) -> f64 {
    let x = r0 * t;
    if x < 1e-4 {
        PI * r0 * r0 * (1.0 - x * x / 8.0)
    } else {
        2.0 * PI * r0 * bessel_j(1, x) / t
    }
}

/// (e^z − 1)/z.
fn exp_m1_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Distance from an interior point c to ∂S along direction φ.
pub fn ray_extent(s: &WellShapedDomain, c: Point, phi: f64) -> f64 {
    let d = [phi.cos(), phi.sin()];
    match &s.shape {
        Shape::Disk { center, radius } => {
            let o = [c[0] - center[0], c[1] - center[1]];
            let b = o[0] * d[0] + o[1] * d[1];
            let cc = o[0] * o[0] + o[1] * o[1] - radius * radius;
            -b + (b * b - cc).max(0.0).sqrt()
        }
        Shape::Ellipse { center, semi_axes } => {
            let o = [(c[0] - center[0]) / semi_axes[0], (c[1] - center[1]) / semi_axes[1]];
            let dd = [d[0] / semi_axes[0], d[1] / semi_axes[1]];
            let a = dd[0] * dd[0] + dd[1] * dd[1];
            let b = o[0] * dd[0] + o[1] * dd[1];
            let cc = o[0] * o[0] + o[1] * o[1] - 1.0;
            (-b + (b * b - a * cc).max(0.0).sqrt()) / a
        }
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            let mut t = f64::INFINITY;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let e = [b[0] - a[0], b[1] - a[1]];
                let nrm = [e[1], -e[0]];
                let den = d[0] * nrm[0] + d[1] * nrm[1];
                if den > 0.0 {
                    let num = (a[0] - c[0]) * nrm[0] + (a[1] - c[1]) * nrm[1];
                    t = t.min(num / den);
                }
            }
            t
        }
    }
}

/// Polar rule over S about its centroid: Gauss–Legendre in ρ; in φ the
/// periodic trapezoid rule for smooth boundaries, Gauss–Legendre on the
/// pieces between vertex angles for polygons.
pub fn polar_rule(s: &WellShapedDomain, n_rho: usize, n_phi: usize) -> Vec<(Point, f64)> {
    let c = s.centroid();
    let g_r = GaussLegendre::new(n_rho);
    let mut out = Vec::new();
    let mut push_ray = |phi: f64, wp: f64| {
        let rmax = ray_extent(s, c, phi);
        let (cp, sp) = (phi.cos(), phi.sin());
        for (r, wr) in g_r.mapped(0.0, rmax) {
            out.push(([c[0] + r * cp, c[1] + r * sp], wp * wr * r));
        }
    };
    let mut cuts: Vec<f64> = match &s.shape {
        Shape::Polygon { vertices } => vertices
            .iter()
            .map(|v| (v[1] - c[1]).atan2(v[0] - c[0]).rem_euclid(2.0 * PI))
            .collect(),
        _ => {
            for i in 0..n_phi {
                push_ray(2.0 * PI * i as f64 / n_phi as f64, 2.0 * PI / n_phi as f64);
            }
            return out;
        }
    };
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let first = cuts[0];
    cuts.push(first + 2.0 * PI);
    let g_p = GaussLegendre::new(n_phi);
    for w in cuts.windows(2) {
        for (phi, wp) in g_p.mapped(w[0], w[1]) {
            push_ray(phi, wp);
        }
    }
    out
}
