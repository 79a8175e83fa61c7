//! Sampled packet windows on the DFT grids where the modulations of one
//! sector form an orthonormal basis.
//!
//! Interior sector (j, k): the square T of side C*·2^j around S*_{j,k};
//! the lattice c*·2^{−j}·m is exactly the DFT frequency grid of T.
//! Boundary sector (j, k): the (r, θ) box of size 4π·2^j × 4π/R, whose DFT
//! frequencies are m₁2^{−j}/2 and m₂R/2.

use std::f64::consts::PI;

use plunge_core::geometry::Point;
use plunge_core::sectorization::Sector;
use plunge_core::wavepackets::PacketFamily;
use rayon::prelude::*;

pub fn pow2(j: i32) -> f64 {
    2f64.powi(j)
}

/// h_{j,k} = φ_j(|x|)·η_{j,k}(arg x) sampled on an n×n grid over T.
#[derive(Clone, Debug)]
pub struct InteriorWindow {
    pub j: i32,
    pub k: u32,
    pub n: usize,
    pub side: f64,
    pub hs: f64,
    /// Lower-left corner of T.
    pub origin: Point,
    /// Row-major, row = y index.
    pub values: Vec<f64>,
}

impl InteriorWindow {
    pub fn new(fam: &PacketFamily, j: i32, k: u32, n: usize) -> Self {
        let sec = Sector::new(fam.j_max, j, k);
        let (c, _) = sec.star_bounding_square();
        let side = fam.c_big_star * pow2(j);
        let hs = side / n as f64;
        let origin = [c[0] - 0.5 * side, c[1] - 0.5 * side];
        let values: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|i| {
                let (iy, ix) = (i / n, i % n);
                let x = [origin[0] + ix as f64 * hs, origin[1] + iy as f64 * hs];
                fam.envelope(j, k, x)
            })
            .collect();
        Self {
            j,
            k,
            n,
            side,
            hs,
            origin,
            values,
        }
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point {
        [self.origin[0] + ix as f64 * self.hs, self.origin[1] + iy as f64 * self.hs]
    }

    /// Riemann sum of h², spectrally accurate for the compactly supported h.
    pub fn norm_sq(&self) -> f64 {
        self.hs * self.hs * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Largest |h| on the outermost ring of samples (should be exactly 0).
    pub fn edge_max(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for i in 0..n {
            for &(a, b) in &[(0, i), (n - 1, i), (i, 0), (i, n - 1)] {
                m = m.max(self.values[a * n + b].abs());
            }
        }
        m
    }
}

/// Geometry of the (r, θ) box of a boundary sector.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryBox {
    pub j: i32,
    pub k: u32,
    pub r0: f64,
    pub t0: f64,
    pub len_r: f64,
    pub len_t: f64,
}

impl BoundaryBox {
    pub fn new(fam: &PacketFamily, j: i32, k: u32) -> Self {
        let big_r = fam.big_r();
        let (lo, hi) = fam.radial.support_interval(j);
        let (a, b) = fam.angular_for(j).enlarged_arc(k);
        let len_r = 4.0 * PI * pow2(j);
        let len_t = 4.0 * PI / big_r;
        Self {
            j,
            k,
            r0: 0.5 * (lo + hi) - 0.5 * len_r,
            t0: 0.5 * (a + b) - 0.5 * len_t,
            len_r,
            len_t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_window_vanishes_on_edges() {
        let fam = PacketFamily::with_nodes(3, 2.0, -1, 128).unwrap();
        for j in 0..=3 {
            let w = InteriorWindow::new(&fam, j, 1, 512);
            assert_eq!(w.edge_max(), 0.0);
            // ‖h‖² from the grid against the 1D factorized quadrature
            let exact = fam.radial_mass(j, 256) * fam.angular_mass(j, 1, 256);
            assert!((w.norm_sq() - exact).abs() < 2e-3 * exact, "j={j} {} {exact}", w.norm_sq());
        }
    }

    #[test]
    fn boundary_box_contains_support() {
        let fam = PacketFamily::with_nodes(3, 2.0, -3, 128).unwrap();
        for j in -3..0 {
            let b = BoundaryBox::new(&fam, j, 2);
            let (lo, hi) = fam.radial.support_interval(j);
            let (a, c) = fam.angular_for(j).enlarged_arc(2);
            assert!(b.r0 < lo && b.r0 + b.len_r > hi);
            assert!(b.t0 < a && b.t0 + b.len_t > c);
        }
    }
}
