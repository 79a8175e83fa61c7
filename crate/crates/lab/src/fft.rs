//! Square 2D FFTs on row-major buffers (rustfft plans, rayon over rows).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(buf.len(), n * n);
        buf.par_chunks_mut(n).for_each(|row| plan.process(row));
        transpose(buf, n);
        buf.par_chunks_mut(n).for_each(|row| plan.process(row));
        transpose(buf, n);
    }

    /// Unnormalized Σ_x f(x) e^{−2πi k·x/n}.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd);
    }

    /// Unnormalized Σ_k F(k) e^{+2πi k·x/n}.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv);
    }
}

/// Forward 2D FFT of an ny × nx row-major buffer.
pub struct FftRect {
    nx: usize,
    ny: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl FftRect {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            row: p.plan_fft_forward(nx),
            col: p.plan_fft_forward(ny),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Unnormalized Σ f(x, y) e^{−2πi(k x/nx + l y/ny)}, result at l·nx + k.
    pub fn forward(&self, buf: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(buf.len(), nx * ny);
        buf.par_chunks_mut(nx).for_each(|r| self.row.process(r));
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for y in 0..ny {
            for x in 0..nx {
                t[x * ny + y] = buf[y * nx + x];
            }
        }
        t.par_chunks_mut(ny).for_each(|c| self.col.process(c));
        for x in 0..nx {
            for y in 0..ny {
                buf[y * nx + x] = t[x * ny + y];
            }
        }
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Signed frequency of DFT bin k in 0..n.
pub fn signed(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Bin of signed frequency f.
pub fn bin(f: i64, n: usize) -> usize {
    f.rem_euclid(n as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let n = 16;
        let f = Fft2::new(n);
        let mut buf: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = buf.clone();
        f.forward(&mut buf);
        f.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-13);
        }
        // e^{2πi(3x + 5y)/n} → spike at (row 5, col 3) in (y, x) layout
        let mut wave: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let (y, x) = (i / n, i % n);
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (3 * x + 5 * y) as f64 / n as f64)
            })
            .collect();
        f.forward(&mut wave);
        assert!((wave[5 * n + 3].re - (n * n) as f64).abs() < 1e-9);
        assert!(wave[0].norm() < 1e-9);
    }

    #[test]
    fn rectangular_matches_separable_sum() {
        let (nx, ny) = (8, 4);
        let f: Vec<Complex64> = (0..nx * ny).map(|i| Complex64::new((i as f64).sin(), 0.3 * i as f64)).collect();
        let mut g = f.clone();
        FftRect::new(nx, ny).forward(&mut g);
        for (l, k) in [(0, 0), (1, 3), (3, 7)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..ny {
                for x in 0..nx {
                    let ph = -2.0 * std::f64::consts::PI * (k as f64 * x as f64 / nx as f64 + l as f64 * y as f64 / ny as f64);
                    acc += f[y * nx + x] * Complex64::from_polar(1.0, ph);
                }
            }
            assert!((acc - g[l * nx + k]).norm() < 1e-12);
        }
    }

    #[test]
    fn bins() {
        assert_eq!(signed(7, 8), -1);
        assert_eq!(signed(3, 8), 3);
        assert_eq!(bin(-1, 8), 7);
        assert_eq!(signed(bin(-4, 8), 8), -4);
    }
}
