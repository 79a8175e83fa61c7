//! Fourier transforms of wave packets, f̂(ξ) = (1/2π)∫f(x)e^{−ix·ξ}dx.
//!
//! Two independent routes: a polar tensor Gauss–Legendre rule over S*
//! evaluating the packet pointwise, and for boundary packets the
//! Jacobi–Anger factorization into radial Bessel integrals and angular
//! Fourier coefficients of η_{0,k}.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bessel::bessel_j_sequence;
use crate::geometry::Point;
use crate::gevrey::pow2;
use crate::math::{GaussLegendre, NeumaierSum};
use crate::sectorization::PacketKind;
use crate::wavepackets::{PacketError, WavePacket};

/// Minimum Gauss–Legendre nodes per smooth piece for transform integrals.
pub const FT_MIN_NODES: usize = 128;
/// Tail budget for the truncated Jacobi–Anger sum.
pub const TRUNCATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum FourierError {
    Packet(PacketError),
    NotBoundary,
    NotConverged { change: f64 },
    TruncationBudget { n_max: usize },
    RhoOutOfRange { rho: f64, rho_max: f64 },
}

impl fmt::Display for FourierError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FourierError::Packet(e) => write!(f, "{e}"),
            FourierError::NotBoundary => write!(f, "packet is not a boundary packet"),
            FourierError::NotConverged { change } => {
                write!(f, "Fourier quadrature not converged (change {change:.3e})")
            }
            FourierError::TruncationBudget { n_max } => {
                write!(f, "Jacobi-Anger truncation exceeded budget at n = {n_max}")
            }
            FourierError::RhoOutOfRange { rho, rho_max } => {
                write!(f, "|xi| = {rho} exceeds prepared range {rho_max}")
            }
        }
    }
}

impl From<PacketError> for FourierError {
    fn from(e: PacketError) -> Self {
        FourierError::Packet(e)
    }
}

fn nodes_for(min_nodes: usize, omega: f64, len: f64) -> usize {
    min_nodes + (0.7 * omega * len).ceil() as usize
}

/// Small cache of rules keyed by size, local to one transform evaluation.
struct Rules(Vec<GaussLegendre>);

impl Rules {
    fn get(&mut self, n: usize) -> &GaussLegendre {
        let n = n.div_ceil(16) * 16;
        match self.0.iter().position(|g| g.len() == n) {
            Some(i) => &self.0[i],
            None => {
                self.0.push(GaussLegendre::new(n));
                self.0.last().unwrap()
            }
        }
    }
}

/// Upper bounds on the radial and angular phase rates of ψ·e^{−ix·ξ}.
fn phase_rates(p: &WavePacket, xi: Point) -> (f64, f64) {
    let j = p.index.j;
    let m = p.index.m;
    let r_out = p.sector().star_r_outer;
    let rho = xi[0].hypot(xi[1]);
    if j >= 0 {
        let c = p.family.frequency_center(&p.index);
        let w = (c[0] - xi[0]).hypot(c[1] - xi[1]);
        (w, w * r_out)
    } else {
        let wr = 0.5 * (m[0] as f64).abs() * pow2(-j) + rho;
        let wt = 0.5 * (m[1] as f64).abs() * p.family.big_r() + rho * r_out;
        (wr, wt)
    }
}

/// ψ̂(ξ) by polar tensor quadrature over S*_{j,k}; pieces split at the
/// cutoff breakpoints, node counts grow with the oscillation rate.
pub fn packet_ft_direct_nodes(p: &WavePacket, xi: Point, min_nodes: usize) -> Complex64 {
    let fam = p.family;
    let j = p.index.j;
    let k = p.index.k;
    let (wr, wt) = phase_rates(p, xi);
    let rb = fam.radial.breakpoints(j);
    let tb = fam.angular_for(j).breakpoints(k);
    let mut rules = Rules(Vec::new());

    // angular nodes and weights, flattened over pieces
    let mut th: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in tb.windows(2) {
        let n = nodes_for(min_nodes, wt, w[1] - w[0]);
        for (t, wt_) in rules.get(n).mapped(w[0], w[1]) {
            th.push((t.cos(), t.sin(), wt_, 0.0));
        }
    }
    let mut re = 0.0;
    let mut im = 0.0;
    let mut radial: Vec<(f64, f64)> = Vec::new();
    for w in rb.windows(2) {
        let n = nodes_for(min_nodes, wr, w[1] - w[0]);
        radial.extend(rules.get(n).mapped(w[0], w[1]));
    }
    for &(r, wr_) in &radial {
        let mut sr = 0.0;
        let mut si = 0.0;
        for &(c, s, wt_, _) in &th {
            let x = [r * c, r * s];
            let v = p.eval(x);
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let e = Complex64::from_polar(1.0, -(x[0] * xi[0] + x[1] * xi[1]));
            let z = v * e;
            sr += z.re * wt_;
            si += z.im * wt_;
        }
        re += sr * r * wr_;
        im += si * r * wr_;
    }
    Complex64::new(re, im) / (2.0 * PI)
}

/// Tensor-rule samples w_i·ψ(x_i) of one packet, reusable for every ξ with
/// |ξ| ≤ `reach`; node counts follow the worst-case phase rate over that disk.
#[derive(Clone, Debug)]
pub struct DirectTransform {
    nodes: Vec<(Point, Complex64)>,
}

impl DirectTransform {
    pub fn new(p: &WavePacket, reach: f64, min_nodes: usize) -> Self {
        let fam = p.family;
        let j = p.index.j;
        let k = p.index.k;
        let (wr0, wt0) = phase_rates(p, [0.0, 0.0]);
        let r_out = p.sector().star_r_outer;
        let (wr, wt) = (wr0 + reach, wt0 + reach * r_out);
        let mut rules = Rules(Vec::new());
        let mut th: Vec<(f64, f64)> = Vec::new();
        for w in fam.angular_for(j).breakpoints(k).windows(2) {
            let n = nodes_for(min_nodes, wt, w[1] - w[0]);
            th.extend(rules.get(n).mapped(w[0], w[1]));
        }
        let mut radial: Vec<(f64, f64)> = Vec::new();
        for w in fam.radial.breakpoints(j).windows(2) {
            let n = nodes_for(min_nodes, wr, w[1] - w[0]);
            radial.extend(rules.get(n).mapped(w[0], w[1]));
        }
        let mut nodes = Vec::new();
        for &(r, w_r) in &radial {
            for &(t, w_t) in &th {
                let x = [r * t.cos(), r * t.sin()];
                let v = p.eval(x);
                if v.re != 0.0 || v.im != 0.0 {
                    nodes.push((x, v * (w_r * w_t * r)));
                }
            }
        }
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, xi: Point) -> Complex64 {
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for &(x, v) in &self.nodes {
            let z = v * Complex64::from_polar(1.0, -(x[0] * xi[0] + x[1] * xi[1]));
            re.add(z.re);
            im.add(z.im);
        }
        Complex64::new(re.value(), im.value()) / (2.0 * PI)
    }
}

pub fn packet_ft_direct(p: &WavePacket, xi: Point) -> Complex64 {
    packet_ft_direct_nodes(p, xi, FT_MIN_NODES)
}

/// Direct transform with a refinement check: reruns at 1.5× nodes and
/// reports non-convergence beyond `tol` relative to max(|ψ̂|, 1e-6).
pub fn packet_ft_direct_checked(p: &WavePacket, xi: Point, tol: f64) -> Result<Complex64, FourierError> {
    let a = packet_ft_direct_nodes(p, xi, FT_MIN_NODES);
    let b = packet_ft_direct_nodes(p, xi, FT_MIN_NODES * 3 / 2);
    let change = (a - b).norm() / b.norm().max(1e-6);
    if change > tol {
        return Err(FourierError::NotConverged { change });
    }
    Ok(b)
}

/// Fourier coefficient (1/2π)∫η_{0,k}(θ)e^{−iqθ}dθ of a boundary angular cutoff.
pub fn eta_coefficient(p: &WavePacket, q: i64) -> Complex64 {
    angular_integral(p, -(q as f64), FT_MIN_NODES) / (2.0 * PI)
}

/// ∫ η(θ) e^{iωθ} dθ over the enlarged arc of the packet's angular cutoff.
fn angular_integral(p: &WavePacket, omega: f64, min_nodes: usize) -> Complex64 {
    let fam = p.family.angular_for(p.index.j);
    let k = p.index.k;
    let tb = fam.breakpoints(k);
    let mut rules = Rules(Vec::new());
    let mut acc = Complex64::new(0.0, 0.0);
    for w in tb.windows(2) {
        let n = nodes_for(min_nodes, omega.abs(), w[1] - w[0]);
        for (t, wt) in rules.get(n).mapped(w[0], w[1]) {
            let e = fam.eta_unchecked(k, t);
            if e != 0.0 {
                acc += Complex64::from_polar(e * wt, omega * t);
            }
        }
    }
    acc
}

/// Jacobi–Anger factors of one boundary packet, prepared for |ξ| ≤ ρ_max.
#[derive(Clone, Debug)]
pub struct BoundaryFourierFactors {
    pub n_max: usize,
    pub rho_max: f64,
    norm: f64,
    /// Ψ^ang_{k,m₂,n} for n = −n_max..=n_max.
    angular: Vec<Complex64>,
    /// Radial nodes r_i with weights w_i·2^{−j/2}·r_i·φ_j(r_i)·e^{im₁2^{−j−1}r_i}.
    radial: Vec<(f64, Complex64)>,
}

/// Smallest N with Σ_{|n|>N} of the (10Rρ/|n|)^{|n|} envelope times `scale`
/// below `tol`.
pub fn truncation_order(big_r: f64, rho_max: f64, scale: f64, tol: f64) -> Option<usize> {
    let a = 10.0 * big_r * rho_max.max(1e-300);
    let mut n = a.floor() as usize + 1;
    loop {
        // tail Σ_{m>n}(a/m)^m ≤ (a/(n+1))^{n+1}/(1 − a/(n+1))
        let q = a / (n as f64 + 1.0);
        if q < 1.0 {
            let lt = (n as f64 + 1.0) * q.ln() - (1.0 - q).ln();
            if (2.0 * scale).ln() + lt < tol.ln() {
                return Some(n);
            }
        }
        n += 1;
        if n > 200_000 {
            return None;
        }
    }
}

impl BoundaryFourierFactors {
    pub fn new(p: &WavePacket, rho_max: f64) -> Result<Self, FourierError> {
        Self::with_nodes(p, rho_max, FT_MIN_NODES)
    }

    pub fn with_nodes(p: &WavePacket, rho_max: f64, min_nodes: usize) -> Result<Self, FourierError> {
        if p.kind() != PacketKind::Boundary {
            return Err(FourierError::NotBoundary);
        }
        let fam = p.family;
        let j = p.index.j;
        let [m1, m2] = p.index.m;
        let big_r = fam.big_r();
        let half_j = 2f64.powf(0.5 * j as f64);
        let arc = 1.1 * 2.0 * PI / big_r;
        let scale = p.norm / (2.0 * PI) * big_r * half_j * arc;
        let n_max = truncation_order(big_r, rho_max, scale, TRUNCATION_TOL)
            .ok_or(FourierError::TruncationBudget { n_max: 200_000 })?;

        let half_r = (big_r / 2.0).round();
        let mut angular = Vec::with_capacity(2 * n_max + 1);
        for n in -(n_max as i64)..=n_max as i64 {
            let omega = (m2 as f64) * half_r + n as f64;
            angular.push(angular_integral(p, omega, min_nodes));
        }

        let freq = 0.5 * m1 as f64 * pow2(-j);
        let w_r = freq.abs() + rho_max;
        let rb = fam.radial.breakpoints(j);
        let mut rules = Rules(Vec::new());
        let mut radial = Vec::new();
        let pre = 2f64.powf(-0.5 * j as f64);
        for w in rb.windows(2) {
            let n = nodes_for(min_nodes, w_r, w[1] - w[0]);
            for (r, wr) in rules.get(n).mapped(w[0], w[1]) {
                let phi = fam.radial.phi_or_zero(j, r);
                if phi != 0.0 {
                    radial.push((r, Complex64::from_polar(wr * pre * r * phi, freq * r)));
                }
            }
        }
        Ok(Self {
            n_max,
            rho_max,
            norm: p.norm,
            angular,
            radial,
        })
    }

    /// Ψ^ang_{k,m₂,n}; zero outside the truncation range.
    pub fn angular_factor(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.angular[(n + self.n_max as i64) as usize]
    }

    /// Ψ^rad_{j,m₁,n}(ρ) for n = −n_max..=n_max.
    pub fn radial_factors(&self, rho: f64) -> Vec<Complex64> {
        let nm = self.n_max;
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); 2 * nm + 1];
        for &(r, g) in &self.radial {
            let js = bessel_j_sequence(nm, r * rho);
            for n in 0..=nm {
                let v = g * js[n];
                out[nm + n] += v;
                if n > 0 {
                    if n % 2 == 0 {
                        out[nm - n] += v;
                    } else {
                        out[nm - n] -= v;
                    }
                }
            }
        }
        out
    }

    /// ψ̂(ξ) = (C/2π)Σ_n i^{−n}e^{−inφ}Ψ^rad_n(ρ)Ψ^ang_n.
    pub fn eval(&self, xi: Point) -> Result<Complex64, FourierError> {
        let rho = xi[0].hypot(xi[1]);
        if rho > self.rho_max * (1.0 + 1e-12) {
            return Err(FourierError::RhoOutOfRange { rho, rho_max: self.rho_max });
        }
        let phi = xi[1].atan2(xi[0]);
        let rad = self.radial_factors(rho);
        let nm = self.n_max as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -nm..=nm {
            let i_pow = match n.rem_euclid(4) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            let e = Complex64::from_polar(1.0, -(n as f64) * phi);
            acc += i_pow * e * rad[(n + nm) as usize] * self.angular[(n + nm) as usize];
        }
        Ok(acc * self.norm / (2.0 * PI))
    }
}

/// Boundary transform through the Jacobi–Anger route.
pub fn packet_ft_boundary_bessel(p: &WavePacket, xi: Point) -> Result<Complex64, FourierError> {
    let rho = xi[0].hypot(xi[1]);
    BoundaryFourierFactors::new(p, rho.max(1.0))?.eval(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sectorization::PacketIndex;
    use crate::wavepackets::PacketFamily;

    #[test]
    fn zero_frequency_is_real_positive() {
        let fam = PacketFamily::with_nodes(2, 2.0, -2, 128).unwrap();
        let p = fam.packet(PacketIndex::new(1, 2, [0, 0])).unwrap();
        let v = packet_ft_direct(&p, [0.0, 0.0]);
        assert!(v.re > 0.0 && v.im.abs() < 1e-14 * v.re);
    }

    #[test]
    fn interior_peak_near_frequency_center() {
        let fam = PacketFamily::with_nodes(2, 2.0, -1, 128).unwrap();
        let idx = PacketIndex::new(1, 1, [2, -1]);
        let p = fam.packet(idx).unwrap();
        let c = fam.frequency_center(&idx);
        let mut best = (0.0, [0.0, 0.0]);
        for a in -4..=4 {
            for b in -4..=4 {
                let xi = [c[0] + 0.5 * a as f64, c[1] + 0.5 * b as f64];
                let v = packet_ft_direct_nodes(&p, xi, 64).norm();
                if v > best.0 {
                    best = (v, xi);
                }
            }
        }
        assert!((best.1[0] - c[0]).abs() <= 0.5 && (best.1[1] - c[1]).abs() <= 0.5);
    }

    #[test]
    fn bessel_route_matches_direct() {
        let fam = PacketFamily::with_nodes(2, 2.0, -3, 128).unwrap();
        for &(j, k, m) in &[(-1, 1, [0i64, 0i64]), (-2, 3, [1, -1]), (-3, 4, [-2, 1])] {
            let p = fam.packet(PacketIndex::new(j, k, m)).unwrap();
            let f = BoundaryFourierFactors::new(&p, 1.0).unwrap();
            for &xi in &[[0.3, -0.2], [-0.7, 0.6], [0.0, 0.95]] {
                let a = f.eval(xi).unwrap();
                let b = packet_ft_direct(&p, xi);
                assert!((a - b).norm() <= 1e-8 * b.norm().max(1e-3), "{j} {k} {m:?} {xi:?}: {a} {b}");
            }
        }
    }

    #[test]
    fn angular_factor_is_a_fourier_coefficient() {
        let fam = PacketFamily::with_nodes(2, 1.5, -1, 128).unwrap();
        let p = fam.packet(PacketIndex::new(-1, 2, [0, 1])).unwrap();
        let f = BoundaryFourierFactors::new(&p, 1.0).unwrap();
        for n in [-3i64, 0, 5] {
            let q = -(2 + n);
            let c = eta_coefficient(&p, q);
            assert!((f.angular_factor(n) - 2.0 * PI * c).norm() < 1e-12);
        }
    }

    #[test]
    fn truncation_respects_envelope_tail() {
        let n = truncation_order(8.0, 1.0, 1.0, 1e-10).unwrap();
        assert!(n > 80);
        let tail: f64 = ((n + 1)..(n + 400)).map(|m| (80.0 / m as f64).powi(m as i32)).sum();
        assert!(2.0 * tail < 1e-10);
    }

    #[test]
    fn rejects_interior_packet() {
        let fam = PacketFamily::with_nodes(2, 2.0, -1, 128).unwrap();
        let p = fam.packet(PacketIndex::new(0, 1, [0, 0])).unwrap();
        assert_eq!(BoundaryFourierFactors::new(&p, 1.0).unwrap_err(), FourierError::NotBoundary);
    }
}
