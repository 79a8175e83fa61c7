//! Interior (linear phase) and boundary (polar-linear phase) wave packets.
//!
//! Interior: ψ = C·2^{−j}·φ_j(r)·η_{j,k}(θ)·exp(i·c*·2^{−j}·m·x).
//! Boundary: ψ = C·2^{−j/2}·φ_j(r)·η_{0,k}(θ)·exp(i(m₁2^{−j}r + m₂Rθ)/2).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::Point;
use crate::gevrey::{pow2, AngularCutoffs, CutoffError, RadialCutoffs};
use crate::math::{GaussLegendre, NeumaierSum};
use crate::sectorization::{arc_count, PacketIndex, PacketKind, Sector, frequency_step, square_constant};

/// Default Gauss–Legendre nodes per smooth piece.
pub const DEFAULT_NODES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum PacketError {
    Cutoff(CutoffError),
    NotConverged { j: i32, rel_change: f64 },
    ArcIndexOutOfRange { j: i32, k: u32 },
    ScaleAboveMax { j: i32 },
}

impl fmt::Display for PacketError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacketError::Cutoff(e) => write!(f, "{e}"),
            PacketError::NotConverged { j, rel_change } => {
                write!(f, "normalization at scale {j} not converged (relative change {rel_change:.3e})")
            }
            PacketError::ArcIndexOutOfRange { j, k } => write!(f, "arc index {k} invalid at scale {j}"),
            PacketError::ScaleAboveMax { j } => write!(f, "scale {j} above j_max"),
        }
    }
}

impl From<CutoffError> for PacketError {
    fn from(e: CutoffError) -> Self {
        PacketError::Cutoff(e)
    }
}

/// Cutoff families, c* and cached normalizations for one (R, s).
#[derive(Clone, Debug)]
pub struct PacketFamily {
    pub j_max: u32,
    pub radial: RadialCutoffs,
    /// Angular families for j = 0..=j_max.
    pub angular: Vec<AngularCutoffs>,
    pub c_big_star: f64,
    pub c_star: f64,
    nodes: usize,
    norms: BTreeMap<i32, f64>,
}

impl PacketFamily {
    /// Family for R = 2^{j_max}; normalizations for j_min ≤ j ≤ j_max are
    /// precomputed, deeper scales on demand.
    pub fn new(j_max: u32, s: f64, j_min: i32) -> Result<Self, PacketError> {
        Self::with_nodes(j_max, s, j_min, DEFAULT_NODES)
    }

    pub fn with_nodes(j_max: u32, s: f64, j_min: i32, nodes: usize) -> Result<Self, PacketError> {
        let radial = RadialCutoffs::new(j_max, s)?;
        let angular = (0..=j_max as i32)
            .map(|j| AngularCutoffs::new(j_max, j, s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut fam = Self {
            j_max,
            radial,
            angular,
            c_big_star: square_constant(),
            c_star: frequency_step(),
            nodes,
            norms: BTreeMap::new(),
        };
        for j in j_min.min(-1)..=j_max as i32 {
            let c = fam.compute_normalization(j, nodes)?;
            fam.norms.insert(j, c);
        }
        Ok(fam)
    }

    pub fn big_r(&self) -> f64 {
        pow2(self.j_max as i32)
    }

    pub fn s(&self) -> f64 {
        self.radial.s()
    }

    pub fn arc_count(&self, j: i32) -> u32 {
        arc_count(self.j_max, j)
    }

    /// Angular family used by packets at scale j (η_{0,k} for j < 0).
    pub fn angular_for(&self, j: i32) -> &AngularCutoffs {
        &self.angular[j.max(0) as usize]
    }

    /// ∫₀^R φ_j(r)² r dr by piecewise Gauss–Legendre.
    pub fn radial_mass(&self, j: i32, nodes: usize) -> f64 {
        let gl = GaussLegendre::new(nodes);
        let bp = self.radial.breakpoints(j);
        let mut acc = NeumaierSum::new();
        for w in bp.windows(2) {
            acc.add(gl.integrate(w[0], w[1], |r| {
                let p = self.radial.phi_or_zero(j, r);
                p * p * r
            }));
        }
        acc.value()
    }

    /// ∫ η_{j,k}(θ)² dθ by piecewise Gauss–Legendre over Θ*_{j,k}.
    pub fn angular_mass(&self, j: i32, k: u32, nodes: usize) -> f64 {
        let fam = self.angular_for(j);
        let gl = GaussLegendre::new(nodes);
        let bp = fam.breakpoints(k);
        let mut acc = NeumaierSum::new();
        for w in bp.windows(2) {
            acc.add(gl.integrate(w[0], w[1], |t| {
                let e = fam.eta_unchecked(k, t);
                e * e
            }));
        }
        acc.value()
    }

    /// C_{j,k} from the tensor (r, θ) Gauss–Legendre rule; the integrand is
    /// a product, so the tensor rule factors into two 1D rules.
    fn compute_normalization(&self, j: i32, nodes: usize) -> Result<f64, PacketError> {
        let once = |n: usize| {
            let pref = if j >= 0 { pow2(-2 * j) } else { pow2(-j) };
            pref * self.radial_mass(j, n) * self.angular_mass(j, 1, n)
        };
        let a = once(nodes);
        let b = once(2 * nodes);
        let rel_change = (a - b).abs() / b;
        if rel_change > 1e-8 {
            return Err(PacketError::NotConverged { j, rel_change });
        }
        Ok(1.0 / b.sqrt())
    }

    /// Normalization constant C_{j,k}; independent of k by rotation symmetry.
    pub fn normalization(&self, j: i32) -> Result<f64, PacketError> {
        if j > self.j_max as i32 {
            return Err(PacketError::ScaleAboveMax { j });
        }
        match self.norms.get(&j) {
            Some(&c) => Ok(c),
            None => self.compute_normalization(j, self.nodes),
        }
    }

    pub fn packet(&self, index: PacketIndex) -> Result<WavePacket<'_>, PacketError> {
        if index.k < 1 || index.k > self.arc_count(index.j) {
            return Err(PacketError::ArcIndexOutOfRange { j: index.j, k: index.k });
        }
        let norm = self.normalization(index.j)?;
        Ok(WavePacket {
            family: self,
            index,
            norm,
        })
    }

    /// Envelope h_{j,k}(x) = φ_j(|x|)·η_{j,k}(arg x) (η_{0,k} for j < 0).
    pub fn envelope(&self, j: i32, k: u32, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        let p = self.radial.phi_or_zero(j, r);
        if p == 0.0 {
            return 0.0;
        }
        p * self.angular_for(j).eta_unchecked(k, x[1].atan2(x[0]))
    }

    /// Frequency center c*·2^{−j}·m of an interior packet.
    pub fn frequency_center(&self, index: &PacketIndex) -> Point {
        let f = self.c_star * pow2(-index.j);
        [f * index.m[0] as f64, f * index.m[1] as f64]
    }
}

/// A single normalized packet ψ_ν.
#[derive(Clone, Copy, Debug)]
pub struct WavePacket<'a> {
    pub family: &'a PacketFamily,
    pub index: PacketIndex,
    pub norm: f64,
}

impl WavePacket<'_> {
    pub fn kind(&self) -> PacketKind {
        self.index.classify()
    }

    pub fn sector(&self) -> Sector {
        Sector::new(self.family.j_max, self.index.j, self.index.k)
    }

    /// Amplitude C·2^{−j}·h (interior) or C·2^{−j/2}·h (boundary).
    pub fn amplitude(&self, x: Point) -> f64 {
        let j = self.index.j;
        let pref = if j >= 0 { pow2(-j) } else { 2f64.powf(-0.5 * j as f64) };
        self.norm * pref * self.family.envelope(j, self.index.k, x)
    }

    /// Phase (radians) of the modulation at x.
    pub fn phase(&self, x: Point) -> f64 {
        let j = self.index.j;
        let m = self.index.m;
        if j >= 0 {
            let f = self.family.c_star * pow2(-j);
            f * (m[0] as f64 * x[0] + m[1] as f64 * x[1])
        } else {
            let r = x[0].hypot(x[1]);
            let theta = x[1].atan2(x[0]);
            0.5 * (m[0] as f64 * pow2(-j) * r + m[1] as f64 * self.family.big_r() * theta)
        }
    }

    pub fn eval(&self, x: Point) -> Complex64 {
        let a = self.amplitude(x);
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(a, self.phase(x))
    }

    /// ‖ψ‖² by tensor Gauss–Legendre in (r, θ) over S*, evaluating `eval`
    /// directly (an independent check of the stored normalization).
    pub fn norm_squared(&self, nodes: usize) -> f64 {
        let fam = self.family;
        let j = self.index.j;
        let k = self.index.k;
        let gl = GaussLegendre::new(nodes);
        let rb = fam.radial.breakpoints(j);
        let tb = fam.angular_for(j).breakpoints(k);
        let mut acc = NeumaierSum::new();
        for rw in rb.windows(2) {
            for (r, wr) in gl.mapped(rw[0], rw[1]) {
                for tw in tb.windows(2) {
                    for (t, wt) in gl.mapped(tw[0], tw[1]) {
                        let v = self.eval([r * t.cos(), r * t.sin()]).norm_sqr();
                        acc.add(v * r * wr * wt);
                    }
                }
            }
        }
        acc.value()
    }
}

/// Area of the enlarged sector S*_{j,k}, handy for sampling.
pub fn star_area(s: &Sector) -> f64 {
    let dt = (s.star_theta_hi - s.star_theta_lo).min(2.0 * PI);
    0.5 * dt * (s.star_r_outer * s.star_r_outer - s.star_r_inner * s.star_r_inner)
}
