//! Frequency-side energies ∫_S |ψ̂_ν|² of whole packet families.
//!
//! Interior sector (j, k): with h the window and a its autocorrelation,
//!
//!   E_m = C²2^{−2j}/(4π²) ∫ a(y) κ(y) e^{iy·ω_m} dy,   κ(y) = ∫_S e^{−iy·ξ} dξ,
//!
//! and on the sampling grid of the window the lattice ω_m = c*2^{−j}m lands
//! on the even bins of a 2N-point inverse DFT. The table is periodic in m
//! with period N, so it holds the exact periodized sum: its total equals
//! |S|(2^j/c*)², and energy beyond the table is aliased onto it.
//!
//! Boundary level j < 0, S a disk of radius ρ₀ about the origin: by the
//! Jacobi–Anger expansion
//!
//!   E_m = (C²/2π) Σ_n P_{m₁,n} |Ψ^ang_{m₂,n}|²,   P_{m₁,n} = ∫₀^{ρ₀} |Ψ^rad_{m₁,n}(ρ)|² ρ dρ,
//!
//! and Parseval on the (r, θ) box gives Σ_{m₁} P and Σ_{m₂} |Ψ^ang|² in
//! closed form, so the energy outside a residual box is a difference of
//! exactly computed sums.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use plunge_core::bessel::{bessel_j, bessel_j_sequence};
use plunge_core::concentration::{classify_interior, interior_m_box, Part, PartitionParams};
use plunge_core::fourier::{BoundaryFourierFactors, DirectTransform};
use plunge_core::geometry::{Shape, WellShapedDomain};
use plunge_core::math::{GaussLegendre, NeumaierSum};
use plunge_core::sectorization::PacketKind;
use plunge_core::wavepackets::{PacketFamily, WavePacket};
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::fft::{bin, signed, Fft2};
use crate::localize::EnvelopeFit;
use crate::region::{polar_rule, IndicatorFt};
use crate::sector::{pow2, InteriorWindow};

/// Per-packet energy split by Plancherel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergy {
    pub e_in: f64,
    pub e_out: f64,
    /// |E_in(n) − E_in(2n)| between the two quadrature levels.
    pub uncertainty: f64,
}

/// Disk of radius ρ₀ centered at the origin, if S is one.
pub fn centered_disk(s: &WellShapedDomain) -> Option<f64> {
    match s.shape {
        Shape::Disk { center, radius } if center[0] == 0.0 && center[1] == 0.0 => Some(radius),
        _ => None,
    }
}

fn region_integral(p: &WavePacket, s: &WellShapedDomain, n: usize) -> Result<f64, LabError> {
    let rule = polar_rule(s, n, 2 * n);
    let mut acc = NeumaierSum::new();
    if p.kind() == PacketKind::Boundary {
        let f = BoundaryFourierFactors::new(p, s.max_norm())?;
        for (x, w) in rule {
            acc.add(w * f.eval(x)?.norm_sqr());
        }
    } else {
        let t = DirectTransform::new(p, s.max_norm(), 64 + n);
        for (x, w) in rule {
            acc.add(w * t.eval(x).norm_sqr());
        }
    }
    Ok(acc.value())
}

/// E_in = ∫_S |ψ̂|² by a polar rule over S (Jacobi–Anger route for
/// boundary packets, which requires S inside the unit disk), E_out = 1 − E_in.
pub fn energy_in_region(p: &WavePacket, s: &WellShapedDomain, nodes: usize) -> Result<RegionEnergy, LabError> {
    let a = region_integral(p, s, nodes)?;
    let b = region_integral(p, s, 2 * nodes)?;
    let uncertainty = (a - b).abs();
    if uncertainty > 1e-6 {
        return Err(LabError::Validation(format!(
            "energy quadrature uncertainty {uncertainty:.3e} exceeds 1e-6"
        )));
    }
    let e_in = b.clamp(0.0, 1.0);
    Ok(RegionEnergy {
        e_in,
        e_out: 1.0 - e_in,
        uncertainty,
    })
}

/// κ on the lag grid y_q = q·hs, q ∈ [−N, N)², of a 2N-point transform.
pub enum KappaGrid {
    /// Centered disk: κ is real and depends on (|q₁|, |q₂|) only.
    Radial { n: usize, quarter: Vec<f64> },
    Full { n2: usize, values: Vec<Complex64> },
}

impl KappaGrid {
    pub fn new(s: &WellShapedDomain, n: usize, hs: f64) -> Self {
        let ind = IndicatorFt::new(s);
        if centered_disk(s).is_some() {
            let w = n + 1;
            let mut quarter = vec![0.0; w * w];
            for a in 0..w {
                for b in 0..=a {
                    let v = ind.eval([a as f64 * hs, b as f64 * hs]).re;
                    quarter[a * w + b] = v;
                    quarter[b * w + a] = v;
                }
            }
            KappaGrid::Radial { n, quarter }
        } else {
            let n2 = 2 * n;
            let mut values = Vec::with_capacity(n2 * n2);
            for qy in 0..n2 {
                for qx in 0..n2 {
                    values.push(ind.eval([signed(qx, n2) as f64 * hs, signed(qy, n2) as f64 * hs]));
                }
            }
            KappaGrid::Full { n2, values }
        }
    }

    fn at(&self, qx: usize, qy: usize) -> Complex64 {
        match self {
            KappaGrid::Radial { n, quarter } => {
                let n2 = 2 * n;
                let a = signed(qx, n2).unsigned_abs() as usize;
                let b = signed(qy, n2).unsigned_abs() as usize;
                Complex64::new(quarter[a * (n + 1) + b], 0.0)
            }
            KappaGrid::Full { n2, values } => values[qy * n2 + qx],
        }
    }
}

/// Periodized energy table of one interior sector, m ∈ [−N/2, N/2)².
#[derive(Clone, Debug)]
pub struct InteriorTable {
    pub j: i32,
    pub k: u32,
    pub n: usize,
    /// Row-major in (m₂, m₁), bins taken mod N.
    pub values: Vec<f64>,
    /// Most negative raw value before clamping (rounding noise).
    pub min_raw: f64,
    /// Σ_m E_m against |S|(2^j/c*)².
    pub total: f64,
    pub exact_total: f64,
}

impl InteriorTable {
    pub fn compute(
        fam: &PacketFamily,
        s: &WellShapedDomain,
        j: i32,
        k: u32,
        n: usize,
        kappa: &KappaGrid,
        fft: &Fft2,
    ) -> Result<Self, LabError> {
        let n2 = 2 * n;
        if fft.len() != n2 {
            return Err(LabError::Validation("transform size must be twice the window grid".into()));
        }
        let w = InteriorWindow::new(fam, j, k, n);
        let c = fam.normalization(j)?;
        let hs = w.hs;
        let mut buf = vec![Complex64::new(0.0, 0.0); n2 * n2];
        for iy in 0..n {
            for ix in 0..n {
                buf[iy * n2 + ix] = Complex64::new(w.values[iy * n + ix], 0.0);
            }
        }
        fft.forward(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        fft.inverse(&mut buf);
        // a_q = hs²·Σ_x h(x)h(x+q); then b_q = hs²·a_q·κ(y_q)
        let scale = hs.powi(4) / (n2 * n2) as f64;
        for qy in 0..n2 {
            for qx in 0..n2 {
                let i = qy * n2 + qx;
                buf[i] = buf[i].re * scale * kappa.at(qx, qy);
            }
        }
        fft.inverse(&mut buf);
        let pre = c * c * pow2(-2 * j) / (4.0 * PI * PI);
        let mut values = vec![0.0; n * n];
        let mut min_raw: f64 = 0.0;
        let mut total = NeumaierSum::new();
        for a in 0..n {
            for b in 0..n {
                let (m1, m2) = (signed(b, n), signed(a, n));
                let v = buf[bin(2 * m2, n2) * n2 + bin(2 * m1, n2)].re * pre;
                min_raw = min_raw.min(v);
                total.add(v);
                values[a * n + b] = v.max(0.0);
            }
        }
        let exact_total = s.area() * (pow2(j) / fam.c_star).powi(2);
        Ok(Self {
            j,
            k,
            n,
            values,
            min_raw,
            total: total.value(),
            exact_total,
        })
    }

    pub fn get(&self, m: [i64; 2]) -> f64 {
        self.values[bin(m[1], self.n) * self.n + bin(m[0], self.n)]
    }
}

/// Part of every m in [−N/2, N/2)² at scale j (same layout as the table).
pub fn interior_classes(p: &PartitionParams, s: &WellShapedDomain, j: i32, n: usize) -> Vec<Part> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            out.push(classify_interior(p, s, j, [signed(b, n), signed(a, n)]));
        }
    }
    out
}

/// Smallest admissible grid: N ≥ `n_min` and N ≥ 2·(m-box + 1) at every
/// interior scale, so no residual index shares a bin with its alias.
pub fn interior_grid_size(p: &PartitionParams, s: &WellShapedDomain, n_min: usize) -> usize {
    let mb = (0..=p.j_max as i32).map(|j| interior_m_box(p, s, j)).max().unwrap_or(0);
    n_min.max((2 * (mb as usize + 1)).next_power_of_two())
}

/// Rotations by multiples of π/2 permuting the m(j) arcs: the lattice, a
/// centered disk and the classification are invariant under them.
pub fn rotation_orbit(arcs: u32) -> u32 {
    match arcs % 4 {
        0 => 4,
        2 => 2,
        _ => 1,
    }
}

/// Sums for one interior scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteriorScaleEnergy {
    pub j: i32,
    pub sectors: u32,
    pub computed_sectors: u32,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub i1_in_table: u64,
    pub residual_cells: u64,
    /// Envelope bound on I₁ energy aliased onto non-I₁ cells.
    pub alias_tail: f64,
    /// max over sectors of |total − exact| / exact.
    pub total_rel_err: f64,
}

/// Largest I₁ energies seen, for the per-packet CSV.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PacketEnergy {
    pub j: i32,
    pub k: u32,
    pub m1: i64,
    pub m2: i64,
    pub part: Part,
    pub energy: f64,
}

/// Interior sums over all sectors of scale j. `fit` bounds |ψ̂|/2^j in
/// u = 2^j·dist(ξ, ω) and supplies the aliasing tail.
pub fn interior_scale_energy(
    fam: &PacketFamily,
    s: &WellShapedDomain,
    p: &PartitionParams,
    j: i32,
    n: usize,
    fit: &EnvelopeFit,
    keep_above: f64,
    kept: &mut Vec<PacketEnergy>,
) -> Result<InteriorScaleEnergy, LabError> {
    let arcs = fam.arc_count(j);
    let orbit = if centered_disk(s).is_some() { rotation_orbit(arcs) } else { 1 };
    let fft = Fft2::new(2 * n);
    let hs = fam.c_big_star * pow2(j) / n as f64;
    let kappa = KappaGrid::new(s, n, hs);
    let classes = interior_classes(p, s, j, n);
    let residual_cells = classes.iter().filter(|&&c| c != Part::I1).count() as u64;
    let i1_in_table = classes.len() as u64 - residual_cells;

    let mut e = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    let mut rel: f64 = 0.0;
    for k in 1..=arcs / orbit {
        let t = InteriorTable::compute(fam, s, j, k, n, &kappa, &fft)?;
        rel = rel.max((t.total - t.exact_total).abs() / t.exact_total);
        for (i, &v) in t.values.iter().enumerate() {
            let part = classes[i];
            let (m1, m2) = (signed(i % n, n), signed(i / n, n));
            match part {
                Part::I1 => {
                    e[0].add(v);
                    if v > keep_above {
                        kept.push(PacketEnergy { j, k, m1, m2, part, energy: v });
                    }
                }
                // I₂ members leak through E_out = 1 − E_in
                Part::I2 => e[1].add(1.0 - v),
                Part::I3 => e[2].add(v),
            }
        }
    }
    let mul = orbit as f64;
    // nearest aliases sit N cells away from a residual cell of the m-box
    let mb = interior_m_box(p, s, j) as f64;
    let step = fam.c_star;
    let u0 = ((n as f64 - mb) * step - pow2(j) * s.max_norm()).max(0.0);
    let u1 = u0 + n as f64 * step;
    let per_cell = s.area() * pow2(2 * j) * (8.0 * fit.bound(u0).powi(2) + 16.0 * fit.bound(u1).powi(2));
    Ok(InteriorScaleEnergy {
        j,
        sectors: arcs,
        computed_sectors: arcs / orbit,
        e1: e[0].value() * mul,
        e2: e[1].value() * mul,
        e3: e[2].value() * mul,
        i1_in_table,
        residual_cells,
        alias_tail: per_cell * residual_cells as f64 * arcs as f64,
        total_rel_err: rel,
    })
}

/// Boundary energies of one level j < 0 (all R arcs; the energies do not
/// depend on k for a centered disk).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryLevelEnergy {
    pub j: i32,
    pub arcs: u32,
    /// Σ over all m, closed form.
    pub total: f64,
    /// Σ over the residual box |m₁|, |m₂| ≤ B.
    pub in_box: f64,
    /// total − in_box, computed without cancellation.
    pub outside: f64,
    pub n_max: usize,
}

fn radial_rule(fam: &PacketFamily, j: i32, omega: f64) -> Vec<(f64, f64)> {
    let bp = fam.radial.breakpoints(j);
    let mut out = Vec::new();
    for w in bp.windows(2) {
        let nodes = 64 + (0.7 * omega * (w[1] - w[0])).ceil() as usize;
        let gl = GaussLegendre::new(nodes);
        for (r, wr) in gl.mapped(w[0], w[1]) {
            let phi = fam.radial.phi_or_zero(j, r);
            if phi != 0.0 {
                out.push((r, wr * phi));
            }
        }
    }
    out
}

fn angular_rule(fam: &PacketFamily, omega: f64) -> Vec<(f64, f64)> {
    let ang = fam.angular_for(-1);
    let bp = ang.breakpoints(1);
    let mut out = Vec::new();
    for w in bp.windows(2) {
        let nodes = 64 + (0.7 * omega * (w[1] - w[0])).ceil() as usize;
        let gl = GaussLegendre::new(nodes);
        for (t, wt) in gl.mapped(w[0], w[1]) {
            let e = ang.eta_unchecked(1, t);
            if e != 0.0 {
                out.push((t, wt * e));
            }
        }
    }
    out
}

/// Smallest n_max with |J_n(t_max)| < 1e−18 for all n > n_max
/// (|J_n(t)| increases in t on [0, n]).
pub fn bessel_cutoff(t_max: f64) -> usize {
    let mut n = t_max.ceil() as usize + 1;
    while bessel_j(n as i64, t_max).abs() >= 1e-18 {
        n += 1;
    }
    n
}

/// Boundary level energies for S a centered disk of radius ρ₀ and residual
/// box half-width B (B < 0 puts the whole level outside).
pub fn boundary_level_energy(fam: &PacketFamily, rho0: f64, j: i32, b: i64, rho_nodes: usize) -> Result<BoundaryLevelEnergy, LabError> {
    let big_r = fam.big_r();
    let c = fam.normalization(j)?;
    let arcs = fam.arc_count(j);
    let (_, r_hi) = fam.radial.support_interval(j);
    let n_max = bessel_cutoff(r_hi * rho0);
    let half_j = pow2(j).sqrt();
    let len_r = 4.0 * PI * pow2(j);
    let len_t = 4.0 * PI / big_r;

    // angular: Σ_{|m₂|≤B} |Ψ^ang_{m₂,n}|² and the closed-form Σ over all m₂
    let bb = b.max(-1);
    let omega_a = (bb.max(0) as f64) * big_r / 2.0 + n_max as f64;
    let arule = angular_rule(fam, omega_a);
    let eta_sq: f64 = angular_rule(fam, 0.0).iter().map(|&(t, w)| w * fam.angular_for(-1).eta_unchecked(1, t)).sum();
    let a_tot = len_t * eta_sq;
    let nn = 2 * n_max + 1;
    let mut a_in = vec![0.0; nn];
    for m2 in -bb.max(0)..=bb {
        for (i, n) in (-(n_max as i64)..=n_max as i64).enumerate() {
            let om = m2 as f64 * big_r / 2.0 + n as f64;
            let z: Complex64 = arule.iter().map(|&(t, w)| Complex64::from_polar(w, om * t)).sum();
            a_in[i] += z.norm_sqr();
        }
    }

    // radial: P_{m₁,n} = ∫₀^{ρ₀}|Ψ^rad_{m₁,n}(ρ)|²ρdρ via G·J
    let omega_r = (bb.max(0) as f64) * pow2(-j) / 2.0 + rho0;
    let rrule = radial_rule(fam, j, omega_r);
    let gl = GaussLegendre::new(rho_nodes);
    let rho: Vec<(f64, f64)> = gl.mapped(0.0, rho0).collect();
    let nr = rrule.len();
    let cols = (n_max + 1) * rho.len();
    let mut jm = DMatrix::<f64>::zeros(nr, cols);
    // Σ_{m₁}|Ψ^rad|² = len_r·∫|2^{−j/2} r φ_j J_n(rρ)|² dr on the same rule
    let mut p_tot = vec![0.0; n_max + 1];
    for (i, &(r, w)) in rrule.iter().enumerate() {
        let phi = fam.radial.phi_or_zero(j, r);
        let w0 = w / phi;
        for (q, &(rq, wq)) in rho.iter().enumerate() {
            let js = bessel_j_sequence(n_max, r * rq);
            for n in 0..=n_max {
                jm[(i, n * rho.len() + q)] = js[n];
                let g = r * phi * js[n] / half_j;
                p_tot[n] += len_r * w0 * g * g * wq * rq;
            }
        }
    }
    let mut p_in = vec![0.0; n_max + 1];
    if bb >= 0 {
        let m1s: Vec<i64> = (-bb..=bb).collect();
        let mut gr = DMatrix::<f64>::zeros(m1s.len(), nr);
        let mut gi = DMatrix::<f64>::zeros(m1s.len(), nr);
        for (a, &m1) in m1s.iter().enumerate() {
            let f = 0.5 * m1 as f64 * pow2(-j);
            for (i, &(r, w)) in rrule.iter().enumerate() {
                let amp = w * r / half_j;
                gr[(a, i)] = amp * (f * r).cos();
                gi[(a, i)] = amp * (f * r).sin();
            }
        }
        let pr = &gr * &jm;
        let pi = &gi * &jm;
        for a in 0..m1s.len() {
            for n in 0..=n_max {
                for (q, &(rq, wq)) in rho.iter().enumerate() {
                    let col = n * rho.len() + q;
                    p_in[n] += (pr[(a, col)].powi(2) + pi[(a, col)].powi(2)) * wq * rq;
                }
            }
        }
    }

    let pre = c * c / (2.0 * PI);
    let (mut total, mut in_box, mut outside) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for (i, n) in (-(n_max as i64)..=n_max as i64).enumerate() {
        let na = n.unsigned_abs() as usize;
        let p_out = (p_tot[na] - p_in[na]).max(0.0);
        let a_out = (a_tot - a_in[i]).max(0.0);
        total.add(p_tot[na] * a_tot);
        in_box.add(p_in[na] * a_in[i]);
        outside.add(p_out * a_tot + p_in[na] * a_out);
    }
    let f = pre * arcs as f64;
    Ok(BoundaryLevelEnergy {
        j,
        arcs,
        total: total.value() * f,
        in_box: in_box.value() * f,
        outside: outside.value() * f,
        n_max,
    })
}

/// Closed-form level total R·C_j²(4/R)|S|∫φ_j²r²dr∫η²dθ.
pub fn boundary_level_total(fam: &PacketFamily, area: f64, j: i32) -> Result<f64, LabError> {
    let c = fam.normalization(j)?;
    let gl = GaussLegendre::new(128);
    let bp = fam.radial.breakpoints(j);
    let mut rad = NeumaierSum::new();
    for w in bp.windows(2) {
        rad.add(gl.integrate(w[0], w[1], |r| {
            let p = fam.radial.phi_or_zero(j, r);
            p * p * r * r
        }));
    }
    let big_r = fam.big_r();
    Ok(fam.arc_count(j) as f64 * c * c * 4.0 / big_r * area * rad.value() * fam.angular_mass(-1, 1, 128))
}

/// Everything `energy` reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergySums {
    pub e1_interior: f64,
    pub e1_boundary: f64,
    pub e1: f64,
    pub e2: f64,
    pub tail: f64,
    pub eps_sq: f64,
    pub tail_overflow: bool,
    pub pass: bool,
    pub grid_n: usize,
    pub interior: Vec<InteriorScaleEnergy>,
    pub boundary: Vec<BoundaryLevelEnergy>,
    /// Levels j ≤ −L computed one by one down to this scale; deeper ones
    /// enter the tail through 4R|S|·2^{j}.
    pub deep_levels_to: i32,
}

/// E₁ + E₂ + tail for the partition p, S a centered disk.
pub fn energy_sums(
    fam: &PacketFamily,
    s: &WellShapedDomain,
    p: &PartitionParams,
    fit: &EnvelopeFit,
    n_min: usize,
    kept: &mut Vec<PacketEnergy>,
) -> Result<EnergySums, LabError> {
    let rho0 = centered_disk(s).ok_or_else(|| {
        LabError::Validation("boundary energies need S to be a disk centered at the origin".into())
    })?;
    let n = interior_grid_size(p, s, n_min);
    let mut interior = Vec::new();
    for j in 0..=p.j_max as i32 {
        interior.push(interior_scale_energy(fam, s, p, j, n, fit, 1e-9, kept)?);
    }
    let bbox = p.boundary_box();
    let mut boundary = Vec::new();
    for &j in &p.boundary_scales() {
        boundary.push(boundary_level_energy(fam, rho0, j, bbox, 48)?);
    }
    // levels j ≤ −L belong to I₁ entirely
    let l = p.log_inv_delta();
    let first_deep = -(l.ceil() as i32);
    let first_deep = if (first_deep as f64) > -l { first_deep - 1 } else { first_deep };
    let deep_to = first_deep - 20;
    let mut deep = NeumaierSum::new();
    for j in (deep_to..=first_deep).rev() {
        deep.add(boundary_level_total(fam, s.area(), j)?);
    }
    let big_r = fam.big_r();
    let deep_tail = 4.0 * big_r * s.area() * big_r * pow2(deep_to);

    let e1_interior: f64 = interior.iter().map(|x| x.e1).sum();
    let e1_boundary = boundary.iter().map(|x| x.outside).sum::<f64>() + deep.value();
    let e2: f64 = interior.iter().map(|x| x.e2).sum();
    let tail = interior.iter().map(|x| x.alias_tail).sum::<f64>() + deep_tail;
    let eps_sq = p.epsilon * p.epsilon;
    let e1 = e1_interior + e1_boundary;
    Ok(EnergySums {
        e1_interior,
        e1_boundary,
        e1,
        e2,
        tail,
        eps_sq,
        tail_overflow: tail > eps_sq / 10.0,
        pass: e1 + e2 + tail <= eps_sq,
        grid_n: n,
        interior,
        boundary,
        deep_levels_to: deep_to,
    })
}

/// ∫_S C²2^{2j}exp(−2c(2^j|ξ − ω|)^{1/s}) dξ: the single-packet energy
/// bound obtained by integrating a fitted interior envelope over S.
pub fn interior_envelope_energy(fit: &EnvelopeFit, s: &WellShapedDomain, j: i32, omega: [f64; 2]) -> f64 {
    polar_rule(s, 48, 96)
        .iter()
        .map(|&(x, w)| {
            let u = pow2(j) * (x[0] - omega[0]).hypot(x[1] - omega[1]);
            w * (pow2(j) * fit.bound(u)).powi(2)
        })
        .sum()
}

/// Margins (A, C_bdry), each the smallest power of two whose computed
/// leakage at the probe partition is at most ε²/4: interior I₁ for A,
/// boundary I₁ inside the levels −L < j < 0 for C_bdry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a_margin: f64,
    pub c_bdry: f64,
    pub probe_r: f64,
    pub probe_eps: f64,
    pub interior_leak: f64,
    pub boundary_leak: f64,
}

pub fn calibrate_margins(
    fam: &PacketFamily,
    s: &WellShapedDomain,
    epsilon: f64,
    c_cal: f64,
    fit: &EnvelopeFit,
    n_min: usize,
) -> Result<Calibration, LabError> {
    let rho0 = centered_disk(s)
        .ok_or_else(|| LabError::Validation("calibration needs S to be a disk centered at the origin".into()))?;
    let target = epsilon * epsilon / 4.0;
    let mut a = 1.0;
    let interior_leak = loop {
        let p = PartitionParams::new(epsilon, fam.j_max, fam.s(), c_cal, a, 1.0);
        let n = interior_grid_size(&p, s, n_min);
        let mut e = 0.0;
        for j in 0..=fam.j_max as i32 {
            e += interior_scale_energy(fam, s, &p, j, n, fit, f64::INFINITY, &mut Vec::new())?.e1;
        }
        if e <= target || a >= 64.0 {
            break e;
        }
        a *= 2.0;
    };
    let mut c = 1.0;
    let boundary_leak = loop {
        let p = PartitionParams::new(epsilon, fam.j_max, fam.s(), c_cal, a, c);
        let mut e = 0.0;
        for &j in &p.boundary_scales() {
            e += boundary_level_energy(fam, rho0, j, p.boundary_box(), 48)?.outside;
        }
        if e <= target || c >= 64.0 {
            break e;
        }
        c *= 2.0;
    };
    Ok(Calibration {
        a_margin: a,
        c_bdry: c,
        probe_r: fam.big_r(),
        probe_eps: epsilon,
        interior_leak,
        boundary_leak,
    })
}
