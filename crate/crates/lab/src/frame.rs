//! Frame sums Σ_ν |⟨f, ψ_ν⟩|² by one DFT per sector, and the multiplier
//! w(r) the frame operator reduces to.
//!
//! Within a sector the modulations are an orthogonal basis of the sampling
//! box, so Σ_m |⟨f, ψ_{j,k,m}⟩|² is a weighted L² norm of f·h_{j,k}. Summed
//! over sectors this gives ∫ w |f|², with
//!   w(r) = Σ_{j≥0} C_j² C*² φ_j(r)² + Σ_{j<0} C_j² (16π²/R) r φ_j(r)².
//! Levels below `j_min` are not sampled; their share is integrated directly
//! against w and reported as the tail.

use std::f64::consts::PI;

use num_complex::Complex64;
use plunge_core::geometry::Point;
use plunge_core::math::{GaussLegendre, NeumaierSum};
use plunge_core::sectorization::Sector;
use plunge_core::wavepackets::{PacketFamily, WavePacket};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fft::{bin, signed, Fft2, FftRect};
use crate::sector::{pow2, BoundaryBox, InteriorWindow};
use crate::LabError;

/// A function on the plane, sampled pointwise.
pub trait Field: Sync {
    fn at(&self, x: Point) -> Complex64;
}

impl Field for WavePacket<'_> {
    fn at(&self, x: Point) -> Complex64 {
        self.eval(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Random plane waves with |ξ| ≤ 2.
    BandLimited,
    /// One to four Gaussian bumps plus weaker band-limited noise.
    BumpMixture,
    /// Alternate the two by trial.
    Mixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bump {
    pub center: Point,
    pub width: f64,
    pub amp: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Wave {
    pub xi: Point,
    pub amp: [f64; 2],
}

/// Analytic test function restricted to D(R).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestFunction {
    pub big_r: f64,
    pub bumps: Vec<Bump>,
    pub waves: Vec<Wave>,
}

const WAVES: usize = 12;

fn unit_complex<R: Rng>(rng: &mut R) -> [f64; 2] {
    let t = rng.gen_range(0.0..2.0 * PI);
    let a = rng.gen_range(0.5..1.0);
    [a * t.cos(), a * t.sin()]
}

fn random_waves<R: Rng>(rng: &mut R, scale: f64) -> Vec<Wave> {
    (0..WAVES)
        .map(|_| {
            let r = 2.0 * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..2.0 * PI);
            let a = unit_complex(rng);
            Wave {
                xi: [r * t.cos(), r * t.sin()],
                amp: [scale * a[0], scale * a[1]],
            }
        })
        .collect()
}

impl TestFunction {
    pub fn random<R: Rng>(rng: &mut R, big_r: f64, generator: Generator) -> Self {
        match generator {
            Generator::BandLimited | Generator::Mixed => Self {
                big_r,
                bumps: Vec::new(),
                waves: random_waves(rng, 1.0 / (WAVES as f64).sqrt()),
            },
            Generator::BumpMixture => {
                let n = rng.gen_range(1..=4);
                let rc = big_r - 1.0;
                let bumps = (0..n)
                    .map(|_| {
                        let r = rc * rng.gen::<f64>().sqrt();
                        let t = rng.gen_range(0.0..2.0 * PI);
                        Bump {
                            center: [r * t.cos(), r * t.sin()],
                            width: rng.gen_range(0.5..2.0),
                            amp: unit_complex(rng),
                        }
                    })
                    .collect();
                Self {
                    big_r,
                    bumps,
                    waves: random_waves(rng, 0.3 / (WAVES as f64).sqrt()),
                }
            }
        }
    }

    /// Trial `t` of a seeded run; each trial owns a ChaCha stream.
    pub fn trial(seed: u64, t: u64, big_r: f64, generator: Generator) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        let g = match generator {
            Generator::Mixed if t % 2 == 1 => Generator::BumpMixture,
            Generator::Mixed => Generator::BandLimited,
            g => g,
        };
        Self::random(&mut rng, big_r, g)
    }
}

impl Field for TestFunction {
    fn at(&self, x: Point) -> Complex64 {
        if x[0].hypot(x[1]) >= self.big_r {
            return Complex64::new(0.0, 0.0);
        }
        let mut v = Complex64::new(0.0, 0.0);
        for b in &self.bumps {
            let d2 = (x[0] - b.center[0]).powi(2) + (x[1] - b.center[1]).powi(2);
            v += Complex64::new(b.amp[0], b.amp[1]) * (-0.5 * d2 / (b.width * b.width)).exp();
        }
        for w in &self.waves {
            v += Complex64::new(w.amp[0], w.amp[1]) * Complex64::from_polar(1.0, w.xi[0] * x[0] + w.xi[1] * x[1]);
        }
        v
    }
}

/// ∫ g(r, θ) r dr dθ over the annulus with radial breakpoints `rb`:
/// Gauss–Legendre pieces in r, the periodic trapezoid rule in θ.
pub fn polar_integral<G: Fn(f64, f64) -> f64 + Sync>(rb: &[f64], n_theta: usize, nodes: usize, g: G) -> f64 {
    let gl = GaussLegendre::new(nodes);
    let dt = 2.0 * PI / n_theta as f64;
    let rows: Vec<f64> = rb
        .windows(2)
        .flat_map(|w| gl.mapped(w[0], w[1]))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(r, wr)| {
            let mut acc = NeumaierSum::new();
            for i in 0..n_theta {
                acc.add(g(r, i as f64 * dt));
            }
            acc.value() * wr * r * dt
        })
        .collect();
    let mut acc = NeumaierSum::new();
    rows.iter().for_each(|&v| acc.add(v));
    acc.value()
}

/// Angular node count resolving |ξ| ≤ 2 on the circle of radius R.
fn theta_nodes(big_r: f64) -> usize {
    (16.0 * PI * big_r).ceil().max(64.0) as usize
}

fn uniform_breaks(a: f64, b: f64, piece: f64) -> Vec<f64> {
    let n = ((b - a) / piece).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// ‖f‖² over D(R).
pub fn norm_sq<F: Field>(f: &F, big_r: f64) -> f64 {
    polar_integral(&uniform_breaks(0.0, big_r, 0.5), theta_nodes(big_r), 12, |r, t| {
        f.at([r * t.cos(), r * t.sin()]).norm_sqr()
    })
}

/// Σ_k of the per-sector Parseval factors at radius r for level j.
pub fn level_weight(fam: &PacketFamily, c: f64, j: i32, r: f64) -> f64 {
    let p = fam.radial.phi_or_zero(j, r);
    if p == 0.0 {
        return 0.0;
    }
    if j >= 0 {
        c * c * fam.c_big_star * fam.c_big_star * p * p
    } else {
        c * c * 16.0 * PI * PI / fam.big_r() * r * p * p
    }
}

/// Normalizations of levels `lo..=j_max`, indexed by j − lo.
pub fn norms(fam: &PacketFamily, lo: i32) -> Result<Vec<f64>, LabError> {
    (lo..=fam.j_max as i32).map(|j| Ok(fam.normalization(j)?)).collect()
}

/// w restricted to levels ≥ lo.
pub fn weight(fam: &PacketFamily, norms: &[f64], lo: i32, r: f64) -> f64 {
    fam.radial
        .active(r)
        .iter()
        .filter(|(j, _)| *j >= lo)
        .map(|&(j, _)| level_weight(fam, norms[(j - lo) as usize], j, r))
        .sum()
}

/// Levels deeper than this are below the resolution of R − r in f64.
const DEEPEST: i32 = -40;

/// ∫ w_{<j_min} |f|² directly: one annulus per skipped level.
pub fn deep_contribution<F: Field>(fam: &PacketFamily, f: &F, j_min: i32, deep_norms: &[f64]) -> f64 {
    let n_t = theta_nodes(fam.big_r());
    let mut acc = NeumaierSum::new();
    for j in (DEEPEST..j_min).rev() {
        let c = deep_norms[(j - DEEPEST) as usize];
        let rb = fam.radial.breakpoints(j);
        let v = polar_integral(&rb, n_t, 8, |r, t| {
            let w = level_weight(fam, c, j, r);
            if w == 0.0 {
                0.0
            } else {
                w * f.at([r * t.cos(), r * t.sin()]).norm_sqr()
            }
        });
        acc.add(v);
        if v == 0.0 && j < j_min - 4 {
            break;
        }
    }
    acc.value()
}

/// Sampling layout of one sector, fixed across test functions.
pub struct SectorPlan {
    pub j: i32,
    pub k: u32,
    pub interior: bool,
    /// (nx, ny): columns along x (or r), rows along y (or θ).
    pub dims: (usize, usize),
    /// Grid index, sample point and window value (h, or φη·r for boundary).
    pub support: Vec<(usize, Point, f64)>,
    /// Inner products are `scale · phase(m) · DFT[m]`.
    pub scale: f64,
    /// Measure of one grid cell, for ‖f·h‖².
    pub cell: f64,
    /// (x₀, y₀) or (r₀, θ₀): grid origin.
    pub origin: Point,
    /// Frequency step along each axis.
    pub step: Point,
    /// Radius weight divided out of the boundary window for ‖f·h‖².
    radial_factor: bool,
}

impl SectorPlan {
    pub fn interior(fam: &PacketFamily, j: i32, k: u32, n: usize) -> Result<Self, LabError> {
        let win = InteriorWindow::new(fam, j, k, n);
        let c = fam.normalization(j)?;
        let support = (0..n * n)
            .filter(|&i| win.values[i] != 0.0)
            .map(|i| (i, win.point(i % n, i / n), win.values[i]))
            .collect();
        let f = fam.c_star * pow2(-j);
        Ok(Self {
            j,
            k,
            interior: true,
            dims: (n, n),
            support,
            scale: c * pow2(-j) * win.hs * win.hs,
            cell: win.hs * win.hs,
            origin: win.origin,
            step: [f, f],
            radial_factor: false,
        })
    }

    pub fn boundary(fam: &PacketFamily, j: i32, k: u32, nr: usize, nt: usize) -> Result<Self, LabError> {
        let b = BoundaryBox::new(fam, j, k);
        let c = fam.normalization(j)?;
        let (dr, dt) = (b.len_r / nr as f64, b.len_t / nt as f64);
        let ang = fam.angular_for(j);
        let mut support = Vec::new();
        for iy in 0..nt {
            let t = b.t0 + iy as f64 * dt;
            let e = ang.eta_unchecked(k, t);
            if e == 0.0 {
                continue;
            }
            for ix in 0..nr {
                let r = b.r0 + ix as f64 * dr;
                let p = fam.radial.phi_or_zero(j, r);
                if p != 0.0 {
                    support.push((iy * nr + ix, [r * t.cos(), r * t.sin()], p * e * r));
                }
            }
        }
        Ok(Self {
            j,
            k,
            interior: false,
            dims: (nr, nt),
            support,
            scale: c * 2f64.powf(-0.5 * j as f64) * dr * dt,
            cell: dr * dt,
            origin: [b.r0, b.t0],
            step: [0.5 * pow2(-j), 0.5 * fam.big_r()],
            radial_factor: true,
        })
    }

    /// ‖f·h_{j,k}‖² by the same Riemann sum the DFT sees.
    fn window_mass(&self, samples: &[Complex64]) -> f64 {
        let mut acc = NeumaierSum::new();
        for (v, &(_, p, _)) in samples.iter().zip(&self.support) {
            let r = if self.radial_factor { p[0].hypot(p[1]) } else { 1.0 };
            acc.add(v.norm_sqr() / r);
        }
        acc.value() * self.cell
    }
}

/// Plans for every sector with j ≥ j_min.
pub fn plan_sectors(fam: &PacketFamily, j_min: i32, grid: &GridSizes) -> Result<Vec<SectorPlan>, LabError> {
    let mut out = Vec::new();
    for j in (j_min..=fam.j_max as i32).rev() {
        for k in 1..=fam.arc_count(j) {
            out.push(if j >= 0 {
                SectorPlan::interior(fam, j, k, grid.interior)?
            } else {
                SectorPlan::boundary(fam, j, k, grid.radial, grid.angular)?
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSizes {
    pub interior: usize,
    pub radial: usize,
    pub angular: usize,
}

impl Default for GridSizes {
    fn default() -> Self {
        Self {
            interior: 384,
            radial: 1024,
            angular: 128,
        }
    }
}

enum Plan {
    Square(Fft2),
    Rect(FftRect),
}

/// FFT plans shared by all sectors of a kind.
pub struct Transforms {
    interior: Plan,
    boundary: Plan,
}

impl Transforms {
    pub fn new(grid: &GridSizes) -> Self {
        Self {
            interior: Plan::Square(Fft2::new(grid.interior)),
            boundary: Plan::Rect(FftRect::new(grid.radial, grid.angular)),
        }
    }

    fn run(&self, plan: &SectorPlan, buf: &mut [Complex64]) {
        let p = if plan.interior { &self.interior } else { &self.boundary };
        match p {
            Plan::Square(f) => f.forward(buf),
            Plan::Rect(f) => f.forward(buf),
        }
    }
}

/// Unscaled DFT of the windowed samples plus ‖f·h‖².
fn sector_dft<F: Field>(plan: &SectorPlan, f: &F, tr: &Transforms) -> (Vec<Complex64>, f64) {
    let (nx, ny) = plan.dims;
    let vals: Vec<Complex64> = plan.support.iter().map(|&(_, p, w)| f.at(p) * w).collect();
    let mass = plan.window_mass(&vals);
    let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny];
    for (v, &(i, _, _)) in vals.iter().zip(&plan.support) {
        buf[i] = *v;
    }
    tr.run(plan, &mut buf);
    (buf, mass)
}

/// ⟨f, ψ_{j,k,m}⟩ for every m in the sector's DFT box.
pub struct Coefficients {
    pub j: i32,
    pub k: u32,
    pub dims: (usize, usize),
    values: Vec<Complex64>,
}

impl Coefficients {
    /// Signed index range along each axis.
    pub fn m_range(&self) -> ([i64; 2], [i64; 2]) {
        let (nx, ny) = self.dims;
        let lo = |n: usize| -((n / 2) as i64);
        let hi = |n: usize| (n.div_ceil(2) - 1) as i64;
        ([lo(nx), hi(nx)], [lo(ny), hi(ny)])
    }

    pub fn get(&self, m: [i64; 2]) -> Complex64 {
        let (nx, ny) = self.dims;
        self.values[bin(m[1], ny) * nx + bin(m[0], nx)]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([i64; 2], Complex64)> + '_ {
        let (nx, ny) = self.dims;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| ([signed(i % nx, nx), signed(i / nx, ny)], v))
    }

    pub fn energy(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        self.values.iter().for_each(|v| acc.add(v.norm_sqr()));
        acc.value()
    }
}

/// Inner products of f with every packet of one sector.
pub fn analysis_coefficients<F: Field>(plan: &SectorPlan, f: &F, tr: &Transforms) -> Coefficients {
    let (mut buf, _) = sector_dft(plan, f, tr);
    let (nx, ny) = plan.dims;
    for (i, v) in buf.iter_mut().enumerate() {
        let m = [signed(i % nx, nx) as f64, signed(i / nx, ny) as f64];
        let ph = -(m[0] * plan.step[0] * plan.origin[0] + m[1] * plan.step[1] * plan.origin[1]);
        *v *= Complex64::from_polar(plan.scale, ph);
    }
    Coefficients {
        j: plan.j,
        k: plan.k,
        dims: plan.dims,
        values: buf,
    }
}

/// Σ_m |⟨f, ψ_{j,k,m}⟩|² and ‖f·h_{j,k}‖² for one sector.
pub fn sector_energy<F: Field>(plan: &SectorPlan, f: &F, tr: &Transforms) -> (f64, f64) {
    let (buf, mass) = sector_dft(plan, f, tr);
    let mut acc = NeumaierSum::new();
    buf.iter().for_each(|v| acc.add(v.norm_sqr()));
    (acc.value() * plan.scale * plan.scale, mass)
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn empty() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn merge(&mut self, o: &Range) {
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameSum {
    /// Σ over sampled sectors.
    pub sampled: f64,
    /// ∫ w_{<j_min} |f|².
    pub deep: f64,
    pub norm_sq: f64,
    pub ratio: f64,
    /// deep / ‖f‖².
    pub tail: f64,
    pub interior_c0_c0: Range,
    pub boundary_c0_c0: Range,
}

/// Context for frame sums at one (R, s).
pub struct FrameSetup<'a> {
    pub fam: &'a PacketFamily,
    pub j_min: i32,
    pub plans: Vec<SectorPlan>,
    pub transforms: Transforms,
    deep_norms: Vec<f64>,
}

impl<'a> FrameSetup<'a> {
    pub fn new(fam: &'a PacketFamily, j_min: i32, grid: GridSizes) -> Result<Self, LabError> {
        if j_min >= 0 || j_min <= DEEPEST {
            return Err(LabError::Validation(format!("j_min = {j_min} must lie in ({DEEPEST}, 0)")));
        }
        Ok(Self {
            fam,
            j_min,
            plans: plan_sectors(fam, j_min, &grid)?,
            transforms: Transforms::new(&grid),
            deep_norms: norms(fam, DEEPEST)?,
        })
    }

    pub fn frame_sum<F: Field>(&self, f: &F) -> FrameSum {
        let per: Vec<(f64, f64)> = self.plans.iter().map(|p| sector_energy(p, f, &self.transforms)).collect();
        let mut acc = NeumaierSum::new();
        let mut ri = Range::empty();
        let mut rb = Range::empty();
        for (p, &(e, m)) in self.plans.iter().zip(&per) {
            acc.add(e);
            if m > 1e-14 {
                if p.interior {
                    ri.push(e / m);
                } else {
                    rb.push(e / m);
                }
            }
        }
        let deep = deep_contribution(self.fam, f, self.j_min, &self.deep_norms);
        let n = norm_sq(f, self.fam.big_r());
        let sampled = acc.value();
        FrameSum {
            sampled,
            deep,
            norm_sq: n,
            ratio: (sampled + deep) / n,
            tail: deep / n,
            interior_c0_c0: ri,
            boundary_c0_c0: rb,
        }
    }

    /// ∫ w_{≥j_min} |f|² by polar quadrature, the oracle for `sampled`.
    pub fn weighted_norm<F: Field>(&self, f: &F) -> f64 {
        let fam = self.fam;
        let mut rb: Vec<f64> = Vec::new();
        for j in self.j_min..=fam.j_max as i32 {
            rb.extend(fam.radial.breakpoints(j));
        }
        rb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rb.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut fine = vec![rb[0]];
        for w in rb.windows(2) {
            fine.extend(uniform_breaks(w[0], w[1], 0.5).into_iter().skip(1));
        }
        let lo = self.j_min;
        let nrm = &self.deep_norms[(lo - DEEPEST) as usize..];
        polar_integral(&fine, theta_nodes(fam.big_r()), 12, |r, t| {
            let w = weight(fam, nrm, lo, r);
            if w == 0.0 {
                0.0
            } else {
                w * f.at([r * t.cos(), r * t.sin()]).norm_sqr()
            }
        })
    }
}

/// Smallest j_min whose skipped annulus r > R − 1.1·2^{j_min} has area
/// fraction at most `fraction`.
pub fn default_j_min(big_r: f64, fraction: f64) -> i32 {
    ((fraction * big_r / 2.2).log2().floor() as i32).min(-1)
}

/// Essential range of w over [0, R), all levels included: the exact frame
/// bounds of the infinite family.
pub fn weight_range(fam: &PacketFamily) -> Result<Range, LabError> {
    let nrm = norms(fam, DEEPEST)?;
    let big_r = fam.big_r();
    let mut out = Range::empty();
    let n = 4000;
    for i in 0..n {
        out.push(weight(fam, &nrm, DEEPEST, big_r * (i as f64 + 0.5) / n as f64));
    }
    // near the edge w repeats on dyadic scales; sweep a few octaves finely
    for i in 0..n {
        let d = pow2(-12) * 2f64.powf(4.0 * i as f64 / n as f64);
        out.push(weight(fam, &nrm, DEEPEST, big_r - d));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameReport {
    pub big_r: f64,
    pub s: f64,
    pub trials: usize,
    pub j_min: i32,
    pub a_hat: f64,
    pub b_hat: f64,
    pub ratios: Vec<f64>,
    pub per_sector_c0_c0: SectorConstants,
    /// Largest deep-level share of ‖f‖² over trials.
    pub tail_budget: f64,
    pub unreliable: bool,
    /// ess inf / ess sup of w.
    pub weight_range: Range,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorConstants {
    pub interior: Range,
    pub boundary: Range,
}

pub const TAIL_LIMIT: f64 = 0.01;

/// Min and max of Σ_ν |⟨f, ψ_ν⟩|² / ‖f‖² over seeded random test functions.
pub fn frame_bounds_estimate(
    fam: &PacketFamily,
    trials: usize,
    generator: Generator,
    seed: u64,
    j_min: i32,
    grid: GridSizes,
) -> Result<FrameReport, LabError> {
    if trials < 32 {
        return Err(LabError::Validation(format!("trials = {trials}, need at least 32")));
    }
    let setup = FrameSetup::new(fam, j_min, grid)?;
    let big_r = fam.big_r();
    let mut ratios = Vec::with_capacity(trials);
    let mut ri = Range::empty();
    let mut rb = Range::empty();
    let mut tail: f64 = 0.0;
    for t in 0..trials {
        let f = TestFunction::trial(seed, t as u64, big_r, generator);
        let s = setup.frame_sum(&f);
        ratios.push(s.ratio);
        ri.merge(&s.interior_c0_c0);
        rb.merge(&s.boundary_c0_c0);
        tail = tail.max(s.tail);
    }
    let a_hat = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_hat = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FrameReport {
        big_r,
        s: fam.s(),
        trials,
        j_min,
        a_hat,
        b_hat,
        ratios,
        per_sector_c0_c0: SectorConstants {
            interior: ri,
            boundary: rb,
        },
        tail_budget: tail,
        unreliable: tail > TAIL_LIMIT,
        weight_range: weight_range(fam)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedDerivativeFit {
    pub j: i32,
    pub k: u32,
    pub order: usize,
    /// sup |∂^α h| over the samples, indexed by (α₁, α₂) with |α| ≤ order.
    pub sups: Vec<([usize; 2], f64)>,
    pub c1: f64,
    pub c2: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Central-difference ∂^α of g at x with step h.
fn partial<G: Fn(Point) -> f64>(g: &G, x: Point, a: [usize; 2], h: f64) -> f64 {
    let stencil = |n: usize| -> Vec<(f64, f64)> {
        match n {
            0 => vec![(0.0, 1.0)],
            1 => vec![(-1.0, -0.5), (1.0, 0.5)],
            2 => vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
            _ => vec![(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        }
    };
    let mut acc = 0.0;
    for (dx, wx) in stencil(a[0]) {
        for (dy, wy) in stencil(a[1]) {
            acc += wx * wy * g([x[0] + dx * h, x[1] + dy * h]);
        }
    }
    acc / h.powi((a[0] + a[1]) as i32)
}

/// Fits |∂^α h_{j,k}| ≤ C₁ C₂^{|α|} 2^{−j|α|} (α!)^s over random points of
/// S*_{j,k} for |α| ≤ order.
pub fn mixed_derivative_check(
    fam: &PacketFamily,
    j: i32,
    k: u32,
    order: usize,
    points: usize,
    seed: u64,
) -> Result<MixedDerivativeFit, LabError> {
    if j < 0 || j > fam.j_max as i32 {
        return Err(LabError::Validation(format!("interior sector needed, got j = {j}")));
    }
    if !(1..=3).contains(&order) {
        return Err(LabError::Validation(format!("order {order} outside 1..=3")));
    }
    if k < 1 || k > fam.arc_count(j) {
        return Err(LabError::Validation(format!("arc {k} outside 1..={}", fam.arc_count(j))));
    }
    let sec = Sector::new(fam.j_max, j, k);
    let (r_lo, r_hi) = fam.radial.support_interval(j);
    let (t_lo, t_hi) = fam.angular_for(j).enlarged_arc(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = pow2(j);
    let pts: Vec<Point> = (0..points)
        .map(|_| {
            // unit-scale coordinates times 2^j keep samples scale covariant
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            let r = r_lo + (r_hi - r_lo) * u;
            let t = t_lo + (t_hi - t_lo) * v;
            [r * t.cos(), r * t.sin()]
        })
        .filter(|p| sec.star_contains(*p))
        .collect();
    let g = |x: Point| fam.envelope(j, k, x);
    let h = 2e-3 * scale;
    let mut sups = Vec::new();
    for n in 0..=order {
        for a in 0..=n {
            let alpha = [a, n - a];
            let m = pts.par_iter().map(|&x| partial(&g, x, alpha, h).abs()).reduce(|| 0.0, f64::max);
            sups.push((alpha, m));
        }
    }
    let c1 = sups[0].1;
    let s = fam.s();
    let mut c2: f64 = 0.0;
    for &(a, m) in &sups[1..] {
        let n = (a[0] + a[1]) as f64;
        let fact = (factorial(a[0]) * factorial(a[1])).powf(s);
        c2 = c2.max((m * scale.powf(n) / (c1 * fact)).powf(1.0 / n));
    }
    Ok(MixedDerivativeFit {
        j,
        k,
        order,
        sups,
        c1,
        c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use plunge_core::sectorization::PacketIndex;

    fn small_grid() -> GridSizes {
        GridSizes {
            interior: 256,
            radial: 512,
            angular: 64,
        }
    }

    #[test]
    fn packet_coefficients_pick_out_the_packet() {
        let fam = PacketFamily::new(2, 2.0, -3).unwrap();
        let g = GridSizes::default();
        let tr = Transforms::new(&g);
        for (j, k, m) in [(0, 1, [3i64, -2i64]), (-2, 3, [1, -4])] {
            let p = fam.packet(PacketIndex::new(j, k, m)).unwrap();
            let plan = if j >= 0 {
                SectorPlan::interior(&fam, j, k, g.interior).unwrap()
            } else {
                SectorPlan::boundary(&fam, j, k, g.radial, g.angular).unwrap()
            };
            let c = analysis_coefficients(&plan, &p, &tr);
            assert!((c.get(m) - 1.0).norm() < 1e-4, "{j} {k}: {}", c.get(m));
            let other = c.get([m[0] + 1, m[1]]).norm();
            assert!(other < 1.0, "{other}");
            // a disjoint enlarged sector sees nothing
            let far = if j >= 0 {
                SectorPlan::interior(&fam, j, k + 2, g.interior).unwrap()
            } else {
                SectorPlan::boundary(&fam, j - 2, k, g.radial, g.angular).unwrap()
            };
            assert_eq!(analysis_coefficients(&far, &p, &tr).energy(), 0.0);
        }
    }

    #[test]
    fn frame_sum_matches_weighted_norm() {
        let fam = PacketFamily::new(2, 2.0, -6).unwrap();
        let setup = FrameSetup::new(&fam, -6, small_grid()).unwrap();
        for t in 0..2 {
            let f = TestFunction::trial(7, t, 4.0, Generator::Mixed);
            let s = setup.frame_sum(&f);
            let w = setup.weighted_norm(&f);
            assert!((s.sampled - w).abs() < 1e-3 * w, "{} {w}", s.sampled);
            let wr = weight_range(&fam).unwrap();
            assert!(s.ratio >= wr.min * 0.999 && s.ratio <= wr.max * 1.001);
        }
    }

    #[test]
    fn single_packet_ratio_at_least_one() {
        let fam = PacketFamily::new(2, 2.0, -6).unwrap();
        let setup = FrameSetup::new(&fam, -6, small_grid()).unwrap();
        let p = fam.packet(PacketIndex::new(0, 3, [2, 1])).unwrap();
        let s = setup.frame_sum(&p);
        assert!(s.ratio >= 1.0, "{}", s.ratio);
    }

    #[test]
    fn zero_function_has_zero_coefficients() {
        struct Zero;
        impl Field for Zero {
            fn at(&self, _: Point) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
        }
        let fam = PacketFamily::new(2, 2.0, -1).unwrap();
        let g = small_grid();
        let plan = SectorPlan::interior(&fam, 2, 1, g.interior).unwrap();
        assert_eq!(analysis_coefficients(&plan, &Zero, &Transforms::new(&g)).energy(), 0.0);
    }

    #[test]
    fn derivative_fit_basics() {
        let fam = PacketFamily::new(3, 2.0, -1).unwrap();
        let grads: Vec<f64> = (0..3)
            .map(|j| {
                let f = mixed_derivative_check(&fam, j, 1, 1, 2000, 3).unwrap();
                assert!(f.c1 <= 1.0 + 1e-12);
                f.sups[1..].iter().map(|x| x.1).fold(0.0, f64::max)
            })
            .collect();
        for w in grads.windows(2) {
            let q = w[0] / w[1];
            assert!((1.0..=4.0).contains(&q), "gradient ratio {q}");
        }
        assert!(mixed_derivative_check(&fam, -1, 1, 1, 10, 0).is_err());
    }
}
