//! Discretized spatio-spectral limiting T_R = P_D B_S P_D on a periodic grid.
//!
//! Space: n×n samples of the box [−L, L]², L = pad·R, spacing h = 2R/grid_n.
//! Frequency: the DFT lattice πk/L. With the unitary DFT the operator is a
//! symmetric product of two orthogonal projections, so its spectrum lies in
//! [0, 1] exactly. Its nonzero eigenvalues are those of the Gram matrix
//!   G_{kl} = D̂[k − l]/n²,  k, l ∈ S ∩ lattice,
//! which is what the dense mode diagonalizes. Padding (pad > 1) refines the
//! frequency lattice so the discrete spectrum approaches the continuum one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use plunge_core::geometry::WellShapedDomain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fft::{bin, signed, Fft2};
use crate::LabError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SsloConfig {
    pub big_r: f64,
    pub domain: WellShapedDomain,
    /// Samples per axis over [−R, R].
    pub grid_n: usize,
    /// Half-width of the periodic box in units of R.
    pub pad: usize,
    /// Number of leading eigenvalues to keep in reports (0 keeps all).
    pub eig_count: usize,
}

impl SsloConfig {
    pub fn new(big_r: f64, domain: WellShapedDomain, grid_n: usize, pad: usize) -> Result<Self, LabError> {
        let c = Self {
            big_r,
            domain,
            grid_n,
            pad,
            eig_count: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let v = |m: String| Err(LabError::Validation(m));
        if !(self.big_r >= 1.0) {
            return v(format!("R = {} must be at least 1", self.big_r));
        }
        if !self.grid_n.is_power_of_two() || (self.grid_n as f64) < 8.0 * self.big_r {
            return v(format!("grid_n = {} must be a power of two ≥ 8R", self.grid_n));
        }
        if self.pad == 0 {
            return v("pad must be positive".into());
        }
        if self.domain.diameter() > 1.0 + 1e-12 || self.domain.max_norm() > 1.0 + 1e-12 {
            return v("S must have diameter ≤ 1 and lie in the unit disk".into());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.grid_n * self.pad
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.big_r / self.grid_n as f64
    }

    pub fn half_width(&self) -> f64 {
        self.pad as f64 * self.big_r
    }
}

/// Masks and FFT plan for one configuration.
pub struct Sslo {
    pub config: SsloConfig,
    n: usize,
    /// Row-major grid indices of samples inside D(R).
    disk: Vec<usize>,
    /// Signed lattice indices inside S.
    lattice: Vec<[i64; 2]>,
    freq_mask: Vec<bool>,
    fft: Fft2,
}

impl Sslo {
    pub fn new(config: SsloConfig) -> Result<Self, LabError> {
        config.validate()?;
        let n = config.n();
        let h = config.spacing();
        let l = config.half_width();
        let r2 = config.big_r * config.big_r;
        let mut disk = Vec::new();
        for iy in 0..n {
            let y = -l + iy as f64 * h;
            for ix in 0..n {
                let x = -l + ix as f64 * h;
                if x * x + y * y < r2 {
                    disk.push(iy * n + ix);
                }
            }
        }
        let step = PI / l;
        let mut lattice = Vec::new();
        let mut freq_mask = vec![false; n * n];
        for ky in 0..n {
            for kx in 0..n {
                let k = [signed(kx, n), signed(ky, n)];
                if config.domain.contains([k[0] as f64 * step, k[1] as f64 * step]) {
                    lattice.push(k);
                    freq_mask[ky * n + kx] = true;
                }
            }
        }
        Ok(Self {
            n,
            disk,
            lattice,
            freq_mask,
            fft: Fft2::new(n),
            config,
        })
    }

    pub fn disk_count(&self) -> usize {
        self.disk.len()
    }

    /// Number of frequency lattice points in S; the rank of the operator.
    pub fn lattice_count(&self) -> usize {
        self.lattice.len()
    }

    /// Dimension of the space the operator acts on (samples inside D(R)).
    pub fn dim(&self) -> usize {
        self.disk.len()
    }

    /// T applied to a full n×n grid function.
    pub fn apply_operator(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(f.len(), n * n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        for &i in &self.disk {
            buf[i] = f[i];
        }
        self.project(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for &i in &self.disk {
            out[i] = buf[i];
        }
        out
    }

    /// B_S on a full grid buffer, in place.
    fn project(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
        for (v, &m) in buf.iter_mut().zip(&self.freq_mask) {
            if !m {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.fft.inverse(buf);
        let s = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// T on vectors indexed by the samples inside D(R).
    pub fn apply_compressed(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (&i, &x) in self.disk.iter().zip(v) {
            buf[i] = x;
        }
        self.project(&mut buf);
        self.disk.iter().map(|&i| buf[i]).collect()
    }

    /// Spread a compressed vector back onto the full grid.
    pub fn expand(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (&i, &x) in self.disk.iter().zip(v) {
            buf[i] = x;
        }
        buf
    }

    /// Frequency-space Gram matrix. D(R) is symmetric about the grid center,
    /// so after the sign change (−1)^{k₁+k₂} the matrix is real.
    pub fn gram(&self) -> Result<DMatrix<f64>, LabError> {
        let n = self.n;
        let mut mask = vec![Complex64::new(0.0, 0.0); n * n];
        for &i in &self.disk {
            mask[i] = Complex64::new(1.0, 0.0);
        }
        self.fft.forward(&mut mask);
        let m = self.lattice.len();
        let nn = (n * n) as f64;
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut worst_imag: f64 = 0.0;
        for a in 0..m {
            for b in 0..=a {
                let q = [self.lattice[a][0] - self.lattice[b][0], self.lattice[a][1] - self.lattice[b][1]];
                // centering the grid on x = 0 multiplies D̂[q] by (−1)^{q₁+q₂}
                let sign = if (q[0] + q[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let v = mask[bin(q[1], n) * n + bin(q[0], n)] * sign / nn;
                worst_imag = worst_imag.max(v.im.abs());
                g[(a, b)] = v.re;
                g[(b, a)] = v.re;
            }
        }
        if worst_imag > 1e-9 {
            return Err(LabError::Validation(format!(
                "Gram matrix not real after centering (|Im| = {worst_imag:.2e}); the grid must be centered"
            )));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub mode: Mode,
    /// Descending; the remaining eigenvalues of T are exactly zero.
    pub eigenvalues: Vec<f64>,
    /// Σλ over the whole spectrum, equal to |D ∩ grid|·|S ∩ lattice|/n².
    pub trace: f64,
    /// (2π)^{−2}|D(1)|·|S|·R².
    pub trace_continuum: f64,
    pub plunge_counts: Vec<(f64, usize)>,
    pub meta: Discretization,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Discretization {
    pub big_r: f64,
    pub grid_n: usize,
    pub pad: usize,
    pub n: usize,
    pub spacing: f64,
    pub disk_samples: usize,
    pub lattice_points: usize,
    /// Distance between D(R) and its nearest periodic copy.
    pub wrap_gap: f64,
    pub iterations: usize,
}

/// Largest Gram size diagonalized densely in `Mode` auto-selection.
pub const DENSE_LIMIT: usize = 4096;

pub fn auto_mode(op: &Sslo) -> Mode {
    if op.lattice_count() <= DENSE_LIMIT {
        Mode::Dense
    } else {
        Mode::Lanczos
    }
}

pub fn eigen_spectrum(op: &Sslo, mode: Mode, epsilons: &[f64], seed: u64) -> Result<SpectrumReport, LabError> {
    let (mut eig, iterations) = match mode {
        Mode::Dense => {
            let g = op.gram()?;
            let e = SymmetricEigen::new(g).eigenvalues;
            (e.iter().cloned().collect::<Vec<_>>(), 0)
        }
        Mode::Lanczos => {
            let l = lanczos(op, op.lattice_count() + 8, seed)?;
            (l.values, l.iterations)
        }
    };
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cfg = &op.config;
    let trace = op.disk_count() as f64 * op.lattice_count() as f64 / (op.n * op.n) as f64;
    let plunge_counts = epsilons.iter().map(|&e| (e, plunge_count(&eig, e))).collect();
    if cfg.eig_count > 0 {
        eig.truncate(cfg.eig_count);
    }
    Ok(SpectrumReport {
        mode,
        eigenvalues: eig,
        trace,
        trace_continuum: PI * cfg.domain.area() * cfg.big_r * cfg.big_r / (4.0 * PI * PI),
        plunge_counts,
        meta: Discretization {
            big_r: cfg.big_r,
            grid_n: cfg.grid_n,
            pad: cfg.pad,
            n: op.n,
            spacing: cfg.spacing(),
            disk_samples: op.disk_count(),
            lattice_points: op.lattice_count(),
            wrap_gap: 2.0 * (cfg.half_width() - cfg.big_r),
            iterations,
        },
    })
}

/// M_ε = #{λ ∈ (ε, 1 − ε)}.
pub fn plunge_count(eigenvalues: &[f64], epsilon: f64) -> usize {
    eigenvalues.iter().filter(|&&l| l > epsilon && l < 1.0 - epsilon).count()
}

/// N_ε = #{λ > ε}.
pub fn count_above(eigenvalues: &[f64], epsilon: f64) -> usize {
    eigenvalues.iter().filter(|&&l| l > epsilon).count()
}

pub struct LanczosResult {
    pub values: Vec<f64>,
    /// Ritz vectors on the samples inside D(R), aligned with `values`.
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization on the compressed operator.
/// Start vectors are drawn from the range of T, which has dimension equal to
/// the lattice count. When a Krylov space closes the run restarts from a
/// fresh range vector orthogonal to the basis, so degenerate eigenvalues
/// are all found; it stops once the range is exhausted.
pub fn lanczos(op: &Sslo, max_iter: usize, seed: u64) -> Result<LanczosResult, LabError> {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha = Vec::new();
    // coupling to the previous vector; 0 at the start of each block
    let mut beta: Vec<f64> = Vec::new();
    let cap = max_iter.min(dim);
    let orthogonalize = |w: &mut Vec<Complex64>, basis: &[Vec<Complex64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
    };
    let mut q: Option<Vec<Complex64>> = None;
    while basis.len() < cap {
        let cur = match q.take() {
            Some(v) => v,
            None => {
                let r: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0)).collect();
                let mut w = op.apply_compressed(&r);
                let n0 = norm(&w);
                orthogonalize(&mut w, &basis);
                let n1 = norm(&w);
                if n1 < 1e-8 * n0 {
                    break;
                }
                if !basis.is_empty() {
                    beta.push(0.0);
                }
                w.into_iter().map(|x| x / n1).collect()
            }
        };
        let mut w = op.apply_compressed(&cur);
        alpha.push(dot(&cur, &w).re);
        basis.push(cur);
        orthogonalize(&mut w, &basis);
        let bn = norm(&w);
        if bn > 1e-10 {
            beta.push(bn);
            q = Some(w.into_iter().map(|x| x / bn).collect());
        }
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let last_beta = match &q {
        Some(_) => *beta.last().unwrap_or(&0.0),
        None => 0.0,
    };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for &i in &order {
        let y = eig.eigenvectors.column(i);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (j, b) in basis.iter().enumerate() {
            let c = y[j];
            v.iter_mut().zip(b).for_each(|(x, z)| *x += c * z);
        }
        values.push(eig.eigenvalues[i]);
        vectors.push(v);
        residuals.push((last_beta * y[k - 1]).abs());
    }
    // Ritz pairs above 1e−4 must be converged
    let worst = values
        .iter()
        .zip(&residuals)
        .filter(|(v, _)| **v > 1e-4)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(LabError::NotConverged { iterations: k });
    }
    Ok(LanczosResult {
        values,
        vectors,
        residuals,
        iterations: k,
    })
}

/// ‖T²v − λ²v‖ for the leading Ritz pairs.
pub fn square_residuals(op: &Sslo, l: &LanczosResult, count: usize) -> Vec<f64> {
    l.values
        .iter()
        .zip(&l.vectors)
        .take(count)
        .map(|(&lam, v)| {
            let t2 = op.apply_compressed(&op.apply_compressed(v));
            let d: Vec<Complex64> = t2.iter().zip(v).map(|(a, b)| a - lam * lam * b).collect();
            norm(&d) / norm(v)
        })
        .collect()
}

/// Which part of the partition a frame vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    I1,
    I2,
    I3,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountingCertificate {
    pub epsilon: f64,
    pub frame_lower: f64,
    pub hypothesis_sum: f64,
    /// (A/2)ε².
    pub threshold: f64,
    pub hypothesis_holds: bool,
    pub plunge: usize,
    /// (2/A)·#I₃.
    pub bound: f64,
    pub conclusion_holds: bool,
    pub margin: f64,
}

/// Smallest eigenvalue of Σ φφ*, the optimal lower frame bound.
pub fn frame_lower_bound(frame: &[DVector<f64>]) -> f64 {
    let d = frame[0].len();
    let mut s = DMatrix::<f64>::zeros(d, d);
    for f in frame {
        s += f * f.transpose();
    }
    SymmetricEigen::new(s).eigenvalues.min()
}

/// Checks the counting lemma on an explicit positive contraction.
pub fn verify_counting_lemma(
    t: &DMatrix<f64>,
    frame: &[DVector<f64>],
    frame_lower: Option<f64>,
    partition: &[Slot],
    epsilon: f64,
) -> Result<CountingCertificate, LabError> {
    let d = t.nrows();
    if t.ncols() != d || frame.len() != partition.len() || frame.is_empty() {
        return Err(LabError::Validation("shape mismatch between T, frame and partition".into()));
    }
    if (t - t.transpose()).amax() > 1e-12 {
        return Err(LabError::Validation("T is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(t.clone()).eigenvalues;
    if eig.min() < -1e-10 || eig.max() > 1.0 + 1e-10 {
        return Err(LabError::Validation("T is not a positive contraction".into()));
    }
    if frame.iter().any(|f| f.len() != d || (f.norm() - 1.0).abs() > 1e-10) {
        return Err(LabError::Validation("frame vectors must be unit norm in the space of T".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(LabError::Validation(format!("ε = {epsilon} outside (0, 1/2)")));
    }
    let a = frame_lower.unwrap_or_else(|| frame_lower_bound(frame));
    let mut sum = 0.0;
    let mut i3 = 0usize;
    for (f, slot) in frame.iter().zip(partition) {
        let tf = t * f;
        match slot {
            Slot::I1 => sum += tf.norm_squared(),
            Slot::I2 => sum += (f - tf).norm_squared(),
            Slot::I3 => i3 += 1,
        }
    }
    let threshold = 0.5 * a * epsilon * epsilon;
    let plunge = eig.iter().filter(|&&l| l > epsilon && l < 1.0 - epsilon).count();
    let bound = 2.0 / a * i3 as f64;
    Ok(CountingCertificate {
        epsilon,
        frame_lower: a,
        hypothesis_sum: sum,
        threshold,
        hypothesis_holds: sum <= threshold,
        plunge,
        bound,
        conclusion_holds: plunge as f64 <= bound,
        margin: bound - plunge as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_disk() -> WellShapedDomain {
        WellShapedDomain::disk([0.0, 0.0], 0.5).unwrap()
    }

    #[test]
    fn operator_is_a_self_adjoint_contraction() {
        let op = Sslo::new(SsloConfig::new(4.0, half_disk(), 32, 2).unwrap()).unwrap();
        let n = op.n;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rand_grid = || -> Vec<Complex64> {
            (0..n * n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
        };
        let f = rand_grid();
        let g = rand_grid();
        let a = dot(&g, &op.apply_operator(&f));
        let b = dot(&op.apply_operator(&g), &f);
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        let tf = op.apply_operator(&f);
        assert!(dot(&f, &tf).re <= dot(&f, &f).re);
        // supported outside D(R)
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        out[0] = Complex64::new(1.0, 0.0);
        assert!(op.apply_operator(&out).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let op = Sslo::new(SsloConfig::new(4.0, half_disk(), 32, 2).unwrap()).unwrap();
        let d = eigen_spectrum(&op, Mode::Dense, &[0.1], 0).unwrap();
        let l = eigen_spectrum(&op, Mode::Lanczos, &[0.1], 3).unwrap();
        for (a, b) in d.eigenvalues.iter().zip(&l.eigenvalues).take(10) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        let sum: f64 = d.eigenvalues.iter().sum();
        assert!((sum - d.trace).abs() < 1e-9);
    }

    #[test]
    fn plunge_window_is_open() {
        assert_eq!(plunge_count(&[0.9, 0.5, 0.05], 0.1), 1);
        assert_eq!(plunge_count(&[0.9, 0.5, 0.05], 0.49), 1);
        assert_eq!(count_above(&[0.9, 0.5, 0.05], 0.5), 1);
    }

    #[test]
    fn counting_lemma_examples() {
        let e = |d: usize, i: usize| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let c = verify_counting_lemma(&t, &[e(2, 0), e(2, 1)], None, &[Slot::I2, Slot::I1], 0.3).unwrap();
        assert!(c.hypothesis_holds && c.conclusion_holds && c.plunge == 0);
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![0.99, 0.5, 0.01]));
        let f = [e(3, 0), e(3, 1), e(3, 2)];
        let c = verify_counting_lemma(&t, &f, Some(1.0), &[Slot::I2, Slot::I3, Slot::I1], 0.2).unwrap();
        assert!((c.hypothesis_sum - 2e-4).abs() < 1e-15);
        assert!(c.hypothesis_holds && c.plunge == 1 && c.bound == 2.0);
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, 0.0]));
        assert!(verify_counting_lemma(&bad, &[e(2, 0), e(2, 1)], None, &[Slot::I1, Slot::I1], 0.1).is_err());
    }
}
