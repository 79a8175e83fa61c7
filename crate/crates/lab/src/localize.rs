//! Fourier localization: envelope fits of the form C·exp(−c·u^{1/s}) and the
//! decay checks for cutoffs, interior packets, boundary factors and Bessel
//! functions.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use plunge_core::bessel::bessel_j;
use plunge_core::fourier::BoundaryFourierFactors;
use plunge_core::sectorization::PacketIndex;
use plunge_core::wavepackets::PacketFamily;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::fft::{signed, Fft2};
use crate::sector::{pow2, InteriorWindow};

/// log v ≈ ln C − c·u^p fitted on envelope maxima; `c_big` is then raised
/// so the bound holds at every envelope point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c_big: f64,
    pub c: f64,
    pub exponent: f64,
    pub r2: f64,
    pub points: usize,
    pub decades: f64,
}

impl EnvelopeFit {
    pub fn bound(&self, u: f64) -> f64 {
        self.c_big * (-self.c * u.max(0.0).powf(self.exponent)).exp()
    }
}

/// Maximum of v over unit-width bins of u (bins with no samples dropped).
pub fn binned_max(samples: impl IntoIterator<Item = (f64, f64)>, width: f64) -> Vec<(f64, f64)> {
    let mut bins: Vec<f64> = Vec::new();
    for (u, v) in samples {
        if !(u >= 0.0) || !v.is_finite() {
            continue;
        }
        let b = (u / width) as usize;
        if b >= bins.len() {
            bins.resize(b + 1, -1.0);
        }
        bins[b] = bins[b].max(v);
    }
    bins.iter()
        .enumerate()
        .filter(|(_, &v)| v >= 0.0)
        .map(|(i, &v)| ((i as f64 + 0.5) * width, v))
        .collect()
}

/// Points exceeding both neighbours, plus the first point.
pub fn local_maxima(env: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..env.len() {
        let l = if i > 0 { env[i - 1].1 } else { f64::NEG_INFINITY };
        let r = if i + 1 < env.len() { env[i + 1].1 } else { f64::NEG_INFINITY };
        if env[i].1 > 0.0 && env[i].1 >= l && env[i].1 >= r {
            out.push(env[i]);
        }
    }
    out
}

/// Least squares of ln v against u^p; returns (ln C, c, R²).
pub fn fit_stretched_exp(points: &[(f64, f64)], p: f64) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(u, v)| (u.powf(p), v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let syy: f64 = pts.iter().map(|q| (q.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some((my - slope * mx, -slope, r2))
}

/// Envelope fit over the local maxima of a binned envelope.
pub fn envelope_fit(env: &[(f64, f64)], exponent: f64, min_decades: f64) -> Result<EnvelopeFit, LabError> {
    let peaks = local_maxima(env);
    let hi = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
    let lo = peaks.iter().map(|p| p.1).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let decades = (hi / lo).log10();
    if !(decades >= min_decades) {
        return Err(LabError::DegenerateFit { decades });
    }
    let (_, c, r2) = fit_stretched_exp(&peaks, exponent).ok_or(LabError::DegenerateFit { decades })?;
    let c_big = env
        .iter()
        .map(|&(u, v)| v * (c * u.powf(exponent)).exp())
        .fold(0.0, f64::max);
    Ok(EnvelopeFit {
        c_big,
        c,
        exponent,
        r2,
        points: peaks.len(),
        decades,
    })
}

/// Result of comparing a measured DFT envelope with an a-priori bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayCheck {
    pub fit: Option<EnvelopeFit>,
    /// max over envelope points of measured / bound.
    pub worst_ratio: f64,
    pub dominated: bool,
    pub edge_mass: f64,
}

/// Continuous transform (2π)^{−1/2}∫w e^{−iξx}dx of a 1D window sampled at
/// spacing dx; returns (|ξ|, |ŵ|) pairs from the DFT.
pub fn dft_1d(samples: &[f64], dx: f64) -> Result<Vec<(f64, f64)>, LabError> {
    let n = samples.len();
    let total: f64 = samples.iter().map(|v| v.abs()).sum();
    let edge: f64 = samples[..n / 64].iter().chain(&samples[n - n / 64..]).map(|v| v.abs()).sum();
    let edge_mass = if total > 0.0 { edge / total } else { 0.0 };
    if edge_mass > 1e-12 {
        return Err(LabError::Aliasing { edge_mass });
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = dx / (2.0 * PI).sqrt();
    Ok(buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let xi = 2.0 * PI * signed(k, n).unsigned_abs() as f64 / (n as f64 * dx);
            (xi, z.norm() * scale)
        })
        .collect())
}

/// Decay check for a sampled 1D Gevrey window against the bound
/// e^{1/2}·A·H·exp(−(|ξ|/B)^{1/s}/(2e)).
pub fn fourier_decay_check(
    samples: &[f64],
    dx: f64,
    support_measure: f64,
    a: f64,
    b: f64,
    s: f64,
) -> Result<DecayCheck, LabError> {
    if samples.len() < 1 << 12 {
        return Err(LabError::Validation("decay check needs at least 2^12 samples".into()));
    }
    if samples.iter().all(|&v| v == 0.0) {
        return Ok(DecayCheck {
            fit: None,
            worst_ratio: 0.0,
            dominated: true,
            edge_mass: 0.0,
        });
    }
    let spec = dft_1d(samples, dx)?;
    let xi_max = spec.iter().map(|p| p.0).fold(0.0, f64::max);
    let width = 2.0 * PI / (samples.len() as f64 * dx) * 4.0;
    let env: Vec<(f64, f64)> = binned_max(spec.iter().copied().filter(|p| p.0 < 0.8 * xi_max), width);
    let bound = |xi: f64| E.sqrt() * a * support_measure * (-(xi / b).powf(1.0 / s) / (2.0 * E)).exp();
    let worst = env.iter().map(|&(u, v)| v / bound(u + 0.5 * width)).fold(0.0, f64::max);
    let peaks: Vec<(f64, f64)> = env.iter().copied().filter(|p| p.1 > 1e-13).collect();
    let fit = envelope_fit(&peaks, 1.0 / s, 1.0).ok();
    Ok(DecayCheck {
        fit,
        worst_ratio: worst,
        dominated: worst <= 1.0,
        edge_mass: 0.0,
    })
}

/// Fourier coefficients (1/2π)∫η e^{−inθ}dθ of a 2π-periodic function from
/// n uniform samples (periodic trapezoid rule), indexed by signed n.
pub fn periodic_coefficients(samples: &[f64]) -> Vec<(i64, Complex64)> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(k, z)| (signed(k, n), z / n as f64))
        .collect()
}

/// Periodic analogue: |η̂(n)| against e^{1/2}·A·H·exp(−(|n|/B)^{1/s}/(2e)).
pub fn periodic_decay_check(samples: &[f64], support_measure: f64, a: f64, b: f64, s: f64) -> DecayCheck {
    let coef = periodic_coefficients(samples);
    let n = samples.len() as i64;
    let bound = |q: f64| E.sqrt() * a * support_measure * (-(q / b).powf(1.0 / s) / (2.0 * E)).exp();
    let pts: Vec<(f64, f64)> = coef
        .iter()
        .filter(|(q, _)| q.abs() < n * 2 / 5)
        .map(|(q, z)| (q.unsigned_abs() as f64, z.norm()))
        .collect();
    let worst = pts.iter().map(|&(q, v)| v / bound(q)).fold(0.0, f64::max);
    let env = binned_max(pts.iter().copied().filter(|p| p.1 > 1e-14), 1.0);
    DecayCheck {
        fit: envelope_fit(&env, 1.0 / s, 1.0).ok(),
        worst_ratio: worst,
        dominated: worst <= 1.0,
        edge_mass: 0.0,
    }
}

/// |ψ̂| of an interior packet sampled on a frequency grid of spacing
/// c*2^{−j}/pad around its center, as (u, |ψ̂|/2^j) with u = |2^jξ − c*m|.
pub fn interior_spectrum_samples(fam: &PacketFamily, j: i32, k: u32, n: usize, pad: usize) -> Result<Vec<(f64, f64)>, LabError> {
    let w = InteriorWindow::new(fam, j, k, n);
    let c = fam.normalization(j)?;
    let big = n * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); big * big];
    for iy in 0..n {
        for ix in 0..n {
            buf[iy * big + ix] = Complex64::new(w.values[iy * n + ix], 0.0);
        }
    }
    Fft2::new(big).forward(&mut buf);
    // ψ̂(η + ω_m) = C·2^{−j}·ĥ(η), ĥ ≈ hs²/(2π)·DFT; frequency step 2π/(big·hs)
    let scale = c * pow2(-j) * w.hs * w.hs / (2.0 * PI) / pow2(j);
    let step = 2.0 * PI / (big as f64 * w.hs);
    let mut out = Vec::with_capacity(big * big);
    for ky in 0..big {
        for kx in 0..big {
            let e = [signed(kx, big) as f64 * step, signed(ky, big) as f64 * step];
            let u = pow2(j) * e[0].hypot(e[1]);
            out.push((u, buf[ky * big + kx].norm() * scale));
        }
    }
    Ok(out)
}

/// Lemma-4.3-type fit |ψ̂| ≤ C·2^j·exp(−c·u^{1/s}) for the interior sector
/// (j, k), envelope taken over u ≤ u_max.
pub fn fit_interior_decay(fam: &PacketFamily, j: i32, k: u32, u_max: f64) -> Result<EnvelopeFit, LabError> {
    // grid fine enough to see frequencies up to ~1.25·u_max·2^{−j}
    let side_units = fam.c_big_star;
    let n_min = (2.5 * u_max * side_units / (2.0 * PI)).ceil() as usize;
    let n = n_min.next_power_of_two().max(128);
    let samples = interior_spectrum_samples(fam, j, k, n, 2)?;
    let env = binned_max(samples.into_iter().filter(|p| p.0 <= u_max), 1.0);
    envelope_fit(&env, 1.0 / fam.s(), 4.0)
}

/// Competing-model comparison: R² with exponent 1/s against 1/(2s).
pub fn exponent_preference(env: &[(f64, f64)], s: f64) -> (f64, f64) {
    let peaks = local_maxima(env);
    let a = fit_stretched_exp(&peaks, 1.0 / s).map(|f| f.2).unwrap_or(0.0);
    let b = fit_stretched_exp(&peaks, 1.0 / (2.0 * s)).map(|f| f.2).unwrap_or(0.0);
    (a, b)
}

/// |Ψ^rad_{j,m₁,n}(ρ)| for m₁ = 0..=m1_max, with the log-envelope fit.
pub fn radial_factor_decay(fam: &PacketFamily, j: i32, n: i64, rho: f64, m1_max: i64) -> Result<(Vec<f64>, Option<EnvelopeFit>), LabError> {
    let mut vals = Vec::new();
    for m1 in 0..=m1_max {
        let p = fam.packet(PacketIndex::new(j, 1, [m1, 0]))?;
        let f = BoundaryFourierFactors::new(&p, rho.max(1e-3))?;
        let rad = f.radial_factors(rho);
        vals.push(rad[(n + f.n_max as i64) as usize].norm());
    }
    let env: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
    let fit = envelope_fit(&env, 1.0 / fam.s(), 1.0).ok();
    Ok((vals, fit))
}

/// Lemma 4.7 envelope |J_n(t)| ≤ (e²t/(2n))^n, checked in log space on a
/// grid n = 1..=n_max, t ∈ (0, n); returns the largest log-ratio.
pub fn bessel_envelope_check(n_max: u32, t_per_n: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let nf = n as f64;
        for i in 1..t_per_n {
            let t = nf * i as f64 / t_per_n as f64;
            let v = bessel_j(n as i64, t).abs();
            if v == 0.0 {
                continue;
            }
            let log_bound = nf * (E * E * t / (2.0 * nf)).ln();
            worst = worst.max(v.ln() - log_bound);
        }
    }
    worst
}

/// Largest |∂ᵏ_t J_n(t)| for k = 1..=3 at the given points, by central
/// differences with Richardson extrapolation.
pub fn bessel_derivative_max(points: &[(i64, f64)]) -> [f64; 3] {
    let d = |n: i64, t: f64, h: f64, k: usize| -> f64 {
        let f = |x: f64| bessel_j(n, x);
        match k {
            1 => (f(t + h) - f(t - h)) / (2.0 * h),
            2 => (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h),
            _ => (f(t + 2.0 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2.0 * h)) / (2.0 * h * h * h),
        }
    };
    let mut out = [0.0f64; 3];
    for &(n, t) in points {
        for k in 1..=3 {
            let h = [1e-4, 1e-3, 1e-2][k - 1];
            let v = (4.0 * d(n, t, h / 2.0, k) - d(n, t, h, k)) / 3.0;
            out[k - 1] = out[k - 1].max(v.abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stretched_fit_recovers_parameters() {
        let pts: Vec<(f64, f64)> = (1..60).map(|u| (u as f64, 3.0 * (-0.7 * (u as f64).sqrt()).exp())).collect();
        let (lc, c, r2) = fit_stretched_exp(&pts, 0.5).unwrap();
        assert!((lc - 3f64.ln()).abs() < 1e-10 && (c - 0.7).abs() < 1e-10 && r2 > 0.999_999);
    }

    #[test]
    fn zero_window_is_trivially_dominated() {
        let z = vec![0.0; 1 << 12];
        let r = fourier_decay_check(&z, 0.01, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(r.dominated && r.worst_ratio == 0.0);
    }

    #[test]
    fn aliasing_reported() {
        let v = vec![1.0; 1 << 12];
        assert!(matches!(dft_1d(&v, 0.1), Err(LabError::Aliasing { .. })));
    }

    #[test]
    fn gaussian_transform_scaling() {
        // (2π)^{-1/2}∫e^{-x²/2}e^{-iξx}dx = e^{-ξ²/2}
        let n = 1 << 12;
        let dx = 0.02;
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 - n as f64 / 2.0) * dx;
                (-x * x / 2.0).exp()
            })
            .collect();
        let spec = dft_1d(&v, dx).unwrap();
        for &(xi, a) in spec.iter().take(40) {
            assert!((a - (-xi * xi / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_lemma_envelope() {
        assert!(bessel_envelope_check(30, 50) <= 1e-12);
    }
}
