//! Gevrey-s mother bumps and the normalized radial / angular cutoff families.
//!
//! The mother function is built from the transition
//! h(x) = f(x) / (f(x) + f(1 − x)) with f(x) = exp(−x^{−1/(s−1)}), evaluated
//! in the stable form 1 / (1 + exp(x^{−p} − (1 − x)^{−p})).

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::math::{ln_factorial, wrap_2pi, wrap_pi};

#[derive(Clone, Debug, PartialEq)]
pub enum CutoffError {
    InvalidGevreyIndex(f64),
    RadiusOutOfRange { r: f64, big_r: f64 },
    ScaleAboveMax { j: i32, j_max: u32 },
    ArcIndexOutOfRange { k: u32, m: u32 },
    ScaleOutOfRange { j: i32 },
    GridTooCoarse { residual: f64 },
}

impl fmt::Display for CutoffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffError::InvalidGevreyIndex(s) => write!(f, "Gevrey index must exceed 1, got {s}"),
            CutoffError::RadiusOutOfRange { r, big_r } => {
                write!(f, "radius {r} outside [0, {big_r})")
            }
            CutoffError::ScaleAboveMax { j, j_max } => write!(f, "scale {j} exceeds j_max = {j_max}"),
            CutoffError::ArcIndexOutOfRange { k, m } => write!(f, "arc index {k} outside 1..={m}"),
            CutoffError::ScaleOutOfRange { j } => write!(f, "angular family needs 0 <= j <= j_max, got {j}"),
            CutoffError::GridTooCoarse { residual } => {
                write!(f, "finite-difference extrapolation residual {residual:.3e} exceeds 1e-4")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Radial,
    Angular,
}

/// The template bump u.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyMother {
    pub s: f64,
    pub variant: Variant,
}

impl GevreyMother {
    pub fn new(s: f64, variant: Variant) -> Result<Self, CutoffError> {
        if !(s > 1.0) || !s.is_finite() {
            return Err(CutoffError::InvalidGevreyIndex(s));
        }
        Ok(Self { s, variant })
    }

    pub fn support(&self) -> (f64, f64) {
        match self.variant {
            Variant::Radial => (0.45, 1.1),
            Variant::Angular => (-0.55, 0.55),
        }
    }

    pub fn plateau(&self) -> (f64, f64) {
        match self.variant {
            Variant::Radial => (0.5, 1.0),
            Variant::Angular => (-0.5, 0.5),
        }
    }

    /// Points where the template switches between its flat and flank pieces.
    pub fn breakpoints(&self) -> [f64; 4] {
        let (a, b) = self.support();
        let (c, d) = self.plateau();
        [a, c, d, b]
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.variant {
            Variant::Radial => {
                if x <= 0.45 || x >= 1.1 {
                    0.0
                } else if x < 0.5 {
                    transition(self.s, (x - 0.45) / 0.05)
                } else if x <= 1.0 {
                    1.0
                } else {
                    transition(self.s, (1.1 - x) / 0.1)
                }
            }
            Variant::Angular => {
                let a = x.abs();
                if a >= 0.55 {
                    0.0
                } else if a <= 0.5 {
                    1.0
                } else {
                    transition(self.s, (0.55 - a) / 0.05)
                }
            }
        }
    }
}

/// Smooth step from 0 (x ≤ 0) to 1 (x ≥ 1).
pub fn transition(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let p = 1.0 / (s - 1.0);
    let e = x.powf(-p) - (1.0 - x).powf(-p);
    1.0 / (1.0 + e.exp())
}

/// Radial family φ_j, j ≤ j_max, on [0, R) with R = 2^{j_max}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialCutoffs {
    pub j_max: u32,
    pub mother: GevreyMother,
}

impl RadialCutoffs {
    pub fn new(j_max: u32, s: f64) -> Result<Self, CutoffError> {
        Ok(Self {
            j_max,
            mother: GevreyMother::new(s, Variant::Radial)?,
        })
    }

    pub fn big_r(&self) -> f64 {
        pow2(self.j_max as i32)
    }

    pub fn s(&self) -> f64 {
        self.mother.s
    }

    /// φ̃_j(r) = u((R − r)/2^j), no normalization.
    pub fn phi_tilde(&self, j: i32, r: f64) -> f64 {
        self.mother.eval((self.big_r() - r) / pow2(j))
    }

    /// The at most two scales with φ̃_j(r) ≠ 0, with their φ̃ values.
    fn active_tilde(&self, r: f64) -> ([(i32, f64); 2], usize) {
        let d = self.big_r() - r;
        let c = d.log2().ceil() as i32;
        let mut out = [(0, 0.0); 2];
        let mut n = 0;
        for j in [c - 1, c, c + 1] {
            if j > self.j_max as i32 {
                continue;
            }
            let v = self.mother.eval(d / pow2(j));
            if v > 0.0 && n < 2 {
                out[n] = (j, v);
                n += 1;
            }
        }
        (out, n)
    }

    /// Scales j with φ_j(r) ≠ 0 and their normalized values.
    pub fn active(&self, r: f64) -> Vec<(i32, f64)> {
        if !(r >= 0.0 && r < self.big_r()) {
            return Vec::new();
        }
        let (a, n) = self.active_tilde(r);
        let w: f64 = a[..n].iter().map(|(_, v)| v * v).sum();
        let sw = w.sqrt();
        a[..n].iter().map(|&(j, v)| (j, v / sw)).collect()
    }

    /// W(r) = Σ_j φ̃_j(r)².
    pub fn weight(&self, r: f64) -> f64 {
        let (a, n) = self.active_tilde(r);
        a[..n].iter().map(|(_, v)| v * v).sum()
    }

    /// φ_j(r) for r ∈ [0, R).
    pub fn phi(&self, j: i32, r: f64) -> Result<f64, CutoffError> {
        if j > self.j_max as i32 {
            return Err(CutoffError::ScaleAboveMax { j, j_max: self.j_max });
        }
        if !(r >= 0.0 && r < self.big_r()) {
            return Err(CutoffError::RadiusOutOfRange { r, big_r: self.big_r() });
        }
        Ok(self.phi_or_zero(j, r))
    }

    /// φ_j(r), extended by zero outside [0, R).
    pub fn phi_or_zero(&self, j: i32, r: f64) -> f64 {
        if !(r >= 0.0 && r < self.big_r()) || j > self.j_max as i32 {
            return 0.0;
        }
        let num = self.phi_tilde(j, r);
        if num == 0.0 {
            return 0.0;
        }
        num / self.weight(r).sqrt()
    }

    /// Support interval I_j = [R − 1.1·2^j, R − 0.45·2^j] ∩ [0, R].
    pub fn support_interval(&self, j: i32) -> (f64, f64) {
        let big_r = self.big_r();
        let h = pow2(j);
        ((big_r - 1.1 * h).max(0.0), (big_r - 0.45 * h).min(big_r))
    }

    /// Radii inside I_j where φ_j or its neighbors switch piece.
    pub fn breakpoints(&self, j: i32) -> Vec<f64> {
        let big_r = self.big_r();
        let mut v = Vec::new();
        for jj in [j - 1, j, j + 1] {
            for b in self.mother.breakpoints() {
                v.push(big_r - b * pow2(jj));
            }
        }
        let (a, b) = self.support_interval(j);
        crate::math::breakpoints(a, b, &v)
    }

    /// Finite-difference fit of ‖∂_r^k φ_j‖ ≤ C₁C₂^k (k!)^s 2^{−jk}.
    pub fn check_derivative_bounds(&self, j: i32, max_order: usize) -> Result<DerivativeFit, CutoffError> {
        let (a, b) = self.support_interval(j);
        let width = 0.05 * pow2(j);
        let h = width / 128.0;
        let f = |r: f64| self.phi_or_zero(j, r);
        fit_derivative_bounds(f, a - 4.0 * h, b + 4.0 * h, pow2(-j), self.s(), max_order, h, 8192)
    }
}

/// Angular family η_{j,k}, k = 1..m(j), on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularCutoffs {
    pub j_max: u32,
    pub j: i32,
    pub m: u32,
    pub mother: GevreyMother,
}

impl AngularCutoffs {
    pub fn new(j_max: u32, j: i32, s: f64) -> Result<Self, CutoffError> {
        if j < 0 || j > j_max as i32 {
            return Err(CutoffError::ScaleOutOfRange { j });
        }
        Ok(Self {
            j_max,
            j,
            m: 1u32 << (j_max - j as u32),
            mother: GevreyMother::new(s, Variant::Angular)?,
        })
    }

    /// Arc width Δ_j = 2π/m(j).
    pub fn delta(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    /// Arc center θ_{j,k} = (k − 1/2)Δ_j.
    pub fn center(&self, k: u32) -> f64 {
        (k as f64 - 0.5) * self.delta()
    }

    pub fn eta_tilde(&self, k: u32, theta: f64) -> f64 {
        if self.m == 1 {
            return 1.0;
        }
        self.mother.eval(wrap_pi(theta - self.center(k)) / self.delta())
    }

    /// W_j(θ) = Σ_k η̃_{j,k}(θ)².
    pub fn weight(&self, theta: f64) -> f64 {
        if self.m == 1 {
            return 1.0;
        }
        let mut w = 0.0;
        for k in self.candidates(theta).into_iter().flatten() {
            let v = self.eta_tilde(k, theta);
            w += v * v;
        }
        w
    }

    fn candidates(&self, theta: f64) -> [Option<u32>; 3] {
        let m = self.m as i64;
        let k0 = ((wrap_2pi(theta) / self.delta()).floor() as i64).clamp(0, m - 1);
        let a = (k0 - 1).rem_euclid(m);
        let c = (k0 + 1).rem_euclid(m);
        let kk = |x: i64| Some(x as u32 + 1);
        if m == 2 {
            [kk(k0), kk(c), None]
        } else {
            [kk(a), kk(k0), kk(c)]
        }
    }

    pub fn eta(&self, k: u32, theta: f64) -> Result<f64, CutoffError> {
        if k < 1 || k > self.m {
            return Err(CutoffError::ArcIndexOutOfRange { k, m: self.m });
        }
        Ok(self.eta_unchecked(k, theta))
    }

    pub fn eta_unchecked(&self, k: u32, theta: f64) -> f64 {
        if self.m == 1 {
            return 1.0;
        }
        let num = self.eta_tilde(k, theta);
        if num == 0.0 {
            return 0.0;
        }
        num / self.weight(theta).sqrt()
    }

    /// Enlarged arc Θ*_{j,k} = [θ_k − 0.55Δ, θ_k + 0.55Δ] (unwrapped endpoints).
    pub fn enlarged_arc(&self, k: u32) -> (f64, f64) {
        if self.m == 1 {
            return (0.0, 2.0 * PI);
        }
        let c = self.center(k);
        let d = self.delta();
        (c - 0.55 * d, c + 0.55 * d)
    }

    /// Angles inside Θ*_{j,k} where η_{j,k} or its neighbors switch piece.
    pub fn breakpoints(&self, k: u32) -> Vec<f64> {
        let (a, b) = self.enlarged_arc(k);
        if self.m == 1 {
            return alloc::vec![a, b];
        }
        let c = self.center(k);
        let d = self.delta();
        let offs = [-0.55, -0.5, -0.45, 0.45, 0.5, 0.55];
        let v: Vec<f64> = offs.iter().map(|o| c + o * d).collect();
        crate::math::breakpoints(a, b, &v)
    }

    /// Finite-difference fit of ‖∂_θ^k η_{j,k}‖ ≤ C₁C₂^k (k!)^s m(j)^k.
    pub fn check_derivative_bounds(&self, k: u32, max_order: usize) -> Result<DerivativeFit, CutoffError> {
        let (a, b) = self.enlarged_arc(k);
        let h = 0.05 * self.delta() / 128.0;
        let f = |t: f64| self.eta_unchecked(k, t);
        fit_derivative_bounds(f, a, b, self.m as f64, self.mother.s, max_order, h, 8192)
    }
}

/// Sup norms of derivatives and the fitted Gevrey constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeFit {
    /// ‖∂^k f‖∞ for k = 0..=max_order.
    pub sup_norms: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// Largest relative change between the sups of two Richardson levels.
    pub residual: f64,
    /// False when no fit with C₂ ≤ 10⁶ exists.
    pub ok: bool,
}

/// Richardson-extrapolated central differences (steps h, h/2, h/4) of orders 0..=max_order
/// (capped at 4) on a uniform grid over [a, b], fitted against
/// C₁C₂^k (k!)^s scale^k with C₁ = ‖f‖∞.
#[allow(clippy::too_many_arguments)]
pub fn fit_derivative_bounds<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    scale: f64,
    s: f64,
    max_order: usize,
    h: f64,
    grid: usize,
) -> Result<DerivativeFit, CutoffError> {
    let max_order = max_order.min(4);
    let mut sup_norms = alloc::vec![0.0f64; max_order + 1];
    let mut sup_half = alloc::vec![0.0f64; max_order + 1];
    for i in 0..=grid {
        let x = a + (b - a) * i as f64 / grid as f64;
        for k in 0..=max_order {
            let d1 = central_difference(&f, x, h, k);
            let d2 = central_difference(&f, x, 0.5 * h, k);
            let d4 = central_difference(&f, x, 0.25 * h, k);
            let coarse = (4.0 * d2 - d1) / 3.0;
            let fine = (4.0 * d4 - d2) / 3.0;
            sup_norms[k] = sup_norms[k].max(fine.abs());
            sup_half[k] = sup_half[k].max(coarse.abs());
        }
    }
    let mut residual: f64 = 0.0;
    for k in 1..=max_order {
        if sup_norms[k] > 0.0 {
            residual = residual.max((sup_norms[k] - sup_half[k]).abs() / sup_norms[k]);
        }
    }
    if residual > 1e-4 {
        return Err(CutoffError::GridTooCoarse { residual });
    }
    let c1 = sup_norms[0].max(f64::MIN_POSITIVE);
    let mut c2: f64 = 0.0;
    for k in 1..=max_order {
        let denom = c1 * (s * ln_factorial(k as u32)).exp() * scale.powi(k as i32);
        c2 = c2.max((sup_norms[k] / denom).powf(1.0 / k as f64));
    }
    Ok(DerivativeFit {
        sup_norms,
        c1,
        c2,
        residual,
        ok: c2 <= 1e6,
    })
}

fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64, k: usize) -> f64 {
    if k == 0 {
        return f(x);
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + (k as f64 / 2.0 - i as f64) * h);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(k as i32)
}

/// Largest ratio of min_{ℓ≤200} (ℓ!)^s X^{−ℓ} to e^{1/2}·exp(−X^{1/s}/(2e))
/// over the grid; values ≤ 1 mean the factorial-infimum inequality holds.
pub fn check_tech_inequality(s: f64, x_grid: &[f64]) -> f64 {
    let e = core::f64::consts::E;
    let mut worst = 0.0f64;
    for &x in x_grid {
        let lx = x.ln();
        let mut lhs = f64::INFINITY;
        let mut lf = 0.0;
        for l in 0..=200u32 {
            if l > 0 {
                lf += (l as f64).ln();
            }
            lhs = lhs.min(s * lf - l as f64 * lx);
        }
        let rhs = 0.5 - x.powf(1.0 / s) / (2.0 * e);
        worst = worst.max((lhs - rhs).exp());
    }
    worst
}

pub(crate) fn pow2(j: i32) -> f64 {
    2f64.powi(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mother_examples() {
        let u = GevreyMother::new(2.0, Variant::Radial).unwrap();
        assert_eq!(u.eval(0.75), 1.0);
        assert_eq!(u.eval(1.2), 0.0);
        let mid = u.eval(0.475);
        assert!(mid > 0.0 && mid < 1.0);
        // symmetric transition at its midpoint
        assert!((mid - 0.5).abs() < 1e-12);
        let a = GevreyMother::new(1.5, Variant::Angular).unwrap();
        assert_eq!(a.eval(0.5), 1.0);
        assert_eq!(a.eval(-0.55), 0.0);
        assert!(GevreyMother::new(1.0, Variant::Radial).is_err());
    }

    #[test]
    fn transition_is_monotone_and_symmetric() {
        let mut prev = 0.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = transition(2.0, x);
            assert!(v >= prev);
            assert!((v + transition(2.0, 1.0 - x) - 1.0).abs() < 1e-14);
            prev = v;
        }
    }

    #[test]
    fn phi_examples() {
        let fam = RadialCutoffs::new(2, 2.0).unwrap();
        assert_eq!(fam.phi(2, 0.0).unwrap(), 1.0);
        assert_eq!(fam.phi(0, 1.0).unwrap(), 0.0);
        assert!(fam.phi(0, 4.0).is_err());
        assert!(fam.phi(0, -0.1).is_err());
        assert!(fam.phi(3, 1.0).is_err());
        assert_eq!(fam.phi_or_zero(0, 4.0), 0.0);
        let (a, b) = fam.support_interval(0);
        assert!((a - 2.9).abs() < 1e-15 && (b - 3.55).abs() < 1e-15);
    }

    #[test]
    fn phi_plateau_near_origin() {
        let fam = RadialCutoffs::new(4, 1.5).unwrap();
        for i in 0..=100 {
            let r = 0.45 * 16.0 * i as f64 / 100.0;
            assert_eq!(fam.phi(4, r).unwrap(), 1.0);
        }
    }

    #[test]
    fn at_most_two_scales_active() {
        let fam = RadialCutoffs::new(4, 2.0).unwrap();
        for i in 0..20_000 {
            let r = 16.0 * i as f64 / 20_000.0;
            let act = fam.active(r);
            assert!(!act.is_empty() && act.len() <= 2);
            if act.len() == 2 {
                assert_eq!((act[0].0 - act[1].0).abs(), 1);
            }
        }
    }

    #[test]
    fn eta_examples() {
        let one = AngularCutoffs::new(2, 2, 2.0).unwrap();
        assert_eq!(one.m, 1);
        assert_eq!(one.eta(1, 1.234).unwrap(), 1.0);
        let four = AngularCutoffs::new(2, 0, 2.0).unwrap();
        assert_eq!(four.m, 4);
        assert_eq!(four.eta(1, PI / 4.0).unwrap(), 1.0);
        assert_eq!(four.eta(1, PI).unwrap(), 0.0);
        assert!(four.eta(5, 0.0).is_err());
    }

    #[test]
    fn eta_wraps_across_zero() {
        let fam = AngularCutoffs::new(3, 0, 2.0).unwrap();
        let m = fam.m;
        // the last arc reaches across θ = 0 into its enlarged part
        let d = fam.delta();
        assert!(fam.eta_unchecked(m, 0.02 * d) > 0.0);
        assert!((fam.eta_unchecked(m, -0.3 * d) - fam.eta_unchecked(m, 2.0 * PI - 0.3 * d)).abs() < 1e-15);
    }

    #[test]
    fn rotation_symmetry() {
        let fam = AngularCutoffs::new(3, 1, 1.5).unwrap();
        for i in 0..500 {
            let t = 2.0 * PI * i as f64 / 500.0;
            for k in 1..=fam.m {
                let shift = 2.0 * PI * (k - 1) as f64 / fam.m as f64;
                let a = fam.eta_unchecked(k, t);
                let b = fam.eta_unchecked(1, t - shift);
                assert!((a - b).abs() < 1e-13, "k={k} t={t}: {a} {b}");
            }
        }
    }

    #[test]
    fn zeroth_order_fit_is_trivial() {
        let fam = RadialCutoffs::new(3, 2.0).unwrap();
        let fit = fam.check_derivative_bounds(1, 0).unwrap();
        assert_eq!(fit.sup_norms.len(), 1);
        assert!(fit.sup_norms[0] <= 1.0 + 1e-15 && fit.c1 <= 1.0 + 1e-15);
    }

    #[test]
    fn radial_derivative_scales_like_inverse_width() {
        let fam = RadialCutoffs::new(3, 2.0).unwrap();
        let d: Vec<f64> = (0..=2)
            .map(|j| fam.check_derivative_bounds(j, 1).unwrap().sup_norms[1])
            .collect();
        for j in 0..2 {
            let ratio = d[j] / d[j + 1];
            assert!(ratio > 1.0 && ratio < 4.0, "ratio {ratio}");
            assert!((ratio - 2.0).abs() < 1.0);
        }
    }

    #[test]
    fn tech_inequality_examples() {
        let rhs = (0.5 - 1.0 / (2.0 * core::f64::consts::E)).exp();
        assert!((check_tech_inequality(2.0, &[1.0]) - 1.0 / rhs).abs() < 1e-12);
        assert!(check_tech_inequality(2.0, &[1e-3]) < 1.0);
    }
}
