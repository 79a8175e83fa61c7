//! Small numerical helpers shared across the crate: compensated sums and
//! Gauss–Legendre rules.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Neumaier compensated accumulator.
///
/// Summation order still matters for the last bit, so callers that want
/// results independent of thread count collect terms first and feed them in
/// index order.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a sequence.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Base-2 logarithm.
pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` nodes, computed by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (x, w) in self.mapped(a, b) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, deduplicated breakpoints of `pts` restricted to [a, b], with the
/// endpoints included.
pub fn breakpoints(a: f64, b: f64, pts: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = pts.iter().copied().filter(|&p| p > a && p < b).collect();
    v.push(a);
    v.push(b);
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    v
}

/// Reduce an angle to [-π, π).
pub fn wrap_pi(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * ((theta + PI) / two_pi).floor();
    if t >= PI {
        t -= two_pi;
    }
    if t < -PI {
        t += two_pi;
    }
    t
}

/// Reduce an angle to [0, 2π).
pub fn wrap_2pi(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * (theta / two_pi).floor();
    if t >= two_pi {
        t -= two_pi;
    }
    if t < 0.0 {
        t = 0.0;
    }
    t
}

/// ln Γ(n + 1) for integer n, by direct summation (n is small here).
pub fn ln_factorial(n: u32) -> f64 {
    let mut acc = 0.0;
    for k in 2..=n {
        acc += (k as f64).ln();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(10);
        // degree 19 is the limit for 10 nodes
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(19));
        let exact = (2f64.powi(20) - 1.0) / 20.0;
        assert!((v - exact).abs() < 1e-9 * exact);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_rule_is_accurate() {
        let gl = GaussLegendre::new(512);
        let v = gl.integrate(0.0, PI, |x| x.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let v = sum_compensated([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn wraps() {
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_pi(PI), -PI);
        assert!((wrap_2pi(-0.5) - (2.0 * PI - 0.5)).abs() < 1e-15);
    }
}
