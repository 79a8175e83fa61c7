//! Bessel functions of the first kind J_n(t) for integer order.
//!
//! Power series where it is free of cancellation, Miller's backward
//! recurrence normalized by J₀ + 2ΣJ_{2k} = 1 everywhere else.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Value with a flag set when the envelope (e²t/2n)^n certified the result
/// below 1e−300 and it was returned as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselValue {
    pub value: f64,
    pub underflow: bool,
}

const TINY_LOG: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// J_n(t).
pub fn bessel_j(n: i64, t: f64) -> f64 {
    bessel_j_checked(n, t).value
}

pub fn bessel_j_checked(n: i64, t: f64) -> BesselValue {
    let na = n.unsigned_abs();
    let mut sign = 1.0;
    if n < 0 && na % 2 == 1 {
        sign = -sign;
    }
    if t < 0.0 && na % 2 == 1 {
        sign = -sign;
    }
    let ta = t.abs();
    if ta == 0.0 {
        let v = if na == 0 { 1.0 } else { 0.0 };
        return BesselValue { value: v, underflow: false };
    }
    if (na as f64) > ta {
        let nf = na as f64;
        let log_env = nf * (core::f64::consts::E * core::f64::consts::E * ta / (2.0 * nf)).ln();
        if log_env < TINY_LOG {
            return BesselValue { value: 0.0, underflow: true };
        }
    }
    let v = if use_series(na, ta) {
        series(na, ta)
    } else {
        let seq = miller(na as usize, ta);
        seq[na as usize]
    };
    BesselValue {
        value: sign * v,
        underflow: false,
    }
}

/// J_0(t), …, J_{n_max}(t) from a single backward sweep.
pub fn bessel_j_sequence(n_max: usize, t: f64) -> Vec<f64> {
    let ta = t.abs();
    if ta == 0.0 {
        let mut v = alloc::vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let mut v = miller(n_max, ta);
    v.truncate(n_max + 1);
    if t < 0.0 {
        for (k, x) in v.iter_mut().enumerate() {
            if k % 2 == 1 {
                *x = -*x;
            }
        }
    }
    v
}

fn use_series(n: u64, t: f64) -> bool {
    let q = 0.25 * t * t;
    t <= 6.0 || q <= 0.5 * (n as f64 + 1.0)
}

fn ln_factorial(n: u64) -> f64 {
    if n < 30 {
        let mut a = 0.0;
        for k in 2..=n {
            a += (k as f64).ln();
        }
        return a;
    }
    let x = n as f64;
    let x2 = x * x;
    x * x.ln() - x + 0.5 * (2.0 * core::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x2 * x2 * x)
}

fn series(n: u64, t: f64) -> f64 {
    let h = 0.5 * t;
    let lead = (n as f64 * h.ln() - ln_factorial(n)).exp();
    if lead == 0.0 {
        return 0.0;
    }
    let q = -h * h;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    lead * sum
}

/// Backward recurrence returning J_0..J_{len-1} with len ≥ n + 1.
fn miller(n: usize, t: f64) -> Vec<f64> {
    let base = (n as f64).max(t);
    let start = base.ceil() as usize + 20 + (2.0 * base.sqrt()).ceil() as usize;
    let start = start + (start % 2);
    let mut out = alloc::vec![0.0; n + 1];
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    let inv_t = 2.0 / t;
    let mut k = start;
    loop {
        if k <= n {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = k as f64 * inv_t * j - jp1;
        jp1 = j;
        j = jm1;
        k -= 1;
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in out.iter_mut().skip(k + 1) {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // (1/2π)∮cos(nθ − t sinθ)dθ, periodic trapezoid is spectrally exact
    fn integral_oracle(n: i64, t: f64) -> f64 {
        let m = 4 * (n.unsigned_abs() as usize + t.abs() as usize) + 200;
        let h = 2.0 * core::f64::consts::PI / m as f64;
        let mut acc = crate::math::NeumaierSum::new();
        for i in 0..m {
            let th = i as f64 * h;
            acc.add((n as f64 * th - t * th.sin()).cos());
        }
        acc.value() / m as f64
    }

    #[test]
    fn agrees_with_integral_representation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(-40i64..=40);
            let t = rng.gen_range(0.0..60.0);
            let (a, b) = (bessel_j(n, t), integral_oracle(n, t));
            assert!((a - b).abs() < 1e-12, "n={n} t={t}: {a} vs {b}");
        }
    }

    proptest::proptest! {
        #[test]
        fn recurrence_holds(n in 1i64..50, t in 0.5f64..80.0) {
            let lhs = bessel_j(n - 1, t) + bessel_j(n + 1, t);
            let rhs = 2.0 * n as f64 / t * bessel_j(n, t);
            proptest::prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + n as f64 / t));
        }
    }

    #[test]
    fn special_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert!((bessel_j(1, 1.0) - 0.4400505857449335).abs() < 1e-16);
        // J_0 first zero
        assert!(bessel_j(0, 2.404825557695773).abs() < 1e-15);
    }

    #[test]
    fn reflection_rules() {
        for n in 0..8i64 {
            for &t in &[0.3, 5.5, 17.0] {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(bessel_j(-n, t), s * bessel_j(n, t));
                assert_eq!(bessel_j(n, -t), s * bessel_j(n, t));
            }
        }
    }

    #[test]
    fn branches_agree_on_overlap() {
        for n in 0..20usize {
            for i in 1..=30 {
                let t = 0.2 * i as f64;
                let s = series(n as u64, t);
                let m = miller(n, t)[n];
                assert!((s - m).abs() < 1e-13, "n={n} t={t}: {s} {m}");
            }
        }
    }

    #[test]
    fn sequence_matches_pointwise() {
        let t = 23.7;
        let seq = bessel_j_sequence(60, t);
        for (n, v) in seq.iter().enumerate() {
            assert!((v - bessel_j(n as i64, t)).abs() < 1e-14);
        }
        let neg = bessel_j_sequence(5, -t);
        assert!((neg[1] + seq[1]).abs() < 1e-15);
    }

    #[test]
    fn large_argument_and_order() {
        // three-term recurrence consistency far outside the series region
        let t = 1234.5;
        let (a, b, c) = (bessel_j(99, t), bessel_j(100, t), bessel_j(101, t));
        assert!((a + c - 200.0 / t * b).abs() < 1e-13);
        let v = bessel_j_checked(5000, 10.0);
        assert!(v.underflow && v.value == 0.0);
    }
}
