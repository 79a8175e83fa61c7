//! Invariants of the discretized limiting operator and the counting lemma.

use nalgebra::{DMatrix, DVector};
use plunge_core::geometry::WellShapedDomain;
use plunge_lab::spectrum::{
    eigen_spectrum, lanczos, square_residuals, verify_counting_lemma, Mode, Slot, Sslo, SsloConfig,
};
use proptest::prelude::*;

fn disk(r: f64) -> WellShapedDomain {
    WellShapedDomain::disk([0.0, 0.0], r).unwrap()
}

fn op(big_r: f64, s: WellShapedDomain, grid: usize, pad: usize) -> Sslo {
    Sslo::new(SsloConfig::new(big_r, s, grid, pad).unwrap()).unwrap()
}

#[test]
fn ritz_pairs_square_correctly() {
    let t = op(4.0, disk(0.5), 64, 2);
    let l = lanczos(&t, t.lattice_count() + 8, 3).unwrap();
    for r in square_residuals(&t, &l, 6) {
        assert!(r < 1e-7, "{r}");
    }
}

#[test]
fn larger_region_dominates_eigenvalues() {
    // S ⊂ S' gives T_S ≤ T_S' in the operator order, hence λ_k(S) ≤ λ_k(S')
    let small = eigen_spectrum(&op(4.0, disk(0.3), 64, 4), Mode::Dense, &[], 0).unwrap();
    let big = eigen_spectrum(&op(4.0, disk(0.5), 64, 4), Mode::Dense, &[], 0).unwrap();
    for (a, b) in small.eigenvalues.iter().zip(&big.eigenvalues) {
        assert!(a <= &(b + 1e-10), "{a} > {b}");
    }
}

#[test]
fn trace_converges_under_refinement() {
    let mut errs = Vec::new();
    for grid in [64, 128, 256] {
        let rep = eigen_spectrum(&op(8.0, disk(0.5), grid, 4), Mode::Dense, &[], 0).unwrap();
        errs.push((rep.trace - rep.trace_continuum).abs() / rep.trace_continuum);
    }
    assert!(errs[2] < 0.05, "{errs:?}");
    assert!(errs[2] <= errs[0], "{errs:?}");
}

#[test]
fn dense_and_lanczos_spectra_match() {
    let t = op(4.0, WellShapedDomain::ellipse([0.1, 0.0], [0.4, 0.25]).unwrap(), 64, 2);
    let d = eigen_spectrum(&t, Mode::Dense, &[0.1], 0).unwrap();
    let l = eigen_spectrum(&t, Mode::Lanczos, &[0.1], 0).unwrap();
    for (a, b) in d.eigenvalues.iter().zip(&l.eigenvalues).take(12) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    assert_eq!(d.plunge_counts, l.plunge_counts);
}

#[test]
fn spectrum_lies_in_unit_interval() {
    let rep = eigen_spectrum(&op(4.0, disk(0.5), 64, 2), Mode::Dense, &[], 0).unwrap();
    assert!(rep.eigenvalues.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
    let sum: f64 = rep.eigenvalues.iter().sum();
    assert!((sum - rep.trace).abs() < 1e-9 * rep.trace);
}

fn orthonormal(seed: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(d, d, seed.iter().cloned().cycle().take(d * d)).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counting_lemma_never_fails(
        lam in prop::collection::vec(0.0f64..1.0, 8),
        q in prop::collection::vec(-1.0f64..1.0, 64),
        p in prop::collection::vec(-1.0f64..1.0, 64),
        tau in 0.01f64..0.3,
        eps in 0.02f64..0.49,
    ) {
        let d = 8;
        let qm = orthonormal(&q, d) ;
        let t = &qm * DMatrix::from_diagonal(&DVector::from_vec(lam)) * qm.transpose();
        let t = 0.5 * (&t + t.transpose());
        // eigenbasis joined with a second orthonormal basis: tight with A = 2
        let other = orthonormal(&p, d);
        let frame: Vec<DVector<f64>> = qm.column_iter().chain(other.column_iter()).map(|c| c.into_owned()).collect();
        let slots: Vec<Slot> = frame
            .iter()
            .map(|f| {
                let v = f.dot(&(&t * f));
                if v < tau { Slot::I1 } else if v > 1.0 - tau { Slot::I2 } else { Slot::I3 }
            })
            .collect();
        let c = verify_counting_lemma(&t, &frame, None, &slots, eps).unwrap();
        prop_assert!((c.frame_lower - 2.0).abs() < 1e-9);
        if c.hypothesis_holds {
            prop_assert!(c.conclusion_holds, "{c:?}");
        }
    }
}
