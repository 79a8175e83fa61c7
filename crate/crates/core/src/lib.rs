//! Disk-adapted Gevrey wave packets.
//!
//! Pure, allocation-only building blocks: frequency domains, cutoff families,
//! the Whitney-type sectorization of D(R), packet evaluation and
//! normalization, Bessel functions, direct Fourier quadrature and the
//! ε-dependent index partition. Everything here is `no_std` (with `alloc`);
//! FFT-based analysis, eigen-solvers and file formats live in `plunge-lab`.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bessel;
pub mod concentration;
pub mod fourier;
pub mod geometry;
pub mod gevrey;
pub mod math;
pub mod sectorization;
pub mod wavepackets;
