//! Fourier-diagonal kernels on `[-1, 1]^m` built from eigenvalue sequences.

mod basis;
mod kernel;
mod periodize;
mod spectrum;

pub use basis::{FourierBasis, Phase};
pub use kernel::{product_kernel, KernelValue, MercerKernel, Spectrum};
pub use periodize::{periodic_spectrum, periodize, Periodized, StationaryProfile};
pub use spectrum::{
    adversarial_coin, adversarial_spectrum, matern_periodic_spectrum, monotone_envelope,
    EigenSequence, Interval, TailBound,
};
