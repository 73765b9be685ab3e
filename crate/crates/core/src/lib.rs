//! Numerical laboratory for quantized hyperbolic automorphisms of the
//! 2-torus acting on theta-function section spaces.
//!
//! The crate builds the `N`-dimensional spaces of holomorphic sections of
//! the `N`th power of the theta line bundle, quantizes integer symplectic
//! matrices as unitaries on those spaces via discrete Fourier transforms
//! and quadratic Gauss phases, and measures eigensection statistics:
//! quantum variance, mass distribution in small balls, zero sets via the
//! argument principle, Egorov remainders, Szego-limit traces, and Bergman
//! kernel decay laws.

pub mod asymptotics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod observables;
pub mod quantize;
pub mod spectral;
pub mod theta;
pub mod zeros;

pub mod acceptance;

pub use error::{Error, Result};
pub use geometry::{Ball, BumpProfile, LogGoodCover, LogScale, TorusPoint};
pub use dynamics::{CatMap, CharacterIndex, TrigPoly};
pub use theta::{GridSpec, KernelEval, SectionCoeffs, ThetaSpace};
pub use quantize::{Sl2Word, ToeplitzMatrix, UnitaryMatrix};
pub use spectral::{DegeneracyClusters, EigenSystem};
pub use observables::{EgorovRecord, GenericSetRecord, MassRecord, VarianceRecord};
pub use zeros::{PairingStatistic, PotentialL1Record, ZeroSet};

use std::sync::Once;

static INIT: Once = Once::new();

/// Initialize the process for reproducible numerics.
///
/// Caps the rayon pool at `CATMAP_QE_THREADS` when set and pins OpenBLAS to
/// one thread so that LAPACK calls are bitwise reproducible; our own
/// parallelism reduces in a fixed index order regardless of thread count.
pub fn init_runtime() {
    INIT.call_once(|| {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
        if let Ok(v) = std::env::var("CATMAP_QE_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}
