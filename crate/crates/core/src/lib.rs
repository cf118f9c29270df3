//! Spectral identification of networked dynamical systems.
//!
//! Given a short scalar output sequence `y[k] = c^T G^k x0` of an unknown
//! network (at most `2n` samples), [`estimator`] recovers the eigenvalues of
//! `G` whose modes reach the output, with multiplicities. [`graph`] and
//! [`dynamics`] produce test networks and their outputs; [`oracle`] supplies
//! ground truth for verification.

// Dense numerical kernels index several arrays in lockstep, and negated
// float comparisons are how they route NaN to the failure branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod expm;
pub mod graph;
pub mod oracle;
pub mod scenario;

pub use num_complex::Complex64;

pub use dynamics::{
    simulate_ct_networked, simulate_ct_sampled, simulate_dt, simulate_dt_networked, NodeDynamics, Observation,
    ObservationSetup, OutputSequence, Sidecar, TimeMode,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_ct_spectrum, estimate_dt_spectrum, estimate_dt_spectrum_online, estimate_networked_dt_spectrum,
    estimate_spectrum, EstimatorOptions, Prescale, Root, SpectrumEstimate, SpectrumJson, Warning,
};
pub use expm::matrix_exponential;
pub use graph::{
    assign_uniform_weights, build_matrix, preferential_attachment, ring, Graph, GraphMatrix, GraphMatrixKind,
};
pub use oracle::{full_spectrum, match_spectra, observable_partition, verify_estimate, MatchReport, OracleSpectrum};
