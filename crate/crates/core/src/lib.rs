//! Transmission of spatial directions and Cartesian frames with quantum
//! signals, without a shared reference frame.
//!
//! Two protocols are implemented end to end:
//!
//! * [`direction`] — a single direction is encoded in a superposition of
//!   coherent angular-momentum states of `N` spins and read out with a
//!   continuous rank-one POVM. The mean cosine of the error angle is the top
//!   eigenvalue of a symmetric tridiagonal matrix.
//! * [`frame`] — a full Cartesian frame is encoded in one Rydberg-like level
//!   (angular momenta `j = 0..n-1`) and read out with a covariant POVM over
//!   SO(3). Axis fidelities are bilinear forms in Alice's and Bob's
//!   amplitudes; the optimum is found by an alternating fixed-point
//!   iteration.
//!
//! [`spinmath`] supplies the rotation-group kernels (Jacobi polynomials,
//! Wigner matrices, coherent states), [`numerics`] the eigen/quadrature/
//! optimization machinery, and [`simulate`] seeded Monte Carlo sampling of
//! both measurement distributions.

pub mod direction;
pub mod frame;
pub mod numerics;
pub mod simulate;
pub mod spinmath;

pub use direction::{DirectionError, DirectionSignal, DirectionSolution};
pub use frame::{FiducialVector, FrameError, FrameSignal, FrameSolution, MeritKind, MeritTensor};
pub use numerics::{HermitianMatrix, NumericsError, QuadratureRule, SymTridiag};
pub use simulate::{EstimateReport, SimConfig, SimError};
pub use spinmath::{CoherentState, EulerAngles, HalfInt, Rotation3};
