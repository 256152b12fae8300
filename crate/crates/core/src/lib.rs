//! Pulse-level simulator and optimizer for CNOT gates on two weakly coupled,
//! frequency-tunable qubits.
//!
//! The device model is two qubits with an always-on two-qubit interaction
//! described by a dimensionless 3x3 coupling tensor and an overall scale g.
//! Single-qubit operations are resonant microwave pulses applied while qubit 2
//! is parked 1 GHz above qubit 1; entanglement comes from interaction windows
//! with both qubits on resonance. A fixed nine-segment sequence composes to a
//! CNOT for any tensor whose XY part is nonzero, independent of the tensor's
//! symmetry.
//!
//! The crate simulates that sequence at the Hamiltonian level (unitary, or
//! Lindblad with amplitude damping), measures average gate fidelity, and
//! optimizes fidelity versus total gate time over the allowed drive
//! amplitudes, including ensembles of random coupling tensors at fixed
//! coupling strength eta.

pub mod cli;
pub mod fidelity;
pub mod model;
pub mod optimize;
pub mod propagate;
pub mod pulse;
pub mod qmath;
