//! Quantum synchronization of dissipatively coupled van der Pol oscillators.
//!
//! * [`hilbert`]: truncated Fock-space operators and superoperators.
//! * [`lindblad`]: master equations, steady states, RK4 evolution.
//! * [`two_osc`]: closed-form two-oscillator state, phase marginal, concurrence, entanglement tongue.
//! * [`ensemble`]: mean-field simulation of N all-to-all coupled oscillators.
//! * [`critical`]: critical coupling from linear stability of the unsynchronized state.
//! * [`classical`]: classical amplitude equations, Arnold tongue, classical ensemble.
//!
//! Rates and frequencies are expressed in units of the linear gain `kappa1`.

pub mod classical;
pub mod critical;
pub mod distribution;
pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod output;
pub mod par;
pub mod quad;
pub mod roots;
pub mod two_osc;

pub use error::{Error, Result};
pub use distribution::FrequencyDistribution;
pub use par::Exec;
