//! Symplectic integration of non-stiff Hamiltonian systems, built around a
//! lane-vectorized fixed-point implementation of the 8-stage, order-16
//! Gauss–Legendre implicit Runge–Kutta method, together with explicit
//! splitting/composition baselines and a work-precision benchmark harness.
//!
//! The crate is organized along the data flow of a constant-step run:
//!
//! * [`lanes`] — fixed-width lane vectors and the structure-of-arrays state
//!   container; one implicit stage per lane.
//! * [`tableau`] — high-precision Gauss–Legendre collocation coefficients
//!   and their symplectically rounded working-precision form.
//! * [`irkgl`] — the implicit integrator: extrapolated initial guess,
//!   vectorized fixed-point sweeps (plain and partitioned), the
//!   stagnation-based stopping criterion, and the constant-step loop.
//! * [`splitting`] — explicit symplectic baselines: Strang and multi-part
//!   Strang steps, symmetric compositions, drift/kick splittings, and the
//!   named-scheme registry.
//! * [`problems`] — benchmark systems with right-hand sides generic over the
//!   scalar interface, Hamiltonians, and closed-form sub-flows.
//! * [`bench`] — energy-error metrics, work-precision sweeps, trace series,
//!   CSV/JSON emission, and the CLI entry point.

pub mod bench;
pub mod hiprec;
pub mod irkgl;
pub mod lanes;
pub mod problems;
pub mod splitting;
pub mod tableau;

mod guide;
