//! Rauzy induction on special systems of isometries and the numerical
//! machinery around it: the length and orientation cocycles, a truncated
//! transfer operator with its pressure curve and Gibbs chain, Lyapunov
//! spectra, and plane sections of the triply periodic surface built from a
//! parameter triple.

pub mod cocycle;
pub mod exact;
pub mod exec;
pub mod induction;
pub mod lyapunov;
pub mod surface;
pub mod thermo;

pub use exact::{Branch, Cubic, IntMatrix3, Perm, SimplexPoint, SpecialSystem};
pub use exec::Exec;
pub use induction::{PathStep, Word};

