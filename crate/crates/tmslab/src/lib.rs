//! A numerical laboratory for thermodynamic formalism on topological Markov
//! shifts.
//!
//! The crate computes Gurevich pressure and equilibrium (Parry / RPF)
//! measures on finite graph presentations, strong-positive-recurrence
//! diagnostics on renewal (loop) presentations of countable-state shifts,
//! pressure curves with their Legendre conjugates, and the effective
//! intrinsic ergodicity inequalities with their sharp constant
//! `sqrt(2) * sigma` — all on exactly computable desk-scale systems.
//!
//! Module map:
//!
//! * [`shift`] — finite directed-graph presentations, cycle enumeration,
//!   first-return counts, higher-block recoding, spectral decomposition.
//! * [`observable`] — locally constant potentials, Hölder norms, Birkhoff
//!   sums, coboundaries and the special test-function constructions.
//! * [`transfer`] — weighted transfer matrices, Perron eigendata, pressure
//!   on finite graphs, partition-sum and loop-splitting oracles.
//! * [`renewal`] — loop systems at a base state: generating functions,
//!   SPR/discriminant verdicts, Gurevich entropy, escape families.
//! * [`measure`] — shift-invariant Markov measures: Parry/RPF, entropy,
//!   exact integration, test families.
//! * [`thermo`] — pressure curves, asymptotic variance by independent
//!   routes, extreme cycle means, restricted pressure via Legendre.
//! * [`ekp`] — the effective-intrinsic-ergodicity harness: scans,
//!   sharpness sequences, SPR-necessity demonstrations.
//! * [`spec_io`] — the JSON file formats for graphs, observables, loop
//!   systems and measures.

pub mod defaults;
pub mod ekp;
pub mod error;
pub mod measure;
pub mod numeric;
pub mod observable;
pub mod renewal;
pub mod shift;
pub mod spec_io;
pub mod thermo;
pub mod transfer;

pub use error::{Error, ErrorClass, Result};
pub use measure::MarkovMeasure;
pub use observable::LocallyConstantFunction;
pub use renewal::LoopSystem;
pub use shift::MarkovGraph;
