//! Numerics for generalized Orlicz (Musielak–Orlicz) spaces on bounded boxes.
//!
//! * [`phi`]: weak Φ-functions, left-inverses, conjugates and sampled
//!   structural condition checks.
//! * [`field`]: sampled fields, modulars and Luxemburg norms.
//! * [`curve`]: polylines, curve integrals and curve-family generators.
//! * [`modulus`]: the φ-modulus of finite curve families by convex
//!   optimization, and exceptional-family witnesses.
//! * [`acsob`]: discrete ACL/ACC diagnostics, gradients, Orlicz–Sobolev
//!   reports and Fuglede subsequences.
//!
//! Extended reals are `f64` with `f64::INFINITY` as `+∞`; see [`ext`].

pub mod acsob;
pub mod curve;
pub mod error;
pub mod ext;
pub mod field;
pub mod generate;
pub mod grid;
pub mod io;
pub mod modulus;
pub mod phi;

pub use curve::{Curve, CurveFamily};
pub use error::{Error, Result};
pub use field::{FieldKind, NormOptions, NormResult, ScalarField};
pub use grid::{BoxDomain, BoxGrid};
pub use modulus::{ModulusOptions, ModulusResult};
pub use phi::{Condition, ConditionReport, PhiDescriptor, PhiFunction, SampleSpec, Verdict};
