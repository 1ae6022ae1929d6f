//! Numerical engine for stable differential forms on oriented ℝⁿ, n ≤ 8.
//!
//! A p-form is *stable* when its GL(n)-orbit is open in ΛᵖV*. Each stable
//! orbit carries a canonical volume density φ(ρ), homogeneous of degree n/p,
//! and a derivative dual ρ̂ defined by Dφ(ρ̇) = ρ̂ ∧ ρ̇. The crate implements
//!
//! * [`exterior`] — dense exterior algebra: wedge, contraction, Hodge star,
//!   top-degree pairing, pullback, density bookkeeping;
//! * [`stability`] — the five volume constructions (symplectic, 6d 3-forms,
//!   7d 3/4-forms, 8d 3/5-forms), orbit classification, duals, induced
//!   metrics and the 6d almost complex structure;
//! * [`structures`] — SU(3)/G₂ normal forms and compatibility, the 7d
//!   assembly φ = dt∧ω + ρ, and the su(3) cross product and structure
//!   3-form;
//! * [`flows`] — the cohomogeneity-one reductions: the S⁷ gradient flow
//!   (Spin(7)) and the S³×S³ Hamiltonian flow (G₂), with their closed-form
//!   solutions, critical points, and form reconstruction.
//!
//! All coefficients are `f64`; dimensions are tiny (C(8,4) = 70 at most),
//! so everything is dense and allocation-light. Values are immutable after
//! construction and every operation is a pure function.

pub mod error;
pub mod exterior;
pub mod flows;
pub mod stability;
pub mod structures;

pub use error::{FlowError, FormError, StabilityError, StructureError};
pub use exterior::{Form, MultiIndex, Orientation};
pub use stability::{StabilityClass, VolumeResult};
