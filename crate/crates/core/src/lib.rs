//! Conformal (Möbius) geometry of hypersurfaces and sphere families.
//!
//! The crate works in the polyspherical model: points, spheres and planes of
//! `R^n` are vectors of `R^{n+2}` with a Lorentzian form. On top of that it
//! provides surface jets and conformal frames, canal-hypersurface detection,
//! envelopes of sphere families and the singular set of tubes in `R^3`.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canal;
pub mod conformal;
pub mod darboux;
pub mod envelope;
pub mod error;
pub mod family;
pub mod jets;
pub mod report;
pub mod scene;
pub mod spline;
pub mod surfaces;
pub mod taylor;
pub mod tensor;
pub mod tolerances;

pub use conformal::{
    classify_direction, classify_pencil, drop_sphere, form, lift_plane, lift_point, lift_sphere, scalar_product, CausalClass, Carrier,
    PencilClass, PencilKind, PolyVector,
};
pub use error::{GeomError, Result};
pub use surfaces::{Chart, SurfaceSpec};
pub use taylor::Taylor;
pub use tensor::Tensor3;
pub use tolerances::Tolerances;
