//! Planar three-body problem on the shape sphere: triangle invariants,
//! shape coordinates, a high-order integrator, eclipse sequences and
//! numerical checks of the reduced equation for the normalized area.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod eclipse;
pub mod error;
pub mod random;
pub mod shape;
pub mod theorem;
pub mod triangle;
pub mod varfinder;
pub mod vec2;

pub use error::{Error, Result};
pub use shape::{ShapeCoords, ShapePoint, ShapeVelocity};
pub use triangle::{BodyState, MassTriple, TriangleInvariants};
pub use vec2::Vec2;
