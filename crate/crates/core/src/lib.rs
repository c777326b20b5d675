//! Generalized diagonals and periodic orbits of right-triangular billiards.
//!
//! The crate is organised around the objects of a lower-bound argument for
//! the billiard complexity function:
//!
//! - [`geometry`]: tables, rigid motions, ray exits.
//! - [`unfolding`]: angular beams, generalized diagonals, `Q_n` and `P_n`.
//! - [`partition`]: indexed partitions of the direction interval, the
//!   good-interval selection and the critical exponent.
//! - [`rotation`]: continued fractions and hitting times of circle rotations.
//! - [`devmap`]: the development map on rotated rhombi, periodic orbits in
//!   parallel beams, and dragging them onto vertices.
//! - [`experiment`]: configuration, commands and run manifests behind the
//!   `billiard-lab` binary.

pub mod geometry;
pub mod unfolding;
pub mod partition;
pub mod rotation;
pub mod devmap;
pub mod experiment;

pub use geometry::{triangle_to_rhombus, Angle, PlanarIsometry, Point2, Rhombus, RightTriangle, Table, Tolerances};
