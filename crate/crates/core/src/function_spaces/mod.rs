//! Meshes, P1 fields, the modular and the Luxemburg norm.

mod fields;
mod mesh;
mod modular;

pub use fields::{gradient_field, GradientField, ScalarField};
pub(crate) use fields::triangle_gradient;
pub use mesh::{MeshDescriptor, Shape, TriangulatedDomain};
pub use modular::{
    conjugate_luxemburg_norm, luxemburg_norm, modular, FieldRef, Quadrature, LUXEMBURG_RTOL,
};
