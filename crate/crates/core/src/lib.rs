//! Cell-centred block-coupled finite-volume solver for quasi-static
//! finite-strain solid mechanics on 2-D Cartesian meshes.
//!
//! The crate is split bottom-up: [`tensor`] algebra, the structured
//! [`mesh`], constitutive models in [`material`], incremental
//! [`kinematics`], system [`assembly`], block [`linsolve`] methods, the
//! outer [`solver`] drivers and manufactured-solution [`verification`].

pub mod assembly;
pub mod error;
pub mod kinematics;
pub mod linsolve;
pub mod material;
pub mod mesh;
pub mod solver;
pub mod tensor;
pub mod verification;

pub use error::{Error, Location, Result};
pub use tensor::{Tensor2, Tensor4, Vector3};
