//! Dense linear algebra, activations, singular values and the seeded
//! random source shared by every other module.

mod activation;
mod matrix;
mod rng;
mod svd;

pub use activation::{sigmoid, softplus, Activation};
pub use matrix::{axpy, dot, Matrix};
pub use rng::RandomSource;
pub(crate) use rng::check_probability;
pub use svd::singular_values;
