//! p-adic balls, locally constant functions, wavelets and tree-local operators.

pub mod ball;
pub mod cyclotomic;
pub mod error;
pub mod fp;
pub mod function;
pub mod morphism;
pub mod operators;
pub mod padic;
pub mod rng;
pub mod sample;

pub use ball::{Ball, TangentClass};
pub use error::{Error, Result};
pub use function::{LCFunction, WaveletIndex};
pub use morphism::{ChildAction, DifferentiableSpec, Morphism};
pub use padic::{PAdic, PAdicVec};
