//! Exact sparse simulation of quantum double models over ℤ₂, S₃ and the
//! hybrid ℤ₂ | S₃ lattice separated by a gapped domain wall.
//!
//! Every edge stores an element of the ambient group ℤ₂ × S₃. Edges in the
//! ℤ₂ region only ever hold `(a, e)`, edges in the S₃ region `(e, b)`, and wall
//! edges hold pairs. This lets one set of operator routines serve all three
//! regions.
//!
//! The numeric core is generic over the real scalar type; [`State`] and
//! [`Op`] are the double-precision instantiations used by the protocols.

pub mod circuits;
pub mod error;
pub mod experiments;
pub mod group;
pub mod lattice;
pub mod operators;
pub mod protocols;
pub mod ribbon;
pub mod state;
pub mod teleport;
pub mod wall;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub use error::{QdError, Result};
pub use group::{Element, FiniteGroup};
pub use lattice::{EdgeId, Lattice, LatticeSpec, Region, Site, VertexId};

/// Real scalar usable as the component type of the simulator's complex amplitudes.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only for non-representable values.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex<T> = num_complex::Complex<T>;

/// Double-precision sparse state.
pub type State = state::SparseState<f64>;
/// Single-precision sparse state, useful for memory-bound exploratory runs.
pub type StateF32 = state::SparseState<f32>;
/// Double-precision operator.
pub type Op = operators::LinearOp<f64>;
/// Double-precision complex scalar.
pub type C64 = num_complex::Complex64;
