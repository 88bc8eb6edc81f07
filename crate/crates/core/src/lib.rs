pub mod accumulate;
pub mod cli;
pub mod dual;
pub mod error;
pub mod frame_op;
pub mod gallery;
pub mod kframe;
pub mod linalg;
pub mod op_calc;
pub mod spec_io;
pub mod stability;
pub mod system;

pub use error::{Error, Result};
pub use system::{Atom, AtomSpace, BiGSystem, LinOp, Tolerances};
