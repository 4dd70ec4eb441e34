//! Influence-functional tensor networks for a small quantum system coupled
//! linearly to a Gaussian bosonic bath.
// Guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod error;
pub mod network;
pub mod observables;
pub mod oracle;
pub mod process;
pub mod quad;
pub mod scaling;
pub mod tensor;

pub use bath::{BathSpec, DiscreteMode, InfluenceTensorSet, MemoryKernel, QuadControls, TimeGrid};
pub use error::{Error, Result};
pub use network::{InfluenceMps, Scheme};
pub use process::{BreakPolicy, Intervention, Process, SystemSpec};
pub use tensor::{DenseTensor, Matrix, TruncatedSvd, C64};
