//! Network construction and contraction of the discretized influence
//! functional `F = Π_{i ≥ j} b_{i−j}[α_i, α_j]`.
//!
//! Both schemes thread one shared leg through a string of influence tensors
//! per row; they differ in which leg is shared. The non-local rows share the
//! newest leg and the boundary grows by one site per iteration. The local
//! rows share the oldest open leg, which is final once its row is in, so
//! only the region still reachable by a thread is ever recompressed.

mod contract;
mod io;
mod mps;
mod row;

pub use contract::{contract, contract_local, contract_nonlocal, memory_truncate, InfluenceMps};
pub use io::{read_mps, write_mps};
pub use mps::{BoundaryMps, ContractionStats, MpsSite};
pub use row::{build_local_row, build_nonlocal_row, MpoRow, RowSite, Scheme};
