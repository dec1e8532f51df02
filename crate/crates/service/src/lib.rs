//! Model store, HTTP API and command line for circles.

pub mod api;
pub mod cli;
pub mod params;
pub mod store;

pub use api::{router, SharedStore};
pub use store::{ModelRecord, ModelSummary, Store, StoreError};
