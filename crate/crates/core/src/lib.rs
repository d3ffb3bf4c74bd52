//! Embedded multi-model engine: relational tables, document collections and
//! property graphs over one record store, with graph-centric cross-model
//! queries and in-engine matrix analytics.

pub mod analytics;
pub mod cost;
pub mod database;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod predicate;
pub mod query;
pub mod schema;
pub mod stats;
pub mod storage;
pub mod value;

pub use error::{Error, Result};
