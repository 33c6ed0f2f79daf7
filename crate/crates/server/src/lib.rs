//! HTTP service and offline tooling around the `concept-lens` engine.
//!
//! The same report builders back both the `stats` subcommand and the
//! `/api/consistency` endpoint, so the two always agree bit for bit.

pub mod api;
pub mod indices;
pub mod placeholder;
pub mod report;
pub mod session;

pub use api::{router, AppState};
pub use session::{ServeConfig, Session};
