//! HTTP service for translation memories and translation sessions.
//!
//! Documents are submitted once and answered with a URI; the translation
//! memory for that URI is cut from the database when it is requested.
//! Sessions take a packed dossier, collect translations row by row and
//! hand the dossier back with the new version written in.

mod error;
mod routes;
pub mod session;
pub mod state;

pub use error::ApiError;
pub use routes::{router, serve, serve_on};
pub use state::{AppState, ServerConfig, Submission, DEFAULT_DATABASE, DEFAULT_THRESHOLD};
