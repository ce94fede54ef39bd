//! Shared helpers for the integration and acceptance suites.

pub mod scalar_oracle;
