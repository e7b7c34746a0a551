//! Files, CLI and HTTP service around `conceptkd-core`.
//!
//! The library side covers the on-disk formats ([`store`]), manifest-backed
//! datasets ([`dataset`]), the payloads both front ends return ([`api`]), the
//! shared service state ([`session`]) and the axum router ([`service`]).

pub mod api;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod service;
pub mod session;
pub mod store;
pub mod training;

pub use error::{Result, StoreError};
