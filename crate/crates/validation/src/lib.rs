//! Acceptance suite for `rstre-core`; see `tests/acceptance.rs`.
