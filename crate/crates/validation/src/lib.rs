//! Acceptance suite for `dsw-core`. Run it with `cargo test -p dsw-validation --test acceptance`.
