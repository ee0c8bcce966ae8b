//! HTTP JSON API and terminal chat front ends for `newschat-core`.

pub mod api;
pub mod repl;
