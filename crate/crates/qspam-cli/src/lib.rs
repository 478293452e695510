//! Campaign layer behind the `qspam` binary: config parsing, the four
//! campaign commands, and deterministic report emission.

pub mod campaign;
