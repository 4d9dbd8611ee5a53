//! Known-plaintext key recovery on small-scale AES through SAT solving.
//!
//! [`cipher`] implements SR(n, r, c, e), [`encoder`] turns a key and text
//! pairs into CNF with no auxiliary variables, [`dimacs`] reads and writes
//! instances and solver output, [`harness`] runs solvers repeatedly and
//! checks recovered keys, [`stats`] summarizes runtimes and [`tuner`]
//! searches solver parameters by racing.

pub mod cipher;
pub mod config;
pub mod dimacs;
pub mod encoder;
pub mod harness;
pub mod solver;
pub mod stats;
pub mod textpairs;
pub mod tuner;
