pub mod abstraction;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod lattice;
pub mod numerics;
pub mod reach;
pub mod sysmodel;
pub mod tsys;

pub use error::{Error, Result};
