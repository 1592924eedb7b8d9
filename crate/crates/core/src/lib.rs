pub mod evaluation;
pub mod geometry;
pub mod hierarchy;
pub mod simulation;
pub mod transport;
pub mod io;
pub mod cli;
