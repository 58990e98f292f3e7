pub mod cli;
pub mod closedform;
pub mod config;
pub mod distortions;
pub mod distributions;
pub mod error;
pub mod grid;
pub mod premium;
pub mod quad;
pub mod retention;
pub mod solver;
pub mod objective;
pub mod roots;
pub mod simulate;
