//! Game service and command-line front end for the SPI Tic-Tac-Toe player.

pub mod api;
pub mod cli;
pub mod store;
