//! Library side of the `ratesplit` command: config files, batch runs,
//! verification, oracle comparison and plot tables.

pub mod config;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod run;
pub mod verify;
