//! Instance files, timing, reports and benchmark sweeps around
//! [`iqpsdp_core`].

pub mod bench;
pub mod clock;
pub mod format;
pub mod report;

pub use clock::StdClock;
