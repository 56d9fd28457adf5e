pub mod assumption;
pub mod boundary;
pub mod cli;
pub mod config;
pub mod constants;
pub mod contour;
pub mod corpus;
pub mod correct;
pub mod enumerate;
pub mod error;
pub mod expansion;
pub mod ground;
pub mod intlat;
pub mod lattice;
pub mod local;
pub mod model;
pub mod montecarlo;
pub mod rational;
pub mod shape;
pub mod svg;
pub mod system;
pub mod voronoi;

pub use error::{Error, Result};

static THREADS: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

/// Worker threads for parallel enumeration; 0 means one per available core.
pub fn set_threads(k: usize) {
    THREADS.store(k, std::sync::atomic::Ordering::Relaxed);
}

pub fn threads() -> usize {
    match THREADS.load(std::sync::atomic::Ordering::Relaxed) {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        k => k,
    }
}
