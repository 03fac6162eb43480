//! Steady compressible-flow toolkit for 2D unstructured meshes with an
//! explicitly tracked shock front.
//!
//! The crate couples a vertex-centered finite-volume Euler solver to a
//! shock polyline that is moved by solving the jump conditions pointwise:
//! cells crossed by the front are excavated, the solver runs on the two
//! resulting subdomains, Taylor-expansion transfers exchange states between
//! the front and the surrogate cavity boundaries, and a Newton solve per
//! shock point yields the downstream state and the front speed.

pub mod cases;
pub mod cavity;
pub mod error;
pub mod front;
pub mod motion;
pub mod rh;
pub mod solver;
pub mod transfer;
pub mod gas;
pub mod geom;
pub mod mesh;
pub mod par;

pub use error::{Error, Result};

/// Command-line entry point; parses arguments and dispatches subcommands.
pub fn cli_main() {
    eprintln!("command-line interface not wired up yet");
    std::process::exit(2);
}
