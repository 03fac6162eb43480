use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    MeshFormat {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("mesh topology: {0}")]
    Topology(String),
    #[error("degenerate cell {cell} (signed area {area:.3e})")]
    DegenerateCell { cell: usize, area: f64 },
    #[error("invalid gas state ({context}): rho = {rho:.6e}, p = {p:.6e}")]
    InvalidState { context: String, rho: f64, p: f64 },
    #[error("solver step rejected {retries} times at node {node}; CFL floor reached")]
    StepRejected { node: usize, retries: u32 },
    #[error(
        "shock-point solve at point {point} did not converge: residual {residual:.3e} after {iters} iterations"
    )]
    ShockSolveDiverged {
        point: usize,
        residual: f64,
        iters: u32,
    },
    #[error("expansion root at shock point {point}: p_down {p_down:.6e} < p_up {p_up:.6e}")]
    ExpansionRoot {
        point: usize,
        p_down: f64,
        p_up: f64,
    },
    #[error("cavity: {0}")]
    Cavity(String),
    #[error("transfer: {0}")]
    Transfer(String),
    #[error("shock front: {0}")]
    Front(String),
    #[error("case: {0}")]
    Case(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("in {phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags an error with the eST iteration phase it occurred in.
    pub fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
