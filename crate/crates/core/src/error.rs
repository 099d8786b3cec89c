use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate lattice basis (|l1 ^ l2| = {0:e})")]
    DegenerateBasis(f64),

    #[error("refinement depth {depth} underflows quadrature weights ({weight:e} < 1e-300)")]
    WeightUnderflow { depth: u32, weight: f64 },

    #[error("hopping list violates the conjugate-pair condition by {violation:e} at cell displacement {cell:?}")]
    ConjugatePairViolation { cell: [i32; 2], violation: f64 },

    #[error("model has no hopping list; analytic current vertex unavailable")]
    NoHoppingList,

    #[error("empty momentum mesh")]
    EmptyMesh,

    #[error("model is gapless at mu = {mu} (min distance {delta:e} at mesh {mesh_n})")]
    Gapless { mu: f64, delta: f64, mesh_n: usize },

    #[error("inadmissible plaquette flux {flux} at mesh {mesh_n}; mesh too coarse")]
    InadmissibleFlux { flux: f64, mesh_n: usize },

    #[error("plaquette flux sum {0} is not an integer")]
    NonIntegerChern(f64),

    #[error("fit needs at least 3 positive frequencies spanning 2 decades: {0}")]
    InsufficientFrequencies(String),

    #[error("quotient sequence for entry ({i},{j}) is non-monotone beyond tolerance")]
    NoConvergence { i: usize, j: usize },

    #[error("mode count {0} exceeds the exact diagonalization cap of 28")]
    TooManyModes(usize),

    #[error("interaction kernel is not symmetric: {0}")]
    AsymmetricKernel(String),

    #[error("frequency {omega} is not on the Matsubara grid 2 pi n / beta (beta = {beta})")]
    OffGridFrequency { omega: f64, beta: f64 },

    #[error("finite-size spectrum is gapless")]
    GaplessSpectrum,

    #[error("particle-number sector of dimension {0} exceeds the dense limit")]
    SectorTooLarge(usize),
}
