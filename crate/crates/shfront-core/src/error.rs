use alloc::string::String;

/// Errors reported by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("angle {0} lies outside the fundamental sector")]
    AngleOutOfSector(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("lattice kinds do not match")]
    KindMismatch,
    #[error("state variant does not match the direction or lattice: {0}")]
    VariantMismatch(String),
    #[error("root {index} of mode ({n1},{n2}) has Re = {re:.3e}, within 5% of a band edge")]
    AmbiguousClassification { n1: i32, n2: i32, index: usize, re: f64 },
    #[error("root clustering disagrees with the lattice geometry for mode ({n1},{n2})")]
    Misclustered { n1: i32, n2: i32 },
    #[error("eigenvalue {re:.3e}{im:+.3e}i lies on the imaginary axis")]
    Marginal { re: f64, im: f64 },
    #[error("stable count {observed} disagrees with the Landau prediction {predicted}")]
    CountMismatch { observed: usize, predicted: usize },
    #[error("integration diverged at xi = {xi}")]
    Diverged { xi: f64 },
    #[error("no seed reached the target; best miss distance {best_miss:.3e}")]
    ShootingFailed { best_miss: f64 },
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
