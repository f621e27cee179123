use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("degenerate element {element}: jacobian determinant {det:e} at reference point {point:?}")]
    DegenerateElement {
        element: usize,
        det: f64,
        point: [f64; 2],
    },
    #[error("local mass matrix is singular (pivot {pivot} = {value:e})")]
    SingularMatrix { pivot: usize, value: f64 },
    #[error("failed to allocate {0} scalars")]
    Allocation(usize),
    #[error("configuration conflict: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
