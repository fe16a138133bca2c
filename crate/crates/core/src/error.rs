use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("length error: {0}")]
    Length(String),
    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },
    #[error("unit error: {0}")]
    Unit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("symmetry error: {0}; use eigen_general for non-symmetric systems")]
    Symmetry(String),
    #[error("matrix error: {0}")]
    Matrix(String),
    #[error("stability error: dt = {dt:e} s exceeds bound {bound:e} s (1/(20 f_max), f_max = {f_max_hz:.6} Hz)")]
    Stability { dt: f64, bound: f64, f_max_hz: f64 },
    #[error("singular dynamic stiffness at omega = {omega} rad/s (undamped natural frequency {omega_r} rad/s)")]
    Singular { omega: f64, omega_r: f64 },
    #[error("insufficient pulses: found {found}, need at least {needed}")]
    InsufficientPulses { found: usize, needed: usize },
    #[error("role error: {0}")]
    Role(String),
    #[error("tacho dropout at revolution {index}: period {period:e} s vs previous {previous:e} s")]
    Dropout {
        index: usize,
        period: f64,
        previous: f64,
    },
    #[error(
        "aliasing error: order {order} requires more than {samples_per_rev} samples per revolution"
    )]
    Aliasing {
        order: usize,
        samples_per_rev: usize,
    },
    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
