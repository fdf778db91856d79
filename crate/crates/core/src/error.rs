use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field is +inf here: weight vanishes at theta = {theta}")]
    FieldInfinite { theta: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("second derivative of the field is not available")]
    MissingSecondDerivative,

    #[error("invalid arc set: {0}")]
    InvalidArcs(String),

    #[error("on-cut evaluation requested at z = {z}; use the boundary value instead")]
    OnCut { z: num_complex::Complex64 },

    #[error("evaluation at an arc endpoint (theta = {theta})")]
    EndpointSingularity { theta: f64 },

    #[error("theta = {theta} is not inside the support")]
    OffSupport { theta: f64 },

    #[error("grid size {n} must be a power of two and at least {min}")]
    GridSize { n: usize, min: usize },

    #[error("negative density {value} at theta = {theta}")]
    NegativeDensity { theta: f64, value: f64 },

    #[error("support is not the full circle: density negative on {intervals:?}")]
    NotFullCircle { intervals: Vec<(f64, f64)> },

    #[error("inconsistent support: imaginary part of the density reaches {imag}")]
    InconsistentSupport { imag: f64 },

    #[error("{count} arcs exceed the bound {bound} for this field class")]
    TooManyArcs { count: usize, bound: usize },

    #[error("quadrature did not converge ({0})")]
    Quadrature(String),

    #[error("arc {index} collapsed during the endpoint solve; reduce K and retry")]
    ArcCollapse { index: usize },

    #[error("gap after arc {index} closed during the endpoint solve; merge its neighbors and retry")]
    GapCollapse { index: usize },

    #[error("endpoint solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("oracle did not converge after {iterations} iterations (Frostman gap {gap:e})")]
    OracleNoConvergence { iterations: usize, gap: f64 },

    #[error("empty support: every weight is below the threshold")]
    EmptySupport,

    #[error("potential plus field varies by {variation:e} on the support; refusing to assign F_w")]
    RobinVariation { variation: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Whether this signals that the arc count should be reduced.
    pub fn is_collapse(&self) -> bool {
        matches!(self.root(), Error::ArcCollapse { .. } | Error::GapCollapse { .. })
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
