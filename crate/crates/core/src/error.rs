use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{requested} qubits exceed the statevector cap of {cap}; use a smaller lattice or raise the cap")]
    QubitCapExceeded { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "observable with prefactor {0} is not unitary; survival circuits need a Pauli string with prefactor +1 or -1"
    )]
    NonUnitaryObservable(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sector m_z={mz} has dimension {dim}, above the limit of {cap}; {hint}")]
    SectorTooLarge {
        mz: i32,
        dim: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("no eigenstate within |E - {energy}| < {half_width}; nearest eigenvalue is {nearest}")]
    EmptyWindow { energy: f64, half_width: f64, nearest: f64 },

    #[error("Magnus order {0} is not supported (orders 0, 1 and 2 are available)")]
    UnsupportedMagnusOrder(usize),

    #[error("no plateau of at least two steps satisfies the tolerance")]
    NoPlateau,

    #[error("survival probability of the identity circuit is {0}; cannot rescale")]
    NonPositiveDenominator(f64),

    #[error(
        "bound violated: |L_noisy/q^2 - L_true| = {lhs} > {rhs} (q={q}, r={r}, L_noisy={l_noisy}, L_true={l_true})"
    )]
    BoundViolation {
        q: f64,
        r: f64,
        l_noisy: f64,
        l_true: f64,
        lhs: f64,
        rhs: f64,
    },

    #[error("initial expectation value is zero; the sign of the series is undefined")]
    UndefinedInitialSign,

    #[error("spectrum cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the problem being too large for the configured
    /// resource caps rather than by invalid input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::QubitCapExceeded { .. } | Error::SectorTooLarge { .. })
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
