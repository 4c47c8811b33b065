use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("group {group} has no samples")]
    EmptyGroup { group: usize },
    #[error("at least two groups are required, found {found}")]
    TooFewGroups { found: usize },
    #[error("dataset must be centered before computing moments")]
    NotCentered,
    #[error("matrix is not symmetric positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not an orthogonal projector")]
    NotProjector,
    #[error("ambiguity radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("the binary reformulation needs exactly 2 groups, found {groups}; use nonbinary::pair_params for more")]
    NotBinary { groups: usize },
    #[error("reformulation conditions violated for groups {groups:?}: need lambda <= p_a or an eigenvalue bound >= eps_a")]
    ConditionsViolated { groups: Vec<usize> },
    #[error("subgradient undefined: <UU^T, M_{group}> = {value:e} is below the singularity floor")]
    SubgradientSingularity { group: usize, value: f64 },
    #[error("negative quadratic form {value:e} under a square root; second moment is not PSD")]
    NegativeQuadratic { value: f64 },
    #[error("Lipschitz constant undefined: second moment of group {group} is singular")]
    LipschitzUndefined { group: usize },
    #[error("matrix columns are not orthonormal (residual {residual:e})")]
    NotOrthonormal { residual: f64 },
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("trace is empty")]
    EmptyTrace,
}
