//! Sparse realizations of the represented generators on a truncated orbit
//! basis, and the verification suite for their relations and certificates.

mod build;
mod sparse;
mod verify;

pub use build::{
    build_mk, build_t, build_u, build_v, check_compat, mk_diagonal, op_adjoint, proj_cylinder,
    proj_image, word_operator, MkInfo,
};
pub use sparse::{ColumnComparison, SparseOperator, UnitComplex};
pub use verify::{
    commutant_certificate, covered_points, equivalence_report, mk_commutes_with_u, mk_convergence,
    verify_relations, CertificateReport, EquivalenceReport, MkConvergenceReport, MkResidual,
    MkRow, RelationCheck, RelationKind, VerificationReport,
};
