//! Relations among switching functions, their codimension bookkeeping, and
//! pointwise classifiers for the jets of `(f0, f1)`.

pub mod classify;
pub mod dynamics;
pub mod expr;

pub use classify::{
    classify_point_3d, collinear_degeneracy_test, collinear_order_chain, destt_test,
    CollinearReport, DesttBranch, DesttReport, Determinants, PointClass, Scalar,
};
pub use dynamics::{
    accumulation_branches, fuller_bound, longest_admissible, Branch, FullerBound, LongestCurve,
    Phase, RelationState, Step,
};
pub use expr::{build_q, poisson, q_numeric_exact, Monomial, RelPoly, RelationExpr};
