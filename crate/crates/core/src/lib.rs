//! Finding and certifying critical points of a functional `f` restricted to a
//! level set `S = g⁻¹(y₀)` when the constraint Jacobian `g′(x)` may be
//! rank-deficient.
//!
//! The stationarity test used throughout is multiplier-free:
//! `x` is critical for `f|_S` when `g(x) = y₀` and `N(f′(x)) ⊇ N(g′(x))`,
//! which is checked numerically as `f′(x)(I − g′(x)⁺g′(x)) = 0` for a
//! generalized inverse `g′(x)⁺`.
//!
//! Modules:
//!
//! * [`densela`]: numerical rank, fundamental subspaces, Moore–Penrose
//!   inverse, oblique projectors.
//! * [`gifamily`]: the family `GI(A)` of generalized inverses as a global
//!   chart `M(α, β)`, with its first and second derivatives.
//! * [`exprdsl`]: a small expression language with forward-mode gradients.
//! * [`geometry`]: constraint problems, Jacobians, tangent spaces and
//!   regularity classification.
//! * [`stationarity`]: criticality checks, multipliers, ill-posedness
//!   certificates and a damped Gauss–Newton solver.
//! * [`synth`]: random instances with known answers, for tests.

pub mod densela;
pub mod exprdsl;
pub mod geometry;
pub mod gifamily;
pub mod stationarity;
pub mod synth;

pub use densela::{Mat, SubspaceBasis, Tolerances, Vector};
pub use exprdsl::Expr;
pub use geometry::Problem;
