//! Multiplier-free critical points of `f|_S`, multipliers obtained from
//! generalized inverses, and certificates that multipliers are not unique
//! when `g′(x)` is not surjective.
//!
//! A point `x` is critical when `g(x) = y₀` and `N(f′(x)) ⊇ N(g′(x))`,
//! equivalently `f′(x)(I − g′(x)⁺g′(x)) = 0` for any `g′(x)⁺ ∈ GI(g′(x))`.
//! Every such `g′(x)⁺` yields a multiplier `L = f′(x) ∘ g′(x)⁺`; it is unique
//! exactly when `g′(x)` is surjective.

use crate::densela::{
    fundamental_subspaces, mp_inverse, Mat, PenroseResiduals, Tolerances, Vector,
};
use crate::geometry::{jacobian, GeometryError, Problem};
use crate::gifamily::{build, GenInverseChart, GiError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationarityError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    GeneralizedInverse(#[from] GiError),
    #[error("point is not critical (constraint residual {constraint_residual:e}, tangent residual {tangent_residual:e})")]
    NotCritical {
        constraint_residual: f64,
        tangent_residual: f64,
    },
    #[error("f'(x) vanishes; there is no certificate to produce")]
    ZeroGradient,
    #[error("vector is not a nonzero element of the cokernel N0+ (residual {residual:e})")]
    NotInCokernel { residual: f64 },
    #[error("certificate construction degenerated (gap {gap:e})")]
    DegenerateCertificate { gap: f64 },
    #[error("no convergence after {iterations} iterations")]
    MaxIterExceeded {
        last: StationarityCheck,
        iterations: usize,
    },
    #[error("step system is singular at iteration {iteration} even with damping")]
    SingularStep { point: Vector, iteration: usize },
}

/// Raw residuals behind a criticality decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityCheck {
    pub point: Vector,
    /// `‖g(x) − y₀‖`
    pub constraint_residual: f64,
    /// `‖f′(x)(I − g′⁺(x)g′(x))‖` with the Moore–Penrose inverse.
    pub tangent_residual: f64,
    pub is_critical: bool,
}

/// `‖f′(I − B·J)‖`: the part of `f′` that does not factor through `J` via `B`.
pub fn tangent_residual_with(grad: &Vector, jac: &Mat, ginv: &Mat) -> f64 {
    let through = jac.tr_mul(&ginv.tr_mul(grad));
    (grad - through).norm()
}

pub fn check(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
) -> Result<StationarityCheck, StationarityError> {
    let constraint_residual = p.constraint_residual(x)?;
    let jac = jacobian(p, x)?;
    let grad = p.objective_grad(x)?;
    let tangent_residual = tangent_residual_with(&grad, &jac, &mp_inverse(&jac, tol));
    Ok(StationarityCheck {
        point: x.clone(),
        constraint_residual,
        tangent_residual,
        is_critical: constraint_residual < tol.residual_abs && tangent_residual < tol.residual_abs,
    })
}

/// Coordinates of `L = f′(x) ∘ ginv` for a generalized inverse `ginv` of `g′(x)`.
pub fn multiplier(
    p: &Problem,
    x: &Vector,
    ginv: &Mat,
    tol: &Tolerances,
) -> Result<Vector, StationarityError> {
    let jac = jacobian(p, x)?;
    if ginv.shape() != (p.n(), p.m()) {
        return Err(GiError::ShapeMismatch {
            what: "ginv",
            expected: (p.n(), p.m()),
            found: ginv.shape(),
        }
        .into());
    }
    let res = PenroseResiduals::of(&jac, ginv);
    if !res.is_generalized_inverse(tol) {
        return Err(GiError::NotAGeneralizedInverse {
            aba: res.aba,
            bab: res.bab,
        }
        .into());
    }
    Ok(ginv.tr_mul(&p.objective_grad(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierKind {
    UniqueRegular,
    IllPosed,
}

/// Either the unique multiplier or two distinct multipliers with a vector
/// on which they disagree.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierCertificate {
    UniqueRegular {
        l: Vector,
    },
    IllPosed {
        /// `f′ ∘ A₀⁺` (Moore–Penrose).
        l: Vector,
        /// `f′ ∘ B` for the constructed `B ∈ GI(g′(x))`.
        l1: Vector,
        /// `B` itself.
        alternative_inverse: Mat,
        witness: Vector,
        l_at_witness: f64,
        l1_at_witness: f64,
        /// `|L(v) − L₁(v)|`
        gap: f64,
    },
}

impl MultiplierCertificate {
    pub fn kind(&self) -> MultiplierKind {
        match self {
            MultiplierCertificate::UniqueRegular { .. } => MultiplierKind::UniqueRegular,
            MultiplierCertificate::IllPosed { .. } => MultiplierKind::IllPosed,
        }
    }

    pub fn l(&self) -> &Vector {
        match self {
            MultiplierCertificate::UniqueRegular { l }
            | MultiplierCertificate::IllPosed { l, .. } => l,
        }
    }
}

/// Produces the multiplier certificate at a critical point.
///
/// Surjective `g′(x)`: the Moore–Penrose multiplier, which is the only one.
/// Otherwise: `e₀ = f′ᵀ/‖f′‖²` (least-norm solution of `f′e₀ = 1`), `y⁺` the
/// first basis vector of `N₀⁺`, and [`ill_posed_pair`] on those.
pub fn certify_multiplier(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
) -> Result<MultiplierCertificate, StationarityError> {
    let status = check(p, x, tol)?;
    if !status.is_critical {
        return Err(StationarityError::NotCritical {
            constraint_residual: status.constraint_residual,
            tangent_residual: status.tangent_residual,
        });
    }
    let grad = p.objective_grad(x)?;
    let grad_norm_sq = grad.norm_squared();
    if grad_norm_sq.sqrt() <= tol.residual_abs {
        return Err(StationarityError::ZeroGradient);
    }
    let jac = jacobian(p, x)?;
    let spaces = fundamental_subspaces(&jac, tol);
    if spaces.rank == p.m() {
        let l = mp_inverse(&jac, tol).tr_mul(&grad);
        return Ok(MultiplierCertificate::UniqueRegular { l });
    }
    let e0 = &grad / grad_norm_sq;
    let y_plus = spaces.cokernel.vector(0);
    let cert = ill_posed_pair(p, x, &e0, &y_plus, tol)?;
    if let MultiplierCertificate::IllPosed { gap, .. } = cert {
        if gap <= tol.residual_abs {
            return Err(StationarityError::DegenerateCertificate { gap });
        }
    }
    Ok(cert)
}

/// Two multipliers at `x` built from explicit data.
///
/// With `y₁ = g′(x)e₀` and `β` sending `y⁺ ↦ y₁` (zero on the orthogonal
/// complement of `y⁺` in `N₀⁺`), `B = M(0, β)` is a generalized inverse with
/// `y⁺ + y₁ ∈ N(B)`. Returns `L = f′∘A₀⁺`, `L₁ = f′∘B` and the witness
/// `v = y⁺ + y₁`, on which `L(v) = f′(x)e₀` and `L₁(v) = 0`.
pub fn ill_posed_pair(
    p: &Problem,
    x: &Vector,
    e0: &Vector,
    y_plus: &Vector,
    tol: &Tolerances,
) -> Result<MultiplierCertificate, StationarityError> {
    let jac = jacobian(p, x)?;
    let grad = p.objective_grad(x)?;
    let origin = GenInverseChart::origin(&jac, tol)?;
    let cokernel = &origin.spaces().cokernel;
    let y_norm_sq = y_plus.norm_squared();
    let residual = cokernel.residual(y_plus);
    if y_norm_sq == 0.0 || residual > tol.residual_abs * y_norm_sq.sqrt().max(1.0) {
        return Err(StationarityError::NotInCokernel { residual });
    }
    let y1 = &jac * e0;
    let beta_map = &y1 * y_plus.transpose() / y_norm_sq;
    let alpha_map = Mat::zeros(p.n(), p.n());
    let chart = origin.with_maps(&alpha_map, &beta_map)?;
    let b = build(&chart, tol).matrix;

    let l = origin.base_inverse().tr_mul(&grad);
    let l1 = b.tr_mul(&grad);
    let witness = y_plus + &y1;
    let l_at_witness = l.dot(&witness);
    let l1_at_witness = l1.dot(&witness);
    Ok(MultiplierCertificate::IllPosed {
        gap: (l_at_witness - l1_at_witness).abs(),
        l,
        l1,
        alternative_inverse: b,
        witness,
        l_at_witness,
        l1_at_witness,
    })
}

/// A unit vector orthogonal to both `N(g′(x))` and `N(f′(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalWitness {
    pub e_star: Vector,
    /// Largest `|⟨e*, t⟩|` over the tangent basis.
    pub tangent_defect: f64,
    /// Largest `|⟨e*, v⟩|` over a basis of `N(f′(x))`.
    pub gradient_null_defect: f64,
}

/// Returns the normalized gradient, which is orthogonal to `N(f′(x))` by
/// construction and to `N(g′(x))` at a critical point. When
/// `dim N(f′(x))⊥ > 1` other choices exist; this one is not canonical.
pub fn orthogonal_witness(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
) -> Result<OrthogonalWitness, StationarityError> {
    let grad = p.objective_grad(x)?;
    let norm = grad.norm();
    if norm <= tol.residual_abs {
        return Err(StationarityError::ZeroGradient);
    }
    let status = check(p, x, tol)?;
    if !status.is_critical {
        return Err(StationarityError::NotCritical {
            constraint_residual: status.constraint_residual,
            tangent_residual: status.tangent_residual,
        });
    }
    let e_star = grad / norm;
    let tangent = fundamental_subspaces(&jacobian(p, x)?, tol).null;
    let row = Mat::from_row_slice(1, e_star.len(), e_star.as_slice());
    let grad_null = fundamental_subspaces(&row, tol).null;
    let defect = |basis: &Mat| basis.tr_mul(&e_star).amax();
    Ok(OrthogonalWitness {
        tangent_defect: defect(tangent.matrix()),
        gradient_null_defect: defect(grad_null.matrix()),
        e_star,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub check: StationarityCheck,
    pub iterations: usize,
}

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e16;
const STALL_WINDOW: usize = 10;
const STALL_RATIO: f64 = 0.999;
const POLISH_STEPS: usize = 2;
const RESTORE_STEPS: usize = 50;
const DESCENT_STEPS: usize = 200;
const BACKTRACKS: usize = 40;

/// Damped Gauss–Newton (Levenberg) on `[g(x) − y₀ ; Bᵀ∇f(x)]`, `B` the
/// tangent basis at the current iterate.
///
/// The lower block's Jacobian is `Bᵀ D(P∇f)` with `P = I − g′⁺g′`, taken by
/// central differences of the exact projected gradient. Steps are accepted
/// only when the merit `‖g − y₀‖² + ‖P∇f‖²` decreases.
///
/// The merit can have local minima that are not roots, where the stacked
/// Jacobian is singular and progress stalls. When the merit has dropped by
/// less than 0.1% over the last 10 iterations, the iterate is moved back
/// onto `S` (minimum-norm Gauss–Newton on `g`) and then down `f` along `S`
/// (projected gradient with backtracking), after which the damped iteration
/// resumes. Each such move counts as one iteration.
pub fn solve(
    p: &Problem,
    x_init: &Vector,
    tol: &Tolerances,
    max_iter: usize,
) -> Result<Solution, StationarityError> {
    let mut state = Iterate::at(p, x_init.clone(), tol)?;
    let mut lambda = LAMBDA_START;
    let mut history = vec![state.merit];
    for iteration in 1..=max_iter {
        if state.is_critical(tol) {
            return Ok(polish(p, state, lambda, tol, iteration - 1));
        }
        let stalled = history.len() > STALL_WINDOW
            && state.merit > STALL_RATIO * history[history.len() - 1 - STALL_WINDOW];
        if stalled {
            history.clear();
            if let Some(x) = escape(p, &state.x, tol) {
                state = Iterate::at(p, x, tol)?;
                lambda = LAMBDA_START;
                history.push(state.merit);
                continue;
            }
        }
        history.push(state.merit);
        match state.damped_step(p, lambda, tol, iteration)? {
            Some(next) if next.merit < state.merit => {
                state = next;
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
            }
            _ => lambda = (lambda * 10.0).min(LAMBDA_MAX),
        }
    }
    let last = state.check_with(tol);
    if last.is_critical {
        return Ok(Solution {
            check: last,
            iterations: max_iter,
        });
    }
    Err(StationarityError::MaxIterExceeded {
        last,
        iterations: max_iter,
    })
}

/// Restoration onto `S` followed by descent of `f` along `S`. `None` when
/// the point cannot be brought onto `S` or nothing changes.
fn escape(p: &Problem, x: &Vector, tol: &Tolerances) -> Option<Vector> {
    let mut x = restore(p, x, tol)?;
    let mut value = p.objective(&x).ok()?;
    let mut t = 1.0;
    for _ in 0..DESCENT_STEPS {
        let direction = -projected_gradient(p, &x, tol).ok()?;
        let slope = direction.norm_squared();
        if slope.sqrt() < tol.residual_abs {
            break;
        }
        let mut accepted = None;
        for _ in 0..BACKTRACKS {
            if let Some(candidate) = restore(p, &(&x + &direction * t), tol) {
                if let Ok(v) = p.objective(&candidate) {
                    if v <= value - 1e-4 * t * slope {
                        accepted = Some((candidate, v));
                        break;
                    }
                }
            }
            t /= 2.0;
        }
        let Some((next, v)) = accepted else { break };
        x = next;
        value = v;
        t *= 2.0;
    }
    Some(x)
}

/// Minimum-norm Gauss–Newton steps `x ← x − g′⁺(g − y₀)`, halved until the
/// constraint residual drops.
fn restore(p: &Problem, x: &Vector, tol: &Tolerances) -> Option<Vector> {
    let target = tol.residual_abs / 10.0;
    let mut x = x.clone();
    let mut residual = p.constraint_value(&x).ok()? - p.y0();
    for _ in 0..RESTORE_STEPS {
        if residual.norm() < target {
            return Some(x);
        }
        let step = mp_inverse(&jacobian(p, &x).ok()?, tol) * &residual;
        let mut t = 1.0;
        let mut improved = None;
        for _ in 0..BACKTRACKS {
            let candidate = &x - &step * t;
            if let Ok(g) = p.constraint_value(&candidate) {
                let r = g - p.y0();
                if r.norm() < residual.norm() {
                    improved = Some((candidate, r));
                    break;
                }
            }
            t /= 2.0;
        }
        (x, residual) = improved?;
    }
    (residual.norm() < target).then_some(x)
}

/// A couple of extra accepted steps once the tolerance is met, kept only if
/// the point stays critical.
fn polish(
    p: &Problem,
    mut state: Iterate,
    mut lambda: f64,
    tol: &Tolerances,
    iterations: usize,
) -> Solution {
    for _ in 0..POLISH_STEPS {
        match state.damped_step(p, lambda, tol, iterations) {
            Ok(Some(next)) if next.merit < state.merit && next.is_critical(tol) => {
                state = next;
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
            }
            _ => break,
        }
    }
    Solution {
        check: state.check_with(tol),
        iterations,
    }
}

struct Iterate {
    x: Vector,
    constraint: Vector,
    /// `P∇f`
    projected_grad: Vector,
    merit: f64,
}

impl Iterate {
    fn at(p: &Problem, x: Vector, tol: &Tolerances) -> Result<Self, StationarityError> {
        let constraint = p.constraint_value(&x)? - p.y0();
        let projected_grad = projected_gradient(p, &x, tol)?;
        let merit = constraint.norm_squared() + projected_grad.norm_squared();
        Ok(Self {
            x,
            constraint,
            projected_grad,
            merit,
        })
    }

    fn check(&self) -> (f64, f64) {
        (self.constraint.norm(), self.projected_grad.norm())
    }

    fn is_critical(&self, tol: &Tolerances) -> bool {
        self.check().is_critical(tol)
    }

    fn check_with(&self, tol: &Tolerances) -> StationarityCheck {
        let (constraint_residual, tangent_residual) = self.check();
        StationarityCheck {
            point: self.x.clone(),
            constraint_residual,
            tangent_residual,
            is_critical: (constraint_residual, tangent_residual).is_critical(tol),
        }
    }

    /// Candidate after one Levenberg step; `None` when the candidate cannot
    /// be evaluated (domain error, non-finite values).
    fn damped_step(
        &self,
        p: &Problem,
        lambda: f64,
        tol: &Tolerances,
        iteration: usize,
    ) -> Result<Option<Iterate>, StationarityError> {
        let (residual, jac) = self.linearize(p, tol)?;
        let n = p.n();
        let normal = jac.tr_mul(&jac) + Mat::identity(n, n) * lambda;
        let rhs = -jac.tr_mul(&residual);
        let step = normal.cholesky().map(|c| c.solve(&rhs));
        let step = match step {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ if lambda >= LAMBDA_MAX => {
                return Err(StationarityError::SingularStep {
                    point: self.x.clone(),
                    iteration,
                })
            }
            _ => return Ok(None),
        };
        Ok(Iterate::at(p, &self.x + step, tol).ok())
    }

    /// Stacked residual `[g − y₀ ; Bᵀ∇f]` and its Jacobian `[g′ ; Bᵀ D(P∇f)]`.
    fn linearize(&self, p: &Problem, tol: &Tolerances) -> Result<(Vector, Mat), StationarityError> {
        let jac = jacobian(p, &self.x)?;
        let tangent = fundamental_subspaces(&jac, tol).null;
        let b = tangent.matrix();
        let (m, n, k) = (p.m(), p.n(), tangent.dim());

        let mut field_jac = Mat::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * self.x[j].abs().max(1.0);
            let mut plus = self.x.clone();
            let mut minus = self.x.clone();
            plus[j] += h;
            minus[j] -= h;
            let diff = projected_gradient(p, &plus, tol)? - projected_gradient(p, &minus, tol)?;
            field_jac.set_column(j, &(diff / (2.0 * h)));
        }

        let mut residual = Vector::zeros(m + k);
        residual.rows_mut(0, m).copy_from(&self.constraint);
        residual
            .rows_mut(m, k)
            .copy_from(&b.tr_mul(&self.projected_grad));
        let mut stacked = Mat::zeros(m + k, n);
        stacked.rows_mut(0, m).copy_from(&jac);
        stacked.rows_mut(m, k).copy_from(&b.tr_mul(&field_jac));
        Ok((residual, stacked))
    }
}

trait Decide {
    fn is_critical(&self, tol: &Tolerances) -> bool;
}

impl Decide for (f64, f64) {
    fn is_critical(&self, tol: &Tolerances) -> bool {
        self.0 < tol.residual_abs && self.1 < tol.residual_abs
    }
}

/// `(I − g′⁺g′)∇f`, the tangential part of the gradient.
fn projected_gradient(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
) -> Result<Vector, StationarityError> {
    let jac = jacobian(p, x)?;
    let grad = p.objective_grad(x)?;
    let through = mp_inverse(&jac, tol) * (&jac * &grad);
    // (I − J⁺J) is symmetric, so projecting the column gradient is enough.
    Ok(grad - through)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn circle() -> Problem {
        Problem::new(2, "(x1-3)^2+(x2-4)^2", &["x1^2+x2^2"], &[1.0]).unwrap()
    }

    fn sphere_slice(x0: [f64; 3]) -> Problem {
        let f = format!("(x1-{})^2 + (x2-{})^2 + (x3-{})^2", x0[0], x0[1], x0[2]);
        Problem::new(3, &f, &["x1^2+x2^2+x3^2", "x3", "x3"], &[1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn circle_candidates() {
        let p = circle();
        let c = check(&p, &v(&[0.6, 0.8]), &tol()).unwrap();
        assert!(c.is_critical);
        assert!(c.constraint_residual < 1e-12 && c.tangent_residual < 1e-12);
        assert!(check(&p, &v(&[-0.6, -0.8]), &tol()).unwrap().is_critical);
        // f′ = (−4,−8), tangent (0,1): inner product −8.
        let c = check(&p, &v(&[1.0, 0.0]), &tol()).unwrap();
        assert!(!c.is_critical);
        assert!(c.tangent_residual > 0.1);
        assert_abs_diff_eq!(c.tangent_residual, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_multiplier() {
        let p = circle();
        let x = v(&[0.6, 0.8]);
        let ginv = Mat::from_row_slice(2, 1, &[0.3, 0.4]);
        let l = multiplier(&p, &x, &ginv, &tol()).unwrap();
        assert_abs_diff_eq!(l[0], -4.0, epsilon = 1e-12);
        let bad = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(
            multiplier(&p, &x, &bad, &tol()),
            Err(StationarityError::GeneralizedInverse(
                GiError::NotAGeneralizedInverse { .. }
            ))
        ));
        match certify_multiplier(&p, &x, &tol()).unwrap() {
            MultiplierCertificate::UniqueRegular { l } => {
                assert_abs_diff_eq!(l[0], -4.0, epsilon = 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_gradient_gives_zero_multiplier_and_no_certificate() {
        let p = Problem::new(2, "(x1-0.6)^2 + (x2-0.8)^2", &["x1^2+x2^2"], &[1.0]).unwrap();
        let x = v(&[0.6, 0.8]);
        let ginv = mp_inverse(&jacobian(&p, &x).unwrap(), &tol());
        assert!(multiplier(&p, &x, &ginv, &tol()).unwrap().amax() < 1e-15);
        assert_eq!(
            certify_multiplier(&p, &x, &tol()),
            Err(StationarityError::ZeroGradient)
        );
        assert_eq!(
            orthogonal_witness(&p, &x, &tol()),
            Err(StationarityError::ZeroGradient)
        );
    }

    #[test]
    fn certificate_requires_critical_point() {
        assert!(matches!(
            certify_multiplier(&circle(), &v(&[1.0, 0.0]), &tol()),
            Err(StationarityError::NotCritical { .. })
        ));
    }

    #[test]
    fn slice_ill_posed_pair_witness() {
        let p = sphere_slice([3.0, 4.0, 7.0]);
        let x = v(&[0.6, 0.8, 0.0]);
        // e₀ = x₃⁰e₃, y⁺ = −x₃⁰ε₂ + x₃⁰ε₃, witness 2x₃⁰ε₃.
        let cert =
            ill_posed_pair(&p, &x, &v(&[0.0, 0.0, 7.0]), &v(&[0.0, -7.0, 7.0]), &tol()).unwrap();
        match cert {
            MultiplierCertificate::IllPosed {
                witness,
                l_at_witness,
                l1_at_witness,
                ..
            } => {
                assert_abs_diff_eq!(witness, v(&[0.0, 0.0, 14.0]), epsilon = 1e-14);
                assert_abs_diff_eq!(l_at_witness, -98.0, epsilon = 1e-8);
                assert!(l1_at_witness.abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sphere_slice_generic_certificates() {
        for x0 in [[3.0, 4.0, 7.0], [3.0, 4.0, 0.0]] {
            let p = sphere_slice(x0);
            let cert = certify_multiplier(&p, &v(&[0.6, 0.8, 0.0]), &tol()).unwrap();
            match cert {
                MultiplierCertificate::IllPosed {
                    gap,
                    l_at_witness,
                    l1_at_witness,
                    ..
                } => {
                    assert_abs_diff_eq!(gap, 1.0, epsilon = 1e-10);
                    assert_abs_diff_eq!(l_at_witness, 1.0, epsilon = 1e-10);
                    assert!(l1_at_witness.abs() < 1e-10);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn y_plus_outside_cokernel_is_rejected() {
        let p = sphere_slice([3.0, 4.0, 7.0]);
        let err = ill_posed_pair(
            &p,
            &v(&[0.6, 0.8, 0.0]),
            &v(&[0.0, 0.0, 1.0]),
            &v(&[1.0, 0.0, 0.0]),
            &tol(),
        );
        assert!(matches!(err, Err(StationarityError::NotInCokernel { .. })));
    }

    #[test]
    fn orthogonal_witness_examples() {
        let p = sphere_slice([3.0, 4.0, 7.0]);
        let w = orthogonal_witness(&p, &v(&[0.6, 0.8, 0.0]), &tol()).unwrap();
        let expected = v(&[-2.4, -3.2, -7.0]).normalize();
        assert_abs_diff_eq!(w.e_star, expected, epsilon = 1e-14);
        assert!(w.tangent_defect < 1e-12 && w.gradient_null_defect < 1e-12);
        let w = orthogonal_witness(&circle(), &v(&[0.6, 0.8]), &tol()).unwrap();
        assert!((w.e_star.dot(&v(&[0.6, 0.8])).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_circle_and_sphere_slice() {
        let sol = solve(&circle(), &v(&[1.0, 0.0]), &tol(), 50).unwrap();
        assert!(sol.check.is_critical);
        assert!((sol.check.point.clone() - v(&[0.6, 0.8])).amax() < 1e-8);
        let sol = solve(
            &sphere_slice([3.0, 4.0, 7.0]),
            &v(&[1.0, 0.0, 0.0]),
            &tol(),
            100,
        )
        .unwrap();
        assert!((sol.check.point.clone() - v(&[0.6, 0.8, 0.0])).amax() < 1e-8);
    }

    #[test]
    fn solve_leaves_a_spurious_merit_minimum() {
        // From here the damped iteration alone stalls off the ellipse near
        // (1.78, -0.56) with merit ≈ 0.02.
        let p = Problem::new(2, "(x1-1)^2 + (x2-0.5)^2", &["x1^2/4 + x2^2"], &[1.0]).unwrap();
        let sol = solve(&p, &v(&[0.0, -0.5_f64.sqrt()]), &tol(), 100).unwrap();
        assert!(sol.check.is_critical);
        assert!(sol.check.constraint_residual < 1e-12);
    }

    #[test]
    fn exhausted_budget_reports_last_iterate() {
        match solve(&circle(), &v(&[1.0, 0.0]), &tol(), 2) {
            Err(StationarityError::MaxIterExceeded { last, iterations }) => {
                assert_eq!(iterations, 2);
                assert!(!last.is_critical);
                assert!(last.constraint_residual.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }
}
