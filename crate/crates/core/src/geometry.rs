//! Constraint-side analysis: Jacobians of `g`, tangent spaces of
//! `S = g⁻¹(y₀)` and regularity classification of points.

use crate::densela::{
    fundamental_subspaces, numerical_rank, Mat, SubspaceBasis, Tolerances, Vector,
};
use crate::exprdsl::{parse, EvalError, Expr, ParseError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("cannot parse {component}: {source}")]
    Parse {
        component: String,
        #[source]
        source: ParseError,
    },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("a problem needs at least one variable and one constraint component")]
    Empty,
    #[error("y0 must be finite")]
    NonFiniteTarget,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{what} is not finite at the requested point")]
    NonFinite { what: &'static str },
    #[error("point has dimension {found}, problem has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point is not on the constraint set (‖g(x) − y₀‖ = {residual:e})")]
    NotOnConstraint { residual: f64 },
}

/// Objective `f: Rⁿ → R` restricted to `S = {x : g(x) = y₀}`, `g: Rⁿ → Rᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    g: Vec<Expr>,
    y0: Vector,
    f: Expr,
}

impl Problem {
    /// Parses the objective and constraint components over `x1..xn`.
    pub fn new<S: AsRef<str>>(
        n: usize,
        f: &str,
        g: &[S],
        y0: &[f64],
    ) -> Result<Self, ProblemError> {
        let f = parse(f, n).map_err(|source| ProblemError::Parse {
            component: "f".into(),
            source,
        })?;
        let g = g
            .iter()
            .enumerate()
            .map(|(i, src)| {
                parse(src.as_ref(), n).map_err(|source| ProblemError::Parse {
                    component: format!("g[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_exprs(f, g, Vector::from_column_slice(y0))
    }

    pub fn from_exprs(f: Expr, g: Vec<Expr>, y0: Vector) -> Result<Self, ProblemError> {
        let n = f.dim();
        if n == 0 || g.is_empty() {
            return Err(ProblemError::Empty);
        }
        if let Some(bad) = g.iter().find(|e| e.dim() != n) {
            return Err(ProblemError::DimensionMismatch {
                what: "constraint component dimension",
                expected: n,
                found: bad.dim(),
            });
        }
        if y0.len() != g.len() {
            return Err(ProblemError::DimensionMismatch {
                what: "y0",
                expected: g.len(),
                found: y0.len(),
            });
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFiniteTarget);
        }
        Ok(Self { n, g, y0, f })
    }

    /// Domain dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Codomain dimension of `g`.
    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn g(&self) -> &[Expr] {
        &self.g
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn y0(&self) -> &Vector {
        &self.y0
    }

    fn check_point(&self, x: &Vector) -> Result<(), GeometryError> {
        if x.len() != self.n {
            return Err(GeometryError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { what: "point" });
        }
        Ok(())
    }

    pub fn constraint_value(&self, x: &Vector) -> Result<Vector, GeometryError> {
        self.check_point(x)?;
        let values = self
            .g
            .iter()
            .map(|e| e.eval(x.as_slice()))
            .collect::<Result<Vec<_>, _>>()?;
        finite(Vector::from_vec(values), "g(x)")
    }

    /// `‖g(x) − y₀‖₂`.
    pub fn constraint_residual(&self, x: &Vector) -> Result<f64, GeometryError> {
        Ok((self.constraint_value(x)? - &self.y0).norm())
    }

    pub fn objective(&self, x: &Vector) -> Result<f64, GeometryError> {
        self.check_point(x)?;
        let v = self.f.eval(x.as_slice())?;
        if !v.is_finite() {
            return Err(GeometryError::NonFinite { what: "f(x)" });
        }
        Ok(v)
    }

    /// `∇f(x)`, exact forward mode.
    pub fn objective_grad(&self, x: &Vector) -> Result<Vector, GeometryError> {
        self.check_point(x)?;
        finite(self.f.grad(x.as_slice())?, "f'(x)")
    }
}

fn finite<T: AsRef<[f64]>>(value: T, what: &'static str) -> Result<T, GeometryError> {
    if value.as_ref().iter().all(|v| v.is_finite()) {
        Ok(value)
    } else {
        Err(GeometryError::NonFinite { what })
    }
}

/// `g′(x)`, the `m × n` Jacobian, one forward-mode gradient per row.
pub fn jacobian(p: &Problem, x: &Vector) -> Result<Mat, GeometryError> {
    p.check_point(x)?;
    let mut j = Mat::zeros(p.m(), p.n);
    for (i, component) in p.g.iter().enumerate() {
        let grad = component.grad(x.as_slice())?;
        j.set_row(i, &grad.transpose());
    }
    finite(j, "g'(x)")
}

/// Orthonormal basis of `N(g′(x))`, the tangent space of `S` at `x`.
pub fn tangent_basis(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
) -> Result<SubspaceBasis, GeometryError> {
    let residual = p.constraint_residual(x)?;
    if residual >= tol.residual_abs {
        return Err(GeometryError::NotOnConstraint { residual });
    }
    Ok(fundamental_subspaces(&jacobian(p, x)?, tol).null)
}

/// Sampling of a neighbourhood for the generalized-regularity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub probes: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            probes: 64,
            radius: 1e-3,
            seed: 0,
        }
    }
}

/// Outcome of sampling `R(g′(x′)) ∩ N₀⁺ = {0}` over a neighbourhood.
///
/// `Confirmed` is evidence from finitely many samples, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneralizedRegularVerdict {
    Confirmed { samples: usize },
    Refuted { witness: Vector },
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub point: Vector,
    pub constraint_residual: f64,
    pub on_constraint: bool,
    pub rank: usize,
    pub m: usize,
    /// `g′(x)` is surjective.
    pub regular: bool,
    pub generalized_regular_verdict: GeneralizedRegularVerdict,
    pub tangent_basis: SubspaceBasis,
}

/// Classifies `x` as regular and tests generalized regularity by sampling.
///
/// `N₀⁺` is the orthogonal complement of `R(g′(x))`. A probe `x′` refutes
/// generalized regularity when `[basis R(g′(x′)) | basis N₀⁺]` loses rank.
pub fn classify(
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
    probe: &ProbeConfig,
) -> Result<RegularityReport, GeometryError> {
    let constraint_residual = p.constraint_residual(x)?;
    let j = jacobian(p, x)?;
    let spaces = fundamental_subspaces(&j, tol);
    let verdict = if probe.probes == 0 {
        GeneralizedRegularVerdict::Unknown
    } else {
        probe_generalized_regularity(p, x, &spaces.cokernel, tol, probe)?
    };
    Ok(RegularityReport {
        point: x.clone(),
        constraint_residual,
        on_constraint: constraint_residual < tol.residual_abs,
        rank: spaces.rank,
        m: p.m(),
        regular: spaces.rank == p.m(),
        generalized_regular_verdict: verdict,
        tangent_basis: spaces.null,
    })
}

fn probe_generalized_regularity(
    p: &Problem,
    x: &Vector,
    cokernel: &SubspaceBasis,
    tol: &Tolerances,
    probe: &ProbeConfig,
) -> Result<GeneralizedRegularVerdict, GeometryError> {
    for x_probe in halton_ball_points(x, probe.radius, probe.probes, probe.seed) {
        let j = jacobian(p, &x_probe)?;
        let range = fundamental_subspaces(&j, tol).range;
        let mut stacked = Mat::zeros(p.m(), range.dim() + cokernel.dim());
        stacked
            .columns_mut(0, range.dim())
            .copy_from(range.matrix());
        stacked
            .columns_mut(range.dim(), cokernel.dim())
            .copy_from(cokernel.matrix());
        if numerical_rank(&stacked, tol) < stacked.ncols() {
            return Ok(GeneralizedRegularVerdict::Refuted { witness: x_probe });
        }
    }
    Ok(GeneralizedRegularVerdict::Confirmed {
        samples: probe.probes,
    })
}

/// `count` quasi-random points of the closed ball of radius `radius` about
/// `center`: Halton points of `[0,1)ⁿ` (starting at index `seed·count + 1`)
/// mapped affinely into the cube of half-width `radius/√n`.
pub fn halton_ball_points(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let n = center.len();
    let bases = first_primes(n);
    let scale = radius / (n.max(1) as f64).sqrt();
    let start = seed.saturating_mul(count as u64).saturating_add(1);
    (0..count as u64)
        .map(|k| {
            let index = start + k;
            Vector::from_fn(n, |i, _| {
                center[i] + scale * (2.0 * radical_inverse(index, bases[i]) - 1.0)
            })
        })
        .collect()
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sphere_slice() -> Problem {
        Problem::new(
            3,
            "(x1-3)^2 + (x2-4)^2 + (x3-7)^2",
            &["x1^2+x2^2+x3^2", "x3", "x3"],
            &[1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    fn circle() -> Problem {
        Problem::new(2, "(x1-3)^2+(x2-4)^2", &["x1^2+x2^2"], &[1.0]).unwrap()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn line(xs: &[f64]) -> SubspaceBasis {
        SubspaceBasis::span_of(&Mat::from_column_slice(xs.len(), 1, xs), &tol())
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian(&sphere_slice(), &v(&[0.6, 0.8, 0.0])).unwrap();
        let expected = Mat::from_row_slice(3, 3, &[1.2, 1.6, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(j, expected, epsilon = 1e-15);
        let j = jacobian(&circle(), &v(&[0.6, 0.8])).unwrap();
        assert_abs_diff_eq!(j, Mat::from_row_slice(1, 2, &[1.2, 1.6]), epsilon = 1e-15);
        let linear = Problem::new(2, "x1", &["2*x1 - x2", "x2 + 5"], &[0.0, 0.0]).unwrap();
        let at_origin = jacobian(&linear, &v(&[0.0, 0.0])).unwrap();
        assert_eq!(at_origin, jacobian(&linear, &v(&[3.0, -7.5])).unwrap());
        assert_eq!(at_origin, Mat::from_row_slice(2, 2, &[2.0, -1.0, 0.0, 1.0]));
    }

    #[test]
    fn classify_sphere_slice_is_generalized_regular_only() {
        let report = classify(
            &sphere_slice(),
            &v(&[0.6, 0.8, 0.0]),
            &tol(),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert!(report.on_constraint);
        assert_eq!(report.rank, 2);
        assert!(!report.regular);
        assert_eq!(
            report.generalized_regular_verdict,
            GeneralizedRegularVerdict::Confirmed { samples: 64 }
        );
        assert!(report.tangent_basis.distance(&line(&[-0.8, 0.6, 0.0])) < 1e-12);
    }

    #[test]
    fn classify_circle_is_regular() {
        let report = classify(&circle(), &v(&[0.6, 0.8]), &tol(), &ProbeConfig::default()).unwrap();
        assert!(report.regular);
        assert_eq!(report.rank, 1);
        assert!(matches!(
            report.generalized_regular_verdict,
            GeneralizedRegularVerdict::Confirmed { .. }
        ));
    }

    #[test]
    fn rank_jump_is_refuted() {
        let p = Problem::new(1, "x1", &["x1^2"], &[0.0]).unwrap();
        let report = classify(&p, &v(&[0.0]), &tol(), &ProbeConfig::default()).unwrap();
        assert_eq!(report.rank, 0);
        match report.generalized_regular_verdict {
            GeneralizedRegularVerdict::Refuted { witness } => {
                assert!(witness[0] != 0.0 && witness[0].abs() <= 1e-3)
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn zero_probes_is_unknown() {
        let probe = ProbeConfig {
            probes: 0,
            ..ProbeConfig::default()
        };
        let report = classify(&circle(), &v(&[0.6, 0.8]), &tol(), &probe).unwrap();
        assert_eq!(
            report.generalized_regular_verdict,
            GeneralizedRegularVerdict::Unknown
        );
    }

    #[test]
    fn tangent_bases() {
        let t = tangent_basis(&sphere_slice(), &v(&[0.6, 0.8, 0.0]), &tol()).unwrap();
        assert!(t.distance(&line(&[-0.8, 0.6, 0.0])) < 1e-12);
        let t = tangent_basis(&circle(), &v(&[0.6, 0.8]), &tol()).unwrap();
        assert!(t.distance(&line(&[-0.8, 0.6])) < 1e-12);
        let square = Problem::new(2, "x1", &["x1 + x2", "x1 - x2"], &[0.0, 0.0]).unwrap();
        assert_eq!(
            tangent_basis(&square, &v(&[0.0, 0.0]), &tol())
                .unwrap()
                .dim(),
            0
        );
        assert!(matches!(
            tangent_basis(&circle(), &v(&[1.0, 1.0]), &tol()),
            Err(GeometryError::NotOnConstraint { .. })
        ));
    }

    #[test]
    fn sphere_slice_rank_is_two_around_the_circle() {
        let p = sphere_slice();
        for k in 0..50 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 50.0 + 0.1;
            let x = v(&[theta.cos(), theta.sin(), 0.0]);
            let report = classify(
                &p,
                &x,
                &tol(),
                &ProbeConfig {
                    probes: 4,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(report.on_constraint);
            assert_eq!(report.rank, 2);
            assert_eq!(report.tangent_basis.dim() + report.rank, 3);
        }
    }

    #[test]
    fn classification_is_scale_stable() {
        let p = sphere_slice();
        let scaled = Problem::new(
            3,
            "(x1-3)^2 + (x2-4)^2 + (x3-7)^2",
            &["10*(x1^2+x2^2+x3^2)", "10*x3", "10*x3"],
            &[10.0, 0.0, 0.0],
        )
        .unwrap();
        let x = v(&[0.6, 0.8, 0.0]);
        let a = classify(&p, &x, &tol(), &ProbeConfig::default()).unwrap();
        let b = classify(&scaled, &x, &tol(), &ProbeConfig::default()).unwrap();
        assert_eq!(a.rank, b.rank);
        assert_eq!(a.regular, b.regular);
        assert_eq!(a.generalized_regular_verdict, b.generalized_regular_verdict);
    }

    #[test]
    fn halton_points_stay_in_ball_and_depend_on_seed() {
        let c = v(&[1.0, -2.0, 0.5]);
        let pts = halton_ball_points(&c, 0.1, 64, 0);
        assert_eq!(pts.len(), 64);
        assert!(pts.iter().all(|p| (p - &c).norm() <= 0.1 + 1e-15));
        assert_eq!(pts, halton_ball_points(&c, 0.1, 64, 0));
        assert_ne!(pts, halton_ball_points(&c, 0.1, 64, 1));
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(
            Problem::new(2, "x1", &["x1"], &[0.0, 1.0]),
            Err(ProblemError::DimensionMismatch { what: "y0", .. })
        ));
        assert!(matches!(
            Problem::new(2, "x1", &["x3"], &[0.0]),
            Err(ProblemError::Parse { .. })
        ));
        assert!(matches!(
            Problem::new(2, "x1", &[] as &[&str], &[]),
            Err(ProblemError::Empty)
        ));
    }
}
