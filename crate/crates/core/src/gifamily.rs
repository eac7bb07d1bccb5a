//! The set `GI(A)` of generalized inverses (`ABA = A`, `BAB = B`) as a
//! global chart.
//!
//! Fix the Moore–Penrose inverse `A₀⁺` as origin, with splittings
//! `E = N(A) ⊕ R₀⁺` and `F = R(A) ⊕ N₀⁺`. Every generalized inverse is then
//! uniquely
//!
//! ```text
//! M(α, β) = (I + α) A₀⁺ (I − β P)      P = projector onto N₀⁺ along R(A)
//! ```
//!
//! for linear maps `α: R₀⁺ → N(A)` and `β: N₀⁺ → R(A)`, with
//! `R(B) = {e + αe : e ∈ R₀⁺}` and `N(B) = {d + βd : d ∈ N₀⁺}`.
//! `M` is quadratic in `(α, β)`: its second derivative is constant and all
//! higher derivatives vanish.
//!
//! `α` and `β` are stored as coordinate matrices against the orthonormal
//! bases of [`FundamentalSubspaces`], so `α` has shape `dim N(A) × dim R₀⁺`
//! and `β` has shape `dim R(A) × dim N₀⁺`.

use crate::densela::{
    fundamental_subspaces, mp_inverse, oblique_projector, FundamentalSubspaces, LinalgError, Mat,
    PenroseResiduals, SubspaceBasis, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GiError {
    #[error("not a generalized inverse: ‖ABA − A‖ = {aba:e}, ‖BAB − B‖ = {bab:e}")]
    NotAGeneralizedInverse { aba: f64, bab: f64 },
    #[error("{what} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A point of `GI(A)` in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GenInverseChart {
    a: Mat,
    base_inverse: Mat,
    spaces: FundamentalSubspaces,
    /// `P_{N₀⁺}^{R(A)}`
    cokernel_projector: Mat,
    alpha: Mat,
    beta: Mat,
}

impl GenInverseChart {
    /// The chart origin `α = 0, β = 0`, i.e. `B = A₀⁺`.
    pub fn origin(a: &Mat, tol: &Tolerances) -> Result<Self, GiError> {
        let spaces = fundamental_subspaces(a, tol);
        let base_inverse = mp_inverse(a, tol);
        let cokernel_projector = oblique_projector(&spaces.cokernel, &spaces.range, tol)?;
        let alpha = Mat::zeros(spaces.null.dim(), spaces.corange.dim());
        let beta = Mat::zeros(spaces.range.dim(), spaces.cokernel.dim());
        Ok(Self {
            a: a.clone(),
            base_inverse,
            spaces,
            cokernel_projector,
            alpha,
            beta,
        })
    }

    /// Same base decomposition, new coordinates.
    pub fn with_coordinates(&self, alpha: Mat, beta: Mat) -> Result<Self, GiError> {
        self.check_alpha("alpha", &alpha)?;
        self.check_beta("beta", &beta)?;
        Ok(Self {
            alpha,
            beta,
            ..self.clone()
        })
    }

    /// Coordinates from ambient maps: only the restriction of `alpha_map` to
    /// `R₀⁺` followed by projection onto `N(A)` is kept, and likewise for
    /// `beta_map` on `N₀⁺` into `R(A)`.
    pub fn with_maps(&self, alpha_map: &Mat, beta_map: &Mat) -> Result<Self, GiError> {
        let (n, m) = (self.a.ncols(), self.a.nrows());
        check_shape("alpha_map", (n, n), alpha_map)?;
        check_shape("beta_map", (m, m), beta_map)?;
        let alpha = self.spaces.null.matrix().tr_mul(alpha_map) * self.spaces.corange.matrix();
        let beta = self.spaces.range.matrix().tr_mul(beta_map) * self.spaces.cokernel.matrix();
        self.with_coordinates(alpha, beta)
    }

    /// Random coordinates with entries uniform in `[-scale, scale)`.
    pub fn sample_coordinates(&self, rng: &mut impl Rng, scale: f64) -> (Mat, Mat) {
        let (ar, ac) = self.alpha_shape();
        let (br, bc) = self.beta_shape();
        let alpha = Mat::from_fn(ar, ac, |_, _| rng.gen_range(-scale..scale));
        let beta = Mat::from_fn(br, bc, |_, _| rng.gen_range(-scale..scale));
        (alpha, beta)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    /// `A₀⁺`, the Moore–Penrose inverse at the chart origin.
    pub fn base_inverse(&self) -> &Mat {
        &self.base_inverse
    }

    pub fn spaces(&self) -> &FundamentalSubspaces {
        &self.spaces
    }

    pub fn cokernel_projector(&self) -> &Mat {
        &self.cokernel_projector
    }

    pub fn alpha(&self) -> &Mat {
        &self.alpha
    }

    pub fn beta(&self) -> &Mat {
        &self.beta
    }

    pub fn alpha_shape(&self) -> (usize, usize) {
        (self.spaces.null.dim(), self.spaces.corange.dim())
    }

    pub fn beta_shape(&self) -> (usize, usize) {
        (self.spaces.range.dim(), self.spaces.cokernel.dim())
    }

    /// `α` as an `n × n` matrix (zero on `N(A)`).
    pub fn alpha_map(&self) -> Mat {
        self.lift_alpha(&self.alpha)
    }

    /// `β` as an `m × m` matrix (zero on `R(A)`).
    pub fn beta_map(&self) -> Mat {
        self.lift_beta(&self.beta)
    }

    fn lift_alpha(&self, alpha: &Mat) -> Mat {
        self.spaces.null.matrix() * alpha * self.spaces.corange.matrix().transpose()
    }

    fn lift_beta(&self, beta: &Mat) -> Mat {
        self.spaces.range.matrix() * beta * self.spaces.cokernel.matrix().transpose()
    }

    fn check_alpha(&self, what: &'static str, alpha: &Mat) -> Result<(), GiError> {
        check_shape(what, self.alpha_shape(), alpha)
    }

    fn check_beta(&self, what: &'static str, beta: &Mat) -> Result<(), GiError> {
        check_shape(what, self.beta_shape(), beta)
    }

    /// `M(α, β)` for arbitrary coordinates over this chart's base.
    fn compose(&self, alpha: &Mat, beta: &Mat) -> Mat {
        let n = self.a.ncols();
        let m = self.a.nrows();
        let left = Mat::identity(n, n) + self.lift_alpha(alpha);
        let right = Mat::identity(m, m) - self.lift_beta(beta) * &self.cokernel_projector;
        left * &self.base_inverse * right
    }
}

fn check_shape(what: &'static str, expected: (usize, usize), found: &Mat) -> Result<(), GiError> {
    if found.shape() != expected {
        return Err(GiError::ShapeMismatch {
            what,
            expected,
            found: found.shape(),
        });
    }
    Ok(())
}

/// A member `B` of `GI(A)` together with orthonormal bases of `R(B)` and `N(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenInverse {
    pub matrix: Mat,
    pub range_basis: SubspaceBasis,
    pub null_basis: SubspaceBasis,
}

/// `B = M(α, β)`. The range and null bases come from the graph descriptions
/// `{e + αe}` and `{d + βd}`, not from a decomposition of `B`.
pub fn build(chart: &GenInverseChart, tol: &Tolerances) -> GenInverse {
    let matrix = chart.compose(&chart.alpha, &chart.beta);
    let sp = &chart.spaces;
    let range_graph = sp.corange.matrix() + sp.null.matrix() * &chart.alpha;
    let null_graph = sp.cokernel.matrix() + sp.range.matrix() * &chart.beta;
    GenInverse {
        matrix,
        range_basis: SubspaceBasis::span_of(&range_graph, tol),
        null_basis: SubspaceBasis::span_of(&null_graph, tol),
    }
}

/// The chart coordinates of a generalized inverse `b` of `a`.
///
/// `α = P_{N(A)}^{R₀⁺} P_{R(B)}^{N(A)}` restricted to `R₀⁺` and
/// `β = P_{R(A)}^{N₀⁺} P_{N(B)}^{R(A)}` restricted to `N₀⁺`.
pub fn recover_chart(a: &Mat, b: &Mat, tol: &Tolerances) -> Result<GenInverseChart, GiError> {
    check_shape("b", (a.ncols(), a.nrows()), b)?;
    let res = PenroseResiduals::of(a, b);
    if !res.is_generalized_inverse(tol) {
        return Err(GiError::NotAGeneralizedInverse {
            aba: res.aba,
            bab: res.bab,
        });
    }
    let origin = GenInverseChart::origin(a, tol)?;
    let sp = &origin.spaces;
    let b_spaces = fundamental_subspaces(b, tol);

    let onto_null = oblique_projector(&sp.null, &sp.corange, tol)?;
    let onto_range_b = oblique_projector(&b_spaces.range, &sp.null, tol)?;
    let alpha = sp.null.matrix().tr_mul(&(onto_null * onto_range_b)) * sp.corange.matrix();

    let onto_range = oblique_projector(&sp.range, &sp.cokernel, tol)?;
    let onto_null_b = oblique_projector(&b_spaces.null, &sp.range, tol)?;
    let beta = sp.range.matrix().tr_mul(&(onto_range * onto_null_b)) * sp.cokernel.matrix();

    origin.with_coordinates(alpha, beta)
}

/// The unique member of `GI(A)` with range `range` and null space `null`:
/// `P_{range}^{N(A)} A₀⁺ P_{R(A)}^{null}`. Built without the chart.
pub fn from_subspaces(
    a: &Mat,
    range: &SubspaceBasis,
    null: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<Mat, GiError> {
    let sp = fundamental_subspaces(a, tol);
    let left = oblique_projector(range, &sp.null, tol)?;
    let right = oblique_projector(&sp.range, null, tol)?;
    Ok(left * mp_inverse(a, tol) * right)
}

/// First derivative of `M` at `chart` applied to `(Δα, Δβ)`:
/// `Δα A₀⁺ (I − βP) − (I + α) A₀⁺ Δβ P`.
pub fn d_m(chart: &GenInverseChart, d_alpha: &Mat, d_beta: &Mat) -> Result<Mat, GiError> {
    chart.check_alpha("d_alpha", d_alpha)?;
    chart.check_beta("d_beta", d_beta)?;
    let n = chart.a.ncols();
    let m = chart.a.nrows();
    let p = &chart.cokernel_projector;
    let a0 = &chart.base_inverse;
    let first = chart.lift_alpha(d_alpha) * a0 * (Mat::identity(m, m) - chart.beta_map() * p);
    let second = (Mat::identity(n, n) + chart.alpha_map()) * a0 * chart.lift_beta(d_beta) * p;
    Ok(first - second)
}

/// Second derivative of `M` applied to `(Δα, Δβ)` and `(Δα₁, Δβ₁)`:
/// `−Δα A₀⁺ Δβ₁ P − Δα₁ A₀⁺ Δβ P`.
///
/// Only the base decomposition of `base` is used; its coordinates are ignored.
pub fn d2_m(
    d_alpha: &Mat,
    d_beta: &Mat,
    d_alpha1: &Mat,
    d_beta1: &Mat,
    base: &GenInverseChart,
) -> Result<Mat, GiError> {
    base.check_alpha("d_alpha", d_alpha)?;
    base.check_beta("d_beta", d_beta)?;
    base.check_alpha("d_alpha1", d_alpha1)?;
    base.check_beta("d_beta1", d_beta1)?;
    let p = &base.cokernel_projector;
    let a0 = &base.base_inverse;
    let cross = |da: &Mat, db: &Mat| base.lift_alpha(da) * a0 * base.lift_beta(db) * p;
    Ok(-cross(d_alpha, d_beta1) - cross(d_alpha1, d_beta))
}

/// An increment `(Δα, Δβ)` in chart coordinates.
pub type Increment = (Mat, Mat);

/// Step used for third-order differences; large enough that rounding
/// divided by `h³` stays well below the `1e-6` decision threshold.
pub const THIRD_DIFFERENCE_STEP: f64 = 1e-3;
const THIRD_DIFFERENCE_LIMIT: f64 = 1e-6;

/// Mixed third-order central difference of `map` at `chart` along three
/// increments, `Σ_{s∈{±1}³} s₁s₂s₃ map(x + h Σ sᵢΔᵢ) / (8h³)`. Returns the
/// largest absolute entry.
pub fn third_difference<F>(
    chart: &GenInverseChart,
    increments: &[Increment; 3],
    h: f64,
    map: F,
) -> f64
where
    F: Fn(&GenInverseChart, &Mat, &Mat) -> Mat,
{
    let mut acc = Mat::zeros(chart.a.ncols(), chart.a.nrows());
    for signs in 0..8u32 {
        let s: [f64; 3] = std::array::from_fn(|i| if signs >> i & 1 == 0 { 1.0 } else { -1.0 });
        let mut alpha = chart.alpha.clone();
        let mut beta = chart.beta.clone();
        for (si, (da, db)) in s.iter().zip(increments) {
            alpha += da * (si * h);
            beta += db * (si * h);
        }
        acc += map(chart, &alpha, &beta) * (s[0] * s[1] * s[2]);
    }
    acc.amax() / (8.0 * h * h * h)
}

/// Samples `trials` random increment triples and checks that the third-order
/// difference of `M` stays below `1e-6` for each.
pub fn third_derivative_is_zero(base: &GenInverseChart, trials: usize, seed: u64) -> bool {
    third_derivative_is_zero_with(base, trials, seed, |chart, alpha, beta| {
        chart.compose(alpha, beta)
    })
}

/// As [`third_derivative_is_zero`], for an arbitrary map over the chart
/// coordinates.
pub fn third_derivative_is_zero_with<F>(
    base: &GenInverseChart,
    trials: usize,
    seed: u64,
    map: F,
) -> bool
where
    F: Fn(&GenInverseChart, &Mat, &Mat) -> Mat,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| {
        let increments: [Increment; 3] =
            std::array::from_fn(|_| base.sample_coordinates(&mut rng, 1.0));
        third_difference(base, &increments, THIRD_DIFFERENCE_STEP, &map) < THIRD_DIFFERENCE_LIMIT
    })
}

/// `M(α, β)` evaluated directly from coordinates over `chart`'s base.
pub fn build_matrix(chart: &GenInverseChart, alpha: &Mat, beta: &Mat) -> Result<Mat, GiError> {
    chart.check_alpha("alpha", alpha)?;
    chart.check_beta("beta", beta)?;
    Ok(chart.compose(alpha, beta))
}
