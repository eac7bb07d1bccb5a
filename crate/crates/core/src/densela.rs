//! Dense linear-algebra kernels.
//!
//! Everything here is built on a sorted SVD (computed with `faer`; the
//! nalgebra SVD returns wrong factors for some exactly singular inputs).
//! The rank decision is made
//! once, relative to the largest singular value, and every derived object
//! (bases of the four fundamental subspaces, the Moore–Penrose inverse) uses
//! that same decision so they stay mutually consistent.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Dense real matrix.
pub type Mat = DMatrix<f64>;
/// Dense real column vector.
pub type Vector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("subspaces of dimension {onto} and {along} do not split R^{ambient}")]
    DegenerateSplit {
        onto: usize,
        along: usize,
        ambient: usize,
    },
    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("tolerance `{name}` must be finite and strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Numerical thresholds shared by every decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Singular values at or below `rank_rel * σ_max` count as zero.
    pub rank_rel: f64,
    /// Absolute cutoff for residuals (constraint, stationarity, Penrose).
    pub residual_abs: f64,
    /// Cutoff for `‖BᵀB − I‖` on orthonormal bases.
    pub ortho: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            residual_abs: 1e-8,
            ortho: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(rank_rel: f64, residual_abs: f64, ortho: f64) -> Result<Self, LinalgError> {
        let tol = Self {
            rank_rel,
            residual_abs,
            ortho,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        for (name, value) in [
            ("rank_rel", self.rank_rel),
            ("residual_abs", self.residual_abs),
            ("ortho", self.ortho),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(LinalgError::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }

    pub fn with_residual_abs(self, residual_abs: f64) -> Self {
        Self {
            residual_abs,
            ..self
        }
    }
}

/// An orthonormal set of column vectors spanning a subspace of `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: Mat,
}

impl SubspaceBasis {
    /// The zero subspace.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: Mat::zeros(ambient_dim, 0),
        }
    }

    /// The whole space, spanned by the standard basis.
    pub fn whole(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: Mat::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps columns that are already orthonormal, checking `BᵀB = I` to `tol.ortho`.
    pub fn from_orthonormal(vectors: Mat, tol: &Tolerances) -> Result<Self, LinalgError> {
        let deviation = orthonormality_defect(&vectors);
        // An orthonormality check cannot be tighter than rounding in BᵀB.
        let slack = tol
            .ortho
            .max(4.0 * f64::EPSILON * vectors.nrows().max(1) as f64);
        if deviation > slack {
            return Err(LinalgError::NotOrthonormal { deviation });
        }
        Ok(Self {
            ambient_dim: vectors.nrows(),
            vectors,
        })
    }

    /// Orthonormal basis of the column span of `spanning`, using the relative
    /// rank cutoff to drop numerically dependent directions.
    pub fn span_of(spanning: &Mat, tol: &Tolerances) -> Self {
        let ambient_dim = spanning.nrows();
        if spanning.ncols() == 0 || ambient_dim == 0 {
            return Self::zero(ambient_dim);
        }
        let svd = SortedSvd::new(spanning);
        let rank = svd.rank(tol);
        let mut vectors = svd.u.columns(0, rank).into_owned();
        canonicalize_signs(&mut vectors);
        Self {
            ambient_dim,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Basis vectors as the columns of an `ambient_dim × dim` matrix.
    pub fn matrix(&self) -> &Mat {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.vectors.column(i).into_owned()
    }

    /// `BBᵀ`, the orthogonal projector onto the subspace.
    pub fn orthogonal_projector(&self) -> Mat {
        &self.vectors * self.vectors.transpose()
    }

    /// Coordinates of `v` in this basis (`Bᵀv`).
    pub fn coordinates(&self, v: &Vector) -> Vector {
        self.vectors.tr_mul(v)
    }

    /// Distance of `v` from the subspace, `‖v − BBᵀv‖`.
    pub fn residual(&self, v: &Vector) -> f64 {
        (v - &self.vectors * self.coordinates(v)).norm()
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn orthogonal_complement(&self) -> Self {
        let d = self.ambient_dim;
        let k = self.dim();
        if k == 0 {
            return Self::whole(d);
        }
        if k >= d {
            return Self::zero(d);
        }
        let svd = SortedSvd::new(&self.vectors);
        let mut vectors = svd.u.columns(k, d - k).into_owned();
        canonicalize_signs(&mut vectors);
        Self {
            ambient_dim: d,
            vectors,
        }
    }

    /// Frobenius distance between the orthogonal projectors of two subspaces;
    /// infinite when the dimensions differ.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.ambient_dim != other.ambient_dim || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (self.orthogonal_projector() - other.orthogonal_projector()).norm()
    }
}

/// `‖BᵀB − I‖_F`.
pub fn orthonormality_defect(vectors: &Mat) -> f64 {
    let k = vectors.ncols();
    (vectors.tr_mul(vectors) - Mat::identity(k, k)).norm()
}

/// Flip each column so that its largest-magnitude entry is positive; ties
/// (within 1e-9) go to the lowest index.
fn canonicalize_signs(vectors: &mut Mat) {
    for mut col in vectors.column_iter_mut() {
        let max = col.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if let Some(pivot) = col.iter().find(|v| v.abs() >= max - 1e-9) {
            if *pivot < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Full SVD with singular values in descending order: `u` is `rows × rows`,
/// `v` is `cols × cols`, and the first `min(rows, cols)` columns of each
/// pair with `singular_values`.
struct SortedSvd {
    u: Mat,
    singular_values: Vec<f64>,
    v: Mat,
}

impl SortedSvd {
    fn new(a: &Mat) -> Self {
        let (rows, cols) = a.shape();
        if rows == 0 || cols == 0 {
            return Self {
                u: Mat::identity(rows, rows),
                singular_values: Vec::new(),
                v: Mat::identity(cols, cols),
            };
        }
        let svd = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)])
            .svd()
            .expect("SVD of a finite matrix converges");
        let sigma = svd.S().column_vector();
        let mut order: Vec<usize> = (0..rows.min(cols)).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
        let permuted = |factor: faer::MatRef<'_, f64>, dim: usize| {
            Mat::from_fn(dim, dim, |i, j| {
                let src = order.get(j).copied().unwrap_or(j);
                factor[(i, src)]
            })
        };
        Self {
            u: permuted(svd.U(), rows),
            v: permuted(svd.V(), cols),
            singular_values: order.iter().map(|&i| sigma[i]).collect(),
        }
    }

    fn rank(&self, tol: &Tolerances) -> usize {
        let Some(&largest) = self.singular_values.first() else {
            return 0;
        };
        if largest <= 0.0 {
            return 0;
        }
        let cutoff = tol.rank_rel * largest;
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    SortedSvd::new(a).singular_values
}

/// Number of singular values strictly above `rank_rel · σ_max`; zero for the
/// zero matrix.
pub fn numerical_rank(a: &Mat, tol: &Tolerances) -> usize {
    SortedSvd::new(a).rank(tol)
}

/// Orthonormal bases of `N(A)`, `R(A)` and their orthogonal complements.
///
/// For `A: R^n → R^m`, `null ⊕ corange = R^n` and `range ⊕ cokernel = R^m`,
/// with `corange = R(Aᵀ)` playing the role of `R₀⁺` and `cokernel` the role
/// of `N₀⁺` in the Moore–Penrose splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSubspaces {
    pub rank: usize,
    pub null: SubspaceBasis,
    pub range: SubspaceBasis,
    pub corange: SubspaceBasis,
    pub cokernel: SubspaceBasis,
}

pub fn fundamental_subspaces(a: &Mat, tol: &Tolerances) -> FundamentalSubspaces {
    let (rows, cols) = a.shape();
    let svd = SortedSvd::new(a);
    let rank = svd.rank(tol);
    let basis = |factor: &Mat, start: usize, count: usize| {
        let mut vectors = factor.columns(start, count).into_owned();
        canonicalize_signs(&mut vectors);
        SubspaceBasis {
            ambient_dim: factor.nrows(),
            vectors,
        }
    };
    FundamentalSubspaces {
        rank,
        null: basis(&svd.v, rank, cols - rank),
        range: basis(&svd.u, 0, rank),
        corange: basis(&svd.v, 0, rank),
        cokernel: basis(&svd.u, rank, rows - rank),
    }
}

/// Moore–Penrose inverse `A⁺ = V_r Σ_r⁻¹ U_rᵀ` at the numerical rank of `A`.
pub fn mp_inverse(a: &Mat, tol: &Tolerances) -> Mat {
    let (rows, cols) = a.shape();
    let svd = SortedSvd::new(a);
    let rank = svd.rank(tol);
    let mut pinv = Mat::zeros(cols, rows);
    for i in 0..rank {
        let scale = 1.0 / svd.singular_values[i];
        pinv += (svd.v.column(i) * scale) * svd.u.column(i).transpose();
    }
    pinv
}

/// Frobenius norms of the four Penrose residuals for a candidate inverse `b` of `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenroseResiduals {
    /// `‖ABA − A‖`
    pub aba: f64,
    /// `‖BAB − B‖`
    pub bab: f64,
    /// `‖(AB)ᵀ − AB‖`
    pub ab_sym: f64,
    /// `‖(BA)ᵀ − BA‖`
    pub ba_sym: f64,
}

impl PenroseResiduals {
    pub fn of(a: &Mat, b: &Mat) -> Self {
        let ab = a * b;
        let ba = b * a;
        Self {
            aba: (&ab * a - a).norm(),
            bab: (&ba * b - b).norm(),
            ab_sym: (ab.transpose() - &ab).norm(),
            ba_sym: (ba.transpose() - &ba).norm(),
        }
    }

    /// Penrose conditions 1 and 2 (membership in `GI(A)`).
    pub fn is_generalized_inverse(&self, tol: &Tolerances) -> bool {
        self.aba < tol.residual_abs && self.bab < tol.residual_abs
    }

    pub fn max(&self) -> f64 {
        self.aba.max(self.bab).max(self.ab_sym).max(self.ba_sym)
    }
}

/// The projector onto `onto` along `along`, `P = C · diag(I, 0) · C⁻¹` with
/// `C = [onto | along]`.
pub fn oblique_projector(
    onto: &SubspaceBasis,
    along: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<Mat, LinalgError> {
    let d = onto.ambient_dim;
    if along.ambient_dim != d {
        return Err(LinalgError::AmbientMismatch {
            left: d,
            right: along.ambient_dim,
        });
    }
    let degenerate = LinalgError::DegenerateSplit {
        onto: onto.dim(),
        along: along.dim(),
        ambient: d,
    };
    if onto.dim() + along.dim() != d {
        return Err(degenerate);
    }
    if d == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let mut combined = Mat::zeros(d, d);
    combined.columns_mut(0, onto.dim()).copy_from(&onto.vectors);
    combined
        .columns_mut(onto.dim(), along.dim())
        .copy_from(&along.vectors);
    let sv = singular_values(&combined);
    let (largest, smallest) = (sv[0], sv[d - 1]);
    if smallest <= tol.rank_rel * largest {
        return Err(degenerate);
    }
    let inverse = combined.try_inverse().ok_or(degenerate)?;
    Ok(&onto.vectors * inverse.rows(0, onto.dim()))
}
