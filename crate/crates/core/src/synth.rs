//! Synthetic instances for property tests: random matrices of prescribed
//! rank, random smooth expressions, and constrained problems with a known
//! critical point.

use crate::densela::{fundamental_subspaces, Mat, Tolerances, Vector};
use crate::geometry::{jacobian, Problem};
use rand::Rng;

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `rows × cols` product of random factors, of rank `rank` almost surely.
pub fn random_rank_deficient(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> Mat {
    random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols)
}

/// Random matrix with dimensions in `2..=max_dim`, nullity ≥ 1 and corank ≥ 1.
pub fn random_singular_matrix(rng: &mut impl Rng, max_dim: usize) -> Mat {
    let rows = rng.gen_range(2..=max_dim);
    let cols = rng.gen_range(2..=max_dim);
    let rank = rng.gen_range(1..rows.min(cols));
    random_rank_deficient(rng, rows, cols, rank)
}

/// A literal that parses back to exactly `v`.
pub fn literal(v: f64) -> String {
    if v < 0.0 {
        format!("(-{:.16e})", -v)
    } else {
        format!("{v:.16e}")
    }
}

/// A random expression over `x1..xn` that is smooth (and well scaled) on
/// the cube `[-2, 2]ⁿ`.
pub fn random_smooth_expr(rng: &mut impl Rng, n: usize, depth: usize) -> String {
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => literal(rng.gen_range(-2.0..2.0)),
            _ => format!("x{}", rng.gen_range(1..=n)),
        };
    }
    let a = random_smooth_expr(rng, n, depth - 1);
    let b = random_smooth_expr(rng, n, depth - 1);
    match rng.gen_range(0..10) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 => format!("({a} * {b})"),
        3 => format!("sin({a})"),
        4 => format!("cos({a}) * {b}"),
        5 => format!("exp(0.3 * sin({a}))"),
        6 => format!("sqrt(1 + ({a})^2)"),
        7 => format!("log(2 + cos({a}))"),
        8 => format!("{a} / (2 + sin({b}))"),
        _ => format!("-({a})^{}", rng.gen_range(2..=3)),
    }
}

/// Uniform point of the cube `[-half_width, half_width]ⁿ`.
pub fn random_point(rng: &mut impl Rng, n: usize, half_width: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-half_width..half_width))
}

/// A problem together with a point whose distance from criticality is known.
#[derive(Debug, Clone)]
pub struct ConstrainedInstance {
    pub problem: Problem,
    pub point: Vector,
    pub rank: usize,
    /// Size of the tangential gradient component added on purpose; zero
    /// means `point` is critical.
    pub offset: f64,
}

/// Builds `g = C·h`, `h_l(x) = a_l·x + c_l sin(x_k)`, with `C` an `m × rank`
/// matrix (the identity when `rank = m`), `y₀ = g(x*)` and
/// `f(x) = w·x + ½‖x − x*‖²` where `w = g′(x*)ᵀμ + offset·t` for random `μ`
/// and a unit tangent vector `t`. `∇f(x*) = w`, so `x*` is critical exactly
/// when `offset = 0`.
///
/// Needs `rank < n` (so a tangent direction exists) and `rank ≤ m`.
pub fn constrained_instance(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    rank: usize,
    offset: f64,
) -> ConstrainedInstance {
    assert!(rank >= 1 && rank < n && rank <= m);
    let tol = Tolerances::default();
    loop {
        let x_star = random_point(rng, n, 1.0);
        let inner: Vec<String> = (0..rank)
            .map(|_| {
                let mut terms: Vec<String> = (0..n)
                    .map(|j| format!("{} * x{}", literal(rng.gen_range(-1.0..1.0)), j + 1))
                    .collect();
                let k = rng.gen_range(1..=n);
                terms.push(format!("{} * sin(x{k})", literal(rng.gen_range(-0.5..0.5))));
                format!("({})", terms.join(" + "))
            })
            .collect();
        let mixing = if rank == m {
            Mat::identity(m, m)
        } else {
            random_matrix(rng, m, rank)
        };
        let g: Vec<String> = (0..m)
            .map(|i| {
                (0..rank)
                    .map(|l| format!("{} * {}", literal(mixing[(i, l)]), inner[l]))
                    .collect::<Vec<_>>()
                    .join(" + ")
            })
            .collect();
        let scaffold = match Problem::new(n, "0", &g, &vec![0.0; m]) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let Ok(y0) = scaffold.constraint_value(&x_star) else {
            continue;
        };
        let Ok(jac) = jacobian(&scaffold, &x_star) else {
            continue;
        };
        let spaces = fundamental_subspaces(&jac, &tol);
        if spaces.rank != rank {
            continue;
        }
        let mu = random_point(rng, m, 1.0);
        let w = jac.tr_mul(&mu) + spaces.null.vector(0) * offset;
        let f = (0..n)
            .map(|j| {
                format!(
                    "{} * x{j1} + 0.5 * (x{j1} - {})^2",
                    literal(w[j]),
                    literal(x_star[j]),
                    j1 = j + 1
                )
            })
            .collect::<Vec<_>>()
            .join(" + ");
        let problem = Problem::new(n, &f, &g, y0.as_slice()).expect("generated problem parses");
        return ConstrainedInstance {
            problem,
            point: x_star,
            rank,
            offset,
        };
    }
}
