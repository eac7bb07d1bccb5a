//! Built-in problems and the `paper-suite` fixtures.
//!
//! Each fixture recomputes one published result from scratch and compares
//! it with the stored expected value.

use crate::report::{self, Report, Status};
use gencrit_core::geometry::{
    classify, halton_ball_points, GeneralizedRegularVerdict, ProbeConfig,
};
use gencrit_core::stationarity::{
    certify_multiplier, ill_posed_pair, orthogonal_witness, solve, MultiplierCertificate,
};
use gencrit_core::{Problem, Tolerances, Vector};
use serde_json::{json, Value};

/// `(x1−3)² + (x2−4)²` on the unit circle.
pub fn circle() -> Problem {
    Problem::new(2, "(x1 - 3)^2 + (x2 - 4)^2", &["x1^2 + x2^2"], &[1.0]).expect("built-in problem")
}

/// Distance to `(3, 4, x3)` on `{x1² + x2² + x3² = 1, x3 = 0, x3 = 0}`, whose
/// constraint Jacobian has rank 2 everywhere on the level set.
pub fn sphere_slice(x3: f64) -> Problem {
    let f = format!("(x1 - 3)^2 + (x2 - 4)^2 + (x3 - {x3})^2");
    Problem::new(3, &f, &["x1^2 + x2^2 + x3^2", "x3", "x3"], &[1.0, 0.0, 0.0])
        .expect("built-in problem")
}

pub const ELLIPSE_A: f64 = 2.0;
pub const ELLIPSE_B: f64 = 1.0;
pub const ELLIPSE_TARGET: [f64; 2] = [1.0, 0.5];

/// Distance to `(1, 0.5)` on the ellipse `x²/4 + y² = 1`.
pub fn ellipse() -> Problem {
    Problem::new(2, "(x1 - 1)^2 + (x2 - 0.5)^2", &["x1^2 / 4 + x2^2"], &[1.0])
        .expect("built-in problem")
}

/// `(b² − a²) sin θ cos θ + x₀ a sin θ − y₀ b cos θ` at the ellipse
/// parameter of `(x, y)`; zero exactly at critical points.
pub fn ellipse_trig_residual(x: f64, y: f64) -> f64 {
    let (a, b) = (ELLIPSE_A, ELLIPSE_B);
    let [x0, y0] = ELLIPSE_TARGET;
    let theta = (y / b).atan2(x / a);
    let (s, c) = theta.sin_cos();
    (b * b - a * a) * s * c + x0 * a * s - y0 * b * c
}

/// Starting points for the ellipse fixture.
pub fn ellipse_starts() -> Vec<Vector> {
    halton_ball_points(&Vector::zeros(2), 3.0, 8, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub quantity: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureResult {
    pub name: &'static str,
    pub description: &'static str,
    pub measurements: Vec<Measurement>,
    /// Failures that are not numeric comparisons (solver errors and the like).
    pub errors: Vec<String>,
}

impl FixtureResult {
    fn new(fixture: &Fixture) -> Self {
        Self {
            name: fixture.name,
            description: fixture.description,
            measurements: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn measure(&mut self, quantity: impl Into<String>, value: f64, expected: f64, tolerance: f64) {
        self.measurements.push(Measurement {
            quantity: quantity.into(),
            value,
            expected,
            tolerance,
        });
    }

    /// A yes/no property, recorded as 1 (true) or 0 (false).
    fn flag(&mut self, quantity: impl Into<String>, value: bool, expected: bool) {
        self.measure(
            quantity,
            f64::from(u8::from(value)),
            f64::from(u8::from(expected)),
            0.0,
        );
    }

    fn error(&mut self, message: impl std::fmt::Display) {
        self.errors.push(message.to_string());
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.measurements.iter().all(Measurement::passed)
    }

    fn to_value(&self) -> Value {
        json!({
            "name": self.name,
            "description": self.description,
            "passed": self.passed(),
            "measurements": self.measurements.iter().map(|m| json!({
                "quantity": m.quantity,
                "value": report::real(m.value),
                "expected": report::real(m.expected),
                "tolerance": report::real(m.tolerance),
                "passed": m.passed(),
            })).collect::<Vec<_>>(),
            "errors": self.errors,
        })
    }
}

pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(&mut FixtureResult),
}

impl Fixture {
    pub fn run(&self) -> FixtureResult {
        let mut result = FixtureResult::new(self);
        (self.run)(&mut result);
        result
    }
}

pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "circle-regular",
            description: "unit circle: 1 is a regular value",
            run: circle_regular,
        },
        Fixture {
            name: "circle-solve",
            description: "circle, target (3,4): critical point (0.6,0.8), L = 1 - r0 = -4",
            run: circle_solve,
        },
        Fixture {
            name: "slice-classify",
            description: "sphere slice: rank 2 < 3, not regular, generalized regular",
            run: slice_classify,
        },
        Fixture {
            name: "slice-solve",
            description:
                "sphere slice, target (3,4,7): critical point (0.6,0.8,0), multipliers not unique",
            run: slice_solve,
        },
        Fixture {
            name: "slice-solve-planar-target",
            description:
                "sphere slice, target (3,4,0): critical point (0.6,0.8,0), multipliers not unique",
            run: slice_solve_planar_target,
        },
        Fixture {
            name: "slice-orthogonal-witness",
            description: "sphere slice: e* along (x1-3, x2-4, -7) at the critical point",
            run: slice_orthogonal_witness,
        },
        Fixture {
            name: "slice-ill-posed-witness",
            description: "two generalized inverses: L(2*7*e3) = -2*7^2, L1(2*7*e3) = 0",
            run: slice_ill_posed_witness,
        },
        Fixture {
            name: "ellipse-trig-residual",
            description:
                "ellipse a=2, b=1, target (1,0.5): parametric stationarity at every solution",
            run: ellipse_trig,
        },
    ]
}

/// Runs every fixture (concurrently) and collects the results in
/// registry order.
pub fn run_all() -> Vec<FixtureResult> {
    let fixtures = fixtures();
    std::thread::scope(|scope| {
        let handles: Vec<_> = fixtures
            .iter()
            .map(|f| scope.spawn(move || f.run()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fixture thread panicked"))
            .collect()
    })
}

pub fn paper_suite() -> Report {
    let results = run_all();
    let mut report = Report::new(json!({ "name": "paper-suite" }));
    report.tolerances = Some(Tolerances::default());
    report.summary.push(table(&results));
    report.suite = Some(json!({
        "fixtures": results.iter().map(FixtureResult::to_value).collect::<Vec<_>>(),
        "passed": results.iter().filter(|r| r.passed()).count(),
        "total": results.len(),
    }));
    for r in results.iter().filter(|r| !r.passed()) {
        report.fail(Status::SuiteFailure, format!("fixture {} failed", r.name));
    }
    report
}

pub fn table(results: &[FixtureResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut lines = Vec::new();
    for r in results {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        lines.push(format!("{verdict}  {:width$}  {}", r.name, r.description));
        for m in r.measurements.iter().filter(|m| !m.passed()) {
            lines.push(format!(
                "      {}: {:e} (expected {:e} ± {:e})",
                m.quantity, m.value, m.expected, m.tolerance
            ));
        }
        for e in &r.errors {
            lines.push(format!("      {e}"));
        }
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    lines.push(format!("{passed}/{} fixtures passed", results.len()));
    lines.join("\n")
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn circle_regular(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    match classify(&circle(), &v(&[0.6, 0.8]), &tol, &ProbeConfig::default()) {
        Ok(r) => {
            out.flag("regular", r.regular, true);
            out.measure("rank", r.rank as f64, 1.0, 0.0);
        }
        Err(e) => out.error(e),
    }
}

fn circle_solve(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    let p = circle();
    let sol = match solve(&p, &v(&[1.0, 0.0]), &tol, 100) {
        Ok(s) => s,
        Err(e) => return out.error(e),
    };
    let x = &sol.check.point;
    out.measure("x1", x[0], 0.6, 1e-8);
    out.measure("x2", x[1], 0.8, 1e-8);
    match certify_multiplier(&p, x, &tol) {
        Ok(MultiplierCertificate::UniqueRegular { l }) => {
            let r0 = 5.0;
            out.measure("L", l[0], 1.0 - r0, 1e-10);
        }
        Ok(other) => out.error(format!(
            "expected a unique multiplier, got {:?}",
            other.kind()
        )),
        Err(e) => out.error(e),
    }
}

fn slice_classify(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    match classify(
        &sphere_slice(7.0),
        &v(&[0.6, 0.8, 0.0]),
        &tol,
        &ProbeConfig::default(),
    ) {
        Ok(r) => {
            out.measure("rank", r.rank as f64, 2.0, 0.0);
            out.flag("regular", r.regular, false);
            out.flag(
                "generalized regular confirmed",
                matches!(
                    r.generalized_regular_verdict,
                    GeneralizedRegularVerdict::Confirmed { .. }
                ),
                true,
            );
        }
        Err(e) => out.error(e),
    }
}

fn slice_solve_from(out: &mut FixtureResult, x3: f64) {
    let tol = Tolerances::default();
    let p = sphere_slice(x3);
    let sol = match solve(&p, &v(&[1.0, 0.0, 0.0]), &tol, 100) {
        Ok(s) => s,
        Err(e) => return out.error(e),
    };
    let x = &sol.check.point;
    for (i, expected) in [0.6, 0.8, 0.0].into_iter().enumerate() {
        out.measure(format!("x{}", i + 1), x[i], expected, 1e-8);
    }
    match certify_multiplier(&p, x, &tol) {
        Ok(MultiplierCertificate::IllPosed { gap, .. }) => {
            out.flag("gap >= 1", gap >= 1.0 - 1e-8, true);
        }
        Ok(other) => out.error(format!(
            "expected an ill-posed certificate, got {:?}",
            other.kind()
        )),
        Err(e) => out.error(e),
    }
}

fn slice_solve(out: &mut FixtureResult) {
    slice_solve_from(out, 7.0);
}

fn slice_solve_planar_target(out: &mut FixtureResult) {
    slice_solve_from(out, 0.0);
}

fn slice_orthogonal_witness(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    let x = v(&[0.6, 0.8, 0.0]);
    match orthogonal_witness(&sphere_slice(7.0), &x, &tol) {
        Ok(w) => {
            let expected = v(&[0.6 - 3.0, 0.8 - 4.0, -7.0]).normalize();
            for i in 0..3 {
                out.measure(format!("e*[{i}]"), w.e_star[i], expected[i], 1e-10);
            }
            out.measure("tangent defect", w.tangent_defect, 0.0, 1e-10);
            out.measure("gradient null defect", w.gradient_null_defect, 0.0, 1e-10);
        }
        Err(e) => out.error(e),
    }
}

fn slice_ill_posed_witness(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    let x3 = 7.0;
    let x = v(&[0.6, 0.8, 0.0]);
    // e₀ = x₃⁰e₃ and y⁺ = x₃⁰(ε₃ − ε₂) give the witness 2x₃⁰ε₃.
    match ill_posed_pair(
        &sphere_slice(x3),
        &x,
        &v(&[0.0, 0.0, x3]),
        &v(&[0.0, -x3, x3]),
        &tol,
    ) {
        Ok(MultiplierCertificate::IllPosed {
            witness,
            l_at_witness,
            l1_at_witness,
            ..
        }) => {
            out.measure("witness[2]", witness[2], 2.0 * x3, 1e-12);
            out.measure("L(v)", l_at_witness, -2.0 * x3 * x3, 1e-8);
            out.measure("L1(v)", l1_at_witness, 0.0, 1e-10);
        }
        Ok(other) => out.error(format!("unexpected certificate {:?}", other.kind())),
        Err(e) => out.error(e),
    }
}

fn ellipse_trig(out: &mut FixtureResult) {
    let tol = Tolerances::default();
    let p = ellipse();
    for (i, start) in ellipse_starts().iter().enumerate() {
        match solve(&p, start, &tol, 100) {
            Ok(sol) => {
                let x = &sol.check.point;
                out.measure(
                    format!("start {i}: trig residual"),
                    ellipse_trig_residual(x[0], x[1]),
                    0.0,
                    1e-8,
                );
            }
            Err(e) => out.error(format!("start {i}: {e}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_residual_vanishes_only_at_critical_points() {
        // (±2, 0) are not critical for a target off the axis.
        assert!(ellipse_trig_residual(2.0, 0.0).abs() > 0.1);
        let (a, b) = (ELLIPSE_A, ELLIPSE_B);
        let theta: f64 = 0.3;
        let direct = {
            let [x0, y0] = ELLIPSE_TARGET;
            let (s, c) = theta.sin_cos();
            // Half of d/dθ of the squared distance.
            (a * c - x0) * (-a * s) + (b * s - y0) * (b * c)
        };
        assert!((ellipse_trig_residual(a * theta.cos(), b * theta.sin()) - direct).abs() < 1e-14);
    }

    #[test]
    fn every_fixture_passes() {
        let results = run_all();
        assert_eq!(results.len(), fixtures().len());
        for r in &results {
            assert!(r.passed(), "{}", table(std::slice::from_ref(r)));
        }
    }

    #[test]
    fn table_lists_failures() {
        let mut r = FixtureResult {
            name: "demo",
            description: "demo",
            measurements: Vec::new(),
            errors: Vec::new(),
        };
        r.measure("q", 1.0, 0.0, 0.5);
        let text = table(&[r]);
        assert!(text.starts_with("FAIL  demo"));
        assert!(text.contains("0/1 fixtures passed"));
    }
}
