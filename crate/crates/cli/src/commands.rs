use crate::problem::{load_problem, parse_point, InputError, LoadedProblem};
use crate::report::{self, format_vector, verdict_label, Report, Status};
use gencrit_core::geometry::{classify as classify_point, ProbeConfig};
use gencrit_core::stationarity::{
    certify_multiplier, check, orthogonal_witness, solve as solve_problem, MultiplierCertificate,
    StationarityError,
};
use gencrit_core::{Problem, Tolerances, Vector};
use serde_json::json;
use std::path::PathBuf;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyArgs {
    pub file: PathBuf,
    pub at: String,
    pub probes: Option<usize>,
    pub radius: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveArgs {
    pub file: PathBuf,
    pub start: Option<String>,
    pub max_iter: usize,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyArgs {
    pub file: PathBuf,
    pub at: String,
}

pub fn classify(args: &ClassifyArgs) -> Report {
    let mut report = Report::new(json!({
        "name": "classify",
        "file": args.file.display().to_string(),
        "at": args.at,
        "probes": args.probes,
        "radius": args.radius.map(report::real),
        "seed": args.seed,
    }));
    let Some((loaded, x)) = load_with_point(&mut report, &args.file, &args.at) else {
        return report;
    };
    let defaults = ProbeConfig::default();
    let probes = ProbeConfig {
        probes: args.probes.unwrap_or(defaults.probes),
        radius: args.radius.unwrap_or(defaults.radius),
        seed: args.seed.or(loaded.file.seed).unwrap_or(defaults.seed),
    };
    if !(probes.radius.is_finite() && probes.radius > 0.0) {
        report.fail(
            Status::InputError,
            format!("--radius must be positive, got {}", probes.radius),
        );
        return report;
    }
    add_regularity(
        &mut report,
        &loaded.problem,
        &x,
        &loaded.tolerances,
        &probes,
    );
    report
}

pub fn solve(args: &SolveArgs) -> Report {
    let mut report = Report::new(json!({
        "name": "solve",
        "file": args.file.display().to_string(),
        "start": args.start,
        "max_iter": args.max_iter,
        "tol": args.tol.map(report::real),
    }));
    let loaded = match load_problem(&args.file) {
        Ok(l) => l,
        Err(e) => {
            report.fail(Status::InputError, e.to_string());
            return report;
        }
    };
    let mut tol = loaded.tolerances;
    if let Some(t) = args.tol {
        match Tolerances::new(tol.rank_rel, t, tol.ortho) {
            Ok(t) => tol = t,
            Err(e) => {
                report.fail(Status::InputError, e.to_string());
                return report;
            }
        }
    }
    report.tolerances = Some(tol);
    let start = match &args.start {
        Some(text) => parse_point(text, loaded.problem.n()),
        None => loaded.x_init().ok_or(InputError::MissingStart),
    };
    let start = match start {
        Ok(x) => x,
        Err(e) => {
            report.fail(Status::InputError, e.to_string());
            return report;
        }
    };
    let p = &loaded.problem;
    let solution = match solve_problem(p, &start, &tol, args.max_iter) {
        Ok(s) => s,
        Err(StationarityError::MaxIterExceeded { last, iterations }) => {
            report.summary.push(format!(
                "last iterate {} after {iterations} iterations",
                format_vector(&last.point)
            ));
            report.stationarity = Some(report::stationarity(&last, Some(iterations), Some(false)));
            report.fail(
                Status::NotConverged,
                format!("no critical point within {iterations} iterations"),
            );
            return report;
        }
        Err(e @ StationarityError::SingularStep { .. }) => {
            if let StationarityError::SingularStep { point, .. } = &e {
                if let Ok(c) = check(p, point, &tol) {
                    report.stationarity = Some(report::stationarity(&c, None, Some(false)));
                }
            }
            report.fail(Status::NotConverged, e.to_string());
            return report;
        }
        Err(e) => {
            report.fail(Status::NumericError, e.to_string());
            return report;
        }
    };
    let x = solution.check.point.clone();
    report.summary.push(format!(
        "critical point {} after {} iterations",
        format_vector(&x),
        solution.iterations
    ));
    report.stationarity = Some(report::stationarity(
        &solution.check,
        Some(solution.iterations),
        Some(true),
    ));
    let probes = ProbeConfig {
        seed: loaded.file.seed.unwrap_or_default(),
        ..ProbeConfig::default()
    };
    add_regularity(&mut report, p, &x, &tol, &probes);
    add_certificate(&mut report, p, &x, &tol);
    report
}

pub fn certify(args: &CertifyArgs) -> Report {
    let mut report = Report::new(json!({
        "name": "certify",
        "file": args.file.display().to_string(),
        "at": args.at,
    }));
    let Some((loaded, x)) = load_with_point(&mut report, &args.file, &args.at) else {
        return report;
    };
    let (p, tol) = (&loaded.problem, &loaded.tolerances);
    match check(p, &x, tol) {
        Ok(c) => {
            report.summary.push(format!(
                "constraint residual {:e}, tangent residual {:e}",
                c.constraint_residual, c.tangent_residual
            ));
            report.stationarity = Some(report::stationarity(&c, None, None));
        }
        Err(e) => {
            report.fail(Status::NumericError, e.to_string());
            return report;
        }
    }
    let probes = ProbeConfig {
        seed: loaded.file.seed.unwrap_or_default(),
        ..ProbeConfig::default()
    };
    add_regularity(&mut report, p, &x, tol, &probes);
    add_certificate(&mut report, p, &x, tol);
    match orthogonal_witness(p, &x, tol) {
        Ok(w) => report.witness = Some(report::orthogonal_witness(&w)),
        Err(StationarityError::ZeroGradient | StationarityError::NotCritical { .. }) => {}
        Err(e) => report.fail(Status::NumericError, e.to_string()),
    }
    report
}

fn load_with_point(
    report: &mut Report,
    file: &std::path::Path,
    at: &str,
) -> Option<(LoadedProblem, Vector)> {
    let loaded = match load_problem(file) {
        Ok(l) => l,
        Err(e) => {
            report.fail(Status::InputError, e.to_string());
            return None;
        }
    };
    report.tolerances = Some(loaded.tolerances);
    match parse_point(at, loaded.problem.n()) {
        Ok(x) => Some((loaded, x)),
        Err(e) => {
            report.fail(Status::InputError, e.to_string());
            None
        }
    }
}

fn add_regularity(
    report: &mut Report,
    p: &Problem,
    x: &Vector,
    tol: &Tolerances,
    probes: &ProbeConfig,
) {
    match classify_point(p, x, tol, probes) {
        Ok(r) => {
            report.summary.push(format!(
                "rank {} of m = {}, regular = {}, generalized regular: {}{}",
                r.rank,
                r.m,
                r.regular,
                verdict_label(&r.generalized_regular_verdict),
                if r.on_constraint {
                    ""
                } else {
                    " (point is off the constraint set)"
                }
            ));
            report.regularity = Some(report::regularity(&r));
        }
        Err(e) => report.fail(Status::NumericError, e.to_string()),
    }
}

fn add_certificate(report: &mut Report, p: &Problem, x: &Vector, tol: &Tolerances) {
    match certify_multiplier(p, x, tol) {
        Ok(cert) => {
            report.summary.push(match &cert {
                MultiplierCertificate::UniqueRegular { l } => {
                    format!("unique multiplier L = {}", format_vector(l))
                }
                MultiplierCertificate::IllPosed {
                    l_at_witness,
                    l1_at_witness,
                    gap,
                    ..
                } => format!(
                    "multipliers are not unique: L(v) = {l_at_witness:.10}, L1(v) = {l1_at_witness:.10}, gap {gap:.10}"
                ),
            });
            report.certificate = Some(report::certificate(&cert));
        }
        Err(StationarityError::ZeroGradient) => {
            report
                .summary
                .push("f'(x) = 0: every multiplier from GI(g'(x)) is zero".into());
            report.certificate = Some(report::zero_gradient_certificate(p.m()));
        }
        Err(e) => report.fail(Status::NumericError, e.to_string()),
    }
}
