//! Named example graphs with known extremal lengths, and the pipeline that
//! re-derives and checks them.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::certificate::{build_embedding, verify_certificate, CertificateRecord, EmbeddingCertificate};
use crate::error::{Error, Result};
use crate::graph::{Graph, LengthFunction, WeightedLaplacian};
use crate::optimize::{maximize_lengths, LengthOptions, Termination};
use crate::perturbation::{extremality_check_sampled, FormMode, LengthState};
use crate::spectral::{EigenspaceBasis, DEFAULT_MULT_TOL};

pub const FIXTURE_NAMES: [&str; 7] = [
    "p3",
    "p4",
    "k13",
    "c3_max",
    "c3_saddle",
    "c4",
    "k13_plus_edge",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Optimize from `init` and compare the optimum.
    Maximum,
    /// Evaluate at `init` without optimizing.
    Fixed,
    /// Optimize and expect the iterates to run into the boundary.
    Divergent,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: Graph,
    pub init: LengthFunction,
    pub expectation: Expectation,
    /// For divergent fixtures: a lower bound at termination.
    pub expected_lambda1: f64,
    pub expected_multiplicity: usize,
    pub lambda1_tol: f64,
    /// Tolerance for the certificate residual.
    pub certificate_tol: f64,
    pub note: &'static str,
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let uniform = |g: &Graph| LengthFunction::uniform(g.edge_count());
    let f = match name {
        "p3" => {
            let graph = Graph::path(3)?;
            Fixture {
                name: "p3",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Maximum,
                expected_lambda1: 16.0,
                expected_multiplicity: 1,
                lambda1_tol: 1e-8,
                certificate_tol: 1e-9,
                note: "path on 3 vertices, maximum 16 at a = b = 1/4",
            }
        }
        "p4" => {
            let graph = Graph::path(4)?;
            Fixture {
                name: "p4",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Maximum,
                expected_lambda1: 18.6694,
                expected_multiplicity: 1,
                lambda1_tol: 1e-3,
                certificate_tol: 1e-6,
                note: "path on 4 vertices, maximum about 18.6694 at a = c = 0.1905",
            }
        }
        "k13" => {
            let graph = Graph::star(3)?;
            Fixture {
                name: "k13",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Maximum,
                expected_lambda1: 36.0,
                expected_multiplicity: 2,
                lambda1_tol: 1e-6,
                certificate_tol: 1e-8,
                note: "star with 3 leaves, maximum 36 at uniform lengths, symmetric tripod",
            }
        }
        "c3_max" => {
            let graph = Graph::cycle(3)?;
            Fixture {
                name: "c3_max",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Maximum,
                expected_lambda1: 54.0,
                expected_multiplicity: 2,
                lambda1_tol: 1e-6,
                certificate_tol: 1e-8,
                note: "triangle, local maximum 54 at uniform lengths, regular triangle",
            }
        }
        "c3_saddle" => {
            let graph = Graph::cycle(3)?;
            let r3 = 3f64.sqrt();
            let side = (3.0 - r3) / 12.0;
            Fixture {
                name: "c3_saddle",
                init: LengthFunction::new(vec![side, side, 1.0 / (2.0 * r3)])?,
                graph,
                expectation: Expectation::Fixed,
                expected_lambda1: 41.5692,
                expected_multiplicity: 1,
                lambda1_tol: 1e-3,
                certificate_tol: 1e-9,
                note: "triangle, simple extremal saddle 24 sqrt 3 with map 0.0873 (-1, 0, 1)",
            }
        }
        "c4" => {
            let graph = Graph::cycle(4)?;
            Fixture {
                name: "c4",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Maximum,
                expected_lambda1: 64.0,
                expected_multiplicity: 2,
                lambda1_tol: 1e-6,
                certificate_tol: 1e-8,
                note: "square, local maximum 64 at uniform lengths, square embedding",
            }
        }
        "k13_plus_edge" => {
            let graph = Graph::from_one_based(4, [(1, 2), (1, 3), (1, 4), (2, 3)])?;
            Fixture {
                name: "k13_plus_edge",
                init: uniform(&graph),
                graph,
                expectation: Expectation::Divergent,
                expected_lambda1: 1000.0,
                expected_multiplicity: 0,
                lambda1_tol: 0.0,
                certificate_tol: 0.0,
                note: "star plus an edge between two leaves, unbounded as d -> 1/2 along a = b",
            }
        }
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    Ok(f)
}

pub fn all_fixtures() -> Vec<Fixture> {
    FIXTURE_NAMES
        .iter()
        .map(|n| fixture(n).expect("registered fixture"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub lambda1: f64,
    pub multiplicity: usize,
    pub lengths: Vec<f64>,
    pub termination: Option<Termination>,
    pub checks: Vec<Check>,
    pub certificate: Option<CertificateRecord>,
    pub pass: bool,
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi.abs().max(f64::MIN_POSITIVE)
}

/// Runs the fixture pipeline: optimize (or evaluate), extract the
/// eigenspace, certify, verify, and compare with the expected values.
pub fn run_example(name: &str, opts: &LengthOptions) -> Result<FixtureReport> {
    let fx = fixture(name)?;
    let g = &fx.graph;
    let mut checks = Vec::new();

    let (lengths, termination, certificate, extremality) = match fx.expectation {
        Expectation::Fixed => {
            let state = LengthState::new(g, &fx.init, DEFAULT_MULT_TOL)?;
            let ext = extremality_check_sampled(&state, opts.direction_samples, opts.seed)?;
            let forms =
                crate::certificate::edge_form_matrices(g, &state.basis, &fx.init, FormMode::Problem1)?;
            let feas = crate::certificate::solve_cone_feasibility(
                &forms,
                &vec![1.0; g.edge_count()],
                &opts.feasibility,
            )?;
            let cert = match feas.report.status {
                crate::certificate::FeasibilityStatus::Feasible => Some(build_embedding(
                    &feas.gram,
                    &state.basis,
                    g,
                    &fx.init,
                    FormMode::Problem1,
                    1.0,
                )?),
                _ => None,
            };
            (fx.init.clone(), None, cert, Some(ext))
        }
        Expectation::Maximum | Expectation::Divergent => {
            let r = maximize_lengths(g, &fx.init, opts)?;
            (r.params, Some(r.termination), r.certificate, r.extremality)
        }
    };

    let lap = WeightedLaplacian::from_lengths(g, &lengths)?;
    let (lambda1, multiplicity) = match crate::spectral::first_cluster(&lap, DEFAULT_MULT_TOL) {
        Ok(b) => (b.lambda1, b.multiplicity),
        Err(e) if fx.expectation != Expectation::Divergent => return Err(e),
        Err(_) => (crate::perturbation::lambda1_at(g, &lengths)?, 0),
    };

    if fx.expectation == Expectation::Divergent {
        let diverged = termination == Some(Termination::BoundaryDivergence);
        checks.push(Check::new(
            "termination",
            diverged,
            termination.map_or("none", Termination::name).to_string(),
        ));
        checks.push(Check::new(
            "lambda1_at_termination",
            lambda1 > fx.expected_lambda1,
            format!("{lambda1:.6e} > {}", fx.expected_lambda1),
        ));
    } else {
        checks.push(Check::new(
            "lambda1",
            (lambda1 - fx.expected_lambda1).abs() <= fx.lambda1_tol,
            format!("{lambda1:.10} vs {} +- {:e}", fx.expected_lambda1, fx.lambda1_tol),
        ));
        checks.push(Check::new(
            "multiplicity",
            multiplicity == fx.expected_multiplicity,
            format!("{multiplicity} vs {}", fx.expected_multiplicity),
        ));
        if let Some(ext) = &extremality {
            checks.push(Check::new(
                "extremality",
                ext.pass,
                format!("{} ({} directions, worst {:.3e})", ext.label(), ext.directions.len(), ext.worst_violation()),
            ));
        }
        match &certificate {
            Some(cert) => {
                let v = verify_certificate(cert, &lap, &lengths, cert.lambda1, FormMode::Problem1, fx.certificate_tol)?;
                checks.push(Check::new(
                    "certificate",
                    v.pass,
                    format!(
                        "N = {}, max residual {:.3e}, eigen residual {:.3e}",
                        cert.dimension(),
                        v.max_residual,
                        v.eigen_residual
                    ),
                ));
                checks.extend(shape_checks(&fx, &lengths, cert, &lap)?);
            }
            None => checks.push(Check::new("certificate", false, "cone infeasible".into())),
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(FixtureReport {
        name: fx.name.to_string(),
        lambda1,
        multiplicity,
        lengths: lengths.values().to_vec(),
        termination,
        certificate: certificate.as_ref().map(CertificateRecord::from_certificate),
        checks,
        pass,
    })
}

/// Fixture-specific geometry of the certificate map.
fn shape_checks(
    fx: &Fixture,
    l: &LengthFunction,
    cert: &EmbeddingCertificate,
    lap: &WeightedLaplacian,
) -> Result<Vec<Check>> {
    let g = &fx.graph;
    let m = &cert.map;
    let edge_dist: Vec<f64> = g.edges().iter().map(|e| dist(&m[e.u], &m[e.v])).collect();
    let mut out = Vec::new();
    match fx.name {
        "p3" => {
            let v = l.values();
            out.push(Check::new(
                "lengths",
                v.iter().all(|x| (x - 0.25).abs() < 1e-6),
                format!("{v:?}"),
            ));
            let k = 1.0 / (4.0 * 2f64.sqrt());
            let sign = m[2][0].signum();
            let err = [-k, 0.0, k]
                .iter()
                .zip(m)
                .map(|(w, p)| (sign * p[0] - w).abs())
                .fold(0.0, f64::max);
            out.push(Check::new(
                "map",
                cert.dimension() == 1 && err < 1e-9,
                format!("max deviation from (-1, 0, 1)/(4 sqrt 2): {err:.3e}"),
            ));
        }
        "p4" => {
            let v = l.values();
            out.push(Check::new(
                "lengths",
                (v[0] - 0.1905).abs() < 1e-3 && (v[2] - 0.1905).abs() < 1e-3,
                format!("{v:?}"),
            ));
            let ratios: Vec<f64> = edge_dist.iter().zip(v).map(|(d, x)| d / x).collect();
            out.push(Check::new(
                "no_isometry",
                spread(&ratios) > 1e-3 && cert.isometric_rescaling(g, 1e-6).is_none(),
                format!("edge stretch ratios {ratios:?}"),
            ));
        }
        "k13" => {
            // the symmetric tripod from the explicit basis and Gram I / 288
            let r3 = 3f64.sqrt();
            let basis = EigenspaceBasis::from_functions(
                cert.lambda1,
                vec![vec![0.0, -r3, 0.0, r3], vec![0.0, -1.0, 2.0, -1.0]],
                lap.m0().clone(),
            );
            let ansatz = build_embedding(
                &(DMatrix::identity(2, 2) / 288.0),
                &basis,
                g,
                l,
                FormMode::Problem1,
                1.0,
            )?;
            let v = verify_certificate(&ansatz, lap, l, cert.lambda1, FormMode::Problem1, fx.certificate_tol)?;
            out.push(Check::new(
                "ansatz_gram",
                v.pass,
                format!("I/288 residual {:.3e}", v.max_residual),
            ));
            out.push(Check::new(
                "tripod",
                spread(&edge_dist) < 1e-6,
                format!("arm lengths {edge_dist:?}"),
            ));
        }
        "c3_max" => out.push(Check::new(
            "regular_triangle",
            cert.dimension() == 2 && spread(&edge_dist) < 1e-6,
            format!("side lengths {edge_dist:?}"),
        )),
        "c4" => {
            let diag = [dist(&m[0], &m[2]), dist(&m[1], &m[3])];
            out.push(Check::new(
                "square",
                cert.dimension() == 2 && spread(&edge_dist) < 1e-6 && spread(&diag) < 1e-6,
                format!("sides {edge_dist:?}, diagonals {diag:?}"),
            ));
            out.push(Check::new(
                "uniform_lengths",
                l.values().iter().all(|x| (x - 0.125).abs() < 1e-6),
                format!("{:?}", l.values()),
            ));
        }
        "c3_saddle" => {
            let scale = 0.5 * (m[0][0].abs() + m[2][0].abs());
            let shaped = cert.dimension() == 1
                && m[1][0].abs() < 1e-9
                && (m[0][0] + m[2][0]).abs() < 1e-9;
            out.push(Check::new(
                "map_scale",
                shaped && (scale - 0.0873).abs() < 1e-3,
                format!("map = {scale:.6} (-1, 0, 1) up to sign"),
            ));
            out.push(Check::new(
                "no_isometry",
                cert.isometric_rescaling(g, 1e-6).is_none(),
                format!("edge distances {edge_dist:?}"),
            ));
        }
        _ => {}
    }
    Ok(out)
}
