//! `lapmax`: maximize the first nonzero eigenvalue of graph Laplacians and
//! check eigen-map certificates.

mod input;
mod scan;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lapmax::certificate::{
    build_embedding, edge_form_matrices, solve_cone_feasibility, verify_certificate,
    CertificateCheck, CertificateRecord, FeasibilityOptions, FeasibilityReport, FeasibilityStatus,
};
use lapmax::fixtures::{run_example, FixtureReport, FIXTURE_NAMES};
use lapmax::graph::{LengthFunction, VertexWeight, WeightedLaplacian};
use lapmax::optimize::{
    export_grid, landscape_scan, maximize_ghw, maximize_lengths, DualReport, GhwOptions,
    LengthOptions, ScanSpec, Termination,
};
use lapmax::perturbation::{extremality_check_sampled, ExtremalityReport, FormMode, LengthState};
use lapmax::spectral::DEFAULT_MULT_TOL;
use lapmax::Error;
use serde::Serialize;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "lapmax", version, about = "First nonzero eigenvalue maximization on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for sampled directions and probes.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize lambda1 over normalized edge lengths.
    Solve {
        /// Graph file (JSON or compact notation).
        #[arg(long)]
        graph: PathBuf,
        /// `uniform` or a JSON array of lengths.
        #[arg(long)]
        init: Option<String>,
        /// Stationarity tolerance relative to lambda1.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Certificate residual tolerance.
        #[arg(long, default_value_t = 1e-8)]
        cert_tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Write the certificate record here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Maximize lambda1 over edge weights at fixed vertex weights and lengths.
    Ghw {
        /// Graph file; `lengths` default to 1, `vertex_weights` to uniform.
        #[arg(long)]
        graph: PathBuf,
        /// Duality gap tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build or check an eigen-map certificate at given lengths.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        /// `uniform` or a JSON array of lengths; defaults to the graph file's.
        #[arg(long)]
        init: Option<String>,
        /// Check this certificate record instead of building one.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate lambda1 on a grid over a slice of normalized lengths.
    Scan {
        /// Built-in slice: c3, c4_bc, p3 or k13e.
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// JSON scan spec; needs --graph.
        #[arg(long, requires = "graph")]
        spec: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Points per axis for presets.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// lambda1 above this is flagged divergent.
        #[arg(long, default_value_t = 1e6)]
        cap: f64,
        /// CSV output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in example graphs and compare with known values.
    Examples {
        /// Fixture names; see --list.
        names: Vec<String>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::InvalidGraph(_)
            | Error::NonPositiveLength { .. }
            | Error::NonPositiveVertexWeight { .. }
            | Error::NegativeEdgeWeight { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotConstraintPreserving { .. }
            | Error::InvalidInit(_)
            | Error::InvalidVertexWeight(_)
            | Error::WrongMode { .. }
            | Error::UnknownFixture(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            graph,
            init,
            tol,
            cert_tol,
            max_iter,
            out,
            common,
        } => solve(&graph, init.as_deref(), tol, cert_tol, max_iter, out, &common),
        Command::Ghw {
            graph,
            tol,
            max_iter,
            out,
            common,
        } => ghw(&graph, tol, max_iter, out, &common),
        Command::Certify {
            graph,
            init,
            check,
            tol,
            max_iter,
            out,
            common,
        } => certify(&graph, init.as_deref(), check, tol, max_iter, out, &common),
        Command::Scan {
            preset,
            spec,
            graph,
            points,
            cap,
            out,
            common,
        } => run_scan(preset, spec, graph, points, cap, out, &common),
        Command::Examples {
            names,
            all,
            list,
            common,
        } => examples(names, all, list, &common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct Extremality {
    label: &'static str,
    pass: bool,
    directions: usize,
    worst_violation: f64,
}

impl From<&ExtremalityReport> for Extremality {
    fn from(r: &ExtremalityReport) -> Self {
        Extremality {
            label: r.label(),
            pass: r.pass,
            directions: r.directions.len(),
            worst_violation: r.worst_violation(),
        }
    }
}

#[derive(Serialize)]
struct Verification {
    max_residual: f64,
    eigen_residual: f64,
    pass: bool,
}

impl From<&CertificateCheck> for Verification {
    fn from(c: &CertificateCheck) -> Self {
        Verification {
            max_residual: c.max_residual,
            eigen_residual: c.eigen_residual,
            pass: c.pass,
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    lambda1: f64,
    multiplicity: usize,
    lengths: Vec<f64>,
    termination: Termination,
    iterations: usize,
    extremality: Option<Extremality>,
    feasibility: Option<FeasibilityReport>,
    verification: Option<Verification>,
    certificate: Option<CertificateRecord>,
    pass: bool,
}

fn print_feasibility(f: &FeasibilityReport) {
    println!(
        "cone feasibility: {} after {} iterations (affine {:.3e}, psd {:.3e})",
        f.status.name(),
        f.iterations,
        f.affine_residual,
        f.psd_residual
    );
    if let Some(w) = &f.witness {
        println!("separating functional: {w:?}");
    }
}

fn print_map(map: &[Vec<f64>]) {
    for (u, p) in map.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|x| format!("{x:+.9}")).collect();
        println!("  {}: ({})", u + 1, coords.join(", "));
    }
}

fn solve(
    graph: &std::path::Path,
    init: Option<&str>,
    tol: f64,
    cert_tol: f64,
    max_iter: usize,
    out: Option<PathBuf>,
    common: &Common,
) -> Outcome {
    let file = input::read_graph(graph)?;
    let g = &file.graph;
    let l0 = input::initial_lengths(init, &file)?;
    let opts = LengthOptions {
        max_iter,
        grad_tol: tol,
        seed: common.seed,
        ..LengthOptions::default()
    };
    let r = maximize_lengths(g, &l0, &opts)?;
    let verification = match &r.certificate {
        Some(cert) => {
            let lap = WeightedLaplacian::from_lengths(g, &r.params)?;
            Some(verify_certificate(cert, &lap, &r.params, cert.lambda1, FormMode::Problem1, cert_tol)?)
        }
        None => None,
    };
    // running into the boundary is a result, not a failed verification
    let pass = match r.termination {
        Termination::BoundaryDivergence => true,
        Termination::MaxIter => false,
        Termination::Converged => verification.as_ref().is_some_and(|v| v.pass),
    };
    let record = r.certificate.as_ref().map(CertificateRecord::from_certificate);
    if let (Some(path), Some(rec)) = (&out, &record) {
        input::write_text(path, &rec.to_json())?;
    }
    if common.json {
        print_json(&SolveReport {
            lambda1: r.lambda1,
            multiplicity: r.multiplicity,
            lengths: r.params.values().to_vec(),
            termination: r.termination,
            iterations: r.iterations,
            extremality: r.extremality.as_ref().map(Extremality::from),
            feasibility: r.feasibility.clone(),
            verification: verification.as_ref().map(Verification::from),
            certificate: record,
            pass,
        });
        return Ok(pass);
    }
    println!("lambda1 = {:.12}", r.lambda1);
    println!("multiplicity = {}", r.multiplicity);
    println!("lengths = {:?}", r.params.values());
    println!("termination: {} after {} iterations", r.termination.name(), r.iterations);
    if let Some(e) = &r.extremality {
        println!("extremality: {} (worst {:.3e})", e.label(), e.worst_violation());
    }
    if let Some(f) = &r.feasibility {
        print_feasibility(f);
    }
    if let (Some(cert), Some(v)) = (&r.certificate, &verification) {
        println!("eigen-map in R^{}:", cert.dimension());
        print_map(&cert.map);
        println!(
            "certificate: max residual {:.3e}, eigen residual {:.3e}",
            v.max_residual, v.eigen_residual
        );
    }
    if let (Some(path), Some(_)) = (&out, &r.certificate) {
        println!("certificate written to {}", path.display());
    }
    println!("{}", verdict(pass));
    Ok(pass)
}

#[derive(Serialize)]
struct GhwReport {
    lambda1: f64,
    multiplicity: usize,
    edge_weights: Vec<f64>,
    termination: Termination,
    iterations: usize,
    degenerate_weights: bool,
    feasibility: Option<FeasibilityReport>,
    dual: Option<DualReport>,
    certificate: Option<CertificateRecord>,
    pass: bool,
}

fn ghw(
    graph: &std::path::Path,
    tol: f64,
    max_iter: usize,
    out: Option<PathBuf>,
    common: &Common,
) -> Outcome {
    let file = input::read_graph(graph)?;
    let g = &file.graph;
    let l = file
        .lengths
        .clone()
        .unwrap_or_else(|| LengthFunction::new(vec![1.0; g.edge_count()]).expect("positive"));
    let m0 = file
        .vertex_weights
        .clone()
        .unwrap_or_else(|| VertexWeight::uniform(g.vertex_count()));
    let m0 = VertexWeight::new(m0.values().iter().map(|x| x / m0.total()).collect())?;
    let opts = GhwOptions {
        max_iter,
        tol,
        ..GhwOptions::default()
    };
    let r = maximize_ghw(g, &m0, &l, &opts)?;
    let pass = r.dual.as_ref().is_some_and(|d| d.pass);
    let record = r.certificate.as_ref().map(CertificateRecord::from_certificate);
    if let (Some(path), Some(rec)) = (&out, &record) {
        input::write_text(path, &rec.to_json())?;
    }
    if common.json {
        print_json(&GhwReport {
            lambda1: r.lambda1,
            multiplicity: r.multiplicity,
            edge_weights: r.params.values().to_vec(),
            termination: r.termination,
            iterations: r.iterations,
            degenerate_weights: r.degenerate_weights,
            feasibility: r.feasibility.clone(),
            dual: r.dual.clone(),
            certificate: record,
            pass,
        });
        return Ok(pass);
    }
    println!("lambda1 = {:.12}", r.lambda1);
    println!("multiplicity = {}", r.multiplicity);
    println!("edge weights = {:?}", r.params.values());
    if r.degenerate_weights {
        println!("some edge weights vanish at the optimum");
    }
    println!("termination: {} after {} iterations", r.termination.name(), r.iterations);
    if let Some(f) = &r.feasibility {
        print_feasibility(f);
    }
    if let Some(d) = &r.dual {
        println!(
            "variance {:.12} vs 1/lambda1 {:.12} (gap {:.3e})",
            d.variance, d.inverse_lambda1, d.gap
        );
        println!(
            "edge excess {:.3e}, slackness {:.3e}, isometry residual {:.3e}",
            d.max_edge_excess, d.max_slackness, d.isometry_residual
        );
    }
    if let Some(cert) = &r.certificate {
        println!("isometric eigen-map in R^{}:", cert.dimension());
        print_map(&cert.map);
    }
    println!("{}", verdict(pass));
    Ok(pass)
}

#[derive(Serialize)]
struct CertifyReport {
    lambda1: f64,
    multiplicity: usize,
    extremality: Option<Extremality>,
    feasibility: Option<FeasibilityReport>,
    verification: Option<Verification>,
    certificate: Option<CertificateRecord>,
    pass: bool,
}

fn certify(
    graph: &std::path::Path,
    init: Option<&str>,
    check: Option<PathBuf>,
    tol: f64,
    max_iter: usize,
    out: Option<PathBuf>,
    common: &Common,
) -> Outcome {
    let file = input::read_graph(graph)?;
    let g = &file.graph;
    let l = input::initial_lengths(init, &file)?;
    let state = LengthState::new(g, &l, DEFAULT_MULT_TOL)?;
    let lambda1 = state.lambda1();

    let (extremality, feasibility, cert) = match &check {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            let record = CertificateRecord::from_json(&text)?;
            if record.mode != FormMode::Problem1 {
                return Err(Failure::Usage(
                    "only length-problem certificates can be checked here".into(),
                ));
            }
            if (record.lambda1 - lambda1).abs() > 1e-8 * lambda1 {
                return Err(Failure::Usage(format!(
                    "certificate is for lambda1 = {}, lengths give {lambda1}",
                    record.lambda1
                )));
            }
            (None, None, Some(record.to_certificate()))
        }
        None => {
            let ext = extremality_check_sampled(&state, 100, common.seed)?;
            let forms = edge_form_matrices(g, &state.basis, &l, FormMode::Problem1)?;
            let opts = FeasibilityOptions {
                max_iter,
                ..FeasibilityOptions::default()
            };
            let feas = solve_cone_feasibility(&forms, &vec![1.0; g.edge_count()], &opts)?;
            let cert = if feas.report.status == FeasibilityStatus::Feasible {
                Some(build_embedding(&feas.gram, &state.basis, g, &l, FormMode::Problem1, 1.0)?)
            } else {
                None
            };
            (Some(ext), Some(feas.report), cert)
        }
    };
    let verification = match &cert {
        Some(c) => Some(verify_certificate(c, &state.laplacian, &l, lambda1, FormMode::Problem1, tol)?),
        None => None,
    };
    let pass = verification.as_ref().is_some_and(|v| v.pass);
    let record = cert.as_ref().map(CertificateRecord::from_certificate);
    if let (Some(path), Some(rec), None) = (&out, &record, &check) {
        input::write_text(path, &rec.to_json())?;
    }
    if common.json {
        print_json(&CertifyReport {
            lambda1,
            multiplicity: state.multiplicity(),
            extremality: extremality.as_ref().map(Extremality::from),
            feasibility,
            verification: verification.as_ref().map(Verification::from),
            certificate: record,
            pass,
        });
        return Ok(pass);
    }
    println!("lambda1 = {lambda1:.12}");
    println!("multiplicity = {}", state.multiplicity());
    if let Some(e) = &extremality {
        println!("extremality: {} (worst {:.3e})", e.label(), e.worst_violation());
    }
    if let Some(f) = &feasibility {
        print_feasibility(f);
    }
    if let (Some(c), Some(v)) = (&cert, &verification) {
        println!("eigen-map in R^{}:", c.dimension());
        print_map(&c.map);
        println!(
            "max residual {:.3e}, eigen residual {:.3e} (tol {tol:e})",
            v.max_residual, v.eigen_residual
        );
    }
    println!("{}", verdict(pass));
    Ok(pass)
}

fn run_scan(
    preset: Option<String>,
    spec: Option<PathBuf>,
    graph: Option<PathBuf>,
    points: usize,
    cap: f64,
    out: Option<PathBuf>,
    common: &Common,
) -> Outcome {
    let (g, spec) = match (preset, spec) {
        (Some(name), None) => scan::preset(&name, points, cap)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path).map_err(Error::from)?;
            let spec = ScanSpec::from_json(&text)?;
            let graph = graph.expect("clap requires --graph with --spec");
            (input::read_graph(&graph)?.graph, spec)
        }
        _ => {
            return Err(Failure::Usage(format!(
                "give --preset ({}) or --spec",
                scan::PRESETS.join(", ")
            )))
        }
    };
    let table = landscape_scan(&g, &spec)?;
    match &out {
        Some(path) => export_grid(&table, path)?,
        None if !common.json => print!("{}", table.to_csv()),
        None => {}
    }
    let best = table.argmax().expect("scan tables are nonempty");
    if common.json {
        #[derive(Serialize)]
        struct ScanSummary<'a> {
            axes: &'a [String],
            rows: usize,
            argmax: &'a [f64],
            max_lambda1: f64,
            divergent_rows: usize,
        }
        print_json(&ScanSummary {
            axes: &table.axes,
            rows: table.len(),
            argmax: &best.coords,
            max_lambda1: best.lambda1,
            divergent_rows: table.rows.iter().filter(|r| r.divergent).count(),
        });
    } else if let Some(path) = &out {
        println!(
            "{} rows written to {}; max lambda1 {:.9} at {:?}",
            table.len(),
            path.display(),
            best.lambda1,
            best.coords
        );
    }
    Ok(true)
}

fn examples(names: Vec<String>, all: bool, list: bool, common: &Common) -> Outcome {
    if list {
        for name in FIXTURE_NAMES {
            let fx = lapmax::fixtures::fixture(name)?;
            println!("{name:14} {}", fx.note);
        }
        return Ok(true);
    }
    let names: Vec<String> = if all {
        FIXTURE_NAMES.iter().map(|s| s.to_string()).collect()
    } else if names.is_empty() {
        return Err(Failure::Usage("name a fixture or pass --all".into()));
    } else {
        names
    };
    let opts = LengthOptions {
        seed: common.seed,
        ..LengthOptions::default()
    };
    let mut reports: Vec<FixtureReport> = Vec::new();
    for name in &names {
        let t = std::time::Instant::now();
        let r = run_example(name, &opts)?;
        if !common.json {
            println!("{} {name} ({:.2}s)", verdict(r.pass), t.elapsed().as_secs_f64());
            println!("  lambda1 = {:.10}, multiplicity {}", r.lambda1, r.multiplicity);
            for c in &r.checks {
                println!("  [{}] {}: {}", verdict(c.pass), c.name, c.detail);
            }
        }
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    if common.json {
        print_json(&reports);
    } else {
        let passed = reports.iter().filter(|r| r.pass).count();
        println!("{passed}/{} fixtures passed", reports.len());
    }
    Ok(pass)
}
