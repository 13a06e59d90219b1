mod report;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use supermech::jet::Chart;
use supermech::lagrangian::LagrangianSystem;
use supermech::noether::{certify_symmetry, check_constant_of_motion, noether_inverse, NoetherError, WitnessConfig};
use supermech::numeric::{conservation_report, integrate, rational_to_f64};
use supermech::problem::{parse_expression, parse_problem, ProblemFile};

use report::{expr_map, NoetherReport, NotSymmetryCertificate, Ordered, SimulateReport, SCHEMA};

#[derive(Parser)]
#[command(name = "supermech", version, about = "Higher-order Lagrangian supermechanics on graded jet coordinates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cartan forms, energy, Euler-Lagrange form, regularity and dynamics.
    Derive {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
    },
    /// Charge of a declared symmetry, or a symmetry recovered from a charge.
    Noether {
        file: PathBuf,
        #[command(flatten)]
        source: NoetherSource,
        /// Degree cap for the witness search.
        #[arg(long)]
        max_degree: Option<u32>,
    },
    /// Integrate the dynamics with RK4 and report drift of conserved quantities.
    Simulate {
        file: PathBuf,
        /// Drift tolerance.
        #[arg(long, default_value = "1e-6")]
        tol: String,
        /// Write the trajectory as CSV rows `t,coordinate,subset,coefficient`.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct NoetherSource {
    #[arg(long)]
    symmetry: Option<String>,
    #[arg(long)]
    from_charge: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Json,
    Latex,
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// The mathematics does not go through: exit code 1.
    Math(String),
}

/// Text for stdout and whether every check passed.
struct Outcome {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Derive { file, emit } => run_derive(&file, emit),
        Command::Noether { file, source, max_degree } => run_noether(&file, source, max_degree),
        Command::Simulate { file, tol, export } => run_simulate(&file, &tol, export.as_deref()),
    };
    match result {
        Ok(Outcome { text, ok }) => {
            println!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<ProblemFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn system(p: &ProblemFile) -> Result<LagrangianSystem, Failure> {
    let l = p.super_lagrangian().map_err(|e| Failure::Math(e.to_string()))?;
    LagrangianSystem::new(l).map_err(|e| Failure::Math(e.to_string()))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run_derive(path: &Path, emit: Emit) -> Result<Outcome, Failure> {
    let p = load(path)?;
    let s = system(&p)?;
    let report = report::derive_report(&s);
    let ok = report.regular;
    let text = match emit {
        Emit::Json => json(&report),
        Emit::Latex => report::derive_latex(&s),
    };
    Ok(Outcome { text, ok })
}

fn run_noether(path: &Path, source: NoetherSource, max_degree: Option<u32>) -> Result<Outcome, Failure> {
    let p = load(path)?;
    let s = system(&p)?;
    let chart = p.phase_chart();
    let dynamics = s.solve_dynamics().map_err(|e| Failure::Math(e.to_string()))?;
    let mut report = NoetherReport { schema: SCHEMA, ..Default::default() };

    let result = if let Some(name) = source.symmetry {
        let sym = p.symmetry(&name).ok_or_else(|| Failure::Usage(format!("no symmetry named `{name}`")))?;
        let field = p.symmetry_field(sym).map_err(|e| Failure::Usage(e.to_string()))?;
        report.symmetry = Some(name);
        report.field = Some(expr_map(&chart, field.components()));
        certify_symmetry(&s, &field)
    } else {
        let text = source.from_charge.expect("clap requires one source");
        let g = p.parse_expression(&text).map_err(|e| Failure::Usage(format!("--from-charge: {e}")))?;
        noether_inverse(&s, &g, WitnessConfig { max_degree })
    };

    match result {
        Ok(cert) => {
            report.is_symmetry = true;
            report.field = Some(expr_map(&chart, cert.field.components()));
            report.f = Some(s.chart().with_order(3 * p.order).display(&cert.f).to_string());
            report.charge = Some(chart.display(&cert.charge).to_string());
            report.conserved =
                check_constant_of_motion(&cert.charge, &dynamics).map_err(|e| Failure::Math(e.to_string()))?;
        }
        Err(NoetherError::NotSymmetry { coord, certificate }) => {
            let wide = chart.with_order(6 * p.order);
            report.certificate = Some(NotSymmetryCertificate {
                coordinate: coord.map(|c| wide.base_name(c).to_string()),
                variational_derivative: wide.display(&certificate).to_string(),
            });
            report.error = Some("not a symmetry: the variational derivative does not vanish".into());
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    let ok = report.is_symmetry && report.conserved;
    Ok(Outcome { text: json(&report), ok })
}

fn run_simulate(path: &Path, tol: &str, export: Option<&Path>) -> Result<Outcome, Failure> {
    let tol = parse_expression(tol, &Chart::new(vec![], vec![], 0))
        .ok()
        .and_then(|e| e.as_constant())
        .and_then(|r| rational_to_f64(&r).ok())
        .filter(|t| *t >= 0.0)
        .ok_or_else(|| Failure::Usage(format!("--tol: `{tol}` is not a nonnegative number")))?;
    let p = load(path)?;
    let sim = p.simulation.clone().ok_or_else(|| Failure::Usage("problem has no simulate block".into()))?;
    let s = system(&p)?;
    let dynamics = s.solve_dynamics().map_err(|e| Failure::Math(e.to_string()))?;
    let s0 = p.initial_state().map_err(|e| Failure::Usage(e.to_string()))?.expect("simulate block present");
    let dt = rational_to_f64(&sim.dt).map_err(|e| Failure::Usage(e.to_string()))?;
    let t_end = rational_to_f64(&sim.t_end).map_err(|e| Failure::Usage(e.to_string()))?;
    let traj = integrate(&dynamics, &s0, dt, t_end).map_err(|e| Failure::Math(e.to_string()))?;

    let chart = p.phase_chart();

    let mut quantities = vec![("E_L".to_string(), s.data().energy.clone())];
    let mut skipped = Vec::new();
    for sym in &p.symmetries {
        let cert = p.symmetry_field(sym).map_err(NoetherError::from).and_then(|x| certify_symmetry(&s, &x));
        match cert {
            Ok(c) => quantities.push((format!("symmetry {}", sym.name), c.charge)),
            Err(NoetherError::NotSymmetry { certificate, .. }) => skipped.push(format!(
                "symmetry {}: not a symmetry, variational derivative {}",
                sym.name,
                chart.with_order(6 * p.order).display(&certificate)
            )),
            Err(e) => skipped.push(format!("symmetry {}: {e}", sym.name)),
        }
    }
    quantities.extend(p.charges.iter().map(|(n, g)| (format!("charge {n}"), g.clone())));

    let drifts = conservation_report(&traj, &quantities).map_err(|e| Failure::Math(e.to_string()))?;
    let rows: Vec<report::DriftRow> = drifts
        .iter()
        .zip(&quantities)
        .map(|(d, (_, q))| report::DriftRow {
            name: d.name.clone(),
            expr: chart.display(q).to_string(),
            drift: d.drift,
            within_tol: d.drift <= tol,
        })
        .collect();
    let ok = rows.iter().all(|r| r.within_tol) && traj.constraint_violation <= tol && skipped.is_empty();

    if let Some(out) = export {
        let file = fs::File::create(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
        traj.export_csv(&chart, BufWriter::new(file)).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    }

    let final_state = Ordered(traj.last().values().map(|(c, v)| (chart.name(*c), v.coeffs().to_vec())).collect());
    let report = SimulateReport {
        schema: SCHEMA,
        generators: sim.generators,
        dt,
        t_end,
        steps: traj.times.len() - 1,
        tol,
        drift: rows,
        constraint_violation: traj.constraint_violation,
        final_state,
        skipped,
        ok,
    };
    Ok(Outcome { text: json(&report), ok })
}
