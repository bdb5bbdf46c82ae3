use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dccm::ctrl::{ControllerOptions, GainEvaluation};
use dccm::io::{read_json, write_text};
use dccm::plot::trajectory_svg;
use dccm::sdp::SdpOptions;
use dccm::sim::{simulate_with, ReferenceSchedule};
use dccm::synth::{synthesize, CertificateTemplate, DccmCertificate, ObjectiveMode, SynthOptions};
use dccm::system::{ControlAffineSystem, StateBox};
use dccm::verify::{verify_contraction, GridSpec};
use dccm::DccmError;

#[derive(Parser)]
#[command(name = "dccm", version, about = "Contraction metric synthesis, verification and tracking simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a certificate and write it as JSON.
    Synth {
        #[arg(long)]
        system: PathBuf,
        /// Polynomial degree of W and L.
        #[arg(long)]
        degree: u32,
        /// Separate degree for L; defaults to `--degree`.
        #[arg(long)]
        gain_degree: Option<u32>,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        /// Lower bound on the certified margin.
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        /// Stop at any certificate with margin epsilon instead of maximizing it.
        #[arg(long)]
        feasibility_only: bool,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the closed loop against a reference schedule.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Initial state, comma separated; defaults to the first setpoint.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Overrides the schedule's step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Segments per geodesic.
        #[arg(long, default_value_t = 30)]
        segments: usize,
        /// Evaluate the gain at the current state instead of along the geodesic.
        #[arg(long)]
        eq28_gain: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Scan a certificate on a grid; exits 0 iff every point contracts.
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        /// State box as `lo:hi` per axis, comma separated.
        #[arg(long = "box", allow_hyphen_values = true, default_value = "-0.5:1.5,-0.5:1.5")]
        state_box: String,
        /// Input box in the same form.
        #[arg(long, allow_hyphen_values = true, default_value = "-0.2:0.2")]
        ubox: String,
        /// Points per axis.
        #[arg(long, default_value_t = 21)]
        res: usize,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit 1: the inputs were fine but the answer is negative.
/// Exit 2: the inputs themselves are unusable.
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<DccmError> for Failure {
    fn from(e: DccmError) -> Self {
        match e {
            DccmError::SynthesisInfeasible { .. }
            | DccmError::SolverFailure { .. }
            | DccmError::GeodesicMaxIterations { .. }
            | DccmError::SingularMetric { .. }
            | DccmError::NonPositiveMetric { .. } => Failure::Domain(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_box(s: &str, what: &str) -> Result<StateBox, Failure> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in s.split(',') {
        let (lo, hi) = axis
            .split_once(':')
            .ok_or_else(|| Failure::Usage(format!("{what}: expected lo:hi, got {axis:?}")))?;
        lower.push(parse_vector(lo, what)?[0]);
        upper.push(parse_vector(hi, what)?[0]);
    }
    Ok(StateBox::new(lower, upper)?)
}

/// Prints a line, ignoring a closed stdout such as `dccm verify | head`.
fn say(line: std::fmt::Arguments) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn load_system(path: &Path) -> Result<ControlAffineSystem, Failure> {
    Ok(read_json(path)?)
}

fn load_cert(path: &Path) -> Result<DccmCertificate, Failure> {
    Ok(read_json(path)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth {
            system,
            degree,
            gain_degree,
            beta,
            epsilon,
            feasibility_only,
            max_iters,
            out,
        } => {
            let sys = load_system(&system)?;
            let tmpl = CertificateTemplate::new(sys.n(), sys.m(), degree, gain_degree.unwrap_or(degree), beta)?;
            let opts = SynthOptions {
                epsilon,
                objective: if feasibility_only {
                    ObjectiveMode::FeasibilityOnly
                } else {
                    ObjectiveMode::MaximizeMargin
                },
                solver: SdpOptions {
                    max_iters,
                    ..SdpOptions::default()
                },
                ..SynthOptions::default()
            };
            let cert = synthesize(&sys, &tmpl, &opts)?;
            write_text(&out, &cert.to_json())?;
            say(format_args!("margin {:.6e}", cert.margin()));
            Ok(())
        }
        Command::Simulate {
            system,
            cert,
            schedule,
            x0,
            steps,
            segments,
            eq28_gain,
            out,
            plot,
        } => {
            let sys = load_system(&system)?;
            let cert = load_cert(&cert)?;
            let mut sched: ReferenceSchedule = read_json(&schedule)?;
            if let Some(s) = steps {
                sched.total_steps = s;
            }
            sched.validate(&sys)?;
            let x0 = match x0 {
                Some(s) => parse_vector(&s, "--x0")?,
                None => sched.segments[0].x_star.clone(),
            };
            if x0.len() != sys.n() {
                return Err(Failure::Usage(format!("--x0 has {} entries, system has {} states", x0.len(), sys.n())));
            }
            let opts = ControllerOptions {
                segments,
                gain: if eq28_gain {
                    GainEvaluation::CurrentState
                } else {
                    GainEvaluation::GeodesicNodes
                },
                ..ControllerOptions::default()
            };
            let log = match simulate_with(&sys, &cert, &sched, &x0, &opts) {
                Ok(log) => log,
                Err(f) => {
                    write_text(&out, &f.log.to_csv())?;
                    return Err(Failure::Domain(f.to_string()));
                }
            };
            write_text(&out, &log.to_csv())?;
            if let Some(p) = plot {
                write_text(&p, &trajectory_svg(&log))?;
            }
            let last = log.rows.last();
            say(format_args!(
                "{} steps, final geodesic length {:.3e}",
                log.rows.len(),
                last.map_or(0.0, |r| r.length)
            ));
            Ok(())
        }
        Command::Verify {
            system,
            cert,
            state_box,
            ubox,
            res,
            out,
        } => {
            let sys = load_system(&system)?;
            let cert = load_cert(&cert)?;
            let grid = GridSpec::new(parse_box(&state_box, "--box")?, parse_box(&ubox, "--ubox")?, res)?;
            let report = verify_contraction(&sys, &cert, &grid)?;
            let json = report.to_json();
            say(format_args!("{json}"));
            if let Some(p) = out {
                write_text(&p, &format!("{json}\n"))?;
            }
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Domain("verification failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
