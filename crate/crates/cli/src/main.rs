use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use layerflow::output::{load_audit, run_scenario, OutputError};
use layerflow::scenario::{Scenario, ScenarioError};
use layerflow::scheme::SchemeError;
use layerflow::Exec;

/// Layered porous-media two-phase flow simulator.
#[derive(Parser)]
#[command(name = "layerflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a named preset (paper-case-1, paper-case-2).
    Run {
        scenario: String,
        /// Global resolution N (cell size = domain length / 2N).
        #[arg(long)]
        cells: Option<usize>,
        /// Number of time steps M.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "t-final")]
        t_final: Option<f64>,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
        /// Comma-separated snapshot times, replacing the scenario's list.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        /// Evaluate Jacobian colors on the thread pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Check the audit report of a finished run directory.
    Audit { run_dir: PathBuf },
}

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(e: &OutputError) -> u8 {
    match e {
        OutputError::Scenario(ScenarioError::Io { .. }) => EXIT_OTHER,
        OutputError::Scenario(_) | OutputError::Scheme(SchemeError::Validation(_)) => {
            EXIT_VALIDATION
        }
        OutputError::Scheme(_) => EXIT_SOLVER,
        OutputError::Io { .. } | OutputError::Format { .. } => EXIT_OTHER,
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    name: &str,
    cells: Option<usize>,
    steps: Option<usize>,
    t_final: Option<f64>,
    out_dir: Option<PathBuf>,
    snapshots: Option<Vec<f64>>,
    parallel: bool,
) -> Result<(), OutputError> {
    let mut scenario = Scenario::load(name)?;
    let d = &mut scenario.discretization;
    if let Some(n) = cells {
        d.cells = n;
        d.layer_cells = None;
    }
    if let Some(m) = steps {
        d.steps = m;
    }
    if let Some(t) = t_final {
        d.t_final = t;
    }
    if let Some(s) = snapshots {
        scenario.outputs.snapshots = s;
    }
    if parallel {
        scenario.solver.exec = Exec::Parallel;
    }
    scenario.validate()?;
    let out_dir = out_dir.unwrap_or_else(|| {
        let stem = if scenario.name.is_empty() {
            Path::new(name)
                .file_stem()
                .map_or("run".into(), |s| s.to_string_lossy().into_owned())
        } else {
            scenario.name.clone()
        };
        Path::new("runs").join(stem)
    });
    let report = run_scenario(&scenario, &out_dir)?;
    println!(
        "{}: {} steps to t = {}, output in {}",
        scenario.name,
        report.steps,
        report.final_state.t,
        out_dir.display()
    );
    for p in &report.snapshots {
        println!("  {}", p.display());
    }
    if let Some(a) = &report.audit {
        let s = &a.summary;
        println!(
            "  max per-step mass defect {:.3e}, max |F| {:.6e}, saturation in [{:.3e}, {:.6}]",
            s.max_step_mass_defect, s.max_abs_flux, s.saturation_min, s.saturation_max
        );
    }
    Ok(())
}

fn audit(run_dir: &Path) -> Result<bool, OutputError> {
    Scenario::load_file(&run_dir.join("scenario.json"))?;
    let audit = load_audit(run_dir)?;
    let s = &audit.summary;
    println!("steps                      {}", s.steps);
    println!("max per-step mass defect   {:.3e}", s.max_step_mass_defect);
    println!("max |flux|                 {:.6e}", s.max_abs_flux);
    println!("flux monotonicity excess   {:.3e}", s.flux_monotonicity_violation);
    println!("saturation range           [{:.3e}, {:.6}]", s.saturation_min, s.saturation_max);
    for (k, v) in audit.seminorms.iter().enumerate() {
        println!("seminorm layer {k}           {v:.6e}");
    }
    let violations = audit.violations();
    for v in &violations {
        println!("VIOLATION: {v}");
    }
    Ok(violations.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            cells,
            steps,
            t_final,
            out_dir,
            snapshots,
            parallel,
        } => run(&scenario, cells, steps, t_final, out_dir, snapshots, parallel).map(|_| true),
        Command::Audit { run_dir } => audit(&run_dir),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_OTHER),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
