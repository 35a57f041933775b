//! Run directories: snapshot CSVs, step history, resolved scenario and the
//! audit report.
//!
//! ```text
//! <out>/scenario.json
//! <out>/history.csv
//! <out>/audit.json              (when auditing is enabled)
//! <out>/snapshots/cells_t<t>.csv
//! <out>/snapshots/edges_t<t>.csv
//! ```

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{Auditor, RunAudit};
use crate::scenario::{Field, Scenario, ScenarioError};
use crate::scheme::{Scheme, SchemeError, State};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Shortest decimal that names `t` (`20`, `0.5`).
fn time_tag(t: f64) -> String {
    format!("{t}")
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the requested fields of `state`: saturation and capillary
/// pressure at cell centres to `cells`, flux at edges to `edges`.
pub fn emit_snapshot(
    state: &State,
    scheme: &Scheme,
    fields: &[Field],
    cells: Option<&mut dyn Write>,
    edges: Option<&mut dyn Write>,
) -> io::Result<()> {
    let disc = scheme.disc();
    let sat = fields.contains(&Field::Saturation);
    let cap = fields.contains(&Field::CapillaryPressure);
    if let Some(w) = cells.filter(|_| sat || cap) {
        let mut header = vec!["x"];
        if sat {
            header.push("saturation");
        }
        if cap {
            header.push("capillary_pressure");
        }
        writeln!(w, "{}", header.join(","))?;
        let pressures = scheme.cell_pressures(&state.u);
        for (j, u) in state.u.iter().enumerate() {
            let mut row = vec![num(disc.cell_center(j))];
            if sat {
                row.push(num(*u));
            }
            if cap {
                row.push(num(pressures[j]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
    }
    if let Some(w) = edges.filter(|_| fields.contains(&Field::Flux)) {
        writeln!(w, "x,flux")?;
        for (x, f) in disc.edges().iter().zip(&state.fluxes) {
            writeln!(w, "{},{}", num(*x), num(*f))?;
        }
    }
    Ok(())
}

/// What a finished run left behind.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub snapshots: Vec<PathBuf>,
    pub audit: Option<RunAudit>,
    pub final_state: State,
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

const HISTORY_HEADER: &str =
    "step,t,mass,expected_mass,inflow,outflow,flux_max,flux_min,newton_iterations,sweeps,residual";

fn history_row(scheme: &Scheme, s: &State) -> String {
    let (hi, lo) = s
        .fluxes
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), f| (h.max(*f), l.min(*f)));
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.step,
        num(s.t),
        num(scheme.mass(&s.u)),
        num(s.ledger.expected_mass()),
        num(s.inflow()),
        num(s.outflow()),
        num(hi),
        num(lo),
        s.solve.newton_iterations,
        s.solve.sweeps,
        num(s.solve.residual),
    )
}

/// Runs `scenario` and writes its run directory. Files written before a
/// solver failure are kept.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, OutputError> {
    let built = scenario.build()?;
    let scheme = &built.scheme;
    let snap_dir = out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let scenario_path = out_dir.join("scenario.json");
    fs::write(&scenario_path, scenario.to_json() + "\n").map_err(io_err(&scenario_path))?;

    let history_path = out_dir.join("history.csv");
    let mut history = create(&history_path)?;
    writeln!(history, "{HISTORY_HEADER}").map_err(io_err(&history_path))?;

    let audit_spec = &scenario.outputs.audit;
    let mut auditor = audit_spec
        .enabled
        .then(|| Auditor::new(scheme, audit_spec.thinning));
    let fields = &scenario.outputs.fields;
    let m = scheme.disc().m();
    let mut snapshots = Vec::new();
    let mut pending = built.snapshot_steps.iter().peekable();
    let mut last = None;
    for state in scheme.run(built.u0) {
        let state = match state {
            Ok(s) => s,
            Err(e) => {
                history.flush().map_err(io_err(&history_path))?;
                return Err(e.into());
            }
        };
        if let Some(a) = auditor.as_mut() {
            a.observe(&state);
        }
        if state.step % audit_spec.thinning == 0 || state.step == m {
            writeln!(history, "{}", history_row(scheme, &state)).map_err(io_err(&history_path))?;
        }
        while pending.next_if(|&&n| n == state.step).is_some() {
            let tag = time_tag(scheme.disc().time(state.step));
            let cells_path = snap_dir.join(format!("cells_t{tag}.csv"));
            let edges_path = snap_dir.join(format!("edges_t{tag}.csv"));
            let want_cells = fields.iter().any(|f| *f != Field::Flux);
            let want_edges = fields.contains(&Field::Flux);
            let mut cw = want_cells.then(|| create(&cells_path)).transpose()?;
            let mut ew = want_edges.then(|| create(&edges_path)).transpose()?;
            emit_snapshot(
                &state,
                scheme,
                fields,
                cw.as_mut().map(|w| w as &mut dyn Write),
                ew.as_mut().map(|w| w as &mut dyn Write),
            )
            .and_then(|_| cw.map_or(Ok(()), |mut w| w.flush()))
            .and_then(|_| ew.map_or(Ok(()), |mut w| w.flush()))
            .map_err(io_err(&snap_dir))?;
            if want_cells {
                snapshots.push(cells_path);
            }
            if want_edges {
                snapshots.push(edges_path);
            }
        }
        last = Some(state);
    }
    history.flush().map_err(io_err(&history_path))?;
    let audit = auditor.map(Auditor::finish);
    if let Some(a) = &audit {
        let path = out_dir.join("audit.json");
        let text = serde_json::to_string_pretty(a).expect("audit serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
    }
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        steps: m,
        snapshots,
        audit,
        final_state: last.expect("a run yields at least the initial state"),
    })
}

/// Reads back the audit report of a run directory.
pub fn load_audit(run_dir: &Path) -> Result<RunAudit, OutputError> {
    let path = run_dir.join("audit.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| OutputError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
