//! CSV formats: grid-function dumps, trace exports, and effective
//! Hamiltonian tables. Floats are written with the shortest representation
//! that round-trips, so repeated runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use homog_mcf_core::cell::{EffectiveHamiltonianTable, TableDiagnostics};
use homog_mcf_core::grid::{GridFunction, GridSpec, Topology};
use homog_mcf_core::parabolic::EvolutionTrace;

use crate::{CliError, CliResult};

/// `# n, topology, points_per_axis, h` then one value per line in the fixed
/// index order (axis 1 fastest).
pub fn grid_function_csv(f: &GridFunction) -> String {
    let spec = f.spec();
    let topology = match spec.topology() {
        Topology::Torus => "torus",
        Topology::Box { .. } => "box",
    };
    let mut out = String::new();
    let _ = writeln!(out, "# {}, {}, {}, {:?}", spec.n(), topology, spec.points_per_axis(), spec.h());
    for v in f.values() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

pub fn parse_grid_function_csv(text: &str, origin: &str) -> CliResult<GridFunction> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| CliError::Validation(format!("{origin}: missing grid header")))?;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Validation(format!("{origin}: malformed grid header")));
    }
    let n: usize = parts[0].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let m: usize = parts[2].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let h: f64 = parts[3].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let spec = match parts[1] {
        "torus" => GridSpec::torus(n, m)?,
        "box" => GridSpec::boxed(n, m, h * m as f64 / 2.0)?,
        other => return Err(CliError::Validation(format!("{origin}: unknown topology `{other}`"))),
    };
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| CliError::Validation(format!("{origin}: {e}"))))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(GridFunction::from_values(spec, values)?)
}

/// `t,sup_wt,lipschitz,max_hessian_norm`, one row per accepted step.
pub fn monitors_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::from("t,sup_wt,lipschitz,max_hessian_norm\n");
    for m in &trace.monitors {
        let _ = writeln!(out, "{:?},{:?},{:?},{:?}", m.t, m.sup_time_deriv, m.lipschitz, m.max_hessian_norm);
    }
    out
}

/// Writes one CSV per stored snapshot plus `monitors.csv` into `dir`.
pub fn export_trace(trace: &EvolutionTrace, dir: &Path, stem: &str) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (t, field) in &trace.snapshots {
        let name = format!("{stem}_t{t:.6}.csv");
        std::fs::write(dir.join(&name), grid_function_csv(field))?;
        written.push(name);
    }
    std::fs::write(dir.join("monitors.csv"), monitors_csv(trace))?;
    written.push("monitors.csv".into());
    Ok(written)
}

/// `# n, P, samples_per_axis, force descriptor` then `p..., value,
/// uncertainty` rows in node order.
pub fn table_csv(table: &EffectiveHamiltonianTable, force_descriptor: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {}, {:?}, {}, {}",
        table.n(),
        table.range(),
        table.samples_per_axis(),
        force_descriptor
    );
    let s = table.samples_per_axis();
    for (i, (v, u)) in table.values().iter().zip(table.uncertainties()).enumerate() {
        match table.n() {
            1 => {
                let _ = writeln!(out, "{:?},{v:?},{u:?}", table.node(i));
            }
            _ => {
                let _ = writeln!(out, "{:?},{:?},{v:?},{u:?}", table.node(i % s), table.node(i / s));
            }
        }
    }
    out
}

pub fn parse_table_csv(text: &str, origin: &str) -> CliResult<EffectiveHamiltonianTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| CliError::Validation(format!("{origin}: missing table header")))?;
    let parts: Vec<&str> = header.splitn(4, ',').map(str::trim).collect();
    if parts.len() < 3 {
        return Err(CliError::Validation(format!("{origin}: malformed table header")));
    }
    let n: usize = parts[0].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let range: f64 = parts[1].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let samples: usize = parts[2].parse().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    let mut values = Vec::new();
    let mut uncertainties = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != n + 2 {
            return Err(CliError::Validation(format!(
                "{origin}: expected {} columns, got {}",
                n + 2,
                cols.len()
            )));
        }
        values.push(
            cols[n].parse::<f64>().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?,
        );
        uncertainties.push(
            cols[n + 1].parse::<f64>().map_err(|e| CliError::Validation(format!("{origin}: {e}")))?,
        );
    }
    Ok(EffectiveHamiltonianTable::from_raw(n, range, samples, values, uncertainties)?)
}

/// Per-entry diagnostics alongside a table build: residuals and corrector
/// bounds, one row per sample.
pub fn table_diagnostics_csv(diag: &TableDiagnostics) -> String {
    let mut out = String::from("p0,p1,residual,uncertainty,sup_v,sup_dv,sup_d2v\n");
    for e in &diag.entries {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            e.p[0], e.p[1], e.residual, e.uncertainty, e.bounds.sup_value, e.bounds.sup_gradient, e.bounds.sup_hessian
        );
    }
    out
}
