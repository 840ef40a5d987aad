//! Run configuration: a small `key = value` sections format, strict about
//! unknown keys, round-trippable through [`RunConfig::to_text`].
//!
//! Scenarios carry around twenty parameters, so everything lives in a file
//! and `--override section.key=value` patches individual entries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use homog_mcf_core::force::{ForcingField, TrigTerm};
use homog_mcf_core::linalg::MAX_DIM;

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    Cone,
    Flat,
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    Torus,
    Box,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForceKind {
    Zero,
    Constant,
    Sinusoid,
    TrigPoly,
}

/// One trig-polynomial term as configured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigTerm {
    pub mode: [i32; MAX_DIM],
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

/// Fully resolved run configuration. Every field has a default, so a missing
/// file or section simply runs the built-in cone scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    // [scenario]
    pub name: String,
    pub dimension: usize,
    pub initial: InitialKind,
    pub initial_amplitude: f64,
    pub initial_mode: i32,
    pub lipschitz_bound: f64,
    // [force]
    pub force_family: ForceKind,
    pub force_value: f64,
    pub force_offset: f64,
    pub force_amplitude: f64,
    pub force_mode: [i32; MAX_DIM],
    pub force_phase: f64,
    pub force_terms: Vec<ConfigTerm>,
    pub delta: f64,
    pub check_resolution: f64,
    // [grid]
    pub topology: TopologyKind,
    pub points_per_axis: usize,
    pub extent: f64,
    // [solver]
    pub stop_tol: f64,
    pub lambdas: Vec<f64>,
    pub theta_pad: f64,
    pub safety: f64,
    pub gradient_bound: f64,
    pub max_steps: usize,
    pub cell_points: usize,
    pub monitor_stride: usize,
    // [experiment]
    pub eps_list: Vec<f64>,
    pub horizon: f64,
    pub table_range: f64,
    pub table_samples: usize,
    pub window: f64,
    pub resolution_factor: usize,
    pub slope: [f64; MAX_DIM],
    pub snapshot_times: Vec<f64>,
    pub table_file: Option<String>,
    pub rng_seed: u64,
    // [output]
    pub directory: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "cone".into(),
            dimension: 1,
            initial: InitialKind::Cone,
            initial_amplitude: 0.25,
            initial_mode: 1,
            lipschitz_bound: 1.0,
            force_family: ForceKind::Zero,
            force_value: 1.0,
            force_offset: 1.0,
            force_amplitude: 0.5,
            force_mode: [1, 0],
            force_phase: 0.0,
            force_terms: Vec::new(),
            delta: 0.2,
            check_resolution: 1.0 / 4096.0,
            topology: TopologyKind::Box,
            points_per_axis: 256,
            extent: 2.0,
            stop_tol: 1e-8,
            lambdas: vec![1e-2, 5e-3, 2.5e-3],
            theta_pad: 1.2,
            safety: 0.9,
            gradient_bound: 5.0,
            max_steps: 20_000_000,
            cell_points: 512,
            monitor_stride: 1,
            eps_list: vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
            horizon: 1.0,
            table_range: 3.0,
            table_samples: 49,
            window: 1.0,
            resolution_factor: 16,
            slope: [0.0, 0.0],
            snapshot_times: Vec::new(),
            table_file: None,
            rng_seed: 42,
            directory: "out".into(),
        }
    }
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str, origin: &str) -> CliResult<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "{origin}:{}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        if current.is_empty() {
            return Err(CliError::Validation(format!(
                "{origin}:{}: key `{}` appears before any [section]",
                lineno + 1,
                key.trim()
            )));
        }
        let prior = sections
            .get_mut(&current)
            .expect("section inserted above")
            .insert(key.trim().to_string(), value.trim().to_string());
        if prior.is_some() {
            return Err(CliError::Validation(format!(
                "{origin}:{}: duplicate key {current}.{}",
                lineno + 1,
                key.trim()
            )));
        }
    }
    Ok(sections)
}

fn bad(path: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("config key {path}: {detail}"))
}

struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<f64>().map_err(|e| bad(&format!("{}.{key}", self.name), e)),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> CliResult<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|e| bad(&format!("{}.{key}", self.name), e)),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> CliResult<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<u64>().map_err(|e| bad(&format!("{}.{key}", self.name), e)),
        }
    }

    fn i32(&mut self, key: &str, default: i32) -> CliResult<i32> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse::<i32>().map_err(|e| bad(&format!("{}.{key}", self.name), e)),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or_else(|| default.to_string())
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(&format!("{}.{key}", self.name), e)))
                .collect(),
        }
    }

    fn finish(self) -> CliResult<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(CliError::Validation(format!(
                "unknown config key {}.{key}",
                self.name
            )));
        }
        Ok(())
    }
}

fn parse_mode(name: &str, text: &str, n: usize) -> CliResult<[i32; MAX_DIM]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() > n {
        return Err(bad(name, format!("mode has {} entries for dimension {n}", parts.len())));
    }
    let mut mode = [0i32; MAX_DIM];
    for (k, part) in parts.iter().enumerate() {
        mode[k] = part.parse::<i32>().map_err(|e| bad(name, e))?;
    }
    Ok(mode)
}

fn parse_terms(name: &str, text: &str, n: usize) -> CliResult<Vec<ConfigTerm>> {
    let mut terms = Vec::new();
    for chunk in text.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let parts: Vec<&str> = chunk.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad(name, format!("term `{chunk}` is not mode:cos:sin")));
        }
        terms.push(ConfigTerm {
            mode: parse_mode(name, parts[0], n)?,
            cos_coeff: parts[1].parse::<f64>().map_err(|e| bad(name, e))?,
            sin_coeff: parts[2].parse::<f64>().map_err(|e| bad(name, e))?,
        });
    }
    Ok(terms)
}

fn parse_slope(name: &str, text: &str, n: usize) -> CliResult<[f64; MAX_DIM]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() > n {
        return Err(bad(name, format!("slope has {} entries for dimension {n}", parts.len())));
    }
    let mut slope = [0.0; MAX_DIM];
    for (k, part) in parts.iter().enumerate() {
        slope[k] = part.parse::<f64>().map_err(|e| bad(name, e))?;
    }
    Ok(slope)
}

impl RunConfig {
    pub fn from_text(text: &str, origin: &str) -> CliResult<RunConfig> {
        let sections = parse_sections(text, origin)?;
        RunConfig::from_sections(sections)
    }

    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_text(&text, &path.display().to_string())
    }

    /// Applies `section.key=value` patches before typed validation.
    pub fn apply_overrides(text: &str, overrides: &[String]) -> CliResult<String> {
        let mut out = String::from(text);
        for item in overrides {
            let Some((path, value)) = item.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "override `{item}` is not section.key=value"
                )));
            };
            let Some((section, key)) = path.trim().split_once('.') else {
                return Err(CliError::Validation(format!(
                    "override `{item}` is not section.key=value"
                )));
            };
            // Appending a fresh section with the key wins over earlier
            // occurrences only if parsing rejected duplicates, so rewrite
            // in place instead.
            out = rewrite_key(&out, section.trim(), key.trim(), value.trim());
        }
        Ok(out)
    }

    fn from_sections(mut sections: Sections) -> CliResult<RunConfig> {
        let known = ["scenario", "force", "grid", "solver", "experiment", "output"];
        if let Some(name) = sections.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Validation(format!("unknown config section [{name}]")));
        }
        let mut take = |name: &'static str| Section {
            name,
            entries: sections.remove(name).unwrap_or_default(),
        };
        let d = RunConfig::default();

        let mut s = take("scenario");
        let name = s.string("name", &d.name);
        let dimension = s.usize("dimension", d.dimension)?;
        if !(1..=MAX_DIM).contains(&dimension) {
            return Err(bad("scenario.dimension", "must be 1 or 2"));
        }
        let initial = match s.string("initial", "cone").as_str() {
            "cone" => InitialKind::Cone,
            "flat" => InitialKind::Flat,
            "sine" => InitialKind::Sine,
            other => return Err(bad("scenario.initial", format!("unknown profile `{other}`"))),
        };
        let initial_amplitude = s.f64("amplitude", d.initial_amplitude)?;
        let initial_mode = s.i32("mode", d.initial_mode)?;
        let lipschitz_bound = s.f64("lipschitz_bound", d.lipschitz_bound)?;
        if !(lipschitz_bound >= 0.0 && lipschitz_bound.is_finite()) {
            return Err(bad("scenario.lipschitz_bound", "must be finite and nonnegative"));
        }
        s.finish()?;

        let mut s = take("force");
        let force_family = match s.string("family", "zero").as_str() {
            "zero" => ForceKind::Zero,
            "constant" => ForceKind::Constant,
            "sinusoid" => ForceKind::Sinusoid,
            "trig-poly" => ForceKind::TrigPoly,
            other => return Err(bad("force.family", format!("unknown family `{other}`"))),
        };
        let force_value = s.f64("value", d.force_value)?;
        let force_offset = s.f64("offset", d.force_offset)?;
        let force_amplitude = s.f64("amplitude", d.force_amplitude)?;
        let force_mode = match s.take("mode") {
            None => d.force_mode,
            Some(v) => parse_mode("force.mode", &v, dimension)?,
        };
        let force_phase = s.f64("phase", d.force_phase)?;
        let force_terms = match s.take("terms") {
            None => Vec::new(),
            Some(v) => parse_terms("force.terms", &v, dimension)?,
        };
        let delta = s.f64("delta", d.delta)?;
        if !(delta > 0.0) {
            return Err(bad("force.delta", "must be positive"));
        }
        let check_resolution = s.f64("check_resolution", d.check_resolution)?;
        if !(check_resolution > 0.0) {
            return Err(bad("force.check_resolution", "must be positive"));
        }
        s.finish()?;

        let mut s = take("grid");
        let topology = match s.string("topology", "box").as_str() {
            "torus" => TopologyKind::Torus,
            "box" => TopologyKind::Box,
            other => return Err(bad("grid.topology", format!("unknown topology `{other}`"))),
        };
        let points_per_axis = s.usize("points_per_axis", d.points_per_axis)?;
        let extent = s.f64("extent", d.extent)?;
        if !(extent > 0.0) {
            return Err(bad("grid.extent", "must be positive"));
        }
        s.finish()?;

        let mut s = take("solver");
        let stop_tol = s.f64("stop_tol", d.stop_tol)?;
        if !(stop_tol > 0.0) {
            return Err(bad("solver.stop_tol", "must be positive"));
        }
        let lambdas = s.f64_list("lambdas", &d.lambdas)?;
        if lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(bad("solver.lambdas", "discounts must lie in (0, 1]"));
        }
        let theta_pad = s.f64("theta_pad", d.theta_pad)?;
        if theta_pad < 1.0 {
            return Err(bad("solver.theta_pad", "must be at least 1"));
        }
        let safety = s.f64("safety", d.safety)?;
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(bad("solver.safety", "must lie in (0, 1]"));
        }
        let gradient_bound = s.f64("gradient_bound", d.gradient_bound)?;
        if !(gradient_bound > 0.0) {
            return Err(bad("solver.gradient_bound", "must be positive"));
        }
        let max_steps = s.usize("max_steps", d.max_steps)?;
        let cell_points = s.usize("cell_points", d.cell_points)?;
        let monitor_stride = s.usize("monitor_stride", d.monitor_stride)?;
        if monitor_stride == 0 {
            return Err(bad("solver.monitor_stride", "must be at least 1"));
        }
        s.finish()?;

        let mut s = take("experiment");
        let eps_list = s.f64_list("eps", &d.eps_list)?;
        if eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(bad("experiment.eps", "every eps must lie in (0, 1]"));
        }
        let horizon = s.f64("horizon", d.horizon)?;
        if !(horizon > 0.0) {
            return Err(bad("experiment.horizon", "must be positive"));
        }
        let table_range = s.f64("table_range", d.table_range)?;
        if !(table_range > 0.0) {
            return Err(bad("experiment.table_range", "must be positive"));
        }
        let table_samples = s.usize("table_samples", d.table_samples)?;
        if table_samples < 2 {
            return Err(bad("experiment.table_samples", "need at least 2"));
        }
        let window = s.f64("window", d.window)?;
        if !(window > 0.0) {
            return Err(bad("experiment.window", "must be positive"));
        }
        let resolution_factor = s.usize("resolution_factor", d.resolution_factor)?;
        if resolution_factor < 16 {
            return Err(bad("experiment.resolution_factor", "must be at least 16"));
        }
        let slope = match s.take("slope") {
            None => d.slope,
            Some(v) => parse_slope("experiment.slope", &v, dimension)?,
        };
        let snapshot_times = s.f64_list("snapshot_times", &[])?;
        let table_file = s.take("table_file").filter(|v| !v.is_empty());
        let rng_seed = s.u64("rng_seed", d.rng_seed)?;
        s.finish()?;

        let mut s = take("output");
        let directory = s.string("directory", &d.directory);
        s.finish()?;

        Ok(RunConfig {
            name,
            dimension,
            initial,
            initial_amplitude,
            initial_mode,
            lipschitz_bound,
            force_family,
            force_value,
            force_offset,
            force_amplitude,
            force_mode,
            force_phase,
            force_terms,
            delta,
            check_resolution,
            topology,
            points_per_axis,
            extent,
            stop_tol,
            lambdas,
            theta_pad,
            safety,
            gradient_bound,
            max_steps,
            cell_points,
            monitor_stride,
            eps_list,
            horizon,
            table_range,
            table_samples,
            window,
            resolution_factor,
            slope,
            snapshot_times,
            table_file,
            rng_seed,
            directory,
        })
    }

    /// Canonical serialization; `from_text(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = self.dimension;
        let _ = writeln!(out, "[scenario]");
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "dimension = {}", self.dimension);
        let initial = match self.initial {
            InitialKind::Cone => "cone",
            InitialKind::Flat => "flat",
            InitialKind::Sine => "sine",
        };
        let _ = writeln!(out, "initial = {initial}");
        let _ = writeln!(out, "amplitude = {:?}", self.initial_amplitude);
        let _ = writeln!(out, "mode = {}", self.initial_mode);
        let _ = writeln!(out, "lipschitz_bound = {:?}", self.lipschitz_bound);

        let _ = writeln!(out, "\n[force]");
        let family = match self.force_family {
            ForceKind::Zero => "zero",
            ForceKind::Constant => "constant",
            ForceKind::Sinusoid => "sinusoid",
            ForceKind::TrigPoly => "trig-poly",
        };
        let _ = writeln!(out, "family = {family}");
        let _ = writeln!(out, "value = {:?}", self.force_value);
        let _ = writeln!(out, "offset = {:?}", self.force_offset);
        let _ = writeln!(out, "amplitude = {:?}", self.force_amplitude);
        let mode: Vec<String> = self.force_mode[..n].iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "mode = {}", mode.join(","));
        let _ = writeln!(out, "phase = {:?}", self.force_phase);
        if !self.force_terms.is_empty() {
            let terms: Vec<String> = self
                .force_terms
                .iter()
                .map(|t| {
                    let mode: Vec<String> = t.mode[..n].iter().map(|k| k.to_string()).collect();
                    format!("{}:{:?}:{:?}", mode.join(","), t.cos_coeff, t.sin_coeff)
                })
                .collect();
            let _ = writeln!(out, "terms = {}", terms.join("; "));
        }
        let _ = writeln!(out, "delta = {:?}", self.delta);
        let _ = writeln!(out, "check_resolution = {:?}", self.check_resolution);

        let _ = writeln!(out, "\n[grid]");
        let topology = match self.topology {
            TopologyKind::Torus => "torus",
            TopologyKind::Box => "box",
        };
        let _ = writeln!(out, "topology = {topology}");
        let _ = writeln!(out, "points_per_axis = {}", self.points_per_axis);
        let _ = writeln!(out, "extent = {:?}", self.extent);

        let _ = writeln!(out, "\n[solver]");
        let _ = writeln!(out, "stop_tol = {:?}", self.stop_tol);
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| format!("{l:?}")).collect();
        let _ = writeln!(out, "lambdas = {}", lambdas.join(", "));
        let _ = writeln!(out, "theta_pad = {:?}", self.theta_pad);
        let _ = writeln!(out, "safety = {:?}", self.safety);
        let _ = writeln!(out, "gradient_bound = {:?}", self.gradient_bound);
        let _ = writeln!(out, "max_steps = {}", self.max_steps);
        let _ = writeln!(out, "cell_points = {}", self.cell_points);
        let _ = writeln!(out, "monitor_stride = {}", self.monitor_stride);

        let _ = writeln!(out, "\n[experiment]");
        let eps: Vec<String> = self.eps_list.iter().map(|e| format!("{e:?}")).collect();
        let _ = writeln!(out, "eps = {}", eps.join(", "));
        let _ = writeln!(out, "horizon = {:?}", self.horizon);
        let _ = writeln!(out, "table_range = {:?}", self.table_range);
        let _ = writeln!(out, "table_samples = {}", self.table_samples);
        let _ = writeln!(out, "window = {:?}", self.window);
        let _ = writeln!(out, "resolution_factor = {}", self.resolution_factor);
        let slope: Vec<String> = self.slope[..n].iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "slope = {}", slope.join(","));
        if !self.snapshot_times.is_empty() {
            let times: Vec<String> = self.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
            let _ = writeln!(out, "snapshot_times = {}", times.join(", "));
        }
        if let Some(file) = &self.table_file {
            let _ = writeln!(out, "table_file = {file}");
        }
        let _ = writeln!(out, "rng_seed = {}", self.rng_seed);

        let _ = writeln!(out, "\n[output]");
        let _ = writeln!(out, "directory = {}", self.directory);
        out
    }

    /// The forcing field this configuration describes.
    pub fn force(&self) -> CliResult<ForcingField> {
        let n = self.dimension;
        let f = match self.force_family {
            ForceKind::Zero => ForcingField::zero(n),
            ForceKind::Constant => ForcingField::constant(n, self.force_value)?,
            ForceKind::Sinusoid => ForcingField::sinusoid(
                n,
                self.force_offset,
                self.force_amplitude,
                self.force_mode,
                self.force_phase,
            )?,
            ForceKind::TrigPoly => {
                let terms = self
                    .force_terms
                    .iter()
                    .map(|t| TrigTerm { mode: t.mode, cos_coeff: t.cos_coeff, sin_coeff: t.sin_coeff })
                    .collect();
                ForcingField::trig_poly(n, self.force_offset, terms)?
            }
        };
        Ok(f)
    }
}

/// Replaces (or appends) one key inside one section of the raw text.
fn rewrite_key(text: &str, section: &str, key: &str, value: &str) -> String {
    let mut out = Vec::new();
    let mut in_section = false;
    let mut replaced = false;
    let mut section_seen = false;
    for raw in text.lines() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if in_section && !replaced {
                out.push(format!("{key} = {value}"));
                replaced = true;
            }
            in_section = name.trim() == section;
            if in_section {
                section_seen = true;
            }
            out.push(raw.to_string());
            continue;
        }
        if in_section && !line.starts_with('#') {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    out.push(format!("{key} = {value}"));
                    replaced = true;
                    continue;
                }
            }
        }
        out.push(raw.to_string());
    }
    if !section_seen {
        out.push(format!("[{section}]"));
        out.push(format!("{key} = {value}"));
    } else if !replaced {
        // Section exists but ran to the end of the file without the key.
        let mut rebuilt = Vec::new();
        let mut injected = false;
        let mut inside = false;
        for line in &out {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                inside = name.trim() == section;
            }
            rebuilt.push(line.clone());
            if inside && !injected && trimmed == format!("[{section}]") {
                rebuilt.push(format!("{key} = {value}"));
                injected = true;
            }
        }
        out = rebuilt;
    }
    out.join("\n") + "\n"
}
