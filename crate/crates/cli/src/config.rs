//! Run configuration: a TOML document walked by hand so every error names
//! the offending key path.

use std::path::{Path, PathBuf};

use qtraj_core::{
    BdOptions, FdPolicy, Interval, Microstate, PhysicalConstants, Potential, ReducedAction,
    SuiteTolerances, DEFAULT_EPS_TURN, DEFAULT_QUAD_TOL,
};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    /// `None` keeps the analytic free basis on the whole line.
    pub domain: Option<Interval>,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub tol_jacobi: f64,
    pub tol_qshje: f64,
    pub tol_legendre: f64,
    pub tol_conformance: f64,
    pub tol_action_rate: f64,
    pub quad_tol: f64,
    pub eps_turn: f64,
    pub fd: FdPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub microstate: Microstate,
    pub potential: Potential,
    pub x_ref: f64,
    pub x_grid: XGrid,
    pub t_grid: TGrid,
    pub basis: BasisSpec,
    pub tolerances: Tolerances,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub continue_forbidden: bool,
    pub wronskian_scale: f64,
}

impl RunConfig {
    pub fn reduced_action(&self) -> qtraj_core::Result<ReducedAction> {
        let ra = match (&self.potential, self.basis.domain) {
            (Potential::Free, None) => ReducedAction::free(self.constants, self.microstate)?,
            (potential, Some(domain)) => ReducedAction::for_potential(
                self.constants,
                potential.clone(),
                self.microstate,
                domain,
                self.basis.step,
            )?,
            (_, None) => unreachable!("numeric potentials always carry a basis domain"),
        };
        let ra = ra.with_fd_policy(self.tolerances.fd);
        Ok(if self.wronskian_scale == 1.0 {
            ra
        } else {
            ra.with_wronskian_scale(self.wronskian_scale)
        })
    }

    pub fn x_range(&self) -> Result<Interval, CliError> {
        Interval::new(self.x_grid.x_min, self.x_grid.x_max)
            .map_err(|_| CliError::config("grid.x_max", "must not be below grid.x_min"))
    }

    pub fn t_range(&self) -> Result<Interval, CliError> {
        Interval::new(self.t_grid.t_min, self.t_grid.t_max)
            .map_err(|_| CliError::config("grid.t_max", "must not be below grid.t_min"))
    }

    pub fn bd_options(&self) -> BdOptions {
        BdOptions {
            continue_forbidden: self.continue_forbidden,
            eps_turn: self.tolerances.eps_turn,
            ..BdOptions::default()
        }
    }

    pub fn suite_tolerances(&self) -> SuiteTolerances {
        let t = &self.tolerances;
        SuiteTolerances {
            jacobi: t.tol_jacobi,
            qshje: t.tol_qshje,
            legendre: t.tol_legendre,
            conformance: t.tol_conformance,
            action_rate: t.tol_action_rate,
        }
    }
}

/// Reads one table, tracking which keys were consumed.
struct Section<'a> {
    path: String,
    table: &'a Table,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Self {
            path: path.to_string(),
            table,
            seen: Vec::new(),
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.get(key)
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(CliError::config(&self.key_path(key), "expected a number")),
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn required_f64(&mut self, key: &'static str) -> Result<f64, CliError> {
        self.f64(key)?
            .ok_or_else(|| CliError::config(&self.key_path(key), "missing required field"))
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(key, default)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::config(&self.key_path(key), "must be positive"))
        }
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(_) => Err(CliError::config(
                &self.key_path(key),
                "expected a non-negative integer",
            )),
        }
    }

    fn str(&mut self, key: &'static str) -> Result<Option<&'a str>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(CliError::config(&self.key_path(key), "expected a string")),
        }
    }

    fn bool(&mut self, key: &'static str) -> Result<Option<bool>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(CliError::config(&self.key_path(key), "expected a boolean")),
        }
    }

    fn table(&mut self, key: &'static str) -> Result<Option<&'a Table>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(CliError::config(&self.key_path(key), "expected a table")),
        }
    }

    /// Rejects anything not read so far.
    fn finish(self) -> Result<(), CliError> {
        let mut unknown: Vec<&String> = self
            .table
            .keys()
            .filter(|k| !self.seen.contains(&k.as_str()))
            .collect();
        unknown.sort();
        match unknown.first() {
            Some(k) => Err(CliError::UnknownKey(self.key_path(k))),
            None => Ok(()),
        }
    }
}

/// Parses a configuration document. Relative tabulated-potential paths are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig, CliError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Syntax(e.message().to_string()))?;
    let mut top = Section::new("", &root);
    let empty = Table::new();

    let energy = top.required_f64("E")?;
    let a = top.required_f64("a")?;
    let b = top.required_f64("b")?;
    let x0 = top.required_f64("x0")?;
    let t0 = top.f64_or("t0", 0.0)?;
    let lambda = top.f64_or("lambda", 0.0)?;
    let hbar = top.f64_or("hbar", 1.0)?;
    let mass = top.f64_or("mass", 1.0)?;
    let x_ref = top.f64_or("x_ref", x0)?;
    let constants =
        PhysicalConstants::new(hbar, mass).map_err(|e| CliError::Invalid(e.to_string()))?;
    let microstate = Microstate::new(energy, a, b, x0)
        .map_err(|e| CliError::Invalid(e.to_string()))?
        .with_t0(t0)
        .with_lambda(lambda);

    let potential_table = top
        .table("potential")?
        .ok_or_else(|| CliError::config("potential.kind", "missing required field"))?;
    let potential = parse_potential(potential_table, base_dir)?;

    let mut grid = Section::new("grid", top.table("grid")?.unwrap_or(&empty));
    let x_grid = XGrid {
        x_min: grid.f64_or("x_min", x0)?,
        x_max: grid.f64_or("x_max", x0 + 10.0)?,
        samples: grid.usize("samples")?.unwrap_or(101),
    };
    if x_grid.samples < 2 {
        return Err(CliError::config("grid.samples", "must be at least 2"));
    }
    let t_grid = TGrid {
        t_min: grid.f64_or("t_min", t0)?,
        t_max: grid.f64_or("t_max", t0 + 10.0)?,
        step: grid.positive("step", 0.1)?,
    };
    grid.finish()?;

    let basis_table = top.table("basis")?;
    let mut basis = Section::new("basis", basis_table.unwrap_or(&empty));
    let lo = basis.f64("x_min")?;
    let hi = basis.f64("x_max")?;
    let step = basis.positive("step", 1e-3)?;
    basis.finish()?;
    let domain =
        match (lo, hi, &potential) {
            (None, None, Potential::Free) => None,
            (lo, hi, _) => {
                let lo = lo.unwrap_or(x_grid.x_min.min(x0).min(x_ref));
                let hi = hi.unwrap_or(x_grid.x_max.max(x0).max(x_ref));
                Some(Interval::new(lo, hi).map_err(|_| {
                    CliError::config("basis.x_max", "must not be below basis.x_min")
                })?)
            }
        };

    let free = matches!(potential, Potential::Free);
    let mut tol = Section::new("tolerances", top.table("tolerances")?.unwrap_or(&empty));
    let policy = tol.str("fd_step_policy")?.unwrap_or("richardson");
    let fd_step = tol.f64("fd_step")?;
    let fd = match policy {
        "richardson" => FdPolicy::Richardson {
            initial: positive_or(fd_step, 0.05, "tolerances.fd_step")?,
        },
        "fixed" => FdPolicy::Fixed {
            step: positive_or(fd_step, 1e-4, "tolerances.fd_step")?,
        },
        _ => {
            return Err(CliError::config(
                "tolerances.fd_step_policy",
                "expected \"richardson\" or \"fixed\"",
            ))
        }
    };
    let tolerances = Tolerances {
        tol_jacobi: tol.positive("tol_jacobi", 1e-6)?,
        tol_qshje: tol.positive("tol_qshje", if free { 1e-9 } else { 1e-6 })?,
        tol_legendre: tol.positive("tol_legendre", 1e-6)?,
        tol_conformance: tol.positive("tol_conformance", 1e-6)?,
        tol_action_rate: tol.positive("tol_action_rate", 1e-6)?,
        quad_tol: tol.positive("quad_tol", DEFAULT_QUAD_TOL)?,
        eps_turn: tol.positive("eps_turn", DEFAULT_EPS_TURN)?,
        fd,
    };
    tol.finish()?;

    let mut output = Section::new("output", top.table("output")?.unwrap_or(&empty));
    let format = match output.str("format")? {
        None => Format::Csv,
        Some(s) => Format::parse(s)
            .ok_or_else(|| CliError::config("output.format", "expected \"csv\" or \"json\""))?,
    };
    let out = output.str("path")?.map(PathBuf::from);
    output.finish()?;

    let mut options = Section::new("options", top.table("options")?.unwrap_or(&empty));
    let continue_forbidden = options.bool("continue_forbidden")?.unwrap_or(false);
    options.finish()?;

    let mut debug = Section::new("debug", top.table("debug")?.unwrap_or(&empty));
    let wronskian_scale = debug.positive("wronskian_scale", 1.0)?;
    debug.finish()?;

    top.finish()?;

    Ok(RunConfig {
        constants,
        microstate,
        potential,
        x_ref,
        x_grid,
        t_grid,
        basis: BasisSpec { domain, step },
        tolerances,
        format,
        out,
        continue_forbidden,
        wronskian_scale,
    })
}

fn positive_or(value: Option<f64>, default: f64, path: &str) -> Result<f64, CliError> {
    let v = value.unwrap_or(default);
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(path, "must be positive"))
    }
}

fn parse_potential(table: &Table, base_dir: Option<&Path>) -> Result<Potential, CliError> {
    let mut s = Section::new("potential", table);
    let kind = s
        .str("kind")?
        .ok_or_else(|| CliError::config("potential.kind", "missing required field"))?;
    let invalid = |e: qtraj_core::Error| CliError::Invalid(e.to_string());
    let potential = match kind {
        "free" => Potential::Free,
        "harmonic" => {
            let k = s.required_f64("stiffness")?;
            let c = s.f64_or("center", 0.0)?;
            Potential::harmonic(k, c).map_err(invalid)?
        }
        "linear" => {
            let slope = s.required_f64("slope")?;
            let offset = s.f64_or("offset", 0.0)?;
            Potential::linear(slope, offset).map_err(invalid)?
        }
        "tabulated" => {
            let rel = s
                .str("path")?
                .ok_or_else(|| CliError::config("potential.path", "missing required field"))?;
            let path = match base_dir {
                Some(dir) if Path::new(rel).is_relative() => dir.join(rel),
                _ => PathBuf::from(rel),
            };
            Potential::from_csv_path(&path)
                .map_err(|e| CliError::config("potential.path", &e.to_string()))?
        }
        other => {
            return Err(CliError::config(
                "potential.kind",
                &format!("unknown kind \"{other}\" (expected free, harmonic, linear or tabulated)"),
            ))
        }
    };
    s.finish()?;
    Ok(potential)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "E = 0.5\na = 1\nb = 0\nx0 = 0\n[potential]\nkind = \"free\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.constants, PhysicalConstants::natural());
        assert_eq!((c.microstate.t0, c.microstate.lambda), (0.0, 0.0));
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.basis.domain, None);
        assert_eq!(c.tolerances.tol_qshje, 1e-9);
        assert_eq!(c.x_ref, 0.0);
        assert!(c.reduced_action().is_ok());
    }

    #[test]
    fn degenerate_a_rejected() {
        let err = parse_config(&MINIMAL.replace("a = 1", "a = 0"), None).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)), "{err}");
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn unknown_keys_named() {
        let err = parse_config(&format!("foo = 1\n{MINIMAL}"), None).unwrap_err();
        assert_eq!(err.to_string(), "unknown key: foo");
        let err = parse_config(&format!("{MINIMAL}[grid]\nsample = 3\n"), None).unwrap_err();
        assert_eq!(err.to_string(), "unknown key: grid.sample");
    }

    #[test]
    fn missing_and_mistyped_fields() {
        let err =
            parse_config("a = 1\nb = 0\nx0 = 0\n[potential]\nkind = \"free\"\n", None).unwrap_err();
        assert_eq!(err.to_string(), "E: missing required field");
        let err = parse_config("E = 0.5\na = 1\nb = 0\nx0 = 0\n", None).unwrap_err();
        assert_eq!(err.to_string(), "potential.kind: missing required field");
        let err = parse_config(&MINIMAL.replace("b = 0", "b = \"zero\""), None).unwrap_err();
        assert_eq!(err.to_string(), "b: expected a number");
        assert!(matches!(
            parse_config("E = = 1", None),
            Err(CliError::Syntax(_))
        ));
    }

    #[test]
    fn numeric_potential_domain_defaults_to_grid() {
        let text =
            "E = 0.5\na = 1.5\nb = 0\nx0 = 0\n[potential]\nkind = \"harmonic\"\nstiffness = 1\n\
                    [grid]\nx_min = -3\nx_max = 3\nsamples = 7\n";
        let c = parse_config(text, None).unwrap();
        assert_eq!(c.basis.domain, Some(Interval::new(-3.0, 3.0).unwrap()));
        assert_eq!(c.tolerances.tol_qshje, 1e-6);
    }
}
