//! Run configuration, manifest and snapshot files.
//!
//! # Config format
//!
//! Flat `key=value` lines; `#` starts a comment; blank lines are ignored.
//!
//! | key | value | default |
//! |---|---|---|
//! | `scenario` | `line_soliton`, `two_soliton`, `lump`, `zero` | `line_soliton` |
//! | `scheme` | `reduced45`, `preissman` | `reduced45` |
//! | `dx`, `dy`, `dt` | positive reals | per scenario, see below |
//! | `t_end` | positive real | per scenario |
//! | `domain` | `x0,x1,y0,y1` | per scenario |
//! | `sigma` | real | `-3` |
//! | `time_factor` | `auto`, `1`, `2` | `auto` |
//! | `snapshot_every` | steps, ≥ 1 | `100` |
//! | `tol` | positive real | `1e-10` |
//! | `max_iters` | ≥ 1 | `50` |
//! | `two_soliton_boundary` | `exact`, `superposition` | `exact` |
//! | `seed` | unsigned integer | `1` |
//! | `out_dir` | path | `out` |
//!
//! Scenario defaults: line soliton `[0,40]×[0,2]`, `dx=0.2, dy=0.1, dt=0.01`,
//! `t_end=10`; two solitons the same grid with `t_end=3`; lump `[0,20]²`,
//! `dx=0.1, dy=0.2, dt=0.01`, `t_end=1`; zero the line-soliton grid with `t_end=1`.
//!
//! `time_factor=auto` takes the coefficient certified by the residual oracle.
//! `two_soliton_boundary` only affects the two-soliton scenario: its initial
//! data is always the superposition, its boundary data for `t > 0` either the
//! exact bilinear two-soliton or the superposition.
//!
//! # Snapshots
//!
//! One CSV per snapshot, header `x,y,u`, rows in y-major then x order, every
//! number written as `{:.16e}` (17 significant digits, which round-trips every
//! finite `f64`). Files are named `u_k{step:06}.csv`.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Plane};
use crate::solutions::{Domain, TwoSolitonBoundary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    LineSoliton,
    TwoSoliton,
    Lump,
    Zero,
}

impl ScenarioName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::LineSoliton => "line_soliton",
            ScenarioName::TwoSoliton => "two_soliton",
            ScenarioName::Lump => "lump",
            ScenarioName::Zero => "zero",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "line_soliton" => ScenarioName::LineSoliton,
            "two_soliton" => ScenarioName::TwoSoliton,
            "lump" => ScenarioName::Lump,
            "zero" => ScenarioName::Zero,
            _ => return None,
        })
    }

    /// `(domain, dx, dy, dt)` of the scenario's reference run.
    pub fn defaults(&self) -> (Domain, f64, f64, f64) {
        let strip = |t_end| Domain {
            x0: 0.0,
            x1: 40.0,
            y0: 0.0,
            y1: 2.0,
            t_end,
        };
        match self {
            ScenarioName::LineSoliton => (strip(10.0), 0.2, 0.1, 0.01),
            ScenarioName::TwoSoliton => (strip(3.0), 0.2, 0.1, 0.01),
            ScenarioName::Zero => (strip(1.0), 0.2, 0.1, 0.01),
            ScenarioName::Lump => (
                Domain {
                    x0: 0.0,
                    x1: 20.0,
                    y0: 0.0,
                    y1: 20.0,
                    t_end: 1.0,
                },
                0.1,
                0.2,
                0.01,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Preissman,
    Reduced45,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Preissman => "preissman",
            SchemeKind::Reduced45 => "reduced45",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFactorChoice {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub scheme: SchemeKind,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub domain: Domain,
    pub sigma: f64,
    pub time_factor: TimeFactorChoice,
    pub snapshot_every: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub two_soliton_boundary: TwoSolitonBoundary,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_scenario(ScenarioName::LineSoliton)
    }
}

impl RunConfig {
    pub fn for_scenario(scenario: ScenarioName) -> Self {
        let (domain, dx, dy, dt) = scenario.defaults();
        Self {
            scenario,
            scheme: SchemeKind::Reduced45,
            dx,
            dy,
            dt,
            domain,
            sigma: -3.0,
            time_factor: TimeFactorChoice::Auto,
            snapshot_every: 100,
            tol: 1e-10,
            max_iters: 50,
            two_soliton_boundary: TwoSolitonBoundary::Exact,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(constraint(key, format!("must be positive, got {v}")))
            }
        };
        positive("dx", self.dx)?;
        positive("dy", self.dy)?;
        positive("dt", self.dt)?;
        positive("t_end", self.domain.t_end)?;
        positive("tol", self.tol)?;
        if !self.sigma.is_finite() || self.sigma == 0.0 {
            return Err(constraint("sigma", "must be finite and nonzero".into()));
        }
        if self.snapshot_every == 0 {
            return Err(constraint("snapshot_every", "must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(constraint("max_iters", "must be at least 1".into()));
        }
        self.domain
            .validate()
            .map_err(|e| constraint("domain", e.to_string()))?;
        self.grid().map_err(|e| constraint("domain", e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.domain.grid(self.dx, self.dy, self.dt)
    }

    /// `key=value` echo in config syntax.
    pub fn echo(&self) -> Vec<(String, String)> {
        let d = &self.domain;
        let tf = match self.time_factor {
            TimeFactorChoice::Auto => "auto".to_string(),
            TimeFactorChoice::Fixed(v) => v.to_string(),
        };
        vec![
            ("scenario".into(), self.scenario.as_str().into()),
            ("scheme".into(), self.scheme.as_str().into()),
            ("dx".into(), self.dx.to_string()),
            ("dy".into(), self.dy.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("t_end".into(), d.t_end.to_string()),
            ("domain".into(), format!("{},{},{},{}", d.x0, d.x1, d.y0, d.y1)),
            ("sigma".into(), self.sigma.to_string()),
            ("time_factor".into(), tf),
            ("snapshot_every".into(), self.snapshot_every.to_string()),
            ("tol".into(), self.tol.to_string()),
            ("max_iters".into(), self.max_iters.to_string()),
            (
                "two_soliton_boundary".into(),
                match self.two_soliton_boundary {
                    TwoSolitonBoundary::Exact => "exact",
                    TwoSolitonBoundary::Superposition => "superposition",
                }
                .into(),
            ),
            ("seed".into(), self.seed.to_string()),
            ("out_dir".into(), self.out_dir.display().to_string()),
        ]
    }
}

fn constraint(key: &str, message: String) -> Error {
    Error::Constraint {
        key: key.to_string(),
        message,
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the flat config format documented at module level.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected key=value, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(parse_err(line_no, "empty key"));
        }
        if pairs.iter().any(|(_, kk, _)| kk == k) {
            return Err(parse_err(line_no, format!("duplicate key `{k}`")));
        }
        pairs.push((line_no, k.to_string(), v.to_string()));
    }

    // the scenario fixes the defaults of the grid keys
    let scenario = match pairs.iter().find(|(_, k, _)| k == "scenario") {
        Some((line, _, v)) => ScenarioName::parse(v)
            .ok_or_else(|| parse_err(*line, format!("unknown scenario `{v}`")))?,
        None => ScenarioName::LineSoliton,
    };
    let mut cfg = RunConfig::for_scenario(scenario);

    for (line, key, value) in &pairs {
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| parse_err(*line, format!("`{key}` expects a number, got `{value}`")))
        };
        let count = || -> Result<u64> {
            value.parse::<u64>().map_err(|_| {
                parse_err(*line, format!("`{key}` expects an unsigned integer, got `{value}`"))
            })
        };
        match key.as_str() {
            "scenario" => {}
            "scheme" => {
                cfg.scheme = match value.as_str() {
                    "reduced45" => SchemeKind::Reduced45,
                    "preissman" => SchemeKind::Preissman,
                    _ => return Err(parse_err(*line, format!("unknown scheme `{value}`"))),
                }
            }
            "dx" => cfg.dx = real()?,
            "dy" => cfg.dy = real()?,
            "dt" => cfg.dt = real()?,
            "t_end" => cfg.domain.t_end = real()?,
            "domain" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(parse_err(*line, "domain expects x0,x1,y0,y1"));
                }
                let mut v = [0.0; 4];
                for (slot, p) in v.iter_mut().zip(&parts) {
                    *slot = p
                        .parse()
                        .map_err(|_| parse_err(*line, format!("bad domain entry `{p}`")))?;
                }
                cfg.domain.x0 = v[0];
                cfg.domain.x1 = v[1];
                cfg.domain.y0 = v[2];
                cfg.domain.y1 = v[3];
            }
            "sigma" => cfg.sigma = real()?,
            "time_factor" => {
                cfg.time_factor = match value.as_str() {
                    "auto" => TimeFactorChoice::Auto,
                    "1" => TimeFactorChoice::Fixed(1.0),
                    "2" => TimeFactorChoice::Fixed(2.0),
                    _ => return Err(constraint("time_factor", format!("expected auto, 1 or 2, got `{value}`"))),
                }
            }
            "snapshot_every" => cfg.snapshot_every = count()? as usize,
            "tol" => cfg.tol = real()?,
            "max_iters" => cfg.max_iters = count()? as usize,
            "two_soliton_boundary" => {
                cfg.two_soliton_boundary = match value.as_str() {
                    "exact" => TwoSolitonBoundary::Exact,
                    "superposition" => TwoSolitonBoundary::Superposition,
                    _ => {
                        return Err(parse_err(
                            *line,
                            format!("two_soliton_boundary expects exact or superposition, got `{value}`"),
                        ))
                    }
                }
            }
            "seed" => cfg.seed = count()?,
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            _ => return Err(parse_err(*line, format!("unknown key `{key}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Ordered `key=value` record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces an existing key in place, otherwise appends.
    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(n + 1, "expected key=value"))?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn snapshot_name(step: usize) -> String {
    format!("u_k{step:06}.csv")
}

pub fn snapshot_csv(u: &Plane, grid: &GridSpec) -> Result<String> {
    if u.nx != grid.nx || u.ny != grid.ny {
        return Err(Error::GridMismatch("snapshot plane does not match the grid".into()));
    }
    let mut s = String::with_capacity(70 * u.nx * u.ny + 8);
    s.push_str("x,y,u\n");
    for j in 0..u.ny {
        for i in 0..u.nx {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", grid.x(i), grid.y(j), u.get(i, j)));
        }
    }
    Ok(s)
}

pub fn write_snapshot(dir: &Path, step: usize, u: &Plane, grid: &GridSpec) -> Result<PathBuf> {
    let path = dir.join(snapshot_name(step));
    fs::write(&path, snapshot_csv(u, grid)?)?;
    Ok(path)
}

/// Parsed snapshot: node coordinates and the `u` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub u: Plane,
}

/// Reads a snapshot written by [`snapshot_csv`]; the row count per y-value
/// gives `nx`.
pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,y,u")) => {}
        _ => return Err(parse_err(1, "expected header `x,y,u`")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut vals = [0.0; 3];
        for v in vals.iter_mut() {
            let field = it.next().ok_or_else(|| parse_err(n + 1, "expected three fields"))?;
            *v = field
                .parse()
                .map_err(|_| parse_err(n + 1, format!("bad number `{field}`")))?;
        }
        if it.next().is_some() {
            return Err(parse_err(n + 1, "expected three fields"));
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(parse_err(2, "snapshot has no rows"));
    }
    let nx = rows.iter().take_while(|r| r[1] == rows[0][1]).count();
    if rows.len() % nx != 0 {
        return Err(parse_err(rows.len() + 1, "rows do not form a rectangle"));
    }
    let ny = rows.len() / nx;
    let xs: Vec<f64> = rows[..nx].iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = (0..ny).map(|j| rows[j * nx][1]).collect();
    for (idx, r) in rows.iter().enumerate() {
        if r[0] != xs[idx % nx] || r[1] != ys[idx / nx] {
            return Err(parse_err(idx + 2, "coordinates are not y-major"));
        }
    }
    let u = Plane::from_fn(nx, ny, |i, j| rows[j * nx + i][2]);
    Ok(Snapshot { xs, ys, u })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    parse_snapshot(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.scenario, ScenarioName::LineSoliton);
        assert_eq!((cfg.dx, cfg.dy, cfg.dt, cfg.domain.t_end), (0.2, 0.1, 0.01, 10.0));
    }

    #[test]
    fn line_soliton_example_config() {
        let cfg = parse_config("scenario=line_soliton\ndx=0.2\ndy=0.1\ndt=0.01\nt_end=10\ndomain=0,40,0,2").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let g = cfg.grid().unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (201, 21, 1001));
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config("# lump run\n\nscenario = lump  # trailing\nscheme=preissman\n").unwrap();
        assert_eq!(cfg.scenario, ScenarioName::Lump);
        assert_eq!(cfg.scheme, SchemeKind::Preissman);
        assert_eq!((cfg.dx, cfg.dy), (0.1, 0.2));
    }

    #[test]
    fn errors_name_the_line_or_key() {
        assert!(matches!(
            parse_config("dx=-1"),
            Err(Error::Constraint { key, .. }) if key == "dx"
        ));
        assert!(matches!(
            parse_config("dx=0.2\nbogus=1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_config("dx 0.2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_config("time_factor=3"),
            Err(Error::Constraint { key, .. }) if key == "time_factor"
        ));
        assert!(matches!(
            parse_config("snapshot_every=0"),
            Err(Error::Constraint { key, .. }) if key == "snapshot_every"
        ));
        assert!(matches!(
            parse_config("dx=0.3"),
            Err(Error::Constraint { key, .. }) if key == "domain"
        ));
    }

    #[test]
    fn echo_parses_back() {
        let mut cfg = RunConfig::for_scenario(ScenarioName::Lump);
        cfg.time_factor = TimeFactorChoice::Fixed(2.0);
        cfg.seed = 7;
        let text: String = cfg.echo().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = GridSpec::new(-1.0, 0.5, 0.0, 0.1, 0.3, 1.0, 7, 4, 1).unwrap();
        let u = Plane::sample(&g, |x, y| (x * 3.7).sin() * (y + 1e-300).exp() / 3.0);
        let s = parse_snapshot(&snapshot_csv(&u, &g).unwrap()).unwrap();
        assert_eq!(s.u, u);
        assert_eq!(s.xs, (0..7).map(|i| g.x(i)).collect::<Vec<_>>());
        assert_eq!(snapshot_name(12), "u_k000012.csv");
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::new();
        m.set("a", 1.5);
        m.set("b", "x");
        m.set("a", 2.5);
        let back = Manifest::parse(&m.render()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get_f64("a"), Some(2.5));
    }
}
