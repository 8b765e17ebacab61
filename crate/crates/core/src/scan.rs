//! Configuration-driven scans: entropy maps over `(T, T′)` or `(T, J)`, the
//! EBH sweep, the mixed-bath profile, and the detectors run on their output.
//!
//! Configuration is flat `key = value` text. Lines starting with `#` are
//! comments. Unknown keys are rejected.
//!
//! ```text
//! mode = qes_map
//! model.id = ising
//! model.h = 0.5
//! size.N = 8
//! grid.T.min = 0.01
//! grid.T.max = 1
//! grid.T.count = 12
//! grid.T.spacing = log
//! grid.Tp.values = 0.01, 0.1, 1
//! solver.chi = 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::SolverConfig;
use crate::ebh::{self, BqpReport, SweepConfig};
use crate::error::{Error, Result};
use crate::qes;
use crate::spin::{BondHamiltonian, ModelId};
use crate::tn;

pub const DEFAULT_TCP_EPSILON: f64 = 0.01;
pub const DEFAULT_TRENCH_DEPTH: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    QesMap,
    InhoMap,
    BqpSweep,
    MixedBath,
    Trench,
}

impl Mode {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "qes_map" => Mode::QesMap,
            "inho_map" => Mode::InhoMap,
            "bqp_sweep" => Mode::BqpSweep,
            "mixed_bath" => Mode::MixedBath,
            "trench" => Mode::Trench,
            _ => return Err(Error::Config(format!("unknown mode '{s}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// A grid given either by explicit values or by endpoints and a count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let g = Self { values };
        g.validate("grid")?;
        Ok(g)
    }

    pub fn spaced(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("grid count must be positive".into()));
        }
        if count == 1 {
            return Self::new(vec![min]);
        }
        if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
            return Err(Error::Config("log grids need positive endpoints".into()));
        }
        let values = (0..count)
            .map(|i| {
                let x = i as f64 / (count - 1) as f64;
                match spacing {
                    Spacing::Linear => min + x * (max - min),
                    Spacing::Log => (min.ln() + x * (max.ln() - min.ln())).exp(),
                }
            })
            .collect();
        Self::new(values)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config(format!("{name} is empty")));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name} has non-finite values")));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config(format!("{name} is not strictly monotone")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub id: String,
    pub h: f64,
}

impl ModelConfig {
    pub fn bond(&self) -> Result<BondHamiltonian> {
        match self.id.as_str() {
            "ising" => Ok(BondHamiltonian::ising(self.h)),
            "heisenberg1" => Ok(BondHamiltonian::heisenberg1()),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub mode: Mode,
    pub model: ModelConfig,
    pub t_grid: Option<Grid>,
    pub tp_grid: Option<Grid>,
    pub j_grid: Option<Grid>,
    pub n: usize,
    pub n_tot: usize,
    pub tau: f64,
    pub chi: usize,
    pub tol_f: f64,
    pub max_iters: usize,
    pub tp_left: Option<f64>,
    pub tp_right: Option<f64>,
    pub tcp_epsilon: f64,
    pub trench_depth: f64,
    pub jump_threshold: f64,
    pub prefix: String,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            mode: Mode::QesMap,
            model: ModelConfig { id: "ising".into(), h: 0.5 },
            t_grid: None,
            tp_grid: None,
            j_grid: None,
            n: 4,
            n_tot: 12,
            tau: tn::DEFAULT_TAU,
            chi: SolverConfig::default().chi,
            tol_f: SolverConfig::default().tol_f,
            max_iters: SolverConfig::default().max_iters,
            tp_left: None,
            tp_right: None,
            tcp_epsilon: DEFAULT_TCP_EPSILON,
            trench_depth: DEFAULT_TRENCH_DEPTH,
            jump_threshold: ebh::DEFAULT_JUMP_THRESHOLD,
            prefix: "scan".into(),
        }
    }
}

#[derive(Default)]
struct GridKeys {
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    spacing: Option<Spacing>,
    values: Option<Vec<f64>>,
}

impl GridKeys {
    fn build(self, name: &str) -> Result<Option<Grid>> {
        match (self.values, self.min, self.max, self.count) {
            (None, None, None, None) => Ok(None),
            (Some(v), None, None, None) => {
                let g = Grid { values: v };
                g.validate(name)?;
                Ok(Some(g))
            }
            (None, Some(lo), Some(hi), Some(n)) => {
                Grid::spaced(lo, hi, n, self.spacing.unwrap_or(Spacing::Linear)).map(Some)
            }
            _ => Err(Error::Config(format!("{name} needs either values or min, max and count"))),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

impl ScanConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_as(text, None)
    }

    /// Parses with the mode forced, overriding any `mode` key.
    pub fn parse_as(text: &str, forced: Option<Mode>) -> Result<Self> {
        let mut cfg = Self::parse_unchecked(text)?;
        if let Some(m) = forced {
            cfg.mode = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses keys and grids without the per-mode requirements.
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let mut cfg = ScanConfig::default();
        let mut grids: BTreeMap<&'static str, GridKeys> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            if let Some(rest) = key.strip_prefix("grid.") {
                let (axis, field) =
                    rest.split_once('.').ok_or_else(|| Error::Config(format!("unknown key {key}")))?;
                let axis: &'static str = match axis {
                    "T" => "T",
                    "Tp" => "Tp",
                    "J" => "J",
                    _ => return Err(Error::Config(format!("unknown grid axis in {key}"))),
                };
                let g = grids.entry(axis).or_default();
                match field {
                    "min" => g.min = Some(num(key, v)?),
                    "max" => g.max = Some(num(key, v)?),
                    "count" => g.count = Some(num(key, v)?),
                    "spacing" => {
                        g.spacing = Some(match v {
                            "log" => Spacing::Log,
                            "linear" => Spacing::Linear,
                            _ => return Err(Error::Config(format!("{key}: spacing must be log or linear"))),
                        })
                    }
                    "values" => {
                        g.values = Some(v.split(',').map(|x| num(key, x.trim())).collect::<Result<Vec<f64>>>()?)
                    }
                    _ => return Err(Error::Config(format!("unknown key {key}"))),
                }
                continue;
            }
            match key {
                "mode" => cfg.mode = Mode::parse(v)?,
                "model.id" => cfg.model.id = v.to_string(),
                "model.h" => cfg.model.h = num(key, v)?,
                "size.N" => cfg.n = num(key, v)?,
                "size.N_tot" => cfg.n_tot = num(key, v)?,
                "solver.tau" => cfg.tau = num(key, v)?,
                "solver.chi" => cfg.chi = num(key, v)?,
                "solver.tol_f" => cfg.tol_f = num(key, v)?,
                "solver.max_iters" => cfg.max_iters = num(key, v)?,
                "bath.Tp_left" => cfg.tp_left = Some(num(key, v)?),
                "bath.Tp_right" => cfg.tp_right = Some(num(key, v)?),
                "detect.tcp_epsilon" => cfg.tcp_epsilon = num(key, v)?,
                "detect.trench_depth" => cfg.trench_depth = num(key, v)?,
                "detect.jump_threshold" => cfg.jump_threshold = num(key, v)?,
                "output.prefix" => cfg.prefix = v.to_string(),
                _ => return Err(Error::Config(format!("unknown key {key}"))),
            }
        }
        for (axis, g) in grids {
            let name = format!("grid.{axis}");
            let built = g.build(&name)?;
            match axis {
                "T" => cfg.t_grid = built,
                "Tp" => cfg.tp_grid = built,
                _ => cfg.j_grid = built,
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, forced: Option<Mode>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_as(&text, forced)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.bond()?;
        if !(self.tau > 0.0) || self.chi == 0 || self.max_iters == 0 || !(self.tol_f > 0.0) {
            return Err(Error::Config("solver settings must be positive".into()));
        }
        let need = |g: &Option<Grid>, name: &str| -> Result<()> {
            match g {
                Some(g) if g.values.iter().all(|&v| v > 0.0) => Ok(()),
                Some(_) => Err(Error::Config(format!("{name} must be positive"))),
                None => Err(Error::Config(format!("mode {:?} needs {name}", self.mode))),
            }
        };
        match self.mode {
            Mode::QesMap | Mode::Trench => {
                need(&self.t_grid, "grid.T")?;
                need(&self.tp_grid, "grid.Tp")?;
            }
            Mode::InhoMap => {
                need(&self.t_grid, "grid.T")?;
                need(&self.j_grid, "grid.J")?;
                if self.n == 0 || self.n > self.n_tot {
                    return Err(Error::Config(format!("size.N = {} must lie in 1..=size.N_tot", self.n)));
                }
            }
            Mode::BqpSweep => {
                need(&self.tp_grid, "grid.Tp")?;
                if self.tp_grid.as_ref().is_some_and(|g| g.len() < 3) {
                    return Err(Error::Config("grid.Tp needs at least three points for a sweep".into()));
                }
            }
            Mode::MixedBath => {
                need(&self.t_grid, "grid.T")?;
                if !self.tp_left.is_some_and(|t| t > 0.0) || !self.tp_right.is_some_and(|t| t > 0.0) {
                    return Err(Error::Config("mixed_bath needs positive bath.Tp_left and bath.Tp_right".into()));
                }
            }
        }
        if self.n == 0 {
            return Err(Error::Config("size.N must be positive".into()));
        }
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            solver: SolverConfig { chi: self.chi, tol_f: self.tol_f, max_iters: self.max_iters, ..SolverConfig::default() },
            tau: self.tau,
            jump_threshold: self.jump_threshold,
            branch_margin: ebh::DEFAULT_BRANCH_MARGIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "T_prime")]
    TPrime,
    J,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::TPrime => "T_prime",
            Axis::J => "J",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub s_avg: Option<f64>,
    pub sites: Vec<f64>,
    pub reason: Option<String>,
}

/// Bulk entropy on a `(T, x)` grid, `x` being `T′` or `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyMap {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub axis: Axis,
    pub n: usize,
    /// Row-major: `cells[i][j]` at `t[i]`, `x[j]`.
    pub cells: Vec<Vec<MapCell>>,
    /// `T′` actually realized by the Trotter grid, one per `x` for QES maps.
    pub x_effective: Option<Vec<f64>>,
}

impl EntropyMap {
    pub fn s(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i][j].s_avg
    }

    pub fn missing(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.s_avg.is_none()).count()
    }

    pub fn total(&self) -> usize {
        self.t.len() * self.x.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("T,{},S_avg", self.axis.label());
        for k in 1..=self.n {
            let _ = write!(out, ",S_site_{k}");
        }
        out += ",reason\n";
        for (i, &t) in self.t.iter().enumerate() {
            for (j, &x) in self.x.iter().enumerate() {
                let c = &self.cells[i][j];
                out += &ebh::fmt12(t);
                out.push(',');
                out += &ebh::fmt12(x);
                out.push(',');
                if let Some(s) = c.s_avg {
                    out += &ebh::fmt12(s);
                }
                for k in 0..self.n {
                    out.push(',');
                    if let Some(s) = c.sites.get(k) {
                        out += &ebh::fmt12(*s);
                    }
                }
                out.push(',');
                if let Some(r) = &c.reason {
                    out += &r.replace([',', '\n'], ";");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Reads a map written by [`EntropyMap::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[0] != "T" || cols[2] != "S_avg" || cols.last() != Some(&"reason") {
            return Err(Error::Config("not an entropy map CSV".into()));
        }
        let axis = match cols[1] {
            "T_prime" => Axis::TPrime,
            "J" => Axis::J,
            other => return Err(Error::Config(format!("unknown axis column {other}"))),
        };
        let n = cols.len() - 4;
        let mut rows: Vec<(f64, f64, MapCell)> = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Config(format!("row {} has {} fields, expected {}", k + 2, f.len(), cols.len())));
            }
            let t = num::<f64>("T", f[0])?;
            let x = num::<f64>(cols[1], f[1])?;
            let s_avg = if f[2].is_empty() { None } else { Some(num::<f64>("S_avg", f[2])?) };
            let sites = f[3..3 + n].iter().filter(|s| !s.is_empty()).map(|s| num::<f64>("S_site", s)).collect::<Result<_>>()?;
            let reason = (!f[3 + n].is_empty()).then(|| f[3 + n].to_string());
            rows.push((t, x, MapCell { s_avg, sites, reason }));
        }
        let mut t: Vec<f64> = Vec::new();
        let mut x: Vec<f64> = Vec::new();
        for (ti, xi, _) in &rows {
            if !t.contains(ti) {
                t.push(*ti);
            }
            if !x.contains(xi) {
                x.push(*xi);
            }
        }
        if rows.len() != t.len() * x.len() {
            return Err(Error::Config("CSV rows do not form a full grid".into()));
        }
        let mut cells = vec![Vec::with_capacity(x.len()); t.len()];
        for (k, (_, _, c)) in rows.into_iter().enumerate() {
            cells[k / x.len()].push(c);
        }
        Ok(Self { t, x, axis, n, cells, x_effective: None })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcpReport {
    pub s0: f64,
    pub t_c: f64,
    /// Index of `T_C` in the ascending `T` grid.
    pub index: usize,
    pub epsilon: f64,
    /// The `x` column used, always the lowest `T′`.
    pub column: f64,
}

fn ascending(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// Thermal cross-over point along the lowest-`T′` column: the largest grid
/// `T` up to which the entropy stays within `epsilon` of its value at the
/// lowest `(T, T′)` corner.
pub fn detect_tcp(map: &EntropyMap, epsilon: f64) -> Result<TcpReport> {
    if map.axis != Axis::TPrime {
        return Err(Error::Detection("the TCP is defined on a (T, T') map".into()));
    }
    let ts = ascending(&map.t);
    let xs = ascending(&map.x);
    let (i0, j0) = (ts[0], xs[0]);
    let s0 = map.s(i0, j0).ok_or_else(|| Error::Detection("the low-temperature corner is missing".into()))?;
    let mut pick = 0;
    for (rank, &i) in ts.iter().enumerate() {
        match map.s(i, j0) {
            Some(s) if (s - s0).abs() < epsilon => pick = rank,
            _ => break,
        }
    }
    Ok(TcpReport { s0, t_c: map.t[ts[pick]], index: pick, epsilon, column: map.x[j0] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrenchRow {
    pub t: f64,
    pub flagged: bool,
    pub t_prime_min: Option<f64>,
    pub depth: f64,
    /// The minimum lies at `T′ > T`.
    pub above_diagonal: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrenchReport {
    pub threshold: f64,
    pub rows: Vec<TrenchRow>,
}

impl TrenchReport {
    pub fn flagged(&self) -> impl Iterator<Item = &TrenchRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn any(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Deepest strict interior minimum of `s` against the larger of its two
/// flanking maxima' minimum, as `(index, depth)`.
pub fn deepest_interior_minimum(s: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in 1..s.len().saturating_sub(1) {
        if s[i] < s[i - 1] && s[i] < s[i + 1] {
            let left = s[..i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let right = s[i + 1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let depth = left.min(right) - s[i];
            if best.is_none_or(|(_, d)| depth > d) {
                best = Some((i, depth));
            }
        }
    }
    best
}

/// Entropy trenches: at each `T`, an interior minimum of `S(T′)` deeper than
/// `threshold`. Rows with missing points are scanned over the points present.
pub fn detect_trench(map: &EntropyMap, threshold: f64) -> TrenchReport {
    let xs = ascending(&map.x);
    let rows = (0..map.t.len())
        .map(|i| {
            let present: Vec<(f64, f64)> = xs.iter().filter_map(|&j| map.s(i, j).map(|s| (map.x[j], s))).collect();
            let s: Vec<f64> = present.iter().map(|p| p.1).collect();
            match deepest_interior_minimum(&s) {
                Some((k, depth)) if depth > threshold => TrenchRow {
                    t: map.t[i],
                    flagged: true,
                    t_prime_min: Some(present[k].0),
                    depth,
                    above_diagonal: Some(present[k].0 > map.t[i]),
                },
                Some((k, depth)) => TrenchRow {
                    t: map.t[i],
                    flagged: false,
                    t_prime_min: Some(present[k].0),
                    depth,
                    above_diagonal: None,
                },
                None => TrenchRow { t: map.t[i], flagged: false, t_prime_min: None, depth: 0.0, above_diagonal: None },
            }
        })
        .collect();
    TrenchReport { threshold, rows }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub model: ModelConfig,
    pub mode: Mode,
    pub n: usize,
    pub n_tot: Option<usize>,
    pub tau: f64,
    pub chi: usize,
    /// Largest relative gap between requested and realized `T′`.
    pub t_prime_deviation: Option<f64>,
    pub tcp_scan: String,
    pub version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub metadata: ScanMetadata,
    pub map: Option<EntropyMap>,
    pub bqp: Option<BqpReport>,
    pub tcp: Option<TcpReport>,
    pub trench: Option<TrenchReport>,
}

fn profile_cell(system: &qes::System, t: f64) -> MapCell {
    match qes::bulk_entropy_profile(system, t) {
        Ok(p) => MapCell { s_avg: Some(p.average), sites: p.sites, reason: None },
        Err(e) => MapCell { s_avg: None, sites: Vec::new(), reason: Some(e.to_string()) },
    }
}

fn missing_cells(n: usize, reason: &str) -> Vec<MapCell> {
    vec![MapCell { s_avg: None, sites: Vec::new(), reason: Some(reason.to_string()) }; n]
}

/// Column-major cells to row-major (`T` first).
fn transpose(columns: Vec<Vec<MapCell>>, nt: usize) -> Vec<Vec<MapCell>> {
    let mut rows: Vec<Vec<MapCell>> = (0..nt).map(|_| Vec::with_capacity(columns.len())).collect();
    for col in columns {
        for (i, c) in col.into_iter().enumerate() {
            rows[i].push(c);
        }
    }
    rows
}

fn qes_map(cfg: &ScanConfig, bond: &BondHamiltonian) -> Result<(EntropyMap, Option<BqpReport>)> {
    let tgrid = cfg.t_grid.as_ref().expect("validated").values.clone();
    let xgrid = cfg.tp_grid.as_ref().expect("validated").values.clone();
    let entries = ebh::sweep_ebh(bond, &xgrid, &cfg.sweep_config())?;
    // sweep_ebh orders by decreasing T'; map back onto the configured order
    let mut order: Vec<usize> = (0..xgrid.len()).collect();
    order.sort_by(|&a, &b| xgrid[b].total_cmp(&xgrid[a]));
    let mut by_x: Vec<Option<std::result::Result<ebh::SweepEntry, String>>> = (0..xgrid.len()).map(|_| None).collect();
    let mut decreasing = Vec::with_capacity(xgrid.len());
    let mut points = Vec::with_capacity(xgrid.len());
    for (rank, e) in entries.into_iter().enumerate() {
        decreasing.push(xgrid[order[rank]]);
        points.push(e.as_ref().map(|e| e.point.clone()).map_err(Clone::clone));
        by_x[order[rank]] = Some(e);
    }
    let bqp = if xgrid.len() >= 3 { ebh::bqp_report(&decreasing, points, cfg.jump_threshold).map_err(|e| log::warn!("{e}")).ok() } else { None };
    let x_effective: Vec<f64> = xgrid
        .iter()
        .map(|&t| tn::build_transfer_spec(bond, t, cfg.tau).map(|s| s.t_prime_effective).unwrap_or(f64::NAN))
        .collect();
    let columns: Vec<Vec<MapCell>> = by_x
        .into_par_iter()
        .map(|entry| match entry.expect("every grid point solved") {
            Ok(e) => match qes::assemble_qes(cfg.n, bond, &e.left, &e.right).and_then(|q| q.system()) {
                Ok(sys) => tgrid.iter().map(|&t| profile_cell(&sys, t)).collect(),
                Err(err) => missing_cells(tgrid.len(), &err.to_string()),
            },
            Err(reason) => missing_cells(tgrid.len(), &reason),
        })
        .collect();
    let map = EntropyMap {
        cells: transpose(columns, tgrid.len()),
        t: tgrid,
        x: xgrid,
        axis: Axis::TPrime,
        n: cfg.n,
        x_effective: Some(x_effective),
    };
    Ok((map, bqp))
}

fn inho_map(cfg: &ScanConfig, bond: &BondHamiltonian) -> Result<EntropyMap> {
    let tgrid = cfg.t_grid.as_ref().expect("validated").values.clone();
    let jgrid = cfg.j_grid.as_ref().expect("validated").values.clone();
    // fail fast on a chain that can never fit
    qes::assemble_inhomogeneous(cfg.n_tot, cfg.n, jgrid[0], bond)?;
    let columns: Vec<Vec<MapCell>> = jgrid
        .par_iter()
        .map(|&j| match qes::assemble_inhomogeneous(cfg.n_tot, cfg.n, j, bond).and_then(|s| s.system()) {
            Ok(sys) => tgrid.iter().map(|&t| profile_cell(&sys, t)).collect(),
            Err(err) => missing_cells(tgrid.len(), &err.to_string()),
        })
        .collect();
    Ok(EntropyMap { cells: transpose(columns, tgrid.len()), t: tgrid, x: jgrid, axis: Axis::J, n: cfg.n, x_effective: None })
}

/// Single-point EBH pair from a cold start.
pub fn ebh_entry(bond: &BondHamiltonian, t_prime: f64, cfg: &SweepConfig) -> Result<ebh::SweepEntry> {
    let r = ebh::sweep_ebh(bond, &[t_prime], cfg)?.pop().expect("one point");
    r.map_err(Error::ScanFailure)
}

fn mixed_bath(cfg: &ScanConfig, bond: &BondHamiltonian) -> Result<EntropyMap> {
    let tgrid = cfg.t_grid.as_ref().expect("validated").values.clone();
    let sc = cfg.sweep_config();
    let (tl, tr) = (cfg.tp_left.expect("validated"), cfg.tp_right.expect("validated"));
    let (left, right) = match rayon::join(|| ebh_entry(bond, tl, &sc), || ebh_entry(bond, tr, &sc)) {
        (Ok(a), Ok(b)) => (a.left, b.right),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let sys = qes::assemble_qes(cfg.n, bond, &left, &right)?.system()?;
    let column: Vec<MapCell> = tgrid.par_iter().map(|&t| profile_cell(&sys, t)).collect();
    Ok(EntropyMap { cells: transpose(vec![column], tgrid.len()), t: tgrid, x: vec![tl], axis: Axis::TPrime, n: cfg.n, x_effective: None })
}

/// Monotone non-increasing within `tol` from the first to the last entry.
pub fn is_monotone_non_increasing(s: &[f64], tol: f64) -> bool {
    s.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Runs the configured scan and its detectors.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate()?;
    let bond = cfg.model.bond()?;
    let metadata = ScanMetadata {
        model: cfg.model.clone(),
        mode: cfg.mode,
        n: cfg.n,
        n_tot: (cfg.mode == Mode::InhoMap).then_some(cfg.n_tot),
        tau: cfg.tau,
        chi: cfg.chi,
        t_prime_deviation: None,
        tcp_scan: "column at the lowest T'".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut out = ScanOutcome { metadata, map: None, bqp: None, tcp: None, trench: None };
    match cfg.mode {
        Mode::BqpSweep => {
            let grid = &cfg.tp_grid.as_ref().expect("validated").values;
            out.bqp = Some(ebh::sweep_and_detect_bqp(&bond, grid, &cfg.sweep_config())?);
        }
        Mode::QesMap | Mode::Trench => {
            let (map, bqp) = qes_map(cfg, &bond)?;
            out.bqp = bqp;
            out.metadata.t_prime_deviation = map.x_effective.as_ref().map(|eff| {
                eff.iter().zip(&map.x).map(|(e, x)| ((e - x) / x).abs()).fold(0.0, f64::max)
            });
            out.tcp = detect_tcp(&map, cfg.tcp_epsilon).ok();
            out.trench = Some(detect_trench(&map, cfg.trench_depth));
            out.map = Some(map);
        }
        Mode::InhoMap => out.map = Some(inho_map(cfg, &bond)?),
        Mode::MixedBath => out.map = Some(mixed_bath(cfg, &bond)?),
    }
    if let Some(map) = &out.map {
        let missing = map.missing();
        if missing as f64 > ebh::MAX_MISSING_FRACTION * map.total() as f64 {
            return Err(Error::ScanFailure(format!("{missing} of {} grid points failed", map.total())));
        }
    }
    Ok(out)
}

/// Writes `<prefix>.csv` (map or BQP curves) and `<prefix>.json` into `dir`.
pub fn emit_outputs(outcome: &ScanOutcome, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    match (&outcome.map, &outcome.bqp) {
        (Some(m), b) => {
            files.push((format!("{prefix}.csv"), m.to_csv()));
            if let Some(b) = b {
                files.push((format!("{prefix}_bqp.csv"), b.to_csv()));
            }
        }
        (None, Some(b)) => files.push((format!("{prefix}.csv"), b.to_csv())),
        _ => {}
    }
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
    }
    let json = serde_json::to_string_pretty(outcome).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let p = dir.join(format!("{prefix}.json"));
    std::fs::write(&p, json + "\n")?;
    written.push(p);
    Ok(written)
}

/// Detector output for a CSV written earlier.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Redetection {
    pub tcp: Option<TcpReport>,
    pub trench: Option<TrenchReport>,
    pub bqp: Option<ebh::JumpDetection>,
    pub inv_t_prime_q: Option<f64>,
}

/// Re-runs the detectors on a map CSV or a BQP CSV.
pub fn redetect(text: &str, tcp_epsilon: f64, trench_depth: f64, jump_threshold: f64) -> Result<Redetection> {
    let header = text.lines().next().unwrap_or_default();
    if header.starts_with("T_prime,inv_T_prime,") {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split(',').map(|x| num::<f64>("BQP CSV", x)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        if rows.iter().any(|r| r.len() < 6) {
            return Err(Error::Config("BQP CSV rows need at least six columns".into()));
        }
        let curves: Vec<Vec<f64>> = (2..6).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        let det = ebh::detect_jump(&curves, jump_threshold);
        let inv = det.index.map(|i| rows[i][1]);
        return Ok(Redetection { tcp: None, trench: None, bqp: Some(det), inv_t_prime_q: inv });
    }
    let map = EntropyMap::from_csv(text)?;
    if map.axis != Axis::TPrime {
        return Ok(Redetection { tcp: None, trench: None, bqp: None, inv_t_prime_q: None });
    }
    Ok(Redetection {
        tcp: detect_tcp(&map, tcp_epsilon).ok(),
        trench: Some(detect_trench(&map, trench_depth)),
        bqp: None,
        inv_t_prime_q: None,
    })
}

/// Model id string for a bond, as used in configuration files.
pub fn model_key(model: &ModelId) -> &'static str {
    match model {
        ModelId::Ising { .. } => "ising",
        ModelId::Heisenberg1 => "heisenberg1",
        ModelId::Custom => "custom",
    }
}
