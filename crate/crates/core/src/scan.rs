//! Grid scans, verification suites and CSV/SVG output.
//!
//! A scan evaluates one predicate or bound over a rectangular grid and keeps,
//! for every cell, the numbers the verdict was derived from. Cells fail
//! independently: a numeric error is stored in the cell and the scan goes on.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::equilateral::{self, EquilateralNorms};
use crate::error::{Error, Result};
use crate::fem::{self, ConvergenceOptions, Grading};
use crate::geometry::{equilateral_half_base, TriangleParams};
use crate::trial::{self, STRICT_MARGIN};

/// Margin factor applied to FEM error estimates in every FEM-backed verdict.
pub const FEM_MARGIN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanMode {
    GCurve,
    TransplantRegion,
    ConstantRegion,
    ConditionRegion,
    SectorRegion,
    FemConjecture,
    LocalOptimality,
    PerimeterVariant,
    Monotonicity,
}

impl ScanMode {
    pub const ALL: [ScanMode; 9] = [
        ScanMode::GCurve,
        ScanMode::TransplantRegion,
        ScanMode::ConstantRegion,
        ScanMode::ConditionRegion,
        ScanMode::SectorRegion,
        ScanMode::FemConjecture,
        ScanMode::LocalOptimality,
        ScanMode::PerimeterVariant,
        ScanMode::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScanMode::GCurve => "g-curve",
            ScanMode::TransplantRegion => "transplant-region",
            ScanMode::ConstantRegion => "constant-region",
            ScanMode::ConditionRegion => "condition-region",
            ScanMode::SectorRegion => "sector-region",
            ScanMode::FemConjecture => "fem-conjecture",
            ScanMode::LocalOptimality => "local-optimality",
            ScanMode::PerimeterVariant => "perimeter-variant",
            ScanMode::Monotonicity => "monotonicity",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            ScanMode::GCurve => &["t", "g", "alpha_sqrt_area"],
            ScanMode::TransplantRegion => &["alpha", "a", "c", "delta", "bound", "lambda0"],
            ScanMode::ConstantRegion => &["alpha", "a", "c", "f2", "lambda0_over_alpha", "bound", "lambda0"],
            ScanMode::ConditionRegion => &["alpha", "a", "c", "lambda0_lower", "sector_closed", "lambda0"],
            ScanMode::SectorRegion => &["alpha", "a", "c", "rayleigh", "sector_closed", "lambda0"],
            ScanMode::FemConjecture => &["alpha", "a", "c", "lambda_fem", "fem_err", "lambda0", "margin", "fem_level", "fem_warning"],
            ScanMode::LocalOptimality => &[
                "alpha", "grad_a", "grad_c", "hess_aa", "hess_cc", "hess_ac", "bound_aa", "bound_cc", "quadratic_c",
                "threshold",
            ],
            ScanMode::PerimeterVariant => &[
                "alpha", "a", "c", "gamma", "lambda_scaled", "lambda_scaled_eq", "lambda0", "margin_shape",
                "margin_dilation", "fem_err",
            ],
            ScanMode::Monotonicity => &["alpha", "S", "lambda0", "lambda_fem", "fem_err"],
        }
    }

    /// Columns used as SVG axes: `(x, y)`, and an optional panel key.
    fn plot_axes(self) -> (usize, Option<usize>, Option<usize>) {
        match self {
            ScanMode::GCurve => (0, None, None),
            ScanMode::TransplantRegion
            | ScanMode::ConstantRegion
            | ScanMode::ConditionRegion
            | ScanMode::SectorRegion => (1, Some(0), None),
            ScanMode::FemConjecture => (1, Some(2), Some(0)),
            ScanMode::LocalOptimality => (0, None, None),
            ScanMode::PerimeterVariant => (1, Some(2), None),
            ScanMode::Monotonicity => (1, Some(0), None),
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScanMode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown mode '{s}'")))
    }
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Range { lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }

    fn validate(&self, key: &str) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() || self.n < 2 {
            return Err(Error::Config(format!(
                "{key} needs finite lo < hi and n >= 2, got ({}, {}, {})",
                self.lo, self.hi, self.n
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.lo, self.hi, self.n)
    }
}

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("range must be 'lo, hi, n', got '{s}'")));
        }
        Ok(Range {
            lo: parse_f64(parts[0])?,
            hi: parse_f64(parts[1])?,
            n: parts[2]
                .parse()
                .map_err(|_| Error::Config(format!("bad point count '{}'", parts[2])))?,
        })
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("not a number: '{s}'")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("not a boolean: '{other}'"))),
    }
}

/// Scan configuration; the file format is one `key = value` per line with
/// the keys listed in [`ScanConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub mode: ScanMode,
    pub alpha_range: Range,
    /// Explicit α values; replaces `alpha_range` where a mode takes a list.
    pub alpha_list: Vec<f64>,
    pub a_range: Range,
    /// Half-base for `(α, a)` grids; `None` means the equilateral `c₀`.
    pub c_fixed: Option<f64>,
    pub c_range: Range,
    /// Area `S`.
    pub area: f64,
    pub s_range: Range,
    pub t_range: Range,
    pub fem_rel_tol: f64,
    /// Also run the FEM oracle on certified cells of region modes.
    pub with_fem: bool,
    pub output_path: Option<PathBuf>,
    pub emit_svg: bool,
    pub anchor_left: bool,
    pub workers: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            mode: ScanMode::TransplantRegion,
            alpha_range: Range::new(-10.0, -0.01, 41),
            alpha_list: Vec::new(),
            a_range: Range::new(0.0, 5.0, 41),
            c_fixed: None,
            c_range: Range::new(0.2, 3.0, 11),
            area: 1.0 / 3f64.sqrt(),
            s_range: Range::new(0.5, 2.0, 4),
            t_range: Range::new(0.001, 0.999, 999),
            fem_rel_tol: 1e-6,
            with_fem: false,
            output_path: None,
            emit_svg: false,
            anchor_left: false,
            workers: None,
        }
    }
}

impl ScanConfig {
    pub const KEYS: [&'static str; 15] = [
        "mode",
        "alpha_range",
        "alpha_list",
        "a_range",
        "c_fixed",
        "c_range",
        "S",
        "s_range",
        "t_range",
        "fem_rel_tol",
        "with_fem",
        "output_path",
        "emit_svg",
        "anchor_left",
        "workers",
    ];

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScanConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => self.mode = value.parse()?,
            "alpha_range" => self.alpha_range = value.parse()?,
            "alpha_list" => {
                self.alpha_list = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(parse_f64)
                    .collect::<Result<_>>()?
            }
            "a_range" => self.a_range = value.parse()?,
            "c_fixed" => {
                self.c_fixed = match value {
                    "" | "auto" | "none" => None,
                    v => Some(parse_f64(v)?),
                }
            }
            "c_range" => self.c_range = value.parse()?,
            "S" => self.area = parse_f64(value)?,
            "s_range" => self.s_range = value.parse()?,
            "t_range" => self.t_range = value.parse()?,
            "fem_rel_tol" => self.fem_rel_tol = parse_f64(value)?,
            "with_fem" => self.with_fem = parse_bool(value)?,
            "output_path" => self.output_path = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "emit_svg" => self.emit_svg = parse_bool(value)?,
            "anchor_left" => self.anchor_left = parse_bool(value)?,
            "workers" => {
                self.workers = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad worker count '{value}'")))?,
                )
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha_range.validate("alpha_range")?;
        self.a_range.validate("a_range")?;
        self.c_range.validate("c_range")?;
        self.s_range.validate("s_range")?;
        self.t_range.validate("t_range")?;
        if !(self.alpha_range.hi < 0.0) {
            return Err(Error::Config("alpha_range must be strictly negative".into()));
        }
        if self.alpha_list.iter().any(|&a| !(a < 0.0) || !a.is_finite()) {
            return Err(Error::Config("alpha_list entries must be finite and negative".into()));
        }
        if !(self.area > 0.0) || !self.area.is_finite() {
            return Err(Error::Config(format!("S must be positive, got {}", self.area)));
        }
        if matches!(self.c_fixed, Some(c) if !(c > 0.0)) || !(self.c_range.lo > 0.0) {
            return Err(Error::Config("half-base values must be positive".into()));
        }
        if !(self.s_range.lo > 0.0) {
            return Err(Error::Config("s_range must be positive".into()));
        }
        if !(self.t_range.lo > 0.0 && self.t_range.hi < 1.0) {
            return Err(Error::Config("t_range must lie inside (0, 1)".into()));
        }
        if !(self.fem_rel_tol >= 1e-8) {
            return Err(Error::Config("fem_rel_tol must be at least 1e-8".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }

    /// Half-base used by `(α, a)` grids.
    pub fn c_value(&self) -> f64 {
        self.c_fixed.unwrap_or_else(|| equilateral_half_base(self.area))
    }

    fn alphas(&self) -> Vec<f64> {
        if self.alpha_list.is_empty() {
            self.alpha_range.values()
        } else {
            self.alpha_list.clone()
        }
    }

    fn fem_options(&self) -> ConvergenceOptions {
        ConvergenceOptions {
            rel_tol: self.fem_rel_tol,
            ..ConvergenceOptions::default()
        }
    }

    /// `key = value` lines reproducing this configuration.
    pub fn echo(&self) -> Vec<String> {
        let list = self
            .alpha_list
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        vec![
            format!("mode = {}", self.mode),
            format!("alpha_range = {}", self.alpha_range),
            format!("alpha_list = {list}"),
            format!("a_range = {}", self.a_range),
            format!("c_fixed = {}", self.c_fixed.map_or("auto".to_string(), |c| c.to_string())),
            format!("c_range = {}", self.c_range),
            format!("S = {}", self.area),
            format!("s_range = {}", self.s_range),
            format!("t_range = {}", self.t_range),
            format!("fem_rel_tol = {}", self.fem_rel_tol),
            format!("with_fem = {}", self.with_fem),
            format!(
                "output_path = {}",
                self.output_path.as_ref().map_or(String::new(), |p| p.display().to_string())
            ),
            format!("emit_svg = {}", self.emit_svg),
            format!("anchor_left = {}", self.anchor_left),
        ]
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    /// `None` when no claim is made or the cell failed.
    pub verdict: Option<bool>,
    pub error: Option<String>,
}

impl Row {
    fn ok(values: Vec<f64>, verdict: Option<bool>) -> Self {
        Row {
            values,
            verdict,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub mode: ScanMode,
    /// Provenance lines written as `# ...` above the CSV header.
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl ScanResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        self.column(name).map(|k| self.rows[row].values[k])
    }

    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Runs the configured scan and writes CSV (and SVG) when `output_path` is set.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let result = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?
            .install(|| compute(cfg)),
        None => compute(cfg),
    }?;
    if let Some(path) = &cfg.output_path {
        emit_csv(&result, path)?;
        if cfg.emit_svg {
            emit_svg(&result, &path.with_extension("svg"))?;
        }
    }
    Ok(result)
}

fn compute(cfg: &ScanConfig) -> Result<ScanResult> {
    let columns = cfg.mode.columns();
    let rows = match cfg.mode {
        ScanMode::GCurve => g_curve(cfg),
        ScanMode::TransplantRegion
        | ScanMode::ConstantRegion
        | ScanMode::ConditionRegion
        | ScanMode::SectorRegion => region(cfg),
        ScanMode::FemConjecture => fem_conjecture(cfg),
        ScanMode::LocalOptimality => local_rows(cfg),
        ScanMode::PerimeterVariant => perimeter_rows(cfg),
        ScanMode::Monotonicity => monotonicity_rows(cfg),
    };
    let mut columns: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
    if cfg.with_fem && is_region(cfg.mode) {
        columns.extend(["lambda_fem", "fem_err", "fem_confirms"].map(String::from));
    }
    let mut header = vec![format!("robin-tri {}", env!("CARGO_PKG_VERSION"))];
    header.extend(cfg.echo());
    if cfg.mode == ScanMode::SectorRegion {
        header.extend(sector_a_star(cfg, &rows));
    }
    Ok(ScanResult {
        mode: cfg.mode,
        header,
        columns,
        rows,
    })
}

/// Per α, the smallest grid `a` from which every larger `a` is certified.
fn sector_a_star(cfg: &ScanConfig, rows: &[Row]) -> Vec<String> {
    rows.chunks(cfg.a_range.n)
        .map(|block| {
            let alpha = block[0].values[0];
            let tail = block.iter().rev().take_while(|r| r.verdict == Some(true)).count();
            if tail == 0 {
                format!("a_star alpha={alpha} none")
            } else {
                format!("a_star alpha={alpha} {}", block[block.len() - tail].values[1])
            }
        })
        .collect()
}

fn is_region(mode: ScanMode) -> bool {
    matches!(
        mode,
        ScanMode::TransplantRegion | ScanMode::ConstantRegion | ScanMode::ConditionRegion | ScanMode::SectorRegion
    )
}

fn isolate(axes: &[f64], width: usize, cell: Result<Row>) -> Row {
    cell.unwrap_or_else(|e| {
        let mut values = axes.to_vec();
        values.resize(width, f64::NAN);
        Row {
            values,
            verdict: None,
            error: Some(e.to_string()),
        }
    })
}

fn g_curve(cfg: &ScanConfig) -> Vec<Row> {
    let sqrt_h = (3f64.sqrt()).sqrt();
    cfg.t_range
        .values()
        .into_iter()
        .map(|t| {
            isolate(&[t], 3, (|| {
                let g = equilateral::g_threshold(t)?;
                // α√S for which the ground state has this t
                let alpha_rs = -t * (t.atanh() + (0.5 * t).atanh()) / sqrt_h;
                Ok(Row::ok(vec![t, g, alpha_rs], Some(g < 0.0)))
            })())
        })
        .collect()
}

struct AlphaData {
    lambda0: f64,
    norms: Result<EquilateralNorms>,
}

fn alpha_data(alpha: f64, area: f64, need_norms: bool) -> Result<AlphaData> {
    let sol = equilateral::solve_equilateral(alpha, area)?;
    let norms = if need_norms {
        equilateral::closed_form_norms(&sol)
    } else {
        Err(Error::Domain("not requested".into()))
    };
    Ok(AlphaData {
        lambda0: sol.lambda0,
        norms,
    })
}

fn region(cfg: &ScanConfig) -> Vec<Row> {
    let alphas = cfg.alpha_range.values();
    let a_values = cfg.a_range.values();
    let c = cfg.c_value();
    let need_norms = cfg.mode == ScanMode::TransplantRegion;
    let per_alpha: Vec<Result<AlphaData>> = alphas
        .par_iter()
        .map(|&alpha| alpha_data(alpha, cfg.area, need_norms))
        .collect();
    let cells: Vec<(usize, f64)> = (0..alphas.len())
        .flat_map(|i| a_values.iter().map(move |&a| (i, a)))
        .collect();
    let width = cfg.mode.columns().len() + if cfg.with_fem { 3 } else { 0 };
    cells
        .par_iter()
        .map(|&(i, a)| {
            let alpha = alphas[i];
            let cell = (|| {
                let data = per_alpha[i].as_ref().map_err(Clone::clone)?;
                let mut row = region_cell(cfg, alpha, a, c, data)?;
                if cfg.with_fem {
                    append_fem(cfg, alpha, a, c, data.lambda0, &mut row);
                }
                Ok(row)
            })();
            isolate(&[alpha, a, c], width, cell)
        })
        .collect()
}

fn region_cell(cfg: &ScanConfig, alpha: f64, a: f64, c: f64, data: &AlphaData) -> Result<Row> {
    let tri = TriangleParams::new(a, c, cfg.area)?;
    let lambda0 = data.lambda0;
    let margin = STRICT_MARGIN * lambda0.abs().max(1.0);
    Ok(match cfg.mode {
        ScanMode::TransplantRegion => {
            let norms = data.norms.as_ref().map_err(Clone::clone)?;
            let delta = trial::delta_from_norms(alpha, &tri, norms.psi_d1_sq(), norms.psi_boundary_sq());
            Row::ok(vec![alpha, a, c, delta, lambda0 + delta, lambda0], Some(delta < -margin))
        }
        ScanMode::ConstantRegion => {
            let cb = trial::constant_bound_with(alpha, &tri, lambda0);
            Row::ok(vec![alpha, a, c, cb.f2, lambda0 / alpha, cb.bound, lambda0], Some(cb.verdict))
        }
        ScanMode::ConditionRegion => {
            let geom = tri.geometry();
            let verdict = trial::sector_condition(alpha, &geom, cfg.anchor_left)?;
            let anchor = trial::sector_anchor(&geom, cfg.anchor_left);
            let rhs = trial::sector_closed_bound(alpha, anchor.theta_star, anchor.l_prime);
            let lhs = trial::lambda0_lower_bound(alpha, cfg.area)?;
            Row::ok(vec![alpha, a, c, lhs, rhs, lambda0], Some(verdict))
        }
        ScanMode::SectorRegion => {
            let sb = trial::sector_bound(alpha, &tri.geometry(), cfg.anchor_left)?;
            let closed = sb.closed_upper.unwrap_or(f64::NAN);
            Row::ok(
                vec![alpha, a, c, sb.rayleigh_upper, closed, lambda0],
                Some(sb.rayleigh_upper < lambda0 - margin),
            )
        }
        _ => unreachable!("not a region mode"),
    })
}

fn append_fem(cfg: &ScanConfig, alpha: f64, a: f64, c: f64, lambda0: f64, row: &mut Row) {
    if row.verdict != Some(true) {
        row.values.extend([f64::NAN; 3]);
        return;
    }
    match TriangleParams::new(a, c, cfg.area)
        .and_then(|t| fem::eigenvalue_converged_with(&t.geometry(), alpha, &cfg.fem_options()))
    {
        Ok(r) => {
            let ok = r.lambda1 <= lambda0 - FEM_MARGIN_FACTOR * r.residual;
            row.values.extend([r.lambda1, r.residual, if ok { 1.0 } else { 0.0 }]);
        }
        Err(e) => {
            row.values.extend([f64::NAN; 3]);
            row.error = Some(format!("fem: {e}"));
        }
    }
}

/// FEM eigenvalue with the margin `FEM_MARGIN_FACTOR·err + 1e-8|λ₀|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjectureCell {
    pub lambda_fem: f64,
    pub fem_err: f64,
    pub lambda0: f64,
    pub tolerance: f64,
    pub level: u32,
    pub warning: bool,
}

impl ConjectureCell {
    pub fn holds(&self) -> bool {
        self.lambda_fem <= self.lambda0 + self.tolerance
    }
}

pub fn conjecture_cell(alpha: f64, a: f64, c: f64, area: f64, opts: &ConvergenceOptions) -> Result<ConjectureCell> {
    let lambda0 = equilateral::lambda0(alpha, area)?;
    let r = fem::eigenvalue_converged_with(&TriangleParams::new(a, c, area)?.geometry(), alpha, opts)?;
    Ok(ConjectureCell {
        lambda_fem: r.lambda1,
        fem_err: r.residual,
        lambda0,
        tolerance: FEM_MARGIN_FACTOR * r.residual + 1e-8 * lambda0.abs(),
        level: r.level,
        warning: r.warning,
    })
}

fn fem_conjecture(cfg: &ScanConfig) -> Vec<Row> {
    let alphas = if cfg.alpha_list.is_empty() { vec![-0.5, -2.0, -8.0] } else { cfg.alpha_list.clone() };
    let a_values = cfg.a_range.values();
    let c_values = cfg.c_range.values();
    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &c in &c_values {
            for &a in &a_values {
                cells.push((alpha, a, c));
            }
        }
    }
    let opts = cfg.fem_options();
    cells
        .par_iter()
        .map(|&(alpha, a, c)| {
            isolate(&[alpha, a, c], 9, conjecture_cell(alpha, a, c, cfg.area, &opts).map(|k| {
                Row::ok(
                    vec![
                        alpha,
                        a,
                        c,
                        k.lambda_fem,
                        k.fem_err,
                        k.lambda0,
                        k.lambda_fem - k.lambda0,
                        k.level as f64,
                        if k.warning { 1.0 } else { 0.0 },
                    ],
                    Some(k.holds()),
                )
            }))
        })
        .collect()
}

/// Local-optimality check at one α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalReport {
    pub alpha: f64,
    pub derivatives: fem::FdDerivatives,
    pub bounds: equilateral::HessianBounds,
    /// `C` in `λ_{a,c} ≤ λ₀ - C(a² + (c-c₀)²)` from the fitted quadratic
    /// model: half the smallest eigenvalue of the negated Hessian.
    pub quadratic_c: f64,
    /// `-0.92/√S`.
    pub threshold: f64,
    /// Tolerance used for the bound comparisons.
    pub tolerance: f64,
}

impl LocalReport {
    pub fn hessian_negative_definite(&self) -> bool {
        let d = &self.derivatives;
        d.hess_aa < 0.0 && d.hess_aa * d.hess_cc - d.hess_ac * d.hess_ac > 0.0
    }

    pub fn within_bounds(&self) -> bool {
        self.derivatives.hess_aa <= self.bounds.bound_aa + self.tolerance
            && self.derivatives.hess_cc <= self.bounds.bound_cc + self.tolerance
    }

    /// `Some` only inside `[threshold, 0)`, where the local-maximum claim applies.
    pub fn claim(&self) -> Option<bool> {
        (self.alpha >= self.threshold).then(|| self.hessian_negative_definite() && self.within_bounds())
    }
}

pub fn verify_local(alphas: &[f64], area: f64) -> Result<Vec<LocalReport>> {
    alphas.iter().map(|&alpha| local_report(alpha, area)).collect()
}

fn local_report(alpha: f64, area: f64) -> Result<LocalReport> {
    let derivatives = fem::fd_derivatives_at_equilateral(alpha, area, None)?;
    let bounds = equilateral::hessian_upper_bounds(alpha, area)?;
    let (haa, hcc, hac) = (derivatives.hess_aa, derivatives.hess_cc, derivatives.hess_ac);
    let mean = 0.5 * (haa + hcc);
    let radius = (0.25 * (haa - hcc).powi(2) + hac * hac).sqrt();
    let c0 = equilateral_half_base(area);
    Ok(LocalReport {
        alpha,
        derivatives,
        bounds,
        quadratic_c: -0.5 * (mean + radius),
        threshold: equilateral::local_optimality_alpha_bound(area)?.alpha_simple,
        tolerance: 1e-3 * bounds.lambda0.abs() / (c0 * c0),
    })
}

fn local_rows(cfg: &ScanConfig) -> Vec<Row> {
    cfg.alphas()
        .par_iter()
        .map(|&alpha| {
            isolate(&[alpha], 10, local_report(alpha, cfg.area).map(|r| {
                let d = r.derivatives;
                Row::ok(
                    vec![
                        alpha,
                        d.grad_a,
                        d.grad_c,
                        d.hess_aa,
                        d.hess_cc,
                        d.hess_ac,
                        r.bounds.bound_aa,
                        r.bounds.bound_cc,
                        r.quadratic_c,
                        r.threshold,
                    ],
                    r.claim(),
                )
            }))
        })
        .collect()
}

/// Fixed-perimeter comparison for one `(a, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterCell {
    pub a: f64,
    pub c: f64,
    pub gamma: f64,
    /// FEM `λ(γΩ_{a,c})`.
    pub lambda_scaled: f64,
    /// FEM `λ(γΩ₀)`.
    pub lambda_scaled_eq: f64,
    pub lambda0: f64,
    /// Larger of the two FEM error estimates.
    pub fem_err: f64,
}

impl PerimeterCell {
    /// `λ(γΩ_{a,c}) - λ(γΩ₀)`.
    pub fn margin_shape(&self) -> f64 {
        self.lambda_scaled - self.lambda_scaled_eq
    }

    /// `λ(γΩ₀) - λ(Ω₀)`.
    pub fn margin_dilation(&self) -> f64 {
        self.lambda_scaled_eq - self.lambda0
    }

    /// Both links strictly negative beyond the FEM margin.
    pub fn chain_holds(&self) -> bool {
        let tol = FEM_MARGIN_FACTOR * self.fem_err;
        self.margin_shape() < -tol && self.margin_dilation() < -tol
    }
}

pub fn perimeter_cell(alpha: f64, a: f64, c: f64, area: f64, opts: &ConvergenceOptions) -> Result<PerimeterCell> {
    let tri = TriangleParams::new(a, c, area)?;
    let geom = tri.geometry();
    let gamma = geom.perimeter_normalizer();
    let lambda0 = equilateral::lambda0(alpha, area)?;
    let eq = TriangleParams::equilateral(area)?.dilated(gamma)?.geometry();
    let opts = ConvergenceOptions {
        grading: Grading::Uniform,
        ..*opts
    };
    let scaled_eq = fem::eigenvalue_converged_with(&eq, alpha, &opts)?;
    let (lambda_scaled, err) = if tri.deviation_from_equilateral() == 0.0 {
        (scaled_eq.lambda1, scaled_eq.residual)
    } else {
        let r = fem::eigenvalue_converged_with(&tri.dilated(gamma)?.geometry(), alpha, &opts)?;
        (r.lambda1, r.residual)
    };
    Ok(PerimeterCell {
        a,
        c,
        gamma,
        lambda_scaled,
        lambda_scaled_eq: scaled_eq.lambda1,
        lambda0,
        fem_err: err.max(scaled_eq.residual),
    })
}

pub fn verify_perimeter_variant(
    alpha: f64,
    area: f64,
    a_values: &[f64],
    c_values: &[f64],
    opts: &ConvergenceOptions,
) -> Vec<Result<PerimeterCell>> {
    let cells: Vec<(f64, f64)> = c_values
        .iter()
        .flat_map(|&c| a_values.iter().map(move |&a| (a, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(a, c)| perimeter_cell(alpha, a, c, area, opts))
        .collect()
}

fn perimeter_rows(cfg: &ScanConfig) -> Vec<Row> {
    let alpha = cfg.alphas()[0];
    let a_values = cfg.a_range.values();
    let c_values = cfg.c_range.values();
    let cells = verify_perimeter_variant(alpha, cfg.area, &a_values, &c_values, &cfg.fem_options());
    let coords = c_values.iter().flat_map(|&c| a_values.iter().map(move |&a| (a, c)));
    coords
        .zip(cells)
        .map(|((a, c), cell)| {
            isolate(&[alpha, a, c], 10, cell.map(|k| {
                Row::ok(
                    vec![
                        alpha,
                        a,
                        c,
                        k.gamma,
                        k.lambda_scaled,
                        k.lambda_scaled_eq,
                        k.lambda0,
                        k.margin_shape(),
                        k.margin_dilation(),
                        k.fem_err,
                    ],
                    Some(k.chain_holds()),
                )
            }))
        })
        .collect()
}

/// `λ₀` (and optionally FEM) of the equilateral triangle over increasing areas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneCell {
    pub area: f64,
    pub lambda0: f64,
    pub lambda_fem: Option<(f64, f64)>,
}

pub fn monotonicity(alpha: f64, areas: &[f64], with_fem: bool, opts: &ConvergenceOptions) -> Result<Vec<MonotoneCell>> {
    areas
        .par_iter()
        .map(|&area| {
            let lambda0 = equilateral::lambda0(alpha, area)?;
            let lambda_fem = if with_fem {
                let tri = TriangleParams::equilateral(area)?.geometry();
                let r = fem::eigenvalue_converged_with(&tri, alpha, opts)?;
                Some((r.lambda1, r.residual))
            } else {
                None
            };
            Ok(MonotoneCell { area, lambda0, lambda_fem })
        })
        .collect()
}

/// Strictly increasing in area, for the closed form and (beyond the FEM
/// margin) for the FEM values.
pub fn is_increasing(cells: &[MonotoneCell]) -> bool {
    cells.windows(2).all(|w| {
        let closed = w[1].lambda0 > w[0].lambda0;
        let fem = match (w[0].lambda_fem, w[1].lambda_fem) {
            (Some((l0, e0)), Some((l1, e1))) => l1 - l0 > FEM_MARGIN_FACTOR * (e0 + e1),
            _ => true,
        };
        closed && fem
    })
}

fn monotonicity_rows(cfg: &ScanConfig) -> Vec<Row> {
    let areas = cfg.s_range.values();
    let opts = cfg.fem_options();
    cfg.alphas()
        .iter()
        .flat_map(|&alpha| match monotonicity(alpha, &areas, cfg.with_fem, &opts) {
            Ok(cells) => {
                let mut prev: Option<MonotoneCell> = None;
                cells
                    .into_iter()
                    .map(|cell| {
                        let verdict = prev.map(|p| is_increasing(&[p, cell]));
                        prev = Some(cell);
                        let (lf, le) = cell.lambda_fem.unwrap_or((f64::NAN, f64::NAN));
                        Row::ok(vec![alpha, cell.area, cell.lambda0, lf, le], verdict)
                    })
                    .collect::<Vec<_>>()
            }
            Err(e) => areas
                .iter()
                .map(|&s| isolate(&[alpha, s], 5, Err(e.clone())))
                .collect(),
        })
        .collect()
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

/// CSV text: `# ` provenance lines, a header row, one row per cell with 17
/// significant digits, then `verdict` and `error` columns.
pub fn to_csv(result: &ScanResult) -> String {
    let mut out = String::new();
    for line in &result.header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&result.columns.join(","));
    out.push_str(",verdict,error\n");
    for row in &result.rows {
        let mut fields: Vec<String> = row.values.iter().map(|&v| format_value(v)).collect();
        fields.push(match row.verdict {
            Some(true) => "true".into(),
            Some(false) => "false".into(),
            None => String::new(),
        });
        fields.push(row.error.as_deref().map(sanitize).unwrap_or_default());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &ScanResult, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_csv(result).as_bytes())?;
    Ok(())
}

/// Parses CSV written by [`to_csv`] back into columns and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Row>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    let mut columns: Vec<String> = header.split(',').map(String::from).collect();
    if columns.len() < 2 || columns[columns.len() - 2..] != ["verdict", "error"] {
        return Err(Error::Config("CSV header must end with verdict,error".into()));
    }
    columns.truncate(columns.len() - 2);
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() + 2 {
            return Err(Error::Config(format!("row has {} fields, expected {}", fields.len(), columns.len() + 2)));
        }
        let values = fields[..columns.len()]
            .iter()
            .map(|f| parse_f64(f))
            .collect::<Result<Vec<_>>>()?;
        let verdict = match fields[columns.len()] {
            "" => None,
            v => Some(parse_bool(v)?),
        };
        let error = match fields[columns.len() + 1] {
            "" => None,
            e => Some(e.to_string()),
        };
        rows.push(Row { values, verdict, error });
    }
    Ok((columns, rows))
}

const TRUE_COLOUR: &str = "#2c5fa8";
const FALSE_COLOUR: &str = "#e4e4e4";

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Heatmap of the verdict field: blue where it holds, grey where it fails,
/// blank where there is no verdict.
pub fn to_svg(result: &ScanResult) -> String {
    let (xi, yi, pi) = result.mode.plot_axes();
    let panels = match pi {
        Some(k) => distinct_sorted(result.rows.iter().map(|r| r.values[k])),
        None => vec![f64::NAN],
    };
    let xs = distinct_sorted(result.rows.iter().map(|r| r.values[xi]));
    let ys = match yi {
        Some(k) => distinct_sorted(result.rows.iter().map(|r| r.values[k])),
        None => vec![0.0],
    };
    let (pw, ph) = (360.0, 270.0);
    let (ml, mt, gap) = (70.0, 40.0, 40.0);
    let width = ml + panels.len() as f64 * (pw + gap);
    let height = mt + ph + 50.0;
    let cw = pw / xs.len().max(1) as f64;
    let ch = ph / ys.len().max(1) as f64;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{ml:.1}\" y=\"20\">{}</text>\n",
        result.mode.name()
    ));
    let xname = &result.columns[xi];
    let yname = yi.map(|k| result.columns[k].as_str()).unwrap_or("");
    for (p, &panel) in panels.iter().enumerate() {
        let ox = ml + p as f64 * (pw + gap);
        if let Some(k) = pi {
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\">{} = {}</text>\n",
                ox + pw / 2.0 - 30.0,
                mt - 6.0,
                result.columns[k],
                panel
            ));
        }
        for row in &result.rows {
            if pi.is_some_and(|k| row.values[k] != panel) {
                continue;
            }
            let colour = match row.verdict {
                Some(true) => TRUE_COLOUR,
                Some(false) => FALSE_COLOUR,
                None => continue,
            };
            let Some(ix) = xs.iter().position(|&x| x == row.values[xi]) else { continue };
            let iy = match yi {
                Some(k) => match ys.iter().position(|&y| y == row.values[k]) {
                    Some(i) => i,
                    None => continue,
                },
                None => 0,
            };
            let x = ox + ix as f64 * cw;
            let y = mt + ph - (iy + 1) as f64 * ch;
            s.push_str(&format!(
                "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{colour}\"/>\n",
                cw + 0.01,
                ch + 0.01
            ));
        }
        s.push_str(&format!(
            "<rect x=\"{ox:.1}\" y=\"{mt:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>\n"
        ));
        if let (Some(first), Some(last)) = (xs.first(), xs.last()) {
            let by = mt + ph + 15.0;
            s.push_str(&format!("<text x=\"{ox:.1}\" y=\"{by:.1}\">{first}</text>\n"));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{by:.1}\" text-anchor=\"end\">{last}</text>\n",
                ox + pw
            ));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xname}</text>\n",
                ox + pw / 2.0,
                by + 18.0
            ));
        }
        if yi.is_some() && p == 0 {
            if let (Some(first), Some(last)) = (ys.first(), ys.last()) {
                s.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{first}</text>\n",
                    ox - 4.0,
                    mt + ph
                ));
                s.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{last}</text>\n",
                    ox - 4.0,
                    mt + 12.0
                ));
                s.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yname}</text>\n",
                    ox - 4.0,
                    mt + ph / 2.0
                ));
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(result: &ScanResult, path: &Path) -> Result<()> {
    fs::write(path, to_svg(result))?;
    Ok(())
}
