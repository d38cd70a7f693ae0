//! Scenario files and the runner that turns them into a [`RunReport`].
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "gp_wall"
//! seed = 7
//!
//! [field]
//! kind = "gross_pitaevskii"
//! g11 = 1.0
//! g22 = 1.0
//! g12 = 2.0
//! mu = 1.0
//!
//! [body]
//! kind = "gp_ellipse"
//!
//! [[task]]
//! kind = "certify_convex"
//!
//! [[task]]
//! kind = "solve_bvp"
//! id = "wall"
//! left = [0.0, 1.0]
//! right = [1.0, 0.0]
//!
//! [[task]]
//! kind = "monitor"
//! monitor = "confinement"
//! tol = 1e-6
//! ```
//!
//! Tasks run in order; monitors read the solution named by `solution`, or
//! the most recent one. README.md lists every key and its default.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use confine_core::certifier::{
    certify_convex_condition, certify_halfspace, certify_symmetry_condition, certify_triangle,
    compare_symmetry_conditions, Certificate, CertifyOptions, Status, SymmetryComparison,
    SymmetryVariant, TriangleCertificate,
};
use confine_core::fields::{Field, VectorField};
use confine_core::geometry::{ConvexBody, Shape};
use confine_core::monitors::{
    component_bound_report, component_column, confinement_report, p_function_column,
    p_function_report, p_function_threshold, signed_distance_column, strictness_report,
    symmetry_column, symmetry_report, MonitorReport,
};
use confine_core::solver::{
    blend_guess, endpoint_sensitivity, residual, solve_bvp_1d, solve_relax_2d, BoundaryData,
    FlowOptions, GridSpec, NewtonOptions, SolutionGrid,
};
use serde::{Deserialize, Serialize};

use crate::desc::{BodySpec, FieldSpec};
use crate::grid_csv::{self, Column};
use crate::{json, Error};

/// Version of the report layout.
pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; relative paths resolve against the working
    /// directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub field: FieldSpec,
    #[serde(default)]
    pub body: Option<BodySpec>,
    #[serde(default, rename = "task")]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
    /// Record the outcome without a claim.
    Any,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryChoice {
    AsStated,
    RotatedHalfSpace,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorChoice {
    Confinement,
    Strictness,
    PFunction,
    PThreshold,
    ComponentBound,
    Symmetry,
}

fn default_shell() -> f64 {
    2.0
}
fn default_bvp_width() -> f64 {
    20.0
}
fn default_bvp_n() -> usize {
    2001
}
fn default_relax_width() -> f64 {
    10.0
}
fn default_relax_n() -> usize {
    41
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    CertifyConvex {
        #[serde(default = "default_shell")]
        shell_outer: f64,
        samples: Option<usize>,
        seed: Option<u64>,
        #[serde(default)]
        expect: Expect,
    },
    CertifyHalfspace {
        direction: Vec<f64>,
        level: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
        samples: Option<usize>,
        seed: Option<u64>,
        #[serde(default)]
        expect: Expect,
    },
    CertifyTriangle {
        samples: Option<usize>,
        seed: Option<u64>,
        #[serde(default)]
        expect: Expect,
    },
    CertifySymmetry {
        #[serde(default)]
        variant: SymmetryChoice,
        lo: Vec<f64>,
        hi: Vec<f64>,
        samples: Option<usize>,
        seed: Option<u64>,
        #[serde(default)]
        expect: Expect,
    },
    SolveBvp {
        id: String,
        #[serde(default = "default_bvp_width")]
        half_width: f64,
        #[serde(default = "default_bvp_n")]
        n: usize,
        left: Vec<f64>,
        right: Vec<f64>,
        tol: Option<f64>,
        max_iter: Option<usize>,
        /// Also solve on `[−1.5X, 1.5X]` and report the largest change.
        #[serde(default = "yes")]
        sensitivity: bool,
        #[serde(default = "yes")]
        csv: bool,
        #[serde(default)]
        expect: Expect,
    },
    SolveRelax {
        id: String,
        #[serde(default = "default_relax_width")]
        half_width: f64,
        #[serde(default = "default_relax_n")]
        n: usize,
        boundary: BoundarySpec,
        /// Added to the default initial iterate as `bump · φ(x, y)`, with
        /// `φ` a cosine bump vanishing on the boundary.
        initial_bump: Option<Vec<f64>>,
        steady_tol: Option<f64>,
        max_steps: Option<usize>,
        safety: Option<f64>,
        #[serde(default = "yes")]
        csv: bool,
        #[serde(default)]
        expect: Expect,
    },
    /// Reads a grid CSV; relative paths resolve against the scenario file.
    Load {
        id: String,
        path: PathBuf,
        #[serde(default)]
        expect: Expect,
    },
    Monitor {
        monitor: MonitorChoice,
        solution: Option<String>,
        tol: Option<f64>,
        /// Tolerance as a multiple of `h²`.
        kappa: Option<f64>,
        band: Option<f64>,
        c: Option<f64>,
        r: Option<f64>,
        direction: Option<Vec<f64>>,
        level: Option<f64>,
        c_values: Option<Vec<f64>>,
        /// Write the grid with this monitor's per-node column.
        #[serde(default)]
        csv: bool,
        #[serde(default)]
        expect: Expect,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::CertifyConvex { .. } => "certify_convex",
            Self::CertifyHalfspace { .. } => "certify_halfspace",
            Self::CertifyTriangle { .. } => "certify_triangle",
            Self::CertifySymmetry { .. } => "certify_symmetry",
            Self::SolveBvp { .. } => "solve_bvp",
            Self::SolveRelax { .. } => "solve_relax",
            Self::Load { .. } => "load",
            Self::Monitor { .. } => "monitor",
        }
    }

    pub fn expect(&self) -> Expect {
        match self {
            Self::CertifyConvex { expect, .. }
            | Self::CertifyHalfspace { expect, .. }
            | Self::CertifyTriangle { expect, .. }
            | Self::CertifySymmetry { expect, .. }
            | Self::SolveBvp { expect, .. }
            | Self::SolveRelax { expect, .. }
            | Self::Load { expect, .. }
            | Self::Monitor { expect, .. } => *expect,
        }
    }

    fn produces(&self) -> Option<&str> {
        match self {
            Self::SolveBvp { id, .. } | Self::SolveRelax { id, .. } | Self::Load { id, .. } => {
                Some(id)
            }
            _ => None,
        }
    }
}

/// Dirichlet data on the boundary of a square grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant {
        value: Vec<f64>,
    },
    /// `(s₁x, s₂y)/|(x, y)|`, a degree-one map onto the ellipse with
    /// semi-axes `scale` (default the unit circle).
    Radial {
        scale: Option<[f64; 2]>,
    },
    /// `K` equal angular sectors, sector `k` centred at angle
    /// `offset + 2πk/K` and set to `values[k]`.
    Arcs {
        values: Vec<Vec<f64>>,
        #[serde(default)]
        offset: f64,
    },
    /// `u₁ = u₂ = amplitude · sin(wavenumber · x) · cos(wavenumber · y)`.
    Diagonal {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: f64,
    },
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_wavenumber() -> f64 {
    0.3
}

impl BoundarySpec {
    /// Dimension of the states this boundary data produces, if fixed.
    fn dim(&self) -> Option<usize> {
        match self {
            Self::Constant { value } => Some(value.len()),
            Self::Radial { .. } | Self::Diagonal { .. } => Some(2),
            Self::Arcs { values, .. } => values.first().map(Vec::len),
        }
    }

    fn check(&self, m: usize) -> Result<(), String> {
        if let Self::Arcs { values, .. } = self {
            if values.is_empty() {
                return Err("`arcs` needs at least one value".into());
            }
            if values.iter().any(|v| v.len() != m) {
                return Err(format!("every arc value needs {m} components"));
            }
        }
        if let Self::Radial { scale: Some(s) } = self {
            if s.iter().any(|x| !(*x > 0.0)) {
                return Err("radial scale must be positive".into());
            }
        }
        match self.dim() {
            Some(d) if d != m => Err(format!("boundary data has {d} components, field has {m}")),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, grid: &GridSpec, m: usize) -> BoundaryData {
        BoundaryData::square_from_fn(grid, m, |x, y| match self {
            Self::Constant { value } => value.clone(),
            Self::Radial { scale } => {
                let [sx, sy] = scale.unwrap_or([1.0, 1.0]);
                let r = (x * x + y * y).sqrt();
                vec![sx * x / r, sy * y / r]
            }
            Self::Arcs { values, offset } => {
                let k = values.len() as f64;
                let width = std::f64::consts::TAU / k;
                let t = (y.atan2(x) - offset).rem_euclid(std::f64::consts::TAU);
                let idx = ((t / width).round() as usize) % values.len();
                values[idx].clone()
            }
            Self::Diagonal {
                amplitude,
                wavenumber,
            } => {
                let v = amplitude * (wavenumber * x).sin() * (wavenumber * y).cos();
                vec![v, v]
            }
        })
    }

    /// Parses `constant v1 .. vm`, `radial [sx sy]`, `arcs <m-vectors>` or
    /// `diagonal [amplitude [wavenumber]]`.
    pub fn parse(text: &str, m: usize) -> Result<Self, Error> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let (head, rest) = words
            .split_first()
            .ok_or_else(|| Error::invalid("--boundary", "empty boundary description"))?;
        let nums = crate::desc::numbers("--boundary", rest)?;
        let spec = match (*head, nums.as_slice()) {
            ("constant", v) => Self::Constant { value: v.to_vec() },
            ("radial", []) => Self::Radial { scale: None },
            ("radial", [sx, sy]) => Self::Radial {
                scale: Some([*sx, *sy]),
            },
            ("arcs", v) if m > 0 && !v.is_empty() && v.len() % m == 0 => Self::Arcs {
                values: v.chunks_exact(m).map(<[f64]>::to_vec).collect(),
                offset: 0.0,
            },
            ("diagonal", []) => Self::Diagonal {
                amplitude: 1.0,
                wavenumber: 0.3,
            },
            ("diagonal", [a]) => Self::Diagonal {
                amplitude: *a,
                wavenumber: 0.3,
            },
            ("diagonal", [a, k]) => Self::Diagonal {
                amplitude: *a,
                wavenumber: *k,
            },
            _ => {
                return Err(Error::invalid(
                    "--boundary",
                    format!("cannot read `{text}` for a field of dimension {m}"),
                ))
            }
        };
        spec.check(m).map_err(|r| Error::invalid("--boundary", r))?;
        Ok(spec)
    }
}

/// `½(1 + cos(πx/X))·½(1 + cos(πy/X))`-type bump: one at the center, zero
/// on the boundary of `[−X, X]²`.
fn bump(x: f64, y: f64, half_width: f64) -> f64 {
    let c = |t: f64| (std::f64::consts::FRAC_PI_2 * t / half_width).cos();
    c(x) * c(y)
}

pub fn parse(text: &str, origin: &str) -> Result<Scenario, Error> {
    toml::from_str(text).map_err(|e| Error::Parse {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })
}

pub fn load(path: &Path) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Built field and body after validation.
pub struct Prepared {
    pub field: VectorField,
    pub body: Option<ConvexBody>,
}

fn task_err(index: usize, task: &Task, reason: impl Into<String>) -> Error {
    Error::invalid(format!("task {} ({})", index + 1, task.kind()), reason)
}

/// Checks everything that can be checked before running: dimensions,
/// required bodies, option ranges, and that monitors reference solutions
/// produced by earlier tasks.
pub fn validate(scn: &Scenario) -> Result<Prepared, Error> {
    if scn.name.is_empty()
        || !scn
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(Error::invalid(
            "name",
            "use letters, digits, `_` and `-` only",
        ));
    }
    let field = scn.field.build()?;
    let m = field.dim();
    let body = match &scn.body {
        Some(spec) => Some(spec.build(Some(&field))?),
        None => None,
    };
    if let Some(b) = &body {
        if b.dim() != m {
            return Err(Error::invalid(
                "body",
                format!("body has dimension {}, field has dimension {m}", b.dim()),
            ));
        }
    }
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    let mut last: Option<&str> = None;
    for (i, task) in scn.tasks.iter().enumerate() {
        let err = |r: String| task_err(i, task, r);
        let need_body = || body.as_ref().ok_or_else(|| err("needs a [body]".into()));
        let samples_ok = |s: &Option<usize>| match s {
            Some(0) => Err(err("`samples` must be at least 1".into())),
            _ => Ok(()),
        };
        let len_ok = |name: &str, v: &[f64]| {
            if v.len() == m {
                Ok(())
            } else {
                Err(err(format!(
                    "`{name}` has {} entries, field dimension is {m}",
                    v.len()
                )))
            }
        };
        match task {
            Task::CertifyConvex {
                shell_outer,
                samples,
                ..
            } => {
                samples_ok(samples)?;
                let b = need_body()?;
                if b.center().is_none() {
                    return Err(err("the body must be bounded".into()));
                }
                if !(*shell_outer > 1.0) {
                    return Err(err("`shell_outer` must exceed 1".into()));
                }
            }
            Task::CertifyHalfspace {
                direction,
                lo,
                hi,
                samples,
                ..
            } => {
                samples_ok(samples)?;
                len_ok("direction", direction)?;
                len_ok("lo", lo)?;
                len_ok("hi", hi)?;
            }
            Task::CertifyTriangle { samples, .. } => {
                samples_ok(samples)?;
                let b = need_body()?;
                if !matches!(b.shape(), Shape::Polygon { vertices, .. } if vertices.len() == 3) {
                    return Err(err("the body must be a triangle".into()));
                }
            }
            Task::CertifySymmetry {
                lo, hi, samples, ..
            } => {
                samples_ok(samples)?;
                if m != 2 {
                    return Err(err("symmetry checks need a two-component field".into()));
                }
                len_ok("lo", lo)?;
                len_ok("hi", hi)?;
            }
            Task::SolveBvp {
                left,
                right,
                n,
                half_width,
                ..
            } => {
                len_ok("left", left)?;
                len_ok("right", right)?;
                GridSpec::interval(*half_width, *n)
                    .validate()
                    .map_err(|e| err(e.to_string()))?;
            }
            Task::SolveRelax {
                boundary,
                initial_bump,
                n,
                half_width,
                ..
            } => {
                boundary.check(m).map_err(err)?;
                if let Some(b) = initial_bump {
                    len_ok("initial_bump", b)?;
                }
                GridSpec::square(*half_width, *n)
                    .validate()
                    .map_err(|e| err(e.to_string()))?;
            }
            Task::Load { .. } => {}
            Task::Monitor {
                monitor,
                solution,
                tol,
                kappa,
                c,
                r,
                direction,
                level,
                c_values,
                ..
            } => {
                match solution {
                    Some(s) if !ids.contains(s.as_str()) => {
                        return Err(err(format!("no earlier task produces solution `{s}`")));
                    }
                    None if last.is_none() => {
                        return Err(err("no earlier task produces a solution".into()));
                    }
                    _ => {}
                }
                if tol.is_some() && kappa.is_some() {
                    return Err(err("give `tol` or `kappa`, not both".into()));
                }
                match monitor {
                    MonitorChoice::Confinement | MonitorChoice::Strictness => {
                        need_body()?;
                    }
                    MonitorChoice::PFunction => {
                        if !(c.is_some_and(|c| c > 0.0) && r.is_some_and(|r| r > 0.0)) {
                            return Err(err("`p_function` needs positive `c` and `r`".into()));
                        }
                    }
                    MonitorChoice::PThreshold => {
                        if !r.is_some_and(|r| r > 0.0) {
                            return Err(err("`p_threshold` needs a positive `r`".into()));
                        }
                        match c_values {
                            Some(cs) if !cs.is_empty() && cs.iter().all(|c| *c > 0.0) => {}
                            _ => return Err(err("`p_threshold` needs positive `c_values`".into())),
                        }
                    }
                    MonitorChoice::ComponentBound => {
                        let d = direction
                            .as_ref()
                            .ok_or_else(|| err("`component_bound` needs `direction`".into()))?;
                        len_ok("direction", d)?;
                        if level.is_none() {
                            return Err(err("`component_bound` needs `level`".into()));
                        }
                    }
                    MonitorChoice::Symmetry => {
                        if m != 2 {
                            return Err(err("symmetry needs a two-component field".into()));
                        }
                    }
                }
            }
        }
        if let Some(id) = task.produces() {
            if !ids.insert(id) {
                return Err(err(format!("solution id `{id}` is used twice")));
            }
            last = Some(id);
        }
    }
    Ok(Prepared { field, body })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

impl Outcome {
    fn of(status: Status) -> Self {
        match status {
            Status::Pass => Self::Pass,
            Status::Fail => Self::Fail,
            Status::Inconclusive => Self::Inconclusive,
        }
    }

    fn of_bool(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn matches(self, expect: Expect) -> bool {
        matches!(
            (self, expect),
            (Self::Pass, Expect::Pass | Expect::Any)
                | (Self::Fail, Expect::Fail | Expect::Any)
                | (Self::Inconclusive, Expect::Any)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub source: &'static str,
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub h: f64,
    pub components: usize,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint_sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detail {
    Certificate(Certificate),
    Triangle(TriangleCertificate),
    Symmetry(SymmetryComparison),
    Solution(SolutionMeta),
    Monitor {
        solution: String,
        report: MonitorReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        csv: Option<String>,
    },
    PThreshold {
        solution: String,
        r: f64,
        c_values: Vec<f64>,
        /// `(last failing C, first passing C)`.
        bracket: Option<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub kind: &'static str,
    pub expect: Expect,
    pub outcome: Outcome,
    pub matched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Detail>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub confine: &'static str,
    pub confine_core: &'static str,
    pub report_format: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub versions: Versions,
    /// The only field that differs between identical runs.
    pub timestamp_unix: u64,
    pub field: FieldSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    pub tasks: Vec<TaskReport>,
    pub unexpected: usize,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        json::to_string(self)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out_dir: Option<PathBuf>,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    /// Directory that relative `load` paths resolve against.
    pub base_dir: Option<PathBuf>,
}

pub struct RunOutcome {
    pub report: RunReport,
    /// Directory holding `report.json` and the grid files.
    pub dir: PathBuf,
}

struct Ctx<'a> {
    field: &'a VectorField,
    body: Option<&'a ConvexBody>,
    seed: u64,
    dir: &'a Path,
    base: &'a Path,
    solutions: Vec<(String, SolutionGrid)>,
}

impl Ctx<'_> {
    fn opts(&self, samples: Option<usize>, seed: Option<u64>) -> CertifyOptions {
        let base = CertifyOptions::default();
        CertifyOptions {
            n_samples: samples.unwrap_or(base.n_samples),
            seed: seed.unwrap_or(self.seed),
            ..base
        }
    }

    fn body(&self) -> &ConvexBody {
        self.body.expect("validated: task needs a body")
    }

    fn solution(&self, name: &Option<String>) -> Result<(&str, &SolutionGrid), String> {
        let found = match name {
            Some(n) => self.solutions.iter().rev().find(|(id, _)| id == n),
            None => self.solutions.last(),
        };
        found
            .map(|(id, s)| (id.as_str(), s))
            .ok_or_else(|| "the referenced solution was not produced".to_string())
    }

    fn write_grid(
        &self,
        file: String,
        sol: &SolutionGrid,
        extra: &[Column],
    ) -> Result<String, String> {
        let path = self.dir.join(&file);
        let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        grid_csv::write(std::io::BufWriter::new(f), sol, extra).map_err(|e| e.to_string())?;
        Ok(file)
    }
}

/// Validates and runs a scenario, writing `report.json` and grid files to
/// `<out>/<name>/`.
pub fn run(scn: &Scenario, opts: &RunOptions) -> Result<RunOutcome, Error> {
    let prepared = validate(scn)?;
    let out = crate::resolve_out_dir(opts.out_dir.clone().or_else(|| scn.output.clone()));
    let dir = out.join(&scn.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let base = opts.base_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let seed = opts.seed.unwrap_or(scn.seed);
    let mut ctx = Ctx {
        field: &prepared.field,
        body: prepared.body.as_ref(),
        seed,
        dir: &dir,
        base: &base,
        solutions: Vec::new(),
    };
    let mut tasks = Vec::with_capacity(scn.tasks.len());
    for (index, task) in scn.tasks.iter().enumerate() {
        let (outcome, detail, error) = match run_task(&mut ctx, task) {
            Ok((o, d)) => (o, Some(d), None),
            Err(msg) => (Outcome::Error, None, Some(msg)),
        };
        tasks.push(TaskReport {
            index: index + 1,
            kind: task.kind(),
            expect: task.expect(),
            outcome,
            matched: outcome.matches(task.expect()),
            error,
            detail,
        });
    }
    let report = RunReport {
        scenario: scn.name.clone(),
        seed,
        versions: Versions {
            confine: env!("CARGO_PKG_VERSION"),
            confine_core: confine_core::VERSION,
            report_format: REPORT_FORMAT,
        },
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        field: scn.field.clone(),
        body: scn.body.clone(),
        unexpected: tasks.iter().filter(|t| !t.matched).count(),
        tasks,
    };
    let path = dir.join("report.json");
    fs::write(&path, report.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutcome { report, dir })
}

fn run_task(ctx: &mut Ctx, task: &Task) -> Result<(Outcome, Detail), String> {
    let s = |e: &dyn std::fmt::Display| e.to_string();
    match task {
        Task::CertifyConvex {
            shell_outer,
            samples,
            seed,
            ..
        } => {
            let c = certify_convex_condition(
                ctx.field,
                ctx.body(),
                *shell_outer,
                &ctx.opts(*samples, *seed),
            )
            .map_err(|e| s(&e))?;
            Ok((Outcome::of(c.status), Detail::Certificate(c)))
        }
        Task::CertifyHalfspace {
            direction,
            level,
            lo,
            hi,
            samples,
            seed,
            ..
        } => {
            let c = certify_halfspace(
                ctx.field,
                direction,
                *level,
                lo,
                hi,
                &ctx.opts(*samples, *seed),
            )
            .map_err(|e| s(&e))?;
            Ok((Outcome::of(c.status), Detail::Certificate(c)))
        }
        Task::CertifyTriangle { samples, seed, .. } => {
            let c = certify_triangle(ctx.field, ctx.body(), &ctx.opts(*samples, *seed))
                .map_err(|e| s(&e))?;
            Ok((Outcome::of(c.status), Detail::Triangle(c)))
        }
        Task::CertifySymmetry {
            variant,
            lo,
            hi,
            samples,
            seed,
            ..
        } => {
            let o = ctx.opts(*samples, *seed);
            let single =
                |v| certify_symmetry_condition(ctx.field, v, lo, hi, &o).map_err(|e| s(&e));
            match variant {
                SymmetryChoice::AsStated => {
                    let c = single(SymmetryVariant::AsStated)?;
                    Ok((Outcome::of(c.status), Detail::Certificate(c)))
                }
                SymmetryChoice::RotatedHalfSpace => {
                    let c = single(SymmetryVariant::RotatedHalfSpace)?;
                    Ok((Outcome::of(c.status), Detail::Certificate(c)))
                }
                SymmetryChoice::Both => {
                    let cmp =
                        compare_symmetry_conditions(ctx.field, lo, hi, &o).map_err(|e| s(&e))?;
                    let both = cmp.as_stated.status == Status::Pass
                        && cmp.rotated_half_space.status == Status::Pass;
                    Ok((Outcome::of_bool(both), Detail::Symmetry(cmp)))
                }
            }
        }
        Task::SolveBvp {
            id,
            half_width,
            n,
            left,
            right,
            tol,
            max_iter,
            sensitivity,
            csv,
            ..
        } => {
            let grid = GridSpec::interval(*half_width, *n);
            let base = NewtonOptions::default();
            let nopts = NewtonOptions {
                tol: tol.unwrap_or(base.tol),
                max_iter: max_iter.unwrap_or(base.max_iter),
                ..base
            };
            let bc = BoundaryData::interval(left.clone(), right.clone());
            let sol = solve_bvp_1d(ctx.field, grid, &bc, &nopts).map_err(|e| s(&e))?;
            let sens = if *sensitivity {
                Some(
                    endpoint_sensitivity(ctx.field, grid, left, right, &nopts)
                        .map_err(|e| s(&e))?,
                )
            } else {
                None
            };
            finish_solution(ctx, id, sol, "solved", sens, *csv)
        }
        Task::SolveRelax {
            id,
            half_width,
            n,
            boundary,
            initial_bump,
            steady_tol,
            max_steps,
            safety,
            csv,
            ..
        } => {
            let grid = GridSpec::square(*half_width, *n);
            let m = ctx.field.dim();
            let bc = boundary.sample(&grid, m);
            let initial = initial_bump.as_ref().map(|b| {
                let mut init = blend_guess(&grid, &bc);
                for node in 0..grid.node_count() {
                    if grid.is_boundary(node) {
                        continue;
                    }
                    let c = grid.coords(node);
                    let phi = bump(c[0], c[1], *half_width);
                    for k in 0..m {
                        init[node * m + k] += b[k] * phi;
                    }
                }
                init
            });
            let base = FlowOptions::default();
            let fopts = FlowOptions {
                steady_tol: steady_tol.unwrap_or(base.steady_tol),
                max_steps: max_steps.unwrap_or(base.max_steps),
                safety: safety.unwrap_or(base.safety),
                initial,
            };
            let sol = solve_relax_2d(ctx.field, grid, &bc, &fopts).map_err(|e| s(&e))?;
            finish_solution(ctx, id, sol, "solved", None, *csv)
        }
        Task::Load { id, path, .. } => {
            let full = ctx.base.join(path);
            let f = fs::File::open(&full).map_err(|e| format!("{}: {e}", full.display()))?;
            let mut sol = grid_csv::read(std::io::BufReader::new(f)).map_err(|e| s(&e))?;
            if sol.m != ctx.field.dim() {
                return Err(format!(
                    "grid has {} components, field has {}",
                    sol.m,
                    ctx.field.dim()
                ));
            }
            sol.residual_norm = residual(&sol, ctx.field);
            finish_solution(ctx, id, sol, "loaded", None, false)
        }
        Task::Monitor {
            monitor,
            solution,
            tol,
            kappa,
            band,
            c,
            r,
            direction,
            level,
            c_values,
            csv,
            ..
        } => {
            let (name, sol) = ctx.solution(solution)?;
            let h = sol.grid.h();
            let tol_or = |default: f64| tol.or(kappa.map(|k| k * h * h)).unwrap_or(default);
            let body = ctx.body;
            let (report, column) = match monitor {
                MonitorChoice::PThreshold => {
                    let cs = c_values.clone().expect("validated");
                    let bracket =
                        p_function_threshold(sol, r.expect("validated"), &cs, tol_or(1e-8))
                            .map_err(|e| s(&e))?;
                    let detail = Detail::PThreshold {
                        solution: name.to_string(),
                        r: r.expect("validated"),
                        c_values: cs,
                        bracket,
                    };
                    return Ok((Outcome::of_bool(bracket.is_some()), detail));
                }
                MonitorChoice::Confinement => {
                    let b = body.expect("validated");
                    let rep = confinement_report(sol, b, tol_or(1e-9)).map_err(|e| s(&e))?;
                    (rep, signed_distance_column(sol, b).map_err(|e| s(&e))?)
                }
                MonitorChoice::Strictness => {
                    let b = body.expect("validated");
                    let rep = strictness_report(sol, b, band.unwrap_or(10.0 * h * h))
                        .map_err(|e| s(&e))?;
                    (rep, signed_distance_column(sol, b).map_err(|e| s(&e))?)
                }
                MonitorChoice::PFunction => {
                    let (c, r) = (c.expect("validated"), r.expect("validated"));
                    let rep = p_function_report(sol, c, r, tol_or(1e-8)).map_err(|e| s(&e))?;
                    (rep, p_function_column(sol, c, r).map_err(|e| s(&e))?)
                }
                MonitorChoice::ComponentBound => {
                    let (d, l) = (
                        direction.as_ref().expect("validated"),
                        level.expect("validated"),
                    );
                    let rep = component_bound_report(sol, d, l, tol_or(1e-9)).map_err(|e| s(&e))?;
                    (rep, component_column(sol, d, l).map_err(|e| s(&e))?)
                }
                MonitorChoice::Symmetry => {
                    let rep = symmetry_report(sol, tol_or(1e-8)).map_err(|e| s(&e))?;
                    (rep, symmetry_column(sol).map_err(|e| s(&e))?)
                }
            };
            let file = if *csv {
                let col_name = match monitor {
                    MonitorChoice::Confinement | MonitorChoice::Strictness => "signed_distance",
                    MonitorChoice::PFunction => "p_function",
                    MonitorChoice::ComponentBound => "component_excess",
                    _ => "asymmetry",
                };
                let extra = [Column {
                    name: col_name.into(),
                    values: column,
                }];
                let tag = serde_json::to_value(monitor)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                Some(ctx.write_grid(format!("{name}_{tag}.csv"), sol, &extra)?)
            } else {
                None
            };
            let outcome = Outcome::of_bool(report.pass);
            Ok((
                outcome,
                Detail::Monitor {
                    solution: name.to_string(),
                    report,
                    csv: file,
                },
            ))
        }
    }
}

fn finish_solution(
    ctx: &mut Ctx,
    id: &str,
    sol: SolutionGrid,
    source: &'static str,
    sensitivity: Option<f64>,
    csv: bool,
) -> Result<(Outcome, Detail), String> {
    let file = if csv {
        Some(ctx.write_grid(format!("{id}.csv"), &sol, &[])?)
    } else {
        None
    };
    let meta = SolutionMeta {
        source,
        dim: sol.grid.dim,
        n: sol.grid.n,
        half_width: sol.grid.half_width,
        h: sol.grid.h(),
        components: sol.m,
        residual_norm: sol.residual_norm,
        iterations: sol.iterations,
        converged: sol.converged,
        endpoint_sensitivity: sensitivity,
        csv: file,
    };
    let outcome = match source {
        "loaded" => Outcome::Pass,
        _ => Outcome::of_bool(sol.converged),
    };
    ctx.solutions.push((id.to_string(), sol));
    Ok((outcome, Detail::Solution(meta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "mini"
[field]
kind = "ginzburg_landau"
diag = [1.0, 1.0]
[body]
kind = "ball"
dim = 2
radius = 1.0
[[task]]
kind = "certify_convex"
samples = 200
"#;

    #[test]
    fn parses_and_validates() {
        let scn = parse(MINIMAL, "mini.toml").unwrap();
        assert_eq!(scn.tasks.len(), 1);
        assert_eq!(scn.tasks[0].expect(), Expect::Pass);
        validate(&scn).unwrap();
    }

    #[test]
    fn parse_errors_name_line_and_key() {
        let bad = MINIMAL.replace("samples = 200", "samples = \"many\"");
        let msg = parse(&bad, "mini.toml").unwrap_err().to_string();
        assert!(
            msg.contains("mini.toml") && msg.contains("line 10"),
            "{msg}"
        );
        assert!(msg.contains("expected usize"), "{msg}");
        let unknown = MINIMAL.replace("samples = 200", "smaples = 200");
        let msg = parse(&unknown, "mini.toml").unwrap_err().to_string();
        assert!(msg.contains("smaples"), "{msg}");
    }

    #[test]
    fn validation_names_the_offending_task() {
        let zero = MINIMAL.replace("samples = 200", "samples = 0");
        let err = validate(&parse(&zero, "x").unwrap()).err().unwrap();
        assert!(err.to_string().contains("task 1 (certify_convex)"));
        assert!(err.is_usage());

        let dangling = format!("{MINIMAL}[[task]]\nkind = \"monitor\"\nmonitor = \"symmetry\"\n");
        let err = validate(&parse(&dangling, "x").unwrap()).err().unwrap();
        assert!(err.to_string().contains("task 2 (monitor)"), "{err}");

        let mismatch = MINIMAL.replace("dim = 2", "dim = 3");
        let err = validate(&parse(&mismatch, "x").unwrap()).err().unwrap();
        assert!(err.to_string().contains("invalid body"), "{err}");
    }

    #[test]
    fn outcomes_against_expectations() {
        assert!(Outcome::Fail.matches(Expect::Fail));
        assert!(!Outcome::Fail.matches(Expect::Pass));
        assert!(!Outcome::Pass.matches(Expect::Fail));
        assert!(!Outcome::Inconclusive.matches(Expect::Pass));
        assert!(Outcome::Inconclusive.matches(Expect::Any));
        assert!(!Outcome::Error.matches(Expect::Any));
    }

    #[test]
    fn arcs_cover_sectors() {
        let spec = BoundarySpec::Arcs {
            values: vec![vec![0.0], vec![1.0], vec![2.0]],
            offset: 0.0,
        };
        let grid = GridSpec::square(1.0, 5);
        let bc = spec.sample(&grid, 1);
        let states = bc.states();
        for (k, node) in grid.boundary_nodes().into_iter().enumerate() {
            let c = grid.coords(node);
            let t = c[1].atan2(c[0]);
            let third = std::f64::consts::FRAC_PI_3;
            if [third, -third, std::f64::consts::PI]
                .iter()
                .any(|b| (t.abs() - b.abs()).abs() < 1e-12)
            {
                continue;
            }
            let expect = if t.abs() < std::f64::consts::FRAC_PI_3 {
                0.0
            } else if t > 0.0 {
                1.0
            } else {
                2.0
            };
            assert_eq!(states[k][0], expect, "node {node} at angle {t}");
        }
    }
}
