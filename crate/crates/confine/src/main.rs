use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use confine::desc::{parse_vector, BodySpec, FieldSpec};
use confine::scenario::{self, BoundarySpec, Expect, Outcome, RunOptions};
use confine::sweep::{crossing, Sweep, SweepTask};
use confine::{grid_csv, json, Error};
use confine_core::certifier::{
    certify_convex_condition, certify_halfspace, certify_symmetry_condition, certify_triangle,
    compare_symmetry_conditions, CertifyOptions, Status, SymmetryVariant,
};
use confine_core::fields::Field;
use confine_core::monitors::{
    component_bound_report, confinement_report, p_function_report, strictness_report,
    symmetry_report,
};
use confine_core::solver::{
    residual, solve_bvp_1d, solve_relax_2d, BoundaryData, FlowOptions, GridSpec, NewtonOptions,
};
use serde::Serialize;

/// Certify convex confinement of Δu = F(u), compute solutions and monitor
/// them.
#[derive(Parser)]
#[command(name = "confine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its report and grids.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $CONFINE_OUT_DIR, else ./confine_out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one certificate and print it as JSON.
    Certify {
        #[arg(long)]
        field: String,
        #[arg(long)]
        body: Option<String>,
        #[arg(long, value_enum, default_value_t = Check::Convex)]
        check: Check,
        /// Outer shell factor for the convex check.
        #[arg(long, default_value_t = 2.0)]
        shell: f64,
        /// Unit direction for the half-space check.
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        level: f64,
        /// Sampling box `lo1 .. lom hi1 .. him` for half-space and symmetry checks.
        #[arg(long = "box", allow_hyphen_values = true)]
        sample_box: Option<String>,
        #[arg(long, value_enum, default_value_t = Variant::Both)]
        variant: Variant,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ExpectArg::Any)]
        expect: ExpectArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a 1D wall (--left/--right) or a 2D problem (--boundary).
    Solve {
        #[arg(long)]
        field: String,
        /// Number of grid points per axis (default 2001 in 1D, 41 in 2D).
        #[arg(long)]
        grid: Option<usize>,
        /// Half-width X of the domain (default 20 in 1D, 10 in 2D).
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, requires = "right", allow_hyphen_values = true)]
        left: Option<String>,
        #[arg(long, requires = "left", allow_hyphen_values = true)]
        right: Option<String>,
        /// `constant v..`, `radial [sx sy]`, `arcs <states>` or `diagonal [amp [k]]`.
        #[arg(long, conflicts_with = "left", allow_hyphen_values = true)]
        boundary: Option<String>,
        /// Newton or steady-state tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Grid CSV destination (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a monitor on a grid CSV and print the report as JSON.
    Monitor {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        monitor: MonitorArg,
        #[arg(long)]
        body: Option<String>,
        /// Needed only to report the residual of the stored grid.
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Strictness band (default 10·h²).
        #[arg(long)]
        band: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the signed distance and closest boundary point.
    Project {
        #[arg(long)]
        body: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Vary one field parameter and collect the results in one CSV.
    Sweep {
        #[arg(long)]
        field: String,
        #[arg(long)]
        body: String,
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[arg(long, value_enum, default_value_t = SweepArg::Certify)]
        task: SweepArg,
        #[arg(long, default_value_t = 2.0)]
        shell: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wall grid size for `--task wall`.
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long, default_value_t = 20.0)]
        half_width: f64,
        #[arg(long, allow_hyphen_values = true)]
        left: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        right: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Convex,
    Halfspace,
    Triangle,
    Symmetry,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    AsStated,
    RotatedHalfSpace,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Pass,
    Fail,
    Any,
}

#[derive(Clone, Copy, ValueEnum)]
enum MonitorArg {
    Confinement,
    Strictness,
    PFunction,
    ComponentBound,
    Symmetry,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Certify,
    Wall,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

/// `Ok(false)` means an unexpected task outcome.
fn dispatch(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Run {
            scenario,
            out,
            seed,
        } => {
            let scn = scenario::load(&scenario)?;
            let base = scenario.parent().map(Path::to_path_buf);
            let done = scenario::run(
                &scn,
                &RunOptions {
                    out_dir: out,
                    seed,
                    base_dir: base,
                },
            )?;
            for t in &done.report.tasks {
                let mark = if t.matched { "ok" } else { "UNEXPECTED" };
                eprintln!(
                    "task {:>2} {:<18} {:<12} expect {:<4} {mark}",
                    t.index,
                    t.kind,
                    format!("{:?}", t.outcome).to_lowercase(),
                    format!("{:?}", t.expect).to_lowercase()
                );
                if let Some(e) = &t.error {
                    eprintln!("         {e}");
                }
            }
            println!("{}", done.dir.join("report.json").display());
            Ok(done.report.unexpected == 0)
        }
        Command::Certify {
            field,
            body,
            check,
            shell,
            direction,
            level,
            sample_box,
            variant,
            samples,
            seed,
            expect,
            out,
        } => {
            let f = FieldSpec::parse(&field)?.build()?;
            let m = f.dim();
            if samples == 0 {
                return Err(Error::invalid("--samples", "must be at least 1"));
            }
            let opts = CertifyOptions::default()
                .with_samples(samples)
                .with_seed(seed);
            let body = body
                .map(|b| BodySpec::parse(&b)?.build(Some(&f)))
                .transpose()?;
            let need_body = || {
                body.as_ref()
                    .ok_or_else(|| Error::invalid("--body", "required for this check"))
            };
            let sample_box = || -> Result<(Vec<f64>, Vec<f64>), Error> {
                let text = sample_box
                    .as_deref()
                    .ok_or_else(|| Error::invalid("--box", "required for this check"))?;
                let v = parse_vector("--box", text)?;
                if v.len() != 2 * m {
                    return Err(Error::invalid("--box", format!("needs {} numbers", 2 * m)));
                }
                Ok((v[..m].to_vec(), v[m..].to_vec()))
            };
            let fail = |e: confine_core::CertifyError| Error::invalid("certify", e.to_string());
            let (status, text) = match check {
                Check::Convex => {
                    let c =
                        certify_convex_condition(&f, need_body()?, shell, &opts).map_err(fail)?;
                    (c.status, json::to_string(&c))
                }
                Check::Halfspace => {
                    let d = parse_vector(
                        "--direction",
                        direction.as_deref().ok_or_else(|| {
                            Error::invalid("--direction", "required for this check")
                        })?,
                    )?;
                    let (lo, hi) = sample_box()?;
                    let c = certify_halfspace(&f, &d, level, &lo, &hi, &opts).map_err(fail)?;
                    (c.status, json::to_string(&c))
                }
                Check::Triangle => {
                    let c = certify_triangle(&f, need_body()?, &opts).map_err(fail)?;
                    (c.status, json::to_string(&c))
                }
                Check::Symmetry => {
                    let (lo, hi) = sample_box()?;
                    match variant {
                        Variant::Both => {
                            let c =
                                compare_symmetry_conditions(&f, &lo, &hi, &opts).map_err(fail)?;
                            let both = c.as_stated.status == Status::Pass
                                && c.rotated_half_space.status == Status::Pass;
                            (
                                if both { Status::Pass } else { Status::Fail },
                                json::to_string(&c),
                            )
                        }
                        v => {
                            let v = match v {
                                Variant::AsStated => SymmetryVariant::AsStated,
                                _ => SymmetryVariant::RotatedHalfSpace,
                            };
                            let c =
                                certify_symmetry_condition(&f, v, &lo, &hi, &opts).map_err(fail)?;
                            (c.status, json::to_string(&c))
                        }
                    }
                }
            };
            emit(&text, out.as_deref())?;
            Ok(matches_expect(status, expect))
        }
        Command::Solve {
            field,
            grid,
            half_width,
            left,
            right,
            boundary,
            tol,
            out,
        } => {
            let f = FieldSpec::parse(&field)?.build()?;
            let m = f.dim();
            let fail = |e: confine_core::SolverError| Error::invalid("solve", e.to_string());
            let sol = match (left, right, boundary) {
                (Some(l), Some(r), None) => {
                    let (l, r) = (parse_vector("--left", &l)?, parse_vector("--right", &r)?);
                    if l.len() != m || r.len() != m {
                        return Err(Error::invalid(
                            "--left/--right",
                            format!("need {m} components"),
                        ));
                    }
                    let g = GridSpec::interval(half_width.unwrap_or(20.0), grid.unwrap_or(2001));
                    let base = NewtonOptions::default();
                    let opts = NewtonOptions {
                        tol: tol.unwrap_or(base.tol),
                        ..base
                    };
                    solve_bvp_1d(&f, g, &BoundaryData::interval(l, r), &opts).map_err(fail)?
                }
                (None, None, Some(b)) => {
                    let spec = BoundarySpec::parse(&b, m)?;
                    let g = GridSpec::square(half_width.unwrap_or(10.0), grid.unwrap_or(41));
                    g.validate().map_err(fail)?;
                    let base = FlowOptions::default();
                    let opts = FlowOptions {
                        steady_tol: tol.unwrap_or(base.steady_tol),
                        ..base
                    };
                    solve_relax_2d(&f, g, &spec.sample(&g, m), &opts).map_err(fail)?
                }
                _ => {
                    return Err(Error::invalid(
                        "solve",
                        "give --left and --right (1D) or --boundary (2D)",
                    ))
                }
            };
            #[derive(Serialize)]
            struct Summary {
                dim: usize,
                n: usize,
                h: f64,
                residual_norm: f64,
                iterations: usize,
                converged: bool,
            }
            let summary = Summary {
                dim: sol.grid.dim,
                n: sol.grid.n,
                h: sol.grid.h(),
                residual_norm: sol.residual_norm,
                iterations: sol.iterations,
                converged: sol.converged,
            };
            let csv_text = grid_csv::to_string(&sol, &[]);
            match out {
                Some(path) => {
                    fs::write(&path, csv_text).map_err(|e| io_err(&path, e))?;
                    print!("{}", json::to_string(&summary));
                }
                None => {
                    print!("{csv_text}");
                    eprint!("{}", json::to_string(&summary));
                }
            }
            Ok(sol.converged)
        }
        Command::Monitor {
            input,
            monitor,
            body,
            field,
            tol,
            band,
            c,
            r,
            direction,
            level,
            out,
        } => {
            let file = fs::File::open(&input).map_err(|e| io_err(&input, e))?;
            let mut sol = grid_csv::read(std::io::BufReader::new(file))?;
            let f = field.map(|s| FieldSpec::parse(&s)?.build()).transpose()?;
            if let Some(f) = &f {
                if f.dim() != sol.m {
                    return Err(Error::invalid(
                        "--field",
                        "dimension does not match the grid",
                    ));
                }
                sol.residual_norm = residual(&sol, f);
            }
            let body = body
                .map(|b| BodySpec::parse(&b)?.build(f.as_ref()))
                .transpose()?;
            let need_body = || {
                body.as_ref()
                    .ok_or_else(|| Error::invalid("--body", "required for this monitor"))
            };
            let fail =
                |e: confine_core::monitors::MonitorError| Error::invalid("monitor", e.to_string());
            let h = sol.grid.h();
            let report = match monitor {
                MonitorArg::Confinement => {
                    confinement_report(&sol, need_body()?, tol.unwrap_or(1e-9)).map_err(fail)?
                }
                MonitorArg::Strictness => {
                    strictness_report(&sol, need_body()?, band.unwrap_or(10.0 * h * h))
                        .map_err(fail)?
                }
                MonitorArg::PFunction => {
                    let need = |v: Option<f64>, name: &str| {
                        v.ok_or_else(|| {
                            Error::invalid(format!("--{name}"), "required for p-function")
                        })
                    };
                    p_function_report(&sol, need(c, "c")?, need(r, "r")?, tol.unwrap_or(1e-8))
                        .map_err(fail)?
                }
                MonitorArg::ComponentBound => {
                    let d = parse_vector(
                        "--direction",
                        direction.as_deref().ok_or_else(|| {
                            Error::invalid("--direction", "required for component-bound")
                        })?,
                    )?;
                    let l = level
                        .ok_or_else(|| Error::invalid("--level", "required for component-bound"))?;
                    component_bound_report(&sol, &d, l, tol.unwrap_or(1e-9)).map_err(fail)?
                }
                MonitorArg::Symmetry => symmetry_report(&sol, tol.unwrap_or(1e-8)).map_err(fail)?,
            };
            emit(&json::to_string(&report), out.as_deref())?;
            Ok(true)
        }
        Command::Project { body, point } => {
            let b = BodySpec::parse(&body)?.build(None)?;
            let p = parse_vector("--point", &point)?;
            let fail = |e: confine_core::GeometryError| Error::invalid("--point", e.to_string());
            let d = b.try_signed_distance(&p).map_err(fail)?;
            let closest = b.try_project_boundary(&p).map_err(fail)?;
            #[derive(Serialize)]
            struct Projection {
                signed_distance: f64,
                closest: Vec<f64>,
            }
            print!(
                "{}",
                json::to_string(&Projection {
                    signed_distance: d,
                    closest
                })
            );
            Ok(true)
        }
        Command::Sweep {
            field,
            body,
            param,
            from,
            to,
            step,
            task,
            shell,
            samples,
            seed,
            grid,
            half_width,
            left,
            right,
            out,
        } => {
            let task = match task {
                SweepArg::Certify => SweepTask::Certify {
                    shell_outer: shell,
                    opts: CertifyOptions::default()
                        .with_samples(samples)
                        .with_seed(seed),
                },
                SweepArg::Wall => {
                    let need = |v: Option<String>, name: &str| {
                        v.ok_or_else(|| {
                            Error::invalid(format!("--{name}"), "required for a wall sweep")
                        })
                    };
                    SweepTask::Wall {
                        grid: GridSpec::interval(half_width, grid),
                        left: parse_vector("--left", &need(left, "left")?)?,
                        right: parse_vector("--right", &need(right, "right")?)?,
                    }
                }
            };
            let sweep = Sweep {
                field: FieldSpec::parse(&field)?,
                body: BodySpec::parse(&body)?,
                param,
                from,
                to,
                step,
                task,
            };
            let rows = sweep.run()?;
            emit(&sweep.to_csv(&rows), out.as_deref())?;
            match crossing(&rows) {
                Some(v) => eprintln!("fail → pass at {} = {v}", sweep.param),
                None => eprintln!("no single fail → pass crossing"),
            }
            Ok(true)
        }
    }
}

fn matches_expect(status: Status, expect: ExpectArg) -> bool {
    let outcome = match status {
        Status::Pass => Outcome::Pass,
        Status::Fail => Outcome::Fail,
        Status::Inconclusive => Outcome::Inconclusive,
    };
    outcome.matches(match expect {
        ExpectArg::Pass => Expect::Pass,
        ExpectArg::Fail => Expect::Fail,
        ExpectArg::Any => Expect::Any,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
