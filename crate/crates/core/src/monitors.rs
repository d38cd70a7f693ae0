//! Statistics over stored solutions that test the confinement conclusions.
//!
//! Monitors only read a [`SolutionGrid`]; they never re-run a solver, so a
//! serialized grid is enough to reproduce any report.

use alloc::vec;
use alloc::vec::Vec;
// Float math for no_std; newer toolchains also see unstable inherent
// methods and misreport this import as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::geometry::{ConvexBody, GeometryError};
use crate::linalg::{dot, norm};
use crate::solver::SolutionGrid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("dimension mismatch: solution has {solution} components, expected {expected}")]
    DimensionMismatch { solution: usize, expected: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    Confinement,
    Strictness,
    PFunction,
    ComponentBound,
    Symmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        Self {
            min,
            max,
            mean: if n == 0 { f64::NAN } else { sum / n as f64 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrictnessClass {
    /// No interior node touches the boundary away from the truncation edge.
    StrictlyInterior,
    /// Every interior node lies within the band of the boundary.
    BoundaryLocked,
    /// A nonconstant solution touches the boundary at an interior node that
    /// is not connected to the truncation edge through touching nodes.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictnessDetail {
    pub class: StrictnessClass,
    pub band: f64,
    /// Minimum of `−d(u(x))` over interior nodes.
    pub min_clearance: f64,
    /// Minimum of `−d(u(x))` over interior nodes outside the touching
    /// clusters attached to the truncation edge.
    pub core_clearance: f64,
    /// `max |u(x) − u(y)|_∞` over all node pairs.
    pub oscillation: f64,
    pub isolated_touches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub kind: MonitorKind,
    pub extremum: f64,
    pub witness_node: usize,
    pub witness: Vec<f64>,
    pub stats: Stats,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strictness: Option<StrictnessDetail>,
}

fn check_m(sol: &SolutionGrid, expected: usize) -> Result<(), MonitorError> {
    if sol.m != expected {
        return Err(MonitorError::DimensionMismatch {
            solution: sol.m,
            expected,
        });
    }
    Ok(())
}

/// Index and value of the largest entry; ties keep the first node.
fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}

fn max_report(sol: &SolutionGrid, kind: MonitorKind, column: Vec<f64>, tol: f64) -> MonitorReport {
    let (node, extremum) = argmax(&column);
    MonitorReport {
        kind,
        extremum,
        witness_node: node,
        witness: sol.grid.coords(node),
        stats: Stats::of(column.iter().copied()),
        tol,
        pass: extremum <= tol,
        strictness: None,
    }
}

/// `d(u(x))` per node.
pub fn signed_distance_column(
    sol: &SolutionGrid,
    body: &ConvexBody,
) -> Result<Vec<f64>, MonitorError> {
    check_m(sol, body.dim())?;
    Ok(sol.nodes().map(|u| body.signed_distance(u)).collect())
}

/// `u(x)·e − L` per node.
pub fn component_column(
    sol: &SolutionGrid,
    e: &[f64],
    level: f64,
) -> Result<Vec<f64>, MonitorError> {
    check_m(sol, e.len())?;
    Ok(sol.nodes().map(|u| dot(u, e) - level).collect())
}

/// `|u₁(x) − u₂(x)|` per node.
pub fn symmetry_column(sol: &SolutionGrid) -> Result<Vec<f64>, MonitorError> {
    check_m(sol, 2)?;
    Ok(sol.nodes().map(|u| (u[0] - u[1]).abs()).collect())
}

/// `|∇u(x)|²` per node: centered differences inside, one-sided
/// second-order differences on the truncation edge.
pub fn gradient_sq_column(sol: &SolutionGrid) -> Vec<f64> {
    let grid = &sol.grid;
    let (n, m, h) = (grid.n, sol.m, grid.h());
    let at = |node: usize, k: usize| sol.values[node * m + k];
    let deriv = |idx: &dyn Fn(usize) -> usize, i: usize, k: usize| -> f64 {
        if i == 0 {
            (-3.0 * at(idx(0), k) + 4.0 * at(idx(1), k) - at(idx(2), k)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * at(idx(n - 1), k) - 4.0 * at(idx(n - 2), k) + at(idx(n - 3), k)) / (2.0 * h)
        } else {
            (at(idx(i + 1), k) - at(idx(i - 1), k)) / (2.0 * h)
        }
    };
    (0..grid.node_count())
        .map(|node| {
            let mut g2 = 0.0;
            for k in 0..m {
                if grid.dim == 1 {
                    g2 += deriv(&|i| i, node, k).powi(2);
                } else {
                    let (i, j) = (node % n, node / n);
                    g2 += deriv(&|t| j * n + t, i, k).powi(2);
                    g2 += deriv(&|t| t * n + i, j, k).powi(2);
                }
            }
            g2
        })
        .collect()
}

/// `P(x) = ½|∇u(x)|² + C(|u(x)|² − R²)` per node.
pub fn p_function_column(sol: &SolutionGrid, c: f64, r: f64) -> Result<Vec<f64>, MonitorError> {
    if !(c > 0.0) {
        return Err(MonitorError::InvalidParameter {
            name: "C",
            reason: "must be positive",
        });
    }
    if !(r > 0.0) {
        return Err(MonitorError::InvalidParameter {
            name: "R",
            reason: "must be positive",
        });
    }
    Ok(gradient_sq_column(sol)
        .into_iter()
        .zip(sol.nodes())
        .map(|(g2, u)| 0.5 * g2 + c * (dot(u, u) - r * r))
        .collect())
}

/// Largest signed distance over all nodes; passes when it is at most `tol`.
pub fn confinement_report(
    sol: &SolutionGrid,
    body: &ConvexBody,
    tol: f64,
) -> Result<MonitorReport, MonitorError> {
    let column = signed_distance_column(sol, body)?;
    Ok(max_report(sol, MonitorKind::Confinement, column, tol))
}

pub fn component_bound_report(
    sol: &SolutionGrid,
    e: &[f64],
    level: f64,
    tol: f64,
) -> Result<MonitorReport, MonitorError> {
    if (norm(e) - 1.0).abs() > 1e-12 {
        return Err(MonitorError::InvalidParameter {
            name: "e",
            reason: "must be a unit vector",
        });
    }
    let column = component_column(sol, e, level)?;
    Ok(max_report(sol, MonitorKind::ComponentBound, column, tol))
}

pub fn symmetry_report(sol: &SolutionGrid, tol: f64) -> Result<MonitorReport, MonitorError> {
    let column = symmetry_column(sol)?;
    Ok(max_report(sol, MonitorKind::Symmetry, column, tol))
}

pub fn p_function_report(
    sol: &SolutionGrid,
    c: f64,
    r: f64,
    tol: f64,
) -> Result<MonitorReport, MonitorError> {
    let column = p_function_column(sol, c, r)?;
    Ok(max_report(sol, MonitorKind::PFunction, column, tol))
}

/// Sweeps ascending `c_values` and returns the bracket `(last failing C,
/// first passing C)` of the P-function bound, if both exist.
pub fn p_function_threshold(
    sol: &SolutionGrid,
    r: f64,
    c_values: &[f64],
    tol: f64,
) -> Result<Option<(f64, f64)>, MonitorError> {
    let mut last_fail = None;
    for &c in c_values {
        if p_function_report(sol, c, r, tol)?.pass {
            return Ok(last_fail.map(|f| (f, c)));
        }
        last_fail = Some(c);
    }
    Ok(None)
}

/// Classifies a solution against the strict-interior alternative.
///
/// Nodes with `d(u(x)) ≥ −band` count as touching. Touching nodes connected
/// to the truncation edge through other touching nodes are where the
/// solution approaches its far-field states, which may lie on the boundary;
/// only touching clusters detached from the edge signal a discrete
/// violation. A nonconstant solution locked onto the boundary of a strictly
/// convex body also fails.
pub fn strictness_report(
    sol: &SolutionGrid,
    body: &ConvexBody,
    band: f64,
) -> Result<MonitorReport, MonitorError> {
    if !(band >= 0.0) {
        return Err(MonitorError::InvalidParameter {
            name: "band",
            reason: "must be nonnegative",
        });
    }
    let d = signed_distance_column(sol, body)?;
    let grid = &sol.grid;
    let count = grid.node_count();
    let touching: Vec<bool> = d.iter().map(|&v| v >= -band).collect();

    let mut anchored = vec![false; count];
    let mut stack: Vec<usize> = (0..count)
        .filter(|&k| grid.is_boundary(k) && touching[k])
        .collect();
    for &k in &stack {
        anchored[k] = true;
    }
    while let Some(k) = stack.pop() {
        for q in grid.neighbours(k) {
            if touching[q] && !anchored[q] {
                anchored[q] = true;
                stack.push(q);
            }
        }
    }

    let interior: Vec<usize> = (0..count).filter(|&k| !grid.is_boundary(k)).collect();
    let isolated_touches = interior
        .iter()
        .filter(|&&k| touching[k] && !anchored[k])
        .count();
    let all_locked = !interior.is_empty() && interior.iter().all(|&k| d[k].abs() <= band);

    let mut oscillation: f64 = 0.0;
    for c in 0..sol.m {
        let comp = sol.nodes().map(|u| u[c]);
        let (lo, hi) = comp.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        });
        oscillation = oscillation.max(hi - lo);
    }
    let nonconstant = oscillation > band;

    let class = if all_locked {
        StrictnessClass::BoundaryLocked
    } else if isolated_touches > 0 && nonconstant {
        StrictnessClass::Mixed
    } else {
        StrictnessClass::StrictlyInterior
    };
    let pass = match class {
        StrictnessClass::StrictlyInterior => true,
        StrictnessClass::Mixed => false,
        StrictnessClass::BoundaryLocked => !(nonconstant && body.is_strictly_convex()),
    };

    let clearance = |k: &usize| -d[*k];
    let min_clearance = interior.iter().map(clearance).fold(f64::INFINITY, f64::min);
    let core: Vec<usize> = interior.iter().copied().filter(|&k| !anchored[k]).collect();
    let core_clearance = core.iter().map(clearance).fold(f64::INFINITY, f64::min);

    let witness_node = core
        .iter()
        .chain(interior.iter())
        .copied()
        .fold(None, |best: Option<usize>, k| match best {
            Some(b) if d[b] >= d[k] => Some(b),
            _ => Some(k),
        })
        .unwrap_or(0);
    let extremum = if core.is_empty() {
        min_clearance
    } else {
        core_clearance
    };

    Ok(MonitorReport {
        kind: MonitorKind::Strictness,
        extremum,
        witness_node,
        witness: grid.coords(witness_node),
        stats: Stats::of(interior.iter().map(clearance)),
        tol: band,
        pass,
        strictness: Some(StrictnessDetail {
            class,
            band,
            min_clearance,
            core_clearance,
            oscillation,
            isolated_touches,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::GridSpec;

    fn tri() -> ConvexBody {
        ConvexBody::triangle([0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]).unwrap()
    }

    #[test]
    fn constant_vertex_is_confined() {
        let sol = SolutionGrid::constant(GridSpec::square(1.0, 5), &[0.0, 1.0]).unwrap();
        let r = confinement_report(&sol, &tri(), 1e-9).unwrap();
        assert_eq!(r.extremum, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn outside_node_is_witness() {
        let grid = GridSpec::interval(1.0, 5);
        let mut sol = SolutionGrid::constant(grid, &[-0.2, 0.0]).unwrap();
        sol.values[3 * 2] = 0.5;
        let r = confinement_report(&sol, &tri(), 1e-9).unwrap();
        assert!(!r.pass);
        assert_eq!(r.witness_node, 3);
        assert_eq!(r.witness, vec![0.5]);
    }

    #[test]
    fn constant_on_boundary_is_locked() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let sol = SolutionGrid::constant(GridSpec::interval(3.0, 31), &[1.0, 0.0]).unwrap();
        let r = strictness_report(&sol, &ball, 1e-3).unwrap();
        let s = r.strictness.unwrap();
        assert_eq!(s.class, StrictnessClass::BoundaryLocked);
        assert!(r.pass);
    }

    #[test]
    fn isolated_touch_is_mixed() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let grid = GridSpec::interval(3.0, 31);
        let mut sol = SolutionGrid::constant(grid, &[0.1, 0.0]).unwrap();
        for i in 0..31 {
            sol.values[i * 2 + 1] = 0.02 * i as f64;
        }
        sol.values[15 * 2] = 1.0;
        sol.values[15 * 2 + 1] = 0.0;
        let r = strictness_report(&sol, &ball, 1e-3).unwrap();
        assert_eq!(r.strictness.as_ref().unwrap().class, StrictnessClass::Mixed);
        assert!(!r.pass);
        assert_eq!(r.witness_node, 15);
    }

    #[test]
    fn component_and_symmetry_examples() {
        let sol = SolutionGrid::constant(GridSpec::interval(1.0, 5), &[1.0, 0.0]).unwrap();
        let e = [0.6, 0.8];
        let r = component_bound_report(&sol, &e, 0.1, 1e-9).unwrap();
        assert_eq!(r.extremum, 0.6 - 0.1);
        assert!(!r.pass);
        let s = symmetry_report(&sol, 1e-9).unwrap();
        assert_eq!(s.extremum, 1.0);
        assert!(!s.pass);
        let sol = SolutionGrid::constant(GridSpec::interval(1.0, 5), &[1.0, 1.0]).unwrap();
        let s = symmetry_report(&sol, 1e-9).unwrap();
        assert_eq!(s.extremum, 0.0);
        assert!(s.pass);
        assert!(component_bound_report(&sol, &[1.0, 1.0], 0.0, 1e-9).is_err());
    }

    #[test]
    fn p_function_of_constant() {
        let sol = SolutionGrid::constant(GridSpec::square(1.0, 5), &[0.3, 0.4]).unwrap();
        let r = p_function_report(&sol, 2.0, 1.0, 1e-8).unwrap();
        assert!((r.extremum - 2.0 * (0.25 - 1.0)).abs() < 1e-15);
        assert!(r.pass);
        assert!(p_function_report(&sol, 0.0, 1.0, 1e-8).is_err());
        assert!(p_function_report(&sol, 1.0, -1.0, 1e-8).is_err());
    }

    #[test]
    fn gradient_is_exact_for_quadratics() {
        let grid = GridSpec::square(1.0, 5);
        let values: Vec<f64> = (0..25)
            .map(|k| {
                let c = grid.coords(k);
                c[0] * c[0] + 3.0 * c[1]
            })
            .collect();
        let sol = SolutionGrid::from_values(grid, 1, values).unwrap();
        let g = gradient_sq_column(&sol);
        for (k, g2) in g.iter().enumerate() {
            let c = grid.coords(k);
            assert!((g2 - (4.0 * c[0] * c[0] + 9.0)).abs() < 1e-12);
        }
    }
}
