//! Bounded solutions of `Δu = F(u)` on truncated domains.
//!
//! Both solvers use the second-order centered Laplacian on a uniform grid
//! over `[−X, X]` (1D) or `[−X, X]²` (2D) with Dirichlet data on the
//! truncation boundary.
//!
//! - [`solve_bvp_1d`]: damped Newton on the full discrete system, with a
//!   block-tridiagonal direct solve per step.
//! - [`solve_relax_2d`]: steady state of the flow `u_t = Δu − F(u)`,
//!   stepping implicitly in the Laplacian and explicitly in `F`.

use alloc::vec;
use alloc::vec::Vec;
// Float math for no_std; newer toolchains also see unstable inherent
// methods and misreport this import as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::fields::Field;
use crate::linalg::{norm_inf, Lu};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("boundary data does not match the grid or field dimension")]
    BoundaryMismatch,
    #[error("initial guess has the wrong length")]
    InitialMismatch,
    #[error("boundary data must be finite")]
    NonFiniteBoundary,
    #[error("singular Newton Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
}

/// Uniform grid over `[−X, X]^dim` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn interval(half_width: f64, n: usize) -> Self {
        Self {
            dim: 1,
            half_width,
            n,
        }
    }

    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            dim: 2,
            half_width,
            n,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.dim != 1 && self.dim != 2 {
            return Err(SolverError::InvalidGrid("dimension must be 1 or 2"));
        }
        if self.n < 3 {
            return Err(SolverError::InvalidGrid("need at least 3 points per axis"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(SolverError::InvalidGrid("half-width must be positive"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn axis(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis(node)],
            _ => vec![self.axis(node % self.n), self.axis(node / self.n)],
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let last = self.n - 1;
        match self.dim {
            1 => node == 0 || node == last,
            _ => {
                let (i, j) = (node % self.n, node / self.n);
                i == 0 || j == 0 || i == last || j == last
            }
        }
    }

    /// Boundary node indices in increasing order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| self.is_boundary(k))
            .collect()
    }

    /// Indices of the grid neighbours of a node.
    pub fn neighbours(&self, node: usize) -> Vec<usize> {
        let n = self.n;
        let mut out = Vec::with_capacity(4);
        match self.dim {
            1 => {
                if node > 0 {
                    out.push(node - 1);
                }
                if node + 1 < n {
                    out.push(node + 1);
                }
            }
            _ => {
                let (i, j) = (node % n, node / n);
                if i > 0 {
                    out.push(node - 1);
                }
                if i + 1 < n {
                    out.push(node + 1);
                }
                if j > 0 {
                    out.push(node - n);
                }
                if j + 1 < n {
                    out.push(node + n);
                }
            }
        }
        out
    }
}

/// Discrete solution: `values[node * m + k]` is component `k` at `node`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionGrid {
    pub grid: GridSpec,
    pub m: usize,
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionGrid {
    /// Wraps stored values, e.g. read back from a file. Solver metadata is
    /// reset; the residual can be recomputed with [`residual`].
    pub fn from_values(grid: GridSpec, m: usize, values: Vec<f64>) -> Result<Self, SolverError> {
        grid.validate()?;
        if m == 0 || values.len() != grid.node_count() * m {
            return Err(SolverError::InitialMismatch);
        }
        Ok(Self {
            grid,
            m,
            values,
            residual_norm: f64::NAN,
            iterations: 0,
            converged: false,
        })
    }

    /// Constant state `p` on every node.
    pub fn constant(grid: GridSpec, p: &[f64]) -> Result<Self, SolverError> {
        let values = (0..grid.node_count())
            .flat_map(|_| p.iter().copied())
            .collect();
        Self::from_values(grid, p.len(), values)
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }
}

/// Dirichlet data. For squares, one `m`-vector per boundary node, in the
/// order of [`GridSpec::boundary_nodes`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Interval { left: Vec<f64>, right: Vec<f64> },
    Square { m: usize, values: Vec<f64> },
}

impl BoundaryData {
    pub fn interval(left: Vec<f64>, right: Vec<f64>) -> Self {
        Self::Interval { left, right }
    }

    /// Samples `f(x, y)` at the boundary nodes of a square grid.
    pub fn square_from_fn<G>(grid: &GridSpec, m: usize, f: G) -> Self
    where
        G: Fn(f64, f64) -> Vec<f64>,
    {
        let values = grid
            .boundary_nodes()
            .into_iter()
            .flat_map(|k| {
                let c = grid.coords(k);
                let v = f(c[0], c[1]);
                debug_assert_eq!(v.len(), m);
                v
            })
            .collect();
        Self::Square { m, values }
    }

    /// All boundary values, one `m`-vector each.
    pub fn states(&self) -> Vec<&[f64]> {
        match self {
            Self::Interval { left, right } => vec![left.as_slice(), right.as_slice()],
            Self::Square { m, values } => values.chunks_exact(*m).collect(),
        }
    }

    fn check(&self, grid: &GridSpec, m: usize) -> Result<(), SolverError> {
        let ok = match self {
            Self::Interval { left, right } => grid.dim == 1 && left.len() == m && right.len() == m,
            Self::Square { m: bm, values } => {
                grid.dim == 2 && *bm == m && values.len() == grid.boundary_nodes().len() * m
            }
        };
        if !ok {
            return Err(SolverError::BoundaryMismatch);
        }
        if self
            .states()
            .iter()
            .flat_map(|s| s.iter())
            .any(|x| !x.is_finite())
        {
            return Err(SolverError::NonFiniteBoundary);
        }
        Ok(())
    }

    fn write_into(&self, grid: &GridSpec, m: usize, values: &mut [f64]) {
        match self {
            Self::Interval { left, right } => {
                values[..m].copy_from_slice(left);
                let last = grid.n - 1;
                values[last * m..(last + 1) * m].copy_from_slice(right);
            }
            Self::Square { values: bv, .. } => {
                for (k, node) in grid.boundary_nodes().into_iter().enumerate() {
                    values[node * m..(node + 1) * m].copy_from_slice(&bv[k * m..(k + 1) * m]);
                }
            }
        }
    }
}

/// `½(uL+uR) + ½(uR−uL) tanh(x)` at every node.
pub fn tanh_guess(grid: &GridSpec, left: &[f64], right: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n * left.len());
    for i in 0..grid.n {
        let t = grid.axis(i).tanh();
        for (l, r) in left.iter().zip(right) {
            out.push(0.5 * (l + r) + 0.5 * (r - l) * t);
        }
    }
    out
}

/// Interior values as a convex combination of the four boundary values
/// reached along the grid axes, weighted by inverse distance.
pub fn blend_guess(grid: &GridSpec, bc: &BoundaryData) -> Vec<f64> {
    let (m, n) = match bc {
        BoundaryData::Square { m, .. } => (*m, grid.n),
        BoundaryData::Interval { left, right } => {
            return tanh_guess(grid, left, right);
        }
    };
    let mut values = vec![0.0; grid.node_count() * m];
    bc.write_into(grid, m, &mut values);
    let last = n - 1;
    for j in 1..last {
        for i in 1..last {
            let anchors = [
                (i as f64, j * n),
                ((last - i) as f64, j * n + last),
                (j as f64, i),
                ((last - j) as f64, last * n + i),
            ];
            let wsum: f64 = anchors.iter().map(|(d, _)| 1.0 / d).sum();
            let node = j * n + i;
            for k in 0..m {
                values[node * m + k] = anchors
                    .iter()
                    .map(|(d, b)| values[b * m + k] / d)
                    .sum::<f64>()
                    / wsum;
            }
        }
    }
    values
}

/// Max-norm of `Δ_h u − F(u)` over interior nodes.
pub fn residual<F: Field + ?Sized>(solution: &SolutionGrid, field: &F) -> f64 {
    norm_inf(&residual_vector(
        &solution.grid,
        solution.m,
        &solution.values,
        field,
    ))
}

/// `Δ_h u − F(u)` at interior nodes (boundary entries are zero).
fn residual_vector<F: Field + ?Sized>(
    grid: &GridSpec,
    m: usize,
    values: &[f64],
    field: &F,
) -> Vec<f64> {
    let h2 = grid.h() * grid.h();
    let mut out = vec![0.0; values.len()];
    let mut f = vec![0.0; m];
    for node in 0..grid.node_count() {
        if grid.is_boundary(node) {
            continue;
        }
        let u = &values[node * m..(node + 1) * m];
        field.eval_into(u, &mut f);
        let nbrs = grid.neighbours(node);
        for k in 0..m {
            let lap =
                nbrs.iter().map(|&q| values[q * m + k]).sum::<f64>() - nbrs.len() as f64 * u[k];
            out[node * m + k] = lap / h2 - f[k];
        }
    }
    out
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Full-grid initial guess; defaults to [`tanh_guess`]. Boundary entries
    /// are overwritten by the boundary data.
    pub initial: Option<Vec<f64>>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            max_halvings: 30,
            initial: None,
        }
    }
}

/// Solves `u'' = F(u)` on `[−X, X]` with Dirichlet data by damped Newton.
///
/// A Newton step that fails to reduce the Euclidean residual norm after
/// `max_halvings` halvings ends the iteration with `converged = false`.
pub fn solve_bvp_1d<F: Field + ?Sized>(
    field: &F,
    grid: GridSpec,
    bc: &BoundaryData,
    opts: &NewtonOptions,
) -> Result<SolutionGrid, SolverError> {
    grid.validate()?;
    if grid.dim != 1 {
        return Err(SolverError::InvalidGrid("1D solver needs an interval grid"));
    }
    let m = field.dim();
    bc.check(&grid, m)?;
    let mut u = match (&opts.initial, bc) {
        (Some(init), _) => {
            if init.len() != grid.n * m {
                return Err(SolverError::InitialMismatch);
            }
            init.clone()
        }
        (None, BoundaryData::Interval { left, right }) => tanh_guess(&grid, left, right),
        (None, _) => unreachable!("checked above"),
    };
    bc.write_into(&grid, m, &mut u);

    let n = grid.n;
    let h2 = grid.h() * grid.h();
    let mut r = residual_vector(&grid, m, &u, field);
    let mut rnorm = norm_inf(&r);
    let mut iterations = 0;
    let mut stalled = false;

    while rnorm > opts.tol && iterations < opts.max_iter && !stalled {
        let delta = newton_step(field, &u, &r, n, m, h2).ok_or(SolverError::SingularJacobian {
            iteration: iterations,
        })?;
        iterations += 1;

        let r2 = norm2(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + lambda * d).collect();
            let rt = residual_vector(&grid, m, &trial, field);
            if norm2(&rt) < r2 {
                u = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            stalled = true;
        }
        rnorm = norm_inf(&r);
    }

    Ok(SolutionGrid {
        grid,
        m,
        values: u,
        residual_norm: rnorm,
        iterations,
        converged: rnorm <= opts.tol,
    })
}

/// Solves `J δ = −r` for the block-tridiagonal Jacobian with off-diagonal
/// blocks `I/h²` and diagonal blocks `−2I/h² − J_F(u_j)`.
fn newton_step<F: Field + ?Sized>(
    field: &F,
    u: &[f64],
    r: &[f64],
    n: usize,
    m: usize,
    h2: f64,
) -> Option<Vec<f64>> {
    let interior = n - 2;
    let off = 1.0 / h2;
    // Forward sweep: S_j = D_j − off·C_{j−1}, C_j = off·S_j⁻¹,
    // d_j = S_j⁻¹(−r_j − off·d_{j−1}).
    let mut c_blocks: Vec<Vec<f64>> = Vec::with_capacity(interior);
    let mut d_vecs: Vec<Vec<f64>> = Vec::with_capacity(interior);
    let mut jac = vec![0.0; m * m];
    for j in 0..interior {
        let node = j + 1;
        field.jacobian_into(&u[node * m..(node + 1) * m], &mut jac);
        let mut s: Vec<f64> = jac.iter().map(|x| -x).collect();
        for k in 0..m {
            s[k * m + k] -= 2.0 / h2;
        }
        let mut rhs: Vec<f64> = r[node * m..(node + 1) * m].iter().map(|x| -x).collect();
        if j > 0 {
            let cp = &c_blocks[j - 1];
            for (sv, cv) in s.iter_mut().zip(cp) {
                *sv -= off * cv;
            }
            for (rv, dv) in rhs.iter_mut().zip(&d_vecs[j - 1]) {
                *rv -= off * dv;
            }
        }
        let lu = Lu::factor(s, m, 1e-14)?;
        let d = lu.solve(&rhs);
        if d.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mut ident = vec![0.0; m * m];
        for k in 0..m {
            ident[k * m + k] = off;
        }
        c_blocks.push(lu.solve_mat(&ident, m));
        d_vecs.push(d);
    }
    let mut delta = vec![0.0; n * m];
    for j in (0..interior).rev() {
        let node = j + 1;
        let mut x = d_vecs[j].clone();
        if j + 1 < interior {
            let next: Vec<f64> = delta[(node + 1) * m..(node + 2) * m].to_vec();
            let c = &c_blocks[j];
            for a in 0..m {
                x[a] -= (0..m).map(|b| c[a * m + b] * next[b]).sum::<f64>();
            }
        }
        delta[node * m..(node + 1) * m].copy_from_slice(&x);
    }
    Some(delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Stop once `max |u^{k+1} − u^k| / dt` falls to this value.
    pub steady_tol: f64,
    pub max_steps: usize,
    /// `dt = min(h²/4, safety / L)` with `L` the largest row-sum norm of the
    /// field Jacobian over the initial iterate.
    pub safety: f64,
    /// Full-grid initial iterate; defaults to [`blend_guess`].
    pub initial: Option<Vec<f64>>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            steady_tol: 1e-10,
            max_steps: 1_000_000,
            safety: 1.0,
            initial: None,
        }
    }
}

/// Relaxes `u_t = Δu − F(u)` on `[−X, X]²` to a steady state with
/// `(I − dt Δ_h) u^{k+1} = u^k − dt F(u^k)`.
pub fn solve_relax_2d<F: Field + ?Sized>(
    field: &F,
    grid: GridSpec,
    bc: &BoundaryData,
    opts: &FlowOptions,
) -> Result<SolutionGrid, SolverError> {
    grid.validate()?;
    if grid.dim != 2 {
        return Err(SolverError::InvalidGrid("2D solver needs a square grid"));
    }
    let m = field.dim();
    bc.check(&grid, m)?;
    let mut u = match &opts.initial {
        Some(init) => {
            if init.len() != grid.node_count() * m {
                return Err(SolverError::InitialMismatch);
            }
            init.clone()
        }
        None => blend_guess(&grid, bc),
    };
    bc.write_into(&grid, m, &mut u);

    let h = grid.h();
    let mut lip: f64 = 0.0;
    let mut jac = vec![0.0; m * m];
    for node in u.chunks_exact(m) {
        field.jacobian_into(node, &mut jac);
        for row in jac.chunks_exact(m) {
            lip = lip.max(row.iter().map(|x| x.abs()).sum());
        }
    }
    let dt = if lip > 0.0 {
        (h * h / 4.0).min(opts.safety / lip)
    } else {
        h * h / 4.0
    };

    let stepper = ImplicitLaplacian::new(grid, dt);
    let n = grid.n;
    let interior = (n - 2) * (n - 2);
    let mut f = vec![0.0; m];
    let mut rhs = vec![vec![0.0; interior]; m];
    let mut steps = 0;
    let mut converged = false;
    while steps < opts.max_steps {
        for (p, node) in stepper.interior_nodes().enumerate() {
            let un = &u[node * m..(node + 1) * m];
            field.eval_into(un, &mut f);
            for k in 0..m {
                rhs[k][p] = un[k] - dt * f[k];
            }
        }
        let mut change: f64 = 0.0;
        let mut next = u.clone();
        for k in 0..m {
            let sol = stepper.solve(&u, m, k, &rhs[k]);
            for (p, node) in stepper.interior_nodes().enumerate() {
                change = change.max((sol[p] - u[node * m + k]).abs());
                next[node * m + k] = sol[p];
            }
        }
        u = next;
        steps += 1;
        if change / dt <= opts.steady_tol {
            converged = true;
            break;
        }
        if !change.is_finite() {
            break;
        }
    }

    let residual_norm = norm_inf(&residual_vector(&grid, m, &u, field));
    Ok(SolutionGrid {
        grid,
        m,
        values: u,
        residual_norm,
        iterations: steps,
        converged,
    })
}

/// Conjugate-gradient solver for `(I − dt Δ_h) x = b` on interior nodes,
/// with the Dirichlet values moved to the right-hand side.
struct ImplicitLaplacian {
    grid: GridSpec,
    ratio: f64,
}

impl ImplicitLaplacian {
    fn new(grid: GridSpec, dt: f64) -> Self {
        let h = grid.h();
        Self {
            grid,
            ratio: dt / (h * h),
        }
    }

    fn inner(&self) -> usize {
        self.grid.n - 2
    }

    fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.grid.n;
        (1..n - 1).flat_map(move |j| (1..n - 1).map(move |i| j * n + i))
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let w = self.inner();
        for j in 0..w {
            for i in 0..w {
                let p = j * w + i;
                let mut nb = 0.0;
                if i > 0 {
                    nb += x[p - 1];
                }
                if i + 1 < w {
                    nb += x[p + 1];
                }
                if j > 0 {
                    nb += x[p - w];
                }
                if j + 1 < w {
                    nb += x[p + w];
                }
                out[p] = (1.0 + 4.0 * self.ratio) * x[p] - self.ratio * nb;
            }
        }
    }

    /// Solves for component `k`; `state` supplies boundary values and the
    /// warm start.
    fn solve(&self, state: &[f64], m: usize, k: usize, rhs: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let w = self.inner();
        let mut b = rhs.to_vec();
        for j in 0..w {
            for i in 0..w {
                let (gi, gj) = (i + 1, j + 1);
                let mut bnd = 0.0;
                if gi == 1 {
                    bnd += state[(gj * n) * m + k];
                }
                if gi == n - 2 {
                    bnd += state[(gj * n + n - 1) * m + k];
                }
                if gj == 1 {
                    bnd += state[gi * m + k];
                }
                if gj == n - 2 {
                    bnd += state[((n - 1) * n + gi) * m + k];
                }
                b[j * w + i] += self.ratio * bnd;
            }
        }
        let mut x: Vec<f64> = self
            .interior_nodes()
            .map(|node| state[node * m + k])
            .collect();
        let mut ax = vec![0.0; x.len()];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let target = (1e-15 * norm2(&b)).powi(2);
        let mut ap = vec![0.0; x.len()];
        for _ in 0..500 {
            if rr <= target {
                break;
            }
            self.apply(&p, &mut ap);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
                *xi += alpha * pi;
                *ri -= alpha * api;
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
            rr = rr_new;
        }
        x
    }
}

/// Largest change of the 1D solution when the interval is widened from
/// `X` to `1.5X` at the same spacing, over the nodes of the smaller grid.
pub fn endpoint_sensitivity<F: Field + ?Sized>(
    field: &F,
    grid: GridSpec,
    left: &[f64],
    right: &[f64],
    opts: &NewtonOptions,
) -> Result<f64, SolverError> {
    grid.validate()?;
    let bc = BoundaryData::interval(left.to_vec(), right.to_vec());
    let base = solve_bvp_1d(field, grid, &bc, opts)?;
    let extra = (grid.n - 1) / 4;
    let wide_grid = GridSpec::interval(
        grid.half_width + extra as f64 * grid.h(),
        grid.n + 2 * extra,
    );
    let wide = solve_bvp_1d(
        field,
        wide_grid,
        &bc,
        &NewtonOptions {
            initial: None,
            ..opts.clone()
        },
    )?;
    let m = base.m;
    let mut worst: f64 = 0.0;
    for i in 0..grid.n {
        for k in 0..m {
            worst = worst.max((base.values[i * m + k] - wide.values[(i + extra) * m + k]).abs());
        }
    }
    Ok(worst)
}
