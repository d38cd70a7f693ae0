//! Right-hand sides `F` of `Δu = F(u)`.
//!
//! [`Field`] is the evaluation interface used by the certifier and the
//! solvers. [`VectorField`] is the catalog of concrete systems; the wrapper
//! [`Moved`] conjugates any field by a Euclidean motion of state space.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
// Float math for no_std; newer toolchains also see unstable inherent
// methods and misreport this import as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::linalg::{mat_mul, mat_t_vec, mat_vec, transpose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("Ginzburg-Landau diagonal entry {index} must be positive and finite, got {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("the three wells must not lie on a common line")]
    CollinearWells,
    #[error("Gross-Pitaevskii parameter {name} must be positive and finite, got {value}")]
    NonPositiveGp { name: &'static str, value: f64 },
    #[error("polynomial coefficient or shape is invalid: {0}")]
    BadPolynomial(&'static str),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("dimension mismatch: field has dimension {field}, point has {point}")]
    DimensionMismatch { field: usize, point: usize },
}

/// A map `F: ℝᵐ → ℝᵐ` with its Jacobian.
pub trait Field {
    fn dim(&self) -> usize;

    fn eval_into(&self, u: &[f64], out: &mut [f64]);

    /// Row-major `m × m` Jacobian, `out[i*m + j] = ∂F_i/∂u_j`.
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]);

    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(u, &mut out);
        out
    }

    fn jacobian(&self, u: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![0.0; m * m];
        self.jacobian_into(u, &mut out);
        out
    }

    fn try_eval(&self, u: &[f64]) -> Result<Vec<f64>, FieldError> {
        if u.len() != self.dim() {
            return Err(FieldError::DimensionMismatch {
                field: self.dim(),
                point: u.len(),
            });
        }
        Ok(self.eval(u))
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        (**self).eval_into(u, out)
    }
    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        (**self).jacobian_into(u, out)
    }
}

/// Central finite-difference Jacobian with step `h`.
pub fn fd_jacobian<F: Field + ?Sized>(field: &F, u: &[f64], h: f64) -> Vec<f64> {
    let m = field.dim();
    let mut out = vec![0.0; m * m];
    let mut up = u.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for j in 0..m {
        up[j] = u[j] + h;
        field.eval_into(&up, &mut fp);
        up[j] = u[j] - h;
        field.eval_into(&up, &mut fm);
        up[j] = u[j];
        for i in 0..m {
            out[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

/// One monomial `coef · Π u_k^powers[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    dim: usize,
    components: Vec<Vec<Term>>,
}

impl Polynomial {
    pub fn new(dim: usize, components: Vec<Vec<Term>>) -> Result<Self, FieldError> {
        if dim == 0 || components.len() != dim {
            return Err(FieldError::BadPolynomial(
                "need one component per dimension",
            ));
        }
        for t in components.iter().flatten() {
            if !t.coef.is_finite() {
                return Err(FieldError::BadPolynomial("non-finite coefficient"));
            }
            if t.powers.len() != dim {
                return Err(FieldError::BadPolynomial(
                    "power vector length differs from dimension",
                ));
            }
        }
        Ok(Self { dim, components })
    }

    /// Constant field `F ≡ c`.
    pub fn constant(c: &[f64]) -> Self {
        let dim = c.len();
        let components = c
            .iter()
            .map(|&coef| {
                vec![Term {
                    coef,
                    powers: vec![0; dim],
                }]
            })
            .collect();
        Self { dim, components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Vec<Term>] {
        &self.components
    }

    fn monomial(u: &[f64], powers: &[u32], skip: Option<usize>) -> f64 {
        let mut v = 1.0;
        for (k, (&x, &p)) in u.iter().zip(powers).enumerate() {
            let p = if skip == Some(k) { p - 1 } else { p };
            if p > 0 {
                v *= x.powi(p as i32);
            }
        }
        v
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, comp) in out.iter_mut().zip(&self.components) {
            *o = comp
                .iter()
                .map(|t| t.coef * Self::monomial(u, &t.powers, None))
                .sum();
        }
    }

    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for (i, comp) in self.components.iter().enumerate() {
            for j in 0..m {
                out[i * m + j] = comp
                    .iter()
                    .filter(|t| t.powers[j] > 0)
                    .map(|t| t.coef * t.powers[j] as f64 * Self::monomial(u, &t.powers, Some(j)))
                    .sum();
            }
        }
    }
}

/// Derived Gross-Pitaevskii quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpParameters {
    pub a: f64,
    pub b: f64,
    pub segregation: bool,
}

/// `a = √μ / g11^¼`, `b = √μ / g22^¼`; segregation iff `g12 > √(g11 g22)`.
pub fn gp_parameters(g11: f64, g22: f64, g12: f64, mu: f64) -> Result<GpParameters, FieldError> {
    for (name, value) in [("g11", g11), ("g22", g22), ("g12", g12), ("mu", mu)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(FieldError::NonPositiveGp { name, value });
        }
    }
    Ok(GpParameters {
        a: mu.sqrt() / g11.powf(0.25),
        b: mu.sqrt() / g22.powf(0.25),
        segregation: g12 > (g11 * g22).sqrt(),
    })
}

/// Triple-well potential `W(u) = |u−a|²|u−b|²|u−c|²`.
pub fn allen_cahn_potential(u: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    sq_dist(u, a) * sq_dist(u, b) * sq_dist(u, c)
}

/// `∇W(u) = 2(u−a)|u−b|²|u−c|² + 2(u−b)|u−a|²|u−c|² + 2(u−c)|u−a|²|u−b|²`.
pub fn allen_cahn_gradient(u: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    let (pa, pb, pc) = (sq_dist(u, a), sq_dist(u, b), sq_dist(u, c));
    let mut g = [0.0; 2];
    for k in 0..2 {
        g[k] = 2.0 * ((u[k] - a[k]) * pb * pc + (u[k] - b[k]) * pa * pc + (u[k] - c[k]) * pa * pb);
    }
    g
}

fn sq_dist(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1])
}

/// Catalog of right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    /// Anisotropic Ginzburg-Landau `AΔu = (|u|²−1)u` written for `v = Au`:
    /// `F(v) = (|A⁻¹v|²−1) A⁻¹v`.
    GinzburgLandau {
        diag: Vec<f64>,
    },
    /// `∇W` for the triple-well potential with wells `a, b, c`.
    AllenCahn3 {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
    },
    /// Coupled Gross-Pitaevskii wall system.
    GrossPitaevskii {
        g11: f64,
        g22: f64,
        g12: f64,
        mu: f64,
        a: f64,
        b: f64,
    },
    /// `F(u₁,u₂) = (u₁−u₂+u₁³, u₂−u₁+u₂³)`, for which
    /// `(u₁−u₂)(F₁−F₂) = (u₁−u₂)²(2+u₁²+u₁u₂+u₂²)`.
    SymmetryPair,
    Polynomial {
        poly: Polynomial,
    },
    Negated {
        inner: Box<VectorField>,
    },
}

impl VectorField {
    pub fn ginzburg_landau(diag: Vec<f64>) -> Result<Self, FieldError> {
        if diag.is_empty() {
            return Err(FieldError::NonPositiveDiagonal {
                index: 0,
                value: f64::NAN,
            });
        }
        for (index, &value) in diag.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FieldError::NonPositiveDiagonal { index, value });
            }
        }
        Ok(Self::GinzburgLandau { diag })
    }

    pub fn allen_cahn(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<Self, FieldError> {
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let scale = sq_dist(a, b).max(sq_dist(a, c)).max(sq_dist(b, c));
        if !(cross.abs() > 1e-12 * scale) {
            return Err(FieldError::CollinearWells);
        }
        Ok(Self::AllenCahn3 { a, b, c })
    }

    pub fn gross_pitaevskii(g11: f64, g22: f64, g12: f64, mu: f64) -> Result<Self, FieldError> {
        let p = gp_parameters(g11, g22, g12, mu)?;
        Ok(Self::GrossPitaevskii {
            g11,
            g22,
            g12,
            mu,
            a: p.a,
            b: p.b,
        })
    }

    pub fn polynomial(poly: Polynomial) -> Self {
        Self::Polynomial { poly }
    }

    pub fn negated(self) -> Self {
        match self {
            Self::Negated { inner } => *inner,
            other => Self::Negated {
                inner: Box::new(other),
            },
        }
    }

    /// Rebuilds the field with one named parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, FieldError> {
        match self {
            Self::GrossPitaevskii {
                g11, g22, g12, mu, ..
            } => {
                let (mut g11, mut g22, mut g12, mut mu) = (*g11, *g22, *g12, *mu);
                match name {
                    "g11" => g11 = value,
                    "g22" => g22 = value,
                    "g12" => g12 = value,
                    "mu" => mu = value,
                    _ => return Err(FieldError::UnknownParameter(name.into())),
                }
                Self::gross_pitaevskii(g11, g22, g12, mu)
            }
            Self::GinzburgLandau { diag } => {
                let index = name
                    .strip_prefix('a')
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&i| i >= 1 && i <= diag.len())
                    .ok_or_else(|| FieldError::UnknownParameter(name.into()))?;
                let mut diag = diag.clone();
                diag[index - 1] = value;
                Self::ginzburg_landau(diag)
            }
            Self::Negated { inner } => Ok(inner.with_param(name, value)?.negated()),
            _ => Err(FieldError::UnknownParameter(name.into())),
        }
    }
}

impl Field for VectorField {
    fn dim(&self) -> usize {
        match self {
            Self::GinzburgLandau { diag } => diag.len(),
            Self::AllenCahn3 { .. } | Self::GrossPitaevskii { .. } | Self::SymmetryPair => 2,
            Self::Polynomial { poly } => poly.dim(),
            Self::Negated { inner } => inner.dim(),
        }
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Self::GinzburgLandau { diag } => {
                let s: f64 = u.iter().zip(diag).map(|(v, a)| (v / a) * (v / a)).sum();
                for ((o, v), a) in out.iter_mut().zip(u).zip(diag) {
                    *o = (s - 1.0) * (v / a);
                }
            }
            Self::AllenCahn3 { a, b, c } => {
                let g = allen_cahn_gradient([u[0], u[1]], *a, *b, *c);
                out[..2].copy_from_slice(&g);
            }
            Self::GrossPitaevskii {
                g11,
                g22,
                g12,
                a,
                b,
                ..
            } => {
                let (u1, u2) = (u[0], u[1]);
                out[0] = g11 * (u1 * u1 - a * a) * u1 + g12 * u1 * u2 * u2;
                out[1] = g22 * (u2 * u2 - b * b) * u2 + g12 * u1 * u1 * u2;
            }
            Self::SymmetryPair => {
                let (u1, u2) = (u[0], u[1]);
                out[0] = u1 - u2 + u1 * u1 * u1;
                out[1] = u2 - u1 + u2 * u2 * u2;
            }
            Self::Polynomial { poly } => poly.eval_into(u, out),
            Self::Negated { inner } => {
                inner.eval_into(u, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
        }
    }

    fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Self::GinzburgLandau { diag } => {
                let m = diag.len();
                let w: Vec<f64> = u.iter().zip(diag).map(|(v, a)| v / a).collect();
                let s: f64 = w.iter().map(|x| x * x).sum();
                for i in 0..m {
                    for j in 0..m {
                        let delta = if i == j { s - 1.0 } else { 0.0 };
                        out[i * m + j] = (delta + 2.0 * w[i] * w[j]) / diag[j];
                    }
                }
            }
            Self::AllenCahn3 { a, b, c } => {
                let x = [u[0], u[1]];
                let p = [x[0] - a[0], x[1] - a[1]];
                let q = [x[0] - b[0], x[1] - b[1]];
                let r = [x[0] - c[0], x[1] - c[1]];
                let (pp, qq, rr) = (sq_dist(x, *a), sq_dist(x, *b), sq_dist(x, *c));
                for i in 0..2 {
                    for j in 0..2 {
                        let diag = if i == j {
                            qq * rr + pp * rr + pp * qq
                        } else {
                            0.0
                        };
                        let outer = p[i] * (2.0 * q[j] * rr + 2.0 * r[j] * qq)
                            + q[i] * (2.0 * p[j] * rr + 2.0 * r[j] * pp)
                            + r[i] * (2.0 * p[j] * qq + 2.0 * q[j] * pp);
                        out[i * 2 + j] = 2.0 * (diag + outer);
                    }
                }
            }
            Self::GrossPitaevskii {
                g11,
                g22,
                g12,
                a,
                b,
                ..
            } => {
                let (u1, u2) = (u[0], u[1]);
                out[0] = g11 * (3.0 * u1 * u1 - a * a) + g12 * u2 * u2;
                out[1] = 2.0 * g12 * u1 * u2;
                out[2] = 2.0 * g12 * u1 * u2;
                out[3] = g22 * (3.0 * u2 * u2 - b * b) + g12 * u1 * u1;
            }
            Self::SymmetryPair => {
                out[0] = 1.0 + 3.0 * u[0] * u[0];
                out[1] = -1.0;
                out[2] = -1.0;
                out[3] = 1.0 + 3.0 * u[1] * u[1];
            }
            Self::Polynomial { poly } => poly.jacobian_into(u, out),
            Self::Negated { inner } => {
                inner.jacobian_into(u, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
        }
    }
}

/// Maps a solution of the transformed Ginzburg-Landau system back to the
/// original variable, `u = A⁻¹v`.
pub fn gl_to_original(diag: &[f64], v: &[f64]) -> Vec<f64> {
    v.iter().zip(diag).map(|(x, a)| x / a).collect()
}

/// A field conjugated by the Euclidean motion `w = R(u − shift)`:
/// `G(w) = R F(Rᵀw + shift)`. If `Δu = F(u)` then `Δw = G(w)`.
#[derive(Debug, Clone)]
pub struct Moved<F> {
    inner: F,
    rotation: Vec<f64>,
    shift: Vec<f64>,
}

impl<F: Field> Moved<F> {
    /// `rotation` is row-major `m × m` and assumed orthogonal.
    pub fn new(inner: F, rotation: Vec<f64>, shift: Vec<f64>) -> Self {
        let m = inner.dim();
        assert_eq!(rotation.len(), m * m);
        assert_eq!(shift.len(), m);
        Self {
            inner,
            rotation,
            shift,
        }
    }

    /// Original coordinates `u = Rᵀw + shift`.
    pub fn to_original(&self, w: &[f64]) -> Vec<f64> {
        let m = self.inner.dim();
        let mut u = mat_t_vec(&self.rotation, m, w);
        u.iter_mut().zip(&self.shift).for_each(|(x, s)| *x += s);
        u
    }

    /// Moved coordinates `w = R(u − shift)`.
    pub fn to_moved(&self, u: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = u.iter().zip(&self.shift).map(|(x, s)| x - s).collect();
        mat_vec(&self.rotation, self.inner.dim(), &d)
    }
}

impl<F: Field> Field for Moved<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_into(&self, w: &[f64], out: &mut [f64]) {
        let f = self.inner.eval(&self.to_original(w));
        out.copy_from_slice(&mat_vec(&self.rotation, self.dim(), &f));
    }

    fn jacobian_into(&self, w: &[f64], out: &mut [f64]) {
        let m = self.dim();
        let j = self.inner.jacobian(&self.to_original(w));
        let rj = mat_mul(&self.rotation, &j, m);
        out.copy_from_slice(&mat_mul(&rj, &transpose(&self.rotation, m), m));
    }
}
