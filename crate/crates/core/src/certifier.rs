//! Sampling certificates for the sign conditions behind confinement.
//!
//! Each check evaluates a scalar margin over a bounded sampling region,
//! using a shifted Halton sequence filtered by rejection, then refines the
//! `refine_count` worst samples with a derivative-free coordinate search.
//! The worst value found is the certificate's margin:
//!
//! - `margin ≤ 0` is a [`Status::Fail`] and the witness attains it;
//! - `0 < margin ≤ margin_threshold` is [`Status::Inconclusive`];
//! - otherwise [`Status::Pass`].
//!
//! A pass only speaks for the sampled region, which every certificate
//! records. Evaluation order is fixed, so certificates are bit-reproducible
//! from their seed.

use alloc::vec;
use alloc::vec::Vec;
// Float math for no_std; newer toolchains also see unstable inherent
// methods and misreport this import as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::fields::{Field, FieldError, Moved, VectorField};
use crate::geometry::{ConvexBody, GeometryError, Shape};
use crate::linalg::{dot, norm};
use crate::lowdisc::Halton;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    #[error("dimension mismatch: field has dimension {field}, expected {expected}")]
    DimensionMismatch { field: usize, expected: usize },
    #[error("sampling region is empty")]
    EmptyRegion,
    #[error("invalid option `{name}`: {reason}")]
    InvalidOption {
        name: &'static str,
        reason: &'static str,
    },
    #[error("direction must be a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("half-space level must be nonnegative, got {0}")]
    NegativeLevel(f64),
    #[error("body has no bounded dilation (half-spaces cannot be shell-sampled)")]
    UnboundedBody,
    #[error("body is not a triangle")]
    NotATriangle,
    #[error("point lies inside the closed body (|A⁻¹v| = {0})")]
    InsideBody(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Which of the two symmetry conditions is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryVariant {
    /// `(−u₂, u₁)·F(u) > 0` for `u₁ ≠ u₂`.
    AsStated,
    /// `(u₁ − u₂)(F₁(u) − F₂(u)) > 0` for `u₁ ≠ u₂`, the half-space
    /// condition in the frame rotated by 45°.
    RotatedHalfSpace,
}

/// The region a certificate speaks for.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `c + f_out(D − c)` minus `c + f_in(D̄ − c)`.
    Shell {
        inner_factor: f64,
        outer_factor: f64,
        center: Vec<f64>,
    },
    /// Box points with `u·direction ≥ level + offset`.
    HalfSpaceBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
        direction: Vec<f64>,
        level: f64,
        offset: f64,
    },
    /// Side of a triangle, checked as a half-space in the moved frame
    /// `w = R(u − origin)` where the side lies on `w₁ = 0`.
    TriangleSide {
        side: usize,
        origin: Vec<f64>,
        normal: Vec<f64>,
        span: f64,
        offset: f64,
    },
    /// Box points with `|u₁ − u₂| > band`.
    SymmetryBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
        band: f64,
        variant: SymmetryVariant,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub status: Status,
    pub worst_margin: f64,
    pub witness: Vec<f64>,
    pub samples_used: usize,
    pub region: Region,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Number of worst samples handed to the local search.
    pub refine_count: usize,
    /// Margin evaluations allowed per local search.
    pub refine_budget: usize,
    pub margin_threshold: f64,
    /// Gap kept between the sampling region and the set where the checked
    /// margin vanishes: inner shell factor `1 + exclusion`, half-space
    /// offset, and symmetry band.
    pub exclusion: f64,
    /// Half-width of the triangle side boxes, in triangle diameters.
    pub triangle_span: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            seed: 0,
            refine_count: 16,
            refine_budget: 200,
            margin_threshold: 1e-9,
            exclusion: 1e-3,
            triangle_span: 2.0,
        }
    }
}

impl CertifyOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    fn validate(&self) -> Result<(), CertifyError> {
        if self.n_samples == 0 {
            return Err(CertifyError::InvalidOption {
                name: "n_samples",
                reason: "must be at least 1",
            });
        }
        if !(self.margin_threshold >= 0.0) {
            return Err(CertifyError::InvalidOption {
                name: "margin_threshold",
                reason: "must be nonnegative",
            });
        }
        if !(self.exclusion >= 0.0) {
            return Err(CertifyError::InvalidOption {
                name: "exclusion",
                reason: "must be nonnegative",
            });
        }
        if !(self.triangle_span > 0.0) {
            return Err(CertifyError::InvalidOption {
                name: "triangle_span",
                reason: "must be positive",
            });
        }
        Ok(())
    }

    fn status(&self, margin: f64) -> Status {
        if margin <= 0.0 || margin.is_nan() {
            Status::Fail
        } else if margin <= self.margin_threshold {
            Status::Inconclusive
        } else {
            Status::Pass
        }
    }
}

struct Outcome {
    margin: f64,
    witness: Vec<f64>,
    samples: usize,
}

/// Samples `margin` over `{u ∈ [lo, hi] : inside(u)}` and refines the worst
/// points.
fn search<I, M>(
    lo: &[f64],
    hi: &[f64],
    inside: I,
    margin: M,
    opts: &CertifyOptions,
) -> Result<Outcome, CertifyError>
where
    I: Fn(&[f64]) -> bool,
    M: Fn(&[f64]) -> f64,
{
    let dim = lo.len();
    let halton = Halton::new(dim, opts.seed);
    let max_draws = 64 * opts.n_samples as u64 + 1024;
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.n_samples);
    let mut i = 1u64;
    while samples.len() < opts.n_samples && i <= max_draws {
        let unit = halton.point(i);
        i += 1;
        let u: Vec<f64> = unit
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(t, (l, h))| l + t * (h - l))
            .collect();
        if inside(&u) {
            samples.push((margin(&u), u));
        }
    }
    if samples.is_empty() {
        return Err(CertifyError::EmptyRegion);
    }
    let n = samples.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| samples[a].0.total_cmp(&samples[b].0).then(a.cmp(&b)));

    let mut best = samples[order[0]].clone();
    let steps0: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.05 * (h - l)).collect();
    for &k in order.iter().take(opts.refine_count) {
        let (m, u) = coordinate_search(&samples[k], &steps0, &inside, &margin, opts.refine_budget);
        if m < best.0 {
            best = (m, u);
        }
    }
    Ok(Outcome {
        margin: best.0,
        witness: best.1,
        samples: n,
    })
}

/// Compass search: try ±step along each axis, keep strict improvements that
/// stay in the region, halve the steps after an unproductive sweep.
fn coordinate_search<I, M>(
    start: &(f64, Vec<f64>),
    steps0: &[f64],
    inside: &I,
    margin: &M,
    budget: usize,
) -> (f64, Vec<f64>)
where
    I: Fn(&[f64]) -> bool,
    M: Fn(&[f64]) -> f64,
{
    let (mut best, mut u) = (start.0, start.1.clone());
    let mut steps = steps0.to_vec();
    let mut evals = 0;
    let min_step = steps0.iter().fold(0.0_f64, |m, s| m.max(*s)) * 1e-12;
    while evals < budget && steps.iter().any(|&s| s > min_step) {
        let mut improved = false;
        for k in 0..u.len() {
            for sign in [1.0, -1.0] {
                if evals >= budget {
                    break;
                }
                let mut trial = u.clone();
                trial[k] += sign * steps[k];
                if !inside(&trial) {
                    continue;
                }
                evals += 1;
                let m = margin(&trial);
                if m < best {
                    best = m;
                    u = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    (best, u)
}

/// `(u − u₀)·F(u)` with `u₀` the closest boundary point.
pub fn convex_margin<F: Field + ?Sized>(field: &F, body: &ConvexBody, u: &[f64]) -> f64 {
    let u0 = body.project_boundary(u);
    let f = field.eval(u);
    u.iter()
        .zip(&u0)
        .zip(&f)
        .map(|((x, y), g)| (x - y) * g)
        .sum()
}

fn check_dim<F: Field + ?Sized>(field: &F, expected: usize) -> Result<(), CertifyError> {
    if field.dim() != expected {
        return Err(CertifyError::DimensionMismatch {
            field: field.dim(),
            expected,
        });
    }
    Ok(())
}

/// Checks `(u − u₀)·F(u) > 0` on the shell between the dilations of the
/// body by `1 + exclusion` and `shell_outer` about its center.
pub fn certify_convex_condition<F: Field + ?Sized>(
    field: &F,
    body: &ConvexBody,
    shell_outer: f64,
    opts: &CertifyOptions,
) -> Result<Certificate, CertifyError> {
    opts.validate()?;
    check_dim(field, body.dim())?;
    let inner = 1.0 + opts.exclusion;
    if !(shell_outer > inner) || !shell_outer.is_finite() {
        return Err(CertifyError::InvalidOption {
            name: "shell_outer",
            reason: "must be finite and exceed the inner shell factor",
        });
    }
    let center = body.center().ok_or(CertifyError::UnboundedBody)?;
    let (blo, bhi) = body.bounding_box().ok_or(CertifyError::UnboundedBody)?;
    let scale = |p: &[f64], f: f64| -> Vec<f64> {
        p.iter()
            .zip(&center)
            .map(|(x, c)| c + f * (x - c))
            .collect()
    };
    let (lo, hi) = (scale(&blo, shell_outer), scale(&bhi, shell_outer));
    let inside = |u: &[f64]| {
        body.signed_distance(&scale(u, 1.0 / shell_outer)) <= 0.0
            && body.signed_distance(&scale(u, 1.0 / inner)) > 0.0
    };
    let out = search(&lo, &hi, inside, |u| convex_margin(field, body, u), opts)?;
    Ok(Certificate {
        status: opts.status(out.margin),
        worst_margin: out.margin,
        witness: out.witness,
        samples_used: out.samples,
        region: Region::Shell {
            inner_factor: inner,
            outer_factor: shell_outer,
            center,
        },
        seed: opts.seed,
    })
}

/// Checks `F(u)·e > 0` on box points with `u·e ≥ level + exclusion`.
pub fn certify_halfspace<F: Field + ?Sized>(
    field: &F,
    direction: &[f64],
    level: f64,
    lo: &[f64],
    hi: &[f64],
    opts: &CertifyOptions,
) -> Result<Certificate, CertifyError> {
    opts.validate()?;
    check_dim(field, direction.len())?;
    check_dim(field, lo.len())?;
    check_dim(field, hi.len())?;
    let len = norm(direction);
    if (len - 1.0).abs() > 1e-12 {
        return Err(CertifyError::NonUnitDirection(len));
    }
    if !(level >= 0.0) {
        return Err(CertifyError::NegativeLevel(level));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(CertifyError::EmptyRegion);
    }
    let threshold = level + opts.exclusion;
    let out = search(
        lo,
        hi,
        |u| dot(u, direction) >= threshold,
        |u| dot(&field.eval(u), direction),
        opts,
    )?;
    Ok(Certificate {
        status: opts.status(out.margin),
        worst_margin: out.margin,
        witness: out.witness,
        samples_used: out.samples,
        region: Region::HalfSpaceBox {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            direction: direction.to_vec(),
            level,
            offset: opts.exclusion,
        },
        seed: opts.seed,
    })
}

/// Per-side half-space certificates for a triangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleCertificate {
    pub status: Status,
    pub worst_margin: f64,
    pub sides: Vec<Certificate>,
}

/// For every side, moves the triangle so that the side lies on `{w₁ = 0}`
/// with the triangle in `{w₁ < 0}`, and certifies the half-space condition
/// with level 0 for the moved field. Witnesses are reported in the original
/// coordinates.
pub fn certify_triangle<F: Field + ?Sized>(
    field: &F,
    triangle: &ConvexBody,
    opts: &CertifyOptions,
) -> Result<TriangleCertificate, CertifyError> {
    opts.validate()?;
    let (vertices, normals) = match triangle.shape() {
        Shape::Polygon { vertices, normals } if vertices.len() == 3 => (vertices, normals),
        _ => return Err(CertifyError::NotATriangle),
    };
    check_dim(field, 2)?;
    let diameter = (0..3)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % 3]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    let span = opts.triangle_span * diameter;

    let mut sides = Vec::with_capacity(3);
    for (side, (v, n)) in vertices.iter().zip(normals).enumerate() {
        // Rows: outward normal, then the side direction.
        let rotation = vec![n[0], n[1], -n[1], n[0]];
        let moved = Moved::new(field, rotation, v.to_vec());
        let cert = certify_halfspace(&moved, &[1.0, 0.0], 0.0, &[0.0, -span], &[span, span], opts)?;
        sides.push(Certificate {
            witness: moved.to_original(&cert.witness),
            region: Region::TriangleSide {
                side,
                origin: v.to_vec(),
                normal: n.to_vec(),
                span,
                offset: opts.exclusion,
            },
            ..cert
        });
    }
    let worst_margin = sides
        .iter()
        .map(|c| c.worst_margin)
        .fold(f64::INFINITY, f64::min);
    let status = if sides.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if sides.iter().all(|c| c.status == Status::Pass) {
        Status::Pass
    } else {
        Status::Inconclusive
    };
    Ok(TriangleCertificate {
        status,
        worst_margin,
        sides,
    })
}

pub fn symmetry_margin<F: Field + ?Sized>(field: &F, variant: SymmetryVariant, u: &[f64]) -> f64 {
    let f = field.eval(u);
    match variant {
        SymmetryVariant::AsStated => -u[1] * f[0] + u[0] * f[1],
        SymmetryVariant::RotatedHalfSpace => (u[0] - u[1]) * (f[0] - f[1]),
    }
}

/// Checks one of the two symmetry conditions on box points with
/// `|u₁ − u₂| > exclusion`.
pub fn certify_symmetry_condition<F: Field + ?Sized>(
    field: &F,
    variant: SymmetryVariant,
    lo: &[f64],
    hi: &[f64],
    opts: &CertifyOptions,
) -> Result<Certificate, CertifyError> {
    opts.validate()?;
    check_dim(field, 2)?;
    if lo.len() != 2 || hi.len() != 2 || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(CertifyError::EmptyRegion);
    }
    let band = opts.exclusion;
    let out = search(
        lo,
        hi,
        |u| (u[0] - u[1]).abs() > band,
        |u| symmetry_margin(field, variant, u),
        opts,
    )?;
    Ok(Certificate {
        status: opts.status(out.margin),
        worst_margin: out.margin,
        witness: out.witness,
        samples_used: out.samples,
        region: Region::SymmetryBox {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            band,
            variant,
        },
        seed: opts.seed,
    })
}

/// Both symmetry conditions side by side; they are not equivalent and a
/// field may satisfy one but not the other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryComparison {
    pub as_stated: Certificate,
    pub rotated_half_space: Certificate,
    pub agree: bool,
}

pub fn compare_symmetry_conditions<F: Field + ?Sized>(
    field: &F,
    lo: &[f64],
    hi: &[f64],
    opts: &CertifyOptions,
) -> Result<SymmetryComparison, CertifyError> {
    let as_stated = certify_symmetry_condition(field, SymmetryVariant::AsStated, lo, hi, opts)?;
    let rotated_half_space =
        certify_symmetry_condition(field, SymmetryVariant::RotatedHalfSpace, lo, hi, opts)?;
    let agree = as_stated.status == rotated_half_space.status;
    Ok(SymmetryComparison {
        as_stated,
        rotated_half_space,
        agree,
    })
}

/// `F(v)·(v − v₀)` for the transformed Ginzburg-Landau field and the
/// ellipsoid `{|A⁻¹v| = 1}`, at a point outside the closed ellipsoid.
pub fn gl_anisotropic_margin(diag: &[f64], v: &[f64]) -> Result<f64, CertifyError> {
    let body = ConvexBody::ellipsoid(diag.to_vec())?;
    let field = VectorField::ginzburg_landau(diag.to_vec())?;
    if v.len() != diag.len() {
        return Err(CertifyError::DimensionMismatch {
            field: diag.len(),
            expected: v.len(),
        });
    }
    let rho = v
        .iter()
        .zip(diag)
        .map(|(x, a)| (x / a) * (x / a))
        .sum::<f64>()
        .sqrt();
    if !(rho > 1.0) {
        return Err(CertifyError::InsideBody(rho));
    }
    Ok(convex_margin(&field, &body, v))
}
