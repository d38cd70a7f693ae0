//! Convex bodies in state space.
//!
//! Every body exposes the signed distance `d(u)` to its boundary (negative
//! inside), the closest boundary point and the outward unit normal. The
//! signed distance of a convex body is a convex function of `u`, which is
//! what the confinement argument rests on; the property tests in this crate
//! exercise that directly.

use alloc::vec;
use alloc::vec::Vec;
// Float math for no_std; newer toolchains also see unstable inherent
// methods and misreport this import as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::linalg::{dist, dot, norm};
use crate::DEFAULT_GEOMETRIC_TOL;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("ball radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("ellipsoid semi-axis {index} must be positive and finite, got {value}")]
    NonPositiveSemiAxis { index: usize, value: f64 },
    #[error("body dimension must be at least 1")]
    ZeroDimension,
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(&'static str),
    #[error("half-space normal must be nonzero and finite")]
    DegenerateNormal,
    #[error("point is {distance:e} away from the boundary (tolerance {tol:e})")]
    NotOnBoundary { distance: f64, tol: f64 },
    #[error("dimension mismatch: body has dimension {body}, point has {point}")]
    DimensionMismatch { body: usize, point: usize },
}

/// The concrete convex region. Balls and ellipsoids are centered at the
/// origin; polygons are stored counter-clockwise with unit outward edge
/// normals; a half-space is `{u : u·normal < level}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball {
        dim: usize,
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
    },
    HalfSpace {
        normal: Vec<f64>,
        level: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexBody {
    shape: Shape,
    tol: f64,
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::NonPositiveRadius(radius));
        }
        Ok(Self::from_shape(Shape::Ball { dim, radius }))
    }

    /// Axis-aligned ellipsoid `{v : |A⁻¹v| < 1}` with `A = diag(semi_axes)`.
    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self, GeometryError> {
        if semi_axes.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        for (index, &value) in semi_axes.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GeometryError::NonPositiveSemiAxis { index, value });
            }
        }
        Ok(Self::from_shape(Shape::Ellipsoid { semi_axes }))
    }

    /// Convex polygon from its vertices in either orientation.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegeneratePolygon("fewer than 3 vertices"));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::DegeneratePolygon("non-finite vertex"));
        }
        let n = vertices.len();
        let area2: f64 = (0..n)
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                p[0] * q[1] - p[1] * q[0]
            })
            .sum();
        let scale = vertices
            .iter()
            .flatten()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
            .max(1.0);
        if area2.abs() <= 1e-12 * scale * scale {
            return Err(GeometryError::DegeneratePolygon("vertices are collinear"));
        }
        let mut vertices = vertices;
        if area2 < 0.0 {
            vertices.reverse();
        }
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let (p, q, r) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let e = [q[0] - p[0], q[1] - p[1]];
            let f = [r[0] - q[0], r[1] - q[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if len <= 1e-14 * scale {
                return Err(GeometryError::DegeneratePolygon("repeated vertex"));
            }
            if e[0] * f[1] - e[1] * f[0] <= 0.0 {
                return Err(GeometryError::DegeneratePolygon(
                    "vertices are not strictly convex",
                ));
            }
            normals.push([e[1] / len, -e[0] / len]);
        }
        Ok(Self::from_shape(Shape::Polygon { vertices, normals }))
    }

    pub fn triangle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<Self, GeometryError> {
        Self::polygon(vec![a, b, c])
    }

    /// `{u : u·normal < level}`; the normal is normalized here.
    pub fn half_space(normal: Vec<f64>, level: f64) -> Result<Self, GeometryError> {
        let len = norm(&normal);
        if normal.is_empty() || !(len > 0.0 && len.is_finite()) || !level.is_finite() {
            return Err(GeometryError::DegenerateNormal);
        }
        let normal = normal.iter().map(|c| c / len).collect();
        Ok(Self::from_shape(Shape::HalfSpace { normal, level }))
    }

    fn from_shape(shape: Shape) -> Self {
        Self {
            shape,
            tol: DEFAULT_GEOMETRIC_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol.abs();
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Ball { dim, .. } => *dim,
            Shape::Ellipsoid { semi_axes } => semi_axes.len(),
            Shape::Polygon { .. } => 2,
            Shape::HalfSpace { normal, .. } => normal.len(),
        }
    }

    /// Balls and ellipsoids are strictly convex; polygons and half-spaces
    /// are not.
    pub fn is_strictly_convex(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. } | Shape::Ellipsoid { .. })
    }

    /// Dilation center: the origin for centered bodies, the vertex mean for
    /// polygons. Half-spaces have none.
    pub fn center(&self) -> Option<Vec<f64>> {
        match &self.shape {
            Shape::Ball { dim, .. } => Some(vec![0.0; *dim]),
            Shape::Ellipsoid { semi_axes } => Some(vec![0.0; semi_axes.len()]),
            Shape::Polygon { vertices, .. } => {
                let n = vertices.len() as f64;
                let (sx, sy) = vertices
                    .iter()
                    .fold((0.0, 0.0), |(x, y), v| (x + v[0], y + v[1]));
                Some(vec![sx / n, sy / n])
            }
            Shape::HalfSpace { .. } => None,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` for bounded bodies.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.shape {
            Shape::Ball { dim, radius } => Some((vec![-radius; *dim], vec![*radius; *dim])),
            Shape::Ellipsoid { semi_axes } => {
                Some((semi_axes.iter().map(|a| -a).collect(), semi_axes.clone()))
            }
            Shape::Polygon { vertices, .. } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                Some((lo, hi))
            }
            Shape::HalfSpace { .. } => None,
        }
    }

    fn check_dim(&self, u: &[f64]) -> Result<(), GeometryError> {
        if u.len() == self.dim() {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                body: self.dim(),
                point: u.len(),
            })
        }
    }

    /// Closest boundary point, computed without the on-boundary shortcut.
    fn closest(&self, u: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Ball { radius, .. } => {
                let r = norm(u);
                if r == 0.0 {
                    let mut p = vec![0.0; u.len()];
                    p[0] = *radius;
                    p
                } else {
                    u.iter().map(|c| c * radius / r).collect()
                }
            }
            Shape::Ellipsoid { semi_axes } => ellipsoid_closest(semi_axes, u),
            Shape::Polygon { vertices, .. } => {
                let (_, p) = polygon_closest(vertices, [u[0], u[1]]);
                p.to_vec()
            }
            Shape::HalfSpace { normal, level } => {
                let d = dot(u, normal) - level;
                u.iter().zip(normal).map(|(x, n)| x - d * n).collect()
            }
        }
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    ///
    /// Panics on a dimension mismatch; use [`ConvexBody::try_signed_distance`]
    /// for a checked variant.
    pub fn signed_distance(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim(), "point dimension does not match body");
        match &self.shape {
            Shape::Ball { radius, .. } => norm(u) - radius,
            Shape::HalfSpace { normal, level } => dot(u, normal) - level,
            Shape::Ellipsoid { semi_axes } => {
                let rho2: f64 = u
                    .iter()
                    .zip(semi_axes)
                    .map(|(x, a)| (x / a) * (x / a))
                    .sum();
                let d = dist(u, &ellipsoid_closest(semi_axes, u));
                if rho2 < 1.0 {
                    -d
                } else {
                    d
                }
            }
            Shape::Polygon { vertices, normals } => {
                let p = [u[0], u[1]];
                let (d, _) = polygon_closest(vertices, p);
                let inside = vertices
                    .iter()
                    .zip(normals)
                    .all(|(v, n)| n[0] * (p[0] - v[0]) + n[1] * (p[1] - v[1]) <= 0.0);
                if inside {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn try_signed_distance(&self, u: &[f64]) -> Result<f64, GeometryError> {
        self.check_dim(u)?;
        Ok(self.signed_distance(u))
    }

    /// Closest point on the boundary. Points already within tolerance of the
    /// boundary are returned unchanged.
    pub fn project_boundary(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim(), "point dimension does not match body");
        let p = self.closest(u);
        if dist(u, &p) <= self.tol {
            u.to_vec()
        } else {
            p
        }
    }

    pub fn try_project_boundary(&self, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_dim(u)?;
        Ok(self.project_boundary(u))
    }

    /// Outward unit normal at a boundary point. Polygon corners report the
    /// renormalized average of the adjacent edge normals.
    pub fn outward_normal(&self, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_dim(p)?;
        let d = self.signed_distance(p);
        if d.abs() > self.tol {
            return Err(GeometryError::NotOnBoundary {
                distance: d,
                tol: self.tol,
            });
        }
        let n = match &self.shape {
            Shape::Ball { .. } => {
                let r = norm(p);
                p.iter().map(|c| c / r).collect()
            }
            Shape::Ellipsoid { semi_axes } => {
                let g: Vec<f64> = p.iter().zip(semi_axes).map(|(x, a)| x / (a * a)).collect();
                let len = norm(&g);
                g.iter().map(|c| c / len).collect()
            }
            Shape::Polygon { vertices, normals } => {
                let q = [p[0], p[1]];
                let k = vertices.len();
                let mut acc = [0.0, 0.0];
                for i in 0..k {
                    let (dseg, _) = segment_closest(vertices[i], vertices[(i + 1) % k], q);
                    if dseg <= self.tol {
                        acc[0] += normals[i][0];
                        acc[1] += normals[i][1];
                    }
                }
                let len = (acc[0] * acc[0] + acc[1] * acc[1]).sqrt();
                vec![acc[0] / len, acc[1] / len]
            }
            Shape::HalfSpace { normal, .. } => normal.clone(),
        };
        Ok(n)
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> Classification {
        let d = self.signed_distance(u);
        if d < -tol {
            Classification::Inside
        } else if d > tol {
            Classification::Outside
        } else {
            Classification::Boundary
        }
    }
}

fn segment_closest(p: [f64; 2], q: [f64; 2], u: [f64; 2]) -> (f64, [f64; 2]) {
    let e = [q[0] - p[0], q[1] - p[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let t = (((u[0] - p[0]) * e[0] + (u[1] - p[1]) * e[1]) / len2).clamp(0.0, 1.0);
    let c = [p[0] + t * e[0], p[1] + t * e[1]];
    let d = ((u[0] - c[0]) * (u[0] - c[0]) + (u[1] - c[1]) * (u[1] - c[1])).sqrt();
    (d, c)
}

/// Distance and closest boundary point; ties go to the lowest edge index.
fn polygon_closest(vertices: &[[f64; 2]], u: [f64; 2]) -> (f64, [f64; 2]) {
    let n = vertices.len();
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..n {
        let cand = segment_closest(vertices[i], vertices[(i + 1) % n], u);
        if cand.0 < best.0 {
            best = cand;
        }
    }
    best
}

/// Closest point on the ellipsoid surface `Σ (x_i/a_i)² = 1`.
///
/// Stationarity gives `x_i = a_i² y_i / (t + a_i²)` for a multiplier `t`,
/// where `y = |u|` componentwise. The multiplier is the unique root of
/// `G(t) = Σ (a_i y_i / (t + a_i²))² − 1` on `t > −a_min²` (restricted to the
/// nonzero components), found by Newton's method from the radial
/// intersection and safeguarded by a bisection bracket.
fn ellipsoid_closest(semi: &[f64], u: &[f64]) -> Vec<f64> {
    let y: Vec<f64> = u.iter().map(|c| c.abs()).collect();
    let amin = semi.iter().copied().fold(f64::INFINITY, f64::min);
    let active: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut x = vec![0.0; y.len()];

    let touches_min_axis = active.iter().any(|&i| semi[i] == amin);
    if !touches_min_axis {
        // All components along the shortest axes vanish: the multiplier may
        // sit at its lower limit -amin², where the closest point leaves the
        // coordinate subspace of the point.
        let mut s = 0.0;
        for &i in &active {
            let a2 = semi[i] * semi[i];
            let xi = a2 * y[i] / (a2 - amin * amin);
            x[i] = xi;
            s += (xi / semi[i]) * (xi / semi[i]);
        }
        if s < 1.0 {
            let k = semi.iter().position(|&a| a == amin).unwrap_or(0);
            x[k] = amin * (1.0 - s).sqrt();
            return restore_signs(x, u);
        }
    }

    let t = ellipsoid_multiplier(semi, &y, &active, -amin * amin);
    for &i in &active {
        let a2 = semi[i] * semi[i];
        x[i] = a2 * y[i] / (t + a2);
    }
    restore_signs(x, u)
}

fn restore_signs(mut x: Vec<f64>, u: &[f64]) -> Vec<f64> {
    for (xi, ui) in x.iter_mut().zip(u) {
        if *ui < 0.0 {
            *xi = -*xi;
        }
    }
    x
}

fn ellipsoid_multiplier(semi: &[f64], y: &[f64], active: &[usize], lower: f64) -> f64 {
    let g = |t: f64| -> (f64, f64) {
        let mut val = -1.0;
        let mut der = 0.0;
        for &i in active {
            let a2 = semi[i] * semi[i];
            let r = semi[i] * y[i] / (t + a2);
            val += r * r;
            der -= 2.0 * r * r / (t + a2);
        }
        (val, der)
    };

    let rho = active
        .iter()
        .map(|&i| (y[i] / semi[i]) * (y[i] / semi[i]))
        .sum::<f64>()
        .sqrt();
    let amax = active.iter().map(|&i| semi[i]).fold(0.0_f64, f64::max);
    let amin_active = active
        .iter()
        .map(|&i| semi[i])
        .fold(f64::INFINITY, f64::min);
    let ynorm = active.iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt();

    let mut lo = lower;
    let mut hi = if rho >= 1.0 { amax * ynorm } else { 0.0 };
    if rho == 1.0 {
        return 0.0;
    }
    // Radial intersection u/ρ gives a multiplier estimate with G ≥ 0.
    let mut t = if rho > 1.0 {
        amin_active * amin_active * (rho - 1.0)
    } else {
        amax * amax * (rho - 1.0)
    };
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }

    for _ in 0..200 {
        let (val, der) = g(t);
        if val == 0.0 {
            return t;
        }
        if val > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - val / der;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(amin_active * amin_active) {
            return next;
        }
        t = next;
    }

    // Stalled: plain bisection to the resolution of the bracket.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if g(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ball_signed_distance_examples() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert_eq!(b.signed_distance(&[2.0, 0.0]), 1.0);
        assert_eq!(b.signed_distance(&[0.0, 0.0]), -1.0);
    }

    #[test]
    fn ellipse_on_major_axis() {
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert!(close(e.signed_distance(&[3.0, 0.0]), 1.0, 1e-15));
        let p = e.project_boundary(&[3.0, 0.0]);
        assert!(close(p[0], 2.0, 1e-15) && p[1] == 0.0);
    }

    #[test]
    fn ellipse_degenerate_interior_on_major_axis() {
        // Interior point on the major axis close to the center: the nearest
        // boundary point is off-axis.
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let p = e.project_boundary(&[0.5, 0.0]);
        // x = a² y/(a² - b²) = 4·0.5/3, y = b sqrt(1 - (x/a)²)
        let x = 4.0 * 0.5 / 3.0;
        assert!(close(p[0], x, 1e-14));
        assert!(close(p[1], (1.0 - (x / 2.0) * (x / 2.0)).sqrt(), 1e-14));
        assert!(e.signed_distance(&[0.5, 0.0]) < 0.0);
        // Center projects to the end of the minor axis.
        let c = e.project_boundary(&[0.0, 0.0]);
        assert!(close(c[0], 0.0, 0.0) && close(c[1], 1.0, 1e-15));
        assert!(close(e.signed_distance(&[0.0, 0.0]), -1.0, 1e-15));
    }

    #[test]
    fn ball_projection_example() {
        let b = ConvexBody::ball(2, 2.0).unwrap();
        assert_eq!(b.project_boundary(&[4.0, 0.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn triangle_projection_onto_edge() {
        let t = ConvexBody::triangle([0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]).unwrap();
        let p = t.project_boundary(&[0.7, 0.25]);
        assert!(close(p[0], 0.0, 1e-15) && close(p[1], 0.25, 1e-15));
        assert!(close(t.signed_distance(&[0.7, 0.25]), 0.7, 1e-15));
    }

    #[test]
    fn boundary_points_are_fixed_by_projection() {
        let b = ConvexBody::ball(3, 1.0).unwrap();
        let u = [0.6, 0.8 + 1e-12, 0.0];
        assert_eq!(b.project_boundary(&u), u.to_vec());
    }

    #[test]
    fn normals() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert_eq!(b.outward_normal(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);

        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert_eq!(e.outward_normal(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let t = ConvexBody::triangle([0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]).unwrap();
        let n = t.outward_normal(&[0.0, 0.0]).unwrap();
        assert!(close(n[0], 1.0, 1e-15) && close(n[1], 0.0, 1e-15));
        // Corner at a: average of the normals of ab and ca.
        let n = t.outward_normal(&[0.0, 1.0]).unwrap();
        assert!(close(n[0] * n[0] + n[1] * n[1], 1.0, 1e-14));
        assert!(n[0] > 0.0 && n[1] > 0.0);
    }

    #[test]
    fn normal_rejects_far_point() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert!(matches!(
            b.outward_normal(&[0.5, 0.0]),
            Err(GeometryError::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn contains_examples() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert_eq!(b.contains(&[0.5, 0.0], 1e-9), Classification::Inside);
        assert_eq!(b.contains(&[1.0, 0.0], 1e-9), Classification::Boundary);
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert_eq!(e.contains(&[0.0, 1.5], 1e-9), Classification::Outside);
    }

    #[test]
    fn construction_rejects_degenerate_bodies() {
        assert!(ConvexBody::ball(2, 0.0).is_err());
        assert!(ConvexBody::ball(2, f64::NAN).is_err());
        assert!(ConvexBody::ellipsoid(vec![1.0, -1.0]).is_err());
        assert!(ConvexBody::triangle([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]).is_err());
        assert!(ConvexBody::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.9, 0.1]]).is_err());
        assert!(ConvexBody::half_space(vec![0.0, 0.0], 1.0).is_err());
        assert!(ConvexBody::ball(2, 1.0)
            .unwrap()
            .try_signed_distance(&[1.0])
            .is_err());
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let t = ConvexBody::triangle([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]).unwrap();
        assert!(t.signed_distance(&[0.2, 0.2]) < 0.0);
        assert!(t.signed_distance(&[1.0, 1.0]) > 0.0);
    }

    #[test]
    fn half_space_distance_and_projection() {
        let h = ConvexBody::half_space(vec![0.0, 2.0], 1.0).unwrap();
        assert_eq!(h.signed_distance(&[5.0, 3.0]), 2.0);
        assert_eq!(h.project_boundary(&[5.0, 3.0]), vec![5.0, 1.0]);
    }
}
