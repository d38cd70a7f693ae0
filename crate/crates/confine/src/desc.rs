//! Field and body descriptions, as TOML tables or as short command-line
//! strings such as `"gp 1 1 2 1"` or `"ellipse 2 1"`.

use confine_core::fields::{Polynomial, Term, VectorField};
use confine_core::geometry::ConvexBody;
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    GinzburgLandau {
        diag: Vec<f64>,
    },
    AllenCahn {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
    },
    GrossPitaevskii {
        g11: f64,
        g22: f64,
        g12: f64,
        mu: f64,
    },
    SymmetryPair,
    Polynomial {
        dim: usize,
        components: Vec<Vec<Term>>,
    },
    /// The field `−F`.
    Negated {
        inner: Box<FieldSpec>,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField, Error> {
        let invalid = |e: confine_core::FieldError| Error::invalid("field", e.to_string());
        Ok(match self {
            Self::GinzburgLandau { diag } => {
                VectorField::ginzburg_landau(diag.clone()).map_err(invalid)?
            }
            Self::AllenCahn { a, b, c } => VectorField::allen_cahn(*a, *b, *c).map_err(invalid)?,
            Self::GrossPitaevskii { g11, g22, g12, mu } => {
                VectorField::gross_pitaevskii(*g11, *g22, *g12, *mu).map_err(invalid)?
            }
            Self::SymmetryPair => VectorField::SymmetryPair,
            Self::Polynomial { dim, components } => {
                VectorField::polynomial(Polynomial::new(*dim, components.clone()).map_err(invalid)?)
            }
            Self::Negated { inner } => inner.build()?.negated(),
        })
    }

    /// Parses `gl a1 .. am`, `ac ax ay bx by cx cy`, `gp g11 g22 g12 mu`,
    /// `symmetry`, or any of these prefixed by `neg`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let (head, rest) = words
            .split_first()
            .ok_or_else(|| Error::invalid("--field", "empty field description"))?;
        if matches!(*head, "neg" | "negated") {
            return Ok(Self::Negated {
                inner: Box::new(Self::parse(&rest.join(" "))?),
            });
        }
        let nums = numbers("--field", rest)?;
        let want = |n: usize| -> Result<(), Error> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::invalid(
                    "--field",
                    format!("`{head}` takes {n} numbers, got {}", nums.len()),
                ))
            }
        };
        Ok(match *head {
            "gl" | "ginzburg_landau" => {
                if nums.is_empty() {
                    return Err(Error::invalid("--field", "`gl` needs the diagonal of A"));
                }
                Self::GinzburgLandau { diag: nums }
            }
            "ac" | "allen_cahn" => {
                want(6)?;
                Self::AllenCahn {
                    a: [nums[0], nums[1]],
                    b: [nums[2], nums[3]],
                    c: [nums[4], nums[5]],
                }
            }
            "gp" | "gross_pitaevskii" => {
                want(4)?;
                Self::GrossPitaevskii {
                    g11: nums[0],
                    g22: nums[1],
                    g12: nums[2],
                    mu: nums[3],
                }
            }
            "symmetry" | "symmetry_pair" => {
                want(0)?;
                Self::SymmetryPair
            }
            other => {
                return Err(Error::invalid(
                    "--field",
                    format!("unknown field kind `{other}`"),
                ));
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        dim: usize,
        radius: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
    Triangle {
        vertices: [[f64; 2]; 3],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    HalfSpace {
        normal: Vec<f64>,
        level: f64,
    },
    /// The ellipse `u₁²/a² + u₂²/b² ≤ 1` of a Gross-Pitaevskii field.
    GpEllipse,
}

impl BodySpec {
    pub fn build(&self, field: Option<&VectorField>) -> Result<ConvexBody, Error> {
        let invalid = |e: confine_core::GeometryError| Error::invalid("body", e.to_string());
        match self {
            Self::Ball { dim, radius } => ConvexBody::ball(*dim, *radius).map_err(invalid),
            Self::Ellipsoid { semi_axes } => {
                ConvexBody::ellipsoid(semi_axes.clone()).map_err(invalid)
            }
            Self::Triangle {
                vertices: [a, b, c],
            } => ConvexBody::triangle(*a, *b, *c).map_err(invalid),
            Self::Polygon { vertices } => ConvexBody::polygon(vertices.clone()).map_err(invalid),
            Self::HalfSpace { normal, level } => {
                ConvexBody::half_space(normal.clone(), *level).map_err(invalid)
            }
            Self::GpEllipse => match field {
                Some(VectorField::GrossPitaevskii { a, b, .. }) => {
                    ConvexBody::ellipsoid(vec![*a, *b]).map_err(invalid)
                }
                _ => Err(Error::invalid(
                    "body",
                    "`gp_ellipse` needs a gross_pitaevskii field",
                )),
            },
        }
    }

    /// Parses `ball dim r`, `ellipse a b`, `ellipsoid a1 .. am`,
    /// `triangle x1 y1 x2 y2 x3 y3`, `polygon x1 y1 ..`, `halfspace n1 .. nm L`
    /// or `gp_ellipse`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let (head, rest) = words
            .split_first()
            .ok_or_else(|| Error::invalid("--body", "empty body description"))?;
        let nums = numbers("--body", rest)?;
        let bad = |msg: &str| Err(Error::invalid("--body", format!("`{head}`: {msg}")));
        let pairs = |nums: &[f64]| {
            nums.chunks_exact(2)
                .map(|p| [p[0], p[1]])
                .collect::<Vec<_>>()
        };
        match *head {
            "ball" => match nums.as_slice() {
                [dim, r] if dim.fract() == 0.0 && *dim >= 1.0 => Ok(Self::Ball {
                    dim: *dim as usize,
                    radius: *r,
                }),
                _ => bad("expected `ball <dim> <radius>`"),
            },
            "ellipse" if nums.len() == 2 => Ok(Self::Ellipsoid { semi_axes: nums }),
            "ellipse" => bad("expected two semi-axes"),
            "ellipsoid" if !nums.is_empty() => Ok(Self::Ellipsoid { semi_axes: nums }),
            "ellipsoid" => bad("expected semi-axes"),
            "triangle" if nums.len() == 6 => {
                let v = pairs(&nums);
                Ok(Self::Triangle {
                    vertices: [v[0], v[1], v[2]],
                })
            }
            "triangle" => bad("expected six coordinates"),
            "polygon" if nums.len() >= 6 && nums.len() % 2 == 0 => Ok(Self::Polygon {
                vertices: pairs(&nums),
            }),
            "polygon" => bad("expected an even number (at least six) of coordinates"),
            "halfspace" | "half_space" if nums.len() >= 2 => {
                let (level, normal) = nums.split_last().expect("nonempty");
                Ok(Self::HalfSpace {
                    normal: normal.to_vec(),
                    level: *level,
                })
            }
            "halfspace" | "half_space" => bad("expected a normal and a level"),
            "gp_ellipse" if nums.is_empty() => Ok(Self::GpEllipse),
            "gp_ellipse" => bad("takes no numbers"),
            other => Err(Error::invalid(
                "--body",
                format!("unknown body kind `{other}`"),
            )),
        }
    }
}

/// Parses whitespace- or comma-separated numbers.
pub fn numbers(what: &str, words: &[&str]) -> Result<Vec<f64>, Error> {
    words
        .iter()
        .flat_map(|w| w.split(','))
        .filter(|w| !w.is_empty())
        .map(|w| {
            w.parse::<f64>()
                .map_err(|_| Error::invalid(what, format!("`{w}` is not a number")))
        })
        .collect()
}

pub fn parse_vector(what: &str, text: &str) -> Result<Vec<f64>, Error> {
    let words: Vec<&str> = text.split_whitespace().collect();
    numbers(what, &words)
}
