//! JSON document form of [`MeasureSpec`]:
//! `{"kind": .., "dim": .., "params": {..}, "affine": {"linear": [[..]], "shift": [..]}}`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{AffineMap, Halfspace, Kind, MeasureSpec};
use crate::error::Error;
use crate::linalg::{matrix_from_rows, matrix_to_rows};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    kind: String,
    dim: usize,
    #[serde(default)]
    params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    affine: Option<AffineDoc>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    halfspaces: Option<Vec<Halfspace>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineDoc {
    linear: Vec<Vec<f64>>,
    shift: Vec<f64>,
}

fn missing(name: &str, kind: &str) -> Error {
    Error::InvalidMeasure(format!("params.{name} is required for kind `{kind}`"))
}

impl TryFrom<SpecDoc> for MeasureSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self, Error> {
        let p = doc.params;
        let unexpected = |name: &str, present: bool| -> Result<(), Error> {
            if present {
                Err(Error::InvalidMeasure(format!(
                    "params.{name} is not a parameter of kind `{}`",
                    doc.kind
                )))
            } else {
                Ok(())
            }
        };
        let kind = match doc.kind.as_str() {
            "uniform_cube" => {
                unexpected("radius", p.radius.is_some())?;
                unexpected("halfspaces", p.halfspaces.is_some())?;
                Kind::UniformCube {
                    half_width: p.half_width.ok_or_else(|| missing("half_width", &doc.kind))?,
                }
            }
            "uniform_ball" => {
                unexpected("half_width", p.half_width.is_some())?;
                unexpected("halfspaces", p.halfspaces.is_some())?;
                Kind::UniformBall {
                    radius: p.radius.ok_or_else(|| missing("radius", &doc.kind))?,
                }
            }
            "uniform_polytope" => {
                unexpected("half_width", p.half_width.is_some())?;
                unexpected("radius", p.radius.is_some())?;
                Kind::UniformPolytope {
                    halfspaces: p.halfspaces.ok_or_else(|| missing("halfspaces", &doc.kind))?,
                }
            }
            other => {
                unexpected("half_width", p.half_width.is_some())?;
                unexpected("radius", p.radius.is_some())?;
                unexpected("halfspaces", p.halfspaces.is_some())?;
                match other {
                    "gaussian_std" => Kind::GaussianStd,
                    "uniform_simplex" => Kind::UniformSimplex,
                    "uniform_crosspolytope" => Kind::UniformCrosspolytope,
                    "product_exponential" => Kind::ProductExponential,
                    _ => return Err(Error::InvalidMeasure(format!("unknown kind `{other}`"))),
                }
            }
        };
        let base = MeasureSpec::build(kind, doc.dim)?;
        match doc.affine {
            None => Ok(base),
            Some(a) => {
                let map = AffineMap::new(
                    matrix_from_rows(&a.linear)?,
                    DVector::from_vec(a.shift),
                )?;
                MeasureSpec::affine_image(&base, map)
            }
        }
    }
}

impl From<MeasureSpec> for SpecDoc {
    fn from(spec: MeasureSpec) -> Self {
        let (core, map) = spec.core();
        let mut params = Params::default();
        match &core.kind {
            Kind::UniformCube { half_width } => params.half_width = Some(*half_width),
            Kind::UniformBall { radius } => params.radius = Some(*radius),
            Kind::UniformPolytope { halfspaces } => params.halfspaces = Some(halfspaces.clone()),
            _ => {}
        }
        SpecDoc {
            kind: core.kind.name().to_string(),
            dim: spec.dim,
            params,
            affine: map.map(|m| AffineDoc {
                linear: matrix_to_rows(m.linear_part()),
                shift: m.shift().iter().copied().collect(),
            }),
        }
    }
}
