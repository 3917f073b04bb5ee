//! File formats for networks, piecewise-linear functions and measures.
//! All documents are JSON with a `format` version field (optional on read,
//! rejected when unknown). Doubles survive write/read bit-identically via
//! shortest-round-trip decimal printing.

use crate::dual_checker::{DiscreteMeasure, DualError};
use crate::network::{ModelError, ReluNetwork, ReluUnit};
use crate::piecewise::PiecewiseLinear;
use crate::target::ExtendedPoint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("invalid model data: {0}")]
    Model(#[from] ModelError),
    #[error("invalid measure data: {0}")]
    Measure(#[from] DualError),
    #[error("invalid atom location `{0}` (expected a number, \"+inf\" or \"-inf\")")]
    BadLocation(String),
}

fn default_format() -> u32 {
    FORMAT_VERSION
}

fn check_version(format: u32) -> Result<(), FormatError> {
    if format == FORMAT_VERSION {
        Ok(())
    } else {
        Err(FormatError::UnsupportedVersion(format))
    }
}

// ---------------------------------------------------------------------
// Networks: {"format": 1, "units": [[a, b, c], ...]}
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default = "default_format")]
    format: u32,
    units: Vec<(f64, f64, f64)>,
}

pub fn network_to_json(net: &ReluNetwork) -> String {
    let file = NetworkFile {
        format: FORMAT_VERSION,
        units: net
            .units()
            .iter()
            .map(|u| (u.slope(), u.offset(), u.coefficient()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serialization cannot fail")
}

pub fn network_from_json(text: &str) -> Result<ReluNetwork, FormatError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    check_version(file.format)?;
    let units = file
        .units
        .iter()
        .map(|&(a, b, c)| ReluUnit::new(a, b, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReluNetwork::new(units))
}

// ---------------------------------------------------------------------
// Piecewise-linear: {"format": 1, "knots": [...], "values": [...],
//                    "m_left": ..., "m_right": ..., "c0": ...}
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PlFile {
    #[serde(default = "default_format")]
    format: u32,
    knots: Vec<f64>,
    values: Vec<f64>,
    m_left: f64,
    m_right: f64,
    c0: f64,
}

pub fn pl_to_json(pl: &PiecewiseLinear) -> String {
    let file = PlFile {
        format: FORMAT_VERSION,
        knots: pl.knots().to_vec(),
        values: pl.values().to_vec(),
        m_left: pl.left_slope(),
        m_right: pl.right_slope(),
        c0: pl.intercept(),
    };
    serde_json::to_string_pretty(&file).expect("pl serialization cannot fail")
}

pub fn pl_from_json(text: &str) -> Result<PiecewiseLinear, FormatError> {
    let file: PlFile = serde_json::from_str(text)?;
    check_version(file.format)?;
    if file.knots.is_empty() {
        if file.m_left != file.m_right {
            return Err(FormatError::Model(ModelError::LineSlopesDiffer));
        }
        if !(file.m_left.is_finite() && file.c0.is_finite()) {
            return Err(FormatError::Model(ModelError::NonFinite(file.c0)));
        }
        return Ok(PiecewiseLinear::line(file.m_left, file.c0));
    }
    Ok(PiecewiseLinear::from_knots(file.knots, file.values, file.m_left, file.m_right)?)
}

// ---------------------------------------------------------------------
// Measures: {"format": 1, "atoms": [{"loc": number | "+inf" | "-inf",
//            "w": number}, ...]}
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LocWire {
    Num(f64),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
struct AtomWire {
    loc: LocWire,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    #[serde(default = "default_format")]
    format: u32,
    atoms: Vec<AtomWire>,
}

fn loc_to_wire(p: ExtendedPoint) -> LocWire {
    match p {
        ExtendedPoint::Finite(x) => LocWire::Num(x),
        ExtendedPoint::PlusInfinity => LocWire::Tag("+inf".to_string()),
        ExtendedPoint::MinusInfinity => LocWire::Tag("-inf".to_string()),
    }
}

fn loc_from_wire(loc: &LocWire) -> Result<ExtendedPoint, FormatError> {
    match loc {
        LocWire::Num(x) if x.is_finite() => Ok(ExtendedPoint::Finite(*x)),
        LocWire::Num(x) => Err(FormatError::BadLocation(x.to_string())),
        LocWire::Tag(tag) => match tag.as_str() {
            "+inf" => Ok(ExtendedPoint::PlusInfinity),
            "-inf" => Ok(ExtendedPoint::MinusInfinity),
            other => Err(FormatError::BadLocation(other.to_string())),
        },
    }
}

pub fn measure_to_json(mu: &DiscreteMeasure) -> String {
    let file = MeasureFile {
        format: FORMAT_VERSION,
        atoms: mu
            .atoms()
            .iter()
            .map(|&(loc, w)| AtomWire { loc: loc_to_wire(loc), w })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("measure serialization cannot fail")
}

pub fn measure_from_json(text: &str) -> Result<DiscreteMeasure, FormatError> {
    let file: MeasureFile = serde_json::from_str(text)?;
    check_version(file.format)?;
    let atoms = file
        .atoms
        .iter()
        .map(|a| loc_from_wire(&a.loc).map(|loc| (loc, a.w)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiscreteMeasure::new(atoms)?)
}

/// JSON value for an extended point, matching the measure `loc` encoding.
pub fn extended_point_to_value(p: ExtendedPoint) -> serde_json::Value {
    match p {
        ExtendedPoint::Finite(x) => serde_json::json!(x),
        ExtendedPoint::PlusInfinity => serde_json::json!("+inf"),
        ExtendedPoint::MinusInfinity => serde_json::json!("-inf"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl_algebra::{hat, network_to_pl, step_f};

    #[test]
    fn network_round_trip_bit_identical() {
        let net = ReluNetwork::from_triples(&[
            (0.1 + 0.2, -1.0 / 3.0, 2.0_f64.sqrt()),
            (-std::f64::consts::PI, 1e-300, -7.25e17),
        ])
        .unwrap();
        let back = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn network_accepts_missing_format_rejects_unknown() {
        let net = network_from_json(r#"{"units": [[1.0, 0.0, 1.0]]}"#).unwrap();
        assert_eq!(net.len(), 1);
        assert!(matches!(
            network_from_json(r#"{"format": 2, "units": []}"#),
            Err(FormatError::UnsupportedVersion(2))
        ));
        assert!(matches!(
            network_from_json(r#"{"units": [[0.0, 0.0, 1.0]]}"#),
            Err(FormatError::Model(ModelError::ZeroSlope))
        ));
    }

    #[test]
    fn pl_round_trip() {
        let pl = network_to_pl(&hat(0.5, 2.25).unwrap());
        let back = pl_from_json(&pl_to_json(&pl)).unwrap();
        assert_eq!(pl, back);

        let line = PiecewiseLinear::line(2.0, -0.125);
        let back = pl_from_json(&pl_to_json(&line)).unwrap();
        assert_eq!(line, back);
    }

    #[test]
    fn measure_round_trip_and_tags() {
        let mu = DiscreteMeasure::new(vec![
            (ExtendedPoint::MinusInfinity, -0.5),
            (ExtendedPoint::finite(1.5), 2.0),
            (ExtendedPoint::PlusInfinity, 1.0),
        ])
        .unwrap();
        let back = measure_from_json(&measure_to_json(&mu)).unwrap();
        assert_eq!(mu, back);

        let parsed = measure_from_json(
            r#"{"atoms": [{"loc": "+inf", "w": 1.0}, {"loc": 0.0, "w": -1.0}]}"#,
        )
        .unwrap();
        assert_eq!(parsed.atoms().len(), 2);

        assert!(matches!(
            measure_from_json(r#"{"atoms": [{"loc": "oops", "w": 1.0}]}"#),
            Err(FormatError::BadLocation(_))
        ));
    }

    #[test]
    fn step_net_json_shape() {
        let json = network_to_json(&step_f());
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["format"], 1);
        assert_eq!(value["units"][0][0], 1.0);
        assert_eq!(value["units"][1][1], -1.0);
    }
}
