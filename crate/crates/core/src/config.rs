//! Config-driven runs: one structured document names the command, the
//! map, the geometry, and the hypothesis parameters. Builders turn the
//! parsed document into live objects with usage errors for anything
//! missing or out of range.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gallery::{
    make_diagonal, make_folding_map, make_inversion, make_ring_map, make_standard,
    make_tabulated_map, FoldingParams, MapHandle, RingMapParams, StandardMap, TabulatedSamples,
};
use crate::geometry::Point;
use crate::integrals::{MajorantField, WeightFunction};
use crate::singularity::GrowthEnvelope;

/// One analysis run: a command plus the sections it needs.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    #[serde(default)]
    pub hypothesis: Option<HypothesisSpec>,
    #[serde(default)]
    pub modulus: Option<ModulusSpec>,
    #[serde(default)]
    pub expect: Option<ExpectSpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// Gallery name with its parameters, or a tabulated-samples path.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub gallery: Option<String>,
    pub dim: Option<usize>,
    pub alpha: Option<f64>,
    pub exponent: Option<f64>,
    pub value: Option<Vec<f64>>,
    pub diagonal: Option<Vec<f64>>,
    /// Row-major square matrix for the linear map.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Path to a tabulated-samples document; lower fidelity (finite
    /// difference derivatives, no evaluation outside the sampled box).
    pub samples: Option<PathBuf>,
}

/// Base point, radii, ladders and grid sizes.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub dim: Option<usize>,
    pub center: Option<Vec<f64>>,
    pub point: Option<Vec<f64>>,
    pub r_inner: Option<f64>,
    pub r_outer: Option<f64>,
    pub r_max: Option<f64>,
    pub levels: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub curves: Option<usize>,
    pub directions: Option<usize>,
    pub resolution: Option<usize>,
    /// Shell radius of the contradiction chain.
    pub r: Option<f64>,
    /// Explicit shrinkage ladder for the chain, strictly decreasing.
    pub a_grid: Option<Vec<f64>>,
    /// Length of the default shrinkage ladder exp(-(e + 2k)).
    pub a_count: Option<usize>,
}

/// Majorant, weight and growth parameters.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpec {
    /// Majorant name: one, constant, log_inverse_distance,
    /// log_inverse_power, inverse_distance.
    pub majorant: Option<String>,
    pub majorant_power: Option<f64>,
    pub majorant_value: Option<f64>,
    /// Weight name: one, constant, log_weight, inverse_t.
    pub weight: Option<String>,
    pub weight_value: Option<f64>,
    /// The bound amount A in the growth conditions.
    pub amount: Option<f64>,
    /// The envelope constant C.
    pub constant: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub eps0: Option<f64>,
    /// Envelope kind: power, log_power, log_power_limit.
    pub envelope: Option<String>,
    /// Which growth condition: fixed (double-log budget) or log
    /// (built-in log weight, log-ratio budget).
    pub condition: Option<String>,
    pub k0: Option<u32>,
}

/// Curve family and solver sizes for the modulus commands.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModulusSpec {
    /// ring or cap.
    pub descriptor: Option<String>,
    /// Cap axis; defaults to the last coordinate axis.
    pub axis: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub gap_tol: Option<f64>,
    pub step: Option<f64>,
}

/// Declared expectation; a mismatch makes the run exit with a verdict
/// failure instead of an error.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExpectSpec {
    /// Expected verdict string (classify, fmo).
    pub verdict: Option<String>,
    /// Expected outcome of a pass/fail check (integrals, growth).
    pub satisfied: Option<bool>,
    /// Expected divergence flag (dilatation tail, lemma1 chain).
    pub diverging: Option<bool>,
    /// Value the modulus bracket must contain.
    pub value: Option<f64>,
    /// Relative slack for the containment check; default 0.05.
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
}

pub const COMMANDS: [&str; 10] = [
    "dilatation",
    "integrals",
    "fmo",
    "modulus",
    "poletskii",
    "classify",
    "growth",
    "lemma1",
    "verify-theorem4",
    "verify-theorem5",
];

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !COMMANDS.contains(&config.command.as_str()) {
        return Err(Error::Config(format!(
            "unknown command {:?}; expected one of {}",
            config.command,
            COMMANDS.join(", ")
        )));
    }
    Ok(config)
}

fn missing(what: &str) -> Error {
    Error::Config(format!("missing {what}"))
}

/// Tabulated-samples document: strictly increasing axes and one image
/// vector per grid node, row-major with the last axis contiguous.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplesFile {
    axes: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

pub fn load_tabulated_map(path: &Path) -> Result<MapHandle> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: SamplesFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    make_tabulated_map(TabulatedSamples { axes: file.axes, values: file.values })
}

/// Build the map a MapSpec names. The dimension defaults to 2.
pub fn build_map(spec: &MapSpec) -> Result<MapHandle> {
    if let Some(path) = &spec.samples {
        if spec.gallery.is_some() {
            return Err(Error::Config(
                "give either a gallery name or a samples path, not both".into(),
            ));
        }
        return load_tabulated_map(path);
    }
    let name = spec.gallery.as_deref().ok_or_else(|| missing("map.gallery"))?;
    let dim = spec.dim.unwrap_or(2);
    match name {
        "ring" => {
            let alpha = spec.alpha.ok_or_else(|| missing("map.alpha for the ring map"))?;
            make_ring_map(RingMapParams::new(alpha, dim)?)
        }
        "folding" => make_folding_map(FoldingParams::new(dim)?),
        "inversion" => make_inversion(dim),
        "identity" => make_standard(StandardMap::Identity { dim }),
        "radial_power" => {
            let exponent =
                spec.exponent.ok_or_else(|| missing("map.exponent for the radial power"))?;
            make_standard(StandardMap::RadialPower { dim, exponent })
        }
        "planar_square" => make_standard(StandardMap::PlanarSquare),
        "constant" => {
            let value = spec.value.clone().ok_or_else(|| missing("map.value"))?;
            make_standard(StandardMap::Constant { value: Point::new(value)? })
        }
        "diagonal" => {
            let entries = spec.diagonal.clone().ok_or_else(|| missing("map.diagonal"))?;
            make_diagonal(&entries)
        }
        "linear" => {
            let rows = spec.matrix.clone().ok_or_else(|| missing("map.matrix"))?;
            let n = rows.len();
            if n < 2 || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config("map.matrix must be square, at least 2x2".into()));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            make_standard(StandardMap::Linear { matrix: DMatrix::from_row_slice(n, n, &flat) })
        }
        other => Err(Error::UnknownMap(other.to_string())),
    }
}

/// Base point: the explicit center when given, otherwise the origin of
/// the ambient dimension.
pub fn build_center(geometry: Option<&GeometrySpec>, dim: usize) -> Result<Point> {
    match geometry.and_then(|g| g.center.clone()) {
        Some(c) => {
            if c.len() != dim {
                return Err(Error::Config(format!(
                    "center has {} coordinates, the run is {dim}-dimensional",
                    c.len()
                )));
            }
            Point::new(c)
        }
        None => Point::origin(dim),
    }
}

pub fn build_majorant(hyp: &HypothesisSpec, base: Point) -> Result<MajorantField> {
    let dim = base.dim();
    let name = hyp.majorant.as_deref().ok_or_else(|| missing("hypothesis.majorant"))?;
    match name {
        "one" => MajorantField::constant(dim, 1.0),
        "constant" => MajorantField::constant(dim, hyp.majorant_value.unwrap_or(1.0)),
        "log_inverse_distance" => Ok(MajorantField::log_inverse_distance(base)),
        "log_inverse_power" => {
            let p = hyp
                .majorant_power
                .ok_or_else(|| missing("hypothesis.majorant_power"))?;
            MajorantField::log_inverse_power(base, p)
        }
        "inverse_distance" => Ok(MajorantField::inverse_distance(base)),
        other => Err(Error::Config(format!("unknown majorant {other:?}"))),
    }
}

pub fn build_weight(hyp: &HypothesisSpec) -> Result<WeightFunction> {
    let name = hyp.weight.as_deref().unwrap_or("one");
    match name {
        "one" => Ok(WeightFunction::one()),
        "constant" => WeightFunction::constant(hyp.weight_value.unwrap_or(1.0)),
        "log_weight" => Ok(WeightFunction::log_weight()),
        "inverse_t" => Ok(WeightFunction::inverse_t()),
        other => Err(Error::Config(format!("unknown weight {other:?}"))),
    }
}

pub fn build_envelope(hyp: &HypothesisSpec) -> Result<GrowthEnvelope> {
    let kind = hyp.envelope.as_deref().unwrap_or("log_power");
    let c = hyp.constant.unwrap_or(1.0);
    let p = hyp.p.ok_or_else(|| missing("hypothesis.p"))?;
    match kind {
        "power" => GrowthEnvelope::power(c, p),
        "log_power" => GrowthEnvelope::log_power(c, p),
        "log_power_limit" => GrowthEnvelope::log_power_limit(p),
        other => Err(Error::Config(format!("unknown envelope kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_document() {
        let text = r#"
            command = "classify"
            [map]
            gallery = "ring"
            alpha = 0.5
            dim = 2
            [geometry]
            center = [0.0, 0.0]
            r_max = 0.3
            levels = 12
            [expect]
            verdict = "essential"
            [output]
            report = "out.txt"
        "#;
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.command, "classify");
        let map = build_map(config.map.as_ref().unwrap()).unwrap();
        assert_eq!(map.dim(), 2);
        assert_eq!(config.expect.unwrap().verdict.as_deref(), Some("essential"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "command = \"classify\"\nbogus = 1\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn map_builders_cover_the_gallery() {
        let mk = |gallery: &str| MapSpec {
            gallery: Some(gallery.to_string()),
            dim: Some(2),
            alpha: Some(0.5),
            exponent: Some(2.0),
            value: Some(vec![1.0, 0.0]),
            diagonal: Some(vec![2.0, 1.0]),
            matrix: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            samples: None,
        };
        for name in
            ["ring", "folding", "inversion", "identity", "radial_power", "planar_square",
             "constant", "diagonal", "linear"]
        {
            assert!(build_map(&mk(name)).is_ok(), "{name}");
        }
        assert!(matches!(build_map(&mk("nope")), Err(Error::UnknownMap(_))));
        let empty = MapSpec::default();
        assert!(build_map(&empty).is_err());
    }

    #[test]
    fn tabulated_maps_load_from_a_document() {
        let dir = std::env::temp_dir().join("curvemod-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.toml");
        std::fs::write(
            &path,
            "axes = [[0.0, 1.0], [0.0, 1.0]]\n\
             values = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]\n",
        )
        .unwrap();
        let spec = MapSpec { samples: Some(path), ..MapSpec::default() };
        let map = build_map(&spec).unwrap();
        let y = map.eval(&[0.5, 0.5]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn centers_default_to_the_origin_and_check_length() {
        let c = build_center(None, 3).unwrap();
        assert_eq!(c.coords(), &[0.0, 0.0, 0.0]);
        let g = GeometrySpec { center: Some(vec![1.0]), ..GeometrySpec::default() };
        assert!(build_center(Some(&g), 2).is_err());
    }

    #[test]
    fn majorants_and_weights_resolve_by_name() {
        let base = Point::origin(2).unwrap();
        let hyp = HypothesisSpec {
            majorant: Some("log_inverse_distance".into()),
            weight: Some("log_weight".into()),
            ..HypothesisSpec::default()
        };
        assert!(build_majorant(&hyp, base.clone()).is_ok());
        assert!(build_weight(&hyp).is_ok());
        let bad = HypothesisSpec { majorant: Some("nope".into()), ..HypothesisSpec::default() };
        assert!(build_majorant(&bad, base).is_err());
    }
}
