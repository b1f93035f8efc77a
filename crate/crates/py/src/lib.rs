//! Python bindings. One `Map` class wrapping the gallery handles, plus
//! dict-returning functions for the main pipelines. Name resolution for
//! majorants and weights goes through the same config builders as the
//! CLI, so the two surfaces cannot diverge.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use curvemod::config::{build_envelope, build_majorant, build_weight, HypothesisSpec};
use curvemod::dilatation::{dilatations_at, jacobian_at, ki_lq_norm};
use curvemod::gallery::{
    compose, make_diagonal, make_folding_map, make_inversion, make_ring_map, make_standard,
    ring_map_inner_dilatation, FoldingParams, MapHandle, RingMapParams, StandardMap,
};
use curvemod::geometry::{dimension_constants, AnnulusSpec, Point};
use curvemod::integrals::{
    check_growth_condition, check_log_growth_condition, fmo_estimate_with, FmoParams,
};
use curvemod::modulus::{
    analytic_modulus, discrete_modulus, CurveFamily, FamilyDescriptor, Grid, PolarGrid,
    SolveParams, SphericalGrid,
};
use curvemod::singularity::{
    check_growth, classify, count_preimages, modulus_chain_bounds, radius_ladder,
    verify_decay_envelope, verify_folding_example, verify_ring_example,
};

fn to_py(e: curvemod::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(coords: Vec<f64>) -> PyResult<Point> {
    Point::new(coords).map_err(to_py)
}

/// A map of n-dimensional space with evaluation and differentiation.
#[pyclass(frozen, skip_from_py_object, name = "Map")]
#[derive(Clone)]
struct PyMap {
    inner: MapHandle,
}

#[pymethods]
impl PyMap {
    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval(&x).map_err(to_py)
    }

    /// Jacobian matrix as row-major nested lists; finite differences
    /// when no analytic derivative is attached.
    fn jacobian(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let m = jacobian_at(&self.inner, &x).map_err(to_py)?;
        let n = m.nrows();
        Ok((0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Map({}, dim={})", self.inner.name(), self.inner.dim())
    }

    #[staticmethod]
    fn ring(alpha: f64, dim: usize) -> PyResult<Self> {
        let params = RingMapParams::new(alpha, dim).map_err(to_py)?;
        Ok(Self { inner: make_ring_map(params).map_err(to_py)? })
    }

    #[staticmethod]
    fn folding(dim: usize) -> PyResult<Self> {
        let params = FoldingParams::new(dim).map_err(to_py)?;
        Ok(Self { inner: make_folding_map(params).map_err(to_py)? })
    }

    #[staticmethod]
    fn inversion(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: make_inversion(dim).map_err(to_py)? })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: make_standard(StandardMap::Identity { dim }).map_err(to_py)? })
    }

    #[staticmethod]
    fn diagonal(entries: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: make_diagonal(&entries).map_err(to_py)? })
    }

    #[staticmethod]
    fn radial_power(dim: usize, exponent: f64) -> PyResult<Self> {
        Ok(Self { inner: make_standard(StandardMap::RadialPower { dim, exponent }).map_err(to_py)? })
    }

    #[staticmethod]
    fn constant(value: Vec<f64>) -> PyResult<Self> {
        let value = point(value)?;
        Ok(Self { inner: make_standard(StandardMap::Constant { value }).map_err(to_py)? })
    }

    #[staticmethod]
    fn compose(outer: &PyMap, inner: &PyMap) -> PyResult<Self> {
        Ok(Self { inner: compose(&outer.inner, &inner.inner).map_err(to_py)? })
    }
}

#[pyfunction]
fn sphere_area(dim: usize) -> PyResult<f64> {
    Ok(dimension_constants(dim).map_err(to_py)?.sphere_area)
}

#[pyfunction]
fn ball_volume(dim: usize) -> PyResult<f64> {
    Ok(dimension_constants(dim).map_err(to_py)?.ball_volume)
}

#[pyfunction]
fn ring_inner_dilatation(alpha: f64, dim: usize, r: f64) -> f64 {
    ring_map_inner_dilatation(alpha, dim, r)
}

#[pyfunction]
fn dilatations<'py>(py: Python<'py>, map: &PyMap, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let rec = dilatations_at(&map.inner, &x).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("k_i", rec.k_i)?;
    d.set_item("k_o", rec.k_o)?;
    d.set_item("jacobian_det", rec.jacobian_det)?;
    d.set_item("singular_values", rec.singular_values)?;
    d.set_item("degenerate", rec.degenerate)?;
    Ok(d)
}

#[pyfunction]
fn weighted_norm<'py>(
    py: Python<'py>,
    map: &PyMap,
    center: Vec<f64>,
    r_inner: f64,
    r_outer: f64,
    q: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let annulus = AnnulusSpec::new(point(center)?, r_inner, r_outer).map_err(to_py)?;
    let rep = ki_lq_norm(&map.inner, &annulus, q).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("value", rep.value)?;
    d.set_item("tail_slope", rep.tail_slope)?;
    d.set_item("diverging", rep.diverging)?;
    d.set_item("shell_radii", rep.shells.iter().map(|s| s.radius).collect::<Vec<_>>())?;
    d.set_item("shell_integrands", rep.shells.iter().map(|s| s.integrand).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (map, b, r_max=0.3, levels=12))]
fn classify_singularity<'py>(
    py: Python<'py>,
    map: &PyMap,
    b: Vec<f64>,
    r_max: f64,
    levels: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = classify(&map.inner, &point(b)?, r_max, levels).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("verdict", rep.verdict.as_str())?;
    d.set_item("reason", rep.reason)?;
    d.set_item("radii", rep.radii)?;
    d.set_item("oscillations", rep.oscillations)?;
    d.set_item("min_magnitudes", rep.magnitude_ranges.iter().map(|r| r.0).collect::<Vec<_>>())?;
    d.set_item("max_magnitudes", rep.magnitude_ranges.iter().map(|r| r.1).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (map, b, envelope, constant, p, r_max=0.25, levels=8))]
fn growth_check<'py>(
    py: Python<'py>,
    map: &PyMap,
    b: Vec<f64>,
    envelope: &str,
    constant: f64,
    p: f64,
    r_max: f64,
    levels: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let hyp = HypothesisSpec {
        envelope: Some(envelope.to_string()),
        constant: Some(constant),
        p: Some(p),
        ..HypothesisSpec::default()
    };
    let env = build_envelope(&hyp).map_err(to_py)?;
    let radii = radius_ladder(r_max, levels).map_err(to_py)?;
    let rep = check_growth(&map.inner, &point(b)?, &env, &radii).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("passed", rep.passed)?;
    d.set_item("radii", rep.radii)?;
    d.set_item("max_values", rep.max_values)?;
    d.set_item("envelope_values", rep.envelope_values)?;
    d.set_item("margins", rep.margins)?;
    Ok(d)
}

fn descriptor_from(
    name: &str,
    center: Point,
    r_inner: f64,
    r_outer: f64,
    axis: Option<Vec<f64>>,
) -> PyResult<FamilyDescriptor> {
    match name {
        "ring" => FamilyDescriptor::ring(center, r_inner, r_outer).map_err(to_py),
        "cap" => {
            let axis = axis.unwrap_or_else(|| {
                let mut a = vec![0.0; center.dim()];
                a[center.dim() - 1] = 1.0;
                a
            });
            FamilyDescriptor::cap(center, r_inner, r_outer, axis).map_err(to_py)
        }
        other => Err(PyValueError::new_err(format!("unknown descriptor {other:?}"))),
    }
}

#[pyfunction]
#[pyo3(signature = (descriptor, center, r_inner, r_outer, axis=None))]
fn reference_modulus(
    descriptor: &str,
    center: Vec<f64>,
    r_inner: f64,
    r_outer: f64,
    axis: Option<Vec<f64>>,
) -> PyResult<f64> {
    let d = descriptor_from(descriptor, point(center)?, r_inner, r_outer, axis)?;
    analytic_modulus(&d).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (descriptor, center, r_inner, r_outer, grid=64, curves=128, axis=None))]
fn modulus_bracket<'py>(
    py: Python<'py>,
    descriptor: &str,
    center: Vec<f64>,
    r_inner: f64,
    r_outer: f64,
    grid: usize,
    curves: usize,
    axis: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let center = point(center)?;
    let desc = descriptor_from(descriptor, center.clone(), r_inner, r_outer, axis)?;
    let family = match &desc {
        FamilyDescriptor::Ring { .. } => {
            CurveFamily::ring(center.clone(), r_inner, r_outer, curves).map_err(to_py)?
        }
        FamilyDescriptor::SphericalCap { axis, .. } => {
            CurveFamily::spherical_cap(center.clone(), r_inner, r_outer, axis.clone(), curves)
                .map_err(to_py)?
        }
        FamilyDescriptor::Custom { .. } => unreachable!("builder yields ring or cap"),
    };
    let g: std::sync::Arc<dyn Grid> = match center.dim() {
        2 => std::sync::Arc::new(
            PolarGrid::new(center, r_inner, r_outer, grid, grid).map_err(to_py)?,
        ),
        3 => std::sync::Arc::new(
            SphericalGrid::new(center, r_inner, r_outer, grid, (grid / 4).max(4), (grid / 2).max(8))
                .map_err(to_py)?,
        ),
        n => return Err(PyValueError::new_err(format!("no annulus grid for dimension {n}"))),
    };
    let res = discrete_modulus(&family, g, SolveParams::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lower", res.lower)?;
    d.set_item("upper", res.upper)?;
    d.set_item("gap", res.gap)?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("converged", res.converged)?;
    d.set_item("analytic", analytic_modulus(&desc).map_err(to_py)?)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (majorant, weight, base, amount, eps, eps0, majorant_power=None, majorant_value=None, weight_value=None))]
#[allow(clippy::too_many_arguments)]
fn growth_condition<'py>(
    py: Python<'py>,
    majorant: &str,
    weight: &str,
    base: Vec<f64>,
    amount: f64,
    eps: f64,
    eps0: f64,
    majorant_power: Option<f64>,
    majorant_value: Option<f64>,
    weight_value: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let hyp = HypothesisSpec {
        majorant: Some(majorant.to_string()),
        majorant_power,
        majorant_value,
        weight: Some(weight.to_string()),
        weight_value,
        ..HypothesisSpec::default()
    };
    let base = point(base)?;
    let field = build_majorant(&hyp, base.clone()).map_err(to_py)?;
    let psi = build_weight(&hyp).map_err(to_py)?;
    let rep = check_growth_condition(&field, &psi, &base, amount, eps, eps0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lhs", rep.lhs)?;
    d.set_item("rhs", rep.rhs)?;
    d.set_item("normalizer", rep.normalizer)?;
    d.set_item("satisfied", rep.satisfied)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (majorant, base, amount, eps, eps0, majorant_power=None, majorant_value=None))]
fn log_growth_condition<'py>(
    py: Python<'py>,
    majorant: &str,
    base: Vec<f64>,
    amount: f64,
    eps: f64,
    eps0: f64,
    majorant_power: Option<f64>,
    majorant_value: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let hyp = HypothesisSpec {
        majorant: Some(majorant.to_string()),
        majorant_power,
        majorant_value,
        ..HypothesisSpec::default()
    };
    let base = point(base)?;
    let field = build_majorant(&hyp, base.clone()).map_err(to_py)?;
    let rep = check_log_growth_condition(&field, &base, amount, eps, eps0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lhs", rep.lhs)?;
    d.set_item("rhs", rep.rhs)?;
    d.set_item("normalizer", rep.normalizer)?;
    d.set_item("satisfied", rep.satisfied)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (majorant, base, r_max=0.25, levels=12, majorant_power=None, majorant_value=None))]
fn fmo_estimate<'py>(
    py: Python<'py>,
    majorant: &str,
    base: Vec<f64>,
    r_max: f64,
    levels: usize,
    majorant_power: Option<f64>,
    majorant_value: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let hyp = HypothesisSpec {
        majorant: Some(majorant.to_string()),
        majorant_power,
        majorant_value,
        ..HypothesisSpec::default()
    };
    let base = point(base)?;
    let field = build_majorant(&hyp, base.clone()).map_err(to_py)?;
    let rep = fmo_estimate_with(&field, &base, FmoParams { r_max, levels }).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("verdict", rep.verdict.as_str())?;
    d.set_item("normalized_slope", rep.normalized_slope)?;
    d.set_item("limsup_estimate", rep.limsup_estimate)?;
    d.set_item("radii", rep.radii)?;
    d.set_item("oscillations", rep.oscillations)?;
    Ok(d)
}

#[pyfunction]
fn chain_bounds<'py>(
    py: Python<'py>,
    k0: u32,
    amount: f64,
    p: f64,
    dim: usize,
    r: f64,
    a_grid: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = modulus_chain_bounds(k0, amount, p, dim, r, &a_grid).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("threshold", rep.threshold)?;
    d.set_item("exponent", rep.exponent)?;
    d.set_item("ceiling", rep.ceiling)?;
    d.set_item("diverges", rep.diverges)?;
    d.set_item("vacuous", rep.vacuous)?;
    d.set_item("crossing_index", rep.crossing_index)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (map, y, center, r_inner, r_outer, resolution=12))]
fn preimage_count<'py>(
    py: Python<'py>,
    map: &PyMap,
    y: Vec<f64>,
    center: Vec<f64>,
    r_inner: f64,
    r_outer: f64,
    resolution: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let region = AnnulusSpec::new(point(center)?, r_inner, r_outer).map_err(to_py)?;
    let rep = count_preimages(&map.inner, &point(y)?, &region, resolution).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("count", rep.count)?;
    d.set_item("inconclusive", rep.inconclusive)?;
    d.set_item("seeds_tried", rep.seeds_tried)?;
    d.set_item("newton_converged", rep.newton_converged)?;
    d.set_item(
        "clusters",
        rep.clusters.iter().map(|c| c.coords().to_vec()).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (map, b, eps0, amount, r_max=0.25, levels=10))]
fn decay_envelope<'py>(
    py: Python<'py>,
    map: &PyMap,
    b: Vec<f64>,
    eps0: f64,
    amount: f64,
    r_max: f64,
    levels: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let radii = radius_ladder(r_max, levels).map_err(to_py)?;
    let rep = verify_decay_envelope(&map.inner, &point(b)?, eps0, amount, &radii).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("beta_expected", rep.beta_expected)?;
    d.set_item("fitted_exponent", rep.fitted_exponent)?;
    d.set_item("compliant", rep.compliant)?;
    d.set_item("degenerate", rep.degenerate)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (q, p, dim=2, alpha=None))]
fn ring_example<'py>(
    py: Python<'py>,
    q: f64,
    p: f64,
    dim: usize,
    alpha: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = verify_ring_example(q, p, dim, alpha).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("alpha", rep.alpha)?;
    d.set_item("lq_value", rep.lq.value)?;
    d.set_item("lq_diverging", rep.lq.diverging)?;
    d.set_item("growth_passed", rep.growth.passed)?;
    d.set_item("verdict", rep.classification.verdict.as_str())?;
    d.set_item("max_magnitude", rep.max_magnitude)?;
    d.set_item("passed", rep.passed)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (dim=2))]
fn folding_example<'py>(py: Python<'py>, dim: usize) -> PyResult<Bound<'py, PyDict>> {
    let rep = verify_folding_example(dim).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ki_max_deviation", rep.ki_max_deviation)?;
    d.set_item("bound_max", rep.bound_max)?;
    d.set_item("growth_passed", rep.growth.passed)?;
    d.set_item("verdict", rep.classification.verdict.as_str())?;
    d.set_item("non_open_passed", rep.non_open_passed)?;
    d.set_item(
        "preimage_counts",
        rep.preimage_counts.iter().map(|(r, c)| (*r, *c)).collect::<Vec<_>>(),
    )?;
    d.set_item("passed", rep.passed)?;
    Ok(d)
}

#[pymodule]
fn curvemod_native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(sphere_area, m)?)?;
    m.add_function(wrap_pyfunction!(ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(ring_inner_dilatation, m)?)?;
    m.add_function(wrap_pyfunction!(dilatations, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_norm, m)?)?;
    m.add_function(wrap_pyfunction!(classify_singularity, m)?)?;
    m.add_function(wrap_pyfunction!(growth_check, m)?)?;
    m.add_function(wrap_pyfunction!(reference_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(modulus_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(growth_condition, m)?)?;
    m.add_function(wrap_pyfunction!(log_growth_condition, m)?)?;
    m.add_function(wrap_pyfunction!(fmo_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(chain_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(preimage_count, m)?)?;
    m.add_function(wrap_pyfunction!(decay_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(ring_example, m)?)?;
    m.add_function(wrap_pyfunction!(folding_example, m)?)?;
    Ok(())
}
