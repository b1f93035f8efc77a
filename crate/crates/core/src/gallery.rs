//! Ready-made map handles: the radial ring stretch, the cube-folding map,
//! inversion, linear/radial-power standards, tabulated samples, and
//! composition.
//!
//! A [`MapHandle`] owns an evaluation closure and, when a closed form is
//! available, an analytic Jacobian closure. Domain descriptors are
//! advisory: evaluation only rejects the singular point itself (and
//! non-finite output); membership is the caller's responsibility.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{dist, norm, AnnulusSpec, Point};

pub type EvalFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type JacFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Where a map lives, and where its isolated singular point sits (if any).
#[derive(Debug, Clone)]
pub enum DomainDescriptor {
    /// All of R^n.
    Whole { dim: usize },
    /// B(center, radius) minus the center.
    PuncturedBall { center: Point, radius: f64 },
    /// R^n minus one point.
    PuncturedSpace { center: Point },
    /// An open spherical ring.
    Annulus(AnnulusSpec),
    /// Axis-aligned box (tabulated maps).
    BoundingBox { lo: Point, hi: Point },
}

impl DomainDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            DomainDescriptor::Whole { dim } => *dim,
            DomainDescriptor::PuncturedBall { center, .. } => center.dim(),
            DomainDescriptor::PuncturedSpace { center } => center.dim(),
            DomainDescriptor::Annulus(a) => a.dim(),
            DomainDescriptor::BoundingBox { lo, .. } => lo.dim(),
        }
    }

    /// The isolated singular point, when the domain punctures one out.
    pub fn singular_point(&self) -> Option<&Point> {
        match self {
            DomainDescriptor::PuncturedBall { center, .. } => Some(center),
            DomainDescriptor::PuncturedSpace { center } => Some(center),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            DomainDescriptor::Whole { .. } => true,
            DomainDescriptor::PuncturedBall { center, radius } => {
                let d = dist(x, center.coords());
                d > 0.0 && d < *radius
            }
            DomainDescriptor::PuncturedSpace { center } => dist(x, center.coords()) > 0.0,
            DomainDescriptor::Annulus(a) => a.contains(x),
            DomainDescriptor::BoundingBox { lo, hi } => x
                .iter()
                .zip(lo.coords())
                .zip(hi.coords())
                .all(|((&xi, &l), &h)| l <= xi && xi <= h),
        }
    }
}

/// A map of R^n together with optional analytic derivative data.
#[derive(Clone)]
pub struct MapHandle {
    name: String,
    dim: usize,
    domain: DomainDescriptor,
    eval: Arc<EvalFn>,
    jacobian: Option<Arc<JacFn>>,
}

impl std::fmt::Debug for MapHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapHandle")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl MapHandle {
    pub fn from_parts(
        name: impl Into<String>,
        domain: DomainDescriptor,
        eval: Arc<EvalFn>,
        jacobian: Option<Arc<JacFn>>,
    ) -> Self {
        let dim = domain.dim();
        MapHandle { name: name.into(), dim, domain, eval, jacobian }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }
    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Evaluate at x. Errors on dimension mismatch, on the singular point
    /// itself, and on non-finite output; everything else is accepted
    /// (domain membership is advisory).
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if let Some(b) = self.domain.singular_point() {
            if dist(x, b.coords()) == 0.0 {
                return Err(Error::SingularPoint);
            }
        }
        let y = (self.eval)(x)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} at {:?}", self.name, x)));
        }
        Ok(y)
    }

    /// Analytic Jacobian at x, if the handle carries one.
    pub fn analytic_jacobian(&self, x: &[f64]) -> Option<Result<DMatrix<f64>>> {
        let jac = self.jacobian.as_ref()?;
        if x.len() != self.dim {
            return Some(Err(Error::DimensionMismatch { expected: self.dim, got: x.len() }));
        }
        if let Some(b) = self.domain.singular_point() {
            if dist(x, b.coords()) == 0.0 {
                return Some(Err(Error::SingularPoint));
            }
        }
        Some(jac(x))
    }

    /// Same map with the analytic Jacobian dropped (forces finite
    /// differences downstream); used to cross-check derivative paths.
    pub fn without_analytic_jacobian(&self) -> MapHandle {
        MapHandle { jacobian: None, ..self.clone() }
    }
}

/// Parameters of the radial ring stretch x -> ((1 + |x|^alpha)/|x|) x.
///
/// Any finite alpha > 0 yields a homeomorphism of the punctured unit ball
/// onto the ring 1 < |y| < 2, because r -> 1 + r^alpha is strictly
/// increasing. (The L^q-integrability regime for the inner dilatation is
/// alpha (n-1) q < n; the constructor does not enforce it.)
#[derive(Debug, Clone, Copy)]
pub struct RingMapParams {
    pub alpha: f64,
    pub dim: usize,
}

impl RingMapParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ring map exponent must be a finite positive number, got {alpha}"
            )));
        }
        Ok(RingMapParams { alpha, dim })
    }
}

/// Radial stretch of the punctured unit ball onto the ring 1 < |y| < 2:
/// f(x) = ((1 + |x|^alpha)/|x|) x, with analytic Jacobian
/// phi(r) I + (phi'(r)/r) x x^T for phi(r) = (1 + r^alpha)/r.
pub fn make_ring_map(params: RingMapParams) -> Result<MapHandle> {
    let RingMapParams { alpha, dim } = params;
    let center = Point::origin(dim)?;
    let domain = DomainDescriptor::PuncturedBall { center, radius: 1.0 };
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        let phi = (1.0 + r.powf(alpha)) / r;
        Ok(x.iter().map(|&xi| phi * xi).collect())
    });
    let jac: Arc<JacFn> = Arc::new(move |x: &[f64]| {
        let n = x.len();
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        let ra = r.powf(alpha);
        let phi = (1.0 + ra) / r;
        // phi'(r) = ((alpha - 1) r^alpha - 1) / r^2
        let dphi = ((alpha - 1.0) * ra - 1.0) / (r * r);
        let mut m = DMatrix::from_diagonal_element(n, n, phi);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += dphi / r * x[i] * x[j];
            }
        }
        Ok(m)
    });
    Ok(MapHandle::from_parts(
        format!("ring_stretch(alpha={alpha})"),
        domain,
        eval,
        Some(jac),
    ))
}

/// Closed-form inner dilatation of the ring stretch at radius r:
/// ((1 + r^alpha)/(alpha r^alpha))^{n-1}, valid while the tangential
/// stretch dominates the radial one (always when alpha <= 1; for
/// alpha > 1 up to r^alpha < 1/(alpha - 1)).
pub fn ring_map_inner_dilatation(alpha: f64, dim: usize, r: f64) -> f64 {
    let ra = r.powf(alpha);
    ((1.0 + ra) / (alpha * ra)).powi(dim as i32 - 1)
}

/// Parameters of the folding map (only the dimension).
#[derive(Debug, Clone, Copy)]
pub struct FoldingParams {
    pub dim: usize,
}

impl FoldingParams {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(FoldingParams { dim })
    }
}

/// Per-coordinate fold: reflect across the planes t = 2k - 1, 2k - 3, ...
/// until the value lands in [-1, 1]. Closed form: the period-4 triangle
/// wave through (0,0), (1,1), (3,-1).
pub fn fold_coordinate(t: f64) -> f64 {
    let u = (t + 1.0).rem_euclid(4.0);
    if u <= 2.0 {
        u - 1.0
    } else {
        3.0 - u
    }
}

/// Slope of the fold at t: +1 or -1, None exactly on a fold plane
/// (odd integers), where the fold is not differentiable.
pub fn fold_slope(t: f64) -> Option<f64> {
    let u = (t + 1.0).rem_euclid(4.0);
    if u == 0.0 || u == 2.0 {
        None
    } else if u < 2.0 {
        Some(1.0)
    } else {
        Some(-1.0)
    }
}

/// Reference implementation of the fold as the literal reflection
/// recurrence; kept as an independent oracle for the closed form.
pub fn fold_by_reflections(mut t: f64) -> f64 {
    let mut guard = 0;
    while t > 1.0 {
        // t lies in [2k-1, 2k+1]; reflect across the lower plane 2k - 1
        let k = ((t - 1.0) / 2.0).ceil();
        t = 2.0 * (2.0 * k - 1.0) - t;
        guard += 1;
        assert!(guard < 1_000_000, "fold recurrence failed to terminate");
    }
    while t < -1.0 {
        let k = ((t + 1.0) / 2.0).floor();
        t = 2.0 * (2.0 * k + 1.0) - t;
        guard += 1;
        assert!(guard < 1_000_000, "fold recurrence failed to terminate");
    }
    t
}

/// The folding construction: invert through the unit sphere, fold every
/// coordinate into [-1, 1], then scale by 1/sqrt(n) so the image cube
/// sits inside the closed unit ball. Piecewise conformal with inner
/// dilatation 1 off the fold planes; bounded by 1; essential behavior at
/// the origin.
pub fn make_folding_map(params: FoldingParams) -> Result<MapHandle> {
    let n = params.dim;
    let center = Point::origin(n)?;
    let domain = DomainDescriptor::PuncturedSpace { center };
    let scale = 1.0 / (n as f64).sqrt();
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(x.iter().map(|&xi| scale * fold_coordinate(xi / r2)).collect())
    });
    let jac: Arc<JacFn> = Arc::new(move |x: &[f64]| {
        let n = x.len();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        // chain rule: diag(fold slopes at y) * inversion Jacobian, scaled
        let mut slopes = Vec::with_capacity(n);
        for &xi in x {
            match fold_slope(xi / r2) {
                Some(s) => slopes.push(s),
                None => {
                    return Err(Error::NotDifferentiable(
                        "point maps onto a fold plane".into(),
                    ))
                }
            }
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let inv_ij = (if i == j { 1.0 } else { 0.0 }) - 2.0 * x[i] * x[j] / r2;
                m[(i, j)] = scale * slopes[i] * inv_ij / r2;
            }
        }
        Ok(m)
    });
    Ok(MapHandle::from_parts(format!("folding(n={n})"), domain, eval, Some(jac)))
}

/// Inversion through the unit sphere about the origin: x -> x / |x|^2.
/// Conformal (all singular values 1/|x|^2), orientation reversing.
pub fn make_inversion(dim: usize) -> Result<MapHandle> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let center = Point::origin(dim)?;
    let domain = DomainDescriptor::PuncturedSpace { center };
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(x.iter().map(|&xi| xi / r2).collect())
    });
    let jac: Arc<JacFn> = Arc::new(move |x: &[f64]| {
        let n = x.len();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularPoint);
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ((if i == j { 1.0 } else { 0.0 }) - 2.0 * x[i] * x[j] / r2) / r2;
            }
        }
        Ok(m)
    });
    Ok(MapHandle::from_parts(format!("inversion(n={dim})"), domain, eval, Some(jac)))
}

/// Catalog of simple reference maps.
#[derive(Debug, Clone)]
pub enum StandardMap {
    Identity { dim: usize },
    /// y = M x for a fixed square matrix.
    Linear { matrix: DMatrix<f64> },
    /// y = |x|^{exponent-1} x. exponent > 0.
    RadialPower { dim: usize, exponent: f64 },
    /// Planar squaring map (x1^2 - x2^2, 2 x1 x2); dimension 2 only.
    PlanarSquare,
    /// Constant map.
    Constant { value: Point },
}

/// Build a handle for a standard reference map.
pub fn make_standard(kind: StandardMap) -> Result<MapHandle> {
    match kind {
        StandardMap::Identity { dim } => {
            if dim < 2 {
                return Err(Error::DimensionTooSmall(dim));
            }
            let eval: Arc<EvalFn> = Arc::new(|x: &[f64]| Ok(x.to_vec()));
            let jac: Arc<JacFn> =
                Arc::new(|x: &[f64]| Ok(DMatrix::identity(x.len(), x.len())));
            Ok(MapHandle::from_parts(
                "identity",
                DomainDescriptor::Whole { dim },
                eval,
                Some(jac),
            ))
        }
        StandardMap::Linear { matrix } => {
            if !matrix.is_square() || matrix.nrows() < 2 {
                return Err(Error::InvalidParameter(
                    "linear map needs a square matrix of size >= 2".into(),
                ));
            }
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("linear map entry".into()));
            }
            let dim = matrix.nrows();
            let m = matrix.clone();
            let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
                let v = nalgebra::DVector::from_column_slice(x);
                Ok((&m * v).iter().copied().collect())
            });
            let jac: Arc<JacFn> = Arc::new(move |_x: &[f64]| Ok(matrix.clone()));
            Ok(MapHandle::from_parts(
                "linear",
                DomainDescriptor::Whole { dim },
                eval,
                Some(jac),
            ))
        }
        StandardMap::RadialPower { dim, exponent } => {
            if dim < 2 {
                return Err(Error::DimensionTooSmall(dim));
            }
            if !(exponent.is_finite() && exponent > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "radial power exponent must be positive, got {exponent}"
                )));
            }
            let center = Point::origin(dim)?;
            let domain = if exponent >= 1.0 {
                DomainDescriptor::Whole { dim }
            } else {
                DomainDescriptor::PuncturedSpace { center }
            };
            let c = exponent;
            let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
                let r = norm(x);
                if r == 0.0 {
                    return if c >= 1.0 {
                        Ok(vec![0.0; x.len()])
                    } else {
                        Err(Error::SingularPoint)
                    };
                }
                let phi = r.powf(c - 1.0);
                Ok(x.iter().map(|&xi| phi * xi).collect())
            });
            let jac: Arc<JacFn> = Arc::new(move |x: &[f64]| {
                let n = x.len();
                let r = norm(x);
                if r == 0.0 {
                    return Err(Error::SingularPoint);
                }
                let phi = r.powf(c - 1.0);
                let dphi_over_r = (c - 1.0) * r.powf(c - 3.0);
                let mut m = DMatrix::from_diagonal_element(n, n, phi);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += dphi_over_r * x[i] * x[j];
                    }
                }
                Ok(m)
            });
            Ok(MapHandle::from_parts(
                format!("radial_power({exponent})"),
                domain,
                eval,
                Some(jac),
            ))
        }
        StandardMap::PlanarSquare => {
            let eval: Arc<EvalFn> = Arc::new(|x: &[f64]| {
                Ok(vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]])
            });
            let jac: Arc<JacFn> = Arc::new(|x: &[f64]| {
                Ok(DMatrix::from_row_slice(
                    2,
                    2,
                    &[2.0 * x[0], -2.0 * x[1], 2.0 * x[1], 2.0 * x[0]],
                ))
            });
            Ok(MapHandle::from_parts(
                "planar_square",
                DomainDescriptor::Whole { dim: 2 },
                eval,
                Some(jac),
            ))
        }
        StandardMap::Constant { value } => {
            let dim = value.dim();
            let v = value.coords().to_vec();
            let eval: Arc<EvalFn> = Arc::new(move |_x: &[f64]| Ok(v.clone()));
            let jac: Arc<JacFn> =
                Arc::new(move |x: &[f64]| Ok(DMatrix::zeros(x.len(), x.len())));
            Ok(MapHandle::from_parts(
                "constant",
                DomainDescriptor::Whole { dim },
                eval,
                Some(jac),
            ))
        }
    }
}

/// Diagonal linear map from its diagonal entries.
pub fn make_diagonal(entries: &[f64]) -> Result<MapHandle> {
    let n = entries.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries));
    make_standard(StandardMap::Linear { matrix: m })
}

/// Composition outer(inner(x)). Dimensions must agree; the intermediate
/// point is checked against the outer domain lazily at evaluation. The
/// Jacobian chains when both factors carry analytic ones.
pub fn compose(outer: &MapHandle, inner: &MapHandle) -> Result<MapHandle> {
    if outer.dim() != inner.dim() {
        return Err(Error::DimensionMismatch { expected: inner.dim(), got: outer.dim() });
    }
    let name = format!("{}({})", outer.name(), inner.name());
    let o = outer.clone();
    let i = inner.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
        let mid = i.eval(x)?;
        if !o.domain().contains(&mid) {
            return Err(Error::DomainEscape);
        }
        o.eval(&mid)
    });
    let jacobian: Option<Arc<JacFn>> =
        if outer.has_analytic_jacobian() && inner.has_analytic_jacobian() {
            let o = outer.clone();
            let i = inner.clone();
            Some(Arc::new(move |x: &[f64]| {
                let mid = i.eval(x)?;
                let ji = i.analytic_jacobian(x).expect("checked above")?;
                let jo = o.analytic_jacobian(&mid).expect("checked above")?;
                Ok(jo * ji)
            }))
        } else {
            None
        };
    Ok(MapHandle::from_parts(name, inner.domain().clone(), eval, jacobian))
}

/// Tabulated map samples on a full structured (Cartesian product) grid.
#[derive(Debug, Clone)]
pub struct TabulatedSamples {
    /// Strictly increasing coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major values: index = sum_i idx_i * stride_i, innermost axis last;
    /// each entry is the image vector at the corresponding grid node.
    pub values: Vec<Vec<f64>>,
}

/// Map handle backed by multilinear interpolation of tabulated samples.
/// Lower fidelity than a closed form: derivatives downstream come from
/// finite differences of the interpolant, and evaluation outside the
/// sampled box is an error.
pub fn make_tabulated_map(samples: TabulatedSamples) -> Result<MapHandle> {
    let n = samples.axes.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut total = 1usize;
    for axis in &samples.axes {
        if axis.len() < 2 {
            return Err(Error::InvalidParameter(
                "each tabulated axis needs at least 2 coordinates".into(),
            ));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "tabulated axis coordinates must be strictly increasing".into(),
            ));
        }
        total = total
            .checked_mul(axis.len())
            .ok_or_else(|| Error::InvalidParameter("tabulated grid too large".into()))?;
    }
    if samples.values.len() != total {
        return Err(Error::InvalidParameter(format!(
            "tabulated grid expects {total} rows, got {}",
            samples.values.len()
        )));
    }
    if samples.values.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidParameter(
            "each tabulated value must have one component per axis".into(),
        ));
    }
    let lo = Point::new(samples.axes.iter().map(|a| a[0]).collect())?;
    let hi = Point::new(samples.axes.iter().map(|a| *a.last().unwrap()).collect())?;
    let domain = DomainDescriptor::BoundingBox { lo, hi };
    // strides with the last axis contiguous
    let mut strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        strides[i] = strides[i + 1] * samples.axes[i + 1].len();
    }
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64]| {
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let axis = &samples.axes[i];
            if x[i] < axis[0] || x[i] > *axis.last().unwrap() {
                return Err(Error::DomainEscape);
            }
            let j = match axis.binary_search_by(|v| v.partial_cmp(&x[i]).unwrap()) {
                Ok(j) => j.min(axis.len() - 2),
                Err(j) => j.saturating_sub(1).min(axis.len() - 2),
            };
            base[i] = j;
            frac[i] = (x[i] - axis[j]) / (axis[j + 1] - axis[j]);
        }
        let mut out = vec![0.0; n];
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut idx = 0usize;
            for i in 0..n {
                let up = (corner >> i) & 1 == 1;
                weight *= if up { frac[i] } else { 1.0 - frac[i] };
                idx += (base[i] + up as usize) * strides[i];
            }
            if weight == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&samples.values[idx]) {
                *o += weight * v;
            }
        }
        Ok(out)
    });
    Ok(MapHandle::from_parts("tabulated", domain, eval, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn ring_map_matches_closed_form_value() {
        // alpha = 1/2 at (1/4, 0): (1 + 1/2) / (1/4) * (1/4, 0) = (3/2, 0)
        let f = make_ring_map(RingMapParams::new(0.5, 2).unwrap()).unwrap();
        let y = f.eval(&[0.25, 0.0]).unwrap();
        assert_relative_eq!(y[0], 1.5, max_relative = 1e-15);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ring_map_modulus_is_one_plus_radius_power() {
        let alpha = 0.37;
        let f = make_ring_map(RingMapParams::new(alpha, 3).unwrap()).unwrap();
        for i in 1..=40u64 {
            let d = crate::quad::halton_direction(i, 3);
            let r = 0.02 + 0.9 * crate::quad::radical_inverse(2, i);
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let y = f.eval(&x).unwrap();
            assert_relative_eq!(norm(&y), 1.0 + r.powf(alpha), max_relative = 1e-12);
            assert!(norm(&y) > 1.0 && norm(&y) < 2.0);
        }
    }

    #[test]
    fn ring_map_rejects_origin_and_bad_alpha() {
        let f = make_ring_map(RingMapParams::new(0.5, 2).unwrap()).unwrap();
        assert!(matches!(f.eval(&[0.0, 0.0]), Err(Error::SingularPoint)));
        assert!(RingMapParams::new(0.0, 2).is_err());
        assert!(RingMapParams::new(-1.0, 2).is_err());
        assert!(RingMapParams::new(f64::INFINITY, 2).is_err());
        // alpha >= 1 is allowed
        assert!(RingMapParams::new(4.0, 2).is_ok());
    }

    #[test]
    fn fold_closed_form_hits_known_values() {
        assert_relative_eq!(fold_coordinate(0.5), 0.5);
        assert_relative_eq!(fold_coordinate(2.0), 0.0);
        assert_relative_eq!(fold_coordinate(4.0), 0.0);
        assert_relative_eq!(fold_coordinate(3.0), -1.0);
        assert_relative_eq!(fold_coordinate(5.0), 1.0);
        assert_relative_eq!(fold_coordinate(-2.0), 0.0);
        assert_relative_eq!(fold_coordinate(-3.0), 1.0);
    }

    #[test]
    fn fold_slope_is_unit_off_planes_and_undefined_on_them() {
        assert_eq!(fold_slope(0.5), Some(1.0));
        assert_eq!(fold_slope(2.0), Some(-1.0));
        assert_eq!(fold_slope(1.0), None);
        assert_eq!(fold_slope(-1.0), None);
        assert_eq!(fold_slope(3.0), None);
    }

    proptest! {
        #[test]
        fn fold_closed_form_agrees_with_reflection_recurrence(t in -60.0f64..60.0) {
            let a = fold_coordinate(t);
            let b = fold_by_reflections(t);
            prop_assert!((a - b).abs() < 1e-9, "t={t}: closed {a} vs recurrence {b}");
            prop_assert!((-1.0..=1.0).contains(&a));
        }

        #[test]
        fn fold_is_one_lipschitz(s in -30.0f64..30.0, t in -30.0f64..30.0) {
            prop_assert!((fold_coordinate(s) - fold_coordinate(t)).abs() <= (s - t).abs() + 1e-12);
        }
    }

    #[test]
    fn folding_map_is_bounded_by_one() {
        for n in [2usize, 3, 4] {
            let g = make_folding_map(FoldingParams::new(n).unwrap()).unwrap();
            for i in 1..=2500u64 {
                let d = crate::quad::halton_direction(i, n);
                let r = 1e-3 + 3.0 * crate::quad::radical_inverse(2, i);
                let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                let y = g.eval(&x).unwrap();
                assert!(norm(&y) <= 1.0 + 1e-12, "|g| = {} at r = {r}", norm(&y));
            }
        }
    }

    #[test]
    fn folding_preserves_segment_lengths_inside_one_cell() {
        // what the fold does inside a single cube is an isometry
        let n = 3;
        let g = make_folding_map(FoldingParams::new(n).unwrap()).unwrap();
        let scale = (n as f64).sqrt();
        // pick y-points in the interior of the cube [1, 3] x [-1, 1] x [5, 7],
        // pull back through the inversion, and compare image distances
        let ys = [
            vec![1.6, -0.2, 5.5],
            vec![1.7, -0.1, 5.6],
            vec![1.62, -0.25, 5.45],
        ];
        for a in &ys {
            for b in &ys {
                let ra: f64 = a.iter().map(|v| v * v).sum();
                let rb: f64 = b.iter().map(|v| v * v).sum();
                let xa: Vec<f64> = a.iter().map(|v| v / ra).collect();
                let xb: Vec<f64> = b.iter().map(|v| v / rb).collect();
                let ga = g.eval(&xa).unwrap();
                let gb = g.eval(&xb).unwrap();
                // scaled image distance equals the y-distance
                assert_relative_eq!(
                    scale * dist(&ga, &gb),
                    dist(a, b),
                    max_relative = 1e-10,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn folding_not_open_across_a_fold_plane() {
        // pick x so that y = x/|x|^2 sits on the fold plane y_1 = 1;
        // the image of a small ball around x stays in a half-space
        let n = 2;
        let g = make_folding_map(FoldingParams::new(n).unwrap()).unwrap();
        let y = [1.0, 0.4];
        let ry: f64 = y.iter().map(|v| v * v).sum();
        let x: Vec<f64> = y.iter().map(|v| v / ry).collect();
        let bound = 1.0 / (n as f64).sqrt();
        let gx = g.eval(&x).unwrap();
        assert_relative_eq!(gx[0], bound, max_relative = 1e-12);
        let mut below = 0;
        for i in 1..=200u64 {
            let d = crate::quad::halton_direction(i, n);
            let xp: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + 1e-4 * di).collect();
            let gp = g.eval(&xp).unwrap();
            assert!(gp[0] <= bound + 1e-12, "image crossed the fold half-space");
            if gp[0] < bound - 1e-9 {
                below += 1;
            }
        }
        assert!(below > 0, "ball collapsed to the plane itself");
    }

    #[test]
    fn inversion_is_an_involution() {
        let f = make_inversion(3).unwrap();
        for i in 1..=1000u64 {
            let d = crate::quad::halton_direction(i, 3);
            let r = 0.1 + 5.0 * crate::quad::radical_inverse(2, i);
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let y = f.eval(&x).unwrap();
            let back = f.eval(&y).unwrap();
            assert!(dist(&back, &x) <= 1e-12 * (1.0 + norm(&x)));
            assert_relative_eq!(norm(&y), 1.0 / norm(&x), max_relative = 1e-12);
        }
    }

    #[test]
    fn composition_chains_values_and_domains() {
        // inversion after the ring stretch lands in the ring 1/2 < |y| < 1
        let ring = make_ring_map(RingMapParams::new(0.5, 2).unwrap()).unwrap();
        let inv = make_inversion(2).unwrap();
        let h = compose(&inv, &ring).unwrap();
        for i in 1..=200u64 {
            let d = crate::quad::halton_direction(i, 2);
            let r = 0.05 + 0.9 * crate::quad::radical_inverse(2, i);
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let y = h.eval(&x).unwrap();
            assert!(norm(&y) > 0.5 && norm(&y) < 1.0);
        }
        assert!(h.has_analytic_jacobian());
    }

    #[test]
    fn composition_rejects_outer_domain_escape() {
        // ring stretch needs |x| > 0 inside the unit ball; feed it points
        // outside its punctured ball via an inner map that leaves the ball
        let ring = make_ring_map(RingMapParams::new(0.5, 2).unwrap()).unwrap();
        let double = make_diagonal(&[4.0, 4.0]).unwrap();
        let h = compose(&ring, &double).unwrap();
        assert!(matches!(h.eval(&[0.3, 0.0]), Err(Error::DomainEscape)));
    }

    #[test]
    fn standard_maps_evaluate() {
        let id = make_standard(StandardMap::Identity { dim: 3 }).unwrap();
        assert_eq!(id.eval(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);

        let sq = make_standard(StandardMap::PlanarSquare).unwrap();
        assert_eq!(sq.eval(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let y = sq.eval(&[-1.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 1.0);
        assert_relative_eq!(y[1], 0.0);

        let rp = make_standard(StandardMap::RadialPower { dim: 2, exponent: 3.0 }).unwrap();
        let y = rp.eval(&[2.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 8.0, max_relative = 1e-13);

        let c = make_standard(StandardMap::Constant { value: pt(&[5.0, 6.0]) }).unwrap();
        assert_eq!(c.eval(&[0.1, 0.2]).unwrap(), vec![5.0, 6.0]);
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let maps = vec![
            make_ring_map(RingMapParams::new(0.5, 2).unwrap()).unwrap(),
            make_ring_map(RingMapParams::new(1.7, 3).unwrap()).unwrap(),
            make_inversion(2).unwrap(),
            make_inversion(4).unwrap(),
            make_standard(StandardMap::RadialPower { dim: 3, exponent: 2.5 }).unwrap(),
            make_standard(StandardMap::PlanarSquare).unwrap(),
            make_folding_map(FoldingParams::new(2).unwrap()).unwrap(),
        ];
        for f in &maps {
            let n = f.dim();
            for i in 1..=25u64 {
                let d = crate::quad::halton_direction(7 * i + 1, n);
                let r = 0.15 + 0.6 * crate::quad::radical_inverse(3, i);
                let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                let jac = match f.analytic_jacobian(&x).unwrap() {
                    Ok(j) => j,
                    // folding map: skip points that land on a fold plane
                    Err(Error::NotDifferentiable(_)) => continue,
                    Err(e) => panic!("jacobian failed: {e}"),
                };
                let h = 1e-6 * (1.0 + norm(&x));
                for j in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fp = f.eval(&xp).unwrap();
                    let fm = f.eval(&xm).unwrap();
                    for i_row in 0..n {
                        let fd = (fp[i_row] - fm[i_row]) / (2.0 * h);
                        let an = jac[(i_row, j)];
                        assert!(
                            (fd - an).abs() <= 2e-5 * (1.0 + an.abs()),
                            "{}: d f_{i_row}/d x_{j} fd {fd} vs analytic {an} at {x:?}",
                            f.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tabulated_map_interpolates_a_linear_field_exactly() {
        // f(x, y) = (2x + y, x - y) sampled on a 3x4 grid
        let axes = vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 0.5, 1.0]];
        let mut values = Vec::new();
        for &x in &axes[0] {
            for &y in &axes[1] {
                values.push(vec![2.0 * x + y, x - y]);
            }
        }
        let f = make_tabulated_map(TabulatedSamples { axes, values }).unwrap();
        let y = f.eval(&[0.3, 0.7]).unwrap();
        assert_relative_eq!(y[0], 1.3, max_relative = 1e-13);
        assert_relative_eq!(y[1], -0.4, max_relative = 1e-13);
        assert!(matches!(f.eval(&[1.5, 0.5]), Err(Error::DomainEscape)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = make_inversion(2).unwrap();
        assert!(matches!(
            f.eval(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }
}
