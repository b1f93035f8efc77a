//! Points, annuli, polyline curves, grid densities, and the two quadrature
//! primitives everything else reduces to: sphere sampling and line
//! integrals along polylines.
//!
//! All sphere rules are deterministic product rules. Weight sums reproduce
//! the exact sphere area to roundoff in every dimension; see
//! [`sphere_sample`] for the construction.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

/// A point of R^n, n >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinate".into()));
        }
        Ok(Point(coords))
    }

    /// The origin of R^n.
    pub fn origin(dim: usize) -> Result<Self> {
        Point::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(&self.0, other.coords())
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean norm of a coordinate slice.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance between coordinate slices of equal length.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Spherical ring (annulus) around a center: r_inner < |x - center| < r_outer.
#[derive(Debug, Clone)]
pub struct AnnulusSpec {
    center: Point,
    r_inner: f64,
    r_outer: f64,
}

impl AnnulusSpec {
    pub fn new(center: Point, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner.is_finite() && r_outer.is_finite() && 0.0 < r_inner && r_inner < r_outer) {
            return Err(Error::InvalidParameter(format!(
                "annulus radii must satisfy 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
            )));
        }
        Ok(AnnulusSpec { center, r_inner, r_outer })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }
    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }
    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Open-annulus membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        let r = dist(x, self.center.coords());
        self.r_inner < r && r < self.r_outer
    }

    /// Lebesgue volume Omega_n (r_outer^n - r_inner^n).
    pub fn volume(&self) -> f64 {
        let n = self.dim();
        let c = dimension_constants(n).expect("dim checked at construction");
        c.ball_volume * (self.r_outer.powi(n as i32) - self.r_inner.powi(n as i32))
    }
}

/// Piecewise-linear curve with at least two vertices.
#[derive(Debug, Clone)]
pub struct PolylineCurve {
    vertices: Vec<Point>,
    seg_lengths: Vec<f64>,
    length: f64,
}

impl PolylineCurve {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "polyline needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        let dim = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: vertices.iter().map(Point::dim).find(|&d| d != dim).unwrap(),
            });
        }
        let seg_lengths: Vec<f64> = vertices.windows(2).map(|w| w[0].dist(&w[1])).collect();
        let length = seg_lengths.iter().sum();
        Ok(PolylineCurve { vertices, seg_lengths, length })
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: Point, b: Point) -> Result<Self> {
        PolylineCurve::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn segment_lengths(&self) -> &[f64] {
        &self.seg_lengths
    }

    /// Point at arc length s from the start, clamped to [0, length].
    pub fn point_at(&self, s: f64) -> Point {
        let mut remaining = s.clamp(0.0, self.length);
        for (w, &len) in self.vertices.windows(2).zip(&self.seg_lengths) {
            if remaining <= len || len == 0.0 {
                if len == 0.0 {
                    continue;
                }
                let t = remaining / len;
                let coords = w[0]
                    .coords()
                    .iter()
                    .zip(w[1].coords())
                    .map(|(a, b)| a + t * (b - a))
                    .collect();
                return Point(coords);
            }
            remaining -= len;
        }
        self.vertices.last().expect("nonempty").clone()
    }

    /// The same path with every segment split into `pieces` equal parts.
    pub fn subdivided(&self, pieces: usize) -> PolylineCurve {
        let pieces = pieces.max(1);
        let mut vertices = Vec::with_capacity(self.vertices.len() * pieces);
        for w in self.vertices.windows(2) {
            for k in 0..pieces {
                let t = k as f64 / pieces as f64;
                let coords = w[0]
                    .coords()
                    .iter()
                    .zip(w[1].coords())
                    .map(|(a, b)| a + t * (b - a))
                    .collect();
                vertices.push(Point(coords));
            }
        }
        vertices.push(self.vertices.last().expect("nonempty").clone());
        PolylineCurve::new(vertices).expect("subdivision preserves validity")
    }

    /// Image polyline under a coordinate map (vertex by vertex).
    pub fn map_vertices<F>(&self, mut f: F) -> Result<PolylineCurve>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            vertices.push(Point::new(f(v.coords())?)?);
        }
        PolylineCurve::new(vertices)
    }
}

/// Piecewise-constant density attached to grid cells: one center, volume,
/// and value per cell. When built by the modulus solver it carries a
/// locator for fast point lookups; otherwise lookups fall back to the
/// nearest center.
#[derive(Clone)]
pub struct GridDensity {
    pub centers: Vec<Point>,
    pub volumes: Vec<f64>,
    pub values: Vec<f64>,
    locator: Option<Arc<dyn Fn(&[f64]) -> Option<usize> + Send + Sync>>,
}

impl std::fmt::Debug for GridDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDensity")
            .field("cells", &self.values.len())
            .field("has_locator", &self.locator.is_some())
            .finish()
    }
}

impl GridDensity {
    pub fn new(centers: Vec<Point>, volumes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if centers.len() != volumes.len() || centers.len() != values.len() {
            return Err(Error::InvalidParameter(
                "grid density needs equally many centers, volumes, and values".into(),
            ));
        }
        if centers.is_empty() {
            return Err(Error::InvalidParameter("grid density has no cells".into()));
        }
        if volumes.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidParameter("cell volumes must be positive".into()));
        }
        if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParameter("density values must be finite and >= 0".into()));
        }
        Ok(GridDensity { centers, volumes, values, locator: None })
    }

    pub fn with_locator(
        mut self,
        locator: Arc<dyn Fn(&[f64]) -> Option<usize> + Send + Sync>,
    ) -> Self {
        self.locator = Some(locator);
        self
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Value at a point: cell lookup when a locator is attached, nearest
    /// center otherwise. Points outside every cell evaluate to 0.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if let Some(loc) = &self.locator {
            return match loc(x) {
                Some(i) => self.values[i],
                None => 0.0,
            };
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = dist(x, c.coords());
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.values[best]
    }

    /// Energy integral: sum over cells of volume * value^n.
    pub fn energy(&self, n_exponent: f64) -> f64 {
        self.volumes
            .iter()
            .zip(&self.values)
            .map(|(v, rho)| v * rho.powf(n_exponent))
            .sum()
    }
}

/// Exact constants of R^n: the area of the unit sphere S^{n-1} and the
/// volume of the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionConstants {
    pub dim: usize,
    /// Surface area of S^{n-1}: 2 pi^{n/2} / Gamma(n/2).
    pub sphere_area: f64,
    /// Volume of the unit ball: sphere_area / n.
    pub ball_volume: f64,
}

/// Gamma(k/2) for integer k >= 1 via the exact half-integer recurrence.
fn gamma_half(k: usize) -> f64 {
    debug_assert!(k >= 1);
    let mut g = if k % 2 == 1 { PI.sqrt() } else { 1.0 };
    let mut j = if k % 2 == 1 { 1 } else { 2 };
    while j < k {
        g *= j as f64 / 2.0;
        j += 2;
    }
    g
}

/// pi^{k/2} for integer k >= 0 without powf drift.
fn pi_pow_half(k: usize) -> f64 {
    let mut v = PI.powi((k / 2) as i32);
    if k % 2 == 1 {
        v *= PI.sqrt();
    }
    v
}

/// Sphere-area and ball-volume constants for dimension n >= 2.
pub fn dimension_constants(n: usize) -> Result<DimensionConstants> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let sphere_area = 2.0 * pi_pow_half(n) / gamma_half(n);
    Ok(DimensionConstants { dim: n, sphere_area, ball_volume: sphere_area / n as f64 })
}

/// Default node count for sphere quadrature at dimension n, sized so the
/// product rules stay below ~1e-6 relative error on smooth integrands.
pub fn default_sphere_count(n: usize) -> usize {
    match n {
        2 => 16,
        3 => 50,
        4 => 200,
        _ => 200 * (n - 3),
    }
}

/// Smallest node count sphere_sample accepts.
pub fn min_sphere_count(n: usize) -> usize {
    if n == 2 {
        4
    } else {
        18
    }
}

/// Quadrature nodes and weights on the sphere S(center, radius).
///
/// n = 2 uses `count` equally spaced points with equal weights. n >= 3
/// uses a product-of-angles rule: each polar angle integrates in
/// t = cos(theta) with the sine-power Jacobian folded into the weights
/// (Gauss-Legendre for odd powers, Gauss-Chebyshev second kind for even),
/// and the azimuth uses the trapezoid rule. The rule returned has at
/// least `count` nodes (the smallest product shape 2L^{n-1} >= count),
/// and its weights sum to the exact sphere area
/// `sphere_area * radius^{n-1}` to roundoff.
pub fn sphere_sample(center: &Point, radius: f64, count: usize) -> Result<Vec<(Point, f64)>> {
    let n = center.dim();
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {radius}")));
    }
    if count < min_sphere_count(n) {
        return Err(Error::InvalidParameter(format!(
            "sphere sample count {count} below the minimum {} for dimension {n}",
            min_sphere_count(n)
        )));
    }
    let c = center.coords();
    if n == 2 {
        let w = 2.0 * PI * radius / count as f64;
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            let th = 2.0 * PI * j as f64 / count as f64;
            out.push((
                Point(vec![c[0] + radius * th.cos(), c[1] + radius * th.sin()]),
                w,
            ));
        }
        return Ok(out);
    }

    // smallest L with 2 L^{n-1} >= count, subject to the exactness floor
    let mut l = (((count as f64) / 2.0).powf(1.0 / (n as f64 - 1.0)).ceil() as usize).max(2);
    while 2 * l.pow((n - 1) as u32) < count {
        l += 1;
    }
    l = l.max((n - 2).div_ceil(2)).max(2);

    // per polar angle i (1-based): sine exponent k = n - 1 - i
    let mut angle_nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n - 2);
    for i in 1..=(n - 2) {
        let k = n - 1 - i;
        let rule = if k % 2 == 1 {
            let (ts, ws) = quad::gauss_legendre(l);
            ts.iter()
                .zip(&ws)
                .map(|(&t, &w)| {
                    let poly = (1.0 - t * t).powi(((k - 1) / 2) as i32);
                    (t, w * poly)
                })
                .collect()
        } else {
            let (ts, ws) = quad::gauss_chebyshev2(l);
            ts.iter()
                .zip(&ws)
                .map(|(&t, &w)| {
                    let poly = (1.0 - t * t).powi(((k - 2) / 2) as i32);
                    (t, w * poly)
                })
                .collect()
        };
        angle_nodes.push(rule);
    }
    let m_phi = 2 * l;
    let w_phi = 2.0 * PI / m_phi as f64;
    let r_pow = radius.powi((n - 1) as i32);

    let mut out = Vec::with_capacity(2 * l.pow((n - 1) as u32));
    let mut index = vec![0usize; n - 2];
    loop {
        // sin-product prefix and weight product for this polar multi-index
        let mut sin_prod = 1.0;
        let mut weight = r_pow;
        let mut partial: Vec<f64> = Vec::with_capacity(n - 2);
        for (i, &ix) in index.iter().enumerate() {
            let (t, w) = angle_nodes[i][ix];
            weight *= w;
            partial.push(sin_prod * t);
            sin_prod *= (1.0 - t * t).sqrt();
        }
        for j in 0..m_phi {
            let phi = w_phi * (j as f64 + 0.5);
            let mut x = vec![0.0; n];
            for (i, &p) in partial.iter().enumerate() {
                x[i] = radius * p;
            }
            x[n - 2] = radius * sin_prod * phi.cos();
            x[n - 1] = radius * sin_prod * phi.sin();
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += ci;
            }
            out.push((Point(x), weight * w_phi));
        }
        // advance the polar multi-index
        let mut axis = 0;
        loop {
            if axis == n - 2 {
                return Ok(out);
            }
            index[axis] += 1;
            if index[axis] < l {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}

/// Line integral of a scalar field along a polyline, fixed-order
/// Gauss-Legendre per segment (order 8 by default via
/// [`curve_line_integral`]). Converges at the quadrature order as the
/// segment subdivision refines.
pub fn curve_line_integral_with_order<F>(
    curve: &PolylineCurve,
    order: usize,
    mut field: F,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (nodes, weights) = quad::gauss_legendre(order);
    let mut acc = 0.0;
    for (w, &len) in curve.vertices.windows(2).zip(&curve.seg_lengths) {
        if len == 0.0 {
            continue;
        }
        let a = w[0].coords();
        let b = w[1].coords();
        let mut seg = 0.0;
        let mut x = vec![0.0; a.len()];
        for (&t, &wq) in nodes.iter().zip(&weights) {
            let s = 0.5 * (t + 1.0);
            for ((xi, &ai), &bi) in x.iter_mut().zip(a).zip(b) {
                *xi = ai + s * (bi - ai);
            }
            let v = field(&x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("line integrand".into()));
            }
            seg += wq * v;
        }
        acc += seg * 0.5 * len;
    }
    Ok(acc)
}

/// Line integral with the default order-8 rule per segment.
pub fn curve_line_integral<F>(curve: &PolylineCurve, field: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    curve_line_integral_with_order(curve, 8, field)
}

/// Line integral with adaptive Gauss-Kronrod per segment; use when the
/// restriction of the field to a segment is rough (e.g. near-singular at
/// a segment end).
pub fn curve_line_integral_adaptive<F>(
    curve: &PolylineCurve,
    abs_tol: f64,
    mut field: F,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let seg_count = curve.seg_lengths.iter().filter(|&&l| l > 0.0).count().max(1);
    let per_seg_tol = abs_tol / seg_count as f64;
    let mut acc = 0.0;
    for (w, &len) in curve.vertices.windows(2).zip(&curve.seg_lengths) {
        if len == 0.0 {
            continue;
        }
        let a = w[0].coords().to_vec();
        let b = w[1].coords().to_vec();
        let mut x = vec![0.0; a.len()];
        acc += quad::integrate_adaptive(
            |s| {
                for ((xi, &ai), &bi) in x.iter_mut().zip(&a).zip(&b) {
                    *xi = ai + s * (bi - ai);
                }
                field(&x)
            },
            0.0,
            1.0,
            per_seg_tol,
            1e-12,
        )? * len;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constants_match_gamma_closed_forms() {
        // omega_{n-1}: 2pi, 4pi, 2pi^2, 8pi^2/3, pi^3
        let expect = [
            (2, 2.0 * PI),
            (3, 4.0 * PI),
            (4, 2.0 * PI * PI),
            (5, 8.0 * PI * PI / 3.0),
            (6, PI.powi(3)),
        ];
        for (n, omega) in expect {
            let c = dimension_constants(n).unwrap();
            assert_relative_eq!(c.sphere_area, omega, max_relative = 1e-15);
        }
        // ball volumes: pi, 4pi/3, pi^2/2
        assert_relative_eq!(dimension_constants(2).unwrap().ball_volume, PI, max_relative = 1e-15);
        assert_relative_eq!(
            dimension_constants(3).unwrap().ball_volume,
            4.0 * PI / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            dimension_constants(4).unwrap().ball_volume,
            PI * PI / 2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sphere_area_equals_n_times_ball_volume_to_machine_precision() {
        for n in 2..=10 {
            let c = dimension_constants(n).unwrap();
            let diff = (c.sphere_area - n as f64 * c.ball_volume).abs();
            assert!(
                diff <= 4.0 * f64::EPSILON * c.sphere_area,
                "n={n}: {diff} too large"
            );
        }
    }

    #[test]
    fn dimension_one_rejected() {
        assert!(dimension_constants(1).is_err());
        assert!(Point::new(vec![1.0]).is_err());
    }

    #[test]
    fn circle_rule_is_equally_spaced_with_equal_weights() {
        let center = Point::origin(2).unwrap();
        let pts = sphere_sample(&center, 1.0, 8).unwrap();
        assert_eq!(pts.len(), 8);
        for (p, w) in &pts {
            assert_relative_eq!(*w, 2.0 * PI / 8.0, max_relative = 1e-15);
            assert_relative_eq!(p.norm(), 1.0, max_relative = 1e-12);
        }
        // first point on the positive x-axis, eighth-turn spacing
        assert_relative_eq!(pts[0].0.coords()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(pts[1].0.coords()[1], (PI / 4.0).sin(), max_relative = 1e-12);
    }

    #[test]
    fn sphere_weight_sums_reproduce_exact_area() {
        for n in 2..=6 {
            for radius in [0.5, 1.0, 2.0] {
                let center = Point::origin(n).unwrap();
                let count = default_sphere_count(n);
                let pts = sphere_sample(&center, radius, count).unwrap();
                assert!(pts.len() >= count);
                let sum: f64 = pts.iter().map(|(_, w)| w).sum();
                let exact = dimension_constants(n).unwrap().sphere_area
                    * radius.powi((n - 1) as i32);
                assert_relative_eq!(sum, exact, max_relative = 1e-12);
                for (p, w) in &pts {
                    assert!(*w > 0.0);
                    assert_relative_eq!(
                        dist(p.coords(), center.coords()),
                        radius,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_rule_integrates_coordinate_squares() {
        // int_{S^{n-1}} x_i^2 dS = area * r^2 / n, exact for the product rules
        for n in [3usize, 4, 5] {
            let center = Point::origin(n).unwrap();
            let r = 1.3;
            let pts = sphere_sample(&center, r, default_sphere_count(n)).unwrap();
            let area = dimension_constants(n).unwrap().sphere_area * r.powi((n - 1) as i32);
            for axis in 0..n {
                let q: f64 = pts
                    .iter()
                    .map(|(p, w)| w * p.coords()[axis] * p.coords()[axis])
                    .sum();
                assert_relative_eq!(q, area * r * r / n as f64, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn sphere_sample_rejects_tiny_counts_and_bad_radius() {
        let center = Point::origin(2).unwrap();
        assert!(sphere_sample(&center, 1.0, 3).is_err());
        assert!(sphere_sample(&center, 0.0, 16).is_err());
        assert!(sphere_sample(&center, -1.0, 16).is_err());
        let center3 = Point::origin(3).unwrap();
        assert!(sphere_sample(&center3, 1.0, 17).is_err());
    }

    #[test]
    fn off_center_spheres_shift_correctly() {
        let center = Point::new(vec![1.0, -2.0, 0.5]).unwrap();
        let pts = sphere_sample(&center, 0.25, 50).unwrap();
        for (p, _) in &pts {
            assert_relative_eq!(p.dist(&center), 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn radial_reciprocal_line_integral_is_log_ratio() {
        // int over the radial segment [1, e] of 1/(|x| log(e/1)) ds = 1
        let a = Point::new(vec![1.0, 0.0]).unwrap();
        let b = Point::new(vec![std::f64::consts::E, 0.0]).unwrap();
        let curve = PolylineCurve::segment(a, b).unwrap().subdivided(8);
        let v = curve_line_integral(&curve, |x| Ok(1.0 / norm(x))).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);

        let v = curve_line_integral_adaptive(&curve, 1e-12, |x| Ok(1.0 / norm(x))).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn unit_field_line_integral_is_length() {
        let verts = vec![
            Point::new(vec![0.0, 0.0]).unwrap(),
            Point::new(vec![1.0, 0.0]).unwrap(),
            Point::new(vec![1.0, 2.0]).unwrap(),
        ];
        let curve = PolylineCurve::new(verts).unwrap();
        assert_relative_eq!(curve.length(), 3.0, max_relative = 1e-15);
        let v = curve_line_integral(&curve, |_| Ok(1.0)).unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn polyline_needs_two_vertices() {
        assert!(PolylineCurve::new(vec![Point::origin(2).unwrap()]).is_err());
    }

    #[test]
    fn arc_length_parameterization_walks_the_path() {
        let verts = vec![
            Point::new(vec![0.0, 0.0]).unwrap(),
            Point::new(vec![2.0, 0.0]).unwrap(),
            Point::new(vec![2.0, 2.0]).unwrap(),
        ];
        let curve = PolylineCurve::new(verts).unwrap();
        assert_eq!(curve.point_at(1.0).coords(), &[1.0, 0.0]);
        assert_eq!(curve.point_at(3.0).coords(), &[2.0, 1.0]);
        assert_eq!(curve.point_at(99.0).coords(), &[2.0, 2.0]);
    }

    #[test]
    fn annulus_membership_and_volume() {
        let ann = AnnulusSpec::new(Point::origin(2).unwrap(), 1.0, 2.0).unwrap();
        assert!(ann.contains(&[1.5, 0.0]));
        assert!(!ann.contains(&[0.5, 0.0]));
        assert!(!ann.contains(&[2.5, 0.0]));
        assert_relative_eq!(ann.volume(), PI * 3.0, max_relative = 1e-14);
        assert!(AnnulusSpec::new(Point::origin(2).unwrap(), 2.0, 1.0).is_err());
        assert!(AnnulusSpec::new(Point::origin(2).unwrap(), 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_density_nearest_lookup_and_energy() {
        let centers = vec![
            Point::new(vec![0.0, 0.0]).unwrap(),
            Point::new(vec![1.0, 0.0]).unwrap(),
        ];
        let d = GridDensity::new(centers, vec![2.0, 3.0], vec![1.0, 4.0]).unwrap();
        assert_relative_eq!(d.eval(&[0.1, 0.0]), 1.0);
        assert_relative_eq!(d.eval(&[0.9, 0.0]), 4.0);
        assert_relative_eq!(d.energy(2.0), 2.0 + 3.0 * 16.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn line_integral_additive_under_splitting(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0,
            t in 0.1f64..0.9,
        ) {
            let a = Point::new(vec![ax, ay]).unwrap();
            let b = Point::new(vec![bx, by]).unwrap();
            prop_assume!(a.dist(&b) > 1e-6);
            let mid = Point::new(vec![ax + t * (bx - ax), ay + t * (by - ay)]).unwrap();
            let field = |x: &[f64]| Ok(1.0 + x[0] * x[0] + 0.5 * x[1]);
            let whole = curve_line_integral(
                &PolylineCurve::segment(a.clone(), b.clone()).unwrap(), field).unwrap();
            let first = curve_line_integral(
                &PolylineCurve::segment(a, mid.clone()).unwrap(), field).unwrap();
            let second = curve_line_integral(
                &PolylineCurve::segment(mid, b).unwrap(), field).unwrap();
            prop_assert!((whole - first - second).abs() <= 1e-9 * (1.0 + whole.abs()));
        }

        #[test]
        fn sphere_weight_sum_property(n in 2usize..=5, radius in 0.3f64..3.0) {
            let center = Point::origin(n).unwrap();
            let pts = sphere_sample(&center, radius, default_sphere_count(n)).unwrap();
            let sum: f64 = pts.iter().map(|(_, w)| w).sum();
            let exact = dimension_constants(n).unwrap().sphere_area * radius.powi((n - 1) as i32);
            prop_assert!((sum - exact).abs() <= 1e-8 * exact);
        }
    }
}
