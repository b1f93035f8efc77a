//! Curve family modulus: analytic values for rings and caps, a discrete
//! primal-dual solver on structured grids, admissibility checks, and the
//! weighted modulus inequality for map images.
//!
//! The discrete problem minimizes sum_c v_c rho_c^n over cell densities
//! subject to unit line integrals along every curve. Any nonnegative
//! multiplier vector certifies a lower bound through the scale-optimized
//! dual; any admissible density certifies an upper bound. The solver
//! reports both, so the returned bracket is trustworthy even when the
//! iteration stops early.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dilatation::dilatations_at;
use crate::error::{Error, Result};
use crate::gallery::MapHandle;
use crate::geometry::{
    curve_line_integral_adaptive, dimension_constants, dist, norm, sphere_sample,
    GridDensity, Point, PolylineCurve,
};
use crate::integrals::MajorantField;
use crate::parallel::map_indexed;
use crate::quad::{gauss_legendre, integrate_adaptive};

/// Which geometric family a curve collection represents.
#[derive(Debug, Clone)]
pub enum FamilyDescriptor {
    /// Radial curves joining the boundary spheres of an annulus.
    Ring { center: Point, r_inner: f64, r_outer: f64 },
    /// Radial curves restricted to the half-space on the axis side.
    SphericalCap { center: Point, r_inner: f64, r_outer: f64, axis: Vec<f64> },
    /// No special structure.
    Custom { dim: usize },
}

impl FamilyDescriptor {
    pub fn ring(center: Point, r_inner: f64, r_outer: f64) -> Result<Self> {
        check_radii(r_inner, r_outer)?;
        Ok(FamilyDescriptor::Ring { center, r_inner, r_outer })
    }

    pub fn cap(center: Point, r_inner: f64, r_outer: f64, axis: Vec<f64>) -> Result<Self> {
        check_radii(r_inner, r_outer)?;
        if axis.len() != center.dim() {
            return Err(Error::DimensionMismatch { expected: center.dim(), got: axis.len() });
        }
        let len = norm(&axis);
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidParameter("cap axis must be a nonzero vector".into()));
        }
        let axis = axis.iter().map(|v| v / len).collect();
        Ok(FamilyDescriptor::SphericalCap { center, r_inner, r_outer, axis })
    }

    pub fn dim(&self) -> usize {
        match self {
            FamilyDescriptor::Ring { center, .. } => center.dim(),
            FamilyDescriptor::SphericalCap { center, .. } => center.dim(),
            FamilyDescriptor::Custom { dim } => *dim,
        }
    }
}

fn check_radii(r_inner: f64, r_outer: f64) -> Result<()> {
    if !(r_inner.is_finite() && r_outer.is_finite() && 0.0 < r_inner && r_inner < r_outer) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_inner < r_outer, got [{r_inner}, {r_outer}]"
        )));
    }
    Ok(())
}

/// A finite collection of polyline curves with a shared descriptor.
#[derive(Debug, Clone)]
pub struct CurveFamily {
    descriptor: FamilyDescriptor,
    curves: Vec<PolylineCurve>,
}

/// Pieces each radial curve is split into; fine enough that mapped
/// vertices trace image curves faithfully.
const RADIAL_PIECES: usize = 16;

impl CurveFamily {
    pub fn descriptor(&self) -> &FamilyDescriptor {
        &self.descriptor
    }
    pub fn curves(&self) -> &[PolylineCurve] {
        &self.curves
    }
    pub fn curve_count(&self) -> usize {
        self.curves.len()
    }
    pub fn dim(&self) -> usize {
        self.descriptor.dim()
    }

    /// Radial curves joining the two boundary spheres of the annulus, in
    /// `count` directions (rounded up to a full product rule for n >= 3).
    /// Directions sit at offset angles so they avoid common grid planes.
    pub fn ring(center: Point, r_inner: f64, r_outer: f64, count: usize) -> Result<Self> {
        let descriptor = FamilyDescriptor::ring(center.clone(), r_inner, r_outer)?;
        let dirs = ring_directions(&center, count)?;
        let curves = radial_curves(&center, r_inner, r_outer, &dirs)?;
        Ok(CurveFamily { descriptor, curves })
    }

    /// Radial curves in the hemisphere of directions around the axis.
    pub fn spherical_cap(
        center: Point,
        r_inner: f64,
        r_outer: f64,
        axis: Vec<f64>,
        count: usize,
    ) -> Result<Self> {
        let descriptor =
            FamilyDescriptor::cap(center.clone(), r_inner, r_outer, axis.clone())?;
        let unit_axis = match &descriptor {
            FamilyDescriptor::SphericalCap { axis, .. } => axis.clone(),
            _ => unreachable!(),
        };
        let dirs = hemisphere_directions(center.dim(), &unit_axis, count)?;
        let curves = radial_curves(&center, r_inner, r_outer, &dirs)?;
        Ok(CurveFamily { descriptor, curves })
    }

    pub fn custom(dim: usize, curves: Vec<PolylineCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidParameter("curve family must not be empty".into()));
        }
        if curves.iter().any(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: 0 });
        }
        Ok(CurveFamily { descriptor: FamilyDescriptor::Custom { dim }, curves })
    }

    /// The image family: every vertex pushed through the map. The
    /// descriptor degrades to Custom since the image geometry is the
    /// map's business.
    pub fn map_through(&self, map: &MapHandle) -> Result<CurveFamily> {
        let curves = self
            .curves
            .iter()
            .map(|c| c.map_vertices(|x| map.eval(x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CurveFamily { descriptor: FamilyDescriptor::Custom { dim: self.dim() }, curves })
    }
}

fn radial_curves(
    center: &Point,
    r_inner: f64,
    r_outer: f64,
    dirs: &[Vec<f64>],
) -> Result<Vec<PolylineCurve>> {
    let ratio = r_outer / r_inner;
    dirs.iter()
        .map(|d| {
            let vertices = (0..=RADIAL_PIECES)
                .map(|j| {
                    let r = r_inner * ratio.powf(j as f64 / RADIAL_PIECES as f64);
                    Point::new(
                        center.coords().iter().zip(d).map(|(c, di)| c + r * di).collect(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            PolylineCurve::new(vertices)
        })
        .collect()
}

fn ring_directions(center: &Point, count: usize) -> Result<Vec<Vec<f64>>> {
    let n = center.dim();
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one curve".into()));
    }
    if n == 2 {
        return Ok((0..count)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect());
    }
    let nodes = sphere_sample(&Point::origin(n)?, 1.0, count)?;
    Ok(nodes.into_iter().map(|(p, _)| p.coords().to_vec()).collect())
}

/// Householder reflection sending the last basis vector to `axis`
/// (both unit). Near-identity axes shortcut to a copy.
fn rotate_last_axis_to(axis: &[f64], v: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut h = axis.to_vec();
    h[n - 1] -= 1.0;
    let hh: f64 = h.iter().map(|x| x * x).sum();
    if hh < 1e-28 {
        return v.to_vec();
    }
    let hv: f64 = h.iter().zip(v).map(|(a, b)| a * b).sum();
    v.iter().zip(&h).map(|(vi, hi)| vi - 2.0 * hi * hv / hh).collect()
}

fn hemisphere_directions(n: usize, axis: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one curve".into()));
    }
    if n == 2 {
        // midpoint angles strictly inside the open half-circle
        let beta = axis[1].atan2(axis[0]);
        return Ok((0..count)
            .map(|i| {
                let th = beta - std::f64::consts::FRAC_PI_2
                    + std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect());
    }
    if n != 3 {
        return Err(Error::InvalidParameter(
            "cap families are supported in dimensions 2 and 3".into(),
        ));
    }
    // product of midpoints in height t in (0, 1) and azimuth
    let lt = ((count as f64 / 2.0).sqrt().ceil() as usize).max(2);
    let lphi = count.div_ceil(lt).max(3);
    let mut dirs = Vec::with_capacity(lt * lphi);
    for j in 0..lt {
        let t = (j as f64 + 0.5) / lt as f64;
        let s = (1.0 - t * t).sqrt();
        for k in 0..lphi {
            let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / lphi as f64;
            let local = [s * phi.cos(), s * phi.sin(), t];
            dirs.push(rotate_last_axis_to(axis, &local));
        }
    }
    Ok(dirs)
}

/// Cell partition of a region, fine enough to carry piecewise-constant
/// densities. Implementations know where a straight segment crosses
/// their cell boundaries, which makes curve incidence exact.
pub trait Grid: Send + Sync {
    fn dim(&self) -> usize;
    fn cell_count(&self) -> usize;
    fn volume(&self, cell: usize) -> f64;
    fn center(&self, cell: usize) -> Vec<f64>;
    fn locate(&self, x: &[f64]) -> Option<usize>;
    /// Shortest cell edge, a length scale for subdivision heuristics.
    fn min_extent(&self) -> f64;
    /// Sorted parameters in (0, 1) where the segment from a to b crosses
    /// cell boundaries.
    fn segment_breaks(&self, a: &[f64], b: &[f64]) -> Vec<f64>;
}

fn push_root(ts: &mut Vec<f64>, t: f64) {
    if t > 1e-12 && t < 1.0 - 1e-12 {
        ts.push(t);
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    if a == 0.0 {
        if b == 0.0 {
            return [None, None];
        }
        return [Some(-c / b), None];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { -b / a - r1 };
    [Some(r1), Some(r2)]
}

fn finish_breaks(mut ts: Vec<f64>) -> Vec<f64> {
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ts
}

/// Annular grid in the plane: geometric radii times uniform angles.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    center: Point,
    radii: Vec<f64>,
    n_r: usize,
    n_theta: usize,
}

impl PolarGrid {
    pub fn new(
        center: Point,
        r_inner: f64,
        r_outer: f64,
        n_r: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if center.dim() != 2 {
            return Err(Error::InvalidParameter("polar grids live in the plane".into()));
        }
        check_radii(r_inner, r_outer)?;
        if n_r == 0 || n_theta < 3 {
            return Err(Error::InvalidParameter(
                "polar grid needs n_r >= 1 and n_theta >= 3".into(),
            ));
        }
        let ratio = (r_outer / r_inner).powf(1.0 / n_r as f64);
        let radii = (0..=n_r)
            .map(|k| if k == n_r { r_outer } else { r_inner * ratio.powi(k as i32) })
            .collect();
        Ok(PolarGrid { center, radii, n_r, n_theta })
    }

    fn d_theta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }
}

impl Grid for PolarGrid {
    fn dim(&self) -> usize {
        2
    }
    fn cell_count(&self) -> usize {
        self.n_r * self.n_theta
    }
    fn volume(&self, cell: usize) -> f64 {
        let ir = cell / self.n_theta;
        0.5 * (self.radii[ir + 1].powi(2) - self.radii[ir].powi(2)) * self.d_theta()
    }
    fn center(&self, cell: usize) -> Vec<f64> {
        let ir = cell / self.n_theta;
        let it = cell % self.n_theta;
        let r = 0.5 * (self.radii[ir] + self.radii[ir + 1]);
        let th = (it as f64 + 0.5) * self.d_theta();
        vec![
            self.center.coords()[0] + r * th.cos(),
            self.center.coords()[1] + r * th.sin(),
        ]
    }
    fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != 2 {
            return None;
        }
        let dx = x[0] - self.center.coords()[0];
        let dy = x[1] - self.center.coords()[1];
        let r = (dx * dx + dy * dy).sqrt();
        if r < self.radii[0] || r > self.radii[self.n_r] {
            return None;
        }
        let ir = match self.radii.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(self.n_r - 1),
            Err(k) => (k - 1).min(self.n_r - 1),
        };
        let mut th = dy.atan2(dx);
        if th < 0.0 {
            th += 2.0 * std::f64::consts::PI;
        }
        let it = ((th / self.d_theta()) as usize).min(self.n_theta - 1);
        Some(ir * self.n_theta + it)
    }
    fn min_extent(&self) -> f64 {
        let dr = self.radii[1] - self.radii[0];
        dr.min(self.radii[0] * self.d_theta())
    }
    fn segment_breaks(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let c = self.center.coords();
        let ax = a[0] - c[0];
        let ay = a[1] - c[1];
        let ux = b[0] - a[0];
        let uy = b[1] - a[1];
        let mut ts = Vec::new();
        // circle crossings |a' + t u|^2 = r_k^2
        let qa = ux * ux + uy * uy;
        let qb = 2.0 * (ax * ux + ay * uy);
        for &rk in &self.radii {
            let qc = ax * ax + ay * ay - rk * rk;
            for root in quadratic_roots(qa, qb, qc).into_iter().flatten() {
                push_root(&mut ts, root);
            }
        }
        // angular ray crossings: w(t) parallel to (cos, sin) and forward
        for j in 0..self.n_theta {
            let th = j as f64 * self.d_theta();
            let (ct, st) = (th.cos(), th.sin());
            let denom = ux * st - uy * ct;
            if denom == 0.0 {
                continue;
            }
            let t = -(ax * st - ay * ct) / denom;
            if t > 1e-12 && t < 1.0 - 1e-12 {
                let wx = ax + t * ux;
                let wy = ay + t * uy;
                if wx * ct + wy * st > 0.0 {
                    push_root(&mut ts, t);
                }
            }
        }
        finish_breaks(ts)
    }
}

/// Annular grid in space: geometric radii, uniform height t = cos(theta),
/// uniform azimuth.
#[derive(Debug, Clone)]
pub struct SphericalGrid {
    center: Point,
    radii: Vec<f64>,
    n_r: usize,
    n_t: usize,
    n_phi: usize,
}

impl SphericalGrid {
    pub fn new(
        center: Point,
        r_inner: f64,
        r_outer: f64,
        n_r: usize,
        n_t: usize,
        n_phi: usize,
    ) -> Result<Self> {
        if center.dim() != 3 {
            return Err(Error::InvalidParameter("spherical grids live in dimension 3".into()));
        }
        check_radii(r_inner, r_outer)?;
        if n_r == 0 || n_t < 2 || n_phi < 3 {
            return Err(Error::InvalidParameter(
                "spherical grid needs n_r >= 1, n_t >= 2, n_phi >= 3".into(),
            ));
        }
        let ratio = (r_outer / r_inner).powf(1.0 / n_r as f64);
        let radii = (0..=n_r)
            .map(|k| if k == n_r { r_outer } else { r_inner * ratio.powi(k as i32) })
            .collect();
        Ok(SphericalGrid { center, radii, n_r, n_t, n_phi })
    }

    fn d_t(&self) -> f64 {
        2.0 / self.n_t as f64
    }
    fn d_phi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_phi as f64
    }
}

impl Grid for SphericalGrid {
    fn dim(&self) -> usize {
        3
    }
    fn cell_count(&self) -> usize {
        self.n_r * self.n_t * self.n_phi
    }
    fn volume(&self, cell: usize) -> f64 {
        let ir = cell / (self.n_t * self.n_phi);
        (self.radii[ir + 1].powi(3) - self.radii[ir].powi(3)) / 3.0
            * self.d_t()
            * self.d_phi()
    }
    fn center(&self, cell: usize) -> Vec<f64> {
        let ir = cell / (self.n_t * self.n_phi);
        let rest = cell % (self.n_t * self.n_phi);
        let it = rest / self.n_phi;
        let ip = rest % self.n_phi;
        let r = 0.5 * (self.radii[ir] + self.radii[ir + 1]);
        let t = -1.0 + (it as f64 + 0.5) * self.d_t();
        let phi = (ip as f64 + 0.5) * self.d_phi();
        let s = (1.0 - t * t).max(0.0).sqrt();
        let c = self.center.coords();
        vec![c[0] + r * s * phi.cos(), c[1] + r * s * phi.sin(), c[2] + r * t]
    }
    fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != 3 {
            return None;
        }
        let c = self.center.coords();
        let w = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = norm(&w);
        if r < self.radii[0] || r > self.radii[self.n_r] || r == 0.0 {
            return None;
        }
        let ir = match self.radii.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(self.n_r - 1),
            Err(k) => (k - 1).min(self.n_r - 1),
        };
        let t = (w[2] / r).clamp(-1.0, 1.0);
        let it = (((t + 1.0) / self.d_t()) as usize).min(self.n_t - 1);
        let mut phi = w[1].atan2(w[0]);
        if phi < 0.0 {
            phi += 2.0 * std::f64::consts::PI;
        }
        let ip = ((phi / self.d_phi()) as usize).min(self.n_phi - 1);
        Some((ir * self.n_t + it) * self.n_phi + ip)
    }
    fn min_extent(&self) -> f64 {
        let dr = self.radii[1] - self.radii[0];
        dr.min(self.radii[0] * self.d_t()).min(self.radii[0] * self.d_phi())
    }
    fn segment_breaks(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let c = self.center.coords();
        let aw: Vec<f64> = a.iter().zip(c).map(|(x, cc)| x - cc).collect();
        let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let mut ts = Vec::new();
        let qa: f64 = u.iter().map(|v| v * v).sum();
        let qb: f64 = 2.0 * aw.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>();
        let aa: f64 = aw.iter().map(|v| v * v).sum();
        // sphere crossings
        for &rk in &self.radii {
            for root in quadratic_roots(qa, qb, aa - rk * rk).into_iter().flatten() {
                push_root(&mut ts, root);
            }
        }
        // cone crossings w_z(t) = t_k |w(t)| (interior boundaries only)
        for k in 1..self.n_t {
            let tk = -1.0 + k as f64 * self.d_t();
            if tk.abs() < 1e-15 {
                // equator plane: linear
                if u[2] != 0.0 {
                    push_root(&mut ts, -aw[2] / u[2]);
                }
                continue;
            }
            // (aw_z + t u_z)^2 = tk^2 (aa + qb t + qa t^2)
            let ca = u[2] * u[2] - tk * tk * qa;
            let cb = 2.0 * aw[2] * u[2] - tk * tk * qb;
            let cc = aw[2] * aw[2] - tk * tk * aa;
            for root in quadratic_roots(ca, cb, cc).into_iter().flatten() {
                if root > 1e-12 && root < 1.0 - 1e-12 {
                    // discard the mirror cone
                    let wz = aw[2] + root * u[2];
                    if wz * tk >= 0.0 {
                        push_root(&mut ts, root);
                    }
                }
            }
        }
        // azimuth half-plane crossings
        for j in 0..self.n_phi {
            let phi = j as f64 * self.d_phi();
            let (cp, sp) = (phi.cos(), phi.sin());
            let denom = u[0] * sp - u[1] * cp;
            if denom == 0.0 {
                continue;
            }
            let t = -(aw[0] * sp - aw[1] * cp) / denom;
            if t > 1e-12 && t < 1.0 - 1e-12 {
                let wx = aw[0] + t * u[0];
                let wy = aw[1] + t * u[1];
                if wx * cp + wy * sp > 0.0 {
                    push_root(&mut ts, t);
                }
            }
        }
        finish_breaks(ts)
    }
}

/// Uniform axis-aligned box grid in any dimension.
#[derive(Debug, Clone)]
pub struct CartesianGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
    steps: Vec<f64>,
}

impl CartesianGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = lo.len();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if hi.len() != n || counts.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: hi.len().min(counts.len()) });
        }
        if counts.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter("grid counts must be positive".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
            return Err(Error::InvalidParameter("grid box must have positive extent".into()));
        }
        let steps = lo
            .iter()
            .zip(&hi)
            .zip(&counts)
            .map(|((l, h), &k)| (h - l) / k as f64)
            .collect();
        Ok(CartesianGrid { lo, hi, counts, steps })
    }
}

impl Grid for CartesianGrid {
    fn dim(&self) -> usize {
        self.lo.len()
    }
    fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }
    fn volume(&self, _cell: usize) -> f64 {
        self.steps.iter().product()
    }
    fn center(&self, cell: usize) -> Vec<f64> {
        let n = self.dim();
        let mut idx = vec![0usize; n];
        let mut rest = cell;
        for i in (0..n).rev() {
            idx[i] = rest % self.counts[i];
            rest /= self.counts[i];
        }
        (0..n).map(|i| self.lo[i] + (idx[i] as f64 + 0.5) * self.steps[i]).collect()
    }
    fn locate(&self, x: &[f64]) -> Option<usize> {
        let n = self.dim();
        if x.len() != n {
            return None;
        }
        let mut cell = 0usize;
        for i in 0..n {
            if x[i] < self.lo[i] || x[i] > self.hi[i] {
                return None;
            }
            let k = (((x[i] - self.lo[i]) / self.steps[i]) as usize).min(self.counts[i] - 1);
            cell = cell * self.counts[i] + k;
        }
        Some(cell)
    }
    fn min_extent(&self) -> f64 {
        self.steps.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    fn segment_breaks(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut ts = Vec::new();
        for i in 0..self.dim() {
            let u = b[i] - a[i];
            if u == 0.0 {
                continue;
            }
            for k in 0..=self.counts[i] {
                let plane = self.lo[i] + k as f64 * self.steps[i];
                push_root(&mut ts, (plane - a[i]) / u);
            }
        }
        finish_breaks(ts)
    }
}

/// Sparse curve-cell incidence: per curve, the exact length it spends in
/// each cell, found by cutting every segment at grid boundaries.
pub fn incidence_matrix(
    family: &CurveFamily,
    grid: &dyn Grid,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let rows = map_indexed(family.curve_count(), |ci| {
        let curve = &family.curves()[ci];
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let verts = curve.vertices();
        for w in verts.windows(2) {
            let (p, q) = (w[0].coords(), w[1].coords());
            let seg_len = dist(p, q);
            if seg_len == 0.0 {
                continue;
            }
            let mut cuts = vec![0.0];
            cuts.extend(grid.segment_breaks(p, q));
            cuts.push(1.0);
            for c in cuts.windows(2) {
                let (t0, t1) = (c[0], c[1]);
                if t1 <= t0 {
                    continue;
                }
                let tm = 0.5 * (t0 + t1);
                let mid: Vec<f64> =
                    p.iter().zip(q).map(|(x, y)| x + tm * (y - x)).collect();
                if let Some(cell) = grid.locate(&mid) {
                    *acc.entry(cell).or_insert(0.0) += seg_len * (t1 - t0);
                }
            }
        }
        acc.into_iter().collect::<Vec<_>>()
    });
    Ok(rows)
}

/// How a density is supplied to the admissibility check.
pub enum DensityRef<'a> {
    /// Pointwise field, integrated adaptively along each curve.
    Analytic(&'a MajorantField),
    /// Cell-constant values on a grid, integrated exactly along each
    /// segment using boundary cuts.
    PiecewiseConstant { density: &'a GridDensity, grid: &'a dyn Grid },
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// Line integral of the density along each curve.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// True when every margin reaches 1 within the tolerance.
    pub admissible: bool,
}

/// Check unit line-integral admissibility of a density for a family.
pub fn is_admissible(
    density: DensityRef,
    family: &CurveFamily,
    tol: f64,
) -> Result<AdmissibilityReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {tol}")));
    }
    let margins: Vec<f64> = match density {
        DensityRef::Analytic(field) => {
            let results = map_indexed(family.curve_count(), |ci| {
                curve_line_integral_adaptive(&family.curves()[ci], 1e-12, |x| {
                    field.eval(x)
                })
            });
            results.into_iter().collect::<Result<Vec<_>>>()?
        }
        DensityRef::PiecewiseConstant { density, grid } => {
            let rows = incidence_matrix(family, grid)?;
            rows.iter()
                .map(|row| row.iter().map(|&(c, len)| len * density.values[c]).sum())
                .collect()
        }
    };
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AdmissibilityReport { min_margin, admissible: min_margin >= 1.0 - tol, margins })
}

/// The extremal density of an annulus: 1/(|x - c| log(R/r)) inside,
/// zero outside. Its line integral along every radial curve of the
/// annulus is exactly 1.
pub fn rho_a_density(descriptor: &FamilyDescriptor) -> Result<MajorantField> {
    let (center, r_inner, r_outer) = match descriptor {
        FamilyDescriptor::Ring { center, r_inner, r_outer } => (center, r_inner, r_outer),
        FamilyDescriptor::SphericalCap { center, r_inner, r_outer, .. } => {
            (center, r_inner, r_outer)
        }
        FamilyDescriptor::Custom { .. } => {
            return Err(Error::InvalidParameter(
                "no reference density for a custom family".into(),
            ))
        }
    };
    let c = center.clone();
    let (ri, ro) = (*r_inner, *r_outer);
    let log_ratio = (ro / ri).ln();
    MajorantField::custom(center.dim(), "annulus_extremal", move |x: &[f64]| {
        let d = dist(x, c.coords());
        if d < ri || d > ro {
            return Ok(0.0);
        }
        Ok(1.0 / (d * log_ratio))
    })
}

/// Closed-form modulus for the structured families: the ring value is
/// sphere_area / log^{n-1}(R/r); a cap carries half of it.
pub fn analytic_modulus(descriptor: &FamilyDescriptor) -> Result<f64> {
    match descriptor {
        FamilyDescriptor::Ring { center, r_inner, r_outer } => {
            let n = center.dim();
            let omega = dimension_constants(n)?.sphere_area;
            Ok(omega / (r_outer / r_inner).ln().powi(n as i32 - 1))
        }
        FamilyDescriptor::SphericalCap { center, r_inner, r_outer, .. } => {
            let n = center.dim();
            let omega = dimension_constants(n)?.sphere_area;
            Ok(0.5 * omega / (r_outer / r_inner).ln().powi(n as i32 - 1))
        }
        FamilyDescriptor::Custom { .. } => Err(Error::InvalidParameter(
            "no closed-form modulus for a custom family".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub max_iters: usize,
    /// Relative bracket width that counts as converged.
    pub gap_tol: f64,
    /// Initial multiplicative step size.
    pub step: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams { max_iters: 20_000, gap_tol: 1e-3, step: 1.0 }
    }
}

/// Certified bracket for a discrete modulus problem.
#[derive(Debug, Clone)]
pub struct ModulusResult {
    /// Dual certificate: no admissible density has less energy.
    pub lower: f64,
    /// Energy of the best admissible density found.
    pub upper: f64,
    /// (upper - lower) / upper.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The admissible density achieving `upper`.
    pub density: GridDensity,
    /// Multipliers achieving `lower`, one per curve.
    pub multipliers: Vec<f64>,
}

/// Minimize sum v rho^n over cell densities subject to unit line
/// integrals along every curve, by projected multiplicative ascent on
/// the dual. Both bounds tighten monotonically; the result is a valid
/// bracket even when the gap tolerance is not reached.
pub fn discrete_modulus(
    family: &CurveFamily,
    grid: Arc<dyn Grid>,
    params: SolveParams,
) -> Result<ModulusResult> {
    let n = grid.dim();
    if family.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: family.dim() });
    }
    if params.max_iters == 0 || !(params.gap_tol > 0.0) || !(params.step > 0.0) {
        return Err(Error::InvalidParameter("bad solver parameters".into()));
    }
    let rows = incidence_matrix(family, grid.as_ref())?;
    for (i, row) in rows.iter().enumerate() {
        let total: f64 = row.iter().map(|&(_, len)| len).sum();
        if total <= 0.0 {
            return Err(Error::UncoveredCurve { index: i });
        }
    }
    let cells = grid.cell_count();
    let volumes: Vec<f64> = (0..cells).map(|c| grid.volume(c)).collect();
    let nf = n as f64;
    let dual_exp = nf / (nf - 1.0); // s^{n/(n-1)}
    let inv_nm1 = 1.0 / (nf - 1.0);

    let m = rows.len();
    let mut lambda = vec![1.0f64; m];
    let mut s = vec![0.0f64; cells];
    let mut rho = vec![0.0f64; cells];
    let mut margins = vec![0.0f64; m];

    let mut best_lower = 0.0f64;
    let mut best_upper = f64::INFINITY;
    let mut best_rho: Vec<f64> = Vec::new();
    let mut best_lambda = lambda.clone();
    let mut iterations = 0;
    let mut converged = false;

    for k in 0..params.max_iters {
        iterations = k + 1;
        // s = A^T lambda
        s.iter_mut().for_each(|v| *v = 0.0);
        for (row, &l) in rows.iter().zip(&lambda) {
            for &(c, len) in row {
                s[c] += l * len;
            }
        }
        // dual certificate, scale-optimized over lambda rays
        let sum_l: f64 = lambda.iter().sum();
        let mut t_val = 0.0;
        for c in 0..cells {
            if s[c] > 0.0 {
                t_val += s[c].powf(dual_exp) / volumes[c].powf(inv_nm1);
            }
        }
        if t_val > 0.0 {
            let lower = sum_l.powi(n as i32) / t_val.powf(nf - 1.0);
            if lower > best_lower {
                best_lower = lower;
                best_lambda.copy_from_slice(&lambda);
            }
        }
        // primal candidate from the same multipliers
        for c in 0..cells {
            rho[c] = if s[c] > 0.0 { (s[c] / (nf * volumes[c])).powf(inv_nm1) } else { 0.0 };
        }
        for (g, row) in margins.iter_mut().zip(&rows) {
            *g = row.iter().map(|&(c, len)| len * rho[c]).sum();
        }
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_margin > 0.0 {
            let energy: f64 = (0..cells).map(|c| volumes[c] * rho[c].powf(nf)).sum();
            let upper = energy / min_margin.powf(nf);
            if upper < best_upper {
                best_upper = upper;
                best_rho = rho.iter().map(|&v| v / min_margin).collect();
            }
        }
        if best_upper.is_finite() && best_lower > 0.0 {
            let gap = (best_upper - best_lower) / best_upper;
            if gap < params.gap_tol {
                converged = true;
                break;
            }
        }
        // multiplicative ascent toward unit margins, normalized so the
        // mean margin stays near 1
        let mean_margin = margins.iter().sum::<f64>() / m as f64;
        if mean_margin > 0.0 {
            let scale = mean_margin.powf(nf - 1.0).recip();
            lambda.iter_mut().for_each(|l| *l *= scale);
            margins.iter_mut().for_each(|g| *g /= mean_margin);
        }
        let tau = params.step / (1.0 + k as f64).sqrt();
        for (l, &g) in lambda.iter_mut().zip(&margins) {
            *l *= (tau * (1.0 - g)).clamp(-0.5, 0.5).exp();
            *l = l.max(1e-300);
        }
    }

    if !best_upper.is_finite() || best_lower <= 0.0 {
        return Err(Error::Quadrature(
            "modulus solver failed to produce a certified bracket".into(),
        ));
    }
    // the two certificates can cross by accumulated roundoff when the
    // bracket degenerates to a point; keep the ordering honest
    best_lower = best_lower.min(best_upper);

    let centers: Vec<Point> = (0..cells)
        .map(|c| Point::new(grid.center(c)))
        .collect::<Result<Vec<_>>>()?;
    let locator_grid = grid.clone();
    let density = GridDensity::new(centers, volumes, best_rho)?
        .with_locator(Arc::new(move |x: &[f64]| locator_grid.locate(x)));

    Ok(ModulusResult {
        lower: best_lower,
        upper: best_upper,
        gap: ((best_upper - best_lower) / best_upper).max(0.0),
        iterations,
        converged,
        density,
        multipliers: best_lambda,
    })
}

/// Parameters for the weighted image-modulus check.
#[derive(Debug, Clone, Copy)]
pub struct PoletskiiParams {
    /// Cells per axis of the Cartesian grid laid over the image.
    pub grid_cells_per_axis: usize,
    /// Curves in the source family.
    pub curve_count: usize,
    /// Directions for the weighted-energy surface rule.
    pub direction_count: usize,
    pub solve: SolveParams,
}

impl Default for PoletskiiParams {
    fn default() -> Self {
        PoletskiiParams {
            grid_cells_per_axis: 48,
            curve_count: 96,
            direction_count: 64,
            solve: SolveParams { gap_tol: 5e-3, ..SolveParams::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoletskiiReport {
    /// Certified lower bound for the modulus of the image family.
    pub image_modulus_lower: f64,
    /// Weighted energy: the integral of K_I times the extremal density
    /// to the n-th power over the source annulus.
    pub weighted_energy: f64,
    /// (weighted_energy - image_modulus_lower) / weighted_energy; the
    /// inequality predicts this stays nonnegative up to discretization.
    pub slack: f64,
    pub solver_iterations: usize,
    pub solver_gap: f64,
}

/// Check the weighted modulus inequality for the image of a ring or cap
/// family: a certified lower bound for the image modulus must not exceed
/// the K_I-weighted energy of the source extremal density.
pub fn check_poletskii(
    map: &MapHandle,
    source: &FamilyDescriptor,
    params: PoletskiiParams,
) -> Result<PoletskiiReport> {
    let n = map.dim();
    if source.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: source.dim() });
    }
    let (center, r_inner, r_outer) = match source {
        FamilyDescriptor::Ring { center, r_inner, r_outer } => {
            (center.clone(), *r_inner, *r_outer)
        }
        FamilyDescriptor::SphericalCap { center, r_inner, r_outer, .. } => {
            (center.clone(), *r_inner, *r_outer)
        }
        FamilyDescriptor::Custom { .. } => {
            return Err(Error::InvalidParameter(
                "image check needs a ring or cap source family".into(),
            ))
        }
    };
    let family = match source {
        FamilyDescriptor::Ring { .. } => {
            CurveFamily::ring(center.clone(), r_inner, r_outer, params.curve_count)?
        }
        FamilyDescriptor::SphericalCap { axis, .. } => CurveFamily::spherical_cap(
            center.clone(),
            r_inner,
            r_outer,
            axis.clone(),
            params.curve_count,
        )?,
        FamilyDescriptor::Custom { .. } => unreachable!(),
    };

    // certified lower bound for the image modulus on a box grid
    let image = family.map_through(map)?;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for curve in image.curves() {
        for v in curve.vertices() {
            for i in 0..n {
                lo[i] = lo[i].min(v.coords()[i]);
                hi[i] = hi[i].max(v.coords()[i]);
            }
        }
    }
    for i in 0..n {
        let pad = 1e-2 * (hi[i] - lo[i]).max(1e-12);
        lo[i] -= pad;
        hi[i] += pad;
    }
    let grid = Arc::new(CartesianGrid::new(
        lo,
        hi,
        vec![params.grid_cells_per_axis; n],
    )?);
    let image_result = discrete_modulus(&image, grid, params.solve)?;

    // weighted energy of the source extremal density
    let rho = rho_a_density(source)?;
    let dirs_weights = energy_directions(source, params.direction_count)?;
    let log_ratio = (r_outer / r_inner).ln();
    let integrand = |u: f64| -> Result<f64> {
        let r = u.exp();
        let rho_n = 1.0 / (r * log_ratio).powi(n as i32);
        let mut acc = 0.0;
        for (d, w) in &dirs_weights {
            let x: Vec<f64> =
                center.coords().iter().zip(d).map(|(c, di)| c + r * di).collect();
            let rec = dilatations_at(map, &x)?;
            if !rec.k_i.is_finite() {
                return Err(Error::Quadrature(
                    "inner dilatation is infinite on the source annulus".into(),
                ));
            }
            // w carries the unit-sphere surface element; scale to radius r
            acc += w * r.powi(n as i32 - 1) * rec.k_i;
        }
        // the extra r is the Jacobian of u = log r
        Ok(acc * rho_n * r)
    };
    let weighted_energy =
        integrate_adaptive(integrand, r_inner.ln(), r_outer.ln(), 1e-12, 1e-8)?;
    let _ = rho; // the density enters through its closed form above

    let slack = (weighted_energy - image_result.lower) / weighted_energy;
    Ok(PoletskiiReport {
        image_modulus_lower: image_result.lower,
        weighted_energy,
        slack,
        solver_iterations: image_result.iterations,
        solver_gap: image_result.gap,
    })
}

/// Unit-sphere directions and surface weights for the energy rule:
/// full sphere for a ring source, hemisphere around the axis for a cap.
fn energy_directions(
    source: &FamilyDescriptor,
    count: usize,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = source.dim();
    match source {
        FamilyDescriptor::Ring { .. } => {
            let nodes = sphere_sample(&Point::origin(n)?, 1.0, count)?;
            Ok(nodes.into_iter().map(|(p, w)| (p.coords().to_vec(), w)).collect())
        }
        FamilyDescriptor::SphericalCap { axis, .. } => match n {
            2 => {
                let beta = axis[1].atan2(axis[0]);
                let w = std::f64::consts::PI / count as f64;
                Ok((0..count)
                    .map(|i| {
                        let th = beta - std::f64::consts::FRAC_PI_2
                            + std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                        (vec![th.cos(), th.sin()], w)
                    })
                    .collect())
            }
            3 => {
                // t = cos(theta) in [0, 1] by Gauss-Legendre, azimuth by
                // midpoints; weights sum to the hemisphere area 2 pi
                let lt = 8usize;
                let lphi = (count.div_ceil(lt)).max(8);
                let (nodes, weights) = gauss_legendre(lt);
                let mut out = Vec::with_capacity(lt * lphi);
                for (tn, tw) in nodes.iter().zip(&weights) {
                    let t = 0.5 * (tn + 1.0);
                    let s = (1.0 - t * t).max(0.0).sqrt();
                    for k in 0..lphi {
                        let phi =
                            2.0 * std::f64::consts::PI * (k as f64 + 0.5) / lphi as f64;
                        let local = [s * phi.cos(), s * phi.sin(), t];
                        let w = 0.5 * tw * 2.0 * std::f64::consts::PI / lphi as f64;
                        out.push((rotate_last_axis_to(axis, &local), w));
                    }
                }
                Ok(out)
            }
            _ => Err(Error::InvalidParameter(
                "cap energy rule supports dimensions 2 and 3".into(),
            )),
        },
        FamilyDescriptor::Custom { .. } => {
            Err(Error::InvalidParameter("no energy rule for a custom family".into()))
        }
    }
}
