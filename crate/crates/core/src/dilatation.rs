//! Pointwise dilatation quantities and weighted integrability of the
//! inner dilatation over annuli.
//!
//! Conventions: with singular values s_1 >= ... >= s_n of the Jacobian J
//! and D = |det J|, the inner dilatation is K_I = D / s_n^n and the outer
//! one is K_O = s_1^n / D. Both are 1 when J vanishes (the map is locally
//! constant there; the record is flagged degenerate) and +infinity when J
//! is rank deficient without vanishing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gallery::MapHandle;
use crate::geometry::{dist, norm, sphere_sample, AnnulusSpec};
use crate::quad::{fit_line, integrate_gl};

/// Dilatation data of one Jacobian.
#[derive(Debug, Clone)]
pub struct DilatationRecord {
    pub k_i: f64,
    pub k_o: f64,
    pub jacobian_det: f64,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// True when the Jacobian vanished and both dilatations default to 1.
    pub degenerate: bool,
}

/// Jacobian of the map at x: the analytic closure when the handle has
/// one, otherwise central differences with step 1e-6 (1 + |x|). Finite
/// differencing refuses points closer than ten steps to the singular
/// point, where the stencil would straddle it.
pub fn jacobian_at(map: &MapHandle, x: &[f64]) -> Result<DMatrix<f64>> {
    if let Some(res) = map.analytic_jacobian(x) {
        return res;
    }
    let n = map.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    // The step must shrink with the distance to a singular point: there
    // the map's higher derivatives blow up like powers of that distance,
    // and a step tied only to |x| loses the small singular values in
    // truncation error.
    let mut scale = 1.0 + norm(x);
    if let Some(b) = map.domain().singular_point() {
        let d = dist(x, b.coords());
        if d < 1e-300 {
            return Err(Error::StepCrossesSingularity);
        }
        scale = scale.min(d);
    }
    let h = 1e-4 * scale;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let probe = |offset: f64| -> Result<Vec<f64>> {
            let mut xs = x.to_vec();
            xs[j] += offset;
            map.eval(&xs)
        };
        // five-point stencil, truncation O(h^4)
        let f_p2 = probe(2.0 * h)?;
        let f_p1 = probe(h)?;
        let f_m1 = probe(-h)?;
        let f_m2 = probe(-2.0 * h)?;
        for i in 0..n {
            m[(i, j)] = (-f_p2[i] + 8.0 * f_p1[i] - 8.0 * f_m1[i] + f_m2[i]) / (12.0 * h);
        }
    }
    Ok(m)
}

/// Dilatation record of an explicit Jacobian matrix. The scale argument
/// calibrates the vanishing test (pass 1 + |x| for a Jacobian taken at x).
pub fn dilatations_of_matrix(jac: &DMatrix<f64>, scale: f64) -> Result<DilatationRecord> {
    let n = jac.nrows();
    if !jac.is_square() || n < 2 {
        return Err(Error::InvalidParameter("dilatation needs a square matrix of size >= 2".into()));
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jacobian entry".into()));
    }
    let det = jac.determinant();
    let svd = jac.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s_max = sv[0];
    if sv[n - 1] < 1e-8 * s_max {
        // The SVD carries absolute error eps * s_max, which erases a
        // singular value this far below the top. |det| is the product of
        // all singular values and LU keeps its relative error near
        // eps * cond, so the smallest value is recovered from there.
        let larger: f64 = sv[..n - 1].iter().product();
        if larger > 0.0 {
            sv[n - 1] = det.abs() / larger;
        }
    }
    let s_min = sv[n - 1];
    if s_max < 1e-12 * scale {
        return Ok(DilatationRecord {
            k_i: 1.0,
            k_o: 1.0,
            jacobian_det: det,
            singular_values: sv,
            degenerate: true,
        });
    }
    let d = det.abs().max(f64::MIN_POSITIVE * 0.0).max(0.0);
    let (k_i, k_o) = if s_min == 0.0 || d == 0.0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (d / s_min.powi(n as i32), s_max.powi(n as i32) / d)
    };
    Ok(DilatationRecord { k_i, k_o, jacobian_det: det, singular_values: sv, degenerate: false })
}

/// Dilatation record of the map at a point.
pub fn dilatations_at(map: &MapHandle, x: &[f64]) -> Result<DilatationRecord> {
    let jac = jacobian_at(map, x)?;
    dilatations_of_matrix(&jac, 1.0 + norm(x))
}

/// One radial shell of the weighted norm computation.
#[derive(Debug, Clone)]
pub struct ShellSample {
    /// Geometric midpoint radius of the shell.
    pub radius: f64,
    /// Surface integral of K_I^q over the sphere of that radius.
    pub integrand: f64,
    /// Contribution of the whole shell to the annulus integral.
    pub contribution: f64,
}

/// Result of integrating K_I^q over an annulus.
#[derive(Debug, Clone)]
pub struct LqReport {
    /// Integral over the (truncated) annulus.
    pub value: f64,
    /// Outermost shell first.
    pub shells: Vec<ShellSample>,
    /// Log-log slope of the shell integrand near the inner radius.
    pub tail_slope: f64,
    /// True when the tail decays like r^t with t <= -1, so the integral
    /// blows up as the inner radius goes to 0.
    pub diverging: bool,
}

/// Surface integral of K_I^q over the sphere of radius r about the
/// annulus center. Nodes where the map is not differentiable (fold
/// planes) are skipped and the rest reweighted, provided they carry
/// under half the total weight.
fn ki_q_surface_integral(
    map: &MapHandle,
    center: &[f64],
    r: f64,
    q: f64,
    sphere_count: usize,
) -> Result<f64> {
    let nodes = sphere_sample(
        &crate::geometry::Point::new(center.to_vec())?,
        r,
        sphere_count,
    )?;
    let mut total_w = 0.0;
    let mut used_w = 0.0;
    let mut acc = 0.0;
    for (p, w) in &nodes {
        total_w += w;
        let rec = match dilatations_at(map, p.coords()) {
            Ok(rec) => rec,
            Err(Error::NotDifferentiable(_)) => continue,
            Err(e) => return Err(e),
        };
        if !rec.k_i.is_finite() {
            return Err(Error::Quadrature(format!(
                "inner dilatation is infinite on the sphere of radius {r}"
            )));
        }
        acc += w * rec.k_i.powf(q);
        used_w += w;
    }
    if used_w < 0.5 * total_w {
        return Err(Error::Quadrature(format!(
            "map not differentiable on most of the sphere of radius {r}"
        )));
    }
    Ok(acc * total_w / used_w)
}

/// Integral of K_I^q over the annulus with default sphere resolution.
pub fn ki_lq_norm(map: &MapHandle, annulus: &AnnulusSpec, q: f64) -> Result<LqReport> {
    ki_lq_norm_with(map, annulus, q, crate::geometry::default_sphere_count(map.dim()))
}

/// Integral of K_I^q over the annulus, computed shell by shell in
/// logarithmic radius, with a tail-slope fit near the inner radius that
/// classifies whether the integral stays bounded as the annulus closes
/// in on the center.
pub fn ki_lq_norm_with(
    map: &MapHandle,
    annulus: &AnnulusSpec,
    q: f64,
    sphere_count: usize,
) -> Result<LqReport> {
    let n = map.dim();
    if annulus.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: annulus.dim() });
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent q must be positive, got {q}")));
    }
    let center = annulus.center().coords().to_vec();
    let (r_in, r_out) = (annulus.r_inner(), annulus.r_outer());

    // octave shells in log radius, outermost first
    let mut boundaries = Vec::new();
    let mut r = r_out;
    while r > r_in * (1.0 + 1e-12) {
        boundaries.push(r.max(r_in));
        r *= 0.5;
    }
    boundaries.push(r_in);

    let mut shells = Vec::with_capacity(boundaries.len() - 1);
    let mut value = 0.0;
    for w in boundaries.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let integrand = |u: f64| -> Result<f64> {
            let r = u.exp();
            Ok(ki_q_surface_integral(map, &center, r, q, sphere_count)? * r)
        };
        // Fixed-order quadrature: over one octave the profile is close to
        // an exponential, which GL32 resolves to machine precision, while
        // the integrand itself carries SVD roundoff proportional to the
        // Jacobian's condition number. An error-driven subdivider would
        // chase that irreducible noise without ever reaching tolerance.
        let contribution = integrate_gl(integrand, lo.ln(), hi.ln(), 32)?;
        let mid = (lo * hi).sqrt();
        let s_mid = ki_q_surface_integral(map, &center, mid, q, sphere_count)?;
        shells.push(ShellSample { radius: mid, integrand: s_mid, contribution });
        value += contribution;
    }

    // fit the shell integrand against radius over the innermost decade
    let mut tail: Vec<&ShellSample> =
        shells.iter().filter(|s| s.radius <= 10.0 * r_in).collect();
    if tail.len() < 3 {
        let take = shells.len().min(3);
        tail = shells[shells.len() - take..].iter().collect();
    }
    let xs: Vec<f64> = tail.iter().map(|s| s.radius.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.integrand.max(f64::MIN_POSITIVE).ln()).collect();
    let (tail_slope, _) = fit_line(&xs, &ys)?;
    let diverging = tail_slope <= -1.0;

    Ok(LqReport { value, shells, tail_slope, diverging })
}
