//! Weighted annulus integrals, admissible growth checks, and finite mean
//! oscillation estimation for scalar majorant fields.
//!
//! A majorant field is a scalar function on R^n, usually radial around a
//! base point and singular there. The two growth checks compare the same
//! weighted annulus integral against two right-hand normalizations; the
//! FMO estimator measures how ball-averaged oscillation behaves as the
//! balls shrink.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dimension_constants, dist, sphere_sample, Point};
use crate::quad::{fit_line, integrate_adaptive};

type FieldFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type WeightFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// Scalar field on R^n.
#[derive(Clone)]
pub struct MajorantField {
    name: String,
    dim: usize,
    eval: Arc<FieldFn>,
}

impl std::fmt::Debug for MajorantField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MajorantField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl MajorantField {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let v = (self.eval)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("field {} at {:?}", self.name, x)));
        }
        Ok(v)
    }

    pub fn custom(
        dim: usize,
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(MajorantField { name: name.into(), dim, eval: Arc::new(f) })
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite("constant field value".into()));
        }
        Self::custom(dim, format!("constant({c})"), move |_| Ok(c))
    }

    /// log(1 / |x - base|).
    pub fn log_inverse_distance(base: Point) -> Self {
        let dim = base.dim();
        let name = "log_inverse_distance".to_string();
        let eval: Arc<FieldFn> = Arc::new(move |x: &[f64]| {
            let d = dist(x, base.coords());
            if d == 0.0 {
                return Err(Error::SingularPoint);
            }
            Ok((1.0 / d).ln())
        });
        MajorantField { name, dim, eval }
    }

    /// max(log(1 / |x - base|), 0)^p. The truncation keeps the power
    /// well defined outside the unit ball, where the log turns negative.
    pub fn log_inverse_power(base: Point, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log power exponent must be positive, got {p}"
            )));
        }
        let dim = base.dim();
        let name = format!("log_inverse_power({p})");
        let eval: Arc<FieldFn> = Arc::new(move |x: &[f64]| {
            let d = dist(x, base.coords());
            if d == 0.0 {
                return Err(Error::SingularPoint);
            }
            Ok((1.0 / d).ln().max(0.0).powf(p))
        });
        Ok(MajorantField { name, dim, eval })
    }

    /// 1 / |x - base|.
    pub fn inverse_distance(base: Point) -> Self {
        let dim = base.dim();
        let name = "inverse_distance".to_string();
        let eval: Arc<FieldFn> = Arc::new(move |x: &[f64]| {
            let d = dist(x, base.coords());
            if d == 0.0 {
                return Err(Error::SingularPoint);
            }
            Ok(1.0 / d)
        });
        MajorantField { name, dim, eval }
    }
}

/// Radial weight psi on (0, 1).
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    eval: Arc<WeightFn>,
}

impl std::fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightFunction").field("name", &self.name).finish()
    }
}

impl WeightFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight argument must lie in (0, 1), got {t}"
            )));
        }
        let v = (self.eval)(t)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("weight {} at {t}", self.name)));
        }
        Ok(v)
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        WeightFunction { name: name.into(), eval: Arc::new(f) }
    }

    pub fn one() -> Self {
        Self::custom("one", |_| Ok(1.0))
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight constant must be positive, got {c}"
            )));
        }
        Ok(Self::custom(format!("constant({c})"), move |_| Ok(c)))
    }

    /// 1 / (t log(1/t)), the canonical borderline weight.
    pub fn log_weight() -> Self {
        Self::custom("log_weight", |t| Ok(1.0 / (t * (1.0 / t).ln())))
    }

    /// 1 / t.
    pub fn inverse_t() -> Self {
        Self::custom("inverse_t", |t| Ok(1.0 / t))
    }
}

/// Average of the field over the sphere of radius r about center.
pub fn sphere_average(field: &MajorantField, center: &Point, r: f64) -> Result<f64> {
    sphere_average_with(
        field,
        center,
        r,
        crate::geometry::default_sphere_count(field.dim()),
    )
}

pub fn sphere_average_with(
    field: &MajorantField,
    center: &Point,
    r: f64,
    count: usize,
) -> Result<f64> {
    if center.dim() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), got: center.dim() });
    }
    let nodes = sphere_sample(center, r, count)?;
    let mut acc = 0.0;
    let mut total_w = 0.0;
    for (p, w) in &nodes {
        acc += w * field.eval(p.coords())?;
        total_w += w;
    }
    Ok(acc / total_w)
}

/// Integral of the weight over [eps, eps0]; the normalizer both growth
/// checks are scaled by.
pub fn normalizer(psi: &WeightFunction, eps: f64, eps0: f64) -> Result<f64> {
    check_radial_range(eps, eps0)?;
    integrate_adaptive(|t| psi.eval(t), eps, eps0, 1e-14, 1e-12)
}

fn check_radial_range(eps: f64, eps0: f64) -> Result<()> {
    if !(eps.is_finite() && eps0.is_finite() && 0.0 < eps && eps < eps0 && eps0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radial range must satisfy 0 < eps < eps0 < 1, got [{eps}, {eps0}]"
        )));
    }
    Ok(())
}

/// Weighted annulus integral of the field around the base point:
/// the integral over eps < |x - base| < eps0 of psi(|x - base|)^n Q(x),
/// computed as a radial integral of sphere averages in the variable
/// u = log(1/r), which spreads quadrature points toward the singularity.
pub fn annulus_condition_lhs(
    field: &MajorantField,
    psi: &WeightFunction,
    base: &Point,
    eps: f64,
    eps0: f64,
) -> Result<f64> {
    check_radial_range(eps, eps0)?;
    let n = field.dim();
    if base.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: base.dim() });
    }
    let omega = dimension_constants(n)?.sphere_area;
    let ni = n as i32;
    let integrand = |u: f64| -> Result<f64> {
        let r = (-u).exp();
        let avg = sphere_average(field, base, r)?;
        // du = -dr/r turns psi^n omega r^{n-1} q(r) dr into this
        Ok(psi.eval(r)?.powi(ni) * omega * r.powi(ni) * avg)
    };
    integrate_adaptive(integrand, (1.0 / eps0).ln(), (1.0 / eps).ln(), 1e-13, 1e-10)
}

/// Outcome of one growth check.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Integral of the weight over the radial range.
    pub normalizer: f64,
    pub satisfied: bool,
}

/// Admissible growth check with a free weight: the weighted annulus
/// integral must not exceed
/// amount * I^n / (log log(1/eps))^{n-1}, I being the weight normalizer.
/// Requires eps < 1/e so the double logarithm is positive.
pub fn check_growth_condition(
    field: &MajorantField,
    psi: &WeightFunction,
    base: &Point,
    amount: f64,
    eps: f64,
    eps0: f64,
) -> Result<ConditionReport> {
    if !(amount.is_finite() && amount > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "growth amount must be positive, got {amount}"
        )));
    }
    check_radial_range(eps, eps0)?;
    if eps >= std::f64::consts::E.recip() {
        return Err(Error::InvalidParameter(format!(
            "inner radius must be below 1/e for the double logarithm, got {eps}"
        )));
    }
    let n = field.dim() as i32;
    let lhs = annulus_condition_lhs(field, psi, base, eps, eps0)?;
    let i_val = normalizer(psi, eps, eps0)?;
    let rhs = amount * i_val.powi(n) / (1.0 / eps).ln().ln().powi(n - 1);
    Ok(ConditionReport { lhs, rhs, normalizer: i_val, satisfied: lhs <= rhs })
}

/// Admissible growth check with the canonical log weight built in: the
/// annulus integral with psi(t) = 1/(t log(1/t)) must not exceed
/// amount * log(log(1/eps) / log(1/eps0)). Degenerate ranges
/// (eps = eps0) pass trivially with both sides zero.
pub fn check_log_growth_condition(
    field: &MajorantField,
    base: &Point,
    amount: f64,
    eps: f64,
    eps0: f64,
) -> Result<ConditionReport> {
    if !(amount.is_finite() && amount > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "growth amount must be positive, got {amount}"
        )));
    }
    if !(eps.is_finite() && eps0.is_finite() && 0.0 < eps && eps <= eps0 && eps0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radial range must satisfy 0 < eps <= eps0 < 1, got [{eps}, {eps0}]"
        )));
    }
    if eps == eps0 {
        return Ok(ConditionReport { lhs: 0.0, rhs: 0.0, normalizer: 0.0, satisfied: true });
    }
    let psi = WeightFunction::log_weight();
    let lhs = annulus_condition_lhs(field, &psi, base, eps, eps0)?;
    let i_val = normalizer(&psi, eps, eps0)?;
    let rhs = amount * ((1.0 / eps).ln() / (1.0 / eps0).ln()).ln();
    Ok(ConditionReport { lhs, rhs, normalizer: i_val, satisfied: lhs <= rhs })
}

/// Integral of the field over the ball B(center, radius), by octave
/// subdivision in radius with adaptive quadrature per octave. Stops when
/// an octave contributes negligibly; errors out when contributions keep
/// growing toward the center (non-integrable singularity).
pub fn ball_integral(field: &MajorantField, center: &Point, radius: f64) -> Result<f64> {
    let n = field.dim();
    if center.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.dim() });
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let omega = dimension_constants(n)?.sphere_area;
    let ni = n as i32;
    let shell = |lo: f64, hi: f64| -> Result<f64> {
        integrate_adaptive(
            |u: f64| {
                let r = u.exp();
                Ok(omega * r.powi(ni) * sphere_average(field, center, r)?)
            },
            lo.ln(),
            hi.ln(),
            1e-14,
            1e-11,
        )
    };
    const MAX_OCTAVES: usize = 300;
    let mut acc = 0.0;
    let mut acc_abs = 0.0;
    let mut hi = radius;
    let mut growth_streak = 0usize;
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_OCTAVES {
        let lo = hi * 0.5;
        let c = shell(lo, hi)?;
        acc += c;
        acc_abs += c.abs();
        if c.abs() > 1.5 * prev {
            growth_streak += 1;
            if growth_streak >= 5 {
                return Err(Error::Quadrature(format!(
                    "ball integral of {} diverges toward the center",
                    field.name
                )));
            }
        } else {
            growth_streak = 0;
        }
        prev = c.abs();
        if c.abs() <= 1e-13 * acc_abs.max(f64::MIN_POSITIVE) {
            return Ok(acc);
        }
        hi = lo;
    }
    Err(Error::Quadrature(format!(
        "ball integral of {} did not converge within {MAX_OCTAVES} octaves",
        field.name
    )))
}

/// Mean of the field over B(center, radius).
pub fn ball_mean(field: &MajorantField, center: &Point, radius: f64) -> Result<f64> {
    let n = field.dim();
    let vol = dimension_constants(n)?.ball_volume * radius.powi(n as i32);
    Ok(ball_integral(field, center, radius)? / vol)
}

/// Mean oscillation of the field over B(center, radius): the ball mean
/// of |Q - mean|.
pub fn ball_oscillation(field: &MajorantField, center: &Point, radius: f64) -> Result<f64> {
    let mean = ball_mean(field, center, radius)?;
    let dev = MajorantField {
        name: format!("|{} - mean|", field.name),
        dim: field.dim,
        eval: {
            let inner = field.eval.clone();
            Arc::new(move |x: &[f64]| Ok((inner(x)? - mean).abs()))
        },
    };
    ball_mean(&dev, center, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmoVerdict {
    /// Oscillation stays bounded as the balls shrink.
    Fmo,
    /// Oscillation grows without bound.
    NotFmo,
    /// The ladder was too ambiguous to call.
    Inconclusive,
}

impl FmoVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            FmoVerdict::Fmo => "fmo",
            FmoVerdict::NotFmo => "not_fmo",
            FmoVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FmoReport {
    /// Ball radii, largest first, halving each level.
    pub radii: Vec<f64>,
    pub means: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Slope of median-normalized oscillation against log log(1/radius)
    /// over the smallest radii.
    pub normalized_slope: f64,
    pub verdict: FmoVerdict,
    /// Largest small-radius oscillation; infinite when not FMO.
    pub limsup_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FmoParams {
    /// Largest ball radius.
    pub r_max: f64,
    /// Number of halvings.
    pub levels: usize,
}

impl Default for FmoParams {
    fn default() -> Self {
        FmoParams { r_max: 0.25, levels: 12 }
    }
}

/// Estimate whether the field has finite mean oscillation at the base
/// point, from ball oscillations on a ladder of shrinking radii.
pub fn fmo_estimate(field: &MajorantField, base: &Point) -> Result<FmoReport> {
    fmo_estimate_with(field, base, FmoParams::default())
}

pub fn fmo_estimate_with(
    field: &MajorantField,
    base: &Point,
    params: FmoParams,
) -> Result<FmoReport> {
    let n = field.dim();
    if base.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: base.dim() });
    }
    if params.levels < 6 {
        return Err(Error::InvalidParameter(
            "oscillation ladder needs at least 6 levels".into(),
        ));
    }
    if !(params.r_max.is_finite() && params.r_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ladder radius must be positive, got {}",
            params.r_max
        )));
    }
    let radii: Vec<f64> =
        (0..params.levels).map(|k| params.r_max * 0.5f64.powi(k as i32)).collect();

    // bit-equal constancy shortcut: a constant field oscillates exactly
    // zero, no quadrature needed
    let mut probe_vals = Vec::new();
    let mut constant = true;
    for i in 1..=32u64 {
        let d = crate::quad::halton_direction(i, n);
        let r = params.r_max * crate::quad::radical_inverse(2, i).max(1e-3);
        let x: Vec<f64> =
            base.coords().iter().zip(&d).map(|(b, di)| b + r * di).collect();
        match field.eval(&x) {
            Ok(v) => {
                if let Some(&first) = probe_vals.first() {
                    if v != first {
                        constant = false;
                    }
                }
                probe_vals.push(v);
            }
            Err(_) => {
                constant = false;
            }
        }
        if !constant {
            break;
        }
    }
    if constant && !probe_vals.is_empty() {
        let m = probe_vals[0];
        return Ok(FmoReport {
            means: vec![m; radii.len()],
            oscillations: vec![0.0; radii.len()],
            radii,
            normalized_slope: 0.0,
            verdict: FmoVerdict::Fmo,
            limsup_estimate: 0.0,
        });
    }

    let mut means = Vec::with_capacity(radii.len());
    let mut oscs = Vec::with_capacity(radii.len());
    for &r in &radii {
        means.push(ball_mean(field, base, r)?);
        oscs.push(ball_oscillation(field, base, r)?);
    }

    let mut sorted = oscs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    if median == 0.0 {
        let limsup = oscs.iter().cloned().fold(0.0, f64::max);
        return Ok(FmoReport {
            radii,
            means,
            oscillations: oscs,
            normalized_slope: 0.0,
            verdict: FmoVerdict::Fmo,
            limsup_estimate: limsup,
        });
    }

    let tail = 5.min(oscs.len());
    let xs: Vec<f64> = radii[radii.len() - tail..]
        .iter()
        .map(|&r| (1.0 / r).ln().ln())
        .collect();
    let ys: Vec<f64> = oscs[oscs.len() - tail..].iter().map(|&o| o / median).collect();
    let (slope, _) = fit_line(&xs, &ys)?;
    let tail_max = oscs[oscs.len() - tail..].iter().cloned().fold(0.0, f64::max);

    let (verdict, limsup) = if slope < 0.05 {
        (FmoVerdict::Fmo, tail_max)
    } else if tail_max > 10.0 * median {
        (FmoVerdict::NotFmo, f64::INFINITY)
    } else {
        (FmoVerdict::Inconclusive, tail_max)
    };

    Ok(FmoReport {
        radii,
        means,
        oscillations: oscs,
        normalized_slope: slope,
        verdict,
        limsup_estimate: limsup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn origin(n: usize) -> Point {
        Point::origin(n).unwrap()
    }

    #[test]
    fn sphere_average_of_radial_field_is_its_profile() {
        let base = origin(3);
        let q = MajorantField::log_inverse_distance(base.clone());
        for &r in &[0.01, 0.3, 0.9] {
            let avg = sphere_average(&q, &base, r).unwrap();
            assert_relative_eq!(avg, (1.0f64 / r).ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn ball_mean_of_log_field_has_dimension_shift() {
        // mean of log(1/|x|) over B(0, eps) is log(1/eps) + 1/n
        for &n in &[2usize, 3] {
            let base = origin(n);
            let q = MajorantField::log_inverse_distance(base.clone());
            for &eps in &[0.5, 0.1, 0.02] {
                let m = ball_mean(&q, &base, eps).unwrap();
                assert_relative_eq!(
                    m,
                    (1.0f64 / eps).ln() + 1.0 / n as f64,
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn ball_oscillation_of_log_field_is_scale_free() {
        // mean |log(1/|x|) - mean| over B(0, eps) is 2/(e n) at every eps
        for &n in &[2usize, 3] {
            let base = origin(n);
            let q = MajorantField::log_inverse_distance(base.clone());
            let want = 2.0 / (std::f64::consts::E * n as f64);
            for &eps in &[0.5, 0.05] {
                let osc = ball_oscillation(&q, &base, eps).unwrap();
                assert_relative_eq!(osc, want, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn ball_mean_monte_carlo_cross_check() {
        // independent check of the octave machinery with uniform samples
        let base = origin(2);
        let q = MajorantField::log_inverse_distance(base.clone());
        let eps = 0.3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut acc = 0.0;
        let m = 1_000_000;
        for _ in 0..m {
            // uniform in the disk: r = eps sqrt(u)
            let r = eps * rng.random::<f64>().sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            acc += q.eval(&[r * th.cos(), r * th.sin()]).unwrap();
        }
        let mc = acc / m as f64;
        let exact = ball_mean(&q, &base, eps).unwrap();
        assert_relative_eq!(mc, exact, max_relative = 0.01);
    }

    #[test]
    fn ball_integral_rejects_non_integrable_singularity() {
        let base = origin(2);
        let q = MajorantField::custom(2, "r^-3", {
            let b = base.clone();
            move |x: &[f64]| {
                let d = dist(x, b.coords());
                if d == 0.0 {
                    return Err(Error::SingularPoint);
                }
                Ok(d.powi(-3))
            }
        })
        .unwrap();
        assert!(matches!(ball_integral(&q, &base, 0.5), Err(Error::Quadrature(_))));
    }

    #[test]
    fn normalizer_of_log_weight_is_double_log_ratio() {
        let psi = WeightFunction::log_weight();
        let eps = 1e-4;
        let eps0 = 0.2;
        let want = ((1.0f64 / eps).ln() / (1.0f64 / eps0).ln()).ln();
        assert_relative_eq!(normalizer(&psi, eps, eps0).unwrap(), want, max_relative = 1e-11);
    }

    #[test]
    fn flat_field_with_log_weight_integrates_to_pi() {
        // Q = 1, psi = 1/(t log(1/t)), n = 2, eps0 = 1/e, eps = 1/e^2:
        // the annulus integral is 2 pi (1 - 1/log(1/eps)) = pi
        let base = origin(2);
        let q = MajorantField::constant(2, 1.0).unwrap();
        let psi = WeightFunction::log_weight();
        let eps0 = std::f64::consts::E.recip();
        let eps = eps0 * eps0;
        let lhs = annulus_condition_lhs(&q, &psi, &base, eps, eps0).unwrap();
        assert_relative_eq!(lhs, std::f64::consts::PI, max_relative = 1e-10);
    }

    #[test]
    fn log_power_majorant_reduces_to_weight_normalizer() {
        // Q = (log(1/r))^{n-1} collapses the annulus integrand to
        // omega psi(r), so the integral is omega times the normalizer
        let n = 3;
        let base = origin(n);
        let q = MajorantField::log_inverse_power(base.clone(), (n - 1) as f64).unwrap();
        let psi = WeightFunction::log_weight();
        let (eps, eps0) = (1e-3, 0.3);
        let lhs = annulus_condition_lhs(&q, &psi, &base, eps, eps0).unwrap();
        let omega = dimension_constants(n).unwrap().sphere_area;
        let i_val = normalizer(&psi, eps, eps0).unwrap();
        assert_relative_eq!(lhs, omega * i_val, max_relative = 1e-9);
    }

    #[test]
    fn growth_condition_reports_sides_consistently() {
        let base = origin(2);
        let q = MajorantField::constant(2, 1.0).unwrap();
        let psi = WeightFunction::log_weight();
        let eps0 = std::f64::consts::E.recip();
        let eps = eps0 * eps0;
        // lhs = pi; normalizer = log 2; rhs = A (log 2)^2 / log 2
        let rep = check_growth_condition(&q, &psi, &base, 1.0, eps, eps0).unwrap();
        assert_relative_eq!(rep.lhs, std::f64::consts::PI, max_relative = 1e-10);
        assert_relative_eq!(rep.normalizer, 2.0f64.ln(), max_relative = 1e-11);
        assert_relative_eq!(rep.rhs, 2.0f64.ln(), max_relative = 1e-10);
        assert!(!rep.satisfied);
        // a large enough amount flips it
        let rep = check_growth_condition(&q, &psi, &base, 5.0, eps, eps0).unwrap();
        assert!(rep.satisfied);
    }

    #[test]
    fn growth_condition_requires_room_for_the_double_log() {
        let base = origin(2);
        let q = MajorantField::constant(2, 1.0).unwrap();
        let psi = WeightFunction::one();
        assert!(check_growth_condition(&q, &psi, &base, 1.0, 0.5, 0.9).is_err());
        assert!(check_growth_condition(&q, &psi, &base, 1.0, 0.2, 0.1).is_err());
        assert!(check_growth_condition(&q, &psi, &base, 0.0, 0.01, 0.1).is_err());
    }

    #[test]
    fn log_growth_condition_closed_form_plane() {
        // Q = 1, n = 2: lhs = 2 pi (1/log(1/eps0) - 1/log(1/eps)),
        // rhs = A log(log(1/eps)/log(1/eps0))
        let base = origin(2);
        let q = MajorantField::constant(2, 1.0).unwrap();
        let eps0 = std::f64::consts::E.recip();
        let eps = eps0 * eps0;
        let rep = check_log_growth_condition(&q, &base, 5.0, eps, eps0).unwrap();
        assert_relative_eq!(rep.lhs, std::f64::consts::PI, max_relative = 1e-10);
        assert_relative_eq!(rep.rhs, 5.0 * 2.0f64.ln(), max_relative = 1e-12);
        assert!(rep.satisfied);
        let rep = check_log_growth_condition(&q, &base, 4.0, eps, eps0).unwrap();
        assert!(!rep.satisfied, "4 log 2 < pi");
    }

    #[test]
    fn log_growth_condition_degenerate_range_passes() {
        let base = origin(2);
        let q = MajorantField::inverse_distance(base.clone());
        let rep = check_log_growth_condition(&q, &base, 1.0, 0.1, 0.1).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
    }

    #[test]
    fn constant_field_is_fmo_with_exact_zero_oscillation() {
        let base = origin(3);
        let q = MajorantField::constant(3, 7.25).unwrap();
        let rep = fmo_estimate(&q, &base).unwrap();
        assert_eq!(rep.verdict, FmoVerdict::Fmo);
        assert!(rep.oscillations.iter().all(|&o| o == 0.0));
        assert_eq!(rep.limsup_estimate, 0.0);
    }

    #[test]
    fn log_field_is_fmo_with_known_limsup() {
        let base = origin(2);
        let q = MajorantField::log_inverse_distance(base.clone());
        let rep = fmo_estimate(&q, &base).unwrap();
        assert_eq!(rep.verdict, FmoVerdict::Fmo);
        let want = 2.0 / (std::f64::consts::E * 2.0);
        assert_relative_eq!(rep.limsup_estimate, want, max_relative = 0.02);
        // oscillation ladder is flat
        let last = &rep.oscillations[rep.oscillations.len() - 5..];
        for &o in last {
            assert_relative_eq!(o, want, max_relative = 0.02);
        }
    }

    #[test]
    fn inverse_distance_field_is_not_fmo() {
        let base = origin(2);
        let q = MajorantField::inverse_distance(base.clone());
        let rep = fmo_estimate(&q, &base).unwrap();
        assert_eq!(rep.verdict, FmoVerdict::NotFmo);
        assert!(rep.limsup_estimate.is_infinite());
        // oscillation roughly doubles per level
        let k = rep.oscillations.len();
        assert!(rep.oscillations[k - 1] > 4.0 * rep.oscillations[k - 3]);
    }

    #[test]
    fn weight_and_field_validation() {
        let psi = WeightFunction::log_weight();
        assert!(psi.eval(0.0).is_err());
        assert!(psi.eval(1.0).is_err());
        assert!(psi.eval(0.5).is_ok());
        assert!(WeightFunction::constant(-1.0).is_err());
        assert!(MajorantField::constant(2, f64::NAN).is_err());
        assert!(MajorantField::log_inverse_power(origin(2), 0.0).is_err());
        let q = MajorantField::constant(2, 1.0).unwrap();
        assert!(q.eval(&[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn monte_carlo_oscillation_cross_check() {
        // seeded sampling confirms the oscillation integral, not just the mean
        let base = origin(2);
        let q = MajorantField::log_inverse_distance(base.clone());
        let eps = 0.1;
        let mean = ball_mean(&q, &base, eps).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut acc = 0.0;
        let m = 400_000;
        for _ in 0..m {
            let r = eps * rng.random::<f64>().sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            acc += (q.eval(&[r * th.cos(), r * th.sin()]).unwrap() - mean).abs();
        }
        let mc = acc / m as f64;
        let exact = ball_oscillation(&q, &base, eps).unwrap();
        assert_relative_eq!(mc, exact, max_relative = 0.01);
    }
}
