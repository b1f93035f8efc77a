//! Shared numerical kernels: Gauss quadrature nodes, an adaptive
//! Gauss-Kronrod integrator, low-discrepancy point generation, and a
//! least-squares line fit.
//!
//! Everything in here is deterministic: no RNG, no thread-order effects.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending node order.
///
/// Newton iteration on the three-term recurrence. Exact for polynomials
/// of degree 2m - 1.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, d) = legendre_with_derivative(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // one polishing step so the weight uses a converged derivative
        let (p, d) = legendre_with_derivative(m, x);
        x -= p / d;
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[k] = -x;
        nodes[m - 1 - k] = x;
        weights[k] = w;
        weights[m - 1 - k] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Chebyshev (second kind) nodes and weights on [-1, 1]: weight
/// function sqrt(1 - t^2), closed-form nodes, ascending order.
///
/// Exact for sqrt(1 - t^2) * p(t) with deg p <= 2m - 1.
pub fn gauss_chebyshev2(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mp1 = (m + 1) as f64;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for j in (1..=m).rev() {
        let a = std::f64::consts::PI * j as f64 / mp1;
        nodes.push(a.cos());
        weights.push(std::f64::consts::PI / mp1 * a.sin() * a.sin());
    }
    (nodes, weights)
}

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
const XGK15: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK15: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG7: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 15 panel on [a, b]: (estimate, error estimate).
/// Never evaluates the endpoints.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK15[7] * fc;
    let mut gauss = WG7[3] * fc;
    for i in 0..7 {
        let dx = h * XGK15[i];
        let fs = f(c - dx)? + f(c + dx)?;
        kron += WGK15[i] * fs;
        if i % 2 == 1 {
            gauss += WG7[i / 2] * fs;
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).abs();
    if !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "integrand produced a non-finite panel on [{a}, {b}]"
        )));
    }
    Ok((value, err))
}

struct Panel {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Bisects the worst panel until the summed error estimate drops below
/// max(abs_tol, rel_tol * |integral|). Endpoint singularities are fine as
/// long as they are integrable; the rule never samples the endpoints.
pub fn integrate_adaptive<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter("non-finite integration bounds".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    const MAX_PANELS: usize = 4096;
    let (v0, e0) = gk15(&mut f, lo, hi)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { err: e0, a: lo, b: hi, value: v0 });
    let mut total = v0;
    let mut total_err = e0;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "did not reach tolerance after {MAX_PANELS} panels (error {total_err:.3e})"
            )));
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; accept what we have
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        let (vl, el) = gk15(&mut f, worst.a, mid)?;
        let (vr, er) = gk15(&mut f, mid, worst.b)?;
        total += vl + vr - worst.value;
        total_err += el + er - worst.err;
        heap.push(Panel { err: el, a: worst.a, b: mid, value: vl });
        heap.push(Panel { err: er, a: mid, b: worst.b, value: vr });
    }
    Ok(sign * total)
}

/// Fixed-order Gauss-Legendre integration of `f` over [a, b].
pub fn integrate_gl<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    order: usize,
) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        acc += w * f(c + h * t)?;
    }
    Ok(acc * h)
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `i` in the given base, in (0, 1) for i >= 1.
pub fn radical_inverse(base: u64, mut i: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton point with `dims` coordinates in (0, 1)^dims. `index` starts at 1.
pub fn halton(index: u64, dims: usize) -> Vec<f64> {
    assert!(dims <= HALTON_PRIMES.len(), "too many Halton dimensions");
    assert!(index >= 1, "Halton index starts at 1");
    HALTON_PRIMES[..dims]
        .iter()
        .map(|&p| radical_inverse(p, index))
        .collect()
}

/// Deterministic quasi-uniform direction on the unit sphere S^{n-1}:
/// Box-Muller applied to Halton coordinates, then normalized.
pub fn halton_direction(index: u64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let pairs = n.div_ceil(2);
    let h = halton(index, 2 * pairs);
    let mut v = Vec::with_capacity(n);
    for p in 0..pairs {
        let u1 = h[2 * p].max(1e-12);
        let u2 = h[2 * p + 1];
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        v.push(r * th.cos());
        if v.len() < n {
            v.push(r * th.sin());
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Least-squares line fit y = slope * x + intercept. Needs >= 2 points.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "line fit needs two same-length samples of length >= 2".into(),
        ));
    }
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-30 * (1.0 + sxx.abs()) {
        return Err(Error::InvalidParameter(
            "line fit degenerate: abscissae are all equal".into(),
        ));
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    Ok((slope, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_weight_sums_and_polynomial_exactness() {
        for m in 1..=24 {
            let (nodes, weights) = gauss_legendre(m);
            let sum: f64 = weights.iter().sum();
            assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
            // exact through degree 2m - 1
            for deg in (0..2 * m).step_by(2) {
                let q: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = 2.0 / (deg as f64 + 1.0);
                assert_relative_eq!(q, exact, max_relative = 1e-12);
            }
            // nodes ascend and are symmetric
            for i in 1..m {
                assert!(nodes[i] > nodes[i - 1]);
            }
        }
    }

    #[test]
    fn gauss_legendre_five_point_known_nodes() {
        let (nodes, weights) = gauss_legendre(5);
        assert_relative_eq!(nodes[4], 0.906179845938664, max_relative = 1e-13);
        assert_relative_eq!(nodes[3], 0.538469310105683, max_relative = 1e-13);
        assert_relative_eq!(nodes[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(weights[2], 128.0 / 225.0, max_relative = 1e-13);
    }

    #[test]
    fn chebyshev2_integrates_semicircle_weight_exactly() {
        for m in 1..=16 {
            let (nodes, weights) = gauss_chebyshev2(m);
            let sum: f64 = weights.iter().sum();
            assert_relative_eq!(sum, PI / 2.0, max_relative = 1e-14);
            if m >= 2 {
                // int sqrt(1-t^2) t^2 dt = pi/8
                let q: f64 = nodes.iter().zip(&weights).map(|(t, w)| w * t * t).sum();
                assert_relative_eq!(q, PI / 8.0, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let kron: f64 = 2.0 * WGK15[..7].iter().sum::<f64>() + WGK15[7];
        let gauss: f64 = 2.0 * WG7[..3].iter().sum::<f64>() + WG7[3];
        assert_relative_eq!(kron, 2.0, max_relative = 1e-13);
        assert_relative_eq!(gauss, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_matches_closed_forms() {
        let v = integrate_adaptive(|x| Ok(x.sin()), 0.0, PI, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);

        // integrable endpoint singularity
        let v = integrate_adaptive(|x: f64| Ok(x.sqrt().recip()), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-8);

        // log-singular weight 1/(t log^2(1/t)) on [e^-2, e^-1] -> 1/1 - 1/2
        let v = integrate_adaptive(
            |t: f64| {
                let u = (1.0 / t).ln();
                Ok(1.0 / (t * u * u))
            },
            (-2.0f64).exp(),
            (-1.0f64).exp(),
            1e-12,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-11);

        // orientation flip
        let v = integrate_adaptive(|x| Ok(x), 1.0, 0.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, -0.5, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_rejects_non_finite_integrand() {
        let r = integrate_adaptive(|_| Ok(f64::NAN), 0.0, 1.0, 1e-10, 1e-10);
        assert!(r.is_err());
    }

    #[test]
    fn halton_points_fill_the_unit_square() {
        let mut mean = [0.0; 2];
        let count = 512;
        for i in 1..=count {
            let p = halton(i, 2);
            assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0);
            mean[0] += p[0];
            mean[1] += p[1];
        }
        assert_relative_eq!(mean[0] / count as f64, 0.5, epsilon = 0.01);
        assert_relative_eq!(mean[1] / count as f64, 0.5, epsilon = 0.01);
    }

    #[test]
    fn halton_directions_are_unit_and_spread() {
        for n in 2..=5 {
            let mut mean = vec![0.0; n];
            for i in 1..=256u64 {
                let d = halton_direction(i, n);
                let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
                for (m, x) in mean.iter_mut().zip(&d) {
                    *m += x;
                }
            }
            for m in &mean {
                assert!(m.abs() / 256.0 < 0.12, "directions lopsided: {m}");
            }
        }
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (slope, intercept) = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(slope, 2.0, max_relative = 1e-13);
        assert_relative_eq!(intercept, 1.0, max_relative = 1e-13);
    }
}
