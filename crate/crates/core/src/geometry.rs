//! Vector-space and Poincaré-ball primitives.
//!
//! Vectors are plain `f64` slices. The ball parameter `c > 0` describes the
//! open ball of radius `1/√c`, i.e. hyperbolic space of curvature `-c`.
//!
//! Public operations validate their inputs. The `*_vjp` functions are the
//! reverse-mode derivatives used by the model's backward pass; they assume
//! valid inputs and do no checking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper clamp for the `artanh` argument.
pub const ARTANH_CLAMP: f64 = 1.0 - 1e-7;
/// Floor for denominators that may approach zero.
pub const DENOM_FLOOR: f64 = 1e-15;
/// Default relative margin kept between projected points and the ball boundary.
pub const DEFAULT_BALL_MARGIN: f64 = 1e-5;
/// Default norm bound for the Euclidean hidden state.
pub const DEFAULT_MAX_NORM: f64 = 10.0;

// Below this value of √c‖x‖ the artanh/tanh ratios use their Taylor series.
const SERIES_CUTOFF: f64 = 1e-3;

/// The space hidden states and embeddings live in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Geometry {
    /// Plain vector addition followed by norm clipping to `max_norm`.
    #[serde(alias = "euclidean")]
    Euclidean { max_norm: f64 },
    /// Möbius addition on the Poincaré ball of radius `1/√c`.
    #[serde(alias = "hyperbolic")]
    Hyperbolic { c: f64 },
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry::Euclidean {
            max_norm: DEFAULT_MAX_NORM,
        }
    }
}

impl Geometry {
    pub fn euclidean(max_norm: f64) -> Result<Self> {
        let g = Geometry::Euclidean { max_norm };
        g.validate()?;
        Ok(g)
    }

    pub fn hyperbolic(c: f64) -> Result<Self> {
        let g = Geometry::Hyperbolic { c };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Euclidean { max_norm } if !(max_norm > 0.0) => Err(Error::usage(format!(
                "max_norm must be positive, got {max_norm}"
            ))),
            Geometry::Hyperbolic { c } if !(c > 0.0 && c.is_finite()) => Err(Error::usage(
                format!("ball parameter c must be positive and finite, got {c}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Geometry::Hyperbolic { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Euclidean { .. } => "Euclidean",
            Geometry::Hyperbolic { .. } => "Hyperbolic",
        }
    }

    /// Left-to-right composition of a list of vectors: plain sum in Euclidean
    /// space (no clipping), Möbius sum on the ball.
    pub fn compose<'a, I>(&self, dim: usize, vectors: I) -> Vec<f64>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut acc = vec![0.0; dim];
        for v in vectors {
            match *self {
                Geometry::Euclidean { .. } => {
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += x;
                    }
                }
                Geometry::Hyperbolic { c } => {
                    acc = project_to_ball(&mobius_add_unchecked(&acc, v, c), c, DEFAULT_BALL_MARGIN);
                }
            }
        }
        acc
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let denom = norm(x) * norm(y);
    if denom <= DENOM_FLOOR {
        0.0
    } else {
        (dot(x, y) / denom).clamp(-1.0, 1.0)
    }
}

pub fn negate(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

fn check_same_dim(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("vector has non-finite components"));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::usage(format!(
            "ball parameter c must be positive and finite, got {c}"
        )));
    }
    Ok(())
}

fn check_in_ball(x: &[f64], c: f64) -> Result<()> {
    check_finite(x)?;
    let r = norm(x);
    if r * c.sqrt() >= 1.0 {
        return Err(Error::Domain(format!(
            "point with norm {r} lies outside the open ball of radius {}",
            1.0 / c.sqrt()
        )));
    }
    Ok(())
}

/// Whether `x` lies strictly inside the ball of radius `1/√c`.
pub fn in_ball(x: &[f64], c: f64) -> bool {
    norm(x) * c.sqrt() < 1.0
}

fn artanh_clamped(z: f64) -> f64 {
    z.clamp(0.0, ARTANH_CLAMP).atanh()
}

/// artanh(z)/z, continuous at 0.
fn artanh_ratio(z: f64) -> f64 {
    if z < SERIES_CUTOFF {
        let z2 = z * z;
        1.0 + z2 / 3.0 + z2 * z2 / 5.0
    } else {
        artanh_clamped(z) / z
    }
}

/// tanh(z)/z, continuous at 0.
fn tanh_ratio(z: f64) -> f64 {
    if z < SERIES_CUTOFF {
        let z2 = z * z;
        1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0
    } else {
        z.tanh() / z
    }
}

/// (1/(1-z²) - artanh(z)/z) / z²
fn artanh_ratio_slope(z: f64) -> f64 {
    if z < SERIES_CUTOFF {
        let z2 = z * z;
        2.0 / 3.0 + 4.0 * z2 / 5.0 + 6.0 * z2 * z2 / 7.0
    } else if z >= ARTANH_CLAMP {
        // The clamped branch is flat in the radius.
        -artanh_clamped(z) / (z * z * z)
    } else {
        (1.0 / (1.0 - z * z) - artanh_clamped(z) / z) / (z * z)
    }
}

/// (sech²(z) - tanh(z)/z) / z²
fn tanh_ratio_slope(z: f64) -> f64 {
    if z < SERIES_CUTOFF {
        let z2 = z * z;
        -2.0 / 3.0 + 8.0 * z2 / 15.0 - 17.0 * z2 * z2 / 45.0
    } else {
        let t = z.tanh();
        ((1.0 - t * t) - t / z) / (z * z)
    }
}

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add(x: &[f64], y: &[f64], c: f64) -> Result<Vec<f64>> {
    check_same_dim(x, y)?;
    check_c(c)?;
    check_in_ball(x, c)?;
    check_in_ball(y, c)?;
    Ok(mobius_add_unchecked(x, y, c))
}

pub(crate) fn mobius_add_unchecked(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let xy = dot(x, y);
    let nx = norm_sq(x);
    let ny = norm_sq(y);
    let a = 1.0 + 2.0 * c * xy + c * ny;
    let b = 1.0 - c * nx;
    let denom = (1.0 + 2.0 * c * xy + c * c * nx * ny).max(DENOM_FLOOR);
    x.iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / denom)
        .collect()
}

/// Reverse-mode derivative of `x ⊕_c y`: returns `(∂/∂x, ∂/∂y)` contracted with `g`.
pub fn mobius_add_vjp(x: &[f64], y: &[f64], c: f64, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let xy = dot(x, y);
    let nx = norm_sq(x);
    let ny = norm_sq(y);
    let a = 1.0 + 2.0 * c * xy + c * ny;
    let b = 1.0 - c * nx;
    let denom = (1.0 + 2.0 * c * xy + c * c * nx * ny).max(DENOM_FLOOR);

    let out: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / denom)
        .collect();
    // Upstream through numerator N and denominator D of out = N / D.
    let g_num: Vec<f64> = g.iter().map(|v| v / denom).collect();
    let g_den = -dot(g, &out) / denom;

    let xg = dot(x, &g_num);
    let yg = dot(y, &g_num);

    let gx = (0..x.len())
        .map(|i| {
            a * g_num[i] + 2.0 * c * xg * y[i] - 2.0 * c * yg * x[i]
                + g_den * (2.0 * c * y[i] + 2.0 * c * c * ny * x[i])
        })
        .collect();
    let gy = (0..x.len())
        .map(|i| {
            b * g_num[i]
                + 2.0 * c * xg * (x[i] + y[i])
                + g_den * (2.0 * c * x[i] + 2.0 * c * c * nx * y[i])
        })
        .collect();
    (gx, gy)
}

/// Geodesic distance on the Poincaré ball: `(2/√c) artanh(√c ‖(−x) ⊕_c y‖)`.
pub fn poincare_distance(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    check_same_dim(x, y)?;
    check_c(c)?;
    check_in_ball(x, c)?;
    check_in_ball(y, c)?;
    Ok(poincare_distance_unchecked(x, y, c))
}

pub(crate) fn poincare_distance_unchecked(x: &[f64], y: &[f64], c: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    let w = mobius_add_unchecked(&negate(x), y, c);
    let sc = c.sqrt();
    2.0 / sc * artanh_clamped(sc * norm(&w))
}

/// Squared Poincaré distance and its gradient with respect to both points, scaled by `scale`.
pub fn poincare_distance_sq_vjp(
    x: &[f64],
    y: &[f64],
    c: f64,
    scale: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let neg_x = negate(x);
    let w = mobius_add_unchecked(&neg_x, y, c);
    let sc = c.sqrt();
    let wn = norm(&w);
    let z = sc * wn;
    let d = 2.0 / sc * artanh_clamped(z);
    if wn <= DENOM_FLOOR || z >= ARTANH_CLAMP {
        return (d * d, vec![0.0; x.len()], vec![0.0; x.len()]);
    }
    // d(d²)/dw = 2d · 2/(1 − c‖w‖²) · w/‖w‖
    let k = scale * 2.0 * d * 2.0 / (1.0 - c * wn * wn) / wn;
    let gw: Vec<f64> = w.iter().map(|v| k * v).collect();
    let (g_negx, gy) = mobius_add_vjp(&neg_x, y, c, &gw);
    (d * d, negate(&g_negx), gy)
}

/// Logarithmic map at the origin, ball → tangent space.
pub fn log_map_origin(x: &[f64], c: f64) -> Result<Vec<f64>> {
    check_c(c)?;
    check_in_ball(x, c)?;
    Ok(log_map_origin_unchecked(x, c))
}

pub(crate) fn log_map_origin_unchecked(x: &[f64], c: f64) -> Vec<f64> {
    let s = artanh_ratio(c.sqrt() * norm(x));
    x.iter().map(|v| s * v).collect()
}

pub fn log_map_origin_vjp(x: &[f64], c: f64, g: &[f64]) -> Vec<f64> {
    let z = c.sqrt() * norm(x);
    let s = artanh_ratio(z);
    let k = c * artanh_ratio_slope(z) * dot(x, g);
    x.iter().zip(g).map(|(xi, gi)| s * gi + k * xi).collect()
}

/// Exponential map at the origin, tangent space → ball.
pub fn exp_map_origin(v: &[f64], c: f64) -> Result<Vec<f64>> {
    check_c(c)?;
    check_finite(v)?;
    Ok(exp_map_origin_unchecked(v, c))
}

pub(crate) fn exp_map_origin_unchecked(v: &[f64], c: f64) -> Vec<f64> {
    let s = tanh_ratio(c.sqrt() * norm(v));
    let out: Vec<f64> = v.iter().map(|x| s * x).collect();
    // tanh saturates to exactly 1 for large arguments.
    project_to_ball(&out, c, DEFAULT_BALL_MARGIN)
}

pub fn exp_map_origin_vjp(v: &[f64], c: f64, g: &[f64]) -> Vec<f64> {
    let z = c.sqrt() * norm(v);
    let s = tanh_ratio(z);
    let k = c * tanh_ratio_slope(z) * dot(v, g);
    v.iter().zip(g).map(|(vi, gi)| s * gi + k * vi).collect()
}

/// Rescale `v` to norm `max_norm` when it is longer; direction is preserved.
pub fn clip_norm(v: &[f64], max_norm: f64) -> Vec<f64> {
    let n = norm(v);
    if n <= max_norm {
        v.to_vec()
    } else {
        v.iter().map(|x| x * max_norm / n).collect()
    }
}

/// Derivative of [`clip_norm`] along the branch actually taken.
pub fn clip_norm_vjp(v: &[f64], max_norm: f64, g: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n <= max_norm {
        g.to_vec()
    } else {
        radial_rescale_vjp(v, n, max_norm, g)
    }
}

/// Pull `v` back to norm `(1 − margin)/√c` when it reaches that radius.
pub fn project_to_ball(v: &[f64], c: f64, margin: f64) -> Vec<f64> {
    let limit = (1.0 - margin) / c.sqrt();
    let n = norm(v);
    if n >= limit {
        let s = limit / n;
        v.iter().map(|x| s * x).collect()
    } else {
        v.to_vec()
    }
}

pub fn project_to_ball_vjp(v: &[f64], c: f64, margin: f64, g: &[f64]) -> Vec<f64> {
    let limit = (1.0 - margin) / c.sqrt();
    let n = norm(v);
    if n >= limit {
        radial_rescale_vjp(v, n, limit, g)
    } else {
        g.to_vec()
    }
}

// out = r·v/‖v‖  ⇒  J = (r/‖v‖)(I − v̂v̂ᵀ)
fn radial_rescale_vjp(v: &[f64], n: f64, r: f64, g: &[f64]) -> Vec<f64> {
    let n = n.max(DENOM_FLOOR);
    let proj = dot(v, g) / (n * n);
    v.iter()
        .zip(g)
        .map(|(vi, gi)| r / n * (gi - proj * vi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ball_point(max_r: f64) -> impl Strategy<Value = Vec<f64>> {
        (proptest::collection::vec(-1.0f64..1.0, 3), 0.0..max_r).prop_map(|(dir, r)| {
            let n = norm(&dir).max(1e-12);
            dir.iter().map(|v| v / n * r).collect()
        })
    }

    #[test]
    fn mobius_scalar_case() {
        let out = mobius_add(&[0.3], &[0.4], 1.0).unwrap();
        // (x + y) / (1 + xy) and tanh(artanh x + artanh y)
        assert_abs_diff_eq!(out[0], 0.7 / 1.12, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0], (0.3f64.atanh() + 0.4f64.atanh()).tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(out[0], 0.625, epsilon = 1e-15);
    }

    #[test]
    fn mobius_identity_and_inverse() {
        let y = [0.1, -0.4, 0.2];
        assert_eq!(mobius_add(&[0.0; 3], &y, 1.3).unwrap(), y.to_vec());
        let z = mobius_add(&y, &negate(&y), 1.3).unwrap();
        assert!(norm(&z) < 1e-15);
    }

    #[test]
    fn mobius_rejects_bad_input() {
        assert!(matches!(mobius_add(&[0.1], &[0.1, 0.2], 1.0), Err(Error::Usage(_))));
        assert!(matches!(mobius_add(&[1.0], &[0.1], 1.0), Err(Error::Domain(_))));
        assert!(matches!(mobius_add(&[0.6], &[0.1], 4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn distance_at_origin() {
        let d = poincare_distance(&[0.0, 0.0], &[0.3, 0.4], 1.0).unwrap();
        assert_abs_diff_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 1.0986123, epsilon = 1e-7);
        assert_eq!(poincare_distance(&[0.2, 0.1], &[0.2, 0.1], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn log_exp_scalar_values() {
        let l = log_map_origin(&[0.5], 1.0).unwrap();
        assert_abs_diff_eq!(l[0], 0.5493061, epsilon = 1e-7);
        let e = exp_map_origin(&[0.5493061443340549], 1.0).unwrap();
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-12);
        assert_eq!(log_map_origin(&[0.0, 0.0], 2.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(exp_map_origin(&[0.0, 0.0], 2.0).unwrap(), vec![0.0, 0.0]);
        assert!(log_map_origin(&[2.0], 1.0).is_err());
        assert!(exp_map_origin(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn clip_and_project() {
        assert_eq!(clip_norm(&[3.0, 4.0], 1.0), vec![0.6, 0.8]);
        assert_eq!(clip_norm(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
        let p = project_to_ball(&[2.0, 0.0], 1.0, 1e-5);
        assert_abs_diff_eq!(norm(&p), 1.0 - 1e-5, epsilon = 1e-15);
        assert_eq!(project_to_ball(&[0.2, 0.1], 1.0, 1e-5), vec![0.2, 0.1]);
        assert_eq!(project_to_ball(&p, 1.0, 1e-5), p);
    }

    #[test]
    fn non_commutative_for_generic_points() {
        let x = [0.5, 0.1];
        let y = [-0.2, 0.6];
        let xy = mobius_add(&x, &y, 1.0).unwrap();
        let yx = mobius_add(&y, &x, 1.0).unwrap();
        let diff: Vec<f64> = xy.iter().zip(&yx).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) > 1e-6);
    }

    #[test]
    fn geometry_serde_shape() {
        let g = Geometry::Hyperbolic { c: 1.0 };
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"kind":"Hyperbolic","c":1.0}"#);
        let e: Geometry = serde_json::from_str(r#"{"kind":"euclidean","max_norm":10}"#).unwrap();
        assert_eq!(e, Geometry::Euclidean { max_norm: 10.0 });
        assert!(Geometry::hyperbolic(0.0).is_err());
        assert!(Geometry::euclidean(-1.0).is_err());
    }

    fn fd_check(f: impl Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64]) {
        let eps = 1e-6;
        for i in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += eps;
            m[i] -= eps;
            let num = (f(&p) - f(&m)) / (2.0 * eps);
            assert!(
                (num - analytic[i]).abs() <= 1e-6 * (1.0 + num.abs()),
                "coord {i}: numeric {num} vs analytic {}",
                analytic[i]
            );
        }
    }

    #[test]
    fn vjps_match_finite_differences() {
        let c = 0.7;
        let x = [0.3, -0.5, 0.2];
        let y = [-0.1, 0.4, 0.6];
        let g = [0.7, -1.1, 0.4];
        let (gx, gy) = mobius_add_vjp(&x, &y, c, &g);
        fd_check(|p| dot(&mobius_add_unchecked(p, &y, c), &g), &x, &gx);
        fd_check(|p| dot(&mobius_add_unchecked(&x, p, c), &g), &y, &gy);

        let (_, dx, dy) = poincare_distance_sq_vjp(&x, &y, c, 1.0);
        fd_check(|p| poincare_distance_unchecked(p, &y, c).powi(2), &x, &dx);
        fd_check(|p| poincare_distance_unchecked(&x, p, c).powi(2), &y, &dy);

        fd_check(
            |p| dot(&log_map_origin_unchecked(p, c), &g),
            &x,
            &log_map_origin_vjp(&x, c, &g),
        );
        let v = [0.9, -1.3, 0.2];
        fd_check(
            |p| dot(&exp_map_origin_unchecked(p, c), &g),
            &v,
            &exp_map_origin_vjp(&v, c, &g),
        );
        let u = [3.0, -1.0, 2.0];
        fd_check(|p| dot(&clip_norm(p, 1.5), &g), &u, &clip_norm_vjp(&u, 1.5, &g));
        fd_check(
            |p| dot(&project_to_ball(p, c, 1e-5), &g),
            &u,
            &project_to_ball_vjp(&u, c, 1e-5, &g),
        );
    }

    #[test]
    fn small_radius_series_match_closed_forms() {
        for &z in &[1.1e-3, 5e-3, 2e-2] {
            assert_abs_diff_eq!(artanh_ratio(z), z.atanh() / z, epsilon = 1e-12);
            assert_abs_diff_eq!(tanh_ratio(z), z.tanh() / z, epsilon = 1e-12);
        }
        // Series and closed form agree across the cutoff.
        let (below, above) = (0.999e-3f64, 1.001e-3f64);
        assert_abs_diff_eq!(artanh_ratio_slope(below), artanh_ratio_slope(above), epsilon = 1e-4);
        assert_abs_diff_eq!(tanh_ratio_slope(below), tanh_ratio_slope(above), epsilon = 1e-4);
        assert_abs_diff_eq!(artanh_ratio_slope(0.3), (1.0 / 0.91 - 0.3f64.atanh() / 0.3) / 0.09, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn left_cancellation(x in ball_point(0.95), y in ball_point(0.95), c in 0.2f64..3.0) {
            let sc = c.sqrt();
            let x: Vec<f64> = x.iter().map(|v| v / sc).collect();
            let y: Vec<f64> = y.iter().map(|v| v / sc).collect();
            let xy = mobius_add(&x, &y, c).unwrap();
            prop_assert!(in_ball(&xy, c));
            let back = mobius_add(&negate(&x), &xy, c).unwrap();
            for (a, b) in back.iter().zip(&y) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn distance_symmetric(x in ball_point(0.9), y in ball_point(0.9)) {
            let a = poincare_distance(&x, &y, 1.0).unwrap();
            let b = poincare_distance(&y, &x, 1.0).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
        }

        #[test]
        fn log_exp_inverse(x in ball_point(0.9), c in 0.2f64..3.0) {
            let x: Vec<f64> = x.iter().map(|v| v / c.sqrt()).collect();
            let back = exp_map_origin(&log_map_origin(&x, c).unwrap(), c).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn clip_bounded(v in proptest::collection::vec(-100.0f64..100.0, 4), m in 0.1f64..10.0) {
            prop_assert!(norm(&clip_norm(&v, m)) <= m + 1e-12);
        }
    }
}
