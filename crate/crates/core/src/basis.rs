//! Lagrange reference bases of degree 1..=5 on the unit triangle with
//! equispaced nodes.
//!
//! Shape functions are the classical Silvester polynomials in barycentric
//! coordinates, which satisfy the Kronecker property exactly by construction.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 5;

/// Barycentric multi-index (a0, a1, a2) with a0 + a1 + a2 = k.
pub type NodeIndex = [usize; 3];

#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub degree: usize,
    /// Node multi-indices in the canonical order: vertices, then the interior
    /// nodes of local edges (v0,v1), (v1,v2), (v2,v0) walked along the edge,
    /// then interior nodes.
    pub nodes: Vec<NodeIndex>,
    /// Reference (x, y) coordinates of the nodes.
    pub node_coords: Vec<[f64; 2]>,
}

/// Number of Lagrange nodes of a degree-k triangle.
pub fn node_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

fn barycentric(xi: [f64; 2]) -> [f64; 3] {
    [1.0 - xi[0] - xi[1], xi[0], xi[1]]
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<ReferenceBasis> {
        if degree < 1 || degree > MAX_DEGREE {
            return Err(Error::DegreeOutOfRange(degree));
        }
        let k = degree;
        let mut nodes: Vec<NodeIndex> = Vec::with_capacity(node_count(k));
        nodes.push([k, 0, 0]);
        nodes.push([0, k, 0]);
        nodes.push([0, 0, k]);
        for t in 1..k {
            nodes.push([k - t, t, 0]); // edge v0 -> v1
        }
        for t in 1..k {
            nodes.push([0, k - t, t]); // edge v1 -> v2
        }
        for t in 1..k {
            nodes.push([t, 0, k - t]); // edge v2 -> v0
        }
        for a1 in 1..k {
            for a2 in 1..k - a1 {
                nodes.push([k - a1 - a2, a1, a2]);
            }
        }
        debug_assert_eq!(nodes.len(), node_count(k));
        let node_coords = nodes
            .iter()
            .map(|n| [n[1] as f64 / k as f64, n[2] as f64 / k as f64])
            .collect();
        Ok(ReferenceBasis { degree, nodes, node_coords })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// One-dimensional Silvester factor prod_{p<a} (k λ - p) / (a - p) and its
    /// derivative w.r.t. λ.
    fn factor(k: usize, a: usize, lam: f64) -> (f64, f64) {
        let mut val = 1.0;
        for p in 0..a {
            val *= (k as f64 * lam - p as f64) / (a - p) as f64;
        }
        let mut dval = 0.0;
        for q in 0..a {
            let mut term = k as f64 / (a - q) as f64;
            for p in 0..a {
                if p != q {
                    term *= (k as f64 * lam - p as f64) / (a - p) as f64;
                }
            }
            dval += term;
        }
        (val, dval)
    }

    /// Values of all shape functions at reference point `xi`.
    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let lam = barycentric(xi);
        let k = self.degree;
        self.nodes
            .iter()
            .map(|n| (0..3).map(|c| Self::factor(k, n[c], lam[c]).0).product())
            .collect()
    }

    /// Reference-coordinate gradients (d/dx, d/dy) of all shape functions.
    pub fn eval_grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let lam = barycentric(xi);
        let k = self.degree;
        // dλ/dx = (-1, 1, 0), dλ/dy = (-1, 0, 1)
        const DLAM: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        self.nodes
            .iter()
            .map(|n| {
                let fac: Vec<(f64, f64)> = (0..3).map(|c| Self::factor(k, n[c], lam[c])).collect();
                let mut g = [0.0, 0.0];
                for c in 0..3 {
                    let mut rest = fac[c].1;
                    for c2 in 0..3 {
                        if c2 != c {
                            rest *= fac[c2].0;
                        }
                    }
                    g[0] += rest * DLAM[c][0];
                    g[1] += rest * DLAM[c][1];
                }
                g
            })
            .collect()
    }
}
