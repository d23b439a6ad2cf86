//! Continuous degree-k Lagrange spaces on a triangulation: global dof
//! numbering, nodal interpolation and field evaluation.

use crate::basis::{node_count, ReferenceBasis};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub basis: ReferenceBasis,
    pub n_dofs: usize,
    pub n_vertex_dofs: usize,
    /// Per element: local node -> global dof, in the reference node order.
    pub elem_dofs: Vec<Vec<usize>>,
    /// Physical position of each dof's Lagrange node.
    pub node_coords: Vec<[f64; 2]>,
    /// Dofs whose node lies on a boundary edge of the mesh.
    pub boundary_mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub k: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub k: usize,
    pub coeffs: Vec<[f64; 2]>,
}

/// Builds the continuous degree-k dof numbering: vertex dofs first, then
/// k-1 dofs per edge (ordered along the edge from its lower to its higher
/// vertex id), then interior dofs per element.
pub fn make_space(mesh: &Mesh, k: usize) -> Result<DofMap> {
    let basis = ReferenceBasis::new(k)?;
    let nv = mesh.vertices.len();
    let ne = mesh.edges.len();
    let n_edge = k - 1;
    let n_int = node_count(k) - 3 - 3 * n_edge;
    let n_dofs = nv + ne * n_edge + mesh.triangles.len() * n_int;
    let mut elem_dofs = Vec::with_capacity(mesh.triangles.len());
    let mut node_coords = vec![[0.0, 0.0]; n_dofs];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let mut dofs = Vec::with_capacity(node_count(k));
        dofs.extend_from_slice(&[tri[0], tri[1], tri[2]]);
        for le in 0..3 {
            let (a, b) = (tri[le], tri[(le + 1) % 3]);
            let eid = mesh.tri_edges[t][le];
            let base = nv + eid * n_edge;
            // slot order follows the global (sorted) edge direction
            for s in 1..k {
                let slot = if mesh.edges[eid].v[0] == a { s - 1 } else { n_edge - s };
                dofs.push(base + slot);
                let _ = b;
            }
        }
        let int_base = nv + ne * n_edge + t * n_int;
        for s in 0..n_int {
            dofs.push(int_base + s);
        }
        for (local, &g) in dofs.iter().enumerate() {
            node_coords[g] = mesh.map_point(t, basis.node_coords[local]);
        }
        elem_dofs.push(dofs);
    }
    let mut boundary_mask = vec![false; n_dofs];
    for &eid in &mesh.boundary_edges {
        let e = mesh.edges[eid];
        boundary_mask[e.v[0]] = true;
        boundary_mask[e.v[1]] = true;
        for s in 0..n_edge {
            boundary_mask[nv + eid * n_edge + s] = true;
        }
    }
    Ok(DofMap { k, basis, n_dofs, n_vertex_dofs: nv, elem_dofs, node_coords, boundary_mask })
}

impl DofMap {
    /// Nodal interpolation I_k f.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Result<ScalarField> {
        let mut coeffs = Vec::with_capacity(self.n_dofs);
        for &x in &self.node_coords {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(x[0], x[1]));
            }
            coeffs.push(v);
        }
        Ok(ScalarField { k: self.k, coeffs })
    }

    pub fn interpolate_vec(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<VectorField> {
        let mut coeffs = Vec::with_capacity(self.n_dofs);
        for &x in &self.node_coords {
            let v = f(x);
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::NonFiniteValue(x[0], x[1]));
            }
            coeffs.push(v);
        }
        Ok(VectorField { k: self.k, coeffs })
    }

    /// Value of the element-local polynomial at reference point `xi`. The
    /// point may lie outside the reference triangle; the polynomial extension
    /// is evaluated.
    pub fn eval(&self, field: &ScalarField, elem: usize, xi: [f64; 2]) -> f64 {
        let vals = self.basis.eval(xi);
        self.elem_dofs[elem]
            .iter()
            .zip(&vals)
            .map(|(&g, &n)| field.coeffs[g] * n)
            .sum()
    }

    pub fn eval_vec(&self, field: &VectorField, elem: usize, xi: [f64; 2]) -> [f64; 2] {
        let vals = self.basis.eval(xi);
        let mut out = [0.0, 0.0];
        for (&g, &n) in self.elem_dofs[elem].iter().zip(&vals) {
            out[0] += field.coeffs[g][0] * n;
            out[1] += field.coeffs[g][1] * n;
        }
        out
    }

    /// Physical gradient at reference point `xi` of element `elem`, through
    /// the inverse-transpose of the affine element Jacobian.
    pub fn eval_grad(&self, mesh: &Mesh, field: &ScalarField, elem: usize, xi: [f64; 2]) -> [f64; 2] {
        let grads = self.phys_gradients(mesh, elem, xi);
        let mut out = [0.0, 0.0];
        for (&g, gr) in self.elem_dofs[elem].iter().zip(&grads) {
            out[0] += field.coeffs[g] * gr[0];
            out[1] += field.coeffs[g] * gr[1];
        }
        out
    }

    /// Physical gradients of all local shape functions of `elem` at `xi`.
    pub fn phys_gradients(&self, mesh: &Mesh, elem: usize, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let (_, j) = mesh.affine_map(elem);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // J^{-T} rows
        let jit = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        self.basis
            .eval_grad(xi)
            .into_iter()
            .map(|g| [jit[0][0] * g[0] + jit[0][1] * g[1], jit[1][0] * g[0] + jit[1][1] * g[1]])
            .collect()
    }

    /// Piecewise linear nodal interpolation I_1: keeps the vertex values.
    /// The result is a degree-1 field indexed by vertex ids.
    pub fn linearize(&self, field: &ScalarField) -> ScalarField {
        ScalarField { k: 1, coeffs: field.coeffs[..self.n_vertex_dofs].to_vec() }
    }
}
