//! Construction of the global isoparametric mapping: nodal averaging of the
//! elementwise local mapping on the cut layer, step-length root solves along
//! the search direction, curved-boundary interpolation and the hierarchical
//! vertex/edge extension into the uncut regions.

use crate::cut::{CutTopology, DiscreteLevelSet, Label, LevelSet};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::space::{DofMap, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchVariant {
    /// G_h = grad phi_h, elementwise.
    Grad,
    /// G_h = nodal average of grad phi_h over the cut layer (continuous).
    Projected,
}

/// Search direction used by the step-length solves.
pub enum SearchDirection {
    Grad,
    Projected(VectorField),
}

/// Nodal averaging over a designated element set: at each node shared by m
/// elements of the set the output is the arithmetic mean of the m
/// element-local values; untouched nodes stay zero. The element order is
/// fixed, so the reduction is deterministic.
pub fn oswald_project(
    space: &DofMap,
    elements: &[usize],
    values: impl Fn(usize, usize) -> [f64; 2],
) -> VectorField {
    let mut sum = vec![[0.0, 0.0]; space.n_dofs];
    let mut count = vec![0u32; space.n_dofs];
    for &t in elements {
        for (local, &g) in space.elem_dofs[t].iter().enumerate() {
            let v = values(t, local);
            sum[g][0] += v[0];
            sum[g][1] += v[1];
            count[g] += 1;
        }
    }
    for g in 0..space.n_dofs {
        if count[g] > 0 {
            sum[g][0] /= count[g] as f64;
            sum[g][1] /= count[g] as f64;
        }
    }
    VectorField { k: space.k, coeffs: sum }
}

/// Builds the search direction field for the cut layer.
pub fn search_direction(
    mesh: &Mesh,
    dls: &DiscreteLevelSet,
    topo: &CutTopology,
    variant: SearchVariant,
) -> SearchDirection {
    match variant {
        SearchVariant::Grad => SearchDirection::Grad,
        SearchVariant::Projected => {
            let space = dls.space;
            let cut_elems: Vec<usize> = (0..mesh.triangles.len())
                .filter(|&t| topo.labels[t] == Label::Cut)
                .collect();
            let field = oswald_project(space, &cut_elems, |t, local| {
                space.eval_grad(mesh, &dls.phi_h, t, space.basis.node_coords[local])
            });
            SearchDirection::Projected(field)
        }
    }
}

impl SearchDirection {
    /// Direction at the Lagrange node `local` of element `t`.
    pub fn at(&self, mesh: &Mesh, dls: &DiscreteLevelSet, t: usize, local: usize) -> [f64; 2] {
        let xi = dls.space.basis.node_coords[local];
        match self {
            SearchDirection::Grad => dls.space.eval_grad(mesh, &dls.phi_h, t, xi),
            SearchDirection::Projected(field) => dls.space.eval_vec(field, t, xi),
        }
    }
}

const SCAN_CELLS: usize = 32;

/// The (in absolute value) smallest d with E_T phi_h(x + d G) = phi_lin(x),
/// where E_T phi_h is the polynomial extension of phi_h beyond element T.
/// `x` is given in reference coordinates of T. Scans sign changes on a
/// uniform grid outward from 0, then runs a safeguarded Newton/bisection.
pub fn step_length(
    mesh: &Mesh,
    dls: &DiscreteLevelSet,
    t: usize,
    xi: [f64; 2],
    g: [f64; 2],
) -> Result<f64> {
    let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gnorm <= 1e-12 {
        return Err(Error::ZeroDirection { elem: t });
    }
    let space = dls.space;
    let x = mesh.map_point(t, xi);
    let target = dls.lin_at(mesh, t, xi);
    let psi = |d: f64| {
        let p = [x[0] + d * g[0], x[1] + d * g[1]];
        space.eval(&dls.phi_h, t, mesh.unmap_point(t, p)) - target
    };
    let dpsi = |d: f64| {
        let p = [x[0] + d * g[0], x[1] + d * g[1]];
        let grad = space.eval_grad(mesh, &dls.phi_h, t, mesh.unmap_point(t, p));
        grad[0] * g[0] + grad[1] * g[1]
    };
    let h_t = mesh.element_diameter(t);
    let tol_res = 1e-12 * target.abs().max(1.0);
    let tol_w = 1e-14 * h_t;
    let psi0 = psi(0.0);
    if psi0.abs() <= tol_res {
        return Ok(0.0);
    }
    let delta = 0.5 * h_t;
    let step = 2.0 * delta / SCAN_CELLS as f64;
    // cells ordered by distance from 0, positive side first on ties
    let mut bracket = None;
    'scan: for c in 0..SCAN_CELLS / 2 {
        for sgn in [1.0f64, -1.0] {
            let (a, b) = if sgn > 0.0 {
                (c as f64 * step, (c + 1) as f64 * step)
            } else {
                (-((c + 1) as f64) * step, -(c as f64) * step)
            };
            let (fa, fb) = (psi(a), psi(b));
            if fa == 0.0 {
                return Ok(a);
            }
            if fb == 0.0 {
                return Ok(b);
            }
            if fa * fb < 0.0 {
                bracket = Some((a, b, fa, fb));
                break 'scan;
            }
        }
    }
    let (mut a, mut b, mut fa, mut fb) = bracket.ok_or(Error::NoRootInInterval { elem: t })?;
    // safeguarded Newton starting from the bracket midpoint
    let mut d = 0.5 * (a + b);
    for _ in 0..200 {
        let fd = psi(d);
        if fd.abs() <= tol_res || (b - a) <= tol_w {
            return Ok(d);
        }
        if fa * fd < 0.0 {
            b = d;
            fb = fd;
        } else {
            a = d;
            fa = fd;
        }
        let _ = fb;
        let slope = dpsi(d);
        let newton = if slope != 0.0 { d - fd / slope } else { f64::NAN };
        d = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Ok(d)
}

/// Global mapping as a displacement field: Theta_h = id + D_h.
#[derive(Debug, Clone)]
pub struct MappingBundle {
    pub disp: VectorField,
    /// Elements on which all local displacement dofs vanish exactly.
    pub identity: Vec<bool>,
}

/// Jacobian data of Theta_h at a point.
#[derive(Debug, Clone, Copy)]
pub struct Jacobian {
    pub d: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse transpose of `d`.
    pub inv_t: [[f64; 2]; 2],
}

const IDENTITY_JAC: Jacobian = Jacobian {
    d: [[1.0, 0.0], [0.0, 1.0]],
    det: 1.0,
    inv_t: [[1.0, 0.0], [0.0, 1.0]],
};

impl MappingBundle {
    pub fn identity_for(space: &DofMap, n_elems: usize) -> MappingBundle {
        MappingBundle {
            disp: VectorField { k: space.k, coeffs: vec![[0.0, 0.0]; space.n_dofs] },
            identity: vec![true; n_elems],
        }
    }

    /// Mapped position of reference point `xi` of element `t`.
    pub fn map(&self, mesh: &Mesh, space: &DofMap, t: usize, xi: [f64; 2]) -> [f64; 2] {
        let x = mesh.map_point(t, xi);
        if self.identity[t] {
            return x;
        }
        let d = space.eval_vec(&self.disp, t, xi);
        [x[0] + d[0], x[1] + d[1]]
    }

    /// D Theta_h, its determinant and inverse transpose at `xi` in element `t`.
    pub fn jacobian(&self, mesh: &Mesh, space: &DofMap, t: usize, xi: [f64; 2]) -> Result<Jacobian> {
        if self.identity[t] {
            return Ok(IDENTITY_JAC);
        }
        let grads = space.phys_gradients(mesh, t, xi);
        let mut d = [[1.0, 0.0], [0.0, 1.0]];
        for (&g, gr) in space.elem_dofs[t].iter().zip(&grads) {
            let c = self.disp.coeffs[g];
            d[0][0] += c[0] * gr[0];
            d[0][1] += c[0] * gr[1];
            d[1][0] += c[1] * gr[0];
            d[1][1] += c[1] * gr[1];
        }
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        if det <= 0.0 {
            return Err(Error::NonPositiveJacobian { elem: t, det });
        }
        let inv_t = [
            [d[1][1] / det, -d[1][0] / det],
            [-d[0][1] / det, d[0][0] / det],
        ];
        Ok(Jacobian { d, det, inv_t })
    }
}

/// Step-length displacements d_h G_h at every Lagrange node of every cut
/// element, as (element, local node) -> displacement.
fn theta_gamma_values(
    mesh: &Mesh,
    dls: &DiscreteLevelSet,
    topo: &CutTopology,
    dir: &SearchDirection,
) -> Result<Vec<(usize, Vec<[f64; 2]>)>> {
    let space = dls.space;
    let mut out = Vec::new();
    for t in 0..mesh.triangles.len() {
        if topo.labels[t] != Label::Cut {
            continue;
        }
        let mut vals = Vec::with_capacity(space.basis.n_nodes());
        for local in 0..space.basis.n_nodes() {
            let g = dir.at(mesh, dls, t, local);
            let d = step_length(mesh, dls, t, space.basis.node_coords[local], g)?;
            vals.push([d * g[0], d * g[1]]);
        }
        out.push((t, vals));
    }
    Ok(out)
}

/// Continuous displacement of the local mapping on the cut layer:
/// Theta^Gamma - id = P(d_h G_h).
pub fn build_theta_gamma(
    mesh: &Mesh,
    dls: &DiscreteLevelSet,
    topo: &CutTopology,
    dir: &SearchDirection,
) -> Result<VectorField> {
    let space = dls.space;
    let values = theta_gamma_values(mesh, dls, topo, dir)?;
    let elems: Vec<usize> = values.iter().map(|(t, _)| *t).collect();
    let lookup: std::collections::HashMap<usize, &Vec<[f64; 2]>> =
        values.iter().map(|(t, v)| (*t, v)).collect();
    Ok(oswald_project(space, &elems, |t, local| lookup[&t][local]))
}

/// Nodal values of the boundary parametrization displacement chi_b at the
/// degree-k Lagrange nodes on boundary edges. Exactly zero at boundary
/// vertices; zero everywhere for flat boundaries.
pub fn boundary_displacement(mesh: &Mesh, space: &DofMap) -> Vec<(usize, [f64; 2])> {
    let mut out = Vec::new();
    let nv = mesh.vertices.len();
    let n_edge = space.k - 1;
    for &eid in &mesh.boundary_edges {
        let e = mesh.edges[eid];
        out.push((e.v[0], [0.0, 0.0]));
        out.push((e.v[1], [0.0, 0.0]));
        for s in 0..n_edge {
            let dof = nv + eid * n_edge + s;
            let x = space.node_coords[dof];
            let chi = match mesh.tag {
                BoundaryTag::Disk { radius } => {
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    [(radius / r - 1.0) * x[0], (radius / r - 1.0) * x[1]]
                }
                _ => [0.0, 0.0],
            };
            out.push((dof, chi));
        }
    }
    out.sort_by_key(|(dof, _)| *dof);
    out.dedup_by_key(|(dof, _)| *dof);
    out
}

/// Value at parameter `t` of the degree-k polynomial interpolating `vals`
/// at the equispaced nodes s/k, s = 0..k (1D Lagrange form).
fn lagrange_1d(vals: &[[f64; 2]], t: f64) -> [f64; 2] {
    let k = vals.len() - 1;
    let mut out = [0.0, 0.0];
    for (s, v) in vals.iter().enumerate() {
        let ts = s as f64 / k as f64;
        let mut l = 1.0;
        for r in 0..=k {
            if r != s {
                let tr = r as f64 / k as f64;
                l *= (t - tr) / (ts - tr);
            }
        }
        out[0] += l * v[0];
        out[1] += l * v[1];
    }
    out
}

/// Assembles the global mapping: the cut-layer displacement, the boundary
/// interpolant, and the hierarchical vertex/edge extension into the first
/// element layer of each uncut region. Everything further inside stays at
/// the identity.
///
/// The edge stage is built degree by degree: the edge data g is split into
/// stage remainders r_m = I_m g - I_{m-1} g (I_m the degree-m interpolant
/// along the edge), and each stage is extended as (1 - lam_opp)^m r_m(t),
/// t = lam_b / (1 - lam_opp). Every stage is a polynomial of total degree m
/// vanishing on the other two edges, so the O(h^m)-sized stage-m content
/// contributes nothing to derivatives of order above m. Extending the full
/// remainder in one degree-k sweep instead smears the large low-order part
/// of the data into all k derivative orders and costs convergence orders
/// at high k.
pub fn build_mapping(
    mesh: &Mesh,
    dls: &DiscreteLevelSet,
    topo: &CutTopology,
    variant: SearchVariant,
) -> Result<MappingBundle> {
    let space = dls.space;
    let k = space.k;
    let dir = search_direction(mesh, dls, topo, variant);
    let theta_gamma = build_theta_gamma(mesh, dls, topo, &dir)?;
    let mut disp = vec![[0.0, 0.0]; space.n_dofs];
    let mut assigned = vec![false; space.n_dofs];
    // data source 1: the averaged local mapping on the cut layer
    for t in 0..mesh.triangles.len() {
        if topo.labels[t] != Label::Cut {
            continue;
        }
        for &g in &space.elem_dofs[t] {
            disp[g] = theta_gamma.coeffs[g];
            assigned[g] = true;
        }
    }
    // data source 2: the boundary parametrization on boundary edges
    for (dof, chi) in boundary_displacement(mesh, space) {
        disp[dof] = chi;
        assigned[dof] = true;
    }
    // hierarchical extension on every uncut element touching data
    let is_boundary_data = |eid: usize| {
        matches!(mesh.tag, BoundaryTag::Disk { .. }) && mesh.edges[eid].tris[1].is_none()
    };
    for t in 0..mesh.triangles.len() {
        if topo.labels[t] == Label::Cut {
            continue;
        }
        let tri = mesh.triangles[t];
        // vertex stage data (chi_b vanishes at boundary vertices, so only
        // cut-layer vertices contribute)
        let vdata: Vec<[f64; 2]> = tri
            .iter()
            .map(|&v| if assigned[v] { disp[v] } else { [0.0, 0.0] })
            .collect();
        // data edges: shared with a cut element, or carrying chi_b
        let mut data_edges = Vec::new();
        for le in 0..3 {
            let eid = mesh.tri_edges[t][le];
            let e = mesh.edges[eid];
            let other = if e.tris[0] == Some(t) { e.tris[1] } else { e.tris[0] };
            let shared_cut = other.map_or(false, |o| topo.labels[o] == Label::Cut);
            if shared_cut || is_boundary_data(eid) {
                data_edges.push(le);
            }
        }
        let has_vdata = vdata.iter().any(|d| d[0] != 0.0 || d[1] != 0.0);
        if data_edges.is_empty() && !has_vdata {
            continue;
        }
        // full edge data as 1D degree-k polynomials along each data edge
        // (local edge le runs from vertex le to vertex (le+1) % 3)
        let mut edge_data: Vec<(usize, Vec<[f64; 2]>)> = Vec::new();
        for &le in &data_edges {
            let b = (le + 1) % 3;
            let mut g_vals = vec![[0.0, 0.0]; k + 1];
            for (local, &g) in space.elem_dofs[t].iter().enumerate() {
                let m = space.basis.nodes[local];
                let opp = (le + 2) % 3;
                if m[opp] != 0 {
                    continue;
                }
                g_vals[m[b]] = disp[g]; // m[b] runs 0..k from vertex le to b
            }
            edge_data.push((le, g_vals));
        }
        for (local, &g) in space.elem_dofs[t].iter().enumerate() {
            if assigned[g] {
                continue;
            }
            let xi = space.basis.node_coords[local];
            let lam = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
            let mut val = [
                lam[0] * vdata[0][0] + lam[1] * vdata[1][0] + lam[2] * vdata[2][0],
                lam[0] * vdata[0][1] + lam[1] * vdata[1][1] + lam[2] * vdata[2][1],
            ];
            for (le, g_vals) in &edge_data {
                let (b, opp) = ((le + 1) % 3, (le + 2) % 3);
                let edge_sum = 1.0 - lam[opp];
                if edge_sum <= 0.0 {
                    continue; // opposite vertex: all stages vanish
                }
                let tpar = lam[b] / edge_sum;
                // stage m remainder: degree-m minus degree-(m-1) interpolant
                // of the edge data, both sampled from the degree-k polynomial
                let sample = |m: usize| -> Vec<[f64; 2]> {
                    (0..=m).map(|i| lagrange_1d(g_vals, i as f64 / m as f64)).collect()
                };
                let mut prev = lagrange_1d(&sample(1), tpar);
                for m in 2..=k {
                    let cur = lagrange_1d(&sample(m), tpar);
                    let factor = edge_sum.powi(m as i32);
                    val[0] += factor * (cur[0] - prev[0]);
                    val[1] += factor * (cur[1] - prev[1]);
                    prev = cur;
                }
            }
            disp[g] = val;
        }
    }
    let identity: Vec<bool> = (0..mesh.triangles.len())
        .map(|t| {
            space.elem_dofs[t]
                .iter()
                .all(|&g| disp[g][0] == 0.0 && disp[g][1] == 0.0)
        })
        .collect();
    Ok(MappingBundle { disp: VectorField { k: space.k, coeffs: disp }, identity })
}

/// Largest estimated distance between the mapped interface and the exact zero
/// level: max |phi(Theta(x))| / |grad phi(Theta(x))| over segment quadrature
/// points.
pub fn interface_distance(
    mesh: &Mesh,
    space: &DofMap,
    topo: &CutTopology,
    bundle: &MappingBundle,
    ls: &dyn LevelSet,
    samples: usize,
) -> f64 {
    let mut dmax: f64 = 0.0;
    for seg in &topo.segments {
        for i in 0..=samples {
            let s = i as f64 / samples as f64;
            let xi = [
                seg.ends_ref[0][0] + s * (seg.ends_ref[1][0] - seg.ends_ref[0][0]),
                seg.ends_ref[0][1] + s * (seg.ends_ref[1][1] - seg.ends_ref[0][1]),
            ];
            let x = bundle.map(mesh, space, seg.elem, xi);
            let g = ls.grad(x);
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            dmax = dmax.max(ls.value(x).abs() / gn.max(1e-300));
        }
    }
    dmax
}

/// Largest distance of the mapped mesh boundary from the exact boundary
/// circle; zero by construction on flat boundaries.
pub fn boundary_distance(mesh: &Mesh, space: &DofMap, bundle: &MappingBundle, samples: usize) -> f64 {
    let BoundaryTag::Disk { radius } = mesh.tag else { return 0.0 };
    let mut dmax: f64 = 0.0;
    for &eid in &mesh.boundary_edges {
        let e = mesh.edges[eid];
        let t = e.tris[0].unwrap();
        let a = mesh.unmap_point(t, mesh.vertices[e.v[0]]);
        let b = mesh.unmap_point(t, mesh.vertices[e.v[1]]);
        for i in 0..=samples {
            let s = i as f64 / samples as f64;
            let xi = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let x = bundle.map(mesh, space, t, xi);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            dmax = dmax.max((r - radius).abs());
        }
    }
    dmax
}

/// Largest nodal displacement magnitude.
pub fn max_displacement(bundle: &MappingBundle) -> f64 {
    bundle
        .disp
        .coeffs
        .iter()
        .map(|d| (d[0] * d[0] + d[1] * d[1]).sqrt())
        .fold(0.0, f64::max)
}
