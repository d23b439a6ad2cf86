//! Unfitted Nitsche discretization on the mapped geometry: doubled unknowns
//! on the cut layer, transformed volume and interface integrals, Heaviside
//! averaging and Dirichlet elimination.

use crate::cut::{CutTopology, Label, Side};
use crate::error::Result;
use crate::isomap::MappingBundle;
use crate::mesh::Mesh;
use crate::quad::{segment_rule, volume_rule};
use crate::solver::{solve_spd, Csr, Triplets};
use crate::space::DofMap;

pub const SIDES: [Side; 2] = [Side::Neg, Side::Pos];

fn side_index(s: Side) -> usize {
    match s {
        Side::Neg => 0,
        Side::Pos => 1,
    }
}

fn side_label(s: Side) -> Label {
    match s {
        Side::Neg => Label::Neg,
        Side::Pos => Label::Pos,
    }
}

/// Doubled-unknown bookkeeping: a dof is active for a domain iff one of its
/// incident elements belongs to that domain or to the cut layer. Unknowns are
/// numbered domain-1 block first.
#[derive(Debug, Clone)]
pub struct CutSpace {
    pub n_unknowns: usize,
    /// Per side: global dof -> unknown index.
    pub active: [Vec<Option<usize>>; 2],
    /// Per unknown: node lies on the outer mesh boundary.
    pub dirichlet: Vec<bool>,
}

pub fn build_cut_space(mesh: &Mesh, space: &DofMap, topo: &CutTopology) -> CutSpace {
    let mut active = [vec![false; space.n_dofs], vec![false; space.n_dofs]];
    for t in 0..mesh.triangles.len() {
        for (si, &s) in SIDES.iter().enumerate() {
            if topo.labels[t] == side_label(s) || topo.labels[t] == Label::Cut {
                for &g in &space.elem_dofs[t] {
                    active[si][g] = true;
                }
            }
        }
    }
    let mut maps = [vec![None; space.n_dofs], vec![None; space.n_dofs]];
    let mut dirichlet = Vec::new();
    let mut n = 0;
    for si in 0..2 {
        for g in 0..space.n_dofs {
            if active[si][g] {
                maps[si][g] = Some(n);
                dirichlet.push(space.boundary_mask[g]);
                n += 1;
            }
        }
    }
    CutSpace { n_unknowns: n, active: maps, dirichlet }
}

impl CutSpace {
    /// Unknown indices of all local dofs of `elem` on `side`.
    pub fn elem_unknowns(&self, space: &DofMap, elem: usize, side: Side) -> Vec<usize> {
        space.elem_dofs[elem]
            .iter()
            .map(|&g| self.active[side_index(side)][g].expect("inactive dof on active element"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NitscheParams {
    pub alpha: [f64; 2],
    pub lambda: f64,
    pub quad_offset: usize,
}

impl NitscheParams {
    pub fn alpha_bar(&self) -> f64 {
        0.5 * (self.alpha[0] + self.alpha[1])
    }
}

/// Quadrature points of one element side: (reference point, reference weight).
/// Cut elements integrate per sub-triangle with the rule mapped into the
/// parent reference coordinates.
pub(crate) fn side_points(
    topo: &CutTopology,
    elem: usize,
    side: Side,
    rule: &crate::quad::QuadratureRule,
) -> Vec<([f64; 2], f64)> {
    match topo.labels[elem] {
        Label::Cut => {
            let cut = topo.cuts[elem].as_ref().unwrap();
            let mut out = Vec::new();
            for st in &cut.subtris {
                if st.side != side {
                    continue;
                }
                let (a, b, c) = (st.verts[0], st.verts[1], st.verts[2]);
                let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                for (p, &w) in rule.points.iter().zip(&rule.weights) {
                    let xi = [
                        a[0] + p[0] * (b[0] - a[0]) + p[1] * (c[0] - a[0]),
                        a[1] + p[0] * (b[1] - a[1]) + p[1] * (c[1] - a[1]),
                    ];
                    // rule weights sum to 1/2; scale to the sub-triangle area
                    out.push((xi, w * area2));
                }
            }
            out
        }
        l if l == side_label(side) => rule.points.iter().zip(&rule.weights).map(|(&p, &w)| (p, w)).collect(),
        _ => Vec::new(),
    }
}

/// Transformed stiffness contributions
/// sum_i alpha_i int DTheta^{-T} grad u . DTheta^{-T} grad v det(DTheta).
pub fn assemble_volume(
    mesh: &Mesh,
    space: &DofMap,
    cs: &CutSpace,
    topo: &CutTopology,
    bundle: &MappingBundle,
    params: &NitscheParams,
    out: &mut Triplets,
) -> Result<()> {
    let rule = volume_rule((2 * space.k + 2 + params.quad_offset).min(crate::quad::MAX_VOLUME_DEGREE))?;
    let nloc = space.basis.n_nodes();
    for t in 0..mesh.triangles.len() {
        let det_j = 2.0 * mesh.element_area(t);
        for &side in &SIDES {
            let pts = side_points(topo, t, side, &rule);
            if pts.is_empty() {
                continue;
            }
            let unknowns = cs.elem_unknowns(space, t, side);
            let alpha = params.alpha[side_index(side)];
            let mut local = vec![0.0; nloc * nloc];
            for &(xi, w) in &pts {
                let jac = bundle.jacobian(mesh, space, t, xi)?;
                let grads = space.phys_gradients(mesh, t, xi);
                let tg: Vec<[f64; 2]> = grads
                    .iter()
                    .map(|g| {
                        [
                            jac.inv_t[0][0] * g[0] + jac.inv_t[0][1] * g[1],
                            jac.inv_t[1][0] * g[0] + jac.inv_t[1][1] * g[1],
                        ]
                    })
                    .collect();
                let scale = alpha * jac.det * det_j * w;
                for i in 0..nloc {
                    for j in 0..=i {
                        let v = scale * (tg[i][0] * tg[j][0] + tg[i][1] * tg[j][1]);
                        local[i * nloc + j] += v;
                    }
                }
            }
            for i in 0..nloc {
                for j in 0..=i {
                    let v = local[i * nloc + j];
                    if v != 0.0 {
                        out.push(unknowns[i], unknowns[j], v);
                        if i != j {
                            out.push(unknowns[j], unknowns[i], v);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Nitsche consistency, symmetry and penalty terms on the mapped interface.
pub fn assemble_interface(
    mesh: &Mesh,
    space: &DofMap,
    cs: &CutSpace,
    topo: &CutTopology,
    bundle: &MappingBundle,
    params: &NitscheParams,
    out: &mut Triplets,
) -> Result<()> {
    let rule = segment_rule(2 * space.k + 2 + params.quad_offset)?;
    let nloc = space.basis.n_nodes();
    let abar = params.alpha_bar();
    for seg in &topo.segments {
        let t = seg.elem;
        let cut = topo.cuts[t].as_ref().unwrap();
        // Heaviside averaging from the undeformed cut fractions; the tie
        // |T_1| = |T|/2 goes to kappa_1 = 0.
        let kappa = if cut.frac_neg > 0.5 { [1.0, 0.0] } else { [0.0, 1.0] };
        let h_t = mesh.element_diameter(t);
        let penalty = abar * params.lambda / h_t;
        let unknowns = [
            cs.elem_unknowns(space, t, Side::Neg),
            cs.elem_unknowns(space, t, Side::Pos),
        ];
        let (p0, p1) = (seg.ends_ref[0], seg.ends_ref[1]);
        let dref = [p1[0] - p0[0], p1[1] - p0[1]];
        let (_, aj) = mesh.affine_map(t);
        let dphys = [
            aj[0][0] * dref[0] + aj[0][1] * dref[1],
            aj[1][0] * dref[0] + aj[1][1] * dref[1],
        ];
        let n2 = 2 * nloc;
        let mut local = vec![0.0; n2 * n2];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let s = p[0];
            let xi = [p0[0] + s * dref[0], p0[1] + s * dref[1]];
            let jac = bundle.jacobian(mesh, space, t, xi)?;
            // mapped line element
            let tau = [
                jac.d[0][0] * dphys[0] + jac.d[0][1] * dphys[1],
                jac.d[1][0] * dphys[0] + jac.d[1][1] * dphys[1],
            ];
            let ds = (tau[0] * tau[0] + tau[1] * tau[1]).sqrt() * w;
            // mapped unit normal (Piola): det DTheta^{-T} n_lin, normalized
            let nl = seg.normal;
            let nt = [
                jac.det * (jac.inv_t[0][0] * nl[0] + jac.inv_t[0][1] * nl[1]),
                jac.det * (jac.inv_t[1][0] * nl[0] + jac.inv_t[1][1] * nl[1]),
            ];
            let nn = (nt[0] * nt[0] + nt[1] * nt[1]).sqrt();
            let n = [nt[0] / nn, nt[1] / nn];
            let vals = space.basis.eval(xi);
            let grads = space.phys_gradients(mesh, t, xi);
            // combined jump and averaged-flux coefficients, side 1 then side 2
            let mut jump = vec![0.0; n2];
            let mut flux = vec![0.0; n2];
            for si in 0..2 {
                let sign = if si == 0 { 1.0 } else { -1.0 };
                for i in 0..nloc {
                    let g = grads[i];
                    let tgn = (jac.inv_t[0][0] * g[0] + jac.inv_t[0][1] * g[1]) * n[0]
                        + (jac.inv_t[1][0] * g[0] + jac.inv_t[1][1] * g[1]) * n[1];
                    jump[si * nloc + i] = sign * vals[i];
                    flux[si * nloc + i] = kappa[si] * params.alpha[si] * tgn;
                }
            }
            for i in 0..n2 {
                for j in 0..=i {
                    let v = (-flux[i] * jump[j] - flux[j] * jump[i] + penalty * jump[i] * jump[j]) * ds;
                    local[i * n2 + j] += v;
                }
            }
        }
        let unk = |i: usize| unknowns[i / nloc][i % nloc];
        for i in 0..n2 {
            for j in 0..=i {
                let v = local[i * n2 + j];
                if v != 0.0 {
                    out.push(unk(i), unk(j), v);
                    if i != j {
                        out.push(unk(j), unk(i), v);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Load vector: int f_i(Theta(y)) v det(DTheta), per side, with the source
/// terms given as smooth extensions valid on the mapped side domains.
pub fn assemble_rhs(
    mesh: &Mesh,
    space: &DofMap,
    cs: &CutSpace,
    topo: &CutTopology,
    bundle: &MappingBundle,
    params: &NitscheParams,
    f: [&dyn Fn([f64; 2]) -> f64; 2],
    out: &mut [f64],
) -> Result<()> {
    let rule = volume_rule((2 * space.k + 2 + params.quad_offset).min(crate::quad::MAX_VOLUME_DEGREE))?;
    let nloc = space.basis.n_nodes();
    for t in 0..mesh.triangles.len() {
        let det_j = 2.0 * mesh.element_area(t);
        for &side in &SIDES {
            let pts = side_points(topo, t, side, &rule);
            if pts.is_empty() {
                continue;
            }
            let unknowns = cs.elem_unknowns(space, t, side);
            for &(xi, w) in &pts {
                let jac = bundle.jacobian(mesh, space, t, xi)?;
                let x = bundle.map(mesh, space, t, xi);
                let fv = f[side_index(side)](x);
                let vals = space.basis.eval(xi);
                let scale = fv * jac.det * det_j * w;
                for i in 0..nloc {
                    out[unknowns[i]] += scale * vals[i];
                }
            }
        }
    }
    Ok(())
}

/// Symmetric elimination of Dirichlet unknowns with prescribed values:
/// moves the coupling to the right-hand side, then clears rows and columns
/// and pins the unknown.
pub fn apply_dirichlet(a: &mut Csr, b: &mut [f64], dirichlet: &[bool], values: &[f64]) {
    let n = a.n;
    for r in 0..n {
        if dirichlet[r] {
            continue;
        }
        for i in a.ptr[r]..a.ptr[r + 1] {
            let c = a.cols[i];
            if dirichlet[c] {
                b[r] -= a.vals[i] * values[c];
                a.vals[i] = 0.0;
            }
        }
    }
    for r in 0..n {
        if !dirichlet[r] {
            continue;
        }
        for i in a.ptr[r]..a.ptr[r + 1] {
            a.vals[i] = if a.cols[i] == r { 1.0 } else { 0.0 };
        }
        b[r] = values[r];
    }
}

/// Two-domain solution coefficients over the active unknowns.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub u: Vec<f64>,
}

impl DiscreteSolution {
    /// Value of the side-`side` solution on element `elem` at reference `xi`.
    pub fn eval(&self, space: &DofMap, cs: &CutSpace, elem: usize, side: Side, xi: [f64; 2]) -> f64 {
        let unknowns = cs.elem_unknowns(space, elem, side);
        let vals = space.basis.eval(xi);
        unknowns.iter().zip(&vals).map(|(&u, &v)| self.u[u] * v).sum()
    }

    /// Untransformed physical gradient (gradient of the reference-domain
    /// representative; combine with DTheta^{-T} for the mapped gradient).
    pub fn grad(
        &self,
        mesh: &Mesh,
        space: &DofMap,
        cs: &CutSpace,
        elem: usize,
        side: Side,
        xi: [f64; 2],
    ) -> [f64; 2] {
        let unknowns = cs.elem_unknowns(space, elem, side);
        let grads = space.phys_gradients(mesh, elem, xi);
        let mut out = [0.0, 0.0];
        for (&u, g) in unknowns.iter().zip(&grads) {
            out[0] += self.u[u] * g[0];
            out[1] += self.u[u] * g[1];
        }
        out
    }
}

/// Assembled system before Dirichlet elimination, kept for residual checks.
pub struct AssembledSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
}

pub fn assemble_system(
    mesh: &Mesh,
    space: &DofMap,
    cs: &CutSpace,
    topo: &CutTopology,
    bundle: &MappingBundle,
    params: &NitscheParams,
    f: [&dyn Fn([f64; 2]) -> f64; 2],
) -> Result<AssembledSystem> {
    let mut trips = Triplets::new(cs.n_unknowns);
    assemble_volume(mesh, space, cs, topo, bundle, params, &mut trips)?;
    assemble_interface(mesh, space, cs, topo, bundle, params, &mut trips)?;
    let mut rhs = vec![0.0; cs.n_unknowns];
    assemble_rhs(mesh, space, cs, topo, bundle, params, f, &mut rhs)?;
    Ok(AssembledSystem { matrix: trips.to_csr(), rhs })
}

/// Eliminates the Dirichlet unknowns at the given boundary values and solves.
pub fn solve_system(system: &AssembledSystem, cs: &CutSpace, boundary_values: &[f64]) -> Result<DiscreteSolution> {
    let mut a = system.matrix.clone();
    let mut b = system.rhs.clone();
    apply_dirichlet(&mut a, &mut b, &cs.dirichlet, boundary_values);
    let u = solve_spd(&a, &b)?;
    Ok(DiscreteSolution { u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::{classify, discretize_levelset, CircleLevelSet, DiscreteLevelSet, PlaneLevelSet};
    use crate::isomap::MappingBundle;
    use crate::mesh::{build_disk_mesh, build_square_mesh, uniform_refine, BoundaryTag};
    use crate::space::make_space;

    fn unit_right_triangle() -> Mesh {
        Mesh::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            BoundaryTag::Imported,
        )
    }

    fn params(alpha: [f64; 2], k: usize) -> NitscheParams {
        NitscheParams { alpha, lambda: 20.0 * (k * k) as f64, quad_offset: 0 }
    }

    #[test]
    fn cut_space_counts() {
        // single fully negative element: no domain-2 unknowns
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let phi_h = space.interpolate(|_| -1.0).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        assert_eq!(cs.n_unknowns, 3);
        // single cut element: doubled
        let phi_h = space.interpolate(|x| x[0] - 0.4).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        assert_eq!(cs.n_unknowns, 6);
        // circle case: between one and two full spaces
        let mesh = uniform_refine(&build_disk_mesh(2.0, 2));
        let space = make_space(&mesh, 2).unwrap();
        let ls = CircleLevelSet { radius: 1.0 };
        let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        assert!(cs.n_unknowns > space.n_dofs && cs.n_unknowns < 2 * space.n_dofs);
    }

    #[test]
    fn hat_stiffness_on_unit_triangle() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let phi_h = space.interpolate(|_| -1.0).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        let bundle = MappingBundle::identity_for(&space, 1);
        let mut trips = Triplets::new(cs.n_unknowns);
        assemble_volume(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 1.0], 1), &mut trips).unwrap();
        let a = trips.to_csr();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for r in 0..3 {
            for c in 0..3 {
                assert!((a.get(r, c) - expect[r][c]).abs() < 1e-14, "({r},{c})");
            }
        }
        // doubling alpha doubles the matrix
        let mut trips2 = Triplets::new(cs.n_unknowns);
        assemble_volume(&mesh, &space, &cs, &topo, &bundle, &params([2.0, 2.0], 1), &mut trips2).unwrap();
        let a2 = trips2.to_csr();
        for r in 0..3 {
            for c in 0..3 {
                assert!((a2.get(r, c) - 2.0 * a.get(r, c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cut_element_sides_sum_to_uncut_matrix() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 2).unwrap();
        let phi_h = space.interpolate(|x| x[0] - 0.4).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        let bundle = MappingBundle::identity_for(&space, 1);
        let mut trips = Triplets::new(cs.n_unknowns);
        assemble_volume(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 1.0], 2), &mut trips).unwrap();
        let a = trips.to_csr();
        // uncut reference matrix
        let phi_h = space.interpolate(|_| -1.0).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls_u = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo_u = classify(&dls_u, &mesh).unwrap();
        let cs_u = build_cut_space(&mesh, &space, &topo_u);
        let mut trips_u = Triplets::new(cs_u.n_unknowns);
        assemble_volume(&mesh, &space, &cs_u, &topo_u, &bundle, &params([1.0, 1.0], 2), &mut trips_u).unwrap();
        let au = trips_u.to_csr();
        let nloc = space.basis.n_nodes();
        for i in 0..nloc {
            for j in 0..nloc {
                let summed = a.get(i, j) + a.get(nloc + i, nloc + j);
                assert!((summed - au.get(i, j)).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn heaviside_averaging_choice() {
        // fractions via the tie rule are exercised through subdivide: the
        // kappa logic itself is a direct branch
        let pick = |frac_neg: f64| if frac_neg > 0.5 { [1.0, 0.0] } else { [0.0, 1.0] };
        assert_eq!(pick(0.6), [1.0, 0.0]);
        assert_eq!(pick(0.5), [0.0, 1.0]);
        assert_eq!(pick(0.4), [0.0, 1.0]);
    }

    #[test]
    fn zero_jump_contributes_nothing() {
        // every interface term carries a jump factor, so the bilinear form
        // vanishes whenever both arguments agree across the interface
        let mesh = build_square_mesh(2.0, 2);
        let space = make_space(&mesh, 2).unwrap();
        let ls = PlaneLevelSet { normal: [1.0, 0.0], offset: 0.3 };
        let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        let bundle = MappingBundle::identity_for(&space, mesh.triangles.len());
        let mut trips = Triplets::new(cs.n_unknowns);
        assemble_interface(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 2.0], 2), &mut trips).unwrap();
        let a = trips.to_csr();
        // vectors with identical values on both sides of every dof
        let paired = |seed: f64| {
            let mut v = vec![0.0; cs.n_unknowns];
            for g in 0..space.n_dofs {
                let val = (g as f64 * seed).sin();
                for si in 0..2 {
                    if let Some(u) = cs.active[si][g] {
                        v[u] = val;
                    }
                }
            }
            v
        };
        let v = paired(0.37);
        let w = paired(1.13);
        let mut av = vec![0.0; cs.n_unknowns];
        a.matvec(&v, &mut av);
        let vav: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        let wav: f64 = w.iter().zip(&av).map(|(x, y)| x * y).sum();
        assert!(vav.abs() < 1e-11, "a(v, v) = {vav}");
        assert!(wav.abs() < 1e-11, "a(v, w) = {wav}");
    }

    #[test]
    fn rhs_examples() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let phi_h = space.interpolate(|_| -1.0).unwrap();
        let phi_lin = space.linearize(&phi_h);
        let dls = DiscreteLevelSet { space: &space, phi_h, phi_lin };
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        let bundle = MappingBundle::identity_for(&space, 1);
        let zero = |_: [f64; 2]| 0.0;
        let one = |_: [f64; 2]| 1.0;
        let mut b = vec![0.0; cs.n_unknowns];
        assemble_rhs(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 1.0], 1), [&zero, &zero], &mut b).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        let mut b = vec![0.0; cs.n_unknowns];
        assemble_rhs(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 1.0], 1), [&one, &one], &mut b).unwrap();
        for &v in &b {
            assert!((v - 1.0 / 6.0).abs() < 1e-14); // hat integral on the unit right triangle
        }
        // linearity in f
        let three = |_: [f64; 2]| 3.0;
        let mut b3 = vec![0.0; cs.n_unknowns];
        assemble_rhs(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 1.0], 1), [&three, &three], &mut b3).unwrap();
        for (v, v3) in b.iter().zip(&b3) {
            assert!((v3 - 3.0 * v).abs() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_elimination_keeps_symmetry() {
        let mesh = build_square_mesh(2.0, 2);
        let space = make_space(&mesh, 1).unwrap();
        let ls = PlaneLevelSet { normal: [1.0, 0.0], offset: 0.3 };
        let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
        let topo = classify(&dls, &mesh).unwrap();
        let cs = build_cut_space(&mesh, &space, &topo);
        let bundle = MappingBundle::identity_for(&space, mesh.triangles.len());
        let zero = |_: [f64; 2]| 0.0;
        let sys = assemble_system(&mesh, &space, &cs, &topo, &bundle, &params([1.0, 2.0], 1), [&zero, &zero]).unwrap();
        assert_eq!(sys.matrix.asymmetry(), 0.0);
        let mut a = sys.matrix.clone();
        let mut b = sys.rhs.clone();
        apply_dirichlet(&mut a, &mut b, &cs.dirichlet, &vec![0.0; cs.n_unknowns]);
        assert_eq!(a.asymmetry(), 0.0);
        // no masked dofs: unchanged
        let mut a2 = sys.matrix.clone();
        let mut b2 = sys.rhs.clone();
        apply_dirichlet(&mut a2, &mut b2, &vec![false; cs.n_unknowns], &vec![0.0; cs.n_unknowns]);
        assert_eq!(a2.vals, sys.matrix.vals);
    }
}
