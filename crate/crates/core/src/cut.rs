//! Level-set handling and cut-cell geometry: element classification against
//! the linearized level set, interface reconstruction and sub-triangulation
//! of cut elements for quadrature.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::space::{DofMap, ScalarField};

/// Analytic level set with gradient; the interface is its zero level and
/// the negative side is domain 1.
pub trait LevelSet {
    fn value(&self, x: [f64; 2]) -> f64;
    fn grad(&self, x: [f64; 2]) -> [f64; 2];
}

/// Circle of given radius centered at the origin: phi = |x| - r.
pub struct CircleLevelSet {
    pub radius: f64,
}

impl LevelSet for CircleLevelSet {
    fn value(&self, x: [f64; 2]) -> f64 {
        (x[0] * x[0] + x[1] * x[1]).sqrt() - self.radius
    }
    fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            [0.0, 0.0]
        } else {
            [x[0] / r, x[1] / r]
        }
    }
}

/// Half plane phi = n . x - c with |n| = 1.
pub struct PlaneLevelSet {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl LevelSet for PlaneLevelSet {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.normal[0] * x[0] + self.normal[1] * x[1] - self.offset
    }
    fn grad(&self, _x: [f64; 2]) -> [f64; 2] {
        self.normal
    }
}

/// The pair (phi_h, I_1 phi_h) interpolating the analytic level set.
pub struct DiscreteLevelSet<'a> {
    pub space: &'a DofMap,
    /// Degree-k interpolant of the level set.
    pub phi_h: ScalarField,
    /// Vertex values (piecewise linear nodal interpolation of phi_h).
    pub phi_lin: ScalarField,
}

pub fn discretize_levelset<'a>(mesh: &Mesh, space: &'a DofMap, ls: &dyn LevelSet) -> Result<DiscreteLevelSet<'a>> {
    let phi_h = space.interpolate(|x| ls.value(x))?;
    let phi_lin = space.linearize(&phi_h);
    let _ = mesh;
    Ok(DiscreteLevelSet { space, phi_h, phi_lin })
}

impl DiscreteLevelSet<'_> {
    /// Vertex values of the linearized level set on element `t`.
    pub fn vertex_values(&self, mesh: &Mesh, t: usize) -> [f64; 3] {
        let tri = mesh.triangles[t];
        [self.phi_lin.coeffs[tri[0]], self.phi_lin.coeffs[tri[1]], self.phi_lin.coeffs[tri[2]]]
    }

    /// Linearized level set at reference point `xi` of element `t`.
    pub fn lin_at(&self, mesh: &Mesh, t: usize, xi: [f64; 2]) -> f64 {
        let v = self.vertex_values(mesh, t);
        v[0] * (1.0 - xi[0] - xi[1]) + v[1] * xi[0] + v[2] * xi[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// phi_lin < 0 (domain 1).
    Neg,
    /// phi_lin >= 0 (domain 2; zero vertex values count as positive).
    Pos,
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Neg,
    Pos,
}

#[derive(Debug, Clone, Copy)]
pub struct SubTri {
    /// Reference-coordinate vertices, counterclockwise.
    pub verts: [[f64; 2]; 3],
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct CutElement {
    pub elem: usize,
    /// Interface endpoints in reference coordinates, ordered so that
    /// (tangent, normal) is right-handed in physical space.
    pub ends_ref: [[f64; 2]; 2],
    pub subtris: Vec<SubTri>,
    /// Undeformed area fractions |T_i| / |T|.
    pub frac_neg: f64,
    pub frac_pos: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub elem: usize,
    pub ends_ref: [[f64; 2]; 2],
    pub ends_phys: [[f64; 2]; 2],
    /// Unit normal of the planar interface, pointing from Neg into Pos.
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct CutTopology {
    pub labels: Vec<Label>,
    /// Indexed like `labels`; Some for cut elements.
    pub cuts: Vec<Option<CutElement>>,
    pub segments: Vec<Segment>,
}

impl CutTopology {
    pub fn cut_elements(&self) -> impl Iterator<Item = &CutElement> {
        self.cuts.iter().filter_map(|c| c.as_ref())
    }
}

const REF_VERTS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn ref_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]))
}

fn ccw(mut v: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    if ref_area(&v) < 0.0 {
        v.swap(1, 2);
    }
    v
}

/// Interface endpoints of the linear interpolant with vertex values `f`,
/// in reference coordinates. Returns fewer than two points when the zero
/// level does not cross the interior.
fn cut_points(f: [f64; 3]) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    // vertex exactly on the zero level with a genuine crossing
    for v in 0..3 {
        if f[v] == 0.0 && f[(v + 1) % 3] * f[(v + 2) % 3] < 0.0 {
            pts.push(REF_VERTS[v]);
        }
    }
    for e in 0..3 {
        let (a, b) = (e, (e + 1) % 3);
        if f[a] * f[b] < 0.0 {
            let t = f[a] / (f[a] - f[b]);
            let (pa, pb) = (REF_VERTS[a], REF_VERTS[b]);
            pts.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
        }
    }
    pts
}

fn classify_element(dls: &DiscreteLevelSet, mesh: &Mesh, t: usize) -> Label {
    let f = dls.vertex_values(mesh, t);
    let has_neg = f.iter().any(|&v| v < 0.0);
    let has_pos = f.iter().any(|&v| v >= 0.0);
    if !has_neg {
        return Label::Pos;
    }
    if !has_pos {
        return Label::Neg;
    }
    let pts = cut_points(f);
    if pts.len() == 2 {
        let len = ((pts[0][0] - pts[1][0]).powi(2) + (pts[0][1] - pts[1][1]).powi(2)).sqrt();
        if len > 1e-14 {
            return Label::Cut;
        }
    }
    // grazing zero level: reclassify by the centroid sign
    if (f[0] + f[1] + f[2]) / 3.0 < 0.0 {
        Label::Neg
    } else {
        Label::Pos
    }
}

/// Splits a cut element along the interface segment: one triangle on the
/// lone-sign vertex side plus a quadrilateral split by its shorter diagonal,
/// or two triangles when the segment starts in a zero vertex.
pub fn subdivide(dls: &DiscreteLevelSet, mesh: &Mesh, t: usize) -> Result<CutElement> {
    let f = dls.vertex_values(mesh, t);
    let pts = cut_points(f);
    let h_t = mesh.element_diameter(t);
    let seg_len = if pts.len() == 2 {
        ((pts[0][0] - pts[1][0]).powi(2) + (pts[0][1] - pts[1][1]).powi(2)).sqrt()
    } else {
        0.0
    };
    if pts.len() != 2 || seg_len < 1e-14 * h_t {
        return Err(Error::DegenerateCut(t));
    }
    let lin = |xi: [f64; 2]| f[0] * (1.0 - xi[0] - xi[1]) + f[1] * xi[0] + f[2] * xi[1];
    let side_of = |tri: &[[f64; 2]; 3]| {
        let c = [
            (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
            (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
        ];
        if lin(c) < 0.0 {
            Side::Neg
        } else {
            Side::Pos
        }
    };
    let zero_vertex = (0..3).find(|&v| f[v] == 0.0 && f[(v + 1) % 3] * f[(v + 2) % 3] < 0.0);
    let mut subtris = Vec::with_capacity(3);
    if let Some(v) = zero_vertex {
        // segment from the zero vertex to the opposite-edge crossing
        let p = pts.iter().find(|&&q| q != REF_VERTS[v]).copied().unwrap();
        let (a, b) = ((v + 1) % 3, (v + 2) % 3);
        for tri in [[REF_VERTS[v], REF_VERTS[a], p], [REF_VERTS[v], p, REF_VERTS[b]]] {
            let tri = ccw(tri);
            subtris.push(SubTri { side: side_of(&tri), verts: tri });
        }
    } else {
        // lone vertex: the one whose strict sign differs from the other two
        let lone = (0..3)
            .find(|&v| {
                let (a, b) = (f[(v + 1) % 3], f[(v + 2) % 3]);
                (f[v] < 0.0) != (a < 0.0) && (f[v] < 0.0) != (b < 0.0)
            })
            .expect("cut element without lone vertex");
        let (a, b) = ((lone + 1) % 3, (lone + 2) % 3);
        // crossings on edges (lone, a) and (lone, b)
        let on_edge = |u: usize, w: usize| {
            let tpar = f[u] / (f[u] - f[w]);
            let (pu, pw) = (REF_VERTS[u], REF_VERTS[w]);
            [pu[0] + tpar * (pw[0] - pu[0]), pu[1] + tpar * (pw[1] - pu[1])]
        };
        let pa = on_edge(lone, a);
        let pb = on_edge(lone, b);
        let tri = ccw([REF_VERTS[lone], pa, pb]);
        subtris.push(SubTri { side: side_of(&tri), verts: tri });
        // quadrilateral (pa, a, b, pb), split by the shorter diagonal
        let d2 = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
        let (va, vb) = (REF_VERTS[a], REF_VERTS[b]);
        let quads: [[[f64; 2]; 3]; 2] = if d2(pa, vb) <= d2(va, pb) {
            [[pa, va, vb], [pa, vb, pb]]
        } else {
            [[pa, va, pb], [va, vb, pb]]
        };
        for q in quads {
            let q = ccw(q);
            subtris.push(SubTri { side: side_of(&q), verts: q });
        }
    }
    // area bookkeeping
    let total: f64 = subtris.iter().map(|s| ref_area(&s.verts)).sum();
    debug_assert!((total - 0.5).abs() < 1e-13);
    let neg_area: f64 = subtris
        .iter()
        .filter(|s| s.side == Side::Neg)
        .map(|s| ref_area(&s.verts))
        .sum();
    // endpoint order: right-handed (tangent, normal) in physical space
    let grad = grad_lin(mesh, t, f);
    let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateCut(t));
    }
    let n = [grad[0] / norm, grad[1] / norm];
    let (p0, p1) = (mesh.map_point(t, pts[0]), mesh.map_point(t, pts[1]));
    let tan = [p1[0] - p0[0], p1[1] - p0[1]];
    let ends_ref = if tan[0] * n[1] - tan[1] * n[0] > 0.0 {
        [pts[0], pts[1]]
    } else {
        [pts[1], pts[0]]
    };
    Ok(CutElement {
        elem: t,
        ends_ref,
        subtris,
        frac_neg: neg_area / 0.5,
        frac_pos: 1.0 - neg_area / 0.5,
    })
}

/// Physical gradient of the linear interpolant with vertex values `f`.
fn grad_lin(mesh: &Mesh, t: usize, f: [f64; 3]) -> [f64; 2] {
    let (_, j) = mesh.affine_map(t);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let gref = [f[1] - f[0], f[2] - f[0]];
    [
        (j[1][1] * gref[0] - j[1][0] * gref[1]) / det,
        (-j[0][1] * gref[0] + j[0][0] * gref[1]) / det,
    ]
}

/// Classifies all elements and reconstructs the piecewise planar interface.
pub fn classify(dls: &DiscreteLevelSet, mesh: &Mesh) -> Result<CutTopology> {
    let n = mesh.triangles.len();
    let mut labels = Vec::with_capacity(n);
    let mut cuts = vec![None; n];
    let mut segments = Vec::new();
    for t in 0..n {
        let label = classify_element(dls, mesh, t);
        if label == Label::Cut {
            let cut = subdivide(dls, mesh, t)?;
            let f = dls.vertex_values(mesh, t);
            let grad = grad_lin(mesh, t, f);
            let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
            let ends_phys = [mesh.map_point(t, cut.ends_ref[0]), mesh.map_point(t, cut.ends_ref[1])];
            let length = ((ends_phys[0][0] - ends_phys[1][0]).powi(2)
                + (ends_phys[0][1] - ends_phys[1][1]).powi(2))
            .sqrt();
            segments.push(Segment {
                elem: t,
                ends_ref: cut.ends_ref,
                ends_phys,
                normal: [grad[0] / norm, grad[1] / norm],
                length,
            });
            cuts[t] = Some(cut);
        }
        labels.push(label);
    }
    Ok(CutTopology { labels, cuts, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_square_mesh, uniform_refine, BoundaryTag, Mesh};
    use crate::space::make_space;

    fn unit_right_triangle() -> Mesh {
        Mesh::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            BoundaryTag::Imported,
        )
    }

    fn dls_from_vertex_values<'a>(
        _mesh: &Mesh,
        space: &'a DofMap,
        vals: [f64; 3],
    ) -> DiscreteLevelSet<'a> {
        // linear level set matching the given vertex values on the one-element mesh
        let ls = move |x: [f64; 2]| vals[0] * (1.0 - x[0] - x[1]) + vals[1] * x[0] + vals[2] * x[1];
        let phi_h = space.interpolate(ls).unwrap();
        let phi_lin = space.linearize(&phi_h);
        DiscreteLevelSet { space, phi_h, phi_lin }
    }

    #[test]
    fn classify_sign_patterns() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, -1.0, -1.0]);
        assert_eq!(classify_element(&dls, &mesh, 0), Label::Neg);
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, 1.0, 1.0]);
        assert_eq!(classify_element(&dls, &mesh, 0), Label::Cut);
        let dls = dls_from_vertex_values(&mesh, &space, [0.0, 1.0, 1.0]);
        assert_eq!(classify_element(&dls, &mesh, 0), Label::Pos);
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, 0.0, 0.0]);
        assert_eq!(classify_element(&dls, &mesh, 0), Label::Neg);
    }

    #[test]
    fn cut_midpoint_fractions() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, 1.0, 1.0]);
        let cut = subdivide(&dls, &mesh, 0).unwrap();
        // sign-change edges cut at their midpoints
        let neg_area: f64 = cut
            .subtris
            .iter()
            .filter(|s| s.side == Side::Neg)
            .map(|s| ref_area(&s.verts))
            .sum();
        let pos_area: f64 = cut
            .subtris
            .iter()
            .filter(|s| s.side == Side::Pos)
            .map(|s| ref_area(&s.verts))
            .sum();
        assert!((neg_area - 0.125).abs() < 1e-14);
        assert!((pos_area - 0.375).abs() < 1e-14);
        assert!((cut.frac_neg - 0.25).abs() < 1e-14);
        assert!((cut.frac_pos - 0.75).abs() < 1e-14);
    }

    #[test]
    fn fractions_swap_under_sign_flip() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let a = subdivide(&dls_from_vertex_values(&mesh, &space, [-1.0, -1.0, 1.0]), &mesh, 0).unwrap();
        let b = subdivide(&dls_from_vertex_values(&mesh, &space, [1.0, 1.0, -1.0]), &mesh, 0).unwrap();
        assert!((a.frac_neg - b.frac_pos).abs() < 1e-14);
        assert!((a.frac_pos - b.frac_neg).abs() < 1e-14);
    }

    #[test]
    fn normal_points_into_positive_side() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        // sign change along x: phi = x - 0.5 scaled => gradient (1, 0) direction
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, 1.0, -1.0 + 0.0]);
        // vertex values (-1, 1, -1): phi = -1 + 2x; gradient along +x
        let topo = classify(&dls, &mesh).unwrap();
        assert_eq!(topo.segments.len(), 1);
        let n = topo.segments[0].normal;
        assert!((n[0] - 1.0).abs() < 1e-14 && n[1].abs() < 1e-14);
        // flipping the level set flips the normal
        let dls2 = dls_from_vertex_values(&mesh, &space, [1.0, -1.0, 1.0]);
        let topo2 = classify(&dls2, &mesh).unwrap();
        let n2 = topo2.segments[0].normal;
        assert!((n2[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_handed_tangent_normal() {
        let mesh = unit_right_triangle();
        let space = make_space(&mesh, 1).unwrap();
        let dls = dls_from_vertex_values(&mesh, &space, [-1.0, 1.0, 1.0]);
        let topo = classify(&dls, &mesh).unwrap();
        let s = &topo.segments[0];
        let t = [s.ends_phys[1][0] - s.ends_phys[0][0], s.ends_phys[1][1] - s.ends_phys[0][1]];
        assert!(t[0] * s.normal[1] - t[1] * s.normal[0] > 0.0);
    }

    #[test]
    fn circle_case_invariants() {
        let mut mesh = build_disk_mesh(2.0, 2);
        mesh = uniform_refine(&mesh);
        let space = make_space(&mesh, 2).unwrap();
        let ls = CircleLevelSet { radius: 1.0 };
        let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
        let topo = classify(&dls, &mesh).unwrap();
        assert!(!topo.segments.is_empty());
        // area conservation and sign consistency per cut element
        for cut in topo.cut_elements() {
            let total: f64 = cut.subtris.iter().map(|s| ref_area(&s.verts)).sum();
            assert!((total - 0.5).abs() < 1e-13);
            for s in &cut.subtris {
                let c = [
                    (s.verts[0][0] + s.verts[1][0] + s.verts[2][0]) / 3.0,
                    (s.verts[0][1] + s.verts[1][1] + s.verts[2][1]) / 3.0,
                ];
                let v = dls.lin_at(&mesh, cut.elem, c);
                match s.side {
                    Side::Neg => assert!(v < 0.0),
                    Side::Pos => assert!(v >= 0.0),
                }
            }
        }
        // interface closure: every endpoint shared by exactly two segments
        let mut ends: Vec<[f64; 2]> = Vec::new();
        for s in &topo.segments {
            ends.push(s.ends_phys[0]);
            ends.push(s.ends_phys[1]);
        }
        for (i, e) in ends.iter().enumerate() {
            let near = ends
                .iter()
                .filter(|o| ((e[0] - o[0]).powi(2) + (e[1] - o[1]).powi(2)).sqrt() < 1e-12)
                .count();
            assert_eq!(near, 2, "endpoint {i} shared {near} times");
        }
        // normals roughly radial
        for s in &topo.segments {
            let m = [
                (s.ends_phys[0][0] + s.ends_phys[1][0]) / 2.0,
                (s.ends_phys[0][1] + s.ends_phys[1][1]) / 2.0,
            ];
            let r = (m[0] * m[0] + m[1] * m[1]).sqrt();
            let radial = [m[0] / r, m[1] / r];
            let dot = radial[0] * s.normal[0] + radial[1] * s.normal[1];
            let ang = dot.clamp(-1.0, 1.0).acos();
            assert!(ang < 0.2, "normal deviates {ang} rad");
        }
    }

    #[test]
    fn interface_length_converges_to_circle() {
        let mut mesh = build_disk_mesh(2.0, 2);
        let mut lengths = Vec::new();
        for _ in 0..3 {
            mesh = uniform_refine(&mesh);
            let space = make_space(&mesh, 1).unwrap();
            let ls = CircleLevelSet { radius: 1.0 };
            let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
            let topo = classify(&dls, &mesh).unwrap();
            let total: f64 = topo.segments.iter().map(|s| s.length).sum();
            lengths.push((2.0 * std::f64::consts::PI - total).abs());
        }
        let slope = (lengths[1] / lengths[2]).log2();
        assert!(slope >= 1.7, "length error slope {slope}");
    }

    #[test]
    fn discretize_levelset_convergence() {
        // sampled sup-norm of phi_h - phi decreases at order k+1 = 3
        let ls = CircleLevelSet { radius: 1.0 };
        let mut mesh = build_disk_mesh(2.0, 2);
        mesh = uniform_refine(&mesh);
        let mut errs = Vec::new();
        for _ in 0..3 {
            mesh = uniform_refine(&mesh);
            let space = make_space(&mesh, 2).unwrap();
            let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
            let mut emax: f64 = 0.0;
            for t in 0..mesh.triangles.len() {
                // only near the interface, where the estimate applies
                let c = mesh.map_point(t, [1.0 / 3.0, 1.0 / 3.0]);
                if ls.value(c).abs() > 0.5 {
                    continue;
                }
                for xi in [[0.2, 0.2], [0.6, 0.2], [0.2, 0.6], [0.1, 0.45], [0.45, 0.1]] {
                    let x = mesh.map_point(t, xi);
                    emax = emax.max((space.eval(&dls.phi_h, t, xi) - ls.value(x)).abs());
                }
            }
            errs.push(emax);
        }
        let ratio = errs[1] / errs[2];
        assert!(ratio >= 2f64.powf(2.7), "sup-norm ratio {ratio}");
    }

    #[test]
    fn linear_levelset_reproduced_exactly() {
        let mesh = build_square_mesh(2.0, 3);
        let space = make_space(&mesh, 3).unwrap();
        let ls = PlaneLevelSet { normal: [0.6, 0.8], offset: 0.1 };
        let dls = discretize_levelset(&mesh, &space, &ls).unwrap();
        for t in (0..mesh.triangles.len()).step_by(3) {
            for xi in [[0.25, 0.3], [0.6, 0.1]] {
                let x = mesh.map_point(t, xi);
                assert!((space.eval(&dls.phi_h, t, xi) - ls.value(x)).abs() < 1e-12);
                assert!((dls.lin_at(&mesh, t, xi) - ls.value(x)).abs() < 1e-12);
            }
        }
    }
}
