use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::element::{shape_eval_into, ElementKind, P2_EDGES};
use super::quadrature::{default_quadrature, QuadratureRule};
use crate::mesh::{BoundaryTag, Mesh};
use crate::sparse::CsrMatrix;

/// Affine map from the reference triangle to a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    /// Columns are the images of the reference axes.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    pub inv_jt: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let j = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_jt = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        ElementGeometry {
            origin: v[0],
            jacobian: j,
            det,
            inv_jt,
        }
    }

    /// Physical point for barycentric coordinates `(l0, l1, l2)`.
    #[inline]
    pub fn map(&self, l: [f64; 3]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * l[1] + j[0][1] * l[2],
            self.origin[1] + j[1][0] * l[1] + j[1][1] * l[2],
        ]
    }

    #[inline]
    pub fn physical_grad(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inv_jt;
        [
            m[0][0] * g[0] + m[0][1] * g[1],
            m[1][0] * g[0] + m[1][1] * g[1],
        ]
    }
}

/// Continuous Lagrange space with one or two components.
///
/// Scalar dofs are numbered vertices first (mesh node order), then edge
/// midpoints in lexicographic `(min, max)` node order. Vector spaces stack
/// the components in blocks: global dof `c * scalar_dofs + s`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    kind: ElementKind,
    components: usize,
    scalar_dofs: usize,
    element_dofs: Vec<[usize; 6]>,
    dof_coords: Vec<[f64; 2]>,
    boundary_dofs: BTreeMap<BoundaryTag, Vec<usize>>,
    geometry: Vec<ElementGeometry>,
    quadrature: QuadratureRule,
    basis_values: Vec<[f64; 6]>,
    basis_ref_grads: Vec<[[f64; 2]; 6]>,
    pattern: OnceLock<CsrMatrix>,
}

pub fn build_space(mesh: &Arc<Mesh>, kind: ElementKind, components: usize) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(mesh.clone(), kind, components))
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind, components: usize) -> FeSpace {
        assert!(
            components == 1 || components == 2,
            "components must be 1 or 2"
        );
        let nn = mesh.node_count();
        let mut dof_coords: Vec<[f64; 2]> = mesh.nodes().to_vec();

        let mut edge_index = BTreeMap::new();
        if kind == ElementKind::P2 {
            let mut edges: Vec<(usize, usize)> = mesh.edge_multiplicity().into_keys().collect();
            edges.sort_unstable();
            for (k, &(a, b)) in edges.iter().enumerate() {
                edge_index.insert((a, b), nn + k);
                let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
                dof_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            }
        }
        let edge_dof = |a: usize, b: usize| edge_index[&(a.min(b), a.max(b))];

        let element_dofs = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut d = [0usize; 6];
                d[..3].copy_from_slice(tri);
                if kind == ElementKind::P2 {
                    for (k, [a, b]) in P2_EDGES.iter().copied().enumerate() {
                        d[3 + k] = edge_dof(tri[a], tri[b]);
                    }
                }
                d
            })
            .collect();

        let mut boundary_dofs: BTreeMap<BoundaryTag, Vec<usize>> =
            BoundaryTag::ALL.iter().map(|&t| (t, Vec::new())).collect();
        for f in mesh.boundary_facets() {
            let list = boundary_dofs.get_mut(&f.tag).unwrap();
            list.extend(f.nodes);
            if kind == ElementKind::P2 {
                list.push(edge_dof(f.nodes[0], f.nodes[1]));
            }
        }
        for list in boundary_dofs.values_mut() {
            list.sort_unstable();
            list.dedup();
        }

        let geometry = (0..mesh.triangle_count())
            .map(|t| ElementGeometry::new(mesh.vertices(t)))
            .collect();

        let quadrature = default_quadrature();
        let n = kind.node_count();
        let mut basis_values = Vec::with_capacity(quadrature.len());
        let mut basis_ref_grads = Vec::with_capacity(quadrature.len());
        for p in &quadrature.points {
            let mut v = [0.0; 6];
            let mut g = [[0.0; 2]; 6];
            shape_eval_into(kind, *p, &mut v[..n], &mut g[..n]);
            basis_values.push(v);
            basis_ref_grads.push(g);
        }

        FeSpace {
            scalar_dofs: dof_coords.len(),
            mesh,
            kind,
            components,
            element_dofs,
            dof_coords,
            boundary_dofs,
            geometry,
            quadrature,
            basis_values,
            basis_ref_grads,
            pattern: OnceLock::new(),
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn local_dofs(&self) -> usize {
        self.kind.node_count()
    }

    pub fn scalar_dof_count(&self) -> usize {
        self.scalar_dofs
    }

    pub fn dof_count(&self) -> usize {
        self.scalar_dofs * self.components
    }

    pub fn element_count(&self) -> usize {
        self.element_dofs.len()
    }

    /// Scalar dofs of element `e`, in local basis order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.element_dofs[e][..self.local_dofs()]
    }

    /// Location of each scalar dof.
    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    /// Scalar dofs located on the boundary side `tag`, sorted. Corners belong
    /// to both adjacent sides.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary_dofs[&tag]
    }

    /// Sorted union of all boundary scalar dofs.
    pub fn all_boundary_dofs(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_dofs.values().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    /// Basis values at quadrature point `q` of the default rule.
    #[inline]
    pub fn basis_values(&self, q: usize) -> &[f64] {
        &self.basis_values[q][..self.local_dofs()]
    }

    /// Physical basis gradients on element `e` at quadrature point `q`.
    #[inline]
    pub fn basis_grads(&self, e: usize, q: usize, out: &mut [[f64; 2]; 6]) {
        let g = &self.geometry[e];
        for (o, r) in out
            .iter_mut()
            .zip(&self.basis_ref_grads[q][..self.local_dofs()])
        {
            *o = g.physical_grad(*r);
        }
    }

    /// Quadrature weight times Jacobian determinant.
    #[inline]
    pub fn jxw(&self, e: usize, q: usize) -> f64 {
        self.quadrature.weights[q] * self.geometry[e].det
    }

    /// Zero matrix on the scalar dof coupling pattern (built once).
    pub fn scalar_pattern(&self) -> &CsrMatrix {
        self.pattern.get_or_init(|| {
            let n = self.scalar_dofs;
            CsrMatrix::from_block_pattern(
                (n, n),
                (0..self.element_count()).map(|e| (self.element_dofs(e), self.element_dofs(e))),
            )
        })
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::unit_square(n).unwrap())
    }

    #[test]
    fn dof_counts_on_8x8() {
        let m = mesh(8);
        assert_eq!(build_space(&m, ElementKind::P1, 1).dof_count(), 81);
        assert_eq!(build_space(&m, ElementKind::P2, 1).dof_count(), 289);
        assert_eq!(build_space(&m, ElementKind::P2, 2).dof_count(), 578);
    }

    #[test]
    fn shared_dofs_have_consistent_coordinates() {
        let m = mesh(3);
        let s = build_space(&m, ElementKind::P2, 1);
        for e in 0..s.element_count() {
            let g = s.geometry(e);
            let re = super::super::ReferenceElement::new(ElementKind::P2);
            for (i, &d) in s.element_dofs(e).iter().enumerate() {
                let x = g.map(re.nodes[i]);
                let c = s.dof_coords()[d];
                assert!((x[0] - c[0]).abs() < 1e-15 && (x[1] - c[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_lists_match_geometry() {
        let m = mesh(4);
        let s = build_space(&m, ElementKind::P2, 1);
        for tag in BoundaryTag::ALL {
            let on = |p: [f64; 2]| match tag {
                BoundaryTag::Left => p[0] == 0.0,
                BoundaryTag::Right => p[0] == 1.0,
                BoundaryTag::Bottom => p[1] == 0.0,
                BoundaryTag::Top => p[1] == 1.0,
            };
            let listed = s.boundary_dofs(tag);
            assert_eq!(listed.len(), 9);
            for (d, p) in s.dof_coords().iter().enumerate() {
                assert_eq!(listed.contains(&d), on(*p), "{tag} dof {d} at {p:?}");
            }
        }
        assert_eq!(s.all_boundary_dofs().len(), 32);
    }

    #[test]
    fn geometry_is_positive() {
        let m = mesh(5);
        let s = build_space(&m, ElementKind::P1, 1);
        for e in 0..s.element_count() {
            assert!((s.geometry(e).det - 2.0 / 50.0).abs() < 1e-15);
        }
    }
}
