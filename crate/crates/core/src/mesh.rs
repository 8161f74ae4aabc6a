//! Structured triangulations of axis-aligned rectangles.
//!
//! Every grid cell is split along its bottom-left to top-right diagonal, so
//! all triangles share one orientation and the topology is fully determined
//! by `(nx, ny)`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("subdivisions must be at least 1, got nx={nx}, ny={ny}")]
    InvalidSubdivision { nx: usize, ny: usize },
    #[error("degenerate bounds: need xmax > xmin and ymax > ymin, got {0:?}")]
    DegenerateBounds(Bounds),
}

/// Side of the rectangle a boundary facet lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Left,
        BoundaryTag::Right,
        BoundaryTag::Bottom,
        BoundaryTag::Top,
    ];

    /// Left and right walls are the vertically-oriented sides.
    pub fn is_vertical(self) -> bool {
        matches!(self, BoundaryTag::Left | BoundaryTag::Right)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Top => "top",
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            BoundaryTag::Left => [-1.0, 0.0],
            BoundaryTag::Right => [1.0, 0.0],
            BoundaryTag::Bottom => [0.0, -1.0],
            BoundaryTag::Top => [0.0, 1.0],
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub const UNIT_SQUARE: Bounds = Bounds {
        xmin: 0.0,
        xmax: 1.0,
        ymin: 0.0,
        ymax: 1.0,
    };

    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Bounds {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// An immutable triangulation with counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_facets: Vec<BoundaryFacet>,
    nominal_h: f64,
    bounds: Bounds,
    nx: usize,
    ny: usize,
}

impl Mesh {
    /// Uniform `nx x ny` grid of `bounds`, each cell cut into two triangles.
    pub fn build_structured_rect(nx: usize, ny: usize, bounds: Bounds) -> Result<Mesh, MeshError> {
        if nx == 0 || ny == 0 {
            return Err(MeshError::InvalidSubdivision { nx, ny });
        }
        let finite = [bounds.xmin, bounds.xmax, bounds.ymin, bounds.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || bounds.xmax <= bounds.xmin || bounds.ymax <= bounds.ymin {
            return Err(MeshError::DegenerateBounds(bounds));
        }

        let dx = bounds.width() / nx as f64;
        let dy = bounds.height() / ny as f64;
        let id = |i: usize, j: usize| j * (nx + 1) + i;

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            // Pin the last row/column to the exact bound to avoid drift.
            let y = if j == ny {
                bounds.ymax
            } else {
                bounds.ymin + j as f64 * dy
            };
            for i in 0..=nx {
                let x = if i == nx {
                    bounds.xmax
                } else {
                    bounds.xmin + i as f64 * dx
                };
                nodes.push([x, y]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut boundary_facets = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary_facets.push(BoundaryFacet {
                nodes: [id(i, 0), id(i + 1, 0)],
                tag: BoundaryTag::Bottom,
            });
        }
        for j in 0..ny {
            boundary_facets.push(BoundaryFacet {
                nodes: [id(nx, j), id(nx, j + 1)],
                tag: BoundaryTag::Right,
            });
        }
        for i in (0..nx).rev() {
            boundary_facets.push(BoundaryFacet {
                nodes: [id(i + 1, ny), id(i, ny)],
                tag: BoundaryTag::Top,
            });
        }
        for j in (0..ny).rev() {
            boundary_facets.push(BoundaryFacet {
                nodes: [id(0, j + 1), id(0, j)],
                tag: BoundaryTag::Left,
            });
        }

        Ok(Mesh {
            nodes,
            triangles,
            boundary_facets,
            nominal_h: dx.min(dy),
            bounds,
            nx,
            ny,
        })
    }

    /// `n x n` grid of the unit square.
    pub fn unit_square(n: usize) -> Result<Mesh, MeshError> {
        Mesh::build_structured_rect(n, n, Bounds::UNIT_SQUARE)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn nominal_h(&self) -> f64 {
        self.nominal_h
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn subdivisions(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Diameter of the circumscribed circle of triangle `t`.
    pub fn circumdiameter(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let (a, b, c) = (len(p1, p2), len(p2, p0), len(p0, p1));
        a * b * c / (2.0 * self.signed_area(t).abs())
    }

    /// Largest element circumdiameter.
    pub fn mesh_diameter(&self) -> f64 {
        (0..self.triangle_count())
            .map(|t| self.circumdiameter(t))
            .fold(0.0, f64::max)
    }

    /// Enumerate undirected edges keyed by `(min, max)` node index, with the
    /// number of triangles using each.
    pub fn edge_multiplicity(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// The tags of every boundary facet containing `node`.
    pub fn node_tags(&self, node: usize) -> Vec<BoundaryTag> {
        let mut tags: Vec<_> = self
            .boundary_facets
            .iter()
            .filter(|f| f.nodes.contains(&node))
            .map(|f| f.tag)
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Single tag for a boundary node; corners resolve to the left/right side.
    pub fn primary_tag(&self, node: usize) -> Option<BoundaryTag> {
        let tags = self.node_tags(node);
        tags.iter()
            .copied()
            .find(|t| t.is_vertical())
            .or_else(|| tags.first().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.triangle_count(), 2);
        assert_eq!(m.boundary_facets().len(), 4);
        assert!((m.mesh_diameter() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn counts_and_areas_on_8x8() {
        let m = Mesh::unit_square(8).unwrap();
        assert_eq!(m.node_count(), 81);
        assert_eq!(m.triangle_count(), 128);
        assert_eq!(m.boundary_facets().len(), 32);
        for t in 0..m.triangle_count() {
            assert!((m.signed_area(t) - 1.0 / 128.0).abs() < 1e-16);
        }
        assert!((m.mesh_diameter() - 2f64.sqrt() / 8.0).abs() < 1e-15);
        assert_eq!(m.nominal_h(), 1.0 / 8.0);
    }

    #[test]
    fn diameter_of_shifted_square() {
        let m = Mesh::build_structured_rect(2, 2, Bounds::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert!((m.mesh_diameter() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Mesh::build_structured_rect(0, 3, Bounds::UNIT_SQUARE).unwrap_err(),
            MeshError::InvalidSubdivision { nx: 0, ny: 3 }
        );
        let flat = Bounds::new(0.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            Mesh::build_structured_rect(2, 2, flat),
            Err(MeshError::DegenerateBounds(_))
        ));
        let flipped = Bounds::new(1.0, 0.0, 0.0, 1.0);
        assert!(Mesh::build_structured_rect(2, 2, flipped).is_err());
    }

    #[test]
    fn area_sum_and_edge_sharing() {
        let b = Bounds::new(-1.0, 2.0, 0.5, 1.75);
        let m = Mesh::build_structured_rect(7, 5, b).unwrap();
        let total: f64 = (0..m.triangle_count()).map(|t| m.signed_area(t)).sum();
        assert!((total - b.area()).abs() <= 1e-14 * b.area());

        let boundary: std::collections::HashSet<_> = m
            .boundary_facets()
            .iter()
            .map(|f| (f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1])))
            .collect();
        for (edge, count) in m.edge_multiplicity() {
            if boundary.contains(&edge) {
                assert_eq!(count, 1, "boundary edge {edge:?}");
            } else {
                assert_eq!(count, 2, "interior edge {edge:?}");
            }
        }
    }

    #[test]
    fn tags_partition_the_boundary() {
        let b = Bounds::new(-1.0, 1.0, -1.0, 1.0);
        let m = Mesh::build_structured_rect(4, 3, b).unwrap();
        let mut length = HashMap::new();
        for f in m.boundary_facets() {
            let [p, q] = [m.nodes()[f.nodes[0]], m.nodes()[f.nodes[1]]];
            let on_side = |pt: [f64; 2]| match f.tag {
                BoundaryTag::Left => pt[0] == b.xmin,
                BoundaryTag::Right => pt[0] == b.xmax,
                BoundaryTag::Bottom => pt[1] == b.ymin,
                BoundaryTag::Top => pt[1] == b.ymax,
            };
            assert!(on_side(p) && on_side(q));
            *length.entry(f.tag).or_insert(0.0) +=
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        }
        assert!((length[&BoundaryTag::Left] - 2.0).abs() < 1e-14);
        assert!((length[&BoundaryTag::Right] - 2.0).abs() < 1e-14);
        assert!((length[&BoundaryTag::Bottom] - 2.0).abs() < 1e-14);
        assert!((length[&BoundaryTag::Top] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn corners_prefer_vertical_tags() {
        let m = Mesh::unit_square(2).unwrap();
        assert_eq!(m.node_tags(0), vec![BoundaryTag::Left, BoundaryTag::Bottom]);
        assert_eq!(m.primary_tag(0), Some(BoundaryTag::Left));
        assert_eq!(m.primary_tag(8), Some(BoundaryTag::Right));
        assert_eq!(m.primary_tag(1), Some(BoundaryTag::Bottom));
        assert_eq!(m.primary_tag(4), None);
    }
}
