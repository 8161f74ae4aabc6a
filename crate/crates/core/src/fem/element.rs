use super::FemError;

/// Lagrange element family on triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    P2,
}

impl ElementKind {
    pub fn node_count(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1 => 1,
            ElementKind::P2 => 2,
        }
    }
}

/// Local edge `k` (node `3 + k` of a P2 element) joins these two vertices.
pub(crate) const P2_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Basis values and reference-coordinate gradients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    /// Gradients with respect to `(xi, eta)`, where `lambda1 = xi`, `lambda2 = eta`.
    pub ref_grads: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    pub kind: ElementKind,
    /// Nodal positions in barycentric coordinates.
    pub nodes: Vec<[f64; 3]>,
}

impl ReferenceElement {
    pub fn new(kind: ElementKind) -> Self {
        let mut nodes = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        if kind == ElementKind::P2 {
            for [a, b] in P2_EDGES {
                let mut p = [0.0; 3];
                p[a] = 0.5;
                p[b] = 0.5;
                nodes.push(p);
            }
        }
        ReferenceElement { kind, nodes }
    }

    pub fn node_count(&self) -> usize {
        self.kind.node_count()
    }
}

// d lambda_i / d(xi, eta)
const BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Evaluate writing into caller buffers (no validation).
pub(crate) fn shape_eval_into(
    kind: ElementKind,
    l: [f64; 3],
    values: &mut [f64],
    grads: &mut [[f64; 2]],
) {
    match kind {
        ElementKind::P1 => {
            for i in 0..3 {
                values[i] = l[i];
                grads[i] = BARY_GRADS[i];
            }
        }
        ElementKind::P2 => {
            for i in 0..3 {
                values[i] = l[i] * (2.0 * l[i] - 1.0);
                let s = 4.0 * l[i] - 1.0;
                grads[i] = [s * BARY_GRADS[i][0], s * BARY_GRADS[i][1]];
            }
            for (k, [a, b]) in P2_EDGES.iter().copied().enumerate() {
                values[3 + k] = 4.0 * l[a] * l[b];
                grads[3 + k] = [
                    4.0 * (l[a] * BARY_GRADS[b][0] + l[b] * BARY_GRADS[a][0]),
                    4.0 * (l[a] * BARY_GRADS[b][1] + l[b] * BARY_GRADS[a][1]),
                ];
            }
        }
    }
}

/// Basis values and reference gradients at a barycentric point.
pub fn shape_eval(kind: ElementKind, point: [f64; 3]) -> Result<ShapeValues, FemError> {
    const TOL: f64 = 1e-12;
    let sum: f64 = point.iter().sum();
    if point.iter().any(|&c| !c.is_finite() || c < -TOL) || (sum - 1.0).abs() > TOL {
        return Err(FemError::InvalidBarycentric(point));
    }
    let n = kind.node_count();
    let mut values = vec![0.0; n];
    let mut ref_grads = vec![[0.0; 2]; n];
    shape_eval_into(kind, point, &mut values, &mut ref_grads);
    Ok(ShapeValues { values, ref_grads })
}
