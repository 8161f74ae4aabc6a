use std::collections::BTreeMap;

use crate::analytic::Analytic;
use crate::fem::FeSpace;
use crate::mesh::BoundaryTag;

/// What a field sees on one side of the rectangle.
#[derive(Debug, Clone)]
pub enum Prescription {
    Dirichlet(Analytic),
    HomogeneousNeumann,
}

/// Per-tag prescriptions of one field.
///
/// Where two tagged sides meet, Dirichlet wins over Neumann; between two
/// Dirichlet sides the one later in `precedence` wins. The default order
/// lets the vertical walls win at the corners.
#[derive(Debug, Clone)]
pub struct FieldBc {
    prescriptions: [Prescription; 4],
    precedence: [BoundaryTag; 4],
}

impl FieldBc {
    pub const DEFAULT_PRECEDENCE: [BoundaryTag; 4] = [
        BoundaryTag::Bottom,
        BoundaryTag::Top,
        BoundaryTag::Left,
        BoundaryTag::Right,
    ];

    pub fn uniform(p: Prescription) -> Self {
        FieldBc {
            prescriptions: [p.clone(), p.clone(), p.clone(), p],
            precedence: Self::DEFAULT_PRECEDENCE,
        }
    }

    pub fn homogeneous_neumann() -> Self {
        Self::uniform(Prescription::HomogeneousNeumann)
    }

    pub fn dirichlet_everywhere(f: Analytic) -> Self {
        Self::uniform(Prescription::Dirichlet(f))
    }

    pub fn with(mut self, tag: BoundaryTag, p: Prescription) -> Self {
        self.prescriptions[slot(tag)] = p;
        self
    }

    /// Ascending precedence; the last tag wins shared corners.
    pub fn with_precedence(mut self, order: [BoundaryTag; 4]) -> Self {
        self.precedence = order;
        self
    }

    pub fn get(&self, tag: BoundaryTag) -> &Prescription {
        &self.prescriptions[slot(tag)]
    }

    pub fn precedence(&self) -> [BoundaryTag; 4] {
        self.precedence
    }

    /// True when every side is Dirichlet.
    pub fn fully_dirichlet(&self) -> bool {
        self.prescriptions
            .iter()
            .all(|p| matches!(p, Prescription::Dirichlet(_)))
    }

    pub(crate) fn components_ok(&self, components: usize) -> bool {
        self.prescriptions.iter().all(|p| match p {
            Prescription::Dirichlet(f) => f.components() == components,
            Prescription::HomogeneousNeumann => true,
        })
    }

    /// Constrained dofs (sorted, component-blocked) and their values at `t`.
    pub fn dirichlet_data(&self, space: &FeSpace, t: f64) -> (Vec<usize>, Vec<f64>) {
        let ns = space.scalar_dof_count();
        let coords = space.dof_coords();
        let mut owner: BTreeMap<usize, &Analytic> = BTreeMap::new();
        for tag in self.precedence {
            if let Prescription::Dirichlet(f) = self.get(tag) {
                for &d in space.boundary_dofs(tag) {
                    owner.insert(d, f);
                }
            }
        }
        let nc = space.components();
        let mut dofs = Vec::with_capacity(owner.len() * nc);
        let mut values = Vec::with_capacity(owner.len() * nc);
        for c in 0..nc {
            for (&d, f) in &owner {
                let [x, y] = coords[d];
                dofs.push(c * ns + d);
                values.push(f.eval(x, y, t)[c]);
            }
        }
        (dofs, values)
    }
}

fn slot(tag: BoundaryTag) -> usize {
    BoundaryTag::ALL
        .iter()
        .position(|&t| t == tag)
        .expect("tag listed in ALL")
}

/// Prescriptions for the three evolved fields. Pressure is always natural
/// with a zero-mean gauge, so it has no entry.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub velocity: FieldBc,
    pub angular: FieldBc,
    pub temperature: FieldBc,
}
