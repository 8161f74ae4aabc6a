/// Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
///
/// Weights are area-scaled: they sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a function of barycentric coordinates over the reference triangle.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

/// 12-point symmetric rule (Dunavant), exact through total degree 6.
///
/// Orbit parameters refined to full double precision from the moment equations.
pub fn default_quadrature() -> QuadratureRule {
    const A: f64 = 0.249_286_745_170_910_421_291_638_6;
    const B: f64 = 0.063_089_014_491_502_228_340_331_6;
    const C: f64 = 0.053_145_049_844_816_947_353_249_67;
    const D: f64 = 0.310_352_451_033_784_405_416_607_7;
    const WA: f64 = 0.058_393_137_863_189_683_012_644_81;
    const WB: f64 = 0.025_422_453_185_103_408_460_468_4;
    const WC: f64 = 0.041_425_537_809_186_787_596_776_73;

    let mut points = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for (a, w) in [(A, WA), (B, WB)] {
        let c = 1.0 - 2.0 * a;
        points.extend([[c, a, a], [a, c, a], [a, a, c]]);
        weights.extend([w; 3]);
    }
    let e = 1.0 - C - D;
    points.extend([
        [C, D, e],
        [C, e, D],
        [D, C, e],
        [D, e, C],
        [e, C, D],
        [e, D, C],
    ]);
    weights.extend([WC; 6]);
    QuadratureRule {
        points,
        weights,
        degree: 6,
    }
}
