use super::{Discretization, PhysicalParams};
use crate::fem::FeFunction;
use crate::sparse::CsrMatrix;

/// Stability monitors after one step. Squared norms are L2 unless noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEntry {
    pub step: usize,
    pub time: f64,
    pub velocity: f64,
    /// `||2 u^{n+1} - u^n||^2`.
    pub velocity_bdf: f64,
    /// `zeta ||omega||^2`.
    pub angular: f64,
    pub angular_bdf: f64,
    pub temperature: f64,
    pub temperature_bdf: f64,
    /// `(dt^2 / 3) ||grad p||^2`.
    pub pressure: f64,
    /// `dt ((chi + mu) |u|_1^2 + upsilon |omega|_1^2 + 4 chi ||omega||^2 + kappa |theta|_1^2)`.
    pub dissipation: f64,
    /// Sum of the non-dissipative entries.
    pub composite: f64,
}

impl EnergyEntry {
    pub const COLUMNS: [&'static str; 11] = [
        "step",
        "time",
        "velocity",
        "velocity_bdf",
        "angular",
        "angular_bdf",
        "temperature",
        "temperature_bdf",
        "pressure",
        "dissipation",
        "composite",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.step as f64,
            self.time,
            self.velocity,
            self.velocity_bdf,
            self.angular,
            self.angular_bdf,
            self.temperature,
            self.temperature_bdf,
            self.pressure,
            self.dissipation,
            self.composite,
        ]
    }

    pub fn is_admissible(&self) -> bool {
        self.values()[2..]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

fn quad(m: &CsrMatrix, x: &[f64]) -> f64 {
    m.bilinear(x, x).max(0.0)
}

fn bdf_pair(m: &CsrMatrix, new: &FeFunction, old: &FeFunction) -> (f64, f64) {
    let d: Vec<f64> = new
        .coeffs()
        .iter()
        .zip(old.coeffs())
        .map(|(a, b)| 2.0 * a - b)
        .collect();
    (quad(m, new.coeffs()), quad(m, &d))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn energy_entry(
    disc: &Discretization,
    params: &PhysicalParams,
    step: usize,
    time: f64,
    dt: f64,
    u: (&FeFunction, &FeFunction),
    p: &FeFunction,
    omega: (&FeFunction, &FeFunction),
    theta: (&FeFunction, &FeFunction),
) -> EnergyEntry {
    let (velocity, velocity_bdf) = bdf_pair(disc.velocity_mass(), u.0, u.1);
    let (w, w_bdf) = bdf_pair(disc.scalar_mass(), omega.0, omega.1);
    let (temperature, temperature_bdf) = bdf_pair(disc.scalar_mass(), theta.0, theta.1);
    let pressure = dt * dt / 3.0 * quad(disc.pressure_stiffness(), p.coeffs());
    let dissipation = dt
        * ((params.chi + params.mu) * quad(disc.velocity_stiffness(), u.0.coeffs())
            + params.upsilon * quad(disc.scalar_stiffness(), omega.0.coeffs())
            + 4.0 * params.chi * w
            + params.kappa * quad(disc.scalar_stiffness(), theta.0.coeffs()));
    let (angular, angular_bdf) = (params.zeta * w, params.zeta * w_bdf);
    EnergyEntry {
        step,
        time,
        velocity,
        velocity_bdf,
        angular,
        angular_bdf,
        temperature,
        temperature_bdf,
        pressure,
        dissipation,
        composite: velocity
            + velocity_bdf
            + angular
            + angular_bdf
            + temperature
            + temperature_bdf
            + pressure,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    /// `2(3a - 4b + c) a` against its telescoping decomposition.
    fn bdf2_identity_gap(a: f64, b: f64, c: f64) -> f64 {
        let lhs = 2.0 * (3.0 * a - 4.0 * b + c) * a;
        let rhs = a * a - b * b + (2.0 * a - b).powi(2) - (2.0 * b - c).powi(2)
            + (a - 2.0 * b + c).powi(2);
        lhs - rhs
    }

    proptest! {
        #[test]
        fn bdf2_telescoping_identity(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
            let scale = (a.abs() + b.abs() + c.abs()).powi(2).max(1.0);
            prop_assert!(bdf2_identity_gap(a, b, c).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn last_square_needs_the_minus_sign() {
        // with (a + 2b - c)^2 instead the identity breaks at (1, 1, 0)
        let (a, b, c) = (1.0f64, 1.0, 0.0);
        let wrong = a * a - b * b + (2.0 * a - b).powi(2) - (2.0 * b - c).powi(2)
            + (a + 2.0 * b - c).powi(2);
        assert_eq!(2.0 * (3.0 * a - 4.0 * b + c) * a, -2.0);
        assert_eq!(wrong, 6.0);
        assert_eq!(bdf2_identity_gap(a, b, c), 0.0);
    }
}
