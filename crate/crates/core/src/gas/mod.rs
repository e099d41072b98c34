//! Free-molecular gas damping of the COM and torsional motion.
//!
//! Each surface element of the spheroid sees a Maxwellian gas at rest. A
//! fraction `σ` of the molecules is re-emitted diffusely at the gas
//! temperature, the rest reflect specularly. Linearizing the momentum flux in
//! the local surface velocity `u` gives a traction
//!
//! ```text
//! dF = −K [ a_n (u·n) n + a_t (u − (u·n) n) ] dA,     K = 8p / (π v̄)
//! a_n = 1 − σ (1/2 − π/8),   a_t = σ / 4
//! ```
//!
//! which reduces to the Epstein drag for a sphere. Translational and
//! torsional rates follow by integrating over the spheroid surface; the
//! integrals are smooth and evaluated with Gauss–Legendre quadrature.
//!
//! Rates are velocity-damping rates `Γ` (the linewidth of the thermal
//! Lorentzian), i.e. `F = −m Γ v` and `M = −I Γ_θ ω`.

pub mod oracle;

use serde::Serialize;
use std::f64::consts::PI;

use crate::model::{FlowRegime, GasEnvironment, Particle, TrapBeam};
use crate::optics;
use crate::quadrature::GaussLegendre;
use crate::Result;

/// Damping rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingRates {
    /// Motion along the long axis.
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_theta: f64,
}

impl DampingRates {
    pub fn anisotropy(&self) -> f64 {
        self.gamma_x / self.gamma_y
    }
}

/// Surface integrals of a prolate spheroid that the linear drag needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMoments {
    pub area: f64,
    /// `∫ n_x² dA`
    pub nxx: f64,
    /// `∫ n_y² dA`
    pub nyy: f64,
    /// `∫ (x n_y − y n_x)² dA`
    pub twist: f64,
    /// `∫ (x² + y²) dA`
    pub lever: f64,
}

const QUADRATURE_POINTS: usize = 96;

impl SurfaceMoments {
    /// Moments for semiaxes `a` (symmetry axis, along x) and `b = ry = rz`.
    ///
    /// With `u = cos t` on the surface `(a u, b s cos φ, b s sin φ)`,
    /// `s = sqrt(1 − u²)`, the area element is `b h du dφ` with
    /// `h = sqrt(b² u² + a² s²)` and the unit normal is
    /// `(b u, a s cos φ, a s sin φ) / h`.
    pub fn spheroid(a: f64, b: f64) -> Self {
        let q = GaussLegendre::new(QUADRATURE_POINTS);
        let h = |u: f64| (b * b * u * u + a * a * (1.0 - u * u)).sqrt();
        let area = 2.0 * PI * b * q.integrate(h);
        let nxx = 2.0 * PI * b.powi(3) * q.integrate(|u| u * u / h(u));
        let nyy = PI * a * a * b * q.integrate(|u| (1.0 - u * u) / h(u));
        let d = a * a - b * b;
        let twist = PI * d * d * b * q.integrate(|u| (1.0 - u * u) * u * u / h(u));
        let lever = PI * b * q.integrate(|u| (2.0 * a * a * u * u + b * b * (1.0 - u * u)) * h(u));
        SurfaceMoments {
            area,
            nxx,
            nyy,
            twist,
            lever,
        }
    }
}

/// Normal and tangential traction coefficients `(a_n, a_t)`.
pub fn traction_coefficients(accommodation: f64) -> (f64, f64) {
    let s = accommodation;
    (1.0 - s * (0.5 - PI / 8.0), 0.25 * s)
}

/// `K = n m v̄ = 8p / (π v̄)`, the drag per unit area per unit speed.
fn flux_scale(gas: &GasEnvironment) -> f64 {
    if gas.pressure == 0.0 {
        return 0.0;
    }
    8.0 * gas.pressure / (PI * gas.mean_speed())
}

/// Drag coefficients `(β_x, β_y, β_θ)` in N·s/m and N·m·s.
pub fn drag_coefficients(particle: &Particle, gas: &GasEnvironment) -> (f64, f64, f64) {
    let m = SurfaceMoments::spheroid(particle.rx, particle.ry);
    let (an, at) = traction_coefficients(gas.accommodation);
    let k = flux_scale(gas);
    let bx = k * ((an - at) * m.nxx + at * m.area);
    let by = k * ((an - at) * m.nyy + at * m.area);
    let bt = k * ((an - at) * m.twist + at * m.lever);
    (bx, by, bt)
}

/// Translational damping `(Γ_x, Γ_y)`.
pub fn com_damping(particle: &Particle, gas: &GasEnvironment) -> (f64, f64) {
    let (bx, by, _) = drag_coefficients(particle, gas);
    let mass = particle.mass();
    (bx / mass, by / mass)
}

/// Torsional damping `Γ_θ` about `z`.
pub fn rot_damping(particle: &Particle, gas: &GasEnvironment) -> f64 {
    let (_, _, bt) = drag_coefficients(particle, gas);
    bt / particle.moment_of_inertia()
}

pub fn damping_rates(particle: &Particle, gas: &GasEnvironment) -> DampingRates {
    let (bx, by, bt) = drag_coefficients(particle, gas);
    let mass = particle.mass();
    DampingRates {
        gamma_x: bx / mass,
        gamma_y: by / mass,
        gamma_theta: bt / particle.moment_of_inertia(),
    }
}

/// Epstein rate for a sphere, `(8/π) p / (ρ r v̄) (1 + σπ/8)`.
pub fn epstein_sphere_rate(radius: f64, density: f64, gas: &GasEnvironment) -> f64 {
    8.0 / PI * gas.pressure / (density * radius * gas.mean_speed())
        * (1.0 + gas.accommodation * PI / 8.0)
}

/// A quality factor that may be unbounded (no gas) or undefined (no mode).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QualityFactor {
    Finite(f64),
    Unbounded,
    Degenerate,
}

impl QualityFactor {
    fn from_rates(omega: f64, gamma: f64, degenerate: bool) -> Self {
        if degenerate {
            QualityFactor::Degenerate
        } else if gamma == 0.0 {
            QualityFactor::Unbounded
        } else {
            QualityFactor::Finite(omega / gamma)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            QualityFactor::Finite(q) => Some(q),
            _ => None,
        }
    }

    /// Numeric view for tables: `inf` when unbounded, `NaN` when degenerate.
    pub fn as_f64(&self) -> f64 {
        match *self {
            QualityFactor::Finite(q) => q,
            QualityFactor::Unbounded => f64::INFINITY,
            QualityFactor::Degenerate => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityFactors {
    pub q_y: QualityFactor,
    pub q_theta: QualityFactor,
    pub rates: DampingRates,
    pub frequencies: optics::TrapFrequencies,
    #[serde(skip)]
    pub regime: FlowRegime,
}

pub fn quality_factors(
    particle: &Particle,
    beam: &TrapBeam,
    gas: &GasEnvironment,
) -> Result<QualityFactors> {
    let frequencies = optics::frequencies(particle, beam)?;
    let rates = damping_rates(particle, gas);
    Ok(QualityFactors {
        q_y: QualityFactor::from_rates(frequencies.omega_y, rates.gamma_y, false),
        q_theta: QualityFactor::from_rates(
            frequencies.omega_theta,
            rates.gamma_theta,
            frequencies.degenerate,
        ),
        rates,
        frequencies,
        regime: gas.regime(particle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{KB, TORR};
    use proptest::prelude::*;

    #[test]
    fn sphere_moments() {
        let r = 2.0;
        let m = SurfaceMoments::spheroid(r, r);
        let area = 4.0 * PI * r * r;
        assert!((m.area / area - 1.0).abs() < 1e-13);
        assert!((m.nxx / (area / 3.0) - 1.0).abs() < 1e-13);
        assert!((m.nyy / (area / 3.0) - 1.0).abs() < 1e-13);
        assert_eq!(m.twist, 0.0);
        assert!((m.lever / (2.0 / 3.0 * r * r * area) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn prolate_area_closed_form() {
        for aspect in [0.2, 0.5, 0.8] {
            let (a, b) = (1.0, aspect);
            let e = (1.0f64 - b * b).sqrt();
            let exact = 2.0 * PI * b * b * (1.0 + a / (b * e) * e.asin());
            let m = SurfaceMoments::spheroid(a, b);
            assert!((m.area / exact - 1.0).abs() < 1e-12, "{aspect}");
            assert!(((m.nxx + 2.0 * m.nyy) / m.area - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_matches_epstein() {
        let gas = GasEnvironment::air(1.0);
        let p = Particle::diamond(50e-9, 50e-9);
        let (gx, gy) = com_damping(&p, &gas);
        let eps = epstein_sphere_rate(50e-9, 3500.0, &gas);
        assert!((gx / eps - 1.0).abs() < 1e-12);
        assert!((gy / eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_rotation_matches_known_rate() {
        // Fully diffuse rotating sphere: Γ_rot = 10 σ p / (π ρ r v̄).
        let gas = GasEnvironment::air(2.0);
        let r = 40e-9;
        let p = Particle::diamond(r, r);
        let expected = 10.0 * 0.9 * gas.pressure / (PI * 3500.0 * r * gas.mean_speed());
        assert!((rot_damping(&p, &gas) / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_pressure_is_ballistic() {
        let p = Particle::diamond(50e-9, 40e-9);
        let gas = GasEnvironment::air(0.0);
        let r = damping_rates(&p, &gas);
        assert_eq!((r.gamma_x, r.gamma_y, r.gamma_theta), (0.0, 0.0, 0.0));
        assert_eq!(rot_damping(&p, &gas), 0.0);
        let b = TrapBeam::new(0.1, 600e-9, 1550e-9);
        let q = quality_factors(&p, &b, &gas).unwrap();
        assert_eq!(q.q_y, QualityFactor::Unbounded);
        assert_eq!(q.q_theta, QualityFactor::Unbounded);
        assert_eq!(q.regime, FlowRegime::Ballistic);
    }

    #[test]
    fn prolate_anisotropy_window() {
        let p = Particle::diamond(50e-9, 40e-9);
        let r = damping_rates(&p, &GasEnvironment::air(1.0));
        let ratio = r.anisotropy();
        assert!(ratio > 0.6 && ratio < 0.9, "{ratio}");
    }

    #[test]
    fn anisotropy_relaxes_monotonically_to_one() {
        let gas = GasEnvironment::air(1.0);
        let mut last = 0.0;
        for i in 0..=10 {
            let aspect = 0.5 + 0.05 * i as f64;
            let r = damping_rates(&Particle::diamond(50e-9, 50e-9 * aspect), &gas).anisotropy();
            assert!(r <= 1.0 + 1e-12 && r > last, "aspect {aspect}: {r}");
            last = r;
        }
        assert!((last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kinetic_scaling() {
        // rates ∝ p sqrt(m_gas / T)
        let p = Particle::diamond(50e-9, 40e-9);
        let a = GasEnvironment::new(1.0, 300.0, 4.81e-26, 0.9);
        let ra = damping_rates(&p, &a);
        for (b, factor) in [
            (GasEnvironment::new(3.0, 300.0, 4.0 * 4.81e-26, 0.9), 6.0),
            (GasEnvironment::new(1.0, 1200.0, 4.81e-26, 0.9), 0.5),
        ] {
            let rb = damping_rates(&p, &b);
            for (x, y) in [
                (ra.gamma_x, rb.gamma_x),
                (ra.gamma_y, rb.gamma_y),
                (ra.gamma_theta, rb.gamma_theta),
            ] {
                assert!((y / x / factor - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quality_factor_ratio_and_sphere() {
        let b = TrapBeam::new(0.1, 600e-9, 1550e-9);
        let gas = GasEnvironment::air_torr(1e-8);
        let q = quality_factors(&Particle::diamond(50e-9, 40e-9), &b, &gas).unwrap();
        let ratio = q.q_theta.value().unwrap() / q.q_y.value().unwrap();
        assert!(ratio > 5.0 && ratio < 15.0, "{ratio}");
        let s = quality_factors(&Particle::diamond(50e-9, 50e-9), &b, &gas).unwrap();
        assert_eq!(s.q_theta, QualityFactor::Degenerate);
        assert!(s.q_theta.as_f64().is_nan());
    }

    #[test]
    fn torsional_q_consistent_with_reference_sensitivity() {
        // Q_θ = 4 kB T I Ω_θ / M_min² with M_min = 2e-29 N·m/√Hz.
        let p = Particle::diamond(50e-9, 40e-9);
        let b = TrapBeam::new(0.1, 600e-9, 1550e-9);
        let q = quality_factors(&p, &b, &GasEnvironment::air_torr(1e-8)).unwrap();
        let implied = 4.0 * KB * 300.0 * p.moment_of_inertia() * q.frequencies.omega_theta / (2e-29f64).powi(2);
        let ours = q.q_theta.value().unwrap();
        assert!(ours > implied / 3.0 && ours < implied * 3.0, "{ours:e} vs {implied:e}");
        assert!(ours > 1e11 && ours < 9e11);
    }

    proptest! {
        #[test]
        fn q_times_pressure_is_constant(decade in -8.0..-2.0f64) {
            let p = Particle::diamond(50e-9, 40e-9);
            let b = TrapBeam::new(0.1, 600e-9, 1550e-9);
            let ref_gas = GasEnvironment::air_torr(1.0);
            let gas = GasEnvironment::air_torr(10f64.powf(decade));
            let q0 = quality_factors(&p, &b, &ref_gas).unwrap();
            let q1 = quality_factors(&p, &b, &gas).unwrap();
            let a = q0.q_theta.value().unwrap() * ref_gas.pressure;
            let c = q1.q_theta.value().unwrap() * gas.pressure;
            prop_assert!((a / c - 1.0).abs() < 1e-9);
            let a = q0.q_y.value().unwrap() * ref_gas.pressure;
            let c = q1.q_y.value().unwrap() * gas.pressure;
            prop_assert!((a / c - 1.0).abs() < 1e-9);
        }

        #[test]
        fn rates_linear_in_pressure(pr in 1e-7..1e3f64) {
            let p = Particle::diamond(50e-9, 30e-9);
            let r1 = damping_rates(&p, &GasEnvironment::air(pr));
            let r2 = damping_rates(&p, &GasEnvironment::air(2.0 * pr));
            prop_assert!((r2.gamma_x / (2.0 * r1.gamma_x) - 1.0).abs() < 1e-12);
            prop_assert!((r2.gamma_y / (2.0 * r1.gamma_y) - 1.0).abs() < 1e-12);
            prop_assert!((r2.gamma_theta / (2.0 * r1.gamma_theta) - 1.0).abs() < 1e-12);
            prop_assert!(r1.gamma_x <= r1.gamma_y);
        }
    }

    #[test]
    fn torr_helper() {
        assert_eq!(GasEnvironment::air_torr(1.0).pressure, TORR);
    }
}
