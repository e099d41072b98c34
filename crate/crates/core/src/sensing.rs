//! Thermal-noise-limited torque sensing with the torsional mode.

use serde::Serialize;

use crate::constants::KB;

/// Torque sensitivity of a torsion oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityResult {
    /// Minimum detectable torque for one second of averaging (N·m/√Hz).
    pub per_rt_hz: f64,
}

impl SensitivityResult {
    /// Minimum detectable torque after averaging for `dt` seconds (N·m).
    pub fn min_torque(&self, dt: f64) -> f64 {
        self.per_rt_hz / dt.sqrt()
    }

    /// Averaging time after which `torque` exceeds the detection threshold.
    pub fn detection_time(&self, torque: f64) -> f64 {
        (self.per_rt_hz / torque).powi(2)
    }

    pub fn detects(&self, torque: f64, dt: f64) -> bool {
        torque > self.min_torque(dt)
    }
}

/// `M_min = sqrt(4 kB T I Ω_θ / (Q_θ Δt))` at `Δt = 1 s`.
pub fn torque_sensitivity(
    temperature: f64,
    inertia: f64,
    omega_theta: f64,
    q_theta: f64,
) -> SensitivityResult {
    SensitivityResult {
        per_rt_hz: (4.0 * KB * temperature * inertia * omega_theta / q_theta).sqrt(),
    }
}

/// Maximum torque `μ B` on a magnetic moment in a field.
pub fn spin_torque(moment: f64, field: f64) -> f64 {
    moment * field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{BOHR_MAGNETON, PROTON_MAGNETIC_MOMENT};

    #[test]
    fn square_root_dependences() {
        let a = torque_sensitivity(300.0, 1e-33, 8e6, 1e11);
        let b = torque_sensitivity(300.0, 1e-33, 8e6, 4e11);
        assert!((b.per_rt_hz / a.per_rt_hz - 0.5).abs() < 1e-15);
        assert_eq!(torque_sensitivity(0.0, 1e-33, 8e6, 1e11).per_rt_hz, 0.0);
        assert!((a.min_torque(4.0) / a.per_rt_hz - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spin_torques() {
        let proton = spin_torque(PROTON_MAGNETIC_MOMENT, 0.1);
        assert!((proton - 1.41e-27).abs() < 0.01e-27);
        assert_eq!(proton.log10().round(), -27.0);
        assert_eq!(spin_torque(PROTON_MAGNETIC_MOMENT, 0.0), 0.0);
        let electron = spin_torque(BOHR_MAGNETON, 0.1);
        assert!((electron - 9.274e-25).abs() < 1e-28);
    }

    #[test]
    fn detectability_is_monotone_in_time() {
        let s = SensitivityResult { per_rt_hz: 2e-29 };
        let torque = spin_torque(PROTON_MAGNETIC_MOMENT, 0.1);
        let t = s.detection_time(torque);
        assert!(t < 1e-3);
        let mut seen = false;
        for k in 0..40 {
            let dt = 1e-7 * 1.5f64.powi(k);
            let d = s.detects(torque, dt);
            assert!(!seen || d, "detection lost at {dt}");
            seen |= d;
            assert_eq!(d, dt > t * (1.0 + 1e-12));
        }
        assert!(seen);
    }
}
