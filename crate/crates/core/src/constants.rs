//! Physical constants (CODATA 2018) and a few fixed material/unit values.

/// Speed of light in vacuum (m/s).
pub const C: f64 = 2.997_924_58e8;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const KB: f64 = 1.380_649e-23;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Mean molecular mass of air, 28.97 u (kg).
pub const AIR_MOLECULAR_MASS: f64 = 4.81e-26;
/// Hard-sphere kinetic diameter used for the air mean free path (m).
pub const AIR_KINETIC_DIAMETER: f64 = 3.7e-10;

/// One Torr in pascal.
pub const TORR: f64 = 101_325.0 / 760.0;

/// Proton magnetic moment (J/T).
pub const PROTON_MAGNETIC_MOMENT: f64 = 1.410_606_797_36e-26;
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Bundle of the four constants the models use, for callers that want to
/// pass them around as a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub hbar: f64,
    pub kb: f64,
    pub eps0: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        c: C,
        hbar: HBAR,
        kb: KB,
        eps0: EPS0,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
