//! Physical constants (CODATA 2018) and species defaults.

use std::f64::consts::PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Atomic mass of neutral 171Yb in u.
pub const YB171_ATOMIC_MASS_U: f64 = 170.936_325_8;

/// Mass of a singly ionised 171Yb ion, kg.
pub const YB171_ION_MASS: f64 = YB171_ATOMIC_MASS_U * ATOMIC_MASS_UNIT - ELECTRON_MASS;

/// Default Raman laser wavelength, m.
pub const RAMAN_WAVELENGTH: f64 = 377e-9;

/// Converts an ordinary frequency in Hz to angular frequency.
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Converts an angular frequency to ordinary frequency in Hz.
#[inline]
pub fn ordinary(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}

/// Angular frequency for a value given in MHz.
#[inline]
pub fn mhz(v: f64) -> f64 {
    angular(v * 1e6)
}
