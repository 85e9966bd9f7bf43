//! Free-space constants (SI).

use std::f64::consts::PI;

/// Speed of light in vacuum, exact.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability, 4π·10⁻⁷ H/m.
pub const MU0: f64 = 4.0e-7 * PI;
/// Vacuum permittivity, derived from `C0` and `MU0`.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Free-space wave impedance, derived.
pub const ETA0: f64 = MU0 * C0;

/// Wavenumber at angular frequency `omega`.
pub fn wavenumber(omega: f64) -> f64 {
    omega / C0
}
