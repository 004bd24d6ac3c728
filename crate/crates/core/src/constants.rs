use crate::{Error, Result};

/// Reduced Planck constant and particle mass. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(hbar) || !ok(mass) {
            return Err(Error::InvalidConstants { hbar, mass });
        }
        Ok(Self { hbar, mass })
    }

    pub const fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `2m / hbar^2`, the coupling in `phi'' = (2m/hbar^2)(V - E) phi`.
    pub fn coupling(&self) -> f64 {
        2.0 * self.mass / (self.hbar * self.hbar)
    }

    /// Wavenumber `sqrt(2 m K) / hbar` for kinetic energy `K >= 0`.
    pub fn wavenumber(&self, kinetic: f64) -> f64 {
        (2.0 * self.mass * kinetic).sqrt() / self.hbar
    }

    /// Classical speed `sqrt(2K/m)`.
    pub fn classical_speed(&self, kinetic: f64) -> f64 {
        (2.0 * kinetic / self.mass).sqrt()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::natural()
    }
}
