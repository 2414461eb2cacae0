//! Physical constants in the nm / eV system used throughout the crate.
//!
//! Energies and angular frequencies are both expressed in eV (ħ = 1), lengths
//! in nm, dipole moments in e·nm.

/// ħc in eV·nm.
pub const HBAR_C: f64 = 197.326_980_4;

/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_564_3e-3;

/// Vacuum wavenumber (nm⁻¹) of light with photon energy `omega` (eV).
pub fn wavenumber(omega: f64) -> f64 {
    omega / HBAR_C
}

/// Spontaneous decay rate (eV) of a two-level emitter with transition energy
/// `omega` (eV) and dipole `dipole` (e·nm) embedded in a homogeneous host of
/// permittivity `eps_d`.
pub fn free_space_rate(omega: f64, dipole: f64, eps_d: f64) -> f64 {
    4.0 / 3.0 * FINE_STRUCTURE * omega.powi(3) * dipole * dipole * eps_d.sqrt() / (HBAR_C * HBAR_C)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_rate_scale() {
        // 1 e·nm at 2.77 eV decays on the ns scale
        let rate = free_space_rate(2.77, 1.0, 1.0);
        let lifetime_ns = 6.582_119_569e-16 / rate * 1e9;
        assert!(lifetime_ns > 0.05 && lifetime_ns < 1.0, "{lifetime_ns}");
    }
}
