//! Physical constants in the crate's unit convention (rad/s, mT, nm).

use crate::units::TWO_PI;

const MU0_OVER_4PI: f64 = 1e-7;
const HBAR: f64 = 1.054_571_817e-34;
const K_B: f64 = 1.380_649e-23;
const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// NV zero-field splitting, rad/s.
    pub zero_field_splitting: f64,
    /// Electron gyromagnetic ratio, rad/s per mT.
    pub gamma_e: f64,
    /// Bohr magneton divided by hbar, rad/s per mT.
    pub mu_b: f64,
    /// mu0 gamma_e^2 hbar / 4 pi, in rad/s nm^3.
    pub dipolar_prefactor: f64,
    pub k_b: f64,
    pub hbar: f64,
    /// 14N nuclear gyromagnetic ratio, rad/s per mT.
    pub gamma_n14: f64,
    /// 15N nuclear gyromagnetic ratio, rad/s per mT.
    pub gamma_n15: f64,
}

impl PhysicalConstants {
    pub const fn canonical() -> Self {
        let gamma_e = TWO_PI * 28.0e6;
        // gamma_e per tesla, SI volume converted from m^3 to nm^3.
        let gamma_e_si = gamma_e * 1e3;
        Self {
            zero_field_splitting: TWO_PI * 2.87e9,
            gamma_e,
            mu_b: BOHR_MAGNETON / HBAR * 1e-3,
            dipolar_prefactor: MU0_OVER_4PI * gamma_e_si * gamma_e_si * HBAR * 1e27,
            k_b: K_B,
            hbar: HBAR,
            gamma_n14: TWO_PI * 3.077e3,
            gamma_n15: -TWO_PI * 4.316e3,
        }
    }

    /// Mean thermal occupation of the bath driving label-electron transitions.
    pub fn thermal_occupation(&self, bz_mt: f64, temperature_k: f64) -> f64 {
        let x = self.hbar * self.gamma_e * bz_mt / (self.k_b * temperature_k);
        1.0 / x.exp_m1()
    }

    /// Label electronic relaxation time 1 / [(2 nbar + 1) Gamma].
    pub fn label_t1(&self, gamma: f64, bz_mt: f64, temperature_k: f64) -> f64 {
        let nbar = self.thermal_occupation(bz_mt, temperature_k);
        1.0 / ((2.0 * nbar + 1.0) * gamma)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::canonical()
    }
}

/// The single instance shared by a run unless a configuration overrides it.
pub const CONSTANTS: PhysicalConstants = PhysicalConstants::canonical();

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units;

    #[test]
    fn dipolar_prefactor_is_52_mhz_nm3() {
        let p = units::to_mhz(CONSTANTS.dipolar_prefactor);
        assert!((p - 52.0).abs() / 52.0 < 0.01, "prefactor {p} MHz nm^3");
    }

    #[test]
    fn bohr_magneton_in_mhz_per_mt() {
        assert!((units::to_mhz(CONSTANTS.mu_b) - 13.996).abs() < 1e-3);
    }

    #[test]
    fn label_t1_is_four_microseconds() {
        let t1 = CONSTANTS.label_t1(units::hz(2.68), 30.0, 300.0);
        assert!((t1 - 4e-6).abs() / 4e-6 < 0.05, "T1 = {t1}");
    }
}
