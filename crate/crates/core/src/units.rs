//! Unit conventions.
//!
//! Lengths are in µm, pressures in mmHg, viscosities in cP and volumetric
//! flows in µm³/s. Poiseuille resistance `128 µ L / (π D⁴)` evaluated with
//! those inputs has units of cP·µm⁻³; [`CP_PER_UM3_TO_MMHG_S_PER_UM3`] turns it
//! into mmHg·s·µm⁻³ so that `ΔP = R Q` holds directly in (mmHg, µm³/s).

/// Pascals per mmHg (conventional millimetre of mercury).
pub const PA_PER_MMHG: f64 = 133.322_387_415;

/// cP·µm⁻³ → mmHg·s·µm⁻³.
///
/// 1 cP·µm⁻³ = 1e-3 Pa·s · 1e18 m⁻³ = 1e15 Pa·s·m⁻³, and a flow of
/// 1 µm³/s is 1e-18 m³/s, so the pressure drop is 1e-3 Pa per unit product.
pub const CP_PER_UM3_TO_MMHG_S_PER_UM3: f64 = 1e-3 / PA_PER_MMHG;

/// µm⁻¹ per m⁻¹, used for surface-to-volume ratios.
pub const UM_INV_PER_M_INV: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_constant_reproduces_poiseuille_in_si() {
        // One tube evaluated entirely in SI units.
        let mu_pa_s = 3e-3;
        let length_m = 50e-6;
        let diameter_m: f64 = 10e-6;
        let r_si = 128.0 * mu_pa_s * length_m / (std::f64::consts::PI * diameter_m.powi(4));
        let q_m3_s = 2.5e-13;
        let dp_mmhg_si = r_si * q_m3_s / PA_PER_MMHG;

        // Same tube in workbench units.
        let r_num = 128.0 * 3.0 * 50.0 / (std::f64::consts::PI * 10f64.powi(4));
        let q_um3_s = q_m3_s * 1e18;
        let dp_mmhg = r_num * CP_PER_UM3_TO_MMHG_S_PER_UM3 * q_um3_s;

        assert!((dp_mmhg - dp_mmhg_si).abs() <= 1e-12 * dp_mmhg_si.abs());
    }
}
