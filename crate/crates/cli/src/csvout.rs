//! CSV emitters for energy histories and identity residuals.
//!
//! Values are printed with `{:e}`, Rust's shortest round-trip scientific
//! format: parsing a printed value back with `str::parse::<f64>` recovers the
//! original bits exactly. The determinism and snapshot-consistency tests rely
//! on this, so the format is load-bearing, not cosmetic.

use crate::errors::CliError;
use cns_core::EnergyReport;
use std::io::Write;
use std::path::Path;

pub const ENERGY_HEADER: &str = "t,E0,D1,Ew,Dw,E1,D2,E3,linf_dr_dz_psi";
pub const RESIDUAL_HEADER: &str = "t_mid,rho_l2,rho_weighted";

pub fn energy_row(r: &EnergyReport) -> String {
    format!(
        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
        r.t, r.e0, r.d1, r.ew, r.dw, r.e1, r.d2, r.e3, r.linf_dr_dz_psi
    )
}

pub fn write_energy_csv(path: &Path, reports: &[EnergyReport]) -> Result<(), CliError> {
    let mut out = String::with_capacity(64 * (reports.len() + 1));
    out.push_str(ENERGY_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&energy_row(r));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Midpoint-time residuals of the two energy identities, one row per
/// consecutive report pair.
pub fn write_residual_csv(
    path: &Path,
    l2: &[(f64, f64)],
    weighted: &[(f64, f64)],
) -> Result<(), CliError> {
    let mut out = String::with_capacity(48 * (l2.len() + 1));
    out.push_str(RESIDUAL_HEADER);
    out.push('\n');
    for (&(t_mid, rho_l2), &(_, rho_w)) in l2.iter().zip(weighted) {
        out.push_str(&format!("{t_mid:e},{rho_l2:e},{rho_w:e}\n"));
    }
    write_atomic(path, out.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_values_parse_back_to_identical_bits() {
        let r = EnergyReport {
            t: 0.1 + 0.2, // deliberately non-representable sum
            e0: 7.440419377831706,
            d1: 303.6379663338287,
            ew: 146.31942869817223,
            dw: 5973.691685452605,
            e1: 303.6379663338287,
            d2: 12427.76723479647,
            e3: 514119.4834293417,
            linf_dr_dz_psi: f64::MIN_POSITIVE, // subnormal-adjacent extreme
        };
        let row = energy_row(&r);
        let vals: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        let orig = [r.t, r.e0, r.d1, r.ew, r.dw, r.e1, r.d2, r.e3, r.linf_dr_dz_psi];
        for (a, b) in vals.iter().zip(orig) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
