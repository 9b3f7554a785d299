//! The `expand` subcommand: run the nested-domain expansion study and emit
//! its per-level norms and successive-difference table as CSV.
//!
//! The config's `[domain]` section fixes the base annulus, which must be of
//! the expansion form `[1/(2n), 2n]`; levels `n, 2n, 4n, ...` all reuse the
//! base level's physical radial spacing `(R0 - r0) / Nr` and axial grid, so
//! refinement in domain size is not confounded with refinement in mesh.

use crate::config::ConfigFile;
use crate::errors::CliError;
use cns_core::cutoff::expansion_study;
use cns_core::{Preset, TimeStep};
use std::io::Write;
use std::path::Path;

pub fn cmd_expand(cfg: &ConfigFile, levels: usize, out_dir: &Path) -> Result<(), CliError> {
    let n = cfg.base_n as f64;
    let (want_r0, want_r1) = (1.0 / (2.0 * n), 2.0 * n);
    if (cfg.r0 - want_r0).abs() > 1e-9 || (cfg.r_outer - want_r1).abs() > 1e-9 {
        return Err(CliError::Invalid(format!(
            "expansion study requires the domain [{want_r0}, {want_r1}] for base_n = {}, \
             got [{}, {}]",
            cfg.base_n, cfg.r0, cfg.r_outer
        )));
    }
    let dt = match cfg.time_step {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Adaptive { .. } => {
            return Err(CliError::Invalid(
                "expansion study needs a fixed \"dt\" so all levels share the same time grid"
                    .to_string(),
            ))
        }
    };
    let (amplitude, axial_mode) = match cfg.preset {
        Preset::GaussCos {
            amplitude,
            axial_mode,
        } => (amplitude, axial_mode),
        ref other => {
            return Err(CliError::Invalid(format!(
                "expansion study uses the localized \"gauss-cos\" preset, got \"{}\"",
                other.name()
            )))
        }
    };
    let dr = (cfg.r_outer - cfg.r0) / cfg.nr_cells as f64;

    let study = expansion_study(
        cfg.base_n, levels, dr, cfg.nz, cfg.l3, cfg.nu, dt, cfg.t_end, amplitude, axial_mode,
    )?;

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let levels_path = out_dir.join("levels.csv");
    let mut out = String::from("n,Nr,l2_u,h1_u\n");
    println!("level   n      Nr     ||u||_L2        |u|_H1");
    for l in &study.levels {
        out.push_str(&format!("{},{},{:e},{:e}\n", l.n, l.nr, l.l2_u, l.h1_u));
        println!(
            "      {:3}  {:5}  {:.6e}  {:.6e}",
            l.n, l.nr, l.l2_u, l.h1_u
        );
    }
    write_text(&levels_path, &out)?;

    let diffs_path = out_dir.join("expansion.csv");
    let mut out = String::from("n_coarse,n_fine,l2_diff,h1_diff\n");
    println!("pair          ||u_n - u_2n||_L2   |u_n - u_2n|_H1");
    for d in &study.diffs {
        out.push_str(&format!(
            "{},{},{:e},{:e}\n",
            d.n_coarse, d.n_fine, d.l2, d.h1
        ));
        println!(
            "  {:3} vs {:3}   {:.6e}        {:.6e}",
            d.n_coarse, d.n_fine, d.l2, d.h1
        );
    }
    write_text(&diffs_path, &out)?;

    println!("wrote {}", levels_path.display());
    println!("wrote {}", diffs_path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
