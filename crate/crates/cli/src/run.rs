//! The `run` subcommand: integrate a configured problem and write its
//! energy history, identity residuals, and field snapshots to a directory.
//!
//! The stepping loop is the library's own (same step-size policy, same
//! report cadence, same termination rule), with snapshot writes interleaved
//! at report times. Both prognostic fields are saved — `psi_NNNNNN.cnsf` and
//! `w_NNNNNN.cnsf`, numbered by step index — so any logged row can be
//! recomputed bit-for-bit from the pair saved beside it.

use crate::config::ConfigFile;
use crate::csvout::{write_energy_csv, write_residual_csv};
use crate::errors::CliError;
use crate::snapshot::write_snapshot;
use cns_core::diagnostics::{identity_residual_l2, identity_residual_weighted, report};
use cns_core::timestepper::{RunConfig, Stepper};
use cns_core::{build_grid, EnergyReport};
use std::path::Path;
use std::sync::Arc;

pub fn cmd_run(cfg: &ConfigFile, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let grid = Arc::new(build_grid(
        cfg.r0,
        cfg.r_outer,
        cfg.l3,
        cfg.nr_cells + 1,
        cfg.nz,
    )?);
    let run_cfg = RunConfig {
        nu: cfg.nu,
        time_step: cfg.time_step,
        t_end: cfg.t_end,
        preset: cfg.preset.clone(),
        linear_only: false,
        report_every: cfg.report_every,
    };
    run_cfg.validate()?;
    let stepper = Stepper::new(&grid);

    let mut state = stepper.initial_state(&run_cfg.preset)?;
    let mut reports: Vec<EnergyReport> = vec![report(&state)];
    let save = |state: &cns_core::SolverState| -> Result<(), CliError> {
        let tag = format!("{:06}", state.step_index);
        write_snapshot(&out_dir.join(format!("psi_{tag}.cnsf")), &state.psi, state.t)?;
        write_snapshot(&out_dir.join(format!("w_{tag}.cnsf")), &state.w, state.t)
    };
    save(&state)?;

    let every = run_cfg.report_every.max(1);
    let tiny = 1e-12 * run_cfg.t_end.max(1.0);
    while state.t < run_cfg.t_end - tiny {
        let dt = stepper.pick_dt(&run_cfg, &state, run_cfg.t_end - state.t);
        state = stepper.step(&state, dt, run_cfg.nu, run_cfg.linear_only)?;
        let done = state.t >= run_cfg.t_end - tiny;
        if state.step_index % every == 0 || done {
            reports.push(report(&state));
            save(&state)?;
        }
    }

    write_energy_csv(&out_dir.join("energy.csv"), &reports)?;
    let l2 = identity_residual_l2(&reports, run_cfg.nu);
    let weighted = identity_residual_weighted(&reports, run_cfg.nu);
    write_residual_csv(&out_dir.join("residuals.csv"), &l2, &weighted)?;

    let last = reports.last().unwrap();
    println!(
        "run complete: t = {:.6}, {} steps, {} report rows, E0 = {:.6e}",
        state.t,
        state.step_index,
        reports.len(),
        last.e0
    );
    println!("wrote {}", out_dir.join("energy.csv").display());
    println!("wrote {}", out_dir.join("residuals.csv").display());
    Ok(())
}
