//! The `verify` subcommand: self-contained checks of the solver's advertised
//! guarantees, grouped into four suites. Every check prints the measured
//! value next to its threshold, so a passing run doubles as a calibration
//! report; the command exits 0 only when every check in the suite passes.

use crate::errors::CliError;
use cns_core::cutoff::expansion_study;
use cns_core::diagnostics::{
    check_linf_interpolation, check_observation_identities, ew_monotone, gronwall_bound,
    identity_residual_l2, identity_residual_weighted,
};
use cns_core::reconstruct::{energy_inequality_check, max_divergence_ratio, to_cartesian, BoxGrid};
use cns_core::timestepper::{RunConfig, Stepper, TimeStep};
use cns_core::{build_grid, CylGrid, Preset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Energy balance, monotonicity, Gronwall, and integral-inequality checks
    /// on a short nonlinear run.
    Identities,
    /// Grid-refinement orders of the observation identities and of the
    /// reconstructed velocity's divergence.
    Convergence,
    /// Nested-domain study: successive velocity differences must shrink.
    Expansion,
    /// Sup-norm interpolation inequality on random decaying profiles.
    Interpolation,
}

struct Check {
    name: &'static str,
    detail: String,
    ok: bool,
}

fn print_checks(suite: &str, checks: &[Check]) -> bool {
    let mut all_ok = true;
    for c in checks {
        let verdict = if c.ok { "pass" } else { "FAIL" };
        println!("[{verdict}] {}: {}", c.name, c.detail);
        all_ok &= c.ok;
    }
    let n_pass = checks.iter().filter(|c| c.ok).count();
    println!(
        "suite {suite}: {n_pass}/{} checks passed",
        checks.len()
    );
    all_ok
}

fn quartic() -> Preset {
    Preset::QuarticCos {
        amplitude: 1.0,
        axial_mode: 1,
    }
}

fn annulus(n: usize) -> Arc<CylGrid> {
    Arc::new(build_grid(1.0, 2.0, PI, n + 1, n).unwrap())
}

/// Run the verification suite; true iff every check passed.
pub fn cmd_verify(suite: Suite) -> Result<bool, CliError> {
    let ok = match suite {
        Suite::Identities => suite_identities()?,
        Suite::Convergence => suite_convergence()?,
        Suite::Expansion => suite_expansion()?,
        Suite::Interpolation => suite_interpolation()?,
    };
    Ok(ok)
}

fn suite_identities() -> Result<bool, CliError> {
    const NU: f64 = 1.0;
    const GATE: f64 = 5e-3;
    let grid = annulus(64);
    let dt = 2e-3;
    let stepper = Stepper::new(&grid);
    let cfg = RunConfig {
        nu: NU,
        time_step: TimeStep::Fixed(dt),
        t_end: 0.2,
        preset: quartic(),
        linear_only: false,
        report_every: 1,
    };
    let (_, reports) = stepper.run(&cfg)?;
    let h = grid.dr.max(grid.dz);
    let slack = 1.0 + 10.0 * (dt * dt + h * h);

    let max_l2 = identity_residual_l2(&reports, NU)
        .iter()
        .fold(0.0f64, |m, &(_, r)| m.max(r.abs()));
    let max_w = identity_residual_weighted(&reports, NU)
        .iter()
        .fold(0.0f64, |m, &(_, r)| m.max(r.abs()));
    let (growth, monotone) = ew_monotone(&reports, slack);
    let (gron_margin, gron_ok) = gronwall_bound(&reports);
    let budget = energy_inequality_check(&reports, NU, dt, h);
    let bad_rows = budget.iter().filter(|r| !r.ok).count();

    let checks = vec![
        Check {
            name: "energy balance dE0/dt = -2 nu D1",
            detail: format!("max normalized residual {max_l2:.3e} (gate {GATE:.0e})"),
            ok: max_l2 < GATE,
        },
        Check {
            name: "weighted balance d(Ew/2)/dt = -nu Dw",
            detail: format!("max normalized residual {max_w:.3e} (gate {GATE:.0e})"),
            ok: max_w < GATE,
        },
        Check {
            name: "Ew monotone decay",
            detail: format!("worst step growth {growth:.6} (slack {slack:.6})"),
            ok: monotone,
        },
        Check {
            name: "Gronwall bound on E1",
            detail: format!("worst E1/bound = {gron_margin:.4} (gate 1)"),
            ok: gron_ok,
        },
        Check {
            name: "integral energy inequality",
            detail: format!("{bad_rows} violating rows out of {}", budget.len()),
            ok: bad_rows == 0,
        },
    ];
    Ok(print_checks("identities", &checks))
}

fn suite_convergence() -> Result<bool, CliError> {
    const GATE: f64 = 1e-3;
    const ORDER_GATE: f64 = 1.8;
    let preset = quartic();

    let mut rels = Vec::new();
    for n in [64usize, 128] {
        let psi = preset.sample(&annulus(n));
        let obs = check_observation_identities(&psi);
        rels.push([obs.rel_grad(), obs.rel_lap()]);
    }
    let order_grad = (rels[0][0] / rels[1][0]).log2();
    let order_lap = (rels[0][1] / rels[1][1]).log2();

    let mut ratios = Vec::new();
    for (n, nbox) in [(96usize, 64usize), (192, 128)] {
        let grid = annulus(n);
        let psi = preset.sample(&grid);
        let bx = BoxGrid::covering(&grid, nbox, nbox)?;
        let u = to_cartesian(&psi, &bx)?;
        let (worst, scale) = max_divergence_ratio(&u, 3.0);
        ratios.push(worst / scale);
    }
    let div_order = (ratios[0] / ratios[1]).log2();

    let checks = vec![
        Check {
            name: "gradient observation identity",
            detail: format!(
                "rel {:.3e} at 128^2 (gate {GATE:.0e}), order {order_grad:.2} (gate {ORDER_GATE})",
                rels[1][0]
            ),
            ok: rels[1][0] <= GATE && order_grad >= ORDER_GATE,
        },
        Check {
            name: "Laplacian observation identity",
            detail: format!(
                "rel {:.3e} at 128^2 (gate {GATE:.0e}), order {order_lap:.2} (gate {ORDER_GATE})",
                rels[1][1]
            ),
            ok: rels[1][1] <= GATE && order_lap >= ORDER_GATE,
        },
        Check {
            name: "reconstructed velocity divergence",
            detail: format!(
                "max|div u|/max|u| = {:.3e} at 192 (gate {GATE:.0e}), order {div_order:.2} \
                 (gate {ORDER_GATE})",
                ratios[1]
            ),
            ok: ratios[1] <= GATE && div_order >= ORDER_GATE,
        },
    ];
    Ok(print_checks("convergence", &checks))
}

fn suite_expansion() -> Result<bool, CliError> {
    const SLACK: f64 = 1.1;
    let study = expansion_study(1, 3, 1.0 / 32.0, 64, PI, 0.5, 2e-3, 0.1, 0.05, 1)?;
    println!("level   n      Nr     ||u||_L2        |u|_H1");
    for l in &study.levels {
        println!(
            "      {:3}  {:5}  {:.6e}  {:.6e}",
            l.n, l.nr, l.l2_u, l.h1_u
        );
    }
    println!("pair          ||u_n - u_2n||_L2   |u_n - u_2n|_H1");
    for d in &study.diffs {
        println!(
            "  {:3} vs {:3}   {:.6e}        {:.6e}",
            d.n_coarse, d.n_fine, d.l2, d.h1
        );
    }
    let mut shrinking = true;
    for p in study.diffs.windows(2) {
        shrinking &= p[1].l2 < p[0].l2 * SLACK && p[1].h1 < p[0].h1 * SLACK;
    }
    let checks = vec![Check {
        name: "successive differences shrink",
        detail: format!(
            "L2 diffs {:?} (each next < {SLACK} x previous)",
            study.diffs.iter().map(|d| d.l2).collect::<Vec<_>>()
        ),
        ok: shrinking && study.diffs.len() >= 2,
    }];
    Ok(print_checks("expansion", &checks))
}

fn suite_interpolation() -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 257usize;
    let dr = 1.0 / (n as f64 - 1.0);
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let coef: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * dr;
                coef.iter()
                    .enumerate()
                    .map(|(j, a)| a * ((j + 1) as f64 * PI * x).sin())
                    .sum()
            })
            .collect();
        let chk = check_linf_interpolation(&f, dr)?;
        if !chk.ok {
            violations += 1;
        }
        worst = worst.max(chk.lhs / chk.rhs);
    }
    let checks = vec![Check {
        name: "sup-norm interpolation inequality",
        detail: format!("{violations} violations over 50 profiles, worst lhs/rhs = {worst:.4}"),
        ok: violations == 0,
    }];
    Ok(print_checks("interpolation", &checks))
}
