//! Conservation drift over long step counts. The eigenbasis propagator
//! composes unimodular phases, so mass, the energy form, and the half norm
//! must hold to roundoff across ten thousand steps; the split-step
//! propagator is unitary per step and must hold mass nearly as tightly.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::functionals::TimeSeries;
use crate::report::{Criterion, ExperimentReport};
use crate::spectral::{propagate_splitstep, SpectralOperator};
use num_complex::Complex64;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let exact_tol = cfg.tolerance("exact_mass_drift")?;
    let split_tol = cfg.tolerance("splitstep_mass_drift")?;
    let energy_tol = cfg.tolerance("energy_drift")?;
    let half_tol = cfg.tolerance("half_norm_drift")?;

    let grid = cfg.grid()?;
    let op = SpectralOperator::assemble(grid.clone(), cfg.potential.clone())?;
    let f = cfg.initial_data(grid)?;
    let horizon = cfg.sweep.horizon()?;
    let steps = cfg.sweep.step_count()?;
    let dt = horizon / steps as f64;

    let mass0 = f.mass();
    let energy0 = op.energy_form(&f)?;
    let half0 = op.h_power_norm_sq(&f, 0.5)?;

    // Exact route: multiply the eigenphases step by step and synthesize at
    // checkpoints, so the drift is observed along the run rather than only
    // at its end.
    let checkpoints = 10usize.min(steps);
    let chunk = steps / checkpoints;
    let phases = op.phase_factors(dt);
    let mut coeffs = op.decompose(&f)?;
    let mut axis = Vec::new();
    let mut mass_series = Vec::new();
    let mut exact_drift = 0.0f64;
    let mut energy_drift = 0.0f64;
    let mut half_drift = 0.0f64;
    let mut done = 0usize;
    for c in 0..checkpoints {
        let this_chunk = if c + 1 == checkpoints { steps - done } else { chunk };
        for _ in 0..this_chunk {
            for (v, p) in coeffs.iter_mut().zip(&phases) {
                *v *= p;
            }
        }
        done += this_chunk;
        let u = op.synthesize(&coeffs, f.label.clone())?;
        let mass = u.mass();
        axis.push(done as f64 * dt);
        mass_series.push(mass);
        exact_drift = exact_drift.max((mass - mass0).abs() / mass0);
        energy_drift = energy_drift.max((op.energy_form(&u)? - energy0).abs() / energy0);
        half_drift = half_drift.max((op.h_power_norm_sq(&u, 0.5)? - half0).abs() / half0);
    }

    // Split-step route: the literal loop of Fourier steps.
    let split_final = propagate_splitstep(&f, &op.potential, horizon, steps)?;
    let split_drift = (split_final.mass() - mass0).abs() / mass0;

    // Phase-accuracy gauge (not a conservation statement): distance between
    // the two propagators at the final time.
    let exact_final = op.synthesize(&coeffs, f.label.clone())?;
    let split_error = {
        let mut acc = 0.0;
        for i in 0..exact_final.values.len() {
            let d: Complex64 = exact_final.values[i] - split_final.values[i];
            acc += exact_final.grid.weight_at(i) * d.norm_sqr();
        }
        acc.sqrt()
    };

    let mut report = ExperimentReport::new(&cfg.experiment, cfg.echo());
    report.scalar("mass_initial", mass0);
    report.scalar("exact_mass_drift", exact_drift);
    report.scalar("convergence_metric", split_error);
    report.scalar("energy_drift", energy_drift);
    report.scalar("half_norm_drift", half_drift);
    report.scalar("splitstep_mass_drift", split_drift);
    report.scalar("splitstep_error", split_error);
    report.scalar("steps", steps as f64);
    report.scalar("final_tail", exact_final.tail_mass_fraction(0.1));

    report.criterion(Criterion::le(
        "exact_mass_drift",
        exact_drift,
        exact_tol,
        "eigenbasis mass drift <= tolerances.exact_mass_drift over all checkpoints",
    ));
    report.criterion(Criterion::le(
        "energy_drift",
        energy_drift,
        energy_tol,
        "energy form drift <= tolerances.energy_drift over all checkpoints",
    ));
    report.criterion(Criterion::le(
        "half_norm_drift",
        half_drift,
        half_tol,
        "perturbed half-norm drift <= tolerances.half_norm_drift over all checkpoints",
    ));
    report.criterion(Criterion::le(
        "splitstep_mass_drift",
        split_drift,
        split_tol,
        "split-step mass drift <= tolerances.splitstep_mass_drift after the full run",
    ));

    report.push_series(TimeSeries::new("checkpoint_mass", "t", axis, mass_series)?);
    report.finalize();
    Ok(report)
}
