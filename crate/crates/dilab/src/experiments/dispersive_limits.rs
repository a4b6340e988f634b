//! Limits of the free flow on one long window: the dispersion defect
//! ‖(x/t)u − 2i∇u‖ falls like 1/t, the centered flux G(t) and the weighted
//! mass rate ∫|x||u|²/t both approach twice the homogeneous half norm, the
//! flux stays bounded by that norm throughout, and the flux is the exact
//! time derivative of the weighted mass.

use super::{sample_index, strictly_decreasing};
use crate::config::ExperimentConfig;
use crate::error::{DilabError, Result};
use crate::functionals::{
    centered_flux_g, phase_corrected_gradient_norm, weighted_mass, TimeSeries, Trajectory,
};
use crate::grid;
use crate::potential::PotentialFamily;
use crate::report::{Criterion, ExperimentReport};
use crate::spectral::{fourier_half_norm_sq, propagate_free};
use num_complex::Complex64;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let defect_ratio_tol = cfg.tolerance("defect_ratio")?;
    let defect_identity_tol = cfg.tolerance("defect_identity")?;
    let flux_gap_tol = cfg.tolerance("flux_gap")?;
    let rate_gap_tol = cfg.tolerance("rate_gap")?;
    let flux_bound_tol = cfg.tolerance("flux_bound_constant")?;
    let derivative_tol = cfg.tolerance("flux_derivative_gap")?;
    let odd_tol = cfg.tolerance("odd_symmetry")?;
    let tail_tol = cfg.tolerance("tail_mass")?;

    if cfg.potential != PotentialFamily::Zero {
        return Err(DilabError::Config(
            "this study measures the free flow; set potential.family = \"zero\"".into(),
        ));
    }
    let grid = cfg.grid()?;
    let f = cfg.initial_data(grid.clone())?;
    let horizon = cfg.sweep.horizon()?;
    let dt = cfg.sweep.dt()?;
    let steps = (horizon / dt).round() as usize;
    let traj = Trajectory::free(&f, 0.0, horizon, steps.max(2), tail_tol)?;

    let half_norm = fourier_half_norm_sq(&f)?;
    let target = 2.0 * half_norm;

    // Flux and weighted mass along the whole window.
    let flux: Vec<f64> = traj
        .fields
        .iter()
        .map(centered_flux_g)
        .collect::<Result<_>>()?;
    let wm: Vec<f64> = traj.fields.iter().map(weighted_mass).collect();

    // Defect at the probe times, through both routes: the definition with a
    // spectral gradient, and the phase-corrected gradient it factors into.
    let probes = &cfg.sweep.probe_times;
    if probes.len() < 2 || probes.windows(2).any(|w| w[1] <= w[0]) || probes[0] <= 0.0 {
        return Err(DilabError::Config(
            "sweep.probe_times must be positive and strictly increasing".into(),
        ));
    }
    let axis = grid.axis();
    let mut defect = Vec::new();
    let mut identity_gap = 0.0f64;
    for &t in probes {
        let j = sample_index(&traj.times, t)?;
        let u = &traj.fields[j];
        let du = &grid::gradient(u)?[0];
        let direct = (0..u.values.len())
            .map(|i| {
                let d = u.values[i] * (axis[i] / t) - Complex64::new(0.0, 2.0) * du.values[i];
                grid.weight_at(i) * d.norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        let corrected = 2.0 * phase_corrected_gradient_norm(u, t)?;
        identity_gap = identity_gap.max((direct - corrected).abs() / direct.max(1e-300));
        defect.push(direct);
    }
    let defect_trend = strictly_decreasing(&defect);
    let defect_ratio = defect.last().unwrap() / defect[0];

    // Limits at the end of the window.
    let flux_gap = (flux.last().unwrap() - target).abs() / target;
    let rate = wm.last().unwrap() / horizon;
    let rate_gap = (rate - target).abs() / target;

    // Uniform flux bound |G(t)| <= 2 ||f||^2, reported as the sup of the
    // ratio against the half norm.
    let flux_bound = flux
        .iter()
        .map(|g| g.abs() / half_norm)
        .fold(0.0f64, f64::max);

    // G = d/dt of the weighted mass: centered differences of the measured
    // series against the measured flux at every interior probe.
    let mut derivative_gap = 0.0f64;
    for &t in probes {
        let j = sample_index(&traj.times, t)?;
        if j == 0 || j + 1 == traj.times.len() {
            continue;
        }
        let slope = (wm[j + 1] - wm[j - 1]) / (traj.times[j + 1] - traj.times[j - 1]);
        derivative_gap = derivative_gap.max((slope - flux[j]).abs() / flux[j].abs());
    }

    // Time reversal sends G to its negative for real data.
    let t_back = probes[0];
    let u_back = propagate_free(&f, -t_back)?;
    let g_back = centered_flux_g(&u_back)?;
    let j_fwd = sample_index(&traj.times, t_back)?;
    let odd_gap = (g_back + flux[j_fwd]).abs() / flux[j_fwd].abs();

    let mut report = ExperimentReport::new(&cfg.experiment, cfg.echo());
    report.scalar("half_norm", half_norm);
    report.scalar("defect_ratio", defect_ratio);
    report.scalar("defect_identity_gap", identity_gap);
    report.scalar("flux_final", *flux.last().unwrap());
    report.scalar("flux_gap", flux_gap);
    report.scalar("convergence_metric", flux_gap);
    report.scalar("rate_gap", rate_gap);
    report.scalar("flux_bound_ratio", flux_bound);
    report.scalar("flux_derivative_gap", derivative_gap);
    report.scalar("odd_symmetry_gap", odd_gap);
    report.scalar("worst_tail", traj.worst_tail);

    report.criterion(Criterion::flag(
        "defect_trend",
        defect_ratio,
        1.0,
        defect_trend,
        "dispersion defect decreases along the probe ladder",
    ));
    report.criterion(Criterion::le(
        "defect_ratio",
        defect_ratio,
        defect_ratio_tol,
        "defect scales like 1/t across the probe span",
    ));
    report.criterion(Criterion::le(
        "defect_identity",
        identity_gap,
        defect_identity_tol,
        "defect equals twice the phase-corrected gradient norm",
    ));
    report.criterion(Criterion::le(
        "flux_limit",
        flux_gap,
        flux_gap_tol,
        "G at the window end within tolerances.flux_gap of twice the half norm",
    ));
    report.criterion(Criterion::le(
        "weighted_mass_rate",
        rate_gap,
        rate_gap_tol,
        "weighted mass per unit time within tolerances.rate_gap of the same limit",
    ));
    report.criterion(Criterion::le(
        "flux_bound",
        flux_bound,
        flux_bound_tol,
        "sup |G| / half norm under tolerances.flux_bound_constant",
    ));
    report.criterion(Criterion::le(
        "flux_derivative",
        derivative_gap,
        derivative_tol,
        "flux matches the centered time derivative of the weighted mass",
    ));
    report.criterion(Criterion::le(
        "odd_symmetry",
        odd_gap,
        odd_tol,
        "time reversal flips the sign of the flux for real data",
    ));
    report.criterion(Criterion::le(
        "tail_mass",
        traj.worst_tail,
        tail_tol,
        "worst trajectory tail fraction <= tolerances.tail_mass",
    ));

    report.push_series(TimeSeries::new("flux", "t", traj.times.clone(), flux)?);
    report.push_series(TimeSeries::new("weighted_mass", "t", traj.times.clone(), wm)?);
    report.push_series(TimeSeries::new("defect", "t", probes.clone(), defect)?);
    report.finalize();
    Ok(report)
}
