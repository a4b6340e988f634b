//! Windowed smoothing ratios (1/R)∫∫_{|x|<R}|∇u|² against the half norm of
//! the data: the sweep over R rises to a plateau just under the norm, the
//! three-dimensional composite with the (1/R³)-weighted mass obeys the same
//! scale, and the plateau-bump weights nest the sharp window between two
//! characteristic windows node-exactly.

use crate::config::ExperimentConfig;
use crate::error::{DilabError, Result};
use crate::functionals::{
    local_smoothing_ratio, local_smoothing_ratio_n3, SmoothingKind, TimeSeries, Trajectory,
};
use crate::grid::{self, Grid};
use crate::multiplier::{build_multiplier, MultiplierFamily};
use crate::report::{Criterion, ExperimentReport};
use crate::spectral::SpectralOperator;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let plateau_gap_tol = cfg.tolerance("plateau_gap")?;
    let bound_slack = cfg.tolerance("bound_slack")?;
    let composite_floor = cfg.tolerance("composite_floor")?;
    let composite_bound = cfg.tolerance("composite_bound")?;
    let sandwich_tol = cfg.tolerance("sandwich_slack")?;
    let tail_tol = cfg.tolerance("tail_mass")?;

    if cfg.grid.dimension < 4 {
        return Err(DilabError::Config(
            "configure dimension >= 4; the three-dimensional composite runs alongside it".into(),
        ));
    }
    let grid = cfg.grid()?;
    let op = SpectralOperator::assemble(grid.clone(), cfg.potential.clone())?;
    let f = cfg.initial_data(grid.clone())?;
    let horizon = cfg.sweep.horizon()?;
    let steps = cfg.sweep.step_count()?;
    let traj = Trajectory::exact(&op, &f, -horizon, horizon, steps, tail_tol)?;
    let target = op.h_power_norm_sq(&f, 0.5)?;

    let mut report = ExperimentReport::new(&cfg.experiment, cfg.echo());

    // Radius sweep of the normalized ratio. The supremum over R is what the
    // bound controls, so the plateau is the running maximum.
    let r_ladder = cfg.sweep.ladder("r")?;
    let mut ratios = Vec::new();
    for &radius in &r_ladder {
        let value = local_smoothing_ratio(&traj, radius, SmoothingKind::RadialDerivative)?;
        ratios.push(value / target);
    }
    let plateau = ratios.iter().cloned().fold(0.0f64, f64::max);
    let plateau_gap = (plateau - 1.0).abs();

    // Three-dimensional composite on a companion grid with the same layout.
    let grid3 = Grid::radial(3, cfg.grid.extent, cfg.grid.points)?;
    let op3 = SpectralOperator::assemble(grid3.clone(), cfg.potential.clone())?;
    let f3 = cfg.initial_data(grid3.clone())?;
    let traj3 = Trajectory::exact(&op3, &f3, -horizon, horizon, steps, tail_tol)?;
    let target3 = op3.h_power_norm_sq(&f3, 0.5)?;
    let mut composite = Vec::new();
    for &radius in &r_ladder {
        composite.push(local_smoothing_ratio_n3(&traj3, radius)? / target3);
    }
    let composite_plateau = composite.iter().cloned().fold(0.0f64, f64::max);

    // Sandwich: with ψ_R = R·ψ_k(x/R) the curvature weight ψ_R″ = h_k(·/R)/R
    // sits between the sharp windows χ_{r<R}/R and χ_{r<(k+1)R/k}/R at every
    // node, so the three time-integrated quantities must nest up to roundoff.
    let k_list = if cfg.sweep.k_list.is_empty() {
        return Err(DilabError::Config("sweep.k_list must not be empty".into()));
    } else {
        cfg.sweep.k_list.clone()
    };
    let mut worst_violation = 0.0f64;
    for &k in &k_list {
        for &radius in &r_ladder {
            let outer = (k as f64 + 1.0) / k as f64 * radius;
            if outer >= grid.extent {
                return Err(DilabError::Config(format!(
                    "sandwich outer window {outer} leaves the grid (extent {})",
                    grid.extent
                )));
            }
            let m = build_multiplier(
                MultiplierFamily::Rescaled {
                    base: Box::new(MultiplierFamily::BumpIntegrated { k }),
                    radius,
                },
                grid.clone(),
            )?;
            let middle = traj.trapezoid(|_, u| {
                let du = grid::radial_derivative(u)?;
                Ok((0..u.values.len())
                    .map(|i| u.grid.weight_at(i) * m.d2psi[i] * du.values[i].norm_sqr())
                    .sum())
            })? / target;
            let lower = local_smoothing_ratio(&traj, radius, SmoothingKind::RadialDerivative)?
                / target;
            // Same 1/R normalization for the outer window, hence the
            // (k+1)/k rescale of the ratio at the larger radius.
            let upper = local_smoothing_ratio(&traj, outer, SmoothingKind::RadialDerivative)?
                * (outer / radius)
                / target;
            worst_violation = worst_violation
                .max(lower - middle)
                .max(middle - upper);
        }
    }

    report.scalar("target", target);
    report.scalar("plateau", plateau);
    report.scalar("plateau_gap", plateau_gap);
    report.scalar("convergence_metric", plateau_gap);
    report.scalar("target_n3", target3);
    report.scalar("composite_plateau", composite_plateau);
    report.scalar("sandwich_worst_violation", worst_violation);
    report.scalar("worst_tail", traj.worst_tail.max(traj3.worst_tail));

    report.criterion(Criterion::le(
        "plateau_level",
        plateau_gap,
        plateau_gap_tol,
        "supremum of the normalized ratio sits within tolerances.plateau_gap of 1",
    ));
    report.criterion(Criterion::le(
        "uniform_bound",
        plateau,
        1.0 + bound_slack,
        "every windowed ratio stays under the half norm, slack tolerances.bound_slack",
    ));
    report.criterion(Criterion::ge(
        "composite_floor",
        composite_plateau,
        composite_floor,
        "n=3 composite plateau reaches tolerances.composite_floor of its half norm",
    ));
    report.criterion(Criterion::le(
        "composite_bound",
        composite_plateau,
        composite_bound,
        "n=3 composite plateau stays under tolerances.composite_bound",
    ));
    report.criterion(Criterion::le(
        "sandwich",
        worst_violation,
        sandwich_tol,
        "bump-weighted window nests between the sharp windows, slack tolerances.sandwich_slack",
    ));
    report.criterion(Criterion::le(
        "tail_mass",
        traj.worst_tail.max(traj3.worst_tail),
        tail_tol,
        "worst trajectory tail fraction <= tolerances.tail_mass",
    ));

    report.push_series(TimeSeries::new(
        "smoothing_ratio",
        "R",
        r_ladder.clone(),
        ratios,
    )?);
    report.push_series(TimeSeries::new("composite_ratio", "R", r_ladder, composite)?);
    report.finalize();
    Ok(report)
}
