//! Named verification studies.
//!
//! Each study binds propagators, multipliers, and functionals into one
//! reproducible report. Studies are pure functions of the config: reruns
//! serialize bit-identically, and every pass/fail verdict cites a bound
//! from the config's tolerance table.

use crate::config::ExperimentConfig;
use crate::error::{DilabError, Result};
use crate::functionals::Trajectory;
use crate::grid::ComplexField;
use crate::multiplier::{hessian_form, Multiplier};
use crate::potential::Potential;
use crate::report::ExperimentReport;
use rayon::prelude::*;

mod bilinear_survey;
mod dispersive_limits;
mod finite_t_identity;
mod local_smoothing;
mod morawetz;
mod pseudoconformal;
mod rage;
mod reversibility;
mod scattering_relation;
mod unitarity;
mod vai_limit;

pub struct StudyEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub run: fn(&ExperimentConfig) -> Result<ExperimentReport>,
}

/// Every runnable study, alphabetical by name.
pub fn registry() -> &'static [StudyEntry] {
    &[
        StudyEntry {
            name: "bilinear_survey",
            description: "seeded survey of the radial bilinear form ratio over band-limited fields",
            run: bilinear_survey::run,
        },
        StudyEntry {
            name: "dispersive_limits",
            description: "dispersion defect, flux, and weighted-mass limits of the free flow",
            run: dispersive_limits::run,
        },
        StudyEntry {
            name: "finite_t_identity",
            description: "finite-window multiplier identity with its boundary flux balance",
            run: finite_t_identity::run,
        },
        StudyEntry {
            name: "local_smoothing",
            description: "windowed smoothing ratios, their plateau, and the bump sandwich bounds",
            run: local_smoothing::run,
        },
        StudyEntry {
            name: "morawetz",
            description: "space-time identity for the |x| weight via vanishing regularization",
            run: morawetz::run,
        },
        StudyEntry {
            name: "pseudoconformal",
            description: "pseudoconformal conservation ledger with a free control run",
            run: pseudoconformal::run,
        },
        StudyEntry {
            name: "rage",
            description: "time-averaged and pointwise localized decay trends",
            run: rage::run,
        },
        StudyEntry {
            name: "reversibility",
            description: "exact recovery of localized data against the generic decay backdrop",
            run: reversibility::run,
        },
        StudyEntry {
            name: "scattering",
            description: "Møller construction and the half-norm scattering identity",
            run: scattering_relation::run,
        },
        StudyEntry {
            name: "unitarity",
            description: "charge, energy, and half-norm drift over long step counts",
            run: unitarity::run,
        },
        StudyEntry {
            name: "vai_limit",
            description: "strip identity limit toward the slope-weighted half norm",
            run: vai_limit::run,
        },
    ]
}

pub fn lookup(name: &str) -> Result<&'static StudyEntry> {
    registry().iter().find(|e| e.name == name).ok_or_else(|| {
        DilabError::Config(format!(
            "unknown experiment '{name}'; run list-experiments for the registry"
        ))
    })
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    (lookup(&cfg.experiment)?.run)(cfg)
}

/// Relative gap with the degenerate-input floor in the denominator.
pub(crate) fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-14)
}

/// The space integrand of the strip identity at one time:
/// ∫ [∇ūD²ψ∇u − ¼Δ²ψ|u|² − ½∂_{|x|}V ∂_{|x|}ψ |u|²] dx.
pub(crate) fn identity_integrand(
    u: &ComplexField,
    m: &Multiplier,
    pot: Option<&Potential>,
) -> Result<f64> {
    let hess = hessian_form(m, u)?;
    let mut acc = 0.0;
    for i in 0..u.values.len() {
        let density = u.values[i].norm_sqr();
        let mut local = hess[i] - 0.25 * m.bilaplacian[i] * density;
        if let Some(p) = pot {
            local -= 0.5 * p.dv[i] * m.dpsi[i] * density;
        }
        acc += u.grid.weight_at(i) * local;
    }
    Ok(acc)
}

/// `identity_integrand` at every trajectory sample.
pub(crate) fn strip_series(
    traj: &Trajectory,
    m: &Multiplier,
    pot: Option<&Potential>,
) -> Result<Vec<f64>> {
    traj.fields
        .par_iter()
        .map(|u| identity_integrand(u, m, pot))
        .collect()
}

/// Cumulative trapezoid rule over a uniform axis, anchored at 0 for the
/// first sample.
pub(crate) fn cumtrapz(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..values.len() {
        acc += 0.5 * (times[j] - times[j - 1]) * (values[j] + values[j - 1]);
        out.push(acc);
    }
    out
}

/// Index of the sample at time `t`, which must lie on the axis.
pub(crate) fn sample_index(times: &[f64], t: f64) -> Result<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| {
            DilabError::Config(format!(
                "time {t} does not lie on the trajectory axis (step mismatch)"
            ))
        })
}

pub(crate) fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// ψ ↦ ψ + c leaves every derivative array untouched; the identity side
/// must not read ψ itself, so results must match bit-for-bit.
pub(crate) fn offset_multiplier(m: &Multiplier, c: f64) -> Multiplier {
    let mut out = m.clone();
    for v in &mut out.psi {
        *v += c;
    }
    out
}

/// λ·ψ scales the whole jet and the slope at infinity.
pub(crate) fn scaled_multiplier(m: &Multiplier, lambda: f64) -> Multiplier {
    let mut out = m.clone();
    for arr in [
        &mut out.psi,
        &mut out.dpsi,
        &mut out.d2psi,
        &mut out.d3psi,
        &mut out.d4psi,
        &mut out.bilaplacian,
    ] {
        for v in arr.iter_mut() {
            *v *= lambda;
        }
    }
    out.psi_prime_inf *= lambda;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_sorted_and_unique() {
        let names: Vec<&str> = registry().iter().map(|e| e.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(names, sorted);
        assert_eq!(names.len(), 11);
        assert!(lookup("vai_limit").is_ok());
        assert!(lookup("nonsense").is_err());
    }

    #[test]
    fn cumulative_trapezoid_matches_closed_form() {
        let times: Vec<f64> = (0..=10).map(|j| j as f64 * 0.5).collect();
        let values: Vec<f64> = times.iter().map(|&t| 2.0 * t).collect();
        let c = cumtrapz(&times, &values);
        // ∫2t dt = t², and the trapezoid rule is exact on linear integrands.
        for (j, &t) in times.iter().enumerate() {
            assert!((c[j] - t * t).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_index_requires_axis_alignment() {
        let times = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
        assert_eq!(sample_index(&times, 0.5).unwrap(), 3);
        assert_eq!(sample_index(&times, -1.0).unwrap(), 0);
        assert!(sample_index(&times, 0.3).is_err());
    }

    #[test]
    fn trend_helper() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
        assert!(strictly_decreasing(&[1.0]));
    }
}
