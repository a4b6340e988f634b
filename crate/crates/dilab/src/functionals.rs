//! Scalar functionals of states and trajectories: virial fluxes, weighted
//! masses, local-smoothing ratios, the pseudoconformal ledger, the radial
//! bilinear form, and time-averaged localized observables.
//!
//! Space integrals use the grid quadrature; time integrals are trapezoid
//! sums over a trajectory's uniform time axis, truncated at the trajectory
//! window. Limit statements are therefore always reported as trends over
//! growing windows, never as single numbers.

use crate::error::{DilabError, Result};
use crate::grid::{self, ComplexField, Grid, Region};
use crate::multiplier::Multiplier;
use crate::potential::Potential;
use crate::spectral::{propagate_free, SpectralOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A named scalar series on a trajectory's time axis (or any other axis:
/// radii, window lengths, smoothing parameters).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    /// What the axis means: "t", "T", "R", "eps", "N".
    pub units: String,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, units: impl Into<String>, axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if axis.len() != values.len() {
            return Err(DilabError::InvalidParameter(
                "series axis and values must have equal length".into(),
            ));
        }
        Ok(TimeSeries {
            name: name.into(),
            axis,
            values,
            units: units.into(),
        })
    }
}

/// A sampled solution path: states at uniformly spaced times on one grid.
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub times: Vec<f64>,
    pub fields: Vec<ComplexField>,
    /// Which propagator produced it.
    pub provenance: String,
    /// Worst tail-mass fraction (outer 10% of the domain) seen along the path.
    pub worst_tail: f64,
}

impl Trajectory {
    fn from_parts(
        grid: Arc<Grid>,
        times: Vec<f64>,
        fields: Vec<ComplexField>,
        provenance: &str,
        tail_threshold: f64,
    ) -> Result<Self> {
        let mut worst = 0.0f64;
        for (f, &t) in fields.iter().zip(&times) {
            let tail = f.tail_mass_fraction(0.1);
            if tail > tail_threshold {
                return Err(DilabError::TailMass {
                    measured: tail,
                    threshold: tail_threshold,
                    context: format!("{provenance} trajectory at t = {t}"),
                });
            }
            worst = worst.max(tail);
        }
        Ok(Trajectory {
            grid,
            times,
            fields,
            provenance: provenance.into(),
            worst_tail: worst,
        })
    }

    fn time_axis(t0: f64, t1: f64, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 || !(t1 > t0) {
            return Err(DilabError::InvalidParameter(
                "trajectory needs t1 > t0 and at least one step".into(),
            ));
        }
        let dt = (t1 - t0) / steps as f64;
        Ok((0..=steps).map(|j| t0 + dt * j as f64).collect())
    }

    /// Sample the exact eigenbasis propagator at steps+1 uniform times.
    pub fn exact(
        op: &SpectralOperator,
        f: &ComplexField,
        t0: f64,
        t1: f64,
        steps: usize,
        tail_threshold: f64,
    ) -> Result<Self> {
        let times = Self::time_axis(t0, t1, steps)?;
        let coeffs = op.decompose(f)?;
        let fields = times
            .par_iter()
            .map(|&t| {
                let phased: Vec<Complex64> = coeffs
                    .iter()
                    .zip(op.eigenvalues())
                    .map(|(c, &lam)| c * Complex64::from_polar(1.0, lam * t))
                    .collect();
                op.synthesize(&phased, f.label.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(op.grid.clone(), times, fields, "exact", tail_threshold)
    }

    /// Sample the free Fourier propagator at steps+1 uniform times.
    pub fn free(
        f: &ComplexField,
        t0: f64,
        t1: f64,
        steps: usize,
        tail_threshold: f64,
    ) -> Result<Self> {
        let times = Self::time_axis(t0, t1, steps)?;
        let fields = times
            .par_iter()
            .map(|&t| propagate_free(f, t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(f.grid.clone(), times, fields, "free", tail_threshold)
    }

    /// The prefix spanning the first `keep` samples (at least two).
    pub fn truncated(&self, keep: usize) -> Result<Trajectory> {
        if keep < 2 || keep > self.times.len() {
            return Err(DilabError::InvalidParameter(format!(
                "cannot keep {keep} of {} samples",
                self.times.len()
            )));
        }
        Ok(Trajectory {
            grid: self.grid.clone(),
            times: self.times[..keep].to_vec(),
            fields: self.fields[..keep].to_vec(),
            provenance: self.provenance.clone(),
            worst_tail: self.worst_tail,
        })
    }

    /// Trapezoid integral over the trajectory window of a per-state value.
    pub fn trapezoid(&self, mut value: impl FnMut(f64, &ComplexField) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (&t, u) in self.times.iter().zip(&self.fields) {
            let v = value(t, u)?;
            if let Some((tp, vp)) = prev {
                acc += 0.5 * (t - tp) * (v + vp);
            }
            prev = Some((t, v));
        }
        Ok(acc)
    }

    /// Per-sample values as a named series.
    pub fn series(
        &self,
        name: impl Into<String>,
        mut value: impl FnMut(f64, &ComplexField) -> Result<f64>,
    ) -> Result<TimeSeries> {
        let mut vals = Vec::with_capacity(self.times.len());
        for (&t, u) in self.times.iter().zip(&self.fields) {
            vals.push(value(t, u)?);
        }
        TimeSeries::new(name, "t", self.times.clone(), vals)
    }
}

/// Im ∫ ū ∇u·∇ψ dx = Im ∫ ū ∂_{|x|}u ψ′ dx.
pub fn virial_flux(u: &ComplexField, m: &Multiplier) -> Result<f64> {
    if *m.grid != *u.grid {
        return Err(DilabError::GridMismatch(
            "multiplier and field live on different grids".into(),
        ));
    }
    let du = grid::radial_derivative(u)?;
    let mut acc = 0.0;
    for i in 0..u.values.len() {
        acc += u.grid.weight_at(i) * (u.values[i].conj() * du.values[i]).im * m.dpsi[i];
    }
    Ok(acc)
}

/// G(t) = −2 Im ∫ ū ∇u·x/|x| dx, the centered flux (ψ′ ≡ 1).
pub fn centered_flux_g(u: &ComplexField) -> Result<f64> {
    let du = grid::radial_derivative(u)?;
    let mut acc = 0.0;
    for i in 0..u.values.len() {
        acc += u.grid.weight_at(i) * (u.values[i].conj() * du.values[i]).im;
    }
    Ok(-2.0 * acc)
}

/// ∫ |x| |u|² dx.
pub fn weighted_mass(u: &ComplexField) -> f64 {
    (0..u.values.len())
        .map(|i| u.grid.weight_at(i) * u.grid.radius_at(i) * u.values[i].norm_sqr())
        .sum()
}

/// ‖f‖²_{Σ^{1/2}} = ‖f‖²_{Ḣ^{1/2}_V} + ∫|x||f|².
pub fn sigma_half_norm_sq(u: &ComplexField, op: &SpectralOperator) -> Result<f64> {
    Ok(op.h_power_norm_sq(u, 0.5)? + weighted_mass(u))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothingKind {
    FullGradient,
    RadialDerivative,
}

/// (1/R) ∫dt ∫_{|x|<R} |∇u|² (or |∂_{|x|}u|²) dx over the trajectory window.
pub fn local_smoothing_ratio(traj: &Trajectory, radius: f64, kind: SmoothingKind) -> Result<f64> {
    let integral = traj.trapezoid(|_, u| {
        let du = grid::radial_derivative(u)?;
        let mut inner = du.grid.integrate_abs2(&du.values, Region::Ball(radius))?;
        if kind == SmoothingKind::FullGradient {
            let (tau, _) = grid::angular_gradient_sq(u)?;
            for i in 0..u.values.len() {
                if u.grid.radius_at(i) < radius {
                    inner += u.grid.weight_at(i) * tau[i];
                }
            }
        }
        Ok(inner)
    })?;
    Ok(integral / radius)
}

/// The three-dimensional composite: (1/R)∫∫_{|x|<R}(|∇u|² + |u|²/R²).
pub fn local_smoothing_ratio_n3(traj: &Trajectory, radius: f64) -> Result<f64> {
    let grad = local_smoothing_ratio(traj, radius, SmoothingKind::FullGradient)?;
    let mass = traj.trapezoid(|_, u| u.grid.integrate_abs2(&u.values, Region::Ball(radius)))?;
    Ok(grad + mass / (radius * radius * radius))
}

/// Everything the pseudoconformal conservation law produces on one run:
/// both sides of ‖xu − 2it∇u‖² + 4t²∫V|u|² = ∫|x|²|f|² + ∫₀ᵗ s·θ(s) ds,
/// the source θ(s) = 8∫(V + ½|x|∂_{|x|}V)|u|², the pointwise relative
/// residual, and the dispersion defect ‖(x/t)u − 2i∇u‖ for t > 0.
pub struct PseudoconformalLedger {
    pub lhs: TimeSeries,
    pub rhs: TimeSeries,
    pub residual: TimeSeries,
    pub theta: TimeSeries,
    pub defect: TimeSeries,
}

pub fn pseudoconformal_ledger(traj: &Trajectory, pot: &Potential) -> Result<PseudoconformalLedger> {
    if *pot.grid != *traj.grid {
        return Err(DilabError::GridMismatch(
            "potential sampled on a different grid".into(),
        ));
    }
    if traj.times[0] != 0.0 {
        return Err(DilabError::InvalidParameter(
            "the pseudoconformal ledger needs a trajectory starting at t = 0".into(),
        ));
    }
    let g = &traj.grid;
    let n = g.node_count();
    let mut lhs = Vec::with_capacity(traj.times.len());
    let mut theta = Vec::with_capacity(traj.times.len());
    let mut defect_axis = Vec::new();
    let mut defect_vals = Vec::new();
    for (&t, u) in traj.times.iter().zip(&traj.fields) {
        let du = grid::radial_derivative(u)?;
        let mut stretched = 0.0;
        let mut vmass = 0.0;
        let mut th = 0.0;
        let mut defect = 0.0;
        for i in 0..n {
            let w = g.weight_at(i);
            let r = g.radius_at(i);
            let a2 = u.values[i].norm_sqr();
            // |x|u − 2it∂_{|x|}u captures the full vector |x|·x̂u − 2it∇u on
            // radial profiles and on the 1D axis alike.
            stretched += w * (r * u.values[i] - Complex64::new(0.0, 2.0 * t) * du.values[i]).norm_sqr();
            vmass += w * pot.v[i] * a2;
            th += 8.0 * w * (pot.v[i] + 0.5 * r * pot.dv[i]) * a2;
            if t > 0.0 {
                defect += w
                    * ((r / t) * u.values[i] - Complex64::new(0.0, 2.0) * du.values[i]).norm_sqr();
            }
        }
        lhs.push(stretched + 4.0 * t * t * vmass);
        theta.push(th);
        if t > 0.0 {
            defect_axis.push(t);
            defect_vals.push(defect.sqrt());
        }
    }
    // RHS: initial second moment plus the cumulative trapezoid of s·θ(s).
    // Evaluated with the same expression shape as the t = 0 stretched term so
    // the two sides agree bit-exactly at the anchor.
    let first = &traj.fields[0];
    let second_moment: f64 = (0..n)
        .map(|i| {
            let r = g.radius_at(i);
            g.weight_at(i) * (r * first.values[i]).norm_sqr()
        })
        .sum();
    let mut rhs = Vec::with_capacity(lhs.len());
    let mut acc = second_moment;
    rhs.push(acc);
    for j in 1..traj.times.len() {
        let (t0, t1) = (traj.times[j - 1], traj.times[j]);
        acc += 0.5 * (t1 - t0) * (t0 * theta[j - 1] + t1 * theta[j]);
        rhs.push(acc);
    }
    let residual: Vec<f64> = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs() / (a.abs() + b.abs() + 1e-14))
        .collect();
    Ok(PseudoconformalLedger {
        lhs: TimeSeries::new("pseudoconformal_lhs", "t", traj.times.clone(), lhs)?,
        rhs: TimeSeries::new("pseudoconformal_rhs", "t", traj.times.clone(), rhs)?,
        residual: TimeSeries::new("pseudoconformal_residual", "t", traj.times.clone(), residual)?,
        theta: TimeSeries::new("pseudoconformal_theta", "t", traj.times.clone(), theta)?,
        defect: TimeSeries::new("dispersion_defect", "t", defect_axis, defect_vals)?,
    })
}

/// a(f, g) = ∫ f̄ ∇g·x/|x| dx. Defined for ambient dimension ≥ 2 only.
pub fn bilinear_form_a(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    if *f.grid != *g.grid {
        return Err(DilabError::GridMismatch(
            "bilinear form needs both fields on one grid".into(),
        ));
    }
    if f.grid.dimension < 2 {
        return Err(DilabError::Unsupported(
            "the radial bilinear form needs ambient dimension >= 2".into(),
        ));
    }
    let dg = grid::radial_derivative(g)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..f.values.len() {
        acc += f.grid.weight_at(i) * f.values[i].conj() * dg.values[i];
    }
    Ok(acc)
}

/// (1/T) ∫_{window} ∫_{|x|<R} |u|² dx dt, the RAGE-style time average; T is
/// the upper end of the trajectory window.
pub fn rage_time_average(traj: &Trajectory, radius: f64) -> Result<f64> {
    let t_end = *traj.times.last().unwrap();
    if !(t_end > 0.0) {
        return Err(DilabError::InvalidParameter(
            "time average needs a window ending at T > 0".into(),
        ));
    }
    let integral =
        traj.trapezoid(|_, u| u.grid.integrate_abs2(&u.values, Region::Ball(radius)))?;
    Ok(integral / t_end)
}

/// ∫ W(x)|u|² dx for a node-sampled weight W.
pub fn weighted_observable(u: &ComplexField, w: &[f64]) -> Result<f64> {
    if w.len() != u.values.len() {
        return Err(DilabError::GridMismatch(
            "observable weight has the wrong number of nodes".into(),
        ));
    }
    Ok((0..w.len())
        .map(|i| u.grid.weight_at(i) * w[i] * u.values[i].norm_sqr())
        .sum())
}

/// ‖∇(e^{+i|x|²/4t} u)‖_{L²} for t > 0: the gradient left after removing the
/// quadratic phase that free waves acquire.
pub fn phase_corrected_gradient_norm(u: &ComplexField, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DilabError::InvalidParameter(
            "phase correction is defined for t > 0".into(),
        ));
    }
    let corrected = ComplexField::new(
        u.grid.clone(),
        (0..u.values.len())
            .map(|i| {
                let r = u.grid.radius_at(i);
                u.values[i] * Complex64::from_polar(1.0, r * r / (4.0 * t))
            })
            .collect(),
        u.label.clone(),
    )?;
    let du = grid::radial_derivative(&corrected)?;
    let (tau, _) = grid::angular_gradient_sq(&corrected)?;
    let mut acc = 0.0;
    for i in 0..corrected.values.len() {
        acc += corrected.grid.weight_at(i) * (du.values[i].norm_sqr() + tau[i]);
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::multiplier::{build_multiplier, MultiplierFamily};
    use crate::potential::{sample_potential, PotentialFamily};
    use approx::assert_abs_diff_eq;

    fn real_probe(g: &Arc<Grid>) -> ComplexField {
        ComplexField::from_fn(g.clone(), "probe", |a, b| {
            let r2 = a * a + b * b;
            Complex64::new((0.9 * a).cos() * (-r2 / 6.0).exp(), 0.0)
        })
    }

    #[test]
    fn real_data_has_zero_virial_flux() {
        let g = Grid::radial(3, 14.0, 128).unwrap();
        let m = build_multiplier(MultiplierFamily::SmoothedAbs { eps: 0.5 }, g.clone()).unwrap();
        let u = real_probe(&g);
        assert!(virial_flux(&u, &m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_multiplier_gives_exactly_zero_flux() {
        let g = Grid::radial(3, 14.0, 64).unwrap();
        let mut m = build_multiplier(MultiplierFamily::Abs, g.clone()).unwrap();
        m.dpsi.iter_mut().for_each(|v| *v = 0.0);
        let u = ComplexField::from_fn(g, "z", |r, _| Complex64::new((-r).exp(), (0.3 * r).sin()));
        assert_eq!(virial_flux(&u, &m).unwrap(), 0.0);
    }

    #[test]
    fn shell_data_weighted_mass_sits_at_the_shell_radius() {
        let g = Grid::radial(3, 20.0, 512).unwrap();
        let r0 = 7.0;
        let u = ComplexField::from_fn(g, "shell", |r, _| {
            Complex64::new((-(r - r0) * (r - r0) / 0.08).exp(), 0.0)
        });
        let ratio = weighted_mass(&u) / u.mass();
        assert_abs_diff_eq!(ratio, r0, epsilon = 0.01 * r0);
    }

    #[test]
    fn centered_flux_is_odd_in_time_for_real_free_data() {
        let g = Grid::cartesian(1, 16.0, 256).unwrap();
        let f = ComplexField::gaussian(g, 1.5, 1.0);
        assert!(centered_flux_g(&f).unwrap().abs() < 1e-12);
        let fwd = propagate_free(&f, 1.7).unwrap();
        let back = propagate_free(&f, -1.7).unwrap();
        let (a, b) = (centered_flux_g(&fwd).unwrap(), centered_flux_g(&back).unwrap());
        assert_abs_diff_eq!(a, -b, epsilon = 1e-12 * a.abs().max(1.0));
        assert!(a > 0.0, "outgoing flux should be positive for t > 0, got {a}");
    }

    #[test]
    fn smoothing_ratio_dominates_its_radial_part_and_respects_extent() {
        let g = Grid::cartesian(2, 7.0, 48).unwrap();
        let f = ComplexField::from_fn(g.clone(), "swirl", |x, y| {
            Complex64::new(
                (-(x * x + y * y) / 4.0).exp() * (x - 0.3 * y).sin(),
                0.2 * (-(x * x + y * y) / 5.0).exp() * (y * x * 0.4).cos(),
            )
        });
        let traj = Trajectory::free(&f, 0.0, 0.5, 8, 1.0).unwrap();
        for radius in [2.0, 4.0, 6.0] {
            let full = local_smoothing_ratio(&traj, radius, SmoothingKind::FullGradient).unwrap();
            let rad =
                local_smoothing_ratio(&traj, radius, SmoothingKind::RadialDerivative).unwrap();
            assert!(full >= rad, "R={radius}: full {full} < radial {rad}");
        }
        assert!(matches!(
            local_smoothing_ratio(&traj, 9.0, SmoothingKind::FullGradient),
            Err(DilabError::RegionTooLarge { .. })
        ));
    }

    #[test]
    fn smoothing_ratio_grows_with_the_window() {
        let g = Grid::cartesian(1, 20.0, 128).unwrap();
        let f = ComplexField::gaussian(g, 2.0, 1.0);
        let traj = Trajectory::free(&f, 0.0, 2.0, 16, 1.0).unwrap();
        let short = traj.truncated(9).unwrap();
        let a = local_smoothing_ratio(&short, 5.0, SmoothingKind::RadialDerivative).unwrap();
        let b = local_smoothing_ratio(&traj, 5.0, SmoothingKind::RadialDerivative).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn composite_ratio_adds_a_positive_mass_term() {
        let g = Grid::radial(3, 30.0, 256).unwrap();
        let op = SpectralOperator::assemble(g.clone(), PotentialFamily::Zero).unwrap();
        let f = ComplexField::gaussian(g, 2.0, 1.0);
        let traj = Trajectory::exact(&op, &f, 0.0, 1.0, 8, 1.0).unwrap();
        let plain = local_smoothing_ratio(&traj, 6.0, SmoothingKind::FullGradient).unwrap();
        let composite = local_smoothing_ratio_n3(&traj, 6.0).unwrap();
        assert!(composite > plain);
    }

    #[test]
    fn ledger_starts_exactly_balanced_and_theta_vanishes_when_free() {
        let g = Grid::cartesian(1, 20.0, 128).unwrap();
        let pot = sample_potential(PotentialFamily::Zero, g.clone()).unwrap();
        let f = ComplexField::gaussian(g, 2.0, 1.0);
        let traj = Trajectory::free(&f, 0.0, 2.0, 16, 1.0).unwrap();
        let ledger = pseudoconformal_ledger(&traj, &pot).unwrap();
        assert_abs_diff_eq!(ledger.lhs.values[0], ledger.rhs.values[0], epsilon = 0.0);
        assert!(ledger.theta.values.iter().all(|&v| v == 0.0));
        assert_eq!(ledger.defect.axis.len(), traj.times.len() - 1);
    }

    #[test]
    fn bilinear_form_matches_integration_by_parts_on_radial_grids() {
        for (dim, n) in [(2usize, 256usize), (3, 256)] {
            let g = Grid::radial(dim, 12.0, n).unwrap();
            let h = ComplexField::from_fn(g.clone(), "h", |r, _| {
                Complex64::new((1.1 * r).cos() * (-r * r / 8.0).exp(), 0.0)
            });
            let a = bilinear_form_a(&h, &h).unwrap();
            assert!(a.im.abs() < 1e-12, "dim {dim}: Im a = {}", a.im);
            let mut target = 0.0;
            for i in 0..h.values.len() {
                target += g.weight_at(i) * h.values[i].norm_sqr() / g.radius_at(i);
            }
            target *= -((dim - 1) as f64) / 2.0;
            assert_abs_diff_eq!(a.re, target, epsilon = 1e-12 * target.abs());
        }
    }

    #[test]
    fn bilinear_form_needs_two_dimensions() {
        let g = Grid::cartesian(1, 8.0, 32).unwrap();
        let h = ComplexField::gaussian(g, 1.0, 1.0);
        assert!(matches!(
            bilinear_form_a(&h, &h),
            Err(DilabError::Unsupported(_))
        ));
    }

    #[test]
    fn flat_observable_reads_off_the_conserved_mass() {
        let g = Grid::radial(3, 18.0, 192).unwrap();
        let op = SpectralOperator::assemble(
            g.clone(),
            PotentialFamily::InversePower { c: 0.5, p: 1.0 },
        )
        .unwrap();
        let f = ComplexField::gaussian(g.clone(), 2.0, 1.0);
        let flat = vec![1.0; g.node_count()];
        let u = op.propagate(&f, 6.0).unwrap();
        assert_abs_diff_eq!(
            weighted_observable(&u, &flat).unwrap(),
            f.mass(),
            epsilon = 1e-11 * f.mass()
        );
    }

    #[test]
    fn functionals_ignore_global_phases() {
        let g = Grid::radial(3, 18.0, 128).unwrap();
        let f = ComplexField::gaussian(g.clone(), 2.0, 1.0);
        let spun = ComplexField::new(
            g,
            f.values
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, 1.234))
                .collect(),
            "spun",
        )
        .unwrap();
        assert_abs_diff_eq!(weighted_mass(&f), weighted_mass(&spun), epsilon = 1e-13);
        assert_abs_diff_eq!(
            phase_corrected_gradient_norm(&f, 2.0).unwrap(),
            phase_corrected_gradient_norm(&spun, 2.0).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn rage_average_of_zero_data_is_zero_and_needs_forward_time() {
        let g = Grid::radial(3, 18.0, 64).unwrap();
        let z = ComplexField::zeros(g.clone(), "zero");
        let op = SpectralOperator::assemble(g, PotentialFamily::Zero).unwrap();
        let traj = Trajectory::exact(&op, &z, -2.0, 2.0, 8, 1.0).unwrap();
        assert_eq!(rage_time_average(&traj, 5.0).unwrap(), 0.0);
        let back = Trajectory::exact(&op, &z, -2.0, -1.0, 4, 1.0).unwrap();
        assert!(rage_time_average(&back, 5.0).is_err());
    }

    #[test]
    fn escaping_mass_trips_the_tail_guard() {
        let g = Grid::cartesian(1, 6.0, 64).unwrap();
        let f = ComplexField::gaussian(g, 1.0, 1.0);
        let res = Trajectory::free(&f, 0.0, 20.0, 10, 1e-6);
        assert!(matches!(res, Err(DilabError::TailMass { .. })));
    }
}
