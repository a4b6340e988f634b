//! Free-wave asymptotics and wave operators.
//!
//! The stationary-phase profile of the free flow, the finite-time Møller
//! approximation W±f ≈ e^{∓iTΔ-free} e^{±iTΔ_V} f with its convergence
//! history, and the half-norm identity relating ‖f‖_{Ḣ^{1/2}_V} to the
//! transform of W±f.

use crate::error::{DilabError, Result};
use crate::grid::{ComplexField, GridMode};
use crate::spectral::{fourier_half_norm_sq, propagate_free, SpectralOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// t → +∞.
    Future,
    /// t → −∞.
    Past,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Future => 1.0,
            Direction::Past => -1.0,
        }
    }
}

/// Trigonometric interpolation of the discrete transform: evaluates
/// f̂(ξ) = Σ_j h e^{−2πi x_j ξ} f_j at an arbitrary frequency.
fn transform_at(f: &ComplexField, xi: f64) -> Complex64 {
    let h = f.grid.spacing;
    let axis = f.grid.axis();
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, v) in axis.iter().zip(&f.values) {
        acc += v * Complex64::from_polar(h, -2.0 * PI * x * xi);
    }
    acc
}

/// The stationary-phase description of the free wave at time t ≠ 0:
///   e^{i n π sgn(t)/4} (4π|t|)^{−n/2} e^{−i|x|²/(4t)} f̂(−x/(4πt)),
/// sampled on the grid of f. Implemented on the one-dimensional axis, where
/// the off-grid transform values come from exact trigonometric interpolation.
pub fn asymptotic_profile(f: &ComplexField, t: f64) -> Result<ComplexField> {
    if t == 0.0 {
        return Err(DilabError::InvalidParameter(
            "the asymptotic profile is defined for t != 0".into(),
        ));
    }
    if f.grid.mode != GridMode::Cartesian1 {
        return Err(DilabError::Unsupported(
            "the asymptotic profile is implemented on the 1D axis only".into(),
        ));
    }
    let n = f.grid.dimension as f64;
    let amp = (4.0 * PI * t.abs()).powf(-n / 2.0);
    let corner = Complex64::from_polar(1.0, n * PI / 4.0 * t.signum());
    let axis = f.grid.axis();
    let values: Vec<Complex64> = axis
        .par_iter()
        .map(|&x| {
            let chirp = Complex64::from_polar(1.0, -x * x / (4.0 * t));
            corner * amp * chirp * transform_at(f, -x / (4.0 * PI * t))
        })
        .collect();
    ComplexField::new(f.grid.clone(), values, "asymptotic_profile")
}

/// A finite-time wave-operator approximation and its convergence record.
pub struct ScatteringState {
    pub initial: ComplexField,
    pub direction: Direction,
    /// Largest Møller time actually used.
    pub t_used: f64,
    /// W±f at t_used.
    pub wave: ComplexField,
    /// (T_j, ‖W_{T_j}f − W_{T_{j−1}}f‖) for consecutive ladder entries.
    pub history: Vec<(f64, f64)>,
    /// |‖W±f‖ − ‖f‖| / ‖f‖ at t_used.
    pub isometry_defect: f64,
}

/// Møller composition at each ladder time: evolve under the full dynamics,
/// then undo the free dynamics. Requires a certified short-range potential
/// (the completeness hypothesis) and guards the domain tails at every ladder
/// time, since wraparound is the dominant error at large T.
pub fn wave_operator(
    op: &SpectralOperator,
    f: &ComplexField,
    direction: Direction,
    t_ladder: &[f64],
    tail_threshold: f64,
) -> Result<ScatteringState> {
    if op.grid.mode == GridMode::Radial {
        return Err(DilabError::Unsupported(
            "the Møller composition needs a periodic Cartesian grid".into(),
        ));
    }
    if op.potential.hypotheses.sr0.is_none() {
        return Err(DilabError::Unsupported(
            "wave operators need a potential certified short-range".into(),
        ));
    }
    if t_ladder.is_empty() || t_ladder.windows(2).any(|w| w[1] <= w[0]) || t_ladder[0] <= 0.0 {
        return Err(DilabError::InvalidParameter(
            "the Møller ladder must be positive and strictly increasing".into(),
        ));
    }
    let s = direction.sign();
    let mut history = Vec::new();
    let mut prev: Option<ComplexField> = None;
    let mut last: Option<ComplexField> = None;
    for &t in t_ladder {
        let evolved = op.propagate(f, s * t)?;
        let tail = evolved.tail_mass_fraction(0.1);
        if tail > tail_threshold {
            return Err(DilabError::TailMass {
                measured: tail,
                threshold: tail_threshold,
                context: format!("Møller composition at T = {t}"),
            });
        }
        let wave = propagate_free(&evolved, -s * t)?;
        if let Some(p) = &prev {
            let diff = wave
                .values
                .iter()
                .zip(&p.values)
                .enumerate()
                .map(|(i, (a, b))| wave.grid.weight_at(i) * (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            history.push((t, diff));
        }
        prev = Some(wave.clone());
        last = Some(wave);
    }
    let wave = last.unwrap();
    let isometry_defect = (wave.mass().sqrt() - f.mass().sqrt()).abs() / f.mass().sqrt();
    Ok(ScatteringState {
        initial: f.clone(),
        direction,
        t_used: *t_ladder.last().unwrap(),
        wave,
        history,
        isometry_defect,
    })
}

/// The scattering expression 2π∫|ξ| |F[W±f](ξ)|² dξ and its relative gap to
/// ‖f‖²_{Ḣ^{1/2}_V} computed through the functional calculus — the two
/// routes the half-norm identity claims agree in the limit.
pub fn scattering_weight(state: &ScatteringState, op: &SpectralOperator) -> Result<(f64, f64)> {
    let weight = fourier_half_norm_sq(&state.wave)?;
    let target = op.h_power_norm_sq(&state.initial, 0.5)?;
    let residual = (weight - target).abs() / (weight.abs() + target.abs() + 1e-14);
    Ok((weight, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::PotentialFamily;
    use approx::assert_abs_diff_eq;

    #[test]
    fn profile_preserves_the_free_mass() {
        let g = Grid::cartesian(1, 40.0, 512).unwrap();
        let f = ComplexField::gaussian(g, 1.0, 1.0);
        // Largest |t| is capped so the substitution window L/(4π|t|) still
        // covers the transform of f; beyond that the box truncates mass.
        for t in [2.0, -3.0, 5.0] {
            let p = asymptotic_profile(&f, t).unwrap();
            assert_abs_diff_eq!(p.mass(), f.mass(), epsilon = 1e-6 * f.mass());
        }
    }

    #[test]
    fn profile_error_decays_as_time_doubles() {
        let g = Grid::cartesian(1, 60.0, 768).unwrap();
        let f = ComplexField::gaussian(g, 1.0, 1.0);
        let err = |t: f64| {
            let u = propagate_free(&f, t).unwrap();
            let p = asymptotic_profile(&f, t).unwrap();
            u.values
                .iter()
                .zip(&p.values)
                .enumerate()
                .map(|(i, (a, b))| u.grid.weight_at(i) * (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let (e1, e2, e3) = (err(1.5), err(3.0), err(6.0));
        assert!(e2 < e1 && e3 < e2, "profile errors not decreasing: {e1} {e2} {e3}");
        assert!(e3 < 0.35 * e1, "decay too slow: {e1} -> {e3}");
    }

    #[test]
    fn band_limited_data_lands_where_the_substitution_says() {
        let g = Grid::cartesian(1, 32.0, 512).unwrap();
        // Wave packet at carrier frequency 0.375 with a wide envelope, so its
        // transform is two narrow Gaussians inside 0.25 ≤ |ξ| ≤ 0.5.  A bare
        // cosine would not do: its boxed transform has slowly decaying
        // sidelobes that leak percent-level mass outside the annulus.
        let f = ComplexField::from_fn(g.clone(), "band", |x, _| {
            let v = (2.0 * PI * 0.375 * x).cos() * (-x * x / 50.0).exp();
            Complex64::new(v, 0.0)
        });
        let t = 1.2;
        let p = asymptotic_profile(&f, t).unwrap();
        // |x| must satisfy |x|/(4πt) ∈ [0.25, 0.5] up to interpolation leakage.
        let (lo, hi) = (0.25 * 4.0 * PI * t, 0.5 * 4.0 * PI * t);
        let mut outside = 0.0;
        let mut total = 0.0;
        for (i, v) in p.values.iter().enumerate() {
            let w = p.grid.weight_at(i) * v.norm_sqr();
            total += w;
            let r = p.grid.radius_at(i);
            if !(0.9 * lo..=1.1 * hi).contains(&r) {
                outside += w;
            }
        }
        assert!(outside < 1e-3 * total, "leakage {}", outside / total);
    }

    #[test]
    fn profile_needs_nonzero_time_and_a_line_grid() {
        let g1 = Grid::cartesian(1, 10.0, 64).unwrap();
        let f1 = ComplexField::gaussian(g1, 1.0, 1.0);
        assert!(asymptotic_profile(&f1, 0.0).is_err());
        let g2 = Grid::cartesian(2, 10.0, 16).unwrap();
        let f2 = ComplexField::gaussian(g2, 1.0, 1.0);
        assert!(matches!(
            asymptotic_profile(&f2, 1.0),
            Err(DilabError::Unsupported(_))
        ));
    }

    #[test]
    fn free_wave_operator_is_the_identity() {
        let g = Grid::cartesian(1, 20.0, 128).unwrap();
        let op = SpectralOperator::assemble(g.clone(), PotentialFamily::Zero).unwrap();
        let f = ComplexField::gaussian(g, 2.0, 1.0);
        let st = wave_operator(&op, &f, Direction::Future, &[1.0, 2.0, 4.0], 1.0).unwrap();
        let worst = st
            .wave
            .values
            .iter()
            .zip(&f.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "free Møller composition moved f by {worst}");
        assert!(st.isometry_defect < 1e-12);
    }

    #[test]
    fn moller_differences_shrink_for_short_range_potentials() {
        // Contraction of the dyadic differences sets in late for a potential
        // decaying like r^{-2}: the comparison stage needs T large enough
        // that the packet has left the well, which in turn needs a long box.
        let g = Grid::cartesian(1, 160.0, 512).unwrap();
        let op = SpectralOperator::assemble(
            g.clone(),
            PotentialFamily::InversePower { c: 0.25, p: 1.0 },
        )
        .unwrap();
        let f = ComplexField::gaussian(g, 2.2, 1.0);
        let st = wave_operator(&op, &f, Direction::Future, &[10.0, 20.0, 40.0], 1e-4).unwrap();
        assert_eq!(st.history.len(), 2);
        assert!(
            st.history[1].1 < st.history[0].1,
            "history not contracting: {:?}",
            st.history
        );
        assert_abs_diff_eq!(st.history[0].1, 0.5176, epsilon = 5e-3);
        assert_abs_diff_eq!(st.history[1].1, 0.3407, epsilon = 5e-3);
        assert!(st.isometry_defect < 1e-8);
    }

    #[test]
    fn scattering_weight_matches_the_norm_when_free() {
        let g = Grid::cartesian(1, 24.0, 256).unwrap();
        let op = SpectralOperator::assemble(g.clone(), PotentialFamily::Zero).unwrap();
        let f = ComplexField::gaussian(g, 1.7, 1.0);
        let st = wave_operator(&op, &f, Direction::Past, &[1.0], 1.0).unwrap();
        let (_, residual) = scattering_weight(&st, &op).unwrap();
        assert!(residual < 1e-8, "convention residual {residual}");
    }

    #[test]
    fn uncertified_potentials_are_refused() {
        let g = Grid::cartesian(1, 20.0, 64).unwrap();
        // Flat compact bump reaching far out: envelope peaks in the outer
        // quartile, so the short-range certificate fails on this box.
        let op = SpectralOperator::assemble(
            g.clone(),
            PotentialFamily::CompactBump {
                a: 0.5,
                r0: 18.0,
                width: 1.0,
            },
        )
        .unwrap();
        assert!(op.potential.hypotheses.sr0.is_none());
        let f = ComplexField::gaussian(g, 1.0, 1.0);
        assert!(matches!(
            wave_operator(&op, &f, Direction::Future, &[1.0], 1.0),
            Err(DilabError::Unsupported(_))
        ));
    }

    #[test]
    fn wraparound_trips_the_tail_guard() {
        let g = Grid::cartesian(1, 8.0, 64).unwrap();
        let op = SpectralOperator::assemble(g.clone(), PotentialFamily::Zero).unwrap();
        let f = ComplexField::gaussian(g, 1.0, 1.0);
        assert!(matches!(
            wave_operator(&op, &f, Direction::Future, &[50.0], 1e-6),
            Err(DilabError::TailMass { .. })
        ));
    }
}
