//! Radial weight functions ψ and every derived object the identities need:
//! ψ′, ψ″, the Hessian quadratic form, the radial bilaplacian, and the
//! asymptotic slope ψ′(∞).
//!
//! All families carry closed-form derivative jets up to fourth order, so the
//! bilaplacian
//!   Δ²ψ = ψ⁗ + 2(n−1)ψ‴/r + (n−1)(n−3)(ψ″/r² − ψ′/r³)
//! is sampled without finite differences. For ψ = |x| the same formula
//! produces the pointwise −(n−1)(n−3)/r³; in ambient dimension 3 that misses
//! a point mass at the origin, which is flagged rather than sampled.

use crate::error::{DilabError, Result};
use crate::grid::{self, ComplexField, Grid, GridMode};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierFamily {
    /// ψ(r) = r.
    Abs,
    /// ψ(r) = √(ε² + r²), the canonical regularization of |x|.
    SmoothedAbs { eps: f64 },
    /// ψ(r) = √(1 + r²).
    JapaneseBracket,
    /// ψ_k with ψ_k″ = h_k, a plateau bump that is 1 on [0,1] and falls to 0
    /// across (1, 1 + 1/k).
    BumpIntegrated { k: u32 },
    /// ψ_R(x) = R·ψ(x/R).
    Rescaled {
        base: Box<MultiplierFamily>,
        radius: f64,
    },
}

/// Pointwise derivative jet of ψ at one radius.
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// C² smootherstep rise 0 → 1 on [0, 1] and its first two derivatives.
fn smootherstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dd = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (s, d, dd)
    }
}

impl MultiplierFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            MultiplierFamily::Abs | MultiplierFamily::JapaneseBracket => Ok(()),
            MultiplierFamily::SmoothedAbs { eps } => {
                if *eps > 0.0 {
                    Ok(())
                } else {
                    Err(DilabError::InvalidParameter(format!(
                        "smoothed_abs needs eps > 0, got {eps}"
                    )))
                }
            }
            MultiplierFamily::BumpIntegrated { k } => {
                if *k >= 1 {
                    Ok(())
                } else {
                    Err(DilabError::InvalidParameter("bump_integrated needs k >= 1".into()))
                }
            }
            MultiplierFamily::Rescaled { base, radius } => {
                if *radius > 0.0 {
                    base.validate()
                } else {
                    Err(DilabError::InvalidParameter(format!(
                        "rescaled needs radius > 0, got {radius}"
                    )))
                }
            }
        }
    }

    pub fn jet(&self, r: f64) -> Jet {
        match self {
            MultiplierFamily::Abs => Jet {
                psi: r,
                d1: 1.0,
                ..Jet::default()
            },
            MultiplierFamily::JapaneseBracket => {
                MultiplierFamily::SmoothedAbs { eps: 1.0 }.jet(r)
            }
            MultiplierFamily::SmoothedAbs { eps } => {
                let e2 = eps * eps;
                let s = (e2 + r * r).sqrt();
                Jet {
                    psi: s,
                    d1: r / s,
                    d2: e2 / s.powi(3),
                    d3: -3.0 * e2 * r / s.powi(5),
                    d4: -3.0 * e2 * (e2 - 4.0 * r * r) / s.powi(7),
                }
            }
            MultiplierFamily::BumpIntegrated { k } => {
                let k = *k as f64;
                if r <= 1.0 {
                    Jet {
                        psi: 0.5 * r * r,
                        d1: r,
                        d2: 1.0,
                        ..Jet::default()
                    }
                } else {
                    let theta = ((r - 1.0) * k).min(1.0);
                    let (s, sd, sdd) = smootherstep(theta);
                    // P = ∫₀^θ (1−s), S = ∫₀^θ τ(1−s): closed polynomials.
                    let p = theta - (2.5 * theta.powi(4) - 3.0 * theta.powi(5) + theta.powi(6));
                    let ss = 0.5 * theta * theta
                        - (2.0 * theta.powi(5) - 2.5 * theta.powi(6) + (6.0 / 7.0) * theta.powi(7));
                    let big_h = 1.0 + p / k;
                    let q = 0.5 + p / k + ss / (k * k);
                    if theta < 1.0 {
                        Jet {
                            psi: r * big_h - q,
                            d1: big_h,
                            d2: 1.0 - s,
                            d3: -k * sd,
                            d4: -k * k * sdd,
                        }
                    } else {
                        Jet {
                            psi: r * big_h - q,
                            d1: big_h,
                            ..Jet::default()
                        }
                    }
                }
            }
            MultiplierFamily::Rescaled { base, radius } => {
                let b = base.jet(r / radius);
                let il = 1.0 / radius;
                Jet {
                    psi: radius * b.psi,
                    d1: b.d1,
                    d2: b.d2 * il,
                    d3: b.d3 * il * il,
                    d4: b.d4 * il * il * il,
                }
            }
        }
    }

    /// lim_{r→∞} ψ′(r).
    pub fn psi_prime_inf(&self) -> f64 {
        match self {
            MultiplierFamily::Abs
            | MultiplierFamily::SmoothedAbs { .. }
            | MultiplierFamily::JapaneseBracket => 1.0,
            MultiplierFamily::BumpIntegrated { k } => 1.0 + 0.5 / *k as f64,
            MultiplierFamily::Rescaled { base, .. } => base.psi_prime_inf(),
        }
    }

    /// Radial bilaplacian from the jet; ambient dimension enters through the
    /// centrifugal combinatorics.
    pub fn bilaplacian_at(&self, r: f64, dimension: usize) -> f64 {
        let j = self.jet(r);
        let nm1 = (dimension - 1) as f64;
        let nm3 = dimension as f64 - 3.0;
        j.d4 + 2.0 * nm1 * j.d3 / r + nm1 * nm3 * (j.d2 / (r * r) - j.d1 / (r * r * r))
    }

    /// True when the pointwise bilaplacian misses a point mass at the origin
    /// (ψ = |x| in ambient dimension 3, where Δ²|x| = −8πδ₀).
    pub fn distributional_origin(&self, dimension: usize) -> bool {
        match self {
            MultiplierFamily::Abs => dimension == 3,
            MultiplierFamily::Rescaled { base, .. } => base.distributional_origin(dimension),
            _ => false,
        }
    }
}

/// The plateau bump h_k = ψ_k″: 1 on [0, 1], C² fall to 0 over (1, 1 + 1/k).
#[derive(Clone, Copy, Debug)]
pub struct BumpProfile {
    pub k: u32,
}

impl BumpProfile {
    pub fn h(&self, r: f64) -> f64 {
        MultiplierFamily::BumpIntegrated { k: self.k }.jet(r).d2
    }

    /// ∫₀^∞ h_k = 1 + 1/(2k), exactly.
    pub fn integral(&self) -> f64 {
        1.0 + 0.5 / self.k as f64
    }

    pub fn support_end(&self) -> f64 {
        (self.k as f64 + 1.0) / self.k as f64
    }
}

/// ψ and its derived samples on the radii of one grid.
#[derive(Clone, Debug)]
pub struct Multiplier {
    pub grid: Arc<Grid>,
    pub family: MultiplierFamily,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    pub d3psi: Vec<f64>,
    pub d4psi: Vec<f64>,
    pub bilaplacian: Vec<f64>,
    /// Pointwise Δ²ψ misses an origin point mass (abs family in n = 3).
    pub distributional_origin: bool,
    pub psi_prime_inf: f64,
}

pub fn build_multiplier(family: MultiplierFamily, grid: Arc<Grid>) -> Result<Multiplier> {
    family.validate()?;
    let n = grid.node_count();
    let dim = grid.dimension;
    let mut m = Multiplier {
        psi: Vec::with_capacity(n),
        dpsi: Vec::with_capacity(n),
        d2psi: Vec::with_capacity(n),
        d3psi: Vec::with_capacity(n),
        d4psi: Vec::with_capacity(n),
        bilaplacian: Vec::with_capacity(n),
        distributional_origin: family.distributional_origin(dim),
        psi_prime_inf: family.psi_prime_inf(),
        family,
        grid,
    };
    for i in 0..n {
        let r = m.grid.radius_at(i);
        let j = m.family.jet(r);
        m.psi.push(j.psi);
        m.dpsi.push(j.d1);
        m.d2psi.push(j.d2);
        m.d3psi.push(j.d3);
        m.d4psi.push(j.d4);
        // The origin node of a Cartesian grid: every shipped family has
        // ψ′(0) = 0 there, and the smooth limit of the r-singular terms is
        // finite; abs is the lone exception and is only ever used on radial
        // grids whose nodes exclude r = 0.
        m.bilaplacian.push(if r == 0.0 {
            let probe = 1e-6 * m.grid.spacing;
            m.family.bilaplacian_at(probe, dim)
        } else {
            m.family.bilaplacian_at(r, dim)
        });
    }
    Ok(m)
}

fn check_same_grid(m: &Multiplier, u: &ComplexField) -> Result<()> {
    if !Arc::ptr_eq(&m.grid, &u.grid) && *m.grid != *u.grid {
        return Err(DilabError::GridMismatch(
            "multiplier and field live on different grids".into(),
        ));
    }
    Ok(())
}

/// The Hessian quadratic form ∇ū D²ψ ∇u evaluated through the split
/// ψ″|∂_{|x|}u|² + (ψ′/|x|)|∇_τ u|², one real value per node.
pub fn hessian_form(m: &Multiplier, u: &ComplexField) -> Result<Vec<f64>> {
    check_same_grid(m, u)?;
    let dr = grid::radial_derivative(u)?;
    let (tau, _) = grid::angular_gradient_sq(u)?;
    let out = (0..u.grid.node_count())
        .map(|i| {
            let r = u.grid.radius_at(i);
            if r == 0.0 {
                // Smooth limit at the origin cell: ψ′/r → ψ″(0).
                m.d2psi[i] * (dr.values[i].norm_sqr() + tau[i])
            } else {
                m.d2psi[i] * dr.values[i].norm_sqr() + m.dpsi[i] / r * tau[i]
            }
        })
        .collect();
    Ok(out)
}

/// The same form through the explicit Hessian contraction
/// Σ_{ab} ∂_a ū · [ψ″ x̂_a x̂_b + (ψ′/r)(δ_ab − x̂_a x̂_b)] · ∂_b u,
/// which exercises the full gradient instead of the radial/angular split.
/// Cartesian grids only.
pub fn hessian_form_direct(m: &Multiplier, u: &ComplexField) -> Result<Vec<f64>> {
    check_same_grid(m, u)?;
    if u.grid.mode == GridMode::Radial {
        return Err(DilabError::Unsupported(
            "direct Hessian contraction needs a Cartesian grid".into(),
        ));
    }
    let grads = grid::gradient(u)?;
    let d = grads.len();
    let out = (0..u.grid.node_count())
        .map(|i| {
            let r = u.grid.radius_at(i);
            let xhat: Vec<f64> = match u.grid.mode {
                GridMode::Cartesian1 => {
                    let x = -u.grid.extent + i as f64 * u.grid.spacing;
                    vec![if r == 0.0 { 0.0 } else { x / r }]
                }
                GridMode::Cartesian2 => {
                    let (x, y) = u.grid.coords2(i);
                    if r == 0.0 {
                        vec![0.0, 0.0]
                    } else {
                        vec![x / r, y / r]
                    }
                }
                GridMode::Radial => unreachable!(),
            };
            let tangential = if r == 0.0 { m.d2psi[i] } else { m.dpsi[i] / r };
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    let mat = m.d2psi[i] * xhat[a] * xhat[b]
                        + tangential * ((a == b) as usize as f64 - xhat[a] * xhat[b]);
                    acc += (grads[a].values[i].conj() * grads[b].values[i]).re * mat;
                }
            }
            acc
        })
        .collect();
    Ok(out)
}
