//! Discrete action, Nehari functional, energy, mass and their exact gradients
//! under the trapezoid inner product, plus identity-based diagnostics
//! (Pohozaev residuals, Lagrange-multiplier recovery, Rayleigh quotients).

use crate::error::{Error, Result};
use crate::grid::{self, Field};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};

/// Scalar functionals of a field at given parameters, in rescaled form
/// (the transverse kinetic term carries the 1/L^2 weight inside `action`,
/// `nehari` and `energy`; `kinetic_y` itself is stored raw).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub action: f64,
    pub nehari: f64,
    pub energy: f64,
    pub mass: f64,
    pub trace: f64,
    pub kinetic_x: f64,
    pub kinetic_y: f64,
    pub potential: f64,
}

impl FunctionalReport {
    /// Quadratic part <L_{omega,gamma} u, u> = K_x + K_y/L^2 + omega M + gamma T.
    pub fn quadratic_part(&self, params: &ProblemParams) -> f64 {
        self.kinetic_x
            + params.y_weight() * self.kinetic_y
            + params.omega * self.mass
            + params.gamma * self.trace
    }

    /// Magnitude scale of the Nehari functional's terms, for relative checks.
    pub fn nehari_scale(&self, params: &ProblemParams) -> f64 {
        self.kinetic_x.abs()
            + params.y_weight() * self.kinetic_y.abs()
            + params.omega.abs() * self.mass
            + (params.gamma * self.trace).abs()
            + self.potential
            + 1e-300
    }

    /// Defect of the algebraic relation I = 2S - (p-1)/(p+1) P between the
    /// directly accumulated Nehari value and the action route.
    pub fn consistency_defect(&self, params: &ProblemParams) -> f64 {
        let via_action =
            2.0 * self.action - (params.p - 1.0) / (params.p + 1.0) * self.potential;
        (self.nehari - via_action).abs()
    }
}

/// Evaluate all functionals. The Nehari value is accumulated from its own
/// definition and cross-checked against the action route.
pub fn eval_all(u: &Field, params: &ProblemParams) -> Result<FunctionalReport> {
    params.validate()?;
    let kx = grid::kinetic_x(u);
    let ky = grid::kinetic_y(u);
    let mass = grid::quadrature(u, |v| v * v);
    let trace = grid::trace_sq(u);
    let potential = grid::quadrature(u, |v| v.abs().powf(params.p + 1.0));
    let w = params.y_weight();
    let quad = kx + w * ky + params.omega * mass + params.gamma * trace;
    let report = FunctionalReport {
        action: 0.5 * quad - potential / (params.p + 1.0),
        nehari: quad - potential,
        energy: 0.5 * (kx + w * ky) + 0.5 * params.gamma * trace
            - potential / (params.p + 1.0),
        mass,
        trace,
        kinetic_x: kx,
        kinetic_y: ky,
        potential,
    };
    debug_assert!(
        report.consistency_defect(params) < 1e-12 * report.nehari_scale(params),
        "Nehari consistency defect {}",
        report.consistency_defect(params)
    );
    Ok(report)
}

/// Exact gradient of the discrete action under the quadrature inner product:
///
///   grad S = A_x u + (1/L^2) A_y u + omega u + (gamma/hx) u|_{x=0} - |u|^{p-1} u
///
/// where A_x is the Dirichlet-closed second difference (with the half-weight
/// boundary correction that makes it the exact derivative of `kinetic_x`)
/// and A_y the mirrored Neumann stencil.
pub fn grad_action(u: &Field, params: &ProblemParams) -> Field {
    gradient(u, params, true)
}

/// Exact gradient of the discrete energy (action without the omega mass term).
pub fn grad_energy(u: &Field, params: &ProblemParams) -> Field {
    gradient(u, params, false)
}

fn gradient(u: &Field, params: &ProblemParams, include_omega: bool) -> Field {
    let g = u.grid;
    let mut out = Field::zeros(g);
    let hx2 = g.hx * g.hx;
    let hy2 = g.hy * g.hy;
    let w = params.y_weight();
    let c = g.center_ix();
    let om = if include_omega { params.omega } else { 0.0 };
    let pm1 = params.p - 1.0;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let v = u.at(i, j);
            // lengthwise: Dirichlet-closed, derivative of the ghost-gap energy
            let ax = if i == 0 {
                (4.0 * v - 2.0 * u.at(1, j)) / hx2
            } else if i == g.nx - 1 {
                (4.0 * v - 2.0 * u.at(g.nx - 2, j)) / hx2
            } else {
                (2.0 * v - u.at(i - 1, j) - u.at(i + 1, j)) / hx2
            };
            // transverse: mirrored Neumann stencil
            let ay = if j == 0 {
                (2.0 * v - 2.0 * u.at(i, 1)) / hy2
            } else if j == g.ny - 1 {
                (2.0 * v - 2.0 * u.at(i, g.ny - 2)) / hy2
            } else {
                (2.0 * v - u.at(i, j - 1) - u.at(i, j + 1)) / hy2
            };
            let mut r = ax + w * ay + om * v - v.abs().powf(pm1) * v;
            if i == c {
                r += params.gamma / g.hx * v;
            }
            *out.at_mut(i, j) = r;
        }
    }
    out
}

/// Rayleigh quotient (K_x + h K_y + gamma T) / M of the defect form with
/// transverse weight h. Rejects fields with vanishing mass.
pub fn rayleigh_lambda(u: &Field, gamma: f64, h: f64) -> Result<f64> {
    let mass = grid::quadrature(u, |v| v * v);
    if mass <= 0.0 {
        return Err(Error::ZeroField("rayleigh_lambda requires positive mass"));
    }
    let q = grid::kinetic_x(u) + h * grid::kinetic_y(u) + gamma * grid::trace_sq(u);
    Ok(q / mass)
}

/// Iteratively minimize the Rayleigh quotient by projected gradient descent
/// from a seeded random start. Returns (lambda, iterations).
pub fn rayleigh_minimize(
    grid_spec: crate::grid::StripGrid,
    gamma: f64,
    h: f64,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, usize)> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grid_spec.len());
    for i in 0..grid_spec.nx {
        let x = grid_spec.x(i);
        for _ in 0..grid_spec.ny {
            values.push((-(x * x) / 8.0).exp() * rng.gen_range(0.2..1.0));
        }
    }
    let mut u = Field::from_values(grid_spec, values)?;
    normalize_mass(&mut u, 1.0);
    let g = grid_spec;
    // conservative inverse bound on the operator spectrum
    let step = 0.9 / (4.0 / (g.hx * g.hx) + h.abs() * 4.0 / (g.hy * g.hy) + gamma.abs() / g.hx);
    let mut lambda = rayleigh_lambda(&u, gamma, h)?;
    let mut iters = 0;
    for it in 0..max_iters {
        iters = it + 1;
        let r = form_residual(&u, gamma, h, lambda);
        let rn = grid::norm_quad(&r);
        if rn < tol {
            break;
        }
        u.add_scaled(-step, &r);
        normalize_mass(&mut u, 1.0);
        lambda = rayleigh_lambda(&u, gamma, h)?;
    }
    Ok((lambda, iters))
}

/// A u - lambda u for the quadratic form K_x + h K_y + gamma T, the exact
/// half-gradient of the quotient numerator under the quadrature product.
fn form_residual(u: &Field, gamma: f64, h: f64, lambda: f64) -> Field {
    let g = u.grid;
    let mut out = Field::zeros(g);
    let hx2 = g.hx * g.hx;
    let hy2 = g.hy * g.hy;
    let c = g.center_ix();
    for i in 0..g.nx {
        for j in 0..g.ny {
            let v = u.at(i, j);
            let ax = if i == 0 {
                (4.0 * v - 2.0 * u.at(1, j)) / hx2
            } else if i == g.nx - 1 {
                (4.0 * v - 2.0 * u.at(g.nx - 2, j)) / hx2
            } else {
                (2.0 * v - u.at(i - 1, j) - u.at(i + 1, j)) / hx2
            };
            let ay = if j == 0 {
                (2.0 * v - 2.0 * u.at(i, 1)) / hy2
            } else if j == g.ny - 1 {
                (2.0 * v - 2.0 * u.at(i, g.ny - 2)) / hy2
            } else {
                (2.0 * v - u.at(i, j - 1) - u.at(i, j + 1)) / hy2
            };
            let mut r = ax + h * ay - lambda * v;
            if i == c {
                r += gamma / g.hx * v;
            }
            *out.at_mut(i, j) = r;
        }
    }
    out
}

/// Rescale to quad(u^2) = m exactly.
pub fn normalize_mass(u: &mut Field, m: f64) {
    let mass = grid::quadrature(u, |v| v * v);
    assert!(mass > 0.0, "cannot normalize the zero field");
    u.scale((m / mass).sqrt());
}

/// Signed residuals of the two Pohozaev identities on the normalized strip:
///
///   r1 = K_x + K_y/L^2 + omega M + gamma T - P
///   r2 = K_x - K_y/L^2 - omega M + 2/(p+1) P
///
/// Both vanish under refinement for true stationary points; r1 is the Nehari
/// identity and is machine-zero at discrete stationary points.
pub fn pohozaev_residuals(u: &Field, params: &ProblemParams, omega: f64) -> Result<(f64, f64)> {
    let rep = eval_all(u, params)?;
    let w = params.y_weight();
    let r1 = rep.kinetic_x + w * rep.kinetic_y + omega * rep.mass + params.gamma * rep.trace
        - rep.potential;
    let r2 = rep.kinetic_x - w * rep.kinetic_y - omega * rep.mass
        + 2.0 / (params.p + 1.0) * rep.potential;
    Ok((r1, r2))
}

/// Lagrange-multiplier estimate from the Pohozaev combination
///
///   omega = [-2(p+3) E + (p-1) gamma T - 4 K_y/L^2] / ((5-p) M).
///
/// Diagnostic-only for non-solutions; rejects p = 5 (formula singular).
pub fn recover_omega(u: &Field, params: &ProblemParams) -> Result<f64> {
    if (params.p - 5.0).abs() < 1e-12 {
        return Err(Error::InadmissibleParams("recover_omega is singular at p = 5".into()));
    }
    let rep = eval_all(u, params)?;
    if rep.mass <= 0.0 {
        return Err(Error::ZeroField("recover_omega requires positive mass"));
    }
    let w = params.y_weight();
    Ok(
        (-2.0 * (params.p + 3.0) * rep.energy + (params.p - 1.0) * params.gamma * rep.trace
            - 4.0 * w * rep.kinetic_y)
            / ((5.0 - params.p) * rep.mass),
    )
}
