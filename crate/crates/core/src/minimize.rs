//! Constrained minimization engines: projected gradient descent for the
//! action on the Nehari manifold, and normalized gradient flow for the energy
//! at fixed mass. Monotone decrease of the respective objective is enforced
//! by step backtracking; the stiff transverse direction can be damped by an
//! implicit tridiagonal preconditioner.

use crate::error::{Error, Result};
use crate::functionals::{self, eval_all, FunctionalReport};
use crate::grid::{self, Field, StripGrid};
use crate::params::ProblemParams;
use crate::soliton::{self, Soliton1D};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeMode {
    NehariAction,
    MassEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartKind {
    /// Extended 1D soliton (at omega for action mode, at omega(m) for energy mode).
    SolitonExtension,
    /// Gaussian bump centered at x0.
    GaussianBump { x0: f64, width: f64, amplitude: f64 },
    /// Seeded random smooth field.
    Random { amplitude: f64 },
    /// Load a snapshot header path.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeConfig {
    pub mode: MinimizeMode,
    pub symmetric_x: bool,
    /// Initial step; 0 selects an inverse-stiffness default.
    pub step: f64,
    pub max_iters: usize,
    pub tol_grad: f64,
    pub seed: u64,
    pub start: StartKind,
    /// Amplitude of the seeded transverse perturbation added to the start
    /// (probes y-stability; decays in the y-independent regime).
    pub y_perturbation: f64,
    /// Damp the 1/L^2-stiff transverse direction with an implicit solve.
    pub precondition_y: bool,
    /// Record every k-th accepted iteration (0 disables the log).
    pub log_every: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            mode: MinimizeMode::NehariAction,
            symmetric_x: false,
            step: 0.0,
            max_iters: 200_000,
            tol_grad: 1e-8,
            seed: 1,
            start: StartKind::SolitonExtension,
            y_perturbation: 0.01,
            precondition_y: true,
            log_every: 1,
        }
    }
}

/// One accepted-iteration row of the descent log.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub nehari: f64,
    pub mass: f64,
    pub dy_norm: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Diagnostics {
    /// |mass centroid| / (X/2); values >= 1 indicate run-away drift.
    pub runaway_score: f64,
    pub runaway: bool,
    pub dy_norm: f64,
    pub sym_defect: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: Field,
    pub report: FunctionalReport,
    pub recovered_omega: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics,
    pub log: Vec<IterationRecord>,
}

/// Violations of the qualitative ground-state properties: interior
/// positivity, even symmetry in x, monotone decay in |x|, monotonicity in y.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RearrangementReport {
    pub positivity_violation: f64,
    pub sym_defect: f64,
    pub x_monotonicity_violation: f64,
    pub y_monotonicity_violation: f64,
}

/// Scale psi onto the Nehari manifold: t(psi) psi with
/// t = (<L psi, psi> / ||psi||_{p+1}^{p+1})^{1/(p-1)}.
pub fn nehari_project(u: &Field, params: &ProblemParams) -> Result<Field> {
    let rep = eval_all(u, params)?;
    nehari_project_with(u, params, &rep)
}

fn nehari_project_with(
    u: &Field,
    params: &ProblemParams,
    rep: &FunctionalReport,
) -> Result<Field> {
    if rep.potential <= 0.0 {
        return Err(Error::ProjectionUndefined("zero field has no Nehari scaling".into()));
    }
    let q = rep.quadratic_part(params);
    if q <= 0.0 {
        return Err(Error::ProjectionUndefined(format!(
            "nonpositive quadratic part {q}"
        )));
    }
    let t = (q / rep.potential).powf(1.0 / (params.p - 1.0));
    let mut out = u.clone();
    out.scale(t);
    Ok(out)
}

/// Replace u by its even part in x. Idempotent; requires nx odd (always true
/// for `StripGrid`).
pub fn enforce_symmetry(u: &Field) -> Field {
    let g = u.grid;
    let mut out = Field::zeros(g);
    for i in 0..g.nx {
        let m = g.nx - 1 - i;
        for j in 0..g.ny {
            *out.at_mut(i, j) = 0.5 * (u.at(i, j) + u.at(m, j));
        }
    }
    out
}

/// Max deviation from even symmetry in x.
pub fn symmetry_defect(u: &Field) -> f64 {
    let g = u.grid;
    let mut worst = 0f64;
    for i in 0..g.nx {
        let m = g.nx - 1 - i;
        for j in 0..g.ny {
            worst = worst.max((u.at(i, j) - u.at(m, j)).abs());
        }
    }
    worst
}

/// Report violations of positivity, x-symmetry, |x|-monotonicity and
/// y-monotonicity of a (putative) ground state.
pub fn positivity_and_rearrangement_check(u: &Field) -> RearrangementReport {
    let g = u.grid;
    let mut positivity = 0f64;
    for i in 1..g.nx - 1 {
        for j in 0..g.ny {
            positivity = positivity.max(-u.at(i, j));
        }
    }
    // monotone decay away from x = 0 along each row
    let c = g.center_ix();
    let mut x_viol = 0f64;
    for j in 0..g.ny {
        for i in c..g.nx - 1 {
            x_viol = x_viol.max(u.at(i + 1, j) - u.at(i, j));
        }
        for i in 0..c {
            x_viol = x_viol.max(u.at(i, j) - u.at(i + 1, j));
        }
    }
    // monotone in y: one direction must hold globally; y-constant passes
    let mut up_viol = 0f64;
    let mut down_viol = 0f64;
    for i in 0..g.nx {
        for j in 0..g.ny - 1 {
            let d = u.at(i, j + 1) - u.at(i, j);
            up_viol = up_viol.max(-d);
            down_viol = down_viol.max(d);
        }
    }
    RearrangementReport {
        positivity_violation: positivity.max(0.0),
        sym_defect: symmetry_defect(u),
        x_monotonicity_violation: x_viol.max(0.0),
        y_monotonicity_violation: up_viol.min(down_viol).max(0.0),
    }
}

/// Minimize the action over the Nehari manifold by projected descent.
///
/// For gamma > 0 the full-space problem has no minimizer (minimizing
/// sequences run away), so `symmetric_x` must be set.
pub fn minimize_action(
    cfg: &MinimizeConfig,
    params: &ProblemParams,
    grid_spec: StripGrid,
) -> Result<MinimizeResult> {
    let start = starting_field(cfg, params, grid_spec)?;
    minimize_action_from(start, cfg, params)
}

/// Action minimization warm-started from an explicit field (the configured
/// transverse perturbation is still applied).
pub fn minimize_action_from(
    start: Field,
    cfg: &MinimizeConfig,
    params: &ProblemParams,
) -> Result<MinimizeResult> {
    params.validate()?;
    check_grid_budget(params, start.grid)?;
    if params.gamma > 0.0 && !cfg.symmetric_x {
        return Err(Error::InadmissibleParams(
            "gamma > 0 action minimization requires symmetric_x (no full-space minimizer)"
                .into(),
        ));
    }
    run_descent(start, cfg, params, MinimizeMode::NehariAction)
}

/// Minimize the energy at fixed mass by normalized gradient flow.
pub fn minimize_energy(
    cfg: &MinimizeConfig,
    params: &ProblemParams,
    grid_spec: StripGrid,
) -> Result<MinimizeResult> {
    let start = starting_field(cfg, params, grid_spec)?;
    minimize_energy_from(start, cfg, params)
}

/// Energy minimization warm-started from an explicit field.
pub fn minimize_energy_from(
    start: Field,
    cfg: &MinimizeConfig,
    params: &ProblemParams,
) -> Result<MinimizeResult> {
    params.validate_energy_mode()?;
    check_grid_budget(params, start.grid)?;
    run_descent(start, cfg, params, MinimizeMode::MassEnergy)
}

fn check_grid_budget(params: &ProblemParams, grid_spec: StripGrid) -> Result<()> {
    // decay budget X >= 8/sqrt(omega); minimizers decay like e^{-sqrt(omega)|x|}
    let needed = 8.0 / params.omega.max(1e-12).sqrt();
    if grid_spec.x_extent < needed {
        return Err(Error::Grid(format!(
            "x_extent {} below the decay budget 8/sqrt(omega) = {:.3}",
            grid_spec.x_extent, needed
        )));
    }
    Ok(())
}

/// Build the starting field for a run.
pub fn starting_field(
    cfg: &MinimizeConfig,
    params: &ProblemParams,
    grid_spec: StripGrid,
) -> Result<Field> {
    let u = match &cfg.start {
        StartKind::SolitonExtension => {
            let omega = match cfg.mode {
                MinimizeMode::NehariAction => params.omega,
                MinimizeMode::MassEnergy => {
                    soliton::omega_of_mass(params.mass, params.gamma, params.p)
                        .unwrap_or(params.omega)
                }
            };
            Soliton1D::new(omega, params.gamma, params.p)?.extend_to_strip(grid_spec)
        }
        StartKind::GaussianBump { x0, width, amplitude } => {
            let (x0, w, a) = (*x0, *width, *amplitude);
            Field::from_fn(grid_spec, move |x, _| {
                a * (-((x - x0) / w).powi(2)).exp()
            })
        }
        StartKind::Random { amplitude } => {
            let a = *amplitude;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let nx = grid_spec.nx;
            let profile: Vec<f64> = (0..nx)
                .map(|i| {
                    let x = grid_spec.x(i);
                    (-(x * x) / 18.0).exp() * rng.gen_range(0.3..1.0)
                })
                .collect();
            Field::from_fn(grid_spec, move |x, y| {
                let i = ((x + grid_spec.x_extent) / grid_spec.hx).round() as usize;
                a * profile[i.min(nx - 1)] * (1.0 + 0.3 * (std::f64::consts::PI * y).cos())
            })
        }
        StartKind::File { path } => {
            let (field, _) = crate::snapshot::read_snapshot(path)?;
            if field.grid != grid_spec {
                return Err(Error::Config(format!(
                    "snapshot grid {}x{} does not match requested {}x{}",
                    field.grid.nx, field.grid.ny, grid_spec.nx, grid_spec.ny
                )));
            }
            field
        }
    };
    Ok(u)
}

/// Add an even-in-x, cos(pi y) transverse seed of relative amplitude `amp`;
/// it decays under the flow in the y-independent regime and grows past the
/// width threshold.
pub fn apply_y_perturbation(u: &mut Field, amp: f64) {
    if amp == 0.0 {
        return;
    }
    let a = amp * u.linf().max(1.0);
    let g = u.grid;
    for i in 0..g.nx {
        let envelope = 1.0 / g.x(i).cosh();
        for j in 0..g.ny {
            *u.at_mut(i, j) += a * envelope * (std::f64::consts::PI * g.y(j)).cos();
        }
    }
}

/// Tridiagonal solve of (I + beta * w * A_y) v = r per x-column, damping the
/// transverse stiffness. A_y is the mirrored Neumann stencil; the system is
/// diagonally dominant.
struct TransversePreconditioner {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TransversePreconditioner {
    fn new(grid_spec: StripGrid, beta_w: f64) -> TransversePreconditioner {
        let ny = grid_spec.ny;
        let r = beta_w / (grid_spec.hy * grid_spec.hy);
        let mut sub = vec![-r; ny];
        let mut sup = vec![-r; ny];
        let diag = vec![1.0 + 2.0 * r; ny];
        sup[0] = -2.0 * r;
        sub[ny - 1] = -2.0 * r;
        TransversePreconditioner { sub, diag, sup }
    }

    fn apply(&self, r: &Field) -> Field {
        let g = r.grid;
        let ny = g.ny;
        let mut out = Field::zeros(g);
        let mut cp = vec![0.0; ny];
        let mut dp = vec![0.0; ny];
        for i in 0..g.nx {
            cp[0] = self.sup[0] / self.diag[0];
            dp[0] = r.at(i, 0) / self.diag[0];
            for j in 1..ny {
                let m = self.diag[j] - self.sub[j] * cp[j - 1];
                cp[j] = self.sup[j] / m;
                dp[j] = (r.at(i, j) - self.sub[j] * dp[j - 1]) / m;
            }
            *out.at_mut(i, ny - 1) = dp[ny - 1];
            for j in (0..ny - 1).rev() {
                let next = out.at(i, j + 1);
                *out.at_mut(i, j) = dp[j] - cp[j] * next;
            }
        }
        out
    }
}

fn run_descent(
    start: Field,
    cfg: &MinimizeConfig,
    params: &ProblemParams,
    mode: MinimizeMode,
) -> Result<MinimizeResult> {
    let grid_spec = start.grid;
    let mut u = start;
    apply_y_perturbation(&mut u, cfg.y_perturbation);
    if cfg.symmetric_x {
        u = enforce_symmetry(&u);
    }
    u.clamp_nonnegative();
    let w = params.y_weight();
    let g = grid_spec;
    let stiffness_x = 4.0 / (g.hx * g.hx) + params.omega.abs() + params.gamma.abs() / g.hx;
    let stiffness_y = w * 4.0 / (g.hy * g.hy);
    let pre = if cfg.precondition_y && g.ny >= 3 {
        Some(TransversePreconditioner::new(g, w))
    } else {
        None
    };
    let effective_stiffness = if pre.is_some() {
        // the implicit y-solve caps the transverse contribution near 1/beta = 1
        stiffness_x + 4.0
    } else {
        stiffness_x + stiffness_y
    };
    let step0 = if cfg.step > 0.0 { cfg.step } else { 1.6 / effective_stiffness };
    let step_max = step0 * 8.0;

    // feasibility of the start
    match mode {
        MinimizeMode::NehariAction => u = nehari_project(&u, params)?,
        MinimizeMode::MassEnergy => functionals::normalize_mass(&mut u, params.mass),
    }
    let mut rep = eval_all(&u, params)?;
    let mut objective = objective_of(&rep, params, mode);
    let mut tau = step0;
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm;
    // Strict descent certification stops once the per-step decrease falls
    // below the objective's roundoff floor; from there the fixed stable step
    // keeps contracting and the gradient norm monitors progress instead.
    let mut certified = true;
    let mut asymptotic_floor = f64::INFINITY;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let gr = match mode {
            MinimizeMode::NehariAction => functionals::grad_action(&u, params),
            MinimizeMode::MassEnergy => functionals::grad_energy(&u, params),
        };
        grad_norm = match mode {
            // the action multiplier is zero, so the full gradient vanishes
            MinimizeMode::NehariAction => grid::norm_quad(&gr),
            MinimizeMode::MassEnergy => {
                let mut tang = gr.clone();
                tang.add_scaled(-grid::inner_quad(&gr, &u) / rep.mass, &u);
                grid::norm_quad(&tang)
            }
        };
        if cfg.log_every > 0 && (it % cfg.log_every == 0) {
            log.push(IterationRecord {
                iter: it,
                objective,
                grad_norm,
                nehari: rep.nehari,
                mass: rep.mass,
                dy_norm: (w * rep.kinetic_y).sqrt(),
            });
        }
        if grad_norm < cfg.tol_grad {
            converged = true;
            break;
        }
        // Tangential projection in the preconditioned metric: with
        // d = P g - alpha P u, alpha = <P g, u>/<P u, u>, the retraction
        // (ray rescaling) has fixed points exactly at constrained stationary
        // points, and <d, g> >= 0 by Cauchy-Schwarz.
        let direction = match &pre {
            Some(p) => {
                let pg = p.apply(&gr);
                let pu = p.apply(&u);
                let alpha = grid::inner_quad(&pg, &u) / grid::inner_quad(&pu, &u);
                let mut d = pg;
                d.add_scaled(-alpha, &pu);
                d
            }
            None => {
                let alpha = grid::inner_quad(&gr, &u) / rep.mass;
                let mut d = gr.clone();
                d.add_scaled(-alpha, &u);
                d
            }
        };
        // re-center gamma = 0 action runs every 50 iterations (translation
        // invariance tie-breaking)
        let recenter = params.gamma == 0.0
            && !cfg.symmetric_x
            && mode == MinimizeMode::NehariAction
            && it % 50 == 49;

        if certified {
            let mut accepted = false;
            for _ in 0..30 {
                let candidate = match build_candidate(&u, &direction, tau, cfg, params, mode, recenter) {
                    Some(c) => c,
                    None => {
                        tau *= 0.5;
                        continue;
                    }
                };
                let crep = eval_all(&candidate, params)?;
                let cobj = objective_of(&crep, params, mode);
                if cobj <= objective {
                    u = candidate;
                    rep = crep;
                    objective = cobj;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
            if accepted {
                tau = (tau * 1.5).min(step_max);
            } else if grad_norm > 1e-3 * (1.0 + objective.abs()) {
                return Err(Error::StepFailure(format!(
                    "no descent after 30 halvings at iteration {it} (grad norm {grad_norm:.3e})"
                )));
            } else {
                certified = false;
                tau = step0;
                asymptotic_floor = grad_norm;
            }
        } else {
            asymptotic_floor = asymptotic_floor.min(grad_norm);
            if grad_norm > 10.0 * asymptotic_floor && grad_norm > 100.0 * cfg.tol_grad {
                return Err(Error::StepFailure(format!(
                    "gradient diverged in the asymptotic phase at iteration {it} \
                     (norm {grad_norm:.3e}, floor {asymptotic_floor:.3e})"
                )));
            }
            match build_candidate(&u, &direction, tau, cfg, params, mode, recenter) {
                Some(candidate) => {
                    rep = eval_all(&candidate, params)?;
                    objective = objective_of(&rep, params, mode);
                    u = candidate;
                }
                None => {
                    tau *= 0.5;
                    continue;
                }
            }
        }
    }

    let recovered_omega = if (params.p - 5.0).abs() > 1e-12 {
        functionals::recover_omega(&u, params).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let centroid = grid::centroid_x(&u);
    let runaway_score = centroid.abs() / (g.x_extent / 2.0);
    let runaway = runaway_score >= 1.0 || rep.trace < 1e-8 * rep.mass;
    let diagnostics = Diagnostics {
        runaway_score,
        runaway,
        dy_norm: (w * rep.kinetic_y).sqrt(),
        sym_defect: symmetry_defect(&u),
    };
    Ok(MinimizeResult {
        field: u,
        report: rep,
        recovered_omega,
        iterations,
        converged,
        diagnostics,
        log,
    })
}

/// One descent trial: step, clamp, optional symmetrization/recentering, then
/// restore feasibility (Nehari scaling or mass normalization). `None` when
/// the constraint projection is undefined for this trial.
fn build_candidate(
    u: &Field,
    direction: &Field,
    tau: f64,
    cfg: &MinimizeConfig,
    params: &ProblemParams,
    mode: MinimizeMode,
    recenter: bool,
) -> Option<Field> {
    let mut v = u.clone();
    v.add_scaled(-tau, direction);
    v.clamp_nonnegative();
    if cfg.symmetric_x {
        v = enforce_symmetry(&v);
    }
    if recenter {
        v = recenter_field(&v);
    }
    match mode {
        MinimizeMode::NehariAction => nehari_project(&v, params).ok(),
        MinimizeMode::MassEnergy => {
            if grid::quadrature(&v, |z| z * z) <= 0.0 {
                return None;
            }
            functionals::normalize_mass(&mut v, params.mass);
            Some(v)
        }
    }
}

fn objective_of(rep: &FunctionalReport, params: &ProblemParams, mode: MinimizeMode) -> f64 {
    match mode {
        // on the manifold S = (p-1)/(2(p+1)) ||u||_{p+1}^{p+1}
        MinimizeMode::NehariAction => {
            (params.p - 1.0) / (2.0 * (params.p + 1.0)) * rep.potential
        }
        MinimizeMode::MassEnergy => rep.energy,
    }
}

/// Shift the field by an integer number of cells so the mass centroid moves
/// to x = 0; cells shifted in from outside are zero.
fn recenter_field(u: &Field) -> Field {
    let g = u.grid;
    let shift = (grid::centroid_x(u) / g.hx).round() as i64;
    if shift == 0 {
        return u.clone();
    }
    let mut out = Field::zeros(g);
    for i in 0..g.nx as i64 {
        let src = i + shift;
        if src >= 0 && src < g.nx as i64 {
            for j in 0..g.ny {
                *out.at_mut(i as usize, j) = u.at(src as usize, j);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm_quad, quadrature};
    use approx::assert_relative_eq;

    fn params_attractive() -> ProblemParams {
        ProblemParams::new(3.0, -1.0, 1.0, 1.0, 1.0)
    }

    fn coarse_grid() -> StripGrid {
        StripGrid::new(12.0, 193, 9).unwrap()
    }

    #[test]
    fn nehari_projection_fixed_point_and_homogeneity() {
        let params = params_attractive();
        let g = coarse_grid();
        let s = Soliton1D::new(1.0, -1.0, 3.0).unwrap();
        let f = s.extend_to_strip(g);

        // fixed point: a field already on the manifold projects to itself
        let on_manifold = nehari_project(&f, &params).unwrap();
        let twice = nehari_project(&on_manifold, &params).unwrap();
        for (a, b) in on_manifold.values.iter().zip(&twice.values) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        let rep = eval_all(&twice, &params).unwrap();
        assert!(rep.nehari.abs() < 1e-10 * rep.nehari_scale(&params));

        // scale invariance of the projection target
        let mut big = f.clone();
        big.scale(7.3);
        let from_big = nehari_project(&big, &params).unwrap();
        for (a, b) in on_manifold.values.iter().zip(&from_big.values) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }

        // 2*soliton projects back near the soliton
        let mut doubled = f.clone();
        doubled.scale(2.0);
        let back = nehari_project(&doubled, &params).unwrap();
        let mut diff = back.clone();
        diff.add_scaled(-1.0, &f);
        assert!(norm_quad(&diff) < 2e-2 * norm_quad(&f));

        // zero field rejected
        assert!(nehari_project(&Field::zeros(g), &params).is_err());
    }

    #[test]
    fn symmetry_enforcement() {
        let g = coarse_grid();
        let even = Field::from_fn(g, |x, y| (-(x * x)).exp() * (1.0 + y));
        let sym = enforce_symmetry(&even);
        for (a, b) in even.values.iter().zip(&sym.values) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        let odd = Field::from_fn(g, |x, _| x * (-(x * x)).exp());
        let killed = enforce_symmetry(&odd);
        assert!(killed.linf() < 1e-15);
        // idempotent
        let anything = Field::from_fn(g, |x, y| x + y * y);
        let once = enforce_symmetry(&anything);
        let twice = enforce_symmetry(&once);
        assert_eq!(once.values, twice.values);
        assert_eq!(symmetry_defect(&once), 0.0);
    }

    #[test]
    fn rearrangement_detector() {
        let g = coarse_grid();
        let s = Soliton1D::new(1.0, -1.0, 3.0).unwrap();
        let f = s.extend_to_strip(g);
        let rep = positivity_and_rearrangement_check(&f);
        assert_eq!(rep.positivity_violation, 0.0);
        assert!(rep.sym_defect < 1e-15);
        assert!(rep.x_monotonicity_violation < 1e-15);
        assert_eq!(rep.y_monotonicity_violation, 0.0);

        let mut flipped = f.clone();
        flipped.scale(-1.0);
        let bad = positivity_and_rearrangement_check(&flipped);
        assert!(bad.positivity_violation > 0.9 * f.linf());
    }

    #[test]
    fn action_descent_reaches_soliton() {
        let params = params_attractive();
        let g = StripGrid::new(16.0, 257, 9).unwrap();
        let cfg = MinimizeConfig {
            max_iters: 60_000,
            tol_grad: 1e-9,
            y_perturbation: 0.02,
            ..MinimizeConfig::default()
        };
        let res = minimize_action(&cfg, &params, g).unwrap();
        assert!(res.converged, "not converged after {} iters", res.iterations);
        // Nehari feasibility after every projection
        assert!(res.report.nehari.abs() < 1e-10 * res.report.nehari_scale(&params));
        // objective log is non-increasing
        for pair in res.log.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12 * (pair[0].objective.abs() + 1.0));
        }
        // matches the extended soliton
        let s = Soliton1D::new(1.0, -1.0, 3.0).unwrap();
        let f = s.extend_to_strip(g);
        let mut diff = res.field.clone();
        diff.add_scaled(-1.0, &f);
        assert!(
            norm_quad(&diff) / norm_quad(&f) < 1e-2,
            "relative L2 error {}",
            norm_quad(&diff) / norm_quad(&f)
        );
        // positive action value
        assert!(res.report.action > 0.0);
        assert!(!res.diagnostics.runaway);
    }

    #[test]
    fn energy_flow_conserves_mass_and_descends() {
        let params = ProblemParams::new(2.5, -1.0, 0.66, 1.0, 1.0);
        let g = StripGrid::new(16.0, 257, 9).unwrap();
        let cfg = MinimizeConfig {
            mode: MinimizeMode::MassEnergy,
            max_iters: 60_000,
            tol_grad: 1e-9,
            ..MinimizeConfig::default()
        };
        let res = minimize_energy(&cfg, &params, g).unwrap();
        assert!(res.converged);
        assert!((res.report.mass - 1.0).abs() < 1e-12);
        for pair in res.log.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12 * (pair[0].objective.abs() + 1.0));
        }
        // energy of the attractive ground state is negative
        assert!(res.report.energy < 0.0);
        // multiplier consistency: grad E + omega u small at convergence
        let mut ge = functionals::grad_energy(&res.field, &params);
        ge.add_scaled(res.recovered_omega, &res.field);
        assert!(
            norm_quad(&ge) < 1e-3,
            "multiplier residual {}",
            norm_quad(&ge)
        );
        assert!(res.recovered_omega > params.gamma * params.gamma / 4.0);
    }

    #[test]
    fn energy_flow_stationary_start_stays_put() {
        // starting from the extended soliton of the right mass, the flow stays
        // within a whisker of it
        let p = 2.5;
        let gamma = -1.0;
        let omega = soliton::omega_of_mass(1.0, gamma, p).unwrap();
        let params = ProblemParams::new(p, gamma, omega, 1.0, 1.0);
        let g = StripGrid::new(16.0, 513, 9).unwrap();
        let cfg = MinimizeConfig {
            mode: MinimizeMode::MassEnergy,
            max_iters: 30_000,
            tol_grad: 1e-10,
            y_perturbation: 0.0,
            ..MinimizeConfig::default()
        };
        let res = minimize_energy(&cfg, &params, g).unwrap();
        let s = Soliton1D::new(omega, gamma, p).unwrap();
        let mut reference = s.extend_to_strip(g);
        functionals::normalize_mass(&mut reference, 1.0);
        let mut diff = res.field.clone();
        diff.add_scaled(-1.0, &reference);
        assert!(
            norm_quad(&diff) < 1e-3,
            "drift from stationary start: {}",
            norm_quad(&diff)
        );
    }

    #[test]
    fn energy_subadditivity_probe() {
        // e(mu)/mu > e(m)/m for mu = m/2 on converged runs
        let p = 2.5;
        let gamma = -1.0;
        let g = StripGrid::new(16.0, 257, 9).unwrap();
        let mut energies = Vec::new();
        for mass in [0.5, 1.0] {
            let omega = soliton::omega_of_mass(mass, gamma, p).unwrap();
            let params = ProblemParams::new(p, gamma, omega, 1.0, mass);
            let cfg = MinimizeConfig {
                mode: MinimizeMode::MassEnergy,
                max_iters: 60_000,
                tol_grad: 1e-9,
                ..MinimizeConfig::default()
            };
            let res = minimize_energy(&cfg, &params, g).unwrap();
            assert!(res.converged);
            energies.push(res.report.energy / mass);
        }
        assert!(
            energies[0] > energies[1],
            "per-mass energies not strictly subadditive: {energies:?}"
        );
    }

    #[test]
    fn runaway_detector_flags_far_bump() {
        let params = ProblemParams::new(3.0, 0.5, 1.0, 1.0, 1.0);
        let g = StripGrid::new(16.0, 257, 9).unwrap();
        let cfg = MinimizeConfig {
            start: StartKind::GaussianBump { x0: 13.0, width: 1.2, amplitude: 1.3 },
            symmetric_x: false,
            max_iters: 300,
            tol_grad: 1e-12,
            y_perturbation: 0.0,
            ..MinimizeConfig::default()
        };
        // gamma > 0 without symmetry is rejected up front
        assert!(matches!(
            minimize_action(&cfg, &params, g),
            Err(Error::InadmissibleParams(_))
        ));
        // with gamma < 0 the far bump is legal and flagged as run-away
        let params = params_attractive();
        let res = minimize_action(&cfg, &params, g).unwrap();
        assert!(res.diagnostics.runaway, "score {}", res.diagnostics.runaway_score);
    }

    #[test]
    fn symmetric_mode_keeps_defect_zero() {
        let params = ProblemParams::new(3.0, 0.4, 1.0, 1.0, 1.0);
        let g = StripGrid::new(16.0, 257, 5).unwrap();
        let cfg = MinimizeConfig {
            symmetric_x: true,
            max_iters: 20_000,
            tol_grad: 1e-7,
            ..MinimizeConfig::default()
        };
        let res = minimize_action(&cfg, &params, g).unwrap();
        assert_eq!(res.diagnostics.sym_defect, 0.0);
    }

    #[test]
    fn start_field_mass_positive() {
        let params = params_attractive();
        let g = coarse_grid();
        for start in [
            StartKind::SolitonExtension,
            StartKind::GaussianBump { x0: 0.0, width: 2.0, amplitude: 1.0 },
            StartKind::Random { amplitude: 0.8 },
        ] {
            let cfg = MinimizeConfig { start, ..MinimizeConfig::default() };
            let u = starting_field(&cfg, &params, g).unwrap();
            assert!(quadrature(&u, |v| v * v) > 0.0);
        }
    }
}
