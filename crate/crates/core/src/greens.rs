//! Spectral Green's function of -Delta + gamma delta_0(x) + omega on the
//! physical strip R x [0, L] with transverse Neumann walls, built by
//! eigenfunction expansion in y. Used to certify computed solutions through
//! the integral identity u = g * |u|^{p-1} u and to pin decay rates.

use crate::error::{Error, Result};
use crate::grid::{Field, StripGrid};
use crate::params::{check_omega_admissible, ProblemParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensSpec {
    pub omega: f64,
    pub gamma: f64,
    /// Physical strip width.
    pub width: f64,
    /// Transverse mode truncation index (inclusive).
    pub k_max: usize,
    /// Restrict the expansion to the even modes cos(2k pi y / L). The full
    /// Neumann basis cos(k pi y / L) is the default: it is complete, while
    /// the even-mode subfamily resolves only sources symmetric about the
    /// strip midline.
    pub even_modes_only: bool,
}

impl GreensSpec {
    pub fn new(omega: f64, gamma: f64, width: f64) -> Result<GreensSpec> {
        check_omega_admissible(omega, gamma)?;
        if !(width > 0.0) {
            return Err(Error::InadmissibleParams(format!(
                "strip width must be positive, got {width}"
            )));
        }
        let mut spec =
            GreensSpec { omega, gamma, width, k_max: 0, even_modes_only: false };
        spec.k_max = spec.default_k_max();
        Ok(spec)
    }

    pub fn from_params(params: &ProblemParams) -> Result<GreensSpec> {
        GreensSpec::new(params.omega, params.gamma, params.l_width)
    }

    /// Smallest k with sqrt(lambda_k + omega) * 0.5 > 25, putting the modal
    /// tail below ~1e-10 at separations >= 0.5.
    pub fn default_k_max(&self) -> usize {
        let target = 50.0f64.mul_add(50.0, -self.omega).max(0.0).sqrt();
        let step = self.mode_wavenumber_step();
        (target * self.width / step).ceil() as usize + 1
    }

    fn mode_wavenumber_step(&self) -> f64 {
        if self.even_modes_only {
            2.0 * std::f64::consts::PI
        } else {
            std::f64::consts::PI
        }
    }

    /// Transverse eigenvalue lambda_k.
    pub fn lambda_k(&self, k: usize) -> f64 {
        let kk = k as f64 * self.mode_wavenumber_step() / self.width;
        kk * kk
    }

    /// Normalized Neumann eigenfunction theta_k evaluated at y in [0, L].
    pub fn theta_k(&self, k: usize, y: f64) -> f64 {
        if k == 0 {
            (1.0 / self.width).sqrt()
        } else {
            let kk = k as f64 * self.mode_wavenumber_step() / self.width;
            (2.0 / self.width).sqrt() * (kk * y).cos()
        }
    }

    fn nu_k(&self, k: usize) -> f64 {
        (self.lambda_k(k) + self.omega).sqrt()
    }
}

/// Lengthwise factor of mode k:
///
/// g_k(x, xi) = 1/(2 nu) [ -gamma/(gamma + 2 nu) e^{-nu (|x| + |xi|)}
///                         + e^{-nu |x - xi|} ],   nu = sqrt(lambda_k + omega).
pub fn mode_coefficient(k: usize, x: f64, xi: f64, spec: &GreensSpec) -> f64 {
    let nu = spec.nu_k(k);
    let defect = -spec.gamma / (spec.gamma + 2.0 * nu) * (-nu * (x.abs() + xi.abs())).exp();
    (defect + (-nu * (x - xi).abs()).exp()) / (2.0 * nu)
}

/// One-sided x-derivative of g_k at x -> 0^rightward/leftward of the defect,
/// used to verify the jump relation d_x g(0+) - d_x g(0-) = gamma g(0).
pub fn mode_defect_jump(k: usize, xi: f64, spec: &GreensSpec) -> (f64, f64) {
    let h = 1e-6;
    let right = (mode_coefficient(k, h, xi, spec) - mode_coefficient(k, 0.0, xi, spec)) / h;
    let left = (mode_coefficient(k, 0.0, xi, spec) - mode_coefficient(k, -h, xi, spec)) / h;
    (right - left, spec.gamma * mode_coefficient(k, 0.0, xi, spec))
}

/// Truncated modal sum g(x, y, xi, eta) = sum_k g_k(x, xi) theta_k(y) theta_k(eta).
/// `y` and `eta` are physical transverse coordinates in [0, L]. On-diagonal
/// evaluation is rejected (logarithmic singularity).
pub fn greens_eval(x: f64, y: f64, xi: f64, eta: f64, spec: &GreensSpec) -> Result<f64> {
    if x == xi && y == eta {
        return Err(Error::InadmissibleParams(
            "greens_eval is singular on the diagonal (x, y) = (xi, eta)".into(),
        ));
    }
    let mut total = 0.0;
    for k in 0..=spec.k_max {
        total += mode_coefficient(k, x, xi, spec) * spec.theta_k(k, y) * spec.theta_k(k, eta);
    }
    Ok(total)
}

/// Geometric bound on the dropped tail of the modal sum at lengthwise
/// separation d = |x - xi| > 0.
pub fn tail_bound(d: f64, spec: &GreensSpec) -> f64 {
    assert!(d > 0.0, "tail bound requires positive separation");
    let mut bound = 0.0;
    let mut k = spec.k_max + 1;
    // |g_k| <= (1 + |gamma|/|gamma + 2 nu|) e^{-nu d} / (2 nu); sum until the
    // increments fall below f64 resolution.
    loop {
        let nu = spec.nu_k(k);
        let amp = (1.0 + spec.gamma.abs() / (spec.gamma + 2.0 * nu).abs()) / (2.0 * nu);
        let term = amp * (-nu * d).exp() * 2.0 / spec.width;
        bound += term;
        if term < 1e-300 || term < 1e-16 * bound || k > spec.k_max + 100_000 {
            break;
        }
        k += 1;
    }
    bound
}

/// Sup discrepancy |u(x, y) - int g(x, y, xi, eta) |u|^{p-1} u dxi deta| over
/// a coarse probe set. The field lives on the normalized strip; the
/// convolution runs in physical coordinates eta = L y. Probe points sit off
/// the defect line, where the quadrature constants of the kink do not stack.
pub fn verify_solution_via_green(u: &Field, params: &ProblemParams) -> Result<f64> {
    let spec = GreensSpec::from_params(params)?;
    let g = u.grid;
    let l = params.l_width;
    // Modes above the transverse Nyquist index alias onto low modes under the
    // grid quadrature; the field cannot carry them, so they are dropped.
    let k_cap = spec.k_max.min(g.ny - 1);
    let probes = default_probe_set(g);
    let mut worst = 0f64;
    for &(pi, pj) in &probes {
        let x = g.x(pi);
        let y_phys = l * g.y(pj);
        let mut conv = 0.0;
        for k in 0..=k_cap {
            let mut modal = 0.0;
            for i in 0..g.nx {
                let gk = mode_coefficient(k, x, g.x(i), &spec);
                let mut eta_sum = 0.0;
                for j in 0..g.ny {
                    let v = u.at(i, j);
                    eta_sum += g.wy(j) * spec.theta_k(k, l * g.y(j))
                        * v.abs().powf(params.p - 1.0) * v;
                }
                modal += g.wx(i) * gk * eta_sum;
            }
            conv += modal * spec.theta_k(k, y_phys);
        }
        // the eta-substitution eta = L y contributes the Jacobian L once
        conv *= l;
        worst = worst.max((u.at(pi, pj) - conv).abs());
    }
    Ok(worst)
}

/// Probe points off the defect line: |x| in [1, X/2] dyadically, three
/// transverse stations.
fn default_probe_set(g: StripGrid) -> Vec<(usize, usize)> {
    let c = g.center_ix();
    let mut xs = Vec::new();
    let mut d = 1.0f64;
    while d <= g.x_extent / 2.0 {
        let off = (d / g.hx).round() as usize;
        if off > 0 && c + off < g.nx {
            xs.push(c + off);
            xs.push(c - off);
        }
        d *= 2.0;
    }
    let js = [0, g.ny / 2, g.ny - 1];
    let mut probes = Vec::new();
    for &i in &xs {
        for &j in &js {
            probes.push((i, j));
        }
    }
    probes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_x, laplacian_y_neumann};
    use crate::soliton::{log_slope_fit, Soliton1D};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec(omega: f64, gamma: f64, width: f64) -> GreensSpec {
        GreensSpec::new(omega, gamma, width).unwrap()
    }

    #[test]
    fn mode_coefficient_free_case_reduces_to_exponential() {
        let s = spec(1.3, 0.0, 1.0);
        for (k, x, xi) in [(0usize, 0.4, -0.7), (2, 1.2, 0.3), (5, -2.0, 2.5)] {
            let nu = (s.lambda_k(k) + s.omega).sqrt();
            let expect = (-nu * (x - xi as f64).abs()).exp() / (2.0 * nu);
            assert_relative_eq!(mode_coefficient(k, x, xi, &s), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn mode_coefficient_central_value() {
        // omega = 1, gamma = -1, k = 0, x = xi = 0: 1/(gamma + 2 sqrt(omega)) = 1
        let s = spec(1.0, -1.0, 1.0);
        assert_relative_eq!(mode_coefficient(0, 0.0, 0.0, &s), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn mode_coefficient_symmetric_in_arguments() {
        let s = spec(0.8, -0.6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let k = rng.gen_range(0..6usize);
            let x = rng.gen_range(-3.0..3.0);
            let xi = rng.gen_range(-3.0..3.0);
            assert_relative_eq!(
                mode_coefficient(k, x, xi, &s),
                mode_coefficient(k, xi, x, &s),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn defect_jump_per_mode() {
        let s = spec(1.0, -0.9, 1.0);
        for k in 0..4 {
            for xi in [0.7, 1.9] {
                let (jump, expect) = mode_defect_jump(k, xi, &s);
                assert!(
                    (jump - expect).abs() < 1e-4 * expect.abs().max(1e-12),
                    "mode {k}: jump {jump} vs gamma*g(0) {expect}"
                );
            }
        }
    }

    #[test]
    fn modal_tail_is_negligible_off_diagonal() {
        let base = spec(1.0, -1.0, 1.0);
        let mut doubled = base;
        doubled.k_max *= 2;
        for (x, y, xi, eta) in [(0.9, 0.2, 0.2, 0.7), (2.0, 0.9, 0.5, 0.1)] {
            let a = greens_eval(x, y, xi, eta, &base).unwrap();
            let b = greens_eval(x, y, xi, eta, &doubled).unwrap();
            assert!((a - b).abs() < 1e-10, "truncation drift {}", (a - b).abs());
        }
        assert!(tail_bound(0.5, &base) < 1e-10);
        assert!(greens_eval(0.3, 0.4, 0.3, 0.4, &base).is_err());
    }

    #[test]
    fn uniform_source_collapses_to_mode_zero() {
        // integrating the kernel against a y-constant source leaves the 1D
        // delta-line kernel g_0
        let s = spec(1.0, -0.5, 0.7);
        let n = 4001;
        let h = s.width / (n - 1) as f64;
        let (x, y, xi) = (1.1, 0.3, -0.4);
        let mut total = 0.0;
        for j in 0..n {
            let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
            total += w * greens_eval(x, y, xi, j as f64 * h, &s).unwrap();
        }
        assert_relative_eq!(total, mode_coefficient(0, x, xi, &s), epsilon = 1e-9);
    }

    #[test]
    fn stencil_residual_refines_at_second_order() {
        // away from the source line and the defect, the truncated sum solves
        // the PDE exactly, so the discrete residual is pure stencil error
        let l = 1.0;
        let s = spec(1.0, -1.0, l);
        let (xi, eta) = (0.0, 0.35);
        let residual = |nx: usize, ny: usize| {
            let g = StripGrid::new(8.0, nx, ny).unwrap();
            let f = Field::from_fn(g, |x, y| greens_eval(x, l * y, xi, eta, &s).unwrap());
            let lx = laplacian_x(&f);
            let ly = laplacian_y_neumann(&f);
            let mut worst = 0f64;
            for i in 1..g.nx - 1 {
                let x = g.x(i);
                if (x - xi).abs() < 1.0 || x.abs() < 1.0 || g.x_extent - x.abs() < 1.0 {
                    continue;
                }
                for j in 0..g.ny {
                    let r = -lx.at(i, j) - ly.at(i, j) / (l * l) + s.omega * f.at(i, j);
                    worst = worst.max(r.abs());
                }
            }
            worst
        };
        let coarse = residual(129, 9);
        let fine = residual(257, 17);
        let order = (coarse / fine).log2();
        assert!(order >= 1.9, "measured order {order}");
    }

    #[test]
    fn kernel_decays_at_rate_sqrt_omega() {
        let s = spec(1.44, -0.8, 0.5);
        let eta = 0.2;
        let xi = 0.3;
        let pts: Vec<(f64, f64)> = (0..=30)
            .map(|k| 2.0 + 0.25 * k as f64)
            .map(|d| (d, greens_eval(xi + d, eta, xi, eta, &s).unwrap()))
            .collect();
        let slope = log_slope_fit(&pts);
        let rate = s.omega.sqrt();
        assert!(
            (slope + rate).abs() <= 0.01 * rate,
            "slope {slope} vs -sqrt(omega) {}",
            -rate
        );
    }

    #[test]
    fn verification_accepts_soliton_and_detects_perturbation() {
        let params = ProblemParams::new(3.0, -1.0, 1.0, 0.3, 1.0);
        let s = Soliton1D::new(1.0, -1.0, 3.0).unwrap();
        let coarse = StripGrid::new(16.0, 257, 9).unwrap();
        let fine = StripGrid::new(16.0, 513, 9).unwrap();
        let dc = verify_solution_via_green(&s.extend_to_strip(coarse), &params).unwrap();
        let df = verify_solution_via_green(&s.extend_to_strip(fine), &params).unwrap();
        assert!(df < dc, "discrepancy not decreasing: {dc} -> {df}");
        assert!(df < 1e-3, "fine-grid discrepancy {df}");

        // zero field verifies trivially
        let z = Field::zeros(coarse);
        assert_eq!(verify_solution_via_green(&z, &params).unwrap(), 0.0);

        // an order-0.1 bump shows up at order 0.1
        let mut bumped = s.extend_to_strip(coarse);
        let bump = Field::from_fn(coarse, |x, _| 0.1 * (-((x - 1.0) * (x - 1.0))).exp());
        bumped.add_scaled(1.0, &bump);
        let db = verify_solution_via_green(&bumped, &params).unwrap();
        assert!(db > 0.02 && db < 0.5, "detector response {db}");
    }

    #[test]
    fn even_modes_flag_reproduces_restricted_sum() {
        let mut s = spec(1.0, -1.0, 1.0);
        let full = greens_eval(0.7, 0.3, -0.2, 0.6, &s).unwrap();
        s.even_modes_only = true;
        s.k_max = s.default_k_max();
        let even = greens_eval(0.7, 0.3, -0.2, 0.6, &s).unwrap();
        assert!((full - even).abs() > 1e-6, "restricted sum should differ off-midline");
        // for sources symmetric about the midline the two sums agree:
        // average the source over eta and L - eta
        let avg_full = 0.5
            * (greens_eval(0.7, 0.3, -0.2, 0.6, &spec(1.0, -1.0, 1.0)).unwrap()
                + greens_eval(0.7, 0.3, -0.2, 0.4, &spec(1.0, -1.0, 1.0)).unwrap());
        let avg_even = 0.5
            * (greens_eval(0.7, 0.3, -0.2, 0.6, &s).unwrap()
                + greens_eval(0.7, 0.3, -0.2, 0.4, &s).unwrap());
        assert_relative_eq!(avg_full, avg_even, epsilon = 1e-9);
    }
}
