//! Closed-form 1D solitons of -u'' + omega u + gamma delta_0 u = |u|^{p-1} u
//! and their mass/energy maps. These serve as analytic oracles for the strip
//! minimizers: the profile is glued from free-soliton tails with the jump
//! u'(0+) - u'(0-) = gamma u(0) absorbed into a sech phase shift.

use crate::error::{Error, Result};
use crate::grid::{Field, StripGrid};

/// Closed-form 1D ground-state descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Soliton1D {
    pub omega: f64,
    pub gamma: f64,
    pub p: f64,
}

impl Soliton1D {
    pub fn new(omega: f64, gamma: f64, p: f64) -> Result<Soliton1D> {
        if !(p > 1.0) {
            return Err(Error::InadmissibleParams(format!("p must exceed 1, got {p}")));
        }
        // The sech phase shift needs omega > gamma^2/4 for either sign of gamma.
        if !(omega > gamma * gamma / 4.0) {
            return Err(Error::InadmissibleParams(format!(
                "soliton requires omega > gamma^2/4 (omega = {omega}, gamma = {gamma})"
            )));
        }
        Ok(Soliton1D { omega, gamma, p })
    }

    /// Phase shift entering the profile: sech(c|x| - t0) with
    /// t0 = atanh(gamma / (2 sqrt(omega))).
    fn t0(&self) -> f64 {
        atanh(self.gamma / (2.0 * self.omega.sqrt()))
    }

    /// Lower limit of the sech-power integrals after substitution, -t0.
    fn shift(&self) -> f64 {
        -self.t0()
    }

    fn kappa(&self) -> f64 {
        (self.p + 1.0) * self.omega / 2.0
    }

    /// Pointwise profile value phi(x).
    pub fn eval_profile(&self, x: f64) -> f64 {
        let c = (self.p - 1.0) * self.omega.sqrt() / 2.0;
        let z = c * x.abs() - self.t0();
        let s = sech(z);
        self.kappa().powf(1.0 / (self.p - 1.0)) * s.powf(2.0 / (self.p - 1.0))
    }

    /// phi(0)^2 = ((p+1)/2 (omega - gamma^2/4))^{2/(p-1)}.
    pub fn peak_sq(&self) -> f64 {
        ((self.p + 1.0) / 2.0 * (self.omega - self.gamma * self.gamma / 4.0))
            .powf(2.0 / (self.p - 1.0))
    }

    /// Prefactor of the mass-frequency relation, M = Q(omega, gamma) omega^{(5-p)/(2(p-1))}.
    pub fn q_factor(&self) -> f64 {
        let p = self.p;
        ((p + 1.0) / 2.0).powf(2.0 / (p - 1.0)) * 4.0 / (p - 1.0)
            * sech_power_integral(self.shift(), 4.0 / (p - 1.0))
    }

    /// 1D mass M = int phi^2 dx.
    pub fn mass(&self) -> f64 {
        self.q_factor() * self.omega.powf((5.0 - self.p) / (2.0 * (self.p - 1.0)))
    }

    /// int |phi|^q dx for q >= 2, via the sech-power reduction.
    pub fn lp_norm_pow(&self, q: f64) -> f64 {
        let p = self.p;
        self.kappa().powf(q / (p - 1.0)) * 4.0 / ((p - 1.0) * self.omega.sqrt())
            * sech_power_integral(self.shift(), 2.0 * q / (p - 1.0))
    }

    /// int phi'^2 dx.
    pub fn kinetic(&self) -> f64 {
        let p = self.p;
        let s = 4.0 / (p - 1.0);
        let a = self.shift();
        // phi'^2 = kappa^{2/(p-1)} omega sech^s tanh^2, and tanh^2 = 1 - sech^2.
        self.kappa().powf(2.0 / (p - 1.0)) * self.omega * 4.0 / ((p - 1.0) * self.omega.sqrt())
            * (sech_power_integral(a, s) - sech_power_integral(a, s + 2.0))
    }

    /// 1D energy E = 1/2 int phi'^2 + gamma/2 phi(0)^2 - 1/(p+1) int phi^{p+1}.
    pub fn energy(&self) -> f64 {
        0.5 * self.kinetic() + 0.5 * self.gamma * self.peak_sq()
            - self.lp_norm_pow(self.p + 1.0) / (self.p + 1.0)
    }

    /// Residual of 2(p+3)E = -(5-p) omega M + (p-1) gamma phi(0)^2; zero for
    /// true solutions up to quadrature tolerance.
    pub fn virial_identity_residual(&self) -> f64 {
        2.0 * (self.p + 3.0) * self.energy() + (5.0 - self.p) * self.omega * self.mass()
            - (self.p - 1.0) * self.gamma * self.peak_sq()
    }

    /// Extend the profile as a y-constant field on the strip grid.
    pub fn extend_to_strip(&self, grid: StripGrid) -> Field {
        let mut f = Field::zeros(grid);
        for i in 0..grid.nx {
            let v = self.eval_profile(grid.x(i));
            for j in 0..grid.ny {
                *f.at_mut(i, j) = v;
            }
        }
        f
    }
}

fn sech(z: f64) -> f64 {
    1.0 / z.cosh()
}

fn atanh(z: f64) -> f64 {
    0.5 * ((1.0 + z) / (1.0 - z)).ln()
}

/// int_a^infty sech^s(u) du. Closed forms for s = 2, 4, 6; adaptive Simpson
/// otherwise (relative tolerance ~1e-13).
pub fn sech_power_integral(a: f64, s: f64) -> f64 {
    debug_assert!(s > 0.0);
    let t = a.tanh();
    if s == 2.0 {
        return 1.0 - t;
    }
    if s == 4.0 {
        return 2.0 / 3.0 - t + t * t * t / 3.0;
    }
    if s == 6.0 {
        let anti = |t: f64| t - 2.0 * t.powi(3) / 3.0 + t.powi(5) / 5.0;
        return anti(1.0) - anti(t);
    }
    // sech^s(u) <= 2^s e^{-s u} for u >= 0, so the tail beyond `hi` is negligible.
    let hi = a.max(0.0) + 50.0 / s.max(0.4);
    adaptive_simpson(&|u: f64| sech(u).powf(s), a, hi, 1e-13, 48)
}

/// Adaptive Simpson quadrature with absolute/relative tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol * (1.0 + (left + right).abs()) {
        left + right + err / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Invert the mass-frequency map on its monotone branch: find the unique
/// omega > gamma^2/4 with mass(omega) = m.
///
/// Monotone branches: gamma < 0 with 1 < p <= 5; gamma = 0 with 1 < p < 5;
/// gamma > 0 with 1 < p <= 3 (here small masses are inadmissible and are
/// rejected). Everything else is a branch-ambiguity error.
pub fn omega_of_mass(m: f64, gamma: f64, p: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InadmissibleParams(format!("mass must be positive, got {m}")));
    }
    if !(p > 1.0) {
        return Err(Error::InadmissibleParams(format!("p must exceed 1, got {p}")));
    }
    let monotone = if gamma < 0.0 {
        p <= 5.0
    } else if gamma == 0.0 {
        p < 5.0
    } else {
        p <= 3.0
    };
    if !monotone {
        return Err(Error::BranchAmbiguity(format!(
            "mass-frequency map is not monotone for gamma = {gamma}, p = {p}"
        )));
    }
    let mass_at = |omega: f64| Soliton1D { omega, gamma, p }.mass();
    let mut lo = gamma * gamma / 4.0 * (1.0 + 1e-12) + 1e-300;
    if gamma > 0.0 {
        let floor = mass_at(lo.max(gamma * gamma / 4.0 + 1e-9));
        if m <= floor {
            return Err(Error::InadmissibleParams(format!(
                "mass {m} at or below the inversion floor {floor:.6e} for gamma = {gamma}"
            )));
        }
    }
    let mut hi = (gamma * gamma / 4.0).max(1.0);
    let mut guard = 0;
    while mass_at(hi) < m {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::BracketNotFound(format!(
                "mass {m} not bracketed for gamma = {gamma}, p = {p}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_at(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let omega = 0.5 * (lo + hi);
    let residual = (mass_at(omega) - m).abs();
    // the relative contract bottoms out at the f64 resolution of the mass map
    let tol = (1e-10 * m).max(8.0 * f64::EPSILON * (1.0 + gamma.abs()));
    if residual > tol {
        return Err(Error::Consistency(format!(
            "mass inversion residual {residual:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok(omega)
}

/// Least-squares slope of log(values) against positions; used for decay-rate fits.
pub fn log_slope_fit(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|(_, v)| *v > 0.0).map(|&(x, v)| (x, v.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
