//! Discretization of the truncated normalized strip [-X, X] x [0, 1].
//!
//! The transverse direction carries Neumann structure (mirrored stencils),
//! the lengthwise direction a homogeneous Dirichlet closure modelling decay
//! truncation. All quadrature is trapezoid so that discrete functionals and
//! their gradients stay exactly consistent.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Truncated strip grid. `nx` is odd so that x = 0 is a grid line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub x_extent: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl StripGrid {
    pub fn new(x_extent: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_extent > 0.0) || !x_extent.is_finite() {
            return Err(Error::Grid(format!("x_extent must be positive, got {x_extent}")));
        }
        if nx < 3 || nx % 2 == 0 {
            return Err(Error::Grid(format!("nx must be an odd integer >= 3, got {nx}")));
        }
        if ny < 2 {
            return Err(Error::Grid(format!("ny must be >= 2, got {ny}")));
        }
        Ok(StripGrid {
            x_extent,
            nx,
            ny,
            hx: 2.0 * x_extent / (nx - 1) as f64,
            hy: 1.0 / (ny - 1) as f64,
        })
    }

    /// Default truncation for a given frequency: X = max(16, 10/sqrt(omega - gamma^2/4)).
    pub fn default_extent(omega: f64, gamma: f64) -> f64 {
        let shifted = (omega - gamma * gamma / 4.0).max(1e-12);
        16f64.max(10.0 / shifted.sqrt())
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.x_extent + self.hx * i as f64
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.hy * j as f64
    }

    /// Index of the x = 0 grid line.
    #[inline]
    pub fn center_ix(&self) -> usize {
        (self.nx - 1) / 2
    }

    /// Trapezoid weight in x.
    #[inline]
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.hx
        } else {
            self.hx
        }
    }

    /// Trapezoid weight in y.
    #[inline]
    pub fn wy(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny - 1 {
            0.5 * self.hy
        } else {
            self.hy
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Real-valued grid function, row-major with index `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: StripGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: StripGrid) -> Field {
        Field { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: StripGrid, mut f: impl FnMut(f64, f64) -> f64) -> Field {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                values.push(f(x, grid.y(j)));
            }
        }
        Field { grid, values }
    }

    pub fn from_values(grid: StripGrid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Grid("field contains non-finite entries".into()));
        }
        Ok(Field { grid, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.values[i * self.grid.ny + j]
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// self += c * other
    pub fn add_scaled(&mut self, c: f64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn clamp_nonnegative(&mut self) {
        for v in &mut self.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// 2D trapezoid quadrature of `integrand` applied pointwise to the field values.
pub fn quadrature(u: &Field, integrand: impl Fn(f64) -> f64) -> f64 {
    let g = &u.grid;
    let mut total = 0.0;
    for i in 0..g.nx {
        let wx = g.wx(i);
        let mut row = 0.0;
        for j in 0..g.ny {
            row += g.wy(j) * integrand(u.at(i, j));
        }
        total += wx * row;
    }
    total
}

/// Quadrature-weighted inner product of two fields.
pub fn inner_quad(u: &Field, v: &Field) -> f64 {
    debug_assert_eq!(u.grid, v.grid);
    let g = &u.grid;
    let mut total = 0.0;
    for i in 0..g.nx {
        let wx = g.wx(i);
        let mut row = 0.0;
        for j in 0..g.ny {
            row += g.wy(j) * u.at(i, j) * v.at(i, j);
        }
        total += wx * row;
    }
    total
}

/// Quadrature-weighted L2 norm.
pub fn norm_quad(u: &Field) -> f64 {
    inner_quad(u, u).sqrt()
}

/// Second-order centered d^2/dx^2 with homogeneous Dirichlet closure at x = +/-X.
pub fn laplacian_x(u: &Field) -> Field {
    let g = u.grid;
    let mut out = Field::zeros(g);
    let h2 = g.hx * g.hx;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let left = if i == 0 { 0.0 } else { u.at(i - 1, j) };
            let right = if i == g.nx - 1 { 0.0 } else { u.at(i + 1, j) };
            *out.at_mut(i, j) = (left - 2.0 * u.at(i, j) + right) / h2;
        }
    }
    out
}

/// Second-order centered d^2/dy^2 with ghost-point (mirror) Neumann closure
/// at y = 0 and y = 1. Requires ny >= 3.
pub fn laplacian_y_neumann(u: &Field) -> Field {
    let g = u.grid;
    assert!(g.ny >= 3, "laplacian_y_neumann requires ny >= 3");
    let mut out = Field::zeros(g);
    let h2 = g.hy * g.hy;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let below = if j == 0 { u.at(i, 1) } else { u.at(i, j - 1) };
            let above = if j == g.ny - 1 { u.at(i, g.ny - 2) } else { u.at(i, j + 1) };
            *out.at_mut(i, j) = (below - 2.0 * u.at(i, j) + above) / h2;
        }
    }
    out
}

/// Transverse trapezoid quadrature of |u(0, .)|^2 on the x = 0 grid line.
pub fn trace_sq(u: &Field) -> f64 {
    let g = u.grid;
    let c = g.center_ix();
    let mut total = 0.0;
    for j in 0..g.ny {
        let v = u.at(c, j);
        total += g.wy(j) * v * v;
    }
    total
}

/// Staggered lengthwise Dirichlet energy: sum over x-gaps of (du/hx)^2,
/// including the two ghost gaps to the zero extension beyond +/-X. This is
/// the exact Dirichlet energy of the piecewise-linear interpolant extended
/// by zero, and the quantity whose exact gradient the minimizers use.
pub fn kinetic_x(u: &Field) -> f64 {
    let g = u.grid;
    let mut total = 0.0;
    for j in 0..g.ny {
        let wy = g.wy(j);
        let mut col = 0.0;
        for i in 0..g.nx - 1 {
            let d = u.at(i + 1, j) - u.at(i, j);
            col += d * d;
        }
        let first = u.at(0, j);
        let last = u.at(g.nx - 1, j);
        col += first * first + last * last;
        total += wy * col / g.hx;
    }
    total
}

/// Staggered transverse energy: sum over y-gaps of (du/hy)^2 (natural Neumann,
/// no ghost gaps). Satisfies <-laplacian_y_neumann(u), u>_quad = kinetic_y(u)
/// exactly.
pub fn kinetic_y(u: &Field) -> f64 {
    let g = u.grid;
    let mut total = 0.0;
    for i in 0..g.nx {
        let wx = g.wx(i);
        let mut row = 0.0;
        for j in 0..g.ny - 1 {
            let d = u.at(i, j + 1) - u.at(i, j);
            row += d * d;
        }
        total += wx * row / g.hy;
    }
    total
}

/// Mass centroid along the strip, quad(x u^2) / quad(u^2). Returns 0 for the
/// zero field.
pub fn centroid_x(u: &Field) -> f64 {
    let g = u.grid;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g.nx {
        let wx = g.wx(i);
        let x = g.x(i);
        for j in 0..g.ny {
            let w = wx * g.wy(j) * u.at(i, j) * u.at(i, j);
            num += x * w;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(x: f64, nx: usize, ny: usize) -> StripGrid {
        StripGrid::new(x, nx, ny).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(StripGrid::new(8.0, 4, 5).is_err());
        assert!(StripGrid::new(8.0, 1, 5).is_err());
        assert!(StripGrid::new(8.0, 5, 1).is_err());
        assert!(StripGrid::new(-1.0, 5, 5).is_err());
        let g = grid(8.0, 17, 5);
        assert_eq!(g.x(g.center_ix()), 0.0);
        assert_relative_eq!(g.hx, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn laplacian_x_on_zero_and_quadratic() {
        let g = grid(4.0, 33, 5);
        let zero = Field::zeros(g);
        assert!(laplacian_x(&zero).values.iter().all(|&v| v == 0.0));

        let u = Field::from_fn(g, |x, _| x * x);
        let lap = laplacian_x(&u);
        for i in 1..g.nx - 1 {
            for j in 0..g.ny {
                assert_relative_eq!(lap.at(i, j), 2.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_x_refinement_order() {
        // u = cos(pi x / X) vanishes at +/-X, so the Dirichlet closure is consistent.
        let x_ext = 4.0;
        let err = |nx: usize| {
            let g = grid(x_ext, nx, 3);
            let u = Field::from_fn(g, |x, _| (PI * x / x_ext).cos());
            let lap = laplacian_x(&u);
            let mut e = 0f64;
            for i in 1..g.nx - 1 {
                let x = g.x(i);
                let exact = -(PI / x_ext).powi(2) * (PI * x / x_ext).cos();
                e = e.max((lap.at(i, 0) - exact).abs());
            }
            e
        };
        let e1 = err(65);
        let e2 = err(129);
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "measured order {order}");
    }

    #[test]
    fn laplacian_y_constant_and_cosine() {
        let g = grid(2.0, 5, 33);
        let c = Field::from_fn(g, |_, _| 3.25);
        assert!(laplacian_y_neumann(&c).values.iter().all(|&v| v.abs() < 1e-12));

        let err = |ny: usize| {
            let g = grid(2.0, 5, ny);
            let u = Field::from_fn(g, |_, y| (PI * y).cos());
            let lap = laplacian_y_neumann(&u);
            let mut e = 0f64;
            for j in 0..g.ny {
                let exact = -PI * PI * (PI * g.y(j)).cos();
                e = e.max((lap.at(2, j) - exact).abs());
            }
            e
        };
        let e1 = err(33);
        let e2 = err(65);
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "measured order {order}");
    }

    #[test]
    fn laplacian_y_linear_field_boundary_defect() {
        // y-linear fields violate the Neumann class; the mirrored stencil still
        // returns a value (the documented ghost closure), nonzero at the walls.
        let g = grid(2.0, 5, 17);
        let u = Field::from_fn(g, |_, y| y);
        let lap = laplacian_y_neumann(&u);
        for i in 0..g.nx {
            for j in 1..g.ny - 1 {
                assert!(lap.at(i, j).abs() < 1e-10);
            }
            assert_relative_eq!(lap.at(i, 0), 2.0 / g.hy, max_relative = 1e-12);
            assert_relative_eq!(lap.at(i, g.ny - 1), -2.0 / g.hy, max_relative = 1e-12);
        }
    }

    #[test]
    fn summation_by_parts_exact() {
        let g = grid(3.0, 21, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = Field::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
        let lap = laplacian_y_neumann(&u);
        let lhs = -inner_quad(&lap, &u);
        let rhs = kinetic_y(&u);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn trace_of_unit_constant_and_cosine() {
        let g = grid(8.0, 65, 129);
        let one = Field::from_fn(g, |_, _| 1.0);
        assert_relative_eq!(trace_sq(&one), 1.0, max_relative = 1e-14);

        // int_0^1 cos^2(2 pi y) dy = 1/2 exactly; trapezoid is exact for this
        // trigonometric polynomial up to roundoff.
        let u = Field::from_fn(g, |_, y| (2.0 * PI * y).cos());
        assert_relative_eq!(trace_sq(&u), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn trace_of_defect_eigenfunction() {
        // f_gamma(x,y) = sqrt(-gamma/2) e^{gamma |x| / 2} on the unit-width strip:
        // trace_sq = -gamma/2, so gamma * trace_sq = -gamma^2/2.
        let gamma = -1.0f64;
        let g = grid(16.0, 513, 9);
        let f = Field::from_fn(g, |x, _| (-gamma / 2.0).sqrt() * (gamma * x.abs() / 2.0).exp());
        assert_relative_eq!(trace_sq(&f), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_of_unit_field_and_defect_mass() {
        let g = grid(16.0, 513, 9);
        let one = Field::from_fn(g, |_, _| 1.0);
        assert_relative_eq!(quadrature(&one, |v| v * v), 32.0, max_relative = 1e-13);

        let gamma = -1.0f64;
        let f = Field::from_fn(g, |x, _| (-gamma / 2.0).sqrt() * (gamma * x.abs() / 2.0).exp());
        // ||f||_L2 = 1 up to the h^2/12 kink term plus the e^{gamma X}
        // truncation tail (< 1e-6 for X >= 16); both refine at second order
        let err = (quadrature(&f, |v| v * v) - 1.0).abs();
        assert!(err < g.hx * g.hx / 6.0, "mass defect {err}");
        let g2 = grid(16.0, 1025, 9);
        let f2 = Field::from_fn(g2, |x, _| (-gamma / 2.0).sqrt() * (gamma * x.abs() / 2.0).exp());
        let err2 = (quadrature(&f2, |v| v * v) - 1.0).abs();
        assert!(err2 < err / 3.0, "kink error not refining: {err} -> {err2}");
    }

    #[test]
    fn quadrature_of_sech_quartic() {
        // int_R 4 sech^4(x) dx = 16/3 for u = sqrt(2) sech(x) extended in y.
        let g = grid(16.0, 1025, 7);
        let u = Field::from_fn(g, |x, _| 2f64.sqrt() / x.cosh());
        assert_relative_eq!(quadrature(&u, |v| v.powi(4)), 16.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn trace_inequality_randomized() {
        // Discrete analogue of the H^{1/2} trace control:
        // trace_sq(u) <= C ||u|| ||d_x u|| with a modest constant.
        let g = grid(6.0, 49, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            // random smooth-ish bumps
            let a: f64 = rng.gen_range(0.3..2.0);
            let x0: f64 = rng.gen_range(-2.0..2.0);
            let k: f64 = rng.gen_range(0.5..2.5);
            let m: f64 = rng.gen_range(0.0..2.0);
            let u = Field::from_fn(g, |x, y| {
                a * (-(k * (x - x0)).powi(2)).exp() * (1.0 + 0.3 * (m * PI * y).cos())
            });
            let t = trace_sq(&u);
            let l2 = norm_quad(&u);
            let dx = kinetic_x(&u).sqrt();
            if l2 > 0.0 && dx > 0.0 {
                worst = worst.max(t / (l2 * dx));
            }
        }
        assert!(worst <= 2.5, "trace constant estimate {worst}");
        assert!(worst > 0.1);
    }

    #[test]
    fn centroid_tracks_bump_position() {
        let g = grid(8.0, 129, 5);
        let u = Field::from_fn(g, |x, _| (-(x - 2.0) * (x - 2.0)).exp());
        assert_relative_eq!(centroid_x(&u), 2.0, epsilon = 1e-6);
        assert_eq!(centroid_x(&Field::zeros(g)), 0.0);
    }
}
