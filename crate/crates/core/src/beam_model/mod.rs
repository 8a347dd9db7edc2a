//! Physical parameters, damping profiles, grids and the discrete energy of
//! the Timoshenko system
//!
//! ```text
//! rho  u_tt = K (u_x - v)_x
//! I_rho v_tt = EI v_xx + K (u_x - v) - b(x) v_t
//! u = v = 0 at x = 0 and x = l
//! ```
//!
//! Nodal fields live on `x_j = j h`, `j = 0..=n`. Gradients and shear strains
//! live on the `n` cells between consecutive nodes.

mod config;

pub use config::{load_config, parse_config, Config, RunOptions};

use crate::error::{Error, Result};

/// Positive physical constants of the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub rho: f64,
    pub k: f64,
    pub i_rho: f64,
    pub ei: f64,
    pub l: f64,
}

impl BeamParams {
    pub fn new(rho: f64, k: f64, i_rho: f64, ei: f64, l: f64) -> Result<Self> {
        let params = BeamParams { rho, k, i_rho, ei, l };
        params.validate()?;
        Ok(params)
    }

    /// All constants equal to one, beam length `l`.
    pub fn unit(l: f64) -> Self {
        BeamParams {
            rho: 1.0,
            k: 1.0,
            i_rho: 1.0,
            ei: 1.0,
            l,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("rho", self.rho),
            ("K", self.k),
            ("I_rho", self.i_rho),
            ("EI", self.ei),
            ("l", self.l),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Shear wave speed `sqrt(K / rho)`.
    pub fn shear_speed(&self) -> f64 {
        (self.k / self.rho).sqrt()
    }

    /// Bending wave speed `sqrt(EI / I_rho)`.
    pub fn bending_speed(&self) -> f64 {
        (self.ei / self.i_rho).sqrt()
    }

    pub fn max_speed(&self) -> f64 {
        self.shear_speed().max(self.bending_speed())
    }

    /// `K / rho != EI / I_rho`, compared with a relative tolerance of 1e-12.
    pub fn distinct_speeds(&self) -> bool {
        let a = self.k / self.rho;
        let b = self.ei / self.i_rho;
        (a - b).abs() > 1e-12 * (a + b)
    }
}

/// Nonnegative damping coefficient `b(x)` on `[0, l]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingProfile {
    Zero,
    Constant(f64),
    /// `value` on the closed interval `[b0, b1]`, zero elsewhere.
    Localized {
        value: f64,
        b0: f64,
        b1: f64,
    },
    /// Equispaced samples over `[0, l]` (first sample at 0, last at `l`),
    /// linearly interpolated.
    Tabulated(Vec<f64>),
}

impl DampingProfile {
    pub fn validate(&self, l: f64) -> Result<()> {
        match self {
            DampingProfile::Zero => Ok(()),
            DampingProfile::Constant(value) => {
                if !value.is_finite() || *value < 0.0 {
                    return Err(Error::invalid("b", format!("constant must be >= 0, got {value}")));
                }
                Ok(())
            }
            DampingProfile::Localized { value, b0, b1 } => {
                if !value.is_finite() || *value <= 0.0 {
                    return Err(Error::invalid("b", format!("localized value must be > 0, got {value}")));
                }
                if !(b0.is_finite() && b1.is_finite()) || *b0 < 0.0 || *b1 > l {
                    return Err(Error::invalid("b", format!("[{b0}, {b1}] must lie inside [0, {l}]")));
                }
                if b1 <= b0 {
                    return Err(Error::invalid("b", format!("need b0 < b1, got b0 = {b0}, b1 = {b1}")));
                }
                Ok(())
            }
            DampingProfile::Tabulated(samples) => {
                if samples.len() < 2 {
                    return Err(Error::invalid("b", "a table needs at least two samples"));
                }
                if let Some(bad) = samples.iter().find(|s| !s.is_finite() || **s < 0.0) {
                    return Err(Error::invalid("b", format!("table entries must be >= 0, got {bad}")));
                }
                Ok(())
            }
        }
    }

    /// `b(x)` for `x` in `[0, l]`.
    pub fn eval(&self, x: f64, l: f64) -> f64 {
        match self {
            DampingProfile::Zero => 0.0,
            DampingProfile::Constant(value) => *value,
            DampingProfile::Localized { value, b0, b1 } => {
                // nodes placed on the breakpoints must count as inside
                let tol = 1e-12 * l;
                if x >= b0 - tol && x <= b1 + tol {
                    *value
                } else {
                    0.0
                }
            }
            DampingProfile::Tabulated(samples) => {
                let m = samples.len() - 1;
                let s = (x / l).clamp(0.0, 1.0) * m as f64;
                let i = (s.floor() as usize).min(m - 1);
                let w = s - i as f64;
                samples[i] * (1.0 - w) + samples[i + 1] * w
            }
        }
    }

    /// Exact `∫_a^c b(x) dx` for `0 <= a <= c <= l`.
    pub fn integral_between(&self, a: f64, c: f64, l: f64) -> f64 {
        if c <= a {
            return 0.0;
        }
        match self {
            DampingProfile::Zero => 0.0,
            DampingProfile::Constant(value) => value * (c - a),
            DampingProfile::Localized { value, b0, b1 } => {
                let lo = a.max(*b0);
                let hi = c.min(*b1);
                if hi > lo {
                    value * (hi - lo)
                } else {
                    0.0
                }
            }
            DampingProfile::Tabulated(samples) => {
                let m = samples.len() - 1;
                let step = l / m as f64;
                let mut total = 0.0;
                for i in 0..m {
                    let x0 = i as f64 * step;
                    let x1 = x0 + step;
                    let lo = a.max(x0);
                    let hi = c.min(x1);
                    if hi > lo {
                        // the integrand is linear on the piece, so the midpoint rule is exact
                        total += self.eval(0.5 * (lo + hi), l) * (hi - lo);
                    }
                }
                total
            }
        }
    }

    pub fn integral(&self, l: f64) -> f64 {
        self.integral_between(0.0, l, l)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DampingProfile::Zero => true,
            DampingProfile::Constant(v) => *v == 0.0,
            DampingProfile::Localized { .. } => false,
            DampingProfile::Tabulated(s) => s.iter().all(|v| *v == 0.0),
        }
    }
}

/// Uniform grid on `[0, l]` with `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub l: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "cell count must be positive"));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::invalid("l", format!("must be > 0, got {l}")));
        }
        Ok(Grid { n, l })
    }

    /// Grid for a simulation or eigensolve, which needs at least 8 cells.
    pub fn for_solver(n: usize, l: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::invalid("n", format!("need at least 8 cells, got {n}")));
        }
        Self::new(n, l)
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Node `j`, with `node(n) == l` exactly.
    pub fn node(&self, j: usize) -> f64 {
        self.l * j as f64 / self.n as f64
    }

    /// Midpoint of cell `j` (between nodes `j` and `j + 1`).
    pub fn midpoint(&self, j: usize) -> f64 {
        self.l * (j as f64 + 0.5) / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.node(j)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.midpoint(j)).collect()
    }
}

/// Nodal state `(u, u_t, v, v_t)` of the second-order system.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderState {
    pub u: Vec<f64>,
    pub u2: Vec<f64>,
    pub v: Vec<f64>,
    pub v2: Vec<f64>,
}

impl SecondOrderState {
    pub fn zeros(n: usize) -> Self {
        SecondOrderState {
            u: vec![0.0; n + 1],
            u2: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            v2: vec![0.0; n + 1],
        }
    }

    /// `u = sin(k pi x / l)`, other components zero.
    pub fn mode(grid: &Grid, k: usize) -> Self {
        let mut state = Self::zeros(grid.n);
        let wavenumber = k as f64 * std::f64::consts::PI / grid.l;
        for j in 1..grid.n {
            state.u[j] = (wavenumber * grid.node(j)).sin();
        }
        state
    }

    /// Cell count, checking that all four arrays have the same length.
    pub fn cells(&self) -> Result<usize> {
        let len = self.u.len();
        if len < 2 || self.u2.len() != len || self.v.len() != len || self.v2.len() != len {
            return Err(Error::Dimension(format!(
                "second-order state arrays have lengths u={}, u2={}, v={}, v2={}",
                self.u.len(),
                self.u2.len(),
                self.v.len(),
                self.v2.len()
            )));
        }
        Ok(len - 1)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |f: &[f64]| f.iter().map(|x| x * factor).collect();
        SecondOrderState {
            u: scale(&self.u),
            u2: scale(&self.u2),
            v: scale(&self.v),
            v2: scale(&self.v2),
        }
    }

    pub fn max_abs_diff(&self, other: &SecondOrderState) -> f64 {
        let pairs = [
            (&self.u, &other.u),
            (&self.u2, &other.u2),
            (&self.v, &other.v),
            (&self.v2, &other.v2),
        ];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        [&self.u, &self.u2, &self.v, &self.v2]
            .iter()
            .all(|f| f.iter().all(|x| *x == 0.0))
    }
}

/// Forward difference `(f[j+1] - f[j]) / h` on each cell.
pub fn cell_gradient(f: &[f64], h: f64) -> Vec<f64> {
    f.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Average of the two end values on each cell.
pub fn cell_average(f: &[f64]) -> Vec<f64> {
    f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Composite trapezoid rule for nodal data.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        len => h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[len - 1])),
    }
}

/// Discrete Timoshenko energy
/// `E = 1/2 ∫ rho u2² + K (u_x - v)² + I_rho v2² + EI v_x² dx`.
///
/// Velocities are integrated with the trapezoid rule on nodes. The strains
/// `u_x - v` and `v_x` are constant on each cell (forward difference and
/// cell average), so their integrals are cell sums. This is exactly the
/// quadratic form that the implicit midpoint scheme dissipates.
pub fn energy_norm(state: &SecondOrderState, params: &BeamParams) -> Result<f64> {
    let n = state.cells()?;
    let h = params.l / n as f64;
    let squares = |f: &[f64]| f.iter().map(|x| x * x).collect::<Vec<_>>();
    let kinetic = params.rho * trapezoid(&squares(&state.u2), h) + params.i_rho * trapezoid(&squares(&state.v2), h);
    let u_x = cell_gradient(&state.u, h);
    let v_x = cell_gradient(&state.v, h);
    let v_mid = cell_average(&state.v);
    let shear: f64 = u_x.iter().zip(&v_mid).map(|(a, b)| (a - b) * (a - b)).sum();
    let bending: f64 = v_x.iter().map(|a| a * a).sum();
    Ok(0.5 * (kinetic + h * (params.k * shear + params.ei * bending)))
}
