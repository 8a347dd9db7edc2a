//! First-order transport form `W_t = -(Khat W_x + C W)` of the beam system
//! in Riemann invariants `W = (p, phi, q, psi)`, with boundary conditions
//! `p + q = phi + psi = 0` at both ends.
//!
//! # Discretization
//!
//! Cell values are advanced by first-order upwinding. Right-moving
//! components (`p`, `phi`) take their interface flux from the cell on the
//! left, left-moving ones (`q`, `psi`) from the cell on the right. At the
//! ends the missing incoming value is supplied by the boundary relation,
//! e.g. `p = -q` at `x = 0`. The scheme is conservative, so `∫(p - q)` and
//! `∫(phi - psi)` are invariants of the semi-discrete flow for every state.
//!
//! For consistency checks, a right-moving cell value is read as the value
//! at the right end of its cell and a left-moving one as the value at the
//! left end. With that reading the scheme is first-order accurate up to and
//! including the boundary cells.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

use crate::beam_model::{BeamParams, DampingProfile, Grid};
use crate::error::{Error, Result};
use crate::riemann_transform::RiemannState;

/// Rejection threshold for `|exp(2 mu l / c) - 1|` in the resolvent.
pub const RESOLVENT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportMatrices {
    pub khat: Matrix4<f64>,
    pub c: Matrix4<f64>,
    pub c0: Matrix4<f64>,
    pub d: Matrix2<f64>,
    pub ehat: Matrix2<f64>,
    pub f: Matrix2<f64>,
    pub g: Matrix2<f64>,
    pub distinct_speeds: bool,
}

/// Coupling coefficients `(a, beta)`: `a = K/(2 rho) sqrt(I_rho/EI)` couples
/// the rotation invariants into the shear ones and `beta = sqrt(rho K)/(2 I_rho)`
/// the other way round.
fn coupling(params: &BeamParams) -> (f64, f64) {
    let a = params.k / (2.0 * params.rho) * (params.i_rho / params.ei).sqrt();
    let beta = (params.rho * params.k).sqrt() / (2.0 * params.i_rho);
    (a, beta)
}

/// Matrices of the transport system at position `x`.
pub fn build_matrices(params: &BeamParams, damping: &DampingProfile, x: f64) -> TransportMatrices {
    let c1 = params.shear_speed();
    let c2 = params.bending_speed();
    let (a, beta) = coupling(params);
    let d = damping.eval(x, params.l) / (2.0 * params.i_rho);
    #[rustfmt::skip]
    let c = Matrix4::new(
        0.0,  -a,   0.0,  a,
        beta, d,   -beta, d,
        0.0,  -a,   0.0,  a,
        beta, d,   -beta, d,
    );
    TransportMatrices {
        khat: Matrix4::from_diagonal(&nalgebra::Vector4::new(c1, c2, -c1, -c2)),
        c,
        c0: Matrix4::from_diagonal(&nalgebra::Vector4::new(0.0, d, 0.0, d)),
        d: -Matrix2::identity(),
        ehat: -Matrix2::identity(),
        f: Matrix2::zeros(),
        g: Matrix2::zeros(),
        distinct_speeds: params.distinct_speeds(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSpectrum {
    /// `(k, i k pi c1 / l)`
    pub branch1: Vec<(i64, Complex64)>,
    /// `(k, -∫b / (2 l I_rho) + i k pi c2 / l)`
    pub branch2: Vec<(i64, Complex64)>,
    pub spectral_bound: f64,
}

/// Damped-branch abscissa `-∫b / (2 l I_rho)`.
pub fn damped_abscissa(params: &BeamParams, damping: &DampingProfile) -> f64 {
    -damping.integral(params.l) / (2.0 * params.l * params.i_rho)
}

/// Eigenvalues of the diagonally damped transport operator for `|k| <= kmax`.
pub fn analytic_spectrum(params: &BeamParams, damping: &DampingProfile, kmax: usize) -> Result<AnalyticSpectrum> {
    params.validate()?;
    damping.validate(params.l)?;
    if kmax == 0 {
        return Err(Error::invalid("kmax", "must be >= 1"));
    }
    let w1 = std::f64::consts::PI * params.shear_speed() / params.l;
    let w2 = std::f64::consts::PI * params.bending_speed() / params.l;
    let re2 = damped_abscissa(params, damping);
    let km = kmax as i64;
    let branch1 = (-km..=km).map(|k| (k, Complex64::new(0.0, k as f64 * w1))).collect();
    let branch2: Vec<(i64, Complex64)> = (-km..=km).map(|k| (k, Complex64::new(re2, k as f64 * w2))).collect();
    Ok(AnalyticSpectrum {
        branch1,
        branch2,
        spectral_bound: 0.0f64.max(re2),
    })
}

/// Which zero-order part enters the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Full matrix `C`.
    Full,
    /// Diagonal part `C0` only.
    Diagonal,
}

/// Upwind discretization of the transport operator on a grid.
#[derive(Debug, Clone)]
pub struct UpwindOperator {
    pub params: BeamParams,
    pub grid: Grid,
    pub coupling: Coupling,
    /// Cell averages of `b / (2 I_rho)`.
    damping_rate: Vec<f64>,
}

impl UpwindOperator {
    pub fn new(params: &BeamParams, damping: &DampingProfile, grid: Grid, coupling: Coupling) -> Result<Self> {
        params.validate()?;
        damping.validate(params.l)?;
        if (grid.l - params.l).abs() > 1e-12 * params.l {
            return Err(Error::Dimension(format!(
                "grid length {} differs from beam length {}",
                grid.l, params.l
            )));
        }
        let h = grid.h();
        let damping_rate = (0..grid.n)
            .map(|j| damping.integral_between(grid.node(j), grid.node(j + 1), params.l) / (h * 2.0 * params.i_rho))
            .collect();
        Ok(UpwindOperator {
            params: *params,
            grid,
            coupling,
            damping_rate,
        })
    }

    pub fn dim(&self) -> usize {
        4 * self.grid.n
    }

    /// Applies the discrete operator.
    pub fn apply(&self, w: &RiemannState) -> RiemannState {
        self.apply_with_boundary(w, [0.0, 0.0])
    }

    /// Applies the operator with inhomogeneous right-end relations
    /// `p + q = z[0]`, `phi + psi = z[1]` at `x = l`.
    pub fn apply_with_boundary(&self, w: &RiemannState, z: [f64; 2]) -> RiemannState {
        let n = self.grid.n;
        let h = self.grid.h();
        let c1 = self.params.shear_speed();
        let c2 = self.params.bending_speed();
        let (a, beta) = coupling(&self.params);
        let mut out = RiemannState::zeros(n);
        transport_pair(&w.p, &w.q, c1 / h, z[0], &mut out.p, &mut out.q);
        transport_pair(&w.phi_hat, &w.psi, c2 / h, z[1], &mut out.phi_hat, &mut out.psi);
        for j in 0..n {
            let d = self.damping_rate[j];
            match self.coupling {
                Coupling::Full => {
                    let shear = a * (w.phi_hat[j] - w.psi[j]);
                    let rot = -beta * (w.p[j] - w.q[j]) - d * (w.phi_hat[j] + w.psi[j]);
                    out.p[j] += shear;
                    out.q[j] += shear;
                    out.phi_hat[j] += rot;
                    out.psi[j] += rot;
                }
                Coupling::Diagonal => {
                    out.phi_hat[j] -= d * w.phi_hat[j];
                    out.psi[j] -= d * w.psi[j];
                }
            }
        }
        out
    }

    /// Dense matrix in the component-major ordering `[p, phi, q, psi]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.grid.n;
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut unit = vec![0.0; dim];
        for col in 0..dim {
            unit[col] = 1.0;
            let image = self
                .apply(&RiemannState::from_slice(&unit).expect("4n entries"))
                .to_vec();
            unit[col] = 0.0;
            for (row, value) in image.into_iter().enumerate() {
                if value != 0.0 {
                    m[(row, col)] = value;
                }
            }
        }
        debug_assert_eq!(m.nrows(), 4 * n);
        m
    }

    /// Largest stable explicit Euler step for a given CFL number.
    pub fn cfl_step(&self, cfl: f64) -> f64 {
        cfl * self.grid.h() / self.params.max_speed()
    }
}

/// Upwind fluxes for a right-moving `r` and left-moving `s` with `r + s = 0`
/// at `x = 0` and `r + s = z` at `x = l`. Writes `-c (flux differences) / h`.
fn transport_pair(r: &[f64], s: &[f64], c_over_h: f64, z: f64, dr: &mut [f64], ds: &mut [f64]) {
    let n = r.len();
    for j in 0..n {
        let r_in = if j == 0 { -s[0] } else { r[j - 1] };
        dr[j] = -c_over_h * (r[j] - r_in);
        let s_in = if j + 1 == n { z - r[n - 1] } else { s[j + 1] };
        ds[j] = c_over_h * (s_in - s[j]);
    }
}

/// Complex Riemann-invariant fields sampled on nodes `x_0..x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub p: Vec<Complex64>,
    pub phi_hat: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub psi: Vec<Complex64>,
}

impl ResolventSolution {
    /// Cell representation: right-moving components from the right node of
    /// each cell, left-moving ones from the left node.
    pub fn to_cells(&self) -> [Vec<Complex64>; 4] {
        let n = self.p.len() - 1;
        [
            self.p[1..=n].to_vec(),
            self.phi_hat[1..=n].to_vec(),
            self.q[..n].to_vec(),
            self.psi[..n].to_vec(),
        ]
    }
}

/// Integrating-factor solution of one right/left-moving pair
///
/// ```text
/// mu r + c r' = z_r,   mu s - c s' = z_s,   r + s = 0 at both ends
/// ```
///
/// with `mu = lambda + d(x)` piecewise constant per cell and data constant
/// per cell. The cell recursions are exact for such data.
fn resolvent_pair(
    lambda: Complex64,
    rate: &[f64],
    c: f64,
    h: f64,
    zr: &[f64],
    zs: &[f64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = rate.len();
    let zero = Complex64::new(0.0, 0.0);
    // particular solutions with zero left values, and the homogeneous factor
    let mut r = vec![zero; n + 1];
    let mut s = vec![zero; n + 1];
    let mut exponent = zero;
    for j in 0..n {
        let mu = lambda + rate[j];
        let step = mu * h / c;
        let decay = (-step).exp();
        let grow = step.exp();
        // (1 - e^{-x}) / mu and (e^{x} - 1) / mu, with the small-x limit h / c
        let (fr, fs) = if step.norm() < 1e-8 {
            (Complex64::new(h / c, 0.0), Complex64::new(h / c, 0.0))
        } else {
            ((1.0 - decay) / mu, (grow - 1.0) / mu)
        };
        r[j + 1] = decay * r[j] + zr[j] * fr;
        s[j + 1] = grow * s[j] - zs[j] * fs;
        exponent += step;
    }
    // r(0) = r0, s(0) = -r0; right end: r0 (e^{-E} - e^{E}) + r_p(l) + s_p(l) = 0
    let gap = (2.0 * exponent).exp() - 1.0;
    if !gap.norm().is_finite() {
        return Err(Error::Precondition(format!("exponent {exponent} overflows")));
    }
    if gap.norm() < RESOLVENT_MARGIN {
        return Err(Error::NearSingular { distance: gap.norm() });
    }
    let r0 = (r[n] + s[n]) / (exponent.exp() - (-exponent).exp());
    let mut hom_r = Complex64::new(1.0, 0.0);
    let mut hom_s = Complex64::new(1.0, 0.0);
    for j in 0..=n {
        r[j] += r0 * hom_r;
        s[j] -= r0 * hom_s;
        if j < n {
            let step = (lambda + rate[j]) * h / c;
            hom_r *= (-step).exp();
            hom_s *= step.exp();
        }
    }
    Ok((r, s))
}

/// Solves `(lambda - S) U = Z` for the diagonally damped transport operator
/// with data `Z` constant on each cell. Returns nodal samples of `U`.
pub fn resolvent_apply(
    lambda: Complex64,
    z: &RiemannState,
    params: &BeamParams,
    damping: &DampingProfile,
) -> Result<ResolventSolution> {
    let n = z.cells()?;
    let grid = Grid::new(n, params.l)?;
    let op = UpwindOperator::new(params, damping, grid, Coupling::Diagonal)?;
    let h = grid.h();
    let zeros = vec![0.0; n];
    let (p, q) = resolvent_pair(lambda, &zeros, params.shear_speed(), h, &z.p, &z.q)?;
    let (phi_hat, psi) = resolvent_pair(lambda, &op.damping_rate, params.bending_speed(), h, &z.phi_hat, &z.psi)?;
    Ok(ResolventSolution { p, phi_hat, q, psi })
}

/// Relative residual `‖(lambda - S_h) U - Z‖ / ‖Z‖` of the resolvent
/// solution against the upwind operator, in the discrete `X` norm.
pub fn resolvent_residual(
    lambda: Complex64,
    z: &RiemannState,
    params: &BeamParams,
    damping: &DampingProfile,
) -> Result<f64> {
    let n = z.cells()?;
    let solution = resolvent_apply(lambda, z, params, damping)?;
    let grid = Grid::new(n, params.l)?;
    let op = UpwindOperator::new(params, damping, grid, Coupling::Diagonal)?;
    let cells = solution.to_cells();
    let part = |f: fn(&Complex64) -> f64| {
        let data: Vec<f64> = cells.iter().flat_map(|c| c.iter().map(f)).collect();
        RiemannState::from_slice(&data).expect("4n entries")
    };
    let re = part(|c| c.re);
    let im = part(|c| c.im);
    let s_re = op.apply(&re).to_vec();
    let s_im = op.apply(&im).to_vec();
    let zv = z.to_vec();
    let (re_v, im_v) = (re.to_vec(), im.to_vec());
    let mut sum = 0.0;
    for i in 0..zv.len() {
        let u = Complex64::new(re_v[i], im_v[i]);
        let su = Complex64::new(s_re[i], s_im[i]);
        sum += (lambda * u - su - zv[i]).norm_sqr();
    }
    let znorm = z.norm(params.l);
    if znorm == 0.0 {
        return Ok(if sum == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((grid.h() * sum).sqrt() / znorm)
}

/// Riemann state together with the dynamic boundary variable `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub w: RiemannState,
    pub z: [f64; 2],
}

impl AugmentedState {
    /// Projection onto the first factor: keeps `W` and zeroes `z`.
    pub fn project(&self) -> AugmentedState {
        AugmentedState {
            w: self.w.clone(),
            z: [0.0, 0.0],
        }
    }
}

/// Runs the augmented system from the projection of `(W0, z0)` alongside the
/// plain system from `W0`, both by explicit Euler at CFL 0.9, and returns the
/// largest trajectory discrepancy plus the largest `|z(t)|`.
///
/// The augmented right-end relations read `p + q = z₁`, `phi + psi = z₂`
/// with `z' = F u(l) + G z = 0`.
pub fn augmented_step_consistency(
    w0: &RiemannState,
    z0: [f64; 2],
    t: f64,
    params: &BeamParams,
    damping: &DampingProfile,
) -> Result<f64> {
    let n = w0.cells()?;
    let grid = Grid::for_solver(n, params.l)?;
    let op = UpwindOperator::new(params, damping, grid, Coupling::Full)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    let steps = (t / op.cfl_step(0.9)).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut plain = w0.clone();
    let mut aug = AugmentedState { w: w0.clone(), z: z0 }.project();
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let dp = op.apply(&plain);
        plain = plain.axpy(dt, &dp);
        let da = op.apply_with_boundary(&aug.w, aug.z);
        aug.w = aug.w.axpy(dt, &da);
        // F = G = 0 freezes z
        let deviation = aug.w.axpy(-1.0, &plain).norm(params.l) + aug.z[0].hypot(aug.z[1]);
        worst = worst.max(deviation);
    }
    Ok(worst)
}
