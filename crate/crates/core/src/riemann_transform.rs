//! Riemann invariants of the beam system and their inverse.
//!
//! ```text
//! p   = -c1 u_x + u_t      q = c1 u_x + u_t
//! phi = -c2 v_x + v_t    psi = c2 v_x + v_t
//! c1 = sqrt(K / rho),   c2 = sqrt(EI / I_rho)
//! ```
//!
//! # Layout
//!
//! Riemann states hold one value per cell, where the forward difference of a
//! nodal field lives. Nodal velocities enter through their cell averages.
//! With this pairing, differentiation and cumulative summation are exact
//! inverses, so both round trips hold to rounding.
//!
//! The image of the Dirichlet space is cut out by four linear conditions:
//! the two zero-mean constraints `∫(p - q) = ∫(phi - psi) = 0` (the subspace
//! `X₀`) and the two boundary conditions `u_t = v_t = 0` at `x = l`, which in
//! cell form say that the alternating sums of `p + q` and `phi + psi` vanish.

use crate::beam_model::{BeamParams, SecondOrderState};
use crate::error::{Error, Result};

/// Relative tolerance for `X₀` membership.
pub const X0_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance for boundary checks.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Cell values of `(p, phi, q, psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannState {
    pub p: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub q: Vec<f64>,
    pub psi: Vec<f64>,
}

impl RiemannState {
    pub fn zeros(n: usize) -> Self {
        RiemannState {
            p: vec![0.0; n],
            phi_hat: vec![0.0; n],
            q: vec![0.0; n],
            psi: vec![0.0; n],
        }
    }

    /// Cell count, checking that all components agree.
    pub fn cells(&self) -> Result<usize> {
        let n = self.p.len();
        if n == 0 || self.phi_hat.len() != n || self.q.len() != n || self.psi.len() != n {
            return Err(Error::Dimension(format!(
                "riemann state component lengths p={}, phi={}, q={}, psi={}",
                self.p.len(),
                self.phi_hat.len(),
                self.q.len(),
                self.psi.len()
            )));
        }
        Ok(n)
    }

    pub fn components(&self) -> [&Vec<f64>; 4] {
        [&self.p, &self.phi_hat, &self.q, &self.psi]
    }

    pub fn components_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.p, &mut self.phi_hat, &mut self.q, &mut self.psi]
    }

    /// Concatenation `[p, phi, q, psi]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.components().iter().flat_map(|c| c.iter().copied()).collect()
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        if data.is_empty() || !data.len().is_multiple_of(4) {
            return Err(Error::Dimension(format!(
                "{} values do not split into four components",
                data.len()
            )));
        }
        let n = data.len() / 4;
        Ok(RiemannState {
            p: data[..n].to_vec(),
            phi_hat: data[n..2 * n].to_vec(),
            q: data[2 * n..3 * n].to_vec(),
            psi: data[3 * n..].to_vec(),
        })
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &RiemannState) -> RiemannState {
        let mut out = self.clone();
        for (a, b) in out.components_mut().into_iter().zip(other.components()) {
            a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x += factor * y);
        }
        out
    }

    /// Discrete `X` inner product `h Σ` over cells and components.
    pub fn inner(&self, other: &RiemannState, l: f64) -> f64 {
        let h = l / self.p.len() as f64;
        let dot: f64 = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        h * dot
    }

    pub fn norm(&self, l: f64) -> f64 {
        self.inner(self, l).sqrt()
    }

    pub fn max_abs_diff(&self, other: &RiemannState) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Values of the two zero-mean functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintValues {
    pub r1: f64,
    pub r2: f64,
}

impl ConstraintValues {
    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.abs())
    }
}

/// `r1 = ∫(p - q)`, `r2 = ∫(phi - psi)` by the midpoint rule on cells.
pub fn constraint_values(w: &RiemannState, l: f64) -> Result<ConstraintValues> {
    let n = w.cells()?;
    let h = l / n as f64;
    let diff_sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>();
    Ok(ConstraintValues {
        r1: h * diff_sum(&w.p, &w.q),
        r2: h * diff_sum(&w.phi_hat, &w.psi),
    })
}

pub fn forward_transform(y: &SecondOrderState, params: &BeamParams) -> Result<RiemannState> {
    let n = y.cells()?;
    let h = params.l / n as f64;
    let c1 = params.shear_speed();
    let c2 = params.bending_speed();
    let mut w = RiemannState::zeros(n);
    for j in 0..n {
        let ux = (y.u[j + 1] - y.u[j]) / h;
        let vx = (y.v[j + 1] - y.v[j]) / h;
        let ut = 0.5 * (y.u2[j] + y.u2[j + 1]);
        let vt = 0.5 * (y.v2[j] + y.v2[j + 1]);
        w.p[j] = -c1 * ux + ut;
        w.q[j] = c1 * ux + ut;
        w.phi_hat[j] = -c2 * vx + vt;
        w.psi[j] = c2 * vx + vt;
    }
    Ok(w)
}

/// Inverse transform; rejects states whose constraints exceed
/// [`X0_TOLERANCE`] relative to the state norm.
pub fn inverse_transform(w: &RiemannState, params: &BeamParams) -> Result<SecondOrderState> {
    inverse_transform_with_tolerance(w, params, X0_TOLERANCE)
}

/// Inverse transform with an explicit relative tolerance on `r1`, `r2`.
///
/// Displacements are cumulative sums from `x = 0`; velocities are recovered
/// from their cell averages by the recursion `f[j+1] = 2 avg[j] - f[j]`
/// started from `f[0] = 0`.
pub fn inverse_transform_with_tolerance(
    w: &RiemannState,
    params: &BeamParams,
    rel_tol: f64,
) -> Result<SecondOrderState> {
    let n = w.cells()?;
    let l = params.l;
    let r = constraint_values(w, l)?;
    let scale = w.norm(l);
    if r.max_abs() > rel_tol * scale {
        return Err(Error::Constraint { r1: r.r1, r2: r.r2 });
    }
    let h = l / n as f64;
    let c1 = params.shear_speed();
    let c2 = params.bending_speed();
    let mut y = SecondOrderState::zeros(n);
    for j in 0..n {
        y.u[j + 1] = y.u[j] + h * (w.q[j] - w.p[j]) / (2.0 * c1);
        y.v[j + 1] = y.v[j] + h * (w.psi[j] - w.phi_hat[j]) / (2.0 * c2);
        y.u2[j + 1] = (w.p[j] + w.q[j]) - y.u2[j];
        y.v2[j + 1] = (w.phi_hat[j] + w.psi[j]) - y.v2[j];
    }
    Ok(y)
}

/// `e₁ = (1, 0, -1, 0) / sqrt(2l)` and `e₂ = (0, 1, 0, -1) / sqrt(2l)`,
/// the unit vectors spanning the orthogonal complement of `X₀`.
pub fn constraint_directions(n: usize, l: f64) -> [RiemannState; 2] {
    let c = 1.0 / (2.0 * l).sqrt();
    let mut e1 = RiemannState::zeros(n);
    e1.p.fill(c);
    e1.q.fill(-c);
    let mut e2 = RiemannState::zeros(n);
    e2.phi_hat.fill(c);
    e2.psi.fill(-c);
    [e1, e2]
}

/// Orthogonal projection onto `X₀`: `W - Σ <W, e_i> e_i`.
pub fn project_x0(w: &RiemannState, l: f64) -> Result<RiemannState> {
    let n = w.cells()?;
    let mut out = w.clone();
    for e in constraint_directions(n, l) {
        let coeff = w.inner(&e, l);
        out = out.axpy(-coeff, &e);
    }
    Ok(out)
}

/// Orthogonal projection onto the range of [`forward_transform`]: `X₀`
/// intersected with zero alternating sums of `p + q` and `phi_hat + psi`
/// (the velocity boundary conditions). The four removed directions are
/// mutually orthogonal.
pub fn project_admissible(w: &RiemannState, l: f64) -> Result<RiemannState> {
    let n = w.cells()?;
    let mut out = project_x0(w, l)?;
    let sign = |j: usize| if (n - 1 - j).is_multiple_of(2) { 1.0 } else { -1.0 };
    let norm2 = 2.0 * n as f64;
    let coeff = alternating_trace(&out.p, &out.q) / norm2;
    for j in 0..n {
        out.p[j] -= coeff * sign(j);
        out.q[j] -= coeff * sign(j);
    }
    let coeff = alternating_trace(&out.phi_hat, &out.psi) / norm2;
    for j in 0..n {
        out.phi_hat[j] -= coeff * sign(j);
        out.psi[j] -= coeff * sign(j);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainReport {
    pub reasons: Vec<String>,
}

impl DomainReport {
    pub fn ok(&self) -> bool {
        self.reasons.is_empty()
    }
}

/// Boundary values of `u`, `v`, `u2`, `v2` at both ends.
pub fn domain_check_second_order(y: &SecondOrderState) -> Result<DomainReport> {
    let n = y.cells()?;
    let mut report = DomainReport::default();
    for (name, f) in [("u", &y.u), ("u2", &y.u2), ("v", &y.v), ("v2", &y.v2)] {
        if f[0].abs() > BOUNDARY_TOLERANCE || f[n].abs() > BOUNDARY_TOLERANCE {
            report.reasons.push(format!("{name} boundary"));
        }
    }
    Ok(report)
}

/// Velocity at `x = l` reconstructed from the cell sums `a + b` (the
/// recursion of the inverse transform started from zero at `x = 0`).
fn alternating_trace(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |trace, (x, y)| (x + y) - trace)
}

/// Boundary sums `p + q`, `phi + psi` and the `X₀` constraints.
pub fn domain_check_riemann(w: &RiemannState, l: f64) -> Result<DomainReport> {
    w.cells()?;
    let mut report = DomainReport::default();
    let scale = w
        .components()
        .iter()
        .flat_map(|c| c.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    if alternating_trace(&w.p, &w.q).abs() > BOUNDARY_TOLERANCE * scale {
        report.reasons.push("p+q boundary".to_string());
    }
    if alternating_trace(&w.phi_hat, &w.psi).abs() > BOUNDARY_TOLERANCE * scale {
        report.reasons.push("phi+psi boundary".to_string());
    }
    let r = constraint_values(w, l)?;
    let norm = w.norm(l);
    if r.r1.abs() > X0_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
        report.reasons.push("r1".to_string());
    }
    if r.r2.abs() > X0_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
        report.reasons.push("r2".to_string());
    }
    Ok(report)
}
