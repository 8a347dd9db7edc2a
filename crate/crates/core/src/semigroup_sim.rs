//! Time stepping of the second-order system and of its Riemann-invariant
//! form.
//!
//! # Second-order semi-discretization
//!
//! Unknowns are the interior nodal values, interleaved as
//! `[u_j, u2_j, v_j, v2_j]` for `j = 1..n-1`. With the cell strains
//! `s_c = (u_{c+1} - u_c)/h - (v_c + v_{c+1})/2` and `k_c = (v_{c+1} - v_c)/h`,
//!
//! ```text
//! rho   u2_j' = K (s_j - s_{j-1}) / h
//! I_rho v2_j' = K (s_{j-1} + s_j) / 2 + EI (k_j - k_{j-1}) / h - b(x_j) v2_j
//! ```
//!
//! which is the Hamiltonian system of [`energy_norm`] plus damping. The `L1`
//! variant replaces `K (s_{j-1} + s_j)/2` by the centered `K u_x`, dropping
//! the zero-order `-K v` term of the rotation equation.
//!
//! Implicit midpoint then conserves the discrete energy exactly for `b = 0`
//! and dissipates exactly `dt h Σ b_j (v2 midpoint)²` per step otherwise.

use nalgebra::DMatrix;

use crate::beam_model::{energy_norm, BeamParams, DampingProfile, Grid, SecondOrderState};
use crate::error::{Error, Result};
use crate::linalg::{BandLu, BandMatrix};
use crate::riemann_transform::{forward_transform, inverse_transform_with_tolerance, RiemannState};
use crate::transport_operator::{Coupling, UpwindOperator};

/// Half-bandwidth of the interleaved second-order operator.
const BAND: usize = 7;

/// Default CFL number for the explicit upwind scheme.
pub const DEFAULT_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// The full beam system.
    Full,
    /// Rotation equation without the zero-order `-K v / I_rho` term.
    L1,
}

/// Sparse entries `(row, col, value)` of the semi-discrete generator.
pub fn second_order_entries(
    params: &BeamParams,
    damping: &DampingProfile,
    grid: &Grid,
    variant: Variant,
) -> Vec<(usize, usize, f64)> {
    let n = grid.n;
    let h = grid.h();
    let (k, ei) = (params.k, params.ei);
    let index = |j: usize, comp: usize| -> Option<usize> {
        if j >= 1 && j < n {
            Some(4 * (j - 1) + comp)
        } else {
            None
        }
    };
    let mut entries = Vec::with_capacity(20 * n);
    for j in 1..n {
        let row = 4 * (j - 1);
        let mut push = |r: usize, jj: usize, comp: usize, value: f64| {
            if let Some(c) = index(jj, comp) {
                if value != 0.0 {
                    entries.push((r, c, value));
                }
            }
        };
        push(row, j, 1, 1.0);
        push(row + 2, j, 3, 1.0);

        let a = k / params.rho;
        push(row + 1, j - 1, 0, a / (h * h));
        push(row + 1, j, 0, -2.0 * a / (h * h));
        push(row + 1, j + 1, 0, a / (h * h));
        push(row + 1, j - 1, 2, a / (2.0 * h));
        push(row + 1, j + 1, 2, -a / (2.0 * h));

        let m = 1.0 / params.i_rho;
        push(row + 3, j - 1, 0, -m * k / (2.0 * h));
        push(row + 3, j + 1, 0, m * k / (2.0 * h));
        let shear_v = if variant == Variant::Full { m * k } else { 0.0 };
        let bend = m * ei / (h * h);
        push(row + 3, j - 1, 2, bend - shear_v / 4.0);
        push(row + 3, j, 2, -2.0 * bend - shear_v / 2.0);
        push(row + 3, j + 1, 2, bend - shear_v / 4.0);
        push(row + 3, j, 3, -m * damping.eval(grid.node(j), params.l));
    }
    entries
}

/// Dense generator of the second-order system.
pub fn second_order_matrix(
    params: &BeamParams,
    damping: &DampingProfile,
    grid: &Grid,
    variant: Variant,
) -> DMatrix<f64> {
    let dim = 4 * (grid.n - 1);
    let mut a = DMatrix::zeros(dim, dim);
    for (r, c, v) in second_order_entries(params, damping, grid, variant) {
        a[(r, c)] += v;
    }
    a
}

/// Gram matrix `Q` of the discrete energy, `E = yᵀ Q y / 2`.
pub fn energy_gram(params: &BeamParams, grid: &Grid) -> DMatrix<f64> {
    let n = grid.n;
    let h = grid.h();
    let dim = 4 * (n - 1);
    let mut q = DMatrix::zeros(dim, dim);
    for j in 1..n {
        q[(4 * (j - 1) + 1, 4 * (j - 1) + 1)] = params.rho * h;
        q[(4 * (j - 1) + 3, 4 * (j - 1) + 3)] = params.i_rho * h;
    }
    let slot = |j: usize, comp: usize| (j >= 1 && j < n).then(|| 4 * (j - 1) + comp);
    for c in 0..n {
        let shear = [
            (slot(c, 0), -1.0 / h),
            (slot(c + 1, 0), 1.0 / h),
            (slot(c, 2), -0.5),
            (slot(c + 1, 2), -0.5),
        ];
        let bending = [(slot(c, 2), -1.0 / h), (slot(c + 1, 2), 1.0 / h)];
        for (terms, weight) in [(&shear[..], params.k * h), (&bending[..], params.ei * h)] {
            for (a, wa) in terms {
                for (b, wb) in terms {
                    if let (Some(a), Some(b)) = (a, b) {
                        q[(*a, *b)] += weight * wa * wb;
                    }
                }
            }
        }
    }
    q
}

/// Interior unknowns of a nodal state in interleaved order.
pub fn pack(state: &SecondOrderState) -> Result<Vec<f64>> {
    let n = state.cells()?;
    let mut y = Vec::with_capacity(4 * (n - 1));
    for j in 1..n {
        y.extend_from_slice(&[state.u[j], state.u2[j], state.v[j], state.v2[j]]);
    }
    Ok(y)
}

/// Inverse of [`pack`], with zero boundary values.
pub fn unpack(y: &[f64], n: usize) -> Result<SecondOrderState> {
    if n < 2 || y.len() != 4 * (n - 1) {
        return Err(Error::Dimension(format!("{} unknowns do not match {n} cells", y.len())));
    }
    let mut state = SecondOrderState::zeros(n);
    for j in 1..n {
        let b = 4 * (j - 1);
        state.u[j] = y[b];
        state.u2[j] = y[b + 1];
        state.v[j] = y[b + 2];
        state.v2[j] = y[b + 3];
    }
    Ok(state)
}

/// Implicit midpoint stepper with a factorization reused across steps.
#[derive(Debug, Clone)]
pub struct SecondOrderStepper {
    grid: Grid,
    dt: f64,
    explicit: BandMatrix,
    implicit: BandLu,
}

impl SecondOrderStepper {
    pub fn new(params: &BeamParams, damping: &DampingProfile, grid: Grid, dt: f64, variant: Variant) -> Result<Self> {
        params.validate()?;
        damping.validate(params.l)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        if grid.n < 2 {
            return Err(Error::invalid("n", "need at least two cells"));
        }
        let dim = 4 * (grid.n - 1);
        let mut explicit = BandMatrix::zeros(dim, BAND, BAND);
        let mut implicit = BandMatrix::zeros(dim, BAND, BAND);
        for i in 0..dim {
            explicit.add(i, i, 1.0);
            implicit.add(i, i, 1.0);
        }
        for (r, c, v) in second_order_entries(params, damping, &grid, variant) {
            explicit.add(r, c, 0.5 * dt * v);
            implicit.add(r, c, -0.5 * dt * v);
        }
        Ok(SecondOrderStepper {
            grid,
            dt,
            explicit,
            implicit: implicit.factor()?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &SecondOrderState) -> Result<SecondOrderState> {
        let n = state.cells()?;
        if n != self.grid.n {
            return Err(Error::Dimension(format!(
                "state has {n} cells, stepper {}",
                self.grid.n
            )));
        }
        let mut y = self.explicit.mul_vec(&pack(state)?);
        self.implicit.solve_in_place(&mut y);
        unpack(&y, n)
    }
}

/// One implicit midpoint step of the second-order system.
pub fn step_second_order(
    state: &SecondOrderState,
    params: &BeamParams,
    damping: &DampingProfile,
    dt: f64,
    variant: Variant,
) -> Result<SecondOrderState> {
    let grid = Grid::new(state.cells()?, params.l)?;
    SecondOrderStepper::new(params, damping, grid, dt, variant)?.step(state)
}

/// Discrete dissipation `h Σ b(x_j) v2_j²` over interior nodes.
pub fn dissipation_rate(state: &SecondOrderState, damping: &DampingProfile, l: f64) -> Result<f64> {
    let n = state.cells()?;
    let h = l / n as f64;
    Ok(h * (1..n)
        .map(|j| damping.eval(l * j as f64 / n as f64, l) * state.v2[j] * state.v2[j])
        .sum::<f64>())
}

/// Explicit Euler with upwind transport for the Riemann system.
#[derive(Debug, Clone)]
pub struct RiemannStepper {
    op: UpwindOperator,
    dt: f64,
}

impl RiemannStepper {
    pub fn new(params: &BeamParams, damping: &DampingProfile, grid: Grid, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        let cfl = params.max_speed() * dt / grid.h();
        if cfl > 1.0 {
            return Err(Error::Cfl { cfl });
        }
        Ok(RiemannStepper {
            op: UpwindOperator::new(params, damping, grid, Coupling::Full)?,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, w: &RiemannState) -> Result<RiemannState> {
        let n = w.cells()?;
        if n != self.op.grid.n {
            return Err(Error::Dimension(format!(
                "state has {n} cells, stepper {}",
                self.op.grid.n
            )));
        }
        Ok(w.axpy(self.dt, &self.op.apply(w)))
    }
}

pub fn step_riemann(w: &RiemannState, params: &BeamParams, damping: &DampingProfile, dt: f64) -> Result<RiemannState> {
    let grid = Grid::new(w.cells()?, params.l)?;
    RiemannStepper::new(params, damping, grid, dt)?.step(w)
}

/// `1/4 ∫ rho (p² + q²) + I_rho (phi² + psi²)`, which equals
/// `1/2 ∫ rho u_t² + K u_x² + I_rho v_t² + EI v_x²` for transformed states.
pub fn riemann_energy(w: &RiemannState, params: &BeamParams) -> Result<f64> {
    let n = w.cells()?;
    let h = params.l / n as f64;
    let sq = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>();
    Ok(0.25 * h * (params.rho * (sq(&w.p) + sq(&w.q)) + params.i_rho * (sq(&w.phi_hat) + sq(&w.psi))))
}

/// Step count and step size covering `[0, t_final]` with steps no larger
/// than `max_dt`.
fn schedule(t_final: f64, max_dt: f64) -> (usize, f64) {
    let steps = (t_final / max_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, t_final / steps as f64)
}

/// Largest sup-in-time `X` distance between the transformed `L1`
/// trajectory and the Riemann trajectory started from the transformed data.
/// Both schemes use the same step `0.9 h / max speed`.
pub fn conjugacy_test(y0: &SecondOrderState, params: &BeamParams, damping: &DampingProfile, t: f64) -> Result<f64> {
    let n = y0.cells()?;
    let grid = Grid::for_solver(n, params.l)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be > 0, got {t}")));
    }
    let (steps, dt) = schedule(t, DEFAULT_CFL * grid.h() / params.max_speed());
    let second = SecondOrderStepper::new(params, damping, grid, dt, Variant::L1)?;
    let riemann = RiemannStepper::new(params, damping, grid, dt)?;
    let mut y = y0.clone();
    let mut w = forward_transform(y0, params)?;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        y = second.step(&y)?;
        w = riemann.step(&w)?;
        let image = forward_transform(&y, params)?;
        worst = worst.max(image.axpy(-1.0, &w).norm(params.l));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    SecondOrder,
    SecondOrderL1,
    Riemann,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::SecondOrder => "second-order",
            Formulation::SecondOrderL1 => "second-order-l1",
            Formulation::Riemann => "riemann",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    SecondOrder(SecondOrderState),
    Riemann(RiemannState),
}

impl Snapshot {
    /// Nodal fields; Riemann states are inverted with a loose constraint
    /// tolerance since explicit stepping only keeps `X₀` to rounding drift.
    pub fn to_second_order(&self, params: &BeamParams) -> Result<SecondOrderState> {
        match self {
            Snapshot::SecondOrder(y) => Ok(y.clone()),
            Snapshot::Riemann(w) => inverse_transform_with_tolerance(w, params, 1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetup {
    pub params: BeamParams,
    pub damping: DampingProfile,
    pub grid: Grid,
    /// Step size; defaults to `0.9 h / max speed`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub formulation: Formulation,
    /// Times at which to store states (the first step reaching each time).
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub params: BeamParams,
    pub damping: DampingProfile,
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    pub formulation: Formulation,
    pub trajectory: Vec<(f64, Snapshot)>,
    /// `(t, E)` at every step, starting with `t = 0`. Second-order runs
    /// record [`energy_norm`], Riemann runs [`riemann_energy`].
    pub energy_series: Vec<(f64, f64)>,
}

pub fn simulate(setup: &SimulationSetup, initial: &SecondOrderState) -> Result<SimulationRun> {
    let params = &setup.params;
    let grid = Grid::for_solver(setup.grid.n, params.l)?;
    if initial.cells()? != grid.n {
        return Err(Error::Dimension(format!(
            "initial state has {} cells, grid {}",
            initial.cells()?,
            grid.n
        )));
    }
    if !(setup.t_final > 0.0 && setup.t_final.is_finite()) {
        return Err(Error::invalid("t_final", format!("must be > 0, got {}", setup.t_final)));
    }
    let max_dt = setup.dt.unwrap_or(DEFAULT_CFL * grid.h() / params.max_speed());
    if !(max_dt > 0.0 && max_dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {max_dt}")));
    }
    let (steps, dt) = schedule(setup.t_final, max_dt);
    let mut pending: Vec<f64> = setup.snapshot_times.clone();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut next = 0;
    let mut trajectory = Vec::new();
    let mut energy_series = Vec::with_capacity(steps + 1);
    let mut take = |t: f64, snap: &dyn Fn() -> Snapshot, trajectory: &mut Vec<(f64, Snapshot)>| {
        while next < pending.len() && pending[next] <= t + 0.5 * dt {
            trajectory.push((t, snap()));
            next += 1;
        }
    };

    match setup.formulation {
        Formulation::SecondOrder | Formulation::SecondOrderL1 => {
            let variant = if setup.formulation == Formulation::SecondOrder {
                Variant::Full
            } else {
                Variant::L1
            };
            let stepper = SecondOrderStepper::new(params, &setup.damping, grid, dt, variant)?;
            let mut y = initial.clone();
            energy_series.push((0.0, energy_norm(&y, params)?));
            take(0.0, &|| Snapshot::SecondOrder(y.clone()), &mut trajectory);
            for m in 1..=steps {
                y = stepper.step(&y)?;
                let t = m as f64 * dt;
                energy_series.push((t, energy_norm(&y, params)?));
                take(t, &|| Snapshot::SecondOrder(y.clone()), &mut trajectory);
            }
        }
        Formulation::Riemann => {
            let stepper = RiemannStepper::new(params, &setup.damping, grid, dt)?;
            let mut w = forward_transform(initial, params)?;
            energy_series.push((0.0, riemann_energy(&w, params)?));
            take(0.0, &|| Snapshot::Riemann(w.clone()), &mut trajectory);
            for m in 1..=steps {
                w = stepper.step(&w)?;
                let t = m as f64 * dt;
                let e = riemann_energy(&w, params)?;
                if !e.is_finite() {
                    return Err(Error::NoConvergence(format!("Riemann run blew up at t = {t}")));
                }
                energy_series.push((t, e));
                take(t, &|| Snapshot::Riemann(w.clone()), &mut trajectory);
            }
        }
    }
    Ok(SimulationRun {
        params: *params,
        damping: setup.damping.clone(),
        grid,
        dt,
        t_final: setup.t_final,
        formulation: setup.formulation,
        trajectory,
        energy_series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub e0: f64,
    pub e_final: f64,
    /// First time with `E(t) <= E(0) / 2`; `None` if the energy never halves.
    pub t_half: Option<f64>,
    /// `E` never increases by more than `1e-12 E(0)` between samples.
    pub monotone: bool,
}

pub fn decay_report(run: &SimulationRun) -> DecayReport {
    let series = &run.energy_series;
    let e0 = series.first().map_or(0.0, |s| s.1);
    let e_final = series.last().map_or(0.0, |s| s.1);
    let t_half = if e0 > 0.0 {
        series.iter().find(|(_, e)| *e <= 0.5 * e0).map(|(t, _)| *t)
    } else {
        None
    };
    let slack = 1e-12 * e0.abs();
    let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 + slack);
    DecayReport {
        e0,
        e_final,
        t_half,
        monotone,
    }
}
