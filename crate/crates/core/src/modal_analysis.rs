//! Time-harmonic solutions `(u, v) e^{i omega t}` of the beam equations.
//!
//! Eliminating `v` from the undamped modal equations shows that the
//! displacement solves the constant-coefficient fourth-order equation
//!
//! ```text
//! u'''' + (alpha² + beta²) u'' + alpha² (beta² - gamma²) u = 0
//! alpha² = rho omega² / K,  gamma² = K / EI,  beta² = I_rho omega² / EI
//! ```
//!
//! whose characteristic polynomial is a quadratic in `r²` with roots
//! `X₋ < 0` and `X₊`, `sign(X₊) = sign(gamma² - beta²)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::beam_model::{BeamParams, DampingProfile};
use crate::error::{Error, Result};

/// Relative tolerance under which `gamma²` and `beta²` count as equal.
pub const REGIME_TOLERANCE: f64 = 1e-12;

/// Smallest-to-largest singular value ratio certifying full column rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalProblem {
    pub params: BeamParams,
    pub damping: DampingProfile,
    pub omega: f64,
}

impl ModalProblem {
    pub fn new(params: BeamParams, damping: DampingProfile, omega: f64) -> Result<Self> {
        params.validate()?;
        damping.validate(params.l)?;
        if omega == 0.0 {
            return Err(Error::DegenerateFrequency);
        }
        if !omega.is_finite() {
            return Err(Error::invalid("omega", format!("must be finite, got {omega}")));
        }
        Ok(ModalProblem { params, damping, omega })
    }
}

/// `(alpha², gamma², beta²)` for a modal problem.
pub fn quartic_coefficients(problem: &ModalProblem) -> Result<(f64, f64, f64)> {
    if problem.omega == 0.0 {
        return Err(Error::DegenerateFrequency);
    }
    let p = &problem.params;
    let w2 = problem.omega * problem.omega;
    Ok((p.rho * w2 / p.k, p.k / p.ei, p.i_rho * w2 / p.ei))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    GammaGtBeta,
    GammaLtBeta,
    GammaEqBeta,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::GammaGtBeta => "gamma>beta",
            Regime::GammaLtBeta => "gamma<beta",
            Regime::GammaEqBeta => "gamma=beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticSolution {
    pub alpha2: f64,
    pub gamma2: f64,
    pub beta2: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub regime: Regime,
}

impl QuarticSolution {
    /// Value of `r⁴ + (alpha² + beta²) r² + alpha² (beta² - gamma²)`.
    pub fn characteristic(&self, r: Complex64) -> Complex64 {
        let r2 = r * r;
        r2 * r2 + (self.alpha2 + self.beta2) * r2 + self.alpha2 * (self.beta2 - self.gamma2)
    }

    /// The four characteristic roots `r₁ = -i sqrt|X₋|`, `r₂ = -r₁`, and
    /// `r₃`, `r₄ = -r₃` from `X₊` according to the regime.
    pub fn roots(&self) -> [Complex64; 4] {
        let r1 = Complex64::new(0.0, -self.x_minus.abs().sqrt());
        let r3 = match self.regime {
            Regime::GammaLtBeta => Complex64::new(0.0, -self.x_plus.abs().sqrt()),
            Regime::GammaGtBeta => Complex64::new(-self.x_plus.sqrt(), 0.0),
            Regime::GammaEqBeta => Complex64::new(0.0, 0.0),
        };
        [r1, -r1, r3, -r3]
    }

    /// Relative tolerance scale `max(1, (alpha² + beta²)²)`.
    pub fn residual_scale(&self) -> f64 {
        let s = self.alpha2 + self.beta2;
        (s * s).max(1.0)
    }

    /// Applies the fourth-order operator to a scalar function given its
    /// value, second and fourth derivatives.
    pub fn ode_residual(&self, g: f64, g2: f64, g4: f64) -> f64 {
        g4 + (self.alpha2 + self.beta2) * g2 + self.alpha2 * (self.beta2 - self.gamma2) * g
    }
}

/// Closed-form roots `X₋`, `X₊` of `X² + (alpha² + beta²) X + alpha² (beta² - gamma²) = 0`.
///
/// `X₊` uses the cancellation-free product form, so its sign is exactly the
/// sign of `gamma² - beta²`.
pub fn quartic_roots(alpha2: f64, gamma2: f64, beta2: f64) -> Result<QuarticSolution> {
    for (name, value) in [("alpha2", alpha2), ("gamma2", gamma2), ("beta2", beta2)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::invalid(name, format!("must be > 0, got {value}")));
        }
    }
    let sum = alpha2 + beta2;
    let diff = alpha2 - beta2;
    let disc = (diff * diff + 4.0 * alpha2 * gamma2).sqrt();
    let x_minus = -0.5 * (sum + disc);
    let x_plus = 2.0 * alpha2 * (gamma2 - beta2) / (sum + disc);
    let regime = if (gamma2 - beta2).abs() <= REGIME_TOLERANCE * (gamma2 + beta2) {
        Regime::GammaEqBeta
    } else if gamma2 > beta2 {
        Regime::GammaGtBeta
    } else {
        Regime::GammaLtBeta
    };
    Ok(QuarticSolution {
        alpha2,
        gamma2,
        beta2,
        x_minus,
        x_plus,
        regime,
    })
}

/// One member of the real fundamental system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFunction {
    Cos(f64),
    Sin(f64),
    Exp(f64),
    Linear,
    Constant,
}

impl BasisFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `order`-th derivative at `x`.
    pub fn derivative(&self, order: u32, x: f64) -> f64 {
        match *self {
            BasisFunction::Cos(k) => {
                let phase = (k * x).sin_cos();
                let value = match order % 4 {
                    0 => phase.1,
                    1 => -phase.0,
                    2 => -phase.1,
                    _ => phase.0,
                };
                k.powi(order as i32) * value
            }
            BasisFunction::Sin(k) => {
                let phase = (k * x).sin_cos();
                let value = match order % 4 {
                    0 => phase.0,
                    1 => phase.1,
                    2 => -phase.0,
                    _ => -phase.1,
                };
                k.powi(order as i32) * value
            }
            BasisFunction::Exp(k) => k.powi(order as i32) * (k * x).exp(),
            BasisFunction::Linear => match order {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            },
            BasisFunction::Constant => {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BasisFunction::Cos(k) => format!("cos({k} x)"),
            BasisFunction::Sin(k) => format!("sin({k} x)"),
            BasisFunction::Exp(k) => format!("exp({k} x)"),
            BasisFunction::Linear => "x".to_string(),
            BasisFunction::Constant => "1".to_string(),
        }
    }
}

/// Real fundamental system of the fourth-order equation.
pub fn general_solution_basis(q: &QuarticSolution) -> [BasisFunction; 4] {
    let km = q.x_minus.abs().sqrt();
    let kp = q.x_plus.abs().sqrt();
    let (third, fourth) = match q.regime {
        Regime::GammaGtBeta => (BasisFunction::Exp(kp), BasisFunction::Exp(-kp)),
        Regime::GammaLtBeta => (BasisFunction::Cos(kp), BasisFunction::Sin(kp)),
        Regime::GammaEqBeta => (BasisFunction::Linear, BasisFunction::Constant),
    };
    [BasisFunction::Cos(km), BasisFunction::Sin(km), third, fourth]
}

/// Largest residual of the fourth-order equation over the basis at `x`,
/// using exact derivatives.
pub fn basis_ode_residual(q: &QuarticSolution, x: f64) -> f64 {
    general_solution_basis(q)
        .iter()
        .map(|g| q.ode_residual(g.eval(x), g.derivative(2, x), g.derivative(4, x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcVerdict {
    pub rank_ok: bool,
    pub smallest_singular_ratio: f64,
    pub interval: (f64, f64),
}

/// Collocates the fundamental system at `m` equispaced points of
/// `[b0, b1]` and tests the `m x 4` matrix for full column rank.
///
/// Columns are scaled to unit Euclidean norm before the SVD, so a fast
/// growing exponential does not masquerade as rank deficiency. Fewer than
/// four points can never certify rank four.
pub fn unique_continuation_check(q: &QuarticSolution, b0: f64, b1: f64, m: usize) -> Result<UcVerdict> {
    if !(b0.is_finite() && b1.is_finite()) || b0 < 0.0 {
        return Err(Error::invalid(
            "interval",
            format!("need 0 <= b0 < b1, got [{b0}, {b1}]"),
        ));
    }
    if b1 <= b0 {
        return Err(Error::invalid("interval", format!("need b0 < b1, got [{b0}, {b1}]")));
    }
    if m == 0 {
        return Err(Error::invalid("m", "need at least one sample"));
    }
    let width = b1 - b0;
    let min = 4.0 * 1e-9 * b1.abs().max(1.0);
    if width < min {
        return Err(Error::IntervalTooSmall { width, min });
    }
    let basis = general_solution_basis(q);
    let points: Vec<f64> = if m == 1 {
        vec![0.5 * (b0 + b1)]
    } else {
        (0..m).map(|i| b0 + width * i as f64 / (m - 1) as f64).collect()
    };
    let mut a = DMatrix::from_fn(m, 4, |i, j| basis[j].eval(points[i]));
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let ratio = if m < 4 {
        0.0
    } else {
        let sv = a.svd(false, false).singular_values;
        let max = sv.max();
        if max > 0.0 {
            sv.min() / max
        } else {
            0.0
        }
    };
    Ok(UcVerdict {
        rank_ok: ratio > RANK_THRESHOLD,
        smallest_singular_ratio: ratio,
        interval: (b0, b1),
    })
}

fn check_modal_fields(problem: &ModalProblem, u: &[Complex64], v: &[Complex64]) -> Result<(usize, f64)> {
    if u.len() != v.len() || u.len() < 3 {
        return Err(Error::Dimension(format!(
            "modal fields need equal lengths >= 3, got u={} and v={}",
            u.len(),
            v.len()
        )));
    }
    let n = u.len() - 1;
    Ok((n, problem.params.l / n as f64))
}

/// Discrete L² norms of the residuals of
///
/// ```text
/// K u_xx - K v_x + rho omega² u = 0
/// EI v_xx + K u_x - K v - i b omega v + I_rho omega² v = 0
/// ```
///
/// at interior nodes, with centered differences.
pub fn modal_residual(problem: &ModalProblem, u: &[Complex64], v: &[Complex64]) -> Result<(f64, f64)> {
    let (n, h) = check_modal_fields(problem, u, v)?;
    let p = &problem.params;
    let w = problem.omega;
    let l = p.l;
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for j in 1..n {
        let uxx = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h);
        let vxx = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
        let ux = (u[j + 1] - u[j - 1]) / (2.0 * h);
        let vx = (v[j + 1] - v[j - 1]) / (2.0 * h);
        let b = problem.damping.eval(j as f64 * l / n as f64, l);
        let e1 = p.k * uxx - p.k * vx + p.rho * w * w * u[j];
        let e2 = p.ei * vxx + p.k * ux - p.k * v[j] - Complex64::new(0.0, b * w) * v[j] + p.i_rho * w * w * v[j];
        r1 += e1.norm_sqr();
        r2 += e2.norm_sqr();
    }
    Ok(((h * r1).sqrt(), (h * r2).sqrt()))
}

/// Discrete versions of the two scalar identities obtained by testing the
/// modal equations against `conj(u)` and `conj(v)`:
///
/// ```text
/// im_part = omega ∫ b |v|²
/// re_part = K ∫|u_x|² + EI ∫|v_x|² + 2K ∫ Re(conj(u) v_x) - rho omega² ∫|u|² + ∫ (K - I_rho omega²) |v|²
/// ```
///
/// Derivatives are forward differences on cells; the gradient terms and
/// `K ∫|v|²` use cell sums with cell-averaged `u`, `v`, and the mass terms
/// use the trapezoid rule. With this pairing, exact eigenpairs of the
/// discrete undamped operator give `re_part = 0` up to rounding.
pub fn weak_identities_check(problem: &ModalProblem, u: &[Complex64], v: &[Complex64]) -> Result<(f64, f64)> {
    let (n, h) = check_modal_fields(problem, u, v)?;
    let p = &problem.params;
    let w = problem.omega;
    let l = p.l;
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 { h * ((1..n).map(f).sum::<f64>() + 0.5 * (f(0) + f(n))) };
    let damped = trap(&|j| problem.damping.eval(j as f64 * l / n as f64, l) * v[j].norm_sqr());
    let im_part = w * damped;

    let mut grad_u = 0.0;
    let mut grad_v = 0.0;
    let mut cross = 0.0;
    let mut v_cells = 0.0;
    for c in 0..n {
        let ux = (u[c + 1] - u[c]) / h;
        let vx = (v[c + 1] - v[c]) / h;
        let ua = 0.5 * (u[c] + u[c + 1]);
        let va = 0.5 * (v[c] + v[c + 1]);
        grad_u += ux.norm_sqr();
        grad_v += vx.norm_sqr();
        cross += (ua.conj() * vx).re;
        v_cells += va.norm_sqr();
    }
    let mass_u = trap(&|j| u[j].norm_sqr());
    let mass_v = trap(&|j| v[j].norm_sqr());
    let re_part = h * (p.k * grad_u + p.ei * grad_v + 2.0 * p.k * cross + p.k * v_cells)
        - p.rho * w * w * mass_u
        - p.i_rho * w * w * mass_v;
    Ok((im_part, re_part))
}
