//! Discrete spectra, growth bounds and finite-dimensional spectral lemmas.
//!
//! Second-order operators are analysed in energy-normalized coordinates:
//! with the energy Gram matrix `Q = L Lᵀ`, the matrix `B = Lᵀ A L⁻ᵀ` is
//! similar to `A`, and its Euclidean adjoint is the energy adjoint of `A`.
//! The undamped generator becomes exactly skew-symmetric, which keeps tiny
//! real parts accurate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beam_model::{BeamParams, DampingProfile, Grid};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hessenberg_residual};
use crate::semigroup_sim::{energy_gram, second_order_matrix, Variant};
use crate::transport_operator::{damped_abscissa, Coupling, UpwindOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Full second-order generator.
    L,
    /// Second-order generator without the zero-order `-K v` term.
    L1,
    /// Transport operator with the full coupling matrix.
    S1C,
    /// Transport operator with diagonal damping only.
    S1C0,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::L => "L",
            OperatorKind::L1 => "L1",
            OperatorKind::S1C => "S1C",
            OperatorKind::S1C0 => "S1C0",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub kind: OperatorKind,
    pub params: BeamParams,
    pub grid: Grid,
    pub matrix: DMatrix<f64>,
    /// Gram matrix of the inner product in which the operator is analysed.
    pub gram: DMatrix<f64>,
}

pub fn build_operator(
    kind: OperatorKind,
    params: &BeamParams,
    damping: &DampingProfile,
    n: usize,
) -> Result<DiscreteOperator> {
    let grid = Grid::for_solver(n, params.l)?;
    let (matrix, gram) = match kind {
        OperatorKind::L | OperatorKind::L1 => {
            let variant = if kind == OperatorKind::L {
                Variant::Full
            } else {
                Variant::L1
            };
            damping.validate(params.l)?;
            (
                second_order_matrix(params, damping, &grid, variant),
                energy_gram(params, &grid),
            )
        }
        OperatorKind::S1C | OperatorKind::S1C0 => {
            let coupling = if kind == OperatorKind::S1C {
                Coupling::Full
            } else {
                Coupling::Diagonal
            };
            let op = UpwindOperator::new(params, damping, grid, coupling)?;
            let dim = op.dim();
            (op.matrix(), DMatrix::identity(dim, dim) * grid.h())
        }
    };
    Ok(DiscreteOperator {
        kind,
        params: *params,
        grid,
        matrix,
        gram,
    })
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Lᵀ A L⁻ᵀ` for `Q = L Lᵀ`.
    pub fn normalized(&self) -> Result<DMatrix<f64>> {
        normalize(&self.matrix, &self.gram)
    }

    /// `‖Q A + Aᵀ Q‖ / ‖Q A‖` (Frobenius), zero for energy-skew operators.
    pub fn skew_defect(&self) -> f64 {
        let qa = &self.gram * &self.matrix;
        let sym = &qa + qa.transpose();
        let scale = qa.norm();
        if scale == 0.0 {
            0.0
        } else {
            sym.norm() / scale
        }
    }
}

fn normalize(a: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("inner-product Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    // X = A L^{-T}  <=>  L Xᵀ = Aᵀ
    let xt = l.solve_lower_triangular(&a.transpose()).ok_or(Error::Singular(0))?;
    Ok(l.transpose() * xt.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    /// Smallest `|Re λ|` over eigenvalues with `|λ| > 1e-12 ‖A‖`.
    pub min_abs_real_part: f64,
    /// Largest relative residual `‖H x - λ x‖ / ‖H‖` over the sampled pairs.
    pub max_residual: f64,
    pub conjugate_pairs_ok: bool,
    pub iterations: usize,
}

/// Connected components of the symmetric sparsity graph of `a`.
fn blocks(a: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if !seen[j] && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Eigenvalues of a dense real matrix, solving decoupled blocks separately,
/// with inverse-iteration residuals for `samples` eigenvalues spread over
/// the spectrum.
pub fn spectrum_of_matrix(a: &DMatrix<f64>, samples: usize) -> Result<SpectrumReport> {
    let n = a.nrows();
    let mut all = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    let mut iterations = 0;
    let parts = blocks(a);
    let mut budget = samples;
    for (b, members) in parts.iter().enumerate() {
        let sub = DMatrix::from_fn(members.len(), members.len(), |i, j| a[(members[i], members[j])]);
        let sol = eigenvalues(&sub)?;
        iterations += sol.iterations;
        // share the residual samples across blocks, at least one per nontrivial block
        let remaining = parts.len() - b;
        let quota = if members.len() > 1 {
            (budget / remaining).max(1).min(members.len())
        } else {
            0
        };
        budget = budget.saturating_sub(quota);
        for s in 0..quota {
            let idx = s * sol.eigenvalues.len() / quota;
            let (_, r) = hessenberg_residual(&sol.hessenberg, sol.eigenvalues[idx])?;
            residual = residual.max(r);
        }
        all.extend(sol.eigenvalues);
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let max_real_part = all.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_abs_real_part = all
        .iter()
        .filter(|z| z.norm() > 1e-12 * scale)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let conjugate_pairs_ok = conjugate_pairs_ok(&all, 1e-10 * scale);
    Ok(SpectrumReport {
        eigenvalues: all,
        max_real_part,
        min_abs_real_part,
        max_residual: residual,
        conjugate_pairs_ok,
        iterations,
    })
}

fn conjugate_pairs_ok(eigs: &[Complex64], tol: f64) -> bool {
    let mut upper: Vec<Complex64> = eigs.iter().filter(|z| z.im > tol).copied().collect();
    let mut lower: Vec<Complex64> = eigs.iter().filter(|z| z.im < -tol).map(|z| z.conj()).collect();
    if upper.len() != lower.len() {
        return false;
    }
    let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    upper.sort_by(key);
    lower.sort_by(key);
    upper.iter().zip(&lower).all(|(a, b)| (a - b).norm() <= tol.max(1e-10))
}

/// Full spectrum of a discrete operator, in its own inner product.
pub fn discrete_spectrum(op: &DiscreteOperator) -> Result<SpectrumReport> {
    let b = match op.kind {
        OperatorKind::L | OperatorKind::L1 => op.normalized()?,
        OperatorKind::S1C | OperatorKind::S1C0 => op.matrix.clone(),
    };
    spectrum_of_matrix(&b, 10)
}

/// Unit eigenvector estimate of `A` for an approximate eigenvalue, by
/// inverse iteration with a dense complex LU.
pub fn eigenvector(a: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let shift = lambda + Complex64::new(1.0, 1.0) * (1e-12 * scale);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { shift } else { Complex64::new(0.0, 0.0) };
        Complex64::new(a[(i, j)], 0.0) - diag
    });
    let lu = m.lu();
    let mut x = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        x = lu.solve(&x).ok_or(Error::Singular(0))?;
        let norm = x.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NoConvergence("inverse iteration diverged".into()));
        }
        x /= Complex64::new(norm, 0.0);
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    /// `min_t log ‖e^{tA}‖ / t` over the samples.
    pub estimate: f64,
    pub max_real_part: f64,
    pub samples: Vec<(f64, f64)>,
}

fn two_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Growth-bound estimate of `A` in the inner product with Gram matrix `gram`.
pub fn growth_bound_of_matrix(a: &DMatrix<f64>, gram: &DMatrix<f64>, t_samples: &[f64]) -> Result<GrowthEstimate> {
    if t_samples.is_empty() || t_samples.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("t_samples", "need at least one positive, finite time"));
    }
    let b = normalize(a, gram)?;
    let max_real_part = spectrum_of_matrix(&b, 0)?.max_real_part;
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let e = (&b * t).exp();
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::Scaling(format!("exp(tA) overflowed at t = {t}")));
        }
        let norm = two_norm(&e);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Scaling(format!("‖exp(tA)‖ = {norm} at t = {t}")));
        }
        samples.push((t, norm.ln() / t));
    }
    let estimate = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(GrowthEstimate {
        estimate,
        max_real_part,
        samples,
    })
}

/// Growth-bound estimate of a discrete operator in its energy norm.
/// Limited to `n <= 200` cells.
pub fn growth_bound_estimate(op: &DiscreteOperator, t_samples: &[f64]) -> Result<GrowthEstimate> {
    if op.grid.n > 200 {
        return Err(Error::Precondition(format!(
            "matrix exponential limited to n <= 200, got {}",
            op.grid.n
        )));
    }
    growth_bound_of_matrix(&op.matrix, &op.gram, t_samples)
}

/// Smallest `|Re λ|` among eigenvalues with `|Im λ| >= fraction * max |Im λ|`.
pub fn least_damped_in_band(eigs: &[Complex64], fraction: f64) -> f64 {
    let top = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    eigs.iter()
        .filter(|z| z.im.abs() >= fraction * top)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulationRow {
    pub n: usize,
    /// Abscissa of the vertical line, `0` or `-∫b / (2 l I_rho)`.
    pub line: f64,
    /// Largest distance to this line among the top-frequency eigenvalues
    /// closer to it than to the other line.
    pub max_distance: f64,
    pub count: usize,
}

/// For each `n`, splits the upper third (by imaginary part) of the upper
/// half of the discrete `L` spectrum between the two vertical lines
/// `Re = 0` and `Re = -∫b / (2 l I_rho)` and reports the largest distance to
/// each line.
pub fn essential_accumulation_diagnostic(
    params: &BeamParams,
    damping: &DampingProfile,
    n_list: &[usize],
) -> Result<Vec<AccumulationRow>> {
    if !params.distinct_speeds() {
        return Err(Error::Precondition(
            "accumulation diagnostic needs distinct wave speeds".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list", "must be strictly increasing"));
    }
    let lines = [0.0, damped_abscissa(params, damping)];
    let mut rows = Vec::new();
    for &n in n_list {
        let op = build_operator(OperatorKind::L, params, damping, n)?;
        let report = discrete_spectrum(&op)?;
        let mut upper: Vec<Complex64> = report.eigenvalues.iter().filter(|z| z.im > 0.0).copied().collect();
        upper.sort_by(|a, b| a.im.total_cmp(&b.im));
        let top = &upper[upper.len() - upper.len() / 3..];
        for (i, line) in lines.iter().enumerate() {
            let other = lines[1 - i];
            let mine: Vec<f64> = top
                .iter()
                .filter(|z| (z.re - line).abs() <= (z.re - other).abs())
                .map(|z| (z.re - line).abs())
                .collect();
            rows.push(AccumulationRow {
                n,
                line: *line,
                max_distance: mine.iter().copied().fold(0.0, f64::max),
                count: mine.len(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub trials: usize,
    pub failures: usize,
    /// Largest normalized deviation seen (relative to the pass threshold's scale).
    pub max_deviation: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

/// Hausdorff distance between two finite point sets in the complex plane.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_way(a, b).max(one_way(b, a))
}

/// Checks `σ(J⁻¹ R J) = σ(R)` for random `R` and random `J` with condition
/// number at most `10³`, to `1e-6 ‖R‖` in Hausdorff distance.
pub fn similarity_spectrum_invariance(trials: usize, dim: usize, seed: u64) -> Result<LemmaReport> {
    if dim == 0 || dim > 50 {
        return Err(Error::invalid("dim", format!("need 1 <= dim <= 50, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let r = random_matrix(&mut rng, dim, dim);
        let q1 = random_orthogonal(&mut rng, dim);
        let q2 = random_orthogonal(&mut rng, dim);
        let s: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.gen_range(0.0..3.0))).collect();
        let j = &q1 * DMatrix::from_diagonal(&DVector::from_vec(s.clone())) * &q2;
        let j_inv = q2.transpose()
            * DMatrix::from_diagonal(&DVector::from_iterator(dim, s.iter().map(|x| 1.0 / x)))
            * q1.transpose();
        let conj = &j_inv * &r * &j;
        let a = eigenvalues(&r)?.eigenvalues;
        let b = eigenvalues(&conj)?.eigenvalues;
        let dev = hausdorff(&a, &b) / r.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(dev);
        if dev > 1e-6 {
            failures += 1;
        }
    }
    Ok(LemmaReport {
        trials,
        failures,
        max_deviation: worst,
    })
}

/// Matches two multisets of complex numbers greedily by nearest neighbour
/// and returns the largest matched distance, or `None` if sizes differ.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for p in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, q)| (i, (p - q).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        used[idx] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// With `P` the orthogonal projection onto a random `subdim`-dimensional
/// subspace `G₀` and `R` a random operator with range in `G₀`, checks
/// `(R P)^k = R^k P` for `k = 1..5` to `1e-10` and that the eigenvalues of
/// `R P` with `|λ| > 1e-8` agree with those of `R` restricted to `G₀` to
/// `1e-6`.
pub fn projection_multiplication_invariance(
    trials: usize,
    dim: usize,
    subdim: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if dim > 50 || subdim == 0 || subdim >= dim {
        return Err(Error::invalid(
            "dim",
            format!("need 0 < subdim < dim <= 50, got subdim = {subdim}, dim = {dim}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    let id = DMatrix::<f64>::identity(dim, dim);
    for _ in 0..trials {
        let basis = random_orthogonal(&mut rng, dim).columns(0, subdim).into_owned();
        let p = &basis * basis.transpose();
        let scale = 1.0 / (subdim as f64).sqrt();
        let r0 = random_matrix(&mut rng, subdim, subdim) * scale;
        let m = random_matrix(&mut rng, subdim, dim) * scale;
        let r = &basis * &r0 * basis.transpose() + &basis * m * (&id - &p);
        let rp = &r * &p;
        let mut ok = true;
        let mut lhs = rp.clone();
        let mut rk = r.clone();
        for k in 1..=5 {
            if k > 1 {
                lhs = &lhs * &rp;
                rk = &rk * &r;
            }
            let dev = (&lhs - &rk * &p).amax() / rk.amax().max(1.0);
            worst = worst.max(dev / 1e-10 * 1e-6);
            if dev > 1e-10 {
                ok = false;
            }
        }
        let restricted = basis.transpose() * &r * &basis;
        let big: Vec<Complex64> = eigenvalues(&rp)?
            .eigenvalues
            .into_iter()
            .filter(|z| z.norm() > 1e-8)
            .collect();
        let small: Vec<Complex64> = eigenvalues(&restricted)?
            .eigenvalues
            .into_iter()
            .filter(|z| z.norm() > 1e-8)
            .collect();
        match multiset_distance(&big, &small) {
            Some(d) => {
                worst = worst.max(d);
                if d > 1e-6 {
                    ok = false;
                }
            }
            None => ok = false,
        }
        if !ok {
            failures += 1;
        }
    }
    Ok(LemmaReport {
        trials,
        failures,
        max_deviation: worst,
    })
}
