//! GPT data-matrix fitting and the fair-coin-flip contextuality pipeline.
//!
//! The input is a raw matrix of outcome frequencies `f[i][j] = freq(X=0 |
//! measurement i, preparation j)` with statistical uncertainties. The pipeline
//! has three stages:
//!
//! 1. **Fit** ([`fit_gpt`]): find the generalized-probabilistic-theory (GPT)
//!    description closest to the raw data in which the first `m_t` measurement
//!    effects are tomographically complete. Tomographic completeness is
//!    equivalent to every remaining measurement row `c` being affinely
//!    determined by the first `m_t` rows: there are coefficients
//!    `(a_c1 .. a_c[m_t], a_c)` with `Σ_i a_ci p_ij + a_c p_cj = 1` for every
//!    preparation `j`. The fit is a weighted total-least-squares projection of
//!    the data columns onto the intersection of those hyperplanes.
//! 2. **Secondary procedures** ([`secondary_preparations`],
//!    [`secondary_measurements`]): build mixtures of the primary preparations
//!    and measurements that satisfy the operational equivalences required by a
//!    noncontextuality argument *exactly*, staying as close to the primaries as
//!    possible. Both searches are linear programs solved in exact rational
//!    arithmetic, so the equivalences hold exactly rather than approximately.
//! 3. **Witness** ([`fcf_witness`]): evaluate the fair-coin-flip (FCF) average
//!    `A′ = (1/6) Σ_t Σ_b p(X=b | M_t, P_{t,b})` on the secondary data and
//!    compare against the noncontextual bound `5/6`.
//!
//! The FCF experiment layout used throughout: 4 measurement rows `M_1..M_4`
//! (a trine of spin axes in the x–z plane plus the y axis as tomographic
//! supplement) and 8 preparation columns `P_{1,0}, P_{1,1}, .., P_{4,1}`
//! (for each axis, the two eigenstates; `b = 0` is the state aligned with the
//! axis). [`synthesize_raw_data`] generates such matrices from the Born rule
//! under depolarizing noise with binomially sampled counts, so the whole
//! pipeline can be exercised end to end without experimental data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jm::NoisySpinObservable;
use crate::polytope::{
    enumerate_vertices, lp_maximize, rat, rat_int, rat_to_f64, HPolytope, Rat, VertexSet,
};
use crate::quantum::{born_probability, DensityOperator};

/// Denominator used when floating-point probabilities are converted to exact
/// rationals for the linear-programming stage (resolution `1e-12`).
const RATIONALIZATION_DENOMINATOR: i64 = 1_000_000_000_000;

/// Noncontextual upper bound on the fair-coin-flip average `A′`.
pub const FCF_NC_BOUND: f64 = 5.0 / 6.0;

/// Convert a probability-sized float to an exact rational at `1e-12`
/// resolution (round half away from zero). All linear programs in this module
/// run on values converted this way, so their outputs are exact with respect
/// to this rationalization.
pub fn rationalize(x: f64) -> Rat {
    rat(
        (x * RATIONALIZATION_DENOMINATOR as f64).round() as i64,
        RATIONALIZATION_DENOMINATOR,
    )
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Raw frequency matrix of an `m`-measurement, `n`-preparation experiment.
///
/// `f[i][j]` is the observed fraction of `X = 0` outcomes for measurement `i`
/// on preparation `j`; `df[i][j]` is its positive statistical uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataMatrix {
    f: Vec<Vec<f64>>,
    df: Vec<Vec<f64>>,
}

impl RawDataMatrix {
    /// Validates shapes (equal, rectangular, nonempty), `f ∈ [0,1]`, `df > 0`.
    pub fn new(f: Vec<Vec<f64>>, df: Vec<Vec<f64>>) -> Result<Self> {
        let m = f.len();
        if m == 0 || f[0].is_empty() {
            return Err(Error::ShapeMismatch(String::from(
                "raw data matrix must have at least one row and one column",
            )));
        }
        let n = f[0].len();
        if df.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "frequency matrix has {m} rows but uncertainty matrix has {}",
                df.len()
            )));
        }
        for i in 0..m {
            if f[i].len() != n || df[i].len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} is ragged: expected {n} columns"
                )));
            }
            for j in 0..n {
                let v = f[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::NumericalRangeError { value: v });
                }
                if !(df[i][j] > 0.0) || !df[i][j].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "uncertainty df[{i}][{j}] = {} must be positive and finite",
                        df[i][j]
                    )));
                }
            }
        }
        Ok(RawDataMatrix { f, df })
    }

    /// Number of measurement rows `m`.
    pub fn n_measurements(&self) -> usize {
        self.f.len()
    }

    /// Number of preparation columns `n`.
    pub fn n_preparations(&self) -> usize {
        self.f[0].len()
    }

    /// Frequency rows.
    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.f
    }

    /// Uncertainty rows.
    pub fn uncertainties(&self) -> &[Vec<f64>] {
        &self.df
    }
}

/// A fitted GPT description: the first `m_t` effects are tomographically
/// complete, so each dependent row `c ∈ {m_t, .., m−1}` (0-based) satisfies
/// the affine constraint `Σ_{i<m_t} a_ci p_ij + a_c p_cj = 1` for all columns.
///
/// `hyperplanes[c − m_t] = [a_c1, .., a_c[m_t], a_c]` stores the `m_t + 1`
/// coefficients of dependent row `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GptModel {
    m_t: usize,
    hyperplanes: Vec<Vec<f64>>,
}

impl GptModel {
    /// Validates `m_t ≥ 1` and that every hyperplane has `m_t + 1` finite
    /// coefficients.
    pub fn new(m_t: usize, hyperplanes: Vec<Vec<f64>>) -> Result<Self> {
        if m_t < 1 {
            return Err(Error::InvalidInput(String::from(
                "a GPT model needs at least one tomographically complete effect (m_t >= 1)",
            )));
        }
        if hyperplanes.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "a GPT model needs at least one dependent measurement row",
            )));
        }
        for (idx, h) in hyperplanes.iter().enumerate() {
            if h.len() != m_t + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "hyperplane {idx} has {} coefficients, expected m_t + 1 = {}",
                    h.len(),
                    m_t + 1
                )));
            }
            if h.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "hyperplane {idx} has a non-finite coefficient"
                )));
            }
        }
        Ok(GptModel { m_t, hyperplanes })
    }

    /// Number of tomographically complete effects.
    pub fn m_t(&self) -> usize {
        self.m_t
    }

    /// Total number of measurement rows `m = m_t + #hyperplanes`.
    pub fn n_measurements(&self) -> usize {
        self.m_t + self.hyperplanes.len()
    }

    /// Hyperplane coefficient rows, one per dependent measurement.
    pub fn hyperplanes(&self) -> &[Vec<f64>] {
        &self.hyperplanes
    }

    /// Whether every dependent-row coefficient `a_c` is bounded away from zero
    /// (|a_c| > 1e-9). When `a_c = 0` the constraint does not involve row `c`
    /// at all, so that row's GPT effect cannot be reconstructed from the
    /// hyperplane. Sampled data satisfies this generically, but exactly planar
    /// families can fail it legitimately: noiseless trine data obeys
    /// `(2/3)(p_1 + p_2 + p_3) = 1`, whose supplementary-row coefficient is 0.
    pub fn is_generic(&self) -> bool {
        self.hyperplanes.iter().all(|h| h[self.m_t].abs() > 1e-9)
    }

    /// Maximum absolute residual `|Σ_i a_ci p_ij + a_c p_cj − 1|` of a
    /// probability matrix against all hyperplane constraints.
    pub fn residual(&self, p: &[Vec<f64>]) -> Result<f64> {
        let m = self.n_measurements();
        if p.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} rows, model expects {m}",
                p.len()
            )));
        }
        let n = p[0].len();
        if p.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(String::from("matrix is ragged")));
        }
        let mut worst = 0.0f64;
        for (idx, h) in self.hyperplanes.iter().enumerate() {
            let c = self.m_t + idx;
            for j in 0..n {
                let mut r = -1.0;
                for i in 0..self.m_t {
                    r += h[i] * p[i][j];
                }
                r += h[self.m_t] * p[c][j];
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}

/// Probability matrix consistent with a fitted [`GptModel`]: every column lies
/// on the intersection of the model's hyperplanes (residual ≤ 1e-10) and all
/// entries are probabilities. Retains the model's hyperplane coefficients so
/// that the exact-rational stage can reproduce the affine dependencies
/// between rows exactly rather than merely to rounding resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryDataMatrix {
    p: Vec<Vec<f64>>,
    m_t: usize,
    hyperplanes: Vec<Vec<f64>>,
}

impl PrimaryDataMatrix {
    /// Validates shape against the model, entries in `[0,1]` (up to 1e-9,
    /// clamped), and hyperplane residual ≤ 1e-10.
    pub fn new(p: Vec<Vec<f64>>, model: &GptModel) -> Result<Self> {
        let mut p = p;
        for row in p.iter_mut() {
            for v in row.iter_mut() {
                if *v < -1e-9 || *v > 1.0 + 1e-9 {
                    return Err(Error::NumericalRangeError { value: *v });
                }
                *v = v.clamp(0.0, 1.0);
            }
        }
        let res = model.residual(&p)?;
        if res > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix violates the GPT hyperplane constraints: residual {res:.3e} > 1e-10"
            )));
        }
        Ok(PrimaryDataMatrix {
            p,
            m_t: model.m_t(),
            hyperplanes: model.hyperplanes().to_vec(),
        })
    }

    /// Number of measurement rows.
    pub fn n_measurements(&self) -> usize {
        self.p.len()
    }

    /// Number of preparation columns.
    pub fn n_preparations(&self) -> usize {
        self.p[0].len()
    }

    /// Probability rows.
    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.p
    }
}

// ---------------------------------------------------------------------------
// Small dense real linear algebra helpers
// ---------------------------------------------------------------------------

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol` (singular system).
fn solve_linear(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&r1, &r2| {
            m[r1][col]
                .abs()
                .partial_cmp(&m[r2][col].abs())
                .unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if m[piv][col].abs() <= tol {
            return None;
        }
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let factor = m[row][col] / m[col][col];
                for k in col..=n {
                    let v = m[col][k];
                    m[row][k] -= factor * v;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Numerical rank of a rectangular real matrix by Gaussian elimination with
/// full row/column pivoting; a pivot counts while its magnitude exceeds
/// `1e-8 × (largest absolute entry of the input)`.
pub fn matrix_rank(rows: &[Vec<f64>]) -> Result<usize> {
    if rows.is_empty() || rows[0].is_empty() {
        return Ok(0);
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(String::from("matrix is ragged")));
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return Ok(0);
    }
    let tol = 1e-8 * scale;
    let mut rank = 0usize;
    let rows_n = a.len();
    for _ in 0..rows_n.min(n) {
        // locate the largest remaining entry
        let mut best = (rank, rank, 0.0f64);
        for r in rank..rows_n {
            for c in 0..n {
                if a[r][c].abs() > best.2 {
                    best = (r, c, a[r][c].abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pr, pc, _) = best;
        a.swap(rank, pr);
        for r in (rank + 1)..rows_n {
            let factor = a[r][pc] / a[rank][pc];
            for c in 0..n {
                let v = a[rank][c];
                a[r][c] -= factor * v;
            }
        }
        rank += 1;
        if rank == rows_n {
            break;
        }
    }
    Ok(rank)
}

// ---------------------------------------------------------------------------
// Weighted total-least-squares GPT fit
// ---------------------------------------------------------------------------

/// Constraint matrix rows as dense length-`m` vectors: row `idx` has the
/// fiducial coefficients in columns `0..m_t` and `a_c` in column `m_t + idx`.
fn constraint_rows(m: usize, m_t: usize, theta: &[f64]) -> Vec<Vec<f64>> {
    let n_planes = m - m_t;
    let mut rows = Vec::with_capacity(n_planes);
    for idx in 0..n_planes {
        let h = &theta[idx * (m_t + 1)..(idx + 1) * (m_t + 1)];
        let mut row = vec![0.0; m];
        row[..m_t].copy_from_slice(&h[..m_t]);
        row[m_t + idx] = h[m_t];
        rows.push(row);
    }
    rows
}

/// Per-column generalized chi-square distance to the hyperplane intersection.
///
/// For column `r` with weights `w_i = df_i²`, minimizing
/// `Σ_i (p_i − r_i)²/w_i` subject to `C p = 1` gives
/// `χ² = (C r − 1)ᵀ (C W Cᵀ)⁻¹ (C r − 1)` (method of Lagrange multipliers).
/// For a single constraint this is the familiar closed form
/// `χ² = (z·r − 1)² / Σ_i (z_i df_i)²`. Returns `None` when the Gram matrix
/// `C W Cᵀ` is singular (degenerate coefficients).
fn fit_column(c_rows: &[Vec<f64>], r: &[f64], df: &[f64]) -> Option<f64> {
    let k = c_rows.len();
    let mut v = vec![0.0; k];
    for (a, row) in c_rows.iter().enumerate() {
        v[a] = row.iter().zip(r).map(|(ci, ri)| ci * ri).sum::<f64>() - 1.0;
    }
    let mut g = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let dot: f64 = (0..r.len())
                .map(|i| c_rows[a][i] * c_rows[b][i] * df[i] * df[i])
                .sum();
            g[a][b] = dot;
            g[b][a] = dot;
        }
    }
    let scale = g
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let lambda = solve_linear(&g, &v, 1e-14 * scale.max(1e-300))?;
    Some(v.iter().zip(&lambda).map(|(vi, li)| vi * li).sum())
}

/// Total weighted chi-square of the raw matrix against the hyperplane family
/// encoded by `theta` (flattened coefficient rows). Returns a large penalty
/// when the constraint Gram matrix is singular (degenerate coefficients).
fn chi2_objective(raw: &RawDataMatrix, m_t: usize, theta: &[f64]) -> f64 {
    let m = raw.n_measurements();
    let n = raw.n_preparations();
    let c_rows = constraint_rows(m, m_t, theta);
    let mut total = 0.0;
    for j in 0..n {
        let r: Vec<f64> = (0..m).map(|i| raw.f[i][j]).collect();
        let df: Vec<f64> = (0..m).map(|i| raw.df[i][j]).collect();
        match fit_column(&c_rows, &r, &df) {
            Some(chi2) => total += chi2,
            None => return 1e30,
        }
    }
    total
}

/// Project every raw column onto the hyperplane intersection of `theta`,
/// keeping every entry inside [0,1]. The unconstrained weighted projection can
/// overshoot into slightly negative values for near-deterministic cells
/// (frequency 0 or 1 with floor uncertainties), so coordinates that land
/// outside the box are pinned at their bound and the remaining coordinates
/// are re-projected (active-set iteration); the result stays exactly on the
/// hyperplanes.
fn project_columns(raw: &RawDataMatrix, m_t: usize, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = raw.n_measurements();
    let n = raw.n_preparations();
    let c_rows = constraint_rows(m, m_t, theta);
    let k = c_rows.len();
    let mut p = vec![vec![0.0; n]; m];
    for j in 0..n {
        let r: Vec<f64> = (0..m).map(|i| raw.f[i][j]).collect();
        let df: Vec<f64> = (0..m).map(|i| raw.df[i][j]).collect();
        let mut pinned: Vec<Option<f64>> = vec![None; m];
        let col = loop {
            // Lagrange system over the free coordinates; pinned coordinates
            // move to the constraint right-hand side.
            let mut rhs = vec![1.0; k];
            for (i, pin) in pinned.iter().enumerate() {
                if let Some(b) = pin {
                    for (c, row) in c_rows.iter().enumerate() {
                        rhs[c] -= row[i] * b;
                    }
                }
            }
            let mut g = vec![vec![0.0; k]; k];
            let mut v = vec![0.0; k];
            for c in 0..k {
                for i in 0..m {
                    if pinned[i].is_none() {
                        v[c] += c_rows[c][i] * r[i];
                        for c2 in 0..k {
                            g[c][c2] += c_rows[c][i] * c_rows[c2][i] * df[i] * df[i];
                        }
                    }
                }
                v[c] -= rhs[c];
            }
            let scale = g
                .iter()
                .flat_map(|row| row.iter())
                .fold(0.0f64, |acc, x| acc.max(x.abs()));
            let lambda = solve_linear(&g, &v, 1e-14 * scale.max(1e-300)).ok_or_else(|| {
                Error::DegenerateFit(format!(
                    "constraint Gram matrix is singular for column {j}"
                ))
            })?;
            let mut col = vec![0.0; m];
            for i in 0..m {
                col[i] = match pinned[i] {
                    Some(b) => b,
                    None => {
                        let corr: f64 = c_rows
                            .iter()
                            .zip(&lambda)
                            .map(|(row, l)| row[i] * l)
                            .sum();
                        r[i] - df[i] * df[i] * corr
                    }
                };
            }
            let mut worst = (1e-11, None);
            for (i, &x) in col.iter().enumerate() {
                if pinned[i].is_none() {
                    let viol = (-x).max(x - 1.0);
                    if viol > worst.0 {
                        worst = (viol, Some(i));
                    }
                }
            }
            match worst.1 {
                Some(i) => pinned[i] = Some(if col[i] < 0.5 { 0.0 } else { 1.0 }),
                None => break col,
            }
        };
        for i in 0..m {
            p[i][j] = col[i];
        }
    }
    Ok(p)
}

/// Ordinary least-squares initial hyperplane for dependent row `c`:
/// minimize `Σ_j (Σ_i z_i x_ij − 1)²` over `z` where `x_j` collects the
/// fiducial entries and the row-`c` entry of column `j`.
fn ols_initial_plane(raw: &RawDataMatrix, m_t: usize, c: usize) -> Result<Vec<f64>> {
    let n = raw.n_preparations();
    let dim = m_t + 1;
    let mut xtx = vec![vec![0.0; dim]; dim];
    let mut xt1 = vec![0.0; dim];
    for j in 0..n {
        let mut x = Vec::with_capacity(dim);
        for i in 0..m_t {
            x.push(raw.f[i][j]);
        }
        x.push(raw.f[c][j]);
        for a in 0..dim {
            xt1[a] += x[a];
            for b in 0..dim {
                xtx[a][b] += x[a] * x[b];
            }
        }
    }
    let scale = xtx
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    solve_linear(&xtx, &xt1, 1e-12 * scale.max(1e-300)).ok_or_else(|| {
        Error::DegenerateFit(format!(
            "least-squares normal equations are singular for measurement row {c}"
        ))
    })
}

/// Nelder–Mead simplex minimization. Returns the best value and point found.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> (f64, Vec<f64>) {
    let dim = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    simplex.push((f(x0), x0.to_vec()));
    for i in 0..dim {
        let mut x = x0.to_vec();
        let step = 0.1 * x[i].abs().max(1.0);
        x[i] += step;
        simplex.push((f(&x), x));
    }
    let sort = |s: &mut Vec<(f64, Vec<f64>)>| {
        s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal))
    };
    sort(&mut simplex);
    for _ in 0..max_iter {
        let best = simplex[0].0;
        let worst = simplex[dim].0;
        if (worst - best).abs() <= tol * (best.abs() + tol) {
            break;
        }
        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for v in simplex.iter().take(dim) {
            for (ci, xi) in centroid.iter_mut().zip(&v.1) {
                *ci += xi / dim as f64;
            }
        }
        let combine = |alpha: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].1)
                .map(|(c, w)| c + alpha * (c - w))
                .collect()
        };
        let reflected = combine(1.0);
        let fr = f(&reflected);
        if fr < simplex[0].0 {
            let expanded = combine(2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr {
                (fe, expanded)
            } else {
                (fr, reflected)
            };
        } else if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, reflected);
        } else {
            let contracted = if fr < simplex[dim].0 {
                combine(0.5)
            } else {
                combine(-0.5)
            };
            let fc = f(&contracted);
            if fc < simplex[dim].0.min(fr) {
                simplex[dim] = (fc, contracted);
            } else {
                // shrink toward the best vertex
                let best_point = simplex[0].1.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, bi) in v.1.iter_mut().zip(&best_point) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    v.0 = f(&v.1);
                }
            }
        }
        sort(&mut simplex);
    }
    let (val, point) = simplex.swap_remove(0);
    (val, point)
}

/// Fit a GPT model with `m_t` tomographically complete effects to a raw data
/// matrix by weighted total least squares.
///
/// Minimizes `Σ_j χ²_j` over the hyperplane coefficients, where `χ²_j` is the
/// Mahalanobis distance of column `j` from the hyperplane intersection (for a
/// single hyperplane, `χ²_j = (z·r_j − 1)² / Σ_i (z_i Δr_ij)²`). The search is
/// Nelder–Mead with 16 restarts around a least-squares initial plane (fixed
/// internal RNG stream, so the fit is deterministic); objective tolerance
/// 1e-12.
///
/// Returns the model, the per-column weighted projection of the data onto the
/// fitted hyperplane intersection, and the achieved chi-square.
///
/// Errors with [`Error::DegenerateFit`] when nothing can be fitted: `m_t ≥ m`
/// (no dependent row), fewer than `m_t + 1` preparations, or a design matrix
/// of rank < `m_t + 1` (the hyperplane is not identifiable).
pub fn fit_gpt(raw: &RawDataMatrix, m_t: usize) -> Result<(GptModel, PrimaryDataMatrix, f64)> {
    let m = raw.n_measurements();
    let n = raw.n_preparations();
    if m_t < 1 {
        return Err(Error::InvalidInput(String::from(
            "need at least one tomographically complete effect (m_t >= 1)",
        )));
    }
    if m_t >= m {
        return Err(Error::DegenerateFit(format!(
            "m_t = {m_t} leaves no dependent measurement row out of m = {m}: no constraint to fit"
        )));
    }
    if n < m_t + 1 {
        return Err(Error::DegenerateFit(format!(
            "need at least m_t + 1 = {} preparations to identify a hyperplane, got {n}",
            m_t + 1
        )));
    }
    // Identifiability: for each dependent row the n×(m_t+1) design matrix of
    // column coordinates must have full column rank.
    for c in m_t..m {
        let design: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut x: Vec<f64> = (0..m_t).map(|i| raw.f[i][j]).collect();
                x.push(raw.f[c][j]);
                x
            })
            .collect();
        if matrix_rank(&design)? < m_t + 1 {
            return Err(Error::DegenerateFit(format!(
                "design matrix for measurement row {c} has rank < m_t + 1: \
                 the hyperplane is not identifiable"
            )));
        }
    }

    let mut x0: Vec<f64> = Vec::with_capacity((m - m_t) * (m_t + 1));
    for c in m_t..m {
        x0.extend(ols_initial_plane(raw, m_t, c)?);
    }

    let objective = |theta: &[f64]| chi2_objective(raw, m_t, theta);
    let max_iter = 400 * x0.len().max(4);
    let mut best = nelder_mead(&objective, &x0, max_iter, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(0x4750_5446); // fixed stream for restart jitter
    for _ in 1..16 {
        let start: Vec<f64> = x0
            .iter()
            .map(|&v| v + (rng.gen::<f64>() - 0.5) * 0.4 * v.abs().max(1.0))
            .collect();
        let cand = nelder_mead(&objective, &start, max_iter, 1e-12);
        if cand.0 < best.0 {
            best = cand;
        }
    }

    let (chi2, theta) = best;
    let hyperplanes: Vec<Vec<f64>> = theta
        .chunks(m_t + 1)
        .map(|chunk| chunk.to_vec())
        .collect();
    let model = GptModel::new(m_t, hyperplanes)?;
    let p = project_columns(raw, m_t, &theta)?;
    let primary = PrimaryDataMatrix::new(p, &model)?;
    Ok((model, primary, chi2))
}

// ---------------------------------------------------------------------------
// Secondary procedures (exact rational linear programming)
// ---------------------------------------------------------------------------

/// Preparation grouping of the FCF experiment: secondary preparations are
/// built for primary columns 0..5 (the trine eigenstate pairs), grouped as
/// `{P_{1,0},P_{1,1}}, {P_{2,0},P_{2,1}}, {P_{3,0},P_{3,1}}`.
pub fn fcf_groups() -> Vec<Vec<usize>> {
    vec![vec![0, 1], vec![2, 3], vec![4, 5]]
}

/// Designated measurement rows of the FCF experiment: secondary measurements
/// are built for the trine rows `M_1, M_2, M_3`.
pub fn fcf_designated_measurements() -> Vec<usize> {
    vec![0, 1, 2]
}

/// Exact rational image of a primary matrix. Fiducial rows (and hyperplane
/// coefficients) are rationalized on the 1e-12 grid; each dependent row with a
/// generic coefficient (|a_c| > 1e-9) is then *reconstructed* from the
/// rationalized fiducial rows, `p_cj = (1 − Σ_i a_ci p_ij) / a_c`, so the
/// affine dependencies between rows hold exactly in rational arithmetic just
/// as they hold (to working precision) between the floating-point rows.
/// Without the reconstruction, independent per-entry rounding would leave
/// ~1e-12 inconsistencies in a direction where the columns barely differ, and
/// the exact-equality LPs would spend large mixing weights cancelling pure
/// rounding noise. Non-generic dependent rows (a_c ≈ 0) are not determined by
/// the hyperplane and are rationalized entrywise like fiducial rows.
fn rationalize_matrix(p: &PrimaryDataMatrix) -> Vec<Vec<Rat>> {
    let m_t = p.m_t;
    let mut out: Vec<Vec<Rat>> = p
        .probabilities()
        .iter()
        .take(m_t)
        .map(|row| row.iter().map(|&x| rationalize(x)).collect())
        .collect();
    for (idx, row) in p.probabilities().iter().enumerate().skip(m_t) {
        let h = &p.hyperplanes[idx - m_t];
        let a_c = h[m_t];
        if a_c.abs() > 1e-9 {
            let ah: Vec<Rat> = h.iter().map(|&x| rationalize(x)).collect();
            let n = row.len();
            let rec: Vec<Rat> = (0..n)
                .map(|j| {
                    let mut num = Rat::one();
                    for (i, coeff) in ah.iter().take(m_t).enumerate() {
                        let term = coeff * &out[i][j];
                        num -= term;
                    }
                    num / &ah[m_t]
                })
                .collect();
            out.push(rec);
        } else {
            out.push(row.iter().map(|&x| rationalize(x)).collect());
        }
    }
    out
}

/// Find secondary preparations: row-stochastic mixing weights `u` (one row per
/// designated primary column, listed by `groups`) over all `n` primary
/// columns, such that the uniform mixtures of the secondary preparations agree
/// *exactly* across all groups, while maximizing the average self-weight
/// `C_P = (1/n′) Σ_j u[j][own column of j]`.
///
/// The linear program runs on the exact rationalization of `p` (resolution
/// 1e-12), so the returned weights satisfy the equal-mixture constraints
/// exactly. Returns `(u, C_P)`.
pub fn secondary_preparations(
    p: &PrimaryDataMatrix,
    groups: &[Vec<usize>],
) -> Result<(Vec<Vec<Rat>>, Rat)> {
    let m = p.n_measurements();
    let n = p.n_preparations();
    if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::InvalidInput(String::from(
            "preparation groups must be nonempty",
        )));
    }
    let members: Vec<usize> = groups.iter().flatten().copied().collect();
    let n_sec = members.len();
    {
        let mut seen = vec![false; n];
        for &k in &members {
            if k >= n {
                return Err(Error::InvalidInput(format!(
                    "group member {k} exceeds the number of preparations {n}"
                )));
            }
            if seen[k] {
                return Err(Error::InvalidInput(format!(
                    "primary preparation {k} appears in more than one group"
                )));
            }
            seen[k] = true;
        }
    }
    let pr = rationalize_matrix(p);
    let dim = n_sec * n;
    let var = |j: usize, k: usize| j * n + k;

    let mut eq_rows: Vec<Vec<Rat>> = Vec::new();
    let mut eq_rhs: Vec<Rat> = Vec::new();
    // row-stochasticity
    for j in 0..n_sec {
        let mut row = vec![Rat::zero(); dim];
        for k in 0..n {
            row[var(j, k)] = Rat::one();
        }
        eq_rows.push(row);
        eq_rhs.push(Rat::one());
    }
    // equal uniform mixtures between consecutive groups, per measurement row
    let mut offset = 0usize;
    let mut group_spans: Vec<(usize, usize)> = Vec::new(); // (start, len) in secondary index space
    for g in groups {
        group_spans.push((offset, g.len()));
        offset += g.len();
    }
    for w in group_spans.windows(2) {
        let (s1, l1) = w[0];
        let (s2, l2) = w[1];
        let inv1 = rat(1, l1 as i64);
        let inv2 = rat(1, l2 as i64);
        for i in 0..m {
            let mut row = vec![Rat::zero(); dim];
            for j in s1..s1 + l1 {
                for k in 0..n {
                    row[var(j, k)] = &row[var(j, k)] + &inv1 * &pr[i][k];
                }
            }
            for j in s2..s2 + l2 {
                for k in 0..n {
                    row[var(j, k)] = &row[var(j, k)] - &inv2 * &pr[i][k];
                }
            }
            eq_rows.push(row);
            eq_rhs.push(Rat::zero());
        }
    }
    let poly = HPolytope::new(dim, eq_rows, eq_rhs)?;
    let mut objective = vec![Rat::zero(); dim];
    for (j, &own) in members.iter().enumerate() {
        objective[var(j, own)] = Rat::one();
    }
    let (value, point) = lp_maximize(&objective, &poly).map_err(|e| match e {
        Error::EmptyPolytope => Error::InfeasibleLp(String::from(
            "no mixture of the primary preparations satisfies the equal-mixture equivalences",
        )),
        other => other,
    })?;
    let u: Vec<Vec<Rat>> = (0..n_sec)
        .map(|j| (0..n).map(|k| point[var(j, k)].clone()).collect())
        .collect();
    Ok((u, value / rat_int(n_sec as i64)))
}

/// Find secondary measurements: row-stochastic weights `v` (one row per
/// designated measurement) over the primary measurements *and* the extremal
/// classical post-processings, such that the uniform mixture of the secondary
/// measurements is *exactly* the fair coin (outcome-0 probability ½ on every
/// primary preparation), while maximizing `C_M = (1/m′) Σ_t v[t][own row]`.
///
/// Columns of `v`, in order: the `m` primary rows (use the measurement as-is),
/// the always-0 event, the always-1 event, then the `m` outcome-flipped
/// primary rows. The LP runs on the exact rationalization of `p`.
/// Returns `(v, C_M)`.
pub fn secondary_measurements(
    p: &PrimaryDataMatrix,
    designated: &[usize],
) -> Result<(Vec<Vec<Rat>>, Rat)> {
    let m = p.n_measurements();
    let n = p.n_preparations();
    if designated.is_empty() {
        return Err(Error::InvalidInput(String::from(
            "need at least one designated measurement row",
        )));
    }
    {
        let mut seen = vec![false; m];
        for &t in designated {
            if t >= m {
                return Err(Error::InvalidInput(format!(
                    "designated measurement {t} exceeds the number of rows {m}"
                )));
            }
            if seen[t] {
                return Err(Error::InvalidInput(format!(
                    "measurement row {t} designated twice"
                )));
            }
            seen[t] = true;
        }
    }
    let m_sec = designated.len();
    let pr = rationalize_matrix(p);
    let width = 2 * m + 2; // originals, always-0, always-1, flipped originals
    let dim = m_sec * width;
    let var = |t: usize, col: usize| t * width + col;

    let mut eq_rows: Vec<Vec<Rat>> = Vec::new();
    let mut eq_rhs: Vec<Rat> = Vec::new();
    for t in 0..m_sec {
        let mut row = vec![Rat::zero(); dim];
        for col in 0..width {
            row[var(t, col)] = Rat::one();
        }
        eq_rows.push(row);
        eq_rhs.push(Rat::one());
    }
    // fair-coin constraint: Σ_t (outcome-0 probability of secondary t on
    // primary preparation k) = m′/2 for every k
    for k in 0..n {
        let mut row = vec![Rat::zero(); dim];
        for t in 0..m_sec {
            for l in 0..m {
                row[var(t, l)] = pr[l][k].clone();
                row[var(t, m + 2 + l)] = Rat::one() - pr[l][k].clone();
            }
            // always-0 contributes probability 0; always-1 contributes 1
            row[var(t, m + 1)] = Rat::one();
        }
        eq_rows.push(row);
        eq_rhs.push(rat(m_sec as i64, 2));
    }
    let poly = HPolytope::new(dim, eq_rows, eq_rhs)?;
    let mut objective = vec![Rat::zero(); dim];
    for (t, &own) in designated.iter().enumerate() {
        objective[var(t, own)] = Rat::one();
    }
    let (value, point) = lp_maximize(&objective, &poly).map_err(|e| match e {
        Error::EmptyPolytope => Error::InfeasibleLp(String::from(
            "no post-processed mixture of the primary measurements averages to a fair coin",
        )),
        other => other,
    })?;
    let v: Vec<Vec<Rat>> = (0..m_sec)
        .map(|t| (0..width).map(|col| point[var(t, col)].clone()).collect())
        .collect();
    Ok((v, value / rat_int(m_sec as i64)))
}

/// Assemble the secondary data matrix from mixing weights:
/// `s[i][j] = Σ_k u[j][k] (Σ_l v[i][l] p[l][k] + v[i][one]·1 +
/// Σ_l v[i][flip l] (1 − p[l][k]))`, evaluated on the exact rationalization
/// of `p`. Rows index secondary measurements, columns secondary preparations.
pub fn secondary_matrix(
    p: &PrimaryDataMatrix,
    u: &[Vec<Rat>],
    v: &[Vec<Rat>],
) -> Result<Vec<Vec<Rat>>> {
    let m = p.n_measurements();
    let n = p.n_preparations();
    let width = 2 * m + 2;
    if u.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "preparation weight rows must have length {n}"
        )));
    }
    if v.iter().any(|row| row.len() != width) {
        return Err(Error::ShapeMismatch(format!(
            "measurement weight rows must have length 2m + 2 = {width}"
        )));
    }
    let pr = rationalize_matrix(p);
    // outcome-0 probability of secondary measurement i on primary column k
    let mut x = vec![vec![Rat::zero(); n]; v.len()];
    for (i, vi) in v.iter().enumerate() {
        for k in 0..n {
            let mut acc = vi[m + 1].clone(); // always-1 event
            for l in 0..m {
                acc = acc + &vi[l] * &pr[l][k];
                acc = acc + &vi[m + 2 + l] * &(Rat::one() - pr[l][k].clone());
            }
            x[i][k] = acc;
        }
    }
    let mut s = vec![vec![Rat::zero(); u.len()]; v.len()];
    for (i, xi) in x.iter().enumerate() {
        for (j, uj) in u.iter().enumerate() {
            let mut acc = Rat::zero();
            for k in 0..n {
                acc = acc + &uj[k] * &xi[k];
            }
            s[i][j] = acc;
        }
    }
    Ok(s)
}

/// Secondary preparations and measurements for a primary data matrix, with
/// the assembled secondary matrix and both closeness figures of merit.
///
/// All entries are exact rationals; the operational equivalences (equal group
/// mixtures of the secondary preparations; fair-coin average of the secondary
/// measurements) hold exactly on `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryProcedures {
    u: Vec<Vec<Rat>>,
    v: Vec<Vec<Rat>>,
    s: Vec<Vec<Rat>>,
    c_p: Rat,
    c_m: Rat,
}

impl SecondaryProcedures {
    /// Preparation mixing weights (n′ × n, row-stochastic).
    pub fn u(&self) -> &[Vec<Rat>] {
        &self.u
    }

    /// Measurement mixing weights (m′ × (2m + 2), row-stochastic).
    pub fn v(&self) -> &[Vec<Rat>] {
        &self.v
    }

    /// Secondary data matrix (m′ × n′).
    pub fn s(&self) -> &[Vec<Rat>] {
        &self.s
    }

    /// Secondary matrix converted to floating point.
    pub fn s_f64(&self) -> Vec<Vec<f64>> {
        self.s
            .iter()
            .map(|row| row.iter().map(rat_to_f64).collect())
            .collect()
    }

    /// Average self-weight of the secondary preparations.
    pub fn c_p(&self) -> &Rat {
        &self.c_p
    }

    /// Average self-weight of the secondary measurements.
    pub fn c_m(&self) -> &Rat {
        &self.c_m
    }
}

/// Run both secondary-procedure searches and assemble the secondary matrix,
/// verifying the operational equivalences hold exactly on the result.
pub fn infer_secondary(
    p: &PrimaryDataMatrix,
    groups: &[Vec<usize>],
    designated: &[usize],
) -> Result<SecondaryProcedures> {
    let (u, c_p) = secondary_preparations(p, groups)?;
    let (v, c_m) = secondary_measurements(p, designated)?;
    let s = secondary_matrix(p, &u, &v)?;
    // exact consistency checks on the assembled matrix
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0usize;
    for g in groups {
        spans.push((offset, g.len()));
        offset += g.len();
    }
    for i in 0..s.len() {
        let mix = |(start, len): (usize, usize)| -> Rat {
            let mut acc = Rat::zero();
            for j in start..start + len {
                acc = acc + s[i][j].clone();
            }
            acc / rat_int(len as i64)
        };
        let first = mix(spans[0]);
        for &span in &spans[1..] {
            if mix(span) != first {
                return Err(Error::EquivalenceCheckFailed(format!(
                    "secondary preparation mixtures differ on measurement row {i}"
                )));
            }
        }
    }
    let half = rat(1, 2);
    for j in 0..s[0].len() {
        let mut acc = Rat::zero();
        for row in &s {
            acc = acc + row[j].clone();
        }
        if acc / rat_int(s.len() as i64) != half {
            return Err(Error::EquivalenceCheckFailed(format!(
                "secondary measurement average on preparation {j} is not the fair coin"
            )));
        }
    }
    Ok(SecondaryProcedures { u, v, s, c_p, c_m })
}

// ---------------------------------------------------------------------------
// Fair-coin-flip witness
// ---------------------------------------------------------------------------

/// Result of evaluating the fair-coin-flip witness.
#[derive(Debug, Clone, PartialEq)]
pub struct FcfReport {
    /// The witness `A′ = (1/6) Σ_t Σ_b p(X=b | M_t, P_{t,b})`.
    pub a_prime: f64,
    /// The noncontextual upper bound `5/6`.
    pub nc_bound: f64,
    /// Whether `a_prime` exceeds the bound beyond tolerance (1e-12).
    pub violated: bool,
}

/// Evaluate the FCF witness on a 3×6 secondary matrix (rows `M_1..M_3`,
/// columns `P_{1,0}, P_{1,1}, .., P_{3,1}`; entries are outcome-0
/// probabilities):
/// `A′ = (1/6) Σ_t [ s[t][2t] + (1 − s[t][2t+1]) ]`.
pub fn fcf_witness(s: &[Vec<f64>]) -> Result<FcfReport> {
    if s.len() != 3 || s.iter().any(|row| row.len() != 6) {
        return Err(Error::ShapeMismatch(format!(
            "FCF witness needs a 3x6 matrix, got {}x{}",
            s.len(),
            s.first().map_or(0, |row| row.len())
        )));
    }
    let mut acc = 0.0;
    for (t, row) in s.iter().enumerate() {
        acc += row[2 * t] + (1.0 - row[2 * t + 1]);
    }
    let a_prime = acc / 6.0;
    Ok(FcfReport {
        a_prime,
        nc_bound: FCF_NC_BOUND,
        violated: a_prime > FCF_NC_BOUND + 1e-12,
    })
}

/// Exact-rational version of [`fcf_witness`]: returns `(A′, violated)`.
pub fn fcf_witness_exact(s: &[Vec<Rat>]) -> Result<(Rat, bool)> {
    if s.len() != 3 || s.iter().any(|row| row.len() != 6) {
        return Err(Error::ShapeMismatch(format!(
            "FCF witness needs a 3x6 matrix, got {}x{}",
            s.len(),
            s.first().map_or(0, |row| row.len())
        )));
    }
    let mut acc = Rat::zero();
    for (t, row) in s.iter().enumerate() {
        acc = acc + row[2 * t].clone() + (Rat::one() - row[2 * t + 1].clone());
    }
    let a_prime = acc / rat_int(6);
    let violated = a_prime > rat(5, 6);
    Ok((a_prime, violated))
}

/// Vertices of the measurement-noncontextual assignment set under the
/// fair-coin constraint: points `(ξ_1, ξ_2, ξ_3) ∈ [0,1]³` with
/// `(ξ_1 + ξ_2 + ξ_3)/3 = ½`. This polygon has exactly six vertices — the
/// permutations of `(1, ½, 0)` — which is the geometric core of the
/// noncontextual bound `A′ ≤ 5/6`.
pub fn fcf_polygon() -> Result<VertexSet> {
    let poly = HPolytope::new(
        3,
        vec![vec![Rat::one(), Rat::one(), Rat::one()]],
        vec![rat(3, 2)],
    )?;
    enumerate_vertices(&poly)
}

// ---------------------------------------------------------------------------
// Fixture models and synthetic data
// ---------------------------------------------------------------------------

/// Two hard-coded 6×4 operational tables (rows `P_{1,0}..P_{3,1}`, columns
/// `M_1, M_2, M_3, M_*`; entries are outcome-0 probabilities):
///
/// * model 1 is preparation- and measurement-noncontextual and saturates the
///   bound, `A′ = 5/6`;
/// * model 2 is preparation-noncontextual but measurement-contextual and
///   achieves `A′ = 9/10`.
///
/// Both satisfy the operational equivalences: the three two-state preparation
/// mixtures coincide, and the `M_*` column is the constant fair coin ½.
pub fn fcf_fixture_models() -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>) {
    let t = |rows: &[[(i64, i64); 4]]| -> Vec<Vec<Rat>> {
        rows.iter()
            .map(|row| row.iter().map(|&(num, den)| rat(num, den)).collect())
            .collect()
    };
    let model1 = t(&[
        [(5, 6), (1, 3), (1, 3), (1, 2)],
        [(1, 6), (2, 3), (2, 3), (1, 2)],
        [(1, 3), (5, 6), (1, 3), (1, 2)],
        [(2, 3), (1, 6), (2, 3), (1, 2)],
        [(1, 3), (1, 3), (5, 6), (1, 2)],
        [(2, 3), (2, 3), (1, 6), (1, 2)],
    ]);
    let model2 = t(&[
        [(9, 10), (3, 10), (3, 10), (1, 2)],
        [(1, 10), (7, 10), (7, 10), (1, 2)],
        [(3, 10), (9, 10), (3, 10), (1, 2)],
        [(7, 10), (1, 10), (7, 10), (1, 2)],
        [(3, 10), (3, 10), (9, 10), (1, 2)],
        [(7, 10), (7, 10), (1, 10), (1, 2)],
    ]);
    (model1, model2)
}

/// Convert a 6×4 fixture table (preparation-major) into the 3×6 secondary
/// layout used by the witness: `s[t][j] = table[j][t]` for the three
/// measurement columns `M_1..M_3`.
pub fn fixture_to_secondary(table: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    if table.len() != 6 || table.iter().any(|row| row.len() != 4) {
        return Err(Error::ShapeMismatch(format!(
            "fixture table must be 6x4, got {}x{}",
            table.len(),
            table.first().map_or(0, |row| row.len())
        )));
    }
    Ok((0..3)
        .map(|t| (0..6).map(|j| table[j][t].clone()).collect())
        .collect())
}

/// Bloch axes of the ideal FCF experiment: a trine in the x–z plane
/// (`M_1..M_3`, mutual angle 120°) plus the y axis (`M_4`, the tomographic
/// supplement).
pub fn fcf_axes() -> [[f64; 3]; 4] {
    let s = 3.0f64.sqrt() / 2.0;
    [
        [0.0, 0.0, 1.0],
        [s, 0.0, -0.5],
        [-s, 0.0, -0.5],
        [0.0, 1.0, 0.0],
    ]
}

/// Noise and statistics description for [`synthesize_raw_data`].
#[derive(Debug, Clone, PartialEq)]
pub struct FcfSynthesisConfig {
    /// Depolarizing survival probability of the states: the preparation for
    /// axis `n̂` with outcome `b` has Bloch vector `±p1·n̂`.
    pub p1: f64,
    /// Depolarizing survival probability of the effects: measurement `i` uses
    /// the binary POVM `½(I ± p2 σ·n̂_i)`.
    pub p2: f64,
    /// Counts per cell. `Some(N)`: frequencies are binomial draws with `N`
    /// trials and `Δf = max(√(f(1−f)/N), 1/(2N))`. `None`: infinite-count
    /// limit — frequencies are the exact Born probabilities and all
    /// uncertainties are set to the nominal value 1e-3.
    pub counts: Option<u64>,
}

/// Generate a synthetic 4×8 FCF raw data matrix from the Born rule under
/// depolarizing noise. Deterministic for a given `(config, seed)`.
pub fn synthesize_raw_data(config: &FcfSynthesisConfig, seed: u64) -> Result<RawDataMatrix> {
    if !(0.0..=1.0).contains(&config.p1) || !(0.0..=1.0).contains(&config.p2) {
        return Err(Error::InvalidInput(format!(
            "depolarizing parameters must lie in [0,1], got p1 = {}, p2 = {}",
            config.p1, config.p2
        )));
    }
    if config.counts == Some(0) {
        return Err(Error::InvalidInput(String::from(
            "counts per cell must be at least 1",
        )));
    }
    let axes = fcf_axes();
    let mut effects = Vec::with_capacity(4);
    for axis in axes {
        let povm = NoisySpinObservable::new(config.p2, axis)?.povm()?;
        effects.push(povm.effect(0).clone());
    }
    let mut states = Vec::with_capacity(8);
    for axis in axes {
        for sign in [1.0, -1.0] {
            let r = [
                sign * config.p1 * axis[0],
                sign * config.p1 * axis[1],
                sign * config.p1 * axis[2],
            ];
            states.push(DensityOperator::qubit_from_bloch(r)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = vec![vec![0.0; 8]; 4];
    let mut df = vec![vec![0.0; 8]; 4];
    for (i, effect) in effects.iter().enumerate() {
        for (j, state) in states.iter().enumerate() {
            let q = born_probability(state, effect)?;
            match config.counts {
                None => {
                    f[i][j] = q;
                    df[i][j] = 1e-3;
                }
                Some(n) => {
                    let mut hits = 0u64;
                    for _ in 0..n {
                        if rng.gen::<f64>() < q {
                            hits += 1;
                        }
                    }
                    let freq = hits as f64 / n as f64;
                    f[i][j] = freq;
                    df[i][j] = (freq * (1.0 - freq) / n as f64)
                        .sqrt()
                        .max(1.0 / (2.0 * n as f64));
                }
            }
        }
    }
    RawDataMatrix::new(f, df)
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

/// Everything the FCF analysis produces for one raw data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FcfPipelineReport {
    /// Fitted GPT model.
    pub model: GptModel,
    /// Achieved weighted total-least-squares chi-square.
    pub chi2: f64,
    /// Projected primary data matrix.
    pub primary: PrimaryDataMatrix,
    /// Secondary procedures with exact operational equivalences.
    pub secondary: SecondaryProcedures,
    /// Average preparation self-weight.
    pub c_p: f64,
    /// Average measurement self-weight.
    pub c_m: f64,
    /// The FCF witness on the secondary matrix.
    pub a_prime: f64,
    /// Noncontextual bound `5/6`.
    pub nc_bound: f64,
    /// Whether the witness exceeds the bound.
    pub violated: bool,
}

/// Run the complete FCF pipeline on a 4×8 raw data matrix: fit a GPT with
/// `m_t` tomographically complete effects, construct secondary procedures for
/// the standard FCF grouping, and evaluate the witness.
pub fn run_fcf_pipeline(raw: &RawDataMatrix, m_t: usize) -> Result<FcfPipelineReport> {
    if raw.n_measurements() != 4 || raw.n_preparations() != 8 {
        return Err(Error::ShapeMismatch(format!(
            "FCF pipeline needs a 4x8 raw matrix, got {}x{}",
            raw.n_measurements(),
            raw.n_preparations()
        )));
    }
    let (model, primary, chi2) = fit_gpt(raw, m_t)?;
    let secondary = infer_secondary(&primary, &fcf_groups(), &fcf_designated_measurements())?;
    let (a_prime_exact, violated) = fcf_witness_exact(secondary.s())?;
    let c_p = rat_to_f64(secondary.c_p());
    let c_m = rat_to_f64(secondary.c_m());
    let a_prime = rat_to_f64(&a_prime_exact);
    Ok(FcfPipelineReport {
        model,
        chi2,
        primary,
        secondary,
        c_p,
        c_m,
        a_prime,
        nc_bound: FCF_NC_BOUND,
        violated,
    })
}
