//! Exact rational vertex enumeration for polytopes `{w : Zw = u, 0 ≤ w ≤ 1}`
//! and a small exact simplex LP. All results are arbitrary-precision
//! rationals; the enumeration hot path runs in checked 128-bit integers and
//! every emitted vertex is re-verified in pure rational arithmetic against
//! the original system.

use crate::error::{Error, Result};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used throughout the polytope layer.
pub type Rat = BigRational;

/// Rational from an integer pair.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Default cap on the ambient dimension for vertex enumeration.
pub const DEFAULT_DIM_CAP: usize = 32;

/// Work budget: maximum number of (support × corner) candidate solves.
const SOLVE_BUDGET: u128 = 200_000_000;

/// A polytope `{w ∈ [0,1]^d : Zw = u}` in equality-plus-box form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolytope {
    dim: usize,
    eq_matrix: Vec<Vec<Rat>>,
    eq_rhs: Vec<Rat>,
}

impl HPolytope {
    pub fn new(dim: usize, eq_matrix: Vec<Vec<Rat>>, eq_rhs: Vec<Rat>) -> Result<Self> {
        if eq_matrix.len() != eq_rhs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} equality rows but {} right-hand sides",
                eq_matrix.len(),
                eq_rhs.len()
            )));
        }
        for row in &eq_matrix {
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "equality row of length {} in dimension {dim}",
                    row.len()
                )));
            }
        }
        Ok(HPolytope { dim, eq_matrix, eq_rhs })
    }

    /// The plain box `[0,1]^d` with no equality constraints.
    pub fn box_only(dim: usize) -> Self {
        HPolytope { dim, eq_matrix: Vec::new(), eq_rhs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_equalities(&self) -> usize {
        self.eq_matrix.len()
    }

    pub fn eq_matrix(&self) -> &[Vec<Rat>] {
        &self.eq_matrix
    }

    pub fn eq_rhs(&self) -> &[Rat] {
        &self.eq_rhs
    }

    /// Exact membership test.
    pub fn contains(&self, w: &[Rat]) -> bool {
        if w.len() != self.dim {
            return false;
        }
        let one = Rat::one();
        if w.iter().any(|x| x.is_negative() || *x > one) {
            return false;
        }
        self.eq_matrix.iter().zip(&self.eq_rhs).all(|(row, rhs)| {
            let dot: Rat = row.iter().zip(w).map(|(a, x)| a * x).sum();
            dot == *rhs
        })
    }
}

/// A deduplicated, lexicographically sorted list of exact vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    vertices: Vec<Vec<Rat>>,
}

impl VertexSet {
    /// Wraps raw points: deduplicates and sorts, no further checks.
    pub fn from_points(points: Vec<Vec<Rat>>) -> Self {
        let set: BTreeSet<Vec<Rat>> = points.into_iter().collect();
        VertexSet { vertices: set.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn get(&self, i: usize) -> &[Rat] {
        &self.vertices[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Rat>> {
        self.vertices.iter()
    }

    pub fn vertices(&self) -> &[Vec<Rat>] {
        &self.vertices
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.vertices.binary_search_by(|x| x.as_slice().cmp(v)).is_ok()
    }
}

/// Row-reduces `[Z|u]` in place to reduced row echelon form. Returns
/// `None` if the system is inconsistent; otherwise the pivot column list.
fn rref(matrix: &mut Vec<Vec<Rat>>, rhs: &mut Vec<Rat>) -> Option<Vec<usize>> {
    let m = matrix.len();
    let d = if m == 0 { 0 } else { matrix[0].len() };
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..d {
        let Some(p) = (row..m).find(|&i| !matrix[i][col].is_zero()) else {
            continue;
        };
        matrix.swap(row, p);
        rhs.swap(row, p);
        let inv = matrix[row][col].clone();
        for x in matrix[row].iter_mut() {
            *x /= inv.clone();
        }
        rhs[row] /= inv;
        for i in 0..m {
            if i != row && !matrix[i][col].is_zero() {
                let f = matrix[i][col].clone();
                for j in 0..d {
                    let delta = &f * &matrix[row][j];
                    matrix[i][j] -= delta;
                }
                let delta = &f * &rhs[row];
                rhs[i] -= delta;
            }
        }
        pivots.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    // Inconsistency: zero row with nonzero rhs.
    for i in row..m {
        if !rhs[i].is_zero() {
            return None;
        }
    }
    matrix.truncate(row);
    rhs.truncate(row);
    Some(pivots)
}

/// Clears denominators of a rational row, returning checked i128 integers.
fn integerize(row: &[Rat], rhs: &Rat) -> Result<(Vec<i128>, i128)> {
    let mut lcm = BigInt::one();
    for x in row.iter().chain(core::iter::once(rhs)) {
        lcm = num_integer::lcm(lcm, x.denom().clone());
    }
    let conv = |x: &Rat| -> Result<i128> {
        let v = (x * Rat::from_integer(lcm.clone())).to_integer();
        v.to_i128().ok_or_else(|| {
            Error::ResourceLimit("equality coefficients exceed the exact i128 range".to_string())
        })
    };
    let ints = row.iter().map(conv).collect::<Result<Vec<_>>>()?;
    let r = conv(rhs)?;
    Ok((ints, r))
}

fn checked(v: Option<i128>) -> Result<i128> {
    v.ok_or_else(|| {
        Error::ResourceLimit(
            "exact integer overflow during vertex enumeration (inputs too large)".to_string(),
        )
    })
}

/// Fraction-free (Bareiss) elimination of the square system with columns
/// `cols` of `z`, augmented by the identity. Returns `None` if singular,
/// otherwise `(det, n)` with `n = det · inverse` as exact integers.
fn bareiss_inverse(z: &[Vec<i128>], cols: &[usize]) -> Result<Option<(i128, Vec<Vec<i128>>)>> {
    let m = cols.len();
    if m == 0 {
        return Ok(Some((1, Vec::new())));
    }
    // Augmented [Z_B | I], m × 2m.
    let mut a: Vec<Vec<i128>> = (0..m)
        .map(|i| {
            let mut row: Vec<i128> = cols.iter().map(|&c| z[i][c]).collect();
            row.extend((0..m).map(|j| i128::from(i == j)));
            row
        })
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..m {
        let Some(p) = (k..m).find(|&i| a[i][k] != 0) else {
            return Ok(Some((0, Vec::new())));
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..m {
            for j in k + 1..2 * m {
                let t1 = checked(a[k][k].checked_mul(a[i][j]))?;
                let t2 = checked(a[i][k].checked_mul(a[k][j]))?;
                a[i][j] = checked(t1.checked_sub(t2))? / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    let det = sign * a[m - 1][m - 1];
    debug_assert!(det != 0);
    // Back-substitute each identity column: n_col = det · Z_B⁻¹ e_i, i.e.
    // integer solutions k with Z_B (k/det) = e_i.
    let mut n = vec![vec![0i128; m]; m];
    for c in 0..m {
        let mut x = vec![0i128; m];
        for i in (0..m).rev() {
            let mut acc = checked((sign * det).checked_mul(a[i][m + c]))?;
            for j in i + 1..m {
                acc = checked(acc.checked_sub(checked(a[i][j].checked_mul(x[j]))?))?;
            }
            debug_assert_eq!(acc % a[i][i], 0, "Bareiss back-substitution must be exact");
            x[i] = acc / a[i][i];
        }
        // Absorb the sign so that Z_B · n_col = det · e_c.
        for i in 0..m {
            n[i][c] = sign * x[i];
        }
    }
    Ok(Some((det, n)))
}

/// Enumerates all vertices of `p` exactly. See [`enumerate_vertices_capped`].
pub fn enumerate_vertices(p: &HPolytope) -> Result<VertexSet> {
    enumerate_vertices_capped(p, DEFAULT_DIM_CAP)
}

/// Enumerates all vertices of `p` by basic-feasible-solution enumeration
/// over the combined system (equalities + bound activities): for every
/// choice of `r = d − rank(Z)` coordinates fixed at a bound and every 0/1
/// assignment to them, solve the remaining square system and keep exact
/// feasible solutions. Every vertex has such a representation, so the output
/// is complete; it is deduplicated, sorted, and re-verified (zero residue,
/// bounds, active-constraint rank `d`).
pub fn enumerate_vertices_capped(p: &HPolytope, dim_cap: usize) -> Result<VertexSet> {
    let d = p.dim();
    if d > dim_cap {
        return Err(Error::DimensionLimit { dim: d, cap: dim_cap });
    }
    if d == 0 {
        return Ok(VertexSet::from_points(Vec::new()));
    }
    // Reduce the equality system; detect inconsistency (empty polytope).
    let mut z = p.eq_matrix.clone();
    let mut u = p.eq_rhs.clone();
    let Some(_pivots) = rref(&mut z, &mut u) else {
        return Ok(VertexSet::from_points(Vec::new()));
    };
    let m = z.len();
    let r = d - m;
    // Work budget: C(d, r) supports × 2^r corners.
    let mut supports: u128 = 1;
    for i in 0..r.min(d - r) {
        supports = supports * (d - i) as u128 / (i + 1) as u128;
    }
    let corners: u128 = 1u128 << r.min(127);
    if supports.saturating_mul(corners) > SOLVE_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "enumeration workload {supports}×{corners} exceeds the solve budget"
        )));
    }
    // Integerize the reduced system.
    let mut zi: Vec<Vec<i128>> = Vec::with_capacity(m);
    let mut ui: Vec<i128> = Vec::with_capacity(m);
    for (row, rhs) in z.iter().zip(&u) {
        let (ri, vi) = integerize(row, rhs)?;
        zi.push(ri);
        ui.push(vi);
    }

    let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
    // Iterate supports F (coordinates fixed at bounds) as the complement of
    // the basic column set B.
    let mut basic: Vec<usize> = (0..m).collect(); // current B (sorted)
    loop {
        if let Some((det, ninv)) = bareiss_inverse(&zi, &basic)? {
            if det != 0 {
                enumerate_corners(p, &zi, &ui, &basic, det, &ninv, &mut found)?;
            }
        }
        // Next m-combination of 0..d in lexicographic order.
        if m == 0 {
            break;
        }
        let mut i = m;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if basic[i] != i + d - m {
                basic[i] += 1;
                for j in i + 1..m {
                    basic[j] = basic[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                basic.clear();
                break;
            }
        }
        if basic.is_empty() {
            break;
        }
        if m == 0 {
            break;
        }
    }
    if m == 0 {
        // No equalities: every corner of the box is a vertex.
        enumerate_corners(p, &zi, &ui, &[], 1, &Vec::new(), &mut found)?;
    }

    // Independent re-verification of every vertex against the original
    // system (safety net for the integer fast path).
    for v in &found {
        if !p.contains(v) || !active_rank_is_full(p, v) {
            return Err(Error::InvalidInput(
                "internal error: enumeration produced a non-vertex".to_string(),
            ));
        }
    }
    Ok(VertexSet { vertices: found.into_iter().collect() })
}

/// For a fixed basic column set `basic` (with `det`, `ninv = det·Z_B⁻¹`),
/// walks all 2^r bound assignments of the complementary support in Gray-code
/// order, maintaining `k = ninv · (u − Σ_{fixed at 1} z_col)` incrementally,
/// and collects exact feasible solutions.
fn enumerate_corners(
    p: &HPolytope,
    zi: &[Vec<i128>],
    ui: &[i128],
    basic: &[usize],
    det: i128,
    ninv: &[Vec<i128>],
    found: &mut BTreeSet<Vec<Rat>>,
) -> Result<()> {
    let d = p.dim();
    let m = basic.len();
    let r = d - m;
    let free: Vec<usize> = {
        let mut in_basic = vec![false; d];
        for &b in basic {
            in_basic[b] = true;
        }
        (0..d).filter(|&j| !in_basic[j]).collect()
    };
    // v_j = ninv · z_col(free[j]); k₀ = ninv · u.
    let mut vj: Vec<Vec<i128>> = Vec::with_capacity(r);
    for &j in &free {
        let mut col = vec![0i128; m];
        for (i, ci) in col.iter_mut().enumerate() {
            let mut acc = 0i128;
            for (t, nit) in ninv[i].iter().enumerate() {
                acc = checked(acc.checked_add(checked(nit.checked_mul(zi[t][j]))?))?;
            }
            *ci = acc;
        }
        vj.push(col);
    }
    let mut k = vec![0i128; m];
    for (i, ki) in k.iter_mut().enumerate() {
        let mut acc = 0i128;
        for (t, nit) in ninv[i].iter().enumerate() {
            acc = checked(acc.checked_add(checked(nit.checked_mul(ui[t]))?))?;
        }
        *ki = acc;
    }
    let (lo, hi) = if det > 0 { (0i128, det) } else { (det, 0i128) };
    let mut gray_prev: u64 = 0;
    let total: u64 = 1u64 << r;
    let mut sigma = gray_prev;
    let mut code = 0u64;
    loop {
        // Feasibility of the basic part: 0 ≤ k_i/det ≤ 1.
        if k.iter().all(|&ki| lo <= ki && ki <= hi) {
            let mut w = vec![Rat::zero(); d];
            for (idx, &coord) in free.iter().enumerate() {
                if sigma >> idx & 1 == 1 {
                    w[coord] = Rat::one();
                }
            }
            for (i, &coord) in basic.iter().enumerate() {
                w[coord] = Rat::new(BigInt::from(k[i]), BigInt::from(det));
            }
            found.insert(w);
        }
        code += 1;
        if code == total {
            break;
        }
        let gray = code ^ (code >> 1);
        let bit = (gray ^ gray_prev).trailing_zeros() as usize;
        let turned_on = gray >> bit & 1 == 1;
        for i in 0..m {
            // k tracks ninv·(u − Σ_on z_col): subtract when turning on.
            k[i] = checked(if turned_on {
                k[i].checked_sub(vj[bit][i])
            } else {
                k[i].checked_add(vj[bit][i])
            })?;
        }
        gray_prev = gray;
        sigma = gray;
    }
    Ok(())
}

/// Rank of the active constraints at `w` (equalities + tight bounds) is `d`.
fn active_rank_is_full(p: &HPolytope, w: &[Rat]) -> bool {
    let d = p.dim();
    let one = Rat::one();
    let mut rows: Vec<Vec<Rat>> = p.eq_matrix.clone();
    for (j, x) in w.iter().enumerate() {
        if x.is_zero() || *x == one {
            let mut e = vec![Rat::zero(); d];
            e[j] = Rat::one();
            rows.push(e);
        }
    }
    rank(&mut rows) == d
}

/// Rank of a rational matrix (destroys the input).
pub(crate) fn rank(rows: &mut Vec<Vec<Rat>>) -> usize {
    let m = rows.len();
    if m == 0 {
        return 0;
    }
    let d = rows[0].len();
    let mut rk = 0usize;
    for col in 0..d {
        let Some(p) = (rk..m).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(rk, p);
        let inv = rows[rk][col].clone();
        for x in rows[rk].iter_mut() {
            *x /= inv.clone();
        }
        for i in rk + 1..m {
            if !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for j in col..d {
                    let delta = &f * &rows[rk][j];
                    rows[i][j] -= delta;
                }
            }
        }
        rk += 1;
        if rk == m {
            break;
        }
    }
    rk
}

// ---------------------------------------------------------------------------
// Exact LP
// ---------------------------------------------------------------------------

/// Maximizes `objective · w` over `p` exactly with a two-phase simplex
/// (Bland's rule: smallest eligible entering index; leaving by minimum
/// ratio with smallest-basic-index tie-break). Returns the optimal value and
/// an optimal vertex.
pub fn lp_maximize(objective: &[Rat], p: &HPolytope) -> Result<(Rat, Vec<Rat>)> {
    let d = p.dim();
    if objective.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "objective length {} in dimension {d}",
            objective.len()
        )));
    }
    // Standard form over x = (w, s) ≥ 0: Zw = u; w_i + s_i = 1.
    let m_total = p.n_equalities() + d;
    let n_vars = 2 * d;
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(m_total);
    let mut b: Vec<Rat> = Vec::with_capacity(m_total);
    for (row, rhs) in p.eq_matrix.iter().zip(&p.eq_rhs) {
        let mut full = vec![Rat::zero(); n_vars];
        full[..d].clone_from_slice(row);
        if rhs.is_negative() {
            for x in full.iter_mut() {
                *x = -x.clone();
            }
            a.push(full);
            b.push(-rhs.clone());
        } else {
            a.push(full);
            b.push(rhs.clone());
        }
    }
    for i in 0..d {
        let mut full = vec![Rat::zero(); n_vars];
        full[i] = Rat::one();
        full[d + i] = Rat::one();
        a.push(full);
        b.push(Rat::one());
    }
    // Phase 1: artificial variables for the equality rows only — the box
    // rows are already basic in their slack columns.
    let n_eq = p.n_equalities();
    let n_total = n_vars + n_eq;
    for (i, row) in a.iter_mut().enumerate() {
        row.extend((0..n_eq).map(|k| if k == i { Rat::one() } else { Rat::zero() }));
    }
    let mut basis: Vec<usize> = (0..n_eq)
        .map(|i| n_vars + i)
        .chain((0..d).map(|i| d + i))
        .collect();
    let mut phase1_obj = vec![Rat::zero(); n_total];
    for c in phase1_obj.iter_mut().skip(n_vars) {
        *c = -Rat::one();
    }
    let v1 = simplex(&mut a, &mut b, &mut basis, &phase1_obj, n_total)?;
    if !v1.is_zero() {
        return Err(Error::EmptyPolytope);
    }
    // Drive artificials out of the basis or drop redundant rows.
    let mut i = 0usize;
    while i < basis.len() {
        if basis[i] >= n_vars {
            if let Some(j) = (0..n_vars).find(|&j| !a[i][j].is_zero()) {
                pivot(&mut a, &mut b, &mut basis, i, j);
            } else {
                a.remove(i);
                b.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    // Phase 2 objective on w coordinates only; artificial columns removed.
    for row in a.iter_mut() {
        row.truncate(n_vars);
    }
    let mut phase2_obj = vec![Rat::zero(); n_vars];
    phase2_obj[..d].clone_from_slice(objective);
    let value = simplex(&mut a, &mut b, &mut basis, &phase2_obj, n_vars)?;
    let mut w = vec![Rat::zero(); d];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < d {
            w[bi] = b[i].clone();
        }
    }
    Ok((value, w))
}

fn pivot(a: &mut [Vec<Rat>], b: &mut [Rat], basis: &mut [usize], row: usize, col: usize) {
    let inv = a[row][col].clone();
    if !inv.is_one() {
        for x in a[row].iter_mut() {
            if !x.is_zero() {
                *x /= inv.clone();
            }
        }
        b[row] /= inv;
    }
    let nonzero: Vec<usize> = (0..a[row].len())
        .filter(|&j| !a[row][j].is_zero())
        .collect();
    for i in 0..a.len() {
        if i != row && !a[i][col].is_zero() {
            let f = a[i][col].clone();
            for &j in &nonzero {
                let delta = &f * &a[row][j];
                a[i][j] -= delta;
            }
            let delta = &f * &b[row];
            b[i] -= delta;
        }
    }
    basis[row] = col;
}

/// Maximizes `obj · x` over the canonical tableau. The entering variable is
/// chosen by largest reduced cost (Dantzig); after a long run of consecutive
/// degenerate pivots the rule switches to Bland's smallest-index rule, whose
/// anti-cycling guarantee ensures termination. The leaving row is chosen by
/// minimum ratio with smallest-basic-index tie-break. The reduced-cost row is
/// maintained incrementally across pivots.
fn simplex(
    a: &mut Vec<Vec<Rat>>,
    b: &mut Vec<Rat>,
    basis: &mut Vec<usize>,
    obj: &[Rat],
    n_cols: usize,
) -> Result<Rat> {
    // Canonicalize the basis columns (identity in the basis).
    for i in 0..basis.len() {
        let col = basis[i];
        if !a[i][col].is_one() || (0..a.len()).any(|t| t != i && !a[t][col].is_zero()) {
            pivot(a, b, basis, i, col);
        }
    }
    // Reduced costs c_j − c_B · a_col(j) (zero on basic columns) and the
    // current objective value, both updated after every pivot.
    let mut red: Vec<Rat> = Vec::with_capacity(n_cols);
    for j in 0..n_cols {
        let mut r = obj[j].clone();
        for (i, &bi) in basis.iter().enumerate() {
            if !obj[bi].is_zero() && !a[i][j].is_zero() {
                let delta = &obj[bi] * &a[i][j];
                r -= delta;
            }
        }
        red.push(r);
    }
    for &bi in basis.iter() {
        if bi < n_cols {
            red[bi] = Rat::zero();
        }
    }
    let mut value = Rat::zero();
    for (i, &bi) in basis.iter().enumerate() {
        if !obj[bi].is_zero() {
            value += &obj[bi] * &b[i];
        }
    }
    let mut stalled = 0usize;
    loop {
        let entering = if stalled > 100 {
            // Bland: smallest index with positive reduced cost.
            (0..n_cols).find(|&j| red[j] > Rat::zero())
        } else {
            let mut best: Option<usize> = None;
            for j in 0..n_cols {
                if red[j] > Rat::zero() && best.is_none_or(|bj| red[j] > red[bj]) {
                    best = Some(j);
                }
            }
            best
        };
        let Some(col) = entering else {
            return Ok(value);
        };
        // Ratio test; ties by smallest basic variable index.
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..a.len() {
            if a[i][col] > Rat::zero() {
                let ratio = &b[i] / &a[i][col];
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < *lr || (ratio == *lr && basis[i] < basis[*li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::InvalidInput(
                "internal error: unbounded LP over a box polytope".to_string(),
            ));
        };
        if ratio.is_zero() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        pivot(a, b, basis, row, col);
        let factor = red[col].clone();
        if !factor.is_zero() {
            for j in 0..n_cols {
                if !a[row][j].is_zero() {
                    let delta = &factor * &a[row][j];
                    red[j] -= delta;
                }
            }
            let delta = &factor * &b[row];
            value += delta;
        }
    }
}

/// Maximizes a convex function exactly over a vertex set; the maximum of a
/// convex function over a polytope is attained at a vertex. Ties broken by
/// the lexicographically smallest vertex.
pub fn convex_max_over_vertices<'a, F>(f: F, vs: &'a VertexSet) -> Result<(Rat, &'a [Rat])>
where
    F: Fn(&[Rat]) -> Rat,
{
    let mut best: Option<(Rat, &'a [Rat])> = None;
    for v in vs.iter() {
        let val = f(v);
        match &best {
            None => best = Some((val, v)),
            Some((bv, _)) => {
                if val > *bv {
                    best = Some((val, v));
                }
            }
        }
    }
    best.ok_or(Error::EmptyPolytope)
}

/// As [`convex_max_over_vertices`] for double-valued objectives.
pub fn convex_max_over_vertices_f64<'a, F>(f: F, vs: &'a VertexSet) -> Result<(f64, &'a [Rat])>
where
    F: Fn(&[Rat]) -> f64,
{
    let mut best: Option<(f64, &'a [Rat])> = None;
    for v in vs.iter() {
        let val = f(v);
        match &best {
            None => best = Some((val, v)),
            Some((bv, _)) => {
                if val > *bv {
                    best = Some((val, v));
                }
            }
        }
    }
    best.ok_or(Error::EmptyPolytope)
}

/// Converts an exact rational to the nearest double (reporting only).
pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Brute-force oracle (tests): independent second implementation
// ---------------------------------------------------------------------------

/// Enumerates vertices by the 3^d bound-activity split: every coordinate is
/// declared low, high, or free; the equality system restricted to the free
/// coordinates must have a unique solution. Pure rational arithmetic, no
/// shared code with the fast path. Intended for d ≤ 6 cross-checks.
pub fn oracle_vertices(p: &HPolytope) -> Result<VertexSet> {
    let d = p.dim();
    if d > 12 {
        return Err(Error::DimensionLimit { dim: d, cap: 12 });
    }
    let mut out: BTreeSet<Vec<Rat>> = BTreeSet::new();
    let mut pattern = vec![0u8; d]; // 0 = low, 1 = high, 2 = free
    loop {
        if let Some(w) = oracle_candidate(p, &pattern) {
            if p.contains(&w) && active_rank_is_full(p, &w) {
                out.insert(w);
            }
        }
        // Increment base-3 odometer.
        let mut i = 0usize;
        loop {
            if i == d {
                return Ok(VertexSet { vertices: out.into_iter().collect() });
            }
            pattern[i] += 1;
            if pattern[i] < 3 {
                break;
            }
            pattern[i] = 0;
            i += 1;
        }
    }
}

/// Solves the equalities with fixed bound coordinates; `None` unless the
/// free subsystem has a unique solution.
fn oracle_candidate(p: &HPolytope, pattern: &[u8]) -> Option<Vec<Rat>> {
    let d = p.dim();
    let free: Vec<usize> = (0..d).filter(|&j| pattern[j] == 2).collect();
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for (row, u) in p.eq_matrix.iter().zip(&p.eq_rhs) {
        let mut r: Vec<Rat> = free.iter().map(|&j| row[j].clone()).collect();
        let mut v = u.clone();
        for (j, x) in row.iter().enumerate() {
            if pattern[j] == 1 {
                v -= x.clone();
            }
        }
        r.push(v.clone());
        rows.push(r.split_off(0));
        rhs.push(v);
    }
    // Gaussian elimination on [A | rhs] over the free columns.
    let n = free.len();
    let m = rows.len();
    let mut aug: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let mut r = rows[i].clone();
            r.truncate(n);
            r.push(rhs[i].clone());
            r
        })
        .collect();
    let mut rank_count = 0usize;
    for col in 0..n {
        let Some(p_) = (rank_count..m).find(|&i| !aug[i][col].is_zero()) else {
            return None; // Rank-deficient on a free column: not unique.
        };
        aug.swap(rank_count, p_);
        let inv = aug[rank_count][col].clone();
        for x in aug[rank_count].iter_mut() {
            *x /= inv.clone();
        }
        for i in 0..m {
            if i != rank_count && !aug[i][col].is_zero() {
                let f = aug[i][col].clone();
                for j in 0..=n {
                    let delta = &f * &aug[rank_count][j];
                    aug[i][j] -= delta;
                }
            }
        }
        rank_count += 1;
    }
    // Consistency of the remaining rows.
    for row in aug.iter().skip(rank_count) {
        if !row[n].is_zero() {
            return None;
        }
    }
    let mut w = vec![Rat::zero(); d];
    for (j, &pat) in pattern.iter().enumerate() {
        if pat == 1 {
            w[j] = Rat::one();
        }
    }
    for (i, &j) in free.iter().enumerate() {
        w[j] = aug[i][n].clone();
    }
    Some(w)
}
