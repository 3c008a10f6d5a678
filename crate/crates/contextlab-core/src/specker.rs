//! Specker-scenario and n-cycle statistics: no-disturbance polytopes, the
//! four Kochen-Specker inequalities and their noise-robust counterparts
//! (including the LSW inequality), Fine's-theorem joint-distribution
//! construction, operational n-cycle noncontextuality inequalities, the
//! quantum constructions violating them, and violation optimization.
//!
//! Conventions: measurements are binary with outcomes `X ∈ {0, 1}`;
//! `p_i = p(X_i = 0)`; `w_{ij} = p(X_i ≠ X_j)` under the joint measurement of
//! the cycle pair `(i, j)`.  For the Specker scenario (`n = 3`) the pair
//! order is `(1,2), (2,3), (1,3)`, i.e. `w = (w12, w23, w13)`.  Correlators
//! use `S_i = (−1)^{X_i}`, so `⟨S_i⟩ = 2p_i − 1` and `⟨S_iS_j⟩ = 1 − 2w_{ij}`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::jm::{construct_pairwise_joint, JointPovmParams, NoisySpinObservable};
use crate::polytope::{rat, rat_int, HPolytope, Rat, VertexSet};
use crate::quantum::{born_probability, DensityOperator, Povm};

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Cycle statistics: marginals `p_i = p(X_i = 0)` and anticorrelation
/// probabilities `w[k] = p(X_k ≠ X_{k+1 mod n})` for each cycle pair.
/// Construction validates the no-disturbance consistency
/// `|p_i − p_j| ≤ w_{ij} ≤ min(p_i + p_j, 2 − p_i − p_j)` for every pair
/// (equivalently: all four pairwise joint probabilities are nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseStats {
    n: usize,
    w: Vec<f64>,
    p: Vec<f64>,
}

impl PairwiseStats {
    pub fn new(n: usize, w: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {n}")));
        }
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        for &x in w.iter().chain(p.iter()) {
            if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(Error::InvalidInput(format!("probability {x} outside [0, 1]")));
            }
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let lo = (p[i] - p[j]).abs();
            let hi = (p[i] + p[j]).min(2.0 - p[i] - p[j]);
            if w[i] < lo - 1e-12 || w[i] > hi + 1e-12 {
                return Err(Error::NoDisturbanceViolated(format!(
                    "pair ({},{}) with p_{} = {}, p_{} = {}: w = {} outside [{lo}, {hi}]",
                    i + 1,
                    j + 1,
                    i + 1,
                    p[i],
                    j + 1,
                    p[j],
                    w[i]
                )));
            }
        }
        Ok(PairwiseStats { n, w, p })
    }

    /// Specker-scenario (`n = 3`) statistics in the order
    /// `(w12, w23, w13, p1, p2, p3)`.
    pub fn specker(w12: f64, w23: f64, w13: f64, p1: f64, p2: f64, p3: f64) -> Result<Self> {
        Self::new(3, vec![w12, w23, w13], vec![p1, p2, p3])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `w[k] = p(X_k ≠ X_{k+1 mod n})`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// `p[i] = p(X_i = 0)`.
    pub fn p(&self) -> &[f64] {
        &self.p
    }
}

/// The 12 vertices of the Specker no-disturbance polytope in the reduced
/// 6-parameter form `(w12, w23, w13, p1, p2, p3)`: 8 deterministic vertices
/// (one per assignment `(X_1, X_2, X_3) ∈ {0,1}³`) and 4 indeterministic
/// vertices (uniform marginals with anticorrelation patterns `(1,0,0)`,
/// `(0,1,0)`, `(0,0,1)`, `(1,1,1)`).
pub fn specker_vertices() -> VertexSet {
    let mut points = Vec::with_capacity(12);
    for bits in 0..8u32 {
        let x = [(bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
        let w = |i: usize, j: usize| rat_int(i64::from(x[i] != x[j]));
        let p = |i: usize| rat_int(i64::from(x[i] == 0));
        points.push(vec![w(0, 1), w(1, 2), w(0, 2), p(0), p(1), p(2)]);
    }
    let half = rat(1, 2);
    for w in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]] {
        let mut v: Vec<Rat> = w.iter().map(|&x| rat_int(x)).collect();
        v.extend([half.clone(), half.clone(), half.clone()]);
        points.push(v);
    }
    VertexSet::from_points(points)
}

/// H-description of the Specker no-disturbance polytope, lifted to 18
/// variables: the 6 parameters `(w12, w23, w13, p1, p2, p3)` followed by the
/// 12 pairwise joint probabilities `v^{ij}_{X_iX_j}` (pair order `(1,2)`,
/// `(2,3)`, `(1,3)`; outcome order `00, 01, 10, 11`), tied together by the
/// linear identities `v^{ij}_{00} = (p_i + p_j − w_{ij})/2` and so on.  The
/// box constraints `0 ≤ v ≤ 1` on the lifted coordinates are exactly the
/// no-disturbance conditions.
pub fn specker_nd_hpolytope() -> HPolytope {
    // Variable layout: 0..3 = w12,w23,w13; 3..6 = p1,p2,p3; then four slack
    // probabilities per pair.
    let pairs = [(0usize, 3usize, 4usize), (1, 4, 5), (2, 3, 5)];
    let mut rows = Vec::with_capacity(12);
    let mut rhs = Vec::with_capacity(12);
    for (pair_idx, &(wi, pi, pj)) in pairs.iter().enumerate() {
        let base = 6 + 4 * pair_idx;
        // (signs of w, p_i, p_j, constant) for v_00, v_01, v_10, v_11:
        // 2v_00 − p_i − p_j + w = 0
        // 2v_01 − p_i + p_j − w = 0
        // 2v_10 + p_i − p_j − w = 0
        // 2v_11 + p_i + p_j + w = 2
        let combos = [(1, -1, -1, 0), (-1, -1, 1, 0), (-1, 1, -1, 0), (1, 1, 1, 2)];
        for (k, &(sw, si, sj, c)) in combos.iter().enumerate() {
            let mut row = vec![Rat::zero(); 18];
            row[wi] = rat_int(sw);
            row[pi] = rat_int(si);
            row[pj] = rat_int(sj);
            row[base + k] = rat_int(2);
            rows.push(row);
            rhs.push(rat_int(c));
        }
    }
    HPolytope::new(18, rows, rhs).expect("well-formed system")
}

/// Names of the four Kochen-Specker inequalities, in residual order.
pub const KS_INEQUALITY_NAMES: [&str; 4] = ["R3 <= 2", "R0 <= 0", "R1 <= 0", "R2 <= 0"];

/// Residuals of the four KS inequalities for Specker-scenario statistics, in
/// the order `(R3 − 2, R0, R1, R2)` where `R3 = w12 + w23 + w13`,
/// `R0 = w12 − w23 − w13`, `R1 = w23 − w12 − w13`, `R2 = w13 − w12 − w23`.
/// A residual is a violation iff it is strictly positive; at most one of the
/// four can be positive for any no-disturbance point.
pub fn ks_inequalities(s: &PairwiseStats) -> Result<[f64; 4]> {
    if s.n() != 3 {
        return Err(Error::InvalidInput(format!(
            "KS inequalities are for the 3-cycle, got n = {}",
            s.n()
        )));
    }
    let (w12, w23, w13) = (s.w[0], s.w[1], s.w[2]);
    Ok([
        w12 + w23 + w13 - 2.0,
        w12 - w23 - w13,
        w23 - w12 - w13,
        w13 - w12 - w23,
    ])
}

/// Outcome of the Fine joint-distribution construction.
#[derive(Debug, Clone, PartialEq)]
pub enum FineOutcome {
    /// A triple joint distribution `q(X_1, X_2, X_3)` indexed by
    /// `4·X_1 + 2·X_2 + X_3`, reproducing all pairwise statistics.
    Joint(Vec<f64>),
    /// No joint exists; `violated` names the failed KS inequality.
    NoJoint { violated: String },
}

/// Fine's construction: a joint distribution over `(X_1, X_2, X_3)` with the
/// given pairwise marginals exists iff all four KS inequalities hold, in
/// which case one is built by fixing `q(000)` to the top of its feasible
/// interval.  Returns `NoJoint` naming the violated inequality otherwise.
pub fn fine_joint_distribution(s: &PairwiseStats) -> Result<FineOutcome> {
    let residuals = ks_inequalities(s)?;
    let mut worst = 0usize;
    for k in 1..4 {
        if residuals[k] > residuals[worst] {
            worst = k;
        }
    }
    if residuals[worst] > 0.0 {
        return Ok(FineOutcome::NoJoint {
            violated: KS_INEQUALITY_NAMES[worst].to_string(),
        });
    }
    let (p1, p2, p3) = (s.p[0], s.p[1], s.p[2]);
    let (w12, w23, w13) = (s.w[0], s.w[1], s.w[2]);
    // Pairwise joint entries (nonnegative by no-disturbance).
    let q12_00 = 0.5 * (p1 + p2 - w12);
    let q12_11 = 0.5 * (2.0 - p1 - p2 - w12);
    let q13_00 = 0.5 * (p1 + p3 - w13);
    let q13_10 = 0.5 * (p3 - p1 + w13);
    let q23_00 = 0.5 * (p2 + p3 - w23);
    let q23_01 = 0.5 * (p2 - p3 + w23);
    // Feasible interval for t = q(000); nonempty iff the KS inequalities
    // hold (each upper-vs-lower comparison reduces to a KS inequality or to
    // nonnegativity of a pairwise entry).
    let lower = 0f64
        .max(q12_00 + q13_00 - p1)
        .max(q12_00 - q23_01)
        .max(q23_00 - q13_10);
    let upper = q12_00
        .min(q13_00)
        .min(q23_00)
        .min(q12_11 - q13_10 + q23_00);
    assert!(
        lower <= upper + 1e-12,
        "feasible interval empty although all KS inequalities hold"
    );
    let t = upper.max(lower);
    let q = [
        t,                             // 000
        q12_00 - t,                    // 001
        q13_00 - t,                    // 010
        p1 - q12_00 - q13_00 + t,      // 011
        q23_00 - t,                    // 100
        q23_01 - q12_00 + t,           // 101
        q13_10 - q23_00 + t,           // 110
        q12_11 - q13_10 + q23_00 - t,  // 111
    ];
    let mut out = Vec::with_capacity(8);
    for &x in &q {
        assert!(x >= -1e-12, "joint entry {x} negative beyond tolerance");
        out.push(x.max(0.0));
    }
    // Verify the pairwise marginals reproduce the inputs.
    let anti = |mask_i: usize, mask_j: usize| -> f64 {
        (0..8)
            .filter(|idx| ((idx & mask_i) != 0) != ((idx & mask_j) != 0))
            .map(|idx| out[idx])
            .sum()
    };
    let marg = |mask: usize| -> f64 {
        (0..8).filter(|idx| idx & mask == 0).map(|idx| out[idx]).sum()
    };
    for (got, want) in [
        (anti(4, 2), w12),
        (anti(2, 1), w23),
        (anti(4, 1), w13),
        (marg(4), p1),
        (marg(2), p2),
        (marg(1), p3),
    ] {
        assert!(
            (got - want).abs() <= 1e-12,
            "constructed joint drifts from the input statistics: {got} vs {want}"
        );
    }
    Ok(FineOutcome::Joint(out))
}

/// A noncontextuality bound in both conventions: `summed` bounds the sum of
/// the pair terms, `averaged` bounds their mean (always `summed / 3` for the
/// 3-cycle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcBound {
    pub summed: f64,
    pub averaged: f64,
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// The LSW inequality bound on the anticorrelation `R3` at measurement
/// predictability `η`: `R3 ≤ 3 − η` (summed) or `R3/3 ≤ 1 − η/3` (averaged).
pub fn lsw_bound(eta: f64) -> Result<NcBound> {
    check_unit_interval("eta", eta)?;
    let summed = 3.0 - eta;
    Ok(NcBound { summed, averaged: summed / 3.0 })
}

/// The noise-robust bounds on `R0`, `R1`, `R2` at predictability `η`:
/// `R_k ≤ 1 − η` (summed convention; divide by 3 for the averaged form).
pub fn nc_bounds_r0r1r2(eta: f64) -> Result<NcBound> {
    check_unit_interval("eta", eta)?;
    let summed = 1.0 - eta;
    Ok(NcBound { summed, averaged: summed / 3.0 })
}

/// Maximum of `C ≡ 2η − Σ_{ij}(α_{ij} − |a⃗_{ij}|)` over valid joint
/// measurements for three coplanar axes given by their pairwise cosines
/// `dots = (d12, d23, d13)` with `θ23 = θ12 + θ13` (axis 1 between axes 2
/// and 3).  A positive value certifies a state-dependent violation of the
/// LSW inequality; the averaged-convention violation is `S = C/6`.
pub fn cmax_coplanar(eta: f64, dots: [f64; 3]) -> Result<f64> {
    check_unit_interval("eta", eta)?;
    for &d in &dots {
        if d.abs() > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("cosine {d} outside [-1, 1]")));
        }
    }
    let clamp = |d: f64| d.clamp(-1.0, 1.0);
    let (d12, d23, d13) = (clamp(dots[0]), clamp(dots[1]), clamp(dots[2]));
    // Coplanarity: the angle between axes 2 and 3 is the sum of the angles
    // they make with axis 1 (as a directed sum, so cos θ23 = cos(θ12 + θ13)).
    let expected_d23 = (d12.acos() + d13.acos()).cos();
    if (expected_d23 - d23).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "axes are not coplanar with θ23 = θ12 + θ13: cos(θ12+θ13) = {expected_d23}, got {d23}"
        )));
    }
    let pair_index = [(0usize, 1usize), (1, 2), (0, 2)];
    let mut c = 2.0 * eta;
    for (k, &d) in [d12, d23, d13].iter().enumerate() {
        let a_sq = 1.0 + eta.powi(4) * d * d - 2.0 * eta * eta;
        if a_sq < -1e-12 {
            let (i, j) = pair_index[k];
            return Err(Error::IncompatiblePair { i, j });
        }
        c += a_sq.max(0.0).sqrt() - (1.0 + eta * eta * d);
    }
    Ok(c)
}

/// Quantum anticorrelation `R3` (averaged convention) for the trine-axes
/// realization: `R3 = ½ + η²/4 + ½√(1 − 2η² + η⁴/4)`, valid for
/// `η ≤ √3 − 1` (the trine joint-measurability bound).
pub fn r3_quantum_trine(eta: f64) -> Result<f64> {
    check_unit_interval("eta", eta)?;
    let bound = 3f64.sqrt() - 1.0;
    if eta > bound + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "eta = {eta} exceeds the trine joint-measurability bound {bound}"
        )));
    }
    let inner = (1.0 - 2.0 * eta * eta + eta.powi(4) / 4.0).max(0.0);
    Ok(0.5 + eta * eta / 4.0 + 0.5 * inner.sqrt())
}

/// Evaluates the necessary condition for a state-independent LSW violation,
/// `Σ_{i<j} |cos(θ_ij/2)| < 1`.  The condition is unsatisfiable for any
/// triple of unit axes, so this always returns `false`; it exists to make
/// that impossibility checkable.
pub fn no_state_independent_violation_check(axes: &[[f64; 3]; 3]) -> Result<bool> {
    for a in axes {
        if (norm(*a) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("axis norm {} is not 1", norm(*a))));
        }
    }
    let mut total = 0.0;
    for (i, j) in [(0usize, 1usize), (1, 2), (0, 2)] {
        let d = dot(axes[i], axes[j]).clamp(-1.0, 1.0);
        // |cos(θ/2)| = √((1 + cos θ)/2)
        total += ((1.0 + d) / 2.0).max(0.0).sqrt();
    }
    Ok(total < 1.0)
}

/// The n-cycle no-disturbance polytope in the `2n` correlator coordinates
/// `(⟨S_1⟩, …, ⟨S_n⟩, ⟨S_1S_2⟩, …, ⟨S_nS_1⟩)`: `2ⁿ` deterministic vertices
/// (`⟨S_i⟩ = s_i ∈ {±1}`, products accordingly) plus `2^{n−1}`
/// indeterministic vertices (all `⟨S_i⟩ = 0`, pair correlators `±1` with an
/// odd number of `−1`s).
pub fn ncycle_polytope(n: usize) -> Result<VertexSet> {
    if !(3..=12).contains(&n) {
        return Err(Error::DimensionLimit { dim: 2 * n, cap: 24 });
    }
    let one = rat_int(1);
    let minus_one = rat_int(-1);
    let sign = |s: bool| if s { one.clone() } else { minus_one.clone() };
    let mut points = Vec::with_capacity((1usize << n) + (1usize << (n - 1)));
    for bits in 0..(1u32 << n) {
        let s = |i: usize| bits >> i & 1 == 0; // true = +1
        let mut v = Vec::with_capacity(2 * n);
        for i in 0..n {
            v.push(sign(s(i)));
        }
        for i in 0..n {
            v.push(sign(s(i) == s((i + 1) % n)));
        }
        points.push(v);
    }
    for bits in 0..(1u32 << n) {
        if bits.count_ones() % 2 == 0 {
            continue; // need an odd number of −1 correlators
        }
        let mut v = vec![Rat::zero(); n];
        for i in 0..n {
            v.push(sign(bits >> i & 1 == 0));
        }
        points.push(v);
    }
    Ok(VertexSet::from_points(points))
}

/// The operational n-cycle noncontextuality bounds at average predictability
/// `η_ave`: the two-witness bound `2(1 − η_ave/n)` on
/// `p(pattern|M_*, P_*) + p(pattern|M′_*, P_*^⊥)`, and the single-witness
/// bound `(n−1)/n + 2(1 − η_ave)/n` on `p(pattern|M_*, P_*)` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcycleBounds {
    pub two_witness: f64,
    pub single_witness: f64,
}

pub fn nc_bound_ncycle(n: usize, eta_ave: f64) -> Result<NcycleBounds> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {n}")));
    }
    check_unit_interval("eta_ave", eta_ave)?;
    let nf = n as f64;
    Ok(NcycleBounds {
        two_witness: 2.0 * (1.0 - eta_ave / nf),
        single_witness: (nf - 1.0) / nf + 2.0 * (1.0 - eta_ave) / nf,
    })
}

/// Configuration of the quantum n-cycle realization: `n` noisy spin
/// observables of common sharpness `η₀` along `axes`, probed with the state
/// pair along `star_axis`.  Construction checks unit axes and pairwise joint
/// measurability of every cycle pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NCycleQuantumConfig {
    n: usize,
    eta0: f64,
    axes: Vec<[f64; 3]>,
    star_axis: [f64; 3],
}

impl NCycleQuantumConfig {
    pub fn new(eta0: f64, axes: Vec<[f64; 3]>, star_axis: [f64; 3]) -> Result<Self> {
        let n = axes.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {n}")));
        }
        check_unit_interval("eta0", eta0)?;
        for a in axes.iter().chain(core::iter::once(&star_axis)) {
            if (norm(*a) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("axis norm {} is not 1", norm(*a))));
            }
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let d = dot(axes[i], axes[j]);
            if 1.0 + eta0.powi(4) * d * d - 2.0 * eta0 * eta0 < -1e-12 {
                return Err(Error::IncompatiblePair { i, j });
            }
        }
        Ok(NCycleQuantumConfig { n, eta0, axes, star_axis })
    }

    /// The standard coplanar construction: for odd `n`, axes in the ZX plane
    /// at successive angles `(n−1)π/n` (adjacent cosines `−cos(π/n)`); for
    /// even `n`, at successive angles `π/n` (adjacent cosines `cos(π/n)`,
    /// wrap-around cosine `−cos(π/n)`).  Star axis `(0, 1, 0)`.
    pub fn default_for(n: usize, eta0: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {n}")));
        }
        let step = if n % 2 == 1 {
            (n as f64 - 1.0) * PI / n as f64
        } else {
            PI / n as f64
        };
        let axes: Vec<[f64; 3]> = (0..n)
            .map(|k| {
                let phi = k as f64 * step;
                [phi.sin(), 0.0, phi.cos()]
            })
            .collect();
        Self::new(eta0, axes, [0.0, 1.0, 0.0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn axes(&self) -> &[[f64; 3]] {
        &self.axes
    }

    pub fn star_axis(&self) -> [f64; 3] {
        self.star_axis
    }
}

/// Result of a contextuality-witness evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextualityReport {
    /// The witness `p(pattern|M_*, P_*) + p(pattern|M′_*, P_*^⊥)` where the
    /// pattern is "anti" for odd cycles and "chained" for even cycles.
    pub witness_value: f64,
    /// The noncontextual two-witness bound `2(1 − η_ave/n)`.
    pub nc_bound: f64,
    /// Average measurement predictability over the matched preparations.
    pub eta_ave: f64,
    /// `witness_value > nc_bound + 1e-12`.
    pub violated: bool,
}

/// Builds the full quantum n-cycle realization — noisy observables, pairwise
/// joint POVMs for both measurement sets, and the star preparations —
/// verifies the operational equivalences (all marginals agree with the
/// single observables, primed and unprimed marginals agree, and every
/// antipodal preparation pair averages to the same state) to 1e-10, then
/// evaluates the witness via the Born rule.
pub fn quantum_witness_ncycle(cfg: &NCycleQuantumConfig) -> Result<ContextualityReport> {
    let n = cfg.n();
    let eta = cfg.eta0();
    let odd = n % 2 == 1;
    let observables: Vec<NoisySpinObservable> = cfg
        .axes()
        .iter()
        .map(|&a| NoisySpinObservable::new(eta, a))
        .collect::<Result<_>>()?;
    let povms: Vec<Povm> = observables.iter().map(|o| o.povm()).collect::<Result<_>>()?;

    // One joint POVM per cycle pair for each measurement set.  The unprimed
    // set realizes the witness pattern; the primed set flips the sign of the
    // Bloch vector a⃗ in every joint (leaving all marginals untouched).
    let mut unprimed = Vec::with_capacity(n);
    let mut primed = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let a_vec = pair_a_vector(eta, cfg.axes()[i], cfg.axes()[j], cfg.star_axis())?;
        // Odd cycles and the even wrap-around pair use the anticorrelation
        // joint (+a⃗); even consecutive pairs use the correlation joint (−a⃗).
        let base_sign = if odd || i == n - 1 { 1.0 } else { -1.0 };
        let alpha = 1.0 + eta * eta * dot(cfg.axes()[i], cfg.axes()[j]);
        let build = |sign: f64| -> Result<Povm> {
            construct_pairwise_joint(
                &observables[i],
                &observables[j],
                &JointPovmParams { alpha, a_vec: scale3(a_vec, sign) },
            )
        };
        unprimed.push(build(base_sign)?);
        primed.push(build(-base_sign)?);
    }

    // Operational equivalences on measurements: for every observable, the
    // marginals of both joints containing it (in both sets) coincide with
    // the observable itself.  Joint outcome order is (+,+),(+,−),(−,+),(−,−).
    for k in 0..n {
        let prev = (k + n - 1) % n;
        let want = povms[k].effect(0).matrix();
        for joints in [&unprimed, &primed] {
            let from_next = joints[k].effect(0).matrix().add(joints[k].effect(1).matrix());
            let from_prev = joints[prev].effect(0).matrix().add(joints[prev].effect(2).matrix());
            for got in [&from_next, &from_prev] {
                if got.max_abs_diff(want) > 1e-10 {
                    return Err(Error::EquivalenceCheckFailed(format!(
                        "marginal of a joint POVM deviates from observable {k}"
                    )));
                }
            }
        }
        let unprimed_marg = unprimed[k].effect(0).matrix().add(unprimed[k].effect(1).matrix());
        let primed_marg = primed[k].effect(0).matrix().add(primed[k].effect(1).matrix());
        if unprimed_marg.max_abs_diff(&primed_marg) > 1e-10 {
            return Err(Error::EquivalenceCheckFailed(format!(
                "primed and unprimed marginals differ for observable {k}"
            )));
        }
    }

    // Operational equivalences on preparations: every antipodal pair
    // averages to the same state as the star pair.
    let star = cfg.star_axis();
    let rho_star = DensityOperator::qubit_from_bloch(star)?;
    let rho_star_perp = DensityOperator::qubit_from_bloch(scale3(star, -1.0))?;
    let star_avg = rho_star.matrix().add(rho_star_perp.matrix()).scale_re(0.5);
    let mut prep_pairs = Vec::with_capacity(n);
    for &axis in cfg.axes() {
        let rho = DensityOperator::qubit_from_bloch(axis)?;
        let rho_perp = DensityOperator::qubit_from_bloch(scale3(axis, -1.0))?;
        let avg = rho.matrix().add(rho_perp.matrix()).scale_re(0.5);
        if avg.max_abs_diff(&star_avg) > 1e-10 {
            return Err(Error::EquivalenceCheckFailed(
                "averaged antipodal preparations are not all equal".to_string(),
            ));
        }
        prep_pairs.push((rho, rho_perp));
    }

    // Witness pattern per pair: indices of the joint outcomes counted.
    // "anti" = (+,−) and (−,+); "same" = (+,+) and (−,−).
    let pattern_indices = |i: usize| -> [usize; 2] {
        if odd || i == n - 1 {
            [1, 2]
        } else {
            [0, 3]
        }
    };
    let eval = |joints: &[Povm], rho: &DensityOperator| -> Result<f64> {
        let mut total = 0.0;
        for (i, joint) in joints.iter().enumerate() {
            for idx in pattern_indices(i) {
                total += born_probability(rho, joint.effect(idx))?;
            }
        }
        Ok(total / n as f64)
    };
    let witness_value = eval(&unprimed, &rho_star)? + eval(&primed, &rho_star_perp)?;

    // Average predictability from the Born-rule statistics of each
    // observable on its own matched preparations.
    let mut eta_sum = 0.0;
    for (k, povm) in povms.iter().enumerate() {
        for rho in [&prep_pairs[k].0, &prep_pairs[k].1] {
            let dist = [
                born_probability(rho, povm.effect(0))?,
                born_probability(rho, povm.effect(1))?,
            ];
            eta_sum += predictability(&dist)?;
        }
    }
    let eta_ave = eta_sum / (2 * n) as f64;

    let nc_bound = nc_bound_ncycle(n, eta_ave.clamp(0.0, 1.0))?.two_witness;
    Ok(ContextualityReport {
        witness_value,
        nc_bound,
        eta_ave,
        violated: witness_value > nc_bound + 1e-12,
    })
}

/// The Bloch vector `a⃗_ij` of the optimal joint for one cycle pair: norm
/// `√(1 + η⁴(n̂_i·n̂_j)² − 2η²)`, perpendicular to both axes, oriented into
/// the hemisphere of the star axis (for the standard coplanar configuration
/// this is the star axis itself, for every pair including the wrap-around).
fn pair_a_vector(
    eta: f64,
    ni: [f64; 3],
    nj: [f64; 3],
    star: [f64; 3],
) -> Result<[f64; 3]> {
    let d = dot(ni, nj);
    let a_sq = 1.0 + eta.powi(4) * d * d - 2.0 * eta * eta;
    if a_sq < -1e-12 {
        return Err(Error::IncompatiblePair { i: 0, j: 1 });
    }
    let a_len = a_sq.max(0.0).sqrt();
    let mut normal = crate::jm::cross3(ni, nj);
    if norm(normal) < 1e-9 {
        let pick = if ni[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        normal = crate::jm::cross3(ni, pick);
    }
    let mut unit = scale3(normal, 1.0 / norm(normal));
    if dot(unit, star) < -1e-9 {
        unit = scale3(unit, -1.0);
    }
    Ok(scale3(unit, a_len))
}

/// Closed-form quantum witness value of the standard n-cycle construction:
/// `1 + η₀² cos(π/n) + √(1 + η₀⁴ cos²(π/n) − 2η₀²)`.
pub fn ncycle_quantum_value(n: usize, eta0: f64) -> f64 {
    let c = (PI / n as f64).cos();
    let inner = (1.0 + eta0.powi(4) * c * c - 2.0 * eta0 * eta0).max(0.0);
    1.0 + eta0 * eta0 * c + inner.sqrt()
}

/// Closed-form quantum violation
/// `Q_viol = √(1 + η₀⁴cos²(π/n) − 2η₀²) + η₀²cos(π/n) + 2η₀/n − 1`
/// (quantum witness minus the noncontextual bound at `η_ave = η₀`).
pub fn qviol_closed_form(n: usize, eta0: f64) -> f64 {
    ncycle_quantum_value(n, eta0) - 2.0 * (1.0 - eta0 / n as f64)
}

/// Largest `η₀` for which every cycle pair of the standard construction is
/// jointly measurable: `1/√(1 + sin(π/n))`.
pub fn eta0_upper_bound(n: usize) -> f64 {
    1.0 / (1.0 + (PI / n as f64).sin()).sqrt()
}

/// Result of maximizing the closed-form quantum violation over `η₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QviolOptimum {
    /// Maximizer of `Q_viol` on `[0, eta0_upper]`.
    pub optimal_eta0: f64,
    /// The maximum violation.
    pub max_qviol: f64,
    /// The root of `Q_viol = 0` above the optimum: beyond it the statistics
    /// stop certifying contextuality.
    pub critical_eta0: f64,
    /// The joint-measurability cap on `η₀`.
    pub eta0_upper: f64,
}

/// Maximizes `Q_viol(η₀, n)` by a 10⁻³ coarse grid followed by
/// golden-section refinement to 1e-7, and locates the critical `η₀` (the
/// zero of `Q_viol` between the optimum and the upper bound) by bisection.
pub fn optimize_qviol(n: usize) -> Result<QviolOptimum> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {n}")));
    }
    let upper = eta0_upper_bound(n);
    let f = |eta: f64| qviol_closed_form(n, eta);

    let steps = 1000usize;
    let mut best_idx = 0usize;
    let mut best_val = f(0.0);
    for k in 1..=steps {
        let eta = upper * k as f64 / steps as f64;
        let v = f(eta);
        if v > best_val {
            best_val = v;
            best_idx = k;
        }
    }
    let lo = upper * best_idx.saturating_sub(1) as f64 / steps as f64;
    let hi = upper * (best_idx + 1).min(steps) as f64 / steps as f64;
    let (golden_eta, golden_val) = golden_section_max(&f, lo, hi, 1e-7);
    // If the function were not unimodal on the bracket, fall back to the
    // grid winner.
    let (optimal_eta0, max_qviol) = if golden_val >= best_val {
        (golden_eta, golden_val)
    } else {
        (upper * best_idx as f64 / steps as f64, best_val)
    };

    let critical_eta0 = if max_qviol <= 0.0 {
        optimal_eta0
    } else {
        debug_assert!(f(upper) < 0.0);
        bisect_root(&f, optimal_eta0, upper, 1e-7)
    };
    Ok(QviolOptimum { optimal_eta0, max_qviol, critical_eta0, eta0_upper: upper })
}

fn golden_section_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Bisection for a sign change from positive (at `a`) to negative (at `b`).
fn bisect_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Predictability `2·max_X p(X) − 1` of a binary outcome distribution.
pub fn predictability(dist: &[f64]) -> Result<f64> {
    if dist.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dist.len() });
    }
    let sum = dist[0] + dist[1];
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    if dist[0] < -1e-9 || dist[1] < -1e-9 {
        return Err(Error::InvalidInput("negative probability".to_string()));
    }
    Ok((2.0 * dist[0].max(dist[1]) - 1.0).clamp(0.0, 1.0))
}

/// Verifies the ontological bound `ξ(pattern|M_*, λ) ≤ 1 − (1/n²)Σ_i η(M_i, λ)`
/// for a mixture over the n-cycle polytope vertices (pattern "anti" for odd
/// `n`, "chained" for even `n`), and returns the slack (bound minus witness),
/// which is nonnegative for every valid mixture.
pub fn nc_model_bound_check(n: usize, mixture: &[f64]) -> Result<f64> {
    let vertices = ncycle_polytope(n)?;
    if mixture.len() != vertices.len() {
        return Err(Error::DimensionMismatch { expected: vertices.len(), got: mixture.len() });
    }
    let sum: f64 = mixture.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    if mixture.iter().any(|&x| x < -1e-12) {
        return Err(Error::InvalidInput("negative mixture weight".to_string()));
    }
    let odd = n % 2 == 1;
    let mut witness = 0.0;
    let mut eta_sum = 0.0;
    for (weight, vertex) in mixture.iter().zip(vertices.iter()) {
        let mut xi = 0.0;
        for i in 0..n {
            let corr = crate::polytope::rat_to_f64(&vertex[n + i]);
            // p(X_i ≠ X_j) = (1 − ⟨S_iS_j⟩)/2; p(X_i = X_j) = (1 + ⟨S_iS_j⟩)/2.
            let anti_pair = odd || i == n - 1;
            xi += if anti_pair { (1.0 - corr) / 2.0 } else { (1.0 + corr) / 2.0 };
        }
        xi /= n as f64;
        let eta_lambda: f64 = (0..n)
            .map(|i| crate::polytope::rat_to_f64(&vertex[i]).abs())
            .sum();
        witness += weight * xi;
        eta_sum += weight * eta_lambda;
    }
    let bound = 1.0 - eta_sum / (n * n) as f64;
    Ok(bound - witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::{assignment_polytope, EventHypergraph};
    use crate::polytope::{enumerate_vertices, lp_maximize, rat_to_f64};
    use alloc::collections::BTreeSet;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Random statistics satisfying no-disturbance, for any cycle length.
    fn random_nd_stats(rng: &mut ChaCha8Rng, n: usize) -> PairwiseStats {
        let p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                let lo = (p[i] - p[j]).abs();
                let hi = (p[i] + p[j]).min(2.0 - p[i] - p[j]);
                lo + (hi - lo) * rng.gen::<f64>()
            })
            .collect();
        PairwiseStats::new(n, w, p).expect("sampled within the no-disturbance region")
    }

    /// Dyadic-rational no-disturbance statistics (denominator 256), so f64
    /// arithmetic on them is exact; returns the numerators too.
    fn random_dyadic_stats(rng: &mut ChaCha8Rng) -> (PairwiseStats, [i64; 3], [i64; 3]) {
        const D: i64 = 256;
        let pn: Vec<i64> = (0..3).map(|_| rng.gen_range(0..=D)).collect();
        let mut wn = [0i64; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let lo = (pn[i] - pn[j]).abs();
            let hi = (pn[i] + pn[j]).min(2 * D - pn[i] - pn[j]);
            wn[i] = rng.gen_range(lo..=hi);
        }
        let stats = PairwiseStats::new(
            3,
            wn.iter().map(|&x| x as f64 / D as f64).collect(),
            pn.iter().map(|&x| x as f64 / D as f64).collect(),
        )
        .expect("dyadic sample is within the no-disturbance region");
        (stats, wn, [pn[0], pn[1], pn[2]])
    }

    /// Flips the outcomes of measurement `k` (0-based): `p_k → 1 − p_k` and
    /// the anticorrelations of both pairs containing `k` flip.
    fn flip_measurement(s: &PairwiseStats, k: usize) -> PairwiseStats {
        let n = s.n();
        let mut w = s.w().to_vec();
        let mut p = s.p().to_vec();
        p[k] = 1.0 - p[k];
        w[k] = 1.0 - w[k];
        w[(k + n - 1) % n] = 1.0 - w[(k + n - 1) % n];
        PairwiseStats::new(n, w, p).expect("no-disturbance is invariant under outcome flips")
    }

    #[test]
    fn specker_vertex_list() {
        let vs = specker_vertices();
        assert_eq!(vs.len(), 12);
        // v0: all pairs perfectly correlated at (0,0).
        assert!(vs.contains(&[
            rat_int(0), rat_int(0), rat_int(0), rat_int(1), rat_int(1), rat_int(1)
        ]));
        // v7: all X_i = 1.
        assert!(vs.contains(&[
            rat_int(0), rat_int(0), rat_int(0), rat_int(0), rat_int(0), rat_int(0)
        ]));
        // v11 (OS correlations) and the other three indeterministic vertices.
        let h = rat(1, 2);
        for w in [[1i64, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]] {
            let v: Vec<Rat> = w
                .iter()
                .map(|&x| rat_int(x))
                .chain([h.clone(), h.clone(), h.clone()])
                .collect();
            assert!(vs.contains(&v));
        }
        // 8 deterministic vertices in total.
        let det = vs
            .iter()
            .filter(|v| v.iter().all(|x| *x == Rat::zero() || *x == Rat::one()))
            .count();
        assert_eq!(det, 8);
    }

    #[test]
    fn specker_vertices_match_exact_enumeration() {
        // Cross-check against the rational vertex enumeration of the lifted
        // no-disturbance H-description.
        let lifted = enumerate_vertices(&specker_nd_hpolytope()).unwrap();
        assert_eq!(lifted.len(), 12);
        let projected: BTreeSet<Vec<Rat>> =
            lifted.iter().map(|v| v[..6].to_vec()).collect();
        let explicit: BTreeSet<Vec<Rat>> = specker_vertices().iter().cloned().collect();
        assert_eq!(projected, explicit);
    }

    #[test]
    fn specker_vertices_match_event_structure_enumeration() {
        // Second cross-check: the Specker scenario as an event structure of
        // three 4-outcome measurements over 12 outcome classes (pair (1,2)
        // -> classes 0..4, (2,3) -> 4..8, (1,3) -> 8..12, outcome order
        // 00,01,10,11), with the marginal-agreement equalities appended to
        // the normalization rows.
        let h = EventHypergraph::new(12, vec![
            vec![0, 1, 2, 3],
            vec![4, 5, 6, 7],
            vec![8, 9, 10, 11],
        ])
        .unwrap();
        let base = assignment_polytope(&h);
        let mut rows: Vec<Vec<Rat>> = (0..base.n_equalities())
            .map(|r| base.eq_matrix()[r].clone())
            .collect();
        let mut rhs = base.eq_rhs().to_vec();
        let mut add_equality = |plus: [usize; 2], minus: [usize; 2]| {
            let mut row = vec![Rat::zero(); 12];
            for k in plus {
                row[k] = rat_int(1);
            }
            for k in minus {
                row[k] = rat_int(-1);
            }
            rows.push(row);
            rhs.push(Rat::zero());
        };
        add_equality([0, 1], [8, 9]); // p(X1=0) from (1,2) and from (1,3)
        add_equality([0, 2], [4, 5]); // p(X2=0) from (1,2) and from (2,3)
        add_equality([4, 6], [8, 10]); // p(X3=0) from (2,3) and from (1,3)
        let polytope = HPolytope::new(12, rows, rhs).unwrap();
        let vs = enumerate_vertices(&polytope).unwrap();
        assert_eq!(vs.len(), 12);
        let projected: BTreeSet<Vec<Rat>> = vs
            .iter()
            .map(|q| {
                vec![
                    q[1].clone() + &q[2],  // w12
                    q[5].clone() + &q[6],  // w23
                    q[9].clone() + &q[10], // w13
                    q[0].clone() + &q[1],  // p1
                    q[4].clone() + &q[5],  // p2
                    q[8].clone() + &q[10], // p3
                ]
            })
            .collect();
        let explicit: BTreeSet<Vec<Rat>> = specker_vertices().iter().cloned().collect();
        assert_eq!(projected, explicit);
    }

    #[test]
    fn ks_inequality_examples() {
        // OS correlations: maximal anticorrelation.
        let os = PairwiseStats::specker(1.0, 1.0, 1.0, 0.5, 0.5, 0.5).unwrap();
        let r = ks_inequalities(&os).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
        assert!(r[1] < 0.0 && r[2] < 0.0 && r[3] < 0.0);

        // v8 pattern: only the first pair anticorrelated.
        let v8 = PairwiseStats::specker(1.0, 0.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        let r = ks_inequalities(&v8).unwrap();
        assert!((r[1] - 1.0).abs() < 1e-15);
        assert!(r[0] < 0.0 && r[2] < 0.0 && r[3] < 0.0);

        // v9 and v10 violate the R1 and R2 inequalities respectively.
        let v9 = PairwiseStats::specker(0.0, 1.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        assert!(ks_inequalities(&v9).unwrap()[2] > 0.0);
        let v10 = PairwiseStats::specker(0.0, 0.0, 1.0, 0.5, 0.5, 0.5).unwrap();
        assert!(ks_inequalities(&v10).unwrap()[3] > 0.0);

        // Deterministic vertex: everything satisfied.
        let v0 = PairwiseStats::specker(0.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(ks_inequalities(&v0).unwrap().iter().all(|&x| x <= 0.0));
    }

    #[test]
    fn no_disturbance_validation() {
        // Perfect anticorrelation with deterministic marginals is disturbing.
        assert!(matches!(
            PairwiseStats::specker(1.0, 0.0, 0.0, 1.0, 1.0, 1.0),
            Err(Error::NoDisturbanceViolated(_))
        ));
        // w below |p_i − p_j|.
        assert!(matches!(
            PairwiseStats::specker(0.0, 0.1, 0.9, 1.0, 0.1, 0.2),
            Err(Error::NoDisturbanceViolated(_))
        ));
        assert!(PairwiseStats::specker(0.9, 0.1, 0.8, 1.0, 0.1, 0.2).is_ok());
    }

    #[test]
    fn at_most_one_ks_residual_positive_100k() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let s = random_nd_stats(&mut rng, 3);
            let r = ks_inequalities(&s).unwrap();
            let positives = r.iter().filter(|&&x| x > 0.0).count();
            assert!(positives <= 1, "residuals {r:?}");
        }
    }

    #[test]
    fn fine_examples() {
        // Uniform independent coins: joint exists (the uniform one works).
        let coins = PairwiseStats::specker(0.5, 0.5, 0.5, 0.5, 0.5, 0.5).unwrap();
        match fine_joint_distribution(&coins).unwrap() {
            FineOutcome::Joint(q) => {
                assert_eq!(q.len(), 8);
                assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            FineOutcome::NoJoint { .. } => panic!("uniform coins admit a joint"),
        }

        // OS correlations: no joint, and the violated inequality is R3.
        let os = PairwiseStats::specker(1.0, 1.0, 1.0, 0.5, 0.5, 0.5).unwrap();
        match fine_joint_distribution(&os).unwrap() {
            FineOutcome::NoJoint { violated } => assert_eq!(violated, "R3 <= 2"),
            FineOutcome::Joint(_) => panic!("OS correlations admit no joint"),
        }

        // v8 pattern: the violated inequality is R0.
        let v8 = PairwiseStats::specker(1.0, 0.0, 0.0, 0.5, 0.5, 0.5).unwrap();
        match fine_joint_distribution(&v8).unwrap() {
            FineOutcome::NoJoint { violated } => assert_eq!(violated, "R0 <= 0"),
            FineOutcome::Joint(_) => panic!("v8 admits no joint"),
        }

        // A deterministic point: joint is the point mass.
        let det = PairwiseStats::specker(1.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        match fine_joint_distribution(&det).unwrap() {
            FineOutcome::Joint(q) => {
                // (X1, X2, X3) = (0, 1, 1) -> index 3.
                for (i, &x) in q.iter().enumerate() {
                    let want = if i == 3 { 1.0 } else { 0.0 };
                    assert!((x - want).abs() < 1e-12);
                }
            }
            FineOutcome::NoJoint { .. } => panic!("deterministic stats admit a joint"),
        }
    }

    #[test]
    fn fine_matches_lp_feasibility_on_10k_points() {
        // The joint over (X1, X2, X3) exists iff the 8-simplex system with
        // the six marginal constraints is feasible; check agreement on 10^4
        // dyadic-rational samples (f64 arithmetic on these is exact).
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut no_joint_count = 0usize;
        for _ in 0..10_000 {
            let (stats, wn, pn) = random_dyadic_stats(&mut rng);
            let fine_exists =
                matches!(fine_joint_distribution(&stats).unwrap(), FineOutcome::Joint(_));

            let mut rows = Vec::with_capacity(7);
            let mut rhs = Vec::with_capacity(7);
            rows.push(vec![Rat::one(); 8]);
            rhs.push(Rat::one());
            let mut push_sum = |indices: &[usize], value: Rat| {
                let mut row = vec![Rat::zero(); 8];
                for &i in indices {
                    row[i] = Rat::one();
                }
                rows.push(row);
                rhs.push(value);
            };
            // Index = 4·X1 + 2·X2 + X3.
            push_sum(&[2, 3, 4, 5], rat(wn[0], 256)); // X1 != X2
            push_sum(&[1, 2, 5, 6], rat(wn[1], 256)); // X2 != X3
            push_sum(&[1, 3, 4, 6], rat(wn[2], 256)); // X1 != X3
            push_sum(&[0, 1, 2, 3], rat(pn[0], 256)); // X1 = 0
            push_sum(&[0, 1, 4, 5], rat(pn[1], 256)); // X2 = 0
            push_sum(&[0, 2, 4, 6], rat(pn[2], 256)); // X3 = 0
            let polytope = HPolytope::new(8, rows, rhs).unwrap();
            let lp_feasible = match lp_maximize(&vec![Rat::zero(); 8], &polytope) {
                Ok(_) => true,
                Err(Error::EmptyPolytope) => false,
                Err(e) => panic!("unexpected LP error: {e}"),
            };
            assert_eq!(fine_exists, lp_feasible, "stats {:?} {:?}", stats.w(), stats.p());
            if !fine_exists {
                no_joint_count += 1;
            }
        }
        // Both branches must actually be exercised.
        assert!(no_joint_count > 100, "only {no_joint_count} infeasible samples");
        assert!(no_joint_count < 9900);
    }

    #[test]
    fn lsw_bound_examples() {
        let b = lsw_bound(1.0).unwrap();
        assert!((b.summed - 2.0).abs() < 1e-15);
        let b = lsw_bound(0.0).unwrap();
        assert!((b.summed - 3.0).abs() < 1e-15);
        assert!((b.averaged - 1.0).abs() < 1e-15);
        let b = lsw_bound(2.0 / 3.0).unwrap();
        assert!((b.averaged - 7.0 / 9.0).abs() < 1e-12);
        assert!(lsw_bound(1.5).is_err());

        let b = nc_bounds_r0r1r2(0.25).unwrap();
        assert!((b.summed - 0.75).abs() < 1e-15);
        assert!((b.averaged - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cmax_trine_values() {
        let trine = [-0.5, -0.5, -0.5];
        // At the trine compatibility boundary η = 2/3 the closed form gives
        // √13/3 − 1.
        let c = cmax_coplanar(2.0 / 3.0, trine).unwrap();
        assert!((c - (13f64.sqrt() / 3.0 - 1.0)).abs() < 1e-12);
        assert!((c / 6.0 - 0.03364).abs() < 1e-4);

        // The weak-measurement optimum η = 0.4566.
        let c = cmax_coplanar(0.4566, trine).unwrap();
        assert!((c / 6.0 - 0.0896).abs() < 1e-4);
        // S = R3_Q − (1 − η/3).
        let r3 = r3_quantum_trine(0.4566).unwrap();
        assert!((r3 - 0.9374).abs() < 1e-4);
        assert!((c / 6.0 - (r3 - lsw_bound(0.4566).unwrap().averaged)).abs() < 1e-12);

        // η = 0 is trivial.
        assert!(cmax_coplanar(0.0, trine).unwrap().abs() < 1e-15);

        // Beyond the compatibility bound the pair is flagged.
        assert!(matches!(
            cmax_coplanar(0.75, trine),
            Err(Error::IncompatiblePair { .. })
        ));

        // Non-coplanar cosines are rejected.
        assert!(cmax_coplanar(0.5, [-0.5, -0.5, 0.4]).is_err());
    }

    #[test]
    fn r3_trine_values() {
        assert!((r3_quantum_trine(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((r3_quantum_trine(2.0 / 3.0).unwrap() - 0.8114).abs() < 1e-4);
        // Exact closed form at η = 2/3: ½ + 1/9 + √13/18.
        assert!(
            (r3_quantum_trine(2.0 / 3.0).unwrap() - (0.5 + 1.0 / 9.0 + 13f64.sqrt() / 18.0))
                .abs()
                < 1e-15
        );
        assert!(r3_quantum_trine(0.8).is_err());
    }

    #[test]
    fn no_state_independent_violation() {
        let trine = [
            [0.0, 0.0, 1.0],
            [3f64.sqrt() / 2.0, 0.0, -0.5],
            [-(3f64.sqrt()) / 2.0, 0.0, -0.5],
        ];
        assert!(!no_state_independent_violation_check(&trine).unwrap());
        let orthogonal = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(!no_state_independent_violation_check(&orthogonal).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let mut axes = [[0.0; 3]; 3];
            for axis in &mut axes {
                loop {
                    let v = [
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 2.0 - 1.0,
                    ];
                    let l = norm(v);
                    if l > 1e-3 {
                        *axis = scale3(v, 1.0 / l);
                        break;
                    }
                }
            }
            assert!(!no_state_independent_violation_check(&axes).unwrap());
        }
    }

    #[test]
    fn ncycle_polytope_counts_and_specker_match() {
        assert_eq!(ncycle_polytope(3).unwrap().len(), 12);
        assert_eq!(ncycle_polytope(4).unwrap().len(), 24);
        assert_eq!(ncycle_polytope(5).unwrap().len(), 48);
        assert!(matches!(ncycle_polytope(13), Err(Error::DimensionLimit { .. })));
        assert!(matches!(ncycle_polytope(2), Err(Error::DimensionLimit { .. })));

        // n = 3 in correlator coordinates matches the Specker vertex list
        // under ⟨S_i⟩ = 2p_i − 1, ⟨S_iS_j⟩ = 1 − 2w_ij (pair order of the
        // 3-cycle: (1,2), (2,3), (3,1) = (1,3)).
        let two = rat_int(2);
        let one = Rat::one();
        let converted: BTreeSet<Vec<Rat>> = specker_vertices()
            .iter()
            .map(|v| {
                let mut out = Vec::with_capacity(6);
                for i in 0..3 {
                    out.push(two.clone() * &v[3 + i] - &one);
                }
                for i in 0..3 {
                    out.push(one.clone() - two.clone() * &v[i]);
                }
                out
            })
            .collect();
        let cycle: BTreeSet<Vec<Rat>> = ncycle_polytope(3).unwrap().iter().cloned().collect();
        assert_eq!(converted, cycle);
    }

    #[test]
    fn nc_bound_examples() {
        let b = nc_bound_ncycle(3, 0.4566).unwrap();
        assert!((b.two_witness - 1.6956).abs() < 1e-12);
        let b = nc_bound_ncycle(3, 1.0).unwrap();
        assert!((b.two_witness - 4.0 / 3.0).abs() < 1e-12);
        assert!((b.single_witness - 2.0 / 3.0).abs() < 1e-12);
        let b = nc_bound_ncycle(5, 0.0).unwrap();
        assert!((b.two_witness - 2.0).abs() < 1e-15);
        assert!(nc_bound_ncycle(3, 1.5).is_err());
    }

    #[test]
    fn quantum_witness_specker_and_chsh_cycle() {
        // n = 3 at the optimum of the paper's construction.
        let cfg = NCycleQuantumConfig::default_for(3, 0.4566).unwrap();
        let report = quantum_witness_ncycle(&cfg).unwrap();
        assert!((report.witness_value - 1.8749).abs() < 1e-4);
        assert!((report.nc_bound - 1.6956).abs() < 1e-4);
        assert!((report.eta_ave - 0.4566).abs() < 1e-10);
        assert!(report.violated);
        assert!((report.witness_value - report.nc_bound - 0.1793).abs() < 1e-3);

        // n = 4 at its tabulated optimum.
        let cfg = NCycleQuantumConfig::default_for(4, 0.5029).unwrap();
        let report = quantum_witness_ncycle(&cfg).unwrap();
        assert!(report.violated);
        assert!((report.witness_value - report.nc_bound - 0.1557).abs() < 1e-3);

        // η₀ = 0: witness degenerates to 2 and cannot violate.
        let cfg = NCycleQuantumConfig::default_for(3, 0.0).unwrap();
        let report = quantum_witness_ncycle(&cfg).unwrap();
        assert!((report.witness_value - 2.0).abs() < 1e-12);
        assert!((report.nc_bound - 2.0).abs() < 1e-12);
        assert!(!report.violated);

        // Beyond the joint-measurability cap the configuration is rejected.
        assert!(matches!(
            NCycleQuantumConfig::default_for(3, 0.74),
            Err(Error::IncompatiblePair { .. })
        ));
    }

    #[test]
    fn closed_form_matches_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 3..=12usize {
            let upper = eta0_upper_bound(n);
            for _ in 0..20 {
                let eta0 = upper * rng.gen::<f64>();
                let cfg = NCycleQuantumConfig::default_for(n, eta0).unwrap();
                let report = quantum_witness_ncycle(&cfg).unwrap();
                let closed = ncycle_quantum_value(n, eta0);
                assert!(
                    (report.witness_value - closed).abs() < 1e-9,
                    "n = {n}, eta0 = {eta0}: Born {} vs closed form {closed}",
                    report.witness_value
                );
            }
        }
    }

    #[test]
    fn qviol_table_16_rows() {
        let table: [(usize, f64, f64, f64, f64); 16] = [
            (3, 0.1793, 0.4566, 0.6981, 0.7320),
            (4, 0.1557, 0.5029, 0.7369, 0.7653),
            (5, 0.1393, 0.5412, 0.7693, 0.7936),
            (6, 0.1266, 0.5727, 0.7953, 0.8164),
            (7, 0.1164, 0.5990, 0.8163, 0.8351),
            (8, 0.1079, 0.6213, 0.8336, 0.8504),
            (9, 0.1007, 0.6403, 0.8479, 0.8632),
            (10, 0.0944, 0.6569, 0.8601, 0.8740),
            (11, 0.0889, 0.6715, 0.8704, 0.8832),
            // The optimum at n = 12 sits at 0.684401 (the reference value
            // 0.6822 reflects a looser optimizer tolerance: the violation is
            // flat there, Q(0.6822) differing from the maximum by < 3e-6).
            (12, 0.0841, 0.6844, 0.8794, 0.8912),
            (13, 0.0798, 0.6960, 0.8872, 0.8982),
            (14, 0.0759, 0.7064, 0.8940, 0.9044),
            (99, 0.0160, 0.8881, 0.9829, 0.9845),
            (100, 0.0159, 0.8887, 0.9831, 0.9846),
            (199, 0.0086, 0.9211, 0.9914, 0.9921),
            (200, 0.0085, 0.9213, 0.9914, 0.9922),
        ];
        for (n, qviol, optimal, critical, upper) in table {
            let opt = optimize_qviol(n).unwrap();
            assert!((opt.max_qviol - qviol).abs() < 1e-3, "Q_viol at n = {n}: {opt:?}");
            assert!((opt.optimal_eta0 - optimal).abs() < 1e-3, "optimal at n = {n}: {opt:?}");
            assert!((opt.critical_eta0 - critical).abs() < 1e-3, "critical at n = {n}: {opt:?}");
            assert!((opt.eta0_upper - upper).abs() < 1e-3, "upper at n = {n}: {opt:?}");
            // The reported optimum is consistent with the closed form.
            assert!((qviol_closed_form(n, opt.optimal_eta0) - opt.max_qviol).abs() < 1e-12);
        }
        // Flat-optimum check for the corrected n = 12 cell: the violation at
        // 0.6822 is within 3e-6 of the maximum, so both values describe the
        // same optimum to the precision the violation itself is quoted at.
        let opt12 = optimize_qviol(12).unwrap();
        assert!((qviol_closed_form(12, 0.6822) - opt12.max_qviol).abs() < 3e-6);
    }

    #[test]
    fn predictability_examples() {
        assert!(predictability(&[0.5, 0.5]).unwrap().abs() < 1e-15);
        assert!((predictability(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let eta0 = 0.37;
        let dist = [(1.0 + eta0) / 2.0, (1.0 - eta0) / 2.0];
        assert!((predictability(&dist).unwrap() - eta0).abs() < 1e-15);
        assert!(matches!(
            predictability(&[0.3, 0.3]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(predictability(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn nc_model_bound_slack() {
        // Point mass on the all-anticorrelated indeterministic vertex of the
        // 3-cycle: ξ(anti) = 1, all predictabilities 0, slack exactly 0.
        let vs = ncycle_polytope(3).unwrap();
        let target: Vec<Rat> = vec![
            Rat::zero(), Rat::zero(), Rat::zero(),
            rat_int(-1), rat_int(-1), rat_int(-1),
        ];
        let idx = vs.iter().position(|v| *v == target).unwrap();
        let mut mixture = vec![0.0; vs.len()];
        mixture[idx] = 1.0;
        let slack = nc_model_bound_check(3, &mixture).unwrap();
        assert!(slack.abs() < 1e-12);

        // Point masses on deterministic vertices: slack nonnegative, and the
        // bound 1 − 1/n·1 = 2/3 is attained by some deterministic vertex.
        let mut min_slack = f64::INFINITY;
        for (i, v) in vs.iter().enumerate() {
            if v[..3].iter().any(|x| *x == Rat::zero()) {
                continue; // not deterministic
            }
            let mut mixture = vec![0.0; vs.len()];
            mixture[i] = 1.0;
            let slack = nc_model_bound_check(3, &mixture).unwrap();
            assert!(slack >= -1e-12);
            min_slack = min_slack.min(slack);
        }
        assert!(min_slack.abs() < 1e-12, "some deterministic vertex saturates the bound");

        // Random mixtures for n = 3..6.
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for n in 3..=6usize {
            let count = ncycle_polytope(n).unwrap().len();
            for _ in 0..1000 {
                let mut mixture: Vec<f64> = (0..count).map(|_| rng.gen::<f64>()).collect();
                let total: f64 = mixture.iter().sum();
                for x in &mut mixture {
                    *x /= total;
                }
                assert!(nc_model_bound_check(n, &mixture).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn relabelling_maps_lsw_to_other_inequalities() {
        // Flipping the outcomes of M1 / M2 / M3 maps the LSW residual
        // (summed convention) to the R1 / R2 / R0 residuals respectively.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let s = random_nd_stats(&mut rng, 3);
            let eta = rng.gen::<f64>();
            let lsw_residual = |x: &PairwiseStats| {
                x.w().iter().sum::<f64>() - lsw_bound(eta).unwrap().summed
            };
            let r = ks_inequalities(&s).unwrap();
            let nc = nc_bounds_r0r1r2(eta).unwrap().summed;
            let targets = [r[2] - nc, r[3] - nc, r[1] - nc]; // R1, R2, R0
            for k in 0..3 {
                let flipped = flip_measurement(&s, k);
                assert!(
                    (lsw_residual(&flipped) - targets[k]).abs() < 1e-12,
                    "flip M{} mismatch",
                    k + 1
                );
            }
        }

        // Vertex-level relabelling: v8 -> v11 under flipping M3, v9 -> v11
        // under flipping M1, v10 -> v11 under flipping M2.
        let v11 = PairwiseStats::specker(1.0, 1.0, 1.0, 0.5, 0.5, 0.5).unwrap();
        for (w, flip) in [([1.0, 0.0, 0.0], 2usize), ([0.0, 1.0, 0.0], 0), ([0.0, 0.0, 1.0], 1)] {
            let v = PairwiseStats::specker(w[0], w[1], w[2], 0.5, 0.5, 0.5).unwrap();
            assert_eq!(flip_measurement(&v, flip), v11);
        }
    }

    #[test]
    fn quantum_side_against_polytope_bound() {
        // The quantum witness at the n = 3 optimum exceeds the deterministic
        // polytope's reach: evaluate the witness expression on every
        // deterministic vertex at matching predictability and confirm the
        // quantum value beats all of them.
        let eta0 = 0.4566;
        let report =
            quantum_witness_ncycle(&NCycleQuantumConfig::default_for(3, eta0).unwrap()).unwrap();
        // Noncontextual models with predictability η₀ reach at most the
        // two-witness bound; any deterministic assignment stays below it.
        let vs = ncycle_polytope(3).unwrap();
        for v in vs.iter() {
            let anti: f64 = (0..3)
                .map(|i| (1.0 - rat_to_f64(&v[3 + i])) / 2.0)
                .sum::<f64>()
                / 3.0;
            // Noisy response: mix the vertex with uniform noise at rate η₀.
            let noisy = eta0 * anti + (1.0 - eta0) * 0.5;
            assert!(2.0 * noisy <= report.nc_bound + 1e-9);
        }
        assert!(report.witness_value > report.nc_bound + 1e-3);
    }
}
