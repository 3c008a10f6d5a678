//! Joint measurability of noisy qubit observables: pairwise and N-wise
//! criteria, explicit joint-POVM construction, the unique product joint for
//! commuting projective measurements, and realization of arbitrary
//! compatibility hypergraphs on direct sums of anticommuting-generator blocks.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantum::{
    bloch_to_effect, clifford_generators_capped, direct_sum, BlochEffect, Effect,
    HermitianOperator, Povm, DEFAULT_MAX_DIM,
};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A noisy spin observable `E_± = ½I ± (η/2)σ·n̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisySpinObservable {
    pub eta: f64,
    pub axis: [f64; 3],
}

impl NoisySpinObservable {
    pub fn new(eta: f64, axis: [f64; 3]) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidInput(format!("sharpness η = {eta} outside [0,1]")));
        }
        if (norm(axis) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "axis norm {} is not 1",
                norm(axis)
            )));
        }
        Ok(NoisySpinObservable { eta, axis })
    }

    /// The binary POVM `{½(I + η σ·n̂)/1, ½(I − η σ·n̂)}` with labels "+"/"−".
    pub fn povm(&self) -> Result<Povm> {
        let plus = bloch_to_effect(&BlochEffect::new(1.0, scale3(self.axis, self.eta))?)?;
        let minus = bloch_to_effect(&BlochEffect::new(1.0, scale3(self.axis, -self.eta))?)?;
        Povm::binary(plus, minus)
    }
}

/// Pairwise joint measurability of two equally-noisy spin observables:
/// holds iff `1 + η⁴(n̂_i·n̂_j)² − 2η² ≥ 0` (boundary counts as compatible).
pub fn pairwise_compatible(
    obs_i: &NoisySpinObservable,
    obs_j: &NoisySpinObservable,
) -> Result<bool> {
    if (obs_i.eta - obs_j.eta).abs() > 1e-12 {
        return Err(Error::EtaMismatch { eta_i: obs_i.eta, eta_j: obs_j.eta });
    }
    let eta = obs_i.eta;
    let d = dot(obs_i.axis, obs_j.axis);
    Ok(1.0 + eta.powi(4) * d * d - 2.0 * eta * eta >= -1e-12)
}

/// `max_X |m⃗_X|` and `Σ_X |m⃗_X|` over all sign patterns `X ∈ {±1}^N`,
/// `m⃗_X = Σ_k X_k a_k`, for axis vectors of any common dimension.
fn sign_norm_stats(axes: &[&[f64]]) -> (f64, f64) {
    let n = axes.len();
    let dim = axes[0].len();
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for pattern in 0..(1u64 << n) {
        let mut m = vec![0.0f64; dim];
        for (k, ax) in axes.iter().enumerate() {
            let s = if pattern >> k & 1 == 1 { 1.0 } else { -1.0 };
            for (mc, &ac) in m.iter_mut().zip(ax.iter()) {
                *mc += s * ac;
            }
        }
        let nm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        max = max.max(nm);
        sum += nm;
    }
    (max, sum)
}

/// Necessary N-wise threshold `(1/N)·max_X |m⃗_X|` for unit 3-vector axes.
pub fn n_wise_necessary_threshold(axes: &[[f64; 3]]) -> f64 {
    let refs: Vec<&[f64]> = axes.iter().map(|a| a.as_slice()).collect();
    let (max, _) = sign_norm_stats(&refs);
    max / axes.len() as f64
}

/// Sufficient N-wise threshold `2^N / Σ_X |m⃗_X|` for unit 3-vector axes.
pub fn n_wise_sufficient_threshold(axes: &[[f64; 3]]) -> f64 {
    let refs: Vec<&[f64]> = axes.iter().map(|a| a.as_slice()).collect();
    let (_, sum) = sign_norm_stats(&refs);
    (1u64 << axes.len()) as f64 / sum
}

/// Necessary condition for N-wise joint measurability at common sharpness
/// `η`: false means definitely not jointly measurable.
pub fn n_wise_necessary(eta_common: f64, axes: &[[f64; 3]]) -> bool {
    eta_common <= n_wise_necessary_threshold(axes) + 1e-12
}

/// Sufficient condition for N-wise joint measurability at common sharpness
/// `η`: true means definitely jointly measurable.
pub fn n_wise_sufficient(eta_common: f64, axes: &[[f64; 3]]) -> bool {
    eta_common <= n_wise_sufficient_threshold(axes) + 1e-12
}

/// Exact joint-measurability threshold `1/√n` for `n` equally-noisy
/// observables along mutually anticommuting generators (where the necessary
/// and sufficient bounds coincide).
pub fn clifford_jm_threshold(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Parameters `(α, a⃗)` of the general pairwise joint POVM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPovmParams {
    pub alpha: f64,
    pub a_vec: [f64; 3],
}

/// The tightest parameters for a compatible pair: `α = 1 + η²(n̂_i·n̂_j)` and
/// `a⃗` of norm `√(1 + η⁴(n̂_i·n̂_j)² − 2η²)` along the plane normal
/// `n̂_i × n̂_j` (both validity inequalities saturate simultaneously).
pub fn optimal_joint_params(
    obs_i: &NoisySpinObservable,
    obs_j: &NoisySpinObservable,
) -> Result<JointPovmParams> {
    if (obs_i.eta - obs_j.eta).abs() > 1e-12 {
        return Err(Error::EtaMismatch { eta_i: obs_i.eta, eta_j: obs_j.eta });
    }
    let eta = obs_i.eta;
    let d = dot(obs_i.axis, obs_j.axis);
    let a_sq = 1.0 + eta.powi(4) * d * d - 2.0 * eta * eta;
    if a_sq < -1e-12 {
        return Err(Error::IncompatiblePair { i: 0, j: 1 });
    }
    let a_len = a_sq.max(0.0).sqrt();
    let mut normal = cross3(obs_i.axis, obs_j.axis);
    let nn = norm(normal);
    if nn < 1e-9 {
        // Parallel axes: any direction orthogonal to n̂_i works.
        let pick = if obs_i.axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        normal = cross3(obs_i.axis, pick);
    }
    let normal = scale3(normal, 1.0 / norm(normal));
    Ok(JointPovmParams { alpha: 1.0 + eta * eta * d, a_vec: scale3(normal, a_len) })
}

/// Builds the 4-outcome joint POVM
/// `G_{±±} = ¼[α·I ± σ·(η(n̂_i+n̂_j)) − σ·(±a⃗)]`,
/// `G_{±∓} = ¼[(2−α)·I ± σ·(η(n̂_i−n̂_j)) ± σ·a⃗]`
/// with outcome labels `(X_i, X_j)`, after checking the validity window
/// `√(2η²(1+n̂_i·n̂_j)+|a|²+2η|(n̂_i+n̂_j)·a⃗|) ≤ α ≤
///  2 − √(2η²(1−n̂_i·n̂_j)+|a|²+2η|(n̂_i−n̂_j)·a⃗|)`.
pub fn construct_pairwise_joint(
    obs_i: &NoisySpinObservable,
    obs_j: &NoisySpinObservable,
    params: &JointPovmParams,
) -> Result<Povm> {
    if (obs_i.eta - obs_j.eta).abs() > 1e-12 {
        return Err(Error::EtaMismatch { eta_i: obs_i.eta, eta_j: obs_j.eta });
    }
    let eta = obs_i.eta;
    let (ni, nj) = (obs_i.axis, obs_j.axis);
    let d = dot(ni, nj);
    let a = params.a_vec;
    let a2 = dot(a, a);
    let lower =
        (2.0 * eta * eta * (1.0 + d) + a2 + 2.0 * eta * dot(add3(ni, nj), a).abs()).sqrt();
    let upper = 2.0
        - (2.0 * eta * eta * (1.0 - d) + a2 + 2.0 * eta * dot(sub3(ni, nj), a).abs()).sqrt();
    if params.alpha < lower - 1e-12 {
        return Err(Error::InvalidJointParams(format!(
            "lower validity inequality violated: α = {} < √(2η²(1+n̂_i·n̂_j)+|a|²+2η|(n̂_i+n̂_j)·a⃗|) = {lower}",
            params.alpha
        )));
    }
    if params.alpha > upper + 1e-12 {
        return Err(Error::InvalidJointParams(format!(
            "upper validity inequality violated: α = {} > 2 − √(2η²(1−n̂_i·n̂_j)+|a|²+2η|(n̂_i−n̂_j)·a⃗|) = {upper}",
            params.alpha
        )));
    }
    let quarter_effect = |c: f64, v: [f64; 3]| -> Result<Effect> {
        let m = CMatrix::identity(2)
            .scale_re(c)
            .add(&crate::quantum::sigma_dot(v))
            .scale_re(0.25);
        Effect::new(HermitianOperator::new(m)?)
    };
    let alpha = params.alpha;
    let effects = vec![
        quarter_effect(alpha, sub3(scale3(add3(ni, nj), eta), a))?,
        quarter_effect(2.0 - alpha, add3(scale3(sub3(ni, nj), eta), a))?,
        quarter_effect(2.0 - alpha, add3(scale3(sub3(nj, ni), eta), a))?,
        quarter_effect(alpha, scale3(add3(scale3(add3(ni, nj), eta), a), -1.0))?,
    ];
    let labels = vec![
        "(+,+)".to_string(),
        "(+,-)".to_string(),
        "(-,+)".to_string(),
        "(-,-)".to_string(),
    ];
    let joint = Povm::new(effects, labels)?;
    // Marginalization identities are structural; verify to 1e-12 so any
    // construction bug surfaces immediately.
    let marg_i_plus = joint.effect(0).matrix().add(joint.effect(1).matrix());
    let marg_j_plus = joint.effect(0).matrix().add(joint.effect(2).matrix());
    let want_i = obs_i.povm()?;
    let want_j = obs_j.povm()?;
    if marg_i_plus.max_abs_diff(want_i.effect(0).matrix()) > 1e-12
        || marg_j_plus.max_abs_diff(want_j.effect(0).matrix()) > 1e-12
    {
        return Err(Error::EquivalenceCheckFailed(
            "joint POVM marginals drifted from the input observables".to_string(),
        ));
    }
    Ok(joint)
}

/// Result of the product-joint construction for projective measurements.
#[derive(Debug, Clone)]
pub enum PvmJointOutcome {
    /// All pairs commute; the unique joint is the ordered effect product.
    Joint(Povm),
    /// Some pair of effects fails to commute; no joint measurement exists.
    Incompatible,
}

/// For a list of measurements, all projective except at most one: if every
/// pair of effects across measurements commutes (norm ≤ 1e-9), returns the
/// unique product joint `M(X₁×…×X_N) = Π M_i(X_i)`; otherwise signals
/// `Incompatible`.
pub fn unique_joint_for_pvms(pvms: &[Povm]) -> Result<PvmJointOutcome> {
    if pvms.is_empty() {
        return Err(Error::ShapeMismatch("need at least one measurement".to_string()));
    }
    let dim = pvms[0].dim();
    for p in pvms {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
    }
    let non_projective = pvms.iter().filter(|p| !p.is_projective(1e-9)).count();
    if non_projective > 1 {
        return Err(Error::NotProjective);
    }
    for (i, pi) in pvms.iter().enumerate() {
        for pj in pvms.iter().skip(i + 1) {
            for ei in pi.effects() {
                for ej in pj.effects() {
                    if ei.matrix().commutator_norm(ej.matrix()) > 1e-9 {
                        return Ok(PvmJointOutcome::Incompatible);
                    }
                }
            }
        }
    }
    let total: usize = pvms.iter().map(Povm::n_outcomes).product();
    if total > 4096 {
        return Err(Error::ResourceLimit(format!(
            "joint outcome space of size {total} exceeds 4096"
        )));
    }
    let mut effects = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut index = vec![0usize; pvms.len()];
    loop {
        let mut prod = CMatrix::identity(dim);
        let mut parts: Vec<&str> = Vec::new();
        for (p, &x) in pvms.iter().zip(index.iter()) {
            prod = prod.mul(p.effect(x).matrix());
            parts.push(p.labels()[x].as_str());
        }
        // Commutation holds only to tolerance; symmetrize before validating.
        let herm = prod.add(&prod.adjoint()).scale_re(0.5);
        effects.push(Effect::new(HermitianOperator::new(herm)?)?);
        labels.push(parts.join(","));
        // Odometer increment over the outcome tuple.
        let mut k = pvms.len();
        loop {
            if k == 0 {
                return Ok(PvmJointOutcome::Joint(Povm::new(effects, labels)?));
            }
            k -= 1;
            index[k] += 1;
            if index[k] < pvms[k].n_outcomes() {
                break;
            }
            index[k] = 0;
        }
    }
}

/// A joint-measurability hypergraph: vertices are measurements, edges are
/// the jointly measurable subsets. Downward closure and all singletons are
/// enforced on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JmHypergraph {
    n_vertices: usize,
    edges: BTreeSet<u32>,
}

impl JmHypergraph {
    pub fn new(n_vertices: usize, edges: &[Vec<usize>]) -> Result<Self> {
        if n_vertices == 0 || n_vertices > 30 {
            return Err(Error::InvalidInput(format!(
                "vertex count {n_vertices} outside 1..=30"
            )));
        }
        let mut set: BTreeSet<u32> = BTreeSet::new();
        set.insert(0);
        for v in 0..n_vertices {
            set.insert(1 << v);
        }
        for edge in edges {
            let mut mask = 0u32;
            for &v in edge {
                if v >= n_vertices {
                    return Err(Error::InvalidInput(format!(
                        "vertex {v} out of range for {n_vertices} vertices"
                    )));
                }
                mask |= 1 << v;
            }
            // Downward closure: insert every submask.
            let mut sub = mask;
            loop {
                set.insert(sub);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        Ok(JmHypergraph { n_vertices, edges: set })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Is the given vertex set jointly measurable in this hypergraph?
    pub fn is_edge(&self, vertices: &[usize]) -> bool {
        let mut mask = 0u32;
        for &v in vertices {
            if v >= self.n_vertices {
                return false;
            }
            mask |= 1 << v;
        }
        self.edges.contains(&mask)
    }

    fn is_edge_mask(&self, mask: u32) -> bool {
        self.edges.contains(&mask)
    }

    /// All edges as sorted vertex lists (including singletons, excluding ∅).
    pub fn edges(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .filter(|&&m| m != 0)
            .map(|&m| mask_to_vec(m, self.n_vertices))
            .collect()
    }
}

fn mask_to_vec(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|v| mask >> v & 1 == 1).collect()
}

/// All minimal incompatible sets: non-edges whose proper subsets are all
/// edges; sorted lexicographically.
pub fn find_minimal_incompatible_sets(h: &JmHypergraph) -> Vec<Vec<usize>> {
    let n = h.n_vertices();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..(1 << n) {
        if h.is_edge_mask(mask) {
            continue;
        }
        // Downward closure makes it enough to check the co-atoms.
        let mut minimal = true;
        for v in 0..n {
            if mask >> v & 1 == 1 && !h.is_edge_mask(mask & !(1 << v)) {
                minimal = false;
                break;
            }
        }
        if minimal {
            out.push(mask_to_vec(mask, n));
        }
    }
    out.sort();
    out
}

/// One realization block: the vertices it covers and the sharpness used.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationBlock {
    pub vertices: Vec<usize>,
    pub eta: f64,
    pub dim: usize,
}

/// A quantum realization of a hypergraph: one binary POVM per vertex on a
/// common direct-sum space, plus the block layout used to build it.
#[derive(Debug, Clone)]
pub struct HypergraphRealization {
    pub povms: Vec<Povm>,
    pub blocks: Vec<RealizationBlock>,
}

/// Realizes a joint-measurability hypergraph: one block per minimal
/// incompatible set `S`, carrying noisy anticommuting-generator observables
/// at `η = 1/√(|S|−1)` for the members of `S` and trivial `{0, I}`
/// measurements for everyone else; vertex POVMs are the blockwise direct
/// sums. With no minimal incompatible set (a complete hypergraph) a single
/// trivial one-dimensional block is used.
pub fn realize_hypergraph(h: &JmHypergraph) -> Result<HypergraphRealization> {
    realize_hypergraph_capped(h, DEFAULT_MAX_DIM)
}

/// As [`realize_hypergraph`] with an explicit total-dimension cap.
pub fn realize_hypergraph_capped(
    h: &JmHypergraph,
    max_dim: usize,
) -> Result<HypergraphRealization> {
    let minimal = find_minimal_incompatible_sets(h);
    let n = h.n_vertices();
    let mut blocks: Vec<RealizationBlock> = Vec::new();
    let mut block_gens: Vec<Option<crate::quantum::CliffordSet>> = Vec::new();
    let mut total_dim = 0usize;
    for s in &minimal {
        let size = s.len();
        debug_assert!(size >= 2, "singletons are always edges");
        let eta = 1.0 / ((size - 1) as f64).sqrt();
        let gens = clifford_generators_capped(size, max_dim)?;
        total_dim += gens.dim();
        if total_dim > max_dim {
            return Err(Error::ResourceLimit(format!(
                "realization dimension {total_dim} exceeds cap {max_dim}"
            )));
        }
        blocks.push(RealizationBlock { vertices: s.clone(), eta, dim: gens.dim() });
        block_gens.push(Some(gens));
    }
    if blocks.is_empty() {
        blocks.push(RealizationBlock { vertices: Vec::new(), eta: 0.0, dim: 1 });
        block_gens.push(None);
    }
    let mut povms = Vec::with_capacity(n);
    for v in 0..n {
        let mut parts: Vec<Povm> = Vec::with_capacity(blocks.len());
        for (block, gens) in blocks.iter().zip(&block_gens) {
            let part = match (block.vertices.iter().position(|&w| w == v), gens) {
                (Some(idx), Some(g)) => {
                    let gamma = g.generator(idx).matrix();
                    let id = CMatrix::identity(block.dim);
                    let plus = Effect::new(HermitianOperator::new(
                        id.add(&gamma.scale_re(block.eta)).scale_re(0.5),
                    )?)?;
                    let minus = Effect::new(HermitianOperator::new(
                        id.sub(&gamma.scale_re(block.eta)).scale_re(0.5),
                    )?)?;
                    Povm::binary(plus, minus)?
                }
                _ => Povm::binary(Effect::zero(block.dim), Effect::identity(block.dim))?,
            };
            parts.push(part);
        }
        povms.push(direct_sum(&parts)?);
    }
    let realization = HypergraphRealization { povms, blocks };
    verify_realization(h, &realization)?;
    Ok(realization)
}

/// Re-derives the compatibility pattern blockwise: every edge must pass the
/// sufficient criterion on every block (orthonormal-frame axes at the block's
/// η) and every minimal incompatible set must fail the necessary criterion on
/// its own block.
fn verify_realization(h: &JmHypergraph, r: &HypergraphRealization) -> Result<()> {
    let frame = |k: usize| -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    for edge in h.edges() {
        for block in &r.blocks {
            let k = edge.iter().filter(|v| block.vertices.contains(v)).count();
            if k == 0 {
                continue;
            }
            let axes = frame(k);
            let refs: Vec<&[f64]> = axes.iter().map(|a| a.as_slice()).collect();
            let (_, sum) = sign_norm_stats(&refs);
            let sufficient = (1u64 << k) as f64 / sum;
            if block.eta > sufficient + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "realization failed: edge {edge:?} not certified on block {:?}",
                    block.vertices
                )));
            }
        }
    }
    for block in &r.blocks {
        if block.vertices.is_empty() {
            continue;
        }
        let axes = frame(block.vertices.len());
        let refs: Vec<&[f64]> = axes.iter().map(|a| a.as_slice()).collect();
        let (max, _) = sign_norm_stats(&refs);
        let necessary = max / block.vertices.len() as f64;
        if block.eta <= necessary + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "realization failed: minimal set {:?} came out compatible",
                block.vertices
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{born_probability, effect_to_bloch, DensityOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(eta: f64, axis: [f64; 3]) -> NoisySpinObservable {
        NoisySpinObservable::new(eta, axis).unwrap()
    }

    fn trine_axes() -> [[f64; 3]; 3] {
        let mut axes = [[0.0; 3]; 3];
        for (k, ax) in axes.iter_mut().enumerate() {
            let th = 2.0 * core::f64::consts::PI * k as f64 / 3.0;
            *ax = [th.sin(), 0.0, th.cos()];
        }
        axes
    }

    #[test]
    fn pairwise_orthogonal_threshold_straddle() {
        let x = [1.0, 0.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        assert!(pairwise_compatible(&obs(0.70, x), &obs(0.70, z)).unwrap());
        assert!(!pairwise_compatible(&obs(0.71, x), &obs(0.71, z)).unwrap());
    }

    #[test]
    fn pairwise_trine_boundary_is_compatible() {
        let [a, b, _] = trine_axes();
        let eta = 3.0f64.sqrt() - 1.0;
        assert!(
            pairwise_compatible(&obs(eta, a), &obs(eta, b)).unwrap(),
            "η = √3−1 is the exact trine pair threshold"
        );
        assert!(!pairwise_compatible(&obs(eta + 1e-6, a), &obs(eta + 1e-6, b)).unwrap());
    }

    #[test]
    fn pairwise_trivial_eta_zero_and_eta_mismatch() {
        let x = [1.0, 0.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        assert!(pairwise_compatible(&obs(0.0, x), &obs(0.0, z)).unwrap());
        let err = pairwise_compatible(&obs(0.3, x), &obs(0.4, z)).unwrap_err();
        assert!(matches!(err, Error::EtaMismatch { .. }));
    }

    #[test]
    fn trine_triple_necessary_threshold_is_two_thirds() {
        let axes = trine_axes();
        let th = n_wise_necessary_threshold(&axes);
        assert!((th - 2.0 / 3.0).abs() < 1e-12, "got {th}");
        assert!(!n_wise_necessary(0.67, &axes));
        assert!(n_wise_necessary(0.66, &axes));
    }

    #[test]
    fn orthogonal_triple_necessary_threshold() {
        let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let th = n_wise_necessary_threshold(&axes);
        assert!((th - 1.0 / 3.0f64.sqrt()).abs() < 1e-12, "got {th}");
        assert!(n_wise_necessary(0.55, &axes));
    }

    #[test]
    fn single_axis_is_always_measurable() {
        let axes = [[0.0, 0.0, 1.0]];
        assert!((n_wise_necessary_threshold(&axes) - 1.0).abs() < 1e-15);
        assert!(n_wise_necessary(1.0, &axes));
        assert!(n_wise_sufficient(1.0, &axes));
    }

    #[test]
    fn orthogonal_pair_sufficient_matches_pairwise() {
        let axes = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let th = n_wise_sufficient_threshold(&axes);
        assert!((th - 1.0 / 2.0f64.sqrt()).abs() < 1e-12, "4/(4√2)·2 = 1/√2, got {th}");
        assert!((th - n_wise_necessary_threshold(&axes)).abs() < 1e-12);
    }

    #[test]
    fn sufficiency_implies_necessity_on_random_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = rng.gen_range(1..=5usize);
            let axes: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    let v = [
                        rng.gen::<f64>() - 0.5,
                        rng.gen::<f64>() - 0.5,
                        rng.gen::<f64>() - 0.5,
                    ];
                    let nm = norm(v).max(1e-9);
                    scale3(v, 1.0 / nm)
                })
                .collect();
            let eta: f64 = rng.gen();
            if n_wise_sufficient(eta, &axes) {
                assert!(
                    n_wise_necessary(eta, &axes),
                    "trial {trial}: sufficient held but necessary failed (η={eta}, axes={axes:?})"
                );
            }
            assert!(
                n_wise_sufficient_threshold(&axes) <= n_wise_necessary_threshold(&axes) + 1e-12,
                "threshold sandwich must be ordered"
            );
        }
    }

    #[test]
    fn clifford_thresholds() {
        assert!((clifford_jm_threshold(1) - 1.0).abs() < 1e-15);
        assert!((clifford_jm_threshold(2) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((clifford_jm_threshold(4) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn optimal_trine_joint_matches_closed_form() {
        let [a1, a2, _] = trine_axes();
        let eta = 2.0 / 3.0;
        let oi = obs(eta, a1);
        let oj = obs(eta, a2);
        let params = optimal_joint_params(&oi, &oj).unwrap();
        let a_len = norm(params.a_vec);
        assert!(
            (a_len - 13.0f64.sqrt() / 9.0).abs() < 1e-12,
            "|a⃗| must be √13/9, got {a_len}"
        );
        assert!((params.alpha - (1.0 + eta * eta * dot(a1, a2))).abs() < 1e-12);
        let joint = construct_pairwise_joint(&oi, &oj, &params).unwrap();
        assert_eq!(joint.n_outcomes(), 4);
        // Anticorrelation identity G_{+−}+G_{−+} = (1−α/2)I + ½σ·a⃗.
        let anti = joint.effect(1).matrix().add(joint.effect(2).matrix());
        let want = CMatrix::identity(2)
            .scale_re(1.0 - params.alpha / 2.0)
            .add(&crate::quantum::sigma_dot(params.a_vec).scale_re(0.5));
        assert!(anti.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn zero_eta_joint_is_uniform() {
        let oi = obs(0.0, [1.0, 0.0, 0.0]);
        let oj = obs(0.0, [0.0, 0.0, 1.0]);
        let params = JointPovmParams { alpha: 1.0, a_vec: [0.0; 3] };
        let joint = construct_pairwise_joint(&oi, &oj, &params).unwrap();
        let quarter = CMatrix::identity(2).scale_re(0.25);
        for k in 0..4 {
            assert!(joint.effect(k).matrix().max_abs_diff(&quarter) < 1e-15);
        }
    }

    #[test]
    fn product_ansatz_for_aligned_axes() {
        let eta = 0.8;
        let axis = [0.0, 0.0, 1.0];
        let oi = obs(eta, axis);
        let oj = obs(eta, axis);
        let params = JointPovmParams { alpha: 1.0 + eta * eta, a_vec: [0.0; 3] };
        let joint = construct_pairwise_joint(&oi, &oj, &params).unwrap();
        let marg = joint.effect(0).matrix().add(joint.effect(1).matrix());
        assert!(marg.max_abs_diff(oi.povm().unwrap().effect(0).matrix()) < 1e-12);
    }

    #[test]
    fn invalid_joint_params_name_the_violated_inequality() {
        let oi = obs(0.9, [1.0, 0.0, 0.0]);
        let oj = obs(0.9, [0.0, 0.0, 1.0]);
        // α too small for the ++/−− cone.
        let err =
            construct_pairwise_joint(&oi, &oj, &JointPovmParams { alpha: 0.1, a_vec: [0.0; 3] })
                .unwrap_err();
        match err {
            Error::InvalidJointParams(msg) => assert!(msg.contains("lower"), "msg = {msg}"),
            other => panic!("expected InvalidJointParams, got {other:?}"),
        }
        let err =
            construct_pairwise_joint(&oi, &oj, &JointPovmParams { alpha: 1.99, a_vec: [0.0; 3] })
                .unwrap_err();
        match err {
            Error::InvalidJointParams(msg) => assert!(msg.contains("upper"), "msg = {msg}"),
            other => panic!("expected InvalidJointParams, got {other:?}"),
        }
    }

    #[test]
    fn joint_marginals_agree_with_born_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let [a1, a2, _] = trine_axes();
        for _ in 0..50 {
            let eta = rng.gen::<f64>() * (3.0f64.sqrt() - 1.0);
            let oi = obs(eta, a1);
            let oj = obs(eta, a2);
            let params = optimal_joint_params(&oi, &oj).unwrap();
            let joint = construct_pairwise_joint(&oi, &oj, &params).unwrap();
            let v = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
            let r = scale3(v, 1.0 / norm(v).max(1e-9) * rng.gen::<f64>());
            let rho = DensityOperator::qubit_from_bloch(r).unwrap();
            let p_joint = born_probability(&rho, joint.effect(0)).unwrap()
                + born_probability(&rho, joint.effect(1)).unwrap();
            let p_single =
                born_probability(&rho, oi.povm().unwrap().effect(0)).unwrap();
            assert!(
                (p_joint - p_single).abs() < 1e-12,
                "marginal statistics must match the single observable"
            );
        }
    }

    fn sharp_z() -> Povm {
        obs(1.0, [0.0, 0.0, 1.0]).povm().unwrap()
    }

    fn sharp_x() -> Povm {
        obs(1.0, [1.0, 0.0, 0.0]).povm().unwrap()
    }

    #[test]
    fn pvm_joint_for_identical_sharp_measurements() {
        let joint = match unique_joint_for_pvms(&[sharp_z(), sharp_z()]).unwrap() {
            PvmJointOutcome::Joint(j) => j,
            PvmJointOutcome::Incompatible => panic!("commuting PVMs must be compatible"),
        };
        assert_eq!(joint.n_outcomes(), 4);
        assert!(joint.is_projective(1e-12));
        // Off-diagonal outcomes (+,−) and (−,+) are null.
        assert!(joint.effect(1).matrix().max_abs() < 1e-12);
        assert!(joint.effect(2).matrix().max_abs() < 1e-12);
        // Marginal reproduces the input.
        let marg = joint.effect(0).matrix().add(joint.effect(1).matrix());
        assert!(marg.max_abs_diff(sharp_z().effect(0).matrix()) < 1e-12);
    }

    #[test]
    fn pvm_joint_detects_noncommuting_pair() {
        assert!(matches!(
            unique_joint_for_pvms(&[sharp_z(), sharp_x()]).unwrap(),
            PvmJointOutcome::Incompatible
        ));
    }

    #[test]
    fn pvm_joint_with_trivial_measurement_pads() {
        let trivial = Povm::binary(Effect::zero(2), Effect::identity(2)).unwrap();
        let joint = match unique_joint_for_pvms(&[sharp_z(), trivial]).unwrap() {
            PvmJointOutcome::Joint(j) => j,
            PvmJointOutcome::Incompatible => panic!("trivial POVM is compatible with anything"),
        };
        // Only (x, −) outcomes can fire.
        assert!(joint.effect(0).matrix().max_abs() < 1e-12);
        assert!(joint
            .effect(1)
            .matrix()
            .max_abs_diff(sharp_z().effect(0).matrix())
            < 1e-12);
    }

    #[test]
    fn pvm_joint_rejects_two_unsharp_inputs() {
        let unsharp_z = obs(0.5, [0.0, 0.0, 1.0]).povm().unwrap();
        let unsharp_z2 = obs(0.6, [0.0, 0.0, 1.0]).povm().unwrap();
        let err = unique_joint_for_pvms(&[unsharp_z, unsharp_z2]).unwrap_err();
        assert!(matches!(err, Error::NotProjective));
    }

    #[test]
    fn pvm_joint_allows_one_unsharp_input() {
        let unsharp_z = obs(0.5, [0.0, 0.0, 1.0]).povm().unwrap();
        let joint = match unique_joint_for_pvms(&[sharp_z(), unsharp_z.clone()]).unwrap() {
            PvmJointOutcome::Joint(j) => j,
            PvmJointOutcome::Incompatible => panic!("commuting pair"),
        };
        let marg = joint.effect(0).matrix().add(joint.effect(1).matrix());
        assert!(marg.max_abs_diff(sharp_z().effect(0).matrix()) < 1e-12);
        let marg2 = joint.effect(0).matrix().add(joint.effect(2).matrix());
        assert!(marg2.max_abs_diff(unsharp_z.effect(0).matrix()) < 1e-12);
    }

    fn specker_hypergraph() -> JmHypergraph {
        JmHypergraph::new(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    fn worked_example_hypergraph() -> JmHypergraph {
        // Pairs all compatible except {0,2}; no compatible triples.
        JmHypergraph::new(4, &[vec![0, 1], vec![1, 3], vec![0, 3], vec![1, 2], vec![2, 3]])
            .unwrap()
    }

    #[test]
    fn minimal_incompatible_sets_for_specker() {
        assert_eq!(find_minimal_incompatible_sets(&specker_hypergraph()), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn minimal_incompatible_sets_for_worked_example() {
        assert_eq!(
            find_minimal_incompatible_sets(&worked_example_hypergraph()),
            vec![vec![0, 1, 3], vec![0, 2], vec![1, 2, 3]]
        );
    }

    #[test]
    fn complete_hypergraph_has_no_minimal_incompatible_sets() {
        let h = JmHypergraph::new(3, &[vec![0, 1, 2]]).unwrap();
        assert!(find_minimal_incompatible_sets(&h).is_empty());
    }

    #[test]
    fn specker_realization_is_two_dimensional_at_inverse_sqrt_two() {
        let r = realize_hypergraph(&specker_hypergraph()).unwrap();
        assert_eq!(r.povms.len(), 3);
        assert_eq!(r.povms[0].dim(), 2);
        let b = effect_to_bloch(r.povms[0].effect(0)).unwrap();
        let eta = norm(b.e);
        assert!(
            (eta - 0.5f64.sqrt()).abs() < 1e-12,
            "Specker block must use η = 1/√2, got {eta}"
        );
    }

    #[test]
    fn worked_example_realizes_on_dimension_six() {
        let r = realize_hypergraph(&worked_example_hypergraph()).unwrap();
        assert_eq!(r.povms[0].dim(), 6, "2⊕2⊕2 blocks");
        assert_eq!(r.blocks.len(), 3);
    }

    #[test]
    fn complete_hypergraph_realizes_trivially() {
        let h = JmHypergraph::new(2, &[vec![0, 1]]).unwrap();
        let r = realize_hypergraph(&h).unwrap();
        assert_eq!(r.povms.len(), 2);
        assert_eq!(r.povms[0].dim(), 1);
        for p in &r.povms {
            for q in &r.povms {
                for e in p.effects() {
                    for f in q.effects() {
                        assert!(e.matrix().commutator_norm(f.matrix()) < 1e-15);
                    }
                }
            }
        }
    }

    /// Recomputes the compatibility pattern of a realization from the POVMs
    /// and block layout alone (extract each block's sharpness from the
    /// effects, then apply the frame criteria).
    pub(super) fn recompute_pattern(r: &HypergraphRealization, n: usize) -> Vec<Vec<usize>> {
        let mut edges: Vec<Vec<usize>> = Vec::new();
        'subset: for mask in 1u32..(1 << n) {
            let subset = mask_to_vec(mask, n);
            let mut offset = 0usize;
            for block in &r.blocks {
                let dim = block.dim;
                // Members of this block within the subset, detected from the
                // POVM itself: a nontrivial part has a nonzero Bloch/traceless
                // component in the block.
                let mut etas: Vec<f64> = Vec::new();
                for &v in &subset {
                    let e_plus = r.povms[v].effect(0).matrix();
                    // Extract the block submatrix.
                    let mut g = CMatrix::zeros(dim);
                    for a in 0..dim {
                        for b in 0..dim {
                            g.set(a, b, e_plus.get(offset + a, offset + b));
                        }
                    }
                    // G = ½(I + ηΓ) ⇒ ηΓ = 2G − I is traceless; a trivial
                    // {0, I} part instead gives −I, which is pure trace. Keep
                    // only the traceless component and read η off its norm.
                    let two_g = g.scale_re(2.0).sub(&CMatrix::identity(dim));
                    let tr_part = two_g.trace().re / dim as f64;
                    let traceless =
                        two_g.sub(&CMatrix::identity(dim).scale_re(tr_part));
                    let eta2 = traceless.trace_product(&traceless).re / dim as f64;
                    if eta2 > 1e-18 {
                        assert!(tr_part.abs() < 1e-12, "member parts are traceless");
                        etas.push(eta2.sqrt());
                    }
                }
                offset += dim;
                if etas.is_empty() {
                    continue;
                }
                let eta = etas[0];
                for e in &etas {
                    assert!((e - eta).abs() < 1e-12, "block must use one sharpness");
                }
                let k = etas.len();
                let frame: Vec<Vec<f64>> = (0..k)
                    .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect();
                let refs: Vec<&[f64]> = frame.iter().map(|a| a.as_slice()).collect();
                let (max, sum) = sign_norm_stats(&refs);
                let sufficient = (1u64 << k) as f64 / sum;
                let necessary = max / k as f64;
                if eta <= sufficient + 1e-12 {
                    continue; // Compatible on this block.
                }
                assert!(
                    eta > necessary + 1e-12,
                    "frame thresholds must coincide for the generator construction"
                );
                continue 'subset; // Incompatible: not an edge.
            }
            edges.push(subset);
        }
        edges
    }

    #[test]
    fn exhaustive_hypergraphs_up_to_four_vertices_round_trip() {
        for n in 1..=4usize {
            // All candidate subsets of size ≥ 2, as masks.
            let candidates: Vec<u32> =
                (1u32..(1 << n)).filter(|m| m.count_ones() >= 2).collect();
            let mut tested = 0usize;
            for choice in 0u32..(1 << candidates.len()) {
                let chosen: Vec<u32> = candidates
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| choice >> i & 1 == 1)
                    .map(|(_, &m)| m)
                    .collect();
                // Downward-closed check: every size-(k−1) submask of a chosen
                // mask with ≥ 2 elements must itself be chosen.
                let ok = chosen.iter().all(|&m| {
                    (0..n).all(|v| {
                        let sub = m & !(1u32 << v);
                        m >> v & 1 == 0 || sub.count_ones() < 2 || chosen.contains(&sub)
                    })
                });
                if !ok {
                    continue;
                }
                tested += 1;
                let edges: Vec<Vec<usize>> =
                    chosen.iter().map(|&m| mask_to_vec(m, n)).collect();
                let h = JmHypergraph::new(n, &edges).unwrap();
                let r = realize_hypergraph(&h).unwrap();
                let recomputed = recompute_pattern(&r, n);
                assert_eq!(
                    recomputed,
                    h.edges(),
                    "compatibility pattern mismatch for n={n}, edges={edges:?}"
                );
            }
            assert!(tested > 0);
        }
    }
}
