//! Quantum-side domain types: Hermitian operators, density operators,
//! effects, POVMs, qubit Bloch parameterizations, and anticommuting
//! generator sets, together with the Born rule and a CHSH evaluator.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, C64};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Element-wise tolerance for the Hermiticity check.
pub const TOL_HERM: f64 = 1e-12;
/// Tolerance on eigenvalue positivity (and the `≤ 1` side for effects).
pub const TOL_PSD: f64 = 1e-9;
/// Element-wise tolerance for POVM completeness.
pub const TOL_COMPLETENESS: f64 = 1e-10;
/// Default cap on operator dimension for generator constructions.
pub const DEFAULT_MAX_DIM: usize = 1024;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The three Pauli matrices (x, y, z order).
pub fn pauli() -> [CMatrix; 3] {
    let mut x = CMatrix::zeros(2);
    x.set(0, 1, c(1.0, 0.0));
    x.set(1, 0, c(1.0, 0.0));
    let mut y = CMatrix::zeros(2);
    y.set(0, 1, c(0.0, -1.0));
    y.set(1, 0, c(0.0, 1.0));
    let mut z = CMatrix::zeros(2);
    z.set(0, 0, c(1.0, 0.0));
    z.set(1, 1, c(-1.0, 0.0));
    [x, y, z]
}

/// `σ · v = v_x σ_x + v_y σ_y + v_z σ_z`.
pub fn sigma_dot(v: [f64; 3]) -> CMatrix {
    let [x, y, z] = pauli();
    x.scale_re(v[0]).add(&y.scale_re(v[1])).add(&z.scale_re(v[2]))
}

/// A Hermitian operator on a finite-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity to `TOL_HERM` (element-wise max norm).
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_hermitian(TOL_HERM) {
            return Err(Error::InvalidInput(
                "matrix is not Hermitian within tolerance".to_string(),
            ));
        }
        Ok(HermitianOperator { mat })
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { mat: CMatrix::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        HermitianOperator { mat: CMatrix::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }
}

/// A unit-trace positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let eigs = op.eigenvalues();
        if let Some(min) = eigs.first() {
            if *min < -TOL_PSD {
                return Err(Error::InvalidInput(format!(
                    "density operator has negative eigenvalue {min}"
                )));
            }
        }
        let tr = op.matrix().trace().re;
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "density operator trace {tr} is not 1"
            )));
        }
        Ok(DensityOperator { op })
    }

    /// Qubit state `½(I + σ·r)`; requires `|r| ≤ 1`.
    pub fn qubit_from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "Bloch vector norm {norm} exceeds 1"
            )));
        }
        let m = CMatrix::identity(2).add(&sigma_dot(r)).scale_re(0.5);
        DensityOperator::new(HermitianOperator::new(m)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim).scale_re(1.0 / dim as f64);
        DensityOperator { op: HermitianOperator { mat: m } }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }
}

/// An operator `E` with `0 ≤ E ≤ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    op: HermitianOperator,
}

impl Effect {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let eigs = op.eigenvalues();
        if let (Some(min), Some(max)) = (eigs.first(), eigs.last()) {
            if *min < -TOL_PSD || *max > 1.0 + TOL_PSD {
                return Err(Error::InvalidInput(format!(
                    "effect eigenvalues [{min}, {max}] leave [0,1]"
                )));
            }
        }
        Ok(Effect { op })
    }

    pub fn identity(dim: usize) -> Self {
        Effect { op: HermitianOperator::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Effect { op: HermitianOperator::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    /// `true` if `E² = E` within `tol` (element-wise).
    pub fn is_projective(&self, tol: f64) -> bool {
        let m = self.matrix();
        m.mul(m).max_abs_diff(m) <= tol
    }
}

/// A positive-operator-valued measure: effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>, labels: Vec<String>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::ShapeMismatch("POVM needs at least one effect".to_string()));
        }
        if labels.len() != effects.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let dim = effects[0].dim();
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: e.dim() });
            }
        }
        let mut sum = CMatrix::zeros(dim);
        for e in &effects {
            sum = sum.add(e.matrix());
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(dim));
        if dev > TOL_COMPLETENESS {
            return Err(Error::InvalidInput(format!(
                "POVM effects sum deviates from identity by {dev}"
            )));
        }
        Ok(Povm { effects, labels })
    }

    /// Convenience constructor with labels "0", "1", ...
    pub fn with_default_labels(effects: Vec<Effect>) -> Result<Self> {
        let labels = (0..effects.len()).map(|i| i.to_string()).collect();
        Povm::new(effects, labels)
    }

    /// Binary POVM with labels "+", "-".
    pub fn binary(plus: Effect, minus: Effect) -> Result<Self> {
        Povm::new(vec![plus, minus], vec!["+".to_string(), "-".to_string()])
    }

    pub fn n_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effect(&self, i: usize) -> &Effect {
        &self.effects[i]
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `true` if every effect is projective within `tol`.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| e.is_projective(tol))
    }

    /// For a binary POVM, the ±1-valued observable `E₀ − E₁`.
    pub fn observable(&self) -> Result<CMatrix> {
        if self.effects.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "observable needs a binary POVM, got {} outcomes",
                self.effects.len()
            )));
        }
        Ok(self.effects[0].matrix().sub(self.effects[1].matrix()))
    }
}

/// Bloch-like parameterization of a qubit effect: `E = ½(e0·I + e·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochEffect {
    pub e0: f64,
    pub e: [f64; 3],
}

impl BlochEffect {
    /// Validates the two-cone condition `0 ≤ e0 ≤ 2`, `|e| ≤ e0`, `|e| ≤ 2−e0`.
    pub fn new(e0: f64, e: [f64; 3]) -> Result<Self> {
        let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        let tol = 1e-12;
        if e0 < -tol || e0 > 2.0 + tol || n > e0 + tol || n > 2.0 - e0 + tol {
            return Err(Error::InvalidBloch);
        }
        Ok(BlochEffect { e0, e })
    }
}

/// Converts a valid Bloch-like vector into the qubit effect `½(e0·I + e·σ)`.
pub fn bloch_to_effect(b: &BlochEffect) -> Result<Effect> {
    let m = CMatrix::identity(2).scale_re(b.e0).add(&sigma_dot(b.e)).scale_re(0.5);
    Effect::new(HermitianOperator::new(m)?)
}

/// Reads the Bloch-like components off a qubit effect.
pub fn effect_to_bloch(e: &Effect) -> Result<BlochEffect> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: e.dim() });
    }
    let m = e.matrix();
    let e0 = m.trace().re;
    let [sx, sy, sz] = pauli();
    let ev = [
        m.trace_product(&sx).re,
        m.trace_product(&sy).re,
        m.trace_product(&sz).re,
    ];
    BlochEffect::new(e0, ev)
}

/// A set of mutually anticommuting Hermitian generators
/// (`Γ_j Γ_k + Γ_k Γ_j = 2δ_jk·I`).
#[derive(Debug, Clone)]
pub struct CliffordSet {
    generators: Vec<HermitianOperator>,
}

impl CliffordSet {
    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn generator(&self, k: usize) -> &HermitianOperator {
        &self.generators[k]
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    /// Checks the defining relations: anticommutation within 1e-10,
    /// tracelessness (for two or more generators), and
    /// `(Σ x_k Γ_k)² = (Σ x_k²)·I` within 1e-9 for a few fixed pseudo-random
    /// coefficient vectors.
    pub fn validate(&self) -> Result<()> {
        let n = self.generators.len();
        let dim = self.dim();
        let id = CMatrix::identity(dim);
        for j in 0..n {
            for k in j..n {
                let gj = self.generators[j].matrix();
                let gk = self.generators[k].matrix();
                let anti = gj.mul(gk).add(&gk.mul(gj));
                let target = if j == k { id.scale_re(2.0) } else { CMatrix::zeros(dim) };
                let dev = anti.max_abs_diff(&target);
                if dev > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "generators {j},{k} violate anticommutation by {dev}"
                    )));
                }
            }
        }
        if n >= 2 {
            for (k, g) in self.generators.iter().enumerate() {
                let tr = g.matrix().trace().norm();
                if tr > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "generator {k} has nonzero trace {tr}"
                    )));
                }
            }
        }
        // Deterministic pseudo-random coefficients (LCG) for the square law.
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..3 {
            let xs: Vec<f64> = (0..n).map(|_| next()).collect();
            let mut acc = CMatrix::zeros(dim);
            for (x, g) in xs.iter().zip(&self.generators) {
                acc = acc.add(&g.matrix().scale_re(*x));
            }
            let sq = acc.mul(&acc);
            let norm2: f64 = xs.iter().map(|x| x * x).sum();
            let dev = sq.max_abs_diff(&id.scale_re(norm2));
            if dev > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "square law violated by {dev}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds `n` mutually anticommuting Hermitian generators on dimension
/// `2^⌈(n−1)/2⌉` by the doubling recursion: replace each `Γ_i` with
/// `Γ_i ⊗ σ_z`, then append `I ⊗ σ_x` and `I ⊗ σ_y`. A single iteration from
/// the scalar seed yields the Pauli matrices.
pub fn clifford_generators(n: usize) -> Result<CliffordSet> {
    clifford_generators_capped(n, DEFAULT_MAX_DIM)
}

/// As [`clifford_generators`], with an explicit cap on the operator dimension.
pub fn clifford_generators_capped(n: usize, max_dim: usize) -> Result<CliffordSet> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one generator".to_string()));
    }
    let [sx, sy, sz] = pauli();
    let mut gens: Vec<CMatrix> = vec![CMatrix::identity(1)];
    while gens.len() < n {
        let d = gens[0].dim();
        if d * 2 > max_dim {
            return Err(Error::ResourceLimit(format!(
                "generator dimension {} exceeds cap {max_dim}",
                d * 2
            )));
        }
        let id = CMatrix::identity(d);
        let mut next: Vec<CMatrix> = gens.iter().map(|g| g.kron(&sz)).collect();
        next.push(id.kron(&sx));
        next.push(id.kron(&sy));
        gens = next;
    }
    gens.truncate(n);
    let generators = gens
        .into_iter()
        .map(HermitianOperator::new)
        .collect::<Result<Vec<_>>>()?;
    let set = CliffordSet { generators };
    set.validate()?;
    Ok(set)
}

/// Born rule `tr(Eρ)`, clamped to `[0,1]` when within `TOL_PSD` of the
/// interval and rejected otherwise.
pub fn born_probability(state: &DensityOperator, effect: &Effect) -> Result<f64> {
    if state.dim() != effect.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: effect.dim() });
    }
    let p = effect.matrix().trace_product(state.matrix()).re;
    if p < -TOL_PSD || p > 1.0 + TOL_PSD {
        return Err(Error::NumericalRangeError { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// CHSH expectation `⟨A₀⊗B₀ + A₀⊗B₁ + A₁⊗B₀ − A₁⊗B₁⟩` for binary POVMs on a
/// bipartite state of dimension `dim(A)·dim(B)`.
pub fn chsh_value(
    state: &DensityOperator,
    alice: (&Povm, &Povm),
    bob: (&Povm, &Povm),
) -> Result<f64> {
    let a0 = alice.0.observable()?;
    let a1 = alice.1.observable()?;
    let b0 = bob.0.observable()?;
    let b1 = bob.1.observable()?;
    if a0.dim() != a1.dim() || b0.dim() != b1.dim() {
        return Err(Error::ShapeMismatch("setting dimensions differ".to_string()));
    }
    let expected = a0.dim() * b0.dim();
    if state.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: state.dim() });
    }
    let op = a0.kron(&b0.add(&b1)).add(&a1.kron(&b0.sub(&b1)));
    Ok(op.trace_product(state.matrix()).re)
}

/// Block-diagonal direct sum of POVMs with equal outcome counts: effect `j`
/// of the result is `⊕_k effects_j` of the inputs.
pub fn direct_sum(povms: &[Povm]) -> Result<Povm> {
    let first = povms
        .first()
        .ok_or_else(|| Error::ShapeMismatch("direct_sum of no POVMs".to_string()))?;
    let k = first.n_outcomes();
    for p in povms {
        if p.n_outcomes() != k {
            return Err(Error::ShapeMismatch(format!(
                "outcome counts differ: {} vs {k}",
                p.n_outcomes()
            )));
        }
    }
    let mut effects = Vec::with_capacity(k);
    for j in 0..k {
        let mut block = povms[0].effect(j).matrix().clone();
        for p in &povms[1..] {
            block = block.direct_sum(p.effect(j).matrix());
        }
        effects.push(Effect::new(HermitianOperator::new(block)?)?);
    }
    Povm::new(effects, first.labels().to_vec())
}

/// Coarse-grains a POVM by summing effects inside each group of the given
/// outcome partition.
pub fn coarse_grain(p: &Povm, grouping: &[Vec<usize>]) -> Result<Povm> {
    let n = p.n_outcomes();
    let mut seen = vec![false; n];
    for g in grouping {
        for &i in g {
            if i >= n || seen[i] {
                return Err(Error::ShapeMismatch(
                    "grouping is not a partition of the outcomes".to_string(),
                ));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::ShapeMismatch(
            "grouping does not cover all outcomes".to_string(),
        ));
    }
    let mut effects = Vec::with_capacity(grouping.len());
    let mut labels = Vec::with_capacity(grouping.len());
    for g in grouping {
        let mut m = CMatrix::zeros(p.dim());
        let mut parts: Vec<&str> = Vec::new();
        for &i in g {
            m = m.add(p.effect(i).matrix());
            parts.push(p.labels()[i].as_str());
        }
        effects.push(Effect::new(HermitianOperator::new(m)?)?);
        labels.push(parts.join("+"));
    }
    Povm::new(effects, labels)
}
