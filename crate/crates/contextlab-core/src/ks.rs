//! Event hypergraphs for Kochen-Specker-style scenarios, their assignment
//! polytopes, colourability, vertex classification, and the operational
//! average-predictability witness with its depolarizing-noise threshold.
//!
//! Measurement-event classes are indexed `0..n_classes`; every measurement is
//! an edge listing the classes whose events it resolves, and a noncontextual
//! assignment gives each class a weight in `[0, 1]` summing to `1` over every
//! edge.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::polytope::{enumerate_vertices, rat, rat_int, HPolytope, Rat, VertexSet};
use crate::quantum::DensityOperator;

/// Largest class count accepted by the exhaustive colourability search.
pub const COLOURABILITY_CLASS_CAP: usize = 40;

/// A hypergraph of measurement-event classes: vertices are equivalence
/// classes of outcomes (identified across measurement contexts) and each
/// edge lists the classes resolved by one measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventHypergraph {
    n_classes: usize,
    measurements: Vec<Vec<usize>>,
}

impl EventHypergraph {
    /// Builds an event hypergraph, checking that every class index is in
    /// range, that no measurement lists a class twice, that no measurement is
    /// empty, and that every class occurs in at least one measurement.
    pub fn new(n_classes: usize, measurements: Vec<Vec<usize>>) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidInput("hypergraph needs at least one class".to_string()));
        }
        let mut covered = vec![false; n_classes];
        for (i, edge) in measurements.iter().enumerate() {
            if edge.is_empty() {
                return Err(Error::InvalidInput(format!("measurement {i} has no outcomes")));
            }
            let mut seen = vec![false; n_classes];
            for &k in edge {
                if k >= n_classes {
                    return Err(Error::InvalidInput(format!(
                        "measurement {i} references class {k} but only {n_classes} classes exist"
                    )));
                }
                if seen[k] {
                    return Err(Error::InvalidInput(format!(
                        "measurement {i} lists class {k} twice"
                    )));
                }
                seen[k] = true;
                covered[k] = true;
            }
        }
        if let Some(k) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidInput(format!(
                "class {k} does not occur in any measurement"
            )));
        }
        Ok(Self { n_classes, measurements })
    }

    /// Number of measurement-event classes.
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// The measurements, each as the list of classes it resolves.
    pub fn measurements(&self) -> &[Vec<usize>] {
        &self.measurements
    }

    /// The 18-class, 9-measurement structure in which every class occurs in
    /// exactly two measurements of four outcomes each.  Classes are numbered
    /// `0..18`.
    pub fn cega18() -> Self {
        Self::new(
            18,
            vec![
                vec![0, 1, 2, 3],
                vec![3, 4, 5, 6],
                vec![6, 7, 8, 9],
                vec![9, 10, 11, 12],
                vec![12, 13, 14, 15],
                vec![15, 16, 17, 0],
                vec![17, 1, 8, 10],
                vec![2, 4, 11, 13],
                vec![5, 7, 14, 16],
            ],
        )
        .expect("built-in structure is well-formed")
    }
}

/// A noncontextual assignment: one weight per class, each in `[0, 1]`,
/// summing to exactly `1` over every measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcAssignment {
    weights: Vec<Rat>,
}

impl NcAssignment {
    /// Validates the weights against the hypergraph.
    pub fn new(hypergraph: &EventHypergraph, weights: Vec<Rat>) -> Result<Self> {
        if weights.len() != hypergraph.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: hypergraph.n_classes(),
                got: weights.len(),
            });
        }
        let zero = Rat::zero();
        let one = Rat::one();
        for w in &weights {
            if *w < zero || *w > one {
                return Err(Error::InvalidInput("assignment weight outside [0, 1]".to_string()));
            }
        }
        for (i, edge) in hypergraph.measurements().iter().enumerate() {
            let sum: Rat = edge.iter().map(|&k| weights[k].clone()).sum();
            if sum != one {
                return Err(Error::InvalidInput(format!(
                    "weights over measurement {i} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { weights })
    }

    /// The per-class weights.
    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }
}

/// The H-description of the noncontextual assignment polytope: `Z w = 1`
/// with one row per measurement (entry `1` iff the class is in the edge),
/// plus the box `0 <= w <= 1`.
pub fn assignment_polytope(hypergraph: &EventHypergraph) -> HPolytope {
    let d = hypergraph.n_classes();
    let mut rows = Vec::with_capacity(hypergraph.measurements().len());
    for edge in hypergraph.measurements() {
        let mut row = vec![Rat::zero(); d];
        for &k in edge {
            row[k] = Rat::one();
        }
        rows.push(row);
    }
    let rhs = vec![Rat::one(); rows.len()];
    HPolytope::new(d, rows, rhs).expect("well-formed hypergraph yields well-formed system")
}

/// Enumerates every vertex of the noncontextual assignment polytope exactly.
pub fn assignment_vertices(hypergraph: &EventHypergraph) -> Result<VertexSet> {
    enumerate_vertices(&assignment_polytope(hypergraph))
}

/// Exhaustive backtracking search for a `{0, 1}` assignment with exactly one
/// `1` per measurement.  Returns the colouring when one exists.  Structures
/// with more than [`COLOURABILITY_CLASS_CAP`] classes are rejected with
/// [`Error::ResourceLimit`] rather than risking an unbounded search.
pub fn ks_colourable(hypergraph: &EventHypergraph) -> Result<Option<Vec<u8>>> {
    if hypergraph.n_classes() > COLOURABILITY_CLASS_CAP {
        return Err(Error::ResourceLimit(format!(
            "colourability search supports at most {COLOURABILITY_CLASS_CAP} classes, got {}",
            hypergraph.n_classes()
        )));
    }
    // assignment[k]: 0 = forced zero, 1 = forced one, 2 = undecided.
    let mut assignment = vec![2u8; hypergraph.n_classes()];
    if colour_rec(hypergraph, 0, &mut assignment) {
        Ok(Some(assignment))
    } else {
        Ok(None)
    }
}

fn colour_rec(h: &EventHypergraph, m: usize, assignment: &mut [u8]) -> bool {
    if m == h.measurements().len() {
        // Undecided classes occur only in already-satisfied edges; fix them to 0.
        for a in assignment.iter_mut() {
            if *a == 2 {
                *a = 0;
            }
        }
        return true;
    }
    let edge = &h.measurements()[m];
    if let Some(&k) = edge.iter().find(|&&k| assignment[k] == 1) {
        // Some class is already the designated 1; the rest must be 0.
        let mut touched = Vec::new();
        let mut ok = true;
        for &j in edge {
            if j == k {
                continue;
            }
            match assignment[j] {
                1 => {
                    ok = false;
                    break;
                }
                2 => {
                    assignment[j] = 0;
                    touched.push(j);
                }
                _ => {}
            }
        }
        if ok && colour_rec(h, m + 1, assignment) {
            return true;
        }
        for j in touched {
            assignment[j] = 2;
        }
        return false;
    }
    // No class fixed to 1 yet: try each undecided class as the 1.
    for idx in 0..edge.len() {
        let k = edge[idx];
        if assignment[k] != 2 {
            continue;
        }
        let mut touched = vec![k];
        assignment[k] = 1;
        let mut ok = true;
        for &j in edge {
            if j == k {
                continue;
            }
            match assignment[j] {
                1 => {
                    ok = false;
                    break;
                }
                2 => {
                    assignment[j] = 0;
                    touched.push(j);
                }
                _ => {}
            }
        }
        if ok && colour_rec(h, m + 1, assignment) {
            return true;
        }
        for j in touched {
            assignment[j] = 2;
        }
    }
    false
}

/// Average predictability of one assignment: the mean over measurements of
/// the largest weight in the edge.
pub fn avg_predictability(hypergraph: &EventHypergraph, weights: &[Rat]) -> Result<Rat> {
    if weights.len() != hypergraph.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: hypergraph.n_classes(),
            got: weights.len(),
        });
    }
    let m = hypergraph.measurements().len();
    let mut total = Rat::zero();
    for edge in hypergraph.measurements() {
        let best = edge
            .iter()
            .map(|&k| weights[k].clone())
            .max()
            .expect("edges are non-empty");
        total += best;
    }
    Ok(total / rat_int(m as i64))
}

/// Maximizes average predictability over the assignment polytope exactly.
/// Returns the optimum and a vertex attaining it (the convex maximum of a
/// convex function is attained at a vertex; ties break toward the
/// lexicographically smallest maximizer).
pub fn max_avg_predictability(hypergraph: &EventHypergraph) -> Result<(Rat, NcAssignment)> {
    let vertices = assignment_vertices(hypergraph)?;
    if vertices.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let mut best_val: Option<Rat> = None;
    let mut best_w: Option<&[Rat]> = None;
    for v in vertices.iter() {
        let a = avg_predictability(hypergraph, v)?;
        let better = match &best_val {
            None => true,
            Some(cur) => a > *cur,
        };
        if better {
            best_val = Some(a);
            best_w = Some(v);
        }
    }
    let witness = NcAssignment::new(hypergraph, best_w.expect("non-empty").to_vec())?;
    Ok((best_val.expect("non-empty"), witness))
}

/// Classification of one polytope vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexClass {
    /// Average predictability of the vertex (exact).
    pub avg_predictability: Rat,
    /// 1-based rank of this vertex's average among the distinct averages
    /// present in the set, in decreasing order (so type 1 is the largest).
    pub type_id: usize,
    /// For indeterministic vertices: a shortest odd cycle of classes all
    /// assigned 1/2, adjacent classes sharing a measurement; canonicalized to
    /// start at its smallest class with the smaller neighbour second.  Empty
    /// for deterministic vertices.
    pub witness_cycle: Vec<usize>,
}

/// Classifies every vertex of a vertex set by average predictability and, for
/// indeterministic vertices, exhibits the odd half-weight cycle certifying
/// that the vertex cannot be decomposed into deterministic assignments.
///
/// Fails with [`Error::ClassificationFailure`] if any vertex has a fractional
/// weight other than 1/2, or if an indeterministic vertex's half-weight
/// classes contain no odd cycle.
pub fn classify_vertices(
    hypergraph: &EventHypergraph,
    vertices: &VertexSet,
) -> Result<Vec<VertexClass>> {
    let half = rat(1, 2);
    let zero = Rat::zero();
    let one = Rat::one();

    let mut averages = Vec::with_capacity(vertices.len());
    for v in vertices.iter() {
        averages.push(avg_predictability(hypergraph, v)?);
    }
    let mut distinct = averages.clone();
    distinct.sort();
    distinct.dedup();
    distinct.reverse(); // decreasing: largest average is type 1

    let mut out = Vec::with_capacity(vertices.len());
    for (v, avg) in vertices.iter().zip(averages.iter()) {
        let type_id = 1 + distinct
            .iter()
            .position(|a| a == avg)
            .expect("average is in the distinct list");
        let mut halves = Vec::new();
        for (k, w) in v.iter().enumerate() {
            if *w == half {
                halves.push(k);
            } else if *w != zero && *w != one {
                return Err(Error::ClassificationFailure(format!(
                    "class {k} carries fractional weight {w}, expected 0, 1/2 or 1"
                )));
            }
        }
        let witness_cycle = if halves.is_empty() {
            Vec::new()
        } else {
            match shortest_odd_cycle(hypergraph, &halves) {
                Some(c) => c,
                None => {
                    return Err(Error::ClassificationFailure(
                        "indeterministic vertex has no odd cycle of half-weight classes"
                            .to_string(),
                    ))
                }
            }
        };
        out.push(VertexClass {
            avg_predictability: avg.clone(),
            type_id,
            witness_cycle,
        });
    }
    Ok(out)
}

/// Shortest odd cycle in the co-measurement graph induced on `halves`
/// (classes adjacent iff some measurement contains both).  Returns the cycle
/// as a class list, canonicalized; `None` if the induced graph is bipartite.
fn shortest_odd_cycle(hypergraph: &EventHypergraph, halves: &[usize]) -> Option<Vec<usize>> {
    let n = halves.len();
    let index_of = |class: usize| halves.iter().position(|&h| h == class);
    let mut adj = vec![Vec::new(); n];
    for edge in hypergraph.measurements() {
        let present: Vec<usize> = edge.iter().filter_map(|&k| index_of(k)).collect();
        for (ai, &a) in present.iter().enumerate() {
            for &b in &present[ai + 1..] {
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
    }
    // Shortest odd closed walk, via BFS on the parity double cover.  A
    // globally minimal odd closed walk is a simple cycle: a repeated vertex
    // would split it into two shorter closed walks, one of them still odd.
    // First pass finds the minimal length and its smallest start; second pass
    // reconstructs the walk only for that start, so the reconstruction is
    // guaranteed simple.
    const UNSEEN: usize = usize::MAX;
    let bfs = |s: usize| -> (Vec<[usize; 2]>, Vec<[usize; 2]>) {
        let mut dist = vec![[UNSEEN; 2]; n];
        let mut parent = vec![[UNSEEN; 2]; n];
        dist[s][0] = 0;
        let mut queue = alloc::collections::VecDeque::new();
        queue.push_back((s, 0usize));
        while let Some((v, p)) = queue.pop_front() {
            let np = 1 - p;
            for &w in &adj[v] {
                if dist[w][np] == UNSEEN {
                    dist[w][np] = dist[v][p] + 1;
                    parent[w][np] = v * 2 + p;
                    queue.push_back((w, np));
                }
            }
        }
        (dist, parent)
    };
    let mut best_len = UNSEEN;
    let mut best_start = UNSEEN;
    for s in 0..n {
        let (dist, _) = bfs(s);
        if dist[s][1] < best_len {
            best_len = dist[s][1];
            best_start = s;
        }
    }
    if best_len == UNSEEN {
        return None;
    }
    let s = best_start;
    let (_, parent) = bfs(s);
    let mut walk = Vec::with_capacity(best_len + 1);
    let (mut v, mut p) = (s, 1usize);
    walk.push(halves[v]);
    while !(v == s && p == 0) {
        let enc = parent[v][p];
        v = enc / 2;
        p = enc % 2;
        walk.push(halves[v]);
    }
    walk.pop(); // drop the repeated start
    debug_assert!(walk.len() % 2 == 1);
    let mut sorted = walk.clone();
    sorted.sort_unstable();
    sorted.dedup();
    debug_assert_eq!(sorted.len(), walk.len(), "minimal odd walk must be simple");
    Some(canonical_cycle(&walk))
}

/// Rotates/reflects a cycle to start at its smallest class, with the smaller
/// of the two neighbours in second position.
fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    let n = cycle.len();
    let (start, _) = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &c)| c)
        .expect("cycle is non-empty");
    let forward: Vec<usize> = (0..n).map(|i| cycle[(start + i) % n]).collect();
    let backward: Vec<usize> = (0..n).map(|i| cycle[(start + n - i) % n]).collect();
    if forward[1..] <= backward[1..] {
        forward
    } else {
        backward
    }
}

/// Whether a cycle of pairwise-orthogonality constraints of the given length
/// obstructs projective (sharp) realization of half-half statistics.
///
/// Odd cycles do (an orthogonality cycle of odd length cannot carry uniform
/// half weights from any state with sharp effects); even cycles do not, and
/// this is witnessed constructively by alternating rank-one projectors on a
/// qubit with the maximally mixed state.  For odd input the even witness is
/// also built (at `cycle_length + 1`) and verified, as a self-check of the
/// construction.
pub fn odd_cycle_projective_obstruction(cycle_length: usize) -> Result<bool> {
    if cycle_length < 3 {
        return Err(Error::InvalidInput(format!(
            "cycle length must be at least 3, got {cycle_length}"
        )));
    }
    let odd = cycle_length % 2 == 1;
    let even_len = if odd { cycle_length + 1 } else { cycle_length };
    verify_even_cycle_counterexample(even_len)?;
    Ok(odd)
}

/// Builds the alternating projector cycle of even length and checks pairwise
/// orthogonality of neighbours and uniform 1/2 outcome weights on the
/// maximally mixed qubit state.
fn verify_even_cycle_counterexample(even_len: usize) -> Result<()> {
    debug_assert!(even_len % 2 == 0);
    let p0 = CMatrix::from_fn(2, |r, c| {
        if r == 0 && c == 0 {
            crate::linalg::C64::new(1.0, 0.0)
        } else {
            crate::linalg::C64::new(0.0, 0.0)
        }
    });
    let p1 = CMatrix::from_fn(2, |r, c| {
        if r == 1 && c == 1 {
            crate::linalg::C64::new(1.0, 0.0)
        } else {
            crate::linalg::C64::new(0.0, 0.0)
        }
    });
    let projectors: Vec<&CMatrix> = (0..even_len)
        .map(|i| if i % 2 == 0 { &p0 } else { &p1 })
        .collect();
    for i in 0..even_len {
        let j = (i + 1) % even_len;
        let prod = projectors[i].mul(projectors[j]);
        if prod.max_abs() > 1e-12 {
            return Err(Error::EquivalenceCheckFailed(format!(
                "cycle neighbours {i}, {j} are not orthogonal"
            )));
        }
    }
    let rho = DensityOperator::maximally_mixed(2);
    for (i, p) in projectors.iter().enumerate() {
        let w = rho.matrix().trace_product(p).re;
        if (w - 0.5).abs() > 1e-12 {
            return Err(Error::EquivalenceCheckFailed(format!(
                "projector {i} has weight {w}, expected 1/2"
            )));
        }
    }
    Ok(())
}

/// Operational average predictability from measured statistics.
///
/// `stats[i][k][l]` is the probability of outcome class `l` of measurement
/// `i` on the preparation matched to outcome `k` of that measurement; the
/// witness averages the diagonal `stats[i][k][k]` over all `(i, k)`.
/// Each row must be a probability distribution to within `1e-9`.
pub fn evaluate_a(hypergraph: &EventHypergraph, stats: &[Vec<Vec<f64>>]) -> Result<f64> {
    let m = hypergraph.measurements().len();
    if stats.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "expected statistics for {m} measurements, got {}",
            stats.len()
        )));
    }
    let mut total = 0.0;
    let mut terms = 0usize;
    for (i, edge) in hypergraph.measurements().iter().enumerate() {
        let n_out = edge.len();
        if stats[i].len() != n_out {
            return Err(Error::ShapeMismatch(format!(
                "measurement {i} has {n_out} outcomes but {} matched preparations",
                stats[i].len()
            )));
        }
        for (k, row) in stats[i].iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::ShapeMismatch(format!(
                    "measurement {i}, preparation {k}: expected {n_out} outcome probabilities, got {}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized { sum });
            }
            total += row[k];
            terms += 1;
        }
    }
    Ok(total / terms as f64)
}

/// Average predictability of the ideal quantum realization of the 18-class
/// structure under depolarizing noise: states survive with probability `p1`,
/// effects with probability `p2`; the fully depolarized parts contribute the
/// uniform 1/4.
pub fn depolarizing_a(p1: f64, p2: f64) -> Result<f64> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "{name} must lie in [0, 1], got {p}"
            )));
        }
    }
    Ok(0.25 + 0.75 * p1 * p2)
}

/// Exact-rational version of [`depolarizing_a`].
pub fn depolarizing_a_exact(p1: &Rat, p2: &Rat) -> Result<Rat> {
    let zero = Rat::zero();
    let one = Rat::one();
    for p in [p1, p2] {
        if *p < zero || *p > one {
            return Err(Error::InvalidInput("noise parameter outside [0, 1]".to_string()));
        }
    }
    Ok(rat(1, 4) + rat(3, 4) * p1 * p2)
}

/// The product `p1 * p2` at which the depolarized average predictability
/// crosses the noncontextual bound 5/6: exactly 7/9.
pub fn noise_threshold() -> Rat {
    rat(7, 9)
}

/// The state-independent witness: the sum over all 9 measurements and 4
/// outcomes of the probability of the event's class, which equals 9 when
/// every measurement's distribution is normalized.  Each of the 9 rows of
/// `stats` must be a 4-outcome distribution (1e-9 tolerance).
pub fn cabello_alpha_prime(stats: &[Vec<f64>]) -> Result<f64> {
    if stats.len() != 9 {
        return Err(Error::ShapeMismatch(format!(
            "expected statistics for 9 measurements, got {}",
            stats.len()
        )));
    }
    let mut total = 0.0;
    for (i, row) in stats.iter().enumerate() {
        if row.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "measurement {i}: expected 4 outcome probabilities, got {}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        total += sum;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::rat_to_f64;
    use alloc::collections::BTreeSet;
    use alloc::string::String;

    fn parse_fixture() -> Vec<(usize, Vec<Rat>)> {
        let text = include_str!("testdata/assignment_vertices_by_type.txt");
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t, body) = line.split_once(':').expect("type:weights format");
            let type_id: usize = t.parse().expect("type id");
            let weights: Vec<Rat> = body
                .chars()
                .map(|c| match c {
                    '0' => Rat::zero(),
                    'h' => rat(1, 2),
                    '1' => Rat::one(),
                    other => panic!("unexpected symbol {other:?}"),
                })
                .collect();
            assert_eq!(weights.len(), 18);
            rows.push((type_id, weights));
        }
        assert_eq!(rows.len(), 146);
        rows
    }

    #[test]
    fn cega18_shape() {
        let h = EventHypergraph::cega18();
        assert_eq!(h.n_classes(), 18);
        assert_eq!(h.measurements().len(), 9);
        let mut occurrences = vec![0usize; 18];
        for edge in h.measurements() {
            assert_eq!(edge.len(), 4);
            for &k in edge {
                occurrences[k] += 1;
            }
        }
        assert!(occurrences.iter().all(|&c| c == 2));
    }

    #[test]
    fn hypergraph_validation() {
        assert!(EventHypergraph::new(2, vec![vec![0, 2]]).is_err()); // out of range
        assert!(EventHypergraph::new(2, vec![vec![0, 0]]).is_err()); // duplicate
        assert!(EventHypergraph::new(3, vec![vec![0, 1]]).is_err()); // class 2 uncovered
        assert!(EventHypergraph::new(2, vec![vec![0, 1], vec![]]).is_err()); // empty edge
        assert!(EventHypergraph::new(2, vec![vec![0, 1]]).is_ok());
    }

    #[test]
    fn cega18_has_146_vertices_matching_reference() {
        let h = EventHypergraph::cega18();
        let vs = assignment_vertices(&h).unwrap();
        assert_eq!(vs.len(), 146);

        let fixture = parse_fixture();
        let expected: BTreeSet<Vec<Rat>> = fixture.iter().map(|(_, w)| w.clone()).collect();
        let got: BTreeSet<Vec<Rat>> = vs.iter().cloned().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn cega18_classification_histogram_and_witness_cycle() {
        let h = EventHypergraph::cega18();
        let vs = assignment_vertices(&h).unwrap();
        let classes = classify_vertices(&h, &vs).unwrap();

        let mut histogram = [0usize; 4];
        for c in &classes {
            assert!((1..=4).contains(&c.type_id));
            histogram[c.type_id - 1] += 1;
        }
        assert_eq!(histogram, [24, 36, 36, 50]);

        // The distinct averages, by type.
        for c in &classes {
            let expected = match c.type_id {
                1 => rat(5, 6),
                2 => rat(13, 18),
                3 => rat(11, 18),
                _ => rat(1, 2),
            };
            assert_eq!(c.avg_predictability, expected);
        }

        // Fixture agreement of per-vertex types.
        let fixture = parse_fixture();
        let by_weights: alloc::collections::BTreeMap<Vec<Rat>, usize> = fixture
            .iter()
            .map(|(t, w)| (w.clone(), *t))
            .collect();
        for (v, c) in vs.iter().zip(classes.iter()) {
            assert_eq!(by_weights[v], c.type_id);
        }

        // Deterministic vertices carry no cycle; indeterministic ones carry
        // an odd cycle of half-weight classes with co-measurement adjacency.
        let half = rat(1, 2);
        for (v, c) in vs.iter().zip(classes.iter()) {
            let n_half = v.iter().filter(|w| **w == half).count();
            if n_half == 0 {
                assert!(c.witness_cycle.is_empty());
            } else {
                assert!(c.witness_cycle.len() % 2 == 1 && c.witness_cycle.len() >= 3);
                for &k in &c.witness_cycle {
                    assert_eq!(v[k], half);
                }
                for i in 0..c.witness_cycle.len() {
                    let a = c.witness_cycle[i];
                    let b = c.witness_cycle[(i + 1) % c.witness_cycle.len()];
                    assert!(h
                        .measurements()
                        .iter()
                        .any(|edge| edge.contains(&a) && edge.contains(&b)));
                }
            }
        }

        // The optimal vertex (halves on the triangle of classes 8, 9, 10).
        let witness: Vec<Rat> = [1, 0, 0, 0, 1, 0, 0, 0, 9, 9, 9, 0, 0, 0, 1, 0, 0, 0]
            .iter()
            .map(|&x| if x == 9 { rat(1, 2) } else { rat_int(x) })
            .collect();
        let idx = vs.iter().position(|v| *v == witness).expect("optimal vertex present");
        assert_eq!(classes[idx].type_id, 1);
        assert_eq!(classes[idx].witness_cycle, vec![8, 9, 10]);

        // A type-1 vertex whose half classes are the triangle {0, 1, 17}
        // (classes 0 and 1 share measurement 0, classes 17 and 0 measurement
        // 5, classes 1 and 17 measurement 6); the deterministic part puts 1
        // on classes 4, 7 and 12.
        let tri: Vec<Rat> = [9, 9, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 9]
            .iter()
            .map(|&x| if x == 9 { rat(1, 2) } else { rat_int(x) })
            .collect();
        let i = vs.iter().position(|v| *v == tri).expect("triangle vertex present");
        assert_eq!(classes[i].type_id, 1);
        assert_eq!(classes[i].witness_cycle, vec![0, 1, 17]);
    }

    #[test]
    fn cega18_max_avg_predictability_is_five_sixths() {
        let h = EventHypergraph::cega18();
        let (bound, witness) = max_avg_predictability(&h).unwrap();
        assert_eq!(bound, rat(5, 6));
        assert_eq!(avg_predictability(&h, witness.weights()).unwrap(), rat(5, 6));

        // The specific witness: deterministic 1s on classes 0, 4, 14 and
        // halves on 8, 10, 11.
        let w: Vec<Rat> = [
            1, 0, 0, 0, 1, 0, 0, 0, 9, 9, 9, 0, 0, 0, 1, 0, 0, 0,
        ]
        .iter()
        .map(|&x| if x == 9 { rat(1, 2) } else { rat_int(x) })
        .collect();
        let vs = assignment_vertices(&h).unwrap();
        assert!(vs.contains(&w), "documented witness vertex is a vertex");
        assert_eq!(avg_predictability(&h, &w).unwrap(), rat(5, 6));
    }

    #[test]
    fn colourability_examples() {
        // The 18-class structure admits no {0,1} assignment.
        let h = EventHypergraph::cega18();
        assert!(ks_colourable(&h).unwrap().is_none());

        // A single 4-outcome measurement is trivially colourable.
        let single = EventHypergraph::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        let col = ks_colourable(&single).unwrap().unwrap();
        assert_eq!(col.iter().map(|&c| c as usize).sum::<usize>(), 1);

        // Shared-class cycles: even cycles alternate, odd cycles cannot.
        for n in 3..=8usize {
            let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
            let cyc = EventHypergraph::new(n, edges).unwrap();
            let col = ks_colourable(&cyc).unwrap();
            assert_eq!(col.is_some(), n % 2 == 0, "cycle length {n}");
            if let Some(c) = col {
                for i in 0..n {
                    assert_eq!(c[i] + c[(i + 1) % n], 1);
                }
            }
        }
    }

    #[test]
    fn colourable_iff_deterministic_vertex_exists() {
        // Cross-check on a corpus of small structures: a {0,1} colouring
        // exists iff the assignment polytope has an all-integer vertex.
        let corpus = vec![
            EventHypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]).unwrap(),
            EventHypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap(),
            EventHypergraph::new(5, vec![
                vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 0],
            ])
            .unwrap(),
            EventHypergraph::new(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]]).unwrap(),
            EventHypergraph::new(4, vec![vec![0, 1, 2, 3]]).unwrap(),
            EventHypergraph::new(7, vec![
                vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![6, 0, 3],
            ])
            .unwrap(),
        ];
        for h in &corpus {
            let colourable = ks_colourable(h).unwrap().is_some();
            let vs = assignment_vertices(h).unwrap();
            let zero = Rat::zero();
            let one = Rat::one();
            let has_det = vs
                .iter()
                .any(|v| v.iter().all(|w| *w == zero || *w == one));
            assert_eq!(colourable, has_det);
            if let Some(col) = ks_colourable(h).unwrap() {
                // The returned colouring is itself a polytope point.
                let w: Vec<Rat> = col.iter().map(|&c| rat_int(c as i64)).collect();
                assert!(assignment_polytope(h).contains(&w));
            }
        }
    }

    #[test]
    fn colourability_class_cap() {
        let n = COLOURABILITY_CLASS_CAP + 1;
        let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        let h = EventHypergraph::new(n, edges).unwrap();
        assert!(matches!(ks_colourable(&h), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn odd_cycle_obstruction() {
        assert!(odd_cycle_projective_obstruction(3).unwrap());
        assert!(odd_cycle_projective_obstruction(5).unwrap());
        assert!(odd_cycle_projective_obstruction(17).unwrap());
        assert!(!odd_cycle_projective_obstruction(4).unwrap());
        assert!(!odd_cycle_projective_obstruction(6).unwrap());
        assert!(odd_cycle_projective_obstruction(2).is_err());
    }

    #[test]
    fn evaluate_a_ideal_and_uniform() {
        let h = EventHypergraph::cega18();
        // Perfectly predictive statistics.
        let ideal: Vec<Vec<Vec<f64>>> = h
            .measurements()
            .iter()
            .map(|edge| {
                (0..edge.len())
                    .map(|k| {
                        (0..edge.len())
                            .map(|l| if l == k { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        assert!((evaluate_a(&h, &ideal).unwrap() - 1.0).abs() < 1e-15);

        // Uniformly random outcomes.
        let uniform: Vec<Vec<Vec<f64>>> = h
            .measurements()
            .iter()
            .map(|edge| vec![vec![1.0 / edge.len() as f64; edge.len()]; edge.len()])
            .collect();
        assert!((evaluate_a(&h, &uniform).unwrap() - 0.25).abs() < 1e-15);

        // Shape and normalization gates.
        assert!(matches!(
            evaluate_a(&h, &ideal[..8].to_vec()),
            Err(Error::ShapeMismatch(_))
        ));
        let mut bad = ideal.clone();
        bad[0][0][0] = 0.9;
        assert!(matches!(evaluate_a(&h, &bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn depolarizing_threshold_exact() {
        assert!((depolarizing_a(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((depolarizing_a(0.9, 0.9).unwrap() - (0.25 + 0.75 * 0.81)).abs() < 1e-15);
        assert!(depolarizing_a(1.2, 1.0).is_err());

        // At the threshold the witness equals the noncontextual bound exactly.
        let thr = noise_threshold();
        assert_eq!(thr, rat(7, 9));
        let a = depolarizing_a_exact(&thr, &Rat::one()).unwrap();
        assert_eq!(a, rat(5, 6));

        // Exact grid: above the bound iff p1 * p2 exceeds 7/9.
        let bound = rat(5, 6);
        for i in 0..=100 {
            for j in (0..=100).step_by(4) {
                let p1 = rat(i, 100);
                let p2 = rat(j, 100);
                let a = depolarizing_a_exact(&p1, &p2).unwrap();
                let above = a > bound;
                let product_above = &p1 * &p2 > thr;
                assert_eq!(above, product_above, "i={i} j={j}");
            }
        }

        // Float and exact variants agree.
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let f = depolarizing_a(p, 0.95).unwrap();
            let e = rat_to_f64(&depolarizing_a_exact(&rat(i, 20), &rat(19, 20)).unwrap());
            assert!((f - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cabello_witness_sums_to_nine() {
        let rows: Vec<Vec<f64>> = (0..9).map(|_| vec![0.25; 4]).collect();
        assert!((cabello_alpha_prime(&rows).unwrap() - 9.0).abs() < 1e-12);

        let skewed: Vec<Vec<f64>> = (0..9).map(|_| vec![0.7, 0.1, 0.1, 0.1]).collect();
        assert!((cabello_alpha_prime(&skewed).unwrap() - 9.0).abs() < 1e-9);

        let mut bad = rows.clone();
        bad[3][2] = 0.5;
        assert!(matches!(
            cabello_alpha_prime(&bad),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            cabello_alpha_prime(&rows[..8].to_vec()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn assignment_validation() {
        let h = EventHypergraph::cega18();
        let mut w = vec![Rat::zero(); 18];
        for k in [0usize, 4, 6, 9, 14, 16] {
            w[k] = Rat::one();
        }
        // Measurement 1 = {3, 4, 5, 6} contains both class 4 and class 6,
        // so this puts weight 2 on one edge.
        assert!(NcAssignment::new(&h, w).is_err());

        let witness: Vec<Rat> = [1, 0, 0, 0, 1, 0, 0, 0, 9, 9, 9, 0, 0, 0, 1, 0, 0, 0]
            .iter()
            .map(|&x| if x == 9 { rat(1, 2) } else { rat_int(x) })
            .collect();
        assert!(NcAssignment::new(&h, witness).is_ok());

        let short = vec![Rat::one(); 17];
        assert!(matches!(
            NcAssignment::new(&h, short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fixture_text_is_well_formed() {
        // Defensive re-validation of the frozen reference data.
        let fixture = parse_fixture();
        let h = EventHypergraph::cega18();
        let mut counts = [0usize; 4];
        let mut distinct: BTreeSet<String> = BTreeSet::new();
        for (t, w) in &fixture {
            counts[*t - 1] += 1;
            let key: String = w
                .iter()
                .map(|x| {
                    if *x == Rat::zero() {
                        '0'
                    } else if *x == Rat::one() {
                        '1'
                    } else {
                        'h'
                    }
                })
                .collect();
            distinct.insert(key);
            let _ = NcAssignment::new(&h, w.clone()).expect("fixture rows are assignments");
        }
        assert_eq!(counts, [24, 36, 36, 50]);
        assert_eq!(distinct.len(), 146);
    }
}
