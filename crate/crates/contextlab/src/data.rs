//! Built-in projective realization of the 18-class event hypergraph: one
//! integer ray per class in dimension 4, nine four-ray orthogonal bases. The
//! data ships as JSON and is fully revalidated on load — orthogonality,
//! double-cover membership, agreement with the combinatorial hypergraph, and
//! completeness of every basis as a projector POVM.

use contextlab_core::ks::EventHypergraph;
use contextlab_core::linalg::{C64, CMatrix};
use contextlab_core::quantum::{Effect, HermitianOperator, Povm};
use contextlab_core::{Error, Result};
use serde::Deserialize;

const CEGA18_RAYS_JSON: &str = include_str!("../data/cega18_rays.json");

#[derive(Deserialize)]
struct RaysDto {
    n_classes: usize,
    rays: Vec<Vec<i64>>,
    measurements: Vec<Vec<usize>>,
}

/// The validated ray table: 18 integer rays in dimension 4 and the nine
/// measurements as ray-index quadruples.
#[derive(Debug, Clone)]
pub struct Cega18Rays {
    pub rays: Vec<[i64; 4]>,
    pub measurements: Vec<Vec<usize>>,
}

fn dot4(a: &[i64; 4], b: &[i64; 4]) -> i64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Load and validate the built-in ray realization.
pub fn cega18_rays() -> Result<Cega18Rays> {
    let dto: RaysDto = serde_json::from_str(CEGA18_RAYS_JSON)
        .map_err(|e| Error::InvalidInput(format!("built-in ray table is malformed: {e}")))?;
    if dto.n_classes != 18 || dto.rays.len() != 18 {
        return Err(Error::InvalidInput(format!(
            "ray table must list 18 classes, got {} / {} rays",
            dto.n_classes,
            dto.rays.len()
        )));
    }
    let mut rays = Vec::with_capacity(18);
    for (k, r) in dto.rays.iter().enumerate() {
        let arr: [i64; 4] = r.as_slice().try_into().map_err(|_| {
            Error::InvalidInput(format!("ray {k} must have 4 components, got {}", r.len()))
        })?;
        if dot4(&arr, &arr) == 0 {
            return Err(Error::InvalidInput(format!("ray {k} is the zero vector")));
        }
        rays.push(arr);
    }

    // Distinct classes must carry genuinely different rays (not parallel).
    for i in 0..18 {
        for j in (i + 1)..18 {
            let d = dot4(&rays[i], &rays[j]);
            if d * d == dot4(&rays[i], &rays[i]) * dot4(&rays[j], &rays[j]) {
                return Err(Error::InvalidInput(format!("rays {i} and {j} are parallel")));
            }
        }
    }

    // The measurement structure must be exactly the combinatorial one.
    let reference = EventHypergraph::cega18();
    if dto.measurements != reference.measurements() {
        return Err(Error::InvalidInput(
            "ray-table measurements disagree with the built-in event hypergraph".to_string(),
        ));
    }

    // Each basis is orthogonal, and every ray sits in exactly two bases.
    let mut membership = vec![0usize; 18];
    for (m, basis) in dto.measurements.iter().enumerate() {
        if basis.len() != 4 {
            return Err(Error::InvalidInput(format!("measurement {m} is not a 4-ray basis")));
        }
        for (a, &i) in basis.iter().enumerate() {
            membership[i] += 1;
            for &j in &basis[a + 1..] {
                if dot4(&rays[i], &rays[j]) != 0 {
                    return Err(Error::InvalidInput(format!(
                        "rays {i} and {j} in measurement {m} are not orthogonal"
                    )));
                }
            }
        }
    }
    if membership.iter().any(|&c| c != 2) {
        return Err(Error::InvalidInput(
            "every ray must occur in exactly two measurements".to_string(),
        ));
    }

    Ok(Cega18Rays { rays, measurements: dto.measurements })
}

/// Rank-1 projector onto an integer ray, as a 4x4 real matrix.
fn ray_projector(ray: &[i64; 4]) -> CMatrix {
    let norm_sq = dot4(ray, ray) as f64;
    CMatrix::from_fn(4, |i, j| C64::new(ray[i] as f64 * ray[j] as f64 / norm_sq, 0.0))
}

/// The nine projective measurements of the built-in realization, one
/// four-outcome projector POVM per basis; outcome labels name the ray class.
/// Constructing them revalidates completeness of every basis.
pub fn cega18_pvms() -> Result<Vec<Povm>> {
    let data = cega18_rays()?;
    let mut povms = Vec::with_capacity(9);
    for basis in &data.measurements {
        let effects = basis
            .iter()
            .map(|&k| Effect::new(HermitianOperator::new(ray_projector(&data.rays[k]))?))
            .collect::<Result<Vec<_>>>()?;
        let labels = basis.iter().map(|k| format!("class{k}")).collect();
        povms.push(Povm::new(effects, labels)?);
    }
    Ok(povms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_rays_validate() {
        let data = cega18_rays().unwrap();
        assert_eq!(data.rays.len(), 18);
        assert_eq!(data.measurements.len(), 9);
    }

    #[test]
    fn built_in_bases_are_complete_projector_povms() {
        let povms = cega18_pvms().unwrap();
        assert_eq!(povms.len(), 9);
        for p in &povms {
            assert_eq!(p.dim(), 4);
            assert_eq!(p.n_outcomes(), 4);
            assert!(p.is_projective(1e-12));
        }
    }

    #[test]
    fn repeated_rays_share_the_projector_across_bases() {
        // Each class occurs in two bases; the corresponding effects must be
        // the same operator, which is what makes context-independence of the
        // assignment meaningful.
        let data = cega18_rays().unwrap();
        let povms = cega18_pvms().unwrap();
        for class in 0..18 {
            let mut found: Vec<CMatrix> = Vec::new();
            for (m, basis) in data.measurements.iter().enumerate() {
                if let Some(pos) = basis.iter().position(|&k| k == class) {
                    found.push(povms[m].effect(pos).matrix().clone());
                }
            }
            assert_eq!(found.len(), 2);
            assert!(found[0].max_abs_diff(&found[1]) < 1e-15);
        }
    }
}
