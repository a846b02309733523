//! Minimum-weight perfect matching of atoms under Euclidean edge weights.
//!
//! The matching defines which orbitals form each separable pair, so it has to
//! be deterministic: we enumerate all (n−1)!! perfect matchings exactly for
//! n ≤ 12 and break weight ties by lexicographic order of the sorted pair
//! list. A greedy nearest-pair fallback exists for larger systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Geometry;

/// Largest atom count handled by exact enumeration ((n−1)!! = 10395 at n=12).
pub const EXACT_MATCHING_LIMIT: usize = 12;

/// A perfect matching over atom indices. Pairs are stored with `a < b`,
/// sorted by `a`; weights are Euclidean distances in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatching {
    pub pairs: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub total_weight: f64,
}

impl PairMatching {
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    fn from_pairs(geom: &Geometry, mut pairs: Vec<(usize, usize)>) -> Self {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        let weights: Vec<f64> = pairs.iter().map(|&(a, b)| geom.distance(a, b)).collect();
        let total_weight = weights.iter().sum();
        PairMatching { pairs, weights, total_weight }
    }
}

fn check_even(geom: &Geometry) -> Result<usize> {
    let n = geom.n_atoms();
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "perfect matching needs an even atom count ≥ 2, got {n}"
        )));
    }
    Ok(n)
}

/// Exact minimum-weight perfect matching. The recursion always pairs the
/// lowest unmatched index first, so matchings are visited in lexicographic
/// order of their sorted pair lists and a strict `<` comparison keeps the
/// lexicographically smallest matching among weight ties.
pub fn best_matching(geom: &Geometry) -> Result<PairMatching> {
    let n = check_even(geom)?;
    if n > EXACT_MATCHING_LIMIT {
        return Err(Error::UnsupportedSize(format!(
            "exact matching enumerates up to n = {EXACT_MATCHING_LIMIT}; \
             got n = {n} (use greedy_matching)"
        )));
    }
    let mut used = vec![false; n];
    let mut current = Vec::with_capacity(n / 2);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    recurse(geom, &mut used, &mut current, 0.0, &mut best);
    let (_, pairs) = best.expect("even n >= 2 always has a matching");
    Ok(PairMatching::from_pairs(geom, pairs))
}

fn recurse(
    geom: &Geometry,
    used: &mut [bool],
    current: &mut Vec<(usize, usize)>,
    weight: f64,
    best: &mut Option<(f64, Vec<(usize, usize)>)>,
) {
    let first = match used.iter().position(|&u| !u) {
        Some(i) => i,
        None => {
            if best.as_ref().map_or(true, |(w, _)| weight < *w) {
                *best = Some((weight, current.clone()));
            }
            return;
        }
    };
    used[first] = true;
    for partner in (first + 1)..used.len() {
        if used[partner] {
            continue;
        }
        let w = geom.distance(first, partner);
        // Prune: partial weight already at or above the incumbent can only
        // tie, and ties resolve to the earlier (lexicographically smaller)
        // matching, which has been recorded already.
        if best.as_ref().is_some_and(|(bw, _)| weight + w >= *bw) {
            continue;
        }
        used[partner] = true;
        current.push((first, partner));
        recurse(geom, used, current, weight + w, best);
        current.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// Greedy fallback for n > 12: repeatedly pair the closest unmatched atoms.
pub fn greedy_matching(geom: &Geometry) -> Result<PairMatching> {
    let n = check_even(geom)?;
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for _ in 0..n / 2 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if used[i] {
                continue;
            }
            for j in (i + 1)..n {
                if used[j] {
                    continue;
                }
                let d = geom.distance(i, j);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.unwrap();
        used[i] = true;
        used[j] = true;
        pairs.push((i, j));
    }
    Ok(PairMatching::from_pairs(geom, pairs))
}

/// All n(n−1)/2 undirected edges with Euclidean distances, ordered (u, v)
/// with u < v. Shared preprocessing for the predictors.
pub fn global_edges(geom: &Geometry) -> Result<Vec<(usize, usize, f64)>> {
    let n = geom.n_atoms();
    if n < 2 {
        return Err(Error::invalid("global edges need at least 2 atoms"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v, geom.distance(u, v)));
        }
    }
    Ok(edges)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_random, generate_ring, Geometry, GeometryKind, SweepSchedule};
    use approx::assert_abs_diff_eq;

    fn linear_h4_half_angstrom() -> Geometry {
        Geometry {
            coords: vec![
                [0.0, 0.0, 0.0],
                [0.0, 0.0, 0.5],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, 1.5],
            ],
            kind: GeometryKind::Linear,
            seed: None,
            step: Some(0.5),
        }
    }

    #[test]
    fn linear_h4_pairs_neighbors() {
        let m = best_matching(&linear_h4_half_angstrom()).unwrap();
        assert_eq!(m.pairs, vec![(0, 1), (2, 3)]);
        assert_abs_diff_eq!(m.total_weight, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn h2_unique_matching() {
        let g = Geometry {
            coords: vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.74]],
            kind: GeometryKind::Linear,
            seed: None,
            step: Some(0.74),
        };
        let m = best_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
    }

    #[test]
    fn square_ring_tie_breaks_lexicographically() {
        let sched = SweepSchedule::new(4, 2, 1.0, 2.0).unwrap();
        let g = generate_ring(&sched, 0).unwrap();
        let m = best_matching(&g).unwrap();
        // Sides (0,1),(2,3) and (0,3),(1,2) both weigh 2.0; the diagonal
        // matching weighs 2√2.
        assert_eq!(m.pairs, vec![(0, 1), (2, 3)]);
        assert_abs_diff_eq!(m.total_weight, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn odd_count_rejected() {
        let g = Geometry {
            coords: vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            kind: GeometryKind::Random,
            seed: Some(0),
            step: None,
        };
        assert!(best_matching(&g).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_geometries() {
        for n in [4usize, 6, 8] {
            for seed in 0..40 {
                let g = generate_random(n, 2.5, seed).unwrap();
                let m = best_matching(&g).unwrap();
                let (bw, bp) = brute::brute_force(&g);
                assert_eq!(m.pairs, bp, "n = {n}, seed = {seed}");
                assert_abs_diff_eq!(m.total_weight, bw, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn argmin_is_scale_invariant() {
        for seed in 0..20 {
            let g = generate_random(6, 2.5, seed).unwrap();
            let base = best_matching(&g).unwrap();
            for c in [0.1, 10.0] {
                let scaled = Geometry {
                    coords: g
                        .coords
                        .iter()
                        .map(|r| [r[0] * c, r[1] * c, r[2] * c])
                        .collect(),
                    ..g.clone()
                };
                let m = best_matching(&scaled).unwrap();
                assert_eq!(m.pairs, base.pairs, "seed {seed}, scale {c}");
            }
        }
    }

    #[test]
    fn global_edge_counts_and_distances() {
        let g = generate_random(2, 2.5, 1).unwrap();
        assert_eq!(global_edges(&g).unwrap().len(), 1);

        let g = generate_random(4, 2.5, 1).unwrap();
        assert_eq!(global_edges(&g).unwrap().len(), 6);

        let sched = SweepSchedule::new(4, 2, 1.0, 2.0).unwrap();
        let g = crate::geom::generate_linear(&sched, 0).unwrap();
        let mut d: Vec<f64> = global_edges(&g).unwrap().iter().map(|e| e.2).collect();
        d.sort_by(f64::total_cmp);
        let expect = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        for (a, b) in d.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn greedy_agrees_on_easy_instances() {
        let m = greedy_matching(&linear_h4_half_angstrom()).unwrap();
        assert_eq!(m.pairs, vec![(0, 1), (2, 3)]);
    }
}
