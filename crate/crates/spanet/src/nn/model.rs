//! Angle predictors: a continuous-filter convolution backbone over atomic
//! distances plus two heads. The linear head scores each matched edge from
//! the concatenated endpoint features and an RBF expansion of the edge
//! length; the mixed head first reorders the atoms pair-blocked and embeds
//! each pair. All features are distance-derived, so predictions are
//! invariant under rigid motions by construction.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Geometry;
use crate::matching::PairMatching;
use crate::nn::tape::{Graph, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Linear,
    Mixed,
}

impl std::str::FromStr for Head {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Head::Linear),
            "mixed" => Ok(Head::Mixed),
            other => Err(Error::invalid(format!("unknown head '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub n_interactions: usize,
    pub rbf_count: usize,
    /// Upper end of the RBF center grid, in Å.
    pub rbf_cutoff: f64,
    pub head: Head,
    pub head_hidden: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            feature_dim: 64,
            n_interactions: 3,
            rbf_count: 50,
            rbf_cutoff: 5.0,
            head: Head::Mixed,
            head_hidden: 256,
            seed: 0,
        }
    }
}

/// Gaussian expansion of a distance over `rbf_count` centers equally spaced
/// on [0, cutoff]; width set by the center spacing (γ = 1/(2Δ²)).
pub fn rbf_expand(d: f64, cfg: &ModelConfig) -> Vec<f64> {
    let k = cfg.rbf_count;
    let spacing = cfg.rbf_cutoff / (k - 1) as f64;
    let gamma = 1.0 / (2.0 * spacing * spacing);
    (0..k)
        .map(|i| {
            let mu = i as f64 * spacing;
            (-gamma * (d - mu) * (d - mu)).exp()
        })
        .collect()
}

/// Named trainable tensors in a fixed creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub tensors: Vec<DMatrix<f64>>,
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases, seeded by `cfg.seed`.
    pub fn init(cfg: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        let weight = |names: &mut Vec<String>,
                          tensors: &mut Vec<DMatrix<f64>>,
                          rng: &mut ChaCha8Rng,
                          name: &str,
                          rows: usize,
                          cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            names.push(name.to_string());
            tensors.push(DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound)));
        };
        let bias = |names: &mut Vec<String>, tensors: &mut Vec<DMatrix<f64>>, name: &str, cols: usize| {
            names.push(name.to_string());
            tensors.push(DMatrix::zeros(1, cols));
        };

        let f = cfg.feature_dim;
        weight(&mut names, &mut tensors, &mut rng, "embed", 1, f);
        for k in 0..cfg.n_interactions {
            weight(&mut names, &mut tensors, &mut rng, &format!("block{k}.filter.w1"), cfg.rbf_count, f);
            bias(&mut names, &mut tensors, &format!("block{k}.filter.b1"), f);
            weight(&mut names, &mut tensors, &mut rng, &format!("block{k}.filter.w2"), f, f);
            bias(&mut names, &mut tensors, &format!("block{k}.filter.b2"), f);
            weight(&mut names, &mut tensors, &mut rng, &format!("block{k}.message.w"), f, f);
            weight(&mut names, &mut tensors, &mut rng, &format!("block{k}.update.w1"), f, f);
            bias(&mut names, &mut tensors, &format!("block{k}.update.b1"), f);
            weight(&mut names, &mut tensors, &mut rng, &format!("block{k}.update.w2"), f, f);
            bias(&mut names, &mut tensors, &format!("block{k}.update.b2"), f);
        }
        let head_in = 2 * f + cfg.rbf_count;
        weight(&mut names, &mut tensors, &mut rng, "head.w1", head_in, cfg.head_hidden);
        bias(&mut names, &mut tensors, &format!("head.b1"), cfg.head_hidden);
        weight(&mut names, &mut tensors, &mut rng, "head.w2", cfg.head_hidden, 1);
        bias(&mut names, &mut tensors, "head.b2", 1);

        ModelParams { names, tensors }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Zero out every interaction-block tensor (testing hook: leaves the
    /// backbone as the bare embedding through the residual connections).
    pub fn zero_interactions(&mut self) {
        for (name, t) in self.names.iter().zip(self.tensors.iter_mut()) {
            if name.starts_with("block") {
                t.fill(0.0);
            }
        }
    }
}

/// Raw and normalized geometric features for one instance: the positions,
/// the global distance edge list, and the matched-edge (distance, angle)
/// descriptors. The angle is measured between the edge vector and the lab
/// z-axis; the heads consume only the distance-derived parts, keeping
/// predictions rotation-invariant.
#[derive(Debug, Clone)]
pub struct EdgeFeature {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub struct FeaturePack {
    pub positions: Vec<[f64; 3]>,
    pub global_edges: Vec<(usize, usize, f64)>,
    pub matched_raw: Vec<EdgeFeature>,
    /// Componentwise v ← (v − min(v)) / max(v), applied over matched edges
    /// (division skipped when max(v) vanishes).
    pub matched_normalized: Vec<EdgeFeature>,
}

pub fn build_feature_pack(geom: &Geometry, matching: &PairMatching) -> FeaturePack {
    let n = geom.n_atoms();
    let mut global_edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            global_edges.push((i, j, geom.distance(i, j)));
        }
    }
    let matched_raw: Vec<EdgeFeature> = matching
        .pairs
        .iter()
        .map(|&(a, b)| {
            let d = geom.distance(a, b);
            let dz = geom.coords[b][2] - geom.coords[a][2];
            let angle = if d > 0.0 { (dz / d).clamp(-1.0, 1.0).acos() } else { 0.0 };
            EdgeFeature { a, b, distance: d, angle }
        })
        .collect();

    let normalize = |values: Vec<f64>| -> Vec<f64> {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        values
            .iter()
            .map(|v| if max.abs() > 1e-12 { (v - min) / max } else { v - min })
            .collect()
    };
    let distances = normalize(matched_raw.iter().map(|e| e.distance).collect());
    let angles = normalize(matched_raw.iter().map(|e| e.angle).collect());
    let matched_normalized = matched_raw
        .iter()
        .zip(distances.iter().zip(angles.iter()))
        .map(|(e, (&d, &a))| EdgeFeature { a: e.a, b: e.b, distance: d, angle: a })
        .collect();

    FeaturePack {
        positions: geom.coords.clone(),
        global_edges,
        matched_raw,
        matched_normalized,
    }
}

fn register_params(g: &mut Graph, params: &ModelParams) -> Vec<Tensor> {
    params
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| g.parameter(i, t.clone()))
        .collect()
}

fn tensor_named(params: &ModelParams, pt: &[Tensor], name: &str) -> Tensor {
    pt[params.index_of(name).unwrap_or_else(|| panic!("missing parameter {name}"))]
}

/// Interaction-block stack on an explicit coordinate list; returns the
/// (n_atoms × F) feature matrix node.
fn backbone_on(
    g: &mut Graph,
    cfg: &ModelConfig,
    params: &ModelParams,
    pt: &[Tensor],
    coords: &[[f64; 3]],
) -> Tensor {
    let n = coords.len();
    let embed = tensor_named(params, pt, "embed");
    let mut x = g.gather_rows(embed, &vec![0; n]);

    // Directed edge list j → i for every ordered pair.
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    let mut rbf_rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                let dz = coords[i][2] - coords[j][2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            };
            sources.push(j);
            targets.push(i);
            rbf_rows.push(rbf_expand(d, cfg));
        }
    }
    let n_edges = sources.len();
    let rbf = DMatrix::from_fn(n_edges, cfg.rbf_count, |r, c| rbf_rows[r][c]);
    let rbf = g.constant(rbf);

    for k in 0..cfg.n_interactions {
        let w1 = tensor_named(params, pt, &format!("block{k}.filter.w1"));
        let b1 = tensor_named(params, pt, &format!("block{k}.filter.b1"));
        let w2 = tensor_named(params, pt, &format!("block{k}.filter.w2"));
        let b2 = tensor_named(params, pt, &format!("block{k}.filter.b2"));
        let wm = tensor_named(params, pt, &format!("block{k}.message.w"));
        let wu1 = tensor_named(params, pt, &format!("block{k}.update.w1"));
        let bu1 = tensor_named(params, pt, &format!("block{k}.update.b1"));
        let wu2 = tensor_named(params, pt, &format!("block{k}.update.w2"));
        let bu2 = tensor_named(params, pt, &format!("block{k}.update.b2"));

        let h = g.matmul(rbf, w1);
        let h = g.add_bias(h, b1);
        let h = g.ssp(h);
        let h = g.matmul(h, w2);
        let h = g.add_bias(h, b2);
        let filter = g.ssp(h);

        let messages = g.matmul(x, wm);
        let gathered = g.gather_rows(messages, &sources);
        let gated = g.hadamard(gathered, filter);
        let aggregated = g.scatter_add_rows(gated, &targets, n);
        // Atom-wise nonlinear output transform of the aggregated messages.
        let update = g.matmul(aggregated, wu1);
        let update = g.add_bias(update, bu1);
        let update = g.ssp(update);
        let update = g.matmul(update, wu2);
        let update = g.add_bias(update, bu2);
        x = g.add(x, update);
    }
    x
}

/// Two-layer rectifier MLP from per-pair rows to one scalar per row.
fn head_mlp(g: &mut Graph, params: &ModelParams, pt: &[Tensor], rows: Tensor) -> Tensor {
    let w1 = tensor_named(params, pt, "head.w1");
    let b1 = tensor_named(params, pt, "head.b1");
    let w2 = tensor_named(params, pt, "head.w2");
    let b2 = tensor_named(params, pt, "head.b2");
    let h = g.matmul(rows, w1);
    let h = g.add_bias(h, b1);
    let h = g.relu(h);
    let h = g.matmul(h, w2);
    g.add_bias(h, b2)
}

fn pair_rows(
    g: &mut Graph,
    cfg: &ModelConfig,
    features: Tensor,
    endpoints: &[(usize, usize, f64)],
) -> Tensor {
    let (a_idx, b_idx): (Vec<usize>, Vec<usize>) =
        endpoints.iter().map(|&(a, b, _)| (a, b)).unzip();
    let xa = g.gather_rows(features, &a_idx);
    let xb = g.gather_rows(features, &b_idx);
    let rbf = DMatrix::from_fn(endpoints.len(), cfg.rbf_count, |r, c| {
        rbf_expand(endpoints[r].2, cfg)[c]
    });
    let rbf = g.constant(rbf);
    g.concat_cols(&[xa, xb, rbf])
}

/// Build the forward graph; returns the (n_pairs × 1) prediction node, one
/// angle per matched pair in pair-list order.
pub fn forward(
    g: &mut Graph,
    cfg: &ModelConfig,
    params: &ModelParams,
    geom: &Geometry,
    matching: &PairMatching,
) -> Result<Tensor> {
    if matching.pairs.is_empty() {
        return Err(Error::invalid("empty matching"));
    }
    let pt = register_params(g, params);
    let node = match cfg.head {
        Head::Linear => {
            // Endpoint features from the geometry as given; canonical a < b
            // endpoint order within each matched edge.
            let x = backbone_on(g, cfg, params, &pt, &geom.coords);
            let edges: Vec<(usize, usize, f64)> = matching
                .pairs
                .iter()
                .map(|&(a, b)| {
                    let (a, b) = if a <= b { (a, b) } else { (b, a) };
                    (a, b, geom.distance(a, b))
                })
                .collect();
            let rows = pair_rows(g, cfg, x, &edges);
            head_mlp(g, params, &pt, rows)
        }
        Head::Mixed => {
            // Reorder the coordinates pair-blocked (pair p owns slots 2p,
            // 2p+1) before running the backbone, then embed each pair from
            // its two adjacent slots.
            let mut coords = Vec::with_capacity(geom.n_atoms());
            for &(a, b) in &matching.pairs {
                coords.push(geom.coords[a]);
                coords.push(geom.coords[b]);
            }
            let x = backbone_on(g, cfg, params, &pt, &coords);
            let edges: Vec<(usize, usize, f64)> = matching
                .pairs
                .iter()
                .enumerate()
                .map(|(p, &(a, b))| (2 * p, 2 * p + 1, geom.distance(a, b)))
                .collect();
            let rows = pair_rows(g, cfg, x, &edges);
            head_mlp(g, params, &pt, rows)
        }
    };
    Ok(node)
}

/// Forward pass only: predicted angle per pair.
pub fn predict(
    cfg: &ModelConfig,
    params: &ModelParams,
    geom: &Geometry,
    matching: &PairMatching,
) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let out = forward(&mut g, cfg, params, geom, matching)?;
    Ok(g.value(out).column(0).iter().cloned().collect())
}

/// Mean-squared-error loss against target angles plus gradients for every
/// parameter tensor, in `ModelParams` order.
pub fn loss_and_grads(
    cfg: &ModelConfig,
    params: &ModelParams,
    geom: &Geometry,
    matching: &PairMatching,
    targets: &[f64],
) -> Result<(f64, Vec<DMatrix<f64>>)> {
    if targets.len() != matching.n_pairs() {
        return Err(Error::invalid("one target angle per pair required"));
    }
    let mut g = Graph::new();
    let out = forward(&mut g, cfg, params, geom, matching)?;
    let target = DMatrix::from_fn(targets.len(), 1, |r, _| targets[r]);
    let loss = g.mse(out, target);
    let value = g.value(loss)[(0, 0)];
    let grads = g.backward(loss)?;
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_random, GeometryKind};
    use crate::matching::best_matching;
    use approx::assert_abs_diff_eq;

    fn small_cfg(head: Head) -> ModelConfig {
        ModelConfig {
            feature_dim: 8,
            rbf_count: 10,
            head_hidden: 16,
            head,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn rbf_peaks_at_centers_and_is_continuous() {
        let cfg = ModelConfig::default();
        let spacing = cfg.rbf_cutoff / (cfg.rbf_count - 1) as f64;
        for k in [0, 7, 49] {
            let v = rbf_expand(k as f64 * spacing, &cfg);
            assert_abs_diff_eq!(v[k], 1.0, epsilon = 1e-14);
        }
        let at_zero = rbf_expand(0.0, &cfg);
        assert_abs_diff_eq!(at_zero[0], 1.0, epsilon = 1e-14);
        assert!(at_zero
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0)));
        // Continuity sweep.
        let mut d = 0.0;
        while d < 5.0 {
            let a = rbf_expand(d, &cfg);
            let b = rbf_expand(d + 1e-6, &cfg);
            let max_delta = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(max_delta < 1e-4);
            d += 0.37;
        }
    }

    #[test]
    fn zeroed_interactions_leave_bare_embedding() {
        let cfg = small_cfg(Head::Linear);
        let mut params = ModelParams::init(&cfg);
        params.zero_interactions();
        let geom = generate_random(4, 2.5, 1).unwrap();
        let matching = best_matching(&geom).unwrap();
        let mut g = Graph::new();
        let pt = register_params(&mut g, &params);
        let x = backbone_on(&mut g, &cfg, &params, &pt, &geom.coords);
        let embed = &params.tensors[params.index_of("embed").unwrap()];
        let xv = g.value(x);
        for r in 0..xv.nrows() {
            for c in 0..xv.ncols() {
                assert_abs_diff_eq!(xv[(r, c)], embed[(0, c)], epsilon = 1e-14);
            }
        }
        drop(matching);
    }

    #[test]
    fn predictions_invariant_under_rigid_motion() {
        for head in [Head::Linear, Head::Mixed] {
            let cfg = small_cfg(head);
            let params = ModelParams::init(&cfg);
            let geom = generate_random(6, 2.5, 5).unwrap();
            let matching = best_matching(&geom).unwrap();
            let base = predict(&cfg, &params, &geom, &matching).unwrap();

            // Rotate about z by 0.7 rad and translate.
            let (s, c) = (0.7f64.sin(), 0.7f64.cos());
            let moved: Vec<[f64; 3]> = geom
                .coords
                .iter()
                .map(|p| [c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.5, p[2] + 0.25])
                .collect();
            let moved_geom = Geometry {
                coords: moved,
                kind: GeometryKind::Random,
                seed: None,
                step: None,
            };
            let rotated = predict(&cfg, &params, &moved_geom, &matching).unwrap();
            for (a, b) in base.iter().zip(rotated.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn mixed_head_consistent_under_atom_relabeling() {
        let cfg = small_cfg(Head::Mixed);
        let params = ModelParams::init(&cfg);
        let geom = generate_random(6, 2.5, 9).unwrap();
        let matching = best_matching(&geom).unwrap();
        let base = predict(&cfg, &params, &geom, &matching).unwrap();

        // Relabel atoms by a permutation and permute the matching to keep
        // the same physical pairs; per-pair outputs must be unchanged.
        let perm = [2usize, 0, 4, 1, 5, 3];
        let mut inv = [0usize; 6];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let coords: Vec<[f64; 3]> = perm.iter().map(|&old| geom.coords[old]).collect();
        let relabeled = Geometry {
            coords,
            kind: GeometryKind::Random,
            seed: None,
            step: None,
        };
        let pairs: Vec<(usize, usize)> =
            matching.pairs.iter().map(|&(a, b)| (inv[a], inv[b])).collect();
        let weights = matching.weights.clone();
        let total_weight = matching.total_weight;
        let permuted = PairMatching { pairs, weights, total_weight };
        let out = predict(&cfg, &params, &relabeled, &permuted).unwrap();
        for (a, b) in base.iter().zip(out.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn output_length_matches_pair_count() {
        for (n, head) in [(2usize, Head::Linear), (12, Head::Linear), (12, Head::Mixed)] {
            let cfg = small_cfg(head);
            let params = ModelParams::init(&cfg);
            let geom = generate_random(n, 3.0, 2).unwrap();
            let matching = best_matching(&geom).unwrap();
            let out = predict(&cfg, &params, &geom, &matching).unwrap();
            assert_eq!(out.len(), n / 2);
        }
    }

    #[test]
    fn model_gradient_matches_finite_difference() {
        let cfg = small_cfg(Head::Mixed);
        let geom = generate_random(4, 2.5, 13).unwrap();
        let matching = best_matching(&geom).unwrap();
        let targets = [0.3, -0.8];
        let mut rng = ChaCha8Rng::seed_from_u64(21);

        for _draw in 0..5 {
            let mut params = ModelParams::init(&cfg);
            for t in &mut params.tensors {
                for v in t.iter_mut() {
                    *v += rng.gen_range(-0.05..0.05);
                }
            }
            let (_, grads) = loss_and_grads(&cfg, &params, &geom, &matching, &targets).unwrap();

            // Spot-check a handful of coordinates per tensor.
            let mut probe = params.clone();
            for (ti, tensor) in params.tensors.iter().enumerate() {
                let len = tensor.len();
                for &i in &[0usize, len / 2, len - 1] {
                    let step = 1e-5;
                    probe.tensors[ti][i] = tensor[i] + step;
                    let (up, _) =
                        loss_and_grads(&cfg, &probe, &geom, &matching, &targets).unwrap();
                    probe.tensors[ti][i] = tensor[i] - step;
                    let (down, _) =
                        loss_and_grads(&cfg, &probe, &geom, &matching, &targets).unwrap();
                    probe.tensors[ti][i] = tensor[i];
                    let fd = (up - down) / (2.0 * step);
                    let ad = grads[ti][i];
                    let scale = fd.abs().max(ad.abs()).max(1e-6);
                    assert!(
                        (fd - ad).abs() / scale < 1e-4,
                        "tensor {} ({}) index {i}: fd {fd} vs ad {ad}",
                        params.names[ti],
                        ti
                    );
                }
            }
        }
    }

    #[test]
    fn feature_pack_normalization_as_written() {
        let geom = generate_random(6, 2.5, 4).unwrap();
        let matching = best_matching(&geom).unwrap();
        let pack = build_feature_pack(&geom, &matching);
        assert_eq!(pack.matched_raw.len(), 3);
        assert_eq!(pack.global_edges.len(), 15);
        let raw_d: Vec<f64> = pack.matched_raw.iter().map(|e| e.distance).collect();
        let min = raw_d.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = raw_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (e, &r) in pack.matched_normalized.iter().zip(raw_d.iter()) {
            assert_abs_diff_eq!(e.distance, (r - min) / max, epsilon = 1e-14);
        }
    }
}
