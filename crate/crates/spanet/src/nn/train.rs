//! Deterministic single-threaded training: adaptive-moment SGD over
//! per-molecule angle MSE with gradient accumulation inside each batch.
//! Fixed-order reductions and seeded shuffling make the resulting
//! parameters bit-reproducible for a given seed and dataset.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Geometry;
use crate::matching::PairMatching;
use crate::nn::model::{loss_and_grads, ModelConfig, ModelParams};
use crate::pipeline::DatasetRecord;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyper {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of molecules held out for the validation loss.
    pub val_fraction: f64,
    /// Final learning rate as a fraction of `lr`, reached by linear decay
    /// over the epochs (1.0 = constant rate).
    pub lr_final_fraction: f64,
    /// Decoupled weight decay applied to weight matrices (not biases).
    pub weight_decay: f64,
    /// Fraction of final epochs whose parameters are averaged into the
    /// returned model (0.0 = last iterate only). Tail averaging damps the
    /// end-of-training oscillation of SGD iterates.
    pub tail_average_fraction: f64,
    /// Uniform per-component coordinate jitter (Å) applied to training
    /// inputs only (labels and validation untouched); smooths the learned
    /// map between training geometries.
    pub coord_jitter: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 1e-3,
            batch: 32,
            epochs: 100,
            seed: 0,
            val_fraction: 0.1,
            lr_final_fraction: 0.1,
            weight_decay: 0.0,
            tail_average_fraction: 0.0,
            coord_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_time_s: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochStat>,
}

struct Sample {
    geometry: Geometry,
    matching: PairMatching,
    targets: Vec<f64>,
}

struct Adam {
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    t: u64,
    lr: f64,
    weight_decay: f64,
    /// Per-tensor flag: true for weight matrices (decayed), false for biases.
    decay_mask: Vec<bool>,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ModelParams, lr: f64, weight_decay: f64) -> Self {
        let zeros: Vec<DMatrix<f64>> = params
            .tensors
            .iter()
            .map(|t| DMatrix::zeros(t.nrows(), t.ncols()))
            .collect();
        let decay_mask = params.names.iter().map(|n| !n.contains(".b")).collect();
        Adam { m: zeros.clone(), v: zeros, t: 0, lr, weight_decay, decay_mask }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[DMatrix<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for (ti, (tensor, grad)) in params.tensors.iter_mut().zip(grads.iter()).enumerate() {
            let (m, v) = (&mut self.m[ti], &mut self.v[ti]);
            let decay = if self.decay_mask[ti] { self.weight_decay } else { 0.0 };
            for i in 0..tensor.len() {
                let g = grad[i];
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g;
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                tensor[i] -= self.lr * (m_hat / (v_hat.sqrt() + Self::EPS) + decay * tensor[i]);
            }
        }
    }
}

fn to_samples(records: &[DatasetRecord]) -> Vec<Sample> {
    records
        .iter()
        .filter(|r| r.converged)
        .map(|r| Sample {
            geometry: r.geometry(),
            matching: r.matching.clone(),
            targets: r.theta.clone(),
        })
        .collect()
}

fn mean_loss(cfg: &ModelConfig, params: &ModelParams, samples: &[&Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for s in samples {
        let (loss, _) = loss_and_grads(cfg, params, &s.geometry, &s.matching, &s.targets)?;
        total += loss;
    }
    Ok(total / samples.len() as f64)
}

/// Train on converged records; returns the final parameters and the
/// per-epoch log. Deterministic for fixed seed and data order.
pub fn train(cfg: &ModelConfig, records: &[DatasetRecord], hyper: &Hyper) -> Result<TrainOutcome> {
    let samples = to_samples(records);
    if samples.is_empty() {
        return Err(Error::invalid("no converged records to train on"));
    }

    // Deterministic split: shuffle indices once, carve off the tail.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    order.shuffle(&mut rng);
    let n_val = ((samples.len() as f64 * hyper.val_fraction) as usize).min(samples.len() - 1);
    let (train_idx, val_idx) = order.split_at(samples.len() - n_val);
    let mut train_idx = train_idx.to_vec();
    let val_set: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();

    let mut params = ModelParams::init(cfg);
    let mut adam = Adam::new(&params, hyper.lr, hyper.weight_decay);
    let mut log = Vec::with_capacity(hyper.epochs);
    let start = Instant::now();

    let tail_frac = hyper.tail_average_fraction.clamp(0.0, 1.0);
    let tail_epochs = ((hyper.epochs as f64 * tail_frac).round() as usize).min(hyper.epochs);
    let tail_start = hyper.epochs - tail_epochs;
    let mut tail_sum: Option<Vec<DMatrix<f64>>> = None;
    let mut tail_count = 0usize;

    for epoch in 0..hyper.epochs {
        let progress = if hyper.epochs > 1 {
            epoch as f64 / (hyper.epochs - 1) as f64
        } else {
            0.0
        };
        adam.lr = hyper.lr * (1.0 - progress * (1.0 - hyper.lr_final_fraction.clamp(0.0, 1.0)));
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in train_idx.chunks(hyper.batch.max(1)) {
            let mut batch_grads: Option<Vec<DMatrix<f64>>> = None;
            for &i in chunk {
                let s = &samples[i];
                let geometry = if hyper.coord_jitter > 0.0 {
                    let j = hyper.coord_jitter;
                    let mut g = s.geometry.clone();
                    for r in &mut g.coords {
                        for c in r.iter_mut() {
                            *c += rng.gen_range(-j..j);
                        }
                    }
                    g
                } else {
                    s.geometry.clone()
                };
                let (loss, grads) =
                    loss_and_grads(cfg, &params, &geometry, &s.matching, &s.targets)?;
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite training loss at epoch {epoch}"
                    )));
                }
                epoch_loss += loss;
                match &mut batch_grads {
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(grads.iter()) {
                            *a += g;
                        }
                    }
                    slot => *slot = Some(grads),
                }
            }
            if let Some(mut grads) = batch_grads {
                let scale = 1.0 / chunk.len() as f64;
                for g in &mut grads {
                    *g *= scale;
                }
                adam.step(&mut params, &grads);
            }
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_loss = if val_set.is_empty() {
            train_loss
        } else {
            mean_loss(cfg, &params, &val_set)?
        };
        if !val_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite validation loss at epoch {epoch}"
            )));
        }
        log.push(EpochStat {
            epoch,
            train_loss,
            val_loss,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        if epoch >= tail_start {
            match &mut tail_sum {
                Some(acc) => {
                    for (a, t) in acc.iter_mut().zip(params.tensors.iter()) {
                        *a += t;
                    }
                }
                slot => *slot = Some(params.tensors.clone()),
            }
            tail_count += 1;
        }
    }

    if let Some(mut acc) = tail_sum {
        if tail_count > 1 {
            let scale = 1.0 / tail_count as f64;
            for a in &mut acc {
                *a *= scale;
            }
            params.tensors = acc;
        }
    }

    Ok(TrainOutcome { params, log })
}

/// CSV log: epoch, train_loss, val_loss, wall_time.
pub fn write_log_csv(path: &Path, log: &[EpochStat]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "epoch,train_loss,val_loss,wall_time")?;
    for s in log {
        writeln!(file, "{},{:e},{:e},{:.3}", s.epoch, s.train_loss, s.val_loss, s.wall_time_s)?;
    }
    file.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::generate_random;
    use crate::nn::model::Head;
    use crate::pipeline::{label_instance, LabelConfig};

    fn tiny_cfg(head: Head) -> ModelConfig {
        ModelConfig {
            feature_dim: 8,
            rbf_count: 10,
            head_hidden: 16,
            head,
            seed: 5,
            ..Default::default()
        }
    }

    fn labeled(seed: u64) -> DatasetRecord {
        let geom = generate_random(4, 2.5, seed).unwrap();
        let cfg = LabelConfig { fci_max_qubits: 0, ..Default::default() };
        label_instance(&geom, seed, &cfg).unwrap()
    }

    #[test]
    fn overfits_single_instance() {
        let record = labeled(17);
        let records = vec![record; 8];
        let cfg = tiny_cfg(Head::Mixed);
        let hyper = Hyper {
            lr: 3e-3,
            batch: 8,
            epochs: 200,
            seed: 1,
            val_fraction: 0.0,
            ..Default::default()
        };
        let outcome = train(&cfg, &records, &hyper).unwrap();
        let last = outcome.log.last().unwrap();
        assert!(
            last.train_loss < 1e-4,
            "memorization failed: final loss {}",
            last.train_loss
        );
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let records: Vec<DatasetRecord> = (0..4).map(labeled).collect();
        let cfg = tiny_cfg(Head::Linear);
        let hyper = Hyper { epochs: 5, batch: 2, seed: 9, ..Default::default() };
        let a = train(&cfg, &records, &hyper).unwrap();
        let b = train(&cfg, &records, &hyper).unwrap();
        for (ta, tb) in a.params.tensors.iter().zip(b.params.tensors.iter()) {
            for i in 0..ta.len() {
                assert_eq!(ta[i].to_bits(), tb[i].to_bits());
            }
        }
    }

    #[test]
    fn loss_decreases_on_running_average() {
        let records: Vec<DatasetRecord> = (0..6).map(labeled).collect();
        let cfg = tiny_cfg(Head::Mixed);
        let hyper = Hyper { epochs: 60, batch: 4, seed: 2, val_fraction: 0.0, lr: 2e-3, ..Default::default() };
        let outcome = train(&cfg, &records, &hyper).unwrap();
        let window = |range: std::ops::Range<usize>| {
            let slice = &outcome.log[range];
            slice.iter().map(|s| s.train_loss).sum::<f64>() / slice.len() as f64
        };
        assert!(window(50..60) <= window(0..10) + 1e-12);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let cfg = tiny_cfg(Head::Linear);
        assert!(train(&cfg, &[], &Hyper::default()).is_err());
    }

    #[test]
    fn log_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let log = [EpochStat { epoch: 0, train_loss: 0.5, val_loss: 0.6, wall_time_s: 0.01 }];
        write_log_csv(&path, &log).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "epoch,train_loss,val_loss,wall_time");
        assert!(lines.next().unwrap().starts_with("0,"));
    }
}
