//! Train a small mixed-head angle predictor on freshly generated H4 data
//! and watch the loss fall. Training is bit-deterministic for a fixed seed.
//!
//!     cargo run --release --example train_predictor

use spanet::nn::model::{Head, ModelConfig};
use spanet::nn::{train, Hyper};
use spanet::pipeline::{generate_dataset, read_records, DatasetSpec, LabelConfig};

fn main() -> spanet::Result<()> {
    let dir = std::env::temp_dir().join("spanet_example_train");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("h4.jsonl");

    let label_cfg = LabelConfig { fci_max_qubits: 0, ..Default::default() };
    let spec = DatasetSpec::Random { n_atoms: 4, count: 40, seed_start: 0, d_max: 2.5 };
    generate_dataset(&[spec], &label_cfg, &path, false)?;
    let records = read_records(&path)?;

    let cfg = ModelConfig {
        feature_dim: 16,
        rbf_count: 50,
        head_hidden: 64,
        head: Head::Mixed,
        seed: 1,
        ..Default::default()
    };
    let hyper = Hyper { lr: 2e-3, batch: 8, epochs: 80, seed: 1, val_fraction: 0.1, ..Default::default() };
    let outcome = train(&cfg, &records, &hyper)?;

    println!("epoch  train_loss   val_loss");
    for s in outcome.log.iter().step_by(10).chain(outcome.log.last()) {
        println!("{:5}  {:10.6}  {:10.6}", s.epoch, s.train_loss, s.val_loss);
    }
    println!(
        "\n{} trainable scalars; final train loss {:.3e} (rad²)",
        outcome.params.n_scalars(),
        outcome.log.last().unwrap().train_loss
    );
    Ok(())
}
