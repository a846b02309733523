//! Zero-shot fixed-variable evaluation: train on H4, then apply the
//! predicted angles directly (no re-optimization) to held-out H4 and to
//! never-seen H6 circuits, reporting ME/MSE/MAE in milliHartree.
//!
//!     cargo run --release --example zero_shot_eval

use spanet::eval::zero_shot_eval;
use spanet::nn::model::{Head, ModelConfig};
use spanet::nn::{train, Hyper};
use spanet::pipeline::{generate_dataset, read_records, DatasetSpec, LabelConfig};

fn main() -> spanet::Result<()> {
    let dir = std::env::temp_dir().join("spanet_example_eval");
    std::fs::create_dir_all(&dir)?;
    let label_cfg = LabelConfig { fci_max_qubits: 0, ..Default::default() };

    let train_path = dir.join("train_h4.jsonl");
    generate_dataset(
        &[DatasetSpec::Random { n_atoms: 4, count: 60, seed_start: 0, d_max: 2.5 }],
        &label_cfg,
        &train_path,
        false,
    )?;
    let eval_path = dir.join("eval.jsonl");
    generate_dataset(
        &[
            DatasetSpec::Random { n_atoms: 4, count: 20, seed_start: 1000, d_max: 2.5 },
            DatasetSpec::Random { n_atoms: 6, count: 10, seed_start: 1000, d_max: 2.5 },
        ],
        &label_cfg,
        &eval_path,
        false,
    )?;

    let cfg = ModelConfig {
        feature_dim: 16,
        head_hidden: 64,
        head: Head::Mixed,
        seed: 3,
        ..Default::default()
    };
    let hyper = Hyper { lr: 2e-3, batch: 8, epochs: 120, seed: 3, val_fraction: 0.1, ..Default::default() };
    let outcome = train(&cfg, &read_records(&train_path)?, &hyper)?;

    let report = zero_shot_eval(&cfg, &outcome.params, &read_records(&eval_path)?)?;
    println!("zero-shot transfer (trained on H4 only):");
    println!("  n   ME (mEh)    MSE (mEh²)  MAE (mEh)  outliers/count");
    for a in &report.aggregates {
        println!(
            "  {}  {:9.3}  {:11.3}  {:9.3}  {}/{}",
            a.n_atoms, a.me_meh, a.mse_meh2, a.mae_meh, a.outliers, a.count
        );
    }
    Ok(())
}
