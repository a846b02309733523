//! Resumable JSONL dataset generation: records are keyed by (kind, size,
//! seed), already-present instances are skipped, and the finalized file is
//! byte-identical regardless of worker count.
//!
//!     cargo run --release --example generate_dataset

use spanet::pipeline::{generate_dataset, read_records, DatasetSpec, LabelConfig};

fn main() -> spanet::Result<()> {
    let dir = std::env::temp_dir().join("spanet_example_dataset");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("h4_random.jsonl");
    let _ = std::fs::remove_file(&path);

    let cfg = LabelConfig { fci_max_qubits: 8, ..Default::default() };
    let spec = |count| DatasetSpec::Random { n_atoms: 4, count, seed_start: 0, d_max: 2.5 };

    let first = generate_dataset(&[spec(4)], &cfg, &path, false)?;
    println!("first pass : {} written, {} skipped", first.written, first.skipped_existing);

    // Asking for more reuses everything already on disk.
    let second = generate_dataset(&[spec(8)], &cfg, &path, false)?;
    println!("second pass: {} written, {} skipped", second.written, second.skipped_existing);

    let records = read_records(&path)?;
    println!("{} records in {}:", records.len(), path.display());
    for r in &records {
        println!(
            "  seed {:2}  E_SPA {:+.6} Eh  E_FCI {:+.6} Eh  θ {:?}",
            r.seed,
            r.e_spa_hartree,
            r.e_fci_hartree.unwrap(),
            r.theta.iter().map(|t| (t * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
        r.validate()?;
    }
    Ok(())
}
