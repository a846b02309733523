//! Zero-shot fixed-variable evaluation: apply predicted angles directly to
//! the stored circuits, compare against the baseline VQE energies, and
//! aggregate signed mean error (ME), mean squared error (MSE), mean absolute
//! error (MAE), standard deviation, and outlier counts per system size —
//! all in milliHartree. Also drives the structured linear/ring distance
//! sweeps.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geom::{generate_linear, generate_ring, GeometryKind, SweepSchedule};
use crate::nn::model::{predict, ModelConfig, ModelParams};
use crate::pipeline::{label_instance, DatasetRecord, LabelConfig};
use crate::spa::{expectation, prepare, SpaAnsatz};

pub const HARTREE_TO_MILLI: f64 = 1000.0;
/// Floor for absolute errors destined for log-scale plots.
pub const ABS_ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub id: String,
    pub n_atoms: usize,
    /// Baseline (stored VQE) energy, Hartree.
    pub e_baseline: f64,
    /// Energy with model-predicted angles, Hartree.
    pub e_model: f64,
    /// ΔE = (E_model − E_baseline) in mEh; positive when the model is above
    /// the baseline.
    pub de_meh: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeAggregate {
    pub n_atoms: usize,
    pub me_meh: f64,
    pub mse_meh2: f64,
    pub mae_meh: f64,
    /// Sample standard deviation of ΔE; `None` with fewer than 2 rows.
    pub stddev_meh: Option<f64>,
    /// Rows with |ΔE − mean| > stddev.
    pub outliers: usize,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregates: Vec<SizeAggregate>,
    /// Records skipped because the model output did not fit the circuit.
    pub excluded: usize,
}

/// Aggregate rows by atom count (ascending).
pub fn aggregate(rows: &[EvalRow]) -> Vec<SizeAggregate> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n_atoms).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let de: Vec<f64> = rows
                .iter()
                .filter(|r| r.n_atoms == n)
                .map(|r| r.de_meh)
                .collect();
            let count = de.len();
            let mean = de.iter().sum::<f64>() / count as f64;
            let mse = de.iter().map(|d| d * d).sum::<f64>() / count as f64;
            let mae = de.iter().map(|d| d.abs()).sum::<f64>() / count as f64;
            let stddev = if count >= 2 {
                let var = de.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
                    / (count - 1) as f64;
                Some(var.sqrt())
            } else {
                None
            };
            let outliers = match stddev {
                Some(s) => de.iter().filter(|d| (*d - mean).abs() > s).count(),
                None => 0,
            };
            SizeAggregate {
                n_atoms: n,
                me_meh: mean,
                mse_meh2: mse,
                mae_meh: mae,
                stddev_meh: stddev,
                outliers,
                count,
            }
        })
        .collect()
}

/// Evaluate a model on stored records: forward pass, apply the predicted
/// angles to the stored Hamiltonian, exact expectation, per-size aggregates.
/// Records whose prediction does not fit their circuit are excluded and
/// counted, not fatal.
pub fn zero_shot_eval(
    cfg: &ModelConfig,
    params: &ModelParams,
    records: &[DatasetRecord],
) -> Result<EvalReport> {
    let results: Vec<Result<EvalRow>> = records
        .par_iter()
        .map(|record| {
            let geom = record.geometry();
            let angles = predict(cfg, params, &geom, &record.matching)?;
            let ansatz = SpaAnsatz::new(&record.matching, angles)?;
            let e_model = expectation(&record.hamiltonian, &prepare(&ansatz))?;
            let de_meh = (e_model - record.e_spa_hartree) * HARTREE_TO_MILLI;
            Ok(EvalRow {
                id: format!("{}-{}-{}", record.kind, record.n_atoms(), record.seed),
                n_atoms: record.n_atoms(),
                e_baseline: record.e_spa_hartree,
                e_model,
                de_meh,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut excluded = 0;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(_) => excluded += 1,
        }
    }
    let aggregates = aggregate(&rows);
    Ok(EvalReport { rows, aggregates, excluded })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub kind: GeometryKind,
    pub n_atoms: usize,
    pub d_step_angstrom: f64,
    pub e_base: f64,
    pub e_model: f64,
    /// |E_model − E_base| in mEh, floored at [`ABS_ERROR_FLOOR`].
    pub abs_err_meh: f64,
    /// Baseline VQE convergence at this point (flagged, never dropped).
    pub converged: bool,
}

/// Full-pipeline baseline plus model prediction at every schedule point.
pub fn sweep_structured(
    cfg: &ModelConfig,
    params: &ModelParams,
    kind: GeometryKind,
    sched: &SweepSchedule,
    label_cfg: &LabelConfig,
) -> Result<Vec<SweepPoint>> {
    let points: Vec<Result<SweepPoint>> = (0..sched.points)
        .into_par_iter()
        .map(|k| {
            let geom = match kind {
                GeometryKind::Linear => generate_linear(sched, k)?,
                GeometryKind::Ring => generate_ring(sched, k)?,
                GeometryKind::Random => {
                    return Err(crate::error::Error::invalid(
                        "structured sweeps are linear or ring only",
                    ))
                }
            };
            let record = label_instance(&geom, k as u64, label_cfg)?;
            let angles = predict(cfg, params, &geom, &record.matching)?;
            let ansatz = SpaAnsatz::new(&record.matching, angles)?;
            let e_model = expectation(&record.hamiltonian, &prepare(&ansatz))?;
            let abs_err =
                ((e_model - record.e_spa_hartree).abs() * HARTREE_TO_MILLI).max(ABS_ERROR_FLOOR);
            Ok(SweepPoint {
                kind,
                n_atoms: sched.n_atoms,
                d_step_angstrom: sched.step_at(k)?,
                e_base: record.e_spa_hartree,
                e_model,
                abs_err_meh: abs_err,
                converged: record.converged,
            })
        })
        .collect();
    points.into_iter().collect()
}

// ---------------------------------------------------------------------------
// CSV output (stable column order, mandatory header row)
// ---------------------------------------------------------------------------

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_rows_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "id,n,B_x,M_x,dE_mEh")?;
    for r in rows {
        writeln!(f, "{},{},{:e},{:e},{:e}", r.id, r.n_atoms, r.e_baseline, r.e_model, r.de_meh)?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_aggregates_csv(path: &Path, aggregates: &[SizeAggregate]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "n,ME_mEh,MSE,stddev,outliers,count,MAE_mEh")?;
    for a in aggregates {
        let stddev = match a.stddev_meh {
            Some(s) => format!("{s:e}"),
            None => "null".to_string(),
        };
        writeln!(
            f,
            "{},{:e},{:e},{},{},{},{:e}",
            a.n_atoms, a.me_meh, a.mse_meh2, stddev, a.outliers, a.count, a.mae_meh
        )?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "kind,n,d_step_angstrom,E_base,E_model,abs_err_mEh")?;
    for p in points {
        writeln!(
            f,
            "{},{},{:e},{:e},{:e},{:e}",
            p.kind, p.n_atoms, p.d_step_angstrom, p.e_base, p.e_model, p.abs_err_meh
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::generate_random;
    use crate::nn::model::Head;
    use approx::assert_abs_diff_eq;

    fn labeled(seed: u64, n: usize) -> DatasetRecord {
        let geom = generate_random(n, 2.5, seed).unwrap();
        let cfg = LabelConfig { fci_max_qubits: 0, ..Default::default() };
        label_instance(&geom, seed, &cfg).unwrap()
    }

    /// A predictor stub that returns exactly the stored angles.
    fn identity_rows(records: &[DatasetRecord]) -> Vec<EvalRow> {
        records
            .iter()
            .map(|r| EvalRow {
                id: format!("{}-{}-{}", r.kind, r.n_atoms(), r.seed),
                n_atoms: r.n_atoms(),
                e_baseline: r.e_spa_hartree,
                e_model: r.e_spa_hartree,
                de_meh: 0.0,
            })
            .collect()
    }

    #[test]
    fn identity_predictor_scores_zero() {
        let records: Vec<DatasetRecord> = (0..3).map(|s| labeled(s, 4)).collect();
        let agg = aggregate(&identity_rows(&records));
        assert_eq!(agg.len(), 1);
        assert_abs_diff_eq!(agg[0].me_meh, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(agg[0].mse_meh2, 0.0, epsilon = 1e-12);
        assert_eq!(agg[0].outliers, 0);
        assert_eq!(agg[0].count, 3);
    }

    #[test]
    fn zero_angle_predictor_has_positive_me() {
        // θ = 0 is the uncorrelated reference; on optimized records its
        // energy is strictly above baseline.
        let records: Vec<DatasetRecord> = (0..3).map(|s| labeled(s, 4)).collect();
        let rows: Vec<EvalRow> = records
            .iter()
            .map(|r| {
                let ansatz = SpaAnsatz::new(&r.matching, vec![0.0; r.matching.n_pairs()]).unwrap();
                let e = expectation(&r.hamiltonian, &prepare(&ansatz)).unwrap();
                EvalRow {
                    id: String::new(),
                    n_atoms: r.n_atoms(),
                    e_baseline: r.e_spa_hartree,
                    e_model: e,
                    de_meh: (e - r.e_spa_hartree) * HARTREE_TO_MILLI,
                }
            })
            .collect();
        let agg = aggregate(&rows);
        assert!(agg[0].me_meh > 0.0);
        // ME/MSE recomputable from rows exactly.
        let me: f64 = rows.iter().map(|r| r.de_meh).sum::<f64>() / rows.len() as f64;
        assert_abs_diff_eq!(agg[0].me_meh, me, epsilon = 1e-14);
    }

    #[test]
    fn synthetic_outlier_count() {
        let rows: Vec<EvalRow> = [0.0, 0.0, 0.0, 10.0]
            .iter()
            .map(|&d| EvalRow {
                id: String::new(),
                n_atoms: 4,
                e_baseline: 0.0,
                e_model: 0.0,
                de_meh: d,
            })
            .collect();
        let agg = aggregate(&rows);
        assert_eq!(agg[0].outliers, 1);
        // All-identical ΔE → zero variance → no outliers.
        let same: Vec<EvalRow> = rows
            .iter()
            .map(|r| EvalRow { de_meh: 2.0, ..r.clone() })
            .collect();
        assert_eq!(aggregate(&same)[0].outliers, 0);
    }

    #[test]
    fn single_row_group_has_null_stddev() {
        let rows = vec![EvalRow {
            id: String::new(),
            n_atoms: 2,
            e_baseline: 0.0,
            e_model: 0.0,
            de_meh: 1.0,
        }];
        let agg = aggregate(&rows);
        assert!(agg[0].stddev_meh.is_none());
        assert_eq!(agg[0].outliers, 0);
    }

    #[test]
    fn zero_shot_eval_end_to_end() {
        let records: Vec<DatasetRecord> = (0..2).map(|s| labeled(s, 4)).collect();
        let cfg = ModelConfig {
            feature_dim: 8,
            rbf_count: 10,
            head_hidden: 16,
            head: Head::Mixed,
            seed: 1,
            ..Default::default()
        };
        let params = ModelParams::init(&cfg);
        let report = zero_shot_eval(&cfg, &params, &records).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.excluded, 0);
        // Untrained model can't beat the optimized baseline.
        for row in &report.rows {
            assert!(row.de_meh >= -1e-3);
        }
    }

    #[test]
    fn sweep_has_interior_minimum_and_csv_contract() {
        let cfg = ModelConfig {
            feature_dim: 8,
            rbf_count: 10,
            head_hidden: 16,
            head: Head::Mixed,
            seed: 1,
            ..Default::default()
        };
        let params = ModelParams::init(&cfg);
        let sched = SweepSchedule::new(2, 8, 0.5, 2.5).unwrap();
        let label_cfg = LabelConfig { fci_max_qubits: 0, ..Default::default() };
        let points =
            sweep_structured(&cfg, &params, GeometryKind::Linear, &sched, &label_cfg).unwrap();
        assert_eq!(points.len(), 8);
        let energies: Vec<f64> = points.iter().map(|p| p.e_base).collect();
        let min_idx = energies
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(min_idx > 0 && min_idx < energies.len() - 1, "interior minimum expected");
        assert!(points.iter().all(|p| p.abs_err_meh >= ABS_ERROR_FLOOR));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&path, &points).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("kind,n,d_step_angstrom,E_base,E_model,abs_err_mEh\n"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn csv_headers_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let rows_path = dir.path().join("rows.csv");
        let agg_path = dir.path().join("agg.csv");
        write_rows_csv(&rows_path, &[]).unwrap();
        write_aggregates_csv(&agg_path, &[]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&rows_path).unwrap(),
            "id,n,B_x,M_x,dE_mEh\n"
        );
        assert_eq!(
            std::fs::read_to_string(&agg_path).unwrap(),
            "n,ME_mEh,MSE,stddev,outliers,count,MAE_mEh\n"
        );
    }
}
