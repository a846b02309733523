//! End-to-end labeling: geometry → matching → Hamiltonian (with orbital
//! optimization) → VQE → normalized angles → persisted dataset record.
//!
//! Records are stored as JSONL, one object per line, with floats written at
//! 17 significant digits so files are byte-reproducible across runs.
//! Generation is resumable: instances already present in the output file are
//! skipped, and the finalized file is sorted by (kind, size, seed) so its
//! content does not depend on worker count.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    generate_linear, generate_random, generate_ring, Geometry, GeometryKind, SweepSchedule,
};
use crate::hamiltonian::{
    lowdin_orbitals, permute_to_pair_order, rotate_orbitals, to_qubit_blocked,
    exact_ground_energy, contract_energy, MoTensors, OrbitalRotation,
};
use crate::integrals::{build_basis, compute_integrals};
use crate::matching::{best_matching, greedy_matching, PairMatching, EXACT_MATCHING_LIMIT};
use crate::optimize::{self, Method, Options};
use crate::pauli::PauliPolynomial;
use crate::spa::{self, expectation, gradient, prepare, SpaAnsatz};

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Alternate orbital and angle optimization; off = Löwdin orbitals only.
    pub orbital_opt: bool,
    pub outer_cycles: usize,
    pub vqe_max_iter: usize,
    pub vqe_grad_tol: f64,
    /// Multi-start count for the angle optimization (θ=0, θ=π/2 and seeded
    /// uniform draws).
    pub restarts: usize,
    pub kappa_max_iter: usize,
    pub kappa_fd_step: f64,
    /// Compute and store E_FCI when the qubit count is at most this (≤ 16;
    /// 0 disables).
    pub fci_max_qubits: usize,
    /// Plain gradient descent instead of quasi-Newton for the angles.
    pub gradient_descent: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            orbital_opt: true,
            outer_cycles: 2,
            vqe_max_iter: 500,
            vqe_grad_tol: 1e-7,
            restarts: 4,
            kappa_max_iter: 50,
            kappa_fd_step: 1e-4,
            fci_max_qubits: 12,
            gradient_descent: false,
        }
    }
}

/// The stored tuple of one labeled instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub version: u32,
    pub kind: GeometryKind,
    pub seed: u64,
    pub coords_angstrom: Vec<[f64; 3]>,
    pub matching: PairMatching,
    /// Orbital-rotation generator relative to the pair-blocked Löwdin basis.
    pub kappa: Vec<Vec<f64>>,
    pub hamiltonian: PauliPolynomial,
    pub e_spa_hartree: f64,
    pub theta: Vec<f64>,
    pub e_fci_hartree: Option<f64>,
    pub converged: bool,
}

impl DatasetRecord {
    pub fn n_atoms(&self) -> usize {
        self.coords_angstrom.len()
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            coords: self.coords_angstrom.clone(),
            kind: self.kind,
            seed: Some(self.seed),
            step: None,
        }
    }

    /// Recompute E_SPA from the stored Hamiltonian and angles.
    pub fn recompute_energy(&self) -> Result<f64> {
        let ansatz = SpaAnsatz::new(&self.matching, self.theta.clone())?;
        expectation(&self.hamiltonian, &prepare(&ansatz))
    }

    /// Check the stored invariants: energy self-consistency, the variational
    /// bound against E_FCI, and angle normalization.
    pub fn validate(&self) -> Result<()> {
        let recomputed = self.recompute_energy()?;
        if (recomputed - self.e_spa_hartree).abs() > 1e-8 {
            return Err(Error::data(format!(
                "stored E_SPA {} differs from recomputed {} by {:.3e}",
                self.e_spa_hartree,
                recomputed,
                (recomputed - self.e_spa_hartree).abs()
            )));
        }
        if let Some(e_fci) = self.e_fci_hartree {
            if e_fci > self.e_spa_hartree + 1e-8 {
                return Err(Error::data(format!(
                    "E_FCI {} exceeds E_SPA {}",
                    e_fci, self.e_spa_hartree
                )));
            }
        }
        for &t in &self.theta {
            if !(t > -std::f64::consts::PI - 1e-12 && t <= std::f64::consts::PI + 1e-12) {
                return Err(Error::data(format!("angle {t} outside (−π, π]")));
            }
        }
        Ok(())
    }
}

/// Angle VQE with multi-start: θ=0, θ=π/2, seeded uniform draws, plus an
/// optional warm start from the previous cycle (keeps the energy monotone
/// across orbital-rotation cycles). Returns (angles, energy, converged).
fn optimize_angles(
    h: &PauliPolynomial,
    matching: &PairMatching,
    seed: u64,
    cfg: &LabelConfig,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, f64, bool)> {
    let n_pairs = matching.n_pairs();
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.restarts.max(1) + 1);
    starts.push(vec![0.0; n_pairs]);
    if cfg.restarts > 1 {
        starts.push(vec![std::f64::consts::FRAC_PI_2; n_pairs]);
    }
    if let Some(warm) = warm_start {
        starts.push(warm.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ba_1ab1e);
    while starts.len() < cfg.restarts.max(1) {
        starts.push(
            (0..n_pairs)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        );
    }

    let template = SpaAnsatz::new(matching, vec![0.0; n_pairs])?;
    let opts = Options {
        max_iter: cfg.vqe_max_iter,
        grad_tol: cfg.vqe_grad_tol,
        method: if cfg.gradient_descent { Method::GradientDescent } else { Method::Bfgs },
    };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for start in starts {
        let energy_fn = |angles: &[f64]| {
            let ansatz = template.with_angles(angles.to_vec());
            expectation(h, &prepare(&ansatz)).expect("qubit count checked")
        };
        let grad_fn = |angles: &[f64]| {
            let ansatz = template.with_angles(angles.to_vec());
            gradient(h, &ansatz).expect("qubit count checked")
        };
        let m = optimize::minimize(energy_fn, grad_fn, &start, &opts);
        if best.as_ref().map_or(true, |(_, e, _)| m.value < *e) {
            best = Some((m.x, m.value, m.converged));
        }
    }
    let (angles, energy, converged) = best.expect("at least one start");
    Ok((angles.into_iter().map(spa::normalize_angle).collect(), energy, converged))
}

/// Label one geometry: matching, integrals, Löwdin orbitals, alternating
/// orbital/angle optimization, final VQE, optional exact diagonalization.
pub fn label_instance(geom: &Geometry, seed: u64, cfg: &LabelConfig) -> Result<DatasetRecord> {
    let n = geom.n_atoms();
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid("labeling needs an even atom count ≥ 2"));
    }
    let matching = if n <= EXACT_MATCHING_LIMIT {
        best_matching(geom)?
    } else {
        greedy_matching(geom)?
    };
    let tables = compute_integrals(&build_basis(geom))?;
    let (_, tensors) = lowdin_orbitals(&tables)?;
    let blocked = permute_to_pair_order(&tensors, &matching);

    let kappa_dim = n * (n - 1) / 2;
    let mut kappa_params = vec![0.0; kappa_dim];

    let tensors_at = |params: &[f64]| -> MoTensors {
        let rot = OrbitalRotation::from_upper_triangle(n, params).expect("antisymmetric");
        rotate_orbitals(&blocked, &rot)
    };

    let mut h = to_qubit_blocked(&blocked)?;
    let mut theta = vec![0.0; n / 2];
    let mut e_spa;
    let mut converged;

    if cfg.orbital_opt && cfg.outer_cycles > 0 {
        // Each cycle optimizes the orbitals at the current angles, then
        // re-optimizes the angles. The first κ step runs at θ = 0 (the
        // closed-shell reference), which breaks the atom-permutation
        // symmetry that otherwise leaves κ = 0 a stationary saddle for
        // symmetric geometries.
        let template = SpaAnsatz::new(&matching, vec![0.0; n / 2])?;
        e_spa = f64::INFINITY;
        converged = false;
        for _cycle in 0..cfg.outer_cycles {
            // Minimize over κ at fixed θ; the energy is a cheap contraction
            // of rotated tensors with the state's reduced density matrices.
            let ansatz = template.with_angles(theta.clone());
            let (one_rdm, two_rdm) = spa::pair_rdms(&ansatz);
            let energy_of = |params: &[f64]| {
                contract_energy(&tensors_at(params), &one_rdm, &two_rdm)
            };
            let fd_step = cfg.kappa_fd_step;
            let grad_of = |params: &[f64]| {
                optimize::central_difference_grad(energy_of, params, fd_step)
            };
            let opts = Options {
                max_iter: cfg.kappa_max_iter,
                grad_tol: 1e-7,
                method: Method::Bfgs,
            };
            let m = optimize::minimize(energy_of, grad_of, &kappa_params, &opts);
            kappa_params = m.x;

            h = to_qubit_blocked(&tensors_at(&kappa_params))?;
            let (t, e, c) = optimize_angles(&h, &matching, seed, cfg, Some(&theta))?;
            theta = t;
            e_spa = e;
            converged = c;
        }
    } else {
        let (t, e, c) = optimize_angles(&h, &matching, seed, cfg, None)?;
        theta = t;
        e_spa = e;
        converged = c;
    }

    let e_fci = if 2 * n <= cfg.fci_max_qubits.min(16) && cfg.fci_max_qubits > 0 {
        Some(exact_ground_energy(&h, n)?)
    } else {
        None
    };

    let rot = OrbitalRotation::from_upper_triangle(n, &kappa_params)?;
    let kappa: Vec<Vec<f64>> =
        (0..n).map(|p| (0..n).map(|q| rot.kappa()[(p, q)]).collect()).collect();

    Ok(DatasetRecord {
        version: RECORD_VERSION,
        kind: geom.kind,
        seed,
        coords_angstrom: geom.coords.clone(),
        matching,
        kappa,
        hamiltonian: h,
        e_spa_hartree: e_spa,
        theta,
        e_fci_hartree: e_fci,
        converged,
    })
}

// ---------------------------------------------------------------------------
// JSONL serialization
// ---------------------------------------------------------------------------

/// 17 significant digits: round-trips any f64 exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl DatasetRecord {
    pub fn to_json_line(&self) -> String {
        let mut s = String::with_capacity(4096);
        s.push_str(&format!(
            "{{\"version\":{},\"kind\":\"{}\",\"seed\":{},",
            self.version, self.kind, self.seed
        ));
        s.push_str("\"coords_angstrom\":[");
        for (i, c) in self.coords_angstrom.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{},{},{}]", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(c[2])));
        }
        s.push_str("],\"matching\":[");
        for (i, &(a, b)) in self.matching.pairs.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{a},{b}]"));
        }
        s.push_str("],\"kappa\":[");
        for (i, row) in self.kappa.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                s.push_str(&fmt_f64(*v));
            }
            s.push(']');
        }
        s.push_str("],\"pauli_terms\":[");
        for (i, (word, coeff)) in self.hamiltonian.to_pairs().iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[\"{word}\",{}]", fmt_f64(*coeff)));
        }
        s.push_str(&format!("],\"e_spa_hartree\":{},", fmt_f64(self.e_spa_hartree)));
        s.push_str("\"theta\":[");
        for (i, t) in self.theta.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&fmt_f64(*t));
        }
        s.push_str("],\"e_fci_hartree\":");
        match self.e_fci_hartree {
            Some(e) => s.push_str(&fmt_f64(e)),
            None => s.push_str("null"),
        }
        s.push_str(&format!(",\"converged\":{}}}", self.converged));
        s
    }
}

#[derive(Deserialize)]
struct RecordJson {
    version: u32,
    kind: GeometryKind,
    seed: u64,
    coords_angstrom: Vec<[f64; 3]>,
    matching: Vec<[usize; 2]>,
    kappa: Vec<Vec<f64>>,
    pauli_terms: Vec<(String, f64)>,
    e_spa_hartree: f64,
    theta: Vec<f64>,
    e_fci_hartree: Option<f64>,
    converged: bool,
}

pub fn record_from_json(line: &str) -> Result<DatasetRecord> {
    let raw: RecordJson = serde_json::from_str(line)?;
    if raw.version != RECORD_VERSION {
        return Err(Error::data(format!(
            "unsupported record version {} (expected {RECORD_VERSION})",
            raw.version
        )));
    }
    let geometry = Geometry {
        coords: raw.coords_angstrom.clone(),
        kind: raw.kind,
        seed: Some(raw.seed),
        step: None,
    };
    let pairs: Vec<(usize, usize)> = raw.matching.iter().map(|p| (p[0], p[1])).collect();
    let weights: Vec<f64> = pairs.iter().map(|&(a, b)| geometry.distance(a, b)).collect();
    let total_weight = weights.iter().sum();
    let n_qubits = 2 * raw.coords_angstrom.len();
    Ok(DatasetRecord {
        version: raw.version,
        kind: raw.kind,
        seed: raw.seed,
        coords_angstrom: raw.coords_angstrom,
        matching: PairMatching { pairs, weights, total_weight },
        kappa: raw.kappa,
        hamiltonian: PauliPolynomial::from_pairs(&raw.pauli_terms, n_qubits)?,
        e_spa_hartree: raw.e_spa_hartree,
        theta: raw.theta,
        e_fci_hartree: raw.e_fci_hartree,
        converged: raw.converged,
    })
}

/// Read a JSONL dataset; parse failures report the 1-based line number.
pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = record_from_json(&line)
            .map_err(|e| Error::data_at(idx + 1, format!("{e}")))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        writeln!(file, "{}", r.to_json_line())?;
    }
    file.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

/// One family of instances to generate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSpec {
    Random { n_atoms: usize, count: usize, seed_start: u64, d_max: f64 },
    /// One record per sweep index k, with seed = k.
    Linear { schedule: SweepSchedule },
    Ring { schedule: SweepSchedule },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerationReport {
    pub written: usize,
    pub skipped_existing: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Copy)]
struct InstanceKey {
    kind: GeometryKind,
    n_atoms: usize,
    seed: u64,
}

fn instance_keys(specs: &[DatasetSpec]) -> Vec<(InstanceKey, DatasetSpec)> {
    let mut out = Vec::new();
    for spec in specs {
        match spec {
            DatasetSpec::Random { n_atoms, count, seed_start, .. } => {
                for i in 0..*count {
                    out.push((
                        InstanceKey {
                            kind: GeometryKind::Random,
                            n_atoms: *n_atoms,
                            seed: seed_start + i as u64,
                        },
                        spec.clone(),
                    ));
                }
            }
            DatasetSpec::Linear { schedule } => {
                for k in 0..schedule.points {
                    out.push((
                        InstanceKey {
                            kind: GeometryKind::Linear,
                            n_atoms: schedule.n_atoms,
                            seed: k as u64,
                        },
                        spec.clone(),
                    ));
                }
            }
            DatasetSpec::Ring { schedule } => {
                for k in 0..schedule.points {
                    out.push((
                        InstanceKey {
                            kind: GeometryKind::Ring,
                            n_atoms: schedule.n_atoms,
                            seed: k as u64,
                        },
                        spec.clone(),
                    ));
                }
            }
        }
    }
    out
}

fn build_geometry(key: &InstanceKey, spec: &DatasetSpec) -> Result<Geometry> {
    match spec {
        DatasetSpec::Random { d_max, .. } => generate_random(key.n_atoms, *d_max, key.seed),
        DatasetSpec::Linear { schedule } => generate_linear(schedule, key.seed as usize),
        DatasetSpec::Ring { schedule } => generate_ring(schedule, key.seed as usize),
    }
}

fn kind_order(kind: GeometryKind) -> u8 {
    match kind {
        GeometryKind::Random => 0,
        GeometryKind::Linear => 1,
        GeometryKind::Ring => 2,
    }
}

/// Generate (or resume) a JSONL dataset. Instances already present in the
/// output are skipped; the finalized file is sorted by (kind, size, seed) so
/// content is independent of worker count. A sidecar manifest records the
/// resolved spec. With `keep_going`, failed instances are counted and
/// skipped instead of aborting.
pub fn generate_dataset(
    specs: &[DatasetSpec],
    cfg: &LabelConfig,
    out_path: &Path,
    keep_going: bool,
) -> Result<GenerationReport> {
    let mut existing: Vec<DatasetRecord> = if out_path.exists() {
        read_records(out_path)?
    } else {
        Vec::new()
    };
    let present: BTreeSet<(u8, usize, u64)> = existing
        .iter()
        .map(|r| (kind_order(r.kind), r.n_atoms(), r.seed))
        .collect();

    let todo: Vec<(InstanceKey, DatasetSpec)> = instance_keys(specs)
        .into_iter()
        .filter(|(k, _)| !present.contains(&(kind_order(k.kind), k.n_atoms, k.seed)))
        .collect();
    let skipped_existing = existing.len();

    let results: Vec<(InstanceKey, Result<DatasetRecord>)> = todo
        .par_iter()
        .map(|(key, spec)| {
            let record = build_geometry(key, spec)
                .and_then(|geom| label_instance(&geom, key.seed, cfg));
            (*key, record)
        })
        .collect();

    let mut failed = 0;
    let mut written = 0;
    for (key, result) in results {
        match result {
            Ok(record) => {
                existing.push(record);
                written += 1;
            }
            Err(e) => {
                if !keep_going {
                    return Err(e);
                }
                eprintln!(
                    "instance {} n={} seed={} failed: {e}",
                    key.kind, key.n_atoms, key.seed
                );
                failed += 1;
            }
        }
    }

    existing.sort_by_key(|r| (kind_order(r.kind), r.n_atoms(), r.seed));
    write_records(out_path, &existing)?;

    let manifest = serde_json::json!({
        "version": RECORD_VERSION,
        "specs": specs,
        "records": existing.len(),
    });
    let manifest_path = out_path.with_extension("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    Ok(GenerationReport { written, skipped_existing, failed })
}
