//! From integral tables to qubit Hamiltonians: Löwdin orthogonalization,
//! orbital rotations exp(κ), the Jordan–Wigner image of the second-quantized
//! operator, and exact lowest eigenvalues in the fixed-particle-number
//! sector as a testing oracle.
//!
//! Qubit layout: orbitals are re-indexed so pair p owns orbitals (2p, 2p+1);
//! orbital o maps to qubits 2o (spin-up) and 2o+1 (spin-down), so pair p
//! owns the contiguous qubit block 4p..4p+3.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrals::{Eri, IntegralTables};
use crate::matching::PairMatching;
use crate::pauli::{jw_annihilation, jw_creation, PauliPolynomial, PauliSum};

/// Electronic Hamiltonian ingredients in an orthonormal orbital basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MoTensors {
    /// One-electron integrals h_pq (Hartree).
    pub one_body: DMatrix<f64>,
    /// Two-electron integrals (pq|rs) in chemists' notation (Hartree).
    pub two_body: Eri,
    /// Nuclear repulsion (Hartree).
    pub e_nn: f64,
}

impl MoTensors {
    pub fn n_orbitals(&self) -> usize {
        self.one_body.nrows()
    }
}

/// Antisymmetric generator κ and its orthogonal exponential R = exp(κ).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalRotation {
    kappa: DMatrix<f64>,
}

impl OrbitalRotation {
    pub fn identity(n: usize) -> Self {
        OrbitalRotation { kappa: DMatrix::zeros(n, n) }
    }

    pub fn new(kappa: DMatrix<f64>) -> Result<Self> {
        if kappa.nrows() != kappa.ncols() {
            return Err(Error::invalid("kappa must be square"));
        }
        let asym = (&kappa + kappa.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::invalid(format!(
                "kappa must be antisymmetric (|κ + κᵀ|∞ = {asym:.3e})"
            )));
        }
        Ok(OrbitalRotation { kappa })
    }

    /// Generator from its strict upper triangle, row-major (p < q).
    pub fn from_upper_triangle(n: usize, params: &[f64]) -> Result<Self> {
        if params.len() != n * (n - 1) / 2 {
            return Err(Error::invalid("wrong parameter count for kappa"));
        }
        let mut kappa = DMatrix::zeros(n, n);
        let mut idx = 0;
        for p in 0..n {
            for q in (p + 1)..n {
                kappa[(p, q)] = params[idx];
                kappa[(q, p)] = -params[idx];
                idx += 1;
            }
        }
        Ok(OrbitalRotation { kappa })
    }

    pub fn kappa(&self) -> &DMatrix<f64> {
        &self.kappa
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.kappa.nrows();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for p in 0..n {
            for q in (p + 1)..n {
                out.push(self.kappa[(p, q)]);
            }
        }
        out
    }

    /// R = exp(κ) by scaling-and-squaring with a Taylor series.
    pub fn matrix(&self) -> DMatrix<f64> {
        expm(&self.kappa)
    }
}

fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.amax();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = (&term * &scaled) / k as f64;
        result += &term;
        if term.amax() < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Transform one- and two-electron tensors into the basis defined by the
/// columns of `c`: h' = cᵀ h c, (pq|rs)' contracted on all four indices.
pub fn transform_tensors(h: &DMatrix<f64>, eri: &Eri, c: &DMatrix<f64>) -> (DMatrix<f64>, Eri) {
    let n = h.nrows();
    let h_new = c.transpose() * h * c;

    // Staged O(n^5) four-index transform.
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let mut g = vec![0.0; n * n * n * n];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    g[idx(p, q, r, s)] = eri.get(p, q, r, s);
                }
            }
        }
    }
    for axis in 0..4 {
        let mut out = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = g[idx(p, q, r, s)];
                        if v == 0.0 {
                            continue;
                        }
                        for t in 0..n {
                            let target = match axis {
                                0 => idx(t, q, r, s),
                                1 => idx(p, t, r, s),
                                2 => idx(p, q, t, s),
                                _ => idx(p, q, r, t),
                            };
                            let coeff = match axis {
                                0 => c[(p, t)],
                                1 => c[(q, t)],
                                2 => c[(r, t)],
                                _ => c[(s, t)],
                            };
                            out[target] += coeff * v;
                        }
                    }
                }
            }
        }
        g = out;
    }
    let mut eri_new = Eri::zeros(n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    eri_new.set(p, q, r, s, g[idx(p, q, r, s)]);
                }
            }
        }
    }
    (h_new, eri_new)
}

/// Symmetric (Löwdin) orthogonalization: C = S^(−1/2). Returns the MO
/// coefficients and the transformed tensors.
pub fn lowdin_orbitals(tables: &IntegralTables) -> Result<(DMatrix<f64>, MoTensors)> {
    let eig = tables.overlap.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min <= 0.0 || max / min > 1e10 {
        return Err(Error::LinearDependence(if min > 0.0 { max / min } else { f64::INFINITY }));
    }
    let n = tables.n_orbitals();
    let mut inv_sqrt = DMatrix::zeros(n, n);
    for i in 0..n {
        inv_sqrt[(i, i)] = eig.eigenvalues[i].sqrt().recip();
    }
    let c = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let (h, eri) = transform_tensors(&tables.core(), &tables.eri, &c);
    Ok((c.clone(), MoTensors { one_body: h, two_body: eri, e_nn: tables.e_nn }))
}

/// Apply an orbital rotation: tensors transformed by R = exp(κ). The qubit
/// Hamiltonian spectrum is unchanged; only the pair decomposition improves.
pub fn rotate_orbitals(tensors: &MoTensors, rot: &OrbitalRotation) -> MoTensors {
    let r = rot.matrix();
    let (h, eri) = transform_tensors(&tensors.one_body, &tensors.two_body, &r);
    MoTensors { one_body: h, two_body: eri, e_nn: tensors.e_nn }
}

/// Re-index orbitals so matching pair p owns orbitals (2p, 2p+1).
pub fn permute_to_pair_order(tensors: &MoTensors, pair_order: &PairMatching) -> MoTensors {
    let n = tensors.n_orbitals();
    let mut perm = Vec::with_capacity(n);
    for &(a, b) in &pair_order.pairs {
        perm.push(a);
        perm.push(b);
    }
    debug_assert_eq!(perm.len(), n);
    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            h[(p, q)] = tensors.one_body[(perm[p], perm[q])];
        }
    }
    let mut eri = Eri::zeros(n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    eri.set(p, q, r, s, tensors.two_body.get(perm[p], perm[q], perm[r], perm[s]));
                }
            }
        }
    }
    MoTensors { one_body: h, two_body: eri, e_nn: tensors.e_nn }
}

/// Excitation operators E^σ_pq = a†_{2p+σ} a_{2q+σ} for all orbital pairs.
fn excitation_table(n_orb: usize) -> Vec<Vec<[PauliSum; 2]>> {
    let creations: Vec<[PauliSum; 2]> = (0..n_orb)
        .map(|o| [jw_creation(2 * o), jw_creation(2 * o + 1)])
        .collect();
    let annihilations: Vec<[PauliSum; 2]> = (0..n_orb)
        .map(|o| [jw_annihilation(2 * o), jw_annihilation(2 * o + 1)])
        .collect();
    (0..n_orb)
        .map(|p| {
            (0..n_orb)
                .map(|q| {
                    [
                        creations[p][0].mul(&annihilations[q][0]),
                        creations[p][1].mul(&annihilations[q][1]),
                    ]
                })
                .collect()
        })
        .collect()
}

/// Jordan–Wigner image of
/// Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ + E_nn
/// for tensors already in pair-blocked orbital order.
pub fn to_qubit_blocked(tensors: &MoTensors) -> Result<PauliPolynomial> {
    let n = tensors.n_orbitals();
    let n_qubits = 2 * n;
    if n_qubits > 64 {
        return Err(Error::UnsupportedSize("more than 64 qubits".into()));
    }
    let exc = excitation_table(n);
    let mut sum = PauliSum::identity(Complex64::new(tensors.e_nn, 0.0));

    for p in 0..n {
        for q in 0..n {
            let h = tensors.one_body[(p, q)];
            if h.abs() < 1e-14 {
                continue;
            }
            for spin in 0..2 {
                sum.add_sum(&exc[p][q][spin].scaled(Complex64::new(h, 0.0)));
            }
        }
    }

    // a†_P a†_R a_S a_Q = E_PQ·E_RS − δ_QR E_PS (spin-orbital indices).
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let g = tensors.two_body.get(p, q, r, s);
                    if g.abs() < 1e-14 {
                        continue;
                    }
                    let half_g = Complex64::new(0.5 * g, 0.0);
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            let prod = exc[p][q][sigma].mul(&exc[r][s][tau]);
                            sum.add_sum(&prod.scaled(half_g));
                            if sigma == tau && q == r {
                                sum.add_sum(&exc[p][s][sigma].scaled(-half_g));
                            }
                        }
                    }
                }
            }
        }
    }

    PauliPolynomial::from_sum(&sum, n_qubits)
}

/// Permute orbitals into the matching's pair-blocked order, then map to
/// qubits via Jordan–Wigner.
pub fn to_qubit(tensors: &MoTensors, pair_order: &PairMatching) -> Result<PauliPolynomial> {
    to_qubit_blocked(&permute_to_pair_order(tensors, pair_order))
}

/// Energy of a state with the given spatial reduced density matrices against
/// pair-blocked tensors:
/// E = E_nn + Σ h_pq D_pq + ½ Σ (pq|rs) Γ_pqrs.
pub fn contract_energy(tensors: &MoTensors, one_rdm: &DMatrix<f64>, two_rdm: &Eri) -> f64 {
    let n = tensors.n_orbitals();
    let mut e = tensors.e_nn;
    for p in 0..n {
        for q in 0..n {
            e += tensors.one_body[(p, q)] * one_rdm[(p, q)];
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    e += 0.5 * tensors.two_body.get(p, q, r, s) * two_rdm.get(p, q, r, s);
                }
            }
        }
    }
    e
}

/// Basis states of the fixed-particle-number sector (popcount = n_electrons),
/// ascending.
fn sector_basis(n_qubits: usize, n_electrons: usize) -> Vec<u64> {
    (0..1u64 << n_qubits)
        .filter(|b| b.count_ones() as usize == n_electrons)
        .collect()
}

const DENSE_SECTOR_LIMIT: usize = 1400;

/// Lowest eigenvalue of the polynomial restricted to the fixed-particle
/// sector. Dense symmetric eigensolve for small sectors, Lanczos with full
/// reorthogonalization otherwise. Refuses more than 16 qubits.
pub fn exact_ground_energy(h: &PauliPolynomial, n_electrons: usize) -> Result<f64> {
    if h.n_qubits > 16 {
        return Err(Error::UnsupportedSize(format!(
            "exact diagonalization capped at 16 qubits, got {}",
            h.n_qubits
        )));
    }
    if n_electrons > h.n_qubits {
        return Err(Error::invalid("more electrons than qubits"));
    }
    if h.terms.is_empty() {
        return Ok(0.0);
    }
    let basis = sector_basis(h.n_qubits, n_electrons);
    let dim = basis.len();
    let mut position = vec![u32::MAX; 1usize << h.n_qubits];
    for (i, &b) in basis.iter().enumerate() {
        position[b as usize] = i as u32;
    }

    if dim <= DENSE_SECTOR_LIMIT {
        let mut mat_re = DMatrix::zeros(dim, dim);
        let mut mat_im = DMatrix::<f64>::zeros(dim, dim);
        for (j, &b) in basis.iter().enumerate() {
            for (s, coeff) in &h.terms {
                let (target, phase) = s.apply_basis(b);
                let pos = position[target as usize];
                // Out-of-sector scatter cancels between terms; restricting to
                // the sector is exact because H preserves particle number.
                if pos == u32::MAX {
                    continue;
                }
                mat_re[(pos as usize, j)] += coeff * phase.re;
                mat_im[(pos as usize, j)] += coeff * phase.im;
            }
        }
        // A real-tensor Hamiltonian is a real symmetric matrix in the
        // occupation basis; residuals beyond roundoff flag a mapping bug.
        let residual = mat_im.amax().max((&mat_re - mat_re.transpose()).amax());
        if residual > 1e-9 {
            return Err(Error::Numerical(format!(
                "sector Hamiltonian not real-symmetric (residual {residual:.3e})"
            )));
        }
        let sym = (&mat_re + mat_re.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        return Ok(eig.eigenvalues.min());
    }

    lanczos_ground(h, &basis, &position)
}

/// Sector-restricted matvec: y = (P H P) x.
fn sector_matvec(
    h: &PauliPolynomial,
    basis: &[u64],
    position: &[u32],
    x: &[Complex64],
    y: &mut [Complex64],
) {
    y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for (s, coeff) in &h.terms {
        for (j, &b) in basis.iter().enumerate() {
            let amp = x[j];
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (target, phase) = s.apply_basis(b);
            let pos = position[target as usize];
            if pos != u32::MAX {
                y[pos as usize] += phase * amp * *coeff;
            }
        }
    }
}

fn lanczos_ground(h: &PauliPolynomial, basis: &[u64], position: &[u32]) -> Result<f64> {
    let dim = basis.len();
    let max_iter = dim.min(300);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c);
    let mut v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0)).collect();
    let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);

    let mut vs: Vec<Vec<Complex64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut last = f64::INFINITY;

    for iter in 0..max_iter {
        sector_matvec(h, basis, position, &vs[iter], &mut w);
        let alpha: f64 = vs[iter]
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        alphas.push(alpha);
        // Full reorthogonalization keeps the basis numerically orthogonal.
        for prev in &vs {
            let dot: Complex64 = prev.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            for (wi, pi) in w.iter_mut().zip(prev.iter()) {
                *wi -= dot * pi;
            }
        }
        let beta: f64 = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

        if alphas.len() >= 2 || beta < 1e-13 {
            let theta = tridiag_min(&alphas, &betas);
            if beta < 1e-13 || (last - theta).abs() < 1e-12 {
                return Ok(theta);
            }
            last = theta;
        }
        if beta < 1e-13 {
            break;
        }
        betas.push(beta);
        let next: Vec<Complex64> = w.iter().map(|a| a / beta).collect();
        vs.push(next);
    }
    Ok(tridiag_min(&alphas, &betas))
}

fn tridiag_min(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t.symmetric_eigen().eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_random, Geometry, GeometryKind};
    use crate::integrals::{build_basis, compute_integrals, ANGSTROM_TO_BOHR};
    use crate::matching::best_matching;
    use crate::pauli::PauliString;
    use approx::assert_abs_diff_eq;

    fn h2_at_bohr(r: f64) -> Geometry {
        Geometry {
            coords: vec![[0.0, 0.0, 0.0], [0.0, 0.0, r / ANGSTROM_TO_BOHR]],
            kind: GeometryKind::Linear,
            seed: None,
            step: Some(r / ANGSTROM_TO_BOHR),
        }
    }

    fn mo_tensors(geom: &Geometry) -> MoTensors {
        let tables = compute_integrals(&build_basis(geom)).unwrap();
        lowdin_orbitals(&tables).unwrap().1
    }

    #[test]
    fn lowdin_single_atom_is_identity() {
        let g = Geometry {
            coords: vec![[0.0; 3]],
            kind: GeometryKind::Random,
            seed: Some(0),
            step: None,
        };
        let tables = compute_integrals(&build_basis(&g)).unwrap();
        let (c, _) = lowdin_orbitals(&tables).unwrap();
        assert_abs_diff_eq!(c[(0, 0)], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn lowdin_orthonormalizes() {
        let g = generate_random(6, 2.5, 3).unwrap();
        let tables = compute_integrals(&build_basis(&g)).unwrap();
        let (c, _) = lowdin_orbitals(&tables).unwrap();
        let gram = c.transpose() * &tables.overlap * &c;
        assert!((gram - DMatrix::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn lowdin_h2_is_gerade_ungerade() {
        // For a symmetric 2x2 overlap, S^{-1/2} eigenvectors are (1,±1)/√2.
        // Explicit 2x2 eigen-decomposition of S = [[1, s], [s, 1]]:
        // S^(-1/2) = ½ [[a+b, a−b], [a−b, a+b]] with a = (1+s)^(-1/2),
        // b = (1−s)^(-1/2); its eigenvectors are the gerade/ungerade
        // combinations (1, ±1)/√2.
        let tables = compute_integrals(&build_basis(&h2_at_bohr(1.4))).unwrap();
        let (c, _) = lowdin_orbitals(&tables).unwrap();
        let s = tables.overlap[(0, 1)];
        let a = (1.0 + s).sqrt().recip();
        let b = (1.0 - s).sqrt().recip();
        assert_abs_diff_eq!(c[(0, 0)], 0.5 * (a + b), epsilon = 1e-10);
        assert_abs_diff_eq!(c[(0, 1)], 0.5 * (a - b), epsilon = 1e-10);
        assert_abs_diff_eq!(c[(1, 1)], 0.5 * (a + b), epsilon = 1e-10);
    }

    #[test]
    fn coincident_atoms_flag_linear_dependence() {
        let g = Geometry {
            coords: vec![[0.0; 3], [0.0, 0.0, 1e-9]],
            kind: GeometryKind::Random,
            seed: Some(0),
            step: None,
        };
        let tables = compute_integrals(&build_basis(&g)).unwrap();
        assert!(matches!(lowdin_orbitals(&tables), Err(Error::LinearDependence(_))));
    }

    #[test]
    fn rotation_matrix_is_orthogonal() {
        let rot = OrbitalRotation::from_upper_triangle(4, &[0.3, -0.2, 0.7, 0.1, -0.5, 0.9])
            .unwrap();
        let r = rot.matrix();
        assert!((r.transpose() * &r - DMatrix::identity(4, 4)).amax() < 1e-12);
        // det = +1 for exp of antisymmetric.
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_rotation_preserves_tensors() {
        let g = generate_random(4, 2.5, 9).unwrap();
        let t = mo_tensors(&g);
        let rotated = rotate_orbitals(&t, &OrbitalRotation::identity(4));
        assert!((&rotated.one_body - &t.one_body).amax() < 1e-12);
        for p in 0..4 {
            for q in 0..4 {
                assert_abs_diff_eq!(
                    rotated.two_body.get(p, q, p, q),
                    t.two_body.get(p, q, p, q),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn quarter_turn_swaps_two_orbitals() {
        let g = generate_random(2, 2.5, 5).unwrap();
        let t = mo_tensors(&g);
        let rot = OrbitalRotation::from_upper_triangle(2, &[std::f64::consts::FRAC_PI_2])
            .unwrap();
        let r = rot.matrix();
        assert_abs_diff_eq!(r[(0, 1)].abs(), 1.0, epsilon = 1e-12);
        let rotated = rotate_orbitals(&t, &rot);
        assert_abs_diff_eq!(rotated.one_body[(0, 0)], t.one_body[(1, 1)], epsilon = 1e-10);
        assert_abs_diff_eq!(rotated.one_body[(1, 1)], t.one_body[(0, 0)], epsilon = 1e-10);
    }

    #[test]
    fn rotation_preserves_spectrum() {
        let g = generate_random(4, 2.5, 17).unwrap();
        let t = mo_tensors(&g);
        let matching = best_matching(&g).unwrap();
        let e0 = exact_ground_energy(&to_qubit(&t, &matching).unwrap(), 4).unwrap();

        let rot = OrbitalRotation::from_upper_triangle(4, &[0.2, -0.3, 0.15, 0.4, -0.1, 0.25])
            .unwrap();
        let rotated = rotate_orbitals(&t, &rot);
        let e1 = exact_ground_energy(&to_qubit(&rotated, &matching).unwrap(), 4).unwrap();
        assert_abs_diff_eq!(e0, e1, epsilon = 1e-8);
    }

    #[test]
    fn h2_polynomial_shape_and_identity_term() {
        let t = mo_tensors(&h2_at_bohr(1.4));
        let g = h2_at_bohr(1.4);
        let matching = best_matching(&g).unwrap();
        let poly = to_qubit(&t, &matching).unwrap();
        assert_eq!(poly.n_qubits, 4);
        assert!(poly.n_terms() >= 10 && poly.n_terms() <= 30, "{}", poly.n_terms());
        // Identity coefficient equals the trace average of the dense matrix
        // (all non-identity Pauli strings are traceless).
        let dense = poly.to_dense().unwrap();
        let dim = 1usize << poly.n_qubits;
        let trace_avg: f64 = (0..dim).map(|i| dense[(i, i)].re).sum::<f64>() / dim as f64;
        assert_abs_diff_eq!(poly.identity_coefficient(), trace_avg, epsilon = 1e-10);
        // Dense matrix is hermitian with real spectrum.
        for i in 0..dim {
            for j in 0..dim {
                assert!((dense[(i, j)] - dense[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn h2_fci_energy_near_reference() {
        let t = mo_tensors(&h2_at_bohr(1.4));
        let g = h2_at_bohr(1.4);
        let matching = best_matching(&g).unwrap();
        let poly = to_qubit(&t, &matching).unwrap();
        let e = exact_ground_energy(&poly, 2).unwrap();
        // Minimal-basis H2 FCI at 1.4 bohr.
        assert_abs_diff_eq!(e, -1.137, epsilon = 2e-3);
    }

    #[test]
    fn qubit_hamiltonian_commutes_with_number_operator() {
        let g = generate_random(2, 2.5, 21).unwrap();
        let t = mo_tensors(&g);
        let matching = best_matching(&g).unwrap();
        let poly = to_qubit(&t, &matching).unwrap();
        let dense = poly.to_dense().unwrap();
        // N = Σ_q (I − Z_q)/2.
        let dim = 1usize << poly.n_qubits;
        let mut commutator_max: f64 = 0.0;
        for col in 0..dim {
            for row in 0..dim {
                let n_row = (row as u64).count_ones() as f64;
                let n_col = (col as u64).count_ones() as f64;
                commutator_max =
                    commutator_max.max((dense[(row, col)] * (n_row - n_col)).norm());
            }
        }
        assert!(commutator_max < 1e-10, "commutator {commutator_max:.3e}");
    }

    #[test]
    fn ground_energy_trivial_cases() {
        let empty = PauliPolynomial::new(4);
        assert_eq!(exact_ground_energy(&empty, 2).unwrap(), 0.0);

        let mut id_only = PauliPolynomial::new(4);
        id_only.terms.insert(PauliString::IDENTITY, -2.5);
        assert_abs_diff_eq!(exact_ground_energy(&id_only, 2).unwrap(), -2.5, epsilon = 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense_on_h4() {
        let g = generate_random(4, 2.5, 33).unwrap();
        let t = mo_tensors(&g);
        let matching = best_matching(&g).unwrap();
        let poly = to_qubit(&t, &matching).unwrap();
        let basis = sector_basis(poly.n_qubits, 4);
        let mut position = vec![u32::MAX; 1usize << poly.n_qubits];
        for (i, &b) in basis.iter().enumerate() {
            position[b as usize] = i as u32;
        }
        let dense = exact_ground_energy(&poly, 4).unwrap();
        let lanczos = lanczos_ground(&poly, &basis, &position).unwrap();
        assert_abs_diff_eq!(dense, lanczos, epsilon = 1e-9);
    }

    #[test]
    fn oversize_request_is_rejected() {
        let poly = PauliPolynomial::new(18);
        assert!(matches!(
            exact_ground_energy(&poly, 9),
            Err(Error::UnsupportedSize(_))
        ));
    }
}
