//! Exact simulation of separable-pair-ansatz circuits.
//!
//! The prepared state is a tensor product of one 4-qubit state per electron
//! pair, supported on |1100⟩ and |0011⟩ within the pair block, so Pauli
//! expectation values factorize over pairs and never require the full
//! statevector. Occupation convention: qubit value 1 = occupied
//! spin-orbital; pair block ordered (a↑, a↓, b↑, b↓).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrals::Eri;
use crate::matching::PairMatching;
use crate::pauli::{jw_annihilation, jw_creation, PauliPolynomial, PauliSum};

/// Basis index of |1100⟩ (qubits 4p, 4p+1 occupied) within a pair block.
const REF_INDEX: usize = 0b0011;
/// Basis index of |0011⟩ (qubits 4p+2, 4p+3 occupied).
const EXC_INDEX: usize = 0b1100;

/// Wrap an angle into (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// SPA circuit: one rotation angle per matched pair; pair p acts on qubits
/// 4p..4p+3.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaAnsatz {
    pub pairs: Vec<(usize, usize)>,
    pub angles: Vec<f64>,
}

impl SpaAnsatz {
    pub fn new(matching: &PairMatching, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != matching.n_pairs() {
            return Err(Error::invalid(format!(
                "expected one angle per pair ({}), got {}",
                matching.n_pairs(),
                angles.len()
            )));
        }
        Ok(SpaAnsatz {
            pairs: matching.pairs.clone(),
            angles: angles.into_iter().map(normalize_angle).collect(),
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_qubits(&self) -> usize {
        4 * self.pairs.len()
    }

    pub fn with_angles(&self, angles: Vec<f64>) -> Self {
        SpaAnsatz {
            pairs: self.pairs.clone(),
            angles: angles.into_iter().map(normalize_angle).collect(),
        }
    }
}

/// The 4-qubit state of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub amplitudes: [Complex64; 16],
}

impl PairState {
    /// cos(θ/2)|1100⟩ − sin(θ/2)|0011⟩.
    pub fn from_angle(theta: f64) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 16];
        amplitudes[REF_INDEX] = Complex64::new((theta / 2.0).cos(), 0.0);
        amplitudes[EXC_INDEX] = Complex64::new(-(theta / 2.0).sin(), 0.0);
        PairState { amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨ψ|P|ψ⟩ for a 4-qubit Pauli string given as masks over the block.
    #[inline]
    fn local_expectation(&self, local: crate::pauli::PauliString) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for &b in &[REF_INDEX, EXC_INDEX] {
            let amp = self.amplitudes[b];
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (target, phase) = local.apply_basis(b as u64);
            total += self.amplitudes[target as usize].conj() * phase * amp;
        }
        total
    }
}

/// Prepare the per-pair states for the given angles.
pub fn prepare(ansatz: &SpaAnsatz) -> Vec<PairState> {
    ansatz.angles.iter().map(|&t| PairState::from_angle(t)).collect()
}

fn check_qubits(h: &PauliPolynomial, states: &[PairState]) -> Result<()> {
    if h.n_qubits != 4 * states.len() {
        return Err(Error::invalid(format!(
            "hamiltonian acts on {} qubits but {} pairs supply {}",
            h.n_qubits,
            states.len(),
            4 * states.len()
        )));
    }
    Ok(())
}

/// Exact ⟨Ψ|H|Ψ⟩ via per-pair factorization: each Pauli term contributes
/// coeff · Π_p ⟨ψ_p|term|_p|ψ_p⟩. Cost O(#terms × #pairs), no sampling.
pub fn expectation(h: &PauliPolynomial, states: &[PairState]) -> Result<f64> {
    check_qubits(h, states)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (string, coeff) in &h.terms {
        let mut factor = Complex64::new(*coeff, 0.0);
        for (p, state) in states.iter().enumerate() {
            let local = string.restrict(4 * p, 4);
            factor *= state.local_expectation(local);
            if factor.re == 0.0 && factor.im == 0.0 {
                break;
            }
        }
        total += factor;
    }
    Ok(total.re)
}

/// Expectation of a complex-coefficient Pauli sum over the factorized state.
pub(crate) fn expectation_sum(sum: &PauliSum, states: &[PairState]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (string, coeff) in &sum.terms {
        let mut factor = *coeff;
        for (p, state) in states.iter().enumerate() {
            let local = string.restrict(4 * p, 4);
            factor *= state.local_expectation(local);
            if factor.re == 0.0 && factor.im == 0.0 {
                break;
            }
        }
        total += factor;
    }
    total
}

/// Kronecker product of the pair states in layout order (testing oracle;
/// capped at 20 qubits).
pub fn full_statevector(ansatz: &SpaAnsatz) -> Result<Vec<Complex64>> {
    let n_qubits = ansatz.n_qubits();
    if n_qubits > 20 {
        return Err(Error::UnsupportedSize(format!(
            "statevector for {n_qubits} qubits refused (cap 20)"
        )));
    }
    let states = prepare(ansatz);
    let dim = 1usize << n_qubits;
    let mut psi = Vec::with_capacity(dim);
    for idx in 0..dim {
        let mut amp = Complex64::new(1.0, 0.0);
        for (p, state) in states.iter().enumerate() {
            amp *= state.amplitudes[(idx >> (4 * p)) & 0xf];
            if amp.re == 0.0 && amp.im == 0.0 {
                break;
            }
        }
        psi.push(amp);
    }
    Ok(psi)
}

/// Parameter-shift gradient dE/dθ_p = [E(θ_p + π/2) − E(θ_p − π/2)] / 2,
/// exact here because the energy is a degree-1 trigonometric polynomial in
/// each pair angle.
pub fn gradient(h: &PauliPolynomial, ansatz: &SpaAnsatz) -> Result<Vec<f64>> {
    let mut states = prepare(ansatz);
    check_qubits(h, &states)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut grad = Vec::with_capacity(ansatz.n_pairs());
    for p in 0..ansatz.n_pairs() {
        let original = states[p].clone();
        states[p] = PairState::from_angle(ansatz.angles[p] + half_pi);
        let plus = expectation(h, &states)?;
        states[p] = PairState::from_angle(ansatz.angles[p] - half_pi);
        let minus = expectation(h, &states)?;
        states[p] = original;
        grad.push((plus - minus) / 2.0);
    }
    Ok(grad)
}

/// Spin-summed reduced density matrices of the SPA state in the pair-blocked
/// spatial orbital basis:
/// D_pq = Σ_σ ⟨a†_pσ a_qσ⟩,
/// Γ_pqrs = Σ_στ ⟨a†_pσ a†_rτ a_sτ a_qσ⟩.
/// Contracting these with rotated integral tensors gives the SPA energy
/// without rebuilding the qubit Hamiltonian.
pub fn pair_rdms(ansatz: &SpaAnsatz) -> (DMatrix<f64>, Eri) {
    let states = prepare(ansatz);
    let n_orb = 2 * ansatz.n_pairs();
    let exc: Vec<Vec<[PauliSum; 2]>> = (0..n_orb)
        .map(|p| {
            (0..n_orb)
                .map(|q| {
                    [
                        jw_creation(2 * p).mul(&jw_annihilation(2 * q)),
                        jw_creation(2 * p + 1).mul(&jw_annihilation(2 * q + 1)),
                    ]
                })
                .collect()
        })
        .collect();

    let mut one_rdm = DMatrix::zeros(n_orb, n_orb);
    let mut exc_values = vec![vec![[Complex64::new(0.0, 0.0); 2]; n_orb]; n_orb];
    for p in 0..n_orb {
        for q in 0..n_orb {
            for spin in 0..2 {
                exc_values[p][q][spin] = expectation_sum(&exc[p][q][spin], &states);
            }
            one_rdm[(p, q)] = (exc_values[p][q][0] + exc_values[p][q][1]).re;
        }
    }

    let mut two_rdm = Eri::zeros(n_orb);
    for p in 0..n_orb {
        for q in 0..n_orb {
            for r in 0..n_orb {
                for s in 0..n_orb {
                    let mut value = Complex64::new(0.0, 0.0);
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            // a†_P a†_R a_S a_Q = E_PQ E_RS − δ_QR E_PS.
                            let prod = exc[p][q][sigma].mul(&exc[r][s][tau]);
                            value += expectation_sum(&prod, &states);
                            if sigma == tau && q == r {
                                value -= exc_values[p][s][sigma];
                            }
                        }
                    }
                    two_rdm.set(p, q, r, s, value.re);
                }
            }
        }
    }
    (one_rdm, two_rdm)
}
