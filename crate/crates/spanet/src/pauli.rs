//! Pauli string algebra over up to 64 qubits.
//!
//! A string is stored as two bitmasks: qubit q carries X if bit q of `x` is
//! set, Z if bit q of `z` is set, Y if both. The operator is the literal
//! tensor product of those single-qubit Paulis (no implicit phase), so every
//! stored string is hermitian and a real-coefficient polynomial is a
//! hermitian operator.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Letter at qubit position q.
    pub fn letter(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            (0, 1) => 'Z',
            _ => unreachable!(),
        }
    }

    /// Word with character i = qubit i, e.g. "XZII" for X₀Z₁ on 4 qubits.
    pub fn word(&self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn from_word(word: &str) -> Result<PauliString> {
        let mut x = 0u64;
        let mut z = 0u64;
        if word.len() > 64 {
            return Err(Error::UnsupportedSize("pauli word longer than 64 qubits".into()));
        }
        for (q, ch) in word.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                'Z' => z |= 1 << q,
                other => {
                    return Err(Error::data(format!("invalid pauli letter '{other}'")));
                }
            }
        }
        Ok(PauliString { x, z })
    }

    /// Product of two strings: bitwise XOR of masks plus an i^k phase from
    /// the single-qubit multiplication table.
    pub fn mul(&self, rhs: &PauliString) -> (PauliString, Complex64) {
        let out = PauliString { x: self.x ^ rhs.x, z: self.z ^ rhs.z };
        // i-exponent of P·Q for P,Q in {I,X,Y,Z} encoded as (x,z) bit pairs.
        // XY = iZ, YZ = iX, ZX = iY and the reverses pick up −i.
        let mut overlap = (self.x | self.z) & (rhs.x | rhs.z);
        let mut exponent: u32 = 0;
        while overlap != 0 {
            let q = overlap.trailing_zeros();
            overlap &= overlap - 1;
            let a = (((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)) as usize;
            let b = (((rhs.x >> q) & 1) | (((rhs.z >> q) & 1) << 1)) as usize;
            // Index: 1=X, 2=Z, 3=Y. Table entries are i-exponents mod 4.
            const TABLE: [[u32; 4]; 4] = [
                [0, 0, 0, 0], // I·*
                [0, 0, 3, 1], // X·{I,X,Z,Y}: XZ=−iY, XY=iZ
                [0, 1, 0, 3], // Z·{I,X,Z,Y}: ZX=iY,  ZY=−iX
                [0, 3, 1, 0], // Y·{I,X,Z,Y}: YX=−iZ, YZ=iX
            ];
            exponent = (exponent + TABLE[a][b]) % 4;
        }
        const PHASES: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        (out, PHASES[exponent as usize])
    }

    /// Apply to a computational basis state |b⟩ (little-endian bits):
    /// returns (b ^ x, phase).
    #[inline]
    pub fn apply_basis(&self, b: u64) -> (u64, Complex64) {
        let y_mask = self.x & self.z;
        let n_y = y_mask.count_ones();
        let sign_flips = (self.z & b).count_ones();
        // Each Y contributes i on |0⟩; Z or Y on a set bit contributes −1.
        let mut exponent = n_y % 4;
        if sign_flips % 2 == 1 {
            exponent = (exponent + 2) % 4;
        }
        const PHASES: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        (b ^ self.x, PHASES[exponent as usize])
    }

    /// Restriction to a contiguous qubit window [offset, offset+width).
    /// Valid only when the string acts trivially outside no — callers split
    /// a string into per-window factors; the full string is the product of
    /// its restrictions.
    #[inline]
    pub fn restrict(&self, offset: usize, width: usize) -> PauliString {
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        PauliString { x: (self.x >> offset) & mask, z: (self.z >> offset) & mask }
    }
}

/// Complex-coefficient Pauli sum used while multiplying fermionic operators.
#[derive(Debug, Clone, Default)]
pub struct PauliSum {
    pub terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn identity(coeff: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(PauliString::IDENTITY, coeff);
        PauliSum { terms }
    }

    pub fn add(&mut self, s: PauliString, c: Complex64) {
        let entry = self.terms.entry(s).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
    }

    pub fn add_sum(&mut self, other: &PauliSum) {
        for (s, c) in &other.terms {
            self.add(*s, *c);
        }
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            terms: self.terms.iter().map(|(s, c)| (*s, c * factor)).collect(),
        }
    }

    pub fn mul(&self, rhs: &PauliSum) -> PauliSum {
        let mut out = PauliSum::default();
        for (sa, ca) in &self.terms {
            for (sb, cb) in &rhs.terms {
                let (s, phase) = sa.mul(sb);
                out.add(s, ca * cb * phase);
            }
        }
        out
    }
}

/// Jordan–Wigner annihilation operator a_q = ½(X_q + iY_q)·Z₀…Z_{q−1}.
pub fn jw_annihilation(q: usize) -> PauliSum {
    let tail = if q == 0 { 0 } else { (1u64 << q) - 1 };
    let mut sum = PauliSum::default();
    sum.add(PauliString { x: 1 << q, z: tail }, Complex64::new(0.5, 0.0));
    sum.add(PauliString { x: 1 << q, z: tail | (1 << q) }, Complex64::new(0.0, 0.5));
    sum
}

/// Jordan–Wigner creation operator a†_q = ½(X_q − iY_q)·Z₀…Z_{q−1}.
pub fn jw_creation(q: usize) -> PauliSum {
    let tail = if q == 0 { 0 } else { (1u64 << q) - 1 };
    let mut sum = PauliSum::default();
    sum.add(PauliString { x: 1 << q, z: tail }, Complex64::new(0.5, 0.0));
    sum.add(PauliString { x: 1 << q, z: tail | (1 << q) }, Complex64::new(0.0, -0.5));
    sum
}

/// Real-coefficient sum of Pauli strings: a hermitian qubit operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliPolynomial {
    pub n_qubits: usize,
    pub terms: BTreeMap<PauliString, f64>,
}

/// Coefficients below this magnitude are dropped when building polynomials.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

impl PauliPolynomial {
    pub fn new(n_qubits: usize) -> Self {
        PauliPolynomial { n_qubits, terms: BTreeMap::new() }
    }

    /// Collapse a complex Pauli sum into a real polynomial, verifying that
    /// imaginary parts are numerical noise (hermiticity of the source
    /// operator) and pruning negligible coefficients.
    pub fn from_sum(sum: &PauliSum, n_qubits: usize) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (s, c) in &sum.terms {
            if c.im.abs() > 1e-8 {
                return Err(Error::Numerical(format!(
                    "non-hermitian pauli sum: term {} has imaginary coefficient {:.3e}",
                    s.word(n_qubits),
                    c.im
                )));
            }
            if c.re.abs() > PRUNE_THRESHOLD {
                terms.insert(*s, c.re);
            }
        }
        Ok(PauliPolynomial { n_qubits, terms })
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.terms.get(&PauliString::IDENTITY).copied().unwrap_or(0.0)
    }

    /// Serialize as ordered (word, coefficient) pairs.
    pub fn to_pairs(&self) -> Vec<(String, f64)> {
        self.terms.iter().map(|(s, c)| (s.word(self.n_qubits), *c)).collect()
    }

    pub fn from_pairs(pairs: &[(String, f64)], n_qubits: usize) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (word, coeff) in pairs {
            if word.len() != n_qubits {
                return Err(Error::data(format!(
                    "pauli word '{word}' does not match qubit count {n_qubits}"
                )));
            }
            terms.insert(PauliString::from_word(word)?, *coeff);
        }
        Ok(PauliPolynomial { n_qubits, terms })
    }

    /// y += H·x over full statevectors (little-endian basis indexing).
    pub fn apply_to_statevector(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), 1usize << self.n_qubits);
        debug_assert_eq!(y.len(), x.len());
        for (s, coeff) in &self.terms {
            for (b, amp) in x.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                let (target, phase) = s.apply_basis(b as u64);
                y[target as usize] += phase * amp * *coeff;
            }
        }
    }

    /// ⟨ψ|H|ψ⟩ over a full statevector.
    pub fn expectation_statevector(&self, psi: &[Complex64]) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (s, coeff) in &self.terms {
            let mut term = Complex64::new(0.0, 0.0);
            for (b, amp) in psi.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                let (target, phase) = s.apply_basis(b as u64);
                term += psi[target as usize].conj() * phase * amp;
            }
            total += term * *coeff;
        }
        total.re
    }

    /// Dense matrix in the full 2^n space; capped at 12 qubits.
    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<Complex64>> {
        if self.n_qubits > 12 {
            return Err(Error::UnsupportedSize(format!(
                "dense matrix for {} qubits refused (cap 12)",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (s, coeff) in &self.terms {
            for b in 0..dim {
                let (target, phase) = s.apply_basis(b as u64);
                m[(target as usize, b)] += phase * *coeff;
            }
        }
        Ok(m)
    }
}
