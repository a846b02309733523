//! One- and two-electron integrals for hydrogen atoms in a minimal basis:
//! one contracted 3-primitive s-type Gaussian per atom (standard STO-3G
//! hydrogen parameters). All energies are in Hartree atomic units; geometry
//! enters in Ångström and is converted at the interface.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::geom::Geometry;

pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;

/// STO-3G hydrogen s-shell (Hehre, Stewart, Pople 1969), exponents in bohr⁻².
pub const STO3G_H_EXPONENTS: [f64; 3] = [3.42525091, 0.62391373, 0.1688554];
pub const STO3G_H_COEFFS: [f64; 3] = [0.15432897, 0.53532814, 0.44463454];

/// Zeroth Boys function F₀(x) = ½√(π/x)·erf(√x), with the small-x series
/// 1 − x/3 + x²/10 below 1e−10 to stay finite at coincident centers.
pub fn boys_f0(x: f64) -> f64 {
    if x < 1e-10 {
        1.0 - x / 3.0 + x * x / 10.0
    } else {
        let sx = x.sqrt();
        0.5 * (std::f64::consts::PI / x).sqrt() * libm::erf(sx)
    }
}

/// One contracted s-type Gaussian per hydrogen atom. The stored coefficients
/// absorb the primitive norms and the contraction normalization, so the
/// self-overlap of every function is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub centers_bohr: Vec<[f64; 3]>,
    pub exponents: [f64; 3],
    /// Effective primitive weights c_i·N_i / √(self-overlap).
    pub coefficients: [f64; 3],
}

impl BasisSet {
    pub fn n_functions(&self) -> usize {
        self.centers_bohr.len()
    }
}

/// Two-electron repulsion tensor in chemists' notation (pq|rs), Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct Eri {
    n: usize,
    data: Vec<f64>,
}

impl Eri {
    pub fn zeros(n: usize) -> Self {
        Eri { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[((p * self.n + q) * self.n + r) * self.n + s]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        self.data[((p * self.n + q) * self.n + r) * self.n + s] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralTables {
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    pub nuclear: DMatrix<f64>,
    pub eri: Eri,
    /// Nuclear repulsion Σ_{i<j} 1/R_ij.
    pub e_nn: f64,
}

impl IntegralTables {
    pub fn n_orbitals(&self) -> usize {
        self.overlap.nrows()
    }

    /// Core Hamiltonian T + V.
    pub fn core(&self) -> DMatrix<f64> {
        &self.kinetic + &self.nuclear
    }
}

/// Assign the contracted STO-3G s-function to every atom, converting centers
/// to bohr and enforcing unit self-overlap.
pub fn build_basis(geom: &Geometry) -> BasisSet {
    let centers_bohr = geom
        .coords
        .iter()
        .map(|r| {
            [
                r[0] * ANGSTROM_TO_BOHR,
                r[1] * ANGSTROM_TO_BOHR,
                r[2] * ANGSTROM_TO_BOHR,
            ]
        })
        .collect();
    let mut weights = [0.0f64; 3];
    for i in 0..3 {
        let norm = (2.0 * STO3G_H_EXPONENTS[i] / std::f64::consts::PI).powf(0.75);
        weights[i] = STO3G_H_COEFFS[i] * norm;
    }
    // Contraction normalization from the analytic primitive overlaps.
    let mut self_overlap = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let p = STO3G_H_EXPONENTS[i] + STO3G_H_EXPONENTS[j];
            self_overlap +=
                weights[i] * weights[j] * (std::f64::consts::PI / p).powf(1.5);
        }
    }
    let scale = self_overlap.sqrt().recip();
    for w in weights.iter_mut() {
        *w *= scale;
    }
    BasisSet { centers_bohr, exponents: STO3G_H_EXPONENTS, coefficients: weights }
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Gaussian product center (αA + βB)/(α+β).
#[inline]
fn product_center(alpha: f64, a: [f64; 3], beta: f64, b: [f64; 3]) -> [f64; 3] {
    let p = alpha + beta;
    [
        (alpha * a[0] + beta * b[0]) / p,
        (alpha * a[1] + beta * b[1]) / p,
        (alpha * a[2] + beta * b[2]) / p,
    ]
}

/// Analytic integrals over the contracted basis: overlap, kinetic, nuclear
/// attraction (all hydrogen nuclei, charge 1), the full ERI tensor, and the
/// nuclear repulsion energy.
pub fn compute_integrals(basis: &BasisSet) -> Result<IntegralTables> {
    let n = basis.n_functions();
    let exps = &basis.exponents;
    let ws = &basis.coefficients;
    let centers = &basis.centers_bohr;
    let pi = std::f64::consts::PI;

    let mut overlap = DMatrix::zeros(n, n);
    let mut kinetic = DMatrix::zeros(n, n);
    let mut nuclear = DMatrix::zeros(n, n);

    for a in 0..n {
        for b in a..n {
            let rab2 = dist2(centers[a], centers[b]);
            let mut s = 0.0;
            let mut t = 0.0;
            let mut v = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let alpha = exps[i];
                    let beta = exps[j];
                    let p = alpha + beta;
                    let mu = alpha * beta / p;
                    let pref = ws[i] * ws[j] * (-mu * rab2).exp();
                    s += pref * (pi / p).powf(1.5);
                    t += pref * mu * (3.0 - 2.0 * mu * rab2) * (pi / p).powf(1.5);
                    let pc = product_center(alpha, centers[a], beta, centers[b]);
                    for nucleus in centers.iter() {
                        let rpc2 = dist2(pc, *nucleus);
                        v -= pref * 2.0 * pi / p * boys_f0(p * rpc2);
                    }
                }
            }
            overlap[(a, b)] = s;
            overlap[(b, a)] = s;
            kinetic[(a, b)] = t;
            kinetic[(b, a)] = t;
            nuclear[(a, b)] = v;
            nuclear[(b, a)] = v;
        }
    }

    let mut eri = Eri::zeros(n);
    for a in 0..n {
        for b in 0..=a {
            for c in 0..=a {
                let d_max = if c == a { b } else { c };
                for d in 0..=d_max {
                    let val = eri_contracted(basis, a, b, c, d);
                    // 8-fold permutational symmetry of real s-integrals.
                    for (p, q, r, s) in [
                        (a, b, c, d),
                        (b, a, c, d),
                        (a, b, d, c),
                        (b, a, d, c),
                        (c, d, a, b),
                        (d, c, a, b),
                        (c, d, b, a),
                        (d, c, b, a),
                    ] {
                        eri.set(p, q, r, s, val);
                    }
                }
            }
        }
    }

    let mut e_nn = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            e_nn += 1.0 / dist2(centers[i], centers[j]).sqrt();
        }
    }

    Ok(IntegralTables { overlap, kinetic, nuclear, eri, e_nn })
}

fn eri_contracted(basis: &BasisSet, a: usize, b: usize, c: usize, d: usize) -> f64 {
    let exps = &basis.exponents;
    let ws = &basis.coefficients;
    let ca = basis.centers_bohr[a];
    let cb = basis.centers_bohr[b];
    let cc = basis.centers_bohr[c];
    let cd = basis.centers_bohr[d];
    let rab2 = dist2(ca, cb);
    let rcd2 = dist2(cc, cd);
    let pi = std::f64::consts::PI;
    let mut total = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let alpha = exps[i];
            let beta = exps[j];
            let p = alpha + beta;
            let kab = ws[i] * ws[j] * (-(alpha * beta / p) * rab2).exp();
            let pp = product_center(alpha, ca, beta, cb);
            for k in 0..3 {
                for l in 0..3 {
                    let gamma = exps[k];
                    let delta = exps[l];
                    let q = gamma + delta;
                    let kcd = ws[k] * ws[l] * (-(gamma * delta / q) * rcd2).exp();
                    let pq = product_center(gamma, cc, delta, cd);
                    let rpq2 = dist2(pp, pq);
                    total += kab
                        * kcd
                        * 2.0
                        * pi.powf(2.5)
                        / (p * q * (p + q).sqrt())
                        * boys_f0(p * q / (p + q) * rpq2);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{generate_random, Geometry, GeometryKind};
    use approx::assert_abs_diff_eq;

    const BOHR_TO_ANGSTROM: f64 = 1.0 / ANGSTROM_TO_BOHR;

    fn geom_from_bohr(centers: &[[f64; 3]]) -> Geometry {
        Geometry {
            coords: centers
                .iter()
                .map(|r| {
                    [
                        r[0] * BOHR_TO_ANGSTROM,
                        r[1] * BOHR_TO_ANGSTROM,
                        r[2] * BOHR_TO_ANGSTROM,
                    ]
                })
                .collect(),
            kind: GeometryKind::Random,
            seed: Some(0),
            step: None,
        }
    }

    /// Contracted basis function value at a point (bohr).
    fn phi(basis: &BasisSet, atom: usize, r: [f64; 3]) -> f64 {
        let c = basis.centers_bohr[atom];
        let r2 = dist2(c, r);
        (0..3)
            .map(|i| basis.coefficients[i] * (-basis.exponents[i] * r2).exp())
            .sum()
    }

    /// Gradient of the contracted function at a point.
    fn grad_phi(basis: &BasisSet, atom: usize, r: [f64; 3]) -> [f64; 3] {
        let c = basis.centers_bohr[atom];
        let r2 = dist2(c, r);
        let radial: f64 = (0..3)
            .map(|i| {
                -2.0 * basis.exponents[i]
                    * basis.coefficients[i]
                    * (-basis.exponents[i] * r2).exp()
            })
            .sum();
        [
            radial * (r[0] - c[0]),
            radial * (r[1] - c[1]),
            radial * (r[2] - c[2]),
        ]
    }

    /// Midpoint-rule 3D quadrature oracle. Spacing 0.1 bohr gives far better
    /// than 1e-10 for these smooth, rapidly decaying integrands.
    fn grid_quadrature(f: impl Fn([f64; 3]) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
        let steps = ((hi - lo) / h).round() as usize;
        let mut total = 0.0;
        for ix in 0..steps {
            let x = lo + (ix as f64 + 0.5) * h;
            for iy in 0..steps {
                let y = lo + (iy as f64 + 0.5) * h;
                let mut row = 0.0;
                for iz in 0..steps {
                    let z = lo + (iz as f64 + 0.5) * h;
                    row += f([x, y, z]);
                }
                total += row;
            }
        }
        total * h * h * h
    }

    #[test]
    fn boys_limit_and_quadrature() {
        assert_eq!(boys_f0(0.0), 1.0);
        // F0(x) = ∫_0^1 exp(−x u²) du, via 64-point midpoint-Richardson-free
        // fine midpoint rule (smooth integrand, 2e5 points → ~1e-12).
        for &x in &[1e-12, 1e-6, 0.01, 0.5, 1.0, 3.7, 10.0, 40.0] {
            let m = 200_000;
            let mut q = 0.0;
            for i in 0..m {
                let u = (i as f64 + 0.5) / m as f64;
                q += (-x * u * u).exp();
            }
            q /= m as f64;
            assert_abs_diff_eq!(boys_f0(x), q, epsilon = 1e-10);
        }
    }

    #[test]
    fn contracted_functions_are_normalized() {
        let g = generate_random(3, 2.5, 7).unwrap();
        let basis = build_basis(&g);
        let tables = compute_integrals(&basis).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(tables.overlap[(i, i)], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn coincident_centers_overlap_is_one() {
        let g = geom_from_bohr(&[[0.0; 3], [0.0; 3]]);
        let basis = build_basis(&g);
        let tables = compute_integrals(&basis).unwrap();
        assert_abs_diff_eq!(tables.overlap[(0, 1)], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn h2_overlap_matches_grid_quadrature() {
        let g = geom_from_bohr(&[[0.0; 3], [0.0, 0.0, 1.4]]);
        let basis = build_basis(&g);
        let tables = compute_integrals(&basis).unwrap();
        let b = basis.clone();
        let s01 = grid_quadrature(|r| phi(&b, 0, r) * phi(&b, 1, r), -9.3, 10.7, 0.1);
        assert_abs_diff_eq!(tables.overlap[(0, 1)], s01, epsilon = 1e-8);
        // Known STO-3G value at 1.4 bohr.
        assert_abs_diff_eq!(tables.overlap[(0, 1)], 0.659, epsilon = 2e-3);
    }

    #[test]
    fn h2_kinetic_and_nuclear_match_grid_quadrature() {
        let g = geom_from_bohr(&[[0.0; 3], [0.0, 0.0, 1.4]]);
        let basis = build_basis(&g);
        let tables = compute_integrals(&basis).unwrap();
        let b = basis.clone();
        let t01 = grid_quadrature(
            |r| {
                let ga = grad_phi(&b, 0, r);
                let gb = grad_phi(&b, 1, r);
                0.5 * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2])
            },
            -9.3,
            10.7,
            0.1,
        );
        assert_abs_diff_eq!(tables.kinetic[(0, 1)], t01, epsilon = 1e-8);
    }

    #[test]
    fn single_atom_one_electron_energy() {
        // One electron in the contracted function: E = T + V. The 1/r
        // singularity is integrable; a radial midpoint rule in r·dr form is
        // smooth and very accurate.
        let g = geom_from_bohr(&[[0.0; 3]]);
        let basis = build_basis(&g);
        let tables = compute_integrals(&basis).unwrap();
        let e_analytic = tables.kinetic[(0, 0)] + tables.nuclear[(0, 0)];

        let m = 400_000;
        let rmax = 30.0;
        let h = rmax / m as f64;
        let mut t = 0.0;
        let mut v = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) * h;
            let p = phi(&basis, 0, [0.0, 0.0, r]);
            let dp = grad_phi(&basis, 0, [0.0, 0.0, r])[2];
            t += 0.5 * dp * dp * r * r;
            v -= p * p * r; // (1/r)·r² = r
        }
        let four_pi = 4.0 * std::f64::consts::PI;
        let e_grid = four_pi * h * (t + v);
        assert_abs_diff_eq!(e_analytic, e_grid, epsilon = 1e-8);
        // STO-3G hydrogen atom ground-state energy.
        assert_abs_diff_eq!(e_analytic, -0.46658, epsilon = 1e-4);
    }

    #[test]
    fn eri_has_eightfold_symmetry() {
        let g = generate_random(3, 2.5, 11).unwrap();
        let basis = build_basis(&g);
        let t = compute_integrals(&basis).unwrap();
        let n = 3;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = t.eri.get(p, q, r, s);
                        assert_abs_diff_eq!(v, t.eri.get(q, p, r, s), epsilon = 1e-12);
                        assert_abs_diff_eq!(v, t.eri.get(p, q, s, r), epsilon = 1e-12);
                        assert_abs_diff_eq!(v, t.eri.get(r, s, p, q), epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn integrals_invariant_under_translation_and_rotation() {
        let g = generate_random(3, 2.5, 5).unwrap();
        let base = compute_integrals(&build_basis(&g)).unwrap();

        let shifted = Geometry {
            coords: g
                .coords
                .iter()
                .map(|r| [r[0] + 1.7, r[1] - 0.4, r[2] + 2.2])
                .collect(),
            ..g.clone()
        };
        let t2 = compute_integrals(&build_basis(&shifted)).unwrap();

        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let rotated = Geometry {
            coords: g
                .coords
                .iter()
                .map(|r| [c * r[0] - s * r[1], s * r[0] + c * r[1], r[2]])
                .collect(),
            ..g.clone()
        };
        let t3 = compute_integrals(&build_basis(&rotated)).unwrap();

        for t in [&t2, &t3] {
            assert!((&t.overlap - &base.overlap).amax() < 1e-12);
            assert!((&t.kinetic - &base.kinetic).amax() < 1e-12);
            assert!((&t.nuclear - &base.nuclear).amax() < 1e-12);
            assert_abs_diff_eq!(t.e_nn, base.e_nn, epsilon = 1e-12);
            for p in 0..3 {
                for q in 0..3 {
                    for r in 0..3 {
                        for s in 0..3 {
                            assert_abs_diff_eq!(
                                t.eri.get(p, q, r, s),
                                base.eri.get(p, q, r, s),
                                epsilon = 1e-12
                            );
                        }
                    }
                }
            }
        }
    }
}
