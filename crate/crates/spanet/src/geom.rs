//! Hydrogen geometry generators: random growth with minimum separation,
//! linear chains along z, and rings in the xy-plane.
//!
//! All coordinates are in Ångström. Generators are pure functions of their
//! arguments; the random generator derives one PRNG stream per atom from the
//! instance seed so results are identical across platforms and call patterns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard lower bound on pairwise distances for randomly grown geometries (Å).
pub const MIN_SEPARATION: f64 = 0.5;

/// Consecutive rejections tolerated per atom before giving up.
const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Random,
    Linear,
    Ring,
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeometryKind::Random => write!(f, "random"),
            GeometryKind::Linear => write!(f, "linear"),
            GeometryKind::Ring => write!(f, "ring"),
        }
    }
}

/// An ordered set of hydrogen atom positions with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub coords: Vec<[f64; 3]>,
    pub kind: GeometryKind,
    /// Instance seed (random kind only).
    pub seed: Option<u64>,
    /// Spacing parameter in Å (linear/ring kinds only).
    pub step: Option<f64>,
}

impl Geometry {
    pub fn n_atoms(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.coords[i];
        let b = self.coords[j];
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Smallest pairwise distance; `None` for fewer than two atoms.
    pub fn min_distance(&self) -> Option<f64> {
        let n = self.n_atoms();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.distance(i, j));
            }
        }
        Some(best)
    }
}

/// Parameters of a structured (linear/ring) sweep: `T` spacing values on
/// `[d_min, d_max]`, indexed by `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub n_atoms: usize,
    /// Number of sweep points `T` (≥ 2).
    pub points: usize,
    pub d_min: f64,
    pub d_max: f64,
}

impl SweepSchedule {
    pub fn new(n_atoms: usize, points: usize, d_min: f64, d_max: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("sweep needs at least 2 points"));
        }
        if !(d_min < d_max) || !d_min.is_finite() || !d_max.is_finite() {
            return Err(Error::invalid("sweep requires finite d_min < d_max"));
        }
        Ok(SweepSchedule { n_atoms, points, d_min, d_max })
    }

    /// Spacing d_step = d_min + (d_max − d_min) · k/(T−1).
    pub fn step_at(&self, k: usize) -> Result<f64> {
        if k >= self.points {
            return Err(Error::invalid(format!(
                "sweep index {k} out of range 0..{}",
                self.points
            )));
        }
        Ok(self.d_min + (self.d_max - self.d_min) * k as f64 / (self.points - 1) as f64)
    }
}

/// Grow `n` atoms starting from the origin. Each new atom is displaced from a
/// uniformly chosen existing atom by `d_max · u` with `u ~ U([0,1]^3)`,
/// resampled until its distance to every existing atom exceeds 0.5 Å.
///
/// Atom `i` consumes PRNG stream `i` of a ChaCha8 generator seeded with
/// `seed`: the first draw selects the reference atom, subsequent draws are
/// candidate displacements.
pub fn generate_random(n: usize, d_max: f64, seed: u64) -> Result<Geometry> {
    if n < 1 {
        return Err(Error::invalid("need at least one atom"));
    }
    if n >= 2 && d_max <= MIN_SEPARATION {
        return Err(Error::invalid(format!(
            "d_max = {d_max} must exceed the minimum separation {MIN_SEPARATION}"
        )));
    }
    let mut coords: Vec<[f64; 3]> = vec![[0.0, 0.0, 0.0]];
    for i in 1..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let reference = coords[rng.gen_range(0..coords.len())];
        let mut rejections = 0u64;
        loop {
            let u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let candidate = [
                reference[0] + d_max * u[0],
                reference[1] + d_max * u[1],
                reference[2] + d_max * u[2],
            ];
            let min_dist = coords
                .iter()
                .map(|r| {
                    ((candidate[0] - r[0]).powi(2)
                        + (candidate[1] - r[1]).powi(2)
                        + (candidate[2] - r[2]).powi(2))
                    .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if min_dist > MIN_SEPARATION {
                coords.push(candidate);
                break;
            }
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::GenerationFailed(format!(
                    "atom {i}: {MAX_REJECTIONS} rejected candidates; d_max = {d_max} \
                     leaves too little room above the {MIN_SEPARATION} Å separation"
                )));
            }
        }
    }
    Ok(Geometry { coords, kind: GeometryKind::Random, seed: Some(seed), step: None })
}

/// Chain along z: atom i at (0, 0, i·d_step) for sweep point `k`.
pub fn generate_linear(sched: &SweepSchedule, k: usize) -> Result<Geometry> {
    if sched.n_atoms < 1 {
        return Err(Error::invalid("need at least one atom"));
    }
    let step = sched.step_at(k)?;
    let coords = (0..sched.n_atoms).map(|i| [0.0, 0.0, i as f64 * step]).collect();
    Ok(Geometry { coords, kind: GeometryKind::Linear, seed: None, step: Some(step) })
}

/// Ring in the z = 0 plane with adjacent-atom spacing d_step: radius
/// r = d_step / (2 sin(π/n)), atom i at angle 2πi/n.
pub fn generate_ring(sched: &SweepSchedule, k: usize) -> Result<Geometry> {
    let n = sched.n_atoms;
    if n < 3 {
        return Err(Error::invalid("a ring needs at least 3 atoms"));
    }
    let step = sched.step_at(k)?;
    let r = step / (2.0 * (std::f64::consts::PI / n as f64).sin());
    let coords = (0..n)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [r * phi.cos(), r * phi.sin(), 0.0]
        })
        .collect();
    Ok(Geometry { coords, kind: GeometryKind::Ring, seed: None, step: Some(step) })
}
