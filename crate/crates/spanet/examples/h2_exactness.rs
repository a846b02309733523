//! The one-pair sanity check: for H2 the pair ansatz together with orbital
//! optimization reproduces the exact (full-CI) minimal-basis energy.
//!
//!     cargo run --release --example h2_exactness

use spanet::geom::{Geometry, GeometryKind};
use spanet::pipeline::{label_instance, LabelConfig};

fn main() -> spanet::Result<()> {
    let geom = Geometry {
        coords: vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.7414]],
        kind: GeometryKind::Linear,
        seed: None,
        step: Some(0.7414),
    };

    let without = label_instance(&geom, 0, &LabelConfig { orbital_opt: false, ..Default::default() })?;
    let with = label_instance(&geom, 0, &LabelConfig::default())?;
    let e_fci = with.e_fci_hartree.expect("4-qubit FCI always stored");

    println!("H2 at 0.7414 Å (equilibrium):");
    println!("  E_SPA, frozen Löwdin orbitals : {:+.9} Eh", without.e_spa_hartree);
    println!("  E_SPA, optimized orbitals     : {:+.9} Eh", with.e_spa_hartree);
    println!("  E_FCI (dense diagonalization) : {:+.9} Eh", e_fci);
    println!("  gap |E_SPA − E_FCI|           : {:.3e} Eh", (with.e_spa_hartree - e_fci).abs());
    println!("  optimized angle θ             : {:+.6} rad", with.theta[0]);
    println!("  orbital rotation κ01          : {:+.6} (π/4 = Löwdin → bonding)", with.kappa[0][1]);
    Ok(())
}
