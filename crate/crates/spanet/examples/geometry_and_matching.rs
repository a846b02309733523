//! Geometry generation (random cube / linear chain / ring) and the
//! minimum-weight perfect matching that fixes the pair structure.
//!
//!     cargo run --release --example geometry_and_matching

use spanet::geom::{generate_linear, generate_random, generate_ring, SweepSchedule};
use spanet::matching::best_matching;

fn main() -> spanet::Result<()> {
    let random = generate_random(6, 2.5, 42)?;
    println!("random H6 (seed 42, 2.5 Å cube):");
    for (i, c) in random.coords.iter().enumerate() {
        println!("  H{i}: [{:+.4}, {:+.4}, {:+.4}] Å", c[0], c[1], c[2]);
    }
    println!("  min pair distance: {:.4} Å (> 0.5 by construction)", random.min_distance().unwrap());
    let m = best_matching(&random)?;
    println!("  matching {:?}, total weight {:.4} Å", m.pairs, m.total_weight);

    let sched = SweepSchedule::new(4, 36, 0.5, 4.0)?;
    let linear = generate_linear(&sched, 10)?;
    println!("\nlinear H4, sweep point 10 (spacing {:.4} Å):", sched.step_at(10)?);
    println!("  matching {:?}", best_matching(&linear)?.pairs);

    let ring = generate_ring(&sched, 10)?;
    println!("ring H4, same spacing (chord law radius {:.4} Å):", {
        let c = &ring.coords[0];
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    });
    println!("  matching {:?} (adjacent pairs on the ring)", best_matching(&ring)?.pairs);
    Ok(())
}
