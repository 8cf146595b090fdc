//! Exact exponential tilt on a discrete return distribution: how the
//! inverse temperature shifts mass toward high returns, and the
//! analytic crossover for a two-atom distribution.
//!
//!     cargo run --example explicit_tilt

use irvs_lab::rvs_explicit::{select_from_probs, tilt_distribution};

fn main() -> anyhow::Result<()> {
    let atoms = [-1.0, -0.25, 0.5, 1.0];
    let p = [0.25; 4];
    println!("uniform over atoms {atoms:?}:");
    for eta_inv in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let q = tilt_distribution(&p, &atoms, eta_inv)?;
        let eq: f64 = q.iter().zip(&atoms).map(|(qi, gi)| qi * gi).sum();
        println!(
            "  eta_inv {:>4}: q = [{:.4} {:.4} {:.4} {:.4}]  E_q[G] = {:+.4}",
            eta_inv, q[0], q[1], q[2], q[3], eq
        );
    }

    // p = 0.7 at G=0, 0.3 at G=1: the tilted argmax flips at
    // eta_inv = ln(7/3) ~= 0.8473
    let atoms = [0.0, 1.0];
    let p = [0.7, 0.3];
    println!("\ntwo-atom crossover (analytic ln(7/3) = {:.4}):", (7.0f64 / 3.0).ln());
    for eta_inv in [0.5, 0.8, 0.85, 1.0] {
        let g = select_from_probs(&p, &atoms, eta_inv);
        println!("  eta_inv {eta_inv:>4}: selected G = {g}");
    }
    Ok(())
}
