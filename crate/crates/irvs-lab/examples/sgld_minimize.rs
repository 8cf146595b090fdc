//! Run Langevin chains on an analytic bowl and watch the schedule
//! anneal them onto the minimum.
//!
//!     cargo run --example sgld_minimize

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irvs_lab::langevin::{sgld_chain, LangevinSchedule, SampleBounds, TracePoint};

fn main() -> anyhow::Result<()> {
    // E(a, G) = (a - 0.3)^2 + (G - 0.1)^2, minimized at (0.3, 0.1)
    let bowl = |a: &[f64], g: f64| {
        let da = a[0] - 0.3;
        let dg = g - 0.1;
        Ok((da * da + dg * dg, vec![2.0 * da], 2.0 * dg))
    };
    let bounds = SampleBounds {
        action: vec![(-1.0, 1.0)],
        ret: (-1.0, 1.0),
    };

    let sched = LangevinSchedule::default().without_noise();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut trace: Vec<TracePoint> = Vec::new();
    let result = sgld_chain(&bowl, &sched, &bounds, &mut rng, Some(&mut trace))?;

    println!("noise-free chain, default polynomial schedule:");
    for p in trace.iter().step_by(10) {
        println!(
            "  iter {:>3}  a = {:+.4}  G = {:+.4}  E = {:.6}",
            p.iter, p.action[0], p.ret, p.value
        );
    }
    println!(
        "final: a = {:+.6}, G = {:+.6} (target 0.3, 0.1)\n",
        result.action[0], result.ret
    );

    // with noise the chain explores before the decaying step pins it
    let sched = LangevinSchedule::default();
    let mut hits = 0;
    let n = 100;
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let r = sgld_chain(&bowl, &sched, &bounds, &mut rng, None)?;
        if (r.action[0] - 0.3).abs() < 0.05 && (r.ret - 0.1).abs() < 0.05 {
            hits += 1;
        }
    }
    println!("noisy chains within 0.05 of the minimum: {hits}/{n}");
    Ok(())
}
