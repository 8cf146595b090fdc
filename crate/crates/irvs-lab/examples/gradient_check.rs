//! Check the hand-rolled reverse-mode gradients against central
//! finite differences on a random network.
//!
//!     cargo run --example gradient_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irvs_lab::ndmath::{Activation, MlpParams};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let p = MlpParams::new(&[4, 16, 16, 1], Activation::Relu, false, &mut rng)?;
    let input = [0.3, -0.7, 0.2, 0.9];

    let grads = p.backward(&input)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;

    for (k, layer) in p.layers.iter().enumerate() {
        for idx in 0..layer.weight.data().len() {
            let mut plus = p.clone();
            plus.layers[k].weight.data_mut()[idx] += h;
            let mut minus = p.clone();
            minus.layers[k].weight.data_mut()[idx] -= h;
            let fd = (plus.forward(&input)? - minus.forward(&input)?) / (2.0 * h);
            let g = grads.d_params.weights[k].data()[idx];
            let denom = g.abs().max(fd.abs()).max(1e-8);
            worst = worst.max((g - fd).abs() / denom);
            checked += 1;
        }
    }
    println!("checked {checked} weight entries, worst relative error {worst:.3e}");

    // input gradient too (the Langevin sampler's hot path)
    let (value, ig) = p.value_and_input_grad(&input)?;
    println!("f(x) = {value:.6}");
    for i in 0..input.len() {
        let mut xp = input;
        xp[i] += h;
        let mut xm = input;
        xm[i] -= h;
        let fd = (p.forward(&xp)? - p.forward(&xm)?) / (2.0 * h);
        println!("  d/dx[{i}] = {:+.6}  (fd {:+.6})", ig[i], fd);
    }
    Ok(())
}
