//! Generate a didactic-room dataset, inspect the normalizer, and
//! round-trip both the dataset file and a network checkpoint.
//!
//!     cargo run --example dataset_roundtrip

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irvs_lab::dataset::{self, generate_didactic};
use irvs_lab::envs::DidacticRoom;
use irvs_lab::ndmath::{load_mlp, save_mlp, Activation, MlpParams};

fn main() -> anyhow::Result<()> {
    let room = DidacticRoom::default();
    let data = generate_didactic(&room, 200, 0)?;
    println!(
        "{} transitions from 200 episodes, state_dim {}, action_dim {}",
        data.transitions.len(),
        data.state_dim(),
        data.action_dim()
    );
    let n = &data.normalizer;
    println!(
        "normalizer: state mean {:?}, return range [{:.4}, {:.4}]",
        n.state_mean, n.return_min, n.return_max
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("didactic.txt");
    dataset::save(&data, &path)?;
    let back = dataset::load(&path)?;
    assert_eq!(back.transitions.len(), data.transitions.len());
    assert_eq!(back.transitions[0].state, data.transitions[0].state);
    println!("dataset round-trip exact ({} bytes)", std::fs::metadata(&path)?.len());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = MlpParams::new(&[4, 8, 1], Activation::Relu, true, &mut rng)?;
    let ckpt = dir.path().join("net.ckpt");
    save_mlp(&net, "energy", &ckpt)?;
    let (net2, role) = load_mlp(&ckpt)?;
    assert_eq!(role, "energy");
    assert_eq!(net2.layers[0].weight.data(), net.layers[0].weight.data());
    println!("checkpoint round-trip exact (role '{role}')");
    Ok(())
}
