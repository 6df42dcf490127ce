//! Trains the two-layer classifier on a small separable problem, checks the
//! analytic gradient against finite differences and prints the loss curve.
//!
//! cargo run --release --example train_classifier

use acorn::mlp::{train, MlpModel, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> acorn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let centers = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
    let labels: Vec<usize> = (0..600).map(|i| i % 3).collect();
    let x = Array2::from_shape_fn((600, 3), |(i, j)| centers[labels[i]][j] + rng.gen_range(-0.5..0.5));
    let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];

    let cfg = TrainConfig {
        hidden: 16,
        learning_rate: 0.01,
        batch_size: 32,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&x, &labels, names.clone(), &cfg)?;
    for (e, loss) in out.epoch_losses.iter().enumerate() {
        println!("epoch {} loss {loss:.4}", e + 1);
    }
    let correct = x
        .rows()
        .into_iter()
        .zip(&labels)
        .filter(|(row, &y)| out.model.predict(*row).map(|(p, _)| p == y).unwrap_or(false))
        .count();
    println!("training accuracy {:.1}%", 100.0 * correct as f64 / 600.0);

    // central differences on one weight
    let model = MlpModel::init(3, 4, names, 9);
    let batch = x.slice(ndarray::s![..8, ..]);
    let (_, grads) = model.loss_and_gradients(batch, &labels[..8])?;
    let h = 1e-4;
    let mut plus = model.clone();
    plus.w1[[1, 2]] += h;
    let mut minus = model.clone();
    minus.w1[[1, 2]] -= h;
    let numeric = (plus.loss_and_gradients(batch, &labels[..8])?.0 - minus.loss_and_gradients(batch, &labels[..8])?.0) / (2.0 * h);
    println!("d loss / d w1[1,2]: analytic {:.8} numeric {numeric:.8}", grads.w1[[1, 2]]);
    Ok(())
}
