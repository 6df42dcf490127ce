//! Fits one reconstruction-error detector per class and shows how the
//! threshold multiplier trades acceptance of in-class samples against
//! rejection of off-subspace ones.
//!
//! cargo run --release --example subspace_detectors

use acorn::detect::{Decision, DetectorBank, NaiveDetector, DEFAULT_ALPHA_GRID, DEFAULT_ENERGY};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 40;

/// Spanning rows of a random `rank`-dimensional subspace.
fn subspace(rng: &mut ChaCha8Rng, rank: usize) -> Array2<f64> {
    Array2::from_shape_fn((rank, DIM), |_| rng.gen_range(-1.0..1.0))
}

/// `n` noisy samples from the span of `basis`.
fn sample(rng: &mut ChaCha8Rng, basis: &Array2<f64>, n: usize) -> Array2<f64> {
    let coeffs = Array2::from_shape_fn((n, basis.nrows()), |_| rng.gen_range(-3.0..3.0));
    let noise = Array2::from_shape_fn((n, DIM), |_| rng.gen_range(-0.05..0.05));
    coeffs.dot(basis) + noise
}

fn main() -> acorn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (sa, sb, sc) = (subspace(&mut rng, 3), subspace(&mut rng, 5), subspace(&mut rng, 4));
    let a = sample(&mut rng, &sa, 200);
    let b = sample(&mut rng, &sb, 200);
    let bank = DetectorBank::fit(&[a.clone(), b.clone()], DEFAULT_ENERGY)?;
    let pooled = ndarray::concatenate![ndarray::Axis(0), a, b];
    let naive = NaiveDetector::fit(&pooled, DEFAULT_ENERGY)?;
    for (w, d) in bank.detectors.iter().enumerate() {
        let cal = d.calibration.expect("calibrated");
        println!("class {w}: rank {:>2}, error mean {:.4} std {:.4}", d.rank(), cal.mean, cal.std);
    }
    println!("pooled: rank {:>2}", naive.inner.rank());

    // fresh in-class samples and samples from a third, unseen subspace
    let a_test = sample(&mut rng, &sa, 100);
    let c_test = sample(&mut rng, &sc, 100);
    for alpha in DEFAULT_ALPHA_GRID {
        let accepted = a_test
            .rows()
            .into_iter()
            .filter(|x| bank.decide(*x, 0, alpha).map(|d| d == Decision::Known(0)).unwrap_or(false))
            .count();
        let rejected = c_test
            .rows()
            .into_iter()
            .filter(|x| bank.decide(*x, 0, alpha).map(|d| d.is_unknown()).unwrap_or(false))
            .count();
        let naive_rejected = c_test
            .rows()
            .into_iter()
            .filter(|x| naive.decide(*x, 0, alpha).map(|d| d.is_unknown()).unwrap_or(false))
            .count();
        println!(
            "alpha {alpha:<3}: in-class accepted {accepted:>3}/100, unseen rejected {rejected:>3}/100 (pooled {naive_rejected:>3}/100)"
        );
    }
    let probe = Array1::from_elem(DIM, 1.0);
    println!("error of a constant probe under class 1: {:.3}", bank.error(probe.view(), 1)?);
    Ok(())
}
