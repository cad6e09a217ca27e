//! Results must not depend on the number of worker threads.

use mcc::engine::{mcc_matrix, AnalysisConfig};
use mcc::model::{FeatureMatrix, ResponseVector};
use mcc::oracle::monte_carlo_matrix;
use mcc::sim::{type1_experiment, ScenarioId, ScenarioSpec};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn data() -> (FeatureMatrix<f64>, ResponseVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let values = Array2::from_shape_simple_fn((40, 30), || Exp1.sample(&mut rng));
    let y = (0..30).map(|_| Exp1.sample(&mut rng)).collect();
    (FeatureMatrix::new(values, (0..40).map(|i| format!("g{i}")).collect()).unwrap(), ResponseVector::new(y).unwrap())
}

#[test]
fn engine_is_bit_identical_across_pools() {
    let (x, y) = data();
    let cfg = AnalysisConfig::default();
    let one = in_pool(1, || mcc_matrix(&x, &y, &cfg).unwrap());
    let four = in_pool(4, || mcc_matrix(&x, &y, &cfg).unwrap());
    assert_eq!(one, four);
}

#[test]
fn oracle_is_bit_identical_across_pools() {
    let (x, y) = data();
    let one = in_pool(1, || monte_carlo_matrix(&x, &y, 10_000, 5).unwrap());
    let three = in_pool(3, || monte_carlo_matrix(&x, &y, 10_000, 5).unwrap());
    assert_eq!(one, three);
}

#[test]
fn simulation_is_bit_identical_across_pools() {
    let spec = ScenarioSpec::null(ScenarioId::V, 200, 6);
    let one = in_pool(1, || type1_experiment(&spec, 200, &[0.05]).unwrap());
    let two = in_pool(2, || type1_experiment(&spec, 200, &[0.05]).unwrap());
    assert_eq!(one, two);
}
