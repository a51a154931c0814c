//! Benchmark fixtures shared by the criterion benches.

use fried_core::audit::BlackBoxModel;
use fried_core::data::SynthBiasSpec;
use fried_core::numkit::{Activation, Matrix, MlpParams, Rng};
use fried_core::Dataset;

/// Random `rows × cols` standard-normal matrix.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// ReLU network with the given layer widths.
pub fn network(dims: &[usize], seed: u64) -> MlpParams {
    MlpParams::init(dims, Activation::Relu, Activation::Identity, &mut Rng::new(seed)).expect("valid widths")
}

pub fn synth(n: usize) -> Dataset {
    SynthBiasSpec {
        n,
        ..SynthBiasSpec::default()
    }
    .generate()
    .expect("valid spec")
}

/// Smooth predictor with pairwise interactions over `d` inputs.
pub fn interaction_predictor(d: usize) -> BlackBoxModel {
    let names = (0..d).map(|i| format!("f{i}")).collect();
    BlackBoxModel::new(names, |x| {
        Ok((0..x.rows())
            .map(|r| {
                let v = x.row(r);
                v.iter().sum::<f64>().tanh() + v.windows(2).map(|w| w[0] * w[1]).sum::<f64>()
            })
            .collect())
    })
}
