// The four gradient-free estimators on a linear function. Averaged over
// many directions each recovers the true gradient `c`.

use zofl::estimators::{batch_grad, Feedback, SmoothingConfig};
use zofl::problems::{NoiseModel, StochasticProblem, ZerothOrderOracle};
use zofl::vecspace::{DenseVector, FeasibleSet, Lp, Norm, RngStream, StreamId};

pub fn run_example() -> zofl::Result<()> {
    let c = DenseVector::new(vec![1.0, -2.0, 0.5, 0.0, 3.0])?;
    let f = StochasticProblem::linear(c.clone(), FeasibleSet::Unconstrained);
    let noise = NoiseModel::none();
    let x = DenseVector::zeros(5);

    for scheme in [Lp::L1, Lp::L2] {
        for feedback in [Feedback::TwoPoint, Feedback::OnePoint] {
            let cfg = SmoothingConfig::new(scheme, feedback, 0.05)?;
            let mut oracle = ZerothOrderOracle::new(&f, &noise, RngStream::from_seed(1));
            let mut rng = RngStream::new(9, StreamId::new(0, 0, 0));
            let g = batch_grad(&mut oracle, &x, &cfg, 20_000, &mut rng)?;
            println!("{scheme:?} {feedback:?}: calls = {:>5}, |mean - c| = {:.3}", g.calls, g.g.distance(&c, Norm::L2));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
