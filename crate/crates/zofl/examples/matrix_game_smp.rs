// Stochastic mirror prox on a 2x2 matrix game, with the exact operator and
// with two-point gradient-free estimates.

use zofl::estimators::{Feedback, SmoothingConfig};
use zofl::fedsim::{
    run_minibatch_smp, run_single_machine_smp, smp_error_bound, FedTopology, RunOptions, SaddleOperator, SmpMode, SmpParams, SplitGeometry,
};
use zofl::problems::{make_bilinear_game, Matrix, NoiseModel};
use zofl::vecspace::{DenseVector, Lp};

pub fn run_example() -> zofl::Result<()> {
    let game = make_bilinear_game(Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])?);
    let z0 = DenseVector::new(vec![1.0, 0.0, 1.0, 0.0])?;
    let noise = NoiseModel::none();

    let t = FedTopology::new(1, 1, 1000)?;
    let exact = run_minibatch_smp(
        &game,
        t,
        &SaddleOperator::Exact,
        &noise,
        &z0,
        &SplitGeometry::euclidean(&game),
        &SmpParams::new(0.0, 1.0),
        &RunOptions::new(0),
    )?;
    println!(
        "exact operator, N = 1000: gap {:.2e}, bound {:.2e}",
        exact.gap.unwrap_or(f64::NAN),
        smp_error_bound(SmpMode::Minibatch, game.l, 0.0, game.v, 1.0, t)
    );

    let cfg = SmoothingConfig::new(Lp::L2, Feedback::TwoPoint, 0.005)?;
    let op = SaddleOperator::Estimated { cfg_x: cfg, cfg_y: cfg };
    let sigma = 2.8;
    let t = FedTopology::new(1, 100, 100)?;
    let est = run_single_machine_smp(
        &game,
        t,
        &op,
        &noise,
        &z0,
        &SplitGeometry::euclidean(&game),
        &SmpParams::new(sigma, 1.0),
        &RunOptions::new(5),
    )?;
    println!(
        "two-point estimates, KN = 10^4: gap {:.3e}, bound {:.3e}, {} calls",
        est.gap.unwrap_or(f64::NAN),
        smp_error_bound(SmpMode::SingleMachine, game.l, sigma, game.v, 1.0, t),
        est.calls
    );

    let entropy = run_minibatch_smp(
        &game,
        FedTopology::new(1, 1, 300)?,
        &SaddleOperator::Exact,
        &noise,
        &DenseVector::new(vec![0.9, 0.1, 0.8, 0.2])?,
        &SplitGeometry::entropy(&game)?,
        &SmpParams::new(0.0, 1.0),
        &RunOptions::new(0),
    )?;
    println!("entropy prox, N = 300: gap {:.2e}", entropy.gap.unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() -> zofl::Result<()> {
    run_example()
}
